//! One-site TDVP with per-bond adaptive bond dimensions, and a two-bath
//! spin-boson model to run it on.
//!
//! Conventions used throughout:
//!
//! * dense tensors are row-major;
//! * MPS sites are `[left, physical, right]`, MPO sites `[left, out, in, right]`;
//! * sites are numbered from 0 and bond `b` joins sites `b − 1` and `b`.

pub mod adaptive;
pub mod config;
pub mod error;
pub mod krylov;
pub mod model;
pub mod mpo;
pub mod mps;
pub mod observables;
pub mod ops;
pub mod oracle;
pub mod qr;
pub mod sim;
pub mod tdvp;
pub mod tensor;

pub use error::{Error, Result};
