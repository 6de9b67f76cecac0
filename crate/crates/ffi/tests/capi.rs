use std::ffi::{CStr, CString};
use std::ptr;

use adaptive_tdvp_ffi::*;

const TINY: &str = "chain_len_a=2\nchain_len_b=2\nfock_dim=3\ndt=0.05\nt_max=0.2\nd_lim=4\n";

fn last_error() -> String {
    let p = atdvp_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn new_sim(text: &str) -> *mut AtdvpSimulation {
    let c = CString::new(text).unwrap();
    let mut sim = ptr::null_mut();
    let status = unsafe { atdvp_simulation_new(c.as_ptr(), &mut sim) };
    assert_eq!(status, AtdvpStatus::Ok);
    assert!(!sim.is_null());
    sim
}

#[test]
fn runs_to_completion() {
    let sim = new_sim(TINY);
    let mut obs = AtdvpObservables::default();
    assert_eq!(unsafe { atdvp_simulation_observables(sim, &mut obs) }, AtdvpStatus::Ok);
    assert_eq!(obs.sz, 1.0);
    assert!(atdvp_last_error_message().is_null());

    let mut done = 0usize;
    assert_eq!(unsafe { atdvp_simulation_step(sim, 100, &mut done) }, AtdvpStatus::Ok);
    assert_eq!(done, 4);
    let mut finished = false;
    assert_eq!(unsafe { atdvp_simulation_is_finished(sim, &mut finished) }, AtdvpStatus::Ok);
    assert!(finished);
    let mut t = 0.0;
    assert_eq!(unsafe { atdvp_simulation_time(sim, &mut t) }, AtdvpStatus::Ok);
    assert!((t - 0.2).abs() < 1e-12);

    assert_eq!(unsafe { atdvp_simulation_observables(sim, &mut obs) }, AtdvpStatus::Ok);
    assert!((obs.norm - 1.0).abs() < 1e-10);
    assert!(obs.sz < 1.0);
    unsafe { atdvp_simulation_free(sim) };
}

#[test]
fn bond_dims_query_then_copy() {
    let sim = new_sim(TINY);
    let mut len = 0usize;
    assert_eq!(
        unsafe { atdvp_simulation_bond_dims(sim, ptr::null_mut(), 0, &mut len) },
        AtdvpStatus::Ok
    );
    assert_eq!(len, 4);
    let mut small = [0usize; 2];
    assert_eq!(
        unsafe { atdvp_simulation_bond_dims(sim, small.as_mut_ptr(), small.len(), &mut len) },
        AtdvpStatus::BufferTooSmall
    );
    assert!(last_error().contains("need 4"));
    let mut buf = vec![0usize; len];
    assert_eq!(
        unsafe { atdvp_simulation_bond_dims(sim, buf.as_mut_ptr(), buf.len(), &mut len) },
        AtdvpStatus::Ok
    );
    assert_eq!(buf, vec![1, 1, 1, 1]);
    unsafe { atdvp_simulation_free(sim) };
}

#[test]
fn bad_config_sets_the_error_string() {
    let c = CString::new("dt=-0.1").unwrap();
    let mut sim = ptr::null_mut();
    let status = unsafe { atdvp_simulation_new(c.as_ptr(), &mut sim) };
    assert_eq!(status, AtdvpStatus::Config);
    assert!(sim.is_null());
    assert!(last_error().contains("dt"));

    let c = CString::new("bogus=1").unwrap();
    assert_eq!(unsafe { atdvp_simulation_new(c.as_ptr(), &mut sim) }, AtdvpStatus::Config);
    assert!(last_error().contains("bogus"));
}

#[test]
fn null_arguments_are_rejected() {
    let mut sim = ptr::null_mut();
    assert_eq!(
        unsafe { atdvp_simulation_new(ptr::null(), &mut sim) },
        AtdvpStatus::NullPointer
    );
    let c = CString::new(TINY).unwrap();
    assert_eq!(
        unsafe { atdvp_simulation_new(c.as_ptr(), ptr::null_mut()) },
        AtdvpStatus::NullPointer
    );
    assert_eq!(
        unsafe { atdvp_simulation_step(ptr::null_mut(), 1, ptr::null_mut()) },
        AtdvpStatus::NullPointer
    );
    let mut obs = AtdvpObservables::default();
    assert_eq!(
        unsafe { atdvp_simulation_observables(ptr::null(), &mut obs) },
        AtdvpStatus::NullPointer
    );
    assert!(last_error().contains("null"));
    unsafe { atdvp_simulation_free(ptr::null_mut()) };
}

#[test]
fn invalid_utf8_is_reported() {
    let bytes = [0x66u8, 0xff, 0x00];
    let mut sim = ptr::null_mut();
    let status = unsafe { atdvp_simulation_new(bytes.as_ptr().cast(), &mut sim) };
    assert_eq!(status, AtdvpStatus::InvalidUtf8);
}

#[test]
fn run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!("{TINY}output_dir={}\n", dir.path().display());
    let c = CString::new(text).unwrap();
    assert_eq!(unsafe { atdvp_run(c.as_ptr()) }, AtdvpStatus::Ok);
    for f in ["timeseries.csv", "bonds.csv", "chain_coeffs.csv", "manifest.txt"] {
        assert!(dir.path().join(f).exists(), "{f}");
    }
    let c = CString::new(TINY).unwrap();
    assert_eq!(unsafe { atdvp_run(c.as_ptr()) }, AtdvpStatus::Config);
    assert!(last_error().contains("output_dir"));
}

#[test]
fn version_and_header() {
    let v = unsafe { CStr::from_ptr(atdvp_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/adaptive_tdvp.h")).unwrap();
    for sym in [
        "atdvp_simulation_new",
        "atdvp_simulation_free",
        "atdvp_simulation_step",
        "atdvp_simulation_bond_dims",
        "atdvp_last_error_message",
        "ATDVP_STATUS_BUFFER_TOO_SMALL",
    ] {
        assert!(header.contains(sym), "{sym}");
    }
}

#[test]
fn header_compiles_as_c() {
    let Some(cc) = which_cc() else {
        eprintln!("no C compiler found, skipping");
        return;
    };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("probe.c");
    std::fs::write(
        &src,
        "#include \"adaptive_tdvp.h\"\nint main(void) { AtdvpSimulation *s = 0; atdvp_simulation_free(s); return 0; }\n",
    )
    .unwrap();
    let out = std::process::Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include"))
        .arg(&src)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn which_cc() -> Option<&'static str> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| std::process::Command::new(c).arg("--version").output().is_ok())
}
