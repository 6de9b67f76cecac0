//! End-to-end driver: model construction, the time loop and file output.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::time::{Duration, Instant};

use crate::adaptive::{self, AdaptiveOptions, ConvergenceCurve};
use crate::config::{Mode, SimulationConfig};
use crate::error::{Error, Result};
use crate::krylov::KrylovOptions;
use crate::model::TwoBathModel;
use crate::mps::Mps;
use crate::observables::{measure_all, ObservableSet};
use crate::tdvp::{sweep_second_order, SweepReport, TdvpOptions};

/// A running simulation that can be advanced one step at a time.
#[derive(Clone, Debug)]
pub struct Simulation {
    config: SimulationConfig,
    model: TwoBathModel,
    state: Mps,
    steps_done: usize,
    tdvp: TdvpOptions,
    adaptive: AdaptiveOptions,
}

/// What happened during one step.
#[derive(Clone, Debug)]
pub struct StepOutcome {
    pub sweep: SweepReport,
    /// Curves probed before the sweep (adaptive mode only).
    pub curves: Vec<ConvergenceCurve>,
    pub wall_time: Duration,
}

impl Simulation {
    pub fn new(config: &SimulationConfig) -> Result<Self> {
        config.validate()?;
        let model = TwoBathModel::build(&config.model)?;
        let mut state = model.initial_state()?;
        if config.mode == Mode::Fixed {
            state = adaptive::embed(&state, config.d_max.expect("validated"))?;
        }
        Ok(Self {
            config: config.clone(),
            model,
            state,
            steps_done: 0,
            tdvp: TdvpOptions {
                krylov: KrylovOptions {
                    tol: config.krylov_tol,
                    max_dim: config.krylov_max_dim,
                },
            },
            adaptive: AdaptiveOptions {
                precision: config.precision,
                d_lim: config.d_lim,
                trial_margin: config.trial_margin,
            },
        })
    }

    pub fn config(&self) -> &SimulationConfig {
        &self.config
    }

    pub fn model(&self) -> &TwoBathModel {
        &self.model
    }

    pub fn state(&self) -> &Mps {
        &self.state
    }

    pub fn steps_done(&self) -> usize {
        self.steps_done
    }

    pub fn total_steps(&self) -> usize {
        self.config.steps()
    }

    pub fn is_finished(&self) -> bool {
        self.steps_done >= self.total_steps()
    }

    pub fn time(&self) -> f64 {
        self.steps_done as f64 * self.config.dt
    }

    /// `D_1, …, D_{N−1}`.
    pub fn bond_dims(&self) -> Vec<usize> {
        self.state.internal_bond_dims()
    }

    pub fn observables(&self) -> Result<ObservableSet> {
        measure_all(&self.state, &self.model.mpo, &self.model.layout, self.time())
    }

    /// Bond update (adaptive mode) followed by one second-order sweep.
    pub fn step(&mut self) -> Result<StepOutcome> {
        let started = Instant::now();
        let step = self.steps_done;
        let wrap = |e: Error| Error::AtStep {
            step: step + 1,
            source: Box::new(e),
        };
        let mut curves = Vec::new();
        let mut state = self.state.clone();
        if self.config.mode == Mode::Adaptive {
            let (expanded, plan) =
                adaptive::bond_update_step(&state, &self.model.mpo, &self.adaptive).map_err(wrap)?;
            state = expanded;
            curves = plan.curves;
        }
        let (state, sweep) =
            sweep_second_order(state, &self.model.mpo, self.config.dt, &self.tdvp).map_err(wrap)?;
        self.state = state;
        self.steps_done += 1;
        Ok(StepOutcome {
            sweep,
            curves,
            wall_time: started.elapsed(),
        })
    }
}

/// In-memory result of a complete run.
#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub records: Vec<ObservableSet>,
    /// `(t, D_1 … D_{N−1})` at every recorded time.
    pub bonds: Vec<(f64, Vec<usize>)>,
    /// `(t, bond, D̃, f)` rows when curve output is enabled.
    pub fcurves: Vec<(f64, usize, usize, f64)>,
    pub step_times: Vec<Duration>,
    pub wall_time: Duration,
}

impl Trajectory {
    pub fn timeseries_csv(&self) -> String {
        let mut s = String::from(ObservableSet::CSV_HEADER);
        s.push('\n');
        for r in &self.records {
            s.push_str(&r.csv_row());
            s.push('\n');
        }
        s
    }

    pub fn bonds_csv(&self) -> String {
        let mut s = String::from("t");
        let n = self.bonds.first().map_or(0, |b| b.1.len());
        for b in 1..=n {
            let _ = write!(s, ",D_{b}");
        }
        s.push('\n');
        for (t, dims) in &self.bonds {
            let _ = write!(s, "{t}");
            for d in dims {
                let _ = write!(s, ",{d}");
            }
            s.push('\n');
        }
        s
    }

    pub fn fcurves_csv(&self) -> String {
        let mut s = String::from("t,bond,D,f\n");
        for (t, b, d, f) in &self.fcurves {
            let _ = writeln!(s, "{t},{b},{d},{f:e}");
        }
        s
    }
}

/// Runs a simulation to `t_max` without touching the file system.
///
/// On failure the partial trajectory is returned alongside the error.
pub fn run(config: &SimulationConfig) -> std::result::Result<(Simulation, Trajectory), (Error, Trajectory)> {
    let started = Instant::now();
    let mut traj = Trajectory::default();
    let mut sim = match Simulation::new(config) {
        Ok(s) => s,
        Err(e) => return Err((e, traj)),
    };
    let record = |sim: &Simulation, traj: &mut Trajectory| -> Result<()> {
        traj.records.push(sim.observables()?);
        traj.bonds.push((sim.time(), sim.bond_dims()));
        Ok(())
    };
    if let Err(e) = record(&sim, &mut traj) {
        return Err((e, traj));
    }
    let total = sim.total_steps();
    while !sim.is_finished() {
        let t_before = sim.time();
        let outcome = match sim.step() {
            Ok(o) => o,
            Err(e) => {
                traj.wall_time = started.elapsed();
                return Err((e, traj));
            }
        };
        traj.step_times.push(outcome.wall_time);
        if config.write_fcurves {
            for (b, d, f) in adaptive::fcurves_rows(&outcome.curves) {
                traj.fcurves.push((t_before, b, d, f));
            }
        }
        let k = sim.steps_done();
        if k % config.output_every == 0 || k == total {
            if let Err(e) = record(&sim, &mut traj) {
                return Err((e, traj));
            }
        }
    }
    traj.wall_time = started.elapsed();
    Ok((sim, traj))
}

/// Summary written at the end of a run.
#[derive(Clone, Debug)]
pub struct RunManifest {
    pub config: SimulationConfig,
    pub version: &'static str,
    pub steps: usize,
    pub wall_time: Duration,
    pub step_times: Vec<Duration>,
    pub final_bond_dims: Vec<usize>,
    pub error: Option<String>,
}

impl RunManifest {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# run manifest; energies in units of omega_c, times in 1/omega_c");
        let _ = writeln!(s, "version={}", self.version);
        s.push_str(&self.config.to_text());
        let _ = writeln!(s, "steps={}", self.steps);
        let _ = writeln!(s, "wall_time_s={:.6}", self.wall_time.as_secs_f64());
        let per: Vec<String> = self
            .step_times
            .iter()
            .map(|d| format!("{:.6}", d.as_secs_f64()))
            .collect();
        let _ = writeln!(s, "step_times_s={}", per.join(","));
        let dims: Vec<String> = self.final_bond_dims.iter().map(|d| d.to_string()).collect();
        let _ = writeln!(s, "final_bond_dims={}", dims.join(","));
        let _ = writeln!(s, "status={}", if self.error.is_some() { "failed" } else { "ok" });
        if let Some(e) = &self.error {
            let _ = writeln!(s, "error={}", e.replace('\n', " "));
        }
        s
    }
}

fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let mut f = fs::File::create(dir.join(name))?;
    f.write_all(contents.as_bytes())?;
    Ok(())
}

/// Runs the configured simulation and writes `timeseries.csv`, `bonds.csv`,
/// `chain_coeffs.csv` and `manifest.txt` (plus `fcurves.csv` when enabled)
/// into the output directory. Outputs are flushed even when a step fails.
pub fn run_simulation(config: &SimulationConfig) -> Result<RunManifest> {
    let dir = config
        .output_dir
        .clone()
        .ok_or_else(|| Error::Config("output_dir: required to write results".into()))?;
    config.validate()?;
    fs::create_dir_all(&dir)?;
    let model = TwoBathModel::build(&config.model)?;
    write_file(&dir, "chain_coeffs.csv", &model.chain_csv())?;

    let (result, traj, final_dims) = match run(config) {
        Ok((sim, traj)) => (Ok(()), traj, sim.bond_dims()),
        Err((e, traj)) => {
            let dims = traj.bonds.last().map(|b| b.1.clone()).unwrap_or_default();
            (Err(e), traj, dims)
        }
    };
    write_file(&dir, "timeseries.csv", &traj.timeseries_csv())?;
    write_file(&dir, "bonds.csv", &traj.bonds_csv())?;
    if config.write_fcurves {
        write_file(&dir, "fcurves.csv", &traj.fcurves_csv())?;
    }
    let manifest = RunManifest {
        config: config.clone(),
        version: env!("CARGO_PKG_VERSION"),
        steps: traj.step_times.len(),
        wall_time: traj.wall_time,
        step_times: traj.step_times.clone(),
        final_bond_dims: final_dims,
        error: result.as_ref().err().map(|e| e.to_string()),
    };
    write_file(&dir, "manifest.txt", &manifest.to_text())?;
    result.map(|_| manifest)
}
