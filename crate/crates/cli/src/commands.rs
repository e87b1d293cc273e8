use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use admm4dvar::admm::{self, AdmmParams, InitMode, IterationRecord, Schedule};
use admm4dvar::baselines::{self, BaselineConfig, BaselineMethod};
use admm4dvar::burgers::{
    BurgersFd, BurgersFdConfig, BurgersFem, BurgersFemConfig, BurgersSpectral, BurgersSpectralConfig,
};
use admm4dvar::fourdvar::{generate_observations, scan_landscape, AssimilationProblem, LandscapeBox, NormOperator, ObservationSet};
use admm4dvar::io::{read_states_csv, write_states_csv};
use admm4dvar::lorenz::{LorenzParams, Lorenz63};
use admm4dvar::numerics::{Grid2D, SorParams, StateVector};
use admm4dvar::verify;
use admm4dvar::vorticity::{Vorticity, VorticityConfig};
use admm4dvar::{rollout, CorruptedAdjoint, Error, Model};

use crate::config::{parse_list, RunConfig};
use crate::CliError;

pub const LORENZ_TRUTH: [f64; 3] = [-0.5, 0.5, 20.5];

/// A configured model with its true initial state and data norm.
pub struct Setup {
    pub model: Arc<dyn Model>,
    pub truth_u0: StateVector,
    pub norm: NormOperator,
    /// Spread of the random linearization points in `check-adjoint`.
    pub spread: f64,
}

pub fn build_model(cfg: &RunConfig) -> Result<Setup, CliError> {
    let dt = cfg.f64("dt")?;
    let (model, truth_u0, norm, spread): (Box<dyn Model>, StateVector, NormOperator, f64) = match cfg.model() {
        "lorenz" => (
            Box::new(Lorenz63::new(LorenzParams::with_dt(dt))?),
            LORENZ_TRUTH.to_vec(),
            NormOperator::Euclidean,
            5.0,
        ),
        "burgers-fd" => {
            let h = BurgersFd::new(BurgersFdConfig { m: cfg.usize("m")?, gamma: cfg.f64("gamma")?, dt })?;
            let u0 = h.initial_state();
            (Box::new(h), u0, NormOperator::Euclidean, 0.1)
        }
        "burgers-fem" => {
            let h = BurgersFem::new(BurgersFemConfig { m: cfg.usize("m")?, gamma: cfg.f64("gamma")?, dt })?;
            let u0 = h.initial_state()?;
            (Box::new(h), u0, NormOperator::Euclidean, 0.1)
        }
        "burgers-spectral" => {
            let h = BurgersSpectral::new(BurgersSpectralConfig { m: cfg.usize("m")?, gamma: cfg.f64("gamma")?, dt })?;
            let u0 = h.initial_state();
            (Box::new(h), u0, NormOperator::Euclidean, 0.1)
        }
        "vorticity2d" => {
            let dx = cfg.f64("dx")?;
            let grid = Grid2D::new(cfg.usize("m")?, dx, dx)?;
            let sor = SorParams { tol: cfg.f64("sor_tol")?, ..SorParams::for_grid(&grid) };
            let vc = VorticityConfig { grid, dt, kappa: cfg.f64("kappa")?, sor };
            let h = Vorticity::new(vc)?;
            let u0 = h.initial_state(cfg.u64("ic_seed")?);
            (Box::new(h), u0, NormOperator::Energy { grid, sor }, 1.0)
        }
        other => return Err(CliError::Usage(format!("unknown model `{other}`"))),
    };
    let model: Arc<dyn Model> = if cfg.bool("corrupt_adjoint")? {
        Arc::new(CorruptedAdjoint { inner: model })
    } else {
        Arc::from(model)
    };
    Ok(Setup { model, truth_u0, norm, spread })
}

fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}

fn write_file<F>(path: &Path, body: F) -> Result<(), CliError>
where
    F: FnOnce(&mut BufWriter<File>) -> std::io::Result<()>,
{
    let io_err = |e: std::io::Error| CliError::Io(format!("{}: {e}", path.display()));
    let mut out = BufWriter::new(File::create(path).map_err(io_err)?);
    body(&mut out).map_err(io_err)?;
    out.flush().map_err(io_err)
}

fn output_dir(cfg: &RunConfig) -> Result<PathBuf, CliError> {
    let dir = PathBuf::from(cfg.str("output_dir")?);
    create_dir(&dir)?;
    Ok(dir)
}

fn write_meta(dir: &Path, command: &str, cfg: &RunConfig, extra: &[(&str, String)]) -> Result<(), CliError> {
    write_file(&dir.join("meta.txt"), |out| {
        writeln!(out, "command = {command}")?;
        out.write_all(cfg.echo().as_bytes())?;
        for (k, v) in extra {
            writeln!(out, "{k} = {v}")?;
        }
        Ok(())
    })
}

struct Twin {
    obs: ObservationSet,
    truth: Option<Vec<StateVector>>,
}

fn twin(cfg: &RunConfig, setup: &Setup) -> Result<Twin, CliError> {
    let steps = cfg.steps_of("T")?;
    let q = cfg.steps_of("T_obs")?;
    let obs = generate_observations(setup.model.as_ref(), &setup.truth_u0, steps, q, cfg.f64("noise_std")?, cfg.u64("seed")?)?;
    let truth = rollout(setup.model.as_ref(), &setup.truth_u0, steps)?;
    Ok(Twin { obs, truth: Some(truth) })
}

fn read_states(path: &Path) -> Result<Vec<StateVector>, CliError> {
    let file = File::open(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    read_states_csv(BufReader::new(file)).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

fn write_twin(dir: &Path, t: &Twin) -> Result<(), CliError> {
    write_file(&dir.join("observations.csv"), |out| write_states_csv(out, &t.obs.observations))?;
    if let Some(truth) = &t.truth {
        write_file(&dir.join("truth_trajectory.csv"), |out| write_states_csv(out, truth))?;
    }
    Ok(())
}

pub fn generate_obs(cfg: &RunConfig) -> Result<(), CliError> {
    let setup = build_model(cfg)?;
    let t = twin(cfg, &setup)?;
    let dir = output_dir(cfg)?;
    write_twin(&dir, &t)?;
    write_meta(&dir, "generate-obs", cfg, &[])?;
    println!(
        "wrote {} observations of dimension {} to {}",
        t.obs.observations.len(),
        setup.model.dim(),
        dir.display()
    );
    Ok(())
}

fn parse_init(cfg: &RunConfig, dim: usize) -> Result<InitMode, CliError> {
    let raw = cfg.str("init")?;
    let bad = || CliError::Usage(format!("config key `init`: expected zeros, rollout:<u0> or file:<path>, got `{raw}`"));
    if raw == "zeros" {
        return Ok(InitMode::Zeros);
    }
    if let Some(list) = raw.strip_prefix("rollout:") {
        let u0 = parse_list(list).map_err(|_| bad())?;
        if u0.len() != dim {
            return Err(CliError::Usage(format!(
                "config key `init`: {} components given, model has {dim}",
                u0.len()
            )));
        }
        return Ok(InitMode::Rollout(u0));
    }
    if let Some(path) = raw.strip_prefix("file:") {
        let mut states = read_states(Path::new(path))?;
        return Ok(if states.len() == 1 { InitMode::Rollout(states.remove(0)) } else { InitMode::Given(states) });
    }
    Err(bad())
}

fn baseline_start(init: &InitMode, dim: usize) -> StateVector {
    match init {
        InitMode::Zeros => vec![0.0; dim],
        InitMode::Rollout(u0) => u0.clone(),
        InitMode::Given(traj) => traj[0].clone(),
    }
}

pub fn solve(cfg: &RunConfig) -> Result<(), CliError> {
    let setup = build_model(cfg)?;
    let dir = output_dir(cfg)?;
    let t = match cfg.optional("observations")? {
        Some(path) => {
            let observations = read_states(Path::new(path))?;
            let steps = cfg.steps_of("T")?;
            let q = cfg.steps_of("T_obs")?;
            if observations.len() != steps / q + 1 {
                return Err(CliError::Usage(format!(
                    "{path}: {} observations, the window needs {}",
                    observations.len(),
                    steps / q + 1
                )));
            }
            let obs = ObservationSet {
                background: observations[0].clone(),
                observations,
                q,
                t_obs: q as f64 * setup.model.dt(),
                noise_std: f64::NAN,
                seed: 0,
            };
            Twin { obs, truth: None }
        }
        None => {
            let t = twin(cfg, &setup)?;
            write_twin(&dir, &t)?;
            t
        }
    };
    let prob = AssimilationProblem::new(setup.model.clone(), t.obs, cfg.f64("alpha")?, cfg.f64("mu")?, setup.norm)?;
    let init = parse_init(cfg, setup.model.dim())?;
    let max_iters = cfg.usize("max_iters")?;
    let solver = cfg.str("solver")?;
    let started = Instant::now();

    if solver == "admm" {
        let schedule = match cfg.str("schedule")? {
            "jacobi" => Schedule::Jacobi,
            "gauss-seidel" => Schedule::GaussSeidel,
            other => return Err(CliError::Usage(format!("config key `schedule`: unknown schedule `{other}`"))),
        };
        let constraint_tol = cfg.optional("constraint_tol")?.map(|_| cfg.f64("constraint_tol")).transpose()?;
        let params = AdmmParams { s: cfg.f64("s")?, eta: cfg.f64("eta")?, max_outer: max_iters, constraint_tol, schedule };
        let mut history: Vec<IterationRecord> = Vec::new();
        let result = admm::solve_with(&prob, &params, &init, t.truth.as_deref(), |r| history.push(*r));
        write_file(&dir.join("history.csv"), |out| admm::write_history_csv(out, &history))?;
        let state = result?;
        write_file(&dir.join("recovered_trajectory.csv"), |out| write_states_csv(out, &state.primal))?;
        let last = history.last().copied();
        write_meta(&dir, "solve", cfg, &[("sweeps_run", state.outer_iter.to_string())])?;
        if let Some(r) = last {
            println!(
                "admm: {} sweeps in {:.2?}, constraint error {:.6e}, objective {:.6e}",
                r.iter,
                started.elapsed(),
                r.constraint_error,
                r.objective
            );
        }
        return Ok(());
    }

    let method = BaselineMethod::parse(solver).ok_or_else(|| {
        CliError::Usage(format!("config key `solver`: expected admm, gd, cg-fr or cg-pr, got `{solver}`"))
    })?;
    let bcfg = BaselineConfig {
        method,
        max_iters,
        initial_step: cfg.f64("initial_step")?,
        shrink: cfg.f64("shrink")?,
        c1: cfg.f64("c1")?,
        grad_tol: cfg.f64("grad_tol")?,
    };
    let u0 = baseline_start(&init, setup.model.dim());
    let (u_final, history, outcome) = match baselines::run_baseline(&u0, &prob, &bcfg) {
        Ok((u, h)) => (u, h, Ok(())),
        Err(Error::Stall { iteration, objective, last_iterate }) => {
            let msg = format!("line search stalled at iteration {iteration} (objective {objective:e})");
            (last_iterate, Vec::new(), Err(CliError::Stall(msg)))
        }
        Err(e) => return Err(e.into()),
    };
    write_file(&dir.join("history.csv"), |out| baselines::write_history_csv(out, &history))?;
    let recovered = rollout(setup.model.as_ref(), &u_final, prob.steps())?;
    write_file(&dir.join("recovered_trajectory.csv"), |out| write_states_csv(out, &recovered))?;
    let u0_text: Vec<String> = u_final.iter().map(|v| format!("{v:.16e}")).collect();
    write_meta(&dir, "solve", cfg, &[("final_u0", u0_text.join(","))])?;
    if let Some(r) = history.last() {
        println!(
            "{solver}: {} iterations in {:.2?}, objective {:.6e}, gradient norm {:.3e}",
            r.iter,
            started.elapsed(),
            r.objective,
            r.grad_norm
        );
    }
    outcome
}

pub fn check_adjoint(cfg: &RunConfig) -> Result<(), CliError> {
    let setup = build_model(cfg)?;
    let trials = cfg.usize("trials")?;
    let seed = cfg.u64("seed")?;
    let threshold = if cfg.model() == "vorticity2d" { 1e-8 } else { 1e-10 };
    let fd_threshold = 1e-4;
    let m = setup.model.as_ref();
    let dot = verify::dot_product_error(m, &setup.truth_u0, setup.spread, trials, seed)?;
    let fd = verify::tangent_fd_error(m, &setup.truth_u0, setup.spread, trials, cfg.f64("fd_eps")?, seed)?;
    println!("{}: dot-product max relative error {dot:.3e} (threshold {threshold:.0e}, {trials} trials)", m.name());
    println!("{}: tangent finite-difference max relative error {fd:.3e} (threshold {fd_threshold:.0e})", m.name());
    let mut failed = Vec::new();
    if !(dot <= threshold) {
        failed.push(format!("dot-product test ({dot:.3e} > {threshold:.0e})"));
    }
    if !(fd <= fd_threshold) {
        failed.push(format!("tangent finite-difference test ({fd:.3e} > {fd_threshold:.0e})"));
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(format!("{}: {}", m.name(), failed.join("; "))))
    }
}

pub fn landscape(cfg: &RunConfig) -> Result<(), CliError> {
    let setup = build_model(cfg)?;
    if setup.model.dim() != 3 {
        return Err(CliError::Usage(format!(
            "landscape needs a 3-dimensional model, {} has dimension {}",
            cfg.model(),
            setup.model.dim()
        )));
    }
    let b = cfg.f64_list("box")?;
    if b.len() != 6 {
        return Err(CliError::Usage("config key `box`: expected 6 numbers x0,x1,y0,y1,z0,z1".into()));
    }
    let res = cfg.usize("resolution")?;
    let bounds = LandscapeBox { lower: [b[0], b[2], b[4]], upper: [b[1], b[3], b[5]], resolution: [res; 3] };
    let t = twin(cfg, &setup)?;
    let prob = AssimilationProblem::new(setup.model.clone(), t.obs, cfg.f64("alpha")?, cfg.f64("mu")?, setup.norm)?;
    let scan = scan_landscape(&prob, bounds)?;
    let dir = output_dir(cfg)?;
    write_file(&dir.join("landscape.csv"), |out| scan.write_csv(out))?;
    write_meta(&dir, "landscape", cfg, &[])?;
    let (idx, v) = scan.argmin();
    println!("landscape: {} points, minimum {v:.6e} at {:?}", scan.values.len(), scan.point(idx[0], idx[1], idx[2]));
    Ok(())
}
