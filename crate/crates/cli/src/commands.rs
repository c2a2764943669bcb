//! One function per subcommand. Each writes its CSVs and `manifest.cfg` into
//! the output directory and reports progress lines to `log`.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use fieldroad_core::csvio::{self, DispersionRow, SpeedRow, Summary};
use fieldroad_core::diagnostics::{estimate_speed, pulsating_diagnostic, track_front, track_profiles, FrontTrace};
use fieldroad_core::discrete::{assemble_eigen_operator, build_grid, AdvectionRegime, StripGrid};
use fieldroad_core::simulate::{bump_init, simulate, simulation_grid, Probe, SimConfig, Trajectory};
use fieldroad_core::spectral::{EigenOptions, EigenSolver, GridPolicy, HalfPlaneSolver};
use fieldroad_core::speed::{speed_halfplane_with, speed_strip_with, SpeedMode, SpeedResult};
use fieldroad_core::steady::compute_steady;

use crate::config::{Command, RunConfig};
use crate::error::{CliError, CliResult};

pub fn run(config: &RunConfig, log: &mut (dyn Write + Send)) -> CliResult<()> {
    fs::create_dir_all(&config.output_dir)?;
    fs::write(config.output_dir.join("manifest.cfg"), config.to_manifest())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| CliError::Config(format!("cannot start {} threads: {e}", config.threads)))?;
    pool.install(|| match config.command {
        Command::Eigen => eigen(config, log),
        Command::Simulate => run_simulation(config, log),
        Command::Steady => steady(config, log),
        Command::Speed => speed(config, log),
        Command::Front => front(config, log),
        Command::Sweep => crate::sweep::run_sweep(config, log),
        Command::Verify => crate::verify::verify_all(config, log),
    })
}

fn create(config: &RunConfig, name: &str) -> CliResult<BufWriter<File>> {
    Ok(BufWriter::new(File::create(config.output_dir.join(name))?))
}

pub fn policy(config: &RunConfig) -> GridPolicy {
    GridPolicy {
        nx: config.grid.nx,
        dy: config.spectral.dy,
        r0: config.spectral.r0,
        r_max: config.spectral.r_max,
    }
}

pub fn eigen_options(config: &RunConfig) -> EigenOptions {
    EigenOptions::with_tol(config.spectral.tol)
}

fn cell(config: &RunConfig) -> CliResult<StripGrid> {
    Ok(build_grid(&config.model, config.grid.nx, config.grid.ny)?)
}

fn warn_upwind(log: &mut dyn Write, alpha: f64, dx: f64) -> CliResult<()> {
    if AdvectionRegime::for_alpha(alpha, dx) == AdvectionRegime::Upwind {
        writeln!(
            log,
            "warning: |alpha|*dx = {} > 0.5 at alpha = {alpha}; advection falls back to upwind",
            alpha.abs() * dx
        )?;
    }
    Ok(())
}

fn eigen(config: &RunConfig, log: &mut dyn Write) -> CliResult<()> {
    let spec = config.reaction();
    if config.dump_operator {
        let grid = cell(config)?;
        let alpha = config.spectral.alphas.first().copied().unwrap_or(0.0);
        let op = assemble_eigen_operator(&config.model, &spec, &grid, alpha);
        let mut out = create(config, "operator.coo")?;
        op.write_coo(&mut out)?;
        out.flush()?;
        writeln!(log, "operator: {} unknowns, {} nonzeros -> operator.coo", op.dim, op.nnz())?;
    }
    if config.spectral.halfplane {
        let mut solver = HalfPlaneSolver::new(
            &config.model,
            &spec,
            policy(config),
            config.spectral.tol_limit,
            eigen_options(config),
        )?;
        let mut rows = Vec::new();
        for &alpha in &config.spectral.alphas {
            warn_upwind(log, alpha, config.model.period / config.grid.nx as f64)?;
            let h = solver.solve(alpha)?;
            writeln!(
                log,
                "alpha = {alpha}: lambda = {} (last R = {}, converged = {})",
                h.lambda_inf,
                h.r_schedule.last().copied().unwrap_or(f64::NAN),
                h.converged
            )?;
            for k in 0..h.lambdas.len() {
                rows.push((
                    DispersionRow {
                        alpha,
                        width: h.r_schedule[k],
                        lambda: h.lambdas[k],
                        residual: h.residuals[k],
                        iterations: h.iterations[k],
                    },
                    h.converged,
                ));
            }
        }
        csvio::write_halfplane(create(config, "halfplane.csv")?, &rows)?;
    } else {
        let grid = cell(config)?;
        let mut solver = EigenSolver::new(config.model, spec, grid.clone(), eigen_options(config));
        let mut rows = Vec::new();
        for &alpha in &config.spectral.alphas {
            warn_upwind(log, alpha, grid.dx)?;
            let e = solver.solve(alpha)?;
            writeln!(log, "alpha = {alpha}: lambda = {} (residual {:e})", e.lambda, e.residual)?;
            rows.push(DispersionRow {
                alpha,
                width: config.model.width,
                lambda: e.lambda,
                residual: e.residual,
                iterations: e.iterations,
            });
        }
        csvio::write_dispersion(create(config, "dispersion.csv")?, &rows)?;
    }
    Ok(())
}

fn window(config: &RunConfig) -> CliResult<StripGrid> {
    Ok(simulation_grid(
        &config.model,
        config.grid.nx,
        config.grid.ny,
        config.sim.domain_copies,
    )?)
}

fn bump_run(config: &RunConfig, sim: &SimConfig, probes: &[Probe]) -> CliResult<Trajectory> {
    let spec = config.reaction();
    let grid = window(config)?;
    let i = &config.init;
    let init = bump_init(&config.model, &grid, i.center, i.width, i.amp_u, i.amp_v)?;
    Ok(simulate(&init, &config.model, &spec, &grid, sim, probes)?)
}

fn run_simulation(config: &RunConfig, log: &mut dyn Write) -> CliResult<()> {
    let level = config.front.level;
    let probes = [
        Probe::RoadSup,
        Probe::FieldSup,
        Probe::FrontRight { level },
        Probe::FrontLeft { level },
    ];
    let traj = bump_run(config, &config.sim, &probes)?;
    csvio::write_snapshots(create(config, "snapshots.csv")?, &traj.grid, &traj.snapshots)?;
    csvio::write_probes(create(config, "probes.csv")?, &traj.probes)?;
    let last = &traj.final_state;
    writeln!(
        log,
        "t = {}: sup u = {}, sup v = {}, {} snapshots",
        last.t,
        last.road_sup(),
        last.field_sup(),
        traj.snapshots.len()
    )?;
    Ok(())
}

fn steady(config: &RunConfig, log: &mut dyn Write) -> CliResult<()> {
    let s = compute_steady(&config.model, &config.reaction(), &cell(config)?, config.steady_tol)?;
    csvio::write_steady(create(config, "steady.csv")?, &s)?;
    writeln!(
        log,
        "persistence margin {} (holds: {}), persistent: {}, residual {:e}, bracket gap {:e}",
        s.persistence.margin, s.persistence.holds, s.persistent, s.residual, s.bracket_gap
    )?;
    Ok(())
}

fn speed_row(r: &SpeedResult) -> SpeedRow {
    let (mode, width) = match r.mode {
        SpeedMode::Strip(w) => ("strip", Some(w)),
        SpeedMode::HalfPlane => ("halfplane", None),
    };
    SpeedRow {
        mode: mode.into(),
        width,
        direction: r.direction.name().into(),
        alpha_star: r.alpha_star,
        c_star: r.c_star,
        evaluations: r.evaluations,
    }
}

fn speed(config: &RunConfig, log: &mut dyn Write) -> CliResult<()> {
    let spec = config.reaction();
    let sp = &config.spectral;
    let mut rows = Vec::new();
    if sp.halfplane {
        let r = speed_halfplane_with(
            &config.model,
            &spec,
            &policy(config),
            sp.tol_alpha,
            sp.tol_limit,
            sp.with_strips,
            eigen_options(config),
        )?;
        writeln!(log, "halfplane: c* = {} at alpha* = {}", r.c_star, r.alpha_star)?;
        rows.push(speed_row(&r));
        for s in &r.strip_speeds {
            rows.push(speed_row(s));
        }
    } else {
        let grid = cell(config)?;
        for dir in sp.directions.list() {
            let r = speed_strip_with(&config.model, &spec, &grid, dir, sp.tol_alpha, eigen_options(config))?;
            writeln!(
                log,
                "strip R = {} ({}): c*_R = {} at alpha* = {}",
                config.model.width,
                dir.name(),
                r.c_star,
                r.alpha_star
            )?;
            rows.push(speed_row(&r));
        }
    }
    csvio::write_speed(create(config, "speed.csv")?, &rows)?;
    Ok(())
}

/// Road profiles to track, read from a snapshot file or simulated.
enum FrontSource {
    File(Vec<csvio::RoadProfile>),
    Run(Trajectory),
}

impl FrontSource {
    fn trace(&self, config: &RunConfig, level: f64) -> CliResult<FrontTrace> {
        Ok(match self {
            Self::File(profiles) => track_profiles(
                profiles.iter().map(|p| (p.t, p.xs.as_slice(), p.us.as_slice())),
                level,
            ),
            Self::Run(traj) => track_front(traj, &config.model, level)?,
        })
    }
}

fn front(config: &RunConfig, log: &mut dyn Write) -> CliResult<()> {
    let level = config.front.level;
    let source = match &config.front.snapshots {
        Some(path) => FrontSource::File(profiles_from_file(path)?),
        None => FrontSource::Run(bump_run(config, &config.sim, &[])?),
    };
    let trace = source.trace(config, level)?;
    let est = estimate_speed(&trace, config.front.window)?;
    let deviation = match source {
        FrontSource::Run(_) if config.front.pulsating => Some(pulsating_rerun(config, est.c_hat)?),
        _ => None,
    };
    csvio::write_front(create(config, "front.csv")?, &trace)?;
    let summary = Summary {
        c_hat: est.c_hat,
        stderr: est.stderr,
        r2: est.r2,
        deviation,
    };
    csvio::write_summary(create(config, "summary.csv")?, &summary)?;
    writeln!(
        log,
        "c_hat = {} (stderr {:e}, r2 {}){}",
        est.c_hat,
        est.stderr,
        est.r2,
        deviation.map_or(String::new(), |d| format!(", pulsating deviation {d:e}"))
    )?;
    // Level sensitivity: the same profiles tracked at half and twice the level.
    let cap = config.model.nu / config.model.mu;
    for other in [0.5 * level, 2.0 * level].into_iter().filter(|l| *l < cap) {
        let c = source
            .trace(config, other)
            .and_then(|t| Ok(estimate_speed(&t, config.front.window)?.c_hat));
        match c {
            Ok(c) => writeln!(log, "level {other}: c_hat = {c}")?,
            Err(e) => writeln!(log, "level {other}: {e}")?,
        }
    }
    Ok(())
}

fn profiles_from_file(path: &Path) -> CliResult<Vec<csvio::RoadProfile>> {
    let file = File::open(path)
        .map_err(|e| CliError::Config(format!("cannot open snapshots {}: {e}", path.display())))?;
    let rows = csvio::read_snapshots(std::io::BufReader::new(file))?;
    Ok(csvio::road_profiles(&rows)?)
}

/// Reruns with `steps_per_period` steps per `L/c_hat`, keeping every step
/// of the second half, and measures the pulsating relation at `c_hat`.
fn pulsating_rerun(config: &RunConfig, c_hat: f64) -> CliResult<f64> {
    let k = config.front.steps_per_period as f64;
    let sim = SimConfig {
        dt: config.model.period / (k * c_hat),
        record_every: 1,
        record_from: 0.5 * config.sim.t_final - 1.0,
        ..config.sim
    };
    sim.validate(&config.model, &config.reaction(), &window(config)?)?;
    let traj = bump_run(config, &sim, &[])?;
    Ok(pulsating_diagnostic(&traj, c_hat)?.deviation)
}
