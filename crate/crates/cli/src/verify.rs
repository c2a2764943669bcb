//! `verify`: every property check on one configuration, printed as a table.

use std::io::Write;

use fieldroad_core::csvio::fmt_f64;
use fieldroad_core::diagnostics::{dichotomy_check, DichotomyOptions};
use fieldroad_core::discrete::{build_grid, AdvectionRegime};
use fieldroad_core::model::{ModelParams, ReactionSpec};
use fieldroad_core::simulate::{bump_init, simulate, simulation_grid, SimConfig, State, Stepper, GUARD_PERIODS};
use fieldroad_core::spectral::{principal_eigen_with, verify_eigen_properties, GridPolicy};
use fieldroad_core::speed::{speed_strip_with, Direction};
use fieldroad_core::steady::compute_steady;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::commands::eigen_options;
use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

/// Final time of the reference spreading run.
pub const REFERENCE_T: f64 = 100.0;
/// Field spacing of the reference spreading run.
pub const REFERENCE_DY: f64 = 0.5;
const REFERENCE_NX: usize = 8;

#[derive(Clone, Debug, PartialEq)]
pub struct PropertyRow {
    pub name: String,
    pub passed: bool,
    pub margin: f64,
    pub note: String,
}

impl PropertyRow {
    fn new(name: &str, passed: bool, margin: f64, note: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            margin,
            note: note.into(),
        }
    }
}

/// Runs every check; failures of a check become failing rows, never errors.
pub fn verify_rows(config: &RunConfig) -> CliResult<(Vec<PropertyRow>, Vec<String>)> {
    let params = config.model;
    let spec = config.reaction();
    let mut rows = Vec::new();
    let mut warnings = Vec::new();

    rows.push(kpp_row(&spec)?);

    let alphas = if config.spectral.alphas.len() >= 2 {
        config.spectral.alphas.clone()
    } else {
        vec![0.0, 0.5, 1.0]
    };
    let dx = params.period / config.grid.nx as f64;
    for &a in &alphas {
        if AdvectionRegime::for_alpha(a, dx) == AdvectionRegime::Upwind {
            warnings.push(format!(
                "warning: |alpha|*dx = {} > 0.5 at alpha = {a}; upwind fallback used",
                a.abs() * dx
            ));
        }
    }
    let r = params.width;
    let policy = GridPolicy {
        nx: config.grid.nx,
        dy: r / config.grid.ny as f64,
        r0: 0.5 * r,
        r_max: r,
    };
    match verify_eigen_properties(&params, &spec, &policy, &alphas, &[0.5 * r, r]) {
        Ok(report) => {
            let note = if report.refined { "rerun on refined grid" } else { "" };
            for c in &report.checks {
                rows.push(PropertyRow::new(&format!("eigen.{}", c.name), c.passed, c.worst_margin, note));
            }
        }
        Err(e) => rows.push(PropertyRow::new("eigen", false, f64::NAN, e.to_string())),
    }

    let cell = build_grid(&params, config.grid.nx, config.grid.ny)?;
    let lambda0 = principal_eigen_with(&params, &spec, &cell, 0.0, &eigen_options(config), None)
        .map(|e| e.lambda);
    let persistent = match &lambda0 {
        Ok(l) => *l < 0.0,
        Err(e) => {
            rows.push(PropertyRow::new("speed", false, f64::NAN, e.to_string()));
            false
        }
    };
    if let Ok(l) = lambda0 {
        if persistent {
            rows.extend(speed_rows(config, &spec));
        } else {
            rows.push(PropertyRow::new(
                "speed",
                true,
                l,
                format!("below persistence: lambda_R(0) = {l} >= 0 (expected negative)"),
            ));
        }
    }

    rows.push(comparison_row(&params, &spec, &cell, config.seed)?);

    if persistent {
        rows.push(dichotomy_row(config, &spec));
    } else {
        rows.push(PropertyRow::new("dichotomy", true, f64::NAN, "skipped: below persistence"));
    }
    Ok((rows, warnings))
}

fn kpp_row(spec: &ReactionSpec) -> CliResult<PropertyRow> {
    let report = spec.kpp_check(64, 32)?;
    let note = report
        .violations
        .first()
        .map(|v| format!("{} at x={}, v={}", v.rule.describe(), v.x, v.v))
        .unwrap_or_default();
    let margin = if report.ok { report.m } else { -(report.violations.len() as f64) };
    Ok(PropertyRow::new("kpp", report.ok, margin, note))
}

fn speed_rows(config: &RunConfig, spec: &ReactionSpec) -> Vec<PropertyRow> {
    let params = config.model;
    let tol_alpha = config.spectral.tol_alpha;
    let at = |width: f64, dir: Direction| -> fieldroad_core::Result<f64> {
        let p = params.with_width(width);
        let ny = ((config.grid.ny as f64 * width / params.width).round() as usize).max(4);
        let grid = build_grid(&p, config.grid.nx, ny)?;
        Ok(speed_strip_with(&p, spec, &grid, dir, tol_alpha, eigen_options(config))?.c_star)
    };
    let r = params.width;
    let mut rows = Vec::new();
    let (right, left) = match (at(r, Direction::Right), at(r, Direction::Left)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return vec![PropertyRow::new("speed", false, f64::NAN, e.to_string())],
    };
    rows.push(PropertyRow::new("speed.positive", right > 0.0, right, format!("c*_R = {right}")));
    let rel = (right - left).abs() / right.abs().max(1e-300);
    // Ties within the α bracket width; the minimizer sees the same even λ.
    let tol = 10.0 * tol_alpha;
    rows.push(PropertyRow::new(
        "speed.left_right",
        rel <= tol,
        tol - rel,
        format!("right {right}, left {left}"),
    ));
    match at(0.5 * r, Direction::Right) {
        Ok(half) => rows.push(PropertyRow::new(
            "speed.increasing_in_R",
            right > half,
            right - half,
            format!("c*_(R/2) = {half}"),
        )),
        Err(fieldroad_core::Error::Domain(msg)) => rows.push(PropertyRow::new(
            "speed.increasing_in_R",
            true,
            f64::NAN,
            format!("R/2 {msg}"),
        )),
        Err(e) => rows.push(PropertyRow::new("speed.increasing_in_R", false, f64::NAN, e.to_string())),
    }
    rows
}

/// Ordered random pairs stay ordered and inside `[0, ν/μ] × [0, 1]`.
fn comparison_row(
    params: &ModelParams,
    spec: &ReactionSpec,
    grid: &fieldroad_core::discrete::StripGrid,
    seed: u64,
) -> CliResult<PropertyRow> {
    let config = SimConfig {
        dt: SimConfig::default().dt.min(0.5 / spec.rate_bounds().1.max(1e-300)),
        ..SimConfig::default()
    };
    let mut stepper = Stepper::new(params, spec, grid, &config)?;
    let (cap_u, cap_v) = params.carrying_capacity();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut margin = f64::INFINITY;
    let mut inside = true;
    for _ in 0..5 {
        let mut lo = State::zeros(grid);
        let mut hi = State::zeros(grid);
        for (l, h) in lo.u.iter_mut().zip(&mut hi.u) {
            *l = rng.gen_range(0.0..=cap_u);
            *h = rng.gen_range(*l..=cap_u);
        }
        for (l, h) in lo.v.iter_mut().zip(&mut hi.v) {
            *l = rng.gen_range(0.0..=cap_v);
            *h = rng.gen_range(*l..=cap_v);
        }
        for _ in 0..20 {
            stepper.advance(&mut lo)?;
            stepper.advance(&mut hi)?;
            let gap = hi
                .u
                .iter()
                .zip(&lo.u)
                .chain(hi.v.iter().zip(&lo.v))
                .map(|(h, l)| h - l)
                .fold(f64::INFINITY, f64::min);
            margin = margin.min(gap);
            for s in [&lo, &hi] {
                inside &= s.u.iter().all(|u| (0.0..=cap_u).contains(u));
                inside &= s.v.iter().all(|v| (0.0..=cap_v).contains(v));
            }
        }
    }
    Ok(PropertyRow::new(
        "comparison",
        margin >= 0.0 && inside,
        margin,
        if inside { "" } else { "left the invariant region" },
    ))
}

/// Spreading dichotomy on a bump run over a window wide enough for
/// `REFERENCE_T`, on a coarse reference grid.
fn dichotomy_row(config: &RunConfig, spec: &ReactionSpec) -> PropertyRow {
    let run = || -> fieldroad_core::Result<PropertyRow> {
        let params = config.model;
        let nx = config.grid.nx.min(REFERENCE_NX);
        let ny = ((params.width / REFERENCE_DY).ceil() as usize).clamp(4, config.grid.ny.max(4));
        let cell = build_grid(&params, nx, ny)?;
        let c = speed_strip_with(&params, spec, &cell, Direction::Right, 1e-4, eigen_options(config))?.c_star;
        let steady = compute_steady(&params, spec, &cell, config.steady_tol)?;
        let reach = 1.3 * c * REFERENCE_T + config.init.width;
        let copies = (2.0 * reach / params.period).ceil() as usize + 2 * GUARD_PERIODS;
        let grid = simulation_grid(&params, nx, ny, copies)?;
        let center = 0.5 * grid.length();
        let (cap_u, cap_v) = params.carrying_capacity();
        let init = bump_init(&params, &grid, center, config.init.width, cap_u, cap_v)?;
        let sim = SimConfig {
            dt: 0.05f64.min(0.5 / spec.rate_bounds().1),
            t_final: REFERENCE_T,
            record_every: usize::MAX,
            domain_copies: copies,
            ..SimConfig::default()
        };
        let traj = simulate(&init, &params, spec, &grid, &sim, &[])?;
        let opts = DichotomyOptions::new(&params);
        let d = dichotomy_check(&traj, &steady, center, c, &opts)?;
        let inner = d.inner_dist.unwrap_or(0.0);
        let margin = (opts.outer_tol - d.outer_sup).min(opts.inner_tol - inner);
        Ok(PropertyRow::new(
            "dichotomy",
            d.passed(),
            margin,
            format!("outer sup {:e}, inner distance {inner:e}, c*_R = {c}", d.outer_sup),
        ))
    };
    run().unwrap_or_else(|e| PropertyRow::new("dichotomy", false, f64::NAN, e.to_string()))
}

pub fn verify_all(config: &RunConfig, log: &mut dyn Write) -> CliResult<()> {
    let (rows, warnings) = verify_rows(config)?;
    for w in &warnings {
        writeln!(log, "{w}")?;
    }
    let width = rows.iter().map(|r| r.name.len()).max().unwrap_or(8).max(8);
    writeln!(log, "{:<width$}  status  margin", "property")?;
    for r in &rows {
        writeln!(
            log,
            "{:<width$}  {:<6}  {:>12.4e}  {}",
            r.name,
            if r.passed { "pass" } else { "FAIL" },
            r.margin,
            r.note
        )?;
    }

    let file = std::fs::File::create(config.output_dir.join("verify.csv"))?;
    let mut w = csv::Writer::from_writer(std::io::BufWriter::new(file));
    w.write_record(["property", "passed", "margin", "note"])
        .map_err(fieldroad_core::Error::from)?;
    for r in &rows {
        w.write_record([r.name.clone(), r.passed.to_string(), fmt_f64(r.margin), r.note.clone()])
            .map_err(fieldroad_core::Error::from)?;
    }
    for warning in &warnings {
        w.write_record(["warning", "true", "", warning.as_str()])
            .map_err(fieldroad_core::Error::from)?;
    }
    w.flush()?;

    let failed: Vec<&str> = rows.iter().filter(|r| !r.passed).map(|r| r.name.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Property(failed.join(", ")))
    }
}
