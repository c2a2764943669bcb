//! Cross-product parameter sweeps. Points run in parallel; rows come out in
//! cross-product order, and a failing point only marks its own row.

use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};

use fieldroad_core::csvio::fmt_f64;
use fieldroad_core::discrete::build_grid;
use fieldroad_core::spectral::EigenSolver;
use fieldroad_core::speed::{speed_halfplane_with, speed_strip_with, Direction};
use rayon::prelude::*;

use crate::commands::{eigen_options, policy};
use crate::config::{Coefficient, Quantity, RunConfig};
use crate::error::{CliError, CliResult};

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub values: Vec<f64>,
    pub lambda: Option<f64>,
    pub c_star: Option<f64>,
    pub alpha_star: Option<f64>,
    /// `None` on success, the error message otherwise.
    pub error: Option<String>,
}

/// Every point of the cross product, last axis varying fastest.
pub fn points(axes: &[(String, Vec<f64>)]) -> Vec<Vec<f64>> {
    if axes.is_empty() || axes.iter().any(|(_, v)| v.is_empty()) {
        return Vec::new();
    }
    let mut out = vec![Vec::new()];
    for (_, values) in axes {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                values.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push(*v);
                    p
                })
            })
            .collect();
    }
    out
}

/// The configuration of one sweep point.
pub fn point_config(base: &RunConfig, axes: &[(String, Vec<f64>)], values: &[f64]) -> CliResult<RunConfig> {
    let mut c = base.clone();
    for ((axis, _), &v) in axes.iter().zip(values) {
        match axis.as_str() {
            "D" => c.model.d_road = v,
            "d" => c.model.d_field = v,
            "mu" => c.model.mu = v,
            "nu" => c.model.nu = v,
            "L" => c.model.period = v,
            "R" => c.model.width = v,
            "alpha" => c.spectral.alphas = vec![v],
            "reaction.mean" | "reaction.amp" => match &mut c.coefficient {
                Coefficient::Fourier { mean, cos_amps, .. } => {
                    if axis == "reaction.mean" {
                        *mean = v;
                    } else if cos_amps.is_empty() {
                        cos_amps.push(v);
                    } else {
                        cos_amps[0] = v;
                    }
                }
                Coefficient::Table(_) => {
                    return Err(CliError::Config(format!("sweep over {axis} needs a Fourier coefficient")))
                }
            },
            other => return Err(CliError::Config(format!("cannot sweep over {other}"))),
        }
    }
    c.model.validate()?;
    c.reaction().validate()?;
    Ok(c)
}

fn evaluate(config: &RunConfig, quantity: Quantity) -> CliResult<(Option<f64>, Option<f64>, Option<f64>)> {
    let spec = config.reaction();
    let sp = &config.spectral;
    match quantity {
        Quantity::Lambda => {
            let grid = build_grid(&config.model, config.grid.nx, config.grid.ny)?;
            let alpha = sp.alphas.first().copied().unwrap_or(0.0);
            let e = EigenSolver::new(config.model, spec, grid, eigen_options(config)).solve(alpha)?;
            Ok((Some(e.lambda), None, None))
        }
        Quantity::Speed => {
            let grid = build_grid(&config.model, config.grid.nx, config.grid.ny)?;
            let r = speed_strip_with(&config.model, &spec, &grid, Direction::Right, sp.tol_alpha, eigen_options(config))?;
            Ok((None, Some(r.c_star), Some(r.alpha_star)))
        }
        Quantity::SpeedHalfplane => {
            let r = speed_halfplane_with(
                &config.model,
                &spec,
                &policy(config),
                sp.tol_alpha,
                sp.tol_limit,
                false,
                eigen_options(config),
            )?;
            Ok((None, Some(r.c_star), Some(r.alpha_star)))
        }
    }
}

fn run_point(base: &RunConfig, values: &[f64]) -> SweepRow {
    let axes = &base.sweep.axes;
    let outcome = catch_unwind(AssertUnwindSafe(|| {
        point_config(base, axes, values).and_then(|c| evaluate(&c, base.sweep.quantity))
    }));
    let (result, error) = match outcome {
        Ok(Ok(r)) => (r, None),
        Ok(Err(e)) => ((None, None, None), Some(e.to_string())),
        Err(_) => ((None, None, None), Some("point panicked".to_string())),
    };
    SweepRow {
        values: values.to_vec(),
        lambda: result.0,
        c_star: result.1,
        alpha_star: result.2,
        error,
    }
}

/// Evaluates every point; the result is in cross-product order.
pub fn sweep_rows(config: &RunConfig) -> Vec<SweepRow> {
    points(&config.sweep.axes)
        .par_iter()
        .map(|p| run_point(config, p))
        .collect()
}

pub fn write_sweep<W: Write>(out: W, axes: &[(String, Vec<f64>)], rows: &[SweepRow]) -> CliResult<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<&str> = axes.iter().map(|(a, _)| a.as_str()).collect();
    header.extend(["lambda", "c_star", "alpha_star", "status", "message"]);
    w.write_record(&header).map_err(fieldroad_core::Error::from)?;
    let opt = |x: Option<f64>| x.map(fmt_f64).unwrap_or_default();
    for r in rows {
        let mut rec: Vec<String> = r.values.iter().map(|v| fmt_f64(*v)).collect();
        rec.push(opt(r.lambda));
        rec.push(opt(r.c_star));
        rec.push(opt(r.alpha_star));
        rec.push(if r.error.is_some() { "error" } else { "ok" }.into());
        rec.push(r.error.clone().unwrap_or_default());
        w.write_record(&rec).map_err(fieldroad_core::Error::from)?;
    }
    w.flush()?;
    Ok(())
}

pub fn run_sweep(config: &RunConfig, log: &mut dyn Write) -> CliResult<()> {
    let rows = sweep_rows(config);
    let file = std::fs::File::create(config.output_dir.join("sweep.csv"))?;
    write_sweep(std::io::BufWriter::new(file), &config.sweep.axes, &rows)?;
    let failed = rows.iter().filter(|r| r.error.is_some()).count();
    writeln!(log, "sweep: {} points, {failed} failed -> sweep.csv", rows.len())?;
    Ok(())
}
