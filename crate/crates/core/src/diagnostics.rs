//! Front tracking, speed fits, the spreading dichotomy and the pulsating
//! relation `u(t + L/c, x) = u(t, x − L)` on simulated trajectories.

use crate::discrete::StripGrid;
use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::simulate::{Trajectory, GUARD_PERIODS};
use crate::steady::SteadyState;

/// Outermost positions `(left, right)` where `u` crosses `level`, by linear
/// interpolation between nodes. `None` when `u < level` everywhere.
pub fn crossings(xs: &[f64], u: &[f64], level: f64) -> Option<(f64, f64)> {
    let first = u.iter().position(|v| *v >= level)?;
    let last = u.iter().rposition(|v| *v >= level)?;
    let left = if first == 0 {
        xs[0]
    } else {
        let (a, b) = (u[first - 1], u[first]);
        xs[first] - (xs[first] - xs[first - 1]) * (b - level) / (b - a)
    };
    let right = if last + 1 == u.len() {
        xs[last]
    } else {
        let (a, b) = (u[last], u[last + 1]);
        xs[last] + (xs[last + 1] - xs[last]) * (a - level) / (a - b)
    };
    Some((left, right))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineFit {
    pub speed: f64,
    pub intercept: f64,
    /// Standard error of the slope.
    pub stderr: f64,
    pub r2: f64,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrontTrace {
    pub times: Vec<f64>,
    pub pos_left: Vec<f64>,
    pub pos_right: Vec<f64>,
    pub level: f64,
}

impl FrontTrace {
    /// No snapshot reached the level.
    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn fit_right(&self, window_fraction: f64) -> Result<LineFit> {
        fit_trailing(&self.times, &self.pos_right, window_fraction)
    }

    /// Fit of `−pos_left`, so a leftward front has positive speed.
    pub fn fit_left(&self, window_fraction: f64) -> Result<LineFit> {
        let neg: Vec<f64> = self.pos_left.iter().map(|x| -x).collect();
        fit_trailing(&self.times, &neg, window_fraction)
    }
}

/// Front positions of road profiles given as `(t, xs, us)`.
pub fn track_profiles<'a>(
    profiles: impl IntoIterator<Item = (f64, &'a [f64], &'a [f64])>,
    level: f64,
) -> FrontTrace {
    let mut trace = FrontTrace {
        times: Vec::new(),
        pos_left: Vec::new(),
        pos_right: Vec::new(),
        level,
    };
    for (t, xs, us) in profiles {
        if let Some((l, r)) = crossings(xs, us, level) {
            trace.times.push(t);
            trace.pos_left.push(l);
            trace.pos_right.push(r);
        }
    }
    trace
}

/// Front positions of every snapshot; `level` must lie in `(0, ν/μ)`.
pub fn track_front(traj: &Trajectory, params: &ModelParams, level: f64) -> Result<FrontTrace> {
    let cap = params.nu / params.mu;
    if !(level > 0.0 && level < cap) {
        return Err(Error::Domain(format!("front level must lie in (0, {cap}) (got {level})")));
    }
    let xs: Vec<f64> = (0..traj.grid.nx).map(|i| traj.grid.x(i)).collect();
    Ok(track_profiles(
        traj.snapshots.iter().map(|s| (s.t, xs.as_slice(), s.u.as_slice())),
        level,
    ))
}

/// Least-squares line through the trailing `window_fraction` of the samples.
pub fn fit_trailing(ts: &[f64], xs: &[f64], window_fraction: f64) -> Result<LineFit> {
    if !(window_fraction > 0.0 && window_fraction <= 1.0) {
        return Err(Error::Diagnostics(format!(
            "window_fraction must lie in (0, 1] (got {window_fraction})"
        )));
    }
    let n_all = ts.len();
    let n = ((n_all as f64) * window_fraction).ceil() as usize;
    if n < 10 {
        return Err(Error::Diagnostics(format!(
            "speed fit needs >= 10 samples in the trailing window (have {n} of {n_all})"
        )));
    }
    let (t, x) = (&ts[n_all - n..], &xs[n_all - n..]);
    let nf = n as f64;
    let tm = t.iter().sum::<f64>() / nf;
    let xm = x.iter().sum::<f64>() / nf;
    let stt: f64 = t.iter().map(|v| (v - tm).powi(2)).sum();
    let sxx: f64 = x.iter().map(|v| (v - xm).powi(2)).sum();
    let stx: f64 = t.iter().zip(x).map(|(a, b)| (a - tm) * (b - xm)).sum();
    if !(stt > 0.0) {
        return Err(Error::Diagnostics("speed fit needs distinct sample times".into()));
    }
    let speed = stx / stt;
    let intercept = xm - speed * tm;
    let sse: f64 = t
        .iter()
        .zip(x)
        .map(|(a, b)| (b - intercept - speed * a).powi(2))
        .sum();
    let r2 = if sxx > 0.0 { (1.0 - sse / sxx).clamp(0.0, 1.0) } else { 1.0 };
    let stderr = (sse / (nf - 2.0) / stt).sqrt();
    Ok(LineFit {
        speed,
        intercept,
        stderr,
        r2,
        samples: n,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpeedEstimate {
    pub c_hat: f64,
    pub stderr: f64,
    pub r2: f64,
}

/// Rightward speed from the trailing part of the trace.
pub fn estimate_speed(trace: &FrontTrace, window_fraction: f64) -> Result<SpeedEstimate> {
    let fit = trace.fit_right(window_fraction)?;
    Ok(SpeedEstimate {
        c_hat: fit.speed,
        stderr: fit.stderr,
        r2: fit.r2,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DichotomyOptions {
    pub factor_out: f64,
    pub factor_in: f64,
    pub outer_tol: f64,
    pub inner_tol: f64,
    /// Road level below which the run counts as extinct.
    pub level: f64,
}

impl DichotomyOptions {
    pub fn new(params: &ModelParams) -> Self {
        Self {
            factor_out: 1.2,
            factor_in: 0.8,
            outer_tol: 1e-3,
            inner_tol: 5e-2,
            level: 0.1 * params.nu / params.mu,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DichotomyReport {
    pub t: f64,
    /// `sup |(u, v)|` over `|x − center| ≥ factor_out·c·t`.
    pub outer_sup: f64,
    pub outer_pass: bool,
    /// `sup |(u, v) − (U, V)|` over `|x − center| ≤ factor_in·c·t`, when a
    /// population is present.
    pub inner_dist: Option<f64>,
    pub inner_pass: Option<bool>,
}

impl DichotomyReport {
    pub fn passed(&self) -> bool {
        self.outer_pass && self.inner_pass.unwrap_or(true)
    }
}

/// Checks extinction ahead of `factor_out·c·t` and convergence to the steady
/// state behind `factor_in·c·t` at the final time of the run.
pub fn dichotomy_check(
    traj: &Trajectory,
    steady: &SteadyState,
    center: f64,
    c_star: f64,
    opts: &DichotomyOptions,
) -> Result<DichotomyReport> {
    let grid = &traj.grid;
    let state = &traj.final_state;
    let t = state.t;
    let (nx, ny) = (grid.nx, grid.ny);
    let dist = |i: usize| (grid.x(i) - center).abs();

    let r_out = opts.factor_out * c_star * t;
    let mut outer_sup = 0.0f64;
    for i in (0..nx).filter(|&i| dist(i) >= r_out) {
        outer_sup = outer_sup.max(state.u[i]);
        for j in 0..ny {
            outer_sup = outer_sup.max(state.v[j * nx + i]);
        }
    }

    let present = state.road_sup() >= opts.level;
    let (inner_dist, inner_pass) = if present {
        check_steady_grid(grid, &steady.grid)?;
        let r_in = opts.factor_in * c_star * t;
        let mut d = 0.0f64;
        for i in (0..nx).filter(|&i| dist(i) <= r_in) {
            d = d.max((state.u[i] - steady.u_tiled(i)).abs());
            for j in 0..ny {
                d = d.max((state.v[j * nx + i] - steady.v_tiled(i, j)).abs());
            }
        }
        (Some(d), Some(d < opts.inner_tol))
    } else {
        (None, None)
    };
    Ok(DichotomyReport {
        t,
        outer_sup,
        outer_pass: outer_sup < opts.outer_tol,
        inner_dist,
        inner_pass,
    })
}

fn check_steady_grid(window: &StripGrid, cell: &StripGrid) -> Result<()> {
    if window.nx_period() != cell.nx || window.ny != cell.ny || (window.dx - cell.dx).abs() > 1e-12 * cell.dx {
        return Err(Error::Diagnostics(format!(
            "steady state grid ({} x {}) does not tile the run grid ({} per period x {})",
            cell.nx,
            cell.ny,
            window.nx_period(),
            window.ny
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct PulsatingReport {
    /// Largest of the road and field deviations.
    pub deviation: f64,
    pub road: f64,
    /// Field deviations at `y ∈ {0, R/4, R/2}`.
    pub field: [f64; 3],
    /// Snapshot offset corresponding to `L/c`.
    pub shift: usize,
    pub pairs: usize,
}

/// Snapshot offset matching the time `L/c`, if it is an integer.
pub fn pulsating_shift(traj: &Trajectory, c: f64) -> Result<usize> {
    if !(c > 0.0) {
        return Err(Error::Diagnostics(format!("pulsating check needs c > 0 (got {c})")));
    }
    let ratio = traj.grid.period / c / traj.snapshot_interval();
    let m = ratio.round();
    if m < 1.0 || (ratio - m).abs() > 1e-6 * ratio.max(1.0) {
        return Err(Error::Diagnostics(format!(
            "L/c = {} is {ratio} snapshot intervals, not an integer; choose dt = L/(c·K·record_every)",
            traj.grid.period / c
        )));
    }
    Ok(m as usize)
}

/// `sup |u(t + L/c, x) − u(t, x ∓ L)|` over late snapshot pairs (t past half
/// the run) and the window minus five periods at each end, plus the field
/// analogue. Right of the window centre the front moves right and the
/// comparison uses `x − L`; left of it, `x + L`.
pub fn pulsating_diagnostic(traj: &Trajectory, c: f64) -> Result<PulsatingReport> {
    let m = pulsating_shift(traj, c)?;
    let grid = &traj.grid;
    let (nx, ny) = (grid.nx, grid.ny);
    let np = grid.nx_period();
    let margin = GUARD_PERIODS.min(grid.copies / 4).max(1) * np;
    if nx <= 2 * margin + 2 * np {
        return Err(Error::Diagnostics("window too small for the pulsating check".into()));
    }
    let center = nx / 2;
    let rows = [0, (ny as f64 / 4.0).round() as usize, (ny as f64 / 2.0).round() as usize];
    let snaps = &traj.snapshots;
    let t_last = snaps.last().map_or(0.0, |s| s.t);
    let mut report = PulsatingReport {
        deviation: 0.0,
        road: 0.0,
        field: [0.0; 3],
        shift: m,
        pairs: 0,
    };
    let lag = m as f64 * traj.snapshot_interval();
    for k in 0..snaps.len() {
        if k + m >= snaps.len() || snaps[k].t < 0.5 * t_last {
            continue;
        }
        let (now, later) = (&snaps[k], &snaps[k + m]);
        // The initial snapshot may sit off the stride when recording starts late.
        if (later.t - now.t - lag).abs() > 1e-9 * lag.max(1.0) {
            continue;
        }
        report.pairs += 1;
        for i in margin..nx - margin {
            let src = if i >= center { i - np } else { i + np };
            report.road = report.road.max((later.u[i] - now.u[src]).abs());
            for (slot, &j) in rows.iter().enumerate() {
                let d = (later.v[j * nx + i] - now.v[j * nx + src]).abs();
                report.field[slot] = report.field[slot].max(d);
            }
        }
    }
    if report.pairs == 0 {
        return Err(Error::Diagnostics(format!(
            "no late snapshot pairs {m} strides apart; lengthen the run"
        )));
    }
    report.deviation = report.field.iter().fold(report.road, |a, b| a.max(*b));
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn crossing_interpolates() {
        let xs = [0.0, 1.0, 2.0, 3.0, 4.0];
        let us = [0.0, 0.2, 1.0, 0.6, 0.0];
        let (l, r) = crossings(&xs, &us, 0.5).unwrap();
        assert_abs_diff_eq!(l, 1.375, epsilon = 1e-15);
        assert_abs_diff_eq!(r, 3.0 + 0.1 / 0.6, epsilon = 1e-15);
        assert!(crossings(&xs, &[0.0; 5], 0.5).is_none());
    }

    #[test]
    fn translated_profile_moves_by_whole_nodes() {
        let dx = 0.125;
        let xs: Vec<f64> = (0..64).map(|i| i as f64 * dx).collect();
        let profile = |shift: usize| -> Vec<f64> {
            (0..64)
                .map(|i| {
                    let s = i as f64 - 20.0 - shift as f64;
                    (-(s * s) / 30.0).exp()
                })
                .collect()
        };
        let (u0, u3) = (profile(0), profile(3));
        let (_, r0) = crossings(&xs, &u0, 0.1).unwrap();
        let (_, r3) = crossings(&xs, &u3, 0.1).unwrap();
        assert_abs_diff_eq!(r3 - r0, 3.0 * dx, epsilon = 1e-12);
    }

    #[test]
    fn line_fit_recovers_slope() {
        let ts: Vec<f64> = (0..40).map(|k| k as f64 * 0.5).collect();
        let xs: Vec<f64> = ts
            .iter()
            .enumerate()
            .map(|(k, t)| 3.0 * t + 1.0 + 1e-6 * if k % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let fit = fit_trailing(&ts, &xs, 0.5).unwrap();
        assert_abs_diff_eq!(fit.speed, 3.0, epsilon = 1e-5);
        assert!(fit.r2 > 0.999_999 && fit.r2 <= 1.0);
        assert!(matches!(fit_trailing(&ts[..15], &xs[..15], 0.5), Err(Error::Diagnostics(_))));
    }
}
