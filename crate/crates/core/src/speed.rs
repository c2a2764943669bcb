//! Spreading speeds `c* = inf_{α>0} −λ(α)/α` by bracketing and golden-section search.

use crate::discrete::StripGrid;
use crate::error::{Error, Result};
use crate::model::{ModelParams, ReactionSpec};
use crate::spectral::{EigenOptions, EigenSolver, GridPolicy, HalfPlaneSolver};

/// Default width of the final `α` bracket.
pub const TOL_ALPHA: f64 = 1e-4;
const MAX_EXPANSIONS: usize = 60;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Right,
    Left,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Self::Right => 1.0,
            Self::Left => -1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Right => "right",
            Self::Left => "left",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpeedMode {
    Strip(f64),
    HalfPlane,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpeedResult {
    pub c_star: f64,
    pub alpha_star: f64,
    pub bracket: (f64, f64),
    pub evaluations: usize,
    pub mode: SpeedMode,
    pub direction: Direction,
    /// Strip speeds along the width schedule (half-plane mode, on request).
    pub strip_speeds: Vec<SpeedResult>,
}

/// Minimum of a quasi-convex `g` on `(0, ∞)`: `(α*, g(α*), bracket, evaluations)`.
pub fn minimize_quasiconvex(
    mut g: impl FnMut(f64) -> Result<f64>,
    tol_alpha: f64,
) -> Result<(f64, f64, (f64, f64), usize)> {
    if !(tol_alpha > 0.0) {
        return Err(Error::Config(format!("tol_alpha must be > 0 (got {tol_alpha})")));
    }
    let mut evals = 0;
    let mut eval = |a: f64| {
        evals += 1;
        g(a)
    };
    let (mut a, mut b, mut c) = (0.5, 1.0, 2.0);
    let (mut ga, mut gb, mut gc) = (eval(a)?, eval(b)?, eval(c)?);
    let mut expansions = 0;
    while !(gb <= ga && gb <= gc) {
        expansions += 1;
        if expansions > MAX_EXPANSIONS {
            return Err(Error::Numerical(format!(
                "no bracket for the speed minimizer after {MAX_EXPANSIONS} expansions (last alpha {b})"
            )));
        }
        if ga < gb {
            (c, gc) = (b, gb);
            (b, gb) = (a, ga);
            a *= 0.5;
            ga = eval(a)?;
        } else {
            (a, ga) = (b, gb);
            (b, gb) = (c, gc);
            c *= 2.0;
            gc = eval(c)?;
        }
    }

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (a, c);
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let (mut g1, mut g2) = (eval(x1)?, eval(x2)?);
    let mut best = (b, gb);
    while hi - lo > tol_alpha {
        if g1 <= g2 {
            hi = x2;
            (x2, g2) = (x1, g1);
            x1 = hi - inv_phi * (hi - lo);
            g1 = eval(x1)?;
        } else {
            lo = x1;
            (x1, g1) = (x2, g2);
            x2 = lo + inv_phi * (hi - lo);
            g2 = eval(x2)?;
        }
    }
    for (x, gx) in [(x1, g1), (x2, g2)] {
        if gx < best.1 {
            best = (x, gx);
        }
    }
    Ok((best.0, best.1, (lo, hi), evals))
}

/// `c*_R` in the given direction on a periodic strip grid.
pub fn speed_strip(
    params: &ModelParams,
    spec: &ReactionSpec,
    grid: &StripGrid,
    direction: Direction,
    tol_alpha: f64,
) -> Result<SpeedResult> {
    speed_strip_with(params, spec, grid, direction, tol_alpha, EigenOptions::with_tol(1e-9))
}

pub fn speed_strip_with(
    params: &ModelParams,
    spec: &ReactionSpec,
    grid: &StripGrid,
    direction: Direction,
    tol_alpha: f64,
    opts: EigenOptions,
) -> Result<SpeedResult> {
    let mut solver = EigenSolver::new(*params, spec.clone(), grid.clone(), opts);
    let lambda0 = solver.solve(0.0)?.lambda;
    if lambda0 >= 0.0 {
        return Err(Error::Domain(format!(
            "below persistence: lambda_R(0) = {lambda0} >= 0, no positive speed"
        )));
    }
    let sign = direction.sign();
    let (alpha_star, c_star, bracket, evaluations) =
        minimize_quasiconvex(|a| Ok(-solver.solve(sign * a)?.lambda / a), tol_alpha)?;
    Ok(SpeedResult {
        c_star,
        alpha_star,
        bracket,
        evaluations: evaluations + 1,
        mode: SpeedMode::Strip(params.width),
        direction,
        strip_speeds: Vec::new(),
    })
}

/// `c*` from the half-plane limit `λ(α)`; with `with_strips`, also the strip
/// speeds at every width of the schedule.
pub fn speed_halfplane(
    params: &ModelParams,
    spec: &ReactionSpec,
    policy: &GridPolicy,
    tol_alpha: f64,
    tol_limit: f64,
    with_strips: bool,
) -> Result<SpeedResult> {
    speed_halfplane_with(
        params,
        spec,
        policy,
        tol_alpha,
        tol_limit,
        with_strips,
        EigenOptions::with_tol(1e-9),
    )
}

pub fn speed_halfplane_with(
    params: &ModelParams,
    spec: &ReactionSpec,
    policy: &GridPolicy,
    tol_alpha: f64,
    tol_limit: f64,
    with_strips: bool,
    opts: EigenOptions,
) -> Result<SpeedResult> {
    let mut solver = HalfPlaneSolver::new(params, spec, *policy, tol_limit, opts)?;
    let lambda0 = solver.solve(0.0)?.lambda_inf;
    if lambda0 >= 0.0 {
        return Err(Error::Domain(format!(
            "below persistence: lambda(0) = {lambda0} >= 0, no positive speed"
        )));
    }
    let (alpha_star, c_star, bracket, evaluations) =
        minimize_quasiconvex(|a| Ok(-solver.solve(a)?.lambda_inf / a), tol_alpha)?;

    let mut strip_speeds = Vec::new();
    if with_strips {
        for (k, r) in solver.widths().into_iter().enumerate() {
            let p = params.with_width(r);
            let lambda0 = solver.solve_strip(k, 0.0)?.lambda;
            if lambda0 >= 0.0 {
                return Err(Error::Domain(format!(
                    "below persistence at R={r}: lambda_R(0) = {lambda0} >= 0"
                )));
            }
            let (a, c, br, ev) = minimize_quasiconvex(|a| Ok(-solver.solve_strip(k, a)?.lambda / a), tol_alpha)?;
            strip_speeds.push(SpeedResult {
                c_star: c,
                alpha_star: a,
                bracket: br,
                evaluations: ev + 1,
                mode: SpeedMode::Strip(p.width),
                direction: Direction::Right,
                strip_speeds: Vec::new(),
            });
        }
    }
    Ok(SpeedResult {
        c_star,
        alpha_star,
        bracket,
        evaluations: evaluations + 1,
        mode: SpeedMode::HalfPlane,
        direction: Direction::Right,
        strip_speeds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn golden_section_finds_kpp_minimum() {
        // (α² + 1)/α has its minimum 2 at α = 1.
        let (a, c, (lo, hi), _) = minimize_quasiconvex(|a| Ok((a * a + 1.0) / a), 1e-6).unwrap();
        assert_abs_diff_eq!(a, 1.0, epsilon = 1e-5);
        assert_abs_diff_eq!(c, 2.0, epsilon = 1e-10);
        assert!(hi - lo <= 1e-6 && lo <= 1.0 && 1.0 <= hi);
    }

    #[test]
    fn bracket_expands_both_ways() {
        let (a, _, _, _) = minimize_quasiconvex(|a| Ok((a * a + 400.0) / a), 1e-6).unwrap();
        assert_abs_diff_eq!(a, 20.0, epsilon = 1e-4);
        let (a, _, _, _) = minimize_quasiconvex(|a| Ok((a * a + 1e-4) / a), 1e-7).unwrap();
        assert_abs_diff_eq!(a, 1e-2, epsilon = 1e-5);
    }

    #[test]
    fn monotone_function_has_no_bracket() {
        let err = minimize_quasiconvex(|a| Ok(1.0 / a), 1e-4).unwrap_err();
        assert!(matches!(err, Error::Numerical(_)));
    }
}
