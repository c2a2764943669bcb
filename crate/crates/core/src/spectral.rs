//! Principal eigenvalue `λ_R(α)` of the twisted periodic problem and its
//! half-plane limit `λ(α)`.
//!
//! The eigenvalue is found by inverse iteration on `A + ΛI`. Collatz–Wielandt
//! quotients of the current positive iterate bracket `λ_R(α)` from both sides
//! and are used to pull `Λ` towards `−λ_R(α)` once the bracket is tight.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::discrete::{assemble_eigen_operator, AdvectionRegime, BandedLu, StripGrid};
use crate::error::{Error, Result};
use crate::model::{ModelParams, ReactionSpec};

/// Relative tolerance used by the property checks.
pub const TOL_NUM: f64 = 1e-8;

/// Smallest admissible gap between the shift and `−λ`, relative to `1 + |λ|`.
const SHIFT_FLOOR: f64 = 1e-6;

/// Iterations with a converged eigenvector but an oversized residual before giving up.
const STALL_LIMIT: usize = 10;

/// `Λ_ζ(α) = max{Dα² + ν − μ + μν/d, d(α² + 1) + M}`.
pub fn shift_bound(params: &ModelParams, spec: &ReactionSpec, alpha: f64) -> f64 {
    let (_, big_m) = spec.rate_bounds();
    shift_bound_with(params, big_m, alpha)
}

fn shift_bound_with(params: &ModelParams, big_m: f64, alpha: f64) -> f64 {
    let (big_d, d, mu, nu) = (params.d_road, params.d_field, params.mu, params.nu);
    let a2 = alpha * alpha;
    (big_d * a2 + nu - mu + mu * nu / d).max(d * (a2 + 1.0) + big_m)
}

/// Strip bounds `(lower, upper)` on `−λ_R(α)`, both strict.
pub fn strip_bounds(params: &ModelParams, spec: &ReactionSpec, alpha: f64) -> (f64, f64) {
    let (m, big_m) = spec.rate_bounds();
    let (big_d, d, mu) = (params.d_road, params.d_field, params.mu);
    let a2 = alpha * alpha;
    let r2 = params.width * params.width;
    let lower = (big_d * a2 - mu).max(d * a2 + m - d * PI * PI / r2);
    (lower, shift_bound_with(params, big_m, alpha))
}

/// Half-plane bounds `(lower, upper)` on `−λ(α)`.
pub fn halfplane_bounds(params: &ModelParams, spec: &ReactionSpec, alpha: f64) -> (f64, f64) {
    let (m, big_m) = spec.rate_bounds();
    let a2 = alpha * alpha;
    let lower = (params.d_road * a2 - params.mu).max(params.d_field * a2 + m);
    (lower, shift_bound_with(params, big_m, alpha))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenOptions {
    /// Bound on both the eigenvector sup-change and the relative residual.
    pub tol: f64,
    pub max_iter: usize,
    /// How many times the shift may be moved after the first factorization.
    pub max_refactors: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 5000,
            max_refactors: 8,
        }
    }
}

impl EigenOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

/// Principal eigenpair of the discrete twisted problem.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenPair {
    pub alpha: f64,
    pub lambda: f64,
    /// Road component, normalized to `‖p‖_∞ = 1`.
    pub p: Vec<f64>,
    /// Field component, row `j` at `q[j·nx..(j+1)·nx]` for `j < ny`.
    pub q: Vec<f64>,
    /// `‖A(p,q) − λ(p,q)‖_∞ / ‖(p,q)‖_∞`.
    pub residual: f64,
    pub iterations: usize,
    /// Final shift `Λ`.
    pub shift_used: f64,
    pub factorizations: usize,
    pub regime: AdvectionRegime,
}

impl EigenPair {
    /// `(p, q)` in canonical unknown order.
    pub fn vector(&self) -> Vec<f64> {
        let mut w = self.p.clone();
        w.extend_from_slice(&self.q);
        w
    }
}

fn sup(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Collatz–Wielandt bracket `min (Aw)_i/w_i ≤ λ ≤ max (Aw)_i/w_i`.
fn cw_bounds(w: &[f64], aw: &[f64]) -> (f64, f64) {
    w.iter()
        .zip(aw)
        .map(|(x, y)| y / x)
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r), hi.max(r)))
}

pub fn principal_eigen(
    params: &ModelParams,
    spec: &ReactionSpec,
    grid: &StripGrid,
    alpha: f64,
    tol: f64,
) -> Result<EigenPair> {
    principal_eigen_with(params, spec, grid, alpha, &EigenOptions::with_tol(tol), None)
}

/// Inverse iteration, optionally started from a positive `warm` vector.
pub fn principal_eigen_with(
    params: &ModelParams,
    spec: &ReactionSpec,
    grid: &StripGrid,
    alpha: f64,
    opts: &EigenOptions,
    warm: Option<&[f64]>,
) -> Result<EigenPair> {
    params.validate()?;
    if !(opts.tol > 0.0) {
        return Err(Error::Config(format!("eigen tolerance must be > 0 (got {})", opts.tol)));
    }
    if !alpha.is_finite() {
        return Err(Error::Domain(format!("alpha must be finite (got {alpha})")));
    }
    let a = assemble_eigen_operator(params, spec, grid, alpha);
    let n = a.dim;
    let mut w = match warm {
        Some(v) if v.len() == n && v.iter().all(|x| x.is_finite() && *x > 0.0) => v.to_vec(),
        _ => vec![1.0; n],
    };
    let s = sup(&w);
    w.iter_mut().for_each(|x| *x /= s);

    let mut aw = vec![0.0; n];
    a.apply(&w, &mut aw);
    let (mut lo, mut hi) = cw_bounds(&w, &aw);
    let floor = |lo: f64| SHIFT_FLOOR * (1.0 + lo.abs());

    let mut shift = shift_bound(params, spec, alpha) + 1.0;
    let mut factorizations = 0;
    let mut lu = None;
    let near = -lo + (hi - lo).max(floor(lo));
    if near < shift {
        if let Ok(f) = BandedLu::factor(grid, &a, 1.0, near) {
            lu = Some(f);
            shift = near;
            factorizations += 1;
        }
    }
    let mut lu = match lu {
        Some(f) => f,
        None => {
            factorizations += 1;
            BandedLu::factor(grid, &a, 1.0, shift)
                .map_err(|e| Error::Regime(format!("shifted operator is not an M-matrix: {e}")))?
        }
    };

    let mut y = vec![0.0; n];
    let mut refactors = 0;
    let mut stalled = 0;
    let mut prev_change = f64::NAN;
    for iter in 1..=opts.max_iter {
        y.copy_from_slice(&w);
        lu.solve_in_place(&mut y);
        if let Some(k) = y.iter().position(|v| !(*v > 0.0)) {
            return Err(Error::Regime(format!(
                "non-positive iterate {:e} at unknown {k} (alpha={alpha}, regime {:?}); refine the grid",
                y[k], a.regime
            )));
        }
        let rho = dot(&w, &y) / dot(&w, &w);
        let lambda = 1.0 / rho - shift;
        let ymax = y.iter().fold(0.0f64, |m, v| m.max(*v));
        let mut change = 0.0f64;
        for (wi, yi) in w.iter_mut().zip(&y) {
            let next = yi / ymax;
            change = change.max((next - *wi).abs());
            *wi = next;
        }
        a.apply(&w, &mut aw);
        let residual = w
            .iter()
            .zip(&aw)
            .fold(0.0f64, |m, (wi, awi)| m.max((awi - lambda * wi).abs()));
        (lo, hi) = cw_bounds(&w, &aw);

        if change < opts.tol && residual <= opts.tol {
            let pmax = sup(&w[..grid.nx]);
            w.iter_mut().for_each(|x| *x /= pmax);
            let q = w.split_off(grid.nx);
            return Ok(EigenPair {
                alpha,
                lambda,
                p: w,
                q,
                residual,
                iterations: iter,
                shift_used: shift,
                factorizations,
                regime: a.regime,
            });
        }
        // Once the iterate has stopped moving, the residual sits at its
        // rounding floor and further steps cannot lower it.
        stalled = if change < opts.tol { stalled + 1 } else { 0 };
        if stalled > STALL_LIMIT {
            return Err(Error::Convergence(format!(
                "residual stalled at {residual:e} above tol {:e} (alpha={alpha}); loosen tol or coarsen the grid",
                opts.tol
            )));
        }

        // A factorization costs about bandwidth/2 solves; refactor only when
        // the observed contraction predicts more steps than that.
        let rate = if prev_change > 0.0 { (change / prev_change).min(1.0) } else { 1.0 };
        prev_change = change;
        let remaining = if rate < 1.0 {
            (change / opts.tol).ln() / -rate.ln()
        } else {
            f64::INFINITY
        };
        let worth = remaining > (lu.bandwidth() as f64 / 4.0).max(8.0);
        let eta = (hi - lo).max(floor(lo));
        if refactors < opts.max_refactors && worth && shift + lo > 10.0 * eta {
            refactors += 1;
            let mut eta = eta;
            for _ in 0..4 {
                if let Ok(f) = BandedLu::factor(grid, &a, 1.0, -lo + eta) {
                    lu = f;
                    shift = -lo + eta;
                    factorizations += 1;
                    break;
                }
                eta *= 10.0;
            }
        }
        if iter == opts.max_iter {
            return Err(Error::Convergence(format!(
                "inverse iteration stalled after {iter} steps (alpha={alpha}, residual={residual:e}, change={change:e})"
            )));
        }
    }
    Err(Error::Convergence("inverse iteration ran zero steps".into()))
}

/// Repeated eigen solves on one grid, each warm-started from the last.
#[derive(Clone, Debug)]
pub struct EigenSolver {
    pub params: ModelParams,
    pub spec: ReactionSpec,
    pub grid: StripGrid,
    pub opts: EigenOptions,
    pub evaluations: usize,
    warm: Option<Vec<f64>>,
}

impl EigenSolver {
    pub fn new(params: ModelParams, spec: ReactionSpec, grid: StripGrid, opts: EigenOptions) -> Self {
        Self {
            params,
            spec,
            grid,
            opts,
            evaluations: 0,
            warm: None,
        }
    }

    pub fn solve(&mut self, alpha: f64) -> Result<EigenPair> {
        let pair = principal_eigen_with(
            &self.params,
            &self.spec,
            &self.grid,
            alpha,
            &self.opts,
            self.warm.as_deref(),
        )?;
        self.evaluations += 1;
        self.warm = Some(pair.vector());
        Ok(pair)
    }
}

/// How grids are built as the strip widens: fixed `nx` per period and fixed
/// `dy`, widths `r0·2^k` up to `r_max`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridPolicy {
    pub nx: usize,
    pub dy: f64,
    pub r0: f64,
    pub r_max: f64,
}

impl GridPolicy {
    pub fn schedule(&self) -> Result<Vec<f64>> {
        if !(self.r0 > 0.0 && self.r_max >= self.r0 && self.dy > 0.0) {
            return Err(Error::Config(format!(
                "grid policy needs 0 < r0 <= r_max and dy > 0 (got r0={}, r_max={}, dy={})",
                self.r0, self.r_max, self.dy
            )));
        }
        let mut out = vec![self.r0];
        while out.last().unwrap() * 2.0 <= self.r_max * (1.0 + 1e-12) {
            out.push(out.last().unwrap() * 2.0);
        }
        Ok(out)
    }

    pub fn grid(&self, params: &ModelParams) -> Result<StripGrid> {
        StripGrid::with_spacing(params, self.nx, self.dy)
    }

    pub fn refined(&self) -> Self {
        Self {
            nx: self.nx * 2,
            dy: self.dy / 2.0,
            ..*self
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HalfPlaneEigen {
    pub alpha: f64,
    /// The last computed `λ_R(α)`.
    pub lambda_inf: f64,
    /// `(4λ_{2R} − λ_R)/3` from the last two widths, an `O(R⁻²)` extrapolant.
    pub richardson: f64,
    pub r_schedule: Vec<f64>,
    pub lambdas: Vec<f64>,
    pub residuals: Vec<f64>,
    pub iterations: Vec<usize>,
    pub converged: bool,
}

/// One warm-started [`EigenSolver`] per width of the schedule.
#[derive(Clone, Debug)]
pub struct HalfPlaneSolver {
    pub policy: GridPolicy,
    pub tol_limit: f64,
    solvers: Vec<EigenSolver>,
}

impl HalfPlaneSolver {
    pub fn new(
        params: &ModelParams,
        spec: &ReactionSpec,
        policy: GridPolicy,
        tol_limit: f64,
        opts: EigenOptions,
    ) -> Result<Self> {
        if !(tol_limit > 0.0) {
            return Err(Error::Config(format!("tol_limit must be > 0 (got {tol_limit})")));
        }
        let solvers = policy
            .schedule()?
            .into_iter()
            .map(|r| {
                let p = params.with_width(r);
                Ok(EigenSolver::new(p, spec.clone(), policy.grid(&p)?, opts))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            policy,
            tol_limit,
            solvers,
        })
    }

    pub fn widths(&self) -> Vec<f64> {
        self.solvers.iter().map(|s| s.params.width).collect()
    }

    /// Strip eigenvalue at one width of the schedule.
    pub fn solve_strip(&mut self, index: usize, alpha: f64) -> Result<EigenPair> {
        self.solvers[index].solve(alpha)
    }

    pub fn solve(&mut self, alpha: f64) -> Result<HalfPlaneEigen> {
        let eig_tol = self.solvers[0].opts.tol;
        let mut out = HalfPlaneEigen {
            alpha,
            lambda_inf: f64::NAN,
            richardson: f64::NAN,
            r_schedule: Vec::new(),
            lambdas: Vec::new(),
            residuals: Vec::new(),
            iterations: Vec::new(),
            converged: false,
        };
        for solver in &mut self.solvers {
            let pair = solver.solve(alpha)?;
            if let Some(&prev) = out.lambdas.last() {
                if pair.lambda - prev > 10.0 * eig_tol {
                    return Err(Error::Numerical(format!(
                        "lambda_R increased from {prev} to {} at R={} (alpha={alpha}); grid too coarse",
                        pair.lambda, solver.params.width
                    )));
                }
            }
            out.r_schedule.push(solver.params.width);
            out.lambdas.push(pair.lambda);
            out.residuals.push(pair.residual);
            out.iterations.push(pair.iterations);
            let k = out.lambdas.len();
            if k >= 2 && (out.lambdas[k - 1] - out.lambdas[k - 2]).abs() < self.tol_limit {
                out.converged = true;
                break;
            }
        }
        let k = out.lambdas.len();
        out.lambda_inf = out.lambdas[k - 1];
        out.richardson = if k >= 2 {
            (4.0 * out.lambdas[k - 1] - out.lambdas[k - 2]) / 3.0
        } else {
            out.lambda_inf
        };

        let last = &self.solvers[k - 1];
        let (lower, upper) = halfplane_bounds(&last.params, &last.spec, alpha);
        let slack = last.params.d_field * PI * PI / (last.params.width * last.params.width);
        let minus = -out.lambda_inf;
        if minus > upper || minus < lower - slack {
            return Err(Error::Numerical(format!(
                "half-plane bounds violated at alpha={alpha}: -lambda={minus}, bounds [{lower}, {upper}], width slack {slack}"
            )));
        }
        Ok(out)
    }
}

pub fn halfplane_eigen(
    params: &ModelParams,
    spec: &ReactionSpec,
    alpha: f64,
    policy: &GridPolicy,
    tol_limit: f64,
) -> Result<HalfPlaneEigen> {
    HalfPlaneSolver::new(params, spec, *policy, tol_limit, EigenOptions::default())?.solve(alpha)
}

/// Outcome of one property in [`verify_eigen_properties`].
#[derive(Clone, Debug, PartialEq)]
pub struct PropertyCheck {
    pub name: &'static str,
    pub passed: bool,
    /// Smallest margin seen; negative values quantify the failure.
    pub worst_margin: f64,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenPropertyReport {
    pub checks: Vec<PropertyCheck>,
    pub policy: GridPolicy,
    /// The checks were rerun on a grid refined once after a failure.
    pub refined: bool,
}

impl EigenPropertyReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&PropertyCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Checks bounds, evenness, strict decrease in `R`, midpoint concavity in
/// `α` and monotonicity in `ζ` over every sampled `(α, R)`.
pub fn verify_eigen_properties(
    params: &ModelParams,
    spec: &ReactionSpec,
    policy: &GridPolicy,
    alphas: &[f64],
    r_list: &[f64],
) -> Result<EigenPropertyReport> {
    if alphas.is_empty() || r_list.is_empty() {
        return Err(Error::Config("alpha and R lists must be nonempty".into()));
    }
    let first = check_properties(params, spec, policy, alphas, r_list)?;
    if first.iter().all(|c| c.passed) {
        return Ok(EigenPropertyReport {
            checks: first,
            policy: *policy,
            refined: false,
        });
    }
    let finer = policy.refined();
    Ok(EigenPropertyReport {
        checks: check_properties(params, spec, &finer, alphas, r_list)?,
        policy: finer,
        refined: true,
    })
}

fn check_properties(
    params: &ModelParams,
    spec: &ReactionSpec,
    policy: &GridPolicy,
    alphas: &[f64],
    r_list: &[f64],
) -> Result<Vec<PropertyCheck>> {
    let mut base: Vec<f64> = alphas.to_vec();
    base.sort_by(f64::total_cmp);
    base.dedup();
    let mut mids = Vec::new();
    for (k, a1) in base.iter().enumerate() {
        for a2 in &base[k + 1..] {
            mids.push((a1 + a2) / 2.0);
        }
    }
    let mut all: Vec<f64> = base.iter().flat_map(|a| [*a, -*a]).chain(mids).collect();
    all.sort_by(f64::total_cmp);
    all.dedup();

    let mut widths = r_list.to_vec();
    widths.sort_by(f64::total_cmp);
    widths.dedup();

    let raised = spec.raised(0.1);
    let opts = EigenOptions::with_tol(1e-11);
    let mut tasks: Vec<(usize, f64, bool)> = Vec::new();
    for (ri, _) in widths.iter().enumerate() {
        tasks.extend(all.iter().map(|&a| (ri, a, false)));
        if raised.is_some() {
            tasks.extend(base.iter().map(|&a| (ri, a, true)));
        }
    }
    let results: Vec<f64> = tasks
        .par_iter()
        .map(|&(ri, alpha, up)| {
            let p = params.with_width(widths[ri]);
            let grid = policy.grid(&p)?;
            let s = if up { raised.as_ref().unwrap() } else { spec };
            Ok(principal_eigen_with(&p, s, &grid, alpha, &opts, None)?.lambda)
        })
        .collect::<Result<_>>()?;
    let lookup = |ri: usize, alpha: f64, up: bool| -> f64 {
        let k = tasks
            .iter()
            .position(|&(r, a, u)| r == ri && a == alpha && u == up)
            .expect("eigenvalue was scheduled");
        results[k]
    };

    let mut bounds = PropertyCheck::new("bounds");
    let mut evenness = PropertyCheck::new("evenness");
    let mut decreasing = PropertyCheck::new("decreasing_in_R");
    let mut concavity = PropertyCheck::new("concavity");
    let mut zeta = PropertyCheck::new("monotone_in_zeta");

    for (ri, &r) in widths.iter().enumerate() {
        let p = params.with_width(r);
        for &a in &all {
            let (lower, upper) = strip_bounds(&p, spec, a);
            let minus = -lookup(ri, a, false);
            bounds.record((minus - lower).min(upper - minus), |m| m > 0.0);
        }
        for &a in &base {
            let (l1, l2) = (lookup(ri, a, false), lookup(ri, -a, false));
            let rel = (l1 - l2).abs() / l1.abs().max(1.0);
            evenness.record(TOL_NUM - rel, |m| m >= 0.0);
            if raised.is_some() {
                zeta.record(l1 - lookup(ri, a, true), |m| m >= -TOL_NUM);
            }
        }
        for (k, &a1) in base.iter().enumerate() {
            for &a2 in &base[k + 1..] {
                let mid = lookup(ri, (a1 + a2) / 2.0, false);
                let avg = 0.5 * (lookup(ri, a1, false) + lookup(ri, a2, false));
                concavity.record(mid - avg, |m| m >= -TOL_NUM);
            }
        }
        if ri + 1 < widths.len() {
            for &a in &all {
                decreasing.record(lookup(ri, a, false) - lookup(ri + 1, a, false), |m| m > 0.0);
            }
        }
    }
    let mut checks = vec![bounds, evenness, decreasing, concavity];
    if raised.is_some() {
        checks.push(zeta);
    }
    Ok(checks)
}

impl PropertyCheck {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            passed: true,
            worst_margin: f64::INFINITY,
            samples: 0,
        }
    }

    fn record(&mut self, margin: f64, ok: impl Fn(f64) -> bool) {
        self.samples += 1;
        self.worst_margin = self.worst_margin.min(margin);
        self.passed &= ok(margin);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete::build_grid;
    use approx::assert_relative_eq;

    #[test]
    fn shift_bound_formula() {
        let flat = ReactionSpec::homogeneous(1.0, 1.0);
        assert_eq!(shift_bound(&ModelParams::unit(1.0), &flat, 0.0), 2.0);
        let p = ModelParams {
            d_road: 4.0,
            ..ModelParams::unit(1.0)
        };
        assert_eq!(shift_bound(&p, &flat, 1.0), 5.0);
        assert_eq!(shift_bound(&p, &flat, -1.0), 5.0);
    }

    #[test]
    fn schedule_doubles_up_to_cap() {
        let g = GridPolicy {
            nx: 8,
            dy: 0.1,
            r0: 5.0,
            r_max: 40.0,
        };
        assert_eq!(g.schedule().unwrap(), vec![5.0, 10.0, 20.0, 40.0]);
        let g = GridPolicy { r_max: 39.0, ..g };
        assert_eq!(g.schedule().unwrap(), vec![5.0, 10.0, 20.0]);
    }

    #[test]
    fn eigenpair_is_positive_and_normalized() {
        let p = ModelParams::unit(3.0);
        let spec = ReactionSpec::cosine(1.0, 0.5, 1.0);
        let g = build_grid(&p, 16, 30).unwrap();
        let e = principal_eigen(&p, &spec, &g, 0.6, 1e-10).unwrap();
        assert!(e.p.iter().chain(&e.q).all(|v| *v > 0.0));
        assert_relative_eq!(sup(&e.p), 1.0);
        assert!(e.residual <= 1e-10);
        let (lower, upper) = strip_bounds(&p, &spec, 0.6);
        assert!(lower < -e.lambda && -e.lambda < upper);
    }

    #[test]
    fn warm_start_reproduces_cold_value() {
        let p = ModelParams::unit(4.0);
        let spec = ReactionSpec::cosine(1.0, 0.5, 1.0);
        let g = build_grid(&p, 8, 20).unwrap();
        let mut solver = EigenSolver::new(p, spec.clone(), g.clone(), EigenOptions::default());
        solver.solve(0.2).unwrap();
        let warm = solver.solve(0.9).unwrap();
        let cold = principal_eigen(&p, &spec, &g, 0.9, 1e-10).unwrap();
        assert_relative_eq!(warm.lambda, cold.lambda, max_relative = 1e-9);
    }
}
