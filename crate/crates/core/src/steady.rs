//! Nontrivial steady state `(U_R, V_R)` on one period, bracketed by monotone
//! time integration from the constant supersolution and from a subsolution.

use std::f64::consts::PI;

use crate::discrete::{StripGrid, XBoundary};
use crate::error::{Error, Result};
use crate::model::{ModelParams, ReactionSpec};
use crate::simulate::{kpp_subsolution, SimConfig, State, Stepper};
use crate::spectral::{principal_eigen, EigenPair};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PersistenceCheck {
    pub holds: bool,
    /// `m − dπ²/(4R²)`.
    pub margin: f64,
}

/// The sufficient persistence condition `m > dπ²/(4R²)`.
pub fn persistence_check(params: &ModelParams, spec: &ReactionSpec) -> PersistenceCheck {
    let (m, _) = spec.rate_bounds();
    let r = params.width;
    let margin = m - params.d_field * PI * PI / (4.0 * r * r);
    PersistenceCheck {
        holds: margin > 0.0,
        margin,
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SteadyOptions {
    pub tol: f64,
    /// Time step of the monotone integrations; `None` picks `0.5/M`.
    pub dt: Option<f64>,
    pub max_steps: usize,
}

impl Default for SteadyOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            dt: None,
            max_steps: 200_000,
        }
    }
}

impl SteadyOptions {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

/// Which start produced the lower bracket.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LowerStart {
    /// `ε·` the compactly supported cosine subsolution, tiled.
    Subsolution,
    /// `ε·` the principal eigenvector at `α = 0`, used when `m ≤ dπ²/(4R²)`
    /// but `λ_R(0) < 0`.
    Eigenvector,
    /// No lower start: the solution from above died out.
    None,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SteadyState {
    pub grid: StripGrid,
    /// Road profile over one period.
    pub u: Vec<f64>,
    /// Field profile, row `j` at `v[j·nx..(j+1)·nx]`, `j < ny`.
    pub v: Vec<f64>,
    /// Sup-norm of the stationary equations at the returned state.
    pub residual: f64,
    /// Sup-distance between the upper and lower limits.
    pub bracket_gap: f64,
    pub persistence: PersistenceCheck,
    /// A nontrivial steady state was found.
    pub persistent: bool,
    pub lower_start: LowerStart,
    /// `ε` of the lower start.
    pub epsilon: f64,
    pub steps_upper: usize,
    pub steps_lower: usize,
}

impl SteadyState {
    pub fn as_state(&self) -> State {
        State {
            t: 0.0,
            u: self.u.clone(),
            v: self.v.clone(),
        }
    }

    /// Road value at node `i` of a grid sharing this x-spacing.
    pub fn u_tiled(&self, i: usize) -> f64 {
        self.u[i % self.grid.nx]
    }

    pub fn v_tiled(&self, i: usize, j: usize) -> f64 {
        self.v[j * self.grid.nx + i % self.grid.nx]
    }
}

/// Integrates until the per-unit-time increment falls below `tol`.
fn integrate(stepper: &mut Stepper, state: &mut State, tol: f64, max_steps: usize) -> Result<usize> {
    let dt = stepper.dt;
    for n in 1..=max_steps {
        let prev = state.clone();
        stepper.advance(state)?;
        if state.distance(&prev) / dt < tol {
            return Ok(n);
        }
    }
    Err(Error::Convergence(format!(
        "monotone integration did not settle within {max_steps} steps"
    )))
}

/// Largest `ε = 2^-k` for which one step raises `ε·start` at every node.
fn lower_epsilon(stepper: &mut Stepper, start: &State) -> Result<(f64, State)> {
    let mut eps = 1.0;
    for _ in 0..60 {
        let scaled = State {
            t: 0.0,
            u: start.u.iter().map(|x| eps * x).collect(),
            v: start.v.iter().map(|x| eps * x).collect(),
        };
        let mut next = scaled.clone();
        stepper.advance(&mut next)?;
        if scaled.le(&next) {
            return Ok((eps, scaled));
        }
        eps *= 0.5;
    }
    Err(Error::Convergence("no epsilon in 2^-60..1 gives an increasing lower start".into()))
}

pub fn compute_steady(params: &ModelParams, spec: &ReactionSpec, grid: &StripGrid, tol: f64) -> Result<SteadyState> {
    compute_steady_with(params, spec, grid, &SteadyOptions::with_tol(tol))
}

pub fn compute_steady_with(
    params: &ModelParams,
    spec: &ReactionSpec,
    grid: &StripGrid,
    opts: &SteadyOptions,
) -> Result<SteadyState> {
    if grid.boundary != XBoundary::Periodic || grid.copies != 1 {
        return Err(Error::Config("steady states are computed on a single periodic cell".into()));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::Config(format!("steady tolerance must be > 0 (got {})", opts.tol)));
    }
    let (_, big_m) = spec.rate_bounds();
    let dt = opts.dt.unwrap_or(if big_m > 0.0 { 0.5 / big_m } else { 0.5 });
    let config = SimConfig {
        dt,
        t_final: 0.0,
        ..SimConfig::default()
    };
    let mut stepper = Stepper::new(params, spec, grid, &config)?;
    let persistence = persistence_check(params, spec);

    let (cap_u, cap_v) = params.carrying_capacity();
    let mut upper = State::constant(grid, cap_u, cap_v);
    let steps_upper = integrate(&mut stepper, &mut upper, opts.tol, opts.max_steps)?;

    let (lower_start, start) = if persistence.holds {
        (LowerStart::Subsolution, kpp_subsolution(params, spec, grid, 1.0, 0.0)?)
    } else {
        let eig = principal_eigen(params, spec, grid, 0.0, 1e-10)?;
        if eig.lambda >= 0.0 || upper.road_sup().max(upper.field_sup()) < 10.0 * opts.tol {
            let residual = stepper.stationary_residual(&upper);
            let zero = State::zeros(grid);
            return Ok(SteadyState {
                grid: grid.clone(),
                u: zero.u,
                v: zero.v,
                residual,
                bracket_gap: upper.distance(&State::zeros(grid)),
                persistence,
                persistent: false,
                lower_start: LowerStart::None,
                epsilon: 0.0,
                steps_upper,
                steps_lower: 0,
            });
        }
        (LowerStart::Eigenvector, eigen_start(&eig))
    };
    let (epsilon, mut lower) = lower_epsilon(&mut stepper, &start)?;
    let mut steps_lower = 0;
    let mut gap;
    // Both limits are Cauchy by now or soon; keep stepping both until the
    // bracket itself has closed.
    loop {
        let prev_u = upper.clone();
        let prev_l = lower.clone();
        stepper.advance(&mut upper)?;
        stepper.advance(&mut lower)?;
        steps_lower += 1;
        let settled = upper.distance(&prev_u) / dt < opts.tol && lower.distance(&prev_l) / dt < opts.tol;
        gap = upper.distance(&lower);
        if settled && gap < 10.0 * opts.tol {
            break;
        }
        if steps_lower >= opts.max_steps {
            return Err(Error::Convergence(format!(
                "steady bracket did not close within {} steps: gap {gap:e}",
                opts.max_steps
            )));
        }
    }
    let mid = State {
        t: 0.0,
        u: upper.u.iter().zip(&lower.u).map(|(a, b)| 0.5 * (a + b)).collect(),
        v: upper.v.iter().zip(&lower.v).map(|(a, b)| 0.5 * (a + b)).collect(),
    };
    let residual = stepper.stationary_residual(&mid);
    Ok(SteadyState {
        grid: grid.clone(),
        u: mid.u,
        v: mid.v,
        residual,
        bracket_gap: gap,
        persistence,
        persistent: true,
        lower_start,
        epsilon,
        steps_upper,
        steps_lower,
    })
}

fn eigen_start(eig: &EigenPair) -> State {
    let scale = eig.p.iter().chain(&eig.q).fold(0.0f64, |m, x| m.max(*x));
    State {
        t: 0.0,
        u: eig.p.iter().map(|x| x / scale).collect(),
        v: eig.q.iter().map(|x| x / scale).collect(),
    }
}
