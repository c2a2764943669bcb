//! Time stepping of the truncated field-road system.
//!
//! The linear part (diffusion, exchange, Dirichlet cap) is treated with
//! backward Euler and the reaction explicitly, so one factorization of
//! `I + dt·A` serves the whole run.

use std::f64::consts::PI;

use crate::discrete::{assemble_evolution_operator, BandedLu, DiscreteOperator, StripGrid, XBoundary};
use crate::error::{Error, Result};
use crate::model::{ModelParams, ReactionSpec};

/// Coupled unknowns at one time. `v` holds rows `j < ny`, row `j` at
/// `v[j·nx..(j+1)·nx]`; the row `j = ny` is identically zero.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub t: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl State {
    pub fn zeros(grid: &StripGrid) -> Self {
        Self {
            t: 0.0,
            u: vec![0.0; grid.nx],
            v: vec![0.0; grid.nx * grid.ny],
        }
    }

    /// The constant pair `(u, v)` at every stored node.
    pub fn constant(grid: &StripGrid, u: f64, v: f64) -> Self {
        Self {
            t: 0.0,
            u: vec![u; grid.nx],
            v: vec![v; grid.nx * grid.ny],
        }
    }

    pub fn from_vector(t: f64, nx: usize, mut w: Vec<f64>) -> Self {
        let v = w.split_off(nx);
        Self { t, u: w, v }
    }

    /// `(u, v)` in canonical unknown order.
    pub fn to_vector(&self) -> Vec<f64> {
        let mut w = Vec::with_capacity(self.u.len() + self.v.len());
        w.extend_from_slice(&self.u);
        w.extend_from_slice(&self.v);
        w
    }

    pub fn field(&self, nx: usize, i: usize, j: usize) -> f64 {
        self.v[j * nx + i]
    }

    pub fn road_sup(&self) -> f64 {
        self.u.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn field_sup(&self) -> f64 {
        self.v.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// `max(sup|u − other.u|, sup|v − other.v|)`.
    pub fn distance(&self, other: &State) -> f64 {
        self.u
            .iter()
            .zip(&other.u)
            .chain(self.v.iter().zip(&other.v))
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }

    /// `self ≤ other` at every stored node.
    pub fn le(&self, other: &State) -> bool {
        self.u.iter().zip(&other.u).all(|(a, b)| a <= b) && self.v.iter().zip(&other.v).all(|(a, b)| a <= b)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    /// Backward Euler for the linear part, explicit reaction.
    ImexBe,
    /// Forward Euler throughout.
    Explicit,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub t_final: f64,
    pub scheme: Scheme,
    /// Snapshot stride in steps.
    pub record_every: usize,
    /// Snapshots before this time are not kept (the initial one always is).
    pub record_from: f64,
    /// Periods tiled in x: one means a periodic cell, more a Neumann window.
    pub domain_copies: usize,
    /// Abort when the solution reaches `0.1·(ν/μ, 1)` near the window ends.
    pub edge_guard: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.05,
            t_final: 10.0,
            scheme: Scheme::ImexBe,
            record_every: 10,
            record_from: 0.0,
            domain_copies: 1,
            edge_guard: true,
        }
    }
}

/// Number of periods at each window end watched by the edge guard.
pub const GUARD_PERIODS: usize = 5;

/// Largest stable forward-Euler step `1/(2·max(D,d)·(1/dx² + 1/dy²) + M)`.
pub fn explicit_dt_max(params: &ModelParams, spec: &ReactionSpec, grid: &StripGrid) -> f64 {
    let (_, big_m) = spec.rate_bounds();
    let k = params.d_road.max(params.d_field);
    1.0 / (2.0 * k * (1.0 / (grid.dx * grid.dx) + 1.0 / (grid.dy * grid.dy)) + big_m.max(0.0))
}

/// Grid for a run: the periodic cell for one copy, a Neumann window otherwise.
pub fn simulation_grid(params: &ModelParams, nx_period: usize, ny: usize, copies: usize) -> Result<StripGrid> {
    if copies <= 1 {
        crate::discrete::build_grid(params, nx_period, ny)
    } else {
        StripGrid::window(params, nx_period, ny, copies)
    }
}

impl SimConfig {
    pub fn validate(&self, params: &ModelParams, spec: &ReactionSpec, grid: &StripGrid) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::Config(format!("dt must be > 0 (got {})", self.dt)));
        }
        if !(self.t_final.is_finite() && self.t_final >= 0.0) {
            return Err(Error::Config(format!("T must be >= 0 (got {})", self.t_final)));
        }
        if self.record_every == 0 {
            return Err(Error::Config("record_every must be >= 1".into()));
        }
        if self.domain_copies != grid.copies.max(1) {
            return Err(Error::Config(format!(
                "domain_copies = {} does not match the grid ({} periods)",
                self.domain_copies, grid.copies
            )));
        }
        let (_, big_m) = spec.rate_bounds();
        if big_m > 0.0 && self.dt > 0.5 / big_m {
            return Err(Error::Config(format!(
                "dt must be <= 0.5/M = {} (got {})",
                0.5 / big_m,
                self.dt
            )));
        }
        if self.scheme == Scheme::Explicit {
            let dt_max = explicit_dt_max(params, spec, grid);
            if self.dt > dt_max {
                return Err(Error::Config(format!(
                    "dt must be <= CFL bound {dt_max} for the explicit scheme (got {})",
                    self.dt
                )));
            }
        }
        Ok(())
    }
}

/// Reusable stepper holding the factorized implicit operator.
#[derive(Debug)]
pub struct Stepper {
    pub grid: StripGrid,
    pub dt: f64,
    pub scheme: Scheme,
    spec: ReactionSpec,
    op: DiscreteOperator,
    lu: Option<BandedLu>,
    xs: Vec<f64>,
    work: Vec<f64>,
}

impl Stepper {
    pub fn new(params: &ModelParams, spec: &ReactionSpec, grid: &StripGrid, config: &SimConfig) -> Result<Self> {
        params.validate()?;
        spec.validate()?;
        config.validate(params, spec, grid)?;
        let op = assemble_evolution_operator(params, grid);
        let lu = match config.scheme {
            Scheme::ImexBe => Some(
                BandedLu::factor(grid, &op, config.dt, 1.0)
                    .map_err(|e| Error::Numerical(format!("factorizing I + dt·A failed: {e}")))?,
            ),
            Scheme::Explicit => None,
        };
        Ok(Self {
            grid: grid.clone(),
            dt: config.dt,
            scheme: config.scheme,
            spec: spec.clone(),
            op,
            lu,
            xs: (0..grid.nx).map(|i| grid.x(i)).collect(),
            work: vec![0.0; grid.dim()],
        })
    }

    /// Advances `state` by one step in place.
    pub fn advance(&mut self, state: &mut State) -> Result<()> {
        let nx = self.grid.nx;
        let dt = self.dt;
        let mut w = state.to_vector();
        if self.scheme == Scheme::Explicit {
            self.op.apply(&w, &mut self.work);
            for (wi, awi) in w.iter_mut().zip(&self.work) {
                *wi -= dt * awi;
            }
        }
        let old_v = &state.v;
        for (k, (wk, &vk)) in w[nx..].iter_mut().zip(old_v).enumerate() {
            *wk += dt * self.spec.f_eval(self.xs[k % nx], vk)?;
        }
        if let Some(lu) = &mut self.lu {
            lu.solve_in_place(&mut w);
        }
        if let Some(k) = w.iter().position(|x| !x.is_finite()) {
            return Err(Error::Numerical(format!("non-finite value at unknown {k} after step")));
        }
        let t = state.t + dt;
        *state = State::from_vector(t, nx, w);
        Ok(())
    }

    /// `sup |A_lin w − f(w)|` over all rows, the stationary-equation residual.
    pub fn stationary_residual(&self, state: &State) -> f64 {
        let nx = self.grid.nx;
        let w = state.to_vector();
        let mut aw = vec![0.0; w.len()];
        self.op.apply(&w, &mut aw);
        let mut res = 0.0f64;
        for (k, (awk, wk)) in aw.iter().zip(&w).enumerate() {
            let f = if k < nx {
                0.0
            } else {
                self.spec.f_unchecked(self.xs[(k - nx) % nx], *wk)
            };
            res = res.max((awk - f).abs());
        }
        res
    }
}

/// One step from `state`; factorizes the implicit operator on every call,
/// so prefer [`Stepper`] inside loops.
pub fn step(
    state: &State,
    params: &ModelParams,
    spec: &ReactionSpec,
    grid: &StripGrid,
    config: &SimConfig,
) -> Result<State> {
    let mut stepper = Stepper::new(params, spec, grid, config)?;
    let mut next = state.clone();
    stepper.advance(&mut next)?;
    Ok(next)
}

/// Quantities recorded after every step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Probe {
    RoadSup,
    FieldSup,
    /// Rightmost road position where `u ≥ level`.
    FrontRight { level: f64 },
    /// Leftmost road position where `u ≥ level`.
    FrontLeft { level: f64 },
}

impl Probe {
    pub fn name(&self) -> &'static str {
        match self {
            Self::RoadSup => "road_sup",
            Self::FieldSup => "field_sup",
            Self::FrontRight { .. } => "front_right",
            Self::FrontLeft { .. } => "front_left",
        }
    }

    /// Probe value; front probes give NaN when the level is not attained.
    pub fn measure(&self, grid: &StripGrid, state: &State) -> f64 {
        let xs: Vec<f64> = (0..grid.nx).map(|i| grid.x(i)).collect();
        match *self {
            Self::RoadSup => state.road_sup(),
            Self::FieldSup => state.field_sup(),
            Self::FrontRight { level } => {
                crate::diagnostics::crossings(&xs, &state.u, level).map_or(f64::NAN, |(_, r)| r)
            }
            Self::FrontLeft { level } => {
                crate::diagnostics::crossings(&xs, &state.u, level).map_or(f64::NAN, |(l, _)| l)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProbeSeries {
    pub name: &'static str,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub grid: StripGrid,
    pub config: SimConfig,
    pub snapshots: Vec<State>,
    pub probes: Vec<ProbeSeries>,
    pub final_state: State,
}

impl Trajectory {
    /// Time between consecutive snapshots after the first.
    pub fn snapshot_interval(&self) -> f64 {
        self.config.dt * self.config.record_every as f64
    }
}

/// Runs `step` until `t ≥ T`, keeping every `record_every`-th state.
pub fn simulate(
    init: &State,
    params: &ModelParams,
    spec: &ReactionSpec,
    grid: &StripGrid,
    config: &SimConfig,
    probes: &[Probe],
) -> Result<Trajectory> {
    check_state(init, grid)?;
    let mut stepper = Stepper::new(params, spec, grid, config)?;
    let n_steps = (config.t_final / config.dt - 1e-9).ceil().max(0.0) as usize;
    let t0 = init.t;
    let mut state = init.clone();
    let mut series: Vec<ProbeSeries> = probes
        .iter()
        .map(|p| ProbeSeries {
            name: p.name(),
            times: vec![t0],
            values: vec![p.measure(grid, &state)],
        })
        .collect();
    let mut snapshots = vec![state.clone()];
    let guard = EdgeGuard::new(params, grid, config);

    for n in 1..=n_steps {
        stepper.advance(&mut state)?;
        // Accumulating dt drifts; pin the clock to the step count.
        state.t = t0 + n as f64 * config.dt;
        for (p, s) in probes.iter().zip(&mut series) {
            s.times.push(state.t);
            s.values.push(p.measure(grid, &state));
        }
        if n % config.record_every == 0 && state.t >= config.record_from - 1e-12 {
            snapshots.push(state.clone());
        }
        if let Some(g) = &guard {
            g.check(grid, &state)?;
        }
    }
    Ok(Trajectory {
        grid: grid.clone(),
        config: *config,
        snapshots,
        probes: series,
        final_state: state,
    })
}

fn check_state(state: &State, grid: &StripGrid) -> Result<()> {
    if state.u.len() != grid.nx || state.v.len() != grid.nx * grid.ny {
        return Err(Error::Config(format!(
            "state shape ({}, {}) does not match grid ({}, {})",
            state.u.len(),
            state.v.len(),
            grid.nx,
            grid.nx * grid.ny
        )));
    }
    if state.u.iter().chain(&state.v).any(|x| !(*x >= 0.0) || !x.is_finite()) {
        return Err(Error::Domain("initial state must be finite and nonnegative".into()));
    }
    Ok(())
}

struct EdgeGuard {
    margin: usize,
    u_level: f64,
    v_level: f64,
}

impl EdgeGuard {
    fn new(params: &ModelParams, grid: &StripGrid, config: &SimConfig) -> Option<Self> {
        if !config.edge_guard || grid.boundary != XBoundary::Neumann {
            return None;
        }
        // Small windows cannot spare five periods a side; watch a quarter.
        let periods = GUARD_PERIODS.min(grid.copies / 4).max(1);
        Some(Self {
            margin: periods * grid.nx_period(),
            u_level: 0.1 * params.nu / params.mu,
            v_level: 0.1,
        })
    }

    fn check(&self, grid: &StripGrid, state: &State) -> Result<()> {
        let nx = grid.nx;
        let near_end = |i: usize| i < self.margin || i + self.margin >= nx;
        let hit_u = (0..nx).filter(|&i| near_end(i)).any(|i| state.u[i] >= self.u_level);
        let hit_v = (0..grid.ny).any(|j| {
            (0..nx)
                .filter(|&i| near_end(i))
                .any(|i| state.v[j * nx + i] >= self.v_level)
        });
        if hit_u || hit_v {
            return Err(Error::Numerical(format!(
                "front came within {} nodes of the window end at t={}; enlarge domain_copies",
                self.margin, state.t
            )));
        }
        Ok(())
    }
}

/// `cos²` taper of half-width `width` around `center`, times
/// `cos(πy/(2R))` in the field.
pub fn bump_init(
    params: &ModelParams,
    grid: &StripGrid,
    center: f64,
    width: f64,
    amplitude_u: f64,
    amplitude_v: f64,
) -> Result<State> {
    if !(width > 0.0) {
        return Err(Error::Config(format!("bump width must be > 0 (got {width})")));
    }
    let (cap_u, cap_v) = params.carrying_capacity();
    if !(0.0..=cap_u).contains(&amplitude_u) || !(0.0..=cap_v).contains(&amplitude_v) {
        return Err(Error::Config(format!(
            "bump amplitudes ({amplitude_u}, {amplitude_v}) must lie in [0, {cap_u}] x [0, {cap_v}]"
        )));
    }
    let taper = |x: f64| {
        let s = (x - center) / width;
        if s.abs() < 1.0 {
            (0.5 * PI * s).cos().powi(2)
        } else {
            0.0
        }
    };
    let mut state = State::zeros(grid);
    for i in 0..grid.nx {
        let phi = taper(grid.x(i));
        state.u[i] = amplitude_u * phi;
        for j in 0..grid.ny {
            let psi = (0.5 * PI * grid.y(j) / grid.width).cos();
            state.v[j * grid.nx + i] = amplitude_v * phi * psi;
        }
    }
    Ok(state)
}

/// Parameters of the compactly supported subsolution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SubsolutionShape {
    pub beta: f64,
    pub omega: f64,
    pub delta: f64,
    /// Field factor at `y`: `μ sin(β(R−y)) / (dβcos(βR) + ν sin(βR))`.
    pub denom: f64,
}

impl SubsolutionShape {
    pub fn new(params: &ModelParams, spec: &ReactionSpec) -> Result<Self> {
        let (m, _) = spec.rate_bounds();
        let (big_d, d, mu, nu, r) = (params.d_road, params.d_field, params.mu, params.nu, params.width);
        let ratio = m * 4.0 * r * r / (d * PI * PI);
        if !(ratio > 1.0) {
            return Err(Error::Domain(format!(
                "no subsolution: m = {m} does not exceed d·π²/(4R²) = {}",
                d * PI * PI / (4.0 * r * r)
            )));
        }
        // β = s·π/(2R), s = 1.05 unless the margin above threshold is thinner.
        let mut s = 1.05f64.min(ratio.powf(0.25));
        for _ in 0..60 {
            let beta = s * PI / (2.0 * r);
            let delta = (m / 10.0).min(0.5 * (m - d * beta * beta));
            let (sn, cs) = (beta * r).sin_cos();
            let denom = d * beta * cs + nu * sn;
            if denom > 0.0 {
                let road = -mu * d * beta * cs / (big_d * denom);
                let field = (m - delta) / d - beta * beta;
                let kappa = road.min(field);
                if kappa > 0.0 {
                    return Ok(Self {
                        beta,
                        omega: kappa.sqrt(),
                        delta,
                        denom,
                    });
                }
            }
            s = 1.0 + 0.5 * (s - 1.0);
        }
        Err(Error::Domain("no admissible beta for the subsolution".into()))
    }

    /// Half-width `π/(2ω)` of the support in x.
    pub fn half_width(&self) -> f64 {
        PI / (2.0 * self.omega)
    }

    fn road(&self, s: f64) -> f64 {
        if (self.omega * s).abs() < 0.5 * PI {
            (self.omega * s).cos()
        } else {
            0.0
        }
    }

    fn field(&self, params: &ModelParams, y: f64) -> f64 {
        params.mu * (self.beta * (params.width - y)).sin() / self.denom
    }
}

/// `ε·cos(ω(x−c))·(1, μ sin(β(R−y))/(dβcos(βR)+ν sin(βR)))` on
/// `|x−c| < π/(2ω)`. On a periodic grid the bump is replaced by the
/// pointwise maximum of its `L`-translates.
pub fn kpp_subsolution(
    params: &ModelParams,
    spec: &ReactionSpec,
    grid: &StripGrid,
    epsilon: f64,
    center: f64,
) -> Result<State> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::Config(format!("epsilon must be > 0 (got {epsilon})")));
    }
    let shape = SubsolutionShape::new(params, spec)?;
    let profile = |x: f64| match grid.boundary {
        XBoundary::Neumann => shape.road(x - center),
        XBoundary::Periodic => {
            let l = grid.length();
            let reach = (shape.half_width() / l).ceil() as i64 + 1;
            (-reach..=reach)
                .map(|k| shape.road(x - center + k as f64 * l))
                .fold(0.0, f64::max)
        }
    };
    let mut state = State::zeros(grid);
    for i in 0..grid.nx {
        let phi = epsilon * profile(grid.x(i));
        state.u[i] = phi;
        for j in 0..grid.ny {
            state.v[j * grid.nx + i] = phi * shape.field(params, grid.y(j));
        }
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discrete::build_grid;

    fn cfg(dt: f64, t: f64) -> SimConfig {
        SimConfig {
            dt,
            t_final: t,
            ..SimConfig::default()
        }
    }

    #[test]
    fn zero_is_stationary() {
        let p = ModelParams::unit(2.0);
        let spec = ReactionSpec::homogeneous(1.0, 1.0);
        let g = build_grid(&p, 8, 8).unwrap();
        let mut st = Stepper::new(&p, &spec, &g, &cfg(0.1, 1.0)).unwrap();
        let mut s = State::zeros(&g);
        for _ in 0..20 {
            st.advance(&mut s).unwrap();
        }
        assert!(s.u.iter().chain(&s.v).all(|x| *x == 0.0));
    }

    #[test]
    fn above_capacity_decreases() {
        let p = ModelParams::unit(3.0);
        let spec = ReactionSpec::homogeneous(1.0, 1.0);
        let g = build_grid(&p, 8, 12).unwrap();
        let mut st = Stepper::new(&p, &spec, &g, &cfg(0.1, 10.0)).unwrap();
        let mut s = State::constant(&g, 2.0, 2.0);
        for _ in 0..100 {
            let prev = s.clone();
            st.advance(&mut s).unwrap();
            assert!(s.le(&prev));
            assert!(s.road_sup() < prev.road_sup() && s.field_sup() < prev.field_sup());
        }
    }

    #[test]
    fn dt_limits_are_enforced() {
        let p = ModelParams::unit(2.0);
        let spec = ReactionSpec::homogeneous(1.0, 1.0);
        let g = build_grid(&p, 8, 8).unwrap();
        assert!(matches!(Stepper::new(&p, &spec, &g, &cfg(0.6, 1.0)), Err(Error::Config(_))));
        let explicit = SimConfig {
            scheme: Scheme::Explicit,
            ..cfg(0.01, 1.0)
        };
        assert!(matches!(Stepper::new(&p, &spec, &g, &explicit), Err(Error::Config(_))));
        let ok = SimConfig {
            dt: explicit_dt_max(&p, &spec, &g),
            ..explicit
        };
        assert!(Stepper::new(&p, &spec, &g, &ok).is_ok());
    }

    #[test]
    fn zero_horizon_keeps_initial_snapshot() {
        let p = ModelParams::unit(2.0);
        let spec = ReactionSpec::homogeneous(1.0, 1.0);
        let g = build_grid(&p, 8, 8).unwrap();
        let init = bump_init(&p, &g, 0.5, 0.3, 0.5, 0.5).unwrap();
        let traj = simulate(&init, &p, &spec, &g, &cfg(0.1, 0.0), &[Probe::RoadSup]).unwrap();
        assert_eq!(traj.snapshots, vec![init]);
        assert_eq!(traj.probes[0].values.len(), 1);
    }

    #[test]
    fn bump_support_and_amplitude() {
        let p = ModelParams::unit(2.0);
        let g = StripGrid::window(&p, 8, 8, 4).unwrap();
        let s = bump_init(&p, &g, 2.0, 0.5, 0.8, 0.6).unwrap();
        for i in 0..g.nx {
            if (g.x(i) - 2.0).abs() >= 0.5 {
                assert_eq!(s.u[i], 0.0);
                assert!((0..g.ny).all(|j| s.field(g.nx, i, j) == 0.0));
            }
        }
        assert_eq!(s.u[16], 0.8);
        assert_eq!(s.field(g.nx, 16, 0), 0.6);
        assert!(bump_init(&p, &g, 2.0, 0.5, 0.0, 0.0).unwrap().road_sup() == 0.0);
        assert!(matches!(bump_init(&p, &g, 2.0, 0.5, 1.5, 0.5), Err(Error::Config(_))));
    }

    #[test]
    fn subsolution_needs_persistence() {
        let spec = ReactionSpec::homogeneous(1.0, 1.0);
        let g_small = build_grid(&ModelParams::unit(1.0), 8, 8).unwrap();
        let err = kpp_subsolution(&ModelParams::unit(1.0), &spec, &g_small, 0.1, 0.5).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));

        let p = ModelParams::unit(PI);
        let g = StripGrid::window(&p, 8, 16, 8).unwrap();
        let s = kpp_subsolution(&p, &spec, &g, 0.1, 4.0).unwrap();
        assert!(s.road_sup() > 0.0);
        let i0 = 32;
        assert!((0..g.ny).all(|j| s.field(g.nx, i0, j) > 0.0));
    }
}
