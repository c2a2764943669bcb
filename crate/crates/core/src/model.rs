//! Physical constants of the field-road system and the periodic KPP reaction.
//!
//! The road density `u(t, x)` diffuses with coefficient `D` and exchanges
//! mass with the field density `v(t, x, y)` through the flux condition
//! `-d ∂_y v(x, 0) = μ u − ν v(x, 0)`. The field carries a reaction `f(x, v)`
//! that is `L`-periodic in `x` and of KPP type.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Upper end of the `v > 1` scan in [`ReactionSpec::kpp_check`].
pub const DEFAULT_V_MAX: f64 = 10.0;

/// Physical constants `D, d, μ, ν, L, R`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    /// Road diffusivity `D`.
    pub d_road: f64,
    /// Field diffusivity `d`.
    pub d_field: f64,
    /// Road-to-field exchange rate `μ`.
    pub mu: f64,
    /// Field-to-road exchange rate `ν`.
    pub nu: f64,
    /// Spatial period `L` of the medium along the road.
    pub period: f64,
    /// Strip width `R` (position of the Dirichlet cap).
    pub width: f64,
}

impl ModelParams {
    pub fn new(d_road: f64, d_field: f64, mu: f64, nu: f64, period: f64, width: f64) -> Result<Self> {
        let p = Self {
            d_road,
            d_field,
            mu,
            nu,
            period,
            width,
        };
        p.validate()?;
        Ok(p)
    }

    /// The reference configuration `D = d = μ = ν = L = 1` with the given width.
    pub fn unit(width: f64) -> Self {
        Self {
            d_road: 1.0,
            d_field: 1.0,
            mu: 1.0,
            nu: 1.0,
            period: 1.0,
            width,
        }
    }

    pub fn with_width(mut self, width: f64) -> Self {
        self.width = width;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("D", self.d_road),
            ("d", self.d_field),
            ("mu", self.mu),
            ("nu", self.nu),
            ("L", self.period),
            ("R", self.width),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::Config(format!("{name} must be > 0 (got {value})")));
            }
        }
        let (u_cap, _) = self.carrying_capacity();
        if !(u_cap.is_finite() && u_cap > 0.0) {
            return Err(Error::Config(format!(
                "carrying capacity nu/mu = {u_cap} is not representable"
            )));
        }
        Ok(())
    }

    /// The constant steady state `(ν/μ, 1)` of the half-plane problem.
    pub fn carrying_capacity(&self) -> (f64, f64) {
        (self.nu / self.mu, 1.0)
    }
}

/// An `L`-periodic coefficient `a(x)`.
#[derive(Clone, Debug, PartialEq)]
pub enum PeriodicCoefficient {
    /// `mean + Σ_k cos_amps[k-1]·cos(2πkx/L) + sin_amps[k-1]·sin(2πkx/L)`.
    Fourier {
        mean: f64,
        cos_amps: Vec<f64>,
        sin_amps: Vec<f64>,
        period: f64,
    },
    /// Values at `x_k = k·L/n`, linearly interpolated with periodic wrap.
    Table { values: Vec<f64>, period: f64 },
}

impl PeriodicCoefficient {
    pub fn constant(value: f64, period: f64) -> Self {
        Self::Fourier {
            mean: value,
            cos_amps: Vec::new(),
            sin_amps: Vec::new(),
            period,
        }
    }

    /// `mean + amp·cos(2πx/L)`.
    pub fn cosine(mean: f64, amp: f64, period: f64) -> Self {
        Self::Fourier {
            mean,
            cos_amps: vec![amp],
            sin_amps: Vec::new(),
            period,
        }
    }

    pub fn period(&self) -> f64 {
        match self {
            Self::Fourier { period, .. } | Self::Table { period, .. } => *period,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let period = self.period();
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::Config(format!("coefficient period must be > 0 (got {period})")));
        }
        match self {
            Self::Fourier {
                mean,
                cos_amps,
                sin_amps,
                ..
            } => {
                let all_finite = mean.is_finite()
                    && cos_amps.iter().all(|c| c.is_finite())
                    && sin_amps.iter().all(|s| s.is_finite());
                if !all_finite {
                    return Err(Error::Config("Fourier coefficients must be finite".into()));
                }
            }
            Self::Table { values, .. } => {
                if values.len() < 2 {
                    return Err(Error::Config("coefficient table needs at least 2 samples".into()));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Config("coefficient table values must be finite".into()));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Self::Fourier {
                mean,
                cos_amps,
                sin_amps,
                period,
            } => {
                let phase = 2.0 * PI * x.rem_euclid(*period) / period;
                let harmonics = cos_amps.len().max(sin_amps.len());
                let mut acc = *mean;
                for k in 1..=harmonics {
                    let (s, c) = (k as f64 * phase).sin_cos();
                    acc += cos_amps.get(k - 1).copied().unwrap_or(0.0) * c;
                    acc += sin_amps.get(k - 1).copied().unwrap_or(0.0) * s;
                }
                acc
            }
            Self::Table { values, period } => {
                let n = values.len();
                let s = x.rem_euclid(*period) / period * n as f64;
                let k = (s.floor() as usize).min(n - 1);
                let w = s - k as f64;
                let next = values[(k + 1) % n];
                values[k] + w * (next - values[k])
            }
        }
    }

    /// `(min, max)` of the coefficient over one period.
    pub fn extrema(&self) -> (f64, f64) {
        match self {
            Self::Table { values, .. } => {
                // Linear interpolation never leaves the range of the samples.
                let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (lo, hi)
            }
            Self::Fourier {
                mean,
                cos_amps,
                sin_amps,
                ..
            } => {
                let harmonics = cos_amps.len().max(sin_amps.len());
                match harmonics {
                    0 => (*mean, *mean),
                    1 => {
                        let c = cos_amps.first().copied().unwrap_or(0.0);
                        let s = sin_amps.first().copied().unwrap_or(0.0);
                        let r = c.hypot(s);
                        (mean - r, mean + r)
                    }
                    _ => sampled_extrema(|x| self.eval(x), self.period(), 4096 * harmonics),
                }
            }
        }
    }
}

/// Dense sampling followed by a parabolic polish around each extreme sample.
fn sampled_extrema(f: impl Fn(f64) -> f64, period: f64, n: usize) -> (f64, f64) {
    let h = period / n as f64;
    let samples: Vec<f64> = (0..n).map(|k| f(k as f64 * h)).collect();
    let polish = |k: usize| {
        let (fm, f0, fp) = (samples[(k + n - 1) % n], samples[k], samples[(k + 1) % n]);
        let denom = fm - 2.0 * f0 + fp;
        if denom.abs() < f64::EPSILON * f0.abs().max(1.0) {
            return f0;
        }
        let offset = 0.5 * (fm - fp) / denom;
        f(k as f64 * h + offset.clamp(-1.0, 1.0) * h)
    };
    let (mut kmin, mut kmax) = (0, 0);
    for (k, &s) in samples.iter().enumerate() {
        if s < samples[kmin] {
            kmin = k;
        }
        if s > samples[kmax] {
            kmax = k;
        }
    }
    (polish(kmin).min(samples[kmin]), polish(kmax).max(samples[kmax]))
}

type ReactionFn = dyn Fn(f64, f64) -> f64 + Send + Sync;
type RateFn = dyn Fn(f64) -> f64 + Send + Sync;

/// A user-supplied nonlinearity `f(x, v)` together with its linearization
/// `f_v(x, 0)`. Both must be `period`-periodic in `x`; nothing else is
/// assumed until [`ReactionSpec::kpp_check`] has been run.
#[derive(Clone)]
pub struct CustomReaction {
    pub name: String,
    pub period: f64,
    f: Arc<ReactionFn>,
    fv0: Arc<RateFn>,
}

impl CustomReaction {
    pub fn new(
        name: impl Into<String>,
        period: f64,
        f: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        fv0: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            period,
            f: Arc::new(f),
            fv0: Arc::new(fv0),
        }
    }
}

impl fmt::Debug for CustomReaction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomReaction")
            .field("name", &self.name)
            .field("period", &self.period)
            .finish_non_exhaustive()
    }
}

/// The reaction term of the field equation.
#[derive(Clone, Debug)]
pub enum ReactionSpec {
    /// `f(x, v) = a(x)·v·(1 − v)`.
    Logistic(PeriodicCoefficient),
    Custom(CustomReaction),
}

/// Which KPP requirement a sample point violates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KppRule {
    ZeroAtZero,
    ZeroAtOne,
    PositiveOnUnitInterval,
    BoundedByLinearization,
    NegativeAboveOne,
    DecreasingPerCapita,
    PositiveMinimalRate,
}

impl KppRule {
    pub fn describe(self) -> &'static str {
        match self {
            Self::ZeroAtZero => "f(·,0) = 0 fails",
            Self::ZeroAtOne => "f(·,1) = 0 fails",
            Self::PositiveOnUnitInterval => "f > 0 on (0,1) fails",
            Self::BoundedByLinearization => "f ≤ f_v(·,0)v fails",
            Self::NegativeAboveOne => "f < 0 on (1,v_max] fails",
            Self::DecreasingPerCapita => "f(·,v)/v decreasing fails",
            Self::PositiveMinimalRate => "m = min f_v(·,0) > 0 fails",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KppViolation {
    pub rule: KppRule,
    pub x: f64,
    pub v: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KppReport {
    pub ok: bool,
    /// `m = min f_v(·, 0)` over the sampled positions.
    pub m: f64,
    /// `M = max f_v(·, 0)` over the sampled positions.
    pub big_m: f64,
    pub violations: Vec<KppViolation>,
}

impl KppReport {
    pub fn violates(&self, rule: KppRule) -> bool {
        self.violations.iter().any(|v| v.rule == rule)
    }
}

impl ReactionSpec {
    /// Logistic reaction with a constant rate.
    pub fn homogeneous(rate: f64, period: f64) -> Self {
        Self::Logistic(PeriodicCoefficient::constant(rate, period))
    }

    /// Logistic reaction with rate `mean + amp·cos(2πx/L)`.
    pub fn cosine(mean: f64, amp: f64, period: f64) -> Self {
        Self::Logistic(PeriodicCoefficient::cosine(mean, amp, period))
    }

    pub fn period(&self) -> f64 {
        match self {
            Self::Logistic(a) => a.period(),
            Self::Custom(c) => c.period,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Logistic(a) => a.validate(),
            Self::Custom(c) if !(c.period.is_finite() && c.period > 0.0) => Err(Error::Config(
                format!("reaction period must be > 0 (got {})", c.period),
            )),
            Self::Custom(_) => Ok(()),
        }
    }

    /// The reaction `f(x, v)`; negative densities are rejected.
    pub fn f_eval(&self, x: f64, v: f64) -> Result<f64> {
        if v.is_nan() || v < 0.0 {
            return Err(Error::Domain(format!("reaction evaluated at negative density v = {v}")));
        }
        Ok(self.f_unchecked(x, v))
    }

    /// `f(x, v)` without the sign check on `v`.
    pub fn f_unchecked(&self, x: f64, v: f64) -> f64 {
        match self {
            Self::Logistic(a) => a.eval(x) * v * (1.0 - v),
            Self::Custom(c) => (c.f)(x.rem_euclid(c.period), v),
        }
    }

    /// The linearization `ζ(x) = f_v(x, 0)`.
    pub fn fv0(&self, x: f64) -> f64 {
        match self {
            Self::Logistic(a) => a.eval(x),
            Self::Custom(c) => (c.fv0)(x.rem_euclid(c.period)),
        }
    }

    /// `(m, M)`: extrema of `f_v(·, 0)` over one period.
    pub fn rate_bounds(&self) -> (f64, f64) {
        match self {
            Self::Logistic(a) => a.extrema(),
            Self::Custom(c) => sampled_extrema(|x| (c.fv0)(x), c.period, 8192),
        }
    }

    /// Returns `self` with `f_v(·, 0)` raised by `delta` (logistic only).
    pub fn raised(&self, delta: f64) -> Option<Self> {
        match self {
            Self::Logistic(PeriodicCoefficient::Fourier {
                mean,
                cos_amps,
                sin_amps,
                period,
            }) => Some(Self::Logistic(PeriodicCoefficient::Fourier {
                mean: mean + delta,
                cos_amps: cos_amps.clone(),
                sin_amps: sin_amps.clone(),
                period: *period,
            })),
            Self::Logistic(PeriodicCoefficient::Table { values, period }) => {
                Some(Self::Logistic(PeriodicCoefficient::Table {
                    values: values.iter().map(|v| v + delta).collect(),
                    period: *period,
                }))
            }
            Self::Custom(_) => None,
        }
    }

    pub fn kpp_check(&self, n_x: usize, n_v: usize) -> Result<KppReport> {
        self.kpp_check_with(n_x, n_v, DEFAULT_V_MAX)
    }

    /// Samples an `n_x × n_v` grid of `(x, v)` and checks the KPP hypotheses.
    /// Violations are collected, never raised.
    pub fn kpp_check_with(&self, n_x: usize, n_v: usize, v_max: f64) -> Result<KppReport> {
        if n_x < 2 || n_v < 2 {
            return Err(Error::Config(format!(
                "kpp_check needs n_x, n_v >= 2 (got {n_x}, {n_v})"
            )));
        }
        if !(v_max > 1.0) {
            return Err(Error::Config(format!("v_max must exceed 1 (got {v_max})")));
        }
        const EQ_TOL: f64 = 1e-12;
        let period = self.period();
        let below: Vec<f64> = (1..=n_v).map(|l| l as f64 / (n_v + 1) as f64).collect();
        let above: Vec<f64> = (1..=n_v)
            .map(|l| 1.0 + (v_max - 1.0) * l as f64 / n_v as f64)
            .collect();

        let mut violations = Vec::new();
        let mut m = f64::INFINITY;
        let mut big_m = f64::NEG_INFINITY;
        let mut flag = |rule, x, v| violations.push(KppViolation { rule, x, v });

        for k in 0..n_x {
            let x = period * k as f64 / n_x as f64;
            let rate = self.fv0(x);
            m = m.min(rate);
            big_m = big_m.max(rate);

            if self.f_unchecked(x, 0.0).abs() > EQ_TOL {
                flag(KppRule::ZeroAtZero, x, 0.0);
            }
            if self.f_unchecked(x, 1.0).abs() > EQ_TOL {
                flag(KppRule::ZeroAtOne, x, 1.0);
            }
            for &v in &below {
                let f = self.f_unchecked(x, v);
                if !(f > 0.0) {
                    flag(KppRule::PositiveOnUnitInterval, x, v);
                }
                if f > rate * v + EQ_TOL * v {
                    flag(KppRule::BoundedByLinearization, x, v);
                }
            }
            for &v in &above {
                if !(self.f_unchecked(x, v) < 0.0) {
                    flag(KppRule::NegativeAboveOne, x, v);
                }
            }
            let mut prev: Option<(f64, f64)> = None;
            for &v in below.iter().chain(&[1.0]).chain(above.iter()) {
                let per_capita = self.f_unchecked(x, v) / v;
                if let Some((_, p)) = prev {
                    if !(per_capita < p) {
                        flag(KppRule::DecreasingPerCapita, x, v);
                    }
                }
                prev = Some((v, per_capita));
            }
        }
        if !(m > 0.0) {
            let x_min = (0..n_x)
                .map(|k| period * k as f64 / n_x as f64)
                .fold((0.0, f64::INFINITY), |acc, x| {
                    let r = self.fv0(x);
                    if r < acc.1 {
                        (x, r)
                    } else {
                        acc
                    }
                })
                .0;
            flag(KppRule::PositiveMinimalRate, x_min, 0.0);
        }
        Ok(KppReport {
            ok: violations.is_empty(),
            m,
            big_m,
            violations,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cosine() -> ReactionSpec {
        ReactionSpec::cosine(1.0, 0.5, 1.0)
    }

    #[test]
    fn logistic_values() {
        let flat = ReactionSpec::homogeneous(1.0, 1.0);
        assert_eq!(flat.f_eval(0.3, 1.0).unwrap(), 0.0);
        assert_eq!(flat.f_eval(0.0, 0.5).unwrap(), 0.25);
        assert_eq!(cosine().f_eval(0.0, 0.5).unwrap(), 0.375);
    }

    #[test]
    fn negative_density_is_a_domain_error() {
        let err = cosine().f_eval(0.1, -1e-3).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn linearization_at_zero() {
        assert_eq!(ReactionSpec::homogeneous(1.0, 1.0).fv0(0.77), 1.0);
        assert_eq!(cosine().fv0(0.0), 1.5);
        assert_abs_diff_eq!(cosine().fv0(0.5), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn kpp_check_accepts_logistic() {
        let r = ReactionSpec::homogeneous(1.0, 1.0).kpp_check(16, 16).unwrap();
        assert!(r.ok, "{:?}", r.violations);
        assert_eq!((r.m, r.big_m), (1.0, 1.0));

        let r = cosine().kpp_check(16, 16).unwrap();
        assert!(r.ok, "{:?}", r.violations);
        assert_abs_diff_eq!(r.m, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(r.big_m, 1.5, epsilon = 1e-14);
    }

    #[test]
    fn kpp_check_rejects_quadratic() {
        let spec = ReactionSpec::Custom(CustomReaction::new("v^2", 1.0, |_, v| v * v, |_| 0.0));
        let r = spec.kpp_check(8, 8).unwrap();
        assert!(!r.ok);
        assert!(r.violates(KppRule::BoundedByLinearization));
        assert!(r.violates(KppRule::PositiveMinimalRate));
        assert_eq!(r.m, 0.0);
        assert_eq!(KppRule::BoundedByLinearization.describe(), "f ≤ f_v(·,0)v fails");
    }

    #[test]
    fn kpp_check_needs_two_samples() {
        assert!(cosine().kpp_check(1, 8).is_err());
        assert!(cosine().kpp_check(8, 1).is_err());
    }

    #[test]
    fn table_interpolates_with_wrap() {
        let a = PeriodicCoefficient::Table {
            values: vec![1.0, 2.0, 3.0, 2.0],
            period: 2.0,
        };
        assert_eq!(a.eval(0.25), 1.5);
        assert_eq!(a.eval(1.75), 1.5);
        assert_eq!(a.eval(2.25), 1.5);
        assert_eq!(a.eval(-0.25), 1.5);
        assert_eq!(a.extrema(), (1.0, 3.0));
    }

    #[test]
    fn fourier_extrema_by_sampling() {
        let a = PeriodicCoefficient::Fourier {
            mean: 1.0,
            cos_amps: vec![0.3, 0.2],
            sin_amps: vec![0.0, 0.1],
            period: 1.0,
        };
        let (lo, hi) = a.extrema();
        let brute = (0..200_000).map(|k| a.eval(k as f64 / 200_000.0));
        let (blo, bhi) = brute.fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), v| (l.min(v), h.max(v)));
        assert_abs_diff_eq!(lo, blo, epsilon = 1e-9);
        assert_abs_diff_eq!(hi, bhi, epsilon = 1e-9);
    }

    #[test]
    fn params_reject_nonpositive() {
        let err = ModelParams::new(1.0, 1.0, 0.0, 1.0, 1.0, 1.0).unwrap_err();
        assert_eq!(err.to_string(), "config error: mu must be > 0 (got 0)");
        assert!(ModelParams::new(1.0, 1.0, 1.0, 1.0, 1.0, f64::NAN).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn rate_stays_within_bounds(x in -10.0f64..10.0, amp in 0.0f64..0.9) {
                let spec = ReactionSpec::cosine(1.0, amp, 1.0);
                let (m, big_m) = spec.rate_bounds();
                let z = spec.fv0(x);
                prop_assert!(m - 1e-14 <= z && z <= big_m + 1e-14);
            }

            #[test]
            fn logistic_per_capita_decreases(x in 0.0f64..1.0, mut vs in prop::array::uniform3(0.001f64..5.0)) {
                vs.sort_by(f64::total_cmp);
                prop_assume!(vs[0] < vs[1] && vs[1] < vs[2]);
                let spec = ReactionSpec::cosine(1.0, 0.5, 1.0);
                let g = |v: f64| spec.f_eval(x, v).unwrap() / v;
                prop_assert!(g(vs[0]) > g(vs[1]) && g(vs[1]) > g(vs[2]));
            }

            #[test]
            fn fourier_reaction_is_periodic(x in -5.0f64..5.0, v in 0.0f64..2.0) {
                let spec = ReactionSpec::Logistic(PeriodicCoefficient::Fourier {
                    mean: 1.0, cos_amps: vec![0.4, 0.1], sin_amps: vec![0.2], period: 1.5,
                });
                let a = spec.f_eval(x, v).unwrap();
                let b = spec.f_eval(x + 1.5, v).unwrap();
                prop_assert!((a - b).abs() <= 1e-13 * (1.0 + a.abs()));
            }
        }
    }
}
