//! Parameter domain, coefficient laws, quadrature over `Ω`, `L^p(Ω)` estimation
//! and moment-exponent arithmetic.

use std::fmt;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::spacetime::Coefficients;

/// How nodes in `Ω` are generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sampling {
    Midpoint,
    GaussLegendre,
    /// Seeded; sample `i` is drawn from its own ChaCha stream so any subset
    /// of samples can be regenerated independently.
    MonteCarlo {
        seed: u64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DomainKind {
    /// Uniform law on `[lo, hi]`.
    Uniform { lo: f64, hi: f64 },
    /// `ω ~ N(location, scale²)`; coefficient laws exponentiate it.
    LogNormal { location: f64, scale: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParameterDomain {
    pub kind: DomainKind,
    pub sampling: Sampling,
}

impl ParameterDomain {
    /// `Ω = [-0.5, 0.5]` with the midpoint rule.
    pub fn centered_unit() -> Self {
        ParameterDomain { kind: DomainKind::Uniform { lo: -0.5, hi: 0.5 }, sampling: Sampling::Midpoint }
    }

    /// Standard normal `ω`, so that `exp(ω) ~ LN(0, 1)`.
    pub fn standard_lognormal() -> Self {
        ParameterDomain { kind: DomainKind::LogNormal { location: 0.0, scale: 1.0 }, sampling: Sampling::Midpoint }
    }

    pub fn with_sampling(mut self, sampling: Sampling) -> Self {
        self.sampling = sampling;
        self
    }

    fn validate(&self) -> Result<()> {
        match self.kind {
            DomainKind::Uniform { lo, hi } if lo < hi && lo.is_finite() && hi.is_finite() => Ok(()),
            DomainKind::LogNormal { location, scale } if location.is_finite() && scale > 0.0 && scale.is_finite() => {
                Ok(())
            }
            _ => Err(Error::invalid(format!("degenerate parameter domain {:?}", self.kind))),
        }
    }

    /// Maps a point of `(0, 1)` to `Ω` through the inverse distribution function.
    fn map_unit(&self, u: f64) -> f64 {
        match self.kind {
            DomainKind::Uniform { lo, hi } => lo + (hi - lo) * u,
            DomainKind::LogNormal { location, scale } => location + scale * inverse_normal_cdf(u),
        }
    }
}

/// Nodes in `Ω` with probability weights.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `Σ w_i f(ω_i)`
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(x, w)| w * f(*x)).sum()
    }
}

pub fn quadrature(domain: &ParameterDomain, n: usize) -> Result<QuadratureRule> {
    if n < 1 {
        return Err(Error::invalid("quadrature needs at least one node"));
    }
    domain.validate()?;
    let (unit_nodes, weights): (Vec<f64>, Vec<f64>) = match domain.sampling {
        Sampling::Midpoint => ((0..n).map(|i| (i as f64 + 0.5) / n as f64).collect(), vec![1.0 / n as f64; n]),
        Sampling::GaussLegendre => {
            let (x, w) = crate::quadrature::gauss_legendre(n);
            (x.iter().map(|x| 0.5 * (x + 1.0)).collect(), w.iter().map(|w| 0.5 * w).collect())
        }
        Sampling::MonteCarlo { seed } => {
            ((0..n).map(|i| monte_carlo_unit(seed, i as u64)).collect(), vec![1.0 / n as f64; n])
        }
    };
    Ok(QuadratureRule { nodes: unit_nodes.into_iter().map(|u| domain.map_unit(u)).collect(), weights })
}

/// Uniform draw in the open interval `(0, 1)` for sample `index`.
fn monte_carlo_unit(seed: u64, index: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    ((rng.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64
}

/// `Φ⁻¹(u)` for the standard normal law.
///
/// Acklam's rational approximation (relative error ~1e-9) polished by one
/// Halley step against `erfc`, which brings it to near machine precision.
pub fn inverse_normal_cdf(u: f64) -> f64 {
    if u.is_nan() || !(0.0..=1.0).contains(&u) {
        return f64::NAN;
    }
    if u == 0.0 {
        return f64::NEG_INFINITY;
    }
    if u == 1.0 {
        return f64::INFINITY;
    }
    const A: [f64; 6] = [
        -3.969683028665376e1,
        2.209460984245205e2,
        -2.759285104469687e2,
        1.38357751867269e2,
        -3.066479806614716e1,
        2.506628277459239,
    ];
    const B: [f64; 5] =
        [-5.447609879822406e1, 1.615858368580409e2, -1.556989798598866e2, 6.680131188771972e1, -1.328068155288572e1];
    const C: [f64; 6] = [
        -7.784894002430293e-3,
        -3.223964580411365e-1,
        -2.400758277161838,
        -2.549732539343734,
        4.374664141464968,
        2.938163982698783,
    ];
    const D: [f64; 4] = [7.784695709041462e-3, 3.224671290700398e-1, 2.445134137142996, 3.754408661907416];
    const LOW: f64 = 0.02425;

    let tail = |q: f64| {
        let r = (-2.0 * q.ln()).sqrt();
        (((((C[0] * r + C[1]) * r + C[2]) * r + C[3]) * r + C[4]) * r + C[5])
            / ((((D[0] * r + D[1]) * r + D[2]) * r + D[3]) * r + 1.0)
    };
    let x = if u < LOW {
        tail(u)
    } else if u > 1.0 - LOW {
        -tail(1.0 - u)
    } else {
        let q = u - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    };
    let e = 0.5 * libm::erfc(-x / std::f64::consts::SQRT_2) - u;
    let d = e * (2.0 * std::f64::consts::PI).sqrt() * (0.5 * x * x).exp();
    x - d / (1.0 + 0.5 * x * d)
}

/// Named coefficient laws `a(ω)`, `c₀(ω)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Case {
    /// `a = 1 + 1/ω²`, `c₀ = 1 + ω³`: coercive but unbounded.
    A,
    /// `a = |ω|^0.99`, `c₀ = 1 + ω³`: not uniformly coercive.
    B,
    /// `a = |ω|^0.99`, `c₀ = |ω|^{-1/2}`: singular forcing at the same point.
    C,
    /// `a = |ω|^0.99`, `c₀ = |ω − 0.4|^{-1/2}`: singularities at distinct points.
    D,
    /// `a = exp(ω)` with Gaussian `ω`, `c₀ = 1`.
    LogNormal,
    /// Deterministic `a`, `c₀`.
    Custom { a: f64, c0: f64 },
}

const DEGENERACY_EXPONENT: f64 = 0.99;
const FORCING_EXPONENT: f64 = 0.5;
const SHIFTED_SINGULARITY: f64 = 0.4;

impl Case {
    pub fn parse(name: &str) -> Option<Case> {
        match name {
            "a" => Some(Case::A),
            "b" => Some(Case::B),
            "c" => Some(Case::C),
            "d" => Some(Case::D),
            "lognormal" => Some(Case::LogNormal),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Case::A => "a",
            Case::B => "b",
            Case::C => "c",
            Case::D => "d",
            Case::LogNormal => "lognormal",
            Case::Custom { .. } => "custom",
        }
    }

    /// Pathwise coefficients. At a singular point the value is non-finite or
    /// zero and [`PathCoefficients::is_flagged`] reports it.
    pub fn eval(&self, omega: f64) -> PathCoefficients {
        let (a, c0) = match *self {
            Case::A => (1.0 + 1.0 / (omega * omega), 1.0 + omega.powi(3)),
            Case::B => (omega.abs().powf(DEGENERACY_EXPONENT), 1.0 + omega.powi(3)),
            Case::C => (omega.abs().powf(DEGENERACY_EXPONENT), omega.abs().powf(-FORCING_EXPONENT)),
            Case::D => {
                (omega.abs().powf(DEGENERACY_EXPONENT), (omega - SHIFTED_SINGULARITY).abs().powf(-FORCING_EXPONENT))
            }
            Case::LogNormal => (omega.exp(), 1.0),
            Case::Custom { a, c0 } => (a, c0),
        };
        PathCoefficients { omega, a, c0 }
    }

    /// Points of `Ω` where `a` or `c₀` degenerates.
    pub fn singular_points(&self) -> &'static [f64] {
        match self {
            Case::A | Case::B | Case::C => &[0.0],
            Case::D => &[0.0, SHIFTED_SINGULARITY],
            Case::LogNormal | Case::Custom { .. } => &[],
        }
    }

    pub fn default_domain(&self) -> ParameterDomain {
        match self {
            Case::LogNormal => ParameterDomain::standard_lognormal(),
            _ => ParameterDomain::centered_unit(),
        }
    }
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Coefficients of the scalar operator `A(ω) = -a(ω)Δ` at one node, for which
/// `Amin = Amax = a` and `ρ = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathCoefficients {
    pub omega: f64,
    pub a: f64,
    pub c0: f64,
}

impl PathCoefficients {
    pub fn is_flagged(&self) -> bool {
        !(self.a > 0.0 && self.a.is_finite() && self.c0.is_finite())
    }

    pub fn amin(&self) -> f64 {
        self.a
    }

    pub fn amax(&self) -> f64 {
        self.a
    }

    pub fn rho(&self) -> f64 {
        1.0
    }

    pub fn coefficients(&self) -> Coefficients {
        Coefficients::new(self.a, self.c0)
    }
}

/// `(Σ w_i v_i^p)^{1/p}` with non-finite samples excluded and reported.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LpEstimate {
    pub value: f64,
    pub flagged: bool,
}

pub fn lp_norm(p: f64, values: &[f64], weights: &[f64]) -> Result<LpEstimate> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::invalid(format!("moment order must satisfy 1 <= p < inf, got {p}")));
    }
    if values.len() != weights.len() {
        return Err(Error::ShapeMismatch { expected: weights.len(), got: values.len() });
    }
    if let Some(v) = values.iter().find(|v| **v < 0.0) {
        return Err(Error::invalid(format!("pathwise norms must be non-negative, got {v}")));
    }
    let mut flagged = false;
    let mut sum = 0.0;
    for (v, w) in values.iter().zip(weights) {
        if v.is_finite() {
            sum += w * v.powf(p);
        } else {
            flagged = true;
        }
    }
    Ok(LpEstimate { value: sum.powf(1.0 / p), flagged })
}

/// Integrability exponent in `[1, ∞]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    /// `+∞` maps to [`Exponent::Infinity`]; NaN and values below 1 are rejected.
    pub fn new(x: f64) -> Result<Exponent> {
        if x == f64::INFINITY {
            Ok(Exponent::Infinity)
        } else if x >= 1.0 && x.is_finite() {
            Ok(Exponent::Finite(x))
        } else {
            Err(Error::invalid(format!("exponent must lie in [1, inf], got {x}")))
        }
    }

    pub fn to_f64(self) -> f64 {
        match self {
            Exponent::Finite(x) => x,
            Exponent::Infinity => f64::INFINITY,
        }
    }

    pub fn is_infinite(self) -> bool {
        self == Exponent::Infinity
    }

    fn min(self, other: Exponent) -> Exponent {
        if self <= other {
            self
        } else {
            other
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(x) => write!(f, "{x}"),
            Exponent::Infinity => f.write_str("inf"),
        }
    }
}

// (cx·x)(cy·y) / (cx·x + cy·y), with the limits at infinity spelled out so that
// no infinite value enters floating-point arithmetic.
fn harmonic_like(x: Exponent, y: Exponent, cx: f64, cy: f64) -> Exponent {
    match (x, y) {
        (Exponent::Infinity, Exponent::Infinity) => Exponent::Infinity,
        (Exponent::Infinity, Exponent::Finite(y)) => Exponent::Finite(cy * y),
        (Exponent::Finite(x), Exponent::Infinity) => Exponent::Finite(cx * x),
        (Exponent::Finite(x), Exponent::Finite(y)) => Exponent::Finite(cx * x * cy * y / (cx * x + cy * y)),
    }
}

/// Largest moment `p = min{αγ/(α+γ), 2βγ/(β+2γ)}` guaranteed for forcing in
/// `L^α`, initial datum in `L^β` and `Amin⁻¹` in `L^γ`.
pub fn predict_max_moment(alpha: Exponent, beta: Exponent, gamma: Exponent) -> Exponent {
    harmonic_like(alpha, gamma, 1.0, 1.0).min(harmonic_like(beta, gamma, 1.0, 2.0))
}

/// `p̄ = p − p²/(θ + p) = pθ/(p + θ)` and whether it falls below 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PBar {
    pub value: Exponent,
    /// No moment is guaranteed (`p̄ < 1`).
    pub flagged: bool,
}

pub fn predict_pbar(p: Exponent, theta: Exponent) -> PBar {
    let value = harmonic_like(p, theta, 1.0, 1.0);
    let flagged = matches!(value, Exponent::Finite(x) if x < 1.0);
    PBar { value, flagged }
}

/// All exponents of one moment analysis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentExponents {
    pub alpha: Exponent,
    pub beta: Exponent,
    pub gamma: Exponent,
    pub theta: Exponent,
    pub p: Exponent,
    pub pbar: PBar,
}

impl MomentExponents {
    pub fn derive(alpha: Exponent, beta: Exponent, gamma: Exponent, theta: Exponent) -> Self {
        let p = predict_max_moment(alpha, beta, gamma);
        MomentExponents { alpha, beta, gamma, theta, p, pbar: predict_pbar(p, theta) }
    }
}

/// Operator `-|ω−ζ₀|^s Δ` and forcing `|ω−ζ₁|^{-s} g` with `ζ₀ ≠ ζ₁`, `u₀ = 0`.
///
/// Returns `(general bound, pathwise bound)`: both data lie in `L^q` for every
/// `q < 1/s`, so the general result only yields moments `p < 1/(2s)`, while
/// the separated singularities give `p < 1/s` directly.
pub fn factorized_singular_example(s: f64) -> Result<(f64, f64)> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::invalid(format!("singular exponent must lie in (0, 1), got {s}")));
    }
    let q = Exponent::new(1.0 / s)?;
    let general = predict_max_moment(q, Exponent::Infinity, q).to_f64();
    Ok((general, 1.0 / s))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trend {
    Converging,
    Diverging,
    Inconclusive,
}

impl Trend {
    pub fn as_str(&self) -> &'static str {
        match self {
            Trend::Converging => "converging",
            Trend::Diverging => "diverging",
            Trend::Inconclusive => "inconclusive",
        }
    }
}

impl fmt::Display for Trend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Thresholds for [`classify_trend`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrendRule {
    /// Growth ratio `Ê_{2N}/Ê_N ≥ 1 + δ` counts as diverging.
    pub delta: f64,
    /// Successive increments must shrink by at least this factor.
    pub decay: f64,
    /// Number of final rungs inspected.
    pub window: usize,
    /// Increments below `floor · |Ê|` count as settled.
    pub floor: f64,
}

impl Default for TrendRule {
    fn default() -> Self {
        TrendRule { delta: 0.05, decay: 1.3, window: 3, floor: 1e-10 }
    }
}

/// Mechanical reading of a doubling ladder of moment estimates.
///
/// Converging when each of the last `window` increments is at least `decay`
/// times smaller than the one before it; otherwise diverging when each of the
/// last `window` ratios is at least `1 + δ`; inconclusive otherwise.
pub fn classify_trend(estimates: &[f64], rule: &TrendRule) -> Result<Trend> {
    if estimates.len() < 4 || estimates.len() < rule.window + 1 {
        return Err(Error::invalid(format!(
            "trend classification needs at least 4 ladder points, got {}",
            estimates.len()
        )));
    }
    if rule.window < 2 {
        return Err(Error::invalid("trend window must span at least two rungs"));
    }
    if estimates.iter().any(|e| !e.is_finite()) {
        return Ok(Trend::Diverging);
    }
    let n = estimates.len();
    let tail = &estimates[n - rule.window - 1..];
    // geometric decay of the increments bounds the limit, so it takes precedence
    let scale = tail.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let settled = rule.floor * scale;
    let incr: Vec<f64> = tail.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    if incr.windows(2).all(|d| d[1] <= settled || d[1] * rule.decay <= d[0]) {
        return Ok(Trend::Converging);
    }
    let growing = tail.windows(2).all(|w| w[0] > 0.0 && w[1] / w[0] >= 1.0 + rule.delta);
    Ok(if growing { Trend::Diverging } else { Trend::Inconclusive })
}

/// Ladder of estimates of `‖u‖_{L^p(Ω;Y)}` and its classification.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentEstimate {
    pub p: f64,
    pub ladder: Vec<usize>,
    pub estimates: Vec<LpEstimate>,
    pub trend: Trend,
}
