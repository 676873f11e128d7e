//! Exact solution of the single-mode problem and derived error norms.
//!
//! With `f = c₀ sin(πt) φ`, `φ` the first Dirichlet eigenfunction (`-Δφ = λφ`)
//! and `u₀ = 0`, the solution is `u = c₀ T(t) φ` where `T' + aλT = sin(πt)`,
//! `T(0) = 0`.

use std::f64::consts::PI;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::fem_space::{mode_eigenvalue, mode_h_norm_sq, mode_load};
use crate::quadrature::gauss_on;
use crate::spacetime::{
    legendre_project, solve_pathwise, Coefficients, Discretization, ProblemData, SpaceTimeSolution, SpatialShape,
    TimeProfile,
};

fn check_rate(a: f64, lambda: f64) -> Result<f64> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::InvalidCoefficient(a));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!("eigenvalue must be positive, got {lambda}")));
    }
    Ok(a * lambda)
}

/// `T(t) = (μ sin πt − π cos πt + π e^{−μt}) / (μ² + π²)` with `μ = aλ`.
pub fn exact_mode_profile(a: f64, lambda: f64, t: f64) -> Result<f64> {
    let mu = check_rate(a, lambda)?;
    Ok(profile(mu, t))
}

/// `T'(t)`.
pub fn exact_mode_profile_derivative(a: f64, lambda: f64, t: f64) -> Result<f64> {
    let mu = check_rate(a, lambda)?;
    Ok(profile_derivative(mu, t))
}

fn profile(mu: f64, t: f64) -> f64 {
    (mu * (PI * t).sin() - PI * (PI * t).cos() + PI * (-mu * t).exp()) / (mu * mu + PI * PI)
}

fn profile_derivative(mu: f64, t: f64) -> f64 {
    (mu * PI * (PI * t).cos() + PI * PI * (PI * t).sin() - PI * mu * (-mu * t).exp()) / (mu * mu + PI * PI)
}

/// `u(t) = c₀ T(t) φ` in dimension `dim`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSolution {
    pub dim: usize,
    pub a: f64,
    pub c0: f64,
    pub lambda: f64,
}

impl ModeSolution {
    pub fn new(dim: usize, coeffs: Coefficients) -> Result<Self> {
        coeffs.validate()?;
        if !(1..=2).contains(&dim) {
            return Err(Error::invalid(format!("dimension must be 1 or 2, got {dim}")));
        }
        Ok(ModeSolution { dim, a: coeffs.a, c0: coeffs.c0, lambda: mode_eigenvalue(dim) })
    }

    /// Temporal factor `T(t)` (without `c₀`).
    pub fn profile(&self, t: f64) -> f64 {
        profile(self.a * self.lambda, t)
    }

    pub fn profile_derivative(&self, t: f64) -> f64 {
        profile_derivative(self.a * self.lambda, t)
    }

    /// `‖u(t)‖_V`
    pub fn v_norm_at(&self, t: f64) -> f64 {
        (self.c0 * self.profile(t)).abs() * (self.lambda * mode_h_norm_sq(self.dim)).sqrt()
    }
}

/// Exact Y-norm errors of a discrete solution of the mode problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorms {
    /// `‖u − U‖_Y`
    pub err_y: f64,
    /// `‖u − Π u‖_Y` with `Π` the Y-orthogonal projection onto the trial space.
    pub best_y: f64,
    /// `inf ‖u − y‖_Y` over `L²(0,T;V_h)`, the spatial part of `best_y`.
    pub spatial_best_y: f64,
}

fn check_mode_problem(disc: &Discretization, data: &ProblemData) -> Result<()> {
    if data.profile != TimeProfile::SinPi || data.initial.iter().any(|x| *x != 0.0) {
        return Err(Error::invalid("exact errors are only available for the mode problem with zero initial datum"));
    }
    let b = mode_load(disc.pair().mesh());
    if data.spatial_load.len() != b.len() || (&data.spatial_load - &b).amax() > 1e-14 * b.amax() {
        return Err(Error::invalid("exact errors are only available for mode forcing"));
    }
    Ok(())
}

/// `‖u − U‖_Y` and the best-approximation error, by 5-point Gauss per interval
/// in time and exact spatial cross terms.
///
/// With `p` the Ritz coefficients of `φ` and `T̄_i` the interval means,
/// `‖u − U‖²_Y = best² + Σ k_i ‖c₀T̄_i p − U_i‖²_S` where `best²` collects
/// `c₀² (λ‖φ‖²_H − pᵀSp) ∫T²` and `c₀² pᵀSp ∫(T − T̄_i)²`.
pub fn exact_error(
    disc: &Discretization,
    data: &ProblemData,
    coeffs: Coefficients,
    solution: &SpaceTimeSolution,
) -> Result<ErrorNorms> {
    check_mode_problem(disc, data)?;
    if solution.coeffs().len() != disc.trial_dofs() {
        return Err(Error::ShapeMismatch { expected: disc.trial_dofs(), got: solution.coeffs().len() });
    }
    let mode = ModeSolution::new(disc.pair().mesh().dim(), coeffs)?;
    let pair = disc.pair();
    let p = SpatialShape::Mode.ritz_projection(pair);
    let s = pair.stiffness();
    let ritz_sq = p.dot(&(s * &p));
    let full_sq = mode.lambda * mode_h_norm_sq(mode.dim);
    let defect_sq = (full_sq - ritz_sq).max(0.0);
    let c0_sq = mode.c0 * mode.c0;

    let grid = disc.grid();
    let (mut spatial, mut temporal, mut discrete) = (0.0, 0.0, 0.0);
    for i in 0..grid.n_intervals() {
        let (lo, hi) = grid.interval(i);
        let mean = legendre_project(|t| mode.profile(t), lo, hi, 0)[0];
        let (mut t_sq, mut dev_sq) = (0.0, 0.0);
        for (t, w) in gauss_on(5, lo, hi) {
            let v = mode.profile(t);
            t_sq += w * v * v;
            dev_sq += w * (v - mean).powi(2);
        }
        spatial += c0_sq * defect_sq * t_sq;
        temporal += c0_sq * ritz_sq * dev_sq;
        let d: DVector<f64> = &p * (mode.c0 * mean) - solution.block(i, 0);
        discrete += (hi - lo) * d.dot(&(s * &d));
    }
    let best_sq = spatial + temporal;
    Ok(ErrorNorms {
        err_y: (best_sq + discrete.max(0.0)).sqrt(),
        best_y: best_sq.sqrt(),
        spatial_best_y: spatial.sqrt(),
    })
}

/// Surrogate for the time-continuous, space-discrete solution: the same scheme
/// on the time grid refined `refinement` times. Not exact in time.
pub fn semidiscrete_reference(
    disc: &Discretization,
    data: &ProblemData,
    coeffs: Coefficients,
    refinement: usize,
) -> Result<(Discretization, SpaceTimeSolution)> {
    if refinement < 16 {
        return Err(Error::invalid(format!("semidiscrete reference needs refinement >= 16, got {refinement}")));
    }
    let fine = disc.with_grid(disc.grid().refine(refinement)?);
    let sol = solve_pathwise(data, &fine, coeffs)?;
    Ok((fine, sol))
}
