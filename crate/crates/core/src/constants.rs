//! Numerical inf-sup, continuity, CFL and projection constants, and the
//! closed-form bounds they are compared against.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fem_space::{assemble, gram_1d, Mesh, SpatialPair};
use crate::spacetime::{assemble_full_system, build_gram, Discretization, GramKind};

/// Default cap on trial dofs for dense SVD / eigen work.
pub const DEFAULT_MAX_DOFS: usize = 5000;

fn cholesky(g: &DMatrix<f64>, what: &str) -> Result<Cholesky<f64, nalgebra::Dyn>> {
    if !g.is_square() {
        return Err(Error::ShapeMismatch { expected: g.nrows(), got: g.ncols() });
    }
    if g.iter().any(|x| !x.is_finite()) {
        return Err(Error::NotPositiveDefinite(format!("{what} has non-finite entries")));
    }
    Cholesky::new(g.clone()).ok_or_else(|| Error::NotPositiveDefinite(what.to_string()))
}

/// Largest eigenvalue of the symmetric pencil `(a, b)` with `b` SPD.
fn pencil_lambda_max(a: &DMatrix<f64>, b: &DMatrix<f64>, what: &str) -> Result<f64> {
    let l = cholesky(b, what)?.l();
    let x = l.solve_lower_triangular(a).ok_or_else(|| Error::NotPositiveDefinite(what.to_string()))?;
    let c = l.solve_lower_triangular(&x.transpose()).ok_or_else(|| Error::NotPositiveDefinite(what.to_string()))?;
    let c = (&c + c.transpose()) * 0.5;
    Ok(c.symmetric_eigenvalues().max())
}

/// Extreme singular values of `G_test^{-1/2} B G_trial^{-1/2}`.
///
/// `sigma_min` is the discrete inf-sup constant and `sigma_max` the continuity
/// constant of `B` with respect to the two Gram norms.
pub fn discrete_infsup(b: &DMatrix<f64>, g_trial: &DMatrix<f64>, g_test: &DMatrix<f64>) -> Result<(f64, f64)> {
    if !b.is_square() {
        return Err(Error::ShapeMismatch { expected: b.nrows(), got: b.ncols() });
    }
    if g_trial.nrows() != b.ncols() {
        return Err(Error::ShapeMismatch { expected: b.ncols(), got: g_trial.nrows() });
    }
    if g_test.nrows() != b.nrows() {
        return Err(Error::ShapeMismatch { expected: b.nrows(), got: g_test.nrows() });
    }
    let l_test = cholesky(g_test, "test Gram matrix")?.l();
    let l_trial = cholesky(g_trial, "trial Gram matrix")?.l();
    // K = L_test⁻¹ B L_trial⁻ᵀ shares its singular values with the symmetric form
    let x = l_test.solve_lower_triangular(b).expect("nonsingular Cholesky factor");
    let kt = l_trial.solve_lower_triangular(&x.transpose()).expect("nonsingular Cholesky factor");
    let sv = kt.singular_values();
    if sv.iter().any(|s| !s.is_finite()) {
        return Err(Error::Inconsistent("singular value decomposition produced non-finite values".into()));
    }
    Ok((sv.min(), sv.max()))
}

/// `λmax(S, M S⁻¹ M)`: the squared sup of `‖v‖_V / ‖v‖_{V_h*}` over `V_h`.
pub fn cfl_lambda_max(pair: &SpatialPair) -> Result<f64> {
    pencil_lambda_max(pair.stiffness(), &pair.dual_gram(), "discrete dual Gram matrix")
}

/// `c_S = k · sup_{v ∈ V_h} ‖v‖_V / ‖v‖_{V_h*}`.
pub fn cfl_constant(pair: &SpatialPair, k: f64) -> Result<f64> {
    if !(k > 0.0 && k.is_finite()) {
        return Err(Error::invalid(format!("time step must be positive, got {k}")));
    }
    Ok(k * cfl_lambda_max(pair)?.sqrt())
}

/// `c_{S,ω} = k/√12 · sup ‖A^{1/2} v‖_H / ‖A^{-1/2} v‖_H = k a/√12 · √λmax(S, M S⁻¹ M)`.
pub fn cfl_omega(pair: &SpatialPair, k: f64, a: f64) -> Result<f64> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::InvalidCoefficient(a));
    }
    Ok(a * cfl_constant(pair, k)? / 12f64.sqrt())
}

/// Two-grid lower estimate of `c_h = ‖P_h‖_{L(V)}` for the H-orthogonal
/// projection onto the coarse space, with the sup taken over the fine space.
pub fn projection_stability(coarse: &Mesh, fine: &Mesh) -> Result<f64> {
    if coarse.dim() != fine.dim() || coarse.degree() != fine.degree() {
        return Err(Error::invalid("coarse and fine meshes must share dimension and degree"));
    }
    if !fine.n_cells().is_multiple_of(coarse.n_cells()) {
        return Err(Error::invalid(format!(
            "meshes are not nested: {} fine cells over {} coarse cells",
            fine.n_cells(),
            coarse.n_cells()
        )));
    }
    let fine_pair = assemble(fine)?;
    let coarse_pair = assemble(coarse)?;
    let c1 = gram_1d(&fine.basis_1d(), &coarse.basis_1d(), false);
    let cross = if fine.dim() == 1 { c1 } else { c1.kronecker(&c1) };

    // ‖P_h v‖²_V = vᵀ C M_c⁻¹ S_c M_c⁻¹ Cᵀ v against ‖v‖²_V = vᵀ S_f v
    let s_f_chol = cholesky(fine_pair.stiffness(), "fine stiffness")?;
    let q = cross.transpose() * s_f_chol.solve(&cross);
    let q = (&q + q.transpose()) * 0.5;
    let m_c = cholesky(coarse_pair.mass(), "coarse mass")?;
    let g = m_c.solve(&m_c.solve(coarse_pair.stiffness()).transpose());
    let g = (&g + g.transpose()) * 0.5;
    // λ(G Q) = λ(Lᵀ G L) with Q = L Lᵀ
    let l = cholesky(&q, "projected fine stiffness")?.l();
    let sym = l.transpose() * g * &l;
    let sym = (&sym + sym.transpose()) * 0.5;
    Ok(sym.symmetric_eigenvalues().max().max(0.0).sqrt())
}

/// Closed-form bounds for an operator with coercivity `amin` and bound `amax`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TheoryBounds {
    /// Lower bound for the inf-sup constant.
    pub c_b: f64,
    /// Upper bound for the continuity constant.
    pub cap_c_b: f64,
    pub rho: f64,
    /// Factor in `‖u‖_Y ≤ factor · (‖f‖ + ‖u₀‖)`.
    pub norm_bound_factor: f64,
}

pub fn theoretical_constants(amin: f64, amax: f64) -> Result<TheoryBounds> {
    if !(amin > 0.0 && amin <= amax && amax.is_finite()) {
        return Err(Error::invalid(format!("need 0 < Amin <= Amax < inf, got Amin = {amin}, Amax = {amax}")));
    }
    let rho = amax / amin;
    let sqrt2 = std::f64::consts::SQRT_2;
    Ok(TheoryBounds {
        c_b: amin.min(1.0 / rho) / sqrt2,
        cap_c_b: sqrt2 * amax.max(1.0),
        rho,
        norm_bound_factor: sqrt2 * (1.0 / amin).max(rho),
    })
}

/// `err / best_err`.
pub fn quasi_opt_ratio(err: f64, best_err: f64) -> Result<f64> {
    if !(err >= 0.0 && best_err >= 0.0 && err.is_finite() && best_err.is_finite()) {
        return Err(Error::invalid(format!("errors must be finite and non-negative ({err}, {best_err})")));
    }
    if best_err == 0.0 {
        if err == 0.0 {
            return Ok(1.0);
        }
        return Err(Error::Inconsistent(format!(
            "discrete error {err} is positive while the best approximation is exact"
        )));
    }
    Ok(err / best_err)
}

/// All constants of one discretization at one coefficient value.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantsReport {
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub c_s: f64,
    pub c_s_omega: f64,
    pub c_h: Option<f64>,
    /// `√(1 + c²_{S,ω})`
    pub q_s_bound: f64,
    pub c_b_theory: f64,
    pub cap_c_b_theory: f64,
    pub rho: f64,
    /// `ρ` exceeds the admissible bound supplied to [`constants_report`].
    pub rho_exceeds_max: bool,
}

impl ConstantsReport {
    pub fn is_consistent(&self) -> bool {
        let vals = [
            self.sigma_min,
            self.sigma_max,
            self.c_s,
            self.c_s_omega,
            self.q_s_bound,
            self.c_b_theory,
            self.cap_c_b_theory,
            self.rho,
        ];
        vals.iter().chain(self.c_h.iter()).all(|v| v.is_finite() && *v >= 0.0) && self.sigma_min <= self.sigma_max
    }
}

/// Which norms the singular values in a [`ConstantsReport`] refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormChoice {
    /// `Y_ω` against the projected `X_ω^{hk}`.
    Weighted,
    /// `Y` against `X` with the discrete dual term.
    Unweighted,
}

/// Builds the heat operator at `a` and computes every constant in the report.
pub fn constants_report(
    disc: &Discretization,
    a: f64,
    norms: NormChoice,
    rho_max: f64,
    max_dofs: usize,
) -> Result<ConstantsReport> {
    if disc.trial_dofs() > max_dofs {
        return Err(Error::ResourceCap { size: disc.trial_dofs(), cap: max_dofs });
    }
    let b = assemble_full_system(disc, a)?;
    let (g_trial, g_test) = match norms {
        NormChoice::Weighted => (build_gram(disc, a, GramKind::Y_OMEGA)?, build_gram(disc, a, GramKind::X_OMEGA_HK)?),
        NormChoice::Unweighted => (build_gram(disc, a, GramKind::Y)?, build_gram(disc, a, GramKind::X)?),
    };
    let (sigma_min, sigma_max) = discrete_infsup(&b, &g_trial, &g_test)?;
    let k = disc.grid().max_step();
    let c_s = cfl_constant(disc.pair(), k)?;
    let c_s_omega = a * c_s / 12f64.sqrt();
    let theory = theoretical_constants(a, a)?;
    Ok(ConstantsReport {
        sigma_min,
        sigma_max,
        c_s,
        c_s_omega,
        c_h: None,
        q_s_bound: (1.0 + c_s_omega * c_s_omega).sqrt(),
        c_b_theory: theory.c_b,
        cap_c_b_theory: theory.cap_c_b,
        rho: theory.rho,
        rho_exceeds_max: theory.rho > rho_max,
    })
}

/// Dual norm of a load vector with respect to a Gram matrix, `√(bᵀ G⁻¹ b)`.
pub fn gram_dual_norm(load: &DVector<f64>, gram: &DMatrix<f64>) -> Result<f64> {
    let chol = cholesky(gram, "Gram matrix")?;
    Ok(load.dot(&chol.solve(load)).max(0.0).sqrt())
}
