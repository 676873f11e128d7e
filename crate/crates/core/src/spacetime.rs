//! Space-time Petrov-Galerkin discretization for one parameter value.
//!
//! Trial space: piecewise polynomials of degree `q` in time on each interval,
//! tensorized with `V_h`. Test space: continuous piecewise polynomials of
//! degree `q + 1` vanishing at the final time. For `q = 0` the trial functions
//! are interval-wise constants `U_i` and the test functions are the hats
//! `hat_j`, `j = 0..N-1`, so the square system is block lower bidiagonal and
//! collapses to a Crank-Nicolson-like recursion
//!
//! ```text
//! (M + k_j/2 · aS) U_j = (M − k_{j−1}/2 · aS) U_{j−1} + F_j
//! ```
//!
//! Only `q = 0` is solved; other degrees are carried in the types and rejected
//! by every assembly routine.
//!
//! Index conventions (0-based): trial interval `i` is `(t_i, t_{i+1}]` and its
//! coefficients live at `(i·(q+1) + l)·n_dof ..`; test node `j` is `t_j`.

use nalgebra::{Cholesky, DMatrix, DVector, DVectorView, Dyn};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fem_space::{check_len, mode_eigenvalue, mode_load, SpatialPair};
use crate::quadrature::{gauss_on, legendre};

/// Partition `0 = t_0 < t_1 < … < t_N = T` of the time interval.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    nodes: Vec<f64>,
}

impl TimeGrid {
    pub fn uniform(t_final: f64, n_intervals: usize) -> Result<Self> {
        if n_intervals == 0 || !(t_final > 0.0 && t_final.is_finite()) {
            return Err(Error::invalid(format!(
                "uniform grid needs N >= 1 and T > 0 (got N = {n_intervals}, T = {t_final})"
            )));
        }
        let k = t_final / n_intervals as f64;
        let mut nodes: Vec<f64> = (0..n_intervals).map(|i| i as f64 * k).collect();
        nodes.push(t_final);
        Ok(TimeGrid { nodes })
    }

    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 || nodes[0] != 0.0 {
            return Err(Error::invalid("time grid must start at 0 and contain at least one interval"));
        }
        if nodes.windows(2).any(|w| w[1].partial_cmp(&w[0]) != Some(std::cmp::Ordering::Greater) || !w[1].is_finite()) {
            return Err(Error::invalid("time grid nodes must be finite and strictly increasing"));
        }
        Ok(TimeGrid { nodes })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn n_intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn t_final(&self) -> f64 {
        *self.nodes.last().unwrap()
    }

    pub fn interval(&self, i: usize) -> (f64, f64) {
        (self.nodes[i], self.nodes[i + 1])
    }

    /// Length `k_i` of interval `i`.
    pub fn step(&self, i: usize) -> f64 {
        self.nodes[i + 1] - self.nodes[i]
    }

    /// Largest step `k`.
    pub fn max_step(&self) -> f64 {
        (0..self.n_intervals()).map(|i| self.step(i)).fold(0.0, f64::max)
    }

    pub fn is_uniform(&self) -> bool {
        let k0 = self.step(0);
        (1..self.n_intervals()).all(|i| (self.step(i) - k0).abs() <= 1e-14 * k0)
    }

    /// Splits every interval into `factor` equal parts.
    pub fn refine(&self, factor: usize) -> Result<TimeGrid> {
        if factor == 0 {
            return Err(Error::invalid("refinement factor must be positive"));
        }
        let mut nodes = Vec::with_capacity(self.n_intervals() * factor + 1);
        for i in 0..self.n_intervals() {
            let (lo, hi) = self.interval(i);
            nodes.extend((0..factor).map(|s| lo + (hi - lo) * s as f64 / factor as f64));
        }
        nodes.push(self.t_final());
        TimeGrid::from_nodes(nodes)
    }
}

/// Spatial space, time grid and trial degree `q`.
#[derive(Debug, Clone)]
pub struct Discretization {
    pair: SpatialPair,
    grid: TimeGrid,
    q: usize,
}

impl Discretization {
    pub fn new(pair: SpatialPair, grid: TimeGrid, q: usize) -> Self {
        Discretization { pair, grid, q }
    }

    pub fn pair(&self) -> &SpatialPair {
        &self.pair
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn n_space(&self) -> usize {
        self.pair.n_dofs()
    }

    pub fn trial_dofs(&self) -> usize {
        self.grid.n_intervals() * (self.q + 1) * self.n_space()
    }

    /// Equal to [`trial_dofs`](Self::trial_dofs): `N(q+1)` temporal test functions survive `X(T) = 0`.
    pub fn test_dofs(&self) -> usize {
        self.trial_dofs()
    }

    /// Same spatial space on a different time grid.
    pub fn with_grid(&self, grid: TimeGrid) -> Discretization {
        Discretization { pair: self.pair.clone(), grid, q: self.q }
    }

    pub(crate) fn require_lowest_order(&self) -> Result<()> {
        if self.q != 0 {
            return Err(Error::Unsupported(format!("trial degree q = {} (only q = 0 is implemented)", self.q)));
        }
        Ok(())
    }
}

/// Temporal factor `g(t)` of the separable forcing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TimeProfile {
    Zero,
    Constant,
    /// `sin(πt)`
    SinPi,
}

impl TimeProfile {
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            TimeProfile::Zero => 0.0,
            TimeProfile::Constant => 1.0,
            TimeProfile::SinPi => (PI * t).sin(),
        }
    }
}

/// Pathwise coefficients `a(ω)` and `c₀(ω)` of `u̇ − aΔu = c₀ g(t) φ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub a: f64,
    pub c0: f64,
}

impl Coefficients {
    pub fn new(a: f64, c0: f64) -> Self {
        Coefficients { a, c0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0 && self.a.is_finite()) {
            return Err(Error::InvalidCoefficient(self.a));
        }
        if !self.c0.is_finite() {
            return Err(Error::invalid(format!("forcing amplitude c0 = {} is not finite", self.c0)));
        }
        Ok(())
    }
}

/// Forcing `f(t, ω, ξ) = c₀(ω) g(t) ψ(ξ)` and initial datum `u₀`.
///
/// `spatial_load` holds `∫ ψ φ_i`; for the experiments `ψ` is the first
/// Dirichlet sine mode.
#[derive(Debug, Clone)]
pub struct ProblemData {
    pub profile: TimeProfile,
    pub spatial_load: DVector<f64>,
    pub initial: DVector<f64>,
}

impl ProblemData {
    /// `g = sin(πt)`, `ψ = Π sin(πξ_d)`, `u₀ = 0`.
    pub fn mode(disc: &Discretization) -> Self {
        ProblemData {
            profile: TimeProfile::SinPi,
            spatial_load: mode_load(disc.pair().mesh()),
            initial: DVector::zeros(disc.n_space()),
        }
    }

    pub fn with_profile(mut self, profile: TimeProfile) -> Self {
        self.profile = profile;
        self
    }

    pub fn with_initial(mut self, initial: DVector<f64>) -> Result<Self> {
        check_len(initial.len(), self.spatial_load.len())?;
        self.initial = initial;
        Ok(self)
    }

    fn check(&self, disc: &Discretization) -> Result<()> {
        check_len(self.spatial_load.len(), disc.n_space())?;
        check_len(self.initial.len(), disc.n_space())
    }

    /// `‖f‖²_{L²(0,T;V_h*)}` for the given amplitude.
    pub fn forcing_dual_norm_sq(&self, disc: &Discretization, c0: f64) -> f64 {
        let grid = disc.grid();
        let g_sq: f64 = (0..grid.n_intervals())
            .flat_map(|i| {
                let (lo, hi) = grid.interval(i);
                gauss_on(5, lo, hi)
            })
            .map(|(t, w)| w * self.profile.eval(t).powi(2))
            .sum();
        c0 * c0 * g_sq * disc.pair().functional_dual_norm(&self.spatial_load).powi(2)
    }
}

/// Coefficients of a discrete trial function, `N × (q+1) × n_dof`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceTimeSolution {
    n_intervals: usize,
    q: usize,
    n_space: usize,
    coeffs: DVector<f64>,
}

impl SpaceTimeSolution {
    pub fn zeros(disc: &Discretization) -> Self {
        SpaceTimeSolution {
            n_intervals: disc.grid().n_intervals(),
            q: disc.q(),
            n_space: disc.n_space(),
            coeffs: DVector::zeros(disc.trial_dofs()),
        }
    }

    pub fn from_coeffs(disc: &Discretization, coeffs: DVector<f64>) -> Result<Self> {
        check_len(coeffs.len(), disc.trial_dofs())?;
        Ok(SpaceTimeSolution { coeffs, ..Self::zeros(disc) })
    }

    pub fn n_intervals(&self) -> usize {
        self.n_intervals
    }

    pub fn coeffs(&self) -> &DVector<f64> {
        &self.coeffs
    }

    /// Spatial coefficient vector of Legendre index `l` on interval `i`.
    pub fn block(&self, i: usize, l: usize) -> DVectorView<'_, f64> {
        let start = (i * (self.q + 1) + l) * self.n_space;
        self.coeffs.rows(start, self.n_space)
    }

    pub fn set_block(&mut self, i: usize, l: usize, v: &DVector<f64>) {
        let start = (i * (self.q + 1) + l) * self.n_space;
        self.coeffs.rows_mut(start, self.n_space).copy_from(v);
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|x| x.is_finite())
    }

    /// `(∫‖U‖²_V dt)^{1/2}` for `q = 0`.
    pub fn y_norm(&self, disc: &Discretization) -> f64 {
        let s = disc.pair().stiffness();
        (0..self.n_intervals)
            .map(|i| {
                let u = self.block(i, 0);
                disc.grid().step(i) * u.dot(&(s * u))
            })
            .sum::<f64>()
            .max(0.0)
            .sqrt()
    }
}

/// `∫ g(t) hat_j(t) dt` for `j = 0..N-1`, with 4-point Gauss per interval.
pub fn time_load_weights(grid: &TimeGrid, profile: TimeProfile) -> Vec<f64> {
    let n = grid.n_intervals();
    let mut w = vec![0.0; n + 1];
    if profile == TimeProfile::Zero {
        w.truncate(n);
        return w;
    }
    for i in 0..n {
        let (lo, hi) = grid.interval(i);
        let k = hi - lo;
        for (t, wq) in gauss_on(4, lo, hi) {
            let g = profile.eval(t);
            w[i] += wq * g * (hi - t) / k;
            w[i + 1] += wq * g * (t - lo) / k;
        }
    }
    w.truncate(n);
    w
}

/// Load vector `F(X) = ∫⟨f, X⟩ dt + (u₀, X(0))` on the test basis.
pub fn assemble_load(data: &ProblemData, disc: &Discretization, coeffs: Coefficients) -> Result<DVector<f64>> {
    disc.require_lowest_order()?;
    data.check(disc)?;
    let n = disc.n_space();
    let weights = time_load_weights(disc.grid(), data.profile);
    let mut load = DVector::zeros(disc.test_dofs());
    for (j, w) in weights.iter().enumerate() {
        load.rows_mut(j * n, n).axpy(coeffs.c0 * w, &data.spatial_load, 0.0);
    }
    let m_u0 = disc.pair().mass() * &data.initial;
    load.rows_mut(0, n).axpy(1.0, &m_u0, 1.0);
    Ok(load)
}

/// Solves the discrete problem by marching through the block bidiagonal system.
pub fn solve_pathwise(data: &ProblemData, disc: &Discretization, coeffs: Coefficients) -> Result<SpaceTimeSolution> {
    coeffs.validate()?;
    let load = assemble_load(data, disc, coeffs)?;
    let n = disc.n_space();
    let grid = disc.grid();
    let m = disc.pair().mass();
    let a_s = disc.pair().stiffness() * coeffs.a;

    let mut factor: Option<(f64, Cholesky<f64, Dyn>)> = None;
    let mut sol = SpaceTimeSolution::zeros(disc);
    let mut prev: Option<DVector<f64>> = None;
    for j in 0..grid.n_intervals() {
        let k = grid.step(j);
        let reuse = matches!(&factor, Some((kf, _)) if *kf == k);
        if !reuse {
            let lhs = m + &a_s * (0.5 * k);
            let chol = Cholesky::new(lhs).ok_or_else(|| Error::NotPositiveDefinite(format!("step matrix {j}")))?;
            factor = Some((k, chol));
        }
        let mut rhs: DVector<f64> = load.rows(j * n, n).into_owned();
        if let Some(u) = &prev {
            let km = grid.step(j - 1);
            rhs += m * u - &a_s * u * (0.5 * km);
        }
        let u = factor.as_ref().unwrap().1.solve(&rhs);
        sol.set_block(j, 0, &u);
        prev = Some(u);
    }
    if !sol.is_finite() {
        return Err(Error::InvalidCoefficient(coeffs.a));
    }
    Ok(sol)
}

/// Matrix of `B*(Y, X) = ∫ (Y, −Ẋ) + a(∇Y, ∇X) dt`, rows = test, columns = trial.
pub fn assemble_full_system(disc: &Discretization, a: f64) -> Result<DMatrix<f64>> {
    disc.require_lowest_order()?;
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::InvalidCoefficient(a));
    }
    Ok(assemble_bilinear(disc, a))
}

// Unchecked assembly, also valid for a = 0 (pure transport part).
pub(crate) fn assemble_bilinear(disc: &Discretization, a: f64) -> DMatrix<f64> {
    let n = disc.n_space();
    let nt = disc.grid().n_intervals();
    let m = disc.pair().mass();
    let a_s = disc.pair().stiffness() * a;
    let mut b = DMatrix::zeros(nt * n, nt * n);
    for j in 0..nt {
        let k = disc.grid().step(j);
        b.view_mut((j * n, j * n), (n, n)).copy_from(&(m + &a_s * (0.5 * k)));
        if j > 0 {
            let km = disc.grid().step(j - 1);
            b.view_mut((j * n, (j - 1) * n), (n, n)).copy_from(&(&a_s * (0.5 * km) - m));
        }
    }
    b
}

/// Legendre coefficients of the L²(lo, hi) projection of `f` onto polynomials of degree `q`.
///
/// The basis is `P_l` mapped affinely from `[-1, 1]`; for `q = 0` the single
/// coefficient is the interval mean.
pub fn legendre_project<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, q: usize) -> Vec<f64> {
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    let pts: Vec<(f64, f64)> = gauss_on(q + 8, -1.0, 1.0).collect();
    (0..=q)
        .map(|l| {
            let s: f64 = pts.iter().map(|&(x, w)| w * f(mid + half * x) * legendre(l, x)).sum();
            s * (2 * l + 1) as f64 / 2.0
        })
        .collect()
}

/// Which discrete norm a Gram matrix realizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GramKind {
    /// `∫‖Y‖²_V`, or `∫‖A^{1/2} Y‖²_H` when weighted.
    Trial { weighted: bool },
    /// `‖X(0)‖²_H + ∫ ‖X‖²_V + ‖Ẋ‖²_{V_h*}`; weighted replaces the V and dual
    /// terms by their `A^{±1/2}` versions, projected replaces `X` by its
    /// interval means in the V term.
    Test { weighted: bool, projected: bool },
}

impl GramKind {
    pub const Y: GramKind = GramKind::Trial { weighted: false };
    pub const Y_OMEGA: GramKind = GramKind::Trial { weighted: true };
    pub const X: GramKind = GramKind::Test { weighted: false, projected: false };
    pub const X_OMEGA: GramKind = GramKind::Test { weighted: true, projected: false };
    pub const X_OMEGA_HK: GramKind = GramKind::Test { weighted: true, projected: true };
}

pub fn build_gram(disc: &Discretization, a: f64, kind: GramKind) -> Result<DMatrix<f64>> {
    disc.require_lowest_order()?;
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::InvalidCoefficient(a));
    }
    let n = disc.n_space();
    let grid = disc.grid();
    let nt = grid.n_intervals();
    let s = disc.pair().stiffness();
    let mut g = DMatrix::zeros(nt * n, nt * n);
    match kind {
        GramKind::Trial { weighted } => {
            let w = if weighted { a } else { 1.0 };
            for i in 0..nt {
                g.view_mut((i * n, i * n), (n, n)).copy_from(&(s * (w * grid.step(i))));
            }
        }
        GramKind::Test { weighted, projected } => {
            let (wv, wd) = if weighted { (a, 1.0 / a) } else { (1.0, 1.0) };
            let m = disc.pair().mass();
            let d = disc.pair().dual_gram();
            // P1-in-time hat integrals; projected hats have mean 1/2 on both neighbours
            let (diag_m, off_m) = if projected { (4.0, 4.0) } else { (3.0, 6.0) };
            for j in 0..nt {
                let right = grid.step(j);
                let left = if j > 0 { grid.step(j - 1) } else { 0.0 };
                let tm = (left + right) / diag_m;
                let ts = 1.0 / right + if j > 0 { 1.0 / left } else { 0.0 };
                let mut blk = s * (wv * tm) + &d * (wd * ts);
                if j == 0 {
                    blk += m;
                }
                g.view_mut((j * n, j * n), (n, n)).copy_from(&blk);
                if j + 1 < nt {
                    let off = s * (wv * right / off_m) - &d * (wd / right);
                    g.view_mut((j * n, (j + 1) * n), (n, n)).copy_from(&off);
                    g.view_mut(((j + 1) * n, j * n), (n, n)).copy_from(&off);
                }
            }
        }
    }
    Ok(g)
}

/// `√(cᵀ G c)`.
pub fn evaluate_norm(coeffs: &DVector<f64>, gram: &DMatrix<f64>) -> Result<f64> {
    check_len(coeffs.len(), gram.nrows())?;
    Ok(coeffs.dot(&(gram * coeffs)).max(0.0).sqrt())
}

/// Spatial factor of a separable function `T(t) · w(ξ)`.
#[derive(Debug, Clone)]
pub enum SpatialShape {
    /// First Dirichlet sine mode.
    Mode,
    /// A function already in `V_h`, by coefficients.
    Discrete(DVector<f64>),
}

impl SpatialShape {
    /// Coefficients of the V-orthogonal (Ritz) projection onto `V_h`.
    pub fn ritz_projection(&self, pair: &SpatialPair) -> DVector<f64> {
        match self {
            SpatialShape::Mode => {
                let mesh = pair.mesh();
                pair.solve_stiffness(&(mode_load(mesh) * mode_eigenvalue(mesh.dim())))
            }
            SpatialShape::Discrete(w) => w.clone(),
        }
    }
}

/// Y-orthogonal projection of `T(t)·w(ξ)` onto the trial space (`q = 0`).
///
/// The Y inner product separates, so the projection is the Ritz projection of
/// `w` times the interval means of `T`.
pub fn best_approximation<F: Fn(f64) -> f64>(
    disc: &Discretization,
    shape: &SpatialShape,
    profile: F,
) -> Result<SpaceTimeSolution> {
    disc.require_lowest_order()?;
    let p = shape.ritz_projection(disc.pair());
    check_len(p.len(), disc.n_space())?;
    let mut sol = SpaceTimeSolution::zeros(disc);
    for i in 0..disc.grid().n_intervals() {
        let (lo, hi) = disc.grid().interval(i);
        let mean = legendre_project(&profile, lo, hi, 0)[0];
        sol.set_block(i, 0, &(&p * mean));
    }
    Ok(sol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem_space::{assemble, build_mesh};

    fn disc(dim: usize, cells: usize, steps: usize) -> Discretization {
        let pair = assemble(&build_mesh(dim, cells, 1).unwrap()).unwrap();
        Discretization::new(pair, TimeGrid::uniform(1.0, steps).unwrap(), 0)
    }

    #[test]
    fn grid_basics() {
        let g = TimeGrid::uniform(1.0, 4).unwrap();
        assert_eq!(g.n_intervals(), 4);
        assert_eq!(g.max_step(), 0.25);
        let total: f64 = (0..4).map(|i| g.step(i)).sum();
        assert_eq!(total, 1.0);
        assert!(TimeGrid::from_nodes(vec![0.0, 0.5, 0.5, 1.0]).is_err());
        assert!(TimeGrid::from_nodes(vec![0.1, 1.0]).is_err());
        let r = g.refine(3).unwrap();
        assert_eq!(r.n_intervals(), 12);
        assert_eq!(r.t_final(), 1.0);
    }

    #[test]
    fn trial_and_test_dimensions_agree() {
        let d = disc(1, 8, 5);
        assert_eq!(d.trial_dofs(), 5 * 7);
        assert_eq!(d.test_dofs(), d.trial_dofs());
    }

    #[test]
    fn higher_trial_degree_is_rejected() {
        let d = disc(1, 4, 4);
        let d1 = Discretization::new(d.pair().clone(), d.grid().clone(), 1);
        let data = ProblemData::mode(&d1);
        assert!(matches!(assemble_load(&data, &d1, Coefficients::new(1.0, 1.0)), Err(Error::Unsupported(_))));
        assert!(matches!(assemble_full_system(&d1, 1.0), Err(Error::Unsupported(_))));
        assert!(matches!(build_gram(&d1, 1.0, GramKind::Y), Err(Error::Unsupported(_))));
    }

    #[test]
    fn zero_data_gives_zero_load_and_solution() {
        let d = disc(1, 6, 5);
        let data = ProblemData::mode(&d).with_profile(TimeProfile::Zero);
        let c = Coefficients::new(1.0, 1.0);
        assert_eq!(assemble_load(&data, &d, c).unwrap().amax(), 0.0);
        assert_eq!(solve_pathwise(&data, &d, c).unwrap().coeffs().amax(), 0.0);
    }

    #[test]
    fn initial_datum_only_enters_first_block() {
        let d = disc(1, 6, 5);
        let u0 = DVector::from_fn(5, |i, _| (i as f64 + 1.0) * 0.1);
        let data = ProblemData::mode(&d).with_profile(TimeProfile::Zero).with_initial(u0.clone()).unwrap();
        let f = assemble_load(&data, &d, Coefficients::new(1.0, 1.0)).unwrap();
        let mu0 = d.pair().mass() * &u0;
        assert!((f.rows(0, 5) - &mu0).amax() < 1e-15);
        assert_eq!(f.rows(5, 20).amax(), 0.0);
    }

    #[test]
    fn sine_time_weights_match_closed_form() {
        // ∫ sin(πt) hat_j(t) dt = 2 (1 − cos πk) sin(π t_j) / (π² k) for interior nodes
        let n = 16;
        let grid = TimeGrid::uniform(1.0, n).unwrap();
        let k = 1.0 / n as f64;
        let w = time_load_weights(&grid, TimeProfile::SinPi);
        for j in 1..n {
            let exact = 2.0 * (1.0 - (PI * k).cos()) * (PI * j as f64 * k).sin() / (PI * PI * k);
            assert!((w[j] - exact).abs() < 1e-12, "node {j}");
        }
        // half hat at t = 0: ∫_0^k sin(πt)(1 − t/k) dt = 1/π − sin(πk)/(π² k)
        let exact0 = 1.0 / PI - (PI * k).sin() / (PI * PI * k);
        assert!((w[0] - exact0).abs() < 1e-12);
    }

    #[test]
    fn single_dof_first_step_by_hand() {
        // M = 1/3, S = 4, a = 1: (1/3 + 2k) U_1 = F_0
        let d = disc(1, 2, 8);
        let data = ProblemData::mode(&d);
        let c = Coefficients::new(1.0, 1.0);
        let f = assemble_load(&data, &d, c).unwrap();
        let u = solve_pathwise(&data, &d, c).unwrap();
        let k = 0.125;
        assert!((u.block(0, 0)[0] - f[0] / (1.0 / 3.0 + 2.0 * k)).abs() < 1e-15);
        let u1 = u.block(0, 0)[0];
        let u2 = (f[1] + (1.0 / 3.0 - 2.0 * k) * u1) / (1.0 / 3.0 + 2.0 * k);
        assert!((u.block(1, 0)[0] - u2).abs() < 1e-15);
    }

    #[test]
    fn full_system_block_structure() {
        let d = disc(1, 4, 3);
        let a = 0.7;
        let b = assemble_full_system(&d, a).unwrap();
        let m = d.pair().mass();
        let s = d.pair().stiffness();
        let k = 1.0 / 3.0;
        let diag = m + s * (a * k / 2.0);
        let sub = s * (a * k / 2.0) - m;
        for j in 0..3 {
            assert!((b.view((3 * j, 3 * j), (3, 3)) - &diag).amax() < 1e-14);
            if j > 0 {
                assert!((b.view((3 * j, 3 * (j - 1)), (3, 3)) - &sub).amax() < 1e-14);
            }
            for i in (j + 1)..3 {
                assert_eq!(b.view((3 * j, 3 * i), (3, 3)).amax(), 0.0);
            }
        }
    }

    #[test]
    fn nonpositive_coefficient_is_a_pathwise_failure() {
        let d = disc(1, 4, 3);
        let data = ProblemData::mode(&d);
        for a in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert!(matches!(solve_pathwise(&data, &d, Coefficients::new(a, 1.0)), Err(Error::InvalidCoefficient(_))));
            assert!(assemble_full_system(&d, a).is_err());
        }
        // a = 0 leaves only the transport part: −M on the sub-diagonal, M on the diagonal
        let b0 = assemble_bilinear(&d, 0.0);
        let m = d.pair().mass();
        assert!((b0.view((3, 0), (3, 3)) + m).amax() < 1e-15);
        assert!((b0.view((3, 3), (3, 3)) - m).amax() < 1e-15);
    }

    #[test]
    fn marching_agrees_with_full_solve() {
        for (dim, cells, steps, a) in [(1, 8, 6, 0.3), (1, 5, 9, 4.0), (2, 4, 5, 1.0)] {
            let d = disc(dim, cells, steps);
            let data = ProblemData::mode(&d);
            let c = Coefficients::new(a, 1.3);
            let u = solve_pathwise(&data, &d, c).unwrap();
            let b = assemble_full_system(&d, a).unwrap();
            let f = assemble_load(&data, &d, c).unwrap();
            let direct = b.clone().lu().solve(&f).unwrap();
            let gy = build_gram(&d, a, GramKind::Y).unwrap();
            let diff = evaluate_norm(&(u.coeffs() - &direct), &gy).unwrap();
            assert!(diff <= 1e-10 * evaluate_norm(&direct, &gy).unwrap());
            let res = (&b * u.coeffs() - &f).norm();
            assert!(res <= 1e-10 * f.norm());
        }
    }

    #[test]
    fn nonuniform_grid_marching_agrees_with_full_solve() {
        let pair = assemble(&build_mesh(1, 6, 2).unwrap()).unwrap();
        let grid = TimeGrid::from_nodes(vec![0.0, 0.1, 0.15, 0.4, 0.7, 1.0]).unwrap();
        let d = Discretization::new(pair, grid, 0);
        let data = ProblemData::mode(&d);
        let c = Coefficients::new(2.0, 1.0);
        let u = solve_pathwise(&data, &d, c).unwrap();
        let res = &assemble_full_system(&d, 2.0).unwrap() * u.coeffs() - assemble_load(&data, &d, c).unwrap();
        assert!(res.amax() < 1e-13);
    }

    #[test]
    fn steady_state_embedding_reproduces_load_after_first_block() {
        // A u = b with constant forcing: B applied to the constant-in-time embedding
        let d = disc(1, 7, 6);
        let a = 1.5;
        let data = ProblemData::mode(&d).with_profile(TimeProfile::Constant);
        let c = Coefficients::new(a, 1.0);
        let steady = d.pair().solve_stiffness(&data.spatial_load) / a;
        let mut emb = SpaceTimeSolution::zeros(&d);
        for i in 0..6 {
            emb.set_block(i, 0, &steady);
        }
        let bu = assemble_full_system(&d, a).unwrap() * emb.coeffs();
        let f = assemble_load(&data, &d, c).unwrap();
        let n = d.n_space();
        assert!((bu.rows(n, 5 * n) - f.rows(n, 5 * n)).amax() < 1e-12);
        // first block differs by M u (the transport term at t = 0)
        let mu = d.pair().mass() * &steady;
        assert!((bu.rows(0, n) - f.rows(0, n) - mu).amax() < 1e-12);
    }

    #[test]
    fn legendre_projection_examples() {
        let k = 0.3;
        assert!((legendre_project(|t| t, 0.0, k, 0)[0] - k / 2.0).abs() < 1e-15);
        for q in 0..4 {
            let c = legendre_project(|_| 2.5, 0.2, 0.9, q);
            assert!((c[0] - 2.5).abs() < 1e-14);
            assert!(c[1..].iter().all(|x| x.abs() < 1e-14));
            // Legendre polynomial of degree q+1 on the interval
            let (lo, hi) = (0.2, 0.9);
            let p = legendre_project(|t| legendre(q + 1, (2.0 * t - lo - hi) / (hi - lo)), lo, hi, q);
            assert!(p.iter().all(|x| x.abs() < 1e-14));
        }
    }

    #[test]
    fn trial_grams() {
        let d = disc(1, 5, 4);
        let gy = build_gram(&d, 3.0, GramKind::Y).unwrap();
        let gyw = build_gram(&d, 3.0, GramKind::Y_OMEGA).unwrap();
        let s = d.pair().stiffness();
        assert!((gy.view((4, 4), (4, 4)) - s * 0.25).amax() < 1e-14);
        assert_eq!(gy.view((0, 4), (4, 4)).amax(), 0.0);
        assert!((gyw - gy * 3.0).amax() < 1e-12);
    }

    #[test]
    fn grams_are_positive_definite() {
        for a in [0.1, 1.0, 7.3] {
            let d = disc(1, 4, 4);
            for kind in [GramKind::Y, GramKind::Y_OMEGA, GramKind::X, GramKind::X_OMEGA, GramKind::X_OMEGA_HK] {
                let g = build_gram(&d, a, kind).unwrap();
                assert!((&g - g.transpose()).amax() < 1e-12 * g.amax());
                assert!(g.cholesky().is_some(), "{kind:?} a={a}");
            }
        }
    }

    #[test]
    fn norm_evaluation_basics() {
        let d = disc(1, 4, 3);
        let g = build_gram(&d, 1.0, GramKind::Y).unwrap();
        assert_eq!(evaluate_norm(&DVector::zeros(9), &g).unwrap(), 0.0);
        let v = DVector::from_fn(9, |i, _| (i as f64).sin());
        let n1 = evaluate_norm(&v, &g).unwrap();
        assert!((evaluate_norm(&(&v * -2.5), &g).unwrap() - 2.5 * n1).abs() < 1e-13);
        assert!(matches!(evaluate_norm(&DVector::zeros(8), &g), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn best_approximation_is_idempotent_on_discrete_functions() {
        let d = disc(1, 6, 4);
        let w = DVector::from_fn(5, |i, _| 1.0 + i as f64);
        // piecewise constant in time on the grid
        let profile = |t: f64| {
            if t < 0.25 {
                1.0
            } else if t < 0.5 {
                -2.0
            } else if t < 0.75 {
                0.5
            } else {
                3.0
            }
        };
        let best = best_approximation(&d, &SpatialShape::Discrete(w.clone()), profile).unwrap();
        for (i, c) in [1.0, -2.0, 0.5, 3.0].iter().enumerate() {
            assert!((best.block(i, 0) - &w * *c).amax() < 1e-12);
        }
    }
}
