//! Spatial finite element spaces on the unit interval and unit square.
//!
//! `V_h` is spanned either by continuous piecewise-linear hat functions or by
//! C¹ quadratic B-splines on a clamped uniform knot vector, always with the
//! homogeneous Dirichlet condition built into the basis. Two-dimensional
//! spaces are tensor products of the one-dimensional ones, with degrees of
//! freedom numbered lexicographically (`index = iy * n1 + ix`).
//!
//! The V inner product is the H¹₀ seminorm, so the Gram matrices are the mass
//! matrix `M` (H = L²) and the Dirichlet Laplacian stiffness `S` (V).

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quadrature::gauss_on;

/// Uniform mesh of `[0,1]^dim` together with the polynomial degree of `V_h`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Mesh {
    dim: usize,
    n_cells: usize,
    degree: usize,
}

impl Mesh {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Cells per coordinate axis.
    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Cell width.
    pub fn h(&self) -> f64 {
        1.0 / self.n_cells as f64
    }

    pub fn dofs_per_axis(&self) -> usize {
        match self.degree {
            1 => self.n_cells - 1,
            _ => self.n_cells,
        }
    }

    pub fn n_dofs(&self) -> usize {
        self.dofs_per_axis().pow(self.dim as u32)
    }

    pub fn basis_1d(&self) -> Basis1d {
        Basis1d::new(self.n_cells, self.degree)
    }
}

pub fn build_mesh(dim: usize, n_cells: usize, degree: usize) -> Result<Mesh> {
    if n_cells < 2 {
        return Err(Error::invalid(format!("n_cells must be at least 2, got {n_cells}")));
    }
    match (dim, degree) {
        (1, 1) | (1, 2) | (2, 1) => Ok(Mesh { dim, n_cells, degree }),
        (1 | 2, _) => Err(Error::Unsupported(format!(
            "degree {degree} in dimension {dim} (quadratic B-splines are one-dimensional only)"
        ))),
        _ => Err(Error::Unsupported(format!("spatial dimension {dim}"))),
    }
}

/// One-dimensional basis of `V_h ⊂ H¹₀(0,1)`.
#[derive(Debug, Clone)]
pub struct Basis1d {
    n_cells: usize,
    degree: usize,
    knots: Vec<f64>,
}

impl Basis1d {
    fn new(n_cells: usize, degree: usize) -> Self {
        let h = 1.0 / n_cells as f64;
        let knots = if degree == 2 {
            let mut k = vec![0.0, 0.0];
            k.extend((0..=n_cells).map(|i| if i == n_cells { 1.0 } else { i as f64 * h }));
            k.extend([1.0, 1.0]);
            k
        } else {
            Vec::new()
        };
        Basis1d { n_cells, degree, knots }
    }

    pub fn len(&self) -> usize {
        if self.degree == 1 {
            self.n_cells - 1
        } else {
            self.n_cells
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn h(&self) -> f64 {
        1.0 / self.n_cells as f64
    }

    /// Degrees of freedom whose support meets cell `cell`.
    pub fn active(&self, cell: usize) -> impl Iterator<Item = usize> + '_ {
        let n = self.len() as isize;
        let c = cell as isize;
        let range = match self.degree {
            1 => (c - 1)..=c,
            _ => (c - 1)..=(c + 1),
        };
        range.filter(move |&i| i >= 0 && i < n).map(|i| i as usize)
    }

    /// Value and derivative of basis function `i` at `x`.
    pub fn eval(&self, i: usize, x: f64) -> (f64, f64) {
        match self.degree {
            1 => {
                let h = self.h();
                let node = (i + 1) as f64 * h;
                let s = (x - node) / h;
                if (-1.0..=0.0).contains(&s) {
                    (1.0 + s, 1.0 / h)
                } else if s > 0.0 && s <= 1.0 {
                    (1.0 - s, -1.0 / h)
                } else {
                    (0.0, 0.0)
                }
            }
            _ => self.bspline(i + 1, x),
        }
    }

    // Cox-de Boor recursion for the clamped quadratic B-spline with full index `j`.
    fn bspline(&self, j: usize, x: f64) -> (f64, f64) {
        let t = &self.knots;
        let last = t.len() - 1;
        let n0 = |i: usize| -> f64 {
            let closed_right = t[i + 1] == t[last] && t[i] < t[i + 1];
            if (t[i] <= x && x < t[i + 1]) || (closed_right && x == t[last]) {
                1.0
            } else {
                0.0
            }
        };
        let ratio = |num: f64, den: f64| if den == 0.0 { 0.0 } else { num / den };
        let n1 = |i: usize| -> f64 {
            ratio(x - t[i], t[i + 1] - t[i]) * n0(i) + ratio(t[i + 2] - x, t[i + 2] - t[i + 1]) * n0(i + 1)
        };
        let value = ratio(x - t[j], t[j + 2] - t[j]) * n1(j) + ratio(t[j + 3] - x, t[j + 3] - t[j + 1]) * n1(j + 1);
        let deriv = ratio(2.0, t[j + 2] - t[j]) * n1(j) - ratio(2.0, t[j + 3] - t[j + 1]) * n1(j + 1);
        (value, deriv)
    }

    fn quad_points(&self) -> usize {
        if self.degree == 1 {
            2
        } else {
            3
        }
    }
}

/// Mass and stiffness Gram matrices of `V_h`.
#[derive(Debug, Clone)]
pub struct SpatialPair {
    mesh: Mesh,
    mass: DMatrix<f64>,
    stiffness: DMatrix<f64>,
    stiffness_chol: Cholesky<f64, Dyn>,
}

impl SpatialPair {
    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn mass(&self) -> &DMatrix<f64> {
        &self.mass
    }

    pub fn stiffness(&self) -> &DMatrix<f64> {
        &self.stiffness
    }

    pub fn n_dofs(&self) -> usize {
        self.mass.nrows()
    }

    /// Solves `S x = rhs`.
    pub fn solve_stiffness(&self, rhs: &DVector<f64>) -> DVector<f64> {
        self.stiffness_chol.solve(rhs)
    }

    /// `M S⁻¹ M`, the Gram matrix of the discrete dual norm `‖·‖_{V_h*}`.
    pub fn dual_gram(&self) -> DMatrix<f64> {
        let x = self.stiffness_chol.solve(&self.mass);
        let d = &self.mass * x;
        (&d + d.transpose()) * 0.5
    }

    pub fn h_norm(&self, v: &DVector<f64>) -> f64 {
        v.dot(&(&self.mass * v)).max(0.0).sqrt()
    }

    pub fn v_norm(&self, v: &DVector<f64>) -> f64 {
        v.dot(&(&self.stiffness * v)).max(0.0).sqrt()
    }

    /// `‖v‖_{V_h*} = sup_{w ∈ V_h} (v, w)_H / ‖w‖_V`.
    pub fn dual_norm(&self, v: &DVector<f64>) -> Result<f64> {
        check_len(v.len(), self.n_dofs())?;
        let mv = &self.mass * v;
        let z = self.stiffness_chol.solve(&mv);
        Ok(mv.dot(&z).max(0.0).sqrt())
    }

    /// Dual norm of a functional given by its load vector `b_i = ℓ(φ_i)`.
    pub fn functional_dual_norm(&self, load: &DVector<f64>) -> f64 {
        load.dot(&self.stiffness_chol.solve(load)).max(0.0).sqrt()
    }
}

pub(crate) fn check_len(got: usize, expected: usize) -> Result<()> {
    if got != expected {
        return Err(Error::ShapeMismatch { expected, got });
    }
    Ok(())
}

pub fn assemble(mesh: &Mesh) -> Result<SpatialPair> {
    let basis = mesh.basis_1d();
    let (m1, s1) = match mesh.degree {
        1 => hat_matrices(mesh.n_cells),
        _ => (gram_1d(&basis, &basis, false), gram_1d(&basis, &basis, true)),
    };
    let (mass, stiffness) =
        if mesh.dim == 1 { (m1, s1) } else { (m1.kronecker(&m1), s1.kronecker(&m1) + m1.kronecker(&s1)) };
    let stiffness_chol = Cholesky::new(stiffness.clone())
        .ok_or_else(|| Error::NotPositiveDefinite("spatial stiffness matrix".into()))?;
    Ok(SpatialPair { mesh: *mesh, mass, stiffness, stiffness_chol })
}

fn hat_matrices(n_cells: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = n_cells - 1;
    let h = 1.0 / n_cells as f64;
    let mut m = DMatrix::zeros(n, n);
    let mut s = DMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = 4.0 * h / 6.0;
        s[(i, i)] = 2.0 / h;
        if i + 1 < n {
            m[(i, i + 1)] = h / 6.0;
            m[(i + 1, i)] = h / 6.0;
            s[(i, i + 1)] = -1.0 / h;
            s[(i + 1, i)] = -1.0 / h;
        }
    }
    (m, s)
}

/// `∫ ψ_i φ_j` (or `∫ ψ_i' φ_j'`) for two 1D bases, integrated on the cells of the finer one.
pub(crate) fn gram_1d(rows: &Basis1d, cols: &Basis1d, derivative: bool) -> DMatrix<f64> {
    let fine = if rows.n_cells >= cols.n_cells { rows } else { cols };
    let npts = rows.quad_points().max(cols.quad_points());
    let mut g = DMatrix::zeros(rows.len(), cols.len());
    let h = fine.h();
    for cell in 0..fine.n_cells {
        let (lo, hi) = (cell as f64 * h, (cell + 1) as f64 * h);
        let mid = 0.5 * (lo + hi);
        let rc = ((mid / rows.h()) as usize).min(rows.n_cells - 1);
        let cc = ((mid / cols.h()) as usize).min(cols.n_cells - 1);
        for (x, w) in gauss_on(npts, lo, hi) {
            for i in rows.active(rc) {
                let (vi, di) = rows.eval(i, x);
                for j in cols.active(cc) {
                    let (vj, dj) = cols.eval(j, x);
                    g[(i, j)] += w * if derivative { di * dj } else { vi * vj };
                }
            }
        }
    }
    g
}

/// Eigenvalue of `-Δ` for the first Dirichlet mode `Π sin(π ξ_d)`.
pub fn mode_eigenvalue(dim: usize) -> f64 {
    dim as f64 * PI * PI
}

/// `‖φ_mode‖²_H` for the first Dirichlet mode on the unit cube.
pub fn mode_h_norm_sq(dim: usize) -> f64 {
    0.5f64.powi(dim as i32)
}

/// Load vector `b_i = ∫ φ_mode φ_i` of the first Dirichlet mode.
///
/// Since every basis function vanishes on the boundary, `∫ ∇φ_mode·∇φ_i = λ b_i`
/// with `λ = mode_eigenvalue(dim)`.
pub fn mode_load(mesh: &Mesh) -> DVector<f64> {
    let basis = mesh.basis_1d();
    let b1 = if mesh.degree == 1 {
        let h = mesh.h();
        let factor = 2.0 * (1.0 - (PI * h).cos()) / (PI * PI * h);
        DVector::from_fn(basis.len(), |i, _| factor * (PI * (i + 1) as f64 * h).sin())
    } else {
        let mut b = DVector::zeros(basis.len());
        let h = mesh.h();
        for cell in 0..mesh.n_cells {
            for (x, w) in gauss_on(5, cell as f64 * h, (cell + 1) as f64 * h) {
                let s = (PI * x).sin();
                for i in basis.active(cell) {
                    b[i] += w * s * basis.eval(i, x).0;
                }
            }
        }
        b
    };
    if mesh.dim == 1 {
        b1
    } else {
        b1.kronecker(&b1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mesh_dof_counts() {
        assert_eq!(build_mesh(1, 2, 1).unwrap().n_dofs(), 1);
        assert_eq!(build_mesh(1, 8, 2).unwrap().n_dofs(), 8);
        assert_eq!(build_mesh(2, 4, 1).unwrap().n_dofs(), 9);
        let m = build_mesh(1, 7, 1).unwrap();
        assert_eq!(m.h() * m.n_cells() as f64, 1.0);
    }

    #[test]
    fn mesh_guards() {
        assert!(matches!(build_mesh(1, 1, 1), Err(Error::InvalidArgument(_))));
        assert!(matches!(build_mesh(2, 4, 2), Err(Error::Unsupported(_))));
        assert!(matches!(build_mesh(3, 4, 1), Err(Error::Unsupported(_))));
        assert!(matches!(build_mesh(1, 4, 3), Err(Error::Unsupported(_))));
    }

    #[test]
    fn single_dof_matrices() {
        let pair = assemble(&build_mesh(1, 2, 1).unwrap()).unwrap();
        assert!((pair.mass()[(0, 0)] - 1.0 / 3.0).abs() < 1e-15);
        assert!((pair.stiffness()[(0, 0)] - 4.0).abs() < 1e-15);
    }

    #[test]
    fn hat_stencils() {
        let n = 10;
        let h = 0.1;
        let pair = assemble(&build_mesh(1, n, 1).unwrap()).unwrap();
        let (m, s) = (pair.mass(), pair.stiffness());
        for i in 1..n - 2 {
            assert!((m[(i, i - 1)] - h / 6.0).abs() < 1e-15);
            assert!((m[(i, i)] - 4.0 * h / 6.0).abs() < 1e-15);
            assert!((s[(i, i)] - 2.0 / h).abs() < 1e-12);
            assert!((s[(i, i + 1)] + 1.0 / h).abs() < 1e-12);
        }
    }

    #[test]
    fn quadrature_assembly_agrees_with_closed_form_for_hats() {
        let basis = Basis1d::new(6, 1);
        let (m, s) = hat_matrices(6);
        assert!((gram_1d(&basis, &basis, false) - m).amax() < 1e-14);
        assert!((gram_1d(&basis, &basis, true) - s).amax() < 1e-12);
    }

    #[test]
    fn basis_vanishes_on_boundary() {
        for degree in [1, 2] {
            let b = Basis1d::new(5, degree);
            for i in 0..b.len() {
                assert_eq!(b.eval(i, 0.0).0, 0.0);
                assert!(b.eval(i, 1.0).0.abs() < 1e-15, "degree {degree} fn {i}");
            }
        }
    }

    #[test]
    fn bsplines_with_boundary_pieces_form_partition_of_unity_inside() {
        // the interior splines alone sum to one on cells away from the boundary
        let b = Basis1d::new(8, 2);
        for &x in &[0.3, 0.45, 0.6, 0.7] {
            let s: f64 = (0..b.len()).map(|i| b.eval(i, x).0).sum();
            assert!((s - 1.0).abs() < 1e-14, "x={x}");
        }
    }

    #[test]
    fn bsplines_are_c1() {
        let b = Basis1d::new(4, 2);
        let eps = 1e-9;
        for i in 0..b.len() {
            for k in 1..4 {
                let x = k as f64 * 0.25;
                let (vl, dl) = b.eval(i, x - eps);
                let (vr, dr) = b.eval(i, x + eps);
                assert!((vl - vr).abs() < 1e-7);
                assert!((dl - dr).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn mass_row_sums_match_basis_integrals() {
        for degree in [1, 2] {
            let mesh = build_mesh(1, 10, degree).unwrap();
            let pair = assemble(&mesh).unwrap();
            let basis = mesh.basis_1d();
            // interior functions: support away from the boundary cells
            for i in 2..basis.len() - 2 {
                let integral: f64 = (0..10)
                    .flat_map(|c| gauss_on(3, c as f64 * 0.1, (c + 1) as f64 * 0.1))
                    .map(|(x, w)| w * basis.eval(i, x).0)
                    .sum();
                let row: f64 = pair.mass().row(i).sum();
                assert!((row - integral).abs() < 1e-14, "degree {degree} row {i}");
            }
        }
    }

    #[test]
    fn grams_are_spd() {
        for (dim, n, deg) in [(1, 8, 1), (1, 8, 2), (2, 4, 1)] {
            let pair = assemble(&build_mesh(dim, n, deg).unwrap()).unwrap();
            for g in [pair.mass(), pair.stiffness()] {
                assert!((g - g.transpose()).amax() < 1e-13);
                let eig = g.clone().symmetric_eigen();
                assert!(eig.eigenvalues.min() > 0.0);
            }
        }
    }

    #[test]
    fn dual_norm_examples() {
        let pair = assemble(&build_mesh(1, 2, 1).unwrap()).unwrap();
        assert_eq!(pair.dual_norm(&DVector::zeros(1)).unwrap(), 0.0);
        let v = DVector::from_element(1, 1.0);
        assert!((pair.dual_norm(&v).unwrap() - 1.0 / 6.0).abs() < 1e-15);
        assert!(matches!(pair.dual_norm(&DVector::zeros(2)), Err(Error::ShapeMismatch { .. })));
    }

    #[test]
    fn dual_norm_is_tight_on_generalized_eigenvectors() {
        let pair = assemble(&build_mesh(1, 8, 1).unwrap()).unwrap();
        // S v = λ M v via the Cholesky factor of M
        let lm = pair.mass().clone().cholesky().unwrap();
        let linv = lm.l().try_inverse().unwrap();
        let c = &linv * pair.stiffness() * linv.transpose();
        let eig = c.symmetric_eigen();
        for k in 0..eig.eigenvalues.len() {
            let v = linv.transpose() * eig.eigenvectors.column(k);
            let lhs = pair.dual_norm(&v).unwrap() * pair.v_norm(&v);
            let rhs = pair.h_norm(&v).powi(2);
            assert!((lhs - rhs).abs() < 1e-12 * rhs.max(1.0), "eigvec {k}: {lhs} vs {rhs}");
        }
    }

    #[test]
    fn mode_load_closed_form_matches_quadrature() {
        let mesh = build_mesh(1, 12, 1).unwrap();
        let b = mode_load(&mesh);
        let basis = mesh.basis_1d();
        let h = mesh.h();
        for i in 0..basis.len() {
            let q: f64 = (0..12)
                .flat_map(|c| gauss_on(8, c as f64 * h, (c + 1) as f64 * h))
                .map(|(x, w)| w * (PI * x).sin() * basis.eval(i, x).0)
                .sum();
            assert!((b[i] - q).abs() < 1e-14);
        }
    }
}
