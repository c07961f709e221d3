//! Piecewise-linear finite elements on a uniform partition of [0, 1].
//!
//! Homogeneous Dirichlet values are eliminated: every vector and matrix here
//! lives on the `n_cells - 1` interior nodes only. All integrals are evaluated
//! exactly for the piecewise-polynomial integrands that occur, so identities
//! such as `trilinear(v, v, v) = 0` hold to rounding.

use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Abscissae of the 2-point Gauss rule mapped to the reference cell [0, 1].
const GAUSS2: [f64; 2] = [
    0.211_324_865_405_187_1, // (1 - 1/sqrt(3)) / 2
    0.788_675_134_594_812_9, // (1 + 1/sqrt(3)) / 2
];

/// Uniform mesh of the unit interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    n_cells: usize,
    h: f64,
}

impl Mesh {
    pub fn new(n_cells: usize) -> Result<Self> {
        if n_cells < 2 {
            return Err(Error::MeshTooSmall(n_cells));
        }
        Ok(Self {
            n_cells,
            h: 1.0 / n_cells as f64,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    /// Cell width.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Number of interior nodes, i.e. unknowns.
    pub fn n_dof(&self) -> usize {
        self.n_cells - 1
    }

    /// Coordinate of interior node `i` (zero based, so node 0 sits at `h`).
    pub fn node(&self, i: usize) -> f64 {
        (i + 1) as f64 * self.h
    }

    /// Interior node coordinates.
    pub fn interior_nodes(&self) -> Vec<f64> {
        (0..self.n_dof()).map(|i| self.node(i)).collect()
    }
}

/// Builds the uniform mesh with `n_cells` cells.
pub fn build_mesh(n_cells: usize) -> Result<Mesh> {
    Mesh::new(n_cells)
}

/// Coefficients of a P1 function that vanishes at both end points.
#[derive(Debug, Clone, PartialEq)]
pub struct FeVector {
    n_cells: usize,
    values: Vec<f64>,
}

impl FeVector {
    pub fn zeros(mesh: &Mesh) -> Self {
        Self {
            n_cells: mesh.n_cells(),
            values: vec![0.0; mesh.n_dof()],
        }
    }

    pub fn from_values(mesh: &Mesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.n_dof() {
            return Err(Error::DimensionMismatch {
                expected: mesh.n_dof(),
                got: values.len(),
            });
        }
        Ok(Self {
            n_cells: mesh.n_cells(),
            values,
        })
    }

    /// Unit coefficient vector of the hat function at interior node `i`.
    pub fn hat(mesh: &Mesh, i: usize) -> Self {
        let mut v = Self::zeros(mesh);
        v.values[i] = 1.0;
        v
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            n_cells: self.n_cells,
            values: self.values.iter().map(|v| v * s).collect(),
        }
    }

    /// `self += s * other`
    pub fn axpy(&mut self, s: f64, other: &FeVector) {
        debug_assert_eq!(self.len(), other.len());
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += s * b;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Nodal values including the two homogeneous boundary nodes.
    pub fn with_boundary(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len() + 2);
        out.push(0.0);
        out.extend_from_slice(&self.values);
        out.push(0.0);
        out
    }

    pub(crate) fn check_mesh(&self, mesh: &Mesh) -> Result<()> {
        if self.n_cells != mesh.n_cells() {
            return Err(Error::MeshMismatch {
                left: self.n_cells,
                right: mesh.n_cells(),
            });
        }
        Ok(())
    }
}

impl Add for &FeVector {
    type Output = FeVector;

    fn add(self, rhs: &FeVector) -> FeVector {
        debug_assert_eq!(self.len(), rhs.len());
        FeVector {
            n_cells: self.n_cells,
            values: self.values.iter().zip(&rhs.values).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &FeVector {
    type Output = FeVector;

    fn sub(self, rhs: &FeVector) -> FeVector {
        debug_assert_eq!(self.len(), rhs.len());
        FeVector {
            n_cells: self.n_cells,
            values: self.values.iter().zip(&rhs.values).map(|(a, b)| a - b).collect(),
        }
    }
}

/// General tridiagonal matrix. `lower[i]` sits at `(i + 1, i)` and
/// `upper[i]` at `(i, i + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiagonal {
    pub fn zeros(n: usize) -> Self {
        Self {
            lower: vec![0.0; n.saturating_sub(1)],
            diag: vec![0.0; n],
            upper: vec![0.0; n.saturating_sub(1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = self.diag[i] * x[i];
            if i > 0 {
                s += self.lower[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                s += self.upper[i] * x[i + 1];
            }
            y[i] = s;
        }
        y
    }

    /// Row-major dense copy.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            a[i][i] = self.diag[i];
            if i + 1 < n {
                a[i][i + 1] = self.upper[i];
                a[i + 1][i] = self.lower[i];
            }
        }
        a
    }

    /// `self + s * other` for a symmetric banded `other`.
    pub fn add_scaled_sym(&self, s: f64, other: &BandedSymMatrix) -> Tridiagonal {
        Tridiagonal {
            lower: self.lower.iter().zip(&other.off).map(|(a, b)| a + s * b).collect(),
            diag: self.diag.iter().zip(&other.diag).map(|(a, b)| a + s * b).collect(),
            upper: self.upper.iter().zip(&other.off).map(|(a, b)| a + s * b).collect(),
        }
    }

    /// Thomas elimination without pivoting.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        if b.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: b.len(),
            });
        }
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut pivot = self.diag[0];
        if pivot.abs() < 1e-300 {
            return Err(Error::SingularPivot { row: 0, pivot });
        }
        if n > 1 {
            c[0] = self.upper[0] / pivot;
        }
        d[0] = b[0] / pivot;
        for i in 1..n {
            pivot = self.diag[i] - self.lower[i - 1] * c[i - 1];
            if pivot.abs() < 1e-300 {
                return Err(Error::SingularPivot { row: i, pivot });
            }
            if i + 1 < n {
                c[i] = self.upper[i] / pivot;
            }
            d[i] = (b[i] - self.lower[i - 1] * d[i - 1]) / pivot;
        }
        for i in (0..n.saturating_sub(1)).rev() {
            d[i] -= c[i] * d[i + 1];
        }
        Ok(d)
    }
}

/// Symmetric tridiagonal matrix: the storage for mass and stiffness.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedSymMatrix {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl BandedSymMatrix {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut s = self.diag[i] * x[i];
            if i > 0 {
                s += self.off[i - 1] * x[i - 1];
            }
            if i + 1 < n {
                s += self.off[i] * x[i + 1];
            }
            y[i] = s;
        }
        y
    }

    pub fn apply(&self, x: &FeVector) -> FeVector {
        FeVector {
            n_cells: x.n_cells,
            values: self.matvec(&x.values),
        }
    }

    /// `uᵀ A v` without forming `A v`.
    pub fn quad_form(&self, u: &[f64], v: &[f64]) -> f64 {
        let n = self.dim();
        let mut s = 0.0;
        for i in 0..n {
            let mut av = self.diag[i] * v[i];
            if i > 0 {
                av += self.off[i - 1] * v[i - 1];
            }
            if i + 1 < n {
                av += self.off[i] * v[i + 1];
            }
            s += u[i] * av;
        }
        s
    }

    pub fn to_tridiagonal(&self) -> Tridiagonal {
        Tridiagonal {
            lower: self.off.clone(),
            diag: self.diag.clone(),
            upper: self.off.clone(),
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        self.to_tridiagonal().to_dense()
    }

    /// Linear combination `a * self + b * other`.
    pub fn combine(&self, a: f64, other: &BandedSymMatrix, b: f64) -> BandedSymMatrix {
        BandedSymMatrix {
            diag: self.diag.iter().zip(&other.diag).map(|(x, y)| a * x + b * y).collect(),
            off: self.off.iter().zip(&other.off).map(|(x, y)| a * x + b * y).collect(),
        }
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.to_tridiagonal().solve(b)
    }

    /// Cholesky factor `L` with `L Lᵀ = A`; bidiagonal for a tridiagonal SPD matrix.
    pub fn cholesky(&self) -> Result<BidiagonalFactor> {
        let n = self.dim();
        let mut diag = vec![0.0; n];
        let mut sub = vec![0.0; n.saturating_sub(1)];
        for i in 0..n {
            let mut p = self.diag[i];
            if i > 0 {
                p -= sub[i - 1] * sub[i - 1];
            }
            if p <= 0.0 || !p.is_finite() {
                return Err(Error::NotPositiveDefinite { row: i, pivot: p });
            }
            diag[i] = p.sqrt();
            if i + 1 < n {
                sub[i] = self.off[i] / diag[i];
            }
        }
        Ok(BidiagonalFactor { diag, sub })
    }
}

/// Lower bidiagonal Cholesky factor: `L[i][i] = diag[i]`, `L[i+1][i] = sub[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BidiagonalFactor {
    pub diag: Vec<f64>,
    pub sub: Vec<f64>,
}

impl BidiagonalFactor {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// `Lᵀ x`
    pub fn mul_transpose(&self, x: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * x[i];
                if i + 1 < n {
                    s += self.sub[i] * x[i + 1];
                }
                s
            })
            .collect()
    }

    /// Solves `L x = b` (forward substitution).
    pub fn solve_lower(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut x = vec![0.0; n];
        for i in 0..n {
            let mut r = b[i];
            if i > 0 {
                r -= self.sub[i - 1] * x[i - 1];
            }
            x[i] = r / self.diag[i];
        }
        x
    }

    /// Solves `Lᵀ x = b` (back substitution).
    pub fn solve_upper(&self, b: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let mut r = b[i];
            if i + 1 < n {
                r -= self.sub[i] * x[i + 1];
            }
            x[i] = r / self.diag[i];
        }
        x
    }
}

/// P1 mass matrix on interior nodes: `2h/3` on the diagonal, `h/6` off it.
pub fn assemble_mass(mesh: &Mesh) -> BandedSymMatrix {
    let h = mesh.h();
    let n = mesh.n_dof();
    BandedSymMatrix {
        diag: vec![2.0 * h / 3.0; n],
        off: vec![h / 6.0; n - 1],
    }
}

/// P1 stiffness matrix on interior nodes: `2/h` on the diagonal, `-1/h` off it.
pub fn assemble_stiffness(mesh: &Mesh) -> BandedSymMatrix {
    let h = mesh.h();
    let n = mesh.n_dof();
    BandedSymMatrix {
        diag: vec![2.0 / h; n],
        off: vec![-1.0 / h; n - 1],
    }
}

/// Padded nodal value at global node `j` (0 and `n_cells` are boundary nodes).
#[inline]
fn nodal(v: &[f64], j: usize) -> f64 {
    if j == 0 || j > v.len() {
        0.0
    } else {
        v[j - 1]
    }
}

/// `∫₀¹ u v_x w dx` for the P1 reconstructions, exact via 2-point Gauss per cell.
pub fn trilinear(u: &FeVector, v: &FeVector, w: &FeVector, mesh: &Mesh) -> Result<f64> {
    u.check_mesh(mesh)?;
    v.check_mesh(mesh)?;
    w.check_mesh(mesh)?;
    Ok(trilinear_slices(u.as_slice(), v.as_slice(), w.as_slice(), mesh.h()))
}

pub(crate) fn trilinear_slices(u: &[f64], v: &[f64], w: &[f64], h: f64) -> f64 {
    let n_cells = u.len() + 1;
    let half_h = 0.5 * h;
    let mut total = 0.0;
    for e in 0..n_cells {
        let (u0, u1) = (nodal(u, e), nodal(u, e + 1));
        let (w0, w1) = (nodal(w, e), nodal(w, e + 1));
        let vx = (nodal(v, e + 1) - nodal(v, e)) / h;
        let mut cell = 0.0;
        for &q in &GAUSS2 {
            let uq = u0 + (u1 - u0) * q;
            let wq = w0 + (w1 - w0) * q;
            cell += uq * wq;
        }
        total += half_h * vx * cell;
    }
    total
}

/// Assembled convection vector `N(u)_i = ∫ u u_x φ_i`.
pub fn convection(u: &FeVector, mesh: &Mesh) -> Result<FeVector> {
    u.check_mesh(mesh)?;
    Ok(FeVector {
        n_cells: mesh.n_cells(),
        values: convection_slice(u.as_slice(), mesh.h()),
    })
}

pub(crate) fn convection_slice(u: &[f64], h: f64) -> Vec<f64> {
    let n = u.len();
    let n_cells = n + 1;
    let mut out = vec![0.0; n];
    for e in 0..n_cells {
        let (u0, u1) = (nodal(u, e), nodal(u, e + 1));
        let ux = (u1 - u0) / h;
        let (mut left, mut right) = (0.0, 0.0);
        for &q in &GAUSS2 {
            let uq = u0 + (u1 - u0) * q;
            left += uq * (1.0 - q);
            right += uq * q;
        }
        // Global node e is interior index e - 1.
        if e >= 1 {
            out[e - 1] += 0.5 * h * ux * left;
        }
        if e < n {
            out[e] += 0.5 * h * ux * right;
        }
    }
    out
}

/// `uᵀ A v`, the discrete `(u, v)` for `A = M` and `(u_x, v_x)` for `A = K`.
pub fn inner(u: &FeVector, v: &FeVector, a: &BandedSymMatrix) -> Result<f64> {
    if u.len() != a.dim() || v.len() != a.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.dim(),
            got: if u.len() != a.dim() { u.len() } else { v.len() },
        });
    }
    Ok(a.quad_form(u.as_slice(), v.as_slice()))
}

/// Nodal interpolant of the step `1` on (0, 1/2], `0` on (1/2, 1].
pub fn interpolate_step_ic(mesh: &Mesh) -> Result<FeVector> {
    if mesh.n_cells() % 2 != 0 {
        return Err(Error::OddCellCount(mesh.n_cells()));
    }
    let half = mesh.n_cells() / 2;
    // Interior index i is node i + 1; node `half` is x = 1/2 and takes 1.
    let values = (0..mesh.n_dof())
        .map(|i| if i < half { 1.0 } else { 0.0 })
        .collect();
    FeVector::from_values(mesh, values)
}

/// Solves `A x = b` for a symmetric tridiagonal `A`.
pub fn solve_banded(a: &BandedSymMatrix, b: &FeVector) -> Result<FeVector> {
    let x = a.solve(b.as_slice())?;
    Ok(FeVector {
        n_cells: b.n_cells,
        values: x,
    })
}

/// Solves `A x = b` for a general tridiagonal `A`.
pub fn solve_tridiagonal(a: &Tridiagonal, b: &FeVector) -> Result<FeVector> {
    let x = a.solve(b.as_slice())?;
    Ok(FeVector {
        n_cells: b.n_cells,
        values: x,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mesh_sizes() {
        let m = build_mesh(128).unwrap();
        assert_eq!(m.n_dof(), 127);
        assert_eq!(m.h(), 1.0 / 128.0);
        let m = build_mesh(2).unwrap();
        assert_eq!((m.n_dof(), m.h()), (1, 0.5));
        let m = build_mesh(4).unwrap();
        assert_eq!((m.n_dof(), m.h()), (3, 0.25));
        assert!((m.h() * m.n_cells() as f64 - 1.0).abs() < 1e-15);
        assert!(matches!(build_mesh(1), Err(Error::MeshTooSmall(1))));
        assert!(build_mesh(0).is_err());
    }

    #[test]
    fn mass_and_stiffness_entries() {
        let m2 = build_mesh(2).unwrap();
        assert_eq!(assemble_mass(&m2).diag, vec![1.0 / 3.0]);
        assert!(assemble_mass(&m2).off.is_empty());
        assert_eq!(assemble_stiffness(&m2).diag, vec![4.0]);

        let m4 = build_mesh(4).unwrap();
        let mass = assemble_mass(&m4);
        assert_eq!(mass.diag, vec![1.0 / 6.0; 3]);
        assert_eq!(mass.off, vec![1.0 / 24.0; 2]);
        let k = assemble_stiffness(&m4);
        assert_eq!(k.diag, vec![8.0; 3]);
        assert_eq!(k.off, vec![-4.0; 2]);

        for nc in [2, 4, 8, 128] {
            let mesh = build_mesh(nc).unwrap();
            let h = mesh.h();
            let mass = assemble_mass(&mesh);
            let k = assemble_stiffness(&mesh);
            assert!(mass.diag.iter().all(|&d| d == 2.0 * h / 3.0));
            assert!(mass.off.iter().all(|&d| d == h / 6.0));
            assert!(k.diag.iter().all(|&d| d == 2.0 / h));
            assert!(k.off.iter().all(|&d| d == -1.0 / h));
        }
    }

    #[test]
    fn stiffness_interior_row_sums_vanish() {
        let mesh = build_mesh(8).unwrap();
        let k = assemble_stiffness(&mesh);
        let ones = vec![1.0; mesh.n_dof()];
        let r = k.matvec(&ones);
        for v in &r[1..r.len() - 1] {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn single_hat_trilinear_vanishes() {
        let mesh = build_mesh(8).unwrap();
        for i in 0..mesh.n_dof() {
            let phi = FeVector::hat(&mesh, i);
            assert!(trilinear(&phi, &phi, &phi, &mesh).unwrap().abs() < 1e-15);
        }
    }

    #[test]
    fn trilinear_rejects_foreign_mesh() {
        let a = build_mesh(4).unwrap();
        let b = build_mesh(8).unwrap();
        let u = FeVector::zeros(&a);
        let v = FeVector::zeros(&b);
        assert!(matches!(
            trilinear(&u, &v, &u, &a),
            Err(Error::MeshMismatch { .. })
        ));
    }

    #[test]
    fn convection_matches_trilinear_against_hats() {
        let mesh = build_mesh(8).unwrap();
        let u = FeVector::from_values(&mesh, vec![0.3, -1.0, 0.5, 2.0, 0.1, -0.7, 0.4]).unwrap();
        let n = convection(&u, &mesh).unwrap();
        for i in 0..mesh.n_dof() {
            let phi = FeVector::hat(&mesh, i);
            let t = trilinear(&u, &u, &phi, &mesh).unwrap();
            assert!((n.as_slice()[i] - t).abs() < 1e-15);
        }
    }

    #[test]
    fn inner_on_mass() {
        let mesh = build_mesh(4).unwrap();
        let m = assemble_mass(&mesh);
        let e1 = FeVector::hat(&mesh, 0);
        assert!((inner(&e1, &e1, &m).unwrap() - 1.0 / 6.0).abs() < 1e-16);
        let bad = FeVector::zeros(&build_mesh(8).unwrap());
        assert!(inner(&e1, &bad, &m).is_err());
    }

    #[test]
    fn step_ic_values() {
        let mesh = build_mesh(4).unwrap();
        assert_eq!(interpolate_step_ic(&mesh).unwrap().as_slice(), &[1.0, 1.0, 0.0]);
        let mesh = build_mesh(128).unwrap();
        let u0 = interpolate_step_ic(&mesh).unwrap();
        assert!(u0.as_slice()[..64].iter().all(|&v| v == 1.0));
        assert!(u0.as_slice()[64..].iter().all(|&v| v == 0.0));
        assert_eq!(u0.len(), 127);
        assert!(matches!(
            interpolate_step_ic(&build_mesh(5).unwrap()),
            Err(Error::OddCellCount(5))
        ));
    }

    #[test]
    fn step_ic_mass_norm_closed_form() {
        // Ones on nodes 1..=N/2: the quadratic form sums N/2 diagonal terms
        // and N/2 - 1 neighbour pairs, giving N/2·2h/3 + 2(N/2 - 1)·h/6.
        for nc in [4usize, 16, 128] {
            let mesh = build_mesh(nc).unwrap();
            let h = mesh.h();
            let u0 = interpolate_step_ic(&mesh).unwrap();
            let got = inner(&u0, &u0, &assemble_mass(&mesh)).unwrap();
            let k = (nc / 2) as f64;
            let expected = k * 2.0 * h / 3.0 + 2.0 * (k - 1.0) * h / 6.0;
            assert!((got - expected).abs() < 1e-15);
            assert!((got - 0.5).abs() <= h);
        }
    }

    #[test]
    fn solve_round_trip_on_mass() {
        let mesh = build_mesh(4).unwrap();
        let m = assemble_mass(&mesh);
        let x = FeVector::from_values(&mesh, vec![1.0, 2.0, 3.0]).unwrap();
        let b = m.apply(&x);
        let got = solve_banded(&m, &b).unwrap();
        for (g, e) in got.as_slice().iter().zip(x.as_slice()) {
            assert!((g - e).abs() < 1e-14);
        }
    }

    #[test]
    fn identity_solve_returns_rhs() {
        let eye = BandedSymMatrix {
            diag: vec![1.0; 5],
            off: vec![0.0; 4],
        };
        let b = vec![1.0, -2.0, 3.5, 0.0, 7.0];
        assert_eq!(eye.solve(&b).unwrap(), b);
    }

    #[test]
    fn singular_pivot_reported() {
        let a = Tridiagonal {
            lower: vec![1.0],
            diag: vec![0.0, 1.0],
            upper: vec![1.0],
        };
        assert!(matches!(
            a.solve(&[1.0, 1.0]),
            Err(Error::SingularPivot { row: 0, .. })
        ));
        let b = Tridiagonal {
            lower: vec![1.0],
            diag: vec![1.0, 1.0],
            upper: vec![1.0],
        };
        assert!(matches!(
            b.solve(&[1.0, 1.0]),
            Err(Error::SingularPivot { row: 1, .. })
        ));
    }

    #[test]
    fn cholesky_reproduces_mass() {
        let mesh = build_mesh(16).unwrap();
        let m = assemble_mass(&mesh);
        let l = m.cholesky().unwrap();
        let x: Vec<f64> = (0..mesh.n_dof()).map(|i| (i as f64 * 0.37).sin()).collect();
        // L (Lᵀ x) == M x
        let ltx = l.mul_transpose(&x);
        let mut llt = vec![0.0; x.len()];
        for i in 0..x.len() {
            llt[i] = l.diag[i] * ltx[i] + if i > 0 { l.sub[i - 1] * ltx[i - 1] } else { 0.0 };
        }
        let mx = m.matvec(&x);
        for (a, b) in llt.iter().zip(&mx) {
            assert!((a - b).abs() < 1e-16);
        }
        let back = l.solve_upper(&ltx);
        for (a, b) in back.iter().zip(&x) {
            assert!((a - b).abs() < 1e-13);
        }
        let k = assemble_stiffness(&mesh).combine(-1.0, &m, 0.0);
        assert!(k.cholesky().is_err());
    }
}
