//! Reduced bases: POD by the method of snapshots in the mass inner product,
//! and the discrete Dirichlet-Laplacian eigenbasis.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{BandedSymMatrix, BidiagonalFactor, FeVector, Mesh};
use crate::linalg::{jacobi_eigh, DenseMatrix};
use crate::solver::SnapshotSet;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BasisKind {
    Pod,
    Spectral,
}

impl fmt::Display for BasisKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BasisKind::Pod => "pod",
            BasisKind::Spectral => "spectral",
        })
    }
}

impl std::str::FromStr for BasisKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pod" | "POD" => Ok(BasisKind::Pod),
            "spectral" | "Spectral" => Ok(BasisKind::Spectral),
            other => Err(Error::Format(format!("unknown basis kind '{other}'"))),
        }
    }
}

/// Rule deciding how many POD modes to keep: modes with `λ_k > tol · λ_1`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankTolerance {
    /// `tol = n_s · ε` with `n_s` the snapshot count, the usual numerical-rank
    /// cutoff for an `n_s × n_s` correlation matrix.
    #[default]
    SnapshotCount,
    /// Fixed relative threshold.
    Relative(f64),
}

impl RankTolerance {
    pub fn resolve(self, n_snapshots: usize) -> f64 {
        match self {
            RankTolerance::SnapshotCount => n_snapshots as f64 * f64::EPSILON,
            RankTolerance::Relative(t) => t,
        }
    }
}

/// Ordered mass-orthonormal basis vectors with their eigenvalues.
///
/// POD eigenvalues are nonincreasing (captured energy per mode); spectral
/// eigenvalues are the increasing generalized eigenvalues of `(K, M)`.
#[derive(Debug, Clone)]
pub struct BasisSet {
    pub kind: BasisKind,
    pub mesh: Mesh,
    pub vectors: Vec<FeVector>,
    pub eigenvalues: Vec<f64>,
    pub rank_tol: f64,
}

impl BasisSet {
    /// Retained dimension.
    pub fn d(&self) -> usize {
        self.vectors.len()
    }

    pub(crate) fn check_m(&self, m: usize) -> Result<()> {
        if m == 0 || m > self.d() {
            return Err(Error::ModeOutOfRange { m, d: self.d() });
        }
        Ok(())
    }
}

/// `u = y + z` with `y = P_m u` and `z = (I − P_m) u`.
#[derive(Debug, Clone)]
pub struct ModeSplit {
    pub m: usize,
    pub y: FeVector,
    pub z: FeVector,
    /// `(u, w_k)` for `k = 1..=m`.
    pub coefficients: Vec<f64>,
}

/// Flips `v` so its entry of largest magnitude is positive.
fn normalize_sign(v: &mut [f64]) {
    let mut idx = 0;
    let mut best = 0.0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > best {
            best = x.abs();
            idx = i;
        }
    }
    if v.get(idx).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// POD of every snapshot in `snaps`.
pub fn build_pod(snaps: &SnapshotSet, mass: &BandedSymMatrix, rank_tol: RankTolerance) -> Result<BasisSet> {
    let mesh = snaps.mesh()?;
    build_pod_from_states(&mesh, snaps.states.iter(), mass, rank_tol)
}

/// POD of an arbitrary snapshot collection.
///
/// With `L Lᵀ = M` and snapshot matrix `S`, the modes are `w_k = L⁻ᵀ v_k`
/// where `(λ_k, v_k)` are eigenpairs of `G = Lᵀ S Sᵀ L / n_s`. This is the
/// `n_dof`-sized twin of the temporal correlation `Sᵀ M S / n_s`: both share
/// their nonzero spectrum, and the modes are M-orthonormal by construction.
pub fn build_pod_from_states<'a, I>(
    mesh: &Mesh,
    states: I,
    mass: &BandedSymMatrix,
    rank_tol: RankTolerance,
) -> Result<BasisSet>
where
    I: IntoIterator<Item = &'a FeVector>,
{
    let n = mesh.n_dof();
    if mass.dim() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: mass.dim(),
        });
    }
    let chol = mass.cholesky()?;
    let mut gram = DenseMatrix::zeros(n, n);
    let mut n_s = 0usize;
    for s in states {
        s.check_mesh(mesh)?;
        let b = chol.mul_transpose(s.as_slice());
        for i in 0..n {
            let bi = b[i];
            if bi == 0.0 {
                continue;
            }
            for j in i..n {
                gram[(i, j)] += bi * b[j];
            }
        }
        n_s += 1;
    }
    if n_s < 2 {
        return Err(Error::TooFewSnapshots(n_s));
    }
    let inv = 1.0 / n_s as f64;
    for i in 0..n {
        for j in i..n {
            let v = gram[(i, j)] * inv;
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
    }
    let eig = jacobi_eigh(&gram)?;
    let lambda1 = eig.values[0];
    if !(lambda1 > 0.0) {
        return Err(Error::ZeroSnapshots);
    }
    let tol = rank_tol.resolve(n_s);
    let cutoff = tol * lambda1;
    let mut vectors = Vec::new();
    let mut eigenvalues = Vec::new();
    for (lam, v) in eig.values.iter().zip(&eig.vectors) {
        if *lam <= cutoff || *lam <= 0.0 {
            break;
        }
        let mut w = chol.solve_upper(v);
        normalize_sign(&mut w);
        vectors.push(FeVector::from_values(mesh, w)?);
        eigenvalues.push(*lam);
    }
    Ok(BasisSet {
        kind: BasisKind::Pod,
        mesh: *mesh,
        vectors,
        eigenvalues,
        rank_tol: tol,
    })
}

/// First `count` generalized eigenpairs `K w = λ M w`, ascending in `λ`.
///
/// Reduced to the standard problem `L⁻¹ K L⁻ᵀ v = λ v` with the Cholesky
/// factor of `M`, then `w = L⁻ᵀ v`.
pub fn build_spectral(
    mesh: &Mesh,
    mass: &BandedSymMatrix,
    stiffness: &BandedSymMatrix,
    count: usize,
) -> Result<BasisSet> {
    let n = mesh.n_dof();
    if count == 0 || count > n {
        return Err(Error::SpectralCountOutOfRange { count, n_dof: n });
    }
    let chol = mass.cholesky()?;
    let reduced = reduce_pencil(&chol, stiffness);
    let eig = jacobi_eigh(&reduced)?;
    let mut vectors = Vec::with_capacity(count);
    let mut eigenvalues = Vec::with_capacity(count);
    for (lam, v) in eig.values.iter().zip(&eig.vectors).rev().take(count) {
        let mut w = chol.solve_upper(v);
        normalize_sign(&mut w);
        vectors.push(FeVector::from_values(mesh, w)?);
        eigenvalues.push(*lam);
    }
    Ok(BasisSet {
        kind: BasisKind::Spectral,
        mesh: *mesh,
        vectors,
        eigenvalues,
        rank_tol: 0.0,
    })
}

/// `L⁻¹ K L⁻ᵀ`, symmetrized.
fn reduce_pencil(chol: &BidiagonalFactor, stiffness: &BandedSymMatrix) -> DenseMatrix {
    let n = chol.dim();
    let mut c = DenseMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    for j in 0..n {
        e.iter_mut().for_each(|x| *x = 0.0);
        e[j] = 1.0;
        let x = chol.solve_upper(&e);
        let col = chol.solve_lower(&stiffness.matvec(&x));
        for i in 0..n {
            c[(i, j)] = col[i];
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (c[(i, j)] + c[(j, i)]);
            c[(i, j)] = v;
            c[(j, i)] = v;
        }
    }
    c
}

/// Splits `u` into its projection on the first `m` modes and the complement.
pub fn project(u: &FeVector, basis: &BasisSet, m: usize, mass: &BandedSymMatrix) -> Result<ModeSplit> {
    basis.check_m(m)?;
    u.check_mesh(&basis.mesh)?;
    let mu = mass.matvec(u.as_slice());
    let mut y = FeVector::zeros(&basis.mesh);
    let mut coefficients = Vec::with_capacity(m);
    for w in &basis.vectors[..m] {
        let c = crate::linalg::dot(w.as_slice(), &mu);
        y.axpy(c, w);
        coefficients.push(c);
    }
    let z = u - &y;
    Ok(ModeSplit {
        m,
        y,
        z,
        coefficients,
    })
}

/// Share of the total eigenvalue sum carried by the first `m` modes.
pub fn energy_fraction(basis: &BasisSet, m: usize) -> Result<f64> {
    basis.check_m(m)?;
    let total: f64 = basis.eigenvalues.iter().sum();
    let head: f64 = basis.eigenvalues[..m].iter().sum();
    Ok(head / total)
}

/// Smallest `m` whose energy fraction reaches `threshold`.
pub fn modes_for_fraction(basis: &BasisSet, threshold: f64) -> Option<usize> {
    let total: f64 = basis.eigenvalues.iter().sum();
    let mut acc = 0.0;
    for (k, lam) in basis.eigenvalues.iter().enumerate() {
        acc += lam;
        if acc >= threshold * total {
            return Some(k + 1);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{assemble_mass, assemble_stiffness, build_mesh, inner};

    fn mass_norm(v: &FeVector, m: &BandedSymMatrix) -> f64 {
        inner(v, v, m).unwrap().sqrt()
    }

    #[test]
    fn repeated_snapshot_gives_one_mode() {
        let mesh = build_mesh(16).unwrap();
        let m = assemble_mass(&mesh);
        let s = FeVector::from_values(&mesh, (0..15).map(|i| ((i + 1) as f64 * 0.3).sin()).collect()).unwrap();
        let states = vec![s.clone(); 5];
        let basis = build_pod_from_states(&mesh, &states, &m, RankTolerance::default()).unwrap();
        assert_eq!(basis.d(), 1);
        let norm = mass_norm(&s, &m);
        assert!((basis.eigenvalues[0] - norm * norm).abs() < 1e-14);
        for (a, b) in basis.vectors[0].as_slice().iter().zip(s.as_slice()) {
            assert!((a - b / norm).abs() < 1e-12);
        }
    }

    #[test]
    fn two_orthogonal_snapshots() {
        let mesh = build_mesh(4).unwrap();
        let m = assemble_mass(&mesh);
        // a = (1, 0, -1) and b = (1, 1, 1)·c are M-orthogonal by symmetry.
        let a = FeVector::from_values(&mesh, vec![2.0, 0.0, -2.0]).unwrap();
        let b = FeVector::from_values(&mesh, vec![0.5, 0.5, 0.5]).unwrap();
        assert!(inner(&a, &b, &m).unwrap().abs() < 1e-15);
        let (na, nb) = (mass_norm(&a, &m), mass_norm(&b, &m));
        assert!(na > nb);
        let basis = build_pod_from_states(&mesh, [&a, &b], &m, RankTolerance::default()).unwrap();
        assert_eq!(basis.d(), 2);
        assert!((basis.eigenvalues[0] - na * na / 2.0).abs() < 1e-14);
        assert!((basis.eigenvalues[1] - nb * nb / 2.0).abs() < 1e-14);
        for (w, s, n) in [(&basis.vectors[0], &a, na), (&basis.vectors[1], &b, nb)] {
            for (x, y) in w.as_slice().iter().zip(s.as_slice()) {
                assert!((x.abs() - (y / n).abs()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pod_errors() {
        let mesh = build_mesh(4).unwrap();
        let m = assemble_mass(&mesh);
        let z = FeVector::zeros(&mesh);
        assert!(matches!(
            build_pod_from_states(&mesh, [&z], &m, RankTolerance::default()),
            Err(Error::TooFewSnapshots(1))
        ));
        assert!(matches!(
            build_pod_from_states(&mesh, std::iter::empty(), &m, RankTolerance::default()),
            Err(Error::TooFewSnapshots(0))
        ));
        assert!(matches!(
            build_pod_from_states(&mesh, [&z, &z], &m, RankTolerance::default()),
            Err(Error::ZeroSnapshots)
        ));
    }

    #[test]
    fn spectral_first_mode() {
        let mesh = build_mesh(128).unwrap();
        let (m, k) = (assemble_mass(&mesh), assemble_stiffness(&mesh));
        let basis = build_spectral(&mesh, &m, &k, 10).unwrap();
        let pi2 = std::f64::consts::PI.powi(2);
        assert!((basis.eigenvalues[0] / pi2 - 1.0).abs() < 1e-3);
        assert!(basis.eigenvalues.windows(2).all(|w| w[0] < w[1]));
        let w1 = &basis.vectors[0];
        assert!(w1.as_slice().iter().all(|&v| v > 0.0));
        let peak = w1.as_slice().iter().cloned().fold(0.0, f64::max);
        for (x, v) in mesh.interior_nodes().iter().zip(w1.as_slice()) {
            let exact = 2f64.sqrt() * (std::f64::consts::PI * x).sin();
            assert!((v - exact).abs() <= 1e-2 * peak);
        }
        assert!(matches!(
            build_spectral(&mesh, &m, &k, 128),
            Err(Error::SpectralCountOutOfRange { .. })
        ));
        assert!(build_spectral(&mesh, &m, &k, 0).is_err());
    }

    #[test]
    fn projection_basics() {
        let mesh = build_mesh(32).unwrap();
        let (m, k) = (assemble_mass(&mesh), assemble_stiffness(&mesh));
        let basis = build_spectral(&mesh, &m, &k, 6).unwrap();
        let split = project(&basis.vectors[0], &basis, 1, &m).unwrap();
        assert!(split.z.max_abs() < 1e-12);
        for (a, b) in split.y.as_slice().iter().zip(basis.vectors[0].as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(matches!(
            project(&basis.vectors[0], &basis, 0, &m),
            Err(Error::ModeOutOfRange { m: 0, d: 6 })
        ));
        assert!(project(&basis.vectors[0], &basis, 7, &m).is_err());
    }

    #[test]
    fn fractions() {
        let mesh = build_mesh(4).unwrap();
        let basis = BasisSet {
            kind: BasisKind::Pod,
            mesh,
            vectors: vec![FeVector::zeros(&mesh); 3],
            eigenvalues: vec![6.0, 3.0, 1.0],
            rank_tol: 0.0,
        };
        assert_eq!(energy_fraction(&basis, 3).unwrap(), 1.0);
        assert!((energy_fraction(&basis, 1).unwrap() - 0.6).abs() < 1e-15);
        assert_eq!(modes_for_fraction(&basis, 0.8), Some(2));
        assert!(energy_fraction(&basis, 4).is_err());
        let single = BasisSet {
            eigenvalues: vec![2.5],
            vectors: vec![FeVector::zeros(&mesh)],
            ..basis
        };
        assert_eq!(energy_fraction(&single, 1).unwrap(), 1.0);
    }

    #[test]
    fn kind_round_trips_through_str() {
        for k in [BasisKind::Pod, BasisKind::Spectral] {
            assert_eq!(k.to_string().parse::<BasisKind>().unwrap(), k);
        }
        assert!("svd".parse::<BasisKind>().is_err());
    }
}
