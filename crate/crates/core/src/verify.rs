//! Independent oracles for the discretization.
//!
//! Nothing here calls the code path it checks: quadrature uses its own
//! Gauss-Legendre rules and point location, the nonlinear oracle is a
//! lagged-convection fixed point solved with dense LU, and spectral
//! references are closed-form.

use std::f64::consts::PI;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::basis::build_spectral;
use crate::budget::{AveragedBudget, FeOperators};
use crate::error::{Error, Result};
use crate::fem::{build_mesh, interpolate_step_ic, trilinear, FeVector, Mesh, Tridiagonal};
use crate::linalg::DenseMatrix;
use crate::solver::{newton_jacobian, BurgersSystem, CaseConfig};

/// Outcome of one oracle comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub name: String,
    pub max_abs_err: f64,
    pub max_rel_err: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Which error a report's `pass` flag is judged on.
#[derive(Debug, Clone, Copy)]
enum Judge {
    Abs,
    Rel,
}

impl OracleReport {
    fn judged(name: impl Into<String>, abs: f64, rel: f64, tolerance: f64, judge: Judge) -> Self {
        let err = match judge {
            Judge::Abs => abs,
            Judge::Rel => rel,
        };
        Self {
            name: name.into(),
            max_abs_err: abs,
            max_rel_err: rel,
            tolerance,
            pass: err <= tolerance,
        }
    }
}

impl fmt::Display for OracleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<40} abs={:.3e} rel={:.3e} tol={:.1e}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.max_abs_err,
            self.max_rel_err,
            self.tolerance
        )
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on `P_n`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Value and slope of the P1 reconstruction of `v` at `x`.
fn reconstruct(v: &[f64], h: f64, x: f64) -> (f64, f64) {
    let n_cells = v.len() + 1;
    let cell = ((x / h).floor() as usize).min(n_cells - 1);
    let left = if cell == 0 { 0.0 } else { v[cell - 1] };
    let right = if cell == n_cells - 1 { 0.0 } else { v[cell] };
    let xi = x / h - cell as f64;
    (left + (right - left) * xi, (right - left) / h)
}

/// `∫₀¹ u v_x w dx` by `points_per_cell`-point Gauss quadrature on every cell.
pub fn trilinear_oracle(u: &FeVector, v: &FeVector, w: &FeVector, mesh: &Mesh, points_per_cell: usize) -> Result<f64> {
    if points_per_cell < 5 {
        return Err(Error::InvalidConfig(format!(
            "oracle quadrature needs at least 5 points per cell, got {points_per_cell}"
        )));
    }
    for x in [u, v, w] {
        if x.len() != mesh.n_dof() {
            return Err(Error::DimensionMismatch {
                expected: mesh.n_dof(),
                got: x.len(),
            });
        }
    }
    let (gx, gw) = gauss_legendre(points_per_cell);
    let h = mesh.h();
    let mut total = 0.0;
    for cell in 0..mesh.n_cells() {
        let a = cell as f64 * h;
        let mut acc = 0.0;
        for (xi, wi) in gx.iter().zip(&gw) {
            let x = a + 0.5 * h * (1.0 + xi);
            let (uq, _) = reconstruct(u.as_slice(), h, x);
            let (_, vx) = reconstruct(v.as_slice(), h, x);
            let (wq, _) = reconstruct(w.as_slice(), h, x);
            acc += wi * uq * vx * wq;
        }
        total += 0.5 * h * acc;
    }
    Ok(total)
}

/// `N(u)_i = ∫ u u_x φ_i` with the oracle quadrature, restricted to the
/// two cells supporting `φ_i`.
pub fn convection_oracle(u: &[f64], mesh: &Mesh, points_per_cell: usize) -> Vec<f64> {
    let (gx, gw) = gauss_legendre(points_per_cell);
    let h = mesh.h();
    let mut out = vec![0.0; u.len()];
    for (i, o) in out.iter_mut().enumerate() {
        let xi_node = mesh.node(i);
        for cell in [i, i + 1] {
            let a = cell as f64 * h;
            let mut acc = 0.0;
            for (g, wg) in gx.iter().zip(&gw) {
                let x = a + 0.5 * h * (1.0 + g);
                let (uq, ux) = reconstruct(u, h, x);
                let phi = 1.0 - (x - xi_node).abs() / h;
                acc += wg * uq * ux * phi;
            }
            *o += 0.5 * h * acc;
        }
    }
    out
}

/// Dense Gaussian elimination with partial pivoting.
pub fn dense_lu_solve(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.rows();
    if a.cols() != n || b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: b.len(),
        });
    }
    let mut m = a.clone();
    let mut x = b.to_vec();
    for k in 0..n {
        let mut p = k;
        for i in (k + 1)..n {
            if m[(i, k)].abs() > m[(p, k)].abs() {
                p = i;
            }
        }
        if m[(p, k)].abs() < 1e-300 {
            return Err(Error::SingularPivot { row: k, pivot: m[(p, k)] });
        }
        if p != k {
            for j in 0..n {
                let t = m[(k, j)];
                m[(k, j)] = m[(p, j)];
                m[(p, j)] = t;
            }
            x.swap(k, p);
        }
        for i in (k + 1)..n {
            let f = m[(i, k)] / m[(k, k)];
            if f == 0.0 {
                continue;
            }
            for j in k..n {
                m[(i, j)] -= f * m[(k, j)];
            }
            x[i] -= f * x[k];
        }
    }
    for k in (0..n).rev() {
        let mut s = x[k];
        for j in (k + 1)..n {
            s -= m[(k, j)] * x[j];
        }
        x[k] = s / m[(k, k)];
    }
    Ok(x)
}

/// Lagged convection matrix `C(w)_ij = ∫ w φ_j' φ_i`, from closed-form
/// per-cell integrals `∫ w φ_L = h(2w_L + w_R)/6`, `∫ w φ_R = h(w_L + 2w_R)/6`.
fn lagged_convection(w: &[f64], h: f64) -> DenseMatrix {
    let n = w.len();
    let mut c = DenseMatrix::zeros(n, n);
    for cell in 0..=n {
        let wl = if cell == 0 { 0.0 } else { w[cell - 1] };
        let wr = if cell == n { 0.0 } else { w[cell] };
        let int_l = h * (2.0 * wl + wr) / 6.0;
        let int_r = h * (wl + 2.0 * wr) / 6.0;
        // φ_L' = -1/h, φ_R' = 1/h on this cell.
        let idx = [cell.checked_sub(1), (cell < n).then_some(cell)];
        let ints = [int_l, int_r];
        let slopes = [-1.0 / h, 1.0 / h];
        for (a, row) in idx.iter().enumerate() {
            let Some(i) = row else { continue };
            for (b, col) in idx.iter().enumerate() {
                let Some(j) = col else { continue };
                c[(*i, *j)] += ints[a] * slopes[b];
            }
        }
    }
    c
}

const PICARD_MAX_ITER: usize = 500;
const PICARD_TOL: f64 = 1e-13;

/// Backward-Euler step solved by fixed-point iteration on the lagged
/// convection, `(M/Δt + νK + C(v_k)) v_{k+1} = M uⁿ/Δt + M f`.
pub fn picard_solve(u_old: &FeVector, cfg: &CaseConfig) -> Result<FeVector> {
    cfg.validate()?;
    let mesh = cfg.mesh()?;
    let h = mesh.h();
    let n = mesh.n_dof();
    let (md, mo) = (2.0 * h / 3.0, h / 6.0);
    let (kd, ko) = (2.0 / h, -1.0 / h);
    let mut base = DenseMatrix::zeros(n, n);
    for i in 0..n {
        base[(i, i)] = md / cfg.dt + cfg.nu * kd;
        if i + 1 < n {
            base[(i, i + 1)] = mo / cfg.dt + cfg.nu * ko;
            base[(i + 1, i)] = mo / cfg.dt + cfg.nu * ko;
        }
    }
    let mass_apply = |x: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| {
                let mut s = md * x[i];
                if i > 0 {
                    s += mo * x[i - 1];
                }
                if i + 1 < n {
                    s += mo * x[i + 1];
                }
                s
            })
            .collect()
    };
    let mut rhs: Vec<f64> = mass_apply(u_old.as_slice()).iter().map(|v| v / cfg.dt).collect();
    if let Some(f) = &cfg.forcing {
        for (r, mf) in rhs.iter_mut().zip(mass_apply(f)) {
            *r += mf;
        }
    }
    let residual = |v: &[f64]| -> f64 {
        let c = lagged_convection(v, h);
        (0..n)
            .map(|i| {
                let mut s = -rhs[i];
                for j in i.saturating_sub(1)..(i + 2).min(n) {
                    s += (base[(i, j)] + c[(i, j)]) * v[j];
                }
                s.abs()
            })
            .fold(0.0, f64::max)
    };
    let mut v = u_old.as_slice().to_vec();
    let mut res = residual(&v);
    let mut iterations = 0;
    while res > PICARD_TOL {
        if iterations == PICARD_MAX_ITER || !res.is_finite() {
            return Err(Error::PicardDiverged { iterations, residual: res });
        }
        let c = lagged_convection(&v, h);
        let mut a = base.clone();
        for i in 0..n {
            for j in i.saturating_sub(1)..(i + 2).min(n) {
                a[(i, j)] += c[(i, j)];
            }
        }
        v = dense_lu_solve(&a, &rhs)?;
        res = residual(&v);
        iterations += 1;
    }
    FeVector::from_values(&mesh, v)
}

/// `k²π²` and `√2 sin(kπx)` at the interior nodes.
pub fn analytic_spectrum(k: usize, mesh: &Mesh) -> (f64, Vec<f64>) {
    let kpi = k as f64 * PI;
    let shape = mesh
        .interior_nodes()
        .iter()
        .map(|x| 2f64.sqrt() * (kpi * x).sin())
        .collect();
    (kpi * kpi, shape)
}

fn random_vector(rng: &mut ChaCha8Rng, mesh: &Mesh) -> FeVector {
    let v = (0..mesh.n_dof()).map(|_| rng.gen_range(-1.0..1.0)).collect();
    FeVector::from_values(mesh, v).expect("length matches mesh")
}

/// Compares the production trilinear form with the oracle quadrature.
pub fn check_trilinear(seed: u64) -> Result<Vec<OracleReport>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut reports = Vec::new();
    let (mut abs, mut rel) = (0.0_f64, 0.0_f64);
    for nc in [4, 8, 16, 128] {
        let mesh = build_mesh(nc)?;
        for _ in 0..20 {
            let (u, v, w) = (
                random_vector(&mut rng, &mesh),
                random_vector(&mut rng, &mesh),
                random_vector(&mut rng, &mesh),
            );
            let got = trilinear(&u, &v, &w, &mesh)?;
            let want = trilinear_oracle(&u, &v, &w, &mesh, 10)?;
            // Relative to the integrand magnitude: cancellation can make the
            // value itself arbitrarily small.
            let mag = mesh_scale(&u, &v, &w, &mesh);
            abs = abs.max((got - want).abs());
            rel = rel.max((got - want).abs() / mag);
        }
    }
    reports.push(OracleReport::judged("trilinear vs 10-pt Gauss", abs, rel, 1e-12, Judge::Rel));

    let mesh = build_mesh(128)?;
    let mut cubic = 0.0_f64;
    let mut cubic_oracle = 0.0_f64;
    for _ in 0..100 {
        let v = random_vector(&mut rng, &mesh);
        cubic = cubic.max(trilinear(&v, &v, &v, &mesh)?.abs());
        cubic_oracle = cubic_oracle.max(trilinear_oracle(&v, &v, &v, &mesh, 6)?.abs());
    }
    reports.push(OracleReport::judged("trilinear(v,v,v) = 0", cubic, cubic, 1e-13, Judge::Abs));
    reports.push(OracleReport::judged(
        "oracle(v,v,v) = 0",
        cubic_oracle,
        cubic_oracle,
        1e-13,
        Judge::Abs,
    ));

    let (u, v, w) = (
        random_vector(&mut rng, &mesh),
        random_vector(&mut rng, &mesh),
        random_vector(&mut rng, &mesh),
    );
    let a = trilinear_oracle(&u, &v, &w, &mesh, 6)?;
    let b = trilinear_oracle(&u, &v, &w, &mesh, 12)?;
    let mag = mesh_scale(&u, &v, &w, &mesh);
    reports.push(OracleReport::judged(
        "oracle points 6 -> 12",
        (a - b).abs(),
        (a - b).abs() / mag,
        1e-15,
        Judge::Rel,
    ));
    Ok(reports)
}

/// `∫ |u| |v_x| |w|`, the magnitude against which cancellation is measured.
fn mesh_scale(u: &FeVector, v: &FeVector, w: &FeVector, mesh: &Mesh) -> f64 {
    let (gx, gw) = gauss_legendre(6);
    let h = mesh.h();
    let mut total = 0.0;
    for cell in 0..mesh.n_cells() {
        for (xi, wi) in gx.iter().zip(&gw) {
            let x = (cell as f64 + 0.5 * (1.0 + xi)) * h;
            let (uq, _) = reconstruct(u.as_slice(), h, x);
            let (_, vx) = reconstruct(v.as_slice(), h, x);
            let (wq, _) = reconstruct(w.as_slice(), h, x);
            total += 0.5 * h * wi * (uq * vx * wq).abs();
        }
    }
    total.max(f64::MIN_POSITIVE)
}

/// Analytic Newton Jacobian against central differences of the oracle
/// convection, `ε = 1e-6`.
pub fn check_jacobian(seed: u64) -> Result<Vec<OracleReport>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eps = 1e-6;
    let mut reports = Vec::new();
    for nc in [8, 128] {
        let mesh = build_mesh(nc)?;
        let mut abs = 0.0_f64;
        for _ in 0..5 {
            let u = random_vector(&mut rng, &mesh);
            let jac = newton_jacobian(&u, &mesh)?;
            let dense = tridiagonal_dense(&jac);
            for j in 0..mesh.n_dof() {
                let mut up = u.as_slice().to_vec();
                let mut dn = u.as_slice().to_vec();
                up[j] += eps;
                dn[j] -= eps;
                let fp = convection_oracle(&up, &mesh, 6);
                let fm = convection_oracle(&dn, &mesh, 6);
                for i in 0..mesh.n_dof() {
                    let fd = (fp[i] - fm[i]) / (2.0 * eps);
                    abs = abs.max((dense[(i, j)] - fd).abs());
                }
            }
        }
        reports.push(OracleReport::judged(
            format!("Newton Jacobian vs central FD (N={nc})"),
            abs,
            abs,
            1e-6,
            Judge::Abs,
        ));
    }
    Ok(reports)
}

fn tridiagonal_dense(t: &Tridiagonal) -> DenseMatrix {
    DenseMatrix::from_rows(&t.to_dense()).expect("square")
}

/// Newton path against the Picard oracle along a run of `cfg`, checking the
/// first step and every `every`-th step.
pub fn check_newton_vs_picard(cfg: &CaseConfig, every: usize) -> Result<OracleReport> {
    let sys = BurgersSystem::new(cfg)?;
    let mut u = interpolate_step_ic(&sys.mesh)?;
    let (mut abs, mut rel) = (0.0_f64, 0.0_f64);
    for step in 1..=cfg.n_steps() {
        let (next, _) = sys.step(&u, step)?;
        if step == 1 || step % every.max(1) == 0 {
            let oracle = picard_solve(&u, cfg)?;
            let diff = (&next - &oracle).max_abs();
            abs = abs.max(diff);
            rel = rel.max(diff / next.max_abs().max(f64::MIN_POSITIVE));
        }
        u = next;
    }
    Ok(OracleReport::judged(
        format!("Newton vs Picard (dt={}, every {every})", cfg.dt),
        abs,
        rel,
        1e-10,
        Judge::Abs,
    ))
}

/// FE generalized eigenvalues against `k²π²` on `h = 1/128`.
pub fn check_spectrum(seed: u64) -> Result<Vec<OracleReport>> {
    let mesh = build_mesh(128)?;
    let ops = FeOperators::new(mesh);
    let basis = build_spectral(&mesh, &ops.mass, &ops.stiffness, 10)?;
    let h2 = mesh.h() * mesh.h();
    let mut reports = Vec::new();

    let (exact1, shape1) = analytic_spectrum(1, &mesh);
    let rel1 = basis.eigenvalues[0] / exact1 - 1.0;
    reports.push(OracleReport {
        name: "lambda_1 vs pi^2".into(),
        max_abs_err: (basis.eigenvalues[0] - exact1).abs(),
        max_rel_err: rel1.abs(),
        tolerance: 1e-3,
        pass: (0.0..=1e-3).contains(&rel1),
    });

    // P1 eigenvalues overshoot by roughly k²π²h²/12 relative.
    let c = 1.0;
    let mut worst = 0.0_f64;
    let mut in_band = true;
    for k in 1..=10 {
        let (exact, _) = analytic_spectrum(k, &mesh);
        let r = basis.eigenvalues[k - 1] / exact - 1.0;
        in_band &= r >= 0.0 && r <= c * (k * k) as f64 * h2;
        worst = worst.max(r.abs() / ((k * k) as f64 * h2));
    }
    reports.push(OracleReport {
        name: "lambda_k/(k^2 pi^2) - 1 in [0, k^2 h^2]".into(),
        max_abs_err: worst,
        max_rel_err: worst,
        tolerance: c,
        pass: in_band,
    });

    let w1 = basis.vectors[0].as_slice();
    let peak = shape1.iter().cloned().fold(0.0, f64::max);
    let shape_err = w1
        .iter()
        .zip(&shape1)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    reports.push(OracleReport::judged(
        "w_1 vs sqrt(2) sin(pi x)",
        shape_err,
        shape_err / peak,
        1e-2,
        Judge::Rel,
    ));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_ratio = f64::INFINITY;
    for _ in 0..200 {
        let u = random_vector(&mut rng, &mesh);
        let k = ops.stiffness.quad_form(u.as_slice(), u.as_slice());
        let m = ops.mass.quad_form(u.as_slice(), u.as_slice());
        min_ratio = min_ratio.min(k / m);
    }
    for w in &basis.vectors {
        let k = ops.stiffness.quad_form(w.as_slice(), w.as_slice());
        let m = ops.mass.quad_form(w.as_slice(), w.as_slice());
        min_ratio = min_ratio.min(k / m);
    }
    reports.push(OracleReport {
        name: "discrete Poincare min u'Ku/u'Mu >= 9.5".into(),
        max_abs_err: min_ratio,
        max_rel_err: min_ratio / (PI * PI),
        tolerance: 9.5,
        pass: min_ratio >= 9.5,
    });
    Ok(reports)
}

/// Thomas elimination against dense LU on random SPD tridiagonal systems.
pub fn check_linear(seed: u64) -> Result<OracleReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rel = 0.0_f64;
    let mut abs = 0.0_f64;
    for n in [5usize, 31, 127] {
        for _ in 0..5 {
            let off: Vec<f64> = (0..n - 1).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let diag: Vec<f64> = (0..n)
                .map(|i| {
                    let l = if i > 0 { off[i - 1].abs() } else { 0.0 };
                    let r = if i + 1 < n { off[i].abs() } else { 0.0 };
                    l + r + rng.gen_range(0.1..2.0)
                })
                .collect();
            let t = Tridiagonal {
                lower: off.clone(),
                diag,
                upper: off,
            };
            let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let x = t.solve(&b)?;
            let y = dense_lu_solve(&tridiagonal_dense(&t), &b)?;
            let norm = y.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            let diff = x.iter().zip(&y).fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
            abs = abs.max(diff);
            rel = rel.max(diff / norm);
        }
    }
    Ok(OracleReport::judged("Thomas vs dense LU", abs, rel, 1e-12, Judge::Rel))
}

/// Row-by-row comparison of a computed table against stored golden rows.
pub fn compare_table(name: &str, golden: &[AveragedBudget], computed: &[AveragedBudget], rel_tol: f64) -> OracleReport {
    let mut abs = 0.0_f64;
    let mut rel = 0.0_f64;
    let mut shape_ok = golden.len() == computed.len();
    for (g, c) in golden.iter().zip(computed) {
        shape_ok &= g.m == c.m;
        for (a, b) in [(g.avg_e_m, c.avg_e_m), (g.avg_cap_e_m, c.avg_cap_e_m)] {
            let d = (a - b).abs();
            abs = abs.max(d);
            rel = rel.max(d / a.abs().max(f64::MIN_POSITIVE));
        }
    }
    OracleReport {
        name: name.to_string(),
        max_abs_err: abs,
        max_rel_err: rel,
        tolerance: rel_tol,
        pass: shape_ok && rel <= rel_tol,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VerifyScope {
    All,
    Trilinear,
    Jacobian,
    Picard,
    Spectrum,
    Linear,
}

impl std::str::FromStr for VerifyScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "all" => VerifyScope::All,
            "trilinear" => VerifyScope::Trilinear,
            "jacobian" => VerifyScope::Jacobian,
            "picard" => VerifyScope::Picard,
            "spectrum" => VerifyScope::Spectrum,
            "linear" => VerifyScope::Linear,
            other => return Err(Error::Format(format!("unknown verify scope '{other}'"))),
        })
    }
}

const SEED: u64 = 20_190_521;

/// Runs the oracle suites selected by `scope`.
pub fn run_oracles(scope: VerifyScope) -> Result<Vec<OracleReport>> {
    use VerifyScope::*;
    let wants = |s: VerifyScope| scope == All || scope == s;
    let mut out = Vec::new();
    if wants(Trilinear) {
        out.extend(check_trilinear(SEED)?);
    }
    if wants(Jacobian) {
        out.extend(check_jacobian(SEED + 1)?);
    }
    if wants(Picard) {
        out.push(check_newton_vs_picard(&CaseConfig::step_case(1.0, 1e-2, 1), 100)?);
    }
    if wants(Spectrum) {
        out.extend(check_spectrum(SEED + 2)?);
    }
    if wants(Linear) {
        out.push(check_linear(SEED + 3)?);
    }
    Ok(out)
}
