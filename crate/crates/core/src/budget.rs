//! Inter-mode energy transfer along a trajectory and its long-time average.
//!
//! For the split `u = y + z` at truncation `m`:
//!
//! ```text
//! e↑(u)  = −b(y, y, z)      transfer into the high modes by low-mode inertia
//! e↓(u)  = −b(z, z, y)      transfer into the low modes by high-mode inertia
//! e_m(u) = e↑ − e↓
//! 𝓔_m(u) = −ν (y_x, z_x)
//! ```
//!
//! with `b(a, b, c) = ∫ a b_x c`. These are the terms for which the Galerkin
//! energy balance of the resolved part reads
//! `½ d/dt ‖y‖² + ν ‖y_x‖² = 𝓔_m − e_m + (f, y)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{build_pod_from_states, build_spectral, project, BasisKind, BasisSet, RankTolerance};
use crate::error::{Error, Result};
use crate::fem::{assemble_mass, assemble_stiffness, trilinear_slices, BandedSymMatrix, FeVector, Mesh};
use crate::solver::{run_case, CaseConfig, SnapshotSet};

/// Mass and stiffness matrices of one mesh.
#[derive(Debug, Clone)]
pub struct FeOperators {
    pub mesh: Mesh,
    pub mass: BandedSymMatrix,
    pub stiffness: BandedSymMatrix,
}

impl FeOperators {
    pub fn new(mesh: Mesh) -> Self {
        Self {
            mass: assemble_mass(&mesh),
            stiffness: assemble_stiffness(&mesh),
            mesh,
        }
    }
}

/// The four transfer terms at one state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointBudget {
    pub e_up: f64,
    pub e_down: f64,
    pub e_m: f64,
    pub cap_e_m: f64,
    /// `‖y‖_K ‖z‖_K`, the natural scale of `𝓔_m / ν`.
    pub cross_scale: f64,
}

pub fn pointwise_budget(
    u: &FeVector,
    basis: &BasisSet,
    m: usize,
    nu: f64,
    ops: &FeOperators,
) -> Result<PointBudget> {
    let split = project(u, basis, m, &ops.mass)?;
    let (y, z) = (split.y.as_slice(), split.z.as_slice());
    let h = ops.mesh.h();
    let e_up = -trilinear_slices(y, y, z, h);
    let e_down = -trilinear_slices(z, z, y, h);
    let yk = ops.stiffness.quad_form(y, y).max(0.0).sqrt();
    let zk = ops.stiffness.quad_form(z, z).max(0.0).sqrt();
    Ok(PointBudget {
        e_up,
        e_down,
        e_m: e_up - e_down,
        cap_e_m: -nu * ops.stiffness.quad_form(y, z),
        cross_scale: yk * zk,
    })
}

/// Composite trapezoidal average `(1/2n) Σ (v_i + v_{i+1})` over `n + 1`
/// equally spaced samples.
pub fn trapezoid_average(values: &[f64], n: usize) -> Result<f64> {
    if n == 0 || values.len() != n + 1 {
        return Err(Error::LengthMismatch {
            len: values.len(),
            n,
        });
    }
    let s: f64 = values.windows(2).map(|w| w[0] + w[1]).sum();
    Ok(s / (2.0 * n as f64))
}

/// Transfer terms sampled at the quadrature nodes `t_i = i T / n`.
#[derive(Debug, Clone)]
pub struct EnergySeries {
    pub m: usize,
    pub t_final: f64,
    pub n: usize,
    pub dt: f64,
    pub d: usize,
    pub times: Vec<f64>,
    pub e_up: Vec<f64>,
    pub e_down: Vec<f64>,
    pub e_m: Vec<f64>,
    pub cap_e_m: Vec<f64>,
    pub cross_scale: Vec<f64>,
}

/// Series over the whole recorded interval `[0, T]`.
pub fn build_series(snaps: &SnapshotSet, basis: &BasisSet, m: usize, n: usize) -> Result<EnergySeries> {
    build_series_over(snaps, basis, m, snaps.config.t_final, n)
}

/// Series over `[0, t_end]`, `t_end ≤ T`. Every node must coincide with a
/// recorded snapshot; nothing is interpolated in time.
pub fn build_series_over(
    snaps: &SnapshotSet,
    basis: &BasisSet,
    m: usize,
    t_end: f64,
    n: usize,
) -> Result<EnergySeries> {
    if n == 0 {
        return Err(Error::InvalidConfig("quadrature needs n >= 1 subintervals".into()));
    }
    basis.check_m(m)?;
    let ops = FeOperators::new(snaps.mesh()?);
    let nu = snaps.config.nu;
    let mut series = EnergySeries {
        m,
        t_final: t_end,
        n,
        dt: snaps.config.dt,
        d: basis.d(),
        times: Vec::with_capacity(n + 1),
        e_up: Vec::with_capacity(n + 1),
        e_down: Vec::with_capacity(n + 1),
        e_m: Vec::with_capacity(n + 1),
        cap_e_m: Vec::with_capacity(n + 1),
        cross_scale: Vec::with_capacity(n + 1),
    };
    for i in 0..=n {
        let t = i as f64 * t_end / n as f64;
        let k = snaps
            .index_of_time(t)
            .ok_or(Error::Misaligned { index: i, time: t })?;
        let p = pointwise_budget(&snaps.states[k], basis, m, nu, &ops)?;
        series.times.push(t);
        series.e_up.push(p.e_up);
        series.e_down.push(p.e_down);
        series.e_m.push(p.e_m);
        series.cap_e_m.push(p.cap_e_m);
        series.cross_scale.push(p.cross_scale);
    }
    Ok(series)
}

/// Time averages of `e_m` and `𝓔_m` for one truncation index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AveragedBudget {
    pub m: usize,
    pub avg_e_m: f64,
    pub avg_cap_e_m: f64,
    pub avg_sum: f64,
    pub t_final: f64,
    pub n: usize,
    pub dt: f64,
    pub d: usize,
}

pub fn averaged_budget(series: &EnergySeries) -> Result<AveragedBudget> {
    let avg_e_m = trapezoid_average(&series.e_m, series.n)?;
    let avg_cap_e_m = trapezoid_average(&series.cap_e_m, series.n)?;
    Ok(AveragedBudget {
        m: series.m,
        avg_e_m,
        avg_cap_e_m,
        avg_sum: avg_e_m + avg_cap_e_m,
        t_final: series.t_final,
        n: series.n,
        dt: series.dt,
        d: series.d,
    })
}

/// Where the reduced basis comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum BasisSource {
    /// POD of the recorded snapshots, optionally subsampled by `pod_stride`.
    Pod {
        #[serde(default)]
        rank_tol: RankTolerance,
        #[serde(default = "one")]
        pod_stride: usize,
    },
    /// First `count` discrete Laplacian eigenvectors.
    Spectral { count: usize },
}

fn one() -> usize {
    1
}

impl Default for BasisSource {
    fn default() -> Self {
        BasisSource::Pod {
            rank_tol: RankTolerance::default(),
            pod_stride: 1,
        }
    }
}

impl BasisSource {
    pub fn kind(&self) -> BasisKind {
        match self {
            BasisSource::Pod { .. } => BasisKind::Pod,
            BasisSource::Spectral { .. } => BasisKind::Spectral,
        }
    }
}

pub fn build_basis(snaps: &SnapshotSet, source: &BasisSource) -> Result<BasisSet> {
    let ops = FeOperators::new(snaps.mesh()?);
    match *source {
        BasisSource::Pod { rank_tol, pod_stride } => {
            if pod_stride == 0 {
                return Err(Error::InvalidConfig("pod_stride must be at least 1".into()));
            }
            build_pod_from_states(&ops.mesh, snaps.states.iter().step_by(pod_stride), &ops.mass, rank_tol)
        }
        BasisSource::Spectral { count } => build_spectral(&ops.mesh, &ops.mass, &ops.stiffness, count),
    }
}

fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if jobs <= 1 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start {jobs} workers: {e}")))?;
    Ok(pool.install(f))
}

/// Averaged budgets for every `m` in `m_list`; `jobs > 1` evaluates the
/// truncation indices concurrently. Row order follows `m_list`.
pub fn table_rows(
    snaps: &SnapshotSet,
    basis: &BasisSet,
    m_list: &[usize],
    n: usize,
    jobs: usize,
) -> Result<Vec<AveragedBudget>> {
    let one_row = |&m: &usize| build_series(snaps, basis, m, n).and_then(|s| averaged_budget(&s));
    if jobs <= 1 {
        return m_list.iter().map(one_row).collect();
    }
    with_jobs(jobs, || m_list.par_iter().map(one_row).collect())?
}

/// DNS → basis → series → averages for each `m`.
pub fn run_table(
    cfg: &CaseConfig,
    source: &BasisSource,
    m_list: &[usize],
    n: usize,
) -> Result<Vec<AveragedBudget>> {
    let snaps = run_case(cfg)?;
    let basis = build_basis(&snaps, source)?;
    table_rows(&snaps, &basis, m_list, n, 1)
}

/// How a multi-interval table scales `∫₀ᵀ`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalNormalization {
    /// `(1/T) ∫₀ᵀ`, each interval by its own length.
    OwnInterval,
    /// `(1/T_max) ∫₀ᵀ`, every interval by the longest one, which keeps
    /// columns comparable as the flow decays.
    #[default]
    LongestInterval,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntervalRow {
    pub m: usize,
    pub e_m: Vec<f64>,
    pub cap_e_m: Vec<f64>,
}

/// Time-integrated transfer on nested intervals `[0, T_j]` of one run, with
/// one shared basis and every recorded step used as a quadrature node.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IntervalTable {
    pub intervals: Vec<f64>,
    pub normalization: IntervalNormalization,
    pub rows: Vec<IntervalRow>,
}

pub fn interval_table(
    snaps: &SnapshotSet,
    basis: &BasisSet,
    m_list: &[usize],
    intervals: &[f64],
    normalization: IntervalNormalization,
    jobs: usize,
) -> Result<IntervalTable> {
    let t_ref = intervals.iter().cloned().fold(0.0_f64, f64::max);
    let step = snaps.config.snapshot_dt();
    let mut plan = Vec::with_capacity(intervals.len());
    for &t in intervals {
        if !(t > 0.0) || t > snaps.config.t_final + 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "interval {t} lies outside the recorded run [0, {}]",
                snaps.config.t_final
            )));
        }
        let n = (t / step).round() as usize;
        if n == 0 || (n as f64 * step - t).abs() > 1e-9 {
            return Err(Error::Misaligned { index: n, time: t });
        }
        plan.push((t, n));
    }
    let one_row = |&m: &usize| -> Result<IntervalRow> {
        let mut e_m = Vec::with_capacity(plan.len());
        let mut cap = Vec::with_capacity(plan.len());
        for &(t, n) in &plan {
            let avg = averaged_budget(&build_series_over(snaps, basis, m, t, n)?)?;
            let scale = match normalization {
                IntervalNormalization::OwnInterval => 1.0,
                IntervalNormalization::LongestInterval => t / t_ref,
            };
            e_m.push(avg.avg_e_m * scale);
            cap.push(avg.avg_cap_e_m * scale);
        }
        Ok(IntervalRow { m, e_m, cap_e_m: cap })
    };
    let rows: Result<Vec<_>> = if jobs <= 1 {
        m_list.iter().map(one_row).collect()
    } else {
        with_jobs(jobs, || m_list.par_iter().map(one_row).collect())?
    };
    Ok(IntervalTable {
        intervals: intervals.to_vec(),
        normalization,
        rows: rows?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::build_mesh;

    #[test]
    fn trapezoid_examples() {
        for n in [1, 3, 10] {
            assert_eq!(trapezoid_average(&vec![2.5; n + 1], n).unwrap(), 2.5);
        }
        let n = 8;
        let t: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
        assert_eq!(trapezoid_average(&t, n).unwrap(), 0.5);
        assert_eq!(trapezoid_average(&[0.0, 0.25, 1.0], 2).unwrap(), 0.375);
        assert!(matches!(
            trapezoid_average(&[1.0, 2.0], 2),
            Err(Error::LengthMismatch { len: 2, n: 2 })
        ));
        assert!(trapezoid_average(&[1.0], 0).is_err());
    }

    #[test]
    fn zero_complement_gives_zero_budget() {
        let mesh = build_mesh(32).unwrap();
        let ops = FeOperators::new(mesh);
        let basis = build_spectral(&mesh, &ops.mass, &ops.stiffness, 5).unwrap();
        let u = basis.vectors[0].clone();
        for m in 1..=5 {
            let p = pointwise_budget(&u, &basis, m, 1e-2, &ops).unwrap();
            assert!(p.e_up.abs() < 1e-12 && p.e_down.abs() < 1e-12);
            assert!(p.e_m.abs() < 1e-12 && p.cap_e_m.abs() < 1e-12);
        }
        assert!(pointwise_budget(&u, &basis, 6, 1e-2, &ops).is_err());
    }

    #[test]
    fn misaligned_nodes_are_rejected() {
        let cfg = CaseConfig {
            n_cells: 16,
            nu: 1e-2,
            t_final: 0.1,
            dt: 1e-2,
            forcing: None,
            newton_tol: 1e-12,
            newton_max_iter: 50,
            snapshot_stride: 1,
        };
        let snaps = run_case(&cfg).unwrap();
        let basis = build_basis(&snaps, &BasisSource::default()).unwrap();
        let err = build_series(&snaps, &basis, 1, 3).unwrap_err();
        assert!(matches!(err, Error::Misaligned { index: 1, .. }), "{err}");
        let ok = build_series(&snaps, &basis, 1, 1).unwrap();
        assert_eq!(ok.times, vec![0.0, 0.1]);
        let five = build_series(&snaps, &basis, 1, 5).unwrap();
        assert_eq!(five.e_m.len(), 6);
    }
}
