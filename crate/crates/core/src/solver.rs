//! Backward-Euler / Newton integration of the discrete viscous Burgers
//! equation `M (uⁿ⁺¹ − uⁿ)/Δt + ν K uⁿ⁺¹ + N(uⁿ⁺¹) = M f`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fem::{
    assemble_mass, assemble_stiffness, convection_slice, interpolate_step_ic, BandedSymMatrix,
    FeVector, Mesh, Tridiagonal,
};

fn default_newton_tol() -> f64 {
    1e-12
}

fn default_newton_max_iter() -> usize {
    50
}

fn default_stride() -> usize {
    1
}

/// Parameters of one DNS run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseConfig {
    pub n_cells: usize,
    pub nu: f64,
    #[serde(alias = "T")]
    pub t_final: f64,
    pub dt: f64,
    /// Nodal forcing on interior nodes; `None` means `f = 0`.
    #[serde(default)]
    pub forcing: Option<Vec<f64>>,
    #[serde(default = "default_newton_tol")]
    pub newton_tol: f64,
    #[serde(default = "default_newton_max_iter")]
    pub newton_max_iter: usize,
    /// Record every `snapshot_stride`-th step.
    #[serde(default = "default_stride")]
    pub snapshot_stride: usize,
}

impl CaseConfig {
    /// Step-IC Burgers case on `h = 1/128` with `ν = 10⁻²`, `f = 0`.
    pub fn step_case(t_final: f64, dt: f64, snapshot_stride: usize) -> Self {
        Self {
            n_cells: 128,
            nu: 1e-2,
            t_final,
            dt,
            forcing: None,
            newton_tol: default_newton_tol(),
            newton_max_iter: default_newton_max_iter(),
            snapshot_stride,
        }
    }

    /// Number of time steps `T/Δt`.
    pub fn n_steps(&self) -> usize {
        (self.t_final / self.dt).round() as usize
    }

    pub fn n_snapshots(&self) -> usize {
        self.n_steps() / self.snapshot_stride + 1
    }

    /// Time between recorded snapshots.
    pub fn snapshot_dt(&self) -> f64 {
        self.dt * self.snapshot_stride as f64
    }

    pub fn mesh(&self) -> Result<Mesh> {
        Mesh::new(self.n_cells)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        if self.n_cells < 2 {
            return bad(format!("n_cells = {} must be at least 2", self.n_cells));
        }
        if self.n_cells % 2 != 0 {
            return bad(format!(
                "n_cells = {} must be even so the step sits on a node",
                self.n_cells
            ));
        }
        if !(self.nu > 0.0) {
            return bad(format!("nu = {} must be positive", self.nu));
        }
        if !(self.dt > 0.0) {
            return bad(format!("dt = {} must be positive", self.dt));
        }
        if !(self.t_final > 0.0) {
            return bad(format!("t_final = {} must be positive", self.t_final));
        }
        let ratio = self.t_final / self.dt;
        if (ratio - ratio.round()).abs() > 1e-9 * ratio.max(1.0) {
            return bad(format!(
                "t_final = {} is not an integer multiple of dt = {} (ratio {})",
                self.t_final, self.dt, ratio
            ));
        }
        if self.snapshot_stride == 0 {
            return bad("snapshot_stride must be at least 1".into());
        }
        let steps = self.n_steps();
        if steps % self.snapshot_stride != 0 {
            return bad(format!(
                "snapshot_stride = {} does not divide the step count {}",
                self.snapshot_stride, steps
            ));
        }
        if !(self.newton_tol > 0.0) || self.newton_max_iter == 0 {
            return bad("newton_tol must be positive and newton_max_iter at least 1".into());
        }
        if let Some(f) = &self.forcing {
            if f.len() != self.n_cells - 1 {
                return bad(format!(
                    "forcing has {} values but the mesh has {} interior nodes",
                    f.len(),
                    self.n_cells - 1
                ));
            }
        }
        Ok(())
    }
}

/// Snapshots of one run: `states[k]` is the solution at `times[k]`.
#[derive(Debug, Clone)]
pub struct SnapshotSet {
    pub times: Vec<f64>,
    pub states: Vec<FeVector>,
    pub config: CaseConfig,
    pub stats: RunStats,
}

impl SnapshotSet {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn mesh(&self) -> Result<Mesh> {
        self.config.mesh()
    }

    /// Index of the snapshot recorded at `t`, if any (tolerance `1e-9`).
    pub fn index_of_time(&self, t: f64) -> Option<usize> {
        let k = (t / self.config.snapshot_dt()).round();
        if k < 0.0 {
            return None;
        }
        let k = k as usize;
        match self.times.get(k) {
            Some(&tk) if (tk - t).abs() <= 1e-9 => Some(k),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub steps: usize,
    pub max_newton_iterations: usize,
    pub total_newton_iterations: usize,
}

/// Analytic derivative of `N(u)_i = ∫ u u_x φ_i` with respect to `u`.
pub fn newton_jacobian(u: &FeVector, mesh: &Mesh) -> Result<Tridiagonal> {
    u.check_mesh(mesh)?;
    Ok(convection_jacobian(u.as_slice(), mesh.h()))
}

pub(crate) fn convection_jacobian(u: &[f64], h: f64) -> Tridiagonal {
    const GAUSS2: [f64; 2] = [0.211_324_865_405_187_1, 0.788_675_134_594_812_9];
    let n = u.len();
    let mut jac = Tridiagonal::zeros(n);
    let w = 0.5 * h;
    for e in 0..=n {
        let u0 = if e == 0 { 0.0 } else { u[e - 1] };
        let u1 = if e == n { 0.0 } else { u[e] };
        let ux = (u1 - u0) / h;
        // Local 2×2 block, rows = test function, cols = trial coefficient.
        let (mut ll, mut lr, mut rl, mut rr) = (0.0, 0.0, 0.0, 0.0);
        for &q in &GAUSS2 {
            let (pl, pr) = (1.0 - q, q);
            let uq = u0 * pl + u1 * pr;
            let d0 = pl * ux - uq / h;
            let d1 = pr * ux + uq / h;
            ll += w * pl * d0;
            lr += w * pl * d1;
            rl += w * pr * d0;
            rr += w * pr * d1;
        }
        let left = e.checked_sub(1);
        let right = (e < n).then_some(e);
        if let Some(l) = left {
            jac.diag[l] += ll;
        }
        if let Some(r) = right {
            jac.diag[r] += rr;
        }
        if let (Some(l), Some(_)) = (left, right) {
            jac.upper[l] += lr;
            jac.lower[l] += rl;
        }
    }
    jac
}

/// Assembled operators for one configuration.
#[derive(Debug, Clone)]
pub struct BurgersSystem {
    pub mesh: Mesh,
    pub mass: BandedSymMatrix,
    pub stiffness: BandedSymMatrix,
    /// `M/Δt + ν K`
    pub implicit: BandedSymMatrix,
    /// `M f`, absent when `f = 0`.
    pub load: Option<Vec<f64>>,
    pub config: CaseConfig,
}

impl BurgersSystem {
    pub fn new(cfg: &CaseConfig) -> Result<Self> {
        cfg.validate()?;
        let mesh = cfg.mesh()?;
        let mass = assemble_mass(&mesh);
        let stiffness = assemble_stiffness(&mesh);
        let implicit = mass.combine(1.0 / cfg.dt, &stiffness, cfg.nu);
        let load = cfg.forcing.as_ref().map(|f| mass.matvec(f));
        Ok(Self {
            mesh,
            mass,
            stiffness,
            implicit,
            load,
            config: cfg.clone(),
        })
    }

    /// Right-hand side `M uⁿ/Δt + M f`.
    pub fn rhs(&self, u_old: &[f64]) -> Vec<f64> {
        let inv_dt = 1.0 / self.config.dt;
        let mut b: Vec<f64> = self.mass.matvec(u_old).into_iter().map(|v| v * inv_dt).collect();
        if let Some(load) = &self.load {
            for (bi, li) in b.iter_mut().zip(load) {
                *bi += li;
            }
        }
        b
    }

    /// Nonlinear residual `(M/Δt + νK) v + N(v) − rhs`.
    pub fn residual(&self, v: &[f64], rhs: &[f64]) -> Vec<f64> {
        let mut r = self.implicit.matvec(v);
        let n = convection_slice(v, self.mesh.h());
        for ((ri, ni), bi) in r.iter_mut().zip(&n).zip(rhs) {
            *ri += ni - bi;
        }
        r
    }

    /// One backward-Euler step by Newton's method started from `u_old`.
    /// Returns the new state and the number of Newton corrections applied.
    pub fn step(&self, u_old: &FeVector, step_index: usize) -> Result<(FeVector, usize)> {
        u_old.check_mesh(&self.mesh)?;
        let rhs = self.rhs(u_old.as_slice());
        let mut v = u_old.as_slice().to_vec();
        let tol = self.config.newton_tol;
        let mut iterations = 0;
        loop {
            let r = self.residual(&v, &rhs);
            let res = r.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
            if res <= tol {
                break;
            }
            if iterations == self.config.newton_max_iter || !res.is_finite() {
                return Err(Error::NewtonDiverged {
                    step: step_index,
                    iterations,
                    residual: res,
                });
            }
            let jac = convection_jacobian(&v, self.mesh.h()).add_scaled_sym(1.0, &self.implicit);
            let delta = jac.solve(&r)?;
            for (vi, di) in v.iter_mut().zip(&delta) {
                *vi -= di;
            }
            iterations += 1;
        }
        Ok((FeVector::from_values(&self.mesh, v)?, iterations))
    }
}

/// Single backward-Euler step (assembles the operators on each call).
pub fn step_backward_euler(u_old: &FeVector, cfg: &CaseConfig) -> Result<FeVector> {
    let sys = BurgersSystem::new(cfg)?;
    sys.step(u_old, 1).map(|(u, _)| u)
}

/// Runs the step-IC case through `t_final`, recording every
/// `snapshot_stride`-th step including `t = 0` and `t = T`.
pub fn run_case(cfg: &CaseConfig) -> Result<SnapshotSet> {
    let sys = BurgersSystem::new(cfg)?;
    let u0 = interpolate_step_ic(&sys.mesh)?;
    let n_steps = cfg.n_steps();
    let mut times = Vec::with_capacity(cfg.n_snapshots());
    let mut states = Vec::with_capacity(cfg.n_snapshots());
    times.push(0.0);
    states.push(u0.clone());
    let mut stats = RunStats::default();
    let mut u = u0;
    for step in 1..=n_steps {
        let (next, iters) = sys.step(&u, step)?;
        stats.steps += 1;
        stats.total_newton_iterations += iters;
        stats.max_newton_iterations = stats.max_newton_iterations.max(iters);
        u = next;
        if step % cfg.snapshot_stride == 0 {
            times.push(step as f64 * cfg.dt);
            states.push(u.clone());
        }
    }
    Ok(SnapshotSet {
        times,
        states,
        config: cfg.clone(),
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{build_mesh, inner};

    fn small_cfg() -> CaseConfig {
        CaseConfig {
            n_cells: 16,
            nu: 1e-2,
            t_final: 0.1,
            dt: 1e-2,
            forcing: None,
            newton_tol: 1e-12,
            newton_max_iter: 50,
            snapshot_stride: 1,
        }
    }

    #[test]
    fn zero_is_a_fixed_point() {
        let cfg = small_cfg();
        let mesh = cfg.mesh().unwrap();
        let u = step_backward_euler(&FeVector::zeros(&mesh), &cfg).unwrap();
        assert!(u.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn jacobian_of_zero_and_homogeneity() {
        let mesh = build_mesh(8).unwrap();
        let j0 = newton_jacobian(&FeVector::zeros(&mesh), &mesh).unwrap();
        assert!(j0.diag.iter().chain(&j0.lower).chain(&j0.upper).all(|&v| v == 0.0));
        let u = FeVector::from_values(&mesh, vec![0.1, 0.9, -0.4, 0.3, 1.2, -0.8, 0.05]).unwrap();
        let j1 = newton_jacobian(&u, &mesh).unwrap();
        let j2 = newton_jacobian(&u.scaled(2.0), &mesh).unwrap();
        for (a, b) in j1.diag.iter().chain(&j1.lower).chain(&j1.upper).zip(
            j2.diag.iter().chain(&j2.lower).chain(&j2.upper),
        ) {
            assert!((2.0 * a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn step_decays_energy() {
        let cfg = small_cfg();
        let sys = BurgersSystem::new(&cfg).unwrap();
        let mut u = interpolate_step_ic(&sys.mesh).unwrap();
        for step in 1..=10 {
            let (next, _) = sys.step(&u, step).unwrap();
            let e0 = inner(&u, &u, &sys.mass).unwrap();
            let e1 = inner(&next, &next, &sys.mass).unwrap();
            assert!(e1 <= e0);
            u = next;
        }
    }

    #[test]
    fn snapshot_counts() {
        let cfg = CaseConfig::step_case(1.0, 1e-2, 1);
        assert_eq!(cfg.n_snapshots(), 101);
        assert_eq!(CaseConfig::step_case(10.0, 1e-2, 1).n_snapshots(), 1001);
        assert_eq!(CaseConfig::step_case(10.0, 2e-5, 50).n_snapshots(), 10001);
        let mut small = small_cfg();
        small.snapshot_stride = 5;
        let snaps = run_case(&small).unwrap();
        assert_eq!(snaps.len(), 3);
        assert_eq!(snaps.times, vec![0.0, 0.05, 0.1]);
        assert_eq!(snaps.index_of_time(0.05), Some(1));
        assert_eq!(snaps.index_of_time(0.03), None);
    }

    #[test]
    fn config_validation() {
        let mut c = small_cfg();
        c.dt = 0.03;
        let msg = c.validate().unwrap_err().to_string();
        assert!(msg.contains("0.1") && msg.contains("0.03"), "{msg}");
        let mut c = small_cfg();
        c.snapshot_stride = 3;
        assert!(c.validate().is_err());
        let mut c = small_cfg();
        c.nu = 0.0;
        assert!(c.validate().is_err());
        let mut c = small_cfg();
        c.n_cells = 15;
        assert!(c.validate().is_err());
        let mut c = small_cfg();
        c.forcing = Some(vec![0.0; 3]);
        assert!(c.validate().is_err());
        assert!(small_cfg().validate().is_ok());
    }

    #[test]
    fn newton_failure_is_reported() {
        let mut cfg = small_cfg();
        cfg.newton_max_iter = 1;
        cfg.newton_tol = 1e-300;
        let err = run_case(&cfg).unwrap_err();
        assert!(matches!(err, Error::NewtonDiverged { step: 1, .. }));
    }

    #[test]
    fn forcing_enters_the_step() {
        let mut cfg = small_cfg();
        cfg.forcing = Some(vec![1.0; 15]);
        let mesh = cfg.mesh().unwrap();
        let u = step_backward_euler(&FeVector::zeros(&mesh), &cfg).unwrap();
        assert!(u.as_slice().iter().all(|&v| v > 0.0));
    }
}
