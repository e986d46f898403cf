//! Time integration of the semiflow u' + A u = h(u), equilibrium solving by
//! Newton multistart, linearized spectra around equilibria, and terminal
//! (attractor-sample) extraction.

use crate::fem::eig::{eig_smallest_opts, EigError, EigOptions};
use crate::fem::sparse::norm2;
use crate::fem::{FemSystem, SkylineLdl, SolveError, SparseSym};
use crate::nonlinear::LoadMap;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("time step must be positive, got {0}")]
    BadTimeStep(f64),
    #[error("Newton step diverged at t = {t:.4} (residual {residual:.3e}); try halving the time step")]
    StepFailure { t: f64, residual: f64 },
    #[error("no multistart seed converged to an equilibrium")]
    EmptyEquilibriumSet,
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error(transparent)]
    Eig(#[from] EigError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    ImexEuler,
    ImplicitEuler,
}

/// One backward step of the semiflow. IMEX treats the linear operator
/// implicitly and the nonlinear load explicitly:
/// (M + dt K) u1 = M u0 + dt h(u0); the fully implicit variant solves the
/// nonlinear backward equation by Newton.
pub struct Stepper<'a> {
    pub sys: &'a FemSystem,
    pub load: &'a LoadMap<'a>,
    pub dt: f64,
    pub scheme: Scheme,
    system_factor: SkylineLdl,
    system: SparseSym,
}

impl<'a> Stepper<'a> {
    pub fn new(
        sys: &'a FemSystem,
        load: &'a LoadMap<'a>,
        dt: f64,
        scheme: Scheme,
    ) -> Result<Self, DynamicsError> {
        if !(dt > 0.0) {
            return Err(DynamicsError::BadTimeStep(dt));
        }
        let system = sys.m.add_scaled(&sys.k, dt);
        let system_factor = SkylineLdl::factor(&system)?;
        Ok(Stepper {
            sys,
            load,
            dt,
            scheme,
            system_factor,
            system,
        })
    }

    pub fn step(&self, u: &[f64], t: f64) -> Result<Vec<f64>, DynamicsError> {
        match self.scheme {
            Scheme::ImexEuler => {
                let mut rhs = self.sys.m.matvec(u);
                let h = self.load.apply(u);
                for (r, hv) in rhs.iter_mut().zip(&h) {
                    *r += self.dt * hv;
                }
                Ok(self.system_factor.solve(&rhs))
            }
            Scheme::ImplicitEuler => {
                let mu = self.sys.m.matvec(u);
                let scale = norm2(&mu).max(1.0);
                let mut v = u.to_vec();
                for _ in 0..12 {
                    // G(v) = (M + dt K) v - M u - dt h(v)
                    let mut g = self.system.matvec(&v);
                    let h = self.load.apply(&v);
                    for i in 0..g.len() {
                        g[i] -= mu[i] + self.dt * h[i];
                    }
                    let res = norm2(&g);
                    if res <= 1e-10 * scale {
                        return Ok(v);
                    }
                    let jac = self
                        .system
                        .add_scaled(&self.load.derivative(&v), -self.dt);
                    let f = SkylineLdl::factor(&jac)?;
                    let delta = f.solve(&g);
                    if !delta.iter().all(|d| d.is_finite()) {
                        return Err(DynamicsError::StepFailure { t, residual: res });
                    }
                    for (vi, di) in v.iter_mut().zip(&delta) {
                        *vi -= di;
                    }
                }
                let mut g = self.system.matvec(&v);
                let h = self.load.apply(&v);
                for i in 0..g.len() {
                    g[i] -= mu[i] + self.dt * h[i];
                }
                let res = norm2(&g);
                if res <= 1e-8 * scale {
                    Ok(v)
                } else {
                    Err(DynamicsError::StepFailure { t, residual: res })
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub dt: f64,
    /// (time, state) at the configured stride, including the initial state
    pub snapshots: Vec<(f64, Vec<f64>)>,
    pub terminal: Vec<f64>,
    pub terminal_time: f64,
    /// ||u^{n+1} - u^n||_{L2} / dt at the last step
    pub terminal_residual: f64,
    /// stopped early because the terminal residual fell below tolerance
    pub converged: bool,
}

pub struct IntegrateOptions {
    pub snapshot_stride: usize,
    pub equilibration_tol: f64,
}

impl Default for IntegrateOptions {
    fn default() -> Self {
        IntegrateOptions {
            snapshot_stride: usize::MAX,
            equilibration_tol: 1e-8,
        }
    }
}

pub fn integrate(
    sys: &FemSystem,
    load: &LoadMap,
    u0: &[f64],
    t_end: f64,
    dt: f64,
    scheme: Scheme,
    opts: &IntegrateOptions,
) -> Result<Trajectory, DynamicsError> {
    if t_end < dt {
        return Err(DynamicsError::BadTimeStep(dt));
    }
    let stepper = Stepper::new(sys, load, dt, scheme)?;
    let n_steps = (t_end / dt).round() as usize;
    let mut u = u0.to_vec();
    let mut snapshots = vec![(0.0, u.clone())];
    let mut terminal_residual = f64::INFINITY;
    let mut converged = false;
    let mut t = 0.0;
    for step_idx in 1..=n_steps {
        let next = stepper.step(&u, t)?;
        t = step_idx as f64 * dt;
        let diff: Vec<f64> = next.iter().zip(&u).map(|(a, b)| a - b).collect();
        terminal_residual = sys.l2_norm(&diff) / dt;
        u = next;
        if opts.snapshot_stride != usize::MAX && step_idx % opts.snapshot_stride == 0 {
            snapshots.push((t, u.clone()));
        }
        if terminal_residual < opts.equilibration_tol {
            converged = true;
            break;
        }
    }
    Ok(Trajectory {
        dt,
        snapshots,
        terminal: u,
        terminal_time: t,
        terminal_residual,
        converged,
    })
}

/// States of the trajectory at the given checkpoint times (nearest steps).
pub fn state_at(
    sys: &FemSystem,
    load: &LoadMap,
    u0: &[f64],
    times: &[f64],
    dt: f64,
    scheme: Scheme,
) -> Result<Vec<Vec<f64>>, DynamicsError> {
    let t_end = times.iter().cloned().fold(0.0, f64::max);
    let stepper = Stepper::new(sys, load, dt, scheme)?;
    let n_steps = (t_end / dt).round() as usize;
    let targets: Vec<usize> = times.iter().map(|&t| (t / dt).round() as usize).collect();
    let mut out: Vec<Vec<f64>> = vec![Vec::new(); times.len()];
    let mut u = u0.to_vec();
    for (slot, &tgt) in targets.iter().enumerate() {
        if tgt == 0 {
            out[slot] = u.clone();
        }
    }
    for step_idx in 1..=n_steps {
        u = stepper.step(&u, (step_idx - 1) as f64 * dt)?;
        for (slot, &tgt) in targets.iter().enumerate() {
            if tgt == step_idx {
                out[slot] = u.clone();
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone)]
pub struct Equilibrium {
    pub state: Vec<f64>,
    /// dual (Riesz) norm of the equilibrium residual K e - h(e)
    pub residual: f64,
    pub lambda_min: f64,
    pub hyperbolic: bool,
    /// Newton residual history of the converged run
    pub newton_history: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct EquilibriumSet {
    pub members: Vec<Equilibrium>,
    pub delta_hyp: f64,
}

impl EquilibriumSet {
    pub fn all_hyperbolic(&self) -> bool {
        self.members.iter().all(|e| e.hyperbolic)
    }

    pub fn states(&self) -> Vec<Vec<f64>> {
        self.members.iter().map(|e| e.state.clone()).collect()
    }

    /// CSV rows: id, residual, lambda_min, hyperbolic, h1_norm.
    pub fn to_csv(&self, sys: &FemSystem) -> String {
        let mut s = String::from("id,residual,lambda_min,hyperbolic,h1_norm\n");
        for (i, e) in self.members.iter().enumerate() {
            s.push_str(&format!(
                "{},{:.12e},{:.12e},{},{:.12e}\n",
                i,
                e.residual,
                e.lambda_min,
                e.hyperbolic,
                sys.h1_norm(&e.state)
            ));
        }
        s
    }
}

pub struct EquilibriaOptions {
    pub newton_tol: f64,
    pub max_newton_iters: usize,
    pub merge_radius: f64,
    pub delta_hyp: f64,
    pub seed: u64,
    pub random_seeds: usize,
}

impl Default for EquilibriaOptions {
    fn default() -> Self {
        EquilibriaOptions {
            newton_tol: 1e-9,
            max_newton_iters: 50,
            merge_radius: 1e-4,
            delta_hyp: 1e-3,
            seed: 42,
            random_seeds: 8,
        }
    }
}

/// Default multistart seeds: the constants -2..2 plus seeded random smooth
/// bumps (low-frequency cosine combinations).
pub fn default_seeds(mesh: &crate::mesh::TriMesh, opts: &EquilibriaOptions) -> Vec<Vec<f64>> {
    let n = mesh.vertex_count();
    let mut seeds: Vec<Vec<f64>> = [-2.0, -1.0, 0.0, 1.0, 2.0]
        .iter()
        .map(|&c| vec![c; n])
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.random_seeds {
        let a: [f64; 4] = core::array::from_fn(|_| rng.random_range(-1.0..1.0));
        let freq: [f64; 2] = core::array::from_fn(|_| rng.random_range(1..4) as f64);
        let bump: Vec<f64> = mesh
            .vertices
            .iter()
            .map(|p| {
                let pi = std::f64::consts::PI;
                a[0] + a[1] * (freq[0] * pi * p[0]).cos()
                    + a[2] * (freq[1] * pi * p[1]).cos()
                    + a[3] * (freq[0] * pi * p[0]).cos() * (freq[1] * pi * p[1]).cos()
            })
            .collect();
        seeds.push(bump);
    }
    seeds
}

/// Newton multistart on the equilibrium equation K e = h(e) with the exact
/// Jacobian K - h'(e); converged roots are merged by H1 distance and each
/// root is classified by the smallest eigenvalue of its linearization.
pub fn find_equilibria(
    sys: &FemSystem,
    load: &LoadMap,
    seeds: &[Vec<f64>],
    opts: &EquilibriaOptions,
) -> Result<EquilibriumSet, DynamicsError> {
    let mut members: Vec<Equilibrium> = Vec::new();
    for seed in seeds {
        let mut e = seed.clone();
        let mut history = Vec::new();
        let mut converged = false;
        for _ in 0..opts.max_newton_iters {
            let h = load.apply(&e);
            let mut res_vec = sys.k.matvec(&e);
            for (r, hv) in res_vec.iter_mut().zip(&h) {
                *r -= hv;
            }
            let res = sys.dual_norm(&res_vec);
            history.push(res);
            if res <= opts.newton_tol {
                converged = true;
                break;
            }
            if !res.is_finite() || res > 1e8 {
                break;
            }
            let jac = sys.k.add_scaled(&load.derivative(&e), -1.0);
            let f = match SkylineLdl::factor(&jac) {
                Ok(f) => f,
                Err(_) => break, // singular Jacobian: abandon this seed
            };
            let delta = f.solve(&res_vec);
            if !delta.iter().all(|d| d.is_finite()) {
                break;
            }
            for (ei, di) in e.iter_mut().zip(&delta) {
                *ei -= di;
            }
        }
        if !converged {
            continue;
        }
        let duplicate = members.iter().any(|m| {
            let diff: Vec<f64> = m.state.iter().zip(&e).map(|(a, b)| a - b).collect();
            sys.h1_norm(&diff) < opts.merge_radius
        });
        if duplicate {
            continue;
        }
        let residual = *history.last().unwrap();
        members.push(Equilibrium {
            state: e,
            residual,
            lambda_min: f64::NAN,
            hyperbolic: false,
            newton_history: history,
        });
    }
    if members.is_empty() {
        return Err(DynamicsError::EmptyEquilibriumSet);
    }
    for m in &mut members {
        let spec = linearized_spectrum(sys, load, &m.state, 1)?;
        m.lambda_min = spec[0].0;
        m.hyperbolic = m.lambda_min.abs() > opts.delta_hyp;
    }
    // deterministic order: by mean value
    members.sort_by(|a, b| {
        let ma = a.state.iter().sum::<f64>() / a.state.len() as f64;
        let mb = b.state.iter().sum::<f64>() / b.state.len() as f64;
        ma.partial_cmp(&mb).unwrap()
    });
    Ok(EquilibriumSet {
        members,
        delta_hyp: opts.delta_hyp,
    })
}

/// Eigenpairs of the linearization around an equilibrium: the operator form
/// minus the f'-weighted mass plus the g'-weighted boundary mass (which
/// carries the gamma weight on the limit problem), against the mass matrix.
pub fn linearized_spectrum(
    sys: &FemSystem,
    load: &LoadMap,
    e: &[f64],
    k: usize,
) -> Result<Vec<(f64, Vec<f64>)>, DynamicsError> {
    let (f_part, g_part) = load.derivative_parts(e);
    let k_lin = sys.k.add_scaled(&f_part, -1.0).add_scaled(&g_part, 1.0);
    let sigma = -1.0;
    Ok(eig_smallest_opts(
        &k_lin,
        &sys.m,
        k,
        sigma,
        &EigOptions::default(),
    )?)
}

#[derive(Debug, Clone)]
pub struct AttractorMember {
    pub state: Vec<f64>,
    /// index of the nearest equilibrium in H1 distance
    pub nearest_equilibrium: usize,
    pub h1_distance_to_equilibrium: f64,
    /// trajectory did not equilibrate before the time horizon
    pub transient: bool,
}

#[derive(Debug, Clone)]
pub struct AttractorSample {
    pub members: Vec<AttractorMember>,
    pub has_transients: bool,
}

impl AttractorSample {
    pub fn states(&self) -> Vec<Vec<f64>> {
        self.members.iter().map(|m| m.state.clone()).collect()
    }
}

pub struct AttractorOptions {
    pub t_max: f64,
    pub dt: f64,
    pub scheme: Scheme,
    pub equilibration_tol: f64,
    /// size of the kick along the unstable eigenfunction
    pub kick: f64,
    /// number of states sampled along each unstable-manifold run
    pub connection_samples: usize,
}

impl Default for AttractorOptions {
    fn default() -> Self {
        AttractorOptions {
            t_max: 40.0,
            dt: 1e-2,
            scheme: Scheme::ImexEuler,
            equilibration_tol: 1e-8,
            kick: 1e-3,
            connection_samples: 6,
        }
    }
}

/// Attractor proxy: the equilibria, terminal states of the supplied seeds,
/// and snapshots along unstable-manifold runs kicked off the non-stable
/// equilibria. Each member is labeled by its nearest equilibrium; runs that
/// fail to equilibrate are kept but flagged transient.
pub fn sample_attractor(
    sys: &FemSystem,
    load: &LoadMap,
    equilibria: &EquilibriumSet,
    seeds: &[Vec<f64>],
    opts: &AttractorOptions,
) -> Result<AttractorSample, DynamicsError> {
    let mut members = Vec::new();
    let label = |state: &[f64]| -> (usize, f64) {
        let mut best = (0usize, f64::INFINITY);
        for (i, m) in equilibria.members.iter().enumerate() {
            let diff: Vec<f64> = m.state.iter().zip(state).map(|(a, b)| a - b).collect();
            let d = sys.h1_norm(&diff);
            if d < best.1 {
                best = (i, d);
            }
        }
        best
    };
    for (i, m) in equilibria.members.iter().enumerate() {
        members.push(AttractorMember {
            state: m.state.clone(),
            nearest_equilibrium: i,
            h1_distance_to_equilibrium: 0.0,
            transient: false,
        });
    }
    let int_opts = IntegrateOptions {
        snapshot_stride: usize::MAX,
        equilibration_tol: opts.equilibration_tol,
    };
    for seed in seeds {
        let traj = integrate(sys, load, seed, opts.t_max, opts.dt, opts.scheme, &int_opts)?;
        let (idx, d) = label(&traj.terminal);
        members.push(AttractorMember {
            state: traj.terminal,
            nearest_equilibrium: idx,
            h1_distance_to_equilibrium: d,
            transient: !traj.converged,
        });
    }
    for eq in &equilibria.members {
        if eq.lambda_min >= 0.0 {
            continue;
        }
        let spec = linearized_spectrum(sys, load, &eq.state, 1)?;
        let w = &spec[0].1;
        let wn = sys.h1_norm(w);
        for &sign in &[1.0, -1.0] {
            let seed: Vec<f64> = eq
                .state
                .iter()
                .zip(w)
                .map(|(e, wi)| e + sign * opts.kick * wi / wn)
                .collect();
            let stride = ((opts.t_max / opts.dt) as usize / opts.connection_samples).max(1);
            let int_opts = IntegrateOptions {
                snapshot_stride: stride,
                equilibration_tol: opts.equilibration_tol,
            };
            let traj = integrate(sys, load, &seed, opts.t_max, opts.dt, opts.scheme, &int_opts)?;
            for (_, state) in traj.snapshots.iter().skip(1) {
                let (idx, d) = label(state);
                members.push(AttractorMember {
                    state: state.clone(),
                    nearest_equilibrium: idx,
                    h1_distance_to_equilibrium: d,
                    transient: !traj.converged,
                });
            }
            let (idx, d) = label(&traj.terminal);
            members.push(AttractorMember {
                state: traj.terminal,
                nearest_equilibrium: idx,
                h1_distance_to_equilibrium: d,
                transient: !traj.converged,
            });
        }
    }
    let has_transients = members.iter().any(|m| m.transient);
    Ok(AttractorSample {
        members,
        has_transients,
    })
}
