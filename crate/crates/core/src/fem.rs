//! Bilinear finite elements in polar coordinates with backward Euler time
//! stepping.
//!
//! The weak form is `∫ (u_t v + r u_r v_r + r⁻¹ u_θ v_θ) dr dθ = v(s*)` with
//! the θ term in its integrated-by-parts form, so the stiffness is symmetric
//! and C⁰ elements suffice. One step solves `A u^{k+1} = M u^k + Δt b` with
//! `A = M + Δt K`.
//!
//! Beside direct time marching, [`FluxKernel`] precomputes the adjoint
//! response of one boundary flux observation. Because the flux is linear in
//! the load, `flux(t_i) = Δt · C_{i−1} · b` for every load `b`, which turns
//! each forward and sensitivity solve of the inversion into a four-term
//! dot product per time step.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{self, CsrMatrix, SkylineCholesky};
use crate::mesh::{shape, shape_grad, Mesh, GAUSS3};
use crate::point::{wrap_angle, PolarPoint, SourcePoint};

/// Derivative loads closer than this (in reference coordinates) to an
/// element edge are rejected: the load derivative jumps across edges.
pub const EDGE_TOL: f64 = 1e-10;

/// Relative residual required of every iterative step solve.
pub const SOLVE_TOL: f64 = 1e-10;

/// Source coordinate a sensitivity is taken with respect to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wrt {
    R,
    Theta,
}

/// Load vector with few nonzeros, indexed by node id. Entries on the
/// boundary ring are kept so that sums over the load are meaningful, and
/// ignored by the solvers.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseLoad {
    entries: Vec<(usize, f64)>,
}

impl SparseLoad {
    fn from_element(nodes: [usize; 4], values: [f64; 4]) -> Self {
        let mut entries: Vec<(usize, f64)> = Vec::with_capacity(4);
        for (n, v) in nodes.into_iter().zip(values) {
            match entries.iter_mut().find(|(m, _)| *m == n) {
                Some((_, w)) => *w += v,
                None => entries.push((n, v)),
            }
        }
        Self { entries }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn sum(&self) -> f64 {
        self.entries.iter().map(|(_, v)| v).sum()
    }

    /// Dense vector over all nodes.
    pub fn to_dense(&self, n_nodes: usize) -> Vec<f64> {
        let mut out = vec![0.0; n_nodes];
        for &(n, v) in &self.entries {
            out[n] += v;
        }
        out
    }

    /// Restriction to the unknowns.
    pub fn to_dof_vector(&self, n_dof: usize) -> Vec<f64> {
        let mut out = vec![0.0; n_dof];
        for &(n, v) in self.entries.iter().filter(|(n, _)| *n < n_dof) {
            out[n] += v;
        }
        out
    }
}

/// Discrete Dirac load `b_a = N_a(s*)`.
pub fn point_load(mesh: &Mesh, source: SourcePoint) -> Result<SparseLoad> {
    let loc = mesh.locate(source.as_polar()).map_err(|_| Error::SourceOnBoundary)?;
    Ok(SparseLoad::from_element(mesh.element_nodes(loc.element), shape(loc.xi, loc.eta)))
}

/// Derivative of the Dirac load with respect to a source coordinate,
/// `b_a = ∂N_a/∂r` or `∂N_a/∂θ` at the source.
pub fn derivative_load(mesh: &Mesh, source: SourcePoint, wrt: Wrt) -> Result<SparseLoad> {
    let loc = mesh.locate(source.as_polar()).map_err(|_| Error::SourceOnBoundary)?;
    let distance = loc.edge_distance();
    if distance < EDGE_TOL {
        return Err(Error::NearElementEdge { distance });
    }
    let grad = shape_grad(loc.xi, loc.eta);
    let values = match wrt {
        Wrt::R => grad.map(|g| g[0] * 2.0 / mesh.dr()),
        Wrt::Theta => grad.map(|g| g[1] * 2.0 / mesh.dtheta()),
    };
    Ok(SparseLoad::from_element(mesh.element_nodes(loc.element), values))
}

/// Move a source at least `margin` (reference units) away from every
/// element edge of `mesh`. Sources already clear are returned unchanged.
pub fn nudge_off_edges(mesh: &Mesh, source: SourcePoint, margin: f64) -> SourcePoint {
    let Ok(loc) = mesh.locate(source.as_polar()) else {
        return source;
    };
    if loc.edge_distance() >= margin {
        return source;
    }
    let pull = |c: f64| c.clamp(-1.0 + margin, 1.0 - margin);
    let (r, theta) = mesh.map_to_physical(loc.element, pull(loc.xi), pull(loc.eta));
    SourcePoint {
        r,
        theta: wrap_angle(theta),
    }
}

/// Mass and stiffness over all nodes, before the boundary is eliminated.
#[derive(Debug, Clone)]
pub struct GlobalMatrices {
    pub mass: CsrMatrix,
    pub stiffness: CsrMatrix,
}

// Every element of a ring has the same local matrices.
fn ring_matrices(mesh: &Mesh, ring: usize) -> ([[f64; 4]; 4], [[f64; 4]; 4]) {
    let (dr, dt) = (mesh.dr(), mesh.dtheta());
    let jac = 0.25 * dr * dt;
    let mut me = [[0.0; 4]; 4];
    let mut ke = [[0.0; 4]; 4];
    for &(xi, wx) in &GAUSS3 {
        for &(eta, we) in &GAUSS3 {
            let r = (ring as f64 + 0.5 * (1.0 + xi)) * dr;
            let n = shape(xi, eta);
            let g = shape_grad(xi, eta);
            let w = wx * we * jac;
            for a in 0..4 {
                let (ar, at) = (g[a][0] * 2.0 / dr, g[a][1] * 2.0 / dt);
                for b in 0..4 {
                    let (br, bt) = (g[b][0] * 2.0 / dr, g[b][1] * 2.0 / dt);
                    me[a][b] += w * n[a] * n[b] * r;
                    ke[a][b] += w * (r * ar * br + at * bt / r);
                }
            }
        }
    }
    (me, ke)
}

pub fn global_matrices(mesh: &Mesh) -> GlobalMatrices {
    let n = mesh.n_nodes();
    let mut mt = Vec::with_capacity(16 * mesh.n_elements());
    let mut kt = Vec::with_capacity(16 * mesh.n_elements());
    for ring in 0..mesh.m_r() {
        let (me, ke) = ring_matrices(mesh, ring);
        for col in 0..mesh.n_theta() {
            let nodes = mesh.element_nodes(mesh.element_id(ring, col));
            for a in 0..4 {
                for b in 0..4 {
                    mt.push((nodes[a], nodes[b], me[a][b]));
                    kt.push((nodes[a], nodes[b], ke[a][b]));
                }
            }
        }
    }
    GlobalMatrices {
        mass: CsrMatrix::from_triplets(n, mt),
        stiffness: CsrMatrix::from_triplets(n, kt),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Above this many bytes for the factor, fall back to conjugate gradients.
    pub memory_cap_bytes: usize,
    /// Multiplies the assembled stiffness. Anything but 1 is a fault
    /// injection hook for exercising the verification suite.
    pub stiffness_scale: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            memory_cap_bytes: 1 << 30,
            stiffness_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone)]
enum StepSolver {
    Direct(SkylineCholesky),
    Iterative,
}

/// Matrices with the boundary eliminated plus a reusable solver for
/// `A = M + Δt K`. Immutable once built and safe to share across threads.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    mesh: Mesh,
    mass: CsrMatrix,
    stiffness: CsrMatrix,
    step: CsrMatrix,
    dt: f64,
    solver: StepSolver,
}

pub fn assemble(mesh: &Mesh, dt: f64) -> Result<AssembledSystem> {
    AssembledSystem::new(mesh, dt, &SolverOptions::default())
}

impl AssembledSystem {
    pub fn new(mesh: &Mesh, dt: f64, options: &SolverOptions) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Domain("time step must be positive"));
        }
        let full = global_matrices(mesh);
        let n = mesh.n_dof();
        let mass = full.mass.leading_block(n);
        let stiffness = full.stiffness.leading_block(n).scaled(options.stiffness_scale);
        let step = mass.add_scaled(dt, &stiffness);
        let solver = if linalg::skyline_bytes(&step) <= options.memory_cap_bytes {
            StepSolver::Direct(SkylineCholesky::factor(&step)?)
        } else {
            StepSolver::Iterative
        };
        Ok(Self {
            mesh: mesh.clone(),
            mass,
            stiffness,
            step,
            dt,
            solver,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn mass(&self) -> &CsrMatrix {
        &self.mass
    }

    pub fn stiffness(&self) -> &CsrMatrix {
        &self.stiffness
    }

    pub fn step_matrix(&self) -> &CsrMatrix {
        &self.step
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn n_dof(&self) -> usize {
        self.mass.dim()
    }

    pub fn is_direct(&self) -> bool {
        matches!(self.solver, StepSolver::Direct(_))
    }

    /// Solve `A x = rhs`. On entry `x` is the starting guess for the
    /// iterative path.
    pub fn solve_step(&self, rhs: &[f64], x: &mut [f64]) -> Result<()> {
        match &self.solver {
            StepSolver::Direct(chol) => {
                x.copy_from_slice(rhs);
                chol.solve_in_place(x);
                Ok(())
            }
            StepSolver::Iterative => {
                linalg::pcg(&self.step, rhs, x, SOLVE_TOL, 10 * self.n_dof()).map(|_| ())
            }
        }
    }

    /// Backward Euler march driven by a constant load; `visit(k, u^k)` is
    /// called for `k = 1..=steps`.
    fn march(&self, load: &[f64], steps: usize, mut visit: impl FnMut(usize, &[f64])) -> Result<()> {
        let n = self.n_dof();
        let mut u = vec![0.0; n];
        let mut rhs = vec![0.0; n];
        for k in 1..=steps {
            self.mass.mul_into(&u, &mut rhs);
            for (r, b) in rhs.iter_mut().zip(load) {
                *r += self.dt * b;
            }
            self.solve_step(&rhs, &mut u)?;
            visit(k, &u);
        }
        Ok(())
    }
}

/// Fields `u^0 = 0, u^1, …, u^d` on the unknowns at `t_k = kΔt`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldHistory {
    pub times: Vec<f64>,
    pub fields: Vec<Vec<f64>>,
    pub source: SourcePoint,
}

impl FieldHistory {
    pub fn final_field(&self) -> &[f64] {
        self.fields.last().map_or(&[], |f| f.as_slice())
    }

    /// Flux at `theta_obs` for every stored time, including `t_0`.
    pub fn flux_trace(&self, mesh: &Mesh, theta_obs: f64) -> Vec<f64> {
        let ell = flux_functional(mesh, theta_obs);
        self.fields.iter().map(|u| apply(&ell, u)).collect()
    }
}

fn history(system: &AssembledSystem, source: SourcePoint, load: &SparseLoad, steps: usize) -> Result<FieldHistory> {
    if steps == 0 {
        return Err(Error::Domain("need at least one time step"));
    }
    let b = load.to_dof_vector(system.n_dof());
    let mut fields = Vec::with_capacity(steps + 1);
    fields.push(vec![0.0; system.n_dof()]);
    system.march(&b, steps, |_, u| fields.push(u.to_vec()))?;
    let times = (0..=steps).map(|k| k as f64 * system.dt).collect();
    Ok(FieldHistory { times, fields, source })
}

pub fn solve_forward(system: &AssembledSystem, source: SourcePoint, steps: usize) -> Result<FieldHistory> {
    let load = point_load(&system.mesh, source)?;
    history(system, source, &load, steps)
}

/// Derivative of the forward field with respect to one source coordinate.
pub fn solve_sensitivity(system: &AssembledSystem, source: SourcePoint, wrt: Wrt, steps: usize) -> Result<FieldHistory> {
    let load = derivative_load(&system.mesh, source, wrt)?;
    history(system, source, &load, steps)
}

/// Boundary flux as a linear functional of the unknowns: the radial
/// derivative at `r = 1` of the field in the outer element ring. Boundary
/// values are zero, so only the two ring `m_r − 1` nodes contribute.
pub fn flux_functional(mesh: &Mesh, theta_obs: f64) -> SparseLoad {
    let loc = mesh
        .locate(PolarPoint {
            r: 1.0 - 0.5 * mesh.dr(),
            theta: wrap_angle(theta_obs),
        })
        .expect("point inside the outer ring");
    let g = shape_grad(1.0, loc.eta);
    let nodes = mesh.element_nodes(loc.element);
    let scale = 2.0 / mesh.dr();
    SparseLoad::from_element([nodes[0], nodes[3], nodes[1], nodes[2]], [g[0][0] * scale, g[3][0] * scale, 0.0, 0.0])
}

fn apply(functional: &SparseLoad, u: &[f64]) -> f64 {
    functional
        .entries
        .iter()
        .filter(|(n, _)| *n < u.len())
        .map(|&(n, v)| v * u[n])
        .sum()
}

/// `∂u/∂n` at `(1, θ_obs)` for a field over the unknowns.
pub fn boundary_flux(mesh: &Mesh, field: &[f64], theta_obs: f64) -> f64 {
    apply(&flux_functional(mesh, theta_obs), field)
}

/// Flux traces at several angles for one load, without keeping the fields.
/// Entry `[j][k−1]` is the flux at `angles[j]` and `t_k`.
pub fn flux_traces(system: &AssembledSystem, load: &SparseLoad, angles: &[f64], steps: usize) -> Result<Vec<Vec<f64>>> {
    let functionals: Vec<SparseLoad> = angles.iter().map(|&a| flux_functional(&system.mesh, a)).collect();
    let b = load.to_dof_vector(system.n_dof());
    let mut out = vec![Vec::with_capacity(steps); angles.len()];
    system.march(&b, steps, |_, u| {
        for (trace, ell) in out.iter_mut().zip(&functionals) {
            trace.push(apply(ell, u));
        }
    })?;
    Ok(out)
}

/// Adjoint response of one flux observation over `steps` time steps.
///
/// With `ρ_0 = A⁻¹ℓ`, `ρ_{q+1} = A⁻¹Mρ_q` and `C_i = ρ_0 + … + ρ_i`, the
/// flux at `t_i` of the march driven by load `b` is `Δt · C_{i−1}·b`.
#[derive(Debug, Clone)]
pub struct FluxKernel {
    theta_obs: f64,
    steps: usize,
    n_dof: usize,
    dt: f64,
    cumulative: Vec<f64>,
}

impl FluxKernel {
    pub fn build(system: &AssembledSystem, theta_obs: f64, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::Domain("need at least one time step"));
        }
        let n = system.n_dof();
        let ell = flux_functional(&system.mesh, theta_obs).to_dof_vector(n);
        let mut cumulative = Vec::with_capacity(n * steps);
        let mut rho = vec![0.0; n];
        let mut rhs = ell;
        let mut acc = vec![0.0; n];
        for q in 0..steps {
            if q > 0 {
                system.mass.mul_into(&rho, &mut rhs);
            }
            system.solve_step(&rhs, &mut rho)?;
            for (a, p) in acc.iter_mut().zip(&rho) {
                *a += p;
            }
            cumulative.extend_from_slice(&acc);
        }
        Ok(Self {
            theta_obs,
            steps,
            n_dof: n,
            dt: system.dt,
            cumulative,
        })
    }

    pub fn theta_obs(&self) -> f64 {
        self.theta_obs
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Flux at `t_1..t_d` of the march driven by `load`.
    pub fn trace(&self, load: &SparseLoad) -> Vec<f64> {
        let active: Vec<(usize, f64)> = load.entries.iter().copied().filter(|(n, _)| *n < self.n_dof).collect();
        self.cumulative
            .chunks_exact(self.n_dof)
            .map(|c| self.dt * active.iter().map(|&(n, v)| v * c[n]).sum::<f64>())
            .collect()
    }
}
