//! Least-squares recovery of the source location from boundary flux data.
//!
//! Four misfits are supported. With `F_ji` the model-minus-data residual at
//! observation angle `z_j` and time `t_i = iT/d`:
//!
//! * `J`:  two angles, all times, `(T/d) Σ_j Σ_i F_ji²`
//! * `J1`: two angles, one time `t*`, `Σ_j F_j*²`
//! * `J2`: one angle, all times, `(T/d) Σ_i F_i²`
//! * `J3`: one angle, two times, `Σ_i F_i²`
//!
//! Gradients come from the sensitivity fluxes `∂flux/∂r*`, `∂flux/∂θ*`;
//! [`descend`] runs projected gradient descent with Armijo backtracking.

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use crate::error::{Error, Result};
use crate::fem::{self, AssembledSystem, FluxKernel, Wrt};
use crate::mesh::Mesh;
use crate::point::{wrap_angle, SourcePoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ObjectiveKind {
    J,
    J1,
    J2,
    J3,
}

impl ObjectiveKind {
    pub fn angle_count(self) -> usize {
        match self {
            ObjectiveKind::J | ObjectiveKind::J1 => 2,
            ObjectiveKind::J2 | ObjectiveKind::J3 => 1,
        }
    }

    /// Whether the misfit integrates over the whole time grid.
    pub fn uses_full_grid(self) -> bool {
        matches!(self, ObjectiveKind::J | ObjectiveKind::J2)
    }

    /// `t* = T/2` for J1 and `(T/20, T/5)` for J3.
    pub fn default_times(self, horizon: f64) -> Vec<f64> {
        match self {
            ObjectiveKind::J1 => vec![0.5 * horizon],
            ObjectiveKind::J3 => vec![0.05 * horizon, 0.2 * horizon],
            _ => Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveSpec {
    kind: ObjectiveKind,
    obs_angles: Vec<f64>,
    obs_times: Vec<f64>,
    horizon: f64,
    steps: usize,
    // zero-based positions in a trace sampled at t_1..t_d
    indices: Vec<usize>,
}

impl ObjectiveSpec {
    /// `obs_times` is ignored for J and J2; `None` selects the defaults for
    /// J1 and J3. Times must lie on the grid `iT/d`.
    pub fn new(kind: ObjectiveKind, obs_angles: &[f64], obs_times: Option<&[f64]>, horizon: f64, steps: usize) -> Result<Self> {
        if obs_angles.len() != kind.angle_count() {
            return Err(Error::InvalidObjective("J and J1 need two observation angles, J2 and J3 one"));
        }
        if obs_angles.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidObjective("observation angles must be finite"));
        }
        if !(horizon > 0.0 && horizon.is_finite()) || steps == 0 {
            return Err(Error::InvalidObjective("need a positive horizon and at least one step"));
        }
        let (obs_times, indices) = if kind.uses_full_grid() {
            let times = (1..=steps).map(|i| i as f64 * horizon / steps as f64).collect();
            (times, (0..steps).collect())
        } else {
            let times = obs_times.map_or_else(|| kind.default_times(horizon), <[f64]>::to_vec);
            let want = if kind == ObjectiveKind::J1 { 1 } else { 2 };
            if times.len() != want {
                return Err(Error::InvalidObjective("J1 takes one observation time, J3 two"));
            }
            let mut indices = Vec::with_capacity(want);
            for &t in &times {
                let x = t * steps as f64 / horizon;
                let i = libm::round(x);
                if !(t > 0.0 && t <= horizon) || libm::fabs(x - i) > 1e-9 * steps as f64 {
                    return Err(Error::InvalidObjective("observation times must be grid points in (0, T]"));
                }
                indices.push(i as usize - 1);
            }
            if indices.len() == 2 && indices[0] == indices[1] {
                return Err(Error::InvalidObjective("J3 needs two distinct times"));
            }
            (times, indices)
        };
        Ok(Self {
            kind,
            obs_angles: obs_angles.iter().map(|&a| wrap_angle(a)).collect(),
            obs_times,
            horizon,
            steps,
            indices,
        })
    }

    pub fn kind(&self) -> ObjectiveKind {
        self.kind
    }

    pub fn obs_angles(&self) -> &[f64] {
        &self.obs_angles
    }

    pub fn obs_times(&self) -> &[f64] {
        &self.obs_times
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Quadrature weight in front of the residual sum.
    pub fn weight(&self) -> f64 {
        if self.kind.uses_full_grid() {
            self.horizon / self.steps as f64
        } else {
            1.0
        }
    }
}

/// Forward model giving flux traces at fixed observation angles, sampled at
/// `t_1..t_d`.
pub trait FluxModel {
    fn angles(&self) -> &[f64];
    fn steps(&self) -> usize;
    fn horizon(&self) -> f64;
    /// One trace per observation angle.
    fn flux(&self, source: SourcePoint) -> Result<Vec<Vec<f64>>>;
    /// Flux together with its derivatives in `r*` and `θ*`.
    fn flux_and_sensitivities(&self, source: SourcePoint) -> Result<[Vec<Vec<f64>>; 3]>;
    /// Map a candidate to a nearby point where sensitivities exist.
    fn admissible(&self, source: SourcePoint) -> SourcePoint {
        source
    }
}

/// Margin (reference coordinates) kept between candidates and element edges.
pub const EDGE_MARGIN: f64 = 1e-6;

/// FEM model that marches the forward and sensitivity problems for every
/// candidate.
pub struct MarchingModel<'a> {
    system: &'a AssembledSystem,
    angles: Vec<f64>,
    steps: usize,
}

impl<'a> MarchingModel<'a> {
    pub fn new(system: &'a AssembledSystem, angles: &[f64], steps: usize) -> Self {
        Self {
            system,
            angles: angles.iter().map(|&a| wrap_angle(a)).collect(),
            steps,
        }
    }
}

impl FluxModel for MarchingModel<'_> {
    fn angles(&self) -> &[f64] {
        &self.angles
    }

    fn steps(&self) -> usize {
        self.steps
    }

    fn horizon(&self) -> f64 {
        self.steps as f64 * self.system.dt()
    }

    fn flux(&self, source: SourcePoint) -> Result<Vec<Vec<f64>>> {
        let load = fem::point_load(self.system.mesh(), source)?;
        fem::flux_traces(self.system, &load, &self.angles, self.steps)
    }

    fn flux_and_sensitivities(&self, source: SourcePoint) -> Result<[Vec<Vec<f64>>; 3]> {
        let mesh = self.system.mesh();
        let dr = fem::derivative_load(mesh, source, Wrt::R)?;
        let dt = fem::derivative_load(mesh, source, Wrt::Theta)?;
        Ok([
            self.flux(source)?,
            fem::flux_traces(self.system, &dr, &self.angles, self.steps)?,
            fem::flux_traces(self.system, &dt, &self.angles, self.steps)?,
        ])
    }

    fn admissible(&self, source: SourcePoint) -> SourcePoint {
        fem::nudge_off_edges(self.system.mesh(), source, EDGE_MARGIN)
    }
}

/// FEM model backed by precomputed adjoint flux kernels. Gives the same
/// traces as [`MarchingModel`] up to rounding, at a cost of a few
/// multiply-adds per time step.
#[derive(Debug, Clone)]
pub struct KernelModel {
    mesh: Mesh,
    angles: Vec<f64>,
    kernels: Vec<FluxKernel>,
    horizon: f64,
}

impl KernelModel {
    pub fn build(system: &AssembledSystem, angles: &[f64], steps: usize) -> Result<Self> {
        let kernels = angles
            .iter()
            .map(|&a| FluxKernel::build(system, a, steps))
            .collect::<Result<Vec<_>>>()?;
        Self::from_kernels(system, kernels)
    }

    /// Assemble from kernels built elsewhere, e.g. in parallel.
    pub fn from_kernels(system: &AssembledSystem, kernels: Vec<FluxKernel>) -> Result<Self> {
        let steps = kernels.first().map_or(0, FluxKernel::steps);
        if steps == 0 || kernels.iter().any(|k| k.steps() != steps) {
            return Err(Error::DataMismatch("kernels must share a nonempty time grid"));
        }
        Ok(Self {
            mesh: system.mesh().clone(),
            angles: kernels.iter().map(FluxKernel::theta_obs).map(wrap_angle).collect(),
            horizon: steps as f64 * system.dt(),
            kernels,
        })
    }
}

impl FluxModel for KernelModel {
    fn angles(&self) -> &[f64] {
        &self.angles
    }

    fn steps(&self) -> usize {
        self.kernels[0].steps()
    }

    fn horizon(&self) -> f64 {
        self.horizon
    }

    fn flux(&self, source: SourcePoint) -> Result<Vec<Vec<f64>>> {
        let load = fem::point_load(&self.mesh, source)?;
        Ok(self.kernels.iter().map(|k| k.trace(&load)).collect())
    }

    fn flux_and_sensitivities(&self, source: SourcePoint) -> Result<[Vec<Vec<f64>>; 3]> {
        let dr = fem::derivative_load(&self.mesh, source, Wrt::R)?;
        let dt = fem::derivative_load(&self.mesh, source, Wrt::Theta)?;
        Ok([
            self.flux(source)?,
            self.kernels.iter().map(|k| k.trace(&dr)).collect(),
            self.kernels.iter().map(|k| k.trace(&dt)).collect(),
        ])
    }

    fn admissible(&self, source: SourcePoint) -> SourcePoint {
        fem::nudge_off_edges(&self.mesh, source, EDGE_MARGIN)
    }
}

/// A misfit bound to its data and forward model.
pub struct Objective<'a, M: FluxModel + ?Sized> {
    spec: &'a ObjectiveSpec,
    data: &'a [Vec<f64>],
    model: &'a M,
    r_clamp: (f64, f64),
}

impl<'a, M: FluxModel + ?Sized> Objective<'a, M> {
    /// `data[j]` is the observed trace at `spec.obs_angles()[j]`, sampled on
    /// the full grid `t_1..t_d`.
    pub fn new(spec: &'a ObjectiveSpec, data: &'a [Vec<f64>], model: &'a M) -> Result<Self> {
        if data.len() != spec.obs_angles.len() || data.iter().any(|d| d.len() != spec.steps) {
            return Err(Error::DataMismatch("one trace of d samples per observation angle"));
        }
        let angles_match = model.angles().len() == spec.obs_angles.len()
            && model.angles().iter().zip(&spec.obs_angles).all(|(a, b)| libm::fabs(a - b) < 1e-12);
        if !angles_match || model.steps() != spec.steps || libm::fabs(model.horizon() - spec.horizon) > 1e-9 * spec.horizon {
            return Err(Error::DataMismatch("model angles and time grid must match the objective"));
        }
        let cfg = DescentConfig::default();
        Ok(Self {
            spec,
            data,
            model,
            r_clamp: (cfg.r_lo, cfg.r_hi),
        })
    }

    pub fn with_clamp(mut self, r_lo: f64, r_hi: f64) -> Self {
        self.r_clamp = (r_lo, r_hi);
        self
    }

    pub fn spec(&self) -> &ObjectiveSpec {
        self.spec
    }

    pub fn model(&self) -> &M {
        self.model
    }

    fn check_clamp(&self, c: SourcePoint) -> Result<()> {
        let (lo, hi) = self.r_clamp;
        if c.r < lo || c.r > hi {
            return Err(Error::OutsideClamp { r: c.r, lo, hi });
        }
        Ok(())
    }

    fn residuals(&self, flux: &[Vec<f64>]) -> Vec<Vec<f64>> {
        flux.iter()
            .zip(self.data)
            .map(|(f, d)| self.spec.indices.iter().map(|&i| f[i] - d[i]).collect())
            .collect()
    }
}

pub fn evaluate_objective<M: FluxModel + ?Sized>(obj: &Objective<'_, M>, candidate: SourcePoint) -> Result<f64> {
    obj.check_clamp(candidate)?;
    let flux = obj.model.flux(candidate)?;
    let sum: f64 = obj.residuals(&flux).iter().flatten().map(|f| f * f).sum();
    Ok(obj.spec.weight() * sum)
}

/// Objective value with its gradient in `(r*, θ*)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gradient {
    pub value: f64,
    pub d_r: f64,
    pub d_theta: f64,
}

impl Gradient {
    pub fn norm(&self) -> f64 {
        libm::hypot(self.d_r, self.d_theta)
    }
}

pub fn gradient<M: FluxModel + ?Sized>(obj: &Objective<'_, M>, candidate: SourcePoint) -> Result<Gradient> {
    obj.check_clamp(candidate)?;
    let [flux, s_r, s_t] = obj.model.flux_and_sensitivities(candidate)?;
    let res = obj.residuals(&flux);
    let w = obj.spec.weight();
    let mut out = Gradient {
        value: 0.0,
        d_r: 0.0,
        d_theta: 0.0,
    };
    for (j, rj) in res.iter().enumerate() {
        for (f, &i) in rj.iter().zip(&obj.spec.indices) {
            out.value += w * f * f;
            out.d_r += 2.0 * w * f * s_r[j][i];
            out.d_theta += 2.0 * w * f * s_t[j][i];
        }
    }
    Ok(out)
}

/// Central differences of [`evaluate_objective`] with step `h` in each
/// coordinate.
pub fn fd_gradient<M: FluxModel + ?Sized>(obj: &Objective<'_, M>, candidate: SourcePoint, h: f64) -> Result<(f64, f64)> {
    if !(h > 0.0) {
        return Err(Error::Domain("finite-difference step must be positive"));
    }
    let at = |r: f64, t: f64| evaluate_objective(obj, SourcePoint { r, theta: wrap_angle(t) });
    let (r, t) = (candidate.r, candidate.theta);
    let d_r = (at(r + h, t)? - at(r - h, t)?) / (2.0 * h);
    let d_t = (at(r, t + h)? - at(r, t - h)?) / (2.0 * h);
    Ok((d_r, d_t))
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescentConfig {
    pub init: SourcePoint,
    pub epsilon: f64,
    pub max_iters: usize,
    pub armijo_c: f64,
    pub backtrack: f64,
    pub alpha0: f64,
    pub r_lo: f64,
    pub r_hi: f64,
    pub max_backtracks: usize,
}

impl Default for DescentConfig {
    fn default() -> Self {
        Self {
            init: SourcePoint { r: 0.5, theta: 1.5 },
            epsilon: 1e-6,
            max_iters: 200,
            armijo_c: 1e-4,
            backtrack: 0.5,
            alpha0: 0.1,
            r_lo: 0.02,
            r_hi: 0.98,
            max_backtracks: 40,
        }
    }
}

impl DescentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.r_lo && self.r_lo < self.r_hi && self.r_hi < 1.0) {
            return Err(Error::InvalidConfig("need 0 < r_lo < r_hi < 1"));
        }
        if self.init.r < self.r_lo || self.init.r > self.r_hi {
            return Err(Error::InvalidConfig("initial radius outside the clamp interval"));
        }
        if !(self.epsilon > 0.0) || !(self.alpha0 > 0.0) || !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return Err(Error::InvalidConfig("epsilon, alpha0 and armijo_c must be positive, armijo_c < 1"));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(Error::InvalidConfig("backtrack factor must lie in (0, 1)"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Iterate {
    pub iter: usize,
    pub r: f64,
    pub theta: f64,
    pub value: f64,
    pub grad_r: f64,
    pub grad_theta: f64,
    /// Accepted step length; 0 for the starting point.
    pub alpha: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InversionResult {
    pub estimate: SourcePoint,
    pub converged: bool,
    pub iterates: Vec<Iterate>,
}

/// `a − b` reduced to `(−π, π]`.
fn signed_angle_diff(a: f64, b: f64) -> f64 {
    let d = wrap_angle(a - b);
    if d > PI {
        d - TAU
    } else {
        d
    }
}

/// Projected gradient descent with Armijo backtracking. Each iteration
/// first tries twice the previously accepted step. Stops once
/// `|Δr|/|r| + |Δθ|/|θ| < ε` (wrapped `Δθ`) or after `max_iters`.
pub fn descend<M: FluxModel + ?Sized>(obj: &Objective<'_, M>, cfg: &DescentConfig) -> Result<InversionResult> {
    cfg.validate()?;
    let obj = Objective {
        r_clamp: (cfg.r_lo, cfg.r_hi),
        ..*obj
    };
    let project = |r: f64, theta: f64| {
        obj.model.admissible(SourcePoint {
            r: r.clamp(cfg.r_lo, cfg.r_hi),
            theta: wrap_angle(theta),
        })
    };
    let mut x = project(cfg.init.r, cfg.init.theta);
    let mut g = gradient(&obj, x)?;
    let mut iterates = vec![Iterate {
        iter: 0,
        r: x.r,
        theta: x.theta,
        value: g.value,
        grad_r: g.d_r,
        grad_theta: g.d_theta,
        alpha: 0.0,
    }];
    let mut alpha = cfg.alpha0;
    let mut converged = false;
    for iter in 1..=cfg.max_iters {
        if g.d_r == 0.0 && g.d_theta == 0.0 {
            converged = true;
            break;
        }
        let mut step = alpha;
        let mut accepted = None;
        for _ in 0..=cfg.max_backtracks {
            let cand = project(x.r - step * g.d_r, x.theta - step * g.d_theta);
            let (dr, dt) = (x.r - cand.r, signed_angle_diff(x.theta, cand.theta));
            let decrease = g.d_r * dr + g.d_theta * dt;
            let value = evaluate_objective(&obj, cand)?;
            if value <= g.value - cfg.armijo_c * decrease {
                accepted = Some((cand, dr, dt));
                break;
            }
            step *= cfg.backtrack;
        }
        let Some((cand, dr, dt)) = accepted else {
            break;
        };
        let change = libm::fabs(dr) / libm::fabs(cand.r) + libm::fabs(dt) / libm::fabs(cand.theta).max(f64::MIN_POSITIVE);
        x = cand;
        g = gradient(&obj, x)?;
        iterates.push(Iterate {
            iter,
            r: x.r,
            theta: x.theta,
            value: g.value,
            grad_r: g.d_r,
            grad_theta: g.d_theta,
            alpha: step,
        });
        alpha = step / cfg.backtrack;
        if change < cfg.epsilon {
            converged = true;
            break;
        }
    }
    Ok(InversionResult {
        estimate: x,
        converged,
        iterates,
    })
}

/// Best point of a `k × k` grid over the clamp interval and the circle.
pub fn grid_start<M: FluxModel + ?Sized>(obj: &Objective<'_, M>, cfg: &DescentConfig, k: usize) -> Result<SourcePoint> {
    cfg.validate()?;
    let mut best: Option<(f64, SourcePoint)> = None;
    for a in 0..k {
        for b in 0..k {
            let r = cfg.r_lo + (cfg.r_hi - cfg.r_lo) * (a as f64 + 0.5) / k as f64;
            let c = obj.model.admissible(SourcePoint {
                r,
                theta: TAU * (b as f64 + 0.5) / k as f64,
            });
            let value = evaluate_objective(obj, c)?;
            if best.is_none_or(|(v, _)| value < v) {
                best = Some((value, c));
            }
        }
    }
    best.map(|(_, c)| c).ok_or(Error::InvalidConfig("grid must have at least one point"))
}

/// Descent from the best point of an 8×8 start grid.
pub fn multistart<M: FluxModel + ?Sized>(obj: &Objective<'_, M>, cfg: &DescentConfig) -> Result<InversionResult> {
    let init = grid_start(obj, cfg, 8)?;
    descend(obj, &DescentConfig { init, ..cfg.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Flux linear in the source coordinates, so every misfit is quadratic.
    struct LinearModel {
        angles: Vec<f64>,
        steps: usize,
    }

    impl LinearModel {
        fn coeffs(j: usize, i: usize) -> (f64, f64) {
            (1.0 + 0.1 * j as f64 + 0.01 * i as f64, 0.5 - 0.02 * i as f64 + 0.3 * j as f64)
        }
    }

    impl FluxModel for LinearModel {
        fn angles(&self) -> &[f64] {
            &self.angles
        }
        fn steps(&self) -> usize {
            self.steps
        }
        fn horizon(&self) -> f64 {
            1.0
        }
        fn flux(&self, s: SourcePoint) -> Result<Vec<Vec<f64>>> {
            Ok((0..self.angles.len())
                .map(|j| {
                    (0..self.steps)
                        .map(|i| {
                            let (a, b) = Self::coeffs(j, i);
                            a * s.r + b * s.theta
                        })
                        .collect()
                })
                .collect())
        }
        fn flux_and_sensitivities(&self, s: SourcePoint) -> Result<[Vec<Vec<f64>>; 3]> {
            let n = self.angles.len();
            let sr = (0..n).map(|j| (0..self.steps).map(|i| Self::coeffs(j, i).0).collect()).collect();
            let st = (0..n).map(|j| (0..self.steps).map(|i| Self::coeffs(j, i).1).collect()).collect();
            Ok([self.flux(s)?, sr, st])
        }
    }

    fn toy(kind: ObjectiveKind) -> (ObjectiveSpec, LinearModel) {
        let angles = &[0.3, 1.7][..kind.angle_count()];
        let spec = ObjectiveSpec::new(kind, angles, None, 1.0, 20).unwrap();
        let model = LinearModel {
            angles: spec.obs_angles().to_vec(),
            steps: 20,
        };
        (spec, model)
    }

    #[test]
    fn spec_validation() {
        assert!(ObjectiveSpec::new(ObjectiveKind::J, &[0.1], None, 1.0, 10).is_err());
        assert!(ObjectiveSpec::new(ObjectiveKind::J3, &[0.1], Some(&[0.5, 0.5]), 1.0, 10).is_err());
        assert!(ObjectiveSpec::new(ObjectiveKind::J1, &[0.1, 0.2], Some(&[0.55]), 1.0, 10).is_err());
        assert!(ObjectiveSpec::new(ObjectiveKind::J1, &[0.1, 0.2], Some(&[0.0]), 1.0, 10).is_err());
        let s = ObjectiveSpec::new(ObjectiveKind::J3, &[0.1], None, 1.0, 500).unwrap();
        assert_eq!(s.indices, vec![24, 99]);
        assert_eq!(s.weight(), 1.0);
        let s = ObjectiveSpec::new(ObjectiveKind::J2, &[0.1], None, 2.0, 500).unwrap();
        assert_eq!(s.indices.len(), 500);
        assert!((s.weight() - 0.004).abs() < 1e-18);
    }

    #[test]
    fn fd_gradient_is_exact_on_quadratics() {
        for kind in [ObjectiveKind::J, ObjectiveKind::J1, ObjectiveKind::J2, ObjectiveKind::J3] {
            let (spec, model) = toy(kind);
            let data = model.flux(SourcePoint { r: 0.4, theta: 2.0 }).unwrap();
            let obj = Objective::new(&spec, &data, &model).unwrap();
            let c = SourcePoint { r: 0.6, theta: 2.9 };
            let g = gradient(&obj, c).unwrap();
            let (fr, ft) = fd_gradient(&obj, c, 1e-3).unwrap();
            assert!((g.d_r - fr).abs() < 1e-10 && (g.d_theta - ft).abs() < 1e-10, "{kind:?}");
            assert!((g.value - evaluate_objective(&obj, c).unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn clamp_is_enforced() {
        let (spec, model) = toy(ObjectiveKind::J);
        let data = model.flux(SourcePoint { r: 0.4, theta: 2.0 }).unwrap();
        let obj = Objective::new(&spec, &data, &model).unwrap();
        assert!(matches!(
            evaluate_objective(&obj, SourcePoint { r: 0.99, theta: 1.0 }),
            Err(Error::OutsideClamp { .. })
        ));
    }

    #[test]
    fn rejects_mismatched_data() {
        let (spec, model) = toy(ObjectiveKind::J);
        let short = vec![vec![0.0; 19]; 2];
        assert!(Objective::new(&spec, &short, &model).is_err());
    }

    #[test]
    fn descent_decreases_monotonically() {
        let (spec, model) = toy(ObjectiveKind::J);
        let data = model.flux(SourcePoint { r: 0.4, theta: 2.0 }).unwrap();
        let obj = Objective::new(&spec, &data, &model).unwrap();
        let cfg = DescentConfig {
            init: SourcePoint { r: 0.7, theta: 2.3 },
            max_iters: 1000,
            ..DescentConfig::default()
        };
        let res = descend(&obj, &cfg).unwrap();
        for w in res.iterates.windows(2) {
            assert!(w[1].value <= w[0].value);
        }
        assert!(res.iterates.iter().all(|it| (cfg.r_lo..=cfg.r_hi).contains(&it.r)));
        assert!(res.converged);
        assert!((res.estimate.r - 0.4).abs() < 1e-3 && (res.estimate.theta - 2.0).abs() < 1e-3, "{:?}", res.estimate);
    }

    #[test]
    fn start_at_truth_stops_immediately() {
        let (spec, model) = toy(ObjectiveKind::J2);
        let truth = SourcePoint { r: 0.4, theta: 2.0 };
        let data = model.flux(truth).unwrap();
        let obj = Objective::new(&spec, &data, &model).unwrap();
        let res = descend(&obj, &DescentConfig { init: truth, ..DescentConfig::default() }).unwrap();
        assert!(res.converged);
        assert!(res.iterates.len() <= 2);
        assert!(gradient(&obj, res.estimate).unwrap().norm() <= 1e-10);
    }

    #[test]
    fn signed_difference_wraps() {
        assert!((signed_angle_diff(0.1, TAU - 0.1) - 0.2).abs() < 1e-14);
        assert!((signed_angle_diff(TAU - 0.1, 0.1) + 0.2).abs() < 1e-14);
    }
}
