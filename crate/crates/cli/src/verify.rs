//! Self-check suite behind `disc-source verify`.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::fmt;
use std::fs;
use std::path::Path;

use anyhow::Result;
use disc_source_core::admissibility::{check_observation_angles, Admissibility, DEFAULT_Q_MAX};
use disc_source_core::bessel::{bessel_j, bessel_zeros};
use disc_source_core::fem::{boundary_flux, flux_traces, point_load, solve_forward, AssembledSystem, SolverOptions};
use disc_source_core::spectral::{flux, steady_flux, SpectralEngine, DEFAULT_TOL};
use disc_source_core::SourcePoint;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{Engine, ExperimentConfig, MeshSpec, ObjectiveConfig};
use crate::experiments::{run_inversion, run_table};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub measured: String,
    pub tolerance: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{status}  {}: {} (required {})", self.name, self.measured, self.tolerance)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            writeln!(f, "{c}")?;
        }
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        writeln!(f, "{} checks, {} failed", self.checks.len(), failed)
    }
}

fn bound(name: &'static str, measured: f64, limit: f64, what: &str) -> Check {
    Check {
        name,
        passed: measured <= limit,
        measured: format!("{what} {measured:.3e}"),
        tolerance: format!("<= {limit:e}"),
    }
}

fn failed(name: &'static str, err: impl fmt::Display, tolerance: &str) -> Check {
    Check {
        name,
        passed: false,
        measured: format!("error: {err}"),
        tolerance: tolerance.to_string(),
    }
}

struct Rng(ChaCha8Rng);

impl Rng {
    fn new(seed: u64) -> Self {
        Self(ChaCha8Rng::seed_from_u64(seed))
    }

    fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        let u = (self.0.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
        lo + (hi - lo) * u
    }

    fn source(&mut self, r_lo: f64, r_hi: f64) -> SourcePoint {
        SourcePoint::new(self.uniform(r_lo, r_hi), self.uniform(0.0, TAU)).expect("inside the disc")
    }
}

fn bessel_zero_residuals() -> Check {
    let mut worst = 0.0f64;
    for m in 0..=10 {
        match bessel_zeros(m, 30) {
            Ok(zeros) => {
                for z in zeros {
                    worst = worst.max(bessel_j(m, z).map_or(f64::INFINITY, f64::abs));
                }
            }
            Err(e) => return failed("Bessel zero residuals", e, "<= 1e-12"),
        }
    }
    bound("Bessel zero residuals", worst, 1e-12, "max |J_m(j_mk)|, m <= 10, k <= 30")
}

fn steady_flux_integral(rng: &mut Rng) -> Check {
    // periodic trapezoid rule, exponentially accurate for r <= 0.9
    let n = 4096;
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let s = rng.source(0.05, 0.9);
        let total: f64 = (0..n).map(|k| steady_flux(s, k as f64 * TAU / n as f64)).sum::<f64>() * TAU / n as f64;
        worst = worst.max((total + 1.0).abs());
    }
    bound("steady flux integral", worst, 1e-10, "max |∮ flux + 1| over 10 sources")
}

fn rotation_equivariance(rng: &mut Rng) -> Check {
    let mut worst = 0.0f64;
    for _ in 0..8 {
        let s = rng.source(0.05, 0.9);
        let z = rng.uniform(0.0, TAU);
        let t = rng.uniform(0.01, 1.0);
        let phi = rng.uniform(0.0, TAU);
        match (flux(s, z, t, DEFAULT_TOL), flux(s.rotated(phi), z + phi, t, DEFAULT_TOL)) {
            (Ok(a), Ok(b)) => worst = worst.max((a - b).abs()),
            (Err(e), _) | (_, Err(e)) => return failed("rotation equivariance", e, "<= 1e-12"),
        }
    }
    bound("rotation equivariance", worst, 1e-12, "max spectral flux difference")
}

fn admissibility_flags_quarter_turn(angles: &[f64]) -> Vec<Check> {
    let theta = angles.first().copied().unwrap_or(0.0);
    let quarter = check_observation_angles(theta + FRAC_PI_2, theta, DEFAULT_Q_MAX);
    let mut checks = vec![Check {
        name: "admissibility flags quarter turn",
        passed: matches!(quarter, Ok(Admissibility::Inadmissible { p: 1, q: 2 })),
        measured: format!("{quarter:?}"),
        tolerance: "Inadmissible { p: 1, q: 2 }".into(),
    }];
    if let [a, b, ..] = angles {
        let status = check_observation_angles(*a, *b, DEFAULT_Q_MAX);
        checks.push(Check {
            name: "configured angles admissible",
            passed: matches!(status, Ok(Admissibility::Admissible)),
            measured: format!("({a}, {b}): {status:?}"),
            tolerance: "Admissible".into(),
        });
    }
    checks
}

fn distinguishability(rng: &mut Rng, angles: &[f64], pairs: usize) -> Check {
    let times: Vec<f64> = (1..=20).map(|k| k as f64 / 20.0).collect();
    let trace = |s: SourcePoint| -> Result<Vec<f64>> {
        let mut e = SpectralEngine::new(s);
        let mut v = Vec::new();
        for &a in angles {
            v.extend(e.trace(a, &times, DEFAULT_TOL)?.values);
        }
        Ok(v)
    };
    let mut closest = f64::INFINITY;
    for _ in 0..pairs {
        let (p, q) = (rng.source(0.1, 0.9), rng.source(0.1, 0.9));
        match (trace(p), trace(q)) {
            (Ok(a), Ok(b)) => {
                let d = a.iter().zip(&b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
                closest = closest.min(d);
            }
            (Err(e), _) | (_, Err(e)) => return failed("distinguishability", e, "> 1e-6"),
        }
    }
    Check {
        name: "distinguishability",
        passed: closest > 1e-6,
        measured: format!("smallest trace distance over {pairs} source pairs {closest:.3e}"),
        tolerance: "> 1e-6".into(),
    }
}

fn fem_system(mesh: MeshSpec, dt: f64, stiffness_scale: f64) -> Result<(disc_source_core::mesh::Mesh, AssembledSystem)> {
    let mesh = mesh.build()?;
    let opts = SolverOptions {
        stiffness_scale,
        ..SolverOptions::default()
    };
    let system = AssembledSystem::new(&mesh, dt, &opts)?;
    Ok((mesh, system))
}

fn maximum_principle(cfg: &ExperimentConfig) -> Check {
    const NAME: &str = "maximum principle";
    let v = &cfg.verify;
    let run = || -> Result<f64> {
        let (mesh, system) = fem_system(v.mesh, cfg.horizon / v.steps as f64, v.stiffness_scale)?;
        let s = v.source.source()?;
        // one observation point inside every boundary cell
        let angles: Vec<f64> = (0..mesh.n_theta()).map(|j| (j as f64 + 0.3) * mesh.dtheta()).collect();
        let traces = flux_traces(&system, &point_load(&mesh, s)?, &angles, v.steps)?;
        Ok(traces.iter().flatten().fold(f64::NEG_INFINITY, |m, &x| m.max(x)))
    };
    match run() {
        Ok(max) => bound(NAME, max, 1e-10, &format!("max FEM flux on {}", v.mesh)),
        Err(e) => failed(NAME, e, "<= 1e-10"),
    }
}

fn conservation(cfg: &ExperimentConfig) -> Check {
    const NAME: &str = "conservation";
    let v = &cfg.verify;
    let run = || -> Result<f64> {
        // a long horizon brings the march to its stationary state
        let steps = 2000;
        let (mesh, system) = fem_system(v.conservation_mesh, 10.0 / steps as f64, v.stiffness_scale)?;
        let history = solve_forward(&system, v.source.source()?, steps)?;
        let total: f64 = (0..mesh.n_theta())
            .map(|j| boundary_flux(&mesh, history.final_field(), j as f64 * mesh.dtheta()) * mesh.dtheta())
            .sum();
        Ok((total + 1.0).abs())
    };
    match run() {
        Ok(err) => bound(NAME, err, 0.02, &format!("|total steady flux + 1| on {}", v.conservation_mesh)),
        Err(e) => failed(NAME, e, "<= 2e-2"),
    }
}

fn reproducibility(cfg: &ExperimentConfig, out: &Path) -> Check {
    const NAME: &str = "reproducibility";
    let mut small = cfg.clone();
    small.generation_mesh = MeshSpec { m_r: 14, n_theta: 16 };
    small.inversion_mesh = MeshSpec { m_r: 12, n_theta: 12 };
    small.steps = 40;
    small.noise.delta = 0.05;
    small.descent.max_iters = 60;
    small.table.seeds = 2;
    small.table.deltas = vec![0.03, 0.1];
    small.objectives = vec![ObjectiveConfig {
        kind: "J".into(),
        label: None,
        angles: None,
        times: None,
    }];
    let run = |dir: &Path| -> Result<Vec<(String, Vec<u8>)>> {
        run_inversion(&small, Engine::Fem, &dir.join("invert"))?;
        run_table(&small, Engine::Fem, &dir.join("table"))?;
        let mut files = Vec::new();
        for sub in ["invert", "table"] {
            let mut names: Vec<_> = fs::read_dir(dir.join(sub))?.map(|e| e.map(|e| e.path())).collect::<Result<_, _>>()?;
            names.sort();
            for p in names {
                files.push((format!("{sub}/{}", p.file_name().unwrap_or_default().to_string_lossy()), fs::read(&p)?));
            }
        }
        Ok(files)
    };
    let base = out.join("reproducibility");
    match (run(&base.join("first")), run(&base.join("second"))) {
        (Ok(a), Ok(b)) => {
            let differing: Vec<&str> = a.iter().zip(&b).filter(|(x, y)| x != y).map(|(x, _)| x.0.as_str()).collect();
            Check {
                name: NAME,
                passed: a.len() == b.len() && !a.is_empty() && differing.is_empty(),
                measured: format!("{} files compared, differing: {:?}", a.len(), differing),
                tolerance: "byte-identical".into(),
            }
        }
        (Err(e), _) | (_, Err(e)) => failed(NAME, e, "byte-identical"),
    }
}

/// Runs every check and writes `verify.txt` to `out`.
pub fn run_verify(cfg: &ExperimentConfig, out: &Path) -> Result<VerifyReport> {
    let mut rng = Rng::new(cfg.verify.seed);
    let mut checks = vec![
        bessel_zero_residuals(),
        steady_flux_integral(&mut rng),
        rotation_equivariance(&mut rng),
    ];
    checks.extend(admissibility_flags_quarter_turn(&cfg.obs_angles));
    checks.push(distinguishability(&mut rng, &cfg.obs_angles, cfg.verify.pairs));
    checks.push(maximum_principle(cfg));
    checks.push(conservation(cfg));
    checks.push(reproducibility(cfg, out));
    let report = VerifyReport { checks };
    fs::create_dir_all(out)?;
    fs::write(out.join("verify.txt"), report.to_string())?;
    Ok(report)
}
