//! Forward, inversion and table runners.

use std::path::Path;

use anyhow::{Context, Result};
use disc_source_core::fem::{assemble, point_load, solve_forward, AssembledSystem, FluxKernel};
use disc_source_core::inversion::{descend, DescentConfig, InversionResult, KernelModel, Objective};
use disc_source_core::mesh::Mesh;
use disc_source_core::spectral::{SpectralEngine, DEFAULT_TOL};
use disc_source_core::{wrap_angle, SourcePoint};
use rayon::prelude::*;

use crate::config::{Engine, ExperimentConfig, ResolvedObjective};
use crate::noise::add_noise_all;
use crate::output::{file_stem, write_csv, FieldRow, FluxRow, IterateRow, RunRow, TableRow};

/// Clean flux traces at every observation angle, sampled at `t_1..t_d`.
pub fn clean_traces(cfg: &ExperimentConfig, engine: Engine) -> Result<Vec<Vec<f64>>> {
    let truth = cfg.truth();
    match engine {
        Engine::Fem => {
            let mesh = cfg.generation_mesh.build()?;
            let system = assemble(&mesh, cfg.dt()).context("assembling the data-generation system")?;
            let load = point_load(&mesh, truth)?;
            Ok(disc_source_core::fem::flux_traces(&system, &load, &cfg.obs_angles, cfg.steps)?)
        }
        Engine::Spectral => spectral_traces(truth, &cfg.obs_angles, &cfg.times()),
    }
}

fn spectral_traces(source: SourcePoint, angles: &[f64], times: &[f64]) -> Result<Vec<Vec<f64>>> {
    let mut engine = SpectralEngine::new(source);
    angles
        .iter()
        .map(|&a| Ok(engine.trace(a, times, DEFAULT_TOL).with_context(|| format!("spectral flux at angle {a}"))?.values))
        .collect()
}

fn flux_rows(angles: &[f64], times: &[f64], traces: &[Vec<f64>]) -> Vec<FluxRow> {
    angles
        .iter()
        .zip(traces)
        .flat_map(|(&theta_obs, trace)| times.iter().zip(trace).map(move |(&t, &value)| FluxRow { t, theta_obs, value }))
        .collect()
}

/// Nodal values of `field` (unknowns only) extended by the boundary zeros.
fn field_rows(mesh: &Mesh, field: &[f64]) -> Vec<FieldRow> {
    (0..mesh.n_nodes())
        .map(|id| {
            let p = mesh.node_position(id);
            FieldRow {
                r: p.r,
                theta: p.theta,
                u: mesh.dof(id).map_or(0.0, |k| field[k]),
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct ForwardOutput {
    pub times: Vec<f64>,
    pub traces: Vec<Vec<f64>>,
}

/// Writes `flux.csv` and, for the FEM engine, `field.csv` with the field at
/// the horizon.
pub fn run_forward(cfg: &ExperimentConfig, engine: Engine, out: &Path) -> Result<ForwardOutput> {
    let times = cfg.times();
    let traces = match engine {
        Engine::Fem => {
            let mesh = cfg.generation_mesh.build()?;
            let system = assemble(&mesh, cfg.dt()).context("assembling the forward system")?;
            let history = solve_forward(&system, cfg.truth(), cfg.steps)?;
            if cfg.field_snapshot {
                write_csv(&out.join("field.csv"), &field_rows(&mesh, history.final_field()))?;
            }
            cfg.obs_angles.iter().map(|&a| history.flux_trace(&mesh, a)[1..].to_vec()).collect()
        }
        Engine::Spectral => spectral_traces(cfg.truth(), &cfg.obs_angles, &times)?,
    };
    write_csv(&out.join("flux.csv"), &flux_rows(&cfg.obs_angles, &times, &traces))?;
    Ok(ForwardOutput { times, traces })
}

/// Inversion-mesh system with one adjoint kernel per observation angle.
pub struct InversionContext {
    system: AssembledSystem,
    kernels: Vec<FluxKernel>,
}

impl InversionContext {
    pub fn build(cfg: &ExperimentConfig) -> Result<Self> {
        let mesh = cfg.inversion_mesh.build()?;
        let system = assemble(&mesh, cfg.dt()).context("assembling the inversion system")?;
        let kernels = cfg
            .obs_angles
            .par_iter()
            .map(|&a| FluxKernel::build(&system, wrap_angle(a), cfg.steps))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { system, kernels })
    }

    pub fn model(&self, objective: &ResolvedObjective) -> Result<KernelModel> {
        let kernels = objective.data_indices.iter().map(|&i| self.kernels[i].clone()).collect();
        Ok(KernelModel::from_kernels(&self.system, kernels)?)
    }
}

/// Descent on one objective against `data` (all observation angles).
pub fn invert(objective: &ResolvedObjective, model: &KernelModel, data: &[Vec<f64>], descent: &DescentConfig) -> Result<InversionResult> {
    let picked: Vec<Vec<f64>> = objective.data_indices.iter().map(|&i| data[i].clone()).collect();
    let obj = Objective::new(&objective.spec, &picked, model)?;
    Ok(descend(&obj, descent)?)
}

fn percent(delta: f64) -> String {
    format!("{}%", (delta * 1000.0).round() / 10.0)
}

fn estimate_label(objective: &str, delta: f64, converged: bool) -> String {
    let mut label = format!("{objective} estimated delta={}", percent(delta));
    if !converged {
        label.push_str(" (not converged)");
    }
    label
}

#[derive(Debug, Clone)]
pub struct InversionOutput {
    pub results: Vec<(String, InversionResult)>,
    pub rows: Vec<TableRow>,
}

/// Generates noisy data, runs every configured objective on it and writes
/// `data.csv`, `iterates_<label>.csv` and `table.csv`.
pub fn run_inversion(cfg: &ExperimentConfig, engine: Engine, out: &Path) -> Result<InversionOutput> {
    let objectives = cfg.resolved_objectives()?;
    anyhow::ensure!(!objectives.is_empty(), "config lists no objectives");
    let descent = cfg.descent.to_config()?;
    let truth = cfg.truth();
    let data = add_noise_all(&clean_traces(cfg, engine)?, &cfg.noise);
    write_csv(&out.join("data.csv"), &flux_rows(&cfg.obs_angles, &cfg.times(), &data))?;

    let ctx = InversionContext::build(cfg)?;
    let results = objectives
        .par_iter()
        .map(|o| Ok((o.label.clone(), invert(o, &ctx.model(o)?, &data, &descent)?)))
        .collect::<Result<Vec<_>>>()?;

    let mut rows = vec![TableRow::new("Actual", truth, truth)];
    for (label, res) in &results {
        let iterates: Vec<IterateRow> = res.iterates.iter().map(IterateRow::from).collect();
        write_csv(&out.join(format!("iterates_{}.csv", file_stem(label))), &iterates)?;
        rows.push(TableRow::new(estimate_label(label, cfg.noise.delta, res.converged), res.estimate, truth));
    }
    write_csv(&out.join("table.csv"), &rows)?;
    Ok(InversionOutput { results, rows })
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Median over seeds of one (objective, δ) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct MedianSummary {
    pub objective: String,
    pub delta: f64,
    pub err_r: f64,
    pub err_theta: f64,
    pub err_x: f64,
    pub err_y: f64,
    /// Median of `sqrt(err_x² + err_y²)`.
    pub err_cartesian: f64,
    pub converged: usize,
    pub runs: usize,
}

#[derive(Debug, Clone)]
pub struct TableOutput {
    pub runs: Vec<RunRow>,
    pub rows: Vec<TableRow>,
    pub summaries: Vec<MedianSummary>,
}

impl TableOutput {
    pub fn summary(&self, objective: &str, delta: f64) -> Option<&MedianSummary> {
        self.summaries.iter().find(|s| s.objective == objective && (s.delta - delta).abs() < 1e-12)
    }
}

/// Replicates `run_inversion` over noise levels and seeds. Cells run in
/// parallel; rows come out ordered by objective, then δ ascending, then
/// seed. Writes `runs.csv` (every cell) and `table.csv` (medians; the
/// estimate is the median radius and the truth angle shifted by the median
/// signed angle error, the error columns are medians of per-seed errors).
pub fn run_table(cfg: &ExperimentConfig, engine: Engine, out: &Path) -> Result<TableOutput> {
    let objectives = cfg.resolved_objectives()?;
    anyhow::ensure!(!objectives.is_empty(), "config lists no objectives");
    let descent = cfg.descent.to_config()?;
    let truth = cfg.truth();
    let clean = clean_traces(cfg, engine)?;
    let ctx = InversionContext::build(cfg)?;
    let models = objectives.iter().map(|o| ctx.model(o)).collect::<Result<Vec<_>>>()?;

    let mut deltas = cfg.table.deltas.clone();
    deltas.sort_by(f64::total_cmp);
    let seeds: Vec<u64> = (0..cfg.table.seeds).map(|k| cfg.noise.seed.wrapping_add(k)).collect();
    let cells: Vec<(usize, f64, u64)> = (0..objectives.len())
        .flat_map(|o| deltas.iter().flat_map(|&d| seeds.iter().map(move |&s| (o, d, s))).collect::<Vec<_>>())
        .collect();

    let results = cells
        .par_iter()
        .map(|&(o, delta, seed)| {
            let data = add_noise_all(&clean, &cfg.noise.with_delta(delta).with_seed(seed));
            invert(&objectives[o], &models[o], &data, &descent)
        })
        .collect::<Result<Vec<_>>>()?;

    let runs: Vec<RunRow> = cells
        .iter()
        .zip(&results)
        .map(|(&(o, delta, seed), res)| {
            let row = TableRow::new("", res.estimate, truth);
            RunRow {
                objective: objectives[o].label.clone(),
                delta,
                seed,
                r: res.estimate.r,
                theta: res.estimate.theta,
                err_r: row.err_r,
                err_theta: row.err_theta,
                iterations: res.iterates.len() - 1,
                converged: res.converged,
            }
        })
        .collect();

    let mut rows = vec![TableRow::new("Actual", truth, truth)];
    let mut summaries = Vec::new();
    for (o, objective) in objectives.iter().enumerate() {
        for &delta in &deltas {
            let group: Vec<&InversionResult> = cells
                .iter()
                .zip(&results)
                .filter(|((co, cd, _), _)| *co == o && *cd == delta)
                .map(|(_, r)| r)
                .collect();
            let per_seed: Vec<TableRow> = group.iter().map(|r| TableRow::new("", r.estimate, truth)).collect();
            let med = |f: fn(&TableRow) -> f64| median(per_seed.iter().map(f).collect());
            let signed_dtheta = median(
                group
                    .iter()
                    .map(|r| {
                        let d = wrap_angle(r.estimate.theta - truth.theta);
                        if d > std::f64::consts::PI {
                            d - std::f64::consts::TAU
                        } else {
                            d
                        }
                    })
                    .collect(),
            );
            let estimate = SourcePoint {
                r: median(group.iter().map(|r| r.estimate.r).collect()),
                theta: wrap_angle(truth.theta + signed_dtheta),
            };
            let converged = group.iter().filter(|r| r.converged).count();
            let mut label = format!("{} median delta={}", objective.label, percent(delta));
            if converged < group.len() {
                label.push_str(&format!(" ({}/{} converged)", converged, group.len()));
            }
            let mut row = TableRow::new(label, estimate, truth);
            row.err_r = med(|r| r.err_r);
            row.err_theta = med(|r| r.err_theta);
            row.err_x = med(|r| r.err_x);
            row.err_y = med(|r| r.err_y);
            summaries.push(MedianSummary {
                objective: objective.label.clone(),
                delta,
                err_r: row.err_r,
                err_theta: row.err_theta,
                err_x: row.err_x,
                err_y: row.err_y,
                err_cartesian: med(|r| r.err_x.hypot(r.err_y)),
                converged,
                runs: group.len(),
            });
            rows.push(row);
        }
    }
    write_csv(&out.join("runs.csv"), &runs)?;
    write_csv(&out.join("table.csv"), &rows)?;
    Ok(TableOutput { runs, rows, summaries })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_odd_and_even() {
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }

    #[test]
    fn percent_labels() {
        assert_eq!(percent(0.03), "3%");
        assert_eq!(percent(0.1), "10%");
        assert_eq!(percent(0.025), "2.5%");
    }
}
