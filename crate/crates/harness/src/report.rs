//! Aggregate tables and plot data from a directory of finished runs.
//!
//! Files written at the top of the directory:
//!
//! * `fidelity_table.csv`: per cell, best and median final `F_trc` with the
//!   bootstrap error of the median, plus `F_sub` for comparison.
//! * `gain_table.csv`: median and best-run gains over the VQE cell with the
//!   same model and depth.
//! * `delta_f_table.csv`: `F_sub - F_trc` statistics; `upper_bound_80` is the
//!   80th percentile of the bootstrap medians, the number to quote when the
//!   median is compatible with zero.
//! * `cost_series.csv`: cost and normalized cost against iterations per
//!   parameter, one row per run and iteration.
//! * `fidelity_bands.csv`: best, 25th, 50th and 75th percentile of the
//!   infidelity `1 - F_trc` across runs at each recorded iteration.
//! * `ci_grids.csv`: every run's cumulative-infidelity grid, when recorded.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use subspace_vqe::metrics::{gain_factors, median_estimate, percentile, DEFAULT_RESAMPLES};

use crate::error::{HarnessError, Result};
use crate::io;
use crate::run::{CiRow, RunSummary, TraceRow};

/// Seed of every bootstrap in the report.
pub const REPORT_SEED: u64 = 0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FidelityRow {
    pub model: String,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "N_l")]
    pub layers: usize,
    pub method: String,
    pub runs: usize,
    pub failed: usize,
    pub max_f: f64,
    pub med_f: f64,
    pub med_f_err: f64,
    pub max_f_sub: f64,
    pub med_f_sub: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainRow {
    pub model: String,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "N_l")]
    pub layers: usize,
    pub method: String,
    pub g_med: f64,
    pub g_med_err: f64,
    pub g_min: f64,
    pub infinite: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaRow {
    pub model: String,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "N_l")]
    pub layers: usize,
    pub method: String,
    pub max_delta_f: f64,
    pub med_delta_f: f64,
    pub med_delta_f_err: f64,
    pub upper_bound_80: f64,
    pub compatible_with_zero: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostPoint {
    pub model: String,
    pub method: String,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "N_l")]
    pub layers: usize,
    pub run: usize,
    pub iteration: usize,
    pub iterations_per_parameter: f64,
    pub cost: f64,
    pub energy: f64,
    pub normalized_cost: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandRow {
    pub model: String,
    pub method: String,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "N_l")]
    pub layers: usize,
    pub iteration: usize,
    pub runs: usize,
    pub best: f64,
    pub p25: f64,
    pub p50: f64,
    pub p75: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CiGridRow {
    pub model: String,
    pub method: String,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "N_l")]
    pub layers: usize,
    pub run: usize,
    pub iteration: usize,
    pub mu: f64,
    pub log10_ci: f64,
    pub clamped: bool,
}

#[derive(Debug, Clone)]
pub struct Report {
    pub summaries: Vec<RunSummary>,
    pub fidelity: Vec<FidelityRow>,
    pub gains: Vec<GainRow>,
    pub delta_f: Vec<DeltaRow>,
}

impl Report {
    pub fn fidelity_row(&self, model: &str, method: &str, k: usize, layers: usize) -> Option<&FidelityRow> {
        self.fidelity
            .iter()
            .find(|r| r.model == model && r.method == method && r.k == k && r.layers == layers)
    }

    pub fn gain_row(&self, model: &str, method: &str, k: usize, layers: usize) -> Option<&GainRow> {
        self.gains
            .iter()
            .find(|r| r.model == model && r.method == method && r.k == k && r.layers == layers)
    }
}

/// Every `summary.json` below `dir`, with its run directory, in path order.
pub fn load_summaries(dir: &Path) -> Result<Vec<(PathBuf, RunSummary)>> {
    let mut found = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        let entries = fs::read_dir(&d).map_err(|e| HarnessError::io(&d, e))?;
        for entry in entries {
            let path = entry.map_err(|e| HarnessError::io(&d, e))?.path();
            if path.is_dir() {
                stack.push(path);
            } else if path.file_name().is_some_and(|n| n == "summary.json") && d != dir {
                found.push((d.clone(), io::read_json(&path)?));
            }
        }
    }
    found.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(found)
}

type CellKey = (String, u8, String, usize, usize);

fn method_rank(method: &str) -> u8 {
    match method {
        "vqe" => 0,
        "hard_ortho" => 1,
        "soft_ortho" => 2,
        _ => 3,
    }
}

fn cell_key(s: &RunSummary) -> CellKey {
    (s.model.clone(), method_rank(&s.method), s.method.clone(), s.k, s.layers)
}

fn max(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NAN, f64::max)
}

fn median_with_error(v: &[f64]) -> Result<(f64, f64, f64, bool)> {
    match v.len() {
        0 => Ok((f64::NAN, f64::NAN, f64::NAN, false)),
        1 => Ok((v[0], f64::NAN, f64::NAN, false)),
        _ => {
            let m = median_estimate(v, DEFAULT_RESAMPLES, REPORT_SEED)?;
            Ok((m.median, m.error, m.upper_bound_80, m.compatible_with_zero))
        }
    }
}

/// Aggregates the runs below `dir` and writes the tables into it.
pub fn generate(dir: &Path) -> Result<Report> {
    let loaded = load_summaries(dir)?;
    if loaded.is_empty() {
        return Err(HarnessError::NoData(format!("no run summaries below {}", dir.display())));
    }
    let mut cells: BTreeMap<CellKey, Vec<&(PathBuf, RunSummary)>> = BTreeMap::new();
    for item in &loaded {
        cells.entry(cell_key(&item.1)).or_default().push(item);
    }

    let mut fidelity = Vec::new();
    let mut delta_f = Vec::new();
    let mut cost_series = Vec::new();
    let mut bands = Vec::new();
    let mut ci_grids = Vec::new();
    for ((model, _, method, k, layers), runs) in &cells {
        let ok: Vec<&RunSummary> = runs.iter().map(|r| &r.1).filter(|s| s.is_ok()).collect();
        let f_trc: Vec<f64> = ok.iter().filter_map(|s| s.f_trc).collect();
        let f_sub: Vec<f64> = ok.iter().filter_map(|s| s.f_sub).collect();
        let deltas: Vec<f64> = ok.iter().filter_map(|s| s.delta_f).collect();
        let (med_f, med_f_err, _, _) = median_with_error(&f_trc)?;
        let (med_f_sub, _, _, _) = median_with_error(&f_sub)?;
        fidelity.push(FidelityRow {
            model: model.clone(),
            k: *k,
            layers: *layers,
            method: method.clone(),
            runs: runs.len(),
            failed: runs.len() - ok.len(),
            max_f: max(&f_trc),
            med_f,
            med_f_err,
            max_f_sub: max(&f_sub),
            med_f_sub,
        });
        let (med, err, upper, zero) = median_with_error(&deltas)?;
        delta_f.push(DeltaRow {
            model: model.clone(),
            k: *k,
            layers: *layers,
            method: method.clone(),
            max_delta_f: max(&deltas),
            med_delta_f: med,
            med_delta_f_err: err,
            upper_bound_80: upper,
            compatible_with_zero: zero,
        });

        let mut by_iteration: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
        for (run_dir, s) in runs.iter().map(|r| (&r.0, &r.1)) {
            let trace: Vec<TraceRow> = io::read_csv(&run_dir.join("trace.csv"))?;
            for row in &trace {
                cost_series.push(CostPoint {
                    model: model.clone(),
                    method: method.clone(),
                    k: *k,
                    layers: *layers,
                    run: s.run_index,
                    iteration: row.iteration,
                    iterations_per_parameter: row.iteration as f64 / s.num_parameters as f64,
                    cost: row.cost,
                    energy: row.energy,
                    normalized_cost: row.normalized_cost,
                });
                if let Some(f) = row.f_trc {
                    by_iteration.entry(row.iteration).or_default().push(1.0 - f);
                }
            }
            let ci_path = run_dir.join("ci_grid.csv");
            if ci_path.exists() {
                let rows: Vec<CiRow> = io::read_csv(&ci_path)?;
                ci_grids.extend(rows.into_iter().map(|c| CiGridRow {
                    model: model.clone(),
                    method: method.clone(),
                    k: *k,
                    layers: *layers,
                    run: s.run_index,
                    iteration: c.iteration,
                    mu: c.mu,
                    log10_ci: c.log10_ci,
                    clamped: c.clamped,
                }));
            }
        }
        for (iteration, infid) in by_iteration {
            bands.push(BandRow {
                model: model.clone(),
                method: method.clone(),
                k: *k,
                layers: *layers,
                iteration,
                runs: infid.len(),
                best: infid.iter().copied().fold(f64::INFINITY, f64::min),
                p25: percentile(&infid, 25.0),
                p50: percentile(&infid, 50.0),
                p75: percentile(&infid, 75.0),
            });
        }
    }

    let mut gains = Vec::new();
    for ((model, _, method, k, layers), runs) in &cells {
        let baseline = cells
            .iter()
            .find(|((m, _, meth, _, l), _)| m == model && meth == "vqe" && l == layers);
        let Some((_, vqe_runs)) = baseline else {
            continue;
        };
        let fids = |rs: &[&(PathBuf, RunSummary)]| -> Vec<f64> {
            rs.iter().filter(|r| r.1.is_ok()).filter_map(|r| r.1.f_trc).collect()
        };
        let (v, a) = (fids(vqe_runs), fids(runs));
        if v.is_empty() || a.is_empty() {
            continue;
        }
        let g = gain_factors(&v, &a, DEFAULT_RESAMPLES, REPORT_SEED)?;
        gains.push(GainRow {
            model: model.clone(),
            k: *k,
            layers: *layers,
            method: method.clone(),
            g_med: g.g_med,
            g_med_err: g.g_med_err,
            g_min: g.g_min,
            infinite: g.infinite,
        });
    }

    io::write_csv(&dir.join("fidelity_table.csv"), &fidelity)?;
    io::write_csv(&dir.join("gain_table.csv"), &gains)?;
    io::write_csv(&dir.join("delta_f_table.csv"), &delta_f)?;
    io::write_csv(&dir.join("cost_series.csv"), &cost_series)?;
    io::write_csv(&dir.join("fidelity_bands.csv"), &bands)?;
    if !ci_grids.is_empty() {
        io::write_csv(&dir.join("ci_grids.csv"), &ci_grids)?;
    }
    Ok(Report {
        summaries: loaded.into_iter().map(|(_, s)| s).collect(),
        fidelity,
        gains,
        delta_f,
    })
}
