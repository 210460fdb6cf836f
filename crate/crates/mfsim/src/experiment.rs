//! Experiment presets: which parameter sets to run and how to summarise them.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use mfsim_core::analysis::{ks_distance, regress_alpha_surface, SurfacePoint, SurfaceRegression};
use mfsim_core::{FamilyKind, RunConfig};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::format::{fmt12, json_num, write_json};
use crate::pipeline::{cell_json, dir_label, io_err, run_cell, write_cell, CellResult, PipelineError, DEFAULT_DTS};

/// Rounds per cell unless `--full` is given.
pub const DESK_ROUNDS: usize = 4;
/// Rounds per cell with `--full`.
pub const FULL_ROUNDS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// The standard model at the reference parameters.
    Standard,
    /// Both halves of the relative-price density without power-law tails.
    Case1,
    /// Power-law tail on the right half only.
    Case2,
    /// Power-law tail on the left half only.
    Case3,
    /// The standard model, reported as a per-lag table.
    Table1,
    /// The `(α_x, H_s)` grid and the tail-exponent surface.
    Grid,
}

impl Preset {
    pub const ALL: [Preset; 6] =
        [Preset::Standard, Preset::Case1, Preset::Case2, Preset::Case3, Preset::Table1, Preset::Grid];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Standard => "standard",
            Preset::Case1 => "case1",
            Preset::Case2 => "case2",
            Preset::Case3 => "case3",
            Preset::Table1 => "table1",
            Preset::Grid => "grid",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.name() == s)
    }

    pub fn default_alphas(self) -> Vec<f64> {
        match self {
            Preset::Standard | Preset::Table1 => vec![1.3],
            Preset::Case1 | Preset::Case2 | Preset::Case3 => (0..5).map(|k| (11 + 2 * k) as f64 / 10.0).collect(),
            Preset::Grid => (9..=19).map(|k| k as f64 / 10.0).collect(),
        }
    }

    pub fn default_hursts(self) -> Vec<f64> {
        match self {
            Preset::Grid => (1..=9).map(|k| k as f64 / 10.0).collect(),
            _ => vec![0.8],
        }
    }

    /// `(f_L, f_R)` pairings.
    pub fn pairings(self, base: &RunConfig) -> Vec<(FamilyKind, FamilyKind)> {
        use FamilyKind::*;
        match self {
            Preset::Case1 => vec![(Laplace, Laplace), (Laplace, Gaussian), (Gaussian, Laplace), (Gaussian, Gaussian)],
            Preset::Case2 => vec![(Laplace, StudentQG), (Gaussian, StudentQG)],
            Preset::Case3 => vec![(StudentQG, Laplace), (StudentQG, Gaussian)],
            Preset::Standard | Preset::Table1 | Preset::Grid => vec![(base.left, base.right)],
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOptions {
    /// Everything not varied by the preset. Presets start from the default
    /// model with [`DESK_ROUNDS`] rounds.
    pub base: RunConfig,
    /// Replaces the preset's `α_x` list.
    pub alphas: Option<Vec<f64>>,
    /// Replaces the preset's `H_s` list.
    pub hursts: Option<Vec<f64>>,
    pub dts: Vec<usize>,
    /// Worker threads; 0 lets the pool decide.
    pub jobs: usize,
    pub out: PathBuf,
}

impl ExperimentOptions {
    pub fn new(out: impl Into<PathBuf>) -> Self {
        Self {
            base: RunConfig { rounds: DESK_ROUNDS, ..RunConfig::default() },
            alphas: None,
            hursts: None,
            dts: DEFAULT_DTS.to_vec(),
            jobs: 0,
            out: out.into(),
        }
    }
}

/// One parameter set of an experiment.
#[derive(Debug, Clone)]
pub struct CellSpec {
    pub name: String,
    pub config: RunConfig,
}

pub fn cell_name(cfg: &RunConfig) -> String {
    format!("ax{}_hs{}_{}_{}", dir_label(cfg.alpha_x), dir_label(cfg.hurst), cfg.left.tag(), cfg.right.tag())
}

/// The preset's cells. Every cell shares the master seed, so cells differ
/// only through their parameters.
pub fn cell_specs(preset: Preset, opts: &ExperimentOptions) -> Vec<CellSpec> {
    let alphas = opts.alphas.clone().unwrap_or_else(|| match preset {
        Preset::Standard | Preset::Table1 => vec![opts.base.alpha_x],
        _ => preset.default_alphas(),
    });
    let hursts = opts.hursts.clone().unwrap_or_else(|| match preset {
        Preset::Grid => preset.default_hursts(),
        _ => vec![opts.base.hurst],
    });
    let mut out = Vec::new();
    for (left, right) in preset.pairings(&opts.base) {
        for &hurst in &hursts {
            for &alpha_x in &alphas {
                let config = RunConfig { left, right, alpha_x, hurst, ..opts.base.clone() };
                out.push(CellSpec { name: cell_name(&config), config });
            }
        }
    }
    out
}

#[derive(Debug, Clone)]
pub struct CellOutcome {
    pub name: String,
    pub result: Result<CellResult, String>,
}

/// Pairwise KS distances of `|g|` within one group of cells.
#[derive(Debug, Clone)]
pub struct Collapse {
    pub group: String,
    pub pairs: Vec<(String, String, f64)>,
}

impl Collapse {
    pub fn max_ks(&self) -> f64 {
        self.pairs.iter().map(|p| p.2).fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub preset: Preset,
    pub cells: Vec<CellOutcome>,
    /// Case 1 and 2: cells of one pairing across `α_x`.
    /// Case 3: the two `f_R` choices at each `α_x`.
    pub collapse: Vec<Collapse>,
    pub surface: Option<Result<SurfaceRegression, String>>,
}

impl ExperimentOutcome {
    pub fn failed(&self) -> Vec<(&str, &str)> {
        self.cells
            .iter()
            .filter_map(|c| c.result.as_ref().err().map(|e| (c.name.as_str(), e.as_str())))
            .collect()
    }

    pub fn ok_cells(&self) -> impl Iterator<Item = &CellResult> {
        self.cells.iter().filter_map(|c| c.result.as_ref().ok())
    }
}

fn abs(g: &[f64]) -> Vec<f64> {
    g.iter().map(|v| v.abs()).collect()
}

fn pairwise(group: String, members: &[&CellResult]) -> Collapse {
    let abs: Vec<Vec<f64>> = members.iter().map(|c| abs(&c.g1)).collect();
    let mut pairs = Vec::new();
    for i in 0..members.len() {
        for j in i + 1..members.len() {
            if let Ok(d) = ks_distance(&abs[i], &abs[j]) {
                pairs.push((cell_name(&members[i].config), cell_name(&members[j].config), d));
            }
        }
    }
    Collapse { group, pairs }
}

fn collapse_groups(preset: Preset, cells: &[&CellResult]) -> Vec<Collapse> {
    let mut groups: Vec<(String, Vec<&CellResult>)> = Vec::new();
    for &c in cells {
        let key = match preset {
            Preset::Case1 | Preset::Case2 => format!("{}_{}", c.config.left.tag(), c.config.right.tag()),
            Preset::Case3 => format!("ax{}", fmt12(c.config.alpha_x)),
            _ => return Vec::new(),
        };
        match groups.iter_mut().find(|g| g.0 == key) {
            Some(g) => g.1.push(c),
            None => groups.push((key, vec![c])),
        }
    }
    groups.into_iter().map(|(k, m)| pairwise(k, &m)).collect()
}

fn build_pool(jobs: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(jobs).build().expect("thread pool")
}

/// Run every cell of `preset`, write per-cell directories and a top-level
/// `summary.json` under `opts.out`. A failing cell is recorded and does not
/// stop the others; only an unwritable output directory is an error.
pub fn run_experiment(preset: Preset, opts: &ExperimentOptions) -> Result<ExperimentOutcome, PipelineError> {
    fs::create_dir_all(&opts.out).map_err(io_err(&opts.out))?;
    let specs = cell_specs(preset, opts);
    let dts = &opts.dts;
    let pool = build_pool(opts.jobs);
    let cells: Vec<CellOutcome> = pool.install(|| {
        specs
            .par_iter()
            .map(|spec| {
                let dir = opts.out.join(&spec.name);
                let result = run_cell(&spec.config, dts)
                    .and_then(|(cell, cols)| write_cell(&dir, &cell, dts, &cols).map(|_| cell))
                    .map_err(|e| e.to_string());
                CellOutcome { name: spec.name.clone(), result }
            })
            .collect()
    });

    let ok: Vec<&CellResult> = cells.iter().filter_map(|c| c.result.as_ref().ok()).collect();
    let collapse = collapse_groups(preset, &ok);
    let surface = (preset == Preset::Grid).then(|| {
        let pts: Vec<SurfacePoint> = ok
            .iter()
            .filter_map(|c| {
                c.alpha_r.map(|f| SurfacePoint { alpha_x: c.config.alpha_x, hurst: c.config.hurst, alpha_r: f.exponent })
            })
            .collect();
        regress_alpha_surface(&pts).map_err(|e| e.to_string())
    });
    let outcome = ExperimentOutcome { preset, cells, collapse, surface };
    write_summary(&opts.out, opts, &outcome)?;
    if preset == Preset::Table1 {
        if let Some(cell) = outcome.ok_cells().next() {
            write_table(&opts.out.join("table1.csv"), cell)?;
        }
    }
    Ok(outcome)
}

fn write_summary(dir: &Path, opts: &ExperimentOptions, o: &ExperimentOutcome) -> Result<(), PipelineError> {
    let cells: Vec<Value> = o
        .cells
        .iter()
        .map(|c| match &c.result {
            Ok(r) => json!({"name": c.name, "status": "ok", "result": cell_json(r)}),
            Err(e) => json!({"name": c.name, "status": "failed", "error": e}),
        })
        .collect();
    let collapse: Vec<Value> = o
        .collapse
        .iter()
        .map(|c| {
            json!({
                "group": c.group,
                "max_ks": json_num(c.max_ks()),
                "pairs": c.pairs.iter().map(|(a, b, d)| json!([a, b, json_num(*d)])).collect::<Vec<_>>(),
            })
        })
        .collect();
    let surface = match &o.surface {
        Some(Ok(s)) => json!({
            "coefficients": s.coefficients.iter().map(|c| json_num(*c)).collect::<Vec<_>>(),
            "r_squared": json_num(s.r_squared),
        }),
        Some(Err(e)) => json!({"error": e}),
        None => Value::Null,
    };
    let failed: Vec<&str> = o.failed().iter().map(|f| f.0).collect();
    let v = json!({
        "preset": o.preset.name(),
        "seed": opts.base.seed,
        "rounds": opts.base.rounds,
        "steps_per_round": opts.base.steps_per_round,
        "dts": opts.dts,
        "cells": cells,
        "collapse": collapse,
        "surface": surface,
        "failed": failed,
    });
    let p = dir.join("summary.json");
    write_json(&p, &v).map_err(io_err(&p))
}

fn write_table(path: &Path, cell: &CellResult) -> Result<(), PipelineError> {
    let mut s = String::from("dt,kurtosis,student_l,student_alpha,pos_lo,pos_hi,alpha_pos,stderr_pos,neg_lo,neg_hi,alpha_neg,stderr_neg\n");
    let o = |v: Option<f64>| v.map(fmt12).unwrap_or_default();
    for l in &cell.lags {
        let p = l.positive.as_ref();
        let n = l.negative.as_ref();
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            l.dt,
            o(l.kurtosis),
            o(l.student.map(|s| s.l)),
            o(l.student.map(|s| s.alpha)),
            o(p.map(|f| f.lo)),
            o(p.map(|f| f.hi)),
            o(p.map(|f| f.exponent)),
            o(p.map(|f| f.stderr)),
            o(n.map(|f| f.lo)),
            o(n.map(|f| f.hi)),
            o(n.map(|f| f.exponent)),
            o(n.map(|f| f.stderr)),
        ));
    }
    fs::write(path, s).map_err(io_err(path))
}
