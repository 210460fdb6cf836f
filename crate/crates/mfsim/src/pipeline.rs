//! Simulation plus analysis for one parameter set, and the files it writes.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use mfsim_core::analysis::{
    fit_student_density, fit_tail_auto, fit_tail_exponent, kurtosis, power_law_verdict, StudentFit, TailFit, TailSide,
    TailVerdict,
};
use mfsim_core::engine::{
    round_seed, run_round, run_round_with_sink, EngineError, EventCounts, RoundOutput, SimulationOutput,
};
use mfsim_core::RunConfig;
use rayon::prelude::*;
use serde_json::{json, Value};
use thiserror::Error;

use crate::config::render_config;
use crate::format::{
    fmt12, json_num, moments_record, tail_fit_record, write_column, write_json, EventCsv, MOMENTS_HEADER,
    TAIL_FIT_HEADER,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("no returns_dt*.csv files in {0}")]
    NoReturns(PathBuf),
}

pub(crate) fn io_err(path: &Path) -> impl FnOnce(io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io { path: path.to_path_buf(), source }
}

/// Aggregation lags analysed by default.
pub const DEFAULT_DTS: [usize; 5] = [1, 2, 4, 8, 16];

/// Lower edge of the tail region used for the power-law verdict and for the
/// automatic range picker.
pub const TAIL_FLOOR: f64 = 1.0;
/// Lower edge of the range picked for the cell-level exponent.
pub const ALPHA_R_FLOOR: f64 = 1.5;

/// Fixed scaling ranges per lag and side, used when a lag has one.
pub fn reference_range(dt: usize, side: TailSide) -> Option<(f64, f64)> {
    let pos = match dt {
        1 => (1.5, 50.1),
        2 => (1.5, 36.3),
        4 => (1.5, 27.7),
        8 => (1.7, 15.8),
        16 => (1.7, 12.1),
        _ => return None,
    };
    let neg = match dt {
        1 => (1.5, 39.8),
        2 => (1.5, 30.2),
        4 => (1.7, 22.9),
        8 => (1.7, 15.9),
        _ => (1.9, 7.6),
    };
    match side {
        TailSide::Positive => Some(pos),
        TailSide::Negative => Some(neg),
        TailSide::Absolute => None,
    }
}

/// All rounds of `config`, rounds spread over the current rayon pool and
/// pooled in round order.
pub fn run_parallel(config: &RunConfig) -> Result<SimulationOutput, EngineError> {
    config.validate()?;
    let rounds: Vec<RoundOutput> = (0..config.rounds)
        .into_par_iter()
        .map(|k| run_round(config, round_seed(config.seed, k)))
        .collect::<Result<_, _>>()?;
    Ok(SimulationOutput::from_rounds(rounds))
}

/// Statistics of the standardised returns at one lag.
#[derive(Debug, Clone)]
pub struct LagReport {
    pub dt: usize,
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    pub kurtosis: Option<f64>,
    pub student: Option<StudentFit>,
    pub positive: Option<TailFit>,
    pub negative: Option<TailFit>,
    pub errors: Vec<String>,
}

fn keep<T>(errors: &mut Vec<String>, what: &str, r: Result<T, mfsim_core::analysis::AnalysisError>) -> Option<T> {
    r.map_err(|e| errors.push(format!("{what}: {e}"))).ok()
}

pub fn analyze_lag(g: &[f64], dt: usize, mean: f64, std: f64) -> LagReport {
    let mut errors = Vec::new();
    let kurt = keep(&mut errors, "kurtosis", kurtosis(g));
    let student = keep(&mut errors, "student", fit_student_density(g));
    let fit = |side| match reference_range(dt, side) {
        Some(range) => fit_tail_exponent(g, range, side),
        None => fit_tail_auto(g, side, ALPHA_R_FLOOR),
    };
    let positive = keep(&mut errors, "positive tail", fit(TailSide::Positive));
    let negative = keep(&mut errors, "negative tail", fit(TailSide::Negative));
    LagReport { dt, n: g.len(), mean, std, kurtosis: kurt, student, positive, negative, errors }
}

/// Everything computed for one parameter set.
#[derive(Debug, Clone)]
pub struct CellResult {
    pub config: RunConfig,
    pub counts: EventCounts,
    pub trades: usize,
    pub lags: Vec<LagReport>,
    /// Power-law test on `|g|` at lag 1.
    pub verdict: Option<TailVerdict>,
    /// Exponent of `|g|` at lag 1 over an automatically picked range.
    pub alpha_r: Option<TailFit>,
    /// Standardised lag-1 returns.
    pub g1: Vec<f64>,
    pub errors: Vec<String>,
}

impl CellResult {
    pub fn lag(&self, dt: usize) -> Option<&LagReport> {
        self.lags.iter().find(|l| l.dt == dt)
    }
}

/// Simulate `config` and analyse it at `dts`. Writes nothing.
pub fn run_cell(config: &RunConfig, dts: &[usize]) -> Result<(CellResult, Vec<Vec<f64>>), PipelineError> {
    let out = run_parallel(config)?;
    let mut lags = Vec::new();
    let mut columns = Vec::new();
    let mut errors = Vec::new();
    let mut g1 = Vec::new();
    for &dt in dts {
        match out.series.aggregate_returns(dt) {
            Ok(a) => {
                lags.push(analyze_lag(&a.standardized, dt, a.mean, a.std));
                if dt == 1 {
                    g1 = a.standardized.clone();
                }
                columns.push(a.standardized);
            }
            Err(e) => {
                errors.push(format!("dt {dt}: {e}"));
                columns.push(Vec::new());
            }
        }
    }
    if g1.is_empty() && !dts.contains(&1) {
        if let Ok(a) = out.series.aggregate_returns(1) {
            g1 = a.standardized;
        }
    }
    let verdict = match power_law_verdict(&g1, TailSide::Absolute, TAIL_FLOOR) {
        Ok(v) => Some(v),
        Err(e) => {
            errors.push(format!("verdict: {e}"));
            None
        }
    };
    let alpha_r = match fit_tail_auto(&g1, TailSide::Absolute, ALPHA_R_FLOOR) {
        Ok(f) => Some(f),
        Err(e) => {
            errors.push(format!("alpha_r: {e}"));
            None
        }
    };
    let cell = CellResult {
        config: config.clone(),
        counts: out.total_counts(),
        trades: out.series.trade_count(),
        lags,
        verdict,
        alpha_r,
        g1,
        errors,
    };
    Ok((cell, columns))
}

fn tail_json(f: &Option<TailFit>) -> Value {
    match f {
        Some(f) => json!({
            "alpha": json_num(f.exponent),
            "stderr": json_num(f.stderr),
            "lo": json_num(f.lo),
            "hi": json_num(f.hi),
            "n_in_range": f.n_in_range,
        }),
        None => Value::Null,
    }
}

fn student_json(s: &Option<StudentFit>) -> Value {
    match s {
        Some(s) => json!({
            "alpha": json_num(s.alpha),
            "l": json_num(s.l),
            "residual": json_num(s.residual),
            "bins": s.bins,
            "converged": s.converged,
        }),
        None => Value::Null,
    }
}

pub fn lag_json(l: &LagReport) -> Value {
    json!({
        "dt": l.dt,
        "n": l.n,
        "mean": json_num(l.mean),
        "std": json_num(l.std),
        "kurtosis": l.kurtosis.map(json_num),
        "student": student_json(&l.student),
        "positive": tail_json(&l.positive),
        "negative": tail_json(&l.negative),
        "errors": l.errors,
    })
}

pub fn cell_json(c: &CellResult) -> Value {
    let cfg = &c.config;
    let verdict = c.verdict.as_ref().map(|v| {
        json!({
            "power_law": v.power_law,
            "steepening": v.steepening,
            "segment_slopes": v.segment_slopes.iter().map(|s| json_num(*s)).collect::<Vec<_>>(),
            "pareto_rss": json_num(v.pareto_rss),
            "exponential_rss": json_num(v.exponential_rss),
        })
    });
    json!({
        "alpha_x": json_num(cfg.alpha_x),
        "hurst": json_num(cfg.hurst),
        "left": cfg.left.name(),
        "right": cfg.right.name(),
        "rounds": cfg.rounds,
        "seed": cfg.seed,
        "orders": c.counts.orders,
        "trades": c.counts.trades,
        "rested": c.counts.rested,
        "rejected": c.counts.rejected,
        "cancelled": c.counts.cancelled,
        "trade_fraction": json_num(c.counts.trade_fraction()),
        "lags": c.lags.iter().map(lag_json).collect::<Vec<_>>(),
        "verdict": verdict,
        "alpha_r": tail_json(&c.alpha_r),
        "errors": c.errors,
    })
}

/// Write a cell's config, return columns, summary and fit records into `dir`.
pub fn write_cell(dir: &Path, cell: &CellResult, dts: &[usize], columns: &[Vec<f64>]) -> Result<(), PipelineError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let p = dir.join("config.ini");
    fs::write(&p, render_config(&cell.config)).map_err(io_err(&p))?;
    for (dt, col) in dts.iter().zip(columns) {
        if col.is_empty() {
            continue;
        }
        let p = dir.join(format!("returns_dt{dt}.csv"));
        write_column(&p, col).map_err(io_err(&p))?;
    }
    let p = dir.join("summary.json");
    write_json(&p, &cell_json(cell)).map_err(io_err(&p))?;
    write_fit_records(dir, &cell.lags)
}

/// `tail_fits.csv` and `moments.csv`.
pub fn write_fit_records(dir: &Path, lags: &[LagReport]) -> Result<(), PipelineError> {
    let mut tails = vec![TAIL_FIT_HEADER.to_owned()];
    let mut moments = vec![MOMENTS_HEADER.to_owned()];
    for l in lags {
        for f in [&l.positive, &l.negative].into_iter().flatten() {
            tails.push(tail_fit_record(l.dt, f));
        }
        moments.push(moments_record(l.dt, l.kurtosis, l.student.as_ref()));
    }
    for (name, lines) in [("tail_fits.csv", tails), ("moments.csv", moments)] {
        let p = dir.join(name);
        fs::write(&p, lines.join("\n") + "\n").map_err(io_err(&p))?;
    }
    Ok(())
}

/// Event log of round `round` of `config` as CSV.
pub fn write_event_log(path: &Path, config: &RunConfig, round: usize) -> Result<(), PipelineError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut sink = EventCsv::new(BufWriter::new(file)).map_err(io_err(path))?;
    run_round_with_sink(config, round_seed(config.seed, round), &mut sink)?;
    sink.finish().map_err(io_err(path))?.flush().map_err(io_err(path))
}

/// Re-analyse stored `returns_dt<Δt>.csv` files in `dir` and rewrite the
/// fit records. Returns the lag reports in ascending `Δt`.
pub fn analyze_dir(dir: &Path) -> Result<Vec<LagReport>, PipelineError> {
    let mut found = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let entry = entry.map_err(io_err(dir))?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if let Some(dt) = name.strip_prefix("returns_dt").and_then(|s| s.strip_suffix(".csv")) {
            if let Ok(dt) = dt.parse::<usize>() {
                found.push((dt, entry.path()));
            }
        }
    }
    if found.is_empty() {
        return Err(PipelineError::NoReturns(dir.to_path_buf()));
    }
    found.sort();
    let mut lags = Vec::new();
    for (dt, path) in found {
        let g = crate::format::read_column(&path).map_err(io_err(&path))?;
        lags.push(analyze_lag(&g, dt, f64::NAN, f64::NAN));
    }
    write_fit_records(dir, &lags)?;
    Ok(lags)
}

/// Human-readable one-line-per-lag digest.
pub fn describe_lags(lags: &[LagReport]) -> String {
    let mut s = String::from("dt        n   kurtosis  student(a, L)       alpha+          alpha-\n");
    let f = |v: Option<f64>| v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "-".into());
    for l in lags {
        let tail = |t: &Option<TailFit>| {
            t.as_ref().map(|t| format!("{:.3}±{:.3}", t.exponent, t.stderr)).unwrap_or_else(|| "-".into())
        };
        s.push_str(&format!(
            "{:<4}{:>8}  {:>9}  {:>7} {:>7}  {:>14}  {:>14}\n",
            l.dt,
            l.n,
            f(l.kurtosis),
            f(l.student.map(|s| s.alpha)),
            f(l.student.map(|s| s.l)),
            tail(&l.positive),
            tail(&l.negative)
        ));
    }
    s
}

pub(crate) fn dir_label(x: f64) -> String {
    fmt12(x)
}
