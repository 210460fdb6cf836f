//! Plot-ready `x y` files computed from stored results only.

use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use mfsim_core::analysis::{ccdf, log_binned_density, student_log_density, TailSide};
use serde_json::Value;
use thiserror::Error;

use crate::format::{read_column, write_xy};

#[derive(Debug, Error)]
pub enum PlotError {
    #[error("no results at {0}: run an experiment first")]
    MissingResults(PathBuf),
    #[error("{figure} needs results from the {want} preset, found {found}")]
    WrongPreset { figure: Figure, want: &'static str, found: String },
    #[error("malformed results: {0}")]
    Malformed(String),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> PlotError + '_ {
    move |source| PlotError::Io { path: path.to_path_buf(), source }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Figure {
    /// `|g|` CCDFs of the Case 1 cells.
    Fig1,
    /// `|g|` CCDFs of the Case 2 cells.
    Fig2,
    /// `|g|` CCDFs of the Case 3 cells.
    Fig3,
    /// Lag-1 density with the fitted Student curve.
    Fig4,
    /// Densities and both tail CCDFs at every stored lag.
    Fig5,
}

impl Figure {
    pub const ALL: [Figure; 5] = [Figure::Fig1, Figure::Fig2, Figure::Fig3, Figure::Fig4, Figure::Fig5];

    pub fn name(self) -> &'static str {
        match self {
            Figure::Fig1 => "fig1",
            Figure::Fig2 => "fig2",
            Figure::Fig3 => "fig3",
            Figure::Fig4 => "fig4",
            Figure::Fig5 => "fig5",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.name() == s)
    }

    fn presets(self) -> &'static [&'static str] {
        match self {
            Figure::Fig1 => &["case1"],
            Figure::Fig2 => &["case2"],
            Figure::Fig3 => &["case3"],
            Figure::Fig4 | Figure::Fig5 => &["standard", "table1"],
        }
    }
}

impl fmt::Display for Figure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// CCDF points kept per decade in plot files.
const CCDF_PER_DECADE: f64 = 50.0;
const DENSITY_FROM: f64 = 0.01;

fn thin_ccdf(values: &[f64]) -> Vec<(f64, f64)> {
    let pts = match ccdf(values) {
        Ok(p) => p,
        Err(_) => return Vec::new(),
    };
    let mut out: Vec<(f64, f64)> = Vec::new();
    let mut last = f64::NEG_INFINITY;
    for (i, &(x, p)) in pts.iter().enumerate() {
        if x <= 0.0 {
            continue;
        }
        let lx = x.log10();
        if lx >= last + 1.0 / CCDF_PER_DECADE || i + 1 == pts.len() {
            out.push((x, p));
            last = lx;
        }
    }
    out
}

/// Log-binned density on both sides of zero, ascending in `g`.
fn signed_density(g: &[f64]) -> Vec<(f64, f64)> {
    let n = g.len() as f64;
    let mut rows = Vec::new();
    for (side, sign) in [(TailSide::Negative, -1.0), (TailSide::Positive, 1.0)] {
        let m = side.magnitudes(g);
        // the helper folds onto one side and halves; undo that for one side
        let scale = 2.0 * m.len() as f64 / n;
        if let Ok(pts) = log_binned_density(&m, DENSITY_FROM, 1) {
            rows.extend(pts.into_iter().map(|(x, f)| (sign * x, f * scale)));
        }
    }
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    rows
}

struct Results {
    preset: String,
    cells: Vec<Value>,
    dts: Vec<usize>,
}

fn load(results: &Path) -> Result<Results, PlotError> {
    let p = results.join("summary.json");
    if !p.is_file() {
        return Err(PlotError::MissingResults(results.to_path_buf()));
    }
    let text = fs::read_to_string(&p).map_err(io_err(&p))?;
    let v: Value = serde_json::from_str(&text).map_err(|e| PlotError::Malformed(e.to_string()))?;
    let preset = v["preset"].as_str().ok_or_else(|| PlotError::Malformed("missing preset".into()))?.to_owned();
    let cells = v["cells"]
        .as_array()
        .ok_or_else(|| PlotError::Malformed("missing cells".into()))?
        .iter()
        .filter(|c| c["status"] == "ok")
        .cloned()
        .collect();
    let dts = v["dts"].as_array().map(|a| a.iter().filter_map(|d| d.as_u64()).map(|d| d as usize).collect());
    Ok(Results { preset, cells, dts: dts.unwrap_or_default() })
}

fn cell_name(c: &Value) -> Result<&str, PlotError> {
    c["name"].as_str().ok_or_else(|| PlotError::Malformed("cell without name".into()))
}

fn returns(results: &Path, cell: &str, dt: usize) -> Result<Vec<f64>, PlotError> {
    let p = results.join(cell).join(format!("returns_dt{dt}.csv"));
    if !p.is_file() {
        return Err(PlotError::MissingResults(p));
    }
    read_column(&p).map_err(io_err(&p))
}

/// Write the files for `figure` from the results in `results` into `out`.
/// Returns the files written, in a stable order.
pub fn emit_plot_data(results: &Path, figure: Figure, out: &Path) -> Result<Vec<PathBuf>, PlotError> {
    let r = load(results)?;
    if !figure.presets().contains(&r.preset.as_str()) {
        return Err(PlotError::WrongPreset { figure, want: figure.presets()[0], found: r.preset });
    }
    fs::create_dir_all(out).map_err(io_err(out))?;
    let mut written = Vec::new();
    let mut emit = |name: String, rows: Vec<(f64, f64)>| -> Result<(), PlotError> {
        let p = out.join(name);
        write_xy(&p, &rows).map_err(io_err(&p))?;
        written.push(p);
        Ok(())
    };
    match figure {
        Figure::Fig1 | Figure::Fig2 | Figure::Fig3 => {
            for c in &r.cells {
                let name = cell_name(c)?;
                let g = returns(results, name, 1)?;
                // ax<α>_hs<H>_<fL>_<fR>  ->  <fL>_<fR>_ax<α>
                let parts: Vec<&str> = name.split('_').collect();
                let file = match parts.as_slice() {
                    [ax, _, l, rr] => format!("{l}_{rr}_{ax}.dat"),
                    _ => format!("{name}.dat"),
                };
                emit(file, thin_ccdf(&TailSide::Absolute.magnitudes(&g)))?;
            }
        }
        Figure::Fig4 => {
            let c = r.cells.first().ok_or_else(|| PlotError::MissingResults(results.to_path_buf()))?;
            let g = returns(results, cell_name(c)?, 1)?;
            let lag = c["result"]["lags"]
                .as_array()
                .and_then(|ls| ls.iter().find(|l| l["dt"] == 1))
                .ok_or_else(|| PlotError::Malformed("no lag-1 summary".into()))?;
            let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
            emit("density.dat".into(), signed_density(&g))?;
            if let (Some(a), Some(l)) = (lag["student"]["alpha"].as_f64(), lag["student"]["l"].as_f64()) {
                let k = 400;
                let curve = (0..=k)
                    .map(|i| {
                        let x = -gmax + 2.0 * gmax * i as f64 / k as f64;
                        (x, student_log_density(x, a, l).exp())
                    })
                    .collect();
                emit("student_fit.dat".into(), curve)?;
            }
        }
        Figure::Fig5 => {
            let c = r.cells.first().ok_or_else(|| PlotError::MissingResults(results.to_path_buf()))?;
            let name = cell_name(c)?;
            for &dt in &r.dts {
                let g = returns(results, name, dt)?;
                emit(format!("density_dt{dt}.dat"), signed_density(&g))?;
                emit(format!("ccdf_pos_dt{dt}.dat"), thin_ccdf(&TailSide::Positive.magnitudes(&g)))?;
                emit(format!("ccdf_neg_dt{dt}.dat"), thin_ccdf(&TailSide::Negative.magnitudes(&g)))?;
            }
        }
    }
    Ok(written)
}
