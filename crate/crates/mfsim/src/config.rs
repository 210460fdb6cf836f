//! Run-config files.
//!
//! Flat `key = value` lines grouped under `[run]`, `[sampler]` and
//! `[cancel]` headers. `#` and `;` start comments. Keys left out keep their
//! defaults, so an empty file is the standard model.
//!
//! ```text
//! [run]
//! hurst = 0.8
//! steps_per_round = 200000
//!
//! [sampler]
//! left = studentqg
//! right = laplace
//! alpha_x = 1.3
//! sigma_x = 0.0024
//! ```

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use mfsim_core::cancellation::{ImbalanceConvention, RatioReference};
use mfsim_core::engine::EngineError;
use mfsim_core::{FamilyKind, RunConfig};
use thiserror::Error;

use crate::format::fmt12;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Invalid(#[from] EngineError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

fn err(line: usize, msg: impl Into<String>) -> ConfigError {
    ConfigError::Parse { line, msg: msg.into() }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Section {
    Run,
    Sampler,
    Cancel,
}

/// Parse a config on top of [`RunConfig::default`] and validate it.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    apply_config(&mut cfg, text)?;
    cfg.validate()?;
    Ok(cfg)
}

/// Apply the keys in `text` to `cfg`. Does not validate the result.
pub fn apply_config(cfg: &mut RunConfig, text: &str) -> Result<(), ConfigError> {
    let mut section = None;
    let mut seen = HashSet::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split(['#', ';']).next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if let Some(name) = body.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or_else(|| err(line, "unterminated section header"))?.trim();
            section = Some(match name {
                "run" => Section::Run,
                "sampler" => Section::Sampler,
                "cancel" => Section::Cancel,
                other => return Err(err(line, format!("unknown section [{other}]"))),
            });
            continue;
        }
        let (key, value) = body.split_once('=').ok_or_else(|| err(line, "expected `key = value`"))?;
        let (key, value) = (key.trim(), value.trim());
        let sec = section.ok_or_else(|| err(line, format!("key `{key}` outside any section")))?;
        if !seen.insert((sec as u8, key.to_ascii_lowercase())) {
            return Err(err(line, format!("duplicate key `{key}`")));
        }
        set(cfg, sec, key, value).map_err(|m| err(line, m))?;
    }
    Ok(())
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("bad value `{v}` for `{key}`"))
}

fn real(key: &str, v: &str) -> Result<f64, String> {
    let x: f64 = num(key, v)?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("`{key}` must be finite"))
    }
}

fn set(cfg: &mut RunConfig, sec: Section, key: &str, v: &str) -> Result<(), String> {
    match (sec, key) {
        (Section::Run, "hurst") => cfg.hurst = real(key, v)?,
        (Section::Run, "tick") => cfg.tick = real(key, v)?,
        (Section::Run, "steps_per_round") => cfg.steps_per_round = num(key, v)?,
        (Section::Run, "transient") => cfg.transient = num(key, v)?,
        (Section::Run, "rounds") => cfg.rounds = num(key, v)?,
        (Section::Run, "seed") => cfg.seed = num(key, v)?,
        (Section::Sampler, "left") => cfg.left = family(v)?,
        (Section::Sampler, "right") => cfg.right = family(v)?,
        (Section::Sampler, "alpha_x") => cfg.alpha_x = real(key, v)?,
        (Section::Sampler, "sigma_x") => cfg.sigma_x = real(key, v)?,
        (Section::Cancel, "a" | "A") => cfg.cancel.a = real(key, v)?,
        (Section::Cancel, "b" | "B") => cfg.cancel.b = real(key, v)?,
        (Section::Cancel, "imbalance") => {
            cfg.cancel.imbalance = match v {
                "same" => ImbalanceConvention::SameSide,
                "opposite" => ImbalanceConvention::OppositeSide,
                _ => return Err(format!("imbalance must be `same` or `opposite`, got `{v}`")),
            }
        }
        (Section::Cancel, "ratio") => {
            cfg.cancel.ratio = match v {
                "same" => RatioReference::SameBest,
                "opposite" => RatioReference::OppositeBest,
                _ => return Err(format!("ratio must be `same` or `opposite`, got `{v}`")),
            }
        }
        _ => return Err(format!("unknown key `{key}` in this section")),
    }
    Ok(())
}

fn family(v: &str) -> Result<FamilyKind, String> {
    FamilyKind::parse(v).ok_or_else(|| format!("unknown density family `{v}` (studentqg, laplace, gaussian)"))
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ConfigError::Io { path: path.display().to_string(), source })?;
    parse_config(&text)
}

/// Every key of `cfg`, in the same format [`parse_config`] reads.
pub fn render_config(cfg: &RunConfig) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "[run]");
    let _ = writeln!(s, "hurst = {}", fmt12(cfg.hurst));
    let _ = writeln!(s, "tick = {}", fmt12(cfg.tick));
    let _ = writeln!(s, "steps_per_round = {}", cfg.steps_per_round);
    let _ = writeln!(s, "transient = {}", cfg.transient);
    let _ = writeln!(s, "rounds = {}", cfg.rounds);
    let _ = writeln!(s, "seed = {}", cfg.seed);
    let _ = writeln!(s, "\n[sampler]");
    let _ = writeln!(s, "left = {}", cfg.left);
    let _ = writeln!(s, "right = {}", cfg.right);
    let _ = writeln!(s, "alpha_x = {}", fmt12(cfg.alpha_x));
    let _ = writeln!(s, "sigma_x = {}", fmt12(cfg.sigma_x));
    let _ = writeln!(s, "\n[cancel]");
    let _ = writeln!(s, "a = {}", fmt12(cfg.cancel.a));
    let _ = writeln!(s, "b = {}", fmt12(cfg.cancel.b));
    let imb = match cfg.cancel.imbalance {
        ImbalanceConvention::SameSide => "same",
        ImbalanceConvention::OppositeSide => "opposite",
    };
    let ratio = match cfg.cancel.ratio {
        RatioReference::SameBest => "same",
        RatioReference::OppositeBest => "opposite",
    };
    let _ = writeln!(s, "imbalance = {imb}");
    let _ = writeln!(s, "ratio = {ratio}");
    s
}
