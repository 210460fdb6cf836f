//! Text output: numbers, return columns, event logs and fit records.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use mfsim_core::analysis::{StudentFit, TailFit};
use mfsim_core::engine::{Event, EventSink};
use serde_json::Value;

/// Decimal text with 12 significant digits, trailing zeros trimmed.
/// Switches to exponent notation outside `1e-5 ≤ |x| < 1e12`.
pub fn fmt12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "nan".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    // exponent after rounding to 12 digits
    let sci = format!("{:.11e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim(format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", trim(mantissa.to_owned()), exp)
    }
}

fn trim(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    if t == "-0" {
        "0".into()
    } else {
        t.to_owned()
    }
}

/// `x` as a JSON number carrying at most 12 significant digits; `null` when
/// not finite.
pub fn json_num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    let rounded: f64 = fmt12(x).parse().expect("fmt12 output parses");
    serde_json::Number::from_f64(rounded).map(Value::Number).unwrap_or(Value::Null)
}

/// One value per line.
pub fn write_column(path: &Path, values: &[f64]) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for v in values {
        writeln!(w, "{}", fmt12(*v))?;
    }
    w.flush()
}

pub fn read_column(path: &Path) -> io::Result<Vec<f64>> {
    let r = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let v = t.parse().map_err(|_| {
            io::Error::new(io::ErrorKind::InvalidData, format!("{}:{}: not a number: `{t}`", path.display(), i + 1))
        })?;
        out.push(v);
    }
    Ok(out)
}

/// Whitespace-separated `x y` rows.
pub fn write_xy(path: &Path, rows: &[(f64, f64)]) -> io::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for (x, y) in rows {
        writeln!(w, "{} {}", fmt12(*x), fmt12(*y))?;
    }
    w.flush()
}

pub fn write_json(path: &Path, value: &Value) -> io::Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(io::Error::other)?;
    text.push('\n');
    std::fs::write(path, text)
}

/// Event log as CSV: `event_time,kind,sign,price,n_tot`.
pub struct EventCsv<W: Write> {
    out: W,
    error: Option<io::Error>,
}

impl<W: Write> EventCsv<W> {
    pub fn new(mut out: W) -> io::Result<Self> {
        writeln!(out, "event_time,kind,sign,price,n_tot")?;
        Ok(Self { out, error: None })
    }

    /// Flush and surface the first write error, if any.
    pub fn finish(mut self) -> io::Result<W> {
        if let Some(e) = self.error.take() {
            return Err(e);
        }
        self.out.flush()?;
        Ok(self.out)
    }
}

impl<W: Write> EventSink for EventCsv<W> {
    fn record(&mut self, e: &Event) {
        if self.error.is_some() {
            return;
        }
        let price = if e.price.is_finite() { fmt12(e.price) } else { String::new() };
        if let Err(err) = writeln!(self.out, "{},{},{},{},{}", e.time, e.kind.name(), e.sign, price, e.n_tot) {
            self.error = Some(err);
        }
    }
}

pub const TAIL_FIT_HEADER: &str = "side,dt,alpha,stderr,lo,hi,n_in_range";
pub const MOMENTS_HEADER: &str = "dt,kurtosis,student_alpha,student_l";

pub fn tail_fit_record(dt: usize, f: &TailFit) -> String {
    format!(
        "{},{},{},{},{},{},{}",
        f.side,
        dt,
        fmt12(f.exponent),
        fmt12(f.stderr),
        fmt12(f.lo),
        fmt12(f.hi),
        f.n_in_range
    )
}

pub fn moments_record(dt: usize, kurtosis: Option<f64>, student: Option<&StudentFit>) -> String {
    let opt = |v: Option<f64>| v.map(fmt12).unwrap_or_default();
    format!(
        "{},{},{},{}",
        dt,
        opt(kurtosis),
        opt(student.map(|s| s.alpha)),
        opt(student.map(|s| s.l))
    )
}
