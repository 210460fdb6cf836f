use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use mfsim::experiment::{cell_specs, ExperimentOptions, Preset};
use mfsim::pipeline::{analyze_dir, run_cell, write_cell, write_event_log, DEFAULT_DTS};
use mfsim::plot::PlotError;
use mfsim::{emit_plot_data, run_experiment, run_parallel, Figure};
use mfsim_core::engine::run_simulation;
use mfsim_core::RunConfig;

fn small() -> RunConfig {
    RunConfig { steps_per_round: 30_000, transient: 2_000, rounds: 2, seed: 5, ..RunConfig::default() }
}

fn opts(dir: &Path) -> ExperimentOptions {
    let mut o = ExperimentOptions::new(dir);
    o.base = small();
    o
}

fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap());
            }
        }
    }
    out
}

#[test]
fn parallel_rounds_match_sequential() {
    let cfg = RunConfig { rounds: 3, ..small() };
    assert_eq!(run_parallel(&cfg).unwrap(), run_simulation(&cfg).unwrap());
}

#[test]
fn cell_files_and_reanalysis() {
    let dir = tempfile::tempdir().unwrap();
    let (cell, cols) = run_cell(&small(), &DEFAULT_DTS).unwrap();
    write_cell(dir.path(), &cell, &DEFAULT_DTS, &cols).unwrap();
    for dt in DEFAULT_DTS {
        assert!(dir.path().join(format!("returns_dt{dt}.csv")).is_file());
    }
    for f in ["config.ini", "summary.json", "tail_fits.csv", "moments.csv"] {
        assert!(dir.path().join(f).is_file(), "{f}");
    }
    let cfg = mfsim::load_config(&dir.path().join("config.ini")).unwrap();
    assert_eq!(cfg, small());
    let moments_before = fs::read_to_string(dir.path().join("moments.csv")).unwrap();
    let lags = analyze_dir(dir.path()).unwrap();
    assert_eq!(lags.iter().map(|l| l.dt).collect::<Vec<_>>(), DEFAULT_DTS);
    // the stored columns carry 12 digits, so the refit agrees closely
    for (a, b) in lags.iter().zip(&cell.lags) {
        assert_eq!(a.n, b.n);
        let (ka, kb) = (a.kurtosis.unwrap(), b.kurtosis.unwrap());
        assert!((ka - kb).abs() < 1e-8 * kb, "{ka} vs {kb}");
    }
    assert_eq!(moments_before.lines().next(), Some("dt,kurtosis,student_alpha,student_l"));
}

#[test]
fn event_log_columns() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("events.csv");
    write_event_log(&p, &small(), 0).unwrap();
    let text = fs::read_to_string(&p).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("event_time,kind,sign,price,n_tot"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r.len() == 5));
    assert!(rows.iter().any(|r| r[1] == "execute"));
    // only post-transient events are logged
    assert!(rows.iter().all(|r| r[0].parse::<usize>().unwrap() > small().transient));
}

#[test]
fn preset_cell_counts() {
    let o = ExperimentOptions::new("unused");
    let counts: Vec<usize> = Preset::ALL.iter().map(|&p| cell_specs(p, &o).len()).collect();
    assert_eq!(counts, vec![1, 20, 10, 10, 1, 99]);
    let names: Vec<String> = cell_specs(Preset::Case3, &o).into_iter().map(|c| c.name).collect();
    assert!(names.contains(&"ax1.3_hs0.8_qG_DE".to_string()), "{names:?}");
    assert!(names.contains(&"ax1.9_hs0.8_qG_G".to_string()), "{names:?}");
    assert_eq!(Preset::parse("grid"), Some(Preset::Grid));
    assert_eq!(Preset::parse("case4"), None);
}

#[test]
fn experiment_layout_and_determinism() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut oa = opts(a.path());
    oa.alphas = Some(vec![1.3, 1.7]);
    oa.jobs = 1;
    let mut ob = opts(b.path());
    ob.alphas = oa.alphas.clone();
    ob.jobs = 3;
    let ra = run_experiment(Preset::Case3, &oa).unwrap();
    run_experiment(Preset::Case3, &ob).unwrap();
    assert_eq!(ra.cells.len(), 4);
    assert!(ra.failed().is_empty(), "{:?}", ra.failed());
    assert_eq!(ra.collapse.len(), 2);
    assert!(ra.collapse.iter().all(|c| c.pairs.len() == 1));
    let (sa, sb) = (snapshot(a.path()), snapshot(b.path()));
    assert_eq!(sa.keys().collect::<Vec<_>>(), sb.keys().collect::<Vec<_>>());
    for (k, v) in &sa {
        assert!(v == &sb[k], "{k} differs between runs");
    }
    assert!(sa.contains_key("summary.json"));
    assert!(sa.keys().any(|k| k.ends_with("ax1.7_hs0.8_qG_G/returns_dt16.csv")));

    let figs = a.path().join("fig3");
    let files = emit_plot_data(a.path(), Figure::Fig3, &figs).unwrap();
    assert_eq!(files.len(), 4);
    assert!(figs.join("qG_DE_ax1.3.dat").is_file());
    assert!(matches!(emit_plot_data(a.path(), Figure::Fig1, &figs), Err(PlotError::WrongPreset { .. })));
}

#[test]
fn standard_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let mut o = opts(dir.path());
    o.base.steps_per_round = 60_000;
    run_experiment(Preset::Standard, &o).unwrap();
    let f4 = emit_plot_data(dir.path(), Figure::Fig4, &dir.path().join("f4")).unwrap();
    let names: Vec<_> = f4.iter().map(|p| p.file_name().unwrap().to_string_lossy().into_owned()).collect();
    assert_eq!(names[0], "density.dat");
    let f5 = emit_plot_data(dir.path(), Figure::Fig5, &dir.path().join("f5")).unwrap();
    assert_eq!(f5.len(), 15);
    // density rows are ascending in g and positive
    let text = fs::read_to_string(&f5[0]).unwrap();
    let rows: Vec<(f64, f64)> = text
        .lines()
        .map(|l| {
            let mut it = l.split_whitespace().map(|v| v.parse::<f64>().unwrap());
            (it.next().unwrap(), it.next().unwrap())
        })
        .collect();
    assert!(rows.windows(2).all(|w| w[0].0 < w[1].0));
    assert!(rows.iter().all(|r| r.1 > 0.0));
}

#[test]
fn plot_without_results_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(
        emit_plot_data(dir.path(), Figure::Fig5, &dir.path().join("x")),
        Err(PlotError::MissingResults(_))
    ));
}
