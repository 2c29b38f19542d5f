use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command as Process;

use topocf::explain::RegressionReport;
use topocf::pipeline::{run, Command, ExperimentConfig, RunOptions, RunOutcome, Status, Target, LEDGER_FILE};
use topocf::recommenders::ModelKind;

const LIGHTGCN: Target = Target::Model(ModelKind::LightGcn);

fn config(out: &Path, samples: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.set("dataset", "synthetic:two_block").unwrap();
    cfg.set("models", "planted,lightgcn").unwrap();
    cfg.set("model.max_epochs", "5").unwrap();
    cfg.samples = samples;
    cfg.output = out.to_path_buf();
    cfg
}

fn go(cfg: &ExperimentConfig, command: Command, resume: bool) -> RunOutcome {
    run(cfg, command, RunOptions { resume }).unwrap()
}

fn data_lines(path: &Path) -> usize {
    fs::read_to_string(path).unwrap().lines().skip(1).filter(|l| !l.is_empty()).count()
}

/// Every file under `root`, keyed by relative path.
fn snapshot(root: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                walk(root, &path, out);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(rel, fs::read(&path).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

fn executed(o: &RunOutcome) -> Vec<(String, String)> {
    o.ledger.executed().map(|e| (e.stage.clone(), e.key.clone())).collect()
}

#[test]
fn one_row_per_sample_and_one_report_per_target() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), 40);
    let o = go(&cfg, Command::Explain, false);
    assert_eq!(o.failed(), 0);
    let out = dir.path();
    assert_eq!(data_lines(&out.join("characteristics/sample/characteristics.csv")), 40);
    assert_eq!(data_lines(&out.join("samples/sample/manifest.csv")), 40);
    let metric_rows: usize = [Target::Planted, LIGHTGCN]
        .iter()
        .map(|t| data_lines(&out.join(format!("metrics/sample/{}.csv", t.slug()))))
        .sum();
    assert_eq!(metric_rows, 80);
    assert_eq!(o.explanations.len(), 2);
    for (t, r) in &o.explanations {
        assert_eq!(r.m, 40, "{t}");
        assert_eq!(r.sample_ids, (0..40).collect::<Vec<u64>>());
    }
}

#[test]
fn resume_skips_everything_and_a_deleted_output_reruns_its_cone() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), 20);
    let first = go(&cfg, Command::Report, false);
    assert_eq!(first.failed(), 0);
    assert_eq!(first.executed(), first.ledger.len());
    let files = snapshot(dir.path());

    let again = go(&cfg, Command::Report, true);
    assert_eq!(again.executed(), 0);
    assert_eq!(snapshot(dir.path()), files);
    assert_eq!(again.explanation(LIGHTGCN), first.explanation(LIGHTGCN));

    fs::remove_file(dir.path().join("metrics/sample/lightgcn/sample_5.csv")).unwrap();
    let repaired = go(&cfg, Command::Report, true);
    let want: Vec<(String, String)> = [
        ("train", "sample/5/lightgcn"),
        ("explain", "lightgcn"),
        ("report", "summary"),
    ]
    .iter()
    .map(|&(s, k)| (s.to_string(), k.to_string()))
    .collect();
    let mut got = executed(&repaired);
    got.sort();
    let mut want_sorted = want.clone();
    want_sorted.sort();
    assert_eq!(got, want_sorted);
    assert_eq!(snapshot(dir.path()), files);
}

#[test]
fn without_resume_everything_runs_again() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), 6);
    let a = go(&cfg, Command::Characterize, false);
    let b = go(&cfg, Command::Characterize, false);
    assert_eq!(a.executed(), b.executed());
    assert!(b.executed() > 0);
}

#[test]
fn changed_settings_invalidate_downstream_cells() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(dir.path(), 16);
    assert_eq!(go(&cfg, Command::Explain, false).failed(), 0);
    cfg.set("lightgcn.layers", "1").unwrap();
    let o = go(&cfg, Command::Explain, true);
    let ran = executed(&o);
    assert!(ran.iter().all(|(s, k)| (s == "train" && k.ends_with("/lightgcn")) || (s == "explain" && k == "lightgcn")));
    assert_eq!(ran.iter().filter(|(s, _)| s == "train").count(), 16);
}

#[test]
fn thread_count_does_not_change_any_output() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let mut serial = config(a.path(), 10);
    serial.jobs = 1;
    let mut parallel = config(b.path(), 10);
    parallel.jobs = 4;
    go(&serial, Command::Report, false);
    go(&parallel, Command::Report, false);
    assert_eq!(snapshot(a.path()), snapshot(b.path()));
}

#[test]
fn reports_round_trip_through_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), 20);
    let o = go(&cfg, Command::Explain, false);
    assert_eq!(o.explanations.len(), 2);
    for (t, r) in &o.explanations {
        let base = dir.path().join(format!("explain/{}", t.slug()));
        let text = fs::read_to_string(base.with_extension("csv")).unwrap();
        let fit = fs::read_to_string(dir.path().join(format!("explain/{}_fit.csv", t.slug()))).unwrap();
        assert_eq!(&RegressionReport::from_csv(&text, &fit).unwrap(), r);
    }
}

#[test]
fn the_report_lists_every_target() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), 20);
    go(&cfg, Command::Report, false);
    let md = fs::read_to_string(dir.path().join("report/report.md")).unwrap();
    assert!(md.contains("planted") && md.contains("LightGCN"));
    let csv = fs::read_to_string(dir.path().join("report/explanatory.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert!(header.contains("planted") && header.contains("LightGCN"), "{header}");
    assert!(csv.contains("Density_log"));
    // every two-block user has the same degree, so only the user fit is skipped
    assert!(!dir.path().join("report/degree_user.tsv").exists());
    for scope in ["item", "all"] {
        assert!(dir.path().join(format!("report/degree_{scope}.tsv")).exists());
    }
}

#[test]
fn failed_cells_are_recorded_and_rows_are_dropped() {
    let dir = tempfile::tempdir().unwrap();
    // a log small enough that some samples cannot be split
    let log = dir.path().join("tiny.tsv");
    let mut text = String::new();
    for u in 0..12 {
        for i in 0..3 {
            text.push_str(&format!("u{u}\ti{}\n", (u + i) % 9));
        }
    }
    fs::write(&log, text).unwrap();
    let mut cfg = config(&dir.path().join("out"), 30);
    cfg.set("dataset", log.to_str().unwrap()).unwrap();
    let o = go(&cfg, Command::Explain, false);
    let failed: Vec<_> = o.ledger.failures().collect();
    assert!(!failed.is_empty());
    assert!(failed.iter().all(|e| e.status == Status::Failed && !e.message.is_empty()));
    let ledger = fs::read_to_string(dir.path().join("out").join(LEDGER_FILE)).unwrap();
    assert!(ledger.contains("failed"));
    if let Some(r) = o.explanation(LIGHTGCN) {
        let lost = failed.iter().filter(|e| e.stage == "train").count();
        assert!(r.m + lost <= 30);
    }
}

#[test]
fn cli_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_topocf");
    let dir = tempfile::tempdir().unwrap();
    let bad = Process::new(bin).args(["--set", "samples=lots", "sample"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    let ok = Process::new(bin)
        .arg("--out")
        .arg(dir.path())
        .args(["--set", "dataset=synthetic:two_block", "--set", "samples=4", "--jobs", "2", "characterize"])
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));
    assert!(dir.path().join(LEDGER_FILE).exists());
    let resumed = Process::new(bin)
        .arg("--out")
        .arg(dir.path())
        .args(["--set", "dataset=synthetic:two_block", "--set", "samples=4", "--resume", "characterize"])
        .output()
        .unwrap();
    assert_eq!(resumed.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&resumed.stderr).contains("0 executed"));
}
