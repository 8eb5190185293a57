use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dpsynth::fixtures::census;
use serde_json::Value;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_dpsynth"));
    cmd.env_remove("DPSYNTH_SEED");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn fixture_csv(dir: &Path, n: usize) -> PathBuf {
    let path = dir.join("census.csv");
    census(n, 11).unwrap().write_csv(&path).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn strip_runtime(v: &mut Value) {
    if let Value::Object(map) = v {
        map.remove("runtime_seconds");
        map.values_mut().for_each(strip_runtime);
    }
}

fn generate_args<'a>(input: &'a str, out: &'a str, seed: &'a str) -> Vec<&'a str> {
    vec![
        "generate",
        "--model",
        "dpnpc",
        "--epsilon",
        "1.0",
        "--bins",
        "40",
        "--n",
        "1000",
        "--seed",
        seed,
        "--input",
        input,
        "--out",
        out,
    ]
}

#[test]
fn generate_writes_requested_rows_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let input = fixture_csv(dir.path(), 400);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = run(&generate_args(s(&input), s(out), "7"));
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let csv = fs::read_to_string(a.join("synthetic.csv")).unwrap();
    let mut lines = csv.lines();
    let header = fs::read_to_string(&input)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string();
    assert_eq!(lines.next().unwrap(), header);
    assert_eq!(lines.count(), 1000);
    for f in ["synthetic.csv", "model.json", "ledger.json"] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
    let ledger = read_json(&a.join("ledger.json"));
    assert_eq!(ledger["spent"].as_f64().unwrap(), 1.0);
    assert_eq!(ledger["entries"].as_array().unwrap().len(), 20);
}

#[test]
fn environment_seed_overrides_flag() {
    let dir = tempfile::tempdir().unwrap();
    let input = fixture_csv(dir.path(), 200);
    let (a, b, c) = (
        dir.path().join("a"),
        dir.path().join("b"),
        dir.path().join("c"),
    );
    assert!(run(&generate_args(s(&input), s(&a), "5")).status.success());
    let o = bin()
        .args(generate_args(s(&input), s(&b), "9"))
        .env("DPSYNTH_SEED", "5")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(run(&generate_args(s(&input), s(&c), "9")).status.success());
    let read = |p: &Path| fs::read(p.join("synthetic.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
    let bad = bin()
        .args(generate_args(s(&input), s(&c), "9"))
        .env("DPSYNTH_SEED", "x")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let input = fixture_csv(dir.path(), 50);
    let out = dir.path().join("o");
    let missing_eps = run(&[
        "generate",
        "--model",
        "dpnpc",
        "--input",
        s(&input),
        "--out",
        s(&out),
    ]);
    assert_eq!(missing_eps.status.code(), Some(2));
    let bad_bins = run(&[
        "generate",
        "--model",
        "npc",
        "--bins",
        "0",
        "--input",
        s(&input),
        "--out",
        s(&out),
    ]);
    assert_eq!(bad_bins.status.code(), Some(2));
    let bad_model = run(&[
        "generate",
        "--model",
        "gan",
        "--input",
        s(&input),
        "--out",
        s(&out),
    ]);
    assert_eq!(bad_model.status.code(), Some(2));

    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "a,b\n").unwrap();
    let no_rows = run(&[
        "generate",
        "--model",
        "npc",
        "--input",
        s(&empty),
        "--out",
        s(&out),
    ]);
    assert_eq!(no_rows.status.code(), Some(3));
    let absent = run(&[
        "generate",
        "--model",
        "npc",
        "--input",
        s(&dir.path().join("nope.csv")),
        "--out",
        s(&out),
    ]);
    assert_eq!(absent.status.code(), Some(3));
}

#[test]
fn non_private_model_has_empty_ledger() {
    let dir = tempfile::tempdir().unwrap();
    let input = fixture_csv(dir.path(), 120);
    let out = dir.path().join("npc");
    assert!(run(&[
        "generate",
        "--model",
        "npc",
        "--input",
        s(&input),
        "--out",
        s(&out)
    ])
    .status
    .success());
    let ledger = read_json(&out.join("ledger.json"));
    assert!(ledger["epsilon"].is_null());
    assert_eq!(ledger["entries"].as_array().unwrap().len(), 0);
    let model = read_json(&out.join("model.json"));
    assert_eq!(model["kind"], "npc");
}

#[test]
fn evaluate_identity_synthetic() {
    let dir = tempfile::tempdir().unwrap();
    let input = fixture_csv(dir.path(), 600);
    // Reproduce the training part of the default split with the same seed.
    let table = dpsynth::tabular::load_csv(&input, None).unwrap();
    let parts =
        dpsynth::tabular::split(&table, &dpsynth::SplitSpec::new(0.6, 0.2, 0.2, 3).unwrap())
            .unwrap();
    let syn = dir.path().join("train.csv");
    parts.train.write_csv(&syn).unwrap();
    let out = dir.path().join("eval");
    let o = run(&[
        "evaluate",
        "--input",
        s(&input),
        "--synthetic",
        s(&syn),
        "--target",
        "salary",
        "--seed",
        "3",
        "--out",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = read_json(&out.join("report.json"));
    assert_eq!(report["fidelity"]["avg_ks"].as_f64().unwrap(), 0.0);
    // Every target is in the synthetic table; Wilson shrinkage keeps R just under 1.
    let r = report["privacy"]["R"].as_f64().unwrap();
    assert!(r > 0.95 && r <= 1.0, "{r}");
    assert_eq!(
        report["privacy"]["main_success_rate"].as_f64().unwrap(),
        1.0
    );
    assert_eq!(report["privacy"]["tolerance"].as_f64().unwrap(), 0.10);
    assert_eq!(report["privacy"]["alpha"].as_f64().unwrap(), 0.95);
    assert_eq!(report["utility"]["mcc_real"], report["utility"]["mcc_syn"]);
    let runtime = report["runtime_seconds"].as_object().unwrap();
    for phase in [
        "split", "generate", "privacy", "utility", "fidelity", "total",
    ] {
        assert!(runtime.contains_key(phase), "{phase}");
    }
    let metrics = fs::read_to_string(out.join("metrics.csv")).unwrap();
    let lines: Vec<&str> = metrics.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0].split(',').count(), lines[1].split(',').count());
    assert!(lines[0].contains("avg_ks") && lines[0].contains("runtime_seconds"));
}

#[test]
fn evaluate_inline_is_deterministic_apart_from_timings() {
    let dir = tempfile::tempdir().unwrap();
    let input = fixture_csv(dir.path(), 500);
    let mut reports = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let o = run(&[
            "evaluate",
            "--model",
            "dpcopula",
            "--epsilon",
            "2",
            "--bins",
            "20",
            "--attacks",
            "80",
            "--target",
            "salary",
            "--seed",
            "4",
            "--input",
            s(&input),
            "--out",
            s(&out),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let mut r = read_json(&out.join("report.json"));
        assert_eq!(r["privacy"]["attacks"].as_u64().unwrap(), 80);
        assert_eq!(r["ledger"]["spent"].as_f64().unwrap(), 2.0);
        strip_runtime(&mut r);
        reports.push(r);
    }
    assert_eq!(reports[0], reports[1]);
    for f in ["synthetic.csv", "model.json", "ledger.json"] {
        assert_eq!(
            fs::read(dir.path().join("a").join(f)).unwrap(),
            fs::read(dir.path().join("b").join(f)).unwrap()
        );
    }
}

fn sweep_rows(csv: &str) -> Vec<String> {
    csv.lines()
        .filter(|l| !l.contains(",runtime_seconds,"))
        .map(String::from)
        .collect()
}

#[test]
fn sweep_cardinality_determinism_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let input = fixture_csv(dir.path(), 300);
    let mut outputs = Vec::new();
    for (name, jobs) in [("a", "1"), ("b", "3")] {
        let out = dir.path().join(name);
        let o = run(&[
            "sweep",
            "--epsilons",
            "0.1,1,10",
            "--bins-list",
            "10,40,100",
            "--seeds",
            "2",
            "--attacks",
            "40",
            "--target",
            "salary",
            "--jobs",
            jobs,
            "--input",
            s(&input),
            "--out",
            s(&out),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push(fs::read_to_string(out.join("sweep.csv")).unwrap());
    }
    let rows = sweep_rows(&outputs[0]);
    assert_eq!(rows[0], "model,epsilon,bins,seed,metric,value");
    let per_metric = rows
        .iter()
        .filter(|l| l.contains(",mia_success_rate,"))
        .count();
    assert_eq!(per_metric, 18);
    let runtime_rows = outputs[0]
        .lines()
        .filter(|l| l.contains(",runtime_seconds,"))
        .count();
    assert_eq!(runtime_rows, 18);
    assert_eq!(rows, sweep_rows(&outputs[1]));

    let runs = dir.path().join("a").join("runs");
    assert_eq!(fs::read_dir(&runs).unwrap().count(), 18);
    fs::create_dir_all(runs.join("broken")).unwrap();
    fs::write(runs.join("broken").join("report.json"), "{not json").unwrap();
    let report_out = dir.path().join("summary");
    let o = run(&["report", "--input", s(&runs), "--out", s(&report_out)]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("warning"));
    let summary = fs::read_to_string(report_out.join("summary.csv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines.len(), 4);
    assert!(lines[0].contains("runtime_seconds_mean"));
    assert!(lines[1].starts_with("dpnpc,0.1,6,"));
    let plot = fs::read_to_string(report_out.join("plot_bins.csv")).unwrap();
    assert_eq!(plot.lines().count(), 10);
}

#[test]
fn report_single_run_and_empty_directory() {
    let dir = tempfile::tempdir().unwrap();
    let input = fixture_csv(dir.path(), 200);
    let run_dir = dir.path().join("runs").join("one");
    let o = run(&[
        "evaluate",
        "--model",
        "dphist",
        "--epsilon",
        "1",
        "--attacks",
        "30",
        "--input",
        s(&input),
        "--out",
        s(&run_dir),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let report = read_json(&run_dir.join("report.json"));
    assert!(report["utility"].is_null());
    let o = run(&["report", "--input", s(&dir.path().join("runs"))]);
    assert!(o.status.success());
    let summary = fs::read_to_string(dir.path().join("runs").join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 2);
    let row: Vec<&str> = summary.lines().nth(1).unwrap().split(',').collect();
    let header: Vec<&str> = summary.lines().next().unwrap().split(',').collect();
    let rt = header
        .iter()
        .position(|h| *h == "runtime_seconds_mean")
        .unwrap();
    assert!(row[rt].parse::<f64>().unwrap() >= 0.0);

    let empty = dir.path().join("empty");
    fs::create_dir_all(&empty).unwrap();
    assert_eq!(
        run(&["report", "--input", s(&empty)]).status.code(),
        Some(3)
    );
}
