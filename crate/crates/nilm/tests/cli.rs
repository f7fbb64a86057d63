use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nilm::samples::{load_samples, SampleFormat};
use nilm_core::features::{FeatureExtractor, FeatureLayout};
use nilm_core::signal::SampleStream;

fn nilm(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nilm"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn ok(dir: &Path, args: &[&str]) -> Output {
    let o = nilm(dir, args);
    assert_eq!(code(&o), 0, "{args:?}: {}", stderr(&o));
    o
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    fs::read(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

const TWO_APPLIANCES: &str = r#"version = 1
duration_s = 20.0

[appliances.kettle]
kind = "resistive"
nominal_power_w = 2000.0
noise_rms_a = 0.02

[appliances.fridge]
kind = "reactive"
nominal_power_w = 120.0
phase_rad = 0.6
noise_rms_a = 0.02

[[events]]
time_s = 3.0
appliance = "kettle"
action = "on"

[[events]]
time_s = 8.0
appliance = "fridge"
action = "on"

[[events]]
time_s = 9.0
appliance = "kettle"
action = "off"

[[events]]
time_s = 15.0
appliance = "fridge"
action = "off"
"#;

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    assert_eq!(code(&nilm(d, &["--help"])), 0);
    assert_eq!(code(&nilm(d, &["--version"])), 0);
    assert_eq!(code(&nilm(d, &["train", "--help"])), 0);
    assert_eq!(code(&nilm(d, &[])), 1);
    assert_eq!(code(&nilm(d, &["frobnicate"])), 1);
    assert_eq!(code(&nilm(d, &["train", "--model", "knn"])), 1);
    assert_eq!(code(&nilm(d, &["classify", "--model", "m", "--input", "i", "--threshold", "-5"])), 1);
    assert_eq!(code(&nilm(d, &["cost"])), 1);
    assert_eq!(code(&nilm(d, &["cost", "--shape", "mlp:100"])), 1);
    assert_eq!(code(&nilm(d, &["extract", "--input", "missing.csv"])), 2);
    fs::write(d.join("junk.csv"), "t_s,v,i\n0,1,x\n").unwrap();
    let o = nilm(d, &["extract", "--input", "junk.csv"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
    assert_eq!(code(&nilm(d, &["extract", "--input", "junk.csv", "--out", "nodir/f.csv"])), 2);
    assert_eq!(code(&nilm(d, &["cost", "--shape", "mlp:100-800-100-5"])), 0);
    assert_eq!(code(&nilm(d, &["cost", "--shape", "mlp:100-800-100-5", "--strict-budget"])), 3);
    assert_eq!(code(&nilm(d, &["cost", "--shape", "mlp:34-800-100-5", "--strict-budget"])), 0);
}

#[test]
fn every_command_echoes_its_seed() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let runs: [&[&str]; 5] = [
        &["synth", "--scenario", "single-appliance", "--events", "2", "--out", "s.csv", "--seed", "77"],
        &["extract", "--input", "s.csv", "--out", "f.csv", "--seed", "77"],
        &["synth", "--scenario", "single-appliance", "--dataset", "--size", "6", "--out", "d.csv", "--seed", "77"],
        &["train", "--data", "d.csv", "--model", "knn", "--k", "1", "--out", "m.nlmm", "--seed", "77"],
        &["mda", "--data", "d.csv", "--model", "knn", "--repetitions", "1", "--out", "mda.json", "--seed", "77"],
    ];
    for args in runs {
        assert!(stderr(&ok(d, args)).contains("seed: 77"), "{args:?}");
    }
    for args in [
        &["classify", "--model", "m.nlmm", "--input", "s.csv", "--mode", "single", "--seed", "77"][..],
        &["cost", "--model", "m.nlmm", "--seed", "77"],
    ] {
        assert!(stderr(&ok(d, args)).contains("seed: 77"), "{args:?}");
    }
    let default = ok(d, &["cost", "--shape", "mlp:4-3-2"]);
    assert!(stderr(&default).contains(&format!("seed: {}", nilm::cli::DEFAULT_SEED)));
}

#[test]
fn synth_is_deterministic_and_reloads() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    for (out, format) in [("a.csv", "csv"), ("b.csv", "csv"), ("a.bin", "bin"), ("b.bin", "bin")] {
        ok(d, &["synth", "--scenario", "multi-appliance", "--events", "4", "--seed", "5", "--format", format, "--out", out]);
    }
    assert_eq!(read(d, "a.csv"), read(d, "b.csv"));
    assert_eq!(read(d, "a.csv.labels.csv"), read(d, "b.csv.labels.csv"));
    assert_eq!(read(d, "a.bin"), read(d, "b.bin"));
    let csv = load_samples(&d.join("a.csv"), SampleFormat::Csv).unwrap();
    let bin = load_samples(&d.join("a.bin"), SampleFormat::Bin).unwrap();
    assert_eq!(csv, bin);
    let labels = String::from_utf8(read(d, "a.csv.labels.csv")).unwrap();
    assert_eq!(labels.lines().count(), csv.len() / 1000 + 1);

    ok(d, &["synth", "--scenario", "multi-appliance", "--events", "4", "--seed", "6", "--out", "c.csv"]);
    assert_ne!(read(d, "a.csv"), read(d, "c.csv"));

    for out in ["d1.csv", "d2.csv"] {
        ok(d, &["synth", "--scenario", "frequency-only", "--dataset", "--size", "5", "--out", out]);
    }
    assert_eq!(read(d, "d1.csv"), read(d, "d2.csv"));
    assert_eq!(read(d, "d1.csv.meta.json"), read(d, "d2.csv.meta.json"));
}

#[test]
fn synth_from_scripts_and_empty_scripts() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--scenario", "single-appliance", "--events", "4", "--out", "a.csv", "--save-script", "a.toml"]);
    ok(d, &["synth", "--script", "a.toml", "--out", "b.csv"]);
    assert_eq!(read(d, "a.csv"), read(d, "b.csv"));
    assert_eq!(read(d, "a.csv.labels.csv"), read(d, "b.csv.labels.csv"));

    fs::write(d.join("empty.toml"), "version = 1\nduration_s = 0.5\n").unwrap();
    ok(d, &["synth", "--script", "empty.toml", "--out", "e.bin", "--labels", "e.labels.csv"]);
    let s = load_samples(&d.join("e.bin"), SampleFormat::Bin).unwrap();
    assert_eq!(s.len(), 5000);
    let labels = String::from_utf8(read(d, "e.labels.csv")).unwrap();
    assert_eq!(labels.lines().count(), 6);
    assert!(labels.lines().skip(1).all(|l| l.ends_with(",none,")));
}

fn parse_features(text: &str) -> Vec<(usize, Vec<f64>)> {
    text.lines()
        .skip(1)
        .map(|l| {
            let mut cells = l.split(',');
            let j = cells.next().unwrap().parse().unwrap();
            (j, cells.map(|c| c.parse().unwrap()).collect())
        })
        .collect()
}

#[test]
fn extract_matches_the_library_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--scenario", "single-appliance", "--events", "3", "--out", "s.bin"]);
    ok(d, &["extract", "--input", "s.bin", "--out", "f.csv"]);
    let text = String::from_utf8(read(d, "f.csv")).unwrap();
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    assert_eq!(header.len(), 104);
    assert_eq!(header[0], "window");
    let layout = FeatureLayout::default();
    assert!(header[1..].iter().copied().eq(layout.names()));

    let stream = load_samples(&d.join("s.bin"), SampleFormat::Bin).unwrap();
    let extractor = FeatureExtractor::new(layout);
    let api: Vec<_> = stream.windows().map(|w| extractor.extract(&w)).collect();
    let cli = parse_features(&text);
    assert_eq!(cli.len(), api.len());
    for ((j, values), f) in cli.iter().zip(&api) {
        assert_eq!(*j, f.window_index);
        assert_eq!(values.len(), 103);
        for (a, b) in values.iter().zip(&f.values) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    let one = SampleStream::new(stream.v[..1500].to_vec(), stream.i[..1500].to_vec(), 10_000.0).unwrap();
    nilm::samples::save_samples(&one, &d.join("one.csv"), SampleFormat::Csv).unwrap();
    let o = ok(d, &["extract", "--input", "one.csv"]);
    let rows = String::from_utf8(o.stdout).unwrap();
    assert_eq!(rows.lines().count(), 2);
    assert_eq!(rows.lines().nth(1).unwrap().split(',').count(), 104);
}

#[test]
fn training_artifacts_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["synth", "--scenario", "single-appliance", "--dataset", "--size", "12", "--out", "d.csv"]);
    for tag in ["1", "2"] {
        let model = format!("m{tag}.nlmm");
        ok(d, &["train", "--data", "d.csv", "--model", "mlp", "--hidden", "16", "--epochs", "15", "--out", &model]);
        let rf = format!("rf{tag}.json");
        ok(d, &["train", "--data", "d.csv", "--model", "rf", "--trees", "8", "--mda-top", "5", "--repetitions", "2", "--out", &rf]);
        let svm = format!("svm{tag}.nlmm");
        ok(d, &["train", "--data", "d.csv", "--model", "svm", "--tune", "--folds", "3", "--feature-set", "frequency", "--out", &svm]);
        let sweep = format!("sweep{tag}.json");
        ok(d, &[
            "sweep", "--data", "d.csv", "--model", "rf", "--trees", "8", "--fast", "--counts", "1,3,5", "--repetitions", "2",
            "--out", &sweep, "--mda-out", &format!("mda{tag}.json"),
        ]);
    }
    for (a, b) in [
        ("m1.nlmm", "m2.nlmm"),
        ("m1.nlmm.metrics.json", "m2.nlmm.metrics.json"),
        ("rf1.json", "rf2.json"),
        ("rf1.json.metrics.json", "rf2.json.metrics.json"),
        ("svm1.nlmm", "svm2.nlmm"),
        ("svm1.nlmm.metrics.json", "svm2.nlmm.metrics.json"),
        ("sweep1.json", "sweep2.json"),
        ("sweep1.csv", "sweep2.csv"),
        ("mda1.json", "mda2.json"),
    ] {
        assert_eq!(read(d, a), read(d, b), "{a} vs {b}");
    }
    let metrics: serde_json::Value = serde_json::from_slice(&read(d, "rf1.json.metrics.json")).unwrap();
    assert_eq!(metrics["seed"], nilm::cli::DEFAULT_SEED);
    assert_eq!(metrics["selected"].as_array().unwrap().len(), 5);
    let svm: serde_json::Value = serde_json::from_slice(&read(d, "svm1.nlmm.metrics.json")).unwrap();
    assert!(svm["selected"].as_array().unwrap().iter().all(|k| k.as_u64().unwrap() >= 3));
    assert_eq!(svm["grid"]["table"].as_array().unwrap().len(), 6);
    let csv = String::from_utf8(read(d, "sweep1.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.starts_with("feature_count,accuracy,precision,recall,classification_mac"));
}

#[test]
fn classify_logs_events() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(d, &["train", "--scenario", "multi-appliance", "--size", "20", "--model", "mlp", "--hidden", "32", "--epochs", "80", "--out", "m.nlmm"]);

    fs::write(d.join("quiet.toml"), "version = 1\nduration_s = 6.0\n").unwrap();
    ok(d, &["synth", "--script", "quiet.toml", "--out", "quiet.csv"]);
    let o = ok(d, &["classify", "--model", "m.nlmm", "--input", "quiet.csv"]);
    assert_eq!(String::from_utf8(o.stdout).unwrap(), "window_index,delta_p_w,direction,valid,label\n");

    fs::write(d.join("two.toml"), TWO_APPLIANCES).unwrap();
    ok(d, &["synth", "--script", "two.toml", "--out", "two.bin"]);
    ok(d, &["classify", "--model", "m.nlmm", "--input", "two.bin", "--out", "log.csv"]);
    let log = String::from_utf8(read(d, "log.csv")).unwrap();
    let rows: Vec<Vec<&str>> = log.lines().skip(1).map(|l| l.split(',').collect()).collect();
    let summary: Vec<(&str, &str, &str)> = rows.iter().map(|r| (r[2], r[3], r[4])).collect();
    assert_eq!(
        summary,
        [
            ("on", "true", "kettle"),
            ("on", "false", "invalid"),
            ("off", "false", "invalid"),
            ("off", "true", "fridge"),
        ]
    );
    let windows: Vec<usize> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    for (w, t) in windows.iter().zip([3.0, 8.0, 9.0, 15.0]) {
        assert!(w.abs_diff((t * 10.0) as usize) <= 1, "event at window {w}, scripted at {t} s");
    }

    let o = ok(d, &["classify", "--model", "m.nlmm", "--input", "two.bin", "--mode", "single"]);
    let single = String::from_utf8(o.stdout).unwrap();
    assert_eq!(single.lines().count(), 5);
    assert!(single.lines().skip(1).all(|l| l.contains(",true,")));
    let again = ok(d, &["classify", "--model", "m.nlmm", "--input", "two.bin", "--out", "log2.csv"]);
    assert_eq!(code(&again), 0);
    assert_eq!(read(d, "log.csv"), read(d, "log2.csv"));
}

#[test]
fn cost_reports_and_profiles() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let o = ok(d, &["cost", "--shape", "svm:f=103,sv=1950,classes=10", "--out", "svm.json"]);
    let table = String::from_utf8(o.stdout).unwrap();
    assert!(table.contains("218400"), "{table}");
    let report: serde_json::Value = serde_json::from_slice(&read(d, "svm.json")).unwrap();
    assert_eq!(report["classification"]["flash_bytes"], 873_780);
    assert_eq!(report["extraction"]["cycles"], 105_000);

    let o = ok(d, &["cost", "--shape", "mlp:100-800-100-5", "--groups", "frequency"]);
    assert!(String::from_utf8(o.stdout).unwrap().contains("71000"));
    let o = ok(d, &["cost", "--shape", "mlp:100-800-100-5", "--groups", "frequency", "--reorder-fft"]);
    assert!(String::from_utf8(o.stdout).unwrap().contains("75000"));

    ok(d, &["cost", "--export-profile", "p.toml"]);
    assert_eq!(read(d, "p.toml"), nilm::profile_file::EMBEDDED_CORTEX_M4.as_bytes());
    let edited = nilm::profile_file::EMBEDDED_CORTEX_M4.replace("flash_total_bytes = 512000", "flash_total_bytes = 1000000");
    fs::write(d.join("big.toml"), edited).unwrap();
    assert_eq!(code(&nilm(d, &["cost", "--shape", "mlp:100-800-100-5", "--strict-budget", "--profile", "big.toml"])), 0);
    fs::write(d.join("bad.toml"), "name = 3\n").unwrap();
    assert_eq!(code(&nilm(d, &["cost", "--shape", "mlp:4-2", "--profile", "bad.toml"])), 2);
}

fn docs_path() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("docs/CLI.md")
}

/// Regenerate with `NILM_BLESS=1 cargo test -p nilm --test cli`.
#[test]
fn flag_reference_is_current() {
    let fresh = nilm::cli::reference_markdown();
    if std::env::var_os("NILM_BLESS").is_some() {
        fs::write(docs_path(), &fresh).unwrap();
    }
    let committed = fs::read_to_string(docs_path()).unwrap_or_default();
    assert!(committed == fresh, "docs/CLI.md is stale; rerun with NILM_BLESS=1");
}
