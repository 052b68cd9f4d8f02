use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn freqcache(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_freqcache"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = freqcache(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

const SMALL: &[&str] = &["--patch-size", "8", "--seed", "3"];

fn with(base: &[&str], extra: &[&str]) -> Vec<String> {
    base.iter().chain(extra).map(|s| s.to_string()).collect()
}

fn run(dir: &Path, args: Vec<String>) -> String {
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    ok(dir, &refs)
}

#[test]
fn synth_analyze_masks_pipeline() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    run(
        d,
        with(
            SMALL,
            &[
                "synth",
                "--kind",
                "edge-inject",
                "--height",
                "32",
                "--width",
                "32",
                "--length",
                "5",
                "--edges",
                "2",
                "-o",
                "s.fqc",
                "--labels",
                "labels.json",
            ],
        ),
    );
    assert!(d.join("s.fqc.manifest.json").exists());
    let labels: Vec<Vec<usize>> =
        serde_json::from_str(&fs::read_to_string(d.join("labels.json")).unwrap()).unwrap();
    assert_eq!(labels.len(), 5);

    let summary = run(
        d,
        with(SMALL, &["analyze", "-i", "s.fqc", "--out-dir", "out"]),
    );
    assert!(summary.starts_with("steps=4 "), "{summary}");
    let jsonl = fs::read_to_string(d.join("out/decisions.jsonl")).unwrap();
    assert_eq!(jsonl.lines().count(), 4);
    let csv = fs::read_to_string(d.join("out/metrics.csv")).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "step,reuse_ratio,sim_freq,entropy,alpha,latency_model_ms"
    );
    assert_eq!(csv.lines().count(), 5);
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.join("out/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "analyze");
    assert_eq!(manifest["config"]["cache"]["patch_size"], 8);

    run(
        d,
        with(
            SMALL,
            &["masks", "-i", "out/decisions.jsonl", "--out-dir", "masks"],
        ),
    );
    for (t, line) in jsonl.lines().enumerate() {
        let rec: serde_json::Value = serde_json::from_str(line).unwrap();
        let pgm = fs::read(d.join(format!("masks/step_{:05}.pgm", t + 1))).unwrap();
        let pixels = &pgm[pgm.len() - 16..];
        let reused = pixels.iter().filter(|&&p| p == 255).count();
        assert_eq!(reused as u64, rec["k_final"].as_u64().unwrap());
    }
    assert!(d.join("masks/manifest.json").exists());
}

#[test]
fn timings_flag_fills_timing_field() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    run(
        d,
        with(
            SMALL,
            &[
                "synth",
                "--kind",
                "translate",
                "--height",
                "32",
                "--width",
                "32",
                "--length",
                "3",
                "-o",
                "t.fqc",
            ],
        ),
    );
    run(
        d,
        with(SMALL, &["analyze", "-i", "t.fqc", "--out-dir", "plain"]),
    );
    run(
        d,
        with(
            SMALL,
            &["analyze", "-i", "t.fqc", "--out-dir", "timed", "--timings"],
        ),
    );
    let plain = fs::read_to_string(d.join("plain/decisions.jsonl")).unwrap();
    let timed = fs::read_to_string(d.join("timed/decisions.jsonl")).unwrap();
    assert!(plain.contains("\"timings_us\":null"));
    assert!(timed.contains("\"timings_us\":{\"spectra\":"));
}

#[test]
fn config_file_then_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    fs::write(
        d.join("run.cfg"),
        "# test\npatch_size = 8\nalpha_min = 0.2\nalpha_max = 0.2\nlambda = 1e9\n",
    )
    .unwrap();
    run(
        d,
        vec![
            "--config".into(),
            "run.cfg".into(),
            "synth".into(),
            "--kind".into(),
            "static".into(),
            "--height".into(),
            "32".into(),
            "--width".into(),
            "32".into(),
            "--length".into(),
            "3".into(),
            "-o".into(),
            "s.fqc".into(),
        ],
    );
    let out = ok(
        d,
        &[
            "--config",
            "run.cfg",
            "analyze",
            "-i",
            "s.fqc",
            "--out-dir",
            "a",
        ],
    );
    // floor(0.2 * 16) = 3 of 16 patches
    assert!(out.contains("mean_reuse_ratio=0.1875"), "{out}");
    let out = ok(
        d,
        &[
            "--config",
            "run.cfg",
            "--alpha-max",
            "0.5",
            "analyze",
            "-i",
            "s.fqc",
            "--out-dir",
            "b",
        ],
    );
    assert!(!out.contains("mean_reuse_ratio=0.1875"), "{out}");
}

#[test]
fn compare_and_bench_emit_json() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let out = run(
        d,
        with(
            SMALL,
            &[
                "compare",
                "--scene",
                "edge-inject",
                "--height",
                "32",
                "--width",
                "32",
                "--length",
                "4",
                "--edges",
                "2",
            ],
        ),
    );
    let report: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(report["policies"][0]["policy"], "freqcache");
    assert_eq!(report["policies"][0]["edge_false_reuse"], 0);
    assert_eq!(report["tau_v"], 0.85);

    run(
        d,
        with(
            SMALL,
            &[
                "bench",
                "--height",
                "32",
                "--width",
                "32",
                "--iterations",
                "5",
                "--single-thread",
                "-o",
                "bench.json",
            ],
        ),
    );
    let bench: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(d.join("bench.json")).unwrap()).unwrap();
    assert_eq!(bench["warmup"], 3);
    assert_eq!(bench["threads"], 1);
    assert!(d.join("bench.json.manifest.json").exists());
}

#[test]
fn errors_exit_nonzero_with_message() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let out = freqcache(d, &["analyze", "-i", "nope.fqc", "--out-dir", "x"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.fqc"));

    fs::write(d.join("bad.fqc"), b"FQC1\x02\0\0\0\x02\0\0\0\x02\0\0\0abc").unwrap();
    let out = freqcache(d, &["analyze", "-i", "bad.fqc", "--out-dir", "x"]);
    assert!(!out.status.success());
    assert!(
        String::from_utf8_lossy(&out.stderr).contains("byte offset 19"),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let out = freqcache(d, &["--tau-mig", "3", "bench", "--iterations", "1"]);
    assert!(!out.status.success());

    let out = freqcache(d, &["compare"]);
    assert!(!out.status.success());
}
