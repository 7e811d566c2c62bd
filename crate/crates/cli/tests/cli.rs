use assert_cmd::Command;
use predicates::prelude::*;
use std::path::Path;

fn ktt() -> Command {
    Command::cargo_bin("ktt").unwrap()
}

/// Generate a small synthetic fixture file and return its path.
fn fixture(dir: &Path, seed: u64) -> std::path::PathBuf {
    let path = dir.join(format!("fix{seed}.csv"));
    ktt()
        .args(["synth", "--strokes", "3", "--kernel", "lognormal"])
        .args(["--link", "clothoid", "--overlap", "0.2"])
        .args(["--seed", &seed.to_string()])
        .arg("--out")
        .arg(&path)
        .assert()
        .success();
    path
}

#[test]
fn extract_then_reconstruct_reproduces_snrs() {
    let tmp = tempfile::tempdir().unwrap();
    let input = fixture(tmp.path(), 7);
    let plan = tmp.path().join("out.plan");
    let report = tmp.path().join("report.csv");
    ktt()
        .arg("extract")
        .arg(&input)
        .arg("--out-plan")
        .arg(&plan)
        .arg("--out-report")
        .arg(&report)
        .assert()
        .success();

    // Reported SNRs must match an independent re-evaluation of the
    // emitted plan against the input within 0.01 dB.
    let report_text = std::fs::read_to_string(&report).unwrap();
    let snr_t = ktt_core::io::report_column(&report_text, "snr_t").unwrap()[0];
    let snr_v = ktt_core::io::report_column(&report_text, "snr_v").unwrap()[0];
    let traj = ktt_core::io::read_trajectories(
        &input,
        ktt_core::io::TrajectoryFormat::DelimitedText,
    )
    .unwrap()
    .remove(0);
    let resampled = ktt_core::resample_uniform(&traj, 200.0).unwrap();
    let doc = ktt_core::read_plan(&std::fs::read_to_string(&plan).unwrap()).unwrap();
    let plan = ktt_core::io::document_to_plan(&doc).unwrap();
    let eval = ktt_core::evaluate_plan(&resampled, &plan).unwrap();
    assert!((eval.snr_t - snr_t).abs() < 0.01, "{} vs {snr_t}", eval.snr_t);
    assert!((eval.snr_v - snr_v).abs() < 0.01, "{} vs {snr_v}", eval.snr_v);
    assert!(snr_t > 15.0 && snr_v > 15.0);

    // And the reconstruct subcommand emits a parseable trajectory.
    let recon = tmp.path().join("recon.csv");
    ktt()
        .args(["reconstruct", "--rate", "200"])
        .arg("--plan")
        .arg(tmp.path().join("out.plan"))
        .arg("--out")
        .arg(&recon)
        .assert()
        .success();
    let rt = ktt_core::io::read_trajectories(
        &recon,
        ktt_core::io::TrajectoryFormat::DelimitedText,
    )
    .unwrap()
    .remove(0);
    assert!(rt.len() > 100);
}

#[test]
fn unknown_kernel_is_usage_error() {
    ktt()
        .args(["extract", "whatever.csv", "--kernel", "cauchy"])
        .assert()
        .code(2)
        .stderr(predicate::str::contains("--kernel"));
}

#[test]
fn missing_subcommand_is_usage_error() {
    ktt().assert().code(2).stderr(predicate::str::contains("Usage"));
}

#[test]
fn compare_emits_cartesian_product_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let input = fixture(tmp.path(), 3);
    let out = ktt()
        .arg("compare")
        .arg(&input)
        .args(["--kernels", "gaussian,lognormal", "--links", "arc,clothoid"])
        .assert()
        .success()
        .get_output()
        .stdout
        .clone();
    let text = String::from_utf8(out).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    assert_eq!(rows.len(), 5, "header + 4 rows, got: {text}");
    assert!(rows[0].starts_with("source,config,snr_t"));
    for cfg in ["gaussian/arc", "gaussian/clothoid", "lognormal/arc", "lognormal/clothoid"] {
        assert!(text.contains(cfg), "missing {cfg}");
    }
}

#[test]
fn identical_invocations_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let input = fixture(tmp.path(), 11);
    let run = |tag: &str| {
        let plan = tmp.path().join(format!("{tag}.plan"));
        let report = tmp.path().join(format!("{tag}.csv"));
        ktt()
            .arg("extract")
            .arg(&input)
            .arg("--out-plan")
            .arg(&plan)
            .arg("--out-report")
            .arg(&report)
            .assert()
            .success();
        (
            std::fs::read(&plan).unwrap(),
            std::fs::read(&report).unwrap(),
        )
    };
    let (p1, r1) = run("a");
    let (p2, r2) = run("b");
    assert_eq!(p1, p2);
    assert_eq!(r1, r2);
}

#[test]
fn batch_continues_past_bad_files_with_exit_1() {
    let tmp = tempfile::tempdir().unwrap();
    let good = fixture(tmp.path(), 5);
    let bad = tmp.path().join("bad.csv");
    std::fs::write(&bad, "not,a,header\n1,2\n").unwrap();
    let report = tmp.path().join("report.csv");
    ktt()
        .arg("extract")
        .arg(&bad)
        .arg(&good)
        .arg("--out-report")
        .arg(&report)
        .assert()
        .code(1)
        .stderr(predicate::str::contains("bad.csv"));
    // The good file still produced its report row.
    let text = std::fs::read_to_string(&report).unwrap();
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn stats_subcommand_reads_report_columns() {
    let tmp = tempfile::tempdir().unwrap();
    // Hand-built report with enough rows for Jarque-Bera (n >= 8).
    let report = tmp.path().join("r.csv");
    let mut text = String::from("source,config,snr_t,snr_v,n,snr_t_per_n,snr_v_per_n,passes,warnings\n");
    for i in 0..10 {
        text.push_str(&format!("s{i},c,{},{},1,0,0,1,0\n", 20.0 + i as f64, 25.0 + (i % 3) as f64));
    }
    std::fs::write(&report, text).unwrap();
    ktt()
        .args(["stats", "--test", "jb", "--column", "snr_t"])
        .arg("--report")
        .arg(&report)
        .assert()
        .success()
        .stdout(predicate::str::contains("p_value"));
    ktt()
        .args(["stats", "--test", "mwu", "--column", "snr_t", "--column-b", "snr_v"])
        .arg("--report")
        .arg(&report)
        .assert()
        .success()
        .stdout(predicate::str::contains("reject_at_5pct"));
}

#[test]
fn synth_plan_roundtrips_through_reconstruct() {
    let tmp = tempfile::tempdir().unwrap();
    let plan = tmp.path().join("truth.plan");
    let traj = tmp.path().join("truth.csv");
    ktt()
        .args(["synth", "--strokes", "2", "--seed", "9"])
        .arg("--out")
        .arg(&traj)
        .arg("--out-plan")
        .arg(&plan)
        .assert()
        .success();
    // Reconstructing the emitted plan at the generator's rate reproduces
    // the generated trajectory almost exactly.
    let recon = tmp.path().join("recon.csv");
    ktt()
        .args(["reconstruct", "--rate", "200"])
        .arg("--plan")
        .arg(&plan)
        .arg("--out")
        .arg(&recon)
        .assert()
        .success();
    let read = |p: &Path| {
        ktt_core::io::read_trajectories(p, ktt_core::io::TrajectoryFormat::DelimitedText)
            .unwrap()
            .remove(0)
    };
    let a = read(&traj);
    let b = read(&recon);
    let mut worst = 0.0_f64;
    for s in a.samples() {
        // Align by time against the reconstruction's grid.
        let i = b
            .samples()
            .iter()
            .position(|r| (r.t - s.t).abs() < 1e-9)
            .unwrap_or_else(|| panic!("no matching time {}", s.t));
        let r = b.samples()[i];
        worst = worst.max((r.x - s.x).abs().max((r.y - s.y).abs()));
    }
    assert!(worst < 1e-9, "worst {worst}");
}
