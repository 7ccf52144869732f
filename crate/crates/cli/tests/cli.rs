use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use favpts::gff::{GFFSample, SampleHeader};
use favpts::point_sets::{brute_force_tuple_count, favorite_points};
use favpts::walk::simulate_disk_walk;
use favpts_cli::experiment::{read_results, RunManifest, COMPLETE_MARKER, RESULTS_HEADER};
use favpts_cli::{run_experiment, ExperimentConfig, Overrides};

fn favpts(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_favpts")).args(args).output().unwrap()
}

fn simulate(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["simulate", "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    favpts(&args)
}

fn manifest(dir: &Path) -> RunManifest {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

const SMALL: [&str; 8] = ["--scales", "16,32,48", "--trials", "40", "--alpha", "0.2", "--seed", "9"];

#[test]
fn reruns_and_worker_counts_give_identical_results() {
    let dir = tempfile::tempdir().unwrap();
    let mut files = Vec::new();
    for (i, workers) in ["1", "3", "3"].iter().enumerate() {
        let out = dir.path().join(format!("run{i}"));
        let mut args = SMALL.to_vec();
        args.extend(["--workers", workers]);
        assert!(simulate(&out, &args).status.success());
        files.push(fs::read(out.join("results.csv")).unwrap());
    }
    assert_eq!(files[0], files[1]);
    assert_eq!(files[1], files[2]);
    let text = String::from_utf8(files[0].clone()).unwrap();
    assert!(text.starts_with(RESULTS_HEADER));
    assert!(text.ends_with(&format!("{COMPLETE_MARKER}\n")));
    assert_eq!(text.lines().count(), 1 + 3 * 40 + 1);
}

#[test]
fn rows_are_in_trial_order_and_reproduce_from_their_seed() {
    let dir = tempfile::tempdir().unwrap();
    assert!(simulate(dir.path(), &SMALL).status.success());
    let rows = read_results(&dir.path().join("results.csv")).unwrap();
    for (i, row) in rows.iter().enumerate() {
        assert_eq!(row.trial, (i % 40) as u64);
    }
    let row = &rows[45];
    let set = favorite_points(&simulate_disk_walk(row.n, row.seed, false).unwrap(), row.alpha, false).unwrap();
    assert_eq!(set.len(), row.set_size);
    assert_eq!(brute_force_tuple_count(&set, row.beta, 2, true), row.count);
}

#[test]
fn single_trial_with_tiny_alpha_counts_the_whole_range() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["--scales", "16", "--trials", "1", "--alpha", "1e-6", "--beta", "0.99", "--seed", "4"];
    assert!(simulate(dir.path(), &args).status.success());
    let rows = read_results(&dir.path().join("results.csv")).unwrap();
    assert_eq!(rows.len(), 1);
    let rec = simulate_disk_walk(16, rows[0].seed, false).unwrap();
    // threshold 1: every visited site is a favorite point
    assert_eq!(rows[0].set_size, rec.local_time.visited_sites());
    let set = favorite_points(&rec, 1e-6, false).unwrap();
    assert_eq!(rows[0].count, brute_force_tuple_count(&set, 0.99, 2, true));
    let m = manifest(dir.path());
    assert!(m.fit.is_none());
    assert!(m.fit_note.unwrap().contains("at least 3"));
}

#[test]
fn distinct_flag_removes_the_diagonal() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(simulate(&a, &SMALL).status.success());
    let mut args = SMALL.to_vec();
    args.push("--distinct");
    assert!(simulate(&b, &args).status.success());
    let with = read_results(&a.join("results.csv")).unwrap();
    let without = read_results(&b.join("results.csv")).unwrap();
    for (x, y) in with.iter().zip(&without) {
        assert_eq!(x.count, y.count + x.set_size as u64);
    }
    assert!(manifest(&b).counting.contains("distinct"));
}

#[test]
fn configuration_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    for bad in [
        vec!["--scales", "32,16"],
        vec!["--trials", "0"],
        vec!["--alpha", "1.2"],
        vec!["--kind", "warm"],
        vec!["--kind", "high", "--scales", "64,256"],
        vec!["--config", "/nonexistent/c.toml"],
    ] {
        let o = simulate(&out, &bad);
        assert_eq!(o.status.code(), Some(2), "{bad:?}");
        assert!(!String::from_utf8_lossy(&o.stderr).is_empty());
    }
    assert_eq!(favpts(&["verify-nothing"]).status.code(), Some(2));
    let file = dir.path().join("file");
    fs::write(&file, "").unwrap();
    let o = simulate(&file.join("sub"), &SMALL);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn incomplete_runs_are_detected() {
    let dir = tempfile::tempdir().unwrap();
    assert!(simulate(dir.path(), &SMALL).status.success());
    let path = dir.path().join("results.csv");
    let full = fs::read_to_string(&path).unwrap();
    let cut: String = full.lines().take(30).map(|l| format!("{l}\n")).collect();
    fs::write(&path, cut).unwrap();

    let o = favpts(&["report", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("incomplete"));

    let o = simulate(dir.path(), &SMALL);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("incomplete earlier run"));
    assert!(manifest(dir.path()).previous_run_incomplete);
    assert_eq!(fs::read_to_string(&path).unwrap(), full);
    let o = favpts(&["report", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stdout).contains("slope"));
}

#[test]
fn config_file_with_schedule() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(
        &cfg,
        "[experiment]\nscales = [32, 64, 128]\ntrials = 30\nalpha = 0.3\nseed = 5\n\n\
         [schedule]\nkind = \"geometric\"\nbase = 2.0\nratio = 2.0\nlevels = 6\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = favpts(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--trials", "20"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let m = manifest(&out);
    assert_eq!(m.config.trials, 20);
    assert_eq!(m.config.alpha, 0.3);
    for s in &m.scales {
        let d = s.diagnostic.as_ref().unwrap();
        assert_eq!(d.trials, 20);
        assert!(d.wilson_low <= d.frequency && d.frequency <= d.wilson_high);
        assert_eq!(d.radii, vec![2.0, 4.0, 8.0, 16.0, 32.0, 64.0]);
    }
}

#[test]
fn verify_suites_write_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    for suite in ["combinatorics", "exponents", "gff", "walk"] {
        let out = dir.path().join(suite);
        let o = favpts(&[&format!("verify-{suite}"), "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{suite}: {}", String::from_utf8_lossy(&o.stdout));
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("verdict.json")).unwrap()).unwrap();
        assert_eq!(v["suite"], suite);
        assert_eq!(v["passed"], true);
    }
    let o = favpts(&["verify-exponents"]);
    assert!(String::from_utf8_lossy(&o.stdout).contains("2500 grid points"));
}

#[test]
fn exponents_table_rows() {
    let o = favpts(&["exponents", "--alpha", "0.25,0.49", "--beta", "0.9"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    let second: Vec<f64> = lines[2].split(',').map(|v| v.parse().unwrap()).collect();
    assert!((second[2] - 2.0).abs() < 1e-12);
    assert!(second[4] <= 1e-6 && second[7] <= 1e-6);
    let o = favpts(&["exponents", "--grid", "4"]);
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 17);
}

#[test]
fn gff_samples_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let o = favpts(&["gff-sample", "--n", "8", "--trials", "2", "--seed", "3", "--out", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    let header: SampleHeader =
        serde_json::from_str(&fs::read_to_string(dir.path().join("gff_8_1.json")).unwrap()).unwrap();
    assert_eq!(header.n, 8);
    let bytes = fs::read(dir.path().join("gff_8_1.bin")).unwrap();
    assert_eq!(bytes.len(), 64 * 8);
    let s = GFFSample::from_parts(&header, &bytes).unwrap();
    assert_eq!(s.to_bytes(), bytes);
}

#[test]
fn pair_exponent_trend() {
    let dir = tempfile::tempdir().unwrap();
    let flags = Overrides {
        scales: Some(vec![64, 128, 256, 512]),
        alpha: Some(0.1),
        beta: Some(0.5),
        trials: Some(200),
        seed: Some(2),
        out: Some(dir.path().to_path_buf()),
        ..Default::default()
    };
    let cfg = ExperimentConfig::resolve("simulate", None, flags).unwrap();
    let m = run_experiment(&cfg).unwrap();
    let slope = m.fit.unwrap().slope;
    println!("slope {slope}");
    assert!((slope - 41.0 / 15.0).abs() <= 0.5, "{slope}");
    assert!((m.reference.unwrap().rho2_hat - 41.0 / 15.0).abs() < 1e-12);
}
