//! Exponent tables, field sample export and run reports.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use favpts::exponents::{rho2, rho2_hat, rho2_hat_variational, rho2_variational};
use favpts::gff::{build_covariance, sample};
use favpts::rng::trial_seed;

use crate::error::{CliError, Result};
use crate::experiment::{
    read_results, results_state, write_json, ResultsState, RunManifest, MANIFEST_FILE, RESULTS_FILE,
};

pub const EXPONENTS_HEADER: &str =
    "alpha,beta,rho2,rho2_variational,rho2_diff,rho2_hat,rho2_hat_variational,rho2_hat_diff";

/// `k` evenly spaced interior points `i / (k + 1)`.
pub fn interior_grid(k: usize) -> Vec<f64> {
    (1..=k).map(|i| i as f64 / (k + 1) as f64).collect()
}

/// Closed forms next to their variational values for every `(alpha, beta)`.
pub fn exponents_table(alphas: &[f64], betas: &[f64]) -> Result<String> {
    let mut out = String::from(EXPONENTS_HEADER);
    out.push('\n');
    for &a in alphas {
        for &b in betas {
            let (r, rv) = (rho2(a, b)?, rho2_variational(a, b)?.value);
            let (h, hv) = (rho2_hat(a, b)?, rho2_hat_variational(a, b)?.value);
            writeln!(out, "{a},{b},{r},{rv},{:e},{h},{hv},{:e}", (r - rv).abs(), (h - hv).abs()).expect("string write");
        }
    }
    Ok(out)
}

/// Writes `count` samples on the `n x n` box as `gff_<n>_<i>.bin` (raw
/// little-endian f64, row-major) with a `gff_<n>_<i>.json` header each.
pub fn write_gff_samples(n: u32, count: u64, seed: u64, out: &Path) -> Result<Vec<PathBuf>> {
    let factor = build_covariance(n)?;
    fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let mut written = Vec::new();
    for i in 0..count {
        let phi = sample(&factor, trial_seed(seed, i));
        let bin = out.join(format!("gff_{n}_{i}.bin"));
        fs::write(&bin, phi.to_bytes()).map_err(|e| CliError::io(&bin, e))?;
        write_json(&out.join(format!("gff_{n}_{i}.json")), &phi.header())?;
        written.push(bin);
    }
    Ok(written)
}

/// Summarizes a finished run directory. Fails with
/// [`CliError::Incomplete`] if the results lack the completeness marker or
/// disagree with the manifest.
pub fn report(dir: &Path) -> Result<String> {
    let results = dir.join(RESULTS_FILE);
    match results_state(&results)? {
        ResultsState::Missing => {
            return Err(CliError::Config(format!("no {} in {}", RESULTS_FILE, dir.display())));
        }
        ResultsState::Incomplete { rows } => {
            return Err(CliError::Incomplete(format!("{} stops after {rows} rows", results.display())));
        }
        ResultsState::Complete { .. } => {}
    }
    let manifest_path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&manifest_path).map_err(|e| CliError::io(&manifest_path, e))?;
    let manifest: RunManifest = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: {e}", manifest_path.display())))?;
    let rows = read_results(&results)?;
    let expected = manifest.config.trials * manifest.config.scales.len() as u64;
    if rows.len() as u64 != expected {
        return Err(CliError::Incomplete(format!(
            "{} rows in results, manifest expects {expected}",
            rows.len()
        )));
    }

    let c = &manifest.config;
    let mut out = String::new();
    writeln!(
        out,
        "kind {} alpha {} beta {} j {} trials {} seed {} ({})",
        c.kind.name(),
        c.alpha,
        c.beta,
        c.j,
        c.trials,
        c.seed,
        manifest.counting
    )
    .expect("string write");
    writeln!(out, "n,mean_count,sd_count,max_count,mean_set_size,empty_sets").expect("string write");
    for s in &manifest.scales {
        writeln!(
            out,
            "{},{:.4},{:.4},{},{:.3},{}",
            s.n, s.mean_count, s.sd_count, s.max_count, s.mean_set_size, s.empty_sets
        )
        .expect("string write");
        if let Some(d) = &s.diagnostic {
            writeln!(
                out,
                "  successful at origin {}/{} (95% Wilson {:.3}..{:.3})",
                d.successes, d.trials, d.wilson_low, d.wilson_high
            )
            .expect("string write");
        }
    }
    match (&manifest.fit, &manifest.fit_note) {
        (Some(f), _) => writeln!(out, "slope {:.4} +- {:.4}", f.slope, f.stderr),
        (None, Some(note)) => writeln!(out, "no fit: {note}"),
        (None, None) => writeln!(out, "no fit"),
    }
    .expect("string write");
    if let Some(r) = &manifest.reference {
        writeln!(out, "rho2 {:.4} rho2_hat {:.4}", r.rho2, r.rho2_hat).expect("string write");
    }
    Ok(out)
}
