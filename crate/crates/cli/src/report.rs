use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use sdlab::acceptance::CRITERIA;
use serde_json::Value;

use crate::artifacts::{CHECKS_FILE, MANIFEST_FILE};

pub const DIGEST_FILE: &str = "digest.md";

/// Shown at most per table; the CSV itself has everything.
const MAX_ROWS: usize = 40;

fn anchor(id: usize) -> &'static str {
    match id {
        1 => "Constants m_d, κ_d and the admissible interval I(δ)",
        2 => "Resolvent identity (ζ + Λ)Θ(ζ)f = f",
        3 => "Pseudo-resolvent identity Θ(ζ) - Θ(η) = (η - ζ)Θ(ζ)Θ(η)",
        4 => "Agreement of the four factorizations of Θ",
        5 => "Operator-norm bound ‖T_p‖ ≤ m_d c_p δ",
        6 => "Strong convergence under truncation b_n → b",
        7 => "Positivity and L^∞ contraction of e^{-tΛ}",
        8 => "Ultracontractivity ‖e^{-tΛ}‖_{1→∞} ~ t^{-d/2}",
        9 => "Pointwise kernel estimates",
        10 => "Weak form of the equation for Θf",
        11 => "Diffusion vs semigroup (Monte Carlo)",
        12 => "Bessel-potential smoothing of Θ",
        _ => "",
    }
}

#[derive(Debug)]
pub struct Digest {
    pub path: PathBuf,
    pub gaps: Vec<String>,
}

fn csv_table(path: &Path) -> Result<String> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let headers = r.headers()?.clone();
    let mut s = String::new();
    let _ = writeln!(s, "| {} |", headers.iter().collect::<Vec<_>>().join(" | "));
    let _ = writeln!(s, "|{}", "---|".repeat(headers.len()));
    let mut total = 0;
    for rec in r.records() {
        let rec = rec?;
        total += 1;
        if total <= MAX_ROWS {
            let cells: Vec<String> = rec.iter().map(|c| c.replace('|', "\\|")).collect();
            let _ = writeln!(s, "| {} |", cells.join(" | "));
        }
    }
    if total > MAX_ROWS {
        let _ = writeln!(s, "\n({} more rows in `{}`)", total - MAX_ROWS, file_name(path));
    }
    Ok(s)
}

fn file_name(path: &Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

fn acceptance_status(dir: &Path) -> Result<Vec<(usize, bool)>> {
    let path = dir.join("acceptance.csv");
    let mut r = csv::Reader::from_path(&path)?;
    let h = r.headers()?.clone();
    let col = |name: &str| h.iter().position(|c| c == name);
    let (Some(i), Some(p)) = (col("id"), col("pass")) else {
        anyhow::bail!("{} lacks id/pass columns", path.display());
    };
    r.records()
        .map(|rec| {
            let rec = rec?;
            Ok((rec[i].parse()?, &rec[p] == "true"))
        })
        .collect()
}

/// Markdown digest of a run directory, written to `digest.md` inside it.
pub fn write_digest(dir: &Path) -> Result<Digest> {
    let exists = |name: &str| dir.join(name).is_file();
    let criterion_file = |id: usize| format!("criterion_{id:02}.csv");
    let any_criterion = CRITERIA.iter().any(|c| exists(&criterion_file(c.0)));
    let acceptance = exists("acceptance.csv") || any_criterion;
    if !acceptance && !exists(CHECKS_FILE) && !exists(MANIFEST_FILE) {
        return Err(sdlab::Error::MissingArtifacts(format!(
            "no manifest, checks or acceptance files in {}",
            dir.display()
        ))
        .into());
    }
    let manifest: Option<Value> = if exists(MANIFEST_FILE) {
        let text = std::fs::read_to_string(dir.join(MANIFEST_FILE))?;
        Some(serde_json::from_str(&text).context("parsing manifest.json")?)
    } else {
        None
    };
    let mut gaps = Vec::new();
    let mut s = String::new();
    let experiment = manifest
        .as_ref()
        .and_then(|m| m["experiment"].as_str())
        .unwrap_or(if acceptance { "acceptance" } else { "unknown" })
        .to_string();
    let _ = writeln!(s, "# sdlab digest: {experiment}\n");
    match &manifest {
        Some(m) => {
            let _ = writeln!(
                s,
                "sdlab {} · seed {} · {} thread(s)\n",
                m["versions"]["sdlab"].as_str().unwrap_or("?"),
                m["seed"],
                m["threads"]
            );
        }
        None => gaps.push(format!("{MANIFEST_FILE} missing")),
    }
    if acceptance {
        let status = if exists("acceptance.csv") {
            acceptance_status(dir)?
        } else {
            gaps.push("acceptance.csv missing".into());
            Vec::new()
        };
        for &(id, name, _) in CRITERIA.iter() {
            let _ = writeln!(s, "## {id}. {} (`{name}`)\n", anchor(id));
            if let Some(&(_, pass)) = status.iter().find(|(i, _)| *i == id) {
                let _ = writeln!(s, "Status: **{}**\n", if pass { "PASS" } else { "FAIL" });
            }
            let file = criterion_file(id);
            if exists(&file) {
                s.push_str(&csv_table(&dir.join(&file))?);
                s.push('\n');
            } else {
                let _ = writeln!(s, "**Gap:** `{file}` missing.\n");
                gaps.push(format!("{file} missing"));
            }
        }
    } else {
        let _ = writeln!(s, "## Checks\n");
        if exists(CHECKS_FILE) {
            s.push_str(&csv_table(&dir.join(CHECKS_FILE))?);
            s.push('\n');
        } else {
            let _ = writeln!(s, "**Gap:** `{CHECKS_FILE}` missing.\n");
            gaps.push(format!("{CHECKS_FILE} missing"));
        }
        if let Some(files) = manifest.as_ref().and_then(|m| m["files"].as_array()) {
            let _ = writeln!(s, "## Data files\n");
            for f in files.iter().filter_map(|f| f.as_str()) {
                if exists(f) {
                    let _ = writeln!(s, "- `{f}`");
                } else {
                    let _ = writeln!(s, "- `{f}` **(gap: missing)**");
                    gaps.push(format!("{f} missing"));
                }
            }
            s.push('\n');
        }
    }
    if !gaps.is_empty() {
        let _ = writeln!(s, "## Gaps\n");
        for g in &gaps {
            let _ = writeln!(s, "- {g}");
        }
    }
    let path = dir.join(DIGEST_FILE);
    std::fs::write(&path, s).with_context(|| format!("writing {}", path.display()))?;
    Ok(Digest { path, gaps })
}
