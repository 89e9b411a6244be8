//! Aggregate the checks of one or more run directories.

use crate::checks::Check;
use crate::error::{HarnessError, Result};
use crate::presets::{Manifest, CHECKS, MANIFEST};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
    Incomplete,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionSummary {
    pub criterion: u32,
    pub pass: bool,
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub verdict: Verdict,
    pub criteria: Vec<CriterionSummary>,
    /// Files named in a manifest but absent on disk.
    pub missing: Vec<String>,
    /// `criterion/check` names that failed.
    pub failing: Vec<String>,
}

fn walk(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let rd = std::fs::read_dir(dir).map_err(|source| HarnessError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut entries: Vec<PathBuf> = rd.filter_map(|e| e.ok().map(|e| e.path())).collect();
    entries.sort();
    for p in entries {
        if p.is_dir() {
            walk(&p, out)?;
        } else if p.file_name().is_some_and(|n| n == MANIFEST) {
            out.push(p);
        }
    }
    Ok(())
}

fn read_checks(path: &Path) -> Result<Vec<Check>> {
    let mut rd = csv::Reader::from_path(path).map_err(|e| HarnessError::Output {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    rd.deserialize()
        .map(|r| {
            r.map_err(|e| HarnessError::Output {
                path: path.to_path_buf(),
                reason: e.to_string(),
            })
        })
        .collect()
}

/// Build the summary of everything under `run_dir` without writing it.
pub fn collect(run_dir: &Path) -> Result<Summary> {
    let mut manifests = Vec::new();
    if run_dir.is_dir() {
        walk(run_dir, &mut manifests)?;
    }
    let mut by_criterion: BTreeMap<u32, Vec<Check>> = BTreeMap::new();
    let mut missing = Vec::new();
    for mpath in manifests {
        let dir = mpath.parent().unwrap_or(run_dir);
        let text = std::fs::read_to_string(&mpath).map_err(|source| HarnessError::Io {
            path: mpath.clone(),
            source,
        })?;
        let manifest: Manifest = serde_json::from_str(&text).map_err(|e| HarnessError::Output {
            path: mpath.clone(),
            reason: e.to_string(),
        })?;
        let rel = |f: &str| {
            dir.join(f)
                .strip_prefix(run_dir)
                .map(|p| p.display().to_string())
                .unwrap_or_else(|_| f.to_string())
        };
        for f in &manifest.files {
            if !dir.join(f).exists() {
                missing.push(rel(f));
            }
        }
        let cpath = dir.join(CHECKS);
        if cpath.exists() {
            for c in read_checks(&cpath)? {
                by_criterion.entry(c.criterion).or_default().push(c);
            }
        } else if !manifest.files.iter().any(|f| f == CHECKS) {
            missing.push(rel(CHECKS));
        }
    }
    let criteria: Vec<CriterionSummary> = by_criterion
        .into_iter()
        .map(|(criterion, checks)| CriterionSummary {
            criterion,
            pass: checks.iter().all(|c| c.pass),
            checks,
        })
        .collect();
    let failing: Vec<String> = criteria
        .iter()
        .flat_map(|c| c.checks.iter().filter(|k| !k.pass).map(move |k| format!("{}/{}", c.criterion, k.name)))
        .collect();
    let verdict = if !failing.is_empty() {
        Verdict::Fail
    } else if criteria.is_empty() || !missing.is_empty() {
        Verdict::Incomplete
    } else {
        Verdict::Pass
    };
    Ok(Summary {
        verdict,
        criteria,
        missing,
        failing,
    })
}

pub fn render_text(s: &Summary) -> String {
    let mut out = String::new();
    out.push_str(&format!("{:<10} {:<36} {:>14} {:<22} {}\n", "criterion", "check", "measured", "threshold", "result"));
    for c in &s.criteria {
        for k in &c.checks {
            out.push_str(&format!(
                "{:<10} {:<36} {:>14.6e} {:<22} {}\n",
                c.criterion,
                k.name,
                k.measured,
                k.threshold,
                if k.pass { "pass" } else { "FAIL" }
            ));
        }
    }
    for m in &s.missing {
        out.push_str(&format!("missing: {m}\n"));
    }
    let verdict = match s.verdict {
        Verdict::Pass => "pass",
        Verdict::Fail => "fail",
        Verdict::Incomplete => "incomplete",
    };
    out.push_str(&format!("verdict: {verdict}\n"));
    out
}

/// Write `summary.json` and `summary.txt` into `run_dir`.
pub fn summary_report(run_dir: &Path) -> Result<Summary> {
    let s = collect(run_dir)?;
    std::fs::create_dir_all(run_dir).map_err(|source| HarnessError::Io {
        path: run_dir.to_path_buf(),
        source,
    })?;
    let jpath = run_dir.join("summary.json");
    let json = serde_json::to_string_pretty(&s).map_err(|e| HarnessError::Output {
        path: jpath.clone(),
        reason: e.to_string(),
    })?;
    std::fs::write(&jpath, json + "\n").map_err(|source| HarnessError::Io { path: jpath, source })?;
    let tpath = run_dir.join("summary.txt");
    std::fs::write(&tpath, render_text(&s)).map_err(|source| HarnessError::Io { path: tpath, source })?;
    Ok(s)
}
