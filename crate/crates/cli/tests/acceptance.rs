//! Runs every preset on its defaults and prints one line per criterion.
//! Built without the test harness so the lines are never captured.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::Instant;
use stripwaves_cli::{run_experiment, Check, ExperimentConfig, Preset};

fn main() -> ExitCode {
    let dir = tempfile::tempdir().unwrap();
    let mut by_criterion: BTreeMap<u32, Vec<Check>> = BTreeMap::new();
    let mut errors = vec![];
    for preset in Preset::ALL {
        let mut cfg = ExperimentConfig::defaults(preset);
        cfg.out = dir.path().join(preset.name());
        cfg.quiet = true;
        let start = Instant::now();
        match run_experiment(&cfg) {
            Ok(outcome) => {
                for c in outcome.checks {
                    by_criterion.entry(c.criterion).or_default().push(c);
                }
            }
            Err(e) => {
                for &c in preset.criteria() {
                    errors.push(c);
                }
                println!("{}: error: {e}", preset.name());
            }
        }
        println!("{} finished in {:.1} s", preset.name(), start.elapsed().as_secs_f64());
    }
    let mut failed = vec![];
    for n in 1..=12u32 {
        let checks = by_criterion.get(&n).map(Vec::as_slice).unwrap_or(&[]);
        let ok = !checks.is_empty() && !errors.contains(&n) && checks.iter().all(|c| c.pass);
        let detail: Vec<String> = checks
            .iter()
            .map(|c| format!("{} = {:.4e} ({})", c.name, c.measured, c.threshold))
            .collect();
        let detail = if detail.is_empty() { "no checks ran".to_string() } else { detail.join(", ") };
        println!("{} criterion {n}: {detail}", if ok { "PASS" } else { "FAIL" });
        if !ok {
            failed.push(n);
        }
    }
    if failed.is_empty() {
        println!("acceptance: all 12 criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: failing criteria {failed:?}");
        ExitCode::FAILURE
    }
}
