use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use stripwaves_cli::{run_experiment, summary_report, ExperimentConfig, HarnessError, Preset, Verdict};

#[derive(Parser)]
#[command(name = "stripwaves", version, about = "Run water-wave experiments and summarize their checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment preset
    Run {
        /// TOML config; missing keys take the preset defaults
        #[arg(long, env = "STRIPWAVES_CONFIG")]
        config: Option<PathBuf>,
        #[arg(long, env = "STRIPWAVES_PRESET")]
        preset: Option<Preset>,
        /// Output directory
        #[arg(long, env = "STRIPWAVES_OUT")]
        out: Option<PathBuf>,
        #[arg(long, env = "STRIPWAVES_SEED")]
        seed: Option<u64>,
        /// Comma-separated sweep of the small parameter
        #[arg(long, env = "STRIPWAVES_EPS", value_delimiter = ',')]
        eps: Option<Vec<f64>>,
        #[arg(long, env = "STRIPWAVES_QUIET")]
        quiet: bool,
    },
    /// Aggregate checks under a run directory into summary.json and summary.txt
    Summarize { dir: PathBuf },
    /// Print the default config of a preset
    Defaults { preset: Preset },
}

fn run(cli: Cli) -> Result<i32, HarnessError> {
    match cli.command {
        Command::Run {
            config,
            preset,
            out,
            seed,
            eps,
            quiet,
        } => {
            let mut cfg = match &config {
                Some(path) => ExperimentConfig::load(path, preset)?,
                None => ExperimentConfig::defaults(
                    preset.ok_or_else(|| HarnessError::Config("give --config or --preset".into()))?,
                ),
            };
            if let Some(o) = out {
                cfg.out = o;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(e) = eps {
                cfg.eps = e;
            }
            cfg.quiet |= quiet;
            let outcome = run_experiment(&cfg)?;
            for c in outcome.failures() {
                eprintln!(
                    "check failed: criterion {} {} measured {:e}, needs {}",
                    c.criterion, c.name, c.measured, c.threshold
                );
            }
            if !cfg.quiet {
                println!("reports in {}", outcome.out.display());
            }
            Ok(if outcome.passed() { 0 } else { 1 })
        }
        Command::Summarize { dir } => {
            let s = summary_report(&dir)?;
            print!("{}", stripwaves_cli::report::render_text(&s));
            Ok(match s.verdict {
                Verdict::Pass => 0,
                _ => 1,
            })
        }
        Command::Defaults { preset } => {
            let text = toml::to_string(&ExperimentConfig::defaults(preset))
                .map_err(|e| HarnessError::Config(e.to_string()))?;
            print!("{text}");
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
