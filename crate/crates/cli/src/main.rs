//! `railfair`: generate capacity scenarios, optimize timetables and run the
//! multi-run studies.
//!
//! Exit codes: 0 success, 2 usage error, 3 invalid scenario, 4 I/O failure,
//! 1 anything else.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use railfair::experiment::{
    self, alpha_study, compare, run_once, write_alpha_rows_csv, write_bands_csv,
    write_comparison_csv, write_json, STUDY_ALPHAS,
};
use railfair::fairness::DEFAULT_EPSILON;
use railfair::model::validate_scenario;
use railfair::{
    make_scenario, Error, FairnessConfig, GaConfig, IndexKind, Scenario, ScenarioKind,
    ScenarioParams,
};

const EXIT_FAILURE: u8 = 1;
const EXIT_INVALID_SCENARIO: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Parser)]
#[command(
    name = "railfair",
    version,
    about = "Fairness-aware railway capacity allocation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a generated scenario document.
    Generate {
        /// balanced, semi or unbalanced.
        #[arg(long)]
        kind: ScenarioKind,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Number of line segments.
        #[arg(long, default_value_t = ScenarioParams::default().line_segments)]
        segments: u32,
        /// Planning horizon in minutes.
        #[arg(long, default_value_t = ScenarioParams::default().horizon_minutes)]
        horizon: u32,
        /// Output file (a directory gets `scenario_<kind>_<seed>.json`).
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a scenario file and list every violation.
    Validate {
        /// Scenario JSON document.
        #[arg(long)]
        scenario: PathBuf,
    },
    /// One GA run; writes record.csv, epochs.json and best.json.
    Optimize {
        /// Scenario JSON document.
        #[arg(long)]
        scenario: PathBuf,
        #[command(flatten)]
        objective: ObjectiveArgs,
        #[command(flatten)]
        ga: GaArgs,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Inequity mean and spread per sensitivity value.
    AlphaStudy {
        /// Scenario JSON document.
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, default_value = "jain")]
        index: IndexKind,
        /// Comma-separated sensitivity values.
        #[arg(long, value_delimiter = ',', default_values_t = STUDY_ALPHAS)]
        alphas: Vec<f64>,
        #[arg(long, default_value_t = DEFAULT_EPSILON)]
        epsilon: f64,
        #[arg(long, default_value_t = 5)]
        runs: usize,
        #[command(flatten)]
        ga: GaArgs,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Every mode on every capacity scenario.
    Compare {
        /// Comma-separated scenario kinds.
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "balanced,semi,unbalanced"
        )]
        kinds: Vec<ScenarioKind>,
        /// Comma-separated modes; each uses its default sensitivity.
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "jain,gini,atkinson,revenue"
        )]
        modes: Vec<IndexKind>,
        #[arg(long, default_value_t = 5)]
        runs: usize,
        /// Seed of the generated scenarios.
        #[arg(long, default_value_t = 1)]
        scenario_seed: u64,
        #[arg(long, default_value_t = DEFAULT_EPSILON)]
        epsilon: f64,
        #[command(flatten)]
        ga: GaArgs,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct ObjectiveArgs {
    /// jain, gini, atkinson or revenue.
    #[arg(long, default_value = "jain")]
    index: IndexKind,
    /// Sensitivity exponent [default: 25, or 10 for gini].
    #[arg(long)]
    alpha: Option<f64>,
    /// Atkinson inequality aversion ("inf" for the min branch).
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    epsilon: f64,
}

impl ObjectiveArgs {
    fn config(&self) -> FairnessConfig {
        FairnessConfig {
            index_kind: self.index,
            alpha: self.alpha.unwrap_or(self.index.default_alpha()),
            epsilon: self.epsilon,
        }
    }
}

#[derive(Args)]
struct GaArgs {
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    /// Population size.
    #[arg(long, default_value_t = 64)]
    pop: usize,
    /// Base seed; run r of a study uses seed + r.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl GaArgs {
    fn config(&self) -> GaConfig {
        GaConfig {
            population_size: self.pop,
            epochs: self.epochs,
            seed: self.seed,
            ..GaConfig::default()
        }
    }
}

fn load_valid(path: &Path) -> railfair::Result<Scenario> {
    let text = fs::read_to_string(path)?;
    let s = Scenario::from_json(&text).map_err(|e| {
        Error::InvalidScenario(vec![railfair::model::Violation {
            field: "document".into(),
            detail: e.to_string(),
        }])
    })?;
    s.ensure_valid()?;
    Ok(s)
}

fn create(path: &Path, name: &str) -> railfair::Result<fs::File> {
    Ok(fs::File::create(path.join(name))?)
}

fn execute(cmd: Command) -> railfair::Result<()> {
    match cmd {
        Command::Generate {
            kind,
            seed,
            segments,
            horizon,
            out,
        } => {
            let params = ScenarioParams {
                line_segments: segments,
                horizon_minutes: horizon,
                ..ScenarioParams::default()
            };
            let s = make_scenario(kind, seed, &params);
            s.ensure_valid()?;
            let path = if out.is_dir() {
                out.join(format!("scenario_{kind}_{seed}.json"))
            } else {
                out
            };
            s.save(&path)?;
            println!("wrote {} ({} requests)", path.display(), s.total_requests());
        }
        Command::Validate { scenario } => {
            let s = Scenario::load(&scenario).map_err(|e| match e {
                Error::Json(j) => Error::InvalidScenario(vec![railfair::model::Violation {
                    field: "document".into(),
                    detail: j.to_string(),
                }]),
                other => other,
            })?;
            let violations = validate_scenario(&s);
            if !violations.is_empty() {
                return Err(Error::InvalidScenario(violations));
            }
            println!("{}: ok", scenario.display());
        }
        Command::Optimize {
            scenario,
            objective,
            ga,
            out,
        } => {
            let s = load_valid(&scenario)?;
            let cfg = objective.config();
            fs::create_dir_all(&out)?;
            let report = run_once(&s, &cfg, &ga.config(), 1)?;
            experiment::write_records_csv(
                create(&out, "record.csv")?,
                std::slice::from_ref(&report.record),
            )?;
            write_json(out.join("epochs.json"), &report.series)?;
            write_json(out.join("best.json"), &report.best)?;
            let r = &report.record;
            println!(
                "{} alpha={} inequity={:.2}% revenue={:.2} trains={}",
                r.index_kind, r.alpha, r.inequity_percent, r.revenue, r.scheduled_train_count
            );
        }
        Command::AlphaStudy {
            scenario,
            index,
            alphas,
            epsilon,
            runs,
            ga,
            out,
        } => {
            let s = load_valid(&scenario)?;
            fs::create_dir_all(&out)?;
            let study = alpha_study(&s, index, epsilon, &alphas, runs, &ga.config())?;
            write_alpha_rows_csv(create(&out, "alpha_study.csv")?, &study.rows)?;
            experiment::write_records_csv(create(&out, "alpha_runs.csv")?, &study.records)?;
            write_bands_csv(create(&out, "alpha_series.csv")?, &alphas, &study.bands)?;
            for row in &study.rows {
                println!(
                    "{} alpha={:<4} inequity mean={:.2} std={:.2}",
                    row.index_kind, row.alpha, row.inequity.mean, row.inequity.std
                );
            }
        }
        Command::Compare {
            kinds,
            modes,
            runs,
            scenario_seed,
            epsilon,
            ga,
            out,
        } => {
            fs::create_dir_all(&out)?;
            let cmp = compare(
                &kinds,
                &modes,
                runs,
                scenario_seed,
                &ScenarioParams::default(),
                &ga.config(),
                epsilon,
            )?;
            write_comparison_csv(create(&out, "compare.csv")?, &cmp)?;
            write_json(out.join("compare.json"), &cmp)?;
            for c in &cmp.cells {
                println!(
                    "{:<10} {:<8} inequity {:6.2} ± {:5.2}  revenue {:8.2} ± {:7.2}",
                    c.scenario.as_str(),
                    c.mode.as_str(),
                    c.inequity.mean,
                    c.inequity.std,
                    c.revenue.mean,
                    c.revenue.std
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::InvalidScenario(_) => EXIT_INVALID_SCENARIO,
                Error::Io(_) => EXIT_IO,
                _ => EXIT_FAILURE,
            })
        }
    }
}
