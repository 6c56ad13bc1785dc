//! Command-line front end. Every machine-readable output is a pure function
//! of the flags.

use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use super::{
    bound_comparison_report, persist, run_trials, table1_report, tables_to_csv, ExperimentConfig,
    InstanceSource, SummaryTable, DEFAULT_MAX_PULLS,
};
use crate::algorithms::{Algo, RunSpec};
use crate::bounds::{bounds_report, ReportOptions};
use crate::confidence::ConfidenceSchedule;
use crate::error::{Error, Result};
use crate::model::{ExpFamily, Instance};
use crate::simlab::{fano_event_check, lecam_check, verify_balance};

#[derive(Parser, Debug)]
#[command(name = "banditlab", version, about = "Fixed-confidence pure-exploration bandit laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run seeded trials and write JSONL records.
    Run(RunArgs),
    /// Sample counts relative to LUCB++ on the benchmark instance.
    Table1(Table1Args),
    /// Evaluate every applicable lower bound on an instance.
    Bounds(BoundsArgs),
    /// Check the censored-tilting identities at one parameter point.
    Tilting(TiltingArgs),
    /// Monte Carlo Le Cam swap and Fano subset checks.
    Simcheck(SimcheckArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Preset {
    Table1,
    BestArm,
}

#[derive(Args, Debug)]
struct InstanceArgs {
    /// Named instance.
    #[arg(long, value_enum, conflicts_with = "means_file")]
    preset: Option<Preset>,
    /// File of arm means, one per line, or JSON arms.
    #[arg(long)]
    means_file: Option<PathBuf>,
    /// Number of arms for a preset.
    #[arg(long, default_value_t = 10)]
    n: usize,
    /// Top-arm gap for the best-arm preset.
    #[arg(long, default_value_t = 0.5)]
    gap: f64,
    /// Size of the target set; defaults to 5 for table1, 1 otherwise.
    #[arg(long)]
    k: Option<usize>,
}

impl InstanceArgs {
    fn source(&self) -> InstanceSource {
        match (&self.means_file, self.preset) {
            (Some(path), _) => InstanceSource::MeansFile(path.clone()),
            (None, Some(Preset::Table1)) | (None, None) => InstanceSource::Table1 { n: self.n },
            (None, Some(Preset::BestArm)) => InstanceSource::BestArm {
                n: self.n,
                gap: self.gap,
            },
        }
    }
}

#[derive(Args, Debug)]
struct ScheduleArgs {
    #[arg(long, default_value_t = 1.0)]
    sigma2: f64,
    /// Multiplier inside the anytime radius.
    #[arg(long, default_value_t = 2.0)]
    lil_constant: f64,
    /// Weight of the iterated-logarithm term.
    #[arg(long, default_value_t = 2.0)]
    lil_inflation: f64,
}

impl ScheduleArgs {
    fn schedule(&self) -> Result<ConfidenceSchedule> {
        ConfidenceSchedule::new(self.sigma2, self.lil_constant, self.lil_inflation)
    }
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[command(flatten)]
    schedule: ScheduleArgs,
    /// Comma-separated algorithms: lucbpp, lucb, oracle, uniform, staged.
    #[arg(long, value_delimiter = ',', default_value = "lucbpp")]
    algo: Vec<Algo>,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value_t = 50)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_PULLS)]
    max_pulls: u64,
    /// Relabel the instance uniformly at random in every trial.
    #[arg(long)]
    permute: bool,
    /// JSONL output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also compare against the lower bounds (implies --permute).
    #[arg(long)]
    compare_bounds: bool,
}

#[derive(Args, Debug)]
struct Table1Args {
    #[arg(long, value_delimiter = ',', default_value = "10,100")]
    sizes: Vec<usize>,
    #[arg(long, default_value_t = 50)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    /// CSV output path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BoundsArgs {
    #[command(flatten)]
    instance: InstanceArgs,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long, default_value_t = 0.125)]
    eta: f64,
    #[arg(long, default_value_t = 10.0)]
    alpha: f64,
    #[arg(long, default_value_t = 0.0625)]
    beta: f64,
    #[arg(long, default_value_t = 2)]
    m: usize,
    /// JSON output path.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Family {
    Gaussian,
    Bernoulli,
}

#[derive(Args, Debug)]
#[command(allow_negative_numbers = true)]
struct TiltingArgs {
    #[arg(long)]
    theta1: f64,
    #[arg(long)]
    thetaj: f64,
    #[arg(long)]
    tau: u64,
    #[arg(long)]
    kappa: f64,
    /// Monte Carlo sample count.
    #[arg(long, default_value_t = 1_000_000)]
    mc: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "gaussian")]
    family: Family,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SimcheckArgs {
    #[arg(long, default_value_t = 5)]
    n: usize,
    #[arg(long, default_value_t = 0.5)]
    gap: f64,
    #[arg(long, default_value_t = 0.125)]
    eta: f64,
    #[arg(long, default_value_t = 0.05)]
    delta: f64,
    #[arg(long, default_value_t = 1000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Suboptimal arm swapped with the best one.
    #[arg(long, default_value_t = 1)]
    b: usize,
    /// Subset size for the Fano check.
    #[arg(long, default_value_t = 2)]
    m: usize,
    #[arg(long, default_value_t = 0.0625)]
    beta: f64,
    #[arg(long, default_value = "lucbpp")]
    algo: Algo,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parse `argv` (program name first) and run the command. Returns the exit
/// code: 0 on success, 1 on usage or validation errors, 2 on I/O errors.
pub fn cli_dispatch<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let text = e.render().to_string();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{text}");
                    0
                }
                _ => {
                    let _ = write!(err, "{text}");
                    1
                }
            };
        }
    };
    match execute(cli.command, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if e.is_io() {
                2
            } else {
                1
            }
        }
    }
}

fn emit_json<T: Serialize>(value: &T, out: &mut dyn Write, path: Option<&PathBuf>) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("reports serialize");
    write_stdout(out, &format!("{text}\n"))?;
    if let Some(path) = path {
        std::fs::write(path, format!("{text}\n")).map_err(|e| Error::io(path, e))?;
    }
    Ok(())
}

fn write_stdout(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes())
        .map_err(|e| Error::io("<stdout>", e))
}

fn execute(cmd: Command, out: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Run(a) => {
            let mut cfg = ExperimentConfig::new(a.instance.source(), a.algo, a.delta, a.trials, a.seed);
            cfg.k = a.instance.k;
            cfg.max_pulls = a.max_pulls;
            cfg.permute_each_trial = a.permute || a.compare_bounds;
            cfg.sched = a.schedule.schedule()?;
            cfg.out = a.out;
            let records = run_trials(&cfg)?;
            if let Some(path) = &cfg.out {
                persist(&records, path)?;
            }
            let table = SummaryTable::from_records(&records)?;
            write_stdout(out, &table.to_csv())?;
            if a.compare_bounds {
                let cmp = bound_comparison_report(&cfg)?;
                emit_json(&cmp, out, None)?;
            }
            Ok(())
        }
        Command::Table1(a) => {
            let tables = table1_report(&a.sizes, a.trials, a.seed, a.delta)?;
            let mut text = String::new();
            for t in &tables {
                text.push_str(&t.render());
                text.push('\n');
            }
            write_stdout(out, &text)?;
            let csv = tables_to_csv(&tables);
            write_stdout(out, &csv)?;
            if let Some(path) = &a.out {
                std::fs::write(path, csv).map_err(|e| Error::io(path, e))?;
            }
            Ok(())
        }
        Command::Bounds(a) => {
            let inst = a.instance.source().build(a.instance.k)?;
            let opts = ReportOptions {
                delta: a.delta,
                eta: a.eta,
                alpha: a.alpha,
                beta: a.beta,
                m: a.m,
            };
            emit_json(&bounds_report(&inst, &opts)?, out, a.out.as_ref())
        }
        Command::Tilting(a) => {
            let family = match a.family {
                Family::Gaussian => ExpFamily::GaussianUnitVariance,
                Family::Bernoulli => ExpFamily::Bernoulli,
            };
            let report = verify_balance(a.theta1, a.thetaj, a.tau, a.kappa, family, a.mc, a.seed)?;
            emit_json(&report, out, a.out.as_ref())
        }
        Command::Simcheck(a) => {
            let inst = Instance::two_valued(a.n, 1, a.gap, 0.0)?;
            let spec = RunSpec::new(a.algo, a.delta, DEFAULT_MAX_PULLS);
            #[derive(Serialize)]
            struct Simcheck {
                n: usize,
                gap: f64,
                algo: String,
                lecam: crate::simlab::LeCamReport,
                #[serde(skip_serializing_if = "Option::is_none")]
                fano: Option<crate::simlab::FanoReport>,
            }
            let lecam = lecam_check(&inst, a.b, a.eta, &spec, a.trials, a.seed)?;
            let fano = if a.m < a.n {
                Some(fano_event_check(&inst, a.m, a.beta, &spec, a.trials, a.seed)?)
            } else {
                None
            };
            let report = Simcheck {
                n: a.n,
                gap: a.gap,
                algo: a.algo.name().to_string(),
                lecam,
                fano,
            };
            emit_json(&report, out, a.out.as_ref())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("banditlab").chain(args.iter().copied());
        let code = cli_dispatch(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn help_and_usage() {
        let (code, out, _) = call(&["--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("table1"));
        let (code, out, _) = call(&["run", "--help"]);
        assert_eq!(code, 0);
        assert!(out.contains("--max-pulls"));
        let (code, _, err) = call(&["run", "--bogus"]);
        assert_eq!(code, 1);
        assert!(!err.is_empty());
        let (code, _, _) = call(&["frobnicate"]);
        assert_eq!(code, 1);
    }

    #[test]
    fn validation_and_io_codes() {
        let (code, _, err) = call(&["run", "--delta", "1.5", "--trials", "1"]);
        assert_eq!(code, 1, "{err}");
        let (code, _, _) = call(&["bounds", "--means-file", "/nonexistent/m.txt"]);
        assert_eq!(code, 2);
        let (code, _, _) = call(&["run", "--n", "4", "--trials", "1", "--out", "/nonexistent/dir/r.jsonl"]);
        assert_eq!(code, 1, "table1 preset needs n > 5");
        let (code, _, _) = call(&[
            "run", "--preset", "best-arm", "--n", "4", "--trials", "1", "--out", "/nonexistent/dir/r.jsonl",
        ]);
        assert_eq!(code, 2);
    }

    #[test]
    fn bounds_output() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.txt");
        std::fs::write(&path, "0.75\n0.25\n0.25\n0.25\n").unwrap();
        let (code, out, err) = call(&["bounds", "--means-file", path.to_str().unwrap(), "--delta", "0.05", "--k", "1"]);
        assert_eq!(code, 0, "{err}");
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["n"], 4);
        assert!(v["permutation"]["per_arm"].is_object());
    }

    #[test]
    fn run_writes_records() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        let args = [
            "run", "--algo", "lucbpp,uniform", "--preset", "table1", "--n", "10", "--delta", "0.1", "--trials", "3",
            "--seed", "1", "--out", path.to_str().unwrap(),
        ];
        let (code, out, err) = call(&args);
        assert_eq!(code, 0, "{err}");
        assert!(out.starts_with(super::super::CSV_HEADER));
        let records = super::super::load(&path).unwrap();
        assert_eq!(records.len(), 6);
        let first = std::fs::read(&path).unwrap();
        let (_, out2, _) = call(&args);
        assert_eq!(out, out2);
        assert_eq!(first, std::fs::read(&path).unwrap());
    }

    #[test]
    fn tilting_output() {
        let (code, out, err) = call(&[
            "tilting", "--theta1", "0.5", "--thetaj", "0", "--tau", "8", "--kappa", "0.1", "--mc", "20000",
        ]);
        assert_eq!(code, 0, "{err}");
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["tau"], 8);
        assert_eq!(v["event_bound_holds"], true);
    }
}
