use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use super::{run_trials, ExperimentConfig, InstanceSource};
use crate::algorithms::{Algo, RunRecord};
use crate::bounds::{
    combined_bound, gaussian_mab_per_arm_bound, permutation_total_bound, topk_per_arm_bounds,
};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub algo: String,
    pub n: usize,
    pub trials: u64,
    /// Statistics of `T` are taken over runs that stopped on their own;
    /// truncated runs only enter `truncated_rate`. When every run was
    /// truncated they fall back to all runs.
    pub completed: u64,
    pub mean_t: f64,
    pub median_t: f64,
    pub stderr: f64,
    /// Mean `T` relative to LUCB++; `None` when LUCB++ was not run.
    pub ratio: Option<f64>,
    pub correct_rate: f64,
    pub truncated_rate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryTable {
    pub n: usize,
    pub rows: Vec<SummaryRow>,
}

pub const CSV_HEADER: &str = "algo,n,mean_T,stderr,ratio,correct_rate,truncated_rate";

fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        0.5 * (xs[m - 1] + xs[m])
    }
}

impl SummaryTable {
    /// Summarize records of a single instance size; rows keep the order in
    /// which algorithms first appear.
    pub fn from_records(records: &[RunRecord]) -> Result<Self> {
        let Some(first) = records.first() else {
            return Err(Error::invalid("no records to summarize"));
        };
        if records.iter().any(|r| r.n != first.n) {
            return Err(Error::invalid("records mix instance sizes"));
        }
        let mut order: Vec<&str> = Vec::new();
        let mut groups: BTreeMap<&str, Vec<&RunRecord>> = BTreeMap::new();
        for r in records {
            if !groups.contains_key(r.algo.as_str()) {
                order.push(&r.algo);
            }
            groups.entry(&r.algo).or_default().push(r);
        }
        let mut rows: Vec<SummaryRow> = order
            .iter()
            .map(|algo| {
                let group = &groups[algo];
                let completed: Vec<f64> = group
                    .iter()
                    .filter(|r| !r.truncated)
                    .map(|r| r.total_pulls as f64)
                    .collect();
                let n_completed = completed.len() as u64;
                let mut ts = if completed.is_empty() {
                    group.iter().map(|r| r.total_pulls as f64).collect()
                } else {
                    completed
                };
                let (mean_t, stderr) = mean_stderr(&ts);
                let count = group.len() as f64;
                SummaryRow {
                    algo: algo.to_string(),
                    n: first.n,
                    trials: group.len() as u64,
                    completed: n_completed,
                    mean_t,
                    median_t: median(&mut ts),
                    stderr,
                    ratio: None,
                    correct_rate: group.iter().filter(|r| r.correct).count() as f64 / count,
                    truncated_rate: group.iter().filter(|r| r.truncated).count() as f64 / count,
                }
            })
            .collect();
        let base = rows
            .iter()
            .find(|r| r.algo == Algo::LucbPlusPlus.name())
            .map(|r| r.mean_t);
        if let Some(base) = base {
            for row in &mut rows {
                row.ratio = Some(row.mean_t / base);
            }
        }
        Ok(SummaryTable { n: first.n, rows })
    }

    pub fn row(&self, algo: Algo) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.algo == algo.name())
    }

    /// CSV body without the header line.
    pub fn csv_rows(&self) -> String {
        let mut s = String::new();
        for r in &self.rows {
            let ratio = r.ratio.map(|x| format!("{x:.4}")).unwrap_or_default();
            let _ = writeln!(
                s,
                "{},{},{:.2},{:.2},{},{:.4},{:.4}",
                r.algo, r.n, r.mean_t, r.stderr, ratio, r.correct_rate, r.truncated_rate
            );
        }
        s
    }

    pub fn to_csv(&self) -> String {
        format!("{CSV_HEADER}\n{}", self.csv_rows())
    }

    /// Human-readable table.
    pub fn render(&self) -> String {
        let mut s = format!("n = {}\n", self.n);
        let _ = writeln!(
            s,
            "{:<8} {:>12} {:>12} {:>10} {:>7} {:>8} {:>9}",
            "algo", "mean T", "median T", "stderr", "ratio", "correct", "truncated"
        );
        for r in &self.rows {
            let ratio = r.ratio.map(|x| format!("{x:.2}")).unwrap_or_else(|| "-".into());
            let _ = writeln!(
                s,
                "{:<8} {:>12.1} {:>12.1} {:>10.1} {:>7} {:>8.3} {:>9.3}",
                r.algo, r.mean_t, r.median_t, r.stderr, ratio, r.correct_rate, r.truncated_rate
            );
        }
        s
    }
}

/// Concatenated CSV for several tables under one header.
pub fn tables_to_csv(tables: &[SummaryTable]) -> String {
    let mut s = format!("{CSV_HEADER}\n");
    for t in tables {
        s.push_str(&t.csv_rows());
    }
    s
}

pub const TABLE1_ALGOS: [Algo; 4] = [Algo::LucbPlusPlus, Algo::Lucb, Algo::Oracle, Algo::Uniform];

/// Run the four benchmark algorithms on the `table1` preset at each size.
pub fn table1_report(sizes: &[usize], trials: u64, seed: u64, delta: f64) -> Result<Vec<SummaryTable>> {
    let mut cfg = ExperimentConfig::new(InstanceSource::Table1 { n: 0 }, TABLE1_ALGOS.to_vec(), delta, trials, seed);
    sizes
        .iter()
        .map(|&n| {
            cfg.source = InstanceSource::Table1 { n };
            SummaryTable::from_records(&run_trials(&cfg)?)
        })
        .collect()
}

/// An empirical quantity next to the lower bound it must respect.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundCheck {
    pub name: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub arm: Option<usize>,
    pub empirical: f64,
    pub bound: f64,
    pub ratio: f64,
    pub below: bool,
}

impl BoundCheck {
    fn new(name: &str, arm: Option<usize>, empirical: f64, bound: f64) -> Self {
        BoundCheck {
            name: name.to_string(),
            arm,
            empirical,
            bound,
            ratio: empirical / bound,
            below: empirical < bound,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundComparison {
    pub algo: String,
    pub n: usize,
    pub k: usize,
    pub delta: f64,
    pub trials: u64,
    pub mean_t: f64,
    pub stderr: f64,
    /// Mean pulls of each distribution `ν_a`, averaged over trials.
    pub mean_pulls: Vec<f64>,
    pub checks: Vec<BoundCheck>,
    /// Names of the checks whose empirical value is below the bound.
    pub flagged: Vec<String>,
    pub notes: Vec<String>,
}

/// Empirical pull counts against every lower bound that applies to the
/// configured instance. Needs `permute_each_trial`, since the bounds hold
/// on average over relabelings.
pub fn bound_comparison_report(cfg: &ExperimentConfig) -> Result<Vec<BoundComparison>> {
    if !cfg.permute_each_trial {
        return Err(Error::Config(
            "bound comparison needs permute_each_trial".to_string(),
        ));
    }
    let inst = cfg.instance()?;
    let records = run_trials(cfg)?;
    let mut out = Vec::new();
    for &algo in &cfg.algos {
        let group: Vec<&RunRecord> = records.iter().filter(|r| r.algo == algo.name()).collect();
        let ts: Vec<f64> = group.iter().map(|r| r.total_pulls as f64).collect();
        let (mean_t, stderr) = mean_stderr(&ts);
        let count = group.len() as f64;
        let mean_pulls: Vec<f64> = (0..inst.n())
            .map(|a| group.iter().map(|r| r.pulls[a] as f64).sum::<f64>() / count)
            .collect();
        let mut checks = Vec::new();
        let mut notes = Vec::new();
        let mut note = |label: &str, e: Error| notes.push(format!("{label}: {e}"));
        match permutation_total_bound(&inst, cfg.delta) {
            Ok(b) => checks.push(BoundCheck::new("permutation_total", None, mean_t, b.value)),
            Err(e) => note("permutation_total", e),
        }
        match combined_bound(&inst, cfg.delta) {
            Ok(b) => checks.push(BoundCheck::new("combined", None, mean_t, b.value)),
            Err(e) => note("combined", e),
        }
        match (gaussian_mab_per_arm_bound(&inst, cfg.delta), inst.best_arm()) {
            (Ok(b), Ok(best)) => checks.push(BoundCheck::new(
                "gaussian_mab_per_arm",
                Some(best),
                mean_pulls[best],
                b.value,
            )),
            (Err(e), _) | (_, Err(e)) => note("gaussian_mab_per_arm", e),
        }
        match topk_per_arm_bounds(&inst, cfg.delta) {
            Ok(r) => {
                for (&a, &v) in &r.per_arm {
                    checks.push(BoundCheck::new("topk_per_arm", Some(a), mean_pulls[a], v));
                }
            }
            Err(e) => note("topk_per_arm", e),
        }
        let flagged = checks
            .iter()
            .filter(|c| c.below)
            .map(|c| match c.arm {
                Some(a) => format!("{}[{a}]", c.name),
                None => c.name.clone(),
            })
            .collect();
        out.push(BoundComparison {
            algo: algo.name().to_string(),
            n: inst.n(),
            k: inst.k(),
            delta: cfg.delta,
            trials: cfg.trials,
            mean_t,
            stderr,
            mean_pulls,
            checks,
            flagged,
            notes,
        });
    }
    Ok(out)
}
