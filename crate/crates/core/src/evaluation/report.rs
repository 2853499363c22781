//! Per-seed evaluation reports and pairwise comparison tables.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::mean_std;
use super::stats::{welch_t_test, WelchResult};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedResult {
    pub seed: u64,
    pub mean_return: f64,
    pub std_return: f64,
    /// Missing for methods that have no value function to compare.
    pub ile: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub method: String,
    pub env: String,
    pub n_episodes: usize,
    pub seeds: Vec<SeedResult>,
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    method: String,
    env: String,
    seed: u64,
    mean_return: f64,
    std_return: f64,
    ile: Option<f64>,
    n_episodes: usize,
}

impl EvalReport {
    pub fn new(method: impl Into<String>, env: impl Into<String>, n_episodes: usize) -> Self {
        EvalReport { method: method.into(), env: env.into(), n_episodes, seeds: Vec::new() }
    }

    pub fn seed_means(&self) -> Vec<f64> {
        self.seeds.iter().map(|s| s.mean_return).collect()
    }

    /// Mean and standard deviation of the per-seed mean returns.
    pub fn pooled(&self) -> (f64, f64) {
        mean_std(&self.seed_means())
    }

    pub fn mean_ile(&self) -> Option<f64> {
        let iles: Option<Vec<f64>> = self.seeds.iter().map(|s| s.ile).collect();
        iles.filter(|v| !v.is_empty()).map(|v| v.iter().sum::<f64>() / v.len() as f64)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        if self.seeds.is_empty() {
            w.write_record(["method", "env", "seed", "mean_return", "std_return", "ile", "n_episodes"])
                .map_err(csv_err)?;
        }
        for s in &self.seeds {
            w.serialize(CsvRow {
                method: self.method.clone(),
                env: self.env.clone(),
                seed: s.seed,
                mean_return: s.mean_return,
                std_return: s.std_return,
                ile: s.ile,
                n_episodes: self.n_episodes,
            })
            .map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let mut report: Option<EvalReport> = None;
        for row in r.deserialize::<CsvRow>() {
            let row = row.map_err(csv_err)?;
            let rep = report.get_or_insert_with(|| EvalReport::new(row.method.clone(), row.env.clone(), row.n_episodes));
            if rep.method != row.method || rep.env != row.env || rep.n_episodes != row.n_episodes {
                return Err(Error::Format("report rows disagree on method, env or n_episodes".into()));
            }
            rep.seeds.push(SeedResult {
                seed: row.seed,
                mean_return: row.mean_return,
                std_return: row.std_return,
                ile: row.ile,
            });
        }
        report.ok_or(Error::Empty("evaluation report"))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
        Self::from_csv(&text)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairwiseComparison {
    pub method_a: String,
    pub method_b: String,
    pub t_statistic: f64,
    pub dof: f64,
    pub p_value: f64,
    pub significant: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonTable {
    pub env: String,
    pub alpha: f64,
    pub reports: Vec<EvalReport>,
    pub pairs: Vec<PairwiseComparison>,
    /// `marked[i]`: method `i` is significantly better than every other method.
    pub marked: Vec<bool>,
}

/// Pairwise Welch tests over per-seed mean returns.
pub fn compare_reports(reports: &[EvalReport], alpha: f64) -> Result<ComparisonTable> {
    if reports.len() < 2 {
        return Err(Error::InvalidArgument("compare needs at least two reports".into()));
    }
    let env = &reports[0].env;
    if let Some(r) = reports.iter().find(|r| &r.env != env) {
        return Err(Error::InvalidArgument(format!(
            "reports cover different environments: `{env}` and `{}`",
            r.env
        )));
    }
    let n = reports.len();
    let mut results: Vec<Vec<Option<WelchResult>>> = vec![vec![None; n]; n];
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let w = welch_t_test(&reports[i].seed_means(), &reports[j].seed_means(), alpha)?;
            pairs.push(PairwiseComparison {
                method_a: reports[i].method.clone(),
                method_b: reports[j].method.clone(),
                t_statistic: w.t_statistic,
                dof: w.dof,
                p_value: w.p_value,
                significant: w.significant,
            });
            results[i][j] = Some(w);
            results[j][i] = Some(WelchResult { t_statistic: -w.t_statistic, ..w });
        }
    }
    let marked = (0..n)
        .map(|i| {
            (0..n).filter(|&j| j != i).all(|j| {
                let w = results[i][j].expect("all pairs tested");
                w.significant && w.t_statistic > 0.0
            })
        })
        .collect();
    Ok(ComparisonTable { env: env.clone(), alpha, reports: reports.to_vec(), pairs, marked })
}

impl ComparisonTable {
    /// Plain-text table: one row per method, `*` marks a significant winner.
    pub fn render(&self) -> String {
        let width = self.reports.iter().map(|r| r.method.len()).max().unwrap_or(6).max(6);
        let mut out = String::new();
        let _ = writeln!(out, "env: {}  (Welch t-test, alpha = {})", self.env, self.alpha);
        let _ = writeln!(out, "{:<width$}  {:>22}  {:>5}  {:>10}", "method", "return (mean ± std)", "seeds", "ILE");
        for (r, &m) in self.reports.iter().zip(&self.marked) {
            let (mean, sd) = r.pooled();
            let cell = format!("{mean:.4} ± {sd:.4}{}", if m { "*" } else { " " });
            let ile = r.mean_ile().map(|v| format!("{v:.4}")).unwrap_or_else(|| "-".into());
            let _ = writeln!(out, "{:<width$}  {:>22}  {:>5}  {:>10}", r.method, cell, r.seeds.len(), ile);
        }
        out
    }

    pub fn pairs_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["method_a", "method_b", "t_statistic", "dof", "p_value", "significant"]).map_err(csv_err)?;
        for p in &self.pairs {
            w.write_record([
                p.method_a.clone(),
                p.method_b.clone(),
                p.t_statistic.to_string(),
                p.dof.to_string(),
                p.p_value.to_string(),
                p.significant.to_string(),
            ])
            .map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}
