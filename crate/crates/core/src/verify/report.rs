use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{exponent_serde, format_exponent};
use crate::error::Result;

pub const DECAY_CSV_SCHEMA: &str = "ncsms.decay/1";
pub const VERDICT_JSON_SCHEMA: &str = "ncsms.verdict/1";

/// Least-squares slope and its standard error for `y ~ a + b x`.
pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let m = xs.len();
    if m < 2 || ys.len() != m {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / m as f64;
    let my = ys.iter().sum::<f64>() / m as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let stderr = if m > 2 {
        let rss: f64 = xs
            .iter()
            .zip(ys)
            .map(|(x, y)| {
                let r = y - my - slope * (x - mx);
                r * r
            })
            .sum();
        (rss / (m - 2) as f64 / sxx).sqrt()
    } else {
        0.0
    };
    Some((slope, stderr))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayRow {
    pub j: u32,
    pub norm: f64,
    pub seconds: f64,
    /// Set when the piece vanishes identically and the row cannot enter a
    /// logarithmic fit.
    pub skipped: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    /// Every norm vanished; nothing to fit.
    DegenerateInput,
    /// Fewer than two usable rows in the fit range.
    InsufficientRows,
    /// A solver or aliasing failure stopped the experiment.
    NumericalFailure,
}

/// Rows of a decay experiment with the fitted and predicted exponents.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentReport {
    pub label: String,
    pub config_hash: String,
    pub n: usize,
    pub d: usize,
    pub alpha: f64,
    #[serde(with = "exponent_serde")]
    pub p: f64,
    pub t_samples: usize,
    pub u: f64,
    pub rows: Vec<DecayRow>,
    pub fit_j_min: u32,
    pub fitted: Option<f64>,
    pub fit_stderr: Option<f64>,
    pub predicted: f64,
    pub slack: f64,
    pub verdict: Verdict,
    pub failure: Option<String>,
}

/// Slope of `log2 norm` against `j` over unskipped rows with `j >= j_min`.
pub fn fit_rows(rows: &[DecayRow], j_min: u32) -> Option<(f64, f64)> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.j >= j_min && !r.skipped && r.norm > 0.0)
        .map(|r| (r.j as f64, r.norm.log2()))
        .unzip();
    least_squares_slope(&xs, &ys)
}

impl ExponentReport {
    /// Fills `fitted`, `fit_stderr` and `verdict` from the rows.
    pub fn finish(&mut self) {
        if self.failure.is_some() {
            self.verdict = Verdict::NumericalFailure;
            if let Some((s, e)) = fit_rows(&self.rows, self.fit_j_min) {
                self.fitted = Some(s);
                self.fit_stderr = Some(e);
            }
            return;
        }
        if self.rows.iter().all(|r| r.norm == 0.0) {
            self.verdict = Verdict::DegenerateInput;
            return;
        }
        match fit_rows(&self.rows, self.fit_j_min) {
            Some((s, e)) => {
                self.fitted = Some(s);
                self.fit_stderr = Some(e);
                self.verdict = if s <= self.predicted + self.slack {
                    Verdict::Pass
                } else {
                    Verdict::Fail
                };
            }
            None => self.verdict = Verdict::InsufficientRows,
        }
    }

    pub fn refit(&self) -> Option<f64> {
        fit_rows(&self.rows, self.fit_j_min).map(|(s, _)| s)
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    /// CSV with one row per `j`; `seconds` is left empty unless requested.
    pub fn to_csv(&self, timings: bool) -> String {
        let mut out = String::from("schema,config_hash,n,d,alpha,p,j,T,norm,seconds\n");
        for r in &self.rows {
            let seconds = if timings {
                format!("{}", r.seconds)
            } else {
                String::new()
            };
            let _ = writeln!(
                out,
                "{DECAY_CSV_SCHEMA},{},{},{},{},{},{},{},{:e},{seconds}",
                self.config_hash,
                self.n,
                self.d,
                self.alpha,
                format_exponent(self.p),
                r.j,
                self.t_samples,
                r.norm,
            );
        }
        out
    }

    pub fn verdict_json(&self) -> serde_json::Value {
        serde_json::json!({
            "schema": VERDICT_JSON_SCHEMA,
            "label": self.label,
            "config_hash": self.config_hash,
            "predicted": self.predicted,
            "fitted": self.fitted,
            "slack": self.slack,
            "pass": self.passed(),
            "verdict": self.verdict,
        })
    }

    pub fn write_outputs(&self, csv: Option<&Path>, verdict: Option<&Path>, timings: bool) -> Result<()> {
        if let Some(path) = csv {
            std::fs::write(path, self.to_csv(timings))?;
        }
        if let Some(path) = verdict {
            std::fs::write(path, serde_json::to_string_pretty(&self.verdict_json())? + "\n")?;
        }
        Ok(())
    }
}
