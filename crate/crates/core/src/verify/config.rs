use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::TestFunction;
use crate::error::{Error, Result};
use crate::lattice::GridSpec;
use crate::meansop::j_max;
use crate::ncspace::{u_floor, SolverOptions};

/// Serde for exponents that may be infinite: a number or `"inf"`.
pub mod exponent_serde {
    use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Number(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(p: &f64, s: S) -> Result<S::Ok, S::Error> {
        if p.is_infinite() {
            Repr::Text("inf".into()).serialize(s)
        } else {
            Repr::Number(*p).serialize(s)
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Number(p) => Ok(p),
            Repr::Text(t) => super::parse_exponent(&t).map_err(de::Error::custom),
        }
    }
}

/// Parses `2`, `4.5`, `inf` or `infinity`.
pub fn parse_exponent(text: &str) -> std::result::Result<f64, String> {
    match text.trim().to_ascii_lowercase().as_str() {
        "inf" | "infinity" | "∞" => Ok(f64::INFINITY),
        other => other.parse::<f64>().map_err(|e| format!("bad exponent {text:?}: {e}")),
    }
}

pub fn format_exponent(p: f64) -> String {
    if p.is_infinite() {
        "inf".into()
    } else {
        format!("{p}")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Allowed excess of a fitted slope over its prediction.
    pub slack: f64,
    /// Smallest `j` entering slope fits.
    pub fit_j_min: u32,
    pub solver: SolverOptions,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            slack: 0.2,
            fit_j_min: 2,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputPaths {
    pub csv: Option<PathBuf>,
    pub verdict: Option<PathBuf>,
    /// Write wall times into the CSV (makes it run-dependent).
    pub timings: bool,
}

/// Everything that determines a decay-type experiment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub n: usize,
    /// Points per axis.
    pub grid: usize,
    /// Box side length.
    pub length: f64,
    pub alpha: f64,
    #[serde(with = "exponent_serde")]
    pub p: f64,
    pub d: usize,
    pub j_min: u32,
    /// Defaults to the largest admissible `j` of the grid.
    pub j_max: Option<u32>,
    /// Number of equispaced `t` samples on `[1, 2]`.
    pub t_samples: usize,
    pub test_function: TestFunction,
    /// Gain exponent of the `p = 4` estimate used in predictions; defaults
    /// to its floor `(n - 2) / 4`.
    pub u: Option<f64>,
    pub tolerances: Tolerances,
    pub output: OutputPaths,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            n: 2,
            grid: 512,
            length: 1.8,
            alpha: 1.0,
            p: 2.0,
            d: 2,
            j_min: 2,
            j_max: None,
            t_samples: 17,
            test_function: TestFunction::WhiteBand { seed: 7 },
            u: None,
            tolerances: Tolerances::default(),
            output: OutputPaths::default(),
        }
    }
}

/// First 16 hex digits of the SHA-256 of a value's JSON form.
pub fn json_hash<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("config serializes");
    let digest = Sha256::digest(&bytes);
    digest.iter().take(8).map(|b| format!("{b:02x}")).collect()
}

impl ExperimentConfig {
    pub fn grid_spec(&self) -> Result<GridSpec> {
        GridSpec::new(self.n, self.grid, self.length)
    }

    /// Hash of the experiment-defining fields (output paths excluded).
    pub fn hash(&self) -> String {
        let mut core = self.clone();
        core.output = OutputPaths::default();
        json_hash(&core)
    }

    pub fn u_or_floor(&self) -> f64 {
        self.u.unwrap_or_else(|| u_floor(self.n, 4.0))
    }

    /// Equispaced samples of `[1, 2]`; a single sample is `t = 1`.
    pub fn ts(&self) -> Vec<f64> {
        sample_interval(1.0, 2.0, self.t_samples)
    }

    /// The `j` range after checking it against the grid.
    pub fn j_range(&self) -> Result<std::ops::RangeInclusive<u32>> {
        let grid = self.grid_spec()?;
        let limit = j_max(&grid, 1.0).ok_or_else(|| {
            Error::GridTooCoarse(format!(
                "grid N = {}, L = {} admits no dyadic piece at t = 1",
                self.grid, self.length
            ))
        })?;
        let hi = self.j_max.unwrap_or(limit);
        if hi > limit {
            return Err(Error::SupportExceedsNyquist {
                needed: 2f64.powi(hi as i32 + 1),
                limit: grid.nyquist(),
                max_j: Some(limit),
            });
        }
        if self.j_min > hi {
            return Err(Error::InvalidArgument(format!("empty j range {}..={hi}", self.j_min)));
        }
        Ok(self.j_min..=hi)
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_samples == 0 {
            return Err(Error::InvalidArgument("t_samples must be positive".into()));
        }
        if !(self.tolerances.slack >= 0.0) {
            return Err(Error::InvalidArgument("slack must be nonnegative".into()));
        }
        self.j_range().map(|_| ())
    }
}

/// `count` equispaced points of `[a, b]`; `[a]` when `count == 1`.
pub fn sample_interval(a: f64, b: f64, count: usize) -> Vec<f64> {
    if count <= 1 {
        return vec![a];
    }
    (0..count)
        .map(|k| a + (b - a) * k as f64 / (count - 1) as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_roundtrip_and_hash() {
        let cfg = ExperimentConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.hash(), cfg.hash());
        assert_eq!(cfg.j_range().unwrap(), 2..=6);
        let mut other = cfg.clone();
        other.output.csv = Some("x.csv".into());
        assert_eq!(other.hash(), cfg.hash());
        other.alpha = 0.5;
        assert_ne!(other.hash(), cfg.hash());
    }

    #[test]
    fn infinite_exponent_and_unknown_keys() {
        let cfg: ExperimentConfig = serde_json::from_str(r#"{"p": "inf", "grid": 64}"#).unwrap();
        assert!(cfg.p.is_infinite());
        assert!(serde_json::to_string(&cfg).unwrap().contains(r#""p":"inf""#));
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"grd": 64}"#).is_err());
    }

    #[test]
    fn j_range_checked_against_grid() {
        let cfg = ExperimentConfig {
            j_max: Some(7),
            ..Default::default()
        };
        assert!(matches!(
            cfg.j_range(),
            Err(Error::SupportExceedsNyquist { max_j: Some(6), .. })
        ));
    }
}
