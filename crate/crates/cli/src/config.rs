//! Run parameters: a flat TOML file overlaid with command-line flags.

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Every parameter any subcommand reads. Flags given on the command line
/// win over the config file; unknown config keys are rejected.
#[derive(Args, Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
pub struct Params {
    /// Subcommand to run (config files only; on the command line it is positional).
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subcommand: Option<String>,
    /// Master seed.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Monte-Carlo samples (points for cs-check, tuples for index/degree).
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub samples: Option<u64>,
    /// Complex dimension n of the sphere S^{2n-1}.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Chain length parameter: integrals over 2k+1 points.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    /// Symbol for cs-check / index / schatten.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub symbol: Option<String>,
    /// Map family for degree / degree-circle.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    /// Power m of the family or symbol.
    #[arg(long, global = true, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<i32>,
    /// Hölder exponent of the Weierstrass perturbation or model symbol.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Amplitude of the Weierstrass perturbation.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// Trig polynomial degree (schatten --symbol trig).
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub degree: Option<i32>,
    /// Homotopy parameter t in [0, 1] (--symbol homotopy).
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t: Option<f64>,
    /// Mollification schedule, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<Vec<f64>>,
    /// Grid nodes (degree-circle, schatten on S^1, trace-check).
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    /// Truncation caps of the index oracle, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub caps: Option<Vec<usize>>,
    /// Extra degrees of the intermediate space (index oracle, schatten on S^3).
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub extra: Option<usize>,
    /// Basis cap D for schatten on S^3.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cap: Option<usize>,
    /// Run the truncated index oracle next to the integral.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<bool>,
    /// Number of kernels in trace-check.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernels: Option<usize>,
    /// Fourier modes kept in trace-check.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub modes: Option<usize>,
    /// verify-suite mutation: `sign-flip` breaks the order parity signs.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mutation: Option<String>,
    /// verify-suite: run the index checks on caps 2,3,4 only.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tiny_basis: Option<bool>,
    /// Output path (records are appended); stdout when absent.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    /// Output format: json (one record per line) or csv.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<String>,
}

impl Params {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    /// Fields set in `over` replace those in `self`.
    pub fn overlay(self, over: &Params) -> Result<Self> {
        let mut base = toml::Table::try_from(&self)?;
        for (k, v) in toml::Table::try_from(over)? {
            base.insert(k, v);
        }
        Ok(toml::Value::Table(base).try_into()?)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(n) = self.n {
            if !(1..=6).contains(&n) {
                bail!("n: {n} outside 1..=6");
            }
        }
        if self.k == Some(0) {
            bail!("k: must be at least 1");
        }
        if self.samples == Some(0) {
            bail!("samples: must be at least 1");
        }
        if let Some(a) = self.alpha {
            if !(a > 0.0 && a <= 1.0) {
                bail!("alpha: {a} outside (0, 1]");
            }
        }
        if let Some(t) = self.t {
            if !(0.0..=1.0).contains(&t) {
                bail!("t: {t} outside [0, 1]");
            }
        }
        if let Some(e) = &self.eps {
            if e.is_empty() || e.iter().any(|v| !(*v > 0.0)) {
                bail!("eps: schedule must be nonempty and positive");
            }
        }
        if let Some(f) = &self.format {
            if f != "json" && f != "csv" {
                bail!("format: expected json or csv, got {f}");
            }
        }
        if let Some(m) = &self.mutation {
            if m != "sign-flip" {
                bail!("mutation: only sign-flip is known, got {m}");
            }
        }
        Ok(())
    }
}
