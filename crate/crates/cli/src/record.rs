//! Result records and their JSON-lines / CSV rendering.

use anyhow::Result;
use serde::Serialize;
use sphere_degree::McEstimate;
use std::io::Write;

use crate::config::Params;

#[derive(Clone, Debug, Serialize)]
pub struct EstimateRecord {
    pub label: String,
    pub value_re: f64,
    pub value_im: f64,
    pub stderr: f64,
    pub samples: u64,
    pub seed: u64,
    pub eps_schedule: Vec<f64>,
    pub per_eps_re: Vec<f64>,
    pub extrapolated: bool,
    pub excluded: u64,
    /// Nearest integer when the rounding contract holds, else UNRESOLVED.
    pub resolved: String,
}

impl EstimateRecord {
    pub fn from_mc(label: &str, e: &McEstimate) -> Self {
        EstimateRecord {
            label: label.into(),
            value_re: e.value.re,
            value_im: e.value.im,
            stderr: e.stderr,
            samples: e.samples,
            seed: e.seed,
            eps_schedule: e.eps_schedule.clone(),
            per_eps_re: e.per_eps.iter().map(|v| v.re).collect(),
            extrapolated: e.extrapolated,
            excluded: e.excluded,
            resolved: e.resolve().to_string(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Pass,
    Fail,
    Inconclusive,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckRecord {
    pub label: String,
    pub status: Status,
    /// Measured quantity and the threshold it was compared with.
    pub measured: f64,
    pub threshold: f64,
    pub detail: String,
}

impl CheckRecord {
    pub fn bound(label: &str, measured: f64, threshold: f64, detail: String) -> Self {
        CheckRecord {
            label: label.into(),
            status: if measured <= threshold { Status::Pass } else { Status::Fail },
            measured,
            threshold,
            detail,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Record {
    pub version: &'static str,
    pub subcommand: String,
    /// Echo of the effective parameters; feeding it back reproduces the run.
    pub config: Params,
    pub estimates: Vec<EstimateRecord>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleRecord>,
    pub checks: Vec<CheckRecord>,
    /// The integer claimed by the run, when it makes one.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resolved: Option<String>,
    pub wall_clock_s: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleRecord {
    /// Integer, or INCONCLUSIVE when the truncations did not stabilize.
    pub index: String,
    pub values: Vec<(usize, f64, f64)>,
    pub detail: String,
}

impl Record {
    pub fn new(subcommand: &str, config: Params) -> Self {
        Record {
            version: env!("CARGO_PKG_VERSION"),
            subcommand: subcommand.into(),
            config,
            estimates: Vec::new(),
            oracle: None,
            checks: Vec::new(),
            resolved: None,
            wall_clock_s: 0.0,
        }
    }

    /// 0 when every claim holds, 2 when an integer claim is UNRESOLVED or
    /// a check is inconclusive, 1 when a check fails.
    pub fn exit_code(&self) -> i32 {
        if self.checks.iter().any(|c| c.status == Status::Fail) {
            1
        } else if self.resolved.as_deref() == Some("UNRESOLVED")
            || self.checks.iter().any(|c| c.status == Status::Inconclusive)
        {
            2
        } else {
            0
        }
    }

    pub fn write(&self, format: &str, sink: &mut dyn Write) -> Result<()> {
        match format {
            "csv" => self.write_csv(sink),
            _ => {
                serde_json::to_writer(&mut *sink, self)?;
                writeln!(sink)?;
                Ok(())
            }
        }
    }

    fn write_csv(&self, sink: &mut dyn Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(sink);
        w.write_record([
            "subcommand",
            "kind",
            "label",
            "value_re",
            "value_im",
            "stderr",
            "samples",
            "seed",
            "resolved",
        ])?;
        for e in &self.estimates {
            w.write_record([
                self.subcommand.clone(),
                "estimate".into(),
                e.label.clone(),
                e.value_re.to_string(),
                e.value_im.to_string(),
                e.stderr.to_string(),
                e.samples.to_string(),
                e.seed.to_string(),
                e.resolved.clone(),
            ])?;
        }
        if let Some(o) = &self.oracle {
            let last = o.values.last().map(|v| v.1).unwrap_or(f64::NAN);
            w.write_record([
                self.subcommand.clone(),
                "oracle".into(),
                "truncated-index".into(),
                last.to_string(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
                o.index.clone(),
            ])?;
        }
        for c in &self.checks {
            let status = serde_json::to_value(c.status)?;
            w.write_record([
                self.subcommand.clone(),
                "check".into(),
                c.label.clone(),
                c.measured.to_string(),
                String::new(),
                c.threshold.to_string(),
                String::new(),
                String::new(),
                status.as_str().unwrap_or_default().to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}
