use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::delay::DelayModel;
use crate::error::{Error, Result};
use crate::kernel::SystemParams;
use crate::policy::PolicySpec;
use crate::sim::SimConfig;

/// Probability being swept.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    /// Arrival probability.
    P,
    /// Departure probability.
    Q,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::P => "p",
            Axis::Q => "q",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Axis::P => "arrival probability p",
            Axis::Q => "departure probability q",
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub axis: Axis,
    pub start: f64,
    pub stop: f64,
    pub step: f64,
    /// Value of the probability that is not swept.
    pub fixed: f64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            axis: Axis::P,
            start: 0.01,
            stop: 0.09,
            step: 0.01,
            fixed: 0.05,
        }
    }
}

impl SweepSpec {
    /// Grid values `start, start + step, ...` up to `stop` inclusive, rounded
    /// to 12 decimals so accumulated binary error never reaches the output.
    pub fn values(&self) -> Vec<f64> {
        let span = ((self.stop - self.start) / self.step + 1e-9)
            .floor()
            .max(0.0) as usize;
        (0..=span)
            .map(|i| ((self.start + i as f64 * self.step) * 1e12).round() / 1e12)
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::Config("sweep.step must be positive".into()));
        }
        if self.stop.is_nan() || self.stop < self.start {
            return Err(Error::Config(
                "sweep.stop must not be below sweep.start".into(),
            ));
        }
        let open = |x: f64| x > 0.0 && x < 1.0;
        if let Some(bad) = self.values().into_iter().find(|&v| !open(v)) {
            return Err(Error::Config(format!("sweep value {bad} not in (0, 1)")));
        }
        if !open(self.fixed) {
            return Err(Error::Config(format!(
                "sweep.fixed {} not in (0, 1)",
                self.fixed
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub path: Option<PathBuf>,
    pub svg: bool,
}

/// One experiment: base model, sweep, compared policies and simulation setup.
///
/// Every field is optional in JSON; defaults reproduce the arrival-probability
/// sweep at 0.02 ms slots, a 965-slot deadline and a 100-packet buffer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub params: SystemParams<f64>,
    pub delay: DelayModel<f64>,
    pub sweep: SweepSpec,
    pub policies: Vec<PolicySpec>,
    pub sim: SimConfig,
    pub output: OutputSpec,
    /// Worker threads; 0 uses the available parallelism.
    pub workers: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            params: SystemParams::default(),
            delay: DelayModel::default(),
            sweep: SweepSpec::default(),
            policies: vec![PolicySpec::MdpOptimal, PolicySpec::Myopic],
            sim: SimConfig::default(),
            output: OutputSpec::default(),
            workers: 0,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.sweep.validate()?;
        self.params_at(self.sweep.start).validate()?;
        self.delay.validate()?;
        self.sim.validate()?;
        if self.policies.is_empty() {
            return Err(Error::Config("at least one policy is required".into()));
        }
        Ok(())
    }

    /// Base parameters with the swept probability set to `value` and the
    /// other one set to `sweep.fixed`.
    pub fn params_at(&self, value: f64) -> SystemParams<f64> {
        let mut params = self.params.clone();
        match self.sweep.axis {
            Axis::P => {
                params.p = value;
                params.q = self.sweep.fixed;
            }
            Axis::Q => {
                params.p = self.sweep.fixed;
                params.q = value;
            }
        }
        params
    }

    pub fn worker_count(&self) -> usize {
        if self.workers > 0 {
            self.workers
        } else {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        }
    }
}
