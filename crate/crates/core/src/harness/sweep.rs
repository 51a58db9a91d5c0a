use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{Axis, ExperimentConfig};
use crate::error::{Error, Result};
use crate::kernel::SystemParams;
use crate::policy::{bind_with_model, PolicySpec, PolicyTable};
use crate::rng::derive_seed;
use crate::sim::{self, SimConfig};
use crate::solver::{MdpModel, ThresholdReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyOutcome {
    pub policy: PolicySpec,
    /// Exact long-run reward per packet from the stationary distribution.
    pub gain: f64,
    pub sim_success: f64,
    pub ci95: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub sweep_param: Axis,
    pub sweep_value: f64,
    pub outcomes: Vec<PolicyOutcome>,
    /// Gain reported by value iteration itself.
    pub solver_gain: f64,
    pub solver_iterations: u64,
    /// First core-network state of the optimal policy.
    pub threshold: Option<usize>,
    pub threshold_is_clean: bool,
}

impl SweepRow {
    pub fn outcome(&self, policy: PolicySpec) -> Option<&PolicyOutcome> {
        self.outcomes.iter().find(|o| o.policy == policy)
    }
}

struct SolvedPoint {
    value: f64,
    params: SystemParams<f64>,
    seed: u64,
    tables: Vec<PolicyTable>,
    gains: Vec<f64>,
    solver_gain: f64,
    solver_iterations: u64,
    threshold: ThresholdReport,
}

fn point_error(axis: Axis, value: f64, source: Error) -> Error {
    Error::SweepPoint {
        axis: axis.name().to_string(),
        value,
        source: Box::new(source),
    }
}

fn solve_point(cfg: &ExperimentConfig, value: f64) -> Result<SolvedPoint> {
    let params = cfg.params_at(value);
    let model = MdpModel::new(&params, &cfg.delay)?;
    let solved = model.solve();
    if !solved.converged {
        return Err(Error::NotConverged {
            iterations: solved.iterations,
        });
    }
    let tables = cfg
        .policies
        .iter()
        .map(|&spec| bind_with_model(spec, &model, Some(&solved)))
        .collect::<Result<Vec<_>>>()?;
    let gains = tables
        .iter()
        .map(|t| model.policy_gain(t.actions()))
        .collect::<Result<Vec<_>>>()?;
    Ok(SolvedPoint {
        value,
        seed: derive_seed(cfg.sim.seed, cfg.sweep.axis.name(), value),
        params,
        tables,
        gains,
        solver_gain: solved.gain,
        solver_iterations: solved.iterations,
        threshold: ThresholdReport::from_policy(&solved.policy),
    })
}

/// First error in grid order, so the reported point does not depend on which
/// worker failed first.
fn first_error<T>(results: Vec<Result<T>>) -> Result<Vec<T>> {
    results.into_iter().collect()
}

/// Solves, binds and simulates every grid point. Rows come back in ascending
/// sweep order; the output is independent of the worker count because every
/// simulation draws from its own `(point seed, policy index)` stream.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    let axis = cfg.sweep.axis;
    let values = cfg.sweep.values();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.worker_count())
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;

    pool.install(|| {
        let points = first_error(
            values
                .par_iter()
                .map(|&v| solve_point(cfg, v).map_err(|e| point_error(axis, v, e)))
                .collect(),
        )?;

        let jobs: Vec<(usize, usize)> = (0..points.len())
            .flat_map(|i| (0..cfg.policies.len()).map(move |j| (i, j)))
            .collect();
        let reports = first_error(
            jobs.par_iter()
                .map(|&(i, j)| {
                    let pt = &points[i];
                    let sim_cfg = SimConfig {
                        seed: pt.seed,
                        stream: j as u64,
                        ..cfg.sim.clone()
                    };
                    sim::run(&pt.params, &cfg.delay, &pt.tables[j], &sim_cfg)
                        .map_err(|e| point_error(axis, pt.value, e))
                })
                .collect(),
        )?;

        let n_pol = cfg.policies.len();
        Ok(points
            .iter()
            .enumerate()
            .map(|(i, pt)| SweepRow {
                sweep_param: axis,
                sweep_value: pt.value,
                outcomes: (0..n_pol)
                    .map(|j| {
                        let rep = &reports[i * n_pol + j];
                        PolicyOutcome {
                            policy: cfg.policies[j],
                            gain: pt.gains[j],
                            sim_success: rep.success_rate,
                            ci95: rep.ci_halfwidth_95,
                        }
                    })
                    .collect(),
                solver_gain: pt.solver_gain,
                solver_iterations: pt.solver_iterations,
                threshold: pt.threshold.index(),
                threshold_is_clean: pt.threshold.is_clean(),
            })
            .collect())
    })
}
