//! Relative value iteration for the average-reward routing MDP.
//!
//! The expected continuation only depends on the post-decision queue length,
//! so each backup evaluates `E[V | s']` once per `s'` and both actions at `s`
//! read it at `s` (core) and `s + 1` (breakout).

use serde::{Deserialize, Serialize};

use crate::delay::{DelayModel, RewardTable};
use crate::error::{Error, Result};
use crate::kernel::{Action, DepartureKernel, SystemParams, TransitionRow};
use crate::scalar::Scalar;

/// Guards the relative stopping rule against division by zero at the anchor.
pub const RELATIVE_FLOOR: f64 = 1e-12;

/// Relative values indexed by queue length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ValueFunction<F> {
    pub values: Vec<F>,
}

impl<F: Scalar> ValueFunction<F> {
    pub fn zeros(n_states: usize) -> Self {
        ValueFunction {
            values: vec![F::zero(); n_states],
        }
    }

    pub fn max_abs(&self) -> F {
        self.values.iter().fold(F::zero(), |m, v| m.max(v.abs()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveResult<F> {
    pub value: ValueFunction<F>,
    pub policy: Vec<Action>,
    /// First state routed to the core network; `None` if breakout everywhere.
    pub threshold: Option<usize>,
    /// Long-run average reward per packet.
    pub gain: F,
    pub iterations: u64,
    pub converged: bool,
}

/// Outcome of scanning a policy for threshold structure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThresholdReport {
    /// Breakout on `[0, k)`, core network on `[k, buffer_size]`.
    Clean { threshold: Option<usize> },
    /// Breakout reappears after the first core-network state.
    NonThreshold {
        first_core: usize,
        violating_states: Vec<usize>,
    },
}

impl ThresholdReport {
    pub fn from_policy(policy: &[Action]) -> Self {
        let Some(first_core) = policy.iter().position(|&a| a == Action::CoreNetwork) else {
            return ThresholdReport::Clean { threshold: None };
        };
        let violating_states: Vec<usize> = policy[first_core..]
            .iter()
            .enumerate()
            .filter(|(_, &a)| a == Action::Breakout)
            .map(|(i, _)| first_core + i)
            .collect();
        if violating_states.is_empty() {
            ThresholdReport::Clean {
                threshold: Some(first_core),
            }
        } else {
            ThresholdReport::NonThreshold {
                first_core,
                violating_states,
            }
        }
    }

    pub fn is_clean(&self) -> bool {
        matches!(self, ThresholdReport::Clean { .. })
    }

    /// Threshold index, or the first core-network state for a non-threshold
    /// policy. `None` only for breakout-everywhere.
    pub fn index(&self) -> Option<usize> {
        match self {
            ThresholdReport::Clean { threshold } => *threshold,
            ThresholdReport::NonThreshold { first_core, .. } => Some(*first_core),
        }
    }
}

/// Everything a backup needs, built once per parameter point.
#[derive(Debug, Clone)]
pub struct MdpModel<F> {
    params: SystemParams<F>,
    /// `rows[s']`: next-epoch distribution from post-decision length `s'`.
    rows: Vec<TransitionRow<F>>,
    rewards: RewardTable<F>,
}

impl<F: Scalar> MdpModel<F> {
    pub fn new(params: &SystemParams<F>, delay: &DelayModel<F>) -> Result<Self> {
        params.validate()?;
        delay.validate()?;
        let kernel = DepartureKernel::new(params)?;
        let rows = (0..params.n_states()).map(|s| kernel.row(s)).collect();
        Ok(MdpModel {
            params: params.clone(),
            rows,
            rewards: RewardTable::new(params, delay)?,
        })
    }

    pub fn params(&self) -> &SystemParams<F> {
        &self.params
    }

    pub fn rewards(&self) -> &RewardTable<F> {
        &self.rewards
    }

    pub fn n_states(&self) -> usize {
        self.rows.len()
    }

    /// Transition row for `action` taken at queue length `state`.
    pub fn row(&self, state: usize, action: Action) -> Result<&TransitionRow<F>> {
        if state >= self.n_states() {
            return Err(Error::InvalidState {
                q_len: state,
                buffer_size: self.params.buffer_size,
            });
        }
        if action == Action::Breakout && state == self.params.buffer_size {
            return Err(Error::InvalidAction { q_len: state });
        }
        Ok(&self.rows[state + action.increment()])
    }

    fn continuation(&self, v: &[F]) -> Vec<F> {
        self.rows.iter().map(|row| row.expect(v)).collect()
    }

    /// Q-values `(breakout, core)` at every state; breakout is `None` at a
    /// full buffer.
    pub fn action_values(&self, v: &ValueFunction<F>) -> Vec<(Option<F>, F)> {
        let cont = self.continuation(&v.values);
        (0..self.n_states())
            .map(|s| {
                let core = self.rewards.r_cn + cont[s];
                let bac =
                    (s < self.params.buffer_size).then(|| self.rewards.r_bac[s] + cont[s + 1]);
                (bac, core)
            })
            .collect()
    }

    fn choose(&self, bac: Option<F>, core: F) -> (F, Action) {
        match bac {
            Some(b) if b > core || (b == core && self.params.tie_break == Action::Breakout) => {
                (b, Action::Breakout)
            }
            _ => (core, Action::CoreNetwork),
        }
    }

    /// One application of the Bellman operator with the maximizing actions.
    pub fn backup(&self, v: &ValueFunction<F>) -> (ValueFunction<F>, Vec<Action>) {
        let (values, policy) = self
            .action_values(v)
            .into_iter()
            .map(|(bac, core)| self.choose(bac, core))
            .unzip();
        (ValueFunction { values }, policy)
    }

    /// Relative value iteration anchored at the empty queue.
    pub fn solve(&self) -> SolveResult<F> {
        let n = self.n_states();
        let floor = F::lit(RELATIVE_FLOOR);
        let mut value = ValueFunction::zeros(n);
        let mut policy = vec![Action::CoreNetwork; n];
        let mut gain = F::zero();
        let mut converged = false;
        let mut iterations = 0;

        while iterations < self.params.max_iterations {
            iterations += 1;
            let (mut next, greedy) = self.backup(&value);
            gain = next.values[0];
            for x in next.values.iter_mut() {
                *x = *x - gain;
            }
            // Sup-norm relative change; a per-state ratio never settles on
            // states whose relative value is round-off around zero.
            let step = next
                .values
                .iter()
                .zip(&value.values)
                .fold(F::zero(), |m, (&new, &old)| m.max((new - old).abs()));
            let change = step / value.max_abs().max(floor);
            value = next;
            policy = greedy;
            if change < self.params.epsilon {
                converged = true;
                break;
            }
        }

        let threshold = ThresholdReport::from_policy(&policy).index();
        SolveResult {
            value,
            policy,
            threshold,
            gain,
            iterations,
            converged,
        }
    }

    /// `max_s |T(V)(s) - V(s) - gain|`.
    pub fn bellman_residual(&self, value: &ValueFunction<F>, gain: F) -> F {
        let (tv, _) = self.backup(value);
        tv.values
            .iter()
            .zip(&value.values)
            .fold(F::zero(), |m, (&t, &v)| m.max((t - v - gain).abs()))
    }

    fn check_policy(&self, policy: &[Action]) -> Result<()> {
        if policy.len() != self.n_states() {
            return Err(Error::Config(format!(
                "policy has {} entries, expected {}",
                policy.len(),
                self.n_states()
            )));
        }
        if policy[self.params.buffer_size] == Action::Breakout {
            return Err(Error::InvalidAction {
                q_len: self.params.buffer_size,
            });
        }
        Ok(())
    }

    /// Dense transition matrix of the chain induced by a stationary policy.
    pub fn transition_matrix(&self, policy: &[Action]) -> Result<Vec<Vec<F>>> {
        self.check_policy(policy)?;
        Ok(policy
            .iter()
            .enumerate()
            .map(|(s, &a)| self.rows[s + a.increment()].probs.clone())
            .collect())
    }

    /// Stationary distribution of the policy's chain. The empty queue is
    /// reachable from every state, so the chain is unichain and the solution
    /// is unique.
    pub fn stationary_distribution(&self, policy: &[Action]) -> Result<Vec<F>> {
        let p = self.transition_matrix(policy)?;
        let n = p.len();
        // (P^T - I) pi = 0 with the last balance equation replaced by sum(pi) = 1.
        let mut a: Vec<Vec<F>> = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| if i == j { p[j][i] - F::one() } else { p[j][i] })
                    .collect()
            })
            .collect();
        a[n - 1] = vec![F::one(); n];
        let mut b = vec![F::zero(); n];
        b[n - 1] = F::one();
        let pi = solve_dense(a, b)
            .ok_or_else(|| Error::Config("singular stationary system".to_string()))?;
        Ok(pi.into_iter().map(|x| x.max(F::zero())).collect())
    }

    /// Exact long-run average reward of a stationary deterministic policy.
    pub fn policy_gain(&self, policy: &[Action]) -> Result<F> {
        let pi = self.stationary_distribution(policy)?;
        Ok(pi
            .iter()
            .zip(policy)
            .enumerate()
            .fold(F::zero(), |acc, (s, (&w, &a))| {
                acc + w * self.rewards.at(s, a)
            }))
    }
}

/// Gaussian elimination with partial pivoting.
fn solve_dense<F: Scalar>(mut a: Vec<Vec<F>>, mut b: Vec<F>) -> Option<Vec<F>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            a[i][col]
                .abs()
                .partial_cmp(&a[j][col].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if a[pivot][col].abs() <= F::min_positive_value() {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        let (upper, lower) = a.split_at_mut(col + 1);
        let prow = &upper[col];
        for (offset, row) in lower.iter_mut().enumerate() {
            let factor = row[col] / prow[col];
            if factor == F::zero() {
                continue;
            }
            for k in col..n {
                row[k] = row[k] - factor * prow[k];
            }
            b[col + 1 + offset] = b[col + 1 + offset] - factor * b[col];
        }
    }
    let mut x = vec![F::zero(); n];
    for i in (0..n).rev() {
        let tail = ((i + 1)..n).fold(F::zero(), |acc, k| acc + a[i][k] * x[k]);
        x[i] = (b[i] - tail) / a[i][i];
    }
    Some(x)
}

/// One Bellman backup of `v` with its maximizing actions.
pub fn bellman_backup<F: Scalar>(
    params: &SystemParams<F>,
    delay: &DelayModel<F>,
    v: &ValueFunction<F>,
) -> Result<(ValueFunction<F>, Vec<Action>)> {
    if v.values.len() != params.n_states() || v.values.iter().any(|x| !x.is_finite()) {
        return Err(Error::Config(format!(
            "value function must have {} finite entries",
            params.n_states()
        )));
    }
    Ok(MdpModel::new(params, delay)?.backup(v))
}

/// Solves the MDP. Non-convergence is reported through
/// `SolveResult::converged`, not as an error.
pub fn solve<F: Scalar>(params: &SystemParams<F>, delay: &DelayModel<F>) -> Result<SolveResult<F>> {
    Ok(MdpModel::new(params, delay)?.solve())
}

pub fn extract_threshold<F: Scalar>(result: &SolveResult<F>) -> Result<ThresholdReport> {
    if !result.converged {
        return Err(Error::NotConverged {
            iterations: result.iterations,
        });
    }
    Ok(ThresholdReport::from_policy(&result.policy))
}
