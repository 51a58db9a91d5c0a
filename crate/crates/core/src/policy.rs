//! Routing policies materialized as per-state lookup tables.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::delay::DelayModel;
use crate::error::{Error, Result};
use crate::kernel::{Action, QueueState, SystemParams};
use crate::scalar::Scalar;
use crate::solver::{MdpModel, SolveResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicySpec {
    /// Optimal stationary policy from relative value iteration.
    MdpOptimal,
    /// Larger one-step reward wins.
    Myopic,
    AlwaysBreakout,
    AlwaysCore,
    /// Breakout strictly below the given queue length.
    FixedThreshold(usize),
}

impl fmt::Display for PolicySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PolicySpec::MdpOptimal => f.write_str("mdp_optimal"),
            PolicySpec::Myopic => f.write_str("myopic"),
            PolicySpec::AlwaysBreakout => f.write_str("always_breakout"),
            PolicySpec::AlwaysCore => f.write_str("always_core"),
            PolicySpec::FixedThreshold(k) => write!(f, "fixed_threshold_{k}"),
        }
    }
}

/// A policy bound to one parameter point. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyTable {
    pub spec: PolicySpec,
    actions: Vec<Action>,
}

impl PolicyTable {
    /// Wraps an explicit table; the last entry is forced to the core network.
    pub fn from_actions(spec: PolicySpec, mut actions: Vec<Action>) -> Self {
        if let Some(last) = actions.last_mut() {
            *last = Action::CoreNetwork;
        }
        PolicyTable { spec, actions }
    }

    #[inline]
    pub fn decide(&self, state: QueueState) -> Action {
        self.actions
            .get(state.0)
            .copied()
            .unwrap_or(Action::CoreNetwork)
    }

    pub fn actions(&self) -> &[Action] {
        &self.actions
    }

    pub fn buffer_size(&self) -> usize {
        self.actions.len() - 1
    }
}

pub fn decide(table: &PolicyTable, state: QueueState) -> Action {
    table.decide(state)
}

fn threshold_table(n_states: usize, k: usize) -> Vec<Action> {
    (0..n_states)
        .map(|s| {
            if s < k {
                Action::Breakout
            } else {
                Action::CoreNetwork
            }
        })
        .collect()
}

/// Binds against a prebuilt model, reusing `solved` for `MdpOptimal` when given.
pub fn bind_with_model<F: Scalar>(
    spec: PolicySpec,
    model: &MdpModel<F>,
    solved: Option<&SolveResult<F>>,
) -> Result<PolicyTable> {
    let n = model.n_states();
    let actions = match spec {
        PolicySpec::AlwaysBreakout => threshold_table(n, n),
        PolicySpec::AlwaysCore => threshold_table(n, 0),
        PolicySpec::FixedThreshold(k) => threshold_table(n, k),
        PolicySpec::Myopic => {
            let r = model.rewards();
            let prefer_breakout = model.params().tie_break == Action::Breakout;
            r.r_bac
                .iter()
                .map(|&b| {
                    if b > r.r_cn || (b == r.r_cn && prefer_breakout) {
                        Action::Breakout
                    } else {
                        Action::CoreNetwork
                    }
                })
                .collect()
        }
        PolicySpec::MdpOptimal => {
            let owned;
            let res = match solved {
                Some(r) => r,
                None => {
                    owned = model.solve();
                    &owned
                }
            };
            if !res.converged {
                return Err(Error::NotConverged {
                    iterations: res.iterations,
                });
            }
            res.policy.clone()
        }
    };
    Ok(PolicyTable::from_actions(spec, actions))
}

pub fn bind<F: Scalar>(
    spec: PolicySpec,
    params: &SystemParams<F>,
    delay: &DelayModel<F>,
) -> Result<PolicyTable> {
    bind_with_model(spec, &MdpModel::new(params, delay)?, None)
}
