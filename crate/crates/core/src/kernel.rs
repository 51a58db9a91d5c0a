//! Queue state space and the arrival-epoch transition kernel.
//!
//! Between two consecutive arrivals the inter-arrival gap `n` is geometric
//! with parameter `p` (support `n >= 1`), and in each of those `n` slots the
//! backhaul completes one transmission with probability `q`. Starting from the
//! post-decision length `s' = q_len + u`, the number of completions is
//! `Binomial(n, q)` truncated at `s'`, so the whole kernel is generated by the
//! single sequence
//!
//! ```text
//! D(k) = sum_{n >= max(k,1)} p (1-p)^(n-1) C(n,k) q^k (1-q)^(n-k)
//! ```
//!
//! with `P{t | s'} = D(s' - t)` for `1 <= t <= s'` and the remaining mass on 0.

use rand::Rng;
use rand_distr::{Distribution, Geometric};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::special::xlogy;

/// Routing decision for an arriving packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Action {
    /// Enqueue on the local backhaul (`u = 1`).
    Breakout,
    /// Send through the core network (`u = 0`).
    CoreNetwork,
}

impl Action {
    /// Queue increment caused by the action.
    #[inline]
    pub fn increment(self) -> usize {
        match self {
            Action::Breakout => 1,
            Action::CoreNetwork => 0,
        }
    }

    pub fn short(self) -> char {
        match self {
            Action::Breakout => 'B',
            Action::CoreNetwork => 'C',
        }
    }
}

/// Model and solver constants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemParams<F> {
    /// Per-slot arrival probability.
    pub p: F,
    /// Per-slot backhaul departure probability.
    pub q: F,
    pub tau_ms: F,
    /// Delay budget of every packet, in slots.
    pub deadline_slots: usize,
    /// Largest representable backhaul queue length.
    pub buffer_size: usize,
    /// Reward for a packet delivered within its deadline.
    pub reward_unit: F,
    /// Relative stopping tolerance of value iteration.
    pub epsilon: F,
    /// Geometric tail mass at which the inter-arrival series is cut.
    pub tail_mass: F,
    pub max_iterations: u64,
    /// Action preferred when both have the same value.
    pub tie_break: Action,
}

impl<F: Scalar> Default for SystemParams<F> {
    fn default() -> Self {
        SystemParams {
            p: F::lit(0.05),
            q: F::lit(0.05),
            tau_ms: F::lit(0.02),
            deadline_slots: 965,
            buffer_size: 100,
            reward_unit: F::one(),
            epsilon: F::lit(1e-10),
            tail_mass: F::lit(1e-12),
            max_iterations: 100_000,
            tie_break: Action::Breakout,
        }
    }
}

impl<F: Scalar> SystemParams<F> {
    pub fn validate(&self) -> Result<()> {
        let open01 = |x: F| x > F::zero() && x < F::one();
        if !open01(self.p) {
            return Err(Error::param("p", format!("{} not in (0, 1)", self.p)));
        }
        if !(self.q > F::zero() && self.q <= F::one()) {
            return Err(Error::param("q", format!("{} not in (0, 1]", self.q)));
        }
        if !(self.tau_ms > F::zero() && self.tau_ms.is_finite()) {
            return Err(Error::param("tau_ms", "must be positive and finite"));
        }
        if self.deadline_slots == 0 {
            return Err(Error::param("deadline_slots", "must be at least 1"));
        }
        if self.buffer_size == 0 {
            return Err(Error::param("buffer_size", "must be at least 1"));
        }
        if !(self.reward_unit >= F::zero() && self.reward_unit.is_finite()) {
            return Err(Error::param(
                "reward_unit",
                "must be nonnegative and finite",
            ));
        }
        if !open01(self.epsilon) {
            return Err(Error::param(
                "epsilon",
                format!("{} not in (0, 1)", self.epsilon),
            ));
        }
        if !open01(self.tail_mass) {
            return Err(Error::param(
                "tail_mass",
                format!("{} not in (0, 1)", self.tail_mass),
            ));
        }
        if self.max_iterations == 0 {
            return Err(Error::param("max_iterations", "must be at least 1"));
        }
        Ok(())
    }

    /// Deadline expressed in milliseconds.
    pub fn deadline_ms(&self) -> F {
        F::from_usize_lossy(self.deadline_slots) * self.tau_ms
    }

    /// Number of queue states, `buffer_size + 1`.
    pub fn n_states(&self) -> usize {
        self.buffer_size + 1
    }

    pub(crate) fn check_state(&self, state: QueueState) -> Result<()> {
        if state.0 > self.buffer_size {
            return Err(Error::InvalidState {
                q_len: state.0,
                buffer_size: self.buffer_size,
            });
        }
        Ok(())
    }

    /// Queue length right after `action` is applied in `state`.
    pub(crate) fn post_decision(&self, state: QueueState, action: Action) -> Result<usize> {
        self.check_state(state)?;
        if action == Action::Breakout && state.0 == self.buffer_size {
            return Err(Error::InvalidAction { q_len: state.0 });
        }
        Ok(state.0 + action.increment())
    }
}

/// Backhaul queue length seen by an arriving packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct QueueState(pub usize);

impl QueueState {
    #[inline]
    pub fn len(self) -> usize {
        self.0
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.0 == 0
    }
}

/// Distribution of the queue length at the next arrival epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionRow<F> {
    /// Indexed by next queue length, `buffer_size + 1` entries.
    pub probs: Vec<F>,
}

impl<F: Scalar> TransitionRow<F> {
    pub fn sum(&self) -> F {
        self.probs.iter().fold(F::zero(), |a, &b| a + b)
    }

    /// Expectation of `values` under this row.
    #[inline]
    pub fn expect(&self, values: &[F]) -> F {
        self.probs
            .iter()
            .zip(values)
            .fold(F::zero(), |acc, (&w, &v)| acc + w * v)
    }
}

/// Precomputed departure-count distribution `D(0..=max_k)` over one
/// inter-arrival gap.
#[derive(Debug, Clone)]
pub struct DepartureKernel<F> {
    departures: Vec<F>,
    n_states: usize,
}

impl<F: Scalar> DepartureKernel<F> {
    /// Builds `D(k)` for every `k` needed by post-decision lengths up to
    /// `buffer_size`.
    pub fn new(params: &SystemParams<F>) -> Result<Self> {
        params.validate()?;
        Ok(Self::with_max_departures(params, params.buffer_size))
    }

    fn with_max_departures(params: &SystemParams<F>, max_k: usize) -> Self {
        let departures = (0..max_k).map(|k| departure_mass(params, k)).collect();
        DepartureKernel {
            departures,
            n_states: params.n_states(),
        }
    }

    /// `D(k)`: probability of exactly `k` completions over one gap, ignoring the
    /// empty-queue boundary.
    pub fn departures(&self) -> &[F] {
        &self.departures
    }

    /// Row for post-decision queue length `post`.
    pub fn row(&self, post: usize) -> TransitionRow<F> {
        assert!(
            post < self.n_states,
            "post-decision length {post} beyond buffer"
        );
        assert!(
            post <= self.departures.len(),
            "kernel built for fewer departures"
        );
        let mut probs = vec![F::zero(); self.n_states];
        let mut above_zero = F::zero();
        for t in 1..=post {
            let m = self.departures[post - t];
            probs[t] = m;
            above_zero = above_zero + m;
        }
        probs[0] = (F::one() - above_zero).max(F::zero());
        TransitionRow { probs }
    }
}

/// One term of the series per inter-arrival gap `n`, accumulated in log space so
/// that `q^k` for large `k` does not underflow before the binomial factor
/// compensates.
fn departure_mass<F: Scalar>(params: &SystemParams<F>, k: usize) -> F {
    let p = params.p;
    let q = params.q;
    let ln_p = p.ln();
    let ln_1mp = (F::one() - p).ln();
    let kf = F::from_usize_lossy(k);
    let k_ln_q = xlogy(kf, q);
    let one_minus_q = F::one() - q;
    let tail = params.tail_mass;

    let mut n = k.max(1);
    let mut ln_choose = F::zero(); // C(k, k) = 1 and C(1, 0) = 1
    let mut sum = F::zero();
    loop {
        let nf = F::from_usize_lossy(n);
        let rest = nf - kf;
        if !(one_minus_q == F::zero() && rest > F::zero()) {
            let ln_term =
                ln_p + (nf - F::one()) * ln_1mp + ln_choose + k_ln_q + xlogy(rest, one_minus_q);
            sum = sum + ln_term.exp();
        }
        // Remaining geometric mass beyond this gap length.
        if (nf * ln_1mp).exp() < tail {
            break;
        }
        let next = F::from_usize_lossy(n + 1);
        ln_choose = ln_choose + next.ln() - (next - kf).ln();
        n += 1;
    }
    sum
}

/// Next-epoch distribution of the queue length from `state` under `action`.
pub fn transition_row<F: Scalar>(
    params: &SystemParams<F>,
    state: QueueState,
    action: Action,
) -> Result<TransitionRow<F>> {
    params.validate()?;
    let post = params.post_decision(state, action)?;
    Ok(DepartureKernel::with_max_departures(params, post).row(post))
}

/// Draws the queue length at the next arrival epoch by simulating the gap
/// slot by slot.
pub fn sample_epoch<F: Scalar, R: Rng + ?Sized>(
    params: &SystemParams<F>,
    state: QueueState,
    action: Action,
    rng: &mut R,
) -> Result<QueueState> {
    params.validate()?;
    let mut queue = params.post_decision(state, action)?;
    let gap = Geometric::new(params.p.as_f64())
        .map_err(|e| Error::param("p", e.to_string()))?
        .sample(rng)
        + 1;
    let q = params.q.as_f64();
    for _ in 0..gap {
        if queue == 0 {
            break;
        }
        if rng.random::<f64>() < q {
            queue -= 1;
        }
    }
    Ok(QueueState(queue.min(params.buffer_size)))
}
