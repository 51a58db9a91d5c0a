//! Per-path success probabilities.
//!
//! The backhaul succeeds when the tagged packet and the `q_len` packets ahead
//! of it all depart within the deadline. The core-network delay is a mixture
//! of a Gaussian (router processing) and an exponential-plus-Gaussian
//! convolution (exponentially modified Gaussian, EMG).

use rand::Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{QueueState, SystemParams};
use crate::scalar::Scalar;
use crate::special::{ln_norm_cdf, norm_cdf, xlogy};

/// Below this Gaussian mass at `t < 0` the truncation to `t >= 0` is ignored.
const NEGATIVE_MASS_CUTOFF: f64 = 1e-9;

/// Core-network delay distribution, in milliseconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DelayModel<F> {
    /// Weight of the pure Gaussian component.
    pub alpha: F,
    /// Rate of the exponential component, per millisecond.
    pub exp_rate_per_ms: F,
    pub gauss_mean_ms: F,
    pub gauss_std_ms: F,
}

impl<F: Scalar> Default for DelayModel<F> {
    /// Mixture with a 40 ms mean: `30 + (1 - 0.5) / 0.05`.
    fn default() -> Self {
        DelayModel {
            alpha: F::lit(0.5),
            exp_rate_per_ms: F::lit(0.05),
            gauss_mean_ms: F::lit(30.0),
            gauss_std_ms: F::lit(5.0),
        }
    }
}

impl<F: Scalar> DelayModel<F> {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha >= F::zero() && self.alpha <= F::one()) {
            return Err(Error::param(
                "alpha",
                format!("{} not in [0, 1]", self.alpha),
            ));
        }
        for (name, v) in [
            ("exp_rate_per_ms", self.exp_rate_per_ms),
            ("gauss_mean_ms", self.gauss_mean_ms),
            ("gauss_std_ms", self.gauss_std_ms),
        ] {
            if !(v > F::zero() && v.is_finite()) {
                return Err(Error::param(
                    name,
                    format!("{v} must be positive and finite"),
                ));
            }
        }
        Ok(())
    }

    /// Mean of the untruncated mixture, `mu + (1 - alpha) / lambda`.
    pub fn mean_ms(&self) -> F {
        self.gauss_mean_ms + (F::one() - self.alpha) / self.exp_rate_per_ms
    }

    /// Gaussian mass below zero, `Phi(-mu / sigma)`.
    pub fn negative_gauss_mass(&self) -> F {
        norm_cdf(-self.gauss_mean_ms / self.gauss_std_ms)
    }

    fn truncated(&self) -> bool {
        self.negative_gauss_mass() > F::lit(NEGATIVE_MASS_CUTOFF)
    }

    /// Mixture CDF on the whole real line, before truncation at zero.
    pub fn raw_cdf(&self, t_ms: F) -> F {
        let z = (t_ms - self.gauss_mean_ms) / self.gauss_std_ms;
        let gauss = norm_cdf(z);
        let emg = emg_cdf(z, self.exp_rate_per_ms * self.gauss_std_ms);
        (self.alpha * gauss + (F::one() - self.alpha) * emg)
            .max(F::zero())
            .min(F::one())
    }

    /// Delay CDF on `t >= 0`.
    pub fn cdf(&self, t_ms: F) -> F {
        if t_ms < F::zero() {
            return F::zero();
        }
        let raw = self.raw_cdf(t_ms);
        if self.truncated() {
            let at_zero = self.raw_cdf(F::zero());
            ((raw - at_zero) / (F::one() - at_zero))
                .max(F::zero())
                .min(F::one())
        } else {
            raw
        }
    }

    /// One delay draw; negative draws are rejected and redrawn.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> F {
        DelaySampler::new(self).sample(rng)
    }
}

/// EMG CDF in standardized coordinates: `z = (t - mu)/sigma`, `ls = lambda * sigma`.
///
/// `F(z) = Phi(z) - exp(-ls z + ls^2/2 + ln Phi(z - ls))`, the second term
/// assembled in log space so it stays finite when `Phi(z - ls)` underflows.
fn emg_cdf<F: Scalar>(z: F, ls: F) -> F {
    let ln_corr = -ls * z + F::lit(0.5) * ls * ls + ln_norm_cdf(z - ls);
    (norm_cdf(z) - ln_corr.exp()).max(F::zero())
}

/// Pre-built `rand_distr` samplers for the delay mixture.
#[derive(Debug, Clone, Copy)]
pub struct DelaySampler {
    alpha: f64,
    gauss: Normal<f64>,
    exp: Exp<f64>,
}

impl DelaySampler {
    pub fn new<F: Scalar>(model: &DelayModel<F>) -> Self {
        DelaySampler {
            alpha: model.alpha.as_f64(),
            gauss: Normal::new(model.gauss_mean_ms.as_f64(), model.gauss_std_ms.as_f64())
                .expect("validated gaussian parameters"),
            exp: Exp::new(model.exp_rate_per_ms.as_f64()).expect("validated exponential rate"),
        }
    }

    pub fn sample_f64<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        loop {
            let gauss = self.gauss.sample(rng);
            let t = if rng.random::<f64>() < self.alpha {
                gauss
            } else {
                gauss + self.exp.sample(rng)
            };
            if t >= 0.0 {
                return t;
            }
        }
    }

    pub fn sample<F: Scalar, R: Rng + ?Sized>(&self, rng: &mut R) -> F {
        F::lit(self.sample_f64(rng))
    }
}

/// Rewards of the two paths at one queue state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathReward<F> {
    pub r_bac: F,
    pub r_cn: F,
}

/// Probability that a packet arriving to `q_len` queued packets departs
/// within the deadline: `P(Binomial(deadline_slots, q) >= q_len + 1)`.
pub fn p_bac<F: Scalar>(params: &SystemParams<F>, state: QueueState) -> Result<F> {
    params.validate()?;
    params.check_state(state)?;
    Ok(binomial_upper_tail(
        params.deadline_slots,
        params.q,
        state.0 + 1,
    ))
}

/// `p_bac` for every state `0..=buffer_size`.
pub fn p_bac_curve<F: Scalar>(params: &SystemParams<F>) -> Result<Vec<F>> {
    params.validate()?;
    let tails = binomial_tails(params.deadline_slots, params.q);
    Ok((0..params.n_states())
        .map(|s| tails.get(s + 1).copied().unwrap_or(F::zero()))
        .collect())
}

fn binomial_upper_tail<F: Scalar>(trials: usize, q: F, at_least: usize) -> F {
    binomial_tails(trials, q)
        .get(at_least)
        .copied()
        .unwrap_or(F::zero())
}

/// `tails[j] = P(X >= j)` for `X ~ Binomial(trials, q)`, `j = 0..=trials`.
/// The pmf is built in log space and the tails summed smallest-first.
fn binomial_tails<F: Scalar>(trials: usize, q: F) -> Vec<F> {
    let nf = F::from_usize_lossy(trials);
    let one_minus_q = F::one() - q;
    // ln C(n, j), accumulated up to n/2 and mirrored so both ends are exact.
    let mut ln_choose = vec![F::zero(); trials + 1];
    for j in 1..=trials / 2 {
        let jf = F::from_usize_lossy(j);
        ln_choose[j] = ln_choose[j - 1] + (nf - jf + F::one()).ln() - jf.ln();
    }
    for j in trials / 2 + 1..=trials {
        ln_choose[j] = ln_choose[trials - j];
    }
    let pmf: Vec<F> = (0..=trials)
        .map(|j| {
            let jf = F::from_usize_lossy(j);
            (ln_choose[j] + xlogy(jf, q) + xlogy(nf - jf, one_minus_q)).exp()
        })
        .collect();
    let mut tails = vec![F::zero(); trials + 1];
    let mut acc = F::zero();
    for j in (0..=trials).rev() {
        acc = acc + pmf[j];
        tails[j] = acc.min(F::one());
    }
    tails
}

/// Core-network success probability `P(delay <= deadline)`; independent of
/// the queue.
pub fn cn_success<F: Scalar>(params: &SystemParams<F>, model: &DelayModel<F>) -> F {
    model.cdf(params.deadline_ms())
}

pub fn cn_delay_cdf<F: Scalar>(model: &DelayModel<F>, t_ms: F) -> F {
    model.cdf(t_ms)
}

pub fn cn_delay_sample<F: Scalar, R: Rng + ?Sized>(model: &DelayModel<F>, rng: &mut R) -> F {
    model.sample(rng)
}

pub fn rewards<F: Scalar>(
    params: &SystemParams<F>,
    model: &DelayModel<F>,
    state: QueueState,
) -> Result<PathReward<F>> {
    model.validate()?;
    let bac = p_bac(params, state)?;
    Ok(PathReward {
        r_bac: bac * params.reward_unit,
        r_cn: cn_success(params, model) * params.reward_unit,
    })
}

/// Reward curves over the whole state space, as used by the solver.
#[derive(Debug, Clone, PartialEq)]
pub struct RewardTable<F> {
    pub r_bac: Vec<F>,
    pub r_cn: F,
}

impl<F: Scalar> RewardTable<F> {
    pub fn new(params: &SystemParams<F>, model: &DelayModel<F>) -> Result<Self> {
        model.validate()?;
        let r_bac = p_bac_curve(params)?
            .into_iter()
            .map(|x| x * params.reward_unit)
            .collect();
        Ok(RewardTable {
            r_bac,
            r_cn: cn_success(params, model) * params.reward_unit,
        })
    }

    #[inline]
    pub fn at(&self, state: usize, action: crate::kernel::Action) -> F {
        match action {
            crate::kernel::Action::Breakout => self.r_bac[state],
            crate::kernel::Action::CoreNetwork => self.r_cn,
        }
    }
}
