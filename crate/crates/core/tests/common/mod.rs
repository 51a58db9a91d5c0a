//! Independent oracles for the integration and acceptance tests. Nothing here
//! calls into the series, tail sums, special functions or value iteration
//! that the library uses.
#![allow(dead_code)]

use breakout::kernel::SystemParams;
use breakout::Action;
use nalgebra::{DMatrix, DVector};

/// Closed form of the departure-count mass over one geometric gap:
/// with `x = (1-p)(1-q)`, `sum_{n>=k} C(n,k) x^n = x^k / (1-x)^(k+1)` gives
/// `D(k) = p/(1-p) ((1-p) q)^k / (1-x)^(k+1)`, minus the `n = 0` term when `k = 0`.
pub fn departure_closed_form(p: f64, q: f64, k: usize) -> f64 {
    let x = (1.0 - p) * (1.0 - q);
    let ki = k as i32;
    let full = p / (1.0 - p) * ((1.0 - p) * q).powi(ki) / (1.0 - x).powi(ki + 1);
    if k == 0 {
        full - p / (1.0 - p)
    } else {
        full
    }
}

/// Dense next-state distribution from post-decision length `post`.
pub fn row_closed_form(p: f64, q: f64, n_states: usize, post: usize) -> Vec<f64> {
    let mut row = vec![0.0; n_states];
    for t in 1..=post {
        row[t] = departure_closed_form(p, q, post - t);
    }
    row[0] = 1.0 - row[1..].iter().sum::<f64>();
    row
}

/// Backhaul success by enumerating every departure pattern over the deadline.
pub fn p_bac_enumerated(deadline: usize, q: f64, q_len: usize) -> f64 {
    let mut total = 0.0;
    for mask in 0u32..(1u32 << deadline) {
        let departures = mask.count_ones() as usize;
        let w = q.powi(departures as i32) * (1.0 - q).powi((deadline - departures) as i32);
        if departures > q_len {
            total += w;
        }
    }
    total
}

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for i in 0..7 {
        let dx = h * XGK[i];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[i] * s;
        if i % 2 == 1 {
            gauss += WG[i / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

/// Adaptive Gauss-Kronrod quadrature to absolute tolerance `tol`.
pub fn integrate(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
        let (v, err) = gk15(f, a, b);
        if err <= tol || depth > 40 {
            return v;
        }
        let m = 0.5 * (a + b);
        rec(f, a, m, tol / 2.0, depth + 1) + rec(f, m, b, tol / 2.0, depth + 1)
    }
    if b <= a {
        return 0.0;
    }
    rec(f, a, b, tol, 0)
}

pub struct DelayParams {
    pub alpha: f64,
    pub lambda: f64,
    pub mu: f64,
    pub sigma: f64,
}

impl DelayParams {
    pub fn defaults() -> Self {
        DelayParams {
            alpha: 0.5,
            lambda: 0.05,
            mu: 30.0,
            sigma: 5.0,
        }
    }

    pub fn gauss_pdf(&self, t: f64) -> f64 {
        let z = (t - self.mu) / self.sigma;
        (-0.5 * z * z).exp() / (self.sigma * (2.0 * std::f64::consts::PI).sqrt())
    }

    /// Exponential-Gaussian convolution evaluated by quadrature over the
    /// exponential variable.
    pub fn conv_pdf(&self, t: f64) -> f64 {
        let lo = (t - self.mu - 12.0 * self.sigma).max(0.0);
        let hi = (t - self.mu + 12.0 * self.sigma).max(0.0);
        let f = |u: f64| self.lambda * (-self.lambda * u).exp() * self.gauss_pdf(t - u);
        integrate(&f, lo, hi, 1e-14)
    }

    pub fn density(&self, t: f64) -> f64 {
        self.alpha * self.gauss_pdf(t) + (1.0 - self.alpha) * self.conv_pdf(t)
    }

    /// `int_0^t density`, by quadrature.
    pub fn cdf(&self, t: f64) -> f64 {
        integrate(&|s| self.density(s), 0.0, t, 1e-12)
    }

    /// CDF of the delay conditioned on being nonnegative.
    pub fn truncated_cdf(&self, t: f64) -> f64 {
        let far = self.mu + 40.0 * self.sigma + 60.0 / self.lambda;
        self.cdf(t) / self.cdf(far)
    }
}

/// Evaluates every stationary deterministic policy (breakout forbidden at a
/// full buffer) through its stationary distribution and returns
/// `(best gain, all (policy, gain))`.
pub fn enumerate_policies(
    params: &SystemParams<f64>,
    r_bac: &[f64],
    r_cn: f64,
) -> (f64, Vec<(Vec<Action>, f64)>) {
    let n = params.buffer_size + 1;
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|s| row_closed_form(params.p, params.q, n, s))
        .collect();
    let mut all = Vec::new();
    for mask in 0u32..(1u32 << params.buffer_size) {
        let policy: Vec<Action> = (0..n)
            .map(|s| {
                if s < params.buffer_size && mask & (1 << s) != 0 {
                    Action::Breakout
                } else {
                    Action::CoreNetwork
                }
            })
            .collect();
        let p = DMatrix::from_fn(n, n, |i, j| rows[i + policy[i].increment()][j]);
        let gain = stationary(&p)
            .iter()
            .zip(&policy)
            .enumerate()
            .map(|(s, (w, a))| {
                w * if *a == Action::Breakout {
                    r_bac[s]
                } else {
                    r_cn
                }
            })
            .sum::<f64>();
        all.push((policy, gain));
    }
    let best = all
        .iter()
        .map(|(_, g)| *g)
        .fold(f64::NEG_INFINITY, f64::max);
    (best, all)
}

/// Stationary distribution via LU on `(P^T - I)` with a normalization row.
pub fn stationary(p: &DMatrix<f64>) -> DVector<f64> {
    let n = p.nrows();
    let mut a = p.transpose() - DMatrix::identity(n, n);
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    a.lu()
        .solve(&b)
        .expect("unichain stationary system is nonsingular")
}

/// Pearson chi-square statistic and degrees of freedom; adjacent bins are
/// merged until each expects at least 5 counts.
pub fn chi_square(observed: &[u64], expected_probs: &[f64], total: u64) -> (f64, usize) {
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let (mut o_acc, mut e_acc) = (0.0, 0.0);
    for (&o, &pr) in observed.iter().zip(expected_probs) {
        o_acc += o as f64;
        e_acc += pr * total as f64;
        if e_acc >= 5.0 {
            bins.push((o_acc, e_acc));
            o_acc = 0.0;
            e_acc = 0.0;
        }
    }
    if let Some(last) = bins.last_mut() {
        last.0 += o_acc;
        last.1 += e_acc;
    }
    let stat = bins.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    (stat, bins.len().saturating_sub(1))
}

/// Kolmogorov-Smirnov distance of a sample to a CDF.
pub fn ks_distance(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

pub fn print_criterion(id: &str, pass: bool, detail: &str) {
    println!("{id}: {} -- {detail}", if pass { "PASS" } else { "FAIL" });
}
