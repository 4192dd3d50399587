//! Estimation error, in closed form and by Monte Carlo.
//!
//! Everything here measures the same quantity: the expected squared L2 error
//! `E || Xhat - X ||^2` of the server's averaged estimate, where the
//! expectation runs over the encoders' randomness. The closed forms follow
//! from per-coordinate variances (nodes are independent, and within a node
//! the error is the sum of coordinate variances):
//!
//! * variable-size support: `(1/n^2) sum_ij (1/p(i,j) - 1) (x(i,j) - mu(i))^2`,
//! * fixed-size support:    `(1/n^2) ((d-k)/k) sum_ij (x(i,j) - mu(i))^2`,
//! * three-value quantizer: enumerate the three outcomes per coordinate.
//!
//! [`mse_bounds`] sandwiches the best achievable error under an entry budget
//! and pins it down exactly in the regime where the budget is small relative
//! to the data's spread.
//!
//! Sums over all `n * d` terms use pairwise summation so that closed-form
//! identities hold to near machine precision even at large `n * d`.

use crate::codec::{EncoderParams, EncoderSpec, TernaryParams};
use crate::data::Dataset;
use crate::rng::RngState;
use crate::{codec, Error, Result};

/// Pairwise (cascade) summation: error grows like `log2 len` rather than
/// `len` ulps.
pub(crate) fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Deviations of a dataset from per-node centers, the raw material of every
/// error formula: `sum_sq` is the summed squared deviation, `sum_abs` the
/// summed absolute deviation, `support` counts nonzero deviations and
/// `max_abs` is the largest one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpreadStats {
    pub sum_sq: f64,
    pub sum_abs: f64,
    pub support: usize,
    pub max_abs: f64,
}

pub fn spread_stats(x: &Dataset, centers: &[f64]) -> Result<SpreadStats> {
    if centers.len() != x.n() {
        return Err(Error::DimensionMismatch { expected: x.n(), got: centers.len() });
    }
    let devs: Vec<f64> = x
        .rows()
        .zip(centers)
        .flat_map(|(row, &c)| row.iter().map(move |v| v - c))
        .collect();
    let sq: Vec<f64> = devs.iter().map(|a| a * a).collect();
    let abs: Vec<f64> = devs.iter().map(|a| a.abs()).collect();
    Ok(SpreadStats {
        sum_sq: pairwise_sum(&sq),
        sum_abs: pairwise_sum(&abs),
        support: devs.iter().filter(|a| **a != 0.0).count(),
        max_abs: abs.iter().cloned().fold(0.0, f64::max),
    })
}

/// Closed-form error of the variable-size support encoder.
///
/// A zero keep probability is only admissible where the data already equals
/// the center; anywhere else it would make the error infinite.
pub fn mse_closed_variable(x: &Dataset, params: &EncoderParams) -> Result<f64> {
    if params.n() != x.n() || params.d() != x.d() {
        return Err(Error::DimensionMismatch { expected: x.n() * x.d(), got: params.n() * params.d() });
    }
    let mut terms = Vec::with_capacity(x.n() * x.d());
    for i in 0..x.n() {
        let c = params.center(i);
        for (j, &v) in x.row(i).iter().enumerate() {
            if v == c {
                terms.push(0.0);
                continue;
            }
            let p = params.prob(i, j);
            if p == 0.0 {
                return Err(Error::UnbiasednessViolation { node: i, coord: j });
            }
            terms.push((1.0 / p - 1.0) * (v - c) * (v - c));
        }
    }
    let n = x.n() as f64;
    Ok(pairwise_sum(&terms) / (n * n))
}

/// Closed-form error of the fixed-size support encoder with `k` kept
/// coordinates per node.
pub fn mse_closed_fixed(x: &Dataset, k: usize, centers: &[f64]) -> Result<f64> {
    if k == 0 || k > x.d() {
        return Err(Error::InvalidArgument(format!("k={k} outside 1..={}", x.d())));
    }
    let stats = spread_stats(x, centers)?;
    let n = x.n() as f64;
    Ok((x.d() - k) as f64 / k as f64 * stats.sum_sq / (n * n))
}

/// Closed-form error of the three-value quantizer on a single vector,
/// obtained by enumerating the outcome distribution of every coordinate.
pub fn mse_closed_ternary(x: &[f64], params: &TernaryParams) -> Result<f64> {
    if params.d() != x.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: params.d() });
    }
    let terms: Vec<f64> = x
        .iter()
        .enumerate()
        .map(|(j, &v)| {
            let (pl, ph) = (params.p_low[j], params.p_high[j]);
            let q = 1.0 - pl - ph;
            let mid = (v - pl * params.low - ph * params.high) / q;
            let second = pl * params.low * params.low + ph * params.high * params.high + q * mid * mid;
            second - v * v
        })
        .collect();
    Ok(pairwise_sum(&terms))
}

/// Variable-size parameters that reproduce the binary quantizer: center at
/// each node's min, keep probability proportional to the distance from it.
pub fn binary_params(x: &Dataset) -> Result<EncoderParams> {
    let mut probs = Vec::with_capacity(x.n() * x.d());
    let mut centers = Vec::with_capacity(x.n());
    for row in x.rows() {
        let lo = row.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let span = hi - lo;
        centers.push(lo);
        if span == 0.0 {
            probs.extend(std::iter::repeat(0.0).take(x.d()));
        } else {
            probs.extend(row.iter().map(|v| (v - lo) / span));
        }
    }
    EncoderParams::new(x.n(), x.d(), probs, centers)
}

/// Monte Carlo estimate of the squared error with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MseReport {
    pub mse: f64,
    pub std_error: f64,
    pub trials: usize,
}

/// Run `trials` independent encode/decode rounds and average the squared
/// error against the true mean. Fully determined by `seed`; trial `t` uses
/// the derived stream `(seed, t)`, so reports are reproducible and trials
/// are statistically independent.
pub fn mse_empirical(
    x: &Dataset,
    enc: &EncoderSpec,
    trials: usize,
    seed: u64,
) -> Result<MseReport> {
    if trials < 100 {
        return Err(Error::InvalidArgument(format!(
            "{trials} trials cannot support an error bar; use at least 100"
        )));
    }
    let truth = x.mean();
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for t in 0..trials {
        let mut rng = RngState::derive(seed, t as u64);
        let mut encoded = Vec::with_capacity(x.n());
        for i in 0..x.n() {
            encoded.push(enc.encode_node(i, x.row(i), &mut rng)?);
        }
        let estimate = codec::decode_average(&encoded)?;
        let err: f64 = estimate
            .iter()
            .zip(&truth)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        sum += err;
        sum_sq += err * err;
    }
    let t = trials as f64;
    let mse = sum / t;
    let var = (sum_sq - t * mse * mse).max(0.0) / (t - 1.0);
    Ok(MseReport { mse, std_error: (var / t).sqrt(), trials })
}

/// Sandwich on the best error achievable with an expected-entry budget.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MseBounds {
    pub lower: f64,
    pub upper: f64,
    /// The optimum itself, known whenever the budget is at most
    /// `sum_abs / max_abs` (no keep probability wants to exceed one).
    pub exact: Option<f64>,
}

/// Bounds on the optimal variable-size error when the expected number of
/// kept entries across all nodes is `budget`.
///
/// Writing `R = sum_sq`, `W = sum_abs` and `s = support`, the optimum lies in
/// `[(1/B - 1) R, (s/B - 1) R] / n^2` and equals `(W^2/B - R) / n^2` when
/// `B <= W / max_abs`.
pub fn mse_bounds(stats: &SpreadStats, n: usize, budget: f64) -> Result<MseBounds> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be >= 1".into()));
    }
    if !(budget > 0.0 && budget <= stats.support as f64) {
        return Err(Error::InvalidArgument(format!(
            "budget {budget} outside (0, support={}]",
            stats.support
        )));
    }
    let nn = (n * n) as f64;
    let r = stats.sum_sq;
    let lower = (1.0 / budget - 1.0).max(0.0) * r / nn;
    let upper = (stats.support as f64 / budget - 1.0) * r / nn;
    let exact = (budget * stats.max_abs <= stats.sum_abs)
        .then(|| (stats.sum_abs * stats.sum_abs / budget - r) / nn);
    Ok(MseBounds { lower, upper, exact })
}
