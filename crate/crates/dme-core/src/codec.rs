//! Randomized encoders and the decoder.
//!
//! Every encoder produces an unbiased estimate of the input vector: a center
//! value `mu` plus a sparse set of surprise coordinates. A coordinate equal to
//! the center costs (almost) nothing to communicate, so the encoders trade
//! estimation variance for sparsity by keeping each coordinate only with some
//! probability and inflating it to compensate.
//!
//! Three families live here:
//!
//! * variable-size support: keep coordinate `j` with probability `p(j)`,
//!   sending `x(j)/p(j) - ((1-p(j))/p(j)) mu`; otherwise send `mu`,
//! * fixed-size support: keep exactly `k` coordinates chosen uniformly from a
//!   shared seed, sending `(d/k) x(j) - ((d-k)/k) mu` on the chosen set,
//! * binary quantization: a special case of variable-size with `mu = min(x)`
//!   and `p(j)` chosen so every kept coordinate lands exactly on `max(x)`.
//!
//! A three-value quantizer ([`encode_ternary`]) generalizes the two-point
//! schemes; it has no sparse wire representation, so it returns a dense vector
//! and is analyzed separately.

use crate::rng::{sample_subset, RngState};
use crate::{Error, Result};

/// Per-node centers and per-coordinate keep probabilities for the
/// variable-size encoder, shared with the closed-form analysis and the
/// optimizer.
///
/// Probabilities live in `[0, 1]`; `p = 0` is only sound on coordinates where
/// the input equals the center (the encoder enforces this at encode time).
#[derive(Debug, Clone, PartialEq)]
pub struct EncoderParams {
    n: usize,
    d: usize,
    probs: Vec<f64>, // row-major n x d
    centers: Vec<f64>,
}

impl EncoderParams {
    pub fn new(n: usize, d: usize, probs: Vec<f64>, centers: Vec<f64>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::InvalidArgument(format!("n={n}, d={d}: both must be >= 1")));
        }
        if probs.len() != n * d {
            return Err(Error::InvalidArgument(format!(
                "expected {} probabilities, got {}",
                n * d,
                probs.len()
            )));
        }
        if centers.len() != n {
            return Err(Error::DimensionMismatch { expected: n, got: centers.len() });
        }
        if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidArgument(format!("probability {p} outside [0, 1]")));
        }
        if let Some(c) = centers.iter().find(|c| !c.is_finite()) {
            return Err(Error::InvalidArgument(format!("non-finite center {c}")));
        }
        Ok(EncoderParams { n, d, probs, centers })
    }

    /// Same keep probability everywhere; `p` must be in `(0, 1]` here because
    /// a uniform zero keeps nothing.
    pub fn uniform(n: usize, d: usize, p: f64, centers: Vec<f64>) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidArgument(format!("uniform probability {p} outside (0, 1]")));
        }
        EncoderParams::new(n, d, vec![p; n * d], centers)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn prob(&self, i: usize, j: usize) -> f64 {
        self.probs[i * self.d + j]
    }

    pub fn probs_row(&self, i: usize) -> &[f64] {
        &self.probs[i * self.d..(i + 1) * self.d]
    }

    pub fn center(&self, i: usize) -> f64 {
        self.centers[i]
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }
}

/// Parameters of the three-value quantizer: two shared outcome values and
/// per-coordinate probabilities of hitting each.
#[derive(Debug, Clone, PartialEq)]
pub struct TernaryParams {
    pub low: f64,
    pub high: f64,
    pub p_low: Vec<f64>,
    pub p_high: Vec<f64>,
}

impl TernaryParams {
    pub fn new(low: f64, high: f64, p_low: Vec<f64>, p_high: Vec<f64>) -> Result<Self> {
        if !low.is_finite() || !high.is_finite() {
            return Err(Error::InvalidArgument("non-finite outcome value".into()));
        }
        if p_low.len() != p_high.len() {
            return Err(Error::DimensionMismatch { expected: p_low.len(), got: p_high.len() });
        }
        for (a, b) in p_low.iter().zip(&p_high) {
            if !(*a >= 0.0 && *b >= 0.0 && a + b < 1.0) {
                return Err(Error::InvalidArgument(format!(
                    "outcome probabilities ({a}, {b}) must be nonnegative with sum < 1"
                )));
            }
        }
        Ok(TernaryParams { low, high, p_low, p_high })
    }

    pub fn d(&self) -> usize {
        self.p_low.len()
    }
}

/// Seed and size of a fixed-size support set, carried alongside the encoded
/// vector so the seeded wire format can replay the subset choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FixedSupport {
    pub seed: u64,
    pub k: usize,
}

/// One node's encoded vector: every coordinate equals `center` except the
/// listed entries (ascending coordinate order).
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedVector {
    pub node_id: usize,
    pub d: usize,
    pub center: f64,
    pub entries: Vec<(usize, f64)>,
    /// Present iff this vector came from the fixed-size encoder.
    pub support: Option<FixedSupport>,
}

impl EncodedVector {
    pub fn new(
        node_id: usize,
        d: usize,
        center: f64,
        entries: Vec<(usize, f64)>,
        support: Option<FixedSupport>,
    ) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument("dimension must be >= 1".into()));
        }
        let mut prev = None;
        for &(j, v) in &entries {
            if j >= d {
                return Err(Error::InvalidArgument(format!("entry index {j} >= d={d}")));
            }
            if prev.is_some_and(|p| p >= j) {
                return Err(Error::InvalidArgument("entries must be strictly ascending".into()));
            }
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!("non-finite entry value {v}")));
            }
            prev = Some(j);
        }
        if !center.is_finite() {
            return Err(Error::InvalidArgument(format!("non-finite center {center}")));
        }
        Ok(EncodedVector { node_id, d, center, entries, support })
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![self.center; self.d];
        for &(j, v) in &self.entries {
            out[j] = v;
        }
        out
    }
}

/// Which encoder a simulated node runs; carries everything but the data.
#[derive(Debug, Clone, PartialEq)]
pub enum EncoderSpec {
    /// Send the vector as-is (center 0, every nonzero coordinate an entry).
    Identity,
    /// Variable-size support with explicit per-node parameters.
    Variable(EncoderParams),
    /// Fixed-size support: `k` kept coordinates per node, per-node centers.
    Fixed { k: usize, centers: Vec<f64> },
    /// Two-point quantization onto each node's own min and max.
    BinaryQuant,
}

impl EncoderSpec {
    pub fn name(&self) -> &'static str {
        match self {
            EncoderSpec::Identity => "identity",
            EncoderSpec::Variable(_) => "variable",
            EncoderSpec::Fixed { .. } => "fixed",
            EncoderSpec::BinaryQuant => "binary",
        }
    }

    pub fn encode_node(&self, node_id: usize, x: &[f64], rng: &mut RngState) -> Result<EncodedVector> {
        match self {
            EncoderSpec::Identity => {
                let entries = x
                    .iter()
                    .enumerate()
                    .filter(|(_, v)| **v != 0.0)
                    .map(|(j, v)| (j, *v))
                    .collect();
                EncodedVector::new(node_id, x.len(), 0.0, entries, None)
            }
            EncoderSpec::Variable(params) => {
                if node_id >= params.n() {
                    return Err(Error::InvalidArgument(format!(
                        "node {node_id} out of range for {}-node parameters",
                        params.n()
                    )));
                }
                encode_variable(node_id, x, params.center(node_id), params.probs_row(node_id), rng)
            }
            EncoderSpec::Fixed { k, centers } => {
                let center = *centers.get(node_id).ok_or(Error::DimensionMismatch {
                    expected: node_id + 1,
                    got: centers.len(),
                })?;
                encode_fixed(node_id, x, center, *k, rng)
            }
            EncoderSpec::BinaryQuant => encode_binary_quant(node_id, x, rng),
        }
    }
}

/// Variable-size support encoder: keep coordinate `j` with probability
/// `probs[j]`, replacing it by `x(j)/p - ((1-p)/p) center`; drop it to
/// `center` otherwise. Unbiased coordinate-wise.
pub fn encode_variable(
    node_id: usize,
    x: &[f64],
    center: f64,
    probs: &[f64],
    rng: &mut RngState,
) -> Result<EncodedVector> {
    if probs.len() != x.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: probs.len() });
    }
    let mut entries = Vec::new();
    for (j, (&v, &p)) in x.iter().zip(probs).enumerate() {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!("probability {p} outside [0, 1]")));
        }
        if p == 0.0 && v != center {
            // A never-kept coordinate decodes to the center, which is only
            // the right answer when the input already sits there.
            return Err(Error::UnbiasednessViolation { node: node_id, coord: j });
        }
        let keep = rng.next_bool(p);
        if keep && v != center {
            entries.push((j, v / p - ((1.0 - p) / p) * center));
        }
    }
    EncodedVector::new(node_id, x.len(), center, entries, None)
}

/// Fixed-size support encoder with a freshly drawn subset seed.
pub fn encode_fixed(
    node_id: usize,
    x: &[f64],
    center: f64,
    k: usize,
    rng: &mut RngState,
) -> Result<EncodedVector> {
    let seed = rng.next_u64();
    encode_fixed_with_seed(node_id, x, center, k, seed)
}

/// Fixed-size support encoder on the `k`-subset determined by `seed`: kept
/// coordinates become `(d/k) x(j) - ((d-k)/k) center`, the rest `center`.
pub fn encode_fixed_with_seed(
    node_id: usize,
    x: &[f64],
    center: f64,
    k: usize,
    seed: u64,
) -> Result<EncodedVector> {
    let d = x.len();
    let subset = sample_subset(seed, d, k)?;
    let scale = d as f64 / k as f64;
    let shift = (d - k) as f64 / k as f64;
    let entries = subset
        .iter()
        .filter(|&&j| x[j] != center)
        .map(|&j| (j, scale * x[j] - shift * center))
        .collect();
    EncodedVector::new(node_id, d, center, entries, Some(FixedSupport { seed, k }))
}

/// Binary quantizer: every coordinate becomes `min(x)` or `max(x)`, hitting
/// the max with probability `(x(j) - min) / (max - min)`. A flat vector
/// encodes as all-center with no entries.
pub fn encode_binary_quant(node_id: usize, x: &[f64], rng: &mut RngState) -> Result<EncodedVector> {
    if x.is_empty() {
        return Err(Error::InvalidArgument("cannot encode an empty vector".into()));
    }
    let lo = x.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = x.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let mut entries = Vec::new();
    if span > 0.0 {
        for (j, &v) in x.iter().enumerate() {
            if rng.next_bool((v - lo) / span) {
                entries.push((j, hi));
            }
        }
    }
    EncodedVector::new(node_id, x.len(), lo, entries, None)
}

/// Three-value quantizer: coordinate `j` becomes `low` with probability
/// `p_low(j)`, `high` with probability `p_high(j)`, and otherwise the value
/// that keeps the expectation equal to `x(j)`. Returns the dense outcome.
pub fn encode_ternary(x: &[f64], params: &TernaryParams, rng: &mut RngState) -> Result<Vec<f64>> {
    if params.d() != x.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: params.d() });
    }
    let mut out = Vec::with_capacity(x.len());
    for (j, &v) in x.iter().enumerate() {
        let (pl, ph) = (params.p_low[j], params.p_high[j]);
        let u = rng.next_f64();
        out.push(if u < pl {
            params.low
        } else if u < pl + ph {
            params.high
        } else {
            (v - pl * params.low - ph * params.high) / (1.0 - pl - ph)
        });
    }
    Ok(out)
}

/// Average the decoded vectors in slice order: the server's estimate of the
/// true mean.
pub fn decode_average(vectors: &[EncodedVector]) -> Result<Vec<f64>> {
    let first = vectors.first().ok_or_else(|| {
        Error::InvalidArgument("cannot average zero encoded vectors".into())
    })?;
    let d = first.d;
    let mut sum = vec![0.0; d];
    for v in vectors {
        if v.d != d {
            return Err(Error::DimensionMismatch { expected: d, got: v.d });
        }
        // Add the literal entry value, not center + (value - center): the
        // latter rounds twice and would break losslessness at p = 1.
        let mut entries = v.entries.iter().peekable();
        for (j, s) in sum.iter_mut().enumerate() {
            *s += match entries.peek() {
                Some(&&(ej, val)) if ej == j => {
                    entries.next();
                    val
                }
                _ => v.center,
            };
        }
    }
    let inv = 1.0 / vectors.len() as f64;
    sum.iter_mut().for_each(|s| *s *= inv);
    Ok(sum)
}

/// Randomized Hadamard rotation: pad to the next power of two `m`, flip signs
/// by a seeded diagonal, then apply the normalized Walsh-Hadamard transform.
/// Spreads any single spike across all coordinates while preserving the norm.
pub fn rotate(x: &[f64], seed: u64) -> Vec<f64> {
    let m = x.len().next_power_of_two().max(1);
    let mut y = vec![0.0; m];
    y[..x.len()].copy_from_slice(x);
    for (v, s) in y.iter_mut().zip(signs(seed, m)) {
        *v *= s;
    }
    fwht(&mut y);
    let scale = 1.0 / (m as f64).sqrt();
    y.iter_mut().for_each(|v| *v *= scale);
    y
}

/// Inverse of [`rotate`]: undo the transform and the sign flips, then drop the
/// padding back to the original dimension `d`.
pub fn unrotate(y: &[f64], seed: u64, d: usize) -> Result<Vec<f64>> {
    let m = y.len();
    if !m.is_power_of_two() || d > m || d.next_power_of_two().max(1) != m {
        return Err(Error::DimensionMismatch { expected: d.next_power_of_two().max(1), got: m });
    }
    let mut x = y.to_vec();
    fwht(&mut x);
    let scale = 1.0 / (m as f64).sqrt();
    for (v, s) in x.iter_mut().zip(signs(seed, m)) {
        *v *= scale * s;
    }
    x.truncate(d);
    Ok(x)
}

fn signs(seed: u64, m: usize) -> impl Iterator<Item = f64> {
    let mut rng = RngState::new(seed);
    (0..m).map(move |_| if rng.next_bool(0.5) { -1.0 } else { 1.0 })
}

/// In-place Walsh-Hadamard butterfly; caller handles normalization.
fn fwht(data: &mut [f64]) {
    debug_assert!(data.len().is_power_of_two());
    let mut h = 1;
    while h < data.len() {
        for chunk in data.chunks_exact_mut(2 * h) {
            let (lo, hi) = chunk.split_at_mut(h);
            for (a, b) in lo.iter_mut().zip(hi) {
                let (s, t) = (*a + *b, *a - *b);
                *a = s;
                *b = t;
            }
        }
        h *= 2;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mc_mean<F: FnMut(&mut RngState) -> Vec<f64>>(
        d: usize,
        trials: usize,
        seed: u64,
        mut f: F,
    ) -> Vec<f64> {
        let mut rng = RngState::new(seed);
        let mut acc = vec![0.0; d];
        for _ in 0..trials {
            for (a, v) in acc.iter_mut().zip(f(&mut rng)) {
                *a += v;
            }
        }
        acc.iter_mut().for_each(|a| *a /= trials as f64);
        acc
    }

    #[test]
    fn variable_encoder_is_unbiased() {
        let x = [1.0, -2.0, 0.5];
        let probs = [0.9, 0.4, 0.7];
        let center = 0.2;
        let trials = 200_000;
        let mean = mc_mean(3, trials, 11, |rng| {
            encode_variable(0, &x, center, &probs, rng).unwrap().to_dense()
        });
        for j in 0..3 {
            let var = (1.0 / probs[j] - 1.0) * (x[j] - center) * (x[j] - center);
            let tol = 4.0 * (var / trials as f64).sqrt();
            assert!((mean[j] - x[j]).abs() <= tol, "coord {j}: {} vs {}", mean[j], x[j]);
        }
    }

    #[test]
    fn fixed_encoder_is_unbiased() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let (center, k) = (2.5, 2);
        let trials = 200_000;
        let mean = mc_mean(4, trials, 12, |rng| {
            encode_fixed(0, &x, center, k, rng).unwrap().to_dense()
        });
        for j in 0..4 {
            let var = ((4 - k) as f64 / k as f64) * (x[j] - center) * (x[j] - center);
            let tol = 4.0 * (var / trials as f64).sqrt() + 1e-12;
            assert!((mean[j] - x[j]).abs() <= tol, "coord {j}: {} vs {}", mean[j], x[j]);
        }
    }

    #[test]
    fn binary_encoder_is_unbiased_and_two_valued() {
        let x = [0.0, 1.0, 4.0];
        let trials = 200_000;
        let mean = mc_mean(3, trials, 13, |rng| {
            let enc = encode_binary_quant(0, &x, rng).unwrap();
            for v in enc.to_dense() {
                assert!(v == 0.0 || v == 4.0);
            }
            enc.to_dense()
        });
        assert_eq!(mean[0], 0.0); // p = 0: never kept
        assert_eq!(mean[2], 4.0); // p = 1: always kept
        let var = 0.25 * 0.75 * 16.0;
        assert!((mean[1] - 1.0).abs() <= 4.0 * (var / trials as f64).sqrt());
    }

    #[test]
    fn ternary_encoder_matches_first_two_moments() {
        // One coordinate: outcomes 0 (p 1/4), 2 (p 1/4), else 1; second
        // moment 1.5, so the variance around x = 1 is 0.5.
        let params = TernaryParams::new(0.0, 2.0, vec![0.25], vec![0.25]).unwrap();
        let trials = 200_000;
        let mut rng = RngState::new(14);
        let (mut m1, mut m2) = (0.0, 0.0);
        for _ in 0..trials {
            let y = encode_ternary(&[1.0], &params, &mut rng).unwrap()[0];
            assert!(y == 0.0 || y == 1.0 || y == 2.0);
            m1 += y;
            m2 += y * y;
        }
        m1 /= trials as f64;
        m2 /= trials as f64;
        assert!((m1 - 1.0).abs() <= 4.0 * (0.5f64 / trials as f64).sqrt());
        let m2_se = (1.25f64 / trials as f64).sqrt(); // var(Y^2) = E[Y^4]-E[Y^2]^2
        assert!((m2 - 1.5).abs() <= 4.0 * m2_se, "second moment {m2}");
    }

    #[test]
    fn fixed_support_substitution_example() {
        // d = 4, k = 2 on X = (1, 2, 3, 4) with center 2.5: the kept
        // coordinates map x to 2x - 2.5, the rest drop to the center.
        let x = [1.0, 2.0, 3.0, 4.0];
        let seed = (0..10_000)
            .find(|&s| sample_subset(s, 4, 2).unwrap() == [0, 2])
            .expect("some seed selects {0, 2}");
        let enc = encode_fixed_with_seed(7, &x, 2.5, 2, seed).unwrap();
        assert_eq!(enc.to_dense(), vec![-0.5, 2.5, 3.5, 2.5]);
        assert_eq!(enc.support, Some(FixedSupport { seed, k: 2 }));
        assert_eq!(enc.node_id, 7);
    }

    #[test]
    fn binary_matches_variable_special_case() {
        // Binary quantization is variable-size support with center min(x) and
        // p = (x - min) / (max - min); same seed, same keep pattern.
        let x = [0.0, 1.0, 3.0, 4.0];
        let probs: Vec<f64> = x.iter().map(|v| v / 4.0).collect();
        for seed in 0..50 {
            let a = encode_binary_quant(0, &x, &mut RngState::new(seed)).unwrap();
            let b = encode_variable(0, &x, 0.0, &probs, &mut RngState::new(seed)).unwrap();
            let (da, db) = (a.to_dense(), b.to_dense());
            for (u, v) in da.iter().zip(&db) {
                assert!((u - v).abs() <= 1e-12 * v.abs().max(1.0), "{u} vs {v}");
            }
        }
    }

    #[test]
    fn flat_vector_encodes_as_pure_center() {
        let mut rng = RngState::new(5);
        let enc = encode_binary_quant(0, &[3.0; 6], &mut rng).unwrap();
        assert_eq!(enc.center, 3.0);
        assert!(enc.entries.is_empty());
        let enc = encode_variable(0, &[3.0; 6], 3.0, &[0.5; 6], &mut rng).unwrap();
        assert!(enc.entries.is_empty());
    }

    #[test]
    fn zero_probability_off_center_is_rejected() {
        let mut rng = RngState::new(6);
        let err = encode_variable(3, &[1.0, 2.0], 1.0, &[0.5, 0.0], &mut rng).unwrap_err();
        assert!(matches!(err, Error::UnbiasednessViolation { node: 3, coord: 1 }));
        // p = 0 where x equals the center is fine.
        assert!(encode_variable(3, &[1.0, 2.0], 2.0, &[0.5, 0.0], &mut rng).is_ok());
    }

    #[test]
    fn decode_average_recovers_identity_mean() {
        let rows = [vec![0.0, 2.0, -1.0], vec![4.0, 0.0, 3.0]];
        let encs: Vec<EncodedVector> = rows
            .iter()
            .enumerate()
            .map(|(i, r)| {
                EncoderSpec::Identity.encode_node(i, r, &mut RngState::new(0)).unwrap()
            })
            .collect();
        assert_eq!(decode_average(&encs).unwrap(), vec![2.0, 1.0, 1.0]);
    }

    #[test]
    fn decode_average_rejects_mixed_dimensions() {
        let a = EncodedVector::new(0, 3, 0.0, vec![], None).unwrap();
        let b = EncodedVector::new(1, 4, 0.0, vec![], None).unwrap();
        assert!(decode_average(&[a, b]).is_err());
        assert!(decode_average(&[]).is_err());
    }

    #[test]
    fn encoded_vector_validation() {
        assert!(EncodedVector::new(0, 4, 0.0, vec![(4, 1.0)], None).is_err());
        assert!(EncodedVector::new(0, 4, 0.0, vec![(2, 1.0), (1, 1.0)], None).is_err());
        assert!(EncodedVector::new(0, 4, f64::NAN, vec![], None).is_err());
        assert!(EncodedVector::new(0, 4, 0.0, vec![(1, 1.0), (3, -2.0)], None).is_ok());
    }

    #[test]
    fn encoders_are_seed_deterministic() {
        let x = [0.4, -1.2, 7.0, 0.0, 2.2];
        let probs = [0.3, 0.9, 0.5, 1.0, 0.2];
        let a = encode_variable(0, &x, 0.0, &probs, &mut RngState::new(42)).unwrap();
        let b = encode_variable(0, &x, 0.0, &probs, &mut RngState::new(42)).unwrap();
        assert_eq!(a, b);
        let c = encode_fixed(0, &x, 0.0, 2, &mut RngState::new(42)).unwrap();
        let e = encode_fixed(0, &x, 0.0, 2, &mut RngState::new(42)).unwrap();
        assert_eq!(c, e);
    }

    #[test]
    fn rotation_round_trips_and_preserves_norm() {
        for (d, seed) in [(1usize, 1u64), (3, 2), (8, 3), (500, 4)] {
            let x: Vec<f64> = (0..d).map(|j| (j as f64 * 0.7).sin() * 3.0).collect();
            let y = rotate(&x, seed);
            assert_eq!(y.len(), d.next_power_of_two());
            let nx: f64 = x.iter().map(|v| v * v).sum();
            let ny: f64 = y.iter().map(|v| v * v).sum();
            assert!((nx - ny).abs() <= 1e-9 * nx.max(1.0), "norm {nx} vs {ny}");
            let back = unrotate(&y, seed, d).unwrap();
            for (u, v) in x.iter().zip(&back) {
                assert!((u - v).abs() <= 1e-9, "{u} vs {v}");
            }
        }
    }

    #[test]
    fn rotation_spreads_a_spike() {
        let mut x = vec![0.0; 16];
        x[0] = 8.0;
        let y = rotate(&x, 9);
        // A spike spreads to equal magnitude 8 / sqrt(16) = 2 everywhere.
        for v in &y {
            assert!((v.abs() - 2.0).abs() <= 1e-12, "{v}");
        }
    }

    #[test]
    fn unrotate_rejects_wrong_lengths() {
        assert!(unrotate(&[0.0; 6], 0, 6).is_err()); // not a power of two
        assert!(unrotate(&[0.0; 8], 0, 3).is_err()); // 3 pads to 4, not 8
        assert!(unrotate(&[0.0; 4], 0, 3).is_ok());
    }

    #[test]
    fn params_validation() {
        assert!(EncoderParams::new(2, 2, vec![0.5; 4], vec![0.0; 2]).is_ok());
        assert!(EncoderParams::new(2, 2, vec![0.5; 3], vec![0.0; 2]).is_err());
        assert!(EncoderParams::new(2, 2, vec![1.5, 0.5, 0.5, 0.5], vec![0.0; 2]).is_err());
        assert!(EncoderParams::uniform(2, 2, 0.0, vec![0.0; 2]).is_err());
        assert!(TernaryParams::new(0.0, 2.0, vec![0.6], vec![0.5]).is_err());
        assert!(TernaryParams::new(0.0, 2.0, vec![0.25], vec![0.25]).is_ok());
    }
}
