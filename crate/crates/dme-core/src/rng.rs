//! Deterministic randomness.
//!
//! Everything stochastic in this crate draws from [`RngState`], a splitmix64
//! generator. The recurrence is fixed by two published constants, so any
//! implementation in any language that starts from the same seed produces the
//! same stream bit for bit. That portability is load-bearing: the seeded
//! sparse wire format transmits a seed instead of an index list, and the
//! server must regenerate exactly the subset the node sampled.

/// Splitmix64 generator state.
///
/// Single `u64` of state; advancing adds the golden-ratio increment and runs
/// the xor-shift-multiply finalizer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngState {
    state: u64,
}

impl RngState {
    pub fn new(seed: u64) -> Self {
        RngState { state: seed }
    }

    /// Next raw 64-bit output.
    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform `f64` in `[0, 1)` using the top 53 bits.
    #[inline]
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }

    /// Uniform `f64` strictly inside `(0, 1)`.
    ///
    /// Offsetting by half an ulp of the 53-bit grid keeps `ln` and division
    /// finite without rejection sampling.
    #[inline]
    pub fn next_open_f64(&mut self) -> f64 {
        ((self.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64
    }

    /// Bernoulli draw with success probability `p`.
    #[inline]
    pub fn next_bool(&mut self, p: f64) -> bool {
        self.next_f64() < p
    }

    /// Derive an independent stream for a sub-task (trial, node) from a
    /// master seed: offset the seed by the index and take one splitmix64
    /// output as the child seed.
    pub fn derive(master: u64, index: u64) -> RngState {
        // Mix each input through the generator separately; seeding from
        // `master + index` would alias (m, i+1) with (m+1, i).
        let a = RngState::new(master).next_u64();
        let b = RngState::new(index).next_u64();
        RngState::new(RngState::new(a ^ b.rotate_left(32)).next_u64())
    }
}

/// Sample a uniformly random `k`-subset of `{0, .., d-1}`, returned in
/// ascending order.
///
/// Partial Fisher-Yates over an index array, driven entirely by the seed.
/// Same `(seed, d, k)` always yields the same subset, which is the contract
/// the seeded sparse wire format relies on for server-side reconstruction.
pub fn sample_subset(seed: u64, d: usize, k: usize) -> crate::Result<Vec<usize>> {
    if k == 0 || k > d {
        return Err(crate::Error::InvalidArgument(format!(
            "subset size k={k} out of range 1..={d}"
        )));
    }
    let mut rng = RngState::new(seed);
    let mut idx: Vec<usize> = (0..d).collect();
    for i in 0..k {
        let j = i + (rng.next_u64() % (d - i) as u64) as usize;
        idx.swap(i, j);
    }
    idx.truncate(k);
    idx.sort_unstable();
    Ok(idx)
}

#[cfg(test)]
mod tests {
    use super::*;

    // Published splitmix64 test vector for seed 0.
    #[test]
    fn golden_seed_zero() {
        let mut r = RngState::new(0);
        assert_eq!(r.next_u64(), 0xE220_A839_7B1D_CDAF);
        assert_eq!(r.next_u64(), 0x6E78_9E6A_A1B9_65F4);
        assert_eq!(r.next_u64(), 0x06C4_5D18_8009_454F);
        assert_eq!(r.next_u64(), 0xF88B_B8A8_724C_81EC);
    }

    #[test]
    fn equal_seeds_equal_streams() {
        let mut a = RngState::new(0xDEAD_BEEF);
        let mut b = RngState::new(0xDEAD_BEEF);
        for _ in 0..1000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn adjacent_seeds_differ() {
        for s in [0u64, 1, 42, u64::MAX - 1] {
            let mut a = RngState::new(s);
            let mut b = RngState::new(s.wrapping_add(1));
            assert_ne!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn f64_ranges() {
        let mut r = RngState::new(7);
        for _ in 0..10_000 {
            let u = r.next_f64();
            assert!((0.0..1.0).contains(&u));
            let v = r.next_open_f64();
            assert!(v > 0.0 && v < 1.0);
        }
    }

    #[test]
    fn subset_full_set() {
        for seed in 0..20 {
            assert_eq!(sample_subset(seed, 4, 4).unwrap(), vec![0, 1, 2, 3]);
        }
    }

    #[test]
    fn subset_deterministic() {
        let a = sample_subset(7, 8, 3).unwrap();
        let b = sample_subset(7, 8, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn subset_rejects_bad_k() {
        assert!(sample_subset(1, 4, 0).is_err());
        assert!(sample_subset(1, 4, 5).is_err());
    }

    #[test]
    fn subset_properties() {
        for seed in 0..500 {
            let s = sample_subset(seed, 10, 4).unwrap();
            assert_eq!(s.len(), 4);
            assert!(s.windows(2).all(|w| w[0] < w[1]));
            assert!(s.iter().all(|&j| j < 10));
        }
    }

    // d=4, k=2: compare against exhaustive enumeration of the C(4,2)=6
    // subsets. Each should appear with frequency 1/6 up to binomial noise.
    #[test]
    fn subset_uniform_over_c42() {
        let all: Vec<Vec<usize>> = vec![
            vec![0, 1],
            vec![0, 2],
            vec![0, 3],
            vec![1, 2],
            vec![1, 3],
            vec![2, 3],
        ];
        let trials = 60_000usize;
        let mut counts = [0usize; 6];
        for seed in 0..trials {
            let s = sample_subset(seed as u64, 4, 2).unwrap();
            let pos = all.iter().position(|c| *c == s).unwrap();
            counts[pos] += 1;
        }
        let p = 1.0 / 6.0;
        let sigma = (trials as f64 * p * (1.0 - p)).sqrt();
        for &c in &counts {
            let dev = (c as f64 - trials as f64 * p).abs();
            assert!(dev <= 3.0 * sigma, "count {c} deviates {dev:.1} > 3sigma {sigma:.1}");
        }
    }

    // Marginal inclusion probability of each index is k/d.
    #[test]
    fn subset_marginal_inclusion() {
        let (d, k) = (8usize, 3usize);
        let trials = 100_000usize;
        let mut incl = [0usize; 8];
        for seed in 0..trials {
            for j in sample_subset(seed as u64, d, k).unwrap() {
                incl[j] += 1;
            }
        }
        let p = k as f64 / d as f64;
        let sigma = (trials as f64 * p * (1.0 - p)).sqrt();
        // chi-square against the uniform marginal, plus a per-index 4-sigma check
        let mut chi2 = 0.0;
        for &c in &incl {
            let dev = c as f64 - trials as f64 * p;
            assert!(dev.abs() <= 4.0 * sigma);
            chi2 += dev * dev / (trials as f64 * p * (1.0 - p));
        }
        // 7 effective dof; 99.99% quantile of chi2_7 is ~29.9
        assert!(chi2 < 29.9, "chi2 = {chi2}");
    }

    #[test]
    fn derive_is_deterministic_and_spreads() {
        let a = RngState::derive(42, 0);
        let b = RngState::derive(42, 0);
        assert_eq!(a, b);
        let c = RngState::derive(42, 1);
        assert_ne!(a, c);
    }
}
