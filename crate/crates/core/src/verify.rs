//! Exact oracles and statistical machinery for checking the samplers.
//!
//! Everything distributional is computed in exact rational arithmetic:
//! binomial and truncated-binomial mass functions over a common integer
//! denominator, tail masses, detailed balance as an integer identity, and
//! the finite-precision skip-law of the naive geometric generator. Floats
//! appear only when a statistic or distance is finally reported.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::arith::{self, Rational};
use crate::binomial::{alpha_minus, alpha_plus, TruncatedBinomialSpec};
use crate::generators::{EdgeList, GraphShape, RunMeta, VectorMatrix};
use crate::randomness::BitSource;

/// Memory guard for the exact pmf machinery.
pub const PMF_TRIALS_CAP: u64 = 10_000;
/// Memory guard for the quadratic-time reference generator.
pub const NAIVE_VERTEX_CAP: u64 = 1_000;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum VerifyError {
    #[error("N exceeds the exact-pmf cap of {PMF_TRIALS_CAP}")]
    PmfCapExceeded,
    #[error("n exceeds the reference-generator cap of {NAIVE_VERTEX_CAP}")]
    NaiveCapExceeded,
    #[error("probability must lie in [0, 1]")]
    ProbabilityOutOfRange,
    #[error("probability must lie strictly between 0 and 1")]
    ProbabilityNotInterior,
    #[error("histogram is empty")]
    EmptyHistogram,
    #[error("chi-square needs at least two pooled bins")]
    TooFewBins,
}

/// Probability mass function on a contiguous integer support, stored as
/// integer weights over one common denominator so the masses sum to one
/// exactly by construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactPmf {
    lo: u64,
    weights: Vec<BigInt>,
    total: BigInt,
}

impl ExactPmf {
    /// Builds a pmf from nonnegative weights; the denominator is their sum.
    pub fn from_weights(lo: u64, weights: Vec<BigInt>) -> Self {
        debug_assert!(weights.iter().all(|w| !w.is_negative()));
        let total = weights.iter().sum();
        ExactPmf { lo, weights, total }
    }

    pub fn support(&self) -> std::ops::RangeInclusive<u64> {
        self.lo..=self.lo + self.weights.len() as u64 - 1
    }

    /// Exact mass at `k`; zero outside the support.
    pub fn mass(&self, k: u64) -> Rational {
        match self.weight(k) {
            Some(w) => Rational::new(w.clone(), self.total.clone()),
            None => Rational::zero(),
        }
    }

    fn weight(&self, k: u64) -> Option<&BigInt> {
        k.checked_sub(self.lo)
            .and_then(|i| self.weights.get(i as usize))
    }

    pub fn total(&self) -> &BigInt {
        &self.total
    }

    /// Exact sum of all masses; one by construction.
    pub fn mass_sum(&self) -> Rational {
        Rational::new(self.weights.iter().sum(), self.total.clone())
    }
}

/// Counts per integer outcome.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Histogram {
    counts: BTreeMap<u64, u64>,
    total: u64,
}

impl Histogram {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn record(&mut self, k: u64) {
        *self.counts.entry(k).or_default() += 1;
        self.total += 1;
    }

    pub fn count(&self, k: u64) -> u64 {
        self.counts.get(&k).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.counts.iter().map(|(&k, &c)| (k, c))
    }
}

/// Exact binomial pmf for `N` trials: weights `C(N,k) pn^k qn^(N-k)` over
/// the denominator `pd^N`, built with the incremental ratio
/// `B(k+1)/B(k) = ((N-k)/(k+1)) * (p/(1-p))`.
pub fn binomial_pmf_exact(n: u64, p: &Rational) -> Result<ExactPmf, VerifyError> {
    if n > PMF_TRIALS_CAP {
        return Err(VerifyError::PmfCapExceeded);
    }
    if !p.is_positive() || *p >= Rational::one() {
        return Err(VerifyError::ProbabilityNotInterior);
    }
    let pn = p.numer();
    let qn = p.denom() - pn;
    let mut weights = Vec::with_capacity(n as usize + 1);
    let mut w = qn.pow(n as u32);
    weights.push(w.clone());
    for k in 0..n {
        // Each step is an exact multiply-divide: the result stays integral.
        w = w * (n - k) * pn / ((k + 1) * &qn);
        weights.push(w.clone());
    }
    let pmf = ExactPmf::from_weights(0, weights);
    debug_assert_eq!(pmf.total, p.denom().pow(n as u32));
    Ok(pmf)
}

/// Exact truncated pmf on the spec's interval: the binomial weights
/// restricted to `[lo, hi]` with the in-interval sum as denominator.
pub fn truncated_pmf(spec: &TruncatedBinomialSpec) -> Result<ExactPmf, VerifyError> {
    let n = spec
        .n_trials
        .to_u64()
        .ok_or(VerifyError::PmfCapExceeded)?;
    let full = binomial_pmf_exact(n, &spec.p)?;
    let lo = spec.lo.to_u64().expect("lo <= N");
    let hi = spec.hi.to_u64().expect("hi <= N");
    let weights = full.weights[lo as usize..=hi as usize].to_vec();
    Ok(ExactPmf::from_weights(lo, weights))
}

/// Exact probability that a `B(N, p)` draw falls outside `[lo, hi]`.
pub fn tail_mass(n: u64, p: &Rational, lo: u64, hi: u64) -> Result<Rational, VerifyError> {
    let full = binomial_pmf_exact(n, p)?;
    let outside: BigInt = full
        .weights
        .iter()
        .enumerate()
        .filter(|&(k, _)| (k as u64) < lo || (k as u64) > hi)
        .map(|(_, w)| w)
        .sum();
    Ok(Rational::new(outside, full.total))
}

/// Verifies detailed balance of the walk against the exact binomial
/// weights: `B(k-1) * alpha_plus(k-1) = B(k) * alpha_minus(k)` for every
/// interior `k` of the interval, as an exact integer identity.
pub fn check_detailed_balance(spec: &TruncatedBinomialSpec) -> Result<bool, VerifyError> {
    let n = spec
        .n_trials
        .to_u64()
        .ok_or(VerifyError::PmfCapExceeded)?;
    let full = binomial_pmf_exact(n, &spec.p)?;
    let lo = spec.lo.to_u64().expect("lo <= N");
    let hi = spec.hi.to_u64().expect("hi <= N");
    for k in (lo + 1)..=hi {
        let up = alpha_plus(spec, &BigInt::from(k - 1)).expect("k-1 in interval");
        let down = alpha_minus(spec, &BigInt::from(k)).expect("k in interval");
        let lhs = full.weight(k - 1).expect("in support") * up.numer() * down.denom();
        let rhs = full.weight(k).expect("in support") * down.numer() * up.denom();
        if lhs != rhs {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Total variation distance between an empirical histogram and an exact
/// pmf, `(1/2) * sum_k |h(k)/total - pmf(k)|`, including pmf mass at empty
/// bins and histogram mass outside the support. Exact until the final
/// float conversion.
pub fn tv_distance(h: &Histogram, pmf: &ExactPmf) -> Result<f64, VerifyError> {
    Ok(arith::to_f64(&tv_distance_exact(h, pmf)?))
}

pub fn tv_distance_exact(h: &Histogram, pmf: &ExactPmf) -> Result<Rational, VerifyError> {
    if h.total == 0 {
        return Err(VerifyError::EmptyHistogram);
    }
    let draws = BigInt::from(h.total);
    // |h(k)/draws - w(k)/total| = |h(k)*total - w(k)*draws| / (draws*total)
    let mut acc = BigInt::zero();
    for k in pmf.support() {
        let observed = BigInt::from(h.count(k)) * &pmf.total;
        let expected = pmf.weight(k).expect("in support") * &draws;
        acc += (observed - expected).abs();
    }
    for (k, c) in h.iter() {
        if pmf.weight(k).is_none() {
            acc += BigInt::from(c) * &pmf.total;
        }
    }
    Ok(Rational::new(acc, draws * &pmf.total * 2))
}

/// Pearson chi-square statistic of a histogram against an exact pmf.
///
/// Support bins are pooled left to right until each pooled bin has expected
/// count at least 5; a trailing remainder is merged into the last bin.
/// Returns the statistic and the degrees of freedom (bins - 1).
pub fn chi_square(h: &Histogram, pmf: &ExactPmf) -> Result<(f64, usize), VerifyError> {
    if h.total == 0 {
        return Err(VerifyError::EmptyHistogram);
    }
    let draws = h.total as f64;
    let mut bins: Vec<(f64, f64)> = Vec::new(); // (observed, expected)
    let mut acc_obs = 0.0;
    let mut acc_exp = 0.0;
    for k in pmf.support() {
        acc_obs += h.count(k) as f64;
        acc_exp += arith::to_f64(&pmf.mass(k)) * draws;
        if acc_exp >= 5.0 {
            bins.push((acc_obs, acc_exp));
            acc_obs = 0.0;
            acc_exp = 0.0;
        }
    }
    if acc_exp > 0.0 || acc_obs > 0.0 {
        match bins.last_mut() {
            Some(last) => {
                last.0 += acc_obs;
                last.1 += acc_exp;
            }
            None => bins.push((acc_obs, acc_exp)),
        }
    }
    if bins.len() < 2 {
        return Err(VerifyError::TooFewBins);
    }
    let stat = bins
        .iter()
        .map(|&(o, e)| (o - e) * (o - e) / e)
        .sum::<f64>();
    Ok((stat, bins.len() - 1))
}

/// 0.999 quantile of the chi-square distribution. Exact table values for
/// the degrees of freedom the test suites use, Wilson-Hilferty otherwise.
pub fn chi_square_quantile_999(df: usize) -> f64 {
    const TABLE: &[(usize, f64)] = &[
        (1, 10.827566170662733),
        (2, 13.815510557964274),
        (3, 16.26623619623813),
        (4, 18.46682695290317),
        (5, 20.515005652432873),
        (9, 27.877164871256568),
        (14, 36.12327368039813),
        (19, 43.82019596451753),
        (24, 51.17859777737739),
        (29, 58.301173489794905),
        (39, 72.0546629519878),
        (49, 85.35056460859305),
        (63, 103.44237731987324),
        (99, 148.23035916510173),
        (199, 266.38589537626206),
        (299, 380.2990280343895),
        (454, 552.8434295584824),
        (511, 615.5148626372387),
        (1023, 1168.4971641802174),
    ];
    if let Ok(i) = TABLE.binary_search_by_key(&df, |&(d, _)| d) {
        return TABLE[i].1;
    }
    // Wilson-Hilferty approximation, z_0.999 = 3.090232306167814.
    let v = df as f64;
    let z = 3.090232306167814;
    let t = 1.0 - 2.0 / (9.0 * v) + z * (2.0 / (9.0 * v)).sqrt();
    v * t * t * t
}

/// Quadratic-time reference generator: one exact Bernoulli per vertex pair.
/// Zero distributional error; the oracle the fast generators are tested
/// against.
pub fn naive_exact_gnp(
    n: u64,
    p: &Rational,
    src: &mut BitSource,
) -> Result<EdgeList, VerifyError> {
    if n > NAIVE_VERTEX_CAP {
        return Err(VerifyError::NaiveCapExceeded);
    }
    if p.is_negative() || *p > Rational::one() {
        return Err(VerifyError::ProbabilityOutOfRange);
    }
    let mut edges = Vec::new();
    for u in 0..n {
        for v in (u + 1)..n {
            if src.bernoulli_exact(p).expect("p validated") {
                edges.push((u, v));
            }
        }
    }
    let count = edges.len() as u64;
    Ok(EdgeList {
        shape: GraphShape::Undirected { n },
        edges,
        meta: RunMeta {
            seed_hex: src.seed_hex(),
            eps: None,
            coupling_steps: 0,
            counters: vec![("edges", count)],
        },
    })
}

/// Draws one waiting time of the geometric-skip generator with the uniform
/// variate quantized to `bits` binary digits: `r = j * 2^-bits` for uniform
/// `j`, and the skip is the smallest `s >= 1` with `1 - (1-p)^s > r`,
/// found by exact comparison. The quantization of `r` is the only
/// approximation.
pub fn sample_quantized_skip(p: &Rational, bits: u32, src: &mut BitSource) -> u64 {
    debug_assert!(p.is_positive() && *p < Rational::one());
    let j = src
        .uniform_below(&(BigInt::one() << bits))
        .expect("2^bits >= 1");
    // 1 - q^s > j/2^b  <=>  qn^s * 2^b < qd^s * (2^b - j)
    let qn = p.denom() - p.numer();
    let qd = p.denom();
    let scale = (BigInt::one() << bits) - j;
    let mut lhs = (&qn) << bits;
    let mut rhs = qd * &scale;
    let mut s = 1u64;
    while lhs >= rhs {
        lhs *= &qn;
        rhs *= qd;
        s += 1;
    }
    s
}

/// Reproduces the classic skip-based generator with `bits`-bit uniform
/// variates. With enough bits it is exact; with few bits, long skips are
/// simply unreachable, which is the bias [`max_skip_bound`] quantifies.
pub fn skip_baseline_gnp(
    n: u64,
    p: &Rational,
    bits: u32,
    src: &mut BitSource,
) -> Result<EdgeList, VerifyError> {
    if !p.is_positive() || *p >= Rational::one() {
        return Err(VerifyError::ProbabilityNotInterior);
    }
    let mut edges: Vec<(u64, u64)> = Vec::new();
    let mut v: u64 = 1;
    let mut w: i128 = -1;
    while v < n {
        w += sample_quantized_skip(p, bits, src) as i128;
        while w >= v as i128 && v < n {
            w -= v as i128;
            v += 1;
        }
        if v < n {
            edges.push((w as u64, v));
        }
    }
    edges.sort_unstable();
    let count = edges.len() as u64;
    Ok(EdgeList {
        shape: GraphShape::Undirected { n },
        edges,
        meta: RunMeta {
            seed_hex: src.seed_hex(),
            eps: None,
            coupling_steps: 0,
            counters: vec![("edges", count), ("precision_bits", bits as u64)],
        },
    })
}

/// Largest skip the quantized generator can produce and the exact
/// probability mass the true geometric law places beyond it.
///
/// `kmax` is the skip generated by the largest representable variate
/// `(2^b - 1) * 2^-b`; `missing_mass = (1-p)^kmax`.
pub fn max_skip_bound(p: &Rational, bits: u32) -> Result<(u64, Rational), VerifyError> {
    if !p.is_positive() || *p >= Rational::one() {
        return Err(VerifyError::ProbabilityNotInterior);
    }
    // Smallest s with q^s < 2^-b, by exact comparison.
    let qn = p.denom() - p.numer();
    let qd = p.denom();
    let mut num = qn.clone();
    let mut den = qd.clone();
    let mut s = 1u64;
    while (&num << bits) >= den {
        num *= &qn;
        den *= qd;
        s += 1;
    }
    Ok((s, Rational::new(num, den)))
}

/// Exact distribution of the quantized skip: the count of variates mapping
/// to each skip value, over the denominator `2^bits`.
pub fn quantized_skip_law(p: &Rational, bits: u32) -> Result<ExactPmf, VerifyError> {
    let (kmax, _) = max_skip_bound(p, bits)?;
    let qn = p.denom() - p.numer();
    let qd = p.denom();
    let pow2 = BigInt::one() << bits;
    // Variates in [2^b (1 - q^(s-1)), 2^b (1 - q^s)) map to skip s.
    let boundary = |s: u64| -> BigInt {
        let qns = qn.pow(s as u32);
        let qds = qd.pow(s as u32);
        ((&qds - qns) * &pow2).div_ceil(&qds)
    };
    let mut weights = Vec::with_capacity(kmax as usize);
    let mut prev = BigInt::zero();
    for s in 1..=kmax {
        let next = if s == kmax { pow2.clone() } else { boundary(s) };
        weights.push(&next - &prev);
        prev = next;
    }
    Ok(ExactPmf::from_weights(1, weights))
}

/// Exact total variation between the quantized skip law and the true
/// geometric waiting-time law, including the unreachable tail.
pub fn skip_law_tv(p: &Rational, bits: u32) -> Result<Rational, VerifyError> {
    let law = quantized_skip_law(p, bits)?;
    let q = Rational::one() - p;
    let mut acc = Rational::zero();
    let mut geom = p.clone(); // P(skip = s) = q^(s-1) p
    for s in law.support() {
        let diff = law.mass(s) - &geom;
        acc += diff.abs();
        geom *= &q;
    }
    // The true law's mass beyond kmax, where the baseline puts zero.
    let kmax = *law.support().end();
    let tail = Rational::new(
        (p.denom() - p.numer()).pow(kmax as u32),
        p.denom().pow(kmax as u32),
    );
    Ok((acc + tail) / arith::ratio(2, 1))
}

/// Checks `d * sum_{u<v} <w_u, w_v>  >=  sum_{u<v} sqrt(S_u S_v)` for a
/// nonnegative vector matrix, exactly.
///
/// Radicals that are perfect squares are moved to the rational side; the
/// rest are bracketed by scaled integer square roots and the brackets are
/// refined until they separate the two sides. A sum of irrational square
/// roots can never equal the rational left side, so the refinement
/// terminates.
pub fn check_length_product_bound(matrix: &VectorMatrix) -> bool {
    let n = matrix.vertex_count();
    let mut lhs = Rational::zero();
    for u in 0..n {
        for v in (u + 1)..n {
            lhs += matrix.inner_product(u, v);
        }
    }
    lhs *= Rational::from_integer(BigInt::from(matrix.dim() as u64));

    // Each radicand is S_u * S_v = (a/b); sqrt = sqrt(a*b) / b.
    let mut exact = Rational::zero();
    let mut radicals: Vec<(BigInt, BigInt)> = Vec::new(); // (a*b, b)
    for u in 0..n {
        for v in (u + 1)..n {
            let r = matrix.squared_length(u) * matrix.squared_length(v);
            if r.is_zero() {
                continue;
            }
            let ab = r.numer() * r.denom();
            let root = ab.sqrt();
            if &root * &root == ab {
                exact += Rational::new(root, r.denom().clone());
            } else {
                radicals.push((ab, r.denom().clone()));
            }
        }
    }
    let target = lhs - exact;
    if radicals.is_empty() {
        return target >= Rational::zero();
    }
    let mut shift = 8u32;
    loop {
        let mut lower = Rational::zero();
        let mut upper = Rational::zero();
        for (ab, b) in &radicals {
            let scaled = (ab << (2 * shift)).sqrt();
            let den = b << shift;
            lower += Rational::new(scaled.clone(), den.clone());
            upper += Rational::new(scaled + 1, den);
        }
        if target >= upper {
            return true;
        }
        if target < lower {
            return false;
        }
        shift *= 2;
        assert!(shift <= 1 << 16, "radical brackets failed to separate");
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::ratio;
    use crate::binomial::{build_spec, chain_step};

    #[test]
    fn binomial_pmf_small_cases() {
        let pmf = binomial_pmf_exact(1, &ratio(1, 3)).unwrap();
        assert_eq!(pmf.mass(0), ratio(2, 3));
        assert_eq!(pmf.mass(1), ratio(1, 3));
        assert_eq!(pmf.mass_sum(), ratio(1, 1));

        let pmf = binomial_pmf_exact(15, &ratio(1, 3)).unwrap();
        // B(5; 15, 1/3) = 3003 * 2^10 / 3^15.
        assert_eq!(pmf.mass(5), ratio(3003 * 1024, 14_348_907));
        assert_eq!(pmf.mass_sum(), ratio(1, 1));
        assert_eq!(*pmf.total(), BigInt::from(3u64).pow(15));
    }

    #[test]
    fn binomial_pmf_guards() {
        assert_eq!(
            binomial_pmf_exact(PMF_TRIALS_CAP + 1, &ratio(1, 2)),
            Err(VerifyError::PmfCapExceeded)
        );
        assert_eq!(
            binomial_pmf_exact(5, &ratio(1, 1)),
            Err(VerifyError::ProbabilityNotInterior)
        );
    }

    #[test]
    fn truncated_pmf_full_interval_matches_plain_binomial() {
        let spec = build_spec(&BigInt::from(15), &ratio(1, 3), &ratio(1, 100)).unwrap();
        assert_eq!(spec.lo, BigInt::zero());
        assert_eq!(spec.hi, BigInt::from(15));
        let truncated = truncated_pmf(&spec).unwrap();
        let full = binomial_pmf_exact(15, &ratio(1, 3)).unwrap();
        for k in 0..=15u64 {
            assert_eq!(truncated.mass(k), full.mass(k));
        }
    }

    #[test]
    fn truncated_pmf_scales_interior_masses() {
        let spec = build_spec(&BigInt::from(1000), &ratio(999, 1000), &ratio(1, 100)).unwrap();
        let truncated = truncated_pmf(&spec).unwrap();
        let full = binomial_pmf_exact(1000, &ratio(999, 1000)).unwrap();
        let lo = spec.lo.to_u64().unwrap();
        let hi = spec.hi.to_u64().unwrap();
        let tail = tail_mass(1000, &ratio(999, 1000), lo, hi).unwrap();
        assert!(tail.is_positive());
        let scale = (ratio(1, 1) - tail).recip();
        for k in [lo, (lo + hi) / 2, hi] {
            assert_eq!(truncated.mass(k), full.mass(k) * &scale);
            assert!(truncated.mass(k) > full.mass(k));
        }
        assert_eq!(truncated.mass_sum(), ratio(1, 1));
    }

    #[test]
    fn tail_mass_cases() {
        assert_eq!(tail_mass(10, &ratio(1, 2), 0, 10).unwrap(), ratio(0, 1));
        // P(B(2, 1/2) = 2 or 0) = 1/2.
        assert_eq!(tail_mass(2, &ratio(1, 2), 1, 1).unwrap(), ratio(1, 2));
    }

    #[test]
    fn fact1_tail_bound_holds_on_grid() {
        for &n in &[15u64, 100, 1000] {
            for p in [ratio(1, 1000), ratio(1, 3), ratio(1, 2), ratio(7, 10), ratio(999, 1000)] {
                for eps in [ratio(1, 10), ratio(1, 100)] {
                    let spec = build_spec(&BigInt::from(n), &p, &eps).unwrap();
                    let tail = tail_mass(
                        n,
                        &p,
                        spec.lo.to_u64().unwrap(),
                        spec.hi.to_u64().unwrap(),
                    )
                    .unwrap();
                    assert!(tail < eps, "N={n} p={p} eps={eps}: tail {tail}");
                }
            }
        }
    }

    #[test]
    fn detailed_balance_examples() {
        let spec = build_spec(&BigInt::from(15), &ratio(1, 3), &ratio(1, 100)).unwrap();
        assert!(check_detailed_balance(&spec).unwrap());
        let spec = build_spec(&BigInt::from(100), &ratio(7, 10), &ratio(1, 100)).unwrap();
        assert!(check_detailed_balance(&spec).unwrap());
    }

    #[test]
    fn detailed_balance_detects_perturbation() {
        // Scaling one acceptance ratio by (1 + 1e-9) must break the exact
        // identity at k = mu_bar + 1.
        let spec = build_spec(&BigInt::from(15), &ratio(1, 3), &ratio(1, 100)).unwrap();
        let full = binomial_pmf_exact(15, &ratio(1, 3)).unwrap();
        let k = 6u64;
        let up = alpha_plus(&spec, &BigInt::from(k - 1)).unwrap()
            * ratio(1_000_000_001, 1_000_000_000);
        let down = alpha_minus(&spec, &BigInt::from(k)).unwrap();
        let lhs = full.weight(k - 1).unwrap() * up.numer() * down.denom();
        let rhs = full.weight(k).unwrap() * down.numer() * up.denom();
        assert_ne!(lhs, rhs);
    }

    #[test]
    fn stationarity_exact_matrix_vector_product() {
        // One exact transition applied to the truncated pmf returns it.
        for (n, p) in [(15u64, ratio(1, 3)), (100, ratio(7, 10)), (200, ratio(1, 2))] {
            let spec = build_spec(&BigInt::from(n), &p, &ratio(1, 100)).unwrap();
            let pmf = truncated_pmf(&spec).unwrap();
            let lo = spec.lo.to_u64().unwrap();
            let hi = spec.hi.to_u64().unwrap();
            for k in lo..=hi {
                let stay = ratio(1, 1)
                    - alpha_plus(&spec, &BigInt::from(k)).unwrap() / ratio(4, 1)
                    - alpha_minus(&spec, &BigInt::from(k)).unwrap() / ratio(4, 1);
                let mut mass = pmf.mass(k) * stay;
                if k > lo {
                    mass += pmf.mass(k - 1)
                        * alpha_plus(&spec, &BigInt::from(k - 1)).unwrap()
                        / ratio(4, 1);
                }
                if k < hi {
                    mass += pmf.mass(k + 1)
                        * alpha_minus(&spec, &BigInt::from(k + 1)).unwrap()
                        / ratio(4, 1);
                }
                assert_eq!(mass, pmf.mass(k), "N={n} k={k}");
            }
        }
    }

    #[test]
    fn tv_distance_cases() {
        // A histogram exactly proportional to the pmf has distance zero.
        let pmf = binomial_pmf_exact(2, &ratio(1, 2)).unwrap();
        let mut h = Histogram::new();
        for (k, c) in [(0u64, 100u64), (1, 200), (2, 100)] {
            for _ in 0..c {
                h.record(k);
            }
        }
        assert_eq!(tv_distance_exact(&h, &pmf).unwrap(), ratio(0, 1));

        // All mass on one point against a uniform two-point law: 1/2.
        let uniform = ExactPmf::from_weights(0, vec![BigInt::one(), BigInt::one()]);
        let mut h = Histogram::new();
        h.record(0);
        assert_eq!(tv_distance_exact(&h, &uniform).unwrap(), ratio(1, 2));

        // Histogram mass outside the support counts in full.
        let mut h = Histogram::new();
        h.record(7);
        assert_eq!(tv_distance_exact(&h, &uniform).unwrap(), ratio(1, 1));

        assert_eq!(
            tv_distance(&Histogram::new(), &uniform),
            Err(VerifyError::EmptyHistogram)
        );
    }

    #[test]
    fn chain_samples_match_truncated_pmf_smoke() {
        let spec = build_spec(&BigInt::from(15), &ratio(1, 3), &ratio(1, 100)).unwrap();
        let pmf = truncated_pmf(&spec).unwrap();
        let mut src = BitSource::from_u64_seed(2718);
        let mut h = Histogram::new();
        for _ in 0..20_000 {
            let (k, _) = crate::binomial::sample_truncated_binomial(&spec, &mut src);
            h.record(k.to_u64().unwrap());
        }
        let tv = tv_distance(&h, &pmf).unwrap();
        assert!(tv <= 0.05, "tv {tv}");
    }

    #[test]
    fn chi_square_statistic_cases() {
        // Synthetic histogram equal to the expectation: statistic zero.
        let pmf = ExactPmf::from_weights(0, vec![BigInt::from(1u32); 4]);
        let mut h = Histogram::new();
        for k in 0..4u64 {
            for _ in 0..250 {
                h.record(k);
            }
        }
        let (stat, df) = chi_square(&h, &pmf).unwrap();
        assert_eq!(stat, 0.0);
        assert_eq!(df, 3);
    }

    #[test]
    fn chi_square_uniform_draws_and_power() {
        // Uniform draws against the uniform pmf stay under the 0.999
        // quantile; deliberately biased draws blow past it.
        let pmf = ExactPmf::from_weights(0, vec![BigInt::from(1u32); 20]);
        let mut src = BitSource::from_u64_seed(31415);
        let mut h = Histogram::new();
        for _ in 0..100_000 {
            h.record(src.uniform_below_u64(20).unwrap());
        }
        let (stat, df) = chi_square(&h, &pmf).unwrap();
        assert_eq!(df, 19);
        assert!(stat < chi_square_quantile_999(df), "stat {stat}");

        let mut biased = Histogram::new();
        for _ in 0..100_000 {
            let v = src.uniform_below_u64(20).unwrap();
            // Shift 5% of the mass from high outcomes onto outcome 0.
            let v = if v >= 19 { 0 } else { v };
            biased.record(v);
        }
        let (stat, _) = chi_square(&biased, &pmf).unwrap();
        assert!(stat > chi_square_quantile_999(19), "stat {stat}");
    }

    #[test]
    fn chi_square_pools_sparse_bins() {
        // Heavily skewed pmf: the tiny-bin tail must be pooled, not split.
        let pmf = ExactPmf::from_weights(
            0,
            vec![BigInt::from(1000u32), BigInt::from(1u32), BigInt::from(1u32)],
        );
        let mut h = Histogram::new();
        for _ in 0..1002 {
            h.record(0);
        }
        // Expected: bin0 ~ 1000, bins 1-2 pooled ~ 2 < 5 -> merged into bin0
        // leaves a single bin, which is degenerate.
        assert_eq!(chi_square(&h, &pmf), Err(VerifyError::TooFewBins));
    }

    #[test]
    fn naive_gnp_reference_behaviour() {
        let mut src = BitSource::from_u64_seed(6);
        let complete = naive_exact_gnp(5, &ratio(1, 1), &mut src).unwrap();
        assert_eq!(complete.edge_count(), 10);
        assert!(naive_exact_gnp(NAIVE_VERTEX_CAP + 1, &ratio(1, 2), &mut src).is_err());

        // Per-edge frequency at 3 sigma over 20k graphs on 4 vertices.
        let mut counts = vec![0u64; 6];
        let runs = 20_000u64;
        for _ in 0..runs {
            let g = naive_exact_gnp(4, &ratio(1, 3), &mut src).unwrap();
            for &(u, v) in &g.edges {
                let idx = crate::subset::rank_pair(&BigInt::from(u), &BigInt::from(v))
                    .to_usize()
                    .unwrap();
                counts[idx] += 1;
            }
        }
        let sigma = (runs as f64 * (1.0 / 3.0) * (2.0 / 3.0)).sqrt();
        for &c in &counts {
            assert!((c as f64 - runs as f64 / 3.0).abs() <= 3.0 * sigma);
        }
    }

    #[test]
    fn naive_gnp_edge_count_law() {
        let mut src = BitSource::from_u64_seed(8);
        let pmf = binomial_pmf_exact(15, &ratio(1, 3)).unwrap();
        let mut h = Histogram::new();
        for _ in 0..20_000 {
            let g = naive_exact_gnp(6, &ratio(1, 3), &mut src).unwrap();
            h.record(g.edge_count() as u64);
        }
        let tv = tv_distance(&h, &pmf).unwrap();
        assert!(tv <= 0.05, "tv {tv}");
    }

    #[test]
    fn max_skip_bound_examples() {
        let (kmax, missing) = max_skip_bound(&ratio(1, 2), 1).unwrap();
        assert_eq!(kmax, 2);
        assert_eq!(missing, ratio(1, 4));
        let (kmax, missing) = max_skip_bound(&ratio(1, 2), 3).unwrap();
        assert_eq!(kmax, 4);
        assert_eq!(missing, ratio(1, 16));
        // Missing mass shrinks monotonically in the precision.
        let mut prev = ratio(2, 1);
        for b in 1..=16 {
            let (_, missing) = max_skip_bound(&ratio(1, 3), b).unwrap();
            assert!(missing < prev);
            prev = missing;
        }
    }

    #[test]
    fn quantized_skip_law_single_bit() {
        // p = 1/2, b = 1: r is 0 or 1/2, so only skips 1 and 2 occur; the
        // exact law gives skip 3 probability 1/8, the baseline zero.
        let law = quantized_skip_law(&ratio(1, 2), 1).unwrap();
        assert_eq!(law.support(), 1..=2);
        assert_eq!(law.mass(1), ratio(1, 2));
        assert_eq!(law.mass(2), ratio(1, 2));
        assert_eq!(law.mass(3), ratio(0, 1));
        // Exact geometric assigns q^2 p = 1/8 to skip 3.
        let exact_skip3 = ratio(1, 2) * ratio(1, 2) * ratio(1, 2);
        assert_eq!(exact_skip3, ratio(1, 8));
    }

    #[test]
    fn quantized_skips_never_exceed_kmax() {
        let p = ratio(1, 2);
        let (kmax, _) = max_skip_bound(&p, 1).unwrap();
        let mut src = BitSource::from_u64_seed(12);
        let mut max_seen = 0u64;
        for _ in 0..100_000 {
            max_seen = max_seen.max(sample_quantized_skip(&p, 1, &mut src));
        }
        assert_eq!(max_seen, kmax);
    }

    #[test]
    fn skip_law_tv_shrinks_with_precision() {
        let p = ratio(1, 2);
        // b = 1: baseline {1: 1/2, 2: 1/2} vs geometric {1/2, 1/4, 1/8, ...}:
        // TV = (|1/2-1/2| + |1/2-1/4| + 1/4) / 2 = 1/4.
        assert_eq!(skip_law_tv(&p, 1).unwrap(), ratio(1, 4));
        let mut prev = ratio(1, 1);
        for b in 1..=20 {
            let tv = skip_law_tv(&p, b).unwrap();
            assert!(tv < prev, "b={b}");
            prev = tv;
        }
        assert!(skip_law_tv(&p, 20).unwrap() < ratio(1, 1000));
    }

    #[test]
    fn skip_baseline_with_full_resolution_matches_naive_law() {
        // With 2^-b below (1-p)^N the baseline is bias-free for N pairs:
        // compare its edge-count law to the exact binomial.
        let p = ratio(1, 2);
        let bits = 20; // (1/2)^15 = 2^-15 > 2^-20
        let mut src = BitSource::from_u64_seed(14);
        let pmf = binomial_pmf_exact(15, &p).unwrap();
        let mut h = Histogram::new();
        for _ in 0..20_000 {
            let g = skip_baseline_gnp(6, &p, bits, &mut src).unwrap();
            assert!(g.edges.iter().all(|&(u, v)| u < v && v < 6));
            h.record(g.edge_count() as u64);
        }
        let tv = tv_distance(&h, &pmf).unwrap();
        assert!(tv <= 0.05, "tv {tv}");
    }

    #[test]
    fn length_product_bound_on_axis_aligned_and_generic_matrices() {
        // All vectors on one axis: lhs = d * sum, rhs = sum, clear margin.
        let m = VectorMatrix::new(vec![
            vec![ratio(1, 2), ratio(0, 1)],
            vec![ratio(1, 4), ratio(0, 1)],
            vec![ratio(1, 8), ratio(0, 1)],
        ])
        .unwrap();
        assert!(check_length_product_bound(&m));

        // Generic positive matrix with irrational lengths.
        let m = VectorMatrix::new(vec![
            vec![ratio(1, 4), ratio(1, 2)],
            vec![ratio(1, 2), ratio(1, 4)],
            vec![ratio(1, 3), ratio(1, 5)],
        ])
        .unwrap();
        assert!(check_length_product_bound(&m));

        // Orthogonal pair: d * 0 < 1, the bound genuinely fails.
        let m = VectorMatrix::new(vec![
            vec![ratio(1, 1), ratio(0, 1)],
            vec![ratio(0, 1), ratio(1, 1)],
        ])
        .unwrap();
        assert!(!check_length_product_bound(&m));
    }

    #[test]
    fn one_step_law_from_chain_matches_exact_probabilities() {
        // The verify-side cross-check of the walk: empirical one-step law
        // from the interval midpoint against the exact alphas.
        let spec = build_spec(&BigInt::from(15), &ratio(1, 3), &ratio(1, 100)).unwrap();
        let up = arith::to_f64(&alpha_plus(&spec, &BigInt::from(5)).unwrap()) / 4.0;
        let down = arith::to_f64(&alpha_minus(&spec, &BigInt::from(5)).unwrap()) / 4.0;
        let mut src = BitSource::from_u64_seed(16);
        let trials = 50_000u64;
        let (mut ups, mut downs) = (0u64, 0u64);
        for _ in 0..trials {
            match chain_step(&spec, &BigInt::from(5), &mut src)
                .unwrap()
                .to_u64()
                .unwrap()
            {
                6 => ups += 1,
                4 => downs += 1,
                _ => {}
            }
        }
        let sig_up = (up * (1.0 - up) / trials as f64).sqrt();
        let sig_down = (down * (1.0 - down) / trials as f64).sqrt();
        assert!((ups as f64 / trials as f64 - up).abs() <= 3.0 * sig_up);
        assert!((downs as f64 / trials as f64 - down).abs() <= 3.0 * sig_down);
    }
}
