//! Uniform random k-subsets of `{0, ..., N-1}` and the bijections between
//! edge indices and vertex pairs.
//!
//! Simple graphs use the colexicographic pairing, which unranks with a
//! single integer square root; bipartite graphs use plain row-major
//! division.

use std::collections::HashSet;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::arith;
use crate::randomness::BitSource;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SubsetError {
    #[error("subset size k must satisfy 0 <= k <= N")]
    SizeOutOfRange,
    #[error("rank is outside the index range")]
    RankOutOfRange,
}

/// Sorted set of distinct edge indices in `[0, N)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeIndexSet(Vec<BigInt>);

impl EdgeIndexSet {
    pub fn indices(&self) -> &[BigInt] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<BigInt> {
        self.0
    }
}

/// Uniform random k-subset of `[0, N)` via Floyd's method: for
/// `j = N-k, ..., N-1` draw `t` uniform on `[0, j]` and insert `t` unless
/// already present, else insert `j`. Exactly `k` uniform draws, exactly
/// uniform over all `C(N, k)` subsets.
pub fn sample_k_subset(
    n: &BigInt,
    k: &BigInt,
    src: &mut BitSource,
) -> Result<EdgeIndexSet, SubsetError> {
    if k.is_negative() || k > n {
        return Err(SubsetError::SizeOutOfRange);
    }
    if let (Some(n64), Some(k64)) = (n.to_u64(), k.to_u64()) {
        let picked = sample_k_subset_u64(n64, k64, src);
        return Ok(EdgeIndexSet(picked.into_iter().map(BigInt::from).collect()));
    }
    let mut picked: HashSet<BigInt> = HashSet::new();
    let mut j = n - k;
    while &j < n {
        let t = src
            .uniform_below(&(&j + 1u32))
            .expect("j + 1 >= 1");
        if !picked.insert(t) {
            picked.insert(j.clone());
        }
        j += 1u32;
    }
    let mut out: Vec<BigInt> = picked.into_iter().collect();
    out.sort_unstable();
    Ok(EdgeIndexSet(out))
}

/// [`sample_k_subset`] specialized to `u64` ranges; consumes the same bits
/// as the general version. Returns the indices sorted.
pub fn sample_k_subset_u64(n: u64, k: u64, src: &mut BitSource) -> Vec<u64> {
    debug_assert!(k <= n);
    let mut picked: HashSet<u64> = HashSet::with_capacity(k as usize);
    for j in (n - k)..n {
        let t = src.uniform_below_u64(j + 1).expect("j + 1 >= 1");
        if !picked.insert(t) {
            picked.insert(j);
        }
    }
    let mut out: Vec<u64> = picked.into_iter().collect();
    out.sort_unstable();
    out
}

/// Colexicographic unranking of `c` in `[0, n(n-1)/2)` to an unordered pair
/// `(u, v)` with `u < v`: `v` is the largest integer with `v(v-1)/2 <= c`
/// and `u = c - v(v-1)/2`.
pub fn unrank_pair(c: &BigInt, n: &BigInt) -> Result<(BigInt, BigInt), SubsetError> {
    if c.is_negative() || c * 2u32 >= n * (n - 1u32) {
        return Err(SubsetError::RankOutOfRange);
    }
    // v is within one of ceil(sqrt(2c)); fix up by exact comparison.
    let mut v = arith::isqrt_ceil(&(c * 2u32)).expect("c >= 0");
    if v.is_zero() {
        v = BigInt::one();
    }
    while &v * (&v - 1u32) > c * 2u32 {
        v -= 1u32;
    }
    while &v * (&v + 1u32) <= c * 2u32 {
        v += 1u32;
    }
    let u = c - (&v * (&v - 1u32)) / 2u32;
    debug_assert!(u < v);
    Ok((u, v))
}

/// Inverse of [`unrank_pair`].
pub fn rank_pair(u: &BigInt, v: &BigInt) -> BigInt {
    debug_assert!(u < v);
    v * (v - 1u32) / 2u32 + u
}

/// [`unrank_pair`] specialized to `u64` indices; same bijection.
pub fn unrank_pair_u64(c: u64, n: u64) -> (u64, u64) {
    debug_assert!((c as u128) < n as u128 * (n - 1) as u128 / 2);
    let c = c as u128;
    let mut v = isqrt_u128(2 * c).max(1);
    while v * (v - 1) / 2 > c {
        v -= 1;
    }
    while v * (v + 1) / 2 <= c {
        v += 1;
    }
    let u = c - v * (v - 1) / 2;
    (u as u64, v as u64)
}

/// Floor integer square root, Newton's method from an upper seed.
fn isqrt_u128(x: u128) -> u128 {
    if x < 2 {
        return x;
    }
    let mut s = 1u128 << (128 - x.leading_zeros()).div_ceil(2);
    loop {
        let t = (s + x / s) / 2;
        if t >= s {
            return s;
        }
        s = t;
    }
}

/// Row-major unranking of `c` in `[0, n1*n2)` to a bipartite pair: left
/// index `c / n2`, right index `c mod n2`.
pub fn unrank_bipartite(
    c: &BigInt,
    n1: &BigInt,
    n2: &BigInt,
) -> Result<(BigInt, BigInt), SubsetError> {
    if c.is_negative() || *c >= n1 * n2 {
        return Err(SubsetError::RankOutOfRange);
    }
    Ok((c / n2, c % n2))
}

/// Inverse of [`unrank_bipartite`].
pub fn rank_bipartite(u: &BigInt, v: &BigInt, n2: &BigInt) -> BigInt {
    u * n2 + v
}
