//! Generator for Kronecker-product graphs: vertices are base-`d` strings of
//! length `k` and the probability of the ordered pair `(u, v)` is the
//! product of initiator entries selected digit by digit.
//!
//! Ordered pairs with the same multiset of initiator cells share one
//! probability, so the pair space splits into edge classes indexed by the
//! exponent vector `alpha`. Each class is sampled as one binomial draw plus
//! a uniform combination, and ranks unrank to pairs through the
//! lexicographic order on multiset permutations of `alpha`.

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;

use crate::arith::{self, Rational};
use crate::binomial;
use crate::randomness::BitSource;
use crate::subset;

use super::{check_eps, EdgeList, GenError, GraphShape, RunMeta};

/// The `d x d` nonnegative initiator matrix and the Kronecker power `k`,
/// addressing `n = d^k` vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Initiator {
    theta: Vec<Rational>,
    d: u32,
    power: u32,
}

impl Initiator {
    pub fn new(rows: Vec<Vec<Rational>>, power: u32) -> Result<Self, GenError> {
        let d = rows.len();
        if d == 0 || power == 0 {
            return Err(GenError::BadInitiator);
        }
        let mut theta = Vec::with_capacity(d * d);
        for row in rows {
            if row.len() != d {
                return Err(GenError::BadInitiator);
            }
            for entry in row {
                if entry.is_negative() {
                    return Err(GenError::NegativeEntry);
                }
                theta.push(entry);
            }
        }
        Ok(Initiator {
            theta,
            d: d as u32,
            power,
        })
    }

    pub fn d(&self) -> u32 {
        self.d
    }

    pub fn power(&self) -> u32 {
        self.power
    }

    /// Entry at 0-based cell `(i, j)`.
    pub fn theta(&self, i: u32, j: u32) -> &Rational {
        &self.theta[(i * self.d + j) as usize]
    }

    /// `d^k`, or an error when it does not fit the addressable range.
    pub fn vertex_count(&self) -> Result<u64, GenError> {
        (self.d as u64)
            .checked_pow(self.power)
            .ok_or(GenError::VertexRangeOverflow)
    }

    /// Probability of the ordered pair `(u, v)` by digit decomposition:
    /// the product of one initiator entry per digit position.
    pub fn pair_probability(&self, u: u64, v: u64) -> Rational {
        let d = self.d as u64;
        let mut prob = Rational::one();
        let (mut u, mut v) = (u, v);
        for _ in 0..self.power {
            prob *= self.theta((u % d) as u32, (v % d) as u32);
            u /= d;
            v /= d;
        }
        prob
    }

    /// Exponent spread of the nonzero entries, for metadata.
    fn exponent_range(&self) -> u64 {
        self.theta
            .iter()
            .filter(|t| !t.is_zero())
            .map(|t| arith::pow2_ceil_exp(t).expect("positive").unsigned_abs())
            .max()
            .unwrap_or(0)
    }
}

/// A set of ordered pairs sharing one occurrence probability: the pairs
/// whose digit decomposition uses initiator cell `(i, j)` exactly
/// `alpha[i*d + j]` times.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeClass {
    /// Cell multiplicities, row-major, summing to `k`.
    pub alpha: Vec<u32>,
    /// Number of pairs in the class: `k! / prod(alpha!)`.
    pub size: BigInt,
    /// Shared probability: `prod theta^alpha`.
    pub prob: Rational,
}

/// Iterates every edge class of the initiator in ascending lexicographic
/// order of `alpha`, maintaining the class size incrementally.
pub fn enumerate_edge_classes(init: &Initiator) -> EdgeClassIter<'_> {
    let cells = (init.d * init.d) as usize;
    let mut alpha = vec![0u32; cells];
    alpha[cells - 1] = init.power;
    EdgeClassIter {
        init,
        alpha: Some(alpha),
        size: BigInt::one(),
    }
}

pub struct EdgeClassIter<'a> {
    init: &'a Initiator,
    alpha: Option<Vec<u32>>,
    size: BigInt,
}

impl Iterator for EdgeClassIter<'_> {
    type Item = EdgeClass;

    fn next(&mut self) -> Option<EdgeClass> {
        let alpha = self.alpha.as_mut()?;
        let class = EdgeClass {
            alpha: alpha.clone(),
            size: self.size.clone(),
            prob: class_probability(self.init, alpha),
        };
        if !advance(alpha, &mut self.size) {
            self.alpha = None;
        }
        Some(class)
    }
}

fn factorial(x: u32) -> BigInt {
    (1..=x).map(BigInt::from).product()
}

/// Steps `alpha` to its lexicographic successor among fixed-sum vectors and
/// updates `size` by the ratio of factorials of the changed cells only.
/// Returns false once the maximal vector `(k, 0, ..., 0)` is reached.
fn advance(alpha: &mut [u32], size: &mut BigInt) -> bool {
    let cells = alpha.len();
    // Rightmost position whose suffix still carries mass.
    let mut suffix = 0u32;
    let mut j = cells - 1;
    loop {
        if j == 0 {
            return false;
        }
        j -= 1;
        suffix += alpha[j + 1];
        if suffix > 0 {
            break;
        }
    }
    let mut num = factorial(alpha[j]);
    let mut den = factorial(alpha[j] + 1);
    for cell in alpha[j + 1..].iter() {
        num *= factorial(*cell);
    }
    den *= factorial(suffix - 1);
    // The new multinomial is an integer, so this division is exact.
    *size = &*size * num / den;
    alpha[j] += 1;
    for cell in alpha[j + 1..].iter_mut() {
        *cell = 0;
    }
    alpha[cells - 1] = suffix - 1;
    true
}

fn class_probability(init: &Initiator, alpha: &[u32]) -> Rational {
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for (cell, &a) in alpha.iter().enumerate() {
        if a == 0 {
            continue;
        }
        let theta = &init.theta[cell];
        if theta.is_zero() {
            return Rational::zero();
        }
        num *= theta.numer().pow(a);
        den *= theta.denom().pow(a);
    }
    Rational::new(num, den)
}

/// Unranks the `rank`-th pair of an edge class: position by position the
/// lexicographically next multiset permutation of `alpha` is counted off,
/// and the chosen cell `(i, j)` contributes digit `i` to `u` and `j` to
/// `v`, most significant position first.
pub fn unrank_class_edge(
    class: &EdgeClass,
    rank: &BigInt,
    d: u32,
    k: u32,
) -> Result<(u64, u64), GenError> {
    if rank.is_negative() || *rank >= class.size {
        return Err(GenError::RankOutOfRange);
    }
    let mut counts = class.alpha.clone();
    let mut remaining = BigInt::from(k);
    let mut size = class.size.clone();
    let mut r = rank.clone();
    let mut u = 0u64;
    let mut v = 0u64;
    for _ in 0..k {
        let mut chosen = None;
        for cell in 0..counts.len() {
            if counts[cell] == 0 {
                continue;
            }
            // Permutations of the remaining multiset that start with `cell`.
            let with_cell = &size * counts[cell] / &remaining;
            if r < with_cell {
                chosen = Some((cell as u32, with_cell));
                break;
            }
            r -= with_cell;
        }
        let (cell, with_cell) = chosen.expect("rank < size");
        u = u
            .checked_mul(d as u64)
            .and_then(|x| x.checked_add((cell / d) as u64))
            .ok_or(GenError::VertexRangeOverflow)?;
        v = v
            .checked_mul(d as u64)
            .and_then(|x| x.checked_add((cell % d) as u64))
            .ok_or(GenError::VertexRangeOverflow)?;
        counts[cell as usize] -= 1;
        remaining -= 1u32;
        size = with_cell;
    }
    Ok((u, v))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct KroneckerOptions {
    /// Keep only pairs with `u < v`.
    pub undirected: bool,
    /// Drop pairs with `u == v`.
    pub no_self_loops: bool,
}

/// Samples a graph whose law is within `eps` total variation of the
/// Kronecker model. The native output is a directed graph on ordered pairs,
/// self-loops included; the options post-filter it.
///
/// Classes with probability zero are skipped and classes with probability
/// at least one (possible when some entry exceeds 1) emit every pair
/// deterministically; only proper probabilities run the chain, each class
/// on its own labelled child source.
pub fn sample_kronecker(
    init: &Initiator,
    eps: &Rational,
    src: &mut BitSource,
    opts: KroneckerOptions,
) -> Result<EdgeList, GenError> {
    check_eps(eps)?;
    let n = init.vertex_count()?;
    let d = init.d();
    let k = init.power();
    // Per-class budget from the exact class count C(k + d^2 - 1, d^2 - 1).
    let class_count = arith::binomial_coeff(
        &BigInt::from(k as u64 + (d as u64) * (d as u64) - 1),
        &BigInt::from((d as u64) * (d as u64) - 1),
    )
    .expect("valid arguments");
    let eps_class = eps / Rational::from_integer(class_count.clone());

    let classes: Vec<EdgeClass> = enumerate_edge_classes(init).collect();
    debug_assert_eq!(BigInt::from(classes.len()), class_count);

    let parent: &BitSource = src;
    let results: Result<Vec<(Vec<(u64, u64)>, u64)>, GenError> = classes
        .par_iter()
        .map(|class| sample_class(class, init, &eps_class, parent))
        .collect();

    let mut edges: Vec<(u64, u64)> = Vec::new();
    let mut steps = 0u64;
    let mut classes_run = 0u64;
    for (class_edges, class_steps) in results? {
        steps += class_steps;
        classes_run += u64::from(class_steps > 0);
        edges.extend(class_edges);
    }
    let sampled = edges.len() as u64;
    if opts.undirected {
        edges.retain(|&(u, v)| u < v);
    } else if opts.no_self_loops {
        edges.retain(|&(u, v)| u != v);
    }
    edges.sort_unstable();

    let shape = if opts.undirected {
        GraphShape::Undirected { n }
    } else {
        GraphShape::Directed { n }
    };
    Ok(EdgeList {
        shape,
        edges,
        meta: RunMeta {
            seed_hex: src.seed_hex(),
            eps: Some(eps.clone()),
            coupling_steps: steps,
            counters: vec![
                ("classes", classes.len() as u64),
                ("classes_chained", classes_run),
                ("edges_sampled", sampled),
                ("q", init.exponent_range()),
            ],
        },
    })
}

fn sample_class(
    class: &EdgeClass,
    init: &Initiator,
    eps: &Rational,
    parent: &BitSource,
) -> Result<(Vec<(u64, u64)>, u64), GenError> {
    let d = init.d();
    let k = init.power();
    if class.prob.is_zero() {
        return Ok((Vec::new(), 0));
    }
    if class.prob >= Rational::one() {
        let mut edges = Vec::new();
        let mut rank = BigInt::zero();
        while rank < class.size {
            edges.push(unrank_class_edge(class, &rank, d, k)?);
            rank += 1u32;
        }
        return Ok((edges, 0));
    }
    let label = format!(
        "k:{}",
        class
            .alpha
            .iter()
            .map(|a| a.to_string())
            .collect::<Vec<_>>()
            .join(",")
    );
    let mut src = parent.split(label.as_bytes());
    let spec = binomial::build_spec(&class.size, &class.prob, eps)?;
    let (m, steps) = binomial::sample_truncated_binomial(&spec, &mut src);
    let ranks = subset::sample_k_subset(&class.size, &m, &mut src)
        .expect("m <= size")
        .into_vec();
    let edges = ranks
        .iter()
        .map(|r| unrank_class_edge(class, r, d, k))
        .collect::<Result<Vec<_>, _>>()?;
    Ok((edges, steps))
}
