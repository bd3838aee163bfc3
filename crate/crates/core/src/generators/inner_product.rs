//! Generator for inner-product kernels: each vertex carries a nonnegative
//! vector and edge `{u,v}` is present with probability
//! `min(<w_u, w_v>, 1)`.
//!
//! The squared length of each vector is rounded up to an even power of two,
//! so the length itself is an exact power of two and the problem reduces to
//! the weighted generator; a final thinning pass restores the inner-product
//! marginal. Cauchy-Schwarz keeps every thinning ratio in `[0, 1]`.

use num_traits::{One, Zero};

use crate::arith::{self, Rational};
use crate::randomness::BitSource;

use super::{
    check_eps, sample_weighted, EdgeList, GenError, GraphShape, RunMeta, WeightVector,
};

/// One nonnegative `d`-vector per vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VectorMatrix {
    rows: Vec<Vec<Rational>>,
    dim: usize,
}

impl VectorMatrix {
    pub fn new(rows: Vec<Vec<Rational>>) -> Result<Self, GenError> {
        let dim = rows.first().map_or(0, Vec::len);
        for row in &rows {
            if row.len() != dim {
                return Err(GenError::RaggedMatrix);
            }
            if row.iter().any(|x| x < &Rational::zero()) {
                return Err(GenError::NegativeEntry);
            }
        }
        Ok(VectorMatrix { rows, dim })
    }

    pub fn vertex_count(&self) -> usize {
        self.rows.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, u: usize) -> &[Rational] {
        &self.rows[u]
    }

    /// Exact inner product of two rows.
    pub fn inner_product(&self, u: usize, v: usize) -> Rational {
        self.rows[u]
            .iter()
            .zip(&self.rows[v])
            .map(|(a, b)| a * b)
            .sum()
    }

    /// Exact squared length of a row.
    pub fn squared_length(&self, u: usize) -> Rational {
        self.inner_product(u, u)
    }
}

/// Smallest even power of two at least `s`, returned as its half-exponent:
/// the rounded length is `2^m` with `4^m >= s`.
fn length_exponent(s: &Rational) -> i64 {
    let e = arith::pow2_ceil_exp(s).expect("s > 0");
    e.div_euclid(2) + (e.rem_euclid(2) != 0) as i64
}

/// Samples a graph whose law is within `eps` total variation of the
/// inner-product model.
///
/// Vertices with all-zero vectors are isolated and take no part in the
/// sampling. Phase 2 runs the weighted generator on the rounded lengths
/// (rounding inside it is the identity, the lengths already being powers of
/// two); phase 3 keeps each edge with probability
/// `min(<w_u, w_v>, 1) / min(L(u) L(v), 1)`.
pub fn sample_inner_product(
    matrix: &VectorMatrix,
    eps: &Rational,
    src: &mut BitSource,
) -> Result<EdgeList, GenError> {
    check_eps(eps)?;
    let n = matrix.vertex_count() as u64;
    if n == 0 {
        return Err(GenError::NoVertices);
    }
    let mut meta = RunMeta {
        seed_hex: src.seed_hex(),
        eps: Some(eps.clone()),
        coupling_steps: 0,
        counters: Vec::new(),
    };

    // Active vertices have a nonzero vector; the rest stay isolated.
    let mut active: Vec<u64> = Vec::new();
    let mut exponents: Vec<i64> = Vec::new();
    for u in 0..matrix.vertex_count() {
        let s = matrix.squared_length(u);
        if !s.is_zero() {
            active.push(u as u64);
            exponents.push(length_exponent(&s));
        }
    }
    meta.counters.push(("active_vertices", active.len() as u64));

    let mut kept: Vec<(u64, u64)> = Vec::new();
    if active.len() >= 2 {
        let lengths = WeightVector::new(exponents.iter().map(|&m| arith::pow2(m)).collect());
        let mut len_src = src.split(b"len");
        let rounded = sample_weighted(&lengths, eps, &mut len_src)?;
        meta.coupling_steps = rounded.meta.coupling_steps;
        meta.counters.push(("phase2_edges", rounded.edge_count() as u64));

        let mut norm_src = src.split(b"dot-norm");
        for &(a, b) in &rounded.edges {
            let (u, v) = (active[a as usize], active[b as usize]);
            let exact = std::cmp::min(
                matrix.inner_product(u as usize, v as usize),
                Rational::one(),
            );
            let rounded_prob = std::cmp::min(
                arith::pow2(exponents[a as usize] + exponents[b as usize]),
                Rational::one(),
            );
            let keep = exact / rounded_prob;
            debug_assert!(keep <= Rational::one());
            if norm_src.bernoulli_exact(&keep).expect("ratio in [0,1]") {
                kept.push((u, v));
            }
        }
    } else {
        meta.counters.push(("phase2_edges", 0));
    }
    meta.counters.push(("phase3_kept", kept.len() as u64));
    Ok(EdgeList {
        shape: GraphShape::Undirected { n },
        edges: kept,
        meta,
    })
}
