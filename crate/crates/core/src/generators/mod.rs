//! The graph generators: uniform edge probability (simple and bipartite),
//! given expected weights, inner-product kernels, and Kronecker initiators.
//!
//! Each generator draws the edge count of a block from the truncated
//! binomial coupling, picks that many edge indices uniformly, and unranks
//! them to vertex pairs. The output law differs from the target model only
//! by the binomial truncation, whose mass is below the caller's `eps`.
//!
//! Every generator is a pure function of its inputs and the seed of the
//! supplied bit source: randomness for independent blocks comes from
//! labelled [`BitSource::split`] children, so blocks may run concurrently
//! and the merged result is still byte-for-byte reproducible.

mod inner_product;
mod kronecker;
mod weighted;

pub use inner_product::{sample_inner_product, VectorMatrix};
pub use kronecker::{
    enumerate_edge_classes, sample_kronecker, unrank_class_edge, EdgeClass, Initiator,
    KroneckerOptions,
};
pub use weighted::{round_weights, sample_weighted, VertexClassPartition, WeightVector};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::arith::Rational;
use crate::binomial::{self, SpecError};
use crate::randomness::BitSource;
use crate::subset;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GenError {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error("probability must lie in [0, 1]")]
    ProbabilityOutOfRange,
    #[error("eps must lie strictly between 0 and 1")]
    EpsilonOutOfRange,
    #[error("graph must have at least one vertex")]
    NoVertices,
    #[error("weights must be positive")]
    NonPositiveWeight,
    #[error("matrix entries must be nonnegative")]
    NegativeEntry,
    #[error("matrix rows must all have the same dimension")]
    RaggedMatrix,
    #[error("initiator must be a nonempty square matrix with power >= 1")]
    BadInitiator,
    #[error("d^k exceeds the addressable vertex range")]
    VertexRangeOverflow,
    #[error("rank is outside the edge class")]
    RankOutOfRange,
}

/// Vertex counts and directedness of an output graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GraphShape {
    Undirected { n: u64 },
    Bipartite { n1: u64, n2: u64 },
    Directed { n: u64 },
}

impl GraphShape {
    pub fn is_directed(&self) -> bool {
        matches!(self, GraphShape::Directed { .. })
    }
}

/// Reproducibility metadata carried with every generated graph.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RunMeta {
    /// Seed of the source the generator was handed, when generator-backed.
    pub seed_hex: Option<String>,
    /// Total-variation budget the run was invoked with.
    pub eps: Option<Rational>,
    /// Coupled Markov-chain steps summed over all blocks.
    pub coupling_steps: u64,
    /// Per-phase counters in a fixed order, for the output header.
    pub counters: Vec<(&'static str, u64)>,
}

/// Output graph: ordered edge list plus metadata.
///
/// Undirected edges satisfy `u < v`; bipartite edges index the two sides
/// separately. Edges are sorted by `(u, v)` and duplicate-free.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeList {
    pub shape: GraphShape,
    pub edges: Vec<(u64, u64)>,
    pub meta: RunMeta,
}

impl EdgeList {
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }
}

fn check_eps(eps: &Rational) -> Result<(), GenError> {
    if eps.is_positive() && *eps < Rational::one() {
        Ok(())
    } else {
        Err(GenError::EpsilonOutOfRange)
    }
}

/// Classifies an edge probability: an error outside `[0, 1]`, a flag value
/// at the endpoints, or a proper chain parameter.
enum EdgeProbability {
    AlwaysAbsent,
    AlwaysPresent,
    Chain,
}

fn classify_probability(p: &Rational) -> Result<EdgeProbability, GenError> {
    if p.is_negative() || *p > Rational::one() {
        Err(GenError::ProbabilityOutOfRange)
    } else if p.is_zero() {
        Ok(EdgeProbability::AlwaysAbsent)
    } else if p.is_one() {
        Ok(EdgeProbability::AlwaysPresent)
    } else {
        Ok(EdgeProbability::Chain)
    }
}

/// Draws the edge count from the truncated binomial for `N` potential
/// edges, then a uniform subset of that size. Returns sorted edge ranks and
/// the number of coupling steps.
fn sample_edge_ranks(
    n_edges: &BigInt,
    p: &Rational,
    eps: &Rational,
    src: &mut BitSource,
) -> Result<(Vec<BigInt>, u64), GenError> {
    let spec = binomial::build_spec(n_edges, p, eps)?;
    let mut chain_src = src.split(b"chain");
    let (m, steps) = binomial::sample_truncated_binomial(&spec, &mut chain_src);
    let mut comb_src = src.split(b"comb");
    let ranks = subset::sample_k_subset(n_edges, &m, &mut comb_src)
        .expect("m <= N by construction")
        .into_vec();
    Ok((ranks, steps))
}

/// Samples a graph whose law is within `eps` total variation of the
/// uniform-edge-probability model on `n` vertices.
///
/// `p = 0` and `p = 1` are deterministic flag values; no chain runs.
pub fn sample_gnp(
    n: u64,
    p: &Rational,
    eps: &Rational,
    src: &mut BitSource,
) -> Result<EdgeList, GenError> {
    if n == 0 {
        return Err(GenError::NoVertices);
    }
    check_eps(eps)?;
    let shape = GraphShape::Undirected { n };
    let n_edges = BigInt::from(n) * (n - 1) / 2u32;
    let mut meta = RunMeta {
        seed_hex: src.seed_hex(),
        eps: Some(eps.clone()),
        coupling_steps: 0,
        counters: Vec::new(),
    };
    let mut edges: Vec<(u64, u64)> = Vec::new();
    match classify_probability(p)? {
        EdgeProbability::AlwaysAbsent => {}
        EdgeProbability::AlwaysPresent => {
            for v in 1..n {
                for u in 0..v {
                    edges.push((u, v));
                }
            }
        }
        EdgeProbability::Chain if n_edges.is_zero() => {}
        EdgeProbability::Chain => {
            let (ranks, steps) = sample_edge_ranks(&n_edges, p, eps, src)?;
            meta.coupling_steps = steps;
            edges = ranks
                .iter()
                .map(|c| subset::unrank_pair_u64(c.to_u64().expect("rank < C(n,2)"), n))
                .collect();
        }
    }
    edges.sort_unstable();
    meta.counters.push(("edges", edges.len() as u64));
    Ok(EdgeList { shape, edges, meta })
}

/// Bipartite version of [`sample_gnp`]: `n1` left and `n2` right vertices,
/// each of the `n1 * n2` cross edges present with probability close to `p`.
/// Edge pairs index the two sides independently.
pub fn sample_gnp_bipartite(
    n1: u64,
    n2: u64,
    p: &Rational,
    eps: &Rational,
    src: &mut BitSource,
) -> Result<EdgeList, GenError> {
    if n1 == 0 || n2 == 0 {
        return Err(GenError::NoVertices);
    }
    check_eps(eps)?;
    let shape = GraphShape::Bipartite { n1, n2 };
    let n_edges = BigInt::from(n1) * n2;
    let mut meta = RunMeta {
        seed_hex: src.seed_hex(),
        eps: Some(eps.clone()),
        coupling_steps: 0,
        counters: Vec::new(),
    };
    let mut edges: Vec<(u64, u64)> = Vec::new();
    match classify_probability(p)? {
        EdgeProbability::AlwaysAbsent => {}
        EdgeProbability::AlwaysPresent => {
            for u in 0..n1 {
                for v in 0..n2 {
                    edges.push((u, v));
                }
            }
        }
        EdgeProbability::Chain => {
            let (ranks, steps) = sample_edge_ranks(&n_edges, p, eps, src)?;
            meta.coupling_steps = steps;
            edges = ranks
                .iter()
                .map(|c| {
                    let c = c.to_u64().expect("rank < n1*n2");
                    (c / n2, c % n2)
                })
                .collect();
        }
    }
    edges.sort_unstable();
    meta.counters.push(("edges", edges.len() as u64));
    Ok(EdgeList { shape, edges, meta })
}
