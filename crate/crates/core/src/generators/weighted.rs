//! Generator for graphs with given expected weights: edge `{u,v}` is
//! present with probability `min(w_u * w_v, 1)`.
//!
//! Weights are rounded up to powers of two, which partitions the vertices
//! into classes whose internal and pairwise blocks are uniform-probability
//! graphs; each block is sampled with the binomial coupling and a final
//! accept-reject pass thins every surviving edge back to the exact product
//! probability. The rounding and the thinning cancel exactly, pair by pair.

use std::collections::BTreeMap;

use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::arith::{self, Rational};
use crate::randomness::BitSource;

use super::{
    check_eps, sample_gnp, sample_gnp_bipartite, EdgeList, GenError, GraphShape, RunMeta,
};

/// Positive vertex weights, indexed by vertex id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightVector {
    pub weights: Vec<Rational>,
}

impl WeightVector {
    pub fn new(weights: Vec<Rational>) -> Self {
        WeightVector { weights }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Exponent range `q`: how far the weights stray from 1 in either
    /// direction, measured in doublings. Reported in metadata only.
    pub fn exponent_range(&self) -> Result<u64, GenError> {
        let mut q = 0i64;
        for w in &self.weights {
            let e = arith::pow2_ceil_exp(w).map_err(|_| GenError::NonPositiveWeight)?;
            q = q.max(e.abs());
        }
        Ok(q as u64)
    }
}

/// Vertices grouped by rounded weight: class `i` holds every `u` with
/// `2^(i-1) < w_u <= 2^i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexClassPartition {
    classes: BTreeMap<i64, Vec<u64>>,
}

impl VertexClassPartition {
    pub fn class_count(&self) -> usize {
        self.classes.len()
    }

    /// Classes in ascending exponent order; members are ascending ids.
    pub fn classes(&self) -> impl Iterator<Item = (i64, &[u64])> {
        self.classes.iter().map(|(&i, v)| (i, v.as_slice()))
    }

    /// Rounded exponent per vertex.
    pub fn exponents(&self, n: usize) -> Vec<i64> {
        let mut exp = vec![0i64; n];
        for (&i, members) in &self.classes {
            for &u in members {
                exp[u as usize] = i;
            }
        }
        exp
    }
}

/// Rounds each weight up to the next power of two and groups vertices by
/// the resulting exponent.
pub fn round_weights(w: &WeightVector) -> Result<VertexClassPartition, GenError> {
    let mut classes: BTreeMap<i64, Vec<u64>> = BTreeMap::new();
    for (u, weight) in w.weights.iter().enumerate() {
        let i = arith::pow2_ceil_exp(weight).map_err(|_| GenError::NonPositiveWeight)?;
        classes.entry(i).or_default().push(u as u64);
    }
    Ok(VertexClassPartition { classes })
}

enum BlockKind<'a> {
    Within {
        members: &'a [u64],
    },
    Between {
        left: &'a [u64],
        right: &'a [u64],
    },
}

struct BlockJob<'a> {
    label: String,
    p: Rational,
    kind: BlockKind<'a>,
}

fn run_block(
    job: &BlockJob<'_>,
    parent: &BitSource,
    eps: &Rational,
) -> Result<(Vec<(u64, u64)>, u64, bool), GenError> {
    let mut src = parent.split(job.label.as_bytes());
    match &job.kind {
        BlockKind::Within { members } => {
            let g = sample_gnp(members.len() as u64, &job.p, eps, &mut src)?;
            let edges = g
                .edges
                .iter()
                .map(|&(a, b)| (members[a as usize], members[b as usize]))
                .collect();
            Ok((edges, g.meta.coupling_steps, true))
        }
        BlockKind::Between { left, right } => {
            let g =
                sample_gnp_bipartite(left.len() as u64, right.len() as u64, &job.p, eps, &mut src)?;
            let edges = g
                .edges
                .iter()
                .map(|&(a, b)| {
                    let (x, y) = (left[a as usize], right[b as usize]);
                    (x.min(y), x.max(y))
                })
                .collect();
            Ok((edges, g.meta.coupling_steps, false))
        }
    }
}

/// Samples a graph whose law is within `eps` total variation of the
/// given-expected-weights model.
///
/// Phase 1 rounds weights to powers of two; phases 2 and 3 sample the
/// within-class and between-class blocks independently (concurrently, each
/// on its own labelled child source); phase 4 keeps each edge with
/// probability `min(w_u w_v, 1) / min(w(u) w(v), 1)`, restoring the exact
/// product marginal.
pub fn sample_weighted(
    w: &WeightVector,
    eps: &Rational,
    src: &mut BitSource,
) -> Result<EdgeList, GenError> {
    check_eps(eps)?;
    let n = w.len() as u64;
    if n == 0 {
        return Err(GenError::NoVertices);
    }
    let partition = round_weights(w)?;
    let kc = partition.class_count() as i64;
    let mut meta = RunMeta {
        seed_hex: src.seed_hex(),
        eps: Some(eps.clone()),
        coupling_steps: 0,
        counters: vec![("classes", kc as u64)],
    };
    if n == 1 {
        meta.counters.extend([
            ("phase2_edges", 0),
            ("phase3_edges", 0),
            ("phase4_kept", 0),
        ]);
        return Ok(EdgeList {
            shape: GraphShape::Undirected { n },
            edges: Vec::new(),
            meta,
        });
    }
    // Per-block budget from the union bound over all kc*(kc+1)/2 blocks.
    let eps_block = arith::ratio(2, kc * (kc + 1)) * eps;

    let classes: Vec<(i64, &[u64])> = partition.classes().collect();
    let mut jobs: Vec<BlockJob> = Vec::new();
    for &(i, members) in &classes {
        if members.len() >= 2 {
            jobs.push(BlockJob {
                label: format!("c:{i}"),
                p: clamp_one(arith::pow2(2 * i)),
                kind: BlockKind::Within { members },
            });
        }
    }
    for (a, &(i, left)) in classes.iter().enumerate() {
        for &(j, right) in &classes[a + 1..] {
            jobs.push(BlockJob {
                label: format!("b:{i}:{j}"),
                p: clamp_one(arith::pow2(i + j)),
                kind: BlockKind::Between { left, right },
            });
        }
    }

    let parent: &BitSource = src;
    let results: Result<Vec<_>, GenError> = jobs
        .par_iter()
        .map(|job| run_block(job, parent, &eps_block))
        .collect();

    let mut edges: Vec<(u64, u64)> = Vec::new();
    let mut phase2 = 0u64;
    let mut phase3 = 0u64;
    for (block_edges, steps, within) in results? {
        meta.coupling_steps += steps;
        if within {
            phase2 += block_edges.len() as u64;
        } else {
            phase3 += block_edges.len() as u64;
        }
        edges.extend(block_edges);
    }
    edges.sort_unstable();

    // Phase 4: exact thinning back to min(w_u w_v, 1).
    let exponents = partition.exponents(w.len());
    let mut norm_src = src.split(b"norm");
    let mut kept: Vec<(u64, u64)> = Vec::with_capacity(edges.len());
    for (u, v) in edges {
        let keep_prob = acceptance_ratio(
            &w.weights[u as usize],
            &w.weights[v as usize],
            exponents[u as usize],
            exponents[v as usize],
        );
        if norm_src.bernoulli_exact(&keep_prob).expect("ratio in [0,1]") {
            kept.push((u, v));
        }
    }
    meta.counters.extend([
        ("phase2_edges", phase2),
        ("phase3_edges", phase3),
        ("phase4_kept", kept.len() as u64),
    ]);
    Ok(EdgeList {
        shape: GraphShape::Undirected { n },
        edges: kept,
        meta,
    })
}

fn clamp_one(p: Rational) -> Rational {
    std::cmp::min(p, Rational::one())
}

/// Phase-4 keep probability `min(w_u w_v, 1) / min(2^(i_u + i_v), 1)`.
/// Always in `[0, 1]` because the rounded product dominates the exact one.
pub(crate) fn acceptance_ratio(wu: &Rational, wv: &Rational, iu: i64, iv: i64) -> Rational {
    let exact = clamp_one(wu * wv);
    let rounded = clamp_one(arith::pow2(iu + iv));
    debug_assert!(!rounded.is_zero());
    exact / rounded
}
