//! Certificate construction and verification.
//!
//! Nodes are memoized on `(datum, weights)` and stored children-first, so a
//! certificate is a DAG addressed by node index. Every node carries a
//! single-block datum.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use num_traits::Zero;

use crate::cone::{self, WeightTuple};
use crate::datum::{EmbeddingId, ShimuraDatum};
use crate::error::{CoreError, Result};
use crate::hasse::lambda_coefficients;
use crate::picard::{hasse_class, restrict, PicardClass};
use crate::rational::{self, Rational};
use crate::strata::{classify_stratum, induced_datum, restriction_relations, StratumClass};

use super::sparse::{s_class, sparse_solve, verify_sparse_into, SparseLayout, SparseSolution};
use super::{first_adjacent_pair, reduce_pair, Checker, Verdict};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BuildOptions {
    /// Largest signature-1 cycle a block may have; strata are enumerated
    /// exhaustively, so cost grows like `2^N`.
    pub max_block_size: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { max_block_size: 12 }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ProofStep {
    /// `T` is the whole cycle and the restricted class is zero.
    FullVanishing,
    AdjacentReduction {
        pair: (EmbeddingId, EmbeddingId),
        child: usize,
    },
    SparseDecomposition {
        solution: SparseSolution,
        /// One child per chosen label, in the order of `solution.chosen`.
        children: Vec<usize>,
    },
    /// `V = 0` at `label`: the restricted class equals that of `s(label)`.
    BoundaryPassThrough { label: EmbeddingId, child: usize },
    /// Two-slot block with `T = {label}`: nonnegative degree on the fibers
    /// of the `P¹`-bundle, and a certificate for the base.
    FiberLeaf {
        label: EmbeddingId,
        fiber_degree: Rational,
        child: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StratumProof {
    pub stratum: BTreeSet<EmbeddingId>,
    pub step: ProofStep,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CertificateNode {
    /// Single-block datum.
    pub datum: ShimuraDatum,
    pub weights: WeightTuple,
    /// Coefficients of the partial Hasse classes, in cycle order.
    pub lambda: Vec<Rational>,
    /// One proof per nonempty subset of the signature-1 cycle, ordered by
    /// bitmask over the cycle labels.
    pub strata: Vec<StratumProof>,
}

impl CertificateNode {
    pub fn signature_one_count(&self) -> usize {
        self.datum.signature_one().len()
    }

    fn children(&self) -> Vec<usize> {
        self.strata
            .iter()
            .flat_map(|s| match &s.step {
                ProofStep::FullVanishing => vec![],
                ProofStep::AdjacentReduction { child, .. }
                | ProofStep::BoundaryPassThrough { child, .. }
                | ProofStep::FiberLeaf { child, .. } => vec![*child],
                ProofStep::SparseDecomposition { children, .. } => children.clone(),
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    pub datum: ShimuraDatum,
    pub weights: WeightTuple,
    /// Root node of each block of `datum`.
    pub roots: Vec<usize>,
    pub nodes: Vec<CertificateNode>,
}

impl Certificate {
    /// Longest chain of proof steps below any root.
    pub fn depth(&self) -> usize {
        let mut depth = vec![0usize; self.nodes.len()];
        for (i, node) in self.nodes.iter().enumerate() {
            depth[i] = node
                .children()
                .into_iter()
                .filter(|&c| c < i)
                .map(|c| depth[c] + 1)
                .max()
                .unwrap_or(0);
        }
        self.roots.iter().map(|&r| depth[r]).max().unwrap_or(0)
    }

    pub fn stratum_count(&self) -> usize {
        self.nodes.iter().map(|n| n.strata.len()).sum()
    }
}

/// Re-keys the weights of `block` onto the single-block datum.
fn block_weights(
    datum: &ShimuraDatum,
    t: &WeightTuple,
    block: usize,
    single: &ShimuraDatum,
) -> Result<WeightTuple> {
    let map = datum
        .signature_one_cycle(block)
        .into_iter()
        .map(|tau| (EmbeddingId::new(0, tau.slot), t.weight(tau)))
        .collect();
    WeightTuple::new(single, map)
}

fn subset(labels: &[EmbeddingId], mask: u64) -> BTreeSet<EmbeddingId> {
    labels
        .iter()
        .enumerate()
        .filter(|(i, _)| mask >> i & 1 == 1)
        .map(|(_, t)| *t)
        .collect()
}

/// `Y_τ` for a single chosen label, with the weights of `s(τ)`.
fn sparse_child(
    datum: &ShimuraDatum,
    t: &WeightTuple,
    label: EmbeddingId,
) -> Result<(ShimuraDatum, WeightTuple)> {
    let (child, _) = induced_datum(datum, &BTreeSet::from([label]))?;
    let weights = t.restricted_to(&child)?;
    Ok((child, weights))
}

fn fiber_degree(datum: &ShimuraDatum, t: &WeightTuple, label: EmbeddingId) -> Result<Rational> {
    let n = datum.n_gap(label)?;
    let next = datum.successor(label)?;
    Ok(rational::pow_q(datum.p(), n) * t.weight(label) - t.weight(next))
}

struct Builder {
    nodes: Vec<CertificateNode>,
    memo: HashMap<(ShimuraDatum, WeightTuple), usize>,
}

impl Builder {
    fn node(&mut self, datum: ShimuraDatum, t: WeightTuple) -> Result<usize> {
        let key = (datum, t);
        if let Some(&id) = self.memo.get(&key) {
            return Ok(id);
        }
        let (datum, t) = key;
        let labels = datum.signature_one_cycle(0);
        let n = labels.len();
        let lambda = if n == 0 {
            Vec::new()
        } else {
            lambda_coefficients(&datum, 0, &t.block_values(&datum, 0))?.values(&labels)
        };
        if let Some(neg) = lambda.iter().position(|l| *l < Rational::zero()) {
            return Err(CoreError::Precondition(format!(
                "negative Hasse coefficient at {}",
                datum.token(labels[neg])
            )));
        }

        let mut strata = Vec::with_capacity((1usize << n) - 1);
        for mask in 1..(1u64 << n) {
            let stratum = subset(&labels, mask);
            let step = self.prove(&datum, &t, &stratum)?;
            strata.push(StratumProof { stratum, step });
        }

        let id = self.nodes.len();
        self.nodes.push(CertificateNode {
            datum: datum.clone(),
            weights: t.clone(),
            lambda,
            strata,
        });
        self.memo.insert((datum, t), id);
        Ok(id)
    }

    fn prove(
        &mut self,
        datum: &ShimuraDatum,
        t: &WeightTuple,
        stratum: &BTreeSet<EmbeddingId>,
    ) -> Result<ProofStep> {
        match classify_stratum(datum, 0, stratum) {
            StratumClass::Empty => unreachable!("strata are nonempty"),
            StratumClass::Full => Ok(ProofStep::FullVanishing),
            StratumClass::Adjacent => {
                let pair = first_adjacent_pair(datum, 0, stratum).expect("adjacent stratum");
                // Nefness passes to the reduced tuple, so the check is skipped.
                let (d2, t2) = reduce_pair(datum, t, 0, pair)?;
                let child = self.node(d2, t2)?;
                Ok(ProofStep::AdjacentReduction { pair, child })
            }
            StratumClass::Sparse => {
                let layout = SparseLayout::new(datum, 0, stratum)?;
                let chosen = layout.chosen_labels();
                if layout.labels.len() == 2 {
                    let label = chosen[0];
                    let fiber_degree = fiber_degree(datum, t, label)?;
                    let (d2, _) = induced_datum(datum, stratum)?;
                    let t2 = t.restricted_to(&d2)?;
                    let child = self.node(d2, t2)?;
                    return Ok(ProofStep::FiberLeaf {
                        label,
                        fiber_degree,
                        child,
                    });
                }
                let (_, v) = layout.uv(datum.p(), t);
                if let Some(j) = v.iter().position(|x| x.is_zero()) {
                    let label = chosen[j];
                    let (d2, t2) = sparse_child(datum, t, label)?;
                    let child = self.node(d2, t2)?;
                    return Ok(ProofStep::BoundaryPassThrough { label, child });
                }
                let solution = sparse_solve(datum, t, 0, stratum)?;
                let children = chosen
                    .iter()
                    .map(|&label| {
                        let (d2, t2) = sparse_child(datum, t, label)?;
                        self.node(d2, t2)
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(ProofStep::SparseDecomposition { solution, children })
            }
        }
    }
}

pub fn build_certificate(datum: &ShimuraDatum, t: &WeightTuple) -> Result<Certificate> {
    build_certificate_with(datum, t, &BuildOptions::default())
}

pub fn build_certificate_with(
    datum: &ShimuraDatum,
    t: &WeightTuple,
    options: &BuildOptions,
) -> Result<Certificate> {
    let t = t.restricted_to(datum)?;
    let report = cone::nef_check(datum, &t)?;
    if !report.holds {
        return Err(cone::precondition("nef", datum, &report));
    }
    for (b, blk) in datum.blocks().iter().enumerate() {
        let n = datum.signature_one_cycle(b).len();
        if n > options.max_block_size {
            return Err(CoreError::Domain(format!(
                "block {} has {n} signature-1 slots, above the limit {}",
                blk.label, options.max_block_size
            )));
        }
    }
    let mut builder = Builder {
        nodes: Vec::new(),
        memo: HashMap::new(),
    };
    let mut roots = Vec::new();
    for b in 0..datum.blocks().len() {
        let single = datum.block_datum(b)?;
        let weights = block_weights(datum, &t, b, &single)?;
        roots.push(builder.node(single, weights)?);
    }
    Ok(Certificate {
        datum: datum.clone(),
        weights: t,
        roots,
        nodes: builder.nodes,
    })
}

/// Re-checks every node from its raw data. Nothing computed by the builder
/// is trusted: child data, reduced weights, `U`/`V`, fiber degrees and the
/// class identities are all recomputed.
pub fn verify_certificate(cert: &Certificate) -> Verdict {
    let mut ck = Checker::default();
    verify_roots(&mut ck, cert);
    for id in 0..cert.nodes.len() {
        if ck.failed() {
            break;
        }
        verify_node(&mut ck, cert, id);
    }
    ck.finish()
}

fn verify_roots(ck: &mut Checker, cert: &Certificate) {
    let datum = &cert.datum;
    let total: BTreeSet<EmbeddingId> = cert.weights.iter().map(|(t, _)| *t).collect();
    let sig1: BTreeSet<EmbeddingId> = datum.signature_one().into_iter().collect();
    ck.check(total == sig1, || {
        "weights are not indexed by the signature-1 embeddings".into()
    });
    if !ck.check(cert.roots.len() == datum.blocks().len(), || {
        "one root per block required".into()
    }) {
        return;
    }
    for (b, &root) in cert.roots.iter().enumerate() {
        let label = &datum.blocks()[b].label;
        let Some(node) = cert.nodes.get(root) else {
            return ck.fail(format!(
                "root of block {label} points to missing node {root}"
            ));
        };
        let expected = datum
            .block_datum(b)
            .and_then(|single| Ok((block_weights(datum, &cert.weights, b, &single)?, single)));
        match expected {
            Ok((weights, single)) => {
                ck.check(node.datum == single, || {
                    format!("root of block {label} certifies a different datum")
                });
                ck.check(node.weights == weights, || {
                    format!("root of block {label} certifies different weights")
                });
            }
            Err(e) => ck.fail(format!("block {label}: {e}")),
        }
    }
}

fn verify_node(ck: &mut Checker, cert: &Certificate, id: usize) {
    let node = &cert.nodes[id];
    let datum = &node.datum;
    if !ck.check(datum.blocks().len() == 1, || {
        format!("node {id}: datum must have exactly one block")
    }) {
        return;
    }
    let labels = datum.signature_one_cycle(0);
    let n = labels.len();
    let class = match node.weights.class(datum) {
        Ok(c) => c,
        Err(e) => return ck.fail(format!("node {id}: {e}")),
    };

    // Generic curves: [ω^t] = Σ λ_τ [h_τ] with λ ≥ 0.
    if !ck.check(node.lambda.len() == n, || {
        format!("node {id}: expected {n} Hasse coefficients")
    }) {
        return;
    }
    let mut expansion = PicardClass::zero(datum);
    for (tau, l) in labels.iter().zip(&node.lambda) {
        ck.check(*l >= Rational::zero(), || {
            format!(
                "node {id}: Hasse coefficient at {} is negative",
                datum.token(*tau)
            )
        });
        match hasse_class(datum, *tau).and_then(|h| expansion.add(&h.scale(l))) {
            Ok(sum) => expansion = sum,
            Err(e) => return ck.fail(format!("node {id}: {e}")),
        }
    }
    ck.check(expansion == class, || {
        format!("node {id}: Σ λ_τ [h_τ] differs from [ω^t]")
    });

    // Coverage: every nonempty subset, in bitmask order.
    if !ck.check(n < 64 && node.strata.len() == (1usize << n) - 1, || {
        format!("node {id}: strata do not cover every nonempty subset")
    }) {
        return;
    }
    let own = n;
    for (i, proof) in node.strata.iter().enumerate() {
        if ck.failed() {
            return;
        }
        let expected = subset(&labels, i as u64 + 1);
        if !ck.check(proof.stratum == expected, || {
            format!("node {id}: stratum #{} is out of order", i + 1)
        }) {
            return;
        }
        let ctx = format!("node {id}, T = {}", datum.format_set(&proof.stratum));
        verify_step(ck, cert, id, own, &class, proof, &ctx);
    }
}

fn child_node<'a>(
    ck: &mut Checker,
    cert: &'a Certificate,
    parent: usize,
    parent_size: usize,
    child: usize,
    ctx: &str,
) -> Option<&'a CertificateNode> {
    if !ck.check(child < parent, || {
        format!("{ctx}: child {child} is not listed before its parent")
    }) {
        return None;
    }
    let node = &cert.nodes[child];
    if !ck.check(node.signature_one_count() < parent_size, || {
        format!("{ctx}: child {child} does not decrease the signature-1 count")
    }) {
        return None;
    }
    Some(node)
}

fn expect_child(
    ck: &mut Checker,
    child: &CertificateNode,
    expected: Result<(ShimuraDatum, WeightTuple)>,
    ctx: &str,
) {
    match expected {
        Ok((d, t)) => {
            ck.check(child.datum == d, || {
                format!("{ctx}: child datum is not the induced datum")
            });
            ck.check(child.weights == t, || {
                format!("{ctx}: child weights do not match")
            });
        }
        Err(e) => ck.fail(format!("{ctx}: {e}")),
    }
}

fn verify_step(
    ck: &mut Checker,
    cert: &Certificate,
    id: usize,
    size: usize,
    class: &PicardClass,
    proof: &StratumProof,
    ctx: &str,
) {
    let node = &cert.nodes[id];
    let datum = &node.datum;
    let t = &node.weights;
    let stratum = &proof.stratum;
    let kind = classify_stratum(datum, 0, stratum);
    let restricted =
        match restriction_relations(datum, stratum).and_then(|rel| restrict(class, &rel)) {
            Ok(r) => r,
            Err(e) => return ck.fail(format!("{ctx}: {e}")),
        };

    match &proof.step {
        ProofStep::FullVanishing => {
            ck.check(kind == StratumClass::Full, || {
                format!("{ctx}: vanishing claimed on a {kind} stratum")
            });
            ck.check(restricted.is_zero(), || {
                format!("{ctx}: restricted class is not zero")
            });
        }
        ProofStep::AdjacentReduction { pair, child } => {
            if !ck.check(kind == StratumClass::Adjacent, || {
                format!("{ctx}: adjacent reduction on a {kind} stratum")
            }) {
                return;
            }
            ck.check(
                stratum.contains(&pair.0) && stratum.contains(&pair.1),
                || format!("{ctx}: reduction pair is not inside T"),
            );
            let Some(c) = child_node(ck, cert, id, size, *child, ctx) else {
                return;
            };
            let adjacent = datum
                .successor(pair.0)
                .map(|s| s == pair.1 && pair.0 != pair.1);
            if !ck.check(adjacent == Ok(true), || {
                format!("{ctx}: reduction pair is not adjacent")
            }) {
                return;
            }
            let expected = reduce_pair(datum, t, 0, *pair);
            if let Ok((_, t2)) = &expected {
                // j^*[ω^t] must be [ω^{t′}] on the pair's stratum.
                let pair_set = BTreeSet::from([pair.0, pair.1]);
                let matches = restriction_relations(datum, &pair_set)
                    .and_then(|rel| restrict(class, &rel))
                    .map(|r| {
                        let nonzero: BTreeMap<_, _> = t2
                            .iter()
                            .filter(|(_, w)| !w.is_zero())
                            .map(|(k, w)| (*k, w.clone()))
                            .collect();
                        *r.terms() == nonzero
                    });
                ck.check(matches == Ok(true), || {
                    format!("{ctx}: restriction to the pair stratum differs from the reduced tuple")
                });
            }
            expect_child(ck, c, expected, ctx);
        }
        ProofStep::SparseDecomposition { solution, children } => {
            if !ck.check(kind == StratumClass::Sparse, || {
                format!("{ctx}: sparse decomposition on a {kind} stratum")
            }) {
                return;
            }
            verify_sparse_into(ck, datum, t, 0, stratum, solution);
            if ck.failed() {
                return;
            }
            if !ck.check(children.len() == solution.chosen.len(), || {
                format!("{ctx}: one child per chosen label required")
            }) {
                return;
            }
            for (&label, &child) in solution.chosen.iter().zip(children) {
                let Some(c) = child_node(ck, cert, id, size, child, ctx) else {
                    return;
                };
                expect_child(ck, c, sparse_child(datum, t, label), ctx);
            }
        }
        ProofStep::BoundaryPassThrough { label, child } => {
            if !ck.check(
                kind == StratumClass::Sparse && stratum.contains(label),
                || format!("{ctx}: pass-through needs a sparse stratum containing its label"),
            ) {
                return;
            }
            let layout = match SparseLayout::new(datum, 0, stratum) {
                Ok(l) => l,
                Err(e) => return ck.fail(format!("{ctx}: {e}")),
            };
            let (_, v) = layout.uv(datum.p(), t);
            let j = layout.chosen_labels().iter().position(|l| l == label);
            ck.check(j.is_some_and(|j| v[j].is_zero()), || {
                format!("{ctx}: V at {} is not zero", datum.token(*label))
            });
            let same = s_class(datum, t, 0, *label)
                .and_then(|s| restrict(&s, &restriction_relations(datum, stratum)?));
            ck.check(same.as_ref() == Ok(&restricted), || {
                format!(
                    "{ctx}: restricted class differs from that of s({})",
                    datum.token(*label)
                )
            });
            let Some(c) = child_node(ck, cert, id, size, *child, ctx) else {
                return;
            };
            expect_child(ck, c, sparse_child(datum, t, *label), ctx);
        }
        ProofStep::FiberLeaf {
            label,
            fiber_degree: degree,
            child,
        } => {
            if !ck.check(
                kind == StratumClass::Sparse
                    && size == 2
                    && stratum.len() == 1
                    && stratum.contains(label),
                || format!("{ctx}: fiber leaf needs a single label in a two-slot cycle"),
            ) {
                return;
            }
            match fiber_degree(datum, t, *label) {
                Ok(d) => {
                    ck.check(d == *degree, || {
                        format!("{ctx}: fiber degree does not match")
                    });
                    ck.check(d >= Rational::zero(), || {
                        format!("{ctx}: fiber degree is negative")
                    });
                }
                Err(e) => return ck.fail(format!("{ctx}: {e}")),
            }
            let Some(c) = child_node(ck, cert, id, size, *child, ctx) else {
                return;
            };
            let expected = induced_datum(datum, stratum).and_then(|(d2, _)| {
                let t2 = t.restricted_to(&d2)?;
                Ok((d2, t2))
            });
            expect_child(ck, c, expected, ctx);
        }
    }
}
