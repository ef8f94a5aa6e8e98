//! Nefness certificates.
//!
//! A certificate proves `[ω^t]_p` nef block by block: the generic-curve
//! expansion in partial Hasse classes, then one proof step for every nonempty
//! stratum `T` of the block (full-cycle vanishing, reduction along an adjacent
//! pair, or a sparse decomposition), recursing into smaller induced data.

mod serial;
mod sparse;
mod tree;

use std::collections::BTreeSet;

use crate::cone::{self, WeightTuple};
use crate::datum::{EmbeddingId, ShimuraDatum, Signature};
use crate::error::{CoreError, Result};
use crate::rational::{self, Rational};

pub use serial::{certificate_from_json, certificate_to_json, verify_json, CERTIFICATE_FORMAT};
pub use sparse::{s_class, sparse_solve, verify_sparse, SparseSolution};
pub use tree::{
    build_certificate, build_certificate_with, verify_certificate, BuildOptions, Certificate,
    CertificateNode, ProofStep, StratumProof,
};

/// Outcome of a verifier: pass/fail, how many checks ran, and the first
/// failing check.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub passed: bool,
    pub checks: usize,
    pub failure: Option<String>,
}

#[derive(Default)]
pub(crate) struct Checker {
    checks: usize,
    failure: Option<String>,
}

impl Checker {
    /// Records a check; only the first failure is kept. Returns `cond`.
    pub(crate) fn check(&mut self, cond: bool, msg: impl FnOnce() -> String) -> bool {
        self.checks += 1;
        if !cond && self.failure.is_none() {
            self.failure = Some(msg());
        }
        cond
    }

    pub(crate) fn fail(&mut self, msg: String) {
        self.check(false, || msg);
    }

    pub(crate) fn failed(&self) -> bool {
        self.failure.is_some()
    }

    pub(crate) fn finish(self) -> Verdict {
        Verdict {
            passed: self.failure.is_none(),
            checks: self.checks,
            failure: self.failure,
        }
    }
}

/// Restricts to the stratum of an adjacent pair `(τ_1, τ_2 = σ^{-n_1}τ_1)`.
///
/// Returns the induced datum (τ_1 to signature 0, τ_2 to signature 2) and the
/// tuple equal to `t` except on `τ_3 = σ^{-n_2}τ_2`, whose weight becomes
/// `p^{n_1+n_2}t_1 − p^{n_2}t_2 + t_3`. With two signature-1 slots the pair is
/// the whole block and the block drops out.
pub fn adjacent_reduce(
    datum: &ShimuraDatum,
    t: &WeightTuple,
    block: usize,
    pair: (EmbeddingId, EmbeddingId),
) -> Result<(ShimuraDatum, WeightTuple)> {
    let (first, second) = pair;
    for tau in [first, second] {
        if tau.block != block || !datum.is_signature_one(tau) {
            return Err(CoreError::Domain(format!(
                "{} is not a signature-1 embedding of block {block}",
                datum.token(tau)
            )));
        }
    }
    if first == second || datum.successor(first)? != second {
        return Err(CoreError::Domain(format!(
            "{} and {} are not adjacent signature-1 labels",
            datum.token(first),
            datum.token(second)
        )));
    }
    let report = cone::nef_check(datum, t)?;
    if !report.holds {
        return Err(cone::precondition("nef", datum, &report));
    }
    reduce_pair(datum, t, block, pair)
}

/// [`adjacent_reduce`] without the nef precondition; `pair` must already be
/// known to be adjacent.
pub(crate) fn reduce_pair(
    datum: &ShimuraDatum,
    t: &WeightTuple,
    block: usize,
    pair: (EmbeddingId, EmbeddingId),
) -> Result<(ShimuraDatum, WeightTuple)> {
    let (first, second) = pair;
    let mut row = datum.signature_row(block).to_vec();
    row[first.slot - 1] = Signature::Zero;
    row[second.slot - 1] = Signature::Two;
    let reduced = datum.with_block_signature(block, row)?;

    let third = datum.successor(second)?;
    let mut weights = t.as_map().clone();
    weights.remove(&first);
    weights.remove(&second);
    if third != first {
        let p = datum.p();
        let (n1, n2) = (datum.n_gap(first)?, datum.n_gap(second)?);
        let merged: Rational = rational::pow_q(p, n1 + n2) * t.weight(first)
            - rational::pow_q(p, n2) * t.weight(second)
            + t.weight(third);
        weights.insert(third, merged);
    }
    let reduced_t = WeightTuple::new(&reduced, weights)?;
    Ok((reduced, reduced_t))
}

/// Lowest-label adjacent pair of `t_block` in the block's signature-1 cycle.
pub fn first_adjacent_pair(
    datum: &ShimuraDatum,
    block: usize,
    t_block: &BTreeSet<EmbeddingId>,
) -> Option<(EmbeddingId, EmbeddingId)> {
    let labels = datum.signature_one_cycle(block);
    let n = labels.len();
    if n < 2 {
        return None;
    }
    (0..n)
        .find(|&i| t_block.contains(&labels[i]) && t_block.contains(&labels[(i + 1) % n]))
        .map(|i| (labels[i], labels[(i + 1) % n]))
}
