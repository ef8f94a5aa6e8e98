//! Goren–Oort stratum combinatorics.
//!
//! A stratum is a set `T` of signature-1 embeddings. Within a block, `T`
//! splits into maximal successor chains (cycles); odd chains are padded by
//! their successor to get `T′`, whose odd positions go to signature 0 and even
//! positions to signature 2 in the induced datum.

use std::collections::BTreeSet;

use crate::datum::{EmbeddingId, ShimuraDatum, Signature};
use crate::error::{CoreError, Result};
use crate::picard::RelationSet;

pub type EmbeddingSet = BTreeSet<EmbeddingId>;

/// Classification of `T` inside one block's signature-1 cycle.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum StratumClass {
    Empty,
    Full,
    Adjacent,
    Sparse,
}

impl std::fmt::Display for StratumClass {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            StratumClass::Empty => "empty",
            StratumClass::Full => "full",
            StratumClass::Adjacent => "adjacent",
            StratumClass::Sparse => "sparse",
        };
        f.write_str(s)
    }
}

fn check_block_subset(datum: &ShimuraDatum, block: usize, t_block: &EmbeddingSet) -> Result<()> {
    datum.block(block)?;
    for &tau in t_block {
        if tau.block != block {
            return Err(CoreError::Input(format!(
                "{} is not in block {}",
                datum.token(tau),
                datum.blocks()[block].label
            )));
        }
        if !datum.is_signature_one(tau) {
            return Err(CoreError::Domain(format!(
                "{} is not a signature-1 embedding",
                datum.token(tau)
            )));
        }
    }
    Ok(())
}

fn check_proper(datum: &ShimuraDatum, block: usize, t_block: &EmbeddingSet) -> Result<()> {
    let all = datum.signature_one_cycle(block);
    if !all.is_empty() && t_block.len() == all.len() {
        return Err(CoreError::Stratum(format!(
            "stratum contains every signature-1 slot of block {}",
            datum.blocks()[block].label
        )));
    }
    Ok(())
}

/// Maximal successor chains of `T_block`, ordered by the slot of their head.
pub fn cycle_decomposition(
    datum: &ShimuraDatum,
    block: usize,
    t_block: &EmbeddingSet,
) -> Result<Vec<Vec<EmbeddingId>>> {
    check_block_subset(datum, block, t_block)?;
    check_proper(datum, block, t_block)?;
    let mut cycles = Vec::new();
    for &head in t_block {
        if t_block.contains(&datum.predecessor(head)?) {
            continue;
        }
        let mut chain = vec![head];
        let mut next = datum.successor(head)?;
        while t_block.contains(&next) {
            chain.push(next);
            next = datum.successor(next)?;
        }
        cycles.push(chain);
    }
    Ok(cycles)
}

/// Pads every odd cycle by its successor; returns `(T′, I_T)`.
pub fn extend_to_even(
    datum: &ShimuraDatum,
    cycles: &[Vec<EmbeddingId>],
) -> Result<(EmbeddingSet, EmbeddingSet)> {
    let extended = extended_cycles(datum, cycles)?;
    let t_prime: EmbeddingSet = extended.iter().flatten().copied().collect();
    let original: EmbeddingSet = cycles.iter().flatten().copied().collect();
    let i_t = t_prime.difference(&original).copied().collect();
    Ok((t_prime, i_t))
}

/// The cycles `C′_i` themselves, in the same order as `cycles`.
pub fn extended_cycles(
    datum: &ShimuraDatum,
    cycles: &[Vec<EmbeddingId>],
) -> Result<Vec<Vec<EmbeddingId>>> {
    let members: EmbeddingSet = cycles.iter().flatten().copied().collect();
    let mut seen = EmbeddingSet::new();
    let mut out = Vec::with_capacity(cycles.len());
    for cycle in cycles {
        let mut c = cycle.clone();
        if c.len() % 2 == 1 {
            let tail = *c.last().expect("cycles are nonempty");
            let extra = datum.successor(tail)?;
            if members.contains(&extra) || !seen.insert(extra) {
                return Err(CoreError::Stratum(format!(
                    "padding element {} collides with the stratum",
                    datum.token(extra)
                )));
            }
            c.push(extra);
        }
        out.push(c);
    }
    Ok(out)
}

/// `Δ(T)` restricted to a block: for every odd position `τ_j` of every
/// extended cycle, the segment `τ_j, σ⁻¹τ_j, …, σ^{-(n_{τ_j}-1)}τ_j`.
pub fn delta_set(
    datum: &ShimuraDatum,
    block: usize,
    t_block: &EmbeddingSet,
) -> Result<EmbeddingSet> {
    let cycles = cycle_decomposition(datum, block, t_block)?;
    let extended = extended_cycles(datum, &cycles)?;
    let mut delta = EmbeddingSet::new();
    for cycle in &extended {
        for &tau in cycle.iter().step_by(2) {
            let mut cur = tau;
            for _ in 0..datum.n_gap(tau)? {
                delta.insert(cur);
                cur = datum.sigma_inverse(cur)?;
            }
        }
    }
    Ok(delta)
}

/// Full combinatorial description of a stratum satisfying the properness
/// assumption in every block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StratumDescriptor {
    pub stratum: EmbeddingSet,
    pub cycles: Vec<Vec<EmbeddingId>>,
    pub extended_cycles: Vec<Vec<EmbeddingId>>,
    pub t_prime: EmbeddingSet,
    pub t_prime_zero: EmbeddingSet,
    pub t_prime_two: EmbeddingSet,
    pub i_t: EmbeddingSet,
    pub delta: EmbeddingSet,
    pub induced: ShimuraDatum,
}

impl StratumDescriptor {
    pub fn bundle_rank(&self) -> usize {
        self.i_t.len()
    }
}

fn validate_stratum(datum: &ShimuraDatum, t: &EmbeddingSet) -> Result<()> {
    for &tau in t {
        datum.check(tau)?;
        if !datum.is_signature_one(tau) {
            return Err(CoreError::Domain(format!(
                "{} is not a signature-1 embedding",
                datum.token(tau)
            )));
        }
    }
    Ok(())
}

fn block_part(t: &EmbeddingSet, block: usize) -> EmbeddingSet {
    t.iter().filter(|e| e.block == block).copied().collect()
}

pub fn describe(datum: &ShimuraDatum, t: &EmbeddingSet) -> Result<StratumDescriptor> {
    validate_stratum(datum, t)?;
    let mut cycles = Vec::new();
    let mut extended = Vec::new();
    let mut delta = EmbeddingSet::new();
    for block in 0..datum.blocks().len() {
        let tb = block_part(t, block);
        let c = cycle_decomposition(datum, block, &tb)?;
        extended.extend(extended_cycles(datum, &c)?);
        cycles.extend(c);
        delta.extend(delta_set(datum, block, &tb)?);
    }
    let mut t_prime_zero = EmbeddingSet::new();
    let mut t_prime_two = EmbeddingSet::new();
    for cycle in &extended {
        for (pos, &tau) in cycle.iter().enumerate() {
            if pos % 2 == 0 {
                t_prime_zero.insert(tau);
            } else {
                t_prime_two.insert(tau);
            }
        }
    }
    let t_prime: EmbeddingSet = t_prime_zero.union(&t_prime_two).copied().collect();
    let i_t: EmbeddingSet = t_prime.difference(t).copied().collect();

    let mut induced = datum.clone();
    for block in 0..datum.blocks().len() {
        let row: Vec<Signature> = (1..=datum.blocks()[block].inertia_degree)
            .map(|slot| {
                let tau = EmbeddingId::new(block, slot);
                if t_prime_zero.contains(&tau) {
                    Signature::Zero
                } else if t_prime_two.contains(&tau) {
                    Signature::Two
                } else {
                    datum.signature_row(block)[slot - 1]
                }
            })
            .collect();
        induced = induced.with_block_signature(block, row)?;
    }
    Ok(StratumDescriptor {
        stratum: t.clone(),
        cycles,
        extended_cycles: extended,
        t_prime,
        t_prime_zero,
        t_prime_two,
        i_t,
        delta,
        induced,
    })
}

/// The datum `P′` describing `X_T` as a `(P¹)^{I_T}`-bundle base, and `I_T`.
pub fn induced_datum(
    datum: &ShimuraDatum,
    t: &EmbeddingSet,
) -> Result<(ShimuraDatum, EmbeddingSet)> {
    let d = describe(datum, t)?;
    Ok((d.induced, d.i_t))
}

/// Tags `T_block` using the labels `1..N` of the block's signature-1 cycle.
pub fn classify_stratum(
    datum: &ShimuraDatum,
    block: usize,
    t_block: &EmbeddingSet,
) -> StratumClass {
    let labels = datum.signature_one_cycle(block);
    let chosen: Vec<usize> = labels
        .iter()
        .enumerate()
        .filter(|(_, t)| t_block.contains(t))
        .map(|(i, _)| i)
        .collect();
    classify_labels(labels.len(), &chosen)
}

/// Same classification on 0-based labels in a cycle of length `n`.
pub fn classify_labels(n: usize, chosen: &[usize]) -> StratumClass {
    if chosen.is_empty() {
        return StratumClass::Empty;
    }
    if chosen.len() == n {
        return StratumClass::Full;
    }
    let set: BTreeSet<usize> = chosen.iter().copied().collect();
    if set.iter().any(|&i| set.contains(&((i + 1) % n))) {
        StratumClass::Adjacent
    } else {
        StratumClass::Sparse
    }
}

/// One oriented relation `[ω_τ] + p^{n_τ}[ω_{σ^{-n_τ}τ}] = 0` per `τ ∈ T`.
/// Strata containing whole blocks are allowed.
pub fn restriction_relations(datum: &ShimuraDatum, t: &EmbeddingSet) -> Result<RelationSet> {
    validate_stratum(datum, t)?;
    RelationSet::new(datum, t)
}
