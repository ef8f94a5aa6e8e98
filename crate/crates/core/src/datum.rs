//! Combinatorial Shimura datum: Frobenius-cyclic blocks of embeddings, one per
//! prime above `p`, with a 0/1/2 signature on every embedding.
//!
//! Orientation: `σ⁻¹` sends slot `j` to slot `j + 1` (wrapping `f → 1`). Slots
//! are 1-indexed everywhere.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{CoreError, Result};

/// Embedding `τ_{block, slot}`; `slot` is 1-indexed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EmbeddingId {
    pub block: usize,
    pub slot: usize,
}

impl EmbeddingId {
    pub fn new(block: usize, slot: usize) -> Self {
        EmbeddingId { block, slot }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PrimeBlock {
    pub label: String,
    pub inertia_degree: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Signature {
    Zero,
    One,
    Two,
}

impl Signature {
    pub fn from_digit(d: u8) -> Result<Self> {
        match d {
            0 => Ok(Signature::Zero),
            1 => Ok(Signature::One),
            2 => Ok(Signature::Two),
            _ => Err(CoreError::Input(format!(
                "signature must be 0, 1 or 2, got {d}"
            ))),
        }
    }

    pub fn digit(self) -> u8 {
        match self {
            Signature::Zero => 0,
            Signature::One => 1,
            Signature::Two => 2,
        }
    }
}

impl fmt::Display for Signature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.digit())
    }
}

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u64;
    while d.saturating_mul(d) <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ShimuraDatum {
    p: u64,
    blocks: Vec<PrimeBlock>,
    signature: Vec<Vec<Signature>>,
}

impl ShimuraDatum {
    /// Builds a datum from `(label, signature row)` pairs; each row's length is
    /// the block's inertia degree.
    pub fn new(p: u64, blocks: Vec<(String, Vec<Signature>)>) -> Result<Self> {
        if !is_prime(p) {
            return Err(CoreError::Input(format!("p = {p} is not prime")));
        }
        let mut labels = std::collections::BTreeSet::new();
        let mut out_blocks = Vec::with_capacity(blocks.len());
        let mut signature = Vec::with_capacity(blocks.len());
        for (label, row) in blocks {
            if row.is_empty() {
                return Err(CoreError::Input(format!(
                    "block {label:?} has inertia degree 0"
                )));
            }
            if label.is_empty() || label.contains(['.', ',']) || label.contains(char::is_whitespace)
            {
                return Err(CoreError::Input(format!("invalid block label {label:?}")));
            }
            if !labels.insert(label.clone()) {
                return Err(CoreError::Input(format!("duplicate block label {label:?}")));
            }
            out_blocks.push(PrimeBlock {
                label,
                inertia_degree: row.len(),
            });
            signature.push(row);
        }
        Ok(ShimuraDatum {
            p,
            blocks: out_blocks,
            signature,
        })
    }

    /// Shorthand taking signature digits.
    pub fn from_digits(p: u64, blocks: &[(&str, &[u8])]) -> Result<Self> {
        let blocks = blocks
            .iter()
            .map(|(label, digits)| {
                let row = digits
                    .iter()
                    .map(|&d| Signature::from_digit(d))
                    .collect::<Result<Vec<_>>>()?;
                Ok((label.to_string(), row))
            })
            .collect::<Result<Vec<_>>>()?;
        ShimuraDatum::new(p, blocks)
    }

    /// The Hilbert case: one block of inertia degree `f`, every slot signature 1.
    pub fn hilbert(p: u64, f: usize) -> Result<Self> {
        ShimuraDatum::new(p, vec![("p1".to_string(), vec![Signature::One; f])])
    }

    pub fn p(&self) -> u64 {
        self.p
    }

    pub fn blocks(&self) -> &[PrimeBlock] {
        &self.blocks
    }

    pub fn block(&self, block: usize) -> Result<&PrimeBlock> {
        self.blocks
            .get(block)
            .ok_or_else(|| CoreError::Input(format!("no block with index {block}")))
    }

    pub fn block_index(&self, label: &str) -> Result<usize> {
        self.blocks
            .iter()
            .position(|b| b.label == label)
            .ok_or_else(|| CoreError::Input(format!("unknown block {label:?}")))
    }

    pub fn signature_row(&self, block: usize) -> &[Signature] {
        &self.signature[block]
    }

    pub fn check(&self, tau: EmbeddingId) -> Result<()> {
        match self.blocks.get(tau.block) {
            Some(b) if (1..=b.inertia_degree).contains(&tau.slot) => Ok(()),
            _ => Err(CoreError::Input(format!("unknown embedding {tau:?}"))),
        }
    }

    pub fn signature(&self, tau: EmbeddingId) -> Result<Signature> {
        self.check(tau)?;
        Ok(self.signature[tau.block][tau.slot - 1])
    }

    pub fn is_signature_one(&self, tau: EmbeddingId) -> bool {
        self.signature(tau) == Ok(Signature::One)
    }

    /// Every embedding of the datum, block by block.
    pub fn embeddings(&self) -> impl Iterator<Item = EmbeddingId> + '_ {
        self.blocks
            .iter()
            .enumerate()
            .flat_map(|(b, blk)| (1..=blk.inertia_degree).map(move |s| EmbeddingId::new(b, s)))
    }

    /// All signature-1 embeddings in (block, slot) order.
    pub fn signature_one(&self) -> Vec<EmbeddingId> {
        self.embeddings()
            .filter(|&t| self.signature[t.block][t.slot - 1] == Signature::One)
            .collect()
    }

    /// Embeddings with the given signature, in (block, slot) order.
    pub fn with_signature(&self, sig: Signature) -> Vec<EmbeddingId> {
        self.embeddings()
            .filter(|&t| self.signature[t.block][t.slot - 1] == sig)
            .collect()
    }

    pub fn sigma_inverse(&self, tau: EmbeddingId) -> Result<EmbeddingId> {
        self.check(tau)?;
        let f = self.blocks[tau.block].inertia_degree;
        Ok(EmbeddingId::new(tau.block, tau.slot % f + 1))
    }

    /// Signature-1 slots of `block` in cyclic `σ⁻¹` order, starting from the
    /// lowest slot.
    pub fn signature_one_cycle(&self, block: usize) -> Vec<EmbeddingId> {
        match self.signature.get(block) {
            Some(row) => row
                .iter()
                .enumerate()
                .filter(|(_, s)| **s == Signature::One)
                .map(|(i, _)| EmbeddingId::new(block, i + 1))
                .collect(),
            None => Vec::new(),
        }
    }

    /// Smallest `n ≥ 1` with `σ⁻ⁿτ` of signature 1.
    pub fn n_gap(&self, tau: EmbeddingId) -> Result<u32> {
        if self.signature(tau)? != Signature::One {
            return Err(CoreError::Domain(format!(
                "n-gap requested for {} which does not have signature 1",
                self.token(tau)
            )));
        }
        let row = &self.signature[tau.block];
        let f = row.len();
        (1..=f)
            .find(|n| row[(tau.slot - 1 + n) % f] == Signature::One)
            .map(|n| n as u32)
            .ok_or_else(|| CoreError::Domain("block has no signature-1 slot".into()))
    }

    /// `σ^{-n_τ}τ`: the next signature-1 embedding along the cycle.
    pub fn successor(&self, tau: EmbeddingId) -> Result<EmbeddingId> {
        let n = self.n_gap(tau)? as usize;
        let f = self.blocks[tau.block].inertia_degree;
        Ok(EmbeddingId::new(tau.block, (tau.slot - 1 + n) % f + 1))
    }

    /// The signature-1 embedding whose successor is `tau`.
    pub fn predecessor(&self, tau: EmbeddingId) -> Result<EmbeddingId> {
        if self.signature(tau)? != Signature::One {
            return Err(CoreError::Domain(format!(
                "{} does not have signature 1",
                self.token(tau)
            )));
        }
        let row = &self.signature[tau.block];
        let f = row.len();
        let back = (1..=f)
            .find(|n| row[(tau.slot - 1 + f * 2 - n) % f] == Signature::One)
            .expect("tau itself has signature 1");
        Ok(EmbeddingId::new(
            tau.block,
            (tau.slot - 1 + f * 2 - back) % f + 1,
        ))
    }

    /// Copy of the datum with a replaced signature row for one block.
    pub fn with_block_signature(&self, block: usize, row: Vec<Signature>) -> Result<Self> {
        let blk = self.block(block)?;
        if row.len() != blk.inertia_degree {
            return Err(CoreError::Input("signature row length mismatch".into()));
        }
        let mut out = self.clone();
        out.signature[block] = row;
        Ok(out)
    }

    /// The single-block datum carrying only `block`.
    pub fn block_datum(&self, block: usize) -> Result<Self> {
        let blk = self.block(block)?;
        Ok(ShimuraDatum {
            p: self.p,
            blocks: vec![blk.clone()],
            signature: vec![self.signature[block].clone()],
        })
    }

    /// `"label.slot"` token used in all textual I/O.
    pub fn token(&self, tau: EmbeddingId) -> String {
        match self.blocks.get(tau.block) {
            Some(b) => format!("{}.{}", b.label, tau.slot),
            None => format!("?{}.{}", tau.block, tau.slot),
        }
    }

    pub fn parse_token(&self, token: &str) -> Result<EmbeddingId> {
        let token = token.trim();
        let (label, slot) = token
            .rsplit_once('.')
            .ok_or_else(|| CoreError::Input(format!("bad embedding token {token:?}")))?;
        let block = self.block_index(label)?;
        let slot: usize = slot
            .parse()
            .map_err(|_| CoreError::Input(format!("bad slot in token {token:?}")))?;
        let tau = EmbeddingId::new(block, slot);
        self.check(tau)?;
        Ok(tau)
    }

    /// Parses a comma-separated token list such as `"p1.2,p1.7,p1.10"`.
    pub fn parse_tokens(&self, list: &str) -> Result<Vec<EmbeddingId>> {
        if list.trim().is_empty() {
            return Ok(Vec::new());
        }
        list.split(',').map(|t| self.parse_token(t)).collect()
    }

    /// Renders a set of embeddings as `{a.1,a.2}`.
    pub fn format_set<'a>(&self, set: impl IntoIterator<Item = &'a EmbeddingId>) -> String {
        let parts: Vec<String> = set.into_iter().map(|&t| self.token(t)).collect();
        format!("{{{}}}", parts.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn f12_datum() -> ShimuraDatum {
        ShimuraDatum::from_digits(2, &[("p1", &[1, 1, 0, 0, 1, 2, 1, 2, 0, 1, 1, 0])]).unwrap()
    }

    #[test]
    fn sigma_inverse_increments_and_wraps() {
        let d = f12_datum();
        assert_eq!(
            d.sigma_inverse(EmbeddingId::new(0, 2)).unwrap(),
            EmbeddingId::new(0, 3)
        );
        assert_eq!(
            d.sigma_inverse(EmbeddingId::new(0, 12)).unwrap(),
            EmbeddingId::new(0, 1)
        );
        let single = ShimuraDatum::hilbert(3, 1).unwrap();
        assert_eq!(
            single.sigma_inverse(EmbeddingId::new(0, 1)).unwrap(),
            EmbeddingId::new(0, 1)
        );
        assert!(d.sigma_inverse(EmbeddingId::new(0, 13)).is_err());
        assert!(d.sigma_inverse(EmbeddingId::new(1, 1)).is_err());
    }

    #[test]
    fn signature_one_cycle_listing() {
        let d = f12_datum();
        let slots: Vec<usize> = d.signature_one_cycle(0).iter().map(|t| t.slot).collect();
        assert_eq!(slots, vec![1, 2, 5, 7, 10, 11]);
        let zero = ShimuraDatum::from_digits(2, &[("q", &[0, 0, 2])]).unwrap();
        assert!(zero.signature_one_cycle(0).is_empty());
        let all = ShimuraDatum::hilbert(2, 3).unwrap();
        let slots: Vec<usize> = all.signature_one_cycle(0).iter().map(|t| t.slot).collect();
        assert_eq!(slots, vec![1, 2, 3]);
    }

    #[test]
    fn n_gap_values() {
        let d = f12_datum();
        let gaps: Vec<u32> = d
            .signature_one_cycle(0)
            .iter()
            .map(|&t| d.n_gap(t).unwrap())
            .collect();
        assert_eq!(gaps, vec![1, 3, 2, 3, 1, 2]);
        assert_eq!(d.n_gap(EmbeddingId::new(0, 2)).unwrap(), 3);
        assert_eq!(d.n_gap(EmbeddingId::new(0, 10)).unwrap(), 1);
        assert!(matches!(
            d.n_gap(EmbeddingId::new(0, 3)),
            Err(CoreError::Domain(_))
        ));
        let h = ShimuraDatum::hilbert(5, 4).unwrap();
        for t in h.signature_one() {
            assert_eq!(h.n_gap(t).unwrap(), 1);
        }
    }

    #[test]
    fn predecessor_inverts_successor() {
        let d = f12_datum();
        for t in d.signature_one() {
            assert_eq!(d.predecessor(d.successor(t).unwrap()).unwrap(), t);
        }
    }

    #[test]
    fn rejects_bad_data() {
        assert!(ShimuraDatum::from_digits(4, &[("a", &[1])]).is_err());
        assert!(ShimuraDatum::from_digits(2, &[("a", &[])]).is_err());
        assert!(ShimuraDatum::from_digits(2, &[("a", &[3])]).is_err());
        assert!(ShimuraDatum::from_digits(2, &[("a", &[1]), ("a", &[1])]).is_err());
        assert!(ShimuraDatum::from_digits(2, &[("a.b", &[1])]).is_err());
    }

    #[test]
    fn tokens_round_trip() {
        let d = f12_datum();
        let ts = d.parse_tokens("p1.2,p1.7, p1.10").unwrap();
        assert_eq!(d.format_set(&ts), "{p1.2,p1.7,p1.10}");
        assert!(d.parse_tokens("p1.13").is_err());
        assert!(d.parse_tokens("p2.1").is_err());
        assert!(d.parse_tokens("p1").is_err());
    }
}
