//! Rational Picard classes in the `[ω_τ]` basis (τ of signature 1), partial
//! Hasse classes, and normal forms modulo the relations that hold on a
//! Goren–Oort stratum.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::hash::{DefaultHasher, Hash, Hasher};

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::datum::{EmbeddingId, ShimuraDatum};
use crate::error::{CoreError, Result};
use crate::rational::{self, Rational};

fn datum_key(datum: &ShimuraDatum) -> u64 {
    let mut h = DefaultHasher::new();
    datum.hash(&mut h);
    h.finish()
}

/// Finitely supported combination `Σ c_τ [ω_τ]`. Zero coefficients are never
/// stored.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PicardClass {
    key: u64,
    coeffs: BTreeMap<EmbeddingId, Rational>,
}

impl PicardClass {
    pub fn zero(datum: &ShimuraDatum) -> Self {
        PicardClass {
            key: datum_key(datum),
            coeffs: BTreeMap::new(),
        }
    }

    /// `[ω_τ]` for a signature-1 embedding.
    pub fn omega(datum: &ShimuraDatum, tau: EmbeddingId) -> Result<Self> {
        Self::from_terms(datum, [(tau, Rational::one())])
    }

    pub fn from_terms(
        datum: &ShimuraDatum,
        terms: impl IntoIterator<Item = (EmbeddingId, Rational)>,
    ) -> Result<Self> {
        let mut out = Self::zero(datum);
        for (tau, c) in terms {
            if !datum.is_signature_one(tau) {
                return Err(CoreError::Domain(format!(
                    "{} is not a signature-1 embedding",
                    datum.token(tau)
                )));
            }
            out.accumulate(tau, &c);
        }
        Ok(out)
    }

    pub(crate) fn accumulate(&mut self, tau: EmbeddingId, c: &Rational) {
        if c.is_zero() {
            return;
        }
        let entry = self.coeffs.entry(tau).or_insert_with(Rational::zero);
        *entry += c;
        if entry.is_zero() {
            self.coeffs.remove(&tau);
        }
    }

    pub fn coeff(&self, tau: EmbeddingId) -> Rational {
        self.coeffs
            .get(&tau)
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    pub fn terms(&self) -> &BTreeMap<EmbeddingId, Rational> {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn belongs_to(&self, datum: &ShimuraDatum) -> bool {
        self.key == datum_key(datum)
    }

    pub fn add(&self, other: &PicardClass) -> Result<PicardClass> {
        if self.key != other.key {
            return Err(CoreError::DatumMismatch);
        }
        let mut out = self.clone();
        for (tau, c) in &other.coeffs {
            out.accumulate(*tau, c);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &PicardClass) -> Result<PicardClass> {
        self.add(&other.scale(&-Rational::one()))
    }

    pub fn scale(&self, c: &Rational) -> PicardClass {
        if c.is_zero() {
            return PicardClass {
                key: self.key,
                coeffs: BTreeMap::new(),
            };
        }
        PicardClass {
            key: self.key,
            coeffs: self.coeffs.iter().map(|(t, x)| (*t, x * c)).collect(),
        }
    }

    /// The part of the class supported on one block.
    pub fn block_part(&self, block: usize) -> PicardClass {
        PicardClass {
            key: self.key,
            coeffs: self
                .coeffs
                .iter()
                .filter(|(t, _)| t.block == block)
                .map(|(t, c)| (*t, c.clone()))
                .collect(),
        }
    }

    pub fn display<'a>(&'a self, datum: &'a ShimuraDatum) -> ClassDisplay<'a> {
        ClassDisplay { class: self, datum }
    }
}

pub struct ClassDisplay<'a> {
    class: &'a PicardClass,
    datum: &'a ShimuraDatum,
}

impl fmt::Display for ClassDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.class.is_zero() {
            return write!(f, "0");
        }
        let parts: Vec<String> = self
            .class
            .coeffs
            .iter()
            .map(|(t, c)| format!("{}·[ω_{}]", rational::format(c), self.datum.token(*t)))
            .collect();
        write!(f, "{}", parts.join(" + "))
    }
}

/// `[h_τ] = p^{n_τ}[ω_{σ^{-n_τ}τ}] − [ω_τ]`; collapses to `(p^{n_τ} − 1)[ω_τ]`
/// when τ is the only signature-1 slot of its block.
pub fn hasse_class(datum: &ShimuraDatum, tau: EmbeddingId) -> Result<PicardClass> {
    let n = datum.n_gap(tau)?;
    let target = datum.successor(tau)?;
    let mut out = PicardClass::zero(datum);
    out.accumulate(target, &rational::pow_q(datum.p(), n));
    out.accumulate(tau, &-Rational::one());
    Ok(out)
}

/// `[det ω] = 2 Σ_{τ ∈ Σ_{∞,1}} [ω_τ]`.
pub fn det_omega_class(datum: &ShimuraDatum) -> PicardClass {
    let two = rational::int(2);
    let mut out = PicardClass::zero(datum);
    for tau in datum.signature_one() {
        out.accumulate(tau, &two);
    }
    out
}

/// Oriented relation `[ω_source] = −factor · [ω_target]`, i.e.
/// `[ω_source] + p^{n}[ω_target] = 0` with `target = σ^{-n}source`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Relation {
    pub source: EmbeddingId,
    pub target: EmbeddingId,
    pub gap: u32,
    pub factor: BigInt,
}

/// Relations holding in `Pic(X_T)_Q`, one per element of the stratum `T`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RelationSet {
    key: u64,
    stratum: BTreeSet<EmbeddingId>,
    relations: BTreeMap<EmbeddingId, Relation>,
}

impl RelationSet {
    pub fn new(datum: &ShimuraDatum, stratum: &BTreeSet<EmbeddingId>) -> Result<Self> {
        let mut relations = BTreeMap::new();
        for &tau in stratum {
            let gap = datum.n_gap(tau)?;
            relations.insert(
                tau,
                Relation {
                    source: tau,
                    target: datum.successor(tau)?,
                    gap,
                    factor: rational::pow(datum.p(), gap),
                },
            );
        }
        Ok(RelationSet {
            key: datum_key(datum),
            stratum: stratum.clone(),
            relations,
        })
    }

    pub fn stratum(&self) -> &BTreeSet<EmbeddingId> {
        &self.stratum
    }

    pub fn relations(&self) -> impl Iterator<Item = &Relation> {
        self.relations.values()
    }

    pub fn get(&self, tau: EmbeddingId) -> Option<&Relation> {
        self.relations.get(&tau)
    }

    /// Image of a single generator: `Some((c, σ))` meaning `c·[ω_σ]`, or
    /// `None` when the generator dies (its chain closes up inside `T`).
    pub fn image(&self, tau: EmbeddingId) -> Option<(BigInt, EmbeddingId)> {
        let mut coeff = BigInt::one();
        let mut current = tau;
        let mut steps = 0usize;
        while let Some(rel) = self.relations.get(&current) {
            coeff *= &rel.factor;
            coeff = -coeff;
            current = rel.target;
            steps += 1;
            // The chain can only revisit a generator if T contains a whole
            // block cycle; then (1 − (−1)^N p^{Σn})[ω] = 0 forces every class
            // in that block to vanish.
            if current == tau || steps > self.relations.len() {
                return None;
            }
        }
        Some((coeff, current))
    }
}

/// Normal form of `class` in `Pic(X_T)_Q`: every `[ω_τ]` with `τ ∈ T` is
/// eliminated along its relation chain.
pub fn restrict(class: &PicardClass, rel: &RelationSet) -> Result<PicardClass> {
    if class.key != rel.key {
        return Err(CoreError::DatumMismatch);
    }
    let mut out = PicardClass {
        key: class.key,
        coeffs: BTreeMap::new(),
    };
    for (tau, c) in &class.coeffs {
        if let Some((factor, target)) = rel.image(*tau) {
            out.accumulate(target, &(c * &factor));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, int};

    fn e(slot: usize) -> EmbeddingId {
        EmbeddingId::new(0, slot)
    }

    fn f12_datum() -> ShimuraDatum {
        ShimuraDatum::from_digits(2, &[("p1", &[1, 1, 0, 0, 1, 2, 1, 2, 0, 1, 1, 0])]).unwrap()
    }

    fn set(slots: &[usize]) -> BTreeSet<EmbeddingId> {
        slots.iter().map(|&s| e(s)).collect()
    }

    #[test]
    fn add_and_scale() {
        let d = ShimuraDatum::hilbert(2, 2).unwrap();
        let a = PicardClass::from_terms(&d, [(e(1), int(1))]).unwrap();
        let b = PicardClass::from_terms(&d, [(e(1), frac(1, 2)), (e(2), int(3))]).unwrap();
        let sum = a.add(&b).unwrap();
        assert_eq!(sum.coeff(e(1)), frac(3, 2));
        assert_eq!(sum.coeff(e(2)), int(3));
        assert!(a.add(&a.scale(&int(-1))).unwrap().is_zero());
        assert!(b.scale(&int(0)).is_zero());
    }

    #[test]
    fn mismatched_data_are_rejected() {
        let d1 = ShimuraDatum::hilbert(2, 2).unwrap();
        let d2 = ShimuraDatum::hilbert(3, 2).unwrap();
        let a = PicardClass::omega(&d1, e(1)).unwrap();
        let b = PicardClass::omega(&d2, e(1)).unwrap();
        assert_eq!(a.add(&b), Err(CoreError::DatumMismatch));
        let rel = RelationSet::new(&d2, &set(&[1])).unwrap();
        assert_eq!(restrict(&a, &rel), Err(CoreError::DatumMismatch));
        let z = ShimuraDatum::from_digits(2, &[("p1", &[1, 0])]).unwrap();
        assert!(PicardClass::omega(&z, e(2)).is_err());
    }

    #[test]
    fn hasse_class_examples() {
        let d = f12_datum();
        let h = hasse_class(&d, e(2)).unwrap();
        assert_eq!(
            h,
            PicardClass::from_terms(&d, [(e(5), int(8)), (e(2), int(-1))]).unwrap()
        );

        let d = ShimuraDatum::hilbert(3, 2).unwrap();
        let h = hasse_class(&d, e(1)).unwrap();
        assert_eq!(
            h,
            PicardClass::from_terms(&d, [(e(2), int(3)), (e(1), int(-1))]).unwrap()
        );

        let d = ShimuraDatum::hilbert(2, 1).unwrap();
        let h = hasse_class(&d, e(1)).unwrap();
        assert_eq!(h, PicardClass::from_terms(&d, [(e(1), int(1))]).unwrap());

        assert!(hasse_class(&f12_datum(), e(3)).is_err());
    }

    #[test]
    fn det_omega() {
        let d = ShimuraDatum::hilbert(2, 2).unwrap();
        let det = det_omega_class(&d);
        assert_eq!(det.coeff(e(1)), int(2));
        assert_eq!(det.coeff(e(2)), int(2));
        let empty = ShimuraDatum::from_digits(3, &[("p1", &[0, 2])]).unwrap();
        assert!(det_omega_class(&empty).is_zero());
        let d = f12_datum();
        let det = det_omega_class(&d);
        let support: Vec<usize> = det.terms().keys().map(|t| t.slot).collect();
        assert_eq!(support, vec![1, 2, 5, 7, 10, 11]);
        assert!(det.terms().values().all(|c| *c == int(2)));
    }

    #[test]
    fn restrict_examples() {
        let d = ShimuraDatum::hilbert(2, 2).unwrap();
        let full = RelationSet::new(&d, &set(&[1, 2])).unwrap();
        let w1 = PicardClass::omega(&d, e(1)).unwrap();
        assert!(restrict(&w1, &full).unwrap().is_zero());

        let single = RelationSet::new(&d, &set(&[1])).unwrap();
        let (t1, t2) = (frac(3, 7), int(5));
        let c = PicardClass::from_terms(&d, [(e(1), t1.clone()), (e(2), t2.clone())]).unwrap();
        let r = restrict(&c, &single).unwrap();
        assert_eq!(
            r,
            PicardClass::from_terms(&d, [(e(2), t2 - int(2) * t1)]).unwrap()
        );

        let none = RelationSet::new(&d, &BTreeSet::new()).unwrap();
        assert_eq!(restrict(&c, &none).unwrap(), c);
    }

    #[test]
    fn defining_relation_is_killed() {
        let d = f12_datum();
        let t = set(&[2, 7, 10]);
        let rel = RelationSet::new(&d, &t).unwrap();
        for &tau in &t {
            let n = d.n_gap(tau).unwrap();
            let r = PicardClass::from_terms(
                &d,
                [
                    (d.successor(tau).unwrap(), rational::pow_q(2, n)),
                    (tau, int(1)),
                ],
            )
            .unwrap();
            assert!(restrict(&r, &rel).unwrap().is_zero());
        }
    }

    #[test]
    fn chained_elimination() {
        // T = {1, 2} in an all-1 f = 4 block: ω1 → −2ω2 → 4ω3.
        let d = ShimuraDatum::hilbert(2, 4).unwrap();
        let rel = RelationSet::new(&d, &set(&[1, 2])).unwrap();
        assert_eq!(rel.image(e(1)), Some((BigInt::from(4), e(3))));
        assert_eq!(rel.image(e(2)), Some((BigInt::from(-2), e(3))));
        assert_eq!(rel.image(e(4)), Some((BigInt::from(1), e(4))));
    }
}
