//! Ample and nef cone predicates, and the Hodge ε-shift that reduces
//! ampleness to nefness.
//!
//! The ample cone is cut out by `p^{n_τ} t_τ > t_{σ^{-n_τ}τ}` for every
//! signature-1 τ; the nef predicate uses `≥`. The nef inequalities are
//! sufficient for nefness; the all-signature-1 case states them as an
//! equivalence.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use crate::datum::{EmbeddingId, ShimuraDatum};
use crate::error::{CoreError, Result};
use crate::picard::PicardClass;
use crate::rational::{self, Rational};

/// Weights `t_τ`, total on the signature-1 embeddings of a datum.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct WeightTuple {
    weights: BTreeMap<EmbeddingId, Rational>,
}

impl WeightTuple {
    pub fn new(datum: &ShimuraDatum, weights: BTreeMap<EmbeddingId, Rational>) -> Result<Self> {
        for tau in weights.keys() {
            if !datum.is_signature_one(*tau) {
                return Err(CoreError::Input(format!(
                    "weight given for {} which is not a signature-1 embedding",
                    datum.token(*tau)
                )));
            }
        }
        for tau in datum.signature_one() {
            if !weights.contains_key(&tau) {
                return Err(CoreError::Input(format!(
                    "missing weight for {}",
                    datum.token(tau)
                )));
            }
        }
        Ok(WeightTuple { weights })
    }

    pub fn from_pairs(
        datum: &ShimuraDatum,
        pairs: impl IntoIterator<Item = (EmbeddingId, Rational)>,
    ) -> Result<Self> {
        Self::new(datum, pairs.into_iter().collect())
    }

    /// Weights listed in (block, slot) order of the signature-1 embeddings.
    pub fn from_values(datum: &ShimuraDatum, values: &[Rational]) -> Result<Self> {
        let sig1 = datum.signature_one();
        if sig1.len() != values.len() {
            return Err(CoreError::Input(format!(
                "expected {} weights, got {}",
                sig1.len(),
                values.len()
            )));
        }
        Self::new(
            datum,
            sig1.into_iter().zip(values.iter().cloned()).collect(),
        )
    }

    pub fn uniform(datum: &ShimuraDatum, value: Rational) -> Self {
        WeightTuple {
            weights: datum
                .signature_one()
                .into_iter()
                .map(|t| (t, value.clone()))
                .collect(),
        }
    }

    pub fn get(&self, tau: EmbeddingId) -> Option<&Rational> {
        self.weights.get(&tau)
    }

    pub fn weight(&self, tau: EmbeddingId) -> Rational {
        self.weights
            .get(&tau)
            .cloned()
            .unwrap_or_else(Rational::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&EmbeddingId, &Rational)> {
        self.weights.iter()
    }

    pub fn as_map(&self) -> &BTreeMap<EmbeddingId, Rational> {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Values along a block's signature-1 cycle.
    pub fn block_values(&self, datum: &ShimuraDatum, block: usize) -> Vec<Rational> {
        datum
            .signature_one_cycle(block)
            .iter()
            .map(|t| self.weight(*t))
            .collect()
    }

    /// `[ω^t] = Σ t_τ [ω_τ]`.
    pub fn class(&self, datum: &ShimuraDatum) -> Result<PicardClass> {
        PicardClass::from_terms(datum, self.weights.iter().map(|(t, c)| (*t, c.clone())))
    }

    /// Re-keys the tuple to the signature-1 embeddings of `datum`, which must
    /// all carry a weight here.
    pub fn restricted_to(&self, datum: &ShimuraDatum) -> Result<WeightTuple> {
        let weights = datum
            .signature_one()
            .into_iter()
            .map(|t| {
                self.weights
                    .get(&t)
                    .cloned()
                    .map(|w| (t, w))
                    .ok_or_else(|| CoreError::Input(format!("no weight for {}", datum.token(t))))
            })
            .collect::<Result<_>>()?;
        Ok(WeightTuple { weights })
    }
}

/// One evaluated inequality `p^{n}·t[τ] (>|≥) t[σ^{-n}τ]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Constraint {
    pub tau: EmbeddingId,
    pub target: EmbeddingId,
    pub gap: u32,
    pub lhs: Rational,
    pub rhs: Rational,
    pub strict: bool,
    pub holds: bool,
}

impl Constraint {
    /// `lhs − rhs`.
    pub fn slack(&self) -> Rational {
        &self.lhs - &self.rhs
    }

    pub fn render(&self, datum: &ShimuraDatum) -> String {
        let op = if self.strict { ">" } else { "≥" };
        format!(
            "{}^{}·t[{}] {op} t[{}]: {} {op} {}",
            datum.p(),
            self.gap,
            datum.token(self.tau),
            datum.token(self.target),
            rational::format(&self.lhs),
            rational::format(&self.rhs),
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConeReport {
    pub holds: bool,
    pub constraints: Vec<Constraint>,
}

impl ConeReport {
    pub fn violations(&self) -> impl Iterator<Item = &Constraint> {
        self.constraints.iter().filter(|c| !c.holds)
    }
}

fn evaluate(datum: &ShimuraDatum, t: &WeightTuple, strict: bool) -> Result<ConeReport> {
    let mut constraints = Vec::new();
    for tau in datum.signature_one() {
        let gap = datum.n_gap(tau)?;
        let target = datum.successor(tau)?;
        let w = t
            .get(tau)
            .ok_or_else(|| CoreError::Input(format!("missing weight for {}", datum.token(tau))))?;
        let lhs = rational::pow_q(datum.p(), gap) * w;
        let rhs = t.weight(target);
        let holds = if strict { lhs > rhs } else { lhs >= rhs };
        constraints.push(Constraint {
            tau,
            target,
            gap,
            lhs,
            rhs,
            strict,
            holds,
        });
    }
    Ok(ConeReport {
        holds: constraints.iter().all(|c| c.holds),
        constraints,
    })
}

pub fn ample_check(datum: &ShimuraDatum, t: &WeightTuple) -> Result<ConeReport> {
    evaluate(datum, t, true)
}

/// The non-strict inequalities. Passing them is sufficient for nefness (see
/// [`crate::certify`]); necessity is not established by this crate.
pub fn nef_check(datum: &ShimuraDatum, t: &WeightTuple) -> Result<ConeReport> {
    evaluate(datum, t, false)
}

/// Largest ε with `t − 2ε·(1, …, 1)` still nef:
/// `min_τ (p^{n_τ}t_τ − t_{σ^{-n_τ}τ}) / (2(p^{n_τ} − 1))`.
///
/// Requires `t` ample; use [`epsilon_bound`] to evaluate the same minimum on
/// arbitrary tuples.
pub fn epsilon_max(datum: &ShimuraDatum, t: &WeightTuple) -> Result<Rational> {
    let report = ample_check(datum, t)?;
    if !report.holds {
        return Err(precondition("ample", datum, &report));
    }
    epsilon_bound(datum, t)
}

/// The closed-form minimum behind [`epsilon_max`] without the ampleness guard
/// (zero on a facet of the nef cone, negative outside it).
pub fn epsilon_bound(datum: &ShimuraDatum, t: &WeightTuple) -> Result<Rational> {
    let report = nef_check(datum, t)?;
    let two = rational::int(2);
    report
        .constraints
        .iter()
        .map(|c| {
            let denom = &two * (rational::pow_q(datum.p(), c.gap) - Rational::one());
            c.slack() / denom
        })
        .min()
        .ok_or_else(|| CoreError::Domain("datum has no signature-1 embeddings".into()))
}

pub(crate) fn precondition(kind: &str, datum: &ShimuraDatum, report: &ConeReport) -> CoreError {
    let listed: Vec<String> = report.violations().map(|c| c.render(datum)).collect();
    CoreError::Precondition(format!(
        "tuple is not {kind}; violated: {}",
        listed.join("; ")
    ))
}

/// `[ω^t] = ε[det ω] + [ω^{t′}]` with `ε = epsilon_max / 2` and `t′ = t − 2ε`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HodgeSplit {
    pub epsilon: Rational,
    pub shifted: WeightTuple,
}

pub fn hodge_split(datum: &ShimuraDatum, t: &WeightTuple) -> Result<HodgeSplit> {
    let epsilon = epsilon_max(datum, t)? / rational::int(2);
    let shift = rational::int(2) * &epsilon;
    let shifted = WeightTuple {
        weights: t.weights.iter().map(|(k, v)| (*k, v - &shift)).collect(),
    };
    Ok(HodgeSplit { epsilon, shifted })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::picard::det_omega_class;
    use crate::rational::{frac, int};

    fn hilbert(p: u64, f: usize, t: &[i64]) -> (ShimuraDatum, WeightTuple) {
        let d = ShimuraDatum::hilbert(p, f).unwrap();
        let vals: Vec<Rational> = t.iter().map(|&x| int(x)).collect();
        let w = WeightTuple::from_values(&d, &vals).unwrap();
        (d, w)
    }

    #[test]
    fn ample_examples() {
        let (d, t) = hilbert(2, 2, &[1, 1]);
        assert!(ample_check(&d, &t).unwrap().holds);
        let (d, t) = hilbert(2, 2, &[1, 3]);
        let r = ample_check(&d, &t).unwrap();
        assert!(!r.holds);
        let bad: Vec<EmbeddingId> = r.violations().map(|c| c.tau).collect();
        assert_eq!(bad, vec![EmbeddingId::new(0, 1)]);
        assert_eq!(
            r.violations().next().unwrap().render(&d),
            "2^1·t[p1.1] > t[p1.2]: 2 > 3"
        );
        let (d, t) = hilbert(2, 2, &[0, 0]);
        assert!(!ample_check(&d, &t).unwrap().holds);
    }

    #[test]
    fn nef_examples() {
        let (d, t) = hilbert(2, 2, &[0, 0]);
        assert!(nef_check(&d, &t).unwrap().holds);
        let (d, t) = hilbert(2, 2, &[1, 2]);
        assert!(nef_check(&d, &t).unwrap().holds);
        assert!(!ample_check(&d, &t).unwrap().holds);
        let (d, t) = hilbert(2, 2, &[1, 3]);
        assert!(!nef_check(&d, &t).unwrap().holds);
    }

    #[test]
    fn epsilon_examples() {
        let (d, t) = hilbert(2, 2, &[1, 1]);
        assert_eq!(epsilon_max(&d, &t).unwrap(), frac(1, 2));
        let (d, t) = hilbert(2, 1, &[1]);
        assert_eq!(epsilon_max(&d, &t).unwrap(), frac(1, 2));
        let (d, t) = hilbert(2, 2, &[1, 2]);
        assert_eq!(epsilon_bound(&d, &t).unwrap(), int(0));
        assert!(matches!(
            epsilon_max(&d, &t),
            Err(CoreError::Precondition(_))
        ));
    }

    #[test]
    fn hodge_split_examples() {
        let (d, t) = hilbert(2, 2, &[1, 1]);
        let split = hodge_split(&d, &t).unwrap();
        assert_eq!(split.epsilon, frac(1, 4));
        assert_eq!(
            split.shifted.block_values(&d, 0),
            vec![frac(1, 2), frac(1, 2)]
        );
        assert!(nef_check(&d, &split.shifted).unwrap().holds);
        let rebuilt = det_omega_class(&d)
            .scale(&split.epsilon)
            .add(&split.shifted.class(&d).unwrap())
            .unwrap();
        assert_eq!(rebuilt, t.class(&d).unwrap());
        let (d, t) = hilbert(2, 2, &[1, 3]);
        assert!(hodge_split(&d, &t).is_err());
    }

    #[test]
    fn weight_tuple_validation() {
        let d = ShimuraDatum::from_digits(2, &[("p1", &[1, 0, 1])]).unwrap();
        assert!(WeightTuple::from_values(&d, &[int(1)]).is_err());
        let mut m = BTreeMap::new();
        m.insert(EmbeddingId::new(0, 1), int(1));
        m.insert(EmbeddingId::new(0, 2), int(1));
        m.insert(EmbeddingId::new(0, 3), int(1));
        assert!(WeightTuple::new(&d, m).is_err());
    }
}
