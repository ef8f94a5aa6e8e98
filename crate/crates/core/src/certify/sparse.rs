//! Sparse strata: no two chosen labels are cyclically adjacent.
//!
//! With chosen labels `i_1 < … < i_k` the restricted class is written as
//! `Σ_j A_j·[ω^{s(j)}] + Σ_a B_a·[h_a]`, where `s(j)` is `t` with the pair
//! `τ_{i_j}, τ_{i_j+1}` removed and `a` runs over the gap segments
//! `i_{j-1}+2, …, i_j−1`. Eliminating the segment rows leaves, per `j`,
//! `V_j·A_j = (U_j + V_j)(S − 1)` with `S = Σ A_j`, so `S = W/(W − 1)` for
//! `W = Σ_j (U_j + V_j)/V_j`.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{One, Zero};

use crate::cone::WeightTuple;
use crate::datum::{EmbeddingId, ShimuraDatum};
use crate::error::{CoreError, Result};
use crate::picard::{hasse_class, restrict, PicardClass};
use crate::rational::{self, Rational};
use crate::strata::{classify_stratum, restriction_relations, StratumClass};

use super::{Checker, Verdict};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SparseSolution {
    /// Chosen labels `τ_{i_1}, …, τ_{i_k}` in cycle order.
    pub chosen: Vec<EmbeddingId>,
    pub u: Vec<Rational>,
    pub v: Vec<Rational>,
    pub s: Rational,
    pub a: Vec<Rational>,
    /// Coefficients of the auxiliary Hasse classes `h_a`.
    pub b: BTreeMap<EmbeddingId, Rational>,
}

/// Per-chosen-label layout of a sparse stratum.
pub(crate) struct SparseLayout {
    pub labels: Vec<EmbeddingId>,
    pub gaps: Vec<u32>,
    /// 0-based positions of the chosen labels in the cycle.
    pub chosen: Vec<usize>,
    /// For each chosen label, the 0-based positions `i_{j-1}+2, …, i_j−1`.
    pub segments: Vec<Vec<usize>>,
}

impl SparseLayout {
    pub(crate) fn new(
        datum: &ShimuraDatum,
        block: usize,
        t_block: &BTreeSet<EmbeddingId>,
    ) -> Result<Self> {
        datum.block(block)?;
        if t_block
            .iter()
            .any(|e| e.block != block || !datum.is_signature_one(*e))
        {
            return Err(CoreError::Domain(
                "stratum must consist of signature-1 embeddings of the block".into(),
            ));
        }
        let class = classify_stratum(datum, block, t_block);
        if class != StratumClass::Sparse {
            return Err(CoreError::Stratum(format!(
                "stratum is {class}, not sparse"
            )));
        }
        let labels = datum.signature_one_cycle(block);
        let n = labels.len();
        let gaps = labels
            .iter()
            .map(|&t| datum.n_gap(t))
            .collect::<Result<Vec<_>>>()?;
        let chosen: Vec<usize> = (0..n).filter(|&i| t_block.contains(&labels[i])).collect();
        let k = chosen.len();
        let segments = (0..k)
            .map(|j| {
                let prev = chosen[(j + k - 1) % k];
                let mut dist = (chosen[j] + n - prev) % n;
                if dist == 0 {
                    dist = n;
                }
                (0..dist - 2).map(|m| (prev + 2 + m) % n).collect()
            })
            .collect();
        Ok(SparseLayout {
            labels,
            gaps,
            chosen,
            segments,
        })
    }

    fn n(&self) -> usize {
        self.labels.len()
    }

    /// `U_j = Σ_{a ∈ segment} p^{n_a + … + n_{i_j − 1}} t_a`.
    fn u(&self, p: u64, t: &WeightTuple, j: usize) -> Rational {
        let n = self.n();
        let end = self.chosen[j];
        self.segments[j]
            .iter()
            .map(|&a| {
                let span = (end + n - a) % n;
                let exponent: u32 = (0..span).map(|m| self.gaps[(a + m) % n]).sum();
                rational::pow_q(p, exponent) * t.weight(self.labels[a])
            })
            .fold(Rational::zero(), |acc, x| acc + x)
    }

    /// `V_j = t_{i_j} − t_{i_j+1} / p^{n_{i_j}}`.
    fn v(&self, p: u64, t: &WeightTuple, j: usize) -> Rational {
        let i = self.chosen[j];
        let next = self.labels[(i + 1) % self.n()];
        t.weight(self.labels[i]) - t.weight(next) / rational::pow_q(p, self.gaps[i])
    }

    pub(crate) fn uv(&self, p: u64, t: &WeightTuple) -> (Vec<Rational>, Vec<Rational>) {
        (0..self.chosen.len())
            .map(|j| (self.u(p, t, j), self.v(p, t, j)))
            .unzip()
    }

    /// The Hasse index set, in segment order.
    pub(crate) fn hasse_indices(&self) -> Vec<EmbeddingId> {
        self.segments
            .iter()
            .flatten()
            .map(|&a| self.labels[a])
            .collect()
    }

    pub(crate) fn chosen_labels(&self) -> Vec<EmbeddingId> {
        self.chosen.iter().map(|&i| self.labels[i]).collect()
    }
}

/// `[ω^{s(j)}]`: the block part of `t` with `τ_{i_j}` and its successor
/// dropped, as a class of the original datum.
pub fn s_class(
    datum: &ShimuraDatum,
    t: &WeightTuple,
    block: usize,
    chosen: EmbeddingId,
) -> Result<PicardClass> {
    let next = datum.successor(chosen)?;
    PicardClass::from_terms(
        datum,
        datum
            .signature_one_cycle(block)
            .into_iter()
            .filter(|&tau| tau != chosen && tau != next)
            .map(|tau| (tau, t.weight(tau))),
    )
}

pub fn sparse_solve(
    datum: &ShimuraDatum,
    t: &WeightTuple,
    block: usize,
    t_block: &BTreeSet<EmbeddingId>,
) -> Result<SparseSolution> {
    let layout = SparseLayout::new(datum, block, t_block)?;
    let p = datum.p();
    let (u, v) = layout.uv(p, t);
    if let Some(j) = v.iter().position(|x| *x <= Rational::zero()) {
        return Err(CoreError::Precondition(format!(
            "V is not positive at {} (value {})",
            datum.token(layout.labels[layout.chosen[j]]),
            rational::format(&v[j])
        )));
    }
    let one = Rational::one();
    let w = u
        .iter()
        .zip(&v)
        .fold(Rational::zero(), |acc, (uj, vj)| acc + (uj + vj) / vj);
    if w == one {
        return Err(CoreError::Degenerate(format!(
            "W = 1 for a single chosen label with an empty gap range ({})",
            datum.token(layout.labels[layout.chosen[0]])
        )));
    }
    let s = &w / (&w - &one);
    let a: Vec<Rational> = u
        .iter()
        .zip(&v)
        .map(|(uj, vj)| (uj + vj) * (&s - &one) / vj)
        .collect();

    // Forward substitution on the lower-bidiagonal H′_j:
    // (1 − S)·t_a = −B_a + p^{n_{a−1}} B_{a−1}.
    let n = layout.n();
    let mut b = BTreeMap::new();
    for segment in &layout.segments {
        let mut prev: Option<Rational> = None;
        for &pos in segment {
            let mut value = (&s - &one) * t.weight(layout.labels[pos]);
            if let Some(pb) = &prev {
                let gap = layout.gaps[(pos + n - 1) % n];
                value += rational::pow_q(p, gap) * pb;
            }
            b.insert(layout.labels[pos], value.clone());
            prev = Some(value);
        }
    }
    Ok(SparseSolution {
        chosen: layout.chosen_labels(),
        u,
        v,
        s,
        a,
        b,
    })
}

/// Re-checks a sparse solution from the raw data: the recomputed `U`, `V`,
/// the sign conditions, the two scalar equations per label, and the identity
/// of normal forms in `Pic(X_T)_Q`.
pub fn verify_sparse(
    datum: &ShimuraDatum,
    t: &WeightTuple,
    block: usize,
    t_block: &BTreeSet<EmbeddingId>,
    sol: &SparseSolution,
) -> Verdict {
    let mut ck = Checker::default();
    verify_sparse_into(&mut ck, datum, t, block, t_block, sol);
    ck.finish()
}

pub(crate) fn verify_sparse_into(
    ck: &mut Checker,
    datum: &ShimuraDatum,
    t: &WeightTuple,
    block: usize,
    t_block: &BTreeSet<EmbeddingId>,
    sol: &SparseSolution,
) {
    let layout = match SparseLayout::new(datum, block, t_block) {
        Ok(l) => l,
        Err(e) => return ck.fail(format!("not a sparse stratum: {e}")),
    };
    let p = datum.p();
    let k = layout.chosen.len();
    let (u, v) = layout.uv(p, t);
    ck.check(sol.chosen == layout.chosen_labels(), || {
        "chosen labels do not match the stratum".into()
    });
    if !ck.check(
        sol.u.len() == k && sol.v.len() == k && sol.a.len() == k,
        || format!("solution must carry {k} entries of U, V and A"),
    ) {
        return;
    }
    ck.check(sol.u == u, || "U does not match the weights".into());
    ck.check(sol.v == v, || "V does not match the weights".into());

    let zero = Rational::zero();
    let one = Rational::one();
    let sum_a = sol.a.iter().fold(Rational::zero(), |acc, x| acc + x);
    ck.check(sum_a == sol.s, || {
        "S differs from the sum of the A_j".into()
    });
    ck.check(sol.s > one, || {
        format!("S = {} is not > 1", rational::format(&sol.s))
    });
    for j in 0..k {
        let (uj, vj, aj) = (&u[j], &v[j], &sol.a[j]);
        ck.check(*vj > zero, || format!("V_{} is not positive", j + 1));
        ck.check(*aj > zero, || format!("A_{} is not positive", j + 1));
        ck.check(&one + aj - &sol.s >= zero, || {
            format!("1 + A_{} − S is negative", j + 1)
        });
        ck.check(uj * aj == (uj + vj) * (&one + aj - &sol.s), || {
            format!("U_{0}·A_{0} = (U_{0} + V_{0})(1 + A_{0} − S) fails", j + 1)
        });
        ck.check(vj * aj == (uj + vj) * (&sol.s - &one), || {
            format!("V_{0}·A_{0} = (U_{0} + V_{0})(S − 1) fails", j + 1)
        });
    }
    let expected_keys: BTreeSet<EmbeddingId> = layout.hasse_indices().into_iter().collect();
    let keys: BTreeSet<EmbeddingId> = sol.b.keys().copied().collect();
    ck.check(keys == expected_keys, || {
        "B is not indexed by the gap segments".into()
    });
    for (a, ba) in &sol.b {
        ck.check(*ba >= zero, || {
            format!("B at {} is negative", datum.token(*a))
        });
    }
    if ck.failed() {
        return;
    }

    match sparse_identity_holds(datum, t, block, t_block, &sol.chosen, &sol.a, &sol.b) {
        Ok(true) => {
            ck.check(true, String::new);
        }
        Ok(false) => ck.fail("restricted class differs from Σ A_j·[ω^{s(j)}] + Σ B_a·[h_a]".into()),
        Err(e) => ck.fail(format!("identity check failed: {e}")),
    }
}

fn sparse_identity_holds(
    datum: &ShimuraDatum,
    t: &WeightTuple,
    block: usize,
    t_block: &BTreeSet<EmbeddingId>,
    chosen: &[EmbeddingId],
    a: &[Rational],
    b: &BTreeMap<EmbeddingId, Rational>,
) -> Result<bool> {
    let rel = restriction_relations(datum, t_block)?;
    let lhs = restrict(&t.class(datum)?.block_part(block), &rel)?;
    let mut rhs = PicardClass::zero(datum);
    for (tau, aj) in chosen.iter().zip(a) {
        rhs = rhs.add(&restrict(&s_class(datum, t, block, *tau)?, &rel)?.scale(aj))?;
    }
    for (tau, ba) in b {
        rhs = rhs.add(&restrict(&hasse_class(datum, *tau)?, &rel)?.scale(ba))?;
    }
    Ok(lhs == rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, int};

    fn e(slot: usize) -> EmbeddingId {
        EmbeddingId::new(0, slot)
    }

    fn set(slots: &[usize]) -> BTreeSet<EmbeddingId> {
        slots.iter().map(|&s| e(s)).collect()
    }

    fn hilbert(f: usize, t: &[i64]) -> (ShimuraDatum, WeightTuple) {
        let d = ShimuraDatum::hilbert(2, f).unwrap();
        let vals: Vec<Rational> = t.iter().map(|&x| int(x)).collect();
        let w = WeightTuple::from_values(&d, &vals).unwrap();
        (d, w)
    }

    #[test]
    fn f4_two_labels() {
        let (d, t) = hilbert(4, &[4, 3, 4, 3]);
        let sol = sparse_solve(&d, &t, 0, &set(&[1, 3])).unwrap();
        assert_eq!(sol.u, vec![int(0), int(0)]);
        assert_eq!(sol.v, vec![frac(5, 2), frac(5, 2)]);
        assert_eq!(sol.s, int(2));
        assert_eq!(sol.a, vec![int(1), int(1)]);
        assert!(sol.b.is_empty());
        assert!(verify_sparse(&d, &t, 0, &set(&[1, 3]), &sol).passed);

        let rel = restriction_relations(&d, &set(&[1, 3])).unwrap();
        let restricted = restrict(&t.class(&d).unwrap(), &rel).unwrap();
        assert_eq!(
            restricted,
            PicardClass::from_terms(&d, [(e(2), int(-5)), (e(4), int(-5))]).unwrap()
        );
    }

    #[test]
    fn f3_one_label() {
        let (d, t) = hilbert(3, &[4, 3, 4]);
        let sol = sparse_solve(&d, &t, 0, &set(&[1])).unwrap();
        assert_eq!(sol.u, vec![int(8)]);
        assert_eq!(sol.v, vec![frac(5, 2)]);
        assert_eq!(sol.s, frac(21, 16));
        assert_eq!(sol.a, vec![frac(21, 16)]);
        assert_eq!(sol.b, [(e(3), frac(5, 4))].into_iter().collect());
        assert!(verify_sparse(&d, &t, 0, &set(&[1]), &sol).passed);
    }

    #[test]
    fn degenerate_single_label_pair_block() {
        let (d, t) = hilbert(2, &[3, 1]);
        assert!(matches!(
            sparse_solve(&d, &t, 0, &set(&[1])),
            Err(CoreError::Degenerate(_))
        ));
    }

    #[test]
    fn boundary_v_is_rejected() {
        let (d, t) = hilbert(4, &[1, 2, 4, 3]);
        assert!(matches!(
            sparse_solve(&d, &t, 0, &set(&[1, 3])),
            Err(CoreError::Precondition(_))
        ));
    }

    #[test]
    fn non_sparse_is_rejected() {
        let (d, t) = hilbert(4, &[4, 3, 4, 3]);
        assert!(matches!(
            sparse_solve(&d, &t, 0, &set(&[1, 2])),
            Err(CoreError::Stratum(_))
        ));
    }

    #[test]
    fn tampered_solutions_fail() {
        let (d, t) = hilbert(3, &[4, 3, 4]);
        let good = sparse_solve(&d, &t, 0, &set(&[1])).unwrap();
        let mut bad = good.clone();
        bad.a[0] += int(1);
        let verdict = verify_sparse(&d, &t, 0, &set(&[1]), &bad);
        assert!(!verdict.passed);
        assert!(verdict.failure.unwrap().contains("sum of the A_j"));

        let mut bad = good.clone();
        bad.b.insert(e(3), int(-1));
        let verdict = verify_sparse(&d, &t, 0, &set(&[1]), &bad);
        assert!(!verdict.passed);
        assert!(verdict.failure.unwrap().contains("negative"));

        let mut bad = good;
        bad.b.insert(e(3), frac(5, 3));
        assert!(!verify_sparse(&d, &t, 0, &set(&[1]), &bad).passed);
    }

    #[test]
    fn mixed_gaps() {
        // signature 1 at slots 1, 2, 4, 5, 7 of f = 8; p = 3.
        let d = ShimuraDatum::from_digits(3, &[("p1", &[1, 1, 0, 1, 1, 2, 1, 0])]).unwrap();
        let t = WeightTuple::from_values(&d, &[int(5), int(7), int(9), int(4), int(6)]).unwrap();
        assert!(crate::cone::ample_check(&d, &t).unwrap().holds);
        let stratum = set(&[2, 5]);
        let sol = sparse_solve(&d, &t, 0, &stratum).unwrap();
        let v = verify_sparse(&d, &t, 0, &stratum, &sol);
        assert!(v.passed, "{:?}", v.failure);
    }
}
