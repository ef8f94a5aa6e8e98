//! Brute-force checkers for tests. Nothing here calls the closed-form
//! inverse or the sparse solver; everything goes through plain elimination
//! or exhaustive enumeration.

use std::collections::{BTreeMap, BTreeSet};

use itertools::Itertools;
use num_traits::{Signed, Zero};

use crate::cone::WeightTuple;
use crate::datum::{EmbeddingId, ShimuraDatum};
use crate::error::{CoreError, Result};
use crate::matrix::Matrix;
use crate::picard::{hasse_class, restrict, PicardClass};
use crate::rational::Rational;
use crate::strata::{
    classify_stratum, describe, restriction_relations, EmbeddingSet, StratumClass,
};

/// Exact inverse by Gauss–Jordan elimination with full pivoting.
pub fn gauss_inverse(m: &Matrix) -> Result<Matrix> {
    let n = m.rows();
    if m.cols() != n {
        return Err(CoreError::Input(format!(
            "matrix is {}x{}, not square",
            n,
            m.cols()
        )));
    }
    let mut a = m.clone();
    let mut inv = Matrix::identity(n);
    // col_perm[k] = original column placed at position k.
    let mut col_perm: Vec<usize> = (0..n).collect();
    for k in 0..n {
        let pivot = (k..n)
            .flat_map(|i| (k..n).map(move |j| (i, j)))
            .filter(|&(i, j)| !a[(i, j)].is_zero())
            .max_by(|&(i1, j1), &(i2, j2)| a[(i1, j1)].abs().cmp(&a[(i2, j2)].abs()));
        let Some((pi, pj)) = pivot else {
            return Err(CoreError::Singular);
        };
        swap_rows(&mut a, k, pi);
        swap_rows(&mut inv, k, pi);
        swap_cols(&mut a, k, pj);
        col_perm.swap(k, pj);

        let d = a[(k, k)].clone();
        for j in 0..n {
            a[(k, j)] = &a[(k, j)] / &d;
            inv[(k, j)] = &inv[(k, j)] / &d;
        }
        for i in 0..n {
            if i == k || a[(i, k)].is_zero() {
                continue;
            }
            let f = a[(i, k)].clone();
            for j in 0..n {
                let (ak, ik) = (a[(k, j)].clone(), inv[(k, j)].clone());
                a[(i, j)] -= &f * ak;
                inv[(i, j)] -= &f * ik;
            }
        }
    }
    // A·Q was reduced to I, so (A·Q)⁻¹ = Q⁻¹A⁻¹ sits in `inv`; undo Q on rows.
    let mut out = Matrix::zeros(n, n);
    for (k, &orig) in col_perm.iter().enumerate() {
        for j in 0..n {
            out[(orig, j)] = inv[(k, j)].clone();
        }
    }
    Ok(out)
}

fn swap_rows(m: &mut Matrix, a: usize, b: usize) {
    if a == b {
        return;
    }
    for j in 0..m.cols() {
        let tmp = m[(a, j)].clone();
        m[(a, j)] = m[(b, j)].clone();
        m[(b, j)] = tmp;
    }
}

fn swap_cols(m: &mut Matrix, a: usize, b: usize) {
    if a == b {
        return;
    }
    for i in 0..m.rows() {
        let tmp = m[(i, a)].clone();
        m[(i, a)] = m[(i, b)].clone();
        m[(i, b)] = tmp;
    }
}

/// Solves `m·x = rhs` for a possibly non-square system. Errors when the
/// system is inconsistent or has more than one solution.
pub fn solve_linear(m: &Matrix, rhs: &[Rational]) -> Result<Vec<Rational>> {
    let (rows, cols) = (m.rows(), m.cols());
    if rhs.len() != rows {
        return Err(CoreError::Input("right-hand side length mismatch".into()));
    }
    let mut aug: Vec<Vec<Rational>> = (0..rows)
        .map(|i| {
            let mut r = m.row(i).to_vec();
            r.push(rhs[i].clone());
            r
        })
        .collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| !aug[i][c].is_zero()) else {
            continue;
        };
        aug.swap(r, p);
        let d = aug[r][c].clone();
        for v in aug[r].iter_mut() {
            *v /= &d;
        }
        for i in 0..rows {
            if i != r && !aug[i][c].is_zero() {
                let f = aug[i][c].clone();
                let pivot_row = aug[r].clone();
                for (v, pv) in aug[i].iter_mut().zip(pivot_row) {
                    *v -= &f * pv;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == rows {
            break;
        }
    }
    if aug[r..].iter().any(|row| !row[cols].is_zero()) {
        return Err(CoreError::Unsolvable("inconsistent system".into()));
    }
    if pivots.len() < cols {
        return Err(CoreError::Unsolvable(format!(
            "underdetermined system: rank {} with {} unknowns",
            pivots.len(),
            cols
        )));
    }
    let mut x = vec![Rational::zero(); cols];
    for (row, &c) in pivots.iter().enumerate() {
        x[c] = aug[row][cols].clone();
    }
    Ok(x)
}

/// `(A, B, S)` recovered by direct coefficient matching.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DirectSparseSolution {
    pub a: Vec<Rational>,
    pub b: BTreeMap<EmbeddingId, Rational>,
    pub s: Rational,
}

/// Assembles `restrict([ω^t]_block) = Σ_j A_j·restrict([ω^{s(j)}]) +
/// Σ_a B_a·restrict([h_a])` as one linear system over the surviving
/// generators and solves it.
pub fn solve_sparse_directly(
    datum: &ShimuraDatum,
    t: &WeightTuple,
    block: usize,
    t_block: &EmbeddingSet,
) -> Result<DirectSparseSolution> {
    if classify_stratum(datum, block, t_block) != StratumClass::Sparse
        || t_block.iter().any(|e| e.block != block)
    {
        return Err(CoreError::Stratum(
            "not a sparse stratum of the block".into(),
        ));
    }
    let cycle = datum.signature_one_cycle(block);
    let chosen: Vec<EmbeddingId> = cycle
        .iter()
        .copied()
        .filter(|e| t_block.contains(e))
        .collect();
    let mut removed = BTreeSet::new();
    for &c in &chosen {
        removed.insert(c);
        removed.insert(datum.successor(c)?);
    }
    let hasse_indices: Vec<EmbeddingId> = cycle
        .iter()
        .copied()
        .filter(|e| !removed.contains(e))
        .collect();

    let rel = restriction_relations(datum, t_block)?;
    let block_class = |skip: &[EmbeddingId]| {
        PicardClass::from_terms(
            datum,
            cycle
                .iter()
                .filter(|e| !skip.contains(e))
                .map(|&e| (e, t.weight(e))),
        )
    };
    let lhs = restrict(&block_class(&[])?, &rel)?;
    let mut columns: Vec<PicardClass> = Vec::new();
    for &c in &chosen {
        let next = datum.successor(c)?;
        columns.push(restrict(&block_class(&[c, next])?, &rel)?);
    }
    for &a in &hasse_indices {
        columns.push(restrict(&hasse_class(datum, a)?, &rel)?);
    }

    let generators: Vec<EmbeddingId> = cycle
        .iter()
        .copied()
        .filter(|e| !t_block.contains(e))
        .collect();
    let rows: Vec<Vec<Rational>> = generators
        .iter()
        .map(|&g| columns.iter().map(|c| c.coeff(g)).collect())
        .collect();
    let rhs: Vec<Rational> = generators.iter().map(|&g| lhs.coeff(g)).collect();
    let x = solve_linear(&Matrix::from_rows(rows), &rhs)?;

    let k = chosen.len();
    let a = x[..k].to_vec();
    let s = a.iter().fold(Rational::zero(), |acc, v| acc + v);
    let b = hasse_indices
        .into_iter()
        .zip(x[k..].iter().cloned())
        .collect();
    Ok(DirectSparseSolution { a, b, s })
}

/// What a stratum induces: the block's new signature row and `|I_T|`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InducedSummary {
    pub signature: Vec<u8>,
    pub bundle_rank: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StrataEntry {
    pub block: usize,
    pub stratum: EmbeddingSet,
    pub class: StratumClass,
    /// `None` for strata containing the whole cycle.
    pub induced: Option<InducedSummary>,
}

/// Every subset of each block's signature-1 slots of size at most
/// `max_size`: blocks in order, `∅` first, then by size, then
/// lexicographically in cycle order.
pub fn enumerate_strata(datum: &ShimuraDatum, max_size: usize) -> Vec<StrataEntry> {
    let mut out = Vec::new();
    for block in 0..datum.blocks().len() {
        let cycle = datum.signature_one_cycle(block);
        for size in 0..=max_size.min(cycle.len()) {
            for subset in cycle.iter().copied().combinations(size) {
                let stratum: EmbeddingSet = subset.into_iter().collect();
                let class = classify_stratum(datum, block, &stratum);
                let induced = describe(datum, &stratum).ok().map(|d| InducedSummary {
                    signature: d
                        .induced
                        .signature_row(block)
                        .iter()
                        .map(|s| s.digit())
                        .collect(),
                    bundle_rank: d.bundle_rank(),
                });
                out.push(StrataEntry {
                    block,
                    stratum,
                    class,
                    induced,
                });
            }
        }
    }
    out
}

/// `true` iff `m·inv` is the identity.
pub fn is_inverse(m: &Matrix, inv: &Matrix) -> bool {
    m.rows() == inv.rows() && m.mul(inv) == Matrix::identity(m.rows())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{frac, int};

    fn m(rows: &[&[i64]]) -> Matrix {
        Matrix::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&x| int(x)).collect())
                .collect(),
        )
    }

    #[test]
    fn inverse_examples() {
        let inv = gauss_inverse(&m(&[&[-1, 2], &[2, -1]])).unwrap();
        assert_eq!(
            inv,
            Matrix::from_rows(vec![
                vec![frac(1, 3), frac(2, 3)],
                vec![frac(2, 3), frac(1, 3)]
            ])
        );
        assert_eq!(
            gauss_inverse(&Matrix::identity(4)).unwrap(),
            Matrix::identity(4)
        );
        assert_eq!(
            gauss_inverse(&m(&[&[1, 1], &[1, 1]])),
            Err(CoreError::Singular)
        );
    }

    #[test]
    fn full_pivoting_permutes_back() {
        let a = m(&[&[0, 0, 3], &[1, 5, 0], &[0, 2, 7]]);
        let inv = gauss_inverse(&a).unwrap();
        assert!(is_inverse(&a, &inv));
        assert!(is_inverse(&inv, &a));
    }

    #[test]
    fn linear_solver_reports() {
        assert_eq!(
            solve_linear(&m(&[&[2, 1], &[1, 3]]), &[int(3), int(4)]).unwrap(),
            vec![int(1), int(1)]
        );
        assert!(matches!(
            solve_linear(&m(&[&[1, 1], &[2, 2]]), &[int(1), int(3)]),
            Err(CoreError::Unsolvable(msg)) if msg.contains("inconsistent")
        ));
        assert!(matches!(
            solve_linear(&m(&[&[1, 1]]), &[int(1)]),
            Err(CoreError::Unsolvable(msg)) if msg.contains("underdetermined")
        ));
    }

    fn hilbert(f: usize, t: &[i64]) -> (ShimuraDatum, WeightTuple) {
        let d = ShimuraDatum::hilbert(2, f).unwrap();
        let vals: Vec<Rational> = t.iter().map(|&x| int(x)).collect();
        let w = WeightTuple::from_values(&d, &vals).unwrap();
        (d, w)
    }

    fn set(slots: &[usize]) -> EmbeddingSet {
        slots.iter().map(|&s| EmbeddingId::new(0, s)).collect()
    }

    #[test]
    fn direct_sparse_examples() {
        let (d, t) = hilbert(4, &[4, 3, 4, 3]);
        let sol = solve_sparse_directly(&d, &t, 0, &set(&[1, 3])).unwrap();
        assert_eq!(sol.a, vec![int(1), int(1)]);
        assert!(sol.b.is_empty());
        assert_eq!(sol.s, int(2));

        let (d, t) = hilbert(3, &[4, 3, 4]);
        let sol = solve_sparse_directly(&d, &t, 0, &set(&[1])).unwrap();
        assert_eq!(sol.a, vec![frac(21, 16)]);
        assert_eq!(
            sol.b,
            [(EmbeddingId::new(0, 3), frac(5, 4))].into_iter().collect()
        );

        let (d, t) = hilbert(2, &[3, 1]);
        assert!(matches!(
            solve_sparse_directly(&d, &t, 0, &set(&[1])),
            Err(CoreError::Unsolvable(msg)) if msg.contains("inconsistent")
        ));
    }

    #[test]
    fn strata_counts() {
        let d = ShimuraDatum::hilbert(2, 3).unwrap();
        let all = enumerate_strata(&d, 3);
        assert_eq!(all.len(), 8);
        assert_eq!(all[0].class, StratumClass::Empty);
        let count = |c| all.iter().filter(|e| e.class == c).count();
        assert_eq!(count(StratumClass::Sparse), 3);
        assert_eq!(count(StratumClass::Adjacent), 3);
        assert_eq!(count(StratumClass::Full), 1);
        assert!(all.last().unwrap().induced.is_none());

        let empty = ShimuraDatum::from_digits(2, &[("a", &[0, 2, 0])]).unwrap();
        let only = enumerate_strata(&empty, 5);
        assert_eq!(only.len(), 1);
        assert!(only[0].stratum.is_empty());
    }
}
