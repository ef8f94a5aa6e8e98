//! Per-block Hasse transition matrix `H`, its closed-form inverse, and the
//! λ-coefficients writing `[ω^t]_p` as a combination of partial Hasse classes.

use std::collections::BTreeMap;

use num_traits::One;

use crate::datum::{EmbeddingId, ShimuraDatum};
use crate::error::{CoreError, Result};
use crate::matrix::Matrix;
use crate::rational::{self, Rational};

/// `H` (or `H⁻¹`) for one block. Rows and columns follow the block's
/// signature-1 cycle `τ_1, …, τ_N`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HasseMatrix {
    pub block: usize,
    pub labels: Vec<EmbeddingId>,
    pub matrix: Matrix,
}

impl HasseMatrix {
    pub fn order(&self) -> usize {
        self.labels.len()
    }
}

fn cycle_and_gaps(datum: &ShimuraDatum, block: usize) -> Result<(Vec<EmbeddingId>, Vec<u32>)> {
    datum.block(block)?;
    let labels = datum.signature_one_cycle(block);
    if labels.is_empty() {
        return Err(CoreError::Domain(format!(
            "block {} has no signature-1 slot",
            datum.blocks()[block].label
        )));
    }
    let gaps = labels
        .iter()
        .map(|&t| datum.n_gap(t))
        .collect::<Result<Vec<_>>>()?;
    Ok((labels, gaps))
}

/// `H[i][i] = −1`, `H[i+1][i] = p^{n_i}`, `H[1][N] = p^{n_N}`; for `N = 1` the
/// diagonal and corner merge into `p^{n} − 1`.
pub fn hasse_matrix(datum: &ShimuraDatum, block: usize) -> Result<HasseMatrix> {
    let (labels, gaps) = cycle_and_gaps(datum, block)?;
    let n = labels.len();
    let p = datum.p();
    let mut m = Matrix::zeros(n, n);
    if n == 1 {
        m[(0, 0)] = rational::pow_q(p, gaps[0]) - Rational::one();
    } else {
        for i in 0..n {
            m[(i, i)] = -Rational::one();
            m[((i + 1) % n, i)] = rational::pow_q(p, gaps[i]);
        }
    }
    Ok(HasseMatrix {
        block,
        labels,
        matrix: m,
    })
}

/// Closed form: with `P = p^{n_1 + … + n_N}`,
/// `(H⁻¹)_{ij} = P/(P − 1) · p^{−(n_i + … + n_{j−1})}` for `i < j` and
/// `P/(P − 1) · p^{−(n_i + … + n_{N+j−1})}` (indices mod `N`) for `i ≥ j`.
pub fn hasse_inverse_closed_form(datum: &ShimuraDatum, block: usize) -> Result<HasseMatrix> {
    let (labels, gaps) = cycle_and_gaps(datum, block)?;
    let n = labels.len();
    let p = datum.p();
    let total: u32 = gaps.iter().sum();
    let big_p = rational::pow_q(p, total);
    let scale = &big_p / (&big_p - Rational::one());
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            // 0-indexed: i < j sums gaps i..j-1; i >= j sums gaps i..N+j-1 cyclically.
            let end = if i < j { j } else { n + j };
            let exponent: u32 = (i..end).map(|k| gaps[k % n]).sum();
            m[(i, j)] = &scale / rational::pow_q(p, exponent);
        }
    }
    Ok(HasseMatrix {
        block,
        labels,
        matrix: m,
    })
}

/// λ with `H·λ = t`; `t` is indexed by the block's signature-1 cycle.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LambdaVector {
    pub block: usize,
    pub coefficients: BTreeMap<EmbeddingId, Rational>,
}

impl LambdaVector {
    pub fn values(&self, labels: &[EmbeddingId]) -> Vec<Rational> {
        labels
            .iter()
            .map(|l| self.coefficients[l].clone())
            .collect()
    }
}

pub fn lambda_coefficients(
    datum: &ShimuraDatum,
    block: usize,
    t: &[Rational],
) -> Result<LambdaVector> {
    let inv = hasse_inverse_closed_form(datum, block)?;
    if t.len() != inv.order() {
        return Err(CoreError::Input(format!(
            "expected {} weights for block {}, got {}",
            inv.order(),
            datum.blocks()[block].label,
            t.len()
        )));
    }
    let lambda = inv.matrix.mul_vec(t);
    Ok(LambdaVector {
        block,
        coefficients: inv.labels.into_iter().zip(lambda).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::picard::{hasse_class, PicardClass};
    use crate::rational::{frac, int};

    fn rows(m: &Matrix) -> Vec<Vec<Rational>> {
        m.to_rows()
    }

    #[test]
    fn hilbert_f2_matrix_and_inverse() {
        let d = ShimuraDatum::hilbert(2, 2).unwrap();
        let h = hasse_matrix(&d, 0).unwrap();
        assert_eq!(
            rows(&h.matrix),
            vec![vec![int(-1), int(2)], vec![int(2), int(-1)]]
        );
        let inv = hasse_inverse_closed_form(&d, 0).unwrap();
        assert_eq!(
            rows(&inv.matrix),
            vec![vec![frac(1, 3), frac(2, 3)], vec![frac(2, 3), frac(1, 3)]]
        );
        assert_eq!(inv.matrix[(0, 1)], frac(4, 3) * frac(1, 2));
    }

    #[test]
    fn single_slot_collision() {
        // one signature-1 slot with gap 2, p = 3
        let d = ShimuraDatum::from_digits(3, &[("p1", &[1, 0])]).unwrap();
        let h = hasse_matrix(&d, 0).unwrap();
        assert_eq!(rows(&h.matrix), vec![vec![int(8)]]);
        let inv = hasse_inverse_closed_form(&d, 0).unwrap();
        assert_eq!(rows(&inv.matrix), vec![vec![frac(1, 8)]]);
    }

    #[test]
    fn f12_datum_matrix_pattern() {
        let d =
            ShimuraDatum::from_digits(2, &[("p1", &[1, 1, 0, 0, 1, 2, 1, 2, 0, 1, 1, 0])]).unwrap();
        let h = hasse_matrix(&d, 0).unwrap();
        let gaps = [1u32, 3, 2, 3, 1, 2];
        for i in 0..6 {
            for (j, &gap) in gaps.iter().enumerate() {
                let expected = if i == j {
                    int(-1)
                } else if i == (j + 1) % 6 {
                    rational::pow_q(2, gap)
                } else {
                    int(0)
                };
                assert_eq!(h.matrix[(i, j)], expected, "entry ({i},{j})");
            }
        }
        let inv = hasse_inverse_closed_form(&d, 0).unwrap();
        assert_eq!(h.matrix.mul(&inv.matrix), Matrix::identity(6));
    }

    #[test]
    fn lambda_examples() {
        let d = ShimuraDatum::hilbert(2, 2).unwrap();
        let l = lambda_coefficients(&d, 0, &[int(1), int(1)]).unwrap();
        assert_eq!(l.values(&d.signature_one_cycle(0)), vec![int(1), int(1)]);
        let l = lambda_coefficients(&d, 0, &[int(-1), int(2)]).unwrap();
        assert_eq!(l.values(&d.signature_one_cycle(0)), vec![int(1), int(0)]);
        let single = ShimuraDatum::hilbert(2, 1).unwrap();
        let l = lambda_coefficients(&single, 0, &[int(5)]).unwrap();
        assert_eq!(l.values(&single.signature_one_cycle(0)), vec![int(5)]);
        assert!(lambda_coefficients(&d, 0, &[int(1)]).is_err());
    }

    #[test]
    fn lambda_reconstructs_weights() {
        let d = ShimuraDatum::from_digits(3, &[("p1", &[1, 0, 1, 1, 2, 1])]).unwrap();
        let labels = d.signature_one_cycle(0);
        let t = vec![frac(3, 2), int(7), int(0), frac(-5, 3)];
        let l = lambda_coefficients(&d, 0, &t).unwrap();
        let mut lhs = PicardClass::zero(&d);
        for tau in &labels {
            lhs = lhs
                .add(&hasse_class(&d, *tau).unwrap().scale(&l.coefficients[tau]))
                .unwrap();
        }
        let rhs = PicardClass::from_terms(&d, labels.iter().copied().zip(t)).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn empty_block_is_rejected() {
        let d = ShimuraDatum::from_digits(2, &[("p1", &[0, 2])]).unwrap();
        assert!(matches!(hasse_matrix(&d, 0), Err(CoreError::Domain(_))));
    }
}
