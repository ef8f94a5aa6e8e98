//! Random data shared by the integration tests.
#![allow(dead_code)]

use ample_cone::cone::{ample_check, nef_check};
use ample_cone::datum::{EmbeddingId, ShimuraDatum, Signature};
use ample_cone::rational::{frac, int, pow_q};
use ample_cone::{Rational, WeightTuple};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

pub const PRIMES: [u64; 3] = [2, 3, 5];

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Signature row with signature-1 slots at gaps `gaps`, rotated by `shift`;
/// the slots in between are 0 or 2 at random.
pub fn row_with_gaps(rng: &mut impl Rng, gaps: &[u32], shift: usize) -> Vec<Signature> {
    let f: usize = gaps.iter().map(|&g| g as usize).sum();
    let mut row: Vec<Signature> = (0..f)
        .map(|_| {
            if rng.random_bool(0.5) {
                Signature::Zero
            } else {
                Signature::Two
            }
        })
        .collect();
    let mut pos = 0;
    for &g in gaps {
        row[(pos + shift) % f] = Signature::One;
        pos += g as usize;
    }
    row
}

pub fn random_gaps(rng: &mut impl Rng, n: usize, max_gap: u32) -> Vec<u32> {
    (0..n).map(|_| rng.random_range(1..=max_gap)).collect()
}

/// Single block with `n` signature-1 slots.
pub fn random_block(rng: &mut impl Rng, n: usize, max_gap: u32) -> ShimuraDatum {
    let p = *PRIMES.choose(rng).unwrap();
    let gaps = random_gaps(rng, n, max_gap);
    let f: usize = gaps.iter().map(|&g| g as usize).sum();
    let shift = rng.random_range(0..f);
    let row = row_with_gaps(rng, &gaps, shift);
    ShimuraDatum::new(p, vec![("p1".into(), row)]).unwrap()
}

/// Several blocks; block sizes drawn from `sizes`.
pub fn random_datum(rng: &mut impl Rng, sizes: &[usize], max_gap: u32) -> ShimuraDatum {
    let p = *PRIMES.choose(rng).unwrap();
    let blocks = sizes
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let gaps = random_gaps(rng, n.max(1), max_gap);
            let f: usize = gaps.iter().map(|&g| g as usize).sum();
            let shift = rng.random_range(0..f);
            let mut row = row_with_gaps(rng, &gaps, shift);
            if n == 0 {
                row.iter_mut().for_each(|s| *s = Signature::Two);
            }
            (format!("p{}", i + 1), row)
        })
        .collect();
    ShimuraDatum::new(p, blocks).unwrap()
}

pub fn random_rational(rng: &mut impl Rng, lo: i64, hi: i64) -> Rational {
    let d = *[1i64, 1, 1, 2, 3].choose(rng).unwrap();
    frac(rng.random_range(lo * d..=hi * d), d)
}

/// A strictly ample tuple: rejection first, then a band `[M, 2M)` that is
/// ample for every datum since `p^n ≥ 2`.
pub fn ample_tuple(rng: &mut impl Rng, datum: &ShimuraDatum) -> WeightTuple {
    let sig1 = datum.signature_one();
    for _ in 0..50 {
        let t = WeightTuple::from_pairs(
            datum,
            sig1.iter().map(|&e| (e, random_rational(rng, 1, 30))),
        )
        .unwrap();
        if ample_check(datum, &t).unwrap().holds {
            return t;
        }
    }
    let m = rng.random_range(1..=20i64);
    WeightTuple::from_pairs(
        datum,
        sig1.iter().map(|&e| (e, int(rng.random_range(m..2 * m)))),
    )
    .unwrap()
}

/// An ample tuple pushed onto one facet: the inequality at `tau` becomes an
/// equality, all others stay as they were or improve.
pub fn facet_tuple(rng: &mut impl Rng, datum: &ShimuraDatum) -> (WeightTuple, EmbeddingId) {
    let t = ample_tuple(rng, datum);
    let sig1 = datum.signature_one();
    let tau = *sig1.choose(rng).unwrap();
    let target = datum.successor(tau).unwrap();
    let mut map = t.as_map().clone();
    let n = datum.n_gap(tau).unwrap();
    if target == tau {
        // p^n t = t forces t = 0.
        map.insert(tau, int(0));
    } else {
        map.insert(target, pow_q(datum.p(), n) * t.weight(tau));
    }
    let out = WeightTuple::new(datum, map).unwrap();
    assert!(nef_check(datum, &out).unwrap().holds);
    (out, tau)
}

/// Ample or on a facet, with equal odds.
pub fn nef_tuple(rng: &mut impl Rng, datum: &ShimuraDatum) -> WeightTuple {
    if rng.random_bool(0.5) {
        ample_tuple(rng, datum)
    } else {
        facet_tuple(rng, datum).0
    }
}

/// Weights drawn from `[-10, 10]` (some halves and thirds), no filtering.
pub fn raw_tuple(rng: &mut impl Rng, datum: &ShimuraDatum) -> WeightTuple {
    WeightTuple::from_pairs(
        datum,
        datum
            .signature_one()
            .into_iter()
            .map(|e| (e, random_rational(rng, -10, 10))),
    )
    .unwrap()
}

/// Random sparse subset (no two cyclically adjacent labels) of a cycle of
/// length `n ≥ 2`, nonempty.
pub fn random_sparse_labels(rng: &mut impl Rng, n: usize) -> Vec<usize> {
    loop {
        let start = rng.random_range(0..n);
        let mut chosen = vec![start];
        let mut i = start + 2;
        while i < start + n - 1 {
            if rng.random_bool(0.5) {
                chosen.push(i % n);
                i += 2;
            } else {
                i += 1;
            }
        }
        chosen.sort_unstable();
        if !chosen.is_empty() {
            return chosen;
        }
    }
}

pub fn f12_datum() -> ShimuraDatum {
    ShimuraDatum::from_digits(2, &[("p1", &[1, 1, 0, 0, 1, 2, 1, 2, 0, 1, 1, 0])]).unwrap()
}

pub fn hilbert_tuple(p: u64, values: &[i64]) -> (ShimuraDatum, WeightTuple) {
    let d = ShimuraDatum::hilbert(p, values.len()).unwrap();
    let vals: Vec<Rational> = values.iter().map(|&x| int(x)).collect();
    let t = WeightTuple::from_values(&d, &vals).unwrap();
    (d, t)
}
