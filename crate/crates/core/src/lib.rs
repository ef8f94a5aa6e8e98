//! Exact combinatorics of ample and nef automorphic line bundles on the
//! special fiber of unitary `U(2)` and Hilbert modular Shimura varieties.
//!
//! A [`datum::ShimuraDatum`] records the prime, the Frobenius-cyclic blocks
//! of embeddings and the 0/1/2 signature. Weights `t` on the signature-1
//! embeddings give the class `[ω^t]`; [`cone`] decides the ample and nef
//! inequalities, [`strata`] describes Goren–Oort strata, and [`certify`]
//! produces and re-checks a proof of nefness stratum by stratum.

pub mod certify;
pub mod cli;
pub mod cone;
pub mod datum;
pub mod document;
pub mod error;
pub mod hasse;
pub mod matrix;
pub mod oracle;
pub mod picard;
pub mod rational;
pub mod strata;

pub use cone::WeightTuple;
pub use datum::{EmbeddingId, ShimuraDatum, Signature};
pub use error::{CoreError, Result};
pub use picard::PicardClass;
pub use rational::Rational;
