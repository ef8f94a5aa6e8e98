//! Versioned JSON form of a [`Certificate`]. Rationals are strings `"a/b"`,
//! embeddings are `"label.slot"` tokens, children are node indices.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::datum::{EmbeddingId, ShimuraDatum};
use crate::document::{weights_from_doc, weights_to_doc, DatumDoc, WeightsDoc};
use crate::error::{CoreError, Result};
use crate::rational::{self, Rational};

use super::sparse::SparseSolution;
use super::tree::{verify_certificate, Certificate, CertificateNode, ProofStep, StratumProof};
use super::Verdict;

pub const CERTIFICATE_FORMAT: &str = "ample-cone-nef-certificate";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CertificateDoc {
    format: String,
    version: u32,
    datum: DatumDoc,
    weights: WeightsDoc,
    roots: Vec<usize>,
    nodes: Vec<NodeDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeDoc {
    datum: DatumDoc,
    weights: WeightsDoc,
    lambda: Vec<String>,
    strata: Vec<StratumDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct StratumDoc {
    stratum: Vec<String>,
    step: StepDoc,
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum StepDoc {
    FullVanishing,
    AdjacentReduction {
        pair: [String; 2],
        child: usize,
    },
    SparseDecomposition {
        chosen: Vec<String>,
        u: Vec<String>,
        v: Vec<String>,
        s: String,
        a: Vec<String>,
        b: BTreeMap<String, String>,
        children: Vec<usize>,
    },
    BoundaryPassThrough {
        label: String,
        child: usize,
    },
    FiberLeaf {
        label: String,
        fiber_degree: String,
        child: usize,
    },
}

fn fmt_all(v: &[Rational]) -> Vec<String> {
    v.iter().map(rational::format).collect()
}

fn parse_all(v: &[String]) -> Result<Vec<Rational>> {
    v.iter().map(|s| rational::parse(s)).collect()
}

fn tokens(datum: &ShimuraDatum, v: &[EmbeddingId]) -> Vec<String> {
    v.iter().map(|t| datum.token(*t)).collect()
}

fn parse_labels(datum: &ShimuraDatum, v: &[String]) -> Result<Vec<EmbeddingId>> {
    v.iter().map(|s| datum.parse_token(s)).collect()
}

fn step_to_doc(datum: &ShimuraDatum, step: &ProofStep) -> StepDoc {
    match step {
        ProofStep::FullVanishing => StepDoc::FullVanishing,
        ProofStep::AdjacentReduction { pair, child } => StepDoc::AdjacentReduction {
            pair: [datum.token(pair.0), datum.token(pair.1)],
            child: *child,
        },
        ProofStep::SparseDecomposition { solution, children } => StepDoc::SparseDecomposition {
            chosen: tokens(datum, &solution.chosen),
            u: fmt_all(&solution.u),
            v: fmt_all(&solution.v),
            s: rational::format(&solution.s),
            a: fmt_all(&solution.a),
            b: solution
                .b
                .iter()
                .map(|(k, v)| (datum.token(*k), rational::format(v)))
                .collect(),
            children: children.clone(),
        },
        ProofStep::BoundaryPassThrough { label, child } => StepDoc::BoundaryPassThrough {
            label: datum.token(*label),
            child: *child,
        },
        ProofStep::FiberLeaf {
            label,
            fiber_degree,
            child,
        } => StepDoc::FiberLeaf {
            label: datum.token(*label),
            fiber_degree: rational::format(fiber_degree),
            child: *child,
        },
    }
}

fn step_from_doc(datum: &ShimuraDatum, doc: StepDoc) -> Result<ProofStep> {
    Ok(match doc {
        StepDoc::FullVanishing => ProofStep::FullVanishing,
        StepDoc::AdjacentReduction { pair, child } => ProofStep::AdjacentReduction {
            pair: (datum.parse_token(&pair[0])?, datum.parse_token(&pair[1])?),
            child,
        },
        StepDoc::SparseDecomposition {
            chosen,
            u,
            v,
            s,
            a,
            b,
            children,
        } => ProofStep::SparseDecomposition {
            solution: SparseSolution {
                chosen: parse_labels(datum, &chosen)?,
                u: parse_all(&u)?,
                v: parse_all(&v)?,
                s: rational::parse(&s)?,
                a: parse_all(&a)?,
                b: b.iter()
                    .map(|(k, v)| Ok((datum.parse_token(k)?, rational::parse(v)?)))
                    .collect::<Result<_>>()?,
            },
            children,
        },
        StepDoc::BoundaryPassThrough { label, child } => ProofStep::BoundaryPassThrough {
            label: datum.parse_token(&label)?,
            child,
        },
        StepDoc::FiberLeaf {
            label,
            fiber_degree,
            child,
        } => ProofStep::FiberLeaf {
            label: datum.parse_token(&label)?,
            fiber_degree: rational::parse(&fiber_degree)?,
            child,
        },
    })
}

pub fn certificate_to_json(cert: &Certificate) -> String {
    let doc = CertificateDoc {
        format: CERTIFICATE_FORMAT.into(),
        version: VERSION,
        datum: DatumDoc::from_datum(&cert.datum),
        weights: weights_to_doc(&cert.datum, &cert.weights),
        roots: cert.roots.clone(),
        nodes: cert
            .nodes
            .iter()
            .map(|n| NodeDoc {
                datum: DatumDoc::from_datum(&n.datum),
                weights: weights_to_doc(&n.datum, &n.weights),
                lambda: fmt_all(&n.lambda),
                strata: n
                    .strata
                    .iter()
                    .map(|s| StratumDoc {
                        stratum: s.stratum.iter().map(|t| n.datum.token(*t)).collect(),
                        step: step_to_doc(&n.datum, &s.step),
                    })
                    .collect(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("certificate documents always serialize")
}

pub fn certificate_from_json(text: &str) -> Result<Certificate> {
    let doc: CertificateDoc = serde_json::from_str(text)
        .map_err(|e| CoreError::Input(format!("malformed certificate: {e}")))?;
    if doc.format != CERTIFICATE_FORMAT {
        return Err(CoreError::Input(format!(
            "unknown certificate format {:?}",
            doc.format
        )));
    }
    if doc.version != VERSION {
        return Err(CoreError::Input(format!(
            "unsupported certificate version {}",
            doc.version
        )));
    }
    let datum = doc.datum.to_datum()?;
    let weights = weights_from_doc(&datum, &doc.weights)?;
    let nodes = doc
        .nodes
        .into_iter()
        .map(|n| {
            let d = n.datum.to_datum()?;
            let weights = weights_from_doc(&d, &n.weights)?;
            let lambda = parse_all(&n.lambda)?;
            let strata = n
                .strata
                .into_iter()
                .map(|s| {
                    let stratum: BTreeSet<EmbeddingId> =
                        parse_labels(&d, &s.stratum)?.into_iter().collect();
                    let step = step_from_doc(&d, s.step)?;
                    Ok(StratumProof { stratum, step })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(CertificateNode {
                datum: d,
                weights,
                lambda,
                strata,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Certificate {
        datum,
        weights,
        roots: doc.roots,
        nodes,
    })
}

/// Parses and verifies a serialized certificate. Format problems are errors;
/// a well-formed certificate that fails a check yields a failing verdict.
pub fn verify_json(text: &str) -> Result<Verdict> {
    Ok(verify_certificate(&certificate_from_json(text)?))
}
