//! JSON shapes shared by the CLI input document and the certificate format.
//!
//! ```json
//! { "p": 2,
//!   "blocks": [ { "name": "p1", "f": 2, "signature": [1, 1] } ],
//!   "weights": { "p1.1": "1", "p1.2": "3/2" } }
//! ```

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cone::WeightTuple;
use crate::datum::{ShimuraDatum, Signature};
use crate::error::{CoreError, Result};
use crate::rational;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockDoc {
    pub name: String,
    pub f: usize,
    pub signature: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatumDoc {
    pub p: u64,
    pub blocks: Vec<BlockDoc>,
}

impl DatumDoc {
    pub fn to_datum(&self) -> Result<ShimuraDatum> {
        let blocks = self
            .blocks
            .iter()
            .map(|b| {
                if b.signature.len() != b.f {
                    return Err(CoreError::Input(format!(
                        "block {:?}: signature has length {} but f = {}",
                        b.name,
                        b.signature.len(),
                        b.f
                    )));
                }
                let row = b
                    .signature
                    .iter()
                    .map(|&d| Signature::from_digit(d))
                    .collect::<Result<Vec<_>>>()?;
                Ok((b.name.clone(), row))
            })
            .collect::<Result<Vec<_>>>()?;
        ShimuraDatum::new(self.p, blocks)
    }

    pub fn from_datum(datum: &ShimuraDatum) -> Self {
        DatumDoc {
            p: datum.p(),
            blocks: datum
                .blocks()
                .iter()
                .enumerate()
                .map(|(i, b)| BlockDoc {
                    name: b.label.clone(),
                    f: b.inertia_degree,
                    signature: datum.signature_row(i).iter().map(|s| s.digit()).collect(),
                })
                .collect(),
        }
    }
}

/// `"block.slot" → "a/b"`.
pub type WeightsDoc = BTreeMap<String, String>;

pub fn weights_to_doc(datum: &ShimuraDatum, t: &WeightTuple) -> WeightsDoc {
    t.iter()
        .map(|(tau, w)| (datum.token(*tau), rational::format(w)))
        .collect()
}

pub fn weights_from_doc(datum: &ShimuraDatum, doc: &WeightsDoc) -> Result<WeightTuple> {
    let mut map = BTreeMap::new();
    for (k, v) in doc {
        let tau = datum.parse_token(k)?;
        if map.insert(tau, rational::parse(v)?).is_some() {
            return Err(CoreError::Input(format!("duplicate weight key {k:?}")));
        }
    }
    WeightTuple::new(datum, map)
}

/// The CLI input document: a datum plus optional weights.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputDocument {
    pub p: u64,
    pub blocks: Vec<BlockDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<WeightsDoc>,
}

impl InputDocument {
    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| CoreError::Input(format!("malformed input: {e}")))
    }

    pub fn datum(&self) -> Result<ShimuraDatum> {
        DatumDoc {
            p: self.p,
            blocks: self.blocks.clone(),
        }
        .to_datum()
    }

    pub fn weights(&self, datum: &ShimuraDatum) -> Result<WeightTuple> {
        match &self.weights {
            Some(w) => weights_from_doc(datum, w),
            None => Err(CoreError::Input("input document has no weights".into())),
        }
    }
}
