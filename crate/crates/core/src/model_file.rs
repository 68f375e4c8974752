//! JSON exchange format for hidden-variable models.
//!
//! Two forms are accepted. The shorthand lists weights per property
//! triplet:
//!
//! ```json
//! { "triplets": { "001": 0.2, "110": 0.8 } }
//! ```
//!
//! The explicit form gives one entry per λ with `[P(0|X), P(1|X)]` rows for
//! each object:
//!
//! ```json
//! {
//!   "objects": 2,
//!   "settings": ["A", "B", "C"],
//!   "lambdas": [
//!     { "id": "l0", "weight": 1.0,
//!       "p1": { "A": [1.0, 0.0], "B": [0.5, 0.5], "C": [0.0, 1.0] },
//!       "p2": { "A": [1.0, 0.0], "B": [0.5, 0.5], "C": [0.0, 1.0] } }
//!   ]
//! }
//! ```
//!
//! Numbers are written with shortest round-trip formatting, so
//! parse → serialize → parse reproduces every weight bit for bit.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::lhv::{
    model_from_triplet_distribution, HiddenState, LhvModel, OutcomeProbs, PropertyTriplet,
    ResponseTable, TripletWeights,
};
use crate::{BellError, Result, Setting, INPUT_NORM_TOL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TripletsDoc {
    triplets: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LambdaDoc {
    id: String,
    weight: f64,
    p1: BTreeMap<Setting, OutcomeProbs>,
    p2: BTreeMap<Setting, OutcomeProbs>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExplicitDoc {
    objects: u32,
    settings: Vec<Setting>,
    lambdas: Vec<LambdaDoc>,
}

/// A parsed and validated model document, keeping the form it was
/// written in.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelDocument {
    Triplets(TripletWeights),
    Explicit(LhvModel),
}

impl ModelDocument {
    /// Parses and validates `text`. `source_name` is used in diagnostics.
    pub fn parse(text: &str, source_name: &str) -> Result<Self> {
        let value: Value = serde_json::from_str(text).map_err(|e| BellError::Parse {
            source_name: source_name.to_string(),
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        let invalid = |location: String, message: String| BellError::Validation {
            source_name: source_name.to_string(),
            location,
            message,
        };
        let is_triplets = value.get("triplets").is_some();
        if is_triplets {
            let doc: TripletsDoc = serde_json::from_value(value)
                .map_err(|e| invalid("document".into(), e.to_string()))?;
            let mut weights = TripletWeights::new();
            for (key, &w) in &doc.triplets {
                let location = format!("triplets.{key:?}");
                let t: PropertyTriplet = key
                    .parse()
                    .map_err(|e: BellError| invalid(location.clone(), e.to_string()))?;
                if !w.is_finite() || w < 0.0 {
                    return Err(invalid(
                        location,
                        format!("weight {w} must be finite and non-negative"),
                    ));
                }
                if weights.insert(t, w).is_some() {
                    return Err(invalid(location, "duplicate triplet".into()));
                }
            }
            let total: f64 = weights.values().sum();
            if (total - 1.0).abs() > INPUT_NORM_TOL {
                return Err(invalid(
                    "triplets".into(),
                    format!("weights sum to {total}, expected 1"),
                ));
            }
            return Ok(ModelDocument::Triplets(weights));
        }

        let doc: ExplicitDoc = serde_json::from_value(value)
            .map_err(|e| invalid("document".into(), e.to_string()))?;
        if doc.objects != 2 {
            return Err(invalid(
                "objects".into(),
                format!("expected 2 objects, found {}", doc.objects),
            ));
        }
        if doc.settings != Setting::ALL {
            return Err(invalid(
                "settings".into(),
                format!("expected [\"A\", \"B\", \"C\"], found {:?}", doc.settings),
            ));
        }
        let mut seen = BTreeSet::new();
        let mut lambdas = Vec::with_capacity(doc.lambdas.len());
        for (i, l) in doc.lambdas.into_iter().enumerate() {
            let location = format!("lambdas[{i}] (id {:?})", l.id);
            if !seen.insert(l.id.clone()) {
                return Err(invalid(location, "duplicate id".into()));
            }
            if !l.weight.is_finite() || l.weight < 0.0 {
                return Err(invalid(
                    format!("{location}.weight"),
                    format!("weight {} must be finite and non-negative", l.weight),
                ));
            }
            let rows = |name: &str, map: &BTreeMap<Setting, OutcomeProbs>| -> Result<[OutcomeProbs; 3]> {
                let mut out = [[0.0; 2]; 3];
                for s in Setting::ALL {
                    let row = *map.get(&s).ok_or_else(|| {
                        invalid(format!("{location}.{name}"), format!("missing setting {s}"))
                    })?;
                    if row.iter().any(|p| !p.is_finite() || *p < 0.0 || *p > 1.0)
                        || (row[0] + row[1] - 1.0).abs() > INPUT_NORM_TOL
                    {
                        return Err(invalid(
                            format!("{location}.{name}.{s}"),
                            format!("{row:?} is not a probability pair summing to 1"),
                        ));
                    }
                    out[s.index()] = row;
                }
                Ok(out)
            };
            let table = ResponseTable::new(rows("p1", &l.p1)?, rows("p2", &l.p2)?);
            lambdas.push(HiddenState {
                id: l.id,
                weight: l.weight,
                table,
            });
        }
        let model = LhvModel::new(lambdas).map_err(|e| invalid("lambdas".into(), e.to_string()))?;
        Ok(ModelDocument::Explicit(model))
    }

    /// The model this document describes. Triplet documents expand to one
    /// deterministic λ per listed triplet.
    pub fn model(&self) -> Result<LhvModel> {
        match self {
            ModelDocument::Triplets(w) => model_from_triplet_distribution(w),
            ModelDocument::Explicit(m) => Ok(m.clone()),
        }
    }

    pub fn to_json(&self) -> String {
        let value = match self {
            ModelDocument::Triplets(w) => serde_json::to_value(TripletsDoc {
                triplets: w.iter().map(|(t, &p)| (t.to_string(), p)).collect(),
            }),
            ModelDocument::Explicit(m) => serde_json::to_value(ExplicitDoc {
                objects: 2,
                settings: Setting::ALL.to_vec(),
                lambdas: m
                    .lambdas()
                    .iter()
                    .map(|l| LambdaDoc {
                        id: l.id.clone(),
                        weight: l.weight,
                        p1: Setting::ALL.iter().map(|&s| (s, l.table.first[s.index()])).collect(),
                        p2: Setting::ALL.iter().map(|&s| (s, l.table.second[s.index()])).collect(),
                    })
                    .collect(),
            }),
        }
        .expect("model documents are always representable as JSON");
        let mut s = serde_json::to_string_pretty(&value).expect("serializing a JSON value");
        s.push('\n');
        s
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| BellError::io(path, e))?;
        ModelDocument::parse(&text, &path.display().to_string())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| BellError::io(path, e))
    }
}

/// Writes an explicit document for `model`.
pub fn model_to_json(model: &LhvModel) -> String {
    ModelDocument::Explicit(model.clone()).to_json()
}
