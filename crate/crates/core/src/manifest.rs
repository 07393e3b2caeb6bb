//! JSON manifests describing a chart, metric, structure and soliton data.
//!
//! ```json
//! {
//!   "chart": {"coords": ["x", "y"], "bounds": {"y": [0, null]}},
//!   "metric": [["1/y^2", "0"], ["0", "1/y^2"]],
//!   "structure": {"phi": [[...]], "xi": [...], "eta": [...]},
//!   "scalars": {"f1": "...", "f2": "..."},
//!   "vectors": {"X1": [...], "X2": [...]},
//!   "definitions": {"p": "..."},
//!   "constants": {"c1": 2, "c2": 1, "lambda": "fit", "k": 0.5},
//!   "sampling": {"strategy": "uniform", "count": 500, "seed": 42},
//!   "tolerance": 1e-8
//! }
//! ```
//!
//! `structure`, `scalars`, `vectors` and `definitions` are optional.
//! Definitions are named subexpressions substituted into every other
//! expression; they may use coordinates and constants but not each other.

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::chart::{Chart, ChartError, Interval, Sampling};
use crate::contact::{AlmostContactStructure, ContactError};
use crate::expr::{parse, Expr, ParseError};
use crate::fit::substitute_constants;
use crate::metric::{MetricError, MetricField};
use crate::params::ParameterSet;
use crate::soliton::Constants;
use crate::tensor::{Geometry, TensorField};

pub const DEFAULT_TOLERANCE: f64 = 1e-8;

/// Names of the built-in manifests.
pub const BUNDLED: [&str; 3] = ["hyperbolic", "cone", "sasakian3"];

/// Source text of a built-in manifest.
pub fn bundled_source(name: &str) -> Option<&'static str> {
    match name {
        "hyperbolic" => Some(include_str!("../manifests/hyperbolic.json")),
        "cone" => Some(include_str!("../manifests/cone.json")),
        "sasakian3" => Some(include_str!("../manifests/sasakian3.json")),
        _ => None,
    }
}

/// Parses a built-in manifest.
pub fn bundled(name: &str) -> Result<Manifest, ManifestError> {
    let src =
        bundled_source(name).ok_or_else(|| ManifestError::UnknownExample(name.to_string()))?;
    Manifest::from_json(src)
}

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("invalid manifest JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("unknown bundled example `{0}` (expected one of hyperbolic, cone, sasakian3)")]
    UnknownExample(String),
    #[error("{field}: {source}")]
    Expression {
        field: String,
        #[source]
        source: ParseError,
    },
    #[error("chart: {0}")]
    Chart(#[from] ChartError),
    #[error("metric: {0}")]
    Metric(#[from] MetricError),
    #[error("structure: {0}")]
    Structure(#[from] ContactError),
    #[error("{field} must have {expected} entries, got {got}")]
    Shape {
        field: String,
        expected: usize,
        got: usize,
    },
    #[error("constant `{name}`: {reason}")]
    Constant { name: String, reason: String },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChartSpec {
    pub coords: Vec<String>,
    #[serde(default)]
    pub bounds: BTreeMap<String, [Option<f64>; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureSpec {
    pub phi: Vec<Vec<String>>,
    pub xi: Vec<String>,
    pub eta: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalarsSpec {
    pub f1: String,
    pub f2: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VectorsSpec {
    #[serde(rename = "X1")]
    pub x1: Vec<String>,
    #[serde(rename = "X2")]
    pub x2: Vec<String>,
}

/// A constant given as a number or the string `"fit"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ConstantValue {
    Value(f64),
    Fit(FitMarker),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitMarker {
    Fit,
}

impl ConstantValue {
    pub fn value(self) -> Option<f64> {
        match self {
            ConstantValue::Value(v) => Some(v),
            ConstantValue::Fit(_) => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SamplingSpec {
    pub strategy: Sampling,
    pub count: usize,
    pub seed: u64,
}

impl Default for SamplingSpec {
    fn default() -> Self {
        SamplingSpec {
            strategy: Sampling::Uniform,
            count: 200,
            seed: 0,
        }
    }
}

fn default_tolerance() -> f64 {
    DEFAULT_TOLERANCE
}

/// The manifest document as written.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub chart: ChartSpec,
    pub metric: Vec<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structure: Option<StructureSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scalars: Option<ScalarsSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub vectors: Option<VectorsSpec>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub definitions: BTreeMap<String, String>,
    #[serde(default)]
    pub constants: BTreeMap<String, ConstantValue>,
    #[serde(default)]
    pub sampling: SamplingSpec,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

/// Hex SHA-256 of the manifest source text.
pub fn digest(source: &str) -> String {
    hex::encode(Sha256::digest(source.as_bytes()))
}

impl Manifest {
    pub fn from_json(text: &str) -> Result<Manifest, ManifestError> {
        Ok(serde_json::from_str(text)?)
    }

    /// `(c1, c2, lambda)` with `None` for entries marked `"fit"`. Missing
    /// entries are an error.
    pub fn soliton_constants(&self) -> Result<[Option<f64>; 3], ManifestError> {
        let mut out = [None; 3];
        for (slot, name) in out.iter_mut().zip(Constants::NAMES) {
            let v = self
                .constants
                .get(name)
                .ok_or_else(|| ManifestError::Constant {
                    name: name.to_string(),
                    reason: "missing (give a number or \"fit\")".to_string(),
                })?;
            *slot = v.value();
        }
        Ok(out)
    }

    /// Extra named constants, everything except `c1`, `c2`, `lambda`.
    pub fn extra_params(&self) -> Result<ParameterSet, ManifestError> {
        let mut params = ParameterSet::new();
        for (name, v) in &self.constants {
            if Constants::NAMES.contains(&name.as_str()) {
                continue;
            }
            let v = v.value().ok_or_else(|| ManifestError::Constant {
                name: name.clone(),
                reason: "only c1, c2 and lambda can be fitted".to_string(),
            })?;
            params.set(name, v);
        }
        Ok(params)
    }

    /// Parses every expression and builds the chart and metric.
    pub fn load(&self) -> Result<Loaded, ManifestError> {
        let names: Vec<&str> = self.chart.coords.iter().map(String::as_str).collect();
        let mut bounds = Vec::new();
        for (name, [lo, hi]) in &self.chart.bounds {
            let iv = Interval::new(lo.unwrap_or(f64::NEG_INFINITY), hi.unwrap_or(f64::INFINITY));
            bounds.push((name.as_str(), iv));
        }
        let chart = Arc::new(Chart::new(&names, &bounds)?);
        let n = chart.dim();
        if !self.tolerance.is_finite() || self.tolerance <= 0.0 {
            return Err(ManifestError::Invalid(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.sampling.count == 0 {
            return Err(ManifestError::Invalid(
                "sampling.count must be at least 1".to_string(),
            ));
        }
        for (name, v) in &self.constants {
            if let Some(x) = v.value() {
                if !x.is_finite() {
                    return Err(ManifestError::Constant {
                        name: name.clone(),
                        reason: "must be finite".to_string(),
                    });
                }
            }
        }

        let mut defs = HashMap::new();
        for (name, text) in &self.definitions {
            if names.contains(&name.as_str()) || Constants::NAMES.contains(&name.as_str()) {
                return Err(ManifestError::Invalid(format!(
                    "definition `{name}` shadows a coordinate or soliton constant"
                )));
            }
            let e = parse(text).map_err(|source| ManifestError::Expression {
                field: format!("definitions.{name}"),
                source,
            })?;
            defs.insert(name.clone(), e);
        }
        for (name, e) in &defs {
            if let Some(s) = e.free_symbols().iter().find(|s| defs.contains_key(&***s)) {
                return Err(ManifestError::Invalid(format!(
                    "definition `{name}` refers to definition `{s}`"
                )));
            }
        }
        let expr = |field: String, text: &str| -> Result<Expr, ManifestError> {
            let e = parse(text).map_err(|source| ManifestError::Expression { field, source })?;
            Ok(e.substitute(&defs).simplify())
        };
        let vector = |field: &str, texts: &[String]| -> Result<Vec<Expr>, ManifestError> {
            if texts.len() != n {
                return Err(ManifestError::Shape {
                    field: field.to_string(),
                    expected: n,
                    got: texts.len(),
                });
            }
            texts
                .iter()
                .enumerate()
                .map(|(i, t)| expr(format!("{field}[{i}]"), t))
                .collect()
        };
        let matrix = |field: &str, rows: &[Vec<String>]| -> Result<Vec<Vec<Expr>>, ManifestError> {
            if rows.len() != n {
                return Err(ManifestError::Shape {
                    field: field.to_string(),
                    expected: n,
                    got: rows.len(),
                });
            }
            rows.iter()
                .enumerate()
                .map(|(i, r)| vector(&format!("{field}[{i}]"), r))
                .collect()
        };

        let metric_exprs = matrix("metric", &self.metric)?;
        let structure = self
            .structure
            .as_ref()
            .map(|s| -> Result<_, ManifestError> {
                Ok(StructureExprs {
                    phi: matrix("structure.phi", &s.phi)?,
                    xi: vector("structure.xi", &s.xi)?,
                    eta: vector("structure.eta", &s.eta)?,
                })
            })
            .transpose()?;
        let scalars = self
            .scalars
            .as_ref()
            .map(|s| -> Result<_, ManifestError> {
                Ok((
                    expr("scalars.f1".to_string(), &s.f1)?,
                    expr("scalars.f2".to_string(), &s.f2)?,
                ))
            })
            .transpose()?;
        let vectors = self
            .vectors
            .as_ref()
            .map(|v| -> Result<_, ManifestError> {
                Ok((vector("vectors.X1", &v.x1)?, vector("vectors.X2", &v.x2)?))
            })
            .transpose()?;

        let constants = self.soliton_constants();
        let params = self.extra_params()?;
        // Numeric soliton constants are substituted into every expression;
        // fitted ones must not appear anywhere.
        let fixed = constants.as_ref().ok().copied().unwrap_or([None; 3]);
        let known: HashMap<String, Expr> = Constants::NAMES
            .iter()
            .zip(fixed)
            .filter_map(|(n, v)| v.map(|v| (n.to_string(), Expr::num(v))))
            .collect();
        let bind = |e: Expr| {
            if known.is_empty() {
                e
            } else {
                e.substitute(&known).simplify()
            }
        };
        let metric_exprs: Vec<Vec<Expr>> = metric_exprs
            .into_iter()
            .map(|r| r.into_iter().map(bind).collect())
            .collect();
        let metric = MetricField::new(chart.clone(), metric_exprs, &params)?;
        let geometry = Arc::new(Geometry::new(metric));
        let structure = structure
            .map(|s| {
                AlmostContactStructure::new_unchecked(
                    geometry.clone(),
                    s.phi
                        .into_iter()
                        .map(|r| r.into_iter().map(bind).collect())
                        .collect(),
                    s.xi.into_iter().map(bind).collect(),
                    s.eta.into_iter().map(bind).collect(),
                )
            })
            .transpose()?;
        let vectors = vectors.map(|(a, b)| {
            (
                TensorField::vector(chart.clone(), a.into_iter().map(bind).collect()),
                TensorField::vector(chart.clone(), b.into_iter().map(bind).collect()),
            )
        });
        let scalars = scalars.map(|(a, b)| (bind(a), bind(b)));
        if let Some((x1, x2)) = &vectors {
            for c in x1.components().iter().chain(x2.components()) {
                if let Some(s) = c
                    .free_symbols()
                    .iter()
                    .find(|s| Constants::NAMES.contains(&&***s))
                {
                    return Err(ManifestError::Constant {
                        name: s.to_string(),
                        reason: "fitted constants are only allowed in gradient mode".to_string(),
                    });
                }
            }
        }
        Ok(Loaded {
            chart,
            geometry,
            structure,
            scalars,
            vectors,
            constants,
            params,
        })
    }
}

struct StructureExprs {
    phi: Vec<Vec<Expr>>,
    xi: Vec<Expr>,
    eta: Vec<Expr>,
}

/// A manifest with every expression parsed and the geometry built.
#[derive(Debug)]
pub struct Loaded {
    pub chart: Arc<Chart>,
    pub geometry: Arc<Geometry>,
    pub structure: Option<AlmostContactStructure>,
    /// `(f₁, f₂)` with numeric soliton constants already substituted.
    pub scalars: Option<(Expr, Expr)>,
    pub vectors: Option<(TensorField, TensorField)>,
    /// Soliton constants, or the error to report when a check needs them.
    pub constants: Result<[Option<f64>; 3], ManifestError>,
    /// Extra named constants.
    pub params: ParameterSet,
}

impl Loaded {
    /// The potentials with fitted constants substituted.
    pub fn resolved_scalars(&self, k: Constants) -> Option<(Expr, Expr)> {
        self.scalars
            .as_ref()
            .map(|(a, b)| (substitute_constants(a, k), substitute_constants(b, k)))
    }
}
