//! Sampling symbolic identities at points and summarising their residuals.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chart::{Chart, Point};
use crate::expr::{EvalError, Expr, Tape, UnboundSymbol};
use crate::params::ParameterSet;
use crate::scalar::Scalar;
use crate::tensor::TensorField;

/// Several groups of expressions compiled into one tape.
#[derive(Debug, Clone)]
pub struct FieldEvaluator {
    tape: Tape,
    sizes: Vec<usize>,
}

impl FieldEvaluator {
    pub fn new(
        chart: &Chart,
        groups: &[&[Expr]],
        params: &ParameterSet,
    ) -> Result<Self, UnboundSymbol> {
        let roots: Vec<Expr> = groups.iter().flat_map(|g| g.iter().cloned()).collect();
        let tape = Tape::compile(&roots, &chart.name_refs(), params)?;
        Ok(FieldEvaluator {
            tape,
            sizes: groups.iter().map(|g| g.len()).collect(),
        })
    }

    pub fn for_fields(
        chart: &Chart,
        fields: &[&TensorField],
        params: &ParameterSet,
    ) -> Result<Self, UnboundSymbol> {
        let groups: Vec<&[Expr]> = fields.iter().map(|f| f.components()).collect();
        Self::new(chart, &groups, params)
    }

    pub fn tape_len(&self) -> usize {
        self.tape.len()
    }

    /// Values of every group at one point.
    pub fn eval<T: Scalar>(&self, point: &Point<T>) -> Result<Vec<Vec<T>>, EvalError> {
        let flat = self.tape.eval(point.coords())?;
        Ok(self.split(flat))
    }

    fn split<T: Scalar>(&self, flat: Vec<T>) -> Vec<Vec<T>> {
        let mut out = Vec::with_capacity(self.sizes.len());
        let mut it = flat.into_iter();
        for &s in &self.sizes {
            out.push(it.by_ref().take(s).collect());
        }
        out
    }

    /// Evaluates at every point in parallel; results keep the input order.
    pub fn eval_points<T: Scalar>(
        &self,
        points: &[Point<T>],
    ) -> Vec<Result<Vec<Vec<T>>, EvalError>> {
        points
            .par_iter()
            .map_init(
                || (Vec::new(), Vec::new()),
                |(work, out), p| {
                    self.tape.eval_into(p.coords(), work, out)?;
                    Ok(self.split(out.clone()))
                },
            )
            .collect()
    }
}

/// A sampled point where evaluation failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointFailure {
    pub point: Vec<f64>,
    pub message: String,
}

impl From<&EvalError> for PointFailure {
    fn from(e: &EvalError) -> Self {
        PointFailure {
            point: e.point.clone(),
            message: e.to_string(),
        }
    }
}

/// Residual statistics of one identity over a point sample.
///
/// `rel_sup` is the supremum over points of the pointwise ratio
/// `max|residual| / max(1, max|scale terms|)`. The check passes when
/// `rel_sup <= tolerance` and at least one point was evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub name: String,
    pub component_sup: Vec<f64>,
    pub abs_sup: f64,
    pub rel_sup: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub points: usize,
    pub failures: Vec<PointFailure>,
}

impl ResidualReport {
    fn empty(name: &str, components: usize, tolerance: f64) -> Self {
        ResidualReport {
            name: name.to_string(),
            component_sup: vec![0.0; components],
            abs_sup: 0.0,
            rel_sup: 0.0,
            tolerance,
            pass: false,
            points: 0,
            failures: Vec::new(),
        }
    }

    fn push(&mut self, residual: &[f64], scale: f64) {
        let mut worst: f64 = 0.0;
        for (sup, r) in self.component_sup.iter_mut().zip(residual) {
            let a = r.abs();
            // NaN propagates through `max` only one way; keep it explicitly
            if a.is_nan() {
                *sup = f64::NAN;
                worst = f64::NAN;
            } else {
                *sup = sup.max(a);
                if !worst.is_nan() {
                    worst = worst.max(a);
                }
            }
        }
        if worst.is_nan() {
            self.abs_sup = f64::NAN;
            self.rel_sup = f64::NAN;
        } else if !self.abs_sup.is_nan() {
            self.abs_sup = self.abs_sup.max(worst);
            self.rel_sup = self.rel_sup.max(worst / scale.max(1.0));
        }
        self.points += 1;
    }

    fn finish(mut self) -> Self {
        self.pass = self.points > 0 && self.rel_sup <= self.tolerance;
        self
    }

    /// Re-decides the pass flag at a new tolerance.
    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self.finish()
    }
}

/// A named group of residual checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub checks: Vec<ResidualReport>,
    pub pass: bool,
}

impl CheckReport {
    pub fn new(name: &str, checks: Vec<ResidualReport>) -> Self {
        let pass = !checks.is_empty() && checks.iter().all(|c| c.pass);
        CheckReport {
            name: name.to_string(),
            checks,
            pass,
        }
    }

    pub fn get(&self, name: &str) -> Option<&ResidualReport> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// An identity `residual = 0` to be sampled, with the expressions whose
/// magnitude sets the pointwise scale.
#[derive(Debug, Clone)]
pub struct Identity {
    pub name: String,
    pub residual: Vec<Expr>,
    pub scale: Vec<Expr>,
}

impl Identity {
    pub fn new(name: &str, residual: Vec<Expr>, scale: Vec<Expr>) -> Self {
        Identity {
            name: name.to_string(),
            residual,
            scale,
        }
    }

    /// `lhs − rhs = 0`, scaled by the magnitude of both sides.
    pub fn equal(name: &str, lhs: &[Expr], rhs: &[Expr]) -> Self {
        assert_eq!(lhs.len(), rhs.len());
        let residual = lhs.iter().zip(rhs).map(|(a, b)| a - b).collect();
        let scale = lhs.iter().chain(rhs).cloned().collect();
        Identity::new(name, residual, scale)
    }

    /// `field = 0`, scaled by the given terms.
    pub fn vanishing(name: &str, field: &TensorField, terms: &[&TensorField]) -> Self {
        let scale = terms
            .iter()
            .flat_map(|t| t.components().iter().cloned())
            .collect();
        Identity::new(name, field.components().to_vec(), scale)
    }
}

/// Samples each identity at `points`. Domain errors skip the point for the
/// affected identities and are recorded in the report.
pub fn sample_identities(
    chart: &Chart,
    identities: &[Identity],
    params: &ParameterSet,
    points: &[Point<f64>],
    tolerance: f64,
) -> Result<Vec<ResidualReport>, UnboundSymbol> {
    identities
        .iter()
        .map(|id| {
            let ev = FieldEvaluator::new(chart, &[&id.residual, &id.scale], params)?;
            let mut report = ResidualReport::empty(&id.name, id.residual.len(), tolerance);
            for result in ev.eval_points(points) {
                match result {
                    Ok(v) => {
                        let scale = v[1].iter().fold(0.0_f64, |m, x| m.max(x.abs()));
                        report.push(&v[0], scale);
                    }
                    Err(e) => report.failures.push(PointFailure::from(&e)),
                }
            }
            Ok(report.finish())
        })
        .collect()
}

pub fn sample_identity(
    chart: &Chart,
    identity: &Identity,
    params: &ParameterSet,
    points: &[Point<f64>],
    tolerance: f64,
) -> Result<ResidualReport, UnboundSymbol> {
    Ok(sample_identities(
        chart,
        std::slice::from_ref(identity),
        params,
        points,
        tolerance,
    )?
    .remove(0))
}
