//! Riemannian metrics as matrices of expressions.

use std::sync::Arc;

use thiserror::Error;

use crate::chart::{Chart, ChartError, Point, Sampling};
use crate::expr::{EvalError, Expr, Tape, UnboundSymbol};
use crate::params::ParameterSet;
use crate::scalar::Scalar;

/// Points used to validate a metric on construction.
pub const VALIDATION_POINTS: usize = 100;
const VALIDATION_SEED: u64 = 0x5eed;
/// Largest absolute asymmetry accepted between `g_ij` and `g_ji`.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// The symbolic adjugate inverse is only built up to this dimension.
pub const MAX_DIM: usize = 5;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("metric must be {expected}x{expected}, got {rows} rows with lengths {cols:?}")]
    Shape {
        expected: usize,
        rows: usize,
        cols: Vec<usize>,
    },
    #[error("dimension {0} exceeds the supported maximum of {MAX_DIM}")]
    TooLarge(usize),
    #[error(transparent)]
    Unbound(#[from] UnboundSymbol),
    #[error(transparent)]
    Chart(#[from] ChartError),
    #[error("g[{i}][{j}] and g[{j}][{i}] differ by {diff:e} at {point:?}")]
    Asymmetric {
        i: usize,
        j: usize,
        diff: f64,
        point: Vec<f64>,
    },
    #[error("metric is singular at {point:?}")]
    Singular { point: Vec<f64> },
    #[error("metric is not positive definite at {point:?} (leading minor {minor} = {value:e})")]
    NotPositiveDefinite {
        point: Vec<f64>,
        minor: usize,
        value: f64,
    },
    #[error(transparent)]
    Domain(#[from] EvalError),
}

/// Metric `g_ij` on a chart with its symbolic inverse and determinant.
#[derive(Debug, Clone)]
pub struct MetricField {
    chart: Arc<Chart>,
    g: Vec<Expr>,
    inv: Vec<Expr>,
    det: Expr,
}

fn minor(m: &[Expr], n: usize, skip_row: usize, skip_col: usize) -> Vec<Expr> {
    let mut out = Vec::with_capacity((n - 1) * (n - 1));
    for r in (0..n).filter(|&r| r != skip_row) {
        for c in (0..n).filter(|&c| c != skip_col) {
            out.push(m[r * n + c].clone());
        }
    }
    out
}

/// Determinant by cofactor expansion along the first row.
pub(crate) fn determinant(m: &[Expr], n: usize) -> Expr {
    match n {
        0 => Expr::one(),
        1 => m[0].clone(),
        2 => &m[0] * &m[3] - &m[1] * &m[2],
        _ => (0..n)
            .filter(|&c| !m[c].is_zero())
            .map(|c| {
                let term = &m[c] * determinant(&minor(m, n, 0, c), n - 1);
                if c % 2 == 0 {
                    term
                } else {
                    -term
                }
            })
            .sum(),
    }
}

impl MetricField {
    /// Builds and validates a metric from an `n x n` matrix of expressions.
    ///
    /// Validation evaluates the entries at [`VALIDATION_POINTS`] seeded points
    /// and rejects asymmetric, singular or indefinite matrices. After
    /// validation the upper triangle is mirrored so the stored matrix is
    /// exactly symmetric.
    pub fn new(
        chart: Arc<Chart>,
        matrix: Vec<Vec<Expr>>,
        params: &ParameterSet,
    ) -> Result<MetricField, MetricError> {
        let n = chart.dim();
        if matrix.len() != n || matrix.iter().any(|r| r.len() != n) {
            return Err(MetricError::Shape {
                expected: n,
                rows: matrix.len(),
                cols: matrix.iter().map(Vec::len).collect(),
            });
        }
        if n > MAX_DIM {
            return Err(MetricError::TooLarge(n));
        }
        let raw: Vec<Expr> = matrix.into_iter().flatten().map(|e| e.simplify()).collect();
        let coords = chart.name_refs();
        let tape = Tape::compile(&raw, &coords, params)?;
        let points: Vec<Point<f64>> =
            chart.sample_points(Sampling::Uniform, VALIDATION_POINTS, VALIDATION_SEED)?;
        for p in &points {
            let v = tape.eval(p.coords())?;
            for i in 0..n {
                for j in (i + 1)..n {
                    let diff = (v[i * n + j] - v[j * n + i]).abs();
                    if diff > SYMMETRY_TOL || diff.is_nan() {
                        return Err(MetricError::Asymmetric {
                            i,
                            j,
                            diff,
                            point: p.to_f64(),
                        });
                    }
                }
            }
            check_positive_definite(&v, n).map_err(|(minor, value)| {
                if value == 0.0 {
                    MetricError::Singular { point: p.to_f64() }
                } else {
                    MetricError::NotPositiveDefinite {
                        point: p.to_f64(),
                        minor,
                        value,
                    }
                }
            })?;
        }
        let mut g = raw;
        for i in 0..n {
            for j in 0..i {
                g[i * n + j] = g[j * n + i].clone();
            }
        }
        let det = determinant(&g, n);
        let inv = (0..n * n)
            .map(|k| {
                let (i, j) = (k / n, k % n);
                if i > j {
                    return None;
                }
                let cof = determinant(&minor(&g, n, j, i), n - 1);
                let signed = if (i + j) % 2 == 0 { cof } else { -cof };
                Some(signed / &det)
            })
            .collect::<Vec<_>>();
        let inv = (0..n * n)
            .map(|k| {
                let (i, j) = (k / n, k % n);
                let (a, b) = if i <= j { (i, j) } else { (j, i) };
                inv[a * n + b].clone().expect("upper triangle filled")
            })
            .collect();
        Ok(MetricField { chart, g, inv, det })
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn g(&self, i: usize, j: usize) -> &Expr {
        &self.g[i * self.dim() + j]
    }

    pub fn inv(&self, i: usize, j: usize) -> &Expr {
        &self.inv[i * self.dim() + j]
    }

    pub fn det(&self) -> &Expr {
        &self.det
    }

    pub fn components(&self) -> &[Expr] {
        &self.g
    }

    pub fn inverse_components(&self) -> &[Expr] {
        &self.inv
    }

    /// Numeric value of `g_ij` at a point, row-major.
    pub fn at<T: Scalar>(
        &self,
        point: &Point<T>,
        params: &ParameterSet,
    ) -> Result<Vec<T>, MetricError> {
        let tape = Tape::compile(&self.g, &self.chart.name_refs(), params)?;
        Ok(tape.eval(point.coords())?)
    }

    /// Numeric inverse `g^ij` at a point, row-major.
    pub fn inverse_at<T: Scalar>(
        &self,
        point: &Point<T>,
        params: &ParameterSet,
    ) -> Result<Vec<T>, MetricError> {
        let tape = Tape::compile(&self.inv, &self.chart.name_refs(), params)?;
        tape.eval(point.coords()).map_err(|e| match e.kind {
            crate::expr::DomainKind::DivisionByZero => MetricError::Singular {
                point: point.to_f64(),
            },
            _ => MetricError::Domain(e),
        })
    }
}

/// Cholesky-style test of the leading principal minors. On failure returns
/// the 1-based index of the first non-positive minor and its value.
fn check_positive_definite(m: &[f64], n: usize) -> Result<(), (usize, f64)> {
    let mut a = m.to_vec();
    let mut minor = 1.0;
    for k in 0..n {
        let pivot = a[k * n + k];
        minor *= pivot;
        if pivot.is_nan() || pivot <= 0.0 {
            return Err((k + 1, if pivot == 0.0 { 0.0 } else { minor }));
        }
        for i in (k + 1)..n {
            let f = a[i * n + k] / pivot;
            for j in k..n {
                a[i * n + j] -= f * a[k * n + j];
            }
        }
    }
    Ok(())
}
