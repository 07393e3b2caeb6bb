//! Least-squares recovery of `(c₁, c₂, λ)` from a metric and fixed potentials.
//!
//! The gradient-form residual is affine in the constants:
//!
//! ```text
//! c₁ (df₂⊙df₂) + c₂ (−Ric) + λ (−g) = −Hess f₁
//! ```
//!
//! Every independent component at every sample point contributes one row.
//! The system is solved through its 3×3 normal matrix; eigenvalues below
//! [`RANK_TOL`] times the largest are treated as zero, giving the minimum-norm
//! solution plus an orthonormal basis of the null space.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::check::FieldEvaluator;
use crate::expr::{Expr, UnboundSymbol};
use crate::params::ParameterSet;
use crate::soliton::{Constants, SolitonSpec};
use crate::tensor::{differential, sym_product, Geometry};
use crate::Point64;

/// Relative eigenvalue threshold for the rank decision.
pub const RANK_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error(transparent)]
    Unbound(#[from] UnboundSymbol),
    #[error("need at least 3 evaluable sample points, got {0}")]
    TooFewPoints(usize),
    #[error("potential refers to `{0}`, which is being fitted")]
    TemplateUsesFitted(String),
}

/// Stacked rows `[a₁, a₂, a₃, b]` of the linear system.
#[derive(Debug, Clone)]
pub struct Design {
    rows: Vec<[f64; 4]>,
    points: usize,
    skipped: usize,
}

impl Design {
    /// Evaluates the coefficient columns at `points`. Points where any
    /// column hits a domain error are skipped and counted.
    pub fn assemble(
        geom: &Geometry,
        f1: &Expr,
        f2: &Expr,
        params: &ParameterSet,
        points: &[Point64],
    ) -> Result<Design, FitError> {
        for f in [f1, f2] {
            if let Some(s) = f
                .free_symbols()
                .iter()
                .find(|s| Constants::NAMES.contains(&&***s))
            {
                if !params.contains(s) {
                    return Err(FitError::TemplateUsesFitted(s.to_string()));
                }
            }
        }
        let n = geom.dim();
        let upper: Vec<(usize, usize)> = (0..n).flat_map(|i| (i..n).map(move |j| (i, j))).collect();
        let df2 = differential(geom.chart(), f2);
        let sq = sym_product(&df2, &df2);
        let hess = geom.hessian(f1);
        let g = geom.metric_field();
        let ric = geom.ricci();
        let pick = |f: &dyn Fn(usize, usize) -> Expr| {
            upper.iter().map(|&(i, j)| f(i, j)).collect::<Vec<_>>()
        };
        let cols = [
            pick(&|i, j| sq.get(&[i, j]).clone()),
            pick(&|i, j| -ric.get(&[i, j])),
            pick(&|i, j| -g.get(&[i, j])),
            pick(&|i, j| -hess.get(&[i, j])),
        ];
        let groups: Vec<&[Expr]> = cols.iter().map(Vec::as_slice).collect();
        let ev = FieldEvaluator::new(geom.chart(), &groups, params)?;
        let mut rows = Vec::with_capacity(points.len() * upper.len());
        let mut used = 0;
        let mut skipped = 0;
        for result in ev.eval_points(points) {
            match result {
                Ok(v) => {
                    used += 1;
                    rows.extend((0..upper.len()).map(|r| [v[0][r], v[1][r], v[2][r], v[3][r]]));
                }
                Err(_) => skipped += 1,
            }
        }
        if used < 3 {
            return Err(FitError::TooFewPoints(used));
        }
        Ok(Design {
            rows,
            points: used,
            skipped,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows.len()
    }

    /// Residual vector `A c − b`.
    fn residuals(&self, c: [f64; 3]) -> impl Iterator<Item = f64> + '_ {
        self.rows
            .iter()
            .map(move |r| r[0] * c[0] + r[1] * c[1] + r[2] * c[2] - r[3])
    }

    /// Largest absolute row residual.
    pub fn residual_sup(&self, c: [f64; 3]) -> f64 {
        self.residuals(c).fold(0.0, |m, r| m.max(r.abs()))
    }

    /// Euclidean norm of the residual vector, the least-squares objective.
    pub fn residual_l2(&self, c: [f64; 3]) -> f64 {
        self.residuals(c).map(|r| r * r).sum::<f64>().sqrt()
    }

    /// Solves with every constant free.
    pub fn solve(&self) -> FitResult {
        self.solve_with([None; 3])
    }

    /// Solves for the constants given as `None`, holding the others fixed.
    pub fn solve_with(&self, fixed: [Option<f64>; 3]) -> FitResult {
        let free: Vec<usize> = (0..3).filter(|&k| fixed[k].is_none()).collect();
        let m = free.len();
        let mut ata = DMatrix::<f64>::zeros(m, m);
        let mut atb = DVector::<f64>::zeros(m);
        for r in &self.rows {
            let shift: f64 = (0..3).filter_map(|k| fixed[k].map(|c| r[k] * c)).sum();
            let b = r[3] - shift;
            for (a, &ka) in free.iter().enumerate() {
                atb[a] += r[ka] * b;
                for (bb, &kb) in free.iter().enumerate() {
                    ata[(a, bb)] += r[ka] * r[kb];
                }
            }
        }
        let mut solution = [0.0; 3];
        for k in 0..3 {
            if let Some(c) = fixed[k] {
                solution[k] = c;
            }
        }
        let mut null_space = Vec::new();
        let mut eigenvalues = Vec::new();
        let mut rank = 0;
        if m > 0 {
            let eig = ata.symmetric_eigen();
            let top = eig.eigenvalues.iter().fold(0.0_f64, |a, &b| a.max(b.abs()));
            let mut order: Vec<usize> = (0..m).collect();
            order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
            for idx in order {
                let value = eig.eigenvalues[idx];
                let v = eig.eigenvectors.column(idx);
                eigenvalues.push(value);
                if top > 0.0 && value > RANK_TOL * top {
                    rank += 1;
                    let coef = v.dot(&atb) / value;
                    for (a, &k) in free.iter().enumerate() {
                        solution[k] += coef * v[a];
                    }
                } else {
                    let mut basis = [0.0; 3];
                    for (a, &k) in free.iter().enumerate() {
                        basis[k] = v[a];
                    }
                    null_space.push(canonical_sign(basis));
                }
            }
        }
        FitResult {
            solution: Constants::from_array(solution),
            free: free
                .iter()
                .map(|&k| Constants::NAMES[k].to_string())
                .collect(),
            rank,
            null_space,
            eigenvalues,
            residual_sup: self.residual_sup(solution),
            residual_l2: self.residual_l2(solution),
            target_sup: self.rows.iter().fold(0.0, |m, r| m.max(r[3].abs())),
            rows: self.rows.len(),
            points: self.points,
            skipped_points: self.skipped,
        }
    }
}

/// Flips `v` so its largest-magnitude entry is positive.
fn canonical_sign(v: [f64; 3]) -> [f64; 3] {
    let lead = v
        .iter()
        .fold(0.0_f64, |m, &x| if x.abs() > m.abs() { x } else { m });
    if lead < 0.0 {
        v.map(|x| -x)
    } else {
        v
    }
}

/// Outcome of a fit: the affine solution set `solution + span(null_space)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    /// Minimum-norm particular solution over the free constants.
    pub solution: Constants,
    /// Names of the constants that were fitted.
    pub free: Vec<String>,
    pub rank: usize,
    /// Orthonormal basis in `(c1, c2, lambda)` coordinates.
    pub null_space: Vec<[f64; 3]>,
    /// Eigenvalues of the normal matrix, descending.
    pub eigenvalues: Vec<f64>,
    pub residual_sup: f64,
    pub residual_l2: f64,
    /// Largest `|Hess f₁|` component, the natural scale for `residual_sup`.
    pub target_sup: f64,
    pub rows: usize,
    pub points: usize,
    pub skipped_points: usize,
}

impl FitResult {
    /// Euclidean distance from `c` to the affine solution set.
    pub fn distance_to_solution_set(&self, c: Constants) -> f64 {
        let s = self.solution.as_array();
        let mut d: Vec<f64> = c.as_array().iter().zip(s).map(|(a, b)| a - b).collect();
        for v in &self.null_space {
            let dot: f64 = d.iter().zip(v).map(|(a, b)| a * b).sum();
            for (x, b) in d.iter_mut().zip(v) {
                *x -= dot * b;
            }
        }
        d.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// Fits all three constants.
pub fn fit_constants(
    geom: &Geometry,
    f1: &Expr,
    f2: &Expr,
    params: &ParameterSet,
    points: &[Point64],
) -> Result<FitResult, FitError> {
    Ok(Design::assemble(geom, f1, f2, params, points)?.solve())
}

/// A residual-zero instance built from potential templates.
#[derive(Debug, Clone)]
pub struct Instance {
    pub spec: SolitonSpec,
    /// The constants the instance was generated with; a fit must recover
    /// them up to its null space.
    pub expected: Constants,
}

/// Substitutes `c1`, `c2`, `lambda` into the templates.
pub fn manufacture_instance(
    geom: Arc<Geometry>,
    f1: &Expr,
    f2: &Expr,
    constants: Constants,
) -> Instance {
    let f1 = substitute_constants(f1, constants);
    let f2 = substitute_constants(f2, constants);
    Instance {
        spec: SolitonSpec::gradient(geom, f1, f2, constants),
        expected: constants,
    }
}

/// Replaces the constant symbols of a template by their values and simplifies.
pub fn substitute_constants(template: &Expr, constants: Constants) -> Expr {
    let map: HashMap<String, Expr> = Constants::NAMES
        .iter()
        .zip(constants.as_array())
        .map(|(n, v)| (n.to_string(), Expr::num(v)))
        .collect();
    template.substitute(&map).simplify()
}
