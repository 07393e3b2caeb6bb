//! Almost contact metric structures and the ladder
//! almost contact metric → contact metric → K-contact → normal → Sasakian.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::check::{sample_identities, CheckReport, Identity, ResidualReport};
use crate::expr::{Expr, UnboundSymbol};
use crate::params::ParameterSet;
use crate::tensor::{
    apply_endo, apply_one_form, compose_endo, lie_bracket, partial, Geometry, TensorField, Valence,
};
use crate::Point64;

/// Tolerance used by [`AlmostContactStructure::assemble`].
pub const AXIOM_TOL: f64 = 1e-8;
/// Default tolerance for ladder flags.
pub const FLAG_TOL: f64 = 1e-8;

/// Normalisation of the exterior derivative of a one-form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DConvention {
    /// `dη(X,Y) = ½(X η(Y) − Y η(X) − η([X,Y]))`
    #[default]
    Half,
    /// `dη(X,Y) = X η(Y) − Y η(X) − η([X,Y])`
    Plain,
}

impl DConvention {
    pub fn as_str(self) -> &'static str {
        match self {
            DConvention::Half => "half",
            DConvention::Plain => "plain",
        }
    }
}

impl std::str::FromStr for DConvention {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "half" => Ok(DConvention::Half),
            "plain" => Ok(DConvention::Plain),
            other => Err(format!(
                "unknown d-convention `{other}` (expected half or plain)"
            )),
        }
    }
}

/// Points, parameters and tolerance shared by a batch of checks.
#[derive(Debug, Clone)]
pub struct Sample {
    pub params: ParameterSet,
    pub points: Vec<Point64>,
    pub tolerance: f64,
}

impl Sample {
    pub fn new(params: ParameterSet, points: Vec<Point64>, tolerance: f64) -> Self {
        Sample {
            params,
            points,
            tolerance,
        }
    }

    pub fn run(
        &self,
        geom: &Geometry,
        identities: &[Identity],
    ) -> Result<Vec<ResidualReport>, UnboundSymbol> {
        sample_identities(
            geom.chart(),
            identities,
            &self.params,
            &self.points,
            self.tolerance,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ContactError {
    #[error("almost contact structures need an odd-dimensional chart, got dimension {0}")]
    EvenDimension(usize),
    #[error("`{field}` has the wrong shape: expected {expected} components, got {got}")]
    Shape {
        field: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("axiom `{axiom}` violated: residual {residual:e} exceeds {tolerance:e} (worst near {point:?})")]
    AxiomViolation {
        axiom: String,
        residual: f64,
        tolerance: f64,
        point: Option<Vec<f64>>,
    },
    #[error(transparent)]
    Unbound(#[from] UnboundSymbol),
}

/// The bundle `(φ, ξ, η, g)` on one chart of dimension `2n + 1`.
#[derive(Debug, Clone)]
pub struct AlmostContactStructure {
    geom: Arc<Geometry>,
    phi: TensorField,
    xi: TensorField,
    eta: TensorField,
}

impl AlmostContactStructure {
    /// Bundles the fields after shape checks only. `phi` is `φ^i_j` with the
    /// column index `j` the input basis vector.
    pub fn new_unchecked(
        geom: Arc<Geometry>,
        phi: Vec<Vec<Expr>>,
        xi: Vec<Expr>,
        eta: Vec<Expr>,
    ) -> Result<Self, ContactError> {
        let dim = geom.dim();
        if dim.is_multiple_of(2) {
            return Err(ContactError::EvenDimension(dim));
        }
        let phi_len: usize = phi.iter().map(Vec::len).sum();
        if phi.len() != dim || phi.iter().any(|r| r.len() != dim) {
            return Err(ContactError::Shape {
                field: "phi",
                expected: dim * dim,
                got: phi_len,
            });
        }
        for (field, v) in [("xi", &xi), ("eta", &eta)] {
            if v.len() != dim {
                return Err(ContactError::Shape {
                    field,
                    expected: dim,
                    got: v.len(),
                });
            }
        }
        let chart = geom.chart().clone();
        Ok(AlmostContactStructure {
            phi: TensorField::new(
                chart.clone(),
                Valence::Endo,
                phi.into_iter().flatten().collect(),
            ),
            xi: TensorField::vector(chart.clone(), xi),
            eta: TensorField::one_form(chart, eta),
            geom,
        })
    }

    /// Bundles the fields and validates the algebraic axioms at the sample
    /// points with tolerance [`AXIOM_TOL`].
    pub fn assemble(
        geom: Arc<Geometry>,
        phi: Vec<Vec<Expr>>,
        xi: Vec<Expr>,
        eta: Vec<Expr>,
        sample: &Sample,
    ) -> Result<(Self, Vec<ResidualReport>), ContactError> {
        let s = Self::new_unchecked(geom, phi, xi, eta)?;
        let sample = Sample {
            tolerance: AXIOM_TOL,
            ..sample.clone()
        };
        let reports = s.axiom_residuals(&sample)?;
        if let Some(bad) = reports.iter().find(|r| !r.pass) {
            return Err(ContactError::AxiomViolation {
                axiom: bad.name.clone(),
                residual: bad.rel_sup,
                tolerance: AXIOM_TOL,
                point: bad.failures.first().map(|f| f.point.clone()),
            });
        }
        Ok((s, reports))
    }

    pub fn geometry(&self) -> &Arc<Geometry> {
        &self.geom
    }

    pub fn phi(&self) -> &TensorField {
        &self.phi
    }

    pub fn xi(&self) -> &TensorField {
        &self.xi
    }

    pub fn eta(&self) -> &TensorField {
        &self.eta
    }

    /// `n` in `dim = 2n + 1`.
    pub fn half_dim(&self) -> usize {
        (self.geom.dim() - 1) / 2
    }

    fn coord(&self, i: usize) -> TensorField {
        TensorField::coordinate_vector(self.geom.chart().clone(), i)
    }

    /// Symbolic residuals of the almost contact metric axioms.
    pub fn axiom_identities(&self) -> Vec<Identity> {
        let n = self.geom.dim();
        let chart = self.geom.chart().clone();
        let g = self.geom.metric();
        let eta_xi = apply_one_form(&self.eta, &self.xi);
        let phi2 = compose_endo(&self.phi, &self.phi);
        let id = TensorField::from_fn(chart.clone(), Valence::Endo, |ij| {
            Expr::num(if ij[0] == ij[1] { 1.0 } else { 0.0 })
        });
        let eta_x_xi = TensorField::from_fn(chart.clone(), Valence::Endo, |ij| {
            self.xi.get(&[ij[0]]) * self.eta.get(&[ij[1]])
        });
        let phi_sq_res = TensorField::from_fn(chart.clone(), Valence::Endo, |ij| {
            phi2.get(ij) + id.get(ij) - eta_x_xi.get(ij)
        });
        // g(φ∂_i, φ∂_j) = φ^k_i g_kl φ^l_j
        let gphiphi = TensorField::from_fn(chart.clone(), Valence::Sym2, |ij| {
            let mut terms = Vec::new();
            for k in 0..n {
                for l in 0..n {
                    terms.push(self.phi.get(&[k, ij[0]]) * g.g(k, l) * self.phi.get(&[l, ij[1]]));
                }
            }
            terms.into_iter().sum()
        });
        let eta_eta = TensorField::from_fn(chart.clone(), Valence::Sym2, |ij| {
            self.eta.get(&[ij[0]]) * self.eta.get(&[ij[1]])
        });
        let gfield = self.geom.metric_field();
        let compat = TensorField::from_fn(chart.clone(), Valence::Sym2, |ij| {
            gphiphi.get(ij) - gfield.get(ij) + eta_eta.get(ij)
        });
        let phi_xi = apply_endo(&self.phi, &self.xi);
        let eta_phi = TensorField::from_fn(chart.clone(), Valence::OneForm, |j| {
            (0..n)
                .map(|i| self.eta.get(&[i]) * self.phi.get(&[i, j[0]]))
                .sum()
        });
        vec![
            Identity::equal("eta_xi", &[eta_xi], &[Expr::one()]),
            Identity::vanishing("phi_squared", &phi_sq_res, &[&phi2, &id, &eta_x_xi]),
            Identity::vanishing(
                "metric_compatibility",
                &compat,
                &[&gphiphi, &gfield, &eta_eta],
            ),
            Identity::vanishing("phi_xi", &phi_xi, &[&self.phi]),
            Identity::vanishing("eta_phi", &eta_phi, &[&self.phi]),
        ]
    }

    pub fn axiom_residuals(&self, sample: &Sample) -> Result<Vec<ResidualReport>, UnboundSymbol> {
        sample.run(&self.geom, &self.axiom_identities())
    }

    /// `Φ(X,Y) = g(X, φY)`, i.e. `Φ_ij = g_ik φ^k_j`.
    pub fn fundamental_form(&self) -> TensorField {
        let n = self.geom.dim();
        let g = self.geom.metric();
        TensorField::from_fn(self.geom.chart().clone(), Valence::Bilinear, |ij| {
            (0..n)
                .map(|k| g.g(ij[0], k) * self.phi.get(&[k, ij[1]]))
                .sum()
        })
    }

    /// `[φ,φ](∂_i, ∂_j) = [φ∂_i, φ∂_j] − φ[φ∂_i, ∂_j] − φ[∂_i, φ∂_j]`,
    /// stored as `N^k_ij`. The `φ²[∂_i,∂_j]` term vanishes for coordinate fields.
    pub fn nijenhuis(&self) -> TensorField {
        let n = self.geom.dim();
        let coords: Vec<TensorField> = (0..n).map(|i| self.coord(i)).collect();
        let phis: Vec<TensorField> = coords.iter().map(|c| apply_endo(&self.phi, c)).collect();
        let mut comps = vec![Expr::zero(); n * n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let a = lie_bracket(&phis[i], &phis[j]);
                let b = apply_endo(&self.phi, &lie_bracket(&phis[i], &coords[j]));
                let c = apply_endo(&self.phi, &lie_bracket(&coords[i], &phis[j]));
                for k in 0..n {
                    let v = a.get(&[k]) - b.get(&[k]) - c.get(&[k]);
                    comps[(k * n + j) * n + i] = -&v;
                    comps[(k * n + i) * n + j] = v;
                }
            }
        }
        TensorField::new(self.geom.chart().clone(), Valence::Vector2, comps)
    }

    fn ladder_identities(&self, conv: DConvention) -> Vec<Identity> {
        let chart = self.geom.chart().clone();
        let d_eta = exterior_derivative(&self.eta, conv);
        let fundamental = self.fundamental_form();
        let contact = d_eta.combine(1.0, &fundamental, -1.0);
        let killing = self.geom.lie_derivative_metric(&self.xi);
        let nij = self.nijenhuis();
        let twice_d_eta_xi = TensorField::from_fn(chart.clone(), Valence::Vector2, |kij| {
            2.0 * d_eta.get(&[kij[1], kij[2]]) * self.xi.get(&[kij[0]])
        });
        let normal = nij.combine(1.0, &twice_d_eta_xi, 1.0);
        vec![
            Identity::vanishing(
                "contact_d_eta_equals_phi",
                &contact,
                &[&d_eta, &fundamental],
            ),
            Identity::vanishing("xi_killing", &killing, &[&self.geom.metric_field()]),
            Identity::vanishing("normality", &normal, &[&nij, &twice_d_eta_xi]),
        ]
    }

    /// Evaluates every rung of the ladder at the sample points.
    pub fn classify(
        &self,
        sample: &Sample,
        conv: DConvention,
    ) -> Result<StructureReport, UnboundSymbol> {
        let mut axioms = self.axiom_residuals(sample)?;
        let ladder = sample.run(&self.geom, &self.ladder_identities(conv))?;
        let sasakian_ids = self.check_sasakian_identities(sample)?;
        let pass = |name: &str| {
            ladder
                .iter()
                .find(|r| r.name == name)
                .is_some_and(|r| r.pass)
        };
        let acm = axioms.iter().all(|r| r.pass);
        let contact = acm && pass("contact_d_eta_equals_phi");
        let k_contact = contact && pass("xi_killing");
        let normal = acm && pass("normality");
        let raw_sasakian = contact && normal;
        let sasakian = raw_sasakian && k_contact;
        let mut diagnostics = Vec::new();
        if raw_sasakian && !k_contact {
            diagnostics.push(
                "contact and normal but ξ not Killing at tolerance; Sasakian flag withheld"
                    .to_string(),
            );
        }
        let formsas1 = sasakian_ids.get("formsas1").is_some_and(|r| r.pass);
        if acm && formsas1 != sasakian {
            diagnostics.push(format!(
                "(∇_X φ)Y = g(X,Y)ξ − η(Y)X gives {formsas1} but the ladder gives {sasakian}"
            ));
        }
        axioms.extend(ladder);
        Ok(StructureReport {
            flags: StructureFlags {
                almost_contact_metric: acm,
                contact_metric: contact,
                k_contact,
                normal,
                sasakian,
            },
            residuals: axioms,
            identities: sasakian_ids,
            conventions: Conventions::new(conv),
            diagnostics,
        })
    }

    /// Residuals of `(∇_X φ)Y = g(X,Y)ξ − η(Y)X`, `∇_X ξ = −φX`,
    /// `(∇_X η)Y = −g(φX, Y)` and `R(X,Y)ξ = η(Y)X − η(X)Y` over coordinate
    /// fields `X = ∂_a`, `Y = ∂_b`.
    pub fn check_sasakian_identities(&self, sample: &Sample) -> Result<CheckReport, UnboundSymbol> {
        let reports = sample.run(&self.geom, &self.sasakian_identities())?;
        Ok(CheckReport::new("sasakian_identities", reports))
    }

    pub fn sasakian_identities(&self) -> Vec<Identity> {
        let geom = &self.geom;
        let n = geom.dim();
        let chart = geom.chart().clone();
        let g = geom.metric();
        let gamma = geom.christoffel();
        let coords: Vec<TensorField> = (0..n).map(|i| self.coord(i)).collect();
        let phis: Vec<TensorField> = coords.iter().map(|c| apply_endo(&self.phi, c)).collect();

        // (∇_a φ)∂_b = ∇_a(φ∂_b) − φ(∇_a ∂_b), stored [k, a, b]
        let mut nabla_phi = vec![Expr::zero(); n * n * n];
        let mut sas1_rhs = vec![Expr::zero(); n * n * n];
        for a in 0..n {
            for b in 0..n {
                let first = geom.covariant_derivative(&coords[a], &phis[b]);
                let second = apply_endo(
                    &self.phi,
                    &geom.covariant_derivative(&coords[a], &coords[b]),
                );
                for k in 0..n {
                    let slot = (k * n + a) * n + b;
                    nabla_phi[slot] = first.get(&[k]) - second.get(&[k]);
                    let mut rhs = g.g(a, b) * self.xi.get(&[k]);
                    if k == a {
                        rhs = rhs - self.eta.get(&[b]);
                    }
                    sas1_rhs[slot] = rhs;
                }
            }
        }

        // ∇_a ξ and −φ∂_a, stored [k, a]
        let nabla_xi: Vec<Expr> = (0..n * n)
            .map(|f| {
                let (k, a) = (f / n, f % n);
                geom.covariant_derivative(&coords[a], &self.xi)
                    .get(&[k])
                    .clone()
            })
            .collect();
        let minus_phi: Vec<Expr> = (0..n * n).map(|f| -self.phi.get(&[f / n, f % n])).collect();

        // (∇_a η)_b = ∂_a η_b − Γ^m_ab η_m and −g(φ∂_a, ∂_b) = −g_bk φ^k_a
        let nabla_eta: Vec<Expr> = (0..n * n)
            .map(|f| {
                let (a, b) = (f / n, f % n);
                let conn: Expr = (0..n)
                    .map(|m| gamma.get(m, a, b) * self.eta.get(&[m]))
                    .sum();
                partial(&chart, self.eta.get(&[b]), a) - conn
            })
            .collect();
        let minus_g_phi: Vec<Expr> = (0..n * n)
            .map(|f| {
                let (a, b) = (f / n, f % n);
                -(0..n)
                    .map(|k| g.g(b, k) * self.phi.get(&[k, a]))
                    .sum::<Expr>()
            })
            .collect();

        // R(∂_a, ∂_b)ξ and η_b ∂_a − η_a ∂_b, stored [k, a, b]
        let mut r_xi = vec![Expr::zero(); n * n * n];
        let mut r_rhs = vec![Expr::zero(); n * n * n];
        for a in 0..n {
            for b in 0..n {
                let v = geom.curvature_apply(&coords[a], &coords[b], &self.xi);
                for k in 0..n {
                    let slot = (k * n + a) * n + b;
                    r_xi[slot] = v.get(&[k]).clone();
                    let mut rhs = Expr::zero();
                    if k == a {
                        rhs = rhs + self.eta.get(&[b]);
                    }
                    if k == b {
                        rhs = rhs - self.eta.get(&[a]);
                    }
                    r_rhs[slot] = rhs;
                }
            }
        }

        vec![
            Identity::equal("formsas1", &nabla_phi, &sas1_rhs),
            Identity::equal("nabla_xi", &nabla_xi, &minus_phi),
            Identity::equal("nabla_eta", &nabla_eta, &minus_g_phi),
            Identity::equal("curvature_xi", &r_xi, &r_rhs),
        ]
    }
}

/// `dη` as a (0,2) field: `∂_i η_j − ∂_j η_i`, halved under [`DConvention::Half`].
pub fn exterior_derivative(eta: &TensorField, conv: DConvention) -> TensorField {
    assert_eq!(eta.valence(), Valence::OneForm);
    let chart = eta.chart().clone();
    let factor = match conv {
        DConvention::Half => 0.5,
        DConvention::Plain => 1.0,
    };
    TensorField::from_fn(chart.clone(), Valence::Bilinear, |ij| {
        let (i, j) = (ij[0], ij[1]);
        if i == j {
            return Expr::zero();
        }
        factor * (partial(&chart, eta.get(&[j]), i) - partial(&chart, eta.get(&[i]), j))
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureFlags {
    pub almost_contact_metric: bool,
    pub contact_metric: bool,
    pub k_contact: bool,
    pub normal: bool,
    pub sasakian: bool,
}

/// Conventions in force for a run, echoed in every report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Conventions {
    pub d_convention: DConvention,
    pub sym_product: String,
    pub phi_matrix: String,
}

impl Conventions {
    pub fn new(d: DConvention) -> Self {
        Conventions {
            d_convention: d,
            sym_product: "half".to_string(),
            phi_matrix: "phi^i_j, column = input".to_string(),
        }
    }
}

impl Default for Conventions {
    fn default() -> Self {
        Conventions::new(DConvention::Half)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StructureReport {
    pub flags: StructureFlags,
    pub residuals: Vec<ResidualReport>,
    pub identities: CheckReport,
    pub conventions: Conventions,
    pub diagnostics: Vec<String>,
}

impl StructureReport {
    pub fn residual(&self, name: &str) -> Option<&ResidualReport> {
        self.residuals.iter().find(|r| r.name == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::{Chart, Interval, Sampling};
    use crate::expr::{parse, Tape};
    use crate::metric::MetricField;
    use std::f64::consts::PI;

    const P: &str = "4*exp(y)/(16+exp(2*y))";
    const Q: &str = "-exp(2*y)/(16+exp(2*y))";

    fn ex(s: &str) -> Expr {
        parse(
            &s.replace('p', &format!("({P})"))
                .replace('q', &format!("({Q})")),
        )
        .unwrap()
        .simplify()
    }

    fn grid(rows: &[&[&str]]) -> Vec<Vec<Expr>> {
        rows.iter()
            .map(|r| r.iter().map(|s| ex(s)).collect())
            .collect()
    }

    fn sasakian_geometry() -> Arc<Geometry> {
        let chart =
            Arc::new(Chart::new(&["x", "y", "z"], &[("z", Interval::new(0.0, PI))]).unwrap());
        let g = grid(&[
            &["p^2+q^2", "0", "-q"],
            &["0", "p^2", "0"],
            &["-q", "0", "1"],
        ]);
        Arc::new(Geometry::new(
            MetricField::new(chart, g, &ParameterSet::new()).unwrap(),
        ))
    }

    fn sasakian(phi: &[&[&str]], eta: &[&str]) -> AlmostContactStructure {
        AlmostContactStructure::new_unchecked(
            sasakian_geometry(),
            grid(phi),
            vec![ex("0"), ex("0"), ex("1")],
            eta.iter().map(|s| ex(s)).collect(),
        )
        .unwrap()
    }

    const PHI: &[&[&str]] = &[&["0", "-1", "0"], &["1", "0", "0"], &["0", "-q", "0"]];
    const ETA: &[&str] = &["-q", "0", "1"];

    fn sample(geom: &Geometry, count: usize) -> Sample {
        let pts = geom
            .chart()
            .sample_points(Sampling::Uniform, count, 7)
            .unwrap();
        Sample::new(ParameterSet::new(), pts, FLAG_TOL)
    }

    fn at(geom: &Geometry, e: &Expr, p: &[f64]) -> f64 {
        let tape = Tape::compile(
            std::slice::from_ref(e),
            &geom.chart().name_refs(),
            &ParameterSet::new(),
        )
        .unwrap();
        tape.eval(p).unwrap()[0]
    }

    #[test]
    fn sasakian_example_climbs_the_whole_ladder() {
        let s = sasakian(PHI, ETA);
        let smp = sample(s.geometry(), 64);
        let report = s.classify(&smp, DConvention::Half).unwrap();
        let f = report.flags;
        assert!(
            f.almost_contact_metric && f.contact_metric && f.k_contact && f.normal && f.sasakian,
            "{report:#?}"
        );
        for r in &report.residuals {
            assert!(r.rel_sup <= 1e-12, "{}: {:e}", r.name, r.rel_sup);
        }
        assert!(report.identities.pass);
        for r in &report.identities.checks {
            assert!(r.rel_sup <= 1e-10, "{}: {:e}", r.name, r.rel_sup);
        }
        assert!(report.diagnostics.is_empty());
        assert!(AlmostContactStructure::assemble(
            s.geometry().clone(),
            grid(PHI),
            vec![ex("0"), ex("0"), ex("1")],
            ETA.iter().map(|e| ex(e)).collect(),
            &smp
        )
        .is_ok());
    }

    #[test]
    fn transposed_phi_is_rejected() {
        let geom = sasakian_geometry();
        let smp = sample(&geom, 32);
        let transposed: &[&[&str]] = &[&["0", "1", "0"], &["-1", "0", "-q"], &["0", "0", "0"]];
        let err = AlmostContactStructure::assemble(
            geom,
            grid(transposed),
            vec![ex("0"), ex("0"), ex("1")],
            ETA.iter().map(|e| ex(e)).collect(),
            &smp,
        )
        .unwrap_err();
        match err {
            ContactError::AxiomViolation { axiom, point, .. } => {
                assert_eq!(axiom, "phi_squared");
                assert!(point.is_none());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn even_dimension_is_rejected() {
        let chart = Arc::new(Chart::new(&["x", "y"], &[]).unwrap());
        let g = Geometry::new(
            MetricField::new(
                chart,
                grid(&[&["1", "0"], &["0", "1"]]),
                &ParameterSet::new(),
            )
            .unwrap(),
        );
        let err = AlmostContactStructure::new_unchecked(
            Arc::new(g),
            grid(&[&["0", "0"], &["0", "0"]]),
            vec![ex("0"), ex("1")],
            vec![ex("0"), ex("1")],
        )
        .unwrap_err();
        assert_eq!(err, ContactError::EvenDimension(2));
    }

    #[test]
    fn flat_space_with_zero_phi_fails_axioms() {
        let chart = Arc::new(Chart::new(&["x", "y", "z"], &[]).unwrap());
        let id = grid(&[&["1", "0", "0"], &["0", "1", "0"], &["0", "0", "1"]]);
        let g = Arc::new(Geometry::new(
            MetricField::new(chart, id, &ParameterSet::new()).unwrap(),
        ));
        let smp = sample(&g, 16);
        let s = AlmostContactStructure::new_unchecked(
            g,
            grid(&[&["0", "0", "0"], &["0", "0", "0"], &["0", "0", "0"]]),
            vec![ex("0"), ex("0"), ex("1")],
            vec![ex("0"), ex("0"), ex("1")],
        )
        .unwrap();
        let report = s.classify(&smp, DConvention::Half).unwrap();
        assert!(!report.flags.almost_contact_metric);
        assert!(!report.residual("phi_squared").unwrap().pass);
        assert!(!report.flags.sasakian);
    }

    #[test]
    fn doubled_eta_breaks_normalisation() {
        let s = sasakian(PHI, &["-2*q", "0", "2"]);
        let report = s
            .classify(&sample(s.geometry(), 16), DConvention::Half)
            .unwrap();
        assert!(!report.residual("eta_xi").unwrap().pass);
        assert!(!report.flags.almost_contact_metric && !report.flags.sasakian);
    }

    #[test]
    fn fundamental_form_and_d_eta_at_origin() {
        let s = sasakian(PHI, ETA);
        let geom = s.geometry();
        let origin = [0.0, 0.0, 1.0];
        let fund = s.fundamental_form();
        assert!((at(geom, fund.get(&[0, 1]), &origin) + 16.0 / 289.0).abs() < 1e-15);
        assert_eq!(at(geom, fund.get(&[0, 0]), &origin), 0.0);
        for j in 0..3 {
            assert!(at(geom, fund.get(&[2, j]), &[0.4, -1.1, 2.0]).abs() < 1e-15);
        }
        let half = exterior_derivative(s.eta(), DConvention::Half);
        let plain = exterior_derivative(s.eta(), DConvention::Plain);
        assert!((at(geom, half.get(&[0, 1]), &origin) + 16.0 / 289.0).abs() < 1e-15);
        let p = [0.3, 1.2, 0.5];
        for (a, b) in half.components().iter().zip(plain.components()) {
            assert!((2.0 * at(geom, a, &p) - at(geom, b, &p)).abs() < 1e-15);
        }
        let dz = TensorField::one_form(geom.chart().clone(), vec![ex("0"), ex("0"), ex("1")]);
        assert!(exterior_derivative(&dz, DConvention::Half)
            .components()
            .iter()
            .all(Expr::is_zero));
    }

    #[test]
    fn nijenhuis_at_origin() {
        let s = sasakian(PHI, ETA);
        let nij = s.nijenhuis();
        let geom = s.geometry();
        let origin = [0.0, 0.0, 1.0];
        assert!((at(geom, nij.get(&[2, 0, 1]), &origin) - 32.0 / 289.0).abs() < 1e-15);
        assert_eq!(at(geom, nij.get(&[0, 0, 1]), &origin), 0.0);
        let p = [0.2, -0.7, 2.5];
        for k in 0..3 {
            for i in 0..3 {
                for j in 0..3 {
                    let a = at(geom, nij.get(&[k, i, j]), &p);
                    let b = at(geom, nij.get(&[k, j, i]), &p);
                    assert!((a + b).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn constant_complex_structure_is_integrable() {
        let chart = Arc::new(Chart::new(&["x", "y", "z"], &[]).unwrap());
        let id = grid(&[&["1", "0", "0"], &["0", "1", "0"], &["0", "0", "1"]]);
        let g = Arc::new(Geometry::new(
            MetricField::new(chart, id, &ParameterSet::new()).unwrap(),
        ));
        let s = AlmostContactStructure::new_unchecked(
            g,
            grid(&[&["0", "-1", "0"], &["1", "0", "0"], &["0", "0", "0"]]),
            vec![ex("0"), ex("0"), ex("1")],
            vec![ex("0"), ex("0"), ex("1")],
        )
        .unwrap();
        assert!(s.nijenhuis().components().iter().all(Expr::is_zero));
        let smp = sample(s.geometry(), 16);
        let report = s.classify(&smp, DConvention::Half).unwrap();
        // dη = 0 ≠ Φ, so the ladder stops at normal almost contact metric
        assert!(report.flags.almost_contact_metric && report.flags.normal);
        assert!(!report.flags.contact_metric && !report.flags.sasakian);
    }

    #[test]
    fn curvature_on_xi_matches_right_side() {
        let s = sasakian(PHI, ETA);
        let geom = s.geometry();
        let dx = TensorField::coordinate_vector(geom.chart().clone(), 0);
        let v = geom.curvature_apply(&dx, s.xi(), s.xi());
        let p = [0.1, 0.9, 1.3];
        let q = at(geom, &ex("q"), &p);
        let expect = [1.0, 0.0, q];
        for (k, e) in expect.iter().enumerate() {
            assert!(
                (at(geom, v.get(&[k]), &p) - e).abs() < 1e-12,
                "component {k}"
            );
        }
    }

    #[test]
    fn plain_convention_is_not_contact() {
        let s = sasakian(PHI, ETA);
        let report = s
            .classify(&sample(s.geometry(), 16), DConvention::Plain)
            .unwrap();
        assert!(!report.flags.contact_metric);
        assert_eq!(report.conventions.d_convention, DConvention::Plain);
        assert!(report.flags.almost_contact_metric);
    }
}
