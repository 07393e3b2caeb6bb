//! Residuals of the generalised Ricci soliton equations
//!
//! ```text
//! 𝓛_{X₁} g = −2c₁ X₂♭⊙X₂♭ + 2c₂ Ric + 2λ g        (vector form)
//! Hess f₁  = −c₁ df₂⊙df₂  + c₂ Ric  + λ g          (gradient form)
//! ```
//!
//! together with the necessary condition `ζ = ξ(f₁)ξ` on Sasakian manifolds
//! and the intermediate identities used to derive it.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::check::{CheckReport, Identity, ResidualReport};
use crate::contact::{AlmostContactStructure, Sample};
use crate::expr::{Expr, UnboundSymbol};
use crate::params::ParameterSet;
use crate::tensor::{
    apply_2form, differential, directional, lie_derivative_sym2, sym_product, Geometry,
    TensorField, Valence,
};

/// The soliton constants `(c₁, c₂, λ)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Constants {
    pub c1: f64,
    pub c2: f64,
    pub lambda: f64,
}

impl Constants {
    pub const NAMES: [&'static str; 3] = ["c1", "c2", "lambda"];

    pub fn new(c1: f64, c2: f64, lambda: f64) -> Self {
        Constants { c1, c2, lambda }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.c1, self.c2, self.lambda]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        Constants::new(a[0], a[1], a[2])
    }

    /// `params` with `c1`, `c2` and `lambda` bound to these values.
    pub fn bind(&self, params: &ParameterSet) -> ParameterSet {
        let mut out = params.clone();
        for (name, v) in Self::NAMES.iter().zip(self.as_array()) {
            out.set(name, v);
        }
        out
    }
}

/// How the soliton fields are given.
#[derive(Debug, Clone)]
pub enum SolitonMode {
    /// `X₁ = grad f₁`, `X₂ = grad f₂`
    Gradient {
        f1: Expr,
        f2: Expr,
    },
    Vector {
        x1: TensorField,
        x2: TensorField,
    },
}

/// A metric, soliton data and constants to be checked against the soliton
/// equation.
#[derive(Debug, Clone)]
pub struct SolitonSpec {
    pub geometry: Arc<Geometry>,
    pub mode: SolitonMode,
    pub constants: Constants,
}

impl SolitonSpec {
    pub fn gradient(geometry: Arc<Geometry>, f1: Expr, f2: Expr, constants: Constants) -> Self {
        SolitonSpec {
            geometry,
            mode: SolitonMode::Gradient { f1, f2 },
            constants,
        }
    }

    pub fn vector(
        geometry: Arc<Geometry>,
        x1: TensorField,
        x2: TensorField,
        constants: Constants,
    ) -> Self {
        assert_eq!(x1.valence(), Valence::Vector);
        assert_eq!(x2.valence(), Valence::Vector);
        SolitonSpec {
            geometry,
            mode: SolitonMode::Vector { x1, x2 },
            constants,
        }
    }

    /// The residual tensor of whichever form this soliton carries.
    pub fn residual(&self) -> TensorField {
        match &self.mode {
            SolitonMode::Gradient { f1, f2 } => {
                gradient_residual(&self.geometry, f1, f2, self.constants)
            }
            SolitonMode::Vector { x1, x2 } => {
                vector_residual(&self.geometry, x1, x2, self.constants)
            }
        }
    }

    /// Residual identity, scaled by the left-hand side (`Hess f₁` or `𝓛_{X₁} g`).
    pub fn identity(&self) -> Identity {
        let (name, lhs) = match &self.mode {
            SolitonMode::Gradient { f1, .. } => ("soliton_gradient", self.geometry.hessian(f1)),
            SolitonMode::Vector { x1, .. } => {
                ("soliton_vector", self.geometry.lie_derivative_metric(x1))
            }
        };
        Identity::vanishing(name, &self.residual(), &[&lhs])
    }

    /// Samples the residual. The constants are also bound as parameters so
    /// templates written in terms of `c1`, `c2`, `lambda` resolve.
    pub fn check(&self, sample: &Sample) -> Result<ResidualReport, UnboundSymbol> {
        let sample = Sample {
            params: self.constants.bind(&sample.params),
            ..sample.clone()
        };
        Ok(sample.run(&self.geometry, &[self.identity()])?.remove(0))
    }
}

/// `Hess f₁ + c₁ df₂⊙df₂ − c₂ Ric − λ g`.
pub fn gradient_residual(geom: &Geometry, f1: &Expr, f2: &Expr, k: Constants) -> TensorField {
    let df2 = differential(geom.chart(), f2);
    let sq = sym_product(&df2, &df2);
    geom.hessian(f1)
        .combine(1.0, &sq, k.c1)
        .combine(1.0, geom.ricci(), -k.c2)
        .combine(1.0, &geom.metric_field(), -k.lambda)
}

/// `𝓛_{X₁} g + 2c₁ X₂♭⊙X₂♭ − 2c₂ Ric − 2λ g`.
pub fn vector_residual(
    geom: &Geometry,
    x1: &TensorField,
    x2: &TensorField,
    k: Constants,
) -> TensorField {
    let flat = geom.flat(x2);
    let sq = sym_product(&flat, &flat);
    geom.lie_derivative_metric(x1)
        .combine(1.0, &sq, 2.0 * k.c1)
        .combine(1.0, geom.ricci(), -2.0 * k.c2)
        .combine(1.0, &geom.metric_field(), -2.0 * k.lambda)
}

/// `ζ = grad f₁ + c₁ ξ(ξ(f₂)) grad f₂ − c₁ ξ(f₂) ∇_ξ grad f₂`.
pub fn zeta(s: &AlmostContactStructure, f1: &Expr, f2: &Expr, c1: f64) -> TensorField {
    let geom = s.geometry();
    let xi = s.xi();
    let grad1 = geom.gradient(f1);
    let grad2 = geom.gradient(f2);
    let xi_f2 = directional(xi, f2);
    let xi_xi_f2 = directional(xi, &xi_f2);
    let nabla = geom.covariant_derivative(xi, &grad2);
    TensorField::from_fn(geom.chart().clone(), Valence::Vector, |k| {
        grad1.get(k) + c1 * &xi_xi_f2 * grad2.get(k) - c1 * &xi_f2 * nabla.get(k)
    })
}

/// `ζ` together with the residual of `ζ − ξ(f₁)ξ`, named `theorem_zeta`.
pub fn zeta_condition(
    s: &AlmostContactStructure,
    f1: &Expr,
    f2: &Expr,
    c1: f64,
    sample: &Sample,
) -> Result<(TensorField, ResidualReport), UnboundSymbol> {
    let z = zeta(s, f1, f2, c1);
    let id = zeta_identity(s, &z, f1);
    let report = sample.run(s.geometry(), &[id])?.remove(0);
    Ok((z, report))
}

fn zeta_identity(s: &AlmostContactStructure, zeta: &TensorField, f1: &Expr) -> Identity {
    let xi_f1 = directional(s.xi(), f1);
    let rhs = s.xi().scale(&xi_f1);
    Identity::equal("theorem_zeta", zeta.components(), rhs.components())
}

/// `∇_ξ grad f₁ = (λ + 2c₂n)ξ − c₁ ξ(f₂) grad f₂`, named `lemma3`.
pub fn lemma3_identity(s: &AlmostContactStructure, f1: &Expr, f2: &Expr, k: Constants) -> Identity {
    let geom = s.geometry();
    let n = s.half_dim() as f64;
    let lhs = geom.covariant_derivative(s.xi(), &geom.gradient(f1));
    let xi_f2 = directional(s.xi(), f2);
    let grad2 = geom.gradient(f2);
    let rhs = TensorField::from_fn(geom.chart().clone(), Valence::Vector, |i| {
        (k.lambda + 2.0 * k.c2 * n) * s.xi().get(i) - k.c1 * &xi_f2 * grad2.get(i)
    });
    Identity::equal("lemma3", lhs.components(), rhs.components())
}

pub fn lemma3_check(
    s: &AlmostContactStructure,
    f1: &Expr,
    f2: &Expr,
    k: Constants,
    sample: &Sample,
) -> Result<ResidualReport, UnboundSymbol> {
    Ok(sample
        .run(s.geometry(), &[lemma3_identity(s, f1, f2, k)])?
        .remove(0))
}

/// `Ric(ξ, ·) = 2n η`, named `ricci_xi`.
pub fn ricci_xi_identity(s: &AlmostContactStructure) -> Identity {
    let geom = s.geometry();
    let n = geom.dim();
    let two_n = 2.0 * s.half_dim() as f64;
    let ric = geom.ricci();
    let lhs: Vec<Expr> = (0..n)
        .map(|j| (0..n).map(|i| s.xi().get(&[i]) * ric.get(&[i, j])).sum())
        .collect();
    let rhs: Vec<Expr> = s.eta().components().iter().map(|e| two_n * e).collect();
    Identity::equal("ricci_xi", &lhs, &rhs)
}

/// Coordinate fields with their `ξ` component removed, `∂_i − η(∂_i)ξ`.
fn projected_coordinates(s: &AlmostContactStructure) -> Vec<TensorField> {
    let chart = s.geometry().chart();
    (0..chart.dim())
        .map(|i| {
            let eta_i = s.eta().get(&[i]).clone();
            TensorField::coordinate_vector(chart.clone(), i).combine(
                1.0,
                &s.xi().scale(&eta_i),
                -1.0,
            )
        })
        .collect()
}

/// `(𝓛_ξ(𝓛_{X₁}g))(Y,ξ) = g(X₁,Y) + g(∇_ξ∇_ξ X₁, Y) + Y g(∇_ξ X₁, ξ)` with
/// `X₁ = grad f₁` and `Y` running over projected coordinate fields.
pub fn lemma1_identity(s: &AlmostContactStructure, f1: &Expr) -> Identity {
    let geom = s.geometry();
    let xi = s.xi();
    let x1 = geom.gradient(f1);
    let lx1 = geom.lie_derivative_metric(&x1);
    let llx1 = lie_derivative_sym2(&lx1, xi);
    let nabla_x1 = geom.covariant_derivative(xi, &x1);
    let nabla2_x1 = geom.covariant_derivative(xi, &nabla_x1);
    let h = geom.inner(&nabla_x1, xi);
    let mut lhs = Vec::new();
    let mut rhs = Vec::new();
    for y in projected_coordinates(s) {
        lhs.push(apply_2form(&llx1, &y, xi));
        rhs.push(geom.inner(&x1, &y) + geom.inner(&nabla2_x1, &y) + directional(&y, &h));
    }
    Identity::equal("lemma1", &lhs, &rhs)
}

/// `(𝓛_ξ(df₂⊙df₂))(Y,ξ) = Y(ξ(f₂))ξ(f₂) + Y(f₂)ξ(ξ(f₂))` for every coordinate
/// field `Y`. Needs only a metric, a vector field `ξ` and `f₂`.
pub fn lemma2_identity(geom: &Geometry, xi: &TensorField, f2: &Expr) -> Identity {
    let df2 = differential(geom.chart(), f2);
    let lie = lie_derivative_sym2(&sym_product(&df2, &df2), xi);
    let xi_f2 = directional(xi, f2);
    let xi_xi_f2 = directional(xi, &xi_f2);
    let mut lhs = Vec::new();
    let mut rhs = Vec::new();
    for i in 0..geom.dim() {
        let y = TensorField::coordinate_vector(geom.chart().clone(), i);
        lhs.push(apply_2form(&lie, &y, xi));
        rhs.push(directional(&y, &xi_f2) * &xi_f2 + directional(&y, f2) * &xi_xi_f2);
    }
    Identity::equal("lemma2", &lhs, &rhs)
}

/// `Y(f₁) + c₁ ξ(ξ(f₂)) Y(f₂) − c₁ ξ(f₂) g(∇_ξ grad f₂, Y) = 0` for `Y`
/// orthogonal to `ξ`, named `reduction`.
pub fn reduction_identity(s: &AlmostContactStructure, f1: &Expr, f2: &Expr, c1: f64) -> Identity {
    let geom = s.geometry();
    let xi = s.xi();
    let xi_f2 = directional(xi, f2);
    let xi_xi_f2 = directional(xi, &xi_f2);
    let nabla = geom.covariant_derivative(xi, &geom.gradient(f2));
    let mut residual = Vec::new();
    let mut scale = Vec::new();
    for y in projected_coordinates(s) {
        let a = directional(&y, f1);
        let b = c1 * &xi_xi_f2 * directional(&y, f2);
        let c = c1 * &xi_f2 * geom.inner(&nabla, &y);
        residual.push(&a + &b - &c);
        scale.extend([a, b, c]);
    }
    Identity::new("reduction", residual, scale)
}

/// Lemma 1, Lemma 2 and the reduction identity on one structure.
pub fn proof_identities_check(
    s: &AlmostContactStructure,
    f1: &Expr,
    f2: &Expr,
    c1: f64,
    sample: &Sample,
) -> Result<CheckReport, UnboundSymbol> {
    let ids = [
        lemma1_identity(s, f1),
        lemma2_identity(s.geometry(), s.xi(), f2),
        reduction_identity(s, f1, f2, c1),
    ];
    Ok(CheckReport::new(
        "proof_identities",
        sample.run(s.geometry(), &ids)?,
    ))
}

/// Every identity the theorem check runs, in report order: `theorem_zeta`,
/// `lemma3`, `ricci_xi`, `lemma1`, `lemma2`, `reduction`.
pub fn theorem_identities(
    s: &AlmostContactStructure,
    f1: &Expr,
    f2: &Expr,
    k: Constants,
) -> Vec<Identity> {
    let z = zeta(s, f1, f2, k.c1);
    vec![
        zeta_identity(s, &z, f1),
        lemma3_identity(s, f1, f2, k),
        ricci_xi_identity(s),
        lemma1_identity(s, f1),
        lemma2_identity(s.geometry(), s.xi(), f2),
        reduction_identity(s, f1, f2, k.c1),
    ]
}

/// Special cases of the generalised soliton equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstantLabel {
    Killing,
    Homothety,
    RicciSoliton,
    EinsteinWeyl,
    ProjectiveSkewRicci,
    VacuumNearHorizon,
}

impl ConstantLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            ConstantLabel::Killing => "killing",
            ConstantLabel::Homothety => "homothety",
            ConstantLabel::RicciSoliton => "ricci_soliton",
            ConstantLabel::EinsteinWeyl => "einstein_weyl",
            ConstantLabel::ProjectiveSkewRicci => "projective_skew_ricci",
            ConstantLabel::VacuumNearHorizon => "vacuum_near_horizon",
        }
    }
}

impl fmt::Display for ConstantLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Tolerance for matching constants against the special cases.
pub const LABEL_TOL: f64 = 1e-12;

/// Labels of every special case `(c₁, c₂, λ)` falls under on a manifold of
/// dimension `dim`. The Einstein-Weyl and projective cases need `dim ≥ 3`.
pub fn classify_constants(k: Constants, dim: usize) -> BTreeSet<ConstantLabel> {
    let eq = |a: f64, b: f64| (a - b).abs() <= LABEL_TOL;
    let mut out = BTreeSet::new();
    if eq(k.c1, 0.0) && eq(k.c2, 0.0) {
        out.insert(ConstantLabel::Homothety);
        if eq(k.lambda, 0.0) {
            out.insert(ConstantLabel::Killing);
        }
    }
    if eq(k.c1, 0.0) && eq(k.c2, -1.0) {
        out.insert(ConstantLabel::RicciSoliton);
    }
    if eq(k.c1, 1.0) {
        if dim >= 3 {
            let d = dim as f64;
            if eq(k.c2, -1.0 / (d - 2.0)) {
                out.insert(ConstantLabel::EinsteinWeyl);
            }
            if eq(k.c2, -1.0 / (d - 1.0)) && eq(k.lambda, 0.0) {
                out.insert(ConstantLabel::ProjectiveSkewRicci);
            }
        }
        if eq(k.c2, 0.5) {
            out.insert(ConstantLabel::VacuumNearHorizon);
        }
    }
    out
}

/// `ξ(f)`, exposed for report diagnostics.
pub fn reeb_derivative(s: &AlmostContactStructure, f: &Expr) -> Expr {
    directional(s.xi(), f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chart::{Chart, Sampling};
    use crate::expr::{parse, Tape};
    use crate::manifest::bundled;
    use crate::metric::MetricField;

    fn e(s: &str) -> Expr {
        parse(s).unwrap().simplify()
    }

    fn flat(names: &[&str]) -> Arc<Geometry> {
        let chart = Arc::new(Chart::new(names, &[]).unwrap());
        let n = names.len();
        let m = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| Expr::num(if i == j { 1.0 } else { 0.0 }))
                    .collect()
            })
            .collect();
        Arc::new(Geometry::new(
            MetricField::new(chart, m, &ParameterSet::new()).unwrap(),
        ))
    }

    fn sample(geom: &Geometry, count: usize) -> Sample {
        let pts = geom
            .chart()
            .sample_points(Sampling::Uniform, count, 3)
            .unwrap();
        Sample::new(ParameterSet::new(), pts, 1e-8)
    }

    fn sasakian() -> (AlmostContactStructure, Expr, Expr, Constants) {
        let loaded = bundled("sasakian3").unwrap().load().unwrap();
        let k = Constants::new(-1.0, 0.0, 1.0);
        let (f1, f2) = loaded.resolved_scalars(k).unwrap();
        (loaded.structure.unwrap(), f1, f2, k)
    }

    fn value(geom: &Geometry, e: &Expr, p: &[f64]) -> f64 {
        let t = Tape::compile(
            std::slice::from_ref(e),
            &geom.chart().name_refs(),
            &ParameterSet::new(),
        )
        .unwrap();
        t.eval(p).unwrap()[0]
    }

    #[test]
    fn bundled_gradient_instances_vanish() {
        for (name, k) in [
            ("hyperbolic", (2.0, 1.0, 3.0)),
            ("cone", (-1.0, 1.0, 1.0)),
            ("sasakian3", (-1.0, 0.0, 1.0)),
        ] {
            let loaded = bundled(name).unwrap().load().unwrap();
            let k = Constants::new(k.0, k.1, k.2);
            let (f1, f2) = loaded.resolved_scalars(k).unwrap();
            let spec = SolitonSpec::gradient(loaded.geometry.clone(), f1, f2, k);
            let r = spec.check(&sample(&loaded.geometry, 200)).unwrap();
            assert!(r.rel_sup <= 1e-12, "{name}: {:e}", r.rel_sup);
        }
        let g = flat(&["x", "y"]);
        let spec = SolitonSpec::gradient(g.clone(), e("0"), e("0"), Constants::default());
        assert_eq!(spec.check(&sample(&g, 10)).unwrap().abs_sup, 0.0);
    }

    #[test]
    fn vector_form_is_twice_gradient_form() {
        for name in ["hyperbolic", "cone", "sasakian3"] {
            let loaded = bundled(name).unwrap().load().unwrap();
            let geom = &loaded.geometry;
            // deliberately off-solution constants so the residual is not zero
            let k = Constants::new(0.7, -0.3, 1.9);
            let (f1, f2) = loaded
                .resolved_scalars(Constants::new(-1.0, 0.5, 2.0))
                .unwrap();
            let grad = gradient_residual(geom, &f1, &f2, k);
            let vec = vector_residual(geom, &geom.gradient(&f1), &geom.gradient(&f2), k);
            let diff = vec.combine(1.0, &grad, -2.0);
            let id = Identity::vanishing("consistency", &diff, &[&grad]);
            let r = sample(geom, 100).run(geom, &[id]).unwrap().remove(0);
            assert!(r.rel_sup <= 1e-10, "{name}: {:e}", r.rel_sup);
        }
    }

    #[test]
    fn killing_and_homothety_vector_instances() {
        let (s, ..) = sasakian();
        let zero = TensorField::zero(s.geometry().chart().clone(), Valence::Vector);
        let spec = SolitonSpec::vector(
            s.geometry().clone(),
            s.xi().clone(),
            zero,
            Constants::default(),
        );
        assert!(spec.check(&sample(s.geometry(), 50)).unwrap().rel_sup <= 1e-12);

        let g = flat(&["x", "y"]);
        let dil = TensorField::vector(g.chart().clone(), vec![e("x"), e("y")]);
        let zero = TensorField::zero(g.chart().clone(), Valence::Vector);
        let spec = SolitonSpec::vector(g.clone(), dil, zero, Constants::new(0.0, 0.0, 1.0));
        assert_eq!(spec.check(&sample(&g, 20)).unwrap().abs_sup, 0.0);
    }

    #[test]
    fn zeta_is_minus_cot_xi() {
        let (s, f1, f2, k) = sasakian();
        let smp = sample(s.geometry(), 100);
        let (z, report) = zeta_condition(&s, &f1, &f2, k.c1, &smp).unwrap();
        assert!(report.pass, "{report:?}");
        let geom = s.geometry();
        for p in [[0.3_f64, -1.0, 0.7], [1.5, 1.8, 2.9]] {
            let cot = 1.0 / p[2].tan();
            assert!((value(geom, z.get(&[2]), &p) + cot).abs() <= 1e-12 * cot.abs().max(1.0));
            assert!(value(geom, z.get(&[0]), &p).abs() < 1e-12);
        }
        let mid = [0.0, 0.0, std::f64::consts::FRAC_PI_2];
        assert!(value(geom, z.get(&[2]), &mid).abs() < 1e-15);

        let (z, report) = zeta_condition(&s, &e("3"), &e("-1"), 5.0, &smp).unwrap();
        assert!(z.components().iter().all(Expr::is_zero));
        assert_eq!(report.abs_sup, 0.0);
    }

    #[test]
    fn lemma3_detects_broken_soliton() {
        let (s, f1, f2, k) = sasakian();
        let smp = sample(s.geometry(), 100);
        assert!(lemma3_check(&s, &f1, &f2, k, &smp).unwrap().rel_sup <= 1e-9);
        let broken = &f1 + &e("x");
        let r = lemma3_check(&s, &broken, &f2, k, &smp).unwrap();
        assert!(r.abs_sup > 1e-3, "{r:?}");
        // n = 1, λ = −2c₂n
        let r = lemma3_check(&s, &e("0"), &e("0"), Constants::new(0.4, 1.5, -3.0), &smp).unwrap();
        assert_eq!(r.abs_sup, 0.0);
    }

    #[test]
    fn proof_identities_on_sasakian_example() {
        let (s, f1, f2, k) = sasakian();
        let smp = sample(s.geometry(), 100);
        let report = proof_identities_check(&s, &f1, &f2, k.c1, &smp).unwrap();
        for c in &report.checks {
            assert!(c.rel_sup <= 1e-8, "{}: {:e}", c.name, c.rel_sup);
        }
        let ric = smp
            .run(s.geometry(), &[ricci_xi_identity(&s)])
            .unwrap()
            .remove(0);
        assert!(ric.rel_sup <= 1e-9);
    }

    #[test]
    fn lemma2_on_flat_space() {
        let g = flat(&["x", "y", "z"]);
        let xi = TensorField::coordinate_vector(g.chart().clone(), 2);
        let id = lemma2_identity(&g, &xi, &e("x*z"));
        for p in [[0.5, 1.0, -0.3], [-1.2, 0.0, 1.9]] {
            // both sides equal x for Y = ∂x
            let lhs = value(&g, &(&id.residual[0] + &id.scale[3]), &p);
            assert!((lhs - p[0]).abs() < 1e-15);
            assert!((value(&g, &id.scale[3], &p) - p[0]).abs() < 1e-15);
        }
        let r = sample(&g, 20).run(&g, &[id]).unwrap().remove(0);
        assert_eq!(r.abs_sup, 0.0);
        let r = sample(&g, 5)
            .run(&g, &[lemma2_identity(&g, &xi, &e("7"))])
            .unwrap()
            .remove(0);
        assert_eq!((r.abs_sup, r.pass), (0.0, true));
    }

    #[test]
    fn theorem_property_on_bundled_sasakian() {
        let (s, f1, f2, k) = sasakian();
        let smp = sample(s.geometry(), 100);
        let structure = s.classify(&smp, Default::default()).unwrap();
        let soliton = SolitonSpec::gradient(s.geometry().clone(), f1.clone(), f2.clone(), k)
            .check(&smp)
            .unwrap();
        assert!(structure.flags.sasakian && soliton.pass);
        let (_, zeta) = zeta_condition(&s, &f1, &f2, k.c1, &smp.clone()).unwrap();
        assert!(zeta.rel_sup <= 1e-6);
    }

    #[test]
    fn scale_coherence() {
        // zero potentials with c₂ = λ = 0 leave only the Ricci term, which is zero iff flat
        let k = Constants::new(3.7, 0.0, 0.0);
        let g = flat(&["x", "y"]);
        assert!(
            SolitonSpec::gradient(g.clone(), e("0"), e("0"), k)
                .check(&sample(&g, 10))
                .unwrap()
                .pass
        );
        let h = bundled("hyperbolic").unwrap().load().unwrap().geometry;
        let k = Constants::new(3.7, 1.0, 0.0);
        assert!(
            !SolitonSpec::gradient(h.clone(), e("0"), e("0"), k)
                .check(&sample(&h, 10))
                .unwrap()
                .pass
        );
    }

    #[test]
    fn constant_labels() {
        use ConstantLabel::*;
        let set = |c1, c2, l, n| {
            classify_constants(Constants::new(c1, c2, l), n)
                .into_iter()
                .collect::<Vec<_>>()
        };
        assert_eq!(set(0.0, 0.0, 0.0, 3), vec![Killing, Homothety]);
        assert_eq!(set(0.0, 0.0, 2.0, 3), vec![Homothety]);
        assert_eq!(set(0.0, -1.0, 5.0, 3), vec![RicciSoliton]);
        assert_eq!(set(1.0, 0.5, 5.0, 3), vec![VacuumNearHorizon]);
        assert_eq!(set(1.0, -1.0, 5.0, 3), vec![EinsteinWeyl]);
        assert_eq!(set(1.0, -1.0 / 3.0, 0.0, 4), vec![ProjectiveSkewRicci]);
        assert_eq!(set(1.0, -1.0 / 3.0, 1.0, 5), vec![EinsteinWeyl]);
        assert!(set(1.0, -1.0, 5.0, 2).is_empty());
        assert!(set(2.0, 1.0, 3.0, 2).is_empty());
    }
}
