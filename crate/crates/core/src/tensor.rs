//! Symbolic tensor fields and the Levi-Civita calculus of a metric.
//!
//! Index conventions (row-major storage in the order listed):
//!
//! | valence      | index       | meaning                                   |
//! |--------------|-------------|-------------------------------------------|
//! | `Vector`     | `[k]`       | `X = X^k ∂_k`                             |
//! | `OneForm`    | `[i]`       | `α = α_i dx^i`                            |
//! | `Sym2/Bilinear`  | `[i, j]`    | `T(∂_i, ∂_j)`                             |
//! | `Endo`       | `[i, j]`    | `φ^i_j`, so `φ(∂_j) = φ^i_j ∂_i`          |
//! | `Vector2`    | `[k, i, j]` | `N(∂_i, ∂_j) = N^k_ij ∂_k`                |
//! | `Curvature`  | `[l, i, j, k]` | `R(∂_i, ∂_j)∂_k = R^l_ijk ∂_l`         |
//!
//! with `R(X,Y)Z = ∇_X∇_Y Z − ∇_Y∇_X Z − ∇_[X,Y] Z` and Ricci the trace
//! `Ric_jk = R^i_ijk`, i.e. `Ric(Y,Z) = tr(X ↦ R(X,Y)Z)`.

use std::sync::{Arc, OnceLock};

use crate::chart::Chart;
use crate::expr::Expr;
use crate::metric::MetricField;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Valence {
    Scalar,
    Vector,
    OneForm,
    Sym2,
    Bilinear,
    Endo,
    Vector2,
    Curvature,
}

impl Valence {
    pub fn rank(self) -> usize {
        match self {
            Valence::Scalar => 0,
            Valence::Vector | Valence::OneForm => 1,
            Valence::Sym2 | Valence::Bilinear | Valence::Endo => 2,
            Valence::Vector2 => 3,
            Valence::Curvature => 4,
        }
    }
}

/// Components of a tensor field on a chart.
#[derive(Debug, Clone)]
pub struct TensorField {
    chart: Arc<Chart>,
    valence: Valence,
    comps: Vec<Expr>,
}

impl TensorField {
    pub fn new(chart: Arc<Chart>, valence: Valence, comps: Vec<Expr>) -> TensorField {
        assert_eq!(
            comps.len(),
            chart.dim().pow(valence.rank() as u32),
            "component count does not match valence"
        );
        TensorField {
            chart,
            valence,
            comps,
        }
    }

    /// Builds a field from a function of the multi-index.
    pub fn from_fn(
        chart: Arc<Chart>,
        valence: Valence,
        mut f: impl FnMut(&[usize]) -> Expr,
    ) -> TensorField {
        let n = chart.dim();
        let rank = valence.rank();
        let total = n.pow(rank as u32);
        let mut idx = vec![0; rank];
        let comps = (0..total)
            .map(|mut flat| {
                for slot in (0..rank).rev() {
                    idx[slot] = flat % n;
                    flat /= n;
                }
                f(&idx)
            })
            .collect();
        TensorField::new(chart, valence, comps)
    }

    pub fn zero(chart: Arc<Chart>, valence: Valence) -> TensorField {
        TensorField::from_fn(chart, valence, |_| Expr::zero())
    }

    pub fn scalar(chart: Arc<Chart>, f: Expr) -> TensorField {
        TensorField::new(chart, Valence::Scalar, vec![f])
    }

    pub fn vector(chart: Arc<Chart>, comps: Vec<Expr>) -> TensorField {
        TensorField::new(chart, Valence::Vector, comps)
    }

    pub fn one_form(chart: Arc<Chart>, comps: Vec<Expr>) -> TensorField {
        TensorField::new(chart, Valence::OneForm, comps)
    }

    /// Coordinate vector field `∂_i`.
    pub fn coordinate_vector(chart: Arc<Chart>, i: usize) -> TensorField {
        TensorField::from_fn(chart, Valence::Vector, |k| {
            Expr::num(if k[0] == i { 1.0 } else { 0.0 })
        })
    }

    pub fn chart(&self) -> &Arc<Chart> {
        &self.chart
    }

    pub fn valence(&self) -> Valence {
        self.valence
    }

    pub fn dim(&self) -> usize {
        self.chart.dim()
    }

    pub fn components(&self) -> &[Expr] {
        &self.comps
    }

    pub fn get(&self, idx: &[usize]) -> &Expr {
        assert_eq!(idx.len(), self.valence.rank());
        let n = self.dim();
        let flat = idx.iter().fold(0, |acc, &i| acc * n + i);
        &self.comps[flat]
    }

    /// Componentwise linear combination `a·self + b·other` of equal valence.
    pub fn combine(&self, a: f64, other: &TensorField, b: f64) -> TensorField {
        assert_eq!(self.valence, other.valence);
        let comps = self
            .comps
            .iter()
            .zip(&other.comps)
            .map(|(x, y)| a * x + b * y)
            .collect();
        TensorField::new(self.chart.clone(), self.valence, comps)
    }

    pub fn scale(&self, factor: &Expr) -> TensorField {
        let comps = self.comps.iter().map(|c| factor * c).collect();
        TensorField::new(self.chart.clone(), self.valence, comps)
    }

    pub fn map(&self, valence: Valence, f: impl FnMut(&Expr) -> Expr) -> TensorField {
        TensorField::new(
            self.chart.clone(),
            valence,
            self.comps.iter().map(f).collect(),
        )
    }

    fn names(&self) -> Vec<&str> {
        self.chart.name_refs()
    }
}

/// Partial derivative `∂_i f`.
pub fn partial(chart: &Chart, f: &Expr, i: usize) -> Expr {
    f.differentiate(&chart.names()[i])
}

/// Directional derivative `X(f) = X^i ∂_i f`.
pub fn directional(x: &TensorField, f: &Expr) -> Expr {
    assert_eq!(x.valence, Valence::Vector);
    x.names()
        .iter()
        .zip(&x.comps)
        .map(|(name, xi)| xi * f.differentiate(name))
        .sum()
}

/// Exterior derivative of a function as a one-form.
pub fn differential(chart: &Arc<Chart>, f: &Expr) -> TensorField {
    TensorField::from_fn(chart.clone(), Valence::OneForm, |i| partial(chart, f, i[0]))
}

/// Lie bracket `[X,Y]^k = X^i ∂_i Y^k − Y^i ∂_i X^k`.
pub fn lie_bracket(x: &TensorField, y: &TensorField) -> TensorField {
    assert_eq!(x.valence, Valence::Vector);
    assert_eq!(y.valence, Valence::Vector);
    TensorField::from_fn(x.chart.clone(), Valence::Vector, |k| {
        directional(x, y.get(&[k[0]])) - directional(y, x.get(&[k[0]]))
    })
}

/// `(𝓛_X T)_ij = X^k ∂_k T_ij + T_kj ∂_i X^k + T_ik ∂_j X^k` for a (0,2) field.
pub fn lie_derivative_2form(t: &TensorField, x: &TensorField) -> TensorField {
    assert!(matches!(t.valence, Valence::Sym2 | Valence::Bilinear));
    assert_eq!(x.valence, Valence::Vector);
    let chart = &t.chart;
    let n = t.dim();
    // ∂_i X^k
    let dx: Vec<Expr> = (0..n * n)
        .map(|ik| partial(chart, x.get(&[ik % n]), ik / n))
        .collect();
    TensorField::from_fn(chart.clone(), t.valence, |ij| {
        let (i, j) = (ij[0], ij[1]);
        let transport = directional(x, t.get(&[i, j]));
        let twist: Expr = (0..n)
            .map(|k| t.get(&[k, j]) * &dx[i * n + k] + t.get(&[i, k]) * &dx[j * n + k])
            .sum();
        transport + twist
    })
}

/// Lie derivative of a symmetric (0,2) field.
pub fn lie_derivative_sym2(t: &TensorField, x: &TensorField) -> TensorField {
    assert_eq!(t.valence, Valence::Sym2);
    lie_derivative_2form(t, x)
}

/// `(α⊙β)_ij = ½(α_i β_j + α_j β_i)`.
pub fn sym_product(alpha: &TensorField, beta: &TensorField) -> TensorField {
    assert_eq!(alpha.valence, Valence::OneForm);
    assert_eq!(beta.valence, Valence::OneForm);
    TensorField::from_fn(alpha.chart.clone(), Valence::Sym2, |ij| {
        let (i, j) = (ij[0], ij[1]);
        if i == j {
            alpha.get(&[i]) * beta.get(&[i])
        } else {
            0.5 * (alpha.get(&[i]) * beta.get(&[j]) + alpha.get(&[j]) * beta.get(&[i]))
        }
    })
}

/// Value of a (0,2) field on two vector fields, `T(X,Y) = X^i T_ij Y^j`.
pub fn apply_2form(t: &TensorField, x: &TensorField, y: &TensorField) -> Expr {
    let n = t.dim();
    (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .map(|(i, j)| x.get(&[i]) * t.get(&[i, j]) * y.get(&[j]))
        .sum()
}

/// One-form applied to a vector, `α(X) = α_i X^i`.
pub fn apply_one_form(alpha: &TensorField, x: &TensorField) -> Expr {
    alpha.comps.iter().zip(&x.comps).map(|(a, v)| a * v).sum()
}

/// `(φX)^i = φ^i_j X^j`.
pub fn apply_endo(phi: &TensorField, x: &TensorField) -> TensorField {
    assert_eq!(phi.valence, Valence::Endo);
    let n = phi.dim();
    TensorField::from_fn(phi.chart.clone(), Valence::Vector, |i| {
        (0..n).map(|j| phi.get(&[i[0], j]) * x.get(&[j])).sum()
    })
}

/// Composition `(A∘B)^i_j = A^i_k B^k_j`.
pub fn compose_endo(a: &TensorField, b: &TensorField) -> TensorField {
    let n = a.dim();
    TensorField::from_fn(a.chart.clone(), Valence::Endo, |ij| {
        (0..n)
            .map(|k| a.get(&[ij[0], k]) * b.get(&[k, ij[1]]))
            .sum()
    })
}

/// Levi-Civita connection coefficients `Γ^k_ij`, stored symmetric in `(i, j)`.
#[derive(Debug, Clone)]
pub struct ChristoffelSymbols {
    dim: usize,
    comps: Vec<Expr>,
}

impl ChristoffelSymbols {
    /// `Γ^k_ij = ½ g^kl (∂_i g_jl + ∂_j g_il − ∂_l g_ij)`.
    pub fn of(metric: &MetricField) -> ChristoffelSymbols {
        let chart = metric.chart();
        let n = metric.dim();
        // ∂_l g_ij, index [l][i][j]
        let dg: Vec<Expr> = (0..n * n * n)
            .map(|f| {
                let (l, i, j) = (f / (n * n), (f / n) % n, f % n);
                if i > j {
                    return Expr::zero();
                }
                partial(chart, metric.g(i, j), l)
            })
            .collect();
        let dg_at = |l: usize, i: usize, j: usize| {
            let (a, b) = if i <= j { (i, j) } else { (j, i) };
            &dg[(l * n + a) * n + b]
        };
        let mut comps = vec![Expr::zero(); n * n * n];
        for i in 0..n {
            for j in i..n {
                // first kind, [ij, l]
                let first: Vec<Expr> = (0..n)
                    .map(|l| dg_at(i, j, l) + dg_at(j, i, l) - dg_at(l, i, j))
                    .collect();
                for k in 0..n {
                    let sum: Expr = (0..n)
                        .filter(|&l| !first[l].is_zero() && !metric.inv(k, l).is_zero())
                        .map(|l| metric.inv(k, l) * &first[l])
                        .sum();
                    let gamma = 0.5 * sum;
                    comps[(k * n + i) * n + j] = gamma.clone();
                    comps[(k * n + j) * n + i] = gamma;
                }
            }
        }
        ChristoffelSymbols { dim: n, comps }
    }

    pub fn get(&self, k: usize, i: usize, j: usize) -> &Expr {
        let n = self.dim;
        &self.comps[(k * n + i) * n + j]
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn components(&self) -> &[Expr] {
        &self.comps
    }
}

/// A metric together with its lazily derived connection and curvature.
#[derive(Debug)]
pub struct Geometry {
    metric: MetricField,
    gamma: ChristoffelSymbols,
    riemann: OnceLock<TensorField>,
    ricci: OnceLock<TensorField>,
}

impl Geometry {
    pub fn new(metric: MetricField) -> Geometry {
        let gamma = ChristoffelSymbols::of(&metric);
        Geometry {
            metric,
            gamma,
            riemann: OnceLock::new(),
            ricci: OnceLock::new(),
        }
    }

    pub fn metric(&self) -> &MetricField {
        &self.metric
    }

    pub fn chart(&self) -> &Arc<Chart> {
        self.metric.chart()
    }

    pub fn dim(&self) -> usize {
        self.metric.dim()
    }

    pub fn christoffel(&self) -> &ChristoffelSymbols {
        &self.gamma
    }

    /// The metric as a symmetric (0,2) field.
    pub fn metric_field(&self) -> TensorField {
        TensorField::new(
            self.chart().clone(),
            Valence::Sym2,
            self.metric.components().to_vec(),
        )
    }

    /// `R^l_ijk = ∂_i Γ^l_jk − ∂_j Γ^l_ik + Γ^l_im Γ^m_jk − Γ^l_jm Γ^m_ik`.
    pub fn riemann(&self) -> &TensorField {
        self.riemann.get_or_init(|| {
            let n = self.dim();
            let chart = self.chart();
            let g = &self.gamma;
            // ∂_i Γ^l_jk, index [i][l][j][k]
            let dgamma: Vec<Expr> = (0..n.pow(4))
                .map(|f| {
                    let (i, l, j, k) = (f / (n * n * n), (f / (n * n)) % n, (f / n) % n, f % n);
                    partial(chart, g.get(l, j, k), i)
                })
                .collect();
            let d = |i: usize, l: usize, j: usize, k: usize| &dgamma[((i * n + l) * n + j) * n + k];
            let mut comps = vec![Expr::zero(); n.pow(4)];
            for l in 0..n {
                for k in 0..n {
                    for i in 0..n {
                        for j in (i + 1)..n {
                            let quad: Expr = (0..n)
                                .map(|m| {
                                    g.get(l, i, m) * g.get(m, j, k)
                                        - g.get(l, j, m) * g.get(m, i, k)
                                })
                                .sum();
                            let r = d(i, l, j, k) - d(j, l, i, k) + quad;
                            comps[((l * n + j) * n + i) * n + k] = -&r;
                            comps[((l * n + i) * n + j) * n + k] = r;
                        }
                    }
                }
            }
            TensorField::new(chart.clone(), Valence::Curvature, comps)
        })
    }

    /// Fully covariant curvature `R_lijk = g_lm R^m_ijk = g(R(∂_i,∂_j)∂_k, ∂_l)`.
    pub fn riemann_lowered(&self) -> TensorField {
        let n = self.dim();
        let r = self.riemann();
        TensorField::from_fn(self.chart().clone(), Valence::Curvature, |idx| {
            (0..n)
                .map(|m| self.metric.g(idx[0], m) * r.get(&[m, idx[1], idx[2], idx[3]]))
                .sum()
        })
    }

    /// `Ric_jk = R^i_ijk`.
    pub fn ricci(&self) -> &TensorField {
        self.ricci.get_or_init(|| {
            let n = self.dim();
            let r = self.riemann();
            let mut comps = vec![Expr::zero(); n * n];
            for j in 0..n {
                for k in j..n {
                    let v: Expr = (0..n).map(|i| r.get(&[i, i, j, k]).clone()).sum();
                    comps[j * n + k] = v.clone();
                    comps[k * n + j] = v;
                }
            }
            TensorField::new(self.chart().clone(), Valence::Sym2, comps)
        })
    }

    /// `(grad f)^i = g^ij ∂_j f`.
    pub fn gradient(&self, f: &Expr) -> TensorField {
        let df = differential(self.chart(), f);
        self.sharp(&df)
    }

    /// `(Hess f)_ij = ∂_i ∂_j f − Γ^k_ij ∂_k f`.
    pub fn hessian(&self, f: &Expr) -> TensorField {
        let chart = self.chart();
        let n = self.dim();
        let df: Vec<Expr> = (0..n).map(|k| partial(chart, f, k)).collect();
        let mut comps = vec![Expr::zero(); n * n];
        for i in 0..n {
            for j in i..n {
                let second = partial(chart, &df[j], i);
                let corr: Expr = (0..n).map(|k| self.gamma.get(k, i, j) * &df[k]).sum();
                let h = second - corr;
                comps[i * n + j] = h.clone();
                comps[j * n + i] = h;
            }
        }
        TensorField::new(chart.clone(), Valence::Sym2, comps)
    }

    /// `(X♭)_i = g_ij X^j`.
    pub fn flat(&self, x: &TensorField) -> TensorField {
        assert_eq!(x.valence, Valence::Vector);
        let n = self.dim();
        TensorField::from_fn(self.chart().clone(), Valence::OneForm, |i| {
            (0..n).map(|j| self.metric.g(i[0], j) * x.get(&[j])).sum()
        })
    }

    /// `(α♯)^i = g^ij α_j`.
    pub fn sharp(&self, alpha: &TensorField) -> TensorField {
        assert_eq!(alpha.valence, Valence::OneForm);
        let n = self.dim();
        TensorField::from_fn(self.chart().clone(), Valence::Vector, |i| {
            (0..n)
                .map(|j| self.metric.inv(i[0], j) * alpha.get(&[j]))
                .sum()
        })
    }

    /// `g(X, Y)`.
    pub fn inner(&self, x: &TensorField, y: &TensorField) -> Expr {
        let n = self.dim();
        (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| x.get(&[i]) * self.metric.g(i, j) * y.get(&[j]))
            .sum()
    }

    /// `(∇_X Y)^k = X^i ∂_i Y^k + Γ^k_ij X^i Y^j`.
    pub fn covariant_derivative(&self, x: &TensorField, y: &TensorField) -> TensorField {
        assert_eq!(x.valence, Valence::Vector);
        assert_eq!(y.valence, Valence::Vector);
        let n = self.dim();
        TensorField::from_fn(self.chart().clone(), Valence::Vector, |k| {
            let k = k[0];
            let connection: Expr = (0..n)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .map(|(i, j)| self.gamma.get(k, i, j) * x.get(&[i]) * y.get(&[j]))
                .sum();
            directional(x, y.get(&[k])) + connection
        })
    }

    /// Curvature applied to vector fields, `R(X,Y)Z`.
    pub fn curvature_apply(
        &self,
        x: &TensorField,
        y: &TensorField,
        z: &TensorField,
    ) -> TensorField {
        let n = self.dim();
        let r = self.riemann();
        TensorField::from_fn(self.chart().clone(), Valence::Vector, |l| {
            let mut terms = Vec::new();
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let c = r.get(&[l[0], i, j, k]);
                        if !c.is_zero() {
                            terms.push(c * x.get(&[i]) * y.get(&[j]) * z.get(&[k]));
                        }
                    }
                }
            }
            terms.into_iter().sum()
        })
    }

    /// `𝓛_X g`.
    pub fn lie_derivative_metric(&self, x: &TensorField) -> TensorField {
        lie_derivative_sym2(&self.metric_field(), x)
    }
}
