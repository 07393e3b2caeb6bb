//! Acceptance suite. Prints every individual check, then one PASS/FAIL
//! line per criterion, and exits nonzero if any criterion fails.
//!
//! Run with `cargo test -p gsoliton-cli --test acceptance`.

use std::process::{Command as Process, ExitCode};
use std::time::Instant;

use gsoliton::check::{sample_identities, Identity, ResidualReport};
use gsoliton::contact::{DConvention, Sample};
use gsoliton::expr::{Expr, Tape};
use gsoliton::fit::fit_constants;
use gsoliton::manifest::{bundled, Loaded, BUNDLED};
use gsoliton::soliton::{theorem_identities, Constants, SolitonSpec};
use gsoliton::tensor::{directional, lie_bracket, partial, Geometry, TensorField, Valence};
use gsoliton::{parse, ParameterSet, Point64, Sampling};

struct Line {
    criterion: u32,
    what: String,
    pass: bool,
    detail: String,
}

#[derive(Default)]
struct Ledger(Vec<Line>);

impl Ledger {
    fn record(
        &mut self,
        criterion: u32,
        what: impl Into<String>,
        pass: bool,
        detail: impl Into<String>,
    ) {
        self.0.push(Line {
            criterion,
            what: what.into(),
            pass,
            detail: detail.into(),
        });
    }

    /// Records `value <= bound`.
    fn bound(&mut self, criterion: u32, what: impl Into<String>, value: f64, bound: f64) {
        self.record(
            criterion,
            what,
            value <= bound,
            format!("{value:.3e} <= {bound:e}"),
        );
    }

    fn report(&mut self, criterion: u32, r: &ResidualReport, bound: f64) {
        let ok = r.rel_sup <= bound && r.points > 0 && r.failures.is_empty();
        self.record(
            criterion,
            r.name.clone(),
            ok,
            format!(
                "rel {:.3e} <= {bound:e} over {} points",
                r.rel_sup, r.points
            ),
        );
    }
}

fn load(name: &str) -> Loaded {
    bundled(name).unwrap().load().unwrap()
}

fn canonical(name: &str) -> Constants {
    match name {
        "hyperbolic" => Constants::new(2.0, 1.0, 3.0),
        "cone" => Constants::new(-1.0, 1.0, 1.0),
        "sasakian3" => Constants::new(-1.0, 0.0, 1.0),
        _ => unreachable!(),
    }
}

fn points(geom: &Geometry, n: usize, seed: u64) -> Vec<Point64> {
    geom.chart()
        .sample_points(Sampling::Uniform, n, seed)
        .unwrap()
}

fn soliton(loaded: &Loaded, k: Constants, f1_extra: Option<&str>) -> SolitonSpec {
    let (mut f1, f2) = loaded.resolved_scalars(k).unwrap();
    if let Some(extra) = f1_extra {
        f1 = (&f1 + &parse(extra).unwrap()).simplify();
    }
    SolitonSpec::gradient(loaded.geometry.clone(), f1, f2, k)
}

fn criterion_1_and_2(ledger: &mut Ledger) {
    for (c, name) in [(1, "hyperbolic"), (2, "cone")] {
        let start = Instant::now();
        let loaded = load(name);
        let spec = soliton(&loaded, canonical(name), None);
        let sample = Sample::new(
            ParameterSet::new(),
            points(&loaded.geometry, 10_000, 2024),
            1e-9,
        );
        let r = spec.check(&sample).unwrap();
        let secs = start.elapsed().as_secs_f64();
        ledger.report(c, &r, 1e-9);
        if c == 1 {
            ledger.bound(1, "runtime seconds (10^4 points)", secs, 5.0);
        }
    }
}

fn criterion_3_and_4(ledger: &mut Ledger) {
    let loaded = load("sasakian3");
    let k = canonical("sasakian3");
    let s = loaded.structure.as_ref().unwrap();
    let geom = &loaded.geometry;
    let sample = Sample::new(ParameterSet::new(), points(geom, 2000, 99), 1e-9);

    let structure = s.classify(&sample, DConvention::Half).unwrap();
    let f = structure.flags;
    ledger.record(
        3,
        "ladder flags",
        f.almost_contact_metric && f.contact_metric && f.k_contact && f.normal && f.sasakian,
        format!("{f:?}"),
    );
    for r in structure
        .residuals
        .iter()
        .chain(&structure.identities.checks)
    {
        ledger.report(3, r, 1e-9);
    }
    ledger.report(3, &soliton(&loaded, k, None).check(&sample).unwrap(), 1e-9);

    let (f1, f2) = loaded.resolved_scalars(k).unwrap();
    let ids = theorem_identities(s, &f1, &f2, k);
    let reports = sample.run(geom, &ids).unwrap();
    let bound = |name: &str| match name {
        "theorem_zeta" => (3, 1e-8),
        "lemma3" => (4, 1e-8),
        "ricci_xi" => (4, 1e-9),
        _ => (4, 1e-7),
    };
    for r in &reports {
        let (c, b) = bound(&r.name);
        ledger.report(c, r, b);
    }

    // ξ(f₁) = −(2c₂ + λ) cot z
    let xi_f1 = directional(s.xi(), &f1);
    let cot = parse(&format!("-({})*cot(z)", 2.0 * k.c2 + k.lambda)).unwrap();
    let id = Identity::equal("xi_f1_vs_cot", &[xi_f1], &[cot]);
    let r = sample_identities(
        geom.chart(),
        &[id],
        &ParameterSet::new(),
        &sample.points,
        1e-9,
    )
    .unwrap();
    ledger.report(3, &r[0], 1e-9);
}

/// Polynomial test vector fields on any chart.
fn poly_fields(geom: &Geometry) -> [TensorField; 2] {
    let names = geom.chart().names();
    let n = names.len();
    let make = |shift: usize, c: f64| {
        let comps = (0..n)
            .map(|k| {
                let a = &names[k];
                let b = &names[(k + shift) % n];
                parse(&format!("{c} + {a}*{b} - {}*{b}^2", 0.5 * c)).unwrap()
            })
            .collect();
        TensorField::vector(geom.chart().clone(), comps)
    };
    [make(1, 1.5), make(2, -0.75)]
}

fn tensor_identities(loaded: &Loaded) -> (Vec<(Identity, f64)>, Vec<Expr>) {
    let geom = &loaded.geometry;
    let n = geom.dim();
    let r = geom.riemann();
    let rl = geom.riemann_lowered();
    let ric = geom.ricci();
    let gamma = geom.christoffel();
    let g = geom.metric();
    let mut anti = (Vec::new(), Vec::new());
    let mut pair = (Vec::new(), Vec::new());
    let mut bianchi = Vec::new();
    let mut bianchi_scale = Vec::new();
    for l in 0..n {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    anti.0.push(r.get(&[l, i, j, k]).clone());
                    anti.1.push(-r.get(&[l, j, i, k]));
                    pair.0.push(rl.get(&[l, i, j, k]).clone());
                    pair.1.push(rl.get(&[j, k, l, i]).clone());
                    let terms = [
                        r.get(&[l, i, j, k]),
                        r.get(&[l, j, k, i]),
                        r.get(&[l, k, i, j]),
                    ];
                    bianchi.push(terms.iter().copied().cloned().sum());
                    bianchi_scale.extend(terms.iter().copied().cloned());
                }
            }
        }
    }
    let mut ric_sym = (Vec::new(), Vec::new());
    let mut compat = Vec::new();
    let mut compat_scale = Vec::new();
    for i in 0..n {
        for j in 0..n {
            ric_sym.0.push(ric.get(&[i, j]).clone());
            ric_sym.1.push(ric.get(&[j, i]).clone());
            for k in 0..n {
                let d = partial(geom.chart(), g.g(i, j), k);
                let c1: Expr = (0..n).map(|l| gamma.get(l, k, i) * g.g(l, j)).sum();
                let c2: Expr = (0..n).map(|l| gamma.get(l, k, j) * g.g(i, l)).sum();
                compat.push(&d - &c1 - &c2);
                compat_scale.extend([d, c1, c2]);
            }
        }
    }
    let [x, y] = poly_fields(geom);
    let nx = geom.covariant_derivative(&x, &y);
    let ny = geom.covariant_derivative(&y, &x);
    let br = lie_bracket(&x, &y);
    let torsion = TensorField::from_fn(geom.chart().clone(), Valence::Vector, |k| {
        nx.get(k) - ny.get(k) - br.get(k)
    });

    let mut ids = vec![
        (
            Identity::equal("riemann_antisymmetry", &anti.0, &anti.1),
            1e-10,
        ),
        (
            Identity::equal("riemann_pair_symmetry", &pair.0, &pair.1),
            1e-10,
        ),
        (
            Identity::new("first_bianchi", bianchi, bianchi_scale),
            1e-10,
        ),
        (
            Identity::equal("ricci_symmetry", &ric_sym.0, &ric_sym.1),
            1e-12,
        ),
        (
            Identity::new("metric_compatibility", compat, compat_scale),
            1e-10,
        ),
        (
            Identity::vanishing("torsion_free", &torsion, &[&nx, &ny, &br]),
            1e-10,
        ),
    ];
    if loaded.chart.dim() == 2 {
        let minus_g: Vec<Expr> = g.components().iter().map(|e| -e).collect();
        ids.push((
            Identity::equal("ricci_equals_minus_g", ric.components(), &minus_g),
            1e-10,
        ));
    }
    let mut potentials = Vec::new();
    if let Some((f1, f2)) = loaded.resolved_scalars(canonical_for(loaded)) {
        for (label, f) in [("f1", f1), ("f2", f2)] {
            let lie = geom.lie_derivative_metric(&geom.gradient(&f));
            let hess = geom.hessian(&f);
            ids.push((
                Identity::equal(
                    &format!("lie_grad_{label}_is_twice_hessian"),
                    lie.components(),
                    hess.combine(2.0, &hess, 0.0).components(),
                ),
                1e-10,
            ));
            potentials.push(f);
        }
    }
    (ids, potentials)
}

fn canonical_for(loaded: &Loaded) -> Constants {
    match loaded.chart.dim() {
        2 => canonical("hyperbolic"),
        _ if loaded.structure.is_some() => canonical("sasakian3"),
        _ => canonical("cone"),
    }
}

/// Every expression a bundled manifest carries.
fn bundled_expressions(loaded: &Loaded, potentials: Vec<Expr>) -> Vec<Expr> {
    let mut out: Vec<Expr> = loaded.geometry.metric().components().to_vec();
    if let Some(s) = &loaded.structure {
        out.extend(s.phi().components().iter().cloned());
        out.extend(s.xi().components().iter().cloned());
        out.extend(s.eta().components().iter().cloned());
    }
    out.extend(potentials);
    out
}

/// Worst `|d − fd| / max(1, |d|)` over points and coordinates, central
/// differences with step `h`.
/// Truncation error grows like h²/x² next to a finite boundary of a
/// logarithmic potential, so the margin here is thin by nature.
fn finite_difference_error(
    loaded: &Loaded,
    exprs: &[Expr],
    pts: &[Point64],
    h: f64,
) -> (f64, Vec<f64>) {
    let chart = &loaded.chart;
    let names = chart.name_refs();
    let n = chart.dim();
    let values = Tape::compile(exprs, &names, &loaded.params).unwrap();
    let derivs: Vec<Expr> = (0..n)
        .flat_map(|k| exprs.iter().map(move |e| partial(chart, e, k)))
        .collect();
    let derivs = Tape::compile(&derivs, &names, &loaded.params).unwrap();
    let mut worst = (0.0, Vec::new());
    for p in pts {
        let d = derivs.eval(p.coords()).unwrap();
        for k in 0..n {
            let mut up = p.coords().to_vec();
            let mut down = up.clone();
            up[k] += h;
            down[k] -= h;
            let (fu, fd) = (values.eval(&up).unwrap(), values.eval(&down).unwrap());
            for (e, (a, b)) in fu.iter().zip(&fd).enumerate() {
                let exact = d[k * exprs.len() + e];
                let err = ((a - b) / (2.0 * h) - exact).abs() / exact.abs().max(1.0);
                if err > worst.0 {
                    worst = (err, p.to_f64());
                }
            }
        }
    }
    worst
}

fn criterion_5(ledger: &mut Ledger) {
    for name in BUNDLED {
        let loaded = load(name);
        let pts = points(&loaded.geometry, 200, 5);
        let (ids, potentials) = tensor_identities(&loaded);
        let (ids, bounds): (Vec<Identity>, Vec<f64>) = ids.into_iter().unzip();
        let reports =
            sample_identities(loaded.geometry.chart(), &ids, &loaded.params, &pts, 1e-10).unwrap();
        for (r, b) in reports.iter().zip(bounds) {
            let mut r = r.clone();
            r.name = format!("{name}: {}", r.name);
            ledger.report(5, &r, b);
        }
        let exprs = bundled_expressions(&loaded, potentials);
        let (err, at) = finite_difference_error(&loaded, &exprs, &pts, 1e-5);
        ledger.record(
            5,
            format!("{name}: symbolic vs central difference (h = 1e-5)"),
            err <= 1e-6,
            format!("{err:.3e} <= 1e-6 (worst at {at:?})"),
        );
    }
}

fn criterion_6(ledger: &mut Ledger) {
    let cone = load("cone");
    let (f1, f2) = cone.scalars.clone().unwrap();
    let pts = points(&cone.geometry, 500, 17);
    let fit = fit_constants(&cone.geometry, &f1, &f2, &ParameterSet::new(), &pts).unwrap();
    let err = fit
        .solution
        .as_array()
        .iter()
        .zip([-1.0, 1.0, 1.0])
        .fold(0.0_f64, |m, (a, b)| m.max((a - b).abs()));
    ledger.record(6, "cone rank", fit.rank == 3, format!("rank {}", fit.rank));
    ledger.bound(6, "cone recovers (-1, 1, 1)", err, 1e-8);

    let hyp = load("hyperbolic");
    let f1 = parse("-2*ln(y)").unwrap();
    let f2 = parse("-ln(y)").unwrap();
    let pts = points(&hyp.geometry, 500, 17);
    let fit = fit_constants(&hyp.geometry, &f1, &f2, &ParameterSet::new(), &pts).unwrap();
    ledger.record(
        6,
        "hyperbolic rank",
        fit.rank == 2,
        format!("rank {}", fit.rank),
    );
    let angle = fit
        .null_space
        .first()
        .map(|v| {
            let cos = (v[1] + v[2]) * std::f64::consts::FRAC_1_SQRT_2;
            cos.abs().min(1.0).acos()
        })
        .unwrap_or(f64::INFINITY);
    ledger.bound(
        6,
        "hyperbolic null direction angle to (0,1,1)/sqrt 2",
        angle,
        1e-6,
    );
    ledger.bound(
        6,
        "hyperbolic coset contains (2, 1, 3)",
        fit.distance_to_solution_set(Constants::new(2.0, 1.0, 3.0)),
        1e-8,
    );
}

fn criterion_7(ledger: &mut Ledger) {
    for name in BUNDLED {
        let loaded = load(name);
        let spec = soliton(&loaded, canonical(name), Some("0.01*x"));
        let sample = Sample::new(ParameterSet::new(), points(&loaded.geometry, 500, 8), 1e-8);
        let r = spec.check(&sample).unwrap();
        ledger.record(
            7,
            format!("{name}: f1 + 0.01 x detected"),
            r.rel_sup > 1e-4 && !r.pass,
            format!("rel {:.3e} > 1e-4", r.rel_sup),
        );
    }
}

fn criterion_8(ledger: &mut Ledger) {
    let start = Instant::now();
    let mut codes = Vec::new();
    for name in BUNDLED {
        let out = Process::new(env!("CARGO_BIN_EXE_gsoliton"))
            .args(["all", "--example", name, "--format", "csv"])
            .output()
            .expect("binary runs");
        codes.push((name, out.status.code()));
    }
    let secs = start.elapsed().as_secs_f64();
    ledger.record(
        8,
        "gsoliton all on every bundled manifest exits 0",
        codes.iter().all(|(_, c)| *c == Some(0)),
        format!("{codes:?}"),
    );
    ledger.bound(8, "wall-clock seconds", secs, 60.0);
}

fn main() -> ExitCode {
    let mut ledger = Ledger::default();
    criterion_1_and_2(&mut ledger);
    criterion_3_and_4(&mut ledger);
    criterion_5(&mut ledger);
    criterion_6(&mut ledger);
    criterion_7(&mut ledger);
    criterion_8(&mut ledger);
    for l in &ledger.0 {
        println!(
            "  {} {}: {} ({})",
            if l.pass { "ok  " } else { "FAIL" },
            l.criterion,
            l.what,
            l.detail
        );
    }
    let mut all = true;
    for c in 1..=8 {
        let lines: Vec<_> = ledger.0.iter().filter(|l| l.criterion == c).collect();
        let pass = !lines.is_empty() && lines.iter().all(|l| l.pass);
        all &= pass;
        println!("criterion {c}: {}", if pass { "PASS" } else { "FAIL" });
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
