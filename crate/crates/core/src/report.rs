//! Running manifest check suites and rendering the results.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::check::{PointFailure, ResidualReport};
use crate::contact::{Conventions, DConvention, Sample, StructureFlags};
use crate::expr::UnboundSymbol;
use crate::fit::{Design, FitError, FitResult};
use crate::manifest::{digest, Loaded, Manifest, ManifestError, SamplingSpec};
use crate::metric::MetricError;
use crate::soliton::{classify_constants, theorem_identities, Constants, SolitonSpec};

/// The check suites a run can request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    CheckSoliton,
    CheckStructure,
    CheckTheorem,
    Fit,
    All,
}

impl Command {
    pub fn as_str(self) -> &'static str {
        match self {
            Command::CheckSoliton => "check-soliton",
            Command::CheckStructure => "check-structure",
            Command::CheckTheorem => "check-theorem",
            Command::Fit => "fit",
            Command::All => "all",
        }
    }
}

/// Overrides applied on top of the manifest.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunOptions {
    pub points: Option<usize>,
    pub seed: Option<u64>,
    pub tolerance: Option<f64>,
    pub d_convention: DConvention,
}

/// Output formats of [`Report::render`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
    Table,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            "table" => Ok(Format::Table),
            other => Err(format!(
                "unknown format `{other}` (expected json, csv or table)"
            )),
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    /// A domain error while validating the metric.
    #[error("{0}")]
    Domain(String),
    #[error("`{0}` needs a `{1}` block in the manifest")]
    Missing(&'static str, &'static str),
    #[error(transparent)]
    Unbound(#[from] UnboundSymbol),
    #[error("fit: {0}")]
    Fit(#[from] FitError),
}

impl RunError {
    /// Exit code: 3 for domain errors, 2 for everything about the input.
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Domain(_) => 3,
            _ => 2,
        }
    }
}

/// Exit status of a completed run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
    Domain,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Pass => 0,
            Outcome::Fail => 1,
            Outcome::Domain => 3,
        }
    }
}

/// Summary of a constant fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub solution: Constants,
    pub free: Vec<String>,
    pub rank: usize,
    pub null_space: Vec<[f64; 3]>,
    pub residual_sup: f64,
    pub points: usize,
}

impl From<&FitResult> for FitSummary {
    fn from(f: &FitResult) -> Self {
        FitSummary {
            solution: f.solution,
            free: f.free.clone(),
            rank: f.rank,
            null_space: f.null_space.clone(),
            residual_sup: f.residual_sup,
            points: f.points,
        }
    }
}

/// Everything a run produced. Field order is the JSON key order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: Command,
    pub manifest_sha256: String,
    pub conventions: Conventions,
    pub sampling: SamplingSpec,
    pub tolerance: f64,
    pub constants: Option<Constants>,
    pub constant_labels: Vec<String>,
    pub structure: Option<StructureFlags>,
    pub fit: Option<FitSummary>,
    pub checks: Vec<ResidualReport>,
    pub diagnostics: Vec<String>,
    pub pass: bool,
    /// Wall-clock seconds; the only field that varies between identical runs.
    pub elapsed_seconds: f64,
}

impl Report {
    pub fn check(&self, name: &str) -> Option<&ResidualReport> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Domain errors at sample points make the outcome [`Outcome::Domain`].
    pub fn outcome(&self) -> Outcome {
        if self.checks.iter().any(|c| !c.failures.is_empty()) {
            Outcome::Domain
        } else if self.pass {
            Outcome::Pass
        } else {
            Outcome::Fail
        }
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(self).expect("report serialises");
                s.push('\n');
                s
            }
            Format::Csv => {
                let mut s = String::from("name,abs_res,rel_res,pass\n");
                for c in &self.checks {
                    let _ = writeln!(s, "{},{:e},{:e},{}", c.name, c.abs_sup, c.rel_sup, c.pass);
                }
                s
            }
            Format::Table => self.table(),
        }
    }

    fn table(&self) -> String {
        let width = self
            .checks
            .iter()
            .map(|c| c.name.len())
            .max()
            .unwrap_or(5)
            .max(5);
        let mut s = String::new();
        let _ = writeln!(s, "command   {}", self.command.as_str());
        let _ = writeln!(s, "manifest  {}", self.manifest_sha256);
        let _ = writeln!(
            s,
            "sampling  {} x{} seed {}  tolerance {:e}",
            serde_json::to_value(self.sampling.strategy)
                .ok()
                .and_then(|v| v.as_str().map(str::to_string))
                .unwrap_or_default(),
            self.sampling.count,
            self.sampling.seed,
            self.tolerance
        );
        let _ = writeln!(s, "d-convention {}", self.conventions.d_convention.as_str());
        if let Some(k) = self.constants {
            let _ = write!(s, "constants c1={} c2={} lambda={}", k.c1, k.c2, k.lambda);
            if !self.constant_labels.is_empty() {
                let _ = write!(s, "  [{}]", self.constant_labels.join(", "));
            }
            s.push('\n');
        }
        if let Some(f) = &self.structure {
            let _ = writeln!(
                s,
                "structure almost-contact-metric={} contact-metric={} K-contact={} normal={} Sasakian={}",
                f.almost_contact_metric, f.contact_metric, f.k_contact, f.normal, f.sasakian
            );
        }
        if let Some(f) = &self.fit {
            let _ = writeln!(
                s,
                "fit       rank {} solution ({}, {}, {}) null space {:?}",
                f.rank, f.solution.c1, f.solution.c2, f.solution.lambda, f.null_space
            );
        }
        s.push('\n');
        let _ = writeln!(
            s,
            "{:<width$}  {:>12}  {:>12}  {:>6}  result",
            "check", "abs", "rel", "points"
        );
        for c in &self.checks {
            let _ = writeln!(
                s,
                "{:<width$}  {:>12.3e}  {:>12.3e}  {:>6}  {}",
                c.name,
                c.abs_sup,
                c.rel_sup,
                c.points,
                if c.pass { "pass" } else { "FAIL" }
            );
        }
        for d in &self.diagnostics {
            let _ = writeln!(s, "note: {d}");
        }
        let _ = writeln!(
            s,
            "\noverall {}  ({:.2} s)",
            if self.pass { "PASS" } else { "FAIL" },
            self.elapsed_seconds
        );
        s
    }
}

/// Parses `source` and runs `command` on it.
pub fn run_source(source: &str, command: Command, opts: RunOptions) -> Result<Report, RunError> {
    let manifest = Manifest::from_json(source)?;
    run_manifest(&manifest, &digest(source), command, opts)
}

pub fn run_manifest(
    manifest: &Manifest,
    sha256: &str,
    command: Command,
    opts: RunOptions,
) -> Result<Report, RunError> {
    let start = Instant::now();
    let loaded = manifest.load().map_err(|e| match e {
        ManifestError::Metric(MetricError::Domain(d)) => RunError::Domain(format!("metric: {d}")),
        other => RunError::Manifest(other),
    })?;
    let sampling = SamplingSpec {
        count: opts.points.unwrap_or(manifest.sampling.count),
        seed: opts.seed.unwrap_or(manifest.sampling.seed),
        ..manifest.sampling
    };
    if sampling.count == 0 {
        return Err(ManifestError::Invalid("--points must be at least 1".to_string()).into());
    }
    let tolerance = opts.tolerance.unwrap_or(manifest.tolerance);
    if !tolerance.is_finite() || tolerance <= 0.0 {
        return Err(
            ManifestError::Invalid(format!("tolerance must be positive, got {tolerance}")).into(),
        );
    }
    let points = loaded
        .chart
        .sample_points(sampling.strategy, sampling.count, sampling.seed)
        .map_err(ManifestError::from)?;
    let sample = Sample::new(loaded.params.clone(), points, tolerance);

    let mut report = Report {
        command,
        manifest_sha256: sha256.to_string(),
        conventions: Conventions::new(opts.d_convention),
        sampling,
        tolerance,
        constants: None,
        constant_labels: Vec::new(),
        structure: None,
        fit: None,
        checks: Vec::new(),
        diagnostics: Vec::new(),
        pass: false,
        elapsed_seconds: 0.0,
    };

    let all = command == Command::All;
    if command == Command::CheckStructure || (all && loaded.structure.is_some()) {
        structure_suite(&loaded, &sample, opts.d_convention, &mut report)?;
    }
    let wants_soliton = matches!(
        command,
        Command::CheckSoliton | Command::CheckTheorem | Command::Fit
    ) || (all && (loaded.scalars.is_some() || loaded.vectors.is_some()));
    if wants_soliton {
        let k = resolve_constants(&loaded, &sample, command, &mut report)?;
        report.constants = Some(k);
        report.constant_labels = classify_constants(k, loaded.chart.dim())
            .into_iter()
            .map(|l| l.as_str().to_string())
            .collect();
        if command != Command::CheckTheorem {
            soliton_suite(&loaded, k, &sample, &mut report)?;
        }
        if command == Command::CheckTheorem
            || (all && loaded.structure.is_some() && loaded.scalars.is_some())
        {
            theorem_suite(&loaded, k, &sample, &mut report)?;
        }
    }

    report.pass = !report.checks.is_empty() && report.checks.iter().all(|c| c.pass);
    for c in &report.checks {
        if let Some(PointFailure { point, message }) = c.failures.first() {
            report.diagnostics.push(format!(
                "{}: {} sample point(s) hit a domain error, first at {point:?}: {message}",
                c.name,
                c.failures.len()
            ));
        }
    }
    report.elapsed_seconds = start.elapsed().as_secs_f64();
    Ok(report)
}

fn structure_suite(
    loaded: &Loaded,
    sample: &Sample,
    conv: DConvention,
    report: &mut Report,
) -> Result<(), RunError> {
    let s = loaded
        .structure
        .as_ref()
        .ok_or(RunError::Missing("check-structure", "structure"))?;
    let sr = s.classify(sample, conv)?;
    report.structure = Some(sr.flags);
    report.checks.extend(sr.residuals);
    report.checks.extend(sr.identities.checks);
    report.diagnostics.extend(sr.diagnostics);
    Ok(())
}

/// Numeric constants from the manifest, with any `"fit"` entries filled in
/// by least squares on the gradient-form equation.
fn resolve_constants(
    loaded: &Loaded,
    sample: &Sample,
    command: Command,
    report: &mut Report,
) -> Result<Constants, RunError> {
    let fixed = match &loaded.constants {
        Ok(c) => *c,
        Err(e) => {
            return Err(RunError::Manifest(ManifestError::Constant {
                name: "constants".to_string(),
                reason: e.to_string(),
            }))
        }
    };
    let needs_fit = fixed.iter().any(Option::is_none);
    if !needs_fit && command != Command::Fit {
        return Ok(Constants::from_array(fixed.map(|c| c.unwrap_or_default())));
    }
    let (f1, f2) = loaded
        .scalars
        .as_ref()
        .ok_or(RunError::Missing("fit", "scalars"))?;
    let design = Design::assemble(&loaded.geometry, f1, f2, &loaded.params, &sample.points)?;
    let fit = design.solve_with(fixed);
    if fit.rank < fit.free.len() {
        report.diagnostics.push(format!(
            "fit is rank deficient ({} of {}); reporting the minimum-norm solution, null space {:?}",
            fit.rank,
            fit.free.len(),
            fit.null_space
        ));
    }
    if fit.skipped_points > 0 {
        report.diagnostics.push(format!(
            "fit skipped {} sample point(s) with domain errors",
            fit.skipped_points
        ));
    }
    report.fit = Some(FitSummary::from(&fit));
    Ok(fit.solution)
}

fn soliton_suite(
    loaded: &Loaded,
    k: Constants,
    sample: &Sample,
    report: &mut Report,
) -> Result<(), RunError> {
    let mut any = false;
    if let Some((f1, f2)) = loaded.resolved_scalars(k) {
        let spec = SolitonSpec::gradient(loaded.geometry.clone(), f1, f2, k);
        report.checks.push(spec.check(sample)?);
        any = true;
    }
    if let Some((x1, x2)) = &loaded.vectors {
        let spec = SolitonSpec::vector(loaded.geometry.clone(), x1.clone(), x2.clone(), k);
        report.checks.push(spec.check(sample)?);
        any = true;
    }
    if !any {
        return Err(RunError::Missing("check-soliton", "scalars or vectors"));
    }
    Ok(())
}

fn theorem_suite(
    loaded: &Loaded,
    k: Constants,
    sample: &Sample,
    report: &mut Report,
) -> Result<(), RunError> {
    let s = loaded
        .structure
        .as_ref()
        .ok_or(RunError::Missing("check-theorem", "structure"))?;
    let (f1, f2) = loaded
        .resolved_scalars(k)
        .ok_or(RunError::Missing("check-theorem", "scalars"))?;
    let ids = theorem_identities(s, &f1, &f2, k);
    report.checks.extend(sample.run(s.geometry(), &ids)?);
    Ok(())
}
