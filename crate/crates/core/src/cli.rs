//! Command-line front end. Every command that writes a file also writes a
//! `<file>.manifest.json` recording how it was produced.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use crate::distortion::{certify_pairs, distortion_of_map, best_four_point_bound, Certification, DistortionError, DistortionReport};
use crate::lemma_lab::{circle_embed_fs, reports_markdown, rose_flat_embedding, verify_all, write_reports_csv, LemmaError};
use crate::optimizer::{min_distortion_search, quad_growth_study, write_quad_study_csv, EmbeddingProblem, OptimizerConfig, OptimizerError};
use crate::polygon::{
    build_example, random_metric_triangle, sample_polygon, sample_triangle, stress_parameters, Example, FiniteMetricTriangle,
    MetricPolygon, PolygonError, PolygonJson, SamplePoint, SampledPolygon,
};
use crate::tripodal::{gromov_products, read_embedding_csv, tripodal_images, write_embedding_csv, PlanarPoint, TripodalError};

/// The sharp upper bound on tripodal distortion.
pub fn tripodal_bound() -> f64 {
    4.0 * (7.0f64 / 3.0).sqrt()
}

const BOUND_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("unknown space `{0}`: not an example name or a readable polygon file")]
    UnknownSpace(String),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Polygon(#[from] PolygonError),
    #[error(transparent)]
    Tripodal(#[from] TripodalError),
    #[error(transparent)]
    Distortion(#[from] DistortionError),
    #[error(transparent)]
    Optimizer(#[from] OptimizerError),
    #[error(transparent)]
    Lemma(#[from] LemmaError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// How an output file was produced.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: serde_json::Value,
    pub seed: Option<u64>,
    pub version: String,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
}

#[derive(Parser)]
#[command(name = "polyembed", version, about = "Planar embeddings of metric triangles and their distortion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the built-in example spaces or export one as polygon JSON.
    Examples(ExamplesArgs),
    /// Write the sampled images of a space under an embedding as CSV.
    Embed(EmbedArgs),
    /// Measure the distortion of an embedding.
    Distortion(DistortionArgs),
    /// Check every built-in auxiliary inequality on a refined grid.
    VerifyLemmas(LemmaArgs),
    /// Check every sampled pair of a triangle against its case interval.
    VerifyCases(CasesArgs),
    /// Certify the tripodal bound on random triangles.
    Stress(StressArgs),
    /// Search for a low-distortion embedding.
    Optimize(OptimizeArgs),
    /// Track the best distortion of the chorded quadrilateral as its chords shrink.
    QuadStudy(QuadArgs),
    /// Draw an embedding CSV as SVG.
    ExportSvg(SvgArgs),
}

#[derive(Args, Serialize)]
struct ExamplesArgs {
    #[command(subcommand)]
    action: ExamplesAction,
}

#[derive(Subcommand, Serialize)]
enum ExamplesAction {
    List,
    Build {
        name: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, PartialEq, Eq)]
enum Method {
    /// Tripodal embedding of a triangle.
    Tripodal,
    /// Flattened-circle family; requires the circle.
    Fs,
    /// Petals onto equilateral triangles; requires the rose.
    Flat,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
enum ReportFormat {
    Json,
    Md,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
enum TableFormat {
    Csv,
    Md,
}

#[derive(Args, Serialize)]
struct EmbedArgs {
    /// Example name or polygon JSON file.
    #[arg(long)]
    space: String,
    #[arg(long, value_enum, default_value = "tripodal")]
    method: Method,
    /// Parameter of the flattened-circle family.
    #[arg(long, default_value_t = 0.0)]
    s: f64,
    /// Samples per side.
    #[arg(long, default_value_t = 5)]
    m: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct DistortionArgs {
    #[arg(long)]
    space: String,
    #[arg(long, value_enum, default_value = "tripodal")]
    method: Method,
    #[arg(long, default_value_t = 0.0)]
    s: f64,
    #[arg(long, default_value_t = 5)]
    m: usize,
    #[arg(long, value_enum, default_value = "json")]
    format: ReportFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct LemmaArgs {
    /// Grid points per axis and level.
    #[arg(long, default_value_t = 48)]
    res: usize,
    #[arg(long, default_value_t = 8)]
    levels: usize,
    #[arg(long, value_enum, default_value = "csv")]
    format: TableFormat,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct CasesArgs {
    #[arg(long)]
    space: String,
    #[arg(long, default_value_t = 5)]
    m: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct StressArgs {
    #[arg(long, default_value_t = 200)]
    count: u64,
    /// First seed; triangle k uses seed + k.
    #[arg(long)]
    seed: u64,
    /// Most chords per triangle.
    #[arg(long, default_value_t = 4)]
    chords: usize,
    #[arg(long, default_value_t = 8)]
    m: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct OptimizeArgs {
    #[arg(long)]
    space: String,
    #[arg(long, default_value_t = 5)]
    m: usize,
    #[arg(long, default_value_t = 20)]
    restarts: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 2000)]
    iterations: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write the best embedding as CSV.
    #[arg(long)]
    embedding_out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct QuadArgs {
    #[arg(long, value_delimiter = ',', default_value = "0.5,0.25,0.1")]
    eps: Vec<f64>,
    #[arg(long, default_value_t = 6)]
    m: usize,
    #[arg(long, default_value_t = 30)]
    restarts: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 2000)]
    iterations: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize)]
struct SvgArgs {
    #[arg(long)]
    embedding: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Width of the drawing in pixels.
    #[arg(long, default_value_t = 600.0)]
    width: f64,
}

/// Parses `argv` (program name first), runs the command and returns the
/// exit status: 0 when every assertion holds, 1 when one fails, 2 on errors.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    configure_threads();
    match dispatch(cli.command) {
        Ok(failures) if failures.is_empty() => 0,
        Ok(failures) => {
            for f in failures {
                eprintln!("FAIL {f}");
            }
            1
        }
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn configure_threads() {
    if let Some(n) = std::env::var("POLYEMBED_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // a pool may already exist when run is called repeatedly in one process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

type Failures = Vec<String>;

fn dispatch(cmd: Command) -> Result<Failures, CliError> {
    match cmd {
        Command::Examples(a) => cmd_examples(a),
        Command::Embed(a) => cmd_embed(a),
        Command::Distortion(a) => cmd_distortion(a),
        Command::VerifyLemmas(a) => cmd_lemmas(a),
        Command::VerifyCases(a) => cmd_cases(a),
        Command::Stress(a) => cmd_stress(a),
        Command::Optimize(a) => cmd_optimize(a),
        Command::QuadStudy(a) => cmd_quad(a),
        Command::ExportSvg(a) => cmd_svg(a),
    }
}

/// Resolves an example name or a polygon JSON file.
pub fn load_space(spec: &str) -> Result<MetricPolygon, CliError> {
    if let Ok(ex) = spec.parse::<Example>() {
        return Ok(build_example(&ex)?);
    }
    let path = Path::new(spec);
    if !path.is_file() {
        return Err(CliError::UnknownSpace(spec.to_string()));
    }
    let json: PolygonJson = serde_json::from_str(&fs::read_to_string(path)?)?;
    Ok(MetricPolygon::from_json(&json)?)
}

fn input_of(spec: &str) -> Vec<String> {
    if spec.parse::<Example>().is_ok() {
        Vec::new()
    } else {
        vec![spec.to_string()]
    }
}

fn emit<A: Serialize>(
    out: Option<&Path>,
    bytes: &[u8],
    command: &str,
    args: &A,
    seed: Option<u64>,
    inputs: Vec<String>,
) -> Result<(), CliError> {
    match out {
        None => {
            std::io::stdout().write_all(bytes)?;
        }
        Some(path) => {
            fs::write(path, bytes)?;
            write_manifest(path, command, args, seed, inputs)?;
        }
    }
    Ok(())
}

fn manifest_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn write_manifest<A: Serialize>(path: &Path, command: &str, args: &A, seed: Option<u64>, inputs: Vec<String>) -> Result<(), CliError> {
    let manifest = RunManifest {
        command: command.to_string(),
        parameters: serde_json::to_value(args)?,
        seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        inputs,
        outputs: vec![path.display().to_string()],
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(manifest_path(path), text)?;
    Ok(())
}

fn to_json_bytes<T: Serialize>(v: &T) -> Result<Vec<u8>, CliError> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s.into_bytes())
}

fn cmd_examples(a: ExamplesArgs) -> Result<Failures, CliError> {
    match &a.action {
        ExamplesAction::List => {
            for name in Example::all_names() {
                println!("{name}");
            }
        }
        ExamplesAction::Build { name, out } => {
            let poly = load_space(name)?;
            let bytes = to_json_bytes(&poly.to_json())?;
            emit(out.as_deref(), &bytes, "examples build", &a, None, Vec::new())?;
        }
    }
    Ok(Vec::new())
}

/// Sample points and their images under `method`.
pub struct Embedded {
    pub samples: SampledPolygon,
    pub images: Vec<PlanarPoint>,
    /// Present for the tripodal method.
    pub triangle: Option<FiniteMetricTriangle>,
}

fn embed_space(poly: &MetricPolygon, method: Method, s: f64, m: usize) -> Result<Embedded, CliError> {
    match method {
        Method::Tripodal => {
            let t = sample_triangle(poly, m)?;
            let images = tripodal_images(&t)?;
            Ok(Embedded { samples: t.as_polygon().clone(), images, triangle: Some(t) })
        }
        Method::Fs => {
            let samples = sample_polygon(poly, m)?;
            let images = circle_images(&samples, s)?;
            Ok(Embedded { samples, images, triangle: None })
        }
        Method::Flat => {
            let samples = sample_polygon(poly, m)?;
            let images = rose_flat_embedding(&samples)?;
            Ok(Embedded { samples, images, triangle: None })
        }
    }
}

/// Images of circle samples under the flattened-circle map with parameter `s`.
pub fn circle_images(samples: &SampledPolygon, s: f64) -> Result<Vec<PlanarPoint>, CliError> {
    let third = 2.0 * PI / 3.0;
    if samples.side_count() != 3 || samples.side_lengths.iter().any(|l| (l - third).abs() > 1e-9) {
        return Err(CliError::Usage("the fs method needs the circle: three sides of length 2pi/3".into()));
    }
    samples
        .points
        .iter()
        .map(|p| Ok(circle_embed_fs(s, p.side as f64 * third + p.arc)?))
        .collect()
}

fn cmd_embed(a: EmbedArgs) -> Result<Failures, CliError> {
    let poly = load_space(&a.space)?;
    let e = embed_space(&poly, a.method, a.s, a.m)?;
    let mut buf = Vec::new();
    write_embedding_csv(&e.samples.points, &e.images, &mut buf)?;
    emit(a.out.as_deref(), &buf, "embed", &a, None, input_of(&a.space))?;
    Ok(Vec::new())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CaseSummary {
    pub case: u8,
    pub pairs: u64,
    pub min_ratio_sq: Option<f64>,
    pub max_ratio_sq: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct CertificationSummary {
    pub pairs_checked: u64,
    pub failure_count: u64,
    pub per_case: Vec<CaseSummary>,
    pub failures: Vec<String>,
}

fn summarize(c: &Certification, points: &[SamplePoint]) -> CertificationSummary {
    CertificationSummary {
        pairs_checked: c.pairs_checked,
        failure_count: c.failure_count,
        per_case: c
            .per_case
            .iter()
            .enumerate()
            .map(|(k, s)| CaseSummary {
                case: k as u8 + 1,
                pairs: s.pairs,
                min_ratio_sq: (s.pairs > 0).then_some(s.min_ratio_sq),
                max_ratio_sq: (s.pairs > 0).then_some(s.max_ratio_sq),
            })
            .collect(),
        failures: c
            .failures
            .iter()
            .map(|f| {
                format!(
                    "pair ({}, {}) case {} squared ratio {}",
                    points[f.pair[0]].label(),
                    points[f.pair[1]].label(),
                    f.label.case,
                    f.check.ratio_sq
                )
            })
            .collect(),
    }
}

#[derive(Serialize)]
struct DistortionOutput {
    report: DistortionReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    certification: Option<CertificationSummary>,
}

fn cmd_distortion(a: DistortionArgs) -> Result<Failures, CliError> {
    let poly = load_space(&a.space)?;
    let e = embed_space(&poly, a.method, a.s, a.m)?;
    let grid = e.samples.grid_step;
    let report = distortion_of_map(&e.samples, &e.images, grid)?;
    let mut failures = Vec::new();
    let certification = match &e.triangle {
        Some(t) => {
            let cert = certify_pairs(t, &gromov_products(t)?, &e.images)?;
            let summary = summarize(&cert, &t.points);
            failures.extend(summary.failures.iter().cloned());
            if cert.failure_count > summary.failures.len() as u64 {
                failures.push(format!("{} case failures in total", cert.failure_count));
            }
            if report.lip > tripodal_bound() + BOUND_TOL {
                failures.push(format!("distortion {} exceeds {}", report.lip, tripodal_bound()));
            }
            Some(summary)
        }
        None => None,
    };
    let bytes = match a.format {
        ReportFormat::Json => to_json_bytes(&DistortionOutput { report, certification })?,
        ReportFormat::Md => {
            let mut s = report.to_markdown();
            if let Some(c) = &certification {
                s.push_str("\n| case | pairs | min ratio² | max ratio² |\n|---|---|---|---|\n");
                for k in &c.per_case {
                    let f = |v: Option<f64>| v.map_or("-".to_string(), crate::polygon::fmt_sig);
                    let _ = writeln!(s, "| {} | {} | {} | {} |", k.case, k.pairs, f(k.min_ratio_sq), f(k.max_ratio_sq));
                }
                let _ = writeln!(s, "\ncase failures: {}", c.failure_count);
            }
            s.into_bytes()
        }
    };
    emit(a.out.as_deref(), &bytes, "distortion", &a, None, input_of(&a.space))?;
    Ok(failures)
}

fn cmd_lemmas(a: LemmaArgs) -> Result<Failures, CliError> {
    let reports = verify_all(a.res, a.levels)?;
    let bytes = match a.format {
        TableFormat::Csv => {
            let mut buf = Vec::new();
            write_reports_csv(&reports, &mut buf)?;
            buf
        }
        TableFormat::Md => reports_markdown(&reports).into_bytes(),
    };
    emit(a.out.as_deref(), &bytes, "verify-lemmas", &a, None, Vec::new())?;
    Ok(reports
        .iter()
        .filter(|r| !r.pass)
        .map(|r| format!("{}: claimed {} grid {} at {:?}", r.id, r.claimed_max, r.grid_max, r.grid_argmax))
        .collect())
}

fn cmd_cases(a: CasesArgs) -> Result<Failures, CliError> {
    let poly = load_space(&a.space)?;
    let t = sample_triangle(&poly, a.m)?;
    let images = tripodal_images(&t)?;
    let cert = certify_pairs(&t, &gromov_products(&t)?, &images)?;
    let summary = summarize(&cert, &t.points);
    emit(a.out.as_deref(), &to_json_bytes(&summary)?, "verify-cases", &a, None, input_of(&a.space))?;
    let mut failures = summary.failures;
    if cert.failure_count > failures.len() as u64 {
        failures.push(format!("{} case failures in total", cert.failure_count));
    }
    Ok(failures)
}

/// Outcome of certifying one random triangle.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StressCase {
    pub seed: u64,
    pub sides: [f64; 3],
    pub chords: usize,
    pub lip: f64,
    pub case_failures: u64,
    pub first_failure: Option<String>,
}

impl StressCase {
    pub fn pass(&self) -> bool {
        self.case_failures == 0 && self.lip <= tripodal_bound() + BOUND_TOL
    }
}

/// Builds the random triangle for `seed` and certifies its tripodal embedding.
pub fn stress_case(seed: u64, max_chords: usize, m: usize) -> Result<StressCase, CliError> {
    let (sides, chords) = stress_parameters(seed, max_chords);
    let t = random_metric_triangle(sides, chords, m, seed)?;
    let images = tripodal_images(&t)?;
    let report = distortion_of_map(&t, &images, t.grid_step)?;
    let cert = certify_pairs(&t, &gromov_products(&t)?, &images)?;
    let first_failure = summarize(&cert, &t.points).failures.into_iter().next();
    Ok(StressCase {
        seed,
        sides,
        chords,
        lip: report.lip,
        case_failures: cert.failure_count,
        first_failure,
    })
}

fn cmd_stress(a: StressArgs) -> Result<Failures, CliError> {
    let mut buf = csv::Writer::from_writer(Vec::new());
    buf.write_record(["seed", "pq", "qr", "rp", "chords", "lip", "caseFailures", "pass"])?;
    let mut failures = Vec::new();
    for k in 0..a.count {
        let c = stress_case(a.seed + k, a.chords, a.m)?;
        buf.write_record([
            c.seed.to_string(),
            crate::polygon::fmt_num(c.sides[0]),
            crate::polygon::fmt_num(c.sides[1]),
            crate::polygon::fmt_num(c.sides[2]),
            c.chords.to_string(),
            crate::polygon::fmt_num(c.lip),
            c.case_failures.to_string(),
            c.pass().to_string(),
        ])?;
        if !c.pass() {
            failures.push(format!(
                "seed {}: distortion {} with {} case failures{}",
                c.seed,
                c.lip,
                c.case_failures,
                c.first_failure.map(|f| format!(", first {f}")).unwrap_or_default()
            ));
        }
    }
    let bytes = buf.into_inner().map_err(|e| CliError::Io(e.into_error()))?;
    emit(a.out.as_deref(), &bytes, "stress", &a, Some(a.seed), Vec::new())?;
    Ok(failures)
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct OptimizeOutput {
    report: DistortionReport,
    four_point_lb: f64,
    best_candidate: String,
    points: usize,
    restarts: Vec<TraceSummary>,
}

#[derive(Serialize)]
#[serde(rename_all = "camelCase")]
struct TraceSummary {
    kind: String,
    start: f64,
    end: f64,
    sweeps: usize,
}

fn cmd_optimize(a: OptimizeArgs) -> Result<Failures, CliError> {
    let poly = load_space(&a.space)?;
    let samples = sample_polygon(&poly, a.m)?;
    let (problem, map) = EmbeddingProblem::from_space(&samples)?;
    let hint = if samples.side_count() == 3 {
        let t = FiniteMetricTriangle::try_from(samples.clone())?;
        let images = tripodal_images(&t)?;
        let mut h = vec![PlanarPoint::default(); problem.len()];
        for (i, &k) in map.iter().enumerate().rev() {
            h[k] = images[i];
        }
        Some(h)
    } else {
        None
    };
    let cfg = OptimizerConfig {
        restarts: a.restarts,
        iterations: a.iterations,
        seed: a.seed,
        ..OptimizerConfig::default()
    };
    let found = min_distortion_search(&problem, &cfg, hint.as_deref())?;
    let lb = best_four_point_bound(&problem.matrix, a.seed)?;
    let out = OptimizeOutput {
        report: found.report.clone(),
        four_point_lb: lb.bound,
        best_candidate: format!("{:?}", found.traces[found.best_candidate].kind),
        points: problem.len(),
        restarts: found
            .traces
            .iter()
            .map(|t| TraceSummary {
                kind: format!("{:?}", t.kind),
                start: t.objective[0],
                end: *t.objective.last().expect("nonempty trace"),
                sweeps: t.sweeps,
            })
            .collect(),
    };
    emit(a.out.as_deref(), &to_json_bytes(&out)?, "optimize", &a, Some(a.seed), input_of(&a.space))?;
    if let Some(path) = &a.embedding_out {
        let images: Vec<PlanarPoint> = map.iter().map(|&k| found.best[k]).collect();
        let mut buf = Vec::new();
        write_embedding_csv(&samples.points, &images, &mut buf)?;
        fs::write(path, &buf)?;
        write_manifest(path, "optimize", &a, Some(a.seed), input_of(&a.space))?;
    }
    let mut failures = Vec::new();
    if found.report.lip < lb.bound - 1e-6 {
        failures.push(format!("distortion {} below the four-point bound {}", found.report.lip, lb.bound));
    }
    Ok(failures)
}

fn cmd_quad(a: QuadArgs) -> Result<Failures, CliError> {
    let cfg = OptimizerConfig {
        restarts: a.restarts,
        iterations: a.iterations,
        seed: a.seed,
        ..OptimizerConfig::default()
    };
    let rows = quad_growth_study(&a.eps, a.m, &cfg)?;
    let mut buf = Vec::new();
    write_quad_study_csv(&rows, &mut buf)?;
    emit(a.out.as_deref(), &buf, "quad-study", &a, Some(a.seed), Vec::new())?;
    Ok(rows
        .iter()
        .filter(|r| r.lip_estimate < r.four_point_lb - 1e-6)
        .map(|r| format!("epsilon {}: estimate {} below four-point bound {}", r.epsilon, r.lip_estimate, r.four_point_lb))
        .collect())
}

/// Drawing options for [`export_svg`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvgStyle {
    pub width: f64,
}

impl Default for SvgStyle {
    fn default() -> Self {
        Self { width: 600.0 }
    }
}

fn coord(v: f64) -> String {
    let v = if v.abs() < 5e-7 { 0.0 } else { v };
    format!("{v:.6}")
}

/// Renders one polyline per side in arc order and a labeled dot per named
/// vertex, in a view box fitted to the images with a 5% margin.
pub fn export_svg(points: &[SamplePoint], images: &[PlanarPoint], style: &SvgStyle) -> Result<String, CliError> {
    if images.is_empty() || images.len() != points.len() {
        return Err(CliError::Usage("embedding is empty or inconsistent".into()));
    }
    if images.iter().any(|z| !(z.x.is_finite() && z.y.is_finite())) {
        return Err(CliError::Usage("embedding has non-finite coordinates".into()));
    }
    let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
    for z in images {
        x0 = x0.min(z.x);
        x1 = x1.max(z.x);
        // the drawing flips y so the plane keeps its orientation
        y0 = y0.min(-z.y);
        y1 = y1.max(-z.y);
    }
    let span = (x1 - x0).max(y1 - y0);
    let span = if span > 0.0 { span } else { 1.0 };
    let margin = 0.05 * span;
    let (vx, vy, vw, vh) = (x0 - margin, y0 - margin, x1 - x0 + 2.0 * margin, y1 - y0 + 2.0 * margin);
    let height = style.width * vh / vw;
    let mut sides: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, p) in points.iter().enumerate() {
        sides.entry(p.side).or_default().push(i);
    }
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" viewBox="{} {} {} {}">"#,
        coord(style.width),
        coord(height),
        coord(vx),
        coord(vy),
        coord(vw),
        coord(vh)
    );
    let stroke = 0.006 * span;
    let colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"];
    for (k, (side, idx)) in sides.iter_mut().enumerate() {
        idx.sort_by(|&a, &b| points[a].arc.total_cmp(&points[b].arc));
        let pts: Vec<String> = idx.iter().map(|&i| format!("{},{}", coord(images[i].x), coord(-images[i].y))).collect();
        let _ = writeln!(
            s,
            r#"  <polyline data-side="{}" fill="none" stroke="{}" stroke-width="{}" points="{}"/>"#,
            side + 1,
            colors[k % colors.len()],
            coord(stroke),
            pts.join(" ")
        );
    }
    let mut seen = std::collections::BTreeSet::new();
    for (p, z) in points.iter().zip(images) {
        let Some(label) = &p.vertex else { continue };
        if !seen.insert(label.clone()) {
            continue;
        }
        let _ = writeln!(
            s,
            r#"  <circle cx="{}" cy="{}" r="{}" fill="black"/>"#,
            coord(z.x),
            coord(-z.y),
            coord(2.0 * stroke)
        );
        let _ = writeln!(
            s,
            r#"  <text x="{}" y="{}" font-size="{}">{}</text>"#,
            coord(z.x + 3.0 * stroke),
            coord(-z.y - 3.0 * stroke),
            coord(0.04 * span),
            escape(label)
        );
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn cmd_svg(a: SvgArgs) -> Result<Failures, CliError> {
    let (points, images) = read_embedding_csv(fs::File::open(&a.embedding)?)?;
    let svg = export_svg(&points, &images, &SvgStyle { width: a.width })?;
    fs::write(&a.out, &svg)?;
    write_manifest(&a.out, "export-svg", &a, None, vec![a.embedding.display().to_string()])?;
    Ok(Vec::new())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn heart_embedding() -> (Vec<SamplePoint>, Vec<PlanarPoint>) {
        let e = embed_space(&build_example(&Example::Heart).unwrap(), Method::Tripodal, 0.0, 5).unwrap();
        (e.samples.points, e.images)
    }

    #[test]
    fn heart_svg_structure() {
        let (p, z) = heart_embedding();
        let svg = export_svg(&p, &z, &SvgStyle::default()).unwrap();
        assert_eq!(svg.matches("<polyline").count(), 3);
        assert!(svg.matches("<text").count() >= 12);
        assert_eq!(svg, export_svg(&p, &z, &SvgStyle::default()).unwrap());
    }

    #[test]
    fn empty_svg_is_rejected() {
        assert!(export_svg(&[], &[], &SvgStyle::default()).is_err());
    }

    #[test]
    fn fs_needs_the_circle() {
        let heart = build_example(&Example::Heart).unwrap();
        assert!(embed_space(&heart, Method::Fs, 0.1, 3).is_err());
        let circle = build_example(&Example::Circle).unwrap();
        let e = embed_space(&circle, Method::Fs, 0.0, 7).unwrap();
        for (p, z) in e.samples.points.iter().zip(&e.images) {
            let th = p.side as f64 * 2.0 * PI / 3.0 + p.arc;
            assert!((z.x - th.cos()).abs() < 1e-12 && (z.y - th.sin()).abs() < 1e-12);
        }
    }

    #[test]
    fn unknown_space() {
        assert!(matches!(load_space("no-such-space"), Err(CliError::UnknownSpace(_))));
    }

    #[test]
    fn stress_case_is_reproducible() {
        let a = stress_case(5, 3, 5).unwrap();
        assert!(a.pass());
        assert_eq!(a, stress_case(5, 3, 5).unwrap());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(run(["polyembed", "examples", "list"]), 0);
        assert_eq!(run(["polyembed", "bogus"]), 2);
        assert_eq!(run(["polyembed", "embed", "--space", "nowhere", "--out", "/dev/null"]), 2);
    }
}
