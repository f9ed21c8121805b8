//! `hscene` command line.
//!
//! Exit status: 0 on success, 2 when an input fails validation, 1 on any
//! other error.

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use hscene_core::geometry::{backproject, distance_matrix, object_centroid, DistanceMatrix, Point3};
use hscene_core::metrics::{
    eval_distance_predictions, eval_graph, error_stats, pair_answers, DistanceBand, GraphBatch, GraphEvalReport,
};
use hscene_core::perception::{perceive, perception_stats, ImageInfo, PerceptionResult};
use hscene_core::scenegraph::{serialize_graph, validate_document, ParseOptions};
use hscene_core::scenevqa::{dataset_stats, gen_distance_qa, gen_graph_qa, QARecord, TemplateBank};
use hscene_core::SceneGraph;

use crate::backends::{serve_mock, BackendClient, HttpPerception, MockScript};
use crate::config::Config;
use crate::io::{read_depth, read_json, read_jsonl, read_masks, read_toml, write_jsonl};

/// Marks an error as an input-validation failure (exit status 2).
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct Invalid(pub String);

fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Invalid(msg.into()).into())
}

#[derive(Debug, Parser)]
#[command(name = "hscene", version, about = "Hierarchical indoor scene graphs: parse, evaluate, perceive, generate, review")]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a scene-graph document and print its canonical form.
    ParseValidate(ParseValidateArgs),
    /// Score graph predictions; JSONL of {id, gt_graph, prediction}.
    EvalGraph(EvalGraphArgs),
    /// Score distance answers; JSONL of {id, gt_meters, prediction}.
    EvalDistance(EvalDistanceArgs),
    /// Run hierarchical detection on one image against model backends.
    Perceive(PerceiveArgs),
    /// Pairwise object distances from a depth map and object masks.
    Distances(DistancesArgs),
    /// Templated distance questions from a distance matrix.
    GenDistvqa(GenDistvqaArgs),
    /// Graph questions from JSONL of {image, graph}.
    GenGraphvqa(GenGraphvqaArgs),
    /// Summaries of dataset records or perception results.
    Stats(StatsArgs),
    /// Run the review service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct ParseValidateArgs {
    /// Document path, or `-` for stdin.
    pub input: PathBuf,
    /// Reject repeated labels instead of suffixing them.
    #[arg(long)]
    pub strict: bool,
}

#[derive(Debug, Args)]
pub struct EvalGraphArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Also print one report per record.
    #[arg(long)]
    pub per_sample: bool,
}

#[derive(Debug, Args)]
pub struct EvalDistanceArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Acceptance band in percent, `LOW:HIGH`; repeatable. Defaults to 80:120 and 50:200.
    #[arg(long = "band", value_parser = parse_band)]
    pub bands: Vec<DistanceBand>,
}

#[derive(Debug, Args)]
pub struct PerceiveArgs {
    #[arg(long)]
    pub image: PathBuf,
    /// Backend base URL; overrides the config.
    #[arg(long)]
    pub backends: Option<String>,
    /// Serve this mock script locally and use it as the backend.
    #[arg(long)]
    pub mock: Option<PathBuf>,
    #[arg(long)]
    pub min_score: Option<f64>,
    #[arg(long)]
    pub min_gap: Option<f64>,
    #[arg(long)]
    pub max_depth: Option<u32>,
}

#[derive(Debug, Args)]
pub struct DistancesArgs {
    /// 16-bit PGM, or raw little-endian f32 with a `.json` sidecar.
    #[arg(long)]
    pub depth: PathBuf,
    /// JSON {objects: [{label, mask: RLE}]}.
    #[arg(long)]
    pub masks: PathBuf,
    #[arg(long)]
    pub depth_scale: Option<f32>,
}

#[derive(Debug, Args)]
pub struct GenDistvqaArgs {
    /// Image reference written into each record.
    #[arg(long)]
    pub image: String,
    /// Output of `distances`.
    #[arg(long)]
    pub distances: PathBuf,
    /// Template bank TOML with `single`, `dual`, `triple` lists.
    #[arg(long)]
    pub templates: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenGraphvqaArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Dataset JSONL.
    #[arg(long, conflicts_with = "perception", required_unless_present = "perception")]
    pub records: Option<PathBuf>,
    /// Perception result JSON files.
    #[arg(long, num_args = 1..)]
    pub perception: Vec<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub store: PathBuf,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: String,
}

fn parse_band(s: &str) -> Result<DistanceBand, String> {
    let (lo, hi) = s.split_once(':').ok_or("expected LOW:HIGH")?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("{e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("{e}"))?;
    DistanceBand::new(lo, hi).map_err(|e| e.to_string())
}

/// Parse `args` (including the program name) and run; returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let mut out = io::stdout().lock();
    match execute(cli, &mut out) {
        Ok(code) => code,
        Err(e) => {
            let _ = out.flush();
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Invalid>().is_some() {
                2
            } else {
                1
            }
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<Config> {
    Config::load(path).map_err(|e| Invalid(format!("config: {e:#}")).into())
}

/// Run a parsed command, writing results to `out`. Returns the exit status.
pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<i32> {
    let cfg = load_config(cli.config.as_deref())?;
    match cli.command {
        Command::ParseValidate(a) => parse_validate(&a, out),
        Command::EvalGraph(a) => eval_graph_cmd(&a, out),
        Command::EvalDistance(a) => eval_distance_cmd(&a, out),
        Command::Perceive(a) => perceive_cmd(&a, cfg, out),
        Command::Distances(a) => distances_cmd(&a, &cfg, out),
        Command::GenDistvqa(a) => gen_distvqa_cmd(&a, &cfg, out),
        Command::GenGraphvqa(a) => gen_graphvqa_cmd(&a, out),
        Command::Stats(a) => stats_cmd(&a, out),
        Command::Serve(a) => {
            crate::service::serve(&a.store, &a.bind)?;
            Ok(0)
        }
    }
}

fn print_json(out: &mut dyn Write, v: &impl Serialize) -> Result<()> {
    serde_json::to_writer_pretty(&mut *out, v)?;
    writeln!(out)?;
    Ok(())
}

fn read_input(path: &Path) -> Result<String> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        Ok(s)
    } else {
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
    }
}

fn parse_validate(a: &ParseValidateArgs, out: &mut dyn Write) -> Result<i32> {
    let text = read_input(&a.input)?;
    let opts = ParseOptions { strict_labels: a.strict };
    let report = validate_document(&text, opts);
    let errors: Vec<String> = report.errors.iter().map(ToString::to_string).collect();
    let canonical = if report.is_valid() {
        hscene_core::scenegraph::parse_graph_with(&text, opts).ok().map(|g| serialize_graph(&g))
    } else {
        None
    };
    print_json(
        out,
        &json!({
            "valid": report.is_valid(),
            "errors": errors,
            "warnings": report.warnings,
            "canonical": canonical,
        }),
    )?;
    Ok(if report.is_valid() { 0 } else { 2 })
}

/// A ground-truth graph given inline as JSON or as document text.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum GraphInput {
    Graph(Box<SceneGraph>),
    Text(String),
}

impl GraphInput {
    fn into_graph(self) -> Result<SceneGraph, String> {
        match self {
            GraphInput::Graph(g) => Ok(*g),
            GraphInput::Text(t) => hscene_core::scenegraph::parse_graph(&t).map_err(|e| e.to_string()),
        }
    }
}

#[derive(Debug, Deserialize)]
struct GraphSample {
    #[serde(default)]
    id: Option<String>,
    gt_graph: GraphInput,
    prediction: String,
}

#[derive(Debug, Serialize)]
struct SampleReport<'a> {
    id: &'a str,
    #[serde(flatten)]
    report: &'a GraphEvalReport,
}

fn read_samples<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    read_jsonl(path).map_err(|e| Invalid(format!("{e:#}")).into())
}

fn eval_graph_cmd(a: &EvalGraphArgs, out: &mut dyn Write) -> Result<i32> {
    let samples: Vec<GraphSample> = read_samples(&a.input)?;
    let mut batch = GraphBatch::default();
    let mut per_sample = Vec::new();
    for (i, s) in samples.into_iter().enumerate() {
        let id = s.id.unwrap_or_else(|| format!("#{}", i + 1));
        let gt = match s.gt_graph.into_graph() {
            Ok(g) => g,
            Err(e) => return invalid(format!("{id}: ground truth: {e}")),
        };
        let report = eval_graph(&gt, &s.prediction);
        batch.push(&report);
        per_sample.push((id, report));
    }
    let summary = batch.finish().map_err(|e| Invalid(e.to_string()))?;
    if a.per_sample {
        let rows: Vec<SampleReport> = per_sample
            .iter()
            .map(|(id, report)| SampleReport { id, report })
            .collect();
        print_json(out, &json!({"summary": summary, "samples": rows}))?;
    } else {
        print_json(out, &summary)?;
    }
    Ok(0)
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Meters {
    One(f64),
    Many(Vec<f64>),
}

#[derive(Debug, Deserialize)]
struct DistanceSample {
    #[serde(default)]
    id: Option<String>,
    gt_meters: Meters,
    prediction: String,
}

fn eval_distance_cmd(a: &EvalDistanceArgs, out: &mut dyn Write) -> Result<i32> {
    let samples: Vec<DistanceSample> = read_samples(&a.input)?;
    let mut pairs = Vec::new();
    for s in &samples {
        let gts = match &s.gt_meters {
            Meters::One(m) => vec![*m],
            Meters::Many(v) => v.clone(),
        };
        if gts.is_empty() {
            return invalid(format!("{}: empty gt_meters", s.id.as_deref().unwrap_or("?")));
        }
        pairs.extend(pair_answers(&gts, &s.prediction));
    }
    let bands = if a.bands.is_empty() {
        DistanceBand::defaults().to_vec()
    } else {
        a.bands.clone()
    };
    let report = eval_distance_predictions(&pairs, &bands).map_err(|e| Invalid(e.to_string()))?;
    let parsed: Vec<(f64, f64)> = pairs.iter().filter_map(|(g, p)| p.map(|p| (*g, p))).collect();
    let errors = error_stats(&parsed).ok();
    print_json(
        out,
        &json!({
            "count": report.count,
            "number_rate": report.number_rate,
            "bands": report.bands,
            "errors": errors,
        }),
    )?;
    Ok(0)
}

fn perceive_cmd(a: &PerceiveArgs, mut cfg: Config, out: &mut dyn Write) -> Result<i32> {
    if let Some(v) = a.min_score {
        cfg.perception.min_score = v;
    }
    if let Some(v) = a.min_gap {
        cfg.perception.min_gap = v;
    }
    if let Some(v) = a.max_depth {
        cfg.perception.max_depth = v;
    }
    cfg.perception.validate().map_err(|e| Invalid(format!("config: {e}")))?;

    let bytes = fs::read(&a.image).with_context(|| format!("reading {}", a.image.display()))?;
    let (width, height) = image::ImageReader::new(io::Cursor::new(&bytes))
        .with_guessed_format()?
        .into_dimensions()
        .map_err(|e| Invalid(format!("{}: {e}", a.image.display())))?;

    let mock = match &a.mock {
        Some(p) => Some(serve_mock(MockScript::load(p).map_err(|e| Invalid(format!("{e:#}")))?, "127.0.0.1:0")?),
        None => None,
    };
    let url = match (&mock, &a.backends, &cfg.backends.url) {
        (Some(m), _, _) => m.url(),
        (None, Some(u), _) | (None, None, Some(u)) => u.clone(),
        (None, None, None) => return invalid("no backend: pass --backends URL or --mock SCRIPT"),
    };
    let client = BackendClient::new(&url, cfg.backends.token.clone(), cfg.backends.policy())?;
    let image = ImageInfo {
        image: client.upload_blob(&bytes)?,
        width,
        height,
    };
    let mut backend = HttpPerception { client: &client };
    match perceive(&image, &cfg.perception, &mut backend) {
        Ok(result) => {
            print_json(out, &result)?;
            Ok(0)
        }
        Err(e) => {
            print_json(out, &e.partial)?;
            Err(anyhow!("perception stopped: {}", e.source))
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct DistancesOutput {
    pub centroids: Vec<(String, Point3)>,
    #[serde(flatten)]
    pub matrix: DistanceMatrix,
}

fn distances_cmd(a: &DistancesArgs, cfg: &Config, out: &mut dyn Write) -> Result<i32> {
    let scale = a.depth_scale.or(cfg.geometry.depth_scale);
    let depth = read_depth(&a.depth, scale).map_err(|e| Invalid(format!("{e:#}")))?;
    let masks = read_masks(&a.masks).map_err(|e| Invalid(format!("{e:#}")))?;
    let k = cfg.geometry.intrinsics(depth.width(), depth.height())?;
    let cloud = backproject(&depth, &k)?;
    let opts = cfg.geometry.centroid_options();
    let mut centroids = Vec::with_capacity(masks.len());
    for (label, mask) in &masks {
        let c = object_centroid(&cloud, mask, opts).with_context(|| format!("centroid of {label}"))?;
        centroids.push((label.clone(), c));
    }
    let matrix = distance_matrix(&centroids)?;
    print_json(out, &DistancesOutput { centroids, matrix })?;
    Ok(0)
}

fn write_records(path: Option<&Path>, records: &[QARecord], out: &mut dyn Write) -> Result<()> {
    match path {
        Some(p) => {
            let f = fs::File::create(p).with_context(|| format!("creating {}", p.display()))?;
            write_jsonl(io::BufWriter::new(f), records)
        }
        None => write_jsonl(out, records),
    }
}

fn gen_distvqa_cmd(a: &GenDistvqaArgs, cfg: &Config, out: &mut dyn Write) -> Result<i32> {
    let bank = match &a.templates {
        Some(p) => read_toml::<TemplateBank>(p).map_err(|e| Invalid(format!("{e:#}")))?,
        None => TemplateBank::default(),
    };
    bank.validate().map_err(|e| Invalid(format!("templates: {e}")))?;
    let d: DistanceMatrix = read_json(&a.distances).map_err(|e| Invalid(format!("{e:#}")))?;
    let seed = a.seed.unwrap_or(cfg.distance.seed);
    let records = gen_distance_qa(&a.image, &d.labels, &d, &bank, seed, cfg.distance.plan)
        .map_err(|e| Invalid(e.to_string()))?;
    write_records(a.out.as_deref(), &records, out)?;
    Ok(0)
}

#[derive(Debug, Deserialize)]
struct GraphItem {
    image: String,
    graph: GraphInput,
}

fn gen_graphvqa_cmd(a: &GenGraphvqaArgs, out: &mut dyn Write) -> Result<i32> {
    let items: Vec<GraphItem> = read_samples(&a.input)?;
    let mut records = Vec::with_capacity(items.len());
    for item in items {
        let g = item
            .graph
            .into_graph()
            .map_err(|e| Invalid(format!("{}: {e}", item.image)))?;
        records.push(gen_graph_qa(&g, &item.image));
    }
    write_records(a.out.as_deref(), &records, out)?;
    Ok(0)
}

fn stats_cmd(a: &StatsArgs, out: &mut dyn Write) -> Result<i32> {
    if let Some(p) = &a.records {
        let records: Vec<QARecord> = read_samples(p)?;
        print_json(out, &dataset_stats(&records))?;
        return Ok(0);
    }
    let mut results = Vec::with_capacity(a.perception.len());
    for p in &a.perception {
        results.push(read_json::<PerceptionResult>(p).map_err(|e| Invalid(format!("{e:#}")))?);
    }
    if results.is_empty() {
        bail!(Invalid("no inputs".into()));
    }
    print_json(out, &perception_stats(&results).map_err(|e| Invalid(e.to_string()))?)?;
    Ok(0)
}

/// Parse and run, returning stdout and the exit status; for tests.
pub fn run_captured<I, T>(args: I) -> (i32, String)
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => return (if e.use_stderr() { 2 } else { 0 }, e.to_string()),
    };
    let mut buf = Vec::new();
    let code = match execute(cli, &mut buf) {
        Ok(c) => c,
        Err(e) if e.downcast_ref::<Invalid>().is_some() => 2,
        Err(_) => 1,
    };
    (code, String::from_utf8_lossy(&buf).into_owned())
}
