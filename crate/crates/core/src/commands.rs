//! Command-line front end: argument definitions and one function per
//! subcommand. Each command writes its artifacts atomically and prints a short
//! summary to stdout.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::experiment::{
    distribution_stats, load_dataset, metrics_from_counts, multi_run, predict, predicted_counts,
    synth_generate, train, Dataset, DistributionStats, LoadOptions, SynthSpec, TypeMap,
};
use crate::graph::{decay_weights, laplacian_bundle, SpatialGraph};
use crate::io::csv::{
    envelope_csv, history_csv, predictions_csv, read_edge_list, read_predictions, write_edge_list,
    write_points, PredictionRow,
};
use crate::io::{raster_heatmap, write_atomic, Checkpoint, CliConfig, KeyValueDoc};
use crate::spectral::{eigendecompose, eigenvalues_csv};

#[derive(Debug, Parser)]
#[command(
    name = "spatial-gcn",
    version,
    about = "Spatial graph convolution toolkit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic point dataset.
    Gen(GenArgs),
    /// Build a spatial graph and write its edge list.
    Graph(GraphArgs),
    /// Train a model; writes a checkpoint, history.csv and metrics.toml.
    Train(RunArgs),
    /// Predict per-node counts from a checkpoint.
    Predict(PredictArgs),
    /// Error metrics (and optionally distribution statistics) of a prediction file.
    Eval(EvalArgs),
    /// Repeated training with distinct seeds; writes the error envelope.
    Runs(RunsArgs),
    /// Kernel-density rasters of predicted and actual counts.
    Heatmap(HeatmapArgs),
}

/// Flags shared by commands that read a configuration document. Every flag
/// overrides the key of the same name.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// Configuration document (`key = value` lines).
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Edge-list CSV; when absent the graph is built from the weighting scheme.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// Comma-separated type labels, in channel order.
    #[arg(long, value_delimiter = ',')]
    pub types: Option<Vec<String>>,
    #[arg(long)]
    pub min_checkins: Option<f64>,
    /// binary, power, exponential or gaussian.
    #[arg(long)]
    pub scheme: Option<String>,
    /// Buffer radius in meters (binary scheme).
    #[arg(long)]
    pub radius: Option<f64>,
    #[arg(long)]
    pub exponent: Option<f64>,
    #[arg(long)]
    pub rate: Option<f64>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub l2_weight: Option<f64>,
    #[arg(long)]
    pub dropout: Option<f64>,
    #[arg(long)]
    pub hidden_units: Option<usize>,
    #[arg(long)]
    pub train_fraction: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub cell_size: Option<f64>,
    #[arg(long)]
    pub bandwidth: Option<f64>,
}

impl ConfigArgs {
    pub fn resolve(&self) -> Result<CliConfig> {
        let mut c = match &self.config {
            Some(p) => {
                if !p.exists() {
                    return Err(Error::Config(format!(
                        "config file does not exist: {}",
                        p.display()
                    )));
                }
                CliConfig::load(p)?
            }
            None => CliConfig::default(),
        };
        macro_rules! set {
            ($($flag:ident => $key:ident),* $(,)?) => {
                $(if let Some(v) = &self.$flag { c.$key = v.clone().into(); })*
            };
        }
        set!(
            dataset => dataset, graph => graph, checkpoint => checkpoint,
            output_dir => output_dir, types => types, min_checkins => min_checkins,
        );
        set!(
            scheme => scheme, radius => buffer_radius, exponent => exponent, rate => rate,
            k => k, epochs => epochs, learning_rate => learning_rate, l2_weight => l2_weight,
            dropout => dropout_p, hidden_units => hidden_units,
            train_fraction => train_fraction, seed => seed, cell_size => cell_size,
            bandwidth => bandwidth,
        );
        c.check_inputs()?;
        Ok(c)
    }
}

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Generator settings; defaults when omitted.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
    /// Override the spec's seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct GraphArgs {
    #[command(flatten)]
    pub cfg: ConfigArgs,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the normalized-Laplacian eigenvalues as CSV (debugging aid).
    #[arg(long, hide = true)]
    pub dump_spectrum: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub cfg: ConfigArgs,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub cfg: ConfigArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Prediction CSV with both columns populated.
    pub predictions: PathBuf,
    /// Include histograms and moments of both columns.
    #[arg(long)]
    pub distribution: bool,
    #[arg(long, default_value_t = 20)]
    pub bins: usize,
    /// Also write the metrics document here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RunsArgs {
    #[command(flatten)]
    pub cfg: ConfigArgs,
    /// Number of runs.
    #[arg(long, short = 'r', default_value_t = 50)]
    pub runs: usize,
    /// Seeds are `seed_base, seed_base + 1, …`.
    #[arg(long, default_value_t = 1)]
    pub seed_base: u64,
    /// Run sequentially instead of in parallel.
    #[arg(long)]
    pub sequential: bool,
}

#[derive(Debug, Args)]
pub struct HeatmapArgs {
    #[command(flatten)]
    pub cfg: ConfigArgs,
    /// Prediction CSV; joined with the dataset on `id`.
    #[arg(long)]
    pub predictions: PathBuf,
    /// Keep only points with this type label.
    #[arg(long = "type")]
    pub type_label: Option<String>,
    /// Scale both rasters to their common min and max.
    #[arg(long)]
    pub shared_scale: bool,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen(a) => cmd_gen(&a),
        Command::Graph(a) => cmd_graph(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Predict(a) => cmd_predict(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Runs(a) => cmd_runs(&a),
        Command::Heatmap(a) => cmd_heatmap(&a),
    }
}

pub fn cmd_gen(a: &GenArgs) -> Result<()> {
    let mut spec = match &a.spec {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            toml::from_str::<SynthSpec>(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
        }
        None => SynthSpec::default(),
    };
    if let Some(s) = a.seed {
        spec.seed = s;
    }
    let (points, truth) = synth_generate(&spec)?;
    write_points(&a.out, &points, &truth.type_names)?;
    let counts = points.intensity().unwrap_or(&[]);
    let stats = distribution_stats(counts, 20, false)?;
    let mut d = KeyValueDoc::new();
    d.int("points", points.len() as i64)
        .int("types", points.n_types() as i64)
        .num("count_mean", stats.mean)
        .num("count_max", counts.iter().copied().fold(0.0, f64::max))
        .num("count_skewness", stats.skewness.unwrap_or(0.0));
    print!("{}", d.render());
    Ok(())
}

fn type_map(c: &CliConfig) -> Result<TypeMap> {
    match &c.types {
        Some(t) => TypeMap::new(t.clone()),
        None => Ok(TypeMap::default()),
    }
}

fn load(c: &CliConfig) -> Result<Dataset> {
    let path = c
        .dataset
        .as_ref()
        .ok_or_else(|| Error::Config("no dataset given (--dataset or `dataset` key)".into()))?;
    load_dataset(
        path,
        &type_map(c)?,
        LoadOptions {
            min_checkins: c.min_checkins,
        },
    )
}

fn build_graph(c: &CliConfig, data: &Dataset) -> Result<SpatialGraph> {
    match &c.graph {
        Some(p) => read_edge_list(p, data.points.ids()),
        None => decay_weights(&data.points, c.decay_scheme()?),
    }
}

fn output_dir(c: &CliConfig) -> PathBuf {
    c.output_dir.clone().unwrap_or_else(|| PathBuf::from("."))
}

pub fn cmd_graph(a: &GraphArgs) -> Result<()> {
    let c = a.cfg.resolve()?;
    let data = load(&c)?;
    let g = decay_weights(&data.points, c.decay_scheme()?)?;
    write_edge_list(&a.out, &g, data.points.ids())?;
    if let Some(p) = &a.dump_spectrum {
        let basis = eigendecompose(&laplacian_bundle(&g))?;
        write_atomic(p, eigenvalues_csv(&basis).as_bytes())?;
    }
    let mut d = KeyValueDoc::new();
    d.int("nodes", g.n() as i64)
        .int("edges", g.edge_count() as i64)
        .int("isolated", g.isolated_count() as i64);
    print!("{}", d.render());
    Ok(())
}

pub fn cmd_train(a: &RunArgs) -> Result<()> {
    let c = a.cfg.resolve()?;
    let cfg = c.train_config();
    cfg.validate()?;
    let data = load(&c)?;
    let g = build_graph(&c, &data)?;
    let out = train(&data, &g, &cfg)?;
    let dir = output_dir(&c);
    let ckpt_path = c
        .checkpoint
        .clone()
        .unwrap_or_else(|| dir.join("model.toml"));
    Checkpoint {
        model: out.model.clone(),
        seed: cfg.seed,
        epochs: cfg.epochs,
    }
    .save(&ckpt_path)?;
    write_atomic(&dir.join("history.csv"), &history_csv(&out.history)?)?;

    let (_, counts) = data.require_targets()?;
    let pred = predicted_counts(&predict(&out.model, &data, &g)?);
    let val = &out.split.validation;
    let m = metrics_from_counts(
        &val.iter().map(|&i| pred[i]).collect::<Vec<_>>(),
        &val.iter().map(|&i| counts[i]).collect::<Vec<_>>(),
    )?;
    let train_mean =
        out.split.train.iter().map(|&i| counts[i]).sum::<f64>() / out.split.train.len() as f64;
    let baseline = val
        .iter()
        .map(|&i| (counts[i] - train_mean).abs())
        .sum::<f64>()
        / val.len() as f64;
    let mut d = KeyValueDoc::new();
    d.int("seed", cfg.seed as i64)
        .int("epochs", cfg.epochs as i64)
        .int("train_nodes", out.split.train.len() as i64)
        .int("validation_nodes", val.len() as i64)
        .num(
            "final_loss",
            out.history.loss.last().copied().unwrap_or(f64::NAN),
        )
        .num("validation_mae", m.mae)
        .num("validation_l1_log", m.l1_log)
        .num("validation_ratio", m.ratio)
        .num("constant_mean_mae", baseline)
        .text("checksum", &format!("{:016x}", out.model.checksum()));
    let text = d.render();
    write_atomic(&dir.join("metrics.toml"), text.as_bytes())?;
    print!("{text}");
    Ok(())
}

pub fn cmd_predict(a: &PredictArgs) -> Result<()> {
    let c = a.cfg.resolve()?;
    let ckpt_path = c.checkpoint.as_ref().ok_or_else(|| {
        Error::Config("no checkpoint given (--checkpoint or `checkpoint` key)".into())
    })?;
    if !ckpt_path.exists() {
        return Err(Error::Config(format!(
            "checkpoint does not exist: {}",
            ckpt_path.display()
        )));
    }
    let ckpt = Checkpoint::load(ckpt_path)?;
    let data = load(&c)?;
    if ckpt.model.input_channels() != data.channels() {
        return Err(Error::DimensionMismatch {
            context: "checkpoint input channels vs dataset types",
            expected: ckpt.model.input_channels(),
            found: data.channels(),
        });
    }
    let g = build_graph(&c, &data)?;
    let pred = predicted_counts(&predict(&ckpt.model, &data, &g)?);
    let rows: Vec<PredictionRow> = data
        .points
        .ids()
        .iter()
        .enumerate()
        .map(|(i, id)| PredictionRow {
            id: id.clone(),
            predicted: pred[i],
            actual: data.counts().map(|c| c[i]),
        })
        .collect();
    write_atomic(&a.out, &predictions_csv(&rows)?)?;
    println!("predictions = {}", rows.len());
    Ok(())
}

fn paired_columns(rows: &[PredictionRow]) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut p = Vec::with_capacity(rows.len());
    let mut t = Vec::with_capacity(rows.len());
    for (k, r) in rows.iter().enumerate() {
        let a = r
            .actual
            .ok_or_else(|| Error::Data(format!("line {}: actual_checkins is empty", k + 2)))?;
        p.push(r.predicted);
        t.push(a);
    }
    Ok((p, t))
}

fn add_distribution(d: &mut KeyValueDoc, prefix: &str, s: &DistributionStats) {
    d.num(&format!("{prefix}_mean"), s.mean)
        .num(&format!("{prefix}_variance"), s.variance);
    if let Some(v) = s.skewness {
        d.num(&format!("{prefix}_skewness"), v);
    }
    if let Some(v) = s.excess_kurtosis {
        d.num(&format!("{prefix}_excess_kurtosis"), v);
    }
    d.text(
        &format!("{prefix}_binning"),
        if s.histogram.log_x { "log" } else { "linear" },
    )
    .array(&format!("{prefix}_bin_edges"), &s.histogram.edges)
    .array(
        &format!("{prefix}_bin_counts"),
        &s.histogram
            .counts
            .iter()
            .map(|&c| c as f64)
            .collect::<Vec<_>>(),
    );
}

/// Log-x binning when every value is positive, linear otherwise.
fn stats_for(values: &[f64], bins: usize, name: &str) -> Result<DistributionStats> {
    let log_x = values.iter().all(|&v| v > 0.0);
    if !log_x {
        log::warn!("{name} column has non-positive values; using linear bins");
    }
    distribution_stats(values, bins, log_x)
}

pub fn eval_document(rows: &[PredictionRow], distribution: bool, bins: usize) -> Result<String> {
    let (pred, actual) = paired_columns(rows)?;
    let m = metrics_from_counts(&pred, &actual)?;
    let mut d = KeyValueDoc::new();
    d.int("rows", m.count as i64)
        .num("mae", m.mae)
        .num("l1_log", m.l1_log)
        .num("ratio", m.ratio);
    if distribution {
        add_distribution(&mut d, "predicted", &stats_for(&pred, bins, "predicted")?);
        add_distribution(&mut d, "actual", &stats_for(&actual, bins, "actual")?);
    }
    Ok(d.render())
}

pub fn cmd_eval(a: &EvalArgs) -> Result<()> {
    if !a.predictions.exists() {
        return Err(Error::Config(format!(
            "prediction file does not exist: {}",
            a.predictions.display()
        )));
    }
    let text = eval_document(&read_predictions(&a.predictions)?, a.distribution, a.bins)?;
    if let Some(p) = &a.out {
        write_atomic(p, text.as_bytes())?;
    }
    print!("{text}");
    Ok(())
}

pub fn cmd_runs(a: &RunsArgs) -> Result<()> {
    let c = a.cfg.resolve()?;
    let cfg = c.train_config();
    cfg.validate()?;
    if a.runs == 0 {
        return Err(Error::InvalidParameter(
            "at least one run is required".into(),
        ));
    }
    let seeds: Vec<u64> = (0..a.runs as u64)
        .map(|k| {
            a.seed_base
                .checked_add(k)
                .ok_or_else(|| Error::InvalidParameter("seed range overflows".into()))
        })
        .collect::<Result<_>>()?;
    let data = load(&c)?;
    let g = build_graph(&c, &data)?;
    let exec = if a.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    };
    let result = multi_run(&data, &g, &cfg, &seeds, exec)?;
    let dir = output_dir(&c);
    for h in &result.histories {
        write_atomic(
            &dir.join("runs").join(format!("run_{}.csv", h.seed)),
            &history_csv(h)?,
        )?;
    }
    write_atomic(&dir.join("envelope.csv"), &envelope_csv(&result.envelope)?)?;
    for (seed, e) in &result.failures {
        eprintln!("run with seed {seed} failed: {e}");
    }
    let last = result.envelope.epochs().saturating_sub(1);
    let mut d = KeyValueDoc::new();
    d.int("runs", result.histories.len() as i64)
        .int("failed", result.failures.len() as i64)
        .num(
            "final_mean",
            result.envelope.mean.get(last).copied().unwrap_or(f64::NAN),
        )
        .num(
            "final_std",
            result.envelope.std.get(last).copied().unwrap_or(f64::NAN),
        );
    print!("{}", d.render());
    Ok(())
}

pub fn cmd_heatmap(a: &HeatmapArgs) -> Result<()> {
    let c = a.cfg.resolve()?;
    if !a.predictions.exists() {
        return Err(Error::Config(format!(
            "prediction file does not exist: {}",
            a.predictions.display()
        )));
    }
    let data = load(&c)?;
    let rows = read_predictions(&a.predictions)?;
    let index: std::collections::HashMap<&str, usize> = data
        .points
        .ids()
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let wanted = match &a.type_label {
        Some(t) => Some(
            data.type_names
                .iter()
                .position(|n| n == t)
                .ok_or_else(|| Error::Config(format!("unknown type label {t:?}")))?,
        ),
        None => None,
    };
    let mut keep = Vec::new();
    let mut pred = Vec::new();
    let mut actual = Vec::new();
    for (k, r) in rows.iter().enumerate() {
        let i = *index
            .get(r.id.as_str())
            .ok_or_else(|| Error::Data(format!("line {}: id {:?} not in dataset", k + 2, r.id)))?;
        if wanted.is_some_and(|t| data.points.types()[i] != t) {
            continue;
        }
        keep.push(i);
        pred.push(r.predicted);
        actual.push(r.actual);
    }
    if keep.is_empty() {
        return Err(Error::EmptyIndexSet("no points left after the type filter"));
    }
    let mut mask = vec![false; data.len()];
    keep.iter().for_each(|&i| mask[i] = true);
    // filter keeps dataset order; reorder values to match
    let points = data.points.filter(|i| mask[i])?;
    let mut order: Vec<usize> = (0..keep.len()).collect();
    order.sort_by_key(|&k| keep[k]);
    let pred: Vec<f64> = order.iter().map(|&k| pred[k]).collect();

    let dir = output_dir(&c);
    let grid_p = raster_heatmap(&points, &pred, c.cell_size, c.bandwidth)?;
    let actual: Option<Vec<f64>> = order.iter().map(|&k| actual[k]).collect();
    let grid_a = actual
        .map(|v| raster_heatmap(&points, &v, c.cell_size, c.bandwidth))
        .transpose()?;
    let scale = match (&grid_a, a.shared_scale) {
        (Some(ga), true) => {
            let (a0, a1) = ga.value_range();
            let (p0, p1) = grid_p.value_range();
            Some((a0.min(p0), a1.max(p1)))
        }
        _ => None,
    };
    let suffix = a
        .type_label
        .as_deref()
        .map(|t| format!("_{t}"))
        .unwrap_or_default();
    grid_p.export(&dir, &format!("predicted{suffix}"), scale)?;
    if let Some(ga) = &grid_a {
        ga.export(&dir, &format!("actual{suffix}"), scale)?;
    }
    println!(
        "points = {}\nwidth = {}\nheight = {}",
        points.len(),
        grid_p.width,
        grid_p.height
    );
    Ok(())
}

/// Parse, run and map the outcome to a process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
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
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
