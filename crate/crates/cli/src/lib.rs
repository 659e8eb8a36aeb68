//! Command-line front end: ingest sparse text data, build layouts, sketch,
//! estimate similarities, and benchmark the hashing schemes.

pub mod bench;

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use wmh::error::{Error, Result};
use wmh::redgreen::{self, LayoutOptions, RedGreenLayout, DEFAULT_CELL_BUDGET};
use wmh::sketch::{read_sketch_file, write_sketch_file, SchemeSketcher};
use wmh::vectors::{Dataset, IndexBase};
use wmh::{estimate, Scheme, Sketch};

#[derive(Debug, Parser)]
#[command(name = "wmh", version, about = "Weighted minwise hashing toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build the red-green layout sidecar for a dataset.
    Layout(LayoutArgs),
    /// Sketch every vector of a dataset.
    Sketch(SketchArgs),
    /// Estimate pairwise similarities from a sketch file, or emit
    /// estimation-error curves with --curve.
    Estimate(EstimateArgs),
    /// Time the schemes and report hash statistics.
    Bench(BenchArgs),
    /// Summarize hash values stored in a sketch file.
    Stats(StatsArgs),
}

/// `auto` or an explicit positive scale.
#[derive(Debug, Clone, Copy)]
pub enum AlphaArg {
    Auto,
    Fixed(f64),
}

impl FromStr for AlphaArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(AlphaArg::Auto);
        }
        let v: f64 = s
            .parse()
            .map_err(|_| format!("expected `auto` or a number, got `{s}`"))?;
        if !(v.is_finite() && v > 0.0) {
            return Err(format!("alpha must be positive and finite, got {v}"));
        }
        Ok(AlphaArg::Fixed(v))
    }
}

fn parse_base(s: &str) -> std::result::Result<IndexBase, String> {
    match s {
        "0" => Ok(IndexBase::Zero),
        "1" => Ok(IndexBase::One),
        other => Err(format!("expected 0 or 1, got `{other}`")),
    }
}

/// Flags shared by every command that ingests sparse text data.
#[derive(Debug, Args, Clone)]
pub struct DataArgs {
    /// Index origin of the input (0 or 1).
    #[arg(long, default_value = "0", value_parser = parse_base)]
    pub base: IndexBase,
    /// Dimensionality; inferred as max index + 1 when omitted.
    #[arg(long)]
    pub dim: Option<u32>,
}

#[derive(Debug, Args)]
pub struct LayoutArgs {
    /// Sparse text dataset (`label idx:val ...`, `#` comments).
    pub data: PathBuf,
    /// Output layout file.
    #[arg(short, long)]
    pub out: PathBuf,
    /// Scaling factor, or `auto` to search the default grid.
    #[arg(long, default_value = "auto")]
    pub alpha: AlphaArg,
    /// Cell budget for the O(1) lookup table.
    #[arg(long, default_value_t = DEFAULT_CELL_BUDGET)]
    pub budget: u64,
    /// Skip the O(1) table; lookups fall back to binary search.
    #[arg(long)]
    pub low_mem: bool,
    #[command(flatten)]
    pub data_args: DataArgs,
}

#[derive(Debug, Args)]
pub struct SketchArgs {
    /// Sparse text dataset.
    pub data: PathBuf,
    /// Output sketch file.
    #[arg(short, long)]
    pub out: PathBuf,
    /// Layout sidecar (required for the redgreen scheme).
    #[arg(long)]
    pub layout: Option<PathBuf>,
    /// Hashing scheme: redgreen, ioffe, or reduction.
    #[arg(long, default_value = "redgreen")]
    pub scheme: String,
    /// Hashes per vector.
    #[arg(long, default_value_t = 500)]
    pub k: usize,
    /// Master seed; sketches are bit-reproducible given the same seed.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Tail mass for the rejection iteration cap.
    #[arg(long, default_value_t = redgreen::DEFAULT_DELTA)]
    pub delta: f64,
    /// Worker threads for vector-level parallelism.
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    /// Load the layout without its O(1) table.
    #[arg(long)]
    pub low_mem: bool,
    #[command(flatten)]
    pub data_args: DataArgs,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Sketch file, or the dataset itself in --curve mode.
    pub input: PathBuf,
    /// Vector index pairs, e.g. `0,1 0,2`.
    #[arg(required = true)]
    pub pairs: Vec<String>,
    /// Dataset path; adds exact similarity and absolute error columns.
    #[arg(long)]
    pub exact: Option<PathBuf>,
    /// Emit JSON instead of CSV.
    #[arg(long)]
    pub json: bool,
    /// Write the report here instead of stdout.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
    /// Error-curve mode: input is a dataset, exactly one pair; runs all
    /// three schemes over k = 1..k_max.
    #[arg(long)]
    pub curve: bool,
    /// Largest sketch size for --curve.
    #[arg(long, default_value_t = 50)]
    pub k_max: usize,
    /// Repetitions (independent master seeds) for --curve.
    #[arg(long, default_value_t = 200)]
    pub reps: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Scaling for the layout built in --curve mode.
    #[arg(long, default_value = "auto")]
    pub alpha: AlphaArg,
    #[arg(long, default_value_t = redgreen::DEFAULT_DELTA)]
    pub delta: f64,
    #[command(flatten)]
    pub data_args: DataArgs,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    /// Sparse text dataset.
    pub data: PathBuf,
    /// Comma-separated schemes to time.
    #[arg(long, default_value = "redgreen,ioffe,reduction")]
    pub schemes: String,
    /// Hashes per vector.
    #[arg(long, default_value_t = 500)]
    pub k: usize,
    /// Timing repetitions; the fastest pass is reported.
    #[arg(long, default_value_t = 3)]
    pub reps: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value = "auto")]
    pub alpha: AlphaArg,
    #[arg(long, default_value_t = redgreen::DEFAULT_DELTA)]
    pub delta: f64,
    /// Emit JSON instead of the table.
    #[arg(long)]
    pub json: bool,
    #[command(flatten)]
    pub data_args: DataArgs,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Sketch file to summarize.
    pub sketches: PathBuf,
    #[arg(long)]
    pub json: bool,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Layout(args) => cmd_layout(args),
        Command::Sketch(args) => cmd_sketch(args),
        Command::Estimate(args) => cmd_estimate(args),
        Command::Bench(args) => bench::cmd_bench(args),
        Command::Stats(args) => cmd_stats(args),
    }
}

pub fn load_dataset(path: &Path, args: &DataArgs) -> Result<Dataset<f64>> {
    let file = File::open(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })?;
    Dataset::from_reader(BufReader::new(file), args.base, args.dim)
}

pub fn resolve_alpha(ds: &Dataset<f64>, alpha: AlphaArg) -> Result<f64> {
    match alpha {
        AlphaArg::Fixed(v) => Ok(v),
        AlphaArg::Auto => redgreen::optimize_alpha(ds, &redgreen::default_alpha_grid()),
    }
}

fn cmd_layout(args: LayoutArgs) -> Result<()> {
    let ds = load_dataset(&args.data, &args.data_args)?;
    let alpha = resolve_alpha(&ds, args.alpha)?;
    let opts = LayoutOptions {
        cell_budget: args.budget,
        build_table: !args.low_mem,
    };
    let layout = RedGreenLayout::build_with(ds.maxima(), alpha, &opts)?;
    let mut out = BufWriter::new(File::create(&args.out)?);
    layout.write_to(&mut out)?;
    out.flush()?;
    let mean_s = ds
        .vectors()
        .iter()
        .map(|v| redgreen::effective_sparsity(&layout, v))
        .sum::<f64>()
        / ds.len() as f64;
    println!(
        "layout: dim={} coords={} M={} alpha={} mean_sparsity={:.6} id={:016x} file={}",
        layout.dim(),
        layout.n_coords(),
        layout.m_total(),
        layout.alpha(),
        mean_s,
        layout.layout_id(),
        args.out.display()
    );
    Ok(())
}

pub fn load_layout(path: &Path, low_mem: bool, budget: u64) -> Result<RedGreenLayout> {
    let mut file = File::open(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })?;
    let opts = LayoutOptions {
        cell_budget: budget,
        build_table: !low_mem,
    };
    RedGreenLayout::read_from(&mut file, &opts)
}

/// Rewrites per-vector hashing errors to name the vector's source line.
fn with_line(err: Error, line: u64) -> Error {
    match err {
        Error::LayoutMismatch { coord, msg, .. } => Error::LayoutMismatch { line, coord, msg },
        Error::Domain(msg) => Error::Domain(format!("line {line}: {msg}")),
        other => other,
    }
}

fn cmd_sketch(args: SketchArgs) -> Result<()> {
    let scheme = Scheme::from_name(&args.scheme)?;
    if args.threads == 0 {
        return Err(Error::Usage("--threads must be at least 1".into()));
    }
    let ds = load_dataset(&args.data, &args.data_args)?;
    let layout = match scheme {
        Scheme::RedGreen => {
            let path = args
                .layout
                .as_ref()
                .ok_or_else(|| Error::Usage("the redgreen scheme needs --layout <file>".into()))?;
            let layout = load_layout(path, args.low_mem, DEFAULT_CELL_BUDGET)?;
            if layout.dim() != ds.dim() {
                return Err(Error::Usage(format!(
                    "layout dim {} does not match dataset dim {}",
                    layout.dim(),
                    ds.dim()
                )));
            }
            Some(layout)
        }
        _ => None,
    };
    let sketcher = match (&layout, scheme) {
        (Some(l), Scheme::RedGreen) => SchemeSketcher::RedGreen {
            layout: l,
            delta: args.delta,
        },
        (_, Scheme::Ioffe) => SchemeSketcher::Ioffe,
        (_, Scheme::Reduction) => SchemeSketcher::Reduction,
        _ => unreachable!(),
    };
    let sketch_one = |(i, v): (usize, &wmh::SparseVector64)| -> Result<Sketch> {
        sketcher
            .sketch(v, args.k, args.seed)
            .map_err(|e| with_line(e, ds.source_lines()[i]))
    };
    let sketches: Vec<Sketch> = if args.threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(args.threads)
            .build()
            .map_err(|e| Error::Usage(format!("cannot build thread pool: {e}")))?;
        pool.install(|| {
            ds.vectors()
                .par_iter()
                .enumerate()
                .map(sketch_one)
                .collect::<Result<Vec<_>>>()
        })?
    } else {
        ds.vectors()
            .iter()
            .enumerate()
            .map(sketch_one)
            .collect::<Result<Vec<_>>>()?
    };
    let mut out = BufWriter::new(File::create(&args.out)?);
    write_sketch_file(&mut out, &sketches)?;
    out.flush()?;
    println!(
        "sketched {} vectors: scheme={} k={} seed={} file={}",
        sketches.len(),
        scheme,
        args.k,
        args.seed,
        args.out.display()
    );
    Ok(())
}

fn parse_pair(s: &str) -> Result<(usize, usize)> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| Error::Usage(format!("pair `{s}` must be `i,j`")))?;
    let parse = |t: &str| {
        t.trim()
            .parse::<usize>()
            .map_err(|_| Error::Usage(format!("pair `{s}` must be `i,j` with integer indices")))
    };
    Ok((parse(a)?, parse(b)?))
}

fn open_report(out: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn cmd_estimate(args: EstimateArgs) -> Result<()> {
    if args.curve {
        return cmd_estimate_curve(args);
    }
    let mut file = File::open(&args.input).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", args.input.display()),
        ))
    })?;
    let sketches = read_sketch_file(&mut file)?;
    let pairs: Vec<(usize, usize)> = args
        .pairs
        .iter()
        .map(|s| parse_pair(s))
        .collect::<Result<_>>()?;
    for &(i, j) in &pairs {
        if i >= sketches.len() || j >= sketches.len() {
            return Err(Error::Usage(format!(
                "pair ({i},{j}) out of range: file holds {} sketches",
                sketches.len()
            )));
        }
    }
    let exact_ds = match &args.exact {
        Some(path) => Some(load_dataset(path, &args.data_args)?),
        None => None,
    };
    if let Some(ds) = &exact_ds {
        for &(i, j) in &pairs {
            if i >= ds.len() || j >= ds.len() {
                return Err(Error::Usage(format!(
                    "pair ({i},{j}) out of range: --exact data holds {} vectors",
                    ds.len()
                )));
            }
        }
    }
    let mut rows = Vec::new();
    for &(i, j) in &pairs {
        let rep = estimate::estimate_from_sketches(&sketches[i], &sketches[j])?;
        let exact = match &exact_ds {
            Some(ds) => Some(estimate::exact_jaccard(&ds.vectors()[i], &ds.vectors()[j])?),
            None => None,
        };
        rows.push((i, j, rep, exact));
    }
    let mut w = open_report(&args.out)?;
    if args.json {
        let items: Vec<serde_json::Value> = rows
            .iter()
            .map(|(i, j, rep, exact)| {
                let mut obj = serde_json::json!({
                    "i": i,
                    "j": j,
                    "scheme": rep.scheme.name(),
                    "k": rep.k,
                    "j_hat": rep.j_hat,
                    "std_err": rep.std_err,
                });
                if let Some(e) = exact {
                    obj["exact"] = serde_json::json!(e);
                    obj["abs_err"] = serde_json::json!((rep.j_hat - e).abs());
                }
                obj
            })
            .collect();
        writeln!(w, "{:#}", serde_json::Value::Array(items))?;
    } else {
        if exact_ds.is_some() {
            writeln!(w, "i,j,j_hat,std_err,exact,abs_err")?;
        } else {
            writeln!(w, "i,j,j_hat,std_err")?;
        }
        for (i, j, rep, exact) in &rows {
            match exact {
                Some(e) => writeln!(
                    w,
                    "{i},{j},{},{},{},{}",
                    rep.j_hat,
                    rep.std_err,
                    e,
                    (rep.j_hat - e).abs()
                )?,
                None => writeln!(w, "{i},{j},{},{}", rep.j_hat, rep.std_err)?,
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn cmd_estimate_curve(args: EstimateArgs) -> Result<()> {
    if args.pairs.len() != 1 {
        return Err(Error::Usage("--curve takes exactly one pair".into()));
    }
    let (i, j) = parse_pair(&args.pairs[0])?;
    let ds = load_dataset(&args.input, &args.data_args)?;
    if i >= ds.len() || j >= ds.len() {
        return Err(Error::Usage(format!(
            "pair ({i},{j}) out of range: dataset holds {} vectors",
            ds.len()
        )));
    }
    let alpha = resolve_alpha(&ds, args.alpha)?;
    let layout = RedGreenLayout::build(ds.maxima(), alpha)?;
    let (x, y) = (&ds.vectors()[i], &ds.vectors()[j]);
    let sketchers = [
        SchemeSketcher::RedGreen {
            layout: &layout,
            delta: args.delta,
        },
        SchemeSketcher::Ioffe,
        SchemeSketcher::Reduction,
    ];
    let mut curves = Vec::new();
    for s in &sketchers {
        curves.push(estimate::error_curve(
            x, y, s, args.k_max, args.reps, args.seed,
        )?);
    }
    let mut w = open_report(&args.out)?;
    if args.json {
        let items: Vec<serde_json::Value> = (0..args.k_max)
            .map(|idx| {
                serde_json::json!({
                    "k": idx + 1,
                    "mae_redgreen": curves[0][idx].mae,
                    "se_redgreen": curves[0][idx].se,
                    "mae_ioffe": curves[1][idx].mae,
                    "se_ioffe": curves[1][idx].se,
                    "mae_reduction": curves[2][idx].mae,
                    "se_reduction": curves[2][idx].se,
                })
            })
            .collect();
        writeln!(w, "{:#}", serde_json::Value::Array(items))?;
    } else {
        writeln!(w, "k,mae_redgreen,mae_ioffe,mae_reduction")?;
        for (idx, point) in curves[0].iter().enumerate() {
            writeln!(
                w,
                "{},{},{},{}",
                point.k, point.mae, curves[1][idx].mae, curves[2][idx].mae
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

fn cmd_stats(args: StatsArgs) -> Result<()> {
    let mut file = File::open(&args.sketches).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", args.sketches.display()),
        ))
    })?;
    let sketches = read_sketch_file(&mut file)?;
    let scheme = sketches[0].scheme;
    let k = sketches[0].k();
    if scheme == Scheme::Ioffe {
        if args.json {
            println!(
                "{}",
                serde_json::json!({
                    "scheme": scheme.name(),
                    "vectors": sketches.len(),
                    "k": k,
                    "bits_per_slot": 128,
                })
            );
        } else {
            println!(
                "scheme=ioffe vectors={} k={k} bits_per_slot=128 (fixed (k*, t*) pairs)",
                sketches.len()
            );
        }
        return Ok(());
    }
    let stats = estimate::hash_stats(&sketches)?;
    if args.json {
        println!(
            "{}",
            serde_json::json!({
                "scheme": scheme.name(),
                "vectors": sketches.len(),
                "k": k,
                "mean": stats.mean,
                "max": stats.max,
                "bits_needed": stats.bits_needed,
            })
        );
    } else {
        println!(
            "scheme={} vectors={} k={k} mean={:.4} max={} bits_needed={}",
            scheme.name(),
            sketches.len(),
            stats.mean,
            stats.max,
            stats.bits_needed
        );
    }
    Ok(())
}
