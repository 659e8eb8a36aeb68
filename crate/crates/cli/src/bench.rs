//! Timing harness for the three schemes.
//!
//! Wall time covers hashing only: the layout build, the per-vector binding to
//! the layout, and the reduction's set construction are one-time setup and
//! reported separately, matching an in-memory serving scenario. The fastest
//! of `reps` passes is reported to damp scheduler noise.

use std::time::Instant;

use wmh::baselines::{self, UnweightedSet};
use wmh::error::{Error, Result};
use wmh::estimate::{hash_stats, HashStats};
use wmh::redgreen::{self, RedGreenLayout, SketchParams};
use wmh::vectors::Dataset;
use wmh::{Scheme, Sketch, SparseVector64};

use crate::{load_dataset, resolve_alpha, BenchArgs};

/// Per-scheme timing and value statistics.
#[derive(Debug, Clone)]
pub struct SchemeTiming {
    pub scheme: Scheme,
    /// One-time work: layout build + vector binding, or reduction.
    pub setup_ms: f64,
    /// Time to compute k hashes for one vector, fastest pass.
    pub per_vector_ms: f64,
    pub k: usize,
    pub n_vectors: usize,
    /// Value statistics; absent for ioffe (pair-valued slots).
    pub stats: Option<HashStats>,
}

fn best_pass_ms<F: FnMut() -> Result<()>>(reps: usize, mut pass: F) -> Result<f64> {
    let mut best = f64::INFINITY;
    for _ in 0..reps {
        let t0 = Instant::now();
        pass()?;
        best = best.min(t0.elapsed().as_secs_f64() * 1e3);
    }
    Ok(best)
}

pub fn time_redgreen(
    layout: &RedGreenLayout,
    vectors: &[SparseVector64],
    k: usize,
    reps: usize,
    seed: u64,
    delta: f64,
) -> Result<SchemeTiming> {
    let t0 = Instant::now();
    let prepared: Vec<_> = vectors
        .iter()
        .map(|v| layout.prepare(v))
        .collect::<Result<Vec<_>>>()?;
    let setup_ms = t0.elapsed().as_secs_f64() * 1e3;
    let params = SketchParams {
        k,
        master_seed: seed,
        delta,
    };
    let mut sketches: Vec<Sketch> = Vec::new();
    let best = best_pass_ms(reps, || {
        sketches = prepared
            .iter()
            .map(|p| redgreen::sketch_prepared(p, &params))
            .collect::<Result<Vec<_>>>()?;
        Ok(())
    })?;
    Ok(SchemeTiming {
        scheme: Scheme::RedGreen,
        setup_ms,
        per_vector_ms: best / vectors.len() as f64,
        k,
        n_vectors: vectors.len(),
        stats: Some(hash_stats(&sketches)?),
    })
}

pub fn time_ioffe(
    vectors: &[SparseVector64],
    k: usize,
    reps: usize,
    seed: u64,
) -> Result<SchemeTiming> {
    let best = best_pass_ms(reps, || {
        for v in vectors {
            baselines::ioffe_sketch(v, k, seed)?;
        }
        Ok(())
    })?;
    Ok(SchemeTiming {
        scheme: Scheme::Ioffe,
        setup_ms: 0.0,
        per_vector_ms: best / vectors.len() as f64,
        k,
        n_vectors: vectors.len(),
        stats: None,
    })
}

pub fn time_reduction(
    vectors: &[SparseVector64],
    k: usize,
    reps: usize,
    seed: u64,
) -> Result<SchemeTiming> {
    let reduction_seed = baselines::reduction_seed(seed);
    let t0 = Instant::now();
    let sets: Vec<UnweightedSet> = vectors
        .iter()
        .map(|v| baselines::reduce_to_unweighted(v, reduction_seed))
        .collect::<Result<Vec<_>>>()?;
    let setup_ms = t0.elapsed().as_secs_f64() * 1e3;
    let mut values: Vec<u64> = Vec::new();
    let best = best_pass_ms(reps, || {
        values.clear();
        for set in &sets {
            for slot in 0..k {
                values.push(baselines::minwise_unweighted(set, slot, seed));
            }
        }
        Ok(())
    })?;
    let max = values.iter().copied().max().unwrap_or(0);
    let stats = HashStats {
        mean: values.iter().map(|&v| v as f64).sum::<f64>() / values.len().max(1) as f64,
        max,
        bits_needed: if max == 0 {
            1
        } else {
            64 - max.leading_zeros()
        },
    };
    Ok(SchemeTiming {
        scheme: Scheme::Reduction,
        setup_ms,
        per_vector_ms: best / vectors.len() as f64,
        k,
        n_vectors: vectors.len(),
        stats: Some(stats),
    })
}

pub fn cmd_bench(args: BenchArgs) -> Result<()> {
    if args.reps == 0 {
        return Err(Error::Usage("--reps must be at least 1".into()));
    }
    if args.k == 0 {
        return Err(Error::Usage("--k must be at least 1".into()));
    }
    let schemes: Vec<Scheme> = args
        .schemes
        .split(',')
        .map(|s| Scheme::from_name(s.trim()))
        .collect::<Result<_>>()?;
    let ds: Dataset<f64> = load_dataset(&args.data, &args.data_args)?;
    let mut rows = Vec::new();
    for scheme in schemes {
        let timing = match scheme {
            Scheme::RedGreen => {
                let alpha = resolve_alpha(&ds, args.alpha)?;
                let t0 = Instant::now();
                let layout = RedGreenLayout::build(ds.maxima(), alpha)?;
                let build_ms = t0.elapsed().as_secs_f64() * 1e3;
                let mut t = time_redgreen(
                    &layout,
                    ds.vectors(),
                    args.k,
                    args.reps,
                    args.seed,
                    args.delta,
                )?;
                t.setup_ms += build_ms;
                t
            }
            Scheme::Ioffe => time_ioffe(ds.vectors(), args.k, args.reps, args.seed)?,
            Scheme::Reduction => time_reduction(ds.vectors(), args.k, args.reps, args.seed)?,
        };
        rows.push(timing);
    }
    if args.json {
        let items: Vec<serde_json::Value> = rows
            .iter()
            .map(|t| {
                serde_json::json!({
                    "scheme": t.scheme.name(),
                    "setup_ms": t.setup_ms,
                    "per_vector_ms": t.per_vector_ms,
                    "k": t.k,
                    "n_vectors": t.n_vectors,
                    "mean_hash": t.stats.map(|s| s.mean),
                    "max_hash": t.stats.map(|s| s.max),
                    "bits_needed": match t.scheme {
                        Scheme::Ioffe => 128,
                        _ => t.stats.map(|s| s.bits_needed).unwrap_or(0),
                    },
                })
            })
            .collect();
        println!("{:#}", serde_json::Value::Array(items));
    } else {
        println!(
            "{:<10} {:>12} {:>16} {:>12} {:>12} {:>6}",
            "scheme", "setup_ms", "per_vector_ms", "mean_hash", "max_hash", "bits"
        );
        for t in &rows {
            let (mean, max, bits) = match (t.scheme, &t.stats) {
                (Scheme::Ioffe, _) => ("-".into(), "-".into(), "128".into()),
                (_, Some(s)) => {
                    let mean = if s.mean < 1e6 {
                        format!("{:.3}", s.mean)
                    } else {
                        format!("{:.3e}", s.mean)
                    };
                    let max = if s.max < 1_000_000 {
                        s.max.to_string()
                    } else {
                        format!("{:.3e}", s.max as f64)
                    };
                    (mean, max, s.bits_needed.to_string())
                }
                _ => ("-".into(), "-".into(), "-".into()),
            };
            println!(
                "{:<10} {:>12.3} {:>16.4} {:>12} {:>12} {:>6}",
                t.scheme.name(),
                t.setup_ms,
                t.per_vector_ms,
                mean,
                max,
                bits
            );
        }
    }
    Ok(())
}
