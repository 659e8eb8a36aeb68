//! Exact generalized Jaccard, the unbiased sketch estimator, and the
//! statistics the benchmark and acceptance tooling report.

use crate::error::{Error, Result};
use crate::rng::derive;
use crate::scalar::Weight;
use crate::sketch::{Scheme, SchemeSketcher, Sketch, SketchValues};
use crate::vectors::SparseVector;

/// Generalized Jaccard similarity sum(min) / sum(max) by linear merge of the
/// sorted entry lists.
pub fn exact_jaccard<W: Weight>(x: &SparseVector<W>, y: &SparseVector<W>) -> Result<W> {
    if x.dim() != y.dim() {
        return Err(Error::Usage(format!(
            "dimension mismatch: {} vs {}",
            x.dim(),
            y.dim()
        )));
    }
    if x.is_empty() && y.is_empty() {
        return Err(Error::Domain(
            "Jaccard of two all-zero vectors is undefined".into(),
        ));
    }
    let (xs, ys) = (x.entries(), y.entries());
    let (mut i, mut j) = (0usize, 0usize);
    let mut min_sum = W::zero();
    let mut max_sum = W::zero();
    while i < xs.len() && j < ys.len() {
        let (xi, xw) = xs[i];
        let (yi, yw) = ys[j];
        match xi.cmp(&yi) {
            std::cmp::Ordering::Less => {
                max_sum = max_sum + xw;
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                max_sum = max_sum + yw;
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                min_sum = min_sum + xw.min(yw);
                max_sum = max_sum + xw.max(yw);
                i += 1;
                j += 1;
            }
        }
    }
    for &(_, w) in &xs[i..] {
        max_sum = max_sum + w;
    }
    for &(_, w) in &ys[j..] {
        max_sum = max_sum + w;
    }
    Ok(min_sum / max_sum)
}

/// Similarity estimate from one pair of sketches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateReport {
    /// Fraction of matching slots.
    pub j_hat: f64,
    pub k: usize,
    /// sqrt(j_hat (1 - j_hat) / k).
    pub std_err: f64,
    pub scheme: Scheme,
}

/// Unbiased estimator: the fraction of slots where the two sketches agree.
/// Sketches must share scheme, k, master seed, and layout.
pub fn estimate_from_sketches(a: &Sketch, b: &Sketch) -> Result<EstimateReport> {
    if a.scheme != b.scheme {
        return Err(Error::Incompatible { field: "scheme" });
    }
    if a.k() != b.k() {
        return Err(Error::Incompatible { field: "k" });
    }
    if a.master_seed != b.master_seed {
        return Err(Error::Incompatible {
            field: "master_seed",
        });
    }
    if a.layout_id != b.layout_id {
        return Err(Error::Incompatible { field: "layout_id" });
    }
    if a.k() == 0 {
        return Err(Error::Usage("cannot estimate from empty sketches".into()));
    }
    let matches = a.values.slot_matches(&b.values)?;
    let hits = matches.iter().filter(|&&m| m).count();
    let k = matches.len();
    let j_hat = hits as f64 / k as f64;
    Ok(EstimateReport {
        j_hat,
        k,
        std_err: (j_hat * (1.0 - j_hat) / k as f64).sqrt(),
        scheme: a.scheme,
    })
}

/// One point of an estimation-error curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    pub k: usize,
    /// Mean over repetitions of |J_hat_k - J|.
    pub mae: f64,
    /// Standard error of that mean.
    pub se: f64,
}

/// Mean absolute estimation error as a function of k, averaged over `reps`
/// independent master seeds derived from `base_seed`.
///
/// Each repetition sketches once at k_max and reuses slot prefixes for the
/// smaller k; slots are independent, so the prefix of a k_max-sketch is a
/// k-sketch.
pub fn error_curve<W: Weight>(
    x: &SparseVector<W>,
    y: &SparseVector<W>,
    sketcher: &SchemeSketcher<'_>,
    k_max: usize,
    reps: usize,
    base_seed: u64,
) -> Result<Vec<CurvePoint>> {
    if k_max == 0 || reps == 0 {
        return Err(Error::Usage("k_max and reps must be at least 1".into()));
    }
    let j = exact_jaccard(x, y)?.to_f64().unwrap();
    let mut err_sum = vec![0.0f64; k_max];
    let mut err_sq_sum = vec![0.0f64; k_max];
    for rep in 0..reps {
        let seed = derive(base_seed, rep as u64);
        let a = sketcher.sketch(x, k_max, seed)?;
        let b = sketcher.sketch(y, k_max, seed)?;
        let matches = a.values.slot_matches(&b.values)?;
        let mut hits = 0usize;
        for (idx, &m) in matches.iter().enumerate() {
            if m {
                hits += 1;
            }
            let j_hat = hits as f64 / (idx + 1) as f64;
            let err = (j_hat - j).abs();
            err_sum[idx] += err;
            err_sq_sum[idx] += err * err;
        }
    }
    Ok((0..k_max)
        .map(|idx| {
            let n = reps as f64;
            let mean = err_sum[idx] / n;
            let var = (err_sq_sum[idx] / n - mean * mean).max(0.0);
            CurvePoint {
                k: idx + 1,
                mae: mean,
                se: (var / n).sqrt(),
            }
        })
        .collect())
}

/// Value statistics over a batch of sketches of one integer-valued scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HashStats {
    pub mean: f64,
    pub max: u64,
    /// ceil(log2(max + 1)): bits to store the largest observed value.
    pub bits_needed: u32,
}

/// Mean, max, and storage bits over all values of the given sketches.
/// Defined for the integer-valued schemes (red-green counts, reduction
/// hashes); Ioffe slots are (k*, t*) pairs with a fixed 128-bit record.
pub fn hash_stats(sketches: &[Sketch]) -> Result<HashStats> {
    let first = sketches
        .first()
        .ok_or_else(|| Error::Usage("no sketches to summarize".into()))?;
    let mut sum = 0.0f64;
    let mut max = 0u64;
    let mut count = 0u64;
    for s in sketches {
        if s.scheme != first.scheme {
            return Err(Error::Incompatible { field: "scheme" });
        }
        match &s.values {
            SketchValues::RedGreen(vals) => {
                for &v in vals {
                    sum += v as f64;
                    max = max.max(v as u64);
                    count += 1;
                }
            }
            SketchValues::Reduction(vals) => {
                for &v in vals {
                    sum += v as f64;
                    max = max.max(v);
                    count += 1;
                }
            }
            SketchValues::Ioffe(_) => {
                return Err(Error::Usage(
                    "hash stats are not defined for ioffe sketches (pair-valued slots)".into(),
                ))
            }
        }
    }
    if count == 0 {
        return Err(Error::Usage("sketches carry no values".into()));
    }
    Ok(HashStats {
        mean: sum / count as f64,
        max,
        bits_needed: if max == 0 {
            1
        } else {
            64 - max.leading_zeros()
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::redgreen::{self, RedGreenLayout, SketchParams};

    fn sv(dim: u32, entries: &[(u32, f64)]) -> SparseVector<f64> {
        SparseVector::new(dim, entries.to_vec()).unwrap()
    }

    /// Dense-loop oracle for the merge implementation.
    fn jaccard_dense(x: &SparseVector<f64>, y: &SparseVector<f64>) -> f64 {
        let mut min_sum = 0.0;
        let mut max_sum = 0.0;
        for i in 0..x.dim() {
            let (a, b) = (x.get(i), y.get(i));
            min_sum += a.min(b);
            max_sum += a.max(b);
        }
        min_sum / max_sum
    }

    #[test]
    fn exact_jaccard_examples() {
        let x = sv(4, &[(0, 1.0), (2, 2.0)]);
        assert_eq!(exact_jaccard(&x, &x).unwrap(), 1.0);

        let y = sv(4, &[(1, 5.0)]);
        assert_eq!(exact_jaccard(&x, &y).unwrap(), 0.0);

        let a = sv(2, &[(0, 1.0), (1, 2.0)]);
        let b = sv(2, &[(0, 2.0), (1, 1.0)]);
        assert_eq!(exact_jaccard(&a, &b).unwrap(), 0.5);
        assert_eq!(exact_jaccard(&a, &b).unwrap(), jaccard_dense(&a, &b));
    }

    #[test]
    fn exact_jaccard_rejects_bad_pairs() {
        let x = sv(4, &[(0, 1.0)]);
        let y = sv(5, &[(0, 1.0)]);
        assert!(matches!(
            exact_jaccard(&x, &y).unwrap_err(),
            Error::Usage(_)
        ));
        let e = SparseVector::<f64>::empty(4);
        assert!(matches!(
            exact_jaccard(&e, &e).unwrap_err(),
            Error::Domain(_)
        ));
        // one-sided empty is fine: similarity 0
        assert_eq!(exact_jaccard(&x, &SparseVector::empty(4)).unwrap(), 0.0);
    }

    #[test]
    fn exact_jaccard_matches_dense_oracle_and_is_symmetric() {
        let mut stream = crate::rng::SplitMix64::new(5);
        for _ in 0..200 {
            let dim = 12u32;
            let rand_vec = |stream: &mut crate::rng::SplitMix64| {
                let mut entries: Vec<(u32, f64)> = Vec::new();
                for i in 0..dim {
                    if stream.next_u64().is_multiple_of(2) {
                        entries.push((i, (stream.next_u64() % 100) as f64 / 10.0 + 0.1));
                    }
                }
                SparseVector::new(dim, entries).unwrap()
            };
            let x = rand_vec(&mut stream);
            let y = rand_vec(&mut stream);
            if x.is_empty() && y.is_empty() {
                continue;
            }
            let j = exact_jaccard(&x, &y).unwrap();
            assert_eq!(j, exact_jaccard(&y, &x).unwrap());
            assert!((0.0..=1.0).contains(&j));
            assert!((j - jaccard_dense(&x, &y)).abs() < 1e-12);
        }
    }

    #[test]
    fn estimator_checks_metadata_and_matches_self() {
        let layout = RedGreenLayout::build(&[2.0, 2.0], 1.0).unwrap();
        let x = sv(2, &[(0, 1.0), (1, 0.5)]);
        let a = redgreen::sketch(&layout, &x, &SketchParams::new(128, 5)).unwrap();
        let b = redgreen::sketch(&layout, &x, &SketchParams::new(128, 5)).unwrap();
        let rep = estimate_from_sketches(&a, &b).unwrap();
        assert_eq!(rep.j_hat, 1.0);
        assert_eq!(rep.std_err, 0.0);
        assert_eq!(rep.k, 128);

        let other_seed = redgreen::sketch(&layout, &x, &SketchParams::new(128, 6)).unwrap();
        assert!(matches!(
            estimate_from_sketches(&a, &other_seed).unwrap_err(),
            Error::Incompatible {
                field: "master_seed"
            }
        ));
        let other_layout = RedGreenLayout::build(&[2.0, 3.0], 1.0).unwrap();
        let c = redgreen::sketch(&other_layout, &x, &SketchParams::new(128, 5)).unwrap();
        assert!(matches!(
            estimate_from_sketches(&a, &c).unwrap_err(),
            Error::Incompatible { field: "layout_id" }
        ));
    }

    #[test]
    fn estimator_is_symmetric() {
        let layout = RedGreenLayout::build(&[3.0, 2.0, 1.0], 1.0).unwrap();
        let x = sv(3, &[(0, 2.0), (1, 0.5)]);
        let y = sv(3, &[(0, 1.0), (2, 0.75)]);
        let a = redgreen::sketch(&layout, &x, &SketchParams::new(200, 9)).unwrap();
        let b = redgreen::sketch(&layout, &y, &SketchParams::new(200, 9)).unwrap();
        let ab = estimate_from_sketches(&a, &b).unwrap();
        let ba = estimate_from_sketches(&b, &a).unwrap();
        assert_eq!(ab.j_hat, ba.j_hat);
        assert!((0.0..=1.0).contains(&ab.j_hat));
    }

    #[test]
    fn disjoint_supports_estimate_zero() {
        let layout = RedGreenLayout::build(&[1.0, 1.0, 1.0, 1.0], 1.0).unwrap();
        let x = sv(4, &[(0, 0.8), (1, 0.6)]);
        let y = sv(4, &[(2, 0.7), (3, 0.9)]);
        let a = redgreen::sketch(&layout, &x, &SketchParams::new(500, 40)).unwrap();
        let b = redgreen::sketch(&layout, &y, &SketchParams::new(500, 40)).unwrap();
        // shared draw sequences make disjoint pairs collide never, not rarely
        assert_eq!(estimate_from_sketches(&a, &b).unwrap().j_hat, 0.0);
    }

    #[test]
    fn estimator_mean_is_unbiased_at_half() {
        // J(x, y) = 0.5 by construction
        let x = sv(2, &[(0, 1.0)]);
        let y = sv(2, &[(0, 1.0), (1, 1.0)]);
        let layout = RedGreenLayout::build(&[1.0, 1.0], 1.0).unwrap();
        assert_eq!(exact_jaccard(&x, &y).unwrap(), 0.5);
        let (reps, k) = (200usize, 50usize);
        let mut mean = 0.0;
        for rep in 0..reps {
            let seed = derive(404, rep as u64);
            let a = redgreen::sketch(&layout, &x, &SketchParams::new(k, seed)).unwrap();
            let b = redgreen::sketch(&layout, &y, &SketchParams::new(k, seed)).unwrap();
            mean += estimate_from_sketches(&a, &b).unwrap().j_hat;
        }
        mean /= reps as f64;
        let tol = 3.0 * (0.25 / (reps * k) as f64).sqrt();
        assert!((mean - 0.5).abs() < tol, "mean = {mean}, tol = {tol}");
    }

    #[test]
    fn error_curve_shrinks_with_k() {
        let x = sv(3, &[(0, 1.0), (1, 0.5)]);
        let y = sv(3, &[(0, 0.5), (1, 0.5), (2, 0.5)]);
        let layout = RedGreenLayout::build(&[1.0, 1.0, 1.0], 1.0).unwrap();
        let sketcher = SchemeSketcher::RedGreen {
            layout: &layout,
            delta: 1e-12,
        };
        let curve = error_curve(&x, &y, &sketcher, 50, 200, 777).unwrap();
        assert_eq!(curve.len(), 50);
        assert!(
            curve[49].mae < curve[0].mae,
            "{} !< {}",
            curve[49].mae,
            curve[0].mae
        );

        // identical pair: flat zero curve
        let flat = error_curve(&x, &x, &sketcher, 10, 20, 777).unwrap();
        assert!(flat.iter().all(|p| p.mae == 0.0));

        assert!(error_curve(&x, &y, &sketcher, 0, 10, 1).is_err());
        assert!(error_curve(&x, &y, &sketcher, 10, 0, 1).is_err());
    }

    #[test]
    fn hash_stats_examples() {
        let ones = Sketch {
            scheme: Scheme::RedGreen,
            master_seed: 0,
            layout_id: 0,
            values: SketchValues::RedGreen(vec![1, 1, 1]),
        };
        let st = hash_stats(std::slice::from_ref(&ones)).unwrap();
        assert_eq!((st.mean, st.max, st.bits_needed), (1.0, 1, 1));

        // geometric s = 0.1: mean near 10, one byte of storage
        let layout = RedGreenLayout::build(&[10.0], 1.0).unwrap();
        let x = sv(1, &[(0, 1.0)]);
        let sketches: Vec<Sketch> = (0..20)
            .map(|i| redgreen::sketch(&layout, &x, &SketchParams::new(500, derive(8, i))).unwrap())
            .collect();
        let st = hash_stats(&sketches).unwrap();
        assert!((st.mean - 10.0).abs() < 0.5, "mean = {}", st.mean);
        assert!(st.bits_needed <= 8, "bits = {}", st.bits_needed);

        assert!(hash_stats(&[]).is_err());
    }
}
