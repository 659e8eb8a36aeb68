//! Baseline weighted minwise schemes: Ioffe's consistent weighted sampling
//! (exact, O(d) per hash) and the biased weighted-to-unweighted reduction
//! hashed with 2-universal minwise.

use crate::error::{Error, Result};
use crate::rng::{derive, gamma21, SplitMix64};
use crate::scalar::Weight;
use crate::sketch::{Scheme, Sketch, SketchValues};
use crate::vectors::SparseVector;

/// One CWS hash: the arg-min coordinate and its quantized level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct IoffeHash {
    pub k_star: u32,
    pub t_star: i64,
}

/// Returned by [`minwise_unweighted`] for an empty set; larger than any real
/// hash (which is < 2^61 - 1), so it never compares equal to one.
pub const EMPTY_SET_SENTINEL: u64 = u64::MAX;

const MERSENNE_P61: u64 = (1 << 61) - 1;

/// Salt separating the reduction's Bernoulli stream from slot seeds.
const REDUCTION_SALT: u64 = 0x5245_4455_4345_5f31;

/// Elements one reduction may produce before we refuse the blowup.
const REDUCTION_ELEMENT_BUDGET: u64 = 100_000_000;

/// One Ioffe CWS hash of `x` for the given slot.
///
/// Per nonzero coordinate j, a stream keyed by (master_seed, slot, j) yields
/// r, c ~ Gamma(2,1) and beta ~ Uniform(0,1); then
/// t = floor(ln x_j / r + beta), y = exp(r (t - beta)), z = y exp(r),
/// a = c / z, and the hash is (argmin_j a_j, t at that j). The per-coordinate
/// keying makes samples consistent across vectors sharing a coordinate.
pub fn ioffe_hash<W: Weight>(
    x: &SparseVector<W>,
    slot: usize,
    master_seed: u64,
) -> Result<IoffeHash> {
    if x.is_empty() {
        return Err(Error::Domain("cannot hash an empty vector".into()));
    }
    let slot_seed = derive(master_seed, slot as u64);
    let mut best: Option<(f64, IoffeHash)> = None;
    for &(coord, w) in x.entries() {
        let mut stream = SplitMix64::new(derive(slot_seed, coord as u64));
        let r = gamma21(&mut stream);
        let c = gamma21(&mut stream);
        let beta = stream.next_unit();
        let w = w.to_f64().unwrap();
        let t = (w.ln() / r + beta).floor();
        let y = (r * (t - beta)).exp();
        let z = y * r.exp();
        let a = c / z;
        let candidate = (
            a,
            IoffeHash {
                k_star: coord,
                t_star: t as i64,
            },
        );
        match best {
            Some((b, _)) if b <= a => {}
            _ => best = Some(candidate),
        }
    }
    Ok(best.unwrap().1)
}

/// k independent Ioffe hashes. O(dk): one pass over the vector per slot.
pub fn ioffe_sketch<W: Weight>(x: &SparseVector<W>, k: usize, master_seed: u64) -> Result<Sketch> {
    if k == 0 {
        return Err(Error::Usage("k must be at least 1".into()));
    }
    let mut values = Vec::with_capacity(k);
    for slot in 0..k {
        values.push(ioffe_hash(x, slot, master_seed)?);
    }
    Ok(Sketch {
        scheme: Scheme::Ioffe,
        master_seed,
        layout_id: 0,
        values: SketchValues::Ioffe(values),
    })
}

/// Unweighted (level, coordinate) set produced by the reduction.
/// Elements are sorted by (coordinate, level) and duplicate-free; levels for
/// coordinate j never exceed ceil(x_j).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnweightedSet {
    elements: Vec<(u32, u32)>,
    dim: u32,
}

impl UnweightedSet {
    pub fn elements(&self) -> &[(u32, u32)] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    /// Plain set Jaccard |a n b| / |a u b| by sorted merge.
    pub fn jaccard(&self, other: &UnweightedSet) -> Result<f64> {
        if self.is_empty() && other.is_empty() {
            return Err(Error::Domain(
                "set Jaccard of two empty sets is undefined".into(),
            ));
        }
        let (mut i, mut j, mut both) = (0usize, 0usize, 0usize);
        while i < self.elements.len() && j < other.elements.len() {
            match key_order(self.elements[i]).cmp(&key_order(other.elements[j])) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    both += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        let union = self.elements.len() + other.elements.len() - both;
        Ok(both as f64 / union as f64)
    }
}

fn key_order(e: (u32, u32)) -> (u32, u32) {
    // elements are stored (level, coord) but ordered by coordinate first
    (e.1, e.0)
}

/// Replicate integer weight as levels 1..floor(x_j) and include level
/// floor(x_j)+1 with probability frac(x_j), drawn from a stream keyed by
/// (seed, j) so one seed gives every vector a consistent reduction.
pub fn reduce_to_unweighted<W: Weight>(x: &SparseVector<W>, seed: u64) -> Result<UnweightedSet> {
    let dim = x.dim();
    let mut elements = Vec::new();
    let mut total: u64 = 0;
    for &(coord, w) in x.entries() {
        let w = w.to_f64().unwrap();
        let floor = w.floor();
        let frac = w - floor;
        if floor >= u32::MAX as f64 {
            return Err(Error::Domain(format!(
                "coordinate {coord}: weight {w} replicates past u32 levels"
            )));
        }
        let floor = floor as u64;
        total += floor + 1;
        if total > REDUCTION_ELEMENT_BUDGET {
            return Err(Error::Domain(format!(
                "reduction exceeds the {REDUCTION_ELEMENT_BUDGET}-element budget; \
                 weights are too large to replicate"
            )));
        }
        let top = floor + 1;
        // level * dim + coord must fit the 61-bit universal hashing key space
        if (top as u128) * (dim as u128) + coord as u128 >= MERSENNE_P61 as u128 {
            return Err(Error::Domain(format!(
                "coordinate {coord}: element key for level {top} exceeds the \
                 61-bit key space"
            )));
        }
        for level in 1..=floor {
            elements.push((level as u32, coord));
        }
        if frac > 0.0 {
            let u = SplitMix64::new(derive(seed, coord as u64)).next_unit();
            if u <= frac {
                elements.push((top as u32, coord));
            }
        }
    }
    debug_assert!(elements
        .windows(2)
        .all(|w| key_order(w[0]) < key_order(w[1])));
    Ok(UnweightedSet { elements, dim })
}

#[inline]
fn mod_p61(x: u128) -> u64 {
    let mut s = (x & MERSENNE_P61 as u128) as u64 + (x >> 61) as u64;
    if s >= MERSENNE_P61 {
        s -= MERSENNE_P61;
    }
    s
}

/// ((a * key + b) mod p) with p = 2^61 - 1; 2-universal over keys < p.
#[inline]
fn u2_hash(a: u64, b: u64, key: u64) -> u64 {
    let prod = mod_p61(a as u128 * key as u128);
    let mut s = prod + b;
    if s >= MERSENNE_P61 {
        s -= MERSENNE_P61;
    }
    s
}

/// Min of a per-slot 2-universal hash over the set's elements; the
/// permutation surrogate for unweighted minwise hashing. One full pass per
/// slot. Empty sets yield [`EMPTY_SET_SENTINEL`].
pub fn minwise_unweighted(s: &UnweightedSet, slot: usize, master_seed: u64) -> u64 {
    let mut stream = SplitMix64::new(derive(master_seed, slot as u64));
    let a = stream.next_u64() % (MERSENNE_P61 - 1) + 1;
    let b = stream.next_u64() % MERSENNE_P61;
    s.elements
        .iter()
        .map(|&(level, coord)| u2_hash(a, b, level as u64 * s.dim as u64 + coord as u64))
        .min()
        .unwrap_or(EMPTY_SET_SENTINEL)
}

/// Reduction seed used by [`reduction_sketch`] for a given master seed;
/// exposed so setup-vs-hashing timing can reproduce the same reduction.
pub fn reduction_seed(master_seed: u64) -> u64 {
    derive(master_seed, REDUCTION_SALT)
}

/// Reduce once (seed derived from the master seed) and take k minwise passes.
pub fn reduction_sketch<W: Weight>(
    x: &SparseVector<W>,
    k: usize,
    master_seed: u64,
) -> Result<Sketch> {
    if k == 0 {
        return Err(Error::Usage("k must be at least 1".into()));
    }
    if x.is_empty() {
        return Err(Error::Domain("cannot hash an empty vector".into()));
    }
    let set = reduce_to_unweighted(x, reduction_seed(master_seed))?;
    let values = (0..k)
        .map(|slot| minwise_unweighted(&set, slot, master_seed))
        .collect();
    Ok(Sketch {
        scheme: Scheme::Reduction,
        master_seed,
        layout_id: 0,
        values: SketchValues::Reduction(values),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimate::exact_jaccard;

    fn sv(dim: u32, entries: &[(u32, f64)]) -> SparseVector<f64> {
        SparseVector::new(dim, entries.to_vec()).unwrap()
    }

    #[test]
    fn ioffe_is_deterministic() {
        let x = sv(8, &[(0, 0.5), (3, 2.0), (7, 0.01)]);
        for slot in 0..16 {
            assert_eq!(
                ioffe_hash(&x, slot, 99).unwrap(),
                ioffe_hash(&x, slot, 99).unwrap()
            );
        }
        assert_ne!(
            ioffe_hash(&x, 0, 99).unwrap(),
            ioffe_hash(&x, 1, 99).unwrap()
        );
        assert!(ioffe_hash(&SparseVector::<f64>::empty(8), 0, 99).is_err());
    }

    #[test]
    fn ioffe_self_similarity_is_one() {
        let x = sv(8, &[(0, 0.5), (3, 2.0), (5, 1.25)]);
        let a = ioffe_sketch(&x, 500, 7).unwrap();
        let b = ioffe_sketch(&x, 500, 7).unwrap();
        let matches = a.values.slot_matches(&b.values).unwrap();
        assert!(matches.iter().all(|&m| m));
    }

    #[test]
    fn ioffe_disjoint_supports_never_collide() {
        let x = sv(8, &[(0, 1.0), (1, 2.0)]);
        let y = sv(8, &[(4, 1.0), (6, 0.5)]);
        let a = ioffe_sketch(&x, 10_000, 3).unwrap();
        let b = ioffe_sketch(&y, 10_000, 3).unwrap();
        let hits = a
            .values
            .slot_matches(&b.values)
            .unwrap()
            .iter()
            .filter(|&&m| m)
            .count();
        assert_eq!(hits, 0);
    }

    #[test]
    fn ioffe_collision_rate_tracks_jaccard() {
        let x = sv(6, &[(0, 1.0), (1, 0.5), (2, 2.0), (4, 0.25)]);
        let y = sv(6, &[(0, 0.5), (1, 0.5), (2, 2.5), (5, 1.0)]);
        let j = exact_jaccard(&x, &y).unwrap();
        let k = 10_000usize;
        let a = ioffe_sketch(&x, k, 11).unwrap();
        let b = ioffe_sketch(&y, k, 11).unwrap();
        let hits = a
            .values
            .slot_matches(&b.values)
            .unwrap()
            .iter()
            .filter(|&&m| m)
            .count();
        let freq = hits as f64 / k as f64;
        let tol = 3.0 * (j * (1.0 - j) / k as f64).sqrt();
        assert!((freq - j).abs() < tol, "freq {freq} vs J {j} (tol {tol})");
    }

    #[test]
    fn reduction_of_integer_weights_is_seedless() {
        let x = sv(4, &[(0, 3.0)]);
        let expect = [(1u32, 0u32), (2, 0), (3, 0)];
        for seed in 0..100 {
            assert_eq!(
                reduce_to_unweighted(&x, seed).unwrap().elements(),
                &expect[..]
            );
        }
        let empty = reduce_to_unweighted(&SparseVector::<f64>::empty(4), 1).unwrap();
        assert!(empty.is_empty());
    }

    #[test]
    fn fractional_inclusion_is_bernoulli() {
        let x = sv(2, &[(0, 0.5)]);
        let n = 10_000u64;
        let mut hits = 0usize;
        for seed in 0..n {
            let s = reduce_to_unweighted(&x, seed).unwrap();
            match s.elements() {
                [] => {}
                [(1, 0)] => hits += 1,
                other => panic!("unexpected reduction {other:?}"),
            }
        }
        let freq = hits as f64 / n as f64;
        assert!((freq - 0.5).abs() < 0.016, "freq = {freq}");
    }

    #[test]
    fn reduction_respects_level_cap() {
        let x = sv(2, &[(0, 2.75), (1, 1.0)]);
        for seed in 0..50 {
            let s = reduce_to_unweighted(&x, seed).unwrap();
            for &(level, coord) in s.elements() {
                let w = x.get(coord);
                assert!(level as f64 <= w.ceil());
            }
        }
    }

    #[test]
    fn minwise_is_deterministic_and_handles_singletons() {
        let x = sv(4, &[(0, 2.0), (2, 1.0)]);
        let s = reduce_to_unweighted(&x, 5).unwrap();
        for slot in 0..8 {
            let h = minwise_unweighted(&s, slot, 21);
            assert_eq!(h, minwise_unweighted(&s, slot, 21));
            assert!(h < MERSENNE_P61);
        }
        let single = reduce_to_unweighted(&sv(4, &[(1, 1.0)]), 5).unwrap();
        assert_eq!(single.len(), 1);
        let h = minwise_unweighted(&single, 3, 21);
        assert!(h < MERSENNE_P61);

        let empty = reduce_to_unweighted(&SparseVector::<f64>::empty(4), 5).unwrap();
        assert_eq!(minwise_unweighted(&empty, 3, 21), EMPTY_SET_SENTINEL);
    }

    #[test]
    fn identical_integer_vectors_estimate_one() {
        let x = sv(6, &[(0, 2.0), (3, 5.0), (5, 1.0)]);
        let a = reduction_sketch(&x, 256, 17).unwrap();
        let b = reduction_sketch(&x, 256, 17).unwrap();
        assert!(a.values.slot_matches(&b.values).unwrap().iter().all(|&m| m));
    }

    #[test]
    fn integer_weight_reduction_matches_exact_jaccard() {
        let x = sv(5, &[(0, 2.0), (1, 1.0), (3, 4.0)]);
        let y = sv(5, &[(0, 1.0), (1, 3.0), (4, 2.0)]);
        let sx = reduce_to_unweighted(&x, 123).unwrap();
        let sy = reduce_to_unweighted(&y, 123).unwrap();
        let j_set = sx.jaccard(&sy).unwrap();
        let j_exact = exact_jaccard(&x, &y).unwrap();
        assert_eq!(j_set, j_exact);
    }

    #[test]
    fn oversized_reductions_are_refused() {
        let x = sv(8, &[(0, 4.0e9)]);
        assert!(matches!(
            reduce_to_unweighted(&x, 1).unwrap_err(),
            Error::Domain(_)
        ));
    }
}
