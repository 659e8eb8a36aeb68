//! Rejection-sampling weighted minwise hashing over a red-green interval map.
//!
//! The dataset's per-coordinate maxima are rounded up to integers m_i and laid
//! end to end over [0, M), M = sum m_i. A vector x colors the leading x_i of
//! coordinate i's interval green. Hashing draws chained uniform reals over
//! [0, M) and returns the 1-based index of the first draw that lands green;
//! two vectors hashed under one slot seed therefore collide exactly when the
//! first draw inside the union of their green regions is inside the
//! intersection, which happens with probability equal to their generalized
//! Jaccard similarity.
//!
//! Hash values are geometric with success probability equal to the vector's
//! effective sparsity ||alpha x||_1 / M, so the expected work per hash is a
//! small constant and the values themselves fit in a few bits.

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::rng::{derive, ChainedRng};
use crate::scalar::Weight;
use crate::sketch::{Scheme, Sketch, SketchValues};
use crate::vectors::{Dataset, SparseVector};

/// Default ceiling on the O(1) lookup table, in cells (4 bytes each).
pub const DEFAULT_CELL_BUDGET: u64 = 1 << 28;

/// Default tail mass for the iteration cap.
pub const DEFAULT_DELTA: f64 = 1e-12;

const LAYOUT_MAGIC: &[u8; 4] = b"WMHL";
const LAYOUT_VERSION: u16 = 1;

/// Construction knobs for [`RedGreenLayout`].
#[derive(Debug, Clone, Copy)]
pub struct LayoutOptions {
    /// Refuse to build the cell table past this many cells.
    pub cell_budget: u64,
    /// Skip the M-sized table entirely (low-memory mode); lookups fall back
    /// to binary search.
    pub build_table: bool,
}

impl Default for LayoutOptions {
    fn default() -> Self {
        LayoutOptions {
            cell_budget: DEFAULT_CELL_BUDGET,
            build_table: true,
        }
    }
}

/// Integer interval layout shared by every vector of a dataset.
///
/// Coordinates whose observed maximum is zero are compacted out: they are red
/// for every vector and would only inflate M.
#[derive(Debug, Clone)]
pub struct RedGreenLayout {
    dim: u32,
    alpha: f64,
    /// Original indices of retained coordinates, strictly increasing.
    coord_ids: Vec<u32>,
    /// Integer interval sizes m_i = ceil(alpha * maxima_i).
    bounds: Vec<u64>,
    /// prefix[i] = sum of bounds below i; prefix[n] = M.
    prefix: Vec<u64>,
    /// Cell -> retained-coordinate table of length M; absent in low-memory mode.
    int_to_comp: Option<Vec<u32>>,
    layout_id: u64,
}

impl RedGreenLayout {
    /// Build from dataset maxima with default options.
    pub fn build<W: Weight>(maxima: &[W], alpha: f64) -> Result<Self> {
        Self::build_with(maxima, alpha, &LayoutOptions::default())
    }

    pub fn build_with<W: Weight>(maxima: &[W], alpha: f64, opts: &LayoutOptions) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::Usage(format!(
                "alpha must be positive and finite, got {alpha}"
            )));
        }
        if maxima.len() > u32::MAX as usize {
            return Err(Error::Usage("dimensionality exceeds u32".into()));
        }
        let mut coord_ids = Vec::new();
        let mut bounds = Vec::new();
        let mut prefix = vec![0u64];
        let mut total: u64 = 0;
        for (i, &mx) in maxima.iter().enumerate() {
            let mx = mx.to_f64().unwrap();
            if !mx.is_finite() || mx < 0.0 {
                return Err(Error::Domain(format!(
                    "invalid maximum {mx} at coordinate {i}"
                )));
            }
            if mx == 0.0 {
                continue;
            }
            let m = (alpha * mx).ceil();
            if m >= 9.0e18 {
                return Err(Error::Domain(format!(
                    "coordinate {i}: interval size {m} overflows the layout"
                )));
            }
            let m = (m as u64).max(1);
            coord_ids.push(i as u32);
            bounds.push(m);
            total = total
                .checked_add(m)
                .ok_or_else(|| Error::Domain("layout size overflows u64".into()))?;
            prefix.push(total);
        }
        if total == 0 {
            return Err(Error::Usage("all-zero dataset: nothing to lay out".into()));
        }
        let int_to_comp = if opts.build_table {
            if total > opts.cell_budget {
                return Err(Error::Resource {
                    cells: total,
                    budget: opts.cell_budget,
                });
            }
            let mut table = Vec::with_capacity(total as usize);
            for (ci, &m) in bounds.iter().enumerate() {
                table.extend(std::iter::repeat_n(ci as u32, m as usize));
            }
            Some(table)
        } else {
            None
        };
        let mut layout = RedGreenLayout {
            dim: maxima.len() as u32,
            alpha,
            coord_ids,
            bounds,
            prefix,
            int_to_comp,
            layout_id: 0,
        };
        layout.layout_id = digest64(&layout.to_bytes());
        Ok(layout)
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Total integer length M of the layout.
    pub fn m_total(&self) -> u64 {
        *self.prefix.last().unwrap()
    }

    /// Retained coordinate count.
    pub fn n_coords(&self) -> usize {
        self.coord_ids.len()
    }

    pub fn coord_ids(&self) -> &[u32] {
        &self.coord_ids
    }

    pub fn bounds(&self) -> &[u64] {
        &self.bounds
    }

    pub fn prefix(&self) -> &[u64] {
        &self.prefix
    }

    /// Cell table, absent in low-memory mode.
    pub fn int_to_comp(&self) -> Option<&[u32]> {
        self.int_to_comp.as_deref()
    }

    /// 64-bit digest of the serialized layout; sketches carry it so
    /// estimation can refuse cross-layout comparisons.
    pub fn layout_id(&self) -> u64 {
        self.layout_id
    }

    pub fn has_table(&self) -> bool {
        self.int_to_comp.is_some()
    }

    /// Bind a vector to the layout: scale by alpha, check bounds, and
    /// precompute the green interval ends used by both lookup variants.
    pub fn prepare<W: Weight>(&self, x: &SparseVector<W>) -> Result<PreparedVector<'_>> {
        if x.dim() != self.dim {
            return Err(Error::Usage(format!(
                "vector dim {} does not match layout dim {}",
                x.dim(),
                self.dim
            )));
        }
        let mut starts = Vec::with_capacity(x.nnz());
        let mut ends = Vec::with_capacity(x.nnz());
        let mut green_end = self
            .int_to_comp
            .as_ref()
            .map(|_| vec![f64::NEG_INFINITY; self.coord_ids.len()]);
        let mut scaled_l1 = 0.0f64;
        for &(idx, w) in x.entries() {
            let ci = self
                .coord_ids
                .binary_search(&idx)
                .map_err(|_| Error::LayoutMismatch {
                    line: 0,
                    coord: idx,
                    msg: "coordinate is absent from the layout (dataset maximum was 0)".into(),
                })?;
            let scaled = self.alpha * w.to_f64().unwrap();
            if scaled > self.bounds[ci] as f64 {
                return Err(Error::LayoutMismatch {
                    line: 0,
                    coord: idx,
                    msg: format!(
                        "scaled weight {scaled} exceeds the layout bound {}",
                        self.bounds[ci]
                    ),
                });
            }
            let start = self.prefix[ci] as f64;
            let end = start + scaled;
            starts.push(start);
            ends.push(end);
            if let Some(ge) = green_end.as_mut() {
                ge[ci] = end;
            }
            scaled_l1 += scaled;
        }
        Ok(PreparedVector {
            layout: self,
            starts,
            ends,
            green_end,
            scaled_l1,
        })
    }

    /// Serialize to the `WMHL` little-endian byte layout.
    pub fn to_bytes(&self) -> Vec<u8> {
        let n = self.coord_ids.len();
        let mut out = Vec::with_capacity(40 + n * 20 + 8);
        out.extend_from_slice(LAYOUT_MAGIC);
        out.extend_from_slice(&LAYOUT_VERSION.to_le_bytes());
        out.extend_from_slice(&0u16.to_le_bytes());
        out.extend_from_slice(&(self.dim as u64).to_le_bytes());
        out.extend_from_slice(&(n as u64).to_le_bytes());
        out.extend_from_slice(&self.m_total().to_le_bytes());
        out.extend_from_slice(&self.alpha.to_le_bytes());
        for &c in &self.coord_ids {
            out.extend_from_slice(&c.to_le_bytes());
        }
        for &m in &self.bounds {
            out.extend_from_slice(&m.to_le_bytes());
        }
        for &p in &self.prefix {
            out.extend_from_slice(&p.to_le_bytes());
        }
        out
    }

    pub fn write_to<Wr: std::io::Write>(&self, w: &mut Wr) -> Result<()> {
        w.write_all(&self.to_bytes())?;
        Ok(())
    }

    /// Deserialize, validating the invariants. `opts.build_table` controls
    /// whether the M-sized table is rebuilt.
    pub fn from_bytes(bytes: &[u8], opts: &LayoutOptions) -> Result<Self> {
        let mut cur = Cursor { bytes, pos: 0 };
        if cur.take(4)? != LAYOUT_MAGIC {
            return Err(Error::Format("not a WMHL layout file".into()));
        }
        let version = u16::from_le_bytes(cur.take(2)?.try_into().unwrap());
        if version != LAYOUT_VERSION {
            return Err(Error::Format(format!(
                "unsupported layout version {version}"
            )));
        }
        cur.take(2)?;
        let dim = u64::from_le_bytes(cur.take(8)?.try_into().unwrap());
        let n = u64::from_le_bytes(cur.take(8)?.try_into().unwrap()) as usize;
        let m_total = u64::from_le_bytes(cur.take(8)?.try_into().unwrap());
        let alpha = f64::from_le_bytes(cur.take(8)?.try_into().unwrap());
        if dim > u32::MAX as u64 || n > dim as usize {
            return Err(Error::Format("corrupt layout header".into()));
        }
        let mut coord_ids = Vec::with_capacity(n);
        for _ in 0..n {
            coord_ids.push(u32::from_le_bytes(cur.take(4)?.try_into().unwrap()));
        }
        let mut bounds = Vec::with_capacity(n);
        for _ in 0..n {
            bounds.push(u64::from_le_bytes(cur.take(8)?.try_into().unwrap()));
        }
        let mut prefix = Vec::with_capacity(n + 1);
        for _ in 0..=n {
            prefix.push(u64::from_le_bytes(cur.take(8)?.try_into().unwrap()));
        }
        if cur.pos != bytes.len() {
            return Err(Error::Format("trailing bytes in layout file".into()));
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::Format("corrupt layout: bad alpha".into()));
        }
        if coord_ids.windows(2).any(|w| w[0] >= w[1])
            || coord_ids.last().is_some_and(|&c| c as u64 >= dim)
        {
            return Err(Error::Format(
                "corrupt layout: coordinate ids not increasing".into(),
            ));
        }
        if prefix[0] != 0
            || prefix[n] != m_total
            || (0..n).any(|i| bounds[i] == 0 || prefix[i + 1] - prefix[i] != bounds[i])
        {
            return Err(Error::Format(
                "corrupt layout: prefix sums inconsistent".into(),
            ));
        }
        let int_to_comp = if opts.build_table {
            if m_total > opts.cell_budget {
                return Err(Error::Resource {
                    cells: m_total,
                    budget: opts.cell_budget,
                });
            }
            let mut table = Vec::with_capacity(m_total as usize);
            for (ci, &m) in bounds.iter().enumerate() {
                table.extend(std::iter::repeat_n(ci as u32, m as usize));
            }
            Some(table)
        } else {
            None
        };
        Ok(RedGreenLayout {
            dim: dim as u32,
            alpha,
            coord_ids,
            bounds,
            prefix,
            int_to_comp,
            layout_id: digest64(bytes),
        })
    }

    pub fn read_from<R: std::io::Read>(r: &mut R, opts: &LayoutOptions) -> Result<Self> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes, opts)
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Format("truncated layout file".into()));
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }
}

fn digest64(bytes: &[u8]) -> u64 {
    let digest = Sha256::digest(bytes);
    u64::from_le_bytes(digest[..8].try_into().unwrap())
}

/// A vector bound to a layout: scaled weights mapped onto interval starts and
/// green-interval ends, ready for constant-time membership tests.
#[derive(Debug, Clone)]
pub struct PreparedVector<'a> {
    layout: &'a RedGreenLayout,
    /// Interval starts M_{i-1} for the vector's nonzero coordinates, ascending.
    starts: Vec<f64>,
    /// Matching green ends M_{i-1} + alpha * x_i.
    ends: Vec<f64>,
    /// Dense green end per retained coordinate (-inf where the vector is
    /// zero); present only when the layout carries its cell table.
    green_end: Option<Vec<f64>>,
    scaled_l1: f64,
}

impl<'a> PreparedVector<'a> {
    pub fn layout(&self) -> &'a RedGreenLayout {
        self.layout
    }

    pub fn is_empty(&self) -> bool {
        self.starts.is_empty()
    }

    /// Effective sparsity ||alpha x||_1 / M: the probability that one uniform
    /// draw lands green, hence the inverse of the expected hash value.
    pub fn sparsity(&self) -> f64 {
        self.scaled_l1 / self.layout.m_total() as f64
    }

    fn check_r(&self, r: f64) -> Result<()> {
        let m = self.layout.m_total() as f64;
        if !(r >= 0.0 && r < m) {
            return Err(Error::Domain(format!(
                "r = {r} outside the sampling range [0, {m})"
            )));
        }
        Ok(())
    }

    /// Constant-time membership: cell-table lookup plus one comparison.
    pub fn is_green_o1(&self, r: f64) -> Result<bool> {
        self.check_r(r)?;
        if self.green_end.is_none() {
            return Err(Error::Usage(
                "layout was built without its cell table (low-memory mode)".into(),
            ));
        }
        Ok(self.is_green_table(r))
    }

    /// O(log d) membership by binary search over the vector's green intervals.
    /// Bit-identical to [`PreparedVector::is_green_o1`] on every input.
    pub fn is_green_binsearch(&self, r: f64) -> Result<bool> {
        self.check_r(r)?;
        Ok(self.is_green_search(r))
    }

    #[inline]
    fn is_green_table(&self, r: f64) -> bool {
        let table = self.layout.int_to_comp.as_deref().unwrap();
        let green_end = self.green_end.as_deref().unwrap();
        let cell = r as usize;
        let i = table[cell] as usize;
        if r <= green_end[i] {
            return true;
        }
        // An exactly-integer r is also the closed right endpoint of the
        // previous coordinate's interval when that interval is fully green.
        if r > 0.0 && r == (cell as f64) {
            let left = table[cell - 1] as usize;
            left != i && r <= green_end[left]
        } else {
            false
        }
    }

    #[inline]
    fn is_green_search(&self, r: f64) -> bool {
        // Intervals are disjoint and sorted; the only candidate containing r
        // is the one with the largest start <= r.
        let idx = self.starts.partition_point(|&s| s <= r);
        idx > 0 && r <= self.ends[idx - 1]
    }

    #[inline]
    fn is_green(&self, r: f64) -> bool {
        if self.green_end.is_some() {
            self.is_green_table(r)
        } else {
            self.is_green_search(r)
        }
    }

    /// One weighted minwise hash: the number of chained uniform draws until
    /// the first green hit. Geometric with p = sparsity().
    pub fn hash_one(&self, slot_seed: u64, max_iters: u64) -> Result<u32> {
        if self.is_empty() {
            return Err(Error::Domain("cannot hash an empty vector".into()));
        }
        let mut rng = ChainedRng::new(slot_seed, self.layout.m_total() as f64);
        for count in 1..=max_iters {
            let r = rng.next_uniform();
            if self.is_green(r) {
                return Ok(count as u32);
            }
            rng = rng.reseed_from(r);
        }
        Err(Error::IterationCap {
            sparsity: self.sparsity(),
            max_iters,
        })
    }

    /// As [`PreparedVector::hash_one`], returning every draw taken.
    /// Diagnostic: lets callers verify that two vectors under one slot seed
    /// see identical draw sequences up to the earlier green hit.
    pub fn hash_one_traced(&self, slot_seed: u64, max_iters: u64) -> Result<(u32, Vec<f64>)> {
        if self.is_empty() {
            return Err(Error::Domain("cannot hash an empty vector".into()));
        }
        let mut rng = ChainedRng::new(slot_seed, self.layout.m_total() as f64);
        let mut draws = Vec::new();
        for count in 1..=max_iters {
            let r = rng.next_uniform();
            draws.push(r);
            if self.is_green(r) {
                return Ok((count as u32, draws));
            }
            rng = rng.reseed_from(r);
        }
        Err(Error::IterationCap {
            sparsity: self.sparsity(),
            max_iters,
        })
    }
}

/// Sketching parameters: slot count, master seed, and the tail mass that
/// bounds the per-hash iteration cap.
#[derive(Debug, Clone, Copy)]
pub struct SketchParams {
    pub k: usize,
    pub master_seed: u64,
    pub delta: f64,
}

impl SketchParams {
    pub fn new(k: usize, master_seed: u64) -> Self {
        SketchParams {
            k,
            master_seed,
            delta: DEFAULT_DELTA,
        }
    }
}

/// Iteration cap from the geometric tail: the smallest t with
/// (1 - s)^t <= delta, clamped to [1, u32::MAX].
pub fn max_iters_for(sparsity: f64, delta: f64) -> u64 {
    if sparsity >= 1.0 - 1e-9 {
        // the formula degenerates to 0-1 draws here, but the measured
        // sparsity carries summation rounding; keep a few draws in hand
        return 8;
    }
    if sparsity <= 0.0 {
        return 1;
    }
    let raw = (delta.ln() / (-sparsity).ln_1p()).ceil();
    raw.clamp(1.0, u32::MAX as f64) as u64
}

/// k independent hashes of one vector; slot i uses the seed derived from
/// (master_seed, i). Expected work O(k / s_x) after the O(d) bind.
pub fn sketch<W: Weight>(
    layout: &RedGreenLayout,
    x: &SparseVector<W>,
    params: &SketchParams,
) -> Result<Sketch> {
    let prepared = layout.prepare(x)?;
    sketch_prepared(&prepared, params)
}

/// As [`sketch`] for a vector already bound to the layout.
pub fn sketch_prepared(prepared: &PreparedVector<'_>, params: &SketchParams) -> Result<Sketch> {
    if params.k == 0 {
        return Err(Error::Usage("k must be at least 1".into()));
    }
    if !(params.delta > 0.0 && params.delta < 1.0) {
        return Err(Error::Usage(format!(
            "delta must be in (0,1), got {}",
            params.delta
        )));
    }
    let max_iters = max_iters_for(prepared.sparsity(), params.delta);
    let mut values = Vec::with_capacity(params.k);
    for slot in 0..params.k {
        values.push(prepared.hash_one(derive(params.master_seed, slot as u64), max_iters)?);
    }
    Ok(Sketch {
        scheme: Scheme::RedGreen,
        master_seed: params.master_seed,
        layout_id: prepared.layout().layout_id(),
        values: SketchValues::RedGreen(values),
    })
}

/// Effective sparsity of `x` under `layout`.
pub fn effective_sparsity<W: Weight>(layout: &RedGreenLayout, x: &SparseVector<W>) -> f64 {
    layout.alpha() * x.l1_norm().to_f64().unwrap() / layout.m_total() as f64
}

/// Powers of two from 2^-4 to 2^8, the default scaling search grid.
pub fn default_alpha_grid() -> Vec<f64> {
    (-4..=8).map(|j| 2f64.powi(j)).collect()
}

/// Pick the grid candidate maximizing mean effective sparsity
/// (alpha * ||x||_1) / sum_i ceil(alpha * maxima_i), ties toward the smaller
/// alpha (smaller table).
pub fn optimize_alpha<W: Weight>(ds: &Dataset<W>, grid: &[f64]) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::Usage("alpha grid is empty".into()));
    }
    let mean_l1: f64 = ds
        .vectors()
        .iter()
        .map(|v| v.l1_norm().to_f64().unwrap())
        .sum::<f64>()
        / ds.len() as f64;
    let maxima: Vec<f64> = ds
        .maxima()
        .iter()
        .map(|&m| m.to_f64().unwrap())
        .filter(|&m| m > 0.0)
        .collect();
    if maxima.is_empty() {
        return Err(Error::Usage("all-zero dataset: nothing to scale".into()));
    }
    let mut sorted = grid.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut best: Option<(f64, f64)> = None;
    for &alpha in &sorted {
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::Usage(format!(
                "alpha candidates must be positive, got {alpha}"
            )));
        }
        let m_total: f64 = maxima.iter().map(|&m| (alpha * m).ceil().max(1.0)).sum();
        let sbar = alpha * mean_l1 / m_total;
        match best {
            Some((_, best_s)) if sbar <= best_s => {}
            _ => best = Some((alpha, sbar)),
        }
    }
    Ok(best.unwrap().0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::vectors::Dataset;

    fn layout_from(maxima: &[f64], alpha: f64) -> RedGreenLayout {
        RedGreenLayout::build(maxima, alpha).unwrap()
    }

    fn sv(dim: u32, entries: &[(u32, f64)]) -> SparseVector<f64> {
        SparseVector::new(dim, entries.to_vec()).unwrap()
    }

    #[test]
    fn build_examples() {
        let l = layout_from(&[1.5, 2.0], 1.0);
        assert_eq!(l.bounds(), &[2, 2]);
        assert_eq!(l.prefix(), &[0, 2, 4]);
        assert_eq!(l.m_total(), 4);
        assert_eq!(l.int_to_comp().unwrap(), &[0, 0, 1, 1]);

        let l = layout_from(&[1.0], 1.0);
        assert_eq!(l.bounds(), &[1]);
        assert_eq!(l.m_total(), 1);
        assert_eq!(l.int_to_comp().unwrap(), &[0]);

        let l = layout_from(&[0.4, 0.0, 0.6], 5.0);
        assert_eq!(l.coord_ids(), &[0, 2]);
        assert_eq!(l.bounds(), &[2, 3]);
        assert_eq!(l.m_total(), 5);
    }

    #[test]
    fn build_rejects_degenerate_inputs() {
        assert!(matches!(
            RedGreenLayout::build(&[0.0, 0.0], 1.0).unwrap_err(),
            Error::Usage(_)
        ));
        assert!(RedGreenLayout::build(&[1.0], 0.0).is_err());
        let opts = LayoutOptions {
            cell_budget: 10,
            build_table: true,
        };
        assert!(matches!(
            RedGreenLayout::build_with(&[100.0], 1.0, &opts).unwrap_err(),
            Error::Resource {
                cells: 100,
                budget: 10
            }
        ));
        // same maxima fit without the table
        let opts = LayoutOptions {
            cell_budget: 10,
            build_table: false,
        };
        assert!(RedGreenLayout::build_with(&[100.0], 1.0, &opts).is_ok());
    }

    #[test]
    fn is_green_examples() {
        let l = layout_from(&[2.0, 3.0], 1.0);
        let x = sv(2, &[(0, 1.5)]);
        let p = l.prepare(&x).unwrap();
        assert!(p.is_green_o1(1.2).unwrap());
        assert!(!p.is_green_o1(1.7).unwrap());
        assert!(!p.is_green_o1(3.4).unwrap());
        // boundary counts as green, identically in both variants
        assert!(p.is_green_o1(1.5).unwrap());
        assert!(p.is_green_binsearch(1.5).unwrap());
        assert!(p.is_green_binsearch(1.2).unwrap());
        assert!(!p.is_green_binsearch(1.7).unwrap());
        assert!(!p.is_green_binsearch(3.4).unwrap());
        assert!(p.is_green_o1(5.0 - 1e-9).is_ok());
        assert!(p.is_green_o1(5.0).is_err());
        assert!(p.is_green_o1(-0.1).is_err());
    }

    #[test]
    fn empty_vector_is_all_red() {
        let l = layout_from(&[2.0, 3.0], 1.0);
        let p = l.prepare(&sv(2, &[])).unwrap();
        for i in 0..50 {
            let r = i as f64 * 0.1;
            if r < 5.0 {
                assert!(!p.is_green_o1(r).unwrap());
                assert!(!p.is_green_binsearch(r).unwrap());
            }
        }
        assert!(p.hash_one(1, 100).is_err());
    }

    #[test]
    fn lookup_variants_agree_with_direct_membership() {
        // direct Eq-style oracle: any nonzero coordinate interval containing r
        fn direct(l: &RedGreenLayout, x: &SparseVector<f64>, r: f64) -> bool {
            x.entries().iter().any(|&(idx, w)| {
                let ci = l.coord_ids().binary_search(&idx).unwrap();
                let start = l.prefix()[ci] as f64;
                start <= r && r <= start + l.alpha() * w
            })
        }
        let mut stream = crate::rng::SplitMix64::new(7);
        for _ in 0..200 {
            let n = 1 + (stream.next_u64() % 12) as usize;
            let maxima: Vec<f64> = (0..n)
                .map(|_| (stream.next_u64() % 8) as f64 * 0.7 + 0.1)
                .collect();
            let alpha = [0.25, 0.5, 1.0, 2.0, 3.0][(stream.next_u64() % 5) as usize];
            let l = RedGreenLayout::build(&maxima, alpha).unwrap();
            let mut entries: Vec<(u32, f64)> = Vec::new();
            for (i, &mx) in maxima.iter().enumerate() {
                if !stream.next_u64().is_multiple_of(3) {
                    let w = mx * (stream.next_unit() * 0.99 + 0.01);
                    if w > 0.0 {
                        entries.push((i as u32, w));
                    }
                }
            }
            let x = SparseVector::new(n as u32, entries).unwrap();
            let p = l.prepare(&x).unwrap();
            let m = l.m_total() as f64;
            for t in 0..100 {
                // mix random reals with exact cell boundaries
                let r = if t % 5 == 0 {
                    (t / 5) as f64 % m
                } else {
                    stream.next_unit() * m
                };
                let a = p.is_green_o1(r).unwrap();
                let b = p.is_green_binsearch(r).unwrap();
                let c = direct(&l, &x, r);
                assert!(
                    a == b && b == c,
                    "disagree at r={r}: o1={a} bin={b} direct={c}"
                );
            }
        }
    }

    #[test]
    fn low_mem_mode_hashes_identically() {
        let maxima = vec![3.0, 1.0, 0.0, 2.5, 4.0];
        let full = RedGreenLayout::build(&maxima, 1.0).unwrap();
        let slim = RedGreenLayout::build_with(
            &maxima,
            1.0,
            &LayoutOptions {
                cell_budget: DEFAULT_CELL_BUDGET,
                build_table: false,
            },
        )
        .unwrap();
        let x = sv(5, &[(0, 2.2), (3, 0.7), (4, 3.3)]);
        let pf = full.prepare(&x).unwrap();
        let ps = slim.prepare(&x).unwrap();
        assert!(ps.is_green_o1(0.5).is_err());
        for seed in 0..200u64 {
            assert_eq!(
                pf.hash_one(seed, 10_000).unwrap(),
                ps.hash_one(seed, 10_000).unwrap()
            );
        }
    }

    #[test]
    fn full_green_vector_hashes_to_one() {
        let l = layout_from(&[2.0, 3.0], 1.0);
        let x = sv(2, &[(0, 2.0), (1, 3.0)]);
        let p = l.prepare(&x).unwrap();
        assert_eq!(p.sparsity(), 1.0);
        for seed in 0..100u64 {
            assert_eq!(p.hash_one(seed, 10).unwrap(), 1);
        }
    }

    #[test]
    fn hash_one_is_deterministic() {
        let l = layout_from(&[5.0, 5.0], 1.0);
        let x = sv(2, &[(0, 0.5), (1, 1.0)]);
        let p = l.prepare(&x).unwrap();
        for seed in [0u64, 1, 42, u64::MAX] {
            assert_eq!(
                p.hash_one(seed, 100_000).unwrap(),
                p.hash_one(seed, 100_000).unwrap()
            );
        }
    }

    #[test]
    fn hash_mean_matches_geometric_expectation() {
        // s_x = 0.1: E(h) = 10, SE over 1e5 seeds ~ 0.03
        let l = layout_from(&[10.0], 1.0);
        let x = sv(1, &[(0, 1.0)]);
        let p = l.prepare(&x).unwrap();
        assert!((p.sparsity() - 0.1).abs() < 1e-12);
        let n = 100_000u64;
        let mut sum = 0.0;
        for seed in 0..n {
            sum += p.hash_one(derive(3, seed), 10_000).unwrap() as f64;
        }
        let mean = sum / n as f64;
        assert!((mean - 10.0).abs() < 0.3, "mean = {mean}");
    }

    #[test]
    fn iteration_cap_reports_sparsity() {
        let l = layout_from(&[1000.0], 1.0);
        let x = sv(1, &[(0, 1e-6)]);
        let p = l.prepare(&x).unwrap();
        match p.hash_one(7, 4) {
            Err(Error::IterationCap {
                sparsity,
                max_iters: 4,
            }) => {
                assert!((sparsity - 1e-9).abs() < 1e-15)
            }
            other => panic!("expected iteration cap, got {other:?}"),
        }
    }

    #[test]
    fn sketch_rejects_k_zero_and_is_deterministic() {
        let l = layout_from(&[2.0, 2.0], 1.0);
        let x = sv(2, &[(0, 1.0), (1, 1.5)]);
        assert!(matches!(
            sketch(&l, &x, &SketchParams::new(0, 1)).unwrap_err(),
            Error::Usage(_)
        ));
        let a = sketch(&l, &x, &SketchParams::new(64, 99)).unwrap();
        let b = sketch(&l, &x, &SketchParams::new(64, 99)).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.layout_id, l.layout_id());
    }

    #[test]
    fn draw_sequences_share_a_prefix() {
        let l = layout_from(&[4.0, 4.0, 4.0], 1.0);
        let x = l.prepare(&sv(3, &[(0, 0.4)])).unwrap();
        let y = l.prepare(&sv(3, &[(2, 1.1), (1, 0.2)])).unwrap();
        for seed in 0..300u64 {
            let (hx, dx) = x.hash_one_traced(seed, 100_000).unwrap();
            let (hy, dy) = y.hash_one_traced(seed, 100_000).unwrap();
            let shared = hx.min(hy) as usize;
            assert_eq!(
                &dx[..shared].iter().map(|r| r.to_bits()).collect::<Vec<_>>(),
                &dy[..shared].iter().map(|r| r.to_bits()).collect::<Vec<_>>(),
            );
        }
    }

    #[test]
    fn effective_sparsity_examples() {
        let l = layout_from(&[2.0, 3.0], 1.0);
        let full = sv(2, &[(0, 2.0), (1, 3.0)]);
        assert_eq!(effective_sparsity(&l, &full), 1.0);

        let l5 = layout_from(&[5.0], 1.0);
        assert_eq!(effective_sparsity(&l5, &sv(1, &[(0, 1.5)])), 0.3);
    }

    #[test]
    fn optimize_alpha_examples() {
        // integer maxima: scaling up cannot help, 1 wins among integers
        let a = sv(2, &[(0, 2.0), (1, 1.0)]);
        let b = sv(2, &[(0, 1.0), (1, 3.0)]);
        let ds = Dataset::from_vectors(vec![a, b]).unwrap();
        assert_eq!(optimize_alpha(&ds, &[1.0, 2.0, 3.0, 4.0]).unwrap(), 1.0);

        // fractional maximum: doubling fills the unit cell
        let ds = Dataset::from_vectors(vec![sv(1, &[(0, 0.5)])]).unwrap();
        assert_eq!(optimize_alpha(&ds, &[1.0, 2.0]).unwrap(), 2.0);

        // singleton grid returns its only candidate
        assert_eq!(optimize_alpha(&ds, &[0.75]).unwrap(), 0.75);

        assert!(optimize_alpha(&ds, &[]).is_err());
    }

    #[test]
    fn optimize_alpha_ignores_dataset_duplication() {
        let a = sv(3, &[(0, 0.3), (2, 0.9)]);
        let b = sv(3, &[(1, 0.45)]);
        let ds = Dataset::from_vectors(vec![a.clone(), b.clone()]).unwrap();
        let doubled = Dataset::from_vectors(vec![a.clone(), b.clone(), a, b]).unwrap();
        let grid = default_alpha_grid();
        assert_eq!(
            optimize_alpha(&ds, &grid).unwrap(),
            optimize_alpha(&doubled, &grid).unwrap()
        );
    }

    #[test]
    fn layout_roundtrips_through_bytes() {
        let l = layout_from(&[1.5, 0.0, 2.0, 7.25], 2.0);
        let bytes = l.to_bytes();
        let back = RedGreenLayout::from_bytes(&bytes, &LayoutOptions::default()).unwrap();
        assert_eq!(back.coord_ids(), l.coord_ids());
        assert_eq!(back.bounds(), l.bounds());
        assert_eq!(back.prefix(), l.prefix());
        assert_eq!(back.alpha(), l.alpha());
        assert_eq!(back.dim(), l.dim());
        assert_eq!(back.layout_id(), l.layout_id());
        assert_eq!(back.int_to_comp(), l.int_to_comp());

        assert!(RedGreenLayout::from_bytes(&bytes[..10], &LayoutOptions::default()).is_err());
        let mut corrupt = bytes.clone();
        corrupt[0] = b'X';
        assert!(RedGreenLayout::from_bytes(&corrupt, &LayoutOptions::default()).is_err());
    }

    #[test]
    fn max_iters_tracks_the_tail_bound() {
        assert_eq!(max_iters_for(1.0, 1e-12), 8);
        assert_eq!(max_iters_for(0.5, 1e-12), 40);
        let cap = max_iters_for(0.02, 1e-12);
        assert!((1360..1380).contains(&cap), "cap = {cap}");
    }
}
