//! Sparse non-negative vectors, datasets, and the `label idx:val ...` text
//! format.

use std::io::BufRead;

use crate::error::{Error, Result};
use crate::scalar::Weight;

/// Index origin of the text format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IndexBase {
    #[default]
    Zero,
    One,
}

/// Sparse vector with strictly increasing indices and strictly positive,
/// finite weights. Explicit zeros are dropped on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVector<W = f64> {
    entries: Vec<(u32, W)>,
    dim: u32,
}

impl<W: Weight> SparseVector<W> {
    /// Build from (index, weight) pairs in any order. Zeros are dropped;
    /// duplicates, negatives, non-finite weights and out-of-range indices
    /// are rejected.
    pub fn new(dim: u32, mut entries: Vec<(u32, W)>) -> Result<Self> {
        entries.retain(|&(_, w)| w != W::zero());
        entries.sort_by_key(|&(i, _)| i);
        for pair in entries.windows(2) {
            if pair[0].0 == pair[1].0 {
                return Err(Error::Format(format!("duplicate index {}", pair[0].0)));
            }
        }
        for &(i, w) in &entries {
            if i >= dim {
                return Err(Error::Domain(format!(
                    "index {i} out of range for dim {dim}"
                )));
            }
            if !w.is_finite() {
                return Err(Error::Domain(format!("weight at index {i} is not finite")));
            }
            if w < W::zero() {
                return Err(Error::Domain(format!("negative weight at index {i}")));
            }
        }
        Ok(SparseVector { entries, dim })
    }

    pub fn empty(dim: u32) -> Self {
        SparseVector {
            entries: Vec::new(),
            dim,
        }
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    /// Number of stored non-zeros.
    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Sorted (index, weight) pairs.
    pub fn entries(&self) -> &[(u32, W)] {
        &self.entries
    }

    /// Weight at `index`, zero if absent.
    pub fn get(&self, index: u32) -> W {
        match self.entries.binary_search_by_key(&index, |&(i, _)| i) {
            Ok(pos) => self.entries[pos].1,
            Err(_) => W::zero(),
        }
    }

    /// Sum of all weights.
    pub fn l1_norm(&self) -> W {
        self.entries.iter().fold(W::zero(), |acc, &(_, w)| acc + w)
    }

    /// Serialize as `label idx:val ...` under the given index base.
    pub fn to_line(&self, label: &str, base: IndexBase) -> String {
        let off = match base {
            IndexBase::Zero => 0,
            IndexBase::One => 1,
        };
        let mut out = String::from(label);
        for &(i, w) in &self.entries {
            out.push_str(&format!(" {}:{}", i as u64 + off, w));
        }
        out
    }
}

/// One parsed input line: the pass-through label plus the vector.
#[derive(Debug, Clone)]
pub struct ParsedLine<W = f64> {
    pub label: String,
    pub vector: SparseVector<W>,
}

/// Parse one `label idx:val idx:val ...` line.
///
/// `dim` bounds the indices when known; pass `u32::MAX` to defer the bound
/// (dataset readers infer the true dimensionality afterwards). Column
/// numbers in errors are 1-based byte offsets.
pub fn parse_sparse_line<W: Weight>(
    line: &str,
    base: IndexBase,
    dim: u32,
) -> Result<ParsedLine<W>> {
    let mut tokens = split_columns(line);
    let (_, label) = tokens.next().ok_or_else(|| parse_err(0, "empty line"))?;
    let mut entries: Vec<(u32, W)> = Vec::new();
    for (col, tok) in tokens {
        let (idx_str, val_str) = tok
            .split_once(':')
            .ok_or_else(|| parse_err(col, &format!("expected idx:val, got `{tok}`")))?;
        let raw_idx: u64 = idx_str
            .parse()
            .map_err(|_| parse_err(col, &format!("bad index `{idx_str}`")))?;
        let idx = match base {
            IndexBase::Zero => raw_idx,
            IndexBase::One => raw_idx
                .checked_sub(1)
                .ok_or_else(|| parse_err(col, "index 0 not allowed with 1-based input"))?,
        };
        if idx >= dim as u64 {
            return Err(Error::Domain(format!(
                "index {raw_idx} out of range for dim {dim}"
            )));
        }
        let val: W = val_str
            .parse()
            .map_err(|_| parse_err(col, &format!("bad value `{val_str}`")))?;
        if !val.is_finite() {
            return Err(Error::Domain(format!(
                "weight at index {raw_idx} is not finite"
            )));
        }
        if val < W::zero() {
            return Err(Error::Domain(format!("negative weight at index {raw_idx}")));
        }
        // non-adjacent duplicates are caught in SparseVector::new
        if entries.last().is_some_and(|&(prev, _)| prev == idx as u32) {
            return Err(Error::Format(format!("duplicate index {raw_idx}")));
        }
        entries.push((idx as u32, val));
    }
    let max_idx = entries.iter().map(|&(i, _)| i).max();
    let eff_dim = if dim == u32::MAX {
        max_idx.map_or(0, |m| m + 1)
    } else {
        dim
    };
    Ok(ParsedLine {
        label: label.to_string(),
        vector: SparseVector::new(eff_dim, entries)?,
    })
}

fn parse_err(col: usize, msg: &str) -> Error {
    Error::Parse {
        line: 0,
        col: col + 1,
        msg: msg.to_string(),
    }
}

/// Whitespace tokenizer that remembers each token's byte offset.
fn split_columns(line: &str) -> impl Iterator<Item = (usize, &str)> {
    line.char_indices()
        .filter(|&(i, c)| {
            !c.is_whitespace() && (i == 0 || line[..i].ends_with(char::is_whitespace))
        })
        .map(move |(i, _)| {
            let rest = &line[i..];
            let end = rest.find(char::is_whitespace).unwrap_or(rest.len());
            (i, &rest[..end])
        })
}

/// A set of vectors sharing one dimensionality, with per-coordinate maxima
/// maintained for layout construction. Labels and source line numbers ride
/// along for pass-through reporting.
#[derive(Debug, Clone)]
pub struct Dataset<W = f64> {
    dim: u32,
    vectors: Vec<SparseVector<W>>,
    labels: Vec<String>,
    source_lines: Vec<u64>,
    maxima: Vec<W>,
}

impl<W: Weight> Dataset<W> {
    /// Read a whole dataset from `#`-commented sparse text. When
    /// `declared_dim` is `None` the dimensionality is inferred as
    /// max index + 1.
    pub fn from_reader<R: BufRead>(
        reader: R,
        base: IndexBase,
        declared_dim: Option<u32>,
    ) -> Result<Self> {
        let bound = declared_dim.unwrap_or(u32::MAX);
        let mut parsed: Vec<(u64, ParsedLine<W>)> = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let rec = parse_sparse_line::<W>(trimmed, base, bound).map_err(|e| match e {
                Error::Parse { col, msg, .. } => Error::Parse {
                    line: lineno + 1,
                    col,
                    msg,
                },
                Error::Domain(msg) => Error::Domain(format!("line {}: {msg}", lineno + 1)),
                Error::Format(msg) => Error::Format(format!("line {}: {msg}", lineno + 1)),
                other => other,
            })?;
            parsed.push((lineno as u64 + 1, rec));
        }
        if parsed.is_empty() {
            return Err(Error::Usage("dataset contains no vectors".into()));
        }
        let dim = declared_dim.unwrap_or_else(|| {
            parsed
                .iter()
                .flat_map(|(_, r)| r.vector.entries().iter().map(|&(i, _)| i + 1))
                .max()
                .unwrap_or(0)
        });
        let mut ds = Dataset {
            dim,
            vectors: Vec::with_capacity(parsed.len()),
            labels: Vec::with_capacity(parsed.len()),
            source_lines: Vec::with_capacity(parsed.len()),
            maxima: vec![W::zero(); dim as usize],
        };
        for (lineno, rec) in parsed {
            let v = SparseVector::new(dim, rec.vector.entries().to_vec())?;
            ds.push_with_meta(v, rec.label, lineno)?;
        }
        Ok(ds)
    }

    pub fn from_vectors(vectors: Vec<SparseVector<W>>) -> Result<Self> {
        let dim = vectors
            .first()
            .map(|v| v.dim())
            .ok_or_else(|| Error::Usage("dataset contains no vectors".into()))?;
        let mut ds = Dataset {
            dim,
            vectors: Vec::with_capacity(vectors.len()),
            labels: Vec::new(),
            source_lines: Vec::new(),
            maxima: vec![W::zero(); dim as usize],
        };
        for (n, v) in vectors.into_iter().enumerate() {
            ds.push_with_meta(v, String::new(), n as u64 + 1)?;
        }
        Ok(ds)
    }

    fn push_with_meta(&mut self, v: SparseVector<W>, label: String, line: u64) -> Result<()> {
        if v.dim() != self.dim {
            return Err(Error::Usage(format!(
                "vector dim {} does not match dataset dim {}",
                v.dim(),
                self.dim
            )));
        }
        for &(i, w) in v.entries() {
            if w > self.maxima[i as usize] {
                self.maxima[i as usize] = w;
            }
        }
        self.vectors.push(v);
        self.labels.push(label);
        self.source_lines.push(line);
        Ok(())
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[SparseVector<W>] {
        &self.vectors
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// 1-based input line each vector came from (insertion index when built
    /// in memory).
    pub fn source_lines(&self) -> &[u64] {
        &self.source_lines
    }

    /// Observed per-coordinate maxima, zero where a coordinate never occurs.
    pub fn maxima(&self) -> &[W] {
        &self.maxima
    }
}
