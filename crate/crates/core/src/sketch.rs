//! Sketch container, scheme dispatch, and the `WMHS` binary sketch file.

use std::io::{Read, Write};

use crate::baselines::{self, IoffeHash};
use crate::error::{Error, Result};
use crate::redgreen::{self, RedGreenLayout, SketchParams};
use crate::scalar::Weight;
use crate::vectors::SparseVector;

const SKETCH_MAGIC: &[u8; 4] = b"WMHS";
const SKETCH_VERSION: u16 = 1;

/// Hashing scheme identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Rejection sampling over the red-green layout; values are draw counts.
    RedGreen,
    /// Ioffe's consistent weighted sampling; values are (k*, t*) pairs.
    Ioffe,
    /// Weighted-to-unweighted reduction plus 2-universal minwise hashing.
    Reduction,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::RedGreen => "redgreen",
            Scheme::Ioffe => "ioffe",
            Scheme::Reduction => "reduction",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "redgreen" => Ok(Scheme::RedGreen),
            "ioffe" => Ok(Scheme::Ioffe),
            "reduction" => Ok(Scheme::Reduction),
            other => Err(Error::Usage(format!(
                "unknown scheme `{other}` (expected redgreen, ioffe, or reduction)"
            ))),
        }
    }

    fn id(self) -> u8 {
        match self {
            Scheme::RedGreen => 0,
            Scheme::Ioffe => 1,
            Scheme::Reduction => 2,
        }
    }

    fn from_id(id: u8) -> Result<Self> {
        match id {
            0 => Ok(Scheme::RedGreen),
            1 => Ok(Scheme::Ioffe),
            2 => Ok(Scheme::Reduction),
            other => Err(Error::Format(format!("unknown scheme id {other}"))),
        }
    }
}

impl std::fmt::Display for Scheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-slot hash values, one variant per scheme.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SketchValues {
    RedGreen(Vec<u32>),
    Ioffe(Vec<IoffeHash>),
    Reduction(Vec<u64>),
}

impl SketchValues {
    pub fn len(&self) -> usize {
        match self {
            SketchValues::RedGreen(v) => v.len(),
            SketchValues::Ioffe(v) => v.len(),
            SketchValues::Reduction(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Slotwise equality flags against another sketch of the same scheme.
    pub fn slot_matches(&self, other: &SketchValues) -> Result<Vec<bool>> {
        match (self, other) {
            (SketchValues::RedGreen(a), SketchValues::RedGreen(b)) if a.len() == b.len() => {
                Ok(a.iter().zip(b).map(|(x, y)| x == y).collect())
            }
            (SketchValues::Ioffe(a), SketchValues::Ioffe(b)) if a.len() == b.len() => {
                Ok(a.iter().zip(b).map(|(x, y)| x == y).collect())
            }
            (SketchValues::Reduction(a), SketchValues::Reduction(b)) if a.len() == b.len() => {
                Ok(a.iter().zip(b).map(|(x, y)| x == y).collect())
            }
            (a, b) if a.len() != b.len() => Err(Error::Incompatible { field: "k" }),
            _ => Err(Error::Incompatible { field: "scheme" }),
        }
    }
}

/// k hash values of one vector plus the metadata needed to compare sketches.
#[derive(Debug, Clone, PartialEq)]
pub struct Sketch {
    pub scheme: Scheme,
    pub master_seed: u64,
    /// Digest of the layout the sketch is bound to; zero for layout-free
    /// schemes (ioffe, reduction).
    pub layout_id: u64,
    pub values: SketchValues,
}

impl Sketch {
    pub fn k(&self) -> usize {
        self.values.len()
    }
}

/// One hashing scheme bound to whatever context it needs, so estimation and
/// benchmarking code can treat all three uniformly.
#[derive(Debug, Clone, Copy)]
pub enum SchemeSketcher<'a> {
    RedGreen {
        layout: &'a RedGreenLayout,
        delta: f64,
    },
    Ioffe,
    Reduction,
}

impl SchemeSketcher<'_> {
    pub fn scheme(&self) -> Scheme {
        match self {
            SchemeSketcher::RedGreen { .. } => Scheme::RedGreen,
            SchemeSketcher::Ioffe => Scheme::Ioffe,
            SchemeSketcher::Reduction => Scheme::Reduction,
        }
    }

    pub fn sketch<W: Weight>(
        &self,
        x: &SparseVector<W>,
        k: usize,
        master_seed: u64,
    ) -> Result<Sketch> {
        match self {
            SchemeSketcher::RedGreen { layout, delta } => redgreen::sketch(
                layout,
                x,
                &SketchParams {
                    k,
                    master_seed,
                    delta: *delta,
                },
            ),
            SchemeSketcher::Ioffe => baselines::ioffe_sketch(x, k, master_seed),
            SchemeSketcher::Reduction => baselines::reduction_sketch(x, k, master_seed),
        }
    }
}

/// Write sketches to the `WMHS` format: a fixed header followed by one
/// fixed-width record per vector, little-endian throughout. Red-green values
/// are stored as u16; a value past u16 means the iteration cap was configured
/// far looser than the storage format and is reported as a format error.
pub fn write_sketch_file<Wr: Write>(w: &mut Wr, sketches: &[Sketch]) -> Result<()> {
    let first = sketches
        .first()
        .ok_or_else(|| Error::Usage("refusing to write an empty sketch file".into()))?;
    let k = first.k();
    for s in sketches {
        if s.scheme != first.scheme {
            return Err(Error::Incompatible { field: "scheme" });
        }
        if s.k() != k {
            return Err(Error::Incompatible { field: "k" });
        }
        if s.master_seed != first.master_seed {
            return Err(Error::Incompatible {
                field: "master_seed",
            });
        }
        if s.layout_id != first.layout_id {
            return Err(Error::Incompatible { field: "layout_id" });
        }
    }
    if k > u32::MAX as usize {
        return Err(Error::Usage("k exceeds u32".into()));
    }
    w.write_all(SKETCH_MAGIC)?;
    w.write_all(&SKETCH_VERSION.to_le_bytes())?;
    w.write_all(&[first.scheme.id(), 0])?;
    w.write_all(&(k as u32).to_le_bytes())?;
    w.write_all(&first.master_seed.to_le_bytes())?;
    w.write_all(&first.layout_id.to_le_bytes())?;
    w.write_all(&(sketches.len() as u64).to_le_bytes())?;
    for s in sketches {
        match &s.values {
            SketchValues::RedGreen(vals) => {
                for &v in vals {
                    let narrow = u16::try_from(v).map_err(|_| {
                        Error::Format(format!(
                            "hash value {v} exceeds the 16-bit sketch record; \
                             rescale or lower --delta"
                        ))
                    })?;
                    w.write_all(&narrow.to_le_bytes())?;
                }
            }
            SketchValues::Ioffe(vals) => {
                for h in vals {
                    w.write_all(&(h.k_star as u64).to_le_bytes())?;
                    w.write_all(&h.t_star.to_le_bytes())?;
                }
            }
            SketchValues::Reduction(vals) => {
                for &v in vals {
                    w.write_all(&v.to_le_bytes())?;
                }
            }
        }
    }
    Ok(())
}

/// Read back a `WMHS` file written by [`write_sketch_file`].
pub fn read_sketch_file<R: Read>(r: &mut R) -> Result<Vec<Sketch>> {
    let mut header = [0u8; 36];
    r.read_exact(&mut header)
        .map_err(|_| Error::Format("truncated WMHS header".into()))?;
    if &header[0..4] != SKETCH_MAGIC {
        return Err(Error::Format("not a WMHS sketch file".into()));
    }
    let version = u16::from_le_bytes(header[4..6].try_into().unwrap());
    if version != SKETCH_VERSION {
        return Err(Error::Format(format!(
            "unsupported sketch version {version}"
        )));
    }
    let scheme = Scheme::from_id(header[6])?;
    let k = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    if k == 0 {
        return Err(Error::Format("sketch file declares k = 0".into()));
    }
    let master_seed = u64::from_le_bytes(header[12..20].try_into().unwrap());
    let layout_id = u64::from_le_bytes(header[20..28].try_into().unwrap());
    let n_vectors = u64::from_le_bytes(header[28..36].try_into().unwrap());
    let mut body = Vec::new();
    r.read_to_end(&mut body)?;
    let record = match scheme {
        Scheme::RedGreen => 2 * k,
        Scheme::Ioffe => 16 * k,
        Scheme::Reduction => 8 * k,
    };
    let expected = (record as u64)
        .checked_mul(n_vectors)
        .ok_or_else(|| Error::Format("sketch header declares an impossible size".into()))?;
    if body.len() as u64 != expected {
        return Err(Error::Format(format!(
            "sketch body is {} bytes, expected {expected} ({n_vectors} records of {record} bytes)",
            body.len(),
        )));
    }
    let mut out = Vec::with_capacity(n_vectors as usize);
    for chunk in body.chunks_exact(record) {
        let values = match scheme {
            Scheme::RedGreen => SketchValues::RedGreen(
                chunk
                    .chunks_exact(2)
                    .map(|b| u16::from_le_bytes(b.try_into().unwrap()) as u32)
                    .collect(),
            ),
            Scheme::Ioffe => SketchValues::Ioffe(
                chunk
                    .chunks_exact(16)
                    .map(|b| IoffeHash {
                        k_star: u64::from_le_bytes(b[0..8].try_into().unwrap()) as u32,
                        t_star: i64::from_le_bytes(b[8..16].try_into().unwrap()),
                    })
                    .collect(),
            ),
            Scheme::Reduction => SketchValues::Reduction(
                chunk
                    .chunks_exact(8)
                    .map(|b| u64::from_le_bytes(b.try_into().unwrap()))
                    .collect(),
            ),
        };
        out.push(Sketch {
            scheme,
            master_seed,
            layout_id,
            values,
        });
    }
    Ok(out)
}
