//! Versioned binary predictor files.
//!
//! All integers and floats are little-endian.
//!
//! | offset | size          | field                                             |
//! |--------|---------------|---------------------------------------------------|
//! | 0      | 8             | magic `ELASTPRD`                                  |
//! | 8      | 4             | `u32` format version (currently 1)               |
//! | 12     | 1             | `u8` kind: 0 binary, 1 multiclass, 2 regression   |
//! | 13     | 1             | `u8` 1 if scaling follows, else 0                 |
//! | 14     | 2             | reserved, zero                                    |
//! | 16     | 4             | `u32` dimension `d`                               |
//! | 20     | 4             | `u32` number of centers `n`                       |
//! | 24     | 4             | `u32` number of member models `k`                 |
//! | 28     | 4             | `u32` number of class labels `l`                  |
//! | 32     | 8             | `f64` RBF width `c`                               |
//! | 40     | `8 l`         | class labels                                      |
//! |        | `16 d`        | scaling `(min, max)` pairs, only if flagged       |
//! |        | `8 n d`       | centers, row-major                                |
//! |        | `8 n k`       | weights, one member model after another           |
//! |        | 4             | `u32` provenance length `p`                       |
//! |        | `p`           | UTF-8 provenance (tool version and configuration) |

use std::path::Path;

use crate::data::ScalingParams;
use crate::error::{Error, Result};
use crate::kernel::{RbfBasis, RbfModel, Task};
use crate::learners::{Predictor, PredictorKind};

pub const MAGIC: &[u8; 8] = b"ELASTPRD";
pub const FORMAT_VERSION: u32 = 1;

fn kind_code(kind: PredictorKind) -> u8 {
    match kind {
        PredictorKind::Binary => 0,
        PredictorKind::Multiclass => 1,
        PredictorKind::Regression => 2,
    }
}

pub fn encode(predictor: &Predictor, provenance: &str) -> Vec<u8> {
    let models = predictor.models();
    let basis = models[0].basis();
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.push(kind_code(predictor.kind()));
    out.push(u8::from(predictor.scaling().is_some()));
    out.extend_from_slice(&[0, 0]);
    for v in [basis.dim(), basis.len(), models.len(), predictor.class_labels().len()] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    out.extend_from_slice(&basis.width().to_le_bytes());
    let mut put = |v: f64| out.extend_from_slice(&v.to_le_bytes());
    predictor.class_labels().iter().copied().for_each(&mut put);
    if let Some(s) = predictor.scaling() {
        for &(lo, hi) in &s.ranges {
            put(lo);
            put(hi);
        }
    }
    basis.centers_flat().iter().copied().for_each(&mut put);
    for m in models {
        m.weights().iter().copied().for_each(&mut put);
    }
    out.extend_from_slice(&(provenance.len() as u32).to_le_bytes());
    out.extend_from_slice(provenance.as_bytes());
    out
}

struct Cursor<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len()).ok_or_else(|| {
            Error::ModelFormat(format!("truncated at byte {} (needed {n} more)", self.pos))
        })?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        (0..n).map(|_| self.f64()).collect()
    }
}

/// Parses a predictor file, returning the predictor and its provenance text.
pub fn decode(bytes: &[u8]) -> Result<(Predictor, String)> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::ModelFormat("bad magic header".into()));
    }
    let mut cur = Cursor { buf: bytes, pos: MAGIC.len() };
    let version = cur.u32()?;
    if version != FORMAT_VERSION {
        return Err(Error::ModelFormat(format!("unsupported format version {version}")));
    }
    let head = cur.take(4)?;
    let kind = match head[0] {
        0 => PredictorKind::Binary,
        1 => PredictorKind::Multiclass,
        2 => PredictorKind::Regression,
        k => return Err(Error::ModelFormat(format!("unknown predictor kind {k}"))),
    };
    let has_scaling = match head[1] {
        0 => false,
        1 => true,
        f => return Err(Error::ModelFormat(format!("bad scaling flag {f}"))),
    };
    let d = cur.u32()? as usize;
    let n = cur.u32()? as usize;
    let k = cur.u32()? as usize;
    let l = cur.u32()? as usize;
    let width = cur.f64()?;
    // every count must fit in the remaining bytes before allocating
    let needed = (l + 2 * d * usize::from(has_scaling) + n * d + n * k)
        .checked_mul(8)
        .ok_or_else(|| Error::ModelFormat("size overflow".into()))?;
    if needed > bytes.len() - cur.pos {
        return Err(Error::ModelFormat("declared sizes exceed file length".into()));
    }
    let labels = cur.f64s(l)?;
    let scaling = if has_scaling {
        let flat = cur.f64s(2 * d)?;
        Some(ScalingParams {
            ranges: flat.chunks_exact(2).map(|p| (p[0], p[1])).collect(),
        })
    } else {
        None
    };
    let centers = cur.f64s(n * d)?;
    let basis = RbfBasis::new(centers, d, width).map_err(|e| Error::ModelFormat(e.to_string()))?;
    let task = match kind {
        PredictorKind::Binary => Task::Binary,
        PredictorKind::Multiclass => Task::OvaMember,
        PredictorKind::Regression => Task::Regression,
    };
    let mut models = Vec::with_capacity(k);
    for _ in 0..k {
        let w = cur.f64s(n)?;
        let m = RbfModel::new(basis.clone(), w, task).map_err(|e| Error::ModelFormat(e.to_string()))?;
        models.push(m.with_scaling(scaling.clone()));
    }
    let plen = cur.u32()? as usize;
    let provenance = String::from_utf8(cur.take(plen)?.to_vec())
        .map_err(|_| Error::ModelFormat("provenance is not UTF-8".into()))?;
    if cur.pos != bytes.len() {
        return Err(Error::ModelFormat(format!("{} trailing bytes", bytes.len() - cur.pos)));
    }
    let predictor = Predictor::new(kind, models, labels, scaling).map_err(|e| Error::ModelFormat(e.to_string()))?;
    Ok((predictor, provenance))
}

pub fn save(path: &Path, predictor: &Predictor, provenance: &str) -> Result<()> {
    std::fs::write(path, encode(predictor, provenance)).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<(Predictor, String)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes)
}

/// Byte range of member `index`'s weights inside an encoded file.
pub fn weight_block_range(bytes: &[u8], index: usize) -> Result<std::ops::Range<usize>> {
    let (p, _) = decode(bytes)?;
    let d = p.dim();
    let n = p.models()[0].basis().len();
    let l = p.class_labels().len();
    let scaling = if p.scaling().is_some() { 2 * d } else { 0 };
    let start = 40 + 8 * (l + scaling + n * d + n * index);
    Ok(start..start + 8 * n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn predictor(kind: PredictorKind, k: usize, labels: Vec<f64>, scaled: bool) -> Predictor {
        let basis = RbfBasis::from_rows(&[vec![0.0, 1.0], vec![0.5, -0.25], vec![2.0, 3.0]], 0.75).unwrap();
        let models = (0..k)
            .map(|j| RbfModel::new(basis.clone(), vec![1.0 + j as f64, -2.5, 1e-300], Task::Binary).unwrap())
            .collect();
        let scaling = scaled.then(|| ScalingParams {
            ranges: vec![(0.0, 1.0), (-3.0, 7.5)],
        });
        Predictor::new(kind, models, labels, scaling).unwrap()
    }

    #[test]
    fn round_trip_each_kind() {
        for p in [
            predictor(PredictorKind::Binary, 1, vec![-1.0, 1.0], true),
            predictor(PredictorKind::Multiclass, 3, vec![1.0, 2.0, 3.0], false),
            predictor(PredictorKind::Regression, 1, vec![], true),
        ] {
            let bytes = encode(&p, "elastica test");
            let (back, prov) = decode(&bytes).unwrap();
            assert_eq!(prov, "elastica test");
            assert_eq!(back.kind(), p.kind());
            assert_eq!(back.class_labels(), p.class_labels());
            assert_eq!(back.scaling(), p.scaling());
            for (a, b) in back.models().iter().zip(p.models()) {
                assert_eq!(a.weights(), b.weights());
                assert_eq!(a.basis(), b.basis());
            }
        }
    }

    #[test]
    fn rejects_corruption() {
        let p = predictor(PredictorKind::Binary, 1, vec![-1.0, 1.0], false);
        let mut bytes = encode(&p, "");
        assert!(decode(&bytes[..bytes.len() - 1]).is_err());
        bytes[0] = b'X';
        let err = decode(&bytes).unwrap_err();
        assert!(err.to_string().starts_with("unrecognized model file"), "{err}");
        assert!(decode(b"").is_err());
    }

    #[test]
    fn weight_block_is_located() {
        let p = predictor(PredictorKind::Multiclass, 3, vec![1.0, 2.0, 3.0], true);
        let bytes = encode(&p, "x");
        let r = weight_block_range(&bytes, 1).unwrap();
        let w: Vec<f64> = bytes[r].chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
        assert_eq!(w, p.models()[1].weights());
    }

    proptest! {
        #[test]
        fn decode_never_panics(bytes in prop::collection::vec(any::<u8>(), 0..200)) {
            let _ = decode(&bytes);
        }
    }
}
