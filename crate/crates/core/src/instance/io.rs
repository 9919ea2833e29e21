//! On-disk instance format.
//!
//! A JSON metadata document carries the scalar parameters. The `k x d`
//! matrix of construction vectors is stored either inline in that document
//! (only when `d k <= 100_000`) or in a sidecar file of row-major 64-bit
//! little-endian floats, one row per `v_j`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{eps_unit_for, offset_for, HardInstance, INLINE_MAX_VALUES};
use crate::error::{Error, Result};
use crate::vecspace::{DenseVector, OrthonormalBasis, ORTHO_TOL};

pub const FORMAT_VERSION: u32 = 1;

const SIDECAR_LAYOUT: &str = "row-major-f64-le";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StorageFormat {
    /// Vectors inline in the metadata document.
    Text,
    /// Vectors in a binary sidecar next to the metadata document.
    Binary,
    /// Text when small enough, binary otherwise.
    Auto,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceMetadata {
    pub format_version: u32,
    pub k: usize,
    pub d: usize,
    #[serde(rename = "L")]
    pub lipschitz: f64,
    #[serde(rename = "B")]
    pub radius: f64,
    pub seed: u64,
    pub eps_unit: f64,
    pub c: f64,
    pub vectors: VectorStorage,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VectorStorage {
    Inline { rows: Vec<Vec<f64>> },
    Sidecar { file: String, layout: String },
}

fn sidecar_path(meta_path: &Path) -> PathBuf {
    let mut name = meta_path
        .file_stem()
        .map(|s| s.to_os_string())
        .unwrap_or_else(|| "instance".into());
    name.push(".v.bin");
    meta_path.with_file_name(name)
}

/// Writes `inst` to `meta_path` (plus a sidecar for binary storage).
pub fn save_instance(inst: &HardInstance, meta_path: &Path, format: StorageFormat) -> Result<()> {
    let values = inst.k() * inst.d();
    let inline = match format {
        StorageFormat::Text => {
            if values > INLINE_MAX_VALUES {
                return Err(Error::arg(format!(
                    "text storage is limited to {INLINE_MAX_VALUES} values, instance has {values}"
                )));
            }
            true
        }
        StorageFormat::Binary => false,
        StorageFormat::Auto => values <= INLINE_MAX_VALUES,
    };

    let vectors = if inline {
        VectorStorage::Inline {
            rows: inst
                .vectors()
                .vectors()
                .iter()
                .map(|v| v.as_slice().to_vec())
                .collect(),
        }
    } else {
        let path = sidecar_path(meta_path);
        let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut w = BufWriter::new(file);
        for v in inst.vectors().vectors() {
            for x in v.as_slice() {
                w.write_all(&x.to_le_bytes()).map_err(|e| Error::io(&path, e))?;
            }
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        VectorStorage::Sidecar {
            file: path
                .file_name()
                .expect("sidecar path has a file name")
                .to_string_lossy()
                .into_owned(),
            layout: SIDECAR_LAYOUT.to_string(),
        }
    };

    let meta = InstanceMetadata {
        format_version: FORMAT_VERSION,
        k: inst.k(),
        d: inst.d(),
        lipschitz: inst.lipschitz(),
        radius: inst.radius(),
        seed: inst.seed(),
        eps_unit: inst.eps_unit(),
        c: inst.c(),
        vectors,
    };
    let mut text = serde_json::to_string_pretty(&meta)
        .map_err(|e| Error::Format(format!("serializing metadata: {e}")))?;
    text.push('\n');
    std::fs::write(meta_path, text).map_err(|e| Error::io(meta_path, e))
}

/// Reads an instance written by [`save_instance`], re-validating every
/// invariant.
pub fn load_instance(meta_path: &Path) -> Result<HardInstance> {
    let text = std::fs::read_to_string(meta_path).map_err(|e| Error::io(meta_path, e))?;
    let meta: InstanceMetadata = serde_json::from_str(&text)
        .map_err(|e| Error::Format(format!("{}: {e}", meta_path.display())))?;
    if meta.format_version != FORMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported format version {} (expected {FORMAT_VERSION})",
            meta.format_version
        )));
    }
    if meta.k == 0 || meta.d == 0 {
        return Err(Error::Format("k and d must be positive".into()));
    }
    if meta.eps_unit != eps_unit_for(meta.k) || meta.c != offset_for(meta.k) {
        return Err(Error::Format(format!(
            "eps_unit/c ({}, {}) inconsistent with k={}",
            meta.eps_unit, meta.c, meta.k
        )));
    }

    let rows: Vec<Vec<f64>> = match meta.vectors {
        VectorStorage::Inline { rows } => rows,
        VectorStorage::Sidecar { file, layout } => {
            if layout != SIDECAR_LAYOUT {
                return Err(Error::Format(format!("unknown sidecar layout {layout:?}")));
            }
            let path = meta_path.with_file_name(file);
            read_sidecar(&path, meta.k, meta.d)?
        }
    };
    if rows.len() != meta.k {
        return Err(Error::Format(format!("expected {} vectors, found {}", meta.k, rows.len())));
    }
    let mut vectors = Vec::with_capacity(meta.k);
    for (j, row) in rows.into_iter().enumerate() {
        if row.len() != meta.d {
            return Err(Error::Format(format!(
                "vector {} has {} components, expected {}",
                j + 1,
                row.len(),
                meta.d
            )));
        }
        vectors.push(DenseVector::new(row).map_err(|e| Error::Format(e.to_string()))?);
    }
    let basis = OrthonormalBasis::from_vectors(meta.d, vectors, ORTHO_TOL)
        .map_err(|e| Error::Format(e.to_string()))?;
    HardInstance::from_basis(basis, meta.lipschitz, meta.radius, meta.seed)
        .map_err(|e| Error::Format(e.to_string()))
}

fn read_sidecar(path: &Path, k: usize, d: usize) -> Result<Vec<Vec<f64>>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let expected = (k * d * 8) as u64;
    let actual = file.metadata().map_err(|e| Error::io(path, e))?.len();
    if actual != expected {
        return Err(Error::Format(format!(
            "{}: expected {expected} bytes, found {actual}",
            path.display()
        )));
    }
    let mut r = BufReader::new(file);
    let mut buf = [0u8; 8];
    let mut rows = Vec::with_capacity(k);
    for _ in 0..k {
        let mut row = Vec::with_capacity(d);
        for _ in 0..d {
            r.read_exact(&mut buf).map_err(|e| Error::io(path, e))?;
            row.push(f64::from_le_bytes(buf));
        }
        rows.push(row);
    }
    Ok(rows)
}
