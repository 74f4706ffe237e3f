//! Binary signature file format.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! offset  size        field
//! 0       4           magic "SIGM"
//! 4       2           format version (currently 1)
//! 6       4           m: patch count (u32)
//! 10      4           n: feature dimension (u32)
//! 14      4           d: attribute dimension (u32)
//! 18      2           flags (bit 0: derived attribute block present)
//! 20      4*n*m       features, f32, column-major (patch 0 first)
//! ...     ceil(m/8)   occlusion bits, packed LSB-first (bit = non-occluded)
//! ...     4*d         attribute logits, f32
//! ...     [4*d]       derived probabilities, f32      (flag bit 0)
//! ...     [ceil(d/8)] derived binary flags, LSB-first (flag bit 0)
//! ...     2 + len     subject_id  (u16 length + UTF-8)
//! ...     2 + len     image_id    (u16 length + UTF-8)
//! ...     2 + len     scheme name (u16 length + UTF-8)
//! ```
//!
//! Probabilities and binary flags are always recomputed from the logits on
//! load; when the derived block is present it is cross-checked against the
//! recomputation ([`DERIVED_TOLERANCE`]) and the file is rejected on
//! disagreement. Future minor revisions must stay readable by this decoder;
//! a reader only rejects versions above [`FORMAT_VERSION`].
//!
//! Writers create a temporary sibling file and rename it into place, so
//! concurrent readers never observe a half-written signature.

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use facesig_core::signature::{AttributeComponent, PatchFeatureComponent, PatchLayout};
use facesig_core::{validate, Signature};

use crate::error::StorageError;

pub const MAGIC: [u8; 4] = *b"SIGM";
pub const FORMAT_VERSION: u16 = 1;
/// Flag bit 0: derived probabilities and binary flags are stored.
pub const FLAG_DERIVED: u16 = 1;
/// Maximum allowed disagreement between stored and recomputed probabilities.
pub const DERIVED_TOLERANCE: f64 = 1e-6;

fn pack_bits(bits: &[bool]) -> Vec<u8> {
    let mut out = vec![0u8; bits.len().div_ceil(8)];
    for (i, &b) in bits.iter().enumerate() {
        if b {
            out[i / 8] |= 1 << (i % 8);
        }
    }
    out
}

fn unpack_bits(bytes: &[u8], count: usize) -> Vec<bool> {
    (0..count).map(|i| bytes[i / 8] & (1 << (i % 8)) != 0).collect()
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    let bytes = s.as_bytes();
    out.extend_from_slice(&(bytes.len() as u16).to_le_bytes());
    out.extend_from_slice(bytes);
}

/// Encode a signature into the on-disk byte layout.
pub fn encode_signature(signature: &Signature) -> Vec<u8> {
    let layout = signature.layout();
    let m = layout.patch_count;
    let n = layout.feature_dim;
    let d = signature.attributes.dim();
    let mut out = Vec::with_capacity(20 + 4 * n * m + 4 * d + 64);

    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(m as u32).to_le_bytes());
    out.extend_from_slice(&(n as u32).to_le_bytes());
    out.extend_from_slice(&(d as u32).to_le_bytes());
    out.extend_from_slice(&FLAG_DERIVED.to_le_bytes());

    for &v in signature.patch.features() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&pack_bits(signature.patch.occlusion()));
    for &v in signature.attributes.logits() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for &p in signature.attributes.probabilities() {
        out.extend_from_slice(&(p as f32).to_le_bytes());
    }
    out.extend_from_slice(&pack_bits(signature.attributes.binary()));

    put_str(&mut out, &signature.subject_id);
    put_str(&mut out, &signature.image_id);
    put_str(&mut out, &layout.scheme_name);
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, len: usize) -> Option<&'a [u8]> {
        let end = self.pos.checked_add(len)?;
        let slice = self.bytes.get(self.pos..end)?;
        self.pos = end;
        Some(slice)
    }

    fn u16(&mut self) -> Option<u16> {
        self.take(2).map(|b| u16::from_le_bytes([b[0], b[1]]))
    }

    fn u32(&mut self) -> Option<u32> {
        self.take(4).map(|b| u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }

    fn f32s(&mut self, count: usize) -> Option<Vec<f32>> {
        let raw = self.take(count.checked_mul(4)?)?;
        Some(
            raw.chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect(),
        )
    }
}

/// Decode a signature from bytes. `path` is used only for error reporting.
pub fn decode_signature(bytes: &[u8], path: &Path) -> Result<Signature, StorageError> {
    let truncated = || StorageError::Truncated {
        path: path.to_path_buf(),
    };
    let mut r = Reader { bytes, pos: 0 };

    let magic = r.take(4).ok_or_else(truncated)?;
    if magic != MAGIC {
        return Err(StorageError::BadMagic {
            path: path.to_path_buf(),
            found: [magic[0], magic[1], magic[2], magic[3]],
        });
    }
    let version = r.u16().ok_or_else(truncated)?;
    if version == 0 || version > FORMAT_VERSION {
        return Err(StorageError::UnsupportedVersion {
            path: path.to_path_buf(),
            version,
        });
    }
    let m = r.u32().ok_or_else(truncated)? as usize;
    let n = r.u32().ok_or_else(truncated)? as usize;
    let d = r.u32().ok_or_else(truncated)? as usize;
    let flags = r.u16().ok_or_else(truncated)?;

    let features = r.f32s(n.checked_mul(m).ok_or_else(truncated)?).ok_or_else(truncated)?;
    let occlusion_bytes = r.take(m.div_ceil(8)).ok_or_else(truncated)?;
    let occlusion = unpack_bits(occlusion_bytes, m);
    let logits = r.f32s(d).ok_or_else(truncated)?;

    let stored_derived = if flags & FLAG_DERIVED != 0 {
        let probabilities = r.f32s(d).ok_or_else(truncated)?;
        let binary_bytes = r.take(d.div_ceil(8)).ok_or_else(truncated)?;
        Some((probabilities, unpack_bits(binary_bytes, d)))
    } else {
        None
    };

    let mut get_str = |field: &'static str| -> Result<String, StorageError> {
        let len = r.u16().ok_or_else(truncated)? as usize;
        let raw = r.take(len).ok_or_else(truncated)?;
        String::from_utf8(raw.to_vec()).map_err(|_| StorageError::BadUtf8 {
            path: path.to_path_buf(),
            field,
        })
    };
    let subject_id = get_str("subject_id")?;
    let image_id = get_str("image_id")?;
    let scheme_name = get_str("scheme_name")?;

    if r.pos != bytes.len() {
        return Err(StorageError::TrailingBytes {
            path: path.to_path_buf(),
            extra: bytes.len() - r.pos,
        });
    }

    let model_err = |source: facesig_core::Error| StorageError::Model {
        path: path.to_path_buf(),
        source,
    };
    let layout = PatchLayout::new(m, n, &scheme_name).map_err(model_err)?;
    let patch = PatchFeatureComponent::new(layout, features, occlusion).map_err(model_err)?;
    let attributes = AttributeComponent::from_logits(logits).map_err(model_err)?;

    // cross-check stored derived values against the recomputation
    if let Some((stored_p, stored_b)) = stored_derived {
        for (i, (&stored, &recomputed)) in
            stored_p.iter().zip(attributes.probabilities()).enumerate()
        {
            if (stored as f64 - recomputed).abs() > DERIVED_TOLERANCE {
                return Err(StorageError::DerivedMismatch {
                    path: path.to_path_buf(),
                    index: i,
                    stored: stored as f64,
                    recomputed,
                });
            }
        }
        for (i, (&stored, &recomputed)) in stored_b.iter().zip(attributes.binary()).enumerate() {
            if stored != recomputed {
                return Err(StorageError::DerivedMismatch {
                    path: path.to_path_buf(),
                    index: i,
                    stored: if stored { 1.0 } else { 0.0 },
                    recomputed: if recomputed { 1.0 } else { 0.0 },
                });
            }
        }
    }

    let signature = Signature::new(subject_id, image_id, patch, attributes).map_err(model_err)?;
    let violations = validate(&signature);
    if !violations.is_empty() {
        return Err(StorageError::Invalid {
            path: path.to_path_buf(),
            violations,
        });
    }
    Ok(signature)
}

/// Write a signature file atomically (write to a sibling temp file, then
/// rename into place).
pub fn write_signature(path: &Path, signature: &Signature) -> Result<(), StorageError> {
    let bytes = encode_signature(signature);
    let tmp = path.with_extension("sig.tmp");
    let io_err = |e: io::Error| StorageError::io(path, e);
    {
        let mut file = fs::File::create(&tmp).map_err(io_err)?;
        file.write_all(&bytes).map_err(io_err)?;
        file.sync_all().map_err(io_err)?;
    }
    fs::rename(&tmp, path).map_err(io_err)
}

/// Read and fully validate a signature file.
pub fn read_signature(path: &Path) -> Result<Signature, StorageError> {
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| StorageError::io(path, e))?;
    decode_signature(&bytes, path)
}
