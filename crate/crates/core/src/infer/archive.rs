use std::collections::BTreeMap;
use std::path::Path;

use super::graph::GraphDescriptor;
use crate::error::{Error, Result};
use crate::formats;

pub const ARCHIVE_MAGIC: &[u8; 4] = b"V2HW";
pub const ARCHIVE_VERSION: u32 = 1;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ArchiveError {
    #[error("bad magic {found:?}, expected \"V2HW\"")]
    BadMagic { found: Vec<u8> },

    #[error("unsupported archive version {0}, expected {ARCHIVE_VERSION}")]
    UnsupportedVersion(u32),

    #[error("checksum mismatch (stored {stored:#010x}, computed {computed:#010x}); the file is truncated or corrupt")]
    Checksum { stored: u32, computed: u32 },

    #[error("malformed archive: {0}")]
    Malformed(String),

    #[error("graph descriptor: {0}")]
    Descriptor(String),

    #[error("tensor `{tensor}` has shape {actual:?}, expected {expected:?}")]
    TensorShape {
        tensor: String,
        expected: Vec<usize>,
        actual: Vec<usize>,
    },

    #[error("tensor `{tensor}` used by node `{node}` is not in the archive")]
    MissingTensor { tensor: String, node: String },

    #[error("tensor `{0}` is defined or referenced more than once")]
    DuplicateTensor(String),

    #[error("tensor `{0}` is not referenced by any node")]
    UnusedTensor(String),

    #[error("tensor `{0}` holds non-finite values")]
    NonFinite(String),

    #[error("node `{node}`: {msg}")]
    Graph { node: String, msg: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f32>) -> std::result::Result<Self, ArchiveError> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(ArchiveError::Malformed(format!(
                "shape {shape:?} needs {n} values, got {}",
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn filled(shape: Vec<usize>, value: f32) -> Self {
        let n = shape.iter().product();
        Self {
            shape,
            data: vec![value; n],
        }
    }
}

/// Graph descriptor plus named weights, as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightArchive {
    pub descriptor: GraphDescriptor,
    pub tensors: BTreeMap<String, Tensor>,
}

impl WeightArchive {
    pub fn tensor_shapes(&self) -> BTreeMap<String, Vec<usize>> {
        self.tensors
            .iter()
            .map(|(k, t)| (k.clone(), t.shape.clone()))
            .collect()
    }

    /// Serializes to the `V2HW` layout: magic, u32 version, u32 descriptor
    /// length, UTF-8 JSON descriptor, u32 tensor count, then per tensor u16
    /// name length, name, u8 rank, u32 dims, f32 values; all little-endian
    /// and followed by the CRC-32 of everything before it.
    pub fn encode(&self) -> std::result::Result<Vec<u8>, ArchiveError> {
        let desc = serde_json::to_string(&self.descriptor)
            .map_err(|e| ArchiveError::Descriptor(e.to_string()))?;
        let mut out = Vec::new();
        out.extend_from_slice(ARCHIVE_MAGIC);
        out.extend_from_slice(&ARCHIVE_VERSION.to_le_bytes());
        out.extend_from_slice(
            &u32::try_from(desc.len())
                .map_err(|_| ArchiveError::Malformed("descriptor too long".into()))?
                .to_le_bytes(),
        );
        out.extend_from_slice(desc.as_bytes());
        out.extend_from_slice(&(self.tensors.len() as u32).to_le_bytes());
        for (name, t) in &self.tensors {
            let len = u16::try_from(name.len())
                .map_err(|_| ArchiveError::Malformed(format!("tensor name `{name}` too long")))?;
            out.extend_from_slice(&len.to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            let rank = u8::try_from(t.shape.len())
                .map_err(|_| ArchiveError::Malformed(format!("tensor `{name}` rank too large")))?;
            out.push(rank);
            for d in &t.shape {
                out.extend_from_slice(&(*d as u32).to_le_bytes());
            }
            for v in &t.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        Ok(out)
    }

    /// Parses an archive. Only framing and checksum are checked here; use
    /// [`super::Generator::new`] to validate the graph against the tensors.
    pub fn decode(bytes: &[u8]) -> std::result::Result<Self, ArchiveError> {
        if bytes.len() < 4 || &bytes[..4] != ARCHIVE_MAGIC {
            return Err(ArchiveError::BadMagic {
                found: bytes[..bytes.len().min(4)].to_vec(),
            });
        }
        if bytes.len() < 8 {
            return Err(ArchiveError::Checksum {
                stored: 0,
                computed: crc32fast::hash(bytes),
            });
        }
        let (body, tail) = bytes.split_at(bytes.len() - 4);
        let stored = u32::from_le_bytes(tail.try_into().expect("4 bytes"));
        let computed = crc32fast::hash(body);
        if stored != computed {
            return Err(ArchiveError::Checksum { stored, computed });
        }
        let mut r = Reader { buf: body, pos: 4 };
        let version = r.u32()?;
        if version != ARCHIVE_VERSION {
            return Err(ArchiveError::UnsupportedVersion(version));
        }
        let dlen = r.u32()? as usize;
        let desc = std::str::from_utf8(r.take(dlen)?)
            .map_err(|e| ArchiveError::Descriptor(e.to_string()))?;
        let descriptor: GraphDescriptor =
            serde_json::from_str(desc).map_err(|e| ArchiveError::Descriptor(e.to_string()))?;
        let count = r.u32()? as usize;
        let mut tensors = BTreeMap::new();
        for _ in 0..count {
            let nlen = r.u16()? as usize;
            let name = std::str::from_utf8(r.take(nlen)?)
                .map_err(|e| ArchiveError::Malformed(format!("tensor name: {e}")))?
                .to_string();
            let rank = r.u8()? as usize;
            let shape = (0..rank)
                .map(|_| r.u32().map(|d| d as usize))
                .collect::<std::result::Result<Vec<_>, _>>()?;
            let n = shape
                .iter()
                .try_fold(1usize, |a, d| a.checked_mul(*d))
                .ok_or_else(|| ArchiveError::Malformed(format!("tensor `{name}` is too large")))?;
            let raw = r.take(n.checked_mul(4).ok_or_else(|| {
                ArchiveError::Malformed(format!("tensor `{name}` is too large"))
            })?)?;
            let data: Vec<f32> = raw
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().expect("4 bytes")))
                .collect();
            if data.iter().any(|v| !v.is_finite()) {
                return Err(ArchiveError::NonFinite(name));
            }
            if tensors
                .insert(name.clone(), Tensor { shape, data })
                .is_some()
            {
                return Err(ArchiveError::DuplicateTensor(name));
            }
        }
        if r.pos != body.len() {
            return Err(ArchiveError::Malformed(format!(
                "{} trailing bytes before the checksum",
                body.len() - r.pos
            )));
        }
        Ok(Self {
            descriptor,
            tensors,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes = self.encode().map_err(|source| Error::ArchiveFile {
            path: path.to_path_buf(),
            source,
        })?;
        formats::write_file(path, &bytes)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let bytes = formats::read_file(path)?;
        Self::decode(&bytes).map_err(|source| Error::ArchiveFile {
            path: path.to_path_buf(),
            source,
        })
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> std::result::Result<&'a [u8], ArchiveError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|e| *e <= self.buf.len())
            .ok_or_else(|| {
                ArchiveError::Malformed(format!(
                    "needs {n} bytes at offset {}, only {} remain",
                    self.pos,
                    self.buf.len() - self.pos
                ))
            })?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> std::result::Result<u8, ArchiveError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> std::result::Result<u16, ArchiveError> {
        Ok(u16::from_le_bytes(
            self.take(2)?.try_into().expect("2 bytes"),
        ))
    }

    fn u32(&mut self) -> std::result::Result<u32, ArchiveError> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }
}
