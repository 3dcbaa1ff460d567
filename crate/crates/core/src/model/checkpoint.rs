//! Versioned checkpoint container.
//!
//! Byte layout (all integers little endian):
//!
//! ```text
//! magic    8 bytes  "D2WGCKPT"
//! version  u32
//! hlen     u64      length of the header text
//! header   hlen     UTF-8 `key = value` lines (model config, step, metadata)
//! count    u32      number of tensors
//! tensors  count ×  { u32 name_len, name bytes, u64 n, n × f64 }
//! digest   32 bytes SHA-256 of everything above
//! ```

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use sha2::{Digest, Sha256};

use super::config::ModelConfig;
use crate::error::{Error, Result};
use crate::kv::KvMap;

pub const MAGIC: &[u8; 8] = b"D2WGCKPT";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct NamedTensor {
    pub name: String,
    pub data: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub config: ModelConfig,
    pub config_hash: String,
    pub step: u64,
    pub batches_consumed: u64,
    /// Free-form run metadata (training hyper-parameters, seed, ...).
    pub meta: KvMap,
    pub tensors: Vec<NamedTensor>,
}

fn corrupt(msg: &str) -> Error {
    Error::Corrupt(msg.to_string())
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| corrupt("truncated"))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }

    fn len(&mut self) -> Result<usize> {
        usize::try_from(self.u64()?).map_err(|_| corrupt("length overflow"))
    }
}

impl Checkpoint {
    pub fn new(config: ModelConfig, step: u64, batches_consumed: u64) -> Self {
        let config_hash = config.config_hash();
        Self {
            config,
            config_hash,
            step,
            batches_consumed,
            meta: KvMap::new(),
            tensors: Vec::new(),
        }
    }

    pub fn push(&mut self, name: impl Into<String>, data: Vec<f64>) {
        self.tensors.push(NamedTensor {
            name: name.into(),
            data,
        });
    }

    pub fn tensor(&self, name: &str) -> Result<&[f64]> {
        self.tensors
            .iter()
            .find(|t| t.name == name)
            .map(|t| &t.data[..])
            .ok_or_else(|| Error::MissingTensor(name.to_string()))
    }

    /// Reject a checkpoint whose architecture differs from `current`.
    pub fn check_config(&self, current: &ModelConfig) -> Result<()> {
        let current = current.config_hash();
        if current != self.config_hash {
            return Err(Error::ConfigHashMismatch {
                stored: self.config_hash.clone(),
                current,
            });
        }
        Ok(())
    }

    fn header(&self) -> KvMap {
        let mut kv = self.config.to_kv();
        kv.set("ckpt.config_hash", &self.config_hash);
        kv.set("ckpt.step", self.step);
        kv.set("ckpt.batches_consumed", self.batches_consumed);
        for (k, v) in self.meta.iter() {
            kv.set(&alloc::format!("meta.{k}"), v);
        }
        kv
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let header = alloc::format!("{}", self.header());
        let payload: usize = self
            .tensors
            .iter()
            .map(|t| 12 + t.name.len() + 8 * t.data.len())
            .sum();
        let mut out = Vec::with_capacity(8 + 4 + 8 + header.len() + 4 + payload + 32);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u64).to_le_bytes());
        out.extend_from_slice(header.as_bytes());
        out.extend_from_slice(&(self.tensors.len() as u32).to_le_bytes());
        for t in &self.tensors {
            out.extend_from_slice(&(t.name.len() as u32).to_le_bytes());
            out.extend_from_slice(t.name.as_bytes());
            out.extend_from_slice(&(t.data.len() as u64).to_le_bytes());
            for v in &t.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < MAGIC.len() + 4 || &bytes[..8] != MAGIC {
            return Err(corrupt("not a checkpoint file (bad magic)"));
        }
        let mut r = Reader { buf: bytes, pos: 8 };
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::FormatVersion {
                found: version,
                expected: FORMAT_VERSION,
            });
        }
        if bytes.len() < 32 {
            return Err(corrupt("truncated"));
        }
        let (body, digest) = bytes.split_at(bytes.len() - 32);
        if Sha256::digest(body).as_slice() != digest {
            return Err(corrupt("digest mismatch"));
        }
        let mut r = Reader {
            buf: body,
            pos: r.pos,
        };
        let hlen = r.len()?;
        let header =
            core::str::from_utf8(r.take(hlen)?).map_err(|_| corrupt("header is not UTF-8"))?;
        let kv = KvMap::parse(header)?;
        let config = ModelConfig::from_kv(&kv)?;
        let config_hash: String = kv.require("ckpt.config_hash")?;
        if config.config_hash() != config_hash {
            return Err(corrupt("stored config does not match its hash"));
        }
        let mut meta = KvMap::new();
        for (k, v) in kv.iter() {
            if let Some(rest) = k.strip_prefix("meta.") {
                meta.set(rest, v);
            }
        }
        let count = r.u32()? as usize;
        let mut tensors = Vec::with_capacity(count.min(1024));
        for _ in 0..count {
            let n = r.u32()? as usize;
            let name = core::str::from_utf8(r.take(n)?)
                .map_err(|_| corrupt("tensor name is not UTF-8"))?
                .to_string();
            let len = r.len()?;
            let raw = r.take(
                len.checked_mul(8)
                    .ok_or_else(|| corrupt("length overflow"))?,
            )?;
            let data = raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect();
            tensors.push(NamedTensor { name, data });
        }
        if r.pos != body.len() {
            return Err(corrupt("trailing bytes"));
        }
        Ok(Self {
            config,
            config_hash,
            step: kv.require("ckpt.step")?,
            batches_consumed: kv.require("ckpt.batches_consumed")?,
            meta,
            tensors,
        })
    }
}
