//! Self-describing model files.
//!
//! Layout, all integers little-endian:
//!
//! | bytes | content |
//! |-------|---------|
//! | 8 | magic `HIERMAIL` |
//! | 2 | format version |
//! | 1 | model kind |
//! | 8 | header length `h` |
//! | `h` | JSON header: the model with every tensor's data replaced by an index |
//! | 8 | tensor count |
//! | per tensor | 8-byte element count, then the elements as `f64` |
//! | 32 | SHA-256 of everything above |

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::docvec::DocVecModel;
use crate::error::{Error, Result};
use crate::hiergen::SentencePredictor;
use crate::wordlm::WordLM;

const MAGIC: &[u8; 8] = b"HIERMAIL";
pub const FORMAT_VERSION: u16 = 1;
const DIGEST_LEN: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    WordLm = 1,
    DocVec = 2,
    SentencePredictor = 3,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::WordLm => "word language model",
            ModelKind::DocVec => "paragraph vector model",
            ModelKind::SentencePredictor => "sentence predictor",
        }
    }

    fn from_byte(b: u8) -> Option<Self> {
        [ModelKind::WordLm, ModelKind::DocVec, ModelKind::SentencePredictor]
            .into_iter()
            .find(|k| *k as u8 == b)
    }
}

/// A model type that can be stored in a checkpoint.
pub trait Checkpointable: Serialize + DeserializeOwned {
    const KIND: ModelKind;
}

impl Checkpointable for WordLM {
    const KIND: ModelKind = ModelKind::WordLm;
}

impl Checkpointable for DocVecModel {
    const KIND: ModelKind = ModelKind::DocVec;
}

impl Checkpointable for SentencePredictor {
    const KIND: ModelKind = ModelKind::SentencePredictor;
}

/// Any checkpointed model, for callers that dispatch on the stored kind.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyModel {
    WordLm(WordLM),
    DocVec(DocVecModel),
    SentencePredictor(SentencePredictor),
}

fn is_tensor(map: &Map<String, Value>) -> bool {
    map.len() == 2
        && map.get("shape").is_some_and(Value::is_array)
        && map.get("data").is_some_and(Value::is_array)
}

/// Moves every tensor's data out of `value` into `out`.
fn extract(value: &mut Value, out: &mut Vec<Vec<f64>>) -> Result<()> {
    match value {
        Value::Object(map) if is_tensor(map) => {
            let data = map.remove("data").unwrap();
            let floats = data
                .as_array()
                .unwrap()
                .iter()
                .map(|x| x.as_f64().ok_or_else(|| Error::Checkpoint("non-finite tensor entry".into())))
                .collect::<Result<Vec<f64>>>()?;
            map.insert("tensor".into(), Value::from(out.len()));
            out.push(floats);
        }
        Value::Object(map) => {
            for v in map.values_mut() {
                extract(v, out)?;
            }
        }
        Value::Array(items) => {
            for v in items {
                extract(v, out)?;
            }
        }
        _ => {}
    }
    Ok(())
}

fn restore(value: &mut Value, tensors: &mut [Option<Vec<f64>>]) -> Result<()> {
    match value {
        Value::Object(map) if map.len() == 2 && map.contains_key("shape") && map.contains_key("tensor") => {
            let idx = map
                .remove("tensor")
                .and_then(|v| v.as_u64())
                .ok_or_else(|| Error::Checkpoint("bad tensor reference".into()))? as usize;
            let data = tensors
                .get_mut(idx)
                .and_then(Option::take)
                .ok_or_else(|| Error::Checkpoint(format!("missing tensor {idx}")))?;
            map.insert("data".into(), Value::from(data));
        }
        Value::Object(map) => {
            for v in map.values_mut() {
                restore(v, tensors)?;
            }
        }
        Value::Array(items) => {
            for v in items {
                restore(v, tensors)?;
            }
        }
        _ => {}
    }
    Ok(())
}

pub fn to_bytes<M: Checkpointable>(model: &M) -> Result<Vec<u8>> {
    let mut header = serde_json::to_value(model).map_err(|e| Error::Checkpoint(e.to_string()))?;
    let mut tensors = Vec::new();
    extract(&mut header, &mut tensors)?;
    let header = serde_json::to_vec(&header).map_err(|e| Error::Checkpoint(e.to_string()))?;

    let mut buf = Vec::with_capacity(header.len() + 64);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    buf.push(M::KIND as u8);
    buf.extend_from_slice(&(header.len() as u64).to_le_bytes());
    buf.extend_from_slice(&header);
    buf.extend_from_slice(&(tensors.len() as u64).to_le_bytes());
    for t in &tensors {
        buf.extend_from_slice(&(t.len() as u64).to_le_bytes());
        for x in t {
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }
    let digest = Sha256::digest(&buf);
    buf.extend_from_slice(&digest[..]);
    Ok(buf)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::Checkpoint("unexpected end of data".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

/// Verifies the digest and header fields and returns the stored kind and
/// the model JSON with tensors restored.
fn decode(bytes: &[u8]) -> Result<(ModelKind, Value)> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::Checkpoint("not a hiermail checkpoint".into()));
    }
    if bytes.len() < MAGIC.len() + 3 + DIGEST_LEN {
        return Err(Error::Checksum);
    }
    let (body, digest) = bytes.split_at(bytes.len() - DIGEST_LEN);
    if Sha256::digest(body)[..] != *digest {
        return Err(Error::Checksum);
    }
    let mut r = Reader { bytes: body, pos: MAGIC.len() };
    let version = u16::from_le_bytes(r.take(2)?.try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(Error::Checkpoint(format!(
            "format version {version} is not supported (expected {FORMAT_VERSION})"
        )));
    }
    let kind_byte = r.take(1)?[0];
    let kind = ModelKind::from_byte(kind_byte)
        .ok_or_else(|| Error::Checkpoint(format!("unknown model kind {kind_byte}")))?;
    let header_len = r.u64()? as usize;
    let mut header: Value =
        serde_json::from_slice(r.take(header_len)?).map_err(|e| Error::Checkpoint(e.to_string()))?;
    let count = r.u64()? as usize;
    let mut tensors = Vec::with_capacity(count.min(1 << 16));
    for _ in 0..count {
        let n = r.u64()? as usize;
        let raw = r.take(n.checked_mul(8).ok_or_else(|| Error::Checkpoint("tensor too large".into()))?)?;
        tensors.push(Some(
            raw.chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        ));
    }
    if r.pos != body.len() {
        return Err(Error::Checkpoint("trailing bytes after tensors".into()));
    }
    restore(&mut header, &mut tensors)?;
    Ok((kind, header))
}

fn parse<M: DeserializeOwned>(value: Value) -> Result<M> {
    serde_json::from_value(value).map_err(|e| Error::Checkpoint(e.to_string()))
}

pub fn from_bytes<M: Checkpointable>(bytes: &[u8]) -> Result<M> {
    let (kind, value) = decode(bytes)?;
    if kind != M::KIND {
        return Err(Error::WrongModelType {
            expected: M::KIND.name(),
            found: kind.name().to_string(),
        });
    }
    parse(value)
}

pub fn save_checkpoint<M: Checkpointable>(model: &M, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, to_bytes(model)?).map_err(|e| Error::io(path, e))
}

fn read(path: &Path) -> Result<Vec<u8>> {
    if !path.exists() {
        return Err(Error::MissingPath(path.to_path_buf()));
    }
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint<M: Checkpointable>(path: &Path) -> Result<M> {
    from_bytes(&read(path)?)
}

pub fn load_any(path: &Path) -> Result<AnyModel> {
    let (kind, value) = decode(&read(path)?)?;
    Ok(match kind {
        ModelKind::WordLm => AnyModel::WordLm(parse(value)?),
        ModelKind::DocVec => AnyModel::DocVec(parse(value)?),
        ModelKind::SentencePredictor => AnyModel::SentencePredictor(parse(value)?),
    })
}
