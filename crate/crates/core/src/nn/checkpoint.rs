//! Binary checkpoint container.
//!
//! ```text
//! offset  size  field
//! 0       8     magic "RFRSHCKP"
//! 8       4     format version, u32 little-endian (currently 1)
//! 12      8     manifest length in bytes, u64 little-endian
//! 20      4     CRC-32 of manifest + payload, u32 little-endian
//! 24      ..    manifest, UTF-8 text, one entry per line:
//!                 meta <key> <value>
//!                 param <name> <dim>x<dim>.. <adam step> <byte offset> <value count>
//! ..      ..    payload: per parameter, value then Adam first and second
//!               moments, each `count` f64 little-endian
//! ```
//!
//! Parameters and metadata are written in the order given, so encoding the
//! result of a decode reproduces the input bytes exactly.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{Parameter, ParameterStore, Tensor};

pub const MAGIC: &[u8; 8] = b"RFRSHCKP";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CheckpointError {
    #[error("not a checkpoint (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0} (expected {VERSION})")]
    Version(u32),
    #[error("checkpoint truncated")]
    Truncated,
    #[error("checkpoint checksum mismatch")]
    Checksum,
    #[error("corrupted manifest: {0}")]
    Manifest(String),
    #[error("missing metadata key {0}")]
    MissingKey(String),
    #[error("invalid metadata value for {key}: {value:?}")]
    BadValue { key: String, value: String },
}

/// Ordered key/value metadata stored next to the parameters.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Metadata(Vec<(String, String)>);

impl Metadata {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, key: &str, value: impl ToString) {
        let value = value.to_string();
        match self.0.iter_mut().find(|(k, _)| k == key) {
            Some(entry) => entry.1 = value,
            None => self.0.push((key.into(), value)),
        }
    }

    /// Stores an `f64` bit-exactly.
    pub fn set_f64(&mut self, key: &str, value: f64) {
        self.set(key, format!("{:016x}", value.to_bits()));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.0.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn require(&self, key: &str) -> Result<&str, CheckpointError> {
        self.get(key)
            .ok_or_else(|| CheckpointError::MissingKey(key.into()))
    }

    pub fn parse<T: core::str::FromStr>(&self, key: &str) -> Result<T, CheckpointError> {
        let value = self.require(key)?;
        value.parse().map_err(|_| CheckpointError::BadValue {
            key: key.into(),
            value: value.into(),
        })
    }

    pub fn get_f64(&self, key: &str) -> Result<f64, CheckpointError> {
        let value = self.require(key)?;
        u64::from_str_radix(value, 16)
            .map(f64::from_bits)
            .map_err(|_| CheckpointError::BadValue {
                key: key.into(),
                value: value.into(),
            })
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }
}

fn valid_field(s: &str) -> bool {
    !s.is_empty() && !s.contains(char::is_whitespace)
}

pub fn encode(store: &ParameterStore, meta: &Metadata) -> Vec<u8> {
    let mut manifest = String::new();
    for (key, value) in meta.iter() {
        debug_assert!(valid_field(key) && !value.contains('\n'));
        manifest.push_str(&format!("meta {key} {value}\n"));
    }
    let mut payload = Vec::new();
    for (_, param) in store.iter() {
        let dims: Vec<String> = param.value.shape().iter().map(|d| d.to_string()).collect();
        manifest.push_str(&format!(
            "param {} {} {} {} {}\n",
            param.name,
            dims.join("x"),
            param.step,
            payload.len(),
            param.value.len()
        ));
        for block in [&param.value, &param.adam_m, &param.adam_v] {
            for v in block.data() {
                payload.extend_from_slice(&v.to_le_bytes());
            }
        }
    }

    let mut hasher = crc32fast::Hasher::new();
    hasher.update(manifest.as_bytes());
    hasher.update(&payload);
    let crc = hasher.finalize();

    let mut out = Vec::with_capacity(HEADER_LEN + manifest.len() + payload.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(manifest.len() as u64).to_le_bytes());
    out.extend_from_slice(&crc.to_le_bytes());
    out.extend_from_slice(manifest.as_bytes());
    out.extend_from_slice(&payload);
    out
}

pub fn decode(bytes: &[u8]) -> Result<(ParameterStore, Metadata), CheckpointError> {
    if bytes.len() < HEADER_LEN {
        return Err(if bytes.starts_with(&MAGIC[..bytes.len().min(8)]) {
            CheckpointError::Truncated
        } else {
            CheckpointError::BadMagic
        });
    }
    if &bytes[..8] != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if version != VERSION {
        return Err(CheckpointError::Version(version));
    }
    let manifest_len = u64::from_le_bytes(bytes[12..20].try_into().expect("8 bytes")) as usize;
    let crc = u32::from_le_bytes(bytes[20..24].try_into().expect("4 bytes"));
    let body = &bytes[HEADER_LEN..];
    if manifest_len > body.len() {
        return Err(CheckpointError::Truncated);
    }
    let (manifest, payload) = body.split_at(manifest_len);
    let manifest = core::str::from_utf8(manifest)
        .map_err(|_| CheckpointError::Manifest("not UTF-8".into()))?;

    let mut meta = Metadata::new();
    let mut store = ParameterStore::new();
    let mut expected_payload = 0usize;
    for line in manifest.lines() {
        let fields: Vec<&str> = line.splitn(3, ' ').collect();
        match fields.as_slice() {
            ["meta", key, value] => meta.set(key, *value),
            ["param", rest @ ..] => {
                let parts: Vec<&str> = rest.iter().flat_map(|s| s.split(' ')).collect();
                let [name, dims, step, offset, count] = parts.as_slice() else {
                    return Err(CheckpointError::Manifest(line.into()));
                };
                let bad = || CheckpointError::Manifest(line.into());
                let shape: Vec<usize> = dims
                    .split('x')
                    .map(|d| d.parse().map_err(|_| bad()))
                    .collect::<Result<_, _>>()?;
                let step: u64 = step.parse().map_err(|_| bad())?;
                let offset: usize = offset.parse().map_err(|_| bad())?;
                let count: usize = count.parse().map_err(|_| bad())?;
                if shape.iter().product::<usize>() != count || offset != expected_payload {
                    return Err(bad());
                }
                let block = count * 8;
                let end = offset
                    .checked_add(3 * block)
                    .ok_or_else(bad)?;
                if end > payload.len() {
                    return Err(CheckpointError::Truncated);
                }
                let read = |start: usize| -> Tensor {
                    let data = payload[start..start + block]
                        .chunks_exact(8)
                        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                        .collect();
                    Tensor::new(shape.clone(), data).expect("count matches shape")
                };
                let mut param = Parameter::new(*name, read(offset));
                param.adam_m = read(offset + block);
                param.adam_v = read(offset + 2 * block);
                param.step = step;
                store
                    .push(param)
                    .map_err(|_| CheckpointError::Manifest(format!("duplicate parameter {name}")))?;
                expected_payload = end;
            }
            _ => return Err(CheckpointError::Manifest(line.into())),
        }
    }
    if expected_payload != payload.len() {
        return Err(if expected_payload > payload.len() {
            CheckpointError::Truncated
        } else {
            CheckpointError::Manifest("trailing payload bytes".into())
        });
    }

    let mut hasher = crc32fast::Hasher::new();
    hasher.update(manifest.as_bytes());
    hasher.update(payload);
    if hasher.finalize() != crc {
        return Err(CheckpointError::Checksum);
    }
    Ok((store, meta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn sample() -> (ParameterStore, Metadata) {
        let mut store = ParameterStore::new();
        store
            .add("a", Tensor::new(vec![2, 2], vec![1.0, -2.5, 3.25, f64::MIN_POSITIVE]).unwrap())
            .unwrap();
        let id = store.add("b.bias", Tensor::vector(vec![0.1, 0.2, 0.3])).unwrap();
        store.get_mut(id).step = 7;
        store.get_mut(id).adam_m.data_mut()[1] = 0.5;
        let mut meta = Metadata::new();
        meta.set("kernel_widths", "1,2,3");
        meta.set_f64("best", 0.123456789);
        (store, meta)
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let (store, meta) = sample();
        let bytes = encode(&store, &meta);
        let (store2, meta2) = decode(&bytes).unwrap();
        assert_eq!(store2, store);
        assert_eq!(meta2, meta);
        assert_eq!(meta2.get_f64("best").unwrap(), 0.123456789);
        assert_eq!(encode(&store2, &meta2), bytes);
    }

    #[test]
    fn detects_damage() {
        let (store, meta) = sample();
        let bytes = encode(&store, &meta);
        assert_eq!(decode(&bytes[..bytes.len() - 3]), Err(CheckpointError::Truncated));
        assert_eq!(decode(&bytes[..10]), Err(CheckpointError::Truncated));
        assert_eq!(decode(b"nonsense-bytes-here-and-more"), Err(CheckpointError::BadMagic));

        let mut wrong_version = bytes.clone();
        wrong_version[8] = 9;
        assert_eq!(decode(&wrong_version), Err(CheckpointError::Version(9)));

        let mut flipped = bytes.clone();
        let last = flipped.len() - 1;
        flipped[last] ^= 0x40;
        assert_eq!(decode(&flipped), Err(CheckpointError::Checksum));

        let mut bad_manifest = bytes.clone();
        let pos = bytes
            .windows(5)
            .position(|w| w == b"param")
            .unwrap();
        bad_manifest[pos..pos + 5].copy_from_slice(b"parXm");
        assert!(matches!(decode(&bad_manifest), Err(CheckpointError::Manifest(_))));
    }
}
