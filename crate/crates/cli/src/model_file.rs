//! Binary model format.
//!
//! ```text
//! magic        8 bytes  "OANADE01"
//! version      u32
//! meta_len     u32, then meta_len bytes of UTF-8 `key=value` lines
//! n_tensors    u32, then per tensor:
//!   name_len u16, name bytes, ndim u8, ndim x u64 dims, u64 byte offset into payload
//! payload_len  u64, then payload_len bytes of little-endian f64, row-major
//! ```
//! All integers are little-endian.

use std::fs;
use std::path::Path;

use ndarray::Array1;
use oanade::data::{write_atomic, DataKind, Stats};
use oanade::model::{Activation, HeadKind, ModelConfig, Parameters};

use crate::error::{data, CliError, CliResult};

pub const MAGIC: &[u8; 8] = b"OANADE01";
pub const FORMAT_VERSION: u32 = 1;

const STATS_MEAN: &str = "data.mean";
const STATS_STD: &str = "data.std";

#[derive(Clone, Debug, PartialEq)]
pub struct ModelFile {
    pub params: Parameters<f64>,
    pub data_kind: DataKind,
    /// Training-set standardization, applied to every input before the model sees it.
    pub stats: Option<Stats>,
    pub seed: u64,
    /// Free-form `key=value` notes kept in order: data source, training settings.
    pub notes: Vec<(String, String)>,
}

fn one_line(s: &str) -> String {
    s.replace(['\n', '\r'], " ")
}

impl ModelFile {
    pub fn new(params: Parameters<f64>, data_kind: DataKind, stats: Option<Stats>, seed: u64) -> Self {
        ModelFile {
            params,
            data_kind,
            stats,
            seed,
            notes: Vec::new(),
        }
    }

    pub fn note(mut self, key: &str, value: impl AsRef<str>) -> Self {
        self.notes.push((key.to_string(), one_line(value.as_ref())));
        self
    }

    fn metadata(&self) -> String {
        let c = self.params.config();
        let hidden: Vec<String> = c.hidden_sizes.iter().map(|h| h.to_string()).collect();
        let mut lines = vec![
            format!("dim={}", c.dim),
            format!("hidden_sizes={}", hidden.join(",")),
            format!("activation={}", c.activation),
            format!("head={}", c.head.name()),
            format!("components={}", c.components()),
            format!("input_masks={}", c.input_masks),
            format!("data_kind={}", self.data_kind),
            format!("seed={}", self.seed),
            format!("stats={}", if self.stats.is_some() { "embedded" } else { "none" }),
        ];
        lines.extend(self.notes.iter().map(|(k, v)| format!("note.{k}={v}")));
        lines.join("\n") + "\n"
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut tensors: Vec<(String, Vec<usize>, Vec<f64>)> = self
            .params
            .tensors()
            .into_iter()
            .map(|(name, shape, values, _)| (name, shape, values.to_vec()))
            .collect();
        if let Some(s) = &self.stats {
            tensors.push((STATS_MEAN.into(), vec![s.dim()], s.mean.to_vec()));
            tensors.push((STATS_STD.into(), vec![s.dim()], s.std.to_vec()));
        }
        let meta = self.metadata();
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&(meta.len() as u32).to_le_bytes());
        out.extend_from_slice(meta.as_bytes());
        out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
        let mut offset = 0u64;
        for (name, shape, values) in &tensors {
            out.extend_from_slice(&(name.len() as u16).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.push(shape.len() as u8);
            for &d in shape {
                out.extend_from_slice(&(d as u64).to_le_bytes());
            }
            out.extend_from_slice(&offset.to_le_bytes());
            offset += 8 * values.len() as u64;
        }
        out.extend_from_slice(&offset.to_le_bytes());
        for (_, _, values) in &tensors {
            for v in values {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> CliResult<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(data("not a model file (bad magic)"));
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(data(format!("unsupported model format version {version}")));
        }
        let meta_len = r.u32()? as usize;
        let meta = std::str::from_utf8(r.take(meta_len)?).map_err(|_| data("metadata is not UTF-8"))?;
        let (config, data_kind, seed, has_stats, notes) = parse_metadata(meta)?;

        let n = r.u32()? as usize;
        let mut dir = Vec::with_capacity(n);
        for _ in 0..n {
            let len = r.u16()? as usize;
            let name = String::from_utf8(r.take(len)?.to_vec()).map_err(|_| data("tensor name is not UTF-8"))?;
            let ndim = r.u8()? as usize;
            let shape = (0..ndim).map(|_| r.u64().map(|d| d as usize)).collect::<CliResult<Vec<_>>>()?;
            let offset = r.u64()?;
            dir.push((name, shape, offset));
        }
        let payload_len = r.u64()?;
        let payload = r.take(usize::try_from(payload_len).map_err(|_| data("payload too large"))?)?;
        if r.pos != bytes.len() {
            return Err(data(format!("{} trailing bytes after payload", bytes.len() - r.pos)));
        }

        let mut spans: Vec<(u64, u64, &str)> = Vec::new();
        for (name, shape, offset) in &dir {
            let count = shape.iter().try_fold(1u64, |acc, &d| acc.checked_mul(d as u64));
            let end = count.and_then(|c| c.checked_mul(8)).and_then(|b| b.checked_add(*offset));
            match end {
                Some(end) if end <= payload_len && offset % 8 == 0 => spans.push((*offset, end, name)),
                _ => return Err(data(format!("tensor {name} lies outside the payload"))),
            }
        }
        spans.sort();
        if let Some(w) = spans.windows(2).find(|w| w[1].0 < w[0].1) {
            return Err(data(format!("tensors {} and {} overlap", w[0].2, w[1].2)));
        }

        let read = |shape: &[usize], offset: u64| -> Vec<f64> {
            let start = offset as usize;
            let count: usize = shape.iter().product();
            payload[start..start + 8 * count]
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect()
        };

        let mut params = Parameters::<f64>::zeros(&config).map_err(|e| data(format!("metadata: {e}")))?;
        let mut expected_names: Vec<(String, Vec<usize>)> = params.tensors().into_iter().map(|t| (t.0, t.1)).collect();
        if has_stats {
            expected_names.push((STATS_MEAN.into(), vec![config.dim]));
            expected_names.push((STATS_STD.into(), vec![config.dim]));
        }
        if dir.len() != expected_names.len() {
            return Err(data(format!("expected {} tensors, found {}", expected_names.len(), dir.len())));
        }
        let mut flat = Vec::with_capacity(params.n_values());
        let mut stats_parts = Vec::new();
        for ((name, shape, offset), (want, want_shape)) in dir.iter().zip(&expected_names) {
            if name != want || shape != want_shape {
                return Err(data(format!("tensor {name} {shape:?} where {want} {want_shape:?} was expected")));
            }
            let values = read(shape, *offset);
            if name.starts_with("data.") {
                stats_parts.push(values);
            } else {
                flat.extend(values);
            }
        }
        params.set_flat(&flat).map_err(|e| data(e.to_string()))?;
        let stats = if has_stats {
            let std = Array1::from(stats_parts.pop().expect("std"));
            let mean = Array1::from(stats_parts.pop().expect("mean"));
            if std.iter().any(|&s| s.is_nan() || s <= 0.0) {
                return Err(data("embedded standard deviations must be positive"));
            }
            Some(Stats { mean, std })
        } else {
            None
        };
        Ok(ModelFile {
            params,
            data_kind,
            stats,
            seed,
            notes,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> CliResult<()> {
        Ok(write_atomic(path.as_ref(), &self.to_bytes())?)
    }

    pub fn load(path: impl AsRef<Path>) -> CliResult<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| data(format!("{}: {e}", path.display())))?;
        Self::from_bytes(&bytes).map_err(|e| match e {
            CliError::Data(m) => data(format!("{}: {m}", path.display())),
            other => other,
        })
    }
}

type Parsed = (ModelConfig, DataKind, u64, bool, Vec<(String, String)>);

fn parse_metadata(meta: &str) -> CliResult<Parsed> {
    let mut fields = std::collections::BTreeMap::new();
    let mut notes = Vec::new();
    for line in meta.lines().filter(|l| !l.is_empty()) {
        let (k, v) = line.split_once('=').ok_or_else(|| data(format!("bad metadata line `{line}`")))?;
        if let Some(note) = k.strip_prefix("note.") {
            notes.push((note.to_string(), v.to_string()));
        } else {
            fields.insert(k.to_string(), v.to_string());
        }
    }
    let get = |k: &str| fields.get(k).map(String::as_str).ok_or_else(|| data(format!("metadata lacks `{k}`")));
    let num = |k: &str| -> CliResult<u64> { get(k)?.parse().map_err(|_| data(format!("metadata `{k}` is not a number"))) };
    let hidden = get("hidden_sizes")?
        .split(',')
        .map(|h| h.parse::<usize>().map_err(|_| data("metadata `hidden_sizes` is malformed")))
        .collect::<CliResult<Vec<_>>>()?;
    let activation: Activation = get("activation")?.parse().map_err(|e: oanade::Error| data(e.to_string()))?;
    let head = match get("head")? {
        "binary" => HeadKind::Binary,
        "mog" => HeadKind::Mog { components: num("components")? as usize },
        other => return Err(data(format!("unknown head `{other}` in metadata"))),
    };
    let masks = match get("input_masks")? {
        "true" => true,
        "false" => false,
        other => return Err(data(format!("bad input_masks `{other}` in metadata"))),
    };
    let config = ModelConfig::new(num("dim")? as usize, hidden, activation, head).with_input_masks(masks);
    config.validate().map_err(|e| data(format!("metadata: {e}")))?;
    let kind: DataKind = get("data_kind")?.parse().map_err(data)?;
    let has_stats = match get("stats")? {
        "embedded" => true,
        "none" => false,
        other => return Err(data(format!("bad stats field `{other}` in metadata"))),
    };
    Ok((config, kind, num("seed")?, has_stats, notes))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> CliResult<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| data("model file is truncated"))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u8(&mut self) -> CliResult<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> CliResult<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> CliResult<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    fn u64(&mut self) -> CliResult<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use oanade::numerics::Rng;

    fn sample(stats: bool) -> ModelFile {
        let cfg = ModelConfig::mog(3, &[4, 2], 2);
        let params = Parameters::init(&cfg, &mut Rng::new(1)).unwrap();
        let stats = stats.then(|| Stats {
            mean: Array1::from(vec![0.5, -1.0, 2.0]),
            std: Array1::from(vec![1.0, 0.25, 3.0]),
        });
        ModelFile::new(params, DataKind::Real, stats, 42).note("source", "unit\ntest")
    }

    #[test]
    fn round_trip_is_byte_identical() {
        for stats in [false, true] {
            let m = sample(stats);
            let bytes = m.to_bytes();
            let back = ModelFile::from_bytes(&bytes).unwrap();
            assert_eq!(back, m);
            assert_eq!(back.to_bytes(), bytes);
        }
    }

    #[test]
    fn header_layout() {
        let bytes = sample(false).to_bytes();
        assert_eq!(&bytes[..8], b"OANADE01");
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 1);
    }

    #[test]
    fn unknown_version_is_rejected() {
        let mut bytes = sample(false).to_bytes();
        bytes[8] = 9;
        let err = ModelFile::from_bytes(&bytes).unwrap_err();
        assert!(err.to_string().contains("version 9"), "{err}");
    }

    #[test]
    fn truncation_and_trailing_bytes_are_rejected() {
        let bytes = sample(true).to_bytes();
        assert!(ModelFile::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut longer = bytes.clone();
        longer.push(0);
        assert!(ModelFile::from_bytes(&longer).is_err());
    }

    #[test]
    fn overlapping_offsets_are_rejected() {
        let m = sample(false);
        let mut bytes = m.to_bytes();
        // The second directory entry's offset sits just after its name and shape.
        let meta_len = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
        let mut pos = 16 + meta_len + 4;
        for k in 0..2 {
            let len = u16::from_le_bytes(bytes[pos..pos + 2].try_into().unwrap()) as usize;
            pos += 2 + len;
            let ndim = bytes[pos] as usize;
            pos += 1 + 8 * ndim;
            if k == 1 {
                bytes[pos..pos + 8].copy_from_slice(&8u64.to_le_bytes());
            }
            pos += 8;
        }
        let err = ModelFile::from_bytes(&bytes).unwrap_err();
        assert!(err.to_string().contains("overlap"), "{err}");
    }
}
