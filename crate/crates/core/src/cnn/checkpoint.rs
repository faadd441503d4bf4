//! `IHCK` checkpoint container.
//!
//! ```text
//! "IHCK"                      4 bytes magic
//! version                     u32 LE (= 1)
//! header_len                  u32 LE
//! header                      UTF-8 `key = value` lines (architecture,
//!                             feature counts, layer list, metric snapshot)
//! feature mask                ceil(total_features / 8) bytes, bit i of byte
//!                             i / 8 (least significant first) = column kept
//! mean, std                   input_features x f32 LE each, over kept columns
//! tensors (tensor_count)      u32 LE rank, rank x u32 LE dims,
//!                             product(dims) x f32 LE row-major
//! ```
//!
//! Tensors follow layer order: conv and dense layers store weight then
//! bias; batch-norm stores gamma, beta, running mean, running variance.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::arch::{build_architecture, ArchSpec};
use super::network::Network;
use super::tensor::Tensor;
use crate::drwcc::FeatureMask;
use crate::error::{Error, Result};
use crate::integrate::StandardizationStats;
use crate::ingest::NUM_CLASSES;
use crate::matrix::Matrix;

pub const IHCK_MAGIC: &[u8; 4] = b"IHCK";
pub const IHCK_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct StoredTensor {
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

/// A trained model plus the preprocessing it expects.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub arch: ArchSpec,
    pub total_features: usize,
    pub keep: Vec<bool>,
    pub mask_threshold: f64,
    pub mean: Vec<f32>,
    pub std: Vec<f32>,
    pub layers: Vec<String>,
    pub tensors: Vec<StoredTensor>,
    pub metrics: BTreeMap<String, String>,
}

impl Checkpoint {
    /// Snapshot a network. `stats` cover the kept columns of `mask`.
    pub fn from_network(
        arch: &ArchSpec,
        net: &Network,
        mask: &FeatureMask,
        stats: &StandardizationStats,
    ) -> Result<Self> {
        if mask.kept_count() != net.input_features || stats.cols() != net.input_features {
            return Err(Error::Shape(format!(
                "network takes {} features, mask keeps {}, stats cover {}",
                net.input_features,
                mask.kept_count(),
                stats.cols()
            )));
        }
        Ok(Checkpoint {
            arch: arch.clone(),
            total_features: mask.len(),
            keep: mask.keep().to_vec(),
            mask_threshold: mask.threshold(),
            mean: stats.mean.iter().map(|&v| v as f32).collect(),
            std: stats.std.iter().map(|&v| v as f32).collect(),
            layers: net.describe(),
            tensors: net
                .state_tensors()
                .into_iter()
                .map(|t| StoredTensor {
                    shape: t.shape().to_vec(),
                    data: t.data().iter().map(|&v| v as f32).collect(),
                })
                .collect(),
            metrics: BTreeMap::new(),
        })
    }

    pub fn input_features(&self) -> usize {
        self.mean.len()
    }

    pub fn mask(&self) -> Result<FeatureMask> {
        FeatureMask::new(self.keep.clone(), self.mask_threshold)
    }

    /// Replaces the preprocessing; `stats` cover the columns `mask` keeps.
    pub fn with_preprocessing(mut self, mask: &FeatureMask, stats: &StandardizationStats) -> Result<Self> {
        if mask.kept_count() != self.input_features() || stats.cols() != self.input_features() {
            return Err(Error::Shape(format!(
                "model takes {} features; mask keeps {}, stats cover {}",
                self.input_features(),
                mask.kept_count(),
                stats.cols()
            )));
        }
        self.total_features = mask.len();
        self.keep = mask.keep().to_vec();
        self.mask_threshold = mask.threshold();
        self.mean = stats.mean.iter().map(|&v| v as f32).collect();
        self.std = stats.std.iter().map(|&v| v as f32).collect();
        Ok(self)
    }

    pub fn standardization(&self) -> StandardizationStats {
        StandardizationStats {
            mean: self.mean.iter().map(|&v| v as f64).collect(),
            std: self.std.iter().map(|&v| v as f64).collect(),
        }
    }

    /// Masks and standardizes raw `total_features`-column rows.
    pub fn preprocess(&self, raw: &Matrix<f32>) -> Result<Matrix<f32>> {
        if raw.cols() != self.total_features {
            return Err(Error::Shape(format!(
                "model expects {} raw columns, got {}",
                self.total_features,
                raw.cols()
            )));
        }
        let masked = crate::drwcc::apply_feature_mask(raw, &self.mask()?)?;
        self.standardization().apply(&masked)
    }

    /// Rebuilds the network with the stored weights.
    pub fn to_network(&self) -> Result<Network> {
        let mut net = build_architecture(&self.arch, self.input_features())?;
        let slots = net.state_tensors_mut();
        if slots.len() != self.tensors.len() {
            return Err(Error::Corrupt(format!(
                "architecture has {} tensors, checkpoint {}",
                slots.len(),
                self.tensors.len()
            )));
        }
        for (slot, stored) in slots.into_iter().zip(&self.tensors) {
            if slot.shape() != stored.shape.as_slice() {
                return Err(Error::Corrupt(format!(
                    "tensor shape {:?} does not match architecture {:?}",
                    stored.shape,
                    slot.shape()
                )));
            }
            for (d, &s) in slot.data_mut().iter_mut().zip(&stored.data) {
                *d = s as f64;
            }
        }
        Ok(net)
    }

    fn header(&self) -> String {
        let mut h = String::new();
        for line in self.arch.to_text().lines() {
            let _ = writeln!(h, "arch.{line}");
        }
        let _ = writeln!(h, "total_features = {}", self.total_features);
        let _ = writeln!(h, "input_features = {}", self.input_features());
        let _ = writeln!(h, "num_classes = {NUM_CLASSES}");
        let _ = writeln!(h, "mask_threshold = {:?}", self.mask_threshold);
        let _ = writeln!(h, "layers = {}", self.layers.join(";"));
        let _ = writeln!(h, "tensor_count = {}", self.tensors.len());
        for (k, v) in &self.metrics {
            let _ = writeln!(h, "metric.{k} = {v}");
        }
        h
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let header = self.header();
        let mut out = Vec::new();
        out.extend_from_slice(IHCK_MAGIC);
        out.extend_from_slice(&IHCK_VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(header.as_bytes());
        let mut bits = vec![0u8; self.total_features.div_ceil(8)];
        for (i, &k) in self.keep.iter().enumerate() {
            if k {
                bits[i / 8] |= 1 << (i % 8);
            }
        }
        out.extend_from_slice(&bits);
        for v in self.mean.iter().chain(&self.std) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for t in &self.tensors {
            out.extend_from_slice(&(t.shape.len() as u32).to_le_bytes());
            for &d in &t.shape {
                out.extend_from_slice(&(d as u32).to_le_bytes());
            }
            for v in &t.data {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = ByteReader { buf: bytes, pos: 0 };
        if r.take(4)? != IHCK_MAGIC {
            return Err(Error::Format(format!(
                "bad magic {:?}, expected \"IHCK\"",
                &bytes[..4.min(bytes.len())]
            )));
        }
        let version = r.u32()?;
        if version > IHCK_VERSION || version == 0 {
            return Err(Error::Version { found: version, supported: IHCK_VERSION });
        }
        let header_len = r.u32()? as usize;
        let header = std::str::from_utf8(r.take(header_len)?)
            .map_err(|_| Error::Corrupt("header is not UTF-8".into()))?;

        let mut arch_text = String::new();
        let mut fields = BTreeMap::new();
        let mut metrics = BTreeMap::new();
        for line in header.lines() {
            let (k, v) = line
                .split_once(" = ")
                .ok_or_else(|| Error::Corrupt(format!("bad header line {line:?}")))?;
            if let Some(ak) = k.strip_prefix("arch.") {
                let _ = writeln!(arch_text, "{ak} = {v}");
            } else if let Some(mk) = k.strip_prefix("metric.") {
                metrics.insert(mk.to_string(), v.to_string());
            } else {
                fields.insert(k.to_string(), v.to_string());
            }
        }
        let field = |k: &str| -> Result<&String> {
            fields.get(k).ok_or_else(|| Error::Corrupt(format!("header lacks `{k}`")))
        };
        let num = |k: &str| -> Result<usize> {
            field(k)?.parse().map_err(|_| Error::Corrupt(format!("bad `{k}` in header")))
        };
        let arch = ArchSpec::parse(&arch_text).map_err(|e| Error::Corrupt(e.to_string()))?;
        let total_features = num("total_features")?;
        let input_features = num("input_features")?;
        let tensor_count = num("tensor_count")?;
        if num("num_classes")? != NUM_CLASSES {
            return Err(Error::Corrupt("num_classes must be 5".into()));
        }
        let mask_threshold: f64 = field("mask_threshold")?
            .parse()
            .map_err(|_| Error::Corrupt("bad mask_threshold".into()))?;
        let layers: Vec<String> = field("layers")?.split(';').map(String::from).collect();

        let bits = r.take(total_features.div_ceil(8))?;
        let keep: Vec<bool> = (0..total_features).map(|i| bits[i / 8] >> (i % 8) & 1 == 1).collect();
        if keep.iter().filter(|&&k| k).count() != input_features {
            return Err(Error::Corrupt("mask bit count disagrees with input_features".into()));
        }
        let mean = r.f32s(input_features)?;
        let std = r.f32s(input_features)?;
        let mut tensors = Vec::with_capacity(tensor_count);
        for _ in 0..tensor_count {
            let rank = r.u32()? as usize;
            let shape = (0..rank).map(|_| r.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
            let len = shape
                .iter()
                .try_fold(1usize, |a, &d| a.checked_mul(d))
                .ok_or_else(|| Error::Corrupt("tensor size overflows".into()))?;
            tensors.push(StoredTensor { shape, data: r.f32s(len)? });
        }
        if r.pos != bytes.len() {
            return Err(Error::Corrupt(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        let ckpt = Checkpoint {
            arch,
            total_features,
            keep,
            mask_threshold,
            mean,
            std,
            layers,
            tensors,
            metrics,
        };
        // shape contract against the architecture
        ckpt.to_network()?;
        Ok(ckpt)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

struct ByteReader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> ByteReader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.buf.len())
            .ok_or_else(|| Error::Corrupt(format!("truncated at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f32s(&mut self, n: usize) -> Result<Vec<f32>> {
        let bytes = self.take(n.checked_mul(4).ok_or_else(|| Error::Corrupt("length overflows".into()))?)?;
        Ok(bytes.chunks_exact(4).map(|b| f32::from_le_bytes(b.try_into().unwrap())).collect())
    }
}

/// Converts stored weights back into a tensor (test helper).
pub fn stored_to_tensor(t: &StoredTensor) -> Result<Tensor> {
    Tensor::new(t.shape.clone(), t.data.iter().map(|&v| v as f64).collect())
}
