//! The five reference architectures and the builder that turns an
//! [`ArchSpec`] into a [`Network`].
//!
//! Layer order: every conv is followed by ReLU; after the conv stack comes
//! one max-pool and one dropout, then flatten; each hidden dense layer is
//! Dense, ReLU, optional BatchNorm, Dropout; the output Dense feeds softmax.

use std::fmt::Write as _;
use std::path::Path;

use super::network::{BatchNorm, Conv1d, Dense, Layer, Network};
use crate::error::{Error, Result};
use crate::ingest::NUM_CLASSES;

#[derive(Debug, Clone, PartialEq)]
pub struct ArchSpec {
    pub name: String,
    pub conv_filters: Vec<usize>,
    pub conv_kernels: Vec<usize>,
    pub pool_size: usize,
    pub conv_dropout: f64,
    /// Widths of every dense layer, the last being the class count.
    pub dense_units: Vec<usize>,
    /// One rate per hidden dense layer.
    pub dense_dropouts: Vec<f64>,
    pub batch_norm: bool,
}

pub const ARCH_NAMES: [&str; 5] = ["arch1", "arch2", "arch3", "arch4", "arch5"];

impl ArchSpec {
    pub fn preset(name: &str) -> Result<Self> {
        let (filters, kernels, dense, bn): (&[usize], &[usize], &[usize], bool) = match name {
            "arch1" => (&[32, 16], &[7, 3], &[256, 64, 5], false),
            "arch2" => (&[32, 16], &[7, 3], &[256, 64, 5], true),
            "arch3" => (&[32], &[3], &[256, 64, 5], true),
            "arch4" => (&[16], &[3], &[256, 5], true),
            "arch5" => (&[8], &[3], &[64, 5], true),
            other => {
                return Err(Error::Config(format!(
                    "unknown architecture {other:?}; valid names: {}",
                    ARCH_NAMES.join(", ")
                )))
            }
        };
        Ok(ArchSpec {
            name: name.to_string(),
            conv_filters: filters.to_vec(),
            conv_kernels: kernels.to_vec(),
            pool_size: 2,
            conv_dropout: 0.5,
            dense_units: dense.to_vec(),
            dense_dropouts: vec![0.5; dense.len() - 1],
            batch_norm: bn,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(format!("{}: {m}", self.name)));
        if self.conv_filters.is_empty() {
            return bad("at least one conv layer is required".into());
        }
        if self.conv_filters.len() != self.conv_kernels.len() {
            return bad("conv_filters and conv_kernels differ in length".into());
        }
        if self.conv_filters.contains(&0) || self.conv_kernels.contains(&0) {
            return bad("conv filters and kernels must be positive".into());
        }
        if self.pool_size == 0 {
            return bad("pool_size must be positive".into());
        }
        if self.dense_units.last() != Some(&NUM_CLASSES) {
            return bad(format!("last dense width must be {NUM_CLASSES}"));
        }
        if self.dense_units.contains(&0) {
            return bad("dense widths must be positive".into());
        }
        if self.dense_dropouts.len() + 1 != self.dense_units.len() {
            return bad("need one dropout rate per hidden dense layer".into());
        }
        if self
            .dense_dropouts
            .iter()
            .chain([&self.conv_dropout])
            .any(|r| !(0.0..1.0).contains(r))
        {
            return bad("dropout rates must be in [0, 1)".into());
        }
        Ok(())
    }

    /// Smallest input length the conv/pool stack accepts.
    pub fn min_input_features(&self) -> usize {
        let shrink: usize = self.conv_kernels.iter().map(|k| k - 1).sum();
        shrink + self.pool_size
    }

    pub fn to_text(&self) -> String {
        let list = |v: &[usize]| v.iter().map(ToString::to_string).collect::<Vec<_>>().join(",");
        let rates = |v: &[f64]| v.iter().map(|r| format!("{r:?}")).collect::<Vec<_>>().join(",");
        let mut s = String::new();
        let _ = writeln!(s, "name = {}", self.name);
        let _ = writeln!(s, "conv_filters = {}", list(&self.conv_filters));
        let _ = writeln!(s, "conv_kernels = {}", list(&self.conv_kernels));
        let _ = writeln!(s, "pool_size = {}", self.pool_size);
        let _ = writeln!(s, "conv_dropout = {:?}", self.conv_dropout);
        let _ = writeln!(s, "dense_units = {}", list(&self.dense_units));
        let _ = writeln!(s, "dense_dropouts = {}", rates(&self.dense_dropouts));
        let _ = writeln!(s, "batch_norm = {}", self.batch_norm);
        s
    }

    /// Parses the `key = value` form written by [`ArchSpec::to_text`].
    /// Missing keys fall back to the `arch1` values except `name`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut spec = ArchSpec::preset("arch1")?;
        spec.name = "custom".into();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |m: String| Error::Config(format!("arch spec line {}: {m}", n + 1));
            let (k, v) = line.split_once('=').ok_or_else(|| err(format!("expected key = value: {line:?}")))?;
            let v = v.trim();
            let usizes = || -> Result<Vec<usize>> {
                v.split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| s.trim().parse().map_err(|_| err(format!("bad integer {s:?}"))))
                    .collect()
            };
            let floats = || -> Result<Vec<f64>> {
                v.split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| s.trim().parse().map_err(|_| err(format!("bad number {s:?}"))))
                    .collect()
            };
            match k.trim() {
                "name" => spec.name = v.to_string(),
                "conv_filters" => spec.conv_filters = usizes()?,
                "conv_kernels" => spec.conv_kernels = usizes()?,
                "pool_size" => spec.pool_size = v.parse().map_err(|_| err(format!("bad pool_size {v:?}")))?,
                "conv_dropout" => spec.conv_dropout = v.parse().map_err(|_| err(format!("bad rate {v:?}")))?,
                "dense_units" => spec.dense_units = usizes()?,
                "dense_dropouts" => spec.dense_dropouts = floats()?,
                "batch_norm" => spec.batch_norm = v.parse().map_err(|_| err(format!("bad bool {v:?}")))?,
                other => return Err(err(format!("unknown key {other:?}"))),
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}

/// Builds the layer pipeline with zeroed parameters; call
/// [`Network::initialize`] or load a checkpoint to fill them.
pub fn build_architecture(spec: &ArchSpec, input_features: usize) -> Result<Network> {
    spec.validate()?;
    if input_features < spec.min_input_features() {
        return Err(Error::Config(format!(
            "{}: {input_features} input features, need at least {}",
            spec.name,
            spec.min_input_features()
        )));
    }
    let mut layers = Vec::new();
    let mut len = input_features;
    let mut channels = 1;
    for (&filters, &kernel) in spec.conv_filters.iter().zip(&spec.conv_kernels) {
        layers.push(Layer::Conv1d(Conv1d::new(kernel, channels, filters)));
        layers.push(Layer::relu());
        len = len - kernel + 1;
        channels = filters;
    }
    layers.push(Layer::max_pool(spec.pool_size));
    len /= spec.pool_size;
    layers.push(Layer::dropout(spec.conv_dropout));
    layers.push(Layer::flatten());
    let mut width = len * channels;
    let hidden = spec.dense_units.len() - 1;
    for (i, &units) in spec.dense_units.iter().enumerate() {
        layers.push(Layer::Dense(Dense::new(width, units)));
        width = units;
        if i < hidden {
            layers.push(Layer::relu());
            if spec.batch_norm {
                layers.push(Layer::BatchNorm(BatchNorm::new(units)));
            }
            layers.push(Layer::dropout(spec.dense_dropouts[i]));
        }
    }
    Ok(Network {
        layers,
        input_features,
        num_classes: NUM_CLASSES,
    })
}
