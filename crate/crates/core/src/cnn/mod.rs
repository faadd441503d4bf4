//! 1D-CNN engine: tensors, layers, Adam, the five presets, training and
//! the `IHCK` checkpoint format.

pub mod adam;
pub mod arch;
pub mod checkpoint;
pub(crate) mod linalg;
pub mod network;
pub mod ops;
pub mod tensor;
pub mod train;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use arch::{build_architecture, ArchSpec, ARCH_NAMES};
pub use checkpoint::{Checkpoint, StoredTensor, IHCK_MAGIC, IHCK_VERSION};
pub use network::{Layer, Network};
pub use ops::Mode;
pub use tensor::Tensor;
pub use train::{
    evaluate_model, predict_network, repeat_seed, train_model, train_network, EpochRecord, Evaluation, TrainConfig,
    TrainOutcome,
};
