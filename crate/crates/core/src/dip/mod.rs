//! Minimal reverse-mode engine and untrained convolutional generator.

mod adam;
mod checkpoint;
mod layers;
mod loss;
mod net;
mod tensor;

pub use adam::{AdamParams, AdamState};
pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, TENSOR_MAGIC};
pub use layers::{ChannelNorm, Conv3x3, Head, Layer};
pub use loss::{complex_loss_head, complex_to_tensor, ffpr_loss_head, tensor_to_complex, HeadOutput};
pub use net::{GeneratorConfig, GeneratorNet};
pub use tensor::Tensor;
