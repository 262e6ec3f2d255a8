//! RRDB deblurring network: layers, hand-derived backpropagation, Adam,
//! training loop, checkpoints and whole-image inference.

mod adam;
mod checkpoint;
mod infer;
mod net;
mod ops;
mod params;
mod real;
mod tensor;
mod train;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use checkpoint::{checkpoint_bytes, load_checkpoint, params_from_bytes, save_checkpoint, MAGIC, VERSION};
pub use infer::{infer_image, InferOptions, InferOutput};
pub use net::{backward, forward_train, loss_and_gradients, net_forward, rdb_forward, rrdb_forward, ForwardCache};
pub use ops::{conv2d, leaky_relu, maxpool2x2, mse_loss, mse_loss_grad, upsample_nearest2};
pub use params::{param_specs, NetConfig, NetParams, ParamSpec};
pub use real::Real;
pub use tensor::Tensor4;
pub use train::{evaluate, load_pairs, train, train_pairs, EpochReport, TrainConfig, TrainingPair, TrainingReport};
