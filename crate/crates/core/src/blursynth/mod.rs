//! Forward blur model `blur = k * sharp + n` and synthetic training data.

mod convolve;
mod dataset;
mod kernel;
mod noise;

pub use convolve::{convolve, convolve_raw, convolve_with, ConvMethod};
pub use dataset::{synthesize_dataset, DatasetManifest, KernelEntry, PairEntry, SynthOptions, MANIFEST_FILE};
pub use kernel::{gaussian_kernel, gaussian_kernel_bank, read_kernel, write_kernel, Kernel};
pub use noise::{add_noise, derive_seed};
