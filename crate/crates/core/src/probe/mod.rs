//! Forward passes of a convolutional stem (conv -> batch norm -> ReLU ->
//! max pool) and the activation maps derived from them.

mod bundle;
mod end_stopping;
mod maps;
mod ops;
mod stem;
mod tensor;

pub use bundle::{
    load_weight_bundle, read_weight_bundle, write_weight_bundle, BatchNorm, BundleManifest, TensorEntry,
    WeightBundle,
};
pub use end_stopping::end_stopping_score;
pub use maps::{average_activation_map, min_max_normalize, montage, per_filter_maps, MapStats};
pub use ops::{batch_norm, conv2d, max_pool, relu, BN_EPS};
pub use stem::{grayscale_input, InputNorm, Stage, StemOutputs};
pub use tensor::Tensor;
