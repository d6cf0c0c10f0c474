use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::GrayImage;

use super::ops::{batch_norm, conv2d, max_pool, relu, BN_EPS};
use super::{Tensor, WeightBundle};

pub const CONV_STRIDE: usize = 2;
pub const POOL_KERNEL: usize = 3;
pub const POOL_STRIDE: usize = 2;
pub const POOL_PADDING: usize = 1;

const IMAGENET_MEAN: [f32; 3] = [0.485, 0.456, 0.406];
const IMAGENET_STD: [f32; 3] = [0.229, 0.224, 0.225];

/// Per-channel input standardization applied before the stem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum InputNorm {
    None,
    #[default]
    Imagenet,
}

impl FromStr for InputNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(InputNorm::None),
            "imagenet" => Ok(InputNorm::Imagenet),
            other => Err(Error::param(format!("unknown input normalization `{other}`"))),
        }
    }
}

/// Replicates a grayscale stimulus into `channels` planes and standardizes.
pub fn grayscale_input(image: &GrayImage, channels: usize, norm: InputNorm) -> Result<Tensor> {
    let (w, h) = image.dims();
    let mut data = Vec::with_capacity(channels * w * h);
    for c in 0..channels {
        let (mean, std) = match norm {
            InputNorm::None => (0.0, 1.0),
            InputNorm::Imagenet if channels == 3 => (IMAGENET_MEAN[c], IMAGENET_STD[c]),
            InputNorm::Imagenet => {
                return Err(Error::param("imagenet normalization needs a 3-channel stem"));
            }
        };
        data.extend(image.data().iter().map(|&v| (v - mean) / std));
    }
    Tensor::new(vec![channels, h, w], data)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Conv,
    Bn,
    Relu,
    Pool,
}

impl Stage {
    pub const ALL: [Stage; 4] = [Stage::Conv, Stage::Bn, Stage::Relu, Stage::Pool];
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Conv => "conv",
            Stage::Bn => "bn",
            Stage::Relu => "relu",
            Stage::Pool => "pool",
        })
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.to_string() == s)
            .ok_or_else(|| Error::param(format!("unknown stem stage `{s}`")))
    }
}

/// Feature maps after each stem stage.
#[derive(Debug, Clone)]
pub struct StemOutputs {
    pub conv: Tensor,
    pub bn: Tensor,
    pub relu: Tensor,
    pub pool: Tensor,
    pub bn_eps: f32,
}

impl StemOutputs {
    /// Runs conv (stride 2, same-style padding `k / 2`) -> batch norm ->
    /// ReLU -> 3x3/2 max pool with padding 1.
    pub fn run(bundle: &WeightBundle, input: &Tensor) -> Result<Self> {
        bundle.validate()?;
        let padding = bundle.conv_weights.shape()[2] / 2;
        let conv = conv2d(input, &bundle.conv_weights, CONV_STRIDE, padding)?;
        let bn = batch_norm(&conv, &bundle.bn, BN_EPS)?;
        let relu = relu(&bn);
        let pool = max_pool(&relu, POOL_KERNEL, POOL_STRIDE, POOL_PADDING)?;
        Ok(Self {
            conv,
            bn,
            relu,
            pool,
            bn_eps: BN_EPS,
        })
    }

    pub fn stage(&self, stage: Stage) -> &Tensor {
        match stage {
            Stage::Conv => &self.conv,
            Stage::Bn => &self.bn,
            Stage::Relu => &self.relu,
            Stage::Pool => &self.pool,
        }
    }
}
