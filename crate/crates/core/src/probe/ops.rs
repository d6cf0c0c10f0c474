use rayon::prelude::*;

use crate::error::{Error, Result};

use super::bundle::BatchNorm;
use super::Tensor;

/// Batch-norm epsilon used by the stem.
pub const BN_EPS: f32 = 1e-5;

fn out_size(input: usize, kernel: usize, stride: usize, padding: usize) -> Result<usize> {
    if stride == 0 {
        return Err(Error::param("stride must be positive"));
    }
    let padded = input + 2 * padding;
    if padded < kernel {
        return Err(Error::Shape(format!(
            "kernel {kernel} larger than padded input {padded}"
        )));
    }
    Ok((padded - kernel) / stride + 1)
}

/// Cross-correlation of a `C x H x W` input with `O x C x KH x KW` weights.
///
/// Output channels are computed in parallel; each output value sums over
/// `(c, ky, kx)` in that fixed order in f64 and is rounded once, so results
/// do not depend on the thread schedule.
pub fn conv2d(input: &Tensor, weights: &Tensor, stride: usize, padding: usize) -> Result<Tensor> {
    let (c, h, w) = input.chw()?;
    let (o, wc, kh, kw) = match *weights.shape() {
        [o, wc, kh, kw] => (o, wc, kh, kw),
        _ => {
            return Err(Error::Shape(format!(
                "weights must be rank 4, got {:?}",
                weights.shape()
            )))
        }
    };
    if wc != c {
        return Err(Error::Shape(format!(
            "input has {c} channels but weights expect {wc}"
        )));
    }
    let oh = out_size(h, kh, stride, padding)?;
    let ow = out_size(w, kw, stride, padding)?;
    let (pad, stride) = (padding as isize, stride as isize);
    let mut out = vec![0.0f32; o * oh * ow];
    out.par_chunks_mut(oh * ow).enumerate().for_each(|(oc, plane)| {
        for oy in 0..oh {
            for ox in 0..ow {
                let y0 = oy as isize * stride - pad;
                let x0 = ox as isize * stride - pad;
                let mut acc = 0.0f64;
                for ic in 0..c {
                    let src = input.channel(ic);
                    for ky in 0..kh {
                        let iy = y0 + ky as isize;
                        if iy < 0 || iy >= h as isize {
                            continue;
                        }
                        let row = &src[iy as usize * w..(iy as usize + 1) * w];
                        for kx in 0..kw {
                            let ix = x0 + kx as isize;
                            if ix < 0 || ix >= w as isize {
                                continue;
                            }
                            acc += f64::from(row[ix as usize]) * f64::from(weights.at4(oc, ic, ky, kx));
                        }
                    }
                }
                plane[oy * ow + ox] = acc as f32;
            }
        }
    });
    Ok(Tensor::from_parts_unchecked(vec![o, oh, ow], out))
}

/// Inference-form batch norm, `gamma * (x - mean) / sqrt(var + eps) + beta`
/// per channel.
pub fn batch_norm(input: &Tensor, bn: &BatchNorm, eps: f32) -> Result<Tensor> {
    let (c, h, w) = input.chw()?;
    bn.validate()?;
    if bn.channels() != c {
        return Err(Error::Shape(format!(
            "input has {c} channels, batch norm has {}",
            bn.channels()
        )));
    }
    let plane = h * w;
    let mut out = Vec::with_capacity(input.len());
    for ch in 0..c {
        let denom = (f64::from(bn.var[ch]) + f64::from(eps)).sqrt();
        if denom == 0.0 {
            return Err(Error::param(format!(
                "channel {ch}: zero variance with eps {eps}"
            )));
        }
        let scale = f64::from(bn.gamma[ch]) / denom;
        let (mean, beta) = (f64::from(bn.mean[ch]), f64::from(bn.beta[ch]));
        out.extend(
            input.data()[ch * plane..(ch + 1) * plane]
                .iter()
                .map(|&x| (scale * (f64::from(x) - mean) + beta) as f32),
        );
    }
    Ok(Tensor::from_parts_unchecked(input.shape().to_vec(), out))
}

pub fn relu(input: &Tensor) -> Tensor {
    Tensor::from_parts_unchecked(
        input.shape().to_vec(),
        input.data().iter().map(|&v| v.max(0.0)).collect(),
    )
}

/// Window maximum with padded cells treated as `-inf`. Requires
/// `2 * padding <= kernel` so every window holds at least one real cell.
pub fn max_pool(input: &Tensor, kernel: usize, stride: usize, padding: usize) -> Result<Tensor> {
    let (c, h, w) = input.chw()?;
    if kernel == 0 || 2 * padding > kernel {
        return Err(Error::param(format!(
            "max pool needs kernel >= 1 and padding <= kernel / 2 (kernel {kernel}, padding {padding})"
        )));
    }
    let oh = out_size(h, kernel, stride, padding)?;
    let ow = out_size(w, kernel, stride, padding)?;
    let mut out = Vec::with_capacity(c * oh * ow);
    for ch in 0..c {
        let src = input.channel(ch);
        for oy in 0..oh {
            let y0 = (oy * stride) as isize - padding as isize;
            let ys = y0.max(0) as usize..((y0 + kernel as isize).min(h as isize)) as usize;
            for ox in 0..ow {
                let x0 = (ox * stride) as isize - padding as isize;
                let xs = x0.max(0) as usize..((x0 + kernel as isize).min(w as isize)) as usize;
                let mut m = f32::NEG_INFINITY;
                for y in ys.clone() {
                    for x in xs.clone() {
                        m = m.max(src[y * w + x]);
                    }
                }
                out.push(m);
            }
        }
    }
    Ok(Tensor::from_parts_unchecked(vec![c, oh, ow], out))
}
