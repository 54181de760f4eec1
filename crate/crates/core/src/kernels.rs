//! Framework-free reference kernels: ECA kernel sizing and channel weights,
//! three-input normalized-weight fusion with SiLU and skip concatenation,
//! and focal loss.
//!
//! Feature maps are `(channels, height, width)` arrays.

use ndarray::{concatenate, Array1, Array3, Array4, ArrayView3, Axis};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EcaParams {
    pub gamma: f64,
    pub b: f64,
}

impl Default for EcaParams {
    fn default() -> Self {
        Self { gamma: 1.5, b: 1.0 }
    }
}

/// Nearest odd integer to `|log2(C)/γ + b/γ|`; ties go to the larger odd.
pub fn eca_kernel_size(channels: usize, p: &EcaParams) -> Result<usize> {
    if channels == 0 {
        return Err(Error::DomainError("channel count must be at least 1".into()));
    }
    if !(p.gamma > 0.0 && p.gamma.is_finite() && p.b.is_finite()) {
        return Err(Error::DomainError(format!("invalid ECA params {p:?}")));
    }
    let value = ((channels as f64).log2() / p.gamma + p.b / p.gamma).abs();
    Ok(nearest_odd(value))
}

fn nearest_odd(value: f64) -> usize {
    // Odd numbers are 2j + 1; round (value - 1) / 2 half-up.
    let j = ((value - 1.0) / 2.0 + 0.5).floor();
    (2.0 * j.max(0.0) + 1.0) as usize
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn silu(x: f64) -> f64 {
    x * sigmoid(x)
}

/// Sigmoid of the circular 1-D cross-correlation of the pooled channel
/// descriptor with a kernel shared by all channels.
pub fn eca_channel_weights(descriptor: &[f64], kernel: &[f64]) -> Result<Vec<f64>> {
    let c = descriptor.len();
    let k = kernel.len();
    if k.is_multiple_of(2) || k > c {
        return Err(Error::ShapeMismatch(format!(
            "kernel length {k} must be odd and at most the channel count {c}"
        )));
    }
    let half = (k / 2) as isize;
    Ok((0..c as isize)
        .map(|i| {
            let z: f64 = kernel
                .iter()
                .enumerate()
                .map(|(j, w)| w * descriptor[(i + j as isize - half).rem_euclid(c as isize) as usize])
                .sum();
            sigmoid(z)
        })
        .collect())
}

/// Global average pooling to one descriptor per channel.
pub fn global_average_pool(x: ArrayView3<'_, f64>) -> Array1<f64> {
    x.map_axis(Axis(1), |column| column.mean().unwrap_or(0.0))
        .map_axis(Axis(1), |row| row.mean().unwrap_or(0.0))
}

#[derive(Debug, Clone)]
pub struct FusionInputs {
    pub weights: [f64; 3],
    /// `x[0]` is the shallow input that is concatenated back in.
    pub features: [Array3<f64>; 3],
    pub epsilon: f64,
    /// `(out_channels, 2·channels, kh, kw)`; identity when absent.
    pub conv_kernel: Option<Array4<f64>>,
}

pub const FUSION_EPSILON: f64 = 1e-4;

impl FusionInputs {
    pub fn new(weights: [f64; 3], features: [Array3<f64>; 3]) -> Self {
        Self {
            weights,
            features,
            epsilon: FUSION_EPSILON,
            conv_kernel: None,
        }
    }
}

/// `w' = w / (Σw + ε)`.
pub fn normalize_fusion_weights(w: &[f64; 3], epsilon: f64) -> Result<[f64; 3]> {
    if w.iter().any(|&wi| !(wi >= 0.0 && wi.is_finite())) {
        return Err(Error::DomainError(format!("fusion weights must be non-negative, got {w:?}")));
    }
    let denom = w.iter().sum::<f64>() + epsilon;
    Ok(w.map(|wi| wi / denom))
}

/// Normalized weighted sum, SiLU, skip concatenation with `x[0]`, then the
/// output convolution.
pub fn bifpn_fuse(inputs: &FusionInputs) -> Result<Array3<f64>> {
    let [x0, x1, x2] = &inputs.features;
    if x0.shape() != x1.shape() || x0.shape() != x2.shape() {
        return Err(Error::ShapeMismatch(format!(
            "fusion inputs {:?}, {:?}, {:?}",
            x0.shape(),
            x1.shape(),
            x2.shape()
        )));
    }
    let w = normalize_fusion_weights(&inputs.weights, inputs.epsilon)?;
    let y = x0 * w[0] + x1 * w[1] + x2 * w[2];
    let activated = y.mapv(silu);
    let z = concatenate(Axis(0), &[x0.view(), activated.view()])
        .map_err(|e| Error::ShapeMismatch(e.to_string()))?;
    match &inputs.conv_kernel {
        None => Ok(z),
        Some(kernel) => conv2d_same(&z, kernel),
    }
}

/// Stride-1, zero-padded "same" 2-D cross-correlation.
pub fn conv2d_same(x: &Array3<f64>, kernel: &Array4<f64>) -> Result<Array3<f64>> {
    let (c_in, h, w) = x.dim();
    let (c_out, k_in, kh, kw) = kernel.dim();
    if k_in != c_in || kh % 2 == 0 || kw % 2 == 0 {
        return Err(Error::ShapeMismatch(format!(
            "kernel {:?} incompatible with input {:?}",
            kernel.shape(),
            x.shape()
        )));
    }
    let (ph, pw) = ((kh / 2) as isize, (kw / 2) as isize);
    let mut out = Array3::zeros((c_out, h, w));
    for ((o, r, c), value) in out.indexed_iter_mut() {
        let mut acc = 0.0;
        for i in 0..c_in {
            for dr in 0..kh {
                let rr = r as isize + dr as isize - ph;
                if rr < 0 || rr >= h as isize {
                    continue;
                }
                for dc in 0..kw {
                    let cc = c as isize + dc as isize - pw;
                    if cc < 0 || cc >= w as isize {
                        continue;
                    }
                    acc += kernel[(o, i, dr, dc)] * x[(i, rr as usize, cc as usize)];
                }
            }
        }
        *value = acc;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FocalLossParams {
    pub alpha_t: f64,
    pub gamma: f64,
}

impl Default for FocalLossParams {
    fn default() -> Self {
        Self {
            alpha_t: 0.25,
            gamma: 2.0,
        }
    }
}

impl FocalLossParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_t > 0.0 && self.alpha_t <= 1.0) || !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::DomainError(format!("invalid focal loss params {self:?}")));
        }
        Ok(())
    }
}

fn check_probability(p_t: f64) -> Result<()> {
    if p_t > 0.0 && p_t <= 1.0 {
        Ok(())
    } else {
        Err(Error::DomainError(format!("p_t must lie in (0, 1], got {p_t}")))
    }
}

/// `−α_t (1 − p_t)^γ ln p_t`.
pub fn focal_loss(p_t: f64, p: &FocalLossParams) -> Result<f64> {
    p.validate()?;
    check_probability(p_t)?;
    let loss = -p.alpha_t * (1.0 - p_t).powf(p.gamma) * p_t.ln();
    // ln(1) is +0, so the product can come out as -0.
    Ok(loss.max(0.0))
}

/// Derivative of [`focal_loss`] with respect to `p_t`.
pub fn focal_loss_grad(p_t: f64, p: &FocalLossParams) -> Result<f64> {
    p.validate()?;
    check_probability(p_t)?;
    let one_minus = 1.0 - p_t;
    let focus_term = if p.gamma == 0.0 {
        0.0
    } else {
        p.gamma * one_minus.powf(p.gamma - 1.0) * p_t.ln()
    };
    Ok(p.alpha_t * (focus_term - one_minus.powf(p.gamma) / p_t))
}
