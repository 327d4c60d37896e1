//! Oriented edge kernels for S1 and the weight-tensor reconstruction that
//! renders a learned feature back into pixel space.

use ndarray::{Array2, Array3};

use crate::error::{Error, Result};

pub const KERNEL_SIZE: usize = 5;

/// A zero-mean oriented bar. Orientation k covers k * 180/n degrees;
/// with four orientations that is 0, 45, 90, 135.
#[derive(Debug, Clone)]
pub struct OrientedKernel {
    pub orientation: usize,
    pub kernel: Array2<f64>,
}

pub fn oriented_kernels(n_orientations: usize) -> Vec<OrientedKernel> {
    let sigma = 1.0;
    let half = (KERNEL_SIZE / 2) as f64;
    (0..n_orientations)
        .map(|o| {
            let theta = o as f64 * std::f64::consts::PI / n_orientations as f64;
            let (sin, cos) = theta.sin_cos();
            let mut kernel = Array2::zeros((KERNEL_SIZE, KERNEL_SIZE));
            for r in 0..KERNEL_SIZE {
                for c in 0..KERNEL_SIZE {
                    let dy = r as f64 - half;
                    let dx = c as f64 - half;
                    // perpendicular distance to the bar through the center
                    let d = dx * sin - dy * cos;
                    kernel[[r, c]] = (-d * d / (2.0 * sigma * sigma)).exp();
                }
            }
            let mean = kernel.sum() / (KERNEL_SIZE * KERNEL_SIZE) as f64;
            kernel.mapv_inplace(|v| v - mean);
            OrientedKernel { orientation: o, kernel }
        })
        .collect()
}

/// Valid-mode 2D convolution (no padding).
pub fn convolve_valid(img: &Array2<f64>, kernel: &Array2<f64>) -> Result<Array2<f64>> {
    let (rows, cols) = img.dim();
    let (krows, kcols) = kernel.dim();
    if rows < krows || cols < kcols {
        return Err(Error::Dimension(format!(
            "image {rows}x{cols} smaller than kernel {krows}x{kcols}"
        )));
    }
    let mut out = Array2::zeros((rows - krows + 1, cols - kcols + 1));
    for r in 0..out.nrows() {
        for c in 0..out.ncols() {
            let mut acc = 0.0;
            for kr in 0..krows {
                for kc in 0..kcols {
                    acc += img[[r + kr, c + kc]] * kernel[[kr, kc]];
                }
            }
            out[[r, c]] = acc;
        }
    }
    Ok(out)
}

/// Render a feature's weight tensor as pixels: each orientation plane is
/// spread through its bar kernel (full convolution), planes are summed, and
/// the result is linearly mapped to [0, 255]. An all-equal result maps to 0.
pub fn reconstruct_feature(tensor: &Array3<f64>, kernels: &[OrientedKernel]) -> Array2<u8> {
    let (rf_rows, rf_cols, n_orient) = tensor.dim();
    assert_eq!(n_orient, kernels.len(), "tensor orientation planes must match kernels");
    let out_rows = rf_rows + KERNEL_SIZE - 1;
    let out_cols = rf_cols + KERNEL_SIZE - 1;
    let mut canvas = Array2::<f64>::zeros((out_rows, out_cols));
    for (o, k) in kernels.iter().enumerate() {
        for u in 0..rf_rows {
            for v in 0..rf_cols {
                let w = tensor[[u, v, o]];
                if w == 0.0 {
                    continue;
                }
                for kr in 0..KERNEL_SIZE {
                    for kc in 0..KERNEL_SIZE {
                        canvas[[u + kr, v + kc]] += w * k.kernel[[kr, kc]];
                    }
                }
            }
        }
    }
    let lo = canvas.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = canvas.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Array2::zeros((out_rows, out_cols));
    }
    canvas.mapv(|v| ((v - lo) / (hi - lo) * 255.0).round() as u8)
}
