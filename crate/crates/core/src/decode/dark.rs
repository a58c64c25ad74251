//! Distribution-aware decoding: one Newton step on `ln h` at the argmax.
//!
//! The log of a Gaussian is exactly quadratic, so on a clean Gaussian the
//! central-difference gradient and Hessian are exact and the step lands on
//! the true center.

use super::{sym2_condition, DecodeConfig, DecodeResult, Fallback};
use crate::error::{Error, Result};
use crate::landmark::Heatmap;

pub fn decode_distribution_aware(h: &Heatmap, config: &DecodeConfig) -> Result<DecodeResult> {
    config.validate()?;
    if h.is_flat() {
        return Err(Error::FlatHeatmap);
    }
    let smoothed;
    let h = if config.smoothing {
        smoothed = gaussian_blur(h, config.sigma)?;
        &smoothed
    } else {
        h
    };

    let (mx, my, _) = h.argmax();
    if mx == 0 || my == 0 || mx + 1 >= h.width() || my + 1 >= h.height() {
        return Err(Error::BoundaryPeak { x: mx, y: my });
    }

    let floor = config.value_floor;
    let log_at = |dx: isize, dy: isize| {
        let x = (mx as isize + dx) as usize;
        let y = (my as isize + dy) as usize;
        h.get(x, y).max(floor).ln()
    };

    let center = log_at(0, 0);
    let gx = 0.5 * (log_at(1, 0) - log_at(-1, 0));
    let gy = 0.5 * (log_at(0, 1) - log_at(0, -1));
    let hxx = log_at(1, 0) - 2.0 * center + log_at(-1, 0);
    let hyy = log_at(0, 1) - 2.0 * center + log_at(0, -1);
    let hxy = 0.25 * (log_at(1, 1) - log_at(1, -1) - log_at(-1, 1) + log_at(-1, -1));

    let mut result = DecodeResult::at_pixel(mx, my);
    let det = hxx * hyy - hxy * hxy;
    let negative_definite = hxx < 0.0 && det > 0.0;
    if !negative_definite || !det.is_finite() {
        result.condition = f64::INFINITY;
        result.fallback = Some(Fallback::OneHot);
        return Ok(result);
    }

    // step = -H^-1 g
    let step_x = -(hyy * gx - hxy * gy) / det;
    let step_y = -(hxx * gy - hxy * gx) / det;
    result.beta_hat.x += step_x;
    result.beta_hat.y += step_y;
    result.condition = sym2_condition(hxx, hxy, hyy);
    Ok(result)
}

/// Separable Gaussian blur with replicated borders, rescaled so the blurred
/// map keeps the original peak value.
pub fn gaussian_blur(h: &Heatmap, sigma: f64) -> Result<Heatmap> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "blur sigma must be > 0, got {sigma}"
        )));
    }
    let radius = (3.0 * sigma).ceil() as isize;
    let mut kernel: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|k| *k /= total);

    let (w, ht) = (h.width() as isize, h.height() as isize);
    let clamp = |v: isize, hi: isize| v.clamp(0, hi - 1) as usize;

    let mut rows = vec![0.0; h.values().len()];
    for y in 0..ht {
        for x in 0..w {
            rows[(y * w + x) as usize] = kernel
                .iter()
                .enumerate()
                .map(|(i, k)| k * h.get(clamp(x + i as isize - radius, w), y as usize))
                .sum();
        }
    }
    let mut out = vec![0.0; rows.len()];
    for y in 0..ht {
        for x in 0..w {
            out[(y * w + x) as usize] = kernel
                .iter()
                .enumerate()
                .map(|(i, k)| k * rows[(clamp(y + i as isize - radius, ht) as isize * w + x) as usize])
                .sum();
        }
    }

    let old_max = h.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let new_max = out.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if new_max > 0.0 && old_max > 0.0 {
        let s = old_max / new_max;
        out.iter_mut().for_each(|v| *v *= s);
    }
    Heatmap::new(h.width(), h.height(), out, h.landmark_index())
}
