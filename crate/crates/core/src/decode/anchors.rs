//! Station anchors: heatmap pixels whose responses are read as distances to
//! the landmark.

use super::DecodeConfig;
use crate::error::{Error, Result};
use crate::landmark::Heatmap;

/// Relative tolerance under which two window sums count as tied.
const WINDOW_TIE_RTOL: f64 = 1e-12;

/// A pixel position with its distance to the landmark, in heatmap pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Anchor {
    pub x: usize,
    pub y: usize,
    pub distance: f64,
}

impl Anchor {
    pub fn new(x: usize, y: usize, distance: f64) -> Self {
        Self { x, y, distance }
    }
}

/// At least three anchors with distinct, non-collinear positions and finite
/// nonnegative distances.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorSet {
    anchors: Vec<Anchor>,
}

impl AnchorSet {
    pub fn new(anchors: Vec<Anchor>) -> Result<Self> {
        if anchors.len() < 3 {
            return Err(Error::InvalidInput(format!(
                "need at least 3 anchors, got {}",
                anchors.len()
            )));
        }
        if let Some(a) = anchors
            .iter()
            .find(|a| !(a.distance.is_finite() && a.distance >= 0.0))
        {
            return Err(Error::InvalidInput(format!(
                "anchor ({}, {}) has invalid distance {}",
                a.x, a.y, a.distance
            )));
        }
        for (i, a) in anchors.iter().enumerate() {
            if anchors[i + 1..].iter().any(|b| a.x == b.x && a.y == b.y) {
                return Err(Error::InvalidInput(format!(
                    "duplicate anchor position ({}, {})",
                    a.x, a.y
                )));
            }
        }
        if all_collinear(&anchors) {
            return Err(Error::CollinearAnchors);
        }
        Ok(Self { anchors })
    }

    pub fn anchors(&self) -> &[Anchor] {
        &self.anchors
    }

    pub fn count(&self) -> usize {
        self.anchors.len()
    }
}

/// True when every anchor lies on the line through the first two.
fn all_collinear(anchors: &[Anchor]) -> bool {
    let p = |a: &Anchor| (a.x as i64, a.y as i64);
    let (x0, y0) = p(&anchors[0]);
    let (x1, y1) = p(&anchors[1]);
    anchors[2..].iter().all(|a| {
        let (x, y) = p(a);
        (x1 - x0) * (y - y0) - (y1 - y0) * (x - x0) == 0
    })
}

/// Distance from a pixel to the landmark implied by a unit-peak Gaussian
/// response `v`: `sigma * sqrt(-2 ln v)`, with `v` clamped to
/// `[value_floor, 1]`.
pub fn invert_distance(v: f64, sigma: f64, value_floor: f64) -> f64 {
    let v = if v.is_nan() { value_floor } else { v.clamp(value_floor, 1.0) };
    // ln(1) is exactly 0, but guard the sign for values just below 1.
    sigma * (-2.0 * v.ln()).max(0.0).sqrt()
}

/// Picks the `kernel_size` x `kernel_size` window with the largest response
/// sum (stride 1), then the `anchor_count` strongest pixels inside it.
///
/// Window ties go to the smallest top row, then the smallest left column;
/// pixel ties inside the window are broken the same way. Anchors are returned
/// strongest first, so the weakest one is last.
pub fn sample_anchors(h: &Heatmap, config: &DecodeConfig) -> Result<AnchorSet> {
    config.validate()?;
    let k = config.kernel_size;
    let (w, ht) = (h.width(), h.height());
    if k > w || k > ht {
        return Err(Error::KernelTooLarge {
            kernel: k,
            width: w,
            height: ht,
        });
    }

    let window_sum = |x0: usize, y0: usize| -> f64 {
        let mut s = 0.0;
        for y in y0..y0 + k {
            for x in x0..x0 + k {
                s += h.get(x, y);
            }
        }
        s
    };
    let mut sums = Vec::with_capacity((w - k + 1) * (ht - k + 1));
    for y0 in 0..=ht - k {
        for x0 in 0..=w - k {
            sums.push((x0, y0, window_sum(x0, y0)));
        }
    }
    let best = sums.iter().map(|s| s.2).fold(f64::NEG_INFINITY, f64::max);
    let cutoff = best - WINDOW_TIE_RTOL * best.abs();
    // Row-major order, so the first window within tolerance wins ties.
    let &(wx, wy, _) = sums
        .iter()
        .find(|s| s.2 >= cutoff)
        .expect("at least one window");

    let mut pixels: Vec<(usize, usize, f64)> = (wy..wy + k)
        .flat_map(|y| (wx..wx + k).map(move |x| (x, y)))
        .map(|(x, y)| (x, y, h.get(x, y)))
        .collect();
    if pixels.iter().all(|p| p.2 <= 0.0) {
        return Err(Error::FlatHeatmap);
    }
    // Stable sort keeps row-major order among equal values.
    pixels.sort_by(|a, b| b.2.total_cmp(&a.2));
    pixels.truncate(config.anchor_count);

    let anchors = pixels
        .into_iter()
        .map(|(x, y, v)| Anchor::new(x, y, invert_distance(v, config.sigma, config.value_floor)))
        .collect();
    AnchorSet::new(anchors)
}
