//! Heatmap decoders.
//!
//! All decoders work in heatmap space and return a [`DecodeResult`]; use
//! [`to_image_space`] to scale the estimate back to image pixels.

mod anchors;
mod argmax;
mod dark;
mod multilateration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::landmark::{Coordinate, Heatmap, Space};

pub use anchors::{invert_distance, sample_anchors, Anchor, AnchorSet};
pub use argmax::{decode_one_hot, decode_two_hot};
pub use dark::{decode_distribution_aware, gaussian_blur};
pub use multilateration::{decode_multilateration, multilaterate, multilaterate_with_condition};

/// Decoding scheme. The declaration order is the row order of result tables.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DecoderKind {
    OneHot,
    TwoHot,
    DistributionAware,
    Multilateration,
}

impl DecoderKind {
    pub const ALL: [DecoderKind; 4] = [
        DecoderKind::OneHot,
        DecoderKind::TwoHot,
        DecoderKind::DistributionAware,
        DecoderKind::Multilateration,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DecoderKind::OneHot => "one-hot",
            DecoderKind::TwoHot => "two-hot",
            DecoderKind::DistributionAware => "distribution-aware",
            DecoderKind::Multilateration => "multilateration",
        }
    }
}

impl std::fmt::Display for DecoderKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for DecoderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "one-hot" | "onehot" | "argmax" => Ok(DecoderKind::OneHot),
            "two-hot" | "twohot" => Ok(DecoderKind::TwoHot),
            "distribution-aware" | "dark" | "da" => Ok(DecoderKind::DistributionAware),
            "multilateration" | "multilat" | "keyposs" => Ok(DecoderKind::Multilateration),
            other => Err(Error::InvalidConfig(format!("unknown decoder '{other}'"))),
        }
    }
}

/// Direction of the quarter-pixel shift of the two-hot decoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TwoHotSign {
    /// Shift from the maximum toward the second maximum.
    #[default]
    TowardSecond,
    /// Shift away from the second maximum, `m + 0.25 (m - s) / |m - s|`.
    AwayFromSecond,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodeConfig {
    pub decoder: DecoderKind,
    /// Side of the square anchor-search window.
    pub kernel_size: usize,
    /// Number of anchors taken from the selected window.
    pub anchor_count: usize,
    /// Encoder sigma, in heatmap pixels.
    pub sigma: f64,
    /// Gaussian pre-blur before the distribution-aware Taylor step.
    pub smoothing: bool,
    /// Lower clamp applied to responses before taking logarithms.
    pub value_floor: f64,
    pub two_hot_sign: TwoHotSign,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        Self {
            decoder: DecoderKind::Multilateration,
            kernel_size: 2,
            anchor_count: 4,
            sigma: 1.5,
            smoothing: false,
            value_floor: 1e-9,
            two_hot_sign: TwoHotSign::TowardSecond,
        }
    }
}

impl DecodeConfig {
    pub fn with_decoder(decoder: DecoderKind) -> Self {
        Self {
            decoder,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kernel_size < 2 {
            return Err(Error::InvalidConfig(format!(
                "kernel size must be >= 2, got {}",
                self.kernel_size
            )));
        }
        if self.anchor_count < 3 {
            return Err(Error::InvalidConfig(format!(
                "anchor count must be >= 3, got {}",
                self.anchor_count
            )));
        }
        if self.anchor_count > self.kernel_size * self.kernel_size {
            return Err(Error::InvalidConfig(format!(
                "{} anchors do not fit in a {k}x{k} window",
                self.anchor_count,
                k = self.kernel_size
            )));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "sigma must be > 0, got {}",
                self.sigma
            )));
        }
        if !(self.value_floor > 0.0 && self.value_floor < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "value floor must lie in (0, 1), got {}",
                self.value_floor
            )));
        }
        Ok(())
    }
}

/// Recovery path taken when the requested decoder could not be applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Fallback {
    /// Multilateration succeeded only after widening the anchor window by one.
    WiderKernel,
    /// Multilateration gave up and the two-hot estimate was returned.
    TwoHot,
    /// The Taylor step was unusable and the argmax was returned.
    OneHot,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    pub beta_hat: Coordinate,
    /// Grid argmax `(x, y)`.
    pub max_loc: (usize, usize),
    /// Second maximum, for two-hot decoding.
    pub second_loc: Option<(usize, usize)>,
    pub anchors_used: Option<AnchorSet>,
    /// Condition number of the solved 2x2 system, 0 when no system was
    /// solved and infinity when the solve was abandoned.
    pub condition: f64,
    pub fallback: Option<Fallback>,
}

impl DecodeResult {
    pub(crate) fn at_pixel(x: usize, y: usize) -> Self {
        Self {
            beta_hat: Coordinate {
                x: x as f64,
                y: y as f64,
                space: Space::Heatmap,
            },
            max_loc: (x, y),
            second_loc: None,
            anchors_used: None,
            condition: 0.0,
            fallback: None,
        }
    }
}

/// Dispatches to the decoder named by `config.decoder`.
pub fn decode(h: &Heatmap, config: &DecodeConfig) -> Result<DecodeResult> {
    match config.decoder {
        DecoderKind::OneHot => decode_one_hot(h),
        DecoderKind::TwoHot => argmax::decode_two_hot_with_sign(h, config.two_hot_sign),
        DecoderKind::DistributionAware => decode_distribution_aware(h, config),
        DecoderKind::Multilateration => decode_multilateration(h, config),
    }
}

/// Scales a heatmap-space estimate back to image pixels.
pub fn to_image_space(r: &DecodeResult, lambda: f64) -> Result<Coordinate> {
    if !(lambda.is_finite() && lambda >= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "lambda must be >= 1, got {lambda}"
        )));
    }
    Coordinate::image(r.beta_hat.x * lambda, r.beta_hat.y * lambda)
}

/// Condition number `|l_max| / |l_min|` of a symmetric 2x2 matrix.
pub(crate) fn sym2_condition(a: f64, b: f64, c: f64) -> f64 {
    let mean = 0.5 * (a + c);
    let radius = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    let (l1, l2) = ((mean + radius).abs(), (mean - radius).abs());
    let (hi, lo) = if l1 >= l2 { (l1, l2) } else { (l2, l1) };
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}
