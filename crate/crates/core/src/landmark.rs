//! Coordinates, heatmaps and the Gaussian distance-map encoder.
//!
//! Conventions: `x` is the column and `y` the row, pixel centers sit at
//! integer coordinates, and moving between image and heatmap space is pure
//! scaling by the downsampling ratio (no half-pixel offset).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Space {
    Image,
    Heatmap,
}

/// A continuous 2-D landmark position tagged with the space it lives in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coordinate {
    pub x: f64,
    pub y: f64,
    pub space: Space,
}

impl Coordinate {
    pub fn new(x: f64, y: f64, space: Space) -> Result<Self> {
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::InvalidInput(format!(
                "non-finite coordinate ({x}, {y})"
            )));
        }
        Ok(Self { x, y, space })
    }

    pub fn image(x: f64, y: f64) -> Result<Self> {
        Self::new(x, y, Space::Image)
    }

    pub fn heatmap(x: f64, y: f64) -> Result<Self> {
        Self::new(x, y, Space::Heatmap)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn distance(&self, other: &Coordinate) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// One landmark's response grid, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    width: usize,
    height: usize,
    values: Vec<f64>,
    landmark_index: usize,
}

impl Heatmap {
    pub fn new(width: usize, height: usize, values: Vec<f64>, landmark_index: usize) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput(format!(
                "heatmap dimensions must be positive, got {width}x{height}"
            )));
        }
        if values.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "heatmap {width}x{height} needs {} values, got {}",
                width * height,
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite heatmap value at pixel ({}, {})",
                i % width,
                i / width
            )));
        }
        Ok(Self {
            width,
            height,
            values,
            landmark_index,
        })
    }

    /// Builds a heatmap by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(
        width: usize,
        height: usize,
        landmark_index: usize,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                values.push(f(x, y));
            }
        }
        Self::new(width, height, values, landmark_index)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn landmark_index(&self) -> usize {
        self.landmark_index
    }

    pub fn with_landmark_index(mut self, index: usize) -> Self {
        self.landmark_index = index;
        self
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    /// Grid argmax as `(x, y, value)`. Ties go to the smallest row, then the
    /// smallest column, which is what a strict row-major scan yields.
    pub fn argmax(&self) -> (usize, usize, f64) {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        (best % self.width, best / self.width, self.values[best])
    }

    pub fn is_flat(&self) -> bool {
        let first = self.values[0];
        self.values.iter().all(|&v| v == first)
    }

    /// Multiplies every value by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.width,
            self.height,
            self.values.iter().map(|v| v * factor).collect(),
            self.landmark_index,
        )
    }

    /// Applies `f` to every value.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(
            self.width,
            self.height,
            self.values.iter().map(|&v| f(v)).collect(),
            self.landmark_index,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EncodingMode {
    /// Gaussian centered on the exact fractional heatmap coordinate.
    Unbiased,
    /// Center rounded to the nearest pixel before encoding.
    Biased,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncodingConfig {
    /// Image pixels per heatmap pixel.
    pub lambda: f64,
    /// Gaussian standard deviation in heatmap pixels.
    pub sigma: f64,
    pub mode: EncodingMode,
    /// Peak value of the Gaussian. Distance inversion assumes 1.
    pub amplitude: f64,
}

impl Default for EncodingConfig {
    fn default() -> Self {
        Self {
            lambda: 4.0,
            sigma: 1.5,
            mode: EncodingMode::Unbiased,
            amplitude: 1.0,
        }
    }
}

impl EncodingConfig {
    pub fn new(lambda: f64, sigma: f64, mode: EncodingMode) -> Result<Self> {
        let config = Self {
            lambda,
            sigma,
            mode,
            amplitude: 1.0,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda >= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "lambda must be >= 1, got {}",
                self.lambda
            )));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "sigma must be > 0, got {}",
                self.sigma
            )));
        }
        if !(self.amplitude.is_finite() && self.amplitude > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "amplitude must be > 0, got {}",
                self.amplitude
            )));
        }
        Ok(())
    }
}

/// An ordered set of landmarks sharing one coordinate space.
#[derive(Debug, Clone, PartialEq)]
pub struct LandmarkSet {
    landmarks: Vec<Coordinate>,
}

impl LandmarkSet {
    pub fn new(landmarks: Vec<Coordinate>) -> Result<Self> {
        if let Some(first) = landmarks.first() {
            if landmarks.iter().any(|c| c.space != first.space) {
                return Err(Error::InvalidInput(
                    "landmarks of one set must share a coordinate space".into(),
                ));
            }
        }
        if landmarks.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("non-finite landmark coordinate".into()));
        }
        Ok(Self { landmarks })
    }

    pub fn count(&self) -> usize {
        self.landmarks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.landmarks.is_empty()
    }

    /// `None` for an empty set.
    pub fn space(&self) -> Option<Space> {
        self.landmarks.first().map(|c| c.space)
    }

    pub fn landmarks(&self) -> &[Coordinate] {
        &self.landmarks
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Coordinate> {
        self.landmarks.iter()
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda >= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "lambda must be >= 1, got {lambda}"
        )));
    }
    Ok(())
}

/// Image-space coordinate divided by the downsampling ratio.
pub fn to_heatmap_space(beta: Coordinate, lambda: f64) -> Result<Coordinate> {
    check_lambda(lambda)?;
    if beta.space != Space::Image {
        return Err(Error::InvalidInput(
            "expected an image-space coordinate".into(),
        ));
    }
    Coordinate::heatmap(beta.x / lambda, beta.y / lambda)
}

/// Rounds each component to the nearest integer, halves away from zero.
pub fn quantize(beta: Coordinate) -> Result<Coordinate> {
    Coordinate::new(beta.x.round(), beta.y.round(), beta.space)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncodeStatus {
    Ok,
    /// The center lies more than 3 sigma outside the grid; the heatmap is
    /// close to zero everywhere and should not be expected to decode.
    OutOfGrid,
}

#[derive(Debug, Clone)]
pub struct Encoded {
    pub heatmap: Heatmap,
    /// Gaussian center in heatmap space (quantized in biased mode).
    pub center: Coordinate,
    pub status: EncodeStatus,
}

/// Encodes an image-space landmark as a `width` x `height` Gaussian heatmap.
///
/// Tails falling outside the grid are clipped with no renormalization.
pub fn encode(
    beta: Coordinate,
    config: &EncodingConfig,
    width: usize,
    height: usize,
) -> Result<Encoded> {
    config.validate()?;
    if width < 2 || height < 2 {
        return Err(Error::InvalidInput(format!(
            "heatmap must be at least 2x2, got {width}x{height}"
        )));
    }
    let scaled = to_heatmap_space(beta, config.lambda)?;
    let center = match config.mode {
        EncodingMode::Unbiased => scaled,
        EncodingMode::Biased => quantize(scaled)?,
    };

    let two_var = 2.0 * config.sigma * config.sigma;
    let heatmap = Heatmap::from_fn(width, height, 0, |x, y| {
        let dx = x as f64 - center.x;
        let dy = y as f64 - center.y;
        config.amplitude * (-(dx * dx + dy * dy) / two_var).exp()
    })?;

    let reach = 3.0 * config.sigma;
    let outside = center.x < -reach
        || center.y < -reach
        || center.x > (width - 1) as f64 + reach
        || center.y > (height - 1) as f64 + reach;
    let status = if outside {
        log::warn!(
            "encoded center ({:.3}, {:.3}) is more than 3 sigma outside the {width}x{height} grid",
            center.x,
            center.y
        );
        EncodeStatus::OutOfGrid
    } else {
        EncodeStatus::Ok
    };

    Ok(Encoded {
        heatmap,
        center,
        status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn img(x: f64, y: f64) -> Coordinate {
        Coordinate::image(x, y).unwrap()
    }

    fn hm(x: f64, y: f64) -> Coordinate {
        Coordinate::heatmap(x, y).unwrap()
    }

    fn cfg(mode: EncodingMode) -> EncodingConfig {
        EncodingConfig::new(4.0, 1.5, mode).unwrap()
    }

    #[test]
    fn heatmap_space_examples() {
        assert_eq!(to_heatmap_space(img(16.0, 16.0), 4.0).unwrap(), hm(4.0, 4.0));
        assert_eq!(to_heatmap_space(img(0.0, 0.0), 4.0).unwrap(), hm(0.0, 0.0));
        assert_eq!(to_heatmap_space(img(18.0, 16.0), 4.0).unwrap(), hm(4.5, 4.0));
    }

    #[test]
    fn heatmap_space_rejects_bad_input() {
        assert!(Coordinate::image(f64::NAN, 1.0).is_err());
        assert!(to_heatmap_space(img(1.0, 1.0), 0.5).is_err());
        assert!(to_heatmap_space(hm(1.0, 1.0), 4.0).is_err());
    }

    #[test]
    fn quantize_examples() {
        assert_eq!(quantize(hm(4.5, 4.0)).unwrap(), hm(5.0, 4.0));
        assert_eq!(quantize(hm(3.0, 7.0)).unwrap(), hm(3.0, 7.0));
        assert_eq!(quantize(hm(4.49, 4.51)).unwrap(), hm(4.0, 5.0));
        assert_eq!(quantize(hm(-2.5, -0.4)).unwrap(), hm(-3.0, 0.0));
    }

    #[test]
    fn encode_examples() {
        let e = encode(img(16.0, 16.0), &cfg(EncodingMode::Unbiased), 64, 64).unwrap();
        assert_eq!(e.heatmap.get(4, 4), 1.0);
        assert_eq!(e.status, EncodeStatus::Ok);

        let e = encode(img(18.0, 16.0), &cfg(EncodingMode::Unbiased), 64, 64).unwrap();
        assert!((e.heatmap.get(4, 4) - 0.945_959_468_906_765_4).abs() < 1e-12);

        let e = encode(img(18.0, 16.0), &cfg(EncodingMode::Biased), 64, 64).unwrap();
        assert_eq!(e.center, hm(5.0, 4.0));
        assert_eq!(e.heatmap.get(5, 4), 1.0);
    }

    #[test]
    fn encode_flags_far_out_of_grid_centers() {
        let e = encode(img(-40.0, 8.0), &cfg(EncodingMode::Unbiased), 8, 8).unwrap();
        assert_eq!(e.status, EncodeStatus::OutOfGrid);
        let e = encode(img(-4.0, 8.0), &cfg(EncodingMode::Unbiased), 8, 8).unwrap();
        assert_eq!(e.status, EncodeStatus::Ok);
    }

    #[test]
    fn encode_rejects_tiny_grids_and_bad_config() {
        assert!(encode(img(0.0, 0.0), &cfg(EncodingMode::Unbiased), 1, 8).is_err());
        let bad = EncodingConfig {
            sigma: 0.0,
            ..EncodingConfig::default()
        };
        assert!(encode(img(0.0, 0.0), &bad, 8, 8).is_err());
    }

    #[test]
    fn heatmap_validation() {
        assert!(Heatmap::new(2, 2, vec![0.0; 3], 0).is_err());
        assert!(Heatmap::new(2, 2, vec![0.0, 1.0, f64::INFINITY, 0.0], 0).is_err());
        assert!(Heatmap::new(0, 2, vec![], 0).is_err());
    }

    #[test]
    fn landmark_set_requires_one_space() {
        assert!(LandmarkSet::new(vec![img(0.0, 0.0), hm(0.0, 0.0)]).is_err());
        let set = LandmarkSet::new(vec![img(0.0, 0.0), img(1.0, 2.0)]).unwrap();
        assert_eq!(set.count(), 2);
        assert_eq!(set.space(), Some(Space::Image));
    }

    proptest! {
        #[test]
        fn encoded_values_lie_in_unit_interval(x in 0.0..60.0f64, y in 0.0..60.0f64) {
            let e = encode(img(x, y), &cfg(EncodingMode::Unbiased), 16, 16).unwrap();
            prop_assert!(e.heatmap.values().iter().all(|&v| (0.0..=1.0).contains(&v)));
            prop_assert!(e.heatmap.values().iter().any(|&v| v > 0.0));
        }

        #[test]
        fn encoding_is_translation_equivariant(
            x in 16.0..40.0f64, y in 16.0..40.0f64, dx in -2i32..=2, dy in -2i32..=2,
        ) {
            let c = cfg(EncodingMode::Unbiased);
            let a = encode(img(x, y), &c, 16, 16).unwrap().heatmap;
            let b = encode(img(x + 4.0 * dx as f64, y + 4.0 * dy as f64), &c, 16, 16)
                .unwrap()
                .heatmap;
            for py in 2..14i32 {
                for px in 2..14i32 {
                    let (qx, qy) = (px + dx, py + dy);
                    let lhs = a.get(px as usize, py as usize);
                    let rhs = b.get(qx as usize, qy as usize);
                    prop_assert!((lhs - rhs).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn biased_center_is_integer_and_close(x in -10.0..300.0f64, y in -10.0..300.0f64) {
            let e = encode(img(x, y), &cfg(EncodingMode::Biased), 8, 8).unwrap();
            prop_assert_eq!(e.center.x.fract(), 0.0);
            prop_assert_eq!(e.center.y.fract(), 0.0);
            prop_assert!((e.center.x - x / 4.0).abs() <= 0.5);
            prop_assert!((e.center.y - y / 4.0).abs() <= 0.5);
        }

        #[test]
        fn pixel_values_invert_to_pixel_distances(x in 8.0..50.0f64, y in 8.0..50.0f64) {
            let sigma = 1.5;
            let e = encode(img(x, y), &cfg(EncodingMode::Unbiased), 16, 16).unwrap();
            for py in 0..16 {
                for px in 0..16 {
                    let v = e.heatmap.get(px, py);
                    if v < 1e-300 {
                        continue;
                    }
                    let d = sigma * (-2.0 * v.ln()).sqrt();
                    let back = (-(d * d) / (2.0 * sigma * sigma)).exp();
                    prop_assert!((back - v).abs() <= 1e-12);
                    let truth = (px as f64 - e.center.x).hypot(py as f64 - e.center.y);
                    prop_assert!((d - truth).abs() <= 1e-6 * truth.max(1.0));
                }
            }
        }
    }
}
