//! Anchor-window sweep: multilateration NME for each kernel size and
//! heatmap resolution.
//!
//! Clean encodings decode exactly for every window, so the sweep perturbs
//! them the way predicted heatmaps deviate from the decoder's model: the
//! encoded Gaussian width may differ from the sigma the decoder assumes
//! (implied distances are then off in proportion to their length), and
//! seeded additive noise may be added. The same perturbed heatmap is decoded
//! with every kernel size.

use heatdecode::metrics::{evaluate, Sample};
use heatdecode::{
    decode_multilateration, encode, to_image_space, DecodeConfig, DecoderKind, EncodingConfig,
    EncodingMode, EvalConfig, Heatmap, Normalization, ResultTable, Space,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::bench::{draw_points, single, thread_pool};
use crate::error::CliError;

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub resolutions: Vec<u32>,
    pub kernel_sizes: Vec<usize>,
    /// Anchors per window; `None` uses every pixel of the window.
    pub anchor_count: Option<usize>,
    /// Standard deviation of additive noise on heatmap values.
    pub noise: f64,
    /// Gaussian width of the swept heatmaps; `sigma` is what the decoder
    /// assumes.
    pub heatmap_sigma: f64,
    pub encoding_mode: EncodingMode,
    pub samples: usize,
    pub seed: u64,
    pub sigma: f64,
    pub normalization: Normalization,
    pub image_size: f64,
    pub workers: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            resolutions: vec![64, 32, 16, 8, 4],
            kernel_sizes: (2..=6).collect(),
            anchor_count: None,
            noise: 0.02,
            heatmap_sigma: 1.8,
            encoding_mode: EncodingMode::Unbiased,
            samples: 2_000,
            seed: 0,
            sigma: 1.5,
            normalization: Normalization::Constant(256.0),
            image_size: 256.0,
            workers: 1,
        }
    }
}

impl SweepConfig {
    fn validate(&self) -> Result<(), CliError> {
        if self.samples == 0 {
            return Err(CliError::Validation("samples must be >= 1".into()));
        }
        if self.resolutions.is_empty() || self.resolutions.iter().any(|&r| r < 4) {
            return Err(CliError::Validation(format!(
                "resolutions must be >= 4, got {:?}",
                self.resolutions
            )));
        }
        if self.kernel_sizes.is_empty() || self.kernel_sizes.iter().any(|&k| k < 2) {
            return Err(CliError::Validation(format!(
                "kernel sizes must be >= 2, got {:?}",
                self.kernel_sizes
            )));
        }
        if !(self.noise.is_finite() && self.noise >= 0.0) {
            return Err(CliError::Validation(format!(
                "noise must be >= 0, got {}",
                self.noise
            )));
        }
        if self.workers == 0 {
            return Err(CliError::Validation("workers must be >= 1".into()));
        }
        if !(self.heatmap_sigma.is_finite() && self.heatmap_sigma > 0.0) {
            return Err(CliError::Validation(format!(
                "heatmap sigma must be > 0, got {}",
                self.heatmap_sigma
            )));
        }
        for &k in &self.kernel_sizes {
            self.decode_config(k).validate()?;
        }
        self.normalization.distance()?;
        Ok(())
    }

    fn decode_config(&self, kernel_size: usize) -> DecodeConfig {
        DecodeConfig {
            decoder: DecoderKind::Multilateration,
            kernel_size,
            anchor_count: self
                .anchor_count
                .map_or(kernel_size * kernel_size, |n| n.min(kernel_size * kernel_size)),
            sigma: self.sigma,
            ..DecodeConfig::default()
        }
    }
}

fn add_noise(h: &Heatmap, std: f64, seed: u64, stream: u64) -> Heatmap {
    if std == 0.0 {
        return h.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    let normal = Normal::new(0.0, std).expect("finite positive std");
    let noisy: Vec<f64> = h.values().iter().map(|v| v + normal.sample(&mut rng)).collect();
    Heatmap::new(h.width(), h.height(), noisy, h.landmark_index()).expect("finite values")
}

/// Runs the sweep. Rows are kernel sizes, columns resolutions (descending);
/// a cell is empty when the window does not fit in the heatmap.
pub fn run_sweep(config: &SweepConfig) -> Result<ResultTable, CliError> {
    config.validate()?;
    let pool = thread_pool(config.workers)?;
    let eval = EvalConfig {
        normalization: config.normalization,
        space: Space::Image,
    };
    let mut resolutions = config.resolutions.clone();
    resolutions.sort_unstable_by(|a, b| b.cmp(a));
    resolutions.dedup();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut cells = vec![vec![None; resolutions.len()]; config.kernel_sizes.len()];

    for (col, &res) in resolutions.iter().enumerate() {
        let lambda = config.image_size / res as f64;
        let enc = EncodingConfig::new(lambda, config.heatmap_sigma, config.encoding_mode)?;
        let points = draw_points(&mut rng, config.samples, res, lambda, config.sigma);
        let side = res as usize;
        let heatmaps: Vec<Heatmap> = pool.install(|| {
            points
                .par_iter()
                .enumerate()
                .map(|(i, &p)| {
                    encode(p, &enc, side, side).map(|e| {
                        let stream = (u64::from(res) << 32) | i as u64;
                        add_noise(&e.heatmap, config.noise, config.seed, stream)
                    })
                })
                .collect::<Result<_, _>>()
        })?;

        for (row, &k) in config.kernel_sizes.iter().enumerate() {
            if k > side {
                continue;
            }
            let dc = config.decode_config(k);
            let preds: Vec<_> = pool.install(|| {
                heatmaps
                    .par_iter()
                    .map(|h| {
                        decode_multilateration(h, &dc)
                            .ok()
                            .and_then(|r| to_image_space(&r, lambda).ok())
                    })
                    .collect()
            });
            let samples: Vec<Sample> = points
                .iter()
                .zip(preds)
                .map(|(&gt, pred)| Sample {
                    gt: single(gt),
                    pred: pred.map(single),
                    normalization: None,
                })
                .collect();
            let report = evaluate(&samples, &eval)?;
            cells[row][col] = Some(report.nme_mean);
        }
    }

    Ok(ResultTable {
        title: format!(
            "multilateration NME by anchor window ({}, heatmap sigma={}, decode sigma={}, noise={}, anchors={}, samples={}, seed={})",
            config.normalization.describe(),
            config.heatmap_sigma,
            config.sigma,
            config.noise,
            config
                .anchor_count
                .map_or_else(|| "k*k".to_string(), |n| n.to_string()),
            config.samples,
            config.seed
        ),
        corner: "kernel".to_string(),
        row_labels: config
            .kernel_sizes
            .iter()
            .map(|k| format!("{k}x{k}"))
            .collect(),
        col_labels: resolutions.iter().map(|r| format!("{r}x{r}")).collect(),
        cells,
    })
}
