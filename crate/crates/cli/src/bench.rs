//! Encode/decode round-trip benchmark.
//!
//! Ground-truth image points are drawn uniformly at random, encoded as
//! heatmaps at each resolution, decoded by every requested decoder and scored
//! with the normalized mean error. The image side is fixed, so each
//! resolution implies its own downsampling ratio.

use std::time::{Duration, Instant};

use heatdecode::metrics::{aggregate_by, evaluate, Sample};
use heatdecode::{
    decode, decode_one_hot, encode, to_image_space, Coordinate, DecodeConfig, DecodeResult,
    DecoderKind, EncodingConfig, EncodingMode, Error, EvalConfig, EvalReport, Heatmap,
    LandmarkSet, Normalization, ResultTable, Space,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::CliError;

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub resolutions: Vec<u32>,
    pub decoders: Vec<DecoderKind>,
    pub encoding_mode: EncodingMode,
    pub samples: usize,
    pub seed: u64,
    pub sigma: f64,
    pub kernel_size: usize,
    pub anchor_count: usize,
    pub normalization: Normalization,
    /// Side of the square image the points are drawn in.
    pub image_size: f64,
    /// Worker threads; results do not depend on it.
    pub workers: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            resolutions: vec![64, 32, 16, 8, 4],
            decoders: DecoderKind::ALL.to_vec(),
            encoding_mode: EncodingMode::Unbiased,
            samples: 10_000,
            seed: 0,
            sigma: 1.5,
            kernel_size: 2,
            anchor_count: 4,
            normalization: Normalization::Constant(256.0),
            image_size: 256.0,
            workers: 1,
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<(), CliError> {
        if self.samples == 0 {
            return Err(CliError::Validation("samples must be >= 1".into()));
        }
        if self.resolutions.is_empty() || self.resolutions.iter().any(|&r| r < 4) {
            return Err(CliError::Validation(format!(
                "resolutions must be >= 4, got {:?}",
                self.resolutions
            )));
        }
        if self.decoders.is_empty() {
            return Err(CliError::Validation("no decoders requested".into()));
        }
        if self.workers == 0 {
            return Err(CliError::Validation("workers must be >= 1".into()));
        }
        for &res in &self.resolutions {
            self.encoding(res)?;
        }
        self.decode_config(DecoderKind::Multilateration).validate()?;
        let smallest = *self.resolutions.iter().min().expect("non-empty") as usize;
        if self.decoders.contains(&DecoderKind::Multilateration) && self.kernel_size > smallest {
            return Err(Error::KernelTooLarge {
                kernel: self.kernel_size,
                width: smallest,
                height: smallest,
            }
            .into());
        }
        self.normalization.distance()?;
        Ok(())
    }

    pub fn lambda(&self, resolution: u32) -> f64 {
        self.image_size / resolution as f64
    }

    pub fn encoding(&self, resolution: u32) -> Result<EncodingConfig, Error> {
        EncodingConfig::new(self.lambda(resolution), self.sigma, self.encoding_mode)
    }

    pub fn decode_config(&self, decoder: DecoderKind) -> DecodeConfig {
        DecodeConfig {
            decoder,
            kernel_size: self.kernel_size,
            anchor_count: self.anchor_count,
            sigma: self.sigma,
            ..DecodeConfig::default()
        }
    }

    fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            normalization: self.normalization,
            space: Space::Image,
        }
    }
}

/// Heatmap-space margin kept between sampled points and the grid edge: three
/// sigma when the grid is wide enough to leave an interior band, otherwise
/// none (points may then fall anywhere on the grid).
pub fn sampling_margin(resolution: u32, sigma: f64) -> f64 {
    let span = resolution as f64 - 1.0;
    if span > 6.0 * sigma {
        3.0 * sigma
    } else {
        0.0
    }
}

/// Draws `n` image-space points whose heatmap images fall in
/// `[margin, resolution - 1 - margin]` on both axes.
pub fn draw_points(rng: &mut impl Rng, n: usize, resolution: u32, lambda: f64, sigma: f64) -> Vec<Coordinate> {
    let margin = sampling_margin(resolution, sigma);
    let lo = margin * lambda;
    let hi = (resolution as f64 - 1.0 - margin) * lambda;
    (0..n)
        .map(|_| {
            let u = rng.random_range(lo..=hi);
            let v = rng.random_range(lo..=hi);
            Coordinate {
                x: u,
                y: v,
                space: Space::Image,
            }
        })
        .collect()
}

/// Decodes with the configured decoder. A distribution-aware decode whose
/// peak sits on the border falls back to the argmax.
pub fn decode_or_fallback(h: &Heatmap, config: &DecodeConfig) -> Result<DecodeResult, Error> {
    match decode(h, config) {
        Err(Error::BoundaryPeak { .. }) if config.decoder == DecoderKind::DistributionAware => {
            let mut r = decode_one_hot(h)?;
            r.fallback = Some(heatdecode::Fallback::OneHot);
            Ok(r)
        }
        other => other,
    }
}

pub(crate) fn thread_pool(workers: usize) -> Result<rayon::ThreadPool, CliError> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Validation(format!("cannot start {workers} workers: {e}")))
}

pub(crate) fn single(c: Coordinate) -> LandmarkSet {
    LandmarkSet::new(vec![c]).expect("finite coordinate")
}

pub struct BenchOutcome {
    pub reports: Vec<(DecoderKind, u32, EvalReport)>,
    /// Mean NME per decoder and resolution. Deterministic for a fixed seed.
    pub nme: ResultTable,
    /// Mean wall time per decode in microseconds.
    pub timing: ResultTable,
}

pub fn run_bench(config: &BenchConfig) -> Result<BenchOutcome, CliError> {
    config.validate()?;
    let pool = thread_pool(config.workers)?;
    let eval = config.eval_config();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut reports = Vec::new();

    for &res in &config.resolutions {
        let enc = config.encoding(res)?;
        let lambda = config.lambda(res);
        let points = draw_points(&mut rng, config.samples, res, lambda, config.sigma);
        let side = res as usize;

        let heatmaps: Vec<Heatmap> = pool.install(|| {
            points
                .par_iter()
                .map(|&p| encode(p, &enc, side, side).map(|e| e.heatmap))
                .collect::<Result<_, _>>()
        })?;

        for &decoder in &config.decoders {
            let dc = config.decode_config(decoder);
            let decoded: Vec<(Option<Coordinate>, Duration)> = pool.install(|| {
                heatmaps
                    .par_iter()
                    .map(|h| {
                        let start = Instant::now();
                        let r = decode_or_fallback(h, &dc);
                        let elapsed = start.elapsed();
                        let c = r.ok().and_then(|r| to_image_space(&r, lambda).ok());
                        (c, elapsed)
                    })
                    .collect()
            });

            let wall_time = decoded.iter().map(|d| d.1).sum();
            let samples: Vec<Sample> = points
                .iter()
                .zip(&decoded)
                .map(|(&gt, (pred, _))| Sample {
                    gt: single(gt),
                    pred: pred.map(single),
                    normalization: None,
                })
                .collect();
            let mut report = evaluate(&samples, &eval)?;
            report.wall_time = wall_time;
            if report.failures > 0 {
                log::warn!("{decoder} at {res}x{res}: {} failed decodes", report.failures);
            }
            reports.push((decoder, res, report));
        }
    }

    let mut nme = aggregate_by(&reports, "NME", |r| r.nme_mean)?;
    nme.title = format!(
        "NME ({}, {} encoding, sigma={}, k={}, n={}, samples={}, seed={})",
        config.normalization.describe(),
        match config.encoding_mode {
            EncodingMode::Unbiased => "unbiased",
            EncodingMode::Biased => "biased",
        },
        config.sigma,
        config.kernel_size,
        config.anchor_count,
        config.samples,
        config.seed
    );
    let timing = aggregate_by(&reports, "mean decode time (us)", |r| {
        r.wall_time.as_secs_f64() * 1e6 / r.n_samples as f64
    })?;
    Ok(BenchOutcome {
        reports,
        nme,
        timing,
    })
}
