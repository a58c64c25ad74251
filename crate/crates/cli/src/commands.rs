//! File-based `encode`, `decode` and `eval` commands.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use heatdecode::io::{
    read_annotations, read_hmap, write_annotations, write_hmap_with_dims, AnnotationRecord,
    LandmarkStatus,
};
use heatdecode::metrics::{evaluate, Sample};
use heatdecode::{
    encode, to_image_space, DecodeConfig, EncodingConfig, EncodingMode, EvalConfig, EvalReport,
    Heatmap, ResultTable,
};
use rayon::prelude::*;

use crate::bench::decode_or_fallback;
use crate::error::CliError;

#[derive(Debug, Clone)]
pub struct EncodeOptions {
    /// Heatmap side in pixels.
    pub resolution: usize,
    pub image_size: f64,
    pub sigma: f64,
    pub mode: EncodingMode,
}

/// Encodes every landmark of every record into one `HMAP` file, record-major.
/// Returns the number of heatmaps written.
pub fn cmd_encode(annotations: &Path, opts: &EncodeOptions, out: &Path) -> Result<usize, CliError> {
    if opts.resolution < 2 {
        return Err(CliError::Validation(format!(
            "resolution must be >= 2, got {}",
            opts.resolution
        )));
    }
    let lambda = opts.image_size / opts.resolution as f64;
    let config = EncodingConfig::new(lambda, opts.sigma, opts.mode)?;
    let records = read_annotations(annotations).map_err(CliError::file(annotations))?;

    let mut heatmaps = Vec::new();
    for record in &records {
        let set = record.landmark_set().map_err(CliError::file(annotations))?;
        for &beta in set.iter() {
            let e = encode(beta, &config, opts.resolution, opts.resolution)?;
            heatmaps.push(e.heatmap.with_landmark_index(heatmaps.len()));
        }
    }
    write_hmap_with_dims(&heatmaps, (opts.resolution, opts.resolution), out)
        .map_err(CliError::file(out))?;
    Ok(heatmaps.len())
}

#[derive(Debug, Clone)]
pub struct DecodeOptions {
    pub config: DecodeConfig,
    /// Image side; the downsampling ratio is `image_size / heatmap width`.
    pub image_size: f64,
    /// Channels per record. `None` puts every channel in a single record.
    pub landmarks_per_record: Option<usize>,
    /// Record ids; defaults to `<file stem>-<index>`.
    pub ids: Option<Vec<String>>,
}

/// Decodes every channel of an `HMAP` file into image-space annotations.
/// A channel that cannot be decoded is written as `null` with status
/// `failed`; the others are unaffected.
pub fn cmd_decode(hmap: &Path, opts: &DecodeOptions, out: &Path) -> Result<Vec<AnnotationRecord>, CliError> {
    opts.config.validate()?;
    let heatmaps = read_hmap(hmap).map_err(CliError::file(hmap))?;
    let per_record = match opts.landmarks_per_record {
        Some(0) => return Err(CliError::Validation("landmarks per record must be >= 1".into())),
        Some(n) => n,
        None => heatmaps.len().max(1),
    };
    if heatmaps.len() % per_record != 0 {
        return Err(CliError::Validation(format!(
            "{} channels do not split into records of {per_record}",
            heatmaps.len()
        )));
    }
    let n_records = heatmaps.len() / per_record;
    let ids: Vec<String> = match &opts.ids {
        Some(ids) if ids.len() != n_records => {
            return Err(CliError::Validation(format!(
                "{} ids given for {n_records} records",
                ids.len()
            )))
        }
        Some(ids) => ids.clone(),
        None => {
            let stem = hmap.file_stem().and_then(|s| s.to_str()).unwrap_or("record");
            (0..n_records).map(|i| format!("{stem}-{i}")).collect()
        }
    };

    let lambda = match heatmaps.first() {
        Some(h) => opts.image_size / h.width() as f64,
        None => 1.0,
    };
    let decoded: Vec<(Option<[f64; 2]>, LandmarkStatus)> = heatmaps
        .par_iter()
        .map(|h: &Heatmap| match decode_or_fallback(h, &opts.config) {
            Ok(r) => match to_image_space(&r, lambda) {
                Ok(c) => {
                    let status = if r.fallback.is_some() {
                        LandmarkStatus::Fallback
                    } else {
                        LandmarkStatus::Ok
                    };
                    (Some([c.x, c.y]), status)
                }
                Err(_) => (None, LandmarkStatus::Failed),
            },
            Err(e) => {
                log::warn!("landmark {} failed to decode: {e}", h.landmark_index());
                (None, LandmarkStatus::Failed)
            }
        })
        .collect();

    let records: Vec<AnnotationRecord> = decoded
        .chunks(per_record)
        .zip(ids)
        .map(|(chunk, id)| AnnotationRecord {
            id,
            landmarks: chunk.iter().map(|d| d.0).collect(),
            normalization: None,
            status: Some(chunk.iter().map(|d| d.1).collect()),
        })
        .collect();
    write_annotations(&records, out).map_err(CliError::file(out))?;
    Ok(records)
}

/// Scores each prediction file against the ground truth. Records are matched
/// by id; a ground-truth record with no complete prediction counts as a
/// failure.
pub fn cmd_eval(
    gt_path: &Path,
    pred_paths: &[PathBuf],
    config: &EvalConfig,
) -> Result<(Vec<EvalReport>, ResultTable), CliError> {
    if pred_paths.is_empty() {
        return Err(CliError::Validation("no prediction files given".into()));
    }
    let gt = read_annotations(gt_path).map_err(CliError::file(gt_path))?;
    let mut gt_sets = Vec::with_capacity(gt.len());
    for r in &gt {
        gt_sets.push(r.landmark_set().map_err(CliError::file(gt_path))?);
    }

    let mut reports = Vec::new();
    for path in pred_paths {
        let preds = read_annotations(path).map_err(CliError::file(path))?;
        let mut by_id: HashMap<&str, &AnnotationRecord> = HashMap::new();
        for p in &preds {
            if by_id.insert(p.id.as_str(), p).is_some() {
                return Err(CliError::file(path)(heatdecode::Error::Schema(format!(
                    "duplicate record id '{}'",
                    p.id
                ))));
            }
        }
        if let (Some(g), Some(p)) = (gt.first(), preds.first()) {
            if g.count() != p.count() {
                return Err(CliError::file(path)(heatdecode::Error::Schema(format!(
                    "{} landmarks per record, ground truth has {}",
                    p.count(),
                    g.count()
                ))));
            }
        }
        let samples: Vec<Sample> = gt
            .iter()
            .zip(&gt_sets)
            .map(|(record, set)| Sample {
                gt: set.clone(),
                pred: by_id.get(record.id.as_str()).and_then(|p| p.complete_set()),
                normalization: record.normalization,
            })
            .collect();
        reports.push(evaluate(&samples, config)?);
    }

    let table = ResultTable {
        title: format!("evaluation against {} ({})", gt_path.display(), config.normalization.describe()),
        corner: "predictions".to_string(),
        row_labels: pred_paths.iter().map(|p| p.display().to_string()).collect(),
        col_labels: vec!["nme".into(), "failures".into(), "samples".into()],
        cells: reports
            .iter()
            .map(|r| {
                vec![
                    Some(r.nme_mean),
                    Some(r.failures as f64),
                    Some(r.n_samples as f64),
                ]
            })
            .collect(),
    };
    Ok((reports, table))
}
