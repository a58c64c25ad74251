//! Normalized mean error and result tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::time::Duration;

use crate::decode::DecoderKind;
use crate::error::{Error, Result};
use crate::landmark::{LandmarkSet, Space};

/// The distance `D` that landmark errors are divided by.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Normalization {
    Constant(f64),
    ImageDiagonal { width: f64, height: f64 },
    HeatmapWidth(f64),
}

impl Normalization {
    pub fn distance(&self) -> Result<f64> {
        let d = match *self {
            Normalization::Constant(d) => d,
            Normalization::ImageDiagonal { width, height } => width.hypot(height),
            Normalization::HeatmapWidth(w) => w,
        };
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "normalization distance must be > 0, got {d}"
            )));
        }
        Ok(d)
    }

    pub fn describe(&self) -> String {
        match *self {
            Normalization::Constant(d) => format!("D={}", sig6(d)),
            Normalization::ImageDiagonal { width, height } => {
                format!("D=diag({}x{})={}", sig6(width), sig6(height), sig6(width.hypot(height)))
            }
            Normalization::HeatmapWidth(w) => format!("D=heatmap width {}", sig6(w)),
        }
    }
}

impl std::str::FromStr for Normalization {
    type Err = Error;

    /// Accepts `256`, `constant:256`, `diagonal:256x256` and `heatmap-width:64`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidConfig(format!("cannot parse normalization '{s}'"));
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
        let norm = match s.split_once(':') {
            None => Normalization::Constant(num(s)?),
            Some(("constant", d)) => Normalization::Constant(num(d)?),
            Some(("heatmap-width", w)) => Normalization::HeatmapWidth(num(w)?),
            Some(("diagonal", dims)) => {
                let (w, h) = dims.split_once('x').ok_or_else(bad)?;
                Normalization::ImageDiagonal {
                    width: num(w)?,
                    height: num(h)?,
                }
            }
            Some(_) => return Err(bad()),
        };
        norm.distance()?;
        Ok(norm)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalConfig {
    pub normalization: Normalization,
    pub space: Space,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            normalization: Normalization::Constant(256.0),
            space: Space::Image,
        }
    }
}

/// Mean landmark-to-landmark distance divided by the normalization distance.
pub fn nme(gt: &LandmarkSet, pred: &LandmarkSet, config: &EvalConfig) -> Result<f64> {
    let d = config.normalization.distance()?;
    check_pair(gt, pred, config)?;
    let total: f64 = gt
        .iter()
        .zip(pred.iter())
        .map(|(a, b)| a.distance(b))
        .sum();
    Ok(total / gt.count() as f64 / d)
}

fn check_pair(gt: &LandmarkSet, pred: &LandmarkSet, config: &EvalConfig) -> Result<()> {
    if gt.count() != pred.count() {
        return Err(Error::InvalidInput(format!(
            "landmark count mismatch: {} ground truth vs {} predicted",
            gt.count(),
            pred.count()
        )));
    }
    if gt.is_empty() {
        return Err(Error::InvalidInput("empty landmark sets".into()));
    }
    if gt.space() != Some(config.space) || pred.space() != Some(config.space) {
        return Err(Error::InvalidInput(format!(
            "landmarks must be in {:?} space",
            config.space
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// Mean of per-sample NMEs over samples that decoded.
    pub nme_mean: f64,
    /// Mean normalized error of each landmark index over decoded samples.
    pub nme_per_landmark: Vec<f64>,
    pub failures: usize,
    pub n_samples: usize,
    pub wall_time: Duration,
}

/// One evaluation sample: ground truth, prediction (`None` if decoding
/// failed), and an optional per-sample normalization distance.
#[derive(Debug, Clone)]
pub struct Sample {
    pub gt: LandmarkSet,
    pub pred: Option<LandmarkSet>,
    pub normalization: Option<f64>,
}

/// Scores samples in index order. Failed samples are counted, not scored.
pub fn evaluate(samples: &[Sample], config: &EvalConfig) -> Result<EvalReport> {
    let default_d = config.normalization.distance()?;
    let mut per_sample = Vec::with_capacity(samples.len());
    let mut per_landmark: Vec<f64> = Vec::new();
    let mut failures = 0;

    for s in samples {
        let Some(pred) = &s.pred else {
            failures += 1;
            continue;
        };
        let d = match s.normalization {
            Some(d) if d.is_finite() && d > 0.0 => d,
            Some(d) => {
                return Err(Error::InvalidConfig(format!(
                    "sample normalization must be > 0, got {d}"
                )))
            }
            None => default_d,
        };
        check_pair(&s.gt, pred, config)?;
        if per_landmark.is_empty() {
            per_landmark = vec![0.0; s.gt.count()];
        } else if per_landmark.len() != s.gt.count() {
            return Err(Error::Schema(format!(
                "samples disagree on landmark count ({} vs {})",
                per_landmark.len(),
                s.gt.count()
            )));
        }
        let mut total = 0.0;
        for (i, (a, b)) in s.gt.iter().zip(pred.iter()).enumerate() {
            let e = a.distance(b) / d;
            per_landmark[i] += e;
            total += e;
        }
        per_sample.push(total / s.gt.count() as f64);
    }

    let scored = per_sample.len();
    let nme_mean = if scored == 0 {
        f64::NAN
    } else {
        per_sample.iter().sum::<f64>() / scored as f64
    };
    per_landmark.iter_mut().for_each(|v| *v /= scored as f64);
    Ok(EvalReport {
        nme_mean,
        nme_per_landmark: per_landmark,
        failures,
        n_samples: samples.len(),
        wall_time: Duration::ZERO,
    })
}

/// A labelled grid of optional numbers; missing cells print as `-`.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub title: String,
    pub corner: String,
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    pub cells: Vec<Vec<Option<f64>>>,
}

impl ResultTable {
    pub fn rows(&self) -> usize {
        self.row_labels.len()
    }

    pub fn cols(&self) -> usize {
        self.col_labels.len()
    }

    pub fn get(&self, row: &str, col: &str) -> Option<f64> {
        let r = self.row_labels.iter().position(|l| l == row)?;
        let c = self.col_labels.iter().position(|l| l == col)?;
        self.cells[r][c]
    }

    fn cell_text(v: Option<f64>) -> String {
        v.map_or_else(|| "-".to_string(), sig6)
    }

    /// Space-aligned text with a leading `# title` line.
    pub fn to_text(&self) -> String {
        let mut widths = vec![self.corner.len()];
        widths.extend(self.col_labels.iter().map(String::len));
        let body: Vec<Vec<String>> = self
            .row_labels
            .iter()
            .zip(&self.cells)
            .map(|(label, row)| {
                std::iter::once(label.clone())
                    .chain(row.iter().map(|&v| Self::cell_text(v)))
                    .collect()
            })
            .collect();
        for line in &body {
            for (w, cell) in widths.iter_mut().zip(line) {
                *w = (*w).max(cell.len());
            }
        }

        let mut out = String::new();
        if !self.title.is_empty() {
            let _ = writeln!(out, "# {}", self.title);
        }
        let header: Vec<String> = std::iter::once(self.corner.clone())
            .chain(self.col_labels.iter().cloned())
            .collect();
        for line in std::iter::once(&header).chain(&body) {
            let mut text = String::new();
            for (i, (cell, w)) in line.iter().zip(&widths).enumerate() {
                if i == 0 {
                    let _ = write!(text, "{cell:<w$}");
                } else {
                    let _ = write!(text, "  {cell:>w$}");
                }
            }
            out.push_str(text.trim_end());
            out.push('\n');
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        if !self.title.is_empty() {
            let _ = writeln!(out, "# {}", self.title);
        }
        let _ = writeln!(out, "{},{}", self.corner, self.col_labels.join(","));
        for (label, row) in self.row_labels.iter().zip(&self.cells) {
            let cells: Vec<String> = row.iter().map(|&v| Self::cell_text(v)).collect();
            let _ = writeln!(out, "{label},{}", cells.join(","));
        }
        out
    }
}

/// Formats with six significant figures, switching to exponent notation
/// outside `[1e-4, 1e6)`.
pub fn sig6(v: f64) -> String {
    if v == 0.0 {
        return "0".to_string();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let exp = v.abs().log10().floor() as i32;
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let s = format!("{v:.decimals$}");
        // Rounding can carry into a seventh digit (e.g. 9.999996 -> 10.00000).
        let digits = s.chars().filter(char::is_ascii_digit).count();
        let leading_zeros = if exp < 0 { (-exp) as usize } else { 0 };
        if digits > 6 + leading_zeros && decimals > 0 {
            return format!("{v:.prec$}", prec = decimals - 1);
        }
        s
    } else {
        format!("{v:.5e}")
    }
}

/// Arranges per-(decoder, resolution) reports into a table: rows in decoder
/// order, columns by descending resolution. A repeated key replaces the
/// earlier report.
pub fn aggregate(reports: &[(DecoderKind, u32, EvalReport)]) -> Result<ResultTable> {
    aggregate_by(reports, "NME", |r| r.nme_mean)
}

pub fn aggregate_by(
    reports: &[(DecoderKind, u32, EvalReport)],
    title: &str,
    value: impl Fn(&EvalReport) -> f64,
) -> Result<ResultTable> {
    if reports.is_empty() {
        return Err(Error::InvalidInput("no reports to aggregate".into()));
    }
    let mut grid: BTreeMap<(DecoderKind, std::cmp::Reverse<u32>), f64> = BTreeMap::new();
    for (decoder, res, report) in reports {
        if grid
            .insert((*decoder, std::cmp::Reverse(*res)), value(report))
            .is_some()
        {
            log::warn!("duplicate report for {decoder} at {res}x{res}; keeping the last one");
        }
    }
    let mut decoders: Vec<DecoderKind> = grid.keys().map(|k| k.0).collect();
    decoders.dedup();
    let mut resolutions: Vec<u32> = grid.keys().map(|k| k.1 .0).collect();
    resolutions.sort_unstable_by(|a, b| b.cmp(a));
    resolutions.dedup();

    Ok(ResultTable {
        title: title.to_string(),
        corner: "decoder".to_string(),
        row_labels: decoders.iter().map(|d| d.name().to_string()).collect(),
        col_labels: resolutions.iter().map(|r| format!("{r}x{r}")).collect(),
        cells: decoders
            .iter()
            .map(|&d| {
                resolutions
                    .iter()
                    .map(|&r| grid.get(&(d, std::cmp::Reverse(r))).copied())
                    .collect()
            })
            .collect(),
    })
}
