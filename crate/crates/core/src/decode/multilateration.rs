//! True-range multilateration.
//!
//! Each anchor `i` gives `(x_i - u)^2 + (y_i - v)^2 = d_i^2`. Subtracting the
//! equation of the last anchor `n` from the others cancels the quadratic
//! terms and leaves the linear system `X [u v]^T = Y` with rows
//!
//! ```text
//! X_i = [x_n - x_i, y_n - y_i]
//! Y_i = (d_i^2 - d_n^2 + x_n^2 + y_n^2 - x_i^2 - y_i^2) / 2
//! ```
//!
//! which is solved through the 2x2 normal equations `(X^T X) b = X^T Y`.

use super::anchors::sample_anchors;
use super::argmax::decode_two_hot_with_sign;
use super::{sym2_condition, Anchor, AnchorSet, DecodeConfig, DecodeResult, Fallback};
use crate::error::{Error, Result};
use crate::landmark::{Coordinate, Heatmap};

/// `det(X^T X)` below this fraction of `||X^T X||_F` is treated as singular.
const SINGULAR_RTOL: f64 = 1e-12;

/// Least-squares position from anchors with known distances.
pub fn multilaterate(anchors: &[Anchor]) -> Result<Coordinate> {
    multilaterate_with_condition(anchors).map(|(c, _)| c)
}

/// Like [`multilaterate`], also returning the condition number of `X^T X`.
pub fn multilaterate_with_condition(anchors: &[Anchor]) -> Result<(Coordinate, f64)> {
    let Some((reference, rest)) = anchors.split_last() else {
        return Err(Error::InvalidInput("no anchors".into()));
    };
    if anchors.len() < 3 {
        return Err(Error::InvalidInput(format!(
            "need at least 3 anchors, got {}",
            anchors.len()
        )));
    }
    let (xn, yn) = (reference.x as f64, reference.y as f64);
    let dn2 = reference.distance * reference.distance;
    let ref_norm = xn * xn + yn * yn;

    // Accumulate X^T X = [[a, b], [b, c]] and X^T Y = [p, q].
    let (mut a, mut b, mut c, mut p, mut q) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for anchor in rest {
        let (xi, yi) = (anchor.x as f64, anchor.y as f64);
        let row = (xn - xi, yn - yi);
        let rhs = (anchor.distance * anchor.distance - dn2 + ref_norm - xi * xi - yi * yi) / 2.0;
        a += row.0 * row.0;
        b += row.0 * row.1;
        c += row.1 * row.1;
        p += row.0 * rhs;
        q += row.1 * rhs;
    }

    let det = a * c - b * b;
    let norm = (a * a + 2.0 * b * b + c * c).sqrt();
    if !(det > SINGULAR_RTOL * norm) {
        return Err(Error::SingularSystem { det });
    }
    let u = (c * p - b * q) / det;
    let v = (a * q - b * p) / det;
    Ok((Coordinate::heatmap(u, v)?, sym2_condition(a, b, c)))
}

/// Samples anchors, inverts their responses into distances and solves for
/// the landmark.
///
/// Degenerate anchor geometry triggers one retry with a window one pixel
/// wider; if that also fails the two-hot estimate is returned and flagged.
pub fn decode_multilateration(h: &Heatmap, config: &DecodeConfig) -> Result<DecodeResult> {
    config.validate()?;
    if h.is_flat() {
        return Err(Error::FlatHeatmap);
    }
    let (mx, my, _) = h.argmax();

    let attempt = |cfg: &DecodeConfig| -> Result<(AnchorSet, Coordinate, f64)> {
        let set = sample_anchors(h, cfg)?;
        let (beta, condition) = multilaterate_with_condition(set.anchors())?;
        Ok((set, beta, condition))
    };
    let degenerate =
        |e: &Error| matches!(e, Error::CollinearAnchors | Error::SingularSystem { .. });

    let mut fallback = None;
    let solved = match attempt(config) {
        Ok(ok) => Some(ok),
        Err(e) if degenerate(&e) => {
            let wider = DecodeConfig {
                kernel_size: config.kernel_size + 1,
                ..*config
            };
            if wider.kernel_size > h.width().min(h.height()) {
                None
            } else {
                match attempt(&wider) {
                    Ok(ok) => {
                        fallback = Some(Fallback::WiderKernel);
                        Some(ok)
                    }
                    Err(e) if degenerate(&e) => None,
                    Err(e) => return Err(e),
                }
            }
        }
        Err(e) => return Err(e),
    };

    match solved {
        Some((set, beta, condition)) => Ok(DecodeResult {
            beta_hat: beta,
            max_loc: (mx, my),
            second_loc: None,
            anchors_used: Some(set),
            condition,
            fallback,
        }),
        None => {
            log::debug!("multilateration degenerate at ({mx}, {my}), using two-hot");
            let mut r = decode_two_hot_with_sign(h, config.two_hot_sign)?;
            r.condition = f64::INFINITY;
            r.fallback = Some(Fallback::TwoHot);
            Ok(r)
        }
    }
}
