use super::{DecodeResult, TwoHotSign};
use crate::error::{Error, Result};
use crate::landmark::Heatmap;

/// Argmax decoding. Ties go to the smallest row, then the smallest column.
pub fn decode_one_hot(h: &Heatmap) -> Result<DecodeResult> {
    if h.is_flat() {
        return Err(Error::FlatHeatmap);
    }
    let (x, y, _) = h.argmax();
    Ok(DecodeResult::at_pixel(x, y))
}

/// Two-hot decoding: the argmax moved a quarter pixel toward the second
/// largest response.
pub fn decode_two_hot(h: &Heatmap) -> Result<DecodeResult> {
    decode_two_hot_with_sign(h, TwoHotSign::TowardSecond)
}

pub(crate) fn decode_two_hot_with_sign(h: &Heatmap, sign: TwoHotSign) -> Result<DecodeResult> {
    if h.width() * h.height() < 2 || h.is_flat() {
        return Err(Error::FlatHeatmap);
    }
    let (mx, my, _) = h.argmax();
    let skip = my * h.width() + mx;

    let mut second: Option<usize> = None;
    for (i, &v) in h.values().iter().enumerate() {
        if i == skip {
            continue;
        }
        match second {
            Some(j) if v <= h.values()[j] => {}
            _ => second = Some(i),
        }
    }
    // At least two pixels, so a second maximum always exists.
    let s = second.expect("heatmap has a second pixel");
    let (sx, sy) = (s % h.width(), s / h.width());

    let dx = sx as f64 - mx as f64;
    let dy = sy as f64 - my as f64;
    let norm = dx.hypot(dy);
    let step = match sign {
        TwoHotSign::TowardSecond => 0.25 / norm,
        TwoHotSign::AwayFromSecond => -0.25 / norm,
    };

    let mut result = DecodeResult::at_pixel(mx, my);
    result.beta_hat.x += step * dx;
    result.beta_hat.y += step * dy;
    result.second_loc = Some((sx, sy));
    Ok(result)
}
