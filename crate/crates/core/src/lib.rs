//! Keypoint heatmap encoding and decoding.
//!
//! A landmark at a continuous image position is encoded as a unit-peak
//! Gaussian distance map on a down-sampled grid, and decoded back with one of
//! four schemes:
//!
//! - **one-hot**: the grid argmax;
//! - **two-hot**: the argmax shifted a quarter pixel toward the second maximum;
//! - **distribution-aware**: a Newton step on the log-heatmap at the argmax;
//! - **multilateration**: each pixel response is inverted into a distance to
//!   the landmark, and the position is solved from a handful of station
//!   anchors by linear least squares.
//!
//! The [`metrics`] module scores decoded landmark sets with the normalized
//! mean error, and [`io`] carries heatmaps and annotations across process
//! boundaries.

pub mod decode;
pub mod error;
pub mod io;
pub mod landmark;
pub mod metrics;

pub use decode::{
    decode, decode_distribution_aware, decode_multilateration, decode_one_hot, decode_two_hot,
    invert_distance, multilaterate, sample_anchors, to_image_space, Anchor, AnchorSet,
    DecodeConfig, DecodeResult, DecoderKind, Fallback, TwoHotSign,
};
pub use error::{Error, FormatError, Result};
pub use landmark::{
    encode, quantize, to_heatmap_space, Coordinate, EncodeStatus, Encoded, EncodingConfig,
    EncodingMode, Heatmap, LandmarkSet, Space,
};
pub use metrics::{aggregate, nme, EvalConfig, EvalReport, Normalization, ResultTable};
