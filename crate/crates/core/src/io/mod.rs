//! File formats: the `HMAP` binary heatmap container and JSON landmark
//! annotations.

mod annotations;
mod hmap;

pub use annotations::{
    read_annotations, write_annotations, AnnotationRecord, LandmarkStatus,
};
pub use hmap::{
    decode_hmap, encode_hmap, read_hmap, write_hmap, write_hmap_with_dims, HEADER_LEN, MAGIC,
    VERSION,
};
