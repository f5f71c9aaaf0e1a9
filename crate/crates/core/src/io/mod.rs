//! File formats: depth maps, images, manifests and the triplet index.

pub mod depth;
pub mod index;
pub mod manifest;

pub use depth::{decode_depth, encode_depth, read_depth, read_gray, write_depth, DepthFormat, DepthUnit};
pub use index::{
    read_index, write_triplets, IndexHeader, IndexLine, IndexWriter, LabelRecord, SparseRecord, TripletIndex,
    TripletRecord, INDEX_FILE_NAME, INDEX_SCHEMA_VERSION,
};
pub use manifest::{
    parse_manifest, read_manifest, write_manifest, Manifest, ManifestEntry, PredictionRef, MANIFEST_SCHEMA_VERSION,
};
