//! Model persistence and firmware artifacts: the binary model bundle,
//! golden test vectors, static C array export and the memory footprint
//! report derived from the same array layout.

pub mod bundle;
mod codec;
pub mod export;
pub mod footprint;
pub mod vectors;

pub use bundle::{load_bundle, save_bundle, ModelBundle, BUNDLE_MAGIC, BUNDLE_VERSION};
pub use export::{export_static_arrays, firmware_arrays, CArray, CType};
pub use footprint::{footprint, FootprintReport};
pub use vectors::{
    decode_vectors, emit_golden_vectors, replay_vectors, GoldenCase, GoldenVectors, ReplayReport, VECTORS_MAGIC,
    VECTORS_VERSION,
};
