//! No library code; the crate exists to host `benches/pipeline.rs`, which
//! times the per-record hot paths (channel synthesis, channel estimation,
//! feature extraction, network forward pass) at the desk configuration.
