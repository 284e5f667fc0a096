//! Shared fixtures for the criterion benchmarks.

use rscreg_core::sample::{dgp_draw, Dataset, DgpKind, DgpModel};

/// One location-scale draw of size `n`, fixed seed.
pub fn location_scale(n: usize) -> Dataset {
    dgp_draw(DgpModel::new(DgpKind::LocationScale), n, 42).expect("draw succeeds")
}
