//! Fixtures shared by the benchmarks.

use std::f64::consts::PI;

use pmcontract_core::{DiffusionParams, ScalarField, TorusGrid};

/// A smooth positive field on the `d`-torus of length `2π` with `cells` per axis.
pub fn smooth_field(d: usize, cells: usize, phase: f64) -> ScalarField {
    let grid = TorusGrid::new(d, cells, 2.0 * PI).expect("valid grid");
    ScalarField::from_fn(grid, |x| 1.0 + 0.4 * x[..d].iter().map(|xi| (xi + phase).cos()).product::<f64>())
}

pub fn params(n: f64, d: usize) -> DiffusionParams {
    DiffusionParams::from_n(n, d).expect("valid exponent")
}
