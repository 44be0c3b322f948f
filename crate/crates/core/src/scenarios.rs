//! Fixed configurations shared by the command line and the acceptance suite.

use std::f64::consts::PI;

use crate::butcher::{scale_to_data_norm, SeriesConfig};
use crate::lattice::{
    estimate_algebra_constant, random_band_limited, CauchyData, FieldSnapshot, GridSpec, TimeGrid,
};

/// One-dimensional `p = 2` classical setup: `n = 64`, `L = 2 pi`, `m = 1`,
/// `q = 1`. Position data is a unit mean plus 0.3 times band-1 random data
/// (seed 3), velocity 0.2 times band-1 random data (seed 4), rescaled to
/// data norm 1. The mean keeps the order-4 truncation error above
/// roundoff at the smallest coupling. `c_q` comes from the estimator on this
/// grid.
pub fn desk_classical(lambda: f64, horizon: f64, dt: f64, max_order: usize) -> SeriesConfig {
    let grid = GridSpec::new(1, 64, 2.0 * PI, 1.0).expect("valid grid");
    let q = 1;
    let fluctuation = random_band_limited(&grid, 3, 1);
    let phi0 = FieldSnapshot::new(
        grid,
        fluctuation.values().iter().map(|v| 1.0 + 0.3 * v).collect(),
    )
    .expect("grid-sized values");
    let raw =
        CauchyData::new(phi0, random_band_limited(&grid, 4, 1).scaled(0.2)).expect("shared grid");
    SeriesConfig {
        p: 2,
        lambda,
        cauchy: scale_to_data_norm(&raw, q, 1.0),
        time: TimeGrid::new(horizon, dt).expect("valid time grid"),
        q,
        max_order,
        c_q: estimate_algebra_constant(&grid, q).value,
        dealias: false,
    }
}
