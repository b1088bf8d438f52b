//! Built-in benchmark plants and reference reference values.
//!
//! `example1` is a 3-state, 2-input chain of integrators with a 2×2 block
//! partition of the gain; `example2` a 5-state, 2-input plant with a 2×3
//! partition. The reference matrices are the gains and `W` iterates reported
//! for these plants, printed to three decimals.

use nalgebra::DMatrix;

use crate::io::Problem;

pub const EXAMPLE1_JSON: &str = include_str!("../data/example1.json");
pub const EXAMPLE2_JSON: &str = include_str!("../data/example2.json");
pub const EXAMPLE2_K22_FORBIDDEN_JSON: &str = include_str!("../data/example2_k22_forbidden.json");
pub const EXAMPLE2_K13_FORBIDDEN_JSON: &str = include_str!("../data/example2_k13_forbidden.json");

fn parse(text: &str, name: &str) -> Problem {
    Problem::from_json_str(text, name).expect("embedded example parses")
}

pub fn example1() -> Problem {
    parse(EXAMPLE1_JSON, "example1.json")
}

pub fn example2() -> Problem {
    parse(EXAMPLE2_JSON, "example2.json")
}

/// Example 2 with the `(2, 2)` gain block forced to zero.
pub fn example2_k22_forbidden() -> Problem {
    parse(EXAMPLE2_K22_FORBIDDEN_JSON, "example2_k22_forbidden.json")
}

/// Example 2 with the `(1, 3)` gain block forced to zero.
pub fn example2_k13_forbidden() -> Problem {
    parse(EXAMPLE2_K13_FORBIDDEN_JSON, "example2_k13_forbidden.json")
}

fn rows<const C: usize>(r: &[[f64; C]]) -> DMatrix<f64> {
    DMatrix::from_fn(r.len(), C, |i, j| r[i][j])
}

/// `W` reported for the penalty-PALM run on example 1.
pub fn example1_palm_w() -> DMatrix<f64> {
    rows(&[
        [1.428, -0.940, 0.0, 0.722, 0.260],
        [-0.940, 2.440, 0.0, 1.228, 0.733],
        [0.0, 0.0, 1.478, 0.0, 1.278],
        [0.722, 1.228, 0.0, 1.958, 0.976],
        [0.260, 0.733, 1.278, 0.976, 1.601],
    ])
}

/// `W` reported for an ADMM subsequence limit on example 1.
pub fn example1_admm_w() -> DMatrix<f64> {
    rows(&[
        [6.346, -2.709, 0.0, 0.200, 0.0],
        [-2.709, 1.172, 0.0, 1.115, 0.0],
        [0.0, 0.0, 0.759, 0.0, 1.026],
        [0.200, 1.115, 0.0, 7.861, 3.460],
        [0.0, 0.0, 1.026, 3.460, 2.615],
    ])
}

pub fn example1_k1() -> DMatrix<f64> {
    rows(&[[1.121, 0.935, 0.0], [0.508, 0.496, 0.865]])
}

pub fn example1_k2() -> DMatrix<f64> {
    rows(&[[32.934, 77.077, 0.0], [0.0, 0.0, 1.354]])
}

/// Group-ℓ1 baseline gains on example 1 (`γ = 50` and `γ = 200`).
pub fn example1_k3() -> DMatrix<f64> {
    rows(&[[65.688, 169.089, 0.284], [0.0, 0.0, 1.095]])
}

pub fn example1_k4() -> DMatrix<f64> {
    rows(&[[5.489, 1.946, 0.0], [0.0, 0.0, 1.815]])
}

pub fn example2_sparse_gain() -> DMatrix<f64> {
    rows(&[
        [1.072, -0.211, 0.017, -0.434, 3.825],
        [-0.310, 0.595, 0.695, 2.047, 0.0],
    ])
}

pub fn example2_k22_zero_gain() -> DMatrix<f64> {
    rows(&[
        [1.449, 0.208, 2.855, 4.266, 1.961],
        [-0.375, 0.430, 0.0, 0.0, -0.987],
    ])
}

pub fn example2_k13_zero_gain() -> DMatrix<f64> {
    rows(&[
        [0.713, -0.950, -0.268, -0.411, 0.0],
        [-0.022, 1.219, 0.890, 1.482, 9.626],
    ])
}
