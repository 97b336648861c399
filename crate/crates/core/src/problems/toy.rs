//! Two-objective nonconvex toy landscape on `x in R^2` with stochastic
//! data `z ~ N(0, I_2)`.
//!
//! Each objective blends a log-barrier ridge (active for `x_2 > 0`) with a
//! noisy quadratic basin (active for `x_2 < 0`) through tanh gates:
//!
//! ```text
//! f_{z,1} = c1(x) h1(x) + c2(x) g_{z,1}(x)
//! f_{z,2} = c1(x) h2(x) + c2(x) g_{z,2}(x)
//! h1 = log(max(|0.5(-x1-7) - tanh(-x2)|, 5e-6)) + 6
//! h2 = log(max(|0.5(-x1+3) - tanh(-x2) + 2|, 5e-6)) + 6
//! g_{z,1} = ((-x1+3.5)^2 + 0.1(-x2-1)^2)/10 - 20 - 2 z1 x1 - 5.5 z2 x2
//! g_{z,2} = ((-x1-3.5)^2 + 0.1(-x2-1)^2)/10 - 20 + 2 z1 x1 - 5.5 z2 x2
//! c1 = max(tanh(0.5 x2), 0),  c2 = max(tanh(-0.5 x2), 0)
//! ```
//!
//! The data enters linearly with zero mean, so the population objectives are
//! the same expressions with the z-terms dropped; equivalently `z = 0`.
//!
//! Kink conventions: gates and the log-clamp use the derivative of the
//! active branch, and exact ties take the inactive (zero-derivative) branch.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{MolError, Result};
use crate::types::{Dataset, GradientMatrix, ModelParams, MolProblem};

/// Floor of the log-barrier argument.
pub const LOG_CLAMP: f64 = 0.000_005;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToySpec {
    pub n: usize,
    pub data_seed: u64,
}

#[derive(Debug, Clone, Default)]
pub struct ToyNonconvex;

fn gates(x2: f64) -> (f64, f64) {
    (
        (0.5 * x2).tanh().max(0.0),
        (-0.5 * x2).tanh().max(0.0),
    )
}

fn gate_derivatives(x2: f64) -> (f64, f64) {
    let t1 = (0.5 * x2).tanh();
    let t2 = (-0.5 * x2).tanh();
    let d1 = if t1 > 0.0 { 0.5 * (1.0 - t1 * t1) } else { 0.0 };
    let d2 = if t2 > 0.0 { -0.5 * (1.0 - t2 * t2) } else { 0.0 };
    (d1, d2)
}

/// Ridge arguments `u` before the absolute value and clamp.
fn ridge_args(x1: f64, x2: f64) -> (f64, f64) {
    let shared = -(-x2).tanh();
    (0.5 * (-x1 - 7.0) + shared, 0.5 * (-x1 + 3.0) + shared + 2.0)
}

fn ridge_value(u: f64) -> f64 {
    u.abs().max(LOG_CLAMP).ln() + 6.0
}

/// d/du log(max(|u|, clamp)) = 1/u on the active branch, 0 inside the clamp.
fn ridge_slope(u: f64) -> f64 {
    if u.abs() > LOG_CLAMP {
        1.0 / u
    } else {
        0.0
    }
}

fn basin_values(x1: f64, x2: f64, z: &DVector<f64>) -> (f64, f64) {
    let curve2 = 0.1 * (-x2 - 1.0) * (-x2 - 1.0);
    let g1 = ((-x1 + 3.5) * (-x1 + 3.5) + curve2) / 10.0 - 20.0 - 2.0 * z[0] * x1 - 5.5 * z[1] * x2;
    let g2 = ((-x1 - 3.5) * (-x1 - 3.5) + curve2) / 10.0 - 20.0 + 2.0 * z[0] * x1 - 5.5 * z[1] * x2;
    (g1, g2)
}

impl MolProblem for ToyNonconvex {
    fn dims(&self) -> (usize, usize) {
        (2, 2)
    }

    fn per_sample_value(&self, x: &ModelParams, z: &DVector<f64>, m: usize) -> f64 {
        let (x1, x2) = (x.as_vector()[0], x.as_vector()[1]);
        let (c1, c2) = gates(x2);
        let (u1, u2) = ridge_args(x1, x2);
        let (g1, g2) = basin_values(x1, x2, z);
        match m {
            0 => c1 * ridge_value(u1) + c2 * g1,
            1 => c1 * ridge_value(u2) + c2 * g2,
            _ => panic!("objective index {m} out of range for M = 2"),
        }
    }

    fn per_sample_gradient_matrix(&self, x: &ModelParams, z: &DVector<f64>) -> GradientMatrix {
        let (x1, x2) = (x.as_vector()[0], x.as_vector()[1]);
        let (c1, c2) = gates(x2);
        let (dc1, dc2) = gate_derivatives(x2);
        let (u1, u2) = ridge_args(x1, x2);
        let (h1, h2) = (ridge_value(u1), ridge_value(u2));
        // du/dx1 = -0.5 for both ridges; du/dx2 = sech^2(x2).
        let du_dx2 = {
            let t = x2.tanh();
            1.0 - t * t
        };
        let (s1, s2) = (ridge_slope(u1), ridge_slope(u2));
        let (g1, g2) = basin_values(x1, x2, z);
        let dg1_dx1 = (x1 - 3.5) / 5.0 - 2.0 * z[0];
        let dg2_dx1 = (x1 + 3.5) / 5.0 + 2.0 * z[0];
        let dg_dx2 = 0.02 * (x2 + 1.0) - 5.5 * z[1];

        let col = |h: f64, s: f64, g: f64, dg_dx1: f64| {
            DVector::from_row_slice(&[
                c1 * s * (-0.5) + c2 * dg_dx1,
                dc1 * h + c1 * s * du_dx2 + dc2 * g + c2 * dg_dx2,
            ])
        };
        GradientMatrix::new_unchecked(DMatrix::from_columns(&[
            col(h1, s1, g1, dg1_dx1),
            col(h2, s2, g2, dg2_dx1),
        ]))
    }

    fn population_gradient_matrix(&self, x: &ModelParams) -> Option<GradientMatrix> {
        Some(self.per_sample_gradient_matrix(x, &DVector::zeros(2)))
    }
}

impl ToyNonconvex {
    /// Population objective `f_m(x)` (z-terms dropped).
    pub fn population_value(&self, x: &ModelParams, m: usize) -> f64 {
        self.per_sample_value(x, &DVector::zeros(2), m)
    }
}

/// Instantiate the toy problem and draw `n` standard Gaussian samples.
pub fn make_toy_nonconvex(spec: &ToySpec) -> Result<(ToyNonconvex, Dataset)> {
    if spec.n == 0 {
        return Err(MolError::InvalidDimension("dataset needs n >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.data_seed);
    let samples: Vec<DVector<f64>> = (0..spec.n)
        .map(|_| DVector::from_fn(2, |_, _| rng.sample::<f64, _>(StandardNormal)))
        .collect();
    let data = Dataset::new(format!("toy-n{}-s{}", spec.n, spec.data_seed), samples)?;
    Ok((ToyNonconvex, data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::finite_difference_gradient_check;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn sample(a: f64, b: f64) -> DVector<f64> {
        DVector::from_row_slice(&[a, b])
    }

    #[test]
    fn both_gates_vanish_on_the_axis() {
        let p = ToyNonconvex;
        let x = ModelParams::from_slice(&[3.0, 0.0]).unwrap();
        for z in [sample(0.0, 0.0), sample(1.5, -2.0)] {
            assert_eq!(p.per_sample_value(&x, &z, 0), 0.0);
            assert_eq!(p.per_sample_value(&x, &z, 1), 0.0);
        }
    }

    #[test]
    fn population_basin_minimum_value() {
        let p = ToyNonconvex;
        let x = ModelParams::from_slice(&[-3.5, -1.0]).unwrap();
        // Quadratic part of g_2 vanishes at (-3.5, -1); the gate scales the
        // basin value -20.
        let (x1, x2) = (-3.5f64, -1.0f64);
        let quad = ((-x1 - 3.5) * (-x1 - 3.5) + 0.1 * (-x2 - 1.0) * (-x2 - 1.0)) / 10.0 - 20.0;
        assert_eq!(quad, -20.0);
        let c2 = (-0.5 * x2).tanh().max(0.0);
        let expected = c2 * quad;
        assert!((p.population_value(&x, 1) - expected).abs() < 1e-12);
    }

    #[test]
    fn dataset_regeneration_is_deterministic() {
        let spec = ToySpec { n: 20, data_seed: 5 };
        let (_, a) = make_toy_nonconvex(&spec).unwrap();
        let (_, b) = make_toy_nonconvex(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 20);
    }

    fn away_from_kinks(x1: f64, x2: f64) -> bool {
        let (u1, u2) = ridge_args(x1, x2);
        u1.abs() > 1e-3 && u2.abs() > 1e-3 && x2.abs() > 1e-3
    }

    #[test]
    fn gradients_match_finite_differences_away_from_kinks() {
        let p = ToyNonconvex;
        let mut rng = ChaCha8Rng::seed_from_u64(71);
        let mut checked = 0;
        while checked < 50 {
            let x1 = rng.gen_range(-10.0..10.0);
            let x2 = rng.gen_range(-10.0..10.0);
            if !away_from_kinks(x1, x2) {
                continue;
            }
            let x = ModelParams::from_slice(&[x1, x2]).unwrap();
            let z = sample(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let err = finite_difference_gradient_check(&p, &x, &z, 1e-5).unwrap();
            assert!(err <= 1e-4, "fd error {err} at ({x1}, {x2})");
            checked += 1;
        }
    }

    #[test]
    fn finite_difference_error_decays_quadratically() {
        let p = ToyNonconvex;
        let x = ModelParams::from_slice(&[0.0, -5.0]).unwrap();
        let z = sample(0.7, -0.3);
        let coarse = finite_difference_gradient_check(&p, &x, &z, 1e-2).unwrap();
        let fine = finite_difference_gradient_check(&p, &x, &z, 1e-3).unwrap();
        let finest = finite_difference_gradient_check(&p, &x, &z, 1e-6).unwrap();
        assert!(finest <= 1e-4, "fd error at h=1e-6: {finest}");
        // Central differences decay O(h^2); allow slack for rounding noise.
        let decay = coarse / fine.max(1e-300);
        assert!(
            (20.0..500.0).contains(&decay),
            "expected ~100x decay, saw {decay} ({coarse} -> {fine})"
        );
    }

    #[test]
    fn monte_carlo_mean_gradient_approaches_population() {
        let p = ToyNonconvex;
        let x = ModelParams::from_slice(&[1.0, -2.0]).unwrap();
        let pop = p.population_gradient_matrix(&x).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        let trials = 1_000_000usize;
        let mut mean = DMatrix::zeros(2, 2);
        let mut m2 = DMatrix::zeros(2, 2);
        for k in 0..trials {
            let z = DVector::from_fn(2, |_, _| rng.sample::<f64, _>(StandardNormal));
            let g = p.per_sample_gradient_matrix(&x, &z);
            let delta = g.as_matrix() - &mean;
            mean += &delta / (k + 1) as f64;
            let delta2 = g.as_matrix() - &mean;
            m2 += delta.component_mul(&delta2);
        }
        for i in 0..2 {
            for j in 0..2 {
                let se = (m2[(i, j)] / (trials as f64 - 1.0) / trials as f64).sqrt();
                let diff = (mean[(i, j)] - pop.as_matrix()[(i, j)]).abs();
                assert!(
                    diff <= 3.0 * se + 1e-12,
                    "entry ({i},{j}): diff {diff} beyond 3 se {se}"
                );
            }
        }
    }
}
