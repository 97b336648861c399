//! Reference oracles used by the verification suites.
//!
//! These deliberately avoid the solver code paths they are used to check:
//! the two-objective closed form is plain algebra and the three-objective
//! oracle is brute-force grid search with local refinement.

use nalgebra::{DMatrix, DVector};

/// Closed-form min-norm weights for two objectives: minimizing
/// `||g1 w + g2 (1 - w)||` over `w in [0, 1]` gives
/// `w = clip(<g2 - g1, g2> / ||g1 - g2||^2, [0, 1])`.
pub fn min_norm_two_objectives(g: &DMatrix<f64>) -> (DVector<f64>, f64) {
    assert_eq!(g.ncols(), 2, "closed form is specific to M = 2");
    let g1 = g.column(0);
    let g2 = g.column(1);
    let diff = g1 - g2;
    let denom = diff.norm_squared();
    let w = if denom == 0.0 {
        0.5
    } else {
        ((&g2 - &g1).dot(&g2) / denom).clamp(0.0, 1.0)
    };
    let lambda = DVector::from_row_slice(&[w, 1.0 - w]);
    let value = (g * &lambda).norm();
    (lambda, value)
}

/// Minimize `f` over the 3-simplex by exhaustive grid search at `pitch`,
/// then `refine_rounds` local refinements that shrink the pitch 10x around
/// the incumbent. Returns the best point and value.
pub fn refined_grid_min_simplex3(
    f: impl Fn(&DVector<f64>) -> f64,
    pitch: f64,
    refine_rounds: usize,
) -> (DVector<f64>, f64) {
    let mut best_l1 = 1.0 / 3.0;
    let mut best_l2 = 1.0 / 3.0;
    let mut best_val = f64::INFINITY;

    let eval = |l1: f64, l2: f64, best: &mut (f64, f64, f64)| {
        let l3 = 1.0 - l1 - l2;
        if l3 < -1e-12 {
            return;
        }
        let lam = DVector::from_row_slice(&[l1, l2, l3.max(0.0)]);
        let v = f(&lam);
        if v < best.2 {
            *best = (l1, l2, v);
        }
    };

    // Coarse pass over the whole simplex.
    let mut best = (best_l1, best_l2, best_val);
    let steps = (1.0 / pitch).round() as usize;
    for i in 0..=steps {
        let l1 = i as f64 * pitch;
        for j in 0..=(steps - i) {
            let l2 = j as f64 * pitch;
            eval(l1, l2, &mut best);
        }
    }

    // Local refinement around the incumbent.
    let mut width = pitch;
    for _ in 0..refine_rounds {
        let center = (best.0, best.1);
        let fine = width / 10.0;
        for i in -20i64..=20 {
            for j in -20i64..=20 {
                let l1 = center.0 + i as f64 * fine;
                let l2 = center.1 + j as f64 * fine;
                if (0.0..=1.0).contains(&l1) && (0.0..=1.0).contains(&l2) {
                    eval(l1, l2, &mut best);
                }
            }
        }
        width = fine;
    }

    best_l1 = best.0;
    best_l2 = best.1;
    best_val = best.2;
    let lam = DVector::from_row_slice(&[best_l1, best_l2, (1.0 - best_l1 - best_l2).max(0.0)]);
    (lam, best_val)
}

/// Grid oracle for the three-objective PS measure `min ||G lambda||`.
pub fn ps_measure_grid_simplex3(g: &DMatrix<f64>, pitch: f64, refine_rounds: usize) -> f64 {
    assert_eq!(g.ncols(), 3, "grid oracle is specific to M = 3");
    let (_, value) = refined_grid_min_simplex3(|lam| (g * lam).norm(), pitch, refine_rounds);
    value
}
