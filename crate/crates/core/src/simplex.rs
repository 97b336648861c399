//! Euclidean projection onto the probability simplex.
//!
//! Every dynamic-weight update ends with this projection, so it has to be
//! exact and deterministic: sort-then-threshold in O(M log M), with sorting
//! ties broken by index so identical inputs give bit-identical outputs on
//! every platform.

use nalgebra::DVector;

use crate::error::{MolError, Result};
use crate::types::WeightVector;

/// Exact Euclidean projection of `v` onto the simplex `{w >= 0, sum w = 1}`.
pub fn project_simplex(v: &DVector<f64>) -> Result<WeightVector> {
    let m = v.len();
    if m == 0 {
        return Err(MolError::InvalidDimension("projection needs M >= 1".into()));
    }
    if !v.iter().all(|x| x.is_finite()) {
        return Err(MolError::NonFiniteInput);
    }
    if m == 1 {
        return Ok(WeightVector::new_unchecked(DVector::from_element(1, 1.0)));
    }

    // Sort indices by value descending, index ascending on ties.
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| v[b].partial_cmp(&v[a]).unwrap().then(a.cmp(&b)));

    // Largest k such that v_(k) - (sum of top k - 1)/k > 0.
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &i) in order.iter().enumerate() {
        cumsum += v[i];
        let candidate = (cumsum - 1.0) / (k + 1) as f64;
        if v[i] - candidate > 0.0 {
            theta = candidate;
        } else {
            break;
        }
    }

    let projected = DVector::from_iterator(m, v.iter().map(|&x| (x - theta).max(0.0)));
    Ok(WeightVector::new_unchecked(projected))
}

/// The uniform weights `(1/M, ..., 1/M)`.
pub fn uniform_weights(m: usize) -> Result<WeightVector> {
    if m == 0 {
        return Err(MolError::InvalidDimension(
            "invalid dimension: M must be >= 1".into(),
        ));
    }
    Ok(WeightVector::new_unchecked(DVector::from_element(
        m,
        1.0 / m as f64,
    )))
}
