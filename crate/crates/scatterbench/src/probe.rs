//! Matched linear evaluation: one declared probe family applied
//! identically to every feature representation.
//!
//! The probe is one-vs-rest ridge-regularized least squares on real
//! feature vectors. "Matched" means the split (even shot indices train,
//! odd test), the ridge parameter and the global feature scaling are
//! identical across representations, so accuracy differences reflect
//! the representations and not the evaluation.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Fixed ridge parameter of the declared probe family.
pub const DEFAULT_RIDGE: f64 = 1e-3;

#[derive(Clone, Debug)]
pub struct LinearProbe {
    /// (d + 1) x classes; last row is the bias.
    weights: DMatrix<f64>,
    /// Global feature scale fitted on the training split.
    scale: f64,
}

impl LinearProbe {
    pub fn classes(&self) -> usize {
        self.weights.ncols()
    }

    /// Per-class decision scores for one raw feature row.
    pub fn decision_values(&self, features: &[f64]) -> Vec<f64> {
        let d = self.weights.nrows() - 1;
        assert_eq!(features.len(), d, "feature length mismatch");
        (0..self.weights.ncols())
            .map(|c| {
                let mut acc = self.weights[(d, c)];
                for (k, &x) in features.iter().enumerate() {
                    acc += self.weights[(k, c)] * x * self.scale;
                }
                acc
            })
            .collect()
    }

    /// Argmax class, ties broken towards the lower index.
    pub fn predict(&self, features: &[f64]) -> usize {
        let scores = self.decision_values(features);
        let mut best = 0;
        for (c, &s) in scores.iter().enumerate() {
            if s > scores[best] {
                best = c;
            }
        }
        best
    }

    pub fn accuracy(&self, features: &DMatrix<f64>, labels: &[usize]) -> f64 {
        let mut correct = 0usize;
        for (r, &label) in labels.iter().enumerate() {
            let row: Vec<f64> = features.row(r).iter().cloned().collect();
            if self.predict(&row) == label {
                correct += 1;
            }
        }
        correct as f64 / labels.len() as f64
    }
}

/// Fit the one-vs-rest ridge probe on `(features, labels)`.
///
/// Features are rescaled so the mean squared row norm is one (fitted
/// here, reapplied at prediction), then a bias column is appended and
/// `(X^T X + ridge I) W = X^T Y` solved for one-hot targets, in the
/// dual form when samples are fewer than features.
pub fn train_probe(
    features: &DMatrix<f64>,
    labels: &[usize],
    n_classes: usize,
    ridge: f64,
) -> Result<LinearProbe> {
    let n = features.nrows();
    let d = features.ncols();
    if n == 0 || labels.len() != n {
        return Err(Error::invalid("probe needs one label per sample"));
    }
    if ridge <= 0.0 {
        return Err(Error::invalid("ridge must be positive"));
    }
    if n_classes < 2 {
        return Err(Error::invalid("probe needs at least 2 classes"));
    }
    if labels.iter().any(|&l| l >= n_classes) {
        return Err(Error::invalid("label out of range"));
    }
    let distinct = {
        let mut seen = vec![false; n_classes];
        for &l in labels {
            seen[l] = true;
        }
        seen.iter().filter(|&&s| s).count()
    };
    if distinct < 2 {
        return Err(Error::invalid(
            "degenerate training set: fewer than 2 classes present",
        ));
    }

    let mean_sq: f64 = (0..n)
        .map(|r| features.row(r).iter().map(|x| x * x).sum::<f64>())
        .sum::<f64>()
        / n as f64;
    let scale = if mean_sq > 0.0 {
        1.0 / mean_sq.sqrt()
    } else {
        1.0
    };

    let mut x = DMatrix::zeros(n, d + 1);
    for r in 0..n {
        for c in 0..d {
            x[(r, c)] = features[(r, c)] * scale;
        }
        x[(r, d)] = 1.0;
    }
    let mut y = DMatrix::zeros(n, n_classes);
    for (r, &label) in labels.iter().enumerate() {
        y[(r, label)] = 1.0;
    }

    let weights = if d < n {
        let mut gram = x.transpose() * &x;
        for k in 0..d + 1 {
            gram[(k, k)] += ridge;
        }
        let chol = gram
            .cholesky()
            .ok_or_else(|| Error::invalid("ridge system not positive definite"))?;
        chol.solve(&(x.transpose() * &y))
    } else {
        // Dual form: W = X^T (X X^T + ridge I)^{-1} Y.
        let mut gram = &x * x.transpose();
        for k in 0..n {
            gram[(k, k)] += ridge;
        }
        let chol = gram
            .cholesky()
            .ok_or_else(|| Error::invalid("ridge system not positive definite"))?;
        x.transpose() * chol.solve(&y)
    };

    Ok(LinearProbe { weights, scale })
}

/// Train on even shot indices, report accuracy on odd ones.
pub fn train_test_accuracy(
    features: &DMatrix<f64>,
    labels: &[usize],
    shot_index: &[usize],
    n_classes: usize,
    ridge: f64,
) -> Result<f64> {
    let n = features.nrows();
    if labels.len() != n || shot_index.len() != n {
        return Err(Error::invalid("rows, labels and shot indices must align"));
    }
    let train_rows: Vec<usize> = (0..n).filter(|&r| shot_index[r].is_multiple_of(2)).collect();
    let test_rows: Vec<usize> = (0..n).filter(|&r| shot_index[r] % 2 == 1).collect();
    if train_rows.is_empty() || test_rows.is_empty() {
        return Err(Error::invalid(
            "shot split produced an empty train or test set (need >= 2 shots)",
        ));
    }
    let select = |rows: &[usize]| -> (DMatrix<f64>, Vec<usize>) {
        let mut m = DMatrix::zeros(rows.len(), features.ncols());
        let mut l = Vec::with_capacity(rows.len());
        for (i, &r) in rows.iter().enumerate() {
            for c in 0..features.ncols() {
                m[(i, c)] = features[(r, c)];
            }
            l.push(labels[r]);
        }
        (m, l)
    };
    let (x_train, y_train) = select(&train_rows);
    let (x_test, y_test) = select(&test_rows);
    let probe = train_probe(&x_train, &y_train, n_classes, ridge)?;
    Ok(probe.accuracy(&x_test, &y_test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;
    use rand::Rng;

    #[test]
    fn separable_clouds_reach_full_accuracy() {
        let mut rng = SeededRng::new(1, "clouds");
        let n_per = 40;
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for class in 0..2 {
            let center = if class == 0 { -2.0 } else { 2.0 };
            for _ in 0..n_per {
                rows.push(vec![
                    center + rng.gen::<f64>() - 0.5,
                    rng.gen::<f64>() - 0.5,
                ]);
                labels.push(class);
            }
        }
        let flat: Vec<f64> = rows.iter().flatten().cloned().collect();
        let x = DMatrix::from_row_slice(rows.len(), 2, &flat);
        let probe = train_probe(&x, &labels, 2, DEFAULT_RIDGE).unwrap();
        assert_eq!(probe.accuracy(&x, &labels), 1.0);
    }

    #[test]
    fn permuted_labels_sit_near_chance() {
        let mut rng = SeededRng::new(2, "null");
        let n = 128;
        let d = 6;
        let flat: Vec<f64> = (0..n * d).map(|_| rng.gen::<f64>() - 0.5).collect();
        let x = DMatrix::from_row_slice(n, d, &flat);
        let labels: Vec<usize> = (0..n).map(|_| rng.gen_range(0..2usize)).collect();
        let shots: Vec<usize> = (0..n).collect();
        let acc = train_test_accuracy(&x, &labels, &shots, 2, DEFAULT_RIDGE).unwrap();
        assert!(
            acc < 0.72,
            "random labels should not be learnable, got {acc}"
        );
    }

    #[test]
    fn duplicated_columns_with_doubled_ridge_match() {
        let mut rng = SeededRng::new(3, "dup");
        let n = 60;
        let d = 5;
        let flat: Vec<f64> = (0..n * d).map(|_| rng.gen::<f64>() - 0.5).collect();
        let x = DMatrix::from_row_slice(n, d, &flat);
        let labels: Vec<usize> = (0..n).map(|r| (x[(r, 0)] + x[(r, 2)] > 0.0) as usize).collect();

        let mut dup_flat = Vec::with_capacity(n * 2 * d);
        for r in 0..n {
            for c in 0..d {
                dup_flat.push(x[(r, c)]);
            }
            for c in 0..d {
                dup_flat.push(x[(r, c)]);
            }
        }
        let x_dup = DMatrix::from_row_slice(n, 2 * d, &dup_flat);

        // Duplicating every column doubles the raw Gram, but the rms
        // normalization shrinks the scale by sqrt(2), so the effective
        // regularization matches at the same ridge and the decision
        // values coincide exactly.
        let probe_a = train_probe(&x, &labels, 2, DEFAULT_RIDGE).unwrap();
        let probe_b = train_probe(&x_dup, &labels, 2, DEFAULT_RIDGE).unwrap();
        let acc_a = probe_a.accuracy(&x, &labels);
        let acc_b = probe_b.accuracy(&x_dup, &labels);
        assert_eq!(acc_a, acc_b);
        for r in 0..n {
            let row: Vec<f64> = x.row(r).iter().cloned().collect();
            let row_dup: Vec<f64> = x_dup.row(r).iter().cloned().collect();
            let sa = probe_a.decision_values(&row);
            let sb = probe_b.decision_values(&row_dup);
            for (va, vb) in sa.iter().zip(&sb) {
                assert!((va - vb).abs() < 1e-9, "scores diverge: {va} vs {vb}");
            }
        }
    }

    #[test]
    fn primal_and_dual_solutions_agree() {
        let mut rng = SeededRng::new(4, "primal-dual");
        let n = 30;
        let d = 30; // d + 1 > n forces the dual path
        let flat: Vec<f64> = (0..n * d).map(|_| rng.gen::<f64>() - 0.5).collect();
        let x = DMatrix::from_row_slice(n, d, &flat);
        let labels: Vec<usize> = (0..n).map(|r| r % 3).collect();
        let dual = train_probe(&x, &labels, 3, 1e-2).unwrap();
        let mut tall_flat = Vec::new();
        for r in 0..n {
            for c in 0..d {
                tall_flat.push(x[(r, c)]);
            }
        }
        let tall = DMatrix::from_row_slice(n, d, &tall_flat);
        let mut extended = DMatrix::zeros(2 * n, d);
        extended.view_mut((0, 0), (n, d)).copy_from(&tall);
        extended.view_mut((n, 0), (n, d)).copy_from(&tall);
        let mut ext_labels = labels.clone();
        ext_labels.extend_from_slice(&labels);
        let primal = train_probe(&extended, &ext_labels, 3, 2e-2).unwrap();
        // Doubling every sample doubles the Gram; doubled ridge matches.
        for r in 0..n {
            let row: Vec<f64> = x.row(r).iter().cloned().collect();
            let sd = dual.decision_values(&row);
            let sp = primal.decision_values(&row);
            for (a, b) in sd.iter().zip(&sp) {
                assert!((a - b).abs() < 1e-8, "dual {a} vs primal {b}");
            }
        }
    }

    #[test]
    fn degenerate_single_class_is_rejected() {
        let x = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.5, 0.2, 0.1, 0.3, 0.9, 0.8]);
        let labels = vec![1usize; 4];
        assert!(train_probe(&x, &labels, 2, DEFAULT_RIDGE).is_err());
    }
}
