//! Gaussian-process regression from positions to one velocity channel, and
//! the velocity field built from two such regressions.

mod field;

pub use field::{build_field, FieldBuild, MaskPolicy};

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::Point;

/// Hyperparameters of a squared-exponential GP with white observation noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpHyper {
    /// σ_f², (m/s)².
    pub signal_variance: f64,
    /// ℓ, meters.
    pub length_scale: f64,
    /// σ_n², (m/s)².
    pub noise_variance: f64,
}

impl GpHyper {
    /// σ_f = 2 m/s, ℓ = 2 cells, σ_n = 0.2 m/s.
    pub fn for_cell_size(cell_size: f64) -> Self {
        Self {
            signal_variance: 4.0,
            length_scale: 2.0 * cell_size,
            noise_variance: 0.04,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.signal_variance) {
            return Err(invalid("signal_variance", format!("{}", self.signal_variance)));
        }
        if !positive(self.length_scale) {
            return Err(invalid("length_scale", format!("{}", self.length_scale)));
        }
        if !positive(self.noise_variance) {
            return Err(invalid("noise_variance", format!("{}", self.noise_variance)));
        }
        Ok(())
    }

    /// k(a, b) = σ_f² exp(−‖a − b‖² / 2ℓ²)
    #[inline]
    pub fn kernel(&self, a: &Point, b: &Point) -> f64 {
        let d2 = (a - b).norm_squared();
        self.signal_variance * (-0.5 * d2 / (self.length_scale * self.length_scale)).exp()
    }
}

/// Fitted single-output GP.
#[derive(Clone, Debug)]
pub struct GpModel {
    hyper: GpHyper,
    inputs: Vec<Point>,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
}

impl GpModel {
    pub fn fit(positions: &[Point], targets: &[f64], hyper: GpHyper) -> Result<Self> {
        hyper.validate()?;
        if positions.is_empty() {
            return Err(Error::InsufficientSamples { needed: 1, got: 0 });
        }
        if positions.len() != targets.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} positions vs {} targets",
                positions.len(),
                targets.len()
            )));
        }
        if positions.iter().any(|p| !(p.x.is_finite() && p.y.is_finite()))
            || targets.iter().any(|t| !t.is_finite())
        {
            return Err(invalid("training data", "contains non-finite values"));
        }
        let n = positions.len();
        let gram = DMatrix::from_fn(n, n, |i, j| {
            let k = hyper.kernel(&positions[i], &positions[j]);
            if i == j {
                k + hyper.noise_variance
            } else {
                k
            }
        });
        let chol = gram.cholesky().ok_or(Error::Factorization { points: n })?;
        let alpha = chol.solve(&DVector::from_column_slice(targets));
        Ok(Self {
            hyper,
            inputs: positions.to_vec(),
            chol,
            alpha,
        })
    }

    /// Same inputs and factorization, new targets.
    pub fn with_targets(&self, targets: &[f64]) -> Result<Self> {
        if targets.len() != self.inputs.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} targets for {} training inputs",
                targets.len(),
                self.inputs.len()
            )));
        }
        let alpha = self.chol.solve(&DVector::from_column_slice(targets));
        Ok(Self {
            alpha,
            ..self.clone()
        })
    }

    pub fn hyper(&self) -> &GpHyper {
        &self.hyper
    }

    pub fn n_train(&self) -> usize {
        self.inputs.len()
    }

    /// Posterior `(mean, variance)` of the latent function at `x`.
    pub fn predict_one(&self, x: &Point) -> (f64, f64) {
        let k_star =
            DVector::from_iterator(self.inputs.len(), self.inputs.iter().map(|p| self.hyper.kernel(p, x)));
        let mean = k_star.dot(&self.alpha);
        let v = self
            .chol
            .l_dirty()
            .solve_lower_triangular(&k_star)
            .expect("cholesky factor has a positive diagonal");
        let prior = self.hyper.signal_variance;
        let var = (prior - v.norm_squared()).clamp(f64::MIN_POSITIVE, prior);
        (mean, var)
    }

    /// Posterior `(mean, variance)` per query point. Points are independent,
    /// so the parallel evaluation returns exactly the sequential result.
    pub fn predict(&self, query: &[Point]) -> Vec<(f64, f64)> {
        query.par_iter().map(|x| self.predict_one(x)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hyper() -> GpHyper {
        GpHyper {
            signal_variance: 4.0,
            length_scale: 2.0,
            noise_variance: 0.04,
        }
    }

    #[test]
    fn empty_training_set_is_an_error() {
        assert!(GpModel::fit(&[], &[], hyper()).is_err());
    }

    #[test]
    fn mismatched_lengths_are_an_error() {
        let err = GpModel::fit(&[Point::zeros()], &[1.0, 2.0], hyper()).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch(_)));
    }

    #[test]
    fn non_positive_hyperparameters_are_rejected() {
        for h in [
            GpHyper { signal_variance: 0.0, ..hyper() },
            GpHyper { length_scale: -1.0, ..hyper() },
            GpHyper { noise_variance: 0.0, ..hyper() },
        ] {
            assert!(GpModel::fit(&[Point::zeros()], &[1.0], h).is_err());
        }
    }

    #[test]
    fn interpolates_single_point_as_noise_vanishes() {
        let h = GpHyper { noise_variance: 1e-12, ..hyper() };
        let m = GpModel::fit(&[Point::zeros()], &[1.0], h).unwrap();
        let (mean, var) = m.predict_one(&Point::zeros());
        assert!((mean - 1.0).abs() < 1e-9);
        assert!(var < 1e-9);
    }

    #[test]
    fn reverts_to_prior_far_away() {
        let h = hyper();
        let pts = [Point::new(0.0, 0.0), Point::new(1.0, 0.5), Point::new(-0.5, 1.0)];
        let m = GpModel::fit(&pts, &[1.0, -0.5, 2.0], h).unwrap();
        let far = Point::new(100.0 * h.length_scale, 0.0);
        let (mean, var) = m.predict_one(&far);
        assert!(mean.abs() < 1e-6);
        assert!((var - h.signal_variance).abs() < 1e-6);
    }

    #[test]
    fn evidence_reduces_variance() {
        let h = hyper();
        let pts = [Point::new(0.0, 0.0), Point::new(0.5, 0.0)];
        let m = GpModel::fit(&pts, &[1.0, 1.0], h).unwrap();
        let (_, at_data) = m.predict_one(&pts[0]);
        let (_, away) = m.predict_one(&Point::new(0.0, 3.0 * h.length_scale));
        assert!(at_data <= away);
        assert!(at_data > 0.0 && away <= h.signal_variance);
    }

    #[test]
    fn duplicate_inputs_still_factor() {
        let pts = vec![Point::new(1.0, 1.0); 50];
        let m = GpModel::fit(&pts, &vec![0.7; 50], hyper()).unwrap();
        let (mean, _) = m.predict_one(&Point::new(1.0, 1.0));
        // 50 coincident observations: mean = 50 σ_f² / (50 σ_f² + σ_n²) · 0.7
        let expected = 50.0 * 4.0 / (50.0 * 4.0 + 0.04) * 0.7;
        assert!((mean - expected).abs() < 1e-10);
    }

    #[test]
    fn with_targets_matches_fresh_fit() {
        let pts = [Point::new(0.0, 0.0), Point::new(1.0, 2.0), Point::new(3.0, -1.0)];
        let a = GpModel::fit(&pts, &[1.0, 2.0, 3.0], hyper()).unwrap();
        let b = a.with_targets(&[-1.0, 0.0, 0.5]).unwrap();
        let c = GpModel::fit(&pts, &[-1.0, 0.0, 0.5], hyper()).unwrap();
        let q = Point::new(0.7, 0.3);
        assert_eq!(b.predict_one(&q), c.predict_one(&q));
    }
}
