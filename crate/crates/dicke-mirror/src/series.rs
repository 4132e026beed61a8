//! Uniformly sampled time series, the common currency between the solvers
//! and the peak/width analysis.

use crate::error::{Error, Result};

/// Minimum sample count for any series handed to the analysis layer; peak
/// refinement and width interpolation need a few points per feature.
pub const MIN_SAMPLES: usize = 16;

/// A sampled observable on a uniform time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    times: Vec<f64>,
    values: Vec<f64>,
    unit: String,
}

impl TimeSeries {
    /// Wrap a sampled signal. The grid must be uniform and strictly
    /// increasing; uniformity is checked against the mean spacing with a
    /// tolerance proportional to the span, so grids built by repeated
    /// addition still pass.
    pub fn new(times: Vec<f64>, values: Vec<f64>, unit: impl Into<String>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::SizeMismatch {
                left_name: "times",
                left: times.len(),
                right_name: "values",
                right: values.len(),
            });
        }
        if times.len() < MIN_SAMPLES {
            return Err(Error::TooFewSamples {
                got: times.len(),
                need: MIN_SAMPLES,
            });
        }
        let span = times[times.len() - 1] - times[0];
        if !(span > 0.0) {
            return Err(Error::NonUniformGrid);
        }
        let dt = span / (times.len() - 1) as f64;
        let tol = 1e-9 * span.max(dt);
        for (i, w) in times.windows(2).enumerate() {
            let step = w[1] - w[0];
            if !(step > 0.0) || (step - dt).abs() > tol {
                let _ = i;
                return Err(Error::NonUniformGrid);
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::DegenerateSeries);
        }
        Ok(TimeSeries {
            times,
            values,
            unit: unit.into(),
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn unit(&self) -> &str {
        &self.unit
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dt(&self) -> f64 {
        (self.times[self.times.len() - 1] - self.times[0]) / (self.times.len() - 1) as f64
    }

    /// Same grid, values multiplied by a constant, relabeled. Used to
    /// express an emission rate in units of the bulk single-emitter rate.
    pub fn scaled(&self, factor: f64, unit: impl Into<String>) -> TimeSeries {
        TimeSeries {
            times: self.times.clone(),
            values: self.values.iter().map(|v| v * factor).collect(),
            unit: unit.into(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize, dt: f64) -> Vec<f64> {
        (0..n).map(|i| i as f64 * dt).collect()
    }

    #[test]
    fn accepts_uniform_grid_built_by_multiplication() {
        let t = grid(100, 1.7e-9);
        let v = vec![1.0; 100];
        let s = TimeSeries::new(t, v, "1/s").unwrap();
        assert_eq!(s.len(), 100);
        assert!((s.dt() - 1.7e-9).abs() < 1e-24);
        assert_eq!(s.unit(), "1/s");
    }

    #[test]
    fn accepts_grid_built_by_repeated_addition() {
        let mut t = Vec::with_capacity(64);
        let mut acc = 0.0;
        for _ in 0..64 {
            t.push(acc);
            acc += 0.1; // not exactly representable, spacing drifts in ulps
        }
        assert!(TimeSeries::new(t, vec![0.0; 64], "J").is_ok());
    }

    #[test]
    fn rejects_short_nonuniform_and_mismatched_input() {
        assert!(matches!(
            TimeSeries::new(grid(8, 1.0), vec![0.0; 8], ""),
            Err(Error::TooFewSamples { .. })
        ));
        assert!(matches!(
            TimeSeries::new(grid(20, 1.0), vec![0.0; 19], ""),
            Err(Error::SizeMismatch { .. })
        ));
        let mut t = grid(20, 1.0);
        t[10] += 0.5;
        assert!(matches!(
            TimeSeries::new(t, vec![0.0; 20], ""),
            Err(Error::NonUniformGrid)
        ));
        let mut back = grid(20, 1.0);
        back[5] = back[6] + 1.0;
        assert!(TimeSeries::new(back, vec![0.0; 20], "").is_err());
    }

    #[test]
    fn rejects_non_finite_values() {
        let mut v = vec![1.0; 20];
        v[3] = f64::NAN;
        assert!(matches!(
            TimeSeries::new(grid(20, 1.0), v, ""),
            Err(Error::DegenerateSeries)
        ));
    }

    #[test]
    fn scaling_relabels_and_multiplies() {
        let s = TimeSeries::new(grid(16, 2.0), (0..16).map(|i| i as f64).collect(), "1/s").unwrap();
        let r = s.scaled(0.5, "dimensionless");
        assert_eq!(r.unit(), "dimensionless");
        assert_eq!(r.values()[10], 5.0);
        assert_eq!(r.times(), s.times());
    }
}
