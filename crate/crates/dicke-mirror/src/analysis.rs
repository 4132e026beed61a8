//! Burst observables: sub-grid peak location, full width at half maximum,
//! photon-count quadrature, and log-log power-law fits of how those
//! observables scale with the emitter count.
//!
//! All extraction works on the magnitude of the samples, so attractive
//! (negative) potentials and positive intensities go through the same path.

use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// Location and size of the global extremum of |values|.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub t_peak: f64,
    /// Magnitude of the series at the extremum.
    pub height: f64,
    /// Set when the discrete maximum sits on the first or last sample; no
    /// sub-grid refinement is possible there.
    pub at_boundary: bool,
}

/// Full width at half maximum of |values|.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Width {
    pub fwhm: f64,
    /// Set when the rise above half maximum happened before the first
    /// sample; the returned width then starts at the grid origin.
    pub partial_left: bool,
}

/// Least-squares line through (ln n, ln value).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub log_prefactor: f64,
    pub r_squared: f64,
}

fn discrete_argmax(values: &[f64]) -> Option<usize> {
    let mut best = 0usize;
    let mut best_v = 0.0f64;
    for (i, v) in values.iter().enumerate() {
        let m = v.abs();
        if m > best_v {
            best_v = m;
            best = i;
        }
    }
    if best_v == 0.0 {
        None
    } else {
        Some(best)
    }
}

/// Global extremum of |values| with parabolic sub-grid refinement through
/// the three samples around the discrete maximum. Endpoint maxima are
/// returned unrefined with the boundary flag set.
pub fn peak(series: &TimeSeries) -> Result<Peak> {
    let values = series.values();
    let times = series.times();
    let i = discrete_argmax(values).ok_or(Error::DegenerateSeries)?;
    if i == 0 || i == values.len() - 1 {
        return Ok(Peak {
            t_peak: times[i],
            height: values[i].abs(),
            at_boundary: true,
        });
    }
    let (y0, y1, y2) = (values[i - 1].abs(), values[i].abs(), values[i + 1].abs());
    let denom = y0 - 2.0 * y1 + y2;
    if denom == 0.0 {
        // flat triple; the discrete sample is as good as it gets
        return Ok(Peak {
            t_peak: times[i],
            height: y1,
            at_boundary: false,
        });
    }
    let delta = 0.5 * (y0 - y2) / denom;
    Ok(Peak {
        t_peak: times[i] + delta * series.dt(),
        height: y1 - 0.25 * (y0 - y2) * delta,
        at_boundary: false,
    })
}

/// Width between the half-maximum crossings of |values|, found by linear
/// interpolation between adjacent samples around the discrete maximum.
pub fn fwhm(series: &TimeSeries) -> Result<Width> {
    let values = series.values();
    let times = series.times();
    let center = discrete_argmax(values).ok_or(Error::DegenerateSeries)?;
    let half = 0.5 * peak(series)?.height;

    let cross = |a: usize, b: usize| {
        let (va, vb) = (values[a].abs(), values[b].abs());
        times[a] + (times[b] - times[a]) * (half - va) / (vb - va)
    };

    // walk left from the maximum to the last sample below half
    let mut left = None;
    for i in (0..center).rev() {
        if values[i].abs() < half {
            left = Some(cross(i, i + 1));
            break;
        }
    }
    let mut right = None;
    for (i, v) in values.iter().enumerate().skip(center + 1) {
        if v.abs() < half {
            right = Some(cross(i - 1, i));
            break;
        }
    }
    let right = right.ok_or(Error::NoHalfMaxCrossing)?;
    match left {
        Some(l) => Ok(Width {
            fwhm: right - l,
            partial_left: false,
        }),
        None => Ok(Width {
            fwhm: right - times[0],
            partial_left: true,
        }),
    }
}

/// Fit value = C n^p by least squares in log-log space. Requires at least
/// four strictly positive points.
pub fn power_law_fit(points: &[(f64, f64)]) -> Result<PowerLawFit> {
    if points.len() < 4 {
        return Err(Error::TooFewFitPoints { got: points.len() });
    }
    for &(n, v) in points {
        if !(n > 0.0 && v > 0.0 && n.is_finite() && v.is_finite()) {
            return Err(Error::NonPositiveFitValue { n, value: v });
        }
    }
    let pts: Vec<(f64, f64)> = points.iter().map(|&(n, v)| (n.ln(), v.ln())).collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::DegenerateSeries);
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = pts
        .iter()
        .map(|p| (p.1 - (intercept + slope * p.0)).powi(2))
        .sum();
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let r_squared = if ss_tot == 0.0 {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Ok(PowerLawFit {
        exponent: slope,
        log_prefactor: intercept,
        r_squared,
    })
}

/// Trapezoidal integral of the series; for an emission-rate input this
/// counts the photons released up to the end of the grid.
pub fn total_photons(series: &TimeSeries) -> f64 {
    let v = series.values();
    let inner: f64 = v.iter().sum::<f64>() - 0.5 * (v[0] + v[v.len() - 1]);
    inner * series.dt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn series_from(f: impl Fn(f64) -> f64, t0: f64, t1: f64, n: usize) -> TimeSeries {
        let times: Vec<f64> = (0..n)
            .map(|i| t0 + (t1 - t0) * i as f64 / (n - 1) as f64)
            .collect();
        let values: Vec<f64> = times.iter().map(|&t| f(t)).collect();
        TimeSeries::new(times, values, "test").unwrap()
    }

    #[test]
    fn gaussian_peak_is_refined_below_grid_resolution() {
        let s = series_from(|t| (-(t - 3.0) * (t - 3.0)).exp(), 0.0, 6.0, 121); // step 0.05
        let p = peak(&s).unwrap();
        assert!(!p.at_boundary);
        assert!((p.t_peak - 3.0).abs() < 1e-3, "t_peak {}", p.t_peak);
        assert!((p.height - 1.0).abs() < 1e-4, "height {}", p.height);
    }

    #[test]
    fn decaying_series_peaks_at_the_boundary() {
        let s = series_from(|t| (-t).exp(), 0.0, 5.0, 101);
        let p = peak(&s).unwrap();
        assert!(p.at_boundary);
        assert_eq!(p.t_peak, 0.0);
        assert_eq!(p.height, 1.0);
    }

    #[test]
    fn negative_valued_series_peaks_on_magnitude() {
        let s = series_from(|t| -(-(t - 2.0) * (t - 2.0) / 0.5).exp(), 0.0, 4.0, 81);
        let p = peak(&s).unwrap();
        assert!((p.t_peak - 2.0).abs() < 1e-3);
        assert!((p.height - 1.0).abs() < 1e-4);
        assert!(p.height > 0.0, "height is a magnitude");
    }

    #[test]
    fn all_zero_series_is_degenerate() {
        let s = series_from(|_| 0.0, 0.0, 1.0, 20);
        assert!(matches!(peak(&s), Err(Error::DegenerateSeries)));
        assert!(matches!(fwhm(&s), Err(Error::DegenerateSeries)));
    }

    #[test]
    fn triangle_width_is_exact() {
        let tri = |t: f64| {
            if t <= 5.0 {
                t / 5.0
            } else {
                (10.0 - t) / 5.0
            }
        };
        let s = series_from(tri, 0.0, 10.0, 41); // step 0.25, apex on-grid
        let w = fwhm(&s).unwrap();
        assert!(!w.partial_left);
        assert_relative_eq!(w.fwhm, 5.0, max_relative = 1e-12);
    }

    #[test]
    fn gaussian_width_matches_analytic_value() {
        let s = series_from(|t| (-(t - 5.0) * (t - 5.0) / 2.0).exp(), 0.0, 10.0, 501);
        let w = fwhm(&s).unwrap();
        let exact = 2.0 * (2.0 * 2f64.ln()).sqrt();
        assert!((w.fwhm - exact).abs() < 1e-3, "fwhm {}", w.fwhm);
        assert!(w.fwhm >= 2.0 * s.dt());
    }

    #[test]
    fn half_gaussian_reports_partial_left_width() {
        let s = series_from(|t| (-t * t / 2.0).exp(), 0.0, 5.0, 251);
        let w = fwhm(&s).unwrap();
        assert!(w.partial_left);
        let right = (2.0 * 2f64.ln()).sqrt();
        assert!((w.fwhm - right).abs() < 1e-3, "fwhm {}", w.fwhm);
    }

    #[test]
    fn truncated_series_has_no_crossing() {
        let s = series_from(|t| (-t * t / 2.0).exp(), 0.0, 0.5, 20);
        assert!(matches!(fwhm(&s), Err(Error::NoHalfMaxCrossing)));
    }

    #[test]
    fn peak_and_width_are_invariant_under_value_scaling() {
        let s = series_from(|t| (-(t - 4.0) * (t - 4.0)).exp(), 0.0, 8.0, 161);
        let scaled = s.scaled(7.5, "test");
        let (p, ps) = (peak(&s).unwrap(), peak(&scaled).unwrap());
        assert_relative_eq!(p.t_peak, ps.t_peak, max_relative = 1e-12);
        assert_relative_eq!(7.5 * p.height, ps.height, max_relative = 1e-12);
        let (w, ws) = (fwhm(&s).unwrap(), fwhm(&scaled).unwrap());
        assert_relative_eq!(w.fwhm, ws.fwhm, max_relative = 1e-12);
    }

    #[test]
    fn power_law_recovers_synthetic_exponents() {
        let quad: Vec<(f64, f64)> = (1..=10).map(|n| (n as f64, 7.0 * (n * n) as f64)).collect();
        let fit = power_law_fit(&quad).unwrap();
        assert_relative_eq!(fit.exponent, 2.0, max_relative = 1e-12);
        assert_relative_eq!(fit.log_prefactor, 7f64.ln(), max_relative = 1e-9);
        assert_relative_eq!(fit.r_squared, 1.0, epsilon = 1e-12);

        let inv: Vec<(f64, f64)> = (2..=12).map(|n| (n as f64, 3.0 / n as f64)).collect();
        let fit = power_law_fit(&inv).unwrap();
        assert_relative_eq!(fit.exponent, -1.0, max_relative = 1e-12);
    }

    #[test]
    fn power_law_input_validation() {
        assert!(matches!(
            power_law_fit(&[(1.0, 1.0), (2.0, 2.0), (3.0, 3.0)]),
            Err(Error::TooFewFitPoints { got: 3 })
        ));
        assert!(matches!(
            power_law_fit(&[(1.0, 1.0), (2.0, -2.0), (3.0, 3.0), (4.0, 4.0)]),
            Err(Error::NonPositiveFitValue { .. })
        ));
        assert!(power_law_fit(&[(2.0, 1.0), (2.0, 2.0), (2.0, 3.0), (2.0, 4.0)]).is_err());
    }

    #[test]
    fn trapezoid_counts_photons() {
        let s = series_from(|t| (-t).exp(), 0.0, 20.0, 2001);
        let total = total_photons(&s);
        assert!((total - 1.0).abs() < 1e-4, "integral {total}");
    }
}
