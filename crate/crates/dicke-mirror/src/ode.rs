//! Explicit Dormand-Prince 5(4) integrator with free interpolation.
//!
//! The solver adapts its internal step from the embedded fourth-order error
//! estimate and reports states on the caller's output grid through quartic
//! dense output, so tightening the grid never changes the computed solution,
//! only where it is sampled. Right-hand sides are plain closures over f64
//! slices; complex systems pack re/im pairs.
//!
//! Runge-Kutta steps are affine combinations of stage derivatives, so any
//! linear invariant of the flow (total population, trace) is conserved to
//! roundoff regardless of tolerance. Tests rely on that.

use crate::error::{Error, Result};

/// Tolerances and step-count guard for one integration.
#[derive(Debug, Clone, Copy)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-9,
            atol: 1e-12,
            max_steps: 1_000_000,
        }
    }
}

// Butcher tableau, Dormand-Prince 5(4)
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A2: [f64; 1] = [0.2];
const A3: [f64; 2] = [3.0 / 40.0, 9.0 / 40.0];
const A4: [f64; 3] = [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0];
const A5: [f64; 4] = [
    19372.0 / 6561.0,
    -25360.0 / 2187.0,
    64448.0 / 6561.0,
    -212.0 / 729.0,
];
const A6: [f64; 5] = [
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
];
// fifth-order weights; also the last stage row (first-same-as-last)
const A7: [f64; 6] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
];
// difference between the fifth- and embedded fourth-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
// dense-output weights for the quartic interpolant
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const ORDER_EXP: f64 = 0.2; // 1 / (order of the error estimator + 1)

struct DenseSegment {
    t0: f64,
    h: f64,
    r1: Vec<f64>,
    r2: Vec<f64>,
    r3: Vec<f64>,
    r4: Vec<f64>,
    r5: Vec<f64>,
}

impl DenseSegment {
    fn eval(&self, t: f64, out: &mut [f64]) {
        let theta = (t - self.t0) / self.h;
        let theta1 = 1.0 - theta;
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = self.r1[i]
                + theta
                    * (self.r2[i]
                        + theta1 * (self.r3[i] + theta * (self.r4[i] + theta1 * self.r5[i])));
        }
    }
}

fn wrms_scale(y: &[f64], ynew: &[f64], opts: &OdeOptions, i: usize) -> f64 {
    opts.atol + opts.rtol * y[i].abs().max(ynew[i].abs())
}

/// Initial step from the magnitudes of the state and its first two
/// derivatives, following the standard Hairer heuristic.
fn initial_step<F>(rhs: &mut F, t0: f64, y0: &[f64], f0: &[f64], t_span: f64, opts: &OdeOptions) -> f64
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let n = y0.len();
    let mut dnf = 0.0;
    let mut dny = 0.0;
    for i in 0..n {
        let sk = opts.atol + opts.rtol * y0[i].abs();
        dnf += (f0[i] / sk).powi(2);
        dny += (y0[i] / sk).powi(2);
    }
    let h0 = if dnf <= 1e-10 || dny <= 1e-10 {
        1e-6
    } else {
        0.01 * (dny / dnf).sqrt()
    };
    let h0 = h0.min(t_span);

    let mut y1 = vec![0.0; n];
    for i in 0..n {
        y1[i] = y0[i] + h0 * f0[i];
    }
    let mut f1 = vec![0.0; n];
    rhs(t0 + h0, &y1, &mut f1);
    let mut der2 = 0.0;
    for i in 0..n {
        let sk = opts.atol + opts.rtol * y0[i].abs();
        der2 += ((f1[i] - f0[i]) / sk).powi(2);
    }
    let der2 = der2.sqrt() / h0;
    let der12 = der2.max(dnf.sqrt());
    let h1 = if der12 <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / der12).powf(ORDER_EXP)
    };
    (100.0 * h0).min(h1).min(t_span)
}

/// Integrate dy/dt = rhs(t, y) from grid[0] and call `sink(index, t, y)` for
/// every grid point, in order. The grid must be strictly increasing; the
/// initial state is reported at index 0 without an integration step.
pub fn integrate_to_grid<F, S>(
    mut rhs: F,
    y0: &[f64],
    grid: &[f64],
    opts: &OdeOptions,
    mut sink: S,
) -> Result<()>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    S: FnMut(usize, f64, &[f64]),
{
    if grid.is_empty() {
        return Err(Error::TooFewSamples { got: 0, need: 1 });
    }
    for w in grid.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::BadGrid {
                detail: format!("output grid not strictly increasing at t = {}", w[0]),
            });
        }
    }
    let n = y0.len();
    let t0 = grid[0];
    let t_end = *grid.last().unwrap();
    sink(0, t0, y0);
    if grid.len() == 1 {
        return Ok(());
    }

    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k: Vec<Vec<f64>> = (0..7).map(|_| vec![0.0; n]).collect();
    rhs(t, &y, &mut k[0]);
    let mut h = initial_step(&mut rhs, t, &y, &k[0], t_end - t0, opts);

    let mut next_out = 1usize;
    let mut ytmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    let mut yout = vec![0.0; n];
    let mut steps = 0usize;
    let mut rejected = false;

    while t < t_end {
        if steps >= opts.max_steps {
            return Err(Error::SolverFailure {
                t,
                detail: format!("step budget of {} exhausted", opts.max_steps),
            });
        }
        steps += 1;
        if t + h > t_end {
            h = t_end - t;
        }

        // stages 2..7; k[0] carries f(t, y) from the previous step
        for (s, row) in [
            (1, &A2[..]),
            (2, &A3[..]),
            (3, &A4[..]),
            (4, &A5[..]),
            (5, &A6[..]),
            (6, &A7[..]),
        ] {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, &a) in row.iter().enumerate() {
                    acc += a * k[j][i];
                }
                ytmp[i] = y[i] + h * acc;
            }
            let (done, rest) = k.split_at_mut(s);
            let _ = done;
            rhs(t + C[s] * h, &ytmp, &mut rest[0]);
        }
        // stage 7 input is already the fifth-order solution
        ynew.copy_from_slice(&ytmp);

        let mut err_sq = 0.0;
        // the index walks k's columns and both state vectors together
        #[allow(clippy::needless_range_loop)]
        for i in 0..n {
            let mut e = 0.0;
            for (j, &w) in E.iter().enumerate() {
                e += w * k[j][i];
            }
            e *= h;
            let sk = wrms_scale(&y, &ynew, opts, i);
            err_sq += (e / sk).powi(2);
        }
        let err = (err_sq / n as f64).sqrt();
        if !err.is_finite() {
            return Err(Error::SolverFailure {
                t,
                detail: "non-finite error estimate (diverging state)".to_string(),
            });
        }

        if err <= 1.0 {
            // report every grid point inside the accepted step
            if next_out < grid.len() && grid[next_out] <= t + h {
                let seg = build_dense(&y, &ynew, &k, h, t);
                while next_out < grid.len() && grid[next_out] <= t + h {
                    let tq = grid[next_out];
                    if tq == t + h {
                        yout.copy_from_slice(&ynew);
                    } else {
                        seg.eval(tq, &mut yout);
                    }
                    sink(next_out, tq, &yout);
                    next_out += 1;
                }
            }
            t += h;
            std::mem::swap(&mut y, &mut ynew);
            let k6 = k[6].clone();
            k[0].copy_from_slice(&k6);
            let mut fac = SAFETY * err.powf(-ORDER_EXP);
            fac = fac.clamp(FAC_MIN, FAC_MAX);
            if rejected {
                fac = fac.min(1.0);
            }
            h *= fac;
            rejected = false;
        } else {
            let fac = (SAFETY * err.powf(-ORDER_EXP)).max(FAC_MIN);
            h *= fac;
            rejected = true;
        }
        if !(h > 0.0) || !h.is_finite() || t + h == t {
            return Err(Error::SolverFailure {
                t,
                detail: format!("step size collapsed to {h:.3e}"),
            });
        }
    }
    Ok(())
}

fn build_dense(y: &[f64], ynew: &[f64], k: &[Vec<f64>], h: f64, t: f64) -> DenseSegment {
    let n = y.len();
    let mut r1 = vec![0.0; n];
    let mut r2 = vec![0.0; n];
    let mut r3 = vec![0.0; n];
    let mut r4 = vec![0.0; n];
    let mut r5 = vec![0.0; n];
    for i in 0..n {
        let ydiff = ynew[i] - y[i];
        let bspl = h * k[0][i] - ydiff;
        r1[i] = y[i];
        r2[i] = ydiff;
        r3[i] = bspl;
        r4[i] = ydiff - h * k[6][i] - bspl;
        let mut acc = 0.0;
        for (j, &d) in D.iter().enumerate() {
            acc += d * k[j][i];
        }
        r5[i] = h * acc;
    }
    DenseSegment {
        t0: t,
        h,
        r1,
        r2,
        r3,
        r4,
        r5,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
            .collect()
    }

    #[test]
    fn exponential_decay_on_dense_grid() {
        let grid = linspace(0.0, 5.0, 401);
        let opts = OdeOptions::default();
        let mut max_err: f64 = 0.0;
        integrate_to_grid(
            |_t, y, dy| dy[0] = -y[0],
            &[1.0],
            &grid,
            &opts,
            |_i, t, y| {
                max_err = max_err.max((y[0] - (-t).exp()).abs());
            },
        )
        .unwrap();
        assert!(max_err < 1e-8, "max abs error {max_err:.3e}");
    }

    #[test]
    fn harmonic_oscillator_phase_and_energy() {
        let omega = 2.0 * std::f64::consts::PI;
        let grid = linspace(0.0, 10.0, 1001); // ten periods
        let opts = OdeOptions {
            rtol: 1e-10,
            atol: 1e-13,
            ..OdeOptions::default()
        };
        let mut max_err: f64 = 0.0;
        integrate_to_grid(
            |_t, y, dy| {
                dy[0] = y[1];
                dy[1] = -omega * omega * y[0];
            },
            &[1.0, 0.0],
            &grid,
            &opts,
            |_i, t, y| {
                max_err = max_err.max((y[0] - (omega * t).cos()).abs());
            },
        )
        .unwrap();
        assert!(max_err < 1e-6, "max abs error {max_err:.3e}");
    }

    #[test]
    fn tighter_tolerance_reduces_error() {
        let grid = linspace(0.0, 20.0, 41);
        let run = |rtol: f64| {
            let opts = OdeOptions {
                rtol,
                atol: rtol * 1e-3,
                ..OdeOptions::default()
            };
            let mut max_err: f64 = 0.0;
            integrate_to_grid(
                |_t, y, dy| dy[0] = -0.5 * y[0],
                &[1.0],
                &grid,
                &opts,
                |_i, t, y| {
                    max_err = max_err.max((y[0] - (-0.5 * t).exp()).abs());
                },
            )
            .unwrap();
            max_err
        };
        let loose = run(1e-5);
        let tight = run(1e-11);
        assert!(tight < loose * 1e-2, "loose {loose:.3e} tight {tight:.3e}");
    }

    #[test]
    fn linear_invariant_is_conserved_to_roundoff() {
        // two-state flow with conserved sum, the structure every cascade has
        let grid = linspace(0.0, 30.0, 301);
        let opts = OdeOptions {
            rtol: 1e-6,
            atol: 1e-9,
            ..OdeOptions::default()
        };
        let mut worst: f64 = 0.0;
        integrate_to_grid(
            |_t, y, dy| {
                dy[0] = -3.0 * y[0];
                dy[1] = 3.0 * y[0];
            },
            &[1.0, 0.0],
            &grid,
            &opts,
            |_i, _t, y| {
                worst = worst.max((y[0] + y[1] - 1.0).abs());
            },
        )
        .unwrap();
        assert!(worst < 1e-13, "sum drift {worst:.3e}");
    }

    #[test]
    fn dense_output_lands_between_internal_steps() {
        // coarse tolerance forces long internal steps; a fine grid then
        // exercises the interpolant rather than the step endpoints
        let grid = linspace(0.0, 1.0, 1001);
        let opts = OdeOptions {
            rtol: 1e-4,
            atol: 1e-7,
            ..OdeOptions::default()
        };
        let mut max_err: f64 = 0.0;
        integrate_to_grid(
            |t, _y, dy| dy[0] = (2.0 * t).cos(),
            &[0.0],
            &grid,
            &opts,
            |_i, t, y| {
                max_err = max_err.max((y[0] - 0.5 * (2.0 * t).sin()).abs());
            },
        )
        .unwrap();
        // interpolation error rides on the coarse tolerance (observed ~4e-5);
        // holding y constant between steps would instead err at the 1e-1 scale
        assert!(max_err < 1e-3, "max abs error {max_err:.3e}");
    }

    #[test]
    fn step_budget_is_enforced() {
        let grid = [0.0, 1.0];
        let opts = OdeOptions {
            max_steps: 3,
            rtol: 1e-12,
            atol: 1e-14,
        };
        let err = integrate_to_grid(
            |t, _y, dy| dy[0] = (50.0 * t).sin() * 40.0,
            &[1.0],
            &grid,
            &opts,
            |_, _, _| {},
        )
        .unwrap_err();
        assert!(matches!(err, Error::SolverFailure { .. }));
    }

    #[test]
    fn diverging_state_reports_solver_failure() {
        let grid = [0.0, 10.0];
        let opts = OdeOptions::default();
        let err = integrate_to_grid(
            |_t, y, dy| dy[0] = y[0] * y[0], // blows up at t = 1
            &[1.0],
            &grid,
            &opts,
            |_, _, _| {},
        )
        .unwrap_err();
        assert!(matches!(err, Error::SolverFailure { .. }));
    }

    #[test]
    fn bad_grids_are_rejected() {
        let opts = OdeOptions::default();
        let err = integrate_to_grid(|_, _, dy| dy[0] = 0.0, &[1.0], &[0.0, 0.0], &opts, |_, _, _| {});
        assert!(err.is_err());
        let err = integrate_to_grid(|_, _, dy| dy[0] = 0.0, &[1.0], &[1.0, 0.5], &opts, |_, _, _| {});
        assert!(err.is_err());
    }

    #[test]
    fn single_point_grid_reports_initial_state_only() {
        let opts = OdeOptions::default();
        let mut calls = 0;
        integrate_to_grid(
            |_t, y, dy| dy[0] = -y[0],
            &[2.5],
            &[0.0],
            &opts,
            |i, t, y| {
                assert_eq!(i, 0);
                assert_eq!(t, 0.0);
                assert_eq!(y[0], 2.5);
                calls += 1;
            },
        )
        .unwrap();
        assert_eq!(calls, 1);
    }
}
