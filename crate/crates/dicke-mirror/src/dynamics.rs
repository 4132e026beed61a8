//! Time evolution of the collective level occupations: the photon-rate
//! cascade for undriven decay, and two independent solvers for laser-driven
//! dynamics that must agree with each other.
//!
//! The driven solvers evolve the same physics along different routes. One
//! integrates the (N+1)x(N+1) density matrix with explicit operator algebra
//! (matrix products); the other integrates the (N+1)^2 flip-operator
//! expectation values element by element from the coupled scalar equations.
//! Their agreement is the main correctness check for the element-wise
//! coefficients, so the two implementations deliberately share no code
//! beyond the integrator.

use ndarray::Array2;
use num_complex::Complex64;

use crate::constants::{REDUCED_PLANCK, SPEED_OF_LIGHT, VACUUM_PERMITTIVITY};
use crate::error::{Error, Result};
use crate::ladder::{build_rate_ladder, EnsembleConfig, RateLadder};
use crate::ode::{integrate_to_grid, OdeOptions};
use crate::series::{TimeSeries, MIN_SAMPLES};

/// Monochromatic drive, stored as a field amplitude (V/m) and a detuning
/// delta = w_L - w_A (rad/s).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveConfig {
    pub field: f64,
    pub detuning: f64,
}

impl DriveConfig {
    pub fn from_field(field: f64, detuning: f64) -> Result<Self> {
        if !(field >= 0.0 && field.is_finite()) {
            return Err(Error::NonPositive {
                what: "drive field amplitude",
                value: field,
            });
        }
        Ok(DriveConfig { field, detuning })
    }

    /// Plane-wave conversion E = sqrt(2 I / (eps0 c)) from a time-averaged
    /// intensity in W/m^2.
    pub fn from_intensity(intensity: f64, detuning: f64) -> Result<Self> {
        if !(intensity >= 0.0 && intensity.is_finite()) {
            return Err(Error::NonPositive {
                what: "drive intensity",
                value: intensity,
            });
        }
        let field = (2.0 * intensity / (VACUUM_PERMITTIVITY * SPEED_OF_LIGHT)).sqrt();
        Ok(DriveConfig { field, detuning })
    }

    /// Single-emitter Rabi frequency |d| E / hbar.
    pub fn rabi_frequency(&self, dipole: &[Complex64; 3]) -> f64 {
        let d: f64 = dipole.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        d * self.field / REDUCED_PLANCK
    }

    pub fn omega_laser(&self, omega_a: f64) -> f64 {
        omega_a + self.detuning
    }

    /// True when the detuning is large enough that dropping the
    /// counter-rotating terms is questionable (|delta|/w_A > 1e-3).
    pub fn rwa_strained(&self, omega_a: f64) -> bool {
        (self.detuning / omega_a).abs() > 1e-3
    }
}

/// Frame for the driven solvers. The rotating frame keeps only the
/// co-rotating half of the drive and is the production path; the lab-frame
/// cosine drive integrates the bare oscillation and exists to validate the
/// rotating-wave step at artificially small frequency separations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DriveFrame {
    #[default]
    RotatingWave,
    LabCosine,
}

/// Tolerances, grid size and solver-specific caps.
#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    /// Uniform reporting grid size over [0, t_max].
    pub grid_points: usize,
    /// Keep the full flip-operator matrix at every grid point. Off by
    /// default: a driven N = 50 run stores (N+1)^2 complex entries per point.
    pub store_coherences: bool,
    pub drive_frame: DriveFrame,
    /// Largest N the density-matrix solver accepts ((N+1)^2 state doubles).
    pub lindblad_cap: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            rtol: 1e-9,
            atol: 1e-12,
            max_steps: 1_000_000,
            grid_points: 2000,
            store_coherences: false,
            drive_frame: DriveFrame::RotatingWave,
            lindblad_cap: 200,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.rtol > 0.0) {
            return Err(Error::NonPositive {
                what: "relative tolerance",
                value: self.rtol,
            });
        }
        if !(self.atol > 0.0) {
            return Err(Error::NonPositive {
                what: "absolute tolerance",
                value: self.atol,
            });
        }
        if self.grid_points < MIN_SAMPLES {
            return Err(Error::TooFewSamples {
                got: self.grid_points,
                need: MIN_SAMPLES,
            });
        }
        Ok(())
    }

    fn ode(&self) -> OdeOptions {
        OdeOptions {
            rtol: self.rtol,
            atol: self.atol,
            max_steps: self.max_steps,
        }
    }
}

/// Default simulation span 10 / (N F Gamma0): the burst peaks near
/// ln(N) / (N F Gamma0), so this covers it with a wide margin.
pub fn default_t_max(ladder: &RateLadder) -> f64 {
    10.0 / (ladder.n_atoms() as f64 * ladder.effective_rate())
}

/// Sampled level occupations, and optionally the full flip-operator matrix,
/// on a uniform time grid.
#[derive(Debug, Clone)]
pub struct LevelTrajectory {
    times: Vec<f64>,
    /// One row per grid point, each of length N+1.
    populations: Vec<Vec<f64>>,
    /// One row per grid point of (N+1)^2 entries; entry (a, b) at a*(N+1)+b
    /// is the expectation of the flip operator taking level b to level a.
    coherences: Option<Vec<Vec<Complex64>>>,
    n_atoms: usize,
    /// For driven runs: the time past which the truncation to the symmetric
    /// cascade is no longer trusted (effective decay rate times t = 0.3).
    driven_validity_t: Option<f64>,
}

impl LevelTrajectory {
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Occupations at grid index i, one entry per level 0..=N.
    pub fn populations_at(&self, i: usize) -> &[f64] {
        &self.populations[i]
    }

    /// Time trace of a single level.
    pub fn level_series(&self, level: usize) -> Result<Vec<f64>> {
        if level > self.n_atoms {
            return Err(Error::LevelOutOfRange {
                level,
                min: 0,
                max: self.n_atoms,
                n_atoms: self.n_atoms,
            });
        }
        Ok(self.populations.iter().map(|row| row[level]).collect())
    }

    pub fn coherences(&self) -> Option<&[Vec<Complex64>]> {
        self.coherences.as_deref()
    }

    /// Flip-operator expectation (a, b) at grid index i, when stored.
    pub fn coherence(&self, i: usize, a: usize, b: usize) -> Option<Complex64> {
        let dim = self.n_atoms + 1;
        self.coherences
            .as_ref()
            .map(|rows| rows[i][a * dim + b])
    }

    pub fn driven_validity_t(&self) -> Option<f64> {
        self.driven_validity_t
    }
}

fn time_grid(t_max: f64, points: usize) -> Result<Vec<f64>> {
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::NonPositive {
            what: "simulation span",
            value: t_max,
        });
    }
    Ok((0..points)
        .map(|i| t_max * i as f64 / (points - 1) as f64)
        .collect())
}

fn check_population_rows(times: &[f64], rows: &[Vec<f64>], sum_tol: f64) -> Result<()> {
    for (t, row) in times.iter().zip(rows) {
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > sum_tol {
            return Err(Error::NormDrift {
                t: *t,
                drift: sum - 1.0,
                tol: sum_tol,
            });
        }
        for &p in row {
            if p < -1e-9 {
                return Err(Error::NegativePopulation { t: *t, value: p });
            }
        }
    }
    Ok(())
}

/// Decay of the fully inverted ensemble through the cascade,
/// dp_n/dt = -rate(n) p_n + rate(n+1) p_{n+1}.
pub fn solve_rate_equations(
    ladder: &RateLadder,
    t_max: f64,
    opts: &SolverOptions,
) -> Result<LevelTrajectory> {
    let mut initial = vec![0.0; ladder.n_atoms() + 1];
    initial[ladder.n_atoms()] = 1.0;
    solve_rate_equations_from(ladder, &initial, t_max, opts)
}

/// Same cascade from a caller-supplied level distribution.
pub fn solve_rate_equations_from(
    ladder: &RateLadder,
    initial: &[f64],
    t_max: f64,
    opts: &SolverOptions,
) -> Result<LevelTrajectory> {
    opts.validate()?;
    let n = ladder.n_atoms();
    if initial.len() != n + 1 {
        return Err(Error::SizeMismatch {
            left_name: "initial distribution",
            left: initial.len(),
            right_name: "ladder levels",
            right: n + 1,
        });
    }
    let sum: f64 = initial.iter().sum();
    if (sum - 1.0).abs() > 1e-9 || initial.iter().any(|&p| p < 0.0) {
        return Err(Error::BadInitialDistribution { sum });
    }
    let grid = time_grid(t_max, opts.grid_points)?;
    let rates = ladder.rates().to_vec();
    let mut populations: Vec<Vec<f64>> = Vec::with_capacity(grid.len());
    integrate_to_grid(
        |_t, y, dy| {
            for level in 0..=n {
                let inflow = if level < n { rates[level + 1] * y[level + 1] } else { 0.0 };
                dy[level] = inflow - rates[level] * y[level];
            }
        },
        initial,
        &grid,
        &opts.ode(),
        |_i, _t, y| populations.push(y.to_vec()),
    )?;
    check_population_rows(&grid, &populations, 1e-9)?;
    Ok(LevelTrajectory {
        times: grid,
        populations,
        coherences: None,
        n_atoms: n,
        driven_validity_t: None,
    })
}

/// Photon emission rate I(t) = sum over occupied levels of occupation times
/// cascade rate, in 1/s.
pub fn emission_intensity(traj: &LevelTrajectory, ladder: &RateLadder) -> Result<TimeSeries> {
    if traj.n_atoms() != ladder.n_atoms() {
        return Err(Error::SizeMismatch {
            left_name: "trajectory levels",
            left: traj.n_atoms() + 1,
            right_name: "ladder levels",
            right: ladder.n_atoms() + 1,
        });
    }
    let rates = ladder.rates();
    let values: Vec<f64> = traj
        .populations
        .iter()
        .map(|row| row.iter().zip(rates).map(|(p, r)| p * r).sum())
        .collect();
    TimeSeries::new(traj.times.clone(), values, "1/s")
}

pub(crate) struct DriveTerms {
    pub(crate) rabi: f64,
    pub(crate) detuning: f64,
}

/// Density-matrix evolution in the symmetric subspace, built from explicit
/// operator products so it shares no coefficient algebra with
/// [`solve_driven_coherences`].
pub fn solve_lindblad(
    cfg: &EnsembleConfig,
    drive: Option<&DriveConfig>,
    t_max: f64,
    opts: &SolverOptions,
) -> Result<LevelTrajectory> {
    cfg.validate()?;
    opts.validate()?;
    if cfg.n_atoms > opts.lindblad_cap {
        return Err(Error::LadderTooLarge {
            n_atoms: cfg.n_atoms,
            cap: opts.lindblad_cap,
        });
    }
    let ladder = build_rate_ladder(cfg)?;
    let terms = drive.map(|d| DriveTerms {
        rabi: d.rabi_frequency(&cfg.dipole),
        detuning: d.detuning,
    });
    let grid = time_grid(t_max, opts.grid_points)?;
    let rows = lindblad_core(
        cfg.n_atoms,
        ladder.effective_rate(),
        cfg.omega_a,
        terms.as_ref(),
        opts.drive_frame,
        &grid,
        &opts.ode(),
    )?;
    trajectory_from_matrix_rows(cfg.n_atoms, grid, rows, opts, drive.is_some(), &ladder)
}

/// Integrate the density matrix on the given grid and return one packed
/// (N+1)^2 complex row per grid point, in flip-operator index order
/// (entry (a, b) = rho[b][a]).
pub(crate) fn lindblad_core(
    n_atoms: usize,
    gamma_eff: f64,
    omega_a: f64,
    drive: Option<&DriveTerms>,
    frame: DriveFrame,
    grid: &[f64],
    ode_opts: &OdeOptions,
) -> Result<Vec<Vec<Complex64>>> {
    let dim = n_atoms + 1;
    let f = |upper: usize| {
        let u = upper as f64;
        (u * (n_atoms as f64 - u + 1.0)).sqrt()
    };
    let mut jm = Array2::<Complex64>::zeros((dim, dim));
    for upper in 1..=n_atoms {
        jm[[upper - 1, upper]] = Complex64::new(f(upper), 0.0);
    }
    let jp = jm.t().to_owned();
    let jpjm = jp.dot(&jm);
    let mut jz = Array2::<Complex64>::zeros((dim, dim));
    for level in 0..dim {
        jz[[level, level]] = Complex64::new(level as f64 - n_atoms as f64 / 2.0, 0.0);
    }
    let jx2 = &jp + &jm; // J+ + J-

    // static and oscillating Hamiltonian pieces, units of rad/s
    let (h_static, h_osc, omega_l) = match (drive, frame) {
        (None, _) => (Array2::<Complex64>::zeros((dim, dim)), None, 0.0),
        (Some(d), DriveFrame::RotatingWave) => {
            let h = jz.mapv(|v| v * Complex64::new(-d.detuning, 0.0))
                + jx2.mapv(|v| v * Complex64::new(-d.rabi / 2.0, 0.0));
            (h, None, 0.0)
        }
        (Some(d), DriveFrame::LabCosine) => {
            let h0 = jz.mapv(|v| v * Complex64::new(omega_a, 0.0));
            let h1 = jx2.mapv(|v| v * Complex64::new(-d.rabi, 0.0));
            (h0, Some(h1), omega_a + d.detuning)
        }
    };

    let mut y0 = vec![0.0; 2 * dim * dim];
    y0[2 * (n_atoms * dim + n_atoms)] = 1.0; // fully inverted corner

    let unpack = |y: &[f64]| {
        Array2::from_shape_fn((dim, dim), |(r, c)| {
            let idx = 2 * (r * dim + c);
            Complex64::new(y[idx], y[idx + 1])
        })
    };

    let mut rows: Vec<Vec<Complex64>> = Vec::with_capacity(grid.len());
    let i_unit = Complex64::new(0.0, 1.0);
    integrate_to_grid(
        |t, y, dy| {
            let rho = unpack(y);
            let h = match &h_osc {
                None => h_static.clone(),
                Some(h1) => &h_static + &h1.mapv(|v| v * Complex64::new((omega_l * t).cos(), 0.0)),
            };
            let comm = h.dot(&rho) - rho.dot(&h);
            let sandwich = jm.dot(&rho).dot(&jp);
            let anti = jpjm.dot(&rho) + rho.dot(&jpjm);
            let drho = comm.mapv(|v| -i_unit * v)
                + (sandwich - anti.mapv(|v| v * Complex64::new(0.5, 0.0)))
                    .mapv(|v| v * Complex64::new(gamma_eff, 0.0));
            for r in 0..dim {
                for c in 0..dim {
                    let idx = 2 * (r * dim + c);
                    dy[idx] = drho[[r, c]].re;
                    dy[idx + 1] = drho[[r, c]].im;
                }
            }
        },
        &y0,
        grid,
        ode_opts,
        |_i, t, y| {
            let rho = unpack(y);
            // abort later rather than mid-callback: stash checks inline
            let mut row = vec![Complex64::ZERO; dim * dim];
            for a in 0..dim {
                for b in 0..dim {
                    row[a * dim + b] = rho[[b, a]];
                }
            }
            let _ = t;
            rows.push(row);
        },
    )?;
    Ok(rows)
}

/// Element-wise integration of the flip-operator expectations. The (a, b)
/// entry obeys
///
///   dA/dt = i w(a,b) A(a,b)
///         + i c(t) [ f(b) A(a,b-1) + f(b+1) A(a,b+1)
///                    - f(a+1) A(a+1,b) - f(a) A(a-1,b) ]
///         + gain(a,b) A(a+1,b+1) - damp(a,b) A(a,b)
///
/// with w = -(a-b) delta and c = Omega/2 in the rotating frame, or
/// w = (a-b) w_A and c = Omega cos(w_L t) in the lab frame. The damping and
/// feeding brackets come from the pair-transition rates on the ladder.
pub fn solve_driven_coherences(
    cfg: &EnsembleConfig,
    drive: Option<&DriveConfig>,
    t_max: f64,
    opts: &SolverOptions,
) -> Result<LevelTrajectory> {
    cfg.validate()?;
    opts.validate()?;
    let ladder = build_rate_ladder(cfg)?;
    let n = cfg.n_atoms;
    let dim = n + 1;
    let rabi = drive.map(|d| d.rabi_frequency(&cfg.dipole)).unwrap_or(0.0);
    let detuning = drive.map(|d| d.detuning).unwrap_or(0.0);
    let omega_l = cfg.omega_a + detuning;
    let frame = opts.drive_frame;
    let omega_a = cfg.omega_a;

    let mut f = vec![0.0; dim + 1];
    for (upper, slot) in f.iter_mut().enumerate().take(n + 1).skip(1) {
        *slot = (upper as f64 * (n as f64 - upper as f64 + 1.0)).sqrt();
    }
    let mut damp = vec![0.0; dim * dim];
    let mut gain = vec![0.0; dim * dim];
    for a in 0..dim {
        for b in 0..dim {
            damp[a * dim + b] = ladder.coherence_damping(a, b);
            gain[a * dim + b] = ladder.coherence_gain(a, b);
        }
    }

    let grid = time_grid(t_max, opts.grid_points)?;
    let mut y0 = vec![0.0; 2 * dim * dim];
    y0[2 * (n * dim + n)] = 1.0;

    let mut rows: Vec<Vec<Complex64>> = Vec::with_capacity(grid.len());
    integrate_to_grid(
        |t, y, dy| {
            let at = |a: usize, b: usize| {
                let idx = 2 * (a * dim + b);
                Complex64::new(y[idx], y[idx + 1])
            };
            let c_drive = if rabi == 0.0 {
                0.0
            } else {
                match frame {
                    DriveFrame::RotatingWave => rabi / 2.0,
                    DriveFrame::LabCosine => rabi * (omega_l * t).cos(),
                }
            };
            for a in 0..dim {
                for b in 0..dim {
                    let idx = a * dim + b;
                    let delta_m = a as f64 - b as f64;
                    let w = match frame {
                        DriveFrame::RotatingWave => -delta_m * detuning,
                        DriveFrame::LabCosine => delta_m * omega_a,
                    };
                    let here = at(a, b);
                    let mut acc = Complex64::new(0.0, w) * here;
                    if c_drive != 0.0 {
                        let mut bracket = Complex64::ZERO;
                        if b >= 1 {
                            bracket += f[b] * at(a, b - 1);
                        }
                        if b + 1 < dim {
                            bracket += f[b + 1] * at(a, b + 1);
                        }
                        if a + 1 < dim {
                            bracket -= f[a + 1] * at(a + 1, b);
                        }
                        if a >= 1 {
                            bracket -= f[a] * at(a - 1, b);
                        }
                        acc += Complex64::new(0.0, c_drive) * bracket;
                    }
                    if a + 1 < dim && b + 1 < dim {
                        acc += gain[idx] * at(a + 1, b + 1);
                    }
                    acc -= damp[idx] * here;
                    dy[2 * idx] = acc.re;
                    dy[2 * idx + 1] = acc.im;
                }
            }
        },
        &y0,
        &grid,
        &opts.ode(),
        |_i, _t, y| {
            let mut row = vec![Complex64::ZERO; dim * dim];
            for (slot, chunk) in row.iter_mut().zip(y.chunks_exact(2)) {
                *slot = Complex64::new(chunk[0], chunk[1]);
            }
            rows.push(row);
        },
    )?;
    trajectory_from_matrix_rows(n, grid, rows, opts, drive.is_some(), &ladder)
}

fn trajectory_from_matrix_rows(
    n_atoms: usize,
    times: Vec<f64>,
    rows: Vec<Vec<Complex64>>,
    opts: &SolverOptions,
    driven: bool,
    ladder: &RateLadder,
) -> Result<LevelTrajectory> {
    let dim = n_atoms + 1;
    for (t, row) in times.iter().zip(&rows) {
        let trace: Complex64 = (0..dim).map(|a| row[a * dim + a]).sum();
        if (trace.re - 1.0).abs() > 1e-8 || trace.im.abs() > 1e-8 {
            return Err(Error::NormDrift {
                t: *t,
                drift: trace.re - 1.0,
                tol: 1e-8,
            });
        }
        let mut herm: f64 = 0.0;
        for a in 0..dim {
            for b in a..dim {
                herm = herm.max((row[a * dim + b] - row[b * dim + a].conj()).norm());
            }
        }
        if herm > 1e-8 {
            return Err(Error::HermiticityLoss {
                t: *t,
                deviation: herm,
            });
        }
    }
    let populations: Vec<Vec<f64>> = rows
        .iter()
        .map(|row| (0..dim).map(|a| row[a * dim + a].re).collect())
        .collect();
    check_population_rows(&times, &populations, 1e-8)?;
    Ok(LevelTrajectory {
        times,
        populations,
        coherences: if opts.store_coherences { Some(rows) } else { None },
        n_atoms,
        driven_validity_t: if driven {
            Some(0.3 / ladder.effective_rate())
        } else {
            None
        },
    })
}
