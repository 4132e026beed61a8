//! Resonant surface potential of the decaying ensemble: the single-emitter
//! value from the scattered Green's tensor, its per-level enhancement, and
//! the population-weighted total that inherits the burst dynamics.
//!
//! Only the resonant (emission-driven) part is computed. Each level with n
//! excitations couples to the surface with the same n(N-n+1) combinatorial
//! weight as its photon rate, so the time-dependent potential is the
//! emission intensity in different clothes and peaks at the same instant.

use crate::error::{Error, Result};
use crate::greens::{mirror_scatter_green, DyadicTensor, Environment, Position3};
use crate::ladder::EnsembleConfig;
use crate::series::TimeSeries;
use crate::constants::VACUUM_PERMEABILITY;
use crate::dynamics::LevelTrajectory;
use num_complex::Complex64;

/// Per-level surface potentials: level n contributes
/// `coefficients[n] * u_single`, with the ground level dark.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialLadder {
    n_atoms: usize,
    u_single: f64,
    coefficients: Vec<u64>,
}

impl PotentialLadder {
    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    /// Single-emitter resonant potential in joules.
    pub fn u_single(&self) -> f64 {
        self.u_single
    }

    pub fn coefficients(&self) -> &[u64] {
        &self.coefficients
    }

    /// Potential of level n in joules.
    pub fn level_potential(&self, level: usize) -> Result<f64> {
        self.coefficients
            .get(level)
            .map(|&c| c as f64 * self.u_single)
            .ok_or(Error::LevelOutOfRange {
                level,
                min: 0,
                max: self.n_atoms,
                n_atoms: self.n_atoms,
            })
    }
}

/// Resonant potential of one excited emitter at rest above the plate,
///
///   U = -mu0 wL^2 d . Re G1(r, r, wA) . d*,
///
/// with the scattered tensor evaluated at the transition frequency and the
/// prefactor at the drive frequency (identical for undriven runs, where the
/// caller passes omega_l = omega_a). Zero in free space: no scattered part.
pub fn single_atom_resonant_potential(
    env: Environment,
    r: Position3,
    dipole: &[Complex64; 3],
    omega_a: f64,
    omega_l: f64,
) -> Result<f64> {
    if !(omega_l > 0.0 && omega_l.is_finite()) {
        return Err(Error::NonPositive {
            what: "drive frequency",
            value: omega_l,
        });
    }
    match env {
        Environment::FreeSpace => Ok(0.0),
        Environment::PerfectMirror => {
            let scattered = mirror_scatter_green(r, r, omega_a)?;
            let re_qf = scattered.re_part().quadratic_form(dipole).re;
            Ok(-VACUUM_PERMEABILITY * omega_l * omega_l * re_qf)
        }
    }
}

/// Level-resolved potential ladder with the cascade combinatorics.
pub fn build_potential_ladder(cfg: &EnsembleConfig, u_single: f64) -> Result<PotentialLadder> {
    cfg.validate()?;
    if !u_single.is_finite() {
        return Err(Error::NonPositive {
            what: "single-emitter potential",
            value: u_single,
        });
    }
    let n = cfg.n_atoms;
    let mut coefficients = Vec::with_capacity(n + 1);
    coefficients.push(0);
    for level in 1..=n {
        coefficients.push((level * (n - level + 1)) as u64);
    }
    Ok(PotentialLadder {
        n_atoms: n,
        u_single,
        coefficients,
    })
}

/// Population-weighted total potential U(t) = sum_n p_n(t) c_n u_single.
pub fn collective_potential(
    traj: &LevelTrajectory,
    ladder: &PotentialLadder,
) -> Result<TimeSeries> {
    if traj.n_atoms() != ladder.n_atoms {
        return Err(Error::SizeMismatch {
            left_name: "trajectory levels",
            left: traj.n_atoms() + 1,
            right_name: "potential levels",
            right: ladder.n_atoms + 1,
        });
    }
    let values: Vec<f64> = (0..traj.len())
        .map(|i| {
            traj.populations_at(i)
                .iter()
                .zip(&ladder.coefficients)
                .map(|(p, &c)| p * c as f64 * ladder.u_single)
                .sum()
        })
        .collect();
    TimeSeries::new(traj.times().to_vec(), values, "J")
}

/// Convenience wrapper: the tensor contraction without the frequency
/// prefactor, used by tests probing the distance law directly.
pub fn scattered_re_quadratic_form(
    r: Position3,
    dipole: &[Complex64; 3],
    omega_a: f64,
) -> Result<f64> {
    let scattered = mirror_scatter_green(r, r, omega_a)?;
    let t: DyadicTensor = scattered.re_part();
    Ok(t.quadratic_form(dipole).re)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{SPEED_OF_LIGHT, VACUUM_PERMITTIVITY};
    use crate::dynamics::{default_t_max, solve_rate_equations, SolverOptions};
    use crate::ladder::build_rate_ladder;
    use approx::assert_relative_eq;

    const OMEGA: f64 = 2.37e15;
    const DIPOLE: f64 = 2.53e-29;

    fn z_dipole() -> [Complex64; 3] {
        [
            Complex64::ZERO,
            Complex64::ZERO,
            Complex64::new(DIPOLE, 0.0),
        ]
    }

    fn x_dipole() -> [Complex64; 3] {
        [
            Complex64::new(DIPOLE, 0.0),
            Complex64::ZERO,
            Complex64::ZERO,
        ]
    }

    fn mirror_config(n_atoms: usize) -> EnsembleConfig {
        EnsembleConfig {
            n_atoms,
            omega_a: OMEGA,
            dipole: z_dipole(),
            position: Position3::new(0.0, 0.0, 1e-7),
            environment: Environment::PerfectMirror,
        }
    }

    #[test]
    fn free_space_potential_vanishes_exactly() {
        let u = single_atom_resonant_potential(
            Environment::FreeSpace,
            Position3::new(0.0, 0.0, 1e-7),
            &z_dipole(),
            OMEGA,
            OMEGA,
        )
        .unwrap();
        assert_eq!(u, 0.0);
    }

    #[test]
    fn reference_height_value_is_stable() {
        let u = single_atom_resonant_potential(
            Environment::PerfectMirror,
            Position3::new(0.0, 0.0, 1e-7),
            &z_dipole(),
            OMEGA,
            OMEGA,
        )
        .unwrap();
        assert_relative_eq!(u, -2.2590154813068367e-27, max_relative = 1e-10);
        assert!(u < 0.0, "perpendicular dipole is attracted to the plate");
    }

    #[test]
    fn short_distance_matches_static_image_dipole() {
        // kz -> 0 for a perpendicular dipole: U -> -|d|^2 / (16 pi eps0 z^3),
        // the electrostatic energy of the dipole and its image at spacing 2z
        let k = OMEGA / SPEED_OF_LIGHT;
        let z = 1e-3 / k;
        let u = single_atom_resonant_potential(
            Environment::PerfectMirror,
            Position3::new(0.0, 0.0, z),
            &z_dipole(),
            OMEGA,
            OMEGA,
        )
        .unwrap();
        let image = -DIPOLE * DIPOLE
            / (16.0 * std::f64::consts::PI * VACUUM_PERMITTIVITY * z.powi(3));
        assert_relative_eq!(u, image, max_relative = 1e-2);
    }

    #[test]
    fn far_field_oscillation_period_is_half_wavelength() {
        // zeros of the perpendicular-dipole potential over kz in [10, 30]
        // repeat every quarter wavelength, so twice the mean zero spacing
        // recovers pi/k
        let k = OMEGA / SPEED_OF_LIGHT;
        let n_samples = 4000;
        let mut zeros = Vec::new();
        let mut prev: Option<(f64, f64)> = None;
        for i in 0..n_samples {
            let kz = 10.0 + 20.0 * i as f64 / (n_samples - 1) as f64;
            let z = kz / k;
            let u = single_atom_resonant_potential(
                Environment::PerfectMirror,
                Position3::new(0.0, 0.0, z),
                &z_dipole(),
                OMEGA,
                OMEGA,
            )
            .unwrap();
            if let Some((zp, up)) = prev {
                if up == 0.0 || up.signum() != u.signum() {
                    zeros.push(zp + (z - zp) * up / (up - u));
                }
            }
            prev = Some((z, u));
        }
        assert!(zeros.len() > 10, "expected many crossings, got {}", zeros.len());
        let spacing: f64 =
            zeros.windows(2).map(|w| w[1] - w[0]).sum::<f64>() / (zeros.len() - 1) as f64;
        assert_relative_eq!(
            2.0 * spacing,
            std::f64::consts::PI / k,
            max_relative = 1e-2
        );
    }

    #[test]
    fn far_field_envelope_of_tangential_dipole_decays_inversely_with_distance() {
        // local maxima of |U| for an in-plane dipole over kz in [10, 30]
        // follow a 1/z envelope (the perpendicular dipole decays faster)
        let k = OMEGA / SPEED_OF_LIGHT;
        let n_samples = 6000;
        let us: Vec<(f64, f64)> = (0..n_samples)
            .map(|i| {
                let kz = 10.0 + 20.0 * i as f64 / (n_samples - 1) as f64;
                let z = kz / k;
                let u = single_atom_resonant_potential(
                    Environment::PerfectMirror,
                    Position3::new(0.0, 0.0, z),
                    &x_dipole(),
                    OMEGA,
                    OMEGA,
                )
                .unwrap();
                (z, u.abs())
            })
            .collect();
        let mut lnz = Vec::new();
        let mut lnu = Vec::new();
        for w in us.windows(3) {
            if w[1].1 > w[0].1 && w[1].1 > w[2].1 {
                lnz.push(w[1].0.ln());
                lnu.push(w[1].1.ln());
            }
        }
        assert!(lnz.len() >= 5, "too few envelope maxima: {}", lnz.len());
        let n = lnz.len() as f64;
        let mx = lnz.iter().sum::<f64>() / n;
        let my = lnu.iter().sum::<f64>() / n;
        let slope = lnz
            .iter()
            .zip(&lnu)
            .map(|(x, y)| (x - mx) * (y - my))
            .sum::<f64>()
            / lnz.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
        assert!(
            (slope + 1.0).abs() < 0.05,
            "envelope log-log slope {slope:.4}, expected -1"
        );
    }

    #[test]
    fn ladder_coefficients_match_cascade_combinatorics() {
        let pl = build_potential_ladder(&mirror_config(1), -1.0e-27).unwrap();
        assert_eq!(pl.coefficients(), &[0, 1]);
        let pl = build_potential_ladder(&mirror_config(50), -1.0e-27).unwrap();
        assert_eq!(pl.coefficients()[50], 50);
        assert_eq!(pl.coefficients()[25], 650);
        assert_eq!(
            pl.coefficients().iter().max().copied(),
            Some(650)
        );
        for n in 1..=50usize {
            assert_eq!(pl.coefficients()[n], pl.coefficients()[51 - n]);
        }
        assert_relative_eq!(pl.level_potential(50).unwrap(), -5.0e-26);
        assert!(pl.level_potential(51).is_err());
    }

    #[test]
    fn collective_potential_endpoints_and_sign() {
        let cfg = mirror_config(10);
        let ladder = build_rate_ladder(&cfg).unwrap();
        let u_single = single_atom_resonant_potential(
            cfg.environment,
            cfg.position,
            &cfg.dipole,
            cfg.omega_a,
            cfg.omega_a,
        )
        .unwrap();
        let pl = build_potential_ladder(&cfg, u_single).unwrap();
        let opts = SolverOptions::default();
        let traj = solve_rate_equations(&ladder, 2.0 * default_t_max(&ladder), &opts).unwrap();
        let u = collective_potential(&traj, &pl).unwrap();
        assert_eq!(u.unit(), "J");
        assert_relative_eq!(u.values()[0], 10.0 * u_single, max_relative = 1e-12);
        // fully decayed ensemble exerts no resonant potential
        let last = *u.values().last().unwrap();
        assert!(last.abs() < 1e-4 * u_single.abs());
        // perpendicular Rb dipole at 100 nm: attractive the whole way down
        assert!(u.values().iter().all(|&v| v <= 0.0));
    }

    #[test]
    fn potential_peaks_when_emission_peaks() {
        let cfg = mirror_config(12);
        let ladder = build_rate_ladder(&cfg).unwrap();
        let pl = build_potential_ladder(&cfg, -1e-27).unwrap();
        let opts = SolverOptions::default();
        let traj = solve_rate_equations(&ladder, default_t_max(&ladder), &opts).unwrap();
        let u = collective_potential(&traj, &pl).unwrap();
        let i_series = crate::dynamics::emission_intensity(&traj, &ladder).unwrap();
        let argmax = |vals: &[f64]| {
            vals.iter()
                .map(|v| v.abs())
                .enumerate()
                .max_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap()
                .0
        };
        // same weighted ladder sum up to per-level constants
        let du = argmax(u.values());
        let di = argmax(i_series.values());
        assert!(du.abs_diff(di) <= 1, "peaks separated by {} grid steps", du.abs_diff(di));
    }

    #[test]
    fn potential_is_linear_in_the_single_emitter_value() {
        let cfg = mirror_config(5);
        let ladder = build_rate_ladder(&cfg).unwrap();
        let opts = SolverOptions::default();
        let traj = solve_rate_equations(&ladder, default_t_max(&ladder), &opts).unwrap();
        let u1 = collective_potential(&traj, &build_potential_ladder(&cfg, -2e-27).unwrap())
            .unwrap();
        let u2 = collective_potential(&traj, &build_potential_ladder(&cfg, -6e-27).unwrap())
            .unwrap();
        // same trajectory, scaled ladder: agreement up to reordering rounding
        for (a, b) in u1.values().iter().zip(u2.values()) {
            assert_relative_eq!(3.0 * a, *b, max_relative = 1e-14);
        }
    }

    #[test]
    fn plate_domain_and_inputs_are_checked() {
        assert!(single_atom_resonant_potential(
            Environment::PerfectMirror,
            Position3::new(0.0, 0.0, -1e-9),
            &z_dipole(),
            OMEGA,
            OMEGA
        )
        .is_err());
        assert!(single_atom_resonant_potential(
            Environment::PerfectMirror,
            Position3::new(0.0, 0.0, 1e-7),
            &z_dipole(),
            OMEGA,
            -1.0
        )
        .is_err());
    }
}
