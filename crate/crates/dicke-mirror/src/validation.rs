//! Built-in invariant suite behind the `validate` subcommand. Every check
//! compares a live computation against a closed form or a value frozen from
//! an independent implementation, so a passing run certifies the physics
//! stack on the machine at hand, not just at the time the tests last ran.

use num_complex::Complex64;

use crate::constants::{SPEED_OF_LIGHT, VACUUM_PERMITTIVITY};
use crate::dynamics::{
    default_t_max, emission_intensity, solve_driven_coherences, solve_lindblad,
    solve_rate_equations, DriveConfig, SolverOptions,
};
use crate::error::Result;
use crate::fidelity::fidelity;
use crate::greens::{im_coincident_green, mirror_scatter_green, Environment, Position3};
use crate::ladder::{build_rate_ladder, free_space_rate, purcell_factor, EnsembleConfig};
use crate::ode::{integrate_to_grid, OdeOptions};

/// Outcome of one named check.
#[derive(Debug, Clone)]
pub struct CheckReport {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

const OMEGA_A: f64 = 2.37e15;
const DIPOLE: f64 = 2.53e-29;
const HEIGHT: f64 = 1e-7;

// frozen from an independent implementation of the same formulas
const GAMMA0: f64 = 35935852.622689776;
const F_PERP: f64 = 1.7713286941577877;
const F_PAR: f64 = 0.437004336267945;
const U_SINGLE: f64 = -2.2590154813068367e-27;
const OBE_STEADY: f64 = 0.31085632633115906;
const CROSSING_95: f64 = 0.5034073596627684;

fn dipole_z() -> [Complex64; 3] {
    [
        Complex64::ZERO,
        Complex64::ZERO,
        Complex64::new(DIPOLE, 0.0),
    ]
}

fn dipole_x() -> [Complex64; 3] {
    [
        Complex64::new(DIPOLE, 0.0),
        Complex64::ZERO,
        Complex64::ZERO,
    ]
}

fn ensemble(n_atoms: usize) -> EnsembleConfig {
    EnsembleConfig {
        n_atoms,
        omega_a: OMEGA_A,
        dipole: dipole_z(),
        position: Position3::new(0.0, 0.0, HEIGHT),
        environment: Environment::PerfectMirror,
    }
}

fn fast_opts() -> SolverOptions {
    SolverOptions {
        grid_points: 256,
        ..SolverOptions::default()
    }
}

fn report(name: &'static str, result: Result<(bool, String)>) -> CheckReport {
    match result {
        Ok((passed, detail)) => CheckReport {
            name,
            passed,
            detail,
        },
        Err(e) => CheckReport {
            name,
            passed: false,
            detail: format!("errored: {e}"),
        },
    }
}

/// Run every invariant check. Deterministic and self-contained; the whole
/// suite finishes in a few seconds.
pub fn run_invariant_suite() -> Vec<CheckReport> {
    vec![
        report("bulk-green-normalization", bulk_green_normalization()),
        report("image-tensor-reciprocity", image_tensor_reciprocity()),
        report("mirror-rate-closed-form", mirror_rate_closed_form()),
        report("bulk-rate-value", bulk_rate_value()),
        report("integrator-accuracy", integrator_accuracy()),
        report("single-emitter-decay", single_emitter_decay()),
        report("pair-burst-closed-form", pair_burst_closed_form()),
        report("population-conservation", population_conservation()),
        report("photon-count", photon_count()),
        report("driven-steady-state", driven_steady_state()),
        report("matrix-vs-element-dynamics", matrix_vs_element_dynamics()),
        report("pair-fidelity-crossing", pair_fidelity_crossing()),
        report("image-potential-contact-limit", image_potential_contact_limit()),
        report("resonant-potential-value", resonant_potential_value()),
    ]
}

fn rel_check(measured: f64, expected: f64, tol: f64) -> (bool, String) {
    let dev = if expected == 0.0 {
        measured.abs()
    } else {
        (measured / expected - 1.0).abs()
    };
    (
        dev <= tol,
        format!("measured {measured:.12e}, expected {expected:.12e}, rel dev {dev:.2e} (tol {tol:.0e})"),
    )
}

fn abs_check(measured: f64, tol: f64, label: &str) -> (bool, String) {
    (
        measured <= tol,
        format!("{label} {measured:.2e} (tol {tol:.0e})"),
    )
}

fn bulk_green_normalization() -> Result<(bool, String)> {
    let r = Position3::new(0.3, -0.2, 0.9);
    let g = im_coincident_green(Environment::FreeSpace, r, OMEGA_A)?;
    let expected = OMEGA_A / (6.0 * std::f64::consts::PI * SPEED_OF_LIGHT);
    let mut worst = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            let want = if i == j { expected } else { 0.0 };
            worst = worst.max((g.get(i, j).re - want).abs() / expected);
            worst = worst.max(g.get(i, j).im.abs() / expected);
        }
    }
    Ok(abs_check(worst, 1e-14, "max tensor deviation"))
}

fn image_tensor_reciprocity() -> Result<(bool, String)> {
    let r1 = Position3::new(3.1e-8, -4.5e-8, 0.8e-7);
    let r2 = Position3::new(-1.2e-8, 2.9e-8, 1.7e-7);
    let fwd = mirror_scatter_green(r1, r2, OMEGA_A)?;
    let back = mirror_scatter_green(r2, r1, OMEGA_A)?.transpose();
    let scale = fwd.max_abs();
    let mut worst = 0.0f64;
    for i in 0..3 {
        for j in 0..3 {
            worst = worst.max((fwd.get(i, j) - back.get(i, j)).norm() / scale);
        }
    }
    Ok(abs_check(worst, 1e-13, "max reciprocity violation"))
}

fn mirror_rate_closed_form() -> Result<(bool, String)> {
    let r = Position3::new(0.0, 0.0, HEIGHT);
    let perp = purcell_factor(Environment::PerfectMirror, r, &dipole_z(), OMEGA_A)?;
    let par = purcell_factor(Environment::PerfectMirror, r, &dipole_x(), OMEGA_A)?;
    let (ok1, d1) = rel_check(perp, F_PERP, 1e-12);
    let (ok2, d2) = rel_check(par, F_PAR, 1e-12);
    Ok((ok1 && ok2, format!("normal: {d1}; tangential: {d2}")))
}

fn bulk_rate_value() -> Result<(bool, String)> {
    Ok(rel_check(free_space_rate(OMEGA_A, &dipole_z()), GAMMA0, 1e-12))
}

fn integrator_accuracy() -> Result<(bool, String)> {
    let opts = OdeOptions::default();
    let t_end = 20.0 * std::f64::consts::PI;
    let grid: Vec<f64> = (0..=200).map(|i| t_end * i as f64 / 200.0).collect();
    let mut worst = 0.0f64;
    integrate_to_grid(
        |_t, y, dy| {
            dy[0] = y[1];
            dy[1] = -y[0];
        },
        &[1.0, 0.0],
        &grid,
        &opts,
        |i, _t, y| {
            let t = grid[i];
            worst = worst.max((y[0] - t.cos()).abs().max((y[1] + t.sin()).abs()));
        },
    )?;
    Ok(abs_check(worst, 1e-6, "max error over 10 periods"))
}

fn single_emitter_decay() -> Result<(bool, String)> {
    let ladder = build_rate_ladder(&ensemble(1))?;
    let gamma = ladder.effective_rate();
    let traj = solve_rate_equations(&ladder, 5.0 / gamma, &fast_opts())?;
    let p1 = traj.level_series(1)?;
    let mut worst = 0.0f64;
    for (i, &t) in traj.times().iter().enumerate() {
        worst = worst.max((p1[i] - (-gamma * t).exp()).abs());
    }
    Ok(abs_check(worst, 1e-8, "max |p. - exp(-Gt)|"))
}

fn pair_burst_closed_form() -> Result<(bool, String)> {
    let ladder = build_rate_ladder(&ensemble(2))?;
    let g = ladder.effective_rate();
    let traj = solve_rate_equations(&ladder, 6.0 / g, &fast_opts())?;
    let intensity = emission_intensity(&traj, &ladder)?;
    let p1 = traj.level_series(1)?;
    let i0 = intensity.values()[0];
    let mut worst_p = 0.0f64;
    let mut worst_i = 0.0f64;
    for (i, &t) in traj.times().iter().enumerate() {
        let gt = g * t;
        worst_p = worst_p.max((p1[i] - 2.0 * gt * (-2.0 * gt).exp()).abs());
        let want = 2.0 * g * (-2.0 * gt).exp() * (1.0 + 2.0 * gt);
        worst_i = worst_i.max((intensity.values()[i] - want).abs() / i0);
    }
    let (ok1, d1) = abs_check(worst_p, 1e-8, "population dev");
    let (ok2, d2) = abs_check(worst_i, 1e-8, "intensity dev");
    Ok((ok1 && ok2, format!("{d1}; {d2}")))
}

fn population_conservation() -> Result<(bool, String)> {
    let ladder = build_rate_ladder(&ensemble(12))?;
    let traj = solve_rate_equations(&ladder, default_t_max(&ladder), &fast_opts())?;
    let mut worst_sum = 0.0f64;
    let mut most_negative = 0.0f64;
    for i in 0..traj.len() {
        let row = traj.populations_at(i);
        worst_sum = worst_sum.max((row.iter().sum::<f64>() - 1.0).abs());
        most_negative = most_negative.min(row.iter().cloned().fold(f64::INFINITY, f64::min));
    }
    let ok = worst_sum <= 1e-9 && most_negative >= -1e-9;
    Ok((
        ok,
        format!("max |sum p - 1| = {worst_sum:.2e}, most negative entry {most_negative:.2e}"),
    ))
}

fn photon_count() -> Result<(bool, String)> {
    let ladder = build_rate_ladder(&ensemble(10))?;
    let g = ladder.effective_rate();
    // the full default grid: the trapezoid sum needs the resolution
    let traj = solve_rate_equations(&ladder, 20.0 / g, &SolverOptions::default())?;
    let intensity = emission_intensity(&traj, &ladder)?;
    let photons = crate::analysis::total_photons(&intensity);
    Ok(rel_check(photons, 10.0, 1e-3))
}

fn driven_steady_state() -> Result<(bool, String)> {
    let cfg = ensemble(1);
    let drive = DriveConfig::from_intensity(30_000.0, 2.0 * std::f64::consts::PI * 1e8)?;
    let ladder = build_rate_ladder(&cfg)?;
    let t_max = 40.0 / ladder.effective_rate();
    let traj = solve_driven_coherences(&cfg, Some(&drive), t_max, &fast_opts())?;
    let p_end = *traj.level_series(1)?.last().unwrap();
    let (ok, detail) = rel_check(p_end, OBE_STEADY, 1e-6);
    Ok((ok, format!("saturated excited-state population: {detail}")))
}

fn matrix_vs_element_dynamics() -> Result<(bool, String)> {
    let cfg = ensemble(3);
    let drive = DriveConfig::from_intensity(30_000.0, 2.0 * std::f64::consts::PI * 1e8)?;
    let ladder = build_rate_ladder(&cfg)?;
    let t_max = 0.3 / ladder.effective_rate();
    let opts = fast_opts();
    let a = solve_lindblad(&cfg, Some(&drive), t_max, &opts)?;
    let b = solve_driven_coherences(&cfg, Some(&drive), t_max, &opts)?;
    let mut worst = 0.0f64;
    for i in 0..a.len() {
        for n in 0..=3 {
            worst = worst.max((a.populations_at(i)[n] - b.populations_at(i)[n]).abs());
        }
    }
    Ok(abs_check(worst, 1e-6, "max population split between solvers"))
}

fn pair_fidelity_crossing() -> Result<(bool, String)> {
    let k = OMEGA_A / SPEED_OF_LIGHT;
    let r1 = Position3::new(0.0, 0.0, HEIGHT);
    let r2 = Position3::new(CROSSING_95 / k, 0.0, HEIGHT);
    let f = fidelity(r1, r2, &dipole_z(), OMEGA_A, Environment::FreeSpace)?;
    Ok(rel_check(f, 0.95, 1e-9))
}

fn image_potential_contact_limit() -> Result<(bool, String)> {
    let z = 1e-10;
    let u = crate::casimir::single_atom_resonant_potential(
        Environment::PerfectMirror,
        Position3::new(0.0, 0.0, z),
        &dipole_z(),
        OMEGA_A,
        OMEGA_A,
    )?;
    let stat = -DIPOLE * DIPOLE / (16.0 * std::f64::consts::PI * VACUUM_PERMITTIVITY * z.powi(3));
    Ok(rel_check(u, stat, 1e-5))
}

fn resonant_potential_value() -> Result<(bool, String)> {
    let u = crate::casimir::single_atom_resonant_potential(
        Environment::PerfectMirror,
        Position3::new(0.0, 0.0, HEIGHT),
        &dipole_z(),
        OMEGA_A,
        OMEGA_A,
    )?;
    Ok(rel_check(u, U_SINGLE, 1e-12))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_check_passes() {
        for check in run_invariant_suite() {
            assert!(check.passed, "{}: {}", check.name, check.detail);
        }
    }

    #[test]
    fn suite_covers_all_modules() {
        let names: Vec<&str> = run_invariant_suite().iter().map(|c| c.name).collect();
        assert_eq!(names.len(), 14);
        let mut sorted = names.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), names.len(), "duplicate check names");
    }
}
