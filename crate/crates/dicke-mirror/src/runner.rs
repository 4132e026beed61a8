//! Experiment orchestration: build the physics objects from a parsed
//! configuration, run the requested pipeline, and serialize data files plus
//! a manifest. The manifest is written last, so its presence certifies that
//! every data file in the directory is complete.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use crate::analysis::{fwhm, peak, power_law_fit, PowerLawFit};
use crate::casimir::{build_potential_ladder, collective_potential, single_atom_resonant_potential};
use crate::config::{Experiment, RunConfig};
use crate::constants::{REDUCED_PLANCK, SPEED_OF_LIGHT, VACUUM_PERMITTIVITY};
use crate::csvout::{write_csv, write_manifest, CsvValue};
use crate::dynamics::{
    default_t_max, emission_intensity, solve_driven_coherences, solve_rate_equations, DriveConfig,
    LevelTrajectory, SolverOptions,
};
use crate::error::{Error, Result};
use crate::fidelity::{corridor_mask, fidelity_map};
use crate::ladder::{build_rate_ladder, RateLadder};
use crate::series::TimeSeries;

/// Paths written by a run plus the manifest entries, in file order.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub files: Vec<PathBuf>,
    pub manifest: Vec<(String, String)>,
    pub warnings: Vec<String>,
}

/// Execute the configured experiment into `out_dir`. With `threads` set the
/// run uses its own worker pool of that size; otherwise the global default.
pub fn run_experiment(cfg: &RunConfig, out_dir: &Path, threads: Option<usize>) -> Result<RunOutput> {
    let started = Instant::now();
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    match threads {
        None => run_inner(cfg, out_dir, started),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build()
                .map_err(|e| Error::SolverFailure {
                    t: 0.0,
                    detail: format!("worker pool construction failed: {e}"),
                })?;
            pool.install(|| run_inner(cfg, out_dir, started))
        }
    }
}

fn run_inner(cfg: &RunConfig, out_dir: &Path, started: Instant) -> Result<RunOutput> {
    let drive = cfg.drive_config()?;
    let mut warnings = Vec::new();
    if let Some(d) = &drive {
        if d.rwa_strained(cfg.omega_a) {
            warnings.push(format!(
                "detuning is {:.3e} of the transition frequency; the rotating-wave step \
                 assumed |detuning| / omega_a <= 1e-3",
                (d.detuning / cfg.omega_a).abs()
            ));
        }
        if cfg.experiment == Experiment::FidelityMap {
            warnings.push(
                "the pair-fidelity map is a property of the undriven decay channels; \
                 drive settings are ignored"
                    .to_string(),
            );
        }
    }

    let mut files = Vec::new();
    let mut extra: Vec<(String, String)> = Vec::new();
    match cfg.experiment {
        Experiment::Emission => {
            let ladder = build_rate_ladder(&cfg.ensemble())?;
            let t_max = cfg.t_max.unwrap_or_else(|| default_t_max(&ladder));
            let traj = cascade_trajectory(cfg, &ladder, drive.as_ref(), t_max)?;
            let intensity = emission_intensity(&traj, &ladder)?;
            let path = out_dir.join("emission.csv");
            write_intensity_csv(&path, &intensity, ladder.gamma0())?;
            files.push(path);
            if let Some(t) = traj.driven_validity_t() {
                extra.push(("derived.validity_horizon_s".to_string(), t.to_string()));
            }
        }
        Experiment::Potential => {
            let ladder = build_rate_ladder(&cfg.ensemble())?;
            let omega_l = drive
                .as_ref()
                .map(|d| d.omega_laser(cfg.omega_a))
                .unwrap_or(cfg.omega_a);
            let u_single = single_atom_resonant_potential(
                cfg.environment,
                cfg.position,
                &cfg.dipole_vector(),
                cfg.omega_a,
                omega_l,
            )?;
            if u_single == 0.0 {
                warnings.push(
                    "no environment-induced resonant potential at this configuration; \
                     the potential table is identically zero"
                        .to_string(),
                );
            }
            let pl = build_potential_ladder(&cfg.ensemble(), u_single)?;
            let t_max = cfg.t_max.unwrap_or_else(|| default_t_max(&ladder));
            let traj = cascade_trajectory(cfg, &ladder, drive.as_ref(), t_max)?;
            let potential = collective_potential(&traj, &pl)?;
            let path = out_dir.join("potential.csv");
            write_csv(
                &path,
                &["t_s", "potential_j"],
                potential
                    .times()
                    .iter()
                    .zip(potential.values())
                    .map(|(&t, &u)| vec![CsvValue::Float(t), CsvValue::Float(u)]),
            )?;
            files.push(path);
            extra.push(("derived.u_single_j".to_string(), u_single.to_string()));
            if let Some(t) = traj.driven_validity_t() {
                extra.push(("derived.validity_horizon_s".to_string(), t.to_string()));
            }
        }
        Experiment::FidelityMap => {
            let map = fidelity_map(
                &cfg.grid_spec(),
                cfg.position,
                &cfg.dipole_vector(),
                cfg.omega_a,
                cfg.environment,
            )?;
            let mask = corridor_mask(&map, 0.95, 1.05);
            let path = out_dir.join("fidelity_map.csv");
            let nz = map.nz();
            write_csv(
                &path,
                &["x_m", "z_m", "F", "in_corridor"],
                (0..map.nx() * nz).map(|idx| {
                    let (ix, iz) = (idx / nz, idx % nz);
                    vec![
                        CsvValue::Float(map.xs()[ix]),
                        CsvValue::Float(map.zs()[iz]),
                        CsvValue::Float(map.value(ix, iz)),
                        CsvValue::Bool(mask[idx]),
                    ]
                }),
            )?;
            files.push(path);
        }
        Experiment::Scaling => {
            run_scaling(cfg, out_dir, drive.as_ref(), &mut files, &mut extra)?;
        }
    }

    let mut manifest = base_manifest(cfg, drive.as_ref())?;
    manifest.extend(extra);
    manifest.push((
        "manifest.duration_s".to_string(),
        format!("{:.3}", started.elapsed().as_secs_f64()),
    ));
    for line in cfg.to_text().lines() {
        let (k, v) = line.split_once(" = ").expect("canonical config line");
        manifest.push((format!("config.{k}"), v.to_string()));
    }
    let manifest_path = out_dir.join("manifest.txt");
    write_manifest(&manifest_path, &manifest)?;
    files.push(manifest_path);
    Ok(RunOutput {
        files,
        manifest,
        warnings,
    })
}

/// Level populations for the emission and potential pipelines: the plain
/// cascade when undriven, the diagonal of the driven flip-operator system
/// otherwise.
fn cascade_trajectory(
    cfg: &RunConfig,
    ladder: &RateLadder,
    drive: Option<&DriveConfig>,
    t_max: f64,
) -> Result<LevelTrajectory> {
    let opts: SolverOptions = cfg.solver_options();
    match drive {
        None => solve_rate_equations(ladder, t_max, &opts),
        Some(d) => solve_driven_coherences(&cfg.ensemble(), Some(d), t_max, &opts),
    }
}

fn write_intensity_csv(path: &Path, intensity: &TimeSeries, gamma0: f64) -> Result<()> {
    write_csv(
        path,
        &["t_s", "intensity_per_s", "intensity_over_gamma0"],
        intensity
            .times()
            .iter()
            .zip(intensity.values())
            .map(|(&t, &v)| {
                vec![
                    CsvValue::Float(t),
                    CsvValue::Float(v),
                    CsvValue::Float(v / gamma0),
                ]
            }),
    )
}

struct BurstRow {
    n_atoms: usize,
    peak_height: f64,
    fwhm: f64,
    t_peak: f64,
}

fn burst_row(n_atoms: usize, series: &TimeSeries) -> Result<BurstRow> {
    let p = peak(series)?;
    let w = fwhm(series)?;
    Ok(BurstRow {
        n_atoms,
        peak_height: p.height,
        fwhm: w.fwhm,
        t_peak: p.t_peak,
    })
}

fn run_scaling(
    cfg: &RunConfig,
    out_dir: &Path,
    drive: Option<&DriveConfig>,
    files: &mut Vec<PathBuf>,
    extra: &mut Vec<(String, String)>,
) -> Result<()> {
    let counts = cfg.scaling.atom_counts();
    let omega_l = drive
        .map(|d| d.omega_laser(cfg.omega_a))
        .unwrap_or(cfg.omega_a);
    let u_single = single_atom_resonant_potential(
        cfg.environment,
        cfg.position,
        &cfg.dipole_vector(),
        cfg.omega_a,
        omega_l,
    )?;

    // independent solves, one per ensemble size
    let rows: Vec<(BurstRow, Option<BurstRow>)> = counts
        .par_iter()
        .map(|&n| {
            let ensemble = cfg.ensemble_with_n(n);
            let ladder = build_rate_ladder(&ensemble)?;
            let t_max = cfg.t_max.unwrap_or_else(|| default_t_max(&ladder));
            let opts: SolverOptions = cfg.solver_options();
            let traj = match drive {
                None => solve_rate_equations(&ladder, t_max, &opts)?,
                Some(d) => solve_driven_coherences(&ensemble, Some(d), t_max, &opts)?,
            };
            let intensity = emission_intensity(&traj, &ladder)?;
            let i_row = burst_row(n, &intensity)?;
            let u_row = if u_single != 0.0 {
                let pl = build_potential_ladder(&ensemble, u_single)?;
                let potential = collective_potential(&traj, &pl)?;
                Some(burst_row(n, &potential)?)
            } else {
                None
            };
            Ok((i_row, u_row))
        })
        .collect::<Result<Vec<_>>>()?;

    let intensity_path = out_dir.join("scaling_intensity.csv");
    write_csv(
        &intensity_path,
        &["n_atoms", "peak_per_s", "fwhm_s", "t_peak_s"],
        rows.iter().map(|(r, _)| {
            vec![
                CsvValue::Int(r.n_atoms as i64),
                CsvValue::Float(r.peak_height),
                CsvValue::Float(r.fwhm),
                CsvValue::Float(r.t_peak),
            ]
        }),
    )?;
    files.push(intensity_path);

    let mut fits: Vec<(&'static str, PowerLawFit)> = Vec::new();
    let points = |sel: fn(&BurstRow) -> f64, rows: &[&BurstRow]| -> Vec<(f64, f64)> {
        rows.iter().map(|r| (r.n_atoms as f64, sel(r))).collect()
    };
    let i_rows: Vec<&BurstRow> = rows.iter().map(|(r, _)| r).collect();
    fits.push((
        "intensity_peak",
        power_law_fit(&points(|r| r.peak_height, &i_rows))?,
    ));
    fits.push(("intensity_fwhm", power_law_fit(&points(|r| r.fwhm, &i_rows))?));
    fits.push((
        "intensity_t_peak",
        power_law_fit(&points(|r| r.t_peak, &i_rows))?,
    ));

    let u_rows: Vec<&BurstRow> = rows.iter().filter_map(|(_, u)| u.as_ref()).collect();
    if !u_rows.is_empty() {
        let potential_path = out_dir.join("scaling_potential.csv");
        write_csv(
            &potential_path,
            &["n_atoms", "peak_j", "fwhm_s", "t_peak_s"],
            u_rows.iter().map(|r| {
                vec![
                    CsvValue::Int(r.n_atoms as i64),
                    CsvValue::Float(r.peak_height),
                    CsvValue::Float(r.fwhm),
                    CsvValue::Float(r.t_peak),
                ]
            }),
        )?;
        files.push(potential_path);
        fits.push((
            "potential_peak",
            power_law_fit(&points(|r| r.peak_height, &u_rows))?,
        ));
        fits.push((
            "potential_fwhm",
            power_law_fit(&points(|r| r.fwhm, &u_rows))?,
        ));
        fits.push((
            "potential_t_peak",
            power_law_fit(&points(|r| r.t_peak, &u_rows))?,
        ));
        extra.push(("derived.u_single_j".to_string(), u_single.to_string()));
    }

    let exponents_path = out_dir.join("exponents.csv");
    write_csv(
        &exponents_path,
        &["observable", "exponent", "log_prefactor", "r_squared"],
        fits.iter().map(|(name, fit)| {
            vec![
                CsvValue::Label(name),
                CsvValue::Float(fit.exponent),
                CsvValue::Float(fit.log_prefactor),
                CsvValue::Float(fit.r_squared),
            ]
        }),
    )?;
    files.push(exponents_path);
    Ok(())
}

fn base_manifest(cfg: &RunConfig, drive: Option<&DriveConfig>) -> Result<Vec<(String, String)>> {
    let ladder = build_rate_ladder(&cfg.ensemble())?;
    let mut m: Vec<(String, String)> = vec![
        (
            "manifest.tool_version".to_string(),
            env!("CARGO_PKG_VERSION").to_string(),
        ),
        ("manifest.format".to_string(), "1".to_string()),
        (
            "constants.speed_of_light_m_s".to_string(),
            SPEED_OF_LIGHT.to_string(),
        ),
        (
            "constants.vacuum_permittivity_f_m".to_string(),
            VACUUM_PERMITTIVITY.to_string(),
        ),
        (
            "constants.reduced_planck_j_s".to_string(),
            REDUCED_PLANCK.to_string(),
        ),
        ("derived.gamma0_per_s".to_string(), ladder.gamma0().to_string()),
        ("derived.purcell".to_string(), ladder.purcell().to_string()),
        (
            "derived.effective_rate_per_s".to_string(),
            ladder.effective_rate().to_string(),
        ),
        (
            "derived.n_gamma_per_s".to_string(),
            (cfg.n_atoms as f64 * ladder.effective_rate()).to_string(),
        ),
    ];
    if let Some(d) = drive {
        m.push((
            "derived.rabi_rad_s".to_string(),
            d.rabi_frequency(&cfg.dipole_vector()).to_string(),
        ));
        m.push(("derived.field_v_m".to_string(), d.field.to_string()));
        m.push((
            "derived.omega_l_rad_s".to_string(),
            d.omega_laser(cfg.omega_a).to_string(),
        ));
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn emission_run_writes_csv_then_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = parse_config("experiment = emission\natoms.N = 3\n").unwrap();
        let out = run_experiment(&cfg, dir.path(), Some(2)).unwrap();
        assert!(out.warnings.is_empty());
        let names: Vec<_> = out
            .files
            .iter()
            .map(|p| p.file_name().unwrap().to_str().unwrap().to_string())
            .collect();
        assert_eq!(names, vec!["emission.csv", "manifest.txt"]);
        let text = std::fs::read_to_string(&out.files[0]).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t_s,intensity_per_s,intensity_over_gamma0"
        );
        let first = lines.next().unwrap();
        assert!(first.starts_with("0.00000000e0,"), "{first}");
    }

    #[test]
    fn emission_is_deterministic_across_invocations() {
        let cfg = parse_config("experiment = emission\natoms.N = 4\n").unwrap();
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        run_experiment(&cfg, d1.path(), Some(1)).unwrap();
        run_experiment(&cfg, d2.path(), Some(3)).unwrap();
        let a = std::fs::read(d1.path().join("emission.csv")).unwrap();
        let b = std::fs::read(d2.path().join("emission.csv")).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn manifest_derived_block_matches_recomputation() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = parse_config(
            "experiment = emission\natoms.N = 5\ndrive.intensity_w_m2 = 30000\n",
        )
        .unwrap();
        let out = run_experiment(&cfg, dir.path(), None).unwrap();
        let get = |key: &str| -> f64 {
            out.manifest
                .iter()
                .find(|(k, _)| k == key)
                .unwrap_or_else(|| panic!("missing {key}"))
                .1
                .parse()
                .unwrap()
        };
        let ladder = build_rate_ladder(&cfg.ensemble()).unwrap();
        assert_eq!(get("derived.gamma0_per_s"), ladder.gamma0());
        assert_eq!(get("derived.purcell"), ladder.purcell());
        assert_eq!(
            get("derived.n_gamma_per_s"),
            5.0 * ladder.effective_rate()
        );
        let drive = cfg.drive_config().unwrap().unwrap();
        assert_eq!(
            get("derived.rabi_rad_s"),
            drive.rabi_frequency(&cfg.dipole_vector())
        );
        assert_eq!(get("derived.validity_horizon_s"), 0.3 / ladder.effective_rate());
        // config echo preserves the canonical serialization
        assert!(out
            .manifest
            .iter()
            .any(|(k, v)| k == "config.atoms.N" && v == "5"));
    }

    #[test]
    fn fidelity_map_row_count_matches_grid() {
        let dir = tempfile::tempdir().unwrap();
        let cfg =
            parse_config("experiment = fidelity-map\nmap.nx = 7\nmap.nz = 5\n").unwrap();
        let out = run_experiment(&cfg, dir.path(), Some(2)).unwrap();
        let text = std::fs::read_to_string(&out.files[0]).unwrap();
        assert_eq!(text.lines().count(), 1 + 7 * 5);
        assert!(text.starts_with("x_m,z_m,F,in_corridor\n"));
    }

    #[test]
    fn free_space_scaling_skips_the_potential_report() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = parse_config(
            "experiment = scaling\nenvironment = free-space\nscaling.n_min = 4\nscaling.n_max = 10\nscaling.n_step = 2\nsolver.grid_points = 400\n",
        )
        .unwrap();
        let out = run_experiment(&cfg, dir.path(), Some(2)).unwrap();
        let names: Vec<_> = out
            .files
            .iter()
            .map(|p| p.file_name().unwrap().to_str().unwrap().to_string())
            .collect();
        assert!(names.contains(&"scaling_intensity.csv".to_string()));
        assert!(names.contains(&"exponents.csv".to_string()));
        assert!(!names.contains(&"scaling_potential.csv".to_string()));
    }

    #[test]
    fn strained_detuning_produces_a_warning() {
        let dir = tempfile::tempdir().unwrap();
        // a detuning this large also makes the rotating frame oscillate fast,
        // so keep the horizon short enough for the step budget
        let cfg = parse_config(
            "experiment = emission\natoms.N = 1\ndrive.field_v_m = 10\ndrive.detuning_rad_s = 1e13\ntime.t_max_s = 1e-9\n",
        )
        .unwrap();
        let out = run_experiment(&cfg, dir.path(), None).unwrap();
        assert_eq!(out.warnings.len(), 1);
        assert!(out.warnings[0].contains("rotating-wave"));
    }

    #[test]
    fn drive_keys_on_a_fidelity_map_are_flagged() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = parse_config(
            "experiment = fidelity-map\nmap.nx = 4\nmap.nz = 4\ndrive.field_v_m = 10\n",
        )
        .unwrap();
        let out = run_experiment(&cfg, dir.path(), None).unwrap();
        assert_eq!(out.warnings.len(), 1);
        assert!(out.warnings[0].contains("ignored"));
    }

    #[test]
    fn free_space_potential_warns_and_stays_zero() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = parse_config(
            "experiment = potential\nenvironment = free-space\natoms.N = 3\nsolver.grid_points = 64\n",
        )
        .unwrap();
        let out = run_experiment(&cfg, dir.path(), None).unwrap();
        assert_eq!(out.warnings.len(), 1);
        assert!(out.warnings[0].contains("identically zero"));
        let text = std::fs::read_to_string(&out.files[0]).unwrap();
        for line in text.lines().skip(1) {
            assert!(line.ends_with(",0.00000000e0"), "nonzero row: {line}");
        }
    }
}
