//! Flat key-value run configuration.
//!
//! Grammar: one `key = value` pair per line, `#` starts a comment, blank
//! lines ignored. Keys are dotted and carry unit suffixes (`_rad_s`, `_m`,
//! `_s`, ...). Unknown keys are hard errors, and a key that matches a known
//! one up to its unit suffix gets a dedicated diagnostic so unit typos
//! cannot silently change the physics. Every error names the key and line.
//!
//! `experiment` is the only required key; everything else defaults to the
//! reference rubidium setup 100 nm above the mirror.

use std::collections::HashMap;

use num_complex::Complex64;

use crate::error::{ConfigError, ConfigErrorKind, Error, Result};
use crate::fidelity::GridSpec;
use crate::greens::{Environment, Position3};
use crate::ladder::{EnsembleConfig, MAX_ATOMS};

/// Which pipeline a run executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    Emission,
    Potential,
    FidelityMap,
    Scaling,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Emission => "emission",
            Experiment::Potential => "potential",
            Experiment::FidelityMap => "fidelity-map",
            Experiment::Scaling => "scaling",
        }
    }
}

/// Dipole orientation along a coordinate axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarization {
    X,
    Y,
    Z,
}

impl Polarization {
    pub fn name(self) -> &'static str {
        match self {
            Polarization::X => "x",
            Polarization::Y => "y",
            Polarization::Z => "z",
        }
    }
}

/// Drive amplitude exactly as the config gave it, so serialization
/// round-trips the user's choice of intensity versus field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DriveAmplitude {
    /// W/m^2
    Intensity(f64),
    /// V/m
    Field(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveSpec {
    pub amplitude: DriveAmplitude,
    /// rad/s, laser minus transition frequency
    pub detuning: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverSpec {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
    pub grid_points: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub z_min: Option<f64>,
    pub z_max: f64,
    pub nz: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScalingSpec {
    pub n_min: usize,
    pub n_max: usize,
    pub n_step: usize,
}

impl ScalingSpec {
    pub fn atom_counts(&self) -> Vec<usize> {
        (self.n_min..=self.n_max).step_by(self.n_step).collect()
    }
}

/// Fully validated run description with all defaults applied.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub experiment: Experiment,
    pub n_atoms: usize,
    pub omega_a: f64,
    pub dipole_magnitude: f64,
    pub polarization: Polarization,
    pub position: Position3,
    pub environment: Environment,
    pub drive: Option<DriveSpec>,
    pub t_max: Option<f64>,
    pub solver: SolverSpec,
    pub map: MapSpec,
    pub scaling: ScalingSpec,
}

const KNOWN_KEYS: &[&str] = &[
    "experiment",
    "atoms.N",
    "atoms.omega_a_rad_s",
    "atoms.dipole_c_m",
    "atoms.polarization",
    "atoms.x_m",
    "atoms.y_m",
    "atoms.z_m",
    "environment",
    "drive.intensity_w_m2",
    "drive.field_v_m",
    "drive.detuning_rad_s",
    "time.t_max_s",
    "solver.rtol",
    "solver.atol",
    "solver.max_steps",
    "solver.grid_points",
    "map.x_min_m",
    "map.x_max_m",
    "map.z_min_m",
    "map.z_max_m",
    "map.nx",
    "map.nz",
    "scaling.n_min",
    "scaling.n_max",
    "scaling.n_step",
];

const UNIT_SUFFIXES: &[&str] = &["_rad_s", "_w_m2", "_v_m", "_c_m", "_m", "_s"];

fn strip_unit_suffix(key: &str) -> (&str, Option<&'static str>) {
    for suffix in UNIT_SUFFIXES {
        if let Some(stem) = key.strip_suffix(suffix) {
            return (stem, Some(suffix));
        }
    }
    (key, None)
}

/// For an unknown key, look for a known key that differs only in the unit
/// suffix and produce the targeted diagnostic.
fn classify_unknown(key: &str) -> ConfigErrorKind {
    for known in KNOWN_KEYS {
        let (stem, suffix) = strip_unit_suffix(known);
        let Some(expected) = suffix else { continue };
        if key == stem {
            return ConfigErrorKind::UnitSuffixMismatch {
                key: key.to_string(),
                got: "(none)".to_string(),
                expected: expected.to_string(),
            };
        }
        if let Some(rest) = key.strip_prefix(stem) {
            if rest.starts_with('_') && rest != expected {
                return ConfigErrorKind::UnitSuffixMismatch {
                    key: key.to_string(),
                    got: rest.to_string(),
                    expected: expected.to_string(),
                };
            }
        }
    }
    ConfigErrorKind::UnknownKey {
        key: key.to_string(),
    }
}

struct RawConfig {
    entries: HashMap<&'static str, (usize, String)>,
}

impl RawConfig {
    fn scan(text: &str) -> std::result::Result<Self, ConfigError> {
        let mut entries: HashMap<&'static str, (usize, String)> = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError::at(line_no, ConfigErrorKind::Syntax));
            };
            let key = key.trim();
            let value = value.trim();
            if key.is_empty() || value.is_empty() {
                return Err(ConfigError::at(line_no, ConfigErrorKind::Syntax));
            }
            let Some(&known) = KNOWN_KEYS.iter().find(|&&k| k == key) else {
                return Err(ConfigError::at(line_no, classify_unknown(key)));
            };
            if entries.contains_key(known) {
                return Err(ConfigError::at(
                    line_no,
                    ConfigErrorKind::DuplicateKey {
                        key: key.to_string(),
                    },
                ));
            }
            entries.insert(known, (line_no, value.to_string()));
        }
        Ok(RawConfig { entries })
    }

    fn take(&mut self, key: &'static str) -> Option<(usize, String)> {
        self.entries.remove(key)
    }

    fn f64(&mut self, key: &'static str) -> std::result::Result<Option<(usize, f64)>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some((line, raw)) => match raw.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(Some((line, v))),
                _ => Err(ConfigError::at(
                    line,
                    ConfigErrorKind::InvalidValue {
                        key: key.to_string(),
                        detail: format!("`{raw}` is not a finite number"),
                    },
                )),
            },
        }
    }

    fn usize(
        &mut self,
        key: &'static str,
    ) -> std::result::Result<Option<(usize, usize)>, ConfigError> {
        match self.take(key) {
            None => Ok(None),
            Some((line, raw)) => match raw.parse::<usize>() {
                Ok(v) => Ok(Some((line, v))),
                Err(_) => Err(ConfigError::at(
                    line,
                    ConfigErrorKind::InvalidValue {
                        key: key.to_string(),
                        detail: format!("`{raw}` is not a nonnegative integer"),
                    },
                )),
            },
        }
    }
}

fn invalid(line: usize, key: &str, detail: impl Into<String>) -> ConfigError {
    ConfigError::at(
        line,
        ConfigErrorKind::InvalidValue {
            key: key.to_string(),
            detail: detail.into(),
        },
    )
}

fn require_positive(
    entry: Option<(usize, f64)>,
    default: f64,
    key: &str,
) -> std::result::Result<f64, ConfigError> {
    match entry {
        None => Ok(default),
        Some((line, v)) => {
            if v > 0.0 {
                Ok(v)
            } else {
                Err(invalid(line, key, format!("must be positive, got {v}")))
            }
        }
    }
}

/// Parse and validate a configuration document.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    parse_config_inner(text).map_err(Error::from)
}

fn parse_config_inner(text: &str) -> std::result::Result<RunConfig, ConfigError> {
    let mut raw = RawConfig::scan(text)?;

    let experiment = match raw.take("experiment") {
        None => {
            return Err(ConfigError::global(ConfigErrorKind::MissingKey {
                key: "experiment".to_string(),
            }))
        }
        Some((line, v)) => match v.as_str() {
            "emission" => Experiment::Emission,
            "potential" => Experiment::Potential,
            "fidelity-map" => Experiment::FidelityMap,
            "scaling" => Experiment::Scaling,
            other => {
                return Err(invalid(
                    line,
                    "experiment",
                    format!("`{other}` is not one of emission | potential | fidelity-map | scaling"),
                ))
            }
        },
    };

    let n_atoms = match raw.usize("atoms.N")? {
        None => 50,
        Some((line, 0)) => return Err(invalid(line, "atoms.N", "must be at least 1")),
        Some((line, v)) if v > MAX_ATOMS => {
            return Err(invalid(
                line,
                "atoms.N",
                format!("must be at most {MAX_ATOMS}"),
            ))
        }
        Some((_, v)) => v,
    };

    let omega_a = require_positive(raw.f64("atoms.omega_a_rad_s")?, 2.37e15, "atoms.omega_a_rad_s")?;
    let dipole_magnitude =
        require_positive(raw.f64("atoms.dipole_c_m")?, 2.53e-29, "atoms.dipole_c_m")?;

    let polarization = match raw.take("atoms.polarization") {
        None => {
            if experiment == Experiment::FidelityMap {
                Polarization::X
            } else {
                Polarization::Z
            }
        }
        Some((line, v)) => match v.as_str() {
            "x" => Polarization::X,
            "y" => Polarization::Y,
            "z" => Polarization::Z,
            other => {
                return Err(invalid(
                    line,
                    "atoms.polarization",
                    format!("`{other}` is not one of x | y | z"),
                ))
            }
        },
    };

    let environment = match raw.take("environment") {
        None => Environment::PerfectMirror,
        Some((line, v)) => match v.as_str() {
            "mirror" => Environment::PerfectMirror,
            "free-space" => Environment::FreeSpace,
            other => {
                return Err(invalid(
                    line,
                    "environment",
                    format!("`{other}` is not one of mirror | free-space"),
                ))
            }
        },
    };

    let x = raw.f64("atoms.x_m")?.map(|(_, v)| v).unwrap_or(0.0);
    let y = raw.f64("atoms.y_m")?.map(|(_, v)| v).unwrap_or(0.0);
    let z_entry = raw.f64("atoms.z_m")?;
    let z = z_entry.map(|(_, v)| v).unwrap_or(1e-7);
    if environment == Environment::PerfectMirror && z <= 0.0 {
        let line = z_entry.map(|(l, _)| l).unwrap_or(0);
        return Err(invalid(
            line,
            "atoms.z_m",
            format!("must be above the plate (z > 0) in the mirror geometry, got {z}"),
        ));
    }
    let position = Position3::new(x, y, z);

    let intensity = raw.f64("drive.intensity_w_m2")?;
    let field = raw.f64("drive.field_v_m")?;
    let detuning = raw.f64("drive.detuning_rad_s")?;
    let drive = match (intensity, field) {
        (Some((line, _)), Some(_)) => {
            return Err(invalid(
                line,
                "drive.intensity_w_m2",
                "give either drive.intensity_w_m2 or drive.field_v_m, not both",
            ))
        }
        (Some((line, v)), None) => {
            if v < 0.0 {
                return Err(invalid(line, "drive.intensity_w_m2", "must be nonnegative"));
            }
            Some(DriveAmplitude::Intensity(v))
        }
        (None, Some((line, v))) => {
            if v < 0.0 {
                return Err(invalid(line, "drive.field_v_m", "must be nonnegative"));
            }
            Some(DriveAmplitude::Field(v))
        }
        (None, None) => {
            if detuning.is_some() {
                return Err(ConfigError::global(ConfigErrorKind::MissingKey {
                    key: "drive.intensity_w_m2 (or drive.field_v_m)".to_string(),
                }));
            }
            None
        }
    };
    let drive = drive.map(|amplitude| DriveSpec {
        amplitude,
        detuning: detuning
            .map(|(_, v)| v)
            .unwrap_or(std::f64::consts::TAU * 1e8),
    });

    let t_max = match raw.f64("time.t_max_s")? {
        None => None,
        Some((line, v)) => {
            if v > 0.0 {
                Some(v)
            } else {
                return Err(invalid(line, "time.t_max_s", "must be positive"));
            }
        }
    };

    let rtol = require_positive(raw.f64("solver.rtol")?, 1e-9, "solver.rtol")?;
    let atol = require_positive(raw.f64("solver.atol")?, 1e-12, "solver.atol")?;
    let max_steps = match raw.usize("solver.max_steps")? {
        None => 1_000_000,
        Some((line, 0)) => return Err(invalid(line, "solver.max_steps", "must be at least 1")),
        Some((_, v)) => v,
    };
    let grid_points = match raw.usize("solver.grid_points")? {
        None => 2000,
        Some((line, v)) if v < 16 => {
            return Err(invalid(line, "solver.grid_points", "must be at least 16"))
        }
        Some((_, v)) => v,
    };

    let x_min = raw.f64("map.x_min_m")?.map(|(_, v)| v).unwrap_or(-4e-7);
    let x_max_entry = raw.f64("map.x_max_m")?;
    let x_max = x_max_entry.map(|(_, v)| v).unwrap_or(4e-7);
    let nx = match raw.usize("map.nx")? {
        None => 101,
        Some((line, 0)) => return Err(invalid(line, "map.nx", "must be at least 1")),
        Some((_, v)) => v,
    };
    let nz = match raw.usize("map.nz")? {
        None => 101,
        Some((line, 0)) => return Err(invalid(line, "map.nz", "must be at least 1")),
        Some((_, v)) => v,
    };
    let z_min = raw.f64("map.z_min_m")?;
    let z_max_entry = raw.f64("map.z_max_m")?;
    let z_max = z_max_entry.map(|(_, v)| v).unwrap_or(4e-7);
    if nx > 1 && x_max <= x_min {
        let line = x_max_entry.map(|(l, _)| l).unwrap_or(0);
        return Err(invalid(line, "map.x_max_m", "must exceed map.x_min_m"));
    }
    if z_max <= 0.0 {
        let line = z_max_entry.map(|(l, _)| l).unwrap_or(0);
        return Err(invalid(line, "map.z_max_m", "must be positive"));
    }
    if let Some((line, v)) = z_min {
        if environment == Environment::PerfectMirror && v <= 0.0 {
            return Err(invalid(
                line,
                "map.z_min_m",
                "must be above the plate (z > 0) in the mirror geometry",
            ));
        }
        if nz > 1 && z_max <= v {
            return Err(invalid(line, "map.z_min_m", "must be below map.z_max_m"));
        }
    }
    let map = MapSpec {
        x_min,
        x_max,
        nx,
        z_min: z_min.map(|(_, v)| v),
        z_max,
        nz,
    };

    let n_min = match raw.usize("scaling.n_min")? {
        None => 10,
        Some((line, 0)) => return Err(invalid(line, "scaling.n_min", "must be at least 1")),
        Some((_, v)) => v,
    };
    let n_max = match raw.usize("scaling.n_max")? {
        None => 100,
        Some((line, v)) if v < n_min => {
            return Err(invalid(line, "scaling.n_max", "must be at least scaling.n_min"))
        }
        Some((line, v)) if v > MAX_ATOMS => {
            return Err(invalid(
                line,
                "scaling.n_max",
                format!("must be at most {MAX_ATOMS}"),
            ))
        }
        Some((_, v)) => v,
    };
    let n_step = match raw.usize("scaling.n_step")? {
        None => 10,
        Some((line, 0)) => return Err(invalid(line, "scaling.n_step", "must be at least 1")),
        Some((_, v)) => v,
    };
    let scaling = ScalingSpec {
        n_min,
        n_max,
        n_step,
    };
    if experiment == Experiment::Scaling && scaling.atom_counts().len() < 4 {
        return Err(ConfigError::global(ConfigErrorKind::InvalidValue {
            key: "scaling.n_step".to_string(),
            detail: format!(
                "sweep {}..={} step {} yields {} sizes; the power-law fit needs at least 4",
                n_min,
                n_max,
                n_step,
                scaling.atom_counts().len()
            ),
        }));
    }

    debug_assert!(raw.entries.is_empty(), "unconsumed known keys");

    Ok(RunConfig {
        experiment,
        n_atoms,
        omega_a,
        dipole_magnitude,
        polarization,
        position,
        environment,
        drive,
        t_max,
        solver: SolverSpec {
            rtol,
            atol,
            max_steps,
            grid_points,
        },
        map,
        scaling,
    })
}

impl RunConfig {
    /// Canonical serialization; `parse_config(cfg.to_text())` reproduces the
    /// config exactly (floats print in shortest round-trip form).
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let mut push = |k: &str, v: String| {
            out.push_str(k);
            out.push_str(" = ");
            out.push_str(&v);
            out.push('\n');
        };
        push("experiment", self.experiment.name().to_string());
        push("atoms.N", self.n_atoms.to_string());
        push("atoms.omega_a_rad_s", self.omega_a.to_string());
        push("atoms.dipole_c_m", self.dipole_magnitude.to_string());
        push("atoms.polarization", self.polarization.name().to_string());
        push("atoms.x_m", self.position.x.to_string());
        push("atoms.y_m", self.position.y.to_string());
        push("atoms.z_m", self.position.z.to_string());
        push(
            "environment",
            match self.environment {
                Environment::PerfectMirror => "mirror".to_string(),
                Environment::FreeSpace => "free-space".to_string(),
            },
        );
        if let Some(drive) = &self.drive {
            match drive.amplitude {
                DriveAmplitude::Intensity(v) => push("drive.intensity_w_m2", v.to_string()),
                DriveAmplitude::Field(v) => push("drive.field_v_m", v.to_string()),
            }
            push("drive.detuning_rad_s", drive.detuning.to_string());
        }
        if let Some(t_max) = self.t_max {
            push("time.t_max_s", t_max.to_string());
        }
        push("solver.rtol", self.solver.rtol.to_string());
        push("solver.atol", self.solver.atol.to_string());
        push("solver.max_steps", self.solver.max_steps.to_string());
        push("solver.grid_points", self.solver.grid_points.to_string());
        push("map.x_min_m", self.map.x_min.to_string());
        push("map.x_max_m", self.map.x_max.to_string());
        if let Some(z_min) = self.map.z_min {
            push("map.z_min_m", z_min.to_string());
        }
        push("map.z_max_m", self.map.z_max.to_string());
        push("map.nx", self.map.nx.to_string());
        push("map.nz", self.map.nz.to_string());
        push("scaling.n_min", self.scaling.n_min.to_string());
        push("scaling.n_max", self.scaling.n_max.to_string());
        push("scaling.n_step", self.scaling.n_step.to_string());
        out
    }

    /// Dipole vector along the configured axis, in C m.
    pub fn dipole_vector(&self) -> [Complex64; 3] {
        let d = Complex64::new(self.dipole_magnitude, 0.0);
        match self.polarization {
            Polarization::X => [d, Complex64::ZERO, Complex64::ZERO],
            Polarization::Y => [Complex64::ZERO, d, Complex64::ZERO],
            Polarization::Z => [Complex64::ZERO, Complex64::ZERO, d],
        }
    }

    pub fn ensemble(&self) -> EnsembleConfig {
        EnsembleConfig {
            n_atoms: self.n_atoms,
            omega_a: self.omega_a,
            dipole: self.dipole_vector(),
            position: self.position,
            environment: self.environment,
        }
    }

    /// Same ensemble with a different atom count (used by the size sweep).
    pub fn ensemble_with_n(&self, n_atoms: usize) -> EnsembleConfig {
        EnsembleConfig {
            n_atoms,
            ..self.ensemble()
        }
    }

    pub fn drive_config(&self) -> Result<Option<crate::dynamics::DriveConfig>> {
        match &self.drive {
            None => Ok(None),
            Some(spec) => {
                let dc = match spec.amplitude {
                    DriveAmplitude::Intensity(v) => {
                        crate::dynamics::DriveConfig::from_intensity(v, spec.detuning)?
                    }
                    DriveAmplitude::Field(v) => {
                        crate::dynamics::DriveConfig::from_field(v, spec.detuning)?
                    }
                };
                Ok(Some(dc))
            }
        }
    }

    pub fn grid_spec(&self) -> GridSpec {
        GridSpec {
            x_min: self.map.x_min,
            x_max: self.map.x_max,
            nx: self.map.nx,
            z_min: self.map.z_min,
            z_max: self.map.z_max,
            nz: self.map.nz,
        }
    }

    pub fn solver_options(&self) -> crate::dynamics::SolverOptions {
        crate::dynamics::SolverOptions {
            rtol: self.solver.rtol,
            atol: self.solver.atol,
            max_steps: self.solver.max_steps,
            grid_points: self.solver.grid_points,
            ..crate::dynamics::SolverOptions::default()
        }
    }
}
