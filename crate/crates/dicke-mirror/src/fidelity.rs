//! Two-emitter joint decay rate and the superradiance fidelity map that
//! marks where the point-ensemble (long-wavelength) treatment is trustworthy.
//!
//! The fidelity F compares the cross-damping rate of an emitter pair with
//! the single-emitter rate at the reference position; F near one means the
//! pair radiates as one collective dipole. The denominator is always the
//! rate of the REFERENCE emitter (first argument), which makes maps over
//! the second position well defined.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::constants::{REDUCED_PLANCK, VACUUM_PERMEABILITY};
use crate::error::{Error, Result};
use crate::greens::{
    free_space_green, im_coincident_green, mirror_scatter_green, Environment, Position3,
};
use crate::ladder::{dipole_norm_squared, free_space_rate, purcell_factor};

/// Rectangular x-z sampling window. With `z_min` unset the z samples start
/// one cell above the plate, z_j = (j+1) z_max / nz, keeping the open
/// half-space domain; with `z_min` set the z grid is the closed linspace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub z_min: Option<f64>,
    pub z_max: f64,
    pub nz: usize,
}

impl GridSpec {
    pub fn x_samples(&self) -> Vec<f64> {
        if self.nx == 1 {
            return vec![self.x_min];
        }
        (0..self.nx)
            .map(|i| self.x_min + (self.x_max - self.x_min) * i as f64 / (self.nx - 1) as f64)
            .collect()
    }

    pub fn z_samples(&self) -> Vec<f64> {
        match self.z_min {
            None => (0..self.nz)
                .map(|j| (j + 1) as f64 * self.z_max / self.nz as f64)
                .collect(),
            Some(z_min) => {
                if self.nz == 1 {
                    return vec![z_min];
                }
                (0..self.nz)
                    .map(|j| z_min + (self.z_max - z_min) * j as f64 / (self.nz - 1) as f64)
                    .collect()
            }
        }
    }

    pub fn validate(&self, env: Environment) -> Result<()> {
        if self.nx == 0 || self.nz == 0 {
            return Err(Error::BadGrid {
                detail: format!("empty grid ({} x {})", self.nx, self.nz),
            });
        }
        if self.nx > 1 && !(self.x_max > self.x_min) {
            return Err(Error::BadGrid {
                detail: "x_max must exceed x_min".to_string(),
            });
        }
        if !(self.z_max > 0.0) {
            return Err(Error::BadGrid {
                detail: format!("z_max must be positive, got {}", self.z_max),
            });
        }
        if let Some(z_min) = self.z_min {
            if self.nz > 1 && !(self.z_max > z_min) {
                return Err(Error::BadGrid {
                    detail: "z_max must exceed z_min".to_string(),
                });
            }
            if env == Environment::PerfectMirror && z_min <= 0.0 {
                return Err(Error::BadGrid {
                    detail: format!("z_min = {z_min} reaches into the plate"),
                });
            }
        }
        Ok(())
    }
}

/// Dense fidelity samples over an x-z window, row-major with z fastest.
#[derive(Debug, Clone)]
pub struct FidelityMap {
    xs: Vec<f64>,
    zs: Vec<f64>,
    values: Vec<f64>,
    reference: Position3,
    dipole: [Complex64; 3],
    environment: Environment,
}

impl FidelityMap {
    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn zs(&self) -> &[f64] {
        &self.zs
    }

    pub fn nx(&self) -> usize {
        self.xs.len()
    }

    pub fn nz(&self) -> usize {
        self.zs.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, ix: usize, iz: usize) -> f64 {
        self.values[ix * self.zs.len() + iz]
    }

    pub fn reference(&self) -> Position3 {
        self.reference
    }

    pub fn dipole(&self) -> &[Complex64; 3] {
        &self.dipole
    }

    pub fn environment(&self) -> Environment {
        self.environment
    }

    /// Grid indices of the sample closest to a position (by axis distance).
    pub fn nearest_cell(&self, r: Position3) -> (usize, usize) {
        let nearest = |samples: &[f64], q: f64| {
            samples
                .iter()
                .enumerate()
                .min_by(|a, b| (a.1 - q).abs().total_cmp(&(b.1 - q).abs()))
                .map(|(i, _)| i)
                .unwrap()
        };
        (nearest(&self.xs, r.x), nearest(&self.zs, r.z))
    }
}

/// Cross-damping rate of two emitters with identical dipoles,
///
///   rate12 = (2 mu0 w^2 / hbar) d . Im G(r1, r2, w) . d*,
///
/// from the total tensor (bulk plus scattered). Real by construction; can
/// be negative at some separations. At exact coincidence this is the local
/// single-emitter rate.
pub fn joint_rate(
    r1: Position3,
    r2: Position3,
    dipole: &[Complex64; 3],
    omega_a: f64,
    env: Environment,
) -> Result<f64> {
    env.check_position(&r1)?;
    env.check_position(&r2)?;
    let prefactor = 2.0 * VACUUM_PERMEABILITY * omega_a * omega_a / REDUCED_PLANCK;
    let im = if r1 == r2 {
        im_coincident_green(env, r1, omega_a)?
    } else {
        let mut g = free_space_green(r1, r2, omega_a)?;
        if env == Environment::PerfectMirror {
            g = g.add(&mirror_scatter_green(r1, r2, omega_a)?);
        }
        g.im_part()
    };
    Ok(prefactor * im.quadratic_form(dipole).re)
}

/// Superradiance fidelity F = rate12 / rate(reference). The denominator is
/// the single-emitter rate at r1 in the same environment.
pub fn fidelity(
    r1: Position3,
    r2: Position3,
    dipole: &[Complex64; 3],
    omega_a: f64,
    env: Environment,
) -> Result<f64> {
    let numerator = joint_rate(r1, r2, dipole, omega_a, env)?;
    let single = purcell_factor(env, r1, dipole, omega_a)? * free_space_rate(omega_a, dipole);
    if !(single > 0.0) {
        return Err(Error::NonPositive {
            what: "reference decay rate",
            value: single,
        });
    }
    Ok(numerator / single)
}

/// Evaluate the fidelity over a grid of second-atom positions, in parallel
/// over cells. Deterministic for fixed inputs: the cell order is fixed and
/// each cell is an independent pure evaluation.
pub fn fidelity_map(
    grid: &GridSpec,
    reference: Position3,
    dipole: &[Complex64; 3],
    omega_a: f64,
    env: Environment,
) -> Result<FidelityMap> {
    grid.validate(env)?;
    env.check_position(&reference)?;
    if dipole_norm_squared(dipole) == 0.0 {
        return Err(Error::NonPositive {
            what: "dipole magnitude",
            value: 0.0,
        });
    }
    let xs = grid.x_samples();
    let zs = grid.z_samples();
    let nz = zs.len();
    let values: Vec<f64> = (0..xs.len() * nz)
        .into_par_iter()
        .map(|idx| {
            let probe = Position3::new(xs[idx / nz], reference.y, zs[idx % nz]);
            fidelity(reference, probe, dipole, omega_a, env)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(FidelityMap {
        xs,
        zs,
        values,
        reference,
        dipole: *dipole,
        environment: env,
    })
}

/// Cellwise corridor predicate lo <= F <= hi.
pub fn corridor_mask(map: &FidelityMap, lo: f64, hi: f64) -> Vec<bool> {
    map.values.iter().map(|&f| f >= lo && f <= hi).collect()
}

/// Connected component of a boolean grid containing `seed`, with
/// 4-neighbor adjacency and the same row-major (z fastest) layout.
pub fn connected_component(
    mask: &[bool],
    nx: usize,
    nz: usize,
    seed: (usize, usize),
) -> Vec<bool> {
    let mut out = vec![false; mask.len()];
    let idx = |ix: usize, iz: usize| ix * nz + iz;
    if seed.0 >= nx || seed.1 >= nz || !mask[idx(seed.0, seed.1)] {
        return out;
    }
    let mut stack = vec![seed];
    out[idx(seed.0, seed.1)] = true;
    while let Some((ix, iz)) = stack.pop() {
        let mut visit = |jx: usize, jz: usize| {
            let j = idx(jx, jz);
            if mask[j] && !out[j] {
                out[j] = true;
                stack.push((jx, jz));
            }
        };
        if ix > 0 {
            visit(ix - 1, iz);
        }
        if ix + 1 < nx {
            visit(ix + 1, iz);
        }
        if iz > 0 {
            visit(ix, iz - 1);
        }
        if iz + 1 < nz {
            visit(ix, iz + 1);
        }
    }
    out
}
