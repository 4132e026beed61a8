//! Symmetric (maximum-spin) level structure for N identical two-level
//! emitters and the cascade decay rates between adjacent levels.
//!
//! Levels are indexed by the number of excitations n in 0..=N. The collective
//! lowering operator connects n to n - 1 with matrix element sqrt(n (N-n+1)),
//! so the one-photon rate out of level n is n (N-n+1) F Gamma0 where F is the
//! local Purcell factor and Gamma0 the bulk single-emitter rate. That n(N-n+1)
//! enhancement peaking near n = N/2 is what makes the cascade superradiant.

use num_complex::Complex64;

use crate::constants::{REDUCED_PLANCK, SPEED_OF_LIGHT, VACUUM_PERMITTIVITY};
use crate::error::{Error, Result};
use crate::greens::{im_coincident_green, Environment, Position3};

/// Hard cap on N: degeneracy bookkeeping stays exact in u128 far beyond
/// this, but rate ladders and trajectories are sized (N+1) and the cascade
/// solver cost grows with N Gamma0 stiffness.
pub const MAX_ATOMS: usize = 100_000;

/// Everything needed to place one collective ensemble in the geometry.
/// All atoms share the position (point-ensemble limit), the transition
/// frequency (rad/s) and the dipole vector (C m).
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub n_atoms: usize,
    pub omega_a: f64,
    pub dipole: [Complex64; 3],
    pub position: Position3,
    pub environment: Environment,
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_atoms == 0 {
            return Err(Error::NonPositive {
                what: "atom count",
                value: 0.0,
            });
        }
        if self.n_atoms > MAX_ATOMS {
            return Err(Error::LadderTooLarge {
                n_atoms: self.n_atoms,
                cap: MAX_ATOMS,
            });
        }
        if !(self.omega_a > 0.0 && self.omega_a.is_finite()) {
            return Err(Error::NonPositive {
                what: "transition frequency",
                value: self.omega_a,
            });
        }
        let d2 = dipole_norm_squared(&self.dipole);
        if !(d2 > 0.0 && d2.is_finite()) {
            return Err(Error::NonPositive {
                what: "dipole magnitude",
                value: d2.sqrt(),
            });
        }
        self.environment.check_position(&self.position)
    }
}

pub fn dipole_norm_squared(d: &[Complex64; 3]) -> f64 {
    d.iter().map(|c| c.norm_sqr()).sum()
}

/// Number of product states with a given excitation count: C(N, level).
/// Exact in u128 (largest case here, C(100, 50), has 30 digits; u128 holds 38).
pub fn degeneracy(n_atoms: usize, level: usize) -> Result<u128> {
    if level > n_atoms {
        return Err(Error::LevelOutOfRange {
            level,
            min: 0,
            max: n_atoms,
            n_atoms,
        });
    }
    let k = level.min(n_atoms - level) as u128;
    let n = n_atoms as u128;
    let mut acc: u128 = 1;
    for i in 0..k {
        // multiply before dividing keeps every intermediate an integer
        acc = acc * (n - i) / (i + 1);
    }
    Ok(acc)
}

/// Matrix element of the collective lowering operator out of level `upper`:
/// sqrt(upper (N - upper + 1)), defined for 1 <= upper <= N.
pub fn collective_dipole_factor(n_atoms: usize, upper: usize) -> Result<f64> {
    if upper == 0 || upper > n_atoms {
        return Err(Error::LevelOutOfRange {
            level: upper,
            min: 1,
            max: n_atoms,
            n_atoms,
        });
    }
    let n = upper as f64;
    Ok((n * (n_atoms as f64 - n + 1.0)).sqrt())
}

/// Bulk spontaneous-emission rate w^3 |d|^2 / (3 pi eps0 hbar c^3).
pub fn free_space_rate(omega_a: f64, dipole: &[Complex64; 3]) -> f64 {
    omega_a.powi(3) * dipole_norm_squared(dipole)
        / (3.0 * std::f64::consts::PI * VACUUM_PERMITTIVITY * REDUCED_PLANCK
            * SPEED_OF_LIGHT.powi(3))
}

/// Local rate enhancement F = Gamma(r) / Gamma0 from the environment tensor.
/// Exactly 1 in free space; near the mirror it follows from the coincident
/// imaginary part, F = 1 + (6 pi c / w) (d . Im G1 . d*) / |d|^2.
pub fn purcell_factor(
    env: Environment,
    position: Position3,
    dipole: &[Complex64; 3],
    omega_a: f64,
) -> Result<f64> {
    match env {
        Environment::FreeSpace => Ok(1.0),
        Environment::PerfectMirror => {
            let total = im_coincident_green(env, position, omega_a)?;
            let qf = total.quadratic_form(dipole).re;
            let bulk = omega_a / (6.0 * std::f64::consts::PI * SPEED_OF_LIGHT);
            Ok(qf / (bulk * dipole_norm_squared(dipole)))
        }
    }
}

/// Cascade rates for one ensemble: `rates[n]` is the total photon rate out
/// of level n, with `rates[0] = 0` (ground level is dark).
#[derive(Debug, Clone, PartialEq)]
pub struct RateLadder {
    n_atoms: usize,
    gamma0: f64,
    purcell: f64,
    rates: Vec<f64>,
}

impl RateLadder {
    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    /// Bulk single-emitter rate, 1/s.
    pub fn gamma0(&self) -> f64 {
        self.gamma0
    }

    pub fn purcell(&self) -> f64 {
        self.purcell
    }

    /// Position-corrected single-emitter rate F Gamma0.
    pub fn effective_rate(&self) -> f64 {
        self.purcell * self.gamma0
    }

    pub fn rate(&self, level: usize) -> Result<f64> {
        self.rates.get(level).copied().ok_or(Error::LevelOutOfRange {
            level,
            min: 0,
            max: self.n_atoms,
            n_atoms: self.n_atoms,
        })
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    /// Transition rate between coherence pairs in the symmetric manifold,
    /// nonzero only when both index pairs are one step apart:
    ///
    ///   sqrt(max(m,k) (N - max(m,k) + 1)) sqrt(max(n,l) (N - max(n,l) + 1))
    ///     * F Gamma0 / 2.
    ///
    /// For m = n = k+1 = l+1 two such terms sum back to the cascade rate.
    pub fn four_index_rate(&self, m: usize, k: usize, n: usize, l: usize) -> f64 {
        let step = |a: usize, b: usize| a.abs_diff(b) == 1 && a.max(b) <= self.n_atoms;
        if !step(m, k) || !step(n, l) {
            return 0.0;
        }
        let f = |upper: usize| {
            let u = upper as f64;
            (u * (self.n_atoms as f64 - u + 1.0)).sqrt()
        };
        f(m.max(k)) * f(n.max(l)) * self.purcell * self.gamma0 / 2.0
    }

    /// Decay bracket acting on the coherence between levels a and b:
    /// half the sum of the photon rates out of each side.
    pub fn coherence_damping(&self, a: usize, b: usize) -> f64 {
        let mut acc = 0.0;
        if a >= 1 {
            acc += self.four_index_rate(a, a - 1, a - 1, a);
        }
        if b >= 1 {
            acc += self.four_index_rate(b, b - 1, b - 1, b);
        }
        acc
    }

    /// Feeding bracket from the coherence between a+1 and b+1.
    pub fn coherence_gain(&self, a: usize, b: usize) -> f64 {
        if a + 1 > self.n_atoms || b + 1 > self.n_atoms {
            return 0.0;
        }
        self.four_index_rate(a + 1, a, b + 1, b) + self.four_index_rate(b + 1, b, a + 1, a)
    }
}

/// Assemble the cascade ladder for a validated ensemble.
pub fn build_rate_ladder(cfg: &EnsembleConfig) -> Result<RateLadder> {
    cfg.validate()?;
    let gamma0 = free_space_rate(cfg.omega_a, &cfg.dipole);
    let purcell = purcell_factor(cfg.environment, cfg.position, &cfg.dipole, cfg.omega_a)?;
    let n = cfg.n_atoms;
    let mut rates = Vec::with_capacity(n + 1);
    rates.push(0.0);
    for level in 1..=n {
        let coef = (level * (n - level + 1)) as f64;
        rates.push(coef * purcell * gamma0);
    }
    Ok(RateLadder {
        n_atoms: n,
        gamma0,
        purcell,
        rates,
    })
}
