//! Electromagnetic dyadic Green's tensors for vacuum and for the half-space
//! above a perfectly conducting plate at z = 0.
//!
//! Normalization convention: Im G(r, r, w) = w/(6 pi c) * I for the bulk
//! tensor, so a dipole rate assembled as (2 mu0 w^2 / hbar) d . Im G . d*
//! reproduces the textbook free-space decay rate w^3 |d|^2 / (3 pi eps0
//! hbar c^3). All entries carry units of 1/m.

use num_complex::Complex64;

use crate::constants::SPEED_OF_LIGHT;
use crate::error::{Error, Result};

/// Point in the vacuum half-space, coordinates in meters. The plate (when
/// present) occupies z <= 0 with its surface at z = 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Position3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Position3 { x, y, z }
    }

    /// Mirror image through the plate surface z = 0.
    pub fn mirror_image(self) -> Self {
        Position3 {
            x: self.x,
            y: self.y,
            z: -self.z,
        }
    }

    pub fn separation(self, other: Position3) -> [f64; 3] {
        [self.x - other.x, self.y - other.y, self.z - other.z]
    }

    pub fn distance(self, other: Position3) -> f64 {
        let [dx, dy, dz] = self.separation(other);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

/// Geometry tag for every tensor evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Environment {
    FreeSpace,
    /// Perfectly conducting plate filling z <= 0.
    PerfectMirror,
}

impl Environment {
    /// Mirror evaluations are only defined strictly above the plate.
    pub fn check_position(self, r: &Position3) -> Result<()> {
        if self == Environment::PerfectMirror && r.z <= 0.0 {
            return Err(Error::PointInPlate { z: r.z });
        }
        Ok(())
    }
}

/// Dense 3x3 complex tensor indexed (x, y, z) x (x, y, z).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DyadicTensor(pub [[Complex64; 3]; 3]);

impl DyadicTensor {
    pub fn zero() -> Self {
        DyadicTensor([[Complex64::ZERO; 3]; 3])
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.0[i][j]
    }

    pub fn transpose(&self) -> Self {
        let mut out = [[Complex64::ZERO; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, entry) in row.iter_mut().enumerate() {
                *entry = self.0[j][i];
            }
        }
        DyadicTensor(out)
    }

    /// Entry-wise imaginary part, returned as a tensor with real entries.
    pub fn im_part(&self) -> Self {
        let mut out = [[Complex64::ZERO; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, entry) in row.iter_mut().enumerate() {
                *entry = Complex64::new(self.0[i][j].im, 0.0);
            }
        }
        DyadicTensor(out)
    }

    /// Entry-wise real part, returned as a tensor with real entries.
    pub fn re_part(&self) -> Self {
        let mut out = [[Complex64::ZERO; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, entry) in row.iter_mut().enumerate() {
                *entry = Complex64::new(self.0[i][j].re, 0.0);
            }
        }
        DyadicTensor(out)
    }

    /// Quadratic form d . T . d* as it appears in every rate and potential.
    pub fn quadratic_form(&self, d: &[Complex64; 3]) -> Complex64 {
        let mut acc = Complex64::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                acc += d[i] * self.0[i][j] * d[j].conj();
            }
        }
        acc
    }

    pub fn add(&self, other: &DyadicTensor) -> Self {
        let mut out = [[Complex64::ZERO; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, entry) in row.iter_mut().enumerate() {
                *entry = self.0[i][j] + other.0[i][j];
            }
        }
        DyadicTensor(out)
    }

    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|c| c.norm())
            .fold(0.0, f64::max)
    }
}

fn check_omega(omega: f64) -> Result<()> {
    if omega <= 0.0 || !omega.is_finite() {
        return Err(Error::NonPositive {
            what: "angular frequency",
            value: omega,
        });
    }
    Ok(())
}

/// Homogeneous-space dyadic Green's tensor with the e^{ik rho}/(4 pi rho)
/// kernel, k = w/c:
///
///   G_ij = e^{ikr}/(4 pi r) * [ A(kr) delta_ij - B(kr) u_i u_j ],
///   A(x) = 1 + (ix - 1)/x^2,  B(x) = 1 + 3(ix - 1)/x^2,
///
/// with u the unit separation vector. The real part diverges as 1/(k rho)^3
/// near coincidence; the coincidence limit of the imaginary part lives in
/// [`im_coincident_green`].
pub fn free_space_green(r1: Position3, r2: Position3, omega: f64) -> Result<DyadicTensor> {
    check_omega(omega)?;
    let rho = r1.distance(r2);
    if rho == 0.0 {
        return Err(Error::CoincidentPoints);
    }
    let k = omega / SPEED_OF_LIGHT;
    let sep = r1.separation(r2);
    let u = [sep[0] / rho, sep[1] / rho, sep[2] / rho];
    let x = k * rho;
    let ix = Complex64::new(0.0, x);
    let inv_x2 = 1.0 / (x * x);
    let a = 1.0 + (ix - 1.0) * inv_x2;
    let b = 1.0 + 3.0 * (ix - 1.0) * inv_x2;
    let prefactor = Complex64::new(0.0, x).exp() / (4.0 * std::f64::consts::PI * rho);

    let mut out = [[Complex64::ZERO; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, entry) in row.iter_mut().enumerate() {
            let diag = if i == j { a } else { Complex64::ZERO };
            *entry = prefactor * (diag - b * (u[i] * u[j]));
        }
    }
    Ok(DyadicTensor(out))
}

/// Scattered part of the Green's tensor for the perfect mirror, built from
/// image theory: the field of a source at r2 reflected by the plate equals
/// the free-space field of the image source at (x2, y2, -z2) with tangential
/// dipole components flipped and the normal component preserved,
///
///   G1(r1, r2) = G0(r1, image(r2)) . diag(-1, -1, +1).
///
/// Finite at r1 = r2 since the image sits at distance 2 z. The sign of the
/// reflection matrix is pinned by the boundary-condition limits of the decay
/// rates: tangential dipoles decouple at the surface, normal dipoles double.
pub fn mirror_scatter_green(r1: Position3, r2: Position3, omega: f64) -> Result<DyadicTensor> {
    Environment::PerfectMirror.check_position(&r1)?;
    Environment::PerfectMirror.check_position(&r2)?;
    let g = free_space_green(r1, r2.mirror_image(), omega)?;
    let mut out = g.0;
    // right-multiplication by diag(-1, -1, +1): flip the first two columns
    for row in out.iter_mut() {
        row[0] = -row[0];
        row[1] = -row[1];
    }
    Ok(DyadicTensor(out))
}

/// Imaginary part of the total Green's tensor at coincidence. The returned
/// tensor holds the (real) values of Im G in its real components.
///
/// Free space: exactly w/(6 pi c) * I. Mirror: that plus Im G1(r, r, w),
/// which stays finite at coincidence.
pub fn im_coincident_green(env: Environment, r: Position3, omega: f64) -> Result<DyadicTensor> {
    check_omega(omega)?;
    env.check_position(&r)?;
    let bulk = omega / (6.0 * std::f64::consts::PI * SPEED_OF_LIGHT);
    let mut out = [[Complex64::ZERO; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        row[i] = Complex64::new(bulk, 0.0);
    }
    let mut tensor = DyadicTensor(out);
    if env == Environment::PerfectMirror {
        let scattered = mirror_scatter_green(r, r, omega)?;
        tensor = tensor.add(&scattered.im_part());
    }
    Ok(tensor)
}
