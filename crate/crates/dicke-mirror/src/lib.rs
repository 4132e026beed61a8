//! Simulation of collective spontaneous emission (Dicke superradiance) and
//! resonant Casimir-Polder potentials for an ensemble of two-level atoms held
//! near a perfectly conducting plate, including coherent laser driving and
//! two-atom superradiance-fidelity maps.
//!
//! The physics pipeline is layered bottom-up:
//!
//! * [`greens`] - free-space and mirror-scattered electromagnetic dyadic
//!   Green's tensors; every rate and potential downstream is a contraction of
//!   one of these.
//! * [`ladder`] - the effective (N+1)-level ladder of symmetric collective
//!   states: degeneracies, collective dipole factors, decay rates, Purcell
//!   factor.
//! * [`dynamics`] - population rate equations, driven coherence ODEs in the
//!   rotating frame, and a symmetric-subspace Lindblad solver used as a
//!   cross-check oracle.
//! * [`casimir`] - per-level and population-weighted resonant Casimir-Polder
//!   potentials above the mirror.
//! * [`fidelity`] - two-atom joint decay rates, fidelity F = Gamma12/Gamma,
//!   spatial maps and corridor masks.
//! * [`analysis`] - burst observables (peak, FWHM, photon count) and
//!   power-law scaling fits.
//! * [`config`], [`runner`], [`csvout`] - reproducible experiment
//!   orchestration: flat key-value configs, deterministic CSV output,
//!   run manifests.

// validation guards spell `!(x > 0.0)` on purpose: the negation rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod casimir;
pub mod config;
pub mod constants;
pub mod csvout;
pub mod dynamics;
pub mod error;
pub mod fidelity;
pub mod greens;
pub mod ladder;
pub mod ode;
pub mod runner;
pub mod series;
pub mod validation;

pub use error::{Error, Result};
