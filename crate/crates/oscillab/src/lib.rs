//! Numerical laboratory for semilinear reaction-diffusion problems with
//! nonlinear boundary conditions on domains whose boundary oscillates
//! rapidly at scale eps. The crate builds the perturbed domains, computes
//! the homogenized boundary factor gamma, solves the perturbed and the
//! gamma-weighted limit problems, and measures how spectra, equilibria,
//! nonlinear loads, resolvents, trajectories and attractor samples of the
//! perturbed problems approach the limit as eps shrinks.

pub mod config;
pub mod dynamics;
pub mod fem;
pub mod geometry;
pub mod homogenization;
pub mod mesh;
pub mod nonlinear;
pub mod report;
pub mod sweeps;
pub mod transfer;

pub mod cli;
