//! Lattice transcription of the functional Schrödinger equation on
//! spacelike slices, wave functionals in full-grid and Gaussian form, and
//! their evolution along foliations.

mod evolve;
mod gaussian;
mod generator;
mod lattice;
mod snapshot;
mod state;

pub use evolve::{evolve, reparameterization_invariance_check, EvolutionReport, EvolveOptions, Scheme};
pub use gaussian::{gaussian_free_evolution, ground_energy};
pub use generator::{functional_equation_residuals, generator_matrix, solve_functional_derivatives};
pub use lattice::{lattice_transcription, LatticeSlice, Transcription};
pub use snapshot::{load_snapshot, read_snapshot, save_snapshot, write_snapshot, SnapshotHeader};
pub use state::{FullGridState, GaussianState, Observable, WaveFunctional, ZGrid, MAX_GRID_SITES};
