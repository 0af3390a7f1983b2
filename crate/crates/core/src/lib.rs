//! Thermodynamic formalism for correspondences on finite state spaces.
//!
//! A correspondence is a closed relation `T` in which every state has a
//! successor. This crate computes its topological pressure against edge
//! potentials, transition kernels supported by `T` and their entropies, the
//! polytope of `T`-invariant measures, both variational principles (the
//! kernel-entropy one and the dual one built from the pressure function),
//! tangent functionals and one-sided derivatives of pressure, and grid models
//! of piecewise-linear interval correspondences.

pub mod error;
pub mod interval;
pub mod kernel;
pub mod lp;
pub mod relation;
pub mod variational;
pub mod verify;

pub use error::{Error, Result};
pub use relation::{
    birkhoff_sum, decomposition_pressure, decomposition_validate, from_map,
    inverse_correspondence, path_pressure_sequence, relabel, spectral_pressure,
    strongly_connected_components, validate_correspondence, Block, FiniteCorrespondence,
    MapDirection, Path, Potential, SpectralPressure,
};
pub use interval::{
    example_maps, grid_discretize, markov_model, paper_example, pl_eval, ExampleMaps,
    ExampleReport, GridRelation, IntervalCorrespondence, Piece, PiecewiseLinearMap,
    EXAMPLE_FIXTURE,
};
pub use kernel::{
    chain_distribution, extremal_decomposition, hat_lift, invariant_polytope_extremes,
    is_invariant, kernel_entropy, stationary_measures, InvarianceMode, PairMeasure, StateMeasure,
    TransitionKernel,
};
pub use variational::{
    abstract_kernel_entropy, abstract_measure_pressure, directional_derivative,
    equilibrium_check, gibbs_equilibrium, measure_pressure, tangent_functionals, EquilibriumKind,
    EquilibriumPair, Side, SolverConfig, TangentSet,
};
