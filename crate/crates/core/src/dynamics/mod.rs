//! Exact small-system dynamics: Heisenberg evolution, commutator profiles and
//! the quasi-local shell decomposition.

pub mod evolve;
pub mod profile;
pub mod twirl;

pub use evolve::{heisenberg_evolve, EvolutionMethod, KrylovOptions, Propagator};
pub use profile::{
    commutator_norm, commutator_profile, pauli_commutator_norm, CommutatorProfile,
    ModelDescriptor, ProfileRequest,
};
pub use twirl::{haar_twirl, quasilocal_decompose, quasilocal_decompose_times, QuasiLocalDecomposition, ShellOperators, SHELL_CONSTANT};
