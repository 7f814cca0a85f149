//! Density-matrix simulation of noisy product-formula circuits, with the
//! error metrics, model fitting and resource planning built on top.
//!
//! Conventions: qubit 0 is the most significant bit of a basis index, and
//! entropies are in bits.

pub mod error;
pub mod fitting;
pub mod format;
pub mod hamiltonian;
pub mod linalg;
pub mod metrics;
pub mod noise;
pub mod pauli;
pub mod planner;
pub mod state;
pub mod trotter;

pub use error::{Error, Result};
pub use fitting::{
    extrapolate_in_n, fit_exponential_decay, fit_model_coefficients, DecayFit, ErrorModel,
    FitConfig, GammaTrace,
};
pub use hamiltonian::{
    build_fermi_hubbard, build_powerlaw_heisenberg, build_tfi, ground_state, load_hamiltonian,
    GroupedHamiltonian,
};
pub use linalg::{matrix_exp_hermitian, spectral_norm, trace_norm, ComplexMatrix, C64};
pub use metrics::{
    accumulated_error, entropy_ratio, ErrorTrace, ErrorTracker, MetricOptions, StepRecord,
    WorstCaseBounds,
};
pub use noise::{
    ChannelKind, NoiseSpec, NoisyCircuit, Placement, Retention, Trajectory, TrajectoryConfig,
};
pub use pauli::{Pauli, PauliString};
pub use planner::{
    ft_resources, gamma_star, optimal_r, plan_comparison, FtParams, FtResources, PlanResult,
    WorstCaseModel,
};
pub use state::{
    haar_random_state, partial_trace, relative_entropy, von_neumann_entropy, DensityMatrix,
};
pub use trotter::{
    build_schedule, exact_unitary, step_unitary, ExactPropagator, LayerConvention, Schedule,
};
