//! Finite-dimensional approximation of the dissipative exterior generator on
//! a truncated radial shell with a sponge absorbing layer.

pub mod assemble;
pub mod coercivity;
pub mod eigs;
pub mod grid;
pub mod resolvent;
pub mod witness;

pub use assemble::{
    assemble, BcKind, DiscreteGenerator, EpsilonSpec, Field, ModeIndex, ProblemSpec, Resolution,
    ShapeSpec,
};
pub use coercivity::{coercivity_diagnostic, CoercivityReport};
pub use eigs::{eigs_near, EigsOptions};
pub use grid::{AbsorberSpec, RadialGrid, SbpOrder};
pub use resolvent::{resolvent_solve, ResolventCache};
pub use witness::{kernel_witness_check, witness_state, WitnessReport};

#[derive(Debug, thiserror::Error)]
pub enum GeneratorError {
    #[error("invalid resolution: {detail}")]
    Resolution { detail: String },
    #[error("absorber would amplify: {detail}")]
    UnstableAbsorber { detail: String },
    #[error("unsupported configuration: {detail}")]
    Unsupported { detail: String },
    #[error("shifted factorization singular: {detail}")]
    FactorizationSingular { detail: String },
    #[error("eigensolver did not converge: {detail}")]
    NoConvergence { detail: String },
    #[error("resolvent solve too ill-conditioned: {detail}")]
    NearSingularSolve { detail: String },
    #[error("computed eigenvalue {lambda} has nonnegative real part; dissipativity violated")]
    EigenvalueNotDecaying { lambda: crate::Cplx },
    #[error(transparent)]
    Solve(#[from] crate::linalg::woodbury::SolveError),
}
