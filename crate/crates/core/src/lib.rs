//! Stability analysis and momentum balancing for atomic probability
//! measures on complex projective space `ℙⁿ` under the `SL(n+1, ℂ)` action.
//!
//! The crate is `no_std` and only needs `alloc`. Everything here is a pure
//! computation on immutable values; file formats and the command-line
//! front-end live in the `measure-balancer` companion crate.
//!
//! Conventions used throughout:
//!
//! * A direction `v ∈ 𝔰𝔲(n+1)` is stored as the traceless Hermitian matrix
//!   `A = iv` ([`SpectralDirection`]).
//! * Momenta are stored as traceless Hermitian matrices
//!   ([`MomentumMatrix`]); the pairing with a direction is the real trace
//!   `tr(m·A)`.
//! * [`maximal_weight`] returns `λ_ν(e(−v))`; a measure is stable exactly
//!   when this value is positive for every nonzero direction.
//!
//! Modules:
//!
//! * [`geometry`]: projective points, the Fubini–Study momentum map, group
//!   elements and spectral decomposition of directions.
//! * [`measure`]: atomic measures, pushforward, the measure momentum map
//!   and the Kempf–Ness functional.
//! * [`weight`]: unstable-manifold mass partitions and maximal weights.
//! * [`stability`]: the exact subspace-mass classifier and polystable
//!   splittings.
//! * [`balance`]: Tyler fixed point, geodesic descent and Gram–Newton
//!   solvers for `𝔉(g·ν) = β`.
//! * [`torus`]: the diagonal-torus convex solver and polytope helpers.
//! * [`sphere`]: the `S² ≅ ℙ¹` bridge and conformal centering.
//! * [`random`]: seeded samplers for points, directions and group elements.

#![no_std]
#![deny(missing_debug_implementations)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

mod error;
pub mod linalg;

pub mod balance;
pub mod geometry;
pub mod measure;
pub mod random;
pub mod sphere;
pub mod stability;
pub mod torus;
pub mod weight;

pub use self::error::{Error, Result};
pub use self::linalg::{CMatrix, CVector, C64};

pub use self::balance::{
    balance, gram_operator, hermitian_basis, solve_target, BalanceMethod, BalanceOptions,
    BalanceResult, BalanceVerdict, TraceRow,
};
pub use self::geometry::{
    act_point, flow_limit, momentum_of_point, mu_component, spectral_decompose, FlowLimit,
    GroupElement, MomentumMatrix, ProjectivePoint, SpectralDirection,
};
pub use self::measure::{
    kempf_ness, kempf_ness_derivative, momentum, pushforward, Atom, AtomicMeasure,
};
pub use self::sphere::{center_of_mass, hersch_balance, to_projective, HerschResult, SphereMeasure};
pub use self::stability::{
    assemble_splitting, candidate_subspaces, classify, donaldson_conditions, polystable_decompose,
    DonaldsonConditions, Polystability, PolystableSplitting, SplittingBlock, StabilityKind,
    StabilityVerdict, Subspace,
};
pub use self::torus::{polytope_centroid_shift, torus_solve, TorusOptions, TorusSolveResult};
pub use self::weight::{
    destabilizing_direction, lambda_via_flow, maximal_weight, unstable_partition, StratumMass,
    WeightReport,
};

/// Relative eigenvalue clustering tolerance used by [`spectral_decompose`].
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-10;
/// Spectral-component threshold deciding stratum membership in [`flow_limit`].
pub const DEFAULT_COMPONENT_TOL: f64 = 1e-12;
/// Fubini–Study distance under which two atoms are merged.
pub const DEFAULT_MERGE_TOL: f64 = 1e-12;
/// Tolerance for the mass equalities of the stability criterion.
pub const DEFAULT_TOL_EQ: f64 = 1e-9;
/// Relative singular-value threshold for ranks of atom spans.
pub const SPAN_RANK_TOL: f64 = 1e-10;
