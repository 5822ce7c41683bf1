use core::fmt;

/// Errors raised by the geometry, classification and balancing routines.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A coefficient vector was zero or contained non-finite entries.
    ZeroVector,
    /// A direction matrix had (numerically) zero Frobenius norm.
    ZeroDirection,
    /// A matrix that must be Hermitian was not, within tolerance.
    NotHermitian,
    /// A direction matrix had nonzero trace.
    NotTraceless,
    /// Operands live in different dimensions.
    DimensionMismatch { expected: usize, found: usize },
    /// A group element had vanishing determinant.
    SingularGroupElement,
    /// A vector norm under- or overflowed during a group action.
    NumericalDegeneracy,
    /// Weights were nonpositive, non-finite, or did not sum to one.
    InvalidWeights,
    /// A measure needs at least one atom.
    EmptyMeasure,
    /// The points passed to a subspace construction span everything.
    SpanIsFull,
    /// No points were given for a subspace construction.
    EmptySpan,
    /// The enumeration cap on the number of atoms was exceeded.
    TooManyAtoms { count: usize, cap: usize },
    /// Polystability was requested for a measure that is not semi-stable.
    NotSemistable,
    /// A target solve was requested for a measure that is not stable.
    NotStable,
    /// The target density matrix is not positive definite with unit trace.
    NotPositiveTarget,
    /// The torus target is not in the interior of the momentum polytope.
    TargetOutsidePolytope,
    /// All polytope vertices coincide.
    DegenerateHull,
    /// A tolerance or iteration count was out of range.
    InvalidParameter(&'static str),
}

pub type Result<T, E = Error> = core::result::Result<T, E>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::ZeroVector => write!(f, "coefficient vector is zero or not finite"),
            Error::ZeroDirection => write!(f, "direction has zero norm"),
            Error::NotHermitian => write!(f, "matrix is not Hermitian"),
            Error::NotTraceless => write!(f, "direction matrix is not traceless"),
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::SingularGroupElement => write!(f, "group element is singular"),
            Error::NumericalDegeneracy => write!(f, "vector norm under- or overflowed"),
            Error::InvalidWeights => {
                write!(f, "weights must be positive, finite and sum to one")
            }
            Error::EmptyMeasure => write!(f, "measure has no atoms"),
            Error::SpanIsFull => write!(f, "points span the whole space"),
            Error::EmptySpan => write!(f, "no points given"),
            Error::TooManyAtoms { count, cap } => {
                write!(f, "{count} atoms exceed the enumeration cap of {cap}")
            }
            Error::NotSemistable => write!(f, "measure is not semi-stable"),
            Error::NotStable => write!(f, "measure is not stable"),
            Error::NotPositiveTarget => {
                write!(f, "target must be positive definite with unit trace")
            }
            Error::TargetOutsidePolytope => {
                write!(f, "target lies outside the interior of the momentum polytope")
            }
            Error::DegenerateHull => write!(f, "all vertices coincide"),
            Error::InvalidParameter(what) => write!(f, "invalid parameter: {what}"),
        }
    }
}

impl core::error::Error for Error {}
