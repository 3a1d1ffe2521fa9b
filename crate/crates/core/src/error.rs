use thiserror::Error;

use crate::monopole::SingularityReport;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    /// The 2-form is (numerically) degenerate at the requested point.
    #[error("singular 2-form: reciprocal condition number {rcond:.3e} below {threshold:.1e}")]
    SingularForm { rcond: f64, threshold: f64 },

    #[error("point outside the admissible domain: {reason}")]
    DomainViolation {
        reason: String,
        report: Option<Box<SingularityReport>>,
    },

    #[error("shape mismatch: expected {expected}, found {found}")]
    ShapeMismatch { expected: String, found: String },
}

impl GeometryError {
    pub fn domain(reason: impl Into<String>) -> Self {
        Self::DomainViolation {
            reason: reason.into(),
            report: None,
        }
    }

    pub fn shape(expected: impl Into<String>, found: impl Into<String>) -> Self {
        Self::ShapeMismatch {
            expected: expected.into(),
            found: found.into(),
        }
    }
}

pub type Result<T, E = GeometryError> = std::result::Result<T, E>;
