//! Fedosov-style geometry of non-standard symplectic forms on phase space.

pub mod constrained;
pub mod dynamics;
pub mod error;
pub mod export;
pub mod form;
pub mod geometry;
pub mod jet;
pub mod monopole;
pub mod ode;
pub mod random_forms;
pub mod tensor;
pub mod verify;

pub use error::{GeometryError, Result};
pub use form::{PhasePoint, TwoFormField};
pub use jet::Jet2;
pub use tensor::{TensorBlock, Variance};
