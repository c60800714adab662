//! Contextual qubit POVMs and their Naimark dilations.
//!
//! * [`bloch`]: Bloch vectors, qubit projectors, dodecahedron and hexagon.
//! * [`povm`]: the Cabello and Nakamura families and the Born rule.
//! * [`ks`]: exhaustive and parity-based 0/1 colorability.
//! * [`dilation`]: sequential dilations, extension audit, one-to-one reasoner.
//! * [`hv`]: hidden-variable Monte Carlo reproducing the POVM statistics.

pub mod bloch;
pub mod dilation;
pub mod error;
pub mod hv;
pub mod ks;
pub mod linalg;
pub mod povm;

pub use bloch::{BlochVector, QubitOperator, VertexSet, TOL};
pub use error::{Error, Result};
pub use povm::{cabello_family, nakamura_family, PovmElement, PovmFamily};
