//! Exact density-matrix simulation of entanglement-breaking multiple-access
//! channels and the two-sender butterfly network built from them: qudit state
//! algebra, Kraus/Choi channel algebra, entanglement-breaking certification,
//! Holevo/entanglement-assisted capacities, and end-to-end protocol demos.

pub mod capacity;
pub mod channels;
pub mod ebcheck;
mod error;
mod linalg;
pub mod protocols;
pub mod qcore;
pub mod verify;

pub(crate) mod par;

pub use error::{Error, Result};
pub use linalg::CMat;
