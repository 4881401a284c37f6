//! Secure multi-transmitter coded caching over finite-field linear networks.
//!
//! The crate simulates placement, keyed delivery and decoding for four
//! schemes, checks the results against exact closed forms and audits what a
//! passive eavesdropper observes.

pub mod analysis;
pub mod channel;
pub mod combinatorics;
pub mod delivery;
pub mod error;
pub mod gf;
pub mod library;
pub mod matrix;
pub mod run;
pub mod schemes;
pub mod seeds;

pub use error::{Error, Result};
pub use gf::{Field, FieldSpec, Gf};
pub use matrix::FieldMatrix;
