//! Dropout-tolerant two-round secure aggregation in which the server's linear
//! demand stays hidden from the users.
//!
//! A server wants `kc` linear combinations of `k` users' input vectors over a
//! prime field. Users mask their inputs in round 1; after the surviving set is
//! announced, round 2 recovers exactly the key aggregates needed to unmask the
//! demanded combinations and nothing else. Two schemes are implemented:
//!
//! * [`scheme_single`]: one combination (`kc = 1`), blinding the demand row
//!   with a multiplicative cipher and sharing keys through an MDS code.
//! * [`scheme_multi`]: several combinations (`2 <= kc < u`), recovering each
//!   key combination through a symmetric private-computation retrieval with
//!   Lagrange-encoded queries and one-symbol answers.
//!
//! [`scheme_baseline`] repeats the single-combination scheme `kc` times for
//! rate comparison. The [`harness`] orchestrates full runs under configurable
//! dropout models, records [`model::Transcript`]s, and measures exact rates;
//! [`verify`] turns the decodability, input-security, and demand-privacy
//! constraints into executable checks.

pub mod algebra;
pub mod codes;
mod error;
pub mod harness;
pub mod model;
pub mod scheme_baseline;
pub mod scheme_multi;
pub mod scheme_single;
pub mod verify;

pub use error::Error;
