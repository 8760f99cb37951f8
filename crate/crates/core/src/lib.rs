//! Teaching inverse-reinforcement learners whose features are a linear
//! projection ("worldview") of the true features.
//!
//! * [`mdp`]: finite MDPs, gridworlds, planning and feature expectations.
//! * [`linalg`]: worldview geometry: teaching risk, pseudoinverse, bounds.
//! * [`learner`]: projection-version apprenticeship learning in the learner's view.
//! * [`teacher`]: teaching strategies and the round-based teaching loop.
//! * [`experiments`]: seeded experiment drivers behind the `teachrisk` CLI.

pub mod error;
pub mod experiments;
pub mod learner;
pub mod linalg;
pub mod mdp;
pub mod rng;
pub mod teacher;

pub use error::{Error, Result};
