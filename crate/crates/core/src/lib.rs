//! Online selection of the best system in an ensemble from replayed quality
//! feedback.
//!
//! Given per-segment quality scores for a set of candidate systems (with
//! coverage gaps and fallback strategies for the missing ones), the library
//! maintains one weight per system, updates it with an exponential rule as
//! feedback arrives, and reports how quickly the weight ranking converges to
//! a reference ranking.
//!
//! Modules follow the pipeline: [`dataset`] loads or generates the score
//! matrix, [`feedback`] resolves each cell into a loss, [`learner`] updates
//! the weights, [`evaluation`] measures convergence and regret, and
//! [`harness`] replays whole experiments and writes the artifacts the
//! `enselect` binary exposes.

pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod feedback;
pub mod harness;
pub mod learner;
pub mod plot;

pub use error::{Error, Result};
