//! Context-aware augmentation of user turns in task-oriented dialog corpora.
//!
//! A user turn is masked, the surrounding past and future turns are rendered
//! into a prompt ([`prompt`]), a generation backend proposes candidates
//! ([`services`]), and the candidate closest to the original turn is kept
//! ([`rank`]), optionally subject to a score threshold. [`pipeline`] runs this
//! over a sampled fraction of a corpus ([`corpus`]) and emits the augmented
//! corpus plus per-turn records. [`intrinsic`] and [`extrinsic`] hold the
//! evaluation metrics.

pub mod corpus;
pub mod extrinsic;
pub mod intrinsic;
pub mod pipeline;
pub mod prompt;
pub mod random;
pub mod rank;
pub mod services;
pub mod text;
