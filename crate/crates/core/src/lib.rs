//! Judgment similarity for citation-free legal corpora.
//!
//! Two similarity tracks are computed over the same set of cases:
//!
//! * **expert** — cosine similarity of a hand-labeled feature table
//!   ([`expert`]);
//! * **embedding** — cosine similarity of node2vec vectors learned on a
//!   case–article–topic–court knowledge graph ([`corpus`] → [`topics`] →
//!   [`graph`] → [`embed`]).
//!
//! [`eval`] aligns the two matrices and summarizes their gap, and
//! [`pipeline`] drives the whole flow through files in a work directory.

pub mod corpus;
pub mod embed;
pub mod eval;
pub mod expert;
pub mod graph;
pub mod pipeline;
pub mod sim;
pub mod topics;
