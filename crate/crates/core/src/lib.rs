//! Structure-aware retrieval over HTML document trees.
//!
//! Documents are parsed into path-addressable trees ([`doctree`]), split
//! into sentences marked by sentinel elements ([`segment`]), enriched with
//! title, header, list and table context ([`context`]), rendered to
//! Markdown ([`render`]), indexed per sentence ([`index`]), retrieved with
//! per-document aggregation under a size budget ([`retrieve`]) and filtered
//! into path-addressed citations by a generative model ([`filter`]).

pub mod context;
pub mod corpus;
pub mod doctree;
pub mod filter;
pub mod index;
pub mod prompt;
pub mod provider;
pub mod render;
pub mod retrieve;
pub mod segment;

#[cfg(any(test, feature = "testkit"))]
pub mod testkit;
