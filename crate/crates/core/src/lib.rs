//! Daily EMU circulation planning on a trip hypergraph.
//!
//! The pipeline is: [`model`] (instance data) → [`netbuild`] (hypergraph) →
//! [`ilp`] (binary program) → either [`exact`] (branch-and-bound and
//! enumeration) or [`qubo`] + [`anneal`] (penalty encoding sampled by
//! simulated annealing, then filtered for feasibility). [`diagram`] renders
//! selected arcs as time-distance train diagrams.

pub mod anneal;
pub mod diagram;
pub mod exact;
pub mod ilp;
pub mod model;
pub mod netbuild;
pub mod num;
pub mod qubo;

pub use model::{load_instance, Instance};
pub use num::Rational;
