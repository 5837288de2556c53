//! Complete alignments of partially ordered event logs against
//! resource-constrained nu-Petri nets.

pub mod align;
pub mod approx;
pub mod eventlog;
pub mod fixtures;
pub mod ilp;
pub mod format;
pub mod lognet;
pub mod net;
pub mod poset;
pub mod rcnu;
