//! Triple-dyad ratio estimation for the p1 model of directed graphs.

pub mod analysis;
pub mod asymptotics;
pub mod error;
pub mod estimator;
pub mod experiments;
pub mod inference;
pub mod io;
pub mod mle;
pub mod model;
pub mod stats;
pub mod tally;

pub use error::{Error, Result};
pub use estimator::{estimate_all, estimate_graph, EstimateReport, Method};
pub use model::{dyad_probs, linear_design, sample_graph, Digraph, DyadProbTable, ParamVector};
pub use tally::{tally, DyadTally, SparseTally};
