//! Query-complexity toolkit for hypergraph simplex finding.

pub mod cli;
pub mod concentration;
pub mod exponent;
pub mod hypergraph;
pub mod learning_graph;
pub mod lp;
pub mod nested;
pub mod rational;
pub mod reduction;
pub mod seeds;
pub mod simplex;
