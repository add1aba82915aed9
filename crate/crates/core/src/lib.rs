pub mod data;
pub mod goaltype;
pub mod prover;
pub mod rewrite;
pub mod stringgraph;
pub mod tactic;
pub mod eval;
pub mod combinators;
pub mod strategy_file;
pub mod registry;
pub mod session;
