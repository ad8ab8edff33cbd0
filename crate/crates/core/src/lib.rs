pub mod calculus;
pub mod cases;
pub mod cli;
pub mod graph;
pub mod numfmt;
pub mod scenario;
pub mod solver;
