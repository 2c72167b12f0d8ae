pub mod app;
pub mod baselines;
pub mod cost;
pub mod graph;
pub mod offline;
pub mod online;
pub mod search;
pub mod simkit;
pub mod stochastic;
