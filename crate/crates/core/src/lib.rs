pub mod checker;
pub mod config;
pub mod dataset;
pub mod exec;
pub mod gateway;
pub mod guidance;
pub mod report;
pub mod runner;
pub mod source;
pub mod stats;
pub mod store;
