//! placeholder
pub mod fixtures;
pub mod ledger;
pub mod steps;
pub mod suites;
