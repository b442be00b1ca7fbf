//! placeholder
pub mod eta;
pub mod formula;
pub mod table;
