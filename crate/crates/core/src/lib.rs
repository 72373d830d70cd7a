pub mod code;
pub mod error;
pub mod sim;
pub mod lattice;
pub mod matching;
pub mod decoder;
pub mod report;
pub mod harness;
pub mod bench;
