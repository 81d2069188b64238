pub mod blossom;
pub mod circuit;
pub mod code;
pub mod correlated;
pub mod decoder;
pub mod dem;
pub mod error;
pub mod exec;
pub mod experiment;
pub mod frame;
pub mod gap;
pub mod matching;
pub mod noise;
pub mod pauli;
pub mod sim;
pub mod stats;
pub mod svg;

pub use error::{Error, Result};
