pub mod collapse;
pub mod engine;
pub mod params;
pub mod pattern;
pub mod term;
pub mod verifier;
pub mod constructions;
pub mod cli;
