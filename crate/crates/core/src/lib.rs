pub mod energy;
pub mod geometry;
pub mod harness;
pub mod microstructure;
pub mod spectral;
pub mod tensor_wells;
