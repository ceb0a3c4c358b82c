pub mod benchmark;
pub mod features;
pub mod filtering;
pub mod geometry;
pub mod metrics;
pub mod overlap;
pub mod propagation;
pub mod recon_io;
pub mod synthetic;
