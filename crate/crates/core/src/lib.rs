//! Spiking-network simulation and substructure attribution over a directed
//! connection-probability graph of neural categories.
//!
//! The crate is organised the way a run flows: [`circuit`] builds and
//! characterises the graph, [`dynamics`] holds the numerical kernels,
//! [`snn`] trains a leaky integrate-and-fire network on Lorenz prediction,
//! [`attribution`] ablates substructures of the trained network and scores
//! them, and [`transfer`] computes degradation scores from accuracy sweeps.
//! [`pipeline`] ties the stages together for the command-line front end.

pub mod attribution;
pub mod circuit;
pub mod dynamics;
pub mod error;
pub mod pipeline;
pub mod plot;
pub mod snn;
pub mod transfer;

pub use error::{Error, ErrorKind, Result};
