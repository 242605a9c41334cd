//! Coevolutionary simulator and equilibrium verifier for the quantum penny
//! flip game.

pub mod cli;
pub mod error;
pub mod evolve;
pub mod experiments;
pub mod game;
pub mod qmat;
pub mod rng;
pub mod stats;
pub mod strategy;
pub mod verify;

pub use error::{Error, Result};
