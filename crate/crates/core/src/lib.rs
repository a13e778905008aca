//! Unfolded projected-gradient ascent for superposition-code power allocation
//! in multi-hop NOMA ad-hoc networks.
//!
//! The crate is `no_std` and only needs `alloc`. Everything here is pure
//! numerics: channel and pilot simulation, SIC achievable rates, the exact
//! max-min objective gradient, the unrolled optimizer with learnable step
//! sizes, ensemble inference and an exhaustive grid reference. File formats,
//! thread pools and the experiment CLI live in the `unfolded-pgd` crate.
//!
//! Index conventions: hops, nodes and messages are 0-based. Hop `0` is the
//! broadcast hop from the source to the first relay layer; hop `b >= 1` is a
//! multiple-access hop whose transmitters are the relays of hop `b - 1`.
//! The stacked power matrix has one row per transmitting device: the relay
//! blocks of hops `0..B-1` in order, followed by the source row.

#![no_std]

extern crate alloc;

mod error;

pub mod adam;
pub mod ensemble;
pub mod exec;
pub mod gradient;
pub mod grid;
pub mod matrix;
pub mod model;
pub mod pgd;
pub mod pilots;
pub mod power;
pub mod rates;
pub mod real;
pub mod seed;
pub mod train;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use model::{ChannelDataset, ChannelRealization, HopChannel, NoiseProfile, Topology};
pub use power::PowerMatrix;
