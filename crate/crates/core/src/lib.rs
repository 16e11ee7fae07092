//! Numerical laboratory for two GAN failure modes: mini-batch noise in the
//! training dynamics, and pixel-wise combinations of real images that a
//! discriminator scores as real. Includes the linear WGAN model and its
//! variance oracles, a rectangle-image dataset builder, a margin checker for
//! combinations, and a small dense GAN with the two proposed fixes.

pub mod combination;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod rng;
pub mod tinygan;
pub mod variance_lab;

pub use error::{Error, Result};
