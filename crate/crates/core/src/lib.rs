//! Weighted tiling engine.
//!
//! Tile alphabets and grid cost evaluation live in [`tiling`]. Turing machines
//! and their compilation into legal computation squares live in [`tm`]. The
//! layered constructions are split across [`layer1`] (interval creation and its
//! fault analysis), [`layer2`] (binary counter strips), [`gwt`] (verifier layer
//! and border gadget), [`consensus`] (global agreement machine) and
//! [`krentel`] (oracle accounting). [`solver`] computes exact minimum costs and
//! [`faultlab`] injects faults and audits the interval bounds.

pub mod consensus;
pub mod error;
pub mod faultlab;
pub mod gwt;
pub mod krentel;
pub mod layer1;
pub mod layer2;
pub mod solver;
pub mod tiling;
pub mod tm;

pub use error::{Error, Result};
