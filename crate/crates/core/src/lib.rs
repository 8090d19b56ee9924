#![no_std]
#![cfg_attr(test, allow(unused_imports))]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod clustering;
pub mod error;
pub mod graph;
pub mod inference;
pub mod model;
pub mod rng;
pub mod spectral;
