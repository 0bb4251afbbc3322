#![no_std]
extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod adam;
pub mod cost;
pub mod data;
pub mod error;
pub mod eval;
pub mod math;
pub mod model;
pub mod objectives;
mod par;
pub mod response;
pub mod smooth;
pub mod trainer;
