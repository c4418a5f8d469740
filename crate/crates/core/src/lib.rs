//! Norm-form primes `u^2 + n v^2`, ideal arithmetic in imaginary quadratic fields,
//! circle-method exponential sums and the variation operators used to study
//! ergodic averages along such primes.

pub mod arith;
pub mod averages;
pub mod error;
pub mod expsums;
pub mod ideals;
pub mod iw;
pub mod normprimes;
pub mod phase;
pub mod poly;
pub mod quadfield;
pub mod spectrum;
pub mod varops;

pub use error::{Error, Result};
