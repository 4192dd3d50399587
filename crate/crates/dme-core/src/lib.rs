//! Distributed mean estimation under a communication budget.
//!
//! A star network: `n` nodes each hold a vector `X_i` of dimension `d`, and a
//! server wants the arithmetic mean. Each node applies a randomized encoder to
//! its vector, serializes the result with one of several bit-exact wire
//! formats, and the server averages what it decodes. The toolkit implements
//! the full parametric family of unbiased encoders (variable-size support,
//! fixed-size support, binary quantization, a ternary generalization), the
//! five wire formats with exact and expected bit accounting, closed-form and
//! Monte Carlo mean-squared-error evaluation, and the water-filling /
//! alternating-minimization solver for the MSE-optimal encoder parameters at
//! a given budget.

pub mod analysis;
pub mod bits;
pub mod codec;
pub mod data;
pub mod error;
pub mod optimizer;
pub mod rng;
pub mod sim;
pub mod wire;

pub use error::{Error, Result};
