//! Minimal reverse-mode autograd over `ndarray` matrices.

pub mod gradcheck;
mod params;
mod tape;

pub use params::{Gradients, Matrix, ParamId, ParamStore};
pub use tape::{softmax_rows, Tape, Var};

#[cfg(test)]
mod tests;
