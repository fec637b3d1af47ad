//! Kloosterman sums and Kloosterman paths to prime-power moduli `p^n`.

pub mod cli;
pub mod error;
pub mod export;
pub mod klooster;
pub mod modring;
pub mod moments;
pub mod numeric;
pub mod paths;
pub mod randseries;
pub mod statphase;

pub use error::{Error, Result};
