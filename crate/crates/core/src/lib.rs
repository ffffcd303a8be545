pub mod battery;
pub mod catalog;
pub mod error;
pub mod experiment;
pub mod forecast;
pub mod horizon;
pub mod lp;
pub mod mpc;
pub mod rng;
pub mod series;
pub mod signal;

pub use error::{Error, Result};
pub use series::Series;
