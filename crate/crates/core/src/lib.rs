//! Cointegration residuals, delay embedding and Vietoris-Rips persistence for
//! multichannel time series.

pub mod cointegration;
pub mod embedding;
pub mod gp;
pub mod error;
mod linalg;
pub mod metrics;
pub mod pipeline;
pub mod series;
pub mod stationarity;
pub mod synth;
pub mod vr;

pub use error::{Error, ErrorKind, Result};
