//! Middle-term density forecasting of daily power consumption.
//!
//! The log of daily consumption is split into a linear trend and seasonality
//! layer ([`glm`]) and a residual modelled by a small recurrent network
//! ([`nax`]) whose two outputs, the Gaussian mean and standard deviation of the
//! residual, feed back as inputs on the next day. Weather and calendar inputs
//! drive the network.
//!
//! Forecasts are produced ex post, with realized weather, or ex ante, as an
//! equal-weight Gaussian mixture over block-bootstrapped temperature paths
//! ([`forecast`]). [`eval`] scores them with RMSE, MAPE, pinball loss and
//! coverage likelihood-ratio tests, and [`pipeline`] runs the grid search,
//! test-year and robustness protocol.

pub mod benchmarks;
pub mod cli;
pub mod error;
pub mod eval;
pub mod features;
pub mod forecast;
pub mod glm;
pub mod ingest;
mod linalg;
pub mod nax;
pub mod pipeline;
pub mod stats;

pub use error::{Error, Result};
pub use linalg::{least_squares, LeastSquares};
