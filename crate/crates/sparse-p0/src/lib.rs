//! Simulation harness, dataset ingestion, reports and the `sparse-p0`
//! command-line tool for the directed-network logistic model implemented in
//! [`sparse_p0_core`].

pub mod cli;
pub mod io;
pub mod report;
pub mod sim;

pub use sparse_p0_core as core;

/// JSON has no NaN, so statistics over empty sets are written as `null`; read them back as NaN.
pub(crate) fn nan_or_f64<'de, D: serde::Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    use serde::Deserialize;
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}
