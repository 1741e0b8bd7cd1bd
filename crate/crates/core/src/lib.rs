//! Identification of the manifest part of an LTI network that contains
//! unknown latent nodes.
//!
//! The crate covers the whole workflow: defining or generating a
//! partitioned ground-truth network ([`netgen`]), driving it with white
//! Gaussian input ([`simulate`]), fitting auto-regressive models to the
//! manifest record by least squares ([`lsar`]), comparing transfer
//! functions in the H-infinity norm and evaluating the exponential error
//! bound of the optimal AR sequence ([`spectral`]), and reading the fitted
//! coefficient blocks as a direct/latent-mediated interaction graph
//! ([`connectivity`]). File formats and the experiment sweep harness used
//! by the `latnet` binary live in [`io`] and [`experiments`].

pub mod connectivity;
pub mod error;
pub mod experiments;
pub mod io;
pub mod lsar;
pub mod netgen;
pub mod simulate;
pub mod spectral;

pub use error::{Error, Result};
pub use netgen::{HigherOrderNetwork, PartitionedNetwork, StabilityReport};
pub use simulate::TimeSeriesData;
pub use spectral::{ARModel, Provenance, TheoryBounds, TransferFn};
