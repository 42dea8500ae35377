//! Online detection of volatility change-points in return series, and
//! clustering of many series by the resulting change-point posteriors.
//!
//! The pieces fit together as a pipeline:
//!
//! 1. [`ingest`] reads price tables and turns them into log returns.
//! 2. [`filter`] runs an exact Bayesian filtering recursion over the time of
//!    the most recent change-point, with conjugate AR(1) segment models from
//!    [`model`] and an optional support cap that prunes to the highest-mass
//!    atoms.
//! 3. [`metric`] compares per-series change-point posteriors with the
//!    Wasserstein-1 distance and assembles a dissimilarity matrix.
//! 4. [`cluster`] runs average-linkage agglomerative clustering on that
//!    matrix and serializes the merge tree.
//! 5. [`synth`] generates ground-truth test data from the same generative
//!    model; [`report`] holds the row formats written by the `volcp` binary.
//!
//! All file formats round-trip through readers in the module that owns them,
//! and every floating-point value in CSV output is printed with 17
//! significant digits so reruns can be compared byte for byte.

pub mod cluster;
pub mod config;
pub mod dist;
pub mod error;
pub mod filter;
pub mod ingest;
pub mod metric;
pub mod model;
pub mod report;
pub mod synth;

pub use error::Error;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Formats a float with 17 significant digits, enough to reproduce the exact
/// f64 bit pattern when parsed back.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

#[cfg(test)]
mod tests {
    use super::fmt_f64;

    #[test]
    fn fmt_f64_round_trips_exactly() {
        for &x in &[
            0.0,
            -0.0,
            1.0,
            std::f64::consts::PI,
            1e-300,
            -3.537_856_910_474_189e102,
            f64::MIN_POSITIVE,
            0.1 + 0.2,
        ] {
            let s = fmt_f64(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{s} did not round-trip");
        }
    }
}
