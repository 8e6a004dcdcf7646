//! Compressed-sensing channel estimation for mmWave links whose antenna
//! arrays suffer element blockages, with relay-aided diagnosis of the
//! transmit array.
//!
//! The crate is organised bottom-up:
//!
//! - [`array`]: ULA steering vectors and angle-grid dictionaries.
//! - [`channel`]: on-grid geometric channels and their sparse coefficients.
//! - [`impairments`]: random blockage masks and corrupted channels.
//! - [`sounding`]: training codebooks, stacked measurement operators and
//!   sensing matrices, noisy downlink measurements.
//! - [`recovery`]: complex LASSO, OMP, debiasing and support detection.
//! - [`diagnosis`]: relay-side innovation recovery of the BS blockage mask.
//! - [`estimator`]: end-to-end channel estimation regimes and NMSE.
//! - [`experiments`]: seeded Monte Carlo harness and CSV emission.

pub mod array;
pub mod channel;
pub mod diagnosis;
mod error;
pub mod estimator;
pub mod experiments;
pub mod impairments;
pub mod linalg;
pub mod recovery;
pub mod sounding;

pub use error::{Error, Result};

/// Complex double used throughout the crate.
pub type C64 = num_complex::Complex<f64>;

/// Draws one sample of a circularly-symmetric complex Gaussian with the given
/// variance.
pub fn complex_gaussian<R: rand::Rng + ?Sized>(rng: &mut R, variance: f64) -> C64 {
    use rand_distr::{Distribution, StandardNormal};
    let scale = (variance / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re * scale, im * scale)
}

/// Converts an SNR in dB into the noise variance that yields it for unit
/// average signal power. `+inf` maps to a noiseless link.
pub fn noise_variance_for_snr(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}
