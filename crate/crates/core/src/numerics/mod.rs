//! Deterministic random streams and scalar numerical kernels shared by the
//! rest of the crate: Gaussian CDF/quantile/PDF, the CDF-power integral used
//! by the key-detection probability, complex-normal and Laplace samplers, and
//! dB/dBm/linear unit conversions.

mod gauss;
mod sample;

pub use gauss::{
    gauss_integral_power_cdf, log_std_normal_cdf, std_normal_cdf, std_normal_pdf,
    std_normal_quantile,
};
pub use sample::{draw_complex_normal, draw_laplace, sample_complex_normal, sample_laplace};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("quantile argument p must lie strictly inside (0, 1), got {0}")]
    QuantileDomain(f64),
    #[error("standard deviation must be positive, got {0}")]
    NonPositiveSigma(f64),
    #[error("expected a value tagged {expected}, got {got}")]
    UnitMismatch {
        expected: &'static str,
        got: &'static str,
    },
}

/// Descriptor of one reproducible random substream.
///
/// The same `(seed, stream_id)` pair always reproduces the identical sample
/// sequence, regardless of which thread or in which order the stream is
/// consumed, so Monte Carlo trials can be farmed out to workers freely.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStream {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    /// Instantiate the generator for this stream.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }

    /// Derive a sibling stream that differs only in the substream field
    /// (bits 40..56 of the stream id). Callers own the remaining bits.
    pub fn with_substream(&self, sub: u16) -> Self {
        let id = (self.stream_id & !(0xffff_u64 << 40)) | ((sub as u64) << 40);
        Self {
            seed: self.seed,
            stream_id: id,
        }
    }
}

/// A real value tagged with the scale it is expressed in.
///
/// Keeps dB-domain and linear-domain quantities from being mixed up when
/// converting the link-budget constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DbValue {
    /// Dimensionless ratio in decibels.
    Db(f64),
    /// Power referenced to 1 mW, in dBm.
    Dbm(f64),
    /// Linear scale; watts when the quantity is a power.
    Linear(f64),
}

impl DbValue {
    pub fn value(&self) -> f64 {
        match *self {
            DbValue::Db(v) | DbValue::Dbm(v) | DbValue::Linear(v) => v,
        }
    }

    fn tag(&self) -> &'static str {
        match self {
            DbValue::Db(_) => "dB",
            DbValue::Dbm(_) => "dBm",
            DbValue::Linear(_) => "linear",
        }
    }
}

/// dBm to watts: 10^((x - 30) / 10).
pub fn dbm_to_watts(x: DbValue) -> Result<DbValue, NumericsError> {
    match x {
        DbValue::Dbm(v) => Ok(DbValue::Linear(10f64.powf((v - 30.0) / 10.0))),
        other => Err(NumericsError::UnitMismatch {
            expected: "dBm",
            got: other.tag(),
        }),
    }
}

/// Watts to dBm: 10 log10(x) + 30.
pub fn watts_to_dbm(x: DbValue) -> Result<DbValue, NumericsError> {
    match x {
        DbValue::Linear(v) => Ok(DbValue::Dbm(10.0 * v.log10() + 30.0)),
        other => Err(NumericsError::UnitMismatch {
            expected: "linear",
            got: other.tag(),
        }),
    }
}

/// dB ratio to linear ratio: 10^(x / 10).
pub fn db_to_linear(x: DbValue) -> Result<DbValue, NumericsError> {
    match x {
        DbValue::Db(v) => Ok(DbValue::Linear(10f64.powf(v / 10.0))),
        other => Err(NumericsError::UnitMismatch {
            expected: "dB",
            got: other.tag(),
        }),
    }
}
