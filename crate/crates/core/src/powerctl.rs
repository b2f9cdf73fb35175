//! Power allocation between data, authentication tag, and artificial noise.
//!
//! Two derived factors summarize how a `(P_t, φ)` pair acts on the system:
//! ψ = P_t·φ pins the legitimate user's authentication probability, and
//! ω = (1-φ)/(P_t·φ) pins the eavesdropper's high-SNR key-detection
//! probability. Choosing (ψ, ω) therefore fixes both security levels while
//! leaving the sum rate to the resulting φ.

use crate::channel::ChannelRealization;
use crate::precoding::PrecoderSet;
use thiserror::Error;

/// Tag power fraction used by the conventional fixed-tag-power baseline.
pub const CONVENTIONAL_TAG_FRACTION: f64 = 0.015;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PowerError {
    #[error("power splitting factor phi must lie in (0, 1], got {0}")]
    PhiOutOfRange(f64),
    #[error("tag power fraction must lie in [0, 1), got {0}")]
    TagFractionOutOfRange(f64),
    #[error("transmit power must be positive, got {0} W")]
    NonPositivePower(f64),
    #[error("psi must be positive, got {0}")]
    NonPositivePsi(f64),
    #[error("omega must be non-negative, got {0}")]
    NegativeOmega(f64),
    #[error("omega factor undefined for p_t = {p_t}, phi = {phi}")]
    OmegaUndefined { p_t: f64, phi: f64 },
    #[error("infeasible pair: omega*psi = {product} violates omega*psi < 1 (phi would leave (0, 1))")]
    InfeasibleProduct { product: f64 },
    #[error("infeasible pair: tag fraction psi/phi = {p_t} violates p_t < 1")]
    TagFractionTooLarge { p_t: f64 },
    #[error("fixed-omega strategy needs omega > 0, got {0}")]
    OmegaNotPositive(f64),
    #[error("effective precoder gain for user {user} is zero")]
    DegenerateGain { user: usize },
    #[error("tag power fraction must be positive for authentication, got {0}")]
    NonPositiveTagPower(f64),
}

/// The transmit power and its split between data, tag, and AN.
///
/// The data-side fractions always satisfy P_s + P_t = 1, so only the tag
/// fraction is stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSplit {
    /// Total transmit power P_Tx in watts.
    pub p_tx_watts: f64,
    /// Power splitting factor φ between data precoder and AN precoder.
    pub phi: f64,
    /// Tag power fraction P_t of the data-side power.
    pub tag_fraction: f64,
}

impl PowerSplit {
    pub fn new(p_tx_watts: f64, phi: f64, tag_fraction: f64) -> Result<Self, PowerError> {
        if !(p_tx_watts > 0.0) {
            return Err(PowerError::NonPositivePower(p_tx_watts));
        }
        if !(phi > 0.0 && phi <= 1.0) {
            return Err(PowerError::PhiOutOfRange(phi));
        }
        if !(0.0..1.0).contains(&tag_fraction) {
            return Err(PowerError::TagFractionOutOfRange(tag_fraction));
        }
        Ok(Self {
            p_tx_watts,
            phi,
            tag_fraction,
        })
    }

    /// Data power fraction P_s = 1 - P_t.
    pub fn data_fraction(&self) -> f64 {
        1.0 - self.tag_fraction
    }

    /// ψ = P_t·φ.
    pub fn psi(&self) -> f64 {
        psi_factor(self.tag_fraction, self.phi)
    }

    /// ω = (1-φ)/(P_t·φ); zero when φ = 1.
    pub fn omega(&self) -> Result<f64, PowerError> {
        omega_factor(self.tag_fraction, self.phi)
    }

    /// Exact transmitted tag power P_t·P_Tx·φ in watts (diagnostic).
    pub fn tag_tx_power_watts(&self) -> f64 {
        self.tag_fraction * self.p_tx_watts * self.phi
    }

    /// SNR ρ = P_Tx/σ_n².
    pub fn snr(&self, sigma_n2: f64) -> f64 {
        self.p_tx_watts / sigma_n2
    }

    /// Same fractions at a different transmit power.
    pub fn with_p_tx_watts(&self, p_tx_watts: f64) -> Result<Self, PowerError> {
        Self::new(p_tx_watts, self.phi, self.tag_fraction)
    }
}

/// Power allocation strategies compared in the sweeps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Strategy {
    /// Hold ψ = P_t·φ fixed: the user's authentication probability stays
    /// put while φ sweeps.
    FixedPsi(f64),
    /// Hold ω = (1-φ)/(P_t·φ) fixed: the eavesdropper's high-SNR key
    /// probability stays put while φ sweeps.
    FixedOmega(f64),
    /// Conventional baseline: constant tag power fraction.
    Conventional(f64),
}

impl Strategy {
    pub fn label(&self) -> String {
        match self {
            Strategy::FixedPsi(v) => format!("fixed_psi:{v}"),
            Strategy::FixedOmega(v) => format!("fixed_omega:{v}"),
            Strategy::Conventional(v) => format!("conventional:{v}"),
        }
    }
}

/// ψ = P_t·φ.
pub fn psi_factor(p_t: f64, phi: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p_t));
    debug_assert!(phi > 0.0 && phi <= 1.0);
    p_t * phi
}

/// ω = (1-φ)/(P_t·φ), with φ = 1 mapping to ω = 0 (no AN).
pub fn omega_factor(p_t: f64, phi: f64) -> Result<f64, PowerError> {
    if !(p_t > 0.0) || !(phi > 0.0) {
        return Err(PowerError::OmegaUndefined { p_t, phi });
    }
    Ok((1.0 - phi) / (p_t * phi))
}

/// Invert (ψ, ω) into (φ, P_t): φ = 1 - ωψ and P_t = ψ/φ.
///
/// Pairs with ωψ ≥ 1 (φ would leave the unit interval) or ψ ≥ φ (tag
/// fraction would reach one) are rejected with the violated constraint
/// named rather than clamped, so strategy comparisons stay honest.
pub fn allocate_from_factors(psi: f64, omega: f64) -> Result<(f64, f64), PowerError> {
    if !(psi > 0.0) {
        return Err(PowerError::NonPositivePsi(psi));
    }
    if omega < 0.0 {
        return Err(PowerError::NegativeOmega(omega));
    }
    let product = omega * psi;
    if product >= 1.0 {
        return Err(PowerError::InfeasibleProduct { product });
    }
    let phi = 1.0 - product;
    let p_t = psi / phi;
    if p_t >= 1.0 {
        return Err(PowerError::TagFractionTooLarge { p_t });
    }
    Ok((phi, p_t))
}

/// Expand a strategy over a φ grid into per-point power splits. Infeasible
/// grid points are reported in place; the rest of the grid still comes back.
pub fn strategy_splits(
    strategy: Strategy,
    phi_grid: &[f64],
    p_tx_watts: f64,
) -> Vec<(f64, Result<PowerSplit, PowerError>)> {
    phi_grid
        .iter()
        .map(|&phi| {
            let split = split_at(strategy, phi, p_tx_watts);
            (phi, split)
        })
        .collect()
}

fn split_at(strategy: Strategy, phi: f64, p_tx_watts: f64) -> Result<PowerSplit, PowerError> {
    if !(phi > 0.0 && phi <= 1.0) {
        return Err(PowerError::PhiOutOfRange(phi));
    }
    let p_t = match strategy {
        Strategy::FixedPsi(psi) => {
            if !(psi > 0.0) {
                return Err(PowerError::NonPositivePsi(psi));
            }
            let p_t = psi / phi;
            if p_t >= 1.0 {
                return Err(PowerError::TagFractionTooLarge { p_t });
            }
            p_t
        }
        Strategy::FixedOmega(omega) => {
            if !(omega > 0.0) {
                return Err(PowerError::OmegaNotPositive(omega));
            }
            (1.0 - phi) / (omega * phi)
        }
        Strategy::Conventional(p_t) => p_t,
    };
    PowerSplit::new(p_tx_watts, phi, p_t)
}

/// Approximate H0 variance of the user's correlation statistic with the
/// multiuser and AN terms dropped:
/// (L_t/2)·(1 + σ_n²/(P_Tx·P_t·|h_u^H w_u|²)).
///
/// Under zero forcing with null-space AN the dropped terms vanish, and the
/// remaining noise term depends on (P_t, φ) only through ψ = P_t·φ.
pub fn approx_user_var0(
    realization: &ChannelRealization,
    precoders: &PrecoderSet,
    split: &PowerSplit,
    u: usize,
    sigma_n2: f64,
    tag_length: usize,
) -> Result<f64, PowerError> {
    if !(split.tag_fraction > 0.0) {
        return Err(PowerError::NonPositiveTagPower(split.tag_fraction));
    }
    let gain = realization.user_channels[u].dotc(&precoders.data[u]).norm_sqr();
    if gain == 0.0 {
        return Err(PowerError::DegenerateGain { user: u });
    }
    let noise_term = sigma_n2 / (split.p_tx_watts * split.tag_fraction * gain);
    Ok(tag_length as f64 / 2.0 * (1.0 + noise_term))
}

/// Infinite-SNR limit of the H0 variance of the eavesdropper's statistic:
/// (L_t/2)·(1 + Σ_i |w_u^H H_e H_e^H v_i|² / (P_t ‖H_e^H w_u‖⁴)).
///
/// Only the AN leakage survives; it depends on (P_t, φ) only through
/// ω = (1-φ)/(P_t·φ), which is why fixed-ω strategies pin the
/// eavesdropper's converged key-detection probability.
pub fn eve_asymptotic_var0(
    realization: &ChannelRealization,
    precoders: &PrecoderSet,
    split: &PowerSplit,
    u: usize,
    tag_length: usize,
) -> Result<f64, PowerError> {
    if !(split.tag_fraction > 0.0) {
        return Err(PowerError::NonPositiveTagPower(split.tag_fraction));
    }
    let combined = realization.eve_channel.ad_mul(&precoders.data[u]);
    let norm2 = combined.norm_squared();
    if norm2 == 0.0 {
        return Err(PowerError::DegenerateGain { user: u });
    }
    let mut an_term = 0.0;
    for v_i in &precoders.an {
        let leak = combined.dotc(&realization.eve_channel.ad_mul(v_i)).norm_sqr();
        an_term += leak;
    }
    an_term /= split.tag_fraction * norm2 * norm2;
    Ok(tag_length as f64 / 2.0 * (1.0 + an_term))
}
