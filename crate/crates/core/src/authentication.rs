//! Fingerprint authentication: tag generation, tag estimation at the
//! legitimate user and at the eavesdropper, the binary hypothesis test with
//! its closed-form detection probability, and the eavesdropper's ML key
//! search with its closed-form success probability.
//!
//! Sequence convention: symbol blocks are stored as plain column vectors of
//! length L_t. The receive equations conjugate the effective scalar gains
//! (h_u^H w_k etc.) so that every formula here matches the row-vector forms
//! the statistics are derived from, term by term.

use crate::channel::ChannelRealization;
use crate::numerics::{
    gauss_integral_power_cdf, std_normal_cdf, std_normal_quantile, NumericsError,
};
use crate::powerctl::PowerSplit;
use crate::precoding::PrecoderSet;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sha2::{Digest, Sha256};
use std::f64::consts::FRAC_1_SQRT_2;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AuthError {
    #[error("effective gain for user {user} is zero; tag cannot be equalized")]
    DegenerateGain { user: usize },
    #[error("tag power fraction must be positive, got {0}")]
    NonPositiveTagPower(f64),
    #[error("sequence length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("sigma0 must be positive, got {0}")]
    NonPositiveSigma(f64),
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// One key out of the finite key space, identified by its index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TagKey {
    index: u64,
}

impl TagKey {
    pub fn from_index(index: u64) -> Self {
        Self { index }
    }

    pub fn index(&self) -> u64 {
        self.index
    }

    /// Opaque byte representation fed to the tag function.
    pub fn bytes(&self) -> [u8; 8] {
        self.index.to_le_bytes()
    }
}

/// The L_t-symbol authentication tag for one (data block, key) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct TagSequence {
    pub symbols: DVector<Complex64>,
}

impl TagSequence {
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

/// Moments of the correlation statistic under both hypotheses.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypothesisStats {
    pub mu0: f64,
    pub var0: f64,
    pub mu1: f64,
    pub var1: f64,
}

impl HypothesisStats {
    pub fn sigma0(&self) -> f64 {
        self.var0.sqrt()
    }

    pub fn sigma1(&self) -> f64 {
        self.var1.sqrt()
    }
}

/// Outcome of the user-side binary hypothesis test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuthDecision {
    /// Correlation statistic τ_b.
    pub statistic: f64,
    /// Decision threshold τ_0.
    pub threshold: f64,
    /// True iff τ_b > τ_0.
    pub authentic: bool,
}

impl AuthDecision {
    pub fn decide(statistic: f64, threshold: f64) -> Self {
        Self {
            statistic,
            threshold,
            authentic: statistic > threshold,
        }
    }
}

/// Precomputed digest of one data block, so tags for many candidate keys
/// can be generated without rehashing the block (the ML search needs one
/// tag per key in the space).
pub struct TagContext {
    data_digest: [u8; 32],
    len: usize,
}

impl TagContext {
    pub fn new(data_symbols: &DVector<Complex64>) -> Self {
        let mut hasher = Sha256::new();
        hasher.update(b"phyauth.tag.v1");
        hasher.update((data_symbols.len() as u64).to_le_bytes());
        for s in data_symbols.iter() {
            hasher.update(s.re.to_le_bytes());
            hasher.update(s.im.to_le_bytes());
        }
        Self {
            data_digest: hasher.finalize().into(),
            len: data_symbols.len(),
        }
    }

    /// Tag for one key: the digest of (data digest, key bytes) seeds a
    /// deterministic CN(0,1) sequence generator.
    pub fn tag(&self, key: &TagKey) -> TagSequence {
        let mut hasher = Sha256::new();
        hasher.update(self.data_digest);
        hasher.update(key.bytes());
        let seed: [u8; 32] = hasher.finalize().into();
        let mut rng = ChaCha8Rng::from_seed(seed);
        let symbols = DVector::from_fn(self.len, |_, _| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
        });
        TagSequence { symbols }
    }
}

/// t_u = f(s_u, η_u): a one-way function of the data block and the shared
/// key, emitting CN(0,1)-distributed symbols so the tag blends into the
/// data statistics.
pub fn generate_tag(data_symbols: &DVector<Complex64>, key: &TagKey) -> TagSequence {
    TagContext::new(data_symbols).tag(key)
}

/// Least-squares tag estimate at user u.
///
/// Subtracts the decoded-data contribution sqrt(P_Tx P_s)(h_u^H w_u)s_u from
/// the received block, then divides by the tag gain sqrt(P_Tx P_t)(h_u^H w_u).
/// The residual is the tag plus multiuser interference, AN leakage, and
/// scaled additive noise.
pub fn user_tag_estimate(
    received: &DVector<Complex64>,
    data_u: &DVector<Complex64>,
    realization: &ChannelRealization,
    precoders: &PrecoderSet,
    split: &PowerSplit,
    u: usize,
) -> Result<DVector<Complex64>, AuthError> {
    if received.len() != data_u.len() {
        return Err(AuthError::LengthMismatch {
            left: received.len(),
            right: data_u.len(),
        });
    }
    if !(split.tag_fraction > 0.0) {
        return Err(AuthError::NonPositiveTagPower(split.tag_fraction));
    }
    let gain = realization.user_channels[u].dotc(&precoders.data[u]);
    if gain.norm_sqr() == 0.0 {
        return Err(AuthError::DegenerateGain { user: u });
    }
    let gain = gain.conj(); // column-sequence convention
    let data_coef = Complex64::from((split.p_tx_watts * split.data_fraction()).sqrt()) * gain;
    let tag_coef = Complex64::from((split.p_tx_watts * split.tag_fraction).sqrt()) * gain;
    let mut residual = received.clone();
    residual.axpy(-data_coef, data_u, Complex64::ONE);
    Ok(residual / tag_coef)
}

/// Correlation statistic τ = Re(estimated^H expected).
pub fn correlation_statistic(
    estimated: &DVector<Complex64>,
    expected: &TagSequence,
) -> Result<f64, AuthError> {
    if estimated.len() != expected.len() {
        return Err(AuthError::LengthMismatch {
            left: estimated.len(),
            right: expected.len(),
        });
    }
    Ok(estimated.dotc(&expected.symbols).re)
}

/// Closed-form moments of the user's correlation statistic:
/// μ0 = 0, μ1 = L_t,
/// σ0² = (L_t/2)(1 + Σ_{k≠u}|h_u^H w_k|²/(P_t|h_u^H w_u|²)
///                 + Σ_i|h_u^H v_i|²/(P_t|h_u^H w_u|²)
///                 + σ_n²/(P_Tx P_t|h_u^H w_u|²)),
/// σ1² = σ0² + L_t/2.
pub fn user_hypothesis_stats(
    realization: &ChannelRealization,
    precoders: &PrecoderSet,
    split: &PowerSplit,
    u: usize,
    sigma_n2: f64,
    tag_length: usize,
) -> Result<HypothesisStats, AuthError> {
    if !(split.tag_fraction > 0.0) {
        return Err(AuthError::NonPositiveTagPower(split.tag_fraction));
    }
    let h_u = &realization.user_channels[u];
    let own = h_u.dotc(&precoders.data[u]).norm_sqr();
    if own == 0.0 {
        return Err(AuthError::DegenerateGain { user: u });
    }
    let p_t = split.tag_fraction;
    let mut terms = 0.0;
    for (k, w_k) in precoders.data.iter().enumerate() {
        if k != u {
            terms += h_u.dotc(w_k).norm_sqr() / (p_t * own);
        }
    }
    for v_i in &precoders.an {
        terms += h_u.dotc(v_i).norm_sqr() / (p_t * own);
    }
    terms += sigma_n2 / (split.p_tx_watts * p_t * own);
    let half = tag_length as f64 / 2.0;
    let var0 = half * (1.0 + terms);
    Ok(HypothesisStats {
        mu0: 0.0,
        var0,
        mu1: tag_length as f64,
        var1: var0 + half,
    })
}

/// Neyman-Pearson threshold τ0 = Φ⁻¹(1 - p_fa)·σ0 for the H0 model
/// N(0, σ0²).
pub fn detection_threshold(p_fa: f64, sigma0: f64) -> Result<f64, AuthError> {
    if !(sigma0 > 0.0) {
        return Err(AuthError::NonPositiveSigma(sigma0));
    }
    Ok(std_normal_quantile(1.0 - p_fa)? * sigma0)
}

/// Detection probability P_D = 1 - Φ((τ0 - μ1)/σ1).
pub fn detection_probability(stats: &HypothesisStats, tau0: f64) -> f64 {
    1.0 - std_normal_cdf((tau0 - stats.mu1) / stats.sigma1())
}

/// Least-squares tag estimate at the eavesdropper, who is assumed to know
/// every user's data (and the other tags) and subtracts them before
/// combining the antennas onto the target beam H_e^H w_u.
pub fn eve_tag_estimate(
    received: &DMatrix<Complex64>,
    data: &[DVector<Complex64>],
    tags: &[TagSequence],
    realization: &ChannelRealization,
    precoders: &PrecoderSet,
    split: &PowerSplit,
    u: usize,
) -> Result<DVector<Complex64>, AuthError> {
    if !(split.tag_fraction > 0.0) {
        return Err(AuthError::NonPositiveTagPower(split.tag_fraction));
    }
    let beam = realization.eve_channel.ad_mul(&precoders.data[u]);
    let beam_power = beam.norm_squared();
    if beam_power == 0.0 {
        return Err(AuthError::DegenerateGain { user: u });
    }
    let sqrt_data = (split.p_tx_watts * split.data_fraction()).sqrt();
    let sqrt_tag = (split.p_tx_watts * split.tag_fraction).sqrt();
    let mut residual = received.clone();
    for (k, w_k) in precoders.data.iter().enumerate() {
        let beam_k = realization.eve_channel.ad_mul(w_k).conjugate();
        residual.ger(
            Complex64::from(-sqrt_data),
            &beam_k,
            &data[k],
            Complex64::ONE,
        );
        if k != u {
            residual.ger(
                Complex64::from(-sqrt_tag),
                &beam_k,
                &tags[k].symbols,
                Complex64::ONE,
            );
        }
    }
    // combine antennas: t = residualᵀ beam / (sqrt(P_Tx P_t) ‖beam‖²)
    let combined = residual.tr_mul(&beam);
    Ok(combined / Complex64::from(sqrt_tag * beam_power))
}

/// Closed-form moments of the eavesdropper's correlation statistic:
/// μ0 = 0, μ1 = L_t,
/// σ0² = (L_t/2)(1 + Σ_i|w_u^H H_e H_e^H v_i|²/(P_t‖H_e^H w_u‖⁴)
///                 + σ_n²/(P_Tx P_t‖H_e^H w_u‖²)),
/// σ1² = σ0² + L_t/2.
pub fn eve_hypothesis_stats(
    realization: &ChannelRealization,
    precoders: &PrecoderSet,
    split: &PowerSplit,
    u: usize,
    sigma_n2: f64,
    tag_length: usize,
) -> Result<HypothesisStats, AuthError> {
    if !(split.tag_fraction > 0.0) {
        return Err(AuthError::NonPositiveTagPower(split.tag_fraction));
    }
    let beam = realization.eve_channel.ad_mul(&precoders.data[u]);
    let beam_power = beam.norm_squared();
    if beam_power == 0.0 {
        return Err(AuthError::DegenerateGain { user: u });
    }
    let p_t = split.tag_fraction;
    let mut terms = 0.0;
    for v_i in &precoders.an {
        let leak = beam.dotc(&realization.eve_channel.ad_mul(v_i)).norm_sqr();
        terms += leak / (p_t * beam_power * beam_power);
    }
    terms += sigma_n2 / (split.p_tx_watts * p_t * beam_power);
    let half = tag_length as f64 / 2.0;
    let var0 = half * (1.0 + terms);
    Ok(HypothesisStats {
        mu0: 0.0,
        var0,
        mu1: tag_length as f64,
        var1: var0 + half,
    })
}

/// Maximum-likelihood key search: the key whose tag correlates best with
/// the estimate. Ties resolve to the lowest index.
pub fn ml_decode_key(
    estimated: &DVector<Complex64>,
    data_u: &DVector<Complex64>,
    key_space_size: u64,
) -> u64 {
    debug_assert!(key_space_size >= 1);
    let ctx = TagContext::new(data_u);
    let mut best_index = 0u64;
    let mut best_score = f64::NEG_INFINITY;
    for index in 0..key_space_size {
        let tag = ctx.tag(&TagKey::from_index(index));
        let score = estimated.dotc(&tag.symbols).re;
        if score > best_score {
            best_score = score;
            best_index = index;
        }
    }
    best_index
}

/// Probability that the ML search returns the correct key out of
/// `key_space_size` candidates:
/// ∫ Φ((τ-μ0)/σ0)^(|K|-1) φ((τ-μ1)/σ1)/σ1 dτ.
pub fn key_detection_probability(
    stats: &HypothesisStats,
    key_space_size: u64,
) -> Result<f64, AuthError> {
    Ok(gauss_integral_power_cdf(
        stats.mu0,
        stats.sigma0(),
        stats.mu1,
        stats.sigma1(),
        key_space_size,
    )?)
}
