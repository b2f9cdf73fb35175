//! Link-level Monte Carlo engine.
//!
//! Every trial is an independent work unit keyed by (realization, trial)
//! through a structured stream id, so batches can run on any number of
//! worker threads and still reproduce bit-identical records. Within one
//! trial the data, tags, AN, and noise are redrawn; the channel realization
//! stays fixed for its whole batch, matching the conditional statistics the
//! closed forms are derived under.

use crate::authentication::{
    correlation_statistic, detection_probability, detection_threshold, eve_hypothesis_stats,
    eve_tag_estimate, key_detection_probability, ml_decode_key, user_hypothesis_stats,
    user_tag_estimate, AuthDecision, AuthError, TagContext, TagKey, TagSequence,
};
use crate::channel::{
    noise_variance, sample_realization, ChannelError, ChannelRealization, SystemConfig,
};
use crate::numerics::{draw_complex_normal, RngStream};
use crate::powerctl::PowerSplit;
use crate::precoding::{build_precoder_set, sum_rate, PrecoderSet};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

const DOMAIN_CHANNEL: u64 = 1;
const DOMAIN_TRIAL: u64 = 2;
const DOMAIN_KEYS: u64 = 3;

pub const MAX_REALIZATIONS: u32 = u16::MAX as u32;
pub const MAX_TRIALS: u32 = (1 << 24) - 1;
pub const MAX_MC_KEY_SPACE: u64 = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum McError {
    #[error("invalid trial plan: {0}")]
    Plan(String),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error("sequence length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
}

/// Stream feeding a channel realization draw.
pub fn realization_stream(seed: u64, realization: u32) -> RngStream {
    RngStream::new(seed, (DOMAIN_CHANNEL << 56) | realization as u64)
}

/// Stream feeding all in-trial randomness of one (realization, trial) pair.
pub fn trial_stream(seed: u64, realization: u32, trial: u32) -> RngStream {
    debug_assert!(realization <= MAX_REALIZATIONS && trial <= MAX_TRIALS);
    RngStream::new(
        seed,
        (DOMAIN_TRIAL << 56) | ((realization as u64) << 24) | trial as u64,
    )
}

/// Stream assigning the users' secret keys for one realization.
pub fn key_stream(seed: u64, realization: u32) -> RngStream {
    RngStream::new(seed, (DOMAIN_KEYS << 56) | realization as u64)
}

/// Per-strategy power fractions to evaluate; the transmit power itself
/// comes from the plan's dBm grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitSpec {
    /// Strategy label carried into the output records.
    pub strategy: String,
    pub phi: f64,
    pub tag_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialOptions {
    /// Skip the waveform-level trials and report closed forms only.
    pub analytic_only: bool,
    /// Run the eavesdropper's ML key search in every trial.
    pub with_ml_attack: bool,
    /// Key space size used by the Monte Carlo attack and key assignment.
    /// The analytic key-detection probability keeps the configured size.
    pub mc_key_space: u64,
    /// RZF regularization; default is K σ_n² / P_Tx.
    pub beta_override: Option<f64>,
}

impl Default for TrialOptions {
    fn default() -> Self {
        Self {
            analytic_only: false,
            with_ml_attack: false,
            mc_key_space: 256,
            beta_override: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialPlan {
    pub cfg: SystemConfig,
    pub splits: Vec<SplitSpec>,
    pub p_tx_dbm: Vec<f64>,
    pub n_realizations: u32,
    pub n_trials: u32,
    pub base_seed: u64,
    pub options: TrialOptions,
}

impl TrialPlan {
    pub fn validate(&self) -> Result<(), McError> {
        self.cfg.validate()?;
        if self.splits.is_empty() {
            return Err(McError::Plan("no power splits given".into()));
        }
        if self.p_tx_dbm.is_empty() {
            return Err(McError::Plan("empty transmit power grid".into()));
        }
        if self.n_realizations < 1 || self.n_realizations > MAX_REALIZATIONS {
            return Err(McError::Plan(format!(
                "n_realizations must lie in 1..={MAX_REALIZATIONS}"
            )));
        }
        if self.n_trials < 1 || self.n_trials > MAX_TRIALS {
            return Err(McError::Plan(format!("n_trials must lie in 1..={MAX_TRIALS}")));
        }
        if self.options.mc_key_space < 2 || self.options.mc_key_space > MAX_MC_KEY_SPACE {
            return Err(McError::Plan(format!(
                "mc_key_space must lie in 2..={MAX_MC_KEY_SPACE}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalyticMetrics {
    /// Detection probability averaged over users.
    pub detection_prob: f64,
    /// Key-detection probability averaged over users, at the configured
    /// key space size.
    pub key_detection_prob: f64,
    pub sum_rate: f64,
    pub per_user_detection: Vec<f64>,
    pub per_user_key_detection: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalMetrics {
    pub detection_prob: f64,
    pub detection_ci: f64,
    pub false_alarm: f64,
    pub false_alarm_ci: f64,
    pub ml_success: Option<f64>,
    pub ml_success_ci: Option<f64>,
    /// Authentication decisions counted (trials × users).
    pub auth_samples: u64,
    /// Wrong-key tests counted (one per trial).
    pub fa_samples: u64,
    /// ML attacks counted (one per trial when enabled).
    pub ml_samples: u64,
}

/// One output row: a (strategy split, transmit power, realization) cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRecord {
    pub strategy: String,
    pub phi: f64,
    pub tag_fraction: f64,
    pub p_tx_dbm: f64,
    pub realization: u32,
    pub psi: f64,
    pub omega: Option<f64>,
    pub analytic: Option<AnalyticMetrics>,
    pub empirical: Option<EmpiricalMetrics>,
    /// Set when this cell could not be evaluated; names the violated
    /// constraint instead of silently skipping the point.
    pub infeasible: Option<String>,
}

/// All transmitted sequences of one trial.
#[derive(Debug, Clone)]
pub struct TrialSignals {
    pub data: Vec<DVector<Complex64>>,
    pub tags: Vec<TagSequence>,
    pub an: Vec<DVector<Complex64>>,
}

impl TrialSignals {
    /// Draw data and AN sequences and derive each user's tag from their key.
    /// The draw order (all data, then all AN) is part of the reproducibility
    /// contract.
    pub fn draw(stream: &RngStream, cfg: &SystemConfig, keys: &[TagKey]) -> Self {
        Self::draw_with(&mut stream.rng(), cfg, keys)
    }

    /// Sequential-draw form of [`TrialSignals::draw`].
    pub fn draw_with(rng: &mut rand_chacha::ChaCha8Rng, cfg: &SystemConfig, keys: &[TagKey]) -> Self {
        let data: Vec<_> = (0..cfg.users)
            .map(|_| draw_complex_normal(rng, cfg.tag_length))
            .collect();
        let an: Vec<_> = (0..cfg.an_streams)
            .map(|_| draw_complex_normal(rng, cfg.tag_length))
            .collect();
        let tags: Vec<_> = data
            .iter()
            .zip(keys)
            .map(|(d, key)| TagContext::new(d).tag(key))
            .collect();
        Self { data, tags, an }
    }
}

/// Users' secret keys for one realization, drawn from the Monte Carlo key
/// space so the reduced ML search can actually contain them.
pub fn assign_keys(seed: u64, realization: u32, users: usize, key_space: u64) -> Vec<TagKey> {
    let mut rng = key_stream(seed, realization).rng();
    (0..users)
        .map(|_| TagKey::from_index(rng.random_range(0..key_space)))
        .collect()
}

/// Received block at user u:
/// y_u = Σ_k √P_Tx (h_u^H w_k)*(√P_s s_k + √P_t t_k)
///     + Σ_i √P_Tx (h_u^H v_i)* z_i + n_u,
/// stored in the column-sequence convention (gains conjugated).
pub fn synthesize_received_user(
    realization: &ChannelRealization,
    precoders: &PrecoderSet,
    split: &PowerSplit,
    signals: &TrialSignals,
    noise: &DVector<Complex64>,
    u: usize,
) -> Result<DVector<Complex64>, McError> {
    let l_t = noise.len();
    for seq in signals
        .data
        .iter()
        .chain(signals.an.iter())
        .chain(signals.tags.iter().map(|t| &t.symbols))
    {
        if seq.len() != l_t {
            return Err(McError::LengthMismatch {
                left: seq.len(),
                right: l_t,
            });
        }
    }
    let sqrt_ptx = split.p_tx_watts.sqrt();
    let sqrt_data = Complex64::from(sqrt_ptx * split.data_fraction().sqrt());
    let sqrt_tag = Complex64::from(sqrt_ptx * split.tag_fraction.sqrt());
    let h_u = &realization.user_channels[u];
    let mut received = noise.clone();
    for (k, w_k) in precoders.data.iter().enumerate() {
        let gain = h_u.dotc(w_k).conj();
        received.axpy(sqrt_data * gain, &signals.data[k], Complex64::ONE);
        received.axpy(sqrt_tag * gain, &signals.tags[k].symbols, Complex64::ONE);
    }
    for (i, v_i) in precoders.an.iter().enumerate() {
        let gain = h_u.dotc(v_i).conj();
        received.axpy(Complex64::from(sqrt_ptx) * gain, &signals.an[i], Complex64::ONE);
    }
    Ok(received)
}

/// Received blocks for all users of one trial, sharing the superposed
/// data-plus-tag sequences √P_s s_k + √P_t t_k across users. Uses the same
/// model as [`synthesize_received_user`].
pub fn synthesize_received_all_users(
    realization: &ChannelRealization,
    precoders: &PrecoderSet,
    split: &PowerSplit,
    signals: &TrialSignals,
    noise: &[DVector<Complex64>],
) -> Vec<DVector<Complex64>> {
    let sqrt_ptx = Complex64::from(split.p_tx_watts.sqrt());
    let sqrt_data = Complex64::from(split.data_fraction().sqrt());
    let sqrt_tag = Complex64::from(split.tag_fraction.sqrt());
    let merged: Vec<DVector<Complex64>> = signals
        .data
        .iter()
        .zip(&signals.tags)
        .map(|(s, t)| {
            let mut m = s * sqrt_data;
            m.axpy(sqrt_tag, &t.symbols, Complex64::ONE);
            m
        })
        .collect();
    (0..realization.user_channels.len())
        .map(|u| {
            let h_u = &realization.user_channels[u];
            let mut received = noise[u].clone();
            for (k, w_k) in precoders.data.iter().enumerate() {
                let gain = h_u.dotc(w_k).conj();
                received.axpy(sqrt_ptx * gain, &merged[k], Complex64::ONE);
            }
            for (i, v_i) in precoders.an.iter().enumerate() {
                let gain = h_u.dotc(v_i).conj();
                received.axpy(sqrt_ptx * gain, &signals.an[i], Complex64::ONE);
            }
            received
        })
        .collect()
}

/// Received block at the eavesdropper, M x L_t, same conventions with the
/// combined gains H_e^H w_k and H_e^H v_i.
pub fn synthesize_received_eve(
    realization: &ChannelRealization,
    precoders: &PrecoderSet,
    split: &PowerSplit,
    signals: &TrialSignals,
    noise: &DMatrix<Complex64>,
) -> Result<DMatrix<Complex64>, McError> {
    let l_t = noise.ncols();
    for seq in signals
        .data
        .iter()
        .chain(signals.an.iter())
        .chain(signals.tags.iter().map(|t| &t.symbols))
    {
        if seq.len() != l_t {
            return Err(McError::LengthMismatch {
                left: seq.len(),
                right: l_t,
            });
        }
    }
    let sqrt_ptx = split.p_tx_watts.sqrt();
    let sqrt_data = Complex64::from(sqrt_ptx * split.data_fraction().sqrt());
    let sqrt_tag = Complex64::from(sqrt_ptx * split.tag_fraction.sqrt());
    let mut received = noise.clone();
    for (k, w_k) in precoders.data.iter().enumerate() {
        let beam = realization.eve_channel.ad_mul(w_k).conjugate();
        received.ger(sqrt_data, &beam, &signals.data[k], Complex64::ONE);
        received.ger(sqrt_tag, &beam, &signals.tags[k].symbols, Complex64::ONE);
    }
    for (i, v_i) in precoders.an.iter().enumerate() {
        let beam = realization.eve_channel.ad_mul(v_i).conjugate();
        received.ger(Complex64::from(sqrt_ptx), &beam, &signals.an[i], Complex64::ONE);
    }
    Ok(received)
}

/// Transmitted array block, N x L_t, for power accounting: each column is
/// the antenna vector sent in one symbol slot.
pub fn transmit_block(
    precoders: &PrecoderSet,
    split: &PowerSplit,
    signals: &TrialSignals,
) -> DMatrix<Complex64> {
    let n = precoders.data[0].len();
    let l_t = signals.data[0].len();
    let sqrt_ptx = split.p_tx_watts.sqrt();
    let sqrt_data = Complex64::from(sqrt_ptx * split.data_fraction().sqrt());
    let sqrt_tag = Complex64::from(sqrt_ptx * split.tag_fraction.sqrt());
    let mut block = DMatrix::zeros(n, l_t);
    for (k, w_k) in precoders.data.iter().enumerate() {
        block.gerc(sqrt_data, w_k, &signals.data[k], Complex64::ONE);
        block.gerc(sqrt_tag, w_k, &signals.tags[k].symbols, Complex64::ONE);
    }
    for (i, v_i) in precoders.an.iter().enumerate() {
        block.gerc(Complex64::from(sqrt_ptx), v_i, &signals.an[i], Complex64::ONE);
    }
    block
}

struct TrialOutcome {
    auth_hits: u32,
    fa_hit: bool,
    ml_hit: Option<bool>,
}

struct CellContext<'a> {
    cfg: &'a SystemConfig,
    realization: &'a ChannelRealization,
    precoders: &'a PrecoderSet,
    split: &'a PowerSplit,
    keys: &'a [TagKey],
    thresholds: &'a [f64],
    sigma_n: f64,
    options: &'a TrialOptions,
}

fn run_one_trial(ctx: &CellContext<'_>, stream: &RngStream, trial: u32) -> TrialOutcome {
    let cfg = ctx.cfg;
    // one generator per trial; draw order is fixed: signals, user noise,
    // wrong-key pick, eve noise
    let mut rng = stream.rng();
    let signals = TrialSignals::draw_with(&mut rng, cfg, ctx.keys);
    let noise: Vec<DVector<Complex64>> = (0..cfg.users)
        .map(|_| draw_complex_normal(&mut rng, cfg.tag_length) * Complex64::from(ctx.sigma_n))
        .collect();

    let received = synthesize_received_all_users(
        ctx.realization,
        ctx.precoders,
        ctx.split,
        &signals,
        &noise,
    );
    let mut estimates = Vec::with_capacity(cfg.users);
    let mut auth_hits = 0u32;
    for (u, received_u) in received.iter().enumerate() {
        let estimate = user_tag_estimate(
            received_u,
            &signals.data[u],
            ctx.realization,
            ctx.precoders,
            ctx.split,
            u,
        )
        .expect("cell feasibility checked before trials");
        let tau = correlation_statistic(&estimate, &signals.tags[u]).expect("equal lengths");
        if AuthDecision::decide(tau, ctx.thresholds[u]).authentic {
            auth_hits += 1;
        }
        estimates.push(estimate);
    }

    // false-alarm probe: one rotating user per trial, expected tag built
    // from a uniformly drawn wrong key
    let fa_user = (trial as usize) % cfg.users;
    let wrong_raw = rng.random_range(0..ctx.options.mc_key_space - 1);
    let wrong_index = if wrong_raw >= ctx.keys[fa_user].index() {
        wrong_raw + 1
    } else {
        wrong_raw
    };
    let fa_hit = {
        let wrong_tag =
            TagContext::new(&signals.data[fa_user]).tag(&TagKey::from_index(wrong_index));
        let tau = correlation_statistic(&estimates[fa_user], &wrong_tag).expect("equal lengths");
        AuthDecision::decide(tau, ctx.thresholds[fa_user]).authentic
    };

    let ml_hit = if ctx.options.with_ml_attack {
        let target = (trial as usize) % cfg.users;
        let flat = draw_complex_normal(&mut rng, cfg.eve_antennas * cfg.tag_length)
            * Complex64::from(ctx.sigma_n);
        let eve_noise = DMatrix::from_fn(cfg.eve_antennas, cfg.tag_length, |r, c| {
            flat[r * cfg.tag_length + c]
        });
        let received = synthesize_received_eve(
            ctx.realization,
            ctx.precoders,
            ctx.split,
            &signals,
            &eve_noise,
        )
        .expect("lengths agree by construction");
        let estimate = eve_tag_estimate(
            &received,
            &signals.data,
            &signals.tags,
            ctx.realization,
            ctx.precoders,
            ctx.split,
            target,
        )
        .expect("cell feasibility checked before trials");
        let decoded = ml_decode_key(&estimate, &signals.data[target], ctx.options.mc_key_space);
        Some(decoded == ctx.keys[target].index())
    } else {
        None
    };

    TrialOutcome {
        auth_hits,
        fa_hit,
        ml_hit,
    }
}

fn binomial_ci(p_hat: f64, n: u64) -> f64 {
    1.96 * (p_hat * (1.0 - p_hat) / n as f64).sqrt()
}

/// Run the full plan: one record per (split, P_Tx, realization), in a
/// canonical order independent of worker scheduling.
pub fn run_trials(plan: &TrialPlan) -> Result<Vec<MetricsRecord>, McError> {
    plan.validate()?;
    let cfg = &plan.cfg;
    let sigma_n2 = noise_variance(cfg)?;
    let sigma_n = sigma_n2.sqrt();
    let mut records = Vec::new();
    for r in 0..plan.n_realizations {
        let realization = sample_realization(cfg, &realization_stream(plan.base_seed, r))?;
        let keys = assign_keys(plan.base_seed, r, cfg.users, plan.options.mc_key_space);
        for spec in &plan.splits {
            for &p_tx_dbm in &plan.p_tx_dbm {
                records.push(evaluate_cell(
                    plan,
                    &realization,
                    &keys,
                    spec,
                    p_tx_dbm,
                    r,
                    sigma_n2,
                    sigma_n,
                ));
            }
        }
    }
    Ok(records)
}

#[allow(clippy::too_many_arguments)]
fn evaluate_cell(
    plan: &TrialPlan,
    realization: &ChannelRealization,
    keys: &[TagKey],
    spec: &SplitSpec,
    p_tx_dbm: f64,
    r: u32,
    sigma_n2: f64,
    sigma_n: f64,
) -> MetricsRecord {
    let cfg = &plan.cfg;
    let base = MetricsRecord {
        strategy: spec.strategy.clone(),
        phi: spec.phi,
        tag_fraction: spec.tag_fraction,
        p_tx_dbm,
        realization: r,
        psi: spec.tag_fraction * spec.phi,
        omega: if spec.tag_fraction > 0.0 && spec.phi > 0.0 {
            Some((1.0 - spec.phi) / (spec.tag_fraction * spec.phi))
        } else {
            None
        },
        analytic: None,
        empirical: None,
        infeasible: None,
    };

    let p_tx_watts = 10f64.powf((p_tx_dbm - 30.0) / 10.0);
    let split = match PowerSplit::new(p_tx_watts, spec.phi, spec.tag_fraction) {
        Ok(s) => s,
        Err(e) => {
            return MetricsRecord {
                infeasible: Some(e.to_string()),
                ..base
            }
        }
    };
    let beta = plan
        .options
        .beta_override
        .unwrap_or(cfg.users as f64 * sigma_n2 / p_tx_watts);
    let precoders =
        match build_precoder_set(&realization.aggregate(), beta, split.phi, cfg.an_streams) {
            Ok(p) => p,
            Err(e) => {
                return MetricsRecord {
                    infeasible: Some(e.to_string()),
                    ..base
                }
            }
        };

    let rho = split.snr(sigma_n2);
    let mut per_user_detection = Vec::with_capacity(cfg.users);
    let mut per_user_key_detection = Vec::with_capacity(cfg.users);
    let mut thresholds = Vec::with_capacity(cfg.users);
    for u in 0..cfg.users {
        let analytic = (|| -> Result<(f64, f64, f64), AuthError> {
            let user_stats =
                user_hypothesis_stats(realization, &precoders, &split, u, sigma_n2, cfg.tag_length)?;
            let tau0 = detection_threshold(cfg.false_alarm_prob, user_stats.sigma0())?;
            let p_d = detection_probability(&user_stats, tau0);
            let eve_stats =
                eve_hypothesis_stats(realization, &precoders, &split, u, sigma_n2, cfg.tag_length)?;
            let p_k = key_detection_probability(&eve_stats, cfg.key_space_size)?;
            Ok((p_d, p_k, tau0))
        })();
        match analytic {
            Ok((p_d, p_k, tau0)) => {
                per_user_detection.push(p_d);
                per_user_key_detection.push(p_k);
                thresholds.push(tau0);
            }
            Err(e) => {
                return MetricsRecord {
                    infeasible: Some(e.to_string()),
                    ..base
                }
            }
        }
    }
    let users = cfg.users as f64;
    let analytic = AnalyticMetrics {
        detection_prob: per_user_detection.iter().sum::<f64>() / users,
        key_detection_prob: per_user_key_detection.iter().sum::<f64>() / users,
        sum_rate: sum_rate(
            &precoders,
            &realization.user_channels,
            split.data_fraction(),
            rho,
        ),
        per_user_detection,
        per_user_key_detection,
    };

    let empirical = if plan.options.analytic_only {
        None
    } else {
        let ctx = CellContext {
            cfg,
            realization,
            precoders: &precoders,
            split: &split,
            keys,
            thresholds: &thresholds,
            sigma_n,
            options: &plan.options,
        };
        let outcomes: Vec<TrialOutcome> = (0..plan.n_trials)
            .into_par_iter()
            .map(|t| run_one_trial(&ctx, &trial_stream(plan.base_seed, r, t), t))
            .collect();
        let auth_samples = plan.n_trials as u64 * cfg.users as u64;
        let fa_samples = plan.n_trials as u64;
        let auth_hits: u64 = outcomes.iter().map(|o| o.auth_hits as u64).sum();
        let fa_hits: u64 = outcomes.iter().filter(|o| o.fa_hit).count() as u64;
        let detection_prob = auth_hits as f64 / auth_samples as f64;
        let false_alarm = fa_hits as f64 / fa_samples as f64;
        let (ml_success, ml_success_ci, ml_samples) = if plan.options.with_ml_attack {
            let hits = outcomes
                .iter()
                .filter(|o| o.ml_hit == Some(true))
                .count() as u64;
            let p = hits as f64 / fa_samples as f64;
            (Some(p), Some(binomial_ci(p, fa_samples)), fa_samples)
        } else {
            (None, None, 0)
        };
        Some(EmpiricalMetrics {
            detection_prob,
            detection_ci: binomial_ci(detection_prob, auth_samples),
            false_alarm,
            false_alarm_ci: binomial_ci(false_alarm, fa_samples),
            ml_success,
            ml_success_ci,
            auth_samples,
            fa_samples,
            ml_samples,
        })
    };

    MetricsRecord {
        analytic: Some(analytic),
        empirical,
        ..base
    }
}
