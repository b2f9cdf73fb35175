//! mmWave channel synthesis: geometry, 3GPP UMi pathloss, ULA steering
//! vectors, and multipath realizations for the users and the eavesdropper.

use crate::numerics::{
    dbm_to_watts, draw_complex_normal, draw_laplace, DbValue, NumericsError, RngStream,
};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::{FRAC_PI_3, PI};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChannelError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("pathloss arguments must be positive, got d = {d} m, f_c = {f_c} GHz")]
    PathlossDomain { d: f64, f_c: f64 },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Scenario constants for the downlink.
///
/// `Default` carries the reference simulation settings: a 16-antenna base
/// station serving 6 single-antenna users at 28 GHz with a 6-antenna
/// eavesdropper, 10 multipaths with 10° Laplacian angular spread, 100 MHz
/// bandwidth, a 2048-symbol tag, and a 0.001 false-alarm target.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    /// BS antenna count N.
    pub bs_antennas: usize,
    /// Eavesdropper antenna count M.
    pub eve_antennas: usize,
    /// Number of served users K.
    pub users: usize,
    /// Number of artificial-noise streams Z (at most N - K).
    pub an_streams: usize,
    /// Multipath count L_p.
    pub paths: usize,
    /// Angular spread Δ in degrees (standard deviation of the path angle
    /// around the line of sight).
    pub angular_spread_deg: f64,
    /// Carrier frequency in GHz.
    pub carrier_ghz: f64,
    /// Bandwidth in Hz.
    pub bandwidth_hz: f64,
    /// Receiver noise figure in dB.
    pub noise_figure_db: f64,
    /// Thermal noise density in dBm/Hz.
    pub thermal_noise_dbm_hz: f64,
    /// Antenna element spacing in wavelengths (d_s / λ).
    pub antenna_spacing: f64,
    /// Tag sequence length L_t.
    pub tag_length: usize,
    /// False-alarm probability target p_fa.
    pub false_alarm_prob: f64,
    /// Authentication key space size |K|.
    pub key_space_size: u64,
    /// Horizontal user distance range in meters (uniform).
    pub user_horizontal_range_m: (f64, f64),
    /// Vertical BS-to-user distance in meters.
    pub vertical_distance_m: f64,
    /// Eavesdropper distance range in meters (uniform).
    pub eve_range_m: (f64, f64),
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            bs_antennas: 16,
            eve_antennas: 6,
            users: 6,
            an_streams: 10,
            paths: 10,
            angular_spread_deg: 10.0,
            carrier_ghz: 28.0,
            bandwidth_hz: 1e8,
            noise_figure_db: 9.0,
            thermal_noise_dbm_hz: -174.0,
            antenna_spacing: 0.5,
            tag_length: 2048,
            false_alarm_prob: 0.001,
            key_space_size: 65_536,
            user_horizontal_range_m: (10.0, 100.0),
            vertical_distance_m: 100.0,
            eve_range_m: (50.0, 100.0),
        }
    }
}

impl SystemConfig {
    pub fn validate(&self) -> Result<(), ChannelError> {
        let fail = |msg: String| Err(ChannelError::Config(msg));
        if self.users < 1 {
            return fail("k must be at least 1".into());
        }
        if self.bs_antennas <= self.users {
            return fail(format!(
                "n must exceed k (got n = {}, k = {})",
                self.bs_antennas, self.users
            ));
        }
        if self.an_streams > self.bs_antennas - self.users {
            return fail(format!(
                "z must be at most n - k = {} (got z = {})",
                self.bs_antennas - self.users,
                self.an_streams
            ));
        }
        if self.eve_antennas < 1 {
            return fail("m must be at least 1".into());
        }
        if self.paths < 1 {
            return fail("l_p must be at least 1".into());
        }
        if self.tag_length < 1 {
            return fail("l_t must be at least 1".into());
        }
        if !(self.false_alarm_prob > 0.0 && self.false_alarm_prob < 1.0) {
            return fail(format!(
                "p_fa must lie strictly inside (0, 1), got {}",
                self.false_alarm_prob
            ));
        }
        if self.key_space_size < 2 {
            return fail("key_space_size must be at least 2".into());
        }
        if !(self.angular_spread_deg > 0.0) {
            return fail("delta_deg must be positive".into());
        }
        if !(self.carrier_ghz > 0.0) || !(self.bandwidth_hz > 0.0) {
            return fail("f_c_ghz and b_hz must be positive".into());
        }
        if !(self.antenna_spacing > 0.0) {
            return fail("d_s_over_lambda must be positive".into());
        }
        for (name, (lo, hi)) in [
            ("d_h", self.user_horizontal_range_m),
            ("d_e", self.eve_range_m),
        ] {
            if !(lo > 0.0 && hi >= lo) {
                return fail(format!("{name} range must satisfy 0 < min <= max"));
            }
        }
        if !(self.vertical_distance_m > 0.0) {
            return fail("d_v_m must be positive".into());
        }
        Ok(())
    }

    pub fn angular_spread_rad(&self) -> f64 {
        self.angular_spread_deg.to_radians()
    }
}

/// Positions and line-of-sight angles for one scenario draw.
#[derive(Debug, Clone, PartialEq)]
pub struct Geometry {
    /// Horizontal BS-to-user distances d_H,k in meters.
    pub user_horizontal_m: Vec<f64>,
    /// Vertical distance d_V in meters (shared by all users).
    pub vertical_m: f64,
    /// Line-of-sight departure angles θ_LoS,k in radians.
    pub user_los_angle: Vec<f64>,
    /// BS-to-eavesdropper distance d_e in meters.
    pub eve_distance_m: f64,
    /// Eavesdropper line-of-sight departure angle in radians.
    pub eve_los_departure: f64,
    /// Eavesdropper line-of-sight arrival angle in radians.
    pub eve_los_arrival: f64,
}

impl Geometry {
    /// 3D distance d_k = sqrt(d_H,k² + d_V²).
    pub fn user_distance_m(&self, k: usize) -> f64 {
        self.user_horizontal_m[k].hypot(self.vertical_m)
    }
}

/// One draw of all user channel vectors and the eavesdropper channel matrix,
/// kept together with the geometry and per-path parameters that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    /// h_k, one N-vector per user.
    pub user_channels: Vec<DVector<Complex64>>,
    /// H_e, N x M.
    pub eve_channel: DMatrix<Complex64>,
    pub geometry: Geometry,
    /// Small-scale path gains per user, L_p each.
    pub user_path_gains: Vec<Vec<Complex64>>,
    /// Path departure angles per user, radians.
    pub user_path_angles: Vec<Vec<f64>>,
    pub eve_path_gains: Vec<Complex64>,
    pub eve_departure_angles: Vec<f64>,
    pub eve_arrival_angles: Vec<f64>,
}

impl ChannelRealization {
    /// Aggregate channel matrix H = [h_1 ... h_K], N x K.
    pub fn aggregate(&self) -> DMatrix<Complex64> {
        let n = self.user_channels[0].len();
        let k = self.user_channels.len();
        DMatrix::from_fn(n, k, |i, j| self.user_channels[j][i])
    }
}

/// 3GPP urban-micro pathloss: 32.4 + 21 log10(d) + 20 log10(f_c), with d in
/// meters and f_c in GHz.
pub fn pathloss_db(d_m: f64, f_c_ghz: f64) -> Result<f64, ChannelError> {
    if !(d_m > 0.0) || !(f_c_ghz > 0.0) {
        return Err(ChannelError::PathlossDomain {
            d: d_m,
            f_c: f_c_ghz,
        });
    }
    Ok(32.4 + 21.0 * d_m.log10() + 20.0 * f_c_ghz.log10())
}

/// Pathloss as an amplitude divisor, 10^(PL_dB / 20).
pub fn pathloss_amplitude(d_m: f64, f_c_ghz: f64) -> Result<f64, ChannelError> {
    Ok(10f64.powf(pathloss_db(d_m, f_c_ghz)? / 20.0))
}

/// Unit-norm ULA steering vector
/// a_n(θ) = (1/√n) [1, e^{-j2π(d_s/λ)sinθ}, ..., e^{-j2π(d_s/λ)(n-1)sinθ}].
pub fn steering_vector(theta: f64, n: usize, spacing: f64) -> DVector<Complex64> {
    let phase = -2.0 * PI * spacing * theta.sin();
    let scale = 1.0 / (n as f64).sqrt();
    DVector::from_fn(n, |i, _| {
        Complex64::from_polar(scale, phase * i as f64)
    })
}

/// Draw the scenario geometry: horizontal user distances and the
/// eavesdropper distance uniform over their configured ranges, user
/// line-of-sight departure angles atan(d_H/d_V) with a random sign, and
/// eavesdropper line-of-sight angles uniform on (-π/3, π/3).
pub fn sample_geometry(cfg: &SystemConfig, stream: &RngStream) -> Geometry {
    let mut rng = stream.rng();
    let uniform = |rng: &mut ChaCha8Rng, lo: f64, hi: f64| lo + (hi - lo) * rng.random::<f64>();
    let (dh_lo, dh_hi) = cfg.user_horizontal_range_m;
    let mut user_horizontal_m = Vec::with_capacity(cfg.users);
    let mut user_los_angle = Vec::with_capacity(cfg.users);
    for _ in 0..cfg.users {
        let dh = uniform(&mut rng, dh_lo, dh_hi);
        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
        user_horizontal_m.push(dh);
        user_los_angle.push(sign * (dh / cfg.vertical_distance_m).atan());
    }
    let (de_lo, de_hi) = cfg.eve_range_m;
    let eve_distance_m = uniform(&mut rng, de_lo, de_hi);
    let eve_los_departure = uniform(&mut rng, -FRAC_PI_3, FRAC_PI_3);
    let eve_los_arrival = uniform(&mut rng, -FRAC_PI_3, FRAC_PI_3);
    Geometry {
        user_horizontal_m,
        vertical_m: cfg.vertical_distance_m,
        user_los_angle,
        eve_distance_m,
        eve_los_departure,
        eve_los_arrival,
    }
}

/// Deterministic combination step of the user channel model:
/// h = √(N/L_p) Σ_ℓ (α_ℓ / pl_amplitude) a_N(θ_ℓ).
pub fn user_channel_from_paths(
    gains: &[Complex64],
    angles: &[f64],
    pl_amplitude: f64,
    n: usize,
    spacing: f64,
) -> DVector<Complex64> {
    let l_p = gains.len();
    let scale = (n as f64 / l_p as f64).sqrt() / pl_amplitude;
    let mut h = DVector::zeros(n);
    for (gain, &angle) in gains.iter().zip(angles) {
        h.axpy(gain * scale, &steering_vector(angle, n, spacing), Complex64::ONE);
    }
    h
}

/// Deterministic combination step of the eavesdropper channel model:
/// H_e = √(NM/L_p) Σ_ℓ (α_ℓ / pl_amplitude) a_N(θ_ℓ) a_M^H(ζ_ℓ).
pub fn eve_channel_from_paths(
    gains: &[Complex64],
    departures: &[f64],
    arrivals: &[f64],
    pl_amplitude: f64,
    n: usize,
    m: usize,
    spacing: f64,
) -> DMatrix<Complex64> {
    let l_p = gains.len();
    let scale = ((n * m) as f64 / l_p as f64).sqrt() / pl_amplitude;
    let mut h = DMatrix::zeros(n, m);
    for ((gain, &dep), &arr) in gains.iter().zip(departures).zip(arrivals) {
        let a_n = steering_vector(dep, n, spacing);
        let a_m = steering_vector(arr, m, spacing);
        // rank-1 update: (α scale) a_N a_M^H
        h.gerc(gain * scale, &a_n, &a_m, Complex64::ONE);
    }
    h
}

/// Draw one user channel vector: CN(0,1) path gains, Laplacian path angles
/// around the user's line of sight, pathloss applied as an amplitude divisor.
pub fn sample_user_channel(
    geom: &Geometry,
    k: usize,
    cfg: &SystemConfig,
    stream: &RngStream,
) -> Result<DVector<Complex64>, ChannelError> {
    let (h, _, _) = sample_user_channel_with_paths(geom, k, cfg, stream)?;
    Ok(h)
}

#[allow(clippy::type_complexity)]
pub(crate) fn sample_user_channel_with_paths(
    geom: &Geometry,
    k: usize,
    cfg: &SystemConfig,
    stream: &RngStream,
) -> Result<(DVector<Complex64>, Vec<Complex64>, Vec<f64>), ChannelError> {
    let mut rng = stream.rng();
    let spread = cfg.angular_spread_rad();
    let mut gains = Vec::with_capacity(cfg.paths);
    let mut angles = Vec::with_capacity(cfg.paths);
    for _ in 0..cfg.paths {
        gains.push(draw_complex_normal(&mut rng, 1)[0]);
        angles.push(draw_laplace(&mut rng, geom.user_los_angle[k], spread));
    }
    let amp = pathloss_amplitude(geom.user_distance_m(k), cfg.carrier_ghz)?;
    let h = user_channel_from_paths(&gains, &angles, amp, cfg.bs_antennas, cfg.antenna_spacing);
    Ok((h, gains, angles))
}

/// Draw the eavesdropper channel matrix, departure and arrival angles both
/// Laplacian around their line-of-sight values.
pub fn sample_eve_channel(
    geom: &Geometry,
    cfg: &SystemConfig,
    stream: &RngStream,
) -> Result<DMatrix<Complex64>, ChannelError> {
    let (h, _, _, _) = sample_eve_channel_with_paths(geom, cfg, stream)?;
    Ok(h)
}

#[allow(clippy::type_complexity)]
pub(crate) fn sample_eve_channel_with_paths(
    geom: &Geometry,
    cfg: &SystemConfig,
    stream: &RngStream,
) -> Result<(DMatrix<Complex64>, Vec<Complex64>, Vec<f64>, Vec<f64>), ChannelError> {
    let mut rng = stream.rng();
    let spread = cfg.angular_spread_rad();
    let mut gains = Vec::with_capacity(cfg.paths);
    let mut departures = Vec::with_capacity(cfg.paths);
    let mut arrivals = Vec::with_capacity(cfg.paths);
    for _ in 0..cfg.paths {
        gains.push(draw_complex_normal(&mut rng, 1)[0]);
        departures.push(draw_laplace(&mut rng, geom.eve_los_departure, spread));
        arrivals.push(draw_laplace(&mut rng, geom.eve_los_arrival, spread));
    }
    let amp = pathloss_amplitude(geom.eve_distance_m, cfg.carrier_ghz)?;
    let h = eve_channel_from_paths(
        &gains,
        &departures,
        &arrivals,
        amp,
        cfg.bs_antennas,
        cfg.eve_antennas,
        cfg.antenna_spacing,
    );
    Ok((h, gains, departures, arrivals))
}

/// Draw a complete channel realization. Geometry, each user channel, and the
/// eavesdropper channel consume separate substreams of `stream`, so the
/// realization is a pure function of `(cfg, stream)`.
pub fn sample_realization(
    cfg: &SystemConfig,
    stream: &RngStream,
) -> Result<ChannelRealization, ChannelError> {
    let geometry = sample_geometry(cfg, &stream.with_substream(0));
    let mut user_channels = Vec::with_capacity(cfg.users);
    let mut user_path_gains = Vec::with_capacity(cfg.users);
    let mut user_path_angles = Vec::with_capacity(cfg.users);
    for k in 0..cfg.users {
        let (h, gains, angles) =
            sample_user_channel_with_paths(&geometry, k, cfg, &stream.with_substream(1 + k as u16))?;
        user_channels.push(h);
        user_path_gains.push(gains);
        user_path_angles.push(angles);
    }
    let (eve_channel, eve_path_gains, eve_departure_angles, eve_arrival_angles) =
        sample_eve_channel_with_paths(&geometry, cfg, &stream.with_substream(1 + cfg.users as u16))?;
    Ok(ChannelRealization {
        user_channels,
        eve_channel,
        geometry,
        user_path_gains,
        user_path_angles,
        eve_path_gains,
        eve_departure_angles,
        eve_arrival_angles,
    })
}

/// Receiver noise power σ_n² in watts:
/// thermal density + 10 log10(B) + noise figure, converted from dBm.
pub fn noise_variance(cfg: &SystemConfig) -> Result<f64, ChannelError> {
    let dbm = cfg.thermal_noise_dbm_hz + 10.0 * cfg.bandwidth_hz.log10() + cfg.noise_figure_db;
    Ok(dbm_to_watts(DbValue::Dbm(dbm))?.value())
}
