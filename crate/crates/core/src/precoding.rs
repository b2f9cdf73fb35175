//! Data and artificial-noise precoders.
//!
//! The data side is regularized zero-forcing with uniform per-user power;
//! the AN side transmits in the orthogonal complement of the user channels
//! so that, by construction, the noise never reaches the legitimate users.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PrecodingError {
    #[error("channel Gram matrix is singular; pass beta > 0 or a full-rank channel")]
    SingularChannel,
    #[error("null-space precoding needs more antennas than users (n = {n}, k = {k})")]
    Dimension { n: usize, k: usize },
    #[error("requested {requested} AN streams but the null space has dimension {available}")]
    InsufficientNullSpace { requested: usize, available: usize },
    #[error("precoder column {0} is zero and cannot be normalized")]
    ZeroColumn(usize),
}

/// Normalized data and AN precoder columns for one power-splitting factor.
///
/// Each data column carries power φ/K, each AN column (1-φ)/Z, so the total
/// transmit power across both precoders is exactly one.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderSet {
    /// w_k, one N-vector per user, ‖w_k‖² = φ/K.
    pub data: Vec<DVector<Complex64>>,
    /// v_i, one N-vector per AN stream, ‖v_i‖² = (1-φ)/Z.
    pub an: Vec<DVector<Complex64>>,
    /// RZF regularization parameter used to build the data columns.
    pub beta: f64,
    /// Power splitting factor between data and AN.
    pub phi: f64,
}

/// Unnormalized RZF precoder W = (H H^H + βI)^{-1} H.
///
/// Computed through the equivalent K x K form H (H^H H + βI)^{-1}, which for
/// β = 0 and a full-column-rank channel is the zero-forcing direction.
pub fn rzf_precoder(
    h: &DMatrix<Complex64>,
    beta: f64,
) -> Result<DMatrix<Complex64>, PrecodingError> {
    let k = h.ncols();
    let mut gram = h.adjoint() * h;
    for i in 0..k {
        gram[(i, i)] += Complex64::from(beta);
    }
    let chol = gram.cholesky().ok_or(PrecodingError::SingularChannel)?;
    // H (G^{-1} H^H)^H with Hermitian G
    Ok(chol.solve(&h.adjoint()).adjoint())
}

/// Scale each column to power φ/K: w_k = sqrt(φ / (K ‖w~_k‖²)) w~_k.
pub fn normalize_data_precoder(
    w_tilde: &DMatrix<Complex64>,
    phi: f64,
    users: usize,
) -> Result<Vec<DVector<Complex64>>, PrecodingError> {
    normalize_columns(w_tilde, phi / users as f64)
}

/// Orthonormal basis of null(H^H): every returned column is orthogonal to
/// every user channel. Rank is decided from the singular values of H with a
/// relative 1e-10 cutoff.
pub fn an_precoder(h: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>, PrecodingError> {
    let n = h.nrows();
    let k = h.ncols();
    if k >= n {
        return Err(PrecodingError::Dimension { n, k });
    }
    let svd = h.clone().svd(true, false);
    let u = svd.u.as_ref().expect("svd requested u");
    let s_max = svd.singular_values.max();
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > 1e-10 * s_max)
        .count();
    let mut basis: Vec<DVector<Complex64>> =
        (0..rank).map(|j| u.column(j).into_owned()).collect();
    let mut null_cols = Vec::with_capacity(n - rank);
    for j in 0..n {
        if null_cols.len() == n - rank {
            break;
        }
        let mut v: DVector<Complex64> = DVector::zeros(n);
        v[j] = Complex64::ONE;
        // two Gram-Schmidt passes keep the residual orthogonal to working
        // precision even when e_j starts nearly inside the span
        for _ in 0..2 {
            for b in &basis {
                let coeff = b.dotc(&v);
                v.axpy(-coeff, b, Complex64::ONE);
            }
        }
        let norm = v.norm();
        if norm > 1e-6 {
            v /= Complex64::from(norm);
            basis.push(v.clone());
            null_cols.push(v);
        }
    }
    debug_assert_eq!(null_cols.len(), n - rank);
    Ok(DMatrix::from_columns(&null_cols))
}

/// Scale each null-space column to power (1-φ)/Z.
pub fn normalize_an_precoder(
    v_tilde: &DMatrix<Complex64>,
    phi: f64,
    streams: usize,
) -> Result<Vec<DVector<Complex64>>, PrecodingError> {
    normalize_columns(v_tilde, (1.0 - phi) / streams as f64)
}

fn normalize_columns(
    m: &DMatrix<Complex64>,
    target_power: f64,
) -> Result<Vec<DVector<Complex64>>, PrecodingError> {
    m.column_iter()
        .enumerate()
        .map(|(i, col)| {
            let power = col.norm_squared();
            if power == 0.0 {
                return Err(PrecodingError::ZeroColumn(i));
            }
            Ok(col.into_owned() * Complex64::from((target_power / power).sqrt()))
        })
        .collect()
}

/// Build the full precoder set for one channel realization: RZF data columns
/// and the first `an_streams` null-space AN columns, both power-normalized.
pub fn build_precoder_set(
    h: &DMatrix<Complex64>,
    beta: f64,
    phi: f64,
    an_streams: usize,
) -> Result<PrecoderSet, PrecodingError> {
    let w_tilde = rzf_precoder(h, beta)?;
    let data = normalize_data_precoder(&w_tilde, phi, h.ncols())?;
    let v_tilde = an_precoder(h)?;
    if an_streams > v_tilde.ncols() {
        return Err(PrecodingError::InsufficientNullSpace {
            requested: an_streams,
            available: v_tilde.ncols(),
        });
    }
    let selected = v_tilde.columns(0, an_streams).into_owned();
    let an = if phi < 1.0 {
        normalize_an_precoder(&selected, phi, an_streams)?
    } else {
        // degenerate no-AN split: columns are identically zero
        (0..an_streams)
            .map(|_| DVector::zeros(h.nrows()))
            .collect()
    };
    Ok(PrecoderSet {
        data,
        an,
        beta,
        phi,
    })
}

/// SINR of user u:
/// P_s |h_u^H w_u|² / (Σ_{k≠u} P_s |h_u^H w_k|² + Σ_i |h_u^H v_i|² + 1/ρ).
pub fn sinr(
    u: usize,
    set: &PrecoderSet,
    user_channels: &[DVector<Complex64>],
    p_s: f64,
    rho: f64,
) -> f64 {
    sinr_with_options(u, set, user_channels, p_s, 0.0, rho, false)
}

/// SINR with the tag term optionally counted as self-interference
/// (P_t |h_u^H w_u|² added to the denominator); the plain form treats the
/// tag as part of the useful beam, matching the rate expression.
pub fn sinr_with_options(
    u: usize,
    set: &PrecoderSet,
    user_channels: &[DVector<Complex64>],
    p_s: f64,
    p_t: f64,
    rho: f64,
    include_tag_self_interference: bool,
) -> f64 {
    debug_assert!(rho > 0.0);
    debug_assert!((0.0..=1.0).contains(&p_s));
    let h_u = &user_channels[u];
    let own = h_u.dotc(&set.data[u]).norm_sqr();
    let signal = p_s * own;
    let mut denom = 1.0 / rho;
    for (k, w_k) in set.data.iter().enumerate() {
        if k != u {
            denom += p_s * h_u.dotc(w_k).norm_sqr();
        }
    }
    for v_i in &set.an {
        denom += h_u.dotc(v_i).norm_sqr();
    }
    if include_tag_self_interference {
        denom += p_t * own;
    }
    signal / denom
}

/// Sum rate Σ_k log2(1 + SINR_k) in bits/s/Hz.
pub fn sum_rate(
    set: &PrecoderSet,
    user_channels: &[DVector<Complex64>],
    p_s: f64,
    rho: f64,
) -> f64 {
    (0..user_channels.len())
        .map(|u| (1.0 + sinr(u, set, user_channels, p_s, rho)).log2())
        .sum()
}
