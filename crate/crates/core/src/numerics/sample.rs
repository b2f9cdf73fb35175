//! Samplers for the distributions the channel and signal models draw from.

use super::RngStream;
use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::FRAC_1_SQRT_2;

/// n i.i.d. circularly-symmetric complex Gaussian samples with unit
/// per-component variance (real and imaginary parts each N(0, 1/2)).
pub fn sample_complex_normal(stream: &RngStream, n: usize) -> DVector<Complex64> {
    draw_complex_normal(&mut stream.rng(), n)
}

/// Sequential-draw form of [`sample_complex_normal`] for callers that pull
/// several vectors from one generator.
pub fn draw_complex_normal(rng: &mut ChaCha8Rng, n: usize) -> DVector<Complex64> {
    DVector::from_fn(n, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        Complex64::new(re * FRAC_1_SQRT_2, im * FRAC_1_SQRT_2)
    })
}

/// One Laplace-distributed angle with mean `location` and standard
/// deviation `spread_std` (scale b = spread_std / √2), by inverse CDF.
pub fn sample_laplace(stream: &RngStream, location: f64, spread_std: f64) -> f64 {
    draw_laplace(&mut stream.rng(), location, spread_std)
}

/// Sequential-draw form of [`sample_laplace`].
pub fn draw_laplace(rng: &mut ChaCha8Rng, location: f64, spread_std: f64) -> f64 {
    debug_assert!(spread_std > 0.0);
    let scale = spread_std * FRAC_1_SQRT_2;
    let u: f64 = rng.random::<f64>() - 0.5; // [-0.5, 0.5)
    let t = (1.0 - 2.0 * u.abs()).max(f64::MIN_POSITIVE);
    location - scale * u.signum() * t.ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_normal_moments() {
        let n = 1_000_000;
        let v = sample_complex_normal(&RngStream::new(11, 0), n);
        let mean = v.sum() / n as f64;
        assert!(mean.re.abs() < 0.005 && mean.im.abs() < 0.005, "mean {mean}");
        let power = v.iter().map(|x| x.norm_sqr()).sum::<f64>() / n as f64;
        assert!((power - 1.0).abs() < 0.01, "power {power}");
    }

    #[test]
    fn complex_normal_is_deterministic() {
        let s = RngStream::new(5, 123);
        assert_eq!(sample_complex_normal(&s, 64), sample_complex_normal(&s, 64));
    }

    #[test]
    fn laplace_moments() {
        let spread = 10f64.to_radians();
        let loc = 0.3;
        let n = 1_000_000;
        let mut rng = RngStream::new(21, 0).rng();
        let mut samples: Vec<f64> = (0..n).map(|_| draw_laplace(&mut rng, loc, spread)).collect();
        let mean = samples.iter().sum::<f64>() / n as f64;
        let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        let std = var.sqrt();
        assert!((std - spread).abs() < 0.02 * spread, "std {std}");
        samples.sort_by(|a, b| a.total_cmp(b));
        let median = samples[n / 2];
        assert!((median - loc).abs() < 0.1f64.to_radians(), "median {median}");
    }

    #[test]
    fn laplace_is_deterministic() {
        let s = RngStream::new(5, 77);
        assert_eq!(sample_laplace(&s, 0.1, 0.2), sample_laplace(&s, 0.1, 0.2));
    }
}
