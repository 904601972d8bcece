//! Standard-normal functions and plain Black-Scholes European prices.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

/// Standard-normal CDF, `0.5 erfc(-x / sqrt 2)`.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

pub fn norm_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// `(d_+, d_-)` for spot `s`, strike `k`.
pub fn d_pm(s: f64, k: f64, rate: f64, tau: f64, sigma: f64) -> (f64, f64) {
    let vol = sigma * tau.sqrt();
    let d_plus = ((s / k).ln() + (rate + 0.5 * sigma * sigma) * tau) / vol;
    (d_plus, d_plus - vol)
}

pub fn call(s: f64, k: f64, rate: f64, tau: f64, sigma: f64) -> f64 {
    let (dp, dm) = d_pm(s, k, rate, tau, sigma);
    s * norm_cdf(dp) - k * (-rate * tau).exp() * norm_cdf(dm)
}

/// Put price. A non-positive spot is worth the full discounted strike.
pub fn put(s: f64, k: f64, rate: f64, tau: f64, sigma: f64) -> f64 {
    if s <= 0.0 {
        return k * (-rate * tau).exp();
    }
    let (dp, dm) = d_pm(s, k, rate, tau, sigma);
    k * (-rate * tau).exp() * norm_cdf(-dm) - s * norm_cdf(-dp)
}

/// Put delta `-Phi(-d_+)`, in `[-1, 0]`.
pub fn put_delta(s: f64, k: f64, rate: f64, tau: f64, sigma: f64) -> f64 {
    if s <= 0.0 {
        return -1.0;
    }
    let (dp, _) = d_pm(s, k, rate, tau, sigma);
    -norm_cdf(-dp)
}

/// Risk-neutral probability that the underlying ends at or below the strike.
pub fn prob_below(s: f64, k: f64, rate: f64, tau: f64, sigma: f64) -> f64 {
    if s <= 0.0 {
        return 1.0;
    }
    let (_, dm) = d_pm(s, k, rate, tau, sigma);
    norm_cdf(-dm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cdf_reference_values() {
        assert_eq!(norm_cdf(0.0), 0.5);
        // Reference values of the standard-normal CDF.
        assert_relative_eq!(norm_cdf(1.0), 0.841_344_746_068_542_9, epsilon = 1e-15);
        assert_relative_eq!(norm_cdf(-1.96), 0.024_997_895_148_220_435, epsilon = 1e-15);
        assert_relative_eq!(norm_cdf(0.2), 0.579_259_709_439_103_1, epsilon = 1e-15);
        assert!(norm_cdf(-40.0) >= 0.0 && norm_cdf(-40.0) < 1e-300);
    }

    #[test]
    fn put_call_parity() {
        for &(s, k, r, t, v) in &[(1.0, 1.0, 0.0, 1.0, 0.4), (1.3, 0.8, 0.05, 2.0, 0.2), (0.2, 1.0, -0.01, 0.5, 1.0)] {
            let lhs = call(s, k, r, t, v) - put(s, k, r, t, v);
            assert_relative_eq!(lhs, s - k * (-r * t).exp(), epsilon = 1e-14);
        }
    }

    #[test]
    fn at_the_money_call() {
        // r = 0, s = k = 1, sigma = 0.4: C = 2 Phi(0.2) - 1.
        assert_relative_eq!(call(1.0, 1.0, 0.0, 1.0, 0.4), 2.0 * norm_cdf(0.2) - 1.0, epsilon = 1e-15);
        assert_relative_eq!(call(1.0, 1.0, 0.0, 1.0, 0.4), 0.158_519_418_878_206_2, epsilon = 1e-14);
    }

    #[test]
    fn put_delta_matches_difference() {
        let (s, k, r, t, v) = (1.1, 1.0, 0.02, 1.0, 0.3);
        let h = 1e-6;
        let fd = (put(s + h, k, r, t, v) - put(s - h, k, r, t, v)) / (2.0 * h);
        assert_relative_eq!(put_delta(s, k, r, t, v), fd, epsilon = 1e-9);
    }
}
