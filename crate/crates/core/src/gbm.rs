//! Correlated geometric Brownian motion at maturity under the risk-neutral
//! measure:
//!
//! ```text
//! A_T^i = a_t^i exp((r - sigma_i^2 / 2) tau + sqrt(tau) sigma_i (L z)_i),  L L^T = C
//! ```
//!
//! plus the pathwise partials of `A_T` used by the Greeks.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// Pivots with magnitude below this are treated as exact zeros (rank
/// deficiency) in the Cholesky factorisation.
const PIVOT_TOL: f64 = 1e-12;
/// Jitter added to the diagonal on the single retry for non-PSD input.
const JITTER: f64 = 1e-12;
/// Off-diagonal residual allowed below a zero pivot.
const RANK_RESIDUAL_TOL: f64 = 1e-9;

fn try_cholesky(c: &DMatrix<f64>) -> std::result::Result<DMatrix<f64>, (usize, f64)> {
    let n = c.nrows();
    let mut l = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut pivot = c[(j, j)];
        for k in 0..j {
            pivot -= l[(j, k)] * l[(j, k)];
        }
        if pivot < -PIVOT_TOL {
            return Err((j, pivot));
        }
        let zero_pivot = pivot <= PIVOT_TOL;
        let diag = if zero_pivot { 0.0 } else { pivot.sqrt() };
        l[(j, j)] = diag;
        for i in j + 1..n {
            let mut num = c[(i, j)];
            for k in 0..j {
                num -= l[(i, k)] * l[(j, k)];
            }
            if zero_pivot {
                if num.abs() > RANK_RESIDUAL_TOL {
                    return Err((j, pivot));
                }
            } else {
                l[(i, j)] = num / diag;
            }
        }
    }
    Ok(l)
}

/// Lower-triangular `L` with `L L^T = C`. Positive semi-definite but
/// singular matrices (e.g. perfectly correlated assets) are accepted.
/// Input that fails is retried once with `1e-12` added to the diagonal.
pub fn cholesky_factor(corr: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_correlation(corr)?;
    match try_cholesky(corr) {
        Ok(l) => Ok(l),
        Err(_) => {
            let jittered = corr + DMatrix::identity(corr.nrows(), corr.ncols()) * JITTER;
            try_cholesky(&jittered)
                .map_err(|(pivot, value)| Error::NotPositiveSemiDefinite { pivot, value })
        }
    }
}

fn check_correlation(corr: &DMatrix<f64>) -> Result<()> {
    let n = corr.nrows();
    if corr.ncols() != n {
        return Err(Error::DimensionMismatch {
            what: "correlation matrix columns",
            expected: n,
            got: corr.ncols(),
        });
    }
    for i in 0..n {
        if corr[(i, i)] != 1.0 {
            return Err(Error::param("corr", format!("diagonal entry {i} is {}", corr[(i, i)])));
        }
        for j in 0..i {
            let (a, b) = (corr[(i, j)], corr[(j, i)]);
            if !a.is_finite() || (a - b).abs() > 1e-12 {
                return Err(Error::param("corr", format!("not symmetric at ({i}, {j})")));
            }
            if a.abs() > 1.0 {
                return Err(Error::param("corr", format!("entry ({i}, {j}) = {a} outside [-1, 1]")));
            }
        }
    }
    Ok(())
}

/// Risk-neutral GBM parameters `(a_t, sigma, r, tau)` and correlation `C`.
#[derive(Debug, Clone, PartialEq)]
pub struct GbmParams {
    spot: DVector<f64>,
    sigma: DVector<f64>,
    rate: f64,
    tau: f64,
    corr: DMatrix<f64>,
    chol: DMatrix<f64>,
}

impl GbmParams {
    pub fn new(spot: DVector<f64>, sigma: DVector<f64>, rate: f64, tau: f64, corr: DMatrix<f64>) -> Result<Self> {
        let n = spot.len();
        if sigma.len() != n {
            return Err(Error::DimensionMismatch {
                what: "volatility vector",
                expected: n,
                got: sigma.len(),
            });
        }
        if corr.nrows() != n {
            return Err(Error::DimensionMismatch {
                what: "correlation matrix",
                expected: n,
                got: corr.nrows(),
            });
        }
        if spot.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
            return Err(Error::param("a_t", "spot values must be positive and finite"));
        }
        if sigma.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::param("sigma", "volatilities must be positive and finite"));
        }
        if !rate.is_finite() {
            return Err(Error::param("r", "rate must be finite"));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::param("tau", format!("time to maturity must be positive, got {tau}")));
        }
        let chol = cholesky_factor(&corr)?;
        Ok(Self {
            spot,
            sigma,
            rate,
            tau,
            corr,
            chol,
        })
    }

    /// Independent assets (`C = I`).
    pub fn independent(spot: DVector<f64>, sigma: DVector<f64>, rate: f64, tau: f64) -> Result<Self> {
        let n = spot.len();
        Self::new(spot, sigma, rate, tau, DMatrix::identity(n, n))
    }

    /// Perfectly correlated assets driven by a single factor.
    pub fn comonotone(spot: DVector<f64>, sigma: DVector<f64>, rate: f64, tau: f64) -> Result<Self> {
        let n = spot.len();
        Self::new(spot, sigma, rate, tau, DMatrix::from_element(n, n, 1.0))
    }

    pub fn n(&self) -> usize {
        self.spot.len()
    }

    pub fn spot(&self) -> &DVector<f64> {
        &self.spot
    }

    pub fn sigma(&self) -> &DVector<f64> {
        &self.sigma
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn corr(&self) -> &DMatrix<f64> {
        &self.corr
    }

    pub fn cholesky(&self) -> &DMatrix<f64> {
        &self.chol
    }

    pub fn discount(&self) -> f64 {
        (-self.rate * self.tau).exp()
    }

    pub fn with_spot(&self, spot: DVector<f64>) -> Result<Self> {
        Self::new(spot, self.sigma.clone(), self.rate, self.tau, self.corr.clone())
    }

    pub fn with_sigma(&self, sigma: DVector<f64>) -> Result<Self> {
        Self::new(self.spot.clone(), sigma, self.rate, self.tau, self.corr.clone())
    }

    pub fn with_rate(&self, rate: f64) -> Result<Self> {
        Self::new(self.spot.clone(), self.sigma.clone(), rate, self.tau, self.corr.clone())
    }

    pub fn with_tau(&self, tau: f64) -> Result<Self> {
        Self::new(self.spot.clone(), self.sigma.clone(), self.rate, tau, self.corr.clone())
    }
}

/// Independent standard normals for one draw. Draw `k` depends only on
/// `(seed, k)`, so parallel schedules reproduce serial output exactly.
pub fn standard_normals(seed: u64, draw: u64, n: usize) -> DVector<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(draw);
    DVector::from_fn(n, |_, _| StandardNormal.sample(&mut rng))
}

#[derive(Debug, Clone, PartialEq)]
pub struct TerminalDraw {
    pub z: DVector<f64>,
    /// Correlated variate `L z`.
    pub lz: DVector<f64>,
    /// Terminal external asset values `A_T`.
    pub assets: DVector<f64>,
}

pub fn sample_terminal(params: &GbmParams, z: &DVector<f64>) -> Result<TerminalDraw> {
    if z.len() != params.n() {
        return Err(Error::DimensionMismatch {
            what: "normal variate",
            expected: params.n(),
            got: z.len(),
        });
    }
    let lz = &params.chol * z;
    let (r, tau) = (params.rate, params.tau);
    let sqrt_tau = tau.sqrt();
    let assets = DVector::from_fn(params.n(), |i, _| {
        let s = params.sigma[i];
        params.spot[i] * ((r - 0.5 * s * s) * tau + sqrt_tau * s * lz[i]).exp()
    });
    Ok(TerminalDraw {
        z: z.clone(),
        lz,
        assets,
    })
}

/// Pathwise partials of `A_T^i` with respect to its own spot and
/// volatility, and to the shared rate and maturity. Cross-asset partials
/// with respect to spot and volatility vanish.
#[derive(Debug, Clone, PartialEq)]
pub struct TerminalPartials {
    /// `dA_T^i / da_t^i = A_T^i / a_t^i`.
    pub spot: DVector<f64>,
    /// `dA_T^i / dsigma_i = A_T^i (-sigma_i tau + sqrt(tau) (L z)_i)`.
    pub sigma: DVector<f64>,
    /// `dA_T / dr = tau A_T`.
    pub rate: DVector<f64>,
    /// `dA_T / dtau = A_T (r - sigma^2/2 + sigma (L z) / (2 sqrt(tau)))`.
    pub tau: DVector<f64>,
}

pub fn terminal_partials(params: &GbmParams, draw: &TerminalDraw) -> TerminalPartials {
    let n = params.n();
    let (r, tau) = (params.rate, params.tau);
    let sqrt_tau = tau.sqrt();
    let a = &draw.assets;
    TerminalPartials {
        spot: DVector::from_fn(n, |i, _| a[i] / params.spot[i]),
        sigma: DVector::from_fn(n, |i, _| {
            a[i] * (-params.sigma[i] * tau + sqrt_tau * draw.lz[i])
        }),
        rate: a * tau,
        tau: DVector::from_fn(n, |i, _| {
            let s = params.sigma[i];
            a[i] * (r - 0.5 * s * s + s * draw.lz[i] / (2.0 * sqrt_tau))
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cholesky_identity_and_two_by_two() {
        assert_eq!(cholesky_factor(&DMatrix::identity(3, 3)).unwrap(), DMatrix::identity(3, 3));
        let c = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 1.0]);
        let l = cholesky_factor(&c).unwrap();
        assert_relative_eq!(l, DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.5, 0.75f64.sqrt()]), epsilon = 1e-15);
        assert_relative_eq!(&l * l.transpose(), c, epsilon = 1e-12);
    }

    #[test]
    fn cholesky_comonotone() {
        let c = DMatrix::from_element(3, 3, 1.0);
        let l = cholesky_factor(&c).unwrap();
        assert_relative_eq!(&l * l.transpose(), c, epsilon = 1e-12);
        assert_eq!(l.column(0).iter().copied().collect::<Vec<_>>(), vec![1.0; 3]);
    }

    #[test]
    fn cholesky_general_psd() {
        let c = DMatrix::from_row_slice(3, 3, &[1.0, 0.3, -0.2, 0.3, 1.0, 0.6, -0.2, 0.6, 1.0]);
        let l = cholesky_factor(&c).unwrap();
        assert_relative_eq!(&l * l.transpose(), c, epsilon = 1e-12);
        for i in 0..3 {
            for j in i + 1..3 {
                assert_eq!(l[(i, j)], 0.0);
            }
        }
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        let c = DMatrix::from_row_slice(3, 3, &[1.0, 0.9, -0.9, 0.9, 1.0, 0.9, -0.9, 0.9, 1.0]);
        assert!(matches!(cholesky_factor(&c), Err(Error::NotPositiveSemiDefinite { .. })));
        let bad_diag = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]);
        assert!(matches!(cholesky_factor(&bad_diag), Err(Error::InvalidParameter { .. })));
    }

    fn params(sigma: f64, rate: f64, tau: f64) -> GbmParams {
        GbmParams::independent(DVector::from_vec(vec![1.0, 2.0]), DVector::from_element(2, sigma), rate, tau).unwrap()
    }

    #[test]
    fn zero_variate_is_drift_only() {
        let p = params(0.4, 0.03, 2.0);
        let draw = sample_terminal(&p, &DVector::zeros(2)).unwrap();
        let growth = ((0.03 - 0.08) * 2.0f64).exp();
        assert_relative_eq!(draw.assets, p.spot() * growth, epsilon = 1e-15);
        let tiny = params(1e-12, 0.03, 2.0);
        let draw = sample_terminal(&tiny, &DVector::from_vec(vec![1.5, -2.0])).unwrap();
        assert_relative_eq!(draw.assets, tiny.spot() * (0.06f64).exp(), epsilon = 1e-10);
    }

    #[test]
    fn spot_partial_closed_form() {
        let p = GbmParams::independent(DVector::from_element(1, 1.0), DVector::from_element(1, 0.4), 0.0, 1.0).unwrap();
        let draw = sample_terminal(&p, &DVector::zeros(1)).unwrap();
        let parts = terminal_partials(&p, &draw);
        assert_relative_eq!(parts.spot[0], (-0.08f64).exp(), epsilon = 1e-15);
        assert_relative_eq!(parts.spot[0], 0.9231163463866358, epsilon = 1e-15);
        assert_eq!(parts.rate, &draw.assets * 1.0);
    }

    #[test]
    fn partials_match_central_differences() {
        let corr = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, 1.0]);
        let p = GbmParams::new(DVector::from_vec(vec![0.8, 1.3]), DVector::from_vec(vec![0.25, 0.5]), 0.02, 1.5, corr).unwrap();
        let z = DVector::from_vec(vec![0.7, -1.1]);
        let draw = sample_terminal(&p, &z).unwrap();
        let parts = terminal_partials(&p, &draw);
        let at = |q: &GbmParams| sample_terminal(q, &z).unwrap().assets;
        let rel = |fd: f64, exact: f64| ((fd - exact) / exact).abs();
        for i in 0..2 {
            let h = 1e-5 * p.spot()[i];
            let mut up = p.spot().clone();
            up[i] += h;
            let mut dn = p.spot().clone();
            dn[i] -= h;
            let fd = (at(&p.with_spot(up).unwrap())[i] - at(&p.with_spot(dn).unwrap())[i]) / (2.0 * h);
            assert!(rel(fd, parts.spot[i]) < 1e-7);

            let h = 1e-5 * p.sigma()[i];
            let mut up = p.sigma().clone();
            up[i] += h;
            let mut dn = p.sigma().clone();
            dn[i] -= h;
            let fd = (at(&p.with_sigma(up).unwrap())[i] - at(&p.with_sigma(dn).unwrap())[i]) / (2.0 * h);
            assert!(rel(fd, parts.sigma[i]) < 1e-7, "sigma {i}: {fd} vs {}", parts.sigma[i]);

            let h = 1e-5;
            let fd = (at(&p.with_rate(0.02 + h).unwrap())[i] - at(&p.with_rate(0.02 - h).unwrap())[i]) / (2.0 * h);
            assert!(rel(fd, parts.rate[i]) < 1e-7);
            let fd = (at(&p.with_tau(1.5 + h).unwrap())[i] - at(&p.with_tau(1.5 - h).unwrap())[i]) / (2.0 * h);
            assert!(rel(fd, parts.tau[i]) < 1e-7, "tau {i}: {fd} vs {}", parts.tau[i]);
        }
    }

    #[test]
    fn normals_are_reproducible_and_stream_separated() {
        let a = standard_normals(7, 3, 5);
        assert_eq!(a, standard_normals(7, 3, 5));
        assert_ne!(a, standard_normals(7, 4, 5));
        assert_ne!(a, standard_normals(8, 3, 5));
    }

    #[test]
    fn martingale_property() {
        let p = GbmParams::independent(DVector::from_element(1, 1.3), DVector::from_element(1, 0.4), 0.05, 1.0).unwrap();
        let n = 100_000;
        let mut sum = 0.0;
        let mut sum_sq = 0.0;
        for k in 0..n {
            let z = standard_normals(11, k, 1);
            let x = p.discount() * sample_terminal(&p, &z).unwrap().assets[0];
            sum += x;
            sum_sq += x * x;
        }
        let mean = sum / n as f64;
        let se = ((sum_sq / n as f64 - mean * mean) / (n as f64 - 1.0)).sqrt();
        assert!((mean - 1.3).abs() < 3.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn rejects_bad_params() {
        let one = DVector::from_element(1, 1.0);
        assert!(GbmParams::independent(one.clone(), one.clone(), 0.0, 0.0).is_err());
        assert!(GbmParams::independent(one.clone(), DVector::zeros(1), 0.0, 1.0).is_err());
        assert!(GbmParams::independent(DVector::from_element(1, -1.0), one.clone(), 0.0, 1.0).is_err());
        assert!(GbmParams::new(one.clone(), one, 0.0, 1.0, DMatrix::identity(2, 2)).is_err());
    }
}
