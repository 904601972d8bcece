//! Closed forms for the symmetric network, where every firm holds the same
//! fractions `w_s`, `w_d` of the others and all firms share one asset.
//!
//! The fixed point collapses to one dimension: the default boundary drops to
//! `K = (1 - w_d) d`, equity is an amplified call on the asset struck at `K`,
//! and debt is amplified riskless debt minus a put struck at `K`.

use serde::{Deserialize, Serialize};

use crate::black_scholes::{call, d_pm, norm_cdf, norm_pdf, put};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetricParams {
    pub w_s: f64,
    pub w_d: f64,
    pub d: f64,
    pub a_t: f64,
    pub sigma: f64,
    pub r: f64,
    pub tau: f64,
}

impl SymmetricParams {
    pub fn new(w_s: f64, w_d: f64, d: f64, a_t: f64, sigma: f64, r: f64, tau: f64) -> Result<Self> {
        let p = Self {
            w_s,
            w_d,
            d,
            a_t,
            sigma,
            r,
            tau,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, w) in [("w_s", self.w_s), ("w_d", self.w_d)] {
            if !(0.0..1.0).contains(&w) {
                return Err(Error::param(name, format!("must lie in [0, 1), got {w}")));
            }
        }
        for (name, x) in [("d", self.d), ("a_t", self.a_t), ("sigma", self.sigma), ("tau", self.tau)] {
            if !(x > 0.0 && x.is_finite()) {
                return Err(Error::param(name, format!("must be positive and finite, got {x}")));
            }
        }
        if !self.r.is_finite() {
            return Err(Error::param("r", "must be finite"));
        }
        Ok(())
    }

    /// Default boundary `(1 - w_d) d`.
    pub fn strike(&self) -> f64 {
        (1.0 - self.w_d) * self.d
    }

    fn bs(&self) -> (f64, f64, f64, f64, f64) {
        (self.a_t, self.strike(), self.r, self.tau, self.sigma)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetricExpost {
    pub s: f64,
    pub r: f64,
    pub solvent: bool,
}

/// Ex-post claims at terminal asset value `a`. The boundary
/// `a = (1 - w_d) d` belongs to the default branch.
pub fn symmetric_expost(a: f64, w_s: f64, w_d: f64, d: f64) -> SymmetricExpost {
    let k = (1.0 - w_d) * d;
    if a > k {
        SymmetricExpost {
            s: (a - k) / (1.0 - w_s),
            r: d,
            solvent: true,
        }
    } else {
        SymmetricExpost {
            s: 0.0,
            r: a / (1.0 - w_d),
            solvent: false,
        }
    }
}

pub fn d_plus_minus(p: &SymmetricParams) -> (f64, f64) {
    let (a, k, r, tau, sigma) = p.bs();
    d_pm(a, k, r, tau, sigma)
}

/// `(s_t, r_t)` as amplified Black-Scholes call and put prices.
pub fn symmetric_price(p: &SymmetricParams) -> (f64, f64) {
    let (a, k, r, tau, sigma) = p.bs();
    let s = call(a, k, r, tau, sigma) / (1.0 - p.w_s);
    let debt = ((-r * tau).exp() * k - put(a, k, r, tau, sigma)) / (1.0 - p.w_d);
    (s, debt)
}

/// `(s_t, r_t)` written directly in terms of `Phi(d_+)`, `Phi(d_-)`.
pub fn symmetric_price_phi(p: &SymmetricParams) -> (f64, f64) {
    let (dp, dm) = d_plus_minus(p);
    let k = p.strike();
    let disc = (-p.r * p.tau).exp();
    let s = (p.a_t * norm_cdf(dp) - k * disc * norm_cdf(dm)) / (1.0 - p.w_s);
    let debt = (p.a_t * norm_cdf(-dp) + k * disc * norm_cdf(dm)) / (1.0 - p.w_d);
    (s, debt)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetricGreeks {
    pub delta_s: f64,
    pub delta_r: f64,
    pub vega_s: f64,
    pub vega_r: f64,
    /// `-ds_t/dtau`.
    pub theta_s: f64,
    /// `-dr_t/dtau`.
    pub theta_r: f64,
    pub rho_s: f64,
    pub rho_r: f64,
}

pub fn symmetric_greeks(p: &SymmetricParams) -> SymmetricGreeks {
    let (dp, dm) = d_plus_minus(p);
    let k = p.strike();
    let (es, ed) = (1.0 / (1.0 - p.w_s), 1.0 / (1.0 - p.w_d));
    let disc = (-p.r * p.tau).exp();
    let sqrt_tau = p.tau.sqrt();
    let phi = norm_pdf(dp);
    let decay = p.a_t * phi * p.sigma / (2.0 * sqrt_tau);
    let carry = p.r * k * disc;
    SymmetricGreeks {
        delta_s: es * norm_cdf(dp),
        delta_r: ed * norm_cdf(-dp),
        vega_s: es * p.a_t * phi * sqrt_tau,
        vega_r: -ed * p.a_t * phi * sqrt_tau,
        theta_s: -es * (decay + carry * norm_cdf(dm)),
        theta_r: ed * (carry + decay - carry * norm_cdf(-dm)),
        rho_s: es * k * p.tau * disc * norm_cdf(dm),
        rho_r: -ed * (k * p.tau * disc - k * p.tau * disc * norm_cdf(-dm)),
    }
}

/// `Delta` and `rho` of `(s_t, r_t)` obtained by conditioning the ex-post
/// sensitivities on the solvency event, independent of the Black-Scholes
/// route in [`symmetric_greeks`].
///
/// Returns `((delta_s, delta_r), (rho_s, rho_r))`.
pub fn symmetric_delta_rho_conditional(p: &SymmetricParams) -> ((f64, f64), (f64, f64)) {
    let (dp, dm) = d_plus_minus(p);
    let disc = (-p.r * p.tau).exp();
    let forward = p.a_t / disc;
    let p_solvent = norm_cdf(dm);
    let p_default = norm_cdf(-dm);
    // Truncated first moments of the lognormal terminal asset value.
    let mass_up = forward * norm_cdf(dp);
    let mass_down = forward * norm_cdf(-dp);
    let cond_up = if p_solvent > 0.0 { mass_up / p_solvent } else { 0.0 };
    let cond_down = if p_default > 0.0 { mass_down / p_default } else { 0.0 };

    let delta_s = disc / p.a_t * p_solvent * cond_up / (1.0 - p.w_s);
    let delta_r = disc / p.a_t * p_default * cond_down / (1.0 - p.w_d);
    let base = p.tau * disc * p.d * p_solvent;
    let rho_s = base * (1.0 - p.w_d) / (1.0 - p.w_s);
    let rho_r = -base;
    ((delta_s, delta_r), (rho_s, rho_r))
}

/// Expected aggregate ex-post sensitivity in excess of the unit direct
/// effect: `Phi(d_-)/(1 - w_s) + Phi(-d_-)/(1 - w_d) - 1`.
pub fn symmetric_pi(p: &SymmetricParams) -> f64 {
    let (_, dm) = d_plus_minus(p);
    norm_cdf(dm) / (1.0 - p.w_s) + norm_cdf(-dm) / (1.0 - p.w_d) - 1.0
}
