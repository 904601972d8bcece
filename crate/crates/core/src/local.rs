//! Local ex-ante approximations for debt-only networks.
//!
//! Each firm marks its debt holdings at market as nominal debt insured by a
//! short Black-Scholes put on the counterparty's firm value, with a firm
//! volatility that is taken as given. The resulting self-consistent equity
//! values, their sensitivity, and two linear contagion proxies built from
//! default probabilities live here.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::black_scholes::{prob_below, put, put_delta};
use crate::error::{Error, Result};
use crate::fixpoint::FixedPointConfig;
use crate::network::FirmNetwork;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalValuationState {
    /// Ex-ante equity values `E_i(t)`.
    pub equity: Vec<f64>,
    /// Risk-neutral probability that `E_i + d_i` ends at or below `d_i`.
    pub pd: Vec<f64>,
    pub firm_vol: Vec<f64>,
    pub rate: f64,
    pub tau: f64,
    pub iterations: usize,
}

fn require_debt_only(net: &FirmNetwork) -> Result<()> {
    if net.is_debt_only() {
        Ok(())
    } else {
        Err(Error::InvalidNetwork("local approximations require a debt-only network".into()))
    }
}

fn check_pd(net: &FirmNetwork, pd: &DVector<f64>) -> Result<()> {
    net.check_len("default probabilities", pd.len())?;
    if let Some(p) = pd.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::param("pd", format!("must lie in [0, 1], got {p}")));
    }
    Ok(())
}

fn invert(m: DMatrix<f64>, what: &'static str) -> Result<DMatrix<f64>> {
    let inv = m.try_inverse().ok_or(Error::Singular(what))?;
    if inv.iter().all(|x| x.is_finite()) {
        Ok(inv)
    } else {
        Err(Error::Singular(what))
    }
}

/// Counterparty put on firm value `E + d` struck at `d`.
fn counterparty_put(e: f64, d: f64, rate: f64, tau: f64, vol: f64) -> f64 {
    put(e + d, d, rate, tau, vol)
}

/// Solves `E_i = a_i + sum_j M^d_ij (d_j - P(E_j + d_j, d_j)) - d_i` by
/// Picard iteration from `a - d + M^d d`.
pub fn local_fixed_point(
    net: &FirmNetwork,
    a: &DVector<f64>,
    rate: f64,
    tau: f64,
    firm_vol: &DVector<f64>,
    cfg: &FixedPointConfig,
) -> Result<LocalValuationState> {
    require_debt_only(net)?;
    cfg.validate()?;
    net.check_len("spot assets", a.len())?;
    net.check_len("firm volatilities", firm_vol.len())?;
    if let Some(v) = firm_vol.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
        return Err(Error::param("firm_vol", format!("must be positive, got {v}")));
    }
    if !(tau > 0.0 && tau.is_finite() && rate.is_finite()) {
        return Err(Error::param("tau", "rate must be finite and tau positive"));
    }
    let n = net.n();
    let d = net.nominal_debt();
    let m_d = net.debt_holdings();
    let mut e = a - d + m_d * d;
    let mut marked = DVector::zeros(n);
    let mut next = DVector::zeros(n);
    let mut residual = f64::INFINITY;
    for iter in 1..=cfg.max_iter {
        for j in 0..n {
            marked[j] = d[j] - counterparty_put(e[j], d[j], rate, tau, firm_vol[j]);
        }
        next.copy_from(a);
        next -= d;
        next.gemv(1.0, m_d, &marked, 1.0);
        residual = (&next - &e).amax();
        std::mem::swap(&mut e, &mut next);
        if residual <= cfg.tol {
            let pd = (0..n)
                .map(|j| prob_below(e[j] + d[j], d[j], rate, tau, firm_vol[j]))
                .collect();
            return Ok(LocalValuationState {
                equity: e.iter().copied().collect(),
                pd,
                firm_vol: firm_vol.iter().copied().collect(),
                rate,
                tau,
                iterations: iter,
            });
        }
        if !residual.is_finite() {
            break;
        }
    }
    Err(Error::NonConvergence {
        iterations: cfg.max_iter,
        residual,
        last: Box::new(crate::network::ClaimVector {
            s: e.map(|x| x.max(0.0)),
            r: DVector::zeros(n),
        }),
    })
}

/// `dE*/da = (I + M^d diag(Delta_put(E* + d, d)))^{-1}`.
pub fn local_delta(state: &LocalValuationState, net: &FirmNetwork) -> Result<DMatrix<f64>> {
    require_debt_only(net)?;
    net.check_len("local state", state.equity.len())?;
    let n = net.n();
    let d = net.nominal_debt();
    let deltas = DVector::from_iterator(
        n,
        (0..n).map(|j| put_delta(state.equity[j] + d[j], d[j], state.rate, state.tau, state.firm_vol[j])),
    );
    put_weighted_inverse(net, &deltas)
}

/// `(I + M^d diag(delta))^{-1}` for given put deltas.
pub fn put_weighted_inverse(net: &FirmNetwork, put_deltas: &DVector<f64>) -> Result<DMatrix<f64>> {
    net.check_len("put deltas", put_deltas.len())?;
    let n = net.n();
    let mut m = net.debt_holdings().clone();
    for (j, mut col) in m.column_iter_mut().enumerate() {
        col *= put_deltas[j];
    }
    invert(DMatrix::identity(n, n) + m, "local delta")
}

/// `(I - M^d diag(pd))^{-1}`, the default-weighted amplifier applied to
/// asset shocks.
pub fn marginal_contagion_matrix(net: &FirmNetwork, pd: &DVector<f64>) -> Result<DMatrix<f64>> {
    require_debt_only(net)?;
    check_pd(net, pd)?;
    let n = net.n();
    let mut m = net.debt_holdings().clone();
    for (j, mut col) in m.column_iter_mut().enumerate() {
        col *= pd[j];
    }
    invert(DMatrix::identity(n, n) - m, "marginal contagion")
}

/// `(I - M^d diag(pd))^{-1} shock`.
pub fn marginal_contagion(net: &FirmNetwork, pd: &DVector<f64>, shock: &DVector<f64>) -> Result<DVector<f64>> {
    net.check_len("shock", shock.len())?;
    Ok(marginal_contagion_matrix(net, pd)? * shock)
}

/// `(I - diag(pd) M^d)^{-1} diag(pd)`, the expected debt sensitivity when
/// defaults are treated as independent.
pub fn independent_default_delta(net: &FirmNetwork, pd: &DVector<f64>) -> Result<DMatrix<f64>> {
    require_debt_only(net)?;
    check_pd(net, pd)?;
    let n = net.n();
    let mut m = net.debt_holdings().clone();
    for (i, mut row) in m.row_iter_mut().enumerate() {
        row *= pd[i];
    }
    let inv = invert(DMatrix::identity(n, n) - m, "independent default delta")?;
    Ok(inv * DMatrix::from_diagonal(pd))
}
