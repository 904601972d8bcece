//! Ex-post claim values as the fixed point `x* = g(a, x*)`, found by
//! Picard iteration.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{ClaimVector, FirmNetwork, SolvencyVector};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FixedPointConfig {
    /// Sup-norm threshold on successive iterates.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FixedPointConfig {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            max_iter: 10_000,
        }
    }
}

impl FixedPointConfig {
    pub fn new(tol: f64, max_iter: usize) -> Result<Self> {
        let cfg = Self { tol, max_iter };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::param("tol", format!("must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::param("max_iter", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FixedPointSolution {
    pub claims: ClaimVector,
    pub xi: SolvencyVector,
    /// Number of applications of `g`.
    pub iterations: usize,
    /// Sup-norm of the last step `x_{k+1} - x_k`.
    pub residual: f64,
}

/// Writes `g(a, (s; r))` into `(s_out; r_out)`, using `v` as scratch for the
/// firm values.
fn apply_g(
    net: &FirmNetwork,
    a: &DVector<f64>,
    s: &DVector<f64>,
    r: &DVector<f64>,
    v: &mut DVector<f64>,
    s_out: &mut DVector<f64>,
    r_out: &mut DVector<f64>,
) {
    v.copy_from(a);
    if !net.is_debt_only() {
        v.gemv(1.0, net.equity_holdings(), s, 1.0);
    }
    v.gemv(1.0, net.debt_holdings(), r, 1.0);
    let d = net.nominal_debt();
    for i in 0..v.len() {
        s_out[i] = (v[i] - d[i]).max(0.0);
        r_out[i] = v[i].min(d[i]);
    }
}

/// One application of the valuation map:
/// `g^s_i = max(0, v_i - d_i)`, `g^r_i = min(d_i, v_i)` with
/// `v = a + M^s s + M^d r`.
pub fn eval_g(net: &FirmNetwork, a: &DVector<f64>, x: &ClaimVector) -> Result<ClaimVector> {
    net.check_assets(a)?;
    net.check_len("claim vector", x.n())?;
    let n = net.n();
    let mut v = DVector::zeros(n);
    let mut out = ClaimVector::zeros(n);
    apply_g(net, a, &x.s, &x.r, &mut v, &mut out.s, &mut out.r);
    Ok(out)
}

/// Default starting point `(0; min(d, a))`.
pub fn initial_claims(net: &FirmNetwork, a: &DVector<f64>) -> ClaimVector {
    let r = a.zip_map(net.nominal_debt(), f64::min);
    ClaimVector {
        s: DVector::zeros(net.n()),
        r,
    }
}

pub fn solve_claims(
    net: &FirmNetwork,
    a: &DVector<f64>,
    cfg: &FixedPointConfig,
) -> Result<FixedPointSolution> {
    net.check_assets(a)?;
    solve_claims_from(net, a, cfg, initial_claims(net, a))
}

/// Picard iteration from an arbitrary starting point.
pub fn solve_claims_from(
    net: &FirmNetwork,
    a: &DVector<f64>,
    cfg: &FixedPointConfig,
    start: ClaimVector,
) -> Result<FixedPointSolution> {
    cfg.validate()?;
    net.check_assets(a)?;
    net.check_len("claim vector", start.n())?;
    let n = net.n();
    let mut cur = start;
    let mut next = ClaimVector::zeros(n);
    let mut v = DVector::zeros(n);
    let mut residual = f64::INFINITY;
    for iter in 1..=cfg.max_iter {
        apply_g(net, a, &cur.s, &cur.r, &mut v, &mut next.s, &mut next.r);
        residual = next.distance(&cur);
        std::mem::swap(&mut cur, &mut next);
        if residual <= cfg.tol {
            let xi = solvency(net, a, &cur);
            return Ok(FixedPointSolution {
                claims: cur,
                xi,
                iterations: iter,
                residual,
            });
        }
        if !residual.is_finite() {
            break;
        }
    }
    Err(Error::NonConvergence {
        iterations: cfg.max_iter,
        residual,
        last: Box::new(cur),
    })
}

/// Solvency vector at the given claims. A firm whose value equals its debt
/// exactly is classified as insolvent.
pub fn solvency(net: &FirmNetwork, a: &DVector<f64>, claims: &ClaimVector) -> SolvencyVector {
    let mut v = a.clone();
    v.gemv(1.0, net.equity_holdings(), &claims.s, 1.0);
    v.gemv(1.0, net.debt_holdings(), &claims.r, 1.0);
    SolvencyVector::new(
        v.iter()
            .zip(net.nominal_debt().iter())
            .map(|(v, d)| v > d)
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    fn single(d: f64) -> FirmNetwork {
        FirmNetwork::unconnected(DVector::from_element(1, d)).unwrap()
    }

    fn vec1(x: f64) -> DVector<f64> {
        DVector::from_element(1, x)
    }

    #[test]
    fn merton_payoffs() {
        let net = single(1.0);
        let g = eval_g(&net, &vec1(2.0), &ClaimVector::zeros(1)).unwrap();
        assert_eq!((g.s[0], g.r[0]), (1.0, 1.0));
        let g = eval_g(&net, &vec1(0.5), &ClaimVector::zeros(1)).unwrap();
        assert_eq!((g.s[0], g.r[0]), (0.0, 0.5));

        let sol = solve_claims(&net, &vec1(2.0), &FixedPointConfig::default()).unwrap();
        assert_eq!((sol.claims.s[0], sol.claims.r[0]), (1.0, 1.0));
        assert!(sol.xi.is_solvent(0));
    }

    #[test]
    fn one_hand_iteration_symmetric_debt() {
        let net = FirmNetwork::symmetric(2, 0.0, 0.4, 1.0).unwrap();
        let x = ClaimVector::new(DVector::zeros(2), DVector::from_element(2, 0.5)).unwrap();
        let g = eval_g(&net, &DVector::from_element(2, 0.5), &x).unwrap();
        assert_relative_eq!(g.r, DVector::from_element(2, 0.7), epsilon = 1e-15);
        assert_eq!(g.s, DVector::zeros(2));
    }

    #[test]
    fn symmetric_insolvent_branch() {
        let net = FirmNetwork::symmetric(4, 0.0, 0.4, 1.0).unwrap();
        let sol = solve_claims(&net, &DVector::from_element(4, 0.5), &FixedPointConfig::default()).unwrap();
        for i in 0..4 {
            assert_eq!(sol.claims.s[i], 0.0);
            assert_relative_eq!(sol.claims.r[i], 0.5 / 0.6, epsilon = 1e-11);
            assert!(!sol.xi.is_solvent(i));
        }
        assert!(sol.residual <= 1e-12);
    }

    #[test]
    fn symmetric_solvent_branch() {
        let net = FirmNetwork::symmetric(4, 0.2, 0.4, 1.0).unwrap();
        let sol = solve_claims(&net, &DVector::from_element(4, 1.2), &FixedPointConfig::default()).unwrap();
        for i in 0..4 {
            assert_relative_eq!(sol.claims.s[i], 0.75, epsilon = 1e-11);
            assert_relative_eq!(sol.claims.r[i], 1.0, epsilon = 1e-15);
            assert!(sol.xi.is_solvent(i));
        }
    }

    #[test]
    fn solvency_extremes() {
        let net = FirmNetwork::symmetric(3, 0.3, 0.3, 1.0).unwrap();
        let cfg = FixedPointConfig::default();
        let rich = solve_claims(&net, &DVector::from_element(3, 100.0), &cfg).unwrap();
        assert_eq!(rich.xi.defaults(), 0);
        let poor = solve_claims(&net, &DVector::from_element(3, 1e-6), &cfg).unwrap();
        assert_eq!(poor.xi.defaults(), 3);
    }

    #[test]
    fn boundary_tie_is_insolvent() {
        let net = single(1.0);
        let claims = ClaimVector::new(vec1(0.0), vec1(1.0)).unwrap();
        assert!(!solvency(&net, &vec1(1.0), &claims).is_solvent(0));
    }

    #[test]
    fn rejects_nonpositive_assets() {
        let net = single(1.0);
        let err = solve_claims(&net, &vec1(0.0), &FixedPointConfig::default()).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter { .. }));
    }

    #[test]
    fn non_convergence_carries_last_iterate() {
        let net = FirmNetwork::symmetric(2, 0.0, 0.9, 1.0).unwrap();
        let cfg = FixedPointConfig::new(1e-14, 3).unwrap();
        match solve_claims(&net, &DVector::from_element(2, 0.05), &cfg) {
            Err(Error::NonConvergence { iterations, residual, last }) => {
                assert_eq!(iterations, 3);
                assert!(residual > 1e-14);
                assert_eq!(last.n(), 2);
            }
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn invalid_config() {
        assert!(FixedPointConfig::new(0.0, 10).is_err());
        assert!(FixedPointConfig::new(1e-9, 0).is_err());
    }

    #[test]
    fn two_firm_insolvent_matches_linear_solve() {
        let m_d = DMatrix::from_row_slice(2, 2, &[0.0, 0.95, 0.95, 0.0]);
        let net = FirmNetwork::debt_only(m_d.clone(), DVector::from_element(2, 11.3)).unwrap();
        let a = DVector::from_vec(vec![0.3, 0.4]);
        let sol = solve_claims(&net, &a, &FixedPointConfig::default()).unwrap();
        let v = (DMatrix::identity(2, 2) - m_d).lu().solve(&a).unwrap();
        assert!(v.iter().all(|x| *x < 11.3));
        assert_eq!(sol.xi.defaults(), 2);
        assert_relative_eq!(sol.claims.r, v, epsilon = 1e-9);
    }
}
