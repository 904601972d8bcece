//! Exact per-scenario derivatives of the fixed point with respect to the
//! external assets, via the implicit function theorem.
//!
//! With `J = dg/dx = diag(xi; 1-xi) [[M^s, M^d], [M^s, M^d]]` the weighting
//! matrix is `W = (I - J)^{-1}` and
//! `dx*/da = W [diag(xi); diag(1-xi)]`.
//! All solves go through an LU factorisation of `I - J`; `W` itself is only
//! formed when asked for.

use nalgebra::{DMatrix, DVector, Dyn, LU};

use crate::error::{Error, Result};
use crate::network::{ClaimVector, FirmNetwork, SolvencyVector};

/// Relative distance `|v_i - d_i| <= BOUNDARY_EPS * d_i` at which a
/// scenario is flagged as sitting on a default boundary.
pub const BOUNDARY_EPS: f64 = 1e-9;

/// `dx*/da` for one scenario, a `2n x n` matrix whose top block is the
/// equity sensitivity `u^s` and bottom block the debt sensitivity `u^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClaimsJacobian {
    pub dxda: DMatrix<f64>,
    pub xi: SolvencyVector,
}

impl ClaimsJacobian {
    pub fn n(&self) -> usize {
        self.dxda.ncols()
    }

    pub fn equity_block(&self) -> DMatrix<f64> {
        let n = self.n();
        self.dxda.rows(0, n).into_owned()
    }

    pub fn debt_block(&self) -> DMatrix<f64> {
        let n = self.n();
        self.dxda.rows(n, n).into_owned()
    }
}

/// `dg/dx` at a scenario with solvency vector `xi`.
pub fn jacobian_g(net: &FirmNetwork, xi: &SolvencyVector) -> DMatrix<f64> {
    let n = net.n();
    let (m_s, m_d) = (net.equity_holdings(), net.debt_holdings());
    DMatrix::from_fn(2 * n, 2 * n, |k, l| {
        let firm = k % n;
        // Equity rows are live for solvent firms, debt rows for defaulted ones.
        let live = (k < n) == xi.is_solvent(firm);
        if !live {
            return 0.0;
        }
        if l < n {
            m_s[(firm, l)]
        } else {
            m_d[(firm, l - n)]
        }
    })
}

fn check_xi(net: &FirmNetwork, xi: &SolvencyVector) -> Result<()> {
    net.check_len("solvency vector", xi.len())
}

fn factor(net: &FirmNetwork, xi: &SolvencyVector) -> Result<LU<f64, Dyn, Dyn>> {
    check_xi(net, xi)?;
    let n = net.n();
    let system = DMatrix::identity(2 * n, 2 * n) - jacobian_g(net, xi);
    Ok(system.lu())
}

fn solve(lu: &LU<f64, Dyn, Dyn>, rhs: &DMatrix<f64>, what: &'static str) -> Result<DMatrix<f64>> {
    let x = lu.solve(rhs).ok_or(Error::Singular(what))?;
    if x.iter().all(|v| v.is_finite()) {
        Ok(x)
    } else {
        Err(Error::Singular(what))
    }
}

/// Direct asset sensitivity `dg/da = [diag(xi); diag(1-xi)]`.
pub fn direct_sensitivity(xi: &SolvencyVector) -> DMatrix<f64> {
    let n = xi.len();
    DMatrix::from_fn(2 * n, n, |k, j| {
        let firm = k % n;
        if firm == j && (k < n) == xi.is_solvent(firm) {
            1.0
        } else {
            0.0
        }
    })
}

/// `W = (I - dg/dx)^{-1}`.
pub fn weighting_matrix(net: &FirmNetwork, xi: &SolvencyVector) -> Result<DMatrix<f64>> {
    let lu = factor(net, xi)?;
    let n = net.n();
    solve(&lu, &DMatrix::identity(2 * n, 2 * n), "I - dg/dx")
}

pub fn claims_sensitivity(net: &FirmNetwork, xi: &SolvencyVector) -> Result<ClaimsJacobian> {
    let lu = factor(net, xi)?;
    let dxda = solve(&lu, &direct_sensitivity(xi), "I - dg/dx")?;
    Ok(ClaimsJacobian {
        dxda,
        xi: xi.clone(),
    })
}

/// Threat index `mu^T = 1^T (I - diag(1-xi) M^d)^{-1} diag(1-xi)`, the
/// derivative of aggregate debt repayments with respect to each external
/// asset. Defined for debt-only networks.
pub fn threat_index(net: &FirmNetwork, xi: &SolvencyVector) -> Result<DVector<f64>> {
    check_xi(net, xi)?;
    if !net.is_debt_only() {
        return Err(Error::param(
            "network",
            "threat index is defined for debt-only networks (M^s = 0)",
        ));
    }
    let n = net.n();
    let default = DVector::from_fn(n, |i, _| if xi.is_solvent(i) { 0.0 } else { 1.0 });
    // Transposed system: (I - M^d^T diag(1-xi)) y = 1, mu = diag(1-xi) y.
    let m_t = net.debt_holdings().transpose();
    let system = DMatrix::identity(n, n) - DMatrix::from_fn(n, n, |i, j| m_t[(i, j)] * default[j]);
    let y = solve(&system.lu(), &DMatrix::from_element(n, 1, 1.0), "I - diag(1-xi) M^d")?;
    Ok(DVector::from_fn(n, |i, _| default[i] * y[(i, 0)]))
}

/// Per-scenario aggregate impact `1^T W [diag(xi); diag(1-xi)]`, i.e. the
/// column sums of `dx*/da`.
pub fn aggregate_impact(net: &FirmNetwork, xi: &SolvencyVector) -> Result<DVector<f64>> {
    let jac = claims_sensitivity(net, xi)?;
    Ok(crate::network::column_sums(&jac.dxda))
}

/// Sensitivity of outside-investor values to external assets,
/// `diag(1 - colsum M^s) u^s + diag(1 - colsum M^d) u^d`. Every column
/// sums to one.
pub fn outside_sensitivity(net: &FirmNetwork, xi: &SolvencyVector) -> Result<DMatrix<f64>> {
    let jac = claims_sensitivity(net, xi)?;
    Ok(outside_from_jacobian(net, &jac))
}

pub(crate) fn outside_from_jacobian(net: &FirmNetwork, jac: &ClaimsJacobian) -> DMatrix<f64> {
    let n = net.n();
    let cs = net.equity_column_sums();
    let cd = net.debt_column_sums();
    DMatrix::from_fn(n, n, |i, j| {
        (1.0 - cs[i]) * jac.dxda[(i, j)] + (1.0 - cd[i]) * jac.dxda[(n + i, j)]
    })
}

/// True when some firm value is within `rel_eps * d_i` of its nominal debt,
/// where the fixed point is not differentiable.
pub fn on_boundary(net: &FirmNetwork, a: &DVector<f64>, claims: &ClaimVector, rel_eps: f64) -> bool {
    let mut v = a.clone();
    v.gemv(1.0, net.equity_holdings(), &claims.s, 1.0);
    v.gemv(1.0, net.debt_holdings(), &claims.r, 1.0);
    v.iter()
        .zip(net.nominal_debt().iter())
        .any(|(v, d)| (v - d).abs() <= rel_eps * d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sym_debt(n: usize, w: f64) -> FirmNetwork {
        FirmNetwork::symmetric(n, 0.0, w, 1.0).unwrap()
    }

    fn three_firm() -> FirmNetwork {
        let m_s = DMatrix::from_row_slice(3, 3, &[0.0, 0.2, 0.1, 0.3, 0.0, 0.0, 0.1, 0.4, 0.0]);
        let m_d = DMatrix::from_row_slice(3, 3, &[0.0, 0.5, 0.2, 0.1, 0.0, 0.3, 0.2, 0.1, 0.0]);
        FirmNetwork::new(m_s, m_d, DVector::from_vec(vec![1.0, 2.0, 0.5])).unwrap()
    }

    #[test]
    fn jacobian_blocks() {
        let net = three_firm();
        let n = 3;
        assert_eq!(
            jacobian_g(&FirmNetwork::unconnected(DVector::from_element(3, 1.0)).unwrap(), &SolvencyVector::all_solvent(3)),
            DMatrix::zeros(6, 6)
        );
        let up = jacobian_g(&net, &SolvencyVector::all_solvent(n));
        assert_eq!(up.view((0, 0), (n, n)), net.equity_holdings().view((0, 0), (n, n)));
        assert_eq!(up.view((0, n), (n, n)), net.debt_holdings().view((0, 0), (n, n)));
        assert_eq!(up.rows(n, n).into_owned(), DMatrix::zeros(n, 2 * n));
        let down = jacobian_g(&net, &SolvencyVector::all_insolvent(n));
        assert_eq!(down.rows(0, n).into_owned(), DMatrix::zeros(n, 2 * n));
        assert_eq!(down.view((n, 0), (n, n)), net.equity_holdings().view((0, 0), (n, n)));
        assert_eq!(down.view((n, n), (n, n)), net.debt_holdings().view((0, 0), (n, n)));
    }

    #[test]
    fn weighting_is_identity_without_holdings() {
        let net = FirmNetwork::unconnected(DVector::from_element(3, 1.0)).unwrap();
        let xi = SolvencyVector::new(vec![true, false, true]);
        assert_eq!(weighting_matrix(&net, &xi).unwrap(), DMatrix::identity(6, 6));
    }

    #[test]
    fn debt_invisible_when_all_solvent() {
        let m_d = DMatrix::from_row_slice(3, 3, &[0.0, 0.5, 0.2, 0.1, 0.0, 0.3, 0.2, 0.1, 0.0]);
        let net = FirmNetwork::debt_only(m_d, DVector::from_element(3, 1.0)).unwrap();
        let jac = claims_sensitivity(&net, &SolvencyVector::all_solvent(3)).unwrap();
        assert_relative_eq!(jac.equity_block(), DMatrix::identity(3, 3), epsilon = 1e-15);
        assert_eq!(jac.debt_block(), DMatrix::zeros(3, 3));
    }

    #[test]
    fn insolvent_debt_block_is_geometric_series() {
        let net = sym_debt(2, 0.4);
        let w = weighting_matrix(&net, &SolvencyVector::all_insolvent(2)).unwrap();
        let block = w.view((2, 2), (2, 2));
        for i in 0..2 {
            assert_relative_eq!(block.row(i).sum(), 1.0 / 0.6, epsilon = 1e-14);
        }
    }

    #[test]
    fn limit_cases_of_sensitivity() {
        let net = three_firm();
        let n = 3;
        let id = DMatrix::<f64>::identity(n, n);
        let solv = claims_sensitivity(&net, &SolvencyVector::all_solvent(n)).unwrap();
        let expect = (&id - net.equity_holdings()).try_inverse().unwrap();
        assert_relative_eq!(solv.equity_block(), expect, epsilon = 1e-13);
        assert_relative_eq!(solv.debt_block(), DMatrix::zeros(n, n));

        let ins = claims_sensitivity(&net, &SolvencyVector::all_insolvent(n)).unwrap();
        let expect = (&id - net.debt_holdings()).try_inverse().unwrap();
        assert_relative_eq!(ins.debt_block(), expect, epsilon = 1e-13);
        assert_relative_eq!(ins.equity_block(), DMatrix::zeros(n, n));
    }

    #[test]
    fn threat_index_cases() {
        let net = sym_debt(4, 0.4);
        assert_eq!(threat_index(&net, &SolvencyVector::all_solvent(4)).unwrap(), DVector::zeros(4));
        let mu = threat_index(&net, &SolvencyVector::all_insolvent(4)).unwrap();
        for m in mu.iter() {
            assert_relative_eq!(*m, 1.0 / 0.6, epsilon = 1e-14);
        }
        let single = FirmNetwork::unconnected(DVector::from_element(1, 1.0)).unwrap();
        let mu = threat_index(&single, &SolvencyVector::all_insolvent(1)).unwrap();
        assert_eq!(mu[0], 1.0);
        assert!(threat_index(&three_firm(), &SolvencyVector::all_solvent(3)).is_err());
    }

    #[test]
    fn threat_index_is_debt_block_column_sum() {
        let m_d = DMatrix::from_row_slice(3, 3, &[0.0, 0.5, 0.2, 0.1, 0.0, 0.3, 0.2, 0.1, 0.0]);
        let net = FirmNetwork::debt_only(m_d, DVector::from_element(3, 1.0)).unwrap();
        let xi = SolvencyVector::new(vec![false, true, false]);
        let mu = threat_index(&net, &xi).unwrap();
        let jac = claims_sensitivity(&net, &xi).unwrap();
        let sums = crate::network::column_sums(&jac.debt_block());
        assert_relative_eq!(mu, sums, epsilon = 1e-14);
    }

    #[test]
    fn aggregate_impact_cases() {
        let none = FirmNetwork::unconnected(DVector::from_element(3, 1.0)).unwrap();
        let xi = SolvencyVector::new(vec![true, false, true]);
        assert_eq!(aggregate_impact(&none, &xi).unwrap(), DVector::from_element(3, 1.0));

        let net = sym_debt(3, 0.4);
        let solv = aggregate_impact(&net, &SolvencyVector::all_solvent(3)).unwrap();
        assert_relative_eq!(solv, DVector::from_element(3, 1.0), epsilon = 1e-14);
        let ins = aggregate_impact(&net, &SolvencyVector::all_insolvent(3)).unwrap();
        assert_relative_eq!(ins, DVector::from_element(3, 1.0 / 0.6), epsilon = 1e-14);
    }

    #[test]
    fn outside_sensitivity_cases() {
        let none = FirmNetwork::unconnected(DVector::from_element(2, 1.0)).unwrap();
        let o = outside_sensitivity(&none, &SolvencyVector::new(vec![true, false])).unwrap();
        assert_eq!(o, DMatrix::identity(2, 2));

        // Two firms, debt only, both insolvent: (I - M^d)^{-1} = [[1, .4], [.4, 1]] / 0.84,
        // outside fraction of each firm's debt is 0.6.
        let net = sym_debt(2, 0.4);
        let o = outside_sensitivity(&net, &SolvencyVector::all_insolvent(2)).unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[0.6 / 0.84, 0.24 / 0.84, 0.24 / 0.84, 0.6 / 0.84]);
        assert_relative_eq!(o, expect, epsilon = 1e-14);
        for j in 0..2 {
            assert_relative_eq!(o.column(j).sum(), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn outside_sensitivity_mixed_columns_sum_to_one() {
        let net = three_firm();
        for bits in 0..8u8 {
            let xi = SolvencyVector::new((0..3).map(|i| bits >> i & 1 == 1).collect());
            let o = outside_sensitivity(&net, &xi).unwrap();
            for j in 0..3 {
                assert_relative_eq!(o.column(j).sum(), 1.0, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn singular_system_is_reported() {
        // Columns 0 and 1 fully held inside a closed pair: spectral radius one.
        let m_s = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let net = FirmNetwork::new(m_s, DMatrix::zeros(3, 3), DVector::from_element(3, 1.0)).unwrap();
        let err = weighting_matrix(&net, &SolvencyVector::all_solvent(3)).unwrap_err();
        assert!(matches!(err, Error::Singular(_)));
    }

    #[test]
    fn boundary_flag() {
        let net = FirmNetwork::unconnected(DVector::from_element(1, 1.0)).unwrap();
        let claims = ClaimVector::new(DVector::zeros(1), DVector::from_element(1, 1.0)).unwrap();
        assert!(on_boundary(&net, &DVector::from_element(1, 1.0), &claims, BOUNDARY_EPS));
        assert!(!on_boundary(&net, &DVector::from_element(1, 1.1), &claims, BOUNDARY_EPS));
    }
}
