//! Cross-holding networks and their accounting identities.
//!
//! Entry `(i, j)` of a holding matrix is the fraction of firm `j`'s equity
//! (or debt) held by firm `i`. Columns therefore describe who holds an
//! issuer's claims, and a column sum is the fraction of that issuer held
//! inside the network.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack used when comparing floating column sums against one.
pub const COLUMN_SUM_SLACK: f64 = 1e-12;

/// A validated network of `n` firms with equity and debt cross-holdings.
///
/// Construction enforces the holding constraints, so downstream code can
/// rely on them without re-checking.
#[derive(Debug, Clone, PartialEq)]
pub struct FirmNetwork {
    m_s: DMatrix<f64>,
    m_d: DMatrix<f64>,
    d: DVector<f64>,
    debt_only: bool,
}

impl FirmNetwork {
    pub fn new(m_s: DMatrix<f64>, m_d: DMatrix<f64>, d: DVector<f64>) -> Result<Self> {
        let report = validate_network(&m_s, &m_d, &d);
        if !report.passed() {
            return Err(Error::InvalidNetwork(report.failures().join("; ")));
        }
        let debt_only = m_s.iter().all(|&x| x == 0.0);
        Ok(Self {
            m_s,
            m_d,
            d,
            debt_only,
        })
    }

    /// Network with debt cross-holdings only (`M^s = 0`).
    pub fn debt_only(m_d: DMatrix<f64>, d: DVector<f64>) -> Result<Self> {
        let n = d.len();
        Self::new(DMatrix::zeros(n, n), m_d, d)
    }

    /// `n` identical firms, each holding `w_s/(n-1)` of every other firm's
    /// equity and `w_d/(n-1)` of its debt, all with nominal debt `d`.
    pub fn symmetric(n: usize, w_s: f64, w_d: f64, d: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::param("n", "symmetric network needs at least two firms"));
        }
        let off = |w: f64| {
            DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { w / (n as f64 - 1.0) })
        };
        Self::new(off(w_s), off(w_d), DVector::from_element(n, d))
    }

    /// Firms without any cross-holdings.
    pub fn unconnected(d: DVector<f64>) -> Result<Self> {
        let n = d.len();
        Self::new(DMatrix::zeros(n, n), DMatrix::zeros(n, n), d)
    }

    pub fn n(&self) -> usize {
        self.d.len()
    }

    pub fn equity_holdings(&self) -> &DMatrix<f64> {
        &self.m_s
    }

    pub fn debt_holdings(&self) -> &DMatrix<f64> {
        &self.m_d
    }

    pub fn nominal_debt(&self) -> &DVector<f64> {
        &self.d
    }

    pub fn is_debt_only(&self) -> bool {
        self.debt_only
    }

    /// Fraction of each firm's equity held inside the network.
    pub fn equity_column_sums(&self) -> DVector<f64> {
        column_sums(&self.m_s)
    }

    pub fn debt_column_sums(&self) -> DVector<f64> {
        column_sums(&self.m_d)
    }

    pub(crate) fn check_len(&self, what: &'static str, len: usize) -> Result<()> {
        if len != self.n() {
            return Err(Error::DimensionMismatch {
                what,
                expected: self.n(),
                got: len,
            });
        }
        Ok(())
    }

    /// Checks that an external asset vector matches the network and is
    /// strictly positive.
    pub fn check_assets(&self, a: &DVector<f64>) -> Result<()> {
        self.check_len("asset vector", a.len())?;
        if let Some((i, &v)) = a.iter().enumerate().find(|(_, &v)| !(v > 0.0 && v.is_finite())) {
            return Err(Error::param(
                "assets",
                format!("external asset {i} must be positive and finite, got {v}"),
            ));
        }
        Ok(())
    }

    pub fn to_file(&self) -> NetworkFile {
        NetworkFile {
            n: self.n(),
            m_s: to_rows(&self.m_s),
            m_d: to_rows(&self.m_d),
            d: self.d.iter().copied().collect(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: NetworkFile = serde_json::from_str(text)?;
        file.into_network()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }
}

pub(crate) fn column_sums(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(m.ncols(), m.column_iter().map(|c| c.sum()))
}

pub(crate) fn to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

/// On-disk network format. Row `i`, column `j` is the fraction of firm
/// `j`'s claim held by firm `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkFile {
    pub n: usize,
    pub m_s: Vec<Vec<f64>>,
    pub m_d: Vec<Vec<f64>>,
    pub d: Vec<f64>,
}

impl NetworkFile {
    fn matrix(&self, name: &'static str, rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
        if rows.len() != self.n {
            return Err(Error::DimensionMismatch {
                what: name,
                expected: self.n,
                got: rows.len(),
            });
        }
        if let Some(row) = rows.iter().find(|r| r.len() != self.n) {
            return Err(Error::DimensionMismatch {
                what: name,
                expected: self.n,
                got: row.len(),
            });
        }
        Ok(DMatrix::from_fn(self.n, self.n, |i, j| rows[i][j]))
    }

    pub fn matrices(&self) -> Result<(DMatrix<f64>, DMatrix<f64>, DVector<f64>)> {
        let m_s = self.matrix("m_s", &self.m_s)?;
        let m_d = self.matrix("m_d", &self.m_d)?;
        if self.d.len() != self.n {
            return Err(Error::DimensionMismatch {
                what: "d",
                expected: self.n,
                got: self.d.len(),
            });
        }
        Ok((m_s, m_d, DVector::from_column_slice(&self.d)))
    }

    pub fn validate(&self) -> Result<ValidationReport> {
        let (m_s, m_d, d) = self.matrices()?;
        Ok(validate_network(&m_s, &m_d, &d))
    }

    pub fn into_network(self) -> Result<FirmNetwork> {
        let (m_s, m_d, d) = self.matrices()?;
        FirmNetwork::new(m_s, m_d, d)
    }
}

/// Outcome of one holding-constraint check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

/// Per-constraint validation outcome for a candidate network.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
    /// Every column of both matrices sums to strictly less than one.
    /// Informational; not required for a valid network.
    pub strict_sub_stochastic: bool,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> Vec<String> {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("{}: {}", c.name, c.detail))
            .collect()
    }
}

/// Check names used in [`ValidationReport`].
pub mod checks {
    pub const DIMENSIONS: &str = "dimensions";
    pub const FINITE: &str = "finite";
    pub const NO_SELF_HOLDING: &str = "no-self-holding";
    pub const NO_SHORT_POSITION: &str = "no-short-position";
    pub const FRACTION_AT_MOST_ONE: &str = "fraction-at-most-one";
    pub const POSITIVE_DEBT: &str = "positive-debt";
    pub const SUB_STOCHASTIC: &str = "sub-stochastic-columns";
    pub const EXTERNAL_HOLDING: &str = "strict-external-holding";
}

fn check(name: &'static str, bad: Vec<String>) -> Check {
    Check {
        name,
        passed: bad.is_empty(),
        detail: if bad.is_empty() {
            "ok".to_string()
        } else {
            bad.join(", ")
        },
    }
}

/// Validates candidate holding matrices and debt vector. Never panics on
/// finite or non-finite input; dimension problems are reported as a failed
/// check and the remaining checks are skipped.
pub fn validate_network(m_s: &DMatrix<f64>, m_d: &DMatrix<f64>, d: &DVector<f64>) -> ValidationReport {
    let n = d.len();
    let mut dims = Vec::new();
    if n == 0 {
        dims.push("network has no firms".to_string());
    }
    for (name, m) in [("m_s", m_s), ("m_d", m_d)] {
        if m.nrows() != n || m.ncols() != n {
            dims.push(format!("{name} is {}x{}, expected {n}x{n}", m.nrows(), m.ncols()));
        }
    }
    if !dims.is_empty() {
        return ValidationReport {
            checks: vec![check(checks::DIMENSIONS, dims)],
            strict_sub_stochastic: false,
        };
    }

    let mats = [("m_s", m_s), ("m_d", m_d)];
    let mut finite = Vec::new();
    let mut self_holding = Vec::new();
    let mut short = Vec::new();
    let mut above_one = Vec::new();
    let mut over_held = Vec::new();
    let mut external = Vec::new();
    let mut strict = true;

    for (name, m) in mats {
        for i in 0..n {
            for j in 0..n {
                let v = m[(i, j)];
                if !v.is_finite() {
                    finite.push(format!("{name}[{i}][{j}] = {v}"));
                    continue;
                }
                if i == j && v != 0.0 {
                    self_holding.push(format!("{name}[{i}][{i}] = {v}"));
                }
                if v < 0.0 {
                    short.push(format!("{name}[{i}][{j}] = {v}"));
                }
                if v > 1.0 {
                    above_one.push(format!("{name}[{i}][{j}] = {v}"));
                }
            }
        }
        let sums = column_sums(m);
        let mut any_external = false;
        for (j, &s) in sums.iter().enumerate() {
            if s > 1.0 + COLUMN_SUM_SLACK {
                over_held.push(format!("{name} column {j} sums to {s}"));
            }
            if s < 1.0 - COLUMN_SUM_SLACK {
                any_external = true;
            } else {
                strict = false;
            }
        }
        if !any_external {
            external.push(format!("every column of {name} sums to one"));
        }
    }
    for (i, &v) in d.iter().enumerate() {
        if !v.is_finite() {
            finite.push(format!("d[{i}] = {v}"));
        }
    }
    let nonpositive_debt = d
        .iter()
        .enumerate()
        .filter(|(_, &v)| v.is_nan() || v <= 0.0)
        .map(|(i, v)| format!("d[{i}] = {v}"))
        .collect();

    let checks = vec![
        check(checks::DIMENSIONS, Vec::new()),
        check(checks::FINITE, finite),
        check(checks::NO_SELF_HOLDING, self_holding),
        check(checks::NO_SHORT_POSITION, short),
        check(checks::FRACTION_AT_MOST_ONE, above_one),
        check(checks::POSITIVE_DEBT, nonpositive_debt),
        check(checks::SUB_STOCHASTIC, over_held),
        check(checks::EXTERNAL_HOLDING, external),
    ];
    let passed = checks.iter().all(|c| c.passed);
    ValidationReport {
        checks,
        strict_sub_stochastic: passed && strict,
    }
}

/// Equity values `s` and debt recovery values `r` of all firms.
#[derive(Debug, Clone, PartialEq)]
pub struct ClaimVector {
    pub s: DVector<f64>,
    pub r: DVector<f64>,
}

impl ClaimVector {
    pub fn new(s: DVector<f64>, r: DVector<f64>) -> Result<Self> {
        if s.len() != r.len() {
            return Err(Error::DimensionMismatch {
                what: "claim vector",
                expected: s.len(),
                got: r.len(),
            });
        }
        Ok(Self { s, r })
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            s: DVector::zeros(n),
            r: DVector::zeros(n),
        }
    }

    pub fn n(&self) -> usize {
        self.s.len()
    }

    /// The stacked vector `x = (s; r)` of length `2n`.
    pub fn stacked(&self) -> DVector<f64> {
        let n = self.n();
        DVector::from_fn(2 * n, |k, _| if k < n { self.s[k] } else { self.r[k - n] })
    }

    pub fn from_stacked(x: &DVector<f64>) -> Result<Self> {
        if !x.len().is_multiple_of(2) {
            return Err(Error::param("x", "stacked claim vector must have even length"));
        }
        let n = x.len() / 2;
        Ok(Self {
            s: x.rows(0, n).into_owned(),
            r: x.rows(n, n).into_owned(),
        })
    }

    /// Sup-norm distance between two claim vectors.
    pub fn distance(&self, other: &ClaimVector) -> f64 {
        self.s
            .iter()
            .zip(other.s.iter())
            .chain(self.r.iter().zip(other.r.iter()))
            .fold(0.0, |m, (a, b)| f64::max(m, (a - b).abs()))
    }

    /// `s >= 0` and `0 <= r <= d` componentwise.
    pub fn is_feasible(&self, d: &DVector<f64>) -> bool {
        self.s.iter().all(|&v| v >= 0.0)
            && self.r.iter().zip(d.iter()).all(|(&r, &d)| (0.0..=d).contains(&r))
    }
}

/// Per-firm solvency indicator `xi_i = 1{v_i > d_i}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct SolvencyVector(Vec<bool>);

impl SolvencyVector {
    pub fn new(xi: Vec<bool>) -> Self {
        Self(xi)
    }

    pub fn all_solvent(n: usize) -> Self {
        Self(vec![true; n])
    }

    pub fn all_insolvent(n: usize) -> Self {
        Self(vec![false; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_solvent(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    /// `xi` as a 0/1 vector.
    pub fn indicator(&self) -> DVector<f64> {
        DVector::from_iterator(self.len(), self.0.iter().map(|&b| if b { 1.0 } else { 0.0 }))
    }

    pub fn defaults(&self) -> usize {
        self.0.iter().filter(|&&b| !b).count()
    }

    /// Componentwise `self <= other` (every firm solvent here is solvent there).
    pub fn le(&self, other: &SolvencyVector) -> bool {
        self.len() == other.len() && self.0.iter().zip(&other.0).all(|(&a, &b)| !a || b)
    }
}

/// Total asset value `v = a + M^s s + M^d r` of each firm.
pub fn firm_value(net: &FirmNetwork, claims: &ClaimVector, a: &DVector<f64>) -> Result<DVector<f64>> {
    net.check_len("asset vector", a.len())?;
    net.check_len("claim vector", claims.n())?;
    Ok(a + &net.m_s * &claims.s + &net.m_d * &claims.r)
}

/// Value of each firm's claims accruing to investors outside the network:
/// `v_out_i = (1 - sum_j M^s_ji) s_i + (1 - sum_j M^d_ji) r_i`.
pub fn outside_value(net: &FirmNetwork, claims: &ClaimVector) -> Result<DVector<f64>> {
    net.check_len("claim vector", claims.n())?;
    let cs = net.equity_column_sums();
    let cd = net.debt_column_sums();
    Ok(DVector::from_fn(net.n(), |i, _| {
        (1.0 - cs[i]) * claims.s[i] + (1.0 - cd[i]) * claims.r[i]
    }))
}
