use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixpoint::FixedPointConfig;
use crate::gbm::GbmParams;
use crate::netgen::SinkhornConfig;
use crate::network::{FirmNetwork, NetworkFile};

/// A parameter axis: an explicit list or an inclusive arithmetic range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl Grid {
    pub fn values(&self) -> Result<Vec<f64>> {
        let out = match self {
            Grid::List(v) => v.clone(),
            Grid::Range { start, stop, step } => {
                if !(*step > 0.0 && step.is_finite() && start.is_finite() && stop.is_finite()) {
                    return Err(Error::Config(format!("bad range {start}..{stop} step {step}")));
                }
                let count = ((stop - start) / step + 1e-9).floor();
                if count < 0.0 {
                    return Err(Error::Config(format!("empty range {start}..{stop}")));
                }
                // Round away the accumulated binary noise of start + i * step.
                (0..=count as usize)
                    .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
                    .collect()
            }
        };
        if out.is_empty() {
            return Err(Error::Config("grid must not be empty".into()));
        }
        if out.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("grid values must be finite".into()));
        }
        Ok(out)
    }
}

impl From<Vec<f64>> for Grid {
    fn from(v: Vec<f64>) -> Self {
        Grid::List(v)
    }
}

/// One value shared by all firms, or one per firm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PerFirm {
    Scalar(f64),
    Vector(Vec<f64>),
}

impl PerFirm {
    pub fn to_vector(&self, n: usize, name: &'static str) -> Result<DVector<f64>> {
        match self {
            PerFirm::Scalar(x) => Ok(DVector::from_element(n, *x)),
            PerFirm::Vector(v) if v.len() == n => Ok(DVector::from_column_slice(v)),
            PerFirm::Vector(v) => Err(Error::DimensionMismatch {
                what: name,
                expected: n,
                got: v.len(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorrelationKind {
    Independent,
    Comonotone,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Correlation {
    Named(CorrelationKind),
    /// Equal pairwise correlation.
    Uniform { uniform: f64 },
    Matrix(Vec<Vec<f64>>),
}

impl Default for Correlation {
    fn default() -> Self {
        Correlation::Named(CorrelationKind::Independent)
    }
}

impl Correlation {
    pub fn matrix(&self, n: usize) -> Result<DMatrix<f64>> {
        match self {
            Correlation::Named(CorrelationKind::Independent) => Ok(DMatrix::identity(n, n)),
            Correlation::Named(CorrelationKind::Comonotone) => Ok(DMatrix::from_element(n, n, 1.0)),
            Correlation::Uniform { uniform } => {
                Ok(DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { *uniform }))
            }
            Correlation::Matrix(rows) => {
                if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                    return Err(Error::DimensionMismatch {
                        what: "correlation matrix",
                        expected: n,
                        got: rows.len(),
                    });
                }
                Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymmetricNetworkSpec {
    pub n: usize,
    pub w_s: f64,
    pub w_d: f64,
    #[serde(default = "one")]
    pub d: f64,
}

/// Where a network comes from: inline, a JSON file, or the symmetric family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NetworkSource {
    Inline(NetworkFile),
    File { path: PathBuf },
    Symmetric { symmetric: SymmetricNetworkSpec },
}

impl NetworkSource {
    pub fn load(&self) -> Result<FirmNetwork> {
        match self {
            NetworkSource::Inline(file) => file.clone().into_network(),
            NetworkSource::File { path } => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| Error::Config(format!("cannot read network {}: {e}", path.display())))?;
                FirmNetwork::from_json(&text)
            }
            NetworkSource::Symmetric { symmetric: s } => FirmNetwork::symmetric(s.n, s.w_s, s.w_d, s.d),
        }
    }
}

fn one() -> f64 {
    1.0
}
fn default_fractions() -> Grid {
    Grid::List(vec![0.0, 0.2, 0.4, 0.6])
}
fn default_sigmas() -> Grid {
    Grid::List(vec![0.1, 0.4])
}
fn default_symmetric_a() -> Grid {
    Grid::Range {
        start: 0.1,
        stop: 2.5,
        step: 0.1,
    }
}
fn two_firm_w() -> f64 {
    0.95
}
fn two_firm_d() -> f64 {
    11.3
}
fn two_firm_draws() -> u64 {
    10_000
}
fn sweep_sigma() -> f64 {
    0.4
}
fn sweep_draws() -> u64 {
    700
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SymmetricGridConfig {
    #[serde(default = "default_symmetric_a")]
    pub a: Grid,
    #[serde(default = "default_fractions")]
    pub w_s: Grid,
    #[serde(default = "default_fractions")]
    pub w_d: Grid,
    #[serde(default = "default_sigmas")]
    pub sigma: Grid,
    #[serde(default = "one")]
    pub d: f64,
    #[serde(default)]
    pub rate: f64,
    #[serde(default = "one")]
    pub tau: f64,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoFirmConfig {
    /// Mutual debt holding `w_12 = w_21`.
    #[serde(default = "two_firm_w")]
    pub w: f64,
    #[serde(default = "two_firm_d")]
    pub d: f64,
    #[serde(default = "one")]
    pub a0: f64,
    #[serde(default = "one")]
    pub sigma: f64,
    #[serde(default)]
    pub rate: f64,
    #[serde(default = "one")]
    pub tau: f64,
    /// Correlation of the two external assets.
    #[serde(default)]
    pub asset_corr: f64,
    #[serde(default = "two_firm_draws")]
    pub draws: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub fixed_point: FixedPointConfig,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl Default for TwoFirmConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ErSweepConfig {
    pub n: usize,
    pub networks: usize,
    #[serde(default = "sweep_draws")]
    pub draws: u64,
    #[serde(default)]
    pub seed: u64,
    pub k_mean: Grid,
    pub w_d: Grid,
    pub a0: Grid,
    #[serde(default = "sweep_sigma")]
    pub sigma: f64,
    #[serde(default)]
    pub rate: f64,
    #[serde(default = "one")]
    pub tau: f64,
    #[serde(default = "one")]
    pub d: f64,
    /// Row/column balancing of the weights; column scaling only if absent.
    #[serde(default)]
    pub sinkhorn: Option<SinkhornConfig>,
    #[serde(default)]
    pub fixed_point: FixedPointConfig,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

/// Market description shared by the single-network experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClaimsConfig {
    pub network: NetworkSource,
    pub spot: PerFirm,
    pub sigma: PerFirm,
    #[serde(default)]
    pub rate: f64,
    #[serde(default = "one")]
    pub tau: f64,
    #[serde(default)]
    pub corr: Correlation,
    pub draws: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub fixed_point: FixedPointConfig,
    /// Firm-value volatility assumed by the local valuation; required by
    /// `local-compare` only.
    #[serde(default)]
    pub firm_vol: Option<PerFirm>,
    #[serde(default)]
    pub out: Option<PathBuf>,
}

impl ClaimsConfig {
    pub fn market(&self) -> Result<(FirmNetwork, GbmParams)> {
        let net = self.network.load()?;
        let n = net.n();
        let params = GbmParams::new(
            self.spot.to_vector(n, "spot")?,
            self.sigma.to_vector(n, "sigma")?,
            self.rate,
            self.tau,
            self.corr.matrix(n)?,
        )?;
        Ok((net, params))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ExperimentConfig {
    SymmetricGrid(SymmetricGridConfig),
    TwoFirm(TwoFirmConfig),
    ErSweep(ErSweepConfig),
    Price(ClaimsConfig),
    Greeks(ClaimsConfig),
    LocalCompare(ClaimsConfig),
}

impl ExperimentConfig {
    /// Parses a config and resolves relative network paths against the
    /// config file's directory.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_json(&text)?;
        if let Some(dir) = path.parent() {
            cfg.resolve_paths(dir);
        }
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    fn resolve_paths(&mut self, dir: &Path) {
        let market = match self {
            ExperimentConfig::Price(c) | ExperimentConfig::Greeks(c) | ExperimentConfig::LocalCompare(c) => c,
            _ => return,
        };
        if let NetworkSource::File { path } = &mut market.network {
            if path.is_relative() {
                *path = dir.join(&*path);
            }
        }
    }

    /// Subcommand name of this experiment.
    pub fn kind(&self) -> &'static str {
        match self {
            ExperimentConfig::SymmetricGrid(_) => "symmetric-grid",
            ExperimentConfig::TwoFirm(_) => "two-firm",
            ExperimentConfig::ErSweep(_) => "er-sweep",
            ExperimentConfig::Price(_) => "price",
            ExperimentConfig::Greeks(_) => "greeks",
            ExperimentConfig::LocalCompare(_) => "local-compare",
        }
    }

    pub fn out(&self) -> Option<&Path> {
        match self {
            ExperimentConfig::SymmetricGrid(c) => c.out.as_deref(),
            ExperimentConfig::TwoFirm(c) => c.out.as_deref(),
            ExperimentConfig::ErSweep(c) => c.out.as_deref(),
            ExperimentConfig::Price(c) | ExperimentConfig::Greeks(c) | ExperimentConfig::LocalCompare(c) => {
                c.out.as_deref()
            }
        }
    }

    /// Applies command-line overrides. Seed and draw count have no effect on
    /// the analytic symmetric grid.
    pub fn apply_overrides(&mut self, seed: Option<u64>, draws: Option<u64>, out: Option<PathBuf>) {
        match self {
            ExperimentConfig::SymmetricGrid(c) => {
                c.out = out.or(c.out.take());
            }
            ExperimentConfig::TwoFirm(c) => {
                c.seed = seed.unwrap_or(c.seed);
                c.draws = draws.unwrap_or(c.draws);
                c.out = out.or(c.out.take());
            }
            ExperimentConfig::ErSweep(c) => {
                c.seed = seed.unwrap_or(c.seed);
                c.draws = draws.unwrap_or(c.draws);
                c.out = out.or(c.out.take());
            }
            ExperimentConfig::Price(c) | ExperimentConfig::Greeks(c) | ExperimentConfig::LocalCompare(c) => {
                c.seed = seed.unwrap_or(c.seed);
                c.draws = draws.unwrap_or(c.draws);
                c.out = out.or(c.out.take());
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn range_grid_is_inclusive_and_clean() {
        let g = Grid::Range {
            start: 0.1,
            stop: 2.5,
            step: 0.1,
        };
        let v = g.values().unwrap();
        assert_eq!(v.len(), 25);
        assert_eq!(v[2], 0.3);
        assert_eq!(*v.last().unwrap(), 2.5);
        assert!(Grid::List(vec![]).values().is_err());
        assert!(Grid::Range { start: 1.0, stop: 0.0, step: 0.1 }.values().is_err());
    }

    #[test]
    fn parses_each_kind() {
        let sym = ExperimentConfig::from_json(r#"{"kind": "symmetric-grid", "a": [1.0], "sigma": {"start": 0.1, "stop": 0.4, "step": 0.3}}"#).unwrap();
        assert_eq!(sym.kind(), "symmetric-grid");
        let two = ExperimentConfig::from_json(r#"{"kind": "two-firm", "seed": 3}"#).unwrap();
        match two {
            ExperimentConfig::TwoFirm(c) => {
                assert_eq!((c.w, c.d, c.draws, c.seed), (0.95, 11.3, 10_000, 3));
            }
            _ => panic!(),
        }
        let greeks = ExperimentConfig::from_json(
            r#"{"kind": "greeks", "network": {"symmetric": {"n": 3, "w_s": 0.2, "w_d": 0.4}},
                "spot": 1.0, "sigma": [0.1, 0.2, 0.3], "corr": "comonotone", "draws": 100}"#,
        )
        .unwrap();
        match greeks {
            ExperimentConfig::Greeks(c) => {
                let (net, p) = c.market().unwrap();
                assert_eq!(net.n(), 3);
                assert_eq!(p.corr(), &DMatrix::from_element(3, 3, 1.0));
            }
            _ => panic!(),
        }
        let local = ExperimentConfig::from_json(
            r#"{"kind": "local-compare", "network": {"n": 2, "m_s": [[0,0],[0,0]], "m_d": [[0,0.5],[0.2,0]], "d": [1,1]},
                "spot": 1.0, "sigma": 0.3, "corr": {"uniform": 0.5}, "draws": 100, "firm_vol": 0.3}"#,
        )
        .unwrap();
        assert_eq!(local.kind(), "local-compare");
    }

    #[test]
    fn rejects_unknown_fields_and_kinds() {
        assert!(ExperimentConfig::from_json(r#"{"kind": "two-firm", "drawz": 3}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"kind": "nope"}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"kind": "er-sweep", "n": 3}"#).is_err());
    }

    #[test]
    fn overrides() {
        let mut cfg = ExperimentConfig::from_json(r#"{"kind": "two-firm"}"#).unwrap();
        cfg.apply_overrides(Some(9), Some(50), Some("x.csv".into()));
        match &cfg {
            ExperimentConfig::TwoFirm(c) => assert_eq!((c.seed, c.draws), (9, 50)),
            _ => panic!(),
        }
        assert_eq!(cfg.out(), Some(Path::new("x.csv")));
    }

    #[test]
    fn per_firm_length_checked() {
        assert!(PerFirm::Vector(vec![1.0, 2.0]).to_vector(3, "spot").is_err());
        assert_eq!(PerFirm::Scalar(2.0).to_vector(2, "spot").unwrap(), DVector::from_element(2, 2.0));
    }
}
