//! Random debt cross-holding networks on directed Erdős–Rényi graphs.
//!
//! Edge `i -> j` means firm `i` holds part of firm `j`'s debt. Every
//! nonempty column is scaled to sum to `w_d`; optionally rows are balanced
//! too by Sinkhorn-Knopp iteration with rejection of infeasible supports.
//!
//! Edges are decided by comparing one uniform per ordered pair against
//! `p = k_mean / (n - 1)`, drawn in a fixed order from the member seed. The
//! same member seed therefore yields nested graphs as `k_mean` grows.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::FirmNetwork;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinkhornConfig {
    /// Maximum absolute deviation of any nonzero row or column sum.
    pub tol: f64,
    pub max_iter: usize,
    /// Fresh graphs drawn before giving up on a member.
    pub max_rejections: usize,
}

impl Default for SinkhornConfig {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 10_000,
            max_rejections: 100,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub n: usize,
    pub k_mean: f64,
    pub w_d: f64,
    pub networks: usize,
    pub seed: u64,
    #[serde(default = "unit_debt")]
    pub d: f64,
    /// Row/column balancing; column scaling only when absent.
    #[serde(default)]
    pub sinkhorn: Option<SinkhornConfig>,
}

fn unit_debt() -> f64 {
    1.0
}

impl EnsembleSpec {
    pub fn new(n: usize, k_mean: f64, w_d: f64, networks: usize, seed: u64) -> Result<Self> {
        let spec = Self {
            n,
            k_mean,
            w_d,
            networks,
            seed,
            d: 1.0,
            sinkhorn: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::param("n", format!("need at least two firms, got {}", self.n)));
        }
        let p = self.edge_probability();
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::param("k_mean", format!("edge probability {p} outside [0, 1]")));
        }
        if !(0.0..1.0).contains(&self.w_d) {
            return Err(Error::param("w_d", format!("must lie in [0, 1), got {}", self.w_d)));
        }
        if !(self.d > 0.0 && self.d.is_finite()) {
            return Err(Error::param("d", "nominal debt must be positive"));
        }
        Ok(())
    }

    /// `k_mean / (n - 1)`.
    pub fn edge_probability(&self) -> f64 {
        self.k_mean / (self.n as f64 - 1.0)
    }
}

/// Seed of ensemble member `index`, a splitmix64 mix of the base seed and
/// the index.
pub fn member_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Directed adjacency without self-loops; `attempt` selects an independent
/// stream for rejection resampling.
pub fn er_adjacency(n: usize, p: f64, seed: u64, attempt: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(attempt);
    let mut adj = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let u: f64 = rng.random();
            if u < p {
                adj[(i, j)] = 1.0;
            }
        }
    }
    adj
}

/// Scales each nonempty column to sum to `w`.
pub fn scale_columns(adj: &DMatrix<f64>, w: f64) -> DMatrix<f64> {
    let mut m = adj.clone();
    for mut col in m.column_iter_mut() {
        let s = col.sum();
        if s > 0.0 {
            col *= w / s;
        }
    }
    m
}

#[derive(Debug, Clone, PartialEq)]
pub struct Balanced {
    pub matrix: DMatrix<f64>,
    pub iterations: usize,
}

fn max_deviation(m: &DMatrix<f64>, row_target: f64, col_target: f64) -> f64 {
    let rows = m.row_iter().map(|r| r.sum()).filter(|s| *s > 0.0).map(|s| (s - row_target).abs());
    let cols = m.column_iter().map(|c| c.sum()).filter(|s| *s > 0.0).map(|s| (s - col_target).abs());
    rows.chain(cols).fold(0.0, f64::max)
}

/// Alternately rescales nonzero rows and columns until all their sums are
/// within `tol` of the targets. The zero pattern is never changed.
pub fn sinkhorn_balance(
    m: &DMatrix<f64>,
    row_target: f64,
    col_target: f64,
    tol: f64,
    max_iter: usize,
) -> Result<Balanced> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch {
            what: "balancing matrix columns",
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    if m.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
        return Err(Error::param("m", "entries must be non-negative and finite"));
    }
    if max_deviation(m, row_target, col_target) <= tol {
        return Ok(Balanced {
            matrix: m.clone(),
            iterations: 0,
        });
    }
    let nonzero_rows = m.row_iter().filter(|r| r.sum() > 0.0).count();
    let nonzero_cols = m.column_iter().filter(|c| c.sum() > 0.0).count();
    if (nonzero_rows as f64 * row_target - nonzero_cols as f64 * col_target).abs() > tol {
        return Err(Error::Balancing(format!(
            "support has {nonzero_rows} nonzero rows and {nonzero_cols} nonzero columns; targets cannot both hold"
        )));
    }
    let mut out = m.clone();
    for iter in 1..=max_iter {
        for mut row in out.row_iter_mut() {
            let s = row.sum();
            if s > 0.0 {
                row *= row_target / s;
            }
        }
        for mut col in out.column_iter_mut() {
            let s = col.sum();
            if s > 0.0 {
                col *= col_target / s;
            }
        }
        let dev = max_deviation(&out, row_target, col_target);
        if dev <= tol {
            return Ok(Balanced {
                matrix: out,
                iterations: iter,
            });
        }
        if !dev.is_finite() {
            break;
        }
    }
    Err(Error::Balancing(format!("no convergence within {max_iter} iterations")))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleMember {
    pub index: usize,
    pub seed: u64,
    /// Graphs drawn, including rejected ones.
    pub attempts: usize,
    pub network: FirmNetwork,
}

/// One member network for the given member seed.
pub fn er_network(spec: &EnsembleSpec, seed: u64) -> Result<(FirmNetwork, usize)> {
    spec.validate()?;
    let n = spec.n;
    let p = spec.edge_probability();
    let debt = DVector::from_element(n, spec.d);
    match spec.sinkhorn {
        None => {
            let m_d = scale_columns(&er_adjacency(n, p, seed, 0), spec.w_d);
            Ok((FirmNetwork::debt_only(m_d, debt)?, 1))
        }
        Some(cfg) => {
            let mut last = None;
            for attempt in 0..=cfg.max_rejections {
                let adj = er_adjacency(n, p, seed, attempt as u64);
                match sinkhorn_balance(&adj, spec.w_d, spec.w_d, cfg.tol, cfg.max_iter) {
                    Ok(b) => return Ok((FirmNetwork::debt_only(b.matrix, debt)?, attempt + 1)),
                    Err(e) => last = Some(e),
                }
            }
            Err(Error::Balancing(format!(
                "member seed {seed}: every one of {} draws rejected ({})",
                cfg.max_rejections + 1,
                last.map(|e| e.to_string()).unwrap_or_default()
            )))
        }
    }
}

/// All members of an ensemble, in index order.
pub fn ensemble(spec: &EnsembleSpec) -> Result<Vec<EnsembleMember>> {
    spec.validate()?;
    (0..spec.networks)
        .into_par_iter()
        .map(|index| {
            let seed = member_seed(spec.seed, index as u64);
            let (network, attempts) = er_network(spec, seed)?;
            Ok(EnsembleMember {
                index,
                seed,
                attempts,
                network,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleManifest {
    pub spec: EnsembleSpec,
    pub members: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub index: usize,
    pub seed: u64,
    pub attempts: usize,
}

pub fn manifest(spec: &EnsembleSpec, members: &[EnsembleMember]) -> EnsembleManifest {
    EnsembleManifest {
        spec: *spec,
        members: members
            .iter()
            .map(|m| ManifestEntry {
                index: m.index,
                seed: m.seed,
                attempts: m.attempts,
            })
            .collect(),
    }
}
