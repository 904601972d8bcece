//! Monte-Carlo prices and pathwise network Greeks.
//!
//! Each draw solves the ex-post fixed point at `A_T(Z)`, differentiates it
//! exactly through the weighting matrix, and chains the result with the
//! pathwise partials of `A_T`. The discount-factor term only enters `rho`
//! and `Theta`.
//!
//! Draws are processed in fixed-size chunks. Each chunk streams its own
//! mean/variance; chunks are merged by a pairwise tree in index order, so
//! a report depends only on `(seed, draws)` and never on the thread count.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fixpoint::{solve_claims, FixedPointConfig, FixedPointSolution};
use crate::gbm::{sample_terminal, standard_normals, terminal_partials, GbmParams, TerminalDraw, TerminalPartials};
use crate::network::FirmNetwork;
use crate::sensitivity::{claims_sensitivity, on_boundary, ClaimsJacobian, BOUNDARY_EPS};
use crate::stats::{tree_reduce, Accumulator};

/// Draws per reduction leaf.
const CHUNK: u64 = 512;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub draws: u64,
    pub seed: u64,
    #[serde(default)]
    pub fixed_point: FixedPointConfig,
}

impl McConfig {
    pub fn new(draws: u64, seed: u64) -> Self {
        Self {
            draws,
            seed,
            fixed_point: FixedPointConfig::default(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.draws < 2 {
            return Err(Error::param("draws", format!("need at least 2 draws, got {}", self.draws)));
        }
        self.fixed_point.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VectorEstimate {
    pub mean: Vec<f64>,
    pub se: Vec<f64>,
}

/// Row-major matrix estimate: `mean[k][j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixEstimate {
    pub mean: Vec<Vec<f64>>,
    pub se: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceReport {
    /// `x_t = (s_t; r_t)`.
    pub price: VectorEstimate,
    pub draws: u64,
    pub seed: u64,
    pub boundary_hits: u64,
}

/// Monte-Carlo network Greeks. Claim index `k < n` is firm `k`'s equity,
/// `k >= n` is firm `k - n`'s debt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreekReport {
    pub price: VectorEstimate,
    /// `dx_t / da_t`, `2n x n`.
    pub delta: MatrixEstimate,
    /// `dx_t / dsigma_j` per asset volatility, `2n x n`.
    pub vega: MatrixEstimate,
    /// `-dx_t / dtau`.
    pub theta: VectorEstimate,
    /// `dx_t / dr`.
    pub rho: VectorEstimate,
    /// `E[1^T dx*/dA_T]`, the expected aggregate ex-post impact.
    pub pi: VectorEstimate,
    /// `1^T Delta`, column sums of `delta`.
    pub delta_total: VectorEstimate,
    /// `Delta 1`: sensitivity to the same shift applied to every spot.
    pub delta_parallel: VectorEstimate,
    /// `Vega 1`: sensitivity to the same shift applied to every volatility.
    pub vega_parallel: VectorEstimate,
    /// `1 - E[xi]`.
    pub default_prob: VectorEstimate,
    pub draws: u64,
    pub seed: u64,
    pub boundary_hits: u64,
}

impl GreekReport {
    pub fn n(&self) -> usize {
        self.pi.mean.len()
    }
}

/// Expected ex-post sensitivity `E[dx*/da]` (undiscounted) and default
/// probabilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SensitivityEstimate {
    pub dxda: MatrixEstimate,
    pub default_prob: VectorEstimate,
    pub draws: u64,
    pub seed: u64,
    pub boundary_hits: u64,
}

/// Everything known about one draw.
pub struct DrawContext<'a> {
    pub index: u64,
    pub params: &'a GbmParams,
    pub draw: TerminalDraw,
    pub partials: TerminalPartials,
    pub solution: FixedPointSolution,
    pub jacobian: Option<ClaimsJacobian>,
    pub boundary: bool,
}

struct ChunkResult {
    acc: Accumulator,
    boundary_hits: u64,
}

/// Runs `integrand` over every draw and returns the merged statistics.
fn run_draws<F>(
    net: &FirmNetwork,
    params: &GbmParams,
    cfg: &McConfig,
    dim: usize,
    with_jacobian: bool,
    integrand: F,
) -> Result<(Accumulator, u64)>
where
    F: Fn(&DrawContext<'_>, &mut [f64]) + Sync,
{
    cfg.validate()?;
    net.check_len("gbm parameters", params.n())?;
    let n = net.n();
    let chunks = cfg.draws.div_ceil(CHUNK);
    let results: Vec<ChunkResult> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut acc = Accumulator::new(dim);
            let mut buf = vec![0.0; dim];
            let mut boundary_hits = 0;
            let end = ((c + 1) * CHUNK).min(cfg.draws);
            for index in c * CHUNK..end {
                let wrap = |e: Error| Error::Draw {
                    draw: index,
                    source: Box::new(e),
                };
                let z = standard_normals(cfg.seed, index, n);
                let draw = sample_terminal(params, &z).map_err(wrap)?;
                let solution = solve_claims(net, &draw.assets, &cfg.fixed_point).map_err(wrap)?;
                let boundary = on_boundary(net, &draw.assets, &solution.claims, BOUNDARY_EPS);
                boundary_hits += boundary as u64;
                let jacobian = if with_jacobian {
                    Some(claims_sensitivity(net, &solution.xi).map_err(wrap)?)
                } else {
                    None
                };
                let partials = terminal_partials(params, &draw);
                let ctx = DrawContext {
                    index,
                    params,
                    draw,
                    partials,
                    solution,
                    jacobian,
                    boundary,
                };
                integrand(&ctx, &mut buf);
                acc.push(&buf);
            }
            Ok(ChunkResult { acc, boundary_hits })
        })
        .collect::<Result<_>>()?;
    let boundary_hits = results.iter().map(|r| r.boundary_hits).sum();
    let acc = tree_reduce(results.into_iter().map(|r| r.acc).collect(), dim);
    Ok((acc, boundary_hits))
}

fn vector(mean: &[f64], se: &[f64], offset: usize, len: usize) -> VectorEstimate {
    VectorEstimate {
        mean: mean[offset..offset + len].to_vec(),
        se: se[offset..offset + len].to_vec(),
    }
}

fn matrix(mean: &[f64], se: &[f64], offset: usize, rows: usize, cols: usize) -> MatrixEstimate {
    let take = |v: &[f64]| {
        (0..rows)
            .map(|k| v[offset + k * cols..offset + (k + 1) * cols].to_vec())
            .collect()
    };
    MatrixEstimate {
        mean: take(mean),
        se: take(se),
    }
}

/// Risk-neutral prices `x_t = E[e^{-r tau} x*(A_T)]`.
pub fn price_claims(net: &FirmNetwork, params: &GbmParams, cfg: &McConfig) -> Result<PriceReport> {
    let n = net.n();
    let disc = params.discount();
    let (acc, boundary_hits) = run_draws(net, params, cfg, 2 * n, false, |ctx, out| {
        let c = &ctx.solution.claims;
        for i in 0..n {
            out[i] = disc * c.s[i];
            out[n + i] = disc * c.r[i];
        }
    })?;
    Ok(PriceReport {
        price: vector(acc.mean(), &acc.std_error(), 0, 2 * n),
        draws: cfg.draws,
        seed: cfg.seed,
        boundary_hits,
    })
}

/// Offsets of each Greek inside the flat per-draw integrand.
struct Layout {
    n: usize,
}

impl Layout {
    fn m(&self) -> usize {
        2 * self.n
    }
    fn price(&self) -> usize {
        0
    }
    fn delta(&self) -> usize {
        self.m()
    }
    fn vega(&self) -> usize {
        self.delta() + self.m() * self.n
    }
    fn theta(&self) -> usize {
        self.vega() + self.m() * self.n
    }
    fn rho(&self) -> usize {
        self.theta() + self.m()
    }
    fn pi(&self) -> usize {
        self.rho() + self.m()
    }
    fn delta_total(&self) -> usize {
        self.pi() + self.n
    }
    fn delta_parallel(&self) -> usize {
        self.delta_total() + self.n
    }
    fn vega_parallel(&self) -> usize {
        self.delta_parallel() + self.m()
    }
    fn default(&self) -> usize {
        self.vega_parallel() + self.m()
    }
    fn dim(&self) -> usize {
        self.default() + self.n
    }
}

/// Pathwise network Greeks with standard errors.
pub fn mc_greeks(net: &FirmNetwork, params: &GbmParams, cfg: &McConfig) -> Result<GreekReport> {
    let n = net.n();
    let m = 2 * n;
    let lay = Layout { n };
    let (rate, tau) = (params.rate(), params.tau());
    let disc = params.discount();

    let (acc, boundary_hits) = run_draws(net, params, cfg, lay.dim(), true, |ctx, out| {
        out.fill(0.0);
        let x = ctx.solution.claims.stacked();
        let dxda = &ctx.jacobian.as_ref().expect("jacobian requested").dxda;
        let p = &ctx.partials;
        for k in 0..m {
            out[lay.price() + k] = disc * x[k];
            let mut d_rate = 0.0;
            let mut d_tau = 0.0;
            for j in 0..n {
                let w = dxda[(k, j)];
                if w == 0.0 {
                    continue;
                }
                let delta = disc * w * p.spot[j];
                let vega = disc * w * p.sigma[j];
                out[lay.delta() + k * n + j] = delta;
                out[lay.vega() + k * n + j] = vega;
                out[lay.delta_total() + j] += delta;
                out[lay.delta_parallel() + k] += delta;
                out[lay.vega_parallel() + k] += vega;
                out[lay.pi() + j] += w;
                d_rate += w * p.rate[j];
                d_tau += w * p.tau[j];
            }
            // d(e^{-r tau})/dr = -tau e^{-r tau}, d(e^{-r tau})/dtau = -r e^{-r tau}.
            out[lay.rho() + k] = -tau * disc * x[k] + disc * d_rate;
            out[lay.theta() + k] = rate * disc * x[k] - disc * d_tau;
        }
        for i in 0..n {
            out[lay.default() + i] = if ctx.solution.xi.is_solvent(i) { 0.0 } else { 1.0 };
        }
    })?;

    let (mean, se) = (acc.mean(), acc.std_error());
    Ok(GreekReport {
        price: vector(mean, &se, lay.price(), m),
        delta: matrix(mean, &se, lay.delta(), m, n),
        vega: matrix(mean, &se, lay.vega(), m, n),
        theta: vector(mean, &se, lay.theta(), m),
        rho: vector(mean, &se, lay.rho(), m),
        pi: vector(mean, &se, lay.pi(), n),
        delta_total: vector(mean, &se, lay.delta_total(), n),
        delta_parallel: vector(mean, &se, lay.delta_parallel(), m),
        vega_parallel: vector(mean, &se, lay.vega_parallel(), m),
        default_prob: vector(mean, &se, lay.default(), n),
        draws: cfg.draws,
        seed: cfg.seed,
        boundary_hits,
    })
}

/// `1^T Delta`: aggregate impact of each firm's spot on all claim prices.
pub fn delta_total(report: &GreekReport) -> Vec<f64> {
    let n = report.n();
    (0..n)
        .map(|j| report.delta.mean.iter().map(|row| row[j]).sum())
        .collect()
}

/// Monte-Carlo estimate of `E[dx*/da]` at `A_T` together with default
/// probabilities.
pub fn expected_claims_sensitivity(
    net: &FirmNetwork,
    params: &GbmParams,
    cfg: &McConfig,
) -> Result<SensitivityEstimate> {
    let n = net.n();
    let m = 2 * n;
    let (acc, boundary_hits) = run_draws(net, params, cfg, m * n + n, true, |ctx, out| {
        let dxda = &ctx.jacobian.as_ref().expect("jacobian requested").dxda;
        for k in 0..m {
            for j in 0..n {
                out[k * n + j] = dxda[(k, j)];
            }
        }
        for i in 0..n {
            out[m * n + i] = if ctx.solution.xi.is_solvent(i) { 0.0 } else { 1.0 };
        }
    })?;
    let (mean, se) = (acc.mean(), acc.std_error());
    Ok(SensitivityEstimate {
        dxda: matrix(mean, &se, 0, m, n),
        default_prob: vector(mean, &se, m * n, n),
        draws: cfg.draws,
        seed: cfg.seed,
        boundary_hits,
    })
}

/// Per-draw terminal values and solved fixed points, in draw order.
pub fn sample_fixed_points(
    net: &FirmNetwork,
    params: &GbmParams,
    cfg: &McConfig,
) -> Result<Vec<(TerminalDraw, FixedPointSolution)>> {
    cfg.validate()?;
    net.check_len("gbm parameters", params.n())?;
    let n = net.n();
    (0..cfg.draws)
        .into_par_iter()
        .map(|index| {
            let wrap = |e: Error| Error::Draw {
                draw: index,
                source: Box::new(e),
            };
            let draw = sample_terminal(params, &standard_normals(cfg.seed, index, n)).map_err(wrap)?;
            let sol = solve_claims(net, &draw.assets, &cfg.fixed_point).map_err(wrap)?;
            Ok((draw, sol))
        })
        .collect()
}

/// Firm values `v = a + M^s s + M^d r` at a solved draw.
pub fn firm_values(net: &FirmNetwork, draw: &TerminalDraw, sol: &FixedPointSolution) -> DVector<f64> {
    crate::network::firm_value(net, &sol.claims, &draw.assets).expect("dimensions checked by solver")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::black_scholes::{call, norm_cdf};
    use nalgebra::DMatrix;

    fn single_firm() -> (FirmNetwork, GbmParams) {
        let net = FirmNetwork::unconnected(DVector::from_element(1, 1.0)).unwrap();
        let gbm = GbmParams::independent(DVector::from_element(1, 1.0), DVector::from_element(1, 0.4), 0.0, 1.0).unwrap();
        (net, gbm)
    }

    #[test]
    fn rejects_too_few_draws_and_mismatch() {
        let (net, gbm) = single_firm();
        assert!(price_claims(&net, &gbm, &McConfig::new(1, 0)).is_err());
        let two = FirmNetwork::unconnected(DVector::from_element(2, 1.0)).unwrap();
        assert!(matches!(price_claims(&two, &gbm, &McConfig::new(10, 0)), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn merton_single_firm_price_and_delta() {
        let (net, gbm) = single_firm();
        let rep = mc_greeks(&net, &gbm, &McConfig::new(40_000, 5)).unwrap();
        let c = call(1.0, 1.0, 0.0, 1.0, 0.4);
        assert!((rep.price.mean[0] - c).abs() < 3.0 * rep.price.se[0]);
        assert!((rep.price.mean[1] - (1.0 - c)).abs() < 3.0 * rep.price.se[1]);
        let dp = 0.2;
        assert!((rep.delta.mean[0][0] - norm_cdf(dp)).abs() < 3.0 * rep.delta.se[0][0]);
        assert!((rep.delta.mean[1][0] - norm_cdf(-dp)).abs() < 3.0 * rep.delta.se[1][0]);
        // Equity plus debt delta is the asset delta exactly per draw, with mean near 1.
        assert!((rep.delta_total.mean[0] - 1.0).abs() < 3.0 * rep.delta_total.se[0]);
        assert_eq!(rep.boundary_hits, 0);
    }

    #[test]
    fn deterministic_limit() {
        let net = FirmNetwork::unconnected(DVector::from_element(1, 1.0)).unwrap();
        let gbm = GbmParams::independent(DVector::from_element(1, 2.0), DVector::from_element(1, 1e-9), 0.05, 1.0).unwrap();
        let rep = price_claims(&net, &gbm, &McConfig::new(100, 1)).unwrap();
        let disc = (-0.05f64).exp();
        assert!((rep.price.mean[0] - (2.0 - disc)).abs() < 1e-7);
        assert!((rep.price.mean[1] - disc).abs() < 1e-12);
    }

    #[test]
    fn unconnected_delta_is_diagonal() {
        let net = FirmNetwork::unconnected(DVector::from_element(3, 1.0)).unwrap();
        let gbm = GbmParams::independent(DVector::from_element(3, 1.0), DVector::from_element(3, 0.3), 0.01, 1.0).unwrap();
        let rep = mc_greeks(&net, &gbm, &McConfig::new(2_000, 3)).unwrap();
        for k in 0..6 {
            for j in 0..3 {
                if k % 3 != j {
                    assert_eq!(rep.delta.mean[k][j], 0.0);
                }
            }
        }
        let totals = delta_total(&rep);
        for (t, m) in totals.iter().zip(&rep.delta_total.mean) {
            assert!((t - m).abs() < 1e-12);
        }
    }

    #[test]
    fn report_is_independent_of_thread_count() {
        let m_d = DMatrix::from_row_slice(3, 3, &[0.0, 0.3, 0.2, 0.4, 0.0, 0.3, 0.1, 0.2, 0.0]);
        let net = FirmNetwork::debt_only(m_d, DVector::from_element(3, 1.0)).unwrap();
        let gbm = GbmParams::independent(DVector::from_element(3, 0.9), DVector::from_element(3, 0.4), 0.0, 1.0).unwrap();
        let cfg = McConfig::new(3_000, 17);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| mc_greeks(&net, &gbm, &cfg).unwrap())
        };
        let one = run(1);
        let many = run(8);
        assert_eq!(serde_json::to_string(&one).unwrap(), serde_json::to_string(&many).unwrap());
    }

    #[test]
    fn sensitivity_estimate_shapes() {
        let net = FirmNetwork::symmetric(2, 0.0, 0.4, 1.0).unwrap();
        let gbm = GbmParams::independent(DVector::from_element(2, 0.6), DVector::from_element(2, 0.4), 0.0, 1.0).unwrap();
        let est = expected_claims_sensitivity(&net, &gbm, &McConfig::new(500, 2)).unwrap();
        assert_eq!(est.dxda.mean.len(), 4);
        assert_eq!(est.dxda.mean[0].len(), 2);
        assert!(est.default_prob.mean.iter().all(|p| (0.0..=1.0).contains(p)));
    }
}
