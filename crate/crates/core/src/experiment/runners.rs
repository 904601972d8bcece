use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::config::{ClaimsConfig, ErSweepConfig, ExperimentConfig, SymmetricGridConfig, TwoFirmConfig};
use super::{fmt_f64, Table};
use crate::analytic::{symmetric_expost, symmetric_greeks, symmetric_pi, symmetric_price, SymmetricParams};
use crate::error::{Error, Result};
use crate::fixpoint::FixedPointConfig;
use crate::gbm::GbmParams;
use crate::local::{independent_default_delta, local_delta, local_fixed_point, marginal_contagion_matrix};
use crate::mc::{expected_claims_sensitivity, mc_greeks, price_claims, sample_fixed_points, GreekReport, McConfig};
use crate::netgen::{ensemble, EnsembleSpec};
use crate::network::{firm_value, FirmNetwork};

fn int<T: ToString>(x: T) -> String {
    x.to_string()
}

// ---------------------------------------------------------------- symmetric

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymmetricRow {
    pub params: SymmetricParams,
    pub s_expost: f64,
    pub r_expost: f64,
    pub v_expost: f64,
    pub solvent: bool,
    pub s: f64,
    pub r: f64,
    pub v: f64,
    pub greeks: crate::analytic::SymmetricGreeks,
    pub pi: f64,
}

/// One row per `(sigma, w_s, w_d, a)`, in that nesting order.
pub fn symmetric_grid_rows(cfg: &SymmetricGridConfig) -> Result<Vec<SymmetricRow>> {
    let (a_grid, ws_grid, wd_grid, sig_grid) = (cfg.a.values()?, cfg.w_s.values()?, cfg.w_d.values()?, cfg.sigma.values()?);
    let mut rows = Vec::with_capacity(a_grid.len() * ws_grid.len() * wd_grid.len() * sig_grid.len());
    for &sigma in &sig_grid {
        for &w_s in &ws_grid {
            for &w_d in &wd_grid {
                for &a in &a_grid {
                    let params = SymmetricParams::new(w_s, w_d, cfg.d, a, sigma, cfg.rate, cfg.tau)?;
                    let ex = symmetric_expost(a, w_s, w_d, cfg.d);
                    let (s, r) = symmetric_price(&params);
                    rows.push(SymmetricRow {
                        params,
                        s_expost: ex.s,
                        r_expost: ex.r,
                        v_expost: a + w_s * ex.s + w_d * ex.r,
                        solvent: ex.solvent,
                        s,
                        r,
                        v: a + w_s * s + w_d * r,
                        greeks: symmetric_greeks(&params),
                        pi: symmetric_pi(&params),
                    });
                }
            }
        }
    }
    Ok(rows)
}

pub(super) fn symmetric_grid_table(cfg: &SymmetricGridConfig) -> Result<Table> {
    let header = vec![
        "a", "w_s", "w_d", "sigma", "d", "rate", "tau", "s_expost", "r_expost", "v_expost", "xi", "s", "r", "v",
        "delta_s", "delta_r", "vega_s", "vega_r", "theta_s", "theta_r", "rho_s", "rho_r", "pi",
    ];
    let rows = symmetric_grid_rows(cfg)?
        .iter()
        .map(|row| {
            let p = &row.params;
            let g = &row.greeks;
            let mut out: Vec<String> = [p.a_t, p.w_s, p.w_d, p.sigma, p.d, p.r, p.tau, row.s_expost, row.r_expost, row.v_expost]
                .iter()
                .map(|x| fmt_f64(*x))
                .collect();
            out.push(int(row.solvent as u8));
            out.extend(
                [
                    row.s, row.r, row.v, g.delta_s, g.delta_r, g.vega_s, g.vega_r, g.theta_s, g.theta_r, g.rho_s,
                    g.rho_r, row.pi,
                ]
                .iter()
                .map(|x| fmt_f64(*x)),
            );
            out
        })
        .collect();
    Ok(Table { header, rows })
}

// ----------------------------------------------------------------- two firm

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoFirmDraw {
    pub draw: u64,
    pub assets: [f64; 2],
    pub values: [f64; 2],
    pub solvent: [bool; 2],
}

fn two_firm_market(cfg: &TwoFirmConfig) -> Result<(FirmNetwork, GbmParams)> {
    let m_d = DMatrix::from_row_slice(2, 2, &[0.0, cfg.w, cfg.w, 0.0]);
    let net = FirmNetwork::debt_only(m_d, DVector::from_element(2, cfg.d))?;
    let corr = DMatrix::from_row_slice(2, 2, &[1.0, cfg.asset_corr, cfg.asset_corr, 1.0]);
    let params = GbmParams::new(
        DVector::from_element(2, cfg.a0),
        DVector::from_element(2, cfg.sigma),
        cfg.rate,
        cfg.tau,
        corr,
    )?;
    Ok((net, params))
}

/// Terminal assets, firm values and solvency of the two mutually indebted
/// firms, in draw order.
pub fn two_firm_draws(cfg: &TwoFirmConfig) -> Result<Vec<TwoFirmDraw>> {
    let (net, params) = two_firm_market(cfg)?;
    let mc = McConfig {
        draws: cfg.draws,
        seed: cfg.seed,
        fixed_point: cfg.fixed_point,
    };
    let draws = sample_fixed_points(&net, &params, &mc)?;
    Ok(draws
        .into_iter()
        .enumerate()
        .map(|(k, (draw, sol))| {
            let v = firm_value(&net, &sol.claims, &draw.assets).expect("dimensions fixed");
            TwoFirmDraw {
                draw: k as u64,
                assets: [draw.assets[0], draw.assets[1]],
                values: [v[0], v[1]],
                solvent: [sol.xi.is_solvent(0), sol.xi.is_solvent(1)],
            }
        })
        .collect())
}

fn pearson(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Sample correlation of `(v_1, v_2)` over the draws where both firms
/// default, with the number of such draws. `None` below two joint defaults.
pub fn joint_default_correlation(draws: &[TwoFirmDraw]) -> Option<(f64, usize)> {
    let (v1, v2): (Vec<f64>, Vec<f64>) = draws
        .iter()
        .filter(|d| !d.solvent[0] && !d.solvent[1])
        .map(|d| (d.values[0], d.values[1]))
        .unzip();
    (v1.len() >= 2).then(|| (pearson(&v1, &v2), v1.len()))
}

pub(super) fn two_firm_table(cfg: &TwoFirmConfig) -> Result<Table> {
    let header = vec!["seed", "draw", "a1_T", "a2_T", "v1", "v2", "xi1", "xi2"];
    let rows = two_firm_draws(cfg)?
        .iter()
        .map(|d| {
            vec![
                int(cfg.seed),
                int(d.draw),
                fmt_f64(d.assets[0]),
                fmt_f64(d.assets[1]),
                fmt_f64(d.values[0]),
                fmt_f64(d.values[1]),
                int(d.solvent[0] as u8),
                int(d.solvent[1] as u8),
            ]
        })
        .collect();
    Ok(Table { header, rows })
}

// ----------------------------------------------------------------- ER sweep

/// Firm-averaged prices and Greeks of one `(w_d, k_mean, a0)` cell, averaged
/// over the ensemble. `delta_total_se` is the standard error across
/// networks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErCell {
    pub seed: u64,
    pub n: usize,
    pub networks: usize,
    pub draws: u64,
    pub k_mean: f64,
    pub w_d: f64,
    pub a0: f64,
    pub sigma: f64,
    pub rate: f64,
    pub tau: f64,
    pub s: f64,
    pub r: f64,
    pub v: f64,
    pub capital_ratio: f64,
    pub external_fraction: f64,
    pub default_prob: f64,
    pub delta_s: f64,
    pub delta_r: f64,
    pub delta_total: f64,
    pub delta_total_se: f64,
    pub vega_s: f64,
    pub vega_r: f64,
    pub theta_s: f64,
    pub theta_r: f64,
    pub rho_s: f64,
    pub rho_r: f64,
    pub pi: f64,
}

/// Per-network firm averages, in the order of `NETWORK_STATS`.
const NETWORK_STATS: usize = 16;

fn network_summary(net: &FirmNetwork, a0: f64, rep: &GreekReport) -> [f64; NETWORK_STATS] {
    let n = net.n();
    let nf = n as f64;
    let avg = |v: &[f64], off: usize| v[off..off + n].iter().sum::<f64>() / nf;
    let s = DVector::from_column_slice(&rep.price.mean[..n]);
    let r = DVector::from_column_slice(&rep.price.mean[n..]);
    let v = DVector::from_element(n, a0) + net.equity_holdings() * &s + net.debt_holdings() * &r;
    let capital_ratio = (0..n).map(|i| s[i] / v[i]).sum::<f64>() / nf;
    let external = (0..n).map(|i| a0 / v[i]).sum::<f64>() / nf;
    let delta_s = avg(&rep.delta_parallel.mean, 0);
    let delta_r = avg(&rep.delta_parallel.mean, n);
    [
        s.mean(),
        r.mean(),
        v.mean(),
        capital_ratio,
        external,
        rep.default_prob.mean.iter().sum::<f64>() / nf,
        delta_s,
        delta_r,
        delta_s + delta_r,
        avg(&rep.vega_parallel.mean, 0),
        avg(&rep.vega_parallel.mean, n),
        avg(&rep.theta.mean, 0),
        avg(&rep.theta.mean, n),
        avg(&rep.rho.mean, 0),
        avg(&rep.rho.mean, n),
        rep.pi.mean.iter().sum::<f64>() / nf,
    ]
}

/// Runs the sweep. Ensemble members are shared across `a0` and, through
/// the member seeds, nested across `k_mean`; each member also seeds its own
/// Monte-Carlo draws.
pub fn er_sweep_cells(cfg: &ErSweepConfig, progress: &(dyn Fn(&str) + Sync)) -> Result<Vec<ErCell>> {
    let (ks, wds, a0s) = (cfg.k_mean.values()?, cfg.w_d.values()?, cfg.a0.values()?);
    if cfg.networks < 2 {
        return Err(Error::Config("er-sweep needs at least two networks".into()));
    }
    let total = ks.len() * wds.len() * a0s.len();
    let mut cells = Vec::with_capacity(total);
    for &w_d in &wds {
        for &k_mean in &ks {
            let coord = format!("cell (w_d={w_d}, k_mean={k_mean})");
            let spec = EnsembleSpec {
                n: cfg.n,
                k_mean,
                w_d,
                networks: cfg.networks,
                seed: cfg.seed,
                d: cfg.d,
                sinkhorn: cfg.sinkhorn,
            };
            let members = ensemble(&spec).map_err(|e| e.in_cell(coord.clone()))?;
            for &a0 in &a0s {
                let coord = format!("cell (w_d={w_d}, k_mean={k_mean}, a0={a0})");
                let params = GbmParams::independent(
                    DVector::from_element(cfg.n, a0),
                    DVector::from_element(cfg.n, cfg.sigma),
                    cfg.rate,
                    cfg.tau,
                )
                .map_err(|e| e.in_cell(coord.clone()))?;
                let stats: Vec<[f64; NETWORK_STATS]> = members
                    .par_iter()
                    .map(|m| {
                        let mc = McConfig {
                            draws: cfg.draws,
                            seed: m.seed,
                            fixed_point: cfg.fixed_point,
                        };
                        mc_greeks(&m.network, &params, &mc)
                            .map(|rep| network_summary(&m.network, a0, &rep))
                            .map_err(|e| e.in_cell(format!("{coord} network {} (seed {})", m.index, m.seed)))
                    })
                    .collect::<Result<_>>()?;
                let count = stats.len() as f64;
                let mut mean = [0.0; NETWORK_STATS];
                for row in &stats {
                    for (m, x) in mean.iter_mut().zip(row) {
                        *m += x / count;
                    }
                }
                let dt_var = stats.iter().map(|row| (row[8] - mean[8]).powi(2)).sum::<f64>() / (count - 1.0);
                cells.push(ErCell {
                    seed: cfg.seed,
                    n: cfg.n,
                    networks: cfg.networks,
                    draws: cfg.draws,
                    k_mean,
                    w_d,
                    a0,
                    sigma: cfg.sigma,
                    rate: cfg.rate,
                    tau: cfg.tau,
                    s: mean[0],
                    r: mean[1],
                    v: mean[2],
                    capital_ratio: mean[3],
                    external_fraction: mean[4],
                    default_prob: mean[5],
                    delta_s: mean[6],
                    delta_r: mean[7],
                    delta_total: mean[8],
                    delta_total_se: (dt_var / count).sqrt(),
                    vega_s: mean[9],
                    vega_r: mean[10],
                    theta_s: mean[11],
                    theta_r: mean[12],
                    rho_s: mean[13],
                    rho_r: mean[14],
                    pi: mean[15],
                });
                progress(&format!("er-sweep: {}/{} {coord}", cells.len(), total));
            }
        }
    }
    Ok(cells)
}

pub(super) fn er_sweep_table(cfg: &ErSweepConfig, progress: &(dyn Fn(&str) + Sync)) -> Result<Table> {
    let header = vec![
        "seed", "n", "networks", "draws", "k_mean", "w_d", "a0", "sigma", "rate", "tau", "s", "r", "v", "capital_ratio",
        "external_fraction", "default_prob", "delta_s", "delta_r", "delta_total", "delta_total_se", "vega_s", "vega_r",
        "theta_s", "theta_r", "rho_s", "rho_r", "pi",
    ];
    let rows = er_sweep_cells(cfg, progress)?
        .iter()
        .map(|c| {
            let mut out = vec![int(c.seed), int(c.n), int(c.networks), int(c.draws)];
            out.extend(
                [
                    c.k_mean,
                    c.w_d,
                    c.a0,
                    c.sigma,
                    c.rate,
                    c.tau,
                    c.s,
                    c.r,
                    c.v,
                    c.capital_ratio,
                    c.external_fraction,
                    c.default_prob,
                    c.delta_s,
                    c.delta_r,
                    c.delta_total,
                    c.delta_total_se,
                    c.vega_s,
                    c.vega_r,
                    c.theta_s,
                    c.theta_r,
                    c.rho_s,
                    c.rho_r,
                    c.pi,
                ]
                .iter()
                .map(|x| fmt_f64(*x)),
            );
            out
        })
        .collect();
    Ok(Table { header, rows })
}

// ------------------------------------------------------- price and greeks

/// One estimate in long format. `claim` indexes the stacked `(s; r)`
/// vector, `asset` the firm whose external asset is perturbed.
#[derive(Debug, Clone, PartialEq)]
pub struct LongRow {
    pub quantity: &'static str,
    pub claim: Option<usize>,
    pub asset: Option<usize>,
    pub mean: f64,
    pub se: f64,
}

fn claim_label(n: usize, k: usize) -> String {
    if k < n {
        format!("s{k}")
    } else {
        format!("r{}", k - n)
    }
}

fn mc_config(cfg: &ClaimsConfig) -> McConfig {
    McConfig {
        draws: cfg.draws,
        seed: cfg.seed,
        fixed_point: cfg.fixed_point,
    }
}

pub fn price_rows(cfg: &ClaimsConfig) -> Result<(usize, u64, Vec<LongRow>)> {
    let (net, params) = cfg.market()?;
    let rep = price_claims(&net, &params, &mc_config(cfg))?;
    let rows = (0..2 * net.n())
        .map(|k| LongRow {
            quantity: "price",
            claim: Some(k),
            asset: None,
            mean: rep.price.mean[k],
            se: rep.price.se[k],
        })
        .collect();
    Ok((net.n(), rep.boundary_hits, rows))
}

pub fn greeks_rows(cfg: &ClaimsConfig) -> Result<(usize, u64, Vec<LongRow>)> {
    let (net, params) = cfg.market()?;
    let n = net.n();
    let rep = mc_greeks(&net, &params, &mc_config(cfg))?;
    let mut rows = Vec::new();
    let per_claim = [
        ("price", &rep.price),
        ("theta", &rep.theta),
        ("rho", &rep.rho),
        ("delta_parallel", &rep.delta_parallel),
        ("vega_parallel", &rep.vega_parallel),
    ];
    for (quantity, est) in per_claim {
        for k in 0..2 * n {
            rows.push(LongRow {
                quantity,
                claim: Some(k),
                asset: None,
                mean: est.mean[k],
                se: est.se[k],
            });
        }
    }
    for (quantity, est) in [("delta", &rep.delta), ("vega", &rep.vega)] {
        for k in 0..2 * n {
            for j in 0..n {
                rows.push(LongRow {
                    quantity,
                    claim: Some(k),
                    asset: Some(j),
                    mean: est.mean[k][j],
                    se: est.se[k][j],
                });
            }
        }
    }
    let per_asset = [("delta_total", &rep.delta_total), ("pi", &rep.pi), ("default_prob", &rep.default_prob)];
    for (quantity, est) in per_asset {
        for j in 0..n {
            rows.push(LongRow {
                quantity,
                claim: None,
                asset: Some(j),
                mean: est.mean[j],
                se: est.se[j],
            });
        }
    }
    Ok((n, rep.boundary_hits, rows))
}

fn long_table(cfg: &ClaimsConfig, (n, hits, rows): (usize, u64, Vec<LongRow>)) -> Table {
    let header = vec!["seed", "draws", "boundary_hits", "quantity", "claim", "asset", "mean", "se"];
    let rows = rows
        .into_iter()
        .map(|r| {
            vec![
                int(cfg.seed),
                int(cfg.draws),
                int(hits),
                r.quantity.to_string(),
                r.claim.map(|k| claim_label(n, k)).unwrap_or_default(),
                r.asset.map(int).unwrap_or_default(),
                fmt_f64(r.mean),
                fmt_f64(r.se),
            ]
        })
        .collect();
    Table { header, rows }
}

pub(super) fn price_table(cfg: &ClaimsConfig) -> Result<Table> {
    Ok(long_table(cfg, price_rows(cfg)?))
}

pub(super) fn greeks_table(cfg: &ClaimsConfig) -> Result<Table> {
    Ok(long_table(cfg, greeks_rows(cfg)?))
}

// ------------------------------------------------------------ local compare

/// Exact expected debt sensitivity `E[dr*/da]_ij` next to its approximations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocalCompareRow {
    pub i: usize,
    pub j: usize,
    pub exact_mean: f64,
    pub exact_se: f64,
    /// `(I - diag(pd) M^d)^{-1} diag(pd)`.
    pub independent: f64,
    /// `(I - M^d diag(pd))^{-1}`.
    pub marginal: f64,
    /// Local valuation `dE*/da`.
    pub local_delta: f64,
    /// Exact `E[dv*/da] = I + M^d E[dr*/da]`, comparable to `local_delta`.
    pub exact_dv: f64,
    pub pd_i: f64,
    pub pd_j: f64,
    pub local_pd_i: f64,
    pub local_equity_i: f64,
    pub mc_equity_i: f64,
}

pub fn local_compare_rows(cfg: &ClaimsConfig) -> Result<Vec<LocalCompareRow>> {
    let firm_vol = cfg
        .firm_vol
        .as_ref()
        .ok_or_else(|| Error::Config("local-compare needs `firm_vol`".into()))?;
    let (net, params) = cfg.market()?;
    if !net.is_debt_only() {
        return Err(Error::InvalidNetwork("local-compare requires a debt-only network".into()));
    }
    let n = net.n();
    let vol = firm_vol.to_vector(n, "firm_vol")?;
    let mc = mc_config(cfg);
    let est = expected_claims_sensitivity(&net, &params, &mc)?;
    let prices = price_claims(&net, &params, &mc)?;
    let pd = DVector::from_column_slice(&est.default_prob.mean);
    let indep = independent_default_delta(&net, &pd)?;
    let marginal = marginal_contagion_matrix(&net, &pd)?;
    let state = local_fixed_point(&net, params.spot(), params.rate(), params.tau(), &vol, &FixedPointConfig::default())?;
    let local = local_delta(&state, &net)?;
    let exact_rd = DMatrix::from_fn(n, n, |i, j| est.dxda.mean[n + i][j]);
    let exact_dv = DMatrix::identity(n, n) + net.debt_holdings() * &exact_rd;

    let mut rows = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            rows.push(LocalCompareRow {
                i,
                j,
                exact_mean: exact_rd[(i, j)],
                exact_se: est.dxda.se[n + i][j],
                independent: indep[(i, j)],
                marginal: marginal[(i, j)],
                local_delta: local[(i, j)],
                exact_dv: exact_dv[(i, j)],
                pd_i: pd[i],
                pd_j: pd[j],
                local_pd_i: state.pd[i],
                local_equity_i: state.equity[i],
                mc_equity_i: prices.price.mean[i],
            });
        }
    }
    Ok(rows)
}

pub(super) fn local_compare_table(cfg: &ClaimsConfig) -> Result<Table> {
    let header = vec![
        "seed", "draws", "i", "j", "exact_mean", "exact_se", "independent", "marginal", "local_delta", "exact_dv",
        "pd_i", "pd_j", "local_pd_i", "local_equity_i", "mc_equity_i",
    ];
    let rows = local_compare_rows(cfg)?
        .iter()
        .map(|r| {
            let mut out = vec![int(cfg.seed), int(cfg.draws), int(r.i), int(r.j)];
            out.extend(
                [
                    r.exact_mean,
                    r.exact_se,
                    r.independent,
                    r.marginal,
                    r.local_delta,
                    r.exact_dv,
                    r.pd_i,
                    r.pd_j,
                    r.local_pd_i,
                    r.local_equity_i,
                    r.mc_equity_i,
                ]
                .iter()
                .map(|x| fmt_f64(*x)),
            );
            out
        })
        .collect();
    Ok(Table { header, rows })
}

// --------------------------------------------------------------- validation

fn check_draws(draws: u64) -> Result<()> {
    if draws < 2 {
        return Err(Error::Config(format!("need at least 2 draws, got {draws}")));
    }
    Ok(())
}

pub(super) fn validate(cfg: &ExperimentConfig) -> Result<Vec<String>> {
    let mut notes = vec![format!("kind: {}", cfg.kind())];
    match cfg {
        ExperimentConfig::SymmetricGrid(c) => {
            let (a, ws, wd, sig) = (c.a.values()?, c.w_s.values()?, c.w_d.values()?, c.sigma.values()?);
            for &sigma in &sig {
                for &w_s in &ws {
                    for &w_d in &wd {
                        for &a in &a {
                            SymmetricParams::new(w_s, w_d, c.d, a, sigma, c.rate, c.tau)?;
                        }
                    }
                }
            }
            notes.push(format!("rows: {}", a.len() * ws.len() * wd.len() * sig.len()));
        }
        ExperimentConfig::TwoFirm(c) => {
            two_firm_market(c)?;
            check_draws(c.draws)?;
            c.fixed_point.validate()?;
            notes.push(format!("draws: {}", c.draws));
        }
        ExperimentConfig::ErSweep(c) => {
            check_draws(c.draws)?;
            c.fixed_point.validate()?;
            let (ks, wds, a0s) = (c.k_mean.values()?, c.w_d.values()?, c.a0.values()?);
            for &k_mean in &ks {
                for &w_d in &wds {
                    EnsembleSpec {
                        n: c.n,
                        k_mean,
                        w_d,
                        networks: c.networks,
                        seed: c.seed,
                        d: c.d,
                        sinkhorn: c.sinkhorn,
                    }
                    .validate()?;
                }
            }
            for &a0 in &a0s {
                GbmParams::independent(
                    DVector::from_element(c.n, a0),
                    DVector::from_element(c.n, c.sigma),
                    c.rate,
                    c.tau,
                )?;
            }
            if c.networks < 2 {
                return Err(Error::Config("er-sweep needs at least two networks".into()));
            }
            notes.push(format!("cells: {}", ks.len() * wds.len() * a0s.len()));
        }
        ExperimentConfig::Price(c) | ExperimentConfig::Greeks(c) | ExperimentConfig::LocalCompare(c) => {
            let (net, _) = c.market()?;
            check_draws(c.draws)?;
            c.fixed_point.validate()?;
            if let ExperimentConfig::LocalCompare(_) = cfg {
                if !net.is_debt_only() {
                    return Err(Error::InvalidNetwork("local-compare requires a debt-only network".into()));
                }
                let vol = c
                    .firm_vol
                    .as_ref()
                    .ok_or_else(|| Error::Config("local-compare needs `firm_vol`".into()))?
                    .to_vector(net.n(), "firm_vol")?;
                if vol.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
                    return Err(Error::param("firm_vol", "must be positive"));
                }
            }
            notes.push(format!("firms: {}", net.n()));
        }
    }
    Ok(notes)
}
