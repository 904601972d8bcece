//! Config-driven experiment runners behind the `netgreeks` binary.
//!
//! Every runner computes its rows first and writes them through a single
//! CSV writer in a fixed order, so output bytes depend only on the config.

mod config;
mod runners;

use std::io::Write;

pub use config::{
    ClaimsConfig, Correlation, CorrelationKind, ErSweepConfig, ExperimentConfig, Grid, NetworkSource, PerFirm,
    SymmetricGridConfig, SymmetricNetworkSpec, TwoFirmConfig,
};
pub use runners::{
    er_sweep_cells, greeks_rows, joint_default_correlation, local_compare_rows, price_rows, symmetric_grid_rows,
    two_firm_draws, ErCell, LocalCompareRow, LongRow, SymmetricRow, TwoFirmDraw,
};

use crate::error::{Error, Result};

/// Floats are written with 17 significant digits so that values round-trip.
pub(crate) fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// A CSV table: fixed header and rows of already formatted fields.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn write_to<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            debug_assert_eq!(row.len(), self.header.len());
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Runs an experiment on the current rayon pool and returns its table.
/// `progress` receives short human-readable status lines.
pub fn run(cfg: &ExperimentConfig, progress: &(dyn Fn(&str) + Sync)) -> Result<Table> {
    match cfg {
        ExperimentConfig::SymmetricGrid(c) => runners::symmetric_grid_table(c),
        ExperimentConfig::TwoFirm(c) => runners::two_firm_table(c),
        ExperimentConfig::ErSweep(c) => runners::er_sweep_table(c, progress),
        ExperimentConfig::Price(c) => runners::price_table(c),
        ExperimentConfig::Greeks(c) => runners::greeks_table(c),
        ExperimentConfig::LocalCompare(c) => runners::local_compare_table(c),
    }
}

/// Runs an experiment on a dedicated pool of `threads` workers (all cores
/// when `None`).
pub fn run_with_threads(
    cfg: &ExperimentConfig,
    threads: Option<usize>,
    progress: &(dyn Fn(&str) + Sync),
) -> Result<Table> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        if t == 0 {
            return Err(Error::Config("thread count must be positive".into()));
        }
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| Error::Config(e.to_string()))?;
    pool.install(|| run(cfg, progress))
}

/// Checks a config without running it: grids, parameters and any network
/// it references.
pub fn validate_config(cfg: &ExperimentConfig) -> Result<Vec<String>> {
    runners::validate(cfg)
}
