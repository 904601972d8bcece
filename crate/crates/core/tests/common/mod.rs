#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use netgreeks::network::SolvencyVector;
use netgreeks::FirmNetwork;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random holdings with each nonempty column scaled to a random total in
/// `(0, max_col]`.
fn random_holdings(rng: &mut ChaCha8Rng, n: usize, density: f64, max_col: f64) -> DMatrix<f64> {
    let mut m = DMatrix::from_fn(n, n, |i, j| {
        if i != j && rng.random::<f64>() < density {
            rng.random::<f64>()
        } else {
            0.0
        }
    });
    for mut col in m.column_iter_mut() {
        let s = col.sum();
        if s > 0.0 {
            let target = max_col * rng.random_range(0.05..1.0);
            col *= target / s;
        }
    }
    m
}

/// Equity and debt holdings, every column sum strictly below one.
pub fn random_network(rng: &mut ChaCha8Rng, n: usize) -> FirmNetwork {
    let density = rng.random_range(0.2..0.9);
    let m_s = random_holdings(rng, n, density, 0.9);
    let m_d = random_holdings(rng, n, density, 0.9);
    let d = DVector::from_fn(n, |_, _| rng.random_range(0.5..2.0));
    FirmNetwork::new(m_s, m_d, d).expect("generated network is valid")
}

pub fn random_debt_network(rng: &mut ChaCha8Rng, n: usize) -> FirmNetwork {
    let density = rng.random_range(0.2..0.9);
    let m_d = random_holdings(rng, n, density, 0.9);
    let d = DVector::from_fn(n, |_, _| rng.random_range(0.5..2.0));
    FirmNetwork::debt_only(m_d, d).expect("generated network is valid")
}

/// External assets spread around the nominal debt so that defaults are
/// common but not universal.
pub fn random_assets(rng: &mut ChaCha8Rng, net: &FirmNetwork) -> DVector<f64> {
    let z = Normal::new(-0.4, 0.7).unwrap();
    DVector::from_fn(net.n(), |i, _| net.nominal_debt()[i] * Distribution::<f64>::sample(&z, rng).exp())
}

pub fn random_solvency(rng: &mut ChaCha8Rng, n: usize) -> SolvencyVector {
    SolvencyVector::new((0..n).map(|_| rng.random::<bool>()).collect())
}

/// Sup-norm error relative to `max(1, |reference|_max)`.
pub fn norm_rel_error(a: &DMatrix<f64>, reference: &DMatrix<f64>) -> f64 {
    (a - reference).amax() / reference.amax().max(1.0)
}
