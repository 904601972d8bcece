use nalgebra::DVector;

use netgreeks::analytic::{symmetric_pi, SymmetricParams};
use netgreeks::{mc_greeks, FirmNetwork, GbmParams, McConfig};

/// The MC pi integrand is the column sum of the claims Jacobian, which
/// carries the constant the closed form subtracts.
#[test]
fn mc_pi_matches_closed_form_on_symmetric_networks() {
    for (k, &(w_s, w_d, a)) in [(0.2, 0.4, 1.0), (0.6, 0.2, 0.8), (0.4, 0.6, 1.3)].iter().enumerate() {
        let n = 3;
        let net = FirmNetwork::symmetric(n, w_s, w_d, 1.0).unwrap();
        let gbm = GbmParams::comonotone(DVector::from_element(n, a), DVector::from_element(n, 0.4), 0.0, 1.0).unwrap();
        let rep = mc_greeks(&net, &gbm, &McConfig::new(100_000, 40 + k as u64)).unwrap();
        let p = SymmetricParams::new(w_s, w_d, 1.0, a, 0.4, 0.0, 1.0).unwrap();
        let exact = symmetric_pi(&p) + 1.0;
        for j in 0..n {
            let (mc, se) = (rep.pi.mean[j], rep.pi.se[j]);
            assert!((mc - exact).abs() <= 3.0 * se, "w_s={w_s} w_d={w_d} a={a} j={j}: {mc} (se {se}) vs {exact}");
        }
    }
}
