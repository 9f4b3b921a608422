//! Customer strategies, effective arrival rates and overload accounting.
//!
//! Under the shift strategy with range `k` and shift probability `p`, a
//! customer arriving at a station stays with probability `1-p` and otherwise
//! joins one of the station's k nearest neighbours uniformly. The long-run
//! rate at which customers join station `i` is then determined entirely by
//! its in-degree in the k-NN graph:
//!
//! ```text
//! rate(i) = lambda * (1 - p) + lambda * in_degree(i) * p / k
//! ```
//!
//! A station is overloaded when its rate strictly exceeds the service rate
//! `mu`. The overload fraction can be evaluated directly from the rates,
//! from the in-degree tallies, or from star counts; all three routes share
//! one rate formula (see [`kpnns_rate`]) so they agree bit-for-bit on every
//! instance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nngraph::{DegreeCounts, KnnGraph, StarCounts};
use crate::stats::binomial;

/// A customer strategy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Stay with probability `1-p`, else join one of the `k` nearest
    /// stations uniformly.
    Kpnns { k: usize, p: f64 },
    /// One-dimensional left/right shifts: move to the nearest station on
    /// the left with probability `ell`, on the right with probability `r`,
    /// stay otherwise. Requires `ell + r <= 1` and at least two stations.
    Lrnns { ell: f64, r: f64 },
}

impl Strategy {
    pub fn kpnns(k: usize, p: f64) -> Strategy {
        Strategy::Kpnns { k, p }
    }

    pub fn lrnns(ell: f64, r: f64) -> Strategy {
        Strategy::Lrnns { ell, r }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Strategy::Kpnns { k, p } => {
                if k == 0 {
                    return Err(Error::invalid("strategy.k", "activity range must be >= 1"));
                }
                if !(0.0..=1.0).contains(&p) {
                    return Err(Error::invalid(
                        "strategy.p",
                        format!("shift probability {p} outside [0,1]"),
                    ));
                }
            }
            Strategy::Lrnns { ell, r } => {
                if !(ell >= 0.0 && r >= 0.0 && ell + r <= 1.0) {
                    return Err(Error::invalid(
                        "strategy.ell/r",
                        format!("need ell >= 0, r >= 0, ell + r <= 1, got ell={ell}, r={r}"),
                    ));
                }
            }
        }
        Ok(())
    }
}

/// Effective arrival rate of a station with the given in-degree under the
/// `(k, p)` shift strategy. Grouped so that `in_degree == k` yields exactly
/// `lambda`, making the "unchanged load" class an exact float comparison.
pub fn kpnns_rate(lambda: f64, p: f64, k: usize, in_degree: usize) -> f64 {
    let shift = (in_degree as f64 - k as f64) / k as f64;
    lambda + lambda * p * shift
}

/// The in-degree threshold `theta = k + (k/p) * (mu/lambda - 1)`: a station
/// is overloaded iff its in-degree strictly exceeds `theta`.
///
/// Degenerate `p = 0`: no customer ever shifts, so the threshold is +inf
/// for `mu > lambda`, `k` in the limit `mu = lambda`, and -inf for
/// `mu < lambda`.
pub fn theta(k: usize, p: f64, lambda: f64, mu: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::invalid("k", "activity range must be >= 1"));
    }
    if !(lambda > 0.0) {
        return Err(Error::invalid("lambda", format!("arrival rate {lambda} must be positive")));
    }
    if !(mu > 0.0) {
        return Err(Error::invalid("mu", format!("service rate {mu} must be positive")));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::invalid("p", format!("shift probability {p} outside [0,1]")));
    }
    if p == 0.0 {
        return Ok(match mu.partial_cmp(&lambda).unwrap() {
            std::cmp::Ordering::Greater => f64::INFINITY,
            std::cmp::Ordering::Equal => k as f64,
            std::cmp::Ordering::Less => f64::NEG_INFINITY,
        });
    }
    let k = k as f64;
    Ok(k + (k / p) * (mu / lambda - 1.0))
}

/// Per-station effective arrival rates for a strategy on a built graph.
///
/// For the left/right strategy every station has rate exactly `lambda`
/// (shifts relabel which queue a customer joins but the flow into each
/// station balances), so the returned vector is constant.
pub fn effective_rates(g: &KnnGraph, s: &Strategy, lambda: f64) -> Result<Vec<f64>> {
    if !(lambda > 0.0) {
        return Err(Error::invalid("lambda", format!("arrival rate {lambda} must be positive")));
    }
    s.validate()?;
    match *s {
        Strategy::Kpnns { k, p } => {
            if k != g.k() {
                return Err(Error::invalid(
                    "strategy.k",
                    format!("strategy k={k} does not match graph k={}", g.k()),
                ));
            }
            Ok(g.in_degrees()
                .iter()
                .map(|&d| kpnns_rate(lambda, p, k, d as usize))
                .collect())
        }
        Strategy::Lrnns { .. } => {
            if g.dim() != 1 {
                return Err(Error::invalid(
                    "strategy",
                    format!("left/right shifts are one-dimensional, graph has d={}", g.dim()),
                ));
            }
            if g.len() < 2 {
                return Err(Error::invalid("n", "left/right shifts need at least 2 stations"));
            }
            Ok(vec![lambda; g.len()])
        }
    }
}

/// Load classification of one instance.
#[derive(Debug, Clone, Serialize)]
pub struct LoadReport {
    pub lambda_eff: Vec<f64>,
    /// Loads `lambda_eff / mu`.
    pub rho: Vec<f64>,
    /// Strictly overloaded stations (`rho > 1`); a station at exactly
    /// `rho = 1` is not overloaded.
    pub overloaded: Vec<bool>,
    /// Overloaded count / n.
    pub overload_fraction: f64,
    pub mu: f64,
}

impl LoadReport {
    pub fn overload_count(&self) -> usize {
        self.overloaded.iter().filter(|&&b| b).count()
    }
}

/// Classifies stations by comparing each rate against `mu`.
pub fn classify_overload(rates: &[f64], mu: f64) -> Result<LoadReport> {
    if !(mu > 0.0) {
        return Err(Error::invalid("mu", format!("service rate {mu} must be positive")));
    }
    let rho: Vec<f64> = rates.iter().map(|&r| r / mu).collect();
    let overloaded: Vec<bool> = rates.iter().map(|&r| r > mu).collect();
    let count = overloaded.iter().filter(|&&b| b).count();
    Ok(LoadReport {
        lambda_eff: rates.to_vec(),
        rho,
        overloaded,
        overload_fraction: count as f64 / rates.len() as f64,
        mu,
    })
}

/// Smallest in-degree whose rate strictly exceeds `mu`, i.e.
/// `floor(theta) + 1` evaluated through the shared rate formula so that the
/// tally route matches [`classify_overload`] exactly even when `theta`
/// lands on an integer or a rounding boundary. Returns `alpha_k + 1` when
/// no admissible in-degree is overloaded.
pub fn overload_indegree_threshold(
    k: usize,
    p: f64,
    lambda: f64,
    mu: f64,
    alpha_k: usize,
) -> usize {
    if p == 0.0 {
        return alpha_k + 1;
    }
    (0..=alpha_k)
        .find(|&d| kpnns_rate(lambda, p, k, d) > mu)
        .unwrap_or(alpha_k + 1)
}

/// Overload fraction evaluated from the in-degree tally: the fraction of
/// nodes whose in-degree is at or above the threshold. Equals the direct
/// classification on the same instance whenever `p > 0`; for `p = 0` no
/// shifting happens and this route reports 0 by definition.
pub fn overload_via_indegree(
    q: &DegreeCounts,
    k: usize,
    p: f64,
    lambda: f64,
    mu: f64,
    alpha_k: usize,
) -> f64 {
    debug_assert_eq!(q.counts.len(), alpha_k + 1);
    if p == 0.0 {
        return 0.0;
    }
    let t = overload_indegree_threshold(k, p, lambda, mu, alpha_k);
    let hot: u64 = q.counts.iter().skip(t).sum();
    hot as f64 / q.total() as f64
}

/// Signed star coefficients `a_m` such that the overload count equals
/// `sum_m a_m * I_m`:
/// `a_m = sum_{n=threshold}^{m} (-1)^(m-n) * binomial(m, n)` for
/// `m >= threshold`, else 0, with `threshold = theta_floor + 1`. Returned
/// indexed by `m = 1..=alpha_k`.
pub fn a_coefficients(theta_floor: usize, alpha_k: usize) -> Vec<i64> {
    let threshold = theta_floor + 1;
    (1..=alpha_k)
        .map(|m| {
            if m < threshold {
                return 0;
            }
            let mut acc: i64 = 0;
            for n in threshold..=m {
                let term = binomial(m as u64, n as u64) as i64;
                if (m - n) % 2 == 0 {
                    acc += term;
                } else {
                    acc -= term;
                }
            }
            acc
        })
        .collect()
}

/// Overload fraction evaluated from star counts with [`a_coefficients`];
/// the third algebraic route, used for cross-checking.
pub fn overload_via_stars(
    s: &StarCounts,
    k: usize,
    p: f64,
    lambda: f64,
    mu: f64,
    alpha_k: usize,
) -> f64 {
    if p == 0.0 {
        return 0.0;
    }
    let t = overload_indegree_threshold(k, p, lambda, mu, alpha_k);
    if t > alpha_k {
        return 0.0;
    }
    let coeffs = a_coefficients(t - 1, alpha_k);
    let mut acc: i128 = 0;
    for m in 1..=alpha_k {
        acc += coeffs[m - 1] as i128 * s.count(m) as i128;
    }
    acc as f64 / s.n_nodes as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::PointSet;
    use crate::nngraph::{build_knn_graph, in_degree_counts, star_counts};
    use proptest::prelude::*;

    #[test]
    fn theta_direct_values() {
        assert_eq!(theta(1, 1.0, 1.0, 1.0).unwrap(), 1.0);
        assert_eq!(theta(1, 0.5, 0.8, 1.0).unwrap(), 1.5);
        // lambda/mu = 1/(1+p) puts theta at alpha_1 * k = 2.
        let t = theta(1, 0.5, 1.0, 1.5).unwrap();
        assert!((t - 2.0).abs() < 1e-12);
    }

    #[test]
    fn theta_degenerate_p_zero() {
        assert_eq!(theta(2, 0.0, 0.5, 1.0).unwrap(), f64::INFINITY);
        assert_eq!(theta(2, 0.0, 1.0, 1.0).unwrap(), 2.0);
        assert_eq!(theta(2, 0.0, 1.5, 1.0).unwrap(), f64::NEG_INFINITY);
        assert!(theta(1, 1.0, 0.0, 1.0).is_err());
        assert!(theta(1, 1.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn rates_on_the_hand_graph() {
        let ps = PointSet::from_1d(&[0.1, 0.2, 0.4, 0.8]).unwrap();
        let g = build_knn_graph(&ps, 1).unwrap();
        let rates = effective_rates(&g, &Strategy::kpnns(1, 1.0), 1.0).unwrap();
        assert_eq!(rates, vec![1.0, 2.0, 1.0, 0.0]);

        let stay = effective_rates(&g, &Strategy::kpnns(1, 0.0), 2.5).unwrap();
        assert_eq!(stay, vec![2.5; 4]);
    }

    #[test]
    fn rate_at_in_degree_k_is_exactly_lambda() {
        for &p in &[0.3, 0.6180339887, 0.75, 1.0] {
            for k in 1..=3 {
                assert_eq!(kpnns_rate(1.7, p, k, k), 1.7);
            }
        }
    }

    #[test]
    fn left_right_rates_are_flat() {
        let ps = PointSet::sample(50, 1, 77).unwrap();
        let g = build_knn_graph(&ps, 1).unwrap();
        let rates = effective_rates(&g, &Strategy::lrnns(0.3, 0.5), 2.0).unwrap();
        assert_eq!(rates, vec![2.0; 50]);

        let ps2 = PointSet::sample(50, 2, 77).unwrap();
        let g2 = build_knn_graph(&ps2, 1).unwrap();
        assert!(effective_rates(&g2, &Strategy::lrnns(0.3, 0.5), 2.0).is_err());
    }

    #[test]
    fn strategy_validation() {
        assert!(Strategy::kpnns(0, 0.5).validate().is_err());
        assert!(Strategy::kpnns(1, 1.5).validate().is_err());
        assert!(Strategy::lrnns(0.6, 0.6).validate().is_err());
        assert!(Strategy::lrnns(-0.1, 0.5).validate().is_err());
        assert!(Strategy::lrnns(0.0, 1.0).validate().is_ok());
    }

    #[test]
    fn classification_is_strict() {
        let report = classify_overload(&[1.0, 2.0, 1.0, 0.0], 1.0).unwrap();
        assert_eq!(report.overloaded, vec![false, true, false, false]);
        assert_eq!(report.overload_fraction, 0.25);

        let at_mu = classify_overload(&[1.0, 1.0, 1.0], 1.0).unwrap();
        assert_eq!(at_mu.overload_fraction, 0.0);
    }

    #[test]
    fn tally_route_on_hand_instance() {
        let q = DegreeCounts { counts: vec![1, 2, 1] };
        assert_eq!(overload_via_indegree(&q, 1, 1.0, 1.0, 1.0, 2), 0.25);

        // Empty-tail tally: nothing above the threshold.
        let q = DegreeCounts { counts: vec![2, 2, 0] };
        assert_eq!(overload_via_indegree(&q, 1, 1.0, 1.0, 1.0, 2), 0.0);
    }

    #[test]
    fn boundary_ratio_gives_zero_overload() {
        // lambda/mu exactly at 1/(1 - p + alpha_d * p): the rate of a
        // maximal-in-degree station equals mu bit-for-bit, and strict
        // comparison leaves it unloaded.
        for &p in &[0.25, 0.5, 0.6, 0.75, 1.0] {
            for (alpha, k) in [(2usize, 1usize), (2, 3), (5, 2), (12, 1)] {
                let alpha_k = alpha * k;
                let mu = kpnns_rate(1.0, p, k, alpha_k);
                let t = overload_indegree_threshold(k, p, 1.0, mu, alpha_k);
                assert_eq!(t, alpha_k + 1, "p={p} alpha={alpha} k={k}");
                let q = DegreeCounts { counts: vec![1; alpha_k + 1] };
                assert_eq!(overload_via_indegree(&q, k, p, 1.0, mu, alpha_k), 0.0);
            }
        }
    }

    #[test]
    fn integral_theta_counts_strictly_above() {
        // theta = 1 exactly (lambda = mu): in-degree 1 is not overloaded,
        // in-degree 2 is.
        let t = overload_indegree_threshold(1, 1.0, 1.0, 1.0, 2);
        assert_eq!(t, 2);
    }

    #[test]
    fn star_coefficients_hand_values() {
        assert_eq!(a_coefficients(1, 2), vec![0, 1]);
        assert_eq!(a_coefficients(2, 2), vec![0, 0]);
        // Closed form: a_m = (-1)^(m - tf - 1) * binomial(m - 1, tf).
        for tf in 0..=5usize {
            for alpha_k in tf..=10 {
                let coeffs = a_coefficients(tf, alpha_k);
                for m in 1..=alpha_k {
                    let expected = if m <= tf {
                        0
                    } else {
                        let sign = if (m - tf - 1) % 2 == 0 { 1 } else { -1 };
                        sign * binomial(m as u64 - 1, tf as u64) as i64
                    };
                    assert_eq!(coeffs[m - 1], expected, "tf={tf} m={m}");
                }
            }
        }
    }

    #[test]
    fn all_three_overload_routes_agree() {
        for seed in 0..10 {
            let ps = PointSet::sample(80, (seed % 3 + 1) as usize, 500 + seed).unwrap();
            let k = (seed % 2 + 1) as usize;
            let g = build_knn_graph(&ps, k).unwrap();
            let alpha_k = g.alpha_k().unwrap();
            for &(p, lambda, mu) in &[(1.0, 1.0, 1.0), (0.5, 0.9, 1.0), (0.25, 0.85, 1.0)] {
                let rates = effective_rates(&g, &Strategy::kpnns(k, p), lambda).unwrap();
                let direct = classify_overload(&rates, mu).unwrap().overload_fraction;
                let q = in_degree_counts(&g, alpha_k).unwrap();
                let via_q = overload_via_indegree(&q, k, p, lambda, mu, alpha_k);
                let s = star_counts(&g, alpha_k);
                let via_s = overload_via_stars(&s, k, p, lambda, mu, alpha_k);
                assert_eq!(direct, via_q, "seed {seed} p {p}");
                assert_eq!(direct, via_s, "seed {seed} p {p}");
            }
        }
    }

    proptest! {
        #[test]
        fn rates_conserve_total_arrivals(
            seed in 0u64..500,
            p in 0.0f64..=1.0,
            lambda in 0.1f64..4.0,
        ) {
            let n = 60;
            let ps = PointSet::sample(n, 1, seed).unwrap();
            let g = build_knn_graph(&ps, 1).unwrap();
            let rates = effective_rates(&g, &Strategy::kpnns(1, p), lambda).unwrap();
            let total: f64 = rates.iter().sum();
            prop_assert!((total - n as f64 * lambda).abs() < 1e-9 * n as f64);

            let lr = effective_rates(&g, &Strategy::lrnns(0.25, 0.5), lambda).unwrap();
            let lr_total: f64 = lr.iter().sum();
            prop_assert!((lr_total - n as f64 * lambda).abs() < 1e-12 * n as f64);
        }

        #[test]
        fn threshold_matches_analytic_floor_away_from_boundaries(
            k in 1usize..=3,
            p in prop::sample::select(vec![0.2, 0.4, 0.7, 0.9, 1.0]),
            ratio in 0.55f64..0.999,
        ) {
            // Generic (lambda, mu) pairs: the scan threshold equals
            // floor(theta) + 1 whenever theta is not within rounding of an
            // integer.
            let lambda = ratio;
            let mu = 1.0;
            let th = theta(k, p, lambda, mu).unwrap();
            prop_assume!((th - th.round()).abs() > 1e-9);
            let alpha_k = 12 * k;
            let scan = overload_indegree_threshold(k, p, lambda, mu, alpha_k);
            let analytic = (th.floor() as usize + 1).min(alpha_k + 1);
            prop_assert_eq!(scan, analytic);
        }
    }
}
