//! Expected density evolution under the gossip protocol.
//!
//! Averaged over pair selection and measurement outcomes, the node densities
//! follow the linear recursion `rho(t+1) = ((I - L) (x) I_2) rho(t)` and
//! converge to the initial average at rate `1 - lambda2(L)`. This module
//! propagates that recursion exactly and checks it against Monte Carlo runs
//! of the engine in [`crate::pqp`].

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{lambda2, laplacian, pair_selection_distribution, Edge, NetworkGraph};
use crate::harness::seed_stream;
use crate::par::Exec;
use crate::pqp::{evolve, rng_from_seed, NetworkState};
use crate::qstate::{density_of, DensityOperator};
use crate::stats::Moments;
use crate::tol;

/// Trials per Monte Carlo block; blocks are reduced in index order.
const MC_BLOCK: usize = 1024;

/// One density operator per node.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct DensityVector(pub Vec<DensityOperator>);

impl DensityVector {
    pub fn from_state(x: &NetworkState) -> Self {
        DensityVector(x.angles().iter().map(|&a| density_of(a)).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max_abs_diff(&self, other: &DensityVector) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }
}

/// One application of `(I - L) (x) I_2`, written on the edge list:
/// `rho_i += sum_j (p_ij / 2)(rho_j - rho_i)`.
fn step(weights: &[(Edge, f64)], rho: &DensityVector) -> DensityVector {
    let mut next = rho.0.clone();
    for &(Edge(i, j), p) in weights {
        let w = 0.5 * p;
        let d = rho.0[j].sub(&rho.0[i]).scale(w);
        next[i] = next[i].add(&d);
        next[j] = next[j].sub(&d);
    }
    DensityVector(next)
}

fn check_dims(g: &NetworkGraph, len: usize) -> Result<()> {
    if len != g.node_count() {
        return Err(Error::Dimension {
            expected: g.node_count(),
            got: len,
        });
    }
    Ok(())
}

/// `rho(t)` from `rho(0)` under the expected dynamics.
pub fn propagate_expected(g: &NetworkGraph, rho0: &DensityVector, t: usize) -> Result<DensityVector> {
    Ok(propagate_series(g, rho0, t)?.pop().expect("series is non-empty"))
}

/// `rho(0), rho(1), ..., rho(t)`.
pub fn propagate_series(g: &NetworkGraph, rho0: &DensityVector, t: usize) -> Result<Vec<DensityVector>> {
    check_dims(g, rho0.len())?;
    let dist = pair_selection_distribution(g);
    let mut out = Vec::with_capacity(t + 1);
    out.push(rho0.clone());
    for _ in 0..t {
        let next = step(dist.entries(), out.last().unwrap());
        out.push(next);
    }
    Ok(out)
}

/// Entrywise mean of the node densities.
pub fn average_limit(rho0: &DensityVector) -> DensityOperator {
    let n = rho0.len() as f64;
    rho0.0
        .iter()
        .fold(DensityOperator::ZERO, |acc, r| acc.add(r))
        .scale(1.0 / n)
}

/// `D_i(t) = || rho_i(t) - avg ||_2` (spectral norm) for every node.
pub fn deviation(g: &NetworkGraph, rho0: &DensityVector, t: usize) -> Result<Vec<f64>> {
    Ok(deviation_series(g, rho0, t)?.pop().unwrap())
}

/// Deviation vectors for `t = 0..=t_max`.
pub fn deviation_series(g: &NetworkGraph, rho0: &DensityVector, t_max: usize) -> Result<Vec<Vec<f64>>> {
    let avg = average_limit(rho0);
    Ok(propagate_series(g, rho0, t_max)?
        .iter()
        .map(|rho| rho.0.iter().map(|r| r.sub(&avg).spectral_norm()).collect())
        .collect())
}

/// CSV with columns `t, D_1, ..., D_N`.
pub fn deviation_csv(series: &[Vec<f64>]) -> String {
    let n = series.first().map_or(0, Vec::len);
    let mut out = String::from("t");
    for i in 1..=n {
        let _ = write!(out, ",D_{i}");
    }
    out.push('\n');
    for (t, row) in series.iter().enumerate() {
        let _ = write!(out, "{t}");
        for d in row {
            let _ = write!(out, ",{d:.16e}");
        }
        out.push('\n');
    }
    out
}

/// Monte Carlo estimate of the expected node densities.
#[derive(Debug, Clone, Serialize)]
pub struct DensityEstimate {
    pub trials: usize,
    pub steps: usize,
    pub mean: DensityVector,
    /// Standard error of each entry, flattened `[r00, r01, r10, r11]` per node.
    pub std_err: Vec<[f64; 4]>,
}

impl DensityEstimate {
    /// Largest `|estimate - reference|` in units of standard error. A
    /// roundoff allowance of `tol::TRIG` is removed from each difference
    /// first, so entries that are constant across trials compare exactly.
    pub fn worst_z(&self, reference: &DensityVector) -> f64 {
        let mut worst: f64 = 0.0;
        for ((m, se), r) in self.mean.0.iter().zip(&self.std_err).zip(&reference.0) {
            for ((a, b), s) in m.flat().iter().zip(r.flat()).zip(se) {
                let excess = ((a - b).abs() - tol::TRIG).max(0.0);
                let z = if excess == 0.0 { 0.0 } else if *s > 0.0 { excess / s } else { f64::INFINITY };
                worst = worst.max(z);
            }
        }
        worst
    }
}

/// Runs `trials` independent trajectories of exactly `steps` slots and
/// averages `density_of` of the final angles. Trial `k` uses
/// `seed_stream(master_seed, k)`.
pub fn monte_carlo_density(
    g: &NetworkGraph,
    init: &NetworkState,
    steps: usize,
    trials: usize,
    master_seed: u64,
    exec: Exec,
) -> Result<DensityEstimate> {
    check_dims(g, init.len())?;
    if trials == 0 {
        return Err(Error::Config("monte_carlo_density needs trials >= 1".into()));
    }
    let n = init.len();
    let blocks = trials.div_ceil(MC_BLOCK);
    let partial = exec.map(blocks, |b| {
        let mut acc = Moments::new(4 * n);
        let mut flat = vec![0.0; 4 * n];
        for k in b * MC_BLOCK..((b + 1) * MC_BLOCK).min(trials) {
            let mut rng = rng_from_seed(seed_stream(master_seed, k as u64));
            let x = evolve(g, init, steps, &mut rng);
            for (i, a) in x.angles().iter().enumerate() {
                flat[4 * i..4 * i + 4].copy_from_slice(&density_of(*a).flat());
            }
            acc.push(&flat);
        }
        acc
    });
    let mut total = Moments::new(4 * n);
    for p in &partial {
        total.merge(p);
    }
    let mean = total.mean();
    let se = total.std_err();
    let op = |v: &[f64]| DensityOperator([[v[0], v[1]], [v[2], v[3]]]);
    Ok(DensityEstimate {
        trials,
        steps,
        mean: DensityVector(mean.chunks(4).map(op).collect()),
        std_err: se.chunks(4).map(|c| [c[0], c[1], c[2], c[3]]).collect(),
    })
}

/// Outcome of the exponential-rate check.
#[derive(Debug, Clone, Serialize)]
pub struct RateReport {
    pub lambda2: f64,
    /// `m(t) = max_i D_i(t)` for `t = 0..=t_max`.
    pub max_deviation: Vec<f64>,
    /// `m(t+1) / m(t)`, `None` once `m(t)` is zero.
    pub ratios: Vec<Option<f64>>,
    /// Times at which `m(t) > m(0) (1 - lambda2)^t (1 + slack)`.
    pub violations: Vec<usize>,
}

impl RateReport {
    pub fn bound_holds(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn convergence_rate_check(g: &NetworkGraph, rho0: &DensityVector, t_max: usize) -> Result<RateReport> {
    let l2 = lambda2(&laplacian(g))?;
    let rate = 1.0 - l2;
    let m: Vec<f64> = deviation_series(g, rho0, t_max)?
        .iter()
        .map(|d| d.iter().copied().fold(0.0, f64::max))
        .collect();
    let ratios = m
        .windows(2)
        .map(|w| (w[0] > 0.0).then(|| w[1] / w[0]))
        .collect();
    let violations = m
        .iter()
        .enumerate()
        .filter(|&(t, &mt)| mt > m[0] * rate.powi(t as i32) * (1.0 + tol::RATE_BOUND_SLACK))
        .map(|(t, _)| t)
        .collect();
    Ok(RateReport {
        lambda2: l2,
        max_deviation: m,
        ratios,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::StateAngle;
    use std::f64::consts::FRAC_PI_2;

    fn split6() -> NetworkState {
        NetworkState::from_radians(&[0.0, 0.0, 0.0, FRAC_PI_2, FRAC_PI_2, FRAC_PI_2]).unwrap()
    }

    /// Dense `(I - L)` multiply, independent of the edge-list update.
    fn dense_step(g: &NetworkGraph, rho: &DensityVector) -> DensityVector {
        let l = laplacian(g);
        let n = g.node_count();
        DensityVector(
            (0..n)
                .map(|i| {
                    (0..n).fold(DensityOperator::ZERO, |acc, j| {
                        let w = if i == j { 1.0 } else { 0.0 } - l.get(i, j);
                        acc.add(&rho.0[j].scale(w))
                    })
                })
                .collect(),
        )
    }

    #[test]
    fn zero_steps_is_identity() {
        let g = NetworkGraph::complete(6).unwrap();
        let rho = DensityVector::from_state(&split6());
        assert_eq!(propagate_expected(&g, &rho, 0).unwrap(), rho);
    }

    #[test]
    fn single_edge_averages_in_one_step() {
        let g = NetworkGraph::path(2).unwrap();
        let x = NetworkState::from_radians(&[0.3, 1.9]).unwrap();
        let rho = DensityVector::from_state(&x);
        let avg = rho.0[0].add(&rho.0[1]).scale(0.5);
        let next = propagate_expected(&g, &rho, 1).unwrap();
        assert!(next.0[0].max_abs_diff(&avg) < 1e-15);
        assert!(next.0[1].max_abs_diff(&avg) < 1e-15);
        let d = deviation(&g, &rho, 3).unwrap();
        assert!(d.iter().all(|&v| v < 1e-15));
    }

    #[test]
    fn k6_one_step_mixes_toward_average() {
        let g = NetworkGraph::complete(6).unwrap();
        let rho = DensityVector::from_state(&split6());
        let avg = average_limit(&rho);
        let next = propagate_expected(&g, &rho, 1).unwrap();
        assert!(next.max_abs_diff(&dense_step(&g, &rho)) < 1e-15);
        for (r1, r0) in next.0.iter().zip(&rho.0) {
            assert!(r1.max_abs_diff(&r0.scale(0.8).add(&avg.scale(0.2))) < 1e-15);
        }
    }

    #[test]
    fn edge_update_matches_dense_multiply() {
        let g = NetworkGraph::parse_edge_list("5\n1 2\n2 3\n3 4\n4 5\n2 5\n").unwrap();
        let x = NetworkState::from_radians(&[0.1, 0.7, 1.4, 2.2, 3.0]).unwrap();
        let mut a = DensityVector::from_state(&x);
        let mut b = a.clone();
        for _ in 0..20 {
            a = propagate_expected(&g, &a, 1).unwrap();
            b = dense_step(&g, &b);
        }
        assert!(a.max_abs_diff(&b) < 1e-14);
    }

    #[test]
    fn average_limit_examples() {
        let one = DensityVector::from_state(&NetworkState::from_radians(&[0.4; 3]).unwrap());
        assert!(average_limit(&one).max_abs_diff(&one.0[0]) < 1e-15);
        let two = DensityVector::from_state(&NetworkState::from_radians(&[0.0, FRAC_PI_2]).unwrap());
        assert!(average_limit(&two).max_abs_diff(&DensityOperator::MIXED) < 1e-15);
        let six = DensityVector::from_state(&split6());
        assert!(average_limit(&six).max_abs_diff(&DensityOperator::MIXED) < 1e-15);
    }

    #[test]
    fn propagation_preserves_validity_and_average() {
        let g = NetworkGraph::ring(6).unwrap();
        let x = NetworkState::from_radians(&[0.0, 0.5, 1.0, 1.5, 2.0, 2.5]).unwrap();
        let rho0 = DensityVector::from_state(&x);
        let avg0 = average_limit(&rho0);
        for rho in propagate_series(&g, &rho0, 200).unwrap() {
            assert!(rho.0.iter().all(|r| r.is_valid(tol::TRIG)));
            assert!(average_limit(&rho).max_abs_diff(&avg0) < 1e-12);
        }
        let far = deviation(&g, &rho0, 2000).unwrap();
        assert!(far.iter().all(|&d| d < 1e-10));
    }

    #[test]
    fn i_minus_l_rows_are_stochastic() {
        for g in [
            NetworkGraph::complete(6).unwrap(),
            NetworkGraph::ring(6).unwrap(),
            NetworkGraph::path(3).unwrap(),
        ] {
            let l = laplacian(&g);
            for i in 0..g.node_count() {
                let row: Vec<f64> = (0..g.node_count())
                    .map(|j| if i == j { 1.0 } else { 0.0 } - l.get(i, j))
                    .collect();
                assert!(row.iter().all(|&w| w >= 0.0));
                assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn k6_deviation_ratio() {
        let g = NetworkGraph::complete(6).unwrap();
        let rho = DensityVector::from_state(&split6());
        let series = deviation_series(&g, &rho, 50).unwrap();
        assert!(series[0].iter().all(|&d| (d - 0.5).abs() < 1e-15));
        for w in series.windows(2) {
            for (a, b) in w[0].iter().zip(&w[1]) {
                assert!((b / a - 0.8).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn rate_check_examples() {
        let k6 = NetworkGraph::complete(6).unwrap();
        let rep = convergence_rate_check(&k6, &DensityVector::from_state(&split6()), 50).unwrap();
        assert!(rep.bound_holds());
        assert!(rep.ratios.iter().all(|r| (r.unwrap() - 0.8).abs() < 1e-10));

        let flat = DensityVector(vec![DensityOperator::MIXED; 6]);
        let rep = convergence_rate_check(&k6, &flat, 20).unwrap();
        assert!(rep.bound_holds());
        assert!(rep.max_deviation.iter().all(|&m| m == 0.0));

        let p3 = NetworkGraph::path(3).unwrap();
        let x = NetworkState::from_radians(&[0.0, 0.0, FRAC_PI_2]).unwrap();
        let rep = convergence_rate_check(&p3, &DensityVector::from_state(&x), 30).unwrap();
        assert!(rep.bound_holds());
        assert!((rep.lambda2 - 0.25).abs() < 1e-12);
        let last = rep.ratios.last().unwrap().unwrap();
        assert!((last - 0.75).abs() < 1e-9, "{last}");
    }

    #[test]
    fn ring_split_overshoots_max_node_bound() {
        // On ring6 the split deviation is (4/3) of the slowest Fourier mode
        // minus (1/3) of the alternating one, so the middle node of each
        // block decays as (11/12)^t (4/3 - (1/3)(8/11)^t).
        let g = NetworkGraph::ring(6).unwrap();
        let rep = convergence_rate_check(&g, &DensityVector::from_state(&split6()), 40).unwrap();
        assert!((rep.lambda2 - 1.0 / 12.0).abs() < 1e-12);
        assert!(!rep.bound_holds());
        assert_eq!(rep.violations, (1..=40).collect::<Vec<_>>());
        for (t, m) in rep.max_deviation.iter().enumerate() {
            let want = 0.5 * (11.0f64 / 12.0).powi(t as i32) * (4.0 / 3.0 - (8.0f64 / 11.0).powi(t as i32) / 3.0);
            assert!((m - want).abs() < 1e-12, "{t}: {m} vs {want}");
        }
    }

    #[test]
    fn deviation_is_automorphism_invariant() {
        let init = split6();
        for (g, perm) in [
            (NetworkGraph::complete(6).unwrap(), vec![3, 1, 5, 0, 2, 4]),
            (NetworkGraph::ring(6).unwrap(), vec![1, 2, 3, 4, 5, 0]),
            (NetworkGraph::ring(6).unwrap(), vec![5, 4, 3, 2, 1, 0]),
        ] {
            let h = g.relabeled(&perm);
            assert_eq!(h, g);
            let mut permuted = vec![StateAngle::ZERO; 6];
            for (v, &p) in perm.iter().enumerate() {
                permuted[p] = init.get(v);
            }
            let rho_a = DensityVector::from_state(&init);
            let rho_b = DensityVector::from_state(&NetworkState::new(permuted));
            for t in [0, 1, 4, 9] {
                let da = deviation(&g, &rho_a, t).unwrap();
                let db = deviation(&g, &rho_b, t).unwrap();
                for (v, &p) in perm.iter().enumerate() {
                    assert!((da[v] - db[p]).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn monte_carlo_zero_steps_is_exact() {
        let g = NetworkGraph::complete(6).unwrap();
        let est = monte_carlo_density(&g, &split6(), 0, 10, 1, Exec::default()).unwrap();
        assert_eq!(est.mean, DensityVector::from_state(&split6()));
        assert!(est.std_err.iter().flatten().all(|&s| s == 0.0));
    }

    #[test]
    fn monte_carlo_modes_are_identical() {
        let g = NetworkGraph::ring(6).unwrap();
        let runs: Vec<_> = Exec::available()
            .iter()
            .map(|&m| monte_carlo_density(&g, &split6(), 5, 3000, 9, m).unwrap())
            .collect();
        for r in &runs[1..] {
            assert_eq!(r.mean, runs[0].mean);
            assert_eq!(r.std_err, runs[0].std_err);
        }
    }

    #[test]
    fn monte_carlo_single_edge() {
        let g = NetworkGraph::path(2).unwrap();
        let init = NetworkState::from_radians(&[0.0, FRAC_PI_2]).unwrap();
        let est = monte_carlo_density(&g, &init, 1, 100_000, 4, Exec::default()).unwrap();
        let want = DensityVector(vec![DensityOperator::MIXED; 2]);
        assert!(est.worst_z(&want) < 4.0);
        assert!(est.mean.max_abs_diff(&want) < 0.01);
    }

    #[test]
    fn deviation_csv_layout() {
        let csv = deviation_csv(&[vec![0.5, 0.25], vec![0.0, 0.125]]);
        assert_eq!(
            csv,
            "t,D_1,D_2\n0,5.0000000000000000e-1,2.5000000000000000e-1\n\
             1,0.0000000000000000e0,1.2500000000000000e-1\n"
        );
    }
}
