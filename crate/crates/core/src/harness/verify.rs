//! Self-check suite behind the `verify` subcommand.
//!
//! Each check compares an implementation path against an independent oracle
//! (sampling frequencies, outcome enumeration, full expectimax, closed forms)
//! at sizes that finish in a few seconds.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use serde::Serialize;

use crate::density::{monte_carlo_density, propagate_expected, DensityVector};
use crate::graph::{lambda2, laplacian, NetworkGraph};
use crate::par::Exec;
use crate::planner::{expectimax_oracle, solve_finite, solve_infinite, GridSpec, Power, SolveOptions};
use crate::pqp::{disagreement_h, enumerated_next_h, h_drift, rng_from_seed, NetworkState};
use crate::qstate::{measure, outcome_probability, MeasurementAngle, Outcome, StateAngle};
use crate::tol;

#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckResult {
    pub fn line(&self) -> String {
        format!(
            "[{}] {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail
        )
    }
}

fn check(name: &'static str, passed: bool, detail: String) -> CheckResult {
    CheckResult { name, passed, detail }
}

pub fn born_rule(seed: u64) -> CheckResult {
    let step = PI / 200.0;
    let mut worst_norm: f64 = 0.0;
    for i in 0..200 {
        for j in 0..100 {
            let x = StateAngle::new(i as f64 * step).unwrap();
            let u = MeasurementAngle::new(j as f64 * step).unwrap();
            let s = outcome_probability(x, u, Outcome::Left) + outcome_probability(x, u, Outcome::Right);
            worst_norm = worst_norm.max((s - 1.0).abs());
        }
    }
    let mut rng = rng_from_seed(seed);
    let draws = 100_000;
    let mut worst_z: f64 = 0.0;
    for _ in 0..8 {
        let x = StateAngle::new(rng.gen::<f64>() * PI).unwrap();
        let u = MeasurementAngle::new(rng.gen::<f64>() * FRAC_PI_2).unwrap();
        let p = outcome_probability(x, u, Outcome::Left);
        let hits = (0..draws)
            .filter(|_| measure(x, u, &mut rng).0 == Outcome::Left)
            .count();
        let se = (p * (1.0 - p) / draws as f64).sqrt();
        let diff = (hits as f64 / draws as f64 - p).abs();
        worst_z = worst_z.max(if se > 0.0 { diff / se } else { diff / 1e-12 });
    }
    check(
        "born-rule",
        worst_norm < tol::TRIG && worst_z < 4.0,
        format!("max normalization error {worst_norm:.2e}, worst frequency |z| {worst_z:.2}"),
    )
}

pub fn submartingale_drift(seed: u64) -> CheckResult {
    let mut rng = rng_from_seed(seed);
    let mut worst: f64 = 0.0;
    for g in [NetworkGraph::complete(6).unwrap(), NetworkGraph::path(3).unwrap()] {
        for _ in 0..100 {
            let raw: Vec<f64> = (0..g.node_count()).map(|_| rng.gen::<f64>() * PI).collect();
            let x = NetworkState::from_radians(&raw).unwrap();
            let lhs = enumerated_next_h(&g, &x);
            let rhs = disagreement_h(&x) + h_drift(&g, &x);
            worst = worst.max((lhs - rhs).abs());
        }
    }
    check(
        "h-drift",
        worst < tol::TRIG,
        format!("max |E[h(t+1)] - h - drift| = {worst:.2e} over 200 states"),
    )
}

pub fn density_linear_law(seed: u64, exec: Exec) -> CheckResult {
    let init = NetworkState::from_pi_units(&[0.0, 0.0, 0.0, 0.5, 0.5, 0.5]).unwrap();
    let mut worst: f64 = 0.0;
    for g in [NetworkGraph::complete(6).unwrap(), NetworkGraph::ring(6).unwrap()] {
        let expected = propagate_expected(&g, &DensityVector::from_state(&init), 5).unwrap();
        let est = monte_carlo_density(&g, &init, 5, 20_000, seed, exec).unwrap();
        worst = worst.max(est.worst_z(&expected));
    }
    check(
        "density-linear-law",
        worst < 4.0,
        format!("Monte Carlo vs (I - L) propagation at t=5: worst |z| {worst:.2}"),
    )
}

pub fn spectral_gap() -> CheckResult {
    let mut worst: f64 = 0.0;
    for n in 2..=10 {
        let l2 = lambda2(&laplacian(&NetworkGraph::complete(n).unwrap())).unwrap();
        worst = worst.max((l2 - 1.0 / (n - 1) as f64).abs());
    }
    check(
        "spectral-gap",
        worst < 1e-10,
        format!("max |lambda2(K_N) - 1/(N-1)| = {worst:.2e} for N = 2..10"),
    )
}

pub fn dp_vs_expectimax(exec: Exec) -> CheckResult {
    let spec = GridSpec::new(2).unwrap();
    let opts = SolveOptions { exec, ..Default::default() };
    let mut worst: f64 = 0.0;
    for t in 1..=2 {
        let (v, _) = solve_finite(2, spec, t, Power::Two, opts).unwrap();
        for s in 0..v.layers[0].len() {
            let x = v.state(s);
            let o = expectimax_oracle(2, spec, t, Power::Two, &x).unwrap();
            worst = worst.max((o - v.layers[0][s]).abs());
        }
    }
    check(
        "dp-vs-expectimax",
        worst <= 1e-12,
        format!("max |C - oracle| = {worst:.2e} on N=2, K=2, T in {{1,2}}"),
    )
}

pub fn two_qubit_law(exec: Exec) -> CheckResult {
    let spec = GridSpec::new(4).unwrap();
    let opts = SolveOptions { exec, ..Default::default() };
    let sol = solve_infinite(2, spec, tol::DEFAULT_VI_TOL, tol::DEFAULT_VI_MAX_ITERS, opts).unwrap();
    let mut worst: f64 = 0.0;
    for a in 0..8 {
        for b in 0..8 {
            if a != b && (a + b) % 2 == 0 {
                let want = 1.0 + (spec.angle(a) - spec.angle(b)).sin().powi(2);
                worst = worst.max((sol.values.value(&[a, b], 0) - want).abs());
            }
        }
    }
    check(
        "two-qubit-hitting-time",
        worst < 1e-6,
        format!("max |G - (1 + sin^2 delta)| = {worst:.2e} at K=4"),
    )
}

pub fn run_all(seed: u64, exec: Exec) -> Vec<CheckResult> {
    vec![
        born_rule(seed),
        submartingale_drift(seed),
        density_linear_law(seed, exec),
        spectral_gap(),
        dp_vs_expectimax(exec),
        two_qubit_law(exec),
    ]
}
