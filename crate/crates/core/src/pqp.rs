//! Pairwise qubit projection (PQP) gossip engine.
//!
//! In every slot one edge `{i, j}` is drawn (uniform node, then uniform
//! neighbour). Both endpoints are measured at the midpoint of their angles
//! reduced mod `pi/2`, and each collapses independently onto one of the two
//! eigenstates. All other nodes keep their states.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{pair_selection_distribution, Edge, NetworkGraph};
use crate::qstate::{
    canonicalize_measurement, density_of, eigenstate, measure, outcome_probability,
    trace_product, MeasurementAngle, Outcome, StateAngle,
};

/// Generator used for every seeded run in this crate.
pub type SimRng = ChaCha8Rng;

pub fn rng_from_seed(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Joint state of all qubits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NetworkState(Vec<StateAngle>);

impl NetworkState {
    pub fn new(angles: Vec<StateAngle>) -> Self {
        NetworkState(angles)
    }

    /// Canonicalizes raw radians.
    pub fn from_radians(raw: &[f64]) -> Result<Self> {
        raw.iter()
            .map(|&r| StateAngle::new(r))
            .collect::<Result<_>>()
            .map(NetworkState)
    }

    /// Canonicalizes angles given in units of pi.
    pub fn from_pi_units(units: &[f64]) -> Result<Self> {
        units
            .iter()
            .map(|&r| StateAngle::from_pi_units(r))
            .collect::<Result<_>>()
            .map(NetworkState)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn angles(&self) -> &[StateAngle] {
        &self.0
    }

    pub fn get(&self, i: usize) -> StateAngle {
        self.0[i]
    }

    pub fn radians(&self) -> Vec<f64> {
        self.0.iter().map(|a| a.value()).collect()
    }

    fn check_len(&self, g: &NetworkGraph) -> Result<()> {
        if self.len() != g.node_count() {
            return Err(Error::Dimension {
                expected: g.node_count(),
                got: self.len(),
            });
        }
        Ok(())
    }
}

/// One slot of the protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PqpEvent {
    /// Slot index; the event moves the network from `x(time)` to `x(time + 1)`.
    pub time: usize,
    pub edge: (usize, usize),
    pub measurement: MeasurementAngle,
    pub outcomes: (Outcome, Outcome),
    pub post_states: (StateAngle, StateAngle),
}

/// Full record of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub seed: u64,
    pub eps: f64,
    pub max_steps: usize,
    pub initial: NetworkState,
    pub events: Vec<PqpEvent>,
    #[serde(rename = "final")]
    pub final_state: NetworkState,
    /// First slot at which consensus held, `None` when censored by `max_steps`.
    pub consensus_time: Option<usize>,
}

impl Trajectory {
    /// Re-applies the recorded events to the initial state.
    pub fn replay(&self) -> NetworkState {
        let mut x = self.initial.0.clone();
        for ev in &self.events {
            x[ev.edge.0] = ev.post_states.0;
            x[ev.edge.1] = ev.post_states.1;
        }
        NetworkState(x)
    }

    /// States `x(0), x(1), ...` after each event.
    pub fn states(&self) -> Vec<NetworkState> {
        let mut out = Vec::with_capacity(self.events.len() + 1);
        let mut x = self.initial.clone();
        out.push(x.clone());
        for ev in &self.events {
            x.0[ev.edge.0] = ev.post_states.0;
            x.0[ev.edge.1] = ev.post_states.1;
            out.push(x.clone());
        }
        out
    }

    /// `h(t)` for every recorded state.
    pub fn h_series(&self) -> Vec<f64> {
        self.states().iter().map(disagreement_h).collect()
    }

    /// CSV with one row per slot. Row `t = 0` holds the initial state with
    /// empty event columns; row `t` holds the event that produced `x(t)`.
    /// Node indices are 1-based and angles carry 17 significant digits.
    pub fn to_csv(&self) -> String {
        let n = self.initial.len();
        let mut out = String::from("t,i,j,u,y_i,y_j");
        for k in 1..=n {
            let _ = write!(out, ",x_{k}");
        }
        out.push_str(",h\n");
        let write_state = |out: &mut String, x: &NetworkState| {
            for a in x.angles() {
                let _ = write!(out, ",{:.16e}", a.value());
            }
            let _ = writeln!(out, ",{:.16e}", disagreement_h(x));
        };
        out.push_str("0,,,,,");
        write_state(&mut out, &self.initial);
        let mut x = self.initial.clone();
        for ev in &self.events {
            x.0[ev.edge.0] = ev.post_states.0;
            x.0[ev.edge.1] = ev.post_states.1;
            let _ = write!(
                out,
                "{},{},{},{:.16e},{},{}",
                ev.time + 1,
                ev.edge.0 + 1,
                ev.edge.1 + 1,
                ev.measurement.value(),
                ev.outcomes.0.as_str(),
                ev.outcomes.1.as_str()
            );
            write_state(&mut out, &x);
        }
        out
    }
}

/// Measurement applied by a pair: the midpoint of the raw angles, mod `pi/2`.
pub fn pair_measurement(xi: StateAngle, xj: StateAngle) -> MeasurementAngle {
    canonicalize_measurement(0.5 * (xi.value() + xj.value()))
        .expect("canonical angles are finite")
}

/// Draws a node uniformly, then a neighbour uniformly. Consumes two variates.
pub fn select_pair<R: Rng + ?Sized>(g: &NetworkGraph, rng: &mut R) -> Edge {
    let n = g.node_count();
    let i = uniform_index(rng, n);
    let nb = g.neighbors(i);
    let j = nb[uniform_index(rng, nb.len())];
    Edge::new(i, j)
}

fn uniform_index<R: Rng + ?Sized>(rng: &mut R, len: usize) -> usize {
    let r: f64 = rng.gen();
    ((r * len as f64) as usize).min(len - 1)
}

/// Applies one protocol slot on `edge` in place.
///
/// Node `edge.0` is measured before `edge.1`; exactly two variates are used.
pub fn pqp_step_in_place<R: Rng + ?Sized>(
    state: &mut NetworkState,
    edge: Edge,
    time: usize,
    rng: &mut R,
) -> PqpEvent {
    let Edge(i, j) = edge;
    let u = pair_measurement(state.0[i], state.0[j]);
    let (yi, xi) = measure(state.0[i], u, rng);
    let (yj, xj) = measure(state.0[j], u, rng);
    state.0[i] = xi;
    state.0[j] = xj;
    PqpEvent {
        time,
        edge: (i, j),
        measurement: u,
        outcomes: (yi, yj),
        post_states: (xi, xj),
    }
}

pub fn pqp_step<R: Rng + ?Sized>(
    state: &NetworkState,
    edge: Edge,
    time: usize,
    rng: &mut R,
) -> (NetworkState, PqpEvent) {
    let mut next = state.clone();
    let ev = pqp_step_in_place(&mut next, edge, time, rng);
    (next, ev)
}

/// `h = sum_{i<j} cos^2(x_i - x_j)`.
pub fn disagreement_h(state: &NetworkState) -> f64 {
    let x = &state.0;
    let mut h = 0.0;
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let c = (x[i].value() - x[j].value()).cos();
            h += c * c;
        }
    }
    h
}

/// True iff every pair has `cos^2(x_i - x_j) >= 1 - eps`.
pub fn consensus_reached(state: &NetworkState, eps: f64) -> bool {
    let x = &state.0;
    let floor = 1.0 - eps;
    (0..x.len()).all(|i| {
        (i + 1..x.len()).all(|j| {
            let c = (x[i].value() - x[j].value()).cos();
            c * c >= floor
        })
    })
}

/// Runs the protocol until consensus or `max_steps` slots.
pub fn run(
    g: &NetworkGraph,
    init: &NetworkState,
    max_steps: usize,
    eps: f64,
    seed: u64,
) -> Result<Trajectory> {
    init.check_len(g)?;
    let mut rng = rng_from_seed(seed);
    let mut state = init.clone();
    let mut events = Vec::new();
    let mut consensus_time = consensus_reached(&state, eps).then_some(0);
    let mut t = 0;
    while consensus_time.is_none() && t < max_steps {
        let edge = select_pair(g, &mut rng);
        events.push(pqp_step_in_place(&mut state, edge, t, &mut rng));
        t += 1;
        if consensus_reached(&state, eps) {
            consensus_time = Some(t);
        }
    }
    Ok(Trajectory {
        seed,
        eps,
        max_steps,
        initial: init.clone(),
        events,
        final_state: state,
        consensus_time,
    })
}

/// Runs exactly `steps` slots without a stopping rule and returns the final state.
pub fn evolve<R: Rng + ?Sized>(
    g: &NetworkGraph,
    init: &NetworkState,
    steps: usize,
    rng: &mut R,
) -> NetworkState {
    let mut state = init.clone();
    for t in 0..steps {
        let edge = select_pair(g, rng);
        pqp_step_in_place(&mut state, edge, t, rng);
    }
    state
}

/// Exact `E[h(t+1) | x(t)]` by enumerating every edge and the four joint
/// outcomes of its two measurements.
pub fn enumerated_next_h(g: &NetworkGraph, state: &NetworkState) -> f64 {
    let dist = pair_selection_distribution(g);
    let mut total = 0.0;
    for &(Edge(i, j), p) in dist.entries() {
        let u = pair_measurement(state.0[i], state.0[j]);
        for yi in Outcome::ALL {
            for yj in Outcome::ALL {
                let q = outcome_probability(state.0[i], u, yi)
                    * outcome_probability(state.0[j], u, yj);
                if q == 0.0 {
                    continue;
                }
                let mut next = state.clone();
                next.0[i] = eigenstate(u, yi);
                next.0[j] = eigenstate(u, yj);
                total += p * q * disagreement_h(&next);
            }
        }
    }
    total
}

/// Closed-form one-step drift of `h`: `sum_E (p_km / 2)(1 - Tr(rho_k rho_m))`.
pub fn h_drift(g: &NetworkGraph, state: &NetworkState) -> f64 {
    pair_selection_distribution(g)
        .entries()
        .iter()
        .map(|&(Edge(k, m), p)| {
            let tr = trace_product(&density_of(state.0[k]), &density_of(state.0[m]));
            0.5 * p * (1.0 - tr)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::fidelity;
    use proptest::prelude::*;
    use rand::Rng;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, FRAC_PI_8, PI};

    fn state(raw: &[f64]) -> NetworkState {
        NetworkState::from_radians(raw).unwrap()
    }

    #[test]
    fn equal_pair_is_fixed() {
        let mut rng = rng_from_seed(1);
        for a in [0.0, 0.3, FRAC_PI_2, 2.5] {
            let x = state(&[a, a]);
            for t in 0..200 {
                let (next, ev) = pqp_step(&x, Edge(0, 1), t, &mut rng);
                assert_eq!(next.get(0), next.get(1));
                assert!((next.get(0).value() - x.get(0).value()).abs() < 1e-15);
                assert_eq!(ev.measurement, pair_measurement(x.get(0), x.get(1)));
            }
        }
    }

    #[test]
    fn orthogonal_pair_splits_evenly() {
        let mut rng = rng_from_seed(7);
        let x = state(&[0.0, FRAC_PI_2]);
        let trials = 100_000;
        let mut at_quarter = [0usize; 2];
        for t in 0..trials {
            let (next, ev) = pqp_step(&x, Edge(0, 1), t, &mut rng);
            assert!((ev.measurement.value() - FRAC_PI_4).abs() < 1e-15);
            for (k, c) in at_quarter.iter_mut().enumerate() {
                let v = next.get(k).value();
                if (v - FRAC_PI_4).abs() < 1e-12 {
                    *c += 1;
                } else {
                    assert!((v - 0.75 * PI).abs() < 1e-12);
                }
            }
        }
        let se = (0.25f64 / trials as f64).sqrt();
        for c in at_quarter {
            assert!((c as f64 / trials as f64 - 0.5).abs() < 4.0 * se);
        }
    }

    #[test]
    fn eighth_turn_born_frequencies() {
        let mut rng = rng_from_seed(99);
        let x = state(&[0.0, FRAC_PI_4]);
        let trials = 100_000;
        let p = FRAC_PI_8.cos().powi(2);
        let mut hits = [0usize; 2];
        for t in 0..trials {
            let (next, _) = pqp_step(&x, Edge(0, 1), t, &mut rng);
            for (k, h) in hits.iter_mut().enumerate() {
                let v = next.get(k).value();
                if (v - FRAC_PI_8).abs() < 1e-12 {
                    *h += 1;
                } else {
                    assert!((v - 5.0 * FRAC_PI_8).abs() < 1e-12);
                }
            }
        }
        let se = (p * (1.0 - p) / trials as f64).sqrt();
        for h in hits {
            assert!((h as f64 / trials as f64 - p).abs() < 4.0 * se);
        }
    }

    #[test]
    fn step_consumes_two_variates() {
        let mut a = rng_from_seed(5);
        let mut b = rng_from_seed(5);
        pqp_step(&state(&[0.2, 1.3, 2.0]), Edge(0, 2), 0, &mut a);
        let _: (f64, f64) = (b.gen(), b.gen());
        assert_eq!(a.gen::<u64>(), b.gen::<u64>());

        let g = NetworkGraph::complete(5).unwrap();
        select_pair(&g, &mut a);
        let _: (f64, f64) = (b.gen(), b.gen());
        assert_eq!(a.gen::<u64>(), b.gen::<u64>());
    }

    #[test]
    fn select_pair_frequencies() {
        let single = NetworkGraph::path(2).unwrap();
        let mut rng = rng_from_seed(3);
        assert!((0..1000).all(|_| select_pair(&single, &mut rng) == Edge(0, 1)));

        let p3 = NetworkGraph::path(3).unwrap();
        let n = 100_000;
        let c = (0..n).filter(|_| select_pair(&p3, &mut rng) == Edge(0, 1)).count();
        assert!((c as f64 / n as f64 - 0.5).abs() < 0.004);
    }

    #[test]
    fn edge_frequencies_match_distribution() {
        for g in [
            NetworkGraph::complete(6).unwrap(),
            NetworkGraph::parse_edge_list("5\n1 2\n2 3\n3 4\n4 5\n1 3\n").unwrap(),
        ] {
            let dist = pair_selection_distribution(&g);
            let mut rng = rng_from_seed(17);
            let draws = 1_000_000;
            let mut counts = std::collections::HashMap::new();
            for _ in 0..draws {
                *counts.entry(select_pair(&g, &mut rng)).or_insert(0usize) += 1;
            }
            for &(e, p) in dist.entries() {
                let f = counts[&e] as f64 / draws as f64;
                let se = (p * (1.0 - p) / draws as f64).sqrt();
                assert!((f - p).abs() < 4.0 * se, "{e}: {f} vs {p}");
            }
        }
    }

    #[test]
    fn disagreement_examples() {
        assert!((disagreement_h(&state(&[0.4; 6])) - 15.0).abs() < 1e-12);
        assert!(disagreement_h(&state(&[0.0, FRAC_PI_2])) < 1e-30);
        let split = state(&[0.0, 0.0, 0.0, FRAC_PI_2, FRAC_PI_2, FRAC_PI_2]);
        assert!((disagreement_h(&split) - 6.0).abs() < 1e-12);
    }

    #[test]
    fn consensus_examples() {
        assert!(consensus_reached(&state(&[1.0; 4]), 1e-300));
        assert!(!consensus_reached(&state(&[0.0, FRAC_PI_2]), 0.999));
        assert!(consensus_reached(&state(&[0.0, 1e-6]), 1e-9));
        // wrap-around: angles near 0 and near pi are the same state
        assert!(consensus_reached(&state(&[1e-7, PI - 1e-7]), 1e-9));
    }

    #[test]
    fn run_from_consensus_is_empty() {
        let g = NetworkGraph::complete(4).unwrap();
        let traj = run(&g, &state(&[0.7; 4]), 100, 1e-9, 1).unwrap();
        assert!(traj.events.is_empty());
        assert_eq!(traj.consensus_time, Some(0));
    }

    #[test]
    fn run_checks_dimensions() {
        let g = NetworkGraph::complete(4).unwrap();
        assert!(matches!(
            run(&g, &state(&[0.0; 3]), 10, 1e-9, 1),
            Err(Error::Dimension { expected: 4, got: 3 })
        ));
    }

    #[test]
    fn run_is_deterministic_and_replayable() {
        let g = NetworkGraph::ring(6).unwrap();
        let init = NetworkState::from_pi_units(&[0.0, 0.1, 0.2, 0.5, 0.7, 0.9]).unwrap();
        let a = run(&g, &init, 500, 1e-9, 42).unwrap();
        let b = run(&g, &init, 500, 1e-9, 42).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!(a.replay(), a.final_state);
        let c = run(&g, &init, 500, 1e-9, 43).unwrap();
        assert_ne!(a.to_csv(), c.to_csv());
    }

    #[test]
    fn csv_layout() {
        let g = NetworkGraph::path(2).unwrap();
        let traj = run(&g, &state(&[0.0, FRAC_PI_2]), 50, 1e-9, 8).unwrap();
        let csv = traj.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "t,i,j,u,y_i,y_j,x_1,x_2,h");
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(&first[..6], &["0", "", "", "", "", ""]);
        assert_eq!(first[7], "1.5707963267948966e0");
        assert_eq!(csv.lines().count(), traj.events.len() + 2);
    }

    #[test]
    fn n2_hitting_time_is_geometric() {
        let g = NetworkGraph::path(2).unwrap();
        let init = state(&[0.0, FRAC_PI_2]);
        let runs = 10_000;
        let total: usize = (0..runs)
            .map(|s| run(&g, &init, 10_000, 1e-9, s).unwrap().consensus_time.unwrap())
            .sum();
        let mean = total as f64 / runs as f64;
        assert!((mean - 2.0).abs() < 0.05, "mean {mean}");
    }

    #[test]
    fn drift_matches_enumeration_examples() {
        let g = NetworkGraph::complete(6).unwrap();
        let x = state(&[0.0, 0.0, 0.0, FRAC_PI_2, FRAC_PI_2, FRAC_PI_2]);
        let lhs = enumerated_next_h(&g, &x);
        let rhs = disagreement_h(&x) + h_drift(&g, &x);
        assert!((lhs - rhs).abs() < 1e-12);
        // 9 of 15 edges are orthogonal pairs, each p = 1/15
        assert!((h_drift(&g, &x) - 9.0 / 30.0).abs() < 1e-12);
    }

    fn arb_state(n: usize) -> impl Strategy<Value = NetworkState> {
        proptest::collection::vec(0.0f64..PI, n).prop_map(|v| state(&v))
    }

    proptest! {
        #[test]
        fn step_invariants(x in arb_state(5), seed in any::<u64>(), e in 0usize..5) {
            let g = NetworkGraph::ring(5).unwrap();
            let edge = g.edges()[e];
            let mut rng = rng_from_seed(seed);
            let (next, ev) = pqp_step(&x, edge, 0, &mut rng);
            for k in 0..5 {
                if !edge.contains(k) {
                    prop_assert_eq!(next.get(k).value().to_bits(), x.get(k).value().to_bits());
                }
            }
            let u = pair_measurement(x.get(edge.0), x.get(edge.1));
            prop_assert_eq!(ev.measurement, u);
            let eig = [eigenstate(u, Outcome::Left), eigenstate(u, Outcome::Right)];
            prop_assert!(eig.contains(&next.get(edge.0)) && eig.contains(&next.get(edge.1)));
            let f = fidelity(next.get(edge.0), next.get(edge.1));
            prop_assert!(f == 1.0 || f < 1e-15);
            let h = disagreement_h(&next);
            prop_assert!((0.0..=10.0 + 1e-12).contains(&h));
        }

        #[test]
        fn submartingale_drift_identity(x in arb_state(4)) {
            for g in [NetworkGraph::complete(4).unwrap(), NetworkGraph::path(4).unwrap()] {
                let lhs = enumerated_next_h(&g, &x);
                let rhs = disagreement_h(&x) + h_drift(&g, &x);
                prop_assert!((lhs - rhs).abs() < 1e-12);
                prop_assert!(h_drift(&g, &x) >= 0.0);
            }
        }
    }
}
