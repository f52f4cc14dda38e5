//! Centralized measurement planning by stochastic dynamic programming.
//!
//! With all-to-all classical communication a controller observes every qubit
//! and picks one measurement per qubit each slot. Measurements are restricted
//! to the grid `j pi / 2K, j < K`; their eigenstates then live on the state
//! grid `j pi / 2K, j < 2K`, so the whole problem is a finite MDP over integer
//! index vectors. A state index `j` and a measurement index `m` overlap with
//! probability `cos^2((m - j) pi / 2K)` for outcome `Left` (eigenstate `m`)
//! and `cos^2((m + K - j) pi / 2K)` for `Right` (eigenstate `m + K`).
//!
//! Two objectives are solved:
//! - finite horizon: maximize the expected terminal network fidelity
//!   `sum_{i,j} |<x_i|x_j>|^p` after `T` slots;
//! - infinite horizon: minimize the expected number of slots until every
//!   qubit sits on the same grid state.
//!
//! States and actions are ordered lexicographically (qubit 1 most
//! significant), which is also the mixed-radix order used in exports.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rand::Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::harness::seed_stream;
use crate::par::Exec;
use crate::pqp::rng_from_seed;
use crate::qstate::{
    canonicalize_measurement, canonicalize_state, eigenstate, fidelity, outcome_probability,
    Outcome,
};
use crate::stats::Summary;
use crate::tol;

/// Discretization with `K` measurement angles and `2K` state angles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct GridSpec {
    k: usize,
}

impl GridSpec {
    pub fn new(k: usize) -> Result<Self> {
        if k < 2 {
            return Err(Error::Config(format!("grid needs K >= 2, got {k}")));
        }
        Ok(GridSpec { k })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn state_count(&self) -> usize {
        2 * self.k
    }

    pub fn step(&self) -> f64 {
        PI / (2 * self.k) as f64
    }

    pub fn angle(&self, index: usize) -> f64 {
        index as f64 * self.step()
    }

    pub fn measurement_angles(&self) -> Vec<f64> {
        (0..self.k).map(|j| self.angle(j)).collect()
    }

    pub fn state_angles(&self) -> Vec<f64> {
        (0..2 * self.k).map(|j| self.angle(j)).collect()
    }

    /// Nearest state-grid index (round half up, modulo pi) and whether the
    /// angle was moved.
    pub fn snap(&self, radians: f64) -> Result<(usize, bool)> {
        let x = canonicalize_state(radians)?.value();
        let idx = ((x / self.step()) + 0.5).floor() as usize % (2 * self.k);
        let back = self.angle(idx);
        let moved = (back - x).abs() > 1e-9 && (back + PI - x).abs() > 1e-9;
        Ok((idx, moved))
    }

    /// Eigenstate index after outcome `y` of measurement index `m`.
    pub fn eigen_index(&self, m: usize, y: Outcome) -> usize {
        match y {
            Outcome::Left => m,
            Outcome::Right => m + self.k,
        }
    }
}

/// Per-qubit grid state indices in `[0, 2K)`.
pub type GridState = Vec<usize>;

/// Per-qubit measurement indices in `[0, K)`.
pub type ActionVector = Vec<usize>;

/// Exponent applied to pairwise fidelities in the terminal reward.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Power {
    One,
    Two,
}

impl Power {
    pub fn from_int(p: u32) -> Result<Self> {
        match p {
            1 => Ok(Power::One),
            2 => Ok(Power::Two),
            _ => Err(Error::Config(format!("power must be 1 or 2, got {p}"))),
        }
    }

    pub fn as_int(self) -> u32 {
        match self {
            Power::One => 1,
            Power::Two => 2,
        }
    }
}

/// Index-difference lookup tables shared by the solvers.
#[derive(Debug, Clone)]
struct Tables {
    k: usize,
    /// `cos^2(d pi / 2K)` for `d in 0..2K`, exact at `d = 0` and `d = K`.
    cos2: Vec<f64>,
    /// `|cos(d pi / 2K)|`, exact at `d = 0` and `d = K`.
    fid: Vec<f64>,
}

impl Tables {
    fn new(spec: GridSpec) -> Self {
        let k = spec.k;
        let mut cos2 = Vec::with_capacity(2 * k);
        let mut fid = Vec::with_capacity(2 * k);
        for d in 0..2 * k {
            let (c2, f) = match d {
                0 => (1.0, 1.0),
                d if d == k => (0.0, 0.0),
                d => {
                    let c = spec.angle(d).cos();
                    (c * c, c.abs())
                }
            };
            cos2.push(c2);
            fid.push(f);
        }
        Tables { k, cos2, fid }
    }

    fn diff(&self, a: usize, b: usize) -> usize {
        (a + 2 * self.k - b) % (2 * self.k)
    }

    /// Probability of landing on eigenstate `eig` from state `x`.
    fn prob(&self, x: usize, eig: usize) -> f64 {
        self.cos2[self.diff(eig, x)]
    }

    fn pair_reward(&self, a: usize, b: usize, power: Power) -> f64 {
        let d = self.diff(a, b);
        match power {
            Power::One => self.fid[d],
            Power::Two => self.cos2[d],
        }
    }
}

/// Mixed-radix encoding of `N`-digit vectors.
#[derive(Debug, Clone, Copy)]
struct Radix {
    n: usize,
    base: usize,
}

impl Radix {
    fn size(&self) -> usize {
        self.base.pow(self.n as u32)
    }

    fn encode(&self, digits: &[usize]) -> usize {
        digits.iter().fold(0, |acc, &d| acc * self.base + d)
    }

    fn decode(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.n];
        for slot in out.iter_mut().rev() {
            *slot = index % self.base;
            index /= self.base;
        }
        out
    }
}

fn check_shape(n: usize, x: &[usize], u: &[usize], spec: GridSpec) -> Result<()> {
    for len in [x.len(), u.len()] {
        if len != n {
            return Err(Error::Dimension { expected: n, got: len });
        }
    }
    if let Some(&bad) = x.iter().find(|&&v| v >= 2 * spec.k) {
        return Err(Error::Config(format!("state index {bad} out of range 0..{}", 2 * spec.k)));
    }
    if let Some(&bad) = u.iter().find(|&&v| v >= spec.k) {
        return Err(Error::Config(format!("action index {bad} out of range 0..{}", spec.k)));
    }
    Ok(())
}

/// One outcome branch of a joint measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub outcomes: Vec<Outcome>,
    pub probability: f64,
    pub next: GridState,
}

/// All outcome vectors of measuring `x` with `u`, in lexicographic order.
/// Branches whose probability is exactly zero (a qubit already on the other
/// eigenstate) are omitted.
pub fn transition_distribution(x: &[usize], u: &[usize], spec: GridSpec) -> Result<Vec<Branch>> {
    check_shape(x.len(), x, u, spec)?;
    let tables = Tables::new(spec);
    let mut branches = vec![Branch {
        outcomes: Vec::new(),
        probability: 1.0,
        next: Vec::new(),
    }];
    for (&xi, &ui) in x.iter().zip(u) {
        let mut grown = Vec::with_capacity(branches.len() * 2);
        for b in &branches {
            for y in Outcome::ALL {
                let eig = spec.eigen_index(ui, y);
                let p = tables.prob(xi, eig);
                if p == 0.0 {
                    continue;
                }
                let mut nb = b.clone();
                nb.outcomes.push(y);
                nb.probability *= p;
                nb.next.push(eig);
                grown.push(nb);
            }
        }
        branches = grown;
    }
    Ok(branches)
}

/// `sum_{i,j} fidelity(x_i, x_j)^p` over ordered pairs including `i = j`.
pub fn terminal_reward(x: &[usize], power: Power, spec: GridSpec) -> f64 {
    let tables = Tables::new(spec);
    terminal_reward_with(&tables, x, power)
}

fn terminal_reward_with(tables: &Tables, x: &[usize], power: Power) -> f64 {
    let mut r = 0.0;
    for &a in x {
        for &b in x {
            r += tables.pair_reward(a, b, power);
        }
    }
    r
}

/// Operation estimate `(2K)^N K^N 2^N T` used by the complexity guard.
pub fn cost_estimate(n: usize, spec: GridSpec, horizon: usize) -> u128 {
    let k = spec.k as u128;
    let per = (2 * k)
        .checked_pow(n as u32)
        .and_then(|s| s.checked_mul(k.checked_pow(n as u32)?))
        .and_then(|s| s.checked_mul(2u128.checked_pow(n as u32)?));
    per.and_then(|p| p.checked_mul(horizon.max(1) as u128))
        .unwrap_or(u128::MAX)
}

fn guard(n: usize, spec: GridSpec, horizon: usize, budget: u128) -> Result<()> {
    if n == 0 {
        return Err(Error::Config("planner needs N >= 1".into()));
    }
    let estimate = cost_estimate(n, spec, horizon);
    if estimate > budget {
        return Err(Error::Budget { estimate, budget });
    }
    Ok(())
}

/// Execution knobs shared by both solvers.
#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    pub budget: u128,
    pub exec: Exec,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            budget: tol::DEFAULT_BUDGET,
            exec: Exec::default(),
        }
    }
}

/// Whether a table belongs to a finite horizon or is stationary.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Horizon {
    Finite(usize),
    Stationary,
}

/// Cost-to-go tables indexed by mixed-radix state index.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueTable {
    pub n: usize,
    pub spec: GridSpec,
    pub horizon: Horizon,
    /// `layers[t][s]` for `t = 0..=T` (finite) or a single layer (stationary).
    pub layers: Vec<Vec<f64>>,
}

impl ValueTable {
    fn radix(&self) -> Radix {
        Radix {
            n: self.n,
            base: self.spec.state_count(),
        }
    }

    pub fn state_index(&self, x: &[usize]) -> usize {
        self.radix().encode(x)
    }

    pub fn state(&self, index: usize) -> GridState {
        self.radix().decode(index)
    }

    /// `C(x, t)`, or `G(x)` for stationary tables (where `t` is ignored).
    pub fn value(&self, x: &[usize], t: usize) -> f64 {
        let layer = match self.horizon {
            Horizon::Finite(_) => t,
            Horizon::Stationary => 0,
        };
        self.layers[layer][self.state_index(x)]
    }

    /// CSV `[t,]x_1..x_N,value` in mixed-radix state order.
    pub fn to_csv(&self) -> String {
        let finite = matches!(self.horizon, Horizon::Finite(_));
        let mut out = String::new();
        if finite {
            out.push_str("t,");
        }
        let cols: Vec<String> = (1..=self.n).map(|i| format!("x_{i}")).collect();
        let _ = writeln!(out, "{},value", cols.join(","));
        for (t, layer) in self.layers.iter().enumerate() {
            for (s, v) in layer.iter().enumerate() {
                if finite {
                    let _ = write!(out, "{t},");
                }
                let idx: Vec<String> = self.state(s).iter().map(usize::to_string).collect();
                let _ = writeln!(out, "{},{v:.16e}", idx.join(","));
            }
        }
        out
    }
}

/// Dense decision rule over the state grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub n: usize,
    pub spec: GridSpec,
    pub horizon: Horizon,
    pub power: Option<Power>,
    /// `decisions[t][s]` as an action index (mixed radix base K). The
    /// stationary policy has a single layer.
    pub decisions: Vec<Vec<Option<usize>>>,
}

impl Policy {
    fn action_radix(&self) -> Radix {
        Radix {
            n: self.n,
            base: self.spec.k,
        }
    }

    fn state_radix(&self) -> Radix {
        Radix {
            n: self.n,
            base: self.spec.state_count(),
        }
    }

    /// Decision for state `x` at slot `t`.
    pub fn action(&self, x: &[usize], t: usize) -> Result<ActionVector> {
        let layer = match self.horizon {
            Horizon::Finite(_) => t,
            Horizon::Stationary => 0,
        };
        self.decisions
            .get(layer)
            .and_then(|l| l.get(self.state_radix().encode(x)))
            .copied()
            .flatten()
            .map(|a| self.action_radix().decode(a))
            .ok_or_else(|| Error::PolicyCoverage {
                state: x.to_vec(),
                t: matches!(self.horizon, Horizon::Finite(_)).then_some(t),
            })
    }

    /// JSON export; `values` comes from the matching [`ValueTable`].
    pub fn to_json(&self, values: &ValueTable) -> Value {
        let ar = self.action_radix();
        let layer_actions = |l: &Vec<Option<usize>>| -> Vec<Value> {
            l.iter()
                .map(|a| a.map_or(Value::Null, |a| json!(ar.decode(a))))
                .collect()
        };
        let (horizon, vals, acts) = match self.horizon {
            Horizon::Finite(t) => (
                json!(t),
                json!(values.layers),
                Value::Array(self.decisions.iter().map(|l| Value::Array(layer_actions(l))).collect()),
            ),
            Horizon::Stationary => (
                json!("stationary"),
                json!(values.layers[0]),
                Value::Array(layer_actions(&self.decisions[0])),
            ),
        };
        json!({
            "n": self.n,
            "k": self.spec.k,
            "horizon": horizon,
            "power": self.power.map(Power::as_int),
            "values": vals,
            "actions": acts,
        })
    }
}

/// Per-state solver context.
struct Model {
    n: usize,
    spec: GridSpec,
    tables: Tables,
    states: Radix,
    actions: Radix,
}

impl Model {
    fn new(n: usize, spec: GridSpec) -> Self {
        Model {
            n,
            spec,
            tables: Tables::new(spec),
            states: Radix {
                n,
                base: spec.state_count(),
            },
            actions: Radix { n, base: spec.k },
        }
    }

    /// `sum_y P(y | x, u) V(Q(u, y))`.
    fn expectation(&self, x: &[usize], u: &[usize], values: &[f64]) -> f64 {
        fn walk(m: &Model, x: &[usize], u: &[usize], i: usize, prob: f64, index: usize, values: &[f64]) -> f64 {
            if i == m.n {
                return prob * values[index];
            }
            let mut acc = 0.0;
            for y in Outcome::ALL {
                let eig = m.spec.eigen_index(u[i], y);
                let p = m.tables.prob(x[i], eig);
                if p != 0.0 {
                    acc += walk(m, x, u, i + 1, prob * p, index * m.states.base + eig, values);
                }
            }
            acc
        }
        walk(self, x, u, 0, 1.0, 0, values)
    }

    /// Measuring every qubit in its own basis leaves the state unchanged.
    fn no_op(&self, x: &[usize]) -> usize {
        let u: Vec<usize> = x.iter().map(|&v| v % self.spec.k).collect();
        self.actions.encode(&u)
    }

    /// Best action by `better`, scanning actions lexicographically and
    /// replacing the incumbent only on a strict improvement beyond the tie
    /// tolerance.
    fn optimize(&self, x: &[usize], values: &[f64], maximize: bool) -> (usize, f64) {
        let mut best = (0, f64::NAN);
        for a in 0..self.actions.size() {
            let u = self.actions.decode(a);
            let v = self.expectation(x, &u, values);
            let improves = if best.1.is_nan() {
                true
            } else if maximize {
                v > best.1 + tol::DP_TIE
            } else {
                v < best.1 - tol::DP_TIE
            };
            if improves {
                best = (a, v);
            }
        }
        best
    }

    fn is_agreement(x: &[usize]) -> bool {
        x.windows(2).all(|w| w[0] == w[1])
    }
}

/// Backward recursion for the finite-horizon fidelity objective.
pub fn solve_finite(
    n: usize,
    spec: GridSpec,
    horizon: usize,
    power: Power,
    opts: SolveOptions,
) -> Result<(ValueTable, Policy)> {
    if horizon == 0 {
        return Err(Error::Config("finite horizon needs T >= 1".into()));
    }
    guard(n, spec, horizon, opts.budget)?;
    let model = Model::new(n, spec);
    let size = model.states.size();
    let terminal: Vec<f64> = (0..size)
        .map(|s| terminal_reward_with(&model.tables, &model.states.decode(s), power))
        .collect();
    let mut layers = vec![Vec::new(); horizon + 1];
    let mut decisions = vec![Vec::new(); horizon];
    layers[horizon] = terminal;
    for t in (0..horizon).rev() {
        let next = &layers[t + 1];
        let mut solved = vec![(0usize, 0.0f64); size];
        opts.exec.fill(&mut solved, |s| model.optimize(&model.states.decode(s), next, true));
        decisions[t] = solved.iter().map(|&(a, _)| Some(a)).collect();
        layers[t] = solved.into_iter().map(|(_, v)| v).collect();
    }
    Ok((
        ValueTable {
            n,
            spec,
            horizon: Horizon::Finite(horizon),
            layers,
        },
        Policy {
            n,
            spec,
            horizon: Horizon::Finite(horizon),
            power: Some(power),
            decisions,
        },
    ))
}

/// Result of value iteration on the expected-steps objective.
#[derive(Debug, Clone)]
pub struct InfiniteSolution {
    pub values: ValueTable,
    pub policy: Policy,
    pub iterations: usize,
    /// Smallest pointwise change between consecutive iterates (non-negative
    /// when the iterates are monotone).
    pub min_increment: f64,
}

/// Value iteration for `G(x) = 1 + min_u E[G(Q(u, y))]`, `G = 0` on agreement.
///
/// Updates are Jacobi style: each sweep reads only the previous iterate.
pub fn solve_infinite(
    n: usize,
    spec: GridSpec,
    vi_tol: f64,
    max_iters: usize,
    opts: SolveOptions,
) -> Result<InfiniteSolution> {
    if vi_tol.is_nan() || vi_tol <= 0.0 {
        return Err(Error::Config(format!("vi_tol must be positive, got {vi_tol}")));
    }
    guard(n, spec, 1, opts.budget)?;
    let model = Model::new(n, spec);
    let size = model.states.size();
    let agreement: Vec<bool> = (0..size)
        .map(|s| Model::is_agreement(&model.states.decode(s)))
        .collect();
    let mut g = vec![0.0; size];
    let mut next = vec![0.0; size];
    let mut min_increment = f64::INFINITY;
    let mut iterations = 0;
    loop {
        if iterations == max_iters {
            return Err(Error::Numerical(format!(
                "value iteration did not reach tolerance {vi_tol} in {max_iters} iterations"
            )));
        }
        iterations += 1;
        opts.exec.fill(&mut next, |s| {
            if agreement[s] {
                0.0
            } else {
                1.0 + model.optimize(&model.states.decode(s), &g, false).1
            }
        });
        let mut sup: f64 = 0.0;
        for (a, b) in next.iter().zip(&g) {
            let d = a - b;
            sup = sup.max(d.abs());
            min_increment = min_increment.min(d);
        }
        std::mem::swap(&mut g, &mut next);
        if sup < vi_tol {
            break;
        }
    }
    let mut decisions = vec![None; size];
    opts.exec.fill(&mut decisions, |s| {
        let x = model.states.decode(s);
        Some(if agreement[s] {
            model.no_op(&x)
        } else {
            model.optimize(&x, &g, false).0
        })
    });
    Ok(InfiniteSolution {
        values: ValueTable {
            n,
            spec,
            horizon: Horizon::Stationary,
            layers: vec![g],
        },
        policy: Policy {
            n,
            spec,
            horizon: Horizon::Stationary,
            power: None,
            decisions: vec![decisions],
        },
        iterations,
        min_increment,
    })
}

/// Hard cap on `(K^N 2^N)^T` for [`expectimax_oracle`].
pub const ORACLE_BUDGET: u128 = 50_000_000;

/// Optimal expected terminal reward by plain recursion over the full
/// action/outcome tree, working on angles through [`crate::qstate`] rather
/// than on grid indices. Intended as an independent check of [`solve_finite`].
pub fn expectimax_oracle(n: usize, spec: GridSpec, horizon: usize, power: Power, x: &[usize]) -> Result<f64> {
    if x.len() != n {
        return Err(Error::Dimension { expected: n, got: x.len() });
    }
    let k = spec.k as u128;
    let per = k.pow(n as u32) * 2u128.pow(n as u32);
    let cost = per.checked_pow(horizon as u32).unwrap_or(u128::MAX);
    if cost > ORACLE_BUDGET {
        return Err(Error::Budget {
            estimate: cost,
            budget: ORACLE_BUDGET,
        });
    }
    let angles: Vec<_> = x
        .iter()
        .map(|&i| canonicalize_state(spec.angle(i)))
        .collect::<Result<_>>()?;
    let measurements: Vec<_> = spec
        .measurement_angles()
        .into_iter()
        .map(canonicalize_measurement)
        .collect::<Result<_>>()?;

    fn reward(x: &[crate::qstate::StateAngle], power: Power) -> f64 {
        let mut r = 0.0;
        for &a in x {
            for &b in x {
                r += fidelity(a, b).powi(power.as_int() as i32);
            }
        }
        r
    }

    #[allow(clippy::too_many_arguments)]
    fn outcomes(
        x: &[crate::qstate::StateAngle],
        u: &[crate::qstate::MeasurementAngle],
        i: usize,
        prob: f64,
        next: &mut Vec<crate::qstate::StateAngle>,
        depth: usize,
        ms: &[crate::qstate::MeasurementAngle],
        power: Power,
    ) -> f64 {
        if i == x.len() {
            return prob * best(next, depth, ms, power);
        }
        let mut acc = 0.0;
        for y in Outcome::ALL {
            let p = outcome_probability(x[i], u[i], y);
            next.push(eigenstate(u[i], y));
            acc += outcomes(x, u, i + 1, prob * p, next, depth, ms, power);
            next.pop();
        }
        acc
    }

    fn best(
        x: &[crate::qstate::StateAngle],
        depth: usize,
        ms: &[crate::qstate::MeasurementAngle],
        power: Power,
    ) -> f64 {
        if depth == 0 {
            return reward(x, power);
        }
        let n = x.len();
        let mut choice = vec![0usize; n];
        let mut top = f64::NEG_INFINITY;
        loop {
            let u: Vec<_> = choice.iter().map(|&c| ms[c]).collect();
            let v = outcomes(x, &u, 0, 1.0, &mut Vec::with_capacity(n), depth - 1, ms, power);
            top = top.max(v);
            // odometer over K^N actions
            let mut pos = n;
            loop {
                if pos == 0 {
                    return top;
                }
                pos -= 1;
                choice[pos] += 1;
                if choice[pos] < ms.len() {
                    break;
                }
                choice[pos] = 0;
            }
        }
    }

    Ok(best(&angles, horizon, &measurements, power))
}

/// Monte Carlo estimate produced by [`rollout`].
#[derive(Debug, Clone, Serialize)]
pub struct RolloutStats {
    pub trials: usize,
    /// Terminal reward (finite policies) or hitting time (stationary).
    pub mean: f64,
    pub std_err: f64,
}

/// Slot cap for a single stationary rollout.
pub const ROLLOUT_MAX_STEPS: usize = 1_000_000;

/// Executes `policy` from `init` for `trials` independent seeded runs.
pub fn rollout(
    policy: &Policy,
    init: &[usize],
    master_seed: u64,
    trials: usize,
    exec: Exec,
) -> Result<RolloutStats> {
    check_shape(policy.n, init, &vec![0; policy.n], policy.spec)?;
    if trials == 0 {
        return Err(Error::Config("rollout needs trials >= 1".into()));
    }
    let model = Model::new(policy.n, policy.spec);
    let samples: Vec<Result<f64>> = exec.map(trials, |k| {
        let mut rng = rng_from_seed(seed_stream(master_seed, k as u64));
        let mut x = init.to_vec();
        let advance = |x: &mut Vec<usize>, u: &[usize], rng: &mut crate::pqp::SimRng| {
            for (xi, &ui) in x.iter_mut().zip(u) {
                let left = policy.spec.eigen_index(ui, Outcome::Left);
                let p_left = model.tables.prob(*xi, left);
                let r: f64 = rng.gen();
                *xi = if r < p_left {
                    left
                } else {
                    policy.spec.eigen_index(ui, Outcome::Right)
                };
            }
        };
        match policy.horizon {
            Horizon::Finite(horizon) => {
                for t in 0..horizon {
                    let u = policy.action(&x, t)?;
                    advance(&mut x, &u, &mut rng);
                }
                let power = policy.power.unwrap_or(Power::Two);
                Ok(terminal_reward_with(&model.tables, &x, power))
            }
            Horizon::Stationary => {
                let mut steps = 0;
                while !Model::is_agreement(&x) {
                    if steps == ROLLOUT_MAX_STEPS {
                        return Err(Error::Numerical(format!(
                            "rollout exceeded {ROLLOUT_MAX_STEPS} slots"
                        )));
                    }
                    let u = policy.action(&x, steps)?;
                    advance(&mut x, &u, &mut rng);
                    steps += 1;
                }
                Ok(steps as f64)
            }
        }
    });
    let samples: Vec<f64> = samples.into_iter().collect::<Result<_>>()?;
    let s = Summary::of(&samples);
    Ok(RolloutStats {
        trials,
        mean: s.mean,
        std_err: s.std_err,
    })
}
