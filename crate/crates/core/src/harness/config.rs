//! Experiment configuration: presets, `key=value` files and flag overrides.
//!
//! Precedence, lowest first: built-in defaults, preset, config file, flags.
//! Angles are written in units of pi (`0.5` or `1/2` for pi/2).

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::graph::NetworkGraph;
use crate::planner::{GridSpec, Power};
use crate::pqp::NetworkState;
use crate::tol;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Simulate,
    PlanFinite,
    PlanInfinite,
    Density,
    Spectrum,
    Verify,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::PlanFinite => "plan-finite",
            Mode::PlanInfinite => "plan-infinite",
            Mode::Density => "density",
            Mode::Spectrum => "spectrum",
            Mode::Verify => "verify",
        }
    }

    pub fn parse(s: &str) -> Option<Mode> {
        [
            Mode::Simulate,
            Mode::PlanFinite,
            Mode::PlanInfinite,
            Mode::Density,
            Mode::Spectrum,
            Mode::Verify,
        ]
        .into_iter()
        .find(|m| m.name() == s)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Keys accepted in config files and as `--flags`.
pub const KEYS: &[&str] = &[
    "mode",
    "graph",
    "init",
    "seed",
    "trials",
    "horizon",
    "eps",
    "out",
    "n",
    "k",
    "t",
    "power",
    "budget",
    "vi-tol",
    "max-iters",
    "workers",
    "save-trajectories",
];

/// Initial condition shared by the fig and ring6 presets: three qubits at 0, three at pi/2.
pub const SPLIT6_INIT: &str = "0,0,0,0.5,0.5,0.5";

/// Built-in experiment presets as `(name, mode, settings)`.
pub fn preset(name: &str) -> Option<(Mode, Vec<(&'static str, &'static str)>)> {
    let split6 = [("graph", "complete:6"), ("init", SPLIT6_INIT)];
    let ring6 = [("graph", "ring:6"), ("init", SPLIT6_INIT)];
    match name {
        "fig2" => Some((
            Mode::Simulate,
            [&split6[..], &[("trials", "1"), ("horizon", "2000"), ("seed", "1")]].concat(),
        )),
        "fig3" => Some((
            Mode::Simulate,
            [
                &split6[..],
                &[("trials", "10000"), ("horizon", "2000"), ("seed", "1"), ("save-trajectories", "10")],
            ]
            .concat(),
        )),
        "fig4" => Some((
            Mode::Density,
            [&split6[..], &[("horizon", "30"), ("trials", "0"), ("seed", "1")]].concat(),
        )),
        "ring6" => Some((
            Mode::Simulate,
            [
                &ring6[..],
                &[("trials", "10000"), ("horizon", "2000"), ("seed", "1"), ("save-trajectories", "10")],
            ]
            .concat(),
        )),
        "ring6-density" => Some((
            Mode::Density,
            [&ring6[..], &[("horizon", "30"), ("trials", "0"), ("seed", "1")]].concat(),
        )),
        "verify" => Some((Mode::Verify, vec![("seed", "1")])),
        _ => None,
    }
}

pub const PRESETS: &[&str] = &["fig2", "fig3", "fig4", "ring6", "ring6-density", "verify"];

/// Validated experiment description.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub graph_spec: Option<String>,
    pub graph: Option<NetworkGraph>,
    pub init: Option<NetworkState>,
    /// Initial angles as given, in units of pi.
    pub init_units: Option<Vec<f64>>,
    pub n: Option<usize>,
    pub horizon: usize,
    pub trials: usize,
    pub seed: u64,
    pub eps: f64,
    pub out: PathBuf,
    pub grid: Option<GridSpec>,
    pub t: usize,
    pub power: Power,
    pub budget: u128,
    pub vi_tol: f64,
    pub max_iters: usize,
    pub workers: usize,
    pub save_trajectories: usize,
}

#[derive(Debug, Clone)]
enum Origin {
    Preset(String),
    Line(usize),
    Flag,
}

impl Origin {
    fn describe(&self, key: &str) -> String {
        match self {
            Origin::Preset(p) => format!("preset {p}, key {key}"),
            Origin::Line(l) => format!("config line {l}, key {key}"),
            Origin::Flag => format!("--{key}"),
        }
    }
}

fn normalize_key(k: &str) -> String {
    k.trim().trim_start_matches("--").replace('_', "-")
}

/// Parses a `units of pi` angle: decimal (`0.25`) or fraction (`1/4`).
pub fn parse_pi_units(s: &str) -> Option<f64> {
    let s = s.trim();
    let v = match s.split_once('/') {
        Some((a, b)) => a.trim().parse::<f64>().ok()? / b.trim().parse::<f64>().ok()?,
        None => s.parse::<f64>().ok()?,
    };
    v.is_finite().then_some(v)
}

#[derive(Debug, Default)]
struct Settings(BTreeMap<String, (String, Origin)>);

impl Settings {
    fn set(&mut self, key: &str, value: &str, origin: Origin) -> Result<()> {
        let key = normalize_key(key);
        if !KEYS.contains(&key.as_str()) {
            return Err(Error::Config(format!(
                "{}: unknown key",
                origin.describe(&key)
            )));
        }
        self.0.insert(key, (value.trim().to_string(), origin));
        Ok(())
    }

    fn raw(&self, key: &str) -> Option<&(String, Origin)> {
        self.0.get(key)
    }

    fn get<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.0.get(key) {
            None => Ok(None),
            Some((v, origin)) => v.parse::<T>().map(Some).map_err(|_| {
                Error::Config(format!("{}: cannot parse '{v}'", origin.describe(key)))
            }),
        }
    }

    fn get_or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.get(key)?.unwrap_or(default))
    }

    fn require(&self, key: &str, mode: Mode) -> Result<&(String, Origin)> {
        self.raw(key).ok_or_else(|| {
            Error::Config(format!("mode {mode} requires '{key}' (--{key} or {key}= in a config file)"))
        })
    }
}

/// Builds a configuration from an optional preset, optional config file text
/// and flag overrides given as `(key, value)` pairs.
pub fn parse_config(
    mode: Mode,
    preset_name: Option<&str>,
    file_text: Option<&str>,
    flags: &[(String, String)],
) -> Result<ExperimentConfig> {
    let mut s = Settings::default();
    if let Some(name) = preset_name {
        let (pmode, entries) = preset(name).ok_or_else(|| {
            Error::Config(format!("unknown preset '{name}' (known: {})", PRESETS.join(", ")))
        })?;
        if pmode != mode {
            return Err(Error::Config(format!(
                "preset {name} runs in mode {pmode}, not {mode}"
            )));
        }
        for (k, v) in entries {
            s.set(k, v, Origin::Preset(name.to_string()))?;
        }
    }
    if let Some(text) = file_text {
        for (idx, line) in text.lines().enumerate() {
            let content = line.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (k, v) = content.split_once('=').ok_or_else(|| {
                Error::Config(format!("config line {}: expected key=value, got '{content}'", idx + 1))
            })?;
            s.set(k, v, Origin::Line(idx + 1))?;
        }
    }
    for (k, v) in flags {
        s.set(k, v, Origin::Flag)?;
    }

    if let Some((m, origin)) = s.raw("mode") {
        if Mode::parse(m) != Some(mode) {
            return Err(Error::Config(format!(
                "{}: '{m}' conflicts with subcommand {mode}",
                origin.describe("mode")
            )));
        }
    }

    let graph_spec: Option<String> = s.get("graph")?;
    let graph = match &graph_spec {
        Some(spec) => Some(NetworkGraph::from_spec(spec).map_err(|e| match e {
            Error::Graph(g) => Error::Config(format!("--graph {spec}: {g}")),
            other => other,
        })?),
        None => None,
    };

    let init_units = match s.raw("init") {
        None => None,
        Some((v, origin)) => Some(
            v.split(',')
                .map(|a| {
                    parse_pi_units(a).ok_or_else(|| {
                        Error::Config(format!(
                            "{}: malformed angle '{}' (units of pi)",
                            origin.describe("init"),
                            a.trim()
                        ))
                    })
                })
                .collect::<Result<Vec<f64>>>()?,
        ),
    };
    let init = init_units
        .as_deref()
        .map(NetworkState::from_pi_units)
        .transpose()?;

    let n: Option<usize> = s.get("n")?;
    if let (Some(g), Some(x)) = (&graph, &init) {
        if g.node_count() != x.len() {
            return Err(Error::Config(format!(
                "init has {} angles but graph has {} nodes",
                x.len(),
                g.node_count()
            )));
        }
    }
    if let (Some(n), Some(x)) = (n, &init) {
        if n != x.len() {
            return Err(Error::Config(format!("init has {} angles but n = {n}", x.len())));
        }
    }

    let power = Power::from_int(s.get_or("power", 2u32)?)
        .map_err(|e| Error::Config(format!("--power: {e}")))?;
    let grid = s
        .get::<usize>("k")?
        .map(|k| GridSpec::new(k).map_err(|e| Error::Config(format!("--k: {e}"))))
        .transpose()?;
    let eps: f64 = s.get_or("eps", tol::DEFAULT_EPS)?;
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::Config(format!("--eps must be positive, got {eps}")));
    }

    let default_horizon = match mode {
        Mode::Density => 30,
        _ => 2000,
    };
    let default_trials = match mode {
        Mode::Simulate => 1,
        Mode::Density | Mode::PlanFinite | Mode::PlanInfinite => 0,
        _ => 0,
    };

    let cfg = ExperimentConfig {
        mode,
        graph_spec,
        graph,
        init,
        init_units,
        n,
        horizon: s.get_or("horizon", default_horizon)?,
        trials: s.get_or("trials", default_trials)?,
        seed: s.get_or("seed", 1u64)?,
        eps,
        out: s.get_or("out", PathBuf::from("results"))?,
        grid,
        t: s.get_or("t", 1usize)?,
        power,
        budget: s.get_or("budget", tol::DEFAULT_BUDGET)?,
        vi_tol: s.get_or("vi-tol", tol::DEFAULT_VI_TOL)?,
        max_iters: s.get_or("max-iters", tol::DEFAULT_VI_MAX_ITERS)?,
        workers: s.get_or("workers", 0usize)?,
        save_trajectories: s.get_or("save-trajectories", 100usize)?,
    };

    match mode {
        Mode::Simulate | Mode::Density => {
            s.require("graph", mode)?;
            s.require("init", mode)?;
        }
        Mode::Spectrum => {
            s.require("graph", mode)?;
        }
        Mode::PlanFinite | Mode::PlanInfinite => {
            s.require("k", mode)?;
            if cfg.n.is_none() && cfg.init.is_none() {
                return Err(Error::Config(format!("mode {mode} requires 'n' or 'init'")));
            }
            if mode == Mode::PlanFinite {
                s.require("t", mode)?;
                if cfg.t == 0 {
                    return Err(Error::Config("--t must be at least 1".into()));
                }
            }
        }
        Mode::Verify => {}
    }
    if mode == Mode::Simulate && cfg.trials == 0 {
        return Err(Error::Config("--trials must be at least 1 for simulate".into()));
    }
    Ok(cfg)
}

/// Reads a config file and delegates to [`parse_config`].
pub fn parse_config_file(
    mode: Mode,
    preset_name: Option<&str>,
    path: Option<&Path>,
    flags: &[(String, String)],
) -> Result<ExperimentConfig> {
    let text = path
        .map(|p| std::fs::read_to_string(p).map_err(|e| Error::io(p, e)))
        .transpose()?;
    parse_config(mode, preset_name, text.as_deref(), flags)
}

impl ExperimentConfig {
    /// Number of qubits for planner modes.
    pub fn planner_n(&self) -> Option<usize> {
        self.n.or_else(|| self.init.as_ref().map(NetworkState::len))
    }
}
