//! Batch execution of a validated [`ExperimentConfig`] and artifact output.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use serde_json::json;

use super::config::{ExperimentConfig, Mode};
use super::seeds::seed_stream;
use super::verify;
use crate::density::{
    convergence_rate_check, deviation_csv, monte_carlo_density, propagate_series, DensityVector,
};
use crate::error::{Error, Result};
use crate::graph::{laplacian, pair_selection_distribution, NetworkGraph};
use crate::par::{with_workers, Exec};
use crate::planner::{
    cost_estimate, rollout, solve_finite, solve_infinite, GridState, Policy, SolveOptions,
    ValueTable,
};
use crate::pqp::{disagreement_h, run, NetworkState};
use crate::stats::{median, Moments, Summary};

/// Trials handled sequentially inside one parallel work item.
const SIM_BLOCK: usize = 256;

/// Per-run record of a simulate batch.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRow {
    pub trial: usize,
    pub seed: u64,
    /// `None` when the run hit the horizon first.
    pub consensus_time: Option<usize>,
    pub steps: usize,
    pub final_h: f64,
    /// Not written to artifacts, so that they stay byte-reproducible.
    #[serde(skip)]
    pub wall_ms: f64,
}

/// Aggregates over a simulate batch.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunSummary {
    pub runs: usize,
    pub reached: usize,
    pub consensus_fraction: f64,
    pub mean_consensus_time: Option<f64>,
    pub median_consensus_time: Option<f64>,
    pub se_consensus_time: Option<f64>,
    pub mean_final_h: f64,
}

impl RunSummary {
    pub fn from_rows(rows: &[RunRow]) -> RunSummary {
        let times: Vec<f64> = rows
            .iter()
            .filter_map(|r| r.consensus_time.map(|t| t as f64))
            .collect();
        let hs: Vec<f64> = rows.iter().map(|r| r.final_h).collect();
        let ts = Summary::of(&times);
        let some = |v: f64| (!times.is_empty()).then_some(v);
        RunSummary {
            runs: rows.len(),
            reached: times.len(),
            consensus_fraction: if rows.is_empty() {
                0.0
            } else {
                times.len() as f64 / rows.len() as f64
            },
            mean_consensus_time: some(ts.mean),
            median_consensus_time: some(median(&times)),
            se_consensus_time: some(ts.std_err),
            mean_final_h: Summary::of(&hs).mean,
        }
    }
}

/// CSV of per-run rows.
pub fn runs_csv(rows: &[RunRow]) -> String {
    let mut out = String::from("trial,seed,consensus_time,censored,steps,final_h\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{:.16e}",
            r.trial,
            r.seed,
            r.consensus_time.map_or(String::new(), |t| t.to_string()),
            r.consensus_time.is_none(),
            r.steps,
            r.final_h
        );
    }
    out
}

/// Result of a simulate batch.
#[derive(Debug, Clone)]
pub struct SimulateBatch {
    pub rows: Vec<RunRow>,
    pub summary: RunSummary,
    /// Trajectory CSVs of the first `save_trajectories` runs.
    pub trajectories: Vec<String>,
    /// Per-slot sample means of each angle, runs frozen after stopping.
    pub mean_angles: Vec<Vec<f64>>,
    /// Per-slot mean and standard error of `h`.
    pub mean_h: Vec<(f64, f64)>,
}

/// Runs `cfg.trials` seeded trajectories. Trial `k` uses `seed_stream(seed, k)`.
///
/// Mean curves cover slots `0..L` where `L` is the longest run; a run that
/// stopped earlier contributes its final state to later slots.
pub fn simulate(
    g: &NetworkGraph,
    init: &NetworkState,
    cfg: &ExperimentConfig,
    exec: Exec,
) -> Result<SimulateBatch> {
    let n = init.len();
    let blocks = cfg.trials.div_ceil(SIM_BLOCK);
    // Per block: rows, saved CSVs, per-slot moments over live runs, and each
    // run's (length, final angles and h).
    type Block = (Vec<RunRow>, Vec<String>, Vec<Moments>, Vec<(usize, Vec<f64>)>);
    let parts: Vec<Result<Block>> = exec.map(blocks, |b| {
        let mut rows = Vec::new();
        let mut csvs = Vec::new();
        let mut slots: Vec<Moments> = Vec::new();
        let mut finals = Vec::new();
        let mut buf = vec![0.0; n + 1];
        for trial in b * SIM_BLOCK..((b + 1) * SIM_BLOCK).min(cfg.trials) {
            let seed = seed_stream(cfg.seed, trial as u64);
            let start = Instant::now();
            let traj = run(g, init, cfg.horizon, cfg.eps, seed)?;
            let wall_ms = start.elapsed().as_secs_f64() * 1e3;
            let states = traj.states();
            while slots.len() < states.len() {
                slots.push(Moments::new(n + 1));
            }
            for (x, m) in states.iter().zip(&mut slots) {
                for (v, a) in buf.iter_mut().zip(x.angles()) {
                    *v = a.value();
                }
                buf[n] = disagreement_h(x);
                m.push(&buf);
            }
            finals.push((states.len(), buf.clone()));
            if trial < cfg.save_trajectories {
                csvs.push(traj.to_csv());
            }
            rows.push(RunRow {
                trial,
                seed,
                consensus_time: traj.consensus_time,
                steps: traj.events.len(),
                final_h: buf[n],
                wall_ms,
            });
        }
        Ok((rows, csvs, slots, finals))
    });

    let mut rows = Vec::with_capacity(cfg.trials);
    let mut trajectories = Vec::new();
    let mut slots: Vec<Moments> = Vec::new();
    let mut finals = Vec::with_capacity(cfg.trials);
    for part in parts {
        let (r, c, m, f) = part?;
        rows.extend(r);
        trajectories.extend(c);
        finals.extend(f);
        for (t, m) in m.iter().enumerate() {
            match slots.get_mut(t) {
                Some(acc) => acc.merge(m),
                None => slots.push(m.clone()),
            }
        }
    }
    let slots = exec.map(slots.len(), |t| {
        let mut acc = slots[t].clone();
        for (_, last) in finals.iter().filter(|(len, _)| *len <= t) {
            acc.push(last);
        }
        acc
    });
    let mut mean_angles = Vec::with_capacity(slots.len());
    let mut mean_h = Vec::with_capacity(slots.len());
    for m in &slots {
        let (mut mean, se) = (m.mean(), m.std_err());
        mean_h.push((mean[n], se[n]));
        mean.truncate(n);
        mean_angles.push(mean);
    }
    Ok(SimulateBatch {
        summary: RunSummary::from_rows(&rows),
        rows,
        trajectories,
        mean_angles,
        mean_h,
    })
}

fn mean_curves_csv(batch: &SimulateBatch) -> String {
    let n = batch.mean_angles.first().map_or(0, Vec::len);
    let mut out = String::from("t");
    for i in 1..=n {
        let _ = write!(out, ",mean_x_{i}");
    }
    out.push_str(",mean_h,se_h\n");
    for (t, (xs, (h, se))) in batch.mean_angles.iter().zip(&batch.mean_h).enumerate() {
        let _ = write!(out, "{t}");
        for x in xs {
            let _ = write!(out, ",{x:.16e}");
        }
        let _ = writeln!(out, ",{h:.16e},{se:.16e}");
    }
    out
}

/// What a batch produced.
#[derive(Debug, Clone, Default)]
pub struct BatchReport {
    pub files: Vec<PathBuf>,
    /// Human-readable lines for stdout.
    pub lines: Vec<String>,
    /// Names of failed property checks (verify mode).
    pub failures: Vec<String>,
}

struct Writer<'a> {
    dir: &'a Path,
    report: BatchReport,
}

impl<'a> Writer<'a> {
    fn new(dir: &'a Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Writer {
            dir,
            report: BatchReport::default(),
        })
    }

    fn file(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        self.report.files.push(path);
        Ok(())
    }

    fn json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| Error::Numerical(format!("serializing {name}: {e}")))?;
        text.push('\n');
        self.file(name, &text)
    }

    fn say(&mut self, line: String) {
        self.report.lines.push(line);
    }
}

/// Executes the configured mode and writes its artifacts under `cfg.out`.
pub fn run_batch(cfg: &ExperimentConfig) -> Result<BatchReport> {
    with_workers(cfg.workers, || run_mode(cfg))
}

fn need<'a, T>(v: &'a Option<T>, what: &str) -> Result<&'a T> {
    v.as_ref().ok_or_else(|| Error::Config(format!("missing {what}")))
}

fn run_mode(cfg: &ExperimentConfig) -> Result<BatchReport> {
    let exec = Exec::default();
    match cfg.mode {
        Mode::Simulate => {
            let g = need(&cfg.graph, "graph")?;
            let init = need(&cfg.init, "init")?;
            let start = Instant::now();
            let batch = simulate(g, init, cfg, exec)?;
            let mut w = Writer::new(&cfg.out)?;
            for (k, csv) in batch.trajectories.iter().enumerate() {
                w.file(&format!("trajectories/run_{k:05}.csv"), csv)?;
            }
            w.file("runs.csv", &runs_csv(&batch.rows))?;
            w.file("mean_curves.csv", &mean_curves_csv(&batch))?;
            w.json(
                "summary.json",
                &json!({
                    "mode": "simulate",
                    "graph": cfg.graph_spec,
                    "init_pi_units": cfg.init_units,
                    "seed": cfg.seed,
                    "trials": cfg.trials,
                    "horizon": cfg.horizon,
                    "eps": cfg.eps,
                    "summary": batch.summary,
                }),
            )?;
            let s = &batch.summary;
            w.say(format!(
                "simulate: {}/{} runs reached consensus (fraction {:.4}); mean time {}; wall {:.1} ms",
                s.reached,
                s.runs,
                s.consensus_fraction,
                s.mean_consensus_time.map_or("n/a".into(), |m| format!("{m:.3}")),
                start.elapsed().as_secs_f64() * 1e3
            ));
            Ok(w.report)
        }
        Mode::Density => {
            let g = need(&cfg.graph, "graph")?;
            let init = need(&cfg.init, "init")?;
            let rho0 = DensityVector::from_state(init);
            let series = propagate_series(g, &rho0, cfg.horizon)?;
            let avg = crate::density::average_limit(&rho0);
            let dev: Vec<Vec<f64>> = series
                .iter()
                .map(|r| r.0.iter().map(|d| d.sub(&avg).spectral_norm()).collect())
                .collect();
            let rate = convergence_rate_check(g, &rho0, cfg.horizon)?;
            let mut w = Writer::new(&cfg.out)?;
            w.file("deviation.csv", &deviation_csv(&dev))?;
            w.json("density_expected.json", &series)?;
            w.json("rate.json", &rate)?;
            w.say(format!(
                "density: lambda2 = {:.12}, rate 1 - lambda2 = {:.12}, bound holds: {}",
                rate.lambda2,
                1.0 - rate.lambda2,
                rate.bound_holds()
            ));
            if cfg.trials > 0 {
                let est = monte_carlo_density(g, init, cfg.horizon, cfg.trials, cfg.seed, exec)?;
                let expected = series.last().unwrap();
                let z = est.worst_z(expected);
                w.json(
                    "density_mc.json",
                    &json!({
                        "trials": est.trials,
                        "steps": est.steps,
                        "seed": cfg.seed,
                        "mean": est.mean,
                        "std_err": est.std_err,
                        "expected": expected,
                        "worst_z": if z.is_finite() { json!(z) } else { json!("inf") },
                    }),
                )?;
                w.say(format!(
                    "density: Monte Carlo vs expected at t={}: worst |z| = {z:.3}",
                    cfg.horizon
                ));
            }
            Ok(w.report)
        }
        Mode::Spectrum => {
            let g = need(&cfg.graph, "graph")?;
            let l = laplacian(g);
            let eig = l.eigen()?;
            let dist = pair_selection_distribution(g);
            let mut w = Writer::new(&cfg.out)?;
            let edges: Vec<_> = dist
                .entries()
                .iter()
                .map(|(e, p)| json!({"i": e.0 + 1, "j": e.1 + 1, "p": p}))
                .collect();
            w.json(
                "spectrum.json",
                &json!({
                    "n": g.node_count(),
                    "edges": edges,
                    "laplacian": l.rows(),
                    "eigenvalues": eig.values,
                    "lambda2": eig.values[1],
                    "rate": 1.0 - eig.values[1],
                }),
            )?;
            w.say(format!(
                "spectrum: lambda2 = {:.12} (rate {:.12}), {} Jacobi sweeps",
                eig.values[1],
                1.0 - eig.values[1],
                eig.sweeps
            ));
            Ok(w.report)
        }
        Mode::PlanFinite | Mode::PlanInfinite => plan(cfg, exec),
        Mode::Verify => {
            let checks = verify::run_all(cfg.seed, exec);
            let mut w = Writer::new(&cfg.out)?;
            w.json("verify.json", &checks)?;
            for c in &checks {
                w.say(c.line());
            }
            w.report.failures = checks
                .iter()
                .filter(|c| !c.passed)
                .map(|c| c.name.to_string())
                .collect();
            Ok(w.report)
        }
    }
}

/// Snaps the configured initial angles onto the state grid.
fn snapped_init(cfg: &ExperimentConfig, w: &mut Writer<'_>) -> Result<Option<GridState>> {
    let (Some(init), Some(spec)) = (&cfg.init, cfg.grid) else {
        return Ok(None);
    };
    let mut out = Vec::with_capacity(init.len());
    for (i, a) in init.angles().iter().enumerate() {
        let (idx, moved) = spec.snap(a.value())?;
        if moved {
            w.say(format!(
                "plan: init angle {} of qubit {} snapped to grid index {idx} ({})",
                a.value(),
                i + 1,
                spec.angle(idx)
            ));
        }
        out.push(idx);
    }
    Ok(Some(out))
}

fn plan(cfg: &ExperimentConfig, exec: Exec) -> Result<BatchReport> {
    let n = cfg
        .planner_n()
        .ok_or_else(|| Error::Config("planner needs n or init".into()))?;
    let spec = cfg
        .grid
        .ok_or_else(|| Error::Config("planner needs k".into()))?;
    let opts = SolveOptions {
        budget: cfg.budget,
        exec,
    };
    let finite = cfg.mode == Mode::PlanFinite;
    let horizon = if finite { cfg.t } else { 1 };
    let estimate = cost_estimate(n, spec, horizon);

    let (values, policy, extra): (ValueTable, Policy, serde_json::Value) = if finite {
        let (v, p) = solve_finite(n, spec, cfg.t, cfg.power, opts)?;
        (v, p, json!({}))
    } else {
        let sol = solve_infinite(n, spec, cfg.vi_tol, cfg.max_iters, opts)?;
        let extra = json!({"iterations": sol.iterations, "vi_tol": cfg.vi_tol});
        (sol.values, sol.policy, extra)
    };

    let mut w = Writer::new(&cfg.out)?;
    w.json("policy.json", &policy.to_json(&values))?;
    w.file("values.csv", &values.to_csv())?;
    let mut summary = json!({
        "mode": cfg.mode.name(),
        "n": n,
        "k": spec.k(),
        "cost_estimate": estimate.to_string(),
        "solver": extra,
    });
    if finite {
        summary["t"] = json!(cfg.t);
        summary["power"] = json!(cfg.power.as_int());
    }
    w.say(format!(
        "{}: N={n} K={} solved ({estimate} estimated operations)",
        cfg.mode,
        spec.k()
    ));
    if let Some(x) = snapped_init(cfg, &mut w)? {
        let v = values.value(&x, 0);
        summary["init"] = json!(x);
        summary["value"] = json!(v);
        w.say(format!("{}: value at {x:?} = {v:.12}", cfg.mode));
        if cfg.trials > 0 {
            let st = rollout(&policy, &x, cfg.seed, cfg.trials, exec)?;
            w.say(format!(
                "{}: rollout mean {:.6} +- {:.6} over {} trials",
                cfg.mode, st.mean, st.std_err, st.trials
            ));
            summary["rollout"] = json!(st);
        }
    }
    w.json("summary.json", &summary)?;
    Ok(w.report)
}
