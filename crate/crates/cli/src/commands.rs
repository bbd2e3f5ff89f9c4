use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};
use stable_smalldev::constants::{self, KDiagnostics};
use stable_smalldev::lil::{self, GridKind, GridSpec};
use stable_smalldev::model::{AlphaStableParams, ScalingFunction};
use stable_smalldev::rng::{map_streams, RngStream};
use stable_smalldev::sim::{self, SimPath};
use stable_smalldev::smallball::{self, SmallBallQuery};

use crate::config::{load_shift, ExperimentConfig, GridName, RegimeName, SimMode};
use crate::{selftest, CliError, LilOp, SmallballOp};

/// Paths per `simulate` run; each gets its own CSV pair.
const MAX_SIMULATE_PATHS: usize = 1000;

pub enum Task {
    Simulate,
    Smallball(SmallballOp),
    Constants,
    Lil(LilOp),
    Selftest,
}

pub fn execute(task: Task, cfg: &ExperimentConfig) -> Result<(), CliError> {
    let out = Output::new(cfg.out.clone())?;
    match task {
        Task::Simulate => simulate(cfg, &out),
        Task::Smallball(op) => smallball_cmd(op, cfg, &out),
        Task::Constants => constants_cmd(cfg, &out),
        Task::Lil(op) => lil_cmd(op, cfg, &out),
        Task::Selftest => selftest::run(cfg, &out),
    }
}

/// Artifact sink. JSON goes to stdout and, with an output directory, to a
/// file; CSV is written only when a directory is set.
pub struct Output {
    dir: Option<PathBuf>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Io {
        path: path.to_owned(),
        source: e,
    }
}

/// Writes a line to stdout; a closed reader (`| head`) is not an error.
fn print_line(text: &str) -> Result<(), CliError> {
    let mut lock = std::io::stdout().lock();
    match writeln!(lock, "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(io_err(Path::new("<stdout>"))(e)),
        _ => Ok(()),
    }
}

impl Output {
    fn new(dir: Option<PathBuf>) -> Result<Self, CliError> {
        if let Some(d) = &dir {
            std::fs::create_dir_all(d).map_err(io_err(d))?;
        }
        Ok(Self { dir })
    }

    fn file(&self, name: &str) -> Result<Option<(PathBuf, BufWriter<File>)>, CliError> {
        let Some(dir) = &self.dir else { return Ok(None) };
        let path = dir.join(name);
        let f = File::create(&path).map_err(io_err(&path))?;
        Ok(Some((path, BufWriter::new(f))))
    }

    pub fn json(&self, name: &str, value: &Value) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(value).expect("json values serialize");
        print_line(&text)?;
        if let Some((path, mut w)) = self.file(name)? {
            writeln!(w, "{text}").and_then(|_| w.flush()).map_err(io_err(&path))?;
        }
        Ok(())
    }

    /// One compact JSON object per line.
    pub fn jsonl(&self, name: &str, lines: &[Value]) -> Result<(), CliError> {
        let mut file = self.file(name)?;
        for v in lines {
            let text = serde_json::to_string(v).expect("json values serialize");
            print_line(&text)?;
            if let Some((path, w)) = file.as_mut() {
                writeln!(w, "{text}").map_err(io_err(path))?;
            }
        }
        if let Some((path, mut w)) = file {
            w.flush().map_err(io_err(&path))?;
        }
        Ok(())
    }

    pub fn csv(&self, name: &str, write: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<(), CliError> {
        if let Some((path, mut w)) = self.file(name)? {
            write(&mut w).and_then(|_| w.flush()).map_err(io_err(&path))?;
        }
        Ok(())
    }

    pub fn has_dir(&self) -> bool {
        self.dir.is_some()
    }
}

fn params(alpha: f64) -> Result<AlphaStableParams, CliError> {
    Ok(AlphaStableParams::new(alpha)?)
}

fn config_json(cfg: &ExperimentConfig) -> Value {
    serde_json::to_value(cfg).expect("config serializes")
}

fn to_json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("result serializes")
}

fn simulate(cfg: &ExperimentConfig, out: &Output) -> Result<(), CliError> {
    if !out.has_dir() {
        return Err(CliError::Config {
            key: "out".into(),
            msg: "simulate writes CSV files; set --out or SMALLDEV_OUT_DIR".into(),
        });
    }
    if cfg.n_paths > MAX_SIMULATE_PATHS {
        return Err(CliError::Config {
            key: "n_paths".into(),
            msg: format!("simulate writes one file per path; at most {MAX_SIMULATE_PATHS}"),
        });
    }
    let p = params(cfg.alpha)?;
    let paths: Vec<Result<SimPath, stable_smalldev::error::Error>> =
        map_streams(cfg.seed, 0, cfg.n_paths, |s: RngStream| {
            let mut rng = s.rng();
            match cfg.simulate.mode {
                SimMode::Grid => sim::sample_stable_path(&p, cfg.n_steps, &mut rng),
                SimMode::Jumps => sim::sample_jump_path(&p, cfg.simulate.eps, true, cfg.n_steps, &mut rng),
            }
        });
    let mut summary = Vec::with_capacity(paths.len());
    for (i, path) in paths.into_iter().enumerate() {
        let path = path?;
        out.csv(&format!("path_{i}.csv"), |w| sim::write_path_csv(&path, w))?;
        out.csv(&format!("jumps_{i}.csv"), |w| sim::write_jumps_csv(&path, w))?;
        summary.push(json!({
            "path": i,
            "terminal": path.terminal(),
            "sup": path.values.iter().fold(0.0_f64, |m, x| m.max(x.abs())),
            "max_jump": path.max_abs_jump(),
            "n_jumps": path.jumps.len(),
        }));
    }
    out.json("simulate.json", &json!({ "config": config_json(cfg), "paths": summary }))
}

fn query(cfg: &ExperimentConfig) -> Result<SmallBallQuery, CliError> {
    let b = &cfg.smallball;
    let p = params(cfg.alpha)?;
    let f = load_shift(&b.shift, "smallball.shift")?;
    Ok(match b.regime {
        RegimeName::Small => SmallBallQuery::small(p, f, b.lambda, b.r)?,
        RegimeName::Middle => SmallBallQuery::middle(p, f, b.c, b.r)?,
        RegimeName::Large => SmallBallQuery::large(p, f, b.lambda, b.r)?,
    })
}

fn smallball_cmd(op: SmallballOp, cfg: &ExperimentConfig, out: &Output) -> Result<(), CliError> {
    let (n, steps, seed) = (cfg.n_paths, cfg.n_steps, cfg.seed);
    match op {
        SmallballOp::Crude => {
            let q = query(cfg)?;
            let rep = smallball::estimate_crude(&q, n, steps, seed)?;
            let e = rep.estimate;
            out.json(
                "smallball_crude.json",
                &json!({
                    "config": config_json(cfg),
                    "query": to_json(&q),
                    "estimate": e.value,
                    "stderr": e.stderr,
                    "ci95": [e.ci95.0, e.ci95.1],
                    "n": e.n,
                    "ess": Value::Null,
                    "unresolved": rep.unresolved,
                }),
            )
        }
        SmallballOp::Is => {
            let q = query(cfg)?;
            let rep = smallball::estimate_is(&q, n, steps, seed)?;
            let e = rep.estimate;
            let bound = match q.regime {
                smallball::RegimeTag::Middle { .. } => smallball::theory_lower_bound_middle(&q).ok(),
                _ => None,
            };
            out.json(
                "smallball_is.json",
                &json!({
                    "config": config_json(cfg),
                    "query": to_json(&q),
                    "estimate": e.value,
                    "stderr": e.stderr,
                    "ci95": [e.ci95.0, e.ci95.1],
                    "n": e.n,
                    "ess": rep.ess,
                    "low_ess": rep.low_ess,
                    "prob_no_big_jumps": rep.prob_no_big_jumps,
                    "weight_mean": to_json(&rep.weight_mean),
                    "compensator": rep.compensator,
                    "lower_bound": bound,
                }),
            )
        }
        SmallballOp::Anderson => {
            let battery = smallball::default_anderson_battery();
            let rep = smallball::anderson_report(&battery, cfg.alpha, cfg.smallball.r, n, steps, seed)?;
            out.csv("anderson.csv", |w| {
                writeln!(w, "row,lambda,sup_deriv,p,stderr,flagged")?;
                writeln!(w, "baseline,0,0,{},{},false", rep.baseline.value, rep.baseline.stderr)?;
                for (i, r) in rep.rows.iter().enumerate() {
                    writeln!(
                        w,
                        "{i},{},{},{},{},{}",
                        r.lambda,
                        r.f.sup_deriv(),
                        r.estimate.value,
                        r.estimate.stderr,
                        r.flagged
                    )?;
                }
                Ok(())
            })?;
            out.json(
                "smallball_anderson.json",
                &json!({ "config": config_json(cfg), "report": to_json(&rep) }),
            )
        }
        SmallballOp::Tail => {
            let rep = smallball::tail_prob_check(cfg.alpha, &cfg.smallball.x, n, steps, seed)?;
            out.csv("tail.csv", |w| {
                writeln!(w, "x,p,stderr,scaled")?;
                for p in &rep.points {
                    writeln!(w, "{},{},{},{}", p.x, p.estimate.value, p.estimate.stderr, p.scaled)?;
                }
                Ok(())
            })?;
            out.json(
                "smallball_tail.json",
                &json!({ "config": config_json(cfg), "report": to_json(&rep) }),
            )
        }
    }
}

fn constants_cmd(cfg: &ExperimentConfig, out: &Output) -> Result<(), CliError> {
    let b = &cfg.constants;
    let alphas = if b.alphas.is_empty() {
        vec![cfg.alpha]
    } else {
        b.alphas.clone()
    };
    let mut lines = vec![json!({ "config": config_json(cfg) })];
    for (i, &a) in alphas.iter().enumerate() {
        let spectral = constants::estimate_k_alpha_spectral(a, b.n_grid)?;
        let order = match &spectral.diagnostics {
            KDiagnostics::Spectral { order, .. } => *order,
            _ => None,
        };
        let (k_mc, k_mc_slope) = if b.mc {
            let k = constants::estimate_k_alpha_mc(a, &b.r, cfg.n_paths, cfg.n_steps, cfg.seed.wrapping_add(i as u64))?;
            let slope = match &k.diagnostics {
                KDiagnostics::MonteCarlo { exponent_slope, .. } => Some(*exponent_slope),
                _ => None,
            };
            (Some(k.value), slope)
        } else {
            (None, None)
        };
        lines.push(json!({
            "alpha": a,
            "c_alpha": constants::c_alpha_symbol(a)?,
            "K_spectral": spectral.value,
            "K_spectral_order": order,
            "K_mc": k_mc,
            "K_mc_exponent_slope": k_mc_slope,
            "C_alpha": constants::series_c_alpha(a)?,
        }));
    }
    out.jsonl("constants.jsonl", &lines)
}

fn grid_spec(cfg: &ExperimentConfig) -> GridSpec {
    let b = &cfg.lil;
    GridSpec {
        kind: match b.grid {
            GridName::Lower => GridKind::Lower,
            GridName::Upper => GridKind::Upper { gamma: b.gamma },
        },
        k_start: b.k_start,
        k_end: b.k_end,
    }
}

fn lil_cmd(op: LilOp, cfg: &ExperimentConfig, out: &Output) -> Result<(), CliError> {
    let b = &cfg.lil;
    match op {
        LilOp::Grid => {
            let points = lil::grid_times(&grid_spec(cfg))?;
            out.csv("grid.csv", |w| {
                writeln!(w, "k,logT")?;
                for p in &points {
                    writeln!(w, "{},{}", p.k, p.log_t)?;
                }
                Ok(())
            })?;
            out.json(
                "lil_grid.json",
                &json!({
                    "config": config_json(cfg),
                    "n_points": points.len(),
                    "first": points.first().map(to_json),
                    "last": points.last().map(to_json),
                }),
            )
        }
        LilOp::Ratios => {
            let mut lines = vec![json!({ "config": config_json(cfg) })];
            let mut rows = Vec::new();
            for &k in &b.k {
                let r = lil::increment_ratios(k, b.delta, cfg.alpha)?;
                let log_t = GridKind::Lower.log_t(k);
                lines.push(json!({ "k": k, "logT": log_t, "r1": r.r1, "r2": r.r2, "r3": r.r3 }));
                rows.push((k, log_t, r));
            }
            out.csv("ratios.csv", |w| {
                writeln!(w, "k,logT,r1,r2,r3")?;
                for (k, log_t, r) in &rows {
                    writeln!(w, "{k},{log_t},{},{},{}", r.r1, r.r2, r.r3)?;
                }
                Ok(())
            })?;
            out.jsonl("lil_ratios.jsonl", &lines)
        }
        LilOp::DistanceSweep => {
            let p = params(cfg.alpha)?;
            let f = load_shift(&b.shift, "lil.shift")?;
            let grid = lil::grid_times(&grid_spec(cfg))?;
            if grid.first().is_some_and(|g| g.log_t <= std::f64::consts::E) {
                return Err(CliError::Config {
                    key: "lil.k_start".into(),
                    msg: "distance sweep needs log T_k > e (k ≥ 1000 on the lower grid)".into(),
                });
            }
            let records = lil::distance_sweep(&p, &grid, b.delta, &f, cfg.n_steps, cfg.seed)?;
            let trace = lil::liminf_trace(&records)?;
            out.csv("distance_sweep.csv", |w| {
                writeln!(w, "k,logT,delta,distance,running_min")?;
                for r in &records {
                    writeln!(w, "{},{},{},{},{}", r.k, r.log_t, r.delta, r.distance, r.running_min)?;
                }
                Ok(())
            })?;
            let mut lines = vec![json!({ "config": config_json(cfg) })];
            lines.extend(records.iter().map(to_json));
            lines.push(json!({ "final_running_min": trace.final_value, "note": trace.note }));
            out.jsonl("lil_distance_sweep.jsonl", &lines)
        }
        LilOp::IntegralTest => {
            let cases: Vec<(String, ScalingFunction, Option<lil::Classification>)> = match (b.log_exp, b.loglog_exp) {
                (None, None) => lil::analytic_cases(cfg.alpha)
                    .into_iter()
                    .map(|(name, h, expected)| (name.to_owned(), h, Some(expected)))
                    .collect(),
                (a, c) => {
                    let (a, c) = (a.unwrap_or(0.0), c.unwrap_or(0.0));
                    let name = format!("(log t)^{a}(log log t)^{c}");
                    let h = ScalingFunction::LogPower {
                        log_exp: a,
                        loglog_exp: c,
                    };
                    vec![(name, h, None)]
                }
            };
            let mut lines = vec![json!({ "config": config_json(cfg) })];
            for (name, h, expected) in cases {
                let t = lil::integral_test(&h, cfg.alpha, b.log_t_max, 1e-10)?;
                lines.push(json!({
                    "h": name,
                    "classification": to_json(&t.classification),
                    "expected": expected.map(|e| to_json(&e)),
                    "analytic": t.analytic,
                    "block_ratios": t.block_ratios,
                }));
            }
            out.jsonl("lil_integral_test.jsonl", &lines)
        }
    }
}
