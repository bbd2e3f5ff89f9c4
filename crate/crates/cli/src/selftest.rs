//! Fast invariant battery: frozen constants, exact identities and small Monte
//! Carlo checks at loose (4 stderr) tolerances.

use std::f64::consts::PI;

use serde_json::json;
use stable_smalldev::constants;
use stable_smalldev::lil::{self, GridKind, GridSpec};
use stable_smalldev::model::{AlphaStableParams, Estimate, ShiftFunction};
use stable_smalldev::rng::{map_streams, RngStream};
use stable_smalldev::sim::{self, Center, PathLaw};
use stable_smalldev::smallball;
use stable_smalldev::tilt::{self, TiltSpec};

use crate::commands::Output;
use crate::config::ExperimentConfig;
use crate::CliError;

type Check = (&'static str, fn(u64) -> Result<String, String>);

fn close(name: &str, got: f64, want: f64, rel: f64) -> Result<String, String> {
    let gap = (got / want - 1.0).abs();
    let msg = format!("{name} {got} vs {want} (rel {gap:.1e})");
    if gap <= rel {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn e<E: std::fmt::Display>(err: E) -> String {
    err.to_string()
}

fn c_alpha(_: u64) -> Result<String, String> {
    close("c_α(1.5)", constants::c_alpha_symbol(1.5).map_err(e)?, 3.342171032841334, 1e-9)
}

fn c_series(_: u64) -> Result<String, String> {
    close("C(1.5)", constants::series_c_alpha(1.5).map_err(e)?, 1446.8014001941835, 1e-10)
}

fn c1_identity(_: u64) -> Result<String, String> {
    close(
        "C₁(Id, 1.5)",
        constants::series_c1(&ShiftFunction::identity(), 1.5).map_err(e)?,
        PI / 96.0,
        1e-10,
    )
}

fn gaussian_eigenvalue(_: u64) -> Result<String, String> {
    let k = constants::gaussian_dirichlet_eigenvalue(256).map_err(e)?;
    close("Brownian eigenvalue", k.value, PI * PI / 8.0, 5e-3)
}

fn k_below_c(_: u64) -> Result<String, String> {
    let k = constants::estimate_k_alpha_spectral(1.5, 256).map_err(e)?.value;
    let c = constants::series_c_alpha(1.5).map_err(e)?;
    let msg = format!("K̂ {k:.4} ≤ C {c:.1}");
    if k > 0.0 && k <= c {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn exponent_zero_shift(_: u64) -> Result<String, String> {
    let p = AlphaStableParams::new(1.5).map_err(e)?;
    let t = TiltSpec::middle(p, ShiftFunction::zero(), 1.0, 1.0).map_err(e)?;
    let d = tilt::deterministic_exponent(&t).map_err(e)?;
    if d == 0.0 {
        Ok("zero shift has zero exponent".into())
    } else {
        Err(format!("zero shift exponent {d}"))
    }
}

fn weight_unit_mean(seed: u64) -> Result<String, String> {
    let mut worst: f64 = 0.0;
    for t in tilt::default_battery() {
        let w: Vec<f64> = map_streams(seed, 0, 2000, |s: RngStream| {
            sim::sample_tilted_path(&t, 256, &mut s.rng()).map(|(_, lw)| lw.exp())
        })
        .into_iter()
        .collect::<Result<_, _>>()
        .map_err(e)?;
        let est = Estimate::from_samples(&w, false);
        worst = worst.max(((est.value - 1.0) / est.stderr).abs());
    }
    let msg = format!("worst |z| {worst:.2} over the default tilts");
    if worst <= 4.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn no_big_jumps(seed: u64) -> Result<String, String> {
    let p = AlphaStableParams::new(1.5).map_err(e)?;
    let hits: Vec<f64> = map_streams(seed, 0, 4000, |s: RngStream| {
        let path = sim::sample_jump_path(&p, 0.5, false, 8, &mut s.rng()).expect("valid parameters");
        f64::from(u8::from(path.max_abs_jump() <= 1.0))
    });
    let est = Estimate::from_samples(&hits, true);
    let want = smallball::prob_no_big_jumps(1.5, 1.0).map_err(e)?;
    let z = (est.value - want) / est.stderr;
    let msg = format!("{:.4} vs {want:.4} (z {z:+.2})", est.value);
    if z.abs() <= 4.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn worker_independence(seed: u64) -> Result<String, String> {
    let p = AlphaStableParams::new(1.5).map_err(e)?;
    let batch = || {
        sim::sup_distance_batch(
            PathLaw::Stable { params: p, eps: 0.05 },
            &[Center::origin(), Center::new(ShiftFunction::tent(), 0.5)],
            300,
            128,
            seed,
            f64::INFINITY,
        )
    };
    let pool = |n| rayon::ThreadPoolBuilder::new().num_threads(n).build().map_err(e);
    let one = pool(1)?.install(batch).map_err(e)?;
    let three = pool(3)?.install(batch).map_err(e)?;
    if one == three {
        Ok("1 and 3 workers give identical rows".into())
    } else {
        Err("rows differ between worker counts".into())
    }
}

fn anderson(seed: u64) -> Result<String, String> {
    let battery = smallball::default_anderson_battery();
    let rep = smallball::anderson_report(&battery, 1.5, 1.0, 20_000, 512, seed).map_err(e)?;
    let msg = format!("{} flags over {} shifts", rep.flags, rep.rows.len());
    if rep.flags == 0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn ratios(_: u64) -> Result<String, String> {
    let r = lil::increment_ratios(1_000_000, 0.5, 1.5).map_err(e)?;
    let msg = format!("r1 {:.2e}, r2 {:.2e}, r3 {:.6}", r.r1, r.r2, r.r3);
    if (r.r3 - 1.0).abs() < 1e-3 && r.r1 < 0.05 && r.r2 < 0.05 && r.r1 >= 0.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn grid_increasing(_: u64) -> Result<String, String> {
    let spec = GridSpec {
        kind: GridKind::Lower,
        k_start: lil::LOWER_GRID_START,
        k_end: 5000,
    };
    let pts = lil::grid_times(&spec).map_err(e)?;
    if pts.windows(2).all(|w| w[1].log_t > w[0].log_t) {
        Ok(format!("log T_k increasing over {} points", pts.len()))
    } else {
        Err("lower grid not increasing".into())
    }
}

fn integral_cases(_: u64) -> Result<String, String> {
    for (name, h, want) in lil::analytic_cases(1.5) {
        let got = lil::integral_test(&h, 1.5, 1e6, 1e-10).map_err(e)?.classification;
        if got != want {
            return Err(format!("{name}: {got:?}, expected {want:?}"));
        }
    }
    Ok("four analytic cases classified".into())
}

const CHECKS: &[Check] = &[
    ("c_alpha", c_alpha),
    ("C_alpha_series", c_series),
    ("C1_identity", c1_identity),
    ("brownian_eigenvalue", gaussian_eigenvalue),
    ("K_below_C", k_below_c),
    ("zero_shift_exponent", exponent_zero_shift),
    ("tilt_weight_unit_mean", weight_unit_mean),
    ("no_big_jumps", no_big_jumps),
    ("worker_independence", worker_independence),
    ("anderson_battery", anderson),
    ("grid_ratios", ratios),
    ("lower_grid_increasing", grid_increasing),
    ("integral_test_cases", integral_cases),
];

pub fn run(cfg: &ExperimentConfig, out: &Output) -> Result<(), CliError> {
    let mut rows = Vec::new();
    let mut failed = 0;
    for (i, (name, check)) in CHECKS.iter().enumerate() {
        let (pass, detail) = match check(cfg.seed.wrapping_add(i as u64)) {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        eprintln!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        failed += usize::from(!pass);
        rows.push(json!({ "check": name, "pass": pass, "detail": detail }));
    }
    out.json(
        "selftest.json",
        &json!({
            "config": serde_json::to_value(cfg).expect("config serializes"),
            "checks": rows,
            "failed": failed,
        }),
    )?;
    if failed > 0 {
        return Err(CliError::Failed(format!("{failed} selftest checks failed")));
    }
    Ok(())
}
