//! Finite-horizon diagnostics for the liminf behaviour of the sup-norm
//! distance `(log log T)^δ ‖X(T·)/(T^{1/α}(log log T)^{δ−1/α}) − f‖`.
//!
//! Horizons `T` grow like `exp(k^γ)`, so every quantity is handled through
//! `log T`. Each grid point gets an independent copy of `X(T·)/T^{1/α}`
//! (self-similarity); the coupling across `T` that the almost-sure statements
//! concern is not reproduced.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::model::{AlphaStableParams, ScalingFunction, ShiftFunction};
use crate::quad;
use crate::rng::map_streams;
use crate::sim::{self, Jump, SimPath};

pub const DIAGNOSTIC_NOTE: &str =
    "diagnostic: independent copies per horizon; almost-sure limits are not finitely verifiable";

/// First index of the lower grid: `k/(log k)³` increases only for `log k > 3`.
pub const LOWER_GRID_START: u64 = 21;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridKind {
    /// `T_k = exp{k (log k)^{−3}}`
    Lower,
    /// `T_k = exp{k^γ}`, `γ > 1`
    Upper { gamma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub kind: GridKind,
    pub k_start: u64,
    pub k_end: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridPoint {
    pub k: u64,
    pub log_t: f64,
}

impl GridKind {
    pub fn log_t(&self, k: u64) -> f64 {
        let kf = k as f64;
        match *self {
            GridKind::Lower => kf / kf.ln().powi(3),
            GridKind::Upper { gamma } => kf.powf(gamma),
        }
    }
}

impl GridSpec {
    pub fn validate(&self) -> Result<()> {
        if self.k_end < self.k_start {
            return Err(invalid("k_range", "k_end precedes k_start"));
        }
        match self.kind {
            GridKind::Lower if self.k_start < LOWER_GRID_START => Err(invalid(
                "k_range",
                format!("lower grid starts at k = {LOWER_GRID_START}"),
            )),
            GridKind::Upper { gamma } if !(gamma > 1.0) => Err(invalid("gamma", "must exceed 1")),
            GridKind::Upper { .. } if self.k_start < 1 => Err(invalid("k_range", "upper grid starts at k = 1")),
            _ => Ok(()),
        }
    }
}

/// `log T_k` for every `k` in the range; `T_k` itself is never formed.
pub fn grid_times(spec: &GridSpec) -> Result<Vec<GridPoint>> {
    spec.validate()?;
    Ok((spec.k_start..=spec.k_end)
        .map(|k| GridPoint {
            k,
            log_t: spec.kind.log_t(k),
        })
        .collect())
}

/// First lower-grid index with `log T_k > 1`.
pub const RATIO_START: u64 = 94;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Ratios {
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
}

/// On the lower grid, with `ℓ_k = log log T_k` and `d = log T_{k+1} − log T_k`:
///
/// * `r1 = (T_{k+1}^{1/α}ℓ_{k+1}^{δ−1/α} − T_k^{1/α}ℓ_k^{δ−1/α}) / (T_{k+1}/ℓ_{k+1})^{1/α}`
/// * `r2 = (1 − T_k/T_{k+1})^{1/2} T_k^{1/α}ℓ_k^{δ−1/α} / (T_{k+1}/ℓ_{k+1})^{1/α}`
/// * `r3 = T_k/T_{k+1}`
///
/// Requires `log T_k > 1` (`k ≥ 94`). `r1` is negative while
/// `log T_k · log log T_k` is of order one (up to `k ≈ 360`).
pub fn increment_ratios(k: u64, delta: f64, alpha: f64) -> Result<Ratios> {
    if k < LOWER_GRID_START {
        return Err(invalid("k", format!("lower grid starts at k = {LOWER_GRID_START}")));
    }
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    let g = GridKind::Lower;
    let (lk, lk1) = (g.log_t(k), g.log_t(k + 1));
    let d = lk1 - lk;
    if !(lk > 1.0) {
        return Err(invalid("k", format!("log log T_k is undefined below k = {RATIO_START}")));
    }
    let (ell_k, ell_k1) = (lk.ln(), lk1.ln());
    let ia = 1.0 / alpha;
    // e^{−d/α}(ℓ_k/ℓ_{k+1})^{δ−1/α}
    let z = -d * ia + (delta - ia) * (ell_k.ln() - ell_k1.ln());
    let r1 = -ell_k1.powf(delta) * z.exp_m1();
    let r2 = (-(-d).exp_m1()).sqrt() * (-d * ia).exp() * ell_k.powf(delta - ia) * ell_k1.powf(ia);
    let r3 = (-d).exp();
    Ok(Ratios { r1, r2, r3 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaledDistanceRecord {
    pub k: u64,
    pub log_t: f64,
    pub delta: f64,
    pub distance: f64,
    pub running_min: f64,
}

/// `(log log T)^δ ‖path/(log log T)^{δ−1/α} − f‖`, with `path` standing for
/// `X(T·)/T^{1/α}`. Requires `log T > e`.
pub fn scaled_distance(
    path: &SimPath,
    log_t: f64,
    delta: f64,
    alpha: f64,
    f: &ShiftFunction,
) -> Result<ScaledDistanceRecord> {
    if !(log_t > std::f64::consts::E) {
        return Err(invalid("T", "must exceed e^e"));
    }
    if !(0.0..=1.0).contains(&delta) {
        return Err(invalid("delta", "must lie in [0, 1]"));
    }
    let ell = log_t.ln();
    let distance = ell.powf(1.0 / alpha) * sim::sup_distance(path, f, ell.powf(delta - 1.0 / alpha));
    Ok(ScaledDistanceRecord {
        k: 0,
        log_t,
        delta,
        distance,
        running_min: distance,
    })
}

/// Scaled distances over a grid, one independent path per point (stream `k`).
pub fn distance_sweep(
    params: &AlphaStableParams,
    grid: &[GridPoint],
    delta: f64,
    f: &ShiftFunction,
    n_steps: usize,
    seed: u64,
) -> Result<Vec<ScaledDistanceRecord>> {
    let alpha = params.alpha();
    let records: Vec<Result<ScaledDistanceRecord>> = map_streams(seed, 0, grid.len(), |s| {
        let g = grid[s.stream_id as usize];
        let path = sim::sample_jump_path(params, 0.02, true, n_steps, &mut s.rng())?;
        let mut rec = scaled_distance(&path, g.log_t, delta, alpha, f)?;
        rec.k = g.k;
        Ok(rec)
    });
    let records: Vec<ScaledDistanceRecord> = records.into_iter().collect::<Result<_>>()?;
    Ok(liminf_trace(&records)?.records)
}

/// Splits `X` at `ratio`: `Y` is frozen after the last grid time not above
/// `ratio`, `Z = X − Y` vanishes before it.
pub fn yz_decompose(path: &SimPath, ratio: f64) -> Result<(SimPath, SimPath)> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(invalid("ratio", "must lie in (0, 1)"));
    }
    let m = path.times.partition_point(|t| *t <= ratio) - 1;
    let (tm, xm) = (path.times[m], path.values[m]);
    let y_vals: Vec<f64> = path.values.iter().enumerate().map(|(i, x)| if i <= m { *x } else { xm }).collect();
    let z_vals: Vec<f64> = path
        .values
        .iter()
        .enumerate()
        .map(|(i, x)| if i <= m { 0.0 } else { x - xm })
        .collect();
    let (y_jumps, z_jumps): (Vec<Jump>, Vec<Jump>) = path.jumps.iter().partition(|j| j.time <= tm);
    let z_jumps = z_jumps.into_iter().map(|j| Jump { pre: j.pre - xm, ..j }).collect();
    let y = SimPath {
        values: y_vals,
        jumps: y_jumps,
        ..path.clone()
    };
    let z = SimPath {
        values: z_vals,
        jumps: z_jumps,
        ..path.clone()
    };
    Ok((y, z))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LiminfTrace {
    pub records: Vec<ScaledDistanceRecord>,
    pub final_value: f64,
    pub note: &'static str,
}

/// Running minima of the distances, in order of increasing `T`.
pub fn liminf_trace(records: &[ScaledDistanceRecord]) -> Result<LiminfTrace> {
    if records.is_empty() {
        return Err(Error::InsufficientData("no records".into()));
    }
    if records.windows(2).any(|w| w[1].log_t < w[0].log_t) {
        return Err(Error::Unordered);
    }
    let mut run = f64::INFINITY;
    let records: Vec<ScaledDistanceRecord> = records
        .iter()
        .map(|r| {
            run = run.min(r.distance);
            ScaledDistanceRecord { running_min: run, ..*r }
        })
        .collect();
    Ok(LiminfTrace {
        records,
        final_value: run,
        note: DIAGNOSTIC_NOTE,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Converges,
    Diverges,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegralTest {
    pub classification: Classification,
    pub analytic: bool,
    /// `(u_end, ∫_{u₀}^{u_end} du/h(u)^α)` over doubling blocks in `u = log t`.
    pub partials: Vec<(f64, f64)>,
    /// Ratios of consecutive block integrals.
    pub block_ratios: Vec<f64>,
}

const U0: f64 = 2.0;

/// Decides whether `∫^∞ dt/(t h(t)^α)` is finite. In `u = log t` this is
/// `∫ du/h(u)^α`. Power-of-log families are classified in closed form; other
/// functions by the ratios of block integrals over `[u₀2^j, u₀2^{j+1}]` up to
/// `log_t_max`, with ratios all below 0.9 read as convergence and all above
/// 0.999 as divergence.
pub fn integral_test(h: &ScalingFunction, alpha: f64, log_t_max: f64, tol: f64) -> Result<IntegralTest> {
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    if !(log_t_max > 4.0 * U0) {
        return Err(invalid("t_max", "log t_max must exceed 8"));
    }
    let mut partials = Vec::new();
    let mut blocks = Vec::new();
    let mut acc = 0.0;
    let mut a = U0;
    while 2.0 * a <= log_t_max {
        let b = 2.0 * a;
        for i in 0..=16 {
            let u = a + (b - a) * i as f64 / 16.0;
            if !(h.eval_log_t(u) > 0.0) {
                return Err(invalid("h", format!("nonpositive value at log t = {u}")));
            }
        }
        let (block, _) = quad::integrate(|u| h.eval_log_t(u).powf(-alpha), a, b, 0.0, tol);
        if !block.is_finite() {
            return Err(invalid("h", format!("non-finite block integral on [{a}, {b}]")));
        }
        acc += block;
        blocks.push(block);
        partials.push((b, acc));
        a = b;
    }
    let block_ratios: Vec<f64> = blocks.windows(2).map(|w| w[1] / w[0]).collect();
    let (classification, analytic) = match h {
        ScalingFunction::LogPower { log_exp, loglog_exp } => {
            let pa = log_exp * alpha;
            let c = if (pa - 1.0).abs() <= 1e-9 {
                if loglog_exp * alpha > 1.0 {
                    Classification::Converges
                } else {
                    Classification::Diverges
                }
            } else if pa > 1.0 {
                Classification::Converges
            } else {
                Classification::Diverges
            };
            (c, true)
        }
        ScalingFunction::Custom { .. } => {
            let tail = &block_ratios[block_ratios.len().saturating_sub(4)..];
            let c = if tail.is_empty() {
                Classification::Inconclusive
            } else if tail.iter().all(|r| *r < 0.9) {
                Classification::Converges
            } else if tail.iter().all(|r| *r >= 0.999) {
                Classification::Diverges
            } else {
                Classification::Inconclusive
            };
            (c, false)
        }
    };
    Ok(IntegralTest {
        classification,
        analytic,
        partials,
        block_ratios,
    })
}

/// The four power-of-log cases with known answers, at exponent `α`.
pub fn analytic_cases(alpha: f64) -> Vec<(&'static str, ScalingFunction, Classification)> {
    let ia = 1.0 / alpha;
    vec![
        (
            "(log t)^{2/α}",
            ScalingFunction::LogPower { log_exp: 2.0 * ia, loglog_exp: 0.0 },
            Classification::Converges,
        ),
        (
            "(log t)^{1/α}",
            ScalingFunction::LogPower { log_exp: ia, loglog_exp: 0.0 },
            Classification::Diverges,
        ),
        ("(log log t)^{-1/α}", ScalingFunction::power_loglog(-ia), Classification::Diverges),
        (
            "(log t)^{1/α}(log log t)^{2/α}",
            ScalingFunction::LogPower { log_exp: ia, loglog_exp: 2.0 * ia },
            Classification::Converges,
        ),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;
    use crate::stats;

    #[test]
    fn upper_grid_values() {
        let g = grid_times(&GridSpec {
            kind: GridKind::Upper { gamma: 2.0 },
            k_start: 1,
            k_end: 3,
        })
        .unwrap();
        let logs: Vec<f64> = g.iter().map(|p| p.log_t).collect();
        assert_eq!(logs, vec![1.0, 4.0, 9.0]);
    }

    #[test]
    fn lower_grid_domain_and_monotonicity() {
        let bad = GridSpec {
            kind: GridKind::Lower,
            k_start: 20,
            k_end: 30,
        };
        assert!(grid_times(&bad).is_err());
        let g = grid_times(&GridSpec {
            kind: GridKind::Lower,
            k_start: 21,
            k_end: 5000,
        })
        .unwrap();
        assert!(g.windows(2).all(|w| w[1].log_t > w[0].log_t));
        // T_k/T_{k+1} → 1
        let far = GridKind::Lower;
        let ratio = (far.log_t(1_000_000) - far.log_t(1_000_001)).exp();
        assert!((ratio - 1.0).abs() < 1e-3);
    }

    #[test]
    fn ratios_at_a_million() {
        let r = increment_ratios(1_000_000, 0.5, 1.5).unwrap();
        assert!((r.r3 - 1.0).abs() < 1e-3);
        assert!(r.r1 < 0.05 && r.r2 < 0.05, "{r:?}");
        assert!(r.r1.is_finite() && r.r2.is_finite());
        assert!(increment_ratios(20, 0.5, 1.5).is_err());
    }

    #[test]
    fn ratio_signs_and_decay() {
        let mut prev = f64::INFINITY;
        for e in 3..=6 {
            let r = increment_ratios(10u64.pow(e), 0.5, 1.5).unwrap();
            assert!(r.r1 >= 0.0 && r.r2 >= 0.0 && r.r3 > 0.0 && r.r3 <= 1.0);
            assert!(r.r1 < prev);
            prev = r.r1;
        }
        assert!(increment_ratios(RATIO_START - 1, 0.5, 1.5).is_err());
        assert!(increment_ratios(RATIO_START, 0.5, 1.5).is_ok());
        for k in (400u64..200_000).step_by(997) {
            for d in [0.0, 0.5, 1.0] {
                for a in [1.1, 1.5, 1.9] {
                    let r = increment_ratios(k, d, a).unwrap();
                    assert!(r.r1 >= 0.0 && r.r2 >= 0.0 && r.r3 > 0.0 && r.r3 <= 1.0, "k={k} δ={d} α={a}");
                }
            }
        }
    }

    fn zero_path() -> SimPath {
        SimPath {
            times: sim::uniform_grid(4),
            values: vec![0.0; 5],
            jumps: vec![],
            eps_cutoff: f64::INFINITY,
            mode: sim::PathMode::Increment,
            gaussian_small_jumps: false,
        }
    }

    #[test]
    fn scaled_distance_algebra() {
        let p = AlphaStableParams::new(1.5).unwrap();
        let path = sim::sample_stable_path(&p, 64, &mut RngStream::new(1, 1).rng()).unwrap();
        let z = ShiftFunction::zero();
        // doubling log log T scales the δ = 0 distance by 2^{1/α}
        let a = scaled_distance(&path, 10f64.exp(), 0.0, 1.5, &z).unwrap();
        let b = scaled_distance(&path, 20f64.exp(), 0.0, 1.5, &z).unwrap();
        assert!((b.distance / a.distance - 2f64.powf(1.0 / 1.5)).abs() < 1e-12);
        // zero path: (log log T)^δ ‖f‖
        let t = ShiftFunction::tent();
        let log_t = 50.0;
        let d = scaled_distance(&zero_path(), log_t, 0.5, 1.5, &t).unwrap();
        assert!((d.distance - log_t.ln().sqrt()).abs() < 1e-12);
        assert!(scaled_distance(&zero_path(), 2.0, 0.5, 1.5, &t).is_err());
    }

    #[test]
    fn scaled_distance_median() {
        let p = AlphaStableParams::new(1.5).unwrap();
        let log_t: f64 = 1e4;
        let ell: f64 = log_t.ln();
        let z = ShiftFunction::zero();
        let d: Vec<f64> = (0..1000)
            .map(|i| {
                let path = sim::sample_jump_path(&p, 0.02, true, 256, &mut RngStream::new(3, i).rng()).unwrap();
                scaled_distance(&path, log_t, 0.5, 1.5, &z).unwrap().distance
            })
            .collect();
        let plain: Vec<f64> = (0..1000)
            .map(|i| {
                let path = sim::sample_jump_path(&p, 0.02, true, 256, &mut RngStream::new(4, i).rng()).unwrap();
                sim::sup_distance(&path, &z, 0.0)
            })
            .collect();
        let ratio = stats::median(&d) / (ell.powf(1.0 / 1.5) * stats::median(&plain));
        assert!((ratio - 1.0).abs() < 0.2, "{ratio}");
    }

    #[test]
    fn yz_reconstruction() {
        let p = AlphaStableParams::new(1.5).unwrap();
        let path = sim::sample_jump_path(&p, 0.1, true, 4, &mut RngStream::new(2, 2).rng()).unwrap();
        let (y, z) = yz_decompose(&path, 0.5).unwrap();
        for i in 0..5 {
            assert!((y.values[i] + z.values[i] - path.values[i]).abs() <= 1e-15 * (1.0 + path.values[i].abs()));
        }
        let sup_y = y.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let sup_x_first = path.values[..=2].iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert_eq!(sup_y, sup_x_first);
        assert!(z.values[..=2].iter().all(|v| *v == 0.0));
        assert_eq!(y.jumps.len() + z.jumps.len(), path.jumps.len());
        assert!(yz_decompose(&path, 1.0).is_err());
    }

    #[test]
    fn yz_independence() {
        let p = AlphaStableParams::new(1.5).unwrap();
        let n = 10_000;
        let (mut zs, mut xs) = (Vec::with_capacity(n), Vec::with_capacity(n));
        for i in 0..n as u64 {
            let path = sim::sample_stable_path(&p, 32, &mut RngStream::new(6, i).rng()).unwrap();
            let (_, z) = yz_decompose(&path, 0.5).unwrap();
            zs.push(z.values.iter().fold(0.0f64, |m, v| m.max(v.abs())));
            xs.push(path.values[16]);
        }
        // heavy tails: correlate ranks
        let rank = |v: &[f64]| {
            let mut idx: Vec<usize> = (0..v.len()).collect();
            idx.sort_by(|a, b| v[*a].total_cmp(&v[*b]));
            let mut r = vec![0.0; v.len()];
            for (k, i) in idx.into_iter().enumerate() {
                r[i] = k as f64;
            }
            r
        };
        let rho = stats::correlation(&rank(&zs), &rank(&xs));
        assert!(rho.abs() < 4.0 / (n as f64).sqrt(), "{rho}");
    }

    #[test]
    fn trace_examples() {
        let rec = |log_t: f64, d: f64| ScaledDistanceRecord {
            k: 0,
            log_t,
            delta: 0.5,
            distance: d,
            running_min: d,
        };
        let one = liminf_trace(&[rec(10.0, 2.0)]).unwrap();
        assert_eq!(one.final_value, 2.0);
        let t = liminf_trace(&[rec(10.0, 2.0), rec(20.0, 3.0), rec(30.0, 1.0), rec(40.0, 1.5)]).unwrap();
        let mins: Vec<f64> = t.records.iter().map(|r| r.running_min).collect();
        assert_eq!(mins, vec![2.0, 2.0, 1.0, 1.0]);
        assert_eq!(liminf_trace(&[rec(20.0, 1.0), rec(10.0, 1.0)]), Err(Error::Unordered));
    }

    #[test]
    fn sweep_is_monotone_and_labelled() {
        let p = AlphaStableParams::new(1.5).unwrap();
        let grid = grid_times(&GridSpec {
            kind: GridKind::Upper { gamma: 1.5 },
            k_start: 3,
            k_end: 12,
        })
        .unwrap();
        let recs = distance_sweep(&p, &grid, 0.5, &ShiftFunction::zero(), 64, 1).unwrap();
        assert_eq!(recs.len(), 10);
        assert!(recs.windows(2).all(|w| w[1].running_min <= w[0].running_min));
        assert!(DIAGNOSTIC_NOTE.contains("independent"));
    }

    #[test]
    fn analytic_classification() {
        for a in [1.2, 1.5, 1.8] {
            for (name, h, expected) in analytic_cases(a) {
                let r = integral_test(&h, a, 1e6, 1e-10).unwrap();
                assert_eq!(r.classification, expected, "{name} at α={a}");
                assert!(r.analytic);
            }
        }
    }

    #[test]
    fn numeric_classification() {
        let a = 1.5;
        // u² growth of h^α: converges
        let fast = ScalingFunction::custom("log^(2/α)", move |u: f64| u.powf(2.0 / a));
        assert_eq!(integral_test(&fast, a, 1e6, 1e-10).unwrap().classification, Classification::Converges);
        // h^α = u: block integrals constant
        let edge = ScalingFunction::custom("log^(1/α)", move |u: f64| u.powf(1.0 / a));
        assert_eq!(integral_test(&edge, a, 1e6, 1e-10).unwrap().classification, Classification::Diverges);
        // h^α = u log u: diverges, too slowly to tell from doubling blocks
        let slow = ScalingFunction::custom("border", move |u: f64| (u * u.ln()).powf(1.0 / a));
        assert_eq!(integral_test(&slow, a, 1e6, 1e-10).unwrap().classification, Classification::Inconclusive);
        let neg = ScalingFunction::custom("neg", |_| -1.0);
        assert!(integral_test(&neg, a, 1e6, 1e-10).is_err());
    }
}
