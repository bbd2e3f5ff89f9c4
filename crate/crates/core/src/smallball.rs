//! Shifted small-ball probabilities `P{‖X − s·f‖ < r}`: crude Monte Carlo,
//! importance sampling through the truncation event and a tilt, and the
//! Anderson-inequality consistency report.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::constants;
use crate::error::{invalid, Error, Result};
use crate::model::{AlphaStableParams, Estimate, ShiftFunction};
use crate::sim::{self, Center, PathLaw, EPS_FRACTION};
use crate::stats;
use crate::tilt::{self, TiltSpec};

/// Effective sample sizes below this are flagged.
pub const MIN_ESS: f64 = 30.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "regime", rename_all = "snake_case")]
pub enum RegimeTag {
    /// `λr^{α−1}` small.
    Small,
    /// `λr^{α−1} = c`.
    Middle { c: f64 },
    /// `λr^{α−1}` large.
    Large,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SmallBallQuery {
    pub params: AlphaStableParams,
    pub f: ShiftFunction,
    /// `λ`, or `c·r^{−(α−1)}` in the middle regime.
    pub shift_scale: f64,
    pub r: f64,
    pub regime: RegimeTag,
}

impl SmallBallQuery {
    fn build(params: AlphaStableParams, f: ShiftFunction, shift_scale: f64, r: f64, regime: RegimeTag) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(invalid("r", "must be positive"));
        }
        if !(shift_scale >= 0.0 && shift_scale.is_finite()) {
            return Err(invalid("shift_scale", "must be nonnegative"));
        }
        Ok(Self {
            params,
            f,
            shift_scale,
            r,
            regime,
        })
    }

    pub fn small(params: AlphaStableParams, f: ShiftFunction, lambda: f64, r: f64) -> Result<Self> {
        Self::build(params, f, lambda, r, RegimeTag::Small)
    }

    /// Centre `c·r^{−(α−1)}·f`.
    pub fn middle(params: AlphaStableParams, f: ShiftFunction, c: f64, r: f64) -> Result<Self> {
        if !(c > 0.0) {
            return Err(invalid("c", "must be positive"));
        }
        let scale = c * r.powf(1.0 - params.alpha());
        Self::build(params, f, scale, r, RegimeTag::Middle { c })
    }

    pub fn large(params: AlphaStableParams, f: ShiftFunction, lambda: f64, r: f64) -> Result<Self> {
        Self::build(params, f, lambda, r, RegimeTag::Large)
    }

    /// `λr^{α−1}`
    pub fn regime_parameter(&self) -> f64 {
        self.shift_scale * self.r.powf(self.params.alpha() - 1.0)
    }

    pub fn center(&self) -> Center {
        Center::new(self.f.clone(), self.shift_scale)
    }

    /// Middle-regime tilt `(c, r, f)`.
    pub fn tilt(&self) -> Result<TiltSpec> {
        match self.regime {
            RegimeTag::Middle { c } => TiltSpec::middle(self.params, self.f.clone(), c, self.r),
            _ => Err(invalid("regime", "importance sampling needs the middle regime")),
        }
    }
}

/// Cutoff of the jump-resolved sampler used for a ball of radius `r`.
pub fn default_eps(r: f64) -> f64 {
    r * EPS_FRACTION
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrudeReport {
    pub estimate: Estimate,
    /// No path landed in the ball.
    pub unresolved: bool,
}

/// Fraction of stable paths with `‖X − s·f‖ < r`.
pub fn estimate_crude(q: &SmallBallQuery, n_paths: usize, n_steps: usize, seed: u64) -> Result<CrudeReport> {
    let rows = sim::sup_distance_batch(
        PathLaw::Stable {
            params: q.params,
            eps: default_eps(q.r),
        },
        &[q.center()],
        n_paths,
        n_steps,
        seed,
        q.r,
    )?;
    let hits = rows.iter().filter(|row| row.dist[0] < q.r).count() as u64;
    Ok(CrudeReport {
        estimate: Estimate::from_counts(hits, n_paths as u64),
        unresolved: hits == 0,
    })
}

/// `P{no jump larger than r on [0,1]} = exp{−(2/α)r^{−α}}`.
pub fn prob_no_big_jumps(alpha: f64, r: f64) -> Result<f64> {
    if !(alpha > 1.0 && alpha < 2.0) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    if !(r > 0.0) {
        return Err(invalid("r", "must be positive"));
    }
    Ok((-2.0 / alpha * r.powf(-alpha)).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IsReport {
    pub estimate: Estimate,
    /// `(Σw)²/Σw²` over all paths.
    pub ess: f64,
    pub low_ess: bool,
    pub prob_no_big_jumps: f64,
    /// Mean weight over all paths; 1 up to noise.
    pub weight_mean: Estimate,
    /// Largest `|∫(e^θ − 1)Λ|` found numerically before the run.
    pub compensator: f64,
}

/// `P{A}·E_tilted[w·1{‖Y − c r^{1−α} f‖ < r}]` where `A` is the event of no
/// jump above `r` and `Y` follows the tilted truncated law.
pub fn estimate_is(q: &SmallBallQuery, n_paths: usize, n_steps: usize, seed: u64) -> Result<IsReport> {
    let t = q.tilt()?;
    let v = tilt::validity_check(&t);
    if !v.pass {
        return Err(Error::InvalidTilt {
            amplitude: 1.0 - v.margin,
        });
    }
    let compensator = tilt::compensator_check(&t)?;
    if compensator >= 1e-8 {
        return Err(invalid("tilt", format!("compensator check failed: {compensator:e}")));
    }
    let rows = sim::sup_distance_batch(
        PathLaw::Tilted(&t),
        &[Center::new(q.f.clone(), t.shift_scale())],
        n_paths,
        n_steps,
        seed,
        f64::INFINITY,
    )?;
    let weights: Vec<f64> = rows.iter().map(|row| row.log_weight.exp()).collect();
    let contrib: Vec<f64> = rows
        .iter()
        .zip(&weights)
        .map(|(row, w)| if row.dist[0] < q.r { *w } else { 0.0 })
        .collect();
    let sw: f64 = weights.iter().sum();
    let sw2: f64 = weights.iter().map(|w| w * w).sum();
    let ess = sw * sw / sw2;
    let pa = prob_no_big_jumps(q.params.alpha(), q.r)?;
    Ok(IsReport {
        estimate: Estimate::from_samples(&contrib, true).scaled(pa),
        ess,
        low_ess: ess < MIN_ESS,
        prob_no_big_jumps: pa,
        weight_mean: Estimate::from_samples(&weights, false),
        compensator,
    })
}

/// `exp{−C(α)/r^α}`; refused unless `‖f′‖ < 2/((2−α)c)`.
pub fn theory_lower_bound_middle(q: &SmallBallQuery) -> Result<f64> {
    let RegimeTag::Middle { c } = q.regime else {
        return Err(invalid("regime", "the bound concerns the middle regime"));
    };
    let alpha = q.params.alpha();
    if !(q.f.sup_deriv() < 2.0 / ((2.0 - alpha) * c)) {
        return Err(Error::InvalidTilt {
            amplitude: c * (2.0 - alpha) / 2.0 * q.f.sup_deriv(),
        });
    }
    Ok((-constants::series_c_alpha(alpha)? / q.r.powf(alpha)).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailPoint {
    pub x: f64,
    pub estimate: Estimate,
    /// `P̂·x^α`
    pub scaled: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TailReport {
    pub alpha: f64,
    pub points: Vec<TailPoint>,
    /// Slope of `log P̂` against `log x`; estimates `−α`.
    pub slope: f64,
    pub slope_stderr: f64,
    pub slope_ci95: (f64, f64),
    /// `P̂` nonincreasing within 2 stderr.
    pub monotone: bool,
    /// `max/min` of `P̂·x^α`.
    pub constancy_ratio: f64,
}

/// Tail of the sup-norm, `P{‖X‖ > x}`, from full paths. Jumps above
/// `min(x_list)/5` are resolved.
pub fn tail_prob_check(alpha: f64, x_list: &[f64], n_paths: usize, n_steps: usize, seed: u64) -> Result<TailReport> {
    let params = AlphaStableParams::new(alpha)?;
    if x_list.len() < 2 || x_list.iter().any(|x| !(*x > 0.0)) {
        return Err(invalid("x_list", "need at least two positive levels"));
    }
    let x_min = x_list.iter().cloned().fold(f64::INFINITY, f64::min);
    let x_max = x_list.iter().cloned().fold(0.0, f64::max);
    let rows = sim::sup_distance_batch(
        PathLaw::Stable {
            params,
            eps: x_min / 5.0,
        },
        &[Center::origin()],
        n_paths,
        n_steps,
        seed,
        x_max,
    )?;
    let mut points = Vec::new();
    for &x in x_list {
        let hits = rows.iter().filter(|row| row.dist[0] > x).count() as u64;
        let estimate = Estimate::from_counts(hits, n_paths as u64);
        points.push(TailPoint {
            x,
            estimate,
            scaled: estimate.value * x.powf(alpha),
        });
    }
    if points.iter().any(|p| p.estimate.value == 0.0) {
        return Err(Error::InsufficientData("a tail level was never exceeded".into()));
    }
    let lx: Vec<f64> = points.iter().map(|p| p.x.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.estimate.value.ln()).collect();
    // Var log P̂ ≈ (1 − p)/(n p)
    let w: Vec<f64> = points
        .iter()
        .map(|p| n_paths as f64 * p.estimate.value / (1.0 - p.estimate.value))
        .collect();
    let fit = stats::weighted_fit(&lx, &ly, Some(&w));
    let mut sorted = points.clone();
    sorted.sort_by(|a, b| a.x.total_cmp(&b.x));
    let monotone = sorted
        .windows(2)
        .all(|p| p[1].estimate.value <= p[0].estimate.value + 2.0 * p[0].estimate.combined_stderr(&p[1].estimate));
    let scaled: Vec<f64> = points.iter().map(|p| p.scaled).collect();
    let constancy_ratio =
        scaled.iter().cloned().fold(0.0, f64::max) / scaled.iter().cloned().fold(f64::INFINITY, f64::min);
    const Z95: f64 = 1.959_963_984_540_054;
    Ok(TailReport {
        alpha,
        points,
        slope: fit.slope,
        slope_stderr: fit.slope_stderr,
        slope_ci95: (fit.slope - Z95 * fit.slope_stderr, fit.slope + Z95 * fit.slope_stderr),
        monotone,
        constancy_ratio,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AndersonRow {
    pub f: ShiftFunction,
    pub lambda: f64,
    pub estimate: Estimate,
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AndersonReport {
    pub alpha: f64,
    pub r: f64,
    pub baseline: Estimate,
    pub rows: Vec<AndersonRow>,
    pub flags: usize,
}

/// `p̂(f, λ)` for every battery entry on common paths, flagged when it
/// exceeds the centred `p̂(0, 0)` by more than 3 combined stderr.
pub fn anderson_report(
    battery: &[(ShiftFunction, f64)],
    alpha: f64,
    r: f64,
    n_paths: usize,
    n_steps: usize,
    seed: u64,
) -> Result<AndersonReport> {
    let params = AlphaStableParams::new(alpha)?;
    if !(r > 0.0) {
        return Err(invalid("r", "must be positive"));
    }
    let mut centers = vec![Center::origin()];
    centers.extend(battery.iter().map(|(f, l)| Center::new(f.clone(), *l)));
    let rows = sim::sup_distance_batch(
        PathLaw::Stable {
            params,
            eps: default_eps(r),
        },
        &centers,
        n_paths,
        n_steps,
        seed,
        r,
    )?;
    let n = n_paths as u64;
    let est = |k: usize| Estimate::from_counts(rows.iter().filter(|row| row.dist[k] < r).count() as u64, n);
    let baseline = est(0);
    let rows: Vec<AndersonRow> = battery
        .iter()
        .enumerate()
        .map(|(i, (f, lambda))| {
            let e = est(i + 1);
            AndersonRow {
                f: f.clone(),
                lambda: *lambda,
                flagged: e.value > baseline.value + 3.0 * e.combined_stderr(&baseline),
                estimate: e,
            }
        })
        .collect();
    let flags = rows.iter().filter(|r| r.flagged).count();
    Ok(AndersonReport {
        alpha,
        r,
        baseline,
        rows,
        flags,
    })
}

/// Piecewise-linear shift with `n_knots` interior knots at random times,
/// slopes uniform in `[−max_slope, max_slope]`.
pub fn random_shift(n_knots: usize, max_slope: f64, seed: u64) -> ShiftFunction {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut times: Vec<f64> = (0..n_knots).map(|_| rng.random_range(0.02..0.98)).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    times.insert(0, 0.0);
    times.push(1.0);
    let mut knots = vec![(0.0, 0.0)];
    for w in times.windows(2) {
        let s: f64 = rng.random_range(-max_slope..=max_slope);
        let x = knots.last().unwrap().1 + s * (w[1] - w[0]);
        knots.push((w[1], x));
    }
    ShiftFunction::new(knots).expect("sorted knots")
}

/// Zero, identity and tent at scale 1/2, a random 8-knot shift with
/// `‖f′‖ ≤ 1`, and a sweep of `λ ∈ (0, 2]` over the identity.
pub fn default_anderson_battery() -> Vec<(ShiftFunction, f64)> {
    let mut b = vec![
        (ShiftFunction::zero(), 0.0),
        (ShiftFunction::identity(), 0.5),
        (ShiftFunction::tent(), 0.5),
        (random_shift(8, 1.0, 2024), 1.0),
    ];
    for lambda in [0.25, 1.0, 1.5, 2.0] {
        b.push((ShiftFunction::identity(), lambda));
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> AlphaStableParams {
        AlphaStableParams::new(1.5).unwrap()
    }

    #[test]
    fn query_construction() {
        let q = SmallBallQuery::middle(p(), ShiftFunction::identity(), 0.2, 0.8).unwrap();
        assert!((q.shift_scale - 0.2 * 0.8f64.powf(-0.5)).abs() < 1e-15);
        assert!((q.regime_parameter() - 0.2).abs() < 1e-15);
        assert!(SmallBallQuery::small(p(), ShiftFunction::zero(), 0.0, 0.0).is_err());
        assert!(SmallBallQuery::small(p(), ShiftFunction::zero(), -1.0, 1.0).is_err());
        assert!(SmallBallQuery::small(p(), ShiftFunction::zero(), 0.0, 1.0).unwrap().tilt().is_err());
    }

    #[test]
    fn no_big_jumps_closed_form() {
        assert!((prob_no_big_jumps(1.5, 1.0).unwrap() - (-4.0f64 / 3.0).exp()).abs() < 1e-16);
        assert!(prob_no_big_jumps(1.5, 1e12).unwrap() > 1.0 - 1e-15);
        assert!(prob_no_big_jumps(1.5, 0.0).is_err());
    }

    #[test]
    fn huge_radius_contains_everything() {
        let q = SmallBallQuery::small(p(), ShiftFunction::zero(), 0.0, 100.0).unwrap();
        let c = estimate_crude(&q, 1000, 64, 1).unwrap();
        assert!(c.estimate.value > 0.99);
    }

    #[test]
    fn lower_bound_properties() {
        let q = SmallBallQuery::middle(p(), ShiftFunction::identity(), 0.2, 1.0).unwrap();
        let b = theory_lower_bound_middle(&q).unwrap();
        let expected = (-constants::series_c_alpha(1.5).unwrap()).exp();
        assert_eq!(b, expected);
        assert!(b <= 1.0);
        let bad = SmallBallQuery::middle(p(), ShiftFunction::identity(), 9.0, 1.0).unwrap();
        assert!(theory_lower_bound_middle(&bad).is_err());
        let small = SmallBallQuery::small(p(), ShiftFunction::identity(), 0.1, 1.0).unwrap();
        assert!(theory_lower_bound_middle(&small).is_err());
    }

    #[test]
    fn zero_shift_is_matches_conditioned_crude() {
        // f = 0: IS is P{A}·P̂{‖truncated‖ < r} and must agree with crude
        let r = 1.2;
        let q = SmallBallQuery::middle(p(), ShiftFunction::zero(), 0.5, r).unwrap();
        let is = estimate_is(&q, 4000, 256, 5).unwrap();
        assert_eq!(is.weight_mean.value, 1.0);
        let crude = estimate_crude(&q, 4000, 256, 6).unwrap();
        assert!(is.estimate.overlaps(&crude.estimate), "{is:?} {crude:?}");
    }

    #[test]
    fn anderson_trivial_battery() {
        let rep = anderson_report(&[(ShiftFunction::zero(), 0.0)], 1.5, 1.0, 2000, 128, 3).unwrap();
        assert_eq!(rep.flags, 0);
        assert_eq!(rep.rows[0].estimate, rep.baseline);
    }

    #[test]
    fn symmetric_shifts_agree() {
        let f = ShiftFunction::tent();
        let battery = [(f.clone(), 0.7), (f.scaled(-1.0), 0.7)];
        let rep = anderson_report(&battery, 1.5, 1.2, 4000, 128, 8).unwrap();
        assert!(rep.rows[0].estimate.overlaps(&rep.rows[1].estimate));
    }

    #[test]
    fn random_shift_respects_slope_bound() {
        let f = random_shift(8, 1.0, 7);
        assert!(f.sup_deriv() <= 1.0);
        assert_eq!(f.knots().len(), 10);
        assert_eq!(random_shift(8, 1.0, 7), f);
    }

    #[test]
    fn tail_nested_levels() {
        let rep = tail_prob_check(1.5, &[4.0, 8.0, 16.0], 4000, 256, 3).unwrap();
        assert!(rep.monotone);
        assert!(rep.points.windows(2).all(|w| w[1].estimate.value <= w[0].estimate.value));
        assert!(rep.slope < 0.0);
        assert!(tail_prob_check(1.5, &[4.0], 100, 16, 3).is_err());
        assert!(tail_prob_check(1.5, &[4.0, 1e9], 100, 16, 3).is_err());
    }
}
