//! Domain types shared by the samplers and estimators.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::distribution::{Beta, ContinuousCDF};

use crate::constants;
use crate::error::{invalid, Error, Result};
use crate::quad;

/// Symmetric α-stable process with Lévy measure `Λ(dx) = |x|^{−1−α} dx`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AlphaRepr", into = "AlphaRepr")]
pub struct AlphaStableParams {
    alpha: f64,
    c_alpha: f64,
}

#[derive(Serialize, Deserialize)]
struct AlphaRepr {
    alpha: f64,
}

impl TryFrom<AlphaRepr> for AlphaStableParams {
    type Error = Error;
    fn try_from(r: AlphaRepr) -> Result<Self> {
        Self::new(r.alpha)
    }
}

impl From<AlphaStableParams> for AlphaRepr {
    fn from(p: AlphaStableParams) -> Self {
        AlphaRepr { alpha: p.alpha }
    }
}

impl AlphaStableParams {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(alpha > 1.0 && alpha < 2.0) {
            return Err(Error::AlphaOutOfRange(alpha));
        }
        let c_alpha = constants::c_alpha_symbol(alpha)?;
        Ok(Self { alpha, c_alpha })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Scale of the characteristic exponent: `E e^{iuX(1)} = exp{−c_α |u|^α}`.
    pub fn c_alpha(&self) -> f64 {
        self.c_alpha
    }

    /// Scale of `X(1)` relative to the standard `exp{−|u|^α}` variate.
    pub fn unit_scale(&self) -> f64 {
        self.c_alpha.powf(1.0 / self.alpha)
    }

    /// `Λ{|x| > eps} = (2/α) eps^{−α}`.
    pub fn tail_mass(&self, eps: f64) -> f64 {
        2.0 / self.alpha * eps.powf(-self.alpha)
    }

    /// `∫_{|x|≤eps} x² Λ(dx) = 2 eps^{2−α} / (2−α)`.
    pub fn small_jump_variance(&self, eps: f64) -> f64 {
        2.0 * eps.powf(2.0 - self.alpha) / (2.0 - self.alpha)
    }

    /// `(2 − α) / 2`, the factor that makes the tilt absorb the drift exactly.
    pub fn tilt_factor(&self) -> f64 {
        (2.0 - self.alpha) / 2.0
    }
}

/// A Lévy density `ℓ(x)` with respect to `dx`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LevyDensity {
    /// `|x|^{−1−α}` on `|x| < cut` (`cut = ∞` for the full stable measure).
    SymmetricStable { alpha: f64, cut: f64 },
    /// `|x|^{−α}` on `0 < ±x < cut`; bounded variation, one-signed jumps.
    OneSidedPower { alpha: f64, cut: f64, positive: bool },
}

impl LevyDensity {
    pub fn stable(alpha: f64) -> Self {
        LevyDensity::SymmetricStable {
            alpha,
            cut: f64::INFINITY,
        }
    }

    pub fn truncated_stable(alpha: f64, cut: f64) -> Self {
        LevyDensity::SymmetricStable { alpha, cut }
    }

    pub fn density(&self, x: f64) -> f64 {
        match *self {
            LevyDensity::SymmetricStable { alpha, cut } => {
                if x != 0.0 && x.abs() < cut {
                    x.abs().powf(-1.0 - alpha)
                } else {
                    0.0
                }
            }
            LevyDensity::OneSidedPower { alpha, cut, positive } => {
                let y = if positive { x } else { -x };
                if y > 0.0 && y < cut {
                    y.powf(-alpha)
                } else {
                    0.0
                }
            }
        }
    }

    pub fn cut(&self) -> f64 {
        match *self {
            LevyDensity::SymmetricStable { cut, .. } | LevyDensity::OneSidedPower { cut, .. } => cut,
        }
    }

    /// Mass of `{eps < |x| < cut}`.
    pub fn mass_above(&self, eps: f64) -> f64 {
        let cut = self.cut();
        if eps >= cut {
            return 0.0;
        }
        match *self {
            LevyDensity::SymmetricStable { alpha, .. } => {
                2.0 * (eps.powf(-alpha) - cut.powf(-alpha)) / alpha
            }
            LevyDensity::OneSidedPower { alpha, .. } => {
                (eps.powf(1.0 - alpha) - cut.powf(1.0 - alpha)) / (alpha - 1.0)
            }
        }
    }

    /// `∫ x ℓ(x) dx` over `{eps < |x| < cut}`; the compensator of the big jumps.
    pub fn mean_above(&self, eps: f64) -> f64 {
        match *self {
            LevyDensity::SymmetricStable { .. } => 0.0,
            LevyDensity::OneSidedPower { alpha, cut, positive } => {
                if eps >= cut {
                    return 0.0;
                }
                let m = (cut.powf(2.0 - alpha) - eps.powf(2.0 - alpha)) / (2.0 - alpha);
                if positive {
                    m
                } else {
                    -m
                }
            }
        }
    }

    /// `∫ x² ℓ(x) dx` over `{|x| ≤ min(eps, cut)}`.
    pub fn variance_below(&self, eps: f64) -> f64 {
        let e = eps.min(self.cut());
        match *self {
            LevyDensity::SymmetricStable { alpha, .. } => 2.0 * e.powf(2.0 - alpha) / (2.0 - alpha),
            LevyDensity::OneSidedPower { alpha, .. } => e.powf(3.0 - alpha) / (3.0 - alpha),
        }
    }

    /// Draws a jump from `ℓ` restricted to `{eps < |x| < cut}` given a uniform
    /// `u ∈ (0,1)` for the magnitude and a sign bit.
    pub fn jump_from_uniform(&self, eps: f64, u: f64, negative: bool) -> f64 {
        match *self {
            LevyDensity::SymmetricStable { alpha, cut } => {
                let lo = eps.powf(-alpha);
                let hi = if cut.is_finite() { cut.powf(-alpha) } else { 0.0 };
                let mag = (lo - u * (lo - hi)).powf(-1.0 / alpha);
                if negative {
                    -mag
                } else {
                    mag
                }
            }
            LevyDensity::OneSidedPower { alpha, cut, positive } => {
                let lo = eps.powf(1.0 - alpha);
                let hi = cut.powf(1.0 - alpha);
                let mag = (lo - u * (lo - hi)).powf(1.0 / (1.0 - alpha));
                if positive {
                    mag
                } else {
                    -mag
                }
            }
        }
    }

    /// Numerical `∫ min(1, x²) ℓ(x) dx`; finite for every admissible density.
    pub fn integrability(&self) -> f64 {
        let half = |sign: f64| {
            let g = |x: f64| x.min(1.0).powi(2) * self.density(sign * x);
            let cut = self.cut();
            let inner_end = cut.min(1.0);
            let (inner, _) = quad::integrate(g, 0.0, inner_end, 1e-12, 1e-10);
            let outer = if cut > 1.0 {
                // substitute x = 1/s on (1, cut)
                let h = |s: f64| if s > 0.0 { g(1.0 / s) / (s * s) } else { 0.0 };
                let lo = if cut.is_finite() { 1.0 / cut } else { 0.0 };
                quad::integrate(h, lo, 1.0, 1e-12, 1e-10).0
            } else {
                0.0
            };
            inner + outer
        };
        half(1.0) + half(-1.0)
    }
}

/// Nonnegative time density `μ(t)` on `[0, 1]` with exact cumulative integrals.
#[derive(Debug, Clone, PartialEq)]
pub enum TimeDensity {
    Constant(f64),
    /// `μ(t) = intercept + slope·t`
    Affine { intercept: f64, slope: f64 },
    /// Piecewise constant: `values[i]` on `[breaks[i], breaks[i+1])`.
    Steps { breaks: Vec<f64>, values: Vec<f64> },
}

impl TimeDensity {
    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            TimeDensity::Constant(c) => *c >= 0.0,
            TimeDensity::Affine { intercept, slope } => *intercept >= 0.0 && intercept + slope >= 0.0,
            TimeDensity::Steps { breaks, values } => {
                if breaks.len() != values.len() + 1
                    || breaks.first() != Some(&0.0)
                    || breaks.last() != Some(&1.0)
                    || breaks.windows(2).any(|w| w[1] <= w[0])
                {
                    return Err(invalid("mu", "step breaks must run 0 = b₀ < … < b_m = 1"));
                }
                values.iter().all(|v| *v >= 0.0)
            }
        };
        if !ok {
            return Err(invalid("mu", "time density must be nonnegative"));
        }
        if self.total() <= 0.0 {
            return Err(invalid("mu", "time density must have positive mass"));
        }
        Ok(())
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            TimeDensity::Constant(c) => *c,
            TimeDensity::Affine { intercept, slope } => intercept + slope * t,
            TimeDensity::Steps { breaks, values } => {
                let i = breaks[1..].partition_point(|b| *b <= t).min(values.len() - 1);
                values[i]
            }
        }
    }

    /// `∫₀ᵗ μ(s) ds`.
    pub fn cumulative(&self, t: f64) -> f64 {
        match self {
            TimeDensity::Constant(c) => c * t,
            TimeDensity::Affine { intercept, slope } => intercept * t + 0.5 * slope * t * t,
            TimeDensity::Steps { breaks, values } => {
                let mut acc = 0.0;
                for (w, v) in breaks.windows(2).zip(values) {
                    if t <= w[0] {
                        break;
                    }
                    acc += v * (t.min(w[1]) - w[0]);
                }
                acc
            }
        }
    }

    pub fn total(&self) -> f64 {
        self.cumulative(1.0)
    }

    pub fn max(&self) -> f64 {
        match self {
            TimeDensity::Constant(c) => *c,
            TimeDensity::Affine { intercept, slope } => intercept.max(intercept + slope),
            TimeDensity::Steps { values, .. } => values.iter().cloned().fold(0.0, f64::max),
        }
    }

    /// Normalised clock `φ(t) = ∫₀ᵗ μ / ∫₀¹ μ`.
    pub fn clock(&self, t: f64) -> f64 {
        self.cumulative(t) / self.total()
    }
}

/// Drift density `γ(t) = scale · f′(t)`; zero when `shape` is `None`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Drift {
    pub scale: f64,
    pub shape: Option<ShiftFunction>,
}

impl Drift {
    /// `∫_a^b γ(t) dt`.
    pub fn integral(&self, a: f64, b: f64) -> f64 {
        match &self.shape {
            Some(f) if self.scale != 0.0 => self.scale * (f.eval_clamped(b) - f.eval_clamped(a)),
            _ => 0.0,
        }
    }
}

/// Centered triplet `(σ², ℓ(x) μ(t) dx dt, γ(t))₁` of an additive process.
#[derive(Debug, Clone, PartialEq)]
pub struct CenteredTriplet {
    pub sigma2: f64,
    pub levy: LevyDensity,
    pub time_weight: TimeDensity,
    pub drift: Drift,
}

impl CenteredTriplet {
    pub fn levy_process(levy: LevyDensity) -> Self {
        Self {
            sigma2: 0.0,
            levy,
            time_weight: TimeDensity::Constant(1.0),
            drift: Drift::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sigma2 != 0.0 {
            return Err(invalid("sigma2", "only pure-jump triplets are supported"));
        }
        self.time_weight.validate()?;
        let m = self.levy.integrability();
        if !m.is_finite() {
            return Err(invalid("levy", "∫ min(1, x²) ℓ(x) dx diverges"));
        }
        Ok(())
    }
}

/// Continuous piecewise-linear function on `[0, 1]` with `f(0) = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<[f64; 2]>", into = "Vec<[f64; 2]>")]
pub struct ShiftFunction {
    knots: Vec<(f64, f64)>,
    slopes: Vec<f64>,
    sup_deriv: f64,
    l2_deriv: f64,
}

impl TryFrom<Vec<[f64; 2]>> for ShiftFunction {
    type Error = Error;
    fn try_from(v: Vec<[f64; 2]>) -> Result<Self> {
        Self::new(v.into_iter().map(|[t, x]| (t, x)).collect())
    }
}

impl From<ShiftFunction> for Vec<[f64; 2]> {
    fn from(f: ShiftFunction) -> Self {
        f.knots.into_iter().map(|(t, x)| [t, x]).collect()
    }
}

impl ShiftFunction {
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self> {
        let Some(&(t0, x0)) = knots.first() else {
            return Err(Error::InvalidShift("empty knot list".into()));
        };
        if t0 != 0.0 || x0 != 0.0 {
            return Err(Error::InvalidShift(format!("first knot must be (0, 0), got ({t0}, {x0})")));
        }
        if knots.len() < 2 {
            return Err(Error::InvalidShift("need at least two knots".into()));
        }
        if knots.windows(2).any(|w| !(w[1].0 > w[0].0)) {
            return Err(Error::InvalidShift("knot times must be strictly increasing".into()));
        }
        if knots.iter().any(|(t, x)| !t.is_finite() || !x.is_finite()) {
            return Err(Error::InvalidShift("non-finite knot".into()));
        }
        let last = knots[knots.len() - 1].0;
        if last != 1.0 {
            return Err(Error::InvalidShift(format!("last knot time must be 1, got {last}")));
        }
        let slopes: Vec<f64> = knots
            .windows(2)
            .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
            .collect();
        let sup_deriv = slopes.iter().fold(0.0_f64, |m, s| m.max(s.abs()));
        let l2 = knots
            .windows(2)
            .zip(&slopes)
            .map(|(w, s)| s * s * (w[1].0 - w[0].0))
            .sum::<f64>();
        Ok(Self {
            knots,
            slopes,
            sup_deriv,
            l2_deriv: l2.sqrt(),
        })
    }

    pub fn zero() -> Self {
        Self::new(vec![(0.0, 0.0), (1.0, 0.0)]).unwrap()
    }

    pub fn identity() -> Self {
        Self::new(vec![(0.0, 0.0), (1.0, 1.0)]).unwrap()
    }

    /// Tent with peak 1 at `t = 1/2`.
    pub fn tent() -> Self {
        Self::new(vec![(0.0, 0.0), (0.5, 1.0), (1.0, 0.0)]).unwrap()
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidShift(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("knots serialize")
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    /// `(start, end, slope)` for each linear segment.
    pub fn segments(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.knots
            .windows(2)
            .zip(&self.slopes)
            .map(|(w, &s)| (w[0].0, w[1].0, s))
    }

    /// `‖f′‖_∞`
    pub fn sup_deriv(&self) -> f64 {
        self.sup_deriv
    }

    /// `(∫₀¹ f′²)^{1/2}`
    pub fn l2_deriv(&self) -> f64 {
        self.l2_deriv
    }

    /// `‖f‖_∞`, attained at a knot.
    pub fn sup_norm(&self) -> f64 {
        self.knots.iter().fold(0.0_f64, |m, (_, x)| m.max(x.abs()))
    }

    pub fn is_zero(&self) -> bool {
        self.sup_deriv == 0.0
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::TimeOutOfRange(t));
        }
        Ok(self.eval_clamped(t))
    }

    /// Evaluation with `t` clamped into `[0, 1]`.
    pub fn eval_clamped(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        let i = self.segment_index(t);
        let (t0, x0) = self.knots[i];
        let (t1, x1) = self.knots[i + 1];
        if t == t1 {
            return x1;
        }
        x0 + self.slopes[i] * (t - t0)
    }

    /// Right derivative `f′(t)` (left derivative at `t = 1`).
    pub fn slope_at(&self, t: f64) -> f64 {
        self.slopes[self.segment_index(t.clamp(0.0, 1.0))]
    }

    fn segment_index(&self, t: f64) -> usize {
        // first knot strictly after t, minus one, kept inside the segment range
        let i = self.knots.partition_point(|(k, _)| *k <= t);
        i.saturating_sub(1).min(self.slopes.len() - 1)
    }

    /// `∫₀¹ (scale · f′)^{2k} dt`, exact per segment.
    pub fn even_moment(&self, scale: f64, k: u32) -> f64 {
        self.segments()
            .map(|(a, b, s)| (scale * s).powi(2 * k as i32) * (b - a))
            .sum()
    }

    /// `f` multiplied by a constant.
    pub fn scaled(&self, c: f64) -> Self {
        Self::new(self.knots.iter().map(|(t, x)| (*t, c * x)).collect()).unwrap()
    }
}

/// Scaling function `h(T)` in the functional LIL, evaluated through `log T`.
#[derive(Clone)]
pub enum ScalingFunction {
    /// `h(T) = (log T)^{log_exp} (log log T)^{loglog_exp}`
    LogPower { log_exp: f64, loglog_exp: f64 },
    /// Arbitrary positive `h`, given as a function of `log T` to avoid overflow.
    Custom {
        name: String,
        of_log_t: Arc<dyn Fn(f64) -> f64 + Send + Sync>,
    },
}

impl fmt::Debug for ScalingFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalingFunction::LogPower { log_exp, loglog_exp } => f
                .debug_struct("LogPower")
                .field("log_exp", log_exp)
                .field("loglog_exp", loglog_exp)
                .finish(),
            ScalingFunction::Custom { name, .. } => f.debug_struct("Custom").field("name", name).finish(),
        }
    }
}

impl ScalingFunction {
    /// `h(T) = (log log T)^δ`
    pub fn power_loglog(delta: f64) -> Self {
        ScalingFunction::LogPower {
            log_exp: 0.0,
            loglog_exp: delta,
        }
    }

    pub fn custom(name: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        ScalingFunction::Custom {
            name: name.into(),
            of_log_t: Arc::new(f),
        }
    }

    /// `h` at `T = exp(log_t)`; defined for `log_t > 1`.
    pub fn eval_log_t(&self, log_t: f64) -> f64 {
        match self {
            ScalingFunction::LogPower { log_exp, loglog_exp } => {
                log_t.powf(*log_exp) * log_t.ln().powf(*loglog_exp)
            }
            ScalingFunction::Custom { of_log_t, .. } => of_log_t(log_t),
        }
    }
}

/// A Monte Carlo result with a 95% confidence interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub stderr: f64,
    pub n: u64,
    pub ci95: (f64, f64),
}

const Z95: f64 = 1.959_963_984_540_054;

impl Estimate {
    /// Proportion `hits / n`. Uses the normal interval unless fewer than 30
    /// hits or misses were observed, in which case the Clopper–Pearson interval
    /// is reported instead.
    pub fn from_counts(hits: u64, n: u64) -> Self {
        assert!(n > 0 && hits <= n);
        let nf = n as f64;
        let p = hits as f64 / nf;
        let stderr = if n > 1 {
            (p * (1.0 - p) / (nf - 1.0)).sqrt()
        } else {
            0.0
        };
        let ci95 = if hits < 30 || n - hits < 30 {
            clopper_pearson(hits, n)
        } else {
            ((p - Z95 * stderr).max(0.0), (p + Z95 * stderr).min(1.0))
        };
        Self { value: p, stderr, n, ci95 }
    }

    /// Sample mean of `xs`; `probability` clips the interval to `[0, 1]`.
    pub fn from_samples(xs: &[f64], probability: bool) -> Self {
        let n = xs.len();
        assert!(n > 0);
        let nf = n as f64;
        let mean = xs.iter().sum::<f64>() / nf;
        let var = if n > 1 {
            xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0)
        } else {
            0.0
        };
        let stderr = (var / nf).sqrt();
        let mut ci95 = (mean - Z95 * stderr, mean + Z95 * stderr);
        if probability {
            ci95 = (ci95.0.max(0.0), ci95.1.min(1.0));
        }
        Self { value: mean, stderr, n: n as u64, ci95 }
    }

    /// Multiplies value, error and interval by a known positive constant.
    pub fn scaled(self, c: f64) -> Self {
        Self {
            value: self.value * c,
            stderr: self.stderr * c,
            n: self.n,
            ci95: (self.ci95.0 * c, self.ci95.1 * c),
        }
    }

    pub fn overlaps(&self, other: &Estimate) -> bool {
        self.ci95.0 <= other.ci95.1 && other.ci95.0 <= self.ci95.1
    }

    pub fn combined_stderr(&self, other: &Estimate) -> f64 {
        self.stderr.hypot(other.stderr)
    }
}

/// Exact two-sided 95% binomial interval.
pub fn clopper_pearson(hits: u64, n: u64) -> (f64, f64) {
    let x = hits as f64;
    let nf = n as f64;
    let lo = if hits == 0 {
        0.0
    } else {
        Beta::new(x, nf - x + 1.0).unwrap().inverse_cdf(0.025)
    };
    let hi = if hits == n {
        1.0
    } else {
        Beta::new(x + 1.0, nf - x).unwrap().inverse_cdf(0.975)
    };
    (lo, hi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn alpha_range_enforced() {
        assert!(AlphaStableParams::new(1.0).is_err());
        assert!(AlphaStableParams::new(2.0).is_err());
        assert!(AlphaStableParams::new(f64::NAN).is_err());
        let p = AlphaStableParams::new(1.5).unwrap();
        assert!(p.c_alpha() > 0.0);
    }

    #[test]
    fn zero_identity_tent() {
        let z = ShiftFunction::zero();
        assert_eq!(z.sup_deriv(), 0.0);
        let id = ShiftFunction::identity();
        assert_eq!(id.sup_deriv(), 1.0);
        assert_eq!(id.l2_deriv(), 1.0);
        let tent = ShiftFunction::tent();
        assert_eq!(tent.sup_deriv(), 2.0);
        // ∫ f′² = 4·½ + 4·½ = 4
        assert!((tent.l2_deriv() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn evaluation() {
        let tent = ShiftFunction::tent();
        assert_eq!(tent.eval(0.25).unwrap(), 0.5);
        assert_eq!(tent.eval(0.5).unwrap(), 1.0);
        assert_eq!(tent.eval(0.0).unwrap(), 0.0);
        assert_eq!(tent.eval(1.0).unwrap(), 0.0);
        assert!((ShiftFunction::identity().eval(0.7).unwrap() - 0.7).abs() < 1e-16);
        assert!(matches!(tent.eval(1.5), Err(Error::TimeOutOfRange(_))));
        assert!(tent.eval(-0.1).is_err());
    }

    #[test]
    fn rejects_bad_knots() {
        assert!(ShiftFunction::new(vec![]).is_err());
        assert!(ShiftFunction::new(vec![(0.0, 0.1), (1.0, 0.0)]).is_err());
        assert!(ShiftFunction::new(vec![(0.0, 0.0), (0.6, 1.0), (0.4, 0.0), (1.0, 0.0)]).is_err());
        assert!(ShiftFunction::new(vec![(0.0, 0.0), (0.9, 1.0)]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let tent = ShiftFunction::tent();
        let s = tent.to_json();
        assert_eq!(s, "[[0.0,0.0],[0.5,1.0],[1.0,0.0]]");
        assert_eq!(ShiftFunction::from_json(&s).unwrap(), tent);
        assert!(ShiftFunction::from_json("[[0.1,0.0],[1.0,0.0]]").is_err());
    }

    #[test]
    fn time_density_clock() {
        let mu = TimeDensity::Affine { intercept: 0.0, slope: 2.0 };
        mu.validate().unwrap();
        for t in [0.0, 0.3, 0.5, 1.0] {
            assert!((mu.clock(t) - t * t).abs() < 1e-15);
        }
        let steps = TimeDensity::Steps {
            breaks: vec![0.0, 0.5, 1.0],
            values: vec![1.0, 3.0],
        };
        steps.validate().unwrap();
        assert_eq!(steps.total(), 2.0);
        assert_eq!(steps.value(0.75), 3.0);
        assert!(TimeDensity::Affine { intercept: 1.0, slope: -2.0 }.validate().is_err());
    }

    #[test]
    fn levy_density_closed_forms() {
        let d = LevyDensity::truncated_stable(1.5, 1.0);
        let eps: f64 = 0.1;
        assert!((d.mass_above(eps) - 2.0 * (eps.powf(-1.5) - 1.0) / 1.5).abs() < 1e-12);
        // numeric check of the second moment below eps
        let (num, _) = quad::integrate(|x| 2.0 * x * x * d.density(x), 0.0, eps, 1e-14, 1e-12);
        assert!((num - d.variance_below(eps)).abs() < 1e-9);
        assert!(d.integrability().is_finite());
        assert!(LevyDensity::stable(1.2).integrability().is_finite());
        let one = LevyDensity::OneSidedPower { alpha: 1.5, cut: 1.0, positive: true };
        let (m, _) = quad::integrate(|x| x * one.density(x), eps, 1.0, 1e-14, 1e-12);
        assert!((m - one.mean_above(eps)).abs() < 1e-10);
    }

    #[test]
    fn estimate_intervals() {
        let e = Estimate::from_counts(500, 1000);
        assert!(e.ci95.0 < 0.5 && e.ci95.1 > 0.5);
        let small = Estimate::from_counts(0, 100);
        assert_eq!(small.ci95.0, 0.0);
        assert!(small.ci95.1 > 0.03 && small.ci95.1 < 0.04);
        let s = Estimate::from_samples(&[1.0, 2.0, 3.0], false);
        assert_eq!(s.value, 2.0);
        assert!((s.stderr - (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    fn arb_shift() -> impl Strategy<Value = ShiftFunction> {
        proptest::collection::vec((0.01f64..1.0, -2.0f64..2.0), 1..8).prop_map(|segs| {
            let total: f64 = segs.iter().map(|(w, _)| w).sum();
            let mut t = 0.0;
            let mut knots = vec![(0.0, 0.0)];
            for (i, (w, x)) in segs.iter().enumerate() {
                t += w / total;
                let tt = if i + 1 == segs.len() { 1.0 } else { t };
                knots.push((tt, *x));
            }
            ShiftFunction::new(knots).unwrap()
        })
    }

    proptest! {
        #[test]
        fn schwarz_bound(f in arb_shift(), a in 0.0f64..=1.0) {
            // |f(s) − f(as)| ≤ ‖f′‖_{L2} (1 − a)^{1/2}
            let bound = f.l2_deriv() * (1.0 - a).sqrt();
            for i in 0..=200 {
                let s = i as f64 / 200.0;
                let d = (f.eval(s).unwrap() - f.eval(a * s).unwrap()).abs();
                prop_assert!(d <= bound + 1e-12);
            }
        }

        #[test]
        fn derived_norms_match_segments(f in arb_shift()) {
            let sup = f.slopes().iter().fold(0.0f64, |m, s| m.max(s.abs()));
            prop_assert_eq!(sup, f.sup_deriv());
            let l2: f64 = f.segments().map(|(a, b, s)| s * s * (b - a)).sum();
            prop_assert!((l2 - f.l2_deriv().powi(2)).abs() < 1e-12);
            // exact at knots
            for &(t, x) in f.knots() {
                prop_assert!((f.eval(t).unwrap() - x).abs() < 1e-12);
            }
        }

        #[test]
        fn ci_contains_value(hits in 0u64..200, extra in 1u64..200) {
            let e = Estimate::from_counts(hits, hits + extra);
            prop_assert!(e.ci95.0 <= e.value && e.value <= e.ci95.1);
        }
    }
}
