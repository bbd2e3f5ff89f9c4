//! Exponential tilts `θ(x, t) = log(1 + b(t)·x/cut)` of a symmetric stable
//! Lévy measure, their validity, deterministic exponent and path log-weights.
//!
//! With `b(t) = κ·(2−α)/2·f′(t)` the tilted measure `e^θ Λ` on `|x| < cut` has
//! mean `intensity·κ·cut^{1−α}·f′(t)`, so the tilted process follows the shift
//! `shift_scale()·f` while `∫(e^θ − 1)Λ(dx)` vanishes by oddness.

use serde::{Deserialize, Serialize};

use crate::constants::SeriesSum;
use crate::error::{invalid, Error, Result};
use crate::model::{AlphaStableParams, LevyDensity, ShiftFunction};
use crate::quad;
use crate::sim::{PathMode, SimPath, EPS_FRACTION};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "regime", rename_all = "snake_case")]
pub enum Regime {
    /// Rescaled coordinates: jump intensity `ρ`, tilt on `|x| < 1`,
    /// `κ = λρ^{−(α−1)/α}`; jumps of size at least 1 are kept untilted.
    SmallShift { lambda: f64, rho: f64 },
    /// Jumps restricted to `|x| < r`, `κ = c`.
    MiddleShift { c: f64, r: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TiltSpec {
    pub params: AlphaStableParams,
    pub f: ShiftFunction,
    #[serde(flatten)]
    pub regime: Regime,
}

fn positive(name: &'static str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(invalid(name, format!("must be positive and finite, got {v}")));
    }
    Ok(())
}

impl TiltSpec {
    pub fn middle(params: AlphaStableParams, f: ShiftFunction, c: f64, r: f64) -> Result<Self> {
        positive("c", c)?;
        positive("r", r)?;
        Ok(Self {
            params,
            f,
            regime: Regime::MiddleShift { c, r },
        })
    }

    pub fn small(params: AlphaStableParams, f: ShiftFunction, lambda: f64, rho: f64) -> Result<Self> {
        positive("lambda", lambda)?;
        positive("rho", rho)?;
        Ok(Self {
            params,
            f,
            regime: Regime::SmallShift { lambda, rho },
        })
    }

    /// Small shift with `ρ* = r^{−α}(λr^{α−1})^{−1}`.
    pub fn small_default_rho(params: AlphaStableParams, f: ShiftFunction, lambda: f64, r: f64) -> Result<Self> {
        positive("r", r)?;
        positive("lambda", lambda)?;
        let a = params.alpha();
        let rho = r.powf(-a) / (lambda * r.powf(a - 1.0));
        Self::small(params, f, lambda, rho)
    }

    pub fn validate(&self) -> Result<()> {
        match self.regime {
            Regime::SmallShift { lambda, rho } => {
                positive("lambda", lambda)?;
                positive("rho", rho)
            }
            Regime::MiddleShift { c, r } => {
                positive("c", c)?;
                positive("r", r)
            }
        }
    }

    pub fn kappa(&self) -> f64 {
        match self.regime {
            Regime::SmallShift { lambda, rho } => {
                let a = self.params.alpha();
                lambda * rho.powf(-(a - 1.0) / a)
            }
            Regime::MiddleShift { c, .. } => c,
        }
    }

    fn factor(&self) -> f64 {
        self.kappa() * self.params.tilt_factor()
    }

    /// `b(t) = κ(2−α)/2·f′(t)`
    pub fn amplitude_at(&self, t: f64) -> f64 {
        self.factor() * self.f.slope_at(t)
    }

    /// `sup_t |b(t)|`
    pub fn amplitude_max(&self) -> f64 {
        self.factor() * self.f.sup_deriv()
    }

    /// `∫_a^b b(t) dt`
    pub fn amplitude_integral(&self, a: f64, b: f64) -> f64 {
        self.factor() * (self.f.eval_clamped(b) - self.f.eval_clamped(a))
    }

    pub fn jump_cut(&self) -> f64 {
        match self.regime {
            Regime::SmallShift { .. } => 1.0,
            Regime::MiddleShift { r, .. } => r,
        }
    }

    /// Multiplier of `Λ` in the untilted law.
    pub fn intensity(&self) -> f64 {
        match self.regime {
            Regime::SmallShift { rho, .. } => rho,
            Regime::MiddleShift { .. } => 1.0,
        }
    }

    pub fn keeps_big_jumps(&self) -> bool {
        matches!(self.regime, Regime::SmallShift { .. })
    }

    pub fn eps_cutoff(&self) -> f64 {
        self.jump_cut() * EPS_FRACTION
    }

    /// Scale `s` such that the tilted process has mean `s·f(t)`:
    /// `c r^{1−α}` (middle) or `λρ^{1/α}` (small).
    pub fn shift_scale(&self) -> f64 {
        let a = self.params.alpha();
        match self.regime {
            Regime::SmallShift { lambda, rho } => lambda * rho.powf(1.0 / a),
            Regime::MiddleShift { c, r } => c * r.powf(1.0 - a),
        }
    }
}

/// `θ(x, t) = log(1 + b(t)x/cut)` on `|x| < cut`, zero outside.
pub fn theta(tilt: &TiltSpec, x: f64, t: f64) -> Result<f64> {
    let cut = tilt.jump_cut();
    if x.abs() >= cut {
        return Ok(0.0);
    }
    let u = tilt.amplitude_at(t) * x / cut;
    if !(u > -1.0) {
        return Err(Error::InvalidTilt {
            amplitude: tilt.amplitude_max(),
        });
    }
    Ok(u.ln_1p())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Validity {
    pub pass: bool,
    /// `1 − κ(2−α)/2·‖f′‖`
    pub margin: f64,
}

pub fn validity_check(tilt: &TiltSpec) -> Validity {
    let margin = 1.0 - tilt.amplitude_max();
    Validity {
        pass: margin > 0.0 && tilt.validate().is_ok(),
        margin,
    }
}

fn require_valid(tilt: &TiltSpec) -> Result<()> {
    tilt.validate()?;
    let v = validity_check(tilt);
    if !v.pass {
        return Err(Error::InvalidTilt {
            amplitude: tilt.amplitude_max(),
        });
    }
    Ok(())
}

/// `intensity·∫₀¹∫_{|x|<cut} Ψ(b(t)x/cut)|x|^{−1−α}dx dt`
/// `= intensity·(2/cut^α)·Σ_k m_{2k}/(2k(2k−1)(2k−α))`, `m_{2k} = ∫₀¹ b^{2k}`.
pub fn deterministic_exponent(tilt: &TiltSpec) -> Result<f64> {
    Ok(deterministic_exponent_detail(tilt)?.value)
}

pub fn deterministic_exponent_detail(tilt: &TiltSpec) -> Result<SeriesSum> {
    require_valid(tilt)?;
    let alpha = tilt.params.alpha();
    let q = tilt.amplitude_max().powi(2);
    if q == 0.0 {
        return Ok(SeriesSum {
            value: 0.0,
            terms: 0,
            tail_bound: 0.0,
        });
    }
    let factor = tilt.factor();
    // (b_seg², Δt, b_seg^{2k}Δt)
    let mut segs: Vec<(f64, f64)> = tilt
        .f
        .segments()
        .map(|(a, b, s)| ((factor * s).powi(2), b - a))
        .filter(|(b2, _)| *b2 > 0.0)
        .collect();
    let prefactor = tilt.intensity() * 2.0 * tilt.jump_cut().powf(-alpha);
    let mut sum = 0.0;
    let mut k = 0usize;
    let tail = loop {
        k += 1;
        for s in segs.iter_mut() {
            s.1 *= s.0;
        }
        let m: f64 = segs.iter().map(|s| s.1).sum();
        let k2 = 2.0 * k as f64;
        let term = m / (k2 * (k2 - 1.0) * (k2 - alpha));
        sum += term;
        // m_{2k+2} ≤ q·m_{2k} and the denominators increase
        let tail = term * q / (1.0 - q);
        if tail < 1e-12 * sum || term == 0.0 {
            break tail;
        }
    };
    Ok(SeriesSum {
        value: prefactor * sum,
        terms: k,
        tail_bound: prefactor * tail,
    })
}

/// Leading term `intensity·(2−α)/(4·cut^α)·∫₀¹(κf′)²`; for the small shift
/// this is `(2−α)/4·λ²ρ^{(2−α)/α}∫f′²`.
pub fn deterministic_exponent_leading(tilt: &TiltSpec) -> f64 {
    let a = tilt.params.alpha();
    tilt.intensity() * (2.0 - a) / 4.0 * tilt.jump_cut().powf(-a) * (tilt.kappa() * tilt.f.l2_deriv()).powi(2)
}

/// `log(dP_untilted/dP_tilted)` on a jump-resolved path of the tilted law.
///
/// Recorded jumps contribute `−Σθ`. The Brownian proxy of the jumps below the
/// cutoff is, on step `i`, Gaussian with variance `s_i² = intensity·v_ε·Δt_i`
/// and mean `β̄_i s_i²` under the tilt (zero without it), where `β̄_i` is the
/// step average of `b/cut`. Its likelihood ratio gives
/// `Σ_i (−β̄_i C_i + ½β̄_i² s_i²)`, `C_i` being the step increment net of
/// jumps. `∫(e^θ − 1)Λ` vanishes by oddness and is left out.
pub fn log_weight(tilt: &TiltSpec, path: &SimPath) -> Result<f64> {
    if path.mode != PathMode::JumpResolved {
        return Err(Error::MissingJumpRecord);
    }
    let mut lw = 0.0;
    for j in &path.jumps {
        lw -= theta(tilt, j.size, j.time)?;
    }
    if path.gaussian_small_jumps && tilt.amplitude_max() > 0.0 {
        let inner = LevyDensity::truncated_stable(tilt.params.alpha(), tilt.jump_cut());
        let v = tilt.intensity() * inner.variance_below(path.eps_cutoff);
        let cut = tilt.jump_cut();
        let mut next_jump = 0;
        for (w, x) in path.times.windows(2).zip(path.values.windows(2)) {
            let (a, b) = (w[0], w[1]);
            let dt = b - a;
            if dt <= 0.0 {
                continue;
            }
            let mut jumps = 0.0;
            while next_jump < path.jumps.len() && path.jumps[next_jump].time <= b {
                jumps += path.jumps[next_jump].size;
                next_jump += 1;
            }
            let c = x[1] - x[0] - jumps;
            let beta = tilt.amplitude_integral(a, b) / (cut * dt);
            lw += -beta * c + 0.5 * beta * beta * v * dt;
        }
    }
    Ok(lw)
}

/// Numerical `|∫₀¹∫_{ε<|x|<cut}(e^θ − 1)Λ(dx)dt|`; zero up to rounding.
pub fn compensator_check(tilt: &TiltSpec) -> Result<f64> {
    require_valid(tilt)?;
    let alpha = tilt.params.alpha();
    let cut = tilt.jump_cut();
    let eps = tilt.eps_cutoff();
    let factor = tilt.factor();
    let mut total = 0.0;
    for (a, b, s) in tilt.f.segments() {
        let amp = factor * s;
        let g = |x: f64| {
            let u = amp * x / cut;
            (u.ln_1p().exp_m1() + (-u).ln_1p().exp_m1()) * x.powf(-1.0 - alpha)
        };
        total += (b - a) * quad::integrate(g, eps, cut, 1e-14, 1e-10).0;
    }
    Ok((tilt.intensity() * total).abs())
}

/// Tilts used by the weight diagnostics: identity, tent, a rough shift and a
/// small-shift tilt, at `α = 1.5`.
pub fn default_battery() -> Vec<TiltSpec> {
    let p = AlphaStableParams::new(1.5).expect("valid alpha");
    let rough = ShiftFunction::new(vec![
        (0.0, 0.0),
        (0.15, 0.12),
        (0.3, -0.03),
        (0.45, 0.1),
        (0.6, 0.0),
        (0.75, 0.15),
        (0.9, 0.06),
        (1.0, 0.14),
    ])
    .expect("valid knots");
    vec![
        TiltSpec::middle(p, ShiftFunction::identity(), 0.2, 0.8).unwrap(),
        TiltSpec::middle(p, ShiftFunction::tent(), 1.0, 1.0).unwrap(),
        TiltSpec::middle(p, rough, 2.0, 0.6).unwrap(),
        TiltSpec::small_default_rho(p, ShiftFunction::identity(), 0.5, 0.5).unwrap(),
    ]
}
