//! Seeded path samplers on `[0, 1]`.
//!
//! Two representations are produced. Increment mode draws exact stable
//! increments on a uniform grid. Jump-resolved mode draws every jump above a
//! cutoff `ε` from its Poisson measure, replaces the jumps below `ε` by a
//! Brownian proxy with the same variance, and records each jump with the path
//! value just before it.

use std::f64::consts::FRAC_PI_2;
use std::io::{self, Write};

use rand::distr::Open01;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::Serialize;

use crate::error::{invalid, Result};
use crate::model::{AlphaStableParams, CenteredTriplet, LevyDensity, ShiftFunction, TimeDensity};
use crate::rng::{map_streams, RngStream};
use crate::tilt::{self, TiltSpec};

pub type PathRng = ChaCha8Rng;

pub const DEFAULT_STEPS: usize = 2048;

/// Cutoff used by the truncated and tilted samplers, relative to the jump cut.
pub const EPS_FRACTION: f64 = 1.0 / 50.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PathMode {
    Increment,
    JumpResolved,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Jump {
    pub time: f64,
    pub size: f64,
    /// Path value immediately before the jump.
    pub pre: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimPath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub jumps: Vec<Jump>,
    /// `∞` in increment mode.
    pub eps_cutoff: f64,
    pub mode: PathMode,
    /// Whether jumps below the cutoff were replaced by a Brownian proxy.
    pub gaussian_small_jumps: bool,
}

impl SimPath {
    pub fn n_steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn terminal(&self) -> f64 {
        *self.values.last().unwrap()
    }

    pub fn max_abs_jump(&self) -> f64 {
        self.jumps.iter().fold(0.0, |m, j| m.max(j.size.abs()))
    }

    /// Sum of the recorded jumps in `(a, b]`.
    pub fn jumps_between(&self, a: f64, b: f64) -> f64 {
        let lo = self.jumps.partition_point(|j| j.time <= a);
        let hi = self.jumps.partition_point(|j| j.time <= b);
        self.jumps[lo..hi].iter().map(|j| j.size).sum()
    }
}

pub fn uniform_grid(n_steps: usize) -> Vec<f64> {
    (0..=n_steps).map(|i| i as f64 / n_steps as f64).collect()
}

/// Standard symmetric stable variate with `E e^{iuS} = e^{−|u|^α}`
/// (Chambers–Mallows–Stuck).
pub fn standard_stable<R: Rng + ?Sized>(alpha: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.sample::<f64, _>(Open01) * 2.0 * FRAC_PI_2 - FRAC_PI_2;
    let w: f64 = rng.sample(Exp1);
    let a = (alpha * u).sin() / u.cos().powf(1.0 / alpha);
    let b = (((1.0 - alpha) * u).cos() / w).powf((1.0 - alpha) / alpha);
    a * b
}

/// Exact increments on a uniform grid, characteristic exponent `c_α Δt |u|^α`.
pub fn sample_stable_path(params: &AlphaStableParams, n_steps: usize, rng: &mut PathRng) -> Result<SimPath> {
    if n_steps == 0 {
        return Err(invalid("n_steps", "at least one step"));
    }
    let alpha = params.alpha();
    let dt = 1.0 / n_steps as f64;
    let scale = params.unit_scale() * dt.powf(1.0 / alpha);
    let mut values = Vec::with_capacity(n_steps + 1);
    let mut x = 0.0;
    values.push(x);
    for _ in 0..n_steps {
        x += scale * standard_stable(alpha, rng);
        values.push(x);
    }
    Ok(SimPath {
        times: uniform_grid(n_steps),
        values,
        jumps: Vec::new(),
        eps_cutoff: f64::INFINITY,
        mode: PathMode::Increment,
        gaussian_small_jumps: false,
    })
}

/// Observation emitted by the walker, in time order.
#[derive(Debug, Clone, Copy)]
pub(crate) enum Obs {
    Grid { t: f64, x: f64 },
    Jump { t: f64, pre: f64, size: f64 },
}

type DrawFn<'a> = dyn Fn(&mut PathRng, f64) -> Option<f64> + Sync + 'a;
type SpanFn<'a> = dyn Fn(f64, f64) -> f64 + Sync + 'a;

/// Poisson stream of candidate jumps at constant `rate`; `draw` returns the
/// jump size or `None` when the candidate is thinned away.
pub(crate) struct JumpSource<'a> {
    pub rate: f64,
    pub draw: Box<DrawFn<'a>>,
}

/// Brownian proxy over `[a, b]`: Gaussian with variance `var(a, b)` plus `drift(a, b)`.
pub(crate) struct Continuous<'a> {
    pub var: Box<SpanFn<'a>>,
    pub drift: Box<SpanFn<'a>>,
}

impl Continuous<'_> {
    fn step(&self, rng: &mut PathRng, a: f64, b: f64) -> f64 {
        let mut dx = (self.drift)(a, b);
        let v = (self.var)(a, b);
        if v > 0.0 {
            let z: f64 = rng.sample(StandardNormal);
            dx += v.sqrt() * z;
        }
        dx
    }
}

fn next_arrival(rng: &mut PathRng, t: f64, rate: f64) -> f64 {
    if rate > 0.0 {
        let e: f64 = rng.sample(Exp1);
        t + e / rate
    } else {
        f64::INFINITY
    }
}

/// Runs one jump-resolved path over `grid`, splitting each step at jump times.
/// Stops as soon as `obs` returns `false`.
pub(crate) fn walk(
    grid: &[f64],
    sources: &[JumpSource<'_>],
    cont: &Continuous<'_>,
    rng: &mut PathRng,
    mut obs: impl FnMut(Obs) -> bool,
) {
    let mut t = grid[0];
    let mut x = 0.0;
    let mut next: Vec<f64> = sources.iter().map(|s| next_arrival(rng, t, s.rate)).collect();
    if !obs(Obs::Grid { t, x }) {
        return;
    }
    for &end in &grid[1..] {
        loop {
            let (j, tj) = next
                .iter()
                .enumerate()
                .fold((usize::MAX, f64::INFINITY), |m, (i, &v)| if v < m.1 { (i, v) } else { m });
            if tj > end {
                break;
            }
            x += cont.step(rng, t, tj);
            t = tj;
            next[j] = next_arrival(rng, tj, sources[j].rate);
            if let Some(size) = (sources[j].draw)(rng, tj) {
                if !obs(Obs::Jump { t, pre: x, size }) {
                    return;
                }
                x += size;
            }
        }
        x += cont.step(rng, t, end);
        t = end;
        if !obs(Obs::Grid { t, x }) {
            return;
        }
    }
}

fn collect_path(
    grid: Vec<f64>,
    sources: &[JumpSource<'_>],
    cont: &Continuous<'_>,
    rng: &mut PathRng,
    eps: f64,
    gaussian: bool,
) -> SimPath {
    let mut values = Vec::with_capacity(grid.len());
    let mut jumps = Vec::new();
    walk(&grid, sources, cont, rng, |o| {
        match o {
            Obs::Grid { x, .. } => values.push(x),
            Obs::Jump { t, pre, size } => jumps.push(Jump { time: t, size, pre }),
        }
        true
    });
    SimPath {
        times: grid,
        values,
        jumps,
        eps_cutoff: eps,
        mode: PathMode::JumpResolved,
        gaussian_small_jumps: gaussian,
    }
}

fn sign_and_uniform(rng: &mut PathRng) -> (bool, f64) {
    let negative: bool = rng.random();
    let u: f64 = rng.random();
    (negative, u)
}

/// Jump sources and Brownian proxy of a centered triplet, with the big jumps
/// compensated so that the path is a martingale plus the drift `γ`.
fn additive_parts<'a>(
    triplet: &'a CenteredTriplet,
    eps: f64,
    gaussian_refinement: bool,
) -> (Vec<JumpSource<'a>>, Continuous<'a>) {
    let levy = triplet.levy;
    let mu = &triplet.time_weight;
    let mu_max = mu.max();
    let rate = mu_max * levy.mass_above(eps);
    let constant = matches!(mu, TimeDensity::Constant(_));
    let source = JumpSource {
        rate,
        draw: Box::new(move |rng, t| {
            let accept = constant || {
                let u: f64 = rng.random();
                u * mu_max < mu.value(t)
            };
            let (negative, u) = sign_and_uniform(rng);
            accept.then(|| levy.jump_from_uniform(eps, u, negative))
        }),
    };
    let small_var = if gaussian_refinement { levy.variance_below(eps) } else { 0.0 };
    let compensator = levy.mean_above(eps);
    let cont = Continuous {
        var: Box::new(move |a, b| small_var * (mu.cumulative(b) - mu.cumulative(a))),
        drift: Box::new(move |a, b| {
            triplet.drift.integral(a, b) - compensator * (mu.cumulative(b) - mu.cumulative(a))
        }),
    };
    (vec![source], cont)
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0) {
        return Err(invalid("eps_cutoff", "must be positive"));
    }
    Ok(())
}

/// Jump-resolved additive process with centered triplet `(0, ℓ(x)μ(t)dxdt, γ)`.
pub fn sample_additive_path(
    triplet: &CenteredTriplet,
    eps: f64,
    gaussian_refinement: bool,
    n_steps: usize,
    rng: &mut PathRng,
) -> Result<SimPath> {
    check_eps(eps)?;
    triplet.validate()?;
    if n_steps == 0 {
        return Err(invalid("n_steps", "at least one step"));
    }
    let (sources, cont) = additive_parts(triplet, eps, gaussian_refinement);
    Ok(collect_path(uniform_grid(n_steps), &sources, &cont, rng, eps, gaussian_refinement))
}

/// The stable process with every jump above `eps_cutoff` resolved.
pub fn sample_jump_path(
    params: &AlphaStableParams,
    eps_cutoff: f64,
    gaussian_refinement: bool,
    n_steps: usize,
    rng: &mut PathRng,
) -> Result<SimPath> {
    let triplet = CenteredTriplet::levy_process(LevyDensity::stable(params.alpha()));
    sample_additive_path(&triplet, eps_cutoff, gaussian_refinement, n_steps, rng)
}

/// The process with Lévy density `1_{|x|<r}|x|^{−1−α}`, cutoff `r/50`.
pub fn sample_truncated_path(params: &AlphaStableParams, r: f64, n_steps: usize, rng: &mut PathRng) -> Result<SimPath> {
    sample_truncated_path_eps(params, r, r * EPS_FRACTION, n_steps, rng)
}

pub fn sample_truncated_path_eps(
    params: &AlphaStableParams,
    r: f64,
    eps: f64,
    n_steps: usize,
    rng: &mut PathRng,
) -> Result<SimPath> {
    if !(r > 0.0) {
        return Err(invalid("r", "must be positive"));
    }
    let triplet = CenteredTriplet::levy_process(LevyDensity::truncated_stable(params.alpha(), r));
    sample_additive_path(&triplet, eps, true, n_steps, rng)
}

/// Jump sources and proxy of the tilted law: Lévy measure
/// `(1 + b(t)x/cut)·intensity·Λ` on `|x| < cut`, untilted `intensity·Λ` beyond.
pub(crate) fn tilted_parts(tilt: &TiltSpec, eps: f64) -> (Vec<JumpSource<'_>>, Continuous<'_>) {
    let alpha = tilt.params.alpha();
    let cut = tilt.jump_cut();
    let intensity = tilt.intensity();
    let b_max = tilt.amplitude_max();
    let inner = LevyDensity::truncated_stable(alpha, cut);
    let mut sources = vec![JumpSource {
        rate: (1.0 + b_max) * intensity * inner.mass_above(eps),
        draw: Box::new(move |rng, t| {
            let (negative, u) = sign_and_uniform(rng);
            let x = inner.jump_from_uniform(eps, u, negative);
            if b_max == 0.0 {
                return Some(x);
            }
            let accept: f64 = rng.random();
            let keep = 1.0 + tilt.amplitude_at(t) * x / cut;
            (accept * (1.0 + b_max) < keep).then_some(x)
        }),
    }];
    if cut.is_finite() && tilt.keeps_big_jumps() {
        let outer = LevyDensity::stable(alpha);
        sources.push(JumpSource {
            rate: intensity * outer.mass_above(cut),
            draw: Box::new(move |rng, _| {
                let (negative, u) = sign_and_uniform(rng);
                Some(outer.jump_from_uniform(cut, u, negative))
            }),
        });
    }
    let v_eps = intensity * inner.variance_below(eps);
    let cont = Continuous {
        var: Box::new(move |a, b| v_eps * (b - a)),
        drift: Box::new(move |a, b| v_eps / cut * tilt.amplitude_integral(a, b)),
    };
    (sources, cont)
}

/// A path of the tilted law together with `log(dP_untilted / dP_tilted)` on it.
pub fn sample_tilted_path(tilt: &TiltSpec, n_steps: usize, rng: &mut PathRng) -> Result<(SimPath, f64)> {
    let v = tilt::validity_check(tilt);
    if !v.pass {
        return Err(crate::error::Error::InvalidTilt { amplitude: 1.0 - v.margin });
    }
    if n_steps == 0 {
        return Err(invalid("n_steps", "at least one step"));
    }
    let eps = tilt.eps_cutoff();
    let (sources, cont) = tilted_parts(tilt, eps);
    let path = collect_path(uniform_grid(n_steps), &sources, &cont, rng, eps, true);
    let w = tilt::log_weight(tilt, &path)?;
    Ok((path, w))
}

/// Inverse of a nondecreasing clock on `[0, 1]` by bisection.
fn invert_clock(mu: &TimeDensity, s: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if mu.clock(mid) < s {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// `η(t) = ζ(φ(t))` where `ζ` is the homogeneous process with Lévy measure
/// `(∫μ)·ℓ` and `φ(t) = ∫₀ᵗμ / ∫₀¹μ`. The cutoff is `min(cut, 1)/50`.
pub fn time_change_sample(mu: &TimeDensity, levy: &LevyDensity, n_steps: usize, rng: &mut PathRng) -> Result<SimPath> {
    mu.validate()?;
    if n_steps == 0 {
        return Err(invalid("n_steps", "at least one step"));
    }
    let eps = levy.cut().min(1.0) * EPS_FRACTION;
    let homogeneous = CenteredTriplet {
        sigma2: 0.0,
        levy: *levy,
        time_weight: TimeDensity::Constant(mu.total()),
        drift: Default::default(),
    };
    homogeneous.validate()?;
    let times = uniform_grid(n_steps);
    let clock_grid: Vec<f64> = times.iter().map(|&t| mu.clock(t)).collect();
    // a flat clock repeats grid points; the walker handles zero-length steps
    let (sources, cont) = additive_parts(&homogeneous, eps, true);
    let zeta = collect_path(clock_grid, &sources, &cont, rng, eps, true);
    let jumps = zeta
        .jumps
        .iter()
        .map(|j| Jump {
            time: invert_clock(mu, j.time),
            ..*j
        })
        .collect();
    Ok(SimPath {
        times,
        values: zeta.values,
        jumps,
        eps_cutoff: eps,
        mode: PathMode::JumpResolved,
        gaussian_small_jumps: true,
    })
}

/// `max |X(t) − λf(t)|` over grid points and both sides of every recorded jump.
pub fn sup_distance(path: &SimPath, f: &ShiftFunction, lambda: f64) -> f64 {
    let mut m: f64 = 0.0;
    for (&t, &x) in path.times.iter().zip(&path.values) {
        m = m.max((x - lambda * f.eval_clamped(t)).abs());
    }
    for j in &path.jumps {
        let c = lambda * f.eval_clamped(j.time);
        m = m.max((j.pre - c).abs()).max((j.pre + j.size - c).abs());
    }
    m
}

/// A centre `λf` for the shared-path sup engine.
#[derive(Debug, Clone, PartialEq)]
pub struct Center {
    pub f: ShiftFunction,
    pub lambda: f64,
}

impl Center {
    pub fn new(f: ShiftFunction, lambda: f64) -> Self {
        Self { f, lambda }
    }

    pub fn origin() -> Self {
        Self::new(ShiftFunction::zero(), 0.0)
    }

    fn at(&self, t: f64) -> f64 {
        if self.lambda == 0.0 {
            0.0
        } else {
            self.lambda * self.f.eval_clamped(t)
        }
    }
}

/// Path sources accepted by the sup engine.
#[derive(Debug, Clone, Copy)]
pub enum PathLaw<'a> {
    /// The stable process, jumps above `eps` resolved, Brownian proxy below.
    Stable { params: AlphaStableParams, eps: f64 },
    /// The tilted law of `tilt`; rows carry the path log-weight.
    Tilted(&'a TiltSpec),
}

/// Per-path result of the sup engine.
#[derive(Debug, Clone, PartialEq)]
pub struct SupRow {
    /// `‖X − λf‖` per centre. Once every centre exceeds `stop_above` the path is
    /// abandoned, so entries above that level are lower bounds only.
    pub dist: Vec<f64>,
    pub max_jump: f64,
    pub log_weight: f64,
}

/// Sup distances of `n_paths` paths to every centre, path `i` drawn from
/// stream `(seed, i)`. Results are in path order for any worker count.
pub fn sup_distance_batch(
    law: PathLaw<'_>,
    centers: &[Center],
    n_paths: usize,
    n_steps: usize,
    seed: u64,
    stop_above: f64,
) -> Result<Vec<SupRow>> {
    if centers.is_empty() {
        return Err(invalid("centers", "at least one centre"));
    }
    if n_steps == 0 {
        return Err(invalid("n_steps", "at least one step"));
    }
    let grid = uniform_grid(n_steps);
    let triplet;
    let (sources, cont) = match law {
        PathLaw::Stable { params, eps } => {
            check_eps(eps)?;
            triplet = CenteredTriplet::levy_process(LevyDensity::stable(params.alpha()));
            additive_parts(&triplet, eps, true)
        }
        PathLaw::Tilted(tilt) => {
            let v = tilt::validity_check(tilt);
            if !v.pass {
                return Err(crate::error::Error::InvalidTilt { amplitude: 1.0 - v.margin });
            }
            if stop_above.is_finite() {
                return Err(invalid("stop_above", "tilted paths need the full record for their weight"));
            }
            tilted_parts(tilt, tilt.eps_cutoff())
        }
    };
    let sources = &sources;
    let cont = &cont;
    let grid = &grid;
    let rows = map_streams(seed, 0, n_paths, |stream: RngStream| {
        let mut rng = stream.rng();
        let mut dist = vec![0.0_f64; centers.len()];
        let mut max_jump: f64 = 0.0;
        let mut record = matches!(law, PathLaw::Tilted(_)).then(|| Vec::with_capacity(grid.len()));
        let mut jumps = Vec::new();
        let update = |t: f64, x: f64, dist: &mut [f64]| {
            let mut all_out = true;
            for (d, c) in dist.iter_mut().zip(centers) {
                *d = d.max((x - c.at(t)).abs());
                all_out &= *d > stop_above;
            }
            !all_out
        };
        walk(grid, sources, cont, &mut rng, |o| match o {
            Obs::Grid { t, x } => {
                if let Some(v) = record.as_mut() {
                    v.push(x);
                }
                update(t, x, &mut dist)
            }
            Obs::Jump { t, pre, size } => {
                max_jump = max_jump.max(size.abs());
                if record.is_some() {
                    jumps.push(Jump { time: t, size, pre });
                }
                update(t, pre, &mut dist) && update(t, pre + size, &mut dist)
            }
        });
        let log_weight = match (law, record) {
            (PathLaw::Tilted(tilt), Some(values)) => {
                let path = SimPath {
                    times: grid.clone(),
                    values,
                    jumps,
                    eps_cutoff: tilt.eps_cutoff(),
                    mode: PathMode::JumpResolved,
                    gaussian_small_jumps: true,
                };
                tilt::log_weight(tilt, &path).expect("jump-resolved path")
            }
            _ => 0.0,
        };
        SupRow {
            dist,
            max_jump,
            log_weight,
        }
    });
    Ok(rows)
}

pub fn write_path_csv<W: Write>(path: &SimPath, mut w: W) -> io::Result<()> {
    writeln!(w, "t,x")?;
    for (t, x) in path.times.iter().zip(&path.values) {
        writeln!(w, "{t},{x}")?;
    }
    Ok(())
}

pub fn write_jumps_csv<W: Write>(path: &SimPath, mut w: W) -> io::Result<()> {
    writeln!(w, "t,size")?;
    for j in &path.jumps {
        writeln!(w, "{},{}", j.time, j.size)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats;
    use rand::SeedableRng;

    fn params() -> AlphaStableParams {
        AlphaStableParams::new(1.5).unwrap()
    }

    #[test]
    fn stable_path_shape_and_determinism() {
        let p = params();
        let a = sample_stable_path(&p, 4, &mut RngStream::new(3, 0).rng()).unwrap();
        assert_eq!(a.values.len(), 5);
        assert_eq!(a.values[0], 0.0);
        assert_eq!(a.mode, PathMode::Increment);
        let b = sample_stable_path(&p, 4, &mut RngStream::new(3, 0).rng()).unwrap();
        assert_eq!(a, b);
        assert!(sample_stable_path(&p, 0, &mut RngStream::new(3, 0).rng()).is_err());
    }

    #[test]
    fn empirical_characteristic_function() {
        // E cos(X(1)) = exp(−c_α) for the symbol c_α|u|^α
        let p = params();
        let mut rng = PathRng::seed_from_u64(17);
        let n = 100_000;
        let xs: Vec<f64> = (0..n)
            .map(|_| (p.unit_scale() * standard_stable(p.alpha(), &mut rng)).cos())
            .collect();
        let e = crate::model::Estimate::from_samples(&xs, false);
        let target = (-p.c_alpha()).exp();
        assert!((e.value - target).abs() < 3.0 * e.stderr, "{} vs {target}", e.value);
    }

    #[test]
    fn jump_counts_are_poisson() {
        let p = params();
        let eps = 0.3;
        let mean = p.tail_mass(eps);
        let counts: Vec<u64> = (0..10_000)
            .map(|i| {
                let path = sample_jump_path(&p, eps, false, 16, &mut RngStream::new(5, i).rng()).unwrap();
                assert!(path.jumps.iter().all(|j| j.size.abs() > eps && j.time > 0.0 && j.time <= 1.0));
                path.jumps.len() as u64
            })
            .collect();
        let e = crate::model::Estimate::from_samples(&counts.iter().map(|c| *c as f64).collect::<Vec<_>>(), false);
        assert!((e.value - mean).abs() < 3.0 * e.stderr);
        assert!(stats::poisson_gof_p_value(&counts, mean) > 0.01);
    }

    #[test]
    fn truncated_paths_respect_cut_and_are_centered() {
        let p = params();
        let r = 0.8;
        let ends: Vec<f64> = (0..10_000)
            .map(|i| {
                let path = sample_truncated_path(&p, r, 64, &mut RngStream::new(9, i).rng()).unwrap();
                assert!(path.jumps.iter().all(|j| j.size.abs() < r));
                assert_eq!(path.values[0], 0.0);
                path.terminal()
            })
            .collect();
        let e = crate::model::Estimate::from_samples(&ends, false);
        assert!(e.value.abs() < 3.0 * e.stderr);
        // variance of X(1) = ∫_{|x|<r} x² Λ(dx)
        let var = ends.iter().map(|x| x * x).sum::<f64>() / ends.len() as f64;
        let target = p.small_jump_variance(r);
        assert!((var / target - 1.0).abs() < 0.05, "{var} vs {target}");
    }

    #[test]
    fn cutoff_at_the_cut_leaves_only_the_proxy() {
        let p = params();
        let path = sample_truncated_path_eps(&p, 0.5, 0.5, 32, &mut RngStream::new(1, 1).rng()).unwrap();
        assert!(path.jumps.is_empty());
        assert_eq!(path.values[0], 0.0);
    }

    #[test]
    fn dropped_small_jumps_remove_their_variance() {
        // without the proxy, Var X(1) = ∫_{ε<|x|<cut} x² Λ
        let a = 1.5;
        let p = params();
        let (eps, cut) = (0.05, 1.0);
        let ends: Vec<f64> = (0..20_000)
            .map(|i| {
                let triplet = CenteredTriplet::levy_process(LevyDensity::truncated_stable(a, cut));
                sample_additive_path(&triplet, eps, false, 8, &mut RngStream::new(2, i).rng())
                    .unwrap()
                    .terminal()
            })
            .collect();
        let var = ends.iter().map(|x| x * x).sum::<f64>() / ends.len() as f64;
        let target = p.small_jump_variance(cut) - p.small_jump_variance(eps);
        assert!((var / target - 1.0).abs() < 0.05, "{var} vs {target}");
    }

    #[test]
    fn symmetry_of_terminal_value() {
        let p = params();
        let xs: Vec<f64> = (0..10_000)
            .map(|i| sample_stable_path(&p, 1, &mut RngStream::new(21, i).rng()).unwrap().terminal())
            .collect();
        let neg: Vec<f64> = (0..10_000)
            .map(|i| -sample_stable_path(&p, 1, &mut RngStream::new(22, i).rng()).unwrap().terminal())
            .collect();
        assert!(stats::ks_two_sample(&xs, &neg).p_value > 0.01);
    }

    #[test]
    fn self_similarity_of_marginals() {
        // X on [0, T] built from T independent unit-horizon paths
        let p = params();
        let steps = 4;
        for (k, t_big) in [2usize, 8].into_iter().enumerate() {
            for (j, s) in [0.25, 0.5, 1.0].into_iter().enumerate() {
                let tag = (k * 3 + j) as u64;
                let idx = (s * steps as f64) as usize;
                let base: Vec<f64> = (0..10_000)
                    .map(|i| sample_stable_path(&p, steps, &mut RngStream::new(100 + tag, i).rng()).unwrap().values[idx])
                    .collect();
                let total_steps = t_big * idx;
                let scaled: Vec<f64> = (0..10_000u64)
                    .map(|i| {
                        let mut rng = RngStream::new(200 + tag, i).rng();
                        let mut x = 0.0;
                        let mut left = total_steps;
                        while left > 0 {
                            let unit = sample_stable_path(&p, steps, &mut rng).unwrap();
                            let take = left.min(steps);
                            x += unit.values[take];
                            left -= take;
                        }
                        x / (t_big as f64).powf(1.0 / p.alpha())
                    })
                    .collect();
                let ks = stats::ks_two_sample(&base, &scaled);
                assert!(ks.p_value > 0.01, "T={t_big} s={s}: {ks:?}");
            }
        }
    }

    #[test]
    fn sup_distance_examples() {
        let zero_path = SimPath {
            times: uniform_grid(4),
            values: vec![0.0; 5],
            jumps: vec![],
            eps_cutoff: f64::INFINITY,
            mode: PathMode::Increment,
            gaussian_small_jumps: false,
        };
        assert_eq!(sup_distance(&zero_path, &ShiftFunction::identity(), 2.0), 2.0);
        assert_eq!(sup_distance(&zero_path, &ShiftFunction::tent(), 1.0), 1.0);
        let p = sample_stable_path(&params(), 16, &mut RngStream::new(1, 0).rng()).unwrap();
        let m = p.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert_eq!(sup_distance(&p, &ShiftFunction::zero(), 0.0), m);
    }

    #[test]
    fn sup_sees_jump_sides() {
        let path = SimPath {
            times: uniform_grid(2),
            values: vec![0.0, 0.0, 0.0],
            jumps: vec![
                Jump { time: 0.2, size: 3.0, pre: 0.0 },
                Jump { time: 0.3, size: -3.0, pre: 3.0 },
            ],
            eps_cutoff: 0.1,
            mode: PathMode::JumpResolved,
            gaussian_small_jumps: false,
        };
        assert_eq!(sup_distance(&path, &ShiftFunction::zero(), 0.0), 3.0);
    }

    #[test]
    fn identity_time_change_matches_homogeneous_sampler() {
        let levy = LevyDensity::truncated_stable(1.5, 1.0);
        let a = time_change_sample(&TimeDensity::Constant(1.0), &levy, 32, &mut RngStream::new(4, 2).rng()).unwrap();
        let triplet = CenteredTriplet::levy_process(levy);
        let b = sample_additive_path(&triplet, 1.0 * EPS_FRACTION, true, 32, &mut RngStream::new(4, 2).rng()).unwrap();
        assert_eq!(a.values, b.values);
        assert_eq!(a.jumps.len(), b.jumps.len());
    }

    #[test]
    fn time_change_maps_grid_through_clock() {
        // μ(t) = 2t: φ(t) = t², so η(t_i) = ζ(t_i²) and jump times are √ of ζ's
        let levy = LevyDensity::truncated_stable(1.5, 1.0);
        let mu = TimeDensity::Affine { intercept: 0.0, slope: 2.0 };
        let eta = time_change_sample(&mu, &levy, 8, &mut RngStream::new(8, 0).rng()).unwrap();
        let homogeneous = CenteredTriplet {
            sigma2: 0.0,
            levy,
            time_weight: TimeDensity::Constant(1.0),
            drift: Default::default(),
        };
        let (sources, cont) = additive_parts(&homogeneous, EPS_FRACTION, true);
        let squared: Vec<f64> = uniform_grid(8).iter().map(|t| t * t).collect();
        let zeta = collect_path(squared, &sources, &cont, &mut RngStream::new(8, 0).rng(), EPS_FRACTION, true);
        assert_eq!(eta.values, zeta.values);
        for (a, b) in eta.jumps.iter().zip(&zeta.jumps) {
            assert!((a.time - b.time.sqrt()).abs() < 1e-12);
        }
        assert!(time_change_sample(&TimeDensity::Constant(-1.0), &levy, 8, &mut RngStream::new(8, 0).rng()).is_err());
    }

    #[test]
    fn sup_engine_matches_materialized_paths() {
        let p = params();
        let centers = [Center::origin(), Center::new(ShiftFunction::tent(), 0.5)];
        let rows = sup_distance_batch(PathLaw::Stable { params: p, eps: 0.05 }, &centers, 20, 64, 31, f64::INFINITY)
            .unwrap();
        for (i, row) in rows.iter().enumerate() {
            let path = sample_jump_path(&p, 0.05, true, 64, &mut RngStream::new(31, i as u64).rng()).unwrap();
            assert_eq!(row.dist[0], sup_distance(&path, &ShiftFunction::zero(), 0.0));
            assert_eq!(row.dist[1], sup_distance(&path, &ShiftFunction::tent(), 0.5));
            assert_eq!(row.max_jump, path.max_abs_jump());
        }
    }

    #[test]
    fn csv_headers() {
        let path = sample_jump_path(&params(), 0.5, true, 4, &mut RngStream::new(0, 0).rng()).unwrap();
        let mut buf = Vec::new();
        write_path_csv(&path, &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("t,x\n0,0\n"));
        assert_eq!(s.lines().count(), 6);
        let mut buf = Vec::new();
        write_jumps_csv(&path, &mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("t,size\n"));
    }
}
