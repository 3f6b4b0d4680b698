//! Compactly supported spectral window `ĥ(f) = Π_j bump(f_j)` and its real,
//! even inverse transform `h(x) = Π_j g(x_j)`.
//!
//! `g(t) = ∫_{−r}^{r} bump(u) cos(ut) du` is evaluated with the trapezoid rule
//! on a uniform grid of step `s`. Because the integrand extends smoothly and
//! periodically (bump vanishes to all orders at ±r), Poisson summation gives
//! the rule's error exactly as `Σ_{k≠0} g(t − 2πk/s)`, which is negligible as
//! long as `2π/s − t` stays in the super-polynomially decayed region of `g`.
//! Two cached grid levels cover `|t| ≤ T_EXACT`. Row sums bound `|g|` beyond
//! that by a fitted decay envelope `B / (1 + |t|^m)` instead of evaluating it.

use serde::Serialize;

use crate::{Error, Result};

/// Largest `|t|` (for `r = 1`) at which `g` is evaluated directly.
pub const T_EXACT: f64 = 2000.0;

/// `(nodes per unit half-width, largest |t| served)` for `r = 1`.
const LEVELS: [(usize, f64); 2] = [(256, 408.0), (512, 2017.0)];

/// Re-seed the cosine recurrence with an exact `sin_cos` this often.
const RESEED: usize = 32;

/// `exp(−1/(1−u²))` on `(−1, 1)`, zero elsewhere.
pub fn bump(u: f64) -> f64 {
    if u.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - u * u)).exp()
    }
}

/// `B / (1 + |t|^m)` with `|g(t)| ≤ B/(1+|t|^m)` checked on a dense sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayEnvelope {
    pub b: f64,
    pub m: f64,
    /// `|t|` up to which the bound was verified against direct evaluation.
    pub validated_to: f64,
}

impl DecayEnvelope {
    pub fn eval(&self, t: f64) -> f64 {
        self.b / (1.0 + t.abs().powf(self.m))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Window {
    d: usize,
    support_radius: f64,
    /// Bump samples `bump(j/K)`, `j = 0..K`, one table per level.
    #[serde(skip)]
    bump_values: Vec<Vec<f64>>,
    g0: f64,
    h0: f64,
    hhat_max: f64,
    envelope: DecayEnvelope,
}

impl Window {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }

    /// `g(0) = ∫ bump`.
    pub fn g0(&self) -> f64 {
        self.g0
    }

    /// `h(0) = g(0)^d`.
    pub fn h0(&self) -> f64 {
        self.h0
    }

    /// `sup ĥ = bump(0)^d = e^{−d}`.
    pub fn hhat_max(&self) -> f64 {
        self.hhat_max
    }

    pub fn envelope(&self) -> &DecayEnvelope {
        &self.envelope
    }

    /// Largest `|t|` at which `g` is computed rather than bounded.
    pub fn t_exact(&self) -> f64 {
        T_EXACT / self.support_radius
    }

    pub fn hhat(&self, f: &[f64]) -> f64 {
        f.iter().map(|&u| bump(u / self.support_radius)).product()
    }

    pub fn g(&self, t: f64) -> f64 {
        let r = self.support_radius;
        r * self.g_unit(r * t.abs())
    }

    /// Upper bound on `|g(t)|`: exact inside `t_exact()`, envelope outside.
    pub fn g_abs_bound(&self, t: f64) -> f64 {
        if t.abs() <= self.t_exact() {
            self.g(t).abs()
        } else {
            self.envelope.eval(t)
        }
    }

    pub fn h(&self, x: &[f64]) -> f64 {
        x.iter().map(|&t| self.g(t)).product()
    }

    /// Upper bound on `|h(x)|`, using the envelope for coordinates beyond `t_exact()`.
    pub fn h_abs_bound(&self, x: &[f64]) -> f64 {
        x.iter().map(|&t| self.g_abs_bound(t)).product()
    }

    /// `g₁(t) = ∫_{−1}^{1} bump(u) cos(ut) du`, `t ≥ 0`. Past the cached levels
    /// a finer grid is built on the fly, keeping `2πK − t ≥ ALIAS_GAP`.
    fn g_unit(&self, t: f64) -> f64 {
        match LEVELS.iter().position(|&(_, tmax)| t <= tmax) {
            Some(level) => trapezoid(&self.bump_values[level], t),
            None => {
                let k = ((t + ALIAS_GAP) / (2.0 * std::f64::consts::PI)).ceil() as usize;
                let k = k.next_power_of_two();
                let b: Vec<f64> = (0..k).map(|j| bump(j as f64 / k as f64)).collect();
                trapezoid(&b, t)
            }
        }
    }
}

/// Distance from `t` to the first alias `2πK` that keeps the aliasing error
/// below `|g₁(ALIAS_GAP)|` (far under 1e-20).
const ALIAS_GAP: f64 = 1200.0;

/// `s·[b₀ + 2 Σ_j b_j cos(j s t)]` with `s = 1/len(b)`.
fn trapezoid(b: &[f64], t: f64) -> f64 {
    let s = 1.0 / b.len() as f64;
    let theta = s * t;
    let (sin_t, cos_t) = theta.sin_cos();
    let mut acc = 0.0;
    let (mut c, mut sn) = (1.0, 0.0);
    for (j, &bj) in b.iter().enumerate().skip(1) {
        if j % RESEED == 0 {
            let (sj, cj) = (j as f64 * theta).sin_cos();
            c = cj;
            sn = sj;
        } else {
            let next_c = c * cos_t - sn * sin_t;
            sn = sn * cos_t + c * sin_t;
            c = next_c;
        }
        acc += bj * c;
    }
    s * (b[0] + 2.0 * acc)
}

/// Window with `ĥ` supported on `[−r, r]^d`.
pub fn build_window(d: usize, support_radius: f64) -> Result<Window> {
    if d == 0 {
        return Err(Error::Parameter("dimension d must be ≥ 1".into()));
    }
    if !(support_radius > 0.0) || !support_radius.is_finite() {
        return Err(Error::Parameter(format!("support radius must be > 0, got {support_radius}")));
    }
    let bump_values = LEVELS
        .iter()
        .map(|&(k, _)| (0..k).map(|j| bump(j as f64 / k as f64)).collect())
        .collect();
    let mut w = Window {
        d,
        support_radius,
        bump_values,
        g0: 0.0,
        h0: 0.0,
        hhat_max: (-(d as f64)).exp(),
        envelope: DecayEnvelope {
            b: f64::INFINITY,
            m: (d + 2) as f64,
            validated_to: 0.0,
        },
    };
    w.g0 = w.g(0.0);
    w.h0 = w.g0.powi(d as i32);
    w.envelope = fit_envelope(&w, (d + 2) as f64)?;
    Ok(w)
}

/// Fits `B` on `|t| ≤ 400/r`, then checks the bound up to `t_exact()`.
fn fit_envelope(w: &Window, m: f64) -> Result<DecayEnvelope> {
    let r = w.support_radius;
    let fit_to = 400.0 / r;
    let step = 0.01 / r;
    let fit_n = (fit_to / step).round() as usize;
    let b = 1.1
        * (0..=fit_n)
            .map(|i| {
                let t = i as f64 * step;
                w.g(t).abs() * (1.0 + t.powf(m))
            })
            .fold(0.0, f64::max);
    let env = DecayEnvelope {
        b,
        m,
        validated_to: w.t_exact(),
    };
    let check_step = 0.02 / r;
    let check_n = (w.t_exact() / check_step).floor() as usize;
    for i in 0..=check_n {
        let t = i as f64 * check_step;
        let g = w.g(t).abs();
        if g > env.eval(t) {
            return Err(Error::Contract(format!(
                "decay envelope {b:e}/(1+t^{m}) fails at t = {t}: |g| = {g:e}"
            )));
        }
    }
    Ok(env)
}
