//! Matrix covariance functions built as a linear model of coregionalization.
//!
//! A model is `C(h) = Σ_r B_r ρ_r(|h|₂)` with `B_r = A_r A_rᵀ` and isotropic
//! latent covariances `ρ_r`. Indices `k, ℓ` are zero-based throughout the API.
//!
//! The decay metadata `(A, τ)` states the envelope
//! `|c_kℓ(x)| ≤ A / (1 + |x|^{d+τ})` with `|x|` the max norm.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, ln_gamma};
use std::f64::consts::PI;

use crate::{AuditReport, Error, Result};

/// Decay exponent excess used when the envelope is derived from the latents.
pub const DEFAULT_DECAY_TAU: f64 = 3.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CovKind {
    Matern,
    Exponential,
    Gaussian,
    Triangular,
}

impl std::fmt::Display for CovKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            CovKind::Matern => "matern",
            CovKind::Exponential => "exponential",
            CovKind::Gaussian => "gaussian",
            CovKind::Triangular => "triangular",
        };
        f.write_str(s)
    }
}

/// Stationary isotropic covariance `σ² ρ(r / range)`.
///
/// - matern: `σ² 2^{1−ν}/Γ(ν) u^ν K_ν(u)` with `u = r / range`
/// - exponential: `σ² exp(−r / range)` (Matérn with `ν = 1/2`)
/// - gaussian: `σ² exp(−(r / range)²)`
/// - triangular: `σ² (1 − r / range)₊`, valid in one dimension only
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IsotropicCovariance {
    pub kind: CovKind,
    pub variance: f64,
    pub range: f64,
    pub smoothness: f64,
}

impl IsotropicCovariance {
    /// `smoothness` is only read for [`CovKind::Matern`]; it is stored as `1/2`
    /// for exponential and `0` for gaussian and triangular.
    pub fn new(kind: CovKind, variance: f64, range: f64, smoothness: f64) -> Result<Self> {
        if !(variance >= 0.0) || !variance.is_finite() {
            return Err(Error::Parameter(format!("variance must be finite and ≥ 0, got {variance}")));
        }
        if !(range > 0.0) || !range.is_finite() {
            return Err(Error::Parameter(format!("range must be finite and > 0, got {range}")));
        }
        let smoothness = match kind {
            CovKind::Matern => {
                if !(smoothness > 0.0) || !smoothness.is_finite() {
                    return Err(Error::Parameter(format!(
                        "matern smoothness must be finite and > 0, got {smoothness}"
                    )));
                }
                smoothness
            }
            CovKind::Exponential => 0.5,
            CovKind::Gaussian | CovKind::Triangular => 0.0,
        };
        Ok(Self {
            kind,
            variance,
            range,
            smoothness,
        })
    }

    pub fn exponential(variance: f64, range: f64) -> Result<Self> {
        Self::new(CovKind::Exponential, variance, range, 0.5)
    }

    pub fn matern(variance: f64, range: f64, smoothness: f64) -> Result<Self> {
        Self::new(CovKind::Matern, variance, range, smoothness)
    }

    pub fn gaussian(variance: f64, range: f64) -> Result<Self> {
        Self::new(CovKind::Gaussian, variance, range, 0.0)
    }

    pub fn triangular(variance: f64, range: f64) -> Result<Self> {
        Self::new(CovKind::Triangular, variance, range, 0.0)
    }

    /// Value at Euclidean distance `r ≥ 0`.
    pub fn value(&self, r: f64) -> f64 {
        let r = r.abs();
        if r == 0.0 {
            return self.variance;
        }
        let u = r / self.range;
        let rho = match self.kind {
            CovKind::Exponential => (-u).exp(),
            CovKind::Matern => matern_correlation(u, self.smoothness),
            CovKind::Gaussian => (-u * u).exp(),
            CovKind::Triangular => {
                if u >= 1.0 {
                    0.0
                } else {
                    1.0 - u
                }
            }
        };
        self.variance * rho
    }

    /// Value at a lag vector (Euclidean norm).
    pub fn value_at(&self, lag: &[f64]) -> f64 {
        if self.kind == CovKind::Triangular && lag.len() == 1 {
            // Avoid the sqrt round trip so the 1-d formula is exact.
            return self.value(lag[0]);
        }
        self.value(euclidean_norm(lag))
    }

    /// Spectral density in dimension `d` at frequency norm `w`, with the
    /// forward transform normalized by `(2π)^{-d}`.
    pub fn spectral_density(&self, w: f64, d: usize) -> Result<f64> {
        if self.variance == 0.0 {
            return Ok(0.0);
        }
        let dd = d as f64;
        let l = self.range;
        let v = match self.kind {
            CovKind::Exponential => matern_density(self.variance, l, 0.5, w, dd),
            CovKind::Matern => matern_density(self.variance, l, self.smoothness, w, dd),
            CovKind::Gaussian => {
                self.variance * (l * l / (4.0 * PI)).powf(0.5 * dd) * (-(l * l * w * w) / 4.0).exp()
            }
            CovKind::Triangular => {
                if d != 1 {
                    return Err(Error::Unsupported(
                        "triangular covariance is only positive definite in one dimension".into(),
                    ));
                }
                let s = sinc(0.5 * w * l);
                self.variance * l * s * s / (2.0 * PI)
            }
        };
        Ok(v)
    }

    /// Smallest `A` with `|value(r)| ≤ A / (1 + r^{d+τ})` found on a dense radial
    /// sample, inflated by 2 % to cover the gaps between samples.
    pub fn envelope_constant(&self, d: usize, tau: f64) -> f64 {
        if self.variance == 0.0 {
            return 0.0;
        }
        let power = d as f64 + tau;
        let step = self.range / 200.0;
        let mut best: f64 = self.variance;
        let mut k = 1usize;
        loop {
            let r = step * k as f64;
            let v = self.value(r).abs() * (1.0 + r.powf(power));
            best = best.max(v);
            let past_support = self.kind == CovKind::Triangular && r >= self.range;
            if past_support || (r > 5.0 * self.range && v < 1e-8 * best) || k > 2_000_000 {
                break;
            }
            k += 1;
        }
        1.02 * best
    }
}

fn euclidean_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Max norm `|x| = maxᵢ |xᵢ|`.
pub fn max_norm(x: &[f64]) -> f64 {
    x.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

fn matern_density(variance: f64, range: f64, nu: f64, w: f64, d: f64) -> f64 {
    let kappa = 1.0 / range;
    let ln = variance.ln() + ln_gamma(nu + 0.5 * d) - ln_gamma(nu) - 0.5 * d * PI.ln()
        + 2.0 * nu * kappa.ln()
        - (nu + 0.5 * d) * (kappa * kappa + w * w).ln();
    ln.exp()
}

/// `2^{1−ν}/Γ(ν) u^ν K_ν(u)` for `u > 0`.
fn matern_correlation(u: f64, nu: f64) -> f64 {
    if (nu - 0.5).abs() < 1e-15 {
        return (-u).exp();
    }
    if (nu - 1.5).abs() < 1e-15 {
        return (1.0 + u) * (-u).exp();
    }
    if (nu - 2.5).abs() < 1e-15 {
        return (1.0 + u + u * u / 3.0) * (-u).exp();
    }
    let scaled = scaled_bessel_k(nu, u);
    (2f64.powf(1.0 - nu) / gamma(nu)) * scaled
}

/// `u^ν K_ν(u)` from `K_ν(u) = ∫₀^∞ exp(−u cosh t) cosh(νt) dt`.
///
/// The integrand is analytic in a strip around the real axis, so the
/// trapezoidal rule converges geometrically; the factor `u^ν` is folded into
/// the exponent to keep small `u` finite.
fn scaled_bessel_k(nu: f64, u: f64) -> f64 {
    if u > 745.0 {
        return 0.0;
    }
    let step = 0.05;
    let log_u = u.ln();
    let term = |t: f64| -> f64 {
        let a = nu * log_u - u * t.cosh();
        // cosh(νt) = e^{νt} (1 + e^{−2νt}) / 2
        (a + nu * t).exp() * 0.5 * (1.0 + (-2.0 * nu * t).exp())
    };
    let mut sum = 0.5 * term(0.0);
    let mut peak = sum.abs();
    let mut k = 1usize;
    loop {
        let t = step * k as f64;
        let v = term(t);
        sum += v;
        peak = peak.max(v.abs());
        // Past the exponent's maximum the terms fall off double-exponentially.
        if (u * t.sinh() > nu && v < 1e-18 * peak) || k > 100_000 {
            break;
        }
        k += 1;
    }
    step * sum
}

/// One LMC term `B ρ(h)` with `B = A Aᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct LmcComponent {
    coregionalization: DMatrix<f64>,
    sill: DMatrix<f64>,
    latent: IsotropicCovariance,
}

impl LmcComponent {
    /// `coregionalization` is `p × q` for any `q ≥ 1`.
    pub fn new(coregionalization: DMatrix<f64>, latent: IsotropicCovariance) -> Result<Self> {
        if coregionalization.nrows() == 0 || coregionalization.ncols() == 0 {
            return Err(Error::Shape("coregionalization matrix must be non-empty".into()));
        }
        if coregionalization.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("coregionalization entries must be finite".into()));
        }
        let sill = &coregionalization * coregionalization.transpose();
        Ok(Self {
            coregionalization,
            sill,
            latent,
        })
    }

    pub fn coregionalization(&self) -> &DMatrix<f64> {
        &self.coregionalization
    }

    /// `A Aᵀ`.
    pub fn sill(&self) -> &DMatrix<f64> {
        &self.sill
    }

    pub fn latent(&self) -> &IsotropicCovariance {
        &self.latent
    }
}

/// p-variate stationary covariance on `ℝ^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct MatrixCovarianceModel {
    p: usize,
    d: usize,
    components: Vec<LmcComponent>,
    decay_a: f64,
    decay_tau: f64,
}

/// Builds an LMC model; decay constants are derived from the latents with
/// `τ = DEFAULT_DECAY_TAU` and `A = Σ_r max_kℓ |B_r,kℓ| · A_r`.
pub fn make_lmc(components: Vec<LmcComponent>, d: usize) -> Result<MatrixCovarianceModel> {
    MatrixCovarianceModel::new(components, d)
}

impl MatrixCovarianceModel {
    pub fn new(components: Vec<LmcComponent>, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::Parameter("dimension d must be ≥ 1".into()));
        }
        let first = components
            .first()
            .ok_or_else(|| Error::Shape("an LMC needs at least one component".into()))?;
        let p = first.coregionalization.nrows();
        for (r, c) in components.iter().enumerate() {
            if c.coregionalization.nrows() != p {
                return Err(Error::Shape(format!(
                    "component {r} has {} rows, expected p = {p}",
                    c.coregionalization.nrows()
                )));
            }
            if c.latent.kind == CovKind::Triangular && d != 1 {
                return Err(Error::Unsupported(
                    "triangular covariance is only positive definite in one dimension".into(),
                ));
            }
        }
        let tau = DEFAULT_DECAY_TAU;
        let decay_a = components
            .iter()
            .map(|c| {
                let weight = c.sill.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                weight * c.latent.envelope_constant(d, tau)
            })
            .sum::<f64>()
            .max(f64::MIN_POSITIVE);
        Ok(Self {
            p,
            d,
            components,
            decay_a,
            decay_tau: tau,
        })
    }

    /// Univariate model with a single latent.
    pub fn univariate(latent: IsotropicCovariance, d: usize) -> Result<Self> {
        Self::new(vec![LmcComponent::new(DMatrix::identity(1, 1), latent)?], d)
    }

    /// Replaces the derived decay constants.
    pub fn with_decay(mut self, a: f64, tau: f64) -> Result<Self> {
        if !(a > 0.0) || !(tau > 0.0) || !a.is_finite() || !tau.is_finite() {
            return Err(Error::Parameter(format!("decay constants must be > 0, got A = {a}, τ = {tau}")));
        }
        self.decay_a = a;
        self.decay_tau = tau;
        Ok(self)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn components(&self) -> &[LmcComponent] {
        &self.components
    }

    pub fn decay_a(&self) -> f64 {
        self.decay_a
    }

    pub fn decay_tau(&self) -> f64 {
        self.decay_tau
    }

    /// Largest latent range, used to size quadrature panels.
    pub fn max_range(&self) -> f64 {
        self.components.iter().fold(0.0f64, |m, c| m.max(c.latent.range))
    }

    /// Envelope bound `A / (1 + |x|^{d+τ})` at a lag.
    pub fn envelope(&self, lag: &[f64]) -> f64 {
        self.decay_a / (1.0 + max_norm(lag).powf(self.d as f64 + self.decay_tau))
    }

    fn check_entry(&self, k: usize, l: usize) -> Result<()> {
        for i in [k, l] {
            if i >= self.p {
                return Err(Error::Index { index: i, size: self.p });
            }
        }
        Ok(())
    }

    /// `c_kℓ(lag)`.
    pub fn eval_cov(&self, k: usize, l: usize, lag: &[f64]) -> Result<f64> {
        self.check_entry(k, l)?;
        if lag.len() != self.d {
            return Err(Error::Shape(format!("lag has dimension {}, model has d = {}", lag.len(), self.d)));
        }
        Ok(self.cov_unchecked(k, l, lag))
    }

    pub(crate) fn cov_unchecked(&self, k: usize, l: usize, lag: &[f64]) -> f64 {
        let r = if self.d == 1 { lag[0].abs() } else { euclidean_norm(lag) };
        self.components
            .iter()
            .map(|c| {
                let b = c.sill[(k, l)];
                if b == 0.0 {
                    0.0
                } else {
                    b * c.latent.value(r)
                }
            })
            .sum()
    }

    /// The full `p × p` matrix `C(lag)`.
    pub fn cov_matrix(&self, lag: &[f64]) -> Result<DMatrix<f64>> {
        if lag.len() != self.d {
            return Err(Error::Shape(format!("lag has dimension {}, model has d = {}", lag.len(), self.d)));
        }
        Ok(DMatrix::from_fn(self.p, self.p, |k, l| self.cov_unchecked(k, l, lag)))
    }

    /// Latent spectral densities at frequency norm `w`, paired with their sills.
    pub(crate) fn latent_densities(&self, w: f64) -> Result<Vec<(&DMatrix<f64>, f64)>> {
        self.components
            .iter()
            .map(|c| Ok((&c.sill, c.latent.spectral_density(w, self.d)?)))
            .collect()
    }

    /// Same model with every latent variance multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let comps = self
            .components
            .iter()
            .map(|c| {
                let mut latent = c.latent;
                latent.variance *= factor;
                LmcComponent::new(c.coregionalization.clone(), latent)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(comps, self.d)
    }
}

/// Checks `|c_kℓ(x)| ≤ A / (1 + |x|^{d+τ})` at every sampled lag and entry.
pub fn decay_audit(model: &MatrixCovarianceModel, lag_samples: &[Vec<f64>]) -> Result<AuditReport> {
    if lag_samples.is_empty() {
        return Err(Error::Precondition("decay audit needs at least one lag sample".into()));
    }
    let mut report = AuditReport::new();
    for lag in lag_samples {
        if lag.len() != model.d {
            return Err(Error::Shape(format!("lag has dimension {}, model has d = {}", lag.len(), model.d)));
        }
        let bound = model.envelope(lag);
        for k in 0..model.p {
            for l in 0..model.p {
                let v = model.cov_unchecked(k, l, lag);
                report.record(bound - v.abs(), lag, (k, l));
            }
        }
    }
    Ok(report)
}

/// Lags `t·e₁` and `t·(1,…,1)` for `count` values of `t` evenly spread on `[0, max_lag]`.
pub fn radial_lag_samples(d: usize, max_lag: f64, count: usize) -> Vec<Vec<f64>> {
    let count = count.max(2);
    let mut out = Vec::with_capacity(2 * count);
    for i in 0..count {
        let t = max_lag * i as f64 / (count - 1) as f64;
        let mut axis = vec![0.0; d];
        axis[0] = t;
        out.push(axis);
        if d > 1 {
            out.push(vec![t; d]);
        }
    }
    out
}
