//! Spectral density matrices `Ĉ(f)` and the numerical checks built on them.
//!
//! Fourier convention: `ĝ(f) = (2π)^{-d} ∫ g(x) e^{-i f·x} dx` and
//! `g(x) = ∫ ĝ(f) e^{i f·x} df`. Frequencies are in radians per unit distance.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::cmp::Ordering;
use std::f64::consts::PI;

use crate::covmodels::{decay_audit, radial_lag_samples, MatrixCovarianceModel};
use crate::quadrature::{richardson, PanelRule};
use crate::{AuditReport, Error, Result};

/// `Ĉ(f)` at one frequency.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMatrix {
    pub frequency: Vec<f64>,
    pub entries: DMatrix<Complex64>,
}

impl SpectralMatrix {
    /// `max |Ĉ_kℓ − conj(Ĉ_ℓk)|`.
    pub fn max_asymmetry(&self) -> f64 {
        let p = self.entries.nrows();
        let mut worst = 0.0f64;
        for k in 0..p {
            for l in 0..p {
                worst = worst.max((self.entries[(k, l)] - self.entries[(l, k)].conj()).norm());
            }
        }
        worst
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let p = self.entries.nrows();
        let mut eig: Vec<f64> = if self.entries.iter().all(|z| z.im == 0.0) {
            let re = self.entries.map(|z| z.re);
            SymmetricEigen::new(re).eigenvalues.iter().copied().collect()
        } else {
            // H = A + iB  ↦  [[A, −B], [B, A]] has each eigenvalue of H twice.
            let big = DMatrix::from_fn(2 * p, 2 * p, |i, j| {
                let z = self.entries[(i % p, j % p)];
                match (i < p, j < p) {
                    (true, true) | (false, false) => z.re,
                    (true, false) => -z.im,
                    (false, true) => z.im,
                }
            });
            let mut all: Vec<f64> = SymmetricEigen::new(big).eigenvalues.iter().copied().collect();
            all.sort_by(f64::total_cmp);
            all.into_iter().step_by(2).collect()
        };
        eig.sort_by(f64::total_cmp);
        eig
    }

    pub fn smallest_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }
}

fn check_frequency(model: &MatrixCovarianceModel, f: &[f64]) -> Result<()> {
    if f.len() != model.d() {
        return Err(Error::Shape(format!(
            "frequency has dimension {}, model has d = {}",
            f.len(),
            model.d()
        )));
    }
    Ok(())
}

fn norm2(f: &[f64]) -> f64 {
    f.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `Ĉ(f) = Σ_r B_r ρ̂_r(f)` from the closed-form latent densities.
pub fn spectral_matrix(model: &MatrixCovarianceModel, f: &[f64]) -> Result<SpectralMatrix> {
    check_frequency(model, f)?;
    let real = real_spectral_matrix(model, norm2(f))?;
    Ok(SpectralMatrix {
        frequency: f.to_vec(),
        entries: real.map(|v| Complex64::new(v, 0.0)),
    })
}

/// LMC densities are real and even, so `Ĉ(f)` is real symmetric.
fn real_spectral_matrix(model: &MatrixCovarianceModel, w: f64) -> Result<DMatrix<f64>> {
    let p = model.p();
    let mut out = DMatrix::zeros(p, p);
    for (sill, density) in model.latent_densities(w)? {
        out += sill * density;
    }
    Ok(out)
}

/// `λ₁{Ĉ(f)}` without forming the complex matrix.
pub fn smallest_spectral_eigenvalue(model: &MatrixCovarianceModel, f: &[f64]) -> Result<f64> {
    check_frequency(model, f)?;
    let m = real_spectral_matrix(model, norm2(f))?;
    Ok(smallest_symmetric(&m))
}

fn smallest_symmetric(m: &DMatrix<f64>) -> f64 {
    match m.nrows() {
        1 => m[(0, 0)],
        2 => {
            let (a, b, c) = (m[(0, 0)], m[(0, 1)], m[(1, 1)]);
            let mean = 0.5 * (a + c);
            let half = 0.5 * (a - c);
            mean - (half * half + b * b).sqrt()
        }
        _ => SymmetricEigen::new(m.clone()).eigenvalues.min(),
    }
}

/// Truncated tensor-product Gauss–Legendre rule on `[−R, R]^d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuadSpec {
    pub radius: f64,
    pub panels: usize,
    pub nodes_per_panel: usize,
}

impl QuadSpec {
    pub fn new(radius: f64, panels: usize, nodes_per_panel: usize) -> Self {
        Self {
            radius,
            panels,
            nodes_per_panel,
        }
    }

    /// Radius chosen so the decay envelope integrates to less than `tol / 10`
    /// (after the `(2π)^{-d}` factor) outside the box; panels no wider than
    /// half the shortest latent range.
    pub fn for_tolerance(model: &MatrixCovarianceModel, tol: f64) -> Self {
        let d = model.d() as f64;
        let tau = model.decay_tau();
        // ∫_{|x|∞>R} A |x|^{-(d+τ)} dx = A · d 2^d R^{-τ} / τ
        let numer = 10.0 * model.decay_a() * d * 2f64.powf(d);
        let radius = (numer / (tau * tol * (2.0 * PI).powf(d))).powf(1.0 / tau).max(1.0).ceil();
        let min_range = model
            .components()
            .iter()
            .fold(f64::INFINITY, |m, c| m.min(c.latent().range));
        let width = (0.5 * min_range).min(0.5);
        let panels = ((2.0 * radius) / width).ceil() as usize;
        Self::new(radius, panels, 20)
    }
}

/// `(2π)^{-d} ∫_{[−R,R]^d} c_kℓ(x) e^{−i f·x} dx`, computed directly from the
/// lag-domain covariance.
pub fn numeric_fourier_oracle(
    model: &MatrixCovarianceModel,
    k: usize,
    l: usize,
    f: &[f64],
    quad: &QuadSpec,
) -> Result<Complex64> {
    check_frequency(model, f)?;
    model.eval_cov(k, l, &vec![0.0; model.d()])?;
    if !(quad.radius > 0.0) || quad.panels == 0 || quad.nodes_per_panel == 0 {
        return Err(Error::Parameter(format!("invalid quadrature spec {quad:?}")));
    }
    let samples = radial_lag_samples(model.d(), quad.radius, 512);
    let audit = decay_audit(model, &samples)?;
    if !audit.pass {
        return Err(Error::Precondition(format!(
            "decay envelope fails at lag {:?} (margin {:e}); the transform is not certified integrable",
            audit.worst_lag, audit.worst_margin
        )));
    }

    let rule = PanelRule::new(quad.nodes_per_panel);
    let r = quad.radius;
    let width = 2.0 * r / quad.panels as f64;
    let axis: Vec<(f64, f64)> = (0..quad.panels)
        .flat_map(|i| {
            let lo = -r + width * i as f64;
            let hi = if i + 1 == quad.panels { r } else { lo + width };
            rule.mapped(lo, hi).collect::<Vec<_>>()
        })
        .collect();

    let d = model.d();
    let n = axis.len();
    let total = n.pow(d as u32);
    let sum: Complex64 = (0..total)
        .into_par_iter()
        .with_min_len(1024)
        .map(|mut idx| {
            let mut x = vec![0.0; d];
            let mut w = 1.0;
            for xi in x.iter_mut() {
                let (node, weight) = axis[idx % n];
                *xi = node;
                w *= weight;
                idx /= n;
            }
            let phase: f64 = x.iter().zip(f).map(|(a, b)| a * b).sum();
            Complex64::from_polar(w * model.cov_unchecked(k, l, &x), -phase)
        })
        .collect::<Vec<_>>()
        .into_iter()
        .sum();
    Ok(sum / (2.0 * PI).powi(d as i32))
}

/// Axis-aligned frequency box.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyBox {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl FrequencyBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if lower.len() != upper.len() || lower.is_empty() {
            return Err(Error::Shape("box bounds must have the same non-zero dimension".into()));
        }
        if lower.iter().zip(&upper).any(|(a, b)| !(a <= b) || !a.is_finite() || !b.is_finite()) {
            return Err(Error::Parameter(format!("invalid box bounds {lower:?} .. {upper:?}")));
        }
        Ok(Self { lower, upper })
    }

    /// `[−half_width, half_width]^d`.
    pub fn symmetric(d: usize, half_width: f64) -> Result<Self> {
        Self::new(vec![-half_width; d], vec![half_width; d])
    }

    pub fn d(&self) -> usize {
        self.lower.len()
    }
}

/// Grid minimum of `λ₁{Ĉ(f)}` over a box.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralFloor {
    #[serde(rename = "box")]
    pub frequency_box: FrequencyBox,
    pub value: f64,
    pub argmin: Vec<f64>,
    /// Coarse-grid spacing (largest over axes).
    pub grid_step: f64,
    /// Nodes per axis of both the coarse and the refinement grid.
    pub resolution: usize,
}

fn grid_min(
    model: &MatrixCovarianceModel,
    bx: &FrequencyBox,
    resolution: usize,
) -> Result<(f64, Vec<f64>)> {
    let d = bx.d();
    let steps: Vec<f64> = (0..d)
        .map(|j| (bx.upper[j] - bx.lower[j]) / (resolution - 1) as f64)
        .collect();
    let node = |mut idx: usize| -> Vec<f64> {
        let mut f = vec![0.0; d];
        for j in 0..d {
            let i = idx % resolution;
            idx /= resolution;
            f[j] = if i + 1 == resolution { bx.upper[j] } else { bx.lower[j] + steps[j] * i as f64 };
        }
        f
    };
    let total = resolution
        .checked_pow(d as u32)
        .ok_or_else(|| Error::Parameter("spectral grid too large".into()))?;
    let best = (0..total)
        .into_par_iter()
        .with_min_len(256)
        .map(|idx| smallest_spectral_eigenvalue(model, &node(idx)).map(|v| (v, idx)))
        .try_reduce(
            || (f64::INFINITY, usize::MAX),
            |a, b| {
                // Ties resolve to the lower index so the result is order independent.
                Ok(match a.0.total_cmp(&b.0) {
                    Ordering::Less => a,
                    Ordering::Greater => b,
                    Ordering::Equal => {
                        if a.1 <= b.1 {
                            a
                        } else {
                            b
                        }
                    }
                })
            },
        )?;
    Ok((best.0, node(best.1)))
}

/// Minimum of `λ₁{Ĉ(f)}` over a uniform grid with `resolution` nodes per axis,
/// followed by one refinement grid on the cells around the coarse argmin.
pub fn spectral_floor(
    model: &MatrixCovarianceModel,
    frequency_box: &FrequencyBox,
    resolution: usize,
) -> Result<SpectralFloor> {
    if frequency_box.d() != model.d() {
        return Err(Error::Shape(format!(
            "box has dimension {}, model has d = {}",
            frequency_box.d(),
            model.d()
        )));
    }
    if resolution < 3 {
        return Err(Error::Parameter(format!("resolution must be ≥ 3, got {resolution}")));
    }
    let d = model.d();
    let (coarse_value, coarse_arg) = grid_min(model, frequency_box, resolution)?;
    let steps: Vec<f64> = (0..d)
        .map(|j| (frequency_box.upper[j] - frequency_box.lower[j]) / (resolution - 1) as f64)
        .collect();
    let refine = FrequencyBox {
        lower: (0..d)
            .map(|j| (coarse_arg[j] - steps[j]).max(frequency_box.lower[j]))
            .collect(),
        upper: (0..d)
            .map(|j| (coarse_arg[j] + steps[j]).min(frequency_box.upper[j]))
            .collect(),
    };
    let (fine_value, fine_arg) = grid_min(model, &refine, resolution)?;
    let (value, argmin) = if fine_value < coarse_value {
        (fine_value, fine_arg)
    } else {
        (coarse_value, coarse_arg)
    };
    Ok(SpectralFloor {
        frequency_box: frequency_box.clone(),
        value,
        argmin,
        grid_step: steps.iter().fold(0.0f64, |m, s| m.max(*s)),
        resolution,
    })
}

/// Settings for the one-dimensional inverse transform `∫ ĉ(f) e^{ifx} df`.
///
/// The integral is truncated at `F_j = base_cutoff · 2^j` for `j < levels` and
/// extrapolated to `F → ∞` with Richardson's scheme. `base_cutoff` is a
/// multiple of `4π`, so for lags on the half-integer lattice every oscillating
/// tail term vanishes at the cutoffs and the truncation error is a power
/// series in `1/F`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InversionQuad {
    pub base_cutoff: f64,
    pub levels: usize,
    pub nodes_per_panel: usize,
}

impl Default for InversionQuad {
    fn default() -> Self {
        Self {
            base_cutoff: 64.0 * PI,
            levels: 7,
            nodes_per_panel: 16,
        }
    }
}

/// Richardson-extrapolated `∫_ℝ ĉ_kℓ(f) e^{ifx} df` in one dimension, with the
/// magnitude of the last extrapolation correction.
pub fn inverse_fourier(
    model: &MatrixCovarianceModel,
    k: usize,
    l: usize,
    x: f64,
    quad: &InversionQuad,
) -> Result<(Complex64, f64)> {
    if model.d() != 1 {
        return Err(Error::Unsupported(format!(
            "the inverse-transform audit is implemented for d = 1, model has d = {}",
            model.d()
        )));
    }
    model.eval_cov(k, l, &[0.0])?;
    if quad.levels == 0 || !(quad.base_cutoff > 0.0) {
        return Err(Error::Parameter(format!("invalid inversion quadrature {quad:?}")));
    }
    let rule = PanelRule::new(quad.nodes_per_panel);
    let width = PI / (4.0 * (x.abs() + model.max_range() + 1.0));
    // Surfaces unsupported densities before the integration loop.
    real_spectral_matrix(model, 0.0)?;
    let integrand = |f: f64| -> Complex64 {
        let v = real_spectral_matrix(model, f.abs()).map_or(f64::NAN, |m| m[(k, l)]);
        // ĉ is even in f for LMC models: combine f and −f.
        Complex64::from_polar(v, f * x) + Complex64::from_polar(v, -f * x)
    };
    let mut partial = Vec::with_capacity(quad.levels);
    let mut acc = Complex64::new(0.0, 0.0);
    let mut start = 0.0;
    for j in 0..quad.levels {
        let cutoff = quad.base_cutoff * 2f64.powi(j as i32);
        acc += rule.integrate_complex(start, cutoff, width, integrand);
        partial.push(acc);
        start = cutoff;
    }
    Ok(richardson(&partial))
}

/// Checks `|c_kℓ(x) − ∫ ĉ_kℓ(f) e^{ifx} df| ≤ tol` at every lag and entry (d = 1).
pub fn inversion_audit(
    model: &MatrixCovarianceModel,
    lags: &[Vec<f64>],
    quad: &InversionQuad,
    tol: f64,
) -> Result<AuditReport> {
    if lags.is_empty() {
        return Err(Error::Precondition("inversion audit needs at least one lag".into()));
    }
    let mut report = AuditReport::new();
    for lag in lags {
        if lag.len() != model.d() {
            return Err(Error::Shape(format!("lag has dimension {}, model has d = {}", lag.len(), model.d())));
        }
        for k in 0..model.p() {
            for l in 0..model.p() {
                let (value, _) = inverse_fourier(model, k, l, lag[0], quad)?;
                let direct = model.cov_unchecked(k, l, lag);
                report.record(tol - (value - direct).norm(), lag, (k, l));
            }
        }
    }
    Ok(report)
}
