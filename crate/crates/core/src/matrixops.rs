//! Covariance matrix assembly, eigenvalues, Gershgorin floors, the tridiagonal
//! Toeplitz closed form and the Schur-product taper bound.

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;

use crate::covmodels::MatrixCovarianceModel;
use crate::designs::Design;
use crate::{Error, Result};

/// Largest asymmetry accepted by the eigen routines.
pub const SYMMETRY_TOL: f64 = 1e-12;
/// Most negative eigenvalue tolerated for a taper.
pub const TAPER_PSD_TOL: f64 = 1e-10;

/// `Σ` with its block offsets `N₀ = 0, …, N_p`.
#[derive(Debug, Clone)]
pub struct CovMatrix {
    pub entries: DMatrix<f64>,
    pub offsets: Vec<usize>,
    pub provenance: String,
}

impl CovMatrix {
    pub fn n(&self) -> usize {
        self.entries.nrows()
    }
}

/// `σ_ab = c_kl(x_i^(k) − x_j^(l))` with `a`, `b` the global indices of the two points.
pub fn assemble_sigma(model: &MatrixCovarianceModel, design: &Design) -> Result<CovMatrix> {
    if model.d() != design.d() {
        return Err(Error::Shape(format!(
            "model dimension {} differs from design dimension {}",
            model.d(),
            design.d()
        )));
    }
    if model.p() != design.p() {
        return Err(Error::Shape(format!(
            "model has {} processes, design has {}",
            model.p(),
            design.p()
        )));
    }
    let pts: Vec<(usize, &[f64])> = design.points().collect();
    let n = pts.len();
    let d = design.d();
    // Upper triangle row by row, mirrored afterwards so the result is exactly symmetric.
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|a| {
            let (k, xa) = pts[a];
            let mut lag = vec![0.0; d];
            (a..n)
                .map(|b| {
                    let (l, xb) = pts[b];
                    for j in 0..d {
                        lag[j] = xa[j] - xb[j];
                    }
                    model.cov_unchecked(k, l, &lag)
                })
                .collect()
        })
        .collect();
    let mut entries = DMatrix::zeros(n, n);
    for (a, row) in rows.into_iter().enumerate() {
        for (off, v) in row.into_iter().enumerate() {
            entries[(a, a + off)] = v;
            entries[(a + off, a)] = v;
        }
    }
    Ok(CovMatrix {
        entries,
        offsets: design.offsets().to_vec(),
        provenance: format!("p={} d={} N={} counts={:?}", model.p(), d, n, design.counts()),
    })
}

/// Largest `|m_ab − m_ba|`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for a in 0..n {
        for b in a + 1..n {
            worst = worst.max((m[(a, b)] - m[(b, a)]).abs());
        }
    }
    worst
}

fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::Shape(format!("matrix is {}×{}, not square", m.nrows(), m.ncols())));
    }
    let asym = asymmetry(m);
    if !(asym <= SYMMETRY_TOL) {
        return Err(Error::Contract(format!("matrix asymmetry {asym:e} exceeds {SYMMETRY_TOL:e}")));
    }
    Ok(())
}

/// All eigenvalues in ascending order.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    check_symmetric(m)?;
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    // Symmetrize exactly so the solver sees the matrix it is promised.
    let sym = (m + m.transpose()) * 0.5;
    let mut ev: Vec<f64> = SymmetricEigen::new(sym).eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

/// `λ₁(M)`. The dense solver converges to machine precision; `tol` only has to
/// be attainable (≥ a few ulps of the spectral radius).
pub fn smallest_eigenvalue(m: &DMatrix<f64>, tol: f64) -> Result<f64> {
    if !(tol > 0.0) {
        return Err(Error::Parameter(format!("tolerance must be > 0, got {tol}")));
    }
    let ev = eigenvalues(m)?;
    ev.first()
        .copied()
        .ok_or_else(|| Error::Shape("empty matrix has no eigenvalues".into()))
}

/// `min_a (m_aa − Σ_{b≠a} |m_ab|)`.
pub fn gershgorin_floor(m: &DMatrix<f64>) -> f64 {
    (0..m.nrows())
        .map(|a| {
            let off: f64 = (0..m.ncols()).filter(|&b| b != a).map(|b| m[(a, b)].abs()).sum();
            m[(a, a)] - off
        })
        .fold(f64::INFINITY, f64::min)
}

/// Eigenvalues `diag + 2·off·cos(iπ/(n+1))`, `i = 1..n`, sorted descending.
pub fn tridiag_toeplitz_eigs(n: usize, diag: f64, off: f64) -> Vec<f64> {
    let mut ev: Vec<f64> = (1..=n)
        .map(|i| diag + 2.0 * off * (i as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos())
        .collect();
    ev.sort_by(|a, b| b.total_cmp(a));
    ev
}

/// A symmetric PSD matrix with positive diagonal.
#[derive(Debug, Clone)]
pub struct TaperMatrix {
    entries: DMatrix<f64>,
    diag_min: f64,
    lambda1: f64,
}

impl TaperMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        check_symmetric(&entries)?;
        if entries.nrows() == 0 {
            return Err(Error::Shape("taper matrix is empty".into()));
        }
        let diag_min = entries.diagonal().iter().copied().fold(f64::INFINITY, f64::min);
        if !(diag_min > 0.0) {
            return Err(Error::Contract(format!("taper diagonal must be > 0, minimum is {diag_min}")));
        }
        let lambda1 = smallest_eigenvalue(&entries, 1e-12)?;
        if lambda1 < -TAPER_PSD_TOL {
            return Err(Error::Contract(format!("taper is not PSD: λ₁ = {lambda1:e}")));
        }
        Ok(Self {
            entries,
            diag_min,
            lambda1,
        })
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn diag_min(&self) -> f64 {
        self.diag_min
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }
}

/// Wendland taper `(1 − r/θ)₊⁴ (1 + 4r/θ)` on the Euclidean distances of all
/// design points; PSD in dimensions up to 3.
pub fn wendland_taper(design: &Design, theta: f64) -> Result<TaperMatrix> {
    if !(theta > 0.0) {
        return Err(Error::Parameter(format!("taper range must be > 0, got {theta}")));
    }
    if design.d() > 3 {
        return Err(Error::Unsupported("Wendland taper is only valid for d ≤ 3".into()));
    }
    let pts: Vec<&[f64]> = design.points().map(|(_, x)| x).collect();
    let n = pts.len();
    let m = DMatrix::from_fn(n, n, |a, b| {
        let r = pts[a].iter().zip(pts[b]).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt() / theta;
        if r >= 1.0 {
            0.0
        } else {
            (1.0 - r).powi(4) * (1.0 + 4.0 * r)
        }
    });
    TaperMatrix::new(m)
}

/// Entrywise product `Σ ∘ A`.
pub fn schur_product(sigma: &DMatrix<f64>, taper: &TaperMatrix) -> Result<DMatrix<f64>> {
    if sigma.shape() != taper.entries.shape() {
        return Err(Error::Shape(format!(
            "Σ is {:?}, taper is {:?}",
            sigma.shape(),
            taper.entries.shape()
        )));
    }
    Ok(sigma.component_mul(&taper.entries))
}

/// `(min_i A_ii) · λ₁(Σ)`, a lower bound on `λ₁(Σ ∘ A)`.
pub fn taper_floor(sigma_lambda1: f64, taper: &TaperMatrix) -> Result<f64> {
    if !(sigma_lambda1 >= 0.0) {
        return Err(Error::Precondition(format!("λ₁(Σ) must be ≥ 0, got {sigma_lambda1}")));
    }
    if taper.lambda1 < -TAPER_PSD_TOL {
        return Err(Error::Contract(format!("taper is not PSD: λ₁ = {:e}", taper.lambda1)));
    }
    Ok(taper.diag_min * sigma_lambda1)
}

/// Dense row-major CSV, full symmetric storage, 17 significant digits.
pub fn matrix_to_csv(m: &DMatrix<f64>) -> String {
    let mut out = String::with_capacity(m.len() * 24);
    for a in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols())
            .map(|b| crate::cli::report::format_float(m[(a, b)]))
            .collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}
