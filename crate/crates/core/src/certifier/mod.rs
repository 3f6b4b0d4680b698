//! Certified lower bounds `λ₁(Σ) ≥ (h(0)/2) · δ^d · δ₂`.
//!
//! `δ` is chosen on the geometric ladder `2^m / Δ` (`m = −2, −1, …`) so that
//! every within-process row sum `Σ_{j≠i} |h(δ(x_i − x_j))|` is at most
//! `h(0)/2`. Then the block-diagonal comparison matrix `T` has all eigenvalues
//! above `h(0)/2`, and `δ₂` is the spectral floor of the model over the scaled
//! window support `[−δr, δr]^d` divided by `sup ĥ`.

mod window;

use nalgebra::DMatrix;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

pub use window::{bump, build_window, DecayEnvelope, Window, T_EXACT};

use crate::covmodels::{decay_audit, radial_lag_samples, MatrixCovarianceModel};
use crate::designs::{min_distance, Design};
use crate::matrixops::gershgorin_floor;
use crate::spectral::{spectral_floor, FrequencyBox, SpectralFloor};
use crate::{Error, Result};

/// Spectral floors at or below this are treated as zero.
pub const FLOOR_EPS: f64 = 1e-12;
/// Terms summed explicitly in the packing bound before the integral tail.
pub const PACKING_TERMS: usize = 1_000_000;

const PROFILE: &str = "bump(u) = exp(-1/(1-(u/r)^2)) per axis, symmetric support [-r, r]^d";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CertifyMode {
    /// Row sums evaluated on the actual design.
    DesignCertified,
    /// Row sums bounded by a packing argument valid for every design with the same `Δ`.
    FamilyCertified,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertifyOptions {
    pub mode: CertifyMode,
    pub support_radius: f64,
    /// Nodes per axis of the spectral-floor grid; `None` picks by dimension.
    pub spectral_resolution: Option<usize>,
    /// Ladder rungs scanned above the first admissible one.
    pub extra_rungs: usize,
    pub max_doublings: usize,
    /// Radial samples for the decay audit run before certification.
    pub decay_samples: usize,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            mode: CertifyMode::DesignCertified,
            support_radius: 1.0,
            spectral_resolution: None,
            extra_rungs: 4,
            max_doublings: 40,
            decay_samples: 2000,
        }
    }
}

/// Default spectral grid resolution per axis.
pub fn default_resolution(d: usize) -> usize {
    match d {
        1 => 2001,
        2 => 201,
        _ => 41,
    }
}

impl CertifyOptions {
    pub fn resolution(&self, d: usize) -> usize {
        self.spectral_resolution.unwrap_or_else(|| default_resolution(d))
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CertifiedBound {
    pub value: f64,
    pub h0: f64,
    pub delta: f64,
    pub delta2: f64,
    /// Exponent `m` of the accepted rung `δ = 2^m / Δ`.
    pub ladder_rung: i32,
    /// `Δ` the ladder was built on (1 when every process is a single point).
    pub ladder_base: f64,
    pub spectral_grid_resolution: usize,
    pub spectral_floor: f64,
    pub floor_argmin: Vec<f64>,
    pub row_sum_worst: f64,
    pub mode: CertifyMode,
    pub support_radius: f64,
    pub hhat_max: f64,
    pub window_profile: String,
    /// Number of parameter values the bound holds for (1 unless uniform).
    pub parameter_count: usize,
    pub caveats: Vec<String>,
}

/// Ladder value `2^m / Δ`.
pub fn ladder_delta(base: f64, m: i32) -> f64 {
    2f64.powi(m) / base
}

/// `Δ` used to seed the ladder.
pub fn ladder_base(design: &Design) -> Result<f64> {
    Ok(min_distance(design)?.overall.unwrap_or(1.0))
}

/// Worst within-process row sum `max_i Σ_{j≠i} |h(δ(x_i − x_j))|` (with the
/// envelope standing in for `|g|` beyond its exact range).
pub fn worst_row_sum(window: &Window, design: &Design, delta: f64) -> f64 {
    let d = design.d();
    design
        .processes()
        .iter()
        .map(|pts| {
            (0..pts.len())
                .into_par_iter()
                .map(|i| {
                    let mut lag = vec![0.0; d];
                    let mut sum = 0.0;
                    for (j, xj) in pts.iter().enumerate() {
                        if j == i {
                            continue;
                        }
                        for c in 0..d {
                            lag[c] = delta * (pts[i][c] - xj[c]);
                        }
                        sum += window.h_abs_bound(&lag);
                    }
                    sum
                })
                .reduce(|| 0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// First ladder rung whose worst row sum is `≤ h(0)/2`. Returns `(δ, worst row sum)`.
pub fn find_delta(window: &Window, design: &Design) -> Result<(f64, f64)> {
    let base = ladder_base(design)?;
    let (m, worst) = first_rung(window, 40, |delta| worst_row_sum(window, design, delta), base)?;
    Ok((ladder_delta(base, m), worst))
}

fn first_rung(
    window: &Window,
    max_doublings: usize,
    row_sum: impl Fn(f64) -> f64,
    base: f64,
) -> Result<(i32, f64)> {
    let limit = 0.5 * window.h0();
    let mut best_seen = f64::INFINITY;
    for step in 0..=max_doublings {
        let m = step as i32 - 2;
        let s = row_sum(ladder_delta(base, m));
        if s <= limit {
            return Ok((m, s));
        }
        best_seen = best_seen.min(s);
    }
    Err(Error::Certification(format!(
        "δ ladder exhausted after {max_doublings} doublings: smallest worst row sum {best_seen:e} > h(0)/2 = {limit:e}"
    )))
}

/// `δ₂ = floor(Ĉ on [−δr, δr]^d) / sup ĥ`.
pub fn compute_delta2(
    window: &Window,
    model: &MatrixCovarianceModel,
    delta: f64,
    resolution: usize,
) -> Result<(f64, SpectralFloor)> {
    let fb = FrequencyBox::symmetric(model.d(), delta * window.support_radius())?;
    let floor = spectral_floor(model, &fb, resolution)?;
    if !(floor.value > FLOOR_EPS) {
        return Err(Error::SpectralFloor {
            value: floor.value,
            argmin: floor.argmin.clone(),
        });
    }
    Ok((floor.value / window.hhat_max(), floor))
}

/// Packing bound on the row sum for any design with within-process minimum
/// max-norm distance `≥ Δ`.
///
/// Points at max-norm distance in `[mΔ, (m+1)Δ)` from a given point have
/// disjoint cubes of side `Δ` inside the annulus between half-widths
/// `(m − ½)Δ` and `(m + 3/2)Δ`, so there are at most `(2m+3)^d − (2m−1)^d` of
/// them, and each contributes at most `g(0)^{d−1} · env(δ m Δ)`.
pub fn packing_row_sum(window: &Window, delta: f64, min_dist: f64) -> f64 {
    let d = window.d() as i32;
    let env = window.envelope();
    let scale = window.g0().abs().powi(d - 1);
    let u = delta * min_dist;
    let shell = |m: f64| (2.0 * m + 3.0).powi(d) - (2.0 * m - 1.0).powi(d);
    let head: f64 = (1..=PACKING_TERMS)
        .map(|m| {
            let m = m as f64;
            shell(m) * env.eval(u * m)
        })
        .sum();
    // Shell count ≤ 4d(2m+3)^{d−1} ≤ 4d·5^{d−1}·m^{d−1}; compare the sum over m > M with ∫_M^∞.
    let big_m = PACKING_TERMS as f64;
    let e = env.m;
    let tail = 4.0 * d as f64 * 5f64.powi(d - 1) * env.b * big_m.powf(d as f64 - e) / (u.powf(e) * (e - d as f64));
    scale * (head + tail)
}

/// Smallest ladder `δ` (on base `Δ`) for which the packing bound holds.
pub fn family_delta(window: &Window, min_dist: f64, envelope: &DecayEnvelope) -> Result<f64> {
    if !(min_dist > 0.0) {
        return Err(Error::Parameter(format!("minimum distance must be > 0, got {min_dist}")));
    }
    check_envelope(window, envelope)?;
    let (m, _) = first_rung(window, 40, |delta| packing_row_sum(window, delta, min_dist), min_dist)?;
    Ok(ladder_delta(min_dist, m))
}

fn check_envelope(window: &Window, envelope: &DecayEnvelope) -> Result<()> {
    if envelope.m < (window.d() + 2) as f64 {
        return Err(Error::Contract(format!(
            "envelope exponent {} below d + 2 = {}",
            envelope.m,
            window.d() + 2
        )));
    }
    let step = 0.05 / window.support_radius();
    let n = (window.t_exact() / step) as usize;
    if let Some(t) = (0..=n)
        .map(|i| i as f64 * step)
        .find(|&t| window.g(t).abs() > envelope.eval(t))
    {
        return Err(Error::Contract(format!("envelope does not bound |g| at t = {t}")));
    }
    Ok(())
}

/// Common preconditions: matching shapes, decay audit, positive `Δ`.
fn check_inputs(model: &MatrixCovarianceModel, design: &Design, opts: &CertifyOptions) -> Result<()> {
    if model.d() != design.d() || model.p() != design.p() {
        return Err(Error::Shape(format!(
            "model (p = {}, d = {}) does not match design (p = {}, d = {})",
            model.p(),
            model.d(),
            design.p(),
            design.d()
        )));
    }
    let samples = radial_lag_samples(model.d(), 12.0 * model.max_range().max(1.0), opts.decay_samples.max(2));
    let audit = decay_audit(model, &samples)?;
    if !audit.pass {
        return Err(Error::Precondition(format!(
            "decay audit failed: worst margin {:e} at lag {:?}",
            audit.worst_margin, audit.worst_lag
        )));
    }
    Ok(())
}

type RowSum<'a> = Box<dyn Fn(f64) -> f64 + Sync + 'a>;

/// Row-sum evaluator for the chosen mode plus the ladder base.
fn row_sum_fn<'a>(window: &'a Window, design: &'a Design, mode: CertifyMode) -> Result<(f64, RowSum<'a>)> {
    let base = ladder_base(design)?;
    let all_single = design.counts().iter().all(|&n| n < 2);
    Ok(match mode {
        CertifyMode::DesignCertified => (base, Box::new(move |delta| worst_row_sum(window, design, delta))),
        CertifyMode::FamilyCertified if all_single => (base, Box::new(|_| 0.0)),
        CertifyMode::FamilyCertified => {
            check_envelope(window, window.envelope())?;
            (base, Box::new(move |delta| packing_row_sum(window, delta, base)))
        }
    })
}

/// Bound for one model on one design.
pub fn certify(model: &MatrixCovarianceModel, design: &Design, opts: &CertifyOptions) -> Result<CertifiedBound> {
    certify_models(std::slice::from_ref(model), design, opts).map_err(|(_, e)| e)
}

/// One bound valid for every model of a parametrized family on a grid of
/// parameter values. Decay constants are shared: the largest `A` and smallest
/// `τ` over the grid.
pub fn certify_uniform<F>(
    family: F,
    theta_grid: &[Vec<f64>],
    design: &Design,
    opts: &CertifyOptions,
) -> Result<CertifiedBound>
where
    F: Fn(&[f64]) -> Result<MatrixCovarianceModel>,
{
    if theta_grid.is_empty() {
        return Err(Error::Parameter("parameter grid is empty".into()));
    }
    let models = theta_grid
        .iter()
        .map(|th| family(th).map_err(|e| Error::Certification(format!("θ = {th:?}: {e}"))))
        .collect::<Result<Vec<_>>>()?;
    let a = models.iter().map(|m| m.decay_a()).fold(0.0, f64::max);
    let tau = models.iter().map(|m| m.decay_tau()).fold(f64::INFINITY, f64::min);
    let models = models
        .into_iter()
        .map(|m| m.with_decay(a, tau))
        .collect::<Result<Vec<_>>>()?;
    certify_models(&models, design, opts).map_err(|(idx, e)| match idx {
        Some(i) => Error::Certification(format!("θ = {:?}: {e}", theta_grid[i])),
        None => e,
    })
}

/// Shared driver; errors carry the index of the offending model when there is one.
fn certify_models(
    models: &[MatrixCovarianceModel],
    design: &Design,
    opts: &CertifyOptions,
) -> std::result::Result<CertifiedBound, (Option<usize>, Error)> {
    for (i, m) in models.iter().enumerate() {
        check_inputs(m, design, opts).map_err(|e| (Some(i), e))?;
    }
    let window = build_window(design.d(), opts.support_radius).map_err(|e| (None, e))?;
    let (base, row_sum) = row_sum_fn(&window, design, opts.mode).map_err(|e| (None, e))?;
    let (m0, _) = first_rung(&window, opts.max_doublings, &row_sum, base).map_err(|e| (None, e))?;
    let resolution = opts.resolution(design.d());
    let d = design.d() as i32;

    let mut best: Option<CertifiedBound> = None;
    for m in m0..=m0 + opts.extra_rungs as i32 {
        let delta = ladder_delta(base, m);
        let rs = row_sum(delta);
        if !(rs <= 0.5 * window.h0()) {
            continue;
        }
        // Minimum floor over all models; parallel per model, reduced in order.
        let floors: Vec<Result<(f64, SpectralFloor)>> = models
            .par_iter()
            .map(|model| compute_delta2(&window, model, delta, resolution))
            .collect();
        let mut rung: Option<(f64, SpectralFloor)> = None;
        let mut failed = None;
        for (i, f) in floors.into_iter().enumerate() {
            match f {
                Ok((d2, fl)) => {
                    if rung.as_ref().is_none_or(|(cur, _)| d2 < *cur) {
                        rung = Some((d2, fl));
                    }
                }
                Err(e) => {
                    failed = Some((i, e));
                    break;
                }
            }
        }
        if let Some((i, e)) = failed {
            if m == m0 {
                return Err((if models.len() > 1 { Some(i) } else { None }, e));
            }
            continue;
        }
        let (delta2, floor) = rung.expect("at least one model");
        let value = 0.5 * window.h0() * delta.powi(d) * delta2;
        if best.as_ref().is_none_or(|b| value > b.value) {
            best = Some(CertifiedBound {
                value,
                h0: window.h0(),
                delta,
                delta2,
                ladder_rung: m,
                ladder_base: base,
                spectral_grid_resolution: resolution,
                spectral_floor: floor.value,
                floor_argmin: floor.argmin,
                row_sum_worst: rs,
                mode: opts.mode,
                support_radius: opts.support_radius,
                hhat_max: window.hhat_max(),
                window_profile: PROFILE.to_string(),
                parameter_count: models.len(),
                caveats: caveats(&window, opts.mode, resolution),
            });
        }
    }
    best.ok_or_else(|| (None, Error::Certification("no admissible ladder rung".into())))
}

fn caveats(window: &Window, mode: CertifyMode, resolution: usize) -> Vec<String> {
    let mut out = vec![
        format!("spectral floor is a grid minimum ({resolution} nodes per axis plus one refinement), not an interval bound"),
        "window support is the symmetric box [-r, r]^d so that h is real and even".to_string(),
        format!(
            "|g(t)| beyond t = {} is bounded by the fitted envelope {:.6e}/(1+t^{})",
            window.t_exact(),
            window.envelope().b,
            window.envelope().m
        ),
    ];
    if mode == CertifyMode::FamilyCertified {
        out.push(format!(
            "family mode relies on the decay envelope of g, verified by sampling up to t = {}, not analytically",
            window.envelope().validated_to
        ));
    }
    out
}

/// The diagonal blocks `[h(δ(x_i − x_j))]` of the comparison matrix `T`.
pub fn comparison_blocks(window: &Window, design: &Design, delta: f64) -> Vec<DMatrix<f64>> {
    design
        .processes()
        .iter()
        .map(|pts| {
            let n = pts.len();
            DMatrix::from_fn(n, n, |i, j| {
                let lag: Vec<f64> = pts[i].iter().zip(&pts[j]).map(|(a, b)| delta * (a - b)).collect();
                window.h(&lag)
            })
        })
        .collect()
}

/// Results of checking `T` for an accepted `δ`.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonCheck {
    pub row_sum_worst: f64,
    pub gershgorin_floor: f64,
    /// `min_v (vᵀTv − (h0/2)|v|²)` over the random trials.
    pub quadratic_form_slack: f64,
    pub trials: usize,
}

/// Gershgorin floor of `T` and `vᵀTv ≥ (h0/2)|v|²` on random vectors.
/// Requires every coordinate difference times `δ` to be within the exact range of `g`.
pub fn check_comparison(window: &Window, design: &Design, delta: f64, trials: usize, seed: u64) -> ComparisonCheck {
    let blocks = comparison_blocks(window, design, delta);
    let gersh = blocks.iter().map(gershgorin_floor).fold(f64::INFINITY, f64::min);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = 0.5 * window.h0();
    let mut slack = f64::INFINITY;
    for _ in 0..trials {
        let mut q = 0.0;
        let mut norm2 = 0.0;
        for b in &blocks {
            let v = nalgebra::DVector::from_fn(b.nrows(), |_, _| rng.random_range(-1.0..1.0));
            q += v.dot(&(b * &v));
            norm2 += v.norm_squared();
        }
        slack = slack.min(q - half * norm2);
    }
    ComparisonCheck {
        row_sum_worst: worst_row_sum(window, design, delta),
        gershgorin_floor: gersh,
        quadratic_form_slack: slack,
        trials,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covmodels::{IsotropicCovariance, LmcComponent};
    use crate::designs::{make_grid_design, make_random_min_dist};
    use crate::matrixops::{assemble_sigma, smallest_eigenvalue};
    use std::f64::consts::PI;

    fn expo(range: f64, d: usize) -> MatrixCovarianceModel {
        MatrixCovarianceModel::univariate(IsotropicCovariance::exponential(1.0, range).unwrap(), d).unwrap()
    }

    fn lambda1(model: &MatrixCovarianceModel, design: &Design) -> f64 {
        smallest_eigenvalue(&assemble_sigma(model, design).unwrap().entries, 1e-12).unwrap()
    }

    #[test]
    fn single_points_accept_the_first_rung() {
        let w = build_window(2, 1.0).unwrap();
        let design = Design::new(2, vec![vec![vec![0.0, 0.0]], vec![vec![1.0, 1.0]]]).unwrap();
        let (delta, rs) = find_delta(&w, &design).unwrap();
        assert_eq!(delta, 0.25);
        assert_eq!(rs, 0.0);
    }

    #[test]
    fn accepted_delta_satisfies_row_sum_directly() {
        let w = build_window(1, 1.0).unwrap();
        let design = make_grid_design(1, &[100], 1.0, None).unwrap();
        let (delta, _) = find_delta(&w, &design).unwrap();
        let direct: f64 = 2.0 * (1..100).map(|m| w.g(delta * m as f64).abs()).sum::<f64>();
        assert!(direct <= 0.5 * w.h0());
        let check = check_comparison(&w, &design, delta, 20, 1);
        assert!(check.gershgorin_floor >= 0.5 * w.h0() - 1e-12);
        assert!(check.quadratic_form_slack >= -1e-8);
    }

    #[test]
    fn scaling_the_design_rescales_delta() {
        let w = build_window(2, 1.0).unwrap();
        let design = make_random_min_dist(2, &[30], 0.8, &[(0.0, 8.0), (0.0, 8.0)], 3).unwrap();
        let (d1, r1) = find_delta(&w, &design).unwrap();
        let (d2, r2) = find_delta(&w, &design.scaled(2.0).unwrap()).unwrap();
        assert!((d2 - 0.5 * d1).abs() < 1e-15 * d1);
        assert!((r1 - r2).abs() < 1e-12);
    }

    #[test]
    fn delta2_exponential_closed_form() {
        let w = build_window(1, 1.0).unwrap();
        let (d2, fl) = compute_delta2(&w, &expo(1.0, 1), 1.0, 2001).unwrap();
        assert!((d2 - std::f64::consts::E / (2.0 * PI)).abs() < 1e-14);
        assert_eq!(fl.argmin[0].abs(), 1.0);

        let doubled = MatrixCovarianceModel::univariate(IsotropicCovariance::exponential(2.0, 1.0).unwrap(), 1).unwrap();
        let (d2x2, _) = compute_delta2(&w, &doubled, 1.0, 2001).unwrap();
        assert!((d2x2 - 2.0 * d2).abs() < 1e-14);
    }

    #[test]
    fn delta2_refuses_triangular_past_first_zero() {
        let w = build_window(1, 1.0).unwrap();
        let tri = MatrixCovarianceModel::univariate(IsotropicCovariance::triangular(1.0, 1.0).unwrap(), 1).unwrap();
        match compute_delta2(&w, &tri, 2.0 * PI + 0.5, 2001) {
            Err(Error::SpectralFloor { argmin, .. }) => assert!((argmin[0].abs() - 2.0 * PI).abs() < 1e-2),
            other => panic!("expected a spectral floor failure, got {other:?}"),
        }
    }

    #[test]
    fn exponential_grid_sandwich() {
        let model = expo(1.0, 1);
        let design = make_grid_design(1, &[50], 1.0, None).unwrap();
        let b = certify(&model, &design, &CertifyOptions::default()).unwrap();
        assert!(b.value > 0.0);
        assert!(b.value <= lambda1(&model, &design));
        assert!((b.value - 0.5 * b.h0 * b.delta * b.delta2).abs() <= 1e-14 * b.value);
        assert!(b.row_sum_worst <= 0.5 * b.h0);
    }

    #[test]
    fn single_point_sandwich() {
        let model = expo(1.0, 2);
        let design = Design::new(2, vec![vec![vec![0.0, 0.0]]]).unwrap();
        let b = certify(&model, &design, &CertifyOptions::default()).unwrap();
        assert!(b.value > 0.0 && b.value <= 1.0);
    }

    #[test]
    fn triangular_half_grid_fails() {
        let tri = MatrixCovarianceModel::univariate(IsotropicCovariance::triangular(1.0, 1.0).unwrap(), 1).unwrap();
        let design = make_grid_design(1, &[64], 0.5, Some(&[vec![0.5]])).unwrap();
        let err = certify(&tri, &design, &CertifyOptions::default()).unwrap_err();
        match err {
            Error::SpectralFloor { value, argmin } => {
                assert!(value <= FLOOR_EPS);
                let k = (argmin[0].abs() / (2.0 * PI)).round();
                assert!(k >= 1.0 && (argmin[0].abs() - 2.0 * PI * k).abs() < 1e-2);
            }
            other => panic!("expected spectral floor failure, got {other}"),
        }
    }

    #[test]
    fn uniform_bound_cases() {
        let design = make_grid_design(1, &[40], 1.0, None).unwrap();
        let opts = CertifyOptions::default();
        let family = |th: &[f64]| -> Result<MatrixCovarianceModel> {
            MatrixCovarianceModel::univariate(IsotropicCovariance::exponential(1.0, th[0])?, 1)
        };
        let single = certify_uniform(family, &[vec![1.0]], &design, &opts).unwrap();
        let direct = certify(&expo(1.0, 1), &design, &opts).unwrap();
        assert_eq!(single.value, direct.value);

        let grid = vec![vec![0.5], vec![1.0], vec![2.0]];
        let uni = certify_uniform(family, &grid, &design, &opts).unwrap();
        assert_eq!(uni.parameter_count, 3);
        for th in &grid {
            let m = family(th).unwrap();
            assert!(uni.value <= certify(&m, &design, &opts).unwrap().value);
            assert!(uni.value <= lambda1(&m, &design) + 1e-10);
        }

        let with_tri = |th: &[f64]| -> Result<MatrixCovarianceModel> {
            let latent = if th[0] > 5.0 {
                IsotropicCovariance::triangular(1.0, 1.0)?
            } else {
                IsotropicCovariance::exponential(1.0, th[0])?
            };
            MatrixCovarianceModel::univariate(latent, 1)
        };
        let half = make_grid_design(1, &[40], 0.5, None).unwrap();
        let err = certify_uniform(with_tri, &[vec![1.0], vec![9.0]], &half, &opts).unwrap_err();
        assert!(err.to_string().contains("θ = [9.0]"), "{err}");
    }

    #[test]
    fn family_delta_properties() {
        let w = build_window(1, 1.0).unwrap();
        let env = *w.envelope();
        let fd = family_delta(&w, 1.0, &env).unwrap();
        let fd2 = family_delta(&w, 2.0, &env).unwrap();
        assert!((fd2 - 0.5 * fd).abs() < 1e-15);
        assert!(packing_row_sum(&w, fd, 1.0) <= 0.5 * w.h0());
        for seed in 0..20 {
            let design = make_random_min_dist(1, &[40], 1.0, &[(0.0, 80.0)], seed).unwrap();
            let base = ladder_base(&design).unwrap();
            let (dd, _) = find_delta(&w, &design).unwrap();
            assert!(family_delta(&w, base, &env).unwrap() >= dd);
        }
        let weak = DecayEnvelope { b: 1e-6, ..env };
        assert!(matches!(family_delta(&w, 1.0, &weak), Err(Error::Contract(_))));
    }

    #[test]
    fn lmc_two_dimensional_sandwich() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.5, 0.8]);
        let model = MatrixCovarianceModel::new(
            vec![LmcComponent::new(a, IsotropicCovariance::matern(1.0, 0.7, 1.5).unwrap()).unwrap()],
            2,
        )
        .unwrap();
        let design = make_random_min_dist(2, &[20, 15], 0.6, &[(0.0, 5.0), (0.0, 5.0)], 8).unwrap();
        let b = certify(&model, &design, &CertifyOptions::default()).unwrap();
        assert!(b.value > 0.0 && b.value <= lambda1(&model, &design) + 1e-10);
    }
}
