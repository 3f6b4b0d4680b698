//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use specfloor::certifier::{
    build_window, certify, certify_uniform, check_comparison, find_delta, CertifyMode, CertifyOptions,
};
use specfloor::covmodels::{IsotropicCovariance, LmcComponent, MatrixCovarianceModel};
use specfloor::designs::{make_grid_design, make_random_min_dist, Design};
use specfloor::matrixops::{
    assemble_sigma, eigenvalues, schur_product, smallest_eigenvalue, taper_floor, tridiag_toeplitz_eigs, TaperMatrix,
};
use specfloor::spectral::{inverse_fourier, inversion_audit, InversionQuad};
use specfloor::{Error, Result};

const COUNTEREXAMPLE_LAMBDA_TOL: f64 = 1e-8;
const COUNTEREXAMPLE_SPECTRUM_TOL: f64 = 1e-10;
const COUNTEREXAMPLE_BUDGET: Duration = Duration::from_secs(30);
const SANDWICH_CASES: usize = 50;
const SANDWICH_TOL: f64 = 1e-10;
const SANDWICH_MAX_N: usize = 600;
const SANDWICH_BUDGET: Duration = Duration::from_secs(300);
const N_INDEPENDENCE_TOL: f64 = 1e-12;
const INVERSION_TOL: f64 = 1e-6;
const ORIGIN_TOL: f64 = 1e-8;
const ZERO_LOCATION_TOL: f64 = 1e-2;
const TAPER_PAIRS: usize = 100;
const TAPER_SLACK: f64 = -1e-10;
const UNIFORM_TOL: f64 = 1e-10;
const GERSHGORIN_TOL: f64 = 1e-12;
const QUADRATIC_FORM_TOL: f64 = 1e-8;
const QUADRATIC_FORM_TRIALS: usize = 20;

type Check = std::result::Result<String, String>;

fn univariate(latent: Result<IsotropicCovariance>, d: usize) -> MatrixCovarianceModel {
    MatrixCovarianceModel::univariate(latent.unwrap(), d).unwrap()
}

fn lambda1(model: &MatrixCovarianceModel, design: &Design) -> f64 {
    smallest_eigenvalue(&assemble_sigma(model, design).unwrap().entries, 1e-12).unwrap()
}

fn triangular_half_grid(n: usize) -> Design {
    make_grid_design(1, &[n], 0.5, Some(&[vec![0.5]])).unwrap()
}

fn counterexample() -> Check {
    let start = Instant::now();
    let tri = univariate(IsotropicCovariance::triangular(1.0, 1.0), 1);
    let mut previous = f64::INFINITY;
    let mut worst_l1: f64 = 0.0;
    let mut worst_spec: f64 = 0.0;
    for n in [4, 16, 64, 256, 512] {
        let sigma = assemble_sigma(&tri, &triangular_half_grid(n)).map_err(|e| e.to_string())?;
        let mut ev = eigenvalues(&sigma.entries).map_err(|e| e.to_string())?;
        let closed = 1.0 + (n as f64 * PI / (n as f64 + 1.0)).cos();
        worst_l1 = worst_l1.max((ev[0] - closed).abs());
        ev.reverse();
        for (a, b) in ev.iter().zip(tridiag_toeplitz_eigs(n, 1.0, 0.5)) {
            worst_spec = worst_spec.max((a - b).abs());
        }
        if !(ev[n - 1] < previous && ev[n - 1] > 0.0) {
            return Err(format!("λ₁ not decreasing toward 0 at n = {n}"));
        }
        previous = ev[n - 1];
    }
    let elapsed = start.elapsed();
    let ok = worst_l1 <= COUNTEREXAMPLE_LAMBDA_TOL
        && worst_spec <= COUNTEREXAMPLE_SPECTRUM_TOL
        && elapsed < COUNTEREXAMPLE_BUDGET;
    let msg = format!(
        "max |λ₁ − closed form| = {worst_l1:.2e}, max spectrum error = {worst_spec:.2e}, λ₁(512) = {previous:.3e}, {:.1}s",
        elapsed.as_secs_f64()
    );
    if ok {
        Ok(msg)
    } else {
        Err(msg)
    }
}

/// Random LMC with `p` rank-one components whose loadings are generically
/// independent, so the spectral matrix is positive definite everywhere.
fn random_lmc(rng: &mut ChaCha8Rng, p: usize, d: usize) -> MatrixCovarianceModel {
    let comps = (0..p)
        .map(|r| {
            let mut a = DMatrix::from_fn(p, 1, |_, _| rng.random_range(-0.5..0.5));
            a[(r, 0)] += 1.0;
            let range = rng.random_range(0.3..2.0);
            let latent = if rng.random_bool(0.5) {
                IsotropicCovariance::exponential(1.0, range)
            } else {
                IsotropicCovariance::matern(1.0, range, 1.5)
            };
            LmcComponent::new(a, latent.unwrap()).unwrap()
        })
        .collect();
    MatrixCovarianceModel::new(comps, d).unwrap()
}

fn random_design(rng: &mut ChaCha8Rng, p: usize, d: usize) -> Design {
    let budget = SANDWICH_MAX_N / p;
    let counts: Vec<usize> = (0..p).map(|_| rng.random_range(1..=budget.min(if d == 1 { 150 } else { 120 }))).collect();
    if rng.random_bool(0.5) {
        let spacing = rng.random_range(0.3..1.5);
        let offsets: Vec<Vec<f64>> = (0..p).map(|_| (0..d).map(|_| rng.random_range(0.0..spacing)).collect()).collect();
        make_grid_design(d, &counts, spacing, Some(&offsets)).unwrap()
    } else {
        let delta = rng.random_range(0.3..1.0);
        let side = if d == 1 { 400.0 } else { 25.0 };
        let region = vec![(0.0, side); d];
        make_random_min_dist(d, &counts, delta, &region, rng.random_range(0..u64::MAX)).unwrap()
    }
}

fn sandwich() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let opts = CertifyOptions::default();
    let mut min_margin = f64::INFINITY;
    let mut min_bound = f64::INFINITY;
    let mut kinds = [0usize; 4];
    for case in 0..SANDWICH_CASES {
        let d = 1 + case % 2;
        let p = 1 + (case / 2) % 3;
        let model = random_lmc(&mut rng, p, d);
        let design = random_design(&mut rng, p, d);
        if design.total() > SANDWICH_MAX_N {
            return Err(format!("case {case}: N = {} above {SANDWICH_MAX_N}", design.total()));
        }
        kinds[(d - 1) * 2 + usize::from(p > 1)] += 1;
        let b = certify(&model, &design, &opts).map_err(|e| format!("case {case} (d = {d}, p = {p}): {e}"))?;
        let l1 = lambda1(&model, &design);
        if !(b.value > 0.0 && b.value <= l1 + SANDWICH_TOL) {
            return Err(format!("case {case}: bound {:e} vs λ₁ {l1:e}", b.value));
        }
        min_margin = min_margin.min(l1 - b.value);
        min_bound = min_bound.min(b.value);
    }
    let elapsed = start.elapsed();
    let msg = format!(
        "{SANDWICH_CASES} cases (d1/p1 {}, d1/p>1 {}, d2/p1 {}, d2/p>1 {}), min bound {min_bound:.3e}, min λ₁ − bound {min_margin:.3e}, {:.1}s",
        kinds[0],
        kinds[1],
        kinds[2],
        kinds[3],
        elapsed.as_secs_f64()
    );
    if elapsed < SANDWICH_BUDGET {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn n_independence() -> Check {
    let model = univariate(IsotropicCovariance::exponential(1.0, 1.0), 1);
    let design_opts = CertifyOptions::default();
    let family_opts = CertifyOptions {
        mode: CertifyMode::FamilyCertified,
        ..CertifyOptions::default()
    };
    let mut design_vals = Vec::new();
    let mut family_vals = Vec::new();
    for n in [25, 100, 400] {
        let design = make_grid_design(1, &[n], 1.0, None).unwrap();
        let db = certify(&model, &design, &design_opts).map_err(|e| e.to_string())?;
        let fb = certify(&model, &design, &family_opts).map_err(|e| e.to_string())?;
        let l1 = lambda1(&model, &design);
        if l1 < db.value || l1 < fb.value {
            return Err(format!("n = {n}: λ₁ {l1:e} below a bound ({:e}, {:e})", db.value, fb.value));
        }
        design_vals.push(db.value);
        family_vals.push(fb.value);
    }
    let family_const = family_vals.iter().all(|&v| v == family_vals[0]);
    let spread = design_vals.iter().fold(f64::NEG_INFINITY, |a: f64, &b| a.max(b))
        - design_vals.iter().fold(f64::INFINITY, |a: f64, &b| a.min(b));
    let msg = format!(
        "family bound {:.6e} (constant: {family_const}), design bound spread {spread:.1e}",
        family_vals[0]
    );
    if family_const && spread < N_INDEPENDENCE_TOL {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn inversion() -> Check {
    let quad = InversionQuad::default();
    let lags: Vec<Vec<f64>> = [0.0, 0.5, 1.0, 2.0, 5.0].iter().map(|&x| vec![x]).collect();
    let cases = [
        ("exponential", univariate(IsotropicCovariance::exponential(1.0, 1.0), 1)),
        ("matern-3/2", univariate(IsotropicCovariance::matern(1.0, 1.0, 1.5), 1)),
        ("triangular", univariate(IsotropicCovariance::triangular(1.0, 1.0), 1)),
    ];
    let mut parts = Vec::new();
    for (name, model) in &cases {
        let rep = inversion_audit(model, &lags, &quad, INVERSION_TOL).map_err(|e| e.to_string())?;
        let (c0, _) = inverse_fourier(model, 0, 0, 0.0, &quad).map_err(|e| e.to_string())?;
        let origin_err = (c0.re - 1.0).abs().max(c0.im.abs());
        if !rep.pass || origin_err > ORIGIN_TOL {
            return Err(format!("{name}: audit pass = {}, |∫ĉ − c(0)| = {origin_err:.2e}", rep.pass));
        }
        parts.push(format!("{name} worst error {:.1e}, c(0) error {origin_err:.1e}", INVERSION_TOL - rep.worst_margin));
    }
    Ok(parts.join("; "))
}

fn spectral_necessity() -> Check {
    let tri = univariate(IsotropicCovariance::triangular(1.0, 1.0), 1);
    match certify(&tri, &triangular_half_grid(64), &CertifyOptions::default()) {
        Err(Error::SpectralFloor { value, argmin }) => {
            let f = argmin[0].abs();
            let k = (f / (2.0 * PI)).round().max(1.0);
            let dist = (f - 2.0 * PI * k).abs();
            let msg = format!("refused: floor {value:.2e} at f = {f:.6}, {dist:.1e} from 2π·{k}");
            if dist <= ZERO_LOCATION_TOL {
                Ok(msg)
            } else {
                Err(msg)
            }
        }
        Ok(b) => Err(format!("certified a bound {:e} for the triangular model", b.value)),
        Err(e) => Err(format!("unexpected error: {e}")),
    }
}

fn taper() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut worst = f64::INFINITY;
    for _ in 0..TAPER_PAIRS {
        let n = rng.random_range(2..25);
        let b = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0f64..1.0));
        let sigma = &b * b.transpose() + DMatrix::identity(n, n) * rng.random_range(0.0..0.5);
        let k = rng.random_range(1..=n);
        let c = DMatrix::from_fn(n, k, |_, _| rng.random_range(-1.0f64..1.0));
        let g = &c * c.transpose();
        let mut a = DMatrix::from_fn(n, n, |i, j| g[(i, j)] / f64::sqrt(g[(i, i)] * g[(j, j)]));
        a.fill_diagonal(1.0);
        let taper = TaperMatrix::new(a).map_err(|e| e.to_string())?;
        let l1 = smallest_eigenvalue(&sigma, 1e-12).unwrap().max(0.0);
        let tapered = smallest_eigenvalue(&schur_product(&sigma, &taper).unwrap(), 1e-12).unwrap();
        worst = worst.min(tapered - taper_floor(l1, &taper).unwrap());
    }
    let sigma = DMatrix::from_fn(6, 6, |i, j| (-(i.abs_diff(j) as f64)).exp());
    let ones = TaperMatrix::new(DMatrix::from_element(6, 6, 1.0)).unwrap();
    let l1 = smallest_eigenvalue(&sigma, 1e-12).unwrap();
    let equal = schur_product(&sigma, &ones).unwrap() == sigma && taper_floor(l1, &ones).unwrap() == l1;
    let msg = format!("{TAPER_PAIRS} pairs, worst slack {worst:.2e}, all-ones equality {equal}");
    if worst >= TAPER_SLACK && equal {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn uniform() -> Check {
    let design = make_random_min_dist(1, &[120], 0.8, &[(0.0, 150.0)], 5).unwrap();
    let opts = CertifyOptions::default();
    let family = |th: &[f64]| MatrixCovarianceModel::univariate(IsotropicCovariance::exponential(1.0, th[0])?, 1);
    let grid = vec![vec![0.5], vec![1.0], vec![2.0]];
    let ub = certify_uniform(family, &grid, &design, &opts).map_err(|e| e.to_string())?;
    let mut min_cert = f64::INFINITY;
    let mut min_l1 = f64::INFINITY;
    for th in &grid {
        let m = family(th).unwrap();
        min_cert = min_cert.min(certify(&m, &design, &opts).map_err(|e| e.to_string())?.value);
        min_l1 = min_l1.min(lambda1(&m, &design));
    }
    let msg = format!("uniform {:.4e}, min certify {min_cert:.4e}, min λ₁ {min_l1:.4e}", ub.value);
    if ub.value > 0.0 && ub.value <= min_cert && ub.value <= min_l1 + UNIFORM_TOL {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn proof_internals() -> Check {
    let designs = [
        make_grid_design(1, &[200], 1.0, None).unwrap(),
        make_random_min_dist(1, &[80, 60], 0.7, &[(0.0, 100.0)], 3).unwrap(),
        make_grid_design(2, &[100, 64], 0.5, Some(&[vec![0.0, 0.0], vec![0.25, 0.25]])).unwrap(),
        make_random_min_dist(2, &[150], 0.4, &[(0.0, 10.0), (0.0, 10.0)], 8).unwrap(),
    ];
    let mut worst_rs_ratio: f64 = 0.0;
    let mut worst_gersh = f64::INFINITY;
    let mut worst_quad = f64::INFINITY;
    for (i, design) in designs.iter().enumerate() {
        let w = build_window(design.d(), 1.0).unwrap();
        let (delta, rs) = find_delta(&w, design).map_err(|e| e.to_string())?;
        let check = check_comparison(&w, design, delta, QUADRATIC_FORM_TRIALS, 100 + i as u64);
        let half = 0.5 * w.h0();
        if check.row_sum_worst > half || rs > half {
            return Err(format!("design {i}: row sum {:e} > h0/2", check.row_sum_worst));
        }
        worst_rs_ratio = worst_rs_ratio.max(check.row_sum_worst / half);
        worst_gersh = worst_gersh.min(check.gershgorin_floor - (half - GERSHGORIN_TOL));
        worst_quad = worst_quad.min(check.quadratic_form_slack + QUADRATIC_FORM_TOL);
    }
    let msg = format!(
        "max row sum / (h0/2) = {worst_rs_ratio:.3}, Gershgorin margin {worst_gersh:.2e}, quadratic-form margin {worst_quad:.2e}"
    );
    if worst_gersh >= 0.0 && worst_quad >= 0.0 {
        Ok(msg)
    } else {
        Err(msg)
    }
}

type Criterion = (&'static str, fn() -> Check);

fn main() {
    let criteria: [Criterion; 8] = [
        ("counterexample spectrum", counterexample),
        ("certified bound below λ₁", sandwich),
        ("bound independent of n", n_independence),
        ("Fourier inversion", inversion),
        ("spectral positivity is necessary", spectral_necessity),
        ("taper Schur bound", taper),
        ("uniform bound over a parameter grid", uniform),
        ("comparison-matrix internals", proof_internals),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|_| Err("panicked".to_string()));
        match outcome {
            Ok(msg) => println!("criterion {}: PASS  {name}: {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("criterion {}: FAIL  {name}: {msg}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
