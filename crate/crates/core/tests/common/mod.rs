#![allow(dead_code)]

use icselect::augmentation::em_update;
use icselect::data::{IntervalDataset, IntervalObservation};
use icselect::hazard::{CoxParams, StepCumHazard, StepDirection};
use icselect::info::{info_ls, richardson_rows, InfoEstimate, InfoMethod};
use icselect::lasso::{extract_selection, lasso_fit, LassoFit, LambdaRule, PenaltyConfig, SelectionEvent, TOL_KKT};
use icselect::likelihood::{log_likelihood, nuisance_score_along, score_beta, score_beta_terms};
use icselect::linalg::{min_eigenvalue, spd_inverse};
use icselect::normal::truncated_normal_cdf;
use icselect::npmle::ProfileSolver;
use icselect::selective::{build_pivot, selective_ci, selective_pvalue, truncation_limits, PivotSpec};
use icselect::sim::{gen_dataset, replication_rng, InspectionScheme, SimScenario};
use icselect::turnbull::support_points;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn config(cases: u32) -> proptest::test_runner::Config {
    proptest::test_runner::Config {
        cases,
        failure_persistence: None,
        ..Default::default()
    }
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    icselect::sim::replication_rng(seed, 0)
}

/// Random brackets over a coarse time grid; at least one right endpoint is finite.
pub fn random_dataset(seed: u64, n: usize, p: usize) -> IntervalDataset {
    let mut r = rng(seed);
    let grid = [0.5, 1.0, 1.5, 2.0, 3.0, 4.0];
    let mut obs = Vec::with_capacity(n);
    for i in 0..n {
        let x: Vec<f64> = (0..p).map(|_| r.sample::<f64, _>(StandardNormal)).collect();
        let a = r.random_range(0..grid.len());
        let left = if r.random_bool(0.3) { 0.0 } else { grid[a] };
        let right = if i > 0 && r.random_bool(0.25) {
            f64::INFINITY
        } else {
            let later: Vec<f64> = grid.iter().copied().filter(|g| *g > left).collect();
            if later.is_empty() {
                left + 1.0
            } else {
                later[r.random_range(0..later.len())]
            }
        };
        obs.push(IntervalObservation::new(left, right, x));
    }
    IntervalDataset::new(obs).unwrap()
}

pub fn random_params(seed: u64, data: &IntervalDataset) -> CoxParams {
    let mut r = rng(seed ^ 0x9e37);
    let support = support_points(data).unwrap();
    let jumps = (0..support.len()).map(|_| r.random_range(0.05..0.8)).collect();
    let beta = (0..data.p()).map(|_| r.random_range(-1.0..1.0)).collect();
    CoxParams::new(beta, StepCumHazard::new(support, jumps).unwrap()).unwrap()
}

fn rel_close(a: f64, b: f64, rel: f64) -> bool {
    (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-3)
}

/// Mean beta score against central differences of the log likelihood.
pub fn check_score_fd(seed: u64, n: usize, p: usize) -> Result<(), String> {
    let data = random_dataset(seed, n, p);
    let params = random_params(seed, &data);
    let s = score_beta(&data, &params).map_err(|e| e.to_string())?;
    let h = 1e-5;
    for j in 0..p {
        let mut up = params.clone();
        let mut dn = params.clone();
        up.beta[j] += h;
        dn.beta[j] -= h;
        let fd = (log_likelihood(&data, &up).unwrap() - log_likelihood(&data, &dn).unwrap())
            / (2.0 * h * n as f64);
        if !rel_close(s[j], fd, 1e-5) {
            return Err(format!("seed {seed}: score {} vs finite difference {fd}", s[j]));
        }
    }
    Ok(())
}

/// Summed nuisance score along a random signed direction against central
/// differences along the same direction.
pub fn check_nuisance_fd(seed: u64, n: usize, p: usize) -> Result<(), String> {
    let data = random_dataset(seed, n, p);
    let params = random_params(seed, &data);
    let mut r = rng(seed ^ 0x51);
    let support = params.lambda0.support().to_vec();
    let inc: Vec<f64> = (0..support.len()).map(|_| r.random_range(-0.5..0.5)).collect();
    let dir = StepDirection::new(support.clone(), inc.clone()).unwrap();
    let an: f64 = nuisance_score_along(&data, &params, &dir).unwrap().iter().sum();
    let s = 1e-6;
    let moved = |t: f64| {
        let jumps = params.lambda0.jumps().iter().zip(&inc).map(|(j, d)| j + t * d).collect();
        CoxParams::new(params.beta.clone(), StepCumHazard::new(support.clone(), jumps).unwrap()).unwrap()
    };
    let fd = (log_likelihood(&data, &moved(s)).unwrap() - log_likelihood(&data, &moved(-s)).unwrap()) / (2.0 * s);
    if !rel_close(an, fd, 1e-5) {
        return Err(format!("seed {seed}: nuisance score {an} vs finite difference {fd}"));
    }
    Ok(())
}

/// Concavity of the log likelihood in the jump vector for fixed beta.
pub fn check_jump_concavity(seed: u64) -> Result<(), String> {
    let data = random_dataset(seed, 12, 2);
    let p1 = random_params(seed, &data);
    let p2 = random_params(seed.wrapping_add(1), &data);
    let mut r = rng(seed ^ 0xc0);
    let t: f64 = r.random_range(0.0..1.0);
    let jumps = p1.lambda0.jumps().iter().zip(p2.lambda0.jumps()).map(|(a, b)| t * a + (1.0 - t) * b).collect();
    let mid = CoxParams::new(p1.beta.clone(), StepCumHazard::new(p1.lambda0.support().to_vec(), jumps).unwrap()).unwrap();
    let p2 = CoxParams::new(p1.beta.clone(), p2.lambda0.clone()).unwrap();
    let lm = log_likelihood(&data, &mid).unwrap();
    let chord = t * log_likelihood(&data, &p1).unwrap() + (1.0 - t) * log_likelihood(&data, &p2).unwrap();
    if lm < chord - 1e-10 {
        return Err(format!("seed {seed}: {lm} below chord {chord}"));
    }
    Ok(())
}

/// Evaluation depends only on the ordering of times.
pub fn check_shift_invariance(seed: u64, offset: f64) -> Result<(), String> {
    let data = random_dataset(seed, 15, 2);
    let params = random_params(seed, &data);
    let shifted = data.shifted(offset);
    let support: Vec<f64> = params.lambda0.support().iter().map(|u| u + offset).collect();
    let moved = CoxParams::new(
        params.beta.clone(),
        StepCumHazard::new(support, params.lambda0.jumps().to_vec()).unwrap(),
    )
    .unwrap();
    let a = log_likelihood(&data, &params).unwrap();
    let b = log_likelihood(&shifted, &moved).unwrap();
    if a != b {
        return Err(format!("seed {seed}: {a} != {b}"));
    }
    Ok(())
}

/// Golden-section maximum of a unimodal function on `[lo, hi]`.
pub fn golden_max(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, iters: usize) -> (f64, f64) {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..iters {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Six subjects, one covariate, two maximal intersections.
pub fn tiny_lasso_data() -> IntervalDataset {
    let rows = [
        (0.0, 1.0, 0.3),
        (0.5, 2.0, -0.8),
        (1.5, 4.0, 1.2),
        (0.0, 2.2, 0.5),
        (1.2, f64::INFINITY, -1.0),
        (0.8, f64::INFINITY, 0.1),
    ];
    IntervalDataset::new(rows.iter().map(|&(l, r, x)| IntervalObservation::new(l, r, vec![x])).collect()).unwrap()
}

/// `max P_n l - (lambda/n)|b|` by a dense beta grid with golden refinement
/// and nested golden sections over the two jumps.
pub fn brute_force_lasso(data: &IntervalDataset, lambda: f64) -> f64 {
    let support = support_points(data).unwrap();
    assert_eq!(support.len(), 2);
    let n = data.n() as f64;
    let profile = |b: f64| -> f64 {
        let ll = |j1: f64, j2: f64| {
            let h = StepCumHazard::new(support.clone(), vec![j1, j2]).unwrap();
            log_likelihood(data, &CoxParams::new(vec![b], h).unwrap()).unwrap_or(f64::NEG_INFINITY) / n
        };
        let inner = |j1: f64| golden_max(&|j2| ll(j1, j2), 0.0, 30.0, 80).1;
        golden_max(&inner, 0.0, 30.0, 80).1 - lambda / n * b.abs()
    };
    let mut best = (0.0, profile(0.0));
    for i in -200..=200 {
        let b = i as f64 * 0.025;
        let v = profile(b);
        if v > best.1 {
            best = (b, v);
        }
    }
    let refined = golden_max(&profile, best.0 - 0.025, best.0 + 0.025, 60);
    refined.1.max(best.1)
}

/// A converged-looking fit object at arbitrary `(beta, hazard)` for the
/// information estimators, which only read the parameters.
pub fn fit_at(data: &IntervalDataset, params: &CoxParams) -> LassoFit {
    LassoFit {
        beta: params.beta.clone(),
        lambda0: params.lambda0.clone(),
        penalty: PenaltyConfig { lambda: 0.0, rule: LambdaRule::Fixed },
        objective: f64::NAN,
        mean_loglik: f64::NAN,
        score: vec![0.0; data.p()],
        kkt_active_residual: 0.0,
        kkt_inactive_slack: f64::INFINITY,
        iterations: 0,
        converged: true,
        capped: false,
        trace: Vec::new(),
        n: data.n(),
    }
}

/// `n P_n (l_beta - G a)^2` with `a` the explicit least-squares fit of the
/// beta score on the nuisance scores along the unit steps, against the
/// Schur form.
pub fn check_ls_residual_form(seed: u64) -> Result<(), String> {
    let mut r = rng(seed ^ 0x15);
    let n = r.random_range(5..=10);
    let data = loop {
        let d = random_dataset(seed.wrapping_mul(31).wrapping_add(r.random_range(0..1000)), n, 1);
        let m = support_points(&d).unwrap().len();
        if m <= 3 {
            break d;
        }
    };
    let params = random_params(seed, &data);
    let est = info_ls(&data, &fit_at(&data, &params)).map_err(|e| e.to_string())?;
    let support = params.lambda0.support().to_vec();
    let m = support.len();
    let lb: Vec<f64> = score_beta_terms(&data, &params).unwrap().iter().map(|v| v[0]).collect();
    let mut g = DMatrix::zeros(n, m);
    for k in 0..m {
        let col = nuisance_score_along(&data, &params, &StepDirection::unit(&support, k)).unwrap();
        g.set_column(k, &DVector::from_vec(col));
    }
    let y = DVector::from_vec(lb);
    let a = g.clone().svd(true, true).solve(&y, 1e-13).map_err(|e| e.to_string())?;
    let resid = &y - &g * a;
    let oracle = resid.norm_squared();
    let got = est.matrix[(0, 0)];
    if (got - oracle).abs() > 1e-6 * oracle.abs().max(1.0) {
        return Err(format!("seed {seed}: Schur form {got} vs residual form {oracle}"));
    }
    Ok(())
}

/// `{t : A (z + c t) <= b}` by a dense grid on `[-span, span]`.
pub fn grid_limits(a: &DMatrix<f64>, b: &DVector<f64>, c: &DVector<f64>, z: &DVector<f64>, span: f64, k: usize) -> Option<(f64, f64)> {
    let mut lo = None;
    let mut hi = None;
    for i in 0..=k {
        let t = -span + 2.0 * span * i as f64 / k as f64;
        let inside = (a * (z + c * t) - b).iter().all(|v| *v <= 0.0);
        if inside {
            lo.get_or_insert(t);
            hi = Some(t);
        }
    }
    lo.zip(hi)
}

/// A feasible pivot from random inputs: PD information, signs, and a
/// `theta_bar` strictly inside its polyhedron.
pub fn random_spec(seed: u64) -> (PivotSpec, Vec<f64>) {
    let mut r = rng(seed);
    let k = r.random_range(1..=3);
    let n = 100;
    let b = DMatrix::from_fn(k, k, |_, _| r.random_range(-1.0..1.0));
    let info = (&b * b.transpose() + DMatrix::identity(k, k) * 0.3) * n as f64;
    let sel = SelectionEvent {
        model: (0..k).collect(),
        signs: (0..k).map(|_| if r.random_bool(0.5) { 1 } else { -1 }).collect(),
    };
    let lambda = r.random_range(0.5..20.0);
    let est = InfoEstimate { matrix: info.clone(), method: InfoMethod::Spres, epsilon: None, symmetrized: true, min_eig_mm: None };
    let inv = spd_inverse(&(info / n as f64)).unwrap();
    let s = DVector::from_vec(sel.signs_f64());
    let bound = &inv * &s * (lambda / (n as f64).sqrt());
    let theta: Vec<f64> = (0..k).map(|j| bound[j] + s[j] * r.random_range(0.01..4.0)).collect();
    let mut gamma: Vec<f64> = (0..k).map(|_| r.random_range(-1.0..1.0)).collect();
    if gamma.iter().all(|g| g.abs() < 1e-3) {
        gamma[0] = 1.0;
    }
    (build_pivot(&theta, &sel, &est, lambda, n, &gamma).unwrap(), theta)
}

/// Truncation limits of a random polyhedron against a dense grid; limits
/// beyond the grid span must show up as the span itself.
pub fn check_grid_limits(seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let k = r.random_range(1..=3);
    let a = DMatrix::from_fn(k, k, |_, _| r.random_range(-1.0..1.0));
    let b = DVector::from_fn(k, |_, _| r.random_range(0.0..2.0));
    let c = DVector::from_fn(k, |_, _| r.random_range(-1.0..1.0));
    let z = DVector::from_fn(k, |_, _| r.random_range(-0.5..0.5));
    let span = 40.0;
    let steps = 80_000;
    let h = 2.0 * span / steps as f64;
    let grid = grid_limits(&a, &b, &c, &z, span, steps);
    match truncation_limits(&a, &b, &c, &z) {
        Ok((lo, hi)) => {
            let (glo, ghi) = grid.ok_or(format!("seed {seed}: grid found nothing in [{lo}, {hi}]"))?;
            let lo_ok = if lo > -span { (glo - lo).abs() <= h } else { glo == -span };
            let hi_ok = if hi < span { (ghi - hi).abs() <= h } else { ghi == span };
            if !(lo_ok && hi_ok) {
                return Err(format!("seed {seed}: [{lo}, {hi}] vs grid [{glo}, {ghi}]"));
            }
        }
        Err(e) => {
            if !grid.is_none_or(|(l, u)| u - l <= h) {
                return Err(format!("seed {seed}: {e} but the grid found {grid:?}"));
            }
        }
    }
    Ok(())
}

/// `F(u) = 0`, `F(v) = 1` and `F` nondecreasing on a grid in `x`.
pub fn check_cdf_shape(theta: f64, s2: f64, u: f64, w: f64) -> Result<(), String> {
    let v = u + w;
    let f = |x: f64| truncated_normal_cdf(x, theta, s2, u, v).map_err(|e| e.to_string());
    if f(u)? != 0.0 || f(v)? != 1.0 {
        return Err(format!("endpoints {} and {} on [{u}, {v}]", f(u)?, f(v)?));
    }
    let mut prev = 0.0;
    for i in 0..=50 {
        let x = u + w * i as f64 / 50.0;
        let fx = f(x)?;
        if !(0.0..=1.0).contains(&fx) || fx < prev - 1e-15 {
            return Err(format!("F({x}) = {fx} after {prev}"));
        }
        prev = fx;
    }
    Ok(())
}

/// Decreasing in `theta` over 100 values spanning `x +- 8 sigma`.
pub fn check_theta_monotone(x: f64, s2: f64, u: f64, w: f64) -> Result<(), String> {
    let v = u + w;
    let sigma = s2.sqrt();
    let mut prev = f64::INFINITY;
    for i in 0..100 {
        let theta = x - 8.0 * sigma + 16.0 * sigma * i as f64 / 99.0;
        let f = truncated_normal_cdf(x, theta, s2, u, v).map_err(|e| e.to_string())?;
        if f > prev + 1e-12 {
            return Err(format!("F rose to {f} from {prev} at theta {theta}"));
        }
        prev = f;
    }
    Ok(())
}

/// `null` inside the `1 - alpha` interval iff its p-value is at least `alpha`.
pub fn check_duality(seed: u64, alpha: f64, pos: f64) -> Result<(), String> {
    let (spec, theta) = random_spec(seed);
    let (lo, hi) = selective_ci(&spec, &theta, alpha).map_err(|e| e.to_string())?;
    let width = if lo.is_finite() && hi.is_finite() { hi - lo } else { 10.0 * spec.sigma() };
    let base = if lo.is_finite() { lo } else { hi - width };
    let null = base + pos * width;
    let p = selective_pvalue(&spec, &theta, null).map_err(|e| e.to_string())?;
    let f = spec.cdf(&theta, null).map_err(|e| e.to_string())?;
    // skip nulls whose pivot sits within the root tolerance of a cut
    let near = (f - alpha / 2.0).abs() < 1e-8 || (f - (1.0 - alpha / 2.0)).abs() < 1e-8;
    if !near && (lo <= null && null <= hi) != (p >= alpha) {
        return Err(format!("seed {seed}: null {null} in [{lo}, {hi}] with p {p} at alpha {alpha}"));
    }
    Ok(())
}

/// Lasso postconditions on the weak scenario at `n = 60`.
pub fn check_kkt(seed: u64, c: f64) -> Result<(), String> {
    let s = SimScenario::preset(InspectionScheme::Weak, 60);
    let data = gen_dataset(&s, &mut replication_rng(seed, 0)).unwrap();
    let fit = lasso_fit(&data, &PenaltyConfig::fixed(c).unwrap(), None).map_err(|e| e.to_string())?;
    if !fit.converged {
        return Err(format!("seed {seed}: no convergence at lambda {c}"));
    }
    if fit.kkt_active_residual > TOL_KKT || fit.kkt_inactive_slack < -TOL_KKT {
        return Err(format!(
            "seed {seed}: active residual {} inactive slack {}",
            fit.kkt_active_residual, fit.kkt_inactive_slack
        ));
    }
    extract_selection(&fit).map_err(|e| e.to_string())?;
    if let Some(w) = fit.trace.windows(2).find(|w| w[1] < w[0] - 1e-10) {
        return Err(format!("seed {seed}: objective fell from {} to {}", w[0], w[1]));
    }
    if fit.lambda0.support() != &support_points(&data).unwrap()[..] {
        return Err(format!("seed {seed}: hazard support differs from the maximal intersections"));
    }
    Ok(())
}

/// Thirty EM updates from random jumps never lower the likelihood.
pub fn check_em_monotone(seed: u64) -> Result<(), String> {
    let data = random_dataset(seed, 15, 2);
    let start = random_params(seed, &data);
    let solver = ProfileSolver::new(&data).unwrap();
    let ll = |h: &StepCumHazard| log_likelihood(&data, &CoxParams::new(start.beta.clone(), h.clone()).unwrap()).unwrap();
    let mut h = start.lambda0.clone();
    let mut prev = ll(&h);
    for _ in 0..30 {
        h = em_update(&solver, &start.beta, &h).map_err(|e| e.to_string())?;
        let cur = ll(&h);
        if cur < prev - 1e-10 {
            return Err(format!("seed {seed}: {cur} < {prev}"));
        }
        prev = cur;
    }
    Ok(())
}

/// Smallest eigenvalue of the LS estimate is nonnegative up to rounding.
pub fn check_ls_psd(seed: u64) -> Result<(), String> {
    let data = random_dataset(seed, 20, 3);
    let params = random_params(seed, &data);
    let m = info_ls(&data, &fit_at(&data, &params)).map_err(|e| e.to_string())?.matrix;
    let e = min_eigenvalue(&m);
    if e < -1e-8 * m.trace().abs() {
        return Err(format!("seed {seed}: smallest eigenvalue {e}"));
    }
    Ok(())
}

/// The five-point rule differentiates quartics exactly.
pub fn check_richardson_quartic(seed: u64) -> Result<(), String> {
    let mut r = rng(seed);
    let c: Vec<[f64; 5]> = (0..3).map(|_| std::array::from_fn(|_| r.random_range(-2.0..2.0))).collect();
    let x: Vec<f64> = (0..3).map(|_| r.random_range(-1.0..1.0)).collect();
    let poly = |c: &[f64; 5], v: f64| c[0] + v * (c[1] + v * (c[2] + v * (c[3] + v * c[4])));
    let slope = |c: &[f64; 5], v: f64| c[1] + v * (2.0 * c[2] + v * (3.0 * c[3] + v * 4.0 * c[4]));
    // f_k(x) = sum_i q_{(i + k) mod 3}(x_i)
    let f = |y: &[f64]| -> icselect::Result<Vec<f64>> {
        Ok((0..3).map(|k| (0..3).map(|i| poly(&c[(i + k) % 3], y[i])).sum()).collect())
    };
    let d = richardson_rows(f, &x, 0.125).map_err(|e| e.to_string())?;
    for i in 0..3 {
        for k in 0..3 {
            let exact = slope(&c[(i + k) % 3], x[i]);
            if (d[(i, k)] - exact).abs() > 1e-12 * exact.abs().max(1.0) {
                return Err(format!("seed {seed}: row {i} column {k}: {} vs {exact}", d[(i, k)]));
            }
        }
    }
    Ok(())
}
