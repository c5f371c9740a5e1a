//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! lists failures at the end. With `PLP_ACCEPTANCE_STRICT` set, any failure
//! makes the process exit nonzero. Pass criterion numbers as arguments to run a
//! subset, e.g. `cargo test -p plp-core --test acceptance -- 2 7`.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

use nalgebra::DMatrix;
use plp_core::linalg::CMatrix;
use plp_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

type Criterion = (u32, &'static str, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 11] = [
        (1, "solver matches brute-force proximal gradient", c1_oracle),
        (2, "smooth gradient matches central differences", c2_gradient),
        (3, "KKT conditions hold at every converged solve", c3_kkt),
        (4, "moment and dual-norm residuals", c4_moments),
        (5, "solution independent of initialization", c5_uniqueness),
        (6, "Itakura-Saito pseudo-distance is nonnegative", c6_itakura_saito),
        (7, "penalty prox matches numerical minimization", c7_prox),
        (8, "AR network replica detects added edges", c8_ar_replica),
        (9, "ARMA prior improves inverse spectrum estimate", c9_arma_replica),
        (10, "recursive supports, degree bound and flattening", c10_recursive),
        (11, "Whittle truncation identity and likelihood gap", c11_whittle),
    ];
    let wanted: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = Vec::new();
    for (id, name, run) in criteria {
        if !wanted.is_empty() && !wanted.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let out = run();
        let status = if out.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {id:>2} {status} [{:>6.1}s] {name}: {}",
            start.elapsed().as_secs_f64(),
            out.detail
        );
        if !out.pass {
            failed.push(id);
        }
    }
    if failed.is_empty() {
        println!("all selected criteria passed");
    } else {
        println!("failed criteria: {failed:?}");
        if std::env::var_os("PLP_ACCEPTANCE_STRICT").is_some() {
            std::process::exit(1);
        }
    }
}

// ---------------------------------------------------------------- helpers

fn tight() -> SolverConfig {
    SolverConfig {
        tol_grad: 1e-10,
        max_iters: 50_000,
        ..SolverConfig::default()
    }
}

fn grid(len: usize) -> Arc<Grid> {
    Arc::new(FrequencyGrid::new(len).unwrap())
}

/// Lags of a random stable VAR(1) path.
fn random_lags(rng: &mut ChaCha8Rng, m: usize, n: usize, len: usize) -> Lags {
    let a = DMatrix::<f64>::from_fn(m, m, |_, _| rng.random_range(-0.6..0.6)) / (m as f64).sqrt();
    let mut data = DMatrix::<f64>::zeros(len, m);
    let mut prev = nalgebra::DVector::<f64>::zeros(m);
    for t in 0..len + 50 {
        let e = nalgebra::DVector::<f64>::from_fn(m, |_, _| rng.sample(StandardNormal));
        let cur = &a * &prev + e;
        if t >= 50 {
            data.row_mut(t - 50).copy_from(&cur.transpose());
        }
        prev = cur;
    }
    sample_covariances(&TimeSeries::new(data).unwrap(), n).unwrap()
}

/// Random pseudo-polynomial of degree `n` scaled into the positive cone.
fn random_prior(rng: &mut ChaCha8Rng, m: usize, n: usize, g: &Arc<Grid>) -> Spectrum {
    let mut coeffs: Vec<DMatrix<f64>> = (0..=n)
        .map(|k| DMatrix::from_fn(m, m, |_, _| rng.random_range(-0.3..0.3) / (k + 1) as f64))
        .collect();
    coeffs[0] += DMatrix::identity(m, m) * (1.0 + 0.3 * m as f64 * (n + 1) as f64);
    MatrixPseudoPolynomial::new(coeffs)
        .unwrap()
        .evaluate(g)
        .into_positive()
        .unwrap()
}

fn random_support(rng: &mut ChaCha8Rng, m: usize, density: f64) -> Support {
    let mut s = Support::diagonal(m);
    for i in 0..m {
        for j in i + 1..m {
            if rng.random_bool(density) {
                s.insert(i, j).unwrap();
            }
        }
    }
    s
}

/// Random `Q` with `Ψ^{-1} + Q` positive on the grid.
fn random_feasible(rng: &mut ChaCha8Rng, prob: &Problem, scale: f64) -> PseudoPoly {
    let (m, n) = (prob.dim(), prob.order());
    let raw = MatrixPseudoPolynomial::new(
        (0..=n)
            .map(|_| DMatrix::from_fn(m, m, |_, _| rng.random_range(-scale..scale)))
            .collect(),
    )
    .unwrap();
    let raw = match prob.mask() {
        Some(mask) => raw.project_support(mask).unwrap(),
        None => raw,
    };
    let mut t = 1.0;
    loop {
        let q = raw.scale(t);
        if prob.min_domain_eigenvalue(&q) > 1e-3 {
            return q;
        }
        t *= 0.5;
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

// ------------------------------------------------ 1: brute-force oracle

/// Independent 2x2, degree-1 evaluation of the composite objective and its
/// coordinate gradient. Coordinates: `(Q0)_00, (Q0)_01, (Q0)_11, (Q1)_00,
/// (Q1)_01, (Q1)_10, (Q1)_11`.
struct Oracle {
    nodes: Vec<(f64, f64)>,
    prior: Vec<[[(f64, f64); 2]; 2]>,
    r0: [[f64; 2]; 2],
    r1: [[f64; 2]; 2],
    lambda: f64,
}

impl Oracle {
    fn new(len: usize, p0: &DMatrix<f64>, p1: &DMatrix<f64>, r: &Lags, lambda: f64) -> Self {
        let nodes: Vec<(f64, f64)> = (0..len)
            .map(|l| {
                let theta = PI * l as f64 / (len - 1) as f64;
                let w = if l == 0 || l == len - 1 { 0.5 } else { 1.0 } / (len - 1) as f64;
                (theta, w)
            })
            .collect();
        let prior = nodes
            .iter()
            .map(|&(t, _)| {
                let (c, s) = (t.cos(), t.sin());
                let mut x = [[(0.0, 0.0); 2]; 2];
                for i in 0..2 {
                    for j in 0..2 {
                        // P1 e^{-iθ} + P1^T e^{iθ}
                        let re = p0[(i, j)] + (p1[(i, j)] + p1[(j, i)]) * c;
                        let im = (p1[(j, i)] - p1[(i, j)]) * s;
                        x[i][j] = (re, im);
                    }
                }
                x
            })
            .collect();
        let lag = |k: usize| {
            let a = r.lag(k);
            [[a[(0, 0)], a[(0, 1)]], [a[(1, 0)], a[(1, 1)]]]
        };
        Self {
            nodes,
            prior,
            r0: lag(0),
            r1: lag(1),
            lambda,
        }
    }

    /// `(F, ∇f)`, or `None` outside the domain.
    fn eval(&self, v: &[f64; 7]) -> Option<(f64, [f64; 7])> {
        let [a00, a01, a11, b00, b01, b10, b11] = *v;
        let r0 = self.r0;
        let r1 = self.r1;
        let mut f = a00 * r0[0][0] + a01 * (r0[0][1] + r0[1][0]) + a11 * r0[1][1]
            + 2.0 * (b00 * r1[0][0] + b01 * r1[0][1] + b10 * r1[1][0] + b11 * r1[1][1]);
        let mut g = [
            r0[0][0],
            r0[0][1] + r0[1][0],
            r0[1][1],
            2.0 * r1[0][0],
            2.0 * r1[0][1],
            2.0 * r1[1][0],
            2.0 * r1[1][1],
        ];
        for (&(t, w), px) in self.nodes.iter().zip(&self.prior) {
            let (c, s) = (t.cos(), t.sin());
            // X = Ψ^{-1} + Q0 + Q1 e^{-iθ} + Q1^T e^{iθ}
            let p = px[0][0].0 + a00 + 2.0 * b00 * c;
            let q = px[1][1].0 + a11 + 2.0 * b11 * c;
            let cre = px[0][1].0 + a01 + (b01 + b10) * c;
            let cim = px[0][1].1 + (b10 - b01) * s;
            let det = p * q - (cre * cre + cim * cim);
            if !(det > 0.0 && p > 0.0) {
                return None;
            }
            f -= w * det.ln();
            // X^{-1} = [[q, -c], [-c̄, p]] / det
            let (i00, i11) = (q / det, p / det);
            let (i01re, i01im) = (-cre / det, -cim / det);
            let (i10re, i10im) = (i01re, -i01im);
            g[0] -= w * i00;
            g[1] -= w * 2.0 * i01re;
            g[2] -= w * i11;
            // ∂/∂(Q1)_ij: 2 Re((X^{-1})_ji e^{-iθ})
            let re_shift = |re: f64, im: f64| re * c + im * s;
            g[3] -= w * 2.0 * re_shift(i00, 0.0);
            g[4] -= w * 2.0 * re_shift(i10re, i10im);
            g[5] -= w * 2.0 * re_shift(i01re, i01im);
            g[6] -= w * 2.0 * re_shift(i11, 0.0);
        }
        let h = v[1].abs().max(v[4].abs()).max(v[5].abs());
        Some((f + self.lambda * h, g))
    }

    /// Prox of `t‖(v1, v4, v5)‖_∞` by bisection on the clipping level.
    fn prox(&self, v: &mut [f64; 7], t: f64) {
        let idx = [1, 4, 5];
        let mags: Vec<f64> = idx.iter().map(|&i| v[i].abs()).collect();
        if mags.iter().sum::<f64>() <= t {
            for &i in &idx {
                v[i] = 0.0;
            }
            return;
        }
        let excess = |tau: f64| mags.iter().map(|m| (m - tau).max(0.0)).sum::<f64>() - t;
        let (mut lo, mut hi) = (0.0, mags.iter().cloned().fold(0.0, f64::max));
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if excess(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let tau = 0.5 * (lo + hi);
        for &i in &idx {
            v[i] = v[i].signum() * v[i].abs().min(tau);
        }
    }

    fn minimize(&self, iters: usize, step: f64) -> f64 {
        let mut v = [0.0; 7];
        let mut best = f64::INFINITY;
        let mut s = step;
        let mut done = 0;
        while done < iters {
            let (fv, g) = self.eval(&v).expect("iterate stays feasible");
            best = best.min(fv);
            let mut cand = v;
            for i in 0..7 {
                cand[i] -= s * g[i];
            }
            self.prox(&mut cand, s * self.lambda);
            if self.eval(&cand).is_none() {
                s *= 0.5;
                continue;
            }
            v = cand;
            done += 1;
        }
        best.min(self.eval(&v).unwrap().0)
    }
}

fn c1_oracle() -> Outcome {
    let len = 64;
    let g = grid(len);
    let mut worst: f64 = 0.0;
    let mut all_converged = true;
    let mut count = 0;
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(100 + seed);
        let r = random_lags(&mut rng, 2, 1, 200);
        let p0 = DMatrix::from_row_slice(
            2,
            2,
            &[
                1.0 + rng.random_range(0.0..0.5),
                rng.random_range(-0.3..0.3),
                0.0,
                1.0 + rng.random_range(0.0..0.5),
            ],
        );
        let p0 = DMatrix::from_fn(2, 2, |i, j| if i > j { p0[(j, i)] } else { p0[(i, j)] });
        let p1 = DMatrix::from_fn(2, 2, |_, _| rng.random_range(-0.15..0.15));
        let prior = MatrixPseudoPolynomial::new(vec![p0.clone(), p1.clone()])
            .unwrap()
            .evaluate(&g);
        for lambda in [0.0, 0.05] {
            let prob =
                RegularizedProblem::regularized(prior.clone(), r.clone(), Support::diagonal(2), lambda).unwrap();
            let (_, rep) = solve_regularized(&prob, &tight(), None).unwrap();
            all_converged &= rep.converged;
            let oracle = Oracle::new(len, &p0, &p1, &r, lambda);
            let reference = oracle.minimize(1_000_000, 1e-3);
            worst = worst.max((rep.objective - reference).abs());
            count += 1;
        }
    }
    outcome(
        all_converged && worst <= 1e-5,
        format!("{count} solves, max |F_solver - F_oracle| = {worst:.2e} (limit 1e-5)"),
    )
}

// ------------------------------------------------ 2: finite differences

fn c2_gradient() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut checks = 0;
    for inst in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(200 + inst);
        let m = 1 + (inst as usize % 4);
        let n = 1 + (inst as usize % 3);
        let g = grid(64);
        let prior = random_prior(&mut rng, m, n, &g);
        let r = random_lags(&mut rng, m, n, 300);
        let prob = RegularizedProblem::regularized(prior, r, Support::diagonal(m), 0.0).unwrap();
        let q = random_feasible(&mut rng, &prob, 0.2);
        let grad = smooth_gradient(&q, &prob).unwrap();
        for _ in 0..20 {
            let d = MatrixPseudoPolynomial::new(
                (0..=n)
                    .map(|_| DMatrix::from_fn(m, m, |_, _| rng.sample::<f64, _>(StandardNormal)))
                    .collect(),
            )
            .unwrap();
            let h = 1e-5;
            let fp = smooth_objective(&q.lincomb(1.0, &d, h).unwrap(), &prob).unwrap();
            let fm = smooth_objective(&q.lincomb(1.0, &d, -h).unwrap(), &prob).unwrap();
            let fd = (fp - fm) / (2.0 * h);
            let an = grad.dot(&d).unwrap();
            worst = worst.max((fd - an).abs() / an.abs().max(fd.abs()));
            checks += 1;
        }
    }
    outcome(
        worst <= 1e-5,
        format!("{checks} directional derivatives, max relative error {worst:.2e} (limit 1e-5)"),
    )
}

// ------------------------------------------------ 3: KKT suite

fn kkt_instances() -> Vec<Problem> {
    let mut out = Vec::new();
    for inst in 0..24u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(300 + inst);
        let m = 2 + (inst as usize % 5);
        let n = 1 + (inst as usize % 3);
        let g = grid(64);
        let prior = if inst % 2 == 0 {
            Spectrum::identity(Arc::clone(&g), m)
        } else {
            random_prior(&mut rng, m, n, &g)
        };
        let r = random_lags(&mut rng, m, n, 400);
        let sigma = random_support(&mut rng, m, 0.3);
        let prob = match inst % 4 {
            3 => {
                let tau = sigma.union(&random_support(&mut rng, m, 0.4)).unwrap();
                RegularizedProblem::link_selection(prior, r, sigma, tau).unwrap()
            }
            k => {
                let lambda = [0.0, 0.01, 0.05, 0.2][k as usize % 3 + (inst as usize / 12)];
                RegularizedProblem::regularized(prior, r, sigma, lambda).unwrap()
            }
        };
        out.push(prob);
    }
    out
}

fn c3_kkt() -> Outcome {
    let mut solves = 0;
    let mut failures = Vec::new();
    let mut unconverged = 0;
    let mut active = 0;
    let mut worst_unpen: f64 = 0.0;
    for (idx, prob) in kkt_instances().iter().enumerate() {
        let (q, rep) = solve_regularized(prob, &tight(), None).unwrap();
        if !rep.converged {
            unconverged += 1;
            continue;
        }
        solves += 1;
        let kkt = check_kkt(&q, prob, 1e-6).unwrap();
        active += kkt.active_groups();
        worst_unpen = worst_unpen.max(kkt.max_unpenalized);
        if !kkt.passed {
            failures.push(format!("instance {idx}: {:?}", kkt.failures()));
        }
    }
    outcome(
        failures.is_empty() && solves > 0,
        format!(
            "{solves} converged solves ({unconverged} not converged), {active} active groups, \
             max unpenalized gradient {worst_unpen:.1e}{}",
            if failures.is_empty() {
                String::new()
            } else {
                format!("; failures: {}", failures.join("; "))
            }
        ),
    )
}

// ------------------------------------------------ 4: moments

fn c4_moments() -> Outcome {
    let mut worst_mask: f64 = 0.0;
    let mut worst_sigma: f64 = 0.0;
    let mut worst_excess = f64::NEG_INFINITY;
    let mut ok = true;
    for inst in 0..12u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(400 + inst);
        let m = 2 + (inst as usize % 4);
        let n = 1 + (inst as usize % 2);
        let g = grid(64);
        let prior = random_prior(&mut rng, m, n, &g);
        let r = random_lags(&mut rng, m, n, 400);
        let sigma = random_support(&mut rng, m, 0.3);
        let tau = sigma.union(&random_support(&mut rng, m, 0.4)).unwrap();

        let masked = RegularizedProblem::link_selection(prior.clone(), r.clone(), sigma.clone(), tau.clone()).unwrap();
        let (q, rep) = solve_regularized(&masked, &tight(), None).unwrap();
        ok &= rep.converged;
        let outside_zero = q.project_support(&tau).unwrap() == q;
        ok &= outside_zero;
        let phi = recover_primal(&q, &prior).unwrap();
        worst_mask = worst_mask.max(check_moments(&phi, &r, &tau).unwrap().max_on);

        let lambda = [0.02, 0.05, 0.1][inst as usize % 3];
        let reg = RegularizedProblem::regularized(prior.clone(), r.clone(), sigma.clone(), lambda).unwrap();
        let (q, rep) = solve_regularized(&reg, &tight(), None).unwrap();
        ok &= rep.converged;
        let phi = recover_primal(&q, &prior).unwrap();
        let mr = check_moments(&phi, &r, &sigma).unwrap();
        worst_sigma = worst_sigma.max(mr.max_on);
        worst_excess = worst_excess.max(mr.max_outside - lambda);
    }
    let pass = ok && worst_mask <= 1e-6 && worst_sigma <= 1e-6 && worst_excess <= 1e-6;
    outcome(
        pass,
        format!(
            "hard mask: max residual on mask {worst_mask:.1e}; regularized: max residual on prior \
             support {worst_sigma:.1e}, max (penalized residual - lambda) {worst_excess:.2e}"
        ),
    )
}

// ------------------------------------------------ 5: uniqueness

fn c5_uniqueness() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for inst in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(500 + inst);
        let m = 1 + (inst as usize % 3);
        let n = 1 + (inst as usize % 2);
        let g = grid(64);
        let prior = random_prior(&mut rng, m, n, &g);
        let r = random_lags(&mut rng, m, n, 300);
        let lambda = if inst % 2 == 0 { 0.0 } else { 0.05 };
        let prob = RegularizedProblem::regularized(prior, r, Support::diagonal(m), lambda).unwrap();
        let mut solutions: Vec<PseudoPoly> = Vec::new();
        for _ in 0..5 {
            let init = random_feasible(&mut rng, &prob, 1.0);
            let (q, rep) = solve_regularized(&prob, &tight(), Some(&init)).unwrap();
            ok &= rep.converged;
            solutions.push(q);
        }
        for s in &solutions[1..] {
            worst = worst.max(s.sub(&solutions[0]).unwrap().max_abs());
        }
    }
    outcome(
        ok && worst <= 1e-4,
        format!("10 instances x 5 starts, max coefficient spread {worst:.1e} (limit 1e-4)"),
    )
}

// ------------------------------------------------ 6: Itakura-Saito

fn c6_itakura_saito() -> Outcome {
    let g = grid(32);
    let mut rng = ChaCha8Rng::seed_from_u64(600);
    let mut min_value = f64::INFINITY;
    let mut identical_nonzero = 0;
    for trial in 0..1000 {
        let m = 1 + trial % 4;
        let n = trial % 3;
        let a = random_prior(&mut rng, m, n, &g);
        let b = random_prior(&mut rng, m, n, &g);
        min_value = min_value.min(itakura_saito(&a, &b).unwrap());
        if itakura_saito(&a, &a).unwrap() != 0.0 {
            identical_nonzero += 1;
        }
    }
    outcome(
        min_value >= -1e-10 && identical_nonzero == 0,
        format!(
            "1000 random pairs, min value {min_value:.3e}; identical pairs not exactly zero: {identical_nonzero}"
        ),
    )
}

// ------------------------------------------------ 7: prox

/// Minimizes `½‖x - v‖² + t‖x‖_∞` over clippings `x = sign(v)·min(|v|, τ)`:
/// golden-section search on `τ`, then bisection on the sign of the
/// derivative `t - Σ (|v_i| - τ)_+` inside the final bracket.
fn prox_oracle(v: &[f64], t: f64) -> Vec<f64> {
    let obj = |tau: f64| {
        let fit: f64 = v.iter().map(|x| (x.abs() - x.abs().min(tau)).powi(2)).sum();
        0.5 * fit + t * tau
    };
    let slope = |tau: f64| t - v.iter().map(|x| (x.abs() - tau).max(0.0)).sum::<f64>();
    let vmax = v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let (mut lo, mut hi) = (0.0, vmax);
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    for _ in 0..60 {
        let a = hi - ratio * (hi - lo);
        let b = lo + ratio * (hi - lo);
        if obj(a) <= obj(b) {
            hi = b;
        } else {
            lo = a;
        }
    }
    // widen to a guaranteed bracket of the sign change
    let (mut lo, mut hi) = ((lo - 1e-6 * (1.0 + vmax)).max(0.0), (hi + 1e-6 * (1.0 + vmax)).min(vmax));
    let tau = if slope(lo) >= 0.0 {
        lo
    } else {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if slope(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    v.iter().map(|x| x.signum() * x.abs().min(tau)).collect()
}

fn c7_prox() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(700);
    let mut worst: f64 = 0.0;
    for trial in 0..1000 {
        let len = 1 + trial % 9;
        let v: Vec<f64> = (0..len).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let t = rng.random_range(0.0..2.0);
        let got = prox_linf(&v, t);
        let want = prox_oracle(&v, t);
        for (a, b) in got.iter().zip(&want) {
            worst = worst.max((a - b).abs());
        }
        if len % 2 == 1 {
            // the same group routed through a polynomial of degree (len-1)/2
            let n = (len - 1) / 2;
            let groups = PenaltyGroups::new(2, n, &Support::diagonal(2)).unwrap();
            let mut q = MatrixPseudoPolynomial::zeros(2, n);
            for ((lag, i, j), x) in groups.slots((0, 1)).zip(&v) {
                q.set(lag, i, j, *x);
            }
            let p = prox_penalty(&q, &groups, t).unwrap();
            for (a, b) in groups.group_vector(&p, (0, 1)).iter().zip(&want) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    outcome(
        worst <= 1e-8,
        format!("1000 random groups, max deviation {worst:.1e} (limit 1e-8)"),
    )
}

// ------------------------------------------------ 8 and 10: AR replica

const AR_GRID: usize = 128;
const AR_SEEDS: u64 = 10;
const LAMBDAS: [f64; 8] = [0.02, 0.03, 0.04, 0.05, 0.06, 0.07, 0.08, 0.09];
const THRESHOLDS: [f64; 10] = [0.05, 0.1, 0.15, 0.2, 0.3, 0.4, 0.5, 0.6, 0.8, 1.0];

struct RecursiveChecks {
    runs: usize,
    nested: bool,
    degree_ok: bool,
    flatten_gap: f64,
}

impl RecursiveChecks {
    fn new() -> Self {
        Self {
            runs: 0,
            nested: true,
            degree_ok: true,
            flatten_gap: 0.0,
        }
    }

    fn record(&mut self, state: &State) {
        self.runs += 1;
        let mut prev = state.base_support();
        for w in state.history() {
            self.nested &= prev.is_subset(&w.support);
            prev = &w.support;
        }
        self.degree_ok &= state.degree_bound() <= state.base_degree() + state.order();
        let flat = flatten(state);
        for (a, b) in flat.values().iter().zip(state.current_inverse().values()) {
            let d: CMatrix<f64> = a - b;
            self.flatten_gap = self.flatten_gap.max(d.iter().fold(0.0, |x, z| x.max(z.norm())));
        }
    }
}

struct ArSweep {
    /// `f1[(λ index, t_r index)]` per seed.
    f1: HashMap<(usize, usize), Vec<f64>>,
    checks: RecursiveChecks,
    elapsed: f64,
}

fn ar_sweep() -> &'static ArSweep {
    static SWEEP: std::sync::OnceLock<ArSweep> = std::sync::OnceLock::new();
    SWEEP.get_or_init(|| {
        let start = Instant::now();
        let cfg = SolverConfig::default();
        let mut f1: HashMap<(usize, usize), Vec<f64>> = HashMap::new();
        let mut checks = RecursiveChecks::new();
        for seed in 0..AR_SEEDS {
            let mut sc_cfg = NestedScenarioConfig::ar_replica(seed);
            sc_cfg.grid_size = AR_GRID;
            let spec = nested_scenario::<f64>(&sc_cfg).unwrap();
            let sc = build_scenario(&spec).unwrap();
            let truth = sc.truths.last().unwrap();
            for (li, &lambda) in LAMBDAS.iter().enumerate() {
                let base = RecursiveState::new(
                    sc.prior_inverse.clone(),
                    sc.prior_degree,
                    sc.prior_support.clone(),
                    sc_cfg.n,
                )
                .unwrap();
                let first = step(base, &sc.windows[0], lambda, THRESHOLDS[0], &cfg).unwrap();
                // the second solve depends on t_r only through the first support
                let mut cache: HashMap<Vec<(usize, usize)>, State> = HashMap::new();
                for (ti, &t_r) in THRESHOLDS.iter().enumerate() {
                    let after_first = first.rethreshold(t_r).unwrap();
                    let key: Vec<_> = after_first.support().edges().collect();
                    let second = cache.entry(key).or_insert_with(|| {
                        let s = step(after_first, &sc.windows[1], lambda, t_r, &cfg).unwrap();
                        checks.record(&s);
                        s
                    });
                    let fin = second.rethreshold(t_r).unwrap();
                    checks.record(&fin);
                    let m = score_against_truth(fin.support(), truth, &sc.prior_support).unwrap();
                    f1.entry((li, ti)).or_default().push(m.f1);
                }
            }
        }
        ArSweep {
            f1,
            checks,
            elapsed: start.elapsed().as_secs_f64(),
        }
    })
}

fn c8_ar_replica() -> Outcome {
    let sweep = ar_sweep();
    let mut best = (f64::NEG_INFINITY, 0, 0);
    for (&(li, ti), scores) in &sweep.f1 {
        let med = median(scores.clone());
        if med > best.0 || (med == best.0 && (li, ti) < (best.1, best.2)) {
            best = (med, li, ti);
        }
    }
    let (med, li, ti) = best;
    let time_ok = sweep.elapsed < 15.0 * 60.0;
    outcome(
        med >= 0.8 && time_ok,
        format!(
            "{AR_SEEDS} seeds; best median F1 {med:.3} at lambda {} t_r {} (limit 0.8); sweep {:.0}s (limit 900s)",
            LAMBDAS[li], THRESHOLDS[ti], sweep.elapsed
        ),
    )
}

fn c10_recursive() -> Outcome {
    let mut checks = RecursiveChecks::new();
    // three windows on top of the prior
    for seed in 0..3u64 {
        let mut cfg = NestedScenarioConfig::ar_replica(50 + seed);
        cfg.window_lengths = vec![600, 600, 600];
        cfg.grid_size = AR_GRID;
        let sc = build_scenario(&nested_scenario::<f64>(&cfg).unwrap()).unwrap();
        let mut state =
            RecursiveState::new(sc.prior_inverse.clone(), sc.prior_degree, sc.prior_support.clone(), cfg.n)
                .unwrap();
        for w in &sc.windows {
            state = step(state, w, 0.05, 0.3, &SolverConfig::default()).unwrap();
            checks.record(&state);
        }
    }
    let sweep = ar_sweep();
    let runs = checks.runs + sweep.checks.runs;
    let nested = checks.nested && sweep.checks.nested;
    let degree_ok = checks.degree_ok && sweep.checks.degree_ok;
    let gap = checks.flatten_gap.max(sweep.checks.flatten_gap);
    outcome(
        nested && degree_ok && gap <= 1e-12,
        format!("{runs} recursive states: supports nested {nested}, degree bound {degree_ok}, flatten gap {gap:.1e} (limit 1e-12)"),
    )
}

// ------------------------------------------------ 9: ARMA replica

fn c9_arma_replica() -> Outcome {
    let g = grid(256);
    let lambda = 0.04;
    let cfg = SolverConfig::default();
    let mut wins = 0;
    let mut ratios = Vec::new();
    for seed in 0..10u64 {
        let spec = arma_replica::<f64>(seed, 1000).unwrap();
        let sc = build_scenario(&spec).unwrap();
        let truth = spec.windows[0].model.inverse_spectrum(&g).unwrap();
        let y = &sc.windows[0];

        let prior = spec.prior.inverse_spectrum(&g).unwrap();
        let with_prior = RegularizedProblem::regularized(
            prior.clone(),
            sample_covariances(y, 4).unwrap(),
            spec.prior.support.clone(),
            lambda,
        )
        .unwrap();
        let (q, _) = solve_regularized(&with_prior, &cfg, None).unwrap();
        let err_prior = prior.add_polynomial(&q).unwrap().mean_frobenius_distance(&truth).unwrap();

        let flat = Spectrum::identity(Arc::clone(&g), 4);
        let no_prior = RegularizedProblem::regularized(
            flat.clone(),
            sample_covariances(y, 6).unwrap(),
            Support::diagonal(4),
            lambda,
        )
        .unwrap();
        let (q, _) = solve_regularized(&no_prior, &cfg, None).unwrap();
        let err_flat = flat.add_polynomial(&q).unwrap().mean_frobenius_distance(&truth).unwrap();

        if err_prior < err_flat {
            wins += 1;
        }
        ratios.push(err_prior / err_flat);
    }
    outcome(
        wins >= 8,
        format!(
            "prior better in {wins}/10 seeds (limit 8); median error ratio {:.3}",
            median(ratios)
        ),
    )
}

// ------------------------------------------------ 11: Whittle

fn c11_whittle() -> Outcome {
    // truncation identity
    let mut rng = ChaCha8Rng::seed_from_u64(1100);
    let mut worst_identity: f64 = 0.0;
    for trial in 0..20 {
        let m = 1 + trial % 3;
        let big_n = 40;
        let n = trial % 5;
        let r = random_lags(&mut rng, m, big_n - 1, big_n);
        let q = MatrixPseudoPolynomial::new(
            (0..=n)
                .map(|_| DMatrix::from_fn(m, m, |_, _| rng.sample::<f64, _>(StandardNormal)))
                .collect(),
        )
        .unwrap();
        let short = trace_pairing(&q, &r.truncated(n).unwrap()).unwrap();
        let long = trace_pairing(&q, &r).unwrap();
        worst_identity = worst_identity.max((short - long).abs());
    }

    // likelihood gap along one growing AR(1) realization
    let a = 0.5;
    let model = GroundTruthModel::autoregressive(vec![DMatrix::from_element(1, 1, a)], 0).unwrap();
    let g = grid(1024);
    let phi = model.spectrum(&g).unwrap();
    let true_lags = |len: usize| {
        CovarianceSequence::new(
            (0..len)
                .map(|k| DMatrix::from_element(1, 1, a.powi(k as i32) / (1.0 - a * a)))
                .collect(),
        )
        .unwrap()
    };
    let gap = |y: &Series| {
        let len = y.len();
        let exact = exact_gaussian_neglik(y, &true_lags(len)).unwrap();
        let periodogram = truncated_periodogram(&sample_covariances(y, len - 1).unwrap(), &g);
        let whittle = whittle_loglik(&phi, &periodogram).unwrap();
        (exact - whittle).abs()
    };
    let mut shrinks = 0;
    for seed in 0..20u64 {
        let long = sample_path(&model, 128, seed).unwrap();
        let short = long.head(32).unwrap();
        if gap(&long) < gap(&short) {
            shrinks += 1;
        }
    }
    outcome(
        worst_identity <= 1e-10 && shrinks >= 18,
        format!(
            "truncation identity max deviation {worst_identity:.1e} (limit 1e-10); gap shrinks from \
             N=32 to N=128 in {shrinks}/20 seeds (limit 18)"
        ),
    )
}
