//! Accelerated proximal gradient for the regularized and link-selection duals.

use nalgebra::DMatrix;

use crate::covariance::CovarianceSequence;
use crate::error::{Error, Result};
use crate::objective::{evaluate_smooth, Coordinates, RegularizedProblem};
use crate::poly::MatrixPseudoPolynomial;
use crate::samples::SpectralDensitySamples;
use crate::scalar::Real;
use crate::support::Support;

/// KKT tolerance at default and tighter settings; see [`stopping_kkt_tol`].
pub const REPORT_KKT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// Stop once the prox-gradient mapping norm falls below this.
    pub tol_grad: f64,
    pub initial_step: f64,
    pub backtrack_factor: f64,
    /// Required smallest eigenvalue of `Ψ^{-1} + Q` on the grid.
    pub domain_margin: f64,
    pub acceleration: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 5000,
            tol_grad: 1e-7,
            initial_step: 1.0,
            backtrack_factor: 0.5,
            domain_margin: 1e-9,
            acceleration: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("tol_grad", self.tol_grad),
            ("initial_step", self.initial_step),
            ("backtrack_factor", self.backtrack_factor),
            ("domain_margin", self.domain_margin),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Argument(format!("{name} must be positive, got {v}")));
            }
        }
        if self.backtrack_factor >= 1.0 {
            return Err(Error::Argument("backtrack_factor must be < 1".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::Argument("max_iters must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SolverReport<T: Real> {
    pub iterations: usize,
    pub objective: T,
    pub grad_map_norm: T,
    pub min_domain_eigenvalue: T,
    /// Objective after every accepted step, starting with the initial point.
    pub trace: Vec<T>,
    pub restarts: usize,
    pub kkt: KktReport<T>,
    /// Mapping norm at most `tol_grad` and `kkt` passed.
    pub converged: bool,
}

/// Minimizes `f(Q) + λ h(Q)` (or `f` over the masked coefficients).
pub fn solve_regularized<T: Real>(
    prob: &RegularizedProblem<T>,
    cfg: &SolverConfig,
    q_init: Option<&MatrixPseudoPolynomial<T>>,
) -> Result<(MatrixPseudoPolynomial<T>, SolverReport<T>)> {
    cfg.validate()?;
    let coords = Coordinates::new(prob);
    let margin = T::lit(cfg.domain_margin);
    let lambda = prob.lambda();
    let tol = T::lit(cfg.tol_grad);
    let shrink = T::lit(cfg.backtrack_factor);
    let min_step = T::lit(1e-16);
    let kkt_tol = stopping_kkt_tol::<T>(cfg);

    let start = match q_init {
        Some(q) => {
            if q.dim() != prob.dim() || q.degree() != prob.order() {
                return Err(Error::Dimension(format!(
                    "initial point of shape (m={}, n={}) for problem (m={}, n={})",
                    q.dim(),
                    q.degree(),
                    prob.dim(),
                    prob.order()
                )));
            }
            coords.gather(q)
        }
        None => vec![T::zero(); coords.len()],
    };

    let smooth = |x: &[T], grad: bool| evaluate_smooth(&coords.scatter(x), prob, margin, grad);
    // points already known to satisfy the margin, or only needing the domain
    let gradient = |x: &[T]| {
        let q = coords.scatter(x);
        evaluate_smooth(&q, prob, T::zero(), true)
            .map(|e| (e.value, coords.free_gradient(&e.gradient.expect("requested"))))
            .map_err(|node| crate::objective::domain_error(&prob.domain_value(&q, node), node))
    };
    let composite = |f: T, x: &[T]| f + lambda * coords.penalty(x);

    let first = smooth(&start, true).map_err(|node| {
        let q = coords.scatter(&start);
        let e = crate::objective::domain_error(&prob.domain_value(&q, node), node);
        match q_init {
            Some(_) => e,
            None => Error::Argument(format!("prior inverse spectrum is not positive: {e}")),
        }
    })?;

    let mut x = start;
    let mut fx = first.value;
    let mut gx = Some(coords.free_gradient(&first.gradient.expect("requested")));
    let mut big_f = composite(fx, &x);
    let mut y = x.clone();
    let mut fy = fx;
    let mut gy = gx.clone().expect("just set");
    let mut momentum = T::one();
    let mut step = T::lit(cfg.initial_step);
    let mut trace = vec![big_f];
    let mut restarts = 0;
    let mut grad_map = T::max_value().unwrap_or_else(T::one);
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iters {
        iterations += 1;
        // backtracking on the smooth part with the domain check folded in
        let (x_new, f_new, g_new) = loop {
            let mut cand: Vec<T> = y.iter().zip(&gy).map(|(a, g)| *a - step * *g).collect();
            coords.prox(&mut cand, step * lambda);
            if let Ok(e) = smooth(&cand, false) {
                let mut lin = T::zero();
                let mut sq = T::zero();
                for ((c, a), g) in cand.iter().zip(&y).zip(&gy) {
                    let d = *c - *a;
                    lin += *g * d;
                    sq += d * d;
                }
                let scale = T::one() + fy.abs();
                let quad = sq / (step + step);
                if quad > T::lit(1e-10) * scale {
                    if e.value <= fy + lin + quad + T::lit(1e-13) * scale {
                        break (cand, e.value, None);
                    }
                } else {
                    // below the noise floor of f, test curvature through gradients
                    let (_, g_cand) = gradient(&cand)?;
                    let curv = cand
                        .iter()
                        .zip(&y)
                        .zip(gy.iter().zip(&g_cand))
                        .fold(T::zero(), |a, ((c, p), (g, h))| a + (*h - *g) * (*c - *p));
                    if curv <= quad + quad {
                        break (cand, e.value, Some(g_cand));
                    }
                }
            }
            step *= shrink;
            if step < min_step {
                return Err(Error::Numerical(format!(
                    "step size underflow after {iterations} iterations \
                     (objective {big_f}, mapping norm {grad_map})"
                )));
            }
        };

        let dist = y
            .iter()
            .zip(&x_new)
            .fold(T::zero(), |a, (p, q)| a + (*p - *q) * (*p - *q))
            .sqrt();
        grad_map = dist / step;
        let at_x = y == x;
        let big_f_new = composite(f_new, &x_new);
        let slack = T::lit(1e-12) * (T::one() + big_f.abs());

        if big_f_new > big_f + slack && !at_x {
            // restart from the last accepted point without momentum
            restarts += 1;
            momentum = T::one();
            y = x.clone();
            fy = fx;
            gy = match &gx {
                Some(g) => g.clone(),
                None => gradient(&x)?.1,
            };
            continue;
        }
        if grad_map <= tol && !(at_x || !cfg.acceleration) {
            // confirm stationarity from the current iterate
            momentum = T::one();
            y = x.clone();
            fy = fx;
            gy = match &gx {
                Some(g) => g.clone(),
                None => gradient(&x)?.1,
            };
            continue;
        }

        let next_momentum = if cfg.acceleration {
            (T::one() + (T::one() + T::lit(4.0) * momentum * momentum).sqrt()) * T::lit(0.5)
        } else {
            T::one()
        };
        let beta = (momentum - T::one()) / next_momentum;
        momentum = next_momentum;
        let x_old = std::mem::replace(&mut x, x_new);
        fx = f_new;
        gx = g_new;
        big_f = big_f_new;
        trace.push(big_f);
        if grad_map <= tol && check_kkt(&coords.scatter(&x), prob, kkt_tol)?.passed {
            converged = true;
            break;
        }
        step *= T::lit(1.25);

        let moved = if beta > T::zero() {
            let ext: Vec<T> = x
                .iter()
                .zip(&x_old)
                .map(|(a, b)| *a + beta * (*a - *b))
                .collect();
            gradient(&ext).ok().map(|e| (ext, e))
        } else {
            None
        };
        match moved {
            Some((ext, (f, g))) => {
                y = ext;
                fy = f;
                gy = g;
            }
            None => {
                if beta > T::zero() {
                    momentum = T::one();
                }
                y = x.clone();
                fy = fx;
                gy = match &gx {
                Some(g) => g.clone(),
                None => gradient(&x)?.1,
            };
            }
        }
    }

    let q = coords.scatter(&x);
    let kkt = check_kkt(&q, prob, kkt_tol)?;
    let report = SolverReport {
        iterations,
        objective: big_f,
        grad_map_norm: grad_map,
        min_domain_eigenvalue: prob.min_domain_eigenvalue(&q),
        trace,
        restarts,
        kkt,
        converged,
    };
    Ok((q, report))
}

/// Tolerance of the KKT check that must pass before a solve counts as
/// converged: `REPORT_KKT_TOL`, loosened for coarse `tol_grad` or a short
/// mantissa.
pub fn stopping_kkt_tol<T: Real>(cfg: &SolverConfig) -> T {
    let floor = T::default_epsilon().sqrt().max(T::lit(10.0 * cfg.tol_grad));
    T::lit(REPORT_KKT_TOL).max(floor)
}

/// `Φ_o = (Ψ^{-1} + Q_o)^{-1}` node-wise.
pub fn recover_primal<T: Real>(
    q: &MatrixPseudoPolynomial<T>,
    prior_inverse: &SpectralDensitySamples<T>,
) -> Result<SpectralDensitySamples<T>> {
    prior_inverse.add_polynomial(q)?.inverse()
}

/// Optimality summary of one penalized group.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupKkt<T: Real> {
    pub pair: (usize, usize),
    /// Whether the group vector is nonzero.
    pub active: bool,
    /// `‖∇_g‖_1`.
    pub dual_norm: T,
    /// Distance of `-∇_g` from the cone of the ℓ∞ subdifferential at `v_g`;
    /// zero for inactive groups.
    pub alignment: T,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KktReport<T: Real> {
    pub tol: T,
    pub lambda: T,
    /// Largest absolute smooth-gradient entry over unpenalized coordinates.
    pub max_unpenalized: T,
    pub groups: Vec<GroupKkt<T>>,
    pub passed: bool,
}

impl<T: Real> KktReport<T> {
    pub fn active_groups(&self) -> usize {
        self.groups.iter().filter(|g| g.active).count()
    }

    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.max_unpenalized > self.tol {
            out.push(format!(
                "unpenalized gradient {} exceeds {}",
                self.max_unpenalized, self.tol
            ));
        }
        for g in self.groups.iter().filter(|g| !g.ok) {
            out.push(format!(
                "group {:?} (active {}): dual norm {} alignment {} for lambda {}",
                g.pair, g.active, g.dual_norm, g.alignment, self.lambda
            ));
        }
        out
    }
}

/// Verifies stationarity on unpenalized coordinates and the dual-norm
/// conditions on penalized groups. Gradients are taken with respect to the
/// free coordinates (upper triangle of `Q_0`, every entry of `Q_k`).
pub fn check_kkt<T: Real>(
    q: &MatrixPseudoPolynomial<T>,
    prob: &RegularizedProblem<T>,
    tol: T,
) -> Result<KktReport<T>> {
    let coords = Coordinates::new(prob);
    let g = crate::objective::smooth_gradient(q, prob)?;
    let grad = coords.free_gradient(&g);
    let x = coords.gather(q);
    let lambda = prob.lambda();
    let mut max_unpenalized = coords
        .unpenalized()
        .iter()
        .fold(T::zero(), |a, &p| a.max(grad[p].abs()));
    let mut groups = Vec::with_capacity(coords.groups().len());
    for (idx, pair) in coords.groups().iter().zip(prob.groups().pairs()) {
        let gv: Vec<T> = idx.iter().map(|&p| grad[p]).collect();
        let v: Vec<T> = idx.iter().map(|&p| x[p]).collect();
        if lambda == T::zero() {
            max_unpenalized = gv.iter().fold(max_unpenalized, |a, b| a.max(b.abs()));
            continue;
        }
        let dual_norm = gv.iter().fold(T::zero(), |a, b| a + b.abs());
        let vmax = v.iter().fold(T::zero(), |a, b| a.max(b.abs()));
        let active = vmax > T::zero();
        let upper = lambda * (T::one() + tol);
        let (alignment, ok) = if active {
            let delta = tol.sqrt() * vmax;
            let mut a = T::zero();
            for (vi, gi) in v.iter().zip(&gv) {
                if vi.abs() >= vmax - delta {
                    let s = if *vi > T::zero() { *gi } else { -*gi };
                    a += s.max(T::zero());
                } else {
                    a += gi.abs();
                }
            }
            let ok = dual_norm <= upper
                && dual_norm >= lambda * (T::one() - tol)
                && a <= lambda * tol;
            (a, ok)
        } else {
            (T::zero(), dual_norm <= upper)
        };
        groups.push(GroupKkt {
            pair: *pair,
            active,
            dual_norm,
            alignment,
            ok,
        });
    }
    let passed = max_unpenalized <= tol && groups.iter().all(|g| g.ok);
    Ok(KktReport {
        tol,
        lambda,
        max_unpenalized,
        groups,
        passed,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentReport<T: Real> {
    /// `max |C_k - R_k|` over entries inside the support, per lag.
    pub per_lag: Vec<T>,
    /// Largest residual inside the support.
    pub max_on: T,
    /// Largest residual outside the support.
    pub max_outside: T,
}

/// Moment residuals `C_k - R̂_k` of `Φ_o` (quadrature Fourier coefficients)
/// split by membership in `support`.
pub fn check_moments<T: Real>(
    phi: &SpectralDensitySamples<T>,
    lags: &CovarianceSequence<T>,
    support: &Support,
) -> Result<MomentReport<T>> {
    let m = lags.dim();
    if phi.dim() != m || support.dim() != m {
        return Err(Error::Dimension(format!(
            "spectrum of dimension {}, lags of dimension {m}, support over {}",
            phi.dim(),
            support.dim()
        )));
    }
    let mut per_lag = Vec::with_capacity(lags.max_lag() + 1);
    let mut max_outside = T::zero();
    for k in 0..=lags.max_lag() {
        let res: DMatrix<T> = phi.fourier_coefficient(k) - lags.lag(k);
        let mut on = T::zero();
        for i in 0..m {
            for j in 0..m {
                let r = res[(i, j)].abs();
                if support.contains(i, j) {
                    on = on.max(r);
                } else {
                    max_outside = max_outside.max(r);
                }
            }
        }
        per_lag.push(on);
    }
    let max_on = per_lag.iter().fold(T::zero(), |a, b| a.max(*b));
    Ok(MomentReport {
        per_lag,
        max_on,
        max_outside,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::FrequencyGrid;
    use std::sync::Arc;

    fn identity_problem(lambda: f64) -> RegularizedProblem<f64> {
        let g = Arc::new(FrequencyGrid::new(32).unwrap());
        let lags = CovarianceSequence::new(vec![DMatrix::identity(2, 2), DMatrix::zeros(2, 2)]).unwrap();
        RegularizedProblem::regularized(
            SpectralDensitySamples::identity(g, 2),
            lags,
            Support::diagonal(2),
            lambda,
        )
        .unwrap()
    }

    #[test]
    fn identity_is_optimal() {
        let prob = identity_problem(0.0);
        let (q, rep) = solve_regularized(&prob, &SolverConfig::default(), None).unwrap();
        assert!(rep.converged);
        assert!(q.max_abs() < 1e-12);
        assert!(rep.kkt.passed);
    }

    #[test]
    fn scalar_problem_hits_closed_form() {
        // f(q) = q r - log(1 + q) is minimized at q = 1/r - 1
        let g = Arc::new(FrequencyGrid::new(8).unwrap());
        let r0: f64 = 0.25;
        let lags = CovarianceSequence::new(vec![DMatrix::from_element(1, 1, r0)]).unwrap();
        let prob = RegularizedProblem::regularized(
            SpectralDensitySamples::identity(g, 1),
            lags,
            Support::diagonal(1),
            0.0,
        )
        .unwrap();
        let cfg = SolverConfig {
            tol_grad: 1e-12,
            ..SolverConfig::default()
        };
        let (q, rep) = solve_regularized(&prob, &cfg, None).unwrap();
        assert!(rep.converged, "{rep:?}");
        assert!((q.get(0, 0, 0) - 3.0).abs() < 1e-9);
        assert!(rep.trace.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn recover_primal_examples() {
        let g = Arc::new(FrequencyGrid::<f64>::new(8).unwrap());
        let prior = SpectralDensitySamples::identity(Arc::clone(&g), 1);
        let q = MatrixPseudoPolynomial::constant(DMatrix::from_element(1, 1, 1.0)).unwrap();
        let phi = recover_primal(&q, &prior).unwrap();
        assert!(phi.values().iter().all(|v| (v[(0, 0)].re - 0.5).abs() < 1e-15));
        let zero = MatrixPseudoPolynomial::zeros(1, 0);
        let same = recover_primal(&zero, &prior).unwrap();
        assert_eq!(same.values(), prior.values());
        let bad = MatrixPseudoPolynomial::constant(DMatrix::from_element(1, 1, -1.5)).unwrap();
        assert!(matches!(recover_primal(&bad, &prior), Err(Error::Domain { .. })));
    }

    #[test]
    fn rejects_bad_config() {
        let prob = identity_problem(0.1);
        let cfg = SolverConfig {
            backtrack_factor: 1.0,
            ..SolverConfig::default()
        };
        assert!(matches!(
            solve_regularized(&prob, &cfg, None),
            Err(Error::Argument(_))
        ));
    }
}
