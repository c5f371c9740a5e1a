//! Synthetic sparse network models, sample paths and nested scenarios.

use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::{FftNum, FftPlanner};

use crate::error::{Error, Result};
use crate::estimation::TimeSeries;
use crate::grid::{FrequencyGrid, DEFAULT_GRID_SIZE};
use crate::linalg::{self, CMatrix};
use crate::poly::MatrixPseudoPolynomial;
use crate::samples::SpectralDensitySamples;
use crate::scalar::{cis, Complex, Real};
use crate::support::Support;

/// Smallest grid eigenvalue required of generated inverse spectra.
pub const MIN_EIGENVALUE: f64 = 0.1;
/// Diagonal loading increment.
pub const LOADING_STEP: f64 = 0.1;
/// Maximum number of loading increments.
pub const LOADING_CAP: usize = 100;

/// How `Φ^{-1}` is generated.
#[derive(Debug, Clone, PartialEq)]
pub enum InverseSpectrum<T: Real> {
    /// `Φ^{-1} = M`.
    PseudoPolynomial(MatrixPseudoPolynomial<T>),
    /// `y(t) = Σ F_k y(t-k) + e(t)` with unit noise covariance, so
    /// `Φ^{-1} = A^* A`, `A = I - Σ F_k e^{-iθk}`.
    Autoregressive(Vec<DMatrix<T>>),
    /// `Φ^{-1} = M / |b(e^{iθ})|²` with scalar `b = 1 + Σ b_j e^{-iθj}`,
    /// i.e. every channel shares the moving-average factor `b`.
    MovingAverage {
        numerator: MatrixPseudoPolynomial<T>,
        ma: Vec<T>,
    },
    /// Base inverse spectrum plus a pseudo-polynomial increment.
    Sum(Box<InverseSpectrum<T>>, MatrixPseudoPolynomial<T>),
}

impl<T: Real> InverseSpectrum<T> {
    pub fn dim(&self) -> usize {
        match self {
            Self::PseudoPolynomial(p) => p.dim(),
            Self::Autoregressive(f) => f.first().map_or(0, |c| c.nrows()),
            Self::MovingAverage { numerator, .. } => numerator.dim(),
            Self::Sum(base, _) => base.dim(),
        }
    }

    /// `Φ^{-1}(e^{iθ})`.
    pub fn evaluate_at(&self, theta: T) -> CMatrix<T> {
        match self {
            Self::PseudoPolynomial(p) => p.evaluate_at(theta),
            Self::Autoregressive(f) => {
                let m = self.dim();
                let mut a = CMatrix::<T>::identity(m, m);
                for (k, fk) in f.iter().enumerate() {
                    let z = cis(-theta * T::from_usize_(k + 1));
                    a -= fk.map(|x| z.scale(x));
                }
                linalg::hermitize(a.adjoint() * a)
            }
            Self::MovingAverage { numerator, ma } => {
                let mut b = Complex::new(T::one(), T::zero());
                for (j, bj) in ma.iter().enumerate() {
                    b += cis(-theta * T::from_usize_(j + 1)).scale(*bj);
                }
                let gain = b.re * b.re + b.im * b.im;
                numerator.evaluate_at(theta).map(|z| z.unscale(gain))
            }
            Self::Sum(base, q) => base.evaluate_at(theta) + q.evaluate_at(theta),
        }
    }

    /// Samples on `grid`.
    pub fn evaluate(&self, grid: &Arc<FrequencyGrid<T>>) -> Result<SpectralDensitySamples<T>> {
        let values = grid.nodes().iter().map(|&t| self.evaluate_at(t)).collect();
        SpectralDensitySamples::new(Arc::clone(grid), values)
    }

    /// Pseudo-polynomial degree of the numerator (AR order for AR models).
    pub fn degree(&self) -> usize {
        match self {
            Self::PseudoPolynomial(p) => p.degree(),
            Self::Autoregressive(f) => f.len(),
            Self::MovingAverage { numerator, ma } => numerator.degree().max(ma.len()),
            Self::Sum(base, q) => base.degree().max(q.degree()),
        }
    }
}

/// A model with its declared inverse-spectrum support.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthModel<T: Real> {
    pub inverse: InverseSpectrum<T>,
    pub support: Support,
    pub seed: u64,
}

impl<T: Real> GroundTruthModel<T> {
    pub fn dim(&self) -> usize {
        self.inverse.dim()
    }

    pub fn degree(&self) -> usize {
        self.inverse.degree()
    }

    pub fn inverse_spectrum(&self, grid: &Arc<FrequencyGrid<T>>) -> Result<SpectralDensitySamples<T>> {
        self.inverse.evaluate(grid)?.into_positive()
    }

    pub fn spectrum(&self, grid: &Arc<FrequencyGrid<T>>) -> Result<SpectralDensitySamples<T>> {
        self.inverse_spectrum(grid)?.inverse()
    }

    /// AR model; the support is read off the coefficients of `A^* A`.
    pub fn autoregressive(coeffs: Vec<DMatrix<T>>, seed: u64) -> Result<Self> {
        let m = coeffs.first().map_or(0, |c| c.nrows());
        if m == 0 || coeffs.iter().any(|c| c.nrows() != m || c.ncols() != m) {
            return Err(Error::Dimension("AR coefficients must be nonempty and square".into()));
        }
        let n = coeffs.len();
        let mut a = vec![DMatrix::<T>::identity(m, m)];
        a.extend(coeffs.iter().map(|f| -f));
        // lag-d coefficient of A^*A is Σ_j A_j^T A_{j+d}
        let lags = (0..=n)
            .map(|d| {
                (0..=n - d).fold(DMatrix::zeros(m, m), |acc, j| acc + a[j].transpose() * &a[j + d])
            })
            .collect();
        let support = MatrixPseudoPolynomial::new(lags)?.support();
        Ok(Self {
            inverse: InverseSpectrum::Autoregressive(coeffs),
            support,
            seed,
        })
    }
}

/// Adds `LOADING_STEP·I` to `P_0` until `min_grid λ(P) ≥ MIN_EIGENVALUE`.
fn load_diagonal<T: Real>(
    mut p: MatrixPseudoPolynomial<T>,
    grid: &Arc<FrequencyGrid<T>>,
    base: Option<&InverseSpectrum<T>>,
) -> Result<MatrixPseudoPolynomial<T>> {
    let floor = T::lit(MIN_EIGENVALUE);
    for _ in 0..=LOADING_CAP {
        let samples = match base {
            Some(b) => b.evaluate(grid)?.add_polynomial(&p)?,
            None => p.evaluate(grid),
        };
        if samples.min_eigenvalue().1 >= floor {
            return Ok(p);
        }
        for i in 0..p.dim() {
            let v = p.get(0, i, i);
            p.set(0, i, i, v + T::lit(LOADING_STEP));
        }
    }
    Err(Error::Generation(format!(
        "inverse spectrum not positive after {LOADING_CAP} loading steps"
    )))
}

/// Magnitudes of randomly drawn coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientRanges {
    /// Off-diagonal entries of `M_0`.
    pub edge_lag0: (f64, f64),
    /// Off-diagonal entries of `M_k`, `k ≥ 1` (divided by `k`).
    pub edge_lagged: (f64, f64),
    /// Diagonal entries of `M_k`, `k ≥ 1` (divided by `k`).
    pub diagonal_lagged: (f64, f64),
}

impl Default for CoefficientRanges {
    fn default() -> Self {
        Self {
            edge_lag0: (0.3, 0.6),
            edge_lagged: (0.2, 0.4),
            diagonal_lagged: (0.1, 0.3),
        }
    }
}

fn signed<R: Rng>(rng: &mut R, (lo, hi): (f64, f64)) -> f64 {
    let v = if hi > lo { rng.random_range(lo..hi) } else { lo };
    if rng.random_bool(0.5) {
        v
    } else {
        -v
    }
}

/// Random coefficients on the given pairs (both orientations at lags ≥ 1).
fn random_coefficients<T: Real, R: Rng>(
    m: usize,
    n: usize,
    pairs: &[(usize, usize)],
    ranges: &CoefficientRanges,
    rng: &mut R,
) -> MatrixPseudoPolynomial<T> {
    let mut p = MatrixPseudoPolynomial::zeros(m, n);
    for &(i, j) in pairs {
        if i == j {
            p.set(0, i, i, T::one());
            for k in 1..=n {
                let v = signed(rng, ranges.diagonal_lagged) / k as f64;
                p.set(k, i, i, T::lit(v));
            }
        } else {
            p.set(0, i, j, T::lit(signed(rng, ranges.edge_lag0)));
            for k in 1..=n {
                p.set(k, i, j, T::lit(signed(rng, ranges.edge_lagged) / k as f64));
                p.set(k, j, i, T::lit(signed(rng, ranges.edge_lagged) / k as f64));
            }
        }
    }
    p
}

/// Degree-`n` pseudo-polynomial `M` with coefficient support `support`,
/// diagonally loaded until its smallest eigenvalue on the default grid is at
/// least [`MIN_EIGENVALUE`]; `Φ^{-1} = M`.
pub fn random_sparse_model<T: Real>(
    m: usize,
    n: usize,
    support: &Support,
    seed: u64,
) -> Result<GroundTruthModel<T>> {
    random_sparse_model_with(m, n, support, seed, &CoefficientRanges::default())
}

pub fn random_sparse_model_with<T: Real>(
    m: usize,
    n: usize,
    support: &Support,
    seed: u64,
    ranges: &CoefficientRanges,
) -> Result<GroundTruthModel<T>> {
    if support.dim() != m {
        return Err(Error::Dimension(format!(
            "support over {} nodes for m = {m}",
            support.dim()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs: Vec<_> = support.pairs().collect();
    let raw = random_coefficients(m, n, &pairs, ranges, &mut rng);
    let grid = Arc::new(FrequencyGrid::new(DEFAULT_GRID_SIZE)?);
    let loaded = load_diagonal(raw, &grid, None)?;
    Ok(GroundTruthModel {
        inverse: InverseSpectrum::PseudoPolynomial(loaded),
        support: support.clone(),
        seed,
    })
}

/// Stationary Gaussian path of length `len` with spectrum `Φ` of `model`,
/// synthesized in the frequency domain. Deterministic in `seed`.
pub fn sample_path<T>(model: &GroundTruthModel<T>, len: usize, seed: u64) -> Result<TimeSeries<T>>
where
    T: Real + FftNum,
    StandardNormal: Distribution<T>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_path_with(model, len, &mut rng)
}

pub(crate) fn sample_path_with<T, R>(
    model: &GroundTruthModel<T>,
    len: usize,
    rng: &mut R,
) -> Result<TimeSeries<T>>
where
    T: Real + FftNum,
    StandardNormal: Distribution<T>,
    R: Rng,
{
    if len == 0 {
        return Err(Error::Argument("path length must be positive".into()));
    }
    let m = model.dim();
    let size = (4 * len).next_power_of_two().max(4);
    let half = size / 2;
    let two_pi = T::two_pi();
    let size_t = T::from_usize_(size);
    let sqrt_half = T::lit(0.5).sqrt();
    // spectrum square root from the eigendecomposition of Φ^{-1}
    let mut bins: Vec<Vec<Complex<T>>> = vec![vec![Complex::new(T::zero(), T::zero()); size]; m];
    for j in 0..=half {
        let theta = two_pi * T::from_usize_(j) / size_t;
        let inv = model.inverse.evaluate_at(theta);
        let eig = linalg::hermitize(inv).symmetric_eigen();
        if let Some(bad) = eig.eigenvalues.iter().find(|v| !(**v > T::zero())) {
            return Err(Error::Generation(format!(
                "inverse spectrum not positive at frequency {theta} (eigenvalue {bad})"
            )));
        }
        let mut root = eig.eigenvectors.clone();
        for c in 0..m {
            let s = T::one() / eig.eigenvalues[c].sqrt();
            for r in 0..m {
                root[(r, c)] = root[(r, c)].scale(s);
            }
        }
        let root = root * eig.eigenvectors.adjoint();
        let z: Vec<Complex<T>> = (0..m)
            .map(|_| {
                let a: T = rng.sample(StandardNormal);
                if j == 0 || j == half {
                    Complex::new(a, T::zero())
                } else {
                    let b: T = rng.sample(StandardNormal);
                    Complex::new(a * sqrt_half, b * sqrt_half)
                }
            })
            .collect();
        for (r, bin) in bins.iter_mut().enumerate() {
            let mut acc = Complex::new(T::zero(), T::zero());
            for (c, zc) in z.iter().enumerate() {
                acc += root[(r, c)] * zc;
            }
            if j == 0 || j == half {
                acc.im = T::zero();
            }
            bin[j] = acc;
            if j != 0 && j != half {
                bin[size - j] = acc.conj();
            }
        }
    }
    let fft = FftPlanner::<T>::new().plan_fft_inverse(size);
    let scale = T::one() / size_t.sqrt();
    let mut data = DMatrix::<T>::zeros(len, m);
    for (r, bin) in bins.iter_mut().enumerate() {
        fft.process(bin);
        for t in 0..len {
            data[(t, r)] = bin[t].re * scale;
        }
    }
    TimeSeries::new(data)
}

/// One data window and the model generating it.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowSpec<T: Real> {
    pub model: GroundTruthModel<T>,
    pub len: usize,
}

/// Known prior model followed by data windows with nested supports.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec<T: Real> {
    pub prior: GroundTruthModel<T>,
    pub windows: Vec<WindowSpec<T>>,
    pub grid_size: usize,
    pub seed: u64,
}

impl<T: Real> ScenarioSpec<T> {
    pub fn validate(&self) -> Result<()> {
        let m = self.prior.dim();
        let mut last = &self.prior.support;
        for (k, w) in self.windows.iter().enumerate() {
            if w.model.dim() != m {
                return Err(Error::Dimension(format!("window {} model has dimension {}", k + 1, w.model.dim())));
            }
            if !last.is_subset(&w.model.support) {
                return Err(Error::Argument(format!(
                    "support of window {} does not contain the previous one",
                    k + 1
                )));
            }
            if w.len == 0 {
                return Err(Error::Argument(format!("window {} is empty", k + 1)));
            }
            last = &w.model.support;
        }
        Ok(())
    }
}

/// Materialized scenario.
#[derive(Debug, Clone)]
pub struct Scenario<T: Real> {
    pub grid: Arc<FrequencyGrid<T>>,
    pub prior_inverse: SpectralDensitySamples<T>,
    pub prior_support: Support,
    pub prior_degree: usize,
    pub windows: Vec<TimeSeries<T>>,
    pub truths: Vec<Support>,
}

/// Prior samples, one path per window (ChaCha stream `k` of the scenario
/// seed for window `k`) and the truth supports.
pub fn build_scenario<T>(spec: &ScenarioSpec<T>) -> Result<Scenario<T>>
where
    T: Real + FftNum,
    StandardNormal: Distribution<T>,
{
    spec.validate()?;
    let grid = Arc::new(FrequencyGrid::new(spec.grid_size)?);
    let prior_inverse = spec.prior.inverse_spectrum(&grid)?;
    let mut windows = Vec::with_capacity(spec.windows.len());
    for (k, w) in spec.windows.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(k as u64 + 1);
        windows.push(sample_path_with(&w.model, w.len, &mut rng)?);
    }
    Ok(Scenario {
        grid,
        prior_inverse,
        prior_support: spec.prior.support.clone(),
        prior_degree: spec.prior.degree(),
        windows,
        truths: spec.windows.iter().map(|w| w.model.support.clone()).collect(),
    })
}

/// Parameters of a nested sparse pseudo-polynomial scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct NestedScenarioConfig {
    pub m: usize,
    pub n: usize,
    pub base_edges: usize,
    /// Inclusive range of edges added per window.
    pub added_edges: (usize, usize),
    pub window_lengths: Vec<usize>,
    pub grid_size: usize,
    pub seed: u64,
    pub ranges: CoefficientRanges,
}

impl NestedScenarioConfig {
    /// Ten nodes, order two, two windows of 1000 samples, 2–4 new edges each.
    pub fn ar_replica(seed: u64) -> Self {
        Self {
            m: 10,
            n: 2,
            base_edges: 8,
            added_edges: (2, 4),
            window_lengths: vec![1000, 1000],
            grid_size: DEFAULT_GRID_SIZE,
            seed,
            ranges: CoefficientRanges::default(),
        }
    }
}

fn random_new_edges<R: Rng>(current: &Support, count: usize, rng: &mut R) -> Vec<(usize, usize)> {
    let mut free: Vec<(usize, usize)> = current.complement_pairs().collect();
    let mut out = Vec::new();
    for _ in 0..count.min(free.len()) {
        let idx = rng.random_range(0..free.len());
        out.push(free.swap_remove(idx));
    }
    out.sort_unstable();
    out
}

/// `M_0` random on `Ω_0`; each window adds new edges with random coefficients
/// (`M_{k+1} = M_k + D_k`, diagonally loaded when needed).
pub fn nested_scenario<T: Real>(cfg: &NestedScenarioConfig) -> Result<ScenarioSpec<T>> {
    let (lo, hi) = cfg.added_edges;
    if cfg.m < 2 || lo > hi || cfg.window_lengths.is_empty() {
        return Err(Error::Argument("degenerate nested scenario".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let base_pairs = random_new_edges(&Support::diagonal(cfg.m), cfg.base_edges, &mut rng);
    let base_support = Support::from_pairs(cfg.m, base_pairs)?;
    let prior = random_sparse_model_with(cfg.m, cfg.n, &base_support, rng.random(), &cfg.ranges)?;
    let grid = Arc::new(FrequencyGrid::new(DEFAULT_GRID_SIZE)?);

    let mut current = match &prior.inverse {
        InverseSpectrum::PseudoPolynomial(p) => p.clone(),
        _ => unreachable!("random_sparse_model builds pseudo-polynomials"),
    };
    let mut support = base_support;
    let mut windows = Vec::with_capacity(cfg.window_lengths.len());
    for &len in &cfg.window_lengths {
        let count = rng.random_range(lo..=hi);
        let pairs = random_new_edges(&support, count, &mut rng);
        let delta: MatrixPseudoPolynomial<T> = random_coefficients(cfg.m, cfg.n, &pairs, &cfg.ranges, &mut rng);
        current = load_diagonal(current.add(&delta)?, &grid, None)?;
        for &(i, j) in &pairs {
            support.insert(i, j)?;
        }
        windows.push(WindowSpec {
            model: GroundTruthModel {
                inverse: InverseSpectrum::PseudoPolynomial(current.clone()),
                support: support.clone(),
                seed: cfg.seed,
            },
            len,
        });
    }
    Ok(ScenarioSpec {
        prior,
        windows,
        grid_size: cfg.grid_size,
        seed: cfg.seed,
    })
}

/// Four nodes, order four: prior `Φ_0^{-1} = M_0 / |b|²` sharing a first-order
/// moving-average factor, one window whose inverse spectrum adds a
/// pseudo-polynomial increment on new edges.
pub fn arma_replica<T: Real>(seed: u64, len: usize) -> Result<ScenarioSpec<T>> {
    let (m, n) = (4, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let prior_support = Support::from_pairs(m, [(0, 1), (2, 3)])?;
    let ranges = CoefficientRanges::default();
    let numerator = random_sparse_model_with::<T>(m, n, &prior_support, rng.random(), &ranges)?;
    let numerator = match numerator.inverse {
        InverseSpectrum::PseudoPolynomial(p) => p,
        _ => unreachable!("random_sparse_model builds pseudo-polynomials"),
    };
    let b1 = signed(&mut rng, (0.5, 0.8));
    let prior_inverse = InverseSpectrum::MovingAverage {
        numerator,
        ma: vec![T::lit(b1)],
    };
    let new_pairs = random_new_edges(&prior_support, 2, &mut rng);
    let mut delta: MatrixPseudoPolynomial<T> = random_coefficients(m, n, &new_pairs, &ranges, &mut rng);
    let grid = Arc::new(FrequencyGrid::new(DEFAULT_GRID_SIZE)?);
    delta = load_diagonal(delta, &grid, Some(&prior_inverse))?;
    let mut support = prior_support.clone();
    for &(i, j) in &new_pairs {
        support.insert(i, j)?;
    }
    let prior = GroundTruthModel {
        inverse: prior_inverse.clone(),
        support: prior_support,
        seed,
    };
    let truth = GroundTruthModel {
        inverse: InverseSpectrum::Sum(Box::new(prior_inverse), delta),
        support,
        seed,
    };
    Ok(ScenarioSpec {
        prior,
        windows: vec![WindowSpec { model: truth, len }],
        grid_size: DEFAULT_GRID_SIZE,
        seed,
    })
}
