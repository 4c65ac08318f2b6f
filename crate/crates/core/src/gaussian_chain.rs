//! Gaussian (Rouse) chain: `N + 1` beads joined by ideal springs.
//!
//! Normal modes decouple. With spring constant and friction set to one, mode
//! `k` relaxes as `ȧ_k = −2λ_k (a_k − a*_k)` with `a*_k = 2/λ_k`, which is the
//! gradient flow of
//!
//! ```text
//! F(a) = Σ_k λ_k (a*_k/a_k − ln(a*_k/a_k) − 1)
//! ```
//!
//! under the variance block `1/(2a_k²)` of the Fisher metric. Means are frozen
//! at zero, so the working chart is the variances alone.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gradient_flow::{compare, AsymmetryReport, CompareOptions, EquidistantPair, Horizon, Verdict};
use crate::linalg::Matrix;
use crate::manifold::{Chart, MetricField, ScalarPotential, Trajectory};
use crate::scalar::Scalar;
use crate::straightening::{scalar_curvature, RicciContraction, StraighteningConnection};

/// `|a − a*| < SINGULAR_BAND · a*` is treated as the curvature singularity.
pub const SINGULAR_BAND: f64 = 1e-6;

/// Chain size and initial temperature ratio `T̃ = T_initial / T_bath`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainSpec<T> {
    /// Number of beads, `N + 1`; the chain has `N = n_beads − 1` modes.
    pub n_beads: usize,
    pub t_tilde: T,
}

impl<T: Scalar> ChainSpec<T> {
    pub fn new(n_beads: usize, t_tilde: T) -> Result<Self> {
        if n_beads < 2 {
            return Err(Error::InvalidArgument(format!("n_beads must be at least 2, got {n_beads}")));
        }
        if !(t_tilde > T::zero()) || !t_tilde.is_finite() {
            return Err(Error::InvalidArgument(format!("temperature ratio must be positive, got {t_tilde}")));
        }
        Ok(Self { n_beads, t_tilde })
    }

    pub fn modes(&self) -> usize {
        self.n_beads - 1
    }
}

/// Mode rates `λ_k` (ascending) and equilibrium variances `a*_k = 2/λ_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSpectrum<T> {
    pub lambdas: Vec<T>,
    pub a_star: Vec<T>,
}

impl<T: Scalar> ModeSpectrum<T> {
    /// Spectrum from explicit positive rates.
    pub fn from_lambdas(mut lambdas: Vec<T>) -> Result<Self> {
        if lambdas.is_empty() || lambdas.iter().any(|l| !(*l > T::zero()) || !l.is_finite()) {
            return Err(Error::InvalidArgument("mode rates must be positive".into()));
        }
        lambdas.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        let a_star = lambdas.iter().map(|&l| T::lit(2.0) / l).collect();
        Ok(Self { lambdas, a_star })
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    /// The one-mode spectrum of mode `k`.
    pub fn mode(&self, k: usize) -> Self {
        Self {
            lambdas: vec![self.lambdas[k]],
            a_star: vec![self.a_star[k]],
        }
    }

    /// Uniform start `a_k = T̃ a*_k`.
    pub fn scaled_equilibrium(&self, t_tilde: T) -> Vec<T> {
        self.a_star.iter().map(|&a| t_tilde * a).collect()
    }

    fn check_state(&self, a: &[T]) -> Result<()> {
        if a.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                got: a.len(),
            });
        }
        if a.iter().any(|v| !(*v > T::zero()) || !v.is_finite()) {
            return Err(Error::OutOfDomain {
                point: crate::error::to_f64_vec(a),
            });
        }
        Ok(())
    }
}

/// Eigenvalues of the free-end path-graph Laplacian on `n_beads` vertices,
/// with the zero (centre-of-mass) mode dropped.
pub fn spectrum<T: Scalar>(spec: &ChainSpec<T>) -> ModeSpectrum<T> {
    let n = spec.n_beads;
    let lap = Matrix::from_fn(n, |i, j| {
        if i == j {
            if i == 0 || i == n - 1 {
                T::one()
            } else {
                T::lit(2.0)
            }
        } else if i.abs_diff(j) == 1 {
            -T::one()
        } else {
            T::zero()
        }
    });
    let eig = lap.symmetric_eigenvalues();
    // ascending; the first is the zero mode
    let lambdas: Vec<T> = eig.into_iter().skip(1).collect();
    let a_star = lambdas.iter().map(|&l| T::lit(2.0) / l).collect();
    ModeSpectrum { lambdas, a_star }
}

/// `a_k(t) = (2/λ_k)(1 + (T̃ − 1) e^{−2λ_k t})`.
pub fn analytic_variance<T: Scalar>(spectrum: &ModeSpectrum<T>, t_tilde: T, k: usize, t: T) -> T {
    let l = spectrum.lambdas[k];
    spectrum.a_star[k] * (T::one() + (t_tilde - T::one()) * (-T::lit(2.0) * l * t).exp())
}

/// `ȧ_k = −2λ_k (a_k − a*_k)`.
pub fn ode_rhs<T: Scalar>(spectrum: &ModeSpectrum<T>, a: &[T]) -> Vec<T> {
    a.iter()
        .zip(&spectrum.lambdas)
        .zip(&spectrum.a_star)
        .map(|((&ak, &l), &s)| -T::lit(2.0) * l * (ak - s))
        .collect()
}

/// `D_KL(a* ‖ a) = ½ (a*/a − ln(a*/a) − 1)` for one zero-mean mode.
pub fn kl_mode<T: Scalar>(a_star: T, a: T) -> T {
    let u = a_star / a;
    T::lit(0.5) * (u - u.ln() - T::one())
}

/// `F(a) = Σ_k λ_k (a*_k/a_k − ln(a*_k/a_k) − 1)`.
pub fn potential_f<T: Scalar>(spectrum: &ModeSpectrum<T>, a: &[T]) -> Result<T> {
    spectrum.check_state(a)?;
    Ok(unchecked_f(spectrum, a))
}

fn unchecked_f<T: Scalar>(spectrum: &ModeSpectrum<T>, a: &[T]) -> T {
    a.iter()
        .zip(&spectrum.lambdas)
        .zip(&spectrum.a_star)
        .map(|((&ak, &l), &s)| T::lit(2.0) * l * kl_mode(s, ak))
        .sum()
}

/// Variance block `1/(2a²)` of the Fisher metric of a zero-mean Gaussian.
pub fn fisher_block<T: Scalar>(a: T) -> Result<T> {
    if !(a > T::zero()) || !a.is_finite() {
        return Err(Error::OutOfDomain {
            point: vec![a.to_f64().unwrap_or(f64::NAN)],
        });
    }
    Ok(T::one() / (T::lit(2.0) * a * a))
}

/// `F̈_k = 2λ_k (a*_k/a_k)(ȧ_k/a_k)²` along a gradient curve, with `ȧ` from
/// [`ode_rhs`]. This is `−C(γ̇, γ̇, γ̇)` of mode `k` for `λ ≡ 0`.
pub fn cubic_closed_form<T: Scalar>(spectrum: &ModeSpectrum<T>, a: &[T], k: usize) -> Result<T> {
    spectrum.check_state(a)?;
    let (l, s, ak) = (spectrum.lambdas[k], spectrum.a_star[k], a[k]);
    let rate = -T::lit(2.0) * l * (ak - s) / ak;
    Ok(T::lit(2.0) * l * (s / ak) * rate * rate)
}

/// `s = a(a − 5a*)/(a − a*)²`, the scalar curvature of the single-mode
/// straightening connection (`λ ≡ 0`) under [`RicciContraction::Opposite`].
pub fn scalar_curvature_mode<T: Scalar>(spectrum: &ModeSpectrum<T>, k: usize, a: T) -> Result<T> {
    let s = spectrum.a_star[k];
    check_not_singular(a, s)?;
    Ok(a * (a - T::lit(5.0) * s) / ((a - s) * (a - s)))
}

fn check_not_singular<T: Scalar>(a: T, a_star: T) -> Result<()> {
    if !(a > T::zero()) {
        return Err(Error::OutOfDomain {
            point: vec![a.to_f64().unwrap_or(f64::NAN)],
        });
    }
    if (a - a_star).abs() < T::lit(SINGULAR_BAND) * a_star {
        return Err(Error::Singularity(format!("a = {a} is at the equilibrium variance {a_star}")));
    }
    Ok(())
}

/// The same curvature through the generic tensor pipeline on the `(μ, a)`
/// chart of mode `k`.
pub fn scalar_curvature_mode_numeric<T: Scalar>(
    spectrum: &ModeSpectrum<T>,
    k: usize,
    a: T,
    contraction: RicciContraction,
) -> Result<T> {
    check_not_singular(a, spectrum.a_star[k])?;
    let g = MeanVarianceMetric;
    let conn = StraighteningConnection::new(g, ModePotential::new(spectrum, k));
    scalar_curvature(&conn, &g, &[T::zero(), a], contraction)
}

/// `T̃⁻ < 1` with `F(T̃⁻ a*) = F(T̃⁺ a*)`: solves `u − ln u = r`,
/// `r = 1/T̃⁺ − ln(1/T̃⁺)`, for `u > 1` and returns `1/u`.
///
/// Equidistance holds for every spectrum because `a*/a = 1/T̃` in every mode.
pub fn equidistant_temperatures<T: Scalar>(t_plus: T) -> Result<T> {
    if !(t_plus > T::one()) || !t_plus.is_finite() {
        return Err(Error::InvalidArgument(format!("T_plus must exceed 1, got {t_plus}")));
    }
    let v = T::one() / t_plus;
    let r = v - v.ln();
    let h = |u: T| u - u.ln() - r;
    // ln u ≤ u/2 makes h(2r + 2) ≥ 1 > 0; h(1) = 1 − r < 0
    let (mut lo, mut hi) = (T::one(), T::lit(2.0) * r + T::lit(2.0));
    let tol = T::lit(1e-12).max(T::epsilon() * T::lit(4.0));
    while hi - lo > tol * hi {
        let mid = T::lit(0.5) * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if h(mid) < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(T::one() / (T::lit(0.5) * (lo + hi)))
}

/// Diagonal Fisher metric `Σ_k da_k² / (2a_k²)` on positive variances.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ChainMetric {
    pub modes: usize,
}

impl<T: Scalar> Chart<T> for ChainMetric {
    fn dim(&self) -> usize {
        self.modes
    }
    fn contains(&self, x: &[T]) -> bool {
        x.len() == self.modes && x.iter().all(|v| *v > T::zero() && v.is_finite())
    }
}

impl<T: Scalar> MetricField<T> for ChainMetric {
    fn metric(&self, x: &[T]) -> Matrix<T> {
        let d: Vec<T> = x.iter().map(|&a| T::one() / (T::lit(2.0) * a * a)).collect();
        Matrix::from_diagonal(&d)
    }
    fn metric_partials(&self, x: &[T]) -> Vec<Matrix<T>> {
        (0..self.modes)
            .map(|l| {
                let mut m = Matrix::zeros(self.modes);
                m[(l, l)] = -T::one() / (x[l] * x[l] * x[l]);
                m
            })
            .collect()
    }
    fn inverse_metric(&self, x: &[T]) -> Result<Matrix<T>> {
        let d: Vec<T> = x.iter().map(|&a| T::one() / (T::lit(2.0) * a * a)).collect();
        Matrix::diagonal_inverse(&d)
    }
}

/// `F` as a potential on the variance chart.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainPotential<T> {
    pub spectrum: ModeSpectrum<T>,
}

impl<T: Scalar> ChainPotential<T> {
    pub fn new(spectrum: ModeSpectrum<T>) -> Self {
        Self { spectrum }
    }
}

impl<T: Scalar> ScalarPotential<T> for ChainPotential<T> {
    fn value(&self, x: &[T]) -> T {
        unchecked_f(&self.spectrum, x)
    }
    fn differential(&self, x: &[T]) -> Vec<T> {
        x.iter()
            .zip(&self.spectrum.lambdas)
            .zip(&self.spectrum.a_star)
            .map(|((&a, &l), &s)| l * (a - s) / (a * a))
            .collect()
    }
    fn hessian(&self, x: &[T]) -> Matrix<T> {
        let d: Vec<T> = x
            .iter()
            .zip(&self.spectrum.lambdas)
            .zip(&self.spectrum.a_star)
            .map(|((&a, &l), &s)| l * (T::lit(2.0) * s - a) / (a * a * a))
            .collect();
        Matrix::from_diagonal(&d)
    }
    fn minimizer(&self) -> Option<Vec<T>> {
        Some(self.spectrum.a_star.clone())
    }
}

/// Full Fisher metric `2/a dμ² + 1/(2a²) da²` of one Gaussian mode on `(μ, a)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MeanVarianceMetric;

impl<T: Scalar> Chart<T> for MeanVarianceMetric {
    fn dim(&self) -> usize {
        2
    }
    fn contains(&self, x: &[T]) -> bool {
        x.len() == 2 && x[0].is_finite() && x[1] > T::zero() && x[1].is_finite()
    }
}

impl<T: Scalar> MetricField<T> for MeanVarianceMetric {
    fn metric(&self, x: &[T]) -> Matrix<T> {
        let a = x[1];
        Matrix::from_diagonal(&[T::lit(2.0) / a, T::one() / (T::lit(2.0) * a * a)])
    }
    fn metric_partials(&self, x: &[T]) -> Vec<Matrix<T>> {
        let a = x[1];
        vec![
            Matrix::zeros(2),
            Matrix::from_diagonal(&[-T::lit(2.0) / (a * a), -T::one() / (a * a * a)]),
        ]
    }
    fn inverse_metric(&self, x: &[T]) -> Result<Matrix<T>> {
        let a = x[1];
        Matrix::diagonal_inverse(&[T::lit(2.0) / a, T::one() / (T::lit(2.0) * a * a)])
    }
}

/// `F_k` on the `(μ, a)` chart; independent of the mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModePotential<T> {
    pub lambda: T,
    pub a_star: T,
}

impl<T: Scalar> ModePotential<T> {
    pub fn new(spectrum: &ModeSpectrum<T>, k: usize) -> Self {
        Self {
            lambda: spectrum.lambdas[k],
            a_star: spectrum.a_star[k],
        }
    }
}

impl<T: Scalar> ScalarPotential<T> for ModePotential<T> {
    fn value(&self, x: &[T]) -> T {
        T::lit(2.0) * self.lambda * kl_mode(self.a_star, x[1])
    }
    fn differential(&self, x: &[T]) -> Vec<T> {
        let a = x[1];
        vec![T::zero(), self.lambda * (a - self.a_star) / (a * a)]
    }
    fn hessian(&self, x: &[T]) -> Matrix<T> {
        let a = x[1];
        Matrix::from_diagonal(&[T::zero(), self.lambda * (T::lit(2.0) * self.a_star - a) / (a * a * a)])
    }
    fn minimizer(&self) -> Option<Vec<T>> {
        Some(vec![T::zero(), self.a_star])
    }
}

/// Result of the warming-versus-cooling experiment. Curve 1 is the warming
/// start `T̃⁻ a*`, curve 2 the cooling start `T̃⁺ a*`, so `ΔF ≥ 0` means
/// warming is faster.
#[derive(Debug, Clone)]
pub struct ChainExperiment<T> {
    pub spectrum: ModeSpectrum<T>,
    pub t_plus: T,
    pub t_minus: T,
    pub level: T,
    pub full: AsymmetryReport<T>,
    pub modes: Vec<AsymmetryReport<T>>,
    /// First time the cooling curve's `F` reaches half the level.
    pub t_mid: Option<T>,
    pub delta_f_mid: Option<T>,
    pub warming_faster: bool,
}

impl<T: Scalar> ChainExperiment<T> {
    pub fn verdict(&self) -> Verdict {
        if self.warming_faster {
            Verdict::Curve1Faster
        } else {
            Verdict::Inconclusive
        }
    }
}

/// Warming-versus-cooling comparison from `F`-equidistant starts, per mode and
/// for the whole chain. `T̃⁺ = 1` pairs the equilibrium with itself.
pub fn universal_asymmetry_experiment<T: Scalar>(
    spec: &ChainSpec<T>,
    t_plus: T,
    horizon: Horizon<T>,
    tol: T,
) -> Result<ChainExperiment<T>> {
    let spectrum = spectrum(spec);
    let t_minus = if t_plus == T::one() {
        T::one()
    } else {
        equidistant_temperatures(t_plus)?
    };
    let opts = CompareOptions {
        horizon,
        tol,
        ..CompareOptions::default()
    };
    let run = |sp: &ModeSpectrum<T>| -> Result<AsymmetryReport<T>> {
        let f = ChainPotential::new(sp.clone());
        let g = ChainMetric { modes: sp.len() };
        let warm = sp.scaled_equilibrium(t_minus);
        let cool = sp.scaled_equilibrium(t_plus);
        let level = f.value(&cool);
        let pair = if t_plus == T::one() {
            EquidistantPair {
                x1: warm,
                x2: cool,
                level,
            }
        } else {
            EquidistantPair::new(&f, warm, cool, level)?
        };
        compare(&g, &f, &pair, &opts)
    };
    let (full, modes) = rayon::join(
        || run(&spectrum),
        || {
            (0..spectrum.len())
                .into_par_iter()
                .map(|k| run(&spectrum.mode(k)))
                .collect::<Result<Vec<_>>>()
        },
    );
    let (full, modes) = (full?, modes?);
    let f = ChainPotential::new(spectrum.clone());
    let level = full.level;
    let t_mid = half_level_time(&f, &full.curve2, level)?;
    let delta_f_mid = match t_mid {
        Some(t) => Some(f.value(&full.curve2.position(t)?) - f.value(&full.curve1.position(t)?)),
        None => None,
    };
    let warming_faster = full.verdict == Verdict::Curve1Faster
        && modes.iter().all(|r| r.verdict == Verdict::Curve1Faster);
    Ok(ChainExperiment {
        spectrum,
        t_plus,
        t_minus,
        level,
        full,
        modes,
        t_mid,
        delta_f_mid,
        warming_faster,
    })
}

fn half_level_time<T: Scalar>(f: &ChainPotential<T>, curve: &Trajectory<T>, level: T) -> Result<Option<T>> {
    if !(level > T::zero()) {
        return Ok(None);
    }
    let target = T::lit(0.5) * level;
    let times = curve.times();
    let Some(i) = times
        .iter()
        .position(|&t| curve.position(t).map(|x| f.value(&x) <= target).unwrap_or(false))
    else {
        return Ok(None);
    };
    if i == 0 {
        return Ok(Some(times[0]));
    }
    let (mut lo, mut hi) = (times[i - 1], times[i]);
    for _ in 0..200 {
        let mid = T::lit(0.5) * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f.value(&curve.position(mid)?) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Some(hi))
}
