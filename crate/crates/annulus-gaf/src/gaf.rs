//! Sampling Gaussian Laurent series and locating their zeros.
//!
//! A draw of the annulus GAF is `X(z) = Σ ζₙ zⁿ / √(1 + r q²ⁿ)` with i.i.d.
//! standard complex Gaussians `ζₙ` (`E|ζ|² = 1`).  The series is truncated
//! asymmetrically: the positive and negative tails decay at different rates
//! on a window `ρ_in < |z| < ρ_out`, and each side is cut where its discarded
//! part falls below a tolerance on that window.
//!
//! Every replica draws from its own ChaCha stream `(seed, replica)`, so Monte
//! Carlo estimates are identical however the replicas are scheduled.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::{self, Domain};
use crate::pointprocess;
use crate::quadrature;
use crate::roots;
use crate::theta::Nome;
use crate::Complex;

/// Default relative truncation tolerance on the evaluation window.
pub const DEFAULT_TAIL_TOL: f64 = 1e-12;
/// Largest tail bound accepted by [`find_zeros`], relative to unit-scale terms.
pub const TAIL_ACCEPT: f64 = 1e-10;
/// Hard limit on modes per side.
pub const MAX_MODES: usize = 4000;
/// Newton steps applied to every root on the Laurent form.
pub const POLISH_STEPS: usize = 5;
/// Relative residual `|X(ζ)| / Σ|cₙ||ζ|ⁿ` above which a root is rejected.
pub const RESIDUAL_TOL: f64 = 1e-8;
/// Smallest sample count for an [`EstimateWithError`].
pub const MIN_SAMPLES: usize = 100;
/// Fewest joint events accepted by [`mc_pair_statistic`].
pub const MIN_PAIR_EVENTS: u64 = 50;

/// Covariance structure of the sampled series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Model {
    /// Weighted Szegő kernel `S_{𝔸_q}(·,·; r)`.
    Annulus { q: f64, r: f64 },
    /// Weighted disk kernel `S_𝔻(·,·; r)` (modes `n ≥ 0`).
    Disk { r: f64 },
    /// Covariance `S_{𝔸_q}(·,·; q)²`.
    Squared { q: f64 },
}

impl Model {
    pub fn annulus(q: f64, r: f64) -> Result<Self> {
        Nome::new(q)?;
        check_weight(r)?;
        Ok(Model::Annulus { q, r })
    }

    pub fn disk(r: f64) -> Result<Self> {
        if !(r >= 0.0 && r.is_finite()) {
            return Err(Error::InvalidParameter(format!("weight r = {r} must be non-negative")));
        }
        Ok(Model::Disk { r })
    }

    pub fn squared(q: f64) -> Result<Self> {
        let a = kernels::sk_constant(q)?;
        if !(a - 0.5 / q.ln() > 0.0) {
            return Err(Error::InvalidParameter(format!("a(q) − 1/(2 log q) = {} is not positive", a - 0.5 / q.ln())));
        }
        Ok(Model::Squared { q })
    }

    /// Inner radius of the domain (0 for the disk).
    pub fn q(&self) -> f64 {
        match *self {
            Model::Annulus { q, .. } | Model::Squared { q } => q,
            Model::Disk { .. } => 0.0,
        }
    }

    /// Standard deviation `cₙ` of the `n`-th coefficient.
    pub fn scale(&self, n: i64) -> f64 {
        match *self {
            Model::Annulus { q, r } => 1.0 / (1.0 + r * q.powf(2.0 * n as f64)).sqrt(),
            Model::Disk { r } => match n {
                0 => 1.0 / (1.0 + r).sqrt(),
                n if n > 0 => 1.0,
                _ => 0.0,
            },
            Model::Squared { q } => {
                if n == -1 {
                    (kernels::sk_constant(q).unwrap_or(f64::NAN) - 0.5 / q.ln()).sqrt()
                } else {
                    let m = (n + 1) as f64;
                    (m / (1.0 - q.powf(2.0 * m))).sqrt()
                }
            }
        }
    }

    /// Covariance `E[X(z) conj X(w)]` in closed form.
    pub fn covariance(&self, z: Complex, w: Complex) -> Result<Complex> {
        match *self {
            Model::Annulus { q, r } => kernels::szego_annulus(z, w, r, q),
            Model::Disk { r } => Ok(kernels::szego_disk(z, w, Some(r))),
            Model::Squared { q } => Ok(kernels::szego_annulus(z, w, q, q)?.powi(2)),
        }
    }
}

fn check_weight(r: f64) -> Result<()> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!("weight r = {r} must be positive and finite")));
    }
    Ok(())
}

/// Number of modes kept on each side of `n = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Truncation {
    pub negative: usize,
    pub positive: usize,
}

impl Truncation {
    /// Smallest truncation whose discarded tails stay below `tol` (relative to
    /// unit-scale terms) for `inner ≤ |z| ≤ outer`.
    pub fn for_window(model: &Model, inner: f64, outer: f64, tol: f64) -> Result<Self> {
        if !(outer < 1.0 && outer > inner && inner >= model.q()) {
            return Err(Error::InvalidParameter(format!("window ({inner}, {outer}) not inside the domain")));
        }
        let positive = (1..=MAX_MODES)
            .find(|&n| positive_tail(model, n, outer) < tol)
            .ok_or(Error::TruncationInsufficient { modes: MAX_MODES, tail: positive_tail(model, MAX_MODES, outer), radius: outer })?;
        let negative = match model {
            Model::Disk { .. } => 0,
            _ => (1..=MAX_MODES)
                .find(|&m| negative_tail(model, m, inner) < tol)
                .ok_or(Error::TruncationInsufficient { modes: MAX_MODES, tail: negative_tail(model, MAX_MODES, inner), radius: inner })?,
        };
        Ok(Truncation { negative, positive })
    }

    /// Window `q + δ < |z| < 1 − δ` (`0 ≤ |z| < 1 − δ` for the disk).
    pub fn for_margin(model: &Model, margin: f64) -> Result<Self> {
        let (inner, outer) = margin_window(model, margin)?;
        Truncation::for_window(model, inner, outer, DEFAULT_TAIL_TOL)
    }

    pub fn degree(&self) -> usize {
        self.negative + self.positive
    }
}

/// Bound on `Σ_{n>N} cₙ ρⁿ`, assuming the terms decay at least as fast as a
/// geometric series with the ratio of the first two discarded terms.
fn positive_tail(model: &Model, n: usize, rho: f64) -> f64 {
    geometric_tail(|k| model.scale(k as i64) * rho.powi(k as i32), n)
}

fn negative_tail(model: &Model, m: usize, rho: f64) -> f64 {
    if rho == 0.0 {
        return f64::INFINITY;
    }
    geometric_tail(|k| model.scale(-(k as i64)) * rho.powi(-(k as i32)), m)
}

fn geometric_tail(term: impl Fn(usize) -> f64, n: usize) -> f64 {
    let t1 = term(n + 1);
    let ratio = term(n + 2) / t1;
    if !(ratio < 1.0) || !t1.is_finite() {
        return f64::INFINITY;
    }
    t1 / (1.0 - ratio)
}

fn margin_window(model: &Model, margin: f64) -> Result<(f64, f64)> {
    let q = model.q();
    if !(margin > 0.0 && margin < (1.0 - q) / 4.0) {
        return Err(Error::OutOfRange { value: margin, lo: 0.0, hi: (1.0 - q) / 4.0 });
    }
    let inner = if q == 0.0 { 0.0 } else { q + margin };
    Ok((inner, 1.0 - margin))
}

/// Default margin `δ = 0.02 (1 − q)`.
pub fn default_margin(q: f64) -> f64 {
    0.02 * (1.0 - q)
}

/// One truncated draw.  `coeffs[k]` multiplies `z^{k − negative}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LaurentSample {
    coeffs: Vec<Complex>,
    negative: usize,
    q: f64,
    seed: u64,
    replica: u64,
    /// Finite by construction, so there is no discarded tail.
    exact: bool,
}

impl LaurentSample {
    /// A fixed (non-random) Laurent polynomial `Σ_{n=−neg}^{…} cₙ zⁿ` on the
    /// annulus with inner radius `q` (0 for the disk).
    pub fn from_coefficients(coeffs: Vec<Complex>, negative: usize, q: f64) -> Result<Self> {
        if coeffs.len() <= negative {
            return Err(Error::DimensionMismatch(format!("{} coefficients cannot hold {negative} negative modes", coeffs.len())));
        }
        if coeffs.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::InvalidParameter("non-finite coefficient".into()));
        }
        Ok(LaurentSample { coeffs, negative, q, seed: 0, replica: 0, exact: true })
    }

    pub fn coeffs(&self) -> &[Complex] {
        &self.coeffs
    }

    /// Coefficient of `zⁿ` (zero outside the kept range).
    pub fn coeff(&self, n: i64) -> Complex {
        let k = n + self.negative as i64;
        if k < 0 || k as usize >= self.coeffs.len() {
            Complex::new(0.0, 0.0)
        } else {
            self.coeffs[k as usize]
        }
    }

    pub fn truncation(&self) -> Truncation {
        Truncation { negative: self.negative, positive: self.coeffs.len() - 1 - self.negative }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn replica(&self) -> u64 {
        self.replica
    }

    /// `(X(z), X'(z), Σ|cₙ||z|ⁿ)` by two Horner passes, one in `z` for
    /// `n ≥ 0` and one in `1/z` for `n < 0`.
    pub fn eval_with_derivative(&self, z: Complex) -> (Complex, Complex, f64) {
        let zero = Complex::new(0.0, 0.0);
        let (neg, pos) = self.coeffs.split_at(self.negative);
        let az = z.norm();
        let (mut p, mut dp, mut scale) = (zero, zero, 0.0);
        for c in pos.iter().rev() {
            dp = dp * z + p;
            p = p * z + c;
            scale = scale * az + c.norm();
        }
        if neg.is_empty() {
            return (p, dp, scale);
        }
        // Σ_{m=1}^{M} c_{−m} w^m with w = 1/z, and its w-derivative.
        let w = z.inv();
        let aw = w.norm();
        let (mut s, mut ds, mut sscale) = (zero, zero, 0.0);
        for c in neg.iter() {
            ds = ds * w + s;
            s = s * w + c;
            sscale = sscale * aw + c.norm();
        }
        // The loop computed Σ c_{−m} w^{m−1}; multiply by w once more.
        let value = s * w;
        let dvalue_dw = ds * w + s;
        (p + value, dp - dvalue_dw * w * w, scale + sscale * aw)
    }

    pub fn eval(&self, z: Complex) -> Complex {
        self.eval_with_derivative(z).0
    }
}

/// Draws the coefficients of `model` for replica `replica` of `seed`.
pub fn sample(model: &Model, truncation: Truncation, seed: u64, replica: u64) -> LaurentSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replica);
    let neg = match model {
        Model::Disk { .. } => 0,
        _ => truncation.negative,
    };
    let coeffs = (-(neg as i64)..=truncation.positive as i64)
        .map(|n| standard_complex_gaussian(&mut rng) * model.scale(n))
        .collect();
    LaurentSample { coeffs, negative: neg, q: model.q(), seed, replica, exact: false }
}

/// `ζ = (ξ₁ + iξ₂)/√2` with independent standard normals, so `E|ζ|² = 1`.
pub fn standard_complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Annulus draw, modes `−N..=N`.
pub fn sample_gaf_annulus(q: f64, r: f64, modes: usize, seed: u64) -> Result<LaurentSample> {
    Ok(sample(&Model::annulus(q, r)?, Truncation { negative: modes, positive: modes }, seed, 0))
}

/// Disk draw, modes `0..=N`.
pub fn sample_gaf_disk(r: f64, modes: usize, seed: u64) -> Result<LaurentSample> {
    Ok(sample(&Model::disk(r)?, Truncation { negative: 0, positive: modes }, seed, 0))
}

/// Draw with covariance `S_{𝔸_q}(·,·; q)²`, modes `−N..=N`.
pub fn sample_gaf2_annulus(q: f64, modes: usize, seed: u64) -> Result<LaurentSample> {
    Ok(sample(&Model::squared(q)?, Truncation { negative: modes, positive: modes }, seed, 0))
}

/// Zeros of one draw inside `inner < |z| < outer`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZeroSet {
    pub zeros: Vec<Complex>,
    pub inner: f64,
    pub outer: f64,
    pub residual_max: f64,
}

/// Zeros of the sample in the margin window: all roots of `z^{N₋} X(z)` from
/// the global solver, polished by Newton on the Laurent form and filtered to
/// `q + δ < |z| < 1 − δ` (`|z| < 1 − δ` for the disk).
pub fn find_zeros(sample: &LaurentSample, margin: f64) -> Result<ZeroSet> {
    let q = sample.q;
    if !(margin > 0.0 && margin < (1.0 - q) / 4.0) {
        return Err(Error::OutOfRange { value: margin, lo: 0.0, hi: (1.0 - q) / 4.0 });
    }
    let inner = if q == 0.0 { 0.0 } else { q + margin };
    let outer = 1.0 - margin;
    if !sample.exact {
        check_tails(sample, inner, outer)?;
    }
    let all = roots::polynomial_roots(&sample.coeffs)?;
    let mut zeros = Vec::new();
    let mut residual_max: f64 = 0.0;
    for root in all {
        // Roots well outside the window are never polished.
        let m = root.norm();
        if m < 0.9 * inner || m > outer + 0.1 * margin {
            continue;
        }
        let mut z = root;
        for _ in 0..POLISH_STEPS {
            let (f, df, _) = sample.eval_with_derivative(z);
            if df.norm() == 0.0 || f.norm() == 0.0 {
                break;
            }
            z -= f / df;
        }
        let m = z.norm();
        if !(m > inner && m < outer) {
            continue;
        }
        let (f, _, scale) = sample.eval_with_derivative(z);
        let residual = f.norm() / scale;
        if !(residual < RESIDUAL_TOL) {
            return Err(Error::NonConvergedRoot { re: z.re, im: z.im, residual });
        }
        residual_max = residual_max.max(residual);
        zeros.push(z);
    }
    Ok(ZeroSet { zeros, inner, outer, residual_max })
}

/// The discarded tails, bounded with the deterministic coefficient scales of
/// the kept extreme modes, must be small on the window.
fn check_tails(sample: &LaurentSample, inner: f64, outer: f64) -> Result<()> {
    let t = sample.truncation();
    let n = sample.coeffs.len();
    let ln_top = sample.coeffs[n - 4.min(t.positive + 1)..]
        .iter()
        .enumerate()
        .map(|(k, c)| c.norm().ln() + (t.positive + 1 + k - 4.min(t.positive + 1)) as f64 * outer.ln())
        .fold(f64::NEG_INFINITY, f64::max);
    let pos_tail = (ln_top + outer.ln()).exp() / (1.0 - outer);
    if pos_tail > TAIL_ACCEPT {
        return Err(Error::TruncationInsufficient { modes: t.positive, tail: pos_tail, radius: outer });
    }
    if t.negative > 0 {
        // Kept extreme terms at the inner radius, then a geometric tail with
        // the deterministic mode-to-mode ratio q/inner.
        let ratio = sample.q / inner;
        let ln_term = sample.coeffs[..4.min(t.negative)]
            .iter()
            .enumerate()
            .map(|(k, c)| c.norm().ln() - (t.negative - k) as f64 * inner.ln())
            .fold(f64::NEG_INFINITY, f64::max);
        let neg_tail = (ln_term + ratio.ln()).exp() / (1.0 - ratio);
        if neg_tail > TAIL_ACCEPT {
            return Err(Error::TruncationInsufficient { modes: t.negative, tail: neg_tail, radius: inner });
        }
    } else if sample.q > 0.0 {
        return Err(Error::TruncationInsufficient { modes: 0, tail: f64::INFINITY, radius: inner });
    }
    Ok(())
}

/// Winding number of `X` along `|z| = radius` (zeros inside minus the pole
/// order `N₋` at the origin), sampled finely enough that each step turns by
/// less than a quarter.
pub fn argument_principle_count(sample: &LaurentSample, radius: f64) -> i64 {
    let degree = sample.coeffs.len();
    let mut steps = 64 * degree.max(8);
    loop {
        let mut total = 0.0;
        let mut prev = sample.eval(Complex::new(radius, 0.0));
        let mut ok = true;
        for k in 1..=steps {
            let z = Complex::from_polar(radius, 2.0 * PI * k as f64 / steps as f64);
            let cur = sample.eval(z);
            let d = (cur / prev).arg();
            if d.abs() > PI / 2.0 {
                ok = false;
                break;
            }
            total += d;
            prev = cur;
        }
        if ok || steps > 1 << 22 {
            return (total / (2.0 * PI)).round() as i64;
        }
        steps *= 4;
    }
}

/// A Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateWithError {
    pub value: f64,
    pub std_error: f64,
    pub n_samples: usize,
}

impl EstimateWithError {
    /// Mean and `sd/√n` of per-sample values (`n ≥ 100`).
    pub fn from_samples(values: &[f64]) -> Result<Self> {
        let n = values.len();
        if n < MIN_SAMPLES {
            return Err(Error::InvalidParameter(format!("{n} samples; at least {MIN_SAMPLES} required")));
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Ok(EstimateWithError { value: mean, std_error: (var / n as f64).sqrt(), n_samples: n })
    }

    /// Multiplies value and error by a positive constant.
    pub fn scaled(self, factor: f64) -> Self {
        EstimateWithError { value: self.value * factor, std_error: self.std_error * factor.abs(), n_samples: self.n_samples }
    }

    /// `(value − reference) / std_error`.
    pub fn z_score(&self, reference: f64) -> f64 {
        (self.value - reference) / self.std_error
    }
}

fn check_samples(n: usize) -> Result<()> {
    if n < MIN_SAMPLES {
        return Err(Error::InvalidParameter(format!("{n} samples; at least {MIN_SAMPLES} required")));
    }
    Ok(())
}

/// Draws `n` replicas in parallel and maps each through `f`; results are in
/// replica order.
fn replicas<T: Send>(model: &Model, truncation: Truncation, seed: u64, n: usize, f: impl Fn(LaurentSample) -> Result<T> + Sync) -> Result<Vec<T>> {
    (0..n as u64).into_par_iter().map(|k| f(sample(model, truncation, seed, k))).collect()
}

/// Settings of a density experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityConfig {
    pub model: Model,
    pub margin: f64,
    pub bins: usize,
    pub samples: usize,
    pub seed: u64,
    /// Overrides the automatic truncation.
    pub truncation: Option<Truncation>,
}

/// One radial bin `lo ≤ |z| < hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DensityBin {
    pub lo: f64,
    pub hi: f64,
    pub estimate: EstimateWithError,
    /// Bin average of the analytic one-point density.
    pub analytic: f64,
}

impl DensityBin {
    pub fn z_score(&self) -> f64 {
        self.estimate.z_score(self.analytic)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityEstimate {
    pub bins: Vec<DensityBin>,
    pub truncation: Truncation,
    pub residual_max: f64,
}

impl DensityEstimate {
    pub fn max_abs_z(&self) -> f64 {
        self.bins.iter().map(|b| b.z_score().abs()).fold(0.0, f64::max)
    }
}

fn density_model_rho1(model: &Model, modulus: f64) -> Result<f64> {
    match *model {
        Model::Annulus { q, r } => pointprocess::rho1_annulus_radial(modulus, r, q),
        Model::Disk { r } => Ok(pointprocess::rho1_disk_radial(modulus, r)),
        Model::Squared { .. } => Err(Error::InvalidParameter("no closed-form density for the squared-kernel model".into())),
    }
}

/// Average of `ρ¹` over `lo ≤ |z| < hi` with respect to `m/π`.
pub fn bin_average_rho1(model: &Model, lo: f64, hi: f64) -> Result<f64> {
    density_model_rho1(model, 0.5 * (lo + hi))?;
    let integral = quadrature::integrate(|t| density_model_rho1(model, t).unwrap_or(f64::NAN) * 2.0 * t, lo, hi, 1e-12);
    Ok(integral.value / (hi * hi - lo * lo))
}

/// Histogram of zero moduli over equal-width radial bins of the margin
/// window, normalised by bin measure `(hi² − lo²)` so that it estimates `ρ¹`
/// with respect to `m/π`.
pub fn mc_density(config: &DensityConfig) -> Result<DensityEstimate> {
    check_samples(config.samples)?;
    if config.bins == 0 {
        return Err(Error::InvalidParameter("at least one bin is required".into()));
    }
    let (inner, outer) = margin_window(&config.model, config.margin)?;
    let truncation = match config.truncation {
        Some(t) => t,
        None => Truncation::for_margin(&config.model, config.margin)?,
    };
    let width = (outer - inner) / config.bins as f64;
    let per_sample = replicas(&config.model, truncation, config.seed, config.samples, |s| {
        let zs = find_zeros(&s, config.margin)?;
        let mut counts = vec![0u32; config.bins];
        for z in &zs.zeros {
            let k = (((z.norm() - inner) / width) as usize).min(config.bins - 1);
            counts[k] += 1;
        }
        Ok((counts, zs.residual_max))
    })?;
    let residual_max = per_sample.iter().map(|(_, r)| *r).fold(0.0, f64::max);
    let bins = (0..config.bins)
        .map(|k| {
            let lo = inner + k as f64 * width;
            let hi = if k + 1 == config.bins { outer } else { lo + width };
            let values: Vec<f64> = per_sample.iter().map(|(c, _)| c[k] as f64).collect();
            let estimate = EstimateWithError::from_samples(&values)?.scaled(1.0 / (hi * hi - lo * lo));
            Ok(DensityBin { lo, hi, estimate, analytic: bin_average_rho1(&config.model, lo, hi)? })
        })
        .collect::<Result<_>>()?;
    Ok(DensityEstimate { bins, truncation, residual_max })
}

/// Cells for the pair statistic: `|z|, |w| ∈ [x − ε, x + ε]` with
/// `arg(w/z)` within `η` of `π`, i.e. pairs near `(−x, x)` up to rotation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairConfig {
    pub q: f64,
    pub r: f64,
    pub x: f64,
    pub radial_half_width: f64,
    pub angular_half_width: f64,
    pub margin: f64,
    pub samples: usize,
    pub seed: u64,
    pub truncation: Option<Truncation>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairEstimate {
    /// Mean pair count divided by its value for an uncorrelated process.
    pub estimate: EstimateWithError,
    /// The same ratio computed from the analytic `ρ²`.
    pub analytic_cell: f64,
    /// `G^∨(x; r)` at the cell centre.
    pub g_vee: f64,
    pub events: u64,
    pub truncation: Truncation,
}

fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    // Newton on P_n with the standard initial guesses.
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut t = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, t);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * t * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (t * p1 - p0) / (t * t - 1.0);
            let dt = p1 / dp;
            t -= dt;
            if dt.abs() < 1e-16 {
                let dp = {
                    let (mut p0, mut p1) = (1.0, t);
                    for k in 2..=n {
                        let p2 = ((2 * k - 1) as f64 * t * p1 - (k - 1) as f64 * p0) / k as f64;
                        p0 = p1;
                        p1 = p2;
                    }
                    n as f64 * (t * p1 - p0) / (t * t - 1.0)
                };
                x[i] = t;
                w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
                break;
            }
        }
    }
    (x, w)
}

/// Analytic cell ratio `∫∫ρ² / ∫∫ρ¹ρ¹` over the pair cell.
pub fn pair_cell_ratio(q: f64, r: f64, x: f64, eps: f64, eta: f64) -> Result<f64> {
    let (nodes, weights) = gauss_legendre(12);
    let map = |t: f64, lo: f64, hi: f64| 0.5 * (hi - lo) * t + 0.5 * (hi + lo);
    let (lo, hi) = (x - eps, x + eps);
    let mut num = 0.0;
    let mut den = 0.0;
    for (i, &ti) in nodes.iter().enumerate() {
        let s = map(ti, lo, hi);
        let rs = pointprocess::rho1_annulus_radial(s, r, q)?;
        for (j, &tj) in nodes.iter().enumerate() {
            let t = map(tj, lo, hi);
            let rt = pointprocess::rho1_annulus_radial(t, r, q)?;
            for (k, &tk) in nodes.iter().enumerate() {
                let phi = map(tk, -eta, eta);
                let g = pointprocess::unfolded_g(Complex::new(s, 0.0), -Complex::from_polar(t, phi), r, Domain::Annulus { q })?;
                let wgt = weights[i] * weights[j] * weights[k] * rs * rt * s * t;
                num += wgt * g;
                den += wgt;
            }
        }
    }
    Ok(num / den)
}

/// Ring integral `∫ ρ¹ dm/π` over `lo ≤ |z| < hi`.
fn ring_mass(q: f64, r: f64, lo: f64, hi: f64) -> Result<f64> {
    let model = Model::annulus(q, r)?;
    Ok(bin_average_rho1(&model, lo, hi)? * (hi * hi - lo * lo))
}

/// Ordered pairs of zeros falling into the pair cell, divided by the
/// expected count `(∫_ring ρ¹)² · η/π` of an uncorrelated process with the
/// same density.
pub fn mc_pair_statistic(config: &PairConfig) -> Result<PairEstimate> {
    check_samples(config.samples)?;
    let PairConfig { q, r, x, radial_half_width: eps, angular_half_width: eta, margin, .. } = *config;
    let model = Model::annulus(q, r)?;
    let (inner, outer) = margin_window(&model, margin)?;
    if !(x - eps > inner && x + eps < outer && eps > 0.0 && eta > 0.0 && eta < PI) {
        return Err(Error::InvalidParameter("pair cells must lie inside the margin window".into()));
    }
    let truncation = match config.truncation {
        Some(t) => t,
        None => Truncation::for_margin(&model, margin)?,
    };
    let counts = replicas(&model, truncation, config.seed, config.samples, |s| {
        let zs = find_zeros(&s, margin)?;
        let ring: Vec<Complex> = zs.zeros.into_iter().filter(|z| (z.norm() - x).abs() <= eps).collect();
        let mut c = 0u64;
        for (i, a) in ring.iter().enumerate() {
            for (j, b) in ring.iter().enumerate() {
                if i != j && (PI - (b / a).arg().abs()).abs() < eta {
                    c += 1;
                }
            }
        }
        Ok(c)
    })?;
    let events: u64 = counts.iter().sum();
    if events < MIN_PAIR_EVENTS {
        return Err(Error::InsufficientStatistics { events, required: MIN_PAIR_EVENTS });
    }
    let mass = ring_mass(q, r, x - eps, x + eps)?;
    let expected = mass * mass * eta / PI;
    let values: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    Ok(PairEstimate {
        estimate: EstimateWithError::from_samples(&values)?.scaled(1.0 / expected),
        analytic_cell: pair_cell_ratio(q, r, x, eps, eta)?,
        g_vee: pointprocess::g_vee(x, r, q)?,
        events,
        truncation,
    })
}

/// Comparison of one empirical covariance entry with its closed form.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CovarianceEntry {
    pub z: Complex,
    pub w: Complex,
    pub empirical: Complex,
    pub analytic: Complex,
    /// `max(|Δre|/se_re, |Δim|/se_im)`, ignoring components with zero spread.
    pub z_score: f64,
}

fn covariance_entries(
    values: &[Vec<Complex>],
    probes: &[(usize, usize)],
    points: &[Complex],
    analytic: impl Fn(Complex, Complex) -> Result<Complex>,
) -> Result<Vec<CovarianceEntry>> {
    probes
        .iter()
        .map(|&(i, j)| {
            let prods: Vec<Complex> = values.iter().map(|v| v[i] * v[j].conj()).collect();
            let re = EstimateWithError::from_samples(&prods.iter().map(|p| p.re).collect::<Vec<_>>())?;
            let im = EstimateWithError::from_samples(&prods.iter().map(|p| p.im).collect::<Vec<_>>())?;
            let a = analytic(points[i], points[j])?;
            let score = |e: EstimateWithError, t: f64| if e.std_error > 0.0 { e.z_score(t).abs() } else { 0.0 };
            Ok(CovarianceEntry {
                z: points[i],
                w: points[j],
                empirical: Complex::new(re.value, im.value),
                analytic: a,
                z_score: score(re, a.re).max(score(im, a.im)),
            })
        })
        .collect()
}

/// Empirical covariance of the model at all pairs of `points`, against
/// [`Model::covariance`].
pub fn mc_covariance(model: &Model, points: &[Complex], samples: usize, seed: u64) -> Result<Vec<CovarianceEntry>> {
    check_samples(samples)?;
    let (inner, outer) = window_of(points, model.q())?;
    let truncation = Truncation::for_window(model, inner, outer, 1e-14)?;
    let values = replicas(model, truncation, seed, samples, |s| Ok(points.iter().map(|&z| s.eval(z)).collect::<Vec<_>>()))?;
    let probes: Vec<(usize, usize)> = (0..points.len()).flat_map(|i| (i..points.len()).map(move |j| (i, j))).collect();
    covariance_entries(&values, &probes, points, |z, w| model.covariance(z, w))
}

fn window_of(points: &[Complex], q: f64) -> Result<(f64, f64)> {
    let lo = points.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|z| z.norm()).fold(0.0, f64::max);
    if !(lo > q && hi < 1.0) {
        return Err(Error::OutOfAnnulus { modulus: if lo <= q { lo } else { hi }, inner: q, outer: 1.0 });
    }
    Ok((if q == 0.0 { 0.0 } else { lo }, hi))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionalCheck {
    pub entries: Vec<CovarianceEntry>,
    pub max_z_score: f64,
    /// Largest `|Y(α)|` over samples and anchors.
    pub anchor_max: f64,
}

/// Samples `Y = γ · X^{r∏|α|²}` with `γ = ∏ h_α` and compares its
/// empirical covariance at the probe pairs with the Schur-complement kernel
/// of `S(·,·; r)` at the anchors.
pub fn conditional_covariance_check(
    q: f64,
    r: f64,
    anchors: &[Complex],
    probes: &[(Complex, Complex)],
    samples: usize,
    seed: u64,
) -> Result<ConditionalCheck> {
    check_samples(samples)?;
    let list = kernels::AnchorList::new(anchors.to_vec(), r, q)?;
    let model = Model::annulus(q, list.effective_weight())?;
    let mut points: Vec<Complex> = anchors.to_vec();
    let mut pairs = Vec::new();
    for &(z, w) in probes {
        let i = points.len();
        points.push(z);
        points.push(w);
        pairs.push((i, i + 1));
    }
    let (inner, outer) = window_of(&points, q)?;
    let truncation = Truncation::for_window(&model, inner, outer, 1e-14)?;
    let nome = Nome::new(q)?;
    let gamma: Vec<Complex> = points
        .iter()
        .map(|&z| anchors.iter().try_fold(Complex::new(1.0, 0.0), |acc, &a| Ok(acc * kernels::h_alpha(z, a, nome.q())?)))
        .collect::<Result<_>>()?;
    let values = replicas(&model, truncation, seed, samples, |s| {
        Ok(points.iter().zip(&gamma).map(|(&z, g)| g * s.eval(z)).collect::<Vec<_>>())
    })?;
    let anchor_max = values.iter().flat_map(|v| v[..anchors.len()].iter().map(|y| y.norm())).fold(0.0, f64::max);
    let entries = covariance_entries(&values, &pairs, &points, |z, w| {
        kernels::conditional_kernel(|a, b| kernels::szego_annulus(a, b, r, q), anchors, z, w)
    })?;
    let max_z_score = entries.iter().map(|e| e.z_score).fold(0.0, f64::max);
    Ok(ConditionalCheck { entries, max_z_score, anchor_max })
}

/// Empirical `|corr(X(α), X(α̂))|` for the unweighted annulus GAF (`r = q`),
/// `α̂ = −q/ᾱ`.
pub fn pair_independence(q: f64, alpha: Complex, samples: usize, seed: u64) -> Result<f64> {
    check_samples(samples)?;
    let hat = kernels::alpha_hat(alpha, q);
    let model = Model::annulus(q, q)?;
    let points = [alpha, hat];
    let (inner, outer) = window_of(&points, q)?;
    let truncation = Truncation::for_window(&model, inner, outer, 1e-14)?;
    let values = replicas(&model, truncation, seed, samples, |s| Ok([s.eval(alpha), s.eval(hat)]))?;
    let n = samples as f64;
    let cross: Complex = values.iter().map(|v| v[0] * v[1].conj()).sum::<Complex>() / n;
    let va = values.iter().map(|v| v[0].norm_sqr()).sum::<f64>() / n;
    let vb = values.iter().map(|v| v[1].norm_sqr()).sum::<f64>() / n;
    Ok(cross.norm() / (va * vb).sqrt())
}
