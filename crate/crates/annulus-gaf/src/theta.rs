//! q-Pochhammer products and the theta function `θ(z; p) = (z; p)_∞ (p/z; p)_∞`.
//!
//! Everything else in the crate is built from these products.  All
//! evaluations are plain double precision; the tails of the products are
//! geometric, so truncating once the next factor differs from one by less
//! than `eps` keeps the relative error at the level of `eps`.

use crate::error::{Error, Result};
use crate::Complex;

/// Smallest modulus accepted by [`Nome::new`].
pub const Q_MIN: f64 = 1e-6;
/// Largest modulus accepted by [`Nome::new`]; beyond it the products converge
/// too slowly to be trusted in double precision.
pub const Q_MAX: f64 = 0.95;
/// Default truncation tolerance for products and series.
pub const DEFAULT_EPS: f64 = 1e-17;

const MIN_ORDER: usize = 8;
const MAX_ORDER: usize = 20_000;

/// Relative size below which `|θ(z)|` is treated as an exact zero.
pub const ZERO_TOL: f64 = 1e-13;

/// Truncation order `N = ceil(log eps / log p)` clamped to `[8, 20000]`.
pub fn truncation_order(p: f64, eps: f64) -> usize {
    if p <= 0.0 {
        return MIN_ORDER;
    }
    let n = (eps.ln() / p.ln()).ceil();
    if !n.is_finite() {
        return MAX_ORDER;
    }
    (n as usize).clamp(MIN_ORDER, MAX_ORDER)
}

/// The modulus `q` of the annulus together with the nome `p = q²` and the
/// truncation policy shared by every product.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nome {
    q: f64,
    p: f64,
    eps: f64,
    order: usize,
}

impl Nome {
    /// A nome with the default tolerance; `q` must lie in `[Q_MIN, Q_MAX]`.
    pub fn new(q: f64) -> Result<Self> {
        Self::with_eps(q, DEFAULT_EPS)
    }

    pub fn with_eps(q: f64, eps: f64) -> Result<Self> {
        if !(Q_MIN..=Q_MAX).contains(&q) || !q.is_finite() {
            return Err(Error::UnsupportedModulus { q, min: Q_MIN, max: Q_MAX });
        }
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidParameter(format!("eps = {eps} must be in (0, 1)")));
        }
        Ok(Self::unchecked(q, eps))
    }

    /// Skips the range check.  Used for diagnostics close to `q = 1` where
    /// the caller accepts the slow convergence.
    pub fn unchecked(q: f64, eps: f64) -> Self {
        let p = q * q;
        Nome { q, p, eps, order: truncation_order(p, eps) }
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Minimum number of factors used for an infinite product.
    pub fn order(&self) -> usize {
        self.order
    }

    /// `q₀ = (q²; q²)_∞`.
    pub fn q0(&self) -> f64 {
        pochhammer_inf(Complex::new(self.p, 0.0), self.p, self.eps, self.order).re
    }

    pub fn theta(&self, z: Complex) -> Result<Complex> {
        theta_with(z, self.p, self.eps, self.order)
    }

    /// `θ(x)` for a real argument.
    pub fn theta_re(&self, x: f64) -> Result<f64> {
        Ok(self.theta(Complex::new(x, 0.0))?.re)
    }

    /// The product shorthand `θ(z₁, …, zₙ) = θ(z₁)⋯θ(zₙ)`.
    pub fn theta_prod(&self, zs: &[Complex]) -> Result<Complex> {
        zs.iter().try_fold(Complex::new(1.0, 0.0), |acc, &z| Ok(acc * self.theta(z)?))
    }

    /// Real-argument version of [`Nome::theta_prod`].
    pub fn theta_prod_re(&self, xs: &[f64]) -> Result<f64> {
        xs.iter().try_fold(1.0, |acc, &x| Ok(acc * self.theta_re(x)?))
    }

    pub fn theta_prime_at_one(&self) -> f64 {
        let q0 = self.q0();
        -q0 * q0
    }

    pub fn log_theta_deriv(&self, n: u32, z: Complex) -> Result<Complex> {
        log_theta_deriv_with(n, z, self.p, self.eps, self.order)
    }

    /// Laurent-series evaluation through the Jacobi triple product,
    /// `θ(z) = (p;p)_∞⁻¹ Σ (−1)ⁿ p^{n(n−1)/2} zⁿ`.
    pub fn theta_triple_product(&self, z: Complex) -> Result<Complex> {
        theta_triple_product(z, self.p)
    }

    /// True when `θ(z)` vanishes to within the pole-detection tolerance.
    pub fn is_theta_zero(&self, z: Complex) -> bool {
        match self.theta(z) {
            Ok(t) => t.norm() < ZERO_TOL * (1.0 + z.norm()),
            Err(_) => true,
        }
    }
}

/// Number of factors in a q-Pochhammer symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Terms {
    Finite(usize),
    Infinite,
}

/// `(a; p)_n = ∏_{i<n} (1 − a pⁱ)`, with `n = ∞` allowed for `p < 1`.
pub fn qpoch(a: Complex, p: f64, n: Terms) -> Result<Complex> {
    if !(p >= 0.0) {
        return Err(Error::InvalidParameter(format!("nome p = {p} must be non-negative")));
    }
    match n {
        Terms::Finite(n) => {
            let mut acc = Complex::new(1.0, 0.0);
            let mut pw = 1.0;
            for _ in 0..n {
                acc *= Complex::new(1.0, 0.0) - a * pw;
                pw *= p;
            }
            Ok(acc)
        }
        Terms::Infinite => {
            if p >= 1.0 {
                return Err(Error::NonConvergent { p });
            }
            Ok(pochhammer_inf(a, p, DEFAULT_EPS, truncation_order(p, DEFAULT_EPS)))
        }
    }
}

/// Infinite product, continued past `order` until the remaining factors are
/// within `eps` of one (relevant when `|a| > 1`).
fn pochhammer_inf(a: Complex, p: f64, eps: f64, order: usize) -> Complex {
    let one = Complex::new(1.0, 0.0);
    let mut acc = one;
    let mut pw = 1.0;
    let tail_scale = a.norm() / (1.0 - p);
    for i in 0..(4 * MAX_ORDER) {
        if i >= order && tail_scale * pw < eps {
            break;
        }
        acc *= one - a * pw;
        pw *= p;
        if pw == 0.0 {
            break;
        }
    }
    acc
}

/// `θ(z; p)` with the default tolerance.
pub fn theta(z: Complex, p: f64) -> Result<Complex> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::NonConvergent { p });
    }
    theta_with(z, p, DEFAULT_EPS, truncation_order(p, DEFAULT_EPS))
}

fn theta_with(z: Complex, p: f64, eps: f64, order: usize) -> Result<Complex> {
    if z.re == 0.0 && z.im == 0.0 {
        return Err(Error::ZeroArgument);
    }
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::InvalidParameter("non-finite theta argument".into()));
    }
    Ok(pochhammer_inf(z, p, eps, order) * pochhammer_inf(p / z, p, eps, order))
}

/// `θ'(1; p) = −(p; p)²_∞`.
pub fn theta_prime_at_one(p: f64) -> Result<f64> {
    let q0 = qpoch(Complex::new(p, 0.0), p, Terms::Infinite)?.re;
    Ok(-q0 * q0)
}

/// Jacobi triple product form of `θ(z; p)`; used as an independent check on
/// the product form.
pub fn theta_triple_product(z: Complex, p: f64) -> Result<Complex> {
    if z.norm() == 0.0 {
        return Err(Error::ZeroArgument);
    }
    if !(0.0..1.0).contains(&p) {
        return Err(Error::NonConvergent { p });
    }
    let norm = qpoch(Complex::new(p, 0.0), p, Terms::Infinite)?;
    let lz = z.ln();
    let lp = p.ln();
    let mut sum = Complex::new(1.0, 0.0); // n = 0
    let mut n: i64 = 1;
    loop {
        let mut largest: f64 = 0.0;
        for m in [n, -n] {
            let mf = m as f64;
            let log_mag = if p > 0.0 { 0.5 * mf * (mf - 1.0) * lp } else if m == 0 || m == 1 { 0.0 } else { f64::NEG_INFINITY };
            let term = (lz * mf + log_mag).exp();
            let term = if m % 2 == 0 { term } else { -term };
            largest = largest.max(term.norm());
            sum += term;
        }
        n += 1;
        if (largest < 1e-17 * sum.norm().max(1e-300) && n > 2) || n > 100_000 {
            break;
        }
    }
    Ok(sum / norm)
}

/// `E_n(u) = D_u^{n−1} (u/(1−u))` with `D_u = u ∂_u`.
fn eulerian(n: u32, u: Complex) -> Complex {
    let one = Complex::new(1.0, 0.0);
    let d = one - u;
    match n {
        1 => u / d,
        2 => u / (d * d),
        3 => u * (one + u) / (d * d * d),
        4 => u * (one + u * 4.0 + u * u) / (d * d * d * d),
        _ => unreachable!("order checked by caller"),
    }
}

/// `a_n(z) = D_zⁿ log θ(z; p)` for `n ∈ 1..=4`, with `D_z = z ∂_z`.
pub fn log_theta_deriv(n: u32, z: Complex, p: f64) -> Result<Complex> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::NonConvergent { p });
    }
    log_theta_deriv_with(n, z, p, DEFAULT_EPS, truncation_order(p, DEFAULT_EPS))
}

fn log_theta_deriv_with(n: u32, z: Complex, p: f64, eps: f64, order: usize) -> Result<Complex> {
    if !(1..=4).contains(&n) {
        return Err(Error::InvalidParameter(format!("derivative order {n} not in 1..=4")));
    }
    let t = theta_with(z, p, eps, order)?;
    if t.norm() < ZERO_TOL * (1.0 + z.norm()) {
        return Err(Error::PoleAtZero { re: z.re, im: z.im });
    }
    let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    let zi = z.inv();
    let mut acc = -eulerian(n, z);
    let mut pw = p;
    let scale = z.norm().max(zi.norm());
    let mut i = 1;
    while pw > 0.0 && (i < order || pw * scale > eps * 1e-2) && i < 4 * MAX_ORDER {
        acc -= eulerian(n, z * pw) + eulerian(n, zi * pw) * sign;
        pw *= p;
        i += 1;
    }
    Ok(acc)
}
