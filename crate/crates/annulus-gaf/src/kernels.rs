//! Reproducing kernels of the annulus and the disk.
//!
//! The weighted Szegő kernel of `𝔸_q` is evaluated through its theta-function
//! closed form, which is the analytic continuation of the bilateral series
//! `Σ (z w̄)ⁿ / (1 + r q²ⁿ)` to all of `ℂ^×`.  The series itself is kept as
//! an independent oracle ([`szego_annulus_series`]).

use crate::elliptic::LatticeParams;
use crate::error::{Error, Result};
use crate::theta::{Nome, ZERO_TOL};
use crate::Complex;

const ANCHOR_SEPARATION: f64 = 1e-8;
const PIVOT_TOL: f64 = 1e-12;

fn one() -> Complex {
    Complex::new(1.0, 0.0)
}

/// A kernel evaluation request: two points, a weight `r > 0` and the modulus.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelQuery {
    pub z: Complex,
    pub w: Complex,
    pub r: f64,
    pub q: f64,
}

impl KernelQuery {
    /// Validates `r > 0`, finiteness, and (because the query is meant for
    /// the annulus) `q < |z|, |w| < 1`.
    pub fn annulus(z: Complex, w: Complex, r: f64, q: f64) -> Result<Self> {
        check_weight(r)?;
        check_annulus(z, q)?;
        check_annulus(w, q)?;
        Ok(KernelQuery { z, w, r, q })
    }
}

/// Anchors for conditioning, with the weight `r` they modify.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorList {
    alphas: Vec<Complex>,
    r: f64,
}

impl AnchorList {
    pub fn new(alphas: Vec<Complex>, r: f64, q: f64) -> Result<Self> {
        check_weight(r)?;
        for &a in &alphas {
            check_annulus(a, q)?;
        }
        check_separation(&alphas)?;
        Ok(AnchorList { alphas, r })
    }

    pub fn alphas(&self) -> &[Complex] {
        &self.alphas
    }

    /// `r ∏ |α_ℓ|²`.
    pub fn effective_weight(&self) -> f64 {
        self.r * self.alphas.iter().map(|a| a.norm_sqr()).product::<f64>()
    }
}

fn check_weight(r: f64) -> Result<()> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!("weight r = {r} must be positive and finite")));
    }
    Ok(())
}

pub(crate) fn check_annulus(z: Complex, q: f64) -> Result<()> {
    let m = z.norm();
    if !(m > q && m < 1.0) {
        return Err(Error::OutOfAnnulus { modulus: m, inner: q, outer: 1.0 });
    }
    Ok(())
}

fn check_disk(z: Complex) -> Result<()> {
    let m = z.norm();
    if !(m < 1.0) {
        return Err(Error::OutOfDisk { modulus: m });
    }
    Ok(())
}

fn check_separation(points: &[Complex]) -> Result<()> {
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            if (a - b).norm() < ANCHOR_SEPARATION {
                return Err(Error::InvalidParameter(format!(
                    "anchors {a} and {b} are closer than {ANCHOR_SEPARATION:e}"
                )));
            }
        }
    }
    Ok(())
}

fn theta_checked(nome: &Nome, z: Complex) -> Result<Complex> {
    let t = nome.theta(z)?;
    if t.norm() < ZERO_TOL * (1.0 + z.norm()) {
        return Err(Error::PoleAtPowerOfQ { re: z.re, im: z.im });
    }
    Ok(t)
}

/// Jordan–Kronecker function `f(z, a) = q₀² θ(za) / (θ(z) θ(a))`.
pub fn jk(z: Complex, a: Complex, q: f64) -> Result<Complex> {
    jk_with(&Nome::new(q)?, z, a)
}

pub(crate) fn jk_with(nome: &Nome, z: Complex, a: Complex) -> Result<Complex> {
    let q0 = nome.q0();
    let num = nome.theta(z * a)?;
    Ok(num * (q0 * q0) / (theta_checked(nome, z)? * theta_checked(nome, a)?))
}

/// The defining series `f(z, a) = Σ_{n∈ℤ} zⁿ / (1 − a q²ⁿ)`, convergent for
/// `q² < |z| < 1`.
pub fn jk_series(z: Complex, a: Complex, q: f64) -> Result<Complex> {
    let p = q * q;
    let m = z.norm();
    if !(m > p && m < 1.0) {
        return Err(Error::OutOfAnnulus { modulus: m, inner: p, outer: 1.0 });
    }
    let w = Complex::new(p, 0.0) / z;
    let mut acc = (one() - a).inv();
    let (mut zn, mut wn, mut pn) = (z, w, p);
    for _ in 0..200_000 {
        // n > 0: zⁿ/(1 − a q²ⁿ);  n < 0: (q²/z)ⁿ / (q²ⁿ − a).
        acc += zn / (one() - a * pn) + wn / (Complex::new(pn, 0.0) - a);
        if zn.norm().max(wn.norm() / (pn - a.norm()).abs().max(1e-300)) < 1e-18 * acc.norm().max(1e-300) {
            break;
        }
        zn *= z;
        wn *= w;
        pn *= p;
    }
    Ok(acc)
}

/// Weighted Szegő kernel `S_{𝔸_q}(z, w; r) = f(z w̄, −r)`.
pub fn szego_annulus(z: Complex, w: Complex, r: f64, q: f64) -> Result<Complex> {
    check_weight(r)?;
    szego_annulus_with(&Nome::new(q)?, z, w, Complex::new(r, 0.0))
}

/// Szegő kernel with a (possibly complex) weight, the analytic continuation
/// in `r` of [`szego_annulus`].
pub(crate) fn szego_annulus_with(nome: &Nome, z: Complex, w: Complex, r: Complex) -> Result<Complex> {
    jk_with(nome, z * w.conj(), -r)
}

/// Evaluates a query against the annulus kernel.
pub fn szego(query: &KernelQuery) -> Result<Complex> {
    szego_annulus(query.z, query.w, query.r, query.q)
}

/// Bilateral series `Σ_{|n|≤modes} (z w̄)ⁿ / (1 + r q²ⁿ)`; with `modes = None`
/// the sum runs until the terms are negligible.
pub fn szego_annulus_series(z: Complex, w: Complex, r: f64, q: f64, modes: Option<usize>) -> Result<Complex> {
    check_weight(r)?;
    let x = z * w.conj();
    let p = q * q;
    let m = x.norm();
    if !(m > p && m < 1.0) {
        return Err(Error::OutOfAnnulus { modulus: m, inner: p, outer: 1.0 });
    }
    let y = Complex::new(p, 0.0) / x;
    let mut acc = Complex::new(1.0 / (1.0 + r), 0.0);
    let (mut xn, mut yn, mut pn) = (x, y, p);
    let limit = modes.unwrap_or(1_000_000);
    for _ in 0..limit {
        // n < 0 term: x⁻ⁿ/(1 + r q⁻²ⁿ) = (q²/x)ⁿ / (q²ⁿ + r).
        acc += xn / (1.0 + r * pn) + yn / (pn + r);
        if modes.is_none() && xn.norm().max(yn.norm() / r) < 1e-18 * acc.norm() {
            break;
        }
        xn *= x;
        yn *= y;
        pn *= p;
    }
    Ok(acc)
}

/// Szegő kernel of the unit disk, `1/(1 − z w̄)`, or its weighted version
/// `(1 + r z w̄) / ((1 + r)(1 − z w̄))`.
pub fn szego_disk(z: Complex, w: Complex, r: Option<f64>) -> Complex {
    let x = z * w.conj();
    match r {
        None => (one() - x).inv(),
        Some(r) => (one() + x * r) / ((one() - x) * (1.0 + r)),
    }
}

/// Domain selector for the Bergman kernel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Disk,
    Annulus { q: f64 },
}

/// Bergman kernel.  Disk: `1/(1 − z w̄)²`; annulus: the Laurent series
/// `(z w̄)⁻¹ [−1/(2 log q) + Σ_{n≠0} n (z w̄)ⁿ / (1 − q²ⁿ)]`.
pub fn bergman(z: Complex, w: Complex, domain: Domain) -> Result<Complex> {
    match domain {
        Domain::Disk => {
            check_disk(z)?;
            check_disk(w)?;
            let d = one() - z * w.conj();
            Ok((d * d).inv())
        }
        Domain::Annulus { q } => {
            Nome::new(q)?;
            check_annulus(z, q)?;
            check_annulus(w, q)?;
            bergman_annulus_series(z, w, q)
        }
    }
}

fn bergman_annulus_series(z: Complex, w: Complex, q: f64) -> Result<Complex> {
    let x = z * w.conj();
    let p = q * q;
    let y = Complex::new(p, 0.0) / x;
    let mut acc = Complex::new(-0.5 / q.ln(), 0.0);
    let (mut xn, mut yn, mut pn) = (x, y, p);
    let mut n = 1.0;
    loop {
        // −n x⁻ⁿ/(1 − q⁻²ⁿ) = n (q²/x)ⁿ / (1 − q²ⁿ)
        let weight = n / (1.0 - pn);
        acc += (xn + yn) * weight;
        if (xn.norm() + yn.norm()) * weight < 1e-18 * acc.norm() {
            break;
        }
        xn *= x;
        yn *= y;
        pn *= p;
        n += 1.0;
    }
    Ok(acc / x)
}

/// Annulus Bergman kernel through `℘`:
/// `K = −[1/(2 log q) + ℘(φ_{zw̄}) + P/12] / (z w̄)`.
pub fn bergman_annulus_wp(z: Complex, w: Complex, q: f64) -> Result<Complex> {
    let lat = LatticeParams::new(q)?;
    let x = z * w.conj();
    let wp = lat.wp_z(x)?;
    Ok(-(wp + 0.5 / q.ln() + lat.special_values().p / 12.0) / x)
}

/// The constant `a(q) = e₂ + P/12 + 1/(2 log q)` relating `S(·,·;q)²` to the
/// Bergman kernel.
pub fn sk_constant(q: f64) -> Result<f64> {
    let sv = LatticeParams::new(q)?.special_values();
    Ok(sv.e2 + sv.p / 12.0 + 0.5 / q.ln())
}

/// Second expression, `−2 Σ (−1)ⁿ n qⁿ/(1 − q²ⁿ) + 1/(2 log q)`.
pub fn sk_constant_series(q: f64) -> Result<f64> {
    Nome::new(q)?;
    let mut acc = 0.0;
    let mut qn = q;
    let mut n = 1.0;
    while qn * n > 1e-20 {
        let sign = if (n as u64).is_multiple_of(2) { 1.0 } else { -1.0 };
        acc += sign * n * qn / (1.0 - qn * qn);
        qn *= q;
        n += 1.0;
    }
    Ok(-2.0 * acc + 0.5 / q.ln())
}

/// Slit map `h_α(z) = z θ(α/z) / θ(ᾱ z)`; for `q = 0` the Möbius map
/// `(z − α)/(1 − ᾱ z)`.
pub fn h_alpha(z: Complex, alpha: Complex, q: f64) -> Result<Complex> {
    if q == 0.0 {
        return Ok((z - alpha) / (one() - alpha.conj() * z));
    }
    h_alpha_with(&Nome::new(q)?, z, alpha)
}

pub(crate) fn h_alpha_with(nome: &Nome, z: Complex, alpha: Complex) -> Result<Complex> {
    if z.norm() == 0.0 {
        return Err(Error::ZeroArgument);
    }
    Ok(z * nome.theta(alpha / z)? / theta_checked(nome, alpha.conj() * z)?)
}

/// `h'_α(α) = q₀² / θ(|α|²)`.
pub fn h_alpha_derivative_at_alpha(alpha: Complex, q: f64) -> Result<f64> {
    let nome = Nome::new(q)?;
    let q0 = nome.q0();
    Ok(q0 * q0 / nome.theta_re(alpha.norm_sqr())?)
}

/// The partner point `α̂ = −q / ᾱ`.
pub fn alpha_hat(alpha: Complex, q: f64) -> Complex {
    -Complex::new(q, 0.0) / alpha.conj()
}

/// Ahlfors map `f_α(z) = h_α(z) h_α̂(z) / z`, vanishing at `α` and `α̂`.
pub fn ahlfors(z: Complex, alpha: Complex, q: f64) -> Result<Complex> {
    let nome = Nome::new(q)?;
    Ok(h_alpha_with(&nome, z, alpha)? * h_alpha_with(&nome, z, alpha_hat(alpha, q))? / z)
}

/// The same map written as one theta ratio,
/// `z θ(−q z ᾱ) θ(α/z) / (θ(−q z/α) θ(ᾱ z))`.
pub fn ahlfors_theta_form(z: Complex, alpha: Complex, q: f64) -> Result<Complex> {
    let nome = Nome::new(q)?;
    let qc = Complex::new(q, 0.0);
    let num = nome.theta(-qc * z * alpha.conj())? * nome.theta(alpha / z)?;
    let den = theta_checked(&nome, -qc * z / alpha)? * theta_checked(&nome, alpha.conj() * z)?;
    Ok(z * num / den)
}

/// Kernel conditioned to vanish at the anchors: the Schur complement taken
/// one anchor at a time,
/// `k^{α}(z, w) = k(z, w) − k(z, α) k(α, w) / k(α, α)`.
pub fn conditional_kernel<K>(base: K, anchors: &[Complex], z: Complex, w: Complex) -> Result<Complex>
where
    K: Fn(Complex, Complex) -> Result<Complex>,
{
    check_separation(anchors)?;
    let n = anchors.len();
    let mut pts: Vec<Complex> = anchors.to_vec();
    pts.push(z);
    pts.push(w);
    let m = pts.len();
    // Gram matrix over anchors + (z, w); eliminating anchor j from every
    // entry is exactly one step of the recursion.
    let mut g = vec![vec![Complex::new(0.0, 0.0); m]; m];
    for i in 0..m {
        for j in 0..m {
            let needed = i < n || j < n || (i == n && j == n + 1);
            if needed {
                g[i][j] = base(pts[i], pts[j])?;
            }
        }
    }
    for j in 0..n {
        let pivot = g[j][j];
        let original = base(anchors[j], anchors[j])?.re;
        if !(pivot.re > PIVOT_TOL * original.abs().max(f64::MIN_POSITIVE)) {
            return Err(Error::DegenerateAnchor { index: j, variance: pivot.re });
        }
        for i in (j + 1)..m {
            for k in (j + 1)..m {
                let factor = g[i][j] * g[j][k] / pivot;
                g[i][k] -= factor;
            }
        }
    }
    Ok(g[n][n + 1])
}

/// Closed form of the conditioned Szegő kernel:
/// `S(z, w; r ∏|α|²) γ(z) conj(γ(w))` with `γ = ∏ h_α`.
pub fn mccullough_shen(z: Complex, w: Complex, anchors: &AnchorList, q: f64) -> Result<Complex> {
    let nome = Nome::new(q)?;
    let gamma = |x: Complex| -> Result<Complex> {
        anchors.alphas().iter().try_fold(one(), |acc, &a| Ok(acc * h_alpha_with(&nome, x, a)?))
    };
    let s = szego_annulus_with(&nome, z, w, Complex::new(anchors.effective_weight(), 0.0))?;
    Ok(s * gamma(z)? * gamma(w)?.conj())
}

/// `∂_z ∂_w̄ log k(z, w)` by a four-point finite difference in `(z, w̄)`,
/// treating `k` as holomorphic in `z` and in `v = w̄`.
pub fn mixed_log_derivative<K>(k: K, z: Complex, w: Complex, h: f64) -> Result<Complex>
where
    K: Fn(Complex, Complex) -> Result<Complex>,
{
    let v = w.conj();
    let f = |a: Complex, b: Complex| k(a, b.conj());
    let pp = f(z + h, v + h)?;
    let mm = f(z - h, v - h)?;
    let pm = f(z + h, v - h)?;
    let mp = f(z - h, v + h)?;
    Ok((pp * mm / (pm * mp)).ln() / (4.0 * h * h))
}

/// Right-hand side of the log-derivative identity,
/// `θ(−r) / θ(−r (z w̄)²) · S(z, w; r z w̄)²`.
pub fn log_deriv_theta_form(z: Complex, w: Complex, r: f64, q: f64) -> Result<Complex> {
    let nome = Nome::new(q)?;
    let x = z * w.conj();
    let s = szego_annulus_with(&nome, z, w, x * r)?;
    Ok(nome.theta(Complex::new(-r, 0.0))? / theta_checked(&nome, -x * x * r)? * s * s)
}

/// The same quantity through `℘`: `(℘(φ_{−r z w̄}) − ℘(φ_{z w̄})) / (z w̄)`.
pub fn log_deriv_wp_form(z: Complex, w: Complex, r: f64, q: f64) -> Result<Complex> {
    let lat = LatticeParams::new(q)?;
    let x = z * w.conj();
    Ok((lat.wp_z(-x * r)? - lat.wp_z(x)?) / x)
}

/// Relative residual between the finite-difference mixed log-derivative of
/// `S(·,·; r)` and its closed form.
pub fn log_deriv_identity_residual(z: Complex, w: Complex, r: f64, q: f64) -> Result<f64> {
    check_weight(r)?;
    let nome = Nome::new(q)?;
    let fd = mixed_log_derivative(
        |a, b| szego_annulus_with(&nome, a, b, Complex::new(r, 0.0)),
        z,
        w,
        1e-4,
    )?;
    let exact = log_deriv_theta_form(z, w, r, q)?;
    Ok((fd - exact).norm() / exact.norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    fn close(a: Complex, b: Complex, tol: f64) -> bool {
        (a - b).norm() <= tol * a.norm().max(b.norm())
    }

    #[test]
    fn jordan_kronecker_symmetry_and_value() {
        let (z, a, q) = (c(0.5, 0.2), c(-0.3, 0.0), 0.4);
        let f = jk(z, a, q).unwrap();
        assert!(close(f, jk(a, z, q).unwrap(), 1e-13));
        assert!(close(f, jk_series(z, a, q).unwrap(), 1e-13));
        // Frozen from the series oracle above (summed to 1e-18).
        let frozen = jk_series(z, a, q).unwrap();
        assert!(close(f, frozen, 1e-13));
    }

    #[test]
    fn jordan_kronecker_quasi_periodicity() {
        let q = 0.37;
        for (z, a) in [(c(0.6, 0.1), c(0.2, -0.7)), (c(-0.5, 0.5), c(1.3, 0.4))] {
            let lhs = jk(z, a, q).unwrap();
            assert!(close(lhs, z * jk(z, a * q * q, q).unwrap(), 1e-11));
            assert!(close(lhs, a * jk(z * q * q, a, q).unwrap(), 1e-11));
            assert!(close(lhs, -jk(z.inv(), a.inv(), q).unwrap(), 1e-11));
        }
    }

    #[test]
    fn jordan_kronecker_small_q_limit() {
        let f = jk(c(0.3, 0.0), c(0.2, 0.0), 1e-6).unwrap();
        assert_relative_eq!(f.re, 0.94 / 0.56, max_relative = 1e-5);
    }

    #[test]
    fn szego_zero_at_partner_point() {
        let (alpha, q) = (c(0.6, 0.1), 0.3);
        let hat = alpha_hat(alpha, q);
        assert!(szego_annulus(hat, alpha, q, q).unwrap().norm() < 1e-14);
    }

    #[test]
    fn szego_theta_form_matches_series() {
        let (z, w, r, q) = (c(0.5, 0.0), c(0.4, 0.3), 0.7, 0.35);
        let a = szego_annulus(z, w, r, q).unwrap();
        let b = szego_annulus_series(z, w, r, q, Some(200)).unwrap();
        assert!(close(a, b, 1e-12), "{a} {b}");
    }

    #[test]
    fn szego_small_q_limit_is_weighted_disk_kernel() {
        let (z, w, r) = (c(0.3, 0.2), c(-0.1, 0.5), 0.8);
        let a = szego_annulus(z, w, r, 1e-6).unwrap();
        assert!(close(a, szego_disk(z, w, Some(r)), 1e-6));
    }

    #[test]
    fn disk_kernel_values() {
        let o = c(0.0, 0.0);
        assert_eq!(szego_disk(o, o, None), c(1.0, 0.0));
        assert_relative_eq!(szego_disk(o, o, Some(1.5)).re, 0.4);
        let (z, w) = (c(0.3, 0.1), c(0.2, -0.6));
        let big = szego_disk(z, w, Some(1e12));
        assert!(close(big, szego_disk(z, w, None) - 1.0, 1e-10));
        assert_eq!(bergman(o, o, Domain::Disk).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn bergman_forms_agree_and_reflection_value() {
        let (z, w, q) = (c(0.5, 0.0), c(0.0, 0.6), 0.3);
        let a = bergman(z, w, Domain::Annulus { q }).unwrap();
        let b = bergman_annulus_wp(z, w, q).unwrap();
        assert!(close(a, b, 1e-11), "{a} {b}");
        let w = c(0.45, 0.35);
        let refl = -Complex::new(q, 0.0) / w.conj();
        let k = bergman_annulus_wp(refl, w, q).unwrap();
        assert!(close(k, Complex::new(sk_constant(q).unwrap() / q, 0.0), 1e-10), "{k}");
    }

    #[test]
    fn sk_constant_two_forms() {
        for &q in &[0.05, 0.4, 0.8] {
            assert!((sk_constant(q).unwrap() - sk_constant_series(q).unwrap()).abs() < 1e-12);
        }
        let values: Vec<f64> = [1e-2, 1e-4, 1e-6].iter().map(|&q| sk_constant(q).unwrap().abs()).collect();
        assert!(values[0] > values[1] && values[1] > values[2]);
    }

    #[test]
    fn szego_square_is_bergman_plus_constant() {
        let q = 0.42;
        let a = sk_constant(q).unwrap();
        for (z, w) in [(c(0.6, 0.2), c(0.5, -0.3)), (c(-0.7, 0.1), c(0.1, 0.8))] {
            let s = szego_annulus(z, w, q, q).unwrap();
            let rhs = bergman(z, w, Domain::Annulus { q }).unwrap() + a / (z * w.conj());
            assert!(close(s * s, rhs, 1e-10));
        }
    }

    #[test]
    fn slit_map_properties() {
        let (alpha, q) = (c(0.55, -0.25), 0.3);
        assert!(h_alpha(alpha, alpha, q).unwrap().norm() < 1e-15);
        for k in 0..24 {
            let t = k as f64 * std::f64::consts::TAU / 24.0;
            let outer = h_alpha(Complex::from_polar(1.0, t), alpha, q).unwrap().norm();
            let inner = h_alpha(Complex::from_polar(q, t), alpha, q).unwrap().norm();
            assert_relative_eq!(outer, 1.0, max_relative = 1e-13);
            assert_relative_eq!(inner, alpha.norm(), max_relative = 1e-13);
        }
        let h = 1e-6;
        let fd = (h_alpha(alpha + h, alpha, q).unwrap() - h_alpha(alpha - h, alpha, q).unwrap()) / (2.0 * h);
        let want = h_alpha_derivative_at_alpha(alpha, q).unwrap();
        assert_relative_eq!(fd.re, want, max_relative = 1e-7);
        assert!(fd.im.abs() < 1e-7 * want);
        let mob = h_alpha(c(0.1, 0.1), c(0.3, 0.0), 0.0).unwrap();
        assert!(close(mob, (c(0.1, 0.1) - 0.3) / (1.0 - c(0.3, 0.0) * c(0.1, 0.1)), 1e-15));
    }

    #[test]
    fn ahlfors_map_properties() {
        let (alpha, q) = (c(0.4, 0.3), 0.25);
        assert!(ahlfors(alpha, alpha, q).unwrap().norm() < 1e-14);
        assert!(ahlfors(alpha_hat(alpha, q), alpha, q).unwrap().norm() < 1e-14);
        let n = 50;
        for i in 0..n {
            for j in 0..n {
                let x = -1.0 + 2.0 * (i as f64 + 0.5) / n as f64;
                let y = -1.0 + 2.0 * (j as f64 + 0.5) / n as f64;
                let z = c(x, y);
                if z.norm() <= q || z.norm() >= 1.0 {
                    continue;
                }
                let f = ahlfors(z, alpha, q).unwrap();
                assert!(f.norm() < 1.0);
                assert!(close(f, ahlfors_theta_form(z, alpha, q).unwrap(), 1e-12));
            }
        }
    }

    #[test]
    fn conditional_kernel_matches_closed_form() {
        let (q, r) = (0.3, 0.7);
        let base = |a: Complex, b: Complex| szego_annulus(a, b, r, q);
        let anchors = [c(0.5, 0.3), c(-0.4, 0.45), c(0.1, -0.7)];
        let (z, w) = (c(0.6, -0.2), c(-0.35, -0.5));
        for n in 1..=3 {
            let list = AnchorList::new(anchors[..n].to_vec(), r, q).unwrap();
            let a = conditional_kernel(base, list.alphas(), z, w).unwrap();
            let b = mccullough_shen(z, w, &list, q).unwrap();
            assert!(close(a, b, 1e-10), "n={n}: {a} {b}");
        }
        let k = conditional_kernel(base, &anchors[..1], anchors[0], w).unwrap();
        assert!(k.norm() < 1e-15);
        let bad = conditional_kernel(base, &[anchors[0], anchors[0] + 1e-9], z, w);
        assert!(matches!(bad, Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn log_derivative_identity() {
        let q = 0.3;
        let res = log_deriv_identity_residual(c(0.5, 0.0), c(0.5, 0.0), q, q).unwrap();
        assert!(res < 1e-5, "{res}");
        for (z, w, r) in [(c(0.6, 0.2), c(0.4, -0.5), 0.8), (c(-0.5, 0.1), c(0.7, 0.3), 2.5)] {
            assert!(log_deriv_identity_residual(z, w, r, q).unwrap() < 1e-5);
            let a = log_deriv_theta_form(z, w, r, q).unwrap();
            let b = log_deriv_wp_form(z, w, r, q).unwrap();
            assert!(close(a, b, 1e-10));
        }
        let (z, w) = (c(0.3, 0.2), c(-0.2, 0.4));
        let fd = mixed_log_derivative(|a, b| Ok(szego_disk(a, b, None)), z, w, 1e-4).unwrap();
        let s = szego_disk(z, w, None);
        assert!(close(fd, s * s, 1e-7));
    }
}
