//! Weierstrass functions for the rectangular lattice with real half-period
//! `ω₁ = π` and `τ_q = −i log q / π`.
//!
//! Points are addressed either by the angle `φ` or by the multiplicative
//! variable `z = e^{iφ}` (so `φ_z = −i log z`).  The period lattice becomes
//! `z ↦ q² z`, which is how arguments are reduced before summing.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::quadrature;
use crate::theta::{Nome, DEFAULT_EPS, Q_MAX, Q_MIN};
use crate::Complex;

const POLE_TOL: f64 = 1e-8;
const QUAD_TOL: f64 = 1e-11;

/// `e₁, e₂, e₃`, the invariants `g₂, g₃` and the Eisenstein-type constant
/// `P = 1 − 24 Σ q²ⁿ/(1−q²ⁿ)²` (so that `η₁ = π P / 12`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpecialValues {
    pub e1: f64,
    pub e2: f64,
    pub e3: f64,
    pub g2: f64,
    pub g3: f64,
    pub p: f64,
}

/// Lattice data for a fixed modulus `q`.
///
/// `q = 0` is accepted and represents the degenerate (disk) limit, in which
/// `℘` collapses to `1/(4 sin²(φ/2)) − 1/12`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeParams {
    q: f64,
    tau_abs: f64,
    eps: f64,
    sums: LatticeSums,
    sv: SpecialValues,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct LatticeSums {
    /// `Σ q²ⁿ/(1−q²ⁿ)²`
    a: f64,
    /// `Σ q²ⁿ/(1+q²ⁿ)²`
    b: f64,
    /// `Σ q²ⁿ⁻¹/(1+q²ⁿ⁻¹)²`
    c: f64,
    /// `Σ q²ⁿ⁻¹/(1−q²ⁿ⁻¹)²`
    d: f64,
}

impl LatticeParams {
    /// Lattice for `q ∈ {0} ∪ [Q_MIN, Q_MAX]`.
    pub fn new(q: f64) -> Result<Self> {
        if q != 0.0 && !(Q_MIN..=Q_MAX).contains(&q) {
            return Err(Error::UnsupportedModulus { q, min: Q_MIN, max: Q_MAX });
        }
        Ok(Self::build(q, DEFAULT_EPS))
    }

    /// Lattice for any `q ∈ [0, 1)`, for asymptotic diagnostics close to
    /// `q = 1` where the sums converge slowly.
    pub fn diagnostic(q: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&q) {
            return Err(Error::UnsupportedModulus { q, min: 0.0, max: 1.0 });
        }
        Ok(Self::build(q, DEFAULT_EPS))
    }

    fn build(q: f64, eps: f64) -> Self {
        let sums = LatticeSums::new(q, eps);
        let LatticeSums { a, b, c, d } = sums;
        let e1 = 1.0 / 6.0 + 2.0 * a + 2.0 * b;
        let e2 = -1.0 / 12.0 + 2.0 * a + 2.0 * c;
        let e3 = -1.0 / 12.0 + 2.0 * a - 2.0 * d;
        let sv = SpecialValues {
            e1,
            e2,
            e3,
            g2: 2.0 * (e1 * e1 + e2 * e2 + e3 * e3),
            g3: 4.0 * e1 * e2 * e3,
            p: 1.0 - 24.0 * a,
        };
        let tau_abs = if q == 0.0 { f64::INFINITY } else { -q.ln() / PI };
        LatticeParams { q, tau_abs, eps, sums, sv }
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// `|τ_q| = −log q / π`.
    pub fn tau_abs(&self) -> f64 {
        self.tau_abs
    }

    pub fn special_values(&self) -> SpecialValues {
        self.sv
    }

    /// `η₁ = π P / 12`.
    pub fn eta1(&self) -> f64 {
        PI * self.sv.p / 12.0
    }

    /// The matching theta nome (not available in the `q = 0` limit).
    pub fn nome(&self) -> Result<Nome> {
        if self.q == 0.0 {
            return Err(Error::UnsupportedModulus { q: 0.0, min: Q_MIN, max: Q_MAX });
        }
        Ok(Nome::unchecked(self.q, self.eps))
    }

    /// Shifts `φ` by periods so that `Re φ ∈ (−π, π]` and `|Im φ| ≤ π|τ_q|`.
    fn reduce(&self, phi: Complex) -> Complex {
        let mut re = phi.re - 2.0 * PI * ((phi.re + PI) / (2.0 * PI)).floor();
        if re <= -PI {
            re += 2.0 * PI;
        }
        let mut im = phi.im;
        if self.q > 0.0 {
            let period = 2.0 * PI * self.tau_abs;
            im -= period * (im / period).round();
        }
        Complex::new(re, im)
    }

    fn check_pole(&self, reduced: Complex, phi: Complex) -> Result<()> {
        if reduced.norm() < POLE_TOL || !(phi.re.is_finite() && phi.im.is_finite()) {
            return Err(Error::PoleAtLattice { re: phi.re, im: phi.im });
        }
        Ok(())
    }

    /// Sums `Σ_{n≥1} [F(z q²ⁿ) ± F(q²ⁿ/z)]` until the terms are negligible.
    fn lattice_sum(&self, z: Complex, sign: f64, f: impl Fn(Complex) -> Complex) -> Complex {
        let p = self.q * self.q;
        if p == 0.0 {
            return Complex::new(0.0, 0.0);
        }
        let zi = z.inv();
        let scale = z.norm().max(zi.norm());
        let mut acc = Complex::new(0.0, 0.0);
        let mut pw = p;
        while pw * scale > self.eps * 1e-3 {
            acc += f(z * pw) + f(zi * pw) * sign;
            pw *= p;
        }
        acc
    }

    /// `℘(φ)` through the geometric (Lambert-type) expansion in `z = e^{iφ}`,
    /// with the principal part written as `1/(4 sin²(φ/2))`.
    pub fn wp(&self, phi: Complex) -> Result<Complex> {
        let r = self.reduce(phi);
        self.check_pole(r, phi)?;
        let z = (Complex::i() * r).exp();
        let s = (r * 0.5).sin();
        let principal = (s * s * 4.0).inv();
        let tail = self.lattice_sum(z, 1.0, e2);
        Ok(principal - 1.0 / 12.0 + 2.0 * self.sums.a - tail)
    }

    /// `℘(φ_z)` with `φ_z = −i log z`.
    pub fn wp_z(&self, z: Complex) -> Result<Complex> {
        self.wp(phi_of(z)?)
    }

    /// `(℘'(φ), ℘''(φ))` from the term-wise differentiated expansion.
    pub fn wp_derivs(&self, phi: Complex) -> Result<(Complex, Complex)> {
        let r = self.reduce(phi);
        self.check_pole(r, phi)?;
        let z = (Complex::i() * r).exp();
        let s = (r * 0.5).sin();
        let c = (r * 0.5).cos();
        let s2 = s * s;
        let d1 = -c / (s * s2 * 4.0);
        let d2 = (s2 + c * c * 3.0) / (s2 * s2 * 8.0);
        // d/dφ = i D_z; the tail of ℘ is −Σ[E₂(zq²ⁿ) + E₂(q²ⁿ/z)].
        let t1 = self.lattice_sum(z, -1.0, e3);
        let t2 = self.lattice_sum(z, 1.0, e4);
        Ok((d1 - Complex::i() * t1, d2 + t2))
    }

    /// `℘` through the imaginary (Jacobi) transformation, which converges in
    /// the nome `e^{−2π/|τ_q|}`.  Independent of [`LatticeParams::wp`].
    pub fn wp_imaginary(&self, phi: Complex) -> Result<Complex> {
        if self.q == 0.0 {
            return Err(Error::UnsupportedModulus { q: 0.0, min: Q_MIN, max: Q_MAX });
        }
        let r = self.reduce(phi);
        self.check_pole(r, phi)?;
        let t = self.tau_abs;
        let qt = (-2.0 * PI / t).exp();
        let sh = (r / (2.0 * t)).sinh();
        let mut acc = Complex::new(1.0 / 12.0, 0.0) + (sh * sh * 4.0).inv();
        let mut pw = qt;
        let mut n = 1.0;
        while n < 10_000.0 {
            let frac = pw / (1.0 - pw);
            let term = (r * (n / t)).cosh() * (2.0 * n * frac) - 2.0 * frac / (1.0 - pw);
            acc += term;
            if term.norm() < 1e-18 * acc.norm() {
                break;
            }
            pw *= qt;
            n += 1.0;
        }
        Ok(acc / (t * t))
    }

    /// Weierstrass `ζ(φ) = η₁φ/π + ½cot(φ/2) + 2Σ q²ⁿ/(1−q²ⁿ) sin(nφ)`,
    /// valid for `|Im φ| < 2π|τ_q|`.  Kept only to cross-check
    /// [`LatticeParams::conformal_h`].
    pub fn weierstrass_zeta(&self, phi: Complex) -> Result<Complex> {
        if phi.norm() < POLE_TOL {
            return Err(Error::PoleAtLattice { re: phi.re, im: phi.im });
        }
        let p = self.q * self.q;
        let mut acc = phi * (self.eta1() / PI) + (phi * 0.5).tan().inv() * 0.5;
        let mut pw = p;
        let mut n = 1.0;
        while p > 0.0 && n < 100_000.0 {
            let term = (phi * n).sin() * (2.0 * pw / (1.0 - pw));
            acc += term;
            if term.norm() < 1e-18 * (1.0 + acc.norm()) && n > 3.0 {
                break;
            }
            pw *= p;
            n += 1.0;
        }
        Ok(acc)
    }

    /// Inverse of `℘` on the segment `[ω₁, ω₁ + ω₃]`: returns `y ≥ 0` with
    /// `℘(π + iy) = x` for `x ∈ [e₂, e₁]`.
    pub fn wp_inverse(&self, x: f64) -> Result<f64> {
        let SpecialValues { e1, e2, e3, .. } = self.sv;
        if !(x >= e2 && x <= e1) {
            return Err(Error::OutOfBranch { x, lo: e2, hi: e1 });
        }
        if x == e1 {
            return Ok(0.0);
        }
        // Split at the midpoint of [e₂, e₁]; near e₁ substitute s = e₁ − t²,
        // near e₂ substitute s = e₂ + u², so neither piece has an endpoint
        // singularity.
        let mid = 0.5 * (e1 + e2);
        let upper_from = x.max(mid);
        let upper = quadrature::integrate(
            |t| 1.0 / ((e1 - e2 - t * t) * (e1 - e3 - t * t)).sqrt(),
            0.0,
            (e1 - upper_from).sqrt(),
            QUAD_TOL,
        )
        .value;
        let lower = if x < mid {
            quadrature::integrate(
                |u| 1.0 / ((e1 - e2 - u * u) * (e2 - e3 + u * u)).sqrt(),
                (x - e2).sqrt(),
                (mid - e2).sqrt(),
                QUAD_TOL,
            )
            .value
        } else {
            0.0
        };
        Ok(upper + lower)
    }

    /// Ramanujan's `ρ₁(z) = ½ + Σ_{n≠0} zⁿ/(1−q²ⁿ)` from its series, which
    /// converges for `q² < |z| < 1`.
    pub fn rho1(&self, z: Complex) -> Result<Complex> {
        let p = self.q * self.q;
        let m = z.norm();
        if !(m > p && m < 1.0) {
            return Err(Error::OutOfAnnulus { modulus: m, inner: p, outer: 1.0 });
        }
        // Positive modes: zⁿ/(1−q²ⁿ); negative modes: −(q²/z)ⁿ/(1−q²ⁿ).
        let w = Complex::new(p, 0.0) / z;
        let mut acc = Complex::new(0.5, 0.0);
        let mut zn = z;
        let mut wn = w;
        let mut pn = p;
        loop {
            let term = (zn - wn) / (1.0 - pn);
            acc += term;
            if zn.norm().max(wn.norm()) < self.eps * 1e-3 {
                break;
            }
            zn *= z;
            wn *= w;
            pn *= p;
        }
        Ok(acc)
    }

    /// `ρ₁(z) = ½ − a₁(z)`, valid on all of `ℂ^×` away from the zeros of θ.
    pub fn rho1_theta(&self, z: Complex) -> Result<Complex> {
        if self.q == 0.0 {
            let one = Complex::new(1.0, 0.0);
            return Ok((one + z) / ((one - z) * 2.0));
        }
        Ok(Complex::new(0.5, 0.0) - self.nome()?.log_theta_deriv(1, z)?)
    }

    /// The conformal map `H_q(z) = 2i ρ₁(z)` (Villat kernel times `i`) on the
    /// closed annulus `q ≤ |z| ≤ 1`, `z ≠ 1`.
    pub fn conformal_h(&self, z: Complex) -> Result<Complex> {
        let m = z.norm();
        let slack = 1e-12;
        if m < self.q * (1.0 - slack) || m > 1.0 + slack {
            return Err(Error::OutOfAnnulus { modulus: m, inner: self.q, outer: 1.0 });
        }
        Ok(Complex::i() * 2.0 * self.rho1_theta(z)?)
    }

    /// `H_q(z) = −2{ζ(φ_z) + i(η₁/π) log z}` through the Weierstrass `ζ`.
    pub fn conformal_h_zeta(&self, z: Complex) -> Result<Complex> {
        let log_z = z.ln();
        let phi = -Complex::i() * log_z;
        let zeta = self.weierstrass_zeta(phi)?;
        Ok((zeta + Complex::i() * (self.eta1() / PI) * log_z) * -2.0)
    }
}

impl LatticeSums {
    fn new(q: f64, eps: f64) -> Self {
        let mut s = LatticeSums { a: 0.0, b: 0.0, c: 0.0, d: 0.0 };
        if q == 0.0 {
            return s;
        }
        let mut odd = q; // q^{2n−1}
        let mut even = q * q; // q^{2n}
        while odd > eps * 1e-4 {
            s.a += even / ((1.0 - even) * (1.0 - even));
            s.b += even / ((1.0 + even) * (1.0 + even));
            s.c += odd / ((1.0 + odd) * (1.0 + odd));
            s.d += odd / ((1.0 - odd) * (1.0 - odd));
            odd *= q * q;
            even *= q * q;
        }
        s
    }
}

/// `φ_z = −i log z` on the principal branch.
pub fn phi_of(z: Complex) -> Result<Complex> {
    if z.norm() == 0.0 {
        return Err(Error::ZeroArgument);
    }
    Ok(-Complex::i() * z.ln())
}

/// Special values for a modulus in the admitted range (or `q = 0`).
pub fn special_values(q: f64) -> Result<SpecialValues> {
    Ok(LatticeParams::new(q)?.special_values())
}

/// Root gaps `(e₁ − e₂, e₁ − e₃) = (θ₄⁴/4, θ₃⁴/4)` from the theta constants
/// of nome `q`, free of the cancellation in the difference of special values.
///
/// For `q > e^{−π}` the constants are evaluated after Jacobi's imaginary
/// transformation, where the dual nome `exp(−π²/|log q|)` is small; this keeps
/// `e₁ − e₂` accurate even when it is exponentially small relative to `e₁`.
pub fn root_gaps(q: f64) -> Result<(f64, f64)> {
    if q == 0.0 {
        return Ok((0.25, 0.25));
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::UnsupportedModulus { q, min: 0.0, max: 1.0 });
    }
    let lg = -q.ln();
    let series = |nome: f64, alternating: bool| {
        let mut sum = 1.0;
        for n in 1.. {
            let term = nome.powi(n * n);
            if term < 1e-18 {
                break;
            }
            sum += if alternating && n % 2 == 1 { -2.0 * term } else { 2.0 * term };
        }
        sum
    };
    let (t3, t4) = if lg >= PI {
        (series(q, false), series(q, true))
    } else {
        let dual = (-PI * PI / lg).exp();
        let pre = (PI / lg).sqrt();
        let mut t2 = 0.0;
        for n in 0.. {
            let term = dual.powi(n * (n + 1));
            t2 += term;
            if term < 1e-18 {
                break;
            }
        }
        t2 *= 2.0 * (-PI * PI / (4.0 * lg)).exp();
        (pre * series(dual, false), pre * t2)
    };
    Ok((t4.powi(4) / 4.0, t3.powi(4) / 4.0))
}

fn e2(u: Complex) -> Complex {
    let d = Complex::new(1.0, 0.0) - u;
    u / (d * d)
}

fn e3(u: Complex) -> Complex {
    let d = Complex::new(1.0, 0.0) - u;
    u * (u + 1.0) / (d * d * d)
}

fn e4(u: Complex) -> Complex {
    let d = Complex::new(1.0, 0.0) - u;
    let d2 = d * d;
    u * (u * u + u * 4.0 + 1.0) / (d2 * d2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn root_gaps_match_special_values() {
        for q in [1e-3, 0.04, 0.1, 0.3, 0.5, 0.7] {
            let sv = special_values(q).unwrap();
            let (a, b) = root_gaps(q).unwrap();
            // The subtraction loses digits relative to e₁ as q grows.
            assert!((a - (sv.e1 - sv.e2)).abs() < 1e-13 * sv.e1.abs(), "q={q}");
            assert_relative_eq!(b, sv.e1 - sv.e3, max_relative = 1e-12);
        }
        let (a, b) = root_gaps(0.9).unwrap();
        assert!(a > 0.0 && a < 1e-30 * b);
    }

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    #[test]
    fn degenerate_limit_values() {
        let sv = special_values(0.0).unwrap();
        assert_relative_eq!(sv.e1, 1.0 / 6.0);
        assert_relative_eq!(sv.e2, -1.0 / 12.0);
        assert_relative_eq!(sv.e3, -1.0 / 12.0);
        assert_relative_eq!(sv.g2, 1.0 / 12.0);
        assert_relative_eq!(sv.g3, 1.0 / 216.0, max_relative = 1e-15);
        let lat = LatticeParams::new(0.0).unwrap();
        assert_relative_eq!(lat.wp(c(PI, 0.0)).unwrap().re, 1.0 / 6.0, epsilon = 1e-15);
    }

    #[test]
    fn small_q_expansions_of_special_values() {
        let q: f64 = 1e-3;
        let sv = special_values(q).unwrap();
        let (q2, q3, q4) = (q * q, q.powi(3), q.powi(4));
        assert!((sv.e1 - (1.0 / 6.0 + 4.0 * q2 + 4.0 * q4)).abs() < 1e-16);
        // The odd-power expansions carry an O(q⁵) remainder (coefficient 12).
        let rem = 13.0 * q.powi(5) + 1e-16;
        assert!((sv.e2 - (-1.0 / 12.0 + 2.0 * q - 2.0 * q2 + 8.0 * q3 - 2.0 * q4)).abs() < rem);
        assert!((sv.e3 - (-1.0 / 12.0 - 2.0 * q - 2.0 * q2 - 8.0 * q3 - 2.0 * q4)).abs() < rem);
        assert!((sv.g2 - (1.0 / 12.0 + 20.0 * q2 + 180.0 * q4)).abs() < 1e-15);
    }

    #[test]
    fn half_periods_give_special_values() {
        for &q in &[0.1, 0.3, 0.6] {
            let lat = LatticeParams::new(q).unwrap();
            let sv = lat.special_values();
            let t = lat.tau_abs();
            assert_relative_eq!(lat.wp(c(PI, 0.0)).unwrap().re, sv.e1, max_relative = 1e-13);
            assert_relative_eq!(lat.wp(c(PI, PI * t)).unwrap().re, sv.e2, max_relative = 1e-12);
            assert_relative_eq!(lat.wp(c(0.0, PI * t)).unwrap().re, sv.e3, max_relative = 1e-12);
            assert!((sv.e1 + sv.e2 + sv.e3).abs() < 1e-13);
            assert!(sv.e3 < sv.e2 && sv.e2 < sv.e1);
        }
    }

    #[test]
    fn near_one_asymptotics_of_e3() {
        let lat = LatticeParams::diagnostic(0.97).unwrap();
        let t = lat.tau_abs();
        let want = -1.0 / (6.0 * t * t);
        assert_relative_eq!(lat.special_values().e3, want, max_relative = 0.02);
        assert!(LatticeParams::new(0.97).is_err());
    }

    #[test]
    fn p_has_two_series_forms() {
        let q: f64 = 0.45;
        let lat = LatticeParams::new(q).unwrap();
        let alt: f64 = 1.0 - 24.0 * (1..400).map(|n| {
            let x = q.powi(2 * n);
            n as f64 * x / (1.0 - x)
        }).sum::<f64>();
        assert_relative_eq!(lat.special_values().p, alt, max_relative = 1e-13);
    }

    #[test]
    fn poles_are_refused() {
        let lat = LatticeParams::new(0.3).unwrap();
        assert!(matches!(lat.wp(c(0.0, 0.0)), Err(Error::PoleAtLattice { .. })));
        assert!(matches!(lat.wp(c(2.0 * PI, 2.0 * PI * lat.tau_abs())), Err(Error::PoleAtLattice { .. })));
        assert!(lat.wp(c(1e-6, 0.0)).is_ok());
    }

    #[test]
    fn derivative_at_half_period_vanishes() {
        let lat = LatticeParams::new(0.4).unwrap();
        let (d1, _) = lat.wp_derivs(c(PI, 0.0)).unwrap();
        assert!(d1.norm() < 1e-13);
    }

    #[test]
    fn second_derivative_matches_finite_difference() {
        let lat = LatticeParams::new(0.35).unwrap();
        let phi = c(1.1, 0.3);
        let h = 1e-5;
        let (_, d2) = lat.wp_derivs(phi).unwrap();
        let fd = (lat.wp_derivs(phi + h).unwrap().0 - lat.wp_derivs(phi - h).unwrap().0) / (2.0 * h);
        assert_relative_eq!(d2.re, fd.re, max_relative = 1e-6);
        assert_relative_eq!(d2.im, fd.im, max_relative = 1e-6);
    }

    #[test]
    fn imaginary_transformation_agrees() {
        for &q in &[0.3, 0.6] {
            let lat = LatticeParams::new(q).unwrap();
            for phi in [c(0.7, 0.0), c(2.0, 0.4), c(-1.3, -0.9)] {
                let a = lat.wp(phi).unwrap();
                let b = lat.wp_imaginary(phi).unwrap();
                assert!((a - b).norm() < 1e-9 * a.norm(), "q={q} phi={phi}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn wp_inverse_endpoints_and_round_trip() {
        let lat = LatticeParams::new(0.25).unwrap();
        let sv = lat.special_values();
        assert_eq!(lat.wp_inverse(sv.e1).unwrap(), 0.0);
        assert_relative_eq!(lat.wp_inverse(sv.e2).unwrap(), PI * lat.tau_abs(), max_relative = 1e-11);
        for k in 1..10 {
            let x = sv.e2 + (sv.e1 - sv.e2) * k as f64 / 10.0;
            let y = lat.wp_inverse(x).unwrap();
            let back = lat.wp(c(PI, y)).unwrap();
            assert_relative_eq!(back.re, x, max_relative = 1e-9);
            assert!(back.im.abs() < 1e-12);
        }
        assert!(matches!(lat.wp_inverse(sv.e1 + 1e-3), Err(Error::OutOfBranch { .. })));
    }

    #[test]
    fn rho1_special_values_and_limit() {
        let lat = LatticeParams::new(0.3).unwrap();
        assert!(lat.rho1(c(-1.0 + 1e-300, 0.0)).is_err());
        assert!(lat.rho1_theta(c(-1.0, 0.0)).unwrap().norm() < 1e-14);
        let tiny = LatticeParams::new(1e-6).unwrap();
        assert_relative_eq!(tiny.rho1(c(0.4, 0.0)).unwrap().re, 7.0 / 6.0, max_relative = 1e-10);
        let z = c(0.5, 0.3);
        assert!((lat.rho1(z).unwrap() - lat.rho1_theta(z).unwrap()).norm() < 1e-12);
    }

    #[test]
    fn conformal_map_values() {
        let lat = LatticeParams::new(0.3).unwrap();
        assert!(lat.conformal_h(c(-1.0, 0.0)).unwrap().norm() < 1e-14);
        for s in [1.0, -1.0] {
            let h = lat.conformal_h(c(s * 0.3, 0.0)).unwrap();
            assert!((h - Complex::i()).norm() < 1e-12, "{h}");
        }
        let tiny = LatticeParams::new(1e-6).unwrap();
        let h0 = tiny.conformal_h(c(1e-5, 0.0)).unwrap();
        assert!((h0 - Complex::i()).norm() < 1e-4);
        assert!(lat.conformal_h(c(0.1, 0.0)).is_err());
    }

    #[test]
    fn conformal_map_zeta_form_agrees() {
        let lat = LatticeParams::new(0.35).unwrap();
        for z in [c(0.5, 0.2), c(-0.4, -0.6), c(0.9, 0.05)] {
            let a = lat.conformal_h(z).unwrap();
            let b = lat.conformal_h_zeta(z).unwrap();
            assert!((a - b).norm() < 1e-10 * (1.0 + a.norm()), "{a} vs {b}");
        }
    }
}
