//! Correlation functions of the zero process and their derived quantities.
//!
//! The n-point correlation of the zeros of the weighted annulus GAF is
//! `θ(−r)/θ(−r∏|z_k|⁴) · perdet[S(z_i, z_j; r∏|z_ℓ|²)]` with respect to the
//! measure `m/π`, where `perdet M = per M · det M`.  The disk process is the
//! `q → 0` limit, implemented with the limiting closed forms (never by
//! evaluating annulus formulas at tiny `q`).
//!
//! Besides the correlation functions this module hosts the unfolded
//! two-point function `g = ρ²/(ρ¹ρ¹)`, its restrictions `G^∧`, `G^∨`, `G̃`,
//! the quartic-decay coefficient `κ(r)` and the critical curve `r₀(q)`.

use itertools::Itertools;
use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::elliptic::{root_gaps, LatticeParams};
use crate::quadrature;
use crate::error::{Error, Result};
use crate::kernels::{self, Domain};
use crate::theta::{Nome, Q_MAX};
use crate::Complex;

/// Points closer than `COINCIDENCE_TOL·(1+|z|)` are treated as coincident.
pub const COINCIDENCE_TOL: f64 = 1e-12;
const NAIVE_PERMANENT_MAX: usize = 8;
const PERMANENT_MAX: usize = 12;
const CORRELATION_MAX: usize = 8;
const HYPERDET_MAX: usize = 5;

/// `q → 0` value of the critical weight, `2√6 − 3 − 2√(8 − 3√6)`.
pub fn rc_closed_form() -> f64 {
    let s6 = 6f64.sqrt();
    2.0 * s6 - 3.0 - 2.0 * (8.0 - 3.0 * s6).sqrt()
}

/// Coefficient of `q²` in the small-`q` expansion of `r₀(q)`,
/// `(8/3)[−72 + 22√6 + 3(4√6 − 1)√(8 − 3√6)]`.
pub fn r0_quadratic_coefficient() -> f64 {
    let s6 = 6f64.sqrt();
    8.0 / 3.0 * (-72.0 + 22.0 * s6 + 3.0 * (4.0 * s6 - 1.0) * (8.0 - 3.0 * s6).sqrt())
}

// ---------------------------------------------------------------------------
// permanents, determinants, hyperdeterminants

fn sign_of(perm: &[usize]) -> f64 {
    let mut seen = vec![false; perm.len()];
    let mut transpositions = 0;
    for start in 0..perm.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut i = start;
        while !seen[i] {
            seen[i] = true;
            i = perm[i];
            len += 1;
        }
        transpositions += len - 1;
    }
    if transpositions % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn check_square(m: &DMatrix<Complex>) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch(format!("{}×{} matrix is not square", m.nrows(), m.ncols())));
    }
    Ok(m.nrows())
}

/// Permanent by direct expansion over all permutations.
pub fn per_naive(m: &DMatrix<Complex>) -> Result<Complex> {
    let n = check_square(m)?;
    Ok((0..n)
        .permutations(n)
        .map(|p| (0..n).map(|i| m[(i, p[i])]).product::<Complex>())
        .sum())
}

/// Ryser's inclusion–exclusion formula, `O(2ⁿ n)` with a Gray-code walk.
pub fn per_ryser(m: &DMatrix<Complex>) -> Result<Complex> {
    let n = check_square(m)?;
    if n == 0 {
        return Ok(Complex::new(1.0, 0.0));
    }
    let mut row_sums = vec![Complex::new(0.0, 0.0); n];
    let mut total = Complex::new(0.0, 0.0);
    let mut gray: u64 = 0;
    for k in 1u64..(1u64 << n) {
        let next = k ^ (k >> 1);
        let col = (gray ^ next).trailing_zeros() as usize;
        let added = next & (1 << col) != 0;
        for (i, s) in row_sums.iter_mut().enumerate() {
            if added {
                *s += m[(i, col)];
            } else {
                *s -= m[(i, col)];
            }
        }
        gray = next;
        let prod: Complex = row_sums.iter().product();
        let bits = gray.count_ones() as usize;
        if (n - bits).is_multiple_of(2) {
            total += prod;
        } else {
            total -= prod;
        }
    }
    Ok(total)
}

/// Determinant by direct expansion over all permutations (an oracle for
/// [`det`]).
pub fn det_naive(m: &DMatrix<Complex>) -> Result<Complex> {
    let n = check_square(m)?;
    Ok((0..n)
        .permutations(n)
        .map(|p| (0..n).map(|i| m[(i, p[i])]).product::<Complex>() * sign_of(&p))
        .sum())
}

/// Permanent: naive expansion up to 8×8, Ryser's formula up to 12×12.
pub fn per(m: &DMatrix<Complex>) -> Result<Complex> {
    let n = check_square(m)?;
    if n <= NAIVE_PERMANENT_MAX {
        per_naive(m)
    } else if n <= PERMANENT_MAX {
        per_ryser(m)
    } else {
        Err(Error::InvalidParameter(format!("permanent of a {n}×{n} matrix exceeds the {PERMANENT_MAX}×{PERMANENT_MAX} limit")))
    }
}

/// Determinant by LU factorisation.
pub fn det(m: &DMatrix<Complex>) -> Result<Complex> {
    check_square(m)?;
    Ok(m.clone().determinant())
}

/// `perdet M = per M · det M`.
pub fn perdet(m: &DMatrix<Complex>) -> Result<Complex> {
    Ok(per(m)? * det(m)?)
}

/// A cubic `n×n×n` hypermatrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CubicTensor {
    n: usize,
    data: Vec<Complex>,
}

impl CubicTensor {
    pub fn from_fn(n: usize, f: impl Fn(usize, usize, usize) -> Complex) -> Self {
        let mut data = Vec::with_capacity(n * n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    data.push(f(i, j, k));
                }
            }
        }
        CubicTensor { n, data }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> Complex {
        self.data[(i * self.n + j) * self.n + k]
    }
}

/// Gegenbauer hyperdeterminant `Det_{2,3}` with the signs carried by the
/// second and third index.
///
/// The `(1/n!) Σ_{S_n³}` definition is invariant under relabelling by `σ₁`,
/// so the sum is evaluated over `S_n²` with `σ₁ = id`.
pub fn hyperdet23(c: &CubicTensor) -> Result<Complex> {
    let n = c.dim();
    if n > HYPERDET_MAX {
        return Err(Error::InvalidParameter(format!("hyperdeterminant of order {n} exceeds {HYPERDET_MAX}")));
    }
    let perms: Vec<(Vec<usize>, f64)> = (0..n).permutations(n).map(|p| {
        let s = sign_of(&p);
        (p, s)
    }).collect();
    let mut total = Complex::new(0.0, 0.0);
    for (p2, s2) in &perms {
        for (p3, s3) in &perms {
            let prod: Complex = (0..n).map(|l| c.get(l, p2[l], p3[l])).product();
            total += prod * (s2 * s3);
        }
    }
    Ok(total)
}

/// `Det_{2,3}` straight from its definition,
/// `(1/n!) Σ_{σ₁,σ₂,σ₃ ∈ S_n} sgn σ₂ sgn σ₃ ∏_ℓ c_{σ₁(ℓ)σ₂(ℓ)σ₃(ℓ)}`.
pub fn hyperdet23_naive(c: &CubicTensor) -> Result<Complex> {
    let n = c.dim();
    if n > 4 {
        return Err(Error::InvalidParameter(format!("brute-force hyperdeterminant of order {n} exceeds 4")));
    }
    let perms: Vec<(Vec<usize>, f64)> = (0..n).permutations(n).map(|p| {
        let s = sign_of(&p);
        (p, s)
    }).collect();
    let mut total = Complex::new(0.0, 0.0);
    for (p1, _) in &perms {
        for (p2, s2) in &perms {
            for (p3, s3) in &perms {
                let prod: Complex = (0..n).map(|l| c.get(p1[l], p2[l], p3[l])).product();
                total += prod * (s2 * s3);
            }
        }
    }
    Ok(total / perms.len() as f64)
}

/// `c_{i₁i₂i₃} = a_{i₂i₁} b_{i₂i₃}`, whose `Det_{2,3}` equals `per A · det B`.
pub fn perdet_tensor(a: &DMatrix<Complex>, b: &DMatrix<Complex>) -> Result<CubicTensor> {
    let n = check_square(a)?;
    if check_square(b)? != n {
        return Err(Error::DimensionMismatch("A and B must have equal size".into()));
    }
    Ok(CubicTensor::from_fn(n, |i1, i2, i3| a[(i2, i1)] * b[(i2, i3)]))
}

// ---------------------------------------------------------------------------
// correlation functions

/// Arguments of an n-point correlation function.  `q = 0` selects the disk.
#[derive(Debug, Clone, PartialEq)]
pub struct PointConfig {
    pub points: Vec<Complex>,
    pub q: f64,
    pub r: f64,
}

impl PointConfig {
    pub fn annulus(points: Vec<Complex>, q: f64, r: f64) -> Result<Self> {
        Nome::new(q)?;
        check_weight(r)?;
        for &z in &points {
            kernels::check_annulus(z, q)?;
        }
        Ok(PointConfig { points, q, r })
    }

    pub fn disk(points: Vec<Complex>, r: f64) -> Result<Self> {
        if !(r >= 0.0 && r.is_finite()) {
            return Err(Error::InvalidParameter(format!("weight r = {r} must be non-negative")));
        }
        for &z in &points {
            check_disk(z)?;
        }
        Ok(PointConfig { points, q: 0.0, r })
    }

    fn has_coincidence(&self) -> bool {
        let p = &self.points;
        (0..p.len()).any(|i| ((i + 1)..p.len()).any(|j| (p[i] - p[j]).norm() < COINCIDENCE_TOL * (1.0 + p[i].norm())))
    }
}

fn check_weight(r: f64) -> Result<()> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!("weight r = {r} must be positive and finite")));
    }
    Ok(())
}

fn check_disk(z: Complex) -> Result<()> {
    if !(z.norm() < 1.0) {
        return Err(Error::OutOfDisk { modulus: z.norm() });
    }
    Ok(())
}

fn check_size(n: usize) -> Result<()> {
    if n == 0 || n > CORRELATION_MAX {
        return Err(Error::InvalidParameter(format!("correlation order {n} not in 1..={CORRELATION_MAX}")));
    }
    Ok(())
}

fn annulus_prefactor_and_matrix(nome: &Nome, config: &PointConfig) -> Result<(f64, DMatrix<Complex>)> {
    let prod_sq: f64 = config.points.iter().map(|z| z.norm_sqr()).product();
    let s = config.r * prod_sq;
    let n = config.points.len();
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = kernels::szego_annulus_with(nome, config.points[i], config.points[j], Complex::new(s, 0.0))?;
        }
    }
    let pre = nome.theta_re(-config.r)? / nome.theta_re(-config.r * prod_sq * prod_sq)?;
    Ok((pre, m))
}

/// `ρⁿ` of the annulus zero process (`n ≤ 8`).
pub fn rho_n_annulus(config: &PointConfig) -> Result<f64> {
    let nome = Nome::new(config.q)?;
    check_size(config.points.len())?;
    if config.has_coincidence() {
        return Ok(0.0);
    }
    let (pre, m) = annulus_prefactor_and_matrix(&nome, config)?;
    Ok(pre * perdet(&m)?.re)
}

/// The same correlation written as a `Det_{2,3}` hyperdeterminant of the
/// tensor `S(z_{i₂}, z_{i₁}) S(z_{i₂}, z_{i₃})` (`n ≤ 5`).
pub fn rho_n_annulus_hyperdet(config: &PointConfig) -> Result<f64> {
    let nome = Nome::new(config.q)?;
    check_size(config.points.len())?;
    let (pre, m) = annulus_prefactor_and_matrix(&nome, config)?;
    Ok(pre * hyperdet23(&perdet_tensor(&m, &m)?)?.re)
}

/// One-point density `q₀⁴ θ(−r) θ(−r|z|⁴) / (θ(−r|z|²) θ(|z|²))²`.
pub fn rho1_annulus(z: Complex, r: f64, q: f64) -> Result<f64> {
    kernels::check_annulus(z, q)?;
    rho1_annulus_radial(z.norm(), r, q)
}

/// [`rho1_annulus`] as a function of `|z|`.
pub fn rho1_annulus_radial(modulus: f64, r: f64, q: f64) -> Result<f64> {
    check_weight(r)?;
    let nome = Nome::new(q)?;
    let q0 = nome.q0();
    let a = modulus * modulus;
    let den = nome.theta_re(-r * a)? * nome.theta_re(a)?;
    Ok(q0.powi(4) * nome.theta_re(-r)? * nome.theta_re(-r * a * a)? / (den * den))
}

/// `ρⁿ_𝔻 = (1+r)/(1+r∏|z|⁴) · perdet[S_𝔻(z_i, z_j; r∏|z|²)]`.
pub fn rho_n_disk(points: &[Complex], r: f64) -> Result<f64> {
    let config = PointConfig::disk(points.to_vec(), r)?;
    check_size(points.len())?;
    if config.has_coincidence() {
        return Ok(0.0);
    }
    let prod_sq: f64 = points.iter().map(|z| z.norm_sqr()).product();
    let s = r * prod_sq;
    let n = points.len();
    let m = DMatrix::from_fn(n, n, |i, j| kernels::szego_disk(points[i], points[j], Some(s)));
    Ok((1.0 + r) / (1.0 + s * prod_sq) * perdet(&m)?.re)
}

/// `ρ¹_𝔻 = (1+r)(1+r|z|⁴) / ((1+r|z|²)² (1−|z|²)²)`.
pub fn rho1_disk(z: Complex, r: f64) -> Result<f64> {
    check_disk(z)?;
    Ok(rho1_disk_radial(z.norm(), r))
}

pub fn rho1_disk_radial(modulus: f64, r: f64) -> f64 {
    let a = modulus * modulus;
    (1.0 + r) * (1.0 + r * a * a) / ((1.0 + r * a) * (1.0 + r * a) * (1.0 - a) * (1.0 - a))
}

/// Dispatches on `q` (0 = disk).
pub fn rho1(modulus: f64, r: f64, q: f64) -> Result<f64> {
    if q == 0.0 {
        if !(modulus < 1.0) {
            return Err(Error::OutOfDisk { modulus });
        }
        Ok(rho1_disk_radial(modulus, r))
    } else {
        if !(modulus > q && modulus < 1.0) {
            return Err(Error::OutOfAnnulus { modulus, inner: q, outer: 1.0 });
        }
        rho1_annulus_radial(modulus, r, q)
    }
}

// ---------------------------------------------------------------------------
// unfolded two-point function

/// `θ` on the annulus, `1 − x` in the disk limit.
#[derive(Debug, Clone, Copy)]
enum Theta {
    Disk,
    Annulus(Nome),
}

impl Theta {
    fn from_domain(domain: Domain) -> Result<Self> {
        Ok(match domain {
            Domain::Disk => Theta::Disk,
            Domain::Annulus { q } => Theta::Annulus(Nome::new(q)?),
        })
    }

    fn c(&self, z: Complex) -> Result<Complex> {
        match self {
            Theta::Disk => Ok(Complex::new(1.0, 0.0) - z),
            Theta::Annulus(nome) => nome.theta(z),
        }
    }

    fn re(&self, x: f64) -> Result<f64> {
        Ok(self.c(Complex::new(x, 0.0))?.re)
    }

    fn prod(&self, xs: &[f64]) -> Result<f64> {
        xs.iter().try_fold(1.0, |acc, &x| Ok(acc * self.re(x)?))
    }

    fn check(&self, z: Complex) -> Result<()> {
        match self {
            Theta::Disk => check_disk(z),
            Theta::Annulus(nome) => kernels::check_annulus(z, nome.q()),
        }
    }
}

/// Unfolded two-point function `g(z, w; r) = ρ²(z, w) / (ρ¹(z) ρ¹(w))` in
/// closed form.
pub fn unfolded_g(z: Complex, w: Complex, r: f64, domain: Domain) -> Result<f64> {
    check_weight(r)?;
    let th = Theta::from_domain(domain)?;
    th.check(z)?;
    th.check(w)?;
    let (a, b) = (z.norm_sqr(), w.norm_sqr());
    let x = z * w.conj();
    let num = th.prod(&[-r * a, -r * b, -r * a * a * b, -r * a * b * b])?;
    let den = th.prod(&[-r, -r * a * a, -r * b * b, -r * a * a * b * b])? * th.re(-r * a * b)?.powi(4);
    let ratio = th.prod(&[a, b])? / th.prod(&[-r * a * a * b, -r * a * b * b])?;
    let cross = th.c(-x * (r * a * b))?.norm() / th.c(x)?.norm();
    Ok(num * num / den * (1.0 - ratio * ratio * cross.powi(4)))
}

/// `g` computed as the ratio of correlation functions; an oracle for
/// [`unfolded_g`].
pub fn unfolded_g_ratio(z: Complex, w: Complex, r: f64, domain: Domain) -> Result<f64> {
    match domain {
        Domain::Disk => Ok(rho_n_disk(&[z, w], r)? / (rho_n_disk(&[z], r)? * rho_n_disk(&[w], r)?)),
        Domain::Annulus { q } => {
            let two = rho_n_annulus(&PointConfig::annulus(vec![z, w], q, r)?)?;
            Ok(two / (rho1_annulus(z, r, q)? * rho1_annulus(w, r, q)?))
        }
    }
}

/// Sign selector for [`g_extremes`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

/// `g(±a, b; r)` for real `a, b`: the lower (`+`) and upper (`−`) envelope of
/// `g` over configurations with `|z| = a`, `|w| = b`.
pub fn g_extremes(a: f64, b: f64, r: f64, domain: Domain, sign: Sign) -> Result<f64> {
    check_weight(r)?;
    let th = Theta::from_domain(domain)?;
    th.check(Complex::new(a, 0.0))?;
    th.check(Complex::new(b, 0.0))?;
    let s = sign.value();
    let (a2, b2) = (a * a, b * b);
    let t_ab = th.re(s * a * b)?;
    let num = b2 * th.prod(&[s * a / b, -r * a2, -r * b2])?.powi(2);
    let den = th.prod(&[-r, -r * a2 * a2, -r * b2 * b2])? * t_ab.powi(4) * th.re(-r * a2 * b2)?.powi(3);
    let bracket = th.prod(&[-r * a2 * a2 * b2, -r * a2 * b2 * b2])? * t_ab * t_ab
        + th.prod(&[a2, b2])? * th.re(-s * r * a2 * a * b2 * b)?.powi(2);
    Ok(num / den * bracket)
}

/// Residual of the theta addition step that turns `g(−a, b)` into
/// [`g_extremes`]:
/// `θ(−ra⁴b², −ra²b⁴)θ(−ab)² − θ(a², b²)θ(ra³b³)² = b²θ(−a/b)²θ(−ra²b², −ra⁴b⁴)`.
pub fn g_extremes_addition_residual(a: f64, b: f64, r: f64, q: f64) -> Result<f64> {
    let nome = Nome::new(q)?;
    let t = |x: f64| nome.theta_re(x);
    let (a2, b2) = (a * a, b * b);
    let lhs = t(-r * a2 * a2 * b2)? * t(-r * a2 * b2 * b2)? * t(-a * b)?.powi(2)
        - t(a2)? * t(b2)? * t(r * a2 * a * b2 * b)?.powi(2);
    let rhs = b2 * t(-a / b)?.powi(2) * t(-r * a2 * b2)? * t(-r * a2 * a2 * b2 * b2)?;
    Ok((lhs - rhs).abs() / rhs.abs().max(lhs.abs()))
}

/// Disk value `g_𝔻(−a, b; r)` as an explicit rational function of `a, b, r`.
pub fn g_disk_upper_polynomial(a: f64, b: f64, r: f64) -> f64 {
    let (a2, b2) = (a * a, b * b);
    let pre = (a + b).powi(2) * (1.0 + r * a2).powi(2) * (1.0 + r * b2).powi(2)
        / ((1.0 + a * b).powi(4)
            * (1.0 + r)
            * (1.0 + r * a2 * a2)
            * (1.0 + r * b2 * b2)
            * (1.0 + r * a2 * b2).powi(3));
    let edge = 2.0 - a2 + 2.0 * a * b - b2 + 2.0 * a2 * b2;
    let mid = a2 - 2.0 * a * b + 4.0 * a2 * a * b + b2 + a2 * a2 * b2 + 4.0 * a * b2 * b - 2.0 * a2 * a * b2 * b
        + a2 * b2 * b2;
    pre * (a2.powi(3) * b2.powi(3) * edge * r * r + a2 * b2 * mid * r + edge)
}

/// `g_𝔻(−r^{−1/4}, r^{−1/4}; r) = (6 + r + 1/r) / (4(√r + 1/√r))`.
pub fn g_disk_diagonal_value(r: f64) -> f64 {
    (6.0 + r + 1.0 / r) / (4.0 * (r.sqrt() + 1.0 / r.sqrt()))
}

fn p_sym(x: f64) -> f64 {
    x + 1.0 / x
}

/// Lower bound `D̃(a, b; s) = p(a⁷b⁴s⁵) + 13p(a³b²s³) − 46p(a⁴b²s)` with
/// `p(x) = x + 1/x`.
pub fn d_tilde(a: f64, b: f64, s: f64) -> f64 {
    p_sym(a.powi(7) * b.powi(4) * s.powi(5)) + 13.0 * p_sym(a.powi(3) * b * b * s.powi(3))
        - 46.0 * p_sym(a.powi(4) * b * b * s)
}

/// The factor `D(a, b; r)` governing the sign of `∂_a g_𝔻(−a, b; r)`.
pub fn d_exact(a: f64, b: f64, r: f64) -> f64 {
    let s = r.sqrt();
    let s3 = s * r;
    let p = p_sym;
    p(a.powi(7) * b.powi(4) * s.powi(5))
        + (p(a.powi(3) * b * b * s3) + 5.0 * p(a.powi(5) * b * b * s3) - p(a * a * b.powi(3) * s3)
            + 3.0 * p(a.powi(4) * b.powi(3) * s3)
            + 2.0 * p(a.powi(6) * b.powi(3) * s3)
            + 3.0 * p(a.powi(5) * b.powi(4) * s3))
        - (10.0 * p(a * s) + 5.0 * p(a.powi(3) * s) + 2.0 * p(a / (b * b) * s) + 3.0 * p(s / b)
            + 9.0 * p(a * a / b * s)
            + 5.0 * p(b * s)
            + 10.0 * p(a * a * b * s)
            + p(a.powi(4) * b * s)
            + 2.0 * p(a * b * b * s)
            - p(a * b.powi(4) * s))
}

/// `∂_a g_𝔻(−a, b; r)` written through [`d_exact`].
pub fn d_g_disk_upper_da(a: f64, b: f64, r: f64) -> f64 {
    let num = 4.0 * a.powi(7) * b.powi(4) * r.powf(2.5) * d_exact(a, b, r) * (1.0 - a) * (1.0 + a)
        * (1.0 - b).powi(2)
        * (1.0 + b).powi(2)
        * (a + b)
        * (1.0 + r * a * a)
        * (1.0 + r * b * b).powi(2);
    let den = (1.0 + a * b).powi(5)
        * (1.0 + r)
        * (1.0 + r * a.powi(4)).powi(2)
        * (1.0 + r * a * a * b * b).powi(4)
        * (1.0 + r * b.powi(4));
    num / den
}

/// Result of scanning `g_𝔻(−a, b; r)` over the open square `(0, 1)²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseScan {
    pub max_g: f64,
    pub argmax: (f64, f64),
    pub min_d_tilde: f64,
    pub negative_d_tilde: usize,
}

/// Grid scan of the upper envelope `g_𝔻(−a, b; r)` on cell midpoints of an
/// `n × n` grid; also records the sign of `D̃(a, b; √r)`.
pub fn repulsive_phase_check(r: f64, grid_n: usize) -> Result<PhaseScan> {
    if !(r >= 0.0 && r.is_finite()) {
        return Err(Error::InvalidParameter(format!("weight r = {r} must be non-negative")));
    }
    if grid_n == 0 || grid_n > 400 {
        return Err(Error::InvalidParameter(format!("grid size {grid_n} not in 1..=400")));
    }
    let h = 1.0 / grid_n as f64;
    let rows: Vec<PhaseScan> = (0..grid_n)
        .into_par_iter()
        .map(|i| {
            let a = (i as f64 + 0.5) * h;
            let mut best = PhaseScan { max_g: f64::NEG_INFINITY, argmax: (a, 0.0), min_d_tilde: f64::INFINITY, negative_d_tilde: 0 };
            for j in 0..grid_n {
                let b = (j as f64 + 0.5) * h;
                let g = g_disk_upper_polynomial(a, b, r);
                if g > best.max_g {
                    best.max_g = g;
                    best.argmax = (a, b);
                }
                if r > 0.0 {
                    let d = d_tilde(a, b, r.sqrt());
                    best.min_d_tilde = best.min_d_tilde.min(d);
                    best.negative_d_tilde += usize::from(d < 0.0);
                }
            }
            best
        })
        .collect();
    // Row order is fixed, so the fold is independent of scheduling.
    Ok(rows.into_iter().fold(
        PhaseScan { max_g: f64::NEG_INFINITY, argmax: (0.0, 0.0), min_d_tilde: f64::INFINITY, negative_d_tilde: 0 },
        |acc, row| PhaseScan {
            max_g: acc.max_g.max(row.max_g),
            argmax: if row.max_g > acc.max_g { row.argmax } else { acc.argmax },
            min_d_tilde: acc.min_d_tilde.min(row.min_d_tilde),
            negative_d_tilde: acc.negative_d_tilde + row.negative_d_tilde,
        },
    ))
}

// ---------------------------------------------------------------------------
// G functions

fn check_range(value: f64, lo: f64, hi: f64) -> Result<()> {
    if !(value > lo && value < hi) {
        return Err(Error::OutOfRange { value, lo, hi });
    }
    Ok(())
}

/// `G^∧(x; r) = g(q/x, x; r)` for `x ∈ (√q, 1)`.
pub fn g_wedge(x: f64, r: f64, q: f64) -> Result<f64> {
    check_weight(r)?;
    let nome = Nome::new(q)?;
    check_range(x, q.sqrt(), 1.0)?;
    let t = |v: f64| nome.theta_re(v);
    let x2 = x * x;
    let tq = t(q)?;
    let pair = t(-r * x2)? * t(-x2 / r)?;
    let lead = r * r * t(q * x2)?.powi(2) * pair.powi(3)
        / (x2 * tq * tq * t(-r)?.powi(4) * t(-r * x2 * x2)? * t(-x2 * x2 / r)?);
    let corr = (t(-r * q)? * t(x2)?).powi(2) / (tq * tq * pair);
    Ok(lead * (1.0 + corr))
}

/// Coefficient `c(r) = 8q₀⁴r³θ(−qr)⁶ / (q²θ(q)²θ(−r)⁶)` of the quadratic
/// vanishing `G^∧(x) ≈ c(r)(x − √q)²`.
pub fn g_wedge_coefficient(r: f64, q: f64) -> Result<f64> {
    check_weight(r)?;
    let nome = Nome::new(q)?;
    let q0 = nome.q0();
    Ok(8.0 * q0.powi(4) * r.powi(3) * nome.theta_re(-q * r)?.powi(6)
        / (q * q * nome.theta_re(q)?.powi(2) * nome.theta_re(-r)?.powi(6)))
}

/// `G̃(c; r) = G^∨(√c; r)` for `c ∈ (q², 1]`.
pub fn g_tilde(c: f64, r: f64, q: f64) -> Result<f64> {
    check_weight(r)?;
    let nome = Nome::new(q)?;
    if !(c > q * q && c <= 1.0) {
        return Err(Error::OutOfRange { value: c, lo: q * q, hi: 1.0 });
    }
    Ok(g_tilde_continued(&nome, Complex::new(c, 0.0), r)?.re)
}

/// The closed form of `G̃`, continued analytically in `c`.
fn g_tilde_continued(nome: &Nome, c: Complex, r: f64) -> Result<Complex> {
    let t = |v: Complex| nome.theta(v);
    let one = Complex::new(1.0, 0.0);
    let c2 = c * c;
    let c3 = c2 * c;
    let lead = c * t(-c * r)?.powi(4) * (t(-one)? * t(-c3 * r)?).powi(2)
        / (t(-one * r)? * t(-c)?.powi(2) * t(-c2 * r)?.powi(5));
    let corr = (t(c)? * t(c3 * r)? / (t(-c)? * t(-c3 * r)?)).powi(2);
    Ok(lead * (one + corr))
}

/// Radius of the contour used by [`g_tilde_derivatives_at_one`].  Every
/// singularity of the continued closed form lies at distance `≥ √3/2` from
/// `c = 1` (poles at `c = −pᵏ`, `c² = −pᵏ/r`, `c³ = −pᵏ/r`).
pub const G_TILDE_CONTOUR_RADIUS: f64 = 0.25;
const G_TILDE_CONTOUR_NODES: usize = 64;

/// Derivatives `G̃^{(k)}(1)`, `k = 1..=4`, by the trapezoidal rule on the
/// Cauchy integral over `|c − 1| = 0.25` — a 64-node stencil on a circle.
///
/// Real-axis stencils are necessarily one-sided here and lose several digits
/// to cancellation, because `G̃ − 1` starts at `(1−c)⁴` with a coefficient
/// that is small compared with the higher ones.
pub fn g_tilde_derivatives_at_one(r: f64, q: f64) -> Result<[f64; 4]> {
    check_weight(r)?;
    let nome = Nome::new(q)?;
    let m = G_TILDE_CONTOUR_NODES;
    let rho = G_TILDE_CONTOUR_RADIUS;
    let mut coeffs = [Complex::new(0.0, 0.0); 4];
    for j in 0..m {
        let u = Complex::from_polar(1.0, 2.0 * std::f64::consts::PI * j as f64 / m as f64);
        let f = g_tilde_continued(&nome, Complex::new(1.0, 0.0) + u * rho, r)?;
        for (k, slot) in coeffs.iter_mut().enumerate() {
            *slot += f * u.powi(-(k as i32 + 1));
        }
    }
    let mut out = [0.0; 4];
    let mut fact = 1.0;
    for k in 0..4 {
        fact *= (k + 1) as f64;
        out[k] = fact * coeffs[k].re / (m as f64 * rho.powi(k as i32 + 1));
    }
    Ok(out)
}

/// Weights of a one-sided stencil on the nodes `0, −1, …, −(m−1)` (in units
/// of the step) for the `order`-th derivative at 0.
fn backward_stencil(order: usize, nodes: usize) -> Vec<f64> {
    // Solve Σ_k w_k (−k)^j / j! = δ_{j,order} for j < nodes.
    let a = DMatrix::from_fn(nodes, nodes, |j, k| {
        let x = -(k as f64);
        x.powi(j as i32) / (1..=j).map(|v| v as f64).product::<f64>()
    });
    let mut rhs = nalgebra::DVector::zeros(nodes);
    rhs[order] = 1.0;
    a.lu().solve(&rhs).expect("Vandermonde system is regular").iter().copied().collect()
}

/// Real-axis alternative to [`g_tilde_derivatives_at_one`]: one-sided
/// six-point stencils at steps `h/2, h, 2h` combined by two Richardson
/// steps.  Good to roughly `1e−3` relative for the fourth derivative.
pub fn g_tilde_derivatives_one_sided(r: f64, q: f64, h: f64) -> Result<[f64; 4]> {
    const NODES: usize = 6;
    if !(h > 0.0 && 1.0 - 2.0 * h * (NODES - 1) as f64 > q * q) {
        return Err(Error::InvalidParameter(format!("step {h} leaves the domain of G̃")));
    }
    let half = h / 2.0;
    let samples: Vec<f64> = (0..=4 * (NODES - 1))
        .map(|k| g_tilde(1.0 - k as f64 * half, r, q))
        .collect::<Result<_>>()?;
    let mut out = [0.0; 4];
    for (order, slot) in (1..=4).zip(out.iter_mut()) {
        let w = backward_stencil(order, NODES);
        let estimate = |scale: usize| -> f64 {
            let step = half * scale as f64;
            w.iter().enumerate().map(|(k, wk)| wk * samples[k * scale]).sum::<f64>() / step.powi(order as i32)
        };
        let (d1, d2, d4) = (estimate(1), estimate(2), estimate(4));
        // Leading error terms are O(h^{6−order}) and O(h^{7−order}).
        let p = (NODES - order) as i32;
        let f1 = 2f64.powi(p);
        let f2 = 2f64.powi(p + 1);
        let e1 = (f1 * d1 - d2) / (f1 - 1.0);
        let e2 = (f1 * d2 - d4) / (f1 - 1.0);
        *slot = (f2 * e1 - e2) / (f2 - 1.0);
    }
    Ok(out)
}

/// `G^∨(x; r) = g(−x, x; r)` for `x ∈ (q, 1)`.
pub fn g_vee(x: f64, r: f64, q: f64) -> Result<f64> {
    check_range(x, q, 1.0)?;
    g_tilde(x * x, r, q)
}

/// Quartic-decay coefficient
/// `κ(r) = 5℘(φ_{−r})² + 2e₁℘(φ_{−r}) − (e₁² + g₂/2)`.
pub fn kappa(r: f64, q: f64) -> Result<f64> {
    check_weight(r)?;
    let lat = LatticeParams::new(q)?;
    let sv = lat.special_values();
    let wp = lat.wp_z(Complex::new(-r, 0.0))?.re;
    Ok(5.0 * wp * wp + 2.0 * sv.e1 * wp - (sv.e1 * sv.e1 + sv.g2 / 2.0))
}

/// Disk limit `κ₀(r) = −(r⁴ + 12r³ − 58r² + 12r + 1) / (16(1+r)⁴)`.
pub fn kappa0(r: f64) -> f64 {
    -(r.powi(4) + 12.0 * r.powi(3) - 58.0 * r * r + 12.0 * r + 1.0) / (16.0 * (1.0 + r).powi(4))
}

// ---------------------------------------------------------------------------
// critical curve

/// A point `(q, r₀(q))` on the curve where `κ` changes sign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalCurvePoint {
    pub q: f64,
    pub r0: f64,
    pub wp_plus: f64,
    pub kappa_at: Option<f64>,
}

/// `℘₊ = −e₁/5 + √(24e₁² + 10g₂)/10`, the root of `κ` in the variable `℘`.
pub fn wp_plus(q: f64) -> Result<f64> {
    let sv = LatticeParams::new(q)?.special_values();
    let (gap12, gap13) = root_gaps(q)?;
    Ok(sv.e1 - critical_offset(gap12, gap13))
}

/// `t = e₁ − ℘₊`: with `A = e₁ − e₂`, `B = e₁ − e₃` the condition `κ = 0`
/// reads `5t² − 4(A+B)t + 2AB = 0`; the small root is taken through the
/// product of the roots.
fn critical_offset(a: f64, b: f64) -> f64 {
    let large = (2.0 * (a + b) + (4.0 * (a + b).powi(2) - 10.0 * a * b).sqrt()) / 5.0;
    2.0 * a * b / (5.0 * large)
}

/// `r₀(q) = exp(−½∫_{℘₊}^{e₁} ds/√((e₁−s)(s−e₂)(s−e₃)))`; `q = 0` gives the
/// disk limit `r_c`.
///
/// With `s = e₁ − A sin²ϑ` the integral becomes
/// `∫₀^{ϑ₀} dϑ/√(B − A sin²ϑ)`, `sin²ϑ₀ = (e₁ − ℘₊)/A`, which stays well
/// conditioned as `q → 1` where `A = e₁ − e₂` is exponentially small.
pub fn r0(q: f64) -> Result<CriticalCurvePoint> {
    if !(0.0..=Q_MAX).contains(&q) {
        return Err(Error::UnsupportedModulus { q, min: 0.0, max: Q_MAX });
    }
    let sv = LatticeParams::new(q)?.special_values();
    let (a, b) = root_gaps(q)?;
    let t = critical_offset(a, b);
    let theta0 = (t / a).sqrt().asin();
    let y = quadrature::integrate(|v| 1.0 / (b - a * v.sin().powi(2)).sqrt(), 0.0, theta0, 1e-13).value;
    let r0 = (-y).exp();
    if !(r0 > q && r0 < 1.0) {
        return Err(Error::OutOfRange { value: r0, lo: q, hi: 1.0 });
    }
    let kappa_at = if q > 0.0 { Some(kappa(r0, q)?) } else { Some(kappa0(r0)) };
    Ok(CriticalCurvePoint { q, r0, wp_plus: sv.e1 - t, kappa_at })
}

/// `r_c = lim_{q→0} r₀(q)`, extrapolated from `r₀` at `q = h, 2h` assuming
/// the expansion in even powers of `q`.
pub fn rc_extrapolated(h: f64) -> Result<f64> {
    let a = r0(h)?.r0;
    let b = r0(2.0 * h)?.r0;
    Ok((4.0 * a - b) / 3.0)
}

/// Coefficient `c` of `r₀(q) = r_c + c q² + d q⁴ + …`: the scaled excess
/// `(r₀(q) − r_c)/q²`, with `r_c` in closed form, is interpolated by a
/// quadratic in `q²` through three moduli and evaluated at `q = 0`.
pub fn r0_quadratic_fit(qs: [f64; 3]) -> Result<f64> {
    let rc = rc_closed_form();
    let x: Vec<f64> = qs.iter().map(|q| q * q).collect();
    let y: Vec<f64> = qs.iter().zip(&x).map(|(&q, &x)| r0(q).map(|p| (p.r0 - rc) / x)).collect::<Result<_>>()?;
    let mut at_zero = 0.0;
    for i in 0..3 {
        let mut l = 1.0;
        for j in 0..3 {
            if j != i {
                if x[i] == x[j] {
                    return Err(Error::InvalidParameter("moduli must be distinct".into()));
                }
                l *= x[j] / (x[j] - x[i]);
            }
        }
        at_zero += l * y[i];
    }
    Ok(at_zero)
}

/// Least-squares fit `y ≈ C xᵝ` in log–log coordinates; returns `(β, C)`.
pub fn power_law_fit(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::DimensionMismatch("need at least two (x, y) pairs".into()));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.abs().ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let beta = sxy / sxx;
    Ok((beta, (my - beta * mx).exp()))
}

/// Exponent of `G^∧(x) ∝ (x − √q)^β` fitted on `x − √q ∈ [1e−5, 1e−3]`;
/// returns `(β, fitted coefficient)`.
pub fn fit_wedge_exponent(r: f64, q: f64) -> Result<(f64, f64)> {
    let base = q.sqrt();
    let ds: Vec<f64> = (0..=20).map(|k| 10f64.powf(-5.0 + 2.0 * k as f64 / 20.0)).collect();
    let gs: Vec<f64> = ds.iter().map(|d| g_wedge(base + d, r, q)).collect::<Result<_>>()?;
    power_law_fit(&ds, &gs)
}

/// Exponent of `|G^∨(x) − 1| ∝ (1 − x²)^η` fitted on `x ∈ [0.95, 0.999]`.
pub fn fit_vee_exponent(r: f64, q: f64) -> Result<(f64, f64)> {
    let xs: Vec<f64> = (0..=40).map(|k| 0.95 + 0.049 * k as f64 / 40.0).collect();
    let us: Vec<f64> = xs.iter().map(|x| 1.0 - x * x).collect();
    let gs: Vec<f64> = xs.iter().map(|&x| g_vee(x, r, q).map(|g| g - 1.0)).collect::<Result<_>>()?;
    power_law_fit(&us, &gs)
}

// ---------------------------------------------------------------------------
// Frobenius determinant

/// Relative residual of the elliptic Cauchy–Frobenius determinant evaluation
/// `q₀^{2n} ∏_{i<j}|z_j|²θ(z_i/z_j, z̄_i/z̄_j) / ∏_{i,j}θ(z_i z̄_j)
///  = θ(−s)/θ(−s∏|z|²) · det[S(z_i, z_j; s)]`.
pub fn frobenius_residual(points: &[Complex], s: f64, q: f64) -> Result<f64> {
    check_weight(s)?;
    let nome = Nome::new(q)?;
    let n = points.len();
    if n == 0 || n > 6 {
        return Err(Error::InvalidParameter(format!("{n} points; need 1..=6")));
    }
    for &z in points {
        kernels::check_annulus(z, q)?;
    }
    let q0 = nome.q0();
    let mut lhs = Complex::new(q0.powi(2 * n as i32), 0.0);
    for i in 0..n {
        for j in (i + 1)..n {
            let (zi, zj) = (points[i], points[j]);
            lhs *= nome.theta(zi / zj)? * nome.theta(zi.conj() / zj.conj())? * zj.norm_sqr();
        }
    }
    for &zi in points {
        for &zj in points {
            lhs /= nome.theta(zi * zj.conj())?;
        }
    }
    let prod_sq: f64 = points.iter().map(|z| z.norm_sqr()).product();
    let m = DMatrix::from_fn(n, n, |i, j| {
        kernels::szego_annulus_with(&nome, points[i], points[j], Complex::new(s, 0.0)).unwrap_or(Complex::new(f64::NAN, 0.0))
    });
    let rhs = det(&m)? * nome.theta_re(-s)? / nome.theta_re(-s * prod_sq)?;
    Ok((lhs - rhs).norm() / rhs.norm())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex {
        Complex::new(re, im)
    }

    fn lcg_matrix(n: usize, seed: u64) -> DMatrix<Complex> {
        let mut s = seed;
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        };
        DMatrix::from_fn(n, n, |_, _| c(next(), next()))
    }

    #[test]
    fn identity_matrix_values() {
        let id = DMatrix::<Complex>::identity(3, 3);
        assert_eq!(per(&id).unwrap(), c(1.0, 0.0));
        assert_relative_eq!(det(&id).unwrap().re, 1.0);
        assert_relative_eq!(perdet(&id).unwrap().re, 1.0);
        assert!(matches!(per(&DMatrix::<Complex>::zeros(2, 3)), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn two_by_two_perdet_is_det_of_hadamard_square() {
        let m = lcg_matrix(2, 7);
        let sq = m.component_mul(&m);
        let a = perdet(&m).unwrap();
        let b = det(&sq).unwrap();
        assert!((a - b).norm() < 1e-14);
    }

    #[test]
    fn ryser_matches_naive() {
        for n in 1..=8 {
            let m = lcg_matrix(n, n as u64);
            let a = per_naive(&m).unwrap();
            let b = per_ryser(&m).unwrap();
            assert!((a - b).norm() < 1e-11 * a.norm().max(1.0), "n={n}");
            let dn = det_naive(&m).unwrap();
            assert!((det(&m).unwrap() - dn).norm() < 1e-11 * dn.norm().max(1.0));
        }
        assert!(per(&lcg_matrix(10, 3)).is_ok());
        assert!(per(&lcg_matrix(13, 3)).is_err());
    }

    #[test]
    fn psd_perdet_is_nonnegative() {
        let b = lcg_matrix(4, 99);
        let m = &b * b.adjoint();
        let p = per(&m).unwrap();
        let d = det(&m).unwrap();
        assert!(p.re >= d.re && d.re >= 0.0);
        assert!(perdet(&m).unwrap().re >= 0.0);
    }

    #[test]
    fn backward_stencils_are_exact_on_polynomials() {
        for order in 1..=4 {
            let w = backward_stencil(order, 6);
            // f(x) = x^order / order!  has f^{(order)} = 1 and the stencil is
            // exact on degree ≤ 5.
            let fact: f64 = (1..=order).map(|v| v as f64).product();
            let s: f64 = w.iter().enumerate().map(|(k, wk)| wk * (-(k as f64)).powi(order as i32) / fact).sum();
            assert_relative_eq!(s, 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn disk_density_values() {
        assert_relative_eq!(rho_n_disk(&[c(0.0, 0.0)], 0.7).unwrap(), 1.7, max_relative = 1e-15);
        let z = c(0.4, -0.3);
        assert_relative_eq!(rho_n_disk(&[z], 0.7).unwrap(), rho1_disk(z, 0.7).unwrap(), max_relative = 1e-13);
    }

    #[test]
    fn borchardt_and_large_weight_limit() {
        let pts = [c(0.3, 0.1), c(-0.2, 0.5), c(0.6, -0.4), c(-0.1, -0.3)];
        let k = DMatrix::from_fn(4, 4, |i, j| {
            let d = 1.0 - pts[i] * pts[j].conj();
            (d * d).inv()
        });
        let want = det(&k).unwrap().re;
        assert_relative_eq!(rho_n_disk(&pts, 0.0).unwrap(), want, max_relative = 1e-10);
        assert_relative_eq!(rho_n_disk(&pts, 1e12).unwrap(), want, max_relative = 1e-6);
    }

    #[test]
    fn annulus_density_matches_closed_form_and_is_radial() {
        let (q, r) = (0.3, 0.45);
        let z = c(0.55, 0.2);
        let a = rho_n_annulus(&PointConfig::annulus(vec![z], q, r).unwrap()).unwrap();
        assert_relative_eq!(a, rho1_annulus(z, r, q).unwrap(), max_relative = 1e-12);
        let vals: Vec<f64> = (0..16)
            .map(|k| rho1_annulus(Complex::from_polar(z.norm(), k as f64 * 0.39), r, q).unwrap())
            .collect();
        let spread = vals.iter().cloned().fold(f64::MIN, f64::max) - vals.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread < 1e-12 * vals[0]);
    }

    #[test]
    fn density_edge_asymptotics() {
        let (q, r) = (0.3, 0.6);
        let d = 1e-4;
        let outer = 1.0 - d;
        let inner = q + d;
        assert_relative_eq!(rho1_annulus_radial(outer, r, q).unwrap() * (1.0 - outer * outer).powi(2), 1.0, max_relative = 0.01);
        let v = rho1_annulus_radial(inner, r, q).unwrap() * (inner * inner - q * q).powi(2) / (q * q);
        assert_relative_eq!(v, 1.0, max_relative = 0.01);
    }

    #[test]
    fn coincident_points_vanish() {
        let cfg = PointConfig::annulus(vec![c(0.5, 0.1), c(0.5, 0.1)], 0.3, 0.5).unwrap();
        assert_eq!(rho_n_annulus(&cfg).unwrap(), 0.0);
    }

    #[test]
    fn inversion_of_two_point_function() {
        let (q, r) = (0.35, 0.8);
        let pts = vec![c(0.5, 0.3), c(-0.45, 0.4)];
        let inv: Vec<Complex> = pts.iter().map(|z| Complex::new(q, 0.0) / z).collect();
        let jac: f64 = pts.iter().map(|z| q * q / z.norm_sqr().powi(2)).product();
        let lhs = rho_n_annulus(&PointConfig::annulus(inv, q, r).unwrap()).unwrap() * jac;
        let rhs = rho_n_annulus(&PointConfig::annulus(pts, q, q * q / r).unwrap()).unwrap();
        assert_relative_eq!(lhs, rhs, max_relative = 1e-10);
    }

    #[test]
    fn hyperdet_of_rank_structured_tensor() {
        let a = lcg_matrix(3, 5);
        let b = lcg_matrix(3, 6);
        let hd = hyperdet23(&perdet_tensor(&a, &b).unwrap()).unwrap();
        let want = per(&a).unwrap() * det(&b).unwrap();
        assert!((hd - want).norm() < 1e-12 * want.norm());
        let t = CubicTensor::from_fn(3, |i, j, k| c((i + 2 * j) as f64 * 0.3 - 0.4, (k * i) as f64 * 0.2 + 0.1));
        let fast = hyperdet23(&t).unwrap();
        assert!((fast - hyperdet23_naive(&t).unwrap()).norm() < 1e-12 * fast.norm().max(1.0));
        let one = CubicTensor::from_fn(1, |_, _, _| c(2.0, 1.0));
        assert_eq!(hyperdet23(&one).unwrap(), c(2.0, 1.0));
    }

    #[test]
    fn hyperdeterminantal_form_of_correlations() {
        let cfg = PointConfig::annulus(vec![c(0.5, 0.3), c(-0.6, 0.2), c(0.1, -0.7)], 0.3, 0.6).unwrap();
        assert_relative_eq!(rho_n_annulus_hyperdet(&cfg).unwrap(), rho_n_annulus(&cfg).unwrap(), max_relative = 1e-11);
    }

    #[test]
    fn unfolded_g_closed_form_matches_ratio() {
        let (q, r) = (0.3, 0.7);
        for (z, w) in [(c(0.5, 0.2), c(-0.4, 0.6)), (c(0.8, 0.0), c(0.35, 0.1))] {
            let a = unfolded_g(z, w, r, Domain::Annulus { q }).unwrap();
            let b = unfolded_g_ratio(z, w, r, Domain::Annulus { q }).unwrap();
            assert_relative_eq!(a, b, max_relative = 1e-11);
            let a = unfolded_g(z * 0.9, w, r, Domain::Disk).unwrap();
            let b = unfolded_g_ratio(z * 0.9, w, r, Domain::Disk).unwrap();
            assert_relative_eq!(a, b, max_relative = 1e-11);
        }
    }

    #[test]
    fn unfolded_g_boundary_and_symmetry() {
        let (q, r) = (0.3, 0.7);
        let w = c(0.5, 0.3);
        let near = unfolded_g(c(1.0 - 1e-8, 0.0), w, r, Domain::Annulus { q }).unwrap();
        assert!((near - 1.0).abs() < 1e-5);
        let z = c(-0.6, 0.2);
        let a = unfolded_g(z, w, r, Domain::Annulus { q }).unwrap();
        let tz = Complex::new(q, 0.0) / z;
        let tw = Complex::new(q, 0.0) / w;
        let b = unfolded_g(tz, tw, q * q / r, Domain::Annulus { q }).unwrap();
        assert_relative_eq!(a, b, max_relative = 1e-10);
    }

    #[test]
    fn extremes_match_unfolded_g_and_bound_it() {
        let (q, r) = (0.3, 0.7);
        let (a, b) = (0.55, 0.8);
        let dom = Domain::Annulus { q };
        let lo = g_extremes(a, b, r, dom, Sign::Plus).unwrap();
        let hi = g_extremes(a, b, r, dom, Sign::Minus).unwrap();
        assert_relative_eq!(lo, unfolded_g(c(a, 0.0), c(b, 0.0), r, dom).unwrap(), max_relative = 1e-12);
        assert_relative_eq!(hi, unfolded_g(c(-a, 0.0), c(b, 0.0), r, dom).unwrap(), max_relative = 1e-12);
        for k in 0..36 {
            let g = unfolded_g(Complex::from_polar(a, k as f64 * 0.1745), c(b, 0.0), r, dom).unwrap();
            assert!(g >= lo - 1e-12 && g <= hi + 1e-12);
        }
        assert!(g_extremes_addition_residual(a, b, r, q).unwrap() < 1e-12);
    }

    #[test]
    fn disk_extreme_matches_polynomial_form() {
        for (a, b, r) in [(0.55, 0.8, 0.7), (0.2, 0.9, 0.1), (0.7, 0.3, 2.0)] {
            let g = g_extremes(a, b, r, Domain::Disk, Sign::Minus).unwrap();
            assert_relative_eq!(g, g_disk_upper_polynomial(a, b, r), max_relative = 1e-12);
        }
        let t = 4f64.powf(-0.25);
        assert_relative_eq!(g_disk_upper_polynomial(t, t, 4.0), g_disk_diagonal_value(4.0), max_relative = 1e-12);
        assert_relative_eq!(g_disk_diagonal_value(4.0), 1.025, max_relative = 1e-15);
        assert_relative_eq!(g_disk_upper_polynomial(0.3, 1.0, 0.4), 1.0, max_relative = 1e-13);
        assert_relative_eq!(g_disk_upper_polynomial(1.0, 0.6, 0.4), 1.0, max_relative = 1e-13);
    }

    #[test]
    fn derivative_factor_and_its_lower_bound() {
        for (a, b, r) in [(0.5, 0.7, 0.2), (0.9, 0.4, 0.05), (0.3, 0.3, 0.8)] {
            let h = 1e-6;
            let fd = (g_disk_upper_polynomial(a + h, b, r) - g_disk_upper_polynomial(a - h, b, r)) / (2.0 * h);
            assert_relative_eq!(d_g_disk_upper_da(a, b, r), fd, max_relative = 1e-6);
            assert!(d_exact(a, b, r) >= d_tilde(a, b, r.sqrt()) - 1e-9);
        }
    }

    #[test]
    fn repulsive_phase_scan() {
        let scan = repulsive_phase_check(0.1, 200).unwrap();
        assert!(scan.max_g < 1.0, "{scan:?}");
        assert_eq!(scan.negative_d_tilde, 0);
        assert!(g_disk_diagonal_value(2.0) > 1.0);
        let scan = repulsive_phase_check(2.0, 100).unwrap();
        assert!(scan.max_g > 1.0);
    }

    #[test]
    fn g_functions_agree() {
        let (q, r) = (0.3, 0.7);
        let x = 0.7;
        let dom = Domain::Annulus { q };
        assert_relative_eq!(g_wedge(x, r, q).unwrap(), unfolded_g(c(q / x, 0.0), c(x, 0.0), r, dom).unwrap(), max_relative = 1e-12);
        assert_relative_eq!(g_vee(x, r, q).unwrap(), unfolded_g(c(-x, 0.0), c(x, 0.0), r, dom).unwrap(), max_relative = 1e-12);
        assert_relative_eq!(g_tilde(1.0, r, q).unwrap(), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn kappa_values_and_symmetries() {
        let (q, r) = (0.3, 0.55);
        let k = kappa(r, q).unwrap();
        for other in [1.0 / r, q * q * r, q * q / r] {
            assert_relative_eq!(kappa(other, q).unwrap(), k, max_relative = 1e-11);
        }
        assert!(kappa0(rc_closed_form()).abs() < 1e-14);
        assert_relative_eq!(kappa(0.4, 1e-6).unwrap(), kappa0(0.4), max_relative = 1e-9);
    }

    #[test]
    fn quartic_contact_at_one() {
        for (q, r) in [(0.1, 0.6), (0.1, 0.2), (0.3, 0.8)] {
            let d = g_tilde_derivatives_at_one(r, q).unwrap();
            let k = kappa(r, q).unwrap();
            assert!(d[0].abs() < 1e-9 && d[1].abs() < 1e-9 && d[2].abs() < 1e-9, "{d:?}");
            assert_relative_eq!(d[3] / 24.0, k, max_relative = 1e-9);
            let one_sided = g_tilde_derivatives_one_sided(r, q, 1e-2).unwrap();
            assert!(one_sided[0].abs() < 1e-5 && one_sided[1].abs() < 1e-5 && one_sided[2].abs() < 1e-3, "{one_sided:?}");
            assert_relative_eq!(one_sided[3] / 24.0, k, max_relative = 5e-3);
        }
    }

    #[test]
    fn critical_curve_values() {
        let p = r0(0.1).unwrap();
        assert!((p.r0 - 0.348).abs() < 1e-3);
        assert!(p.kappa_at.unwrap().abs() < 1e-9);
        let p0 = r0(0.0).unwrap();
        assert!((p0.r0 - rc_closed_form()).abs() < 1e-10);
        assert_relative_eq!(p0.wp_plus, (-2.0 + 3.0 * 6f64.sqrt()) / 60.0, max_relative = 1e-14);
        assert!((rc_extrapolated(1e-3).unwrap() - 0.284_630_363_9).abs() < 1e-8);
        let c = r0_quadratic_fit([0.01, 0.02, 0.04]).unwrap();
        assert!((c - 8.515_307_593).abs() < 0.01, "{c}");
        assert_relative_eq!(r0_quadratic_coefficient(), 8.515_307_593, max_relative = 1e-9);
        let near_one = r0(0.9).unwrap().r0;
        assert_relative_eq!(near_one, 0.9f64.sqrt(), max_relative = 1e-12);
        assert_relative_eq!(near_one, 0.95, max_relative = 0.02);
        for q in [0.05, 0.3, 0.5] {
            let via_inverse = (-LatticeParams::new(q).unwrap().wp_inverse(wp_plus(q).unwrap()).unwrap()).exp();
            assert_relative_eq!(r0(q).unwrap().r0, via_inverse, max_relative = 1e-10);
        }
    }

    #[test]
    fn exponent_fits() {
        let (beta, coef) = fit_wedge_exponent(0.7, 0.3).unwrap();
        assert!((beta - 2.0).abs() < 0.02, "{beta}");
        assert_relative_eq!(coef, g_wedge_coefficient(0.7, 0.3).unwrap(), max_relative = 0.01);
        let (eta, _) = fit_vee_exponent(0.6, 0.1).unwrap();
        assert!((eta - 4.0).abs() < 0.1, "{eta}");
    }

    #[test]
    fn frobenius_determinant() {
        let q = 0.3;
        assert!(frobenius_residual(&[c(0.6, 0.2)], 0.4, q).unwrap() < 1e-13);
        let pts = [c(0.5, 0.2), c(-0.6, 0.3), c(0.2, -0.8), c(-0.4, -0.4)];
        assert!(frobenius_residual(&pts, 0.7, q).unwrap() < 1e-10);
        let z = c(0.6, 0.1);
        let pair = [z, z + Complex::from_polar(1e-4, 0.3)];
        assert!(frobenius_residual(&pair, 0.7, q).unwrap() < 1e-6);
    }
}
