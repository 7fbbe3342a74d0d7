//! Randomised identity suite.
//!
//! Each named identity is evaluated on independently drawn instances and the
//! worst relative residual is reported.  The suite doubles as a regression
//! harness: every closed form in the crate is checked against a second,
//! structurally different evaluation.

use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::{bergman, conditional_kernel, mccullough_shen, sk_constant, szego_annulus_with, AnchorList, Domain};
use crate::pointprocess::{det, frobenius_residual, hyperdet23, kappa, per, perdet, perdet_tensor, CubicTensor};
use crate::theta::Nome;
use crate::Complex;

/// Residual threshold applied to every identity.
pub const THRESHOLD: f64 = 1e-9;

/// Parameters of a suite run.
#[derive(Debug, Clone)]
pub struct SuiteConfig {
    pub q_values: Vec<f64>,
    pub r_values: Vec<f64>,
    pub seed: u64,
    pub instances: usize,
    /// Negative control: flips the sign of the conditioned-kernel closed form.
    pub perturb_mccullough_shen: bool,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            q_values: vec![0.1, 0.3, 0.5],
            r_values: vec![0.2, 0.6, 1.7],
            seed: 2024,
            instances: 120,
            perturb_mccullough_shen: false,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct IdentityResult {
    pub name: String,
    pub instances: usize,
    pub max_residual: f64,
    pub threshold: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub q_values: Vec<f64>,
    pub r_values: Vec<f64>,
    pub identities: Vec<IdentityResult>,
    pub passed: bool,
    pub elapsed_seconds: f64,
}

impl SuiteReport {
    pub fn first_failure(&self) -> Option<&IdentityResult> {
        self.identities.iter().find(|r| !r.passed)
    }
}

fn rel(a: Complex, b: Complex, scale: f64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(scale).max(f64::MIN_POSITIVE)
}

struct Draw {
    rng: ChaCha8Rng,
}

impl Draw {
    fn modulus(&mut self, lo: f64, hi: f64) -> f64 {
        self.rng.random_range(lo..hi)
    }

    fn point(&mut self, lo: f64, hi: f64) -> Complex {
        Complex::from_polar(self.modulus(lo, hi), self.rng.random_range(0.0..2.0 * PI))
    }

    /// Point of the annulus kept a fixed fraction away from both edges.
    fn annulus_point(&mut self, q: f64) -> Complex {
        let pad = 0.1 * (1.0 - q);
        self.point(q + pad, 1.0 - pad)
    }

    /// `n` annulus points with pairwise separation at least `0.05(1−q)`.
    fn separated(&mut self, n: usize, q: f64) -> Vec<Complex> {
        let mut pts: Vec<Complex> = Vec::with_capacity(n);
        while pts.len() < n {
            let z = self.annulus_point(q);
            if pts.iter().all(|p| (p - z).norm() > 0.05 * (1.0 - q)) {
                pts.push(z);
            }
        }
        pts
    }

    fn matrix(&mut self, n: usize) -> DMatrix<Complex> {
        DMatrix::from_fn(n, n, |_, _| Complex::new(self.rng.random_range(-1.0..1.0), self.rng.random_range(-1.0..1.0)))
    }
}

type Check = fn(&mut Draw, f64, f64, bool) -> Result<f64>;

/// Runs every identity and collects the report.
pub fn run_suite(cfg: &SuiteConfig) -> Result<SuiteReport> {
    if cfg.q_values.is_empty() || cfg.r_values.is_empty() {
        return Err(Error::InvalidParameter("identity suite needs at least one q and one r".into()));
    }
    if let Some(&q) = cfg.q_values.iter().find(|q| !(**q > 0.0 && **q < 1.0)) {
        return Err(Error::InvalidParameter(format!("q = {q} outside (0, 1)")));
    }
    if let Some(&r) = cfg.r_values.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
        return Err(Error::InvalidParameter(format!("r = {r} must be positive")));
    }
    let start = Instant::now();
    let checks: [(&str, Check); 11] = [
        ("theta-inversion", theta_inversion),
        ("theta-quasi-periodicity", theta_quasi_periodicity),
        ("weierstrass-addition", weierstrass_addition),
        ("frobenius-determinant", frobenius),
        ("borchardt", borchardt),
        ("mccullough-shen", mccullough_shen_check),
        ("szego-functional-equations", functional_equations),
        ("kappa-symmetries", kappa_symmetries),
        ("szego-square-bergman", szego_square),
        ("hyperdet-perdet", hyperdet_perdet),
        ("jacobi-triple-product", triple_product),
    ];
    let mut identities = Vec::with_capacity(checks.len());
    for (k, (name, check)) in checks.iter().enumerate() {
        let mut draw = Draw { rng: ChaCha8Rng::seed_from_u64(cfg.seed) };
        draw.rng.set_stream(k as u64);
        let mut worst: f64 = 0.0;
        for i in 0..cfg.instances {
            let q = cfg.q_values[i % cfg.q_values.len()];
            let r = cfg.r_values[(i / cfg.q_values.len()) % cfg.r_values.len()];
            let res = check(&mut draw, q, r, cfg.perturb_mccullough_shen)?;
            // NaN must count as a failure.
            worst = if res.is_nan() { f64::INFINITY } else { worst.max(res) };
        }
        identities.push(IdentityResult {
            name: (*name).to_string(),
            instances: cfg.instances,
            max_residual: worst,
            threshold: THRESHOLD,
            passed: worst < THRESHOLD,
        });
    }
    Ok(SuiteReport {
        seed: cfg.seed,
        q_values: cfg.q_values.clone(),
        r_values: cfg.r_values.clone(),
        passed: identities.iter().all(|r| r.passed),
        identities,
        elapsed_seconds: start.elapsed().as_secs_f64(),
    })
}

// θ(1/z) = −θ(z)/z
fn theta_inversion(d: &mut Draw, q: f64, _r: f64, _: bool) -> Result<f64> {
    let nome = Nome::new(q)?;
    let z = d.point(q * q, 1.0 / (q * q));
    let lhs = nome.theta(z.inv())?;
    let rhs = -nome.theta(z)? / z;
    Ok(rel(lhs, rhs, 0.0))
}

// θ(pz) = −θ(z)/z with p = q²
fn theta_quasi_periodicity(d: &mut Draw, q: f64, _r: f64, _: bool) -> Result<f64> {
    let nome = Nome::new(q)?;
    let z = d.point(q, 1.0 / q);
    let lhs = nome.theta(z * nome.p())?;
    let rhs = -nome.theta(z)? / z;
    Ok(rel(lhs, rhs, 0.0))
}

// θ(xy, x/y, uv, u/v) − θ(xv, x/v, uy, u/y) = (u/y) θ(yv, y/v, xu, x/u)
fn weierstrass_addition(d: &mut Draw, q: f64, _r: f64, _: bool) -> Result<f64> {
    let nome = Nome::new(q)?;
    let mut pt = || d.point(q, 1.0);
    let (x, y, u, v) = (pt(), pt(), pt(), pt());
    let t1 = nome.theta_prod(&[x * y, x / y, u * v, u / v])?;
    let t2 = nome.theta_prod(&[x * v, x / v, u * y, u / y])?;
    let rhs = u / y * nome.theta_prod(&[y * v, y / v, x * u, x / u])?;
    Ok(rel(t1 - t2, rhs, t1.norm().max(t2.norm())))
}

fn frobenius(d: &mut Draw, q: f64, r: f64, _: bool) -> Result<f64> {
    let n = d.rng.random_range(1..=5);
    let pts = d.separated(n, q);
    frobenius_residual(&pts, r, q)
}

// perdet[(1 − z_i z̄_j)⁻¹] = det[(1 − z_i z̄_j)⁻²]
fn borchardt(d: &mut Draw, _q: f64, _r: f64, _: bool) -> Result<f64> {
    let n = d.rng.random_range(1..=5);
    let pts: Vec<Complex> = (0..n).map(|_| d.point(0.0, 0.9)).collect();
    let cauchy = DMatrix::from_fn(n, n, |i, j| (Complex::new(1.0, 0.0) - pts[i] * pts[j].conj()).inv());
    let squared = cauchy.map(|c| c * c);
    let lhs = perdet(&cauchy)?;
    let rhs = det(&squared)?;
    Ok(rel(lhs, rhs, 0.0))
}

fn mccullough_shen_check(d: &mut Draw, q: f64, r: f64, perturb: bool) -> Result<f64> {
    let nome = Nome::new(q)?;
    let k = d.rng.random_range(1..=3);
    let mut pts = d.separated(k + 2, q);
    let (z, w) = (pts.pop().unwrap(), pts.pop().unwrap());
    let base = |a: Complex, b: Complex| szego_annulus_with(&nome, a, b, Complex::new(r, 0.0));
    let conditioned = conditional_kernel(base, &pts, z, w)?;
    let anchors = AnchorList::new(pts, r, q)?;
    let mut closed = mccullough_shen(z, w, &anchors, q)?;
    if perturb {
        closed = -closed;
    }
    let scale = (base(z, z)?.re * base(w, w)?.re).sqrt();
    Ok(rel(conditioned, closed, scale))
}

// (i)   S(q²z, w; r) = −S(z, w; r)/r
// (ii)  S(1/z, w; r) = −S(z, 1/w; 1/r)
// (iii) S(z, w; q²r) = S(z, w; r)/(z w̄)
fn functional_equations(d: &mut Draw, q: f64, r: f64, _: bool) -> Result<f64> {
    let nome = Nome::new(q)?;
    let p = nome.p();
    let pts = d.separated(2, q);
    let (z, w) = (pts[0], pts[1]);
    let rc = Complex::new(r, 0.0);
    let s = |a: Complex, b: Complex, t: Complex| szego_annulus_with(&nome, a, b, t);
    let base = s(z, w, rc)?;
    let one = rel(s(z * p, w, rc)?, -base / r, 0.0);
    let two = rel(s(z.inv(), w, rc)?, -s(z, w.inv(), rc.inv())?, 0.0);
    let three = rel(s(z, w, rc * p)?, base / (z * w.conj()), 0.0);
    Ok(one.max(two).max(three))
}

// κ(1/r) = κ(q²r) = κ(q²/r) = κ(r)
fn kappa_symmetries(d: &mut Draw, q: f64, _r: f64, _: bool) -> Result<f64> {
    let r = d.modulus(q, 1.0);
    let p = q * q;
    let k = kappa(r, q)?;
    // κ is a quadratic in ℘ whose individual terms are of order e₁²; near
    // its sign change only that scale is meaningful.
    let e1 = crate::elliptic::special_values(q)?.e1;
    let scale = k.abs().max(e1 * e1);
    let worst = [1.0 / r, p * r, p / r]
        .iter()
        .map(|&t| kappa(t, q).map(|v| (v - k).abs() / scale))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(worst)
}

// S(z, w; q)² = K(z, w) + a/(z w̄)
fn szego_square(d: &mut Draw, q: f64, _r: f64, _: bool) -> Result<f64> {
    let nome = Nome::new(q)?;
    let pts = d.separated(2, q);
    let (z, w) = (pts[0], pts[1]);
    let s = szego_annulus_with(&nome, z, w, Complex::new(q, 0.0))?;
    let k = bergman(z, w, Domain::Annulus { q })?;
    let a = sk_constant(q)?;
    let rhs = k + a / (z * w.conj());
    Ok(rel(s * s, rhs, k.norm()))
}

// Det_{2,3}[a_{i₂i₁} b_{i₂i₃}] = per A · det B
fn hyperdet_perdet(d: &mut Draw, _q: f64, _r: f64, _: bool) -> Result<f64> {
    let n = d.rng.random_range(1..=5);
    let a = d.matrix(n);
    let b = d.matrix(n);
    let t: CubicTensor = perdet_tensor(&a, &b)?;
    let lhs = hyperdet23(&t)?;
    let pa = per(&a)?;
    let db = det(&b)?;
    let rhs = pa * db;
    // |per A| ≤ ∏ row ℓ¹ norms, |det B| ≤ ∏ row ℓ² norms (Hadamard).
    let scale = (0..n)
        .map(|i| a.row(i).iter().map(|c| c.norm()).sum::<f64>() * b.row(i).iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt())
        .product::<f64>();
    Ok(rel(lhs, rhs, scale))
}

// product form of θ against the Laurent (triple-product) series
fn triple_product(d: &mut Draw, q: f64, _r: f64, _: bool) -> Result<f64> {
    let nome = Nome::new(q)?;
    let z = d.point(q, 1.0 / q);
    Ok(rel(nome.theta(z)?, nome.theta_triple_product(z)?, 0.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_suite_passes() {
        let report = run_suite(&SuiteConfig::default()).unwrap();
        for r in &report.identities {
            assert!(r.passed, "{} residual {:e}", r.name, r.max_residual);
            assert!(r.instances >= 100);
        }
        assert!(report.passed);
    }

    #[test]
    fn perturbation_is_caught() {
        let cfg = SuiteConfig { perturb_mccullough_shen: true, instances: 10, ..SuiteConfig::default() };
        let report = run_suite(&cfg).unwrap();
        assert!(!report.passed);
        assert_eq!(report.first_failure().unwrap().name, "mccullough-shen");
    }

    #[test]
    fn rejects_bad_parameters() {
        let cfg = SuiteConfig { q_values: vec![1.2], ..SuiteConfig::default() };
        assert!(run_suite(&cfg).is_err());
        let cfg = SuiteConfig { r_values: vec![], ..SuiteConfig::default() };
        assert!(run_suite(&cfg).is_err());
    }
}
