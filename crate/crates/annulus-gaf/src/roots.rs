//! Roots of complex polynomials.
//!
//! Two global solvers are provided: eigenvalues of the companion matrix
//! (robust, `O(n³)`) and the Aberth–Ehrlich simultaneous iteration started
//! from the Newton polygon of the coefficient moduli (`O(n²)` per sweep).
//! [`polynomial_roots`] runs Aberth–Ehrlich and falls back to the companion
//! matrix for moderate degrees should the iteration fail to converge.  On
//! the badly scaled coefficient vectors produced by truncated Laurent series
//! the companion route is both slower and markedly less accurate, so it is
//! not the first choice at any degree.
//!
//! Coefficients are always given in ascending order: `c[k]` multiplies `zᵏ`.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::Complex;

/// Largest degree for which the companion-matrix fallback is attempted.
pub const COMPANION_MAX_DEGREE: usize = 400;
const ABERTH_MAX_SWEEPS: usize = 400;

/// Which global solver to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Companion,
    Aberth,
}

/// Drops zero leading coefficients and returns the multiplicity of the root
/// at the origin together with the remaining coefficients.
fn normalise(coeffs: &[Complex]) -> Result<(usize, &[Complex])> {
    let top = coeffs
        .iter()
        .rposition(|c| *c != Complex::new(0.0, 0.0))
        .ok_or_else(|| Error::InvalidParameter("the zero polynomial has no isolated roots".into()))?;
    let low = coeffs.iter().position(|c| *c != Complex::new(0.0, 0.0)).unwrap_or(0);
    if coeffs[..=top].iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
        return Err(Error::InvalidParameter("non-finite polynomial coefficient".into()));
    }
    Ok((low, &coeffs[low..=top]))
}

/// All roots, counted with multiplicity.
pub fn polynomial_roots(coeffs: &[Complex]) -> Result<Vec<Complex>> {
    match roots_with(coeffs, Method::Aberth) {
        Err(Error::NonConvergedRoot { .. }) if normalise(coeffs)?.1.len() <= COMPANION_MAX_DEGREE + 1 => {
            roots_with(coeffs, Method::Companion)
        }
        other => other,
    }
}

pub fn roots_with(coeffs: &[Complex], method: Method) -> Result<Vec<Complex>> {
    let (at_origin, c) = normalise(coeffs)?;
    let mut roots = vec![Complex::new(0.0, 0.0); at_origin];
    if c.len() > 1 {
        roots.extend(match method {
            Method::Companion => companion_roots(c)?,
            Method::Aberth => aberth_roots(c)?,
        });
    }
    Ok(roots)
}

fn companion_roots(c: &[Complex]) -> Result<Vec<Complex>> {
    let n = c.len() - 1;
    let lead = c[n];
    let mut m = DMatrix::<Complex>::zeros(n, n);
    for i in 1..n {
        m[(i, i - 1)] = Complex::new(1.0, 0.0);
    }
    for i in 0..n {
        m[(i, n - 1)] = -c[i] / lead;
    }
    m.schur()
        .eigenvalues()
        .map(|v| v.iter().copied().collect())
        .ok_or_else(|| Error::InvalidParameter("Schur decomposition did not converge".into()))
}

/// Horner evaluation of `p`, `p'` and the running bound `Σ|c_k||z|ᵏ`,
/// switching to the reversed polynomial outside the unit disk so that no
/// power of `|z|` above one is formed.  Returns the Newton correction
/// `p/p'` and whether `|p|` is at the rounding level.
fn newton_step(c: &[Complex], z: Complex) -> (Complex, bool) {
    let n = c.len() - 1;
    let eps = f64::EPSILON;
    if z.norm() <= 1.0 {
        let mut p = c[n];
        let mut dp = Complex::new(0.0, 0.0);
        let mut bound = c[n].norm();
        let az = z.norm();
        for k in (0..n).rev() {
            dp = dp * z + p;
            p = p * z + c[k];
            bound = bound * az + c[k].norm();
        }
        (p / dp, p.norm() <= 4.0 * (n as f64) * eps * bound)
    } else {
        // p(z) = zⁿ R(w), w = 1/z, R(w) = Σ c_k w^{n−k}; p/p' = 1/(w(n − wR'/R)).
        let w = z.inv();
        let mut r = c[0];
        let mut dr = Complex::new(0.0, 0.0);
        let mut bound = c[0].norm();
        let aw = w.norm();
        for ck in &c[1..] {
            dr = dr * w + r;
            r = r * w + ck;
            bound = bound * aw + ck.norm();
        }
        let step = (w * (Complex::new(n as f64, 0.0) - w * dr / r)).inv();
        (step, r.norm() <= 4.0 * (n as f64) * eps * bound)
    }
}

/// Starting points on circles whose radii are read off the upper convex
/// hull of `(k, log|c_k|)`.
pub fn newton_polygon_guesses(c: &[Complex]) -> Vec<Complex> {
    let n = c.len() - 1;
    let logs: Vec<f64> = c.iter().map(|v| if v.norm() > 0.0 { v.norm().ln() } else { f64::NEG_INFINITY }).collect();
    let mut hull: Vec<usize> = Vec::new();
    for k in 0..=n {
        if logs[k] == f64::NEG_INFINITY {
            continue;
        }
        while hull.len() >= 2 {
            let (i, j) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            // Drop j when it lies on or below the chord from i to k.
            let cross = (j - i) as f64 * (logs[k] - logs[i]) - (k - i) as f64 * (logs[j] - logs[i]);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(k);
    }
    let mut guesses = Vec::with_capacity(n);
    for pair in hull.windows(2) {
        let (i, j) = (pair[0], pair[1]);
        let count = j - i;
        let radius = ((logs[i] - logs[j]) / count as f64).exp();
        let offset = 2.0 * PI * i as f64 / n as f64 + 0.7;
        for m in 0..count {
            guesses.push(Complex::from_polar(radius, 2.0 * PI * m as f64 / count as f64 + offset));
        }
    }
    guesses
}

fn aberth_roots(c: &[Complex]) -> Result<Vec<Complex>> {
    let n = c.len() - 1;
    let mut z = newton_polygon_guesses(c);
    let mut done = vec![false; n];
    let mut remaining = n;
    for _ in 0..ABERTH_MAX_SWEEPS {
        for i in 0..n {
            if done[i] {
                continue;
            }
            let (ratio, small) = newton_step(c, z[i]);
            if small {
                done[i] = true;
                remaining -= 1;
                continue;
            }
            let zi = z[i];
            let repulsion: Complex = z
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &zj)| (zi - zj).inv())
                .sum();
            let step = ratio / (Complex::new(1.0, 0.0) - ratio * repulsion);
            z[i] = zi - step;
            if step.norm() <= f64::EPSILON * z[i].norm() {
                done[i] = true;
                remaining -= 1;
            }
        }
        if remaining == 0 {
            return Ok(z);
        }
    }
    let worst = (0..n).find(|&i| !done[i]).unwrap_or(0);
    let (ratio, _) = newton_step(c, z[worst]);
    Err(Error::NonConvergedRoot { re: z[worst].re, im: z[worst].im, residual: ratio.norm() })
}

/// Evaluates the polynomial at `z` (ascending coefficients).
pub fn horner(c: &[Complex], z: Complex) -> Complex {
    c.iter().rev().fold(Complex::new(0.0, 0.0), |acc, ck| acc * z + ck)
}
