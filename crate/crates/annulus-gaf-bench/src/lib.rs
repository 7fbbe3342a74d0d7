//! Shared fixtures for the benchmarks in `benches/`.

use annulus_gaf::Complex;

/// A deterministic spread of points inside the annulus `q < |z| < 1`.
pub fn annulus_points(q: f64, n: usize) -> Vec<Complex> {
    (0..n)
        .map(|k| {
            let t = (k as f64 + 0.5) / n as f64;
            let radius = q + (1.0 - q) * (0.1 + 0.8 * t);
            Complex::from_polar(radius, 2.399_963_229_728_653 * k as f64)
        })
        .collect()
}
