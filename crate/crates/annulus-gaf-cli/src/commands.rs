use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};

use annulus_gaf::gaf::{self, ConditionalCheck, DensityConfig, DensityEstimate, Model, PairConfig, PairEstimate, Truncation};
use annulus_gaf::identities::{self, SuiteConfig};
use annulus_gaf::pointprocess as pp;
use annulus_gaf::{kernels, Complex, Error};
use serde::Serialize;

use crate::output::{sink, Format, Table};
use crate::Command;

/// Failure of a command, classified by exit status.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or parameters outside a command's domain (exit 2).
    Usage(String),
    /// A check ran and failed (exit 1).
    Validation(String),
    /// Anything else that stopped the computation (exit 1).
    Runtime(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Validation(_) | CliError::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "{m}"),
            CliError::Validation(m) => write!(f, "validation failed: {m}"),
            CliError::Runtime(e) => write!(f, "{e:#}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(_)
            | Error::UnsupportedModulus { .. }
            | Error::OutOfAnnulus { .. }
            | Error::OutOfDisk { .. }
            | Error::OutOfRange { .. }
            | Error::DimensionMismatch(_) => CliError::Usage(e.to_string()),
            other => CliError::Runtime(other.into()),
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Runtime(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.into())
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

/// Comment line recorded at the top of every artefact: crate version, the
/// command line (minus the output path, so that reruns to different files
/// stay byte-identical) and the seed.
fn provenance(seed: Option<u64>) -> String {
    let mut args = Vec::new();
    let mut skip = false;
    for a in std::env::args().skip(1) {
        if skip {
            skip = false;
            continue;
        }
        if a == "--out" {
            skip = true;
            continue;
        }
        if a.starts_with("--out=") {
            continue;
        }
        args.push(a);
    }
    let seed = seed.map_or_else(|| "none".to_string(), |s| s.to_string());
    format!("annulus-gaf {} | command: {} | seed: {seed}", env!("CARGO_PKG_VERSION"), args.join(" "))
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Density { q, r, grid, output } => density(q, r, grid, output.out.as_deref(), output.format),
        Command::Gvee { q, r, grid, output } => gvee(q, &r, grid, output.out.as_deref(), output.format),
        Command::R0Curve { q, grid, output } => r0_curve(q, grid, output.out.as_deref(), output.format),
        Command::IdentitySuite { q, r, seed, samples, out, perturb_mccullough_shen } => {
            identity_suite(SuiteConfig { q_values: q, r_values: r, seed, instances: samples, perturb_mccullough_shen }, out)
        }
        Command::McVerify { q, r, samples, seed, grid, margin, modes, out } => {
            mc_verify(McArgs { q, r, samples, seed, bins: grid, margin, modes }, out.as_deref())
        }
    }
}

fn check_q(q: f64, allow_zero: bool) -> Result<()> {
    let ok = if allow_zero { (0.0..1.0).contains(&q) } else { q > 0.0 && q < 1.0 };
    if !ok {
        return Err(usage(format!("--q {q} is outside {}", if allow_zero { "[0, 1)" } else { "(0, 1)" })));
    }
    Ok(())
}

fn check_r(r: f64) -> Result<()> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(usage(format!("--r {r} must be positive")));
    }
    Ok(())
}

fn check_grid(n: usize) -> Result<()> {
    if n == 0 || n > 1_000_000 {
        return Err(usage(format!("--grid {n} must be between 1 and 10⁶")));
    }
    Ok(())
}

fn density(q: f64, r: f64, n: usize, out: Option<&Path>, format: Format) -> Result<()> {
    check_q(q, true)?;
    check_r(r)?;
    check_grid(n)?;
    let mut table = Table::new(&["abs_z", "rho1"]);
    for k in 0..n {
        // The disk grid starts at the origin; the annulus grid is open at
        // both circles, where ρ¹ blows up.
        let m = if q == 0.0 { k as f64 / n as f64 } else { q + (1.0 - q) * (k + 1) as f64 / (n + 1) as f64 };
        table.push(vec![m, pp::rho1(m, r, q)?]);
    }
    table.write(&mut *sink(out)?, format, &provenance(None))?;
    Ok(())
}

fn gvee(q: f64, rs: &[f64], n: usize, out: Option<&Path>, format: Format) -> Result<()> {
    check_q(q, false)?;
    check_grid(n)?;
    if rs.is_empty() {
        return Err(usage("--r needs at least one weight"));
    }
    for &r in rs {
        check_r(r)?;
    }
    let mut table = Table::new(&["x", "r", "G_vee"]);
    let mut sorted = rs.to_vec();
    sorted.sort_by(f64::total_cmp);
    for &r in &sorted {
        for k in 0..n {
            let x = q + (1.0 - q) * (k + 1) as f64 / (n + 1) as f64;
            table.push(vec![x, r, pp::g_vee(x, r, q)?]);
        }
    }
    table.write(&mut *sink(out)?, format, &provenance(None))?;
    Ok(())
}

fn r0_curve(qs: Option<Vec<f64>>, n: usize, out: Option<&Path>, format: Format) -> Result<()> {
    let mut qs = match qs {
        Some(qs) => qs,
        None => {
            check_grid(n)?;
            (1..=n).map(|k| 0.95 * k as f64 / n as f64).collect()
        }
    };
    if qs.is_empty() {
        return Err(usage("--q needs at least one modulus"));
    }
    if let Some(q) = qs.iter().find(|&&q| !(q > 0.0 && q <= 0.95)) {
        return Err(usage(format!("--q {q} is outside (0, 0.95]")));
    }
    qs.sort_by(f64::total_cmp);
    let rc = pp::rc_closed_form();
    let c = pp::r0_quadratic_coefficient();
    let mut table = Table::new(&["q", "r0", "rc_parabola", "one_minus_half"]);
    for q in qs {
        let point = pp::r0(q)?;
        table.push(vec![q, point.r0, rc + c * q * q, 1.0 - (1.0 - q) / 2.0]);
    }
    table.write(&mut *sink(out)?, format, &provenance(None))?;
    Ok(())
}

fn identity_suite(cfg: SuiteConfig, out: Option<PathBuf>) -> Result<()> {
    if cfg.instances == 0 {
        return Err(usage("--samples must be positive"));
    }
    let report = identities::run_suite(&cfg)?;
    let mut w = sink(out.as_deref())?;
    serde_json::to_writer_pretty(&mut w, &report).map_err(anyhow::Error::from)?;
    writeln!(w)?;
    w.flush()?;
    match report.first_failure() {
        None => Ok(()),
        Some(f) => Err(CliError::Validation(format!(
            "identity \"{}\" has residual {:e} ≥ {:e}",
            f.name, f.max_residual, f.threshold
        ))),
    }
}

struct McArgs {
    q: f64,
    r: f64,
    samples: usize,
    seed: u64,
    bins: usize,
    margin: Option<f64>,
    modes: Option<usize>,
}

/// Statistics beyond this many standard errors fail the run.
const SIGMA_LIMIT: f64 = 5.0;

#[derive(Serialize)]
struct McSummary {
    provenance: String,
    q: f64,
    r: f64,
    samples: usize,
    seed: u64,
    margin: f64,
    sigma_limit: f64,
    density: DensityEstimate,
    density_max_abs_z: f64,
    conditional: Option<ConditionalCheck>,
    pair: Option<PairSummary>,
    passed: bool,
}

#[derive(Serialize)]
struct PairSummary {
    config: PairConfig,
    estimate: Option<PairEstimate>,
    /// Deviation of the estimate from the exact cell ratio, in standard errors.
    z_score: Option<f64>,
    skipped: Option<String>,
}

fn mc_verify(a: McArgs, out: Option<&Path>) -> Result<()> {
    check_q(a.q, true)?;
    check_r(a.r)?;
    check_grid(a.bins)?;
    if a.samples < gaf::MIN_SAMPLES {
        return Err(usage(format!("--samples must be at least {}", gaf::MIN_SAMPLES)));
    }
    let model = if a.q == 0.0 { Model::disk(a.r)? } else { Model::annulus(a.q, a.r)? };
    let margin = a.margin.unwrap_or_else(|| 0.1f64.min((1.0 - a.q) / 8.0));
    let truncation = match a.modes {
        Some(m) if m > 0 => Some(Truncation { negative: if a.q == 0.0 { 0 } else { m }, positive: m }),
        Some(_) => return Err(usage("--modes must be positive")),
        None => None,
    };
    // Validate the window before sampling.
    Truncation::for_margin(&model, margin)?;

    let density = gaf::mc_density(&DensityConfig { model, margin, bins: a.bins, samples: a.samples, seed: a.seed, truncation })?;
    let density_max_abs_z = density.max_abs_z();
    let mut passed = density_max_abs_z < SIGMA_LIMIT;

    let (conditional, pair) = if a.q > 0.0 {
        let (conditional, cond_ok) = conditional_check(a.q, a.r, a.samples, a.seed)?;
        let (pair, pair_ok) = pair_check(a.q, a.r, margin, a.samples, a.seed, truncation)?;
        passed &= cond_ok && pair_ok;
        (Some(conditional), Some(pair))
    } else {
        (None, None)
    };

    let prov = provenance(Some(a.seed));
    let mut table = Table::new(&["lo", "hi", "estimate", "std_error", "analytic", "z_score"]);
    for b in &density.bins {
        table.push(vec![b.lo, b.hi, b.estimate.value, b.estimate.std_error, b.analytic, b.z_score()]);
    }
    table.write(&mut *sink(out)?, Format::Csv, &prov)?;

    let summary = McSummary {
        provenance: prov,
        q: a.q,
        r: a.r,
        samples: a.samples,
        seed: a.seed,
        margin,
        sigma_limit: SIGMA_LIMIT,
        density,
        density_max_abs_z,
        conditional,
        pair,
        passed,
    };
    let json = serde_json::to_string_pretty(&summary).map_err(anyhow::Error::from)?;
    if out.is_some() {
        println!("{json}");
    } else {
        eprintln!("{json}");
    }
    if passed {
        Ok(())
    } else {
        Err(CliError::Validation(format!("a Monte Carlo statistic exceeds {SIGMA_LIMIT}σ")))
    }
}

/// One anchor at the geometric mean radius, probes on either side of it.
fn conditional_check(q: f64, r: f64, samples: usize, seed: u64) -> Result<(ConditionalCheck, bool)> {
    let mid = q.sqrt();
    let alpha = Complex::from_polar(mid, 0.4);
    let near_inner = q + 0.3 * (mid - q);
    let near_outer = mid + 0.6 * (1.0 - mid);
    let probes = [
        (Complex::from_polar(near_outer, 1.9), Complex::from_polar(near_inner, -2.2)),
        (Complex::from_polar(mid, 2.5), Complex::from_polar(mid, 2.5)),
    ];
    let check = gaf::conditional_covariance_check(q, r, &[alpha], &probes, samples, seed.wrapping_add(1))?;
    // The anchor value vanishes identically; compare with the size of X.
    let scale = kernels::szego_annulus(alpha, alpha, r, q)?.re.sqrt();
    let ok = check.max_z_score < SIGMA_LIMIT && check.anchor_max < 1e-8 * scale.max(1.0);
    Ok((check, ok))
}

/// Pair cell at the middle of the window, compared with its exact value.
fn pair_check(q: f64, r: f64, margin: f64, samples: usize, seed: u64, truncation: Option<Truncation>) -> Result<(PairSummary, bool)> {
    let (inner, outer) = (q + margin, 1.0 - margin);
    let eps = (0.02f64).min(0.25 * (outer - inner));
    let config = PairConfig {
        q,
        r,
        x: 0.5 * (inner + outer),
        radial_half_width: eps,
        angular_half_width: 0.2,
        margin,
        samples: samples.min(1000),
        seed: seed.wrapping_add(2),
        truncation,
    };
    match gaf::mc_pair_statistic(&config) {
        Ok(est) => {
            let z = est.estimate.z_score(est.analytic_cell);
            let ok = z.abs() < SIGMA_LIMIT;
            Ok((PairSummary { config, estimate: Some(est), z_score: Some(z), skipped: None }, ok))
        }
        Err(e @ Error::InsufficientStatistics { .. }) => {
            Ok((PairSummary { config, estimate: None, z_score: None, skipped: Some(e.to_string()) }, true))
        }
        Err(e) => Err(e.into()),
    }
}
