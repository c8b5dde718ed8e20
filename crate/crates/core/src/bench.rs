//! Verification and timing harness behind the `s4-bench` binary.
//!
//! Every mode produces a [`BenchReport`]: one row per `(method, n, l)` case
//! with the median and interquartile range of wall time over `repeats` runs
//! (a warm-up run is discarded), peak auxiliary bytes from the counting
//! allocator, and the error against the Krylov oracle where one was run.

use std::fmt::Write as _;
use std::time::Instant;

use serde::Serialize;

use crate::alloc;
use crate::cauchy::{self, CauchyNodes};
use crate::diagnostics::{self, GrowthReport};
use crate::discretize::{bilinear_discretize_dense, dplr_discretize, run_dense, run_recurrence, StepScratch};
use crate::hippo::{self, HippoFamily};
use crate::kernel::{self, ConvKernel, NodeGrid};
use crate::layer;
use crate::linalg::{rel_linf_err, rel_linf_err_c};
use crate::ssm::{ContinuousSsm, DplrSpec};
use crate::{CMat, Error, Result, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Kernel,
    Step,
    Verify,
    Diagnose,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Table,
    Json,
    Csv,
}

/// Estimated complex multiply-adds of the naive Krylov kernel above which
/// a run is refused.
pub const DEFAULT_BUDGET: f64 = 2e10;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchConfig {
    pub mode: Mode,
    pub n: Vec<usize>,
    pub l: Vec<usize>,
    pub h: usize,
    /// `None` means every family (verify) or LegS (other modes).
    pub family: Option<HippoFamily>,
    pub delta: f64,
    pub repeats: usize,
    pub seed: u64,
    pub format: OutputFormat,
    pub budget: f64,
    /// Relative perturbation applied to fast kernels before they are
    /// checked. Only for exercising the failure path.
    #[serde(skip_serializing_if = "is_zero")]
    pub kernel_perturbation: f64,
}

fn is_zero(x: &f64) -> bool {
    *x == 0.0
}

impl BenchConfig {
    /// Defaults for `mode`.
    pub fn new(mode: Mode) -> Self {
        let (n, l) = match mode {
            Mode::Kernel => (vec![64], vec![1024, 2048, 4096, 8192, 16384]),
            Mode::Step => (vec![64, 128, 256, 512], vec![4096]),
            Mode::Verify => (vec![4, 8, 16], vec![15, 64]),
            Mode::Diagnose => (vec![12, 24, 36, 48], vec![64]),
        };
        Self {
            mode,
            n,
            l,
            h: 4,
            family: None,
            delta: 1e-2,
            repeats: 5,
            seed: 0,
            format: OutputFormat::Table,
            budget: DEFAULT_BUDGET,
            kernel_perturbation: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.repeats < 3 {
            return Err(Error::InvalidParameter(format!("repeats must be at least 3, got {}", self.repeats)));
        }
        if self.n.is_empty() || self.l.is_empty() {
            return Err(Error::InvalidParameter("size lists must be non-empty".into()));
        }
        if let Some(&z) = self.n.iter().chain(&self.l).find(|&&v| v == 0) {
            return Err(Error::InvalidSize { what: "benchmark size", value: z });
        }
        if self.h == 0 {
            return Err(Error::InvalidSize { what: "feature count", value: 0 });
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(Error::InvalidParameter(format!("delta must be positive, got {}", self.delta)));
        }
        Ok(())
    }

    fn families(&self) -> Vec<HippoFamily> {
        match (self.family, self.mode) {
            (Some(f), _) => vec![f],
            (None, Mode::Verify) => HippoFamily::ALL.to_vec(),
            (None, _) => vec![HippoFamily::LegS],
        }
    }
}

/// One report row. Field order is the CSV column order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CaseRow {
    pub method: String,
    pub n: usize,
    pub l: usize,
    pub time_ms_median: f64,
    pub time_ms_iqr: f64,
    pub peak_aux_bytes: usize,
    pub max_rel_err: Option<f64>,
}

pub const CSV_HEADER: [&str; 7] = ["method", "n", "l", "time_ms_median", "time_ms_iqr", "peak_aux_bytes", "max_rel_err"];

/// Outcome of one verify-mode check.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub suite: String,
    pub family: HippoFamily,
    pub n: usize,
    pub l: usize,
    pub error: f64,
    pub tolerance: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct BenchReport {
    pub config: BenchConfig,
    pub cases: Vec<CaseRow>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<CheckResult>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<GrowthReport>,
    /// Fitted `log2` growth per unit `n` (diagnose) or log-log time slope
    /// of the fast kernel versus `L` (kernel).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub slope: Option<f64>,
}

impl BenchReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// Check with the largest `error / tolerance`.
    pub fn worst_check(&self) -> Option<&CheckResult> {
        self.checks
            .iter()
            .max_by(|a, b| (a.error / a.tolerance).total_cmp(&(b.error / b.tolerance)))
    }

    pub fn render(&self, format: OutputFormat) -> Result<String> {
        match format {
            OutputFormat::Json => Ok(serde_json::to_string_pretty(self)? + "\n"),
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Table => Ok(self.to_table()),
        }
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(CSV_HEADER).map_err(csv_err)?;
        for row in &self.cases {
            w.write_record([
                row.method.clone(),
                row.n.to_string(),
                row.l.to_string(),
                format!("{:.6}", row.time_ms_median),
                format!("{:.6}", row.time_ms_iqr),
                row.peak_aux_bytes.to_string(),
                row.max_rel_err.map(|e| format!("{e:.6e}")).unwrap_or_default(),
            ])
            .map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Format(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<28} {:>6} {:>7} {:>14} {:>12} {:>14} {:>12}",
            "method", "n", "l", "median_ms", "iqr_ms", "peak_aux_B", "max_rel_err"
        );
        for r in &self.cases {
            let err = r.max_rel_err.map(|e| format!("{e:.3e}")).unwrap_or_else(|| "-".into());
            let _ = writeln!(
                s,
                "{:<28} {:>6} {:>7} {:>14.4} {:>12.4} {:>14} {:>12}",
                r.method, r.n, r.l, r.time_ms_median, r.time_ms_iqr, r.peak_aux_bytes, err
            );
        }
        for d in &self.diagnostics {
            let _ = writeln!(
                s,
                "{:?} n={} l={} log2(max)={:.2} exceeds 2^53: {} max={}",
                d.context,
                d.n,
                d.l.map(|l| l.to_string()).unwrap_or_else(|| "-".into()),
                d.log2_max,
                d.threshold_exceeded,
                d.max_entry
            );
        }
        if let Some(slope) = self.slope {
            let _ = writeln!(s, "slope: {slope:.4}");
        }
        if !self.checks.is_empty() {
            let failed = self.checks.iter().filter(|c| !c.passed).count();
            let _ = writeln!(s, "checks: {} run, {} failed", self.checks.len(), failed);
        }
        s
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

/// Least-squares slope of `y` against `x`.
pub fn fit_slope(pts: &[(f64, f64)]) -> f64 {
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Linear-interpolated quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Median and interquartile range in milliseconds of `repeats` timed runs
/// after one discarded warm-up.
pub fn time_repeats<T>(repeats: usize, mut f: impl FnMut() -> Result<T>) -> Result<(f64, f64)> {
    f()?;
    let mut ms = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let t = Instant::now();
        std::hint::black_box(f()?);
        ms.push(t.elapsed().as_secs_f64() * 1e3);
    }
    ms.sort_by(f64::total_cmp);
    Ok((quantile(&ms, 0.5), quantile(&ms, 0.75) - quantile(&ms, 0.25)))
}

/// The HiPPO system used by the harness: default `B`, seeded normal `C`.
pub fn hippo_system(family: HippoFamily, n: usize, seed: u64) -> Result<DplrSpec> {
    let d = hippo::nplr_decompose(family, n)?;
    d.dplr_from_real(
        hippo::default_b_vector(family, n).as_slice(),
        &crate::random::normal_vec(n, seed ^ (n as u64).rotate_left(32)),
    )
}

fn perturb(k: ConvKernel, rel: f64) -> Result<ConvKernel> {
    if rel == 0.0 {
        return Ok(k);
    }
    let delta = k.delta();
    ConvKernel::new(k.into_values().into_iter().map(|v| v * (1.0 + rel)).collect(), delta)
}

fn case(method: &str, n: usize, l: usize, timing: (f64, f64), bytes: usize, err: Option<f64>) -> CaseRow {
    CaseRow {
        method: method.into(),
        n,
        l,
        time_ms_median: timing.0,
        time_ms_iqr: timing.1,
        peak_aux_bytes: bytes,
        max_rel_err: err,
    }
}

pub fn run_bench(config: &BenchConfig) -> Result<BenchReport> {
    config.validate()?;
    let mut report = BenchReport {
        config: config.clone(),
        cases: Vec::new(),
        checks: Vec::new(),
        diagnostics: Vec::new(),
        slope: None,
    };
    match config.mode {
        Mode::Kernel => bench_kernel(config, &mut report)?,
        Mode::Step => bench_step(config, &mut report)?,
        Mode::Verify => verify(config, &mut report)?,
        Mode::Diagnose => diagnose(config, &mut report)?,
    }
    Ok(report)
}

fn check_budget(config: &BenchConfig) -> Result<()> {
    for &n in &config.n {
        for &l in &config.l {
            let cost = (n * n) as f64 * l as f64 * (config.repeats + 1) as f64;
            if cost > config.budget {
                return Err(Error::InvalidParameter(format!(
                    "naive oracle at n={n}, l={l} needs about {cost:.2e} multiply-adds, over the budget of {:.2e}",
                    config.budget
                )));
            }
        }
    }
    Ok(())
}

fn bench_kernel(config: &BenchConfig, report: &mut BenchReport) -> Result<()> {
    check_budget(config)?;
    let delta = config.delta;
    let mut slope_pts = Vec::new();
    for family in config.families() {
        for &n in &config.n {
            let spec = hippo_system(family, n, config.seed)?;
            let dense = bilinear_discretize_dense(&spec.to_continuous(0.0)?, delta)?;
            let disc = dplr_discretize(&spec, delta)?;
            for &l in &config.l {
                let ct = kernel::c_tilde_from_c(&spec, delta, l)?;
                let (oracle, kry_bytes) = alloc::measure(|| kernel::krylov_kernel_naive(&dense, l));
                let oracle = oracle?;
                let kry_t = time_repeats(config.repeats, || kernel::krylov_kernel_naive(&dense, l))?;

                let (fast, fast_bytes) = alloc::measure(|| kernel::s4_kernel(&spec, delta, l, &ct));
                let fast = perturb(fast?, config.kernel_perturbation)?;
                let fast_t = time_repeats(config.repeats, || kernel::s4_kernel(&spec, delta, l, &ct))?;

                let mut impulse = vec![0.0; l];
                impulse[0] = 1.0;
                let (rec, rec_bytes) = alloc::measure(|| run_recurrence(&disc, &impulse));
                let rec = rec?;
                let rec_t = time_repeats(config.repeats, || run_recurrence(&disc, &impulse))?;

                report.cases.push(case("krylov_naive", n, l, kry_t, kry_bytes.peak_aux_bytes, Some(0.0)));
                report.cases.push(case(
                    "s4_kernel",
                    n,
                    l,
                    fast_t,
                    fast_bytes.peak_aux_bytes,
                    Some(rel_linf_err(fast.values(), oracle.values())),
                ));
                report.cases.push(case(
                    "dplr_recurrence",
                    n,
                    l,
                    rec_t,
                    rec_bytes.peak_aux_bytes,
                    Some(rel_linf_err(&rec, oracle.values())),
                ));
                if config.n.len() == 1 {
                    slope_pts.push(((l as f64).ln(), fast_t.0.ln()));
                }
            }
        }
    }
    if slope_pts.len() >= 2 && config.families().len() == 1 {
        report.slope = Some(fit_slope(&slope_pts));
    }
    Ok(())
}

fn bench_step(config: &BenchConfig, report: &mut BenchReport) -> Result<()> {
    let delta = config.delta;
    for family in config.families() {
        for &n in &config.n {
            let spec = hippo_system(family, n, config.seed)?;
            let disc = dplr_discretize(&spec, delta)?;
            let dense = bilinear_discretize_dense(&spec.to_continuous(0.0)?, delta)?;
            for &l in &config.l {
                let u = crate::random::normal_vec(l, config.seed.wrapping_add(1));
                let fast = run_recurrence(&disc, &u)?;
                let slow = run_dense(&dense, &u)?;
                let err = rel_linf_err(&fast, &slow);
                let mut x = vec![C64::new(0.0, 0.0); n];
                let mut scratch = StepScratch::default();
                let (_, bytes) = alloc::measure(|| {
                    for &uk in &u {
                        disc.step_in_place(&mut x, uk, &mut scratch);
                    }
                });
                let t = time_repeats(config.repeats, || {
                    x.fill(C64::new(0.0, 0.0));
                    for &uk in &u {
                        std::hint::black_box(disc.step_in_place(&mut x, uk, &mut scratch));
                    }
                    Ok(())
                })?;
                report.cases.push(case("dplr_step", n, l, t, bytes.peak_aux_bytes, Some(err)));
                let t = time_repeats(config.repeats, || run_dense(&dense, &u))?;
                report.cases.push(case("dense_step", n, l, t, 0, Some(0.0)));
            }
        }
        // layer rows at the smallest n
        let n = *config.n.iter().min().expect("validated non-empty");
        let params = layer::layer_init(config.h, n, family, config.seed)?;
        for &l in &config.l {
            let u = ndarray::Array3::from_shape_vec((1, l, config.h), crate::random::normal_vec(l * config.h, config.seed))
                .map_err(|e| Error::Format(e.to_string()))?;
            let conv = layer::layer_forward_conv(&params, &u)?;
            let rec = layer::layer_forward_recurrent(&params, &u)?;
            let err = rel_linf_err(rec.as_slice().unwrap_or(&[]), conv.as_slice().unwrap_or(&[]));
            let (_, b_conv) = alloc::measure(|| layer::layer_forward_conv(&params, &u));
            let t = time_repeats(config.repeats, || layer::layer_forward_conv(&params, &u))?;
            report.cases.push(case("layer_conv", n, l, t, b_conv.peak_aux_bytes, Some(0.0)));
            let (_, b_rec) = alloc::measure(|| layer::layer_forward_recurrent(&params, &u));
            let t = time_repeats(config.repeats, || layer::layer_forward_recurrent(&params, &u))?;
            report.cases.push(case("layer_recurrent", n, l, t, b_rec.peak_aux_bytes, Some(err)));
        }
    }
    Ok(())
}

fn diagnose(config: &BenchConfig, report: &mut BenchReport) -> Result<()> {
    let mut growth = Vec::new();
    for &n in &config.n {
        let t = Instant::now();
        let (r, bytes) = alloc::measure(|| diagnostics::eigvec_growth(n));
        let r = r?;
        report.cases.push(case("eigvec_growth", n, 0, (t.elapsed().as_secs_f64() * 1e3, 0.0), bytes.peak_aux_bytes, None));
        growth.push(r.clone());
        report.diagnostics.push(r);
        for &l in &config.l {
            if n < 2 {
                continue;
            }
            let t = Instant::now();
            let (r, bytes) = alloc::measure(|| diagnostics::lssl_charpoly_inverse_coeffs(n, l));
            report.cases.push(case("lssl_charpoly_inverse", n, l, (t.elapsed().as_secs_f64() * 1e3, 0.0), bytes.peak_aux_bytes, None));
            report.diagnostics.push(r?);
        }
    }
    if growth.len() >= 2 {
        report.slope = Some(diagnostics::growth_slope(&growth));
    }
    Ok(())
}

struct Verifier<'a> {
    config: &'a BenchConfig,
    report: &'a mut BenchReport,
}

impl Verifier<'_> {
    fn record(&mut self, suite: &str, family: HippoFamily, n: usize, l: usize, tolerance: f64, f: impl FnOnce() -> Result<f64>) {
        let t = Instant::now();
        let (res, bytes) = alloc::measure(f);
        let ms = t.elapsed().as_secs_f64() * 1e3;
        // errors inside a check count as an infinite miss
        let error = match res {
            Ok(e) if e.is_finite() => e,
            _ => f64::INFINITY,
        };
        let passed = error <= tolerance;
        self.report.cases.push(case(&format!("verify:{family}:{suite}"), n, l, (ms, 0.0), bytes.peak_aux_bytes, Some(error)));
        self.report.checks.push(CheckResult {
            suite: suite.into(),
            family,
            n,
            l,
            error,
            tolerance,
            passed,
        });
    }
}

fn verify(config: &BenchConfig, report: &mut BenchReport) -> Result<()> {
    let delta = config.delta;
    let pert = config.kernel_perturbation;
    let mut v = Verifier { config, report };
    for family in config.families() {
        for &n in &v.config.n.clone() {
            let decomp = hippo::nplr_decompose(family, n)?;
            let a = hippo::hippo_matrix(family, n)?.map(|x| C64::new(x, 0.0));
            v.record("hippo.reconstruction", family, n, 0, 1e-9, || {
                Ok((decomp.reconstruct() - &a).norm() / a.norm())
            });
            v.record("hippo.unitary", family, n, 0, 1e-10, || {
                Ok((decomp.v.adjoint() * &decomp.v - CMat::identity(n, n)).norm() / n as f64)
            });
            if family == HippoFamily::LegS {
                v.record("hippo.legs_real_part", family, n, 0, 1e-10, || {
                    Ok(decomp.lambda.iter().map(|z| (z.re + 0.5).abs()).fold(0.0, f64::max))
                });
            }
            let spec = hippo_system(family, n, v.config.seed)?;
            let real_b = hippo::default_b_vector(family, n);
            let real_c = crate::random::normal_vec(n, v.config.seed ^ (n as u64).rotate_left(32));
            for &l in &v.config.l.clone() {
                v.record("ssm.conjugation", family, n, l, 1e-8, || {
                    let orig = ContinuousSsm::from_real(&hippo::hippo_matrix(family, n)?, real_b.as_slice(), &real_c, 0.0)?;
                    let k0 = kernel::krylov_kernel_naive(&bilinear_discretize_dense(&orig, delta)?, l)?;
                    let k1 = kernel::krylov_kernel_naive(&bilinear_discretize_dense(&spec.to_continuous(0.0)?, delta)?, l)?;
                    Ok(rel_linf_err(k1.values(), k0.values()))
                });
                v.record("discretize.closed_form", family, n, l, 1e-9, || {
                    let closed = dplr_discretize(&spec, delta)?.to_dense();
                    let dense = bilinear_discretize_dense(&spec.to_continuous(0.0)?, delta)?;
                    Ok(rel_linf_err_c(closed.a_bar.as_slice(), dense.a_bar.as_slice())
                        .max(rel_linf_err_c(closed.b_bar.as_slice(), dense.b_bar.as_slice())))
                });
                let u = crate::random::normal_vec(l, v.config.seed.wrapping_add(l as u64));
                v.record("discretize.recurrence", family, n, l, 1e-8, || {
                    let rec = run_recurrence(&dplr_discretize(&spec, delta)?, &u)?;
                    let dense = run_dense(&bilinear_discretize_dense(&spec.to_continuous(0.0)?, delta)?, &u)?;
                    Ok(rel_linf_err(&rec, &dense))
                });
                v.record("kernel.krylov", family, n, l, 1e-6, || {
                    let fast = perturb(kernel::s4_kernel_from_c(&spec, delta, l)?, pert)?;
                    let dense = bilinear_discretize_dense(&spec.to_continuous(0.0)?, delta)?;
                    let oracle = kernel::krylov_kernel_naive(&dense, l)?;
                    Ok(rel_linf_err(fast.values(), oracle.values()))
                });
                v.record("kernel.dft_roundtrip", family, n, l, 1e-9, || {
                    let ct = kernel::c_tilde_from_c(&spec, delta, l)?;
                    let fast = perturb(kernel::s4_kernel(&spec, delta, l, &ct)?, pert)?;
                    let lifted: Vec<C64> = fast.values().iter().map(|&x| C64::new(x, 0.0)).collect();
                    let nodes = kernel::gf_dplr_eval(&spec, delta, &ct, &NodeGrid::new(l, delta)?)?;
                    Ok(rel_linf_err_c(&kernel::dft_at_roots(&lifted), &nodes))
                });
                v.record("kernel.convolution", family, n, l, 1e-8, || {
                    let fast = perturb(kernel::s4_kernel_from_c(&spec, delta, l)?, pert)?;
                    let conv = kernel::convolve(&fast, &u)?;
                    let rec = run_recurrence(&dplr_discretize(&spec, delta)?, &u)?;
                    Ok(rel_linf_err(&conv, &rec))
                });
                v.record("cauchy.matvec", family, n, l, 1e-12, || {
                    let grid = NodeGrid::new(l, delta)?;
                    let omega: Vec<C64> = grid.g.iter().zip(&grid.singular).filter(|(_, s)| !**s).map(|(g, _)| *g).collect();
                    let lambda: Vec<C64> = spec.lambda().iter().cloned().collect();
                    let w: Vec<C64> = spec.b().iter().cloned().collect();
                    let got = cauchy::cauchy_matvec_naive(&CauchyNodes::new(omega.clone(), lambda.clone())?, &w)?;
                    let want: Vec<C64> = omega
                        .iter()
                        .map(|o| (0..lambda.len()).rev().map(|j| w[j] / (o - lambda[j])).sum())
                        .collect();
                    Ok(rel_linf_err_c(&got, &want))
                });
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantiles_and_slope() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile(&xs, 0.5), 3.0);
        assert_eq!(quantile(&xs, 0.25), 2.0);
        let pts: Vec<(f64, f64)> = (0..5).map(|i| (i as f64, 2.0 * i as f64 + 1.0)).collect();
        assert!((fit_slope(&pts) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        let mut c = BenchConfig::new(Mode::Verify);
        c.repeats = 2;
        assert!(c.validate().is_err());
        c.repeats = 3;
        c.n = vec![0];
        assert!(c.validate().is_err());
    }

    #[test]
    fn budget_refusal_reports_estimate() {
        let mut c = BenchConfig::new(Mode::Kernel);
        c.budget = 10.0;
        let err = run_bench(&c).unwrap_err().to_string();
        assert!(err.contains("budget"), "{err}");
    }
}
