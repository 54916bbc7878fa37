//! Sweep execution: one [`ResultRow`] per grid point, computed in a worker pool.

use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use srlab_core::bound_models::{evaluate_all, level_thresholds, level_counts, BoundParams, BoundReportJson, LevelCounts};
use srlab_core::hp_numeric::{log10_abs, parse_decimal, to_decimal_string, Precision};
use srlab_core::node_geometry::{equispaced_centers, generate_config};
use srlab_core::spectral_core::{lambda_from_sigma, singular_values};
use srlab_core::{ClusterSpec, Domain, LabError, PrecisionPolicy, VandermondeSpec};

use crate::manifest::{ExperimentKind, ExperimentManifest, GridPoint};
use crate::report;

/// Hard ceiling on working precision.
pub const PRECISION_CAP: u32 = 16384;

/// Flags shared by every subcommand that computes something.
#[derive(Clone, Debug)]
pub struct RunOptions {
    pub precision_bits: Option<u32>,
    pub workers: Option<usize>,
    pub seed: Option<u64>,
    pub c1: String,
    pub window_floor: u32,
    pub policy: PrecisionPolicy,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            precision_bits: None,
            workers: None,
            seed: None,
            c1: "1".to_owned(),
            window_floor: srlab_core::bound_models::DEFAULT_WINDOW_FLOOR,
            policy: PrecisionPolicy::default(),
        }
    }
}

impl RunOptions {
    /// Explicit bits if given, otherwise the policy's choice for `(ℓ, N, Δ)`.
    pub fn bits_for(&self, manifest_override: Option<u32>, ell: usize, n: usize, delta: &str) -> srlab_core::Result<u32> {
        let bits = match self.precision_bits.or(manifest_override) {
            Some(b) => b,
            None => {
                let probe = parse_decimal(delta, Precision::default())?;
                self.policy.required_bits(ell, n.max(1), &probe)?
            }
        };
        if bits > PRECISION_CAP {
            return Err(LabError::Resource(format!("needs {bits} bits, cap is {PRECISION_CAP}")));
        }
        Precision::new(bits)?;
        Ok(bits)
    }

    pub fn bound_params(&self, prec: Precision) -> srlab_core::Result<BoundParams> {
        let mut params = BoundParams::new(prec);
        params.c1 = parse_decimal(&self.c1, prec)?;
        params.window_floor = self.window_floor;
        Ok(params)
    }
}

/// One CSV row. Field order is the CSV column order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub experiment_id: String,
    pub kind: String,
    pub s: usize,
    pub ell: usize,
    pub tau: String,
    #[serde(rename = "N")]
    pub n: usize,
    pub delta: String,
    pub theta: String,
    pub layout: String,
    pub seed: u64,
    pub precision_bits: u32,
    pub sigma_min: String,
    pub lambda: String,
    pub log10_lambda: String,
    pub lower_shape: String,
    pub upper_explicit: String,
    pub srf: String,
    pub window_ok: bool,
    pub runtime_ms: u64,
    pub status: String,
}

pub const CSV_COLUMNS: [&str; 20] = [
    "experiment_id",
    "kind",
    "s",
    "ell",
    "tau",
    "N",
    "delta",
    "theta",
    "layout",
    "seed",
    "precision_bits",
    "sigma_min",
    "lambda",
    "log10_lambda",
    "lower_shape",
    "upper_explicit",
    "srf",
    "window_ok",
    "runtime_ms",
    "status",
];

/// What the CSV has no room for.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RowDetail {
    pub index: usize,
    pub reason: Option<String>,
    pub bounds: Option<BoundReportJson>,
    pub spectrum: Option<Vec<String>>,
    pub levels: Option<LevelCounts>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub row: ResultRow,
    pub detail: RowDetail,
}

enum Failure {
    Skip(String),
    Fail(String),
}

fn skip(e: LabError) -> Failure {
    Failure::Skip(e.to_string())
}

fn fail(e: LabError) -> Failure {
    Failure::Fail(e.to_string())
}

/// Runs one grid point. Invalid configurations are `skipped`, numerical
/// breakdowns `failed`; neither aborts the caller.
pub fn run_point(manifest: &ExperimentManifest, point: &GridPoint, opts: &RunOptions) -> RunOutput {
    let start = Instant::now();
    let mut row = ResultRow {
        experiment_id: manifest.experiment_id.clone(),
        kind: manifest.kind.as_str().to_owned(),
        s: point.s,
        ell: point.ell,
        tau: point.tau.clone(),
        n: point.n,
        delta: point.delta.clone(),
        theta: point.theta.clone(),
        layout: point.layout.as_str().to_owned(),
        seed: opts.seed.unwrap_or(point.seed),
        precision_bits: 0,
        sigma_min: String::new(),
        lambda: String::new(),
        log10_lambda: String::new(),
        lower_shape: String::new(),
        upper_explicit: String::new(),
        srf: String::new(),
        window_ok: false,
        runtime_ms: 0,
        status: "ok".to_owned(),
    };
    let mut detail = RowDetail {
        index: point.index,
        reason: None,
        bounds: None,
        spectrum: None,
        levels: None,
    };
    if let Err(f) = fill(manifest, point, opts, &mut row, &mut detail) {
        let (status, reason) = match f {
            Failure::Skip(r) => ("skipped", r),
            Failure::Fail(r) => ("failed", r),
        };
        row.status = status.to_owned();
        detail.reason = Some(reason);
    }
    row.runtime_ms = start.elapsed().as_millis() as u64;
    RunOutput { row, detail }
}

fn fill(
    manifest: &ExperimentManifest,
    point: &GridPoint,
    opts: &RunOptions,
    row: &mut ResultRow,
    detail: &mut RowDetail,
) -> Result<(), Failure> {
    let bits = opts
        .bits_for(manifest.precision_override, point.ell, point.n, &point.delta)
        .map_err(skip)?;
    row.precision_bits = bits;
    let prec = Precision::new(bits).map_err(skip)?;
    let cluster =
        ClusterSpec::from_decimals(&point.delta, &point.theta, point.s, point.ell, &point.tau, prec).map_err(skip)?;
    let centers = equispaced_centers(point.clusters, &prec.zero());
    let nodes = generate_config(&cluster, Domain::Periodic, point.layout, &centers, None, row.seed).map_err(skip)?;
    let spec = VandermondeSpec::new(point.n, nodes).map_err(skip)?;
    let params = opts.bound_params(prec).map_err(skip)?;
    let bounds = evaluate_all(&spec, &cluster, &params).map_err(skip)?;
    row.lower_shape = to_decimal_string(&bounds.lower_shape);
    row.upper_explicit = to_decimal_string(&bounds.upper_explicit);
    row.srf = to_decimal_string(&bounds.srf);
    row.window_ok = bounds.window_ok;
    detail.bounds = Some(bounds.to_json());

    if manifest.kind == ExperimentKind::Bounds {
        return Ok(());
    }
    let sv = singular_values(&spec).map_err(fail)?;
    let sigma = sv.min().clone();
    if sigma.is_zero() {
        return Err(Failure::Fail("smallest singular value is zero".to_owned()));
    }
    let lambda = lambda_from_sigma(&sigma, point.n, &cluster.delta, point.ell);
    let log10 = log10_abs(&lambda);
    if !log10.is_finite() {
        return Err(Failure::Fail("log10 lambda is not finite".to_owned()));
    }
    row.sigma_min = to_decimal_string(&sigma);
    row.lambda = to_decimal_string(&lambda);
    row.log10_lambda = format!("{log10}");
    if manifest.kind == ExperimentKind::Spectrum {
        let thresholds = level_thresholds(point.n, &cluster.delta, point.ell, &params.c1).map_err(fail)?;
        detail.levels = Some(level_counts(&sv.values, &thresholds, &bounds.partition.q));
        detail.spectrum = Some(sv.values.iter().map(to_decimal_string).collect());
    }
    Ok(())
}

/// Counts and fitted slope of one sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub experiment_id: String,
    pub rows: usize,
    pub ok: usize,
    pub skipped: usize,
    pub failed: usize,
    /// OLS slope of `log10 Λ` against `ℓ − 1` over `ok` rows; absent with
    /// fewer than two distinct `ℓ`.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
}

/// Least-squares line `y = a + b·x`, or `None` when `x` is constant.
pub fn ols(points: &[(f64, f64)]) -> Option<(f64, f64)> {
    let n = points.len() as f64;
    if points.len() < 2 {
        return None;
    }
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let b = sxy / sxx;
    Some((my - b * mx, b))
}

pub fn summarize(experiment_id: &str, rows: &[ResultRow]) -> SweepSummary {
    let count = |s: &str| rows.iter().filter(|r| r.status == s).count();
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.status == "ok")
        .filter_map(|r| Some(((r.ell - 1) as f64, r.log10_lambda.parse::<f64>().ok()?)))
        .collect();
    let fit = ols(&pts);
    SweepSummary {
        experiment_id: experiment_id.to_owned(),
        rows: rows.len(),
        ok: count("ok"),
        skipped: count("skipped"),
        failed: count("failed"),
        intercept: fit.map(|f| f.0),
        slope: fit.map(|f| f.1),
    }
}

fn pool(workers: Option<usize>) -> anyhow::Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(workers.unwrap_or(0)).build()?)
}

/// Computes every grid point; output order is grid order.
pub fn compute_sweep(manifest: &ExperimentManifest, opts: &RunOptions) -> anyhow::Result<Vec<RunOutput>> {
    let points = manifest.expand()?;
    let mut out: Vec<RunOutput> =
        pool(opts.workers)?.install(|| points.par_iter().map(|p| run_point(manifest, p, opts)).collect());
    out.sort_by_key(|o| o.detail.index);
    Ok(out)
}

/// Runs the sweep and writes `results.csv`, `results.json`, `figure.svg`
/// and `summary.json` into `out_dir`.
pub fn run_sweep(manifest: &ExperimentManifest, out_dir: &Path, opts: &RunOptions) -> anyhow::Result<SweepSummary> {
    std::fs::create_dir_all(out_dir)?;
    let outputs = compute_sweep(manifest, opts)?;
    let rows: Vec<ResultRow> = outputs.iter().map(|o| o.row.clone()).collect();
    let details: Vec<RowDetail> = outputs.into_iter().map(|o| o.detail).collect();
    let summary = summarize(&manifest.experiment_id, &rows);
    report::write_csv(&out_dir.join("results.csv"), &rows)?;
    report::write_json(
        &out_dir.join("results.json"),
        &report::SweepJson { manifest: manifest.clone(), rows: rows.clone(), details },
    )?;
    std::fs::write(out_dir.join("figure.svg"), report::scatter_svg(&rows))?;
    report::write_json(&out_dir.join("summary.json"), &summary)?;
    Ok(summary)
}
