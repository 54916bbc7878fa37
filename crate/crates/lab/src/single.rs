//! Subcommands that work on one configuration file rather than a grid.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use srlab_core::bound_models::{
    evaluate_all, level_counts, level_thresholds, prolate_lower_shape, slepian_constant, BoundReportJson,
    LevelCounts,
};
use srlab_core::hp_numeric::{log10_abs, parse_decimal, to_decimal_string, Precision};
use srlab_core::node_geometry::{
    equispaced_centers, generate_config, validate_config, ClusterSpecJson, NodeSetJson,
};
use srlab_core::rug::Float;
use srlab_core::spectral_core::{lambda_from_sigma, prolate_eigenvalues, prolate_limit_check, singular_values, SpectrumJson};
use srlab_core::suites::{
    cor_turan_suite, discrete_relation_suite, nikolskii_suite, riemann_ratio_suite, salem_suite, turan_suite,
    InequalityCheck, SalemReport, SuiteConfig, SuiteTally,
};
use srlab_core::{ClusterSpec, Domain, LabError, Layout, NodeSet, Result, VandermondeSpec};

use crate::runner::{ResultRow, RunOptions};

/// Node set, cluster parameters and bandwidth read from JSON.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub nodes: NodeSetJson,
    pub cluster: ClusterSpecJson,
    #[serde(rename = "N", default)]
    pub n: Option<usize>,
    #[serde(default)]
    pub precision_bits: Option<u32>,
}

/// A parsed configuration at its working precision.
pub struct Loaded {
    pub id: String,
    pub nodes: NodeSet,
    pub cluster: ClusterSpec,
    pub n: Option<usize>,
    pub prec: Precision,
}

impl ConfigFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| LabError::parse(format!("config: {e}")))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| LabError::parse(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text).map_err(|e| LabError::parse(format!("{}: {e}", path.display())))
    }

    /// Parses decimals at the precision the configuration needs.
    pub fn load(&self, id: &str, opts: &RunOptions) -> Result<Loaded> {
        let probe = self.cluster.parse(Precision::default())?;
        let bits = match opts.precision_bits.or(self.precision_bits) {
            Some(b) => b,
            None => opts.policy.required_bits(probe.ell, self.n.unwrap_or(1).max(1), &probe.delta)?,
        };
        if bits > crate::runner::PRECISION_CAP {
            return Err(LabError::Resource(format!("needs {bits} bits, cap is {}", crate::runner::PRECISION_CAP)));
        }
        let prec = Precision::new(bits)?;
        Ok(Loaded {
            id: id.to_owned(),
            nodes: self.nodes.parse(prec)?,
            cluster: self.cluster.parse(prec)?,
            n: self.n,
            prec,
        })
    }
}

fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

pub fn load_path(path: &Path, opts: &RunOptions) -> Result<Loaded> {
    ConfigFile::read(path)?.load(&stem(path), opts)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub row: ResultRow,
    pub spectrum: SpectrumJson,
    pub bounds: BoundReportJson,
    /// Singular values against `c1·√N(NΔ/32πe)^{m-1}`, compared with `q_m`.
    pub levels: LevelCounts,
}

fn require_n(cfg: &Loaded) -> Result<usize> {
    cfg.n.ok_or_else(|| LabError::invalid("config needs N"))
}

fn base_row(cfg: &Loaded, kind: &str, n: usize) -> ResultRow {
    ResultRow {
        experiment_id: cfg.id.clone(),
        kind: kind.to_owned(),
        s: cfg.cluster.s,
        ell: cfg.cluster.ell,
        tau: to_decimal_string(&cfg.cluster.tau),
        n,
        delta: to_decimal_string(&cfg.cluster.delta),
        theta: to_decimal_string(&cfg.cluster.theta),
        layout: "given".to_owned(),
        seed: 0,
        precision_bits: cfg.prec.bits(),
        sigma_min: String::new(),
        lambda: String::new(),
        log10_lambda: String::new(),
        lower_shape: String::new(),
        upper_explicit: String::new(),
        srf: String::new(),
        window_ok: false,
        runtime_ms: 0,
        status: "ok".to_owned(),
    }
}

pub fn run_spectrum(cfg: &Loaded, opts: &RunOptions) -> Result<SpectrumReport> {
    let start = Instant::now();
    let n = require_n(cfg)?;
    let spec = VandermondeSpec::new(n, cfg.nodes.clone())?;
    let params = opts.bound_params(cfg.prec)?;
    let bounds = evaluate_all(&spec, &cfg.cluster, &params)?;
    let sv = singular_values(&spec)?;
    let thresholds = level_thresholds(n, &cfg.cluster.delta, cfg.cluster.ell, &params.c1)?;
    let levels = level_counts(&sv.values, &thresholds, &bounds.partition.q);
    let lambda = lambda_from_sigma(sv.min(), n, &cfg.cluster.delta, cfg.cluster.ell);
    let mut row = base_row(cfg, "spectrum", n);
    row.sigma_min = to_decimal_string(sv.min());
    row.lambda = to_decimal_string(&lambda);
    row.log10_lambda = format!("{}", log10_abs(&lambda));
    row.lower_shape = to_decimal_string(&bounds.lower_shape);
    row.upper_explicit = to_decimal_string(&bounds.upper_explicit);
    row.srf = to_decimal_string(&bounds.srf);
    row.window_ok = bounds.window_ok;
    row.runtime_ms = start.elapsed().as_millis() as u64;
    Ok(SpectrumReport { row, spectrum: sv.to_json(), bounds: bounds.to_json(), levels })
}

pub fn run_bounds(cfg: &Loaded, opts: &RunOptions) -> Result<BoundReportJson> {
    let n = require_n(cfg)?;
    let spec = VandermondeSpec::new(n, cfg.nodes.clone())?;
    Ok(evaluate_all(&spec, &cfg.cluster, &opts.bound_params(cfg.prec)?)?.to_json())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProlateReport {
    pub id: String,
    pub spectrum: SpectrumJson,
    pub lambda_min: String,
    pub single_equispaced_cluster: bool,
    /// `C_EQ(s)·Δ^{2s−2}`.
    pub slepian_asymptotic: String,
    /// `λ_min / (C_EQ(s)Δ^{2s−2})` for a single equispaced cluster.
    pub slepian_ratio: Option<String>,
    /// Eigenvalues against `c1·(Δ/16πe)^{2(m-1)}`, compared with `q_m`.
    pub levels: LevelCounts,
}

/// True when the nodes form one cluster whose sorted gaps all equal Δ.
fn is_equispaced_single(nodes: &NodeSet, delta: &srlab_core::HpReal, clusters: usize) -> bool {
    if clusters != 1 {
        return false;
    }
    let mut x: Vec<_> = nodes.nodes().to_vec();
    x.sort_by(|a, b| a.total_cmp(b));
    let bits = delta.prec();
    let tol = Float::with_val(bits, delta * Precision::new(bits).unwrap_or_default().epsilon(16))
        + x.iter().map(|v| Float::with_val(bits, v.abs_ref())).fold(Float::new(bits), |a, b| a.max(&b))
            * Precision::new(bits).unwrap_or_default().epsilon(16);
    x.windows(2).all(|w| {
        let gap = Float::with_val(bits, &w[1] - &w[0]);
        Float::with_val(bits, gap - delta).abs() <= tol
    })
}

pub fn run_prolate(cfg: &Loaded, opts: &RunOptions) -> Result<ProlateReport> {
    if cfg.nodes.domain() != Domain::Line {
        return Err(LabError::invalid("prolate needs line-domain nodes"));
    }
    let partition = validate_config(&cfg.nodes, &cfg.cluster)?;
    let eig = prolate_eigenvalues(&cfg.nodes)?;
    let bits = eig.precision_bits;
    let delta = Float::with_val(bits, &cfg.cluster.delta);
    let s = cfg.nodes.len();
    let asym = Float::with_val(bits, slepian_constant(s, Precision::new(bits)?)?)
        * srlab_core::hp_numeric::powi(&delta, 2 * (s - 1));
    let single = is_equispaced_single(&cfg.nodes, &delta, partition.num_clusters());
    let ratio = single.then(|| to_decimal_string(&Float::with_val(bits, eig.min() / &asym)));
    let c1 = parse_decimal(&opts.c1, Precision::new(bits)?)?;
    let thresholds = (1..=cfg.cluster.ell)
        .map(|m| Ok(prolate_lower_shape(&delta, m)? * &c1))
        .collect::<Result<Vec<_>>>()?;
    Ok(ProlateReport {
        id: cfg.id.clone(),
        lambda_min: to_decimal_string(eig.min()),
        spectrum: eig.to_json(),
        single_equispaced_cluster: single,
        slepian_asymptotic: to_decimal_string(&asym),
        slepian_ratio: ratio,
        levels: level_counts(&eig.values, &thresholds, &partition.q),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitReport {
    pub id: String,
    pub lambda_min_g: String,
    pub n: Vec<usize>,
    /// `|σ²_min(Ṽ_N) − λ_min(G)|` per `N`.
    pub gap: Vec<String>,
    /// `gap / λ_min(G)` per `N`.
    pub relative: Vec<f64>,
    pub decreasing: bool,
}

pub fn run_limit_check(cfg: &Loaded, n_list: &[usize]) -> Result<LimitReport> {
    let lambda = prolate_eigenvalues(&cfg.nodes)?.min().clone();
    let gaps = prolate_limit_check(&cfg.nodes, n_list)?;
    let relative: Vec<f64> = gaps
        .iter()
        .map(|(_, g)| Float::with_val(g.prec(), g / &lambda).to_f64())
        .collect();
    Ok(LimitReport {
        id: cfg.id.clone(),
        lambda_min_g: to_decimal_string(&lambda),
        n: gaps.iter().map(|g| g.0).collect(),
        decreasing: gaps.windows(2).all(|w| w[1].1 < w[0].1),
        gap: gaps.iter().map(|g| to_decimal_string(&g.1)).collect(),
        relative,
    })
}

/// Parameters for `gen-config`.
#[derive(Clone, Debug)]
pub struct GenParams {
    pub s: usize,
    pub ell: usize,
    pub tau: String,
    pub delta: String,
    pub theta: Option<String>,
    pub n: usize,
    pub clusters: usize,
    pub layout: Layout,
    pub domain: Domain,
    pub seed: u64,
    pub multiplicities: Option<Vec<usize>>,
}

/// Generates a validated configuration; the line domain puts cluster
/// centers `θ + τΔ` apart starting at 0.
pub fn gen_config(g: &GenParams, opts: &RunOptions) -> Result<ConfigFile> {
    let tau = if g.tau == crate::manifest::TAU_ELL_MINUS_ONE { g.ell.saturating_sub(1).to_string() } else { g.tau.clone() };
    let theta = g.theta.clone().unwrap_or_else(|| crate::manifest::derived_theta(g.clusters));
    let bits = opts.bits_for(None, g.ell, g.n, &g.delta)?;
    let prec = Precision::new(bits)?;
    let cluster = ClusterSpec::from_decimals(&g.delta, &theta, g.s, g.ell, &tau, prec)?;
    let centers = match g.domain {
        Domain::Periodic => equispaced_centers(g.clusters, &prec.zero()),
        Domain::Line => {
            let step = Float::with_val(bits, &cluster.theta + cluster.tau_delta());
            (0..g.clusters).map(|j| Float::with_val(bits, &step * j as u32)).collect()
        }
    };
    let nodes = generate_config(&cluster, g.domain, g.layout, &centers, g.multiplicities.as_deref(), g.seed)?;
    Ok(ConfigFile {
        nodes: nodes.to_json(),
        cluster: cluster.to_json(),
        n: Some(g.n),
        precision_bits: Some(bits),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub seed: u64,
    pub instances: usize,
    pub bernstein_c: String,
    pub tallies: Vec<SuiteTally>,
    pub salem: SalemReport,
    /// Largest `gap / rhs_shape` over random `ℓ = 2`, `N = 50` sums.
    pub riemann_max_ratio: f64,
    pub rows: Vec<InequalityCheck>,
}

impl InequalityReport {
    pub fn all_hold(&self) -> bool {
        self.tallies.iter().all(SuiteTally::passed) && self.salem.positive && self.salem.stable
    }
}

pub const SALEM_DELTAS: [&str; 3] = ["1e-2", "1e-4", "1e-6"];

pub fn run_inequalities(cfg: &SuiteConfig) -> Result<InequalityReport> {
    let mut rows = Vec::new();
    let mut tallies = Vec::new();
    for (name, batch) in [
        ("turan", turan_suite(cfg)),
        ("nikolskii", nikolskii_suite(cfg)),
        ("cor_turan", cor_turan_suite(cfg)),
        ("discrete_relation", discrete_relation_suite(cfg)),
    ] {
        tallies.push(SuiteTally::of(name, &batch));
        rows.extend(batch);
    }
    let mut salem = salem_suite(cfg, &SALEM_DELTAS)?;
    tallies.push(SuiteTally::of("salem", &salem.rows));
    rows.append(&mut salem.rows);
    let riemann_max_ratio = riemann_ratio_suite(cfg, 50)?;
    Ok(InequalityReport {
        seed: cfg.seed,
        instances: cfg.instances,
        bernstein_c: to_decimal_string(&cfg.bernstein_c),
        tallies,
        salem,
        riemann_max_ratio,
        rows,
    })
}
