//! Experiment manifests and their expansion into grid points.

use serde::{Deserialize, Deserializer, Serialize};
use srlab_core::hp_numeric::{to_decimal_digits, Precision};
use srlab_core::{LabError, Layout, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    Sweep,
    Spectrum,
    Bounds,
    Prolate,
    Inequalities,
    LimitCheck,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Sweep => "sweep",
            Self::Spectrum => "spectrum",
            Self::Bounds => "bounds",
            Self::Prolate => "prolate",
            Self::Inequalities => "inequalities",
            Self::LimitCheck => "limit-check",
        }
    }
}

/// Accepts decimals written either as JSON strings or as numbers.
fn decimals<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<String>, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Dec {
        S(String),
        I(u64),
        F(f64),
    }
    let raw: Vec<Dec> = Vec::deserialize(d)?;
    Ok(raw
        .into_iter()
        .map(|v| match v {
            Dec::S(s) => s,
            Dec::I(i) => i.to_string(),
            Dec::F(f) => format!("{f:e}"),
        })
        .collect())
}

fn default_tau() -> Vec<String> {
    vec![TAU_ELL_MINUS_ONE.to_owned()]
}

fn default_layout() -> Vec<Layout> {
    vec![Layout::EquispacedInCluster]
}

fn default_seed() -> Vec<u64> {
    vec![0]
}

fn default_clusters() -> Vec<usize> {
    vec![1]
}

/// Grid value of `tau` meaning "ℓ − 1 at this point".
pub const TAU_ELL_MINUS_ONE: &str = "ell-1";

/// Lists of coordinates whose cartesian product forms the sweep.
///
/// Empty `s` means `s = ℓ + clusters − 1` (one cluster of multiplicity ℓ,
/// the rest singletons). Empty `theta` means `θ = π/clusters`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParameterGrid {
    pub ell: Vec<usize>,
    #[serde(default = "default_tau", deserialize_with = "decimals")]
    pub tau: Vec<String>,
    #[serde(rename = "N")]
    pub n: Vec<usize>,
    #[serde(deserialize_with = "decimals")]
    pub delta: Vec<String>,
    #[serde(default)]
    pub s: Vec<usize>,
    #[serde(default, deserialize_with = "decimals")]
    pub theta: Vec<String>,
    #[serde(default = "default_layout")]
    pub layout: Vec<Layout>,
    #[serde(default = "default_seed")]
    pub seed: Vec<u64>,
    #[serde(default = "default_clusters")]
    pub clusters: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentManifest {
    pub experiment_id: String,
    pub kind: ExperimentKind,
    pub parameter_grid: ParameterGrid,
    #[serde(default)]
    pub precision_override: Option<u32>,
    #[serde(default)]
    pub created_at: String,
    #[serde(default)]
    pub tool_version: String,
}

/// One fully resolved sweep coordinate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub index: usize,
    pub ell: usize,
    pub tau: String,
    pub n: usize,
    pub delta: String,
    pub s: usize,
    pub theta: String,
    pub layout: Layout,
    pub seed: u64,
    pub clusters: usize,
}

impl ExperimentManifest {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| LabError::parse(format!("manifest: {e}")))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    /// Grid points in a fixed nesting order: ℓ, τ, N, Δ, s, θ, layout, seed, clusters.
    pub fn expand(&self) -> Result<Vec<GridPoint>> {
        let g = &self.parameter_grid;
        for (name, empty) in [
            ("ell", g.ell.is_empty()),
            ("tau", g.tau.is_empty()),
            ("N", g.n.is_empty()),
            ("delta", g.delta.is_empty()),
            ("layout", g.layout.is_empty()),
            ("seed", g.seed.is_empty()),
            ("clusters", g.clusters.is_empty()),
        ] {
            if empty {
                return Err(LabError::invalid(format!("parameter_grid.{name} is empty")));
            }
        }
        let mut out = Vec::new();
        for &ell in &g.ell {
            for tau in &g.tau {
                let tau = if tau.trim() == TAU_ELL_MINUS_ONE {
                    ell.saturating_sub(1).to_string()
                } else {
                    tau.clone()
                };
                for &n in &g.n {
                    for delta in &g.delta {
                        for &clusters in &g.clusters {
                            let s_list = if g.s.is_empty() {
                                vec![ell + clusters.saturating_sub(1)]
                            } else {
                                g.s.clone()
                            };
                            let theta_list = if g.theta.is_empty() {
                                vec![derived_theta(clusters)]
                            } else {
                                g.theta.clone()
                            };
                            for &s in &s_list {
                                for theta in &theta_list {
                                    for &layout in &g.layout {
                                        for &seed in &g.seed {
                                            out.push(GridPoint {
                                                index: out.len(),
                                                ell,
                                                tau: tau.clone(),
                                                n,
                                                delta: delta.clone(),
                                                s,
                                                theta: theta.clone(),
                                                layout,
                                                seed,
                                                clusters,
                                            });
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

/// `π/M` to 20 digits: half the spacing of `M` equispaced centers.
pub fn derived_theta(clusters: usize) -> String {
    let p = Precision::default();
    to_decimal_digits(&(p.pi() / clusters.max(1) as u32), 20)
}

fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// Desk-scale reconstruction of the ℓ-versus-Λ grid: ℓ ≤ 12,
/// `N ∈ {60, 100, 200, 300}`, Δ logarithmic from 1e-4 to 1e-12.
pub fn desk_manifest() -> ExperimentManifest {
    ExperimentManifest {
        experiment_id: "lambda-desk".to_owned(),
        kind: ExperimentKind::Sweep,
        parameter_grid: ParameterGrid {
            ell: (2..=12).collect(),
            tau: default_tau(),
            n: vec![60, 100, 200, 300],
            delta: ["1e-4", "1e-6", "1e-8", "1e-10", "1e-12"].map(String::from).to_vec(),
            s: Vec::new(),
            theta: Vec::new(),
            layout: default_layout(),
            seed: default_seed(),
            clusters: default_clusters(),
        },
        precision_override: None,
        created_at: now(),
        tool_version: env!("CARGO_PKG_VERSION").to_owned(),
    }
}

/// The full grid (ℓ to 40, Δ down to 1e-25). Long-running: the largest
/// points need several thousand bits.
pub fn full_figure_manifest() -> ExperimentManifest {
    let mut m = desk_manifest();
    m.experiment_id = "lambda-full".to_owned();
    m.parameter_grid.ell = (2..=40).collect();
    m.parameter_grid.delta = (4..=25).map(|k| format!("1e-{k}")).collect();
    m
}
