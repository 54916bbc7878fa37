//! Node sets, cluster specifications and partition extraction.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rug::Float;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result, Violation};
use crate::hp_numeric::{parse_decimal, to_decimal_string, wrap_angle, HpReal, Precision};

/// Lost bits tolerated when comparing distances against Δ, τΔ and θ.
const COMPARE_SLACK_BITS: u32 = 8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    /// Angles on the unit circle, stored in `(-π, π]`.
    Periodic,
    /// Points on the real line.
    Line,
}

/// Ordered set of distinct nodes.
#[derive(Clone, Debug, PartialEq)]
pub struct NodeSet {
    nodes: Vec<HpReal>,
    domain: Domain,
}

impl NodeSet {
    pub fn new(nodes: Vec<HpReal>, domain: Domain) -> Result<Self> {
        if nodes.is_empty() {
            return Err(LabError::invalid("node set is empty"));
        }
        if domain == Domain::Periodic {
            let prec = nodes.iter().map(|x| x.prec()).max().unwrap_or(64);
            let pi = Precision::new(prec)?.pi();
            let neg_pi = Float::with_val(prec, -&pi);
            if let Some((i, x)) = nodes
                .iter()
                .enumerate()
                .find(|(_, x)| **x <= neg_pi || **x > pi)
            {
                return Err(LabError::invalid(format!(
                    "periodic node {i} = {} lies outside (-pi, pi]",
                    x.to_f64()
                )));
            }
        }
        let set = Self { nodes, domain };
        for i in 0..set.len() {
            for j in 0..i {
                if set.distance(i, j).is_zero() {
                    return Err(LabError::degenerate(format!("nodes {j} and {i} coincide")));
                }
            }
        }
        Ok(set)
    }

    pub fn periodic(nodes: Vec<HpReal>) -> Result<Self> {
        Self::new(nodes, Domain::Periodic)
    }

    pub fn line(nodes: Vec<HpReal>) -> Result<Self> {
        Self::new(nodes, Domain::Line)
    }

    pub fn from_decimals(values: &[&str], domain: Domain, prec: Precision) -> Result<Self> {
        let nodes = values
            .iter()
            .map(|s| parse_decimal(s, prec))
            .collect::<Result<Vec<_>>>()?;
        Self::new(nodes, domain)
    }

    pub fn nodes(&self) -> &[HpReal] {
        &self.nodes
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn precision_bits(&self) -> u32 {
        self.nodes.iter().map(|x| x.prec()).max().unwrap_or(64)
    }

    /// Same nodes re-rounded to another precision.
    pub fn with_precision(&self, prec: Precision) -> Self {
        Self {
            nodes: self
                .nodes
                .iter()
                .map(|x| Float::with_val(prec.bits(), x))
                .collect(),
            domain: self.domain,
        }
    }

    /// Distance between nodes `i` and `j` in the metric of the domain.
    pub fn distance(&self, i: usize, j: usize) -> HpReal {
        distance(&self.nodes[i], &self.nodes[j], self.domain)
    }

    /// Subset of nodes by index, in the given order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        Self::new(
            indices.iter().map(|&i| self.nodes[i].clone()).collect(),
            self.domain,
        )
    }

    /// Divides every node by `n`; a line set scaled this way becomes periodic.
    pub fn scaled(&self, n: usize, domain: Domain) -> Result<Self> {
        let nodes = self
            .nodes
            .iter()
            .map(|x| Float::with_val(x.prec(), x / n as u32))
            .collect();
        Self::new(nodes, domain)
    }

    /// Shifts the set so that `min + max = 0`.
    ///
    /// Periodic sets are unwrapped relative to the first node before the
    /// shift, so a single cluster straddling ±π is centered correctly.
    pub fn centered(&self) -> Result<Self> {
        let prec = self.precision_bits();
        let first = &self.nodes[0];
        let offsets: Vec<HpReal> = self
            .nodes
            .iter()
            .map(|x| {
                let d = Float::with_val(prec, x - first);
                match self.domain {
                    Domain::Periodic => wrap_angle(&d),
                    Domain::Line => d,
                }
            })
            .collect();
        let min = offsets.iter().min_by(|a, b| a.total_cmp(b)).cloned().unwrap();
        let max = offsets.iter().max_by(|a, b| a.total_cmp(b)).cloned().unwrap();
        let mid = Float::with_val(prec, &min + &max) / 2u32;
        let nodes = offsets
            .into_iter()
            .map(|o| Float::with_val(prec, &o - &mid))
            .collect();
        Self::new(nodes, self.domain)
    }

    pub fn to_json(&self) -> NodeSetJson {
        NodeSetJson {
            domain: self.domain,
            nodes: self.nodes.iter().map(to_decimal_string).collect(),
        }
    }
}

/// Wire form of a [`NodeSet`]: decimal strings plus the domain tag.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NodeSetJson {
    pub domain: Domain,
    pub nodes: Vec<String>,
}

impl NodeSetJson {
    pub fn parse(&self, prec: Precision) -> Result<NodeSet> {
        let values: Vec<&str> = self.nodes.iter().map(String::as_str).collect();
        NodeSet::from_decimals(&values, self.domain, prec)
    }
}

/// Wrap-around distance `|Arg e^{ı(x-y)}|` in `[0, π]`.
pub fn wrap_distance(x: &HpReal, y: &HpReal) -> HpReal {
    let prec = x.prec().max(y.prec());
    wrap_angle(&Float::with_val(prec, x - y)).abs()
}

pub fn distance(x: &HpReal, y: &HpReal, domain: Domain) -> HpReal {
    match domain {
        Domain::Periodic => wrap_distance(x, y),
        Domain::Line => Float::with_val(x.prec().max(y.prec()), x - y).abs(),
    }
}

/// Cluster configuration parameters `(Δ, θ, s, ℓ, τ)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterSpec {
    pub delta: HpReal,
    pub theta: HpReal,
    pub s: usize,
    pub ell: usize,
    pub tau: HpReal,
}

impl ClusterSpec {
    pub fn new(delta: HpReal, theta: HpReal, s: usize, ell: usize, tau: HpReal) -> Result<Self> {
        let spec = Self {
            delta,
            theta,
            s,
            ell,
            tau,
        };
        spec.check(None)?;
        Ok(spec)
    }

    pub fn from_decimals(
        delta: &str,
        theta: &str,
        s: usize,
        ell: usize,
        tau: &str,
        prec: Precision,
    ) -> Result<Self> {
        Self::new(
            parse_decimal(delta, prec)?,
            parse_decimal(theta, prec)?,
            s,
            ell,
            parse_decimal(tau, prec)?,
        )
    }

    /// Checks the parameter invariants; the periodic domain also needs `τ ≤ π/Δ`.
    pub fn check(&self, domain: Option<Domain>) -> Result<()> {
        if self.ell == 0 || self.ell > self.s {
            return Err(LabError::invalid(format!(
                "need 1 <= ell <= s, got ell = {}, s = {}",
                self.ell, self.s
            )));
        }
        if self.delta <= 0 || self.theta <= 0 {
            return Err(LabError::invalid("delta and theta must be positive"));
        }
        if self.tau < (self.ell - 1) as u32 {
            return Err(LabError::invalid(format!(
                "tau = {} is below ell - 1 = {}",
                self.tau.to_f64(),
                self.ell - 1
            )));
        }
        if domain == Some(Domain::Periodic) {
            let prec = self.delta.prec();
            let pi = Precision::new(prec)?.pi();
            if Float::with_val(prec, &self.tau * &self.delta) > pi {
                return Err(LabError::invalid("tau * delta exceeds pi on the circle"));
            }
        }
        Ok(())
    }

    pub fn tau_delta(&self) -> HpReal {
        Float::with_val(self.delta.prec(), &self.tau * &self.delta)
    }

    pub fn to_json(&self) -> ClusterSpecJson {
        ClusterSpecJson {
            delta: to_decimal_string(&self.delta),
            theta: to_decimal_string(&self.theta),
            s: self.s,
            ell: self.ell,
            tau: to_decimal_string(&self.tau),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterSpecJson {
    pub delta: String,
    pub theta: String,
    pub s: usize,
    pub ell: usize,
    pub tau: String,
}

impl ClusterSpecJson {
    pub fn parse(&self, prec: Precision) -> Result<ClusterSpec> {
        ClusterSpec::from_decimals(&self.delta, &self.theta, self.s, self.ell, &self.tau, prec)
    }
}

/// Clusters `C^(j)`, their multiplicities `ℓ^(j)` and the counts `q_m`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionResult {
    pub clusters: Vec<Vec<usize>>,
    pub multiplicities: Vec<usize>,
    pub q: Vec<usize>,
}

impl PartitionResult {
    pub fn from_clusters(clusters: Vec<Vec<usize>>, ell: usize) -> Self {
        let multiplicities: Vec<usize> = clusters.iter().map(Vec::len).collect();
        let q = q_counts(&multiplicities, ell);
        Self {
            clusters,
            multiplicities,
            q,
        }
    }

    pub fn num_clusters(&self) -> usize {
        self.clusters.len()
    }
}

/// `q_m = #{j : ℓ^(j) ≥ m}` for `m = 1..=ell`.
pub fn q_counts(multiplicities: &[usize], ell: usize) -> Vec<usize> {
    (1..=ell)
        .map(|m| multiplicities.iter().filter(|&&l| l >= m).count())
        .collect()
}

pub fn count_q(partition: &PartitionResult, m: usize) -> Result<usize> {
    let ell = partition.q.len();
    if m == 0 || m > ell {
        return Err(LabError::invalid(format!("m = {m} outside 1..={ell}")));
    }
    Ok(partition
        .multiplicities
        .iter()
        .filter(|&&l| l >= m)
        .count())
}

fn below(d: &HpReal, bound: &HpReal, slack: &HpReal) -> bool {
    let prec = d.prec().max(bound.prec());
    Float::with_val(prec, d + slack) < *bound
}

fn above(d: &HpReal, bound: &HpReal, slack: &HpReal) -> bool {
    let prec = d.prec().max(bound.prec());
    Float::with_val(prec, d - slack) > *bound
}

/// Absolute comparison slack: `2^-(p-8)` times the largest magnitude among
/// the nodes and `bounds` (node rounding dominates tiny distances).
fn compare_slack(nodes: &[HpReal], bounds: &[&HpReal], prec: Precision) -> HpReal {
    let mut scale = prec.zero();
    for x in nodes.iter().chain(bounds.iter().copied()) {
        let a = Float::with_val(prec.bits(), x.abs_ref());
        if a > scale {
            scale = a;
        }
    }
    scale * prec.epsilon(COMPARE_SLACK_BITS)
}

/// Extracts the cluster partition and checks it against `spec`.
///
/// Single-linkage with link threshold `τΔ` in the metric of the domain; then
/// every within-cluster pair must satisfy `Δ ≤ d ≤ τΔ` and every cross pair
/// `d ≥ θ`. Boundary equalities pass.
pub fn validate_config(nodes: &NodeSet, spec: &ClusterSpec) -> Result<PartitionResult> {
    spec.check(Some(nodes.domain()))?;
    let s = nodes.len();
    if s != spec.s {
        return Err(LabError::invalid(format!(
            "spec expects s = {} nodes, got {s}",
            spec.s
        )));
    }
    let prec = Precision::new(nodes.precision_bits().max(spec.delta.prec()))?;
    let link = spec.tau_delta();
    let eps = compare_slack(nodes.nodes(), &[&spec.theta, &link], prec);

    let mut dist = vec![vec![prec.zero(); s]; s];
    for i in 0..s {
        for j in 0..i {
            let d = nodes.distance(i, j);
            if d.is_zero() {
                return Err(LabError::degenerate(format!("nodes {j} and {i} coincide")));
            }
            dist[i][j] = d.clone();
            dist[j][i] = d;
        }
    }

    let mut parent: Vec<usize> = (0..s).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..s {
        for j in 0..i {
            if !above(&dist[i][j], &link, &eps) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
        }
    }
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    let mut root_slot = vec![usize::MAX; s];
    for i in 0..s {
        let r = find(&mut parent, i);
        if root_slot[r] == usize::MAX {
            root_slot[r] = clusters.len();
            clusters.push(Vec::new());
        }
        clusters[root_slot[r]].push(i);
    }

    let mut label = vec![0usize; s];
    for (c, members) in clusters.iter().enumerate() {
        for &i in members {
            label[i] = c;
        }
    }
    for i in 0..s {
        for j in (i + 1)..s {
            let d = &dist[i][j];
            let violation = if label[i] == label[j] {
                if below(d, &spec.delta, &eps) {
                    Some(Violation::MinSeparation)
                } else if above(d, &link, &eps) {
                    Some(Violation::ClusterDiameter)
                } else {
                    None
                }
            } else if below(d, &spec.theta, &eps) {
                Some(Violation::InterClusterSeparation)
            } else {
                None
            };
            if let Some(violation) = violation {
                return Err(LabError::Validation {
                    i,
                    j,
                    violation,
                    distance: crate::hp_numeric::to_decimal_digits(d, 17),
                });
            }
        }
    }
    for members in &clusters {
        if members.len() > spec.ell {
            return Err(LabError::Validation {
                i: members[0],
                j: *members.last().unwrap(),
                violation: Violation::Multiplicity,
                distance: crate::hp_numeric::to_decimal_digits(
                    &dist[members[0]][*members.last().unwrap()],
                    17,
                ),
            });
        }
    }
    Ok(PartitionResult::from_clusters(clusters, spec.ell))
}

/// How nodes are placed inside each cluster.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Layout {
    /// Consecutive gaps exactly Δ.
    EquispacedInCluster,
    /// Consecutive gaps uniform in `[Δ, τΔ/(ℓ-1)]`, seeded.
    RandomInCluster,
}

impl Layout {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::EquispacedInCluster => "equispaced-in-cluster",
            Self::RandomInCluster => "random-in-cluster",
        }
    }
}

impl std::str::FromStr for Layout {
    type Err = LabError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "equispaced-in-cluster" | "equispaced" => Ok(Self::EquispacedInCluster),
            "random-in-cluster" | "random" => Ok(Self::RandomInCluster),
            other => Err(LabError::parse(format!("unknown layout {other:?}"))),
        }
    }
}

/// Default split of `s` nodes over `m` clusters: the first holds `ell`, the
/// rest share the remainder round-robin.
pub fn default_multiplicities(s: usize, ell: usize, m: usize) -> Result<Vec<usize>> {
    if m == 0 || ell == 0 || s < ell || s - ell < m - 1 || s > m * ell {
        return Err(LabError::invalid(format!(
            "cannot split s = {s} nodes into {m} clusters with maximum multiplicity {ell}"
        )));
    }
    let mut mult = vec![1usize; m];
    mult[0] = ell;
    let mut remaining = s - ell - (m - 1);
    let mut j = 1;
    while remaining > 0 {
        if mult[j] < ell {
            mult[j] += 1;
            remaining -= 1;
        }
        j = if j + 1 >= m { 1 } else { j + 1 };
    }
    Ok(mult)
}

/// Builds a configuration satisfying `spec` around the given centers.
///
/// `multiplicities` defaults to [`default_multiplicities`]. Within a cluster
/// the nodes are centered on their center (`min + max = 2·center`).
pub fn generate_config(
    spec: &ClusterSpec,
    domain: Domain,
    layout: Layout,
    centers: &[HpReal],
    multiplicities: Option<&[usize]>,
    seed: u64,
) -> Result<NodeSet> {
    spec.check(Some(domain))?;
    let mult = match multiplicities {
        Some(m) => m.to_vec(),
        None => default_multiplicities(spec.s, spec.ell, centers.len())?,
    };
    if mult.len() != centers.len() {
        return Err(LabError::invalid("one multiplicity per center is required"));
    }
    if mult.iter().sum::<usize>() != spec.s
        || mult.iter().any(|&m| m == 0 || m > spec.ell)
        || mult.iter().max() != Some(&spec.ell)
    {
        return Err(LabError::invalid(format!(
            "multiplicities {mult:?} must sum to s = {} with maximum exactly ell = {}",
            spec.s, spec.ell
        )));
    }
    let prec = Precision::new(spec.delta.prec())?;
    let needed = Float::with_val(prec.bits(), &spec.theta + spec.tau_delta());
    let eps = compare_slack(centers, &[&needed], prec);
    for a in 0..centers.len() {
        for b in 0..a {
            let d = distance(&centers[a], &centers[b], domain);
            if below(&d, &needed, &eps) {
                return Err(LabError::invalid(format!(
                    "centers {b} and {a} are closer than theta + tau*delta"
                )));
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_gap = if spec.ell > 1 {
        Float::with_val(prec.bits(), spec.tau_delta() / (spec.ell - 1) as u32)
    } else {
        spec.delta.clone()
    };
    let mut nodes = Vec::with_capacity(spec.s);
    for (center, &m) in centers.iter().zip(&mult) {
        let mut offsets = vec![prec.zero()];
        for _ in 1..m {
            let gap = match layout {
                Layout::EquispacedInCluster => spec.delta.clone(),
                Layout::RandomInCluster => {
                    let u: f64 = rng.gen();
                    let span = Float::with_val(prec.bits(), &max_gap - &spec.delta);
                    Float::with_val(prec.bits(), &spec.delta + span * u)
                }
            };
            let last = offsets.last().unwrap().clone();
            offsets.push(last + gap);
        }
        let half = Float::with_val(prec.bits(), offsets.last().unwrap() / 2u32);
        for o in offsets {
            let x = Float::with_val(prec.bits(), center + o - &half);
            nodes.push(match domain {
                Domain::Periodic => wrap_angle(&x),
                Domain::Line => x,
            });
        }
    }
    let set = NodeSet::new(nodes, domain)?;
    validate_config(&set, spec)?;
    Ok(set)
}

/// `M` centers equally spaced on the circle, starting at `offset`.
pub fn equispaced_centers(m: usize, offset: &HpReal) -> Vec<HpReal> {
    let prec = offset.prec();
    let two_pi = Float::with_val(prec, rug::float::Constant::Pi) * 2u32;
    (0..m)
        .map(|j| wrap_angle(&(Float::with_val(prec, &two_pi * j as u32) / m as u32 + offset)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p() -> Precision {
        Precision::default()
    }

    fn dec(s: &str) -> HpReal {
        parse_decimal(s, p()).unwrap()
    }

    #[test]
    fn wrap_distance_examples() {
        assert!(wrap_distance(&dec("0"), &dec("0")).is_zero());
        let pi = p().pi();
        let neg_pi = Float::with_val(192, -&pi);
        assert!(wrap_distance(&pi, &neg_pi).to_f64().abs() < 1e-50);
        let d = wrap_distance(&dec("3"), &dec("-3")).to_f64();
        assert!((d - (2.0 * std::f64::consts::PI - 6.0)).abs() < 1e-15);
        assert!((d - 0.2831853).abs() < 1e-7);
    }

    #[test]
    fn equispaced_triple_is_one_cluster() {
        let nodes = NodeSet::from_decimals(&["0", "0.01", "0.02"], Domain::Periodic, p()).unwrap();
        let spec = ClusterSpec::new(dec("0.01"), p().pi(), 3, 3, dec("2")).unwrap();
        let part = validate_config(&nodes, &spec).unwrap();
        assert_eq!(part.clusters, vec![vec![0, 1, 2]]);
        assert_eq!(part.q, vec![1, 1, 1]);
    }

    #[test]
    fn two_clusters_found() {
        let nodes = NodeSet::from_decimals(
            &["0", "0.001", "2.0", "2.001", "2.002"],
            Domain::Periodic,
            p(),
        )
        .unwrap();
        let spec = ClusterSpec::new(dec("0.001"), dec("1.9"), 5, 3, dec("2")).unwrap();
        let part = validate_config(&nodes, &spec).unwrap();
        assert_eq!(part.clusters, vec![vec![0, 1], vec![2, 3, 4]]);
        assert_eq!(part.multiplicities, vec![2, 3]);
        assert_eq!(part.q, vec![2, 2, 1]);
    }

    #[test]
    fn duplicate_nodes_rejected() {
        let err = NodeSet::from_decimals(&["0", "0"], Domain::Periodic, p()).unwrap_err();
        assert!(matches!(err, LabError::DegenerateInput(_)));
        // 2π-aliases coincide on the circle
        let pi = p().pi();
        assert!(NodeSet::periodic(vec![pi.clone(), Float::with_val(192, &pi - 1e-50)]).is_ok());
    }

    #[test]
    fn violations_name_the_pair_and_condition() {
        let nodes = NodeSet::from_decimals(&["0", "0.0005", "1"], Domain::Periodic, p()).unwrap();
        let spec = ClusterSpec::new(dec("0.001"), dec("0.5"), 3, 2, dec("2")).unwrap();
        match validate_config(&nodes, &spec).unwrap_err() {
            LabError::Validation { i, j, violation, .. } => {
                assert_eq!((i, j), (0, 1));
                assert_eq!(violation, Violation::MinSeparation);
            }
            e => panic!("unexpected {e}"),
        }
        let nodes = NodeSet::from_decimals(&["0", "0.001", "0.0035"], Domain::Periodic, p()).unwrap();
        let spec = ClusterSpec::new(dec("0.001"), dec("0.5"), 3, 3, dec("2")).unwrap();
        match validate_config(&nodes, &spec).unwrap_err() {
            LabError::Validation { violation, .. } => {
                assert_eq!(violation, Violation::InterClusterSeparation)
            }
            e => panic!("unexpected {e}"),
        }
        // chain of Δ-gaps longer than τΔ
        let nodes =
            NodeSet::from_decimals(&["0", "0.001", "0.002", "0.003"], Domain::Line, p()).unwrap();
        let spec = ClusterSpec::new(dec("0.001"), dec("0.5"), 4, 4, dec("3")).unwrap();
        assert!(validate_config(&nodes, &spec).is_ok());
        let spec = ClusterSpec::new(dec("0.001"), dec("0.5"), 4, 3, dec("2")).unwrap();
        match validate_config(&nodes, &spec).unwrap_err() {
            LabError::Validation { violation, .. } => {
                assert_eq!(violation, Violation::ClusterDiameter)
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn count_q_examples() {
        let part = PartitionResult::from_clusters(vec![vec![0, 1, 2], vec![3], vec![4, 5]], 3);
        assert_eq!(count_q(&part, 1).unwrap(), 3);
        assert_eq!(count_q(&part, 2).unwrap(), 2);
        assert_eq!(count_q(&part, 3).unwrap(), 1);
        assert!(count_q(&part, 0).is_err());
        assert!(count_q(&part, 4).is_err());
    }

    #[test]
    fn generate_pair_centered() {
        let spec = ClusterSpec::new(dec("1e-6"), dec("1"), 2, 2, dec("1")).unwrap();
        let set = generate_config(
            &spec,
            Domain::Periodic,
            Layout::EquispacedInCluster,
            &[p().zero()],
            None,
            0,
        )
        .unwrap();
        assert_eq!(set.nodes()[0], dec("-5e-7"));
        assert_eq!(set.nodes()[1], dec("5e-7"));
    }

    #[test]
    fn generate_equispaced_triple() {
        let spec = ClusterSpec::new(dec("1e-3"), dec("1"), 3, 3, dec("2")).unwrap();
        let set = generate_config(
            &spec,
            Domain::Periodic,
            Layout::EquispacedInCluster,
            &[dec("0.3")],
            None,
            0,
        )
        .unwrap();
        let eps = p().epsilon(8).to_f64();
        for k in 1..3 {
            let gap = set.distance(k, k - 1).to_f64();
            assert!((gap - 1e-3).abs() <= 1e-3 * eps, "{gap}");
        }
        assert!((set.distance(0, 2).to_f64() - 2e-3).abs() <= 2e-3 * eps);
    }

    #[test]
    fn generate_is_deterministic() {
        let spec = ClusterSpec::new(dec("1e-4"), dec("1"), 5, 3, dec("4")).unwrap();
        let centers = equispaced_centers(2, &dec("0.1"));
        let a = generate_config(&spec, Domain::Periodic, Layout::RandomInCluster, &centers, None, 7)
            .unwrap();
        let b = generate_config(&spec, Domain::Periodic, Layout::RandomInCluster, &centers, None, 7)
            .unwrap();
        assert_eq!(a, b);
        let c = generate_config(&spec, Domain::Periodic, Layout::RandomInCluster, &centers, None, 8)
            .unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn generate_rejects_close_centers() {
        let spec = ClusterSpec::new(dec("1e-3"), dec("1"), 2, 1, dec("1")).unwrap();
        let err = generate_config(
            &spec,
            Domain::Periodic,
            Layout::EquispacedInCluster,
            &[dec("0"), dec("0.5")],
            None,
            0,
        )
        .unwrap_err();
        assert!(matches!(err, LabError::InvalidParameter(_)));
    }

    #[test]
    fn centering_across_pi() {
        let pi = p().pi();
        let a = Float::with_val(192, &pi - dec("0.001"));
        let b = -Float::with_val(192, &pi - dec("0.001"));
        let set = NodeSet::periodic(vec![a, b]).unwrap().centered().unwrap();
        assert!((set.nodes()[0].to_f64() + 0.001).abs() < 1e-15);
        assert!((set.nodes()[1].to_f64() - 0.001).abs() < 1e-15);
    }

    #[test]
    fn json_round_trip() {
        let set = NodeSet::from_decimals(&["0.125", "-1e-25"], Domain::Line, p()).unwrap();
        let json = serde_json::to_string(&set.to_json()).unwrap();
        let back: NodeSetJson = serde_json::from_str(&json).unwrap();
        assert_eq!(back.parse(p()).unwrap(), set);
        let spec = ClusterSpec::new(dec("1e-3"), dec("1"), 2, 2, dec("1")).unwrap();
        let js = serde_json::to_string(&spec.to_json()).unwrap();
        let back: ClusterSpecJson = serde_json::from_str(&js).unwrap();
        assert_eq!(back.parse(p()).unwrap(), spec);
    }

    proptest! {
        #[test]
        fn wrap_distance_metric(x in -10.0f64..10.0, y in -10.0f64..10.0, z in -10.0f64..10.0) {
            let pr = p();
            let (x, y, z) = (pr.real(x), pr.real(y), pr.real(z));
            let dxy = wrap_distance(&x, &y);
            let dyx = wrap_distance(&y, &x);
            prop_assert_eq!(&dxy, &dyx);
            prop_assert!(dxy <= pr.pi());
            let slack = pr.epsilon(8);
            let rhs = wrap_distance(&x, &z) + wrap_distance(&z, &y) + slack;
            prop_assert!(dxy <= rhs);
            let shifted = Float::with_val(192, &x + pr.pi() * 2u32);
            let d2 = wrap_distance(&shifted, &y);
            prop_assert!((d2 - &dxy).abs() <= pr.epsilon(8));
        }

        #[test]
        fn generated_configs_validate(
            m in 1usize..4,
            ell in 1usize..5,
            extra in 0usize..6,
            tau_extra in 0.0f64..3.0,
            e in 2i32..9,
            random in any::<bool>(),
            seed in any::<u64>(),
        ) {
            let pr = p();
            let s = (ell + (m - 1) + extra).min(m * ell);
            let delta = parse_decimal(&format!("1e-{e}"), pr).unwrap();
            let tau = pr.real(ell as f64 - 1.0 + tau_extra);
            let theta = pr.real(1.0);
            let spec = ClusterSpec::new(delta, theta, s, ell, tau).unwrap();
            let layout = if random { Layout::RandomInCluster } else { Layout::EquispacedInCluster };
            let centers = equispaced_centers(m, &pr.real(0.3));
            let set = generate_config(&spec, Domain::Periodic, layout, &centers, None, seed).unwrap();
            let part = validate_config(&set, &spec).unwrap();
            let mut got = part.multiplicities.clone();
            let mut want = default_multiplicities(s, ell, m).unwrap();
            got.sort();
            want.sort();
            prop_assert_eq!(got, want);
            prop_assert_eq!(part.q[0], m);
            prop_assert!(part.q.windows(2).all(|w| w[0] >= w[1]));
        }

        #[test]
        fn line_config_scales_to_circle(n in 10usize..500, e in 1i32..6, ell in 1usize..5) {
            let pr = p();
            let delta = parse_decimal(&format!("1e-{e}"), pr).unwrap();
            let tau = pr.real((ell as f64 - 1.0).max(1.0));
            let spec = ClusterSpec::new(delta.clone(), pr.real(2.0), ell + 1, ell, tau.clone()).unwrap();
            let set = generate_config(&spec, Domain::Line, Layout::EquispacedInCluster,
                &[pr.zero(), pr.real(3.0)], None, 0).unwrap();
            let scaled = set.scaled(n, Domain::Periodic).unwrap();
            let scaled_spec = ClusterSpec::new(delta / n as u32, pr.real(2.0) / n as u32, ell + 1, ell, tau).unwrap();
            let a = validate_config(&set, &spec).unwrap();
            let b = validate_config(&scaled, &scaled_spec).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
