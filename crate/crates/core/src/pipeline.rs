//! End-to-end runs: ball, cover, decomposition, discovery, tree and
//! subgroup stages, collected into one JSON report.

use std::fmt::{self, Write as _};
use std::sync::Arc;
use std::time::Instant;

use num_rational::Rational64;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bass_serre::{self, is_non_elementary, BassSerreTreePortion};
use crate::cayley::{CayleyBall, DEFAULT_VERTEX_CAP};
use crate::cover::{self, estimate_displacement, order_threshold, verify_ball_preservation, TruncatedCover};
use crate::decomposition::{
    build_nerve_complex, check_periodicity, compute_global_decomposition, discover_graph_of_groups, BagStrategy,
    DecompositionChecks, DecompositionConfig, DiscoveryConfig, GlobalDecomposition, IterationSummary, LinkKind,
};
use crate::error::{Error, Result};
use crate::gog::GraphOfGroups;
use crate::group::{Element, Group};
use crate::spec::{self, GroupSpec};
use crate::subgroups::{
    construct_finite_quotient, euler_characteristic, free_rank_from_euler, index_lower_bound, index_upper_bound,
    kernel_subgroup, reidemeister_schreier, torsion_representatives, vertex_order_product, verify_torsion_free,
    DEFAULT_COSET_CAP,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stage {
    Ball,
    Cover,
    Decomposition,
    Discovery,
    Tree,
    Subgroup,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Ball => "ball",
            Stage::Cover => "cover",
            Stage::Decomposition => "decomposition",
            Stage::Discovery => "discovery",
            Stage::Tree => "tree",
            Stage::Subgroup => "subgroup",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{stage} stage: {source}")]
pub struct StageError {
    pub stage: Stage,
    pub source: Error,
}

fn tag(stage: Stage) -> impl FnOnce(Error) -> StageError {
    move |source| StageError { stage, source }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caps {
    pub vertices: usize,
    pub cover: usize,
    pub tree: usize,
    pub cosets: usize,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            vertices: DEFAULT_VERTEX_CAP,
            cover: cover::DEFAULT_TREE_CAP,
            tree: bass_serre::DEFAULT_TREE_CAP,
            cosets: DEFAULT_COSET_CAP,
        }
    }
}

/// `vertices=5000,tree=100`; unnamed caps keep their defaults.
impl std::str::FromStr for Caps {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let mut caps = Caps::default();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let (k, v) = part
                .split_once('=')
                .ok_or_else(|| Error::Precondition(format!("cap `{part}` is not of the form name=value")))?;
            let v: usize = v.trim().parse().map_err(|_| Error::Precondition(format!("cap `{part}` is not a number")))?;
            let slot = match k.trim() {
                "vertices" => &mut caps.vertices,
                "cover" => &mut caps.cover,
                "tree" => &mut caps.tree,
                "cosets" => &mut caps.cosets,
                other => return Err(Error::Precondition(format!("unknown cap `{other}`"))),
            };
            *slot = v;
        }
        Ok(caps)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunConfig {
    pub r: usize,
    pub radius: usize,
    pub depth: usize,
    pub r0: usize,
    pub max_doublings: usize,
    pub tree_radius: usize,
    pub strategy: BagStrategy,
    pub seed: u64,
    pub samples: usize,
    pub caps: Caps,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            r: 6,
            radius: 10,
            depth: 3,
            r0: 2,
            max_doublings: 3,
            tree_radius: 3,
            strategy: BagStrategy::Cosets,
            seed: 0,
            samples: 20,
            caps: Caps::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.r < 3 {
            return Err(Error::Precondition(format!("r = {} but r >= 3 is required", self.r)));
        }
        let c = &self.caps;
        if c.vertices == 0 || c.cover == 0 || c.tree == 0 || c.cosets == 0 {
            return Err(Error::Precondition("caps must be positive".into()));
        }
        for (name, v) in
            [("radius", self.radius), ("depth", self.depth), ("r0", self.r0), ("max-doublings", self.max_doublings)]
        {
            if v == 0 {
                return Err(Error::Precondition(format!("{name} must be positive")));
            }
        }
        if self.tree_radius == 0 {
            return Err(Error::Precondition("tree radius must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StageStatus {
    Ok,
    Capped,
    VerificationFailed,
    Skipped,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageRecord {
    pub stage: Stage,
    pub status: StageStatus,
    pub detail: String,
    /// Wall time; left out of JSON so reruns are byte-identical.
    #[serde(skip)]
    pub millis: u128,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BallArtifact {
    pub radius: usize,
    pub vertices: usize,
    pub edges: usize,
    pub layer_counts: Vec<usize>,
    pub generators: Vec<String>,
    pub added_inverses: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreservationArtifact {
    pub radius: usize,
    pub checked: usize,
    pub pass: bool,
    pub witness: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoverArtifact {
    pub r: usize,
    pub requested_depth: usize,
    pub certified_depth: usize,
    pub vertices: usize,
    pub certified_vertices: usize,
    pub identifications: usize,
    pub displacement: Option<usize>,
    pub displacement_exact: bool,
    pub displacement_lower_bound: usize,
    /// `Δ/r + 1` as a reduced fraction.
    pub order_threshold: Option<String>,
    pub ball_preservation: PreservationArtifact,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelVertexArtifact {
    pub kind: String,
    pub bag_size: usize,
    pub stabilizer_order: usize,
    pub bag_count: usize,
    pub representative: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelEdgeArtifact {
    pub from: usize,
    pub to: usize,
    pub kind: LinkKind,
    pub adhesion_size: usize,
    pub edge_group_order: usize,
    pub link_count: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PeriodicityArtifact {
    pub samples: usize,
    pub skipped_samples: usize,
    pub bags_checked: usize,
    pub mismatches: usize,
    pub witnesses: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NerveArtifact {
    pub vertices: usize,
    pub maximal_simplices: usize,
    pub dimension: usize,
    pub components: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecompositionArtifact {
    pub r: usize,
    pub strategy: BagStrategy,
    pub margin: usize,
    pub interior_radius: usize,
    pub bags: usize,
    pub links: usize,
    pub model_vertices: Vec<ModelVertexArtifact>,
    pub model_edges: Vec<ModelEdgeArtifact>,
    pub checks: DecompositionChecks,
    pub periodicity: PeriodicityArtifact,
    pub nerve: NerveArtifact,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiscoveryArtifact {
    pub stabilized: bool,
    pub final_r: Option<usize>,
    pub iterations: Vec<IterationSummary>,
    pub diagnosis: Option<String>,
    pub graph_of_groups: Option<GroupSpec>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeArtifact {
    /// `discovery` or `spec`.
    pub source: String,
    pub radius: usize,
    pub vertices: usize,
    pub edges: usize,
    pub sphere_sizes: Vec<usize>,
    pub is_tree: bool,
    pub non_elementary: bool,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundsArtifact {
    pub b: u64,
    pub n: u32,
    pub kmax: u64,
    pub lower: u64,
    /// `(B!)^n`, decimal.
    pub upper: String,
    /// Product of the vertex group orders, decimal.
    pub vertex_order_product: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CertificateArtifact {
    pub source: String,
    pub target: String,
    pub target_order: usize,
    pub image_order: usize,
    pub index: usize,
    pub schreier_generators: usize,
    pub remaining_relators: usize,
    pub free: bool,
    pub rank: Option<usize>,
    pub euler_characteristic: String,
    pub rank_from_euler: String,
    pub torsion_free: bool,
    pub torsion_witnesses: Vec<String>,
    pub bounds: BoundsArtifact,
    pub search: Vec<String>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct Artifacts {
    pub ball: Option<BallArtifact>,
    pub cover: Option<CoverArtifact>,
    pub decomposition: Option<DecompositionArtifact>,
    pub discovery: Option<DiscoveryArtifact>,
    pub tree: Option<TreeArtifact>,
    pub certificate: Option<CertificateArtifact>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub group: String,
    pub model_graph: String,
    pub bag_sizes: Vec<usize>,
    /// JSON path of the artifact the row was read from.
    pub source: Option<String>,
    pub out_of_scope: Option<String>,
}

impl SummaryRow {
    pub fn text(&self) -> String {
        match &self.out_of_scope {
            Some(_) => self.model_graph.clone(),
            None => format!("{} / {}", self.model_graph, describe_bag_sizes(&self.bag_sizes)),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ReportBundle {
    pub format: String,
    pub group: String,
    pub config: RunConfig,
    pub artifacts: Artifacts,
    pub summary: SummaryRow,
    pub transcript: Vec<StageRecord>,
}

impl ReportBundle {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn any_status(&self, status: StageStatus) -> bool {
        self.transcript.iter().any(|t| t.status == status)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{}: {}\n", self.group, self.summary.text());
        for t in &self.transcript {
            let status = serde_json::to_value(t.status).expect("status").as_str().unwrap_or_default().to_string();
            let _ = writeln!(s, "  {:<14} {:<20} {:>7} ms  {}", t.stage.to_string(), status, t.millis, t.detail);
        }
        s
    }
}

/// "single edge", "rose with 2 loops", ... from the vertex count and edge ends.
pub fn describe_model_graph(vertices: usize, edges: &[(usize, usize)]) -> String {
    let loops = edges.iter().filter(|(a, b)| a == b).count();
    match (vertices, edges.len()) {
        (1, 0) => "single vertex".into(),
        (1, n) if loops == n => format!("rose with {n} loop{}", if n == 1 { "" } else { "s" }),
        (2, 1) if loops == 0 => "single edge".into(),
        (v, e) => format!("{v} vertices, {e} edges"),
    }
}

/// "bag size 1", "4 and 6", "2, 3 and 5" over the distinct sizes.
pub fn describe_bag_sizes(sizes: &[usize]) -> String {
    let mut s = sizes.to_vec();
    s.sort_unstable();
    s.dedup();
    match s.as_slice() {
        [] => "no bags".into(),
        [one] => format!("bag size {one}"),
        [init @ .., last] => {
            let head: Vec<String> = init.iter().map(|x| x.to_string()).collect();
            format!("{} and {last}", head.join(", "))
        }
    }
}

pub fn ball_stage(group: Arc<Group>, config: &RunConfig) -> Result<(Arc<CayleyBall>, BallArtifact)> {
    let ball = Arc::new(CayleyBall::build(group, config.radius, config.caps.vertices)?);
    let art = BallArtifact {
        radius: ball.radius(),
        vertices: ball.len(),
        edges: ball.edges().len(),
        layer_counts: ball.layer_counts(),
        generators: ball.group().generator_names().to_vec(),
        added_inverses: ball.added_inverses().to_vec(),
    };
    Ok((ball, art))
}

pub fn cover_stage(ball: Arc<CayleyBall>, config: &RunConfig) -> Result<(TruncatedCover, CoverArtifact)> {
    let cover = TruncatedCover::build_with_cap(ball, config.r, config.depth, config.caps.cover)?;
    let disp = estimate_displacement(&cover);
    let threshold = match disp.value {
        Some(d) => Some(order_threshold(d as u64, config.r as u64)?.to_string()),
        None => None,
    };
    let pres = verify_ball_preservation(&cover, (config.r / 2).min(cover.certified_depth()));
    let art = CoverArtifact {
        r: cover.r(),
        requested_depth: cover.requested_depth(),
        certified_depth: cover.certified_depth(),
        vertices: cover.len(),
        certified_vertices: cover.certified().count(),
        identifications: cover.identifications(),
        displacement: disp.value,
        displacement_exact: disp.exact,
        displacement_lower_bound: disp.lower_bound,
        order_threshold: threshold,
        ball_preservation: PreservationArtifact {
            radius: pres.radius,
            checked: pres.checked,
            pass: pres.pass,
            witness: pres.witness,
        },
    };
    Ok((cover, art))
}

/// Seeded sample of ball elements at distance at most `radius - r`.
pub fn sample_elements(ball: &CayleyBall, r: usize, count: usize, seed: u64) -> Vec<Element> {
    let pool: Vec<usize> = ball.within(ball.radius().saturating_sub(r)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    pool.choose_multiple(&mut rng, count).map(|&v| ball.vertex(v).clone()).collect()
}

pub fn decomposition_artifact(d: &GlobalDecomposition, samples: &[Element]) -> DecompositionArtifact {
    let per = check_periodicity(d, samples);
    let nerve = build_nerve_complex(d);
    DecompositionArtifact {
        r: d.config.r,
        strategy: d.config.strategy,
        margin: d.margin,
        interior_radius: d.interior_radius,
        bags: d.bags.len(),
        links: d.links.len(),
        model_vertices: d
            .model_vertices
            .iter()
            .map(|v| ModelVertexArtifact {
                kind: serde_json::to_value(v.kind).expect("kind").as_str().unwrap_or_default().to_string(),
                bag_size: v.bag_size,
                stabilizer_order: v.stabilizer.len(),
                bag_count: v.bag_count,
                representative: d.render_set(&v.representative),
            })
            .collect(),
        model_edges: d
            .model_edges
            .iter()
            .map(|e| ModelEdgeArtifact {
                from: e.from,
                to: e.to,
                kind: e.kind,
                adhesion_size: e.adhesion_size,
                edge_group_order: e.edge_group.len(),
                link_count: e.link_count,
            })
            .collect(),
        checks: d.checks.clone(),
        periodicity: PeriodicityArtifact {
            samples: per.samples,
            skipped_samples: per.skipped_samples,
            bags_checked: per.bags_checked,
            mismatches: per.mismatches,
            witnesses: per.witnesses,
        },
        nerve: NerveArtifact {
            vertices: nerve.vertices.len(),
            maximal_simplices: nerve.maximal_simplices.len(),
            dimension: nerve.dimension,
            components: nerve.components,
        },
        warnings: d.warnings.clone(),
    }
}

pub fn decomposition_stage(
    ball: Arc<CayleyBall>,
    config: &RunConfig,
) -> Result<(GlobalDecomposition, DecompositionArtifact)> {
    let d = compute_global_decomposition(ball.clone(), DecompositionConfig::new(config.r).with_strategy(config.strategy))?;
    let samples = sample_elements(&ball, config.r, config.samples, config.seed);
    let art = decomposition_artifact(&d, &samples);
    Ok((d, art))
}

pub fn discovery_stage(group: Arc<Group>, config: &RunConfig) -> Result<(Option<GraphOfGroups>, DiscoveryArtifact)> {
    let cfg = DiscoveryConfig {
        r0: config.r0,
        max_doublings: config.max_doublings,
        strategy: config.strategy,
        vertex_cap: config.caps.vertices,
        ..DiscoveryConfig::default()
    };
    let res = discover_graph_of_groups(group.clone(), &cfg)?;
    let spec = res.gog.as_ref().map(|g| GroupSpec::from_gog(&format!("{} (discovered)", group.name()), g, Vec::new()));
    let art = DiscoveryArtifact {
        stabilized: res.stabilized,
        final_r: res.final_r,
        iterations: res.transcript,
        diagnosis: res.diagnosis,
        graph_of_groups: spec,
    };
    Ok((res.gog, art))
}

pub fn tree_stage(gog: &GraphOfGroups, source: &str, config: &RunConfig) -> Result<(BassSerreTreePortion, TreeArtifact)> {
    let tree = BassSerreTreePortion::build_with_cap(gog, config.tree_radius, config.caps.tree)?;
    let elem = if config.tree_radius >= 2 {
        is_non_elementary(&tree)?
    } else {
        bass_serre::ElementarityReport { non_elementary: false, reason: "radius below 2".into() }
    };
    let art = TreeArtifact {
        source: source.into(),
        radius: tree.radius,
        vertices: tree.len(),
        edges: tree.edge_count(),
        sphere_sizes: tree.sphere_sizes(),
        is_tree: tree.is_tree(),
        non_elementary: elem.non_elementary,
        reason: elem.reason,
    };
    Ok((tree, art))
}

fn ratio(q: Rational64) -> String {
    q.to_string()
}

pub fn bounds_artifact(gog: &GraphOfGroups) -> Result<BoundsArtifact> {
    let orders: Vec<u64> = gog.vertex_groups().iter().map(|t| t.order() as u64).collect();
    let b = orders.iter().copied().max().unwrap_or(1);
    let n = orders.len() as u32;
    Ok(BoundsArtifact {
        b,
        n,
        kmax: b,
        lower: index_lower_bound(b, b)?,
        upper: index_upper_bound(b, n)?.to_string(),
        vertex_order_product: vertex_order_product(gog).to_string(),
    })
}

pub fn subgroup_stage(gog: &GraphOfGroups, source: &str) -> Result<CertificateArtifact> {
    let hom = construct_finite_quotient(gog)?;
    let mut cert = reidemeister_schreier(&kernel_subgroup(&hom), &hom.presentation);
    let torsion_free = verify_torsion_free(&hom, &mut cert, &torsion_representatives(gog));
    let chi = euler_characteristic(gog);
    Ok(CertificateArtifact {
        source: source.into(),
        target: hom.target_name.clone(),
        target_order: hom.target.order(),
        image_order: hom.image_order,
        index: cert.index,
        schreier_generators: cert.schreier_generators,
        remaining_relators: cert.remaining_relators,
        free: cert.basis.is_some(),
        rank: cert.rank,
        euler_characteristic: ratio(chi),
        rank_from_euler: ratio(free_rank_from_euler(chi, cert.index)),
        torsion_free,
        torsion_witnesses: cert.torsion_witnesses.clone(),
        bounds: bounds_artifact(gog)?,
        search: hom.transcript.clone(),
    })
}

impl CertificateArtifact {
    /// Torsion-free, certified free, and of the rank the Euler
    /// characteristic predicts.
    pub fn verified(&self) -> bool {
        self.torsion_free && self.rank.is_some_and(|r| r.to_string() == self.rank_from_euler)
    }
}

fn summary_from_decomposition(group: &str, d: &DecompositionArtifact) -> SummaryRow {
    let ends: Vec<(usize, usize)> = d.model_edges.iter().map(|e| (e.from, e.to)).collect();
    SummaryRow {
        group: group.into(),
        model_graph: describe_model_graph(d.model_vertices.len(), &ends),
        bag_sizes: d.model_vertices.iter().map(|v| v.bag_size).collect(),
        source: Some("artifacts.decomposition.model_vertices".into()),
        out_of_scope: None,
    }
}

fn summary_from_discovery(group: &str, d: &DiscoveryArtifact) -> Option<SummaryRow> {
    let (i, it) = d.iterations.iter().enumerate().rev().find(|(_, it)| it.splitting.is_some())?;
    let s = it.splitting.as_ref()?;
    let ends: Vec<(usize, usize)> = s.edges.iter().map(|e| (e.0, e.1)).collect();
    Some(SummaryRow {
        group: group.into(),
        model_graph: describe_model_graph(s.vertex_orders.len(), &ends),
        bag_sizes: s.bag_sizes.clone(),
        source: Some(format!("artifacts.discovery.iterations[{i}].splitting")),
        out_of_scope: None,
    })
}

fn out_of_scope_row(name: &str, reason: &str) -> SummaryRow {
    SummaryRow {
        group: name.into(),
        model_graph: format!("out of scope: {reason} pipeline"),
        bag_sizes: Vec::new(),
        source: None,
        out_of_scope: Some(reason.into()),
    }
}

struct Recorder {
    transcript: Vec<StageRecord>,
}

impl Recorder {
    /// Runs one stage; cap errors become a `capped` record, other errors
    /// abort the run with the stage tag.
    fn run<T>(
        &mut self,
        stage: Stage,
        f: impl FnOnce() -> Result<T>,
        judge: impl FnOnce(&T) -> (StageStatus, String),
    ) -> std::result::Result<Option<T>, StageError> {
        let start = Instant::now();
        let out = f();
        let millis = start.elapsed().as_millis();
        match out {
            Ok(v) => {
                let (status, detail) = judge(&v);
                self.transcript.push(StageRecord { stage, status, detail, millis });
                Ok(Some(v))
            }
            Err(e @ Error::CapExceeded { .. }) => {
                self.transcript.push(StageRecord { stage, status: StageStatus::Capped, detail: e.to_string(), millis });
                Ok(None)
            }
            Err(e) => Err(tag(stage)(e)),
        }
    }

    fn skip(&mut self, stage: Stage, why: &str) {
        self.transcript.push(StageRecord { stage, status: StageStatus::Skipped, detail: why.into(), millis: 0 });
    }
}

fn verdict(ok: bool, detail: String) -> (StageStatus, String) {
    (if ok { StageStatus::Ok } else { StageStatus::VerificationFailed }, detail)
}

/// Runs every stage on `spec`. Out-of-scope specs produce a bundle with
/// the flagged summary row and no artifacts.
pub fn run_pipeline(spec: &GroupSpec, config: &RunConfig) -> std::result::Result<ReportBundle, StageError> {
    config.validate().map_err(tag(Stage::Ball))?;
    let mut bundle = ReportBundle {
        format: spec::FORMAT.into(),
        group: spec.name.clone(),
        config: config.clone(),
        artifacts: Artifacts::default(),
        summary: out_of_scope_row(&spec.name, "unknown"),
        transcript: Vec::new(),
    };
    if let Some(reason) = &spec.out_of_scope {
        bundle.summary = out_of_scope_row(&spec.name, reason);
        return Ok(bundle);
    }
    let group = Arc::new(spec.build().map_err(tag(Stage::Ball))?);
    let mut rec = Recorder { transcript: Vec::new() };

    let ball = rec.run(Stage::Ball, || ball_stage(group.clone(), config), |(_, a)| {
        (StageStatus::Ok, format!("{} vertices at radius {}", a.vertices, a.radius))
    })?;
    let mut decomposition = None;
    if let Some((ball, art)) = ball {
        bundle.artifacts.ball = Some(art);
        let cover = rec.run(Stage::Cover, || cover_stage(ball.clone(), config), |(_, a)| {
            verdict(
                a.ball_preservation.pass,
                format!(
                    "{} certified vertices, displacement {}",
                    a.certified_vertices,
                    a.displacement.map_or(format!("> {}", a.displacement_lower_bound), |d| d.to_string())
                ),
            )
        })?;
        bundle.artifacts.cover = cover.map(|(_, a)| a);
        let dec = rec.run(Stage::Decomposition, || decomposition_stage(ball.clone(), config), |(_, a)| {
            verdict(
                a.checks.h1() && a.checks.h2() && a.periodicity.mismatches == 0,
                format!("{} model vertices, {} model edges", a.model_vertices.len(), a.model_edges.len()),
            )
        })?;
        decomposition = dec.map(|(_, a)| a);
    } else {
        rec.skip(Stage::Cover, "no ball");
        rec.skip(Stage::Decomposition, "no ball");
    }

    let disc = rec.run(Stage::Discovery, || discovery_stage(group.clone(), config), |(_, a)| {
        match (a.stabilized, &a.diagnosis) {
            (true, _) => (StageStatus::Ok, format!("stabilized at r = {}", a.final_r.unwrap_or_default())),
            (false, d) => (StageStatus::Capped, d.clone().unwrap_or_default()),
        }
    })?;
    let (discovered, discovery) = match disc {
        Some((g, a)) => (g.filter(|_| a.stabilized), Some(a)),
        None => (None, None),
    };

    let (gog, source) = match (&discovered, group.gog()) {
        (Some(g), _) => (Some(g), "discovery"),
        (None, Some(g)) => (Some(g), "spec"),
        (None, None) => (None, ""),
    };
    if let Some(gog) = gog {
        let tree = rec.run(Stage::Tree, || tree_stage(gog, source, config), |(_, a)| {
            verdict(a.is_tree, format!("{} vertices, {} edges", a.vertices, a.edges))
        })?;
        bundle.artifacts.tree = tree.map(|(_, a)| a);
        let cert = rec.run(Stage::Subgroup, || subgroup_stage(gog, source), |a| {
            verdict(a.verified(), format!("index {}, rank {:?}, torsion-free {}", a.index, a.rank, a.torsion_free))
        });
        // a failed quotient search is a search limit, not a wrong answer
        let cert = match cert {
            Err(StageError { source: Error::NotFound(msg), .. }) => {
                rec.transcript.push(StageRecord {
                    stage: Stage::Subgroup,
                    status: StageStatus::Capped,
                    detail: msg,
                    millis: 0,
                });
                None
            }
            other => other?,
        };
        bundle.artifacts.certificate = cert;
    } else {
        rec.skip(Stage::Tree, "no graph of groups");
        rec.skip(Stage::Subgroup, "no graph of groups");
    }

    bundle.summary = decomposition
        .as_ref()
        .map(|d| summary_from_decomposition(&spec.name, d))
        .or_else(|| discovery.as_ref().and_then(|d| summary_from_discovery(&spec.name, d)))
        .unwrap_or_else(|| SummaryRow {
            group: spec.name.clone(),
            model_graph: "unavailable".into(),
            bag_sizes: Vec::new(),
            source: None,
            out_of_scope: None,
        });
    bundle.artifacts.decomposition = decomposition;
    bundle.artifacts.discovery = discovery;
    bundle.transcript = rec.transcript;
    Ok(bundle)
}

/// Aligned text table with one row per summary.
pub fn render_table1(rows: &[SummaryRow]) -> String {
    let header = ["Group", "Model graph H", "Bag sizes"];
    let cells: Vec<[String; 3]> = rows
        .iter()
        .map(|r| match &r.out_of_scope {
            Some(_) => [r.group.clone(), r.model_graph.clone(), "-".into()],
            None => [r.group.clone(), r.model_graph.clone(), describe_bag_sizes(&r.bag_sizes)],
        })
        .collect();
    let mut w = header.map(str::len);
    for c in &cells {
        for k in 0..3 {
            w[k] = w[k].max(c[k].chars().count());
        }
    }
    let line = |c: [&str; 3]| format!("{:<a$} | {:<b$} | {}\n", c[0], c[1], c[2], a = w[0], b = w[1]);
    let mut s = line(header);
    s.push_str(&format!("{}-+-{}-+-{}\n", "-".repeat(w[0]), "-".repeat(w[1]), "-".repeat(w[2])));
    for c in &cells {
        s.push_str(&line([&c[0], &c[1], &c[2]]));
    }
    s
}

/// Runs the pipeline on each spec and renders the table. A spec whose run
/// fails gets a row naming the failing stage.
pub fn emit_table1(specs: &[GroupSpec], config: &RunConfig) -> String {
    let rows: Vec<SummaryRow> = specs
        .iter()
        .map(|s| match run_pipeline(s, config) {
            Ok(b) => b.summary,
            Err(e) => SummaryRow {
                group: s.name.clone(),
                model_graph: format!("error: {e}"),
                bag_sizes: Vec::new(),
                source: None,
                out_of_scope: Some(e.to_string()),
            },
        })
        .collect();
    render_table1(&rows)
}

/// DOT of the model graph: nodes labelled by bag size, edges by adhesion.
pub fn model_dot(d: &DecompositionArtifact) -> String {
    let mut s = String::from("graph model {\n  node [shape=circle];\n");
    for (i, v) in d.model_vertices.iter().enumerate() {
        let _ = writeln!(s, "  h{i} [label=\"{}\", tooltip=\"stabilizer order {}\"];", v.bag_size, v.stabilizer_order);
    }
    for e in &d.model_edges {
        let _ = writeln!(s, "  h{} -- h{} [label=\"{}\"];", e.from, e.to, e.adhesion_size);
    }
    s.push_str("}\n");
    s
}

/// DOT of the bag graph of a decomposition, bag sizes as labels and
/// flagged bags dashed.
pub fn bag_graph_dot(d: &GlobalDecomposition) -> String {
    let mut s = String::from("graph bags {\n  node [shape=circle];\n");
    for (i, b) in d.bags.iter().enumerate() {
        let style = if b.boundary { ", style=dashed" } else { "" };
        let _ = writeln!(s, "  b{i} [label=\"{}\"{style}];", b.vertices.len());
    }
    for l in &d.links {
        let _ = writeln!(s, "  b{} -- b{} [label=\"{}\"];", l.a, l.b, l.adhesion.len());
    }
    s.push_str("}\n");
    s
}

/// DOT of a Cayley ball with edges labelled by generator.
pub fn ball_dot(ball: &CayleyBall) -> String {
    let mut s = String::from("digraph cayley {\n  node [shape=point];\n");
    for v in 0..ball.len() {
        let _ = writeln!(s, "  v{v} [tooltip=\"{}\"];", ball.render(v));
    }
    for (a, b, l) in ball.edges() {
        let _ = writeln!(s, "  v{a} -> v{b} [label=\"{}\"];", ball.label_name(l));
    }
    s.push_str("}\n");
    s
}
