//! Doubling search for a stable decomposition and the graph of groups it
//! describes.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::torsion::find_conjugator;
use super::{compute_global_decomposition, set_key, BagStrategy, DecompositionConfig, GlobalDecomposition};
use crate::cayley::{CayleyBall, DEFAULT_VERTEX_CAP};
use crate::error::{Error, Result};
use crate::finite::FiniteGroupTable;
use crate::gog::{GogEdge, GraphOfGroups};
use crate::group::{Element, Group};

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiscoveryConfig {
    pub r0: usize,
    pub max_doublings: usize,
    pub strategy: BagStrategy,
    pub vertex_cap: usize,
    /// Ball radius used for locality `r` is `r + extra_radius`.
    pub extra_radius: usize,
}

impl Default for DiscoveryConfig {
    fn default() -> Self {
        DiscoveryConfig {
            r0: 2,
            max_doublings: 5,
            strategy: BagStrategy::Cosets,
            vertex_cap: DEFAULT_VERTEX_CAP,
            extra_radius: 2,
        }
    }
}

/// Shape of a model graph with its vertex and edge group orders.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplittingSummary {
    pub vertex_orders: Vec<usize>,
    pub bag_sizes: Vec<usize>,
    /// `(from, to, edge group order, adhesion size)`.
    pub edges: Vec<(usize, usize, usize, usize)>,
}

impl SplittingSummary {
    pub fn of(d: &GlobalDecomposition) -> Self {
        SplittingSummary {
            vertex_orders: d.model_vertices.iter().map(|v| v.stabilizer.len()).collect(),
            bag_sizes: d.model_vertices.iter().map(|v| v.bag_size).collect(),
            edges: d
                .model_edges
                .iter()
                .map(|e| (e.from, e.to, e.edge_group.len(), e.adhesion_size))
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IterationSummary {
    pub r: usize,
    pub ball_radius: usize,
    pub ball_size: usize,
    pub splitting: Option<SplittingSummary>,
    pub same_as_previous: bool,
    pub note: Option<String>,
}

#[derive(Clone, Debug)]
pub struct DiscoveryResult {
    pub stabilized: bool,
    /// The locality at which the decomposition stabilized.
    pub final_r: Option<usize>,
    pub gog: Option<GraphOfGroups>,
    pub decomposition: Option<GlobalDecomposition>,
    pub transcript: Vec<IterationSummary>,
    pub diagnosis: Option<String>,
}

/// Model graphs isomorphic with matching vertex and edge group orders, and
/// matched vertex stabilizers conjugate in the ball of `b`.
pub fn same_splitting(a: &GlobalDecomposition, b: &GlobalDecomposition) -> bool {
    let (sa, sb) = (SplittingSummary::of(a), SplittingSummary::of(b));
    let n = sa.vertex_orders.len();
    if n != sb.vertex_orders.len() || sa.edges.len() != sb.edges.len() {
        return false;
    }
    if n > 8 {
        return sa == sb;
    }
    let ball = b.ball();
    let compat: Vec<Vec<bool>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    sa.vertex_orders[i] == sb.vertex_orders[j]
                        && sa.bag_sizes[i] == sb.bag_sizes[j]
                        && find_conjugator(ball, &a.model_vertices[i].stabilizer, &b.model_vertices[j].stabilizer)
                            .is_some()
                })
                .collect()
        })
        .collect();
    let norm = |e: &(usize, usize, usize, usize), p: &[usize]| {
        let (x, y) = (p[e.0], p[e.1]);
        (x.min(y), x.max(y), e.2, e.3)
    };
    let mut target: Vec<_> = sb.edges.iter().map(|e| norm(e, &(0..n).collect::<Vec<_>>())).collect();
    target.sort();
    let mut perm: Vec<usize> = Vec::new();
    let mut used = vec![false; n];
    fn search(
        i: usize,
        n: usize,
        compat: &[Vec<bool>],
        perm: &mut Vec<usize>,
        used: &mut [bool],
        check: &dyn Fn(&[usize]) -> bool,
    ) -> bool {
        if i == n {
            return check(perm);
        }
        for j in 0..n {
            if !used[j] && compat[i][j] {
                used[j] = true;
                perm.push(j);
                if search(i + 1, n, compat, perm, used, check) {
                    return true;
                }
                perm.pop();
                used[j] = false;
            }
        }
        false
    }
    let check = |p: &[usize]| {
        let mut mapped: Vec<_> = sa.edges.iter().map(|e| norm(e, p)).collect();
        mapped.sort();
        mapped == target
    };
    search(0, n, &compat, &mut perm, &mut used, &check)
}

fn table_of(g: &Group, elems: &[Element]) -> Result<(FiniteGroupTable, HashMap<Element, usize>)> {
    let id = g.identity();
    let mut order: Vec<Element> = vec![id.clone()];
    order.extend(elems.iter().filter(|e| **e != id).cloned());
    if order.len() != elems.len() {
        return Err(Error::InvalidTable("stabilizer does not contain the identity".into()));
    }
    let index: HashMap<Element, usize> = order.iter().enumerate().map(|(i, e)| (e.clone(), i)).collect();
    let mut rows = Vec::new();
    for a in &order {
        let mut row = Vec::new();
        for b in &order {
            let p = g.mul(a, b);
            row.push(*index.get(&p).ok_or_else(|| Error::InvalidTable("stabilizer not closed".into()))?);
        }
        rows.push(row);
    }
    let labels = order.iter().map(|e| g.render(e)).collect();
    Ok((FiniteGroupTable::from_table(rows, Some(labels))?, index))
}

/// Graph of groups read off a decomposition: vertex groups are stabilizers
/// of orbit representatives, edge groups the common stabilizers of the two
/// translated end bags, embedded by conjugating back to the
/// representatives.
pub fn graph_of_groups(d: &GlobalDecomposition) -> Result<GraphOfGroups> {
    let g = d.group();
    let mut tables = Vec::new();
    let mut indices = Vec::new();
    for v in &d.model_vertices {
        let (t, idx) = table_of(g, &v.stabilizer)?;
        tables.push(t);
        indices.push(idx);
    }
    let mut edges = Vec::new();
    for e in &d.model_edges {
        let (et, _) = table_of(g, &e.edge_group)?;
        let labels = et.labels().expect("labelled").to_vec();
        let order: Vec<Element> = std::iter::once(g.identity())
            .chain(e.edge_group.iter().filter(|x| !g.is_identity(x)).cloned())
            .collect();
        debug_assert_eq!(order.len(), labels.len());
        let embed = |end: &[Element], target: usize| -> Result<Vec<usize>> {
            let (key, x) = set_key(g, end);
            if key != d.model_vertices[target].representative {
                return Err(Error::Uncertified("edge end is not a translate of its orbit representative".into()));
            }
            let xi = g.inverse(&x);
            order
                .iter()
                .map(|h| {
                    indices[target]
                        .get(&g.mul(&g.mul(&xi, h), &x))
                        .copied()
                        .ok_or_else(|| Error::Uncertified("edge group does not embed".into()))
                })
                .collect()
        };
        edges.push(GogEdge {
            from: e.from,
            to: e.to,
            into_from: embed(&e.ends[0], e.from)?,
            into_to: embed(&e.ends[1], e.to)?,
            group: et,
            tree: false,
        });
    }
    let names = (0..tables.len()).map(|i| format!("h{i}")).collect();
    GraphOfGroups::new(tables, names, edges)
}

/// Doubling search: decompose at r, 2r, 4r, ... and stop once two
/// consecutive model graphs agree.
pub fn discover_graph_of_groups(group: Arc<Group>, config: &DiscoveryConfig) -> Result<DiscoveryResult> {
    if config.max_doublings < 1 {
        return Err(Error::Precondition("max-doublings must be at least 1".into()));
    }
    if config.r0 < 1 {
        return Err(Error::Precondition("r0 must be positive".into()));
    }
    let mut transcript = Vec::new();
    let mut prev: Option<GlobalDecomposition> = None;
    let mut r = config.r0;
    for _ in 0..=config.max_doublings {
        let radius = r + config.extra_radius;
        let ball = match CayleyBall::build(group.clone(), radius, config.vertex_cap) {
            Ok(b) => Arc::new(b),
            Err(e @ Error::CapExceeded { .. }) => {
                transcript.push(IterationSummary {
                    r,
                    ball_radius: radius,
                    ball_size: 0,
                    splitting: None,
                    same_as_previous: false,
                    note: Some(e.to_string()),
                });
                return Ok(DiscoveryResult {
                    stabilized: false,
                    final_r: None,
                    gog: prev.as_ref().and_then(|d| graph_of_groups(d).ok()),
                    decomposition: prev,
                    transcript,
                    diagnosis: Some(format!("capped before stabilization: {e}")),
                });
            }
            Err(e) => return Err(e),
        };
        let cfg = DecompositionConfig::new(r).with_strategy(config.strategy);
        let d = compute_global_decomposition(ball.clone(), cfg)?;
        let same = prev.as_ref().is_some_and(|p| same_splitting(p, &d));
        transcript.push(IterationSummary {
            r,
            ball_radius: radius,
            ball_size: ball.len(),
            splitting: Some(SplittingSummary::of(&d)),
            same_as_previous: same,
            note: d.warnings.first().cloned(),
        });
        if same {
            let p = prev.take().expect("previous iteration");
            let gog = graph_of_groups(&p)?;
            return Ok(DiscoveryResult {
                stabilized: true,
                final_r: Some(r / 2),
                gog: Some(gog),
                decomposition: Some(p),
                transcript,
                diagnosis: None,
            });
        }
        prev = Some(d);
        r *= 2;
    }
    Ok(DiscoveryResult {
        stabilized: false,
        final_r: None,
        gog: prev.as_ref().and_then(|d| graph_of_groups(d).ok()),
        decomposition: prev,
        transcript,
        diagnosis: Some(format!("no two consecutive iterations agreed within {} doublings", config.max_doublings)),
    })
}
