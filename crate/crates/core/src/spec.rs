//! JSON group specifications (`"format": "rlocal/1"`).

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::finite::FiniteGroupTable;
use crate::gog::{GogEdge, GraphOfGroups};
use crate::group::{Backend, Group};
use crate::matrix::{Matrix, MatrixGroupSpec};

pub const FORMAT: &str = "rlocal/1";

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableSpec {
    Cyclic(usize),
    /// Full multiplication table, identity at index 0.
    Table(Vec<Vec<usize>>),
    /// Generating permutations of `0..n`; elements are indexed in BFS order.
    Permutations(Vec<Vec<usize>>),
}

impl TableSpec {
    pub fn build(&self) -> Result<FiniteGroupTable> {
        match self {
            TableSpec::Cyclic(0) => Err(Error::Spec("cyclic group of order 0".into())),
            TableSpec::Cyclic(n) => Ok(FiniteGroupTable::cyclic(*n)),
            TableSpec::Table(t) => FiniteGroupTable::from_table(t.clone(), None),
            TableSpec::Permutations(p) => Ok(FiniteGroupTable::from_permutations(p, 100_000)?.0),
        }
    }

    pub fn from_table(t: &FiniteGroupTable) -> Self {
        TableSpec::Table(t.table())
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VertexSpec {
    pub name: String,
    pub group: TableSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EdgeSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub from: usize,
    pub to: usize,
    pub group: TableSpec,
    pub into_from: Vec<usize>,
    pub into_to: Vec<usize>,
    #[serde(default)]
    pub tree: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WordGenerator {
    pub name: String,
    pub word: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MatrixGenerator {
    pub name: String,
    pub matrix: Vec<Vec<i64>>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "backend", rename_all = "snake_case")]
pub enum GroupBody {
    GraphOfGroups { vertices: Vec<VertexSpec>, edges: Vec<EdgeSpec>, generators: Vec<WordGenerator> },
    Matrix {
        dimension: usize,
        #[serde(default)]
        special_linear: bool,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        modulus: Option<u64>,
        generators: Vec<MatrixGenerator>,
    },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GroupSpec {
    pub format: String,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    /// Marks fixtures whose full pipeline is declared out of scope.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_of_scope: Option<String>,
    #[serde(flatten)]
    pub body: GroupBody,
}

impl GroupSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: GroupSpec = serde_json::from_str(text).map_err(|e| Error::Spec(e.to_string()))?;
        if spec.format != FORMAT {
            return Err(Error::Spec(format!("unsupported format `{}` (expected `{FORMAT}`)", spec.format)));
        }
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("group spec serializes")
    }

    pub fn build(&self) -> Result<Group> {
        match &self.body {
            GroupBody::GraphOfGroups { vertices, edges, generators } => {
                let mut tables = Vec::new();
                let mut names = Vec::new();
                for v in vertices {
                    let mut t = v.group.build()?;
                    if let Some(l) = &v.labels {
                        t = t.with_labels(l.clone())?;
                    }
                    tables.push(t);
                    names.push(v.name.clone());
                }
                let mut es = Vec::new();
                for e in edges {
                    es.push(GogEdge {
                        from: e.from,
                        to: e.to,
                        group: e.group.build()?,
                        into_from: e.into_from.clone(),
                        into_to: e.into_to.clone(),
                        tree: e.tree,
                    });
                }
                let gog = GraphOfGroups::new(tables, names, es)?;
                Group::from_gog(
                    &self.name,
                    gog,
                    generators.iter().map(|g| (g.name.clone(), g.word.clone())).collect(),
                )
            }
            GroupBody::Matrix { dimension, special_linear, modulus, generators } => {
                let gens = generators
                    .iter()
                    .map(|g| Ok((g.name.clone(), Matrix::from_rows(&g.matrix)?)))
                    .collect::<Result<Vec<_>>>()?;
                let spec = MatrixGroupSpec::new(*dimension, gens, modulus.map(BigInt::from), *special_linear)?;
                Group::from_matrices(&self.name, spec)
            }
        }
    }

    /// Spec describing a graph of groups with the given named generators.
    pub fn from_gog(name: &str, gog: &GraphOfGroups, generators: Vec<WordGenerator>) -> Self {
        let vertices = (0..gog.vertex_count())
            .map(|v| VertexSpec {
                name: gog.vertex_name(v).to_string(),
                group: TableSpec::from_table(gog.vertex_group(v)),
                labels: gog.vertex_group(v).labels().map(|l| l.to_vec()),
            })
            .collect();
        let edges = gog
            .edges()
            .iter()
            .map(|e| EdgeSpec {
                name: None,
                from: e.from,
                to: e.to,
                group: TableSpec::from_table(&e.group),
                into_from: e.into_from.clone(),
                into_to: e.into_to.clone(),
                tree: e.tree,
            })
            .collect();
        GroupSpec {
            format: FORMAT.into(),
            name: name.into(),
            description: None,
            out_of_scope: None,
            body: GroupBody::GraphOfGroups { vertices, edges, generators },
        }
    }
}

/// Spec of an already built group, for embedding in artifacts.
pub fn spec_of(group: &Group) -> GroupSpec {
    match group.backend() {
        Backend::GraphOfGroups(g) => {
            let gens = group
                .generator_names()
                .iter()
                .enumerate()
                .map(|(i, n)| WordGenerator { name: n.clone(), word: group.render(group.generator(i)) })
                .collect();
            GroupSpec::from_gog(group.name(), g, gens)
        }
        Backend::Matrix(m) => GroupSpec {
            format: FORMAT.into(),
            name: group.name().into(),
            description: None,
            out_of_scope: None,
            body: GroupBody::Matrix {
                dimension: m.dimension,
                special_linear: m.special_linear,
                modulus: m.modulus.as_ref().map(|q| q.to_string().parse().expect("modulus fits u64")),
                generators: m
                    .generators
                    .iter()
                    .map(|(n, x)| MatrixGenerator {
                        name: n.clone(),
                        matrix: x
                            .rows()
                            .iter()
                            .map(|r| r.iter().map(|v| v.to_string().parse().expect("generator entries fit i64")).collect())
                            .collect(),
                    })
                    .collect(),
            },
        },
    }
}
