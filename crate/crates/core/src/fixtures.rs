//! Group fixtures shipped with the repository (`fixtures/*.json`).

use crate::error::{Error, Result};
use crate::finite::FiniteGroupTable;
use crate::gog::{GogEdge, GraphOfGroups};
use crate::group::Group;
use crate::spec::GroupSpec;

pub const FREE2: &str = include_str!("../../../fixtures/free2.json");
pub const FREE3: &str = include_str!("../../../fixtures/free3.json");
pub const SL2Z: &str = include_str!("../../../fixtures/sl2z.json");
pub const SL2Z_AMALGAM: &str = include_str!("../../../fixtures/sl2z_amalgam.json");
pub const C2_C3: &str = include_str!("../../../fixtures/c2_c3.json");
pub const Z5: &str = include_str!("../../../fixtures/z5.json");
pub const AMALGAM_TEMPLATE: &str = include_str!("../../../fixtures/amalgam_template.json");
pub const SL3Z: &str = include_str!("../../../fixtures/sl3z.json");

pub const NAMES: &[&str] = &["free2", "free3", "sl2z", "sl2z_amalgam", "c2_c3", "z5", "amalgam_template", "sl3z"];

pub fn text(name: &str) -> Result<&'static str> {
    Ok(match name {
        "free2" => FREE2,
        "free3" => FREE3,
        "sl2z" => SL2Z,
        "sl2z_amalgam" => SL2Z_AMALGAM,
        "c2_c3" => C2_C3,
        "z5" => Z5,
        "amalgam_template" => AMALGAM_TEMPLATE,
        "sl3z" => SL3Z,
        _ => return Err(Error::NotFound(format!("fixture `{name}`"))),
    })
}

pub fn spec(name: &str) -> Result<GroupSpec> {
    GroupSpec::from_json(text(name)?)
}

pub fn load(name: &str) -> Result<Group> {
    spec(name)?.build()
}

pub fn sl2z_matrix() -> Group {
    load("sl2z").expect("fixture parses")
}

pub fn sl2z_amalgam() -> Group {
    load("sl2z_amalgam").expect("fixture parses")
}

pub fn c2_c3() -> Group {
    load("c2_c3").expect("fixture parses")
}

pub fn free2() -> Group {
    load("free2").expect("fixture parses")
}

pub fn z5() -> Group {
    load("z5").expect("fixture parses")
}

/// Free group of rank `n` with generators `x1..xn`.
pub fn free(n: usize) -> Group {
    let edges = (0..n)
        .map(|_| GogEdge {
            from: 0,
            to: 0,
            group: FiniteGroupTable::trivial(),
            into_from: vec![0],
            into_to: vec![0],
            tree: false,
        })
        .collect();
    let gog = GraphOfGroups::new(vec![FiniteGroupTable::trivial()], vec!["1".into()], edges).expect("valid rose");
    let gens = (0..n).map(|i| (format!("x{}", i + 1), format!("e{i}"))).collect();
    Group::from_gog(&format!("F_{n}"), gog, gens).expect("valid generators")
}

/// Cyclic group of order `n` with generator `x`.
pub fn cyclic(n: usize) -> Group {
    let gog = GraphOfGroups::new(vec![FiniteGroupTable::cyclic(n)], vec![format!("C{n}")], vec![])
        .expect("single vertex");
    Group::from_gog(&format!("Z/{n}"), gog, vec![("x".into(), "v0.1".into())]).expect("valid generator")
}
