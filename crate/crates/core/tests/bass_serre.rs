use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rlocal::bass_serre::*;
use rlocal::cayley::{CayleyBall, DEFAULT_VERTEX_CAP};
use rlocal::decomposition::{compute_global_decomposition, DecompositionConfig};
use rlocal::finite::FiniteGroupTable;
use rlocal::gog::{GogEdge, GraphOfGroups};
use rlocal::{fixtures, Element, Group, Letter};

fn tree(g: &Group, radius: usize) -> BassSerreTreePortion {
    BassSerreTreePortion::build(g.gog().unwrap(), radius).unwrap()
}

fn line() -> GraphOfGroups {
    GraphOfGroups::new(
        vec![FiniteGroupTable::trivial()],
        vec!["1".into()],
        vec![GogEdge {
            from: 0,
            to: 0,
            group: FiniteGroupTable::trivial(),
            into_from: vec![0],
            into_to: vec![0],
            tree: false,
        }],
    )
    .unwrap()
}

fn elem(g: &Group, w: &str) -> Element {
    g.normal_form(w).unwrap()
}

/// Sphere sizes of the Bass–Serre tree of `A *_C B` seen from the `A`
/// vertex: each `A`-vertex has `p = [A:C]` neighbors, each `B`-vertex
/// `q = [B:C]`.
fn amalgam_spheres(p: usize, q: usize, radius: usize) -> Vec<usize> {
    let mut out = vec![1, p];
    for d in 2..=radius {
        let branch = if d % 2 == 0 { q - 1 } else { p - 1 };
        out.push(out[d - 1] * branch);
    }
    out.truncate(radius + 1);
    out
}

#[test]
fn trivial_graph_of_groups_gives_a_point() {
    let gog = GraphOfGroups::new(vec![FiniteGroupTable::trivial()], vec!["1".into()], vec![]).unwrap();
    let t = BassSerreTreePortion::build(&gog, 4).unwrap();
    assert_eq!(t.len(), 1);
    assert!(t.is_tree());
}

#[test]
fn sl2z_amalgam_tree_branches_two_and_three() {
    let t = tree(&fixtures::sl2z_amalgam(), 2);
    assert_eq!(t.degree(0), 2);
    for &(j, _) in &t.adjacency[0] {
        assert_eq!(t.vertices[j].kind, 1);
        assert_eq!(t.degree(j), 3);
    }
    assert_eq!(t.sphere_sizes(), amalgam_spheres(2, 3, 2));
}

#[test]
fn tree_sphere_sizes_match_coset_counts() {
    let t = tree(&fixtures::c2_c3(), 3);
    assert!(t.is_tree());
    assert_eq!(t.sphere_sizes(), amalgam_spheres(2, 3, 3));
    let t = tree(&fixtures::load("amalgam_template").unwrap(), 5);
    assert_eq!(t.sphere_sizes(), amalgam_spheres(3, 2, 5));
    let t = tree(&fixtures::free2(), 4);
    assert_eq!(t.sphere_sizes(), vec![1, 4, 12, 36, 108]);
    let t = BassSerreTreePortion::build(&line(), 5).unwrap();
    assert_eq!(t.sphere_sizes(), vec![1, 2, 2, 2, 2, 2]);
}

#[test]
fn interior_degrees_are_coset_counts() {
    for name in ["sl2z_amalgam", "c2_c3", "free2", "amalgam_template", "z5"] {
        let t = tree(&fixtures::load(name).unwrap(), 4);
        assert!(t.is_tree(), "{name}");
        for (i, v) in t.vertices.iter().enumerate() {
            if v.depth < t.radius {
                assert_eq!(t.degree(i), t.expected_degree(v.kind), "{name}");
            }
        }
    }
}

#[test]
fn classification_examples() {
    let g = fixtures::sl2z_amalgam();
    let t = tree(&g, 6);
    assert_eq!(classify_element(&t, &g.identity()).unwrap(), ElementAction::Elliptic { vertex: vec![] });
    assert_eq!(classify_element(&t, &elem(&g, "S")).unwrap(), ElementAction::Elliptic { vertex: vec![] });
    let st = classify_element(&t, &elem(&g, "S T")).unwrap();
    let ElementAction::Elliptic { vertex } = st else { panic!("{st:?}") };
    assert_eq!(t.gog().end_vertex(&vertex), 1);
    assert_eq!(classify_element(&t, &elem(&g, "T")).unwrap().name(), "hyperbolic");

    let h = fixtures::c2_c3();
    let t = tree(&h, 6);
    let ab = classify_element(&t, &elem(&h, "a b")).unwrap();
    assert_eq!(ab.translation_length(), 2);
    let ElementAction::Hyperbolic { axis, .. } = &ab else { panic!() };
    assert!(axis.len() >= 2);
}

#[test]
fn small_portions_are_refused() {
    let h = fixtures::c2_c3();
    let t = tree(&h, 1);
    assert!(classify_element(&t, &elem(&h, "a b a b a b")).is_err());
    assert!(classify_element(&fixtures_tree_matrix(), &fixtures::sl2z_matrix().identity()).is_err());
}

fn fixtures_tree_matrix() -> BassSerreTreePortion {
    tree(&fixtures::sl2z_amalgam(), 3)
}

#[test]
fn translation_lengths_scale_with_powers() {
    let h = fixtures::c2_c3();
    let t = tree(&h, 12);
    for w in ["a b", "a b^2 a b", "a b a b^2"] {
        let x = elem(&h, w);
        let l = classify_element(&t, &x).unwrap().translation_length();
        assert!(l > 0);
        for k in 1..=4 {
            assert_eq!(classify_element(&t, &h.pow(&x, k)).unwrap().translation_length(), k as usize * l, "{w}^{k}");
        }
    }
}

fn random_word(g: &Group, rng: &mut ChaCha8Rng, max: usize) -> Element {
    let n = rng.gen_range(0..=max);
    let word: Vec<Letter> = (0..n)
        .map(|_| Letter { gen: rng.gen_range(0..g.generator_names().len()), inv: rng.gen_bool(0.5) })
        .collect();
    g.eval_word(&word)
}

#[test]
fn torsion_is_never_hyperbolic() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut checked = 0;
    for name in ["sl2z_amalgam", "c2_c3", "amalgam_template", "z5", "free2"] {
        let g = fixtures::load(name).unwrap();
        let gog = g.gog().unwrap().clone();
        let torsion: Vec<Element> = (0..gog.vertex_count())
            .flat_map(|v| (0..gog.vertex_group(v).order()).map(move |h| (v, h)))
            .map(|(v, h)| Element::NormalForm(gog.vertex_element(v, h).unwrap()))
            .collect();
        let t = tree(&g, 9);
        for x in &torsion {
            assert_ne!(classify_element(&t, x).unwrap().name(), "hyperbolic");
            checked += 1;
        }
        for _ in 0..100 {
            let d = random_word(&g, &mut rng, 6);
            let x = &torsion[rng.gen_range(0..torsion.len())];
            let c = g.mul(&g.mul(&d, x), &g.inverse(&d));
            assert_ne!(classify_element(&t, &c).unwrap().name(), "hyperbolic", "{}", g.render(&c));
            checked += 1;
        }
    }
    assert!(checked >= 500);
}

#[test]
fn classification_is_a_class_function() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for name in ["sl2z_amalgam", "c2_c3", "free2"] {
        let g = fixtures::load(name).unwrap();
        let t = tree(&g, if name == "free2" { 8 } else { 12 });
        for _ in 0..30 {
            let x = random_word(&g, &mut rng, 4);
            let d = random_word(&g, &mut rng, 3);
            let y = g.mul(&g.mul(&d, &x), &g.inverse(&d));
            let (a, b) = (classify_element(&t, &x).unwrap(), classify_element(&t, &y).unwrap());
            assert_eq!((a.name(), a.translation_length()), (b.name(), b.translation_length()));
        }
    }
}

fn decomposition(g: Group, radius: usize, r: usize) -> rlocal::decomposition::GlobalDecomposition {
    let ball = Arc::new(CayleyBall::build(Arc::new(g), radius, DEFAULT_VERTEX_CAP).unwrap());
    compute_global_decomposition(ball, DecompositionConfig::new(r)).unwrap()
}

#[test]
fn torsion_locations() {
    let g = fixtures::sl2z_amalgam();
    let d = decomposition(g.clone(), 10, 6);
    let t = tree(&g, 6);
    let s2 = locate_torsion(&d, &t, &elem(&g, "S^2")).unwrap();
    assert_eq!(s2.bags.len(), 2);
    assert_eq!(s2.adhesion.as_ref().unwrap().len(), 2);
    assert!(s2.contains_cyclic);
    let st = locate_torsion(&d, &t, &elem(&g, "S T")).unwrap();
    assert_eq!(st.bags.len(), 1);
    assert_eq!(d.bags[st.bags[0]].elements.len(), 6);
    assert!(st.contains_cyclic);
    assert_eq!(st.fixed_group_order, Some(6));
    // a conjugate is located in a translated bag
    let c = elem(&g, "T S T^-1");
    let loc = locate_torsion(&d, &t, &c).unwrap();
    assert_eq!(loc.bags.len(), 1);
    assert_eq!(d.bags[loc.bags[0]].elements.len(), 4);
    assert!(locate_torsion(&d, &t, &elem(&g, "T")).is_err());

    let h = fixtures::c2_c3();
    let d = decomposition(h.clone(), 8, 3);
    let t = tree(&h, 4);
    let a = locate_torsion(&d, &t, &elem(&h, "a")).unwrap();
    assert_eq!(a.bags.len(), 1);
    assert_eq!(d.bags[a.bags[0]].elements.len(), 2);
    assert!(locate_torsion(&d, &tree(&g, 4), &elem(&h, "a")).is_err());
}

fn perturb(t: &mut BassSerreTreePortion) {
    // move one deepest leaf under a different vertex one level up
    let leaf = (0..t.len()).rev().find(|&i| t.vertices[i].depth == t.radius).unwrap();
    let (parent, y) = t.adjacency[leaf][0];
    let other = (0..t.len())
        .find(|&i| i != parent && t.vertices[i].depth + 1 == t.radius && t.vertices[i].kind == t.vertices[parent].kind)
        .unwrap();
    t.adjacency[parent].retain(|&(j, _)| j != leaf);
    t.adjacency[leaf] = vec![(other, y)];
    t.adjacency[other].push((leaf, y ^ 1));
}

#[test]
fn sl2z_bag_graph_is_the_amalgam_tree() {
    let amalgam = Arc::new(fixtures::sl2z_amalgam());
    let d = decomposition(fixtures::sl2z_matrix(), 10, 6);
    let mut t = tree(&amalgam, 3);
    let rep = verify_equivariant_isomorphism(&d, &t, &amalgam, 3, 7).unwrap();
    assert!(rep.pass, "{rep:?}");
    assert_eq!(rep.tree_vertices, amalgam_spheres(2, 3, 3).iter().sum::<usize>());
    assert_eq!(rep.bag_vertices, rep.tree_vertices);
    assert!(rep.intertwining_checks > 0);

    perturb(&mut t);
    let rep = verify_equivariant_isomorphism(&d, &t, &amalgam, 3, 7).unwrap();
    assert!(!rep.pass);
    assert!(rep.witness.unwrap().contains("tree edge"));
}

#[test]
fn free_group_bag_graph_is_the_cayley_tree() {
    let g = Arc::new(fixtures::free2());
    let d = decomposition((*g).clone(), 6, 3);
    let t = tree(&g, 2);
    let rep = verify_equivariant_isomorphism(&d, &t, &g, 2, 3).unwrap();
    assert!(rep.pass, "{rep:?}");
    assert_eq!(rep.tree_vertices, 17);
}

#[test]
fn elementarity() {
    let t = BassSerreTreePortion::build(&line(), 4).unwrap();
    assert!(!is_non_elementary(&t).unwrap().non_elementary);
    assert!(is_non_elementary(&tree(&fixtures::c2_c3(), 4)).unwrap().non_elementary);
    assert!(is_non_elementary(&tree(&fixtures::sl2z_amalgam(), 4)).unwrap().non_elementary);
    assert!(!is_non_elementary(&tree(&fixtures::z5(), 4)).unwrap().non_elementary);
    assert!(is_non_elementary(&tree(&fixtures::c2_c3(), 1)).is_err());
}

#[test]
fn thresholds() {
    assert_eq!(small_index_threshold(1, 1, 0).unwrap(), 1);
    assert_eq!(small_index_threshold(2, 6, 2).unwrap(), 4);
    assert_eq!(small_index_threshold(2, 3, 1).unwrap(), 2);
    assert_eq!(small_index_threshold(5, 5, 200).unwrap(), 25);
    assert!(small_index_threshold(0, 1, 1).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn threshold_is_the_minimum(n in 1u64..1000, b in 1u64..1000, a in 0u32..40) {
        let t = small_index_threshold(n, b, a).unwrap();
        prop_assert!(t <= (n * b) as u128 && t <= 1u128 << a);
        prop_assert!(t == (n * b) as u128 || t == 1u128 << a);
    }

    #[test]
    fn tree_action_is_an_isometry(seed in 0u64..1000) {
        let g = fixtures::sl2z_amalgam();
        let t = tree(&g, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = random_word(&g, &mut rng, 5);
        let Element::NormalForm(nf) = &x else { unreachable!() };
        for i in 0..t.len() {
            for &(j, _) in &t.adjacency[i] {
                let (a, b) = (t.act(nf, &t.vertices[i].path), t.act(nf, &t.vertices[j].path));
                prop_assert_eq!(tree_distance(&a, &b), 1);
            }
        }
    }
}
