use std::sync::Arc;

use num_bigint::BigUint;
use num_rational::Rational64;
use proptest::prelude::*;
use rlocal::cayley::{CayleyBall, DEFAULT_VERTEX_CAP};
use rlocal::finite::FiniteGroupTable;
use rlocal::gog::{GraphOfGroups, NormalForm};
use rlocal::matrix::Matrix;
use rlocal::subgroups::*;
use rlocal::{fixtures, Element, Letter};

fn pos(gen: usize) -> Letter {
    Letter { gen, inv: false }
}

fn word(spec: &[(usize, i32)]) -> Vec<Letter> {
    let mut w = Vec::new();
    for &(g, e) in spec {
        for _ in 0..e.unsigned_abs() {
            w.push(Letter { gen: g, inv: e < 0 });
        }
    }
    w
}

fn certify(gog: &GraphOfGroups) -> (FiniteQuotientHom, SubgroupCertificate) {
    let hom = construct_finite_quotient(gog).unwrap();
    let cert = reidemeister_schreier(&kernel_subgroup(&hom), &hom.presentation);
    (hom, cert)
}

/// Image of a normal form under the hom, read off the path form directly.
fn path_image(gog: &GraphOfGroups, hom: &FiniteQuotientHom, nf: &NormalForm) -> usize {
    let t = &hom.target;
    let (pres, atoms) = Presentation::of_gog(gog);
    let stable = |e: usize| {
        atoms.iter().position(|a| *a == Atom::Edge(e)).map(|i| hom.images[i]).unwrap_or(0)
    };
    let _ = pres;
    let mut x = 0;
    let mut at = 0;
    for &(g, y) in &nf.pairs {
        x = t.mul(x, hom.vertex_maps[at][g as usize]);
        let e = stable((y / 2) as usize);
        x = t.mul(x, if y % 2 == 0 { e } else { t.inv(e) });
        at = gog.target(y as usize);
    }
    t.mul(x, hom.vertex_maps[0][nf.tail as usize])
}

#[test]
fn todd_coxeter_on_known_presentations() {
    // S3 = <a, b | a^2, b^3, (ab)^2>
    let s3 = Presentation {
        generators: vec!["a".into(), "b".into()],
        relators: vec![word(&[(0, 2)]), word(&[(1, 3)]), word(&[(0, 1), (1, 1), (0, 1), (1, 1)])],
    };
    assert_eq!(enumerate_cosets(&s3, &[], DEFAULT_COSET_CAP).unwrap().index(), 6);
    assert_eq!(enumerate_cosets(&s3, &[word(&[(0, 1)])], DEFAULT_COSET_CAP).unwrap().index(), 3);
    assert_eq!(enumerate_cosets(&s3, &[word(&[(1, 1)])], DEFAULT_COSET_CAP).unwrap().index(), 2);
    // A5 = <a, b | a^2, b^3, (ab)^5>
    let a5 = Presentation {
        generators: vec!["a".into(), "b".into()],
        relators: vec![word(&[(0, 2)]), word(&[(1, 3)]), [0, 1].repeat(5).into_iter().map(pos).collect()],
    };
    assert_eq!(enumerate_cosets(&a5, &[], DEFAULT_COSET_CAP).unwrap().index(), 60);
    assert_eq!(enumerate_cosets(&a5, &[word(&[(1, 1)])], DEFAULT_COSET_CAP).unwrap().index(), 20);
    // Z with a proper subgroup; free group without relators
    let z = Presentation { generators: vec!["t".into()], relators: vec![] };
    assert_eq!(enumerate_cosets(&z, &[word(&[(0, 7)])], DEFAULT_COSET_CAP).unwrap().index(), 7);
    assert!(enumerate_cosets(&z, &[], 100).is_err());
}

#[test]
fn coset_tables_are_permutations() {
    let a5 = Presentation {
        generators: vec!["a".into(), "b".into()],
        relators: vec![word(&[(0, 2)]), word(&[(1, 3)]), [0, 1].repeat(5).into_iter().map(pos).collect()],
    };
    let t = enumerate_cosets(&a5, &[], DEFAULT_COSET_CAP).unwrap();
    for c in 0..t.index() {
        for x in 0..4 {
            assert_eq!(t.table[t.table[c][x]][x ^ 1], c);
        }
    }
}

#[test]
fn trivial_group_has_trivial_quotient() {
    let gog = GraphOfGroups::new(vec![FiniteGroupTable::trivial()], vec!["1".into()], vec![]).unwrap();
    let (hom, cert) = certify(&gog);
    assert_eq!(hom.image_order, 1);
    assert_eq!(cert.index, 1);
    assert_eq!(cert.transversal, vec![Vec::<Letter>::new()]);
    assert_eq!(cert.rank, Some(0));
}

#[test]
fn free_group_kernels() {
    let f2 = fixtures::free2();
    let gog = f2.gog().unwrap();
    let (hom, mut cert) = certify(gog);
    assert_eq!(cert.index, 1);
    assert_eq!(cert.rank, Some(2));
    assert!(verify_torsion_free(&hom, &mut cert, &torsion_representatives(gog)));

    // kernel of F2 -> Z/2 killing b
    let (pres, _) = Presentation::of_gog(gog);
    let hom = FiniteQuotientHom::new(pres.clone(), FiniteGroupTable::cyclic(2), vec![1, 0], "Z/2").unwrap();
    let k = kernel_subgroup(&hom);
    assert_eq!(k.index, 2);
    let cert = reidemeister_schreier(&k, &pres);
    assert_eq!(cert.rank, Some(3));
    let basis = cert.basis.unwrap();
    assert!(basis.iter().all(|w| hom.image(w) == 0));
    let tc = enumerate_cosets(&pres, &basis, DEFAULT_COSET_CAP).unwrap();
    assert_eq!(tc.index(), 2);
}

#[test]
fn c2_c3_free_kernel() {
    let g = fixtures::c2_c3();
    let gog = g.gog().unwrap();
    let (hom, mut cert) = certify(gog);
    for (v, map) in hom.vertex_maps.iter().enumerate() {
        assert!(gog.vertex_group(v).is_injective_hom(map, &hom.target));
    }
    assert_eq!(cert.index, 6);
    assert_eq!(cert.transversal.len(), 6);
    assert!(verify_torsion_free(&hom, &mut cert, &torsion_representatives(gog)));
    let chi = euler_characteristic(gog);
    assert_eq!(chi, Rational64::new(-1, 6));
    assert_eq!(Rational64::from(cert.rank.unwrap() as i64), free_rank_from_euler(chi, cert.index));
    assert_eq!(cert.rank, Some(2));
    let basis = cert.basis.as_ref().unwrap();
    assert!(basis.iter().all(|w| hom.image(w) == 0));
    let tc = enumerate_cosets(&hom.presentation, basis, DEFAULT_COSET_CAP).unwrap();
    assert_eq!(tc.index(), cert.index);
    assert!(cert.index as u64 <= 36);
}

#[test]
fn sl2z_amalgam_free_kernel() {
    let g = fixtures::sl2z_amalgam();
    let gog = g.gog().unwrap();
    let (hom, mut cert) = certify(gog);
    assert!(verify_torsion_free(&hom, &mut cert, &torsion_representatives(gog)));
    let chi = euler_characteristic(gog);
    assert_eq!(chi, Rational64::new(-1, 12));
    let rank = cert.rank.expect("free");
    assert_eq!(Rational64::from(rank as i64), free_rank_from_euler(chi, cert.index));
    assert!(BigUint::from(cert.index) <= index_upper_bound(6, 2).unwrap());
    assert_eq!(cert.index, 12);
    assert_eq!(rank, 2);
}

#[test]
fn amalgam_template_free_kernel() {
    let g = fixtures::load("amalgam_template").unwrap();
    let gog = g.gog().unwrap();
    let (hom, mut cert) = certify(gog);
    assert!(verify_torsion_free(&hom, &mut cert, &torsion_representatives(gog)));
    let chi = euler_characteristic(gog);
    assert_eq!(chi, Rational64::new(1, 6) + Rational64::new(1, 4) - Rational64::new(1, 2));
    assert_eq!(Rational64::from(cert.rank.unwrap() as i64), free_rank_from_euler(chi, cert.index));
}

#[test]
fn torsion_free_agrees_with_ball_search() {
    for name in ["c2_c3", "sl2z_amalgam", "amalgam_template"] {
        let g = Arc::new(fixtures::load(name).unwrap());
        let gog = g.gog().unwrap();
        let (hom, _) = certify(gog);
        let ball = CayleyBall::build(g.clone(), 6, DEFAULT_VERTEX_CAP).unwrap();
        let mut torsion = 0;
        for x in ball.vertices() {
            if g.is_identity(x) || g.element_order(x, 24).is_none() {
                continue;
            }
            torsion += 1;
            let Element::NormalForm(nf) = x else { unreachable!() };
            assert_ne!(path_image(gog, &hom, nf), 0, "{name}: {}", g.render(x));
        }
        assert!(torsion > 10);
    }
}

#[test]
fn sl2z_mod_two_kernel_has_torsion() {
    let amalgam = Arc::new(fixtures::sl2z_amalgam());
    let matrices = fixtures::sl2z_matrix();
    let images: Vec<Matrix> = transport_atoms(&amalgam, &matrices, 4)
        .unwrap()
        .into_iter()
        .map(|e| match e {
            Element::Matrix(m) => m,
            _ => unreachable!(),
        })
        .collect();
    let (pres, _) = Presentation::of_gog(amalgam.gog().unwrap());
    let hom = FiniteQuotientHom::from_matrices(pres, &images, 2, 1000).unwrap();
    assert_eq!(hom.image_order, 6);
    let mut cert = kernel_subgroup(&hom);
    assert_eq!(cert.index, 6);
    assert!(!verify_torsion_free(&hom, &mut cert, &torsion_representatives(amalgam.gog().unwrap())));
    // S^2 is the element labelled s2 in the C4 vertex group
    assert!(cert.torsion_witnesses.iter().any(|w| w.starts_with("C4:s2 ")), "{:?}", cert.torsion_witnesses);
    assert!(!cert.torsion_witnesses.iter().any(|w| w.starts_with("C4:s ")));
}

#[test]
fn transported_atoms_are_s_and_st() {
    let amalgam = Arc::new(fixtures::sl2z_amalgam());
    let m = fixtures::sl2z_matrix();
    let imgs = transport_atoms(&amalgam, &m, 4).unwrap();
    assert_eq!(imgs[0], m.normal_form("S").unwrap());
    assert_eq!(imgs[1], m.normal_form("S T").unwrap());
}

#[test]
fn euler_characteristics() {
    let trivial = GraphOfGroups::new(vec![FiniteGroupTable::trivial()], vec!["1".into()], vec![]).unwrap();
    assert_eq!(euler_characteristic(&trivial), Rational64::from(1));
    assert_eq!(euler_characteristic(fixtures::free2().gog().unwrap()), Rational64::from(-1));
    assert_eq!(euler_characteristic(fixtures::c2_c3().gog().unwrap()), Rational64::new(-1, 6));
}

#[test]
fn index_bounds() {
    assert_eq!(index_lower_bound(6, 6).unwrap(), 1);
    assert_eq!(index_lower_bound(1, 1).unwrap(), 1);
    assert_eq!(index_lower_bound(7, 3).unwrap(), 3);
    assert_eq!(index_upper_bound(6, 2).unwrap(), BigUint::from(518_400u32));
    assert_eq!(index_upper_bound(1, 5).unwrap(), BigUint::from(1u32));
    assert_eq!(index_upper_bound(3, 2).unwrap(), BigUint::from(36u32));
    assert!(index_lower_bound(0, 1).is_err());
    assert!(index_upper_bound(2, 0).is_err());
    assert_eq!(vertex_order_product(fixtures::sl2z_amalgam().gog().unwrap()), BigUint::from(24u32));
}

#[test]
fn certified_indices_sit_between_the_bounds() {
    for name in ["c2_c3", "sl2z_amalgam", "amalgam_template"] {
        let g = fixtures::load(name).unwrap();
        let gog = g.gog().unwrap();
        let (_, cert) = certify(gog);
        let b = (0..gog.vertex_count()).map(|v| gog.vertex_group(v).order() as u64).max().unwrap();
        let lower = index_lower_bound(b, b).unwrap();
        let upper = index_upper_bound(b, gog.vertex_count() as u32).unwrap();
        assert!(lower <= cert.index as u64 && BigUint::from(cert.index) <= upper, "{name}");
    }
}

#[test]
fn tietze_keeps_free_generators() {
    // <x, y, z | x y^-1> is free on two generators
    let r = tietze_reduce(vec![0, 1, 2], vec![word(&[(0, 1), (1, -1)])]);
    assert!(r.relators.is_empty());
    assert_eq!(r.generators.len(), 2);
    // <x | x^2> is not
    let r = tietze_reduce(vec![0], vec![word(&[(0, 2)])]);
    assert_eq!(r.relators.len(), 1);
}

fn s4() -> FiniteGroupTable {
    FiniteGroupTable::from_permutations(&[vec![1, 0, 2, 3], vec![1, 2, 3, 0]], 100).unwrap().0
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn free_group_kernels_follow_nielsen_schreier(a in 0usize..24, b in 0usize..24) {
        let f2 = fixtures::free2();
        let (pres, _) = Presentation::of_gog(f2.gog().unwrap());
        let hom = FiniteQuotientHom::new(pres.clone(), s4(), vec![a, b], "S4").unwrap();
        let cert = reidemeister_schreier(&kernel_subgroup(&hom), &pres);
        prop_assert_eq!(cert.rank, Some(cert.index + 1));
        let basis = cert.basis.unwrap();
        prop_assert!(basis.iter().all(|w| hom.image(w) == 0));
        prop_assert_eq!(enumerate_cosets(&pres, &basis, DEFAULT_COSET_CAP).unwrap().index(), cert.index);
        // transversal is prefix closed
        for t in &cert.transversal {
            if !t.is_empty() {
                prop_assert!(cert.transversal.contains(&t[..t.len() - 1].to_vec()));
            }
        }
    }
}

