use std::sync::Arc;

use num_rational::Rational64;
use rlocal::cayley::{enumerate_short_cycles, CayleyBall, Cycle, DEFAULT_VERTEX_CAP};
use rlocal::cover::{
    classify_cycle_lift, estimate_displacement, lift_element_action, order_threshold, verify_ball_preservation,
    CycleLift, TruncatedCover,
};
use rlocal::{fixtures, Group};

fn ball(g: Group, r: usize) -> Arc<CayleyBall> {
    Arc::new(CayleyBall::build(Arc::new(g), r, DEFAULT_VERTEX_CAP).unwrap())
}

fn is_path(cover: &TruncatedCover, n: usize) -> bool {
    let certified: Vec<usize> = cover.certified().collect();
    let edges = cover.edges().into_iter().filter(|&(a, b, _)| cover.is_certified(a) && cover.is_certified(b)).count();
    let ends = certified
        .iter()
        .filter(|&&c| cover.neighbors(c).iter().filter(|(_, t)| cover.is_certified(*t)).count() == 1)
        .count();
    certified.len() == n && edges == n - 1 && ends == 2
}

#[test]
fn tree_base_cover_is_the_base() {
    let b = ball(fixtures::free2(), 6);
    let c = TruncatedCover::build(b.clone(), 6, 3).unwrap();
    assert_eq!(c.certified().count(), b.within(3).count());
    assert_eq!(c.identifications(), 0);
    assert!(verify_ball_preservation(&c, 3).pass);
    let d = estimate_displacement(&c);
    assert_eq!(d.value, None);
    assert!(!d.exact);
}

#[test]
fn five_cycle_with_large_r_is_the_base() {
    let b = ball(fixtures::z5(), 5);
    let c = TruncatedCover::build(b.clone(), 5, 5).unwrap();
    assert_eq!(c.len(), 5);
    assert_eq!(c.edges().len(), 5);
    let cyc = &enumerate_short_cycles(&b, 5).cycles[0];
    assert_eq!(classify_cycle_lift(&c, cyc).unwrap(), CycleLift::LiftsClosed);
}

#[test]
fn five_cycle_small_r_unfolds_to_a_line() {
    let b = ball(fixtures::z5(), 5);
    let c = TruncatedCover::build(b.clone(), 4, 3).unwrap();
    assert_eq!(c.certified_depth(), 3);
    assert!(is_path(&c, 7));
    assert!(verify_ball_preservation(&c, 2).pass);
    let bad = verify_ball_preservation(&c, 3);
    assert!(!bad.pass);
    assert!(bad.witness.unwrap().contains("6 edges"));
    let cyc = &enumerate_short_cycles(&b, 5).cycles[0];
    assert_eq!(classify_cycle_lift(&c, cyc).unwrap(), CycleLift::LiftsOpen);

    let deep = TruncatedCover::build(b, 4, 5).unwrap();
    let d = estimate_displacement(&deep);
    assert_eq!(d.value, Some(5));
    assert!(d.exact);
    assert_eq!(order_threshold(5, 4).unwrap(), Rational64::new(9, 4));
}

/// Lifts of the base point of an n-cycle sit n apart on the line.
#[test]
fn n_cycle_displacement_is_n() {
    for n in 4..9 {
        let b = ball(fixtures::cyclic(n), n);
        let c = TruncatedCover::build(b, 3, n).unwrap();
        assert_eq!(estimate_displacement(&c).value, Some(n), "n = {n}");
    }
}

#[test]
fn short_cycles_lift_closed_in_every_fixture() {
    for (name, radius, r) in [("sl2z", 7, 6), ("sl2z_amalgam", 7, 6), ("c2_c3", 7, 6), ("z5", 5, 4), ("free2", 4, 4)] {
        let b = ball(fixtures::load(name).unwrap(), radius);
        let c = TruncatedCover::build(b.clone(), r, 4).unwrap();
        for cyc in enumerate_short_cycles(&b, r).cycles {
            if b.distance(cyc.vertices[0]) > c.certified_depth() {
                continue;
            }
            for &start in &c.lifts(cyc.vertices[0]) {
                assert_eq!(
                    rlocal::cover::classify_cycle_lift_at(&c, &cyc, start).unwrap(),
                    CycleLift::LiftsClosed,
                    "{name}"
                );
            }
        }
    }
}

#[test]
fn covering_property_on_certified_region() {
    let b = ball(fixtures::sl2z_matrix(), 8);
    let c = TruncatedCover::build(b.clone(), 6, 4).unwrap();
    for v in c.certified() {
        assert_eq!(c.neighbors(v).len(), b.label_count());
        for &(l, t) in c.neighbors(v) {
            assert_eq!(b.step(c.projection(v), l), Some(c.projection(t)));
        }
    }
    assert!(verify_ball_preservation(&c, 3).pass);
    // every 8-relator is a product of 6-cycles: no unfolding near the root
    assert_eq!(c.certified().count(), b.within(c.certified_depth()).count());
    let c5 = TruncatedCover::build(b.clone(), 5, 4).unwrap();
    assert!(c5.certified().count() > b.within(c5.certified_depth()).count());
}

fn relator_cycle(b: &CayleyBall, word: &str) -> Cycle {
    let g = b.group();
    let letters = g.parse_word(word).unwrap();
    let mut vertices = vec![0];
    let mut labels = Vec::new();
    for l in letters {
        let lab = (0..b.label_count()).find(|&k| b.label_letter(k) == l || g.letter_element(b.label_letter(k)) == g.letter_element(l)).unwrap();
        labels.push(lab);
        vertices.push(b.step(*vertices.last().unwrap(), lab).unwrap());
    }
    Cycle { vertices, labels }
}

/// At r = 6 the length-8 relator is a product of short cycles, so it
/// lifts closed; at r = 5 it does not.
#[test]
fn long_relator_lift_depends_on_r() {
    let b = ball(fixtures::sl2z_matrix(), 10);
    let cyc = relator_cycle(&b, "S S T^-1 S^-1 T^-1 S^-1 T^-1 S^-1");
    let c6 = TruncatedCover::build(b.clone(), 6, 6).unwrap();
    assert_eq!(classify_cycle_lift(&c6, &cyc).unwrap(), CycleLift::LiftsClosed);
    let c5 = TruncatedCover::build(b, 5, 6).unwrap();
    assert_eq!(classify_cycle_lift(&c5, &cyc).unwrap(), CycleLift::LiftsOpen);
}

#[test]
fn deck_lifts() {
    let b = ball(fixtures::free2(), 6);
    let c = TruncatedCover::build(b.clone(), 4, 4).unwrap();
    let g = b.group().clone();
    let id = lift_element_action(&c, &g.identity(), 0).unwrap();
    assert!(id.map.iter().enumerate().all(|(i, m)| m.is_none_or(|x| x == i)));
    let a = g.generator(0).clone();
    let la = c.lifts(b.index_of(&a).unwrap())[0];
    let lift = lift_element_action(&c, &a, la).unwrap();
    assert_eq!(lift.apply(0), Some(la));

    let b = ball(fixtures::sl2z_matrix(), 10);
    let c = TruncatedCover::build(b.clone(), 6, 7).unwrap();
    let g = b.group().clone();
    let s = g.generator(0).clone();
    let ls = lift_element_action(&c, &s, c.lifts(b.index_of(&s).unwrap())[0]).unwrap();
    let mut acc = ls.clone();
    for _ in 0..3 {
        acc = ls.compose(&acc, &c);
    }
    let fixed: Vec<_> = (0..c.len()).filter_map(|v| acc.apply(v).map(|x| (v, x))).collect();
    assert!(!fixed.is_empty());
    assert!(fixed.iter().all(|&(v, x)| v == x));
    // composition agrees with the lift of the product
    let t = g.generator(1).clone();
    let lt = lift_element_action(&c, &t, c.lifts(b.index_of(&t).unwrap())[0]).unwrap();
    let st = g.mul(&s, &t);
    let lst = lift_element_action(&c, &st, ls.apply(lt.apply(0).unwrap()).unwrap()).unwrap();
    let comp = ls.compose(&lt, &c);
    let mut agree = 0;
    for v in 0..c.len() {
        if let (Some(a), Some(b)) = (comp.apply(v), lst.apply(v)) {
            assert_eq!(a, b);
            agree += 1;
        }
    }
    assert!(agree > 0);
}
