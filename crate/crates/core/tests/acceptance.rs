//! One pass/fail line per acceptance criterion. Runs without the libtest
//! harness so the summary prints in order.

use std::panic::{self, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_rational::Rational64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rlocal::bass_serre::{classify_element, verify_equivariant_isomorphism, BassSerreTreePortion};
use rlocal::cayley::{enumerate_short_cycles, finite_closure, verify_short_cycle_cosets, CayleyBall, DEFAULT_VERTEX_CAP};
use rlocal::cover::{
    classify_cycle_lift_at, estimate_displacement, order_threshold, verify_ball_preservation, CycleLift, TruncatedCover,
};
use rlocal::decomposition::*;
use rlocal::gog::GraphOfGroups;
use rlocal::matrix::{congruence_quotient_order, Matrix};
use rlocal::subgroups::*;
use rlocal::{fixtures, Element, Group, Letter};

type Check = fn() -> Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn ball(g: Group, radius: usize) -> Arc<CayleyBall> {
    Arc::new(CayleyBall::build(Arc::new(g), radius, DEFAULT_VERTEX_CAP).unwrap())
}

fn decompose(g: Group, radius: usize, r: usize) -> GlobalDecomposition {
    compute_global_decomposition(ball(g, radius), DecompositionConfig::new(r)).unwrap()
}

fn orders(gog: &GraphOfGroups) -> (Vec<usize>, Vec<usize>) {
    let mut v: Vec<usize> = gog.vertex_groups().iter().map(|t| t.order()).collect();
    let mut e: Vec<usize> = gog.edges().iter().map(|e| e.group.order()).collect();
    v.sort_unstable();
    e.sort_unstable();
    (v, e)
}

fn c1() -> Result<String, String> {
    let start = Instant::now();
    let d = decompose(fixtures::sl2z_matrix(), 10, 6);
    let took = start.elapsed();
    ensure!(d.is_single_edge(), "model graph is not a single edge");
    ensure!(d.bag_sizes() == vec![4, 6], "bag sizes {:?}", d.bag_sizes());
    ensure!(d.adhesion_sizes() == vec![2], "adhesion {:?}", d.adhesion_sizes());
    ensure!(took < Duration::from_secs(60), "took {took:?}");
    Ok(format!("single edge, bags 4 and 6, adhesion 2 in {:.1}s", took.as_secs_f64()))
}

fn coset_candidates(g: &Arc<Group>) -> Vec<Vec<Element>> {
    let s = g.generator(0).clone();
    let st = g.mul(&s, g.generator(1));
    [vec![s.clone()], vec![st], vec![g.mul(&s, &s)]]
        .iter()
        .map(|gs| finite_closure(g, gs, 100).unwrap())
        .collect()
}

fn c2() -> Result<String, String> {
    let g = Arc::new(fixtures::sl2z_matrix());
    let b = CayleyBall::build(g.clone(), 10, DEFAULT_VERTEX_CAP).unwrap();
    let cands = coset_candidates(&g);
    let control = verify_short_cycle_cosets(&b, 8, &cands);
    ensure!(!control.pass, "r = 8 control unexpectedly passes");
    let rep = verify_short_cycle_cosets(&b, 6, &cands);
    ensure!(
        rep.pass,
        "{} short cycles at r = 6 leave every coset of <S>, <ST>, <S^2>; first: {}",
        rep.violation_count,
        rep.witnesses.first().cloned().unwrap_or_default()
    );
    Ok("every 6-cycle lies in a finite-subgroup coset".into())
}

fn c3() -> Result<String, String> {
    let cfg = DiscoveryConfig::default();
    let g = Arc::new(fixtures::sl2z_matrix());
    let res = discover_graph_of_groups(g.clone(), &cfg).map_err(|e| e.to_string())?;
    let gog = res.gog.as_ref().ok_or("SL(2,Z) discovery did not stabilize")?;
    ensure!(orders(gog) == (vec![4, 6], vec![2]), "SL(2,Z) orders {:?}", orders(gog));
    let r = res.final_r.unwrap();
    let again = discover_graph_of_groups(g, &DiscoveryConfig { r0: r, ..cfg.clone() }).map_err(|e| e.to_string())?;
    ensure!(
        same_splitting(res.decomposition.as_ref().unwrap(), again.decomposition.as_ref().unwrap()),
        "rerun at r = {r} changed the splitting"
    );

    let f = discover_graph_of_groups(Arc::new(fixtures::free2()), &cfg).map_err(|e| e.to_string())?;
    let fg = f.gog.as_ref().ok_or("F2 discovery did not stabilize")?;
    ensure!(orders(fg) == (vec![1], vec![1, 1]), "F2 orders {:?}", orders(fg));
    ensure!(fg.edges().iter().all(|e| e.from == e.to), "F2 graph is not a rose");
    Ok(format!("C4 *C2 C6 at r = {r}, F2 rose with 2 loops, rerun stable"))
}

fn c4() -> Result<String, String> {
    let lower = index_lower_bound(6, 6).map_err(|e| e.to_string())?;
    let upper = index_upper_bound(6, 2).map_err(|e| e.to_string())?;
    ensure!(lower == 1, "lower {lower}");
    ensure!(upper == BigUint::from(518_400u32), "upper {upper}");
    Ok("1 <= index <= 518400".into())
}

fn certify(gog: &GraphOfGroups) -> (FiniteQuotientHom, SubgroupCertificate) {
    let hom = construct_finite_quotient(gog).unwrap();
    let cert = reidemeister_schreier(&kernel_subgroup(&hom), &hom.presentation);
    (hom, cert)
}

fn c5() -> Result<String, String> {
    let mut parts = Vec::new();
    for (g, bound) in [(fixtures::c2_c3(), 36), (fixtures::sl2z_amalgam(), 518_400)] {
        let gog = g.gog().unwrap();
        let (hom, mut cert) = certify(gog);
        ensure!(verify_torsion_free(&hom, &mut cert, &torsion_representatives(gog)), "kernel has torsion");
        ensure!((1..=bound).contains(&cert.index), "index {} outside [1, {bound}]", cert.index);
        let rank = cert.rank.ok_or("kernel not certified free")?;
        let expect = free_rank_from_euler(euler_characteristic(gog), cert.index);
        ensure!(Rational64::from(rank as i64) == expect, "rank {rank}, Euler predicts {expect}");
        parts.push(format!("index {} rank {rank}", cert.index));
    }

    let amalgam = Arc::new(fixtures::sl2z_amalgam());
    let images: Vec<Matrix> = transport_atoms(&amalgam, &fixtures::sl2z_matrix(), 4)
        .map_err(|e| e.to_string())?
        .into_iter()
        .map(|e| match e {
            Element::Matrix(m) => m,
            _ => unreachable!(),
        })
        .collect();
    let (pres, _) = Presentation::of_gog(amalgam.gog().unwrap());
    let hom = FiniteQuotientHom::from_matrices(pres, &images, 2, 1000).map_err(|e| e.to_string())?;
    let mut cert = kernel_subgroup(&hom);
    ensure!(
        !verify_torsion_free(&hom, &mut cert, &torsion_representatives(amalgam.gog().unwrap())),
        "mod-2 kernel reported torsion-free"
    );
    ensure!(
        cert.torsion_witnesses.iter().any(|w| w.starts_with("C4:s2 ")),
        "no S^2 witness: {:?}",
        cert.torsion_witnesses
    );
    Ok(format!("C2*C3 {}, SL(2,Z) {}, mod-2 kernel contains S^2", parts[0], parts[1]))
}

fn random_word(g: &Group, rng: &mut ChaCha8Rng, max: usize) -> Element {
    let n = rng.gen_range(0..=max);
    let word: Vec<Letter> = (0..n)
        .map(|_| Letter { gen: rng.gen_range(0..g.generator_names().len()), inv: rng.gen_bool(0.5) })
        .collect();
    g.eval_word(&word)
}

fn c6() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut checked = 0;
    for name in ["sl2z_amalgam", "c2_c3", "amalgam_template"] {
        let g = fixtures::load(name).unwrap();
        let gog = g.gog().unwrap().clone();
        let torsion: Vec<Element> = (0..gog.vertex_count())
            .flat_map(|v| (0..gog.vertex_group(v).order()).map(move |h| (v, h)))
            .map(|(v, h)| Element::NormalForm(gog.vertex_element(v, h).unwrap()))
            .collect();
        let t = BassSerreTreePortion::build(&gog, 9).unwrap();
        let conj = (0..500).map(|_| {
            let d = random_word(&g, &mut rng, 6);
            let x = &torsion[rng.gen_range(0..torsion.len())];
            g.mul(&g.mul(&d, x), &g.inverse(&d))
        });
        for x in torsion.iter().cloned().chain(conj) {
            let a = classify_element(&t, &x).map_err(|e| e.to_string())?;
            ensure!(a.name() != "hyperbolic", "{name}: {} is hyperbolic", g.render(&x));
            checked += 1;
        }
    }

    let h = fixtures::c2_c3();
    let t = BassSerreTreePortion::build(h.gog().unwrap(), 12).unwrap();
    let ab = h.normal_form("a b").unwrap();
    let l = classify_element(&t, &ab).map_err(|e| e.to_string())?.translation_length();
    ensure!(l == 2, "translation length of ab is {l}");
    for k in 1..=4 {
        let lk = classify_element(&t, &h.pow(&ab, k)).map_err(|e| e.to_string())?.translation_length();
        ensure!(lk == 2 * k as usize, "(ab)^{k} has length {lk}");
    }
    Ok(format!("{checked} torsion elements elliptic, l(ab) = 2 scaling linearly"))
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

fn c7() -> Result<String, String> {
    let b = ball(fixtures::z5(), 5);
    let c = TruncatedCover::build(b.clone(), 4, 3).unwrap();
    ensure!(is_path(&c, 7), "certified cover is not a path on 7 vertices");
    ensure!(verify_ball_preservation(&c, 2).pass, "radius-2 balls not preserved");
    let bad = verify_ball_preservation(&c, 3);
    ensure!(!bad.pass && bad.witness.is_some(), "radius-3 preservation should fail with a witness");
    let deep = TruncatedCover::build(b, 4, 5).unwrap();
    let disp = estimate_displacement(&deep);
    ensure!(disp.value == Some(5), "displacement {:?}", disp.value);
    let k = order_threshold(5, 4).map_err(|e| e.to_string())?;
    ensure!(k == Rational64::new(9, 4), "threshold {k}");

    for (name, radius, r) in [("sl2z", 7, 6), ("sl2z_amalgam", 7, 6), ("c2_c3", 7, 6), ("z5", 5, 4), ("free2", 4, 4)] {
        let b = ball(fixtures::load(name).unwrap(), radius);
        let c = TruncatedCover::build(b.clone(), r, 4).unwrap();
        for cyc in enumerate_short_cycles(&b, r).cycles {
            if b.distance(cyc.vertices[0]) > c.certified_depth() {
                continue;
            }
            for &start in &c.lifts(cyc.vertices[0]) {
                let lift = classify_cycle_lift_at(&c, &cyc, start).map_err(|e| e.to_string())?;
                ensure!(lift == CycleLift::LiftsClosed, "{name}: a short cycle lifts open");
            }
        }
    }
    Ok("Z/5 at r = 4: path, displacement 5, K = 9/4, balls of radius 2 preserved".into())
}

fn c8() -> Result<String, String> {
    let d = decompose(fixtures::sl2z_matrix(), 10, 6);
    let b = d.ball();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let pool: Vec<Element> = b.within(4).map(|v| b.vertex(v).clone()).collect();
    let samples: Vec<Element> = pool.choose_multiple(&mut rng, 20).cloned().collect();
    let rep = check_periodicity(&d, &samples);
    ensure!(rep.samples == 20, "{} samples", rep.samples);
    ensure!(rep.mismatches == 0, "{} mismatches", rep.mismatches);
    Ok("20 sampled translates map bags to bags".into())
}

fn perturb(t: &mut BassSerreTreePortion) {
    let leaf = (0..t.len()).rev().find(|&i| t.vertices[i].depth == t.radius).unwrap();
    let (parent, y) = t.adjacency[leaf][0];
    let other = (0..t.len())
        .find(|&i| i != parent && t.vertices[i].depth + 1 == t.radius && t.vertices[i].kind == t.vertices[parent].kind)
        .unwrap();
    t.adjacency[parent].retain(|&(j, _)| j != leaf);
    t.adjacency[leaf] = vec![(other, y)];
    t.adjacency[other].push((leaf, y ^ 1));
}

fn c9() -> Result<String, String> {
    let amalgam = Arc::new(fixtures::sl2z_amalgam());
    let d = decompose(fixtures::sl2z_matrix(), 10, 6);
    let mut t = BassSerreTreePortion::build(amalgam.gog().unwrap(), 3).unwrap();
    let rep = verify_equivariant_isomorphism(&d, &t, &amalgam, 3, 7).map_err(|e| e.to_string())?;
    ensure!(rep.pass, "isomorphism check failed: {rep:?}");
    perturb(&mut t);
    let bad = verify_equivariant_isomorphism(&d, &t, &amalgam, 3, 7).map_err(|e| e.to_string())?;
    ensure!(!bad.pass, "perturbed tree still passes");
    Ok(format!("{} tree vertices matched, perturbed control rejected", rep.tree_vertices))
}

/// Matrices over Z/m of determinant 1, counted by exhaustion.
fn count_sl(n: usize, m: i64) -> usize {
    let entries = n * n;
    let total = (m as usize).pow(entries as u32);
    (0..total)
        .filter(|&code| {
            let mut c = code;
            let mut a = vec![vec![0i64; n]; n];
            for k in 0..entries {
                a[k / n][k % n] = (c % m as usize) as i64;
                c /= m as usize;
            }
            det(&a).rem_euclid(m) == 1
        })
        .count()
}

fn det(a: &[Vec<i64>]) -> i64 {
    match a.len() {
        2 => a[0][0] * a[1][1] - a[0][1] * a[1][0],
        3 => {
            a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
                + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
        }
        _ => unreachable!(),
    }
}

fn c10() -> Result<String, String> {
    let sl2 = fixtures::sl2z_matrix();
    let spec2 = sl2.matrix_spec().unwrap();
    let sl3 = fixtures::load("sl3z").map_err(|e| e.to_string())?;
    let spec3 = sl3.matrix_spec().unwrap();
    let mut out = Vec::new();
    for (spec, n, m) in [(spec2, 2, 2u64), (spec2, 2, 3), (spec3, 3, 3)] {
        let got = congruence_quotient_order(spec, m, 100_000).map_err(|e| e.to_string())?;
        let want = count_sl(n, m as i64);
        ensure!(got == want, "SL({n},Z/{m}) closure {got}, exhaustion {want}");
        out.push(format!("SL({n},Z/{m}) = {got}"));
    }
    Ok(out.join(", "))
}

fn c11() -> Result<String, String> {
    let d = decompose(fixtures::free2(), 5, 3);
    let n = build_nerve_complex(&d);
    ensure!(n.dimension == 0, "F2 nerve dimension {}", n.dimension);
    ensure!(n.components == n.vertices.len(), "F2 nerve has edges");
    let d = decompose(fixtures::sl2z_matrix(), 10, 6);
    let n = build_nerve_complex(&d);
    ensure!(n.dimension == 1, "SL(2,Z) nerve dimension {}", n.dimension);
    ensure!(n.connected(), "SL(2,Z) nerve has {} components", n.components);
    Ok("F2 nerve discrete, SL(2,Z) nerve a connected graph".into())
}

fn main() {
    let checks: [Check; 11] = [c1, c2, c3, c4, c5, c6, c7, c8, c9, c10, c11];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (i, check) in checks.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {:>2}: PASS {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2}: FAIL {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria pass", checks.len() - failed, checks.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
