use super::*;
use crate::data::{build_score_table, Dataset, ScoreOptions};
use crate::poset::{enumerate_ideals, make_order_seeded, members};
use crate::scalar::{ln_sum_exp, log_rel_diff};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[path = "../../tests/common/oracle.rs"]
mod oracle;

const TOL: f64 = 1e-9;

fn random_data(n: usize, m: usize, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let arity: Vec<usize> = (0..n).map(|_| rng.random_range(2..4)).collect();
    let rows: Vec<Vec<usize>> = (0..m)
        .map(|_| arity.iter().map(|&r| rng.random_range(0..r)).collect())
        .collect();
    Dataset::from_indices((0..n).map(|v| format!("x{v}")).collect(), &arity, &rows).unwrap()
}

fn scores(n: usize, m: usize, k: usize, seed: u64) -> ScoreTable<f64> {
    build_score_table(&random_data(n, m, seed), &ScoreOptions::new(k)).unwrap()
}

fn order(s: &str) -> ParallelBucketOrder {
    s.parse().unwrap()
}

fn opts() -> EngineOptions {
    EngineOptions::default()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

#[test]
fn single_node() {
    let s = scores(1, 5, 0, 1);
    let p = order("0");
    let l = enumerate_ideals(&p, DEFAULT_IDEAL_CAP).unwrap();
    let a = build_alpha(&s, &l).unwrap();
    let w0 = s.get(0, 0).unwrap();
    assert_eq!(a.log_alpha(0, 0), Some(w0));
    assert_eq!(a.log_alpha(0, 1), None);
    let fb = forward_backward(&a, &l);
    assert_eq!(fb.log_total(), w0);
    assert_eq!(fb.log_h(1), 0.0);
    assert_eq!(log_joint(&s, &p, &opts()).unwrap(), w0);
}

#[test]
fn two_node_single_bucket() {
    let s = scores(2, 20, 1, 2);
    let w = |v, set| s.get(v, set).unwrap();
    let a0 = w(0, 0);
    let a1 = w(1, 0);
    let a1_0 = ln_sum_exp(&[w(1, 0), w(1, 1)]);
    let a0_1 = ln_sum_exp(&[w(0, 0), w(0, 2)]);
    let expect = ln_sum_exp(&[a0 + a1_0, a1 + a0_1]);
    let got = log_joint(&s, &order("0,1"), &opts()).unwrap();
    assert!(close(got, expect, 1e-12), "{got} {expect}");
}

#[test]
fn alpha_matches_direct_sums() {
    for (i, desc) in ["0,1,2", "0|1|2", "2,0|1", "1|0,2", "0;1,2", "0;1;2", "0,1,2,3|4", "0,3|1;2,4"]
        .iter()
        .enumerate()
    {
        let p = order(desc);
        let n = p.n();
        for k in 0..n {
            let s = scores(n, 30, k, i as u64 * 10 + k as u64);
            let l = enumerate_ideals(&p, DEFAULT_IDEAL_CAP).unwrap();
            let a = build_alpha(&s, &l).unwrap();
            for idx in 0..l.len() {
                for v in 0..n {
                    let placeable = l.mask(idx) >> v & 1 == 0 && p.predecessors(v) & !l.mask(idx) == 0;
                    match a.log_alpha(v, idx) {
                        Some(x) => {
                            assert!(placeable);
                            let direct = direct_log_alpha(&s, v, l.mask(idx));
                            assert!(close(x, direct, 1e-12), "{desc} k={k} v={v} I={:b}", l.mask(idx));
                        }
                        None => assert!(!placeable),
                    }
                }
            }
        }
    }
}

#[test]
fn alpha_keeps_weights_far_below_the_peak() {
    // each extra parent moves the weight thousands of nats, down for even
    // nodes and up for odd ones, so some placements only see tiny weights
    let sign = |v: usize| if v.is_multiple_of(2) { -1.0 } else { 1.0 };
    let s: ScoreTable<f64> = ScoreTable::from_fn(6, 3, |v, set| {
        sign(v) * 3000.0 * f64::from(set.count_ones()) + 0.1 * (v as f64 + set as f64).sin()
    })
    .unwrap();
    let s32: ScoreTable<f32> =
        ScoreTable::from_fn(6, 3, |v, set| sign(v) as f32 * 120.0 * set.count_ones() as f32).unwrap();
    for desc in ["0,1,2,3,4,5", "0,1,2|3,4,5", "0,1|2;3,4|5"] {
        let p = order(desc);
        let l = enumerate_ideals(&p, DEFAULT_IDEAL_CAP).unwrap();
        let a = build_alpha(&s, &l).unwrap();
        let a32 = build_alpha(&s32, &l).unwrap();
        for idx in 0..l.len() {
            for v in 0..6 {
                if let Some(x) = a.log_alpha(v, idx) {
                    let direct = direct_log_alpha(&s, v, l.mask(idx));
                    assert!(close(x, direct, 1e-12), "{desc} v={v} I={:b}", l.mask(idx));
                    let x32 = a32.log_alpha(v, idx).unwrap();
                    let direct32 = direct_log_alpha(&s32, v, l.mask(idx));
                    assert!((x32 - direct32).abs() <= 1e-5 * direct32.abs().max(1.0), "{desc} v={v}");
                }
            }
        }
    }
}

#[test]
fn alpha_depends_only_on_the_set() {
    let s = scores(5, 40, 2, 3);
    let p = order("0,1|2,3|4");
    let single = order("0,1,2,3,4");
    let lp = enumerate_ideals(&p, DEFAULT_IDEAL_CAP).unwrap();
    let ls = enumerate_ideals(&single, DEFAULT_IDEAL_CAP).unwrap();
    let ap = build_alpha(&s, &lp).unwrap();
    let as_ = build_alpha(&s, &ls).unwrap();
    // prefix {0,1,2,3}, placing 4
    let ip = lp.index_of(0b01111).unwrap();
    let is = ls.index_of(0b01111).unwrap();
    assert_eq!(ap.log_alpha(4, ip).unwrap(), as_.log_alpha(4, is).unwrap());
    // alpha is nondecreasing along inclusion and saturates at the full total
    for idx in 0..ls.len() {
        for c in ls.extensions(idx) {
            for v in 0..5 {
                if let (Some(lo), Some(hi)) = (as_.log_alpha(v, idx), as_.log_alpha(v, c.upper)) {
                    assert!(hi >= lo);
                }
            }
        }
    }
    let total4 = ln_sum_exp(s.log_weights(4));
    assert!(close(as_.log_alpha(4, is).unwrap(), total4, 1e-12));
}

#[test]
fn oracle_equivalence_small() {
    for seed in 0..6u64 {
        for n in 3..=5 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed * 31 + n as u64);
            let k = rng.random_range(1..n);
            let b = rng.random_range(1..=n);
            let r = rng.random_range(1..=n.min(2));
            let s = scores(n, [10, 50][seed as usize % 2], k, seed + 100 * n as u64);
            let p = make_order_seeded(n, b, r, seed).unwrap();
            let e = oracle::enumerate(&s, &p);
            let lj = log_joint(&s, &p, &opts()).unwrap();
            assert!(log_rel_diff(lj, e.log_total) < TOL, "{p}: {lj} vs {}", e.log_total);
            let arcs = arc_posteriors(&s, &p, &opts()).unwrap();
            for u in 0..n {
                for v in 0..n {
                    if u != v {
                        let expect = e.arc_probability(u, v);
                        assert!((arcs.get(u, v) - expect).abs() < TOL, "{p} {u}->{v}");
                    }
                }
            }
        }
    }
}

#[test]
fn features() {
    let s = scores(4, 30, 2, 9);
    let p = order("0,2|1,3");
    assert!((feature_posterior(&s, &p, &ModularFeature::all(4), &opts()).unwrap() - 1.0).abs() < 1e-12);
    let arcs = arc_posteriors(&s, &p, &opts()).unwrap();
    for (u, v, x) in arcs.arcs() {
        let f = feature_posterior(&s, &p, &ModularFeature::arc(4, u, v), &opts()).unwrap();
        assert!((f - x).abs() <= 1e-12 * x.max(1e-300) || (f - x).abs() < 1e-15, "{u}->{v} {f} {x}");
    }
    let s3 = scores(3, 30, 2, 4);
    let p3 = order("0,1|2");
    let empty = feature_posterior(&s3, &p3, &ModularFeature::empty_graph(3), &opts()).unwrap();
    let e = oracle::enumerate(&s3, &p3);
    let kept = oracle::log_feature_weight(&s3, &p3, |ps| ps.iter().all(|&x| x == 0));
    assert!((empty - (kept - e.log_total).exp()).abs() < TOL);
    // a conjunction across nodes
    let f = ModularFeature::all(3)
        .with(2, LocalIndicator::Contains(0))
        .with(1, LocalIndicator::Excludes(0));
    let got = feature_posterior(&s3, &p3, &f, &opts()).unwrap();
    let kept = oracle::log_feature_weight(&s3, &p3, |ps| f.holds(ps));
    assert!((got - (kept - e.log_total).exp()).abs() < TOL);
}

#[test]
fn exact_matches_enumeration() {
    let s = scores(5, 50, 4, 12);
    let (log_ev, m) = exact_posteriors(&s, DEFAULT_EXACT_CAP).unwrap();
    let e = oracle::exact_by_enumeration(&s);
    assert!(log_rel_diff(log_ev, e.log_total) < TOL);
    for (u, v, x) in m.arcs() {
        assert!((x - e.arc_probability(u, v)).abs() < TOL);
    }
    assert_eq!(m.mode, PosteriorMode::Exact);
    let mut cond = arc_posteriors(&s, &order("0,1,2,3,4"), &opts()).unwrap();
    cond.mode = PosteriorMode::Exact;
    assert_eq!(cond, m);
    assert!(matches!(exact_posteriors(&s, 4), Err(Error::CapExceeded { .. })));
}

#[test]
fn exchangeable_pair_is_symmetric() {
    let d = Dataset::from_indices(vec!["a".into(), "b".into()], &[2, 2], &[vec![0, 0], vec![1, 1], vec![0, 1], vec![1, 0], vec![0, 0], vec![1, 1]]).unwrap();
    let s: ScoreTable<f64> = build_score_table(&d, &ScoreOptions::new(1)).unwrap();
    let m = arc_posteriors(&s, &order("0,1"), &opts()).unwrap();
    assert!((m.get(0, 1) - m.get(1, 0)).abs() < 1e-15);
    assert_eq!(m.get(0, 0), 0.0);
}

fn level_identity_holds(s: &ScoreTable<f64>, p: &ParallelBucketOrder) {
    let l = enumerate_ideals(p, DEFAULT_IDEAL_CAP).unwrap();
    let fb = forward_backward(&build_alpha(s, &l).unwrap(), &l);
    assert_eq!(fb.log_g(0), 0.0);
    assert_eq!(fb.log_h(l.top()), 0.0);
    let mut levels = vec![Vec::new(); p.n() + 1];
    for idx in 0..l.len() {
        levels[l.size(idx)].push(fb.log_g(idx) + fb.log_h(idx));
    }
    for (m, terms) in levels.iter().enumerate() {
        let x = ln_sum_exp(terms);
        assert!(log_rel_diff(x, fb.log_total()) < TOL, "{p} level {m}");
    }
}

#[test]
fn level_identity() {
    for (i, d) in ["0,1,2,3,4,5", "0|1|2|3", "0,1|2,3|4,5", "0,1,2|3;4|5,6", "0;1;2;3"].iter().enumerate() {
        let p = order(d);
        level_identity_holds(&scores(p.n(), 25, 2, i as u64), &p);
    }
}

#[test]
fn partition_identity() {
    for (i, d) in ["0,1|2", "0|1|2|3", "0,1|2,3|4", "0,1,2|3,4,5", "0|1;2,3|4,5", "0,1;2,3;4,5"].iter().enumerate() {
        let p = order(d);
        let n = p.n();
        let s = scores(n, 40, (n - 1).min(3), 50 + i as u64);
        let terms: Vec<f64> = p
            .reorderings()
            .iter()
            .map(|q| log_joint(&s, q, &opts()).unwrap())
            .collect();
        let single = log_joint(&s, &ParallelBucketOrder::single_bucket(n).unwrap(), &opts()).unwrap();
        assert!(log_rel_diff(ln_sum_exp(&terms), single) < TOL, "{d}");
    }
}

#[test]
fn conditioning_coherence() {
    let s = scores(5, 30, 3, 77);
    let p = order("0,1|2,3|4");
    let (_, exact) = exact_posteriors(&s, DEFAULT_EXACT_CAP).unwrap();
    let all = p.reorderings();
    let logs: Vec<f64> = all.iter().map(|q| log_joint(&s, q, &opts()).unwrap()).collect();
    let z = ln_sum_exp(&logs);
    let mut mix = [0.0; 25];
    for (q, lj) in all.iter().zip(&logs) {
        let w = (lj - z).exp();
        let m = arc_posteriors(&s, q, &opts()).unwrap();
        for (x, y) in mix.iter_mut().zip(m.values()) {
            *x += w * y;
        }
    }
    for (u, v, x) in exact.arcs() {
        assert!((mix[u * 5 + v] - x).abs() < TOL);
    }
}

#[test]
fn monotone_in_k() {
    let d = random_data(5, 30, 5);
    let p = order("0,1|2,3,4");
    let mut last = f64::NEG_INFINITY;
    for k in 0..5 {
        let s: ScoreTable<f64> = build_score_table(&d, &ScoreOptions::new(k)).unwrap();
        let x = log_joint(&s, &p, &opts()).unwrap();
        assert!(x >= last);
        last = x;
    }
}

#[test]
fn f32_instantiation_agrees() {
    let s = scores(6, 40, 2, 8);
    let p = order("0,1,2|3,4,5");
    let x64 = log_joint(&s, &p, &opts()).unwrap();
    let x32 = log_joint(&s.cast::<f32>(), &p, &opts()).unwrap();
    assert!((x32 as f64 - x64).abs() < 1e-4 * x64.abs());
    let a64 = arc_posteriors(&s, &p, &opts()).unwrap();
    let a32 = arc_posteriors(&s.cast::<f32>(), &p, &opts()).unwrap();
    for (x, y) in a64.values().iter().zip(a32.values()) {
        assert!((x - y).abs() < 1e-3);
    }
}

#[test]
fn shape_errors() {
    let s = scores(3, 10, 1, 0);
    assert!(matches!(log_joint(&s, &order("0|1"), &opts()), Err(Error::Shape(_))));
    let tight = EngineOptions { ideal_cap: 3 };
    assert!(matches!(log_joint(&s, &order("0,1,2"), &tight), Err(Error::CapExceeded { .. })));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn relabeling_invariance(seed in any::<u64>(), n in 2usize..7, b in 1usize..4) {
        prop_assume!(b <= n);
        let s = scores(n, 20, 2.min(n - 1), seed);
        let p = make_order_seeded(n, b, 1, seed ^ 5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut perm: Vec<usize> = (0..n).collect();
        rand::seq::SliceRandom::shuffle(&mut perm[..], &mut rng);
        // node v becomes perm[v]
        let relabel = |set: u64| members(set).fold(0u64, |m, v| m | 1 << perm[v]);
        let q = ParallelBucketOrder::from_parts(
            n,
            p.parts().iter().map(|part| part.iter().map(|&bk| relabel(bk)).collect()).collect(),
        ).unwrap();
        let sp = s.permuted(&perm);
        let a = log_joint(&s, &p, &opts()).unwrap();
        let b2 = log_joint(&sp, &q, &opts()).unwrap();
        prop_assert!(log_rel_diff(a, b2) < TOL);
        let ma = arc_posteriors(&s, &p, &opts()).unwrap();
        let mb = arc_posteriors(&sp, &q, &opts()).unwrap();
        for (u, v, x) in ma.arcs() {
            prop_assert!((mb.get(perm[u], perm[v]) - x).abs() < TOL);
        }
    }

    #[test]
    fn multi_part_matches_oracle(seed in any::<u64>(), n in 3usize..6, b in 1usize..4, r in 2usize..4) {
        prop_assume!(b <= n && r <= n);
        let s = scores(n, 15, (n - 1).min(2), seed);
        let p = make_order_seeded(n, b, r, seed).unwrap();
        let e = oracle::enumerate(&s, &p);
        prop_assert!(log_rel_diff(log_joint(&s, &p, &opts()).unwrap(), e.log_total) < TOL);
        let m = arc_posteriors(&s, &p, &opts()).unwrap();
        for (u, v, x) in m.arcs() {
            prop_assert!((x - e.arc_probability(u, v)).abs() < TOL);
        }
        level_identity_holds(&s, &p);
    }
}
