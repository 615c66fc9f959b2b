use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::Rng;

use keyshap::oracle::{BlockOracle, CountingOracle};
use keyshap::rng;
use keyshap::shapley::{
    exact_shapley, group_shapley, intra_group_shapley, query_count, sampled_shapley, CoalitionGame, GsvConfig,
    GsvTables, KeypointGame, TableGame,
};
use keyshap::{Coalition, Grouping, InstanceSet};

/// Average marginal contribution over every ordering of the players.
fn shapley_by_orderings(game: &TableGame) -> Vec<f64> {
    let n = game.players();
    let mut phi = vec![0.0; n];
    let mut order: Vec<usize> = (0..n).collect();
    let mut count = 0u64;
    permute(&mut order, 0, &mut |perm| {
        let mut mask = 0u64;
        for &p in perm {
            let before = game.value(mask).unwrap();
            mask |= 1 << p;
            phi[p] += game.value(mask).unwrap() - before;
        }
        count += 1;
    });
    phi.iter().map(|v| v / count as f64).collect()
}

fn permute(v: &mut [usize], k: usize, f: &mut impl FnMut(&[usize])) {
    if k == v.len() {
        f(v);
        return;
    }
    for i in k..v.len() {
        v.swap(k, i);
        permute(v, k + 1, f);
        v.swap(k, i);
    }
}

fn random_game(n: usize, seed: u64) -> TableGame {
    let mut r = rng::stream(&[seed]);
    TableGame::new(n, (0..1 << n).map(|_| r.gen_range(-1.0..1.0)).collect()).unwrap()
}

/// Make `d` a dummy, then make `a` and `b` interchangeable.
fn with_dummy_and_twins(game: &TableGame, d: usize, a: usize, b: usize) -> TableGame {
    let n = game.players();
    let mut v = game.values().to_vec();
    for s in 0..v.len() {
        if s >> d & 1 == 1 {
            v[s] = v[s & !(1 << d)];
        }
    }
    for s in 0..v.len() {
        if s >> a & 1 == 1 && s >> b & 1 == 0 {
            v[s] = v[s ^ (1 << a) ^ (1 << b)];
        }
    }
    TableGame::new(n, v).unwrap()
}

#[test]
fn enumeration_agrees_with_ordering_average() {
    for (k, n) in (1..=6).cycle().take(30).enumerate() {
        let game = random_game(n, 100 + k as u64);
        let fast = exact_shapley(&game, 0).unwrap().phi;
        let slow = shapley_by_orderings(&game);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-12, "n={n}: {a} vs {b}");
        }
    }
}

#[test]
fn axioms_on_random_games() {
    for k in 0..200u64 {
        let n = 3 + (k % 8) as usize;
        let mut r = rng::stream(&[k, 1]);
        let mut p: Vec<usize> = (0..n).collect();
        p.shuffle(&mut r);
        let game = with_dummy_and_twins(&random_game(n, k), p[0], p[1], p[2]);
        let t = exact_shapley(&game, 0).unwrap();
        assert!(t.efficiency_gap() < 1e-9);
        assert!(t.phi[p[0]].abs() < 1e-9);
        assert!((t.phi[p[1]] - t.phi[p[2]]).abs() < 1e-9);
    }
}

#[test]
fn linearity() {
    let a = random_game(7, 1);
    let b = random_game(7, 2);
    let sum = TableGame::new(7, a.values().iter().zip(b.values()).map(|(x, y)| 2.5 * x + y).collect()).unwrap();
    let (pa, pb, ps) = (
        exact_shapley(&a, 0).unwrap().phi,
        exact_shapley(&b, 0).unwrap().phi,
        exact_shapley(&sum, 0).unwrap().phi,
    );
    for i in 0..7 {
        assert!((ps[i] - (2.5 * pa[i] + pb[i])).abs() < 1e-12);
    }
}

#[test]
fn sampling_converges_towards_exact() {
    let game = random_game(6, 9);
    let exact = exact_shapley(&game, 0).unwrap().phi;
    let est = sampled_shapley(&game, 20_000, 4).unwrap();
    for (e, s) in exact.iter().zip(&est) {
        assert!((e - s).abs() < 0.05, "{e} vs {s}");
    }
}

fn shuffled_grouping(sizes: &[usize], seed: u64) -> Grouping {
    let n: usize = sizes.iter().sum();
    let mut ids: Vec<usize> = (0..n).collect();
    ids.shuffle(&mut rng::stream(&[seed, 77]));
    let mut groups = Vec::new();
    let mut at = 0;
    for &s in sizes {
        groups.push(ids[at..at + s].to_vec());
        at += s;
    }
    Grouping::new(groups, n).unwrap()
}

#[test]
fn group_shapley_matches_enumeration_on_separable_oracles() {
    let cfg = GsvConfig::default();
    for k in 0..8u64 {
        let sizes: &[usize] = if k % 2 == 0 { &[4, 4, 4] } else { &[5, 4, 3] };
        let oracle = BlockOracle::random(shuffled_grouping(sizes, k), k);
        let grouping = oracle.grouping().clone();
        for target in 0..12 {
            let fast = intra_group_shapley(&oracle, &grouping, target, &cfg).unwrap();
            let game = KeypointGame {
                oracle: &oracle,
                instances: InstanceSet::All,
                target,
                trial: 0,
            };
            let brute = exact_shapley(&game, target).unwrap();
            for j in 0..12 {
                let want = brute.phi[j];
                let got = fast.phi_of(j).unwrap_or(0.0);
                assert!((want - got).abs() <= 1e-9, "target {target} player {j}");
            }
        }
        for h in 0..grouping.g() {
            let t = group_shapley(&oracle, &grouping, h, &cfg).unwrap();
            for (q, phi) in t.phi.iter().enumerate() {
                if q != h {
                    assert!(phi.abs() <= 1e-9);
                }
            }
        }
    }
}

#[test]
fn instrumented_run_spends_the_predicted_budget() {
    let grouping = Grouping::from_sizes(&[5, 3, 3, 3, 3]).unwrap();
    let predicted = query_count(&grouping);
    assert_eq!(predicted.gsv.distinct_coalitions, 96);
    assert_eq!(predicted.exact.distinct_coalitions, 131_072);

    let oracle = CountingOracle::new(BlockOracle::random(grouping.clone(), 5));
    GsvTables::compute(&oracle, &grouping, &GsvConfig::default()).unwrap();
    assert_eq!(oracle.calls() as u128, predicted.gsv.distinct_coalitions);

    // Each game asks about each of its coalitions exactly once.
    let log: Vec<Coalition> = oracle.log().into_iter().map(|(c, _)| c).collect();
    let mut at = 0;
    for size in grouping.sizes().into_iter().chain([grouping.g()]) {
        let game = &log[at..at + (1 << size)];
        assert_eq!(game.iter().collect::<HashSet<_>>().len(), game.len());
        at += 1 << size;
    }
    // The full coalition and the five "one group hidden" coalitions recur
    // across games.
    assert_eq!(oracle.distinct_coalitions(), 86);
}
