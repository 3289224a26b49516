use std::collections::HashMap;

use hiercp::generator::{sample_assignment, sample_network, OmegaTable};
use hiercp::oracle::{decode, encode};
use hiercp::{GroupAssignment, JTable};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// `J(d, n)` by composite Simpson integration of `x^d (x-1) / (x^(n+1) - 1)`.
fn simpson_j(d: usize, n: usize) -> f64 {
    let f = |x: f64| {
        if (1.0 - x).abs() < 1e-12 {
            1.0 / (n as f64 + 1.0)
        } else {
            x.powi(d as i32) * (x - 1.0) / (x.powi(n as i32 + 1) - 1.0)
        }
    };
    let m = 20_000;
    let h = 1.0 / m as f64;
    let mut s = f(0.0) + f(1.0);
    for i in 1..m {
        s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn factorial(x: usize) -> f64 {
    (1..=x).map(|i| i as f64).product()
}

fn choose(n: usize, c: usize) -> f64 {
    factorial(n) / (factorial(c) * factorial(n - c))
}

/// Prior probability of `g` written directly from the generative story.
fn prior(g: &GroupAssignment) -> f64 {
    let (n, num_layers) = (g.node_count(), g.layer_count());
    let mut p = 1.0;
    for r in 1..g.k() {
        let n1 = g.group_size(r, 0);
        p *= factorial(n1) * factorial(n - n1) / factorial(n + 1);
        for layer in 1..num_layers {
            for s in [false, true] {
                let from: Vec<usize> = (0..n)
                    .filter(|&i| g.is_member(r, layer - 1, i) == s)
                    .collect();
                let stay = from
                    .iter()
                    .filter(|&&i| g.is_member(r, layer, i) == s)
                    .count();
                p *= simpson_j(from.len() - stay, from.len()) / choose(from.len(), stay);
            }
        }
    }
    p
}

fn prior_tv(n: usize, num_layers: usize, k: usize, draws: usize, seed: u64) -> f64 {
    let jt = JTable::build(n).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts: HashMap<u64, usize> = HashMap::new();
    for _ in 0..draws {
        let g = sample_assignment(k, n, num_layers, &jt, &mut rng).unwrap();
        *counts.entry(encode(&g).unwrap()).or_default() += 1;
    }
    let states = 1u64 << ((k - 1) * n * num_layers);
    let mut total = 0.0;
    let mut tv = 0.0;
    for code in 0..states {
        let p = prior(&decode(n, num_layers, k, code).unwrap());
        total += p;
        let q = counts.get(&code).copied().unwrap_or(0) as f64 / draws as f64;
        tv += (p - q).abs();
    }
    assert!((total - 1.0).abs() < 1e-6, "prior sums to {total}");
    tv / 2.0
}

#[test]
fn simpson_matches_closed_forms() {
    assert!((simpson_j(0, 1) - 2f64.ln()).abs() < 1e-12);
    assert!((simpson_j(1, 1) - (1.0 - 2f64.ln())).abs() < 1e-12);
    let jt = JTable::build(6).unwrap();
    for n in 0..=6 {
        for d in 0..=n {
            assert!((simpson_j(d, n).ln() - jt.raw_log(d, n)).abs() < 1e-9);
        }
    }
}

#[test]
fn draws_follow_the_prior_two_nodes() {
    let tv = prior_tv(2, 2, 2, 200_000, 1);
    assert!(tv < 0.01, "TV {tv}");
}

#[test]
fn draws_follow_the_prior_three_groups() {
    let tv = prior_tv(2, 2, 3, 400_000, 2);
    assert!(tv < 0.02, "TV {tv}");
}

#[test]
fn network_edges_follow_highest_group() {
    // two nodes always share group 1, so every pair uses its density
    let mut g = GroupAssignment::new(2, 3, 2).unwrap();
    for layer in 0..3 {
        g.set_member(1, layer, 0, true);
        g.set_member(1, layer, 1, true);
    }
    let omega = OmegaTable::constant(&[0.0, 0.3], 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let draws = 20_000;
    let mut edges = 0;
    for _ in 0..draws {
        edges += sample_network(&g, &omega, &mut rng).unwrap().total_edges();
    }
    let rate = edges as f64 / (3 * draws) as f64;
    let sigma = (0.3 * 0.7 / (3 * draws) as f64).sqrt();
    assert!((rate - 0.3).abs() < 4.0 * sigma, "{rate}");
}
