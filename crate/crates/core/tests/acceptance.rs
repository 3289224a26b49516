//! Acceptance suite: one PASS/FAIL/BLOCKED line per criterion.
//!
//! Run a subset with `cargo test --test acceptance -- R2 R7`. Criteria that
//! need external datasets read their paths from `HIERCP_JK_DATASET` and
//! `HIERCP_LUKE_DATASET` and report BLOCKED when those are unset or missing.

use std::collections::HashMap;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use hiercp::generator::{make_planted_instance, PlantedParams};
use hiercp::oracle::{
    enumerate_posterior, independent_log_likelihood, proposal_probability, stationary_distribution,
    tv_distance, EmpiricalDistribution, EnumerationOptions, KMode, ProposalSpec,
};
use hiercp::prob::log_f;
use hiercp::render::block_density;
use hiercp::sampler::{self, consensus_with, propose, run_rng, step, ConsensusRule, GroupAddition};
use hiercp::{
    ChainState, GroupAssignment, JTable, Mode, Move, MoveKind, SamplerConfig, SufficientStats,
    TemporalNetwork,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

type Instance = fn(usize, usize) -> TemporalNetwork;
type Check = fn() -> Verdict;

enum Verdict {
    Pass(String),
    Fail(String),
    Blocked(String),
}

use Verdict::{Blocked, Fail, Pass};

fn verdict(ok: bool, detail: String) -> Verdict {
    if ok {
        Pass(detail)
    } else {
        Fail(detail)
    }
}

fn random_network(
    n: usize,
    num_layers: usize,
    density: f64,
    rng: &mut ChaCha8Rng,
) -> TemporalNetwork {
    let mut edges = Vec::new();
    for layer in 0..num_layers {
        for i in 0..n {
            for j in i + 1..n {
                if rng.gen::<f64>() < density {
                    edges.push((layer, i, j));
                }
            }
        }
    }
    TemporalNetwork::from_edges(n, num_layers, edges).unwrap()
}

/// Full recomputation of `ln P(A|g) + ln F(g)` without incremental state.
fn full_target(net: &TemporalNetwork, jt: &JTable, g: &GroupAssignment) -> f64 {
    let stats = SufficientStats::compute(net, g).unwrap();
    independent_log_likelihood(net, g) + log_f(&stats, jt).unwrap().value()
}

fn apply(g: &GroupAssignment, mv: &Move) -> GroupAssignment {
    hiercp::oracle::apply(g, mv).unwrap()
}

fn r1() -> Verdict {
    let start = Instant::now();
    let jt = JTable::build(100).unwrap();
    let built = start.elapsed();
    let mut problems = Vec::new();
    if jt.log_j(0, 0) != 0.0 {
        problems.push(format!("logJ(0,0) = {}", jt.log_j(0, 0)));
    }
    let j01 = jt.raw_log(0, 1).exp();
    if (j01 - 2f64.ln()).abs() >= 1e-10 {
        problems.push(format!("J(0,1) = {j01}"));
    }
    let j11 = jt.raw_log(1, 1).exp();
    if (j11 - (1.0 - 2f64.ln())).abs() >= 1e-10 {
        problems.push(format!("J(1,1) = {j11}"));
    }
    let mut worst = 0.0f64;
    for n in [1usize, 10, 100] {
        let sum: f64 = (0..=n).map(|d| jt.raw_log(d, n).exp()).sum();
        worst = worst.max((sum - 1.0).abs());
    }
    if worst >= 1e-8 {
        problems.push(format!("normalization error {worst:e}"));
    }
    if built >= Duration::from_secs(1) {
        problems.push(format!("table build took {built:?}"));
    }
    verdict(
        problems.is_empty(),
        if problems.is_empty() {
            format!("J(0,1), J(1,1) exact to 1e-10, max |sum - 1| = {worst:.1e}, build {built:.2?}")
        } else {
            problems.join("; ")
        },
    )
}

fn r2() -> Verdict {
    let jt = JTable::build(3).unwrap();
    let config = SamplerConfig {
        mode: Mode::FixedK,
        init_k: 2,
        ..Default::default()
    };
    let mut worst = 0.0f64;
    for instance in 0..20u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + instance);
        let net = random_network(3, 2, 0.5, &mut rng);
        let exact =
            enumerate_posterior(&net, KMode::Fixed(2), &jt, EnumerationOptions::default()).unwrap();
        let init = sampler::random_assignment(3, 2, 2, &mut rng).unwrap();
        let mut state = ChainState::new(&net, init).unwrap();
        let mut empirical = EmpiricalDistribution::new();
        for _ in 0..1_000_000 {
            step(&mut state, &config, &net, &jt, &mut rng).unwrap();
            empirical.add(state.assignment()).unwrap();
        }
        worst = worst.max(tv_distance(&exact, &empirical).unwrap());
    }
    verdict(
        worst < 0.02,
        format!("max TV over 20 instances = {worst:.4} (bound 0.02)"),
    )
}

/// Half the nodes form a clique in every layer; nothing else is connected.
fn core_instance(n: usize, num_layers: usize) -> TemporalNetwork {
    let core = n.div_ceil(2);
    let mut edges = Vec::new();
    for layer in 0..num_layers {
        for i in 0..core {
            for j in i + 1..core {
                edges.push((layer, i, j));
            }
        }
    }
    TemporalNetwork::from_edges(n, num_layers, edges).unwrap()
}

/// Every pair touching the first half of the nodes is connected.
fn star_core_instance(n: usize, num_layers: usize) -> TemporalNetwork {
    let core = n.div_ceil(2);
    let mut edges = Vec::new();
    for layer in 0..num_layers {
        for i in 0..core {
            for j in i + 1..n {
                edges.push((layer, i, j));
            }
        }
    }
    TemporalNetwork::from_edges(n, num_layers, edges).unwrap()
}

fn variable_k_tv(net: &TemporalNetwork, jt: &JTable, steps: u64, seed: u64) -> f64 {
    let k_cap = 3;
    let options = EnumerationOptions {
        state_limit: 1 << 25,
        ..Default::default()
    };
    let exact = enumerate_posterior(net, KMode::UpTo(k_cap), jt, options).unwrap();
    let config = SamplerConfig {
        mode: Mode::NoMultiNode,
        k_max: k_cap,
        init_k: 1,
        ..Default::default()
    };
    let n = net.node_count();
    let mut state =
        ChainState::new(net, GroupAssignment::new(n, net.layer_count(), 1).unwrap()).unwrap();
    let mut rng = run_rng(seed, 0);
    let mut empirical = EmpiricalDistribution::new();
    for _ in 0..steps {
        step(&mut state, &config, net, jt, &mut rng).unwrap();
        empirical.add(state.assignment()).unwrap();
    }
    tv_distance(&exact, &empirical).unwrap()
}

fn r2b() -> Verdict {
    let jt = JTable::build(6).unwrap();
    let families: [(&str, Instance); 2] = [
        ("clique core", core_instance),
        ("star core", star_core_instance),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (idx, (name, build)) in families.iter().enumerate() {
        let small = build(3, 2);
        let large = build(6, 2);
        let tv3 = variable_k_tv(&small, &jt, 50_000_000, 11 + idx as u64);
        let tv6 = variable_k_tv(&large, &jt, 300_000_000, 21 + idx as u64);
        let spec = ProposalSpec {
            k_max: 3,
            ..ProposalSpec::new(Mode::NoMultiNode)
        };
        let bias3 = stationary_distribution(
            &small,
            KMode::UpTo(3),
            &jt,
            &spec,
            EnumerationOptions::default(),
        )
        .and_then(|chain| {
            let exact = enumerate_posterior(&small, KMode::UpTo(3), &jt, Default::default())?;
            hiercp::oracle::exact_tv(&exact, &chain)
        })
        .unwrap();
        ok &= tv6 < 0.1 && tv6 < tv3;
        parts.push(format!(
            "{name}: TV(n=6) = {tv6:.4}, TV(n=3) = {tv3:.4} (exact chain bias at n=3 {bias3:.4})"
        ));
    }
    verdict(ok, parts.join("; "))
}

/// Consensus `k` and agreement with the planted group-1 memberships of one
/// seeded run, voting over the second half of its records.
fn planted_run(
    net: &TemporalNetwork,
    planted: &GroupAssignment,
    jt: &JTable,
    init_k: usize,
    seed: u64,
) -> (usize, f64) {
    let config = SamplerConfig {
        runs: 1,
        seed,
        init_k,
        ..Default::default()
    };
    let out = sampler::run(&config, net, jt).unwrap();
    let records = &out[0].records;
    let c = consensus_with(&records[records.len() / 2..], ConsensusRule::Pattern).unwrap();
    if c.modal_k != 2 {
        return (c.modal_k, 0.0);
    }
    let same = (0..net.layer_count())
        .flat_map(|l| (0..net.node_count()).map(move |i| (l, i)))
        .filter(|&(l, i)| c.assignment.is_member(1, l, i) == planted.is_member(1, l, i))
        .count();
    (
        2,
        same as f64 / (net.node_count() * net.layer_count()) as f64,
    )
}

fn r3() -> Verdict {
    let mut rng = run_rng(1, 0);
    let (net, planted) = make_planted_instance(&PlantedParams::default(), &mut rng).unwrap();
    let jt = JTable::build(net.node_count()).unwrap();
    let recovered = |init_k: usize| {
        let runs: Vec<(usize, f64)> = (0..5)
            .map(|seed| planted_run(&net, &planted, &jt, init_k, seed))
            .collect();
        let good = runs.iter().filter(|(k, a)| *k == 2 && *a >= 0.95).count();
        (good, runs)
    };
    let (good, runs) = recovered(2);
    let detail: Vec<String> = runs
        .iter()
        .enumerate()
        .map(|(seed, (k, a))| format!("seed {seed}: k={k} agree={a:.3}"))
        .collect();
    // reported only: from four groups the chain is still shedding groups at
    // 10^6 steps
    let (from_four, _) = recovered(4);
    verdict(
        good >= 4,
        format!(
            "init k=2: {good}/5 runs recover ({}); init k=4: {from_four}/5",
            detail.join(", ")
        ),
    )
}

fn dataset(var: &str) -> Option<PathBuf> {
    let path = PathBuf::from(std::env::var_os(var)?);
    path.is_file().then_some(path)
}

fn paper_protocol(seed: u64) -> SamplerConfig {
    SamplerConfig {
        steps: 1_000_000,
        runs: 5,
        init_k: 4,
        multi_node_prob: 1e-3,
        thin: 10_000,
        seed,
        ..Default::default()
    }
}

fn density(edges: usize, pairs: usize) -> f64 {
    if pairs == 0 {
        0.0
    } else {
        edges as f64 / pairs as f64
    }
}

fn r4() -> Verdict {
    let Some(path) = dataset("HIERCP_JK_DATASET") else {
        return Blocked("dataset absent (set HIERCP_JK_DATASET)".into());
    };
    let net = TemporalNetwork::load(&path).unwrap();
    let jt = JTable::build(net.node_count()).unwrap();
    let out = sampler::run(&paper_protocol(0), &net, &jt).unwrap();
    let records: Vec<_> = out.into_iter().flat_map(|o| o.records).collect();
    let c = consensus_with(&records, ConsensusRule::Pattern).unwrap();
    if c.modal_k != 2 {
        return Fail(format!("consensus k = {}", c.modal_k));
    }
    let (core, periphery) = (
        hiercp::MembershipPattern(1),
        hiercp::MembershipPattern::EMPTY,
    );
    let mut parts = Vec::new();
    let mut ok = true;
    for layer in 0..net.layer_count() {
        let (ce, cp) = block_density(&net, &c.assignment, layer, core, core);
        let (xe, xp) = block_density(&net, &c.assignment, layer, core, periphery);
        let (pe, pp) = block_density(&net, &c.assignment, layer, periphery, periphery);
        let inner = density(ce, cp);
        let outer = density(xe + pe, xp + pp);
        ok &= inner > outer;
        parts.push(format!("layer {layer}: {inner:.3} > {outer:.3}"));
    }
    verdict(ok, format!("k = 2; {}", parts.join(", ")))
}

/// Edge density by highest common group, pooled over layers.
fn densities_by_level(net: &TemporalNetwork, g: &GroupAssignment) -> Vec<f64> {
    let mut edges = vec![0usize; g.k()];
    let mut pairs = vec![0usize; g.k()];
    for layer in 0..net.layer_count() {
        for i in 0..net.node_count() {
            for j in i + 1..net.node_count() {
                let h = g.highest_common_group(i, j, layer).unwrap();
                pairs[h] += 1;
                edges[h] += usize::from(net.is_adjacent(layer, i, j));
            }
        }
    }
    edges
        .iter()
        .zip(&pairs)
        .map(|(&e, &p)| density(e, p))
        .collect()
}

fn r5() -> Verdict {
    let Some(path) = dataset("HIERCP_LUKE_DATASET") else {
        return Blocked("dataset absent (set HIERCP_LUKE_DATASET)".into());
    };
    let net = TemporalNetwork::load(&path).unwrap();
    let jt = JTable::build(net.node_count()).unwrap();
    let mut last = String::new();
    for repetition in 0..3u64 {
        let out = sampler::run(&paper_protocol(repetition), &net, &jt).unwrap();
        let mut ks = Vec::new();
        let mut ordered = false;
        for run in &out {
            let c = consensus_with(&run.records, ConsensusRule::Pattern).unwrap();
            ks.push(c.modal_k);
            if c.modal_k == 3 {
                let d = densities_by_level(&net, &c.assignment);
                ordered |= d.windows(2).all(|w| w[0] < w[1]);
            }
        }
        let in_range = ks.iter().all(|k| (2..=4).contains(k));
        last = format!("repetition {repetition}: per-run k {ks:?}, ordered k=3 run: {ordered}");
        if in_range && ordered {
            return Pass(last);
        }
    }
    Fail(last)
}

/// Chi-square test of observed proposal outcomes against closed forms.
fn outcome_test(
    g: &GroupAssignment,
    config: &SamplerConfig,
    draws: u64,
    seed: u64,
) -> (f64, usize, HashMap<MoveKind, u64>) {
    let spec = ProposalSpec {
        multi_node_prob: config.multi_node_prob,
        k_max: config.k_max,
        restrict_multi_node_layer1: config.restrict_multi_node_layer1,
        group_addition: config.group_addition,
        ..ProposalSpec::new(config.mode)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut outcomes: HashMap<GroupAssignment, u64> = HashMap::new();
    let mut kinds: HashMap<MoveKind, u64> = HashMap::new();
    let mut stay = 0u64;
    for _ in 0..draws {
        let mv = propose(g, config, &mut rng);
        *kinds.entry(mv.kind()).or_default() += 1;
        let to = apply(g, &mv);
        if to == *g {
            stay += 1;
        } else {
            *outcomes.entry(to).or_default() += 1;
        }
    }
    let total = draws as f64;
    let mut bins: Vec<(f64, f64)> = Vec::new();
    let mut seen_mass = 0.0;
    for (to, &count) in &outcomes {
        let q = proposal_probability(g, to, &spec).unwrap();
        seen_mass += q;
        bins.push((count as f64, q * total));
    }
    // The unseen remainder is split into the stay bin and the mass of
    // reachable but unobserved outcomes.
    let mut reachable_mass = 0.0;
    for_each_neighbor(g, &spec, |to| {
        reachable_mass += proposal_probability(g, to, &spec).unwrap();
    });
    bins.push((stay as f64, (1.0 - reachable_mass) * total));
    bins.push((0.0, (reachable_mass - seen_mass).max(0.0) * total));

    // pool bins with small expectations
    bins.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut pooled: Vec<(f64, f64)> = Vec::new();
    let mut acc = (0.0, 0.0);
    for (o, e) in bins {
        acc = (acc.0 + o, acc.1 + e);
        if acc.1 >= 20.0 {
            pooled.push(acc);
            acc = (0.0, 0.0);
        }
    }
    if acc.1 > 0.0 || acc.0 > 0.0 {
        match pooled.last_mut() {
            Some(last) => *last = (last.0 + acc.0, last.1 + acc.1),
            None => pooled.push(acc),
        }
    }
    let stat: f64 = pooled.iter().map(|(o, e)| (o - e).powi(2) / e).sum();
    let dof = pooled.len() - 1;
    let p = 1.0 - ChiSquared::new(dof as f64).unwrap().cdf(stat);
    (p, dof, kinds)
}

/// Every state one proposal can reach from `g`.
fn for_each_neighbor(
    g: &GroupAssignment,
    spec: &ProposalSpec,
    mut f: impl FnMut(&GroupAssignment),
) {
    let k = g.k();
    let mut seen = std::collections::HashSet::new();
    let mut visit = |h: GroupAssignment| {
        if h != *g && seen.insert(h.clone()) {
            f(&h);
        }
    };
    for layer in 0..g.layer_count() {
        for node in 0..g.node_count() {
            for r in 1..k {
                let mut h = g.clone();
                h.set_member(r, layer, node, !g.is_member(r, layer, node));
                visit(h);
            }
        }
        let subsets = 1u64 << (k - 1);
        for a in 0..subsets {
            for b in 0..subsets {
                if a != b {
                    visit(apply(
                        g,
                        &Move::MultiNodeSwap {
                            layer,
                            first: hiercp::MembershipPattern(a),
                            second: hiercp::MembershipPattern(b),
                        },
                    ));
                }
            }
        }
    }
    if k < spec.k_max {
        for position in 1..=k {
            visit(apply(g, &Move::AddGroup { position }));
        }
    }
    for r in 1..k {
        if g.is_group_empty(r) {
            visit(apply(g, &Move::RemoveGroup { group: r }));
        }
    }
}

fn r6() -> Verdict {
    // k = 3 on 5 nodes and 3 layers, group 2 empty so removals are possible
    let (n, num_layers, k) = (5usize, 3usize, 3usize);
    let mut g = GroupAssignment::new(n, num_layers, k).unwrap();
    for (layer, node) in [(0, 0), (0, 1), (1, 1), (1, 3), (2, 0), (2, 4)] {
        g.set_member(1, layer, node, true);
    }
    let draws = 1_000_000u64;
    let mut parts = Vec::new();
    let mut ok = true;
    for (label, group_addition) in [
        ("gated", GroupAddition::LayerGated),
        ("ungated", GroupAddition::Ungated),
    ] {
        let config = SamplerConfig {
            group_addition,
            ..Default::default()
        };
        let (p, dof, kinds) = outcome_test(&g, &config, draws, 7);
        let branch = (1.0 - config.multi_node_prob) / (2.0 * k as f64 * (n as f64 + 1.0));
        let q_add = match group_addition {
            GroupAddition::LayerGated => branch / num_layers as f64,
            GroupAddition::Ungated => branch,
        };
        let adds = kinds.get(&MoveKind::AddGroup).copied().unwrap_or(0) as f64;
        let sigma = (draws as f64 * q_add * (1.0 - q_add)).sqrt();
        let z = (adds - draws as f64 * q_add) / sigma;
        ok &= p > 1e-3 && z.abs() < 3.0;
        parts.push(format!(
            "{label}: chi-square p = {p:.3} (dof {dof}), add-group rate {:.5} vs {q_add:.5} (z = {z:.2})",
            adds / draws as f64
        ));
    }
    let config = SamplerConfig {
        mode: Mode::FixedK,
        ..Default::default()
    };
    let (p, dof, _) = outcome_test(&g, &config, draws, 8);
    ok &= p > 1e-3;
    parts.push(format!("fixed-k: p = {p:.3} (dof {dof})"));
    verdict(ok, parts.join("; "))
}

fn r7() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let net = random_network(8, 3, 0.4, &mut rng);
    let jt = JTable::build(8).unwrap();
    let mut worst = 0.0f64;
    let mut k_seen = std::collections::BTreeSet::new();
    for mode in [Mode::Main, Mode::FixedK, Mode::NoMultiNode] {
        let config = SamplerConfig {
            mode,
            multi_node_prob: 0.05,
            init_k: 3,
            k_max: 6,
            ..Default::default()
        };
        let init = sampler::random_assignment(8, 3, 3, &mut rng).unwrap();
        let mut state = ChainState::new(&net, init).unwrap();
        for _ in 0..10_000 {
            let before = state.assignment().clone();
            let mv = propose(&before, &config, &mut rng);
            let eval = state.evaluate(&net, &jt, &mv).unwrap();
            let after = apply(&before, &mv);
            let full = full_target(&net, &jt, &after) - full_target(&net, &jt, &before);
            worst = worst.max((eval.log_ratio - full).abs());
            if eval.log_ratio >= 0.0 || rng.gen::<f64>().ln() < eval.log_ratio {
                state.commit(eval).unwrap();
            }
            if *state.assignment() != before && *state.assignment() != after {
                return Fail(format!("committed state differs from {mv:?} applied"));
            }
            let recomputed = SufficientStats::compute(&net, state.assignment()).unwrap();
            if *state.stats() != recomputed {
                return Fail(format!("{mode:?}: statistics diverged after {mv:?}"));
            }
            k_seen.insert(state.k());
        }
    }
    verdict(
        worst < 1e-9,
        format!(
            "3 x 10^4 steps, stats exact, max |delta error| = {worst:.1e}, k visited {k_seen:?}"
        ),
    )
}

fn r8() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(88);
    let (n, num_layers) = (4usize, 3usize);
    let net = random_network(n, num_layers, 0.5, &mut rng);
    let jt = JTable::build(n).unwrap();
    let config = SamplerConfig {
        mode: Mode::NoMultiNode,
        init_k: 2,
        ..Default::default()
    };
    let init = sampler::random_assignment(n, num_layers, 2, &mut rng).unwrap();
    let mut state = ChainState::new(&net, init).unwrap();
    let (mut proposed, mut accepted) = (0u64, 0u64);
    while proposed < 100_000 {
        let out = step(&mut state, &config, &net, &jt, &mut rng).unwrap();
        if out.proposal.kind() == MoveKind::AddGroup {
            proposed += 1;
            accepted += u64::from(out.accepted);
        }
    }
    let want = ((num_layers - 1) as f64 * jt.log_j(0, n)).exp();
    let rate = accepted as f64 / proposed as f64;
    let sigma = (want * (1.0 - want) / proposed as f64).sqrt();
    let z = (rate - want) / sigma;
    verdict(
        z.abs() < 3.0,
        format!("acceptance {rate:.5} vs {want:.5} over {proposed} additions (z = {z:.2})"),
    )
}

fn main() {
    let criteria: [(&str, Check); 9] = [
        ("R1", r1),
        ("R2", r2),
        ("R2b", r2b),
        ("R3", r3),
        ("R4", r4),
        ("R5", r5),
        ("R6", r6),
        ("R7", r7),
        ("R8", r8),
    ];
    let wanted: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (name, check) in criteria {
        if !wanted.is_empty() && !wanted.iter().any(|w| w == name) {
            continue;
        }
        let start = Instant::now();
        let result = check();
        let took = start.elapsed();
        let (tag, detail) = match result {
            Pass(d) => ("PASS", d),
            Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Blocked(d) => ("BLOCKED", d),
        };
        println!("{name} {tag} [{took:.1?}] {detail}");
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
