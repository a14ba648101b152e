use comix::graphcut::{alpha_beta_swap, binary_fuse, BinaryEnergy, FlowNetwork, PairwiseEnergy};
use comix::rng::SplitMix64;

fn random_network(rng: &mut SplitMix64, nodes: usize) -> (FlowNetwork, Vec<(usize, usize, f64)>) {
    let (source, sink) = (0, nodes - 1);
    let mut net = FlowNetwork::new(nodes, source, sink);
    let mut arcs = Vec::new();
    for u in 0..nodes {
        for v in 0..nodes {
            if u != v && rng.next_f64() < 0.4 {
                let cap = rng.below(10) as f64;
                net.add_edge(u, v, cap, 0.0);
                arcs.push((u, v, cap));
            }
        }
    }
    (net, arcs)
}

/// Minimum over every source-containing, sink-excluding vertex subset.
fn brute_min_cut(nodes: usize, arcs: &[(usize, usize, f64)]) -> f64 {
    let inner = nodes - 2;
    (0..1u32 << inner)
        .map(|mask| {
            let side = |v: usize| v == 0 || (v != nodes - 1 && mask >> (v - 1) & 1 == 1);
            arcs.iter()
                .filter(|&&(u, v, _)| side(u) && !side(v))
                .map(|&(_, _, c)| c)
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn max_flow_equals_brute_force_min_cut() {
    let mut rng = SplitMix64::new(5);
    for _ in 0..150 {
        let nodes = 2 + rng.below(8);
        let (mut net, arcs) = random_network(&mut rng, nodes);
        let flow = net.solve();
        assert_eq!(flow.value, brute_min_cut(nodes, &arcs));
        let cut: f64 = arcs
            .iter()
            .filter(|&&(u, v, _)| flow.source_side[u] && !flow.source_side[v])
            .map(|&(_, _, c)| c)
            .sum();
        assert_eq!(cut, flow.value);
        assert!(flow.source_side[0] && !flow.source_side[nodes - 1]);
    }
}

fn random_binary(rng: &mut SplitMix64, n: usize) -> BinaryEnergy {
    let mut e = BinaryEnergy::new(n);
    for u in e.unary.iter_mut() {
        *u = [rng.next_f64() * 4.0 - 2.0, rng.next_f64() * 4.0 - 2.0];
    }
    for p in 0..n {
        for q in p + 1..n {
            if rng.next_f64() < 0.5 {
                let (b, c) = (rng.next_f64(), rng.next_f64());
                let a = rng.next_f64() - 0.5;
                let d = b + c - a - rng.next_f64();
                e.pairs.push((p, q, [a, b, c, d]));
            }
        }
    }
    e
}

#[test]
fn binary_fuse_finds_global_minimum_on_dense_graphs() {
    let mut rng = SplitMix64::new(8);
    for _ in 0..100 {
        let n = 1 + rng.below(9);
        let e = random_binary(&mut rng, n);
        let best = (0..1u32 << n)
            .map(|mask| e.energy(&(0..n).map(|b| mask >> b & 1 == 1).collect::<Vec<_>>()))
            .fold(f64::INFINITY, f64::min);
        let got = e.energy(&binary_fuse(&e).unwrap());
        assert!((got - best).abs() < 1e-9, "{got} vs {best}");
    }
}

fn chain_energy(rng: &mut SplitMix64, sites: usize, states: usize) -> PairwiseEnergy {
    let vectors: Vec<Vec<f64>> = (0..states)
        .map(|s| (0..states).map(|i| f64::from(u8::from(i == s))).collect())
        .collect();
    let unary = (0..sites * states).map(|_| rng.next_f64()).collect();
    let edges = (1..sites).map(|k| (k - 1, k)).collect();
    PairwiseEnergy::with_state_vectors(&vectors, unary, 0.3, edges).unwrap()
}

fn exhaustive(e: &PairwiseEnergy) -> f64 {
    let (n, s) = (e.sites(), e.states());
    let mut x = vec![0; n];
    let mut best = f64::INFINITY;
    loop {
        best = best.min(e.energy(&x));
        let mut i = 0;
        loop {
            if i == n {
                return best;
            }
            x[i] += 1;
            if x[i] < s {
                break;
            }
            x[i] = 0;
            i += 1;
        }
    }
}

#[test]
fn two_state_swap_is_exact() {
    let mut rng = SplitMix64::new(21);
    for _ in 0..50 {
        let e = chain_energy(&mut rng, 6, 2);
        let out = alpha_beta_swap(&e, &[0; 6], 8).unwrap();
        assert!((out.energy - exhaustive(&e)).abs() < 1e-12);
    }
}

#[test]
fn swap_result_admits_no_improving_swap_move() {
    let mut rng = SplitMix64::new(34);
    for _ in 0..30 {
        let (n, s) = (5, 3);
        let e = chain_energy(&mut rng, n, s);
        let init: Vec<usize> = (0..n).map(|_| rng.below(s)).collect();
        let out = alpha_beta_swap(&e, &init, 50).unwrap();
        assert!(out.energy <= e.energy(&init) + 1e-12);
        assert!((out.energy - e.energy(&out.assignment)).abs() < 1e-12);
        for a in 0..s {
            for b in a + 1..s {
                let members: Vec<usize> = (0..n)
                    .filter(|&k| out.assignment[k] == a || out.assignment[k] == b)
                    .collect();
                for mask in 0..1u32 << members.len() {
                    let mut x = out.assignment.clone();
                    for (bit, &k) in members.iter().enumerate() {
                        x[k] = if mask >> bit & 1 == 1 { b } else { a };
                    }
                    assert!(e.energy(&x) >= out.energy - 1e-9);
                }
            }
        }
    }
}
