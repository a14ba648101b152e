//! Graph-cut machinery: max-flow/min-cut, exact minimization of binary
//! submodular pairwise energies, and alpha-beta swap moves for the
//! multi-label case.

use crate::error::{Error, Result};

/// Residual capacities at or below this are treated as saturated.
const FLOW_EPS: f64 = 1e-12;

/// A move is accepted only if it lowers the energy by more than this.
pub const SWAP_ACCEPT_EPS: f64 = 1e-12;

#[derive(Clone, Copy, Debug)]
struct Arc {
    to: usize,
    cap: f64,
}

/// Directed network with paired reverse arcs. Node ids are `0..nodes`.
#[derive(Clone, Debug)]
pub struct FlowNetwork {
    source: usize,
    sink: usize,
    arcs: Vec<Arc>,
    adjacency: Vec<Vec<usize>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaxFlow {
    pub value: f64,
    /// `true` for nodes on the source side of a minimum cut.
    pub source_side: Vec<bool>,
}

impl FlowNetwork {
    pub fn new(nodes: usize, source: usize, sink: usize) -> Self {
        assert!(source < nodes && sink < nodes && source != sink);
        Self {
            source,
            sink,
            arcs: Vec::new(),
            adjacency: vec![Vec::new(); nodes],
        }
    }

    pub fn nodes(&self) -> usize {
        self.adjacency.len()
    }

    /// Adds `u → v` with capacity `cap` and its twin `v → u` with `reverse_cap`.
    pub fn add_edge(&mut self, u: usize, v: usize, cap: f64, reverse_cap: f64) {
        assert!(cap >= 0.0 && reverse_cap >= 0.0, "negative capacity");
        let id = self.arcs.len();
        self.arcs.push(Arc { to: v, cap });
        self.arcs.push(Arc {
            to: u,
            cap: reverse_cap,
        });
        self.adjacency[u].push(id);
        self.adjacency[v].push(id + 1);
    }

    /// Dinic's blocking-flow algorithm on the residual network, in place.
    pub fn solve(&mut self) -> MaxFlow {
        let n = self.nodes();
        let mut level = vec![usize::MAX; n];
        let mut next_arc = vec![0usize; n];
        let mut queue = Vec::with_capacity(n);
        let mut value = 0.0;
        while self.build_levels(&mut level, &mut queue) {
            next_arc.iter_mut().for_each(|p| *p = 0);
            loop {
                let pushed = self.augment(self.source, f64::INFINITY, &level, &mut next_arc);
                if pushed <= FLOW_EPS {
                    break;
                }
                value += pushed;
            }
        }
        self.build_levels(&mut level, &mut queue);
        MaxFlow {
            value,
            source_side: level.iter().map(|&l| l != usize::MAX).collect(),
        }
    }

    fn build_levels(&self, level: &mut [usize], queue: &mut Vec<usize>) -> bool {
        level.iter_mut().for_each(|l| *l = usize::MAX);
        queue.clear();
        level[self.source] = 0;
        queue.push(self.source);
        let mut head = 0;
        while head < queue.len() {
            let u = queue[head];
            head += 1;
            for &id in &self.adjacency[u] {
                let arc = self.arcs[id];
                if arc.cap > FLOW_EPS && level[arc.to] == usize::MAX {
                    level[arc.to] = level[u] + 1;
                    queue.push(arc.to);
                }
            }
        }
        level[self.sink] != usize::MAX
    }

    fn augment(&mut self, u: usize, limit: f64, level: &[usize], next_arc: &mut [usize]) -> f64 {
        if u == self.sink {
            return limit;
        }
        while next_arc[u] < self.adjacency[u].len() {
            let id = self.adjacency[u][next_arc[u]];
            let Arc { to, cap } = self.arcs[id];
            if cap > FLOW_EPS && level[to] == level[u] + 1 {
                let pushed = self.augment(to, limit.min(cap), level, next_arc);
                if pushed > FLOW_EPS {
                    self.arcs[id].cap -= pushed;
                    self.arcs[id ^ 1].cap += pushed;
                    return pushed;
                }
            }
            next_arc[u] += 1;
        }
        0.0
    }
}

/// Max-flow value and a minimum cut of `network` (left untouched).
pub fn max_flow(network: &FlowNetwork) -> MaxFlow {
    network.clone().solve()
}

/// A pairwise energy over binary variables.
///
/// `pairs` hold `[E(0,0), E(0,1), E(1,0), E(1,1)]` for each `(p, q)`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BinaryEnergy {
    pub unary: Vec<[f64; 2]>,
    pub pairs: Vec<(usize, usize, [f64; 4])>,
}

impl BinaryEnergy {
    pub fn new(nodes: usize) -> Self {
        Self {
            unary: vec![[0.0; 2]; nodes],
            pairs: Vec::new(),
        }
    }

    pub fn nodes(&self) -> usize {
        self.unary.len()
    }

    pub fn energy(&self, labels: &[bool]) -> f64 {
        let mut total: f64 = self
            .unary
            .iter()
            .zip(labels)
            .map(|(u, &l)| u[l as usize])
            .sum();
        for &(p, q, e) in &self.pairs {
            total += e[2 * labels[p] as usize + labels[q] as usize];
        }
        total
    }
}

/// Globally minimizes a submodular binary energy with one s-t cut.
///
/// Returns the labels (`true` = label 1). Fails with `NotSubmodular` when a
/// pair has `E(0,0) + E(1,1) > E(0,1) + E(1,0)`.
pub fn binary_fuse(energy: &BinaryEnergy) -> Result<Vec<bool>> {
    let n = energy.nodes();
    let (source, sink) = (n, n + 1);
    let mut network = FlowNetwork::new(n + 2, source, sink);
    let mut unary: Vec<[f64; 2]> = energy.unary.clone();
    for &(p, q, [a, b, c, d]) in &energy.pairs {
        let coupling = b + c - a - d;
        let scale = 1.0 + a.abs() + b.abs() + c.abs() + d.abs();
        if coupling < -1e-9 * scale {
            return Err(Error::NotSubmodular {
                a: p,
                b: q,
                excess: -coupling,
            });
        }
        // E(x, y) = a + (c − a)x + (d − c)y + coupling·(1 − x)y
        unary[p][1] += c - a;
        unary[q][1] += d - c;
        if coupling > 0.0 && p != q {
            network.add_edge(p, q, coupling, 0.0);
        }
    }
    // Label 1 sits on the sink side and pays the source arc.
    for (p, [u0, u1]) in unary.iter().enumerate() {
        if u1 > u0 {
            network.add_edge(source, p, u1 - u0, 0.0);
        } else if u0 > u1 {
            network.add_edge(p, sink, u0 - u1, 0.0);
        }
    }
    let cut = network.solve();
    Ok((0..n).map(|p| !cut.source_side[p]).collect())
}

/// A multi-label pairwise energy
/// `E(x) = Σ_k unary[k][x_k] + weight · Σ_{(k,k')} V(x_k, x_k')`.
#[derive(Clone, Debug)]
pub struct PairwiseEnergy {
    sites: usize,
    states: usize,
    unary: Vec<f64>,
    weight: f64,
    edges: Vec<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
    potential: Vec<f64>,
}

impl PairwiseEnergy {
    /// `V(a, b) = 1 − aᵀb` over the given state vectors.
    pub fn with_state_vectors(
        states: &[Vec<f64>],
        unary: Vec<f64>,
        weight: f64,
        edges: Vec<(usize, usize)>,
    ) -> Result<Self> {
        let s = states.len();
        let mut potential = vec![0.0; s * s];
        for a in 0..s {
            for b in 0..s {
                let dot: f64 = states[a].iter().zip(&states[b]).map(|(x, y)| x * y).sum();
                potential[a * s + b] = 1.0 - dot;
            }
        }
        Self::new(s, unary, weight, edges, potential)
    }

    /// General potential table `potential[a * states + b] = V(a, b)`.
    pub fn new(
        states: usize,
        unary: Vec<f64>,
        weight: f64,
        edges: Vec<(usize, usize)>,
        potential: Vec<f64>,
    ) -> Result<Self> {
        if states == 0 || unary.len() % states != 0 {
            return Err(Error::DimensionMismatch(format!(
                "unary table of {} entries is not a multiple of {states} states",
                unary.len()
            )));
        }
        if potential.len() != states * states {
            return Err(Error::DimensionMismatch(format!(
                "potential needs {} entries",
                states * states
            )));
        }
        if !(weight >= 0.0) {
            return Err(Error::InvalidParams(format!(
                "pairwise weight must be >= 0, got {weight}"
            )));
        }
        let sites = unary.len() / states;
        let mut adjacency = vec![Vec::new(); sites];
        for &(p, q) in &edges {
            if p >= sites || q >= sites || p == q {
                return Err(Error::DimensionMismatch(format!(
                    "edge ({p}, {q}) invalid for {sites} sites"
                )));
            }
            adjacency[p].push(q);
            adjacency[q].push(p);
        }
        for a in 0..states {
            for b in a + 1..states {
                let v = |x: usize, y: usize| potential[x * states + y];
                let excess = v(a, a) + v(b, b) - v(a, b) - v(b, a);
                if excess > 1e-9 * (1.0 + v(a, b).abs() + v(b, a).abs()) {
                    return Err(Error::NotSubmodular { a, b, excess });
                }
            }
        }
        Ok(Self {
            sites,
            states,
            unary,
            weight,
            edges,
            adjacency,
            potential,
        })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn states(&self) -> usize {
        self.states
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn unary(&self, site: usize, state: usize) -> f64 {
        self.unary[site * self.states + state]
    }

    pub fn potential(&self, a: usize, b: usize) -> f64 {
        self.potential[a * self.states + b]
    }

    pub fn energy(&self, assignment: &[usize]) -> f64 {
        let unary: f64 = assignment
            .iter()
            .enumerate()
            .map(|(k, &s)| self.unary(k, s))
            .sum();
        let pair: f64 = self
            .edges
            .iter()
            .map(|&(p, q)| self.potential(assignment[p], assignment[q]))
            .sum();
        unary + self.weight * pair
    }

    /// The two-state problem over the sites currently in `{alpha, beta}`,
    /// with fixed neighbours folded into the unaries. Returns the subproblem
    /// and the site index of each of its nodes.
    pub fn swap_subproblem(
        &self,
        assignment: &[usize],
        alpha: usize,
        beta: usize,
    ) -> (BinaryEnergy, Vec<usize>) {
        let mut local = vec![usize::MAX; self.sites];
        let mut members = Vec::new();
        for (k, &s) in assignment.iter().enumerate() {
            if s == alpha || s == beta {
                local[k] = members.len();
                members.push(k);
            }
        }
        let mut sub = BinaryEnergy::new(members.len());
        for (node, &k) in members.iter().enumerate() {
            let mut u = [self.unary(k, alpha), self.unary(k, beta)];
            for &q in &self.adjacency[k] {
                if local[q] == usize::MAX {
                    u[0] += self.weight * self.potential(alpha, assignment[q]);
                    u[1] += self.weight * self.potential(beta, assignment[q]);
                }
            }
            sub.unary[node] = u;
        }
        let w = self.weight;
        let table = [
            w * self.potential(alpha, alpha),
            w * self.potential(alpha, beta),
            w * self.potential(beta, alpha),
            w * self.potential(beta, beta),
        ];
        for &(p, q) in &self.edges {
            if local[p] != usize::MAX && local[q] != usize::MAX {
                sub.pairs.push((local[p], local[q], table));
            }
        }
        (sub, members)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SwapOutcome {
    pub assignment: Vec<usize>,
    pub energy: f64,
    pub sweeps: usize,
    pub moves: usize,
}

/// Alpha-beta swap from `init`. State pairs are visited in lexicographic
/// order; a move is kept only if it strictly lowers the energy. Stops after a
/// sweep without moves or after `max_sweeps` sweeps.
pub fn alpha_beta_swap(
    energy: &PairwiseEnergy,
    init: &[usize],
    max_sweeps: usize,
) -> Result<SwapOutcome> {
    if init.len() != energy.sites {
        return Err(Error::DimensionMismatch(format!(
            "assignment has {} sites, energy {}",
            init.len(),
            energy.sites
        )));
    }
    if let Some(&bad) = init.iter().find(|&&s| s >= energy.states) {
        return Err(Error::IndexOutOfRange {
            index: bad,
            len: energy.states,
        });
    }
    let mut assignment = init.to_vec();
    let mut present = vec![false; energy.states];
    let mut sweeps = 0;
    let mut moves = 0;
    while sweeps < max_sweeps {
        sweeps += 1;
        let mut changed = false;
        for alpha in 0..energy.states {
            for beta in alpha + 1..energy.states {
                present.iter_mut().for_each(|p| *p = false);
                assignment.iter().for_each(|&s| present[s] = true);
                if !present[alpha] && !present[beta] {
                    continue;
                }
                let (sub, members) = energy.swap_subproblem(&assignment, alpha, beta);
                let current: Vec<bool> = members.iter().map(|&k| assignment[k] == beta).collect();
                let proposal = binary_fuse(&sub)?;
                if sub.energy(&proposal) < sub.energy(&current) - SWAP_ACCEPT_EPS {
                    for (&k, &to_beta) in members.iter().zip(&proposal) {
                        assignment[k] = if to_beta { beta } else { alpha };
                    }
                    moves += 1;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    Ok(SwapOutcome {
        energy: energy.energy(&assignment),
        assignment,
        sweeps,
        moves,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_arc() {
        let mut g = FlowNetwork::new(2, 0, 1);
        g.add_edge(0, 1, 3.0, 0.0);
        let f = max_flow(&g);
        assert_eq!(f.value, 3.0);
        assert_eq!(f.source_side, vec![true, false]);
    }

    #[test]
    fn diamond() {
        // s=0, a=1, b=2, t=3
        let mut g = FlowNetwork::new(4, 0, 3);
        g.add_edge(0, 1, 2.0, 0.0);
        g.add_edge(0, 2, 2.0, 0.0);
        g.add_edge(1, 3, 1.0, 0.0);
        g.add_edge(2, 3, 3.0, 0.0);
        assert_eq!(max_flow(&g).value, 3.0);
    }

    #[test]
    fn disconnected_terminals() {
        let mut g = FlowNetwork::new(4, 0, 3);
        g.add_edge(0, 1, 5.0, 0.0);
        g.add_edge(2, 3, 5.0, 0.0);
        let f = max_flow(&g);
        assert_eq!(f.value, 0.0);
        assert_eq!(f.source_side, vec![true, true, false, false]);
    }

    #[test]
    fn uniform_preference_without_coupling() {
        let mut e = BinaryEnergy::new(3);
        e.unary = vec![[0.0, 1.0]; 3];
        assert_eq!(binary_fuse(&e).unwrap(), vec![false; 3]);
    }

    #[test]
    fn strong_coupling_agrees_on_cheaper_total() {
        // Site 0 prefers 0 by 1, site 1 prefers 1 by 2: both take label 1.
        let mut e = BinaryEnergy::new(2);
        e.unary = vec![[0.0, 1.0], [2.0, 0.0]];
        e.pairs.push((0, 1, [0.0, 10.0, 10.0, 0.0]));
        let labels = binary_fuse(&e).unwrap();
        assert_eq!(labels, vec![true, true]);
        assert_eq!(e.energy(&labels), 1.0);
    }

    #[test]
    fn supermodular_pair_is_rejected() {
        let mut e = BinaryEnergy::new(2);
        e.pairs.push((0, 1, [1.0, 0.0, 0.0, 1.0]));
        assert!(matches!(binary_fuse(&e), Err(Error::NotSubmodular { .. })));
    }

    #[test]
    fn potts_swap_from_optimum_is_a_fixed_point() {
        let potts = vec![0.0, 1.0, 1.0, 0.0];
        let unary = vec![0.0, 5.0, 0.0, 5.0, 5.0, 0.0];
        let e = PairwiseEnergy::new(2, unary, 1.0, vec![(0, 1), (1, 2)], potts).unwrap();
        let out = alpha_beta_swap(&e, &[0, 0, 1], 10).unwrap();
        assert_eq!(out.assignment, vec![0, 0, 1]);
        assert_eq!(out.moves, 0);
        assert_eq!(out.energy, 1.0);
    }

    #[test]
    fn non_submodular_potential_is_rejected() {
        let anti = vec![1.0, 0.0, 0.0, 1.0];
        assert!(matches!(
            PairwiseEnergy::new(2, vec![0.0; 4], 1.0, vec![(0, 1)], anti),
            Err(Error::NotSubmodular { .. })
        ));
    }
}
