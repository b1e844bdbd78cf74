//! Monte-Carlo cascade simulation on configuration-model graphs.
//!
//! Independent of the branching-process analysis in [`crate::cascade`]: it
//! builds finite random graphs, draws protection and vulnerability per node
//! and floods infections from a random seed with no hop limit.
//!
//! Randomness comes from ChaCha8 (`rand_chacha::ChaCha8Rng`). Trial `i` of a
//! run with seed `s` uses `ChaCha8Rng::seed_from_u64(s)` switched to stream
//! `i`, so results depend only on `(s, i)` and not on scheduling.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::exposure::{Action, SocialState};
use crate::model::{DegreeDistribution, ModelParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimConfig {
    pub n: usize,
    pub trials: usize,
    /// Infected fraction of `n` at or above which a trial counts as a cascade.
    pub cascade_fraction: f64,
    pub seed: u64,
    /// Drop self-loops and repeated edges after stub matching.
    pub simple_graph: bool,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            n: 50_000,
            trials: 200,
            cascade_fraction: 0.01,
            seed: 0,
            simple_graph: false,
        }
    }
}

impl SimConfig {
    pub fn validate(&self, dist: &DegreeDistribution) -> Result<()> {
        if self.n < dist.d_max() + 1 {
            return Err(invalid(format!("n = {} must be at least d_max + 1 = {}", self.n, dist.d_max() + 1)));
        }
        if self.n > u32::MAX as usize {
            return Err(invalid("n exceeds u32 node indices"));
        }
        if self.trials == 0 {
            return Err(invalid("trials must be at least 1"));
        }
        if !(self.cascade_fraction > 0.0 && self.cascade_fraction < 1.0) {
            return Err(invalid(format!("cascade_fraction = {} not in (0, 1)", self.cascade_fraction)));
        }
        Ok(())
    }

    /// Infected count at which a trial is a cascade.
    pub fn cascade_size(&self) -> usize {
        (self.cascade_fraction * self.n as f64).ceil() as usize
    }
}

/// Undirected multigraph in compressed adjacency form. A self-loop appears
/// twice in its node's list, once per stub.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    targets: Vec<u32>,
}

impl Graph {
    fn from_edges(n: usize, edges: &[(u32, u32)]) -> Self {
        let mut degree = vec![0usize; n];
        for &(a, b) in edges {
            degree[a as usize] += 1;
            degree[b as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets[..n].to_vec();
        let mut targets = vec![0u32; offsets[n]];
        for &(a, b) in edges {
            targets[fill[a as usize]] = b;
            fill[a as usize] += 1;
            targets[fill[b as usize]] = a;
            fill[b as usize] += 1;
        }
        Graph { offsets, targets }
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Number of edges, self-loops counted once.
    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    pub fn degree(&self, node: usize) -> usize {
        self.offsets[node + 1] - self.offsets[node]
    }

    pub fn neighbors(&self, node: usize) -> &[u32] {
        &self.targets[self.offsets[node]..self.offsets[node + 1]]
    }

    pub fn degree_sum(&self) -> usize {
        self.targets.len()
    }

    /// Copy without self-loops and with repeated edges collapsed.
    pub fn simplified(&self) -> Graph {
        let mut edges = Vec::with_capacity(self.edge_count());
        for u in 0..self.node_count() {
            let mut nb: Vec<u32> = self.neighbors(u).iter().copied().filter(|&v| v as usize > u).collect();
            nb.sort_unstable();
            nb.dedup();
            edges.extend(nb.into_iter().map(|v| (u as u32, v)));
        }
        Graph::from_edges(self.node_count(), &edges)
    }
}

/// Configuration-model multigraph with i.i.d. degrees drawn from `dist`.
///
/// An odd stub total is fixed by redrawing one uniformly chosen node's
/// degree until the total is even. Self-loops and multi-edges are kept.
pub fn sample_configuration_graph<R: Rng + ?Sized>(dist: &DegreeDistribution, n: usize, rng: &mut R) -> Result<Graph> {
    if n < 2 {
        return Err(invalid("graph needs at least two nodes"));
    }
    if n > u32::MAX as usize {
        return Err(invalid("n exceeds u32 node indices"));
    }
    let sampler = WeightedIndex::new(dist.masses()).map_err(|e| invalid(format!("bad degree weights: {e}")))?;
    let mut degrees: Vec<usize> = (0..n).map(|_| sampler.sample(rng) + 1).collect();

    let mut total: usize = degrees.iter().sum();
    if total % 2 == 1 {
        let has_even = dist.degrees().any(|d| d % 2 == 0 && dist.mass(d) > 0.0);
        if !has_even {
            return Err(invalid(format!(
                "all degrees in the support are odd and n = {n} is odd: no graph exists"
            )));
        }
        let node = rng.random_range(0..n);
        loop {
            let redraw = sampler.sample(rng) + 1;
            if (total - degrees[node] + redraw).is_multiple_of(2) {
                total = total - degrees[node] + redraw;
                degrees[node] = redraw;
                break;
            }
        }
    }

    let mut stubs: Vec<u32> = Vec::with_capacity(total);
    for (node, &d) in degrees.iter().enumerate() {
        stubs.extend(std::iter::repeat_n(node as u32, d));
    }
    stubs.shuffle(rng);
    let edges: Vec<(u32, u32)> = stubs.chunks_exact(2).map(|p| (p[0], p[1])).collect();
    Ok(Graph::from_edges(n, &edges))
}

/// Per-node protection and vulnerability draws.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeDraws {
    pub protected: Vec<bool>,
    pub vulnerable: Vec<bool>,
}

/// Protects a degree-`d` node with probability `g_{d,P}`, then makes it
/// vulnerable with probability `p_P` or `p_U`.
pub fn draw_nodes<R: Rng + ?Sized>(graph: &Graph, state: &SocialState, params: &ModelParams, rng: &mut R) -> Result<NodeDraws> {
    let d_max = state.dist().d_max();
    let share: Vec<f64> = state.dist().degrees().map(|d| state.share(d, Action::Protect)).collect();
    let n = graph.node_count();
    let mut protected = Vec::with_capacity(n);
    let mut vulnerable = Vec::with_capacity(n);
    for node in 0..n {
        let d = graph.degree(node);
        if d == 0 || d > d_max {
            return Err(invalid(format!("node {node} has degree {d} outside 1..={d_max}")));
        }
        let is_protected = rng.random::<f64>() < share[d - 1];
        let p_infect = if is_protected { params.p_protected() } else { params.p_unprotected() };
        protected.push(is_protected);
        vulnerable.push(rng.random::<f64>() < p_infect);
    }
    Ok(NodeDraws { protected, vulnerable })
}

/// Seeds one uniformly random node and floods: every newly infected node
/// attacks each incident edge with probability `beta_IA`, infecting
/// vulnerable targets. Returns the final number of infected nodes.
pub fn assign_and_simulate<R: Rng + ?Sized>(
    graph: &Graph,
    state: &SocialState,
    params: &ModelParams,
    rng: &mut R,
) -> Result<usize> {
    let draws = draw_nodes(graph, state, params, rng)?;
    let seed = rng.random_range(0..graph.node_count());
    Ok(spread_from(graph, &draws.vulnerable, seed, params.beta_ia(), rng))
}

fn spread_from<R: Rng + ?Sized>(graph: &Graph, vulnerable: &[bool], seed: usize, beta: f64, rng: &mut R) -> usize {
    let mut infected = vec![false; graph.node_count()];
    infected[seed] = true;
    let mut count = 1;
    let mut frontier = vec![seed as u32];
    while let Some(u) = frontier.pop() {
        for &v in graph.neighbors(u as usize) {
            if rng.random::<f64>() < beta && vulnerable[v as usize] && !infected[v as usize] {
                infected[v as usize] = true;
                count += 1;
                frontier.push(v);
            }
        }
    }
    count
}

pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

fn run_trial(params: &ModelParams, state: &SocialState, config: &SimConfig, trial: usize) -> Result<usize> {
    let mut rng = trial_rng(config.seed, trial);
    let graph = sample_configuration_graph(state.dist(), config.n, &mut rng)?;
    if !config.simple_graph {
        return assign_and_simulate(&graph, state, params, &mut rng);
    }
    // draws follow the sampled degrees; spreading uses the erased graph
    let draws = draw_nodes(&graph, state, params, &mut rng)?;
    let seed = rng.random_range(0..graph.node_count());
    let simple = graph.simplified();
    Ok(spread_from(&simple, &draws.vulnerable, seed, params.beta_ia(), &mut rng))
}

/// Final infected counts of every trial, in trial order.
pub fn infected_counts(params: &ModelParams, state: &SocialState, config: &SimConfig) -> Result<Vec<usize>> {
    config.validate(state.dist())?;
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..config.trials)
            .into_par_iter()
            .map(|t| run_trial(params, state, config, t))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..config.trials).map(|t| run_trial(params, state, config, t)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    pub estimate: f64,
    /// Binomial standard error `sqrt(p (1 - p) / trials)`.
    pub std_error: f64,
    pub cascades: usize,
    pub trials: usize,
}

impl McEstimate {
    pub fn from_counts(counts: &[usize], cascade_size: usize) -> Self {
        let trials = counts.len();
        let cascades = counts.iter().filter(|&&c| c >= cascade_size).count();
        let estimate = cascades as f64 / trials as f64;
        McEstimate {
            estimate,
            std_error: (estimate * (1.0 - estimate) / trials as f64).sqrt(),
            cascades,
            trials,
        }
    }
}

/// Fraction of trials whose outbreak reaches `cascade_fraction * n` nodes,
/// with a fresh graph per trial.
pub fn empirical_cascade_probability(params: &ModelParams, state: &SocialState, config: &SimConfig) -> Result<McEstimate> {
    let counts = infected_counts(params, state, config)?;
    Ok(McEstimate::from_counts(&counts, config.cascade_size()))
}
