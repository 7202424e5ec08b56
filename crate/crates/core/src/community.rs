//! Fluid community detection and the partition performance measure.

use std::collections::VecDeque;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::graph::Graph;
use crate::rng::{self, Purpose};

pub const DEFAULT_MAX_ITER: usize = 100;

// Density sums closer than this count as tied.
const TIE_EPS: f64 = 1e-12;

/// Assignment of every node to one of `k` communities.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    assignment: Vec<usize>,
    k: usize,
}

impl Partition {
    pub fn new(assignment: Vec<usize>, k: usize) -> Result<Self> {
        if let Some((v, &c)) = assignment.iter().enumerate().find(|(_, &c)| c >= k) {
            return Err(Error::Config(format!("node {v} assigned to community {c} >= k = {k}")));
        }
        Ok(Partition { assignment, k })
    }

    pub fn from_blocks(n: usize, blocks: &[Vec<usize>]) -> Result<Self> {
        let of = crate::contact_data::block_index(n, blocks)?;
        let assignment = of
            .iter()
            .enumerate()
            .map(|(v, b)| b.ok_or_else(|| Error::Config(format!("node {v} is in no block"))))
            .collect::<Result<Vec<_>>>()?;
        Partition::new(assignment, blocks.len())
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn community_of(&self, v: usize) -> usize {
        self.assignment[v]
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn node_count(&self) -> usize {
        self.assignment.len()
    }

    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut b = vec![Vec::new(); self.k];
        for (v, &c) in self.assignment.iter().enumerate() {
            b[c].push(v);
        }
        b
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        for &c in &self.assignment {
            s[c] += 1;
        }
        s
    }

    /// Writes `node,community`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
        w.write_record(["node", "community"]).map_err(|e| Error::csv(path, e))?;
        for (v, c) in self.assignment.iter().enumerate() {
            w.serialize((v, c)).map_err(|e| Error::csv(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FluidOutcome {
    pub partition: Partition,
    pub iterations: usize,
    /// False when `max_iter` was reached with assignments still changing.
    pub converged: bool,
}

fn components(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = adj.len();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut comp = vec![s];
        let mut q = VecDeque::from([s]);
        while let Some(v) = q.pop_front() {
            for &u in &adj[v] {
                if !seen[u] {
                    seen[u] = true;
                    comp.push(u);
                    q.push_back(u);
                }
            }
        }
        out.push(comp);
    }
    out
}

/// Fluid communities on the largest connected component.
///
/// `k` fluids start at random seed nodes with density 1. Each sweep visits
/// the component's nodes in a fresh random order; a node moves to the
/// community with the largest summed density over itself and its neighbours
/// (ties broken at random, staying put when the current community ties).
/// A community's density is `1 / size`. Moves that would empty a community
/// are rejected. Nodes outside the largest component are assigned one random
/// community per component.
pub fn fluid_communities<R: Rng>(g: &Graph, k: usize, rng: &mut R, max_iter: usize) -> Result<FluidOutcome> {
    if g.is_directed() {
        return Err(Error::Config("fluid communities needs an undirected graph".into()));
    }
    if k == 0 {
        return Err(Error::Config("community count must be at least 1".into()));
    }
    let adj = g.undirected_neighbors();
    let mut comps = components(&adj);
    // Largest first; ties keep discovery order (lowest starting node).
    comps.sort_by(|a, b| b.len().cmp(&a.len()));
    let main = &comps[0];
    if k > main.len() {
        return Err(Error::Config(format!(
            "k = {k} exceeds the largest component size {}",
            main.len()
        )));
    }

    let n = g.node_count();
    let mut com: Vec<Option<usize>> = vec![None; n];
    let mut size = vec![0usize; k];
    let mut order = main.clone();
    order.shuffle(rng);
    for (c, &v) in order.iter().take(k).enumerate() {
        com[v] = Some(c);
        size[c] = 1;
    }
    let density = |size: &[usize], c: usize| 1.0 / size[c] as f64;

    let mut counter = vec![0.0f64; k];
    let mut touched: Vec<usize> = Vec::with_capacity(k);
    let mut best: Vec<usize> = Vec::with_capacity(k);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        iterations += 1;
        order.shuffle(rng);
        let mut changed = false;
        for &v in &order {
            touched.clear();
            for c in com[v].into_iter().chain(adj[v].iter().filter_map(|&u| com[u])) {
                if counter[c] == 0.0 {
                    touched.push(c);
                }
                counter[c] += density(&size, c);
            }
            if touched.is_empty() {
                continue;
            }
            let max = touched.iter().map(|&c| counter[c]).fold(f64::MIN, f64::max);
            best.clear();
            best.extend(touched.iter().copied().filter(|&c| counter[c] >= max - TIE_EPS * max));
            for &c in &touched {
                counter[c] = 0.0;
            }
            if com[v].is_some_and(|c| best.contains(&c)) {
                continue;
            }
            if let Some(c) = com[v] {
                if size[c] == 1 {
                    continue;
                }
                size[c] -= 1;
            }
            best.sort_unstable();
            let new = best[rng.gen_range(0..best.len())];
            com[v] = Some(new);
            size[new] += 1;
            changed = true;
        }
        if !changed {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("fluid communities did not converge within {max_iter} iterations");
    }

    for comp in &comps[1..] {
        let c = rng.gen_range(0..k);
        for &v in comp {
            com[v] = Some(c);
        }
    }
    let assignment = com
        .into_iter()
        .map(|c| c.expect("every node of the main component is reached"))
        .collect();
    Ok(FluidOutcome {
        partition: Partition::new(assignment, k)?,
        iterations,
        converged,
    })
}

/// Share of node pairs classified correctly: intra-community edges plus
/// inter-community non-edges, over `n(n-1)/2`.
pub fn performance_rate(g: &Graph, p: &Partition) -> Result<f64> {
    if g.is_directed() {
        return Err(Error::Config("performance rate needs an undirected graph".into()));
    }
    let n = g.node_count();
    if p.node_count() != n {
        return Err(Error::Shape(format!("partition of {} nodes on graph of {n}", p.node_count())));
    }
    if n < 2 {
        return Err(Error::DegenerateGraph("performance needs at least two nodes".into()));
    }
    let pairs = (n * (n - 1) / 2) as u64;
    let intra_pairs: u64 = p.sizes().iter().map(|&s| (s * s.saturating_sub(1) / 2) as u64).sum();
    let (mut intra_edges, mut inter_edges) = (0u64, 0u64);
    for e in g.edges() {
        if p.community_of(e.source) == p.community_of(e.target) {
            intra_edges += 1;
        } else {
            inter_edges += 1;
        }
    }
    let inter_non_edges = pairs - intra_pairs - inter_edges;
    Ok((intra_edges + inter_non_edges) as f64 / pairs as f64)
}

/// Mean performance over `seeds_per_k` detections for each `k`.
///
/// Detection for `(k, s)` uses the stream `(root_seed, community, k, s)`, so
/// the result does not depend on the execution mode.
pub fn scan_community_number(
    g: &Graph,
    k_range: &[usize],
    seeds_per_k: usize,
    root_seed: u64,
    exec: Execution,
) -> Result<Vec<(usize, f64)>> {
    if k_range.is_empty() || seeds_per_k == 0 {
        return Err(Error::Config("community scan needs at least one k and one seed".into()));
    }
    let tasks: Vec<(usize, usize)> = k_range
        .iter()
        .flat_map(|&k| (0..seeds_per_k).map(move |s| (k, s)))
        .collect();
    let rates = exec.map_slice(&tasks, |&(k, s)| {
        let mut r = rng::stream(root_seed, &[Purpose::Community as u64, k as u64, s as u64]);
        let out = fluid_communities(g, k, &mut r, DEFAULT_MAX_ITER)?;
        performance_rate(g, &out.partition)
    });
    let rates = rates.into_iter().collect::<Result<Vec<f64>>>()?;
    Ok(k_range
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let chunk = &rates[i * seeds_per_k..(i + 1) * seeds_per_k];
            (k, chunk.iter().sum::<f64>() / seeds_per_k as f64)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cliques(sizes: &[usize], bridges: &[(usize, usize)]) -> Graph {
        let mut e = Vec::new();
        let mut base = 0;
        for &s in sizes {
            for i in 0..s {
                for j in i + 1..s {
                    e.push((base + i, base + j, 1.0));
                }
            }
            base += s;
        }
        e.extend(bridges.iter().map(|&(a, b)| (a, b, 1.0)));
        Graph::from_edges(base, false, e).unwrap()
    }

    #[test]
    fn single_community() {
        let g = cliques(&[6, 6], &[(0, 6)]);
        let out = fluid_communities(&g, 1, &mut rng::stream(1, &[]), 100).unwrap();
        assert!(out.partition.assignment().iter().all(|&c| c == 0));
        assert!(out.converged);
    }

    #[test]
    fn recovers_bridged_cliques() {
        let g = cliques(&[10, 10], &[(0, 10)]);
        let truth: Vec<bool> = (0..20).map(|v| v < 10).collect();
        let hits = (0..10)
            .filter(|&s| {
                let p = fluid_communities(&g, 2, &mut rng::stream(s, &[]), 100).unwrap().partition;
                let a = p.assignment();
                (0..20).all(|v| (a[v] == a[0]) == truth[v])
            })
            .count();
        assert!(hits >= 9, "recovered {hits}/10");
    }

    #[test]
    fn keeps_k_nonempty_and_is_deterministic() {
        let g = cliques(&[5, 5, 5, 5], &[(0, 5), (5, 10), (10, 15), (15, 0), (2, 12)]);
        for s in 0..20 {
            let a = fluid_communities(&g, 4, &mut rng::stream(s, &[]), 100).unwrap();
            assert!(a.partition.sizes().iter().all(|&x| x > 0));
            let b = fluid_communities(&g, 4, &mut rng::stream(s, &[]), 100).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn errors() {
        let g = cliques(&[3], &[]);
        assert!(matches!(fluid_communities(&g, 4, &mut rng::stream(0, &[]), 10), Err(Error::Config(_))));
        assert!(matches!(fluid_communities(&g, 0, &mut rng::stream(0, &[]), 10), Err(Error::Config(_))));
        let d = Graph::from_edges(3, true, [(0, 1, 1.0)]).unwrap();
        assert!(fluid_communities(&d, 1, &mut rng::stream(0, &[]), 10).is_err());
    }

    #[test]
    fn small_components_get_one_label_each() {
        // Main component of 6 nodes plus a separate pair and an isolated node.
        let g = Graph::from_edges(
            9,
            false,
            [(0, 1, 1.0), (1, 2, 1.0), (2, 3, 1.0), (3, 4, 1.0), (4, 5, 1.0), (6, 7, 1.0)],
        )
        .unwrap();
        let out = fluid_communities(&g, 2, &mut rng::stream(3, &[]), 100).unwrap();
        let a = out.partition.assignment();
        assert_eq!(a[6], a[7]);
        assert!(a[8] < 2);
        assert!(out.partition.sizes().iter().all(|&s| s > 0));
    }

    #[test]
    fn performance_examples() {
        let k5 = cliques(&[5], &[]);
        let one = Partition::new(vec![0; 5], 1).unwrap();
        assert_eq!(performance_rate(&k5, &one).unwrap(), 1.0);

        let two = cliques(&[5, 5], &[]);
        let right = Partition::new((0..10).map(|v| v / 5).collect(), 2).unwrap();
        assert_eq!(performance_rate(&two, &right).unwrap(), 1.0);

        // Node 4 moved to the second block: 16 intra edges, 20 inter non-edges.
        let mut wrong: Vec<usize> = (0..10).map(|v| v / 5).collect();
        wrong[4] = 1;
        let wrong = Partition::new(wrong, 2).unwrap();
        assert!((performance_rate(&two, &wrong).unwrap() - 36.0 / 45.0).abs() < 1e-15);
    }

    #[test]
    fn partition_helpers() {
        let p = Partition::from_blocks(4, &[vec![0, 3], vec![1, 2]]).unwrap();
        assert_eq!(p.assignment(), &[0, 1, 1, 0]);
        assert_eq!(p.blocks(), vec![vec![0, 3], vec![1, 2]]);
        assert!(Partition::from_blocks(4, &[vec![0, 3], vec![1]]).is_err());
        assert!(Partition::new(vec![0, 2], 2).is_err());
    }

    #[test]
    fn scan_single_k() {
        let g = cliques(&[4, 4], &[(0, 4)]);
        let out = scan_community_number(&g, &[1], 3, 0, Execution::Sequential).unwrap();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].0, 1);
        assert!(scan_community_number(&g, &[], 3, 0, Execution::Sequential).is_err());
    }

    #[test]
    fn scan_modes_agree() {
        let g = cliques(&[6, 6, 6], &[(0, 6), (6, 12)]);
        let ks = [1, 2, 3, 4];
        assert_eq!(
            scan_community_number(&g, &ks, 4, 11, Execution::Sequential).unwrap(),
            scan_community_number(&g, &ks, 4, 11, Execution::Parallel).unwrap()
        );
    }
}
