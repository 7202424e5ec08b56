use std::collections::VecDeque;

use super::{Graph, GraphBuilder, TemporalNetwork};
use crate::error::{Error, Result};
use crate::exec::Execution;

/// Column sum of absolute weights, `Σ_k |A[k][v]|`.
pub fn degree(g: &Graph, v: usize) -> Result<f64> {
    g.check_node(v)?;
    Ok(g.in_neighbors(v).map(|(_, w)| w.abs()).sum())
}

pub fn degrees(g: &Graph) -> Vec<f64> {
    (0..g.node_count())
        .map(|v| g.in_neighbors(v).map(|(_, w)| w.abs()).sum())
        .collect()
}

/// Betweenness centrality on unit-length hops, using the default execution mode.
pub fn betweenness(g: &Graph) -> Vec<f64> {
    betweenness_with(g, Execution::default())
}

// Sources handed to the pool per batch; bounds the memory of pending
// per-source dependency vectors.
const SOURCE_BATCH: usize = 128;

/// Brandes accumulation over every source node.
///
/// Each source's dependency vector is added to the total in source order in
/// both execution modes, so parallel and sequential results are bit-identical.
/// Undirected graphs count each unordered pair once.
pub fn betweenness_with(g: &Graph, exec: Execution) -> Vec<f64> {
    let n = g.node_count();
    let mut total = vec![0.0; n];
    let mut scratch = BrandesScratch::new(n);
    let mut start = 0;
    while start < n {
        let end = (start + SOURCE_BATCH).min(n);
        if exec.is_parallel() {
            let batch = exec.map_indexed(end - start, |k| {
                let mut s = BrandesScratch::new(n);
                s.run(g, start + k);
                s.delta
            });
            for delta in batch {
                accumulate(&mut total, &delta);
            }
        } else {
            for s in start..end {
                scratch.run(g, s);
                accumulate(&mut total, &scratch.delta);
            }
        }
        start = end;
    }
    if !g.is_directed() {
        for b in &mut total {
            *b /= 2.0;
        }
    }
    total
}

fn accumulate(total: &mut [f64], delta: &[f64]) {
    for (t, d) in total.iter_mut().zip(delta) {
        *t += d;
    }
}

struct BrandesScratch {
    sigma: Vec<f64>,
    dist: Vec<i64>,
    delta: Vec<f64>,
    stack: Vec<usize>,
    queue: VecDeque<usize>,
}

impl BrandesScratch {
    fn new(n: usize) -> Self {
        BrandesScratch {
            sigma: vec![0.0; n],
            dist: vec![-1; n],
            delta: vec![0.0; n],
            stack: Vec::with_capacity(n),
            queue: VecDeque::with_capacity(n),
        }
    }

    /// Leaves in `delta` the dependency of `source` on every node (zero at the source).
    fn run(&mut self, g: &Graph, source: usize) {
        self.sigma.fill(0.0);
        self.dist.fill(-1);
        self.delta.fill(0.0);
        self.stack.clear();
        self.queue.clear();

        self.sigma[source] = 1.0;
        self.dist[source] = 0;
        self.queue.push_back(source);
        while let Some(v) = self.queue.pop_front() {
            self.stack.push(v);
            for &w in g.out_targets(v) {
                if self.dist[w] < 0 {
                    self.dist[w] = self.dist[v] + 1;
                    self.queue.push_back(w);
                }
                if self.dist[w] == self.dist[v] + 1 {
                    self.sigma[w] += self.sigma[v];
                }
            }
        }
        // Predecessors are recovered from incoming arcs one level closer to
        // the source instead of being stored during the search.
        while let Some(w) = self.stack.pop() {
            let coeff = (1.0 + self.delta[w]) / self.sigma[w];
            let level = self.dist[w] - 1;
            for &v in g.in_sources(w) {
                if self.dist[v] == level {
                    self.delta[v] += self.sigma[v] * coeff;
                }
            }
        }
        self.delta[source] = 0.0;
    }
}

/// Edge-wise sum of snapshots `from..=to`.
pub fn overlap(tn: &TemporalNetwork, from: usize, to: usize) -> Result<Graph> {
    if from > to || to >= tn.len() {
        return Err(Error::Range {
            from,
            to,
            len: tn.len(),
        });
    }
    let first = &tn.snapshots()[from];
    let mut b = GraphBuilder::new(first.node_count(), first.is_directed());
    for g in &tn.snapshots()[from..=to] {
        b.add_graph(g)?;
    }
    Ok(b.build())
}

/// Fraction of node pairs joined by a nonzero edge.
pub fn graph_density(g: &Graph) -> Result<f64> {
    let n = g.node_count();
    if n < 2 {
        return Err(Error::DegenerateGraph(format!(
            "density needs at least two nodes, got {n}"
        )));
    }
    let pairs = (n * (n - 1)) as f64;
    let pairs = if g.is_directed() { pairs } else { pairs / 2.0 };
    Ok(g.edge_count() as f64 / pairs)
}
