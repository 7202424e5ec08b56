//! Sparse weighted graphs and temporal sequences of them.
//!
//! Arcs are kept in compressed rows sorted by (source, target). An undirected
//! edge is stored as two arcs, so the outgoing row of a node is also its
//! incoming column. Zero weights are never stored: an entry with `w == 0` is
//! simply absent.

mod measures;

pub use measures::{betweenness, betweenness_with, degree, degrees, graph_density, overlap};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub source: usize,
    pub target: usize,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq)]
struct Csr {
    offsets: Vec<usize>,
    nodes: Vec<usize>,
    weights: Vec<f64>,
}

impl Csr {
    /// `arcs` must be sorted by (row, col) with no duplicates.
    fn from_sorted(n: usize, arcs: &[(usize, usize, f64)]) -> Self {
        let mut offsets = vec![0usize; n + 1];
        for &(r, _, _) in arcs {
            offsets[r + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        Csr {
            offsets,
            nodes: arcs.iter().map(|a| a.1).collect(),
            weights: arcs.iter().map(|a| a.2).collect(),
        }
    }

    fn row(&self, v: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.offsets[v], self.offsets[v + 1]);
        (&self.nodes[a..b], &self.weights[a..b])
    }
}

/// Immutable sparse weighted graph over nodes `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    directed: bool,
    out: Csr,
    // Only materialized for directed graphs; undirected graphs reuse `out`.
    inc: Option<Csr>,
}

impl Graph {
    pub fn empty(n: usize, directed: bool) -> Self {
        GraphBuilder::new(n, directed).build()
    }

    /// Builds a graph from an explicit edge list.
    ///
    /// For undirected graphs each edge is listed once, in either orientation.
    /// Self-loops, duplicate pairs, out-of-range endpoints and non-finite
    /// weights are rejected. Zero-weight entries are accepted and dropped.
    pub fn from_edges<I>(n: usize, directed: bool, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut arcs = Vec::new();
        for (i, j, w) in edges {
            check_entry(n, i, j, w)?;
            if directed {
                arcs.push((i, j, w));
            } else {
                arcs.push((i.min(j), i.max(j), w));
            }
        }
        arcs.sort_by_key(|a| (a.0, a.1));
        if let Some(d) = arcs.windows(2).find(|p| (p[0].0, p[0].1) == (p[1].0, p[1].1)) {
            return Err(Error::InvalidGraph(format!(
                "duplicate edge ({}, {})",
                d[0].0, d[0].1
            )));
        }
        Ok(Self::from_canonical(n, directed, arcs))
    }

    /// `arcs` sorted, unique, canonical (i < j when undirected).
    fn from_canonical(n: usize, directed: bool, mut arcs: Vec<(usize, usize, f64)>) -> Self {
        arcs.retain(|a| a.2 != 0.0);
        if directed {
            let out = Csr::from_sorted(n, &arcs);
            let mut rev: Vec<_> = arcs.iter().map(|&(i, j, w)| (j, i, w)).collect();
            rev.sort_by_key(|a| (a.0, a.1));
            Graph {
                n,
                directed,
                out,
                inc: Some(Csr::from_sorted(n, &rev)),
            }
        } else {
            let mut both = Vec::with_capacity(arcs.len() * 2);
            for &(i, j, w) in &arcs {
                both.push((i, j, w));
                both.push((j, i, w));
            }
            both.sort_by_key(|a| (a.0, a.1));
            Graph {
                n,
                directed,
                out: Csr::from_sorted(n, &both),
                inc: None,
            }
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    /// Number of stored arcs (twice the edge count for undirected graphs).
    pub fn arc_count(&self) -> usize {
        self.out.nodes.len()
    }

    /// Number of distinct edges: ordered pairs when directed, unordered otherwise.
    pub fn edge_count(&self) -> usize {
        if self.directed {
            self.arc_count()
        } else {
            self.arc_count() / 2
        }
    }

    /// Iterates edges; undirected edges are reported once with `source < target`.
    pub fn edges(&self) -> impl Iterator<Item = Edge> + '_ {
        (0..self.n).flat_map(move |i| {
            let (ts, ws) = self.out.row(i);
            ts.iter()
                .zip(ws)
                .filter(move |(&j, _)| self.directed || i < j)
                .map(move |(&j, &w)| Edge {
                    source: i,
                    target: j,
                    weight: w,
                })
        })
    }

    pub fn out_neighbors(&self, v: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (ts, ws) = self.out.row(v);
        ts.iter().copied().zip(ws.iter().copied())
    }

    pub fn in_neighbors(&self, v: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (ts, ws) = self.inc.as_ref().unwrap_or(&self.out).row(v);
        ts.iter().copied().zip(ws.iter().copied())
    }

    pub(crate) fn out_targets(&self, v: usize) -> &[usize] {
        self.out.row(v).0
    }

    pub(crate) fn in_sources(&self, v: usize) -> &[usize] {
        self.inc.as_ref().unwrap_or(&self.out).row(v).0
    }

    /// Weight of the arc `i -> j`, zero when absent.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        if i >= self.n || j >= self.n {
            return 0.0;
        }
        let (ts, ws) = self.out.row(i);
        ts.binary_search(&j).map(|k| ws[k]).unwrap_or(0.0)
    }

    pub fn check_node(&self, v: usize) -> Result<()> {
        if v < self.n {
            Ok(())
        } else {
            Err(Error::InvalidNode { node: v, n: self.n })
        }
    }

    /// Returns a directed graph with each arc `i -> j` reweighted by `f(i, j, w)`.
    ///
    /// Undirected inputs are expanded to both arcs first, which is how
    /// receiver-dependent weights are expressed.
    pub fn reweight_arcs<F>(&self, f: F) -> Graph
    where
        F: Fn(usize, usize, f64) -> f64,
    {
        let mut arcs = Vec::with_capacity(self.arc_count());
        for i in 0..self.n {
            for (j, w) in self.out_neighbors(i) {
                arcs.push((i, j, f(i, j, w)));
            }
        }
        Self::from_canonical(self.n, true, arcs)
    }

    /// Keeps only edges whose endpoints both satisfy `keep`.
    pub fn induced<F>(&self, keep: F) -> Graph
    where
        F: Fn(usize) -> bool,
    {
        let arcs = self
            .edges()
            .filter(|e| keep(e.source) && keep(e.target))
            .map(|e| (e.source, e.target, e.weight))
            .collect();
        Self::from_canonical(self.n, self.directed, arcs)
    }

    /// Neighbor lists ignoring direction and weights, sorted and deduplicated.
    pub fn undirected_neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj: Vec<Vec<usize>> = (0..self.n).map(|v| self.out_targets(v).to_vec()).collect();
        if self.directed {
            for v in 0..self.n {
                for (u, _) in self.in_neighbors(v) {
                    adj[v].push(u);
                }
                adj[v].sort_unstable();
                adj[v].dedup();
            }
        }
        adj
    }
}

fn check_entry(n: usize, i: usize, j: usize, w: f64) -> Result<()> {
    if i >= n {
        return Err(Error::InvalidNode { node: i, n });
    }
    if j >= n {
        return Err(Error::InvalidNode { node: j, n });
    }
    if i == j {
        return Err(Error::InvalidGraph(format!("self-loop on node {i}")));
    }
    if !w.is_finite() {
        return Err(Error::InvalidGraph(format!("non-finite weight on ({i}, {j})")));
    }
    Ok(())
}

/// Accumulating builder: repeated pairs add their weights.
#[derive(Debug, Clone)]
pub struct GraphBuilder {
    n: usize,
    directed: bool,
    arcs: Vec<(usize, usize, f64)>,
}

impl GraphBuilder {
    pub fn new(n: usize, directed: bool) -> Self {
        GraphBuilder {
            n,
            directed,
            arcs: Vec::new(),
        }
    }

    pub fn add(&mut self, i: usize, j: usize, w: f64) -> Result<&mut Self> {
        check_entry(self.n, i, j, w)?;
        if self.directed {
            self.arcs.push((i, j, w));
        } else {
            self.arcs.push((i.min(j), i.max(j), w));
        }
        Ok(self)
    }

    pub fn add_graph(&mut self, g: &Graph) -> Result<&mut Self> {
        if g.n != self.n || g.directed != self.directed {
            return Err(Error::Shape(format!(
                "cannot add graph (n={}, directed={}) to builder (n={}, directed={})",
                g.n, g.directed, self.n, self.directed
            )));
        }
        self.arcs
            .extend(g.edges().map(|e| (e.source, e.target, e.weight)));
        Ok(self)
    }

    pub fn build(mut self) -> Graph {
        self.arcs.sort_by_key(|a| (a.0, a.1));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(self.arcs.len());
        for (i, j, w) in self.arcs {
            match merged.last_mut() {
                Some(last) if last.0 == i && last.1 == j => last.2 += w,
                _ => merged.push((i, j, w)),
            }
        }
        Graph::from_canonical(self.n, self.directed, merged)
    }
}

/// Ordered, non-empty sequence of snapshots over a fixed node set.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalNetwork {
    snapshots: Vec<Graph>,
    step_labels: Option<Vec<i64>>,
}

impl TemporalNetwork {
    pub fn new(snapshots: Vec<Graph>) -> Result<Self> {
        let first = snapshots
            .first()
            .ok_or_else(|| Error::InvalidGraph("temporal network needs at least one snapshot".into()))?;
        let (n, directed) = (first.n, first.directed);
        if let Some((t, g)) = snapshots
            .iter()
            .enumerate()
            .find(|(_, g)| g.n != n || g.directed != directed)
        {
            return Err(Error::Shape(format!(
                "snapshot {t} has n={} directed={}, expected n={n} directed={directed}",
                g.n, g.directed
            )));
        }
        Ok(TemporalNetwork {
            snapshots,
            step_labels: None,
        })
    }

    pub fn with_labels(mut self, labels: Vec<i64>) -> Result<Self> {
        if labels.len() != self.snapshots.len() {
            return Err(Error::Shape(format!(
                "{} labels for {} snapshots",
                labels.len(),
                self.snapshots.len()
            )));
        }
        self.step_labels = Some(labels);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn node_count(&self) -> usize {
        self.snapshots[0].n
    }

    pub fn snapshots(&self) -> &[Graph] {
        &self.snapshots
    }

    pub fn snapshot(&self, t: usize) -> Option<&Graph> {
        self.snapshots.get(t)
    }

    pub fn step_labels(&self) -> Option<&[i64]> {
        self.step_labels.as_deref()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_entries() {
        assert!(matches!(
            Graph::from_edges(3, false, [(0, 0, 1.0)]),
            Err(Error::InvalidGraph(_))
        ));
        assert!(matches!(
            Graph::from_edges(3, false, [(0, 3, 1.0)]),
            Err(Error::InvalidNode { node: 3, n: 3 })
        ));
        assert!(Graph::from_edges(3, false, [(0, 1, f64::NAN)]).is_err());
        assert!(Graph::from_edges(3, false, [(0, 1, 1.0), (1, 0, 1.0)]).is_err());
        assert!(Graph::from_edges(3, true, [(0, 1, 1.0), (1, 0, 1.0)]).is_ok());
    }

    #[test]
    fn undirected_storage_is_symmetric() {
        let g = Graph::from_edges(4, false, [(2, 0, 1.5), (1, 3, 2.0)]).unwrap();
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.arc_count(), 4);
        assert_eq!(g.weight(0, 2), 1.5);
        assert_eq!(g.weight(2, 0), 1.5);
        assert_eq!(g.weight(0, 1), 0.0);
        let e: Vec<_> = g.edges().collect();
        assert_eq!(e[0], Edge { source: 0, target: 2, weight: 1.5 });
    }

    #[test]
    fn builder_accumulates_and_drops_zeros() {
        let mut b = GraphBuilder::new(3, false);
        b.add(0, 1, 1.0).unwrap();
        b.add(1, 0, 2.0).unwrap();
        b.add(1, 2, 1.0).unwrap();
        b.add(2, 1, -1.0).unwrap();
        let g = b.build();
        assert_eq!(g.weight(0, 1), 3.0);
        assert_eq!(g.edge_count(), 1);
    }

    #[test]
    fn directed_in_neighbors() {
        let g = Graph::from_edges(3, true, [(0, 2, 1.0), (1, 2, 3.0)]).unwrap();
        let inc: Vec<_> = g.in_neighbors(2).collect();
        assert_eq!(inc, vec![(0, 1.0), (1, 3.0)]);
        assert_eq!(g.out_neighbors(2).count(), 0);
    }

    #[test]
    fn reweight_by_receiver_makes_directed() {
        let g = Graph::from_edges(2, false, [(0, 1, 1.0)]).unwrap();
        let r = g.reweight_arcs(|_, j, w| w * (j as f64 + 1.0));
        assert!(r.is_directed());
        assert_eq!(r.weight(0, 1), 2.0);
        assert_eq!(r.weight(1, 0), 1.0);
    }

    #[test]
    fn temporal_network_checks_shapes() {
        assert!(TemporalNetwork::new(vec![]).is_err());
        let a = Graph::empty(3, false);
        let b = Graph::empty(4, false);
        assert!(TemporalNetwork::new(vec![a.clone(), b]).is_err());
        let tn = TemporalNetwork::new(vec![a.clone(), a]).unwrap();
        assert_eq!(tn.len(), 2);
        assert!(tn.clone().with_labels(vec![1]).is_err());
        assert!(tn.with_labels(vec![1, 2]).is_ok());
    }
}
