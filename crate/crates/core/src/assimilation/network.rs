//! Network-edge parametrization: the state is the upper-triangular adjacency
//! restricted to intra-community pairs plus every background-supported pair;
//! observations are the intra-community sub-networks.

use std::collections::{BTreeMap, HashMap};

use super::{blue_update, kalman_gain, AssimilationProblem, Covariance, ObservationOperator};
use crate::community::Partition;
use crate::error::{Error, Result};
use crate::graph::{Edge, Graph, GraphBuilder};

/// Largest node count accepted by [`assimilate_network_dense`].
pub const DENSE_MAX_NODES: usize = 100;

fn check_inputs(background: &Graph, partition: &Partition) -> Result<()> {
    if background.is_directed() {
        return Err(Error::InvalidGraph("network assimilation expects an undirected background".into()));
    }
    if partition.node_count() != background.node_count() {
        return Err(Error::Shape(format!(
            "partition covers {} nodes, background has {}",
            partition.node_count(),
            background.node_count()
        )));
    }
    Ok(())
}

/// Observed weights keyed by `(min, max)` pair, all intra-community.
fn observed_map(observed: &[Edge], partition: &Partition) -> Result<BTreeMap<(usize, usize), f64>> {
    let n = partition.node_count();
    let mut map = BTreeMap::new();
    for e in observed {
        for v in [e.source, e.target] {
            if v >= n {
                return Err(Error::InvalidNode { node: v, n });
            }
        }
        if e.source == e.target || !e.weight.is_finite() {
            return Err(Error::Contract(format!("invalid observed edge ({}, {})", e.source, e.target)));
        }
        if partition.community_of(e.source) != partition.community_of(e.target) {
            return Err(Error::Contract(format!(
                "observed edge ({}, {}) crosses communities",
                e.source, e.target
            )));
        }
        let key = (e.source.min(e.target), e.source.max(e.target));
        if map.insert(key, e.weight).is_some() {
            return Err(Error::Contract(format!("edge ({}, {}) observed twice", key.0, key.1)));
        }
    }
    Ok(map)
}

fn check_scales(b_scale: f64, o_scale: f64) -> Result<()> {
    if !(b_scale > 0.0 && b_scale.is_finite() && o_scale > 0.0 && o_scale.is_finite()) {
        return Err(Error::Config(format!(
            "covariance scales must be positive, got B={b_scale}, O={o_scale}"
        )));
    }
    Ok(())
}

fn build_graph(n: usize, coords: &[(usize, usize)], values: &[f64]) -> Result<Graph> {
    let mut b = GraphBuilder::new(n, false);
    for (&(i, j), &w) in coords.iter().zip(values) {
        if w != 0.0 {
            b.add(i, j, w)?;
        }
    }
    Ok(b.build())
}

/// Runs the general BLUE update over the sparse edge state.
pub fn assimilate_network(
    background: &Graph,
    observed_edges: &[Edge],
    partition: &Partition,
    b_scale: f64,
    o_scale: f64,
) -> Result<Graph> {
    check_inputs(background, partition)?;
    check_scales(b_scale, o_scale)?;
    let observed = observed_map(observed_edges, partition)?;
    let n = background.node_count();
    let mut index: HashMap<(usize, usize), usize> = HashMap::new();
    let mut coords: Vec<(usize, usize)> = Vec::new();
    let mut intra = Vec::new();
    for block in partition.blocks() {
        for (a, &i) in block.iter().enumerate() {
            for &j in &block[a + 1..] {
                let key = (i.min(j), i.max(j));
                index.insert(key, coords.len());
                intra.push(coords.len());
                coords.push(key);
            }
        }
    }
    for e in background.edges() {
        index.entry((e.source, e.target)).or_insert_with(|| {
            coords.push((e.source, e.target));
            coords.len() - 1
        });
    }
    let xb: Vec<f64> = coords.iter().map(|&(i, j)| background.weight(i, j)).collect();
    let y: Vec<f64> = intra
        .iter()
        .map(|&c| observed.get(&coords[c]).copied().unwrap_or(0.0))
        .collect();
    let m = coords.len();
    let d = intra.len();
    let problem = AssimilationProblem::new(
        xb,
        y,
        ObservationOperator::sub_identity(m, &intra)?,
        Covariance::scaled_identity(m, b_scale),
        Covariance::scaled_identity(d, o_scale),
    )?;
    let result = blue_update(&problem, false)?;
    build_graph(n, &coords, &result.analysis)
}

/// Same update over the full upper triangle, for small graphs.
pub fn assimilate_network_dense(
    background: &Graph,
    observed_edges: &[Edge],
    partition: &Partition,
    b_scale: f64,
    o_scale: f64,
) -> Result<Graph> {
    check_inputs(background, partition)?;
    check_scales(b_scale, o_scale)?;
    let n = background.node_count();
    if n > DENSE_MAX_NODES {
        return Err(Error::Config(format!("dense assimilation is limited to {DENSE_MAX_NODES} nodes, got {n}")));
    }
    let observed = observed_map(observed_edges, partition)?;
    let coords: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let intra: Vec<usize> = (0..coords.len())
        .filter(|&c| partition.community_of(coords[c].0) == partition.community_of(coords[c].1))
        .collect();
    let xb: Vec<f64> = coords.iter().map(|&(i, j)| background.weight(i, j)).collect();
    let y: Vec<f64> = intra
        .iter()
        .map(|&c| observed.get(&coords[c]).copied().unwrap_or(0.0))
        .collect();
    let (m, d) = (coords.len(), intra.len());
    let problem = AssimilationProblem::new(
        xb,
        y,
        ObservationOperator::sub_identity(m, &intra)?,
        Covariance::Dense(nalgebra::DMatrix::identity(m, m) * b_scale),
        Covariance::scaled_identity(d, o_scale),
    )?;
    build_graph(n, &coords, &blue_update(&problem, false)?.analysis)
}

/// Fixed-partition assimilator whose scalar gain is computed once and reused.
///
/// With `B = βI`, `O = οI` and a sub-identity `H`, every observed coordinate
/// moves by the same fraction `β / (β + ο)` of its innovation.
#[derive(Debug, Clone)]
pub struct NetworkAssimilator {
    partition: Partition,
    gain: f64,
}

impl NetworkAssimilator {
    pub fn new(partition: Partition, b_scale: f64, o_scale: f64) -> Result<Self> {
        check_scales(b_scale, o_scale)?;
        let k = kalman_gain(
            &Covariance::Diagonal(vec![b_scale]),
            &ObservationOperator::identity(1),
            &Covariance::Diagonal(vec![o_scale]),
        )?;
        Ok(NetworkAssimilator {
            partition,
            gain: k[(0, 0)],
        })
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    /// Touches only background edges and observed edges; every other
    /// intra-community coordinate has zero background and zero observation.
    pub fn assimilate(&self, background: &Graph, observed_edges: &[Edge]) -> Result<Graph> {
        check_inputs(background, &self.partition)?;
        let mut observed = observed_map(observed_edges, &self.partition)?;
        let mut b = GraphBuilder::new(background.node_count(), false);
        for e in background.edges() {
            let w = if self.partition.community_of(e.source) == self.partition.community_of(e.target) {
                let y = observed.remove(&(e.source, e.target)).unwrap_or(0.0);
                e.weight + self.gain * (y - e.weight)
            } else {
                e.weight
            };
            if w != 0.0 {
                b.add(e.source, e.target, w)?;
            }
        }
        for ((i, j), y) in observed {
            let w = self.gain * y;
            if w != 0.0 {
                b.add(i, j, w)?;
            }
        }
        Ok(b.build())
    }
}
