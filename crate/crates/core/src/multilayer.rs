//! Layered scale-free populations: Barabási-Albert layers joined by sparse
//! random inter-layer edges, per-layer infectious probabilities that drift
//! over time, and the assimilation of those probabilities from observed new
//! infections.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::assimilation::{blue_update, AssimilationProblem, Covariance, ObservationOperator};
use crate::epidemic::{EpidemicState, InfectionFn};
use crate::error::{Error, Result};
use crate::graph::Graph;

/// Undirected preferential-attachment graph on `n` nodes.
///
/// Starts from a clique on the first `m` nodes; every later node attaches to
/// `m` distinct existing nodes chosen with probability proportional to degree.
pub fn barabasi_albert<R: Rng>(n: usize, m: usize, rng: &mut R) -> Result<Graph> {
    if m == 0 || m >= n {
        return Err(Error::Config(format!("attachment count m={m} must satisfy 1 <= m < n={n}")));
    }
    let mut edges: Vec<(usize, usize, f64)> = Vec::with_capacity(m * (m - 1) / 2 + (n - m) * m);
    // Each edge contributes both endpoints, so a uniform pick is degree-proportional.
    let mut ends: Vec<usize> = Vec::with_capacity(2 * edges.capacity());
    for i in 0..m {
        for j in i + 1..m {
            edges.push((i, j, 1.0));
            ends.extend([i, j]);
        }
    }
    let mut targets = Vec::with_capacity(m);
    for v in m..n {
        targets.clear();
        while targets.len() < m {
            let t = if ends.is_empty() { rng.gen_range(0..v) } else { ends[rng.gen_range(0..ends.len())] };
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        for &t in &targets {
            edges.push((t, v, 1.0));
            ends.extend([t, v]);
        }
    }
    Graph::from_edges(n, false, edges)
}

/// Least-squares slope of `log P(K ≥ k)` against `log k` over the distinct
/// degrees `k ≥ k_min`.
pub fn ccdf_tail_slope(degrees: &[f64], k_min: f64) -> Result<f64> {
    let mut ks: Vec<f64> = degrees.to_vec();
    ks.sort_by(f64::total_cmp);
    let n = ks.len() as f64;
    let mut pts = Vec::new();
    let mut i = 0;
    while i < ks.len() {
        let k = ks[i];
        if k >= k_min && k > 0.0 {
            pts.push((k.ln(), ((ks.len() - i) as f64 / n).ln()));
        }
        while i < ks.len() && ks[i] == k {
            i += 1;
        }
    }
    if pts.len() < 2 {
        return Err(Error::DegenerateGraph("fewer than two distinct tail degrees".into()));
    }
    let len = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / len;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / len;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

/// Initial per-layer probabilities of the six reference conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiPreset {
    CiA,
    CiB,
    CiC,
    CiD,
    CiE,
    CiF,
}

impl CiPreset {
    pub const ALL: [CiPreset; 6] = [CiPreset::CiA, CiPreset::CiB, CiPreset::CiC, CiPreset::CiD, CiPreset::CiE, CiPreset::CiF];

    pub fn probs(self) -> [f64; 5] {
        match self {
            CiPreset::CiA => [0.025, 0.01, 0.01, 0.01, 0.01],
            CiPreset::CiB => [0.035, 0.015, 0.01, 0.005, 0.005],
            CiPreset::CiC => [0.025, 0.025, 0.025, 0.005, 0.005],
            CiPreset::CiD => [0.045, 0.015, 0.01, 0.005, 0.005],
            CiPreset::CiE => [0.035, 0.025, 0.01, 0.01, 0.0],
            CiPreset::CiF => [0.02, 0.02, 0.015, 0.01, 0.01],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            CiPreset::CiA => "ci_a",
            CiPreset::CiB => "ci_b",
            CiPreset::CiC => "ci_c",
            CiPreset::CiD => "ci_d",
            CiPreset::CiE => "ci_e",
            CiPreset::CiF => "ci_f",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown initial condition {s:?}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MultilayerConfig {
    pub n_layers: usize,
    pub layer_size: usize,
    pub ba_m: usize,
    pub inter_density: f64,
    pub initial_probs: Vec<f64>,
    pub drift_period: usize,
    pub drift_half_width: f64,
}

impl Default for MultilayerConfig {
    fn default() -> Self {
        MultilayerConfig {
            n_layers: 5,
            layer_size: 200,
            ba_m: 2,
            inter_density: 0.005,
            initial_probs: CiPreset::CiA.probs().to_vec(),
            drift_period: 5,
            drift_half_width: 0.0004,
        }
    }
}

impl MultilayerConfig {
    pub fn with_preset(mut self, ci: CiPreset) -> Self {
        self.initial_probs = ci.probs().to_vec();
        self
    }

    pub fn node_count(&self) -> usize {
        self.n_layers * self.layer_size
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_layers == 0 {
            return Err(Error::Config("at least one layer is required".into()));
        }
        if self.ba_m == 0 || self.ba_m >= self.layer_size {
            return Err(Error::Config(format!(
                "ba_m={} must satisfy 1 <= ba_m < layer_size={}",
                self.ba_m, self.layer_size
            )));
        }
        if !(0.0..=1.0).contains(&self.inter_density) {
            return Err(Error::Config(format!("inter_density {} outside [0, 1]", self.inter_density)));
        }
        if self.initial_probs.len() != self.n_layers {
            return Err(Error::Config(format!(
                "{} initial probabilities for {} layers",
                self.initial_probs.len(),
                self.n_layers
            )));
        }
        if self.initial_probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(Error::Config("initial probabilities must lie in [0, 1]".into()));
        }
        if !(self.drift_half_width >= 0.0) || !self.drift_half_width.is_finite() {
            return Err(Error::Config(format!("drift half-width {} must be non-negative", self.drift_half_width)));
        }
        Ok(())
    }

    /// Contiguous layers of `layer_size` nodes carrying the initial probabilities.
    pub fn layer_model(&self) -> Result<LayerModel> {
        self.validate()?;
        let layer_of = (0..self.node_count()).map(|v| v / self.layer_size).collect();
        let mut lm = LayerModel::new(layer_of, self.initial_probs.clone())?;
        lm.drift_period = self.drift_period;
        lm.drift_half_width = self.drift_half_width;
        Ok(lm)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerModel {
    pub layer_of: Vec<usize>,
    pub layer_sizes: Vec<usize>,
    pub probs: Vec<f64>,
    /// Drift applies at steps divisible by this; zero disables drift.
    pub drift_period: usize,
    pub drift_half_width: f64,
}

impl LayerModel {
    pub fn new(layer_of: Vec<usize>, probs: Vec<f64>) -> Result<Self> {
        let mut layer_sizes = vec![0; probs.len()];
        for (v, &l) in layer_of.iter().enumerate() {
            if l >= probs.len() {
                return Err(Error::Config(format!("node {v} in layer {l}, only {} layers", probs.len())));
            }
            layer_sizes[l] += 1;
        }
        if probs.iter().any(|p| !(*p >= 0.0) || !p.is_finite()) {
            return Err(Error::Config("layer probabilities must be finite and non-negative".into()));
        }
        Ok(LayerModel {
            layer_of,
            layer_sizes,
            probs,
            drift_period: 5,
            drift_half_width: 0.0004,
        })
    }

    pub fn layer_count(&self) -> usize {
        self.probs.len()
    }

    pub fn node_count(&self) -> usize {
        self.layer_of.len()
    }

    pub fn infection(&self) -> LayeredInfection<'_> {
        LayeredInfection::new(&self.layer_of, &self.probs)
    }
}

/// Per-layer BA graphs plus Bernoulli inter-layer edges, stored with both arcs.
pub fn assemble_multilayer<R: Rng>(cfg: &MultilayerConfig, rng: &mut R) -> Result<(Graph, LayerModel)> {
    let lm = cfg.layer_model()?;
    let (size, layers) = (cfg.layer_size, cfg.n_layers);
    let mut arcs: Vec<(usize, usize, f64)> = Vec::new();
    for l in 0..layers {
        let off = l * size;
        for e in barabasi_albert(size, cfg.ba_m, rng)?.edges() {
            arcs.push((off + e.source, off + e.target, 1.0));
            arcs.push((off + e.target, off + e.source, 1.0));
        }
    }
    for (i, j) in inter_layer_pairs(layers, size, cfg.inter_density, rng) {
        arcs.push((i, j, 1.0));
        arcs.push((j, i, 1.0));
    }
    Ok((Graph::from_edges(cfg.node_count(), true, arcs)?, lm))
}

/// Each cross-layer pair kept independently with probability `p`, visited by
/// geometric skips over the flattened pair list.
fn inter_layer_pairs<R: Rng>(layers: usize, size: usize, p: f64, rng: &mut R) -> Vec<(usize, usize)> {
    let per_block = size * size;
    let blocks: Vec<(usize, usize)> = (0..layers).flat_map(|a| (a + 1..layers).map(move |b| (a, b))).collect();
    let total = blocks.len() * per_block;
    let mut out = Vec::new();
    if p <= 0.0 || total == 0 {
        return out;
    }
    let pair = |k: usize| {
        let (a, b) = blocks[k / per_block];
        let r = k % per_block;
        (a * size + r / size, b * size + r % size)
    };
    if p >= 1.0 {
        return (0..total).map(pair).collect();
    }
    let log_q = (1.0 - p).ln();
    let mut k = 0usize;
    loop {
        let u: f64 = rng.gen();
        // P(skip = s) = (1-p)^s p
        let skip = ((1.0 - u).ln() / log_q).floor();
        if skip >= (total - k) as f64 {
            break;
        }
        k += skip as usize;
        out.push(pair(k));
        k += 1;
        if k >= total {
            break;
        }
    }
    out
}

/// Returns the model advanced to step `t`: at multiples of the drift period
/// every layer moves by an independent `U(−h, h)` and is clipped at zero.
pub fn drift_probabilities<R: Rng>(lm: &LayerModel, t: usize, rng: &mut R) -> LayerModel {
    let mut next = lm.clone();
    if lm.drift_period == 0 || !t.is_multiple_of(lm.drift_period) || lm.drift_half_width == 0.0 {
        return next;
    }
    let h = lm.drift_half_width;
    for p in &mut next.probs {
        *p = (*p + rng.gen_range(-h..=h)).max(0.0);
    }
    next
}

/// Arc probability set by the receiving node's layer.
#[derive(Debug, Clone, Copy)]
pub struct LayeredInfection<'a> {
    layer_of: &'a [usize],
    probs: &'a [f64],
}

impl<'a> LayeredInfection<'a> {
    pub fn new(layer_of: &'a [usize], probs: &'a [f64]) -> Self {
        LayeredInfection { layer_of, probs }
    }
}

impl InfectionFn for LayeredInfection<'_> {
    fn prob(&self, _: usize, target: usize, w: f64) -> f64 {
        if w != 0.0 {
            self.probs[self.layer_of[target]]
        } else {
            0.0
        }
    }
}

/// Graph whose arc `j → v` carries `w · probs[layer(v)]`, used for scoring.
pub fn probability_weighted_graph(g: &Graph, layer_of: &[usize], probs: &[f64]) -> Graph {
    g.reweight_arcs(|_, v, w| w * probs[layer_of[v]])
}

/// Which nodes contribute to the layer observation operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ObservationMasking {
    /// Only susceptible, unvaccinated nodes can become new infections.
    #[default]
    Susceptible,
    /// Vaccination mask only.
    Unvaccinated,
}

/// Diagonal of `H`: per layer, the infected in-neighbour weight summed over
/// the nodes that can still be infected.
pub fn layer_observation_operator(
    g: &Graph,
    state: &EpidemicState,
    lm: &LayerModel,
    masking: ObservationMasking,
) -> Result<Vec<f64>> {
    let n = g.node_count();
    if state.len() != n || lm.node_count() != n {
        return Err(Error::Shape(format!(
            "graph has {n} nodes, state {}, layer model {}",
            state.len(),
            lm.node_count()
        )));
    }
    let mut h = vec![0.0; lm.layer_count()];
    for v in 0..n {
        let eligible = match masking {
            ObservationMasking::Susceptible => state.is_susceptible(v) && !state.vaccinated[v],
            ObservationMasking::Unvaccinated => !state.vaccinated[v],
        };
        if !eligible {
            continue;
        }
        let ai: f64 = g.in_neighbors(v).filter(|&(j, _)| state.infected[j]).map(|(_, w)| w).sum();
        h[lm.layer_of[v]] += ai;
    }
    Ok(h)
}

/// Counts of `newly_infected` nodes per layer.
pub fn new_infections_by_layer(lm: &LayerModel, newly_infected: &[usize]) -> Vec<f64> {
    let mut counts = vec![0.0; lm.layer_count()];
    for &v in newly_infected {
        counts[lm.layer_of[v]] += 1.0;
    }
    counts
}

/// BLUE update of layer probabilities from per-layer new infections, clipped to `[0, 1]`.
pub fn assimilate_layer_probs(p_b: &[f64], delta_i: &[f64], h: &[f64], b_scale: f64, o_scale: f64) -> Result<Vec<f64>> {
    let l = p_b.len();
    if delta_i.len() != l || h.len() != l {
        return Err(Error::Shape(format!(
            "{l} background probabilities, {} observations, {} operator entries",
            delta_i.len(),
            h.len()
        )));
    }
    let problem = AssimilationProblem::new(
        p_b.to_vec(),
        delta_i.to_vec(),
        ObservationOperator::diagonal(h)?,
        Covariance::scaled_identity(l, b_scale),
        Covariance::scaled_identity(l, o_scale),
    )?;
    Ok(blue_update(&problem, false)?.analysis.into_iter().map(|p| p.clamp(0.0, 1.0)).collect())
}

/// One row of a probability-trajectory export.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityRow {
    pub step: usize,
    pub layer: usize,
    pub p_true: f64,
    pub p_analyzed: f64,
    pub p_normalized_true: f64,
    pub p_normalized_analyzed: f64,
}

/// Rows for one step; a zero total normalizes to zero.
pub fn probability_rows(step: usize, p_true: &[f64], p_analyzed: &[f64]) -> Vec<ProbabilityRow> {
    let norm = |v: &[f64], i: usize| {
        let s: f64 = v.iter().sum();
        if s > 0.0 {
            v[i] / s
        } else {
            0.0
        }
    };
    (0..p_true.len())
        .map(|layer| ProbabilityRow {
            step,
            layer,
            p_true: p_true[layer],
            p_analyzed: p_analyzed[layer],
            p_normalized_true: norm(p_true, layer),
            p_normalized_analyzed: norm(p_analyzed, layer),
        })
        .collect()
}

pub fn write_probability_csv(rows: &[ProbabilityRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    if rows.is_empty() {
        w.write_record(["step", "layer", "p_true", "p_analyzed", "p_normalized_true", "p_normalized_analyzed"])
            .map_err(|e| Error::csv(path, e))?;
    }
    for r in rows {
        w.serialize(r).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes `source,target,weight` for every undirected edge and `node,layer`
/// for every node.
pub fn write_multilayer_csv(g: &Graph, lm: &LayerModel, edges_path: &Path, layers_path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(edges_path).map_err(|e| Error::csv(edges_path, e))?;
    w.write_record(["source", "target", "weight"]).map_err(|e| Error::csv(edges_path, e))?;
    // Assembled graphs carry both arcs of each edge; keep one.
    for e in g.edges().filter(|e| !g.is_directed() || e.source < e.target) {
        w.write_record([e.source.to_string(), e.target.to_string(), e.weight.to_string()])
            .map_err(|err| Error::csv(edges_path, err))?;
    }
    w.flush().map_err(|e| Error::io(edges_path, e))?;
    let mut w = csv::Writer::from_path(layers_path).map_err(|e| Error::csv(layers_path, e))?;
    w.write_record(["node", "layer"]).map_err(|e| Error::csv(layers_path, e))?;
    for (v, l) in lm.layer_of.iter().enumerate() {
        w.write_record([v.to_string(), l.to_string()]).map_err(|e| Error::csv(layers_path, e))?;
    }
    w.flush().map_err(|e| Error::io(layers_path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::degrees;
    use crate::rng;

    #[test]
    fn ba_edge_count_and_min_degree() {
        let g = barabasi_albert(1000, 2, &mut rng::stream(1, &[])).unwrap();
        assert_eq!(g.edge_count(), 1 + 998 * 2);
        let d = degrees(&g);
        assert!(d.iter().all(|&k| k >= 1.0));
        assert!(d[2..].iter().all(|&k| k >= 2.0));
        assert_eq!(d.iter().sum::<f64>(), 2.0 * g.edge_count() as f64);
    }

    #[test]
    fn ba_with_one_new_node_joins_all_seeds() {
        let g = barabasi_albert(4, 3, &mut rng::stream(0, &[])).unwrap();
        assert_eq!(g.edge_count(), 6);
        for s in 0..3 {
            assert_eq!(g.weight(s, 3), 1.0);
        }
        let tree = barabasi_albert(50, 1, &mut rng::stream(0, &[])).unwrap();
        assert_eq!(tree.edge_count(), 49);
    }

    #[test]
    fn ba_is_connected() {
        let g = barabasi_albert(300, 2, &mut rng::stream(5, &[])).unwrap();
        let adj = g.undirected_neighbors();
        let mut seen = vec![false; 300];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(v) = stack.pop() {
            for &u in &adj[v] {
                if !seen[u] {
                    seen[u] = true;
                    stack.push(u);
                }
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn ba_rejects_bad_m() {
        assert!(matches!(barabasi_albert(5, 5, &mut rng::stream(0, &[])), Err(Error::Config(_))));
        assert!(barabasi_albert(5, 0, &mut rng::stream(0, &[])).is_err());
    }

    #[test]
    fn ccdf_slope_of_exact_power_law() {
        // Degrees 2^i with P(K >= 2^i) = 2^-i exactly.
        let mut deg = Vec::new();
        for i in 0..=10u32 {
            let count = if i == 10 { 1 } else { 1usize << (9 - i) };
            deg.extend(std::iter::repeat_n(f64::from(1u32 << i), count));
        }
        let s = ccdf_tail_slope(&deg, 1.0).unwrap();
        assert!((s + 1.0).abs() < 1e-12, "{s}");
    }

    #[test]
    fn presets_match_reference_table() {
        assert_eq!(CiPreset::CiA.probs(), [0.025, 0.01, 0.01, 0.01, 0.01]);
        assert_eq!(CiPreset::from_name("ci_e").unwrap().probs()[4], 0.0);
        assert!(CiPreset::from_name("ci_z").is_err());
        for c in CiPreset::ALL {
            let p = c.probs();
            assert!(p.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn no_inter_layer_edges_gives_separate_components() {
        let cfg = MultilayerConfig {
            inter_density: 0.0,
            layer_size: 50,
            ..MultilayerConfig::default()
        };
        let (g, lm) = assemble_multilayer(&cfg, &mut rng::stream(2, &[])).unwrap();
        assert!(g.is_directed());
        assert_eq!(lm.layer_sizes, vec![50; 5]);
        assert!(g.edges().all(|e| lm.layer_of[e.source] == lm.layer_of[e.target]));
        assert!(g.edges().all(|e| g.weight(e.target, e.source) == 1.0));
        assert_eq!(g.arc_count(), 5 * 2 * (1 + 48 * 2));
    }

    #[test]
    fn full_inter_density_connects_every_cross_pair() {
        let cfg = MultilayerConfig {
            inter_density: 1.0,
            n_layers: 3,
            layer_size: 6,
            initial_probs: vec![0.1; 3],
            ..MultilayerConfig::default()
        };
        let (g, lm) = assemble_multilayer(&cfg, &mut rng::stream(2, &[])).unwrap();
        for i in 0..18 {
            for j in 0..18 {
                if lm.layer_of[i] != lm.layer_of[j] {
                    assert_eq!(g.weight(i, j), 1.0);
                }
            }
        }
    }

    #[test]
    fn inter_layer_count_is_binomial() {
        let mut total = 0usize;
        for seed in 0..20 {
            total += inter_layer_pairs(5, 200, 0.005, &mut rng::stream(seed, &[])).len();
        }
        let mean = total as f64 / 20.0;
        // 2000 expected, per-sample sd ≈ 44.6, so the mean of 20 has sd ≈ 10.
        assert!((mean - 2000.0).abs() < 40.0, "{mean}");
    }

    #[test]
    fn drift_schedule_and_clipping() {
        let cfg = MultilayerConfig::default();
        let lm = cfg.layer_model().unwrap();
        let mut cur = lm.clone();
        let mut events = 0;
        let mut r = rng::stream(3, &[]);
        for t in 1..=75 {
            let next = drift_probabilities(&cur, t, &mut r);
            if next.probs != cur.probs {
                events += 1;
                assert_eq!(t % 5, 0);
            }
            for (a, b) in next.probs.iter().zip(&cur.probs) {
                assert!((a - b).abs() <= 0.0004 + 1e-15);
                assert!(*a >= 0.0);
            }
            cur = next;
        }
        assert_eq!(events, 15);

        let mut tiny = lm.clone();
        tiny.probs = vec![0.0001; 5];
        tiny.drift_half_width = 1.0;
        let clipped = drift_probabilities(&tiny, 0, &mut r);
        assert!(clipped.probs.iter().all(|&p| p >= 0.0));

        let mut still = lm;
        still.drift_half_width = 0.0;
        assert_eq!(drift_probabilities(&still, 5, &mut r).probs, still.probs);
    }

    #[test]
    fn layered_infection_uses_receiver_layer() {
        let lm = MultilayerConfig::default().layer_model().unwrap();
        let ip = lm.infection();
        assert_eq!(ip.prob(500, 3, 1.0), 0.025);
        assert_eq!(ip.prob(3, 500, 1.0), 0.01);
        assert_eq!(ip.prob(3, 500, 0.0), 0.0);
    }

    fn hand_graph() -> (Graph, LayerModel) {
        // Node 0 (layer 0) infected, with out-neighbours 4, 5, 6 in layer 2
        // and 1 in layer 0.
        let layer_of = vec![0, 0, 1, 1, 2, 2, 2, 2];
        let lm = LayerModel::new(layer_of, vec![0.1, 0.2, 0.3]).unwrap();
        let mut arcs = Vec::new();
        for j in [1, 4, 5, 6] {
            arcs.push((0, j, 1.0));
            arcs.push((j, 0, 1.0));
        }
        (Graph::from_edges(8, true, arcs).unwrap(), lm)
    }

    #[test]
    fn observation_operator_hand_count() {
        let (g, lm) = hand_graph();
        let mut s = EpidemicState::susceptible(8);
        assert_eq!(layer_observation_operator(&g, &s, &lm, ObservationMasking::Susceptible).unwrap(), vec![0.0; 3]);
        s.infected[0] = true;
        s.recovery_clock[0] = 10;
        let h = layer_observation_operator(&g, &s, &lm, ObservationMasking::Susceptible).unwrap();
        assert_eq!(h, vec![1.0, 0.0, 3.0]);
        s.vaccinated[4] = true;
        s.vaccinated[5] = true;
        s.vaccinated[6] = true;
        s.vaccinated[7] = true;
        let h = layer_observation_operator(&g, &s, &lm, ObservationMasking::Susceptible).unwrap();
        assert_eq!(h[2], 0.0);
    }

    #[test]
    fn observation_operator_is_linear_in_infected_neighbours() {
        let layer_of = vec![0, 0, 1];
        let lm = LayerModel::new(layer_of, vec![0.1, 0.2]).unwrap();
        let arcs = [(0, 2, 1.0), (2, 0, 1.0), (1, 2, 1.0), (2, 1, 1.0)];
        let g = Graph::from_edges(3, true, arcs).unwrap();
        let mut s = EpidemicState::susceptible(3);
        s.infected[0] = true;
        s.recovery_clock[0] = 3;
        let one = layer_observation_operator(&g, &s, &lm, ObservationMasking::Susceptible).unwrap()[1];
        s.infected[1] = true;
        s.recovery_clock[1] = 3;
        let two = layer_observation_operator(&g, &s, &lm, ObservationMasking::Susceptible).unwrap()[1];
        assert_eq!(two, 2.0 * one);
    }

    #[test]
    fn literal_masking_counts_infected_receivers() {
        let (g, lm) = hand_graph();
        let mut s = EpidemicState::susceptible(8);
        s.infected[0] = true;
        s.infected[4] = true;
        s.recovery_clock[0] = 10;
        s.recovery_clock[4] = 10;
        let masked = layer_observation_operator(&g, &s, &lm, ObservationMasking::Susceptible).unwrap();
        let literal = layer_observation_operator(&g, &s, &lm, ObservationMasking::Unvaccinated).unwrap();
        assert_eq!(masked, vec![1.0, 0.0, 2.0]);
        // Node 0 has infected in-neighbour 4, and 4 has infected in-neighbour 0.
        assert_eq!(literal, vec![2.0, 0.0, 3.0]);
    }

    #[test]
    fn layer_assimilation_examples() {
        let p = assimilate_layer_probs(&[0.01], &[2.0], &[100.0], 1.0, 1.0).unwrap();
        assert!((p[0] - (0.01 + 100.0 / 10001.0)).abs() < 1e-15);
        assert!((p[0] - 0.01999).abs() < 1e-5);
        let pb = [0.02, 0.01, 0.03];
        assert_eq!(assimilate_layer_probs(&pb, &[0.0; 3], &[0.0; 3], 1.0, 1.0).unwrap(), pb.to_vec());
        let h = [10.0, 20.0, 5.0];
        let y: Vec<f64> = pb.iter().zip(&h).map(|(p, h)| p * h).collect();
        let same = assimilate_layer_probs(&pb, &y, &h, 1.0, 1.0).unwrap();
        for (a, b) in same.iter().zip(&pb) {
            assert!((a - b).abs() < 1e-15);
        }
        let clipped = assimilate_layer_probs(&[0.5, 0.5], &[1000.0, -1000.0], &[1.0, 1.0], 1.0, 1.0).unwrap();
        assert_eq!(clipped, vec![1.0, 0.0]);
    }

    #[test]
    fn probability_rows_normalize() {
        let rows = probability_rows(4, &[0.02, 0.02], &[0.03, 0.01]);
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].p_normalized_true, 0.5);
        assert_eq!(rows[0].p_normalized_analyzed, 0.75);
        assert_eq!(probability_rows(0, &[0.0], &[0.0])[0].p_normalized_true, 0.0);
    }
}
