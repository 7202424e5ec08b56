//! Contact-log ingestion, condensation into temporal snapshots, partial
//! observation masks, and the bundled synthetic school dataset.

use std::collections::{BTreeSet, HashMap};
use std::io::BufRead;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Edge, Graph, GraphBuilder, TemporalNetwork};
use crate::rng::{self, Purpose};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContactRecord {
    pub tick: i64,
    pub i: usize,
    pub j: usize,
}

/// Time-stamped pairwise contacts over densely re-indexed nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct ContactLog {
    records: Vec<ContactRecord>,
    ids: Vec<String>,
}

impl ContactLog {
    /// Builds a log over nodes `0..n` named by their index.
    pub fn from_records(n: usize, mut records: Vec<ContactRecord>) -> Result<Self> {
        if records.is_empty() {
            return Err(Error::EmptyLog);
        }
        for r in &records {
            if r.i >= n || r.j >= n {
                return Err(Error::InvalidNode { node: r.i.max(r.j), n });
            }
            if r.i == r.j {
                return Err(Error::Contract(format!("self-contact of node {}", r.i)));
            }
        }
        records.sort_by_key(|r| r.tick);
        Ok(ContactLog {
            records,
            ids: (0..n).map(|i| i.to_string()).collect(),
        })
    }

    pub fn records(&self) -> &[ContactRecord] {
        &self.records
    }

    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    /// External identifier of each dense node id.
    pub fn external_ids(&self) -> &[String] {
        &self.ids
    }

    pub fn id_map(&self) -> HashMap<&str, usize> {
        self.ids.iter().enumerate().map(|(k, s)| (s.as_str(), k)).collect()
    }

    pub fn distinct_ticks(&self) -> usize {
        let mut count = 0;
        let mut last = None;
        for r in &self.records {
            if last != Some(r.tick) {
                count += 1;
                last = Some(r.tick);
            }
        }
        count
    }

    /// Distinct unordered contact pairs over the whole log.
    pub fn distinct_pairs(&self) -> BTreeSet<(usize, usize)> {
        self.records
            .iter()
            .map(|r| (r.i.min(r.j), r.i.max(r.j)))
            .collect()
    }
}

/// Parses `<tick> <id_i> <id_j> [ignored...]` lines; `#` lines and blank
/// lines are skipped. External ids are numbered in order of first appearance.
pub fn parse_contact_log<R: BufRead>(reader: R) -> Result<ContactLog> {
    let mut ids: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut records = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let line_no = k + 1;
        let line = line.map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut fields = trimmed.split_whitespace();
        let (Some(t), Some(a), Some(b)) = (fields.next(), fields.next(), fields.next()) else {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected `<tick> <id_i> <id_j>`, got {trimmed:?}"),
            });
        };
        let tick: i64 = t.parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("tick {t:?} is not an integer"),
        })?;
        if a == b {
            return Err(Error::Parse {
                line: line_no,
                message: format!("self-contact of {a:?}"),
            });
        }
        let mut intern = |s: &str| -> usize {
            if let Some(&v) = index.get(s) {
                return v;
            }
            ids.push(s.to_owned());
            index.insert(s.to_owned(), ids.len() - 1);
            ids.len() - 1
        };
        let i = intern(a);
        let j = intern(b);
        records.push(ContactRecord { tick, i, j });
    }
    if records.is_empty() {
        return Err(Error::EmptyLog);
    }
    records.sort_by_key(|r| r.tick);
    Ok(ContactLog { records, ids })
}

pub fn read_contact_log(path: &Path) -> Result<ContactLog> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    parse_contact_log(std::io::BufReader::new(file))
}

/// Groups consecutive runs of `window` distinct ticks into undirected
/// snapshots whose edge weights count the contacts in the window.
///
/// Snapshots are labelled by the first tick of their window.
pub fn condense(log: &ContactLog, window: usize) -> Result<TemporalNetwork> {
    if window == 0 {
        return Err(Error::Config("condensation window must be at least 1".into()));
    }
    let n = log.node_count();
    let mut snapshots = Vec::new();
    let mut labels = Vec::new();
    let mut builder: Option<GraphBuilder> = None;
    let mut ticks_in_window = 0;
    let mut last_tick = None;
    for r in &log.records {
        if last_tick != Some(r.tick) {
            if ticks_in_window == window {
                snapshots.push(builder.take().expect("window open").build());
                ticks_in_window = 0;
            }
            if ticks_in_window == 0 {
                builder = Some(GraphBuilder::new(n, false));
                labels.push(r.tick);
            }
            ticks_in_window += 1;
            last_tick = Some(r.tick);
        }
        builder
            .as_mut()
            .expect("window open")
            .add(r.i, r.j, 1.0)?;
    }
    if let Some(b) = builder {
        snapshots.push(b.build());
    }
    TemporalNetwork::new(snapshots)?.with_labels(labels)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaskMode {
    /// The same hidden node set at every snapshot.
    #[default]
    Static,
    /// A fresh hidden set per snapshot.
    PerStep,
}

/// Which nodes are missing from the background (prior) network.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationMask {
    n: usize,
    fraction: f64,
    mode: MaskMode,
    seed: u64,
    static_hidden: Vec<bool>,
}

/// `round(fraction * n)` with halves rounded up.
pub fn hidden_count(n: usize, fraction: f64) -> usize {
    ((fraction * n as f64) + 0.5).floor() as usize
}

impl ObservationMask {
    pub fn new(n: usize, fraction: f64, mode: MaskMode, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&fraction) {
            return Err(Error::Config(format!(
                "missing fraction {fraction} outside [0, 1]"
            )));
        }
        let static_hidden = draw_hidden(n, fraction, &mut rng::stream(seed, &[Purpose::Mask as u64]));
        Ok(ObservationMask {
            n,
            fraction,
            mode,
            seed,
            static_hidden,
        })
    }

    pub fn fraction(&self) -> f64 {
        self.fraction
    }

    pub fn mode(&self) -> MaskMode {
        self.mode
    }

    /// Hidden-node indicator for snapshot `step`.
    pub fn hidden_at(&self, step: usize) -> Vec<bool> {
        match self.mode {
            MaskMode::Static => self.static_hidden.clone(),
            MaskMode::PerStep => draw_hidden(
                self.n,
                self.fraction,
                &mut rng::stream(self.seed, &[Purpose::Mask as u64, step as u64]),
            ),
        }
    }
}

fn draw_hidden<R: Rng>(n: usize, fraction: f64, rng: &mut R) -> Vec<bool> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut hidden = vec![false; n];
    for &v in order.iter().take(hidden_count(n, fraction).min(n)) {
        hidden[v] = true;
    }
    hidden
}

/// Removes every edge incident to a hidden node.
pub fn mask_snapshot(g: &Graph, hidden: &[bool]) -> Graph {
    g.induced(|v| !hidden[v])
}

pub fn apply_mask(tn: &TemporalNetwork, mask: &ObservationMask) -> Result<TemporalNetwork> {
    if mask.n != tn.node_count() {
        return Err(Error::Shape(format!(
            "mask over {} nodes applied to network of {}",
            mask.n,
            tn.node_count()
        )));
    }
    let snaps = tn
        .snapshots()
        .iter()
        .enumerate()
        .map(|(t, g)| mask_snapshot(g, &mask.hidden_at(t)))
        .collect();
    let out = TemporalNetwork::new(snaps)?;
    match tn.step_labels() {
        Some(l) => out.with_labels(l.to_vec()),
        None => Ok(out),
    }
}

/// Maps disjoint node blocks to a per-node block index.
pub fn block_index(n: usize, blocks: &[Vec<usize>]) -> Result<Vec<Option<usize>>> {
    let mut of = vec![None; n];
    for (b, block) in blocks.iter().enumerate() {
        for &v in block {
            if v >= n {
                return Err(Error::InvalidNode { node: v, n });
            }
            if let Some(prev) = of[v] {
                return Err(Error::Config(format!(
                    "node {v} appears in blocks {prev} and {b}"
                )));
            }
            of[v] = Some(b);
        }
    }
    Ok(of)
}

/// True edges of one snapshot whose endpoints share a block.
pub fn observe_snapshot(g: &Graph, block_of: &[Option<usize>]) -> Vec<Edge> {
    g.edges()
        .filter(|e| matches!((block_of[e.source], block_of[e.target]), (Some(a), Some(b)) if a == b))
        .collect()
}

/// Intra-block edges of every snapshot (the observation vectors).
pub fn subnetwork_observations(tn: &TemporalNetwork, blocks: &[Vec<usize>]) -> Result<Vec<Vec<Edge>>> {
    let of = block_index(tn.node_count(), blocks)?;
    Ok(tn.snapshots().iter().map(|g| observe_snapshot(g, &of)).collect())
}

/// Writes `step,i,j,w` rows for every snapshot edge.
pub fn write_snapshots_csv(tn: &TemporalNetwork, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    w.write_record(["step", "i", "j", "w"]).map_err(|e| Error::csv(path, e))?;
    for (t, g) in tn.snapshots().iter().enumerate() {
        for e in g.edges() {
            w.serialize((t, e.source, e.target, e.weight))
                .map_err(|e| Error::csv(path, e))?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Parameters of the synthetic school-like contact log.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSchool {
    pub class_sizes: Vec<usize>,
    pub ticks: usize,
    pub window: usize,
    /// Target mean snapshot density after condensation.
    pub density: f64,
    /// Share of snapshot edges that stay inside a class.
    pub intra_share: f64,
    /// Probability that a student is present in a given window.
    pub presence: f64,
    /// Mean number of raw contacts per active pair and window.
    pub mean_multiplicity: f64,
}

impl Default for SyntheticSchool {
    fn default() -> Self {
        SyntheticSchool {
            class_sizes: vec![110, 110, 109],
            ticks: 7374,
            window: 100,
            density: 0.0076,
            intra_share: 0.85,
            presence: 0.85,
            mean_multiplicity: 3.0,
        }
    }
}

impl SyntheticSchool {
    pub fn node_count(&self) -> usize {
        self.class_sizes.iter().sum()
    }

    /// Class label of every node (classes are contiguous index ranges).
    pub fn classes(&self) -> Vec<usize> {
        self.class_sizes
            .iter()
            .enumerate()
            .flat_map(|(c, &s)| std::iter::repeat_n(c, s))
            .collect()
    }

    /// Generates a raw contact log whose condensation with `self.window`
    /// yields `ceil(ticks / window)` snapshots of roughly `self.density`.
    pub fn generate(&self, seed: u64) -> Result<ContactLog> {
        let n = self.node_count();
        if n < 2 || self.window == 0 || self.ticks == 0 {
            return Err(Error::Config("synthetic school needs n >= 2 and positive ticks/window".into()));
        }
        let class = self.classes();
        let intra_pairs: f64 = self.class_sizes.iter().map(|&s| (s * s.saturating_sub(1)) as f64 / 2.0).sum();
        let all_pairs = (n * (n - 1)) as f64 / 2.0;
        let inter_pairs = all_pairs - intra_pairs;
        let edges = self.density * all_pairs;
        let presence2 = self.presence * self.presence;
        let p_in = (edges * self.intra_share / intra_pairs.max(1.0) / presence2).min(1.0);
        let p_out = if inter_pairs > 0.0 {
            (edges * (1.0 - self.intra_share) / inter_pairs / presence2).min(1.0)
        } else {
            0.0
        };

        let mut setup = rng::stream(seed, &[Purpose::Synthetic as u64]);
        // Heterogeneous sociability with unit mean.
        let activity: Vec<f64> = (0..n).map(|_| setup.gen_range(0.4..1.6)).collect();

        let windows = self.ticks.div_ceil(self.window);
        let mut records = Vec::new();
        for s in 0..windows {
            let mut r = rng::stream(seed, &[Purpose::Synthetic as u64, s as u64]);
            let present: Vec<bool> = (0..n).map(|_| r.gen_bool(self.presence)).collect();
            let mut window_contacts = Vec::new();
            for i in 0..n {
                if !present[i] {
                    continue;
                }
                for j in i + 1..n {
                    if !present[j] {
                        continue;
                    }
                    let base = if class[i] == class[j] { p_in } else { p_out };
                    if r.gen_bool((base * activity[i] * activity[j]).min(1.0)) {
                        let extra = (-(1.0 - r.gen::<f64>()).ln() * (self.mean_multiplicity - 1.0)).floor() as usize;
                        for _ in 0..=extra {
                            window_contacts.push((i, j));
                        }
                    }
                }
            }
            let first = s * self.window;
            let width = self.window.min(self.ticks - first);
            window_contacts.shuffle(&mut r);
            // Round-robin over the window's ticks so each one carries contacts.
            for (k, (i, j)) in window_contacts.into_iter().enumerate() {
                records.push(ContactRecord {
                    tick: (first + k % width) as i64,
                    i,
                    j,
                });
            }
        }
        ContactLog::from_records(n, records)
    }
}
