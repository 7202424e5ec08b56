//! Multilayer scenario: vaccination ranked on graphs weighted by prior,
//! assimilated or true layer probabilities.

use std::cell::RefCell;
use std::collections::HashMap;

use super::config::{Knowledge, LayerArm, RandomnessMode, ScenarioConfig, Topology};
use super::invariants::{InvariantReport, InvariantTracker};
use super::summary::summarize;
use super::{ProbabilityTrace, RunTrace, ScenarioReport};
use crate::epidemic::{init_state, step, TrajectoryRow};
use crate::error::Result;
use crate::exec::Execution;
use crate::graph::Graph;
use crate::multilayer::{
    assemble_multilayer, assimilate_layer_probs, drift_probabilities, layer_observation_operator,
    new_infections_by_layer, probability_rows, probability_weighted_graph, CiPreset, LayerModel, LayeredInfection,
    MultilayerConfig, ProbabilityRow,
};
use crate::rng::{self, Purpose};
use crate::strategies::{apply_vaccination, scores, select_ranked, StrategyKind, TieBreak};

pub fn scenario_name(ci: CiPreset) -> String {
    format!("multilayer_{}", ci.name())
}

struct ArmOutcome {
    curve: Vec<f64>,
    trajectory: Vec<TrajectoryRow>,
    probabilities: Vec<ProbabilityRow>,
    invariants: InvariantReport,
}

/// Graphs and true layer models for steps `0..=steps`, shared by every arm of a run.
struct World {
    graphs: Vec<Graph>,
    truth: Vec<LayerModel>,
    // Betweenness counts hops, so it only depends on which layers have a zero
    // weight; arms sharing that pattern at a step share the scores.
    centrality: RefCell<HashMap<(usize, Vec<bool>), Vec<f64>>>,
}

fn build_world(cfg: &ScenarioConfig, net: &MultilayerConfig, ci: usize, run: usize) -> Result<World> {
    let m = &cfg.multilayer;
    let root = cfg.root_seed;
    let key = |t: usize, p: Purpose| rng::stream(root, &[ci as u64, run as u64, t as u64, p as u64]);
    let mut graphs = Vec::with_capacity(m.steps + 1);
    let (g0, lm0) = assemble_multilayer(net, &mut key(0, Purpose::Topology))?;
    graphs.push(g0);
    let mut truth = vec![lm0];
    for t in 1..=m.steps {
        if m.topology == Topology::Fresh {
            graphs.push(assemble_multilayer(net, &mut key(t, Purpose::Topology))?.0);
        }
        let next = drift_probabilities(&truth[t - 1], t, &mut key(t, Purpose::Drift));
        truth.push(next);
    }
    Ok(World {
        graphs,
        truth,
        centrality: RefCell::new(HashMap::new()),
    })
}

impl World {
    fn graph(&self, t: usize) -> &Graph {
        &self.graphs[t.min(self.graphs.len() - 1)]
    }

    fn scores(&self, t: usize, weights: &[f64], kind: StrategyKind) -> Vec<f64> {
        let weighted = probability_weighted_graph(self.graph(t), &self.truth[0].layer_of, weights);
        if kind != StrategyKind::HighestCentrality {
            return scores(&weighted, kind).expect("ranked strategy");
        }
        let key = (t, weights.iter().map(|&w| w == 0.0).collect());
        self.centrality
            .borrow_mut()
            .entry(key)
            .or_insert_with(|| scores(&weighted, kind).expect("ranked strategy"))
            .clone()
    }
}

pub fn run(cfg: &ScenarioConfig, exec: Execution) -> Result<ScenarioReport> {
    cfg.validate()?;
    let m = &cfg.multilayer;
    let (nc, nr) = (m.conditions.len(), cfg.runs);
    let outcomes = exec.map_indexed(nc * nr, |idx| simulate_run(cfg, idx / nr, idx % nr));
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;

    let mut report = ScenarioReport::default();
    let n = m.network.node_count();
    for (ci, preset) in m.conditions.iter().enumerate() {
        let scenario = scenario_name(*preset);
        let runs = &outcomes[ci * nr..(ci + 1) * nr];
        for (ai, arm) in m.arms.iter().enumerate() {
            let curves: Vec<Vec<f64>> = runs.iter().map(|r| r[ai].curve.clone()).collect();
            report.summaries.push(summarize(&scenario, arm.name(), n, &curves)?);
            report.traces.push(RunTrace {
                scenario: scenario.clone(),
                arm: arm.name().to_string(),
                rows: runs[0][ai].trajectory.clone(),
            });
        }
        let da = m.arms.iter().position(|a| *a == LayerArm::DaHd).or_else(|| {
            m.arms.iter().position(|a| a.knowledge() == Knowledge::Assimilated)
        });
        if let Some(ai) = da {
            report.probabilities.push(ProbabilityTrace {
                condition: preset.name().to_string(),
                rows: runs[0][ai].probabilities.clone(),
            });
        }
    }
    for run in outcomes {
        for arm in run {
            report.invariants.merge(arm.invariants);
        }
    }
    Ok(report)
}

fn simulate_run(cfg: &ScenarioConfig, ci: usize, run: usize) -> Result<Vec<ArmOutcome>> {
    let m = &cfg.multilayer;
    let preset = m.conditions[ci];
    let net = m.network.clone().with_preset(preset);
    let world = build_world(cfg, &net, ci, run)?;
    m.arms
        .iter()
        .enumerate()
        .map(|(ai, &arm)| simulate_arm(cfg, &world, preset, ci, ai, arm, run))
        .collect()
}

fn simulate_arm(
    cfg: &ScenarioConfig,
    world: &World,
    preset: CiPreset,
    ci: usize,
    ai: usize,
    arm: LayerArm,
    run: usize,
) -> Result<ArmOutcome> {
    let m = &cfg.multilayer;
    let root = cfg.root_seed;
    let base: Vec<u64> = match cfg.randomness {
        RandomnessMode::Common => vec![ci as u64, run as u64],
        RandomnessMode::Independent => vec![ci as u64, run as u64, 1 + ai as u64],
    };
    let stream = |extra: &[u64]| rng::stream(root, &base.iter().chain(extra).copied().collect::<Vec<_>>());
    let layer_of = &world.truth[0].layer_of;
    let n = layer_of.len();
    let layers = world.truth[0].layer_count();
    let prior_mean = preset.probs().iter().sum::<f64>() / layers as f64;
    let prior = vec![prior_mean; layers];
    let mut analyzed = prior.clone();
    let mut pending: Option<(Vec<f64>, Vec<f64>)> = None;

    let mut state = init_state(n, &cfg.sir, &mut stream(&[Purpose::InitialInfection as u64]))?;
    let mut tracker = InvariantTracker::new(format!("{} {} run {run}", scenario_name(preset), arm.name()));
    tracker.observe(0, &state, 0);
    let mut curve = vec![state.infected_count() as f64];
    let mut trajectory = vec![TrajectoryRow::of(0, &state, 0)];
    let mut probabilities = Vec::new();

    for t in 1..=m.steps {
        let g = world.graph(t);
        let truth = &world.truth[t];
        if arm.knowledge() == Knowledge::Assimilated {
            if let Some((h, delta)) = pending.take() {
                // The previous analysis is this step's background.
                analyzed = assimilate_layer_probs(&analyzed, &delta, &h, m.b_scale, m.o_scale)?;
            }
            probabilities.extend(probability_rows(t, &truth.probs, &analyzed));
        }
        let weights = match arm.knowledge() {
            Knowledge::Prior => &prior,
            Knowledge::Assimilated => &analyzed,
            Knowledge::True => &truth.probs,
        };
        let sc = world.scores(t, weights, arm.strategy());
        let mut tie = stream(&[t as u64, Purpose::Vaccination as u64]);
        let targets = select_ranked(&sc, &state, m.doses, TieBreak::LowestIndex, &mut tie);
        state = apply_vaccination(&state, &targets)?;
        let h = if arm.knowledge() == Knowledge::Assimilated {
            Some(layer_observation_operator(g, &state, truth, m.masking)?)
        } else {
            None
        };
        let ip = LayeredInfection::new(layer_of, &truth.probs);
        let out = step(g, &state, &cfg.sir, &ip, &mut stream(&[t as u64, Purpose::Infection as u64]))?;
        if let Some(h) = h {
            pending = Some((h, new_infections_by_layer(truth, &out.newly_infected)));
        }
        state = out.state;
        tracker.observe(t, &state, out.newly_infected.len());
        curve.push(state.infected_count() as f64);
        trajectory.push(TrajectoryRow::of(t, &state, out.newly_infected.len()));
    }
    Ok(ArmOutcome {
        curve,
        trajectory,
        probabilities,
        invariants: tracker.finish(),
    })
}
