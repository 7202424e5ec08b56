//! School scenario: vaccination on a partially known contact network, with
//! and without assimilation of intra-community observations.

use std::path::PathBuf;

use rand::Rng;

use super::config::{InfectionModel, RandomnessMode, ScenarioConfig, SchoolArm};
use super::invariants::{InvariantReport, InvariantTracker};
use super::summary::summarize;
use super::{RunTrace, ScenarioReport};
use crate::assimilation::NetworkAssimilator;
use crate::community::{fluid_communities, Partition, DEFAULT_MAX_ITER};
use crate::contact_data::{
    block_index, condense, mask_snapshot, observe_snapshot, read_contact_log, ObservationMask, SyntheticSchool,
};
use crate::epidemic::{
    init_state, step, ConstantInfection, EpidemicState, InfectionFn, PerContactInfection, TrajectoryRow,
};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::graph::{overlap, TemporalNetwork};
use crate::rng::{self, derive_seed, Purpose};
use crate::strategies::{apply_vaccination, scores, select_random, select_ranked, TieBreak};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DatasetSource {
    File(PathBuf),
    Synthetic,
}

impl DatasetSource {
    pub fn is_synthetic(&self) -> bool {
        matches!(self, DatasetSource::Synthetic)
    }
}

/// Condensed network, its provenance, and the detected communities.
#[derive(Debug, Clone)]
pub struct SchoolData {
    pub network: TemporalNetwork,
    pub source: DatasetSource,
    pub partition: Partition,
}

/// Reads the configured contact log, or generates the synthetic school with
/// a warning when none is configured.
pub fn load_school_network(cfg: &ScenarioConfig) -> Result<(TemporalNetwork, DatasetSource)> {
    let (log, source) = match &cfg.school.dataset {
        Some(path) => (read_contact_log(path)?, DatasetSource::File(path.clone())),
        None => {
            log::warn!(
                "NO CONTACT DATASET CONFIGURED: using the synthetic school generator; \
                 results are not comparable with the published tables"
            );
            let seed = derive_seed(cfg.root_seed, &[Purpose::Synthetic as u64]);
            (SyntheticSchool::default().generate(seed)?, DatasetSource::Synthetic)
        }
    };
    Ok((condense(&log, cfg.school.window)?, source))
}

/// Fluid communities on the union of every snapshot.
pub fn detect_communities(tn: &TemporalNetwork, k: usize, seed: u64) -> Result<Partition> {
    let g = overlap(tn, 0, tn.len() - 1)?;
    let out = fluid_communities(&g, k, &mut rng::stream(seed, &[Purpose::Community as u64]), DEFAULT_MAX_ITER)?;
    if !out.converged {
        log::warn!("community detection stopped after {} sweeps without converging", out.iterations);
    }
    Ok(out.partition)
}

pub fn prepare(cfg: &ScenarioConfig) -> Result<SchoolData> {
    let (network, source) = load_school_network(cfg)?;
    let partition = detect_communities(&network, cfg.school.communities, cfg.root_seed)?;
    Ok(SchoolData { network, source, partition })
}

pub fn scenario_name(fraction: f64) -> String {
    format!("school_missing{:02}", (fraction * 100.0).round() as u32)
}

struct RunOutcome {
    curve: Vec<f64>,
    trajectory: Vec<TrajectoryRow>,
    invariants: InvariantReport,
}

struct Ctx<'a> {
    cfg: &'a ScenarioConfig,
    data: &'a SchoolData,
    block_of: Vec<Option<usize>>,
    assimilator: NetworkAssimilator,
    steps: usize,
}

pub fn run(cfg: &ScenarioConfig, exec: Execution) -> Result<ScenarioReport> {
    cfg.validate()?;
    let data = prepare(cfg)?;
    run_with_data(cfg, &data, exec)
}

/// Runs every (missing fraction, arm, run) combination on prepared data.
pub fn run_with_data(cfg: &ScenarioConfig, data: &SchoolData, exec: Execution) -> Result<ScenarioReport> {
    let s = &cfg.school;
    let n = data.network.node_count();
    if data.partition.node_count() != n {
        return Err(Error::Shape("partition does not cover the network".into()));
    }
    let ctx = Ctx {
        cfg,
        data,
        block_of: block_index(n, &data.partition.blocks())?,
        assimilator: NetworkAssimilator::new(data.partition.clone(), s.b_scale, s.o_scale)?,
        steps: s.steps.map_or(data.network.len(), |k| k.min(data.network.len())),
    };
    let (nf, na, nr) = (s.missing_fractions.len(), s.arms.len(), cfg.runs);
    let outcomes = exec.map_indexed(nf * na * nr, |idx| {
        let (fi, rest) = (idx / (na * nr), idx % (na * nr));
        simulate(&ctx, fi, rest / nr, rest % nr)
    });
    let outcomes = outcomes.into_iter().collect::<Result<Vec<_>>>()?;

    let mut report = ScenarioReport::default();
    for fi in 0..nf {
        let scenario = scenario_name(s.missing_fractions[fi]);
        for (ai, arm) in s.arms.iter().enumerate() {
            let slice = &outcomes[(fi * na + ai) * nr..(fi * na + ai + 1) * nr];
            let curves: Vec<Vec<f64>> = slice.iter().map(|o| o.curve.clone()).collect();
            report.summaries.push(summarize(&scenario, arm.name(), n, &curves)?);
            report.traces.push(RunTrace {
                scenario: scenario.clone(),
                arm: arm.name().to_string(),
                rows: slice[0].trajectory.clone(),
            });
        }
    }
    for o in outcomes {
        report.invariants.merge(o.invariants);
    }
    report.dataset = Some(data.source.clone());
    report.partition = Some(data.partition.clone());
    Ok(report)
}

fn simulate(ctx: &Ctx, fi: usize, ai: usize, run: usize) -> Result<RunOutcome> {
    let cfg = ctx.cfg;
    let s = &cfg.school;
    let arm = s.arms[ai];
    let tn = &ctx.data.network;
    let n = tn.node_count();
    let root = cfg.root_seed;
    // Common mode keys streams by run only, so every arm and missing fraction
    // sees the same initial infections and infection draws.
    let base: Vec<u64> = match cfg.randomness {
        RandomnessMode::Common => vec![run as u64],
        RandomnessMode::Independent => vec![run as u64, 1 + fi as u64, 1 + ai as u64],
    };
    let path = |extra: &[u64]| -> Vec<u64> { base.iter().chain(extra).copied().collect() };
    let mask = ObservationMask::new(
        n,
        s.missing_fractions[fi],
        s.mask_mode,
        derive_seed(root, &[Purpose::Mask as u64, fi as u64, run as u64]),
    )?;
    let constant = ConstantInfection(s.infection_prob);
    let per_contact = PerContactInfection(s.infection_prob);
    let ip: &dyn InfectionFn = match s.infection_model {
        InfectionModel::Constant => &constant,
        InfectionModel::PerContact => &per_contact,
    };

    let mut state = init_state(n, &cfg.sir, &mut rng::stream(root, &path(&[Purpose::InitialInfection as u64])))?;
    let label = format!("{} {} run {run}", scenario_name(s.missing_fractions[fi]), arm.name());
    let mut tracker = InvariantTracker::new(label);
    tracker.observe(0, &state, 0);
    let mut curve = vec![state.infected_count() as f64];
    let mut trajectory = vec![TrajectoryRow::of(0, &state, 0)];

    for t in 0..ctx.steps {
        let truth = tn.snapshot(t).expect("step within horizon");
        let targets = choose_targets(ctx, arm, t, &state, &mask, &mut rng::stream(root, &path(&[t as u64, Purpose::Vaccination as u64])))?;
        state = apply_vaccination(&state, &targets)?;
        let out = step(truth, &state, &cfg.sir, ip, &mut rng::stream(root, &path(&[t as u64, Purpose::Infection as u64])))?;
        state = out.state;
        tracker.observe(t + 1, &state, out.newly_infected.len());
        curve.push(state.infected_count() as f64);
        trajectory.push(TrajectoryRow::of(t + 1, &state, out.newly_infected.len()));
    }
    Ok(RunOutcome {
        curve,
        trajectory,
        invariants: tracker.finish(),
    })
}

fn choose_targets<R: Rng>(
    ctx: &Ctx,
    arm: SchoolArm,
    t: usize,
    state: &EpidemicState,
    mask: &ObservationMask,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let doses = ctx.cfg.school.doses;
    let kind = match arm.strategy() {
        None => return Ok(Vec::new()),
        Some(k) => k,
    };
    let truth = ctx.data.network.snapshot(t).expect("step within horizon");
    let background = mask_snapshot(truth, &mask.hidden_at(t));
    let known = match arm {
        SchoolArm::AssimilatedHd | SchoolArm::AssimilatedBc => {
            ctx.assimilator.assimilate(&background, &observe_snapshot(truth, &ctx.block_of))?
        }
        _ => background,
    };
    Ok(match scores(&known, kind) {
        None => select_random(state, doses, rng),
        Some(sc) => select_ranked(&sc, state, doses, TieBreak::LowestIndex, rng),
    })
}
