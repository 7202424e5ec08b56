//! Stochastic SIR propagation over a contact graph.
//!
//! One step turns the infected set of the previous step into per-node
//! infection probabilities, draws new infections, and advances recovery
//! clocks. The draw pattern is fixed (two uniforms per node per step, in node
//! order) so that runs fed the same stream see identical randomness whatever
//! their vaccination history.

mod ode;

pub use ode::{sir_ode_reference, OdeParams, OdeSample};

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Probability that an infected `source` infects `target` across an arc of weight `w`.
pub trait InfectionFn: Sync {
    fn prob(&self, source: usize, target: usize, w: f64) -> f64;
}

/// Constant probability for any nonzero edge (weights binarized).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantInfection(pub f64);

impl InfectionFn for ConstantInfection {
    fn prob(&self, _: usize, _: usize, w: f64) -> f64 {
        if w != 0.0 {
            self.0
        } else {
            0.0
        }
    }
}

/// Each of the `|w|` contacts transmits independently with the given probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerContactInfection(pub f64);

impl InfectionFn for PerContactInfection {
    fn prob(&self, _: usize, _: usize, w: f64) -> f64 {
        1.0 - (1.0 - self.0).powf(w.abs())
    }
}

/// How infected neighbours combine into one probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CombineMode {
    /// Sum of neighbour probabilities clamped to 1.
    #[default]
    Matrix,
    /// `1 - Π (1 - p_j)` over infected neighbours.
    Complementary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SirParams {
    pub recovery_low: u32,
    pub recovery_high: u32,
    pub initial_infection_prob: f64,
    pub combine: CombineMode,
}

impl Default for SirParams {
    fn default() -> Self {
        SirParams {
            recovery_low: 55,
            recovery_high: 65,
            initial_infection_prob: 0.1,
            combine: CombineMode::Matrix,
        }
    }
}

impl SirParams {
    pub fn validate(&self) -> Result<()> {
        if self.recovery_low < 1 || self.recovery_low > self.recovery_high {
            return Err(Error::Config(format!(
                "recovery bounds [{}, {}] must satisfy 1 <= low <= high",
                self.recovery_low, self.recovery_high
            )));
        }
        if !(0.0..=1.0).contains(&self.initial_infection_prob) {
            return Err(Error::Config(format!(
                "initial infection probability {} outside [0, 1]",
                self.initial_infection_prob
            )));
        }
        Ok(())
    }

    fn draw_clock<R: Rng>(&self, rng: &mut R) -> u32 {
        rng.gen_range(self.recovery_low..=self.recovery_high)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EpidemicState {
    pub infected: Vec<bool>,
    pub vaccinated: Vec<bool>,
    pub recovered: Vec<bool>,
    pub recovery_clock: Vec<u32>,
}

impl EpidemicState {
    pub fn susceptible(n: usize) -> Self {
        EpidemicState {
            infected: vec![false; n],
            vaccinated: vec![false; n],
            recovered: vec![false; n],
            recovery_clock: vec![0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.infected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.infected.is_empty()
    }

    pub fn infected_count(&self) -> usize {
        self.infected.iter().filter(|&&x| x).count()
    }

    pub fn recovered_count(&self) -> usize {
        self.recovered.iter().filter(|&&x| x).count()
    }

    pub fn vaccinated_count(&self) -> usize {
        self.vaccinated.iter().filter(|&&x| x).count()
    }

    pub fn susceptible_count(&self) -> usize {
        self.infected
            .iter()
            .zip(&self.recovered)
            .filter(|(&i, &r)| !i && !r)
            .count()
    }

    pub fn is_susceptible(&self, v: usize) -> bool {
        !self.infected[v] && !self.recovered[v]
    }

    /// Checks the per-state invariants: lengths agree, no node is both
    /// infected and recovered, and clocks run exactly on infected nodes.
    pub fn check(&self) -> Result<()> {
        let n = self.len();
        if self.vaccinated.len() != n || self.recovered.len() != n || self.recovery_clock.len() != n {
            return Err(Error::Shape("state vectors have different lengths".into()));
        }
        for v in 0..n {
            if self.infected[v] && self.recovered[v] {
                return Err(Error::Contract(format!("node {v} infected and recovered")));
            }
            if (self.recovery_clock[v] > 0) != self.infected[v] {
                return Err(Error::Contract(format!(
                    "node {v} has clock {} but infected={}",
                    self.recovery_clock[v], self.infected[v]
                )));
            }
        }
        Ok(())
    }
}

/// Each node independently infected with `params.initial_infection_prob`.
pub fn init_state<R: Rng>(n: usize, params: &SirParams, rng: &mut R) -> Result<EpidemicState> {
    params.validate()?;
    if n == 0 {
        return Err(Error::Config("population must have at least one node".into()));
    }
    let mut state = EpidemicState::susceptible(n);
    for v in 0..n {
        let u: f64 = rng.gen();
        let clock = params.draw_clock(rng);
        if u < params.initial_infection_prob {
            state.infected[v] = true;
            state.recovery_clock[v] = clock;
        }
    }
    Ok(state)
}

/// Per-node infection probabilities for the coming step.
///
/// Infected, recovered and vaccinated nodes get zero.
pub fn infection_probabilities(
    g: &Graph,
    state: &EpidemicState,
    ip: &dyn InfectionFn,
    combine: CombineMode,
) -> Result<Vec<f64>> {
    let n = g.node_count();
    if state.len() != n {
        return Err(Error::Shape(format!(
            "state of length {} on graph with {n} nodes",
            state.len()
        )));
    }
    let mut acc = match combine {
        CombineMode::Matrix => vec![0.0; n],
        CombineMode::Complementary => vec![1.0; n],
    };
    for j in (0..n).filter(|&j| state.infected[j]) {
        for (v, w) in g.out_neighbors(j) {
            let p = ip.prob(j, v, w);
            match combine {
                CombineMode::Matrix => acc[v] += p,
                CombineMode::Complementary => acc[v] *= 1.0 - p,
            }
        }
    }
    Ok((0..n)
        .map(|v| {
            if state.infected[v] || state.recovered[v] || state.vaccinated[v] {
                return 0.0;
            }
            match combine {
                CombineMode::Matrix => acc[v].clamp(0.0, 1.0),
                CombineMode::Complementary => (1.0 - acc[v]).clamp(0.0, 1.0),
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub state: EpidemicState,
    pub newly_infected: Vec<usize>,
    pub newly_recovered: usize,
}

/// Advances the epidemic by one step on `g`.
pub fn step<R: Rng>(
    g: &Graph,
    state: &EpidemicState,
    params: &SirParams,
    ip: &dyn InfectionFn,
    rng: &mut R,
) -> Result<StepOutcome> {
    let probs = infection_probabilities(g, state, ip, params.combine)?;
    let mut next = state.clone();
    let mut newly_infected = Vec::new();
    let mut newly_recovered = 0;
    for v in 0..state.len() {
        let u: f64 = rng.gen();
        let clock = params.draw_clock(rng);
        if state.infected[v] {
            next.recovery_clock[v] -= 1;
            if next.recovery_clock[v] == 0 {
                next.infected[v] = false;
                next.recovered[v] = true;
                newly_recovered += 1;
            }
        } else if u < probs[v] {
            next.infected[v] = true;
            next.recovery_clock[v] = clock;
            newly_infected.push(v);
        }
    }
    Ok(StepOutcome {
        state: next,
        newly_infected,
        newly_recovered,
    })
}

/// One row of a trajectory export.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub step: usize,
    pub infected: usize,
    pub recovered: usize,
    pub vaccinated: usize,
    pub new_infections: usize,
}

impl TrajectoryRow {
    pub fn of(step: usize, state: &EpidemicState, new_infections: usize) -> Self {
        TrajectoryRow {
            step,
            infected: state.infected_count(),
            recovered: state.recovered_count(),
            vaccinated: state.vaccinated_count(),
            new_infections,
        }
    }
}

/// Writes `step,infected,recovered,vaccinated,new_infections`.
pub fn write_trajectory_csv(rows: &[TrajectoryRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path, e))?;
    if rows.is_empty() {
        w.write_record(["step", "infected", "recovered", "vaccinated", "new_infections"])
            .map_err(|e| Error::csv(path, e))?;
    }
    for r in rows {
        w.serialize(r).map_err(|e| Error::csv(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
