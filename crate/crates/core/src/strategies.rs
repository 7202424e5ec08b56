//! Vaccination target selection under a per-step dose budget.

use std::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::epidemic::EpidemicState;
use crate::error::{Error, Result};
use crate::graph::{betweenness, degrees, Graph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyKind {
    Random,
    HighestDegree,
    HighestCentrality,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieBreak {
    #[default]
    LowestIndex,
    SeededRandom,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrategyConfig {
    pub kind: StrategyKind,
    pub capacity_fraction: f64,
    #[serde(default)]
    pub tie_break: TieBreak,
    /// Absolute doses per step; wins over `capacity_fraction` when set.
    #[serde(default)]
    pub budget_override: Option<usize>,
}

impl StrategyConfig {
    pub fn new(kind: StrategyKind, capacity_fraction: f64) -> Self {
        StrategyConfig {
            kind,
            capacity_fraction,
            tie_break: TieBreak::LowestIndex,
            budget_override: None,
        }
    }

    pub fn with_budget(mut self, doses: usize) -> Self {
        self.budget_override = Some(doses);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.capacity_fraction) {
            return Err(Error::Config(format!(
                "capacity fraction {} outside [0, 1]",
                self.capacity_fraction
            )));
        }
        Ok(())
    }

    /// Doses per round for a population of `n`.
    pub fn budget(&self, n: usize) -> usize {
        self.budget_override
            .unwrap_or_else(|| (self.capacity_fraction * n as f64 + 0.5).floor() as usize)
    }
}

/// Node scores used by the ranked strategies; `None` for [`StrategyKind::Random`].
pub fn scores(g: &Graph, kind: StrategyKind) -> Option<Vec<f64>> {
    match kind {
        StrategyKind::Random => None,
        StrategyKind::HighestDegree => Some(degrees(g)),
        StrategyKind::HighestCentrality => Some(betweenness(g)),
    }
}

/// Picks `min(budget, #unvaccinated)` not-yet-vaccinated nodes.
///
/// Infected and recovered nodes stay eligible: a dose given to them is
/// wasted but still consumed.
pub fn select_targets<R: Rng>(
    g: &Graph,
    state: &EpidemicState,
    cfg: &StrategyConfig,
    rng: &mut R,
) -> Result<Vec<usize>> {
    cfg.validate()?;
    if g.node_count() != state.len() {
        return Err(Error::Shape(format!(
            "graph with {} nodes, state of length {}",
            g.node_count(),
            state.len()
        )));
    }
    let budget = cfg.budget(state.len());
    Ok(match scores(g, cfg.kind) {
        None => select_random(state, budget, rng),
        Some(s) => select_ranked(&s, state, budget, cfg.tie_break, rng),
    })
}

pub fn select_random<R: Rng>(state: &EpidemicState, budget: usize, rng: &mut R) -> Vec<usize> {
    let eligible: Vec<usize> = (0..state.len()).filter(|&v| !state.vaccinated[v]).collect();
    let mut picked: Vec<usize> = eligible.choose_multiple(rng, budget.min(eligible.len())).copied().collect();
    picked.sort_unstable();
    picked
}

/// Top-`budget` unvaccinated nodes by score, descending.
///
/// Nodes scoring zero (for instance nodes missing from a background
/// network) only fill remaining doses after every positive-score node.
pub fn select_ranked<R: Rng>(
    scores: &[f64],
    state: &EpidemicState,
    budget: usize,
    tie_break: TieBreak,
    rng: &mut R,
) -> Vec<usize> {
    let keys: Vec<u64> = match tie_break {
        TieBreak::LowestIndex => (0..scores.len() as u64).collect(),
        TieBreak::SeededRandom => (0..scores.len()).map(|_| rng.gen()).collect(),
    };
    let mut eligible: Vec<usize> = (0..state.len()).filter(|&v| !state.vaccinated[v]).collect();
    let cmp = |a: &usize, b: &usize| -> Ordering {
        scores[*b]
            .total_cmp(&scores[*a])
            .then(keys[*a].cmp(&keys[*b]))
            .then(a.cmp(b))
    };
    let k = budget.min(eligible.len());
    if k == 0 {
        return Vec::new();
    }
    if k < eligible.len() {
        eligible.select_nth_unstable_by(k - 1, cmp);
        eligible.truncate(k);
    }
    eligible.sort_by(cmp);
    eligible
}

/// Marks `targets` vaccinated; infection state and clocks are untouched.
pub fn apply_vaccination(state: &EpidemicState, targets: &[usize]) -> Result<EpidemicState> {
    let mut next = state.clone();
    for &v in targets {
        if v >= state.len() {
            return Err(Error::InvalidNode { node: v, n: state.len() });
        }
        if next.vaccinated[v] {
            return Err(Error::Contract(format!("node {v} is already vaccinated")));
        }
        next.vaccinated[v] = true;
    }
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::epidemic::{infection_probabilities, step, CombineMode, ConstantInfection, SirParams};
    use crate::rng;

    fn star(leaves: usize) -> Graph {
        Graph::from_edges(leaves + 1, false, (1..=leaves).map(|i| (0, i, 1.0))).unwrap()
    }

    #[test]
    fn zero_capacity_selects_nothing() {
        let g = star(9);
        let s = EpidemicState::susceptible(10);
        for kind in [StrategyKind::Random, StrategyKind::HighestDegree, StrategyKind::HighestCentrality] {
            let cfg = StrategyConfig::new(kind, 0.0);
            assert!(select_targets(&g, &s, &cfg, &mut rng::stream(0, &[])).unwrap().is_empty());
        }
    }

    #[test]
    fn star_center_has_highest_degree_and_centrality() {
        let g = star(9);
        let s = EpidemicState::susceptible(10);
        for kind in [StrategyKind::HighestDegree, StrategyKind::HighestCentrality] {
            let cfg = StrategyConfig::new(kind, 0.0).with_budget(1);
            assert_eq!(select_targets(&g, &s, &cfg, &mut rng::stream(0, &[])).unwrap(), vec![0]);
        }
    }

    #[test]
    fn budget_rounding_and_override() {
        let cfg = StrategyConfig::new(StrategyKind::Random, 0.02);
        assert_eq!(cfg.budget(329), 7);
        assert_eq!(cfg.with_budget(6).budget(329), 6);
        assert_eq!(StrategyConfig::new(StrategyKind::Random, 0.02).budget(1000), 20);
        assert!(StrategyConfig::new(StrategyKind::Random, 1.5).validate().is_err());
    }

    #[test]
    fn selection_excludes_vaccinated_and_caps_at_eligible() {
        let g = star(4);
        let mut s = EpidemicState::susceptible(5);
        s.vaccinated[0] = true;
        s.vaccinated[3] = true;
        let cfg = StrategyConfig::new(StrategyKind::HighestDegree, 0.0).with_budget(10);
        let t = select_targets(&g, &s, &cfg, &mut rng::stream(0, &[])).unwrap();
        assert_eq!(t, vec![1, 2, 4]);
        let cfg = StrategyConfig::new(StrategyKind::Random, 0.0).with_budget(10);
        let t = select_targets(&g, &s, &cfg, &mut rng::stream(0, &[])).unwrap();
        assert_eq!(t, vec![1, 2, 4]);
    }

    #[test]
    fn infected_nodes_remain_eligible() {
        let g = star(3);
        let mut s = EpidemicState::susceptible(4);
        s.infected[0] = true;
        s.recovery_clock[0] = 5;
        let cfg = StrategyConfig::new(StrategyKind::HighestDegree, 0.0).with_budget(1);
        assert_eq!(select_targets(&g, &s, &cfg, &mut rng::stream(0, &[])).unwrap(), vec![0]);
    }

    #[test]
    fn zero_scores_rank_last() {
        let scores = [0.0, 0.0, 0.1, 0.0, 5.0];
        let s = EpidemicState::susceptible(5);
        let mut r = rng::stream(1, &[]);
        assert_eq!(select_ranked(&scores, &s, 2, TieBreak::LowestIndex, &mut r), vec![4, 2]);
        let three = select_ranked(&scores, &s, 3, TieBreak::SeededRandom, &mut r);
        assert_eq!(&three[..2], &[4, 2]);
        assert!(scores[three[2]] == 0.0);
    }

    #[test]
    fn lowest_index_tie_break() {
        let scores = [1.0; 6];
        let s = EpidemicState::susceptible(6);
        let t = select_ranked(&scores, &s, 3, TieBreak::LowestIndex, &mut rng::stream(0, &[]));
        assert_eq!(t, vec![0, 1, 2]);
    }

    #[test]
    fn degree_argmax_invariant_under_rescaling() {
        let g = Graph::from_edges(5, false, [(0, 1, 1.0), (0, 2, 2.0), (3, 4, 0.5), (1, 3, 1.5)]).unwrap();
        let scaled = g.reweight_arcs(|_, _, w| 7.5 * w);
        let s = EpidemicState::susceptible(5);
        let cfg = StrategyConfig::new(StrategyKind::HighestDegree, 0.0).with_budget(2);
        let a = select_targets(&g, &s, &cfg, &mut rng::stream(0, &[])).unwrap();
        let b = select_targets(&scaled, &s, &cfg, &mut rng::stream(0, &[])).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn apply_vaccination_contract() {
        let s = EpidemicState::susceptible(3);
        assert_eq!(apply_vaccination(&s, &[]).unwrap(), s);
        let v = apply_vaccination(&s, &[1]).unwrap();
        assert!(v.vaccinated[1]);
        assert!(matches!(apply_vaccination(&v, &[1]), Err(Error::Contract(_))));
        assert!(matches!(apply_vaccination(&v, &[3]), Err(Error::InvalidNode { .. })));
    }

    #[test]
    fn vaccinated_susceptible_is_never_infected() {
        let g = star(3);
        let mut s = EpidemicState::susceptible(4);
        s.infected[0] = true;
        s.recovery_clock[0] = 50;
        let s = apply_vaccination(&s, &[2]).unwrap();
        let p = SirParams::default();
        let ip = ConstantInfection(1.0);
        let mut cur = s;
        for t in 0..10 {
            assert_eq!(infection_probabilities(&g, &cur, &ip, CombineMode::Matrix).unwrap()[2], 0.0);
            cur = step(&g, &cur, &p, &ip, &mut rng::stream(0, &[t])).unwrap().state;
        }
        assert!(!cur.infected[2] && !cur.recovered[2]);
        assert!(cur.infected[1] && cur.infected[3]);
    }

    #[test]
    fn full_capacity_stops_new_infections() {
        let g = star(20);
        let mut s = EpidemicState::susceptible(21);
        s.infected[0] = true;
        s.recovery_clock[0] = 30;
        let cfg = StrategyConfig::new(StrategyKind::HighestDegree, 1.0);
        let targets = select_targets(&g, &s, &cfg, &mut rng::stream(0, &[])).unwrap();
        assert_eq!(targets.len(), 21);
        let mut cur = apply_vaccination(&s, &targets).unwrap();
        for t in 0..5 {
            let out = step(&g, &cur, &SirParams::default(), &ConstantInfection(1.0), &mut rng::stream(1, &[t])).unwrap();
            assert!(out.newly_infected.is_empty());
            cur = out.state;
        }
    }
}
