//! Monte Carlo aggregation of per-run infected curves.

use crate::error::{Error, Result};

/// Mean and population standard deviation of the infected count at every
/// step, across runs, for one arm of one scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub scenario: String,
    pub arm: String,
    pub population: usize,
    pub runs: usize,
    /// Infected counts.
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// First step at which the mean curve is maximal.
    pub peak_step: usize,
    /// Peak of the mean curve as a fraction of the population.
    pub peak_mean: f64,
    /// Across-run standard deviation at `peak_step`, as a fraction.
    pub peak_std: f64,
}

impl RunSummary {
    pub fn peak_mean_count(&self) -> f64 {
        self.mean[self.peak_step]
    }

    pub fn mean_fraction(&self) -> Vec<f64> {
        self.mean.iter().map(|m| m / self.population as f64).collect()
    }

    /// Time average of the across-run standard deviation, as a fraction.
    pub fn average_std(&self) -> f64 {
        self.std.iter().sum::<f64>() / self.std.len() as f64 / self.population as f64
    }
}

pub fn summarize(scenario: &str, arm: &str, population: usize, curves: &[Vec<f64>]) -> Result<RunSummary> {
    if curves.is_empty() {
        return Err(Error::Config("cannot summarize zero runs".into()));
    }
    if population == 0 {
        return Err(Error::Config("population must be positive".into()));
    }
    let len = curves[0].len();
    if len == 0 {
        return Err(Error::Shape("curves are empty".into()));
    }
    if let Some(bad) = curves.iter().position(|c| c.len() != len) {
        return Err(Error::Shape(format!(
            "run {bad} has {} steps, run 0 has {len}",
            curves[bad].len()
        )));
    }
    let runs = curves.len() as f64;
    let mean: Vec<f64> = (0..len).map(|t| curves.iter().map(|c| c[t]).sum::<f64>() / runs).collect();
    let std: Vec<f64> = (0..len)
        .map(|t| (curves.iter().map(|c| (c[t] - mean[t]).powi(2)).sum::<f64>() / runs).sqrt())
        .collect();
    let mut peak_step = 0;
    for (t, &m) in mean.iter().enumerate() {
        if m > mean[peak_step] {
            peak_step = t;
        }
    }
    let pop = population as f64;
    Ok(RunSummary {
        scenario: scenario.to_string(),
        arm: arm.to_string(),
        population,
        runs: curves.len(),
        peak_mean: mean[peak_step] / pop,
        peak_std: std[peak_step] / pop,
        peak_step,
        mean,
        std,
    })
}
