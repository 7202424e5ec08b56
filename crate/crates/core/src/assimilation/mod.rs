//! Linear-Gaussian assimilation: BLUE analysis, Kalman gain, and the 3D-VAR
//! cost with an iterative minimizer that serves as an independent solver.

mod linalg;
pub mod network;
mod variational;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub use linalg::{Covariance, ObservationOperator, MAX_CONDITION};
pub use network::{assimilate_network, assimilate_network_dense, NetworkAssimilator};
pub use variational::{cost_3dvar, minimize_3dvar};

#[derive(Debug, Clone, PartialEq)]
pub struct AssimilationProblem {
    pub background: Vec<f64>,
    pub observation: Vec<f64>,
    pub operator: ObservationOperator,
    pub cov_background: Covariance,
    pub cov_observation: Covariance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssimilationResult {
    pub analysis: Vec<f64>,
    pub analysis_cov: Option<DMatrix<f64>>,
    /// Euclidean norm of `y − H x^b`.
    pub innovation_norm: f64,
}

impl AssimilationProblem {
    pub fn new(
        background: Vec<f64>,
        observation: Vec<f64>,
        operator: ObservationOperator,
        cov_background: Covariance,
        cov_observation: Covariance,
    ) -> Result<Self> {
        let p = AssimilationProblem {
            background,
            observation,
            operator,
            cov_background,
            cov_observation,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn state_dim(&self) -> usize {
        self.background.len()
    }

    pub fn observation_dim(&self) -> usize {
        self.observation.len()
    }

    pub fn validate(&self) -> Result<()> {
        let (m, d) = (self.state_dim(), self.observation_dim());
        if self.operator.cols() != m || self.operator.rows() != d {
            return Err(Error::Shape(format!(
                "H is {}x{}, expected {d}x{m}",
                self.operator.rows(),
                self.operator.cols()
            )));
        }
        if self.cov_background.dim() != m {
            return Err(Error::Shape(format!("B has dimension {}, state has {m}", self.cov_background.dim())));
        }
        if self.cov_observation.dim() != d {
            return Err(Error::Shape(format!(
                "O has dimension {}, observation has {d}",
                self.cov_observation.dim()
            )));
        }
        if self.background.iter().chain(&self.observation).any(|x| !x.is_finite()) {
            return Err(Error::Numeric("non-finite background or observation".into()));
        }
        self.cov_background.validate("B")?;
        self.cov_observation.validate("O")
    }

    /// `y − H x`
    pub fn residual(&self, x: &[f64]) -> Vec<f64> {
        let hx = self.operator.apply(x);
        self.observation.iter().zip(hx).map(|(y, h)| y - h).collect()
    }
}

/// Dense gain `K = B Hᵀ (H B Hᵀ + O)⁻¹` obtained from an SPD solve.
pub fn kalman_gain(b: &Covariance, h: &ObservationOperator, o: &Covariance) -> Result<DMatrix<f64>> {
    check_dims(b, h, o)?;
    b.validate("B")?;
    o.validate("O")?;
    let s = linalg::innovation_solver(b, h, o)?;
    let bht = b.to_dense() * h.to_dense().transpose();
    // S is symmetric, so K = (S⁻¹ (B Hᵀ)ᵀ)ᵀ.
    Ok(s.solve_matrix(&bht.transpose()).transpose())
}

/// `x^a = x^b + B Hᵀ S⁻¹ (y − H x^b)`; `P_A = (I − K H) B` when `with_cov`.
pub fn blue_update(p: &AssimilationProblem, with_cov: bool) -> Result<AssimilationResult> {
    p.validate()?;
    let s = linalg::innovation_solver(&p.cov_background, &p.operator, &p.cov_observation)?;
    let innovation = p.residual(&p.background);
    let z = s.solve(&innovation);
    let correction = p.cov_background.mul_vec(&p.operator.apply_transpose(&z));
    let analysis: Vec<f64> = p.background.iter().zip(&correction).map(|(x, c)| x + c).collect();
    if analysis.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("non-finite analysis".into()));
    }
    let analysis_cov = if with_cov {
        let k = kalman_gain(&p.cov_background, &p.operator, &p.cov_observation)?;
        let m = p.state_dim();
        Some((DMatrix::identity(m, m) - k * p.operator.to_dense()) * p.cov_background.to_dense())
    } else {
        None
    };
    Ok(AssimilationResult {
        analysis,
        analysis_cov,
        innovation_norm: DVector::from_vec(innovation).norm(),
    })
}

fn check_dims(b: &Covariance, h: &ObservationOperator, o: &Covariance) -> Result<()> {
    if b.dim() != h.cols() || o.dim() != h.rows() {
        return Err(Error::Shape(format!(
            "B is {0}x{0}, H is {1}x{2}, O is {3}x{3}",
            b.dim(),
            h.rows(),
            h.cols(),
            o.dim()
        )));
    }
    Ok(())
}
