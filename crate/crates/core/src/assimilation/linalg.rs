//! Sparse observation operators, covariance matrices, and SPD solves.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

/// Largest tolerated condition-number estimate of an SPD system.
pub const MAX_CONDITION: f64 = 1e12;

/// Linear map from state space (`cols`) to observation space (`rows`),
/// stored as compressed rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationOperator {
    rows: usize,
    cols: usize,
    offsets: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl ObservationOperator {
    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(rows: usize, cols: usize, mut triplets: Vec<(usize, usize, f64)>) -> Result<Self> {
        if let Some(&(r, c, _)) = triplets.iter().find(|t| t.0 >= rows || t.1 >= cols) {
            return Err(Error::Shape(format!("entry ({r}, {c}) outside {rows}x{cols} operator")));
        }
        if triplets.iter().any(|t| !t.2.is_finite()) {
            return Err(Error::Numeric("non-finite observation operator entry".into()));
        }
        triplets.sort_by_key(|a| (a.0, a.1));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for (r, c, v) in triplets {
            match merged.last_mut() {
                Some(last) if last.0 == r && last.1 == c => last.2 += v,
                _ => merged.push((r, c, v)),
            }
        }
        merged.retain(|t| t.2 != 0.0);
        let mut offsets = vec![0; rows + 1];
        for &(r, _, _) in &merged {
            offsets[r + 1] += 1;
        }
        for r in 0..rows {
            offsets[r + 1] += offsets[r];
        }
        Ok(ObservationOperator {
            rows,
            cols,
            offsets,
            indices: merged.iter().map(|t| t.1).collect(),
            values: merged.iter().map(|t| t.2).collect(),
        })
    }

    pub fn identity(m: usize) -> Self {
        Self::sub_identity(m, &(0..m).collect::<Vec<_>>()).expect("identity is well formed")
    }

    /// Row `r` picks state coordinate `selected[r]`.
    pub fn sub_identity(m: usize, selected: &[usize]) -> Result<Self> {
        Self::from_triplets(
            selected.len(),
            m,
            selected.iter().enumerate().map(|(r, &c)| (r, c, 1.0)).collect(),
        )
    }

    pub fn diagonal(values: &[f64]) -> Result<Self> {
        let m = values.len();
        Self::from_triplets(m, m, values.iter().enumerate().map(|(i, &v)| (i, i, v)).collect())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_triplets(rows, cols, Vec::new()).expect("empty operator is well formed")
    }

    pub fn from_dense(h: &DMatrix<f64>) -> Result<Self> {
        let mut t = Vec::new();
        for r in 0..h.nrows() {
            for c in 0..h.ncols() {
                t.push((r, c, h[(r, c)]));
            }
        }
        Self::from_triplets(h.nrows(), h.ncols(), t)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.offsets[r], self.offsets[r + 1]);
        self.indices[a..b].iter().copied().zip(self.values[a..b].iter().copied())
    }

    /// `H x`
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.rows).map(|r| self.row(r).map(|(c, v)| v * x[c]).sum()).collect()
    }

    /// `Hᵀ y`
    pub fn apply_transpose(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (r, &yr) in y.iter().enumerate().take(self.rows) {
            for (c, v) in self.row(r) {
                out[c] += v * yr;
            }
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut h = DMatrix::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            for (c, v) in self.row(r) {
                h[(r, c)] = v;
            }
        }
        h
    }

    /// Rows grouped by column: `columns[c]` lists `(row, value)`.
    fn columns(&self) -> Vec<Vec<(usize, f64)>> {
        let mut cols = vec![Vec::new(); self.cols];
        for r in 0..self.rows {
            for (c, v) in self.row(r) {
                cols[c].push((r, v));
            }
        }
        cols
    }
}

/// Error covariance, either diagonal or a full symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum Covariance {
    Diagonal(Vec<f64>),
    Dense(DMatrix<f64>),
}

impl Covariance {
    pub fn scaled_identity(dim: usize, scale: f64) -> Self {
        Covariance::Diagonal(vec![scale; dim])
    }

    pub fn dim(&self) -> usize {
        match self {
            Covariance::Diagonal(d) => d.len(),
            Covariance::Dense(m) => m.nrows(),
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        match self {
            Covariance::Diagonal(d) => DMatrix::from_diagonal(&DVector::from_column_slice(d)),
            Covariance::Dense(m) => m.clone(),
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        match self {
            Covariance::Diagonal(d) => d.clone(),
            Covariance::Dense(m) => m.diagonal().iter().copied().collect(),
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Covariance::Diagonal(d) => d.iter().zip(x).map(|(a, b)| a * b).collect(),
            Covariance::Dense(m) => (m * DVector::from_column_slice(x)).iter().copied().collect(),
        }
    }

    /// Positivity of the diagonal, plus symmetry and a successful
    /// factorization for dense matrices.
    pub fn validate(&self, name: &str) -> Result<()> {
        match self {
            Covariance::Diagonal(d) => {
                if let Some((i, v)) = d.iter().enumerate().find(|(_, &v)| !(v > 0.0) || !v.is_finite()) {
                    return Err(Error::Numeric(format!("{name}[{i}] = {v} is not positive")));
                }
            }
            Covariance::Dense(m) => {
                if !m.is_square() {
                    return Err(Error::Shape(format!("{name} is {}x{}", m.nrows(), m.ncols())));
                }
                let scale = m.amax().max(1.0);
                for i in 0..m.nrows() {
                    for j in 0..i {
                        if (m[(i, j)] - m[(j, i)]).abs() > 1e-12 * scale {
                            return Err(Error::Numeric(format!("{name} is not symmetric at ({i}, {j})")));
                        }
                    }
                }
                SpdSolver::factor_dense(m.clone(), name)?;
            }
        }
        Ok(())
    }

    pub(crate) fn solver(&self, name: &str) -> Result<SpdSolver> {
        match self {
            Covariance::Diagonal(d) => SpdSolver::diagonal(d.clone(), name),
            Covariance::Dense(m) => SpdSolver::factor_dense(m.clone(), name),
        }
    }
}

/// Factorized symmetric positive-definite matrix.
#[derive(Debug, Clone)]
pub(crate) enum SpdSolver {
    Diagonal(Vec<f64>),
    Cholesky(Cholesky<f64, Dyn>),
}

impl SpdSolver {
    fn diagonal(d: Vec<f64>, name: &str) -> Result<Self> {
        if d.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::Numeric(format!("{name} is not positive definite")));
        }
        let (lo, hi) = d.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        check_condition(if d.is_empty() { 1.0 } else { hi / lo }, name)?;
        Ok(SpdSolver::Diagonal(d))
    }

    fn factor_dense(m: DMatrix<f64>, name: &str) -> Result<Self> {
        if m.nrows() == 0 {
            return Ok(SpdSolver::Diagonal(Vec::new()));
        }
        let chol = Cholesky::new(m).ok_or_else(|| Error::Numeric(format!("{name} is not positive definite")))?;
        // Squared spread of the factor's diagonal: a cheap lower bound on the
        // 2-norm condition number.
        let l = chol.l_dirty().diagonal();
        let (lo, hi) = l.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        check_condition((hi / lo).powi(2), name)?;
        Ok(SpdSolver::Cholesky(chol))
    }

    pub(crate) fn solve(&self, b: &[f64]) -> Vec<f64> {
        match self {
            SpdSolver::Diagonal(d) => b.iter().zip(d).map(|(x, s)| x / s).collect(),
            SpdSolver::Cholesky(c) => c.solve(&DVector::from_column_slice(b)).iter().copied().collect(),
        }
    }

    pub(crate) fn solve_matrix(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            SpdSolver::Diagonal(d) => {
                let mut out = b.clone();
                for (i, s) in d.iter().enumerate() {
                    out.row_mut(i).scale_mut(1.0 / s);
                }
                out
            }
            SpdSolver::Cholesky(c) => c.solve(b),
        }
    }
}

fn check_condition(cond: f64, name: &str) -> Result<()> {
    if !cond.is_finite() || cond > MAX_CONDITION {
        return Err(Error::Numeric(format!(
            "{name} is ill-conditioned (condition estimate {cond:e} > {MAX_CONDITION:e})"
        )));
    }
    Ok(())
}

/// Innovation covariance `H B Hᵀ + O`, kept diagonal when the structure allows.
pub(crate) fn innovation_solver(b: &Covariance, h: &ObservationOperator, o: &Covariance) -> Result<SpdSolver> {
    let d = h.rows();
    match (b, o) {
        (Covariance::Diagonal(bd), Covariance::Diagonal(od)) => {
            let mut diag = od.clone();
            let mut off_diagonal = false;
            let mut dense: Option<DMatrix<f64>> = None;
            for (c, entries) in h.columns().into_iter().enumerate() {
                if entries.len() > 1 {
                    off_diagonal = true;
                }
                if off_diagonal && dense.is_none() {
                    dense = Some(DMatrix::from_diagonal(&DVector::from_column_slice(&diag)));
                }
                match dense.as_mut() {
                    Some(s) => {
                        for &(r1, v1) in &entries {
                            for &(r2, v2) in &entries {
                                s[(r1, r2)] += v1 * bd[c] * v2;
                            }
                        }
                    }
                    None => {
                        if let Some(&(r, v)) = entries.first() {
                            diag[r] += v * bd[c] * v;
                        }
                    }
                }
            }
            match dense {
                // Columns visited before the switch to dense were already
                // folded into `diag`, which seeded the dense matrix.
                Some(s) => SpdSolver::factor_dense(s, "innovation covariance"),
                None => SpdSolver::diagonal(diag, "innovation covariance"),
            }
        }
        _ => {
            let hd = h.to_dense();
            let s = &hd * b.to_dense() * hd.transpose() + o.to_dense();
            if s.nrows() != d {
                return Err(Error::Shape("innovation covariance has wrong size".into()));
            }
            SpdSolver::factor_dense(s, "innovation covariance")
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn operator_products() {
        let h = ObservationOperator::from_triplets(2, 3, vec![(0, 0, 1.0), (0, 2, 2.0), (1, 1, -1.0), (0, 2, 1.0)])
            .unwrap();
        assert_eq!(h.apply(&[1.0, 2.0, 3.0]), vec![10.0, -2.0]);
        assert_eq!(h.apply_transpose(&[1.0, 2.0]), vec![1.0, -2.0, 3.0]);
        let d = h.to_dense();
        assert_eq!(d[(0, 2)], 3.0);
        assert_eq!(ObservationOperator::from_dense(&d).unwrap(), h);
        assert!(ObservationOperator::from_triplets(1, 1, vec![(1, 0, 1.0)]).is_err());
    }

    #[test]
    fn diagonal_innovation_for_sub_identity() {
        let h = ObservationOperator::sub_identity(4, &[1, 3]).unwrap();
        let s = innovation_solver(&Covariance::Diagonal(vec![1.0, 2.0, 3.0, 4.0]), &h, &Covariance::scaled_identity(2, 1.0))
            .unwrap();
        assert!(matches!(s, SpdSolver::Diagonal(_)));
        assert_eq!(s.solve(&[3.0, 10.0]), vec![1.0, 2.0]);
    }

    #[test]
    fn shared_columns_fall_back_to_dense() {
        // Column 2 feeds both rows after column 0 was folded into the diagonal.
        let h = ObservationOperator::from_triplets(2, 3, vec![(0, 0, 1.0), (0, 2, 1.0), (1, 2, 1.0)]).unwrap();
        let b = Covariance::Diagonal(vec![1.0, 1.0, 2.0]);
        let o = Covariance::scaled_identity(2, 1.0);
        let s = innovation_solver(&b, &h, &o).unwrap();
        let hd = h.to_dense();
        let expected = &hd * b.to_dense() * hd.transpose() + o.to_dense();
        let x = s.solve(&[1.0, 0.0]);
        let back = &expected * DVector::from_column_slice(&x);
        assert!((back[0] - 1.0).abs() < 1e-12 && back[1].abs() < 1e-12);
    }

    #[test]
    fn covariance_validation() {
        assert!(Covariance::Diagonal(vec![1.0, 0.0]).validate("B").is_err());
        let asym = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 2.0]);
        assert!(Covariance::Dense(asym).validate("B").is_err());
        let indefinite = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]);
        assert!(Covariance::Dense(indefinite).validate("B").is_err());
        let ok = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        assert!(Covariance::Dense(ok).validate("B").is_ok());
    }

    #[test]
    fn condition_guard() {
        assert!(matches!(
            Covariance::Diagonal(vec![1.0, 1e-13]).solver("B"),
            Err(Error::Numeric(_))
        ));
        assert!(Covariance::Diagonal(vec![1.0, 1e-11]).solver("B").is_ok());
    }
}
