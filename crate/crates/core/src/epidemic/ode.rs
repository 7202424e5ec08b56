//! Classical SIR ODE integrated with fixed-step RK4; a sanity reference for
//! the network model.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeParams {
    pub beta: f64,
    pub gamma: f64,
    pub population: f64,
    pub s0: f64,
    pub i0: f64,
    pub r0: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeSample {
    pub t: f64,
    pub s: f64,
    pub i: f64,
    pub r: f64,
}

impl OdeParams {
    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(Error::Config(format!("ODE step {} must be positive", self.dt)));
        }
        if [self.beta, self.gamma, self.s0, self.i0, self.r0]
            .iter()
            .any(|x| !x.is_finite() || *x < 0.0)
        {
            return Err(Error::Config("ODE rates and compartments must be finite and non-negative".into()));
        }
        let total = self.s0 + self.i0 + self.r0;
        if !(self.population > 0.0) || (total - self.population).abs() > 1e-9 * self.population {
            return Err(Error::Config(format!(
                "S0+I0+R0 = {total} does not match population {}",
                self.population
            )));
        }
        Ok(())
    }

    fn rhs(&self, [s, i, _]: [f64; 3]) -> [f64; 3] {
        let infection = self.beta * i * s / self.population;
        let recovery = self.gamma * i;
        [-infection, infection - recovery, recovery]
    }
}

/// Samples `(S, I, R)` at `t = 0, dt, 2dt, ...` and finally at `t_end`.
pub fn sir_ode_reference(p: &OdeParams, t_end: f64) -> Result<Vec<OdeSample>> {
    p.validate()?;
    if !(t_end >= 0.0) || !t_end.is_finite() {
        return Err(Error::Config(format!("end time {t_end} must be finite and non-negative")));
    }
    let mut y = [p.s0, p.i0, p.r0];
    let mut t = 0.0;
    let mut out = vec![OdeSample { t, s: y[0], i: y[1], r: y[2] }];
    let steps = (t_end / p.dt).ceil() as usize;
    for k in 0..steps {
        let h = (t_end - t).min(p.dt);
        if h <= 0.0 {
            break;
        }
        let add = |a: [f64; 3], b: [f64; 3], s: f64| [a[0] + s * b[0], a[1] + s * b[1], a[2] + s * b[2]];
        let k1 = p.rhs(y);
        let k2 = p.rhs(add(y, k1, h / 2.0));
        let k3 = p.rhs(add(y, k2, h / 2.0));
        let k4 = p.rhs(add(y, k3, h));
        for c in 0..3 {
            y[c] += h / 6.0 * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
        }
        t = if k + 1 == steps { t_end } else { t + h };
        if y.iter().any(|x| !x.is_finite()) {
            return Err(Error::Numeric(format!("non-finite SIR state at t = {t}")));
        }
        out.push(OdeSample { t, s: y[0], i: y[1], r: y[2] });
    }
    Ok(out)
}
