use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LorenzParams {
    pub sigma: f64,
    pub rho: f64,
    pub beta: f64,
    pub dt: f64,
    pub steps: usize,
    pub init: [f64; 3],
}

impl Default for LorenzParams {
    fn default() -> Self {
        Self {
            sigma: 10.0,
            rho: 28.0,
            beta: 8.0 / 3.0,
            dt: 0.01,
            steps: 1000,
            init: [1.0, 1.0, 1.0],
        }
    }
}

impl LorenzParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("lorenz dt {} must be > 0", self.dt)));
        }
        if self.steps == 0 {
            return Err(Error::InvalidParameter("lorenz steps must be >= 1".into()));
        }
        if !(self.sigma > 0.0 && self.rho > 0.0 && self.beta > 0.0) {
            return Err(Error::InvalidParameter(
                "lorenz sigma, rho, beta must be positive".into(),
            ));
        }
        Ok(())
    }

    /// The two non-trivial equilibria `(±√(β(ρ−1)), ±√(β(ρ−1)), ρ−1)`.
    pub fn fixed_points(&self) -> [[f64; 3]; 2] {
        let a = (self.beta * (self.rho - 1.0)).sqrt();
        let z = self.rho - 1.0;
        [[a, a, z], [-a, -a, z]]
    }

    pub fn derivative(&self, s: [f64; 3]) -> [f64; 3] {
        let [x, y, z] = s;
        [
            self.sigma * (y - x),
            x * (self.rho - z) - y,
            x * y - self.beta * z,
        ]
    }

    /// One classical fourth-order Runge–Kutta step of size `dt`.
    pub fn rk4_step(&self, s: [f64; 3], dt: f64) -> [f64; 3] {
        let add = |a: [f64; 3], b: [f64; 3], h: f64| [a[0] + h * b[0], a[1] + h * b[1], a[2] + h * b[2]];
        let k1 = self.derivative(s);
        let k2 = self.derivative(add(s, k1, dt / 2.0));
        let k3 = self.derivative(add(s, k2, dt / 2.0));
        let k4 = self.derivative(add(s, k3, dt));
        std::array::from_fn(|i| s[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
    }
}

/// `steps + 1` states starting at `init`, integrated with fixed-step RK4.
pub fn lorenz_trajectory(p: &LorenzParams) -> Result<Vec<[f64; 3]>> {
    p.validate()?;
    let mut out = Vec::with_capacity(p.steps + 1);
    let mut s = p.init;
    out.push(s);
    for step in 1..=p.steps {
        s = p.rk4_step(s, p.dt);
        if s.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                step,
                what: "lorenz state".into(),
            });
        }
        out.push(s);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn origin_is_an_equilibrium() {
        let p = LorenzParams {
            init: [0.0; 3],
            steps: 500,
            ..Default::default()
        };
        assert!(lorenz_trajectory(&p).unwrap().iter().all(|s| *s == [0.0; 3]));
    }

    #[test]
    fn first_state_is_init() {
        let p = LorenzParams::default();
        let t = lorenz_trajectory(&p).unwrap();
        assert_eq!(t.len(), p.steps + 1);
        assert_eq!(t[0], p.init);
    }

    #[test]
    fn rejects_bad_step() {
        let p = LorenzParams {
            dt: 0.0,
            ..Default::default()
        };
        assert!(lorenz_trajectory(&p).is_err());
        let p = LorenzParams {
            steps: 0,
            ..Default::default()
        };
        assert!(lorenz_trajectory(&p).is_err());
    }

    #[test]
    fn blow_up_reports_step() {
        // far outside the attractor with a huge step the explicit scheme explodes
        let p = LorenzParams {
            dt: 1.0,
            steps: 200,
            init: [50.0, 50.0, 50.0],
            ..Default::default()
        };
        match lorenz_trajectory(&p) {
            Err(Error::NonFinite { step, .. }) => assert!(step >= 1),
            other => panic!("expected overflow, got {other:?}"),
        }
    }
}
