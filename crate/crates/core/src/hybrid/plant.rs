use serde::{Deserialize, Serialize};

use super::HybridError;

/// Fan model: dead-time lag, PT1 lag and a static duty → RPM map. Times in ms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantParams {
    pub ta: f64,
    pub tu: f64,
    pub ks: f64,
    pub cutoff_pct: f64,
    pub rpm_scale: f64,
    pub rpm_max: f64,
}

impl Default for PlantParams {
    fn default() -> Self {
        Self {
            ta: 330.0,
            tu: 78.0,
            ks: 0.925,
            cutoff_pct: 28.0,
            rpm_scale: 9250.0,
            rpm_max: 10_000.0,
        }
    }
}

impl PlantParams {
    pub fn check(&self) -> Result<(), HybridError> {
        if !(self.ta > 0.0) || !(self.tu >= 0.0) || !(self.ks > 0.0) {
            return Err(HybridError::Domain(format!(
                "plant needs Ta > 0, Tu >= 0, Ks > 0 (got {}, {}, {})",
                self.ta, self.tu, self.ks
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlantState {
    /// Output of the dead-time lag, in %.
    pub lag: f64,
    /// Effective duty after the PT1 stage, in %.
    pub duty: f64,
}

/// Zero below the cutoff, otherwise `duty·rpm_scale` clamped to `rpm_max`.
pub fn static_map(duty_pct: f64, p: &PlantParams) -> f64 {
    if duty_pct < p.cutoff_pct {
        0.0
    } else {
        (duty_pct / 100.0 * p.rpm_scale).min(p.rpm_max)
    }
}

/// Derivative of a first-order lag `tau·y' + y = k·u`.
pub(crate) fn lag_rate(y: f64, u: f64, k: f64, tau: f64) -> f64 {
    (k * u - y) / tau
}

/// Classical fourth-order Runge–Kutta step for `x' = f(x)`.
pub(crate) fn rk4<const N: usize>(x: [f64; N], h: f64, f: impl Fn(&[f64; N]) -> [f64; N]) -> [f64; N] {
    let add = |a: &[f64; N], b: &[f64; N], s: f64| std::array::from_fn(|i| a[i] + s * b[i]);
    let k1 = f(&x);
    let k2 = f(&add(&x, &k1, h / 2.0));
    let k3 = f(&add(&x, &k2, h / 2.0));
    let k4 = f(&add(&x, &k3, h));
    std::array::from_fn(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

/// Advances the plant by `dt` ms with the input held, returning the new state
/// and the fan speed in RPM.
pub fn plant_step(
    state: PlantState,
    u_pct: f64,
    dt: f64,
    p: &PlantParams,
) -> Result<(PlantState, f64), HybridError> {
    if !(dt > 0.0) {
        return Err(HybridError::Domain(format!("step {dt} ms must be positive")));
    }
    p.check()?;
    let next = if p.tu == 0.0 {
        let [duty] = rk4([state.duty], dt, |[y]| [lag_rate(*y, u_pct, p.ks, p.ta)]);
        PlantState { lag: u_pct, duty }
    } else {
        let [lag, duty] = rk4([state.lag, state.duty], dt, |[x, y]| {
            [lag_rate(*x, u_pct, 1.0, p.tu), lag_rate(*y, *x, p.ks, p.ta)]
        });
        PlantState { lag, duty }
    };
    Ok((next, static_map(next.duty, p)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_cutoff() {
        let p = PlantParams::default();
        assert_eq!(static_map(27.999, &p), 0.0);
        assert_eq!(static_map(50.0, &p), 4625.0);
        assert_eq!(static_map(120.0, &p), 10_000.0);
    }

    #[test]
    fn zero_input_stays_at_rest() {
        let p = PlantParams::default();
        let mut s = PlantState::default();
        for _ in 0..100 {
            let (n, rpm) = plant_step(s, 0.0, 1.0, &p).unwrap();
            assert_eq!(rpm, 0.0);
            s = n;
        }
        assert!(plant_step(s, 0.0, 0.0, &p).is_err());
    }
}
