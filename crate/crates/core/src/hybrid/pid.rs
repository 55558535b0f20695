use serde::{Deserialize, Serialize};

use super::HybridError;

/// Parallel-form discrete PID. Times in ms, gains in %/%.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PidParams {
    pub kp: f64,
    /// Per ms.
    pub ki: f64,
    /// In ms.
    pub kd: f64,
    pub tn: f64,
    pub tv: f64,
    pub ts: f64,
    pub u_min: f64,
    pub u_max: f64,
}

impl PidParams {
    /// Gains only; `tn` and `tv` are derived where defined.
    pub fn from_gains(kp: f64, ki: f64, kd: f64, ts: f64) -> Self {
        Self {
            kp,
            ki,
            kd,
            tn: if ki != 0.0 { kp / ki } else { f64::INFINITY },
            tv: if kp != 0.0 { kd / kp } else { 0.0 },
            ts,
            u_min: 0.0,
            u_max: 100.0,
        }
    }

    pub fn with_limits(mut self, u_min: f64, u_max: f64) -> Self {
        self.u_min = u_min;
        self.u_max = u_max;
        self
    }

    pub fn with_ts(mut self, ts: f64) -> Self {
        self.ts = ts;
        self
    }

    pub fn check(&self) -> Result<(), HybridError> {
        if !(self.ts > 0.0) {
            return Err(HybridError::Domain(format!("sampling time {} must be positive", self.ts)));
        }
        if !(self.u_min < self.u_max) {
            return Err(HybridError::Domain(format!(
                "output limits [{}, {}] are empty",
                self.u_min, self.u_max
            )));
        }
        if !(self.tn > 0.0) {
            return Err(HybridError::Domain(format!("reset time {} must be positive", self.tn)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PidState {
    /// Accumulated `e·Ts`.
    pub integral_sum: f64,
    pub prev_error: f64,
}

/// Chien–Hrones–Reswick set-point rules without overshoot. `ts` is left at
/// 1 ms and the output limits at [0, 100] %.
pub fn chr_tune(ta: f64, tu: f64, ks: f64) -> Result<PidParams, HybridError> {
    if !(tu > 0.0) || !(ks > 0.0) || !(ta > 0.0) {
        return Err(HybridError::Domain(format!(
            "tuning needs Ta, Tu, Ks > 0 (got {ta}, {tu}, {ks})"
        )));
    }
    let kp = 0.6 * ta / (ks * tu);
    let (tn, tv) = (ta, 0.5 * tu);
    Ok(PidParams {
        kp,
        ki: kp / tn,
        kd: kp * tv,
        tn,
        tv,
        ts: 1.0,
        u_min: 0.0,
        u_max: 100.0,
    })
}

/// One controller sample with conditional integration: the integral only
/// advances when the unclamped output stays within the limits.
pub fn pid_step(state: PidState, e: f64, p: &PidParams) -> (PidState, f64) {
    let candidate = state.integral_sum + e * p.ts;
    let raw = p.kp * e + p.ki * candidate + p.kd * (e - state.prev_error) / p.ts;
    let inside = raw >= p.u_min && raw <= p.u_max;
    let next = PidState {
        integral_sum: if inside { candidate } else { state.integral_sum },
        prev_error: e,
    };
    (next, raw.clamp(p.u_min, p.u_max))
}
