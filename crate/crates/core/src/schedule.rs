//! Per-iteration parameter schedules (pump-loss ramp, mean-field gain).

use serde::{Deserialize, Serialize};

use crate::error::SolverError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case")]
pub enum ScheduleForm {
    /// `v(t) = start + (end - start) * (1 + tanh(steepness * (2t/(T-1) - 1))) / 2`
    TanhRamp { start: f64, end: f64, steepness: f64 },
    Constant { value: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PumpSchedule {
    pub form: ScheduleForm,
    /// Number of iterations `T`.
    pub duration: usize,
}

impl PumpSchedule {
    pub fn tanh_ramp(start: f64, end: f64, steepness: f64, duration: usize) -> Self {
        Self { form: ScheduleForm::TanhRamp { start, end, steepness }, duration }
    }

    pub fn constant(value: f64, duration: usize) -> Self {
        Self { form: ScheduleForm::Constant { value }, duration }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if self.duration == 0 {
            return Err(SolverError::InvalidParams("schedule duration must be at least 1".into()));
        }
        let finite = match self.form {
            ScheduleForm::TanhRamp { start, end, steepness } => start.is_finite() && end.is_finite() && steepness.is_finite(),
            ScheduleForm::Constant { value } => value.is_finite(),
        };
        if !finite {
            return Err(SolverError::InvalidParams("schedule values must be finite".into()));
        }
        Ok(())
    }

    /// Schedule value at iteration `t`, `0 <= t < duration`.
    pub fn value(&self, t: usize) -> Result<f64, SolverError> {
        if t >= self.duration {
            return Err(SolverError::InvalidParams(format!(
                "iteration {t} outside schedule of length {}",
                self.duration
            )));
        }
        Ok(self.value_unchecked(t))
    }

    pub(crate) fn value_unchecked(&self, t: usize) -> f64 {
        match self.form {
            ScheduleForm::Constant { value } => value,
            ScheduleForm::TanhRamp { start, end, steepness } => {
                // a single-step schedule sits at the start of the ramp
                let phase = if self.duration == 1 {
                    -1.0
                } else {
                    2.0 * t as f64 / (self.duration - 1) as f64 - 1.0
                };
                start + (end - start) * (1.0 + (steepness * phase).tanh()) / 2.0
            }
        }
    }
}
