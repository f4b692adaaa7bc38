use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::Field;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TimeGridError {
    #[error("time horizon must be finite and positive (got {0})")]
    Horizon(f64),
    #[error("time grid needs at least 2 intervals (got {0})")]
    Intervals(usize),
    #[error("trajectory needs {expected} slices, got {got}")]
    SliceCount { expected: usize, got: usize },
    #[error("trajectory slices live on different grids")]
    Mismatch,
}

/// Uniform partition `t_m = m·T/nt`, `m = 0..=nt`, of `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    horizon: f64,
    intervals: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, intervals: usize) -> Result<Self, TimeGridError> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(TimeGridError::Horizon(horizon));
        }
        if intervals < 2 {
            return Err(TimeGridError::Intervals(intervals));
        }
        Ok(Self { horizon, intervals })
    }

    /// Grid with step close to (never above) `dt`.
    pub fn with_step(horizon: f64, dt: f64) -> Result<Self, TimeGridError> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(TimeGridError::Horizon(dt));
        }
        let n = ((horizon / dt) - 1e-9).ceil().max(2.0) as usize;
        Self::new(horizon, n)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.intervals as f64
    }

    pub fn time(&self, m: usize) -> f64 {
        if m == self.intervals {
            self.horizon
        } else {
            m as f64 * self.dt()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.intervals).map(|m| self.time(m)).collect()
    }
}

/// Solution slices `u(t_m)` on a [`TimeGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    timegrid: TimeGrid,
    slices: Vec<Field>,
}

impl Trajectory {
    pub fn new(timegrid: TimeGrid, slices: Vec<Field>) -> Result<Self, TimeGridError> {
        let expected = timegrid.intervals() + 1;
        if slices.len() != expected {
            return Err(TimeGridError::SliceCount {
                expected,
                got: slices.len(),
            });
        }
        let grid = slices[0].grid();
        if slices.iter().any(|s| s.grid() != grid) {
            return Err(TimeGridError::Mismatch);
        }
        Ok(Self { timegrid, slices })
    }

    pub fn timegrid(&self) -> &TimeGrid {
        &self.timegrid
    }

    pub fn slices(&self) -> &[Field] {
        &self.slices
    }

    pub fn initial(&self) -> &Field {
        &self.slices[0]
    }

    pub fn last(&self) -> &Field {
        &self.slices[self.slices.len() - 1]
    }

    /// Slice-wise difference `self - other`.
    pub fn difference(&self, other: &Trajectory) -> Result<Trajectory, TimeGridError> {
        if self.timegrid != other.timegrid {
            return Err(TimeGridError::Mismatch);
        }
        let slices = self
            .slices
            .iter()
            .zip(&other.slices)
            .map(|(a, b)| a.sub(b).map_err(|_| TimeGridError::Mismatch))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Trajectory {
            timegrid: self.timegrid,
            slices,
        })
    }

    /// Every `stride`-th slice; `stride` must divide the interval count.
    pub fn subsample(&self, stride: usize) -> Result<Trajectory, TimeGridError> {
        let n = self.timegrid.intervals();
        if stride == 0 || !n.is_multiple_of(stride) {
            return Err(TimeGridError::Intervals(stride));
        }
        let tg = TimeGrid::new(self.timegrid.horizon(), n / stride)?;
        let slices = self.slices.iter().step_by(stride).cloned().collect();
        Trajectory::new(tg, slices)
    }
}
