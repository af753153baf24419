use serde::{Deserialize, Serialize};

/// Tool position in the world frame plus the current lateral offset of the
/// line. Progress is the tool's x coordinate.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TrackState {
    pub tool: [f64; 2],
    pub offset: f64,
}

impl TrackState {
    /// Tool at the given progress and lateral deviation from an undisplaced line.
    pub fn at(progress: f64, deviation: f64) -> Self {
        TrackState {
            tool: [progress, deviation],
            offset: 0.0,
        }
    }

    pub fn progress(&self) -> f64 {
        self.tool[0]
    }

    pub fn deviation(&self) -> f64 {
        self.tool[1] - self.offset
    }

    pub fn to_vector(&self) -> Vec<f64> {
        vec![self.progress(), self.deviation()]
    }

    pub(super) fn step(&self, u: [f64; 2], drift: f64) -> Self {
        TrackState {
            tool: [self.tool[0] + u[0], self.tool[1] + u[1]],
            offset: self.offset + drift,
        }
    }
}
