use std::fmt;

use serde::{Deserialize, Serialize};

use super::{ReconError, Verification};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "stage", rename_all = "snake_case")]
pub enum Stage {
    Pending,
    Filtered { threshold: f64 },
    SparseDone,
    DenseDone,
    Accepted,
    Refiltered { threshold: f64 },
    Rejected,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Stage::Pending => write!(f, "pending"),
            Stage::Filtered { threshold } => write!(f, "filtered@{threshold:.2}"),
            Stage::SparseDone => write!(f, "sparse_done"),
            Stage::DenseDone => write!(f, "dense_done"),
            Stage::Accepted => write!(f, "accepted"),
            Stage::Refiltered { threshold } => write!(f, "refiltered@{threshold:.2}"),
            Stage::Rejected => write!(f, "rejected"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub attempt: u32,
    #[serde(flatten)]
    pub stage: Stage,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub registration_rate: Option<f64>,
}

/// Progress of one video through filter, sparse SfM, dense registration and
/// verification. At most two attempts are made; the second one filters with
/// the stricter restart threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineState {
    pub stage: Stage,
    pub attempt: u32,
    /// Rate measured by the most recent verification.
    pub registration_rate: Option<f64>,
    pub history: Vec<StageRecord>,
}

impl Default for PipelineState {
    fn default() -> Self {
        Self::new()
    }
}

impl PipelineState {
    pub fn new() -> Self {
        PipelineState {
            stage: Stage::Pending,
            attempt: 0,
            registration_rate: None,
            history: Vec::new(),
        }
    }

    pub fn is_terminal(&self) -> bool {
        matches!(self.stage, Stage::Accepted | Stage::Rejected)
    }

    fn illegal(&self, action: &'static str) -> ReconError {
        ReconError::IllegalTransition {
            from: self.stage.to_string(),
            action,
        }
    }

    fn enter(&mut self, stage: Stage) {
        self.stage = stage;
        self.history.push(StageRecord {
            attempt: self.attempt,
            stage,
            registration_rate: None,
        });
    }

    /// Pending -> filtered, starting attempt 1.
    pub fn filtered(&mut self, threshold: f64) -> Result<(), ReconError> {
        if self.stage != Stage::Pending {
            return Err(self.illegal("filter"));
        }
        self.attempt = 1;
        self.enter(Stage::Filtered { threshold });
        Ok(())
    }

    pub fn sparse_done(&mut self) -> Result<(), ReconError> {
        match self.stage {
            Stage::Filtered { .. } | Stage::Refiltered { .. } => {
                self.enter(Stage::SparseDone);
                Ok(())
            }
            _ => Err(self.illegal("sparse reconstruction")),
        }
    }

    pub fn dense_done(&mut self) -> Result<(), ReconError> {
        if self.stage != Stage::SparseDone {
            return Err(self.illegal("dense registration"));
        }
        self.enter(Stage::DenseDone);
        Ok(())
    }

    /// Applies a verification outcome. An accepted result is final. A
    /// rejection on attempt 1 moves to attempt 2, refiltered at
    /// `restart_threshold`; a rejection on attempt 2 is final.
    pub fn verified(&mut self, outcome: &Verification, restart_threshold: f64) -> Result<(), ReconError> {
        if self.stage != Stage::DenseDone {
            return Err(self.illegal("verify"));
        }
        self.registration_rate = Some(outcome.registration_rate);
        if let Some(last) = self.history.last_mut() {
            last.registration_rate = Some(outcome.registration_rate);
        }
        if outcome.accept {
            self.enter(Stage::Accepted);
        } else if self.attempt == 1 {
            self.attempt = 2;
            self.enter(Stage::Refiltered {
                threshold: restart_threshold,
            });
        } else {
            self.enter(Stage::Rejected);
        }
        Ok(())
    }

    /// Thresholds of every filtering pass, in order.
    pub fn thresholds(&self) -> Vec<f64> {
        self.history
            .iter()
            .filter_map(|r| match r.stage {
                Stage::Filtered { threshold } | Stage::Refiltered { threshold } => Some(threshold),
                _ => None,
            })
            .collect()
    }
}
