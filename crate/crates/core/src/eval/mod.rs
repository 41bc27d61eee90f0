//! Evaluation protocols: stratified cross-validation, player-focused
//! leave-one-out, sliding-segment scans and per-note statistics.

pub mod cv;
pub mod folds;
pub mod notes;
pub mod player;
pub mod segments;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use cv::{cross_validate, cross_validate_profiles, CvReport, VocabMode};
pub use folds::{stratified_kfold, FoldPlan};
pub use notes::{griff_distribution, note_griffs, note_stats, GriffDistribution, NoteStats};
pub use player::{player_focused, PlayerReport, PlayerRun};
pub use segments::{histogram, segment_scan, Histogram, SegmentResult, SegmentScan, SegmentSpec, HISTOGRAM_BINS};

/// Which performances form one training/evaluation pool.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scope {
    /// Each score on its own.
    #[default]
    PerScore,
    /// All scores pooled.
    WholeDataset,
}

impl fmt::Display for Scope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scope::PerScore => "per-score",
            Scope::WholeDataset => "whole-dataset",
        })
    }
}

impl FromStr for Scope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "per-score" => Ok(Scope::PerScore),
            "whole-dataset" => Ok(Scope::WholeDataset),
            _ => Err(Error::arg(format!("unknown scope {s:?}"))),
        }
    }
}
