//! Append-only event records emitted by the monitoring state machine.
//!
//! One self-describing record per event; timestamps are sim seconds rounded
//! to the millisecond, so serialized logs are stable and human-readable.

use serde::{Deserialize, Serialize};

use crate::monitor::Phase;
use crate::perception::Source;

/// Round a sim time to the millisecond used in logs.
pub fn round_ms(t: f64) -> f64 {
    (t * 1000.0).round() / 1000.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event")]
pub enum Event {
    /// A pair stayed closer than the distance threshold for the full breach
    /// duration. `t` is the confirmation instant, `t_start + duration`.
    BreachConfirmed {
        t: f64,
        id_a: u32,
        id_b: u32,
        source: Source,
        t_start: f64,
    },
    /// A new connected component appeared in the active breach graph.
    GroupFormed { t: f64, members: Vec<u32> },
    /// Every recorded pairwise distance in the group stayed at or above the
    /// threshold for the compliance duration.
    GroupResolved { t: f64, members: Vec<u32> },
    LockChanged {
        t: f64,
        ped_id: u32,
        prev: Option<u32>,
    },
    /// The locked pedestrian was invisible to every camera for longer than
    /// the lock-lost timeout.
    LockLost { t: f64, ped_id: u32 },
    /// The robot reached stand-off distance of a visible non-compliant group.
    AlertIssued { t: f64, members: Vec<u32> },
    PhaseChanged { t: f64, phase: Phase },
    /// The live measurement source steering the pursuit changed.
    GoalSourceChanged { t: f64, source: Source },
}

impl Event {
    pub fn t(&self) -> f64 {
        match self {
            Event::BreachConfirmed { t, .. }
            | Event::GroupFormed { t, .. }
            | Event::GroupResolved { t, .. }
            | Event::LockChanged { t, .. }
            | Event::LockLost { t, .. }
            | Event::AlertIssued { t, .. }
            | Event::PhaseChanged { t, .. }
            | Event::GoalSourceChanged { t, .. } => *t,
        }
    }
}
