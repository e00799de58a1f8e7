//! Training-time data collection strategies.
//!
//! After a beam is expanded and its neighbors are scored and ranked,
//! the strategy decides which beam the trajectory visits next. Every
//! rule reacts to whether the score-induced successor `b̂` (the top-k
//! neighbors by score) raises the beam cost — i.e. drops every
//! lowest-cost hypothesis.

use crate::beam::{Beam, NeighborSet};

/// The strategy names accepted in config files.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Strategy {
    Stop,
    Reset,
    ResetMultiple,
    Continue,
    Oracle,
}

impl Strategy {
    pub const ALL: [Strategy; 5] = [
        Strategy::Stop,
        Strategy::Reset,
        Strategy::ResetMultiple,
        Strategy::Continue,
        Strategy::Oracle,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Stop => "stop",
            Strategy::Reset => "reset",
            Strategy::ResetMultiple => "reset_multiple",
            Strategy::Continue => "continue",
            Strategy::Oracle => "oracle",
        }
    }

    pub fn parse(s: &str) -> Option<Strategy> {
        Self::ALL.iter().copied().find(|k| k.as_str() == s)
    }
}

impl std::fmt::Display for Strategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Result of one collection step.
#[derive(Debug)]
pub struct StepOutcome {
    /// The beam the trajectory moves to; `None` exactly when `halt`.
    pub next_beam: Option<Beam>,
    /// Indices into the neighbor set of the chosen members, aligned
    /// with `next_beam`'s member order.
    pub chosen: Vec<usize>,
    /// True only under `Stop` with a cost increase.
    pub halt: bool,
    /// Whether the score-induced successor raised the beam cost.
    pub cost_increased: bool,
}

/// Applies the strategy to a ranked neighbor set.
pub fn next_beam(strategy: Strategy, ns: &NeighborSet, k: usize) -> StepOutcome {
    let n = ns.len();
    let take = k.min(n);
    let sigma_hat = ns.sigma_hat();
    let sigma_star = ns.sigma_star();

    // The minimum neighbor cost equals the current beam cost: every
    // member's oracle child preserves its cost, so expansion never
    // loses the floor.
    let floor = ns.costs()[sigma_star[0]];
    debug_assert_eq!(floor, ns.parent_cost());
    let shat_cost = sigma_hat[..take]
        .iter()
        .map(|&i| ns.costs()[i])
        .min()
        .expect("nonempty successor");
    let cost_increased = shat_cost > floor;

    let chosen: Vec<usize> = match strategy {
        Strategy::Continue => sigma_hat[..take].to_vec(),
        Strategy::Stop => {
            if cost_increased {
                return StepOutcome {
                    next_beam: None,
                    chosen: Vec::new(),
                    halt: true,
                    cost_increased,
                };
            }
            sigma_hat[..take].to_vec()
        }
        Strategy::Reset => {
            if cost_increased {
                vec![sigma_star[0]]
            } else {
                sigma_hat[..take].to_vec()
            }
        }
        Strategy::ResetMultiple => {
            if cost_increased {
                reset_multiple_members(sigma_star[0], sigma_hat, k)
            } else {
                sigma_hat[..take].to_vec()
            }
        }
        Strategy::Oracle => sigma_star[..take].to_vec(),
    };

    StepOutcome {
        next_beam: Some(ns.beam_from_indices(&chosen, k)),
        chosen,
        halt: false,
        cost_increased,
    }
}

/// Member list for a reset-multiple step: the lowest-cost neighbor
/// followed by the top `k - 1` scorers, duplicates removed preserving
/// order.
fn reset_multiple_members(lowest_cost: usize, sigma_hat: &[usize], k: usize) -> Vec<usize> {
    let mut picked = vec![lowest_cost];
    for &i in sigma_hat.iter().take(k.saturating_sub(1).min(sigma_hat.len())) {
        if !picked.contains(&i) {
            picked.push(i);
        }
    }
    picked
}
