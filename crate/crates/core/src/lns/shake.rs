//! Per-customer disruption intensity for string removals.

use serde::{Deserialize, Serialize};

use crate::error::InvalidArgument;
use crate::instance::{Cost, Instance, NodeId};
use crate::solution::Solution;

/// Per-customer removal budget `omega_i`, clamped to `[min, max]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShakeState {
    omega: Vec<u32>,
    min: u32,
    max: u32,
}

impl ShakeState {
    pub fn new(num_nodes: usize, initial: u32, min: u32, max: u32) -> Result<Self, InvalidArgument> {
        if min == 0 || min > max || initial < min || initial > max {
            return Err(InvalidArgument(format!(
                "shake bounds need 1 <= min <= initial <= max, got {min} <= {initial} <= {max}"
            )));
        }
        Ok(Self {
            omega: vec![initial; num_nodes],
            min,
            max,
        })
    }

    /// Bounds derived from the starting solution: initial
    /// `max(1, ceil(0.05 * average route length))`, minimum 1, maximum the
    /// longest route.
    pub fn for_solution(inst: &Instance, sol: &Solution) -> Self {
        let routes: Vec<usize> = sol.routes().iter().map(|r| r.len()).filter(|&l| l > 0).collect();
        let avg = if routes.is_empty() {
            0.0
        } else {
            routes.iter().sum::<usize>() as f64 / routes.len() as f64
        };
        let initial = ((0.05 * avg).ceil() as u32).max(1);
        let longest = routes.iter().copied().max().unwrap_or(1) as u32;
        let max = longest.max(initial);
        Self::new(inst.num_nodes(), initial, 1, max).expect("derived bounds are ordered")
    }

    #[inline]
    pub fn omega(&self, c: NodeId) -> u32 {
        self.omega[c]
    }

    pub fn min(&self) -> u32 {
        self.min
    }

    pub fn max(&self) -> u32 {
        self.max
    }

    pub fn set(&mut self, c: NodeId, value: u32) {
        self.omega[c] = value.clamp(self.min, self.max);
    }
}

/// Result of one destroy-repair step relative to the solution it started from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Outcome {
    Improved,
    NearIdentical,
    Worse,
}

impl Outcome {
    pub fn from_delta(delta: Cost) -> Self {
        match delta {
            d if d < 0 => Outcome::Improved,
            0 => Outcome::NearIdentical,
            _ => Outcome::Worse,
        }
    }
}

/// Worse outcomes raise the intensity of the touched customers, identical
/// ones lower it, improvements leave it alone.
pub fn update_omega(shake: &mut ShakeState, touched: &[NodeId], outcome: Outcome) {
    let step: i64 = match outcome {
        Outcome::Improved => return,
        Outcome::NearIdentical => -1,
        Outcome::Worse => 1,
    };
    for &c in touched {
        let v = (shake.omega[c] as i64 + step).clamp(shake.min as i64, shake.max as i64);
        shake.omega[c] = v as u32;
    }
}
