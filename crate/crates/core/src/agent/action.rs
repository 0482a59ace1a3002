use std::fmt;

use serde::{Deserialize, Serialize};

/// Control actions, in ordinal order. The ordinal is the Q-table column.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Action {
    NoOp,
    /// Hand the UE over to the r-th nearest station other than its current one.
    Handover(u8),
    PowerUp,
    PowerDown,
}

impl Action {
    pub const COUNT: usize = 6;
    pub const MAX_HANDOVER_RANK: u8 = 3;

    pub const ALL: [Action; Action::COUNT] = [
        Action::NoOp,
        Action::Handover(1),
        Action::Handover(2),
        Action::Handover(3),
        Action::PowerUp,
        Action::PowerDown,
    ];

    pub fn ordinal(self) -> usize {
        match self {
            Action::NoOp => 0,
            Action::Handover(r) => usize::from(r),
            Action::PowerUp => 4,
            Action::PowerDown => 5,
        }
    }

    pub fn from_ordinal(ordinal: usize) -> Option<Action> {
        Action::ALL.get(ordinal).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            Action::NoOp => "noop",
            Action::Handover(1) => "handover-1",
            Action::Handover(2) => "handover-2",
            Action::Handover(3) => "handover-3",
            Action::Handover(_) => "handover-invalid",
            Action::PowerUp => "power-up",
            Action::PowerDown => "power-down",
        }
    }

    pub fn is_valid(self) -> bool {
        !matches!(self, Action::Handover(r) if r == 0 || r > Action::MAX_HANDOVER_RANK)
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}
