//! Decision flags and the mode-transition state machine.

mod flags;
mod fsm;

pub use flags::{update_flags, FlagInputs, FlagTracker, Flags, Level, Mode, Thresholds};
pub use fsm::{
    fsm_check, next_mode, write_transition_log, FsmCase, FsmReport, Supervisor, SupervisorEvent,
    TableRow, Transition, CHATTER_LIMIT, CHATTER_WINDOW, TABLE,
};
