//! Gathering an even number of anonymous, oblivious robots on an odd ring
//! with only local weak multiplicity detection.
//!
//! * [`ring`]: configurations, views, symmetry and block geometry.
//! * [`protocol`]: classification into protocol states and the movement rules.
//! * [`sim`]: CORDA execution with instantaneous moves, schedulers and traces.
//! * [`checker`]: invariant checks over traces, enumeration and exploration.

pub mod checker;
pub mod error;
pub mod protocol;
pub mod ring;
pub mod sim;

pub use error::{ConfigError, ProtocolError, RingError, SimError, TraceError};
pub use protocol::{
    classify_protocol_state, enabled_moves, local_decide, phase_of, LocalDecision, MoveIntent,
    Phase, ProtocolState, Tag,
};
pub use ring::{
    Block, BlockDecomposition, Hole, RingConfig, Segment, SymmetryClass, SymmetryInfo, View,
};
