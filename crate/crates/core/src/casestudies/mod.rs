//! Worked studies built on the core modules.

pub mod debranges;
pub mod obstruction;
pub mod propex;
pub mod qpoly;
pub mod t2chain;

pub use debranges::{debranges_ratio, DebrangesReport, DebrangesRow};
pub use obstruction::{obstruction_functional, square_lattice, ObstructionReport, ObstructionRow};
pub use propex::{admissible_slopes, build_counterexample_moments, convexity_screen, gaussian_log_moments, CounterexampleMoments, DEFECT_FLOOR, ScreenReport, Verdict};
pub use qpoly::{build_q, QReport};
pub use t2chain::{t2_sections, verify_t2_chain, T2ChainReport};
