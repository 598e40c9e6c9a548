//! Jacobi-bound combinatorics, detection of ō-systems and their regularity,
//! and flat trajectory planning for a fixed-wing aircraft model.

pub mod aircraft;
pub mod cli;
pub mod jet;
pub mod linalg;
pub mod matching;
pub mod oreg;
pub mod osystem;
pub mod planner;
pub mod real;
pub mod report;
pub mod tropical;
