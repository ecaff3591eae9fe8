//! Convex QP solving and branch-and-bound over binary variables.

mod bnb;
mod qp;
mod solve;

pub use bnb::{solve_miqp, MipNode, MiqpSettings, MiqpSolution, MiqpStatus};
pub use qp::{ProgramBuilder, QuadraticProgram, Row};
pub use solve::{kkt_residuals, solve_qp, KktResiduals, QpSettings, QpSolution, QpStatus};
