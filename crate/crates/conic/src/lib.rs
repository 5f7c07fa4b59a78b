//! Self-contained conic optimization engine: a homogeneous primal-dual
//! interior-point method for problems with linear rows and second-order
//! cones, and a best-bound branch and bound for binary variables.

mod bnb;
mod cones;
mod error;
mod ipm;
mod linalg;
mod model;

pub use bnb::{is_integral, solve_mip, Incumbent, MipResult, MipSettings, MipStatus};
pub use error::{ModelError, SolveError};
pub use ipm::{
    solve_continuous, solve_with_bounds, Certificate, IpmSettings, KktResiduals, SolveResult, SolveStatus,
};
pub use model::{ConicModel, LinExpr, Row, Sense, SocBlock, VarId, VarKind, Variable};
