//! Service restoration planning for distribution networks after a permanent
//! fault: network model, conic formulations, decomposition and validation.

pub mod formulation;
pub mod netmodel;
pub mod solve;
pub mod mcb;
pub mod validation;
