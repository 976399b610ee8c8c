//! The eikonal `S(C0 -> C1)` as the stationary value of the action on a
//! strip between two curves, its variational derivatives with respect to
//! `C1`, and the boundary momenta identities.

mod momenta;
mod region;
mod solver;

pub use momenta::{
    constraint_residual, hj_residual_generic, hj_residual_scalar_field, momenta_from_slopes, MomentaField,
};
pub use region::{SideData, StripRegion, EPS_WIDTH};
pub use solver::{
    boundary_variation, eikonal_gradient_fd, eikonal_gradient_fd_checked, eikonal_value, fd_momenta, solve_extremal,
    Component, ExtremalField, FdEstimate, SolverOptions,
};
