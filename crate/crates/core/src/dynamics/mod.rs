//! Solutions of dynamical systems relative to the curve object `C = ℝ`.

pub mod expm;
pub mod flow;
pub mod higher;
pub mod integrator;

pub use expm::expm;
pub use flow::{
    commuting_flows_check, commuting_flows_check_with, eta, flow_laws, flow_of, generator,
    integrate, invariance_check, linear_flow, reverse, sigma_flow, sum_flow, sum_of_flows,
    CommutingReport, CurveObject, DynamicalSystem, Flow, Provenance,
};
pub use higher::{
    acceleration_residual, augment_time, geodesic_field, geodesic_flow, solve_nth_order,
    Connection, HigherOrderSystem,
};
pub use integrator::{integrate_field, IntegratorConfig};
