//! Generic numerical building blocks: adaptive quadrature, bracketed root
//! finding and adaptive Runge–Kutta integration with events.

pub mod ivp;
pub mod quadrature;
pub mod roots;

pub use ivp::{
    solve_ivp, Direction, EventRecord, EventSpec, IvpError, IvpSpec, IvpStats, IvpStatus,
    Trajectory,
};
pub use quadrature::{integrate_adaptive, QuadError, QuadratureSpec};
pub use roots::{find_root_bracketed, RootError};
