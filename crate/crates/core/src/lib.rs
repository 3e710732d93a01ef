//! Momentum-space spectral toolkit for the partial-wave channels of the
//! Brown–Ravenhall operator.
//!
//! Natural units `m = c = ħ = 1` are used internally; energies are
//! reported in units of `mc²`.

pub mod channel_operator;
pub mod cli;
pub mod error;
pub mod kinematics;
pub mod legendre;
pub mod quadrature;
pub mod spectral;
pub mod virial;

pub use channel_operator::{Channel, ChannelMatrix, MomentumGrid, Spin};
pub use error::{Error, Result};
pub use kinematics::{PhysicalParams, FINE_STRUCTURE};
pub use legendre::{LegendreOrder, L_MAX};
pub use quadrature::QuadratureLevel;
