//! Numerics for antagonistic actuators with a scalar task.
//!
//! - [`aero`]: blade-element thrust and the affine-inflow rotor model.
//! - [`antagonistic`]: the generic two-channel actuator, constant-output
//!   fibers and co-contraction sweeps.
//! - [`vsa`]: tendon variable-stiffness actuator.
//! - [`dual_rotor`]: antagonistic rotor pair with variable aerodynamic
//!   damping, and (force, damping) allocation.
//! - [`impedance`]: translational dynamics of the rotor-driven body.
//! - [`config`], [`scenarios`], [`verify`]: the `vada` command line.

pub mod aero;
pub mod antagonistic;
pub mod config;
pub mod dual_rotor;
pub mod impedance;
pub mod scenarios;
pub mod verify;
pub mod vsa;

pub use aero::{AffineThrustModel, RotorGeometry};
pub use antagonistic::{AntagonisticActuator, ChannelLaw, FiberPath, OpenInterval};
pub use dual_rotor::{AllocationResult, DualRotor, TrimPoint};
pub use impedance::{BodyConfig, InputSchedule, Trajectory};
pub use vsa::{TendonLaw, VsaConfig};
