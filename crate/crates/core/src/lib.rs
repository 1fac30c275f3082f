//! Kinematics, statics and design tools for a twisted-strip gripper drive
//! coupled to a two-link finger.

pub mod analysis;
pub mod config;
pub mod error;
pub mod export;
pub mod friction;
pub mod linkage;
pub mod sim;
pub mod sweep;
pub mod tum;

pub use config::MechanismConfig;
pub use error::{MechError, MechResult};
pub use friction::FrictionGenerator;
pub use linkage::{Branch, LinkageSpec, LinkageState};
pub use sim::{Scenario, SimTrace};
pub use sweep::{DesignRanges, DesignReport};
pub use tum::TumSpec;
