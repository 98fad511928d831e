//! Key expansion over a public channel protected by physical phase noise.
//!
//! Two endpoints sharing a short secret `K0` repeatedly exchange fresh random
//! bits inscribed on key-selected phase bases and masked by Gaussian phase
//! noise. The legitimate receiver knows the basis and makes a binary decision;
//! an eavesdropper faces the whole noisy wheel. Survivors of block-digest
//! reconciliation and Toeplitz privacy amplification form a one-time-pad
//! keystream.
//!
//! Geometry, noise and posterior math are generic over [`Scalar`] (`f32` or
//! `f64`); the aliases below fix the protocol's `f64` instantiation.

pub mod adversary;
pub mod bits;
pub mod constellation;
mod error;
pub mod keyfile;
pub mod noise;
pub mod protocol;
pub mod scalar;
pub mod wire;

pub use constellation::{basis_index, BasisIndex};
pub use error::{Error, Result};
pub use noise::EntropySource;
pub use protocol::{
    run_session, DistillationLedger, KeyBuffer, PhaseSignal, Role, SessionConfig, SessionReport,
    SessionState,
};
pub use scalar::Scalar;

pub type Phase = constellation::Phase<f64>;
pub type Phase32 = constellation::Phase<f32>;
pub type WheelConfig = constellation::WheelConfig<f64>;
pub type WheelConfig32 = constellation::WheelConfig<f32>;
pub type NoiseModel = noise::NoiseModel<f64>;
pub type NoiseModel32 = noise::NoiseModel<f32>;
