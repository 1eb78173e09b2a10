//! Uplink cell-free massive MIMO with sparse large-scale fading decoding (LSFD).
//!
//! The crate simulates a network of distributed multi-antenna access points
//! (APs) serving single-antenna user equipments (UEs), estimates the
//! second-order statistics that drive LSFD at the central processing unit,
//! and designs LSFD vectors three ways:
//!
//! * optimal LSFD (every AP serves every UE),
//! * partial LSFD over a heuristic AP-UE association,
//! * sparse LSFD, where the association falls out of a complex
//!   sparse-group-lasso solved by proximal block-coordinate descent.
//!
//! Spectral and energy efficiency of the three designs are compared by the
//! [`harness`]. Runnable walkthroughs for each stage live in `examples/`.
//!
//! Indexing convention: UEs are `k`/`i` in `0..K`, APs are `l` in `0..L`,
//! and per-pair data is stored UE-major at `k * L + l`.

pub mod error;
pub mod harness;
pub mod linalg;
pub mod lsfd;
pub mod network;
pub mod pilots;
pub mod power_energy;
pub mod rng;
pub mod sglasso;
pub mod uplink;

pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector, C64};
