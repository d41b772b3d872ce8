//! Simulation lab for invariant processes and monotone couplings on the
//! 3-regular tree and its cycle products.
//!
//! The library builds finite balls of the tree T3 (the Cayley graph of the
//! free product of three order-2 generators), samples coupled label
//! processes on them from named deterministic streams, and audits the
//! couplings three ways: pointwise order, exact marginal laws, and the
//! mass-transport balance that invariance forces. A counter-based RNG keyed
//! by (seed, replicate, stream) makes every number reproducible across
//! worker counts.
//!
//! The headline experiment couples an away-edge label pair against the full
//! incident label set; the coupling is monotone by construction, yet the
//! distinctness-gated transport sends strictly more mass out of the origin
//! than comes back, which no invariant monotone coupling could do.

pub mod config;
pub mod coupling;
pub mod error;
pub mod graph;
pub mod invariance;
pub mod oracle;
pub mod sampler;
pub mod stats;
pub mod transport;

pub use config::{BitConfig, LabelSet, ProductBitConfig, SetConfig};
pub use coupling::{
    check_marginal, check_monotone, CouplingKind, CouplingOutput, CouplingPlan, CouplingSample,
    MonotoneReport, Side,
};
pub use error::{Error, Result};
pub use graph::{End, Gen, ProductBall, Shift, TreeBall, Word};
pub use invariance::{check_invariance_window, WindowProcess};
pub use stats::{StreamKey, TestResult};
pub use transport::{
    audit_origin, end_orientation, mtp_balance, BalanceProcess, OrientationReport,
    TransportReport, TransportRule,
};
