//! Exact finite-horizon models of slalom families, the Boolean algebras they
//! generate, finitely additive measures on those algebras, chain-condition
//! analyses and poset maps.
//!
//! Every verdict is exact rational arithmetic. Objects are observed below a
//! finite horizon; what happens above it is described by an explicit tail, and
//! questions the tail cannot settle are reported as undetermined.

pub mod chain;
pub mod construct;
pub mod error;
pub mod exec;
pub mod forcing;
pub mod gen;
pub mod ideal;
pub mod levelset;
pub mod measure;
pub mod omega;
pub mod rational;
pub mod slalom;

pub use error::{Error, Result};
pub use exec::Exec;
pub use levelset::LevelSet;
pub use rational::Rational;
pub use slalom::{PathReal, Slalom, Tail, TailRule};
