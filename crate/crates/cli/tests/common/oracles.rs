// Shares the core crate's reference implementations.
#[path = "../../../core/tests/common/mod.rs"]
mod shared;

#[allow(unused_imports)]
pub use shared::*;
