//! Library surface of the affectstream CLI: the four operations (analyze,
//! evaluate, simulate, bench) plus manifest handling, reused by the binary
//! and by the acceptance suite.

pub mod analyze;
pub mod bench;
pub mod error;
pub mod evaluate;
pub mod manifest;
pub mod simulate;
pub mod util;
