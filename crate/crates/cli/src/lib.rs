//! Library surface of the mmcap binary: random instance generators, report
//! plumbing, and the verification suites. The binary is a thin argument
//! parser over these; integration tests call them directly.

pub mod gen;
pub mod io;
pub mod suites;
