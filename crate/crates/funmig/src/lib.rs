//! Text format, CSV bundles and command line for the `funmig-core` engine.
//!
//! [`dsl`] turns `.fql` files into engine objects, [`io`] reads and writes
//! instances as CSV bundles and locates the shipped fixtures, and [`cli`]
//! wires both to the migrations.

pub mod cli;
pub mod dsl;
pub mod io;

pub use funmig_core as core;
