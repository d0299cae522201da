//! Optimal power flow for hybrid AC/DC grids.
//!
//! The crate models networks with AC and DC subgrids coupled by lossy
//! converters, assembles the unified OPF as a quadratically-constrained
//! problem in the bus voltage vector, relaxes it to a second-order cone or
//! semidefinite program, solves the relaxation with the companion conic
//! interior-point solver, and recovers physical voltages, inexactness
//! diagnostics, and locational marginal prices.
//!
//! Modules follow the data flow:
//!
//! * [`grid`] — network model and validation
//! * [`matrices`] — admittance and constraint matrix construction
//! * [`builder`] — the unified OPF problem (balance, limits, costs)
//! * [`relax`] — SOCR/SDR conic encodings
//! * [`recover`] — voltage recovery, error measures, LMP extraction
//! * [`pipeline`] — one-call validate/solve/recover/price runs
//! * [`io`] — JSON grid documents and MATPOWER case import
//! * [`cases`] — bundled study cases with hand-checkable physics

pub mod builder;
pub mod cases;
pub mod grid;
pub mod io;
pub mod matrices;
pub mod pipeline;
pub mod recover;
pub mod relax;

pub use grid::{Branch, Bus, BusId, BusKind, Converter, Grid, Injector, ValidationReport};
