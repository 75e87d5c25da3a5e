//! Experiment driver for the spherical Minority Game: sweeps, phase
//! diagrams and engine comparisons written as CSV or JSON.

pub mod app;
pub mod config;
pub mod engines;
pub mod report;
pub mod row;
pub mod sweep;

pub use row::{BoundaryRow, Format, ResultRow};
pub use sweep::{AxisSpec, Engine, EngineSet, Point, SeedList, SweepSpec};
