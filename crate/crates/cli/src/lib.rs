//! Session service shared by the `sketchmesh` binary and its tests.

pub mod serve;
