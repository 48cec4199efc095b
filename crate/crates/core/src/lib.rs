//! Construction and exhaustive verification of relative difference sets,
//! partial difference sets, Schur rings and closed linked systems over
//! explicit finite groups.

#![allow(clippy::needless_range_loop, clippy::type_complexity)]

pub mod ff;
pub mod groups;
pub mod groupring;
pub mod schur;
pub mod rds;
pub mod linked;
pub mod constructions;
pub mod cli;
