//! Post-detector pipeline for aerial optical/thermal human search.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod anchors;
pub mod bbox;
pub mod evaluation;
pub mod focal;
pub mod fusion;
pub mod geometry;
pub mod io;
pub mod particle_filter;
pub mod pipeline;
pub mod reid;
pub mod sim;
pub mod tracking;
