//! Numerical engine for a two-oscillator quantum thermal machine driven by a
//! periodically modulated hot bath and damped by a shared static bath.

pub mod entangle;
pub mod integrate;
pub mod model;
pub mod pareto;
pub mod response;
pub mod thermo;
