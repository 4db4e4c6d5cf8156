//! Incidence statistics for plane curves over finite fields.
//!
//! Measures how often a random line (or a random curve of degree `e`) meets a
//! plane curve in exactly `k` rational points, and compares the measurements
//! with the rencontres and cycle-type predictions.

pub mod cli;
pub mod curve;
pub mod ff;
pub mod incidence;
pub mod theory;
pub mod upoly;
pub mod veronese;
