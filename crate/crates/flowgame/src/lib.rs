//! Simulator and verification library for the Mathematician-vs-Adversary
//! weight/flow game on binary trees: an exact-rational referee, computable
//! winning strategies with rational certificates, an adversary suite to
//! falsify them, and the monotone marked-leaf machinery that turns winning
//! branches into enumerable sets.

pub mod cert;
pub mod game;
pub mod harness;
pub mod measures;
pub mod monotone;
pub mod rat;
pub mod strategy;
pub mod tree;
