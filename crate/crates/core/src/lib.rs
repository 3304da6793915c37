//! Reactive test synthesis for labeled transition systems.
//!
//! A system specification and a test specification, both in a reach-avoid
//! temporal fragment, are compiled to automata and combined with the
//! transition system into product graphs. A mixed-integer flow program then
//! selects edges to cut so that every run satisfying the system
//! specification also satisfies the test specification, while leaving the
//! system as much freedom as possible. At run time the cuts become blocked
//! transitions that are placed and lifted as the test progresses.

pub mod engine;
pub mod flow;
pub mod ltl;
pub mod product;
pub mod scenario_file;
pub mod scenarios;
