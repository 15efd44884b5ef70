//! Symbolic supervisory controller synthesis for extended finite automata.
//!
//! The pipeline reads a model of plants and requirements ([`parser`]),
//! rewrites requirement automata into plants and flattens the composition
//! ([`transform`]), picks a BDD variable order ([`order`]), builds a symbolic
//! automaton ([`encode`]), computes the maximally permissive supervisor
//! ([`synthesis`]) and writes it back as a model ([`emit`]). The [`oracle`]
//! module is an explicit-state reference used for testing.

pub mod bdd;
pub mod model;
pub mod parser;
pub mod transform;
pub mod order;
pub mod config;
pub mod encode;
pub mod synthesis;
pub mod oracle;
pub mod emit;
pub mod bench;
