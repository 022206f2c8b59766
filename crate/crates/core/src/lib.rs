//! Differential fault analysis of AES hardware engines.
//!
//! The crate covers the whole attack chain: a traceable AES core, a
//! simulated faulty engine, fault localization, the Piret/Dusart DFA
//! solver, campaign-level search strategies and the brute-force recovery
//! of outputs hidden behind master key slots.

pub mod aes;
pub mod gf;
pub mod fault;
pub mod record;
pub mod localize;
pub mod dfa;
pub mod attack;
pub mod buster;
pub mod profile;
