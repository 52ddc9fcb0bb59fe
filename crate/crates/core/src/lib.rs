//! Galois-module structure of p-th power classes `K^×/K^×p` for cyclic
//! extensions of degree p^n.

pub mod fp_linalg;
pub mod gmod;
pub mod datum;
pub mod synth;
pub mod decompose;
pub mod local_fields;
pub mod lemmas;
pub mod selftest;
