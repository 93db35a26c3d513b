//! Computation of the K-theoretic invariants of boundary algebras of
//! acylindrical uniform tree lattices.
//!
//! Given a finite description of a lattice action on a tree (a free product
//! of finite groups or an amalgam of finite groups over a malnormal
//! subgroup), this crate
//!
//! 1. builds the Bass-Serre tree locally, verifies the method hypotheses and
//!    determines the acylindricity constant `k` ([`tree`]),
//! 2. enumerates the orbits of directed segments of length `k+1` to obtain a
//!    finite alphabet and {0,1} transition matrix ([`alphabet`]),
//! 3. checks irreducibility and aperiodicity of the resulting subshift and
//!    counts its words ([`sft`]),
//! 4. computes the Bowen-Franks group `Z^A / (I - M)`-relations via exact
//!    Smith normal form, the class of the identity, and a Cuntz-algebra
//!    classification label ([`ktheory`]),
//! 5. parses the input DSL ([`parse`]) and assembles everything into a
//!    deterministic report ([`report`]).

pub mod alphabet;
pub mod group;
pub mod ktheory;
pub mod parse;
pub mod report;
pub mod sft;
pub mod tree;
