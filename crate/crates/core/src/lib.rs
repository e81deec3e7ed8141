//! Hybrid privacy-preserving logistic regression.
//!
//! High-value attributes are trained on under partially homomorphic
//! encryption (Paillier and RSA) through a set of two-party protocols between
//! a data user and each data provider; low-value attributes are published
//! once through an insensitive-microaggregation Laplace mechanism and trained
//! on in the clear.

pub mod crypto;
pub mod dp;
pub mod features;
pub mod harness;
pub mod protocols;
pub mod training;
