//! Independent reference implementations used to check the production crate.
//! Nothing here calls into the production code paths.

pub mod gain_brute;
pub mod parity;
pub mod spam_tree;
pub mod stabilizer;
pub mod verify;
