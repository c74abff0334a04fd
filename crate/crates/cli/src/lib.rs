//! Command-line front end for the `emofit` library.

pub mod evaluate;
pub mod manifest;
pub mod neighbors;
pub mod retrofit;
