pub mod attacks;
pub mod base;
pub mod channel;
pub mod cli;
pub mod coding;
pub mod formula;
pub mod frac;
pub mod hardening;
pub mod kw;
