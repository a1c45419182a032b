//! Adversaries: generic stress strategies for the coding schemes and the
//! confusion attack against short protocols for the parity KW game.

pub mod confusion;
pub mod stock;

pub use confusion::{
    bisection_protocol, build_attack, check_preconditions, execute_attack, find_confusable_inputs,
    pad_to_multiple_of_five, AttackError, AttackPlan, AttackReport, Bisection, Confusable, Padded, RoundProtocol,
};
pub use stock::{build_adversary, AdversaryKind, AdversarySpec, Burst, ChainForker, Forge, RandomNoise};
