//! Deterministic step engines for reliable broadcast, common coin, binding
//! crusader agreement and consensus under asymmetric trust.
//!
//! Engines never perform I/O. Each [`Engine::step`] consumes one local
//! invocation or received message and returns the messages to send to every
//! process, the protocol outputs, and notes for ignored inputs.

pub mod bca;
pub mod coin;
pub mod consensus;
pub mod dealer;
pub mod engine;
pub mod message;
pub mod rb;
pub mod value;

pub use dealer::{dealer_setup, CoinTable};
pub use engine::{
    protocol_factory, Context, Effects, Engine, FactoryParams, Input, Mutations, Output, ProtocolConfig, ProtocolError,
    ProtocolKind, Via,
};
pub use message::{parse_set, Message, ParseError, Tag};
pub use value::{Bit, Payload, Value};
