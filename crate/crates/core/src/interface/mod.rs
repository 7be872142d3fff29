//! Live wire protocol and the session server.

pub mod serve;
pub mod wire;

pub use serve::{serve_stdio, serve_stream, serve_tcp, ServeOptions, ServerSession, LISTEN_ENV};
pub use wire::{Inbound, Outbound, ScenarioUpdate, SignalMode};
