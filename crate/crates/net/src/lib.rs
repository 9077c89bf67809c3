//! HTTP transport for the tag-search oracle: a corpus-backed server with
//! per-session rate limiting, and a client that implements the same oracle
//! contract as the in-process simulator, so policies run unchanged against
//! remote databases.

mod client;
mod server;
pub mod wire;

pub use client::RemoteOracle;
pub use server::{serve_blocking, OracleServer, RateLimit};
pub use wire::{WireError, WireHealth, WireReply, WireSessionReply, WireSessionRequest, WIRE_VERSION};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum NetError {
    #[error("failed to bind oracle server: {0}")]
    Bind(String),
    #[error("oracle client error: {0}")]
    Client(String),
}
