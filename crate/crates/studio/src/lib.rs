//! Live stylization sessions over a WebSocket.
//!
//! Clients send JSON requests as text messages and receive JSON replies plus
//! a binary geometry frame per solver iteration.

pub mod protocol;
pub mod server;
pub mod session;

pub use protocol::{ClientMessage, ErrorCode, Frame, FrameError, ImagePatch, ServerMessage};
pub use server::{serve, DEFAULT_PORT};
pub use session::{Connection, Event, LoopState, Session, Snapshot};
