//! Framed streaming protocol.
//!
//! Frames carry commands from the client, and acknowledgements and
//! sensor-record notifications from the device, over any reliable ordered
//! byte stream.

mod client;
mod command;
mod notify;
mod packet;
mod server;
mod transport;

pub use client::{
    client_monitor, MonitorError, MonitorOptions, MonitorSummary, MonitorUpdate, HR_WINDOW_S, UPDATE_PERIOD_S,
};
pub use command::{
    Command, CommandError, ErrorCode, Subscription, OP_RESERVED_OTA, OP_SET_CONFIG, OP_START, OP_STOP, OP_SUBSCRIBE,
    OP_UNSUBSCRIBE,
};
pub use notify::{fragment, Reassembler, CHUNK_MAX, FLAG_MORE};
pub use packet::{
    deframe, frame, DeframeItem, Deframer, Packet, PacketType, PayloadTooLarge, FRAME_OVERHEAD, MAX_PAYLOAD, SYNC,
};
pub use server::{serve, Pacing, ServeOptions, ServeStats, Source, QUEUE_CAPACITY};
pub use transport::{Closer, Connection};
