use thiserror::Error;

use crate::codec::{decode_config_block, encode_config_block};
use crate::config::SensorConfig;
use crate::types::SensorId;

pub const OP_SET_CONFIG: u8 = 0x10;
pub const OP_START: u8 = 0x11;
pub const OP_STOP: u8 = 0x12;
pub const OP_SUBSCRIBE: u8 = 0x13;
pub const OP_UNSUBSCRIBE: u8 = 0x14;
/// Opcodes from here up are held for firmware update, which is not
/// implemented.
pub const OP_RESERVED_OTA: u8 = 0x20;

/// Bitmask of sensors a client wants notifications for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Subscription(pub u8);

impl Subscription {
    pub const ECG: u8 = 0x01;
    pub const PPG: u8 = 0x02;
    pub const IMU: u8 = 0x04;
    pub const MARKER: u8 = 0x80;
    pub const ALL: Subscription = Subscription(Self::ECG | Self::PPG | Self::IMU | Self::MARKER);

    pub fn bit(id: SensorId) -> u8 {
        match id {
            SensorId::EcgResp => Self::ECG,
            SensorId::Ppg => Self::PPG,
            SensorId::Imu => Self::IMU,
            SensorId::Marker => Self::MARKER,
            SensorId::Unknown(_) => 0,
        }
    }

    pub fn of(ids: &[SensorId]) -> Self {
        Subscription(ids.iter().fold(0, |m, &id| m | Self::bit(id)))
    }

    pub fn contains(self, id: SensorId) -> bool {
        self.0 & Self::bit(id) != 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Command {
    SetConfig(SensorConfig),
    Start,
    Stop,
    Subscribe(Subscription),
    /// Drops the given sensors; an empty payload drops all of them.
    Unsubscribe(Subscription),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum CommandError {
    #[error("empty command payload")]
    Empty,
    #[error("unknown opcode 0x{0:02x}")]
    UnknownOpcode(u8),
    #[error("opcode 0x{0:02x} is reserved")]
    Reserved(u8),
    #[error("bad arguments for opcode 0x{0:02x}")]
    BadPayload(u8),
}

impl CommandError {
    pub fn code(self) -> ErrorCode {
        match self {
            CommandError::Empty | CommandError::BadPayload(_) => ErrorCode::BadPayload,
            CommandError::UnknownOpcode(_) => ErrorCode::UnknownOpcode,
            CommandError::Reserved(_) => ErrorCode::Unsupported,
        }
    }
}

impl Command {
    pub fn opcode(&self) -> u8 {
        match self {
            Command::SetConfig(_) => OP_SET_CONFIG,
            Command::Start => OP_START,
            Command::Stop => OP_STOP,
            Command::Subscribe(_) => OP_SUBSCRIBE,
            Command::Unsubscribe(_) => OP_UNSUBSCRIBE,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = vec![self.opcode()];
        match self {
            Command::SetConfig(cfg) => out.extend(encode_config_block(cfg)),
            Command::Subscribe(m) | Command::Unsubscribe(m) => out.push(m.0),
            Command::Start | Command::Stop => {}
        }
        out
    }

    pub fn decode(payload: &[u8]) -> Result<Self, CommandError> {
        let (&op, args) = payload.split_first().ok_or(CommandError::Empty)?;
        let bad = CommandError::BadPayload(op);
        match op {
            OP_SET_CONFIG => {
                let (cfg, used) = decode_config_block(args).map_err(|_| bad)?;
                if used != args.len() {
                    return Err(bad);
                }
                Ok(Command::SetConfig(cfg.into_inner()))
            }
            OP_START | OP_STOP if !args.is_empty() => Err(bad),
            OP_START => Ok(Command::Start),
            OP_STOP => Ok(Command::Stop),
            OP_SUBSCRIBE => match args {
                [m] => Ok(Command::Subscribe(Subscription(*m))),
                _ => Err(bad),
            },
            OP_UNSUBSCRIBE => match args {
                [] => Ok(Command::Unsubscribe(Subscription::ALL)),
                [m] => Ok(Command::Unsubscribe(Subscription(*m))),
                _ => Err(bad),
            },
            op if op >= OP_RESERVED_OTA => Err(CommandError::Reserved(op)),
            op => Err(CommandError::UnknownOpcode(op)),
        }
    }
}

/// First byte of an ERR payload; the second is the rejected opcode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCode {
    IllegalState,
    UnknownOpcode,
    BadPayload,
    Unsupported,
    Other(u8),
}

impl ErrorCode {
    pub fn as_u8(self) -> u8 {
        match self {
            ErrorCode::IllegalState => 1,
            ErrorCode::UnknownOpcode => 2,
            ErrorCode::BadPayload => 3,
            ErrorCode::Unsupported => 4,
            ErrorCode::Other(v) => v,
        }
    }

    pub fn from_u8(v: u8) -> Self {
        match v {
            1 => ErrorCode::IllegalState,
            2 => ErrorCode::UnknownOpcode,
            3 => ErrorCode::BadPayload,
            4 => ErrorCode::Unsupported,
            v => ErrorCode::Other(v),
        }
    }
}
