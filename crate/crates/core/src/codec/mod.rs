//! On-disk session artifacts.
//!
//! A session is a file triple sharing one stem:
//!
//! * `<stem>.pks`: header plus CRC-protected sensor records ([`records`]).
//! * `<stem>.wav`: stereo PCM16, stethoscope left, ambient right ([`audio`]).
//! * `<stem>.truth`: event sidecar, simulator output only ([`events`]).
//!
//! Audio sample 0 is session time 0; the wall-clock anchor for both files is
//! the `.pks` header's `session_start_epoch_us`.

pub mod audio;
pub mod events;
pub mod records;
mod session;

pub use audio::{read_audio, read_audio_pcm, write_audio, AudioError, StereoAudio, StereoPcm};
pub use events::{read_events, write_events, Event, EventFile, EventKind, EventsError};
pub use records::{
    decode_config_block, decode_record, encode_config_block, encode_record, read_session, write_session, CodecError,
    RecordReader, RecordWriter, SessionHeader, FORMAT_VERSION, HEADER_LEN, MAGIC, RECORD_OVERHEAD,
};
pub use session::{Session, SessionError, SessionLog};
