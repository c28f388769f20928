use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::audio::{read_audio_pcm, write_audio, AudioError, StereoPcm};
use super::events::{read_events, write_events, EventFile, EventsError};
use super::records::{read_session, write_session, CodecError, SessionHeader};
use crate::types::SensorRecord;

#[derive(Debug, Error)]
pub enum SessionError {
    #[error("{path}: {source}")]
    Records { path: PathBuf, source: CodecError },
    #[error("{path}: {source}")]
    Audio { path: PathBuf, source: AudioError },
    #[error("{path}: {source}")]
    Events { path: PathBuf, source: EventsError },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// A fully loaded session.
#[derive(Debug, Clone, PartialEq)]
pub struct Session {
    pub header: SessionHeader,
    /// Sorted by (timestamp, sensor id).
    pub records: Vec<SensorRecord>,
    pub audio: Option<StereoPcm>,
}

/// Paths of a session's files on disk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SessionLog {
    pub records_path: PathBuf,
    pub audio_path: Option<PathBuf>,
    pub truth_path: Option<PathBuf>,
}

impl SessionLog {
    pub fn paths_for(dir: &Path, stem: &str) -> (PathBuf, PathBuf, PathBuf) {
        (dir.join(format!("{stem}.pks")), dir.join(format!("{stem}.wav")), dir.join(format!("{stem}.truth")))
    }

    /// Writes `<stem>.pks`, plus `<stem>.wav` when the session has audio and
    /// `<stem>.truth` when ground truth is given.
    pub fn write(dir: &Path, stem: &str, session: &Session, truth: Option<&EventFile>) -> Result<Self, SessionError> {
        let (pks, wav, tru) = SessionLog::paths_for(dir, stem);
        let create = |p: &Path| {
            File::create(p).map(BufWriter::new).map_err(|source| SessionError::Io { path: p.to_path_buf(), source })
        };
        write_session(&session.header, &session.records, create(&pks)?)
            .map_err(|source| SessionError::Records { path: pks.clone(), source })?;
        let audio_path = match &session.audio {
            Some(pcm) => {
                write_audio(&pcm.interleaved, pcm.rate_hz, create(&wav)?)
                    .map_err(|source| SessionError::Audio { path: wav.clone(), source })?;
                Some(wav)
            }
            None => None,
        };
        let truth_path = match truth {
            Some(t) => {
                write_events(t, create(&tru)?).map_err(|source| SessionError::Io { path: tru.clone(), source })?;
                Some(tru)
            }
            None => None,
        };
        Ok(SessionLog { records_path: pks, audio_path, truth_path })
    }

    /// Locates the sibling `.wav` and `.truth` files of a `.pks` path (or a
    /// bare stem). Missing siblings are `None`.
    pub fn open(path: &Path) -> Self {
        let records_path =
            if path.extension().is_some_and(|e| e == "pks") { path.to_path_buf() } else { path.with_extension("pks") };
        let sibling = |ext: &str| {
            let p = records_path.with_extension(ext);
            p.exists().then_some(p)
        };
        SessionLog { audio_path: sibling("wav"), truth_path: sibling("truth"), records_path }
    }

    pub fn load(&self) -> Result<Session, SessionError> {
        let open = |p: &Path| {
            File::open(p).map(BufReader::new).map_err(|source| SessionError::Io { path: p.to_path_buf(), source })
        };
        let rec_err = |source| SessionError::Records { path: self.records_path.clone(), source };
        let (header, reader) = read_session(open(&self.records_path)?).map_err(rec_err)?;
        let records = reader.collect::<Result<Vec<_>, _>>().map_err(rec_err)?;
        let audio = match &self.audio_path {
            Some(p) => {
                Some(read_audio_pcm(open(p)?).map_err(|source| SessionError::Audio { path: p.clone(), source })?)
            }
            None => None,
        };
        Ok(Session { header, records, audio })
    }

    pub fn load_truth(&self) -> Result<Option<EventFile>, SessionError> {
        match &self.truth_path {
            Some(p) => {
                let f = File::open(p).map_err(|source| SessionError::Io { path: p.clone(), source })?;
                read_events(BufReader::new(f))
                    .map(Some)
                    .map_err(|source| SessionError::Events { path: p.clone(), source })
            }
            None => Ok(None),
        }
    }
}
