//! Stereo PCM16 WAV container. Channel 0 is the stethoscope microphone,
//! channel 1 the ambient reference microphone.

use std::io::{self, Read, Write};

use thiserror::Error;

use super::records::read_full;
use crate::config::AUDIO_RATES_HZ;
use crate::series::{TimeSeries, Unit};

const WAVE_FORMAT_PCM: u16 = 1;
const CHANNELS: u16 = 2;
const BITS: u16 = 16;
const BLOCK_ALIGN: u16 = CHANNELS * BITS / 8;

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("sample rate {0} Hz is not one of 4000, 8000, 16000")]
    BadRate(u32),
    #[error("interleaved stereo needs an even sample count, got {0}")]
    OddSampleCount(usize),
    #[error("not a RIFF/WAVE file")]
    NotRiff,
    #[error("unsupported encoding: format tag {format}, {bits} bits")]
    UnsupportedEncoding { format: u16, bits: u16 },
    #[error("expected 2 channels, found {0}")]
    ChannelCountNotTwo(u16),
    #[error("WAV file ends inside a chunk")]
    Truncated,
}

/// Interleaved PCM as stored on disk.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StereoPcm {
    pub rate_hz: u32,
    /// L, R, L, R, ...
    pub interleaved: Vec<i16>,
}

impl StereoPcm {
    pub fn frames(&self) -> usize {
        self.interleaved.len() / 2
    }

    pub fn from_channels(rate_hz: u32, left: &[f64], right: &[f64]) -> Self {
        assert_eq!(left.len(), right.len());
        let q = |v: f64| (v * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        let mut interleaved = Vec::with_capacity(2 * left.len());
        for (l, r) in left.iter().zip(right) {
            interleaved.push(q(*l));
            interleaved.push(q(*r));
        }
        StereoPcm { rate_hz, interleaved }
    }

    pub fn to_audio(&self) -> StereoAudio {
        let rate = self.rate_hz as f64;
        let chan = |c: usize| {
            let s = self.interleaved.iter().skip(c).step_by(2).map(|&v| v as f64 / 32768.0).collect();
            TimeSeries::new(0, rate, Unit::Normalized, s)
        };
        StereoAudio { rate_hz: self.rate_hz, stethoscope: chan(0), ambient: chan(1) }
    }
}

/// Decoded audio, normalized to [-1, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct StereoAudio {
    pub rate_hz: u32,
    pub stethoscope: TimeSeries,
    pub ambient: TimeSeries,
}

pub fn write_audio<W: Write>(interleaved: &[i16], rate_hz: u32, mut sink: W) -> Result<u64, AudioError> {
    if !AUDIO_RATES_HZ.contains(&rate_hz) {
        return Err(AudioError::BadRate(rate_hz));
    }
    if !interleaved.len().is_multiple_of(2) {
        return Err(AudioError::OddSampleCount(interleaved.len()));
    }
    let data_len = (interleaved.len() * 2) as u32;
    let mut h = Vec::with_capacity(44);
    h.extend_from_slice(b"RIFF");
    h.extend_from_slice(&(36 + data_len).to_le_bytes());
    h.extend_from_slice(b"WAVE");
    h.extend_from_slice(b"fmt ");
    h.extend_from_slice(&16u32.to_le_bytes());
    h.extend_from_slice(&WAVE_FORMAT_PCM.to_le_bytes());
    h.extend_from_slice(&CHANNELS.to_le_bytes());
    h.extend_from_slice(&rate_hz.to_le_bytes());
    h.extend_from_slice(&(rate_hz * BLOCK_ALIGN as u32).to_le_bytes());
    h.extend_from_slice(&BLOCK_ALIGN.to_le_bytes());
    h.extend_from_slice(&BITS.to_le_bytes());
    h.extend_from_slice(b"data");
    h.extend_from_slice(&data_len.to_le_bytes());
    sink.write_all(&h)?;
    let mut buf = Vec::with_capacity(8192);
    for chunk in interleaved.chunks(4096) {
        buf.clear();
        for s in chunk {
            buf.extend_from_slice(&s.to_le_bytes());
        }
        sink.write_all(&buf)?;
    }
    sink.flush()?;
    Ok(44 + data_len as u64)
}

fn read_exact_or_truncated<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<(), AudioError> {
    if read_full(r, buf)? < buf.len() {
        return Err(AudioError::Truncated);
    }
    Ok(())
}

fn skip<R: Read>(r: &mut R, n: u64) -> Result<(), AudioError> {
    let copied = io::copy(&mut r.take(n), &mut io::sink())?;
    if copied < n {
        return Err(AudioError::Truncated);
    }
    Ok(())
}

/// Reads the raw interleaved samples. Chunks other than `fmt ` and `data`
/// are skipped.
pub fn read_audio_pcm<R: Read>(mut source: R) -> Result<StereoPcm, AudioError> {
    let mut riff = [0u8; 12];
    if read_full(&mut source, &mut riff)? < 12 || &riff[..4] != b"RIFF" || &riff[8..12] != b"WAVE" {
        return Err(AudioError::NotRiff);
    }
    let mut rate = None;
    loop {
        let mut ch = [0u8; 8];
        read_exact_or_truncated(&mut source, &mut ch)?;
        let size = u32::from_le_bytes(ch[4..8].try_into().unwrap()) as u64;
        match &ch[..4] {
            b"fmt " => {
                if size < 16 {
                    return Err(AudioError::Truncated);
                }
                let mut f = [0u8; 16];
                read_exact_or_truncated(&mut source, &mut f)?;
                skip(&mut source, size - 16 + (size & 1))?;
                let format = u16::from_le_bytes([f[0], f[1]]);
                let channels = u16::from_le_bytes([f[2], f[3]]);
                let bits = u16::from_le_bytes([f[14], f[15]]);
                if format != WAVE_FORMAT_PCM || bits != BITS {
                    return Err(AudioError::UnsupportedEncoding { format, bits });
                }
                if channels != CHANNELS {
                    return Err(AudioError::ChannelCountNotTwo(channels));
                }
                rate = Some(u32::from_le_bytes(f[4..8].try_into().unwrap()));
            }
            b"data" => {
                let rate_hz = rate.ok_or(AudioError::UnsupportedEncoding { format: 0, bits: 0 })?;
                let frames = size / BLOCK_ALIGN as u64;
                let mut bytes = vec![0u8; (frames * BLOCK_ALIGN as u64) as usize];
                read_exact_or_truncated(&mut source, &mut bytes)?;
                let interleaved = bytes.chunks_exact(2).map(|b| i16::from_le_bytes([b[0], b[1]])).collect();
                return Ok(StereoPcm { rate_hz, interleaved });
            }
            _ => skip(&mut source, size + (size & 1))?,
        }
    }
}

pub fn read_audio<R: Read>(source: R) -> Result<StereoAudio, AudioError> {
    Ok(read_audio_pcm(source)?.to_audio())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wav(samples: &[i16], rate: u32) -> Vec<u8> {
        let mut out = Vec::new();
        let n = write_audio(samples, rate, &mut out).unwrap();
        assert_eq!(n as usize, out.len());
        out
    }

    #[test]
    fn empty_audio_is_44_bytes() {
        let bytes = wav(&[], 8000);
        assert_eq!(bytes.len(), 44);
        let a = read_audio(&bytes[..]).unwrap();
        assert!(a.stethoscope.is_empty() && a.ambient.is_empty());
        assert_eq!(a.rate_hz, 8000);
    }

    #[test]
    fn one_second_at_8k_has_32000_data_bytes() {
        let bytes = wav(&vec![0i16; 16000], 8000);
        assert_eq!(u32::from_le_bytes(bytes[40..44].try_into().unwrap()), 32000);
        assert_eq!(bytes.len(), 44 + 32000);
    }

    #[test]
    fn pcm_round_trip_is_exact() {
        let x: Vec<i16> = (0..2000).map(|i| ((i * 7919) % 65536 - 32768) as i16).collect();
        let back = read_audio_pcm(&wav(&x, 16000)[..]).unwrap();
        assert_eq!(back.rate_hz, 16000);
        assert_eq!(back.interleaved, x);
    }

    #[test]
    fn full_scale_normalizes_to_unit() {
        let a = read_audio(&wav(&[32767, -32768, -32768, 32767], 4000)[..]).unwrap();
        assert_eq!(a.stethoscope.samples, vec![32767.0 / 32768.0, -1.0]);
        assert_eq!(a.ambient.samples, vec![-1.0, 32767.0 / 32768.0]);
        assert!((a.stethoscope.samples[0] - 1.0).abs() < 1e-4);
    }

    #[test]
    fn silence_reads_as_zeros() {
        let a = read_audio(&wav(&[0; 100], 8000)[..]).unwrap();
        assert!(a.stethoscope.samples.iter().chain(&a.ambient.samples).all(|&v| v == 0.0));
        assert_eq!(a.stethoscope.len(), 50);
    }

    #[test]
    fn contract_violations() {
        assert!(matches!(write_audio(&[0; 3], 8000, Vec::new()), Err(AudioError::OddSampleCount(3))));
        assert!(matches!(write_audio(&[0; 2], 44100, Vec::new()), Err(AudioError::BadRate(44100))));
        assert!(matches!(read_audio(&b"RIFX...."[..]), Err(AudioError::NotRiff)));

        let mut mono = wav(&[0; 4], 8000);
        mono[22] = 1;
        assert!(matches!(read_audio(&mono[..]), Err(AudioError::ChannelCountNotTwo(1))));
        let mut float = wav(&[0; 4], 8000);
        float[20] = 3;
        assert!(matches!(read_audio(&float[..]), Err(AudioError::UnsupportedEncoding { format: 3, .. })));
        let bytes = wav(&[1; 8], 8000);
        assert!(matches!(read_audio(&bytes[..bytes.len() - 2]), Err(AudioError::Truncated)));
    }

    #[test]
    fn unknown_chunks_are_skipped() {
        let base = wav(&[5, -5], 8000);
        let mut bytes = base[..36].to_vec();
        bytes.extend_from_slice(b"LIST");
        bytes.extend_from_slice(&3u32.to_le_bytes());
        bytes.extend_from_slice(&[1, 2, 3, 0]);
        bytes.extend_from_slice(&base[36..]);
        assert_eq!(read_audio_pcm(&bytes[..]).unwrap().interleaved, vec![5, -5]);
    }

    #[test]
    fn quantization_saturates() {
        let p = StereoPcm::from_channels(8000, &[1.0, -1.0, 0.5], &[-2.0, 0.0, 0.25]);
        assert_eq!(p.interleaved, vec![32767, -32768, -32768, 0, 16384, 8192]);
    }
}
