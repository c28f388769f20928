//! Raw-count to physical-unit conversions.
//!
//! ECG: gain 6 on a ±2.4 V reference over signed 24-bit counts.
//! IMU: ±2 g accelerometer (16384 LSB/g), ±250 dps gyroscope (131 LSB/dps).

use thiserror::Error;

use crate::types::{ImuSample, ECG_COUNTS_MAX, ECG_COUNTS_MIN};

pub const ECG_VREF_MV: f64 = 2400.0;
pub const ECG_GAIN: f64 = 6.0;
/// Millivolts per ECG count.
pub const ECG_MV_PER_COUNT: f64 = ECG_VREF_MV / (ECG_GAIN * 8_388_608.0);

pub const ACCEL_LSB_PER_G: f64 = 16384.0;
pub const GYRO_LSB_PER_DPS: f64 = 131.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("{0} counts is outside the signed 24-bit range")]
pub struct OutOfRange(pub i32);

pub fn ecg_counts_to_mv(counts: i32) -> Result<f64, OutOfRange> {
    if !(ECG_COUNTS_MIN..=ECG_COUNTS_MAX).contains(&counts) {
        return Err(OutOfRange(counts));
    }
    Ok(counts as f64 * ECG_MV_PER_COUNT)
}

/// Nearest count for a voltage, saturating at the 24-bit rails.
pub fn mv_to_ecg_counts(mv: f64) -> i32 {
    let c = (mv / ECG_MV_PER_COUNT).round();
    c.clamp(ECG_COUNTS_MIN as f64, ECG_COUNTS_MAX as f64) as i32
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImuPhysical {
    /// ax, ay, az in g.
    pub accel_g: [f64; 3],
    /// gx, gy, gz in degrees per second.
    pub gyro_dps: [f64; 3],
}

pub fn imu_raw_to_physical(s: ImuSample) -> ImuPhysical {
    let a = |v: i16| v as f64 / ACCEL_LSB_PER_G;
    let g = |v: i16| v as f64 / GYRO_LSB_PER_DPS;
    ImuPhysical { accel_g: [a(s.ax), a(s.ay), a(s.az)], gyro_dps: [g(s.gx), g(s.gy), g(s.gz)] }
}

fn saturate_i16(v: f64) -> i16 {
    v.round().clamp(i16::MIN as f64, i16::MAX as f64) as i16
}

pub fn g_to_raw(g: f64) -> i16 {
    saturate_i16(g * ACCEL_LSB_PER_G)
}

pub fn dps_to_raw(dps: f64) -> i16 {
    saturate_i16(dps * GYRO_LSB_PER_DPS)
}
