//! Bit-exact wire format for the lock-step link.
//!
//! All multi-byte fields are little-endian.
//!
//! Command frame, 26 bytes:
//! ```text
//! 0..4   magic "ATFG"
//! 4      version (1)
//! 5      kind: 1 = pwm_write, 2 = reset
//! 6..10  sequence, u32
//! 10..26 motor_cmd, 4 × f32 in [0, 1]
//! ```
//!
//! Sensor frame, 42 bytes:
//! ```text
//! 0..4   magic "ATFG"
//! 4      version (1)
//! 5      kind: 129 = sensor ack
//! 6..10  sequence echoed from the triggering command
//! 10..14 sim_time, f32 seconds (steps·dt, exact at f32 precision)
//! 14..26 gyro, 3 × f32 rad/s
//! 26..42 rotor_omega, 4 × f32 rad/s
//! ```

use crate::error::{Error, Result};

pub const MAGIC: [u8; 4] = *b"ATFG";
pub const VERSION: u8 = 1;

pub const KIND_PWM_WRITE: u8 = 1;
pub const KIND_RESET: u8 = 2;
pub const KIND_SENSOR_ACK: u8 = 129;

pub const COMMAND_FRAME_LEN: usize = 26;
pub const SENSOR_FRAME_LEN: usize = 42;

/// Affine map between hardware PWM microseconds and normalized commands:
/// 1000 µs -> 0.0, 2000 µs -> 1.0.
pub fn pwm_us_to_norm(us: f64) -> f64 {
    (us - 1000.0) / 1000.0
}

/// Inverse of [`pwm_us_to_norm`].
pub fn norm_to_pwm_us(norm: f64) -> f64 {
    1000.0 + norm * 1000.0
}

/// Client-to-server frame carrying motor commands or a reset request.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CommandFrame {
    pub kind: u8,
    pub sequence: u32,
    pub motor_cmd: [f32; 4],
}

impl CommandFrame {
    pub fn encode(&self) -> [u8; COMMAND_FRAME_LEN] {
        let mut buf = [0u8; COMMAND_FRAME_LEN];
        buf[0..4].copy_from_slice(&MAGIC);
        buf[4] = VERSION;
        buf[5] = self.kind;
        buf[6..10].copy_from_slice(&self.sequence.to_le_bytes());
        for (i, c) in self.motor_cmd.iter().enumerate() {
            buf[10 + 4 * i..14 + 4 * i].copy_from_slice(&c.to_le_bytes());
        }
        buf
    }

    pub fn decode(buf: &[u8]) -> Result<Self> {
        if buf.len() != COMMAND_FRAME_LEN {
            return Err(Error::Protocol(format!(
                "command frame length {} != {COMMAND_FRAME_LEN}",
                buf.len()
            )));
        }
        if buf[0..4] != MAGIC {
            return Err(Error::Protocol("bad magic".into()));
        }
        if buf[4] != VERSION {
            return Err(Error::Protocol(format!("unsupported version {}", buf[4])));
        }
        let kind = buf[5];
        if kind != KIND_PWM_WRITE && kind != KIND_RESET {
            return Err(Error::Protocol(format!("unknown command kind {kind}")));
        }
        let sequence = u32::from_le_bytes(buf[6..10].try_into().unwrap());
        let mut motor_cmd = [0f32; 4];
        for (i, c) in motor_cmd.iter_mut().enumerate() {
            *c = f32::from_le_bytes(buf[10 + 4 * i..14 + 4 * i].try_into().unwrap());
            if !c.is_finite() {
                return Err(Error::Protocol(format!("non-finite motor command {c}")));
            }
        }
        Ok(CommandFrame { kind, sequence, motor_cmd })
    }
}

/// Server-to-client frame echoing the sequence and carrying sensor values.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorFrame {
    pub sequence: u32,
    pub sim_time: f32,
    pub gyro: [f32; 3],
    pub rotor_omega: [f32; 4],
}

impl SensorFrame {
    pub fn encode(&self) -> [u8; SENSOR_FRAME_LEN] {
        let mut buf = [0u8; SENSOR_FRAME_LEN];
        buf[0..4].copy_from_slice(&MAGIC);
        buf[4] = VERSION;
        buf[5] = KIND_SENSOR_ACK;
        buf[6..10].copy_from_slice(&self.sequence.to_le_bytes());
        buf[10..14].copy_from_slice(&self.sim_time.to_le_bytes());
        for (i, g) in self.gyro.iter().enumerate() {
            buf[14 + 4 * i..18 + 4 * i].copy_from_slice(&g.to_le_bytes());
        }
        for (i, w) in self.rotor_omega.iter().enumerate() {
            buf[26 + 4 * i..30 + 4 * i].copy_from_slice(&w.to_le_bytes());
        }
        buf
    }

    pub fn decode(buf: &[u8]) -> Result<Self> {
        if buf.len() != SENSOR_FRAME_LEN {
            return Err(Error::Protocol(format!(
                "sensor frame length {} != {SENSOR_FRAME_LEN}",
                buf.len()
            )));
        }
        if buf[0..4] != MAGIC {
            return Err(Error::Protocol("bad magic".into()));
        }
        if buf[4] != VERSION {
            return Err(Error::Protocol(format!("unsupported version {}", buf[4])));
        }
        if buf[5] != KIND_SENSOR_ACK {
            return Err(Error::Protocol(format!("unexpected reply kind {}", buf[5])));
        }
        let sequence = u32::from_le_bytes(buf[6..10].try_into().unwrap());
        let sim_time = f32::from_le_bytes(buf[10..14].try_into().unwrap());
        let mut gyro = [0f32; 3];
        for (i, g) in gyro.iter_mut().enumerate() {
            *g = f32::from_le_bytes(buf[14 + 4 * i..18 + 4 * i].try_into().unwrap());
        }
        let mut rotor_omega = [0f32; 4];
        for (i, w) in rotor_omega.iter_mut().enumerate() {
            *w = f32::from_le_bytes(buf[26 + 4 * i..30 + 4 * i].try_into().unwrap());
        }
        Ok(SensorFrame { sequence, sim_time, gyro, rotor_omega })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_lengths_are_pinned() {
        let c = CommandFrame { kind: KIND_PWM_WRITE, sequence: 7, motor_cmd: [0.5; 4] };
        assert_eq!(c.encode().len(), 26);
        let s = SensorFrame { sequence: 7, sim_time: 0.25, gyro: [1.0; 3], rotor_omega: [2.0; 4] };
        assert_eq!(s.encode().len(), 42);
    }

    #[test]
    fn command_round_trip() {
        let mut x = 0x9e3779b97f4a7c15u64;
        for _ in 0..200 {
            x ^= x << 13;
            x ^= x >> 7;
            x ^= x << 17;
            let f = CommandFrame {
                kind: if x & 1 == 0 { KIND_PWM_WRITE } else { KIND_RESET },
                sequence: (x >> 8) as u32,
                motor_cmd: std::array::from_fn(|i| ((x >> (16 + i)) & 0xffff) as f32 / 65535.0),
            };
            assert_eq!(CommandFrame::decode(&f.encode()).unwrap(), f);
        }
    }

    #[test]
    fn sensor_round_trip() {
        let f = SensorFrame {
            sequence: 0xdead_beef,
            sim_time: 12.345,
            gyro: [-1.5, 2.5, -3.25],
            rotor_omega: [100.0, 200.0, 300.0, 400.0],
        };
        assert_eq!(SensorFrame::decode(&f.encode()).unwrap(), f);
    }

    #[test]
    fn decode_rejects_bad_frames() {
        let good = CommandFrame { kind: KIND_PWM_WRITE, sequence: 1, motor_cmd: [0.0; 4] }.encode();
        let mut bad_magic = good;
        bad_magic[0] = b'X';
        assert!(CommandFrame::decode(&bad_magic).is_err());
        let mut bad_version = good;
        bad_version[4] = 9;
        assert!(CommandFrame::decode(&bad_version).is_err());
        let mut bad_kind = good;
        bad_kind[5] = 77;
        assert!(CommandFrame::decode(&bad_kind).is_err());
        assert!(CommandFrame::decode(&good[..20]).is_err());
        let mut nan_cmd = good;
        nan_cmd[10..14].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(CommandFrame::decode(&nan_cmd).is_err());
    }

    #[test]
    fn pwm_affine_map() {
        assert_eq!(pwm_us_to_norm(1000.0), 0.0);
        assert_eq!(pwm_us_to_norm(2000.0), 1.0);
        assert_eq!(norm_to_pwm_us(0.5), 1500.0);
    }
}
