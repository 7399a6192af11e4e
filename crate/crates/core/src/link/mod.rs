//! Lock-step software-in-the-loop link: motor commands drive the simulation
//! clock over UDP, sensor frames return synchronously, and reset is an
//! in-band frame.

pub mod client;
pub mod server;
pub mod wire;

pub use client::{Datagram, LinkClient, RemotePlant, UdpDatagram, DEFAULT_RETRIES, DEFAULT_TIMEOUT};
pub use server::{spawn, LinkCounters, LinkServer, ShutdownHandle};
pub use wire::{
    norm_to_pwm_us, pwm_us_to_norm, CommandFrame, SensorFrame, COMMAND_FRAME_LEN, KIND_PWM_WRITE,
    KIND_RESET, KIND_SENSOR_ACK, MAGIC, SENSOR_FRAME_LEN, VERSION,
};
