//! Lock-step simulation server.
//!
//! Each `pwm_write` datagram advances the plant by exactly one physics step
//! and is answered synchronously with a sensor frame; there is no
//! free-running clock. A `reset` frame restores the rest state and replies
//! with the post-reset sensors, so the client never observes stale values.
//! Retransmits are safe: a frame repeating the last processed sequence
//! number gets the cached reply without stepping.

use std::net::{SocketAddr, ToSocketAddrs, UdpSocket};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::Duration;

use crate::dynamics::{self, AircraftConfig, SimState};
use crate::error::{Error, Result};

use super::wire::{CommandFrame, SensorFrame, KIND_PWM_WRITE, KIND_RESET, SENSOR_FRAME_LEN};

/// Traffic counters, exported when the server stops.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LinkCounters {
    /// Well-formed frames received.
    pub frames: u64,
    /// Physics steps taken (== distinct pwm_write sequences processed).
    pub steps: u64,
    /// Resets processed.
    pub resets: u64,
    /// Cached replies re-sent for duplicate sequence numbers.
    pub retransmits: u64,
    /// Malformed datagrams dropped.
    pub drops: u64,
}

/// Handle for stopping a running server from another thread.
#[derive(Debug, Clone)]
pub struct ShutdownHandle(Arc<AtomicBool>);

impl ShutdownHandle {
    pub fn shutdown(&self) {
        self.0.store(true, Ordering::SeqCst);
    }
}

/// One lock-step UDP server bound to a local address.
pub struct LinkServer {
    socket: UdpSocket,
    cfg: AircraftConfig,
    dt: f64,
    stop: Arc<AtomicBool>,
}

impl LinkServer {
    /// Bind to `addr` (e.g. `"127.0.0.1:5760"`; port 0 picks a free port).
    pub fn bind<A: ToSocketAddrs>(cfg: AircraftConfig, dt: f64, addr: A) -> Result<Self> {
        cfg.validate()?;
        if !(dt > 0.0) {
            return Err(Error::Config(format!("dt must be > 0, got {dt}")));
        }
        let socket = UdpSocket::bind(addr)?;
        // short poll so shutdown is observed promptly
        socket.set_read_timeout(Some(Duration::from_millis(50)))?;
        Ok(LinkServer { socket, cfg, dt, stop: Arc::new(AtomicBool::new(false)) })
    }

    pub fn local_addr(&self) -> Result<SocketAddr> {
        Ok(self.socket.local_addr()?)
    }

    pub fn shutdown_handle(&self) -> ShutdownHandle {
        ShutdownHandle(self.stop.clone())
    }

    /// Serve until shut down; returns the traffic counters.
    pub fn run(self) -> Result<LinkCounters> {
        let mut state = dynamics::reset_state(&self.cfg);
        let mut counters = LinkCounters::default();
        let mut cache: Option<(u32, [u8; SENSOR_FRAME_LEN])> = None;
        let mut buf = [0u8; 512];

        while !self.stop.load(Ordering::SeqCst) {
            let (len, peer) = match self.socket.recv_from(&mut buf) {
                Ok(x) => x,
                Err(e)
                    if e.kind() == std::io::ErrorKind::WouldBlock
                        || e.kind() == std::io::ErrorKind::TimedOut =>
                {
                    continue;
                }
                Err(e) => return Err(e.into()),
            };
            let frame = match CommandFrame::decode(&buf[..len]) {
                Ok(f) => f,
                Err(_) => {
                    counters.drops += 1;
                    continue;
                }
            };
            counters.frames += 1;

            if let Some((seq, reply)) = &cache {
                if *seq == frame.sequence {
                    counters.retransmits += 1;
                    self.socket.send_to(reply, peer)?;
                    continue;
                }
            }

            match frame.kind {
                KIND_PWM_WRITE => {
                    let cmd = frame.motor_cmd.map(f64::from);
                    state = dynamics::step(&state, cmd, &self.cfg, self.dt)?;
                    counters.steps += 1;
                }
                KIND_RESET => {
                    state = dynamics::reset_state(&self.cfg);
                    counters.resets += 1;
                }
                _ => unreachable!("decode rejects unknown kinds"),
            }

            let reply = reply_frame(&state, frame.sequence).encode();
            self.socket.send_to(&reply, peer)?;
            cache = Some((frame.sequence, reply));
        }
        Ok(counters)
    }
}

fn reply_frame(state: &SimState, sequence: u32) -> SensorFrame {
    SensorFrame {
        sequence,
        sim_time: state.time as f32,
        gyro: [
            state.omega_body.x as f32,
            state.omega_body.y as f32,
            state.omega_body.z as f32,
        ],
        rotor_omega: state.rotor_omega.map(|w| w as f32),
    }
}

/// Run a server on a background thread; used by tests and the in-process
/// loopback setups. Returns the bound address, the shutdown handle and the
/// join handle yielding the counters.
pub fn spawn(
    cfg: AircraftConfig,
    dt: f64,
    addr: &str,
) -> Result<(SocketAddr, ShutdownHandle, std::thread::JoinHandle<Result<LinkCounters>>)> {
    let server = LinkServer::bind(cfg, dt, addr)?;
    let local = server.local_addr()?;
    let handle = server.shutdown_handle();
    let join = std::thread::spawn(move || server.run());
    Ok((local, handle, join))
}
