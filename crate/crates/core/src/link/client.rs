//! Blocking lock-step client: each request retransmits its sequence number
//! until the matching reply arrives, so a lost datagram costs latency but
//! never an extra simulation step.

use std::io;
use std::net::{ToSocketAddrs, UdpSocket};
use std::time::{Duration, Instant};

use crate::env::{Plant, PlantSample};
use crate::error::{Error, Result};

use super::wire::{CommandFrame, SensorFrame, KIND_PWM_WRITE, KIND_RESET};

pub const DEFAULT_TIMEOUT: Duration = Duration::from_millis(100);
pub const DEFAULT_RETRIES: u32 = 10;

/// Datagram transport the client runs over. The UDP implementation is the
/// real one; tests substitute fault-injection shims.
pub trait Datagram: Send {
    fn send(&mut self, buf: &[u8]) -> io::Result<()>;
    /// Receive one datagram, or `None` on timeout.
    fn recv_timeout(&mut self, buf: &mut [u8], timeout: Duration) -> io::Result<Option<usize>>;
}

/// Connected UDP socket transport.
pub struct UdpDatagram {
    socket: UdpSocket,
}

impl UdpDatagram {
    pub fn connect<A: ToSocketAddrs>(addr: A) -> Result<Self> {
        let socket = UdpSocket::bind("0.0.0.0:0")?;
        socket.connect(addr)?;
        Ok(UdpDatagram { socket })
    }
}

impl Datagram for UdpDatagram {
    fn send(&mut self, buf: &[u8]) -> io::Result<()> {
        match self.socket.send(buf) {
            Ok(_) => Ok(()),
            // an ICMP port-unreachable from a dead peer is a lost-link
            // condition, not a transport failure; the retry budget decides
            Err(e) if e.kind() == io::ErrorKind::ConnectionRefused => Ok(()),
            Err(e) => Err(e),
        }
    }

    fn recv_timeout(&mut self, buf: &mut [u8], timeout: Duration) -> io::Result<Option<usize>> {
        self.socket.set_read_timeout(Some(timeout.max(Duration::from_millis(1))))?;
        match self.socket.recv(buf) {
            Ok(n) => Ok(Some(n)),
            Err(e)
                if e.kind() == io::ErrorKind::WouldBlock
                    || e.kind() == io::ErrorKind::TimedOut
                    || e.kind() == io::ErrorKind::ConnectionRefused =>
            {
                Ok(None)
            }
            Err(e) => Err(e),
        }
    }
}

/// Lock-step client with sequence-numbered retransmits.
pub struct LinkClient<T: Datagram = UdpDatagram> {
    transport: T,
    sequence: u32,
    timeout: Duration,
    retries: u32,
    /// Requests that needed at least one retransmit.
    pub retransmitted_requests: u64,
}

impl LinkClient<UdpDatagram> {
    pub fn connect<A: ToSocketAddrs>(addr: A) -> Result<Self> {
        Ok(Self::with_transport(UdpDatagram::connect(addr)?))
    }
}

impl<T: Datagram> LinkClient<T> {
    pub fn with_transport(transport: T) -> Self {
        LinkClient {
            transport,
            sequence: 0,
            timeout: DEFAULT_TIMEOUT,
            retries: DEFAULT_RETRIES,
            retransmitted_requests: 0,
        }
    }

    pub fn set_timeout(&mut self, timeout: Duration) {
        self.timeout = timeout;
    }

    pub fn set_retries(&mut self, retries: u32) {
        self.retries = retries;
    }

    /// Send motor commands, advance the simulation one step, return sensors.
    pub fn pwm_write(&mut self, motor_cmd: [f32; 4]) -> Result<SensorFrame> {
        self.request(KIND_PWM_WRITE, motor_cmd)
    }

    /// Restore the rest state and return the post-reset sensors.
    pub fn reset(&mut self) -> Result<SensorFrame> {
        self.request(KIND_RESET, [0.0; 4])
    }

    fn request(&mut self, kind: u8, motor_cmd: [f32; 4]) -> Result<SensorFrame> {
        self.sequence = self.sequence.wrapping_add(1);
        let frame = CommandFrame { kind, sequence: self.sequence, motor_cmd }.encode();
        let mut buf = [0u8; 512];

        let attempts = self.retries + 1;
        for attempt in 0..attempts {
            if attempt > 0 && attempt == 1 {
                self.retransmitted_requests += 1;
            }
            self.transport.send(&frame)?;
            let deadline = Instant::now() + self.timeout;
            loop {
                let remaining = deadline.saturating_duration_since(Instant::now());
                if remaining.is_zero() {
                    break; // retransmit
                }
                let Some(len) = self.transport.recv_timeout(&mut buf, remaining)? else {
                    break; // retransmit
                };
                let reply = SensorFrame::decode(&buf[..len])?;
                if reply.sequence == self.sequence {
                    return Ok(reply);
                }
                // stale reply from an earlier retransmit: keep waiting
            }
        }
        Err(Error::LostLink { attempts })
    }
}

/// Plant adapter driving a remote lock-step server; commands are quantized
/// to f32 by the wire format.
pub struct RemotePlant<T: Datagram = UdpDatagram> {
    client: LinkClient<T>,
}

impl RemotePlant<UdpDatagram> {
    pub fn connect<A: ToSocketAddrs>(addr: A) -> Result<Self> {
        Ok(RemotePlant { client: LinkClient::connect(addr)? })
    }
}

impl<T: Datagram> RemotePlant<T> {
    pub fn with_client(client: LinkClient<T>) -> Self {
        RemotePlant { client }
    }

    pub fn client_mut(&mut self) -> &mut LinkClient<T> {
        &mut self.client
    }
}

fn sample_from(frame: &SensorFrame) -> PlantSample {
    PlantSample {
        time: f64::from(frame.sim_time),
        gyro: frame.gyro.map(f64::from),
        rotor_omega: frame.rotor_omega.map(f64::from),
    }
}

impl<T: Datagram> Plant for RemotePlant<T> {
    fn reset(&mut self) -> Result<PlantSample> {
        Ok(sample_from(&self.client.reset()?))
    }

    fn step(&mut self, motor_cmd: [f64; 4]) -> Result<PlantSample> {
        let cmd = motor_cmd.map(|c| c as f32);
        Ok(sample_from(&self.client.pwm_write(cmd)?))
    }
}
