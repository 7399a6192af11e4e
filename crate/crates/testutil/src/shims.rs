//! Fault-injection datagram shims for exercising the link's retransmit path.

use std::io;
use std::time::{Duration, Instant};

use atfg_core::link::Datagram;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Drops the first outgoing datagram, then passes everything through.
pub struct DropFirstDatagram<T: Datagram> {
    inner: T,
    dropped: bool,
}

impl<T: Datagram> DropFirstDatagram<T> {
    pub fn new(inner: T) -> Self {
        DropFirstDatagram { inner, dropped: false }
    }
}

impl<T: Datagram> Datagram for DropFirstDatagram<T> {
    fn send(&mut self, buf: &[u8]) -> io::Result<()> {
        if !self.dropped {
            self.dropped = true;
            return Ok(()); // swallowed
        }
        self.inner.send(buf)
    }

    fn recv_timeout(&mut self, buf: &mut [u8], timeout: Duration) -> io::Result<Option<usize>> {
        self.inner.recv_timeout(buf, timeout)
    }
}

/// Drops sends and receives independently with probability `loss`.
pub struct LossyDatagram<T: Datagram> {
    inner: T,
    rng: ChaCha8Rng,
    loss: f64,
    pub dropped_sends: u64,
    pub dropped_replies: u64,
}

impl<T: Datagram> LossyDatagram<T> {
    pub fn new(inner: T, loss: f64, seed: u64) -> Self {
        LossyDatagram {
            inner,
            rng: ChaCha8Rng::seed_from_u64(seed),
            loss,
            dropped_sends: 0,
            dropped_replies: 0,
        }
    }
}

impl<T: Datagram> Datagram for LossyDatagram<T> {
    fn send(&mut self, buf: &[u8]) -> io::Result<()> {
        if self.rng.random_range(0.0..1.0) < self.loss {
            self.dropped_sends += 1;
            return Ok(());
        }
        self.inner.send(buf)
    }

    fn recv_timeout(&mut self, buf: &mut [u8], timeout: Duration) -> io::Result<Option<usize>> {
        let deadline = Instant::now() + timeout;
        loop {
            let remaining = deadline.saturating_duration_since(Instant::now());
            if remaining.is_zero() {
                return Ok(None);
            }
            match self.inner.recv_timeout(buf, remaining)? {
                None => return Ok(None),
                Some(n) => {
                    if self.rng.random_range(0.0..1.0) < self.loss {
                        self.dropped_replies += 1;
                        continue; // reply lost in flight
                    }
                    return Ok(Some(n));
                }
            }
        }
    }
}
