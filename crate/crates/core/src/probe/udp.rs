//! UDP echo probing against a cooperating reflector.
//!
//! Probe payload: 8-byte send timestamp, 4-byte nonce, 4-byte sequence number,
//! zero padding. The reflector returns every datagram verbatim.

use std::io;
use std::net::{Ipv4Addr, SocketAddr, SocketAddrV4, UdpSocket};
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::{Duration, Instant};

use super::icmp::is_timeout;
use super::session::{EchoProbe, EchoReceiver, EchoReply, EchoTransport};
use super::{read_stamp, write_stamp, ProbeError, PROBE_STAMP_BYTES};
use crate::sample::ProbeMethod;

pub struct UdpTransport {
    socket: UdpSocket,
    scratch: Vec<u8>,
}

impl UdpTransport {
    pub fn connect(reflector: SocketAddr) -> Result<Self, ProbeError> {
        let socket = UdpSocket::bind(SocketAddrV4::new(Ipv4Addr::UNSPECIFIED, 0))?;
        socket.connect(reflector)?;
        Ok(UdpTransport {
            socket,
            scratch: Vec::new(),
        })
    }
}

impl EchoTransport for UdpTransport {
    type Receiver = UdpReceiver;

    fn method(&self) -> ProbeMethod {
        ProbeMethod::UdpEcho
    }

    fn seq_tag(&self, seq: u64) -> u32 {
        seq as u32
    }

    fn send(&mut self, probe: &EchoProbe) -> io::Result<()> {
        self.scratch.resize(probe.payload_bytes as usize, 0);
        write_stamp(&mut self.scratch, probe.sent_at_us, probe.nonce);
        self.scratch[PROBE_STAMP_BYTES..PROBE_STAMP_BYTES + 4].copy_from_slice(&(probe.seq as u32).to_be_bytes());
        match self.socket.send(&self.scratch) {
            Ok(_) => Ok(()),
            // An earlier probe's ICMP port-unreachable surfaces on the next call.
            Err(e) if e.kind() == io::ErrorKind::ConnectionRefused => Ok(()),
            Err(e) => Err(e),
        }
    }

    fn receiver(&self) -> io::Result<UdpReceiver> {
        Ok(UdpReceiver {
            socket: self.socket.try_clone()?,
            buf: vec![0; 65_536],
        })
    }
}

pub struct UdpReceiver {
    socket: UdpSocket,
    buf: Vec<u8>,
}

impl EchoReceiver for UdpReceiver {
    fn recv(&mut self, timeout: Duration) -> io::Result<Option<EchoReply>> {
        let deadline = Instant::now() + timeout;
        loop {
            let now = Instant::now();
            if now >= deadline {
                return Ok(None);
            }
            self.socket.set_read_timeout(Some(deadline - now))?;
            let n = match self.socket.recv(&mut self.buf) {
                Ok(n) => n,
                Err(e) if is_timeout(&e) || e.kind() == io::ErrorKind::ConnectionRefused => continue,
                Err(e) => return Err(e),
            };
            let received_at = Instant::now();
            let datagram = &self.buf[..n];
            if n < PROBE_STAMP_BYTES + 4 {
                continue;
            }
            let Some((sent_at_us, nonce)) = read_stamp(datagram) else {
                continue;
            };
            let seq_tag = u32::from_be_bytes(datagram[12..16].try_into().expect("4 bytes"));
            return Ok(Some(EchoReply {
                seq_tag,
                nonce,
                sent_at_us,
                received_at,
            }));
        }
    }
}

/// Echoes every datagram on `socket` back to its sender until `stop` is set.
pub fn serve_reflector(socket: &UdpSocket, stop: &AtomicBool) -> io::Result<u64> {
    let mut buf = vec![0u8; 65_536];
    let mut echoed = 0;
    socket.set_read_timeout(Some(Duration::from_millis(100)))?;
    while !stop.load(Ordering::Relaxed) {
        match socket.recv_from(&mut buf) {
            Ok((n, peer)) => {
                // A vanished peer must not stop the reflector.
                if socket.send_to(&buf[..n], peer).is_ok() {
                    echoed += 1;
                }
            }
            Err(e) if is_timeout(&e) || e.kind() == io::ErrorKind::ConnectionReset => {}
            Err(e) => return Err(e),
        }
    }
    Ok(echoed)
}
