//! ICMP echo (RFC 792) over raw or unprivileged datagram sockets.

use std::io::{self, Read};
use std::net::{Ipv4Addr, SocketAddrV4};
use std::sync::atomic::{AtomicU16, Ordering};
use std::time::{Duration, Instant};

use socket2::{Domain, Protocol, SockAddr, Socket, Type};

use super::session::{EchoProbe, EchoReceiver, EchoReply, EchoTransport};
use super::{read_stamp, write_stamp, ProbeError, ICMP_HEADER_BYTES};
use crate::sample::ProbeMethod;

pub(crate) const ECHO_REPLY: u8 = 0;
pub(crate) const DEST_UNREACHABLE: u8 = 3;
pub(crate) const ECHO_REQUEST: u8 = 8;
pub(crate) const TIME_EXCEEDED: u8 = 11;

static SESSION_COUNTER: AtomicU16 = AtomicU16::new(0);

/// A 16-bit identifier unique to this process and session.
pub(crate) fn session_identifier() -> u16 {
    let pid = std::process::id() as u16;
    pid ^ SESSION_COUNTER.fetch_add(1, Ordering::Relaxed).wrapping_mul(0x9e37)
}

/// Internet checksum: ones' complement of the ones' complement sum of 16-bit words.
pub fn checksum(data: &[u8]) -> u16 {
    let mut sum: u32 = data
        .chunks(2)
        .map(|w| u32::from(u16::from_be_bytes([w[0], *w.get(1).unwrap_or(&0)])))
        .sum();
    while sum >> 16 != 0 {
        sum = (sum & 0xffff) + (sum >> 16);
    }
    !(sum as u16)
}

pub(crate) fn echo_request(identifier: u16, sequence: u16, payload: &[u8]) -> Vec<u8> {
    let mut pkt = Vec::with_capacity(ICMP_HEADER_BYTES as usize + payload.len());
    pkt.extend_from_slice(&[ECHO_REQUEST, 0, 0, 0]);
    pkt.extend_from_slice(&identifier.to_be_bytes());
    pkt.extend_from_slice(&sequence.to_be_bytes());
    pkt.extend_from_slice(payload);
    let c = checksum(&pkt);
    pkt[2..4].copy_from_slice(&c.to_be_bytes());
    pkt
}

/// An ICMP message as seen by the prober.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum IcmpMessage<'a> {
    EchoReply {
        identifier: u16,
        sequence: u16,
        payload: &'a [u8],
    },
    /// Time exceeded or destination unreachable quoting one of our requests.
    Error {
        kind: u8,
        from: Option<Ipv4Addr>,
        identifier: u16,
        sequence: u16,
    },
    Other,
}

/// Splits a received buffer into (IPv4 source, ICMP message). Raw sockets
/// deliver the IPv4 header; datagram ICMP sockets do not.
pub(crate) fn split_ip(buf: &[u8], has_ip_header: bool) -> Option<(Option<Ipv4Addr>, &[u8])> {
    if !has_ip_header {
        return Some((None, buf));
    }
    let first = *buf.first()?;
    if first >> 4 != 4 {
        return None;
    }
    let ihl = usize::from(first & 0x0f) * 4;
    if buf.len() < ihl || ihl < 20 {
        return None;
    }
    let src = Ipv4Addr::new(buf[12], buf[13], buf[14], buf[15]);
    Some((Some(src), &buf[ihl..]))
}

pub(crate) fn parse_icmp(icmp: &[u8], from: Option<Ipv4Addr>) -> IcmpMessage<'_> {
    if icmp.len() < 8 {
        return IcmpMessage::Other;
    }
    match icmp[0] {
        ECHO_REPLY => IcmpMessage::EchoReply {
            identifier: u16::from_be_bytes([icmp[4], icmp[5]]),
            sequence: u16::from_be_bytes([icmp[6], icmp[7]]),
            payload: &icmp[8..],
        },
        kind @ (TIME_EXCEEDED | DEST_UNREACHABLE) => {
            // Quoted original: IPv4 header followed by the first 8 bytes of our request.
            let Some((_, orig)) = split_ip(&icmp[8..], true) else {
                return IcmpMessage::Other;
            };
            if orig.len() < 8 || orig[0] != ECHO_REQUEST {
                return IcmpMessage::Other;
            }
            IcmpMessage::Error {
                kind,
                from,
                identifier: u16::from_be_bytes([orig[4], orig[5]]),
                sequence: u16::from_be_bytes([orig[6], orig[7]]),
            }
        }
        _ => IcmpMessage::Other,
    }
}

/// Opens an ICMPv4 socket, preferring raw and falling back to the
/// unprivileged datagram kind. Returns the socket and whether replies
/// include the IPv4 header.
pub(crate) fn open_icmp_socket(require_raw: bool) -> Result<(Socket, bool), ProbeError> {
    match Socket::new(Domain::IPV4, Type::RAW, Some(Protocol::ICMPV4)) {
        Ok(s) => Ok((s, true)),
        Err(e) if is_permission(&e) && !require_raw => {
            match Socket::new(Domain::IPV4, Type::DGRAM, Some(Protocol::ICMPV4)) {
                Ok(s) => Ok((s, false)),
                Err(e) if is_permission(&e) => Err(ProbeError::PermissionDenied("ICMP")),
                Err(e) => Err(e.into()),
            }
        }
        Err(e) if is_permission(&e) => Err(ProbeError::PermissionDenied("raw ICMP")),
        Err(e) => Err(e.into()),
    }
}

fn is_permission(e: &io::Error) -> bool {
    e.kind() == io::ErrorKind::PermissionDenied || e.raw_os_error() == Some(1)
}

pub(crate) fn is_timeout(e: &io::Error) -> bool {
    matches!(
        e.kind(),
        io::ErrorKind::WouldBlock | io::ErrorKind::TimedOut | io::ErrorKind::Interrupted
    )
}

/// Reads one datagram, or `None` on timeout.
pub(crate) fn recv_timeout(socket: &mut Socket, buf: &mut [u8], timeout: Duration) -> io::Result<Option<usize>> {
    socket.set_read_timeout(Some(timeout.max(Duration::from_micros(1))))?;
    match socket.read(buf) {
        Ok(n) => Ok(Some(n)),
        Err(e) if is_timeout(&e) => Ok(None),
        Err(e) => Err(e),
    }
}

pub(crate) fn send_to(socket: &Socket, packet: &[u8], dest: Ipv4Addr) -> io::Result<()> {
    let addr = SockAddr::from(SocketAddrV4::new(dest, 0));
    socket.send_to(packet, &addr).map(|_| ())
}

/// Echo transport over ICMP.
pub struct IcmpTransport {
    socket: Socket,
    dest: Ipv4Addr,
    identifier: u16,
    raw: bool,
    scratch: Vec<u8>,
}

impl IcmpTransport {
    pub fn open(dest: Ipv4Addr) -> Result<Self, ProbeError> {
        let (socket, raw) = open_icmp_socket(false)?;
        Ok(IcmpTransport {
            socket,
            dest,
            identifier: session_identifier(),
            raw,
            scratch: Vec::new(),
        })
    }
}

impl EchoTransport for IcmpTransport {
    type Receiver = IcmpReceiver;

    fn method(&self) -> ProbeMethod {
        ProbeMethod::IcmpEcho
    }

    fn seq_tag(&self, seq: u64) -> u32 {
        u32::from(seq as u16)
    }

    fn send(&mut self, probe: &EchoProbe) -> io::Result<()> {
        self.scratch.resize(probe.payload_bytes as usize, 0);
        write_stamp(&mut self.scratch, probe.sent_at_us, probe.nonce);
        let pkt = echo_request(self.identifier, probe.seq as u16, &self.scratch);
        send_to(&self.socket, &pkt, self.dest)
    }

    fn receiver(&self) -> io::Result<IcmpReceiver> {
        Ok(IcmpReceiver {
            socket: self.socket.try_clone()?,
            identifier: self.identifier,
            raw: self.raw,
            buf: vec![0; 65_536],
        })
    }
}

pub struct IcmpReceiver {
    socket: Socket,
    identifier: u16,
    raw: bool,
    buf: Vec<u8>,
}

impl EchoReceiver for IcmpReceiver {
    fn recv(&mut self, timeout: Duration) -> io::Result<Option<EchoReply>> {
        let deadline = Instant::now() + timeout;
        loop {
            let now = Instant::now();
            if now >= deadline {
                return Ok(None);
            }
            let Some(n) = recv_timeout(&mut self.socket, &mut self.buf, deadline - now)? else {
                return Ok(None);
            };
            let received_at = Instant::now();
            let Some((from, icmp)) = split_ip(&self.buf[..n], self.raw) else {
                continue;
            };
            if let IcmpMessage::EchoReply {
                identifier,
                sequence,
                payload,
            } = parse_icmp(icmp, from)
            {
                // Datagram sockets rewrite the identifier; the nonce still guards matching.
                if self.raw && identifier != self.identifier {
                    continue;
                }
                if let Some((sent_at_us, nonce)) = read_stamp(payload) {
                    return Ok(Some(EchoReply {
                        seq_tag: u32::from(sequence),
                        nonce,
                        sent_at_us,
                        received_at,
                    }));
                }
            }
        }
    }
}
