//! Hop counting by TTL-limited echo requests, as traceroute does.

use std::net::{IpAddr, Ipv4Addr};
use std::time::{Duration, Instant};

use socket2::Socket;

use super::icmp::{
    echo_request, open_icmp_socket, parse_icmp, recv_timeout, send_to, session_identifier, split_ip, IcmpMessage,
};
use super::{resolve_ipv4, write_stamp, ProbeError, PROBE_STAMP_BYTES};

/// What came back for one TTL.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HopReply {
    /// The target itself answered.
    Target,
    /// An intermediate router reported the TTL expiring.
    Router(IpAddr),
    /// Nothing within the timeout.
    Silent,
}

pub trait HopProber {
    fn probe(&mut self, ttl: u8) -> Result<HopReply, ProbeError>;
}

/// Smallest TTL at which the target replies. Silent or router hops in
/// between only advance the search.
pub fn discover_hops_with<P: HopProber>(prober: &mut P, max_ttl: u8) -> Result<u8, ProbeError> {
    for ttl in 1..=max_ttl {
        if prober.probe(ttl)? == HopReply::Target {
            return Ok(ttl);
        }
    }
    Err(ProbeError::NoReply(max_ttl))
}

pub fn discover_hops(target: &str, max_ttl: u8, timeout: Duration) -> Result<u8, ProbeError> {
    let dest = resolve_ipv4(target)?;
    let mut prober = IcmpHopProber::open(dest, timeout)?;
    discover_hops_with(&mut prober, max_ttl)
}

/// TTL prober over a raw ICMP socket (time-exceeded messages are only
/// visible there).
pub struct IcmpHopProber {
    socket: Socket,
    dest: Ipv4Addr,
    identifier: u16,
    timeout: Duration,
    buf: Vec<u8>,
}

impl IcmpHopProber {
    pub fn open(dest: Ipv4Addr, timeout: Duration) -> Result<Self, ProbeError> {
        let (socket, _) = open_icmp_socket(true)?;
        Ok(IcmpHopProber {
            socket,
            dest,
            identifier: session_identifier(),
            timeout,
            buf: vec![0; 65_536],
        })
    }
}

impl HopProber for IcmpHopProber {
    fn probe(&mut self, ttl: u8) -> Result<HopReply, ProbeError> {
        self.socket.set_ttl_v4(u32::from(ttl))?;
        let sequence = u16::from(ttl);
        let mut payload = [0u8; PROBE_STAMP_BYTES];
        write_stamp(&mut payload, 0, u32::from(ttl));
        let pkt = echo_request(self.identifier, sequence, &payload);
        send_to(&self.socket, &pkt, self.dest)?;

        let deadline = Instant::now() + self.timeout;
        loop {
            let now = Instant::now();
            if now >= deadline {
                return Ok(HopReply::Silent);
            }
            let Some(n) = recv_timeout(&mut self.socket, &mut self.buf, deadline - now)? else {
                return Ok(HopReply::Silent);
            };
            let Some((from, icmp)) = split_ip(&self.buf[..n], true) else {
                continue;
            };
            match parse_icmp(icmp, from) {
                IcmpMessage::EchoReply {
                    identifier,
                    sequence: s,
                    ..
                } if identifier == self.identifier && s == sequence => {
                    return Ok(HopReply::Target);
                }
                IcmpMessage::Error {
                    from,
                    identifier,
                    sequence: s,
                    ..
                } if identifier == self.identifier && s == sequence => {
                    return Ok(match from {
                        Some(addr) if addr == self.dest => HopReply::Target,
                        Some(addr) => HopReply::Router(IpAddr::V4(addr)),
                        None => HopReply::Silent,
                    });
                }
                _ => {}
            }
        }
    }
}
