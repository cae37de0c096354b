//! Live delay probing with variable-size echo packets, and TTL hop counting.
//!
//! A session sends `count_per_size` probes of every size, interleaving the sizes
//! round-robin so each size sees the same congestion epoch. Each echo payload
//! starts with an 8-byte big-endian send timestamp (µs since session start) and
//! a 4-byte session nonce; the rest is zero padding. Replies are matched on
//! (identifier, sequence, nonce) and timed with a monotonic clock.

mod hops;
mod icmp;
mod session;
mod udp;

use std::net::{IpAddr, Ipv4Addr, ToSocketAddrs};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sample::{ProbeMethod, ProbeSample};

pub use hops::{discover_hops, discover_hops_with, HopProber, HopReply};
pub use icmp::{checksum, IcmpTransport};
pub use session::{EchoProbe, EchoReceiver, EchoReply, EchoTransport, Session};
pub use udp::{serve_reflector, UdpTransport};

pub const IPV4_HEADER_BYTES: u32 = 20;
pub const ICMP_HEADER_BYTES: u32 = 8;
pub const UDP_HEADER_BYTES: u32 = 8;

/// Timestamp (8) + nonce (4).
pub const PROBE_STAMP_BYTES: usize = 12;
/// UDP probes also carry a 4-byte sequence number after the stamp.
pub const UDP_PROBE_MIN_BYTES: usize = PROBE_STAMP_BYTES + 4;

pub const DEFAULT_SIZES: [u32; 2] = [100, 1124];
pub const DEFAULT_COUNT: usize = 30;
pub const DEFAULT_GAP_S: f64 = 0.05;
pub const DEFAULT_TIMEOUT_S: f64 = 2.0;
pub const DEFAULT_UDP_PORT: u16 = 7007;

#[derive(Debug, Error)]
pub enum ProbeError {
    #[error("cannot resolve `{0}` to an IPv4 address")]
    ResolveFailure(String),
    #[error("permission denied opening a {0} socket (raw ICMP needs root or CAP_NET_RAW; try --method udp)")]
    PermissionDenied(&'static str),
    #[error("all {0} probes were lost")]
    AllProbesLost(usize),
    #[error("target did not answer within {0} hops")]
    NoReply(u8),
    #[error("invalid probe plan: {0}")]
    InvalidPlan(String),
    #[error("socket error: {0}")]
    Io(#[from] std::io::Error),
}

/// On-the-wire IPv4 size of a probe carrying `payload_bytes`, in bits.
pub fn wire_size(payload_bytes: u32, method: ProbeMethod) -> u64 {
    let headers = match method {
        ProbeMethod::IcmpEcho | ProbeMethod::Simulated => ICMP_HEADER_BYTES + IPV4_HEADER_BYTES,
        ProbeMethod::UdpEcho => UDP_HEADER_BYTES + IPV4_HEADER_BYTES,
        ProbeMethod::Imported => 0,
    };
    8 * (u64::from(payload_bytes) + u64::from(headers))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbePlan {
    pub target: String,
    pub sizes_payload_bytes: Vec<u32>,
    pub count_per_size: usize,
    pub inter_probe_gap_s: f64,
    pub timeout_s: f64,
    pub method: ProbeMethod,
    /// Reflector port for `udp_echo`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub udp_port: Option<u16>,
}

impl ProbePlan {
    pub fn new(target: impl Into<String>) -> Self {
        ProbePlan {
            target: target.into(),
            sizes_payload_bytes: DEFAULT_SIZES.to_vec(),
            count_per_size: DEFAULT_COUNT,
            inter_probe_gap_s: DEFAULT_GAP_S,
            timeout_s: DEFAULT_TIMEOUT_S,
            method: ProbeMethod::IcmpEcho,
            udp_port: None,
        }
    }

    pub fn validate(&self) -> Result<(), ProbeError> {
        let invalid = |m: String| Err(ProbeError::InvalidPlan(m));
        let min_payload = match self.method {
            ProbeMethod::IcmpEcho => PROBE_STAMP_BYTES,
            ProbeMethod::UdpEcho => UDP_PROBE_MIN_BYTES,
            other => return invalid(format!("method {other} cannot be probed live")),
        };
        if self.sizes_payload_bytes.is_empty() {
            return invalid("no probe sizes".into());
        }
        let mut seen = std::collections::HashSet::new();
        for &s in &self.sizes_payload_bytes {
            if !seen.insert(s) {
                return invalid(format!("duplicate size {s}"));
            }
            if (s as usize) < min_payload {
                return invalid(format!("payload {s} is below the {min_payload}-byte probe stamp"));
            }
            if s > 65_507 {
                return invalid(format!("payload {s} does not fit an IPv4 datagram"));
            }
        }
        if self.count_per_size == 0 {
            return invalid("count must be at least 1".into());
        }
        if !(self.inter_probe_gap_s.is_finite() && self.inter_probe_gap_s > 0.0) {
            return invalid("gap must be positive".into());
        }
        if !(self.timeout_s.is_finite() && self.timeout_s > self.inter_probe_gap_s) {
            return invalid("timeout must exceed the inter-probe gap".into());
        }
        Ok(())
    }

    pub fn total_probes(&self) -> usize {
        self.sizes_payload_bytes.len() * self.count_per_size
    }
}

pub fn resolve_ipv4(target: &str) -> Result<Ipv4Addr, ProbeError> {
    if let Ok(ip) = target.parse::<Ipv4Addr>() {
        return Ok(ip);
    }
    (target, 0)
        .to_socket_addrs()
        .map_err(|_| ProbeError::ResolveFailure(target.to_string()))?
        .find_map(|a| match a.ip() {
            IpAddr::V4(v4) => Some(v4),
            IpAddr::V6(_) => None,
        })
        .ok_or_else(|| ProbeError::ResolveFailure(target.to_string()))
}

/// Runs a live probing session against `plan.target`.
pub fn run_session(plan: &ProbePlan) -> Result<Vec<ProbeSample>, ProbeError> {
    plan.validate()?;
    let ip = resolve_ipv4(&plan.target)?;
    let path_id = plan.target.clone();
    match plan.method {
        ProbeMethod::IcmpEcho => Session::new(plan, path_id).run(IcmpTransport::open(ip)?),
        ProbeMethod::UdpEcho => {
            let port = plan.udp_port.unwrap_or(DEFAULT_UDP_PORT);
            Session::new(plan, path_id).run(UdpTransport::connect((ip, port).into())?)
        }
        _ => unreachable!("rejected by validate"),
    }
}

/// Writes the probe stamp into `buf`: send time, nonce, zero padding.
pub(crate) fn write_stamp(buf: &mut [u8], sent_at_us: u64, nonce: u32) {
    buf.fill(0);
    if buf.len() >= PROBE_STAMP_BYTES {
        buf[..8].copy_from_slice(&sent_at_us.to_be_bytes());
        buf[8..12].copy_from_slice(&nonce.to_be_bytes());
    }
}

pub(crate) fn read_stamp(buf: &[u8]) -> Option<(u64, u32)> {
    if buf.len() < PROBE_STAMP_BYTES {
        return None;
    }
    let ts = u64::from_be_bytes(buf[..8].try_into().ok()?);
    let nonce = u32::from_be_bytes(buf[8..12].try_into().ok()?);
    Some((ts, nonce))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wire_sizes() {
        assert_eq!(wire_size(100, ProbeMethod::IcmpEcho), 1024);
        assert_eq!(wire_size(1124, ProbeMethod::IcmpEcho), 9216);
        assert_eq!(wire_size(0, ProbeMethod::UdpEcho), 224);
    }

    #[test]
    fn plan_defaults_are_valid() {
        let p = ProbePlan::new("127.0.0.1");
        assert_eq!(p.sizes_payload_bytes, vec![100, 1124]);
        assert_eq!(p.total_probes(), 60);
        p.validate().unwrap();
    }

    #[test]
    fn plan_invariants() {
        let mut p = ProbePlan::new("h");
        p.sizes_payload_bytes = vec![100, 100];
        assert!(matches!(p.validate(), Err(ProbeError::InvalidPlan(m)) if m.contains("duplicate")));

        let mut p = ProbePlan::new("h");
        p.timeout_s = 0.01;
        assert!(p.validate().is_err());

        let mut p = ProbePlan::new("h");
        p.count_per_size = 0;
        assert!(p.validate().is_err());

        let mut p = ProbePlan::new("h");
        p.method = ProbeMethod::UdpEcho;
        p.sizes_payload_bytes = vec![12, 100];
        assert!(p.validate().is_err());
    }

    #[test]
    fn stamp_layout() {
        let mut buf = [0xffu8; 20];
        write_stamp(&mut buf, 0x0102_0304_0506_0708, 0xdead_beef);
        assert_eq!(&buf[..12], &[1, 2, 3, 4, 5, 6, 7, 8, 0xde, 0xad, 0xbe, 0xef]);
        assert!(buf[12..].iter().all(|&b| b == 0));
        assert_eq!(read_stamp(&buf), Some((0x0102_0304_0506_0708, 0xdead_beef)));
        assert_eq!(read_stamp(&buf[..11]), None);
    }

    #[test]
    fn unresolvable_target() {
        assert!(matches!(
            resolve_ipv4("no-such-host.invalid"),
            Err(ProbeError::ResolveFailure(_))
        ));
        assert_eq!(resolve_ipv4("127.0.0.1").unwrap(), Ipv4Addr::LOCALHOST);
    }
}
