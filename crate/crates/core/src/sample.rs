use serde::{Deserialize, Serialize};

/// How a sample was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeMethod {
    IcmpEcho,
    UdpEcho,
    Simulated,
    /// Loaded from an external CSV dataset.
    Imported,
}

impl ProbeMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            ProbeMethod::IcmpEcho => "icmp_echo",
            ProbeMethod::UdpEcho => "udp_echo",
            ProbeMethod::Simulated => "simulated",
            ProbeMethod::Imported => "imported",
        }
    }
}

impl std::fmt::Display for ProbeMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ProbeMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "icmp" | "icmp_echo" => Ok(ProbeMethod::IcmpEcho),
            "udp" | "udp_echo" => Ok(ProbeMethod::UdpEcho),
            "simulated" => Ok(ProbeMethod::Simulated),
            "imported" => Ok(ProbeMethod::Imported),
            other => Err(format!("unknown probe method `{other}`")),
        }
    }
}

/// One probe observation.
///
/// `rtt_s` is `None` exactly when the probe was lost. `sent_at_us` is a
/// monotonic offset from the start of the session, in microseconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeSample {
    pub path_id: String,
    pub seq: u64,
    pub payload_bytes: u32,
    pub wire_bits: u64,
    pub sent_at_us: u64,
    pub rtt_s: Option<f64>,
    pub lost: bool,
    pub method: ProbeMethod,
}

impl ProbeSample {
    pub fn delivered(
        path_id: impl Into<String>,
        seq: u64,
        payload_bytes: u32,
        wire_bits: u64,
        sent_at_us: u64,
        rtt_s: f64,
        method: ProbeMethod,
    ) -> Self {
        ProbeSample {
            path_id: path_id.into(),
            seq,
            payload_bytes,
            wire_bits,
            sent_at_us,
            rtt_s: Some(rtt_s),
            lost: false,
            method,
        }
    }

    pub fn lost(
        path_id: impl Into<String>,
        seq: u64,
        payload_bytes: u32,
        wire_bits: u64,
        sent_at_us: u64,
        method: ProbeMethod,
    ) -> Self {
        ProbeSample {
            path_id: path_id.into(),
            seq,
            payload_bytes,
            wire_bits,
            sent_at_us,
            rtt_s: None,
            lost: true,
            method,
        }
    }

    /// Delay of a delivered probe; `None` for lost ones.
    pub fn delay(&self) -> Option<f64> {
        if self.lost {
            None
        } else {
            self.rtt_s
        }
    }

    /// Checks `lost <=> rtt absent` and `wire_bits >= 8 * payload_bytes`.
    pub fn is_consistent(&self) -> bool {
        self.lost == self.rtt_s.is_none()
            && self.wire_bits >= 8 * u64::from(self.payload_bytes)
            && self.rtt_s.is_none_or(|d| d.is_finite() && d >= 0.0)
    }
}
