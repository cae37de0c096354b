//! `key=value` configuration file for CLI defaults.
//!
//! ```text
//! # delaybw.conf
//! sizes = 100,1124
//! count = 30
//! gap = 0.05
//! timeout = 2.0
//! method = icmp
//! format = text
//! ```
//!
//! Command-line flags override the file; the file overrides built-in defaults.

use std::path::Path;

use crate::probe::{DEFAULT_COUNT, DEFAULT_GAP_S, DEFAULT_SIZES, DEFAULT_TIMEOUT_S, DEFAULT_UDP_PORT};
use crate::sample::ProbeMethod;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum OutputFormat {
    #[default]
    Text,
    Json,
    Csv,
}

impl std::str::FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "text" => Ok(OutputFormat::Text),
            "json" => Ok(OutputFormat::Json),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(format!("unknown format `{other}` (text|json|csv)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliConfig {
    pub sizes: Vec<u32>,
    pub count: usize,
    pub gap_s: f64,
    pub timeout_s: f64,
    pub method: ProbeMethod,
    pub udp_port: u16,
    pub min_samples: usize,
    pub max_ttl: u8,
    pub window: usize,
    pub format: OutputFormat,
    pub verbosity: u8,
}

pub const DEFAULT_MIN_SAMPLES: usize = 30;
pub const DEFAULT_MAX_TTL: u8 = 30;
pub const DEFAULT_WINDOW: usize = 10;

impl Default for CliConfig {
    fn default() -> Self {
        CliConfig {
            sizes: DEFAULT_SIZES.to_vec(),
            count: DEFAULT_COUNT,
            gap_s: DEFAULT_GAP_S,
            timeout_s: DEFAULT_TIMEOUT_S,
            method: ProbeMethod::IcmpEcho,
            udp_port: DEFAULT_UDP_PORT,
            min_samples: DEFAULT_MIN_SAMPLES,
            max_ttl: DEFAULT_MAX_TTL,
            window: DEFAULT_WINDOW,
            format: OutputFormat::Text,
            verbosity: 0,
        }
    }
}

pub fn parse_sizes(s: &str) -> Result<Vec<u32>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<u32>().map_err(|_| format!("bad size `{}`", t.trim())))
        .collect()
}

impl CliConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut cfg = CliConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| format!("config line {}: expected key=value", i + 1))?;
            let (key, value) = (key.trim(), value.trim());
            let err = |e: String| format!("config line {}: {key}: {e}", i + 1);
            fn num<T: std::str::FromStr>(v: &str) -> Result<T, String> {
                v.parse().map_err(|_| format!("bad value `{v}`"))
            }
            match key {
                "sizes" => cfg.sizes = parse_sizes(value).map_err(err)?,
                "count" => cfg.count = num(value).map_err(err)?,
                "gap" => cfg.gap_s = num(value).map_err(err)?,
                "timeout" => cfg.timeout_s = num(value).map_err(err)?,
                "method" => cfg.method = value.parse().map_err(err)?,
                "port" => cfg.udp_port = num(value).map_err(err)?,
                "min_samples" => cfg.min_samples = num(value).map_err(err)?,
                "max_ttl" => cfg.max_ttl = num(value).map_err(err)?,
                "window" => cfg.window = num(value).map_err(err)?,
                "format" => cfg.format = value.parse().map_err(err)?,
                "verbosity" => cfg.verbosity = num(value).map_err(err)?,
                other => return Err(format!("config line {}: unknown key `{other}`", i + 1)),
            }
        }
        Ok(cfg)
    }
}
