//! Unit conversions and human-readable formatting.

pub const BITS_PER_BYTE: u64 = 8;

pub fn bytes_to_bits(bytes: u64) -> u64 {
    bytes * BITS_PER_BYTE
}

/// Formats a rate with an SI bit-rate suffix and four significant digits,
/// e.g. `341.3 kbit/s`.
pub fn format_rate(bps: f64) -> String {
    if !bps.is_finite() {
        return format!("{bps} bit/s");
    }
    const PREFIXES: [(f64, &str); 4] = [(1e12, "Tbit/s"), (1e9, "Gbit/s"), (1e6, "Mbit/s"), (1e3, "kbit/s")];
    let (scale, unit) = PREFIXES
        .iter()
        .copied()
        .find(|(scale, _)| bps.abs() >= *scale)
        .unwrap_or((1.0, "bit/s"));
    format!("{} {unit}", sig4(bps / scale))
}

/// Four significant digits without switching to exponent notation.
fn sig4(value: f64) -> String {
    if value == 0.0 {
        return "0.000".to_string();
    }
    let magnitude = value.abs().log10().floor() as i32;
    let decimals = (3 - magnitude).max(0) as usize;
    let rounded = format!("{value:.decimals$}");
    // 999.96 rounds up to 1000.0 and gains a digit.
    let int_digits = rounded.trim_start_matches('-').split('.').next().map_or(0, str::len);
    if int_digits > (magnitude + 1).max(1) as usize && decimals > 0 {
        let decimals = decimals - 1;
        format!("{value:.decimals$}")
    } else {
        rounded
    }
}

/// Seconds rendered as milliseconds with microsecond resolution.
pub fn format_ms(seconds: f64) -> String {
    format!("{:.3} ms", seconds * 1e3)
}
