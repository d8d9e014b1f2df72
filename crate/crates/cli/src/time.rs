//! Timestamp parsing and formatting. Everything internal is UTC seconds
//! since the epoch; ISO-8601 appears only at the file boundary.

use chrono::{DateTime, NaiveDateTime, SecondsFormat, Utc};

use crate::error::{CliError, Result};

/// Parse an ISO-8601 timestamp. Offsets are honored; a naive timestamp
/// (no zone suffix) is read as UTC.
pub fn parse_timestamp(text: &str) -> Result<f64> {
    let text = text.trim();
    if let Ok(dt) = DateTime::parse_from_rfc3339(text) {
        return Ok(epoch_seconds(dt.with_timezone(&Utc)));
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S%.f", "%Y-%m-%d %H:%M:%S%.f"] {
        if let Ok(naive) = NaiveDateTime::parse_from_str(text, fmt) {
            return Ok(epoch_seconds(naive.and_utc()));
        }
    }
    Err(CliError::Usage(format!("unparseable timestamp {text:?} (expected ISO-8601)")))
}

fn epoch_seconds(dt: DateTime<Utc>) -> f64 {
    dt.timestamp() as f64 + f64::from(dt.timestamp_subsec_nanos()) * 1e-9
}

/// Format epoch seconds as an ISO-8601 UTC timestamp with whole-second
/// precision (the grid is whole-second anyway).
pub fn format_timestamp(epoch: f64) -> String {
    let secs = epoch.round() as i64;
    DateTime::<Utc>::from_timestamp(secs, 0)
        .map(|dt| dt.to_rfc3339_opts(SecondsFormat::Secs, true))
        .unwrap_or_else(|| format!("{epoch}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_rfc3339_with_and_without_zone() {
        assert_eq!(parse_timestamp("1970-01-01T00:05:00Z").unwrap(), 300.0);
        assert_eq!(parse_timestamp("1970-01-01T00:05:00").unwrap(), 300.0);
        assert_eq!(parse_timestamp("1970-01-01T01:05:00+01:00").unwrap(), 300.0);
        assert_eq!(parse_timestamp("1970-01-01 00:05:00").unwrap(), 300.0);
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_timestamp("yesterday").is_err());
        assert!(parse_timestamp("").is_err());
    }

    #[test]
    fn round_trips_grid_times() {
        let t = 1_704_067_200.0 + 42.0 * 300.0;
        assert_eq!(parse_timestamp(&format_timestamp(t)).unwrap(), t);
        assert_eq!(format_timestamp(0.0), "1970-01-01T00:00:00Z");
    }
}
