//! ISO-8601 duration parsing for delays and deadlines.
//!
//! Accepted forms: a bare non-negative integer (raw ticks, i.e. seconds),
//! or `PnYnMnWnDTnHnMnS` with any subset of components. The calendar-free
//! conversion table is fixed: a year is 365 days, a month 30 days, a week
//! 7 days; there is no larger unit on a chain clock.

use super::ExprError;

const SECOND: u64 = 1;
const MINUTE: u64 = 60;
const HOUR: u64 = 3_600;
const DAY: u64 = 86_400;
const WEEK: u64 = 7 * DAY;
const MONTH: u64 = 30 * DAY;
const YEAR: u64 = 365 * DAY;

/// Parses a duration string into ticks (seconds).
pub fn parse_duration(text: &str) -> Result<u64, ExprError> {
    let err = |position: usize, message: &str| ExprError::Syntax {
        position,
        message: format!("duration: {message}"),
    };
    let bytes = text.as_bytes();
    if bytes.is_empty() {
        return Err(err(0, "empty"));
    }
    if bytes.iter().all(|b| b.is_ascii_digit()) {
        return text
            .parse::<u64>()
            .map_err(|_| err(0, "tick count out of range"));
    }
    if bytes[0] != b'P' {
        return Err(err(0, "expected P or a bare tick count"));
    }

    let mut pos = 1;
    let mut in_time = false;
    let mut total: u64 = 0;
    let mut seen_component = false;
    // Components must appear in order; M means months before T, minutes after.
    let date_units: &[(u8, u64)] = &[(b'Y', YEAR), (b'M', MONTH), (b'W', WEEK), (b'D', DAY)];
    let time_units: &[(u8, u64)] = &[(b'H', HOUR), (b'M', MINUTE), (b'S', SECOND)];
    let mut unit_cursor = 0;

    while pos < bytes.len() {
        if !in_time && bytes[pos] == b'T' {
            in_time = true;
            unit_cursor = 0;
            pos += 1;
            if pos == bytes.len() {
                return Err(err(pos, "T must be followed by a time component"));
            }
            continue;
        }
        let digits_start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        if pos == digits_start {
            return Err(err(pos, "expected digits"));
        }
        if pos == bytes.len() {
            return Err(err(pos, "number without a unit letter"));
        }
        let n: u64 = text[digits_start..pos]
            .parse()
            .map_err(|_| err(digits_start, "component out of range"))?;
        let unit = bytes[pos];
        let table = if in_time { time_units } else { date_units };
        let found = table[unit_cursor..].iter().position(|(u, _)| *u == unit);
        let Some(offset) = found else {
            return Err(err(
                pos,
                if table.iter().any(|(u, _)| *u == unit) {
                    "components out of order"
                } else {
                    "unknown or misplaced unit letter"
                },
            ));
        };
        let scale = table[unit_cursor + offset].1;
        unit_cursor += offset + 1;
        total = n
            .checked_mul(scale)
            .and_then(|part| total.checked_add(part))
            .ok_or_else(|| err(digits_start, "duration overflows the tick range"))?;
        seen_component = true;
        pos += 1;
    }

    if !seen_component {
        return Err(err(1, "P requires at least one component"));
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn documented_table() {
        assert_eq!(parse_duration("P1D").unwrap(), 86_400);
        assert_eq!(parse_duration("PT0S").unwrap(), 0);
        assert_eq!(parse_duration("P1M").unwrap(), 2_592_000); // 30-day months
        assert_eq!(parse_duration("P1Y").unwrap(), 31_536_000); // 365-day years
        assert_eq!(parse_duration("P1W").unwrap(), 604_800);
        assert_eq!(parse_duration("PT1H").unwrap(), 3_600);
        assert_eq!(parse_duration("PT1M").unwrap(), 60);
        assert_eq!(parse_duration("P7D").unwrap(), 604_800);
    }

    #[test]
    fn combined_components() {
        assert_eq!(parse_duration("P1DT2H3M4S").unwrap(), 86_400 + 7_200 + 180 + 4);
        assert_eq!(parse_duration("P1Y2M3W4D").unwrap(), YEAR + 2 * MONTH + 3 * WEEK + 4 * DAY);
        assert_eq!(parse_duration("P2DT30S").unwrap(), 2 * 86_400 + 30);
    }

    #[test]
    fn bare_ticks() {
        assert_eq!(parse_duration("0").unwrap(), 0);
        assert_eq!(parse_duration("86400").unwrap(), 86_400);
    }

    #[test]
    fn rejects_malformed() {
        for bad in ["", "P", "PT", "1D", "P1", "PD", "P1S", "PT1D", "P1M2Y", "P-1D", "Q1D", "P1DT"] {
            assert!(parse_duration(bad).is_err(), "{bad:?} should not parse");
        }
    }

    #[test]
    fn overflow_is_an_error() {
        assert!(parse_duration("P999999999999999999Y").is_err());
        assert!(parse_duration("99999999999999999999999").is_err());
    }
}
