//! C99 hexadecimal floating-point literals (`printf("%a")` style).

use std::fmt::Write;

const MANT_BITS: u32 = 52;
const EXP_BIAS: i64 = 1023;

/// Format `x` exactly, as glibc's `%a` does: `0x1.8p+1`, `0x0p+0`,
/// `0x0.0000000000001p-1022`, `inf`, `nan`.
pub fn format(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    let mut out = String::new();
    if x.is_sign_negative() {
        out.push('-');
    }
    if x.is_infinite() {
        out.push_str("inf");
        return out;
    }
    let bits = x.to_bits();
    let biased = ((bits >> MANT_BITS) & 0x7ff) as i64;
    let frac = bits & ((1u64 << MANT_BITS) - 1);
    let (lead, exp) = match (biased, frac) {
        (0, 0) => (0, 0),
        (0, _) => (0, 1 - EXP_BIAS),
        _ => (1, biased - EXP_BIAS),
    };
    let mut digits = format!("{frac:013x}");
    while digits.ends_with('0') {
        digits.pop();
    }
    write!(out, "0x{lead}").unwrap();
    if !digits.is_empty() {
        write!(out, ".{digits}").unwrap();
    }
    write!(out, "p{exp:+}").unwrap();
    out
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("not a hexadecimal float literal: {0:?}")]
pub struct ParseHexError(pub String);

/// Parse a hexadecimal float literal with round-to-nearest-even.
///
/// Accepts an optional sign, `0x`/`0X`, hex digits with an optional point,
/// and an optional binary exponent. `inf`/`infinity`/`nan` are accepted in
/// any case.
pub fn parse(s: &str) -> Result<f64, ParseHexError> {
    let err = || ParseHexError(s.to_string());
    let t = s.trim();
    let (negative, body) = match t.as_bytes().first() {
        Some(b'-') => (true, &t[1..]),
        Some(b'+') => (false, &t[1..]),
        _ => (false, t),
    };
    let signed = |v: f64| if negative { -v } else { v };
    match body.to_ascii_lowercase().as_str() {
        "inf" | "infinity" => return Ok(signed(f64::INFINITY)),
        "nan" => return Ok(signed(f64::NAN)),
        _ => {}
    }
    let body = body
        .strip_prefix("0x")
        .or_else(|| body.strip_prefix("0X"))
        .ok_or_else(err)?;
    let (digits, exp_part) = match body.find(['p', 'P']) {
        Some(i) => (&body[..i], Some(&body[i + 1..])),
        None => (body, None),
    };
    let mut exp: i64 = match exp_part {
        Some(e) if !e.is_empty() => e.parse::<i32>().map_err(|_| err())? as i64,
        Some(_) => return Err(err()),
        None => 0,
    };

    let mut mant: u64 = 0;
    let mut sticky = false;
    let mut seen_digit = false;
    let mut seen_point = false;
    for c in digits.chars() {
        if c == '.' {
            if seen_point {
                return Err(err());
            }
            seen_point = true;
            continue;
        }
        let d = c.to_digit(16).ok_or_else(err)? as u64;
        seen_digit = true;
        if mant >> 60 == 0 {
            mant = (mant << 4) | d;
            if seen_point {
                exp -= 4;
            }
        } else {
            sticky |= d != 0;
            if !seen_point {
                exp += 4;
            }
        }
    }
    if !seen_digit {
        return Err(err());
    }
    if mant == 0 {
        return Ok(signed(0.0));
    }

    // value = mant * 2^exp; normalize so bit 63 is the leading one.
    let lz = mant.leading_zeros();
    mant <<= lz;
    exp -= lz as i64;
    let lead_exp = exp + 63;
    if lead_exp > EXP_BIAS {
        return Ok(signed(f64::INFINITY));
    }
    // Bits kept: 53 for normals, fewer for subnormals.
    let keep: i64 = if lead_exp >= 1 - EXP_BIAS {
        53
    } else {
        53 - ((1 - EXP_BIAS) - lead_exp)
    };
    if keep < 0 {
        return Ok(signed(0.0));
    }
    let drop = (64 - keep) as u32;
    let (mut kept, half, rest) = if drop >= 64 {
        (0u64, mant >> 63 == 1, mant << 1 != 0 || sticky)
    } else {
        let kept = mant >> drop;
        let dropped = mant & ((1u64 << drop) - 1);
        let half_bit = 1u64 << (drop - 1);
        (kept, dropped & half_bit != 0, (dropped & (half_bit - 1)) != 0 || sticky)
    };
    if half && (rest || kept & 1 == 1) {
        kept += 1;
    }

    let bits = if keep == 53 {
        // kept in [2^52, 2^53]; a carry out bumps the exponent.
        let (kept, lead_exp) = if kept >> 53 == 1 {
            (kept >> 1, lead_exp + 1)
        } else {
            (kept, lead_exp)
        };
        if lead_exp > EXP_BIAS {
            return Ok(signed(f64::INFINITY));
        }
        (((lead_exp + EXP_BIAS) as u64) << MANT_BITS) | (kept & ((1u64 << MANT_BITS) - 1))
    } else {
        // Subnormal; rounding up into 2^52 lands exactly on the smallest normal.
        kept
    };
    Ok(signed(f64::from_bits(bits)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn known_literals() {
        assert_eq!(format(3.0), "0x1.8p+1");
        assert_eq!(format(1.0), "0x1p+0");
        assert_eq!(format(0.1), "0x1.999999999999ap-4");
        assert_eq!(format(0.0), "0x0p+0");
        assert_eq!(format(-0.0), "-0x0p+0");
        assert_eq!(format(f64::from_bits(1)), "0x0.0000000000001p-1022");
        assert_eq!(format(f64::MAX), "0x1.fffffffffffffp+1023");
        assert_eq!(format(f64::NEG_INFINITY), "-inf");
        assert_eq!(format(f64::NAN), "nan");
    }

    #[test]
    fn parses_literals() {
        assert_eq!(parse("0x1.8p+1").unwrap(), 3.0);
        assert_eq!(parse("0X1P-1").unwrap(), 0.5);
        assert_eq!(parse("-0x10").unwrap(), -16.0);
        assert_eq!(parse("0x.8p1").unwrap(), 1.0);
        assert_eq!(parse("  0x1.999999999999ap-4\n").unwrap(), 0.1);
        assert_eq!(parse("0x1p-1074").unwrap(), f64::from_bits(1));
        assert_eq!(parse("0x1p-1075").unwrap(), 0.0);
        assert_eq!(parse("0x1.8p-1075").unwrap(), f64::from_bits(1));
        assert_eq!(parse("0x1p+1024").unwrap(), f64::INFINITY);
        assert!(parse("-0x0p+0").unwrap().is_sign_negative());
        assert!(parse("NaN").unwrap().is_nan());
        assert_eq!(parse("-inf").unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn rounds_to_nearest_even() {
        // 1 + 2^-53 is a tie between 1 and 1 + 2^-52: even wins.
        assert_eq!(parse("0x1.00000000000008p+0").unwrap(), 1.0);
        // Slightly above the tie rounds up.
        assert_eq!(parse("0x1.000000000000081p+0").unwrap(), 1.0 + f64::EPSILON);
        // 1 + 3*2^-53 ties to the even 1 + 2^-51.
        assert_eq!(parse("0x1.00000000000018p+0").unwrap(), 1.0 + 2.0 * f64::EPSILON);
        assert_eq!(parse("0x1.fffffffffffff8p+0").unwrap(), 2.0);
        assert_eq!(parse("0x1.fffffffffffff8p+1023").unwrap(), f64::INFINITY);
        assert_eq!(parse("0x0.fffffffffffff8p-1022").unwrap(), f64::MIN_POSITIVE);
    }

    #[test]
    fn rejects_garbage() {
        for s in ["", "1.5", "0x", "0xp1", "0x1.2.3", "0x1p", "0x1g", "0x1p+x"] {
            assert!(parse(s).is_err(), "{s}");
        }
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(bits in any::<u64>()) {
            let x = f64::from_bits(bits);
            let y = parse(&format(x)).unwrap();
            if x.is_nan() {
                prop_assert!(y.is_nan());
            } else {
                prop_assert_eq!(x.to_bits(), y.to_bits());
            }
        }

        #[test]
        fn agrees_with_decimal_parse(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
            let dec: f64 = format!("{x:e}").parse().unwrap();
            prop_assert_eq!(parse(&format(dec)).unwrap().to_bits(), x.to_bits());
        }
    }
}
