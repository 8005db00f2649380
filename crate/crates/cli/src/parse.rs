//! Parsers for the compact argument syntaxes.

use std::ops::RangeInclusive;

/// `3`, `0..6` (inclusive) or `k=0..6`.
pub fn k_range(s: &str) -> Result<RangeInclusive<usize>, String> {
    let body = s.strip_prefix("k=").unwrap_or(s);
    let bad = || format!("expected K, A..B or k=A..B, got `{s}`");
    match body.split_once("..") {
        Some((a, b)) => {
            let b = b.strip_prefix('=').unwrap_or(b);
            let lo: usize = a.trim().parse().map_err(|_| bad())?;
            let hi: usize = b.trim().parse().map_err(|_| bad())?;
            if lo > hi {
                return Err(bad());
            }
            Ok(lo..=hi)
        }
        None => {
            let k = body.trim().parse().map_err(|_| bad())?;
            Ok(k..=k)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Grid(pub Vec<f64>);

/// `A:B:N(log)`, `A:B:N` (linear) or a comma-separated list.
pub fn temperatures(s: &str) -> Result<Grid, String> {
    let s = s.trim();
    let temps = if s.contains(':') {
        let (spec, log) = match s.strip_suffix("(log)") {
            Some(rest) => (rest, true),
            None => (s, false),
        };
        let parts: Vec<&str> = spec.split(':').collect();
        let [a, b, count] = parts[..] else {
            return Err(format!("expected A:B:N or A:B:N(log), got `{s}`"));
        };
        let a: f64 = a.parse().map_err(|_| format!("bad start `{a}`"))?;
        let b: f64 = b.parse().map_err(|_| format!("bad end `{b}`"))?;
        let count: usize = count.parse().map_err(|_| format!("bad count `{count}`"))?;
        if count == 0 {
            return Err("grid needs at least one point".into());
        }
        let at = |t: f64| {
            if log {
                (a.ln() + t * (b.ln() - a.ln())).exp()
            } else {
                a + t * (b - a)
            }
        };
        if count == 1 {
            vec![a]
        } else {
            (0..count)
                .map(|j| match j {
                    0 => a,
                    j if j == count - 1 => b,
                    j => at(j as f64 / (count - 1) as f64),
                })
                .collect()
        }
    } else {
        s.split(',')
            .map(|t| {
                t.trim()
                    .parse::<f64>()
                    .map_err(|_| format!("bad temperature `{t}`"))
            })
            .collect::<Result<_, _>>()?
    };
    if let Some(t) = temps.iter().find(|t| !(t.is_finite() && **t > 0.0)) {
        return Err(format!("temperatures must be positive, got {t}"));
    }
    Ok(Grid(temps))
}

/// Six significant digits, for tables.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-4..6).contains(&exp) {
        format!("{:.*}", (5 - exp) as usize, x)
    } else {
        format!("{x:.5e}")
    }
}
