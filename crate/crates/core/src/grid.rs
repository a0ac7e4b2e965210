//! Parsing of numeric grids: `start:stop:step`, comma lists, or one value.

use crate::error::{domain, Result};

/// Endpoint slack when deciding whether `stop` is hit by the step sequence.
const ENDPOINT_TOL: f64 = 1e-12;

/// Parses `start:stop:step` (inclusive of `stop` within `1e-12`), a
/// comma-separated list, or a single number.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let spec = spec.trim();
    if spec.is_empty() {
        return Err(domain("empty grid"));
    }
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(domain(format!("range grid must be start:stop:step, got {spec:?}")));
        }
        let nums: Vec<f64> = parts.iter().map(|p| parse_num(p)).collect::<Result<_>>()?;
        return range(nums[0], nums[1], nums[2]);
    }
    let values: Vec<f64> = spec.split(',').map(parse_num).collect::<Result<_>>()?;
    if values.windows(2).any(|w| w[1] <= w[0]) {
        return Err(domain("grid values must be strictly increasing"));
    }
    Ok(values)
}

fn parse_num(s: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| domain(format!("not a number: {s:?}")))?;
    if !v.is_finite() {
        return Err(domain(format!("not a finite number: {s:?}")));
    }
    Ok(v)
}

/// Inclusive arithmetic range. Points are computed as `start + i * step` to
/// avoid accumulated drift; a final point within `1e-12` of `stop` is
/// snapped onto `stop`.
pub fn range(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) {
        return Err(domain(format!("step must be > 0, got {step}")));
    }
    if stop < start {
        return Err(domain(format!("stop {stop} is below start {start}")));
    }
    let n = ((stop - start) / step + ENDPOINT_TOL).floor() as usize;
    let mut out: Vec<f64> = (0..=n).map(|i| start + i as f64 * step).collect();
    if let Some(last) = out.last_mut() {
        if (*last - stop).abs() <= ENDPOINT_TOL.max(step * 1e-9) {
            *last = stop;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inclusive_range() {
        let g = parse_grid("1:5:0.1").unwrap();
        assert_eq!(g.len(), 41);
        assert_eq!(g[0], 1.0);
        assert_eq!(*g.last().unwrap(), 5.0);
        assert!(g.iter().any(|&x| (x - 2.0).abs() < 1e-12));
        assert_eq!(parse_grid("0:1:0.25").unwrap(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn lists_and_single_values() {
        assert_eq!(parse_grid("1.1").unwrap(), vec![1.1]);
        assert_eq!(parse_grid("1.1, 1.67,2").unwrap(), vec![1.1, 1.67, 2.0]);
        assert!(parse_grid("2,1").is_err());
        assert!(parse_grid("1:2").is_err());
        assert!(parse_grid("1:2:0").is_err());
        assert!(parse_grid("a").is_err());
        assert!(parse_grid("").is_err());
    }
}
