//! Value lists given on the command line.
//!
//! A grid is a comma-separated list of items, each either a plain number or
//! a range `start:step:stop`. Ranges include `stop` when the last step lands
//! within half a step of it.

use std::fmt;

/// Upper limit on expanded points, so a typo cannot allocate gigabytes.
pub const MAX_POINTS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid(pub Vec<f64>);

impl Grid {
    pub fn single(x: f64) -> Self {
        Grid(vec![x])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|x| x.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

fn parse_number(s: &str) -> Result<f64, String> {
    let s = s.trim();
    let x: f64 = s.parse().map_err(|_| format!("`{s}` is not a number"))?;
    if !x.is_finite() {
        return Err(format!("`{s}` is not finite"));
    }
    Ok(x)
}

fn expand_range(start: f64, step: f64, stop: f64) -> Result<Vec<f64>, String> {
    if step == 0.0 {
        return Err("range step must be nonzero".into());
    }
    if start == stop {
        return Err(format!("degenerate range {start}:{step}:{stop}"));
    }
    let span = (stop - start) / step;
    if span < 0.0 {
        return Err(format!("range {start}:{step}:{stop} never reaches its stop value"));
    }
    // Largest n with n < span + 1/2.
    let n = (span + 0.5).ceil() - 1.0;
    if n + 1.0 > MAX_POINTS as f64 {
        return Err(format!("range {start}:{step}:{stop} expands to more than {MAX_POINTS} points"));
    }
    let n = n as usize;
    let mut out: Vec<f64> = (0..=n).map(|i| start + i as f64 * step).collect();
    // Snap a last point that only misses `stop` by rounding.
    if let Some(last) = out.last_mut() {
        if (*last - stop).abs() <= 1e-9 * step.abs() {
            *last = stop;
        }
    }
    Ok(out)
}

/// Parser used by clap for every grid-valued flag.
pub fn parse_grid(s: &str) -> Result<Grid, String> {
    if s.trim().is_empty() {
        return Err("empty value".into());
    }
    let mut out = Vec::new();
    for item in s.split(',') {
        let parts: Vec<&str> = item.split(':').collect();
        match parts.as_slice() {
            [x] => out.push(parse_number(x)?),
            [a, b, c] => out.extend(expand_range(parse_number(a)?, parse_number(b)?, parse_number(c)?)?),
            _ => return Err(format!("`{item}` is neither a number nor start:step:stop")),
        }
        if out.len() > MAX_POINTS {
            return Err(format!("grid has more than {MAX_POINTS} points"));
        }
    }
    Ok(Grid(out))
}
