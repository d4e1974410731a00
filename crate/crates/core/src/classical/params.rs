use std::fmt::Write as _;
use std::path::Path;

use crate::{Error, Result};

/// Intelligent Driver Model parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdmParams {
    /// Desired velocity, m/s.
    pub v0: f64,
    /// Maximum acceleration, m/s².
    pub a_max: f64,
    /// Desired time gap, s.
    pub tau: f64,
    /// Comfortable deceleration, m/s².
    pub b: f64,
    /// Minimum distance, m.
    pub s0: f64,
    /// Acceleration exponent.
    pub delta: f64,
}

impl IdmParams {
    /// Published values for NGSIM I-80.
    pub const NGSIM: IdmParams = IdmParams {
        v0: 17.8,
        a_max: 0.76,
        tau: 0.92,
        b: 3.81,
        s0: 5.249,
        delta: 4.0,
    };

    /// Values tuned for HighD.
    pub const HIGHD: IdmParams = IdmParams {
        v0: 58.87,
        a_max: 0.14,
        tau: 0.12,
        b: 12.17,
        s0: 14.46,
        delta: 4.0,
    };

    const KEYS: [&'static str; 6] = ["v0", "a_max", "tau", "b", "s0", "delta"];

    fn values(&self) -> [f64; 6] {
        [self.v0, self.a_max, self.tau, self.b, self.s0, self.delta]
    }

    pub fn validate(&self) -> Result<()> {
        for (k, v) in Self::KEYS.iter().zip(self.values()) {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!(
                    "IDM parameter {k} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// `key=value` lines, one per parameter.
    pub fn to_kv_string(&self) -> String {
        let mut s = String::new();
        for (k, v) in Self::KEYS.iter().zip(self.values()) {
            writeln!(s, "{k}={v}").unwrap();
        }
        s
    }

    /// Parses `key=value` lines; blank lines and `#` comments are skipped.
    /// Every key must appear exactly once and no other key is accepted.
    pub fn from_kv_str(text: &str) -> Result<Self> {
        let mut vals: [Option<f64>; 6] = [None; 6];
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                line: lineno + 1,
                message,
            };
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| parse_err(format!("expected key=value, got {line:?}")))?;
            let (k, v) = (k.trim(), v.trim());
            let idx = Self::KEYS
                .iter()
                .position(|&key| key == k)
                .ok_or_else(|| parse_err(format!("unknown key {k:?}")))?;
            if vals[idx].is_some() {
                return Err(parse_err(format!("duplicate key {k:?}")));
            }
            vals[idx] = Some(
                v.parse()
                    .map_err(|_| parse_err(format!("bad number {v:?}")))?,
            );
        }
        let get = |i: usize| vals[i].ok_or_else(|| Error::MissingColumn(Self::KEYS[i].into()));
        let p = IdmParams {
            v0: get(0)?,
            a_max: get(1)?,
            tau: get(2)?,
            b: get(3)?,
            s0: get(4)?,
            delta: get(5)?,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_kv_string()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_kv_str(&text)
    }
}

/// Box constraints for the tuned parameters (`delta` stays fixed).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdmBounds {
    pub lo: [f64; 5],
    pub hi: [f64; 5],
}

impl IdmBounds {
    /// v0 ∈ [1, 70], a_max ∈ [0.05, 5], τ ∈ [0.05, 3], b ∈ [0.5, 15], s0 ∈ [0.5, 20].
    pub const GLOBAL: IdmBounds = IdmBounds {
        lo: [1.0, 0.05, 0.05, 0.5, 0.5],
        hi: [70.0, 5.0, 3.0, 15.0, 20.0],
    };

    pub(crate) fn to_params(v: [f64; 5], delta: f64) -> IdmParams {
        IdmParams {
            v0: v[0],
            a_max: v[1],
            tau: v[2],
            b: v[3],
            s0: v[4],
            delta,
        }
    }

    pub(crate) fn from_params(p: &IdmParams) -> [f64; 5] {
        [p.v0, p.a_max, p.tau, p.b, p.s0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kv_round_trip() {
        let text = IdmParams::HIGHD.to_kv_string();
        assert!(text.starts_with("v0=58.87\n"));
        assert_eq!(IdmParams::from_kv_str(&text).unwrap(), IdmParams::HIGHD);
    }

    #[test]
    fn kv_rejects_unknown_missing_and_negative() {
        let good = IdmParams::NGSIM.to_kv_string();
        assert!(IdmParams::from_kv_str(&format!("{good}gamma=1\n")).is_err());
        assert!(IdmParams::from_kv_str(&good.replace("tau=0.92\n", "")).is_err());
        assert!(IdmParams::from_kv_str(&good.replace("b=3.81", "b=-1")).is_err());
        assert!(IdmParams::from_kv_str(&format!("# tuned\n\n{good}")).is_ok());
    }
}
