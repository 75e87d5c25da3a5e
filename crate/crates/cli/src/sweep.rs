//! Parameter grids.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Values taken by one parameter: a single value, an explicit list, or an
/// evenly spaced range `min:max:count[:log]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisSpec {
    pub values: Vec<f64>,
}

impl AxisSpec {
    pub fn single(v: f64) -> Self {
        Self { values: vec![v] }
    }

    pub fn range(min: f64, max: f64, count: usize, log: bool) -> Result<Self, String> {
        if count < 1 {
            return Err("count must be at least 1".into());
        }
        if min > max {
            return Err(format!("min {min} exceeds max {max}"));
        }
        if log && min <= 0.0 {
            return Err("log spacing needs min > 0".into());
        }
        if count == 1 {
            return Ok(Self::single(min));
        }
        let step = |k: usize| k as f64 / (count - 1) as f64;
        let values = (0..count)
            .map(|k| {
                if k == count - 1 {
                    max
                } else if log {
                    (min.ln() + step(k) * (max.ln() - min.ln())).exp()
                } else {
                    min + step(k) * (max - min)
                }
            })
            .collect();
        Ok(Self { values })
    }

    pub fn is_sweep(&self) -> bool {
        self.values.len() > 1
    }
}

fn number(s: &str) -> Result<f64, String> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| format!("'{s}' is not a number"))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("'{s}' is not finite"))
    }
}

impl FromStr for AxisSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s.contains(':') {
            let parts: Vec<&str> = s.split(':').collect();
            let log = match parts.get(3).map(|p| p.trim()) {
                None => false,
                Some("log") => true,
                Some("lin") => false,
                Some(other) => return Err(format!("unknown spacing '{other}'")),
            };
            if !(3..=4).contains(&parts.len()) {
                return Err(format!("range '{s}' must look like min:max:count[:log]"));
            }
            let count: usize = parts[2]
                .trim()
                .parse()
                .map_err(|_| format!("count '{}' is not a positive integer", parts[2]))?;
            return Self::range(number(parts[0])?, number(parts[1])?, count, log);
        }
        let values = s.split(',').map(number).collect::<Result<Vec<_>, _>>()?;
        Ok(Self { values })
    }
}

/// 64-bit seeds, given as `7`, `1,2,3` or an inclusive range `1..5`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeedList(pub Vec<u64>);

impl Default for SeedList {
    fn default() -> Self {
        Self((1..=5).collect())
    }
}

impl FromStr for SeedList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let int = |x: &str| {
            x.trim()
                .parse::<u64>()
                .map_err(|_| format!("'{x}' is not a 64-bit seed"))
        };
        let seeds = if let Some((a, b)) = s.split_once("..") {
            let (a, b) = (int(a)?, int(b)?);
            if a > b {
                return Err(format!("empty seed range {s}"));
            }
            (a..=b).collect()
        } else {
            s.split(',').map(int).collect::<Result<Vec<_>, _>>()?
        };
        if seeds.is_empty() {
            return Err("at least one seed required".into());
        }
        Ok(Self(seeds))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Theory,
    Simulate,
    Kernels,
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Engine::Theory => "theory",
            Engine::Simulate => "simulate",
            Engine::Kernels => "kernels",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EngineSet(pub Vec<Engine>);

impl EngineSet {
    pub fn all() -> Self {
        Self(vec![Engine::Theory, Engine::Simulate, Engine::Kernels])
    }

    pub fn only(e: Engine) -> Self {
        Self(vec![e])
    }

    pub fn contains(&self, e: Engine) -> bool {
        self.0.contains(&e)
    }
}

impl FromStr for EngineSet {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let mut set = Vec::new();
        for part in s.split(',') {
            let e = match part.trim() {
                "theory" => Engine::Theory,
                "simulate" | "sim" => Engine::Simulate,
                "kernels" | "kernel" => Engine::Kernels,
                other => return Err(format!("unknown engine '{other}'")),
            };
            if !set.contains(&e) {
                set.push(e);
            }
        }
        set.sort();
        Ok(Self(set))
    }
}

/// One grid point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point {
    pub alpha: f64,
    pub kappa: f64,
    pub amplitude: f64,
    pub zeta: u8,
}

/// Full grid: `alpha` outermost, then `kappa`, then `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub alpha: AxisSpec,
    pub kappa: AxisSpec,
    pub amplitude: AxisSpec,
    pub zeta: u8,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), String> {
        let swept = [&self.alpha, &self.kappa, &self.amplitude]
            .iter()
            .filter(|a| a.is_sweep())
            .count();
        if swept > 2 {
            return Err("at most two parameters may be swept".into());
        }
        if self.zeta > 1 {
            return Err(format!("zeta must be 0 or 1, got {}", self.zeta));
        }
        Ok(())
    }

    pub fn points(&self) -> Vec<Point> {
        let mut out = Vec::new();
        for &alpha in &self.alpha.values {
            for &kappa in &self.kappa.values {
                for &amplitude in &self.amplitude.values {
                    out.push(Point {
                        alpha,
                        kappa,
                        amplitude,
                        zeta: self.zeta,
                    });
                }
            }
        }
        out
    }
}
