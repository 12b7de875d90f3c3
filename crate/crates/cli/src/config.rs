//! Flat `key = value` experiment configuration.

use std::fmt;
use std::path::PathBuf;

use hardy_core::hardy_dict::experiment::{ConvergenceSettings, SigmaChoice};
use hardy_core::sphere_geom::{SphericalCap, UnitVector, Vec3};
use serde::Serialize;

/// Level cap without `allow_large`.
pub const DESK_MAX_LEVEL: usize = 4;
/// Absolute level cap.
pub const MAX_LEVEL: usize = 8;
pub const DEGREES: [usize; 2] = [100, 200];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SigmaSelection {
    All,
    One(SigmaChoice),
    Custom,
}

impl SigmaSelection {
    fn parse(s: &str) -> Result<Self, String> {
        match s {
            "all" => Ok(SigmaSelection::All),
            "custom" => Ok(SigmaSelection::Custom),
            _ => s
                .parse::<SigmaChoice>()
                .map(SigmaSelection::One)
                .map_err(|_| format!("sigma must be S1, S2, S3, all or custom, got {s:?}")),
        }
    }
}

impl Serialize for SigmaSelection {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl fmt::Display for SigmaSelection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SigmaSelection::All => f.write_str("all"),
            SigmaSelection::One(s) => write!(f, "{s}"),
            SigmaSelection::Custom => f.write_str("custom"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub sigma: SigmaSelection,
    /// Center of the custom cap, normalized on use.
    pub cap_center: Option<[f64; 3]>,
    /// Polar radius `1 - cos(angle)` of the custom cap.
    pub cap_radius: Option<f64>,
    pub nmax: usize,
    pub degree: usize,
    pub sobolev: f64,
    pub nu: f64,
    pub cbar: f64,
    pub gamma: f64,
    pub count1: usize,
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub lambda_count: usize,
    pub bep_points: usize,
    /// Smallest bound of the BEP sweep as a fraction of the unconstrained
    /// minus norm.
    pub bep_min: f64,
    pub out: PathBuf,
    pub allow_large: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let s = ConvergenceSettings::default();
        ExperimentConfig {
            sigma: SigmaSelection::All,
            cap_center: None,
            cap_radius: None,
            nmax: 3,
            degree: s.max_degree,
            sobolev: s.sobolev,
            nu: s.nu,
            cbar: s.cbar,
            gamma: s.gamma,
            count1: s.count1,
            lambda_min: 1e-8,
            lambda_max: 1e-1,
            lambda_count: 15,
            bep_points: 10,
            bep_min: 1e-3,
            out: PathBuf::from("out"),
            allow_large: false,
        }
    }
}

fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    v.parse::<T>().map_err(|e| format!("{key}: cannot parse {v:?}: {e}"))
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        let mut c = ExperimentConfig::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| format!("line {}: expected key = value", i + 1))?;
            c.set(k.trim(), v.trim()).map_err(|e| format!("line {}: {e}", i + 1))?;
        }
        Ok(c)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        match key {
            "sigma" => self.sigma = SigmaSelection::parse(v)?,
            "cap_center" => {
                let parts: Vec<f64> = v.split(',').map(|s| num(key, s.trim())).collect::<Result<_, _>>()?;
                let [x, y, z] = parts[..] else {
                    return Err(format!("cap_center needs three components, got {v:?}"));
                };
                self.cap_center = Some([x, y, z]);
            }
            "cap_radius" => self.cap_radius = Some(num(key, v)?),
            "nmax" => self.nmax = num(key, v)?,
            "degree" => self.degree = num(key, v)?,
            "sobolev" => self.sobolev = num(key, v)?,
            "nu" => self.nu = num(key, v)?,
            "cbar" => self.cbar = num(key, v)?,
            "gamma" => self.gamma = num(key, v)?,
            "count1" => self.count1 = num(key, v)?,
            "lambda_min" => self.lambda_min = num(key, v)?,
            "lambda_max" => self.lambda_max = num(key, v)?,
            "lambda_count" => self.lambda_count = num(key, v)?,
            "bep_points" => self.bep_points = num(key, v)?,
            "bep_min" => self.bep_min = num(key, v)?,
            "out" => self.out = PathBuf::from(v),
            "allow_large" => self.allow_large = num(key, v)?,
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), String> {
        let cap = if self.allow_large { MAX_LEVEL } else { DESK_MAX_LEVEL };
        if self.nmax == 0 || self.nmax > cap {
            let hint = if self.allow_large {
                ""
            } else {
                " (--allow-large raises the cap)"
            };
            return Err(format!("nmax must lie in 1..={cap}, got {}{hint}", self.nmax));
        }
        if !DEGREES.contains(&self.degree) {
            return Err(format!("degree must be 100 or 200, got {}", self.degree));
        }
        if !(self.sobolev > 1.0) {
            return Err(format!("sobolev must exceed 1, got {}", self.sobolev));
        }
        if !(self.nu > 0.0 && self.cbar > 0.0) {
            return Err("nu and cbar must be positive".into());
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(format!("gamma must lie in (0, 1), got {}", self.gamma));
        }
        if self.count1 < 12 {
            return Err(format!("count1 must be at least 12, got {}", self.count1));
        }
        if !(self.lambda_min > 0.0 && self.lambda_min <= self.lambda_max) || self.lambda_count == 0 {
            return Err("lambda grid needs 0 < lambda_min <= lambda_max and lambda_count >= 1".into());
        }
        if self.bep_points < 2 || !(self.bep_min > 0.0 && self.bep_min < 1.0) {
            return Err("bep sweep needs bep_points >= 2 and 0 < bep_min < 1".into());
        }
        match self.sigma {
            SigmaSelection::Custom => {
                self.custom_cap()?;
            }
            _ if self.cap_center.is_some() || self.cap_radius.is_some() => {
                return Err("cap_center and cap_radius require sigma = custom".into());
            }
            _ => {}
        }
        Ok(())
    }

    fn custom_cap(&self) -> Result<SphericalCap, String> {
        let (Some([x, y, z]), Some(r)) = (self.cap_center, self.cap_radius) else {
            return Err("sigma = custom needs cap_center and cap_radius".into());
        };
        let center = UnitVector::from_vec(Vec3::new(x, y, z)).map_err(|e| e.to_string())?;
        SphericalCap::new(center, r).map_err(|e| e.to_string())
    }

    /// `(label, cap)` for every selected region.
    pub fn regions(&self) -> Result<Vec<(String, SphericalCap)>, String> {
        Ok(match self.sigma {
            SigmaSelection::All => SigmaChoice::ALL
                .iter()
                .map(|s| (s.label().to_string(), s.cap()))
                .collect(),
            SigmaSelection::One(s) => vec![(s.label().to_string(), s.cap())],
            SigmaSelection::Custom => vec![("custom".to_string(), self.custom_cap()?)],
        })
    }

    pub fn lambdas(&self) -> Vec<f64> {
        if self.lambda_count == 1 {
            return vec![self.lambda_min];
        }
        let (a, b) = (self.lambda_min.log10(), self.lambda_max.log10());
        (0..self.lambda_count)
            .map(|i| 10f64.powf(a + (b - a) * i as f64 / (self.lambda_count - 1) as f64))
            .collect()
    }

    pub fn settings(&self) -> ConvergenceSettings {
        ConvergenceSettings {
            max_degree: self.degree,
            sobolev: self.sobolev,
            nu: self.nu,
            cbar: self.cbar,
            gamma: self.gamma,
            count1: self.count1,
            lambdas: self.lambdas(),
        }
    }
}

/// Every key in a fixed order; floats use the shortest representation that
/// parses back to the same value.
impl fmt::Display for ExperimentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "sigma = {}", self.sigma)?;
        if let Some([x, y, z]) = self.cap_center {
            writeln!(f, "cap_center = {x:?},{y:?},{z:?}")?;
        }
        if let Some(r) = self.cap_radius {
            writeln!(f, "cap_radius = {r:?}")?;
        }
        writeln!(f, "nmax = {}", self.nmax)?;
        writeln!(f, "degree = {}", self.degree)?;
        writeln!(f, "sobolev = {:?}", self.sobolev)?;
        writeln!(f, "nu = {:?}", self.nu)?;
        writeln!(f, "cbar = {:?}", self.cbar)?;
        writeln!(f, "gamma = {:?}", self.gamma)?;
        writeln!(f, "count1 = {}", self.count1)?;
        writeln!(f, "lambda_min = {:?}", self.lambda_min)?;
        writeln!(f, "lambda_max = {:?}", self.lambda_max)?;
        writeln!(f, "lambda_count = {}", self.lambda_count)?;
        writeln!(f, "bep_points = {}", self.bep_points)?;
        writeln!(f, "bep_min = {:?}", self.bep_min)?;
        writeln!(f, "out = {}", self.out.display())?;
        writeln!(f, "allow_large = {}", self.allow_large)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use hardy_core::hardy_dict::lambda_grid;

    #[test]
    fn default_round_trips() {
        let c = ExperimentConfig::default();
        assert_eq!(ExperimentConfig::parse(&c.to_string()).unwrap(), c);
    }

    #[test]
    fn custom_round_trips() {
        let c = ExperimentConfig {
            sigma: SigmaSelection::Custom,
            cap_center: Some([0.1, -0.2, 0.9]),
            cap_radius: Some(0.3),
            sobolev: 2.0 + 1.0 / 3.0,
            lambda_min: 1.2345678901234567e-9,
            out: PathBuf::from("runs/a b"),
            allow_large: true,
            ..Default::default()
        };
        c.validate().unwrap();
        assert_eq!(ExperimentConfig::parse(&c.to_string()).unwrap(), c);
    }

    #[test]
    fn default_lambda_grid_matches_core() {
        assert_eq!(ExperimentConfig::default().lambdas(), lambda_grid());
    }

    #[test]
    fn comments_and_unknown_keys() {
        let c = ExperimentConfig::parse("# run\n\nnmax = 2\nsigma=S2\n").unwrap();
        assert_eq!(c.nmax, 2);
        assert_eq!(c.sigma, SigmaSelection::One(SigmaChoice::S2));
        assert!(ExperimentConfig::parse("levels = 3").is_err());
        assert!(ExperimentConfig::parse("nmax 3").is_err());
    }

    #[test]
    fn level_cap() {
        let mut c = ExperimentConfig {
            nmax: 5,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        c.allow_large = true;
        c.validate().unwrap();
    }

    #[test]
    fn rejected_values() {
        for (k, v) in [
            ("degree", "150"),
            ("gamma", "1.0"),
            ("sobolev", "1"),
            ("lambda_count", "0"),
            ("sigma", "custom"),
        ] {
            let mut c = ExperimentConfig::default();
            c.set(k, v).unwrap();
            assert!(c.validate().is_err(), "{k} = {v}");
        }
        let mut c = ExperimentConfig::default();
        c.set("cap_radius", "0.5").unwrap();
        assert!(c.validate().is_err());
    }
}
