use std::path::PathBuf;
use std::sync::Arc;

use serde::Serialize;
use sml_core::exponents::{build_exponents, ExponentSet};
use sml_core::manifold::{load_revolution, make_circle, make_sphere, ManifoldDescriptor, ManifoldProfile};
use sml_core::{Result, SmlError};

/// Log-spaced parameter range `lo:hi:count`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ParamRange {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

impl ParamRange {
    pub fn parse(text: &str) -> Result<ParamRange> {
        let parts: Vec<&str> = text.split(':').collect();
        let bad = || SmlError::InvalidParameter(format!("range {text:?} is not lo:hi[:count]"));
        if parts.len() < 2 || parts.len() > 3 {
            return Err(bad());
        }
        let lo: f64 = parts[0].trim().parse().map_err(|_| bad())?;
        let hi: f64 = parts[1].trim().parse().map_err(|_| bad())?;
        let count: usize = match parts.get(2) {
            Some(c) => c.trim().parse().map_err(|_| bad())?,
            None => 20,
        };
        if !(lo > 0.0) || !(hi >= lo) || !hi.is_finite() || count == 0 || (count > 1 && hi == lo) {
            return Err(SmlError::InvalidParameter(format!("range {text:?} needs 0 < lo < hi and count ≥ 1")));
        }
        Ok(ParamRange { lo, hi, count })
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.lo];
        }
        let (a, b) = (self.lo.ln(), self.hi.ln());
        (0..self.count)
            .map(|i| {
                if i == 0 {
                    self.lo
                } else if i + 1 == self.count {
                    self.hi
                } else {
                    (a + (b - a) * i as f64 / (self.count - 1) as f64).exp()
                }
            })
            .collect()
    }
}

/// `sphere:d`, `circle:L` or `revolution:file`.
pub fn parse_manifold(text: &str) -> Result<ManifoldProfile> {
    let (kind, arg) = text
        .split_once(':')
        .ok_or_else(|| SmlError::InvalidParameter(format!("manifold {text:?} is not kind:arg")))?;
    match kind {
        "sphere" => {
            let d = arg.parse().map_err(|_| SmlError::InvalidParameter(format!("bad sphere dimension {arg:?}")))?;
            make_sphere(d)
        }
        "circle" => {
            let l = arg.parse().map_err(|_| SmlError::InvalidParameter(format!("bad circle length {arg:?}")))?;
            make_circle(l)
        }
        "revolution" => load_revolution(arg),
        _ => Err(SmlError::InvalidParameter(format!("unknown manifold kind {kind:?}"))),
    }
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, Serialize)]
pub struct RunConfig {
    pub command: String,
    pub manifold_spec: String,
    pub manifold: ManifoldDescriptor,
    pub exponents: ExponentSet,
    pub alpha_range: Option<ParamRange>,
    pub beta_range: Option<ParamRange>,
    pub lambda: Option<f64>,
    pub n: Option<usize>,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub tol: Option<f64>,
}

pub struct Resolved {
    pub config: RunConfig,
    pub manifold: Arc<ManifoldProfile>,
}

impl RunConfig {
    pub fn resolve(command: &str, manifold_spec: &str, q: f64, n: Option<usize>, seed: u64, out: Option<PathBuf>, tol: Option<f64>) -> Result<Resolved> {
        let manifold = parse_manifold(manifold_spec)?;
        let exponents = build_exponents(manifold.d, q)?;
        if let Some(t) = tol {
            if !(t > 0.0) {
                return Err(SmlError::InvalidParameter(format!("tolerance {t} must be positive")));
            }
        }
        let config = RunConfig {
            command: command.to_string(),
            manifold_spec: manifold_spec.to_string(),
            manifold: manifold.descriptor(),
            exponents,
            alpha_range: None,
            beta_range: None,
            lambda: None,
            n,
            seed,
            out,
            tol,
        };
        Ok(Resolved { config, manifold: Arc::new(manifold) })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        let r = ParamRange::parse("0.1:10:3").unwrap();
        let v = r.values();
        assert_eq!(v.len(), 3);
        assert_eq!(v[0], 0.1);
        assert_eq!(v[2], 10.0);
        assert!((v[1] - 1.0).abs() < 1e-12);
        assert_eq!(ParamRange::parse("2:2:1").unwrap().values(), vec![2.0]);
        for bad in ["1", "0:1:3", "3:1:2", "1:2:0", "a:b", "1:2:3:4"] {
            assert!(ParamRange::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn manifolds() {
        assert_eq!(parse_manifold("sphere:3").unwrap().d, 3);
        assert_eq!(parse_manifold("circle:6.5").unwrap().domain_length, 6.5);
        assert!(parse_manifold("torus:1").is_err());
        assert!(parse_manifold("sphere").is_err());
        assert!(parse_manifold("revolution:/nonexistent/profile.txt").is_err());
    }
}
