//! Run configuration: command defaults, overlaid by a JSON config file,
//! overlaid by command-line flags.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use clap::ValueEnum;
use hullbound::Domain;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Domain as written in a config file: the text syntax or a list of pairs.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum DomainSpec {
    Text(String),
    Pairs(Domain),
}

/// Every field a command may consume. Absent fields stay `None` and are
/// printed as `null` by `--print-config`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    #[serde(rename = "fn")]
    pub f: Option<String>,
    #[serde(deserialize_with = "domain_text")]
    pub domain: Option<String>,
    pub resolution: Option<usize>,
    pub mean: Option<f64>,
    pub at: Option<[f64; 2]>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub tolerance: Option<f64>,
    pub input: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

fn domain_text<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Option<String>, D::Error> {
    Ok(match Option::<DomainSpec>::deserialize(d)? {
        None => None,
        Some(DomainSpec::Text(s)) => Some(s),
        Some(DomainSpec::Pairs(dom)) => Some(dom.to_string()),
    })
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    /// Fields set in `top` replace those in `self`.
    pub fn overlay(self, top: RunConfig) -> RunConfig {
        RunConfig {
            f: top.f.or(self.f),
            domain: top.domain.or(self.domain),
            resolution: top.resolution.or(self.resolution),
            mean: top.mean.or(self.mean),
            at: top.at.or(self.at),
            seed: top.seed.or(self.seed),
            trials: top.trials.or(self.trials),
            tolerance: top.tolerance.or(self.tolerance),
            input: top.input.or(self.input),
            out: top.out.or(self.out),
            format: top.format.or(self.format),
        }
    }
}

/// Parses `"x,y"`.
pub fn parse_point(s: &str) -> Result<[f64; 2], String> {
    let (x, y) = s.split_once(',').ok_or_else(|| format!("expected x,y but got {s:?}"))?;
    let x: f64 = x.trim().parse().map_err(|e| format!("bad x in {s:?}: {e}"))?;
    let y: f64 = y.trim().parse().map_err(|e| format!("bad y in {s:?}: {e}"))?;
    Ok([x, y])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn domain_accepts_text_or_pairs() {
        let a: RunConfig = serde_json::from_str(r#"{"fn": "1/x", "domain": "[-2,-1]u[1,2]"}"#).unwrap();
        let b: RunConfig = serde_json::from_str(r#"{"fn": "1/x", "domain": [[1, 2], [-2, -1]]}"#).unwrap();
        assert_eq!(a.domain.as_deref(), Some("[-2,-1]u[1,2]"));
        assert_eq!(b.domain, a.domain);
        assert!(serde_json::from_str::<RunConfig>(r#"{"domain": [[0, 2], [1, 3]]}"#).is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"function": "x"}"#).is_err());
    }

    #[test]
    fn flags_win_over_file() {
        let file = RunConfig {
            f: Some("x".into()),
            resolution: Some(65),
            ..RunConfig::default()
        };
        let flags = RunConfig {
            resolution: Some(129),
            ..RunConfig::default()
        };
        let c = file.overlay(flags);
        assert_eq!((c.f.as_deref(), c.resolution), (Some("x"), Some(129)));
    }

    #[test]
    fn points() {
        assert_eq!(parse_point("0, 1.5"), Ok([0.0, 1.5]));
        assert!(parse_point("0").is_err());
        assert!(parse_point("a,1").is_err());
    }
}
