//! Job configuration: JSON config files, command-line overrides, and the
//! validation that turns the merged result into a runnable job.
//!
//! Precedence is simple: every flag given on the command line replaces
//! the corresponding config-file field; fields given nowhere fall back to
//! documented defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use shssa::{Period, Topology};

use crate::error::{CliError, Result};

/// One axis period: a positive integer or the string `"inf"`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PeriodSpec(pub Period);

impl Serialize for PeriodSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.0 {
            Period::Finite(n) => s.serialize_u32(n),
            Period::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for PeriodSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(u32),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(n) => Ok(PeriodSpec(Period::Finite(n))),
            Raw::Text(s) if s == "inf" => Ok(PeriodSpec(Period::Infinite)),
            Raw::Text(s) => Err(serde::de::Error::custom(format!(
                "period must be a positive integer or \"inf\", got {s:?}"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct TopologySpec {
    pub t_x: PeriodSpec,
    pub t_y: PeriodSpec,
}

impl TopologySpec {
    pub fn to_topology(self) -> Result<Topology> {
        Topology::new(self.t_x.0, self.t_y.0)
            .map_err(|e| CliError::config(format!("invalid topology: {e}")))
    }
}

/// Parses the `--topology tx,ty` flag, e.g. `8,inf` or `inf,inf`.
pub fn parse_topology_flag(text: &str) -> Result<TopologySpec> {
    let parts: Vec<&str> = text.split(',').collect();
    if parts.len() != 2 {
        return Err(CliError::config(format!(
            "--topology expects tx,ty (e.g. \"12,inf\"), got {text:?}"
        )));
    }
    let axis = |s: &str| -> Result<PeriodSpec> {
        let s = s.trim();
        if s == "inf" {
            return Ok(PeriodSpec(Period::Infinite));
        }
        s.parse::<u32>()
            .map(|n| PeriodSpec(Period::Finite(n)))
            .map_err(|_| {
                CliError::config(format!("period must be a positive integer or \"inf\": {s:?}"))
            })
    };
    Ok(TopologySpec {
        t_x: axis(parts[0])?,
        t_y: axis(parts[1])?,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum WindowSpec {
    Rect { l_x: u32, l_y: u32 },
    Circle { radius: f64 },
    Mask { path: PathBuf },
}

/// Parses the `--window` flag: `rect:LX,LY`, `circle:R` or `mask:PATH`.
pub fn parse_window_flag(text: &str) -> Result<WindowSpec> {
    let bad = || {
        CliError::config(format!(
            "--window expects rect:LX,LY | circle:R | mask:PATH, got {text:?}"
        ))
    };
    let (kind, rest) = text.split_once(':').ok_or_else(bad)?;
    match kind {
        "rect" => {
            let (lx, ly) = rest.split_once(',').ok_or_else(bad)?;
            Ok(WindowSpec::Rect {
                l_x: lx.trim().parse().map_err(|_| bad())?,
                l_y: ly.trim().parse().map_err(|_| bad())?,
            })
        }
        "circle" => Ok(WindowSpec::Circle {
            radius: rest.trim().parse().map_err(|_| bad())?,
        }),
        "mask" => Ok(WindowSpec::Mask {
            path: PathBuf::from(rest),
        }),
        _ => Err(bad()),
    }
}

/// Parses the `--groups` flag: semicolon-separated groups, each a
/// comma-separated list of 1-based indices or `a-b` ranges, e.g.
/// `"1-6;7,8"`.
pub fn parse_groups_flag(text: &str) -> Result<Vec<Vec<usize>>> {
    let mut groups = Vec::new();
    for part in text.split(';') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let mut group = Vec::new();
        for item in part.split(',') {
            let item = item.trim();
            if let Some((a, b)) = item.split_once('-') {
                let a: usize = a.trim().parse().map_err(|_| {
                    CliError::config(format!("bad group range {item:?} in --groups"))
                })?;
                let b: usize = b.trim().parse().map_err(|_| {
                    CliError::config(format!("bad group range {item:?} in --groups"))
                })?;
                if a == 0 || b < a {
                    return Err(CliError::config(format!(
                        "group range {item:?} must be 1-based and increasing"
                    )));
                }
                group.extend(a..=b);
            } else {
                let i: usize = item.parse().map_err(|_| {
                    CliError::config(format!("bad group index {item:?} in --groups"))
                })?;
                group.push(i);
            }
        }
        if !group.is_empty() {
            groups.push(group);
        }
    }
    if groups.is_empty() {
        return Err(CliError::config("--groups parsed to nothing"));
    }
    Ok(groups)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodSpec {
    Ls,
    Tls,
}

impl MethodSpec {
    pub fn to_method(self) -> shssa::EspritMethod {
        match self {
            MethodSpec::Ls => shssa::EspritMethod::LeastSquares,
            MethodSpec::Tls => shssa::EspritMethod::TotalLeastSquares,
        }
    }
}

pub fn parse_method_flag(text: &str) -> Result<MethodSpec> {
    match text {
        "ls" => Ok(MethodSpec::Ls),
        "tls" => Ok(MethodSpec::Tls),
        other => Err(CliError::config(format!(
            "--esprit-method must be ls or tls, got {other:?}"
        ))),
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EspritSection {
    #[serde(default)]
    pub enabled: bool,
    pub r: Option<usize>,
    pub method: Option<MethodSpec>,
    pub basis: Option<Vec<usize>>,
}

/// The on-disk configuration. Every field is optional here; validation
/// happens after merging with the command line.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub topology: Option<TopologySpec>,
    pub input: Option<PathBuf>,
    pub mask: Option<PathBuf>,
    pub window: Option<WindowSpec>,
    pub neig: Option<usize>,
    pub groups: Option<Vec<Vec<usize>>>,
    pub esprit: Option<EspritSection>,
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub plots: bool,
}

impl JobConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::input("reading config", format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::config(format!("{}: {e}", path.display())))
    }
}

#[derive(Clone, Debug)]
pub struct EspritJob {
    pub rank: usize,
    pub method: MethodSpec,
    pub basis: Option<Vec<usize>>,
}

/// A fully validated job: every field present, every cross-field
/// invariant checked except those needing the input data itself.
#[derive(Clone, Debug)]
pub struct ResolvedJob {
    pub topology: Topology,
    pub input: PathBuf,
    pub mask: Option<PathBuf>,
    pub window: WindowSpec,
    /// `None` means "choose at run time": min(10, trajectory rank bound).
    pub neig: Option<usize>,
    pub groups: Option<Vec<Vec<usize>>>,
    pub esprit: Option<EspritJob>,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub plots: bool,
}

impl JobConfig {
    /// Validates the merged configuration. `need_esprit` marks the
    /// `esprit` subcommand, where the section is mandatory.
    pub fn resolve(self, need_esprit: bool) -> Result<ResolvedJob> {
        let topology = self
            .topology
            .ok_or_else(|| CliError::config("topology is required (--topology or config)"))?
            .to_topology()?;
        let input = self
            .input
            .ok_or_else(|| CliError::config("input grid is required (--input or config)"))?;
        let window = self
            .window
            .ok_or_else(|| CliError::config("window is required (--window or config)"))?;
        if let WindowSpec::Rect { l_x, l_y } = &window {
            if *l_x == 0 || *l_y == 0 {
                return Err(CliError::config("window sides must be positive"));
            }
        }
        if let WindowSpec::Circle { radius } = &window {
            if !radius.is_finite() || *radius < 0.0 {
                return Err(CliError::config("window radius must be non-negative"));
            }
        }
        if let Some(neig) = self.neig {
            if neig == 0 {
                return Err(CliError::config("neig must be at least 1"));
            }
            if let Some(groups) = &self.groups {
                for g in groups {
                    if let Some(&i) = g.iter().find(|&&i| i == 0 || i > neig) {
                        return Err(CliError::config(format!(
                            "group index {i} out of range 1..={neig}"
                        )));
                    }
                }
            }
        }
        if let Some(groups) = &self.groups {
            let mut seen = std::collections::HashSet::new();
            for g in groups {
                if g.is_empty() {
                    return Err(CliError::config("groups must be non-empty"));
                }
                for &i in g {
                    if !seen.insert(i) {
                        return Err(CliError::config(format!(
                            "triple {i} appears in more than one group"
                        )));
                    }
                }
            }
        }
        let esprit = match self.esprit {
            Some(section) if section.enabled || need_esprit => {
                let rank = section
                    .r
                    .ok_or_else(|| CliError::config("esprit requires a rank (--esprit-r)"))?;
                if rank == 0 {
                    return Err(CliError::config("esprit rank must be at least 1"));
                }
                if let Some(basis) = &section.basis {
                    if basis.len() != rank {
                        return Err(CliError::config(format!(
                            "esprit basis lists {} triples but rank is {rank}",
                            basis.len()
                        )));
                    }
                }
                Some(EspritJob {
                    rank,
                    method: section.method.unwrap_or(MethodSpec::Ls),
                    basis: section.basis,
                })
            }
            Some(_) => None,
            None if need_esprit => {
                return Err(CliError::config("esprit requires a rank (--esprit-r)"));
            }
            None => None,
        };
        Ok(ResolvedJob {
            topology,
            input,
            mask: self.mask,
            window,
            neig: self.neig,
            groups: self.groups,
            esprit,
            output_dir: self.output_dir.unwrap_or_else(|| PathBuf::from(".")),
            seed: self.seed.unwrap_or(1),
            plots: self.plots,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn topology_flag_accepts_numbers_and_inf() {
        let t = parse_topology_flag("8,inf").unwrap();
        assert_eq!(t.t_x.0, Period::Finite(8));
        assert_eq!(t.t_y.0, Period::Infinite);
        assert!(parse_topology_flag("8").is_err());
        assert!(parse_topology_flag("8,-3").is_err());
    }

    #[test]
    fn window_flag_covers_all_kinds() {
        assert_eq!(
            parse_window_flag("rect:3,4").unwrap(),
            WindowSpec::Rect { l_x: 3, l_y: 4 }
        );
        assert_eq!(
            parse_window_flag("circle:2.5").unwrap(),
            WindowSpec::Circle { radius: 2.5 }
        );
        assert_eq!(
            parse_window_flag("mask:w.csv").unwrap(),
            WindowSpec::Mask {
                path: PathBuf::from("w.csv")
            }
        );
        assert!(parse_window_flag("oval:3").is_err());
    }

    #[test]
    fn groups_flag_expands_ranges() {
        let g = parse_groups_flag("1-6;7,8").unwrap();
        assert_eq!(g, vec![vec![1, 2, 3, 4, 5, 6], vec![7, 8]]);
        assert!(parse_groups_flag("0-2").is_err());
        assert!(parse_groups_flag("5-2").is_err());
    }

    #[test]
    fn config_json_round_trips() {
        let text = r#"{
            "topology": {"t_x": 12, "t_y": "inf"},
            "input": "grid.csv",
            "window": {"kind": "rect", "l_x": 4, "l_y": 4},
            "neig": 6,
            "groups": [[1, 2], [3]],
            "esprit": {"enabled": true, "r": 4, "method": "tls"},
            "seed": 9
        }"#;
        let cfg: JobConfig = serde_json::from_str(text).unwrap();
        let job = cfg.resolve(false).unwrap();
        assert_eq!(job.seed, 9);
        let e = job.esprit.unwrap();
        assert_eq!(e.rank, 4);
        assert_eq!(e.method, MethodSpec::Tls);
    }

    #[test]
    fn overlapping_groups_are_a_config_error() {
        let cfg = JobConfig {
            topology: Some(TopologySpec {
                t_x: PeriodSpec(Period::Infinite),
                t_y: PeriodSpec(Period::Infinite),
            }),
            input: Some(PathBuf::from("g.csv")),
            window: Some(WindowSpec::Rect { l_x: 2, l_y: 2 }),
            groups: Some(vec![vec![1, 2], vec![2, 3]]),
            ..JobConfig::default()
        };
        assert!(matches!(cfg.resolve(false), Err(CliError::Config(_))));
    }

    #[test]
    fn unknown_config_fields_are_rejected() {
        let r: std::result::Result<JobConfig, _> =
            serde_json::from_str(r#"{"windw": {"kind": "rect", "l_x": 2, "l_y": 2}}"#);
        assert!(r.is_err());
    }
}
