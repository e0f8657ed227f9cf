//! JSON run configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use tlmls::grid::Grid;
use tlmls::tzitzeica::GoursatData;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Domain {
    pub u0: f64,
    pub u1: f64,
    pub v0: f64,
    pub v1: f64,
}

/// Node counts per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSize {
    #[serde(rename = "Nu")]
    pub nu: usize,
    #[serde(rename = "Nv")]
    pub nv: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Boundary {
    Preset(String),
    Samples { u_axis: Vec<f64>, v_axis: Vec<f64> },
}

impl Default for Boundary {
    fn default() -> Self {
        Boundary::Preset("zero".into())
    }
}

/// `q` or `r`: a preset name, a constant or one sample per node along its axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coefficient {
    Preset(String),
    Constant(f64),
    Samples(Vec<f64>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inject {
    pub l_im: f64,
    pub m_im: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub domain: Domain,
    pub grid: GridSize,
    #[serde(default)]
    pub boundary: Boundary,
    pub q: Coefficient,
    pub r: Coefficient,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inject: Option<Inject>,
    #[serde(default = "default_lambdas")]
    pub lambdas: Vec<[f64; 2]>,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default = "default_outputs", skip_serializing)]
    pub outputs: PathBuf,
}

fn default_lambdas() -> Vec<[f64; 2]> {
    vec![[1.0, 0.0]]
}

fn default_outputs() -> PathBuf {
    PathBuf::from("out")
}

/// Named tolerances with their defaults.
pub const TOLERANCES: &[(&str, f64)] = &[
    ("lift_norm", 1e-6),
    ("lift_identities", 1e-4),
    ("exp_omega_rel", 5e-4),
    ("cubic", 1e-2),
    ("mean_curvature", 1e-3),
    ("spurious_real", 1e-3),
    ("twisting", 1e-12),
    ("flatness_factor", 5.0),
    ("primitive", 1e-6),
    ("drift", 1e-6),
    ("det", 1e-8),
    ("closedness", 1e-4),
    ("oracle_frame", 1e-6),
    ("oracle_omega", 1e-3),
    ("closure", 1e-12),
];

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Preset configuration of one of the two model surfaces.
    pub fn example(name: &str, nodes: usize) -> Result<Self, CliError> {
        let (side, q, r) = match name {
            "rp" => (0.5, "rp", "rp"),
            "clifford" => (1.0, "clifford", "clifford"),
            other => return Err(CliError::Usage(format!("unknown example {other:?}; expected rp or clifford"))),
        };
        let cfg = RunConfig {
            domain: Domain { u0: 0.0, u1: side, v0: 0.0, v1: side },
            grid: GridSize { nu: nodes, nv: nodes },
            boundary: Boundary::default(),
            q: Coefficient::Preset(q.into()),
            r: Coefficient::Preset(r.into()),
            inject: None,
            lambdas: default_lambdas(),
            tolerances: BTreeMap::new(),
            outputs: default_outputs(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let d = &self.domain;
        if !(d.u1 > d.u0) {
            return Err(CliError::Usage(format!("domain: u1 = {} must exceed u0 = {}", d.u1, d.u0)));
        }
        if !(d.v1 > d.v0) {
            return Err(CliError::Usage(format!("domain: v1 = {} must exceed v0 = {}", d.v1, d.v0)));
        }
        if self.grid.nu < 3 || self.grid.nv < 3 {
            return Err(CliError::Usage(format!(
                "grid: Nu = {}, Nv = {}; at least 3 nodes per axis are needed for the difference stencils",
                self.grid.nu, self.grid.nv
            )));
        }
        for (name, value) in &self.tolerances {
            if !TOLERANCES.iter().any(|(n, _)| n == name) {
                return Err(CliError::Usage(format!("tolerances: unknown name {name:?}")));
            }
            if !(*value > 0.0) {
                return Err(CliError::Usage(format!("tolerances.{name} = {value} must be positive")));
            }
        }
        if self.lambdas.is_empty() {
            return Err(CliError::Usage("lambdas: list is empty".into()));
        }
        for l in self.lambda_values() {
            check_lambda(l)?;
        }
        if self.inject.is_some() && self.lambda_values().iter().any(|l| *l != Complex64::new(1.0, 0.0)) {
            return Err(CliError::Usage(
                "lambdas: with an injected mean curvature form only lambda = 1 yields a frame".into(),
            ));
        }
        self.goursat_data()?;
        Ok(())
    }

    pub fn grid_spec(&self) -> Result<Grid, CliError> {
        let d = &self.domain;
        Grid::new(d.u0, d.u1, d.v0, d.v1, self.grid.nu - 1, self.grid.nv - 1)
            .map_err(|e| CliError::Usage(format!("grid: {e}")))
    }

    pub fn lambda_values(&self) -> Vec<Complex64> {
        self.lambdas.iter().map(|[a, b]| Complex64::new(*a, *b)).collect()
    }

    pub fn tol(&self, name: &str) -> f64 {
        self.tolerances
            .get(name)
            .copied()
            .or_else(|| TOLERANCES.iter().find(|(n, _)| *n == name).map(|(_, v)| *v))
            .unwrap_or_else(|| panic!("no tolerance named {name}"))
    }

    fn coefficient(&self, field: &str, c: &Coefficient, n: usize) -> Result<Vec<f64>, CliError> {
        match c {
            Coefficient::Preset(p) => match (p.as_str(), field) {
                ("rp", _) => Ok(vec![0.0; n]),
                ("clifford", "q") => Ok(vec![1.0; n]),
                ("clifford", _) => Ok(vec![-1.0; n]),
                _ => Err(CliError::Usage(format!("{field}: unknown preset {p:?}; expected rp or clifford"))),
            },
            Coefficient::Constant(x) => Ok(vec![*x; n]),
            Coefficient::Samples(xs) if xs.len() == n => Ok(xs.clone()),
            Coefficient::Samples(xs) => {
                Err(CliError::Usage(format!("{field}: {} samples given, grid has {n} nodes on that axis", xs.len())))
            }
        }
    }

    pub fn goursat_data(&self) -> Result<GoursatData, CliError> {
        let g = self.grid_spec()?;
        let (u_axis, v_axis) = match &self.boundary {
            Boundary::Preset(p) if p == "zero" => (vec![0.0; g.nodes_u()], vec![0.0; g.nodes_v()]),
            Boundary::Preset(p) => return Err(CliError::Usage(format!("boundary: unknown preset {p:?}"))),
            Boundary::Samples { u_axis, v_axis } => (u_axis.clone(), v_axis.clone()),
        };
        let q = self.coefficient("q", &self.q, g.nodes_u())?;
        let r = self.coefficient("r", &self.r, g.nodes_v())?;
        let data = GoursatData::new(g, u_axis, v_axis, q, r).map_err(|e| CliError::Usage(format!("boundary: {e}")))?;
        Ok(match self.inject {
            Some(inj) => data.with_constant_mean_curvature_form(inj.l_im, inj.m_im),
            None => data,
        })
    }

    /// Preset name shared by `q` and `r`, if any.
    pub fn preset(&self) -> Option<&str> {
        match (&self.q, &self.r, &self.boundary, &self.inject) {
            (Coefficient::Preset(a), Coefficient::Preset(b), Boundary::Preset(z), None) if a == b && z == "zero" => {
                Some(a.as_str())
            }
            _ => None,
        }
    }
}

pub fn check_lambda(l: Complex64) -> Result<(), CliError> {
    if l.norm() == 0.0 || !l.is_finite() {
        return Err(CliError::Usage(format!("lambda = {l} is not allowed; the spectral parameter must be nonzero")));
    }
    Ok(())
}

/// `1`, `0.7`, `0.5+0.25i`: the label used in output file names.
pub fn lambda_label(l: Complex64) -> String {
    if l.im == 0.0 {
        format!("{}", l.re)
    } else {
        format!("{}{:+}i", l.re, l.im)
    }
}

/// Comma separated list of complex numbers such as `1,0.7,0.5+0.2i`.
pub fn parse_lambda_list(text: &str) -> Result<Vec<[f64; 2]>, CliError> {
    text.split(',')
        .map(|item| {
            let z: Complex64 = item
                .trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("--lambda: cannot parse {item:?} as a complex number")))?;
            Ok([z.re, z.im])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const RP: &str = r#"{
        "domain": {"u0": 0, "u1": 0.5, "v0": 0, "v1": 0.5},
        "grid": {"Nu": 9, "Nv": 9},
        "q": "rp", "r": "rp"
    }"#;

    #[test]
    fn parses_minimal_config_with_defaults() {
        let cfg = RunConfig::from_json(RP).unwrap();
        assert_eq!(cfg.boundary, Boundary::Preset("zero".into()));
        assert_eq!(cfg.lambdas, vec![[1.0, 0.0]]);
        assert_eq!(cfg.tol("lift_norm"), 1e-6);
        assert_eq!(cfg.preset(), Some("rp"));
        assert_eq!(cfg.grid_spec().unwrap().nodes_u(), 9);
    }

    #[test]
    fn missing_grid_names_the_field() {
        let text = r#"{"domain": {"u0": 0, "u1": 1, "v0": 0, "v1": 1}, "q": "rp", "r": "rp"}"#;
        let err = RunConfig::from_json(text).unwrap_err();
        assert!(err.to_string().contains("grid"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn rejects_bad_values() {
        let bad = [
            RP.replace("\"u1\": 0.5", "\"u1\": -1"),
            RP.replace("\"Nu\": 9", "\"Nu\": 2"),
            RP.replace("\"q\": \"rp\"", "\"q\": \"sphere\""),
            RP.replace("\"q\": \"rp\"", "\"q\": [1, 2]"),
            RP.replace("\"r\": \"rp\"", "\"r\": \"rp\", \"lambdas\": [[0, 0]]"),
            RP.replace("\"r\": \"rp\"", "\"r\": \"rp\", \"tolerances\": {\"cubic\": -1}"),
            RP.replace("\"r\": \"rp\"", "\"r\": \"rp\", \"tolerances\": {\"nope\": 1}"),
            RP.replace("\"r\": \"rp\"", "\"r\": \"rp\", \"extra\": 1"),
        ];
        for text in bad {
            assert!(RunConfig::from_json(&text).is_err(), "{text}");
        }
    }

    #[test]
    fn inline_arrays_and_constants() {
        let text = RP
            .replace("\"q\": \"rp\"", "\"q\": 1.0")
            .replace("\"r\": \"rp\"", "\"r\": [0, 0, 0, 0, 0, 0, 0, 0, 0], \"boundary\": {\"u_axis\": [0,0,0,0,0,0,0,0,0], \"v_axis\": [0,0,0,0,0,0,0,0,0]}");
        let cfg = RunConfig::from_json(&text).unwrap();
        assert_eq!(cfg.goursat_data().unwrap().q(), &[1.0; 9]);
        assert_eq!(cfg.preset(), None);
    }

    #[test]
    fn lambda_labels_and_lists() {
        assert_eq!(lambda_label(Complex64::new(1.0, 0.0)), "1");
        assert_eq!(lambda_label(Complex64::new(0.7, 0.0)), "0.7");
        assert_eq!(lambda_label(Complex64::new(0.5, -0.25)), "0.5-0.25i");
        assert_eq!(parse_lambda_list("1, 0.7,0.5+0.2i").unwrap(), vec![[1.0, 0.0], [0.7, 0.0], [0.5, 0.2]]);
        assert!(parse_lambda_list("one").is_err());
    }
}
