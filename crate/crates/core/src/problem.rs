//! TOML problem files.
//!
//! A problem either points at a finite system file:
//!
//! ```toml
//! [system]
//! file = "s2.sys"
//! [spec]
//! ltl = "G !p"
//! ```
//!
//! or describes a sampled control system with a grid:
//!
//! ```toml
//! [dynamics]
//! kind = "integrator"
//! dim = 2
//! [disturbance]
//! w = [0.05, 0.05]
//! [grid]
//! lo = [0.0, 0.0]
//! hi = [4.0, 4.0]
//! eta = [0.5, 0.5]
//! tau = 0.5
//! [outputs]
//! mode = "noisy"
//! eps = 0.5
//! [inputs]
//! vectors = [[1.0, 0.0], [-1.0, 0.0]]
//! [[regions]]
//! name = "goal"
//! boxes = [{ lo = [3.0, 3.0], hi = [4.0, 4.0] }]
//! [spec]
//! ltl = "F goal"
//! ```
//!
//! Relative paths are resolved against the problem file's directory.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abstraction::{AffinePiece, ControlSystem, Dynamics, GridSpec, HyperRect, OutputMap, Region, Tile, VIOLATION};
use crate::automaton::hoa::{hoa_import, HoaImportOptions};
use crate::automaton::Uca;
use crate::ltl::{ltl_to_uca, parse_ltl, ApSplit, LtlFormula};
use crate::refinement::Policy;
use crate::system::text::parse_system;
use crate::system::{FiniteSystem, PredicateMaps};

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Toml(#[from] toml::de::Error),
    #[error("invalid problem: {0}")]
    Schema(String),
    #[error("system file: {0}")]
    System(#[from] crate::system::text::TextError),
    #[error("specification: {0}")]
    Ltl(#[from] crate::ltl::LtlError),
    #[error("specification: {0}")]
    Hoa(#[from] crate::automaton::hoa::HoaError),
}

fn schema(msg: impl Into<String>) -> ProblemError {
    ProblemError::Schema(msg.into())
}

pub(crate) fn read(path: &Path) -> Result<String, ProblemError> {
    fs::read_to_string(path).map_err(|source| ProblemError::Io { path: path.to_path_buf(), source })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<SystemSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dynamics: Option<DynamicsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub disturbance: Option<DisturbanceSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub growth: Option<GrowthSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outputs: Option<OutputsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inputs: Option<InputsSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<HyperRect>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub regions: Vec<Region>,
    pub spec: SpecSection,
    #[serde(default)]
    pub synthesis: SynthesisSection,
    #[serde(default)]
    pub simulation: SimulationSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub file: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case", tag = "kind")]
pub enum DynamicsSection {
    Integrator { dim: usize },
    Linear { a: Vec<Vec<f64>>, b: Vec<Vec<f64>> },
    Dubins,
    PiecewiseAffine { pieces: Vec<AffinePiece> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceSection {
    pub w: Vec<f64>,
}

/// A constant growth bound replacing the dynamics' default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GrowthSection {
    pub l: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "snake_case", tag = "mode")]
pub enum OutputsSection {
    Tiles { tiles: Vec<Tile> },
    Noisy { eps: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputsSection {
    pub vectors: Vec<Vec<f64>>,
    #[serde(default)]
    pub names: Vec<String>,
    /// Input propositions and, per input, the ones it sets.
    #[serde(default)]
    pub aps: Vec<String>,
    #[serde(default)]
    pub labels: Vec<Vec<String>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ltl: Option<String>,
    /// A co-Büchi HOA automaton (or a Büchi one with `dualize`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hoa: Option<PathBuf>,
    #[serde(default)]
    pub dualize: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthesisSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_max: Option<usize>,
    /// Output-anchored predicate reading in the product.
    #[serde(default)]
    pub strict: bool,
    /// Solve on the fly, dropping dominated counter functions.
    #[serde(default)]
    pub antichain: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_policy: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_policy: Option<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x0: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

/// A finite plant with its predicate maps.
#[derive(Clone, Debug)]
pub struct FinitePlant {
    pub sys: FiniteSystem,
    pub pm: PredicateMaps,
}

/// A sampled control system with its grid and labelled regions.
#[derive(Clone, Debug)]
pub struct ContinuousPlant {
    pub cs: ControlSystem,
    pub grid: GridSpec,
    pub regions: Vec<Region>,
}

#[derive(Clone, Debug)]
pub enum Plant {
    Finite(FinitePlant),
    Continuous(ContinuousPlant),
}

/// A validated problem with every reference resolved.
#[derive(Clone, Debug)]
pub struct Problem {
    pub file: ProblemFile,
    pub dir: PathBuf,
    pub plant: Plant,
}

impl Problem {
    pub fn load(path: &Path) -> Result<Problem, ProblemError> {
        let text = read(path)?;
        let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Problem::from_str(&text, &dir)
    }

    pub fn from_str(text: &str, dir: &Path) -> Result<Problem, ProblemError> {
        let file: ProblemFile = toml::from_str(text)?;
        let plant = match (&file.system, &file.dynamics) {
            (Some(s), None) => {
                let (sys, pm) = parse_system(&read(&dir.join(&s.file))?)?;
                Plant::Finite(FinitePlant { sys, pm })
            }
            (None, Some(d)) => Plant::Continuous(continuous(&file, d)?),
            (Some(_), Some(_)) => return Err(schema("give either [system] or [dynamics], not both")),
            (None, None) => return Err(schema("missing [system] or [dynamics]")),
        };
        let p = Problem { file, dir: dir.to_path_buf(), plant };
        p.policies()?;
        p.spec_formula()?;
        Ok(p)
    }

    /// Input and output propositions the specification may use.
    pub fn aps(&self) -> ApSplit {
        match &self.plant {
            Plant::Finite(f) => ApSplit::new(f.pm.input_aps().to_vec(), f.pm.output_aps().to_vec()),
            Plant::Continuous(c) => ApSplit::new(
                c.cs.input_aps.clone(),
                c.regions.iter().map(|r| r.name.clone()).chain([VIOLATION.to_string()]),
            ),
        }
    }

    /// The LTL specification; for continuous plants conjoined with
    /// `G !violation`. `None` for HOA specifications.
    pub fn spec_formula(&self) -> Result<Option<LtlFormula>, ProblemError> {
        let s = &self.file.spec;
        match (&s.ltl, &s.hoa) {
            (Some(ltl), None) => {
                let text = match self.plant {
                    Plant::Finite(_) => ltl.clone(),
                    Plant::Continuous(_) => format!("({ltl}) & G !{VIOLATION}"),
                };
                Ok(Some(parse_ltl(&text, &self.aps())?))
            }
            (None, Some(_)) => Ok(None),
            _ => Err(schema("[spec] needs exactly one of `ltl` and `hoa`")),
        }
    }

    /// The specification automaton over the problem's propositions.
    pub fn spec_automaton(&self) -> Result<Uca, ProblemError> {
        if let Some(f) = self.spec_formula()? {
            return Ok(ltl_to_uca(&f));
        }
        let path = self.dir.join(self.file.spec.hoa.as_ref().expect("checked in spec_formula"));
        let opts = HoaImportOptions { aps: Some(self.aps()), dualize: self.file.spec.dualize };
        let a = hoa_import(&read(&path)?, &opts)?;
        if matches!(self.plant, Plant::Continuous(_)) {
            let g = ltl_to_uca(&parse_ltl(&format!("G !{VIOLATION}"), &self.aps())?);
            return Ok(crate::automaton::complete_uca(&a.union(&g)));
        }
        Ok(crate::automaton::complete_uca(&a))
    }

    pub fn policies(&self) -> Result<(Policy, Policy), ProblemError> {
        let parse = |s: &Option<String>| -> Result<Policy, ProblemError> {
            s.as_deref().map_or(Ok(Policy::LowestId), |t| t.parse().map_err(|e: String| schema(e)))
        };
        Ok((parse(&self.file.synthesis.gamma_policy)?, parse(&self.file.synthesis.beta_policy)?))
    }
}

fn continuous(file: &ProblemFile, d: &DynamicsSection) -> Result<ContinuousPlant, ProblemError> {
    let dynamics = match d.clone() {
        DynamicsSection::Integrator { dim } => Dynamics::Integrator { dim },
        DynamicsSection::Linear { a, b } => Dynamics::Linear { a, b },
        DynamicsSection::Dubins => Dynamics::Dubins,
        DynamicsSection::PiecewiseAffine { pieces } => {
            if pieces.is_empty() {
                return Err(schema("piecewise_affine needs at least one piece"));
            }
            Dynamics::PiecewiseAffine { pieces }
        }
    };
    let n = dynamics.dim();
    let grid = file.grid.clone().ok_or_else(|| schema("missing [grid]"))?;
    let inputs = file.inputs.clone().ok_or_else(|| schema("missing [inputs]"))?;
    if inputs.vectors.is_empty() {
        return Err(schema("[inputs] needs at least one vector"));
    }
    let w = file.disturbance.as_ref().map_or(vec![0.0; n], |d| d.w.clone());
    if w.len() != n || w.iter().any(|&v| v < 0.0) {
        return Err(schema(format!("[disturbance] w must have {n} nonnegative entries")));
    }
    let output = match file.outputs.clone().ok_or_else(|| schema("missing [outputs]"))? {
        OutputsSection::Tiles { tiles } => OutputMap::Tiles(tiles),
        OutputsSection::Noisy { eps } if eps >= 0.0 => OutputMap::Noisy { eps },
        OutputsSection::Noisy { .. } => return Err(schema("eps must be nonnegative")),
    };
    let mut cs = ControlSystem::new(&dynamics, inputs.vectors.clone(), w, output);
    if !inputs.names.is_empty() {
        if inputs.names.len() != inputs.vectors.len() {
            return Err(schema("[inputs] names and vectors differ in length"));
        }
        cs = cs.with_input_names(inputs.names.clone());
    }
    if !inputs.labels.is_empty() {
        if inputs.labels.len() != inputs.vectors.len() {
            return Err(schema("[inputs] labels and vectors differ in length"));
        }
        let declared: BTreeSet<&String> = inputs.aps.iter().collect();
        if let Some(l) = inputs.labels.iter().flatten().find(|l| !declared.contains(l)) {
            return Err(schema(format!("input label `{l}` not declared in aps")));
        }
        cs.input_labels = inputs.labels.clone();
    }
    cs.input_aps = inputs.aps.clone();
    if let Some(g) = &file.growth {
        if g.l.len() != n || g.l.iter().any(|r| r.len() != n) {
            return Err(schema(format!("[growth] l must be {n}x{n}")));
        }
        let l = g.l.clone();
        cs.growth = Arc::new(move |_| l.clone());
    }
    if let Some(x0) = &file.initial {
        cs = cs.with_initial(x0.clone());
    }
    Ok(ContinuousPlant { cs, grid, regions: file.regions.clone() })
}

#[cfg(test)]
mod tests {
    use super::*;

    const NOISY: &str = r#"
        [dynamics]
        kind = "integrator"
        dim = 1
        [disturbance]
        w = [0.1]
        [grid]
        lo = [0.0]
        hi = [2.0]
        eta = [0.5]
        tau = 0.5
        [outputs]
        mode = "noisy"
        eps = 0.0
        [inputs]
        vectors = [[1.0], [-1.0]]
        names = ["right", "left"]
        [[regions]]
        name = "goal"
        boxes = [{ lo = [1.5], hi = [2.0] }]
        [spec]
        ltl = "F goal"
        [synthesis]
        k_max = 4
    "#;

    #[test]
    fn continuous_problem() {
        let p = Problem::from_str(NOISY, Path::new(".")).unwrap();
        let Plant::Continuous(c) = &p.plant else { panic!("continuous") };
        assert_eq!(c.cs.input_names, ["right", "left"]);
        assert_eq!(p.spec_formula().unwrap().unwrap().to_string(), "F goal & G !violation");
        assert_eq!(p.aps().outputs, ["goal", "violation"]);
    }

    #[test]
    fn schema_errors() {
        let bad = NOISY.replace("kind = \"integrator\"", "kind = \"warp\"");
        assert!(Problem::from_str(&bad, Path::new(".")).is_err());
        let bad = NOISY.replace("F goal", "F nowhere");
        assert!(matches!(Problem::from_str(&bad, Path::new(".")), Err(ProblemError::Ltl(_))));
        let bad = NOISY.replace("k_max = 4", "k_max = 4\ncolour = 1");
        assert!(matches!(Problem::from_str(&bad, Path::new(".")), Err(ProblemError::Toml(_))));
        let bad = NOISY.replace("w = [0.1]", "w = [0.1, 0.2]");
        assert!(matches!(Problem::from_str(&bad, Path::new(".")), Err(ProblemError::Schema(_))));
    }
}
