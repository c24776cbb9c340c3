//! Deterministic finite-memory output-feedback controllers.

use std::fmt::Write as _;

use thiserror::Error;

use crate::system::{ExternalPrefix, InputId, OutputId, Strategy};

/// Memory states `0..num_states`, initial state, and a partial step
/// function `(z, y) -> (u, z')`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MealyController {
    outputs: Vec<String>,
    inputs: Vec<String>,
    initial: usize,
    step: Vec<Vec<Option<(InputId, usize)>>>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MealyError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
}

impl MealyController {
    pub fn new(outputs: Vec<String>, inputs: Vec<String>, num_states: usize, initial: usize) -> Self {
        assert!(initial < num_states.max(1));
        let ny = outputs.len();
        MealyController { outputs, inputs, initial, step: vec![vec![None; ny]; num_states.max(1)] }
    }

    pub fn set_step(&mut self, z: usize, y: OutputId, u: InputId, z2: usize) {
        assert!(z2 < self.step.len() && u.0 < self.inputs.len());
        self.step[z][y.0] = Some((u, z2));
    }

    pub fn num_states(&self) -> usize {
        self.step.len()
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn step(&self, z: usize, y: OutputId) -> Option<(InputId, usize)> {
        self.step.get(z).and_then(|row| row.get(y.0).copied().flatten())
    }

    pub fn output_names(&self) -> &[String] {
        &self.outputs
    }

    pub fn input_names(&self) -> &[String] {
        &self.inputs
    }

    /// Memory state after replaying the prefix's history (all but its last
    /// output), or `None` if the history contradicts the controller.
    pub fn replay(&self, prefix: &ExternalPrefix) -> Option<usize> {
        let mut z = self.initial;
        for (k, &u) in prefix.inputs().iter().enumerate() {
            let (v, z2) = self.step(z, prefix.outputs()[k])?;
            if v != u {
                return None;
            }
            z = z2;
        }
        Some(z)
    }

    /// Structured text: header lines, then one `z y -> u z'` line per step.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "mealy");
        let _ = writeln!(s, "outputs {}", self.outputs.join(" "));
        let _ = writeln!(s, "inputs {}", self.inputs.join(" "));
        let _ = writeln!(s, "states {}", self.num_states());
        let _ = writeln!(s, "initial {}", self.initial);
        for (z, row) in self.step.iter().enumerate() {
            for (y, st) in row.iter().enumerate() {
                if let Some((u, z2)) = st {
                    let _ = writeln!(s, "{z} {} -> {} {z2}", self.outputs[y], self.inputs[u.0]);
                }
            }
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self, MealyError> {
        let err = |line: usize, msg: &str| MealyError::Syntax { line, msg: msg.to_string() };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let mut header = |key: &str| -> Result<(usize, Vec<String>), MealyError> {
            let (n, l) = lines.next().ok_or_else(|| err(0, "unexpected end of file"))?;
            let mut w = l.split_whitespace();
            if w.next() != Some(key) {
                return Err(err(n, &format!("expected `{key}`")));
            }
            Ok((n, w.map(String::from).collect()))
        };
        header("mealy")?;
        let (_, outputs) = header("outputs")?;
        let (_, inputs) = header("inputs")?;
        let num = |(n, v): (usize, Vec<String>)| -> Result<usize, MealyError> {
            match v.as_slice() {
                [x] => x.parse().map_err(|_| err(n, "expected a number")),
                _ => Err(err(n, "expected a number")),
            }
        };
        let states = num(header("states")?)?;
        let initial = num(header("initial")?)?;
        if initial >= states.max(1) {
            return Err(err(0, "initial state out of range"));
        }
        let mut m = MealyController::new(outputs, inputs, states, initial);
        for (n, l) in lines {
            let w: Vec<&str> = l.split_whitespace().collect();
            let [z, y, "->", u, z2] = w[..] else {
                return Err(err(n, "expected `z y -> u z'`"));
            };
            let z: usize = z.parse().map_err(|_| err(n, "bad memory state"))?;
            let z2: usize = z2.parse().map_err(|_| err(n, "bad memory state"))?;
            if z >= m.num_states() || z2 >= m.num_states() {
                return Err(err(n, "memory state out of range"));
            }
            let y = m.outputs.iter().position(|o| o == y).ok_or_else(|| err(n, "unknown output"))?;
            let u = m.inputs.iter().position(|i| i == u).ok_or_else(|| err(n, "unknown input"))?;
            if m.step[z][y].is_some() {
                return Err(err(n, "duplicate step"));
            }
            m.set_step(z, OutputId(y), InputId(u), z2);
        }
        Ok(m)
    }

    /// Graphviz rendering of the step table.
    pub fn to_dot(&self) -> String {
        let mut s = String::from("digraph mealy {\n  rankdir=LR;\n  init [shape=point];\n");
        let _ = writeln!(s, "  init -> z{};", self.initial);
        for (z, row) in self.step.iter().enumerate() {
            let _ = writeln!(s, "  z{z} [shape=circle];");
            for (y, st) in row.iter().enumerate() {
                if let Some((u, z2)) = st {
                    let _ = writeln!(
                        s,
                        "  z{z} -> z{z2} [label=\"{} / {}\"];",
                        self.outputs[y], self.inputs[u.0]
                    );
                }
            }
        }
        s.push_str("}\n");
        s
    }
}

impl Strategy for MealyController {
    fn input_for(&self, prefix: &ExternalPrefix) -> Option<InputId> {
        let z = self.replay(prefix)?;
        self.step(z, prefix.last_output()).map(|(u, _)| u)
    }
}

/// The strategy induced by `m`: replays memory along the prefix and is
/// undefined once the prefix leaves the controller's own behaviors.
pub fn induced_strategy(m: &MealyController) -> impl Fn(&ExternalPrefix) -> Option<InputId> + '_ {
    move |p| m.input_for(p)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn always_b() -> MealyController {
        let mut m = MealyController::new(vec!["y0".into(), "y1".into()], vec!["a".into(), "b".into()], 1, 0);
        m.set_step(0, OutputId(0), InputId(1), 0);
        m
    }

    #[test]
    fn induced_replay() {
        let m = always_b();
        let s = induced_strategy(&m);
        let p0 = ExternalPrefix::new(OutputId(0));
        assert_eq!(s(&p0), Some(InputId(1)));
        let p1 = p0.extended(InputId(1), OutputId(0));
        assert_eq!(s(&p1), Some(InputId(1)));
        assert_eq!(s(&p1), s(&p1));
        // History contradicting the controller's own choice.
        assert_eq!(s(&p0.extended(InputId(0), OutputId(0))), None);
        assert_eq!(s(&ExternalPrefix::new(OutputId(1))), None);
    }

    #[test]
    fn text_roundtrip() {
        let m = always_b();
        let t = m.to_text();
        assert_eq!(MealyController::from_text(&t).unwrap(), m);
        assert!(m.to_dot().contains("y0 / b"));
        assert!(MealyController::from_text("mealy\noutputs y\ninputs a\nstates 1\ninitial 0\n0 y -> c 0\n").is_err());
    }
}
