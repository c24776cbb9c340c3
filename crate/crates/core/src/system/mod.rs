//! Finite transition systems with set-valued transition and output maps.
//!
//! A [`FiniteSystem`] is the tuple `(X, X0, U, F, Y, H)`: states, initial
//! states, inputs, a set-valued transition map, outputs and a set-valued
//! output map. Ids are dense integers; names live in symbol tables so the
//! fixpoint code can index arrays directly.
//!
//! The trace-level operations (beliefs, blocking prefixes, closed-loop
//! prefix sets) are exact and exhaustive; [`enumerate_paths`] and
//! [`generate_predicates`] are exponential and meant for oracle use.

mod ids;
pub mod text;

pub use ids::{InputId, OutputId, StateId, Valuation};

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use thiserror::Error;

/// A set of states consistent with an observation prefix.
pub type Belief = BTreeSet<StateId>;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SystemError {
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("unknown input `{0}`")]
    UnknownInput(String),
    #[error("unknown output `{0}`")]
    UnknownOutput(String),
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
    #[error("state `{0}` has no output (Y must cover X)")]
    NoOutput(String),
    #[error("{kind} id {id} out of range (have {len})")]
    IdOutOfRange { kind: &'static str, id: usize, len: usize },
    #[error("predicate map: {0}")]
    Predicates(String),
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
struct SymbolTable {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl SymbolTable {
    fn from_names<I: IntoIterator<Item = String>>(names: I) -> Result<Self, SystemError> {
        let mut table = SymbolTable::default();
        for name in names {
            if table.index.contains_key(&name) {
                return Err(SystemError::DuplicateName(name));
            }
            table.index.insert(name.clone(), table.names.len());
            table.names.push(name);
        }
        Ok(table)
    }

    fn get(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    fn len(&self) -> usize {
        self.names.len()
    }
}

/// A finite system `S = (X, X0, U, F, Y, H)`.
///
/// Immutable once built. Successor and output lists are sorted and
/// duplicate-free; every state emits at least one output.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FiniteSystem {
    states: SymbolTable,
    inputs: SymbolTable,
    outputs: SymbolTable,
    initial: Vec<StateId>,
    trans: Vec<Vec<Vec<StateId>>>,
    out: Vec<Vec<OutputId>>,
}

/// Incremental construction of a [`FiniteSystem`] from names or raw ids.
#[derive(Clone, Debug)]
pub struct FiniteSystemBuilder {
    states: SymbolTable,
    inputs: SymbolTable,
    outputs: SymbolTable,
    initial: BTreeSet<StateId>,
    trans: BTreeMap<(StateId, InputId), BTreeSet<StateId>>,
    out: BTreeMap<StateId, BTreeSet<OutputId>>,
}

impl FiniteSystemBuilder {
    pub fn new<S, I, O>(states: S, inputs: I, outputs: O) -> Result<Self, SystemError>
    where
        S: IntoIterator,
        S::Item: Into<String>,
        I: IntoIterator,
        I::Item: Into<String>,
        O: IntoIterator,
        O::Item: Into<String>,
    {
        Ok(FiniteSystemBuilder {
            states: SymbolTable::from_names(states.into_iter().map(Into::into))?,
            inputs: SymbolTable::from_names(inputs.into_iter().map(Into::into))?,
            outputs: SymbolTable::from_names(outputs.into_iter().map(Into::into))?,
            initial: BTreeSet::new(),
            trans: BTreeMap::new(),
            out: BTreeMap::new(),
        })
    }

    /// A builder with generated names `x0.., u0.., y0..`.
    pub fn with_sizes(states: usize, inputs: usize, outputs: usize) -> Self {
        Self::new(
            (0..states).map(|i| format!("x{i}")),
            (0..inputs).map(|i| format!("u{i}")),
            (0..outputs).map(|i| format!("y{i}")),
        )
        .expect("generated names are unique")
    }

    pub fn lookup_state(&self, name: &str) -> Result<StateId, SystemError> {
        self.states
            .get(name)
            .map(StateId)
            .ok_or_else(|| SystemError::UnknownState(name.to_string()))
    }

    pub fn lookup_input(&self, name: &str) -> Result<InputId, SystemError> {
        self.inputs
            .get(name)
            .map(InputId)
            .ok_or_else(|| SystemError::UnknownInput(name.to_string()))
    }

    pub fn lookup_output(&self, name: &str) -> Result<OutputId, SystemError> {
        self.outputs
            .get(name)
            .map(OutputId)
            .ok_or_else(|| SystemError::UnknownOutput(name.to_string()))
    }

    fn check(&self, kind: &'static str, id: usize, len: usize) -> Result<(), SystemError> {
        if id < len {
            Ok(())
        } else {
            Err(SystemError::IdOutOfRange { kind, id, len })
        }
    }

    pub fn initial_id(&mut self, x: StateId) -> Result<&mut Self, SystemError> {
        self.check("state", x.0, self.states.len())?;
        self.initial.insert(x);
        Ok(self)
    }

    pub fn transition_id(
        &mut self,
        x: StateId,
        u: InputId,
        x_next: StateId,
    ) -> Result<&mut Self, SystemError> {
        self.check("state", x.0, self.states.len())?;
        self.check("input", u.0, self.inputs.len())?;
        self.check("state", x_next.0, self.states.len())?;
        self.trans.entry((x, u)).or_default().insert(x_next);
        Ok(self)
    }

    pub fn output_id(&mut self, x: StateId, y: OutputId) -> Result<&mut Self, SystemError> {
        self.check("state", x.0, self.states.len())?;
        self.check("output", y.0, self.outputs.len())?;
        self.out.entry(x).or_default().insert(y);
        Ok(self)
    }

    pub fn initial(&mut self, x: &str) -> Result<&mut Self, SystemError> {
        let x = self.lookup_state(x)?;
        self.initial_id(x)
    }

    pub fn transition(&mut self, x: &str, u: &str, x_next: &str) -> Result<&mut Self, SystemError> {
        let (x, u, x_next) = (self.lookup_state(x)?, self.lookup_input(u)?, self.lookup_state(x_next)?);
        self.transition_id(x, u, x_next)
    }

    pub fn output(&mut self, x: &str, y: &str) -> Result<&mut Self, SystemError> {
        let (x, y) = (self.lookup_state(x)?, self.lookup_output(y)?);
        self.output_id(x, y)
    }

    pub fn build(self) -> Result<FiniteSystem, SystemError> {
        let n = self.states.len();
        let m = self.inputs.len();
        let mut trans = vec![vec![Vec::new(); m]; n];
        for ((x, u), succ) in self.trans {
            trans[x.0][u.0] = succ.into_iter().collect();
        }
        let mut out = vec![Vec::new(); n];
        for (x, ys) in self.out {
            out[x.0] = ys.into_iter().collect();
        }
        if let Some(x) = out.iter().position(Vec::is_empty) {
            return Err(SystemError::NoOutput(self.states.names[x].clone()));
        }
        Ok(FiniteSystem {
            states: self.states,
            inputs: self.inputs,
            outputs: self.outputs,
            initial: self.initial.into_iter().collect(),
            trans,
            out,
        })
    }
}

impl FiniteSystem {
    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_inputs(&self) -> usize {
        self.inputs.len()
    }

    pub fn num_outputs(&self) -> usize {
        self.outputs.len()
    }

    pub fn states(&self) -> impl Iterator<Item = StateId> + '_ {
        (0..self.num_states()).map(StateId)
    }

    pub fn inputs(&self) -> impl Iterator<Item = InputId> + '_ {
        (0..self.num_inputs()).map(InputId)
    }

    pub fn outputs(&self) -> impl Iterator<Item = OutputId> + '_ {
        (0..self.num_outputs()).map(OutputId)
    }

    pub fn initial(&self) -> &[StateId] {
        &self.initial
    }

    pub fn is_initial(&self, x: StateId) -> bool {
        self.initial.binary_search(&x).is_ok()
    }

    /// `F(x, u)`, sorted.
    pub fn successors(&self, x: StateId, u: InputId) -> &[StateId] {
        &self.trans[x.0][u.0]
    }

    /// `H(x)`, sorted and non-empty.
    pub fn outputs_of(&self, x: StateId) -> &[OutputId] {
        &self.out[x.0]
    }

    pub fn emits(&self, x: StateId, y: OutputId) -> bool {
        self.out[x.0].binary_search(&y).is_ok()
    }

    pub fn is_enabled(&self, x: StateId, u: InputId) -> bool {
        !self.trans[x.0][u.0].is_empty()
    }

    /// `Enab(x)` for a single state.
    pub fn enabled(&self, x: StateId) -> BTreeSet<InputId> {
        self.inputs().filter(|&u| self.is_enabled(x, u)).collect()
    }

    pub fn state_name(&self, x: StateId) -> &str {
        &self.states.names[x.0]
    }

    pub fn input_name(&self, u: InputId) -> &str {
        &self.inputs.names[u.0]
    }

    pub fn output_name(&self, y: OutputId) -> &str {
        &self.outputs.names[y.0]
    }

    pub fn state_id(&self, name: &str) -> Option<StateId> {
        self.states.get(name).map(StateId)
    }

    pub fn input_id(&self, name: &str) -> Option<InputId> {
        self.inputs.get(name).map(InputId)
    }

    pub fn output_id(&self, name: &str) -> Option<OutputId> {
        self.outputs.get(name).map(OutputId)
    }

    pub fn state_names(&self) -> &[String] {
        &self.states.names
    }

    pub fn input_names(&self) -> &[String] {
        &self.inputs.names
    }

    pub fn output_names(&self) -> &[String] {
        &self.outputs.names
    }

    /// A builder pre-filled with this system's tables and maps.
    pub fn to_builder(&self) -> FiniteSystemBuilder {
        let mut b = FiniteSystemBuilder {
            states: self.states.clone(),
            inputs: self.inputs.clone(),
            outputs: self.outputs.clone(),
            initial: self.initial.iter().copied().collect(),
            trans: BTreeMap::new(),
            out: BTreeMap::new(),
        };
        for x in self.states() {
            for u in self.inputs() {
                if self.is_enabled(x, u) {
                    b.trans
                        .insert((x, u), self.successors(x, u).iter().copied().collect());
                }
            }
            b.out.insert(x, self.outputs_of(x).iter().copied().collect());
        }
        b
    }

    fn check_state(&self, x: StateId) -> Result<(), SystemError> {
        if x.0 < self.num_states() {
            Ok(())
        } else {
            Err(SystemError::IdOutOfRange { kind: "state", id: x.0, len: self.num_states() })
        }
    }

    fn check_input(&self, u: InputId) -> Result<(), SystemError> {
        if u.0 < self.num_inputs() {
            Ok(())
        } else {
            Err(SystemError::IdOutOfRange { kind: "input", id: u.0, len: self.num_inputs() })
        }
    }

    fn check_output(&self, y: OutputId) -> Result<(), SystemError> {
        if y.0 < self.num_outputs() {
            Ok(())
        } else {
            Err(SystemError::IdOutOfRange { kind: "output", id: y.0, len: self.num_outputs() })
        }
    }
}

/// Enabled inputs of a set of states, lifted by intersection.
///
/// The empty set yields every input.
pub fn enab_set(sys: &FiniteSystem, states: &Belief) -> Result<BTreeSet<InputId>, SystemError> {
    for &x in states {
        sys.check_state(x)?;
    }
    Ok(sys
        .inputs()
        .filter(|&u| states.iter().all(|&x| sys.is_enabled(x, u)))
        .collect())
}

/// One observation step: `{x' | x in b, x' in F(x, u), y in H(x')}`.
pub fn belief_update(
    sys: &FiniteSystem,
    b: &Belief,
    u: InputId,
    y: OutputId,
) -> Result<Belief, SystemError> {
    sys.check_input(u)?;
    sys.check_output(y)?;
    let mut next = Belief::new();
    for &x in b {
        sys.check_state(x)?;
        for &x2 in sys.successors(x, u) {
            if sys.emits(x2, y) {
                next.insert(x2);
            }
        }
    }
    Ok(next)
}

/// For every output emitted by an initial state, the initial states emitting it.
pub fn initial_beliefs(sys: &FiniteSystem) -> BTreeMap<OutputId, Belief> {
    let mut map: BTreeMap<OutputId, Belief> = BTreeMap::new();
    for &x in sys.initial() {
        for &y in sys.outputs_of(x) {
            map.entry(y).or_default().insert(x);
        }
    }
    map
}

/// `Last_S(prefix)`: the states reachable along some path generating `prefix`.
pub fn last_states(sys: &FiniteSystem, prefix: &ExternalPrefix) -> Result<Belief, SystemError> {
    let y0 = prefix.outputs[0];
    sys.check_output(y0)?;
    let mut b: Belief = sys.initial().iter().copied().filter(|&x| sys.emits(x, y0)).collect();
    for (u, y) in prefix.steps() {
        b = belief_update(sys, &b, u, y)?;
    }
    Ok(b)
}

/// Whether every infinite extension of `prefix` continuing with `u` is blocking:
/// the prefix is realizable and `u` is disabled in some consistent state.
pub fn iblock_prefix(
    sys: &FiniteSystem,
    prefix: &ExternalPrefix,
    u: InputId,
) -> Result<bool, SystemError> {
    sys.check_input(u)?;
    let last = last_states(sys, prefix)?;
    Ok(!last.is_empty() && !enab_set(sys, &last)?.contains(&u))
}

/// An alternating sequence `y0 u0 y1 ... yk` of output and input ids.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ExternalPrefix {
    outputs: Vec<OutputId>,
    inputs: Vec<InputId>,
}

impl ExternalPrefix {
    pub fn new(y0: OutputId) -> Self {
        ExternalPrefix { outputs: vec![y0], inputs: Vec::new() }
    }

    /// Builds a prefix from its interleaving; `outputs.len()` must be `inputs.len() + 1`.
    pub fn from_parts(outputs: Vec<OutputId>, inputs: Vec<InputId>) -> Option<Self> {
        (outputs.len() == inputs.len() + 1).then_some(ExternalPrefix { outputs, inputs })
    }

    pub fn push(&mut self, u: InputId, y: OutputId) {
        self.inputs.push(u);
        self.outputs.push(y);
    }

    pub fn extended(&self, u: InputId, y: OutputId) -> Self {
        let mut p = self.clone();
        p.push(u, y);
        p
    }

    /// Number of inputs `k` in `y0 u0 ... yk`.
    pub fn steps_len(&self) -> usize {
        self.inputs.len()
    }

    pub fn outputs(&self) -> &[OutputId] {
        &self.outputs
    }

    pub fn inputs(&self) -> &[InputId] {
        &self.inputs
    }

    pub fn last_output(&self) -> OutputId {
        *self.outputs.last().expect("prefix is never empty")
    }

    /// `(u_i, y_{i+1})` pairs.
    pub fn steps(&self) -> impl Iterator<Item = (InputId, OutputId)> + '_ {
        self.inputs.iter().copied().zip(self.outputs[1..].iter().copied())
    }

    /// The prefix `y0 u0 ... yk`.
    pub fn truncated(&self, k: usize) -> Self {
        ExternalPrefix {
            outputs: self.outputs[..=k].to_vec(),
            inputs: self.inputs[..k].to_vec(),
        }
    }

    pub fn display<'a>(&'a self, sys: &'a FiniteSystem) -> impl fmt::Display + 'a {
        DisplayPrefix { prefix: self, sys }
    }
}

struct DisplayPrefix<'a> {
    prefix: &'a ExternalPrefix,
    sys: &'a FiniteSystem,
}

impl fmt::Display for DisplayPrefix<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.sys.output_name(self.prefix.outputs[0]))?;
        for (u, y) in self.prefix.steps() {
            write!(f, " {} {}", self.sys.input_name(u), self.sys.output_name(y))?;
        }
        Ok(())
    }
}

impl fmt::Display for ExternalPrefix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "y{}", self.outputs[0].0)?;
        for (u, y) in self.steps() {
            write!(f, " u{} y{}", u.0, y.0)?;
        }
        Ok(())
    }
}

/// A finite path `x0 u0 x1 ... xk` of a system.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Path {
    pub states: Vec<StateId>,
    pub inputs: Vec<InputId>,
}

impl Path {
    pub fn last(&self) -> StateId {
        *self.states.last().expect("paths are never empty")
    }
}

/// All path prefixes with exactly `depth` transitions, plus shorter maximal
/// paths that end in a state with every input disabled.
pub fn enumerate_paths(sys: &FiniteSystem, depth: usize) -> BTreeSet<Path> {
    let mut frontier: Vec<Path> = sys
        .initial()
        .iter()
        .map(|&x| Path { states: vec![x], inputs: Vec::new() })
        .collect();
    let mut done = BTreeSet::new();
    for _ in 0..depth {
        let mut next = Vec::new();
        for path in frontier {
            let x = path.last();
            let mut extended = false;
            for u in sys.inputs() {
                for &x2 in sys.successors(x, u) {
                    let mut p = path.clone();
                    p.states.push(x2);
                    p.inputs.push(u);
                    next.push(p);
                    extended = true;
                }
            }
            if !extended {
                done.insert(path);
            }
        }
        frontier = next;
    }
    done.extend(frontier);
    done
}

/// Input and output predicate maps `P_I : U => 2^AP_I` and `P_O : X => 2^AP_O`.
///
/// Letters are bitmasks over the respective proposition lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredicateMaps {
    input_aps: Vec<String>,
    output_aps: Vec<String>,
    input_preds: Vec<Vec<Valuation>>,
    state_preds: Vec<Vec<Valuation>>,
}

impl PredicateMaps {
    pub fn new(
        input_aps: Vec<String>,
        output_aps: Vec<String>,
        input_preds: Vec<Vec<Valuation>>,
        state_preds: Vec<Vec<Valuation>>,
    ) -> Result<Self, SystemError> {
        if input_aps.len() + output_aps.len() > 16 {
            return Err(SystemError::Predicates("at most 16 atomic propositions".into()));
        }
        let norm = |sets: Vec<Vec<Valuation>>, width: usize, what: &str| {
            sets.into_iter()
                .enumerate()
                .map(|(i, mut v)| {
                    v.sort();
                    v.dedup();
                    if v.is_empty() {
                        return Err(SystemError::Predicates(format!("{what} {i} has no letter")));
                    }
                    if v.iter().any(|l| l.0 >> width != 0) {
                        return Err(SystemError::Predicates(format!(
                            "{what} {i} uses an undeclared proposition"
                        )));
                    }
                    Ok(v)
                })
                .collect::<Result<Vec<_>, _>>()
        };
        let input_preds = norm(input_preds, input_aps.len(), "input")?;
        let state_preds = norm(state_preds, output_aps.len(), "state")?;
        Ok(PredicateMaps { input_aps, output_aps, input_preds, state_preds })
    }

    /// Maps where every input carries the empty letter and states carry the given letters.
    pub fn state_only(
        output_aps: Vec<String>,
        num_inputs: usize,
        state_preds: Vec<Vec<Valuation>>,
    ) -> Result<Self, SystemError> {
        Self::new(Vec::new(), output_aps, vec![vec![Valuation::EMPTY]; num_inputs], state_preds)
    }

    pub fn input_aps(&self) -> &[String] {
        &self.input_aps
    }

    pub fn output_aps(&self) -> &[String] {
        &self.output_aps
    }

    pub fn input_letters(&self, u: InputId) -> &[Valuation] {
        &self.input_preds[u.0]
    }

    pub fn state_letters(&self, x: StateId) -> &[Valuation] {
        &self.state_preds[x.0]
    }

    pub fn num_states(&self) -> usize {
        self.state_preds.len()
    }

    pub fn num_inputs(&self) -> usize {
        self.input_preds.len()
    }

    pub fn matches(&self, sys: &FiniteSystem) -> bool {
        self.num_states() == sys.num_states() && self.num_inputs() == sys.num_inputs()
    }

    /// Index of the combined letter `(mu, lambda)` over `AP_I ++ AP_O`.
    pub fn letter(&self, mu: Valuation, lambda: Valuation) -> usize {
        (mu.0 | (lambda.0 << self.input_aps.len())) as usize
    }
}

/// A predicate sequence `lambda0 mu0 lambda1 ... lambdak`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PredicateSeq {
    pub state_letters: Vec<Valuation>,
    pub input_letters: Vec<Valuation>,
}

/// Every predicate sequence generated by `path`.
pub fn generate_predicates(pm: &PredicateMaps, path: &Path) -> BTreeSet<PredicateSeq> {
    let mut seqs = vec![PredicateSeq { state_letters: Vec::new(), input_letters: Vec::new() }];
    for (i, &x) in path.states.iter().enumerate() {
        let mut next = Vec::new();
        for s in &seqs {
            for &lambda in pm.state_letters(x) {
                let mut s2 = s.clone();
                s2.state_letters.push(lambda);
                next.push(s2);
            }
        }
        seqs = next;
        if let Some(&u) = path.inputs.get(i) {
            let mut next = Vec::new();
            for s in &seqs {
                for &mu in pm.input_letters(u) {
                    let mut s2 = s.clone();
                    s2.input_letters.push(mu);
                    next.push(s2);
                }
            }
            seqs = next;
        }
    }
    seqs.into_iter().collect()
}

/// An output-feedback strategy: external prefix to the next input, if defined.
pub trait Strategy {
    fn input_for(&self, prefix: &ExternalPrefix) -> Option<InputId>;
}

impl<F> Strategy for F
where
    F: Fn(&ExternalPrefix) -> Option<InputId>,
{
    fn input_for(&self, prefix: &ExternalPrefix) -> Option<InputId> {
        self(prefix)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CompositionFailure {
    Undefined,
    NotEnabled(InputId),
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("strategy not feedback-composable at `{prefix}`: {reason:?}")]
pub struct CompositionError {
    pub prefix: ExternalPrefix,
    pub reason: CompositionFailure,
}

/// The closed-loop external prefixes with exactly `k` inputs.
///
/// Every reached prefix (levels `0..=k`) must have a defined strategy input
/// enabled in all consistent states.
pub fn closed_loop_prefixes<C: Strategy + ?Sized>(
    sys: &FiniteSystem,
    ctrl: &C,
    k: usize,
) -> Result<BTreeSet<ExternalPrefix>, CompositionError> {
    let mut level: Vec<(ExternalPrefix, Belief)> = initial_beliefs(sys)
        .into_iter()
        .map(|(y, b)| (ExternalPrefix::new(y), b))
        .collect();
    for depth in 0..=k {
        let mut next = Vec::new();
        for (prefix, belief) in &level {
            let u = ctrl.input_for(prefix).ok_or_else(|| CompositionError {
                prefix: prefix.clone(),
                reason: CompositionFailure::Undefined,
            })?;
            let enabled = u.0 < sys.num_inputs() && belief.iter().all(|&x| sys.is_enabled(x, u));
            if !enabled {
                return Err(CompositionError {
                    prefix: prefix.clone(),
                    reason: CompositionFailure::NotEnabled(u),
                });
            }
            if depth == k {
                continue;
            }
            for y in sys.outputs() {
                let b = belief_update(sys, belief, u, y).expect("ids validated");
                if !b.is_empty() {
                    next.push((prefix.extended(u, y), b));
                }
            }
        }
        if depth < k {
            level = next;
        }
    }
    Ok(level.into_iter().map(|(p, _)| p).collect())
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// The two-state running example: `b` is disabled in `x1`.
    pub(crate) fn s2() -> FiniteSystem {
        let mut b = FiniteSystemBuilder::new(["x0", "x1"], ["a", "b"], ["y0", "y1"]).unwrap();
        b.initial("x0").unwrap();
        b.transition("x0", "a", "x0").unwrap();
        b.transition("x0", "a", "x1").unwrap();
        b.transition("x0", "b", "x0").unwrap();
        b.transition("x1", "a", "x1").unwrap();
        b.output("x0", "y0").unwrap();
        b.output("x1", "y0").unwrap();
        b.output("x1", "y1").unwrap();
        b.build().unwrap()
    }

    fn set<T: Ord + Copy>(items: &[T]) -> BTreeSet<T> {
        items.iter().copied().collect()
    }

    const X0: StateId = StateId(0);
    const X1: StateId = StateId(1);
    const A: InputId = InputId(0);
    const B: InputId = InputId(1);
    const Y0: OutputId = OutputId(0);
    const Y1: OutputId = OutputId(1);

    #[test]
    fn enab_set_intersects() {
        let s = s2();
        assert_eq!(enab_set(&s, &set(&[X0, X1])).unwrap(), set(&[A]));
        assert_eq!(enab_set(&s, &set(&[X0])).unwrap(), set(&[A, B]));
        assert_eq!(enab_set(&s, &Belief::new()).unwrap(), set(&[A, B]));
        assert!(enab_set(&s, &set(&[StateId(7)])).is_err());
    }

    #[test]
    fn belief_update_filters_by_output() {
        let s = s2();
        assert_eq!(belief_update(&s, &set(&[X0]), A, Y0).unwrap(), set(&[X0, X1]));
        assert_eq!(belief_update(&s, &Belief::new(), A, Y1).unwrap(), Belief::new());
        assert_eq!(belief_update(&s, &set(&[X0]), B, Y1).unwrap(), Belief::new());
        assert!(belief_update(&s, &set(&[X0]), InputId(5), Y0).is_err());
    }

    #[test]
    fn initial_beliefs_group_by_output() {
        let s = s2();
        let m = initial_beliefs(&s);
        assert_eq!(m.len(), 1);
        assert_eq!(m[&Y0], set(&[X0]));

        let empty = FiniteSystemBuilder::with_sizes(1, 1, 1);
        let mut empty = empty;
        empty.output_id(X0, Y0).unwrap();
        assert!(initial_beliefs(&empty.build().unwrap()).is_empty());

        let mut two = FiniteSystemBuilder::with_sizes(2, 1, 2);
        two.initial_id(X0).unwrap().initial_id(X1).unwrap();
        two.output_id(X0, Y0).unwrap().output_id(X1, Y0).unwrap().output_id(X1, Y1).unwrap();
        let m = initial_beliefs(&two.build().unwrap());
        assert_eq!(m[&Y0], set(&[X0, X1]));
        assert_eq!(m[&Y1], set(&[X1]));
    }

    #[test]
    fn blocking_prefixes() {
        let s = s2();
        let mut p = ExternalPrefix::new(Y0);
        assert!(!iblock_prefix(&s, &p, B).unwrap());
        p.push(A, Y0);
        assert!(iblock_prefix(&s, &p, B).unwrap());
        // y1 is never emitted initially: empty belief, not blocking.
        assert!(!iblock_prefix(&s, &ExternalPrefix::new(Y1), B).unwrap());
    }

    #[test]
    fn paths_respect_maximality() {
        let s = s2();
        let p1 = enumerate_paths(&s, 1);
        let expect: BTreeSet<Path> = [
            (vec![X0, X0], vec![A]),
            (vec![X0, X1], vec![A]),
            (vec![X0, X0], vec![B]),
        ]
        .into_iter()
        .map(|(states, inputs)| Path { states, inputs })
        .collect();
        assert_eq!(p1, expect);
        let p0 = enumerate_paths(&s, 0);
        assert_eq!(p0.len(), 1);

        let mut dead = FiniteSystemBuilder::with_sizes(2, 1, 1);
        dead.initial_id(X0).unwrap().initial_id(X1).unwrap();
        dead.output_id(X0, Y0).unwrap().output_id(X1, Y0).unwrap();
        let dead = dead.build().unwrap();
        for depth in 0..4 {
            assert!(enumerate_paths(&dead, depth).iter().all(|p| p.states.len() == 1));
            assert_eq!(enumerate_paths(&dead, depth).len(), 2);
        }
    }

    #[test]
    fn predicate_generation() {
        let p = Valuation(1);
        let pm = PredicateMaps::state_only(
            vec!["p".into()],
            2,
            vec![vec![Valuation::EMPTY], vec![p]],
        )
        .unwrap();
        let path = Path { states: vec![X0, X1], inputs: vec![A] };
        let seqs = generate_predicates(&pm, &path);
        assert_eq!(seqs.len(), 1);
        let only = seqs.iter().next().unwrap();
        assert_eq!(only.state_letters, vec![Valuation::EMPTY, p]);
        assert_eq!(only.input_letters, vec![Valuation::EMPTY]);

        let pm2 = PredicateMaps::state_only(
            vec!["p".into()],
            2,
            vec![vec![Valuation::EMPTY, p], vec![p]],
        )
        .unwrap();
        let single = Path { states: vec![X0], inputs: vec![] };
        assert_eq!(generate_predicates(&pm2, &single).len(), 2);
        assert!(PredicateMaps::state_only(vec![], 1, vec![vec![]]).is_err());
    }

    #[test]
    fn closed_loop_levels() {
        let s = s2();
        let always_b = |_: &ExternalPrefix| Some(B);
        let got = closed_loop_prefixes(&s, &always_b, 2).unwrap();
        let want: BTreeSet<_> =
            [ExternalPrefix::new(Y0).extended(B, Y0).extended(B, Y0)].into_iter().collect();
        assert_eq!(got, want);

        let always_a = |_: &ExternalPrefix| Some(A);
        let got = closed_loop_prefixes(&s, &always_a, 1).unwrap();
        let want: BTreeSet<_> = [
            ExternalPrefix::new(Y0).extended(A, Y0),
            ExternalPrefix::new(Y0).extended(A, Y1),
        ]
        .into_iter()
        .collect();
        assert_eq!(got, want);

        let bad = |p: &ExternalPrefix| Some(if p.steps_len() == 0 { A } else { B });
        let err = closed_loop_prefixes(&s, &bad, 2).unwrap_err();
        assert_eq!(err.prefix, ExternalPrefix::new(Y0).extended(A, Y0));
        assert_eq!(err.reason, CompositionFailure::NotEnabled(B));

        let undefined = |_: &ExternalPrefix| None;
        assert_eq!(
            closed_loop_prefixes(&s, &undefined, 0).unwrap_err().reason,
            CompositionFailure::Undefined
        );
    }

    #[test]
    fn missing_output_rejected() {
        let b = FiniteSystemBuilder::with_sizes(1, 1, 1);
        assert!(matches!(b.build(), Err(SystemError::NoOutput(_))));
    }
}
