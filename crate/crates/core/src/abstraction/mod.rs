//! Grid-based finite abstraction of sampled control systems.
//!
//! The region of interest `[lo, hi]` is cut into closed cells of width
//! `eta`; two overflow states cover the rest of the state space:
//! `ovf_lo` holds every point with some coordinate strictly below `lo`, and
//! `ovf_hi` every point with some coordinate strictly above `hi`. Points on
//! shared cell boundaries belong to every cell touching them; points on the
//! boundary of the region of interest belong to grid cells only. Overflow states
//! are absorbing, enable every input, emit every output and carry the
//! reserved `violation` proposition.

pub mod dynamics;
pub mod geometry;
pub mod reach;

pub use dynamics::{AffinePiece, ControlSystem, Dynamics, OutputMap, Tile};
pub use geometry::HyperRect;
pub use reach::reach_overapprox;

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::system::{
    FiniteSystem, FiniteSystemBuilder, InputId, OutputId, PredicateMaps, StateId, Valuation,
};

/// Name of the output proposition carried by the overflow states.
pub const VIOLATION: &str = "violation";

/// Name of the output emitted by points outside every tile.
pub const BACKGROUND: &str = "none";

/// Absolute slack added to reach boxes and noise radii so that rounding
/// never drops a cell touching the exact boundary.
const GUARD: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AbstractionError {
    #[error("axis {axis}: hi - lo = {span} is not a positive integer multiple of eta = {eta}")]
    Misaligned { axis: usize, span: f64, eta: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("sampling time must be positive")]
    NonPositiveTau,
    #[error("`{0}` is reserved")]
    ReservedName(String),
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub eta: Vec<f64>,
    pub tau: f64,
    #[serde(default = "default_rk4_steps")]
    pub rk4_steps: usize,
}

fn default_rk4_steps() -> usize {
    10
}

impl GridSpec {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>, eta: Vec<f64>, tau: f64) -> Self {
        GridSpec { lo, hi, eta, tau, rk4_steps: default_rk4_steps() }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    /// Cells per axis.
    pub fn counts(&self) -> Result<Vec<usize>, AbstractionError> {
        if self.hi.len() != self.dim() || self.eta.len() != self.dim() {
            return Err(AbstractionError::Dimension("grid bounds and eta differ in length".into()));
        }
        (0..self.dim())
            .map(|d| {
                let span = self.hi[d] - self.lo[d];
                let eta = self.eta[d];
                let k = (span / eta).round();
                let ok = eta > 0.0 && k >= 1.0 && (k * eta - span).abs() <= 1e-9 * span.abs().max(1.0);
                if ok {
                    Ok(k as usize)
                } else {
                    Err(AbstractionError::Misaligned { axis: d, span, eta })
                }
            })
            .collect()
    }
}

/// A labeled region: the proposition holds exactly on the union of boxes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub name: String,
    pub boxes: Vec<HyperRect>,
}

/// Validated grid geometry.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    pub spec: GridSpec,
    counts: Vec<usize>,
    strides: Vec<usize>,
    num_cells: usize,
}

impl Grid {
    pub fn new(spec: GridSpec) -> Result<Self, AbstractionError> {
        let counts = spec.counts()?;
        let mut strides = Vec::with_capacity(counts.len());
        let mut acc = 1;
        for &c in &counts {
            strides.push(acc);
            acc *= c;
        }
        Ok(Grid { spec, counts, strides, num_cells: acc })
    }

    pub fn num_cells(&self) -> usize {
        self.num_cells
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn multi_index(&self, cell: usize) -> Vec<usize> {
        self.counts.iter().zip(&self.strides).map(|(&c, &s)| cell / s % c).collect()
    }

    pub fn cell_box(&self, cell: usize) -> HyperRect {
        let idx = self.multi_index(cell);
        let s = &self.spec;
        HyperRect {
            lo: (0..s.dim()).map(|d| s.lo[d] + idx[d] as f64 * s.eta[d]).collect(),
            hi: (0..s.dim()).map(|d| s.lo[d] + (idx[d] + 1) as f64 * s.eta[d]).collect(),
        }
    }

    /// Per-axis index range of closed cells meeting `[a, b]`, if any.
    fn axis_range(&self, d: usize, a: f64, b: f64) -> Option<(usize, usize)> {
        if !(a <= b) {
            return None;
        }
        let s = &self.spec;
        let lo = ((a - s.lo[d]) / s.eta[d] - 1.0).ceil().max(0.0);
        let hi = ((b - s.lo[d]) / s.eta[d]).floor().min(self.counts[d] as f64 - 1.0);
        (lo <= hi).then(|| (lo as usize, hi as usize))
    }

    /// Grid cells whose closure meets the closed box.
    pub fn cells_meeting(&self, b: &HyperRect) -> Vec<usize> {
        let mut ranges = Vec::with_capacity(self.spec.dim());
        for d in 0..self.spec.dim() {
            match self.axis_range(d, b.lo[d], b.hi[d]) {
                Some(r) => ranges.push(r),
                None => return Vec::new(),
            }
        }
        let mut out = vec![0usize];
        for (d, &(l, h)) in ranges.iter().enumerate() {
            out = out
                .into_iter()
                .flat_map(|base| (l..=h).map(move |i| base + i * self.strides[d]))
                .collect();
        }
        out.sort_unstable();
        out
    }

    /// Whether the box meets `{x | some x_d < lo_d}`.
    pub fn meets_low(&self, b: &HyperRect) -> bool {
        (0..self.spec.dim()).any(|d| b.lo[d] < self.spec.lo[d])
    }

    /// Whether the box meets `{x | some x_d > hi_d}`.
    pub fn meets_high(&self, b: &HyperRect) -> bool {
        (0..self.spec.dim()).any(|d| b.hi[d] > self.spec.hi[d])
    }

    pub fn cell_name(&self, cell: usize) -> String {
        let idx: Vec<String> = self.multi_index(cell).iter().map(usize::to_string).collect();
        format!("c{}", idx.join("_"))
    }
}

/// A finite abstraction together with the geometry defining its relation
/// to the concrete system.
#[derive(Clone, Debug)]
pub struct GriddedAbstraction {
    pub system: FiniteSystem,
    pub preds: PredicateMaps,
    pub grid: Grid,
    pub output: OutputMap,
    pub inputs: Vec<Vec<f64>>,
}

impl GriddedAbstraction {
    pub fn overflow_low(&self) -> StateId {
        StateId(self.grid.num_cells())
    }

    pub fn overflow_high(&self) -> StateId {
        StateId(self.grid.num_cells() + 1)
    }

    pub fn is_overflow(&self, x: StateId) -> bool {
        x.0 >= self.grid.num_cells()
    }

    /// The cell's box; `None` for overflow states.
    pub fn cell_box(&self, x: StateId) -> Option<HyperRect> {
        (!self.is_overflow(x)).then(|| self.grid.cell_box(x.0))
    }

    /// Abstract states containing the point.
    pub fn alpha(&self, x: &[f64]) -> Vec<StateId> {
        let p = HyperRect::point(x);
        let mut out: Vec<StateId> = self.grid.cells_meeting(&p).into_iter().map(StateId).collect();
        if self.grid.meets_low(&p) {
            out.push(self.overflow_low());
        }
        if self.grid.meets_high(&p) {
            out.push(self.overflow_high());
        }
        out
    }

    /// Concrete inputs refining an abstract input: the representative itself.
    pub fn beta(&self, u: InputId) -> Vec<Vec<f64>> {
        vec![self.inputs[u.0].clone()]
    }

    /// Abstract outputs containing the concrete output.
    pub fn gamma(&self, y: &[f64]) -> Vec<OutputId> {
        match &self.output {
            OutputMap::Tiles(tiles) => {
                let mut out: Vec<OutputId> = tiles
                    .iter()
                    .enumerate()
                    .filter(|(_, t)| t.boxes.iter().any(|b| b.contains(y)))
                    .map(|(i, _)| OutputId(i))
                    .collect();
                if out.is_empty() {
                    out.push(OutputId(tiles.len()));
                }
                out
            }
            OutputMap::Noisy { .. } => self.alpha(y).into_iter().map(|x| OutputId(x.0)).collect(),
        }
    }

    /// Some concrete point of the abstract state (the cell center, or a
    /// point just outside the region of interest for overflow states).
    pub fn representative(&self, x: StateId) -> Vec<f64> {
        match self.cell_box(x) {
            Some(b) => b.center(),
            None if x == self.overflow_low() => {
                self.grid.spec.lo.iter().zip(&self.grid.spec.eta).map(|(l, e)| l - e).collect()
            }
            None => self.grid.spec.hi.iter().zip(&self.grid.spec.eta).map(|(h, e)| h + e).collect(),
        }
    }

    pub fn violation_ap(&self) -> usize {
        self.preds.output_aps().iter().position(|a| a == VIOLATION).expect("violation declared")
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct AbstractionOptions {
    /// Worker threads for the transition computation (default: all cores).
    pub jobs: Option<usize>,
}

/// Per-point proposition letter.
fn letter_at(regions: &[Region], x: &[f64]) -> Valuation {
    regions
        .iter()
        .enumerate()
        .filter(|(_, r)| r.boxes.iter().any(|b| b.contains(x)))
        .fold(Valuation::EMPTY, |v, (i, _)| v.with(i))
}

fn cuts_of<'a>(dim: usize, boxes: impl Iterator<Item = &'a HyperRect>) -> Vec<Vec<f64>> {
    let mut cuts = vec![Vec::new(); dim];
    for b in boxes {
        for d in 0..dim {
            for v in [b.lo[d], b.hi[d]] {
                if v.is_finite() {
                    cuts[d].push(v);
                }
            }
        }
    }
    cuts
}

/// Builds the abstraction of `cs` on `grid` with propositions from `regions`.
pub fn build_abstraction(
    cs: &ControlSystem,
    grid: &GridSpec,
    regions: &[Region],
    opts: AbstractionOptions,
) -> Result<GriddedAbstraction, AbstractionError> {
    let grid = Grid::new(grid.clone())?;
    let n = grid.spec.dim();
    if cs.dim != n {
        return Err(AbstractionError::Dimension(format!("system has {} states, grid {n}", cs.dim)));
    }
    if grid.spec.tau <= 0.0 {
        return Err(AbstractionError::NonPositiveTau);
    }
    let dim_ok = |b: &HyperRect| b.dim() == n;
    if cs.inputs.iter().any(|u| u.is_empty())
        || regions.iter().flat_map(|r| &r.boxes).any(|b| !dim_ok(b))
        || cs.initial.as_ref().is_some_and(|b| !dim_ok(b))
        || cs.disturbance.len() != n
    {
        return Err(AbstractionError::Dimension("region, initial set or disturbance".into()));
    }
    let mut names = BTreeSet::new();
    for r in regions {
        if r.name == VIOLATION {
            return Err(AbstractionError::ReservedName(VIOLATION.into()));
        }
        if !names.insert(r.name.clone()) {
            return Err(AbstractionError::DuplicateName(r.name.clone()));
        }
    }

    let nc = grid.num_cells();
    let state_names: Vec<String> = (0..nc)
        .map(|c| grid.cell_name(c))
        .chain(["ovf_lo".to_string(), "ovf_hi".to_string()])
        .collect();
    let output_names: Vec<String> = match &cs.output {
        OutputMap::Tiles(tiles) => {
            if tiles.iter().flat_map(|t| &t.boxes).any(|b| !dim_ok(b)) {
                return Err(AbstractionError::Dimension("tile box".into()));
            }
            let mut seen = BTreeSet::new();
            for t in tiles {
                if t.name == BACKGROUND {
                    return Err(AbstractionError::ReservedName(BACKGROUND.into()));
                }
                if !seen.insert(t.name.clone()) {
                    return Err(AbstractionError::DuplicateName(t.name.clone()));
                }
            }
            tiles.iter().map(|t| t.name.clone()).chain([BACKGROUND.to_string()]).collect()
        }
        OutputMap::Noisy { .. } => {
            (0..nc).map(|c| format!("o{}", &grid.cell_name(c)[1..])).chain(["obs_lo".into(), "obs_hi".into()]).collect()
        }
    };
    let ny = output_names.len();
    let mut b = FiniteSystemBuilder::new(state_names, cs.input_names.clone(), output_names)
        .map_err(|e| AbstractionError::DuplicateName(e.to_string()))?;
    let (lo_s, hi_s) = (StateId(nc), StateId(nc + 1));

    // Initial states.
    match &cs.initial {
        None => {
            for x in 0..nc + 2 {
                b.initial_id(StateId(x)).expect("valid id");
            }
        }
        Some(x0) => {
            for c in grid.cells_meeting(x0) {
                b.initial_id(StateId(c)).expect("valid id");
            }
            if grid.meets_low(x0) {
                b.initial_id(lo_s).expect("valid id");
            }
            if grid.meets_high(x0) {
                b.initial_id(hi_s).expect("valid id");
            }
        }
    }

    // Transitions, data-parallel over (cell, input).
    let nu = cs.inputs.len();
    let spec = &grid.spec;
    let compute = || -> Vec<Vec<usize>> {
        (0..nc * nu)
            .into_par_iter()
            .map(|i| {
                let (c, u) = (i / nu, i % nu);
                let cell = grid.cell_box(c);
                match reach_overapprox(cs, &cell, &cs.inputs[u], spec.tau, spec.rk4_steps) {
                    Some(r) => {
                        let r = r.inflate(GUARD);
                        let mut succ = grid.cells_meeting(&r);
                        if grid.meets_low(&r) {
                            succ.push(nc);
                        }
                        if grid.meets_high(&r) {
                            succ.push(nc + 1);
                        }
                        succ
                    }
                    None => (0..nc + 2).collect(),
                }
            })
            .collect()
    };
    let succs = match opts.jobs {
        Some(j) => rayon::ThreadPoolBuilder::new()
            .num_threads(j.max(1))
            .build()
            .expect("thread pool")
            .install(compute),
        None => compute(),
    };
    for (i, succ) in succs.into_iter().enumerate() {
        let (c, u) = (i / nu, i % nu);
        for s in succ {
            b.transition_id(StateId(c), InputId(u), StateId(s)).expect("valid id");
        }
    }
    for ov in [lo_s, hi_s] {
        for u in 0..nu {
            b.transition_id(ov, InputId(u), ov).expect("valid id");
        }
        for y in 0..ny {
            b.output_id(ov, OutputId(y)).expect("valid id");
        }
    }

    // Outputs of grid cells.
    match &cs.output {
        OutputMap::Tiles(tiles) => {
            let cuts = cuts_of(n, tiles.iter().flat_map(|t| &t.boxes));
            for c in 0..nc {
                let cell = grid.cell_box(c);
                for (i, t) in tiles.iter().enumerate() {
                    if t.boxes.iter().any(|tb| tb.intersects(&cell)) {
                        b.output_id(StateId(c), OutputId(i)).expect("valid id");
                    }
                }
                let uncovered = geometry::candidate_points(&cell, &cuts)
                    .iter()
                    .any(|p| !tiles.iter().flat_map(|t| &t.boxes).any(|tb| tb.contains(p)));
                if uncovered {
                    b.output_id(StateId(c), OutputId(tiles.len())).expect("valid id");
                }
            }
        }
        OutputMap::Noisy { eps } => {
            for c in 0..nc {
                let near = grid.cell_box(c).inflate(eps + GUARD);
                for y in grid.cells_meeting(&near) {
                    b.output_id(StateId(c), OutputId(y)).expect("valid id");
                }
                if grid.meets_low(&near) {
                    b.output_id(StateId(c), OutputId(nc)).expect("valid id");
                }
                if grid.meets_high(&near) {
                    b.output_id(StateId(c), OutputId(nc + 1)).expect("valid id");
                }
            }
        }
    }
    let system = b.build().map_err(|e| AbstractionError::Dimension(e.to_string()))?;

    // Predicate letters.
    let mut output_aps: Vec<String> = regions.iter().map(|r| r.name.clone()).collect();
    output_aps.push(VIOLATION.into());
    let violation = Valuation::EMPTY.with(regions.len());
    let cuts = cuts_of(n, regions.iter().flat_map(|r| &r.boxes));
    let mut state_letters: Vec<Vec<Valuation>> = (0..nc)
        .map(|c| {
            let letters: BTreeSet<Valuation> = geometry::candidate_points(&grid.cell_box(c), &cuts)
                .iter()
                .map(|p| letter_at(regions, p))
                .collect();
            letters.into_iter().collect()
        })
        .collect();
    state_letters.push(vec![violation]);
    state_letters.push(vec![violation]);
    let input_letters: Vec<Vec<Valuation>> = cs
        .input_labels
        .iter()
        .map(|labels| {
            let v = labels.iter().fold(Valuation::EMPTY, |v, l| {
                cs.input_aps.iter().position(|a| a == l).map_or(v, |i| v.with(i))
            });
            vec![v]
        })
        .collect();
    let preds = PredicateMaps::new(cs.input_aps.clone(), output_aps, input_letters, state_letters)
        .map_err(|e| AbstractionError::Dimension(e.to_string()))?;

    Ok(GriddedAbstraction { system, preds, grid, output: cs.output.clone(), inputs: cs.inputs.clone() })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn integrator_1d(w: f64) -> ControlSystem {
        ControlSystem::new(
            &Dynamics::Integrator { dim: 1 },
            vec![vec![-1.0], vec![1.0]],
            vec![w],
            OutputMap::Noisy { eps: 0.0 },
        )
    }

    pub(crate) fn grid_1d() -> GridSpec {
        GridSpec::new(vec![0.0], vec![2.0], vec![0.5], 0.5)
    }

    #[test]
    fn one_dimensional_successors() {
        let ga = build_abstraction(&integrator_1d(0.1), &grid_1d(), &[], Default::default()).unwrap();
        assert_eq!(ga.system.num_states(), 6);
        // Cell [0, 0.5] under u = +1 reaches [0.45, 1.05].
        let succ = ga.system.successors(StateId(0), InputId(1));
        assert_eq!(succ, &[StateId(0), StateId(1), StateId(2)]);
        // Under u = -1 it reaches [-0.55, 0.05], touching the low overflow.
        let succ = ga.system.successors(StateId(0), InputId(0));
        assert_eq!(succ, &[StateId(0), ga.overflow_low()]);
        assert!(ga.system.initial().len() == 6);
        assert_eq!(ga.system.successors(ga.overflow_high(), InputId(0)), &[ga.overflow_high()]);
    }

    #[test]
    fn closed_cell_membership() {
        let ga = build_abstraction(&integrator_1d(0.1), &grid_1d(), &[], Default::default()).unwrap();
        assert_eq!(ga.alpha(&[0.3]), vec![StateId(0)]);
        assert_eq!(ga.alpha(&[0.5]), vec![StateId(0), StateId(1)]);
        assert_eq!(ga.alpha(&[0.0]), vec![StateId(0)]);
        assert_eq!(ga.alpha(&[-1e-12]), vec![ga.overflow_low()]);
        assert_eq!(ga.alpha(&[-3.0]), vec![ga.overflow_low()]);
        assert_eq!(ga.alpha(&[7.0]), vec![ga.overflow_high()]);
        assert_eq!(ga.beta(InputId(1)), vec![vec![1.0]]);
        // every point of the region of interest is covered
        for i in 0..=200 {
            let x = i as f64 * 0.01;
            assert!(!ga.alpha(&[x]).is_empty());
        }
        for x in ga.system.states() {
            assert!(!ga.system.outputs_of(x).is_empty());
        }
    }

    #[test]
    fn straddling_cells_get_both_letters() {
        let regions = [Region { name: "pickup".into(), boxes: vec![HyperRect::new(vec![0.75], vec![2.0])] }];
        let ga = build_abstraction(&integrator_1d(0.1), &grid_1d(), &regions, Default::default()).unwrap();
        let p = Valuation(1);
        assert_eq!(ga.preds.state_letters(StateId(0)), &[Valuation::EMPTY]);
        assert_eq!(ga.preds.state_letters(StateId(1)), &[Valuation::EMPTY, p]);
        assert_eq!(ga.preds.state_letters(StateId(2)), &[p]);
        assert_eq!(ga.preds.state_letters(ga.overflow_low()), &[Valuation(2)]);
        assert_eq!(ga.violation_ap(), 1);
    }

    #[test]
    fn misaligned_grid_rejected() {
        let bad = GridSpec::new(vec![0.0], vec![1.2], vec![0.5], 0.5);
        assert!(matches!(
            build_abstraction(&integrator_1d(0.1), &bad, &[], Default::default()),
            Err(AbstractionError::Misaligned { .. })
        ));
    }

    #[test]
    fn noisy_outputs_are_nondeterministic() {
        let mut cs = integrator_1d(0.1);
        cs.output = OutputMap::Noisy { eps: 0.5 };
        let ga = build_abstraction(&cs, &grid_1d(), &[], Default::default()).unwrap();
        // eps = eta: cells up to two indices away are within distance eps.
        let ys: Vec<usize> = ga.system.outputs_of(StateId(2)).iter().map(|y| y.0).collect();
        assert_eq!(ys, vec![0, 1, 2, 3, 5]);
        let ys: Vec<usize> = ga.system.outputs_of(StateId(0)).iter().map(|y| y.0).collect();
        assert_eq!(ys, vec![0, 1, 2, 4]);
        assert_eq!(ga.gamma(&[0.6]), vec![OutputId(1)]);
    }

    #[test]
    fn tiles_and_background() {
        let mut cs = integrator_1d(0.1);
        cs.output = OutputMap::Tiles(vec![Tile {
            name: "red".into(),
            boxes: vec![HyperRect::new(vec![0.0], vec![0.75])],
        }]);
        let ga = build_abstraction(&cs, &grid_1d(), &[], Default::default()).unwrap();
        assert_eq!(ga.system.outputs_of(StateId(0)), &[OutputId(0)]);
        assert_eq!(ga.system.outputs_of(StateId(1)), &[OutputId(0), OutputId(1)]);
        assert_eq!(ga.system.outputs_of(StateId(3)), &[OutputId(1)]);
        assert_eq!(ga.gamma(&[0.2]), vec![OutputId(0)]);
        assert_eq!(ga.gamma(&[1.2]), vec![OutputId(1)]);
    }

    #[test]
    fn initial_box_selects_cells() {
        let cs = integrator_1d(0.1).with_initial(HyperRect::new(vec![0.6], vec![0.9]));
        let ga = build_abstraction(&cs, &grid_1d(), &[], Default::default()).unwrap();
        assert_eq!(ga.system.initial(), &[StateId(1)]);
    }

    #[test]
    fn halving_eta_never_enlarges_successors() {
        let coarse = build_abstraction(&integrator_1d(0.1), &grid_1d(), &[], Default::default()).unwrap();
        let mut fine_grid = grid_1d();
        fine_grid.eta = vec![0.25];
        let fine = build_abstraction(&integrator_1d(0.1), &fine_grid, &[], Default::default()).unwrap();
        for parent in 0..coarse.grid.num_cells() {
            for u in coarse.system.inputs() {
                let cover: Vec<HyperRect> = coarse
                    .system
                    .successors(StateId(parent), u)
                    .iter()
                    .filter_map(|&s| coarse.cell_box(s))
                    .collect();
                let parent_ovf: Vec<StateId> = coarse
                    .system
                    .successors(StateId(parent), u)
                    .iter()
                    .copied()
                    .filter(|&s| coarse.is_overflow(s))
                    .collect();
                for child in [2 * parent, 2 * parent + 1] {
                    for &s in fine.system.successors(StateId(child), u) {
                        match fine.cell_box(s) {
                            Some(bx) => assert!(cover.iter().any(|c| c.contains_box(&bx))),
                            None => assert!(parent_ovf.iter().any(|o| o.0 - coarse.grid.num_cells()
                                == s.0 - fine.grid.num_cells())),
                        }
                    }
                }
            }
        }
    }
}
