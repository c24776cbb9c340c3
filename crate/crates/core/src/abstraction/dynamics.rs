//! Disturbed control systems `xdot in f(x, u) + W` and a small library of
//! vector fields with their growth bounds.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::geometry::HyperRect;

/// `f(x, u, out)` writes the nominal derivative into `out`.
pub type VectorField = Arc<dyn Fn(&[f64], &[f64], &mut [f64]) + Send + Sync>;

/// Growth bound `L(u)`: componentwise bound on `df/dx` with nonnegative
/// off-diagonal entries.
pub type GrowthFn = Arc<dyn Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync>;

/// One affine piece `f(x, u) = A x + B u + b` valid on `region`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffinePiece {
    pub region: HyperRect,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
    #[serde(default)]
    pub offset: Vec<f64>,
}

/// Built-in vector fields.
#[derive(Clone)]
pub enum Dynamics {
    /// `xdot = u` in `n` dimensions.
    Integrator { dim: usize },
    /// `xdot = A x + B u`.
    Linear { a: Vec<Vec<f64>>, b: Vec<Vec<f64>> },
    /// Planar vehicle with heading: `(v cos th, v sin th, w)` for `u = (v, w)`.
    Dubins,
    /// First matching piece wins; points outside every piece use the last one.
    PiecewiseAffine { pieces: Vec<AffinePiece> },
    Custom { dim: usize, field: VectorField, growth: GrowthFn },
}

impl fmt::Debug for Dynamics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Dynamics::Integrator { dim } => write!(f, "Integrator({dim})"),
            Dynamics::Linear { a, b } => write!(f, "Linear {{ a: {a:?}, b: {b:?} }}"),
            Dynamics::Dubins => write!(f, "Dubins"),
            Dynamics::PiecewiseAffine { pieces } => write!(f, "PiecewiseAffine({} pieces)", pieces.len()),
            Dynamics::Custom { dim, .. } => write!(f, "Custom({dim})"),
        }
    }
}

/// Diagonal kept, off-diagonal entries made nonnegative.
fn metzler(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    a.iter()
        .enumerate()
        .map(|(i, row)| row.iter().enumerate().map(|(j, &v)| if i == j { v } else { v.abs() }).collect())
        .collect()
}

fn affine(a: &[Vec<f64>], b: &[Vec<f64>], offset: &[f64], x: &[f64], u: &[f64], out: &mut [f64]) {
    for (i, o) in out.iter_mut().enumerate() {
        let mut v = offset.get(i).copied().unwrap_or(0.0);
        v += a[i].iter().zip(x).map(|(a, x)| a * x).sum::<f64>();
        if let Some(row) = b.get(i) {
            v += row.iter().zip(u).map(|(b, u)| b * u).sum::<f64>();
        }
        *o = v;
    }
}

impl Dynamics {
    pub fn dim(&self) -> usize {
        match self {
            Dynamics::Integrator { dim } | Dynamics::Custom { dim, .. } => *dim,
            Dynamics::Linear { a, .. } => a.len(),
            Dynamics::Dubins => 3,
            Dynamics::PiecewiseAffine { pieces } => pieces.first().map_or(0, |p| p.a.len()),
        }
    }

    pub fn field(&self) -> VectorField {
        match self.clone() {
            Dynamics::Integrator { .. } => Arc::new(|_x, u, out| out.copy_from_slice(&u[..out.len()])),
            Dynamics::Linear { a, b } => Arc::new(move |x, u, out| affine(&a, &b, &[], x, u, out)),
            Dynamics::Dubins => Arc::new(|x, u, out| {
                out[0] = u[0] * x[2].cos();
                out[1] = u[0] * x[2].sin();
                out[2] = u[1];
            }),
            Dynamics::PiecewiseAffine { pieces } => Arc::new(move |x, u, out| {
                let p = pieces
                    .iter()
                    .find(|p| p.region.contains(x))
                    .unwrap_or_else(|| pieces.last().expect("at least one piece"));
                affine(&p.a, &p.b, &p.offset, x, u, out);
            }),
            Dynamics::Custom { field, .. } => field,
        }
    }

    /// Default growth bound for the built-in fields.
    ///
    /// Linear and piecewise-affine fields use `A` with off-diagonal entries
    /// replaced by their absolute values (the entrywise maximum over
    /// pieces).
    pub fn growth(&self) -> GrowthFn {
        match self.clone() {
            Dynamics::Integrator { dim } => Arc::new(move |_| vec![vec![0.0; dim]; dim]),
            Dynamics::Linear { a, .. } => {
                let l = metzler(&a);
                Arc::new(move |_| l.clone())
            }
            Dynamics::Dubins => Arc::new(|u| {
                let v = u[0].abs();
                vec![vec![0.0, 0.0, v], vec![0.0, 0.0, v], vec![0.0; 3]]
            }),
            Dynamics::PiecewiseAffine { pieces } => {
                let n = pieces.first().map_or(0, |p| p.a.len());
                let mut l = vec![vec![f64::NEG_INFINITY; n]; n];
                for p in &pieces {
                    for (i, row) in metzler(&p.a).into_iter().enumerate() {
                        for (j, v) in row.into_iter().enumerate() {
                            l[i][j] = f64::max(l[i][j], v);
                        }
                    }
                }
                Arc::new(move |_| l.clone())
            }
            Dynamics::Custom { growth, .. } => growth,
        }
    }
}

/// How concrete outputs are produced and abstracted.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum OutputMap {
    /// The output is the state itself, read through a finite tile cover.
    /// Points in no tile produce the implicit background output.
    Tiles(Vec<Tile>),
    /// The output is the state plus a measurement error in `[-eps, eps]`;
    /// abstract outputs are the grid cells.
    Noisy { eps: f64 },
}

/// A named observation region, a finite union of closed boxes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tile {
    pub name: String,
    pub boxes: Vec<HyperRect>,
}

/// A control system sampled with period `tau`.
#[derive(Clone)]
pub struct ControlSystem {
    pub dim: usize,
    pub field: VectorField,
    pub growth: GrowthFn,
    /// Componentwise disturbance radius `w`.
    pub disturbance: Vec<f64>,
    /// Representative input vectors.
    pub inputs: Vec<Vec<f64>>,
    pub input_names: Vec<String>,
    /// Input proposition names and, per input, the propositions it sets.
    pub input_aps: Vec<String>,
    pub input_labels: Vec<Vec<String>>,
    /// `None` means every state is initial.
    pub initial: Option<HyperRect>,
    pub output: OutputMap,
}

impl fmt::Debug for ControlSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ControlSystem")
            .field("dim", &self.dim)
            .field("disturbance", &self.disturbance)
            .field("inputs", &self.inputs)
            .field("initial", &self.initial)
            .field("output", &self.output)
            .finish_non_exhaustive()
    }
}

impl ControlSystem {
    pub fn new(dynamics: &Dynamics, inputs: Vec<Vec<f64>>, disturbance: Vec<f64>, output: OutputMap) -> Self {
        let names = (0..inputs.len()).map(|i| format!("u{i}")).collect();
        let n = inputs.len();
        ControlSystem {
            dim: dynamics.dim(),
            field: dynamics.field(),
            growth: dynamics.growth(),
            disturbance,
            inputs,
            input_names: names,
            input_aps: Vec::new(),
            input_labels: vec![Vec::new(); n],
            initial: None,
            output,
        }
    }

    pub fn with_initial(mut self, initial: HyperRect) -> Self {
        self.initial = Some(initial);
        self
    }

    pub fn with_input_names(mut self, names: Vec<String>) -> Self {
        assert_eq!(names.len(), self.inputs.len());
        self.input_names = names;
        self
    }

    /// Integrates over `[0, tau]` with `steps` RK4 substeps, holding the
    /// disturbance `ds[i]` constant on substep `i`.
    pub fn flow(&self, x: &[f64], u: &[f64], tau: f64, steps: usize, ds: &[Vec<f64>]) -> Vec<f64> {
        let n = self.dim;
        let mut y = x.to_vec();
        let h = tau / steps as f64;
        let zero = vec![0.0; n];
        let mut k = vec![0.0; 4 * n];
        let mut tmp = vec![0.0; n];
        let f = &self.field;
        for i in 0..steps {
            let d = ds.get(i).unwrap_or(&zero);
            let eval = |z: &[f64], out: &mut [f64]| {
                f(z, u, out);
                for (o, d) in out.iter_mut().zip(d) {
                    *o += d;
                }
            };
            let (k0, rest) = k.split_at_mut(n);
            let (k1, rest) = rest.split_at_mut(n);
            let (k2, k3) = rest.split_at_mut(n);
            eval(&y, k0);
            for j in 0..n {
                tmp[j] = y[j] + 0.5 * h * k0[j];
            }
            eval(&tmp, k1);
            for j in 0..n {
                tmp[j] = y[j] + 0.5 * h * k1[j];
            }
            eval(&tmp, k2);
            for j in 0..n {
                tmp[j] = y[j] + h * k2[j];
            }
            eval(&tmp, k3);
            for j in 0..n {
                y[j] += h / 6.0 * (k0[j] + 2.0 * k1[j] + 2.0 * k2[j] + k3[j]);
            }
        }
        y
    }

    /// Draws a piecewise-constant disturbance signal uniformly from `W`.
    pub fn sample_disturbance<R: Rng>(&self, steps: usize, rng: &mut R) -> Vec<Vec<f64>> {
        (0..steps)
            .map(|_| {
                self.disturbance
                    .iter()
                    .map(|&w| if w > 0.0 { rng.gen_range(-w..=w) } else { 0.0 })
                    .collect()
            })
            .collect()
    }

    /// Draws a concrete output at state `x`.
    pub fn sample_output<R: Rng>(&self, x: &[f64], rng: &mut R) -> Vec<f64> {
        match &self.output {
            OutputMap::Tiles(_) => x.to_vec(),
            OutputMap::Noisy { eps } => x
                .iter()
                .map(|&v| if *eps > 0.0 { v + rng.gen_range(-eps..=*eps) } else { v })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn integrator_flow_is_exact() {
        let cs = ControlSystem::new(
            &Dynamics::Integrator { dim: 1 },
            vec![vec![1.0]],
            vec![0.1],
            OutputMap::Noisy { eps: 0.0 },
        );
        let y = cs.flow(&[0.5], &[1.0], 0.5, 10, &vec![vec![0.1]; 10]);
        assert!((y[0] - 1.05).abs() < 1e-12);
    }

    #[test]
    fn linear_growth_is_metzler() {
        let d = Dynamics::Linear { a: vec![vec![-1.0, -2.0], vec![0.5, 0.0]], b: vec![vec![1.0], vec![0.0]] };
        assert_eq!((d.growth())(&[0.0]), vec![vec![-1.0, 2.0], vec![0.5, 0.0]]);
        let mut out = [0.0; 2];
        (d.field())(&[1.0, 1.0], &[2.0], &mut out);
        assert_eq!(out, [-1.0, 0.5]);
    }

    #[test]
    fn dubins_and_pwa() {
        let mut out = [0.0; 3];
        (Dynamics::Dubins.field())(&[0.0, 0.0, 0.0], &[2.0, 0.5], &mut out);
        assert_eq!(out, [2.0, 0.0, 0.5]);
        let pieces = vec![
            AffinePiece {
                region: HyperRect::new(vec![f64::NEG_INFINITY], vec![0.0]),
                a: vec![vec![1.0]],
                b: vec![vec![0.0]],
                offset: vec![],
            },
            AffinePiece {
                region: HyperRect::new(vec![0.0], vec![f64::INFINITY]),
                a: vec![vec![-3.0]],
                b: vec![vec![0.0]],
                offset: vec![1.0],
            },
        ];
        let pwa = Dynamics::PiecewiseAffine { pieces };
        let mut o = [0.0];
        (pwa.field())(&[2.0], &[0.0], &mut o);
        assert_eq!(o, [-5.0]);
        assert_eq!((pwa.growth())(&[0.0]), vec![vec![1.0]]);
    }
}
