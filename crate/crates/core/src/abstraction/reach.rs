//! Growth-bound over-approximation of one sampling period.

use super::dynamics::ControlSystem;
use super::geometry::HyperRect;

/// A box containing every endpoint after time `tau` of solutions starting
/// in `cell` under the constant input `u` and any disturbance in `W`.
///
/// Integrates the nominal center `c' = f(c, u)` and the radius
/// `r' = L(u) r + w` jointly with `steps` RK4 substeps, from the cell's
/// center and half-width. Returns `None` if the integration leaves the
/// finite floating-point range.
pub fn reach_overapprox(
    cs: &ControlSystem,
    cell: &HyperRect,
    u: &[f64],
    tau: f64,
    steps: usize,
) -> Option<HyperRect> {
    let n = cs.dim;
    let l = (cs.growth)(u);
    let w = &cs.disturbance;
    let mut s: Vec<f64> = cell.center();
    s.extend(cell.radius());
    let rhs = |z: &[f64], out: &mut [f64]| {
        (cs.field)(&z[..n], u, &mut out[..n]);
        for i in 0..n {
            let lr: f64 = (0..n).map(|j| l[i][j] * z[n + j]).sum();
            out[n + i] = lr + w.get(i).copied().unwrap_or(0.0);
        }
    };
    if tau > 0.0 {
        let h = tau / steps.max(1) as f64;
        let m = 2 * n;
        let mut k = vec![vec![0.0; m]; 4];
        let mut tmp = vec![0.0; m];
        for _ in 0..steps.max(1) {
            rhs(&s, &mut k[0]);
            for i in 0..m {
                tmp[i] = s[i] + 0.5 * h * k[0][i];
            }
            rhs(&tmp, &mut k[1]);
            for i in 0..m {
                tmp[i] = s[i] + 0.5 * h * k[1][i];
            }
            rhs(&tmp, &mut k[2]);
            for i in 0..m {
                tmp[i] = s[i] + h * k[2][i];
            }
            rhs(&tmp, &mut k[3]);
            for i in 0..m {
                s[i] += h / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
            }
        }
    }
    if s.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some(HyperRect::centered(&s[..n], &s[n..]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abstraction::dynamics::{Dynamics, OutputMap};
    use std::sync::Arc;

    fn integrator(w: f64) -> ControlSystem {
        ControlSystem::new(
            &Dynamics::Integrator { dim: 1 },
            vec![vec![1.0], vec![-1.0]],
            vec![w],
            OutputMap::Noisy { eps: 0.0 },
        )
    }

    fn close(a: &HyperRect, lo: f64, hi: f64) -> bool {
        (a.lo[0] - lo).abs() < 1e-12 && (a.hi[0] - hi).abs() < 1e-12
    }

    #[test]
    fn one_dimensional_closed_form() {
        let cell = HyperRect::new(vec![0.0], vec![1.0]);
        let r = reach_overapprox(&integrator(0.1), &cell, &[1.0], 0.5, 10).unwrap();
        assert!(close(&r, 0.45, 1.55), "{r:?}");
    }

    #[test]
    fn zero_time_is_identity() {
        let cell = HyperRect::new(vec![0.0, 1.0], vec![0.5, 2.0]);
        let cs = ControlSystem::new(
            &Dynamics::Dubins,
            vec![vec![1.0, 0.3]],
            vec![0.1, 0.1, 0.1],
            OutputMap::Noisy { eps: 0.0 },
        );
        let cell3 = HyperRect::new(vec![0.0, 1.0, 0.0], vec![0.5, 2.0, 0.2]);
        assert_eq!(reach_overapprox(&cs, &cell3, &[1.0, 0.3], 0.0, 10).unwrap(), cell3);
        let r = reach_overapprox(&integrator(0.1), &HyperRect::new(vec![0.0], vec![0.5]), &[1.0], 0.0, 10);
        assert_eq!(r.unwrap(), HyperRect::new(vec![0.0], vec![0.5]));
        assert_eq!(cell.dim(), 2);
    }

    #[test]
    fn point_cell_without_disturbance_follows_flow() {
        let cs = ControlSystem::new(
            &Dynamics::Linear { a: vec![vec![-1.0]], b: vec![vec![0.0]] },
            vec![vec![0.0]],
            vec![0.0],
            OutputMap::Noisy { eps: 0.0 },
        );
        let p = HyperRect::point(&[1.0]);
        let r = reach_overapprox(&cs, &p, &[0.0], 1.0, 10).unwrap();
        let x = cs.flow(&[1.0], &[0.0], 1.0, 10, &[]);
        assert_eq!(r.lo, x);
        assert_eq!(r.hi, x);
        assert!((x[0] - (-1.0f64).exp()).abs() < 1e-6);
    }

    #[test]
    fn divergence_reports_none() {
        let cs = ControlSystem {
            field: Arc::new(|x, _u, out| out[0] = x[0] * x[0] * 1e300),
            ..integrator(0.0)
        };
        assert!(reach_overapprox(&cs, &HyperRect::new(vec![1e10], vec![2e10]), &[0.0], 1.0, 10).is_none());
    }
}
