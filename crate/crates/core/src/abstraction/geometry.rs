//! Closed axis-aligned boxes.

use serde::{Deserialize, Serialize};

/// The closed box `[lo, hi]`; coordinates may be infinite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperRect {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl HyperRect {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        assert_eq!(lo.len(), hi.len(), "box bounds differ in dimension");
        HyperRect { lo, hi }
    }

    pub fn point(x: &[f64]) -> Self {
        HyperRect { lo: x.to_vec(), hi: x.to_vec() }
    }

    pub fn centered(c: &[f64], r: &[f64]) -> Self {
        HyperRect {
            lo: c.iter().zip(r).map(|(c, r)| c - r).collect(),
            hi: c.iter().zip(r).map(|(c, r)| c + r).collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lo.iter().zip(&self.hi).any(|(l, h)| l > h)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(self.lo.iter().zip(&self.hi)).all(|(x, (l, h))| l <= x && x <= h)
    }

    pub fn intersects(&self, other: &HyperRect) -> bool {
        (0..self.dim()).all(|i| self.lo[i] <= other.hi[i] && other.lo[i] <= self.hi[i])
    }

    pub fn contains_box(&self, other: &HyperRect) -> bool {
        (0..self.dim()).all(|i| self.lo[i] <= other.lo[i] && other.hi[i] <= self.hi[i])
    }

    /// Infinity-norm distance between the two closed boxes (0 if they meet).
    pub fn distance(&self, other: &HyperRect) -> f64 {
        (0..self.dim())
            .map(|i| (self.lo[i] - other.hi[i]).max(other.lo[i] - self.hi[i]).max(0.0))
            .fold(0.0, f64::max)
    }

    pub fn center(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(l, h)| 0.5 * (l + h)).collect()
    }

    pub fn radius(&self) -> Vec<f64> {
        self.lo.iter().zip(&self.hi).map(|(l, h)| 0.5 * (h - l)).collect()
    }

    pub fn inflate(&self, by: f64) -> HyperRect {
        HyperRect {
            lo: self.lo.iter().map(|l| l - by).collect(),
            hi: self.hi.iter().map(|h| h + by).collect(),
        }
    }
}

/// Points of `cell` covering every face class of the arrangement cut by
/// the given per-axis coordinates: cell bounds, cut coordinates strictly
/// inside the cell, and midpoints between consecutive ones.
pub fn candidate_points(cell: &HyperRect, cuts: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let axes: Vec<Vec<f64>> = (0..cell.dim())
        .map(|d| {
            let (lo, hi) = (cell.lo[d], cell.hi[d]);
            let mut cs: Vec<f64> = vec![lo, hi];
            cs.extend(cuts[d].iter().copied().filter(|&c| lo < c && c < hi));
            cs.sort_by(f64::total_cmp);
            cs.dedup();
            let mut pts = cs.clone();
            pts.extend(cs.windows(2).map(|w| 0.5 * (w[0] + w[1])));
            pts
        })
        .collect();
    let mut out: Vec<Vec<f64>> = vec![Vec::new()];
    for axis in &axes {
        out = out
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn box_relations() {
        let a = HyperRect::new(vec![0.0, 0.0], vec![1.0, 1.0]);
        let b = HyperRect::new(vec![1.0, 0.5], vec![2.0, 2.0]);
        let c = HyperRect::new(vec![3.0, 0.0], vec![4.0, 1.0]);
        assert!(a.intersects(&b));
        assert!(!a.intersects(&c));
        assert_eq!(a.distance(&b), 0.0);
        assert_eq!(a.distance(&c), 2.0);
        assert!(a.contains(&[1.0, 1.0]));
        assert!(!a.contains(&[1.0, 1.0001]));
        assert_eq!(HyperRect::centered(&[0.5], &[0.5]), HyperRect::new(vec![0.0], vec![1.0]));
    }

    #[test]
    fn candidates_cover_faces() {
        let cell = HyperRect::new(vec![0.0], vec![1.0]);
        let pts = candidate_points(&cell, &[vec![0.5, 2.0]]);
        let mut xs: Vec<f64> = pts.iter().map(|p| p[0]).collect();
        xs.sort_by(f64::total_cmp);
        assert_eq!(xs, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        let sq = HyperRect::new(vec![0.0, 0.0], vec![1.0, 1.0]);
        assert_eq!(candidate_points(&sq, &[vec![], vec![]]).len(), 9);
    }
}
