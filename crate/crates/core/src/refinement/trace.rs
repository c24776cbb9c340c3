//! Closed-loop traces and their CSV / SVG renderings.

use std::fmt::Write as _;

use crate::abstraction::{GridSpec, Region};
use crate::system::{FiniteSystem, InputId, OutputId, PredicateMaps, StateId, Valuation};

/// A finite-plant trace: state, output, applied input and the predicate
/// letters `(input letter, state letter)` of each step.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FiniteTrace {
    pub states: Vec<StateId>,
    pub outputs: Vec<OutputId>,
    pub inputs: Vec<InputId>,
    pub letters: Vec<(Valuation, Valuation)>,
}

/// A continuous-plant trace sampled at the controller period.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ContinuousTrace {
    pub tau: f64,
    pub xs: Vec<Vec<f64>>,
    pub us: Vec<Vec<f64>>,
    pub ys: Vec<Vec<f64>>,
    pub yhat: Vec<OutputId>,
    pub uhat: Vec<InputId>,
    /// Region names holding at each step (plus `violation` outside the grid).
    pub labels: Vec<Vec<String>>,
    pub final_state: Vec<f64>,
}

fn header(prefix: &str, n: usize) -> String {
    (0..n).map(|i| format!(",{prefix}{i}")).collect()
}

fn row(v: &[f64]) -> String {
    v.iter().map(|x| format!(",{x}")).collect()
}

/// `t, x.., u.., y.., yhat, uhat, predicates` with predicates joined by `|`.
pub fn trace_csv(t: &ContinuousTrace, output_names: &[String], input_names: &[String]) -> String {
    let n = t.xs.first().map_or(0, Vec::len);
    let m = t.us.first().map_or(0, Vec::len);
    let ny = t.ys.first().map_or(0, Vec::len);
    let mut out = format!("t{}{}{},yhat,uhat,predicates\n", header("x", n), header("u", m), header("y", ny));
    for k in 0..t.xs.len() {
        let _ = writeln!(
            out,
            "{}{}{}{},{},{},{}",
            k as f64 * t.tau,
            row(&t.xs[k]),
            row(&t.us[k]),
            row(&t.ys[k]),
            output_names[t.yhat[k].0],
            input_names[t.uhat[k].0],
            t.labels[k].join("|")
        );
    }
    out
}

/// `trace, k, x, y, u, predicates` for finite traces, with names from the system.
pub fn finite_traces_csv(sys: &FiniteSystem, pm: &PredicateMaps, traces: &[FiniteTrace]) -> String {
    let mut out = String::from("trace,k,x,y,u,predicates\n");
    let mut aps: Vec<String> = pm.input_aps().to_vec();
    aps.extend(pm.output_aps().iter().cloned());
    for (i, t) in traces.iter().enumerate() {
        for k in 0..t.states.len() {
            let (mu, lambda) = t.letters[k];
            let v = Valuation(mu.0 | (lambda.0 << pm.input_aps().len()));
            let names: Vec<&str> = (0..aps.len()).filter(|&b| v.contains(b)).map(|b| aps[b].as_str()).collect();
            let _ = writeln!(
                out,
                "{i},{k},{},{},{},{}",
                sys.state_name(t.states[k]),
                sys.output_name(t.outputs[k]),
                sys.input_name(t.inputs[k]),
                names.join("|")
            );
        }
    }
    out
}

const PALETTE: [&str; 6] = ["#4daf4a", "#377eb8", "#e41a1c", "#984ea3", "#ff7f00", "#a65628"];

/// A 2-D projection (axes 0 and 1) of the trajectory over the grid and the
/// regions; one-dimensional traces are drawn against time.
pub fn trace_svg(t: &ContinuousTrace, grid: &GridSpec, regions: &[Region]) -> String {
    let (w, h, pad) = (640.0, 640.0, 20.0);
    let one_d = grid.dim() < 2;
    let steps = t.xs.len().max(1) as f64;
    let (x_lo, x_hi) = if one_d { (0.0, steps * t.tau) } else { (grid.lo[0], grid.hi[0]) };
    let (y_lo, y_hi) = if one_d { (grid.lo[0], grid.hi[0]) } else { (grid.lo[1], grid.hi[1]) };
    let sx = |v: f64| pad + (v.clamp(x_lo, x_hi) - x_lo) / (x_hi - x_lo) * (w - 2.0 * pad);
    let sy = |v: f64| h - pad - (v.clamp(y_lo, y_hi) - y_lo) / (y_hi - y_lo) * (h - 2.0 * pad);
    let mut out = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n"
    );
    let _ = writeln!(out, "<rect x=\"0\" y=\"0\" width=\"{w}\" height=\"{h}\" fill=\"white\"/>");
    let _ = writeln!(
        out,
        "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>",
        pad,
        pad,
        w - 2.0 * pad,
        h - 2.0 * pad
    );
    for (i, r) in regions.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        for b in &r.boxes {
            let (ax, ay) = if one_d { ((x_lo, x_hi), (b.lo[0], b.hi[0])) } else { ((b.lo[0], b.hi[0]), (b.lo[1], b.hi[1])) };
            let (x0, x1, y0, y1) = (sx(ax.0), sx(ax.1), sy(ay.1), sy(ay.0));
            let _ = writeln!(
                out,
                "<rect class=\"region\" x=\"{x0:.2}\" y=\"{y0:.2}\" width=\"{:.2}\" height=\"{:.2}\" fill=\"{color}\" fill-opacity=\"0.3\"><title>{}</title></rect>",
                x1 - x0,
                y1 - y0,
                r.name
            );
            let _ = writeln!(out, "<text x=\"{:.2}\" y=\"{:.2}\" font-size=\"12\">{}</text>", x0 + 3.0, y0 + 14.0, r.name);
        }
    }
    let pts: Vec<(f64, f64)> = t
        .xs
        .iter()
        .chain(std::iter::once(&t.final_state).filter(|f| !f.is_empty()))
        .enumerate()
        .map(|(k, x)| if one_d { (sx(k as f64 * t.tau), sy(x[0])) } else { (sx(x[0]), sy(x[1])) })
        .collect();
    let path: Vec<String> = pts.iter().map(|(a, b)| format!("{a:.2},{b:.2}")).collect();
    let _ = writeln!(out, "<polyline class=\"trajectory\" points=\"{}\" fill=\"none\" stroke=\"black\" stroke-width=\"1.2\"/>", path.join(" "));
    if let Some((a, b)) = pts.first() {
        let _ = writeln!(out, "<circle cx=\"{a:.2}\" cy=\"{b:.2}\" r=\"4\" fill=\"black\"/>");
    }
    out += "</svg>\n";
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::abstraction::HyperRect;

    fn sample() -> ContinuousTrace {
        ContinuousTrace {
            tau: 0.5,
            xs: vec![vec![0.0, 0.0], vec![0.5, 0.25]],
            us: vec![vec![1.0, 0.5], vec![1.0, 0.5]],
            ys: vec![vec![0.0, 0.0], vec![0.5, 0.25]],
            yhat: vec![OutputId(0), OutputId(1)],
            uhat: vec![InputId(0), InputId(0)],
            labels: vec![vec![], vec!["goal".into()]],
            final_state: vec![1.0, 0.5],
        }
    }

    #[test]
    fn csv_layout() {
        let csv = trace_csv(&sample(), &["a".into(), "b".into()], &["go".into()]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "t,x0,x1,u0,u1,y0,y1,yhat,uhat,predicates");
        assert_eq!(lines[2], "0.5,0.5,0.25,1,0.5,0.5,0.25,b,go,goal");
    }

    #[test]
    fn svg_has_regions_and_path() {
        let g = GridSpec::new(vec![0.0, 0.0], vec![2.0, 2.0], vec![0.5, 0.5], 0.5);
        let r = [Region { name: "goal".into(), boxes: vec![HyperRect::new(vec![1.0, 1.0], vec![2.0, 2.0])] }];
        let svg = trace_svg(&sample(), &g, &r);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        assert_eq!(svg.matches("class=\"region\"").count(), 1);
        assert!(svg.contains("class=\"trajectory\""));
    }
}
