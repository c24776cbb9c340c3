//! Line-oriented text format for finite systems and their predicate maps.
//!
//! ```text
//! [states]
//! x0 x1
//! [initial]
//! x0
//! [inputs]
//! a b
//! [outputs]
//! y0 y1
//! [ap.output]
//! p
//! [trans]
//! x0 a -> x0 x1
//! [out]
//! x0 -> y0
//! [preds.state]
//! x1 -> {p}
//! ```
//!
//! Names are whitespace separated; `#` starts a comment. States or inputs
//! missing from the predicate sections get the single empty letter `{}`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use thiserror::Error;

use super::{FiniteSystem, FiniteSystemBuilder, PredicateMaps, SystemError, Valuation};

#[derive(Debug, Error)]
pub enum TextError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error(transparent)]
    System(#[from] SystemError),
}

fn syntax(line: usize, msg: impl Into<String>) -> TextError {
    TextError::Syntax { line, msg: msg.into() }
}

const SECTIONS: &[&str] = &[
    "states",
    "initial",
    "inputs",
    "outputs",
    "ap.input",
    "ap.output",
    "trans",
    "out",
    "preds.state",
    "preds.input",
];

/// Parses a system file into the system and its predicate maps.
pub fn parse_system(text: &str) -> Result<(FiniteSystem, PredicateMaps), TextError> {
    let mut sections: BTreeMap<&str, Vec<(usize, &str)>> = BTreeMap::new();
    let mut current: Option<&str> = None;
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let name = name.trim();
            let known = SECTIONS
                .iter()
                .find(|s| **s == name)
                .ok_or_else(|| syntax(line_no, format!("unknown section [{name}]")))?;
            if sections.contains_key(known) {
                return Err(syntax(line_no, format!("duplicate section [{name}]")));
            }
            sections.insert(known, Vec::new());
            current = Some(known);
            continue;
        }
        let sec = current.ok_or_else(|| syntax(line_no, "content before first section"))?;
        sections.get_mut(sec).expect("section registered").push((line_no, line));
    }

    let words = |name: &str| -> Vec<String> {
        sections
            .get(name)
            .map(|ls| ls.iter().flat_map(|(_, l)| l.split_whitespace()).map(String::from).collect())
            .unwrap_or_default()
    };
    let mut b = FiniteSystemBuilder::new(words("states"), words("inputs"), words("outputs"))?;
    for x in words("initial") {
        b.initial(&x)?;
    }
    for &(line_no, line) in sections.get("trans").map(Vec::as_slice).unwrap_or(&[]) {
        let (lhs, rhs) = split_arrow(line_no, line)?;
        let lhs: Vec<&str> = lhs.split_whitespace().collect();
        let [x, u] = lhs[..] else {
            return Err(syntax(line_no, "expected `state input -> states...`"));
        };
        for x2 in rhs.split_whitespace() {
            b.transition(x, u, x2)?;
        }
    }
    for &(line_no, line) in sections.get("out").map(Vec::as_slice).unwrap_or(&[]) {
        let (x, rhs) = split_arrow(line_no, line)?;
        for y in rhs.split_whitespace() {
            b.output(x.trim(), y)?;
        }
    }
    let input_aps = words("ap.input");
    let output_aps = words("ap.output");
    let state_letters = parse_letter_section(&sections, "preds.state", &output_aps, |n| {
        b.lookup_state(n).map(|x| x.0)
    })?;
    let input_letters =
        parse_letter_section(&sections, "preds.input", &input_aps, |n| b.lookup_input(n).map(|u| u.0))?;
    let sys = b.build()?;
    let fill = |mut m: BTreeMap<usize, Vec<Valuation>>, n: usize| -> Vec<Vec<Valuation>> {
        (0..n).map(|i| m.remove(&i).unwrap_or_else(|| vec![Valuation::EMPTY])).collect()
    };
    let pm = PredicateMaps::new(
        input_aps,
        output_aps,
        fill(input_letters, sys.num_inputs()),
        fill(state_letters, sys.num_states()),
    )?;
    Ok((sys, pm))
}

fn split_arrow(line_no: usize, line: &str) -> Result<(&str, &str), TextError> {
    line.split_once("->").ok_or_else(|| syntax(line_no, "expected `->`"))
}

fn parse_letter_section(
    sections: &BTreeMap<&str, Vec<(usize, &str)>>,
    name: &str,
    aps: &[String],
    resolve: impl Fn(&str) -> Result<usize, SystemError>,
) -> Result<BTreeMap<usize, Vec<Valuation>>, TextError> {
    let mut map: BTreeMap<usize, Vec<Valuation>> = BTreeMap::new();
    for &(line_no, line) in sections.get(name).map(Vec::as_slice).unwrap_or(&[]) {
        let (lhs, rhs) = split_arrow(line_no, line)?;
        let id = resolve(lhs.trim())?;
        let letters = parse_letters(line_no, rhs, aps)?;
        map.entry(id).or_default().extend(letters);
    }
    Ok(map)
}

/// Parses `{a,b} {} {c}` into valuations over `aps`.
pub fn parse_letters(line_no: usize, text: &str, aps: &[String]) -> Result<Vec<Valuation>, TextError> {
    let mut out = Vec::new();
    let mut rest = text.trim();
    while !rest.is_empty() {
        let body_start = rest
            .strip_prefix('{')
            .ok_or_else(|| syntax(line_no, format!("expected `{{` at `{rest}`")))?;
        let close = body_start.find('}').ok_or_else(|| syntax(line_no, "unclosed `{`"))?;
        let mut v = Valuation::EMPTY;
        for ap in body_start[..close].split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let i = aps
                .iter()
                .position(|a| a == ap)
                .ok_or_else(|| syntax(line_no, format!("undeclared proposition `{ap}`")))?;
            v = v.with(i);
        }
        out.push(v);
        rest = body_start[close + 1..].trim_start();
    }
    if out.is_empty() {
        return Err(syntax(line_no, "expected at least one letter"));
    }
    Ok(out)
}

/// Deterministic serialization; sections and entries appear in id order.
pub fn write_system(sys: &FiniteSystem, pm: &PredicateMaps) -> String {
    let mut s = String::new();
    let line = |s: &mut String, header: &str, names: Vec<&str>| {
        let _ = writeln!(s, "[{header}]");
        if !names.is_empty() {
            let _ = writeln!(s, "{}", names.join(" "));
        }
    };
    line(&mut s, "states", sys.state_names().iter().map(String::as_str).collect());
    line(&mut s, "initial", sys.initial().iter().map(|&x| sys.state_name(x)).collect());
    line(&mut s, "inputs", sys.input_names().iter().map(String::as_str).collect());
    line(&mut s, "outputs", sys.output_names().iter().map(String::as_str).collect());
    line(&mut s, "ap.input", pm.input_aps().iter().map(String::as_str).collect());
    line(&mut s, "ap.output", pm.output_aps().iter().map(String::as_str).collect());
    s.push_str("[trans]\n");
    for x in sys.states() {
        for u in sys.inputs() {
            let succ = sys.successors(x, u);
            if !succ.is_empty() {
                let names: Vec<&str> = succ.iter().map(|&x2| sys.state_name(x2)).collect();
                let _ = writeln!(
                    s,
                    "{} {} -> {}",
                    sys.state_name(x),
                    sys.input_name(u),
                    names.join(" ")
                );
            }
        }
    }
    s.push_str("[out]\n");
    for x in sys.states() {
        let names: Vec<&str> = sys.outputs_of(x).iter().map(|&y| sys.output_name(y)).collect();
        let _ = writeln!(s, "{} -> {}", sys.state_name(x), names.join(" "));
    }
    let render = |letters: &[Valuation], aps: &[String]| -> String {
        letters.iter().map(|v| v.render(aps)).collect::<Vec<_>>().join(" ")
    };
    s.push_str("[preds.state]\n");
    for x in sys.states() {
        let _ = writeln!(
            s,
            "{} -> {}",
            sys.state_name(x),
            render(pm.state_letters(x), pm.output_aps())
        );
    }
    s.push_str("[preds.input]\n");
    for u in sys.inputs() {
        let _ = writeln!(
            s,
            "{} -> {}",
            sys.input_name(u),
            render(pm.input_letters(u), pm.input_aps())
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::{InputId, StateId};

    const S2: &str = "\
# running example
[states]
x0 x1
[initial]
x0
[inputs]
a b
[outputs]
y0 y1
[ap.output]
p
[trans]
x0 a -> x0 x1
x0 b -> x0
x1 a -> x1
[out]
x0 -> y0
x1 -> y0 y1
[preds.state]
x1 -> {p}
";

    #[test]
    fn parse_and_roundtrip() {
        let (sys, pm) = parse_system(S2).unwrap();
        assert_eq!(sys.num_states(), 2);
        assert_eq!(sys.successors(StateId(0), InputId(0)), &[StateId(0), StateId(1)]);
        assert!(!sys.is_enabled(StateId(1), InputId(1)));
        assert_eq!(pm.state_letters(StateId(1)), &[Valuation(1)]);
        assert_eq!(pm.state_letters(StateId(0)), &[Valuation::EMPTY]);
        let text = write_system(&sys, &pm);
        let (sys2, pm2) = parse_system(&text).unwrap();
        assert_eq!(write_system(&sys2, &pm2), text);
        assert_eq!(pm, pm2);
    }

    #[test]
    fn errors_carry_lines() {
        let bad = "[states]\nx0\n[trans]\nx0 a x0\n";
        assert!(matches!(parse_system(bad), Err(TextError::Syntax { line: 4, .. })));
        let bad = "[states]\nx0\n[inputs]\na\n[outputs]\ny\n[out]\nx0 -> z\n";
        assert!(matches!(parse_system(bad), Err(TextError::System(SystemError::UnknownOutput(_)))));
        assert!(parse_system("[bogus]\n").is_err());
        assert!(parse_letters(1, "{q}", &["p".to_string()]).is_err());
    }
}
