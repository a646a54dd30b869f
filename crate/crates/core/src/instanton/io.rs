//! Line-oriented text dumps of strip maps.
//!
//! The format is binary-free and self-describing: a tagged header with
//! the jet dimension, the grid, the two boundary graphs and the
//! far-field mode, followed by one node per line. Floats are written
//! with the shortest representation that parses back to the same bits,
//! so dump -> parse -> dump reproduces the file byte for byte. Edge
//! chart coordinates are not stored separately: boundary nodes satisfy
//! q = chart by construction, so the charts are recovered exactly from
//! the edge rows.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DVector;

use super::grid::StripGrid;
use super::map::{FarFieldMode, StripMap};
use crate::error::{Error, Result};
use crate::geometry::{GeneratingFn, LegendrianJetGraph, PhasePoint};

const FORMAT_TAG: &str = "strip-map v1";

fn mode_keyword(mode: FarFieldMode) -> &'static str {
    match mode {
        FarFieldMode::DirichletToChord => "dirichlet-to-chord",
        FarFieldMode::ZeroTauDerivative => "zero-tau-derivative",
    }
}

fn parse_mode(word: &str) -> Option<FarFieldMode> {
    match word {
        "dirichlet-to-chord" => Some(FarFieldMode::DirichletToChord),
        "zero-tau-derivative" => Some(FarFieldMode::ZeroTauDerivative),
        _ => None,
    }
}

/// Renders a strip map in the dump format.
pub fn dump_strip_map(w: &StripMap) -> String {
    let grid = w.grid();
    let n = w.dim();
    let mut out = String::new();
    let _ = writeln!(out, "{FORMAT_TAG}");
    let _ = writeln!(out, "n {n}");
    let _ = writeln!(
        out,
        "grid {} {} {} {}",
        grid.tau_min(),
        grid.tau_max(),
        grid.n_tau(),
        grid.n_t()
    );
    let _ = writeln!(out, "far-field {}", mode_keyword(w.far_field()));
    for (key, graph) in [
        ("lower", w.lower_boundary()),
        ("upper", w.upper_boundary()),
    ] {
        let _ = writeln!(out, "{key} {} {}", graph.label(), graph.half_width);
    }
    let _ = writeln!(out, "nodes {}", grid.nodes_tau() * grid.nodes_t());
    for i in 0..grid.nodes_tau() {
        for j in 0..grid.nodes_t() {
            let x = w.value(i, j);
            let _ = write!(out, "{i} {j}");
            for v in x.q.iter().chain(x.p.iter()) {
                let _ = write!(out, " {v}");
            }
            let _ = writeln!(out, " {}", x.z);
        }
    }
    out
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn next(&mut self, what: &str) -> Result<(usize, &'a str)> {
        match self.inner.next() {
            Some((k, line)) => Ok((k + 1, line)),
            None => Err(Error::MalformedDump(format!(
                "unexpected end of input, expected {what}"
            ))),
        }
    }
}

fn bad(line_no: usize, what: &str) -> Error {
    Error::MalformedDump(format!("line {line_no}: {what}"))
}

fn parse_f64(line_no: usize, word: &str, what: &str) -> Result<f64> {
    word.parse()
        .map_err(|_| bad(line_no, &format!("cannot parse {what} from {word:?}")))
}

fn parse_usize(line_no: usize, word: &str, what: &str) -> Result<usize> {
    word.parse()
        .map_err(|_| bad(line_no, &format!("cannot parse {what} from {word:?}")))
}

/// Keyed header line "key rest..."; checks the key and returns the rest.
fn keyed<'a>(line_no: usize, line: &'a str, key: &str) -> Result<Vec<&'a str>> {
    let mut words = line.split_whitespace();
    if words.next() != Some(key) {
        return Err(bad(line_no, &format!("expected a {key:?} line, got {line:?}")));
    }
    Ok(words.collect())
}

fn parse_graph(line_no: usize, rest: &[&str], n: usize) -> Result<LegendrianJetGraph> {
    let [label, hw] = rest else {
        return Err(bad(line_no, "boundary line needs a label and a chart half-width"));
    };
    let s = GeneratingFn::parse_label(label)
        .ok_or_else(|| bad(line_no, &format!("unknown generating function label {label:?}")))?;
    let half_width = parse_f64(line_no, hw, "chart half-width")?;
    if !(half_width > 0.0) {
        return Err(bad(line_no, "chart half-width must be positive"));
    }
    Ok(LegendrianJetGraph::new(n, s, half_width))
}

/// Parses the dump format back into a strip map.
///
/// The node lines must appear in canonical order (t fastest). Boundary
/// consistency is re-validated by the map constructor, so a dump edited
/// off the Legendrians is rejected.
pub fn parse_strip_map(text: &str) -> Result<StripMap> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
    };

    let (k, tag) = lines.next("the format tag")?;
    if tag.trim() != FORMAT_TAG {
        return Err(bad(k, &format!("unsupported format tag {tag:?}")));
    }

    let (k, line) = lines.next("the dimension line")?;
    let rest = keyed(k, line, "n")?;
    let [n_word] = rest[..] else {
        return Err(bad(k, "dimension line needs exactly one value"));
    };
    let n = parse_usize(k, n_word, "jet dimension")?;
    if n == 0 {
        return Err(bad(k, "jet dimension must be positive"));
    }

    let (k, line) = lines.next("the grid line")?;
    let rest = keyed(k, line, "grid")?;
    let [tau_min, tau_max, n_tau, n_t] = rest[..] else {
        return Err(bad(k, "grid line needs tau_min tau_max n_tau n_t"));
    };
    let grid = StripGrid::new(
        parse_f64(k, tau_min, "tau_min")?,
        parse_f64(k, tau_max, "tau_max")?,
        parse_usize(k, n_tau, "n_tau")?,
        parse_usize(k, n_t, "n_t")?,
    )?;

    let (k, line) = lines.next("the far-field line")?;
    let rest = keyed(k, line, "far-field")?;
    let [word] = rest[..] else {
        return Err(bad(k, "far-field line needs exactly one keyword"));
    };
    let mode =
        parse_mode(word).ok_or_else(|| bad(k, &format!("unknown far-field keyword {word:?}")))?;

    let (k, line) = lines.next("the lower boundary line")?;
    let lower = parse_graph(k, &keyed(k, line, "lower")?, n)?;
    let (k, line) = lines.next("the upper boundary line")?;
    let upper = parse_graph(k, &keyed(k, line, "upper")?, n)?;

    let (k, line) = lines.next("the node count line")?;
    let rest = keyed(k, line, "nodes")?;
    let [count_word] = rest[..] else {
        return Err(bad(k, "node count line needs exactly one value"));
    };
    let count = parse_usize(k, count_word, "node count")?;
    let expected = grid.nodes_tau() * grid.nodes_t();
    if count != expected {
        return Err(bad(
            k,
            &format!("node count {count} does not match the grid ({expected})"),
        ));
    }

    let mut values = Vec::with_capacity(count);
    for i in 0..grid.nodes_tau() {
        for j in 0..grid.nodes_t() {
            let (k, line) = lines.next("a node line")?;
            let words: Vec<&str> = line.split_whitespace().collect();
            if words.len() != 2 + 2 * n + 1 {
                return Err(bad(
                    k,
                    &format!("node line needs 2 indices and {} values", 2 * n + 1),
                ));
            }
            let gi = parse_usize(k, words[0], "node index i")?;
            let gj = parse_usize(k, words[1], "node index j")?;
            if (gi, gj) != (i, j) {
                return Err(bad(
                    k,
                    &format!("node ({gi}, {gj}) out of order, expected ({i}, {j})"),
                ));
            }
            let mut vals = Vec::with_capacity(2 * n + 1);
            for w in &words[2..] {
                vals.push(parse_f64(k, w, "node value")?);
            }
            values.push(PhasePoint::new(
                DVector::from_column_slice(&vals[..n]),
                DVector::from_column_slice(&vals[n..2 * n]),
                vals[2 * n],
            ));
        }
    }
    if let Some((k, line)) = lines.inner.next() {
        if !line.trim().is_empty() {
            return Err(bad(k + 1, &format!("trailing content {line:?}")));
        }
    }

    // Edge nodes carry q = chart, so the chart rows are the boundary q's.
    // The map constructor would silently project edge values onto the
    // graphs, so check them here first: a dump written by this module has
    // exact edge values, and anything off by more than round-off means
    // the file was edited off the Legendrians.
    let nt = grid.nodes_t();
    for i in 0..grid.nodes_tau() {
        for (graph, j, side) in [(&lower, 0, "lower"), (&upper, nt - 1, "upper")] {
            let x = &values[i * nt + j];
            let scale = 1.0 + x.p.amax() + x.z.abs();
            if graph.defect(x).amax() > 1e-9 * scale {
                return Err(Error::InconsistentBoundary(format!(
                    "node ({i}, {j}) is off the {side} boundary graph"
                )));
            }
        }
    }
    let chart_lower: Vec<DVector<f64>> = (0..grid.nodes_tau())
        .map(|i| values[i * nt].q.clone())
        .collect();
    let chart_upper: Vec<DVector<f64>> = (0..grid.nodes_tau())
        .map(|i| values[i * nt + nt - 1].q.clone())
        .collect();
    StripMap::new(grid, lower, upper, mode, values, chart_lower, chart_upper)
}

/// Writes the dump of a strip map to a file.
pub fn write_strip_map(path: &Path, w: &StripMap) -> Result<()> {
    Ok(std::fs::write(path, dump_strip_map(w))?)
}

/// Reads a strip map from a dump file.
pub fn read_strip_map(path: &Path) -> Result<StripMap> {
    parse_strip_map(&std::fs::read_to_string(path)?)
}
