//! Plain-text, versioned files for MDP instances and loss sequences.
//!
//! ```text
//! format scb-mdp 1
//! actions 2
//! layer_sizes 1 2
//! initial 1
//! transition 0 0 0 : 0.25 0.75
//! transition 0 0 1 : 1 0
//! ```
//!
//! Transition rows are keyed by `(layer, index within layer, action)`.
//! Loss files carry the same header under `format scb-losses 1` followed by
//! `episode <t>` blocks with one line of `A` losses per state. Numbers are
//! written in shortest round-trip form, so reading back is bit-exact.

use std::fmt::Write as _;
use std::path::Path;

use super::{LayeredMdp, Layers};
use crate::error::{Error, Result};

const MDP_MAGIC: &str = "scb-mdp";
const LOSS_MAGIC: &str = "scb-losses";
const VERSION: u32 = 1;

fn join(values: &[f64]) -> String {
    let mut out = String::new();
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(' ');
        }
        write!(out, "{v}").expect("writing to a String");
    }
    out
}

fn header(out: &mut String, magic: &str, layers: &Layers) {
    let sizes: Vec<String> = layers.sizes().iter().map(|s| s.to_string()).collect();
    writeln!(out, "format {magic} {VERSION}").expect("writing to a String");
    writeln!(out, "actions {}", layers.actions()).expect("writing to a String");
    writeln!(out, "layer_sizes {}", sizes.join(" ")).expect("writing to a String");
}

pub fn write_mdp(mdp: &LayeredMdp) -> String {
    let layers = mdp.layers();
    let mut out = String::new();
    header(&mut out, MDP_MAGIC, layers);
    writeln!(out, "initial {}", join(mdp.initial())).expect("writing to a String");
    for h in 0..layers.horizon() {
        if layers.is_last(h) {
            continue;
        }
        for (i, s) in layers.range(h).enumerate() {
            for a in 0..layers.actions() {
                writeln!(out, "transition {h} {i} {a} : {}", join(mdp.row(s, a))).expect("writing to a String");
            }
        }
    }
    out
}

pub fn write_losses(layers: &Layers, episodes: &[Vec<f64>]) -> String {
    let mut out = String::new();
    header(&mut out, LOSS_MAGIC, layers);
    let na = layers.actions();
    for (t, table) in episodes.iter().enumerate() {
        writeln!(out, "episode {}", t + 1).expect("writing to a String");
        for row in table.chunks(na) {
            writeln!(out, "{}", join(row)).expect("writing to a String");
        }
    }
    out
}

struct Lines<'a> {
    inner: std::iter::Peekable<Box<dyn Iterator<Item = (usize, &'a str)> + 'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let it: Box<dyn Iterator<Item = (usize, &'a str)> + 'a> = Box::new(
            text.lines()
                .enumerate()
                .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
                .filter(|(_, l)| !l.is_empty()),
        );
        Lines { inner: it.peekable(), last: 0 }
    }

    fn next(&mut self) -> Option<(usize, &'a str)> {
        let item = self.inner.next();
        if let Some((n, _)) = item {
            self.last = n;
        }
        item
    }

    fn peek(&mut self) -> Option<&(usize, &'a str)> {
        self.inner.peek()
    }

    fn expect(&mut self, what: &str) -> Result<(usize, &'a str)> {
        self.next().ok_or_else(|| fail(self.last + 1, format!("unexpected end of file, expected {what}")))
    }

    fn keyword(&mut self, key: &str) -> Result<(usize, Vec<&'a str>)> {
        let (n, line) = self.expect(key)?;
        let mut parts = line.split_whitespace();
        if parts.next() != Some(key) {
            return Err(fail(n, format!("expected `{key}`")));
        }
        Ok((n, parts.collect()))
    }
}

fn fail(line: usize, message: impl Into<String>) -> Error {
    Error::Format { line, message: message.into() }
}

fn parse_float(line: usize, tok: &str) -> Result<f64> {
    let v: f64 = tok.parse().map_err(|_| fail(line, format!("`{tok}` is not a number")))?;
    if !v.is_finite() {
        return Err(fail(line, format!("non-finite value `{tok}`")));
    }
    Ok(v)
}

fn parse_usize(line: usize, tok: &str) -> Result<usize> {
    tok.parse().map_err(|_| fail(line, format!("`{tok}` is not a non-negative integer")))
}

fn floats(line: usize, toks: &[&str]) -> Result<Vec<f64>> {
    toks.iter().map(|t| parse_float(line, t)).collect()
}

fn read_header(lines: &mut Lines, magic: &str) -> Result<Layers> {
    let (n, f) = lines.keyword("format")?;
    if f.len() != 2 || f[0] != magic {
        return Err(fail(n, format!("expected `format {magic} {VERSION}`")));
    }
    if parse_usize(n, f[1])? != VERSION as usize {
        return Err(fail(n, format!("unsupported version {}", f[1])));
    }
    let (n, a) = lines.keyword("actions")?;
    if a.len() != 1 {
        return Err(fail(n, "expected a single action count"));
    }
    let actions = parse_usize(n, a[0])?;
    let (n, sizes) = lines.keyword("layer_sizes")?;
    let sizes = sizes.iter().map(|t| parse_usize(n, t)).collect::<Result<Vec<_>>>()?;
    Layers::new(sizes, actions).map_err(|e| fail(n, e.to_string()))
}

pub fn read_mdp(text: &str) -> Result<LayeredMdp> {
    let mut lines = Lines::new(text);
    let layers = read_header(&mut lines, MDP_MAGIC)?;
    let (n, init) = lines.keyword("initial")?;
    let initial = floats(n, &init)?;
    let mut kernel: Vec<Option<Vec<f64>>> = vec![None; layers.num_pairs()];
    while let Some((n, line)) = lines.next() {
        let (key, row) = line.split_once(':').ok_or_else(|| fail(n, "expected `transition h s a : probs`"))?;
        let key: Vec<&str> = key.split_whitespace().collect();
        if key.len() != 4 || key[0] != "transition" {
            return Err(fail(n, "expected `transition h s a : probs`"));
        }
        let (h, i, a) = (parse_usize(n, key[1])?, parse_usize(n, key[2])?, parse_usize(n, key[3])?);
        if h + 1 >= layers.horizon() || i >= layers.size(h) || a >= layers.actions() {
            return Err(fail(n, format!("transition index ({h}, {i}, {a}) out of range")));
        }
        let idx = layers.pair(layers.range(h).start + i, a);
        if kernel[idx].is_some() {
            return Err(fail(n, format!("duplicate transition ({h}, {i}, {a})")));
        }
        let toks: Vec<&str> = row.split_whitespace().collect();
        kernel[idx] = Some(floats(n, &toks)?);
    }
    let end = lines.last;
    let mut rows = Vec::with_capacity(layers.num_pairs());
    for h in 0..layers.horizon() {
        for s in layers.range(h) {
            for a in 0..layers.actions() {
                let row = kernel[layers.pair(s, a)].take();
                if layers.is_last(h) {
                    rows.push(vec![]);
                } else {
                    rows.push(row.ok_or_else(|| fail(end, format!("missing transition for state {s}, action {a}")))?);
                }
            }
        }
    }
    LayeredMdp::new(layers, initial, rows).map_err(|e| fail(end, e.to_string()))
}

pub fn read_losses(text: &str) -> Result<(Layers, Vec<Vec<f64>>)> {
    let mut lines = Lines::new(text);
    let layers = read_header(&mut lines, LOSS_MAGIC)?;
    let mut episodes = Vec::new();
    while lines.peek().is_some() {
        let (n, ep) = lines.keyword("episode")?;
        if ep.len() != 1 || parse_usize(n, ep[0])? != episodes.len() + 1 {
            return Err(fail(n, format!("expected `episode {}`", episodes.len() + 1)));
        }
        let mut table = Vec::with_capacity(layers.num_pairs());
        for _ in 0..layers.num_states() {
            let (n, line) = lines.expect("a row of losses")?;
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() != layers.actions() {
                return Err(fail(n, format!("expected {} losses", layers.actions())));
            }
            table.extend(floats(n, &toks)?);
        }
        episodes.push(table);
    }
    Ok((layers, episodes))
}

pub fn load_mdp(path: &Path) -> Result<LayeredMdp> {
    read_mdp(&std::fs::read_to_string(path)?)
}

pub fn save_mdp(path: &Path, mdp: &LayeredMdp) -> Result<()> {
    std::fs::write(path, write_mdp(mdp))?;
    Ok(())
}
