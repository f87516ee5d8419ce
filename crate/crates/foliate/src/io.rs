//! Problem files, series literals, and the JSON/DOT renderings of chart trees.
//!
//! A problem file is line based; `#` starts a comment.
//!
//! ```text
//! var u1 divisor      # u-variable, component of the divisor
//! var u2 u            # u-variable outside the divisor
//! var v v             # at most one
//! var w1 w            # regular variable
//! lattice 1 -1        # one row of B over the u-variables, in order
//! trunc 12
//! samples 5
//! seed 42
//! f u1*w1 + 1/2*u1^2*(w1 - 3)^2
//! ```
//!
//! Series literals are sums of products of rationals, variables and
//! parenthesized literals, with `^` taking a non-negative integer exponent.

use num_traits::{One, Zero};
use serde_json::{json, Map, Value};
use std::fmt::Write as _;
use thiserror::Error;

use crate::driver::{leaf_certificate, ChartNode, ChartTree, DriverConfig, LeafStatus, PreparedForm, Sample};
use crate::exact_linear::{ExponentMatrix, Rat};
use crate::foliation::{ChartFrame, LocalModel, VarClass};
use crate::invariant::{decompose, InvariantError, Nu};
use crate::series::{MultiIdx, TruncatedSeries};

/// Degree cap while parsing; literals are truncated to the model order later.
const PARSE_ORDER: u32 = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}, column {col}: {msg}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub msg: String,
}

fn err(line: usize, col: usize, msg: impl Into<String>) -> ParseError {
    ParseError { line, col, msg: msg.into() }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemFile {
    pub names: Vec<String>,
    pub classes: Vec<VarClass>,
    pub lattice: Vec<Vec<Rat>>,
    pub gens: Vec<TruncatedSeries>,
    pub trunc: u32,
    pub samples: usize,
    pub seed: u64,
}

impl ProblemFile {
    pub fn config(&self) -> DriverConfig {
        DriverConfig { samples: self.samples, seed: self.seed, ..DriverConfig::default() }
    }

    pub fn frame(&self) -> Result<ChartFrame, String> {
        ChartFrame::new(self.names.clone(), self.classes.clone()).map_err(|e| e.to_string())
    }

    pub fn model(&self) -> Result<LocalModel, String> {
        let frame = self.frame()?;
        let k = frame.u_block().len();
        let b = ExponentMatrix::from_rows(k, &self.lattice);
        LocalModel::new(frame, &b, self.gens.clone(), self.trunc).map_err(|e| e.to_string())
    }

    pub fn from_model(model: &LocalModel, cfg: &DriverConfig) -> Self {
        ProblemFile {
            names: model.frame.names().to_vec(),
            classes: model.frame.classes().to_vec(),
            lattice: model.b().to_rows(),
            gens: model.gens.clone(),
            trunc: model.order,
            samples: cfg.samples,
            seed: cfg.seed,
        }
    }

    /// Canonical text form; parsing it back gives the same problem.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for (n, c) in self.names.iter().zip(&self.classes) {
            let kw = match c {
                VarClass::U { divisor: true } => "divisor",
                VarClass::U { divisor: false } => "u",
                VarClass::V => "v",
                VarClass::W | VarClass::Frozen => "w",
            };
            let _ = writeln!(out, "var {n} {kw}");
        }
        for row in &self.lattice {
            let r: Vec<String> = row.iter().map(fmt_rat).collect();
            let _ = writeln!(out, "lattice {}", r.join(" "));
        }
        let _ = writeln!(out, "trunc {}", self.trunc);
        let _ = writeln!(out, "samples {}", self.samples);
        let _ = writeln!(out, "seed {}", self.seed);
        for g in &self.gens {
            let _ = writeln!(out, "f {}", g.display(&self.names));
        }
        out
    }
}

pub fn parse_problem(text: &str) -> Result<ProblemFile, ParseError> {
    let mut names: Vec<String> = Vec::new();
    let mut classes = Vec::new();
    let mut lattice_lines = Vec::new();
    let mut gen_lines = Vec::new();
    let mut trunc = 12u32;
    let mut samples = 5usize;
    let mut seed = 0u64;
    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let body = raw.split('#').next().unwrap_or("");
        let trimmed = body.trim_start();
        if trimmed.trim().is_empty() {
            continue;
        }
        let start = body.len() - trimmed.len();
        let kw_len = trimmed.find(char::is_whitespace).unwrap_or(trimmed.len());
        let kw = &trimmed[..kw_len];
        let rest = &trimmed[kw_len..];
        let rest_col = start + kw_len + 1;
        let words: Vec<(usize, &str)> = words(rest, rest_col);
        let one_number = |what: &str| -> Result<u64, ParseError> {
            match words.as_slice() {
                [(c, w)] => w.parse::<u64>().map_err(|_| err(line, *c, format!("{what} expects a non-negative integer"))),
                _ => Err(err(line, rest_col, format!("{what} expects one value"))),
            }
        };
        match kw {
            "var" => {
                let [(nc, name), (cc, class)] = words.as_slice() else {
                    return Err(err(line, rest_col, "expected `var <name> <divisor|u|v|w>`"));
                };
                if !is_ident(name) {
                    return Err(err(line, *nc, format!("invalid variable name `{name}`")));
                }
                if names.iter().any(|n| n == name) {
                    return Err(err(line, *nc, format!("variable `{name}` declared twice")));
                }
                let class = match *class {
                    "divisor" => VarClass::U { divisor: true },
                    "u" => VarClass::U { divisor: false },
                    "v" => VarClass::V,
                    "w" => VarClass::W,
                    other => return Err(err(line, *cc, format!("unknown variable class `{other}`"))),
                };
                if class == VarClass::V && classes.contains(&VarClass::V) {
                    return Err(err(line, *cc, "only one v variable is allowed"));
                }
                names.push(name.to_string());
                classes.push(class);
            }
            "lattice" => lattice_lines.push((line, rest_col, words.iter().map(|(c, w)| (*c, w.to_string())).collect::<Vec<_>>())),
            "trunc" => {
                let n = one_number("trunc")?;
                if n == 0 || n > PARSE_ORDER as u64 {
                    return Err(err(line, rest_col, format!("trunc must be between 1 and {PARSE_ORDER}")));
                }
                trunc = n as u32;
            }
            "samples" => samples = one_number("samples")? as usize,
            "seed" => seed = one_number("seed")?,
            "f" => gen_lines.push((line, rest_col, rest.to_string())),
            other => return Err(err(line, start + 1, format!("unknown keyword `{other}`"))),
        }
    }
    if names.is_empty() {
        return Err(err(1, 1, "no variables declared"));
    }
    let k = classes.iter().filter(|c| c.is_u()).count();
    let mut lattice = Vec::new();
    for (line, col, ws) in lattice_lines {
        if ws.len() != k {
            return Err(err(line, col, format!("lattice row has {} entries, expected {k}", ws.len())));
        }
        let mut row = Vec::new();
        for (c, w) in ws {
            row.push(parse_rat(&w).ok_or_else(|| err(line, c, format!("invalid rational `{w}`")))?);
        }
        lattice.push(row);
    }
    let mut gens = Vec::new();
    for (line, col, src) in gen_lines {
        let g = parse_series_at(&src, &names, PARSE_ORDER).map_err(|e| err(line, col + e.col - 1, e.msg))?;
        gens.push(g);
    }
    if gens.is_empty() {
        return Err(err(1, 1, "no generators (`f` lines)"));
    }
    Ok(ProblemFile { names, classes, lattice, gens, trunc, samples, seed })
}

fn words(s: &str, col0: usize) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut i = 0;
    let b = s.as_bytes();
    while i < b.len() {
        while i < b.len() && (b[i] as char).is_whitespace() {
            i += 1;
        }
        let st = i;
        while i < b.len() && !(b[i] as char).is_whitespace() {
            i += 1;
        }
        if i > st {
            out.push((col0 + st - 1, &s[st..i]));
        }
    }
    out
}

fn is_ident(s: &str) -> bool {
    let mut ch = s.chars();
    matches!(ch.next(), Some(c) if c.is_ascii_alphabetic() || c == '_') && ch.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn parse_rat(s: &str) -> Option<Rat> {
    match s.split_once('/') {
        Some((p, q)) => {
            let q: num_bigint::BigInt = q.parse().ok()?;
            if q.is_zero() {
                return None;
            }
            Some(Rat::new(p.parse().ok()?, q))
        }
        None => Some(Rat::from_integer(s.parse().ok()?)),
    }
}

fn fmt_rat(r: &Rat) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Parse a series literal over the given variables; errors carry line 1.
pub fn parse_series(src: &str, names: &[String], order: u32) -> Result<TruncatedSeries, ParseError> {
    parse_series_at(src, names, PARSE_ORDER).map(|s| s.truncate(order))
}

fn parse_series_at(src: &str, names: &[String], order: u32) -> Result<TruncatedSeries, ParseError> {
    let mut p = Parser { s: src.as_bytes(), i: 0, names, order };
    p.skip_ws();
    if p.i == p.s.len() {
        return Err(err(1, 1, "empty series literal"));
    }
    let v = p.expr()?;
    p.skip_ws();
    if p.i < p.s.len() {
        return Err(p.error(format!("unexpected `{}`", p.s[p.i] as char)));
    }
    Ok(v)
}

struct Parser<'a> {
    s: &'a [u8],
    i: usize,
    names: &'a [String],
    order: u32,
}

impl Parser<'_> {
    fn error(&self, msg: impl Into<String>) -> ParseError {
        err(1, self.i + 1, msg)
    }

    fn skip_ws(&mut self) {
        while self.i < self.s.len() && (self.s[self.i] as char).is_whitespace() {
            self.i += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.i).copied()
    }

    fn n(&self) -> usize {
        self.names.len()
    }

    fn expr(&mut self) -> Result<TruncatedSeries, ParseError> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.i += 1;
                    acc = acc.add(&self.term()?);
                }
                Some(b'-') => {
                    self.i += 1;
                    acc = acc.sub(&self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<TruncatedSeries, ParseError> {
        let mut acc = self.unary()?;
        while self.peek() == Some(b'*') {
            self.i += 1;
            acc = acc.mul(&self.unary()?);
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<TruncatedSeries, ParseError> {
        match self.peek() {
            Some(b'-') => {
                self.i += 1;
                Ok(self.unary()?.neg())
            }
            Some(b'+') => {
                self.i += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<TruncatedSeries, ParseError> {
        let base = self.atom()?;
        if self.peek() != Some(b'^') {
            return Ok(base);
        }
        self.i += 1;
        self.skip_ws();
        let st = self.i;
        let k = self.integer().ok_or_else(|| self.error("expected an exponent"))?;
        let k: u32 = k.try_into().ok().filter(|&k| k <= self.order).ok_or_else(|| err(1, st + 1, "exponent too large"))?;
        Ok(base.pow(k))
    }

    fn integer(&mut self) -> Option<num_bigint::BigInt> {
        let st = self.i;
        while self.i < self.s.len() && self.s[self.i].is_ascii_digit() {
            self.i += 1;
        }
        if self.i == st {
            return None;
        }
        std::str::from_utf8(&self.s[st..self.i]).ok()?.parse().ok()
    }

    fn atom(&mut self) -> Result<TruncatedSeries, ParseError> {
        let n = self.n();
        match self.peek() {
            Some(b'(') => {
                self.i += 1;
                let v = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.error("expected `)`"));
                }
                self.i += 1;
                Ok(v)
            }
            Some(c) if c.is_ascii_digit() => {
                let p = self.integer().expect("digit");
                let mut q = num_bigint::BigInt::one();
                if self.s.get(self.i) == Some(&b'/') {
                    self.i += 1;
                    let st = self.i;
                    q = self.integer().ok_or_else(|| self.error("expected a denominator"))?;
                    if q.is_zero() {
                        return Err(err(1, st + 1, "zero denominator"));
                    }
                }
                Ok(TruncatedSeries::constant(n, self.order, Rat::new(p, q)))
            }
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let st = self.i;
                while self.i < self.s.len() && (self.s[self.i].is_ascii_alphanumeric() || self.s[self.i] == b'_') {
                    self.i += 1;
                }
                let name = std::str::from_utf8(&self.s[st..self.i]).expect("ascii");
                let idx = self.names.iter().position(|x| x == name).ok_or_else(|| err(1, st + 1, format!("unknown variable `{name}`")))?;
                Ok(TruncatedSeries::var(n, self.order, idx))
            }
            Some(c) => Err(self.error(format!("unexpected `{}`", c as char))),
            None => Err(self.error("unexpected end of literal")),
        }
    }
}

fn rat_json(r: &Rat) -> Value {
    Value::String(fmt_rat(r))
}

fn rats_json(v: &[Rat]) -> Value {
    Value::Array(v.iter().map(rat_json).collect())
}

fn matrix_json(m: &ExponentMatrix) -> Value {
    Value::Array(m.to_rows().iter().map(|r| rats_json(r)).collect())
}

fn nu_json(n: Option<Nu>) -> Value {
    match n {
        None => Value::Null,
        Some(Nu::Finite(k)) => json!(k),
        Some(Nu::Infinite) => json!("inf"),
    }
}

fn class_name(c: VarClass) -> &'static str {
    match c {
        VarClass::U { divisor: true } => "divisor",
        VarClass::U { divisor: false } => "u",
        VarClass::V => "v",
        VarClass::W => "w",
        VarClass::Frozen => "frozen",
    }
}

fn status_json(s: &Option<LeafStatus>) -> Value {
    match s {
        None => Value::Null,
        Some(st) => {
            let mut m = Map::new();
            m.insert("kind".into(), json!(st.name()));
            match st {
                LeafStatus::Done { nu } => {
                    m.insert("nu".into(), json!(nu));
                }
                LeafStatus::Monomialized { rank } => {
                    m.insert("rank".into(), json!(rank));
                }
                LeafStatus::OracleFailure(d) | LeafStatus::TruncationAmbiguous(d) => {
                    m.insert("detail".into(), json!(d));
                }
                LeafStatus::Trivial => {}
            }
            Value::Object(m)
        }
    }
}

fn sample_json(s: &Sample) -> Value {
    json!({
        "gamma": rats_json(&s.gamma),
        "case": s.label,
        "nu": nu_json(s.nu),
    })
}

fn prepared_json(p: &PreparedForm, names: &[String]) -> Value {
    let idx = |e: &Option<MultiIdx>| e.as_ref().map(|e| json!(e.0)).unwrap_or(Value::Null);
    json!({
        "nu": p.nu,
        "witness": p.witness,
        "beta": idx(&p.beta),
        "eps": p.eps,
        "beta_generator": p.beta_generator,
        "w": p.w.map(|w| names[w].clone()),
        "r": p.r.iter().map(|row| row.iter().map(idx).collect::<Vec<_>>()).collect::<Vec<_>>(),
    })
}

pub fn node_json(node: &ChartNode) -> Value {
    let m = &node.model;
    let names = m.frame.names();
    let frame: Vec<Value> = names
        .iter()
        .zip(m.frame.classes())
        .map(|(n, c)| json!({"name": n, "class": class_name(*c)}))
        .collect();
    let transition = node.transition.as_ref().map(|t| {
        json!({
            "vars": t.vars.iter().map(|&i| names[i].clone()).collect::<Vec<_>>(),
            "matrix": matrix_json(&t.a),
            "gamma": rats_json(&t.gamma),
        })
    });
    json!({
        "id": node.id,
        "parent": node.parent,
        "children": node.children,
        "label": node.label,
        "frame": frame,
        "transition": transition,
        "lattice": matrix_json(m.b()),
        "order": m.order,
        "exact": m.is_exact(),
        "generators": m.gens.iter().map(|g| g.display(names)).collect::<Vec<_>>(),
        "nu": nu_json(node.nu),
        "nu_in": nu_json(node.nu_in),
        "status": status_json(&node.status),
        "first_integrals": node.first_integrals.iter().map(|r| rats_json(r)).collect::<Vec<_>>(),
        "samples": node.samples.iter().map(sample_json).collect::<Vec<_>>(),
        "centers_checked": node.centers_checked,
        "prepared": node.prepared.as_ref().map(|p| prepared_json(p, names)),
        "notes": node.notes,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TreeSummary {
    pub nodes: usize,
    pub leaves: usize,
    pub monomialized: usize,
    pub done: usize,
    pub trivial: usize,
    pub oracle_failures: usize,
    pub truncation_ambiguous: usize,
    pub open: usize,
}

pub fn summarize(tree: &ChartTree) -> TreeSummary {
    let mut s = TreeSummary { nodes: tree.nodes.len(), ..Default::default() };
    for l in tree.leaves() {
        s.leaves += 1;
        match &l.status {
            Some(LeafStatus::Monomialized { .. }) => s.monomialized += 1,
            Some(LeafStatus::Done { .. }) => s.done += 1,
            Some(LeafStatus::Trivial) => s.trivial += 1,
            Some(LeafStatus::OracleFailure(_)) => s.oracle_failures += 1,
            Some(LeafStatus::TruncationAmbiguous(_)) => s.truncation_ambiguous += 1,
            None => s.open += 1,
        }
    }
    s
}

pub fn tree_json(command: &str, problem: &ProblemFile, tree: &ChartTree) -> Value {
    let s = summarize(tree);
    json!({
        "command": command,
        "problem": problem.serialize(),
        "summary": {
            "nodes": s.nodes,
            "leaves": s.leaves,
            "monomialized": s.monomialized,
            "done": s.done,
            "trivial": s.trivial,
            "oracle_failure": s.oracle_failures,
            "truncation_ambiguous": s.truncation_ambiguous,
            "open": s.open,
        },
        "nodes": tree.nodes.iter().map(node_json).collect::<Vec<_>>(),
    })
}

pub fn to_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

/// Process exit code for a finished run: 3 if any leaf failed the oracle,
/// else 4 if any leaf is truncation ambiguous, else 0.
pub fn exit_code(s: &TreeSummary) -> i32 {
    if s.oracle_failures > 0 {
        3
    } else if s.truncation_ambiguous > 0 {
        4
    } else {
        0
    }
}

/// Graphviz rendering of the tree.
pub fn tree_dot(tree: &ChartTree) -> String {
    let mut out = String::from("digraph charts {\n  node [shape=box, fontname=\"monospace\"];\n");
    for n in &tree.nodes {
        let nu = match n.nu {
            Some(x) => x.to_string(),
            None => "-".into(),
        };
        let mut label = format!("{}: {}\\nν = {}", n.id, n.label, nu);
        if let Some(st) = &n.status {
            let _ = write!(label, "\\n[{}]", st.name());
        }
        let style = match &n.status {
            Some(LeafStatus::Monomialized { .. }) => ", style=filled, fillcolor=palegreen",
            Some(LeafStatus::OracleFailure(_)) | Some(LeafStatus::TruncationAmbiguous(_)) => ", style=filled, fillcolor=lightpink",
            _ => "",
        };
        let _ = writeln!(out, "  n{} [label=\"{}\"{}];", n.id, label.replace('"', "'"), style);
    }
    for n in &tree.nodes {
        for c in &n.children {
            let _ = writeln!(out, "  n{} -> n{};", n.id, c);
        }
    }
    out.push_str("}\n");
    out
}

/// ν by both methods, for the `invariant` command.
pub fn invariant_json(model: &LocalModel) -> Value {
    let scan = crate::invariant::tangency_order_scan(model);
    let chain = crate::invariant::tangency_order_chain(model);
    let names = model.frame.names();
    let show = |r: Result<Nu, InvariantError>| match r {
        Ok(n) => nu_json(Some(n)),
        Err(InvariantError::Trivial) => json!("trivial"),
        Err(e) => json!({"error": e.to_string()}),
    };
    let witness = scan.as_ref().ok().and_then(|t| t.witness.clone()).map(|(i, lam)| {
        json!({"generator": i + 1, "derivative": lam.0.iter().enumerate().filter(|(_, &k)| k > 0).map(|(j, &k)| json!([names[j], k])).collect::<Vec<_>>()})
    });
    json!({
        "nu_scan": show(scan.clone().map(|t| t.value)),
        "nu_chain": show(chain),
        "witness": witness,
        "exact": model.is_exact(),
    })
}

pub fn decompose_json(model: &LocalModel) -> Value {
    let names = model.frame.names();
    match decompose(model) {
        Ok(d) => json!({
            "delta": d.delta.0,
            "first_integral_part": d.g.iter().map(|g| g.display(names)).collect::<Vec<_>>(),
            "residual": d.t.iter().map(|t| t.display(names)).collect::<Vec<_>>(),
        }),
        Err(InvariantError::Trivial) => json!({"trivial": true}),
        Err(e) => json!({"error": e.to_string()}),
    }
}

/// A node as read back from a tree document.
#[derive(Debug, Clone)]
struct ReadNode {
    id: usize,
    parent: Option<usize>,
    children: Vec<usize>,
    model: LocalModel,
    nu: Option<Nu>,
    nu_in: Option<Nu>,
    status: Option<String>,
    rank: Option<usize>,
    first_integrals: Vec<Vec<Rat>>,
    samples: Vec<Option<Nu>>,
}

fn bad(msg: impl Into<String>) -> String {
    msg.into()
}

fn read_rat(v: &Value) -> Result<Rat, String> {
    v.as_str().and_then(parse_rat).ok_or_else(|| bad(format!("expected a rational string, got {v}")))
}

fn read_rats(v: &Value) -> Result<Vec<Rat>, String> {
    v.as_array().ok_or_else(|| bad("expected an array"))?.iter().map(read_rat).collect()
}

fn read_nu(v: &Value) -> Result<Option<Nu>, String> {
    match v {
        Value::Null => Ok(None),
        Value::String(s) if s == "inf" => Ok(Some(Nu::Infinite)),
        Value::Number(n) => Ok(Some(Nu::Finite(n.as_u64().ok_or_else(|| bad("bad ν"))? as u32))),
        other => Err(bad(format!("bad ν {other}"))),
    }
}

fn read_node(v: &Value) -> Result<ReadNode, String> {
    let id = v["id"].as_u64().ok_or_else(|| bad("node without id"))? as usize;
    let ctx = |m: String| format!("node {id}: {m}");
    let mut names = Vec::new();
    let mut classes = Vec::new();
    for f in v["frame"].as_array().ok_or_else(|| ctx("missing frame".into()))? {
        names.push(f["name"].as_str().ok_or_else(|| ctx("bad frame".into()))?.to_string());
        classes.push(match f["class"].as_str() {
            Some("divisor") => VarClass::U { divisor: true },
            Some("u") => VarClass::U { divisor: false },
            Some("v") => VarClass::V,
            Some("w") => VarClass::W,
            Some("frozen") => VarClass::Frozen,
            _ => return Err(ctx("bad variable class".into())),
        });
    }
    let frame = ChartFrame::new(names.clone(), classes).map_err(|e| ctx(e.to_string()))?;
    let order = v["order"].as_u64().ok_or_else(|| ctx("missing order".into()))? as u32;
    let exact = v["exact"].as_bool().unwrap_or(false);
    let k = frame.u_block().len();
    let rows: Vec<Vec<Rat>> = v["lattice"].as_array().ok_or_else(|| ctx("missing lattice".into()))?.iter().map(read_rats).collect::<Result<_, _>>().map_err(ctx)?;
    let mut gens = Vec::new();
    for g in v["generators"].as_array().ok_or_else(|| ctx("missing generators".into()))? {
        let s = g.as_str().ok_or_else(|| ctx("bad generator".into()))?;
        let p = parse_series(s, &names, order).map_err(|e| ctx(e.to_string()))?;
        gens.push(p.with_exact(exact));
    }
    let model = LocalModel::new(frame, &ExponentMatrix::from_rows(k, &rows), gens, order).map_err(|e| ctx(e.to_string()))?;
    let ids = |x: &Value| -> Vec<usize> { x.as_array().map(|a| a.iter().filter_map(|c| c.as_u64()).map(|c| c as usize).collect()).unwrap_or_default() };
    Ok(ReadNode {
        id,
        parent: v["parent"].as_u64().map(|p| p as usize),
        children: ids(&v["children"]),
        model,
        nu: read_nu(&v["nu"]).map_err(ctx)?,
        nu_in: read_nu(&v["nu_in"]).map_err(ctx)?,
        status: v["status"]["kind"].as_str().map(str::to_string),
        rank: v["status"]["rank"].as_u64().map(|r| r as usize),
        first_integrals: v["first_integrals"].as_array().map(|a| a.iter().map(read_rats).collect::<Result<Vec<_>, _>>()).transpose().map_err(ctx)?.unwrap_or_default(),
        samples: v["samples"].as_array().map(|a| a.iter().map(|s| read_nu(&s["nu"])).collect::<Result<Vec<_>, _>>()).transpose().map_err(ctx)?.unwrap_or_default(),
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CheckReport {
    pub leaves_checked: usize,
    pub monomialized: usize,
    pub drop_boundaries: usize,
    pub samples: usize,
    pub failures: Vec<String>,
}

impl CheckReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn to_json(&self) -> Value {
        json!({
            "ok": self.ok(),
            "leaves_checked": self.leaves_checked,
            "monomialized": self.monomialized,
            "drop_boundaries": self.drop_boundaries,
            "samples": self.samples,
            "failures": self.failures,
        })
    }
}

/// Re-verify a tree document using only what it states: the tree shape,
/// descent at every drop, and each monomialized leaf's certificate, rebuilt
/// from the printed frame, lattice and generators.
pub fn check_tree(doc: &Value) -> CheckReport {
    let mut rep = CheckReport::default();
    let Some(nodes) = doc["nodes"].as_array() else {
        rep.failures.push("document has no nodes".into());
        return rep;
    };
    let mut read = Vec::new();
    for (i, v) in nodes.iter().enumerate() {
        match read_node(v) {
            Ok(n) if n.id == i => read.push(n),
            Ok(n) => rep.failures.push(format!("node {} listed at position {i}", n.id)),
            Err(e) => rep.failures.push(e),
        }
    }
    if !rep.failures.is_empty() {
        return rep;
    }
    let Some(root) = read.first() else {
        rep.failures.push("empty tree".into());
        return rep;
    };
    let n = root.model.gens.len();
    let rank0 = root.model.b().rank();
    for node in &read {
        for &c in &node.children {
            if read.get(c).and_then(|x| x.parent) != Some(node.id) {
                rep.failures.push(format!("node {}: child {c} does not point back", node.id));
            }
        }
        if let Some(p) = node.parent {
            if p >= node.id {
                rep.failures.push(format!("node {}: parent {p} is not earlier", node.id));
            }
        }
        if let Some(inn) = node.nu_in {
            rep.drop_boundaries += 1;
            if node.nu.is_some_and(|o| o >= inn) && node.status.as_deref() != Some("truncation_ambiguous") {
                rep.failures.push(format!("node {}: no descent at a drop ({inn} -> {})", node.id, node.nu.unwrap()));
            }
            for s in &node.samples {
                rep.samples += 1;
                if s.is_some_and(|o| o >= inn) {
                    rep.failures.push(format!("node {}: sampled point without descent", node.id));
                }
            }
        }
        if !node.children.is_empty() {
            continue;
        }
        rep.leaves_checked += 1;
        if node.status.as_deref() == Some("monomialized") {
            rep.monomialized += 1;
            let cn = ChartNode {
                id: node.id,
                parent: node.parent,
                label: String::new(),
                transition: None,
                model: node.model.clone(),
                nu: None,
                nu_in: None,
                status: None,
                samples: vec![],
                children: vec![],
                first_integrals: node.first_integrals.clone(),
                centers_checked: 0,
                prepared: None,
                notes: vec![],
            };
            match leaf_certificate(&cn, rank0, n) {
                Ok(r) if Some(r) == node.rank => {}
                Ok(r) => rep.failures.push(format!("node {}: rank {r} differs from the recorded one", node.id)),
                Err(e) => rep.failures.push(e),
            }
        }
    }
    rep
}
