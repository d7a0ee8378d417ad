//! Line-oriented text formats for instances and routings.
//!
//! Instance file:
//!
//! ```text
//! kofn-instance v1
//! k=2 n=4
//! # p r [c]
//! 1/2 12
//! 1/2 12
//! 1/2 10
//! 3/4 10
//! ```
//!
//! The version line is optional on input, `;` separates records on one
//! line, and record fields may be written `p=1/2 r=12 c=3`.
//!
//! Routing file (processor ids are 1-based):
//!
//! ```text
//! kofn-routing v1
//! rep mega
//! phase 6 | 1 2 | 3 4
//! phase 7 | 1 2 3 4
//! throughput 13
//! ```
//!
//! Other bodies: `rep compressed` with `order`, `groups`, `merge <position>
//! <flow>` and `final <flow>` lines; `rep perm` with `perm <flow> | ids`;
//! `rep tree` with `tree <flow> | preorder`, where a preorder lists a test
//! id, its fail subtree, then its pass subtree, and `.` is a leaf.

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::error::KofnError;
use crate::instance::{CostInstance, Instance};
use crate::mincost::DecisionTree;
use crate::num::{parse_rational, Q};
use crate::routing::{
    CompressedRouting, MegaPhase, MegaRouting, MergeEvent, PermutationRouting, Routing, TreeRouting,
};

pub const INSTANCE_HEADER: &str = "kofn-instance v1";
pub const ROUTING_HEADER: &str = "kofn-routing v1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FormatError {
    #[error("line {line}: probability {value} must lie strictly inside (0,1)")]
    Probability { line: usize, value: String },
    #[error("line {line}: rate limit {value} must be positive")]
    Rate { line: usize, value: String },
    #[error("line {line}: cost {value} must be positive")]
    Cost { line: usize, value: String },
    #[error("line {line}: threshold k={k} must satisfy 1 <= k <= n={n}")]
    Threshold { line: usize, k: usize, n: usize },
    #[error("line {line}: malformed number {text:?}")]
    Number { line: usize, text: String },
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("{0}")]
    Invalid(#[from] KofnError),
}

fn syntax(line: usize, message: impl Into<String>) -> FormatError {
    FormatError::Syntax {
        line,
        message: message.into(),
    }
}

fn rational(line: usize, text: &str) -> Result<Q, FormatError> {
    parse_rational(text).map_err(|_| FormatError::Number {
        line,
        text: text.to_string(),
    })
}

fn count(line: usize, text: &str) -> Result<usize, FormatError> {
    text.parse().map_err(|_| FormatError::Number {
        line,
        text: text.to_string(),
    })
}

/// Non-empty records with their 1-based line numbers, comments removed.
fn records(text: &str, split_semicolons: bool) -> Vec<(usize, String)> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let body = raw.split('#').next().unwrap_or("");
        let pieces: Vec<&str> = if split_semicolons {
            body.split(';').collect()
        } else {
            vec![body]
        };
        for piece in pieces {
            let piece = piece.trim();
            if !piece.is_empty() {
                out.push((i + 1, piece.to_string()));
            }
        }
    }
    out
}

/// A parsed instance file; costs are present when every record has three fields.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceFile {
    pub instance: Instance,
    pub costs: Option<Vec<Q>>,
}

impl InstanceFile {
    pub fn cost_instance(&self) -> Option<CostInstance> {
        let c = self.costs.clone()?;
        CostInstance::new(self.instance.k(), self.instance.p().to_vec(), c).ok()
    }
}

fn check_field(line: usize, name: char, value: &Q, text: &str) -> Result<(), FormatError> {
    let value_text = text.to_string();
    match name {
        'p' if !value.is_positive() || *value >= Q::one() => Err(FormatError::Probability {
            line,
            value: value_text,
        }),
        'r' if !value.is_positive() => Err(FormatError::Rate {
            line,
            value: value_text,
        }),
        'c' if !value.is_positive() => Err(FormatError::Cost {
            line,
            value: value_text,
        }),
        _ => Ok(()),
    }
}

pub fn parse_instance(text: &str) -> Result<InstanceFile, FormatError> {
    let recs = records(text, true);
    let mut it = recs.iter().peekable();
    if let Some((_, r)) = it.peek() {
        if r.starts_with("kofn-instance") {
            let (line, r) = it.next().expect("peeked");
            if r.split_whitespace().collect::<Vec<_>>()
                != INSTANCE_HEADER.split(' ').collect::<Vec<_>>()
            {
                return Err(syntax(*line, format!("unsupported header {r:?}")));
            }
        }
    }
    let (hline, header) = it
        .next()
        .ok_or_else(|| syntax(1, "missing `k=.. n=..` header"))?;
    let (mut k, mut n) = (None, None);
    for tok in header.split_whitespace() {
        let (key, value) = tok
            .split_once('=')
            .ok_or_else(|| syntax(*hline, format!("expected key=value, got {tok:?}")))?;
        match key {
            "k" => k = Some(count(*hline, value)?),
            "n" => n = Some(count(*hline, value)?),
            _ => return Err(syntax(*hline, format!("unknown header field {key:?}"))),
        }
    }
    let (k, n) = match (k, n) {
        (Some(k), Some(n)) => (k, n),
        _ => return Err(syntax(*hline, "header needs both k and n")),
    };
    if n == 0 || k == 0 || k > n {
        return Err(FormatError::Threshold { line: *hline, k, n });
    }

    let (mut p, mut r, mut c) = (Vec::new(), Vec::new(), Vec::new());
    let mut width = None;
    let mut last_line = *hline;
    for (line, rec) in it {
        last_line = *line;
        let toks: Vec<&str> = rec.split_whitespace().collect();
        let mut values = Vec::with_capacity(3);
        for (pos, tok) in toks.iter().enumerate() {
            let (name, value) = match tok.split_once('=') {
                Some((name, value)) => {
                    let expected = ['p', 'r', 'c'].get(pos).copied();
                    let name = name.chars().next().filter(|_| name.len() == 1);
                    match (name, expected) {
                        (Some(a), Some(b)) if a == b => (a, value),
                        _ => {
                            return Err(syntax(
                                *line,
                                format!("field {tok:?} out of place; records are `p r [c]`"),
                            ))
                        }
                    }
                }
                None => (*['p', 'r', 'c'].get(pos).unwrap_or(&'?'), *tok),
            };
            let v = rational(*line, value)?;
            check_field(*line, name, &v, value)?;
            values.push(v);
        }
        if !(2..=3).contains(&values.len()) {
            return Err(syntax(
                *line,
                format!("expected `p r [c]`, found {} fields", values.len()),
            ));
        }
        if *width.get_or_insert(values.len()) != values.len() {
            return Err(syntax(
                *line,
                "costs must be given for every test or for none",
            ));
        }
        if p.len() == n {
            return Err(syntax(*line, format!("more than n={n} test records")));
        }
        let mut values = values.into_iter();
        p.push(values.next().expect("p"));
        r.push(values.next().expect("r"));
        if let Some(cost) = values.next() {
            c.push(cost);
        }
    }
    if p.len() != n {
        return Err(syntax(
            last_line,
            format!("expected n={n} test records, found {}", p.len()),
        ));
    }
    let instance = Instance::new(k, p, r)?;
    Ok(InstanceFile {
        instance,
        costs: (width == Some(3)).then_some(c),
    })
}

pub fn write_instance(file: &InstanceFile) -> String {
    let inst = &file.instance;
    let mut out = format!("{INSTANCE_HEADER}\nk={} n={}\n", inst.k(), inst.n());
    out.push_str(if file.costs.is_some() {
        "# p r c\n"
    } else {
        "# p r\n"
    });
    for i in 0..inst.n() {
        out.push_str(&format!("{} {}", inst.p()[i], inst.r()[i]));
        if let Some(c) = &file.costs {
            out.push_str(&format!(" {}", c[i]));
        }
        out.push('\n');
    }
    out
}

fn ids(line: usize, text: &str) -> Result<Vec<usize>, FormatError> {
    text.split_whitespace()
        .map(|t| match count(line, t)? {
            0 => Err(syntax(line, "processor ids start at 1")),
            v => Ok(v - 1),
        })
        .collect()
}

fn write_ids(ids: &[usize]) -> String {
    ids.iter()
        .map(|i| (i + 1).to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

fn parse_tree(
    line: usize,
    toks: &mut std::slice::Iter<'_, &str>,
) -> Result<DecisionTree, FormatError> {
    match toks.next() {
        None => Err(syntax(line, "truncated tree")),
        Some(&".") => Ok(DecisionTree::Leaf),
        Some(t) => {
            let test = match count(line, t)? {
                0 => return Err(syntax(line, "processor ids start at 1")),
                v => v - 1,
            };
            let fail = Box::new(parse_tree(line, toks)?);
            let pass = Box::new(parse_tree(line, toks)?);
            Ok(DecisionTree::Test { test, fail, pass })
        }
    }
}

fn write_tree(tree: &DecisionTree, out: &mut Vec<String>) {
    match tree {
        DecisionTree::Leaf => out.push(".".into()),
        DecisionTree::Test { test, fail, pass } => {
            out.push((test + 1).to_string());
            write_tree(fail, out);
            write_tree(pass, out);
        }
    }
}

/// `<flow> | rest` split.
fn flow_and_body(line: usize, rest: &str) -> Result<(Q, String), FormatError> {
    let (flow, body) = rest
        .split_once('|')
        .ok_or_else(|| syntax(line, "expected `<flow> | ...`"))?;
    let flow = rational(line, flow.trim())?;
    if flow.is_negative() {
        return Err(syntax(line, "flow must be nonnegative"));
    }
    Ok((flow, body.to_string()))
}

pub fn parse_routing(text: &str) -> Result<Routing, FormatError> {
    let recs = records(text, false);
    let mut it = recs.iter().peekable();
    if let Some((line, r)) = it.peek() {
        if r.starts_with("kofn-routing") {
            if r.split_whitespace().collect::<Vec<_>>()
                != ROUTING_HEADER.split(' ').collect::<Vec<_>>()
            {
                return Err(syntax(*line, format!("unsupported header {r:?}")));
            }
            it.next();
        }
    }
    let (rline, rep) = it.next().ok_or_else(|| syntax(1, "missing `rep` line"))?;
    let rep = match rep.split_whitespace().collect::<Vec<_>>()[..] {
        ["rep", kind] => kind.to_string(),
        _ => return Err(syntax(*rline, "expected `rep mega|compressed|perm|tree`")),
    };

    let mut phases = Vec::new();
    let mut perms = Vec::new();
    let mut trees = Vec::new();
    let (mut order, mut groups, mut merges, mut fin) = (None, None, Vec::new(), None);
    let mut stated: Option<(usize, Q)> = None;
    for (line, rec) in it {
        let line = *line;
        let (key, rest) = rec
            .split_once(char::is_whitespace)
            .unwrap_or((rec.as_str(), ""));
        let rest = rest.trim();
        match (rep.as_str(), key) {
            (_, "throughput") => stated = Some((line, rational(line, rest)?)),
            ("mega", "phase") => {
                let (flow, body) = flow_and_body(line, rest)?;
                let classes = body
                    .split('|')
                    .map(|c| ids(line, c))
                    .collect::<Result<Vec<_>, _>>()?;
                phases.push(MegaPhase { classes, flow });
            }
            ("perm", "perm") => {
                let (flow, body) = flow_and_body(line, rest)?;
                perms.push((ids(line, &body)?, flow));
            }
            ("tree", "tree") => {
                let (flow, body) = flow_and_body(line, rest)?;
                let toks: Vec<&str> = body.split_whitespace().collect();
                let mut iter = toks.iter();
                let tree = parse_tree(line, &mut iter)?;
                if iter.next().is_some() {
                    return Err(syntax(line, "trailing tokens after tree"));
                }
                trees.push((tree, flow));
            }
            ("compressed", "order") => order = Some(ids(line, rest)?),
            ("compressed", "groups") => {
                groups = Some(
                    rest.split_whitespace()
                        .map(|t| count(line, t))
                        .collect::<Result<Vec<_>, _>>()?,
                )
            }
            ("compressed", "merge") => match rest.split_whitespace().collect::<Vec<_>>()[..] {
                [pos, flow] => {
                    let boundary = count(line, pos)?
                        .checked_sub(1)
                        .ok_or_else(|| syntax(line, "positions start at 1"))?;
                    let flow_before = rational(line, flow)?;
                    if flow_before.is_negative() {
                        return Err(syntax(line, "flow must be nonnegative"));
                    }
                    merges.push(MergeEvent {
                        boundary,
                        flow_before,
                    });
                }
                _ => return Err(syntax(line, "expected `merge <position> <flow>`")),
            },
            ("compressed", "final") => {
                let f = rational(line, rest)?;
                if f.is_negative() {
                    return Err(syntax(line, "flow must be nonnegative"));
                }
                fin = Some(f);
            }
            _ => {
                return Err(syntax(
                    line,
                    format!("unexpected `{key}` line in a {rep} routing"),
                ))
            }
        }
    }
    let routing = match rep.as_str() {
        "mega" => Routing::Mega(MegaRouting { phases }),
        "perm" => Routing::Permutation(PermutationRouting { entries: perms }),
        "tree" => Routing::Tree(TreeRouting { entries: trees }),
        "compressed" => {
            let missing = |what: &str| syntax(*rline, format!("compressed routing lacks `{what}`"));
            let c = CompressedRouting {
                order: order.ok_or_else(|| missing("order"))?,
                groups: groups.ok_or_else(|| missing("groups"))?,
                merges,
                final_flow: fin.ok_or_else(|| missing("final"))?,
            };
            c.replay()?;
            Routing::Compressed(c)
        }
        other => return Err(syntax(*rline, format!("unknown representation {other:?}"))),
    };
    if let Some((line, value)) = stated {
        if value != routing.throughput() {
            return Err(syntax(
                line,
                format!(
                    "stated throughput {value} but flows sum to {}",
                    routing.throughput()
                ),
            ));
        }
    }
    Ok(routing)
}

pub fn write_routing(routing: &Routing) -> String {
    let mut out = format!("{ROUTING_HEADER}\n");
    match routing {
        Routing::Mega(m) => {
            out.push_str("rep mega\n");
            for ph in &m.phases {
                let classes: Vec<String> = ph.classes.iter().map(|c| write_ids(c)).collect();
                out.push_str(&format!("phase {} | {}\n", ph.flow, classes.join(" | ")));
            }
        }
        Routing::Compressed(c) => {
            out.push_str("rep compressed\n");
            out.push_str(&format!("order {}\n", write_ids(&c.order)));
            let groups: Vec<String> = c.groups.iter().map(ToString::to_string).collect();
            out.push_str(&format!("groups {}\n", groups.join(" ")));
            for m in &c.merges {
                out.push_str(&format!("merge {} {}\n", m.boundary + 1, m.flow_before));
            }
            out.push_str(&format!("final {}\n", c.final_flow));
        }
        Routing::Permutation(p) => {
            out.push_str("rep perm\n");
            for (perm, flow) in &p.entries {
                out.push_str(&format!("perm {} | {}\n", flow, write_ids(perm)));
            }
        }
        Routing::Tree(t) => {
            out.push_str("rep tree\n");
            for (tree, flow) in &t.entries {
                let mut toks = Vec::new();
                write_tree(tree, &mut toks);
                out.push_str(&format!("tree {} | {}\n", flow, toks.join(" ")));
            }
        }
    }
    let f = routing.throughput();
    out.push_str(&format!(
        "throughput {}\n",
        if f.is_zero() { Q::zero() } else { f }
    ));
    out
}
