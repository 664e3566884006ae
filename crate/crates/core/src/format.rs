//! Line-oriented text encoding for games and decision processes.
//!
//! Both document kinds are UTF-8, one directive per line, tokens separated
//! by whitespace; blank lines and lines starting with `#` are skipped.
//! Labels, action names, and node ids are single tokens (no whitespace).
//!
//! Game documents:
//!
//! ```text
//! players <n>
//! node <id> decision <player> infoset <label> actions <a1> ... children <c1> ...
//! node <id> chance probs <p1> ... children <c1> ...
//! node <id> terminal payoffs <u1> ... <un>
//! ```
//!
//! Decision-process documents:
//!
//! ```text
//! tfsdp
//! node <id> decision <label> actions <a1> ... children <c1> ...
//! node <id> observation <label> children <c1> ...
//! node <id> terminal <label>
//! ```
//!
//! The first node line is the root. Ids are unique, forward references are
//! fine, and reals use plain decimal notation. Serializers write ids
//! `n0, n1, …` in tree order and print floats in Rust's shortest
//! round-trip form, so `parse(serialize(x))` reproduces `x` exactly.

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::efg::{Efg, EfgError, EfgNode};
use crate::tfsdp::{Tfsdp, TfsdpBuilder, TfsdpError};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error(transparent)]
    Game(#[from] EfgError),
    #[error(transparent)]
    Tree(#[from] TfsdpError),
}

/// Either kind of document, distinguished by the header line.
#[derive(Debug, Clone)]
pub enum Document {
    Game(Efg),
    Tree(Tfsdp),
}

fn syntax(line: usize, col: usize, msg: impl Into<String>) -> FormatError {
    FormatError::Syntax {
        line,
        col,
        msg: msg.into(),
    }
}

/// Tokens of a line, each with its 1-based character column.
fn tokenize(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((line[..s].chars().count() + 1, &line[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((line[..s].chars().count() + 1, &line[s..]));
    }
    out
}

struct Cursor<'a> {
    line: usize,
    toks: Vec<(usize, &'a str)>,
    i: usize,
}

impl<'a> Cursor<'a> {
    fn new(line: usize, toks: Vec<(usize, &'a str)>) -> Self {
        Self { line, toks, i: 0 }
    }

    fn end_col(&self) -> usize {
        self.toks
            .last()
            .map(|(c, t)| c + t.chars().count())
            .unwrap_or(1)
    }

    fn next(&mut self, what: &str) -> Result<(usize, &'a str), FormatError> {
        match self.toks.get(self.i) {
            Some(&(col, tok)) => {
                self.i += 1;
                Ok((col, tok))
            }
            None => Err(syntax(
                self.line,
                self.end_col(),
                format!("expected {what}"),
            )),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), FormatError> {
        let (col, tok) = self.next(&format!("keyword `{kw}`"))?;
        if tok != kw {
            return Err(syntax(
                self.line,
                col,
                format!("expected keyword `{kw}`, found {tok:?}"),
            ));
        }
        Ok(())
    }

    /// Consumes tokens until one of `stops` or the end of the line.
    fn list_until(&mut self, stops: &[&str]) -> Vec<(usize, &'a str)> {
        let mut out = Vec::new();
        while let Some(&(col, tok)) = self.toks.get(self.i) {
            if stops.contains(&tok) {
                break;
            }
            self.i += 1;
            out.push((col, tok));
        }
        out
    }

    fn finish(&self) -> Result<(), FormatError> {
        if let Some(&(col, tok)) = self.toks.get(self.i) {
            return Err(syntax(
                self.line,
                col,
                format!("unexpected trailing token {tok:?}"),
            ));
        }
        Ok(())
    }
}

fn parse_real(line: usize, col: usize, tok: &str) -> Result<f64, FormatError> {
    tok.parse::<f64>()
        .map_err(|_| syntax(line, col, format!("expected a real number, found {tok:?}")))
}

fn parse_uint(line: usize, col: usize, tok: &str) -> Result<usize, FormatError> {
    tok.parse::<usize>()
        .map_err(|_| syntax(line, col, format!("expected an integer, found {tok:?}")))
}

/// Directive lines of a document, with the header validated.
fn directive_lines<'a>(
    text: &'a str,
    header: &str,
) -> Result<(Cursor<'a>, Vec<Cursor<'a>>), FormatError> {
    let mut header_cursor = None;
    let mut rest = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let toks = tokenize(raw);
        match toks.first() {
            None => continue,
            Some(&(_, t)) if t.starts_with('#') => continue,
            Some(_) => {}
        }
        if header_cursor.is_none() {
            let (col, tok) = (toks[0].0, toks[0].1);
            if tok != header {
                return Err(syntax(
                    line,
                    col,
                    format!("expected header `{header}`, found {tok:?}"),
                ));
            }
            header_cursor = Some(Cursor::new(line, toks));
        } else {
            rest.push(Cursor::new(line, toks));
        }
    }
    match header_cursor {
        Some(h) => Ok((h, rest)),
        None => Err(syntax(1, 1, format!("empty document: missing `{header}` header"))),
    }
}

struct RawChildren<'a> {
    line: usize,
    refs: Vec<(usize, &'a str)>,
}

fn resolve_children(
    raw: &RawChildren,
    ids: &HashMap<&str, usize>,
) -> Result<Vec<usize>, FormatError> {
    raw.refs
        .iter()
        .map(|&(col, tok)| {
            ids.get(tok).copied().ok_or_else(|| {
                syntax(raw.line, col, format!("reference to undefined node {tok:?}"))
            })
        })
        .collect()
}

/// Parses a `players …` game document.
pub fn parse_efg(text: &str) -> Result<Efg, FormatError> {
    let (mut header, lines) = directive_lines(text, "players")?;
    header.keyword("players")?;
    let (col, tok) = header.next("player count")?;
    let n_players = parse_uint(header.line, col, tok)?;
    header.finish()?;

    enum Raw<'a> {
        Decision {
            player: usize,
            infoset: String,
            actions: Vec<String>,
            children: RawChildren<'a>,
        },
        Chance {
            probs: Vec<f64>,
            children: RawChildren<'a>,
        },
        Terminal {
            payoffs: Vec<f64>,
        },
    }

    let mut ids: HashMap<&str, usize> = HashMap::new();
    let mut raws: Vec<Raw> = Vec::new();
    for mut c in lines {
        c.keyword("node")?;
        let (idcol, id) = c.next("node id")?;
        if ids.insert(id, raws.len()).is_some() {
            return Err(syntax(c.line, idcol, format!("duplicate node id {id:?}")));
        }
        let (kcol, kind) = c.next("node kind")?;
        let raw = match kind {
            "decision" => {
                let (pcol, ptok) = c.next("player index")?;
                let player = parse_uint(c.line, pcol, ptok)?;
                c.keyword("infoset")?;
                let (_, label) = c.next("infoset label")?;
                c.keyword("actions")?;
                let actions: Vec<String> = c
                    .list_until(&["children"])
                    .into_iter()
                    .map(|(_, t)| t.to_string())
                    .collect();
                c.keyword("children")?;
                let refs = c.list_until(&[]);
                Raw::Decision {
                    player,
                    infoset: label.to_string(),
                    actions,
                    children: RawChildren { line: c.line, refs },
                }
            }
            "chance" => {
                c.keyword("probs")?;
                let probs = c
                    .list_until(&["children"])
                    .into_iter()
                    .map(|(col, t)| parse_real(c.line, col, t))
                    .collect::<Result<Vec<_>, _>>()?;
                c.keyword("children")?;
                let refs = c.list_until(&[]);
                Raw::Chance {
                    probs,
                    children: RawChildren { line: c.line, refs },
                }
            }
            "terminal" => {
                c.keyword("payoffs")?;
                let payoffs = c
                    .list_until(&[])
                    .into_iter()
                    .map(|(col, t)| parse_real(c.line, col, t))
                    .collect::<Result<Vec<_>, _>>()?;
                Raw::Terminal { payoffs }
            }
            other => {
                return Err(syntax(
                    c.line,
                    kcol,
                    format!("unknown node kind {other:?} (expected decision, chance, or terminal)"),
                ))
            }
        };
        c.finish()?;
        raws.push(raw);
    }

    let nodes = raws
        .iter()
        .map(|raw| {
            Ok(match raw {
                Raw::Decision {
                    player,
                    infoset,
                    actions,
                    children,
                } => EfgNode::Decision {
                    player: *player,
                    infoset: infoset.clone(),
                    actions: actions.clone(),
                    children: resolve_children(children, &ids)?,
                },
                Raw::Chance { probs, children } => EfgNode::Chance {
                    probs: probs.clone(),
                    children: resolve_children(children, &ids)?,
                },
                Raw::Terminal { payoffs } => EfgNode::Terminal {
                    payoffs: payoffs.clone(),
                },
            })
        })
        .collect::<Result<Vec<_>, FormatError>>()?;
    Ok(Efg::new(n_players, nodes)?)
}

/// Parses a `tfsdp` decision-process document.
pub fn parse_tfsdp(text: &str) -> Result<Tfsdp, FormatError> {
    let (mut header, lines) = directive_lines(text, "tfsdp")?;
    header.keyword("tfsdp")?;
    header.finish()?;

    enum Kind {
        Decision { actions: Vec<String> },
        Observation,
    }
    struct Raw<'a> {
        line: usize,
        label: String,
        kind: Kind,
        children: RawChildren<'a>,
    }

    let mut ids: HashMap<&str, usize> = HashMap::new();
    let mut raws: Vec<Raw> = Vec::new();
    for mut c in lines {
        c.keyword("node")?;
        let (idcol, id) = c.next("node id")?;
        if ids.insert(id, raws.len()).is_some() {
            return Err(syntax(c.line, idcol, format!("duplicate node id {id:?}")));
        }
        let (kcol, kind) = c.next("node kind")?;
        let raw = match kind {
            "decision" => {
                let (_, label) = c.next("label")?;
                c.keyword("actions")?;
                let actions: Vec<String> = c
                    .list_until(&["children"])
                    .into_iter()
                    .map(|(_, t)| t.to_string())
                    .collect();
                c.keyword("children")?;
                let refs = c.list_until(&[]);
                if actions.len() != refs.len() {
                    return Err(syntax(
                        c.line,
                        kcol,
                        format!(
                            "decision has {} actions but {} children",
                            actions.len(),
                            refs.len()
                        ),
                    ));
                }
                Raw {
                    line: c.line,
                    label: label.to_string(),
                    kind: Kind::Decision { actions },
                    children: RawChildren { line: c.line, refs },
                }
            }
            "observation" => {
                let (_, label) = c.next("label")?;
                c.keyword("children")?;
                let refs = c.list_until(&[]);
                Raw {
                    line: c.line,
                    label: label.to_string(),
                    kind: Kind::Observation,
                    children: RawChildren { line: c.line, refs },
                }
            }
            "terminal" => {
                let (_, label) = c.next("label")?;
                Raw {
                    line: c.line,
                    label: label.to_string(),
                    kind: Kind::Observation,
                    children: RawChildren {
                        line: c.line,
                        refs: Vec::new(),
                    },
                }
            }
            other => {
                return Err(syntax(
                    c.line,
                    kcol,
                    format!(
                        "unknown node kind {other:?} (expected decision, observation, or terminal)"
                    ),
                ))
            }
        };
        c.finish()?;
        raws.push(raw);
    }
    if raws.is_empty() {
        return Err(syntax(1, 1, "document has no nodes"));
    }

    let children: Vec<Vec<usize>> = raws
        .iter()
        .map(|r| resolve_children(&r.children, &ids))
        .collect::<Result<_, _>>()?;

    if matches!(raws[0].kind, Kind::Decision { .. }) {
        return Err(syntax(
            raws[0].line,
            1,
            "the root must be an observation point",
        ));
    }

    // Recursive build from the root, alternating kinds.
    let mut builder = TfsdpBuilder::new();
    let mut used = vec![false; raws.len()];
    used[0] = true;
    let mut stack: Vec<(usize, usize)> = vec![(0, builder.root())];
    // Children are appended in order when each frame is expanded, so a
    // depth-first stack keeps the builder's ids in tree order.
    while let Some((raw_idx, obs_point)) = stack.pop() {
        let mut pending = Vec::new();
        for &child in &children[raw_idx] {
            if std::mem::replace(&mut used[child], true) {
                return Err(syntax(
                    raws[child].line,
                    1,
                    "node is referenced more than once",
                ));
            }
            let Kind::Decision { actions } = &raws[child].kind else {
                return Err(syntax(
                    raws[child].line,
                    1,
                    "children of an observation point must be decision points",
                ));
            };
            let dec = builder
                .add_decision(obs_point, raws[child].label.clone())
                .expect("parent is an observation point");
            for (action, &grand) in actions.iter().zip(&children[child]) {
                if matches!(raws[grand].kind, Kind::Decision { .. }) {
                    return Err(syntax(
                        raws[grand].line,
                        1,
                        "children of a decision point must be observation points",
                    ));
                }
                if std::mem::replace(&mut used[grand], true) {
                    return Err(syntax(
                        raws[grand].line,
                        1,
                        "node is referenced more than once",
                    ));
                }
                let seq = builder
                    .add_action_labeled(dec, action.clone(), raws[grand].label.clone())
                    .expect("parent is a decision point");
                pending.push((grand, seq));
            }
        }
        // Reverse so the leftmost child is expanded first.
        stack.extend(pending.into_iter().rev());
    }
    if let Some(orphan) = used.iter().position(|&u| !u) {
        return Err(syntax(
            raws[orphan].line,
            1,
            "node is unreachable from the root",
        ));
    }
    Ok(builder.finish()?)
}

/// Parses either document kind, dispatching on the header token.
pub fn parse_document(text: &str) -> Result<Document, FormatError> {
    let first = text
        .lines()
        .map(tokenize)
        .find(|t| matches!(t.first(), Some(&(_, tok)) if !tok.starts_with('#')))
        .and_then(|t| t.first().map(|&(_, tok)| tok.to_string()));
    match first.as_deref() {
        Some("players") => Ok(Document::Game(parse_efg(text)?)),
        Some("tfsdp") => Ok(Document::Tree(parse_tfsdp(text)?)),
        Some(other) => Err(syntax(
            1,
            1,
            format!("unknown document header {other:?} (expected `players` or `tfsdp`)"),
        )),
        None => Err(syntax(1, 1, "empty document")),
    }
}

fn push_token(out: &mut String, tok: &str) {
    debug_assert!(
        !tok.is_empty() && !tok.chars().any(char::is_whitespace),
        "labels and actions must be single nonempty tokens: {tok:?}"
    );
    out.push(' ');
    out.push_str(tok);
}

/// Renders a game in the `players …` format with ids `n0, n1, …` in node
/// order.
pub fn serialize_efg(efg: &Efg) -> String {
    let mut out = format!("players {}\n", efg.n_players());
    for (id, node) in efg.nodes().iter().enumerate() {
        write!(out, "node n{id}").unwrap();
        match node {
            EfgNode::Decision {
                player,
                infoset,
                actions,
                children,
            } => {
                write!(out, " decision {player} infoset").unwrap();
                push_token(&mut out, infoset);
                out.push_str(" actions");
                for a in actions {
                    push_token(&mut out, a);
                }
                out.push_str(" children");
                for c in children {
                    write!(out, " n{c}").unwrap();
                }
            }
            EfgNode::Chance { probs, children } => {
                out.push_str(" chance probs");
                for p in probs {
                    write!(out, " {p}").unwrap();
                }
                out.push_str(" children");
                for c in children {
                    write!(out, " n{c}").unwrap();
                }
            }
            EfgNode::Terminal { payoffs } => {
                out.push_str(" terminal payoffs");
                for u in payoffs {
                    write!(out, " {u}").unwrap();
                }
            }
        }
        out.push('\n');
    }
    out
}

/// Renders a decision process in the `tfsdp` format, nodes in depth-first
/// order so the root comes first.
pub fn serialize_tfsdp(t: &Tfsdp) -> String {
    // Emit ids in traversal order, so parsing and reserializing a document
    // reproduces it byte for byte regardless of the tree's internal ids.
    let mut id = vec![0usize; t.num_points()];
    for (k, &p) in t.pre_order().iter().enumerate() {
        id[p] = k;
    }
    let mut out = "tfsdp\n".to_string();
    for &p in t.pre_order() {
        write!(out, "node n{}", id[p]).unwrap();
        if t.is_decision(p) {
            out.push_str(" decision");
            push_token(&mut out, t.label(p));
            out.push_str(" actions");
            for a in t.actions(p) {
                push_token(&mut out, a);
            }
            out.push_str(" children");
            for &c in t.children(p) {
                write!(out, " n{}", id[c]).unwrap();
            }
        } else if t.is_terminal(p) {
            out.push_str(" terminal");
            push_token(&mut out, t.label(p));
        } else {
            out.push_str(" observation");
            push_token(&mut out, t.label(p));
            out.push_str(" children");
            for &c in t.children(p) {
                write!(out, " n{}", id[c]).unwrap();
            }
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtins;
    use crate::efg::Game;

    #[test]
    fn tfsdp_round_trip() {
        for t in [
            builtins::fig1(),
            builtins::fig2_normalized(),
            builtins::simplex(3).unwrap(),
            TfsdpBuilder::new().finish().unwrap(),
            builtins::random_tfsdp(4, 3, 2, 17).unwrap(),
        ] {
            let text = serialize_tfsdp(&t);
            let back = parse_tfsdp(&text).unwrap();
            assert!(back.structurally_eq(&t), "round trip changed:\n{text}");
            assert_eq!(serialize_tfsdp(&back), text);
            for (&a, &b) in t.pre_order().iter().zip(back.pre_order()) {
                assert_eq!(t.label(a), back.label(b));
            }
        }
    }

    #[test]
    fn efg_round_trip() {
        for efg in [builtins::kuhn(), builtins::matching_pennies()] {
            let text = serialize_efg(&efg);
            let back = parse_efg(&text).unwrap();
            assert_eq!(serialize_efg(&back), text);
            // The reparse supports the same extractions.
            let a = Game::new(efg).unwrap();
            let b = Game::new(back).unwrap();
            for i in 0..a.n_players() {
                assert!(a.tfsdp(i).structurally_eq(b.tfsdp(i)));
            }
        }
    }

    #[test]
    fn float_payoffs_survive_exactly() {
        let payoff = 0.1 + 0.2; // not representable as a short decimal
        let nodes = vec![
            EfgNode::Chance {
                probs: vec![1.0 / 3.0, 2.0 / 3.0],
                children: vec![1, 2],
            },
            EfgNode::Terminal {
                payoffs: vec![payoff],
            },
            EfgNode::Terminal {
                payoffs: vec![1e-17],
            },
        ];
        let efg = Efg::new(1, nodes).unwrap();
        let text = serialize_efg(&efg);
        let back = parse_efg(&text).unwrap();
        match (back.node(1), back.node(2)) {
            (EfgNode::Terminal { payoffs: a }, EfgNode::Terminal { payoffs: b }) => {
                assert_eq!(a[0], payoff);
                assert_eq!(b[0], 1e-17);
            }
            _ => panic!("node order not preserved"),
        }
        match back.node(0) {
            EfgNode::Chance { probs, .. } => assert_eq!(probs[0], 1.0 / 3.0),
            _ => panic!(),
        }
    }

    #[test]
    fn matching_pennies_document_parses() {
        let text = "\
players 2
node a decision 0 infoset pick actions heads tails children b c
node b decision 1 infoset pick actions heads tails children t0 t1
node c decision 1 infoset pick actions heads tails children t2 t3
node t0 terminal payoffs 1 0
node t1 terminal payoffs 0 1
node t2 terminal payoffs 0 1
node t3 terminal payoffs 1 0
";
        let efg = parse_efg(text).unwrap();
        assert_eq!(efg.terminal_nodes().count(), 4);
        let game = Game::new(efg).unwrap();
        assert_eq!(game.tfsdp(0).num_terminals(), 2);
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let err = parse_efg("players 2\nnode a wobble payoffs 1 1\n").unwrap_err();
        match err {
            FormatError::Syntax { line, col, msg } => {
                assert_eq!(line, 2);
                assert_eq!(col, 8);
                assert!(msg.contains("wobble"));
            }
            other => panic!("unexpected error {other:?}"),
        }
        let err = parse_efg("players 2\nnode a chance probs 0.5 0.5 children b c\n").unwrap_err();
        match err {
            FormatError::Syntax { line: 2, msg, .. } => assert!(msg.contains("undefined")),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn semantic_errors_surface_from_validation() {
        let text = "\
players 1
node r chance probs 0.6 0.5 children x y
node x terminal payoffs 0
node y terminal payoffs 1
";
        assert!(matches!(
            parse_efg(text),
            Err(FormatError::Game(EfgError::ChanceProbs { .. }))
        ));
        let text = "\
players 1
node r decision 0 infoset a actions x y children s t
node s terminal payoffs 2
node t terminal payoffs 0
";
        assert!(matches!(
            parse_efg(text),
            Err(FormatError::Game(EfgError::PayoffRange { .. }))
        ));
    }

    #[test]
    fn tfsdp_kind_mismatches_are_rejected() {
        let text = "\
tfsdp
node r observation root children d
node d decision top actions a b children e f
node e terminal ta
node f decision nested actions c children g
node g terminal tb
";
        let err = parse_tfsdp(text).unwrap_err();
        match err {
            FormatError::Syntax { line, msg, .. } => {
                assert_eq!(line, 5);
                assert!(msg.contains("must be observation points"));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn shared_and_orphaned_nodes_are_rejected() {
        let shared = "\
tfsdp
node r observation root children d
node d decision top actions a b children e e
node e terminal t
";
        assert!(matches!(
            parse_tfsdp(shared),
            Err(FormatError::Syntax { line: 4, .. })
        ));
        let orphan = "\
tfsdp
node r terminal root
node d decision lost actions a children e
node e terminal t
";
        assert!(matches!(
            parse_tfsdp(orphan),
            Err(FormatError::Syntax { line: 3, .. })
        ));
    }

    #[test]
    fn document_dispatch() {
        assert!(matches!(
            parse_document(&serialize_tfsdp(&builtins::fig1())).unwrap(),
            Document::Tree(_)
        ));
        assert!(matches!(
            parse_document(&serialize_efg(&builtins::kuhn())).unwrap(),
            Document::Game(_)
        ));
        assert!(parse_document("widgets 3\n").is_err());
        assert!(parse_document("  \n# only a comment\n").is_err());
    }
}
