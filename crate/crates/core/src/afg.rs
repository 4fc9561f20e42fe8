//! API Flow Graph construction from statement trees, plus the textual
//! edge-list wire format.
//!
//! An AFG has one node per source line and three edge labels: `FD` (data
//! flow from definition to use), `CD` (control dependency from a structural
//! construct's header to its direct children), and `SE` (consecutive calls
//! on the same receiver object).

use std::collections::{BTreeMap, BTreeSet};
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::FormatError;
use crate::frontend::{find_callsites, StatementTree, CHAIN_RECEIVER};

/// Maximum stored node-text length, in characters.
pub const NODE_TEXT_LIMIT: usize = 200;

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
pub enum EdgeLabel {
    Fd,
    Cd,
    Se,
}

impl EdgeLabel {
    pub const ALL: [EdgeLabel; 3] = [EdgeLabel::Fd, EdgeLabel::Cd, EdgeLabel::Se];

    pub fn as_str(self) -> &'static str {
        match self {
            EdgeLabel::Fd => "FD",
            EdgeLabel::Cd => "CD",
            EdgeLabel::Se => "SE",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "FD" => Some(EdgeLabel::Fd),
            "CD" => Some(EdgeLabel::Cd),
            "SE" => Some(EdgeLabel::Se),
            _ => None,
        }
    }

    /// Index into per-relation weight tables: FD=0, CD=1, SE=2.
    pub fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AfgNode {
    pub line: u32,
    /// Trimmed source-line text, truncated to [`NODE_TEXT_LIMIT`] chars.
    pub text: String,
    pub feature: Option<Vec<f64>>,
}

/// Directed labeled edge; endpoints index into [`Afg::nodes`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AfgEdge {
    pub src: usize,
    pub dst: usize,
    pub label: EdgeLabel,
}

/// An edge expressed over line numbers, before node resolution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LineEdge {
    pub src: u32,
    pub dst: u32,
    pub label: EdgeLabel,
}

impl LineEdge {
    pub fn new(src: u32, dst: u32, label: EdgeLabel) -> Self {
        Self { src, dst, label }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Afg {
    /// Nodes sorted by (line, text).
    pub nodes: Vec<AfgNode>,
    /// Deduplicated edges in canonical (src line, dst line, label) order.
    pub edges: Vec<AfgEdge>,
    /// Indices of target-API callsite nodes; empty for raw graphs.
    pub api_nodes: BTreeSet<usize>,
}

impl Afg {
    pub fn node_index_of_line(&self, line: u32) -> Option<usize> {
        self.nodes.iter().position(|n| n.line == line)
    }

    /// Node whose statement starts at or nearest before `line`.
    fn owning_node(&self, line: u32) -> Option<usize> {
        self.nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.line <= line)
            .max_by_key(|(_, n)| n.line)
            .map(|(i, _)| i)
    }

    pub fn api_lines(&self) -> BTreeSet<u32> {
        self.api_nodes.iter().map(|&i| self.nodes[i].line).collect()
    }

    pub fn edge_lines(&self) -> BTreeSet<(u32, u32, EdgeLabel)> {
        self.edges
            .iter()
            .map(|e| (self.nodes[e.src].line, self.nodes[e.dst].line, e.label))
            .collect()
    }

    pub fn has_edge(&self, src_line: u32, dst_line: u32, label: EdgeLabel) -> bool {
        self.edge_lines().contains(&(src_line, dst_line, label))
    }

    /// Re-establish canonical node order, edge deduplication, and edge order.
    pub fn canonicalize(&mut self) {
        let mut order: Vec<usize> = (0..self.nodes.len()).collect();
        order.sort_by(|&a, &b| {
            (self.nodes[a].line, &self.nodes[a].text)
                .cmp(&(self.nodes[b].line, &self.nodes[b].text))
        });
        let mut remap = vec![0usize; self.nodes.len()];
        for (new_idx, &old_idx) in order.iter().enumerate() {
            remap[old_idx] = new_idx;
        }
        let mut nodes = Vec::with_capacity(self.nodes.len());
        for &old_idx in &order {
            nodes.push(self.nodes[old_idx].clone());
        }
        self.nodes = nodes;
        let mut edges: BTreeSet<AfgEdge> = self
            .edges
            .iter()
            .map(|e| AfgEdge { src: remap[e.src], dst: remap[e.dst], label: e.label })
            .collect();
        self.edges = std::mem::take(&mut edges).into_iter().collect();
        self.edges.sort_by_key(|e| {
            (self.nodes[e.src].line, self.nodes[e.dst].line, e.label)
        });
        self.api_nodes = self.api_nodes.iter().map(|&i| remap[i]).collect();
    }
}

/// FD edges: each use links from the nearest preceding definition.
///
/// Method parameters count as definitions at the signature line; uses with
/// no visible definition produce no edge.
pub fn def_use_edges(tree: &StatementTree) -> Vec<LineEdge> {
    let mut edges = BTreeSet::new();
    for (i, stmt) in tree.statements.iter().enumerate() {
        for name in &stmt.uses {
            let def = tree.statements[..i]
                .iter()
                .rev()
                .find(|s| s.defs.contains(name));
            if let Some(def) = def {
                edges.insert(LineEdge::new(def.line, stmt.line, EdgeLabel::Fd));
            }
        }
    }
    edges.into_iter().collect()
}

/// CD edges: structural statement header to each directly nested child.
pub fn control_dep_edges(tree: &StatementTree) -> Vec<LineEdge> {
    let mut edges = BTreeSet::new();
    for stmt in &tree.statements {
        if let Some(p) = stmt.parent {
            if tree.statements[p].kind.is_structural() {
                edges.insert(LineEdge::new(tree.statements[p].line, stmt.line, EdgeLabel::Cd));
            }
        }
    }
    edges.into_iter().collect()
}

/// SE edges: consecutive callsites on the same receiver, in line order.
///
/// Chained-call links with the synthetic `<chain>` receiver never anchor
/// sequence edges.
pub fn sequence_edges(tree: &StatementTree) -> Vec<LineEdge> {
    let mut groups: BTreeMap<&str, Vec<u32>> = BTreeMap::new();
    for c in &tree.callsites {
        if c.receiver != CHAIN_RECEIVER {
            groups.entry(&c.receiver).or_default().push(c.line);
        }
    }
    let mut edges = BTreeSet::new();
    for lines in groups.values_mut() {
        lines.sort_unstable();
        for pair in lines.windows(2) {
            edges.insert(LineEdge::new(pair[0], pair[1], EdgeLabel::Se));
        }
    }
    edges.into_iter().collect()
}

/// Assemble the raw AFG: one node per distinct statement line, the union of
/// FD, CD, and SE edges, and API nodes when a target spec is given.
/// Feature vectors are left unset.
pub fn build_afg(tree: &StatementTree, api: Option<&str>) -> Afg {
    let lines: BTreeSet<u32> = tree.statements.iter().map(|s| s.line).collect();
    let nodes: Vec<AfgNode> = lines
        .iter()
        .map(|&line| AfgNode {
            line,
            text: truncate_text(tree.line_text(line)),
            feature: None,
        })
        .collect();
    let index_of: BTreeMap<u32, usize> =
        nodes.iter().enumerate().map(|(i, n)| (n.line, i)).collect();

    let mut line_edges: BTreeSet<LineEdge> = BTreeSet::new();
    line_edges.extend(def_use_edges(tree));
    line_edges.extend(control_dep_edges(tree));
    line_edges.extend(sequence_edges(tree));

    let mut afg = Afg { nodes, edges: Vec::new(), api_nodes: BTreeSet::new() };
    let mut edges: Vec<AfgEdge> = line_edges
        .into_iter()
        .filter_map(|e| {
            Some(AfgEdge {
                src: *index_of.get(&e.src)?,
                dst: *index_of.get(&e.dst)?,
                label: e.label,
            })
        })
        .collect();
    edges.sort_by_key(|e| (afg.nodes[e.src].line, afg.nodes[e.dst].line, e.label));
    edges.dedup();
    afg.edges = edges;

    if let Some(api) = api {
        for site in find_callsites(tree, api) {
            if let Some(idx) = afg.owning_node(site.line) {
                afg.api_nodes.insert(idx);
            }
        }
    }
    afg
}

fn truncate_text(text: &str) -> String {
    text.trim().chars().take(NODE_TEXT_LIMIT).collect()
}

/// Serialize an AFG as one line per edge:
///
/// ```text
/// Line_<i> $$ <src text> --> Line_<j> $$ <dst text> [<LABEL>]
/// ```
///
/// Edges are ordered by (src line, dst line, label FD < CD < SE); the output
/// ends with a newline unless the graph has no edges. Nodes that touch no
/// edge have no representation in this format.
pub fn serialize_afg(afg: &Afg) -> String {
    let mut edges = afg.edges.clone();
    edges.sort_by_key(|e| (afg.nodes[e.src].line, afg.nodes[e.dst].line, e.label));
    let mut out = String::new();
    for e in &edges {
        let src = &afg.nodes[e.src];
        let dst = &afg.nodes[e.dst];
        out.push_str(&format!(
            "Line_{} $$ {} --> Line_{} $$ {} [{}]\n",
            src.line,
            src.text,
            dst.line,
            dst.text,
            e.label.as_str()
        ));
    }
    out
}

fn edge_line_regex() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"^Line_(\d+) \$\$ (.*) --> Line_(\d+) \$\$ (.*) \[(FD|CD|SE)\]$")
            .expect("static regex compiles")
    })
}

/// Inverse of [`serialize_afg`] up to edge ordering. Node identity is the
/// (line, text) pair; `api_nodes` comes back empty.
pub fn parse_afg(text: &str) -> Result<Afg, FormatError> {
    let mut afg = Afg::default();
    let mut index: BTreeMap<(u32, String), usize> = BTreeMap::new();
    let mut edges = BTreeSet::new();
    for (i, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let caps = edge_line_regex().captures(line).ok_or_else(|| FormatError {
            line_index: i,
            message: "expected `Line_<i> $$ <text> --> Line_<j> $$ <text> [FD|CD|SE]`"
                .to_string(),
        })?;
        let src_line: u32 = caps[1].parse().map_err(|_| FormatError {
            line_index: i,
            message: "source line number out of range".to_string(),
        })?;
        let dst_line: u32 = caps[3].parse().map_err(|_| FormatError {
            line_index: i,
            message: "target line number out of range".to_string(),
        })?;
        let label = EdgeLabel::parse(&caps[5]).expect("regex restricts labels");
        let src = intern_node(&mut afg, &mut index, src_line, &caps[2]);
        let dst = intern_node(&mut afg, &mut index, dst_line, &caps[4]);
        edges.insert(AfgEdge { src, dst, label });
    }
    afg.edges = edges.into_iter().collect();
    afg.canonicalize();
    Ok(afg)
}

fn intern_node(
    afg: &mut Afg,
    index: &mut BTreeMap<(u32, String), usize>,
    line: u32,
    text: &str,
) -> usize {
    let key = (line, text.to_string());
    if let Some(&i) = index.get(&key) {
        return i;
    }
    afg.nodes.push(AfgNode { line, text: text.to_string(), feature: None });
    let i = afg.nodes.len() - 1;
    index.insert(key, i);
    i
}
