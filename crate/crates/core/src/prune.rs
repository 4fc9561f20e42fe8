//! Reduction of a raw AFG to the subgraph relevant to one target API.
//!
//! Kept nodes are those on a directed path to or from an API callsite node
//! (edge labels are ignored for reachability, direction is not mixed within
//! a path). Signature-sourced CD edges, self-loops, duplicate-line nodes,
//! and leftover isolated nodes are then removed.

use std::collections::BTreeSet;

use crate::afg::{Afg, AfgEdge, AfgNode, EdgeLabel};
use crate::error::PruneError;
use crate::frontend::lexer::{lex, TokKind};
use crate::frontend::{scan_callsites, split_api_spec};

/// Edge-set transformations tried in ablations; both default off.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PruneOptions {
    /// Flip every edge's direction before pruning.
    pub reverse_edges: bool,
    /// Add a reversed duplicate of every edge before pruning.
    pub duplicate_edges: bool,
}

/// Lines whose node text contains a callsite of the target API's method.
///
/// Works from serialized node text alone, so pruning applies equally to
/// freshly built and re-parsed graphs.
pub fn api_callsite_lines(afg: &Afg, api: &str) -> BTreeSet<u32> {
    let (_, method) = split_api_spec(api);
    let mut lines = BTreeSet::new();
    if method.is_empty() {
        return lines;
    }
    for node in &afg.nodes {
        let toks = lex(&node.text);
        if scan_callsites(&toks).iter().any(|c| c.method == method) {
            lines.insert(node.line);
        }
    }
    lines
}

/// Forward-and-backward directed closure of `seeds` over all edge labels.
pub fn reachability_closure(n: usize, edges: &[AfgEdge], seeds: &BTreeSet<usize>) -> BTreeSet<usize> {
    let mut out_adj = vec![Vec::new(); n];
    let mut in_adj = vec![Vec::new(); n];
    for e in edges {
        out_adj[e.src].push(e.dst);
        in_adj[e.dst].push(e.src);
    }
    let bfs = |adj: &[Vec<usize>]| {
        let mut seen = vec![false; n];
        let mut stack: Vec<usize> = seeds.iter().copied().collect();
        for &s in seeds {
            seen[s] = true;
        }
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen
    };
    let fwd = bfs(&out_adj);
    let bwd = bfs(&in_adj);
    (0..n).filter(|&i| fwd[i] || bwd[i]).collect()
}

/// Whether a node's text plausibly is the method-signature line.
///
/// Pruning removes CD edges sourced at the signature; after the signature
/// node itself is gone, nothing else may be mistaken for it, so this check
/// is applied to the minimum-line node only and errs toward `false`.
fn looks_like_signature(text: &str) -> bool {
    const CONTROL: &[&str] = &[
        "if", "for", "while", "do", "switch", "try", "catch", "finally", "else", "return",
        "throw", "new", "case", "default", "break", "continue", "synchronized",
    ];
    let toks = lex(text);
    let first = match toks.first() {
        Some(t) if t.kind == TokKind::Ident => t,
        _ => return false,
    };
    if CONTROL.contains(&first.text.as_str()) {
        return false;
    }
    if text.trim_end().ends_with(';') {
        return false;
    }
    let open = match toks.iter().position(|t| t.is_punct("(")) {
        Some(i) => i,
        None => return false,
    };
    !toks[..open]
        .iter()
        .any(|t| t.is_punct(".") || t.is_punct("="))
}

/// Prune `afg` down to the subgraph relevant to `api`.
///
/// Returns [`PruneError::NoCallsite`] when the target API does not occur.
/// The result has no self-loops, no signature-sourced CD edges, at most one
/// node per line, and every node connected to an API node (API nodes
/// themselves are kept even if isolated).
pub fn prune(afg: &Afg, api: &str, opts: PruneOptions) -> Result<Afg, PruneError> {
    let api_lines = api_callsite_lines(afg, api);
    if api_lines.is_empty() {
        return Err(PruneError::NoCallsite { api: api.to_string() });
    }

    let mut edges: Vec<AfgEdge> = afg.edges.clone();
    if opts.reverse_edges {
        for e in &mut edges {
            std::mem::swap(&mut e.src, &mut e.dst);
        }
    }
    if opts.duplicate_edges {
        let reversed: Vec<AfgEdge> = edges
            .iter()
            .map(|e| AfgEdge { src: e.dst, dst: e.src, label: e.label })
            .collect();
        edges.extend(reversed);
    }

    let seeds: BTreeSet<usize> = afg
        .nodes
        .iter()
        .enumerate()
        .filter(|(_, n)| api_lines.contains(&n.line))
        .map(|(i, _)| i)
        .collect();

    // Step 2: reachability on the full edge set, before CD removal.
    let keep = reachability_closure(afg.nodes.len(), &edges, &seeds);
    let keep: BTreeSet<usize> = keep.union(&seeds).copied().collect();

    // Step 3: drop CD edges sourced at the method-signature node.
    let signature_line = afg
        .nodes
        .iter()
        .map(|n| n.line)
        .min()
        .filter(|&line| {
            afg.nodes
                .iter()
                .filter(|n| n.line == line)
                .any(|n| looks_like_signature(&n.text))
        });
    edges.retain(|e| {
        let from_signature = e.label == EdgeLabel::Cd
            && Some(afg.nodes[e.src].line) == signature_line;
        !from_signature
    });

    // Step 4: self-loops (same node, and same line once merging applies).
    edges.retain(|e| e.src != e.dst);
    edges.retain(|e| keep.contains(&e.src) && keep.contains(&e.dst));

    // Step 5: merge nodes sharing a line, rewiring edges onto one survivor.
    let mut pruned = Afg::default();
    let mut line_rep: std::collections::BTreeMap<u32, usize> = Default::default();
    let mut remap = vec![usize::MAX; afg.nodes.len()];
    for &i in &keep {
        let line = afg.nodes[i].line;
        let rep = *line_rep.entry(line).or_insert_with(|| {
            pruned.nodes.push(AfgNode {
                line,
                text: afg.nodes[i].text.clone(),
                feature: afg.nodes[i].feature.clone(),
            });
            pruned.nodes.len() - 1
        });
        remap[i] = rep;
    }
    let mut merged: BTreeSet<AfgEdge> = edges
        .iter()
        .map(|e| AfgEdge { src: remap[e.src], dst: remap[e.dst], label: e.label })
        .filter(|e| e.src != e.dst)
        .collect();
    pruned.edges = std::mem::take(&mut merged).into_iter().collect();

    // Step 6: drop nodes left isolated, unless they carry the API callsite.
    let touched: BTreeSet<usize> = pruned
        .edges
        .iter()
        .flat_map(|e| [e.src, e.dst])
        .collect();
    let keep_final: Vec<usize> = (0..pruned.nodes.len())
        .filter(|i| touched.contains(i) || api_lines.contains(&pruned.nodes[*i].line))
        .collect();
    let mut final_remap = vec![usize::MAX; pruned.nodes.len()];
    let mut nodes = Vec::with_capacity(keep_final.len());
    for (new_idx, &old_idx) in keep_final.iter().enumerate() {
        final_remap[old_idx] = new_idx;
        nodes.push(pruned.nodes[old_idx].clone());
    }
    pruned.nodes = nodes;
    pruned.edges = pruned
        .edges
        .iter()
        .map(|e| AfgEdge { src: final_remap[e.src], dst: final_remap[e.dst], label: e.label })
        .collect();
    pruned.api_nodes = pruned
        .nodes
        .iter()
        .enumerate()
        .filter(|(_, n)| api_lines.contains(&n.line))
        .map(|(i, _)| i)
        .collect();
    pruned.canonicalize();
    // Canonicalize reorders nodes; re-derive API indices from lines.
    pruned.api_nodes = pruned
        .nodes
        .iter()
        .enumerate()
        .filter(|(_, n)| api_lines.contains(&n.line))
        .map(|(i, _)| i)
        .collect();
    Ok(pruned)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::afg::build_afg;
    use crate::fixtures;
    use crate::frontend::{parse_snippet, SourceSnippet};

    fn fig3_raw() -> Afg {
        let tree = parse_snippet(&SourceSnippet::new("t", fixtures::FIG3_STATEMENT_EXECUTE))
            .unwrap();
        build_afg(&tree, Some("Statement.execute"))
    }

    #[test]
    fn fig3_prune_removes_logging_and_close_lines() {
        let pruned = prune(&fig3_raw(), "Statement.execute", PruneOptions::default()).unwrap();
        let lines: BTreeSet<u32> = pruned.nodes.iter().map(|n| n.line).collect();
        assert_eq!(lines, [1, 2, 3, 4, 5, 7, 8].into_iter().collect());
        assert_eq!(pruned.api_lines(), [8].into_iter().collect());
    }

    #[test]
    fn fig3_prune_drops_signature_cd_only() {
        let pruned = prune(&fig3_raw(), "Statement.execute", PruneOptions::default()).unwrap();
        assert!(!pruned
            .edge_lines()
            .iter()
            .any(|&(s, _, l)| s == 1 && l == EdgeLabel::Cd));
        assert!(pruned.has_edge(7, 8, EdgeLabel::Cd));
        assert!(pruned.has_edge(1, 8, EdgeLabel::Fd));
    }

    #[test]
    fn single_api_node_graph_is_unchanged() {
        let tree =
            parse_snippet(&SourceSnippet::new("t", "void f(Reader r) { r.read(); }")).unwrap();
        let mut afg = build_afg(&tree, Some("Reader.read"));
        // Restrict to just the callsite node.
        afg.nodes = afg
            .nodes
            .iter()
            .filter(|n| n.text.contains("r.read"))
            .cloned()
            .collect();
        afg.edges.clear();
        afg.api_nodes = [0].into_iter().collect();
        let pruned = prune(&afg, "Reader.read", PruneOptions::default()).unwrap();
        assert_eq!(pruned.nodes.len(), 1);
        assert!(pruned.edges.is_empty());
        assert_eq!(pruned.api_nodes, [0].into_iter().collect());
    }

    #[test]
    fn missing_callsite_errors() {
        let err = prune(&fig3_raw(), "Foo.bar", PruneOptions::default()).unwrap_err();
        assert_eq!(err, PruneError::NoCallsite { api: "Foo.bar".into() });
    }

    #[test]
    fn prune_is_idempotent_on_fixture() {
        let once = prune(&fig3_raw(), "Statement.execute", PruneOptions::default()).unwrap();
        let twice = prune(&once, "Statement.execute", PruneOptions::default()).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn prune_shrinks_monotonically() {
        let raw = fig3_raw();
        let pruned = prune(&raw, "Statement.execute", PruneOptions::default()).unwrap();
        assert!(pruned.nodes.len() <= raw.nodes.len());
        assert!(pruned.edges.len() <= raw.edges.len());
    }

    #[test]
    fn connectivity_contract_holds() {
        let raw = fig3_raw();
        let pruned = prune(&raw, "Statement.execute", PruneOptions::default()).unwrap();
        // Every kept line must be in the raw graph's closure of the API node.
        let seeds: BTreeSet<usize> = raw
            .nodes
            .iter()
            .enumerate()
            .filter(|(_, n)| n.line == 8)
            .map(|(i, _)| i)
            .collect();
        let closure = reachability_closure(raw.nodes.len(), &raw.edges, &seeds);
        let closure_lines: BTreeSet<u32> = closure.iter().map(|&i| raw.nodes[i].line).collect();
        for n in &pruned.nodes {
            assert!(closure_lines.contains(&n.line));
        }
    }

    #[test]
    fn reverse_option_flips_reachability() {
        let raw = fig3_raw();
        let opts = PruneOptions { reverse_edges: true, duplicate_edges: false };
        let pruned = prune(&raw, "Statement.execute", opts).unwrap();
        // Orientation changes which side of the API node survives, but the
        // API node itself always stays.
        assert_eq!(pruned.api_lines(), [8].into_iter().collect());
    }
}
