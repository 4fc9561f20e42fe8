//! Parsing of Java method snippets into statement trees and callsites.

pub mod lexer;
mod parser;

pub use parser::{
    find_callsites, parse_snippet, scan_callsites, split_api_spec, ApiCallsite, RawCallsite,
    SourceSnippet, Statement, StatementKind, StatementTree, CHAIN_RECEIVER,
};

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use std::collections::BTreeSet;

    fn names(set: &[&str]) -> BTreeSet<String> {
        set.iter().map(|s| s.to_string()).collect()
    }

    fn parse(text: &str) -> StatementTree {
        parse_snippet(&SourceSnippet::new("t", text)).expect("snippet parses")
    }

    #[test]
    fn fig7_correct_use_statements() {
        let tree = parse(fixtures::FIG7_CORRECT);
        let got: Vec<(u32, StatementKind)> =
            tree.statements.iter().map(|s| (s.line, s.kind)).collect();
        assert_eq!(
            got,
            vec![
                (1, StatementKind::MethodSignature),
                (2, StatementKind::VarDecl),
                (3, StatementKind::If),
                (4, StatementKind::ExprCall),
            ]
        );
        assert_eq!(tree.statements[1].defs, names(&["markers"]));
        assert_eq!(tree.statements[2].uses, names(&["markers"]));
        assert_eq!(tree.statements[3].uses, names(&["markers", "marker"]));
        assert_eq!(tree.statements[3].parent, Some(2));
    }

    #[test]
    fn empty_body_method_is_root_only() {
        let tree = parse("void f() { }");
        assert_eq!(tree.statements.len(), 1);
        assert_eq!(tree.root().kind, StatementKind::MethodSignature);
    }

    #[test]
    fn fig3_has_nine_statements() {
        let tree = parse(fixtures::FIG3_STATEMENT_EXECUTE);
        assert_eq!(tree.statements.len(), 9);
        let lines: Vec<u32> = tree.statements.iter().map(|s| s.line).collect();
        assert_eq!(lines, vec![1, 2, 3, 4, 5, 6, 7, 8, 11]);
    }

    #[test]
    fn fig3_execute_callsite() {
        let tree = parse(fixtures::FIG3_STATEMENT_EXECUTE);
        let sites = find_callsites(&tree, "Statement.execute");
        assert_eq!(sites.len(), 1);
        assert_eq!(sites[0].line, 8);
        assert_eq!(sites[0].receiver, "statement");
        assert_eq!(sites[0].method, "execute");
    }

    #[test]
    fn fig1_readline_callsite() {
        let tree = parse(fixtures::FIG1_CORRECT);
        let sites = find_callsites(&tree, "BufferedReader.readLine");
        assert_eq!(sites.len(), 1);
        assert_eq!(sites[0].receiver, "br");
        assert_eq!(sites[0].line, 3);
    }

    #[test]
    fn unknown_method_matches_nothing() {
        let tree = parse(fixtures::FIG3_STATEMENT_EXECUTE);
        assert!(find_callsites(&tree, "Foo.noSuchMethod").is_empty());
    }

    #[test]
    fn method_name_only_spec_matches() {
        let tree = parse(fixtures::FIG3_STATEMENT_EXECUTE);
        let sites = find_callsites(&tree, "execute");
        assert_eq!(sites.len(), 1);
        assert_eq!(sites[0].api, "execute");
    }

    #[test]
    fn unbalanced_braces_error_with_position() {
        let err = parse_snippet(&SourceSnippet::new("t", "void f() {\n  if (x) {\n}"))
            .unwrap_err();
        assert!(err.message.contains("unclosed"));
        assert_eq!(err.line, 2);
    }

    #[test]
    fn stray_close_brace_errors() {
        let err =
            parse_snippet(&SourceSnippet::new("t", "void f() { }\n}")).unwrap_err();
        assert_eq!(err.line, 2);
    }

    #[test]
    fn comments_and_blank_lines_are_skipped() {
        let tree = parse("void f(int a) {\n  // comment only\n\n  int b = a; /* tail */\n}");
        assert_eq!(tree.statements.len(), 2);
        assert_eq!(tree.statements[1].line, 4);
    }

    #[test]
    fn multi_statement_line_shares_line_number() {
        let tree = parse("void f() { int a = 1; int b = a; }");
        assert_eq!(tree.statements.len(), 3);
        assert_eq!(tree.statements[1].line, 1);
        assert_eq!(tree.statements[2].line, 1);
        assert_eq!(tree.statements[2].uses, names(&["a"]));
    }

    #[test]
    fn chained_calls_each_link_is_a_callsite() {
        let tree = parse("void f(A a) {\n  a.b().c();\n}");
        assert_eq!(
            tree.callsites,
            vec![
                RawCallsite { line: 2, receiver: "a".into(), method: "b".into() },
                RawCallsite { line: 2, receiver: CHAIN_RECEIVER.into(), method: "c".into() },
            ]
        );
    }

    #[test]
    fn lambda_body_flattens_into_uses() {
        let tree = parse("void f(Executor ex, int n) {\n  ex.submit(() -> { consume(n); });\n}");
        assert_eq!(tree.statements.len(), 2);
        assert!(tree.statements[1].uses.contains("n"));
        assert!(tree.statements[1].uses.contains("ex"));
    }

    #[test]
    fn defs_and_uses_on_declaration() {
        let tree = parse("void f(int p) {\n  int x = p + q;\n  x = x + 1;\n}");
        let decl = &tree.statements[1];
        assert_eq!(decl.kind, StatementKind::VarDecl);
        assert_eq!(decl.defs, names(&["x"]));
        assert_eq!(decl.uses, names(&["p", "q"]));
        let assign = &tree.statements[2];
        assert_eq!(assign.kind, StatementKind::Assign);
        assert_eq!(assign.defs, names(&["x"]));
        assert_eq!(assign.uses, names(&["x"]));
    }

    #[test]
    fn generic_declaration_defs() {
        let tree = parse("void f(Map<String, List<Integer>> src) {\n  Map<String, List<Integer>> m = src;\n}");
        assert_eq!(tree.statements[1].defs, names(&["m"]));
        assert_eq!(tree.statements[1].uses, names(&["src"]));
    }

    #[test]
    fn for_loop_header_defs_uses() {
        let tree = parse("void f(int n) {\n  for (int i = 1; i <= n; i++) {\n    step(i);\n  }\n}");
        let lp = &tree.statements[1];
        assert_eq!(lp.kind, StatementKind::Loop);
        assert_eq!(lp.defs, names(&["i"]));
        assert!(lp.uses.contains("n"));
        assert_eq!(tree.statements[2].parent, Some(1));
    }

    #[test]
    fn try_catch_structure() {
        let tree = parse(
            "void f(Reader r) {\n  try {\n    r.read();\n  } catch (IOException e) {\n    log(e);\n  }\n}",
        );
        let kinds: Vec<StatementKind> = tree.statements.iter().map(|s| s.kind).collect();
        assert_eq!(
            kinds,
            vec![
                StatementKind::MethodSignature,
                StatementKind::TryCatch,
                StatementKind::ExprCall,
                StatementKind::TryCatch,
                StatementKind::ExprCall,
            ]
        );
        assert_eq!(tree.statements[3].defs, names(&["e"]));
        assert_eq!(tree.statements[4].parent, Some(3));
        assert_eq!(tree.statements[4].uses, names(&["e", "log"]));
    }

    #[test]
    fn parse_is_deterministic() {
        let a = parse(fixtures::FIG1_MISUSE);
        let b = parse(fixtures::FIG1_MISUSE);
        assert_eq!(a, b);
    }

    #[test]
    fn every_statement_line_in_range_and_unique() {
        for text in [
            fixtures::FIG7_CORRECT,
            fixtures::FIG7_MISUSE,
            fixtures::FIG3_STATEMENT_EXECUTE,
            fixtures::FIG1_CORRECT,
            fixtures::FIG1_MISUSE,
        ] {
            let snippet = SourceSnippet::new("t", text);
            let nlines = snippet.lines().count() as u32;
            let tree = parse_snippet(&snippet).unwrap();
            let mut seen = BTreeSet::new();
            for s in &tree.statements {
                assert!(s.line >= 1 && s.line <= nlines);
                assert!(seen.insert(s.line), "line {} repeated", s.line);
            }
        }
    }

    #[test]
    fn snippet_lines_round_trip() {
        let text = "void f() {\r\n  int x = 1;\n\n}";
        let snippet = SourceSnippet::new("t", text);
        let joined: Vec<&str> = snippet.lines().map(|(_, l)| l).collect();
        assert_eq!(joined.join("\n"), text);
    }
}
