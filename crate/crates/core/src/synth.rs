//! Synthetic snippet corpora for tests, benchmarks, and the acceptance
//! suite: templated Java methods for pre-training, and a guarded-call
//! corpus with planted misuses for end-to-end detection runs.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::afg::{build_afg, Afg};
use crate::embed::{attach_features, EmbeddingConfig, LexicalProvider};
use crate::frontend::{parse_snippet, SourceSnippet};
use crate::pretrain::filter_corpus;

const VARS: &[&str] = &["data", "buf", "item", "node", "entry", "rec", "acc", "tmp"];
const RECEIVERS: &[&str] = &["reader", "writer", "conn", "sock", "stream", "channel", "cache"];
const METHODS: &[&str] = &["read", "write", "send", "recv", "poll", "flush", "load", "store"];

fn pick<'a>(rng: &mut ChaCha8Rng, pool: &[&'a str]) -> &'a str {
    pool[rng.gen_range(0..pool.len())]
}

/// One templated method snippet. Families cover lifecycle loops, guarded
/// calls, try/catch IO, switches, and accumulation loops so that graph
/// contexts vary in both shape and token content.
fn pretrain_snippet(rng: &mut ChaCha8Rng, i: usize) -> String {
    let v = pick(rng, VARS);
    let r = pick(rng, RECEIVERS);
    let m = pick(rng, METHODS);
    let m2 = pick(rng, METHODS);
    let lit = rng.gen_range(1..100);
    match i % 8 {
        0 => format!(
            "void m{i}(Source src) {{\n  Handle {r} = src.open();\n  String {v} = {r}.{m}();\n  while ({v} != null) {{\n    process({v});\n    {v} = {r}.{m}();\n  }}\n  {r}.close();\n}}"
        ),
        1 => format!(
            "void m{i}(Map store, String key) {{\n  Object {v} = store.get(key);\n  if ({v} != null) {{\n    store.remove(key);\n    mark({v});\n  }}\n}}"
        ),
        2 => format!(
            "void m{i}(Channel {r}) {{\n  int {v} = {lit};\n  try {{\n    {r}.{m}({v});\n    {r}.{m2}();\n  }} catch (IOException e) {{\n    report(e);\n  }}\n}}"
        ),
        3 => format!(
            "int m{i}(int[] items) {{\n  int {v} = 0;\n  for (int k = 0; k < items.length; k++) {{\n    {v} = {v} + items[k];\n  }}\n  return {v};\n}}"
        ),
        4 => format!(
            "void m{i}(Queue q, Worker {r}) {{\n  Task {v} = q.take();\n  switch ({v}.kind()) {{\n    case {lit}:\n      {r}.{m}({v});\n      break;\n    default:\n      {r}.{m2}({v});\n  }}\n}}"
        ),
        5 => format!(
            "String m{i}(Builder {r}, String part) {{\n  {r}.append(part);\n  {r}.append(\"{v}\");\n  String {v} = {r}.build();\n  return {v};\n}}"
        ),
        6 => format!(
            "void m{i}(Socket {r}, byte[] {v}) {{\n  if ({r} != null) {{\n    {r}.connect();\n    {r}.{m}({v});\n    {r}.close();\n  }} else {{\n    drop({v});\n  }}\n}}"
        ),
        _ => format!(
            "long m{i}(List rows) {{\n  long {v} = {lit};\n  for (Object row : rows) {{\n    {v} += weigh(row);\n  }}\n  emit({v});\n  return {v};\n}}"
        ),
    }
}

/// Deterministic pre-training snippet corpus.
pub fn pretrain_snippets(count: usize, seed: u64) -> Vec<SourceSnippet> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|i| SourceSnippet::new(format!("synth-{i}"), pretrain_snippet(&mut rng, i)))
        .collect()
}

/// Snippets parsed into raw AFGs, filtered to informative graphs
/// (>= 3 edges), with lexical features attached.
pub fn pretrain_corpus(count: usize, seed: u64, cfg: &EmbeddingConfig) -> Vec<Afg> {
    let provider = LexicalProvider::new(*cfg).expect("valid synth embedding config");
    let graphs: Vec<Afg> = pretrain_snippets(count, seed)
        .iter()
        .map(|s| {
            let tree = parse_snippet(s).expect("templated snippet parses");
            build_afg(&tree, None)
        })
        .collect();
    filter_corpus(&graphs)
        .into_iter()
        .map(|g| attach_features(&g, &provider).expect("lexical provider is total"))
        .collect()
}

/// Target API of the detection corpus.
pub const DETECTION_API: &str = "Statement.execute";

/// 30 usages of [`DETECTION_API`]: 27 share a guard-then-call pattern
/// (differing only in irrelevant filler the pruner strips) and 3 omit the
/// guard in structurally distinct ways. Returns snippets with their
/// misuse flags.
pub fn detection_snippets(seed: u64) -> Vec<(SourceSnippet, bool)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    const GUARD_RECEIVERS: [&str; 3] = ["st", "stmt", "statement"];
    for i in 0..27 {
        let recv = GUARD_RECEIVERS[i % GUARD_RECEIVERS.len()];
        let filler_var = format!("{}{}", pick(&mut rng, VARS), i);
        let lit = rng.gen_range(1..1000);
        let mut lines = vec!["void run(Database db, String sql) {".to_string()];
        lines.push(format!("  int {filler_var} = {lit};"));
        if rng.gen_bool(0.5) {
            lines.push(format!("  {filler_var} = {filler_var} + {};", rng.gen_range(1..9)));
        }
        lines.push(format!("  Statement {recv} = db.createStatement();"));
        lines.push(format!("  if ({recv} != null) {{"));
        lines.push(format!("    {recv}.execute(sql);"));
        lines.push("  }".to_string());
        lines.push(format!("  sink.log({filler_var});"));
        lines.push("}".to_string());
        out.push((SourceSnippet::new(format!("use-{i}"), lines.join("\n")), false));
    }
    let deviants = [
        "void run(Database db, String sql) {\n  Statement cursor = db.createStatement();\n  cursor.execute(sql);\n}",
        "void run(Database db, String query) {\n  Statement handle = db.createStatement();\n  handle.execute(query);\n  handle.execute(query);\n}",
        "void run(Database db, String sql) {\n  Statement worker = db.createStatement();\n  while (sql != null) {\n    worker.execute(sql);\n    worker.close();\n  }\n}",
    ];
    for (j, text) in deviants.iter().enumerate() {
        out.push((SourceSnippet::new(format!("misuse-{j}"), text.to_string()), true));
    }
    out
}
