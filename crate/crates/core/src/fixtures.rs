//! Canonical Java snippets used across tests, docs, and benchmarks.
//!
//! These mirror the shapes this pipeline is built around: guarded collection
//! mutation, JDBC statement execution, and reader lifecycle handling.

/// Guarded `markers.remove(marker)` pattern (correct use).
pub const FIG7_CORRECT: &str = "\
void pattern(Map foregroundDomainMarkers, ..., Marker marker) {
  ArrayList markers = (ArrayList) foregroundDomainMarkers.get(...);
  if (markers != null) {
    markers.remove(marker);
  }
}";

/// Same pattern with the null guard omitted (misuse).
pub const FIG7_MISUSE: &str = "\
void pattern(Map foregroundDomainMarkers, ..., Marker marker) {
  ArrayList markers = (ArrayList) foregroundDomainMarkers.get(...);
  markers.remove(marker);
}";

/// JDBC usage with a guarded `statement.execute(sql)` at line 8, a
/// logging-only line 6, and `connection.close()` at line 11.
pub const FIG3_STATEMENT_EXECUTE: &str = "\
public void runQuery(String url, String sql) throws SQLException {
  if (url != null) {
    Connection connection = DriverManager.getConnection(url);
    Statement statement = connection.createStatement();
    if (sql != null) {
      System.out.println(\"running query\");
      if (statement != null) {
        statement.execute(sql);
      }
    }
    connection.close();
  }
}";

/// `BufferedReader.readLine()` with the reader properly closed.
pub const FIG1_CORRECT: &str = "\
public static void main(String[] args) throws Exception {
    BufferedReader br = new BufferedReader(new InputStreamReader(System.in));
    StringTokenizer st = new StringTokenizer(br.readLine());
    StringBuilder sb = new StringBuilder();
    compute(st, sb);
    System.out.println(sb.toString());
    br.close();
}";

/// `BufferedReader.readLine()` with the close omitted (resource leak).
pub const FIG1_MISUSE: &str = "\
public static void main(String[] args) throws Exception {
    BufferedReader br = new BufferedReader(new InputStreamReader(System.in));
    StringTokenizer st = new StringTokenizer(br.readLine());
    StringBuilder sb = new StringBuilder();
    int[] count = tally(st);
    for (int i = 1; i <= N; i++) {
        sb.append(count[i]).append(\" \");
    }
    System.out.println(sb.toString());
    /* BufferedReader is not closed */
}";
