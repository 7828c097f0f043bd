//! Result comparison that requires the gold rows but forgives extra
//! predicted columns.

use std::cmp::Ordering;

use crate::value::{parse_numeric, ResultTable, Value};

pub const REL_TOL: f64 = 1e-6;
pub const ABS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub matched: bool,
    pub reason: String,
}

impl MatchResult {
    fn yes(reason: impl Into<String>) -> Self {
        MatchResult {
            matched: true,
            reason: reason.into(),
        }
    }

    fn no(reason: impl Into<String>) -> Self {
        MatchResult {
            matched: false,
            reason: reason.into(),
        }
    }
}

fn numeric(v: &Value) -> Option<f64> {
    match v {
        Value::Text(s) => parse_numeric(s.trim()).and_then(|n| n.as_f64()),
        other => other.as_f64(),
    }
}

/// Null equals null; numbers within tolerance; text equal after trimming.
/// Numeric text compares as a number against numbers.
pub fn values_equal(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Null, Value::Null) => true,
        (Value::Null, _) | (_, Value::Null) => false,
        (Value::Text(x), Value::Text(y)) => x.trim() == y.trim(),
        _ => match (numeric(a), numeric(b)) {
            (Some(x), Some(y)) => {
                let diff = (x - y).abs();
                diff <= ABS_TOL || diff <= REL_TOL * x.abs().max(y.abs())
            }
            _ => false,
        },
    }
}

/// Total order that keeps values that compare equal adjacent, up to the
/// numeric tolerance.
fn canon_cmp(a: &Value, b: &Value) -> Ordering {
    fn rank(v: &Value) -> u8 {
        match v {
            Value::Null => 0,
            Value::Text(s) if parse_numeric(s.trim()).is_none() => 2,
            _ => 1,
        }
    }
    match rank(a).cmp(&rank(b)) {
        Ordering::Equal => {}
        o => return o,
    }
    match (a, b) {
        (Value::Null, Value::Null) => Ordering::Equal,
        _ if rank(a) == 2 => a
            .to_text()
            .unwrap_or_default()
            .trim()
            .cmp(b.to_text().unwrap_or_default().trim()),
        _ => numeric(a).unwrap_or(0.0).total_cmp(&numeric(b).unwrap_or(0.0)),
    }
}

fn rows_cmp(a: &[Value], b: &[Value]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| canon_cmp(x, y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

fn rows_equal(a: &[Value], b: &[Value]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| values_equal(x, y))
}

/// Multiset equality of rows: sorted comparison, then bipartite matching
/// when tolerance makes the sort order ambiguous.
fn multiset_equal(gold: &[Vec<Value>], pred: &[Vec<Value>]) -> bool {
    if gold.len() != pred.len() {
        return false;
    }
    let mut g: Vec<&Vec<Value>> = gold.iter().collect();
    let mut p: Vec<&Vec<Value>> = pred.iter().collect();
    g.sort_by(|a, b| rows_cmp(a, b));
    p.sort_by(|a, b| rows_cmp(a, b));
    if g.iter().zip(&p).all(|(a, b)| rows_equal(a, b)) {
        return true;
    }
    perfect_matching(&g, &p)
}

fn perfect_matching(g: &[&Vec<Value>], p: &[&Vec<Value>]) -> bool {
    let n = g.len();
    let adj: Vec<Vec<usize>> = g
        .iter()
        .map(|a| (0..n).filter(|&j| rows_equal(a, p[j])).collect())
        .collect();
    let mut owner: Vec<Option<usize>> = vec![None; n];
    fn augment(i: usize, adj: &[Vec<usize>], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for &j in &adj[i] {
            if seen[j] {
                continue;
            }
            seen[j] = true;
            if owner[j].is_none_or(|k| augment(k, adj, seen, owner)) {
                owner[j] = Some(i);
                return true;
            }
        }
        false
    }
    (0..n).all(|i| augment(i, &adj, &mut vec![false; n], &mut owner))
}

fn column(t: &ResultTable, j: usize) -> Vec<Value> {
    t.rows.iter().map(|r| r[j].clone()).collect()
}

fn column_compatible(g: &[Value], p: &[Value], ordered: bool) -> bool {
    if ordered {
        return g.iter().zip(p).all(|(a, b)| values_equal(a, b));
    }
    let wrap = |c: &[Value]| c.iter().map(|v| vec![v.clone()]).collect::<Vec<_>>();
    multiset_equal(&wrap(g), &wrap(p))
}

fn describe_mismatch(gold: &ResultTable, pred: &ResultTable, gj: usize) -> String {
    let g = column(gold, gj);
    let name = &gold.columns[gj].0;
    let mut best: Option<(usize, Vec<Value>, Vec<Value>)> = None;
    for pj in 0..pred.columns.len() {
        let mut missing: Vec<Value> = g.clone();
        let mut extra: Vec<Value> = Vec::new();
        for v in column(pred, pj) {
            match missing.iter().position(|m| values_equal(m, &v)) {
                Some(i) => {
                    missing.remove(i);
                }
                None => extra.push(v),
            }
        }
        let score = missing.len() + extra.len();
        if best.as_ref().is_none_or(|(s, _, _)| score < *s) {
            best = Some((score, missing, extra));
        }
    }
    match best {
        Some((_, missing, extra)) if !extra.is_empty() || !missing.is_empty() => {
            let show = |vs: &[Value]| vs.iter().take(3).map(|v| v.to_string()).collect::<Vec<_>>().join(", ");
            format!(
                "no predicted column matches gold column `{name}`: unexpected value(s) [{}], missing value(s) [{}]",
                show(&extra),
                show(&missing)
            )
        }
        _ => format!("no predicted column matches gold column `{name}` in order"),
    }
}

/// Whether an injective map from gold columns to predicted columns makes the
/// projected predicted rows equal the gold rows, as sequences when `ordered`
/// and as multisets otherwise.
pub fn rows_match(gold: &ResultTable, pred: &ResultTable, ordered: bool) -> MatchResult {
    if gold.rows.len() != pred.rows.len() {
        return MatchResult::no(format!(
            "row count differs: gold {}, predicted {}",
            gold.rows.len(),
            pred.rows.len()
        ));
    }
    let (gn, pn) = (gold.columns.len(), pred.columns.len());
    if gn > pn {
        return MatchResult::no(format!("predicted result has {pn} column(s), gold needs {gn}"));
    }
    if gold.rows.is_empty() {
        return MatchResult::yes("both results are empty");
    }
    let candidates: Vec<Vec<usize>> = (0..gn)
        .map(|gj| {
            let g = column(gold, gj);
            (0..pn)
                .filter(|&pj| column_compatible(&g, &column(pred, pj), ordered))
                .collect()
        })
        .collect();
    if let Some(gj) = candidates.iter().position(Vec::is_empty) {
        return MatchResult::no(describe_mismatch(gold, pred, gj));
    }
    let mut order: Vec<usize> = (0..gn).collect();
    order.sort_by_key(|&gj| candidates[gj].len());
    let mut assignment = vec![usize::MAX; gn];
    let mut used = vec![false; pn];
    if search(0, &order, &candidates, &mut assignment, &mut used, &mut |a| {
        let project = |t: &ResultTable, cols: &[usize]| -> Vec<Vec<Value>> {
            t.rows
                .iter()
                .map(|r| cols.iter().map(|&c| r[c].clone()).collect())
                .collect()
        };
        let gp = project(gold, &(0..gn).collect::<Vec<_>>());
        let pp = project(pred, a);
        if ordered {
            gp.iter().zip(&pp).all(|(x, y)| rows_equal(x, y))
        } else {
            multiset_equal(&gp, &pp)
        }
    }) {
        let names: Vec<String> = assignment
            .iter()
            .enumerate()
            .map(|(gj, &pj)| format!("{}->{}", gold.columns[gj].0, pred.columns[pj].0))
            .collect();
        return MatchResult::yes(format!("matched with column map {}", names.join(", ")));
    }
    MatchResult::no("every column matches individually but no column map reproduces the gold rows")
}

fn search(
    k: usize,
    order: &[usize],
    candidates: &[Vec<usize>],
    assignment: &mut [usize],
    used: &mut [bool],
    accept: &mut dyn FnMut(&[usize]) -> bool,
) -> bool {
    if k == order.len() {
        return accept(assignment);
    }
    let gj = order[k];
    for &pj in &candidates[gj] {
        if used[pj] {
            continue;
        }
        used[pj] = true;
        assignment[gj] = pj;
        if search(k + 1, order, candidates, assignment, used, accept) {
            return true;
        }
        used[pj] = false;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::value::Dtype;

    fn table(cols: &[&str], rows: Vec<Vec<Value>>) -> ResultTable {
        ResultTable {
            columns: cols.iter().map(|c| (c.to_string(), Dtype::Text)).collect(),
            rows,
        }
    }

    fn i(v: i64) -> Value {
        Value::Integer(v)
    }

    fn t(s: &str) -> Value {
        Value::Text(s.into())
    }

    #[test]
    fn extra_column_and_order_forgiven() {
        let gold = table(&["a"], vec![vec![i(1)], vec![i(2)]]);
        let pred = table(&["b", "c"], vec![vec![i(2), t("x")], vec![i(1), t("y")]]);
        assert!(rows_match(&gold, &pred, false).matched);
        assert!(!rows_match(&gold, &pred, true).matched);
    }

    #[test]
    fn wrong_value_is_cited() {
        let gold = table(&["a"], vec![vec![i(1)], vec![i(2)]]);
        let pred = table(&["a"], vec![vec![i(1)], vec![i(3)]]);
        let r = rows_match(&gold, &pred, false);
        assert!(!r.matched);
        assert!(r.reason.contains('3'), "{}", r.reason);
    }

    #[test]
    fn tolerance_and_trimming() {
        assert!(values_equal(&Value::Real(1.0), &Value::Real(1.0 + 1e-7)));
        assert!(!values_equal(&Value::Real(1.0), &Value::Real(1.0001)));
        assert!(values_equal(&Value::Real(0.0), &Value::Real(1e-10)));
        assert!(values_equal(&t(" a "), &t("a")));
        assert!(!values_equal(&t("A"), &t("a")));
        assert!(values_equal(&Value::Boolean(true), &i(1)));
        assert!(values_equal(&t("5"), &i(5)));
        assert!(values_equal(&Value::Null, &Value::Null));
        assert!(!values_equal(&Value::Null, &i(0)));
    }

    #[test]
    fn needs_joint_column_map() {
        // Each gold column matches either predicted column alone; only one pairing reproduces the rows.
        let gold = table(&["a", "b"], vec![vec![i(1), i(2)], vec![i(2), i(1)], vec![i(1), i(1)]]);
        let pred = table(&["x", "y"], vec![vec![i(2), i(1)], vec![i(1), i(2)], vec![i(1), i(1)]]);
        assert!(rows_match(&gold, &pred, false).matched);
        let bad = table(&["x", "y"], vec![vec![i(1), i(1)], vec![i(2), i(2)], vec![i(1), i(1)]]);
        assert!(!rows_match(&gold, &bad, false).matched);
    }

    #[test]
    fn missing_gold_column_fails() {
        let gold = table(&["a", "b"], vec![vec![i(1), i(2)]]);
        let pred = table(&["a"], vec![vec![i(1)]]);
        assert!(!rows_match(&gold, &pred, false).matched);
    }

    #[test]
    fn kuhn_fallback_for_tolerance_ties() {
        let gold = table(
            &["a", "b"],
            vec![vec![Value::Real(1.0), i(2)], vec![Value::Real(1.0 + 5e-7), i(1)]],
        );
        let pred = table(
            &["a", "b"],
            vec![vec![Value::Real(1.0 + 4e-7), i(2)], vec![Value::Real(1.0 + 2e-7), i(1)]],
        );
        assert!(rows_match(&gold, &pred, false).matched);
    }
}
