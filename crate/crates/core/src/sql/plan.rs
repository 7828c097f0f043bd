//! Rewrites a query over the relational view into API materialization steps
//! followed by a final query over base and temporary tables.

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde_json::json;

use super::ast::*;
use super::bind::{parse_sql, TableKind};
use super::SqlError;
use crate::schema::{RelationalView, VirtualTableDef};
use crate::value::{format_real, parse_numeric, Dtype, Value};

/// Upper bound on disjuncts produced when distributing AND over OR.
const MAX_DISJUNCTS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AtomOp {
    Eq,
    NotEq,
    Lt,
    LtEq,
    Gt,
    GtEq,
    In,
}

impl AtomOp {
    pub fn symbol(self) -> &'static str {
        match self {
            AtomOp::Eq => "=",
            AtomOp::NotEq => "!=",
            AtomOp::Lt => "<",
            AtomOp::LtEq => "<=",
            AtomOp::Gt => ">",
            AtomOp::GtEq => ">=",
            AtomOp::In => "IN",
        }
    }

    pub fn from_symbol(s: &str) -> Option<AtomOp> {
        Some(match s.to_ascii_uppercase().as_str() {
            "=" | "==" => AtomOp::Eq,
            "!=" | "<>" => AtomOp::NotEq,
            "<" => AtomOp::Lt,
            "<=" => AtomOp::LtEq,
            ">" => AtomOp::Gt,
            ">=" => AtomOp::GtEq,
            "IN" => AtomOp::In,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Operand {
    Literal(Value),
    List(Vec<Value>),
    Column { qualifier: String, name: String },
}

/// A single comparison leaf: `column op operand`.
#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    /// (table alias, column name)
    pub column: (String, String),
    pub op: AtomOp,
    pub operand: Operand,
}

impl Atom {
    pub fn eq(alias: &str, column: &str, value: Value) -> Atom {
        Atom {
            column: (alias.to_string(), column.to_string()),
            op: AtomOp::Eq,
            operand: Operand::Literal(value),
        }
    }

    /// SQL truth of this atom for a column value; `None` is SQL unknown.
    /// Column operands never match.
    pub fn eval(&self, v: &Value) -> Option<bool> {
        match (&self.op, &self.operand) {
            (AtomOp::In, Operand::List(list)) => {
                let mut unknown = v.is_null();
                for x in list {
                    match v.sql_eq(x) {
                        Some(true) => return Some(true),
                        None => unknown = true,
                        Some(false) => {}
                    }
                }
                if unknown {
                    None
                } else {
                    Some(false)
                }
            }
            (op, Operand::Literal(x)) => {
                if v.is_null() || x.is_null() {
                    return None;
                }
                let ord = v.total_cmp(x);
                let eq = v.sql_eq(x)?;
                Some(match op {
                    AtomOp::Eq => eq,
                    AtomOp::NotEq => !eq,
                    AtomOp::Lt => ord.is_lt() && !eq,
                    AtomOp::LtEq => ord.is_le() || eq,
                    AtomOp::Gt => ord.is_gt() && !eq,
                    AtomOp::GtEq => ord.is_ge() || eq,
                    AtomOp::In => eq,
                })
            }
            _ => None,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let value = match &self.operand {
            Operand::Literal(v) => v.to_json(),
            Operand::List(vs) => serde_json::Value::Array(vs.iter().map(Value::to_json).collect()),
            Operand::Column { qualifier, name } => json!({"column": format!("{qualifier}.{name}")}),
        };
        json!({"column": self.column.1, "op": self.op.symbol(), "value": value})
    }

    /// Inverse of [`Atom::to_json`]; the alias is supplied by the caller.
    pub fn from_json(alias: &str, v: &serde_json::Value) -> Result<Atom, String> {
        let column = v
            .get("column")
            .and_then(|c| c.as_str())
            .ok_or("atom without `column`")?;
        let op_text = v.get("op").and_then(|c| c.as_str()).ok_or("atom without `op`")?;
        let op = AtomOp::from_symbol(op_text).ok_or_else(|| format!("unknown operator `{op_text}`"))?;
        let value = v.get("value").ok_or("atom without `value`")?;
        let operand = match (op, value) {
            (AtomOp::In, serde_json::Value::Array(items)) => {
                Operand::List(items.iter().map(Value::from_json).collect())
            }
            (AtomOp::In, _) => return Err("IN requires a list".into()),
            (_, v) => Operand::Literal(Value::from_json(v)),
        };
        Ok(Atom {
            column: (alias.to_string(), column.to_string()),
            op,
            operand,
        })
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{} {} ", self.column.0, self.column.1, self.op.symbol())?;
        match &self.operand {
            Operand::Literal(v) => write!(f, "{v}"),
            Operand::List(vs) => {
                let parts: Vec<String> = vs.iter().map(|v| v.to_string()).collect();
                write!(f, "({})", parts.join(", "))
            }
            Operand::Column { qualifier, name } => write!(f, "{qualifier}.{name}"),
        }
    }
}

/// Disjunction of conjunctions of literal atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct DnfConstraint {
    pub disjuncts: Vec<Vec<Atom>>,
}

impl DnfConstraint {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.disjuncts
                .iter()
                .map(|c| serde_json::Value::Array(c.iter().map(Atom::to_json).collect()))
                .collect(),
        )
    }

    pub fn from_json(alias: &str, v: &serde_json::Value) -> Result<DnfConstraint, String> {
        let arr = v.as_array().ok_or("dnf must be a list of conjunctions")?;
        let mut disjuncts = Vec::new();
        for c in arr {
            let atoms = c.as_array().ok_or("conjunction must be a list of atoms")?;
            disjuncts.push(
                atoms
                    .iter()
                    .map(|a| Atom::from_json(alias, a))
                    .collect::<Result<Vec<_>, _>>()?,
            );
        }
        if disjuncts.is_empty() {
            return Err("dnf must have at least one conjunction".into());
        }
        Ok(DnfConstraint { disjuncts })
    }

    /// Whether a row satisfies some disjunct. `lookup` maps a column name to
    /// its value; atoms on columns it cannot resolve are treated as satisfied.
    pub fn matches(&self, lookup: &dyn Fn(&str) -> Option<Value>) -> bool {
        self.disjuncts.iter().any(|c| conjunction_matches(c, lookup))
    }
}

pub(crate) fn conjunction_matches(c: &[Atom], lookup: &dyn Fn(&str) -> Option<Value>) -> bool {
    c.iter().all(|a| match lookup(&a.column.1) {
        Some(v) => a.eval(&v) == Some(true),
        None => true,
    })
}

impl fmt::Display for DnfConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .disjuncts
            .iter()
            .map(|c| {
                let atoms: Vec<String> = c.iter().map(|a| a.to_string()).collect();
                format!("({})", atoms.join(" AND "))
            })
            .collect();
        write!(f, "{}", parts.join(" OR "))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BindingSource {
    Constant(DnfConstraint),
    Correlated {
        driving_sql: String,
        input_tuple_columns: Vec<String>,
    },
    UnboundOk,
}

impl BindingSource {
    pub fn kind(&self) -> &'static str {
        match self {
            BindingSource::Constant(_) => "constant",
            BindingSource::Correlated { .. } => "correlated",
            BindingSource::UnboundOk => "unbound",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaterializeStep {
    pub virtual_table: VirtualTableDef,
    pub alias: String,
    pub binding: BindingSource,
    pub temp_name: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QueryPlan {
    pub steps: Vec<MaterializeStep>,
    pub final_sql: String,
}

impl QueryPlan {
    pub fn to_json(&self) -> serde_json::Value {
        let steps: Vec<serde_json::Value> = self
            .steps
            .iter()
            .map(|s| {
                let binding = match &s.binding {
                    BindingSource::Constant(d) => json!({"kind": "constant", "dnf": d.to_json()}),
                    BindingSource::Correlated {
                        driving_sql,
                        input_tuple_columns,
                    } => json!({
                        "kind": "correlated",
                        "driving_sql": driving_sql,
                        "input_tuple_columns": input_tuple_columns,
                    }),
                    BindingSource::UnboundOk => json!({"kind": "unbound"}),
                };
                json!({
                    "virtual_table": s.virtual_table.name,
                    "alias": s.alias,
                    "binding": binding,
                    "temp_name": s.temp_name,
                })
            })
            .collect();
        json!({"steps": steps, "final_sql": self.final_sql})
    }
}

pub(crate) fn literal_value(lit: &Literal) -> Value {
    match lit {
        Literal::Number(n) => parse_numeric(n).unwrap_or_else(|| Value::Text(n.clone())),
        Literal::String(s) => Value::Text(s.clone()),
        Literal::Boolean(b) => Value::Boolean(*b),
        Literal::Null => Value::Null,
    }
}

pub(crate) fn value_literal(v: &Value) -> Literal {
    match v {
        Value::Null => Literal::Null,
        Value::Integer(i) => Literal::Number(i.to_string()),
        Value::Real(r) => Literal::Number(format_real(*r)),
        Value::Text(s) => Literal::String(s.clone()),
        Value::Boolean(b) => Literal::Boolean(*b),
    }
}

/// Literal coerced to a column's dtype, or `None` when the comparison could
/// not be expressed as a parameter value of that dtype.
fn coerce_literal(e: &Expr, dtype: Dtype) -> Option<Value> {
    let v = match e {
        Expr::Literal(l) => literal_value(l),
        Expr::Unary {
            op: UnaryOp::Minus,
            expr,
        } => match &**expr {
            Expr::Literal(Literal::Number(n)) => parse_numeric(&format!("-{n}"))?,
            _ => return None,
        },
        _ => return None,
    };
    let c = v.with_affinity(dtype);
    let ok = match (dtype, &c) {
        (_, Value::Null) => false,
        (Dtype::Integer | Dtype::Real | Dtype::Boolean, Value::Integer(_) | Value::Real(_)) => true,
        (Dtype::Text, Value::Text(_)) => !matches!(v, Value::Boolean(_)),
        _ => false,
    };
    ok.then_some(c)
}

fn column_of<'e>(e: &'e Expr, alias: &str) -> Option<&'e str> {
    match e {
        Expr::Column {
            qualifier: Some(q),
            name,
        } if q.value.eq_ignore_ascii_case(alias) => Some(&name.value),
        _ => None,
    }
}

/// Attempts to read `e` as a DNF over literal `=`/`IN` atoms on the input
/// columns of `alias`.
fn extract_dnf(e: &Expr, alias: &str, vt: &VirtualTableDef) -> Option<Vec<Vec<Atom>>> {
    let input_col = |x: &Expr| -> Option<(String, Dtype)> {
        let name = column_of(x, alias)?;
        if !vt.is_input(name) {
            return None;
        }
        let (canon, dtype) = vt.columns.iter().find(|(n, _)| n.eq_ignore_ascii_case(name))?;
        Some((canon.clone(), *dtype))
    };
    match e {
        Expr::Binary {
            left,
            op: BinaryOp::Or,
            right,
        } => {
            let mut l = extract_dnf(left, alias, vt)?;
            let r = extract_dnf(right, alias, vt)?;
            l.extend(r);
            (l.len() <= MAX_DISJUNCTS).then_some(l)
        }
        Expr::Binary {
            left,
            op: BinaryOp::And,
            right,
        } => {
            let l = extract_dnf(left, alias, vt)?;
            let r = extract_dnf(right, alias, vt)?;
            cross(l, r)
        }
        Expr::Binary {
            left,
            op: BinaryOp::Eq,
            right,
        } => {
            let (col, lit) = match (input_col(left), input_col(right)) {
                (Some(c), None) => (c, right),
                (None, Some(c)) => (c, left),
                _ => return None,
            };
            let v = coerce_literal(lit, col.1)?;
            Some(vec![vec![Atom {
                column: (alias.to_string(), col.0),
                op: AtomOp::Eq,
                operand: Operand::Literal(v),
            }]])
        }
        Expr::InList {
            expr,
            list,
            negated: false,
        } => {
            let col = input_col(expr)?;
            let values = list
                .iter()
                .map(|x| coerce_literal(x, col.1))
                .collect::<Option<Vec<_>>>()?;
            if values.is_empty() {
                return None;
            }
            Some(vec![vec![Atom {
                column: (alias.to_string(), col.0),
                op: AtomOp::In,
                operand: Operand::List(values),
            }]])
        }
        _ => None,
    }
}

fn cross(l: Vec<Vec<Atom>>, r: Vec<Vec<Atom>>) -> Option<Vec<Vec<Atom>>> {
    if l.len() * r.len() > MAX_DISJUNCTS {
        return None;
    }
    let mut out = Vec::with_capacity(l.len() * r.len());
    for a in &l {
        for b in &r {
            let mut c = a.clone();
            c.extend(b.iter().cloned());
            out.push(c);
        }
    }
    Some(out)
}

fn binds(conj: &[Atom], column: &str) -> bool {
    conj.iter()
        .any(|a| a.column.1.eq_ignore_ascii_case(column) && matches!(a.op, AtomOp::Eq | AtomOp::In))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Loc {
    Where,
    On(usize, usize),
}

#[derive(Debug, Clone)]
enum FactorKind {
    Base(String),
    Virtual(usize),
    Derived,
}

#[derive(Debug, Clone)]
struct Factor {
    alias: String,
    kind: FactorKind,
}

#[derive(Debug, Clone)]
struct Scope {
    factors: Vec<Factor>,
    conjuncts: Vec<Expr>,
}

impl Scope {
    fn factor(&self, alias: &str) -> Option<&Factor> {
        self.factors.iter().find(|f| f.alias.eq_ignore_ascii_case(alias))
    }
}

#[derive(Debug, Clone)]
enum SourceTable {
    Base(String),
    Step(usize),
}

#[derive(Debug, Clone)]
struct Source {
    depth: usize,
    alias: String,
    table: SourceTable,
}

#[derive(Debug, Clone)]
enum Pending {
    Constant(DnfConstraint),
    Correlated {
        sources: Vec<Source>,
        projection: Vec<Expr>,
        filters: Vec<Expr>,
        columns: Vec<String>,
    },
    Unbound,
}

#[derive(Debug, Clone)]
struct PendingStep {
    vt: VirtualTableDef,
    alias: String,
    binding: Pending,
    deps: BTreeSet<usize>,
}

fn placeholder(id: usize) -> String {
    format!("\u{1}step{id}")
}

struct Planner<'a> {
    view: &'a RelationalView,
    steps: Vec<PendingStep>,
}

/// Visits every subquery directly reachable from `e`.
fn for_each_subquery(e: &mut Expr, f: &mut dyn FnMut(&mut Query) -> Result<(), SqlError>) -> Result<(), SqlError> {
    match e {
        Expr::Column { .. } | Expr::Literal(_) => Ok(()),
        Expr::Subquery(q) | Expr::Exists { subquery: q, .. } => f(q),
        Expr::InSubquery { expr, subquery, .. } => {
            for_each_subquery(expr, f)?;
            f(subquery)
        }
        Expr::Unary { expr, .. } | Expr::IsNull { expr, .. } | Expr::Cast { expr, .. } => for_each_subquery(expr, f),
        Expr::Binary { left, right, .. } => {
            for_each_subquery(left, f)?;
            for_each_subquery(right, f)
        }
        Expr::InList { expr, list, .. } => {
            for_each_subquery(expr, f)?;
            list.iter_mut().try_for_each(|x| for_each_subquery(x, f))
        }
        Expr::Between { expr, low, high, .. } => {
            for_each_subquery(expr, f)?;
            for_each_subquery(low, f)?;
            for_each_subquery(high, f)
        }
        Expr::Like { expr, pattern, .. } => {
            for_each_subquery(expr, f)?;
            for_each_subquery(pattern, f)
        }
        Expr::Function { args, .. } => match args {
            FunctionArgs::Star => Ok(()),
            FunctionArgs::List(l) => l.iter_mut().try_for_each(|x| for_each_subquery(x, f)),
        },
        Expr::Case {
            operand,
            branches,
            else_result,
        } => {
            if let Some(o) = operand {
                for_each_subquery(o, f)?;
            }
            for (w, t) in branches {
                for_each_subquery(w, f)?;
                for_each_subquery(t, f)?;
            }
            if let Some(x) = else_result {
                for_each_subquery(x, f)?;
            }
            Ok(())
        }
    }
}

/// Qualifiers referenced by `e`, or `None` if it has unqualified columns or
/// subqueries.
fn referenced_aliases(e: &Expr) -> Option<BTreeSet<String>> {
    if e.contains_subquery() {
        return None;
    }
    let mut out = BTreeSet::new();
    let mut ok = true;
    e.walk(&mut |x| {
        if let Expr::Column { qualifier, .. } = x {
            match qualifier {
                Some(q) => {
                    out.insert(q.value.to_ascii_lowercase());
                }
                None => ok = false,
            }
        }
    });
    ok.then_some(out)
}

impl Planner<'_> {
    fn visit_query(&mut self, q: &mut Query, stack: &mut Vec<Scope>) -> Result<(), SqlError> {
        self.visit_set_expr(&mut q.body, stack)?;
        // ORDER BY expressions of a plain SELECT may hold subqueries.
        for item in &mut q.order_by {
            for_each_subquery(&mut item.expr, &mut |sq| self.visit_query(sq, stack))?;
        }
        Ok(())
    }

    fn visit_set_expr(&mut self, body: &mut SetExpr, stack: &mut Vec<Scope>) -> Result<(), SqlError> {
        match body {
            SetExpr::Select(s) => self.visit_select(s, stack),
            SetExpr::SetOp { left, right, .. } => {
                self.visit_set_expr(left, stack)?;
                self.visit_set_expr(right, stack)
            }
        }
    }

    fn register_factor(&mut self, f: &TableFactor) -> Factor {
        match f {
            TableFactor::Table { name, alias } => {
                let exposed = alias.as_ref().unwrap_or(name).value.clone();
                let kind = match self.view.virtual_table(&name.value) {
                    Some(vt) => {
                        self.steps.push(PendingStep {
                            vt: vt.clone(),
                            alias: exposed.clone(),
                            binding: Pending::Unbound,
                            deps: BTreeSet::new(),
                        });
                        FactorKind::Virtual(self.steps.len() - 1)
                    }
                    None => FactorKind::Base(
                        self.view
                            .table(&name.value)
                            .map(|t| t.name.clone())
                            .unwrap_or_else(|| name.value.clone()),
                    ),
                };
                Factor { alias: exposed, kind }
            }
            TableFactor::Derived { alias, .. } => Factor {
                alias: alias.as_ref().map(|a| a.value.clone()).unwrap_or_default(),
                kind: FactorKind::Derived,
            },
        }
    }

    fn visit_select(&mut self, s: &mut Select, stack: &mut Vec<Scope>) -> Result<(), SqlError> {
        let mut factors = Vec::new();
        for twj in &s.from {
            factors.push(self.register_factor(&twj.relation));
            for j in &twj.joins {
                factors.push(self.register_factor(&j.relation));
            }
        }
        let mut located: Vec<(Loc, Expr)> = Vec::new();
        if let Some(w) = &s.selection {
            located.extend(w.clone().split_conjuncts().into_iter().map(|e| (Loc::Where, e)));
        }
        for (ti, twj) in s.from.iter().enumerate() {
            for (ji, j) in twj.joins.iter().enumerate() {
                if let Some(on) = &j.on {
                    located.extend(on.clone().split_conjuncts().into_iter().map(|e| (Loc::On(ti, ji), e)));
                }
            }
        }
        let scope = Scope {
            factors: factors.clone(),
            conjuncts: located.iter().map(|(_, e)| e.clone()).collect(),
        };
        stack.push(scope);
        let mut consumed: HashSet<usize> = HashSet::new();
        for f in &factors {
            if let FactorKind::Virtual(id) = f.kind {
                self.analyze(id, stack, &mut consumed)?;
            }
        }
        stack.pop();

        // Swap virtual factors for placeholders and drop consumed conjuncts.
        let mut fi = 0;
        for twj in &mut s.from {
            let mut rels: Vec<&mut TableFactor> = vec![&mut twj.relation];
            rels.extend(twj.joins.iter_mut().map(|j| &mut j.relation));
            for rel in rels {
                if let FactorKind::Virtual(id) = factors[fi].kind {
                    if let TableFactor::Table { name, alias } = rel {
                        let exposed = alias.clone().unwrap_or_else(|| name.clone());
                        *name = Ident::new(placeholder(id));
                        *alias = Some(exposed);
                    }
                }
                fi += 1;
            }
        }
        if !consumed.is_empty() {
            let keep = |loc: Loc| -> Vec<Expr> {
                located
                    .iter()
                    .enumerate()
                    .filter(|(i, (l, _))| *l == loc && !consumed.contains(i))
                    .map(|(_, (_, e))| e.clone())
                    .collect()
            };
            s.selection = Expr::and_all(keep(Loc::Where));
            for (ti, twj) in s.from.iter_mut().enumerate() {
                for (ji, j) in twj.joins.iter_mut().enumerate() {
                    if j.on.is_some() {
                        j.on = Expr::and_all(keep(Loc::On(ti, ji)));
                    }
                }
            }
        }

        // Derived tables cannot see this scope; expression subqueries can.
        for twj in &mut s.from {
            let mut rels: Vec<&mut TableFactor> = vec![&mut twj.relation];
            rels.extend(twj.joins.iter_mut().map(|j| &mut j.relation));
            for rel in rels {
                if let TableFactor::Derived { subquery, .. } = rel {
                    self.visit_query(subquery, stack)?;
                }
            }
        }
        // Re-read the (possibly rewritten) conjuncts for the inner scope.
        stack.push(Scope {
            factors,
            conjuncts: located.into_iter().map(|(_, e)| e).collect(),
        });
        let result = self.visit_select_exprs(s, stack);
        stack.pop();
        result
    }

    fn visit_select_exprs(&mut self, s: &mut Select, stack: &mut Vec<Scope>) -> Result<(), SqlError> {
        let mut exprs: Vec<&mut Expr> = Vec::new();
        for p in &mut s.projection {
            if let SelectItem::Expr { expr, .. } = p {
                exprs.push(expr);
            }
        }
        for twj in &mut s.from {
            for j in &mut twj.joins {
                if let Some(on) = &mut j.on {
                    exprs.push(on);
                }
            }
        }
        exprs.extend(s.selection.as_mut());
        exprs.extend(s.group_by.iter_mut());
        exprs.extend(s.having.as_mut());
        for e in exprs {
            for_each_subquery(e, &mut |sq| self.visit_query(sq, stack))?;
        }
        Ok(())
    }

    /// Resolves an alias as seen from scope `depth`.
    fn resolve<'s>(stack: &'s [Scope], depth: usize, alias: &str) -> Option<(usize, &'s Factor)> {
        (0..=depth).rev().find_map(|d| stack[d].factor(alias).map(|f| (d, f)))
    }

    fn analyze(&mut self, id: usize, stack: &[Scope], consumed: &mut HashSet<usize>) -> Result<(), SqlError> {
        let depth = stack.len() - 1;
        let scope = &stack[depth];
        let vt = self.steps[id].vt.clone();
        let alias = self.steps[id].alias.clone();
        let required = vt.required_inputs();

        // Constant binding from pure literal conjuncts on input columns.
        let mut dnf: Option<Vec<Vec<Atom>>> = None;
        let mut used = Vec::new();
        for (i, c) in scope.conjuncts.iter().enumerate() {
            let Some(d) = extract_dnf(c, &alias, &vt) else {
                continue;
            };
            let combined = match &dnf {
                None => Some(d),
                Some(prev) => cross(prev.clone(), d),
            };
            // A conjunct that would overflow the disjunct cap stays residual.
            if let Some(x) = combined {
                dnf = Some(x);
                used.push(i);
            }
        }
        if let Some(disjuncts) = dnf {
            let all_bound = disjuncts.iter().all(|conj| required.iter().all(|r| binds(conj, r)));
            if all_bound {
                consumed.extend(used);
                self.steps[id].binding = Pending::Constant(DnfConstraint { disjuncts });
                return Ok(());
            }
        }

        if required.is_empty() {
            self.steps[id].binding = Pending::Unbound;
            return Ok(());
        }

        // Correlated binding through equalities with other relations.
        let mut sources: Vec<Source> = Vec::new();
        let mut projection = Vec::new();
        for r in &required {
            let mut base_hit: Option<(Source, Expr)> = None;
            let mut virt_hit: Option<(Source, Expr)> = None;
            let mut constant: Option<Value> = None;
            for c in &scope.conjuncts {
                let Expr::Binary {
                    left,
                    op: BinaryOp::Eq,
                    right,
                } = c
                else {
                    continue;
                };
                let other = if column_of(left, &alias).is_some_and(|n| n.eq_ignore_ascii_case(r)) {
                    right
                } else if column_of(right, &alias).is_some_and(|n| n.eq_ignore_ascii_case(r)) {
                    left
                } else {
                    continue;
                };
                if let Expr::Column { qualifier: Some(q), .. } = &**other {
                    if q.value.eq_ignore_ascii_case(&alias) {
                        continue;
                    }
                    let Some((d, f)) = Self::resolve(stack, depth, &q.value) else {
                        continue;
                    };
                    if sources
                        .iter()
                        .any(|s| s.alias.eq_ignore_ascii_case(&f.alias) && s.depth != d)
                    {
                        continue;
                    }
                    let source = |table| Source {
                        depth: d,
                        alias: f.alias.clone(),
                        table,
                    };
                    match &f.kind {
                        FactorKind::Base(t) if base_hit.is_none() => {
                            base_hit = Some((source(SourceTable::Base(t.clone())), (**other).clone()));
                        }
                        FactorKind::Virtual(j) if virt_hit.is_none() => {
                            virt_hit = Some((source(SourceTable::Step(*j)), (**other).clone()));
                        }
                        _ => {}
                    }
                } else if constant.is_none() {
                    let dtype = vt.column_dtype(r).unwrap_or(Dtype::Text);
                    constant = coerce_literal(other, dtype);
                }
            }
            match base_hit.or(virt_hit) {
                Some((src, expr)) => {
                    if let SourceTable::Step(j) = src.table {
                        self.steps[id].deps.insert(j);
                    }
                    if !sources
                        .iter()
                        .any(|s| s.alias.eq_ignore_ascii_case(&src.alias) && s.depth == src.depth)
                    {
                        sources.push(src);
                    }
                    projection.push(expr);
                }
                None => match constant {
                    Some(v) => projection.push(Expr::Literal(value_literal(&v))),
                    None => {
                        return Err(SqlError::UnboundInput {
                            table: vt.name.clone(),
                            column: r.clone(),
                        })
                    }
                },
            }
        }

        // Conjuncts that mention only driving relations narrow the tuples soundly.
        let mut filters = Vec::new();
        let outermost = sources.iter().map(|s| s.depth).min().unwrap_or(depth);
        for d in outermost..=depth {
            for c in &stack[d].conjuncts {
                let Some(refs) = referenced_aliases(c) else {
                    continue;
                };
                if refs.is_empty() {
                    continue;
                }
                let all_driving = refs.iter().all(|a| {
                    Self::resolve(stack, d, a).is_some_and(|(rd, f)| {
                        sources
                            .iter()
                            .any(|s| s.depth == rd && s.alias.eq_ignore_ascii_case(&f.alias))
                    })
                });
                if all_driving && !filters.contains(c) {
                    filters.push(c.clone());
                }
            }
        }
        self.steps[id].binding = Pending::Correlated {
            sources,
            projection,
            filters,
            columns: required,
        };
        Ok(())
    }

    fn toposort(&self) -> Result<Vec<usize>, SqlError> {
        let n = self.steps.len();
        let mut done = vec![false; n];
        let mut order = Vec::with_capacity(n);
        while order.len() < n {
            let next = (0..n).find(|&i| !done[i] && self.steps[i].deps.iter().all(|&d| done[d]));
            match next {
                Some(i) => {
                    done[i] = true;
                    order.push(i);
                }
                None => {
                    let cycle = (0..n)
                        .filter(|&i| !done[i])
                        .map(|i| self.steps[i].vt.name.clone())
                        .collect();
                    return Err(SqlError::CyclicDependency(cycle));
                }
            }
        }
        Ok(order)
    }
}

fn rename_placeholders(q: &mut Query, names: &[String]) {
    fn in_set(body: &mut SetExpr, names: &[String]) {
        match body {
            SetExpr::Select(s) => in_select(s, names),
            SetExpr::SetOp { left, right, .. } => {
                in_set(left, names);
                in_set(right, names);
            }
        }
    }
    fn in_factor(f: &mut TableFactor, names: &[String]) {
        match f {
            TableFactor::Table { name, .. } => {
                if let Some(id) = name.value.strip_prefix("\u{1}step") {
                    let id: usize = id.parse().expect("placeholder id");
                    *name = Ident::new(names[id].clone());
                }
            }
            TableFactor::Derived { subquery, .. } => rename_placeholders(subquery, names),
        }
    }
    fn in_select(s: &mut Select, names: &[String]) {
        for twj in &mut s.from {
            in_factor(&mut twj.relation, names);
            for j in &mut twj.joins {
                in_factor(&mut j.relation, names);
                if let Some(on) = &mut j.on {
                    in_expr(on, names);
                }
            }
        }
        for p in &mut s.projection {
            if let SelectItem::Expr { expr, .. } = p {
                in_expr(expr, names);
            }
        }
        for e in s
            .selection
            .iter_mut()
            .chain(s.group_by.iter_mut())
            .chain(s.having.iter_mut())
        {
            in_expr(e, names);
        }
    }
    fn in_expr(e: &mut Expr, names: &[String]) {
        let _ = for_each_subquery(e, &mut |q| {
            rename_placeholders(q, names);
            Ok(())
        });
    }
    in_set(&mut q.body, names);
    for item in &mut q.order_by {
        in_expr(&mut item.expr, names);
    }
}

fn sanitize(alias: &str) -> String {
    alias
        .chars()
        .map(|c| {
            if c.is_ascii_alphanumeric() {
                c.to_ascii_lowercase()
            } else {
                '_'
            }
        })
        .collect()
}

/// Plans `sql` against `view`, replacing each virtual-table reference by a
/// materialization step.
pub fn plan_query(sql: &str, view: &RelationalView) -> Result<QueryPlan, SqlError> {
    let parsed = parse_sql(sql, view)?;
    let mut query = parsed.query;
    let mut planner = Planner {
        view,
        steps: Vec::new(),
    };
    planner.visit_query(&mut query, &mut Vec::new())?;
    let order = planner.toposort()?;

    let mut taken: HashSet<String> = view.tables.iter().map(|t| t.name.to_ascii_lowercase()).collect();
    taken.extend(parsed.table_refs.iter().map(|r| r.alias.to_ascii_lowercase()));
    let mut names = vec![String::new(); planner.steps.len()];
    for (pos, &id) in order.iter().enumerate() {
        let base = format!("vt_{}_{}", sanitize(&planner.steps[id].alias), pos);
        let mut name = base.clone();
        let mut k = 1;
        while taken.contains(&name) {
            name = format!("{base}_{k}");
            k += 1;
        }
        taken.insert(name.clone());
        names[id] = name;
    }

    let mut steps = Vec::with_capacity(order.len());
    for &id in &order {
        let p = &planner.steps[id];
        let binding = match &p.binding {
            Pending::Constant(d) => BindingSource::Constant(d.clone()),
            Pending::Unbound => BindingSource::UnboundOk,
            Pending::Correlated {
                sources,
                projection,
                filters,
                columns,
            } => {
                let from = sources
                    .iter()
                    .map(|s| {
                        let (name, alias) = match &s.table {
                            SourceTable::Base(t) if t.eq_ignore_ascii_case(&s.alias) => (t.clone(), None),
                            SourceTable::Base(t) => (t.clone(), Some(Ident::new(s.alias.clone()))),
                            SourceTable::Step(j) => (names[*j].clone(), Some(Ident::new(s.alias.clone()))),
                        };
                        TableWithJoins {
                            relation: TableFactor::Table {
                                name: Ident::new(name),
                                alias,
                            },
                            joins: Vec::new(),
                        }
                    })
                    .collect();
                let select = Select {
                    distinct: true,
                    projection: projection
                        .iter()
                        .map(|e| SelectItem::Expr {
                            expr: e.clone(),
                            alias: None,
                        })
                        .collect(),
                    from,
                    selection: Expr::and_all(filters.clone()),
                    group_by: Vec::new(),
                    having: None,
                };
                let q = Query {
                    body: SetExpr::Select(Box::new(select)),
                    order_by: Vec::new(),
                    limit: None,
                    offset: None,
                };
                BindingSource::Correlated {
                    driving_sql: q.to_string(),
                    input_tuple_columns: columns.clone(),
                }
            }
        };
        steps.push(MaterializeStep {
            virtual_table: p.vt.clone(),
            alias: p.alias.clone(),
            binding,
            temp_name: names[id].clone(),
        });
    }
    rename_placeholders(&mut query, &names);
    debug_assert!(parsed
        .table_refs
        .iter()
        .all(|r| r.kind != TableKind::Virtual || !steps.is_empty()));
    Ok(QueryPlan {
        steps,
        final_sql: query.to_string(),
    })
}
