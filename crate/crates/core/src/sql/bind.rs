//! Name resolution against a [`RelationalView`].
//!
//! Binding normalizes the tree in place: every column reference that resolves
//! to a relation is qualified with that relation's alias, derived tables get an
//! alias when they lack one, and double-quoted words that name no column become
//! string literals (SQLite's fallback).

use std::collections::HashMap;

use super::ast::*;
use super::parser::parse_query_text;
use super::SqlError;
use crate::schema::RelationalView;
use crate::value::Dtype;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableKind {
    Base,
    Virtual,
    Derived,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableRef {
    /// Nesting depth of the SELECT the reference appears in (0 = outermost).
    pub depth: usize,
    pub alias: String,
    pub table: String,
    pub kind: TableKind,
}

/// A parsed and bound query.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedQuery {
    pub query: Query,
    pub table_refs: Vec<TableRef>,
    pub(crate) column_types: HashMap<(String, String), Option<Dtype>>,
}

impl ParsedQuery {
    pub fn virtual_refs(&self) -> impl Iterator<Item = &TableRef> {
        self.table_refs.iter().filter(|r| r.kind == TableKind::Virtual)
    }

    /// Dtype of a qualified column, when unambiguous across scopes.
    pub fn column_dtype(&self, qualifier: &str, name: &str) -> Option<Dtype> {
        self.column_types
            .get(&(qualifier.to_ascii_lowercase(), name.to_ascii_lowercase()))
            .copied()
            .flatten()
    }
}

/// Parses `sql` and resolves every table and column reference against `view`.
pub fn parse_sql(sql: &str, view: &RelationalView) -> Result<ParsedQuery, SqlError> {
    bind_with(sql, view, true)
}

pub(crate) fn bind_with(sql: &str, view: &RelationalView, allow_virtual: bool) -> Result<ParsedQuery, SqlError> {
    let mut query = parse_query_text(sql)?;
    let mut binder = Binder {
        view,
        allow_virtual,
        refs: Vec::new(),
        types: HashMap::new(),
        derived_counter: 0,
    };
    binder.bind_query(&mut query, &Vec::new())?;
    Ok(ParsedQuery {
        query,
        table_refs: binder.refs,
        column_types: binder.types,
    })
}

#[derive(Debug, Clone)]
struct Rel {
    alias: String,
    columns: Vec<(String, Option<Dtype>)>,
}

impl Rel {
    fn column(&self, name: &str) -> Option<&(String, Option<Dtype>)> {
        self.columns.iter().find(|(n, _)| n.eq_ignore_ascii_case(name))
    }
}

type Scopes = Vec<Vec<Rel>>;

struct Binder<'a> {
    view: &'a RelationalView,
    allow_virtual: bool,
    refs: Vec<TableRef>,
    types: HashMap<(String, String), Option<Dtype>>,
    derived_counter: usize,
}

enum Resolution {
    Qualified(String),
    Alias,
    Unresolved,
}

impl Binder<'_> {
    fn bind_query(&mut self, q: &mut Query, outer: &Scopes) -> Result<Vec<(String, Option<Dtype>)>, SqlError> {
        let out = match &mut q.body {
            SetExpr::Select(s) => {
                let (out, scope, aliases) = self.bind_select(s, outer)?;
                let mut scopes = outer.clone();
                scopes.push(scope);
                for item in &mut q.order_by {
                    self.bind_expr(&mut item.expr, &scopes, &aliases)?;
                }
                out
            }
            body @ SetExpr::SetOp { .. } => {
                let out = self.bind_set_expr(body, outer)?;
                // ORDER BY of a compound refers to result columns by name.
                out
            }
        };
        for e in [&mut q.limit, &mut q.offset].into_iter().flatten() {
            self.bind_expr(e, outer, &[])?;
        }
        Ok(out)
    }

    fn bind_set_expr(&mut self, body: &mut SetExpr, outer: &Scopes) -> Result<Vec<(String, Option<Dtype>)>, SqlError> {
        match body {
            SetExpr::Select(s) => Ok(self.bind_select(s, outer)?.0),
            SetExpr::SetOp { left, right, .. } => {
                let out = self.bind_set_expr(left, outer)?;
                self.bind_set_expr(right, outer)?;
                Ok(out)
            }
        }
    }

    fn add_relation(&mut self, factor: &mut TableFactor, outer: &Scopes, scope: &mut Vec<Rel>) -> Result<(), SqlError> {
        let depth = outer.len();
        match factor {
            TableFactor::Table { name, alias } => {
                let table = self
                    .view
                    .table(&name.value)
                    .ok_or_else(|| SqlError::UnknownTable(name.value.clone()))?;
                if table.is_virtual && !self.allow_virtual {
                    return Err(SqlError::UnknownTable(name.value.clone()));
                }
                let exposed = alias.as_ref().unwrap_or(name).value.clone();
                self.refs.push(TableRef {
                    depth,
                    alias: exposed.clone(),
                    table: table.name.clone(),
                    kind: if table.is_virtual {
                        TableKind::Virtual
                    } else {
                        TableKind::Base
                    },
                });
                scope.push(Rel {
                    alias: exposed,
                    columns: table.columns.iter().map(|(n, d)| (n.clone(), Some(*d))).collect(),
                });
            }
            TableFactor::Derived { subquery, alias } => {
                let columns = self.bind_query(subquery, outer)?;
                let alias = alias.get_or_insert_with(|| {
                    self.derived_counter += 1;
                    Ident::new(format!("derived_{}", self.derived_counter))
                });
                self.refs.push(TableRef {
                    depth,
                    alias: alias.value.clone(),
                    table: String::new(),
                    kind: TableKind::Derived,
                });
                scope.push(Rel {
                    alias: alias.value.clone(),
                    columns,
                });
            }
        }
        Ok(())
    }

    #[allow(clippy::type_complexity)]
    fn bind_select(
        &mut self,
        s: &mut Select,
        outer: &Scopes,
    ) -> Result<(Vec<(String, Option<Dtype>)>, Vec<Rel>, Vec<String>), SqlError> {
        let mut scope = Vec::new();
        for twj in &mut s.from {
            self.add_relation(&mut twj.relation, outer, &mut scope)?;
            for j in &mut twj.joins {
                self.add_relation(&mut j.relation, outer, &mut scope)?;
            }
        }
        let mut scopes = outer.clone();
        scopes.push(scope.clone());
        for twj in &mut s.from {
            for j in &mut twj.joins {
                if let Some(on) = &mut j.on {
                    self.bind_expr(on, &scopes, &[])?;
                }
            }
        }
        let aliases: Vec<String> = s
            .projection
            .iter()
            .filter_map(|p| match p {
                SelectItem::Expr { alias: Some(a), .. } => Some(a.value.clone()),
                _ => None,
            })
            .collect();
        if let Some(w) = &mut s.selection {
            self.bind_expr(w, &scopes, &aliases)?;
        }
        let mut out = Vec::new();
        for item in &mut s.projection {
            match item {
                SelectItem::Wildcard => {
                    for r in &scope {
                        out.extend(r.columns.iter().cloned());
                    }
                }
                SelectItem::QualifiedWildcard(q) => {
                    let rel = scope
                        .iter()
                        .find(|r| r.alias.eq_ignore_ascii_case(&q.value))
                        .ok_or_else(|| SqlError::UnknownTable(q.value.clone()))?;
                    out.extend(rel.columns.iter().cloned());
                }
                SelectItem::Expr { expr, alias } => {
                    self.bind_expr(expr, &scopes, &[])?;
                    let dtype = match expr {
                        Expr::Column {
                            qualifier: Some(q),
                            name,
                        } => scope
                            .iter()
                            .find(|r| r.alias.eq_ignore_ascii_case(&q.value))
                            .and_then(|r| r.column(&name.value))
                            .and_then(|(_, d)| *d),
                        _ => None,
                    };
                    let name = match (alias, &*expr) {
                        (Some(a), _) => a.value.clone(),
                        (None, Expr::Column { name, .. }) => name.value.clone(),
                        (None, e) => e.to_string(),
                    };
                    out.push((name, dtype));
                }
            }
        }
        for g in &mut s.group_by {
            self.bind_expr(g, &scopes, &aliases)?;
        }
        if let Some(h) = &mut s.having {
            self.bind_expr(h, &scopes, &aliases)?;
        }
        Ok((out, scope, aliases))
    }

    fn resolve(
        &mut self,
        qualifier: Option<&Ident>,
        name: &Ident,
        scopes: &Scopes,
        aliases: &[String],
    ) -> Result<Resolution, SqlError> {
        match qualifier {
            Some(q) => {
                for scope in scopes.iter().rev() {
                    if let Some(rel) = scope.iter().find(|r| r.alias.eq_ignore_ascii_case(&q.value)) {
                        let (_, dtype) = rel.column(&name.value).ok_or_else(|| SqlError::UnknownColumn {
                            qualifier: q.value.clone(),
                            name: name.value.clone(),
                        })?;
                        self.record_type(&rel.alias, &name.value, *dtype);
                        return Ok(Resolution::Qualified(rel.alias.clone()));
                    }
                }
                Err(SqlError::UnknownColumn {
                    qualifier: q.value.clone(),
                    name: name.value.clone(),
                })
            }
            None => {
                for scope in scopes.iter().rev() {
                    let hits: Vec<&Rel> = scope.iter().filter(|r| r.column(&name.value).is_some()).collect();
                    match hits.len() {
                        0 => continue,
                        1 => {
                            let rel = hits[0];
                            let dtype = rel.column(&name.value).and_then(|(_, d)| *d);
                            let alias = rel.alias.clone();
                            self.record_type(&alias, &name.value, dtype);
                            return Ok(Resolution::Qualified(alias));
                        }
                        _ => return Err(SqlError::AmbiguousColumn(name.value.clone())),
                    }
                }
                if aliases.iter().any(|a| a.eq_ignore_ascii_case(&name.value)) {
                    return Ok(Resolution::Alias);
                }
                Ok(Resolution::Unresolved)
            }
        }
    }

    fn record_type(&mut self, alias: &str, column: &str, dtype: Option<Dtype>) {
        let key = (alias.to_ascii_lowercase(), column.to_ascii_lowercase());
        match self.types.get(&key) {
            None => {
                self.types.insert(key, dtype);
            }
            Some(existing) if *existing != dtype => {
                self.types.insert(key, None);
            }
            Some(_) => {}
        }
    }

    fn bind_expr(&mut self, e: &mut Expr, scopes: &Scopes, aliases: &[String]) -> Result<(), SqlError> {
        match e {
            Expr::Column { qualifier, name } => match self.resolve(qualifier.as_ref(), name, scopes, aliases)? {
                Resolution::Qualified(alias) => {
                    *qualifier = Some(Ident::new(alias));
                }
                Resolution::Alias => {}
                Resolution::Unresolved => {
                    if name.quoted && qualifier.is_none() {
                        *e = Expr::Literal(Literal::String(name.value.clone()));
                    } else {
                        return Err(SqlError::UnknownColumn {
                            qualifier: String::new(),
                            name: name.value.clone(),
                        });
                    }
                }
            },
            Expr::Literal(_) => {}
            Expr::Unary { expr, .. } | Expr::IsNull { expr, .. } | Expr::Cast { expr, .. } => {
                self.bind_expr(expr, scopes, aliases)?
            }
            Expr::Binary { left, right, .. } => {
                self.bind_expr(left, scopes, aliases)?;
                self.bind_expr(right, scopes, aliases)?;
            }
            Expr::InList { expr, list, .. } => {
                self.bind_expr(expr, scopes, aliases)?;
                for x in list {
                    self.bind_expr(x, scopes, aliases)?;
                }
            }
            Expr::InSubquery { expr, subquery, .. } => {
                self.bind_expr(expr, scopes, aliases)?;
                self.bind_query(subquery, scopes)?;
            }
            Expr::Between { expr, low, high, .. } => {
                self.bind_expr(expr, scopes, aliases)?;
                self.bind_expr(low, scopes, aliases)?;
                self.bind_expr(high, scopes, aliases)?;
            }
            Expr::Like { expr, pattern, .. } => {
                self.bind_expr(expr, scopes, aliases)?;
                self.bind_expr(pattern, scopes, aliases)?;
            }
            Expr::Exists { subquery, .. } | Expr::Subquery(subquery) => {
                self.bind_query(subquery, scopes)?;
            }
            Expr::Function { args, .. } => {
                if let FunctionArgs::List(list) = args {
                    for x in list {
                        self.bind_expr(x, scopes, aliases)?;
                    }
                }
            }
            Expr::Case {
                operand,
                branches,
                else_result,
            } => {
                if let Some(o) = operand {
                    self.bind_expr(o, scopes, aliases)?;
                }
                for (w, t) in branches {
                    self.bind_expr(w, scopes, aliases)?;
                    self.bind_expr(t, scopes, aliases)?;
                }
                if let Some(x) = else_result {
                    self.bind_expr(x, scopes, aliases)?;
                }
            }
        }
        Ok(())
    }
}
