use super::ast::*;
use super::bind::{bind_with, ParsedQuery};
use super::plan::literal_value;
use super::SqlError;
use crate::scalar::ScalarSignature;
use crate::schema::RelationalView;
use crate::value::{parse_numeric, Dtype, Value};

/// SQLite core and aggregate functions accepted without a registry entry.
pub const BUILTIN_FUNCTIONS: &[&str] = &[
    "abs",
    "avg",
    "ceil",
    "ceiling",
    "char",
    "coalesce",
    "count",
    "date",
    "datetime",
    "exp",
    "floor",
    "group_concat",
    "hex",
    "ifnull",
    "iif",
    "instr",
    "julianday",
    "length",
    "like",
    "ln",
    "log",
    "log10",
    "lower",
    "ltrim",
    "max",
    "min",
    "mod",
    "nullif",
    "pow",
    "power",
    "printf",
    "quote",
    "random",
    "replace",
    "round",
    "rtrim",
    "sign",
    "sqrt",
    "strftime",
    "substr",
    "substring",
    "sum",
    "time",
    "total",
    "trim",
    "typeof",
    "unicode",
    "upper",
];

#[derive(Debug, Clone, PartialEq)]
enum ArgType {
    Known(Dtype),
    /// A literal whose text may or may not coerce.
    Literal(Value),
    Unknown,
}

struct Checker<'a> {
    parsed: &'a ParsedQuery,
    registry: &'a [ScalarSignature],
}

impl Checker<'_> {
    fn signature(&self, name: &str) -> Option<&ScalarSignature> {
        self.registry.iter().find(|s| s.name.eq_ignore_ascii_case(name))
    }

    fn check_query(&self, q: &Query) -> Result<(), SqlError> {
        self.check_set(&q.body)?;
        for o in &q.order_by {
            self.check_expr(&o.expr)?;
        }
        for e in q.limit.iter().chain(q.offset.iter()) {
            self.check_expr(e)?;
        }
        Ok(())
    }

    fn check_set(&self, body: &SetExpr) -> Result<(), SqlError> {
        match body {
            SetExpr::Select(s) => {
                for twj in &s.from {
                    for rel in std::iter::once(&twj.relation).chain(twj.joins.iter().map(|j| &j.relation)) {
                        if let TableFactor::Derived { subquery, .. } = rel {
                            self.check_query(subquery)?;
                        }
                    }
                    for j in &twj.joins {
                        if let Some(on) = &j.on {
                            self.check_expr(on)?;
                        }
                    }
                }
                for p in &s.projection {
                    if let SelectItem::Expr { expr, .. } = p {
                        self.check_expr(expr)?;
                    }
                }
                for e in s.selection.iter().chain(&s.group_by).chain(s.having.iter()) {
                    self.check_expr(e)?;
                }
                Ok(())
            }
            SetExpr::SetOp { left, right, .. } => {
                self.check_set(left)?;
                self.check_set(right)
            }
        }
    }

    fn check_expr<'e>(&self, e: &'e Expr) -> Result<(), SqlError> {
        let mut result = Ok(());
        let mut subqueries: Vec<&'e Query> = Vec::new();
        e.walk(&mut |x| {
            if result.is_err() {
                return;
            }
            match x {
                Expr::Function { name, args, .. } => result = self.check_call(&name.value, args),
                Expr::Subquery(q) | Expr::Exists { subquery: q, .. } | Expr::InSubquery { subquery: q, .. } => {
                    subqueries.push(q);
                }
                _ => {}
            }
        });
        result?;
        for q in subqueries {
            self.check_query(q)?;
        }
        Ok(())
    }

    fn check_call(&self, name: &str, args: &FunctionArgs) -> Result<(), SqlError> {
        if BUILTIN_FUNCTIONS.iter().any(|b| b.eq_ignore_ascii_case(name)) {
            return Ok(());
        }
        let sig = self
            .signature(name)
            .ok_or_else(|| SqlError::UnknownFunction(name.to_string()))?;
        let list: &[Expr] = match args {
            FunctionArgs::Star => &[],
            FunctionArgs::List(l) => l,
        };
        if list.len() != sig.params.len() {
            return Err(SqlError::ArityMismatch {
                name: sig.name.clone(),
                expected: sig.params.len(),
                got: list.len(),
            });
        }
        for (i, (arg, param)) in list.iter().zip(&sig.params).enumerate() {
            let found = self.arg_type(arg);
            if !coercible(&found, param.dtype) {
                return Err(SqlError::TypeMismatch {
                    function: sig.name.clone(),
                    argument: i + 1,
                    expected: param.dtype,
                    found: match found {
                        ArgType::Known(d) => d.to_string(),
                        ArgType::Literal(v) => v.to_string(),
                        ArgType::Unknown => "unknown".into(),
                    },
                });
            }
        }
        Ok(())
    }

    fn arg_type(&self, e: &Expr) -> ArgType {
        match e {
            Expr::Literal(l) => ArgType::Literal(literal_value(l)),
            Expr::Unary {
                op: UnaryOp::Minus,
                expr,
            } => match &**expr {
                Expr::Literal(Literal::Number(n)) => parse_numeric(&format!("-{n}"))
                    .map(ArgType::Literal)
                    .unwrap_or(ArgType::Unknown),
                _ => ArgType::Unknown,
            },
            Expr::Column {
                qualifier: Some(q),
                name,
            } => self
                .parsed
                .column_dtype(&q.value, &name.value)
                .map(|d| match d {
                    // Stored text may hold numbers; SQLite converts at call time.
                    Dtype::Text => ArgType::Unknown,
                    d => ArgType::Known(d),
                })
                .unwrap_or(ArgType::Unknown),
            Expr::Function { name, .. } => self
                .signature(&name.value)
                .map(|s| ArgType::Known(s.output.1))
                .unwrap_or(ArgType::Unknown),
            _ => ArgType::Unknown,
        }
    }
}

fn coercible(found: &ArgType, expected: Dtype) -> bool {
    match (found, expected) {
        (ArgType::Unknown, _) | (_, Dtype::Text) => true,
        (ArgType::Known(d), _) => d.is_numeric() || *d == Dtype::Boolean,
        (ArgType::Literal(v), _) => match v {
            Value::Null | Value::Integer(_) | Value::Real(_) | Value::Boolean(_) => true,
            Value::Text(s) => parse_numeric(s).is_some(),
        },
    }
}

/// Checks every non-built-in call in `sql` against `registry` and returns
/// the SQL unchanged. Only base tables of `view` are visible.
pub fn validate_scalar_sql(sql: &str, view: &RelationalView, registry: &[ScalarSignature]) -> Result<String, SqlError> {
    let parsed = bind_with(sql, view, false)?;
    Checker {
        parsed: &parsed,
        registry,
    }
    .check_query(&parsed.query)?;
    Ok(sql.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::signatures;
    use crate::testutil::{poker_view, POKER_172_SL};

    #[test]
    fn composition_accepted() {
        let sql = validate_scalar_sql(POKER_172_SL, &poker_view(), &signatures()).unwrap();
        assert_eq!(sql, POKER_172_SL);
    }

    #[test]
    fn text_literal_for_number_rejected() {
        let err =
            validate_scalar_sql("SELECT is_fibonacci('abc') FROM people", &poker_view(), &signatures()).unwrap_err();
        assert!(matches!(err, SqlError::TypeMismatch { argument: 1, .. }), "{err:?}");
    }

    #[test]
    fn nested_text_output_for_number_rejected() {
        assert!(matches!(
            validate_scalar_sql(
                "SELECT is_prime(reverse_string(Name)) FROM people",
                &poker_view(),
                &signatures()
            ),
            Err(SqlError::TypeMismatch { .. })
        ));
    }

    #[test]
    fn unknown_function_and_arity() {
        assert_eq!(
            validate_scalar_sql("SELECT frobnicate(Name) FROM people", &poker_view(), &signatures()).unwrap_err(),
            SqlError::UnknownFunction("frobnicate".into())
        );
        assert!(matches!(
            validate_scalar_sql("SELECT is_prime(1, 2) FROM people", &poker_view(), &signatures()),
            Err(SqlError::ArityMismatch {
                expected: 1,
                got: 2,
                ..
            })
        ));
    }

    #[test]
    fn virtual_tables_invisible() {
        assert!(matches!(
            validate_scalar_sql(
                "SELECT truth FROM is_prime WHERE number = 3",
                &poker_view(),
                &signatures()
            ),
            Err(SqlError::UnknownTable(_))
        ));
    }

    #[test]
    fn subqueries_checked() {
        assert!(validate_scalar_sql(
            "SELECT Name FROM people WHERE People_ID IN (SELECT People_ID FROM poker_player WHERE frob(Earnings))",
            &poker_view(),
            &signatures()
        )
        .is_err());
    }
}
