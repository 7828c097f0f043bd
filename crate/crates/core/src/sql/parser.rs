//! Recursive-descent parser for the supported SELECT dialect.

use super::ast::*;
use super::lexer::{tokenize, Spanned, Token};
use super::SqlError;

pub fn parse_query_text(sql: &str) -> Result<Query, SqlError> {
    let tokens = tokenize(sql).map_err(|e| SqlError::Syntax {
        message: e.message,
        offset: e.offset,
    })?;
    let mut p = Parser::new(tokens, sql.len());
    if p.peek_keyword("WITH") {
        return Err(p.error("common table expressions are not supported"));
    }
    let q = p.parse_query()?;
    while p.consume(&Token::Semicolon) {}
    if let Some(t) = p.peek() {
        return Err(p.error(format!("unexpected token `{t}`")));
    }
    Ok(q)
}

pub(crate) struct Parser {
    tokens: Vec<Spanned>,
    pos: usize,
    end_offset: usize,
}

impl Parser {
    pub(crate) fn new(tokens: Vec<Spanned>, end_offset: usize) -> Self {
        Parser {
            tokens,
            pos: 0,
            end_offset,
        }
    }

    pub(crate) fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|t| &t.token)
    }

    fn peek_at(&self, n: usize) -> Option<&Token> {
        self.tokens.get(self.pos + n).map(|t| &t.token)
    }

    pub(crate) fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).map(|t| t.token.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    pub(crate) fn offset(&self) -> usize {
        self.tokens.get(self.pos).map(|t| t.offset).unwrap_or(self.end_offset)
    }

    pub(crate) fn error(&self, message: impl Into<String>) -> SqlError {
        SqlError::Syntax {
            message: message.into(),
            offset: self.offset(),
        }
    }

    pub(crate) fn peek_keyword(&self, kw: &str) -> bool {
        self.peek().is_some_and(|t| t.is_keyword(kw))
    }

    pub(crate) fn consume_keyword(&mut self, kw: &str) -> bool {
        if self.peek_keyword(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub(crate) fn expect_keyword(&mut self, kw: &str) -> Result<(), SqlError> {
        if self.consume_keyword(kw) {
            Ok(())
        } else {
            Err(self.error(format!("expected {kw}")))
        }
    }

    pub(crate) fn consume(&mut self, t: &Token) -> bool {
        if self.peek() == Some(t) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub(crate) fn expect(&mut self, t: &Token) -> Result<(), SqlError> {
        if self.consume(t) {
            Ok(())
        } else {
            Err(self.error(format!("expected `{t}`")))
        }
    }

    /// Any identifier, reserved words included (used after `.` and in DDL).
    pub(crate) fn parse_any_ident(&mut self) -> Result<Ident, SqlError> {
        match self.next() {
            Some(Token::Word(w)) => Ok(Ident::new(w)),
            Some(Token::QuotedIdent(w)) => Ok(Ident { value: w, quoted: true }),
            Some(Token::Str(s)) => Ok(Ident { value: s, quoted: true }),
            _ => {
                self.pos = self.pos.saturating_sub(1);
                Err(self.error("expected identifier"))
            }
        }
    }

    fn parse_ident(&mut self) -> Result<Ident, SqlError> {
        match self.peek() {
            Some(Token::Word(w)) if is_reserved(w) => Err(self.error(format!("unexpected keyword {w}"))),
            _ => self.parse_any_ident(),
        }
    }

    fn parse_optional_alias(&mut self) -> Result<Option<Ident>, SqlError> {
        if self.consume_keyword("AS") {
            return self.parse_any_ident().map(Some);
        }
        match self.peek() {
            Some(Token::Word(w)) if !is_reserved(w) => self.parse_any_ident().map(Some),
            Some(Token::QuotedIdent(_)) => self.parse_any_ident().map(Some),
            _ => Ok(None),
        }
    }

    pub(crate) fn parse_query(&mut self) -> Result<Query, SqlError> {
        let body = self.parse_set_expr()?;
        let mut order_by = Vec::new();
        if self.consume_keyword("ORDER") {
            self.expect_keyword("BY")?;
            loop {
                let expr = self.parse_expr()?;
                let desc = if self.consume_keyword("DESC") {
                    Some(true)
                } else if self.consume_keyword("ASC") {
                    Some(false)
                } else {
                    None
                };
                if self.peek_keyword("NULLS") {
                    return Err(self.error("NULLS FIRST/LAST is not supported"));
                }
                order_by.push(OrderItem { expr, desc });
                if !self.consume(&Token::Comma) {
                    break;
                }
            }
        }
        let mut limit = None;
        let mut offset = None;
        if self.consume_keyword("LIMIT") {
            let first = self.parse_expr()?;
            if self.consume(&Token::Comma) {
                offset = Some(first);
                limit = Some(self.parse_expr()?);
            } else {
                limit = Some(first);
                if self.consume_keyword("OFFSET") {
                    offset = Some(self.parse_expr()?);
                }
            }
        }
        Ok(Query {
            body,
            order_by,
            limit,
            offset,
        })
    }

    fn parse_set_expr(&mut self) -> Result<SetExpr, SqlError> {
        let mut left = SetExpr::Select(Box::new(self.parse_select()?));
        loop {
            let op = if self.consume_keyword("UNION") {
                SetOperator::Union
            } else if self.consume_keyword("INTERSECT") {
                SetOperator::Intersect
            } else if self.consume_keyword("EXCEPT") {
                SetOperator::Except
            } else {
                break;
            };
            let all = self.consume_keyword("ALL");
            let right = SetExpr::Select(Box::new(self.parse_select()?));
            left = SetExpr::SetOp {
                op,
                all,
                left: Box::new(left),
                right: Box::new(right),
            };
        }
        Ok(left)
    }

    fn parse_select(&mut self) -> Result<Select, SqlError> {
        if self.peek() == Some(&Token::LParen) {
            return Err(self.error("parenthesized set-operation operands are not supported"));
        }
        self.expect_keyword("SELECT")?;
        let distinct = if self.consume_keyword("DISTINCT") {
            true
        } else {
            self.consume_keyword("ALL");
            false
        };
        let mut projection = Vec::new();
        loop {
            projection.push(self.parse_select_item()?);
            if !self.consume(&Token::Comma) {
                break;
            }
        }
        let mut from = Vec::new();
        if self.consume_keyword("FROM") {
            loop {
                from.push(self.parse_table_with_joins()?);
                if !self.consume(&Token::Comma) {
                    break;
                }
            }
        }
        let selection = if self.consume_keyword("WHERE") {
            Some(self.parse_expr()?)
        } else {
            None
        };
        let mut group_by = Vec::new();
        if self.consume_keyword("GROUP") {
            self.expect_keyword("BY")?;
            loop {
                group_by.push(self.parse_expr()?);
                if !self.consume(&Token::Comma) {
                    break;
                }
            }
        }
        let having = if self.consume_keyword("HAVING") {
            Some(self.parse_expr()?)
        } else {
            None
        };
        if self.peek_keyword("WINDOW") {
            return Err(self.error("window clauses are not supported"));
        }
        Ok(Select {
            distinct,
            projection,
            from,
            selection,
            group_by,
            having,
        })
    }

    fn parse_select_item(&mut self) -> Result<SelectItem, SqlError> {
        if self.consume(&Token::Op("*")) {
            return Ok(SelectItem::Wildcard);
        }
        if matches!(self.peek(), Some(Token::Word(_) | Token::QuotedIdent(_)))
            && self.peek_at(1) == Some(&Token::Dot)
            && self.peek_at(2) == Some(&Token::Op("*"))
        {
            let q = self.parse_any_ident()?;
            self.pos += 2;
            return Ok(SelectItem::QualifiedWildcard(q));
        }
        let expr = self.parse_expr()?;
        let alias = self.parse_optional_alias()?;
        Ok(SelectItem::Expr { expr, alias })
    }

    fn parse_table_with_joins(&mut self) -> Result<TableWithJoins, SqlError> {
        let relation = self.parse_table_factor()?;
        let mut joins = Vec::new();
        loop {
            for kw in ["LEFT", "RIGHT", "FULL", "NATURAL", "OUTER"] {
                if self.peek_keyword(kw) {
                    return Err(self.error(format!("{kw} joins are not supported")));
                }
            }
            let cross = if self.consume_keyword("CROSS") {
                self.expect_keyword("JOIN")?;
                true
            } else if self.consume_keyword("INNER") {
                self.expect_keyword("JOIN")?;
                false
            } else if self.consume_keyword("JOIN") {
                false
            } else {
                break;
            };
            let relation = self.parse_table_factor()?;
            let on = if !cross && self.consume_keyword("ON") {
                Some(self.parse_expr()?)
            } else {
                None
            };
            if self.peek_keyword("USING") {
                return Err(self.error("JOIN ... USING is not supported"));
            }
            joins.push(Join { relation, on });
        }
        Ok(TableWithJoins { relation, joins })
    }

    fn parse_table_factor(&mut self) -> Result<TableFactor, SqlError> {
        if self.consume(&Token::LParen) {
            if !self.peek_keyword("SELECT") {
                return Err(self.error("parenthesized joins are not supported"));
            }
            let subquery = self.parse_query()?;
            self.expect(&Token::RParen)?;
            let alias = self.parse_optional_alias()?;
            return Ok(TableFactor::Derived {
                subquery: Box::new(subquery),
                alias,
            });
        }
        let name = self.parse_ident()?;
        if self.peek() == Some(&Token::Dot) {
            return Err(self.error("schema-qualified table names are not supported"));
        }
        if self.peek() == Some(&Token::LParen) {
            return Err(self.error("table-valued function syntax is not supported"));
        }
        let alias = self.parse_optional_alias()?;
        Ok(TableFactor::Table { name, alias })
    }

    pub(crate) fn parse_expr(&mut self) -> Result<Expr, SqlError> {
        self.parse_or()
    }

    fn parse_or(&mut self) -> Result<Expr, SqlError> {
        let mut left = self.parse_and()?;
        while self.consume_keyword("OR") {
            let right = self.parse_and()?;
            left = Expr::binary(left, BinaryOp::Or, right);
        }
        Ok(left)
    }

    fn parse_and(&mut self) -> Result<Expr, SqlError> {
        let mut left = self.parse_not()?;
        while self.consume_keyword("AND") {
            let right = self.parse_not()?;
            left = Expr::binary(left, BinaryOp::And, right);
        }
        Ok(left)
    }

    fn parse_not(&mut self) -> Result<Expr, SqlError> {
        if self.consume_keyword("NOT") {
            let inner = self.parse_not()?;
            return Ok(match inner {
                Expr::Exists { subquery, negated } => Expr::Exists {
                    subquery,
                    negated: !negated,
                },
                e => Expr::Unary {
                    op: UnaryOp::Not,
                    expr: Box::new(e),
                },
            });
        }
        self.parse_comparison()
    }

    fn parse_comparison(&mut self) -> Result<Expr, SqlError> {
        let mut left = self.parse_additive()?;
        loop {
            let op = match self.peek() {
                Some(Token::Op("=")) | Some(Token::Op("==")) => Some(BinaryOp::Eq),
                Some(Token::Op("!=")) | Some(Token::Op("<>")) => Some(BinaryOp::NotEq),
                Some(Token::Op("<")) => Some(BinaryOp::Lt),
                Some(Token::Op("<=")) => Some(BinaryOp::LtEq),
                Some(Token::Op(">")) => Some(BinaryOp::Gt),
                Some(Token::Op(">=")) => Some(BinaryOp::GtEq),
                _ => None,
            };
            if let Some(op) = op {
                self.pos += 1;
                let right = self.parse_additive()?;
                left = Expr::binary(left, op, right);
                continue;
            }
            if self.consume_keyword("ISNULL") {
                left = Expr::IsNull {
                    expr: Box::new(left),
                    negated: false,
                };
                continue;
            }
            if self.consume_keyword("NOTNULL") {
                left = Expr::IsNull {
                    expr: Box::new(left),
                    negated: true,
                };
                continue;
            }
            if self.consume_keyword("IS") {
                let negated = self.consume_keyword("NOT");
                if !self.consume_keyword("NULL") {
                    return Err(self.error("only IS [NOT] NULL is supported"));
                }
                left = Expr::IsNull {
                    expr: Box::new(left),
                    negated,
                };
                continue;
            }
            let save = self.pos;
            let negated = self.consume_keyword("NOT");
            if self.consume_keyword("IN") {
                self.expect(&Token::LParen)?;
                if self.peek_keyword("SELECT") {
                    let subquery = self.parse_query()?;
                    self.expect(&Token::RParen)?;
                    left = Expr::InSubquery {
                        expr: Box::new(left),
                        subquery: Box::new(subquery),
                        negated,
                    };
                } else {
                    let mut list = Vec::new();
                    if !self.consume(&Token::RParen) {
                        loop {
                            list.push(self.parse_expr()?);
                            if !self.consume(&Token::Comma) {
                                break;
                            }
                        }
                        self.expect(&Token::RParen)?;
                    }
                    left = Expr::InList {
                        expr: Box::new(left),
                        list,
                        negated,
                    };
                }
                continue;
            }
            if self.consume_keyword("BETWEEN") {
                let low = self.parse_additive()?;
                self.expect_keyword("AND")?;
                let high = self.parse_additive()?;
                left = Expr::Between {
                    expr: Box::new(left),
                    negated,
                    low: Box::new(low),
                    high: Box::new(high),
                };
                continue;
            }
            if self.consume_keyword("LIKE") {
                let pattern = self.parse_additive()?;
                if self.peek_keyword("ESCAPE") {
                    return Err(self.error("LIKE ... ESCAPE is not supported"));
                }
                left = Expr::Like {
                    expr: Box::new(left),
                    negated,
                    pattern: Box::new(pattern),
                };
                continue;
            }
            if self.peek_keyword("GLOB") || self.peek_keyword("REGEXP") || self.peek_keyword("MATCH") {
                return Err(self.error("pattern operator is not supported"));
            }
            self.pos = save;
            break;
        }
        Ok(left)
    }

    fn parse_additive(&mut self) -> Result<Expr, SqlError> {
        let mut left = self.parse_multiplicative()?;
        loop {
            let op = match self.peek() {
                Some(Token::Op("+")) => BinaryOp::Plus,
                Some(Token::Op("-")) => BinaryOp::Minus,
                _ => break,
            };
            self.pos += 1;
            let right = self.parse_multiplicative()?;
            left = Expr::binary(left, op, right);
        }
        Ok(left)
    }

    fn parse_multiplicative(&mut self) -> Result<Expr, SqlError> {
        let mut left = self.parse_concat()?;
        loop {
            let op = match self.peek() {
                Some(Token::Op("*")) => BinaryOp::Multiply,
                Some(Token::Op("/")) => BinaryOp::Divide,
                Some(Token::Op("%")) => BinaryOp::Modulo,
                _ => break,
            };
            self.pos += 1;
            let right = self.parse_concat()?;
            left = Expr::binary(left, op, right);
        }
        Ok(left)
    }

    fn parse_concat(&mut self) -> Result<Expr, SqlError> {
        let mut left = self.parse_unary()?;
        while self.consume(&Token::Op("||")) {
            let right = self.parse_unary()?;
            left = Expr::binary(left, BinaryOp::Concat, right);
        }
        Ok(left)
    }

    fn parse_unary(&mut self) -> Result<Expr, SqlError> {
        let op = match self.peek() {
            Some(Token::Op("-")) => UnaryOp::Minus,
            Some(Token::Op("+")) => UnaryOp::Plus,
            _ => return self.parse_primary(),
        };
        self.pos += 1;
        let inner = self.parse_unary()?;
        if let (UnaryOp::Minus, Expr::Literal(Literal::Number(n))) = (op, &inner) {
            if !n.starts_with('-') {
                return Ok(Expr::Literal(Literal::Number(format!("-{n}"))));
            }
        }
        Ok(Expr::Unary {
            op,
            expr: Box::new(inner),
        })
    }

    fn parse_primary(&mut self) -> Result<Expr, SqlError> {
        let tok = match self.peek() {
            Some(t) => t.clone(),
            None => return Err(self.error("unexpected end of input")),
        };
        match tok {
            Token::Number(n) => {
                self.pos += 1;
                Ok(Expr::Literal(Literal::Number(n)))
            }
            Token::Str(s) => {
                self.pos += 1;
                Ok(Expr::Literal(Literal::String(s)))
            }
            Token::LParen => {
                self.pos += 1;
                if self.peek_keyword("SELECT") {
                    let q = self.parse_query()?;
                    self.expect(&Token::RParen)?;
                    return Ok(Expr::Subquery(Box::new(q)));
                }
                let e = self.parse_expr()?;
                if self.peek() == Some(&Token::Comma) {
                    return Err(self.error("row values are not supported"));
                }
                self.expect(&Token::RParen)?;
                Ok(e)
            }
            Token::QuotedIdent(_) => self.parse_column_or_function(),
            Token::Word(w) => {
                let upper = w.to_ascii_uppercase();
                match upper.as_str() {
                    "TRUE" => {
                        self.pos += 1;
                        Ok(Expr::Literal(Literal::Boolean(true)))
                    }
                    "FALSE" => {
                        self.pos += 1;
                        Ok(Expr::Literal(Literal::Boolean(false)))
                    }
                    "NULL" => {
                        self.pos += 1;
                        Ok(Expr::Literal(Literal::Null))
                    }
                    "EXISTS" => {
                        self.pos += 1;
                        self.expect(&Token::LParen)?;
                        let q = self.parse_query()?;
                        self.expect(&Token::RParen)?;
                        Ok(Expr::Exists {
                            subquery: Box::new(q),
                            negated: false,
                        })
                    }
                    "CASE" => {
                        self.pos += 1;
                        self.parse_case()
                    }
                    "CAST" => {
                        self.pos += 1;
                        self.expect(&Token::LParen)?;
                        let expr = self.parse_expr()?;
                        self.expect_keyword("AS")?;
                        let type_name = self.parse_type_name()?;
                        self.expect(&Token::RParen)?;
                        Ok(Expr::Cast {
                            expr: Box::new(expr),
                            type_name,
                        })
                    }
                    _ if is_reserved(&w) => Err(self.error(format!("unexpected keyword {w}"))),
                    _ => self.parse_column_or_function(),
                }
            }
            other => Err(self.error(format!("unexpected token `{other}`"))),
        }
    }

    pub(crate) fn parse_type_name(&mut self) -> Result<String, SqlError> {
        let mut parts = Vec::new();
        while let Some(Token::Word(w)) = self.peek() {
            const CONSTRAINT_WORDS: &[&str] = &[
                "CONSTRAINT",
                "DEFAULT",
                "NOT",
                "NULL",
                "UNIQUE",
                "CHECK",
                "COLLATE",
                "REFERENCES",
                "PRIMARY",
            ];
            if is_reserved(w) || CONSTRAINT_WORDS.iter().any(|k| k.eq_ignore_ascii_case(w)) {
                break;
            }
            parts.push(w.clone());
            self.pos += 1;
        }
        if parts.is_empty() {
            return Err(self.error("expected type name"));
        }
        let mut name = parts.join(" ");
        if self.consume(&Token::LParen) {
            let mut args = Vec::new();
            loop {
                match self.next() {
                    Some(Token::Number(n)) => args.push(n),
                    _ => return Err(self.error("expected numeric type argument")),
                }
                if !self.consume(&Token::Comma) {
                    break;
                }
            }
            self.expect(&Token::RParen)?;
            name = format!("{name}({})", args.join(","));
        }
        Ok(name)
    }

    fn parse_case(&mut self) -> Result<Expr, SqlError> {
        let operand = if self.peek_keyword("WHEN") {
            None
        } else {
            Some(Box::new(self.parse_expr()?))
        };
        let mut branches = Vec::new();
        while self.consume_keyword("WHEN") {
            let w = self.parse_expr()?;
            self.expect_keyword("THEN")?;
            let t = self.parse_expr()?;
            branches.push((w, t));
        }
        if branches.is_empty() {
            return Err(self.error("CASE without WHEN"));
        }
        let else_result = if self.consume_keyword("ELSE") {
            Some(Box::new(self.parse_expr()?))
        } else {
            None
        };
        self.expect_keyword("END")?;
        Ok(Expr::Case {
            operand,
            branches,
            else_result,
        })
    }

    fn parse_column_or_function(&mut self) -> Result<Expr, SqlError> {
        let first = self.parse_any_ident()?;
        if self.consume(&Token::Dot) {
            let name = self.parse_any_ident()?;
            if self.peek() == Some(&Token::Dot) {
                return Err(self.error("three-part column names are not supported"));
            }
            return Ok(Expr::Column {
                qualifier: Some(first),
                name,
            });
        }
        if self.consume(&Token::LParen) {
            let (distinct, args) = if self.consume(&Token::Op("*")) {
                (false, FunctionArgs::Star)
            } else if self.consume(&Token::RParen) {
                self.pos -= 1;
                (false, FunctionArgs::List(Vec::new()))
            } else {
                let distinct = self.consume_keyword("DISTINCT");
                let mut list = Vec::new();
                loop {
                    list.push(self.parse_expr()?);
                    if !self.consume(&Token::Comma) {
                        break;
                    }
                }
                (distinct, FunctionArgs::List(list))
            };
            self.expect(&Token::RParen)?;
            if self.peek_keyword("OVER") || self.peek_keyword("FILTER") {
                return Err(self.error("window functions are not supported"));
            }
            return Ok(Expr::Function {
                name: first,
                distinct,
                args,
            });
        }
        Ok(Expr::Column {
            qualifier: None,
            name: first,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roundtrip(sql: &str) -> String {
        parse_query_text(sql).unwrap().to_string()
    }

    #[test]
    fn parses_spider_style_queries() {
        assert_eq!(
            roundtrip("SELECT Num_of_Staff , Open_Year FROM museum WHERE name = 'Plaza Museum'"),
            "SELECT Num_of_Staff, Open_Year FROM museum WHERE name = 'Plaza Museum'"
        );
        assert_eq!(
            roundtrip(
                "SELECT t1.name FROM visitor AS t1 JOIN visit AS t2 ON t1.id = t2.visitor_id \
                 GROUP BY t2.visitor_id ORDER BY sum(t2.Total_spent) DESC LIMIT 1"
            ),
            "SELECT t1.name FROM visitor AS t1 JOIN visit AS t2 ON t1.id = t2.visitor_id \
             GROUP BY t2.visitor_id ORDER BY sum(t2.Total_spent) DESC LIMIT 1"
        );
        assert_eq!(
            roundtrip("select count(*) from people where Nationality != \"Russia\""),
            "SELECT count(*) FROM people WHERE Nationality <> \"Russia\""
        );
    }

    #[test]
    fn set_operations_and_subqueries() {
        let q = "SELECT name FROM a WHERE x NOT IN (SELECT y FROM b) INTERSECT SELECT name FROM c WHERE z > (SELECT avg(z) FROM c)";
        assert_eq!(
            roundtrip(q),
            "SELECT name FROM a WHERE x NOT IN (SELECT y FROM b) INTERSECT SELECT name FROM c WHERE z > (SELECT avg(z) FROM c)"
        );
    }

    #[test]
    fn precedence_is_preserved_on_print() {
        assert_eq!(
            roundtrip("SELECT a FROM t WHERE (x = 1 OR y = 2) AND z = 3"),
            "SELECT a FROM t WHERE (x = 1 OR y = 2) AND z = 3"
        );
        assert_eq!(roundtrip("SELECT (a + b) * c FROM t"), "SELECT (a + b) * c FROM t");
        assert_eq!(roundtrip("SELECT a - (b - c) FROM t"), "SELECT a - (b - c) FROM t");
    }

    #[test]
    fn scalar_function_composition() {
        assert_eq!(
            roundtrip("SELECT p.Name FROM people as p WHERE p.Nationality !=\"Russia\" AND is_fibonacci(count_syllables(p.Name)) = true"),
            "SELECT p.Name FROM people AS p WHERE p.Nationality <> \"Russia\" AND is_fibonacci(count_syllables(p.Name)) = TRUE"
        );
    }

    #[test]
    fn rejects_unsupported_constructs() {
        for sql in [
            "SELECT a FROM t LEFT JOIN u ON t.x = u.x",
            "WITH c AS (SELECT 1) SELECT * FROM c",
            "SELECT row_number() OVER (ORDER BY a) FROM t",
            "DELETE FROM t",
            "SELECT a FROM t WHERE",
            "SELECT a FROM t extra garbage",
        ] {
            assert!(matches!(parse_query_text(sql), Err(SqlError::Syntax { .. })), "{sql}");
        }
    }

    #[test]
    fn between_like_case_cast() {
        assert_eq!(
            roundtrip("SELECT CASE WHEN a BETWEEN 1 AND 2 THEN 'x' ELSE 'y' END FROM t WHERE n LIKE '%a%' AND CAST(b AS int) > -3"),
            "SELECT CASE WHEN a BETWEEN 1 AND 2 THEN 'x' ELSE 'y' END FROM t WHERE n LIKE '%a%' AND CAST(b AS int) > -3"
        );
    }
}
