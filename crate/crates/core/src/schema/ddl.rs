//! CREATE TABLE parsing for the accepted DDL subset.

use crate::sql::ast::Ident;
use crate::sql::lexer::{tokenize, Token};
use crate::sql::parser::Parser;
use crate::sql::SqlError;
use crate::value::Dtype;

use super::SchemaError;

#[derive(Debug, Clone, PartialEq)]
pub struct ColumnDdl {
    pub name: String,
    pub sql_type: String,
    pub dtype: Dtype,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForeignKey {
    pub columns: Vec<String>,
    pub foreign_table: String,
    /// Empty when the clause references the foreign table's primary key implicitly.
    pub referred_columns: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TableDdl {
    pub name: String,
    pub columns: Vec<ColumnDdl>,
    pub primary_key: Vec<String>,
    pub foreign_keys: Vec<ForeignKey>,
    /// Original statement text, without the trailing semicolon.
    pub text: String,
}

impl TableDdl {
    pub fn column(&self, name: &str) -> Option<&ColumnDdl> {
        self.columns.iter().find(|c| c.name.eq_ignore_ascii_case(name))
    }
}

/// Splits on top-level semicolons, respecting quotes and comments.
fn split_statements(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut start = 0;
    let mut i = 0;
    let mut quote: Option<u8> = None;
    while i < bytes.len() {
        let b = bytes[i];
        match quote {
            Some(q) => {
                if b == q {
                    quote = None;
                }
            }
            None => match b {
                b'\'' | b'"' | b'`' => quote = Some(b),
                b'-' if bytes.get(i + 1) == Some(&b'-') => {
                    while i < bytes.len() && bytes[i] != b'\n' {
                        i += 1;
                    }
                    continue;
                }
                b';' => {
                    out.push(&text[start..i]);
                    start = i + 1;
                }
                _ => {}
            },
        }
        i += 1;
    }
    out.push(&text[start..]);
    out.into_iter()
        .filter(|s| tokenize(s).map(|t| !t.is_empty()).unwrap_or(true))
        .collect()
}

pub fn parse_ddl(text: &str) -> Result<Vec<TableDdl>, SchemaError> {
    let mut tables = Vec::new();
    for (index, stmt) in split_statements(text).into_iter().enumerate() {
        let table = parse_create_table(stmt).map_err(|e| SchemaError::Parse {
            element: format!("statement {index}"),
            message: e,
        })?;
        tables.push(table);
    }
    Ok(tables)
}

fn sql_err(e: SqlError) -> String {
    e.to_string()
}

fn parse_create_table(stmt: &str) -> Result<TableDdl, String> {
    let tokens = tokenize(stmt).map_err(|e| e.message)?;
    let mut p = Parser::new(tokens, stmt.len());
    if !p.consume_keyword("CREATE") {
        return Err(format!(
            "unsupported statement kind `{}`",
            p.peek().map(|t| t.to_string()).unwrap_or_default()
        ));
    }
    p.consume_keyword("TEMP");
    p.consume_keyword("TEMPORARY");
    if !p.consume_keyword("TABLE") {
        return Err("only CREATE TABLE statements are supported".into());
    }
    if p.consume_keyword("IF") {
        p.expect_keyword("NOT").map_err(sql_err)?;
        p.expect_keyword("EXISTS").map_err(sql_err)?;
    }
    let name = p.parse_any_ident().map_err(sql_err)?.value;
    p.expect(&Token::LParen).map_err(sql_err)?;
    let mut table = TableDdl {
        name,
        columns: Vec::new(),
        primary_key: Vec::new(),
        foreign_keys: Vec::new(),
        text: stmt.trim().to_string(),
    };
    loop {
        if p.consume_keyword("CONSTRAINT") {
            p.parse_any_ident().map_err(sql_err)?;
        }
        if p.consume_keyword("PRIMARY") {
            p.expect_keyword("KEY").map_err(sql_err)?;
            table.primary_key = ident_list(&mut p)?;
        } else if p.consume_keyword("FOREIGN") {
            p.expect_keyword("KEY").map_err(sql_err)?;
            let columns = ident_list(&mut p)?;
            let (foreign_table, referred_columns) = references(&mut p)?;
            table.foreign_keys.push(ForeignKey {
                columns,
                foreign_table,
                referred_columns,
            });
        } else if p.consume_keyword("UNIQUE") {
            ident_list(&mut p)?;
        } else if p.peek_keyword("CHECK") {
            return Err("CHECK constraints are not supported".into());
        } else {
            column_def(&mut p, &mut table)?;
        }
        if p.consume(&Token::Comma) {
            continue;
        }
        p.expect(&Token::RParen).map_err(sql_err)?;
        break;
    }
    if let Some(t) = p.peek() {
        return Err(format!("unexpected token `{t}` after table definition"));
    }
    if table.columns.is_empty() {
        return Err(format!("table {} has no columns", table.name));
    }
    Ok(table)
}

fn ident_list(p: &mut Parser) -> Result<Vec<String>, String> {
    p.expect(&Token::LParen).map_err(sql_err)?;
    let mut out = Vec::new();
    loop {
        out.push(p.parse_any_ident().map_err(sql_err)?.value);
        p.consume_keyword("ASC");
        p.consume_keyword("DESC");
        if !p.consume(&Token::Comma) {
            break;
        }
    }
    p.expect(&Token::RParen).map_err(sql_err)?;
    Ok(out)
}

fn references(p: &mut Parser) -> Result<(String, Vec<String>), String> {
    p.expect_keyword("REFERENCES").map_err(sql_err)?;
    let table = p.parse_any_ident().map_err(sql_err)?.value;
    let cols = if p.peek() == Some(&Token::LParen) {
        ident_list(p)?
    } else {
        Vec::new()
    };
    // ON DELETE / ON UPDATE actions carry no schema information.
    while p.consume_keyword("ON") {
        p.next();
        while matches!(p.peek(), Some(Token::Word(w)) if ["CASCADE", "SET", "NULL", "DEFAULT", "RESTRICT", "NO", "ACTION"].iter().any(|k| k.eq_ignore_ascii_case(w)))
        {
            p.next();
        }
    }
    Ok((table, cols))
}

fn column_def(p: &mut Parser, table: &mut TableDdl) -> Result<(), String> {
    let name: Ident = p.parse_any_ident().map_err(sql_err)?;
    let sql_type = match p.peek() {
        Some(Token::Word(w))
            if ![
                "PRIMARY",
                "NOT",
                "NULL",
                "UNIQUE",
                "DEFAULT",
                "REFERENCES",
                "CONSTRAINT",
            ]
            .iter()
            .any(|k| k.eq_ignore_ascii_case(w)) =>
        {
            p.parse_type_name().map_err(sql_err)?
        }
        _ => String::new(),
    };
    let dtype = if sql_type.is_empty() {
        Dtype::Text
    } else {
        Dtype::from_sql_type(&sql_type)
            .ok_or_else(|| format!("unsupported column type `{sql_type}` for {}", name.value))?
    };
    loop {
        if p.consume_keyword("CONSTRAINT") {
            p.parse_any_ident().map_err(sql_err)?;
        } else if p.consume_keyword("PRIMARY") {
            p.expect_keyword("KEY").map_err(sql_err)?;
            p.consume_keyword("ASC");
            p.consume_keyword("DESC");
            p.consume_keyword("AUTOINCREMENT");
            table.primary_key = vec![name.value.clone()];
        } else if p.consume_keyword("NOT") {
            p.expect_keyword("NULL").map_err(sql_err)?;
        } else if p.consume_keyword("NULL") || p.consume_keyword("UNIQUE") {
        } else if p.consume_keyword("DEFAULT") {
            match p.next() {
                Some(Token::Op("-")) => {
                    p.next();
                }
                Some(Token::LParen) => {
                    p.parse_expr().map_err(sql_err)?;
                    p.expect(&Token::RParen).map_err(sql_err)?;
                }
                Some(_) => {}
                None => return Err("DEFAULT without value".into()),
            }
        } else if p.peek_keyword("REFERENCES") {
            let (foreign_table, referred_columns) = references(p)?;
            table.foreign_keys.push(ForeignKey {
                columns: vec![name.value.clone()],
                foreign_table,
                referred_columns,
            });
        } else {
            break;
        }
    }
    table.columns.push(ColumnDdl {
        name: name.value,
        sql_type,
        dtype,
    });
    Ok(())
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) const MUSEUM_VISIT: &str = r#"
CREATE TABLE "museum" (
"Museum_ID" int,
"Name" text,
"Num_of_Staff" int,
"Open_Year" text,
PRIMARY KEY ("Museum_ID")
);
CREATE TABLE "visitor" (
"ID" int,
"Name" text,
"Level_of_membership" int,
"Age" int,
PRIMARY KEY ("ID")
);
CREATE TABLE "visit" (
"Museum_ID" int,
"visitor_ID" int,
"Num_of_Ticket" int,
"Total_spent" real,
PRIMARY KEY ("Museum_ID","visitor_ID"),
FOREIGN KEY ("Museum_ID") REFERENCES "museum"("Museum_ID"),
FOREIGN KEY ("visitor_ID") REFERENCES "visitor"("ID")
);
"#;

    #[test]
    fn parses_museum_visit() {
        let tables = parse_ddl(MUSEUM_VISIT).unwrap();
        assert_eq!(tables.len(), 3);
        assert_eq!(tables[0].name, "museum");
        assert_eq!(tables[0].primary_key, vec!["Museum_ID"]);
        assert_eq!(tables[2].foreign_keys.len(), 2);
        assert_eq!(tables[2].foreign_keys[1].foreign_table, "visitor");
        assert_eq!(tables[2].column("total_spent").unwrap().dtype, Dtype::Real);
    }

    #[test]
    fn inline_constraints() {
        let t = &parse_ddl(
            "CREATE TABLE IF NOT EXISTS t (id INTEGER PRIMARY KEY AUTOINCREMENT, name varchar(20) NOT NULL DEFAULT 'x', o int REFERENCES other(id))",
        )
        .unwrap()[0];
        assert_eq!(t.primary_key, vec!["id"]);
        assert_eq!(t.columns[1].sql_type, "varchar(20)");
        assert_eq!(t.foreign_keys[0].foreign_table, "other");
    }

    #[test]
    fn unsupported_statement_reports_index() {
        let err = parse_ddl("CREATE TABLE a (x int); INSERT INTO a VALUES (1);").unwrap_err();
        match err {
            SchemaError::Parse { element, .. } => assert_eq!(element, "statement 1"),
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn semicolons_inside_strings() {
        let t = parse_ddl("CREATE TABLE a (x text DEFAULT 'a;b'); CREATE TABLE b (y int)").unwrap();
        assert_eq!(t.len(), 2);
    }
}
