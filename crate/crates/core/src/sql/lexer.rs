use std::fmt;

#[derive(Debug, Clone, PartialEq)]
pub enum Token {
    /// Bare identifier or keyword.
    Word(String),
    /// `"x"`, `` `x` `` or `[x]`.
    QuotedIdent(String),
    Str(String),
    Number(String),
    Op(&'static str),
    LParen,
    RParen,
    Comma,
    Dot,
    Semicolon,
}

impl Token {
    pub fn is_keyword(&self, kw: &str) -> bool {
        matches!(self, Token::Word(w) if w.eq_ignore_ascii_case(kw))
    }
}

impl fmt::Display for Token {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Token::Word(w) => f.write_str(w),
            Token::QuotedIdent(w) => write!(f, "\"{w}\""),
            Token::Str(s) => write!(f, "'{s}'"),
            Token::Number(n) => f.write_str(n),
            Token::Op(o) => f.write_str(o),
            Token::LParen => f.write_str("("),
            Token::RParen => f.write_str(")"),
            Token::Comma => f.write_str(","),
            Token::Dot => f.write_str("."),
            Token::Semicolon => f.write_str(";"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spanned {
    pub token: Token,
    pub offset: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LexError {
    pub offset: usize,
    pub message: String,
}

const OPS: [&str; 15] = [
    "<>", "!=", "<=", ">=", "==", "||", "=", "<", ">", "+", "-", "*", "/", "%", "!",
];

pub fn tokenize(input: &str) -> Result<Vec<Spanned>, LexError> {
    let bytes = input.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = i;
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if input[i..].starts_with("--") {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        if input[i..].starts_with("/*") {
            match input[i + 2..].find("*/") {
                Some(end) => i += end + 4,
                None => {
                    return Err(LexError {
                        offset: i,
                        message: "unterminated comment".into(),
                    })
                }
            }
            continue;
        }
        let token = match c {
            '(' => {
                i += 1;
                Token::LParen
            }
            ')' => {
                i += 1;
                Token::RParen
            }
            ',' => {
                i += 1;
                Token::Comma
            }
            ';' => {
                i += 1;
                Token::Semicolon
            }
            '.' if !bytes.get(i + 1).is_some_and(|b| b.is_ascii_digit()) => {
                i += 1;
                Token::Dot
            }
            '\'' => {
                let (s, next) = read_quoted(input, i, '\'')?;
                i = next;
                Token::Str(s)
            }
            '"' | '`' => {
                let (s, next) = read_quoted(input, i, c)?;
                i = next;
                Token::QuotedIdent(s)
            }
            '[' => {
                let end = input[i + 1..].find(']').ok_or(LexError {
                    offset: i,
                    message: "unterminated [identifier]".into(),
                })?;
                let s = input[i + 1..i + 1 + end].to_string();
                i += end + 2;
                Token::QuotedIdent(s)
            }
            c if c.is_ascii_digit() || c == '.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        i = j;
                        while i < bytes.len() && bytes[i].is_ascii_digit() {
                            i += 1;
                        }
                    }
                }
                Token::Number(input[start..i].to_string())
            }
            c if c.is_alphabetic() || c == '_' => {
                while i < input.len() {
                    let ch = input[i..].chars().next().unwrap();
                    if ch.is_alphanumeric() || ch == '_' || ch == '$' {
                        i += ch.len_utf8();
                    } else {
                        break;
                    }
                }
                Token::Word(input[start..i].to_string())
            }
            _ => {
                let op = OPS.iter().find(|op| input[i..].starts_with(**op));
                match op {
                    Some(op) => {
                        i += op.len();
                        Token::Op(op)
                    }
                    None => {
                        return Err(LexError {
                            offset: i,
                            message: format!("unexpected character {c:?}"),
                        })
                    }
                }
            }
        };
        out.push(Spanned { token, offset: start });
    }
    Ok(out)
}

fn read_quoted(input: &str, start: usize, quote: char) -> Result<(String, usize), LexError> {
    let mut s = String::new();
    let mut chars = input[start + 1..].char_indices().peekable();
    while let Some((off, ch)) = chars.next() {
        if ch == quote {
            if let Some((_, next)) = chars.peek() {
                if *next == quote {
                    s.push(quote);
                    chars.next();
                    continue;
                }
            }
            return Ok((s, start + 1 + off + 1));
        }
        s.push(ch);
    }
    Err(LexError {
        offset: start,
        message: "unterminated quoted text".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Token> {
        tokenize(s).unwrap().into_iter().map(|t| t.token).collect()
    }

    #[test]
    fn basic_select() {
        assert_eq!(
            toks("SELECT p.Name FROM people AS p WHERE x != 'it''s'"),
            vec![
                Token::Word("SELECT".into()),
                Token::Word("p".into()),
                Token::Dot,
                Token::Word("Name".into()),
                Token::Word("FROM".into()),
                Token::Word("people".into()),
                Token::Word("AS".into()),
                Token::Word("p".into()),
                Token::Word("WHERE".into()),
                Token::Word("x".into()),
                Token::Op("!="),
                Token::Str("it's".into()),
            ]
        );
    }

    #[test]
    fn numbers_and_quotes() {
        assert_eq!(
            toks("1.5e3 .5 \"Russia\" `a b` [c]"),
            vec![
                Token::Number("1.5e3".into()),
                Token::Number(".5".into()),
                Token::QuotedIdent("Russia".into()),
                Token::QuotedIdent("a b".into()),
                Token::QuotedIdent("c".into()),
            ]
        );
    }

    #[test]
    fn comments_skipped() {
        assert_eq!(
            toks("a -- c\n/* x */ b"),
            vec![Token::Word("a".into()), Token::Word("b".into())]
        );
    }

    #[test]
    fn unterminated_string() {
        assert!(tokenize("'abc").is_err());
    }
}
