use super::{BinOp, Expr, Func, Var};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("syntax error at byte {offset}: expected {}, found {found}", .expected.join(" | "))]
    Syntax {
        offset: usize,
        expected: Vec<&'static str>,
        found: String,
    },
    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { offset: usize, name: String },
    #[error("`{name}` at byte {offset} takes {expected} argument(s), got {found}")]
    Arity {
        offset: usize,
        name: String,
        expected: usize,
        found: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Op(char),
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(v) => format!("number {v}"),
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Op(c) => format!("`{c}`"),
            Tok::End => "end of input".to_string(),
        }
    }
}

fn lex(src: &str) -> Result<Vec<(Tok, usize)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        if c.is_ascii_digit() || (c == b'.' && bytes.get(i + 1).is_some_and(u8::is_ascii_digit)) {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text = &src[start..i];
            let v: f64 = text.parse().map_err(|_| ParseError::Syntax {
                offset: start,
                expected: vec!["number"],
                found: format!("`{text}`"),
            })?;
            out.push((Tok::Num(v), start));
        } else if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((Tok::Ident(src[start..i].to_string()), start));
        } else if b"+-*/^(),".contains(&c) {
            out.push((Tok::Op(c as char), start));
            i += 1;
        } else {
            let ch = src[start..].chars().next().unwrap_or('?');
            return Err(ParseError::Syntax {
                offset: start,
                expected: vec!["number", "identifier", "operator", "`(`"],
                found: format!("`{ch}`"),
            });
        }
    }
    out.push((Tok::End, src.len()));
    Ok(out)
}

struct Parser {
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> (Tok, usize) {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, c: char) -> bool {
        if *self.peek() == Tok::Op(c) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn error(&self, expected: Vec<&'static str>) -> ParseError {
        ParseError::Syntax {
            offset: self.offset(),
            expected,
            found: self.peek().describe(),
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Op('+') => BinOp::Add,
                Tok::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Op('*') => BinOp::Mul,
                Tok::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat('-') {
            Ok(Expr::Neg(Box::new(self.unary()?)))
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.eat('^') {
            let exponent = self.unary()?;
            Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exponent)))
        } else {
            Ok(base)
        }
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        let expected = vec!["number", "identifier", "`(`", "`-`"];
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(Expr::Num(v))
            }
            Tok::Op('(') => {
                self.bump();
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(self.error(vec!["`)`", "operator"]));
                }
                Ok(e)
            }
            Tok::Ident(name) => {
                let (_, offset) = self.bump();
                if let Some(func) = Func::from_name(&name) {
                    if !self.eat('(') {
                        return Err(self.error(vec!["`(`"]));
                    }
                    let mut args = vec![self.expr()?];
                    while self.eat(',') {
                        args.push(self.expr()?);
                    }
                    if !self.eat(')') {
                        return Err(self.error(vec!["`)`", "`,`", "operator"]));
                    }
                    if args.len() != func.arity() {
                        return Err(ParseError::Arity {
                            offset,
                            name,
                            expected: func.arity(),
                            found: args.len(),
                        });
                    }
                    return Ok(Expr::Call(func, args));
                }
                resolve_identifier(&name).ok_or(ParseError::UnknownIdentifier { offset, name })
            }
            _ => Err(self.error(expected)),
        }
    }
}

fn resolve_identifier(name: &str) -> Option<Expr> {
    match name {
        "t" => Some(Expr::Var(Var::T)),
        "pi" => Some(Expr::Num(std::f64::consts::PI)),
        _ => {
            let digits = name.strip_prefix('x')?;
            if digits.is_empty() || digits.starts_with('0') || !digits.bytes().all(|b| b.is_ascii_digit()) {
                return None;
            }
            digits.parse().ok().map(|i| Expr::Var(Var::X(i)))
        }
    }
}

pub(super) fn parse(source: &str) -> Result<Expr, ParseError> {
    let mut p = Parser {
        toks: lex(source)?,
        pos: 0,
    };
    let e = p.expr()?;
    if *p.peek() != Tok::End {
        return Err(p.error(vec!["operator", "end of input"]));
    }
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn syntax_error_reports_offset_and_expectations() {
        match parse("1 + * 2") {
            Err(ParseError::Syntax { offset, expected, .. }) => {
                assert_eq!(offset, 4);
                assert!(expected.contains(&"number"));
            }
            other => panic!("{other:?}"),
        }
        match parse("(x1 + 2") {
            Err(ParseError::Syntax { offset, expected, .. }) => {
                assert_eq!(offset, 7);
                assert!(expected.contains(&"`)`"));
            }
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse("x1 x2"), Err(ParseError::Syntax { offset: 3, .. })));
        assert!(matches!(parse("x1 $"), Err(ParseError::Syntax { offset: 3, .. })));
        assert!(matches!(parse(""), Err(ParseError::Syntax { offset: 0, .. })));
    }

    #[test]
    fn unknown_identifiers_and_arity() {
        assert_eq!(
            parse("2*y + 1"),
            Err(ParseError::UnknownIdentifier {
                offset: 2,
                name: "y".into()
            })
        );
        assert!(matches!(parse("x0"), Err(ParseError::UnknownIdentifier { .. })));
        assert!(matches!(parse("x01"), Err(ParseError::UnknownIdentifier { .. })));
        assert_eq!(
            parse("min(x1)"),
            Err(ParseError::Arity {
                offset: 0,
                name: "min".into(),
                expected: 2,
                found: 1
            })
        );
        assert!(matches!(parse("sin(1, 2)"), Err(ParseError::Arity { .. })));
        assert!(matches!(parse("sin + 1"), Err(ParseError::Syntax { .. })));
    }

    #[test]
    fn variables_and_constants() {
        assert_eq!(parse("x12").unwrap(), Expr::Var(Var::X(12)));
        assert_eq!(parse("t").unwrap(), Expr::Var(Var::T));
        assert_eq!(parse("pi").unwrap(), Expr::Num(std::f64::consts::PI));
    }
}
