use std::fmt;

use super::lexer::{tokenize, Pos, Token, TokenKind};
use super::ChurchError;

#[derive(Debug, Clone, PartialEq)]
pub enum SExpr {
    Symbol(String),
    Number(f64),
    Boolean(bool),
    Quote(Box<SExpr>),
    List(Vec<SExpr>),
}

impl SExpr {
    pub fn symbol(name: impl Into<String>) -> Self {
        SExpr::Symbol(name.into())
    }

    pub fn as_symbol(&self) -> Option<&str> {
        match self {
            SExpr::Symbol(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_list(&self) -> Option<&[SExpr]> {
        match self {
            SExpr::List(items) => Some(items),
            _ => None,
        }
    }

    /// `(head ...)` where head is the given symbol.
    pub fn is_form(&self, head: &str) -> bool {
        matches!(self.as_list(), Some([SExpr::Symbol(h), ..]) if h == head)
    }
}

impl fmt::Display for SExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SExpr::Symbol(s) => f.write_str(s),
            SExpr::Number(n) => write!(f, "{n}"),
            SExpr::Boolean(true) => f.write_str("#t"),
            SExpr::Boolean(false) => f.write_str("#f"),
            SExpr::Quote(inner) => write!(f, "'{inner}"),
            SExpr::List(items) => {
                f.write_str("(")?;
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{item}")?;
                }
                f.write_str(")")
            }
        }
    }
}

/// Builds one `SExpr` per top-level form. `'x` becomes `Quote(x)`.
pub fn parse(tokens: &[Token]) -> Result<Vec<SExpr>, ChurchError> {
    let mut parser = Parser { tokens, at: 0 };
    let mut forms = Vec::new();
    while parser.at < tokens.len() {
        forms.push(parser.expr()?);
    }
    Ok(forms)
}

/// Tokenize and parse in one step.
pub fn parse_program(text: &str) -> Result<Vec<SExpr>, ChurchError> {
    parse(&tokenize(text)?)
}

/// Parse text that must contain exactly one form.
pub fn parse_one(text: &str) -> Result<SExpr, ChurchError> {
    let mut forms = parse_program(text)?;
    match forms.len() {
        1 => Ok(forms.remove(0)),
        n => Err(ChurchError::Parse {
            pos: Pos { line: 1, column: 1 },
            message: format!("expected exactly one form, found {n}"),
        }),
    }
}

struct Parser<'a> {
    tokens: &'a [Token],
    at: usize,
}

impl Parser<'_> {
    fn end_pos(&self) -> Pos {
        self.tokens.last().map(|t| t.pos).unwrap_or(Pos { line: 1, column: 1 })
    }

    fn expr(&mut self) -> Result<SExpr, ChurchError> {
        let Some(tok) = self.tokens.get(self.at) else {
            return Err(ChurchError::Parse {
                pos: self.end_pos(),
                message: "unexpected end of input".into(),
            });
        };
        self.at += 1;
        match &tok.kind {
            TokenKind::Symbol(s) => Ok(SExpr::Symbol(s.clone())),
            TokenKind::Number(n) => Ok(SExpr::Number(*n)),
            TokenKind::Boolean(b) => Ok(SExpr::Boolean(*b)),
            TokenKind::Str(_) => Err(ChurchError::Parse {
                pos: tok.pos,
                message: "string literals are not supported".into(),
            }),
            TokenKind::Quote => Ok(SExpr::Quote(Box::new(self.expr()?))),
            TokenKind::Close => Err(ChurchError::Parse {
                pos: tok.pos,
                message: "unexpected `)`".into(),
            }),
            TokenKind::Open => {
                let open = tok.pos;
                let mut items = Vec::new();
                loop {
                    match self.tokens.get(self.at) {
                        None => {
                            return Err(ChurchError::Parse {
                                pos: open,
                                message: "unbalanced parentheses: `(` is never closed".into(),
                            })
                        }
                        Some(Token { kind: TokenKind::Close, .. }) => {
                            self.at += 1;
                            return Ok(SExpr::List(items));
                        }
                        Some(_) => items.push(self.expr()?),
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn parses_condition_body() {
        let got = parse_program("(> (strength 'jack) 50)").unwrap();
        let want = SExpr::List(vec![
            SExpr::symbol(">"),
            SExpr::List(vec![
                SExpr::symbol("strength"),
                SExpr::Quote(Box::new(SExpr::symbol("jack"))),
            ]),
            SExpr::Number(50.0),
        ]);
        assert_eq!(got, vec![want]);
    }

    #[test]
    fn empty_input() {
        assert!(parse_program("").unwrap().is_empty());
        assert!(parse_program("  ;; only a comment\n").unwrap().is_empty());
    }

    #[test]
    fn unclosed_paren_reports_opening_position() {
        let err = parse_program("(define x\n  (+ 1 2)").unwrap_err();
        match err {
            ChurchError::Parse { pos, .. } => assert_eq!(pos, Pos { line: 1, column: 1 }),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn dangling_quote() {
        assert!(parse_program("'").is_err());
    }

    #[test]
    fn printing_uses_quote_sugar() {
        let e = parse_one("(won-against '(jill) '(jane))").unwrap();
        assert_eq!(e.to_string(), "(won-against '(jill) '(jane))");
    }

    fn arb_sexpr() -> impl Strategy<Value = SExpr> {
        let leaf = prop_oneof![
            "[a-z][a-z0-9?!*-]{0,6}"
                .prop_filter("boolean literal", |s| s != "true" && s != "false")
                .prop_map(SExpr::Symbol),
            (-1.0e6f64..1.0e6).prop_map(SExpr::Number),
            any::<bool>().prop_map(SExpr::Boolean),
        ];
        leaf.prop_recursive(4, 32, 5, |inner| {
            prop_oneof![
                inner.clone().prop_map(|e| SExpr::Quote(Box::new(e))),
                prop::collection::vec(inner, 0..5).prop_map(SExpr::List),
            ]
        })
    }

    proptest! {
        #[test]
        fn print_parse_round_trip(e in arb_sexpr()) {
            let printed = e.to_string();
            prop_assert_eq!(parse_one(&printed).unwrap(), e);
        }
    }
}
