use std::fmt;

use super::ChurchError;

/// 1-based source position.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TokenKind {
    Open,
    Close,
    Quote,
    Symbol(String),
    Number(f64),
    Boolean(bool),
    Str(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Token {
    pub kind: TokenKind,
    pub pos: Pos,
}

impl Token {
    /// Surface text of the token, as it would be printed back.
    pub fn text(&self) -> String {
        match &self.kind {
            TokenKind::Open => "(".into(),
            TokenKind::Close => ")".into(),
            TokenKind::Quote => "'".into(),
            TokenKind::Symbol(s) => s.clone(),
            TokenKind::Number(n) => format!("{n}"),
            TokenKind::Boolean(true) => "#t".into(),
            TokenKind::Boolean(false) => "#f".into(),
            TokenKind::Str(s) => format!("{s:?}"),
        }
    }
}

fn is_delimiter(c: char) -> bool {
    c.is_whitespace() || matches!(c, '(' | ')' | '[' | ']' | '\'' | ';' | '"')
}

fn looks_numeric(text: &str) -> bool {
    let mut chars = text.chars();
    match chars.next() {
        Some(c) if c.is_ascii_digit() => true,
        Some('+') | Some('-') | Some('.') => chars.next().is_some_and(|c| c.is_ascii_digit() || c == '.'),
        _ => false,
    }
}

/// Splits program text into tokens. `;` starts a comment running to end of line.
/// Square brackets are accepted as parentheses.
pub fn tokenize(text: &str) -> Result<Vec<Token>, ChurchError> {
    let mut tokens = Vec::new();
    let mut depth: usize = 0;
    let mut chars = text.chars().peekable();
    let mut line = 1;
    let mut column = 1;

    macro_rules! bump {
        () => {{
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                column = 1;
            } else if c.is_some() {
                column += 1;
            }
            c
        }};
    }

    while let Some(&c) = chars.peek() {
        let pos = Pos { line, column };
        match c {
            _ if c.is_whitespace() => {
                bump!();
            }
            ';' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    bump!();
                }
            }
            '(' | '[' => {
                bump!();
                depth += 1;
                tokens.push(Token { kind: TokenKind::Open, pos });
            }
            ')' | ']' => {
                bump!();
                if depth == 0 {
                    return Err(ChurchError::Lex {
                        pos,
                        message: "stray closing delimiter".into(),
                    });
                }
                depth -= 1;
                tokens.push(Token { kind: TokenKind::Close, pos });
            }
            '\'' => {
                bump!();
                tokens.push(Token { kind: TokenKind::Quote, pos });
            }
            '"' => {
                bump!();
                let mut s = String::new();
                let mut closed = false;
                while let Some(c) = bump!() {
                    match c {
                        '"' => {
                            closed = true;
                            break;
                        }
                        '\\' => match bump!() {
                            Some('n') => s.push('\n'),
                            Some('t') => s.push('\t'),
                            Some(other) => s.push(other),
                            None => break,
                        },
                        other => s.push(other),
                    }
                }
                if !closed {
                    return Err(ChurchError::Lex {
                        pos,
                        message: "unterminated string".into(),
                    });
                }
                tokens.push(Token { kind: TokenKind::Str(s), pos });
            }
            _ => {
                let mut word = String::new();
                while let Some(&c) = chars.peek() {
                    if is_delimiter(c) {
                        break;
                    }
                    word.push(c);
                    bump!();
                }
                let kind = match word.as_str() {
                    "#t" | "true" => TokenKind::Boolean(true),
                    "#f" | "false" => TokenKind::Boolean(false),
                    _ if looks_numeric(&word) => match word.parse::<f64>() {
                        Ok(n) if n.is_finite() => TokenKind::Number(n),
                        _ => {
                            return Err(ChurchError::Lex {
                                pos,
                                message: format!("malformed number `{word}`"),
                            })
                        }
                    },
                    _ => TokenKind::Symbol(word),
                };
                tokens.push(Token { kind, pos });
            }
        }
    }
    Ok(tokens)
}
