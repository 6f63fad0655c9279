use super::ast::Span;
use super::ParseError;

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum Tok {
    Ident(String),
    Int(i64),
    Decimal(f64),
    Str(String),
    // keywords
    Context,
    Inv,
    SelfKw,
    Implies,
    Or,
    And,
    Not,
    True,
    False,
    // punctuation
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
    Dot,
    Arrow,
    Bar,
    Colon,
    ColonColon,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier '{s}'"),
            Tok::Int(i) => format!("integer {i}"),
            Tok::Decimal(d) => format!("decimal {d}"),
            Tok::Str(s) => format!("string '{s}'"),
            Tok::Eof => "end of input".to_string(),
            other => format!("'{}'", other.text()),
        }
    }

    pub(crate) fn text(&self) -> &'static str {
        match self {
            Tok::Context => "context",
            Tok::Inv => "inv",
            Tok::SelfKw => "self",
            Tok::Implies => "implies",
            Tok::Or => "or",
            Tok::And => "and",
            Tok::Not => "not",
            Tok::True => "true",
            Tok::False => "false",
            Tok::Eq => "=",
            Tok::Ne => "<>",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::Dot => ".",
            Tok::Arrow => "->",
            Tok::Bar => "|",
            Tok::Colon => ":",
            Tok::ColonColon => "::",
            Tok::Eof => "end of input",
            Tok::Ident(_) | Tok::Int(_) | Tok::Decimal(_) | Tok::Str(_) => "",
        }
    }
}

fn keyword(word: &str) -> Option<Tok> {
    Some(match word {
        "context" => Tok::Context,
        "inv" => Tok::Inv,
        "self" => Tok::SelfKw,
        "implies" => Tok::Implies,
        "or" => Tok::Or,
        "and" => Tok::And,
        "not" => Tok::Not,
        "true" => Tok::True,
        "false" => Tok::False,
        _ => return None,
    })
}

pub(crate) fn is_keyword(word: &str) -> bool {
    keyword(word).is_some()
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<(Tok, Span)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line = 1;
    let mut line_start = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if c == b'\n' {
            i += 1;
            line += 1;
            line_start = i;
            continue;
        }
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == b'-' && bytes.get(i + 1) == Some(&b'-') {
            while i < bytes.len() && bytes[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        let column = src[line_start..start].chars().count() + 1;
        let span_to = |end: usize| Span {
            start,
            end,
            line,
            column,
        };
        let err = |message: String| ParseError {
            line,
            column,
            message,
            expected: Vec::new(),
        };

        let tok = if c.is_ascii_alphabetic() || c == b'_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let word = &src[start..i];
            keyword(word).unwrap_or_else(|| Tok::Ident(word.to_string()))
        } else if c.is_ascii_digit() {
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let is_decimal = bytes.get(i) == Some(&b'.')
                && bytes.get(i + 1).is_some_and(|b| b.is_ascii_digit());
            if is_decimal {
                i += 1;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                Tok::Decimal(src[start..i].parse().map_err(|_| err("malformed decimal".into()))?)
            } else {
                Tok::Int(
                    src[start..i]
                        .parse()
                        .map_err(|_| err(format!("integer literal {} out of range", &src[start..i])))?,
                )
            }
        } else if c == b'\'' || c == b'"' {
            let quote = c;
            i += 1;
            let mut s = String::new();
            loop {
                let Some(ch) = src[i..].chars().next() else {
                    return Err(err("unterminated string literal".into()));
                };
                i += ch.len_utf8();
                if ch as u32 == quote as u32 {
                    break;
                }
                if ch == '\n' {
                    return Err(err("unterminated string literal".into()));
                }
                if ch == '\\' {
                    let Some(esc) = src[i..].chars().next() else {
                        return Err(err("unterminated string literal".into()));
                    };
                    i += esc.len_utf8();
                    s.push(match esc {
                        'n' => '\n',
                        't' => '\t',
                        other => other,
                    });
                } else {
                    s.push(ch);
                }
            }
            Tok::Str(s)
        } else {
            let two = bytes.get(i + 1).copied();
            let (tok, len) = match (c, two) {
                (b'<', Some(b'>')) => (Tok::Ne, 2),
                (b'<', Some(b'=')) => (Tok::Le, 2),
                (b'>', Some(b'=')) => (Tok::Ge, 2),
                (b'-', Some(b'>')) => (Tok::Arrow, 2),
                (b':', Some(b':')) => (Tok::ColonColon, 2),
                (b'<', _) => (Tok::Lt, 1),
                (b'>', _) => (Tok::Gt, 1),
                (b'=', _) => (Tok::Eq, 1),
                (b'+', _) => (Tok::Plus, 1),
                (b'-', _) => (Tok::Minus, 1),
                (b'*', _) => (Tok::Star, 1),
                (b'/', _) => (Tok::Slash, 1),
                (b'(', _) => (Tok::LParen, 1),
                (b')', _) => (Tok::RParen, 1),
                (b'.', _) => (Tok::Dot, 1),
                (b'|', _) => (Tok::Bar, 1),
                (b':', _) => (Tok::Colon, 1),
                _ => {
                    let ch = src[i..].chars().next().unwrap_or('?');
                    return Err(err(format!("unexpected character {ch:?}")));
                }
            };
            i += len;
            tok
        };
        out.push((tok, span_to(i)));
    }
    let column = src[line_start..].chars().count() + 1;
    out.push((
        Tok::Eof,
        Span {
            start: src.len(),
            end: src.len(),
            line,
            column,
        },
    ));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(src: &str) -> Vec<Tok> {
        tokenize(src).unwrap().into_iter().map(|(t, _)| t).collect()
    }

    #[test]
    fn comments_and_arrows() {
        assert_eq!(
            toks("a->size() -- trailing\n<> 1.5"),
            vec![
                Tok::Ident("a".into()),
                Tok::Arrow,
                Tok::Ident("size".into()),
                Tok::LParen,
                Tok::RParen,
                Tok::Ne,
                Tok::Decimal(1.5),
                Tok::Eof
            ]
        );
    }

    #[test]
    fn string_escapes() {
        assert_eq!(toks(r"'it\'s'"), vec![Tok::Str("it's".into()), Tok::Eof]);
        assert!(tokenize("'open").is_err());
    }

    #[test]
    fn positions_are_one_based() {
        let t = tokenize("x\n  y").unwrap();
        assert_eq!((t[1].1.line, t[1].1.column), (2, 3));
    }
}
