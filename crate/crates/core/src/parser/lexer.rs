use super::{ParseError, SourceSpan};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Int(u64),
    // keywords
    Var,
    Fun,
    Axiom,
    IntSort,
    BoolSort,
    Assume,
    Assert,
    Havoc,
    If,
    Else,
    While,
    Invariant,
    True,
    False,
    // punctuation
    LParen,
    RParen,
    LBrace,
    RBrace,
    Semi,
    Colon,
    Comma,
    Arrow,
    Assign,
    Implies,
    Or,
    And,
    Not,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Star,
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Int(n) => format!("integer `{n}`"),
            Tok::Eof => "end of input".to_string(),
            other => format!("`{}`", other.text()),
        }
    }

    fn text(&self) -> &'static str {
        match self {
            Tok::Var => "var",
            Tok::Fun => "fun",
            Tok::Axiom => "axiom",
            Tok::IntSort => "int",
            Tok::BoolSort => "bool",
            Tok::Assume => "assume",
            Tok::Assert => "assert",
            Tok::Havoc => "havoc",
            Tok::If => "if",
            Tok::Else => "else",
            Tok::While => "while",
            Tok::Invariant => "invariant",
            Tok::True => "true",
            Tok::False => "false",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::Semi => ";",
            Tok::Colon => ":",
            Tok::Comma => ",",
            Tok::Arrow => "->",
            Tok::Assign => ":=",
            Tok::Implies => "==>",
            Tok::Or => "||",
            Tok::And => "&&",
            Tok::Not => "!",
            Tok::Eq => "=",
            Tok::Ne => "!=",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Ident(_) | Tok::Int(_) | Tok::Eof => "",
        }
    }
}

fn keyword(word: &str) -> Option<Tok> {
    Some(match word {
        "var" => Tok::Var,
        "fun" => Tok::Fun,
        "axiom" => Tok::Axiom,
        "int" => Tok::IntSort,
        "bool" => Tok::BoolSort,
        "assume" => Tok::Assume,
        "assert" => Tok::Assert,
        "havoc" => Tok::Havoc,
        "if" => Tok::If,
        "else" => Tok::Else,
        "while" => Tok::While,
        "invariant" => Tok::Invariant,
        "true" => Tok::True,
        "false" => Tok::False,
        "and" => Tok::And,
        "or" => Tok::Or,
        "not" => Tok::Not,
        _ => return None,
    })
}

pub(crate) fn tokenize(src: &str) -> Result<Vec<(Tok, SourceSpan)>, ParseError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut pos = 0;
    let mut line = 1;
    let mut line_start = 0;

    while pos < bytes.len() {
        let c = bytes[pos];
        if c == b'\n' {
            pos += 1;
            line += 1;
            line_start = pos;
            continue;
        }
        if c.is_ascii_whitespace() {
            pos += 1;
            continue;
        }
        if src[pos..].starts_with("//") {
            while pos < bytes.len() && bytes[pos] != b'\n' {
                pos += 1;
            }
            continue;
        }
        let start = pos;
        let col = src[line_start..start].chars().count() + 1;
        let span = |end: usize| SourceSpan {
            start,
            end,
            line,
            col,
        };

        if c.is_ascii_alphabetic() || c == b'_' {
            while pos < bytes.len() && (bytes[pos].is_ascii_alphanumeric() || bytes[pos] == b'_') {
                pos += 1;
            }
            let word = &src[start..pos];
            let tok = keyword(word).unwrap_or_else(|| Tok::Ident(word.to_string()));
            out.push((tok, span(pos)));
            continue;
        }
        if c.is_ascii_digit() {
            while pos < bytes.len() && bytes[pos].is_ascii_digit() {
                pos += 1;
            }
            let n = src[start..pos]
                .parse::<u64>()
                .map_err(|_| ParseError::syntax("integer literal out of range", span(pos)))?;
            out.push((Tok::Int(n), span(pos)));
            continue;
        }

        const PUNCT: &[(&str, Tok)] = &[
            ("==>", Tok::Implies),
            ("=>", Tok::Implies),
            ("==", Tok::Eq),
            (":=", Tok::Assign),
            ("->", Tok::Arrow),
            ("||", Tok::Or),
            ("&&", Tok::And),
            ("!=", Tok::Ne),
            ("<=", Tok::Le),
            (">=", Tok::Ge),
            ("(", Tok::LParen),
            (")", Tok::RParen),
            ("{", Tok::LBrace),
            ("}", Tok::RBrace),
            (";", Tok::Semi),
            (":", Tok::Colon),
            (",", Tok::Comma),
            ("!", Tok::Not),
            ("=", Tok::Eq),
            ("<", Tok::Lt),
            (">", Tok::Gt),
            ("+", Tok::Plus),
            ("-", Tok::Minus),
            ("*", Tok::Star),
        ];
        match PUNCT.iter().find(|(p, _)| src[pos..].starts_with(p)) {
            Some((p, tok)) => {
                pos += p.len();
                out.push((tok.clone(), span(pos)));
            }
            None => {
                let ch = src[pos..].chars().next().unwrap();
                return Err(ParseError::syntax(
                    format!("unexpected character `{ch}`"),
                    span(pos + ch.len_utf8()),
                ));
            }
        }
    }

    let col = src[line_start..].chars().count() + 1;
    out.push((
        Tok::Eof,
        SourceSpan {
            start: src.len(),
            end: src.len(),
            line,
            col,
        },
    ));
    Ok(out)
}
