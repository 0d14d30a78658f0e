use super::{DiagnosticCode, ParseDiagnostic, SourceSpan};

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Tok {
    Ident(String),
    Str(String),
    Arrow,
    FatArrow,
    LBrace,
    RBrace,
    Semi,
    Colon,
    Dot,
    Comment(String),
    Eof,
}

impl Tok {
    pub(crate) fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("`{s}`"),
            Tok::Str(_) => "string".into(),
            Tok::Arrow => "`->`".into(),
            Tok::FatArrow => "`=>`".into(),
            Tok::LBrace => "`{`".into(),
            Tok::RBrace => "`}`".into(),
            Tok::Semi => "`;`".into(),
            Tok::Colon => "`:`".into(),
            Tok::Dot => "`.`".into(),
            Tok::Comment(_) => "comment".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Token {
    pub tok: Tok,
    pub span: SourceSpan,
}

pub(crate) fn lex(text: &str) -> Result<Vec<Token>, ParseDiagnostic> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1usize, 1usize);
    while i < chars.len() {
        let c = chars[i];
        let start = (line, col);
        let span = |len: usize| SourceSpan { line: start.0, column: start.1, length: len.max(1) };
        match c {
            '\n' => {
                i += 1;
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                i += 1;
                col += 1;
            }
            '#' => {
                let begin = i + 1;
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                }
                let body: String = chars[begin..i].iter().collect();
                let len = i - begin + 1;
                col += len;
                out.push(Token { tok: Tok::Comment(body.trim_end().to_string()), span: span(len) });
            }
            '"' => {
                let mut s = String::new();
                let mut j = i + 1;
                let mut width = 1;
                loop {
                    match chars.get(j) {
                        None | Some('\n') => {
                            return Err(ParseDiagnostic::new(
                                span(width),
                                DiagnosticCode::SyntaxError,
                                "unterminated string",
                            ));
                        }
                        Some('"') => {
                            j += 1;
                            width += 1;
                            break;
                        }
                        Some('\\') => {
                            let esc = match chars.get(j + 1) {
                                Some('"') => '"',
                                Some('\\') => '\\',
                                Some('n') => '\n',
                                Some('t') => '\t',
                                _ => {
                                    return Err(ParseDiagnostic::new(
                                        SourceSpan { line, column: col + width, length: 2 },
                                        DiagnosticCode::SyntaxError,
                                        "unknown escape in string",
                                    ));
                                }
                            };
                            s.push(esc);
                            j += 2;
                            width += 2;
                        }
                        Some(&ch) => {
                            s.push(ch);
                            j += 1;
                            width += 1;
                        }
                    }
                }
                i = j;
                col += width;
                out.push(Token { tok: Tok::Str(s), span: span(width) });
            }
            c if c.is_alphabetic() => {
                let begin = i;
                while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                    i += 1;
                }
                let word: String = chars[begin..i].iter().collect();
                let len = i - begin;
                col += len;
                out.push(Token { tok: Tok::Ident(word), span: span(len) });
            }
            '-' | '=' if chars.get(i + 1) == Some(&'>') => {
                let tok = if c == '-' { Tok::Arrow } else { Tok::FatArrow };
                i += 2;
                col += 2;
                out.push(Token { tok, span: span(2) });
            }
            '{' | '}' | ';' | ':' | '.' => {
                let tok = match c {
                    '{' => Tok::LBrace,
                    '}' => Tok::RBrace,
                    ';' => Tok::Semi,
                    ':' => Tok::Colon,
                    _ => Tok::Dot,
                };
                i += 1;
                col += 1;
                out.push(Token { tok, span: span(1) });
            }
            other => {
                return Err(ParseDiagnostic::new(
                    span(1),
                    DiagnosticCode::SyntaxError,
                    format!("unexpected character `{other}`"),
                ));
            }
        }
    }
    out.push(Token { tok: Tok::Eof, span: SourceSpan { line, column: col, length: 1 } });
    Ok(out)
}
