//! Minimal s-expression reader for constraint files. `;` starts a comment.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Sexpr {
    Atom { text: String, line: usize },
    List { items: Vec<Sexpr>, line: usize },
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl Sexpr {
    pub fn line(&self) -> usize {
        match self {
            Sexpr::Atom { line, .. } | Sexpr::List { line, .. } => *line,
        }
    }

    pub fn atom(&self) -> Option<&str> {
        match self {
            Sexpr::Atom { text, .. } => Some(text),
            Sexpr::List { .. } => None,
        }
    }

    pub fn list(&self) -> Option<&[Sexpr]> {
        match self {
            Sexpr::List { items, .. } => Some(items),
            Sexpr::Atom { .. } => None,
        }
    }
}

/// Reads every top-level form in `src`.
pub fn parse_all(src: &str) -> Result<Vec<Sexpr>, ParseError> {
    let mut stack: Vec<(usize, Vec<Sexpr>)> = Vec::new();
    let mut top = Vec::new();
    for (i, raw) in src.lines().enumerate() {
        let line = i + 1;
        let text = raw.split(';').next().unwrap_or("");
        let mut chars = text.char_indices().peekable();
        while let Some((start, c)) = chars.next() {
            match c {
                '(' => stack.push((line, Vec::new())),
                ')' => {
                    let (open, items) = stack.pop().ok_or_else(|| ParseError {
                        line,
                        message: "unbalanced `)`".into(),
                    })?;
                    let node = Sexpr::List { items, line: open };
                    match stack.last_mut() {
                        Some((_, parent)) => parent.push(node),
                        None => top.push(node),
                    }
                }
                c if c.is_whitespace() => {}
                _ => {
                    let mut end = start + c.len_utf8();
                    while let Some(&(j, d)) = chars.peek() {
                        if d.is_whitespace() || d == '(' || d == ')' {
                            break;
                        }
                        end = j + d.len_utf8();
                        chars.next();
                    }
                    let node = Sexpr::Atom {
                        text: text[start..end].to_string(),
                        line,
                    };
                    match stack.last_mut() {
                        Some((_, parent)) => parent.push(node),
                        None => top.push(node),
                    }
                }
            }
        }
    }
    if let Some((line, _)) = stack.last() {
        return Err(ParseError {
            line: *line,
            message: "unclosed `(`".into(),
        });
    }
    Ok(top)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_forms_and_comments() {
        let forms = parse_all("; header\n(forbid (rule * (var a) 0)) ; trailing\n(contains x)").unwrap();
        assert_eq!(forms.len(), 2);
        let first = forms[0].list().unwrap();
        assert_eq!(first[0].atom(), Some("forbid"));
        assert_eq!(first[1].list().unwrap().len(), 4);
        assert_eq!(forms[1].line(), 3);
    }

    #[test]
    fn unbalanced_input_reports_line() {
        assert_eq!(parse_all("(a\n(b)").unwrap_err().line, 1);
        assert_eq!(parse_all("a)\n").unwrap_err().line, 1);
    }

    #[test]
    fn brackets_are_atoms() {
        let forms = parse_all("(rule [] )").unwrap();
        assert_eq!(forms[0].list().unwrap()[1].atom(), Some("[]"));
    }
}
