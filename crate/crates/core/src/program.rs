//! Complete programs and their canonical string form.

use std::fmt;

use thiserror::Error;

use crate::grammar::{Grammar, RuleId};

/// A complete AST: every node carries exactly one rule.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Program {
    pub rule: RuleId,
    pub children: Vec<Program>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProgramParseError {
    #[error("unexpected end of input")]
    Eof,
    #[error("unexpected `{found}` at byte {at}")]
    Unexpected { at: usize, found: char },
    #[error("unknown rule label `{0}`")]
    UnknownLabel(String),
    #[error("rule `{label}` expects {expected} children, got {got}")]
    Arity {
        label: String,
        expected: usize,
        got: usize,
    },
    #[error("rule `{label}` at child {position} has type `{got}`, expected `{expected}`")]
    Type {
        label: String,
        position: usize,
        expected: String,
        got: String,
    },
}

impl Program {
    pub fn leaf(rule: RuleId) -> Self {
        Program {
            rule,
            children: Vec::new(),
        }
    }

    pub fn node(rule: RuleId, children: Vec<Program>) -> Self {
        Program { rule, children }
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(Program::size).sum::<usize>()
    }

    pub fn depth(&self) -> usize {
        1 + self.children.iter().map(Program::depth).max().unwrap_or(0)
    }

    /// Pre-order traversal of all subtrees.
    pub fn subtrees(&self) -> Subtrees<'_> {
        Subtrees { stack: vec![self] }
    }

    /// Prefix form `label(child,child)`, terminals as bare labels.
    pub fn to_canonical(&self, g: &Grammar) -> String {
        let mut out = String::new();
        self.write_canonical(g, &mut out);
        out
    }

    fn write_canonical(&self, g: &Grammar, out: &mut String) {
        out.push_str(g.label(self.rule));
        if !self.children.is_empty() {
            out.push('(');
            for (i, c) in self.children.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                c.write_canonical(g, out);
            }
            out.push(')');
        }
    }

    pub fn display<'a>(&'a self, g: &'a Grammar) -> impl fmt::Display + 'a {
        DisplayProgram { p: self, g }
    }

    /// Parses the canonical form (whitespace after commas is tolerated) and
    /// checks arity and child types against the grammar.
    pub fn parse(g: &Grammar, text: &str) -> Result<Program, ProgramParseError> {
        let mut p = Parser { src: text, at: 0 };
        let prog = p.program(g)?;
        p.skip_ws();
        match p.peek() {
            None => Ok(prog),
            Some(c) => Err(ProgramParseError::Unexpected { at: p.at, found: c }),
        }
    }
}

struct DisplayProgram<'a> {
    p: &'a Program,
    g: &'a Grammar,
}

impl fmt::Display for DisplayProgram<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.p.to_canonical(self.g))
    }
}

pub struct Subtrees<'a> {
    stack: Vec<&'a Program>,
}

impl<'a> Iterator for Subtrees<'a> {
    type Item = &'a Program;

    fn next(&mut self) -> Option<&'a Program> {
        let p = self.stack.pop()?;
        self.stack.extend(p.children.iter().rev());
        Some(p)
    }
}

struct Parser<'s> {
    src: &'s str,
    at: usize,
}

impl<'s> Parser<'s> {
    fn peek(&self) -> Option<char> {
        self.src[self.at..].chars().next()
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if c.is_whitespace() {
                self.at += c.len_utf8();
            } else {
                break;
            }
        }
    }

    fn label(&mut self) -> Result<&'s str, ProgramParseError> {
        self.skip_ws();
        let start = self.at;
        while let Some(c) = self.peek() {
            if c.is_whitespace() || matches!(c, '(' | ')' | ',') {
                break;
            }
            self.at += c.len_utf8();
        }
        if start == self.at {
            return match self.peek() {
                Some(c) => Err(ProgramParseError::Unexpected { at: self.at, found: c }),
                None => Err(ProgramParseError::Eof),
            };
        }
        Ok(&self.src[start..self.at])
    }

    fn program(&mut self, g: &Grammar) -> Result<Program, ProgramParseError> {
        let label = self.label()?;
        let rule = g
            .rule_by_label(label)
            .ok_or_else(|| ProgramParseError::UnknownLabel(label.to_string()))?;
        let mut children = Vec::new();
        self.skip_ws();
        if self.peek() == Some('(') {
            self.at += 1;
            loop {
                children.push(self.program(g)?);
                self.skip_ws();
                match self.peek() {
                    Some(',') => self.at += 1,
                    Some(')') => {
                        self.at += 1;
                        break;
                    }
                    Some(c) => return Err(ProgramParseError::Unexpected { at: self.at, found: c }),
                    None => return Err(ProgramParseError::Eof),
                }
            }
        }
        let expected = g.child_types(rule);
        if expected.len() != children.len() {
            return Err(ProgramParseError::Arity {
                label: label.to_string(),
                expected: expected.len(),
                got: children.len(),
            });
        }
        for (i, (c, t)) in children.iter().zip(expected).enumerate() {
            let got = g.return_type(c.rule);
            if got != *t {
                return Err(ProgramParseError::Type {
                    label: label.to_string(),
                    position: i + 1,
                    expected: g.type_name(*t).to_string(),
                    got: g.type_name(got).to_string(),
                });
            }
        }
        Ok(Program { rule, children })
    }
}
