//! Typed context-free grammars with stable, 1-based rule indices.
//!
//! Rule indices are assigned in declaration order and every constraint
//! refers to rules through them (constraint files name rules by label, which
//! is resolved to an index at load time). Reordering the lines of a grammar
//! file therefore silently changes what a constraint set means, and also
//! changes the tree order used by `Ordered` constraints.

use std::collections::HashMap;
use std::fmt;

use thiserror::Error;

/// Index of a derivation rule. Displayed and parsed 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RuleId(u16);

impl RuleId {
    /// Builds a rule id from its 1-based index.
    pub fn new(index: usize) -> Self {
        assert!(index >= 1 && index <= u16::MAX as usize, "rule index out of range");
        RuleId(index as u16)
    }

    /// 1-based index.
    pub fn index(self) -> usize {
        self.0 as usize
    }

    /// 0-based slot, for indexing per-rule tables.
    pub fn slot(self) -> usize {
        self.0 as usize - 1
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TypeId(u16);

impl TypeId {
    pub fn slot(self) -> usize {
        self.0 as usize
    }
}

/// Identifies a (return type, child types) signature. Rules sharing a shape
/// can replace each other without changing the shape of an AST.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ShapeId(u16);

impl ShapeId {
    pub fn slot(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub index: RuleId,
    pub return_type: TypeId,
    pub label: String,
    pub child_types: Vec<TypeId>,
    pub shape: ShapeId,
}

impl Rule {
    pub fn arity(&self) -> usize {
        self.child_types.len()
    }

    pub fn is_terminal(&self) -> bool {
        self.child_types.is_empty()
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GrammarError {
    #[error("line {line}: syntax error: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: unknown type `{name}`")]
    UnknownType { line: usize, name: String },
    #[error("line {line}: duplicate `start` directive")]
    DuplicateStart { line: usize },
    #[error("line {line}: duplicate rule label `{label}`")]
    DuplicateLabel { line: usize, label: String },
    #[error("grammar has no rules")]
    Empty,
    #[error("domain mixes return types `{0}` and `{1}`")]
    MixedTypes(String, String),
    #[error("unknown rule label `{0}`")]
    UnknownLabel(String),
    #[error("unknown type `{0}`")]
    UnknownTypeName(String),
}

/// An immutable, indexed grammar. Cheap to share behind an `Arc`.
#[derive(Debug, Clone)]
pub struct Grammar {
    rules: Vec<Rule>,
    type_names: Vec<String>,
    type_rules: Vec<Vec<RuleId>>,
    start: TypeId,
    labels: HashMap<String, RuleId>,
    shape_count: usize,
    min_sizes: Vec<Option<usize>>,
    min_depths: Vec<Option<usize>>,
}

struct RawRule {
    line: usize,
    return_type: String,
    label: String,
    children: Vec<String>,
}

impl Grammar {
    /// Parses the line-based grammar format:
    ///
    /// ```text
    /// # comment
    /// start Int
    /// Int -> plus(Int, Int)
    /// Int -> 0 | 1 | x
    /// ```
    pub fn parse(text: &str) -> Result<Grammar, GrammarError> {
        let mut raw = Vec::new();
        let mut start: Option<(usize, String)> = None;
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = match line.find('#') {
                Some(pos) => &line[..pos],
                None => line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("start") {
                if rest.is_empty() || rest.starts_with(char::is_whitespace) {
                    let name = rest.trim();
                    if name.is_empty() || !is_ident(name) {
                        return Err(syntax(line_no, "expected `start <Type>`"));
                    }
                    if start.is_some() {
                        return Err(GrammarError::DuplicateStart { line: line_no });
                    }
                    start = Some((line_no, name.to_string()));
                    continue;
                }
            }
            let (lhs, rhs) = line
                .split_once("->")
                .ok_or_else(|| syntax(line_no, "expected `Type -> rule`"))?;
            let lhs = lhs.trim();
            if !is_ident(lhs) {
                return Err(syntax(line_no, format!("invalid type name `{lhs}`")));
            }
            for alt in rhs.split('|') {
                let (label, children) = parse_alternative(alt.trim(), line_no)?;
                raw.push(RawRule {
                    line: line_no,
                    return_type: lhs.to_string(),
                    label,
                    children,
                });
            }
        }
        if raw.is_empty() {
            return Err(GrammarError::Empty);
        }

        let mut type_names: Vec<String> = Vec::new();
        let mut type_ids: HashMap<String, TypeId> = HashMap::new();
        for r in &raw {
            if !type_ids.contains_key(&r.return_type) {
                type_ids.insert(r.return_type.clone(), TypeId(type_names.len() as u16));
                type_names.push(r.return_type.clone());
            }
        }

        let mut rules = Vec::with_capacity(raw.len());
        let mut labels = HashMap::new();
        let mut shapes: HashMap<(TypeId, Vec<TypeId>), ShapeId> = HashMap::new();
        for (i, r) in raw.iter().enumerate() {
            let index = RuleId::new(i + 1);
            let mut child_types = Vec::with_capacity(r.children.len());
            for c in &r.children {
                let t = type_ids.get(c).ok_or_else(|| GrammarError::UnknownType {
                    line: r.line,
                    name: c.clone(),
                })?;
                child_types.push(*t);
            }
            if labels.insert(r.label.clone(), index).is_some() {
                return Err(GrammarError::DuplicateLabel {
                    line: r.line,
                    label: r.label.clone(),
                });
            }
            let return_type = type_ids[&r.return_type];
            let next = ShapeId(shapes.len() as u16);
            let shape = *shapes.entry((return_type, child_types.clone())).or_insert(next);
            rules.push(Rule {
                index,
                return_type,
                label: r.label.clone(),
                child_types,
                shape,
            });
        }

        let start = match start {
            Some((line, name)) => *type_ids
                .get(&name)
                .ok_or(GrammarError::UnknownType { line, name })?,
            None => rules[0].return_type,
        };

        let mut type_rules = vec![Vec::new(); type_names.len()];
        for r in &rules {
            type_rules[r.return_type.slot()].push(r.index);
        }

        let mut g = Grammar {
            rules,
            type_names,
            type_rules,
            start,
            labels,
            shape_count: shapes.len(),
            min_sizes: Vec::new(),
            min_depths: Vec::new(),
        };
        g.min_sizes = g.fixpoint(|acc, child| acc + child, 0);
        g.min_depths = g.fixpoint(|acc, child| acc.max(child), 0);
        Ok(g)
    }

    // Least fixpoint of `1 + combine(children)` over the rules of every type.
    fn fixpoint(&self, combine: impl Fn(usize, usize) -> usize, unit: usize) -> Vec<Option<usize>> {
        let mut best: Vec<Option<usize>> = vec![None; self.type_names.len()];
        loop {
            let mut changed = false;
            for r in &self.rules {
                let mut acc = unit;
                let mut finite = true;
                for c in &r.child_types {
                    match best[c.slot()] {
                        Some(v) => acc = combine(acc, v),
                        None => {
                            finite = false;
                            break;
                        }
                    }
                }
                if !finite {
                    continue;
                }
                let cand = 1 + acc;
                let slot = &mut best[r.return_type.slot()];
                if slot.is_none_or(|cur| cand < cur) {
                    *slot = Some(cand);
                    changed = true;
                }
            }
            if !changed {
                return best;
            }
        }
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn rule(&self, id: RuleId) -> &Rule {
        &self.rules[id.slot()]
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    pub fn start_type(&self) -> TypeId {
        self.start
    }

    pub fn type_count(&self) -> usize {
        self.type_names.len()
    }

    pub fn shape_count(&self) -> usize {
        self.shape_count
    }

    pub fn type_name(&self, t: TypeId) -> &str {
        &self.type_names[t.slot()]
    }

    pub fn type_by_name(&self, name: &str) -> Option<TypeId> {
        self.type_names
            .iter()
            .position(|n| n == name)
            .map(|i| TypeId(i as u16))
    }

    pub fn types(&self) -> impl Iterator<Item = TypeId> + '_ {
        (0..self.type_names.len()).map(|i| TypeId(i as u16))
    }

    /// All rules returning `t`, ascending by index.
    pub fn rules_of_type(&self, t: TypeId) -> &[RuleId] {
        &self.type_rules[t.slot()]
    }

    pub fn rule_by_label(&self, label: &str) -> Option<RuleId> {
        self.labels.get(label).copied()
    }

    pub fn label(&self, r: RuleId) -> &str {
        &self.rules[r.slot()].label
    }

    pub fn arity(&self, r: RuleId) -> usize {
        self.rules[r.slot()].arity()
    }

    pub fn child_types(&self, r: RuleId) -> &[TypeId] {
        &self.rules[r.slot()].child_types
    }

    pub fn return_type(&self, r: RuleId) -> TypeId {
        self.rules[r.slot()].return_type
    }

    pub fn shape(&self, r: RuleId) -> ShapeId {
        self.rules[r.slot()].shape
    }

    pub fn is_terminal(&self, r: RuleId) -> bool {
        self.rules[r.slot()].is_terminal()
    }

    /// Smallest node count of any complete program of type `t`, or `None`
    /// when `t` derives no finite program.
    pub fn min_size(&self, t: TypeId) -> Option<usize> {
        self.min_sizes[t.slot()]
    }

    /// Smallest depth (single node = 1) of any complete program of type `t`.
    pub fn min_depth(&self, t: TypeId) -> Option<usize> {
        self.min_depths[t.slot()]
    }

    /// `1 + Σ min_size(children)` for one rule.
    pub fn rule_min_size(&self, r: RuleId) -> Option<usize> {
        self.child_types(r)
            .iter()
            .try_fold(1, |acc, c| self.min_size(*c).map(|m| acc + m))
    }

    pub fn rule_min_depth(&self, r: RuleId) -> Option<usize> {
        self.child_types(r)
            .iter()
            .try_fold(0, |acc, c| self.min_depth(*c).map(|m| acc.max(m)))
            .map(|d| d + 1)
    }

    /// Splits `domain` into groups of rules with equal shape signature.
    /// Groups are ordered by their smallest rule index.
    pub fn shape_partition(&self, domain: &[RuleId]) -> Result<Vec<Vec<RuleId>>, GrammarError> {
        let mut sorted = domain.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if let Some(first) = sorted.first() {
            let t = self.return_type(*first);
            if let Some(bad) = sorted.iter().find(|r| self.return_type(**r) != t) {
                return Err(GrammarError::MixedTypes(
                    self.type_name(t).to_string(),
                    self.type_name(self.return_type(*bad)).to_string(),
                ));
            }
        }
        let mut parts: Vec<(ShapeId, Vec<RuleId>)> = Vec::new();
        for r in sorted {
            let s = self.shape(r);
            match parts.iter_mut().find(|(shape, _)| *shape == s) {
                Some((_, part)) => part.push(r),
                None => parts.push((s, vec![r])),
            }
        }
        Ok(parts.into_iter().map(|(_, p)| p).collect())
    }

    /// Resolves a whitespace- or comma-separated list of labels.
    pub fn resolve_labels<'a>(
        &self,
        labels: impl IntoIterator<Item = &'a str>,
    ) -> Result<Vec<RuleId>, GrammarError> {
        labels
            .into_iter()
            .map(|l| {
                self.rule_by_label(l)
                    .ok_or_else(|| GrammarError::UnknownLabel(l.to_string()))
            })
            .collect()
    }

    /// Renders the grammar back into the file format, one rule per line.
    pub fn to_source(&self) -> String {
        let mut out = format!("start {}\n", self.type_name(self.start));
        for r in &self.rules {
            out.push_str(self.type_name(r.return_type));
            out.push_str(" -> ");
            out.push_str(&r.label);
            if !r.child_types.is_empty() {
                out.push('(');
                for (i, c) in r.child_types.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    out.push_str(self.type_name(*c));
                }
                out.push(')');
            }
            out.push('\n');
        }
        out
    }
}

fn syntax(line: usize, message: impl Into<String>) -> GrammarError {
    GrammarError::Syntax {
        line,
        message: message.into(),
    }
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_alphabetic() || c == '_')
        && chars.all(|c| c.is_alphanumeric() || c == '_')
}

pub(crate) fn is_label(s: &str) -> bool {
    !s.is_empty()
        && !s
            .chars()
            .any(|c| c.is_whitespace() || matches!(c, '(' | ')' | ',' | '|' | '#' | ';' | '{' | '}'))
}

fn parse_alternative(alt: &str, line: usize) -> Result<(String, Vec<String>), GrammarError> {
    if alt.is_empty() {
        return Err(syntax(line, "empty alternative"));
    }
    // A label may itself contain brackets (`[]`) but not parentheses, so the
    // first `(` opens the child list.
    let (label, children) = match alt.find('(') {
        None => (alt, Vec::new()),
        Some(open) => {
            let inner = alt[open + 1..]
                .strip_suffix(')')
                .ok_or_else(|| syntax(line, "unclosed child list"))?;
            let children: Vec<String> = inner.split(',').map(|c| c.trim().to_string()).collect();
            if children.iter().any(|c| !is_ident(c)) {
                return Err(syntax(line, format!("invalid child type list `{inner}`")));
            }
            (alt[..open].trim(), children)
        }
    };
    if !is_label(label) {
        return Err(syntax(line, format!("invalid rule label `{label}`")));
    }
    Ok((label.to_string(), children))
}
