//! Global constraints: definitions, the constraint-file parser, the
//! retrospective checker used as the generate-and-test oracle, and grounding
//! of domain nodes.

use std::fmt;

use thiserror::Error;

use crate::grammar::{Grammar, RuleId};
use crate::matcher::{bind_complete, lex_compare, matches_complete, TemplateTree};
use crate::program::Program;
use crate::sexpr::{self, ParseError, Sexpr};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Constraint {
    /// No subtree matches the template.
    Forbid(TemplateTree),
    /// Some subtree matches the template.
    Contains(TemplateTree),
    /// At most one subtree (by position) matches the template.
    Unique(TemplateTree),
    /// At every matching subtree, the bound variables are non-decreasing in
    /// lex order along `order`.
    Ordered {
        template: TemplateTree,
        order: Vec<String>,
    },
    /// No root-to-leaf path holds `sequence` in order (not necessarily
    /// adjacent) without an `ignore_if` rule strictly between two
    /// consecutive elements.
    ForbiddenSequence {
        sequence: Vec<RuleId>,
        ignore_if: Vec<RuleId>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConstraintKind {
    Forbid,
    Contains,
    Unique,
    Ordered,
    ForbiddenSequence,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroundError {
    #[error("grounding a {0:?} constraint with domain nodes would change its meaning")]
    NotConjunctive(ConstraintKind),
}

impl Constraint {
    pub fn kind(&self) -> ConstraintKind {
        match self {
            Constraint::Forbid(_) => ConstraintKind::Forbid,
            Constraint::Contains(_) => ConstraintKind::Contains,
            Constraint::Unique(_) => ConstraintKind::Unique,
            Constraint::Ordered { .. } => ConstraintKind::Ordered,
            Constraint::ForbiddenSequence { .. } => ConstraintKind::ForbiddenSequence,
        }
    }

    pub fn template(&self) -> Option<&TemplateTree> {
        match self {
            Constraint::Forbid(t) | Constraint::Contains(t) | Constraint::Unique(t) => Some(t),
            Constraint::Ordered { template, .. } => Some(template),
            Constraint::ForbiddenSequence { .. } => None,
        }
    }

    /// Whether a violation inside a subprogram is also a violation of every
    /// program containing it. Only `Contains` lacks this property.
    pub fn is_subtree_closed(&self) -> bool {
        !matches!(self, Constraint::Contains(_))
    }

    /// Retrospective check of a complete program.
    pub fn check(&self, program: &Program) -> bool {
        match self {
            Constraint::Forbid(t) => !program.subtrees().any(|s| matches_complete(s, t)),
            Constraint::Contains(t) => program.subtrees().any(|s| matches_complete(s, t)),
            Constraint::Unique(t) => program.subtrees().filter(|s| matches_complete(s, t)).count() <= 1,
            Constraint::Ordered { template, order } => program.subtrees().all(|s| {
                let Some(b) = bind_complete(s, template) else {
                    return true;
                };
                let get = |name: &str| b.iter().find(|(n, _)| *n == name).map(|(_, p)| *p);
                order.windows(2).all(|w| match (get(&w[0]), get(&w[1])) {
                    (Some(x), Some(y)) => lex_compare(x, y).is_le(),
                    _ => true,
                })
            }),
            Constraint::ForbiddenSequence {
                sequence,
                ignore_if,
            } => !sequence_on_some_path(program, sequence, ignore_if),
        }
    }

    /// Expands every domain node into value nodes. The conjunction of the
    /// result is equivalent to `self` for `Forbid` and `Ordered`.
    pub fn ground(&self) -> Result<Vec<Constraint>, GroundError> {
        let Some(t) = self.template() else {
            return Ok(vec![self.clone()]);
        };
        if !t.has_domain_nodes() {
            return Ok(vec![self.clone()]);
        }
        let expanded = expand(t);
        match self {
            Constraint::Forbid(_) => Ok(expanded.into_iter().map(Constraint::Forbid).collect()),
            Constraint::Ordered { order, .. } => Ok(expanded
                .into_iter()
                .map(|template| Constraint::Ordered {
                    template,
                    order: order.clone(),
                })
                .collect()),
            other => Err(GroundError::NotConjunctive(other.kind())),
        }
    }

    pub fn to_sexpr(&self, g: &Grammar) -> String {
        let labels = |rs: &[RuleId]| rs.iter().map(|r| g.label(*r)).collect::<Vec<_>>().join(" ");
        match self {
            Constraint::Forbid(t) => format!("(forbid {})", t.to_sexpr(g)),
            Constraint::Contains(t) => format!("(contains {})", t.to_sexpr(g)),
            Constraint::Unique(t) => format!("(unique {})", t.to_sexpr(g)),
            Constraint::Ordered { template, order } => {
                format!("(ordered {} ({}))", template.to_sexpr(g), order.join(" "))
            }
            Constraint::ForbiddenSequence {
                sequence,
                ignore_if,
            } => format!(
                "(forbidden-sequence ({}) (ignore {}))",
                labels(sequence),
                labels(ignore_if)
            ),
        }
    }

    pub fn display<'a>(&'a self, g: &'a Grammar) -> impl fmt::Display + 'a {
        struct D<'a>(&'a Constraint, &'a Grammar);
        impl fmt::Display for D<'_> {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0.to_sexpr(self.1))
            }
        }
        D(self, g)
    }
}

/// Checks every constraint against `program`.
pub fn check_all(constraints: &[Constraint], program: &Program) -> bool {
    constraints.iter().all(|c| c.check(program))
}

/// Parses a constraint file: one s-expression form per constraint,
/// `;` comments.
///
/// ```text
/// (forbid (rule * (var a) 0))
/// (ordered (rule + :a :b) (a b))
/// (forbidden-sequence (moveLeft moveRight) (ignore drop grab))
/// ```
pub fn parse_constraints(g: &Grammar, text: &str) -> Result<Vec<Constraint>, ParseError> {
    sexpr::parse_all(text)?
        .iter()
        .map(|form| parse_form(g, form))
        .collect()
}

fn parse_form(g: &Grammar, form: &Sexpr) -> Result<Constraint, ParseError> {
    let line = form.line();
    let err = |message: String| ParseError { line, message };
    let items = form
        .list()
        .ok_or_else(|| err("expected a parenthesised constraint".into()))?;
    let head = items
        .first()
        .and_then(Sexpr::atom)
        .ok_or_else(|| err("expected a constraint name".into()))?;
    let one_template = || match items {
        [_, t] => TemplateTree::from_sexpr(g, t),
        _ => Err(err(format!("`{head}` takes exactly one template"))),
    };
    match head {
        "forbid" => Ok(Constraint::Forbid(one_template()?)),
        "contains" => Ok(Constraint::Contains(one_template()?)),
        "unique" => Ok(Constraint::Unique(one_template()?)),
        "ordered" => {
            let [_, t, names] = items else {
                return Err(err("`ordered` takes a template and a name list".into()));
            };
            let template = TemplateTree::from_sexpr(g, t)?;
            let names = names
                .list()
                .ok_or_else(|| err("`ordered` needs a list of variable names".into()))?;
            let mut order = Vec::with_capacity(names.len());
            for n in names {
                let name = n
                    .atom()
                    .ok_or_else(|| err("variable names must be atoms".into()))?;
                let name = name.strip_prefix(':').unwrap_or(name);
                if !template.var_names().contains(&name) {
                    return Err(err(format!("`{name}` is not a variable of the template")));
                }
                order.push(name.to_string());
            }
            if order.is_empty() {
                return Err(err("`ordered` needs at least one variable".into()));
            }
            Ok(Constraint::Ordered { template, order })
        }
        "forbidden-sequence" => {
            let labels = |e: &Sexpr, skip: usize| -> Result<Vec<RuleId>, ParseError> {
                let list = e.list().ok_or_else(|| err("expected a label list".into()))?;
                list.iter()
                    .skip(skip)
                    .map(|l| {
                        let l = l.atom().ok_or_else(|| err("labels must be atoms".into()))?;
                        g.rule_by_label(l)
                            .ok_or_else(|| err(format!("unknown rule label `{l}`")))
                    })
                    .collect()
            };
            let (seq, ignore) = match items {
                [_, s] => (s, None),
                [_, s, i] => (s, Some(i)),
                _ => return Err(err("`forbidden-sequence` takes a sequence and an ignore list".into())),
            };
            let sequence = labels(seq, 0)?;
            if sequence.len() < 2 {
                return Err(err("a forbidden sequence needs at least two elements".into()));
            }
            let ignore_if = match ignore {
                None => Vec::new(),
                Some(i) => {
                    if i.list().and_then(|l| l.first()).and_then(Sexpr::atom) != Some("ignore") {
                        return Err(err("expected `(ignore label...)`".into()));
                    }
                    labels(i, 1)?
                }
            };
            Ok(Constraint::ForbiddenSequence {
                sequence,
                ignore_if,
            })
        }
        other => Err(err(format!("unknown constraint `{other}`"))),
    }
}

// Cartesian expansion of domain nodes.
fn expand(t: &TemplateTree) -> Vec<TemplateTree> {
    let child_sets: Vec<Vec<TemplateTree>> = t.children().iter().map(expand).collect();
    let mut combos: Vec<Vec<TemplateTree>> = vec![Vec::new()];
    for set in &child_sets {
        combos = combos
            .into_iter()
            .flat_map(|prefix| {
                set.iter().map(move |c| {
                    let mut v = prefix.clone();
                    v.push(c.clone());
                    v
                })
            })
            .collect();
    }
    let roots: Vec<RuleId> = match t {
        TemplateTree::Var(_) => return vec![t.clone()],
        TemplateTree::Value { rule, .. } => vec![*rule],
        TemplateTree::Domain { rules, .. } => rules.clone(),
    };
    roots
        .iter()
        .flat_map(|r| combos.iter().map(move |cs| TemplateTree::value(*r, cs.clone())))
        .collect()
}

fn sequence_on_some_path(p: &Program, seq: &[RuleId], ignore: &[RuleId]) -> bool {
    // alive[j]: the first j elements are matched above, with no ignore rule
    // after the j-th one.
    fn walk(p: &Program, seq: &[RuleId], ignore: &[RuleId], alive: &[bool]) -> bool {
        let k = seq.len();
        let r = p.rule;
        if r == seq[k - 1] && alive[k - 1] {
            return true;
        }
        let mut next = vec![false; k];
        let ignored = ignore.contains(&r);
        for j in 1..k {
            if alive[j] && !ignored {
                next[j] = true;
            }
        }
        for j in 1..k - 1 {
            if alive[j] && r == seq[j] {
                next[j + 1] = true;
            }
        }
        if r == seq[0] {
            next[1] = true;
        }
        p.children.iter().any(|c| walk(c, seq, ignore, &next))
    }
    walk(p, seq, ignore, &vec![false; seq.len()])
}
