//! Semantic programs: bind statements plus a dataflow graph of cognitive
//! operations, with s-expression (de)serialization and a canonical form.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use super::SemanticsError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    ObjectClass,
    ColorCategory,
    DynamicSpatialRelation,
    Selector,
    EventProfile,
    ParticipantRole,
}

impl Category {
    pub const ALL: [Category; 6] = [
        Category::ObjectClass,
        Category::ColorCategory,
        Category::DynamicSpatialRelation,
        Category::Selector,
        Category::EventProfile,
        Category::ParticipantRole,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Category::ObjectClass => "object-class",
            Category::ColorCategory => "color-category",
            Category::DynamicSpatialRelation => "dynamic-spatial-relation",
            Category::Selector => "selector",
            Category::EventProfile => "event-profile",
            Category::ParticipantRole => "participant-role",
        }
    }

    pub fn from_name(s: &str) -> Option<Category> {
        Category::ALL.into_iter().find(|c| c.name() == s)
    }

    /// Symbols a bind statement of this category may carry.
    pub fn legal_values(self) -> &'static [&'static str] {
        match self {
            Category::ObjectClass => &["block", "box", "region"],
            Category::ColorCategory => &["blue", "green", "red", "white", "yellow"],
            Category::DynamicSpatialRelation => &["across", "into", "out-of"],
            Category::Selector => &["unique"],
            Category::EventProfile => &["goal", "path", "source"],
            Category::ParticipantRole => &["mover"],
        }
    }
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A category paired with one of its legal values, e.g. `color-category yellow`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SemEntity {
    category: Category,
    value: String,
}

impl SemEntity {
    pub fn new(category: Category, value: &str) -> Result<SemEntity, SemanticsError> {
        if category.legal_values().contains(&value) {
            Ok(SemEntity {
                category,
                value: value.to_string(),
            })
        } else {
            Err(SemanticsError::Malformed(format!(
                "`{value}` is not a legal {category}"
            )))
        }
    }

    pub fn category(&self) -> Category {
        self.category
    }

    pub fn value(&self) -> &str {
        &self.value
    }
}

/// Profile compatible with each dynamic spatial relation.
pub fn profile_for_relation(relation: &str) -> Option<&'static str> {
    match relation {
        "across" => Some("path"),
        "into" => Some("goal"),
        "out-of" => Some("source"),
        _ => None,
    }
}

/// Variable name, always starting with `?`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(String);

impl Var {
    pub fn new(name: &str) -> Result<Var, SemanticsError> {
        let ok = name.len() > 1
            && name.starts_with('?')
            && !name[1..].contains(|c: char| c.is_whitespace() || c == '(' || c == ')' || c == '?');
        if ok {
            Ok(Var(name.to_string()))
        } else {
            Err(SemanticsError::Syntax(format!("bad variable name `{name}`")))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarType {
    Context,
    Objects,
    Events,
    Category(Category),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Op {
    GetContext,
    ApplyClass,
    ApplyColor,
    ApplyDeterminer,
    ApplyEvent,
    ApplyRole,
    ApplyProfile,
    ApplyDynamicSpatialRelation,
}

impl Op {
    pub const ALL: [Op; 8] = [
        Op::GetContext,
        Op::ApplyClass,
        Op::ApplyColor,
        Op::ApplyDeterminer,
        Op::ApplyEvent,
        Op::ApplyRole,
        Op::ApplyProfile,
        Op::ApplyDynamicSpatialRelation,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Op::GetContext => "get-context",
            Op::ApplyClass => "apply-class",
            Op::ApplyColor => "apply-color",
            Op::ApplyDeterminer => "apply-determiner",
            Op::ApplyEvent => "apply-event",
            Op::ApplyRole => "apply-role",
            Op::ApplyProfile => "apply-profile",
            Op::ApplyDynamicSpatialRelation => "apply-dynamic-spatial-relation",
        }
    }

    pub fn from_name(s: &str) -> Option<Op> {
        Op::ALL.into_iter().find(|o| o.name() == s)
    }

    /// Argument types; position 0 is the output.
    pub fn signature(self) -> &'static [VarType] {
        use Category as C;
        use VarType::{Context as X, Events as E, Objects as O};
        match self {
            Op::GetContext => &[X],
            Op::ApplyClass => &[O, X, VarType::Category(C::ObjectClass)],
            Op::ApplyColor => &[O, O, VarType::Category(C::ColorCategory)],
            Op::ApplyDeterminer => &[O, O, VarType::Category(C::Selector)],
            Op::ApplyEvent => &[E, X],
            Op::ApplyRole => &[E, E, O, VarType::Category(C::ParticipantRole)],
            Op::ApplyProfile => &[E, E, VarType::Category(C::EventProfile)],
            Op::ApplyDynamicSpatialRelation => &[E, E, O, VarType::Category(C::DynamicSpatialRelation)],
        }
    }

    /// Stem used for canonical names of this op's output variable.
    fn output_stem(self) -> &'static str {
        match self {
            Op::GetContext => "ctx",
            Op::ApplyClass | Op::ApplyColor => "set",
            Op::ApplyDeterminer => "ref",
            Op::ApplyEvent | Op::ApplyRole | Op::ApplyProfile | Op::ApplyDynamicSpatialRelation => "ev",
        }
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BindStatement {
    pub var: Var,
    pub entity: SemEntity,
}

impl fmt::Display for BindStatement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "(bind {} {} {})",
            self.entity.category(),
            self.var,
            self.entity.value()
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CogOpNode {
    pub op: Op,
    pub args: Vec<Var>,
}

impl CogOpNode {
    pub fn output(&self) -> &Var {
        &self.args[0]
    }

    pub fn inputs(&self) -> &[Var] {
        &self.args[1..]
    }
}

impl fmt::Display for CogOpNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.op)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        f.write_str(")")
    }
}

/// A statement of a program.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Statement {
    Bind(BindStatement),
    Node(CogOpNode),
}

impl fmt::Display for Statement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Statement::Bind(b) => b.fmt(f),
            Statement::Node(n) => n.fmt(f),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Producer {
    Bind(usize),
    Node(usize),
}

/// A semantic program. May be partial: consumed variables without a
/// producer are open slots.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct IrlProgram {
    pub nodes: Vec<CogOpNode>,
    pub binds: Vec<BindStatement>,
}

impl IrlProgram {
    pub fn new(nodes: Vec<CogOpNode>, binds: Vec<BindStatement>) -> IrlProgram {
        IrlProgram { nodes, binds }
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty() && self.binds.is_empty()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn statements(&self) -> impl Iterator<Item = Statement> + '_ {
        self.binds
            .iter()
            .cloned()
            .map(Statement::Bind)
            .chain(self.nodes.iter().cloned().map(Statement::Node))
    }

    pub fn push(&mut self, s: Statement) {
        match s {
            Statement::Bind(b) => self.binds.push(b),
            Statement::Node(n) => self.nodes.push(n),
        }
    }

    fn producers(&self) -> Result<HashMap<&Var, Producer>, SemanticsError> {
        let mut out = HashMap::new();
        for (i, b) in self.binds.iter().enumerate() {
            if out.insert(&b.var, Producer::Bind(i)).is_some() {
                return Err(SemanticsError::Malformed(format!(
                    "{} is bound more than once",
                    b.var
                )));
            }
        }
        for (i, n) in self.nodes.iter().enumerate() {
            if out.insert(n.output(), Producer::Node(i)).is_some() {
                return Err(SemanticsError::Malformed(format!(
                    "{} is produced more than once",
                    n.output()
                )));
            }
        }
        Ok(out)
    }

    /// Checks everything except completeness and connectivity: arities,
    /// single producers, type agreement and acyclicity.
    pub fn check_structure(&self) -> Result<(), SemanticsError> {
        for n in &self.nodes {
            if n.args.len() != n.op.signature().len() {
                return Err(SemanticsError::Malformed(format!(
                    "{} expects {} arguments, got {}",
                    n.op,
                    n.op.signature().len(),
                    n.args.len()
                )));
            }
            if n.inputs().contains(n.output()) {
                return Err(SemanticsError::Malformed(format!("{n} consumes its own output")));
            }
        }
        let producers = self.producers()?;
        self.var_types()?;
        // Kahn's algorithm over node dependencies.
        let mut indegree: Vec<usize> = self
            .nodes
            .iter()
            .map(|n| {
                n.inputs()
                    .iter()
                    .filter(|v| matches!(producers.get(v), Some(Producer::Node(_))))
                    .count()
            })
            .collect();
        let mut ready: Vec<usize> = (0..self.nodes.len()).filter(|&i| indegree[i] == 0).collect();
        let mut seen = 0;
        while let Some(i) = ready.pop() {
            seen += 1;
            let out = self.nodes[i].output();
            for (j, m) in self.nodes.iter().enumerate() {
                let uses = m.inputs().iter().filter(|v| *v == out).count();
                if uses > 0 {
                    indegree[j] -= uses;
                    if indegree[j] == 0 {
                        ready.push(j);
                    }
                }
            }
        }
        if seen != self.nodes.len() {
            return Err(SemanticsError::Malformed("cycle through node outputs".into()));
        }
        Ok(())
    }

    /// Type of every variable, inferred from op signatures and binds.
    pub fn var_types(&self) -> Result<BTreeMap<Var, VarType>, SemanticsError> {
        let mut types: BTreeMap<Var, VarType> = BTreeMap::new();
        let mut assign = |v: &Var, t: VarType| -> Result<(), SemanticsError> {
            match types.get(v) {
                Some(prev) if *prev != t => Err(SemanticsError::Malformed(format!(
                    "{v} used as both {prev:?} and {t:?}"
                ))),
                _ => {
                    types.insert(v.clone(), t);
                    Ok(())
                }
            }
        };
        for b in &self.binds {
            assign(&b.var, VarType::Category(b.entity.category()))?;
        }
        for n in &self.nodes {
            for (v, t) in n.args.iter().zip(n.op.signature()) {
                assign(v, *t)?;
            }
        }
        Ok(types)
    }

    /// Variables consumed by some node but produced by nothing.
    pub fn open_inputs(&self) -> BTreeSet<Var> {
        let produced: BTreeSet<&Var> = self
            .binds
            .iter()
            .map(|b| &b.var)
            .chain(self.nodes.iter().map(|n| n.output()))
            .collect();
        self.nodes
            .iter()
            .flat_map(|n| n.inputs())
            .filter(|v| !produced.contains(v))
            .cloned()
            .collect()
    }

    /// Produced variables that nothing consumes.
    pub fn sinks(&self) -> Vec<Var> {
        let consumed: BTreeSet<&Var> = self.nodes.iter().flat_map(|n| n.inputs()).collect();
        let mut out: Vec<Var> = self
            .binds
            .iter()
            .map(|b| &b.var)
            .chain(self.nodes.iter().map(|n| n.output()))
            .filter(|v| !consumed.contains(v))
            .cloned()
            .collect();
        out.sort();
        out
    }

    pub fn producer_op(&self, v: &Var) -> Option<Op> {
        self.nodes.iter().find(|n| n.output() == v).map(|n| n.op)
    }

    fn is_connected(&self) -> bool {
        let all: Vec<&Var> = self
            .binds
            .iter()
            .map(|b| &b.var)
            .chain(self.nodes.iter().flat_map(|n| n.args.iter()))
            .collect();
        let Some(first) = all.first() else {
            return true;
        };
        let mut reached: BTreeSet<&Var> = BTreeSet::from([*first]);
        loop {
            let before = reached.len();
            for n in &self.nodes {
                if n.args.iter().any(|a| reached.contains(a)) {
                    reached.extend(n.args.iter());
                }
            }
            if reached.len() == before {
                break;
            }
        }
        all.iter().all(|v| reached.contains(v))
    }

    /// Full well-formedness: structure, every variable produced, connected.
    pub fn validate(&self) -> Result<(), SemanticsError> {
        self.check_structure()?;
        if let Some(v) = self.open_inputs().into_iter().next() {
            return Err(SemanticsError::Malformed(format!("{v} is never produced")));
        }
        if !self.is_connected() {
            return Err(SemanticsError::Malformed(
                "variable-sharing graph is not connected".into(),
            ));
        }
        Ok(())
    }

    pub fn is_complete(&self) -> bool {
        !self.is_empty() && self.validate().is_ok()
    }

    /// Renames variables deterministically from the graph structure and
    /// sorts statements, so that programs equal up to variable names and
    /// statement order have identical canonical forms.
    pub fn canonical(&self) -> IrlProgram {
        let renaming = self.canonical_names();
        let rename = |v: &Var| renaming.get(v).cloned().unwrap_or_else(|| v.clone());
        let mut binds: Vec<BindStatement> = self
            .binds
            .iter()
            .map(|b| BindStatement {
                var: rename(&b.var),
                entity: b.entity.clone(),
            })
            .collect();
        let mut nodes: Vec<CogOpNode> = self
            .nodes
            .iter()
            .map(|n| CogOpNode {
                op: n.op,
                args: n.args.iter().map(rename).collect(),
            })
            .collect();
        binds.sort_by_cached_key(|b| b.to_string());
        nodes.sort_by_cached_key(|n| n.to_string());
        IrlProgram { nodes, binds }
    }

    fn canonical_names(&self) -> HashMap<Var, Var> {
        let producers = self.producers().unwrap_or_default();
        let mut terms: HashMap<Var, String> = HashMap::new();
        let mut roots: Vec<(String, Var)> = self
            .sinks()
            .into_iter()
            .map(|v| (self.term(&v, &producers, &mut terms, 0), v))
            .collect();
        roots.sort();

        let mut names: HashMap<Var, Var> = HashMap::new();
        let mut counters: HashMap<String, usize> = HashMap::new();
        let mut stack: Vec<Var> = roots.into_iter().rev().map(|(_, v)| v).collect();
        while let Some(v) = stack.pop() {
            if names.contains_key(&v) {
                continue;
            }
            let stem = match producers.get(&v) {
                Some(Producer::Bind(i)) => self.binds[*i].entity.value().to_string(),
                Some(Producer::Node(i)) => self.nodes[*i].op.output_stem().to_string(),
                None => "open".to_string(),
            };
            let k = counters.entry(stem.clone()).or_insert(0);
            *k += 1;
            names.insert(v.clone(), Var(format!("?{stem}-{k}")));
            if let Some(Producer::Node(i)) = producers.get(&v) {
                for a in self.nodes[*i].inputs().iter().rev() {
                    if !names.contains_key(a) {
                        stack.push(a.clone());
                    }
                }
            }
        }
        // Anything unreachable from a sink (only possible in cyclic input).
        let mut rest: Vec<&Var> = self
            .binds
            .iter()
            .map(|b| &b.var)
            .chain(self.nodes.iter().flat_map(|n| n.args.iter()))
            .filter(|v| !names.contains_key(*v))
            .collect();
        rest.sort();
        rest.dedup();
        for v in rest {
            let k = counters.entry("var".into()).or_insert(0);
            *k += 1;
            names.insert(v.clone(), Var(format!("?var-{k}")));
        }
        names
    }

    fn term(
        &self,
        v: &Var,
        producers: &HashMap<&Var, Producer>,
        memo: &mut HashMap<Var, String>,
        depth: usize,
    ) -> String {
        if let Some(t) = memo.get(v) {
            return t.clone();
        }
        if depth > self.nodes.len() + 1 {
            return "(cycle)".into();
        }
        let t = match producers.get(v) {
            Some(Producer::Bind(i)) => {
                let b = &self.binds[*i];
                format!("(bind {} {})", b.entity.category(), b.entity.value())
            }
            Some(Producer::Node(i)) => {
                let n = &self.nodes[*i];
                let mut s = format!("({}", n.op);
                for a in n.inputs() {
                    s.push(' ');
                    s.push_str(&self.term(a, producers, memo, depth + 1));
                }
                s.push(')');
                s
            }
            None => "(open)".into(),
        };
        memo.insert(v.clone(), t.clone());
        t
    }

    /// Canonical s-expression text: binds then nodes, one per line.
    pub fn to_sexpr(&self) -> String {
        self.canonical().to_string()
    }
}

impl fmt::Display for IrlProgram {
    /// Statements in their current order, one per line.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in self.statements() {
            writeln!(f, "{s}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

fn read_sexps(text: &str) -> Result<Vec<Sexp>, SemanticsError> {
    let mut stack: Vec<Vec<Sexp>> = vec![Vec::new()];
    let mut atom = String::new();
    let flush = |atom: &mut String, stack: &mut Vec<Vec<Sexp>>| {
        if !atom.is_empty() {
            stack
                .last_mut()
                .expect("stack never empties while reading")
                .push(Sexp::Atom(std::mem::take(atom)));
        }
    };
    for c in text.chars() {
        match c {
            '(' => {
                flush(&mut atom, &mut stack);
                stack.push(Vec::new());
            }
            ')' => {
                flush(&mut atom, &mut stack);
                if stack.len() < 2 {
                    return Err(SemanticsError::Syntax("unbalanced `)`".into()));
                }
                let list = stack.pop().expect("checked above");
                stack.last_mut().expect("checked above").push(Sexp::List(list));
            }
            c if c.is_whitespace() => flush(&mut atom, &mut stack),
            c => atom.push(c),
        }
    }
    flush(&mut atom, &mut stack);
    if stack.len() != 1 {
        return Err(SemanticsError::Syntax("unbalanced `(`".into()));
    }
    Ok(stack.pop().expect("one level left"))
}

/// Parses a sequence of `(bind <category> ?var <value>)` and
/// `(<op> ?out ?in ...)` statements. Whitespace is insignificant.
pub fn parse_program(text: &str) -> Result<IrlProgram, SemanticsError> {
    let mut program = IrlProgram::default();
    for sexp in read_sexps(text)? {
        let Sexp::List(items) = sexp else {
            return Err(SemanticsError::Syntax(format!(
                "expected a statement, found atom {sexp:?}"
            )));
        };
        let atoms: Vec<&str> = items
            .iter()
            .map(|i| match i {
                Sexp::Atom(a) => Ok(a.as_str()),
                Sexp::List(_) => Err(SemanticsError::Syntax("nested list in statement".into())),
            })
            .collect::<Result<_, _>>()?;
        match atoms.as_slice() {
            [] => return Err(SemanticsError::Syntax("empty statement".into())),
            ["bind", cat, var, value] => {
                let category = Category::from_name(cat)
                    .ok_or_else(|| SemanticsError::Malformed(format!("unknown category `{cat}`")))?;
                program.binds.push(BindStatement {
                    var: Var::new(var)?,
                    entity: SemEntity::new(category, value)?,
                });
            }
            ["bind", ..] => {
                return Err(SemanticsError::Syntax(
                    "bind takes a category, a variable and a value".into(),
                ))
            }
            [op, args @ ..] => {
                let op = Op::from_name(op).ok_or_else(|| SemanticsError::UnknownOp(op.to_string()))?;
                program.nodes.push(CogOpNode {
                    op,
                    args: args.iter().map(|a| Var::new(a)).collect::<Result<_, _>>()?,
                });
            }
        }
    }
    program.check_structure()?;
    Ok(program)
}
