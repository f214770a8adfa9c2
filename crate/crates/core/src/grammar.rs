//! A bidirectional construction grammar for motion descriptions. The same
//! constructions turn a semantic program into an English phrase and an
//! English phrase back into a (possibly partial) program.
//!
//! Constructions operate on a [`TransientStructure`] of units. Lexical
//! constructions pair a stem with a bind statement or operation,
//! functional ones give a lexical item its word class together with the
//! operation that word class contributes, and phrasal ones group
//! constituents in order and tie their variables together.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::semantics::{
    parse_program, profile_for_relation, BindStatement, Category, CogOpNode, IrlProgram, Op, SemEntity,
    Statement, Var,
};

const DEFAULT_MANIFEST: &str = include_str!("../fixtures/grammar.txt");

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GrammarError {
    #[error("unexpressible: {0}")]
    Unexpressible(String),
    #[error("unparseable: {0}")]
    Unparseable(String),
    #[error("grammar manifest line {line}: {message}")]
    Manifest { line: usize, message: String },
}

/// A construction did not apply. The reason is for diagnostics only.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no match: {reason}")]
pub struct NoMatch {
    pub reason: String,
}

fn no_match<T>(reason: impl Into<String>) -> Result<T, NoMatch> {
    Err(NoMatch {
        reason: reason.into(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ConstructionKind {
    Lexical,
    Functional,
    Phrasal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Produce,
    Parse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum WordClass {
    Determiner,
    Adjective,
    Noun,
    Verb,
    Preposition,
}

impl WordClass {
    const ALL: [WordClass; 5] = [
        WordClass::Determiner,
        WordClass::Adjective,
        WordClass::Noun,
        WordClass::Verb,
        WordClass::Preposition,
    ];

    pub fn name(self) -> &'static str {
        match self {
            WordClass::Determiner => "determiner",
            WordClass::Adjective => "adjective",
            WordClass::Noun => "noun",
            WordClass::Verb => "verb",
            WordClass::Preposition => "preposition",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Phrase {
    Nominal,
    NounPhrase,
    PrepositionalPhrase,
    VerbPhrase,
    Clause,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Schema {
    AdjectiveNoun,
    BareNominal,
    DeterminedNp,
    PrepositionalPhrase,
    VerbPhrase,
    Clause,
}

impl Schema {
    fn from_name(name: &str) -> Option<Schema> {
        Some(match name {
            "adjective-noun" => Schema::AdjectiveNoun,
            "bare-nominal" => Schema::BareNominal,
            "determined-np" => Schema::DeterminedNp,
            "prepositional-phrase" => Schema::PrepositionalPhrase,
            "verb-phrase" => Schema::VerbPhrase,
            "clause" => Schema::Clause,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Meaning {
    Bind(SemEntity),
    Op(Op),
}

impl Meaning {
    fn lexical_category(&self) -> &'static str {
        match self {
            Meaning::Bind(e) => e.category().name(),
            Meaning::Op(op) => op.name(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Rule {
    Word {
        stem: String,
        meaning: Meaning,
    },
    Multiword {
        stem: String,
        tokens: Vec<String>,
        parse_only: bool,
    },
    Class {
        lexical: String,
        class: WordClass,
    },
    Phrase(Schema),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Construction {
    name: String,
    kind: ConstructionKind,
    rule: Rule,
}

impl Construction {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn kind(&self) -> ConstructionKind {
        self.kind
    }

    /// Whether the construction takes part in production at all.
    pub fn produces(&self) -> bool {
        !matches!(self.rule, Rule::Multiword { parse_only: true, .. })
    }
}

/// An ordered construction inventory.
#[derive(Debug, Clone, PartialEq)]
pub struct Grammar {
    constructions: Vec<Construction>,
}

impl Default for Grammar {
    fn default() -> Self {
        Grammar::from_manifest(DEFAULT_MANIFEST).expect("built-in grammar manifest is valid")
    }
}

impl Grammar {
    pub fn empty() -> Grammar {
        Grammar {
            constructions: vec![],
        }
    }

    pub fn constructions(&self) -> &[Construction] {
        &self.constructions
    }

    pub fn len(&self) -> usize {
        self.constructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constructions.is_empty()
    }

    /// The grammar without the named constructions.
    pub fn without(&self, names: &[&str]) -> Grammar {
        Grammar {
            constructions: self
                .constructions
                .iter()
                .filter(|c| !names.contains(&c.name.as_str()))
                .cloned()
                .collect(),
        }
    }

    pub fn from_manifest(text: &str) -> Result<Grammar, GrammarError> {
        let mut constructions: Vec<Construction> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| GrammarError::Manifest { line: i + 1, message };
            let fields: Vec<&str> = line.split_whitespace().collect();
            let c = parse_manifest_line(&fields).map_err(err)?;
            if constructions.iter().any(|o| o.name == c.name) {
                return Err(err(format!("duplicate construction `{}`", c.name)));
            }
            constructions.push(c);
        }
        Ok(Grammar { constructions })
    }
}

fn parse_manifest_line(fields: &[&str]) -> Result<Construction, String> {
    let (&kind, rest) = fields.split_first().ok_or("empty line")?;
    let (&name, args) = rest.split_first().ok_or("missing construction name")?;
    let (kind, rule) = match (kind, args) {
        ("lexical", ["op", op, stem]) => {
            let op = Op::from_name(op).ok_or(format!("unknown operation `{op}`"))?;
            let meaning = Meaning::Op(op);
            (
                ConstructionKind::Lexical,
                Rule::Word {
                    stem: stem.to_string(),
                    meaning,
                },
            )
        }
        ("lexical", [category, value, stem]) => {
            let category = Category::from_name(category).ok_or(format!("unknown category `{category}`"))?;
            let entity = SemEntity::new(category, value).map_err(|e| e.to_string())?;
            let meaning = Meaning::Bind(entity);
            (
                ConstructionKind::Lexical,
                Rule::Word {
                    stem: stem.to_string(),
                    meaning,
                },
            )
        }
        ("multiword" | "alias", [stem, tokens @ ..]) if tokens.len() >= 2 => (
            ConstructionKind::Phrasal,
            Rule::Multiword {
                stem: stem.to_string(),
                tokens: tokens.iter().map(|t| t.to_string()).collect(),
                parse_only: kind == "alias",
            },
        ),
        ("functional", [lexical, class]) => {
            let class = WordClass::ALL
                .into_iter()
                .find(|c| c.name() == *class)
                .ok_or(format!("unknown word class `{class}`"))?;
            let known = Category::from_name(lexical).is_some() || Op::from_name(lexical).is_some();
            if !known {
                return Err(format!("unknown lexical category `{lexical}`"));
            }
            (
                ConstructionKind::Functional,
                Rule::Class {
                    lexical: lexical.to_string(),
                    class,
                },
            )
        }
        ("phrasal", []) => {
            let schema = Schema::from_name(name).ok_or(format!("unknown phrasal construction `{name}`"))?;
            (ConstructionKind::Phrasal, Rule::Phrase(schema))
        }
        _ => return Err(format!("cannot read `{}`", fields.join(" "))),
    };
    Ok(Construction {
        name: name.to_string(),
        kind,
        rule,
    })
}

/// An ordered list of lowercase words.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub struct Utterance {
    pub tokens: Vec<String>,
}

impl Utterance {
    /// Lowercases and splits on whitespace, dropping punctuation.
    pub fn from_text(text: &str) -> Utterance {
        let tokens = text
            .split_whitespace()
            .map(|w| {
                w.chars()
                    .filter(|c| c.is_alphanumeric() || *c == '-')
                    .flat_map(char::to_lowercase)
                    .collect::<String>()
            })
            .filter(|w| !w.is_empty())
            .collect();
        Utterance { tokens }
    }
}

impl fmt::Display for Utterance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tokens.join(" "))
    }
}

impl From<String> for Utterance {
    fn from(s: String) -> Self {
        Utterance::from_text(&s)
    }
}

impl From<Utterance> for String {
    fn from(u: Utterance) -> Self {
        u.to_string()
    }
}

/// One feature bundle of a transient structure.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Unit {
    pub name: String,
    /// Statements this unit expresses.
    pub sem: Vec<Statement>,
    /// Variable the unit denotes once its word class or phrase is known.
    pub referent: Option<Var>,
    /// Named variables other constructions attach to.
    pub hooks: BTreeMap<&'static str, Var>,
    /// Variable equalities introduced while parsing.
    pub links: Vec<(Var, Var)>,
    pub stem: Option<String>,
    pub form: Vec<String>,
    pub lexical: Option<String>,
    pub class: Option<WordClass>,
    pub phrase: Option<Phrase>,
    /// Constituents in surface order.
    pub children: Vec<String>,
    pub parent: Option<String>,
    /// Token index of the first word, when parsing.
    pub position: Option<usize>,
    pub applied: BTreeSet<String>,
}

impl Unit {
    fn hook(&self, key: &str) -> Option<&Var> {
        self.hooks.get(key)
    }

    fn is_gap(&self) -> bool {
        self.lexical.is_none() && self.phrase.is_none() && self.stem.is_none()
    }
}

/// The working structure shared by all construction applications.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TransientStructure {
    units: BTreeMap<String, Unit>,
    meaning: Vec<Statement>,
    covered: BTreeSet<Statement>,
    next: usize,
    applied: Vec<String>,
}

impl TransientStructure {
    /// A structure holding the program to express and no units yet.
    pub fn for_production(program: &IrlProgram) -> TransientStructure {
        TransientStructure {
            meaning: program.canonical().statements().collect(),
            ..Default::default()
        }
    }

    /// One unit per token, in order.
    pub fn for_parsing(utterance: &Utterance) -> TransientStructure {
        let mut ts = TransientStructure::default();
        for (i, tok) in utterance.tokens.iter().enumerate() {
            let name = ts.new_unit_name("word");
            ts.units.insert(
                name.clone(),
                Unit {
                    name,
                    form: vec![tok.clone()],
                    position: Some(i),
                    ..Default::default()
                },
            );
        }
        ts
    }

    pub fn units(&self) -> impl Iterator<Item = &Unit> {
        self.units.values()
    }

    pub fn unit(&self, name: &str) -> Option<&Unit> {
        self.units.get(name)
    }

    /// Names of the constructions applied so far, in order.
    pub fn applied(&self) -> &[String] {
        &self.applied
    }

    /// Words on the form side, counted over units without constituents.
    pub fn token_count(&self) -> usize {
        self.units
            .values()
            .filter(|u| u.children.is_empty())
            .map(|u| u.form.len())
            .sum()
    }

    fn new_unit_name(&mut self, prefix: &str) -> String {
        self.next += 1;
        format!("{prefix}-{}", self.next)
    }

    fn fresh_var(&mut self) -> Var {
        self.next += 1;
        Var::new(&format!("?v-{}", self.next)).expect("valid name")
    }

    fn uncovered(&self) -> impl Iterator<Item = &Statement> {
        self.meaning.iter().filter(|s| !self.covered.contains(*s))
    }

    fn uncovered_node(&self, op: Op, pred: impl Fn(&CogOpNode) -> bool) -> Option<CogOpNode> {
        self.uncovered().find_map(|s| match s {
            Statement::Node(n) if n.op == op && pred(n) => Some(n.clone()),
            _ => None,
        })
    }

    fn uncovered_bind(&self, var: &Var) -> Option<BindStatement> {
        self.uncovered().find_map(|s| match s {
            Statement::Bind(b) if &b.var == var => Some(b.clone()),
            _ => None,
        })
    }

    /// Units not yet grouped into a larger constituent, in surface order
    /// when positions are known.
    fn top_units(&self) -> Vec<&Unit> {
        let mut top: Vec<&Unit> = self.units.values().filter(|u| u.parent.is_none()).collect();
        top.sort_by(|a, b| a.position.cmp(&b.position).then_with(|| a.name.cmp(&b.name)));
        top
    }

    fn add_unit(&mut self, mut unit: Unit, statements: Vec<Statement>) -> String {
        for s in &statements {
            self.covered.insert(s.clone());
        }
        unit.sem.extend(statements);
        for child in &unit.children {
            if let Some(c) = self.units.get_mut(child) {
                c.parent = Some(unit.name.clone());
            }
        }
        let name = unit.name.clone();
        self.units.insert(name.clone(), unit);
        name
    }

    fn leaves(&self, name: &str) -> Vec<String> {
        let u = &self.units[name];
        if u.children.is_empty() {
            u.form.clone()
        } else {
            u.children.iter().flat_map(|c| self.leaves(c)).collect()
        }
    }
}

/// Applies `c` once at its first matching site. A construction never
/// removes features, and one that has already done its work at every site
/// reports no match.
pub fn apply_construction(
    ts: &TransientStructure,
    c: &Construction,
    direction: Direction,
) -> Result<TransientStructure, NoMatch> {
    let mut next = ts.clone();
    match (&c.rule, direction) {
        (Rule::Word { stem, meaning }, Direction::Produce) => {
            produce_word(&mut next, &c.name, stem, meaning)?
        }
        (Rule::Word { stem, meaning }, Direction::Parse) => parse_word(&mut next, &c.name, stem, meaning)?,
        (Rule::Multiword { parse_only: true, .. }, Direction::Produce) => {
            return no_match("parse-only construction");
        }
        (Rule::Multiword { stem, tokens, .. }, Direction::Produce) => {
            produce_multiword(&mut next, &c.name, stem, tokens)?
        }
        (Rule::Multiword { stem, tokens, .. }, Direction::Parse) => {
            parse_multiword(&mut next, &c.name, stem, tokens)?
        }
        (Rule::Class { lexical, class }, _) => apply_class(&mut next, &c.name, lexical, *class, direction)?,
        (Rule::Phrase(schema), _) => apply_phrase(&mut next, &c.name, *schema, direction)?,
    }
    next.applied.push(c.name.clone());
    Ok(next)
}

fn produce_word(
    ts: &mut TransientStructure,
    name: &str,
    stem: &str,
    meaning: &Meaning,
) -> Result<(), NoMatch> {
    let found = ts.uncovered().find(|s| match (s, meaning) {
        (Statement::Bind(b), Meaning::Bind(e)) => &b.entity == e,
        (Statement::Node(n), Meaning::Op(op)) => n.op == *op,
        _ => false,
    });
    let Some(statement) = found.cloned() else {
        return no_match(format!("nothing for `{stem}` to express"));
    };
    let mut unit = Unit {
        name: ts.new_unit_name(name),
        stem: Some(stem.to_string()),
        form: vec![stem.to_string()],
        lexical: Some(meaning.lexical_category().to_string()),
        applied: BTreeSet::from([name.to_string()]),
        ..Default::default()
    };
    match &statement {
        Statement::Bind(b) => {
            unit.hooks.insert("value", b.var.clone());
        }
        Statement::Node(n) => {
            unit.referent = Some(n.output().clone());
            if let Some(ctx) = n.inputs().first() {
                unit.hooks.insert("ctx", ctx.clone());
            }
        }
    }
    ts.add_unit(unit, vec![statement]);
    Ok(())
}

fn parse_word(ts: &mut TransientStructure, name: &str, stem: &str, meaning: &Meaning) -> Result<(), NoMatch> {
    let target = ts
        .top_units()
        .into_iter()
        .find(|u| {
            u.lexical.is_none()
                && match &u.stem {
                    Some(s) => s == stem,
                    None => u.children.is_empty() && u.form.len() == 1 && u.form[0] == stem,
                }
        })
        .map(|u| u.name.clone());
    let Some(target) = target else {
        return no_match(format!("no unread word `{stem}`"));
    };
    let statement = match meaning {
        Meaning::Bind(entity) => Statement::Bind(BindStatement {
            var: ts.fresh_var(),
            entity: entity.clone(),
        }),
        Meaning::Op(op) => {
            let args = (0..op.signature().len()).map(|_| ts.fresh_var()).collect();
            Statement::Node(CogOpNode { op: *op, args })
        }
    };
    let u = ts.units.get_mut(&target).expect("unit exists");
    u.stem = Some(stem.to_string());
    u.lexical = Some(meaning.lexical_category().to_string());
    u.applied.insert(name.to_string());
    match &statement {
        Statement::Bind(b) => {
            u.hooks.insert("value", b.var.clone());
        }
        Statement::Node(n) => {
            u.referent = Some(n.output().clone());
            if let Some(ctx) = n.inputs().first() {
                u.hooks.insert("ctx", ctx.clone());
            }
        }
    }
    u.sem.push(statement);
    Ok(())
}

fn produce_multiword(
    ts: &mut TransientStructure,
    name: &str,
    stem: &str,
    tokens: &[String],
) -> Result<(), NoMatch> {
    let target = ts
        .units
        .values()
        .find(|u| u.stem.as_deref() == Some(stem) && u.children.is_empty() && !u.applied.contains(name))
        .map(|u| u.name.clone());
    let Some(target) = target else {
        return no_match(format!("no single-word `{stem}` to spell out"));
    };
    let mut children = Vec::new();
    for tok in tokens {
        let child = ts.new_unit_name("word");
        ts.units.insert(
            child.clone(),
            Unit {
                name: child.clone(),
                form: vec![tok.clone()],
                parent: Some(target.clone()),
                ..Default::default()
            },
        );
        children.push(child);
    }
    let u = ts.units.get_mut(&target).expect("unit exists");
    u.children = children;
    u.applied.insert(name.to_string());
    Ok(())
}

fn parse_multiword(
    ts: &mut TransientStructure,
    name: &str,
    stem: &str,
    tokens: &[String],
) -> Result<(), NoMatch> {
    let top = ts.top_units();
    let site = top.windows(tokens.len()).find(|w| {
        w.iter()
            .zip(tokens)
            .all(|(u, t)| u.lexical.is_none() && u.stem.is_none() && u.form.len() == 1 && &u.form[0] == t)
    });
    let Some(site) = site else {
        return no_match(format!("no `{}` in the input", tokens.join(" ")));
    };
    let children: Vec<String> = site.iter().map(|u| u.name.clone()).collect();
    let position = site[0].position;
    let unit = Unit {
        name: ts.new_unit_name(name),
        stem: Some(stem.to_string()),
        children,
        position,
        applied: BTreeSet::from([name.to_string()]),
        ..Default::default()
    };
    ts.add_unit(unit, vec![]);
    Ok(())
}

fn apply_class(
    ts: &mut TransientStructure,
    name: &str,
    lexical: &str,
    class: WordClass,
    direction: Direction,
) -> Result<(), NoMatch> {
    let target = ts
        .units
        .values()
        .find(|u| u.lexical.as_deref() == Some(lexical) && u.class.is_none() && !u.applied.contains(name))
        .map(|u| u.name.clone());
    let Some(target) = target else {
        return no_match(format!("no unclassified {lexical} item"));
    };
    let unit = &ts.units[&target];
    let value = unit.hook("value").cloned();
    let relation = unit.sem.iter().find_map(|s| match s {
        Statement::Bind(b) if b.entity.category() == Category::DynamicSpatialRelation => {
            Some(b.entity.value().to_string())
        }
        _ => None,
    });

    let filter_op = match class {
        WordClass::Determiner => Some(Op::ApplyDeterminer),
        WordClass::Adjective => Some(Op::ApplyColor),
        WordClass::Noun => Some(Op::ApplyClass),
        _ => None,
    };
    let mut statements = Vec::new();
    let mut hooks: Vec<(&'static str, Var)> = Vec::new();
    let mut referent = None;
    match (class, direction) {
        (WordClass::Verb, _) => {
            if unit.referent.is_none() {
                return no_match("verb without an event");
            }
        }
        (WordClass::Preposition, Direction::Produce) => {
            let (Some(rel_var), Some(rel)) = (value, relation) else {
                return no_match("preposition without a relation");
            };
            let Some(dsr) = ts.uncovered_node(Op::ApplyDynamicSpatialRelation, |n| n.args[3] == rel_var)
            else {
                return no_match(format!("`{rel}` is not used as a dynamic spatial relation"));
            };
            let Some(profile) = ts.uncovered_node(Op::ApplyProfile, |n| n.args[0] == dsr.args[1]) else {
                return no_match(format!("`{rel}` lacks a profiled event"));
            };
            let Some(profile_bind) = ts.uncovered_bind(&profile.args[2]) else {
                return no_match("event profile is not bound");
            };
            if Some(profile_bind.entity.value()) != profile_for_relation(&rel) {
                return no_match(format!(
                    "profile {} conflicts with `{rel}`",
                    profile_bind.entity.value()
                ));
            }
            hooks.push(("moved", profile.args[1].clone()));
            hooks.push(("landmark", dsr.args[2].clone()));
            referent = Some(dsr.args[0].clone());
            statements = vec![
                Statement::Node(profile),
                Statement::Bind(profile_bind),
                Statement::Node(dsr),
            ];
        }
        (WordClass::Preposition, Direction::Parse) => {
            let (Some(rel_var), Some(rel)) = (value, relation) else {
                return no_match("preposition without a relation");
            };
            let profile_value = profile_for_relation(&rel).expect("relation values have profiles");
            let [result, profiled, moved, landmark, prof] = [(); 5].map(|_| ts.fresh_var());
            let entity = SemEntity::new(Category::EventProfile, profile_value).expect("legal profile");
            statements = vec![
                Statement::Node(CogOpNode {
                    op: Op::ApplyProfile,
                    args: vec![profiled.clone(), moved.clone(), prof.clone()],
                }),
                Statement::Bind(BindStatement { var: prof, entity }),
                Statement::Node(CogOpNode {
                    op: Op::ApplyDynamicSpatialRelation,
                    args: vec![result.clone(), profiled, landmark.clone(), rel_var],
                }),
            ];
            hooks.push(("moved", moved));
            hooks.push(("landmark", landmark));
            referent = Some(result);
        }
        (_, Direction::Produce) => {
            let op = filter_op.expect("remaining classes filter objects");
            let Some(value) = value else {
                return no_match("no category value to apply");
            };
            let Some(node) = ts.uncovered_node(op, |n| n.args[2] == value) else {
                return no_match(format!("no {} for this {}", op.name(), class.name()));
            };
            let key = if op == Op::ApplyClass { "ctx" } else { "input" };
            hooks.push((key, node.args[1].clone()));
            referent = Some(node.args[0].clone());
            statements.push(Statement::Node(node));
        }
        (_, Direction::Parse) => {
            let op = filter_op.expect("remaining classes filter objects");
            // A noun read from an unknown word has no class value; its slot stays open.
            let value = match value {
                Some(v) => v,
                None => ts.fresh_var(),
            };
            let (out, input) = (ts.fresh_var(), ts.fresh_var());
            let key = if op == Op::ApplyClass { "ctx" } else { "input" };
            hooks.push((key, input.clone()));
            referent = Some(out.clone());
            statements.push(Statement::Node(CogOpNode {
                op,
                args: vec![out, input, value],
            }));
        }
    }

    for s in &statements {
        ts.covered.insert(s.clone());
    }
    let u = ts.units.get_mut(&target).expect("unit exists");
    u.class = Some(class);
    u.applied.insert(name.to_string());
    u.sem.extend(statements);
    u.hooks.extend(hooks);
    if referent.is_some() {
        u.referent = referent;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Slot {
    Class(WordClass),
    Phrase(Phrase),
}

fn fits(u: &Unit, slot: Slot) -> bool {
    match slot {
        Slot::Class(c) => u.class == Some(c) && u.phrase.is_none(),
        Slot::Phrase(p) => u.phrase == Some(p),
    }
}

/// What a phrasal schema needs from its two constituents and what the new
/// phrase exposes.
struct PhraseMatch {
    statements: Vec<Statement>,
    links: Vec<(Var, Var)>,
    referent: Var,
    hooks: Vec<(&'static str, Var)>,
}

fn apply_phrase(
    ts: &mut TransientStructure,
    name: &str,
    schema: Schema,
    direction: Direction,
) -> Result<(), NoMatch> {
    let top: Vec<Unit> = ts
        .top_units()
        .into_iter()
        .filter(|u| !u.is_gap())
        .cloned()
        .collect();

    if schema == Schema::BareNominal {
        for (i, noun) in top.iter().enumerate() {
            if !fits(noun, Slot::Class(WordClass::Noun)) {
                continue;
            }
            let Some(referent) = noun.referent.clone() else {
                continue;
            };
            let modified = match direction {
                Direction::Produce => ts
                    .units
                    .values()
                    .any(|u| u.class == Some(WordClass::Adjective) && u.hook("input") == Some(&referent)),
                Direction::Parse => i > 0 && fits(&top[i - 1], Slot::Class(WordClass::Adjective)),
            };
            if modified {
                continue;
            }
            let m = PhraseMatch {
                statements: vec![],
                links: vec![],
                referent,
                hooks: noun.hook("ctx").map(|c| ("ctx", c.clone())).into_iter().collect(),
            };
            add_phrase(ts, name, Phrase::Nominal, &[noun], m, direction);
            return Ok(());
        }
        return no_match("no bare noun");
    }

    let (left, right, phrase) = match schema {
        Schema::AdjectiveNoun => (
            Slot::Class(WordClass::Adjective),
            Slot::Class(WordClass::Noun),
            Phrase::Nominal,
        ),
        Schema::DeterminedNp => (
            Slot::Class(WordClass::Determiner),
            Slot::Phrase(Phrase::Nominal),
            Phrase::NounPhrase,
        ),
        Schema::PrepositionalPhrase => (
            Slot::Class(WordClass::Preposition),
            Slot::Phrase(Phrase::NounPhrase),
            Phrase::PrepositionalPhrase,
        ),
        Schema::VerbPhrase => (
            Slot::Class(WordClass::Verb),
            Slot::Phrase(Phrase::PrepositionalPhrase),
            Phrase::VerbPhrase,
        ),
        Schema::Clause => (
            Slot::Phrase(Phrase::NounPhrase),
            Slot::Phrase(Phrase::VerbPhrase),
            Phrase::Clause,
        ),
        Schema::BareNominal => unreachable!("handled above"),
    };
    let candidates: Vec<(usize, usize)> = match direction {
        Direction::Parse => (1..top.len()).map(|i| (i - 1, i)).collect(),
        Direction::Produce => (0..top.len())
            .flat_map(|i| (0..top.len()).map(move |j| (i, j)))
            .filter(|(i, j)| i != j)
            .collect(),
    };
    for (i, j) in candidates {
        let (a, b) = (&top[i], &top[j]);
        if !fits(a, left) || !fits(b, right) {
            continue;
        }
        let m = match direction {
            Direction::Produce => match_produce(ts, schema, a, b),
            Direction::Parse => match_parse(ts, schema, a, b),
        };
        if let Some(m) = m {
            add_phrase(ts, name, phrase, &[a, b], m, direction);
            return Ok(());
        }
    }
    no_match(format!("no constituents for {name}"))
}

fn add_phrase(
    ts: &mut TransientStructure,
    name: &str,
    phrase: Phrase,
    parts: &[&Unit],
    m: PhraseMatch,
    direction: Direction,
) {
    let unit = Unit {
        name: ts.new_unit_name(name),
        referent: Some(m.referent),
        hooks: m.hooks.into_iter().collect(),
        links: if direction == Direction::Parse {
            m.links
        } else {
            vec![]
        },
        phrase: Some(phrase),
        children: parts.iter().map(|u| u.name.clone()).collect(),
        position: parts.iter().filter_map(|u| u.position).min(),
        applied: BTreeSet::from([name.to_string()]),
        ..Default::default()
    };
    ts.add_unit(unit, m.statements);
}

fn hook(u: &Unit, key: &str) -> Option<Var> {
    u.hook(key).cloned()
}

fn match_produce(ts: &TransientStructure, schema: Schema, a: &Unit, b: &Unit) -> Option<PhraseMatch> {
    let (ra, rb) = (a.referent.clone()?, b.referent.clone()?);
    match schema {
        Schema::AdjectiveNoun | Schema::DeterminedNp => {
            if hook(a, "input")? != rb {
                return None;
            }
            Some(PhraseMatch {
                statements: vec![],
                links: vec![],
                referent: ra,
                hooks: vec![("ctx", hook(b, "ctx")?)],
            })
        }
        Schema::PrepositionalPhrase => {
            if hook(a, "landmark")? != rb {
                return None;
            }
            Some(PhraseMatch {
                statements: vec![],
                links: vec![],
                referent: ra,
                hooks: vec![("moved", hook(a, "moved")?), ("ctx", hook(b, "ctx")?)],
            })
        }
        Schema::VerbPhrase => {
            let ctx = hook(a, "ctx")?;
            if hook(b, "ctx")? != ctx {
                return None;
            }
            let moved = hook(b, "moved")?;
            let role = ts.uncovered_node(Op::ApplyRole, |n| n.args[0] == moved && n.args[1] == ra)?;
            let role_bind = ts.uncovered_bind(&role.args[3])?;
            if role_bind.entity.value() != "mover" {
                return None;
            }
            Some(PhraseMatch {
                hooks: vec![("subject", role.args[2].clone()), ("ctx", ctx)],
                statements: vec![Statement::Node(role), Statement::Bind(role_bind)],
                links: vec![],
                referent: rb,
            })
        }
        Schema::Clause => {
            let ctx = hook(a, "ctx")?;
            if hook(b, "ctx")? != ctx || hook(b, "subject")? != ra {
                return None;
            }
            let get = ts.uncovered_node(Op::GetContext, |n| n.args[0] == ctx)?;
            Some(PhraseMatch {
                statements: vec![Statement::Node(get)],
                links: vec![],
                referent: rb,
                hooks: vec![],
            })
        }
        Schema::BareNominal => None,
    }
}

fn match_parse(ts: &mut TransientStructure, schema: Schema, a: &Unit, b: &Unit) -> Option<PhraseMatch> {
    let (ra, rb) = (a.referent.clone()?, b.referent.clone()?);
    match schema {
        Schema::AdjectiveNoun | Schema::DeterminedNp => Some(PhraseMatch {
            statements: vec![],
            links: vec![(hook(a, "input")?, rb)],
            referent: ra,
            hooks: vec![("ctx", hook(b, "ctx")?)],
        }),
        Schema::PrepositionalPhrase => Some(PhraseMatch {
            statements: vec![],
            links: vec![(hook(a, "landmark")?, rb)],
            referent: ra,
            hooks: vec![("moved", hook(a, "moved")?), ("ctx", hook(b, "ctx")?)],
        }),
        Schema::VerbPhrase => {
            let (ctx, pp_ctx, moved) = (hook(a, "ctx")?, hook(b, "ctx")?, hook(b, "moved")?);
            let [out, subject, role] = [(); 3].map(|_| ts.fresh_var());
            let entity = SemEntity::new(Category::ParticipantRole, "mover").expect("legal role");
            Some(PhraseMatch {
                statements: vec![
                    Statement::Node(CogOpNode {
                        op: Op::ApplyRole,
                        args: vec![out.clone(), ra, subject.clone(), role.clone()],
                    }),
                    Statement::Bind(BindStatement { var: role, entity }),
                ],
                links: vec![(moved, out), (pp_ctx, ctx.clone())],
                referent: rb,
                hooks: vec![("subject", subject), ("ctx", ctx)],
            })
        }
        Schema::Clause => {
            let (np_ctx, vp_ctx, subject) = (hook(a, "ctx")?, hook(b, "ctx")?, hook(b, "subject")?);
            let ctx = ts.fresh_var();
            Some(PhraseMatch {
                statements: vec![Statement::Node(CogOpNode {
                    op: Op::GetContext,
                    args: vec![ctx.clone()],
                })],
                links: vec![(np_ctx, ctx.clone()), (vp_ctx, ctx), (subject, ra)],
                referent: rb,
                hooks: vec![],
            })
        }
        Schema::BareNominal => None,
    }
}

fn run_layer(ts: TransientStructure, layer: &[&Construction], direction: Direction) -> TransientStructure {
    let mut ts = ts;
    loop {
        let mut changed = false;
        for c in layer {
            while let Ok(next) = apply_construction(&ts, c, direction) {
                log::trace!("{} applied", c.name);
                ts = next;
                changed = true;
            }
        }
        if !changed {
            return ts;
        }
    }
}

fn layer(grammar: &Grammar, pick: impl Fn(&Construction) -> bool) -> Vec<&Construction> {
    grammar.constructions.iter().filter(|c| pick(c)).collect()
}

/// Runs production to a fixpoint and returns the final structure, whether
/// or not it expresses the whole program.
pub fn production_structure(program: &IrlProgram, grammar: &Grammar) -> TransientStructure {
    let mut ts = TransientStructure::for_production(program);
    for kind in [
        ConstructionKind::Lexical,
        ConstructionKind::Functional,
        ConstructionKind::Phrasal,
    ] {
        ts = run_layer(ts, &layer(grammar, |c| c.kind == kind), Direction::Produce);
    }
    ts
}

/// Expresses a program as a phrase.
pub fn produce(program: &IrlProgram, grammar: &Grammar) -> Result<Utterance, GrammarError> {
    if program.is_empty() {
        return Err(GrammarError::Unexpressible("empty program".into()));
    }
    let ts = production_structure(program, grammar);
    if let Some(s) = ts.uncovered().next() {
        return Err(GrammarError::Unexpressible(s.to_string()));
    }
    if let Some(u) = ts
        .units
        .values()
        .find(|u| u.lexical.is_some() && u.class.is_none())
    {
        let stem = u.stem.clone().unwrap_or_default();
        return Err(GrammarError::Unexpressible(format!(
            "`{stem}` has no word class here"
        )));
    }
    let top = ts.top_units();
    if top.len() != 1 {
        let parts: Vec<String> = top
            .iter()
            .map(|u| format!("`{}`", ts.leaves(&u.name).join(" ")))
            .collect();
        return Err(GrammarError::Unexpressible(format!(
            "no phrase joins {}",
            parts.join(" and ")
        )));
    }
    Ok(Utterance {
        tokens: ts.leaves(&top[0].name),
    })
}

/// Runs parsing to a fixpoint and returns the final structure.
pub fn parse_structure(utterance: &Utterance, grammar: &Grammar) -> TransientStructure {
    let is_multiword = |c: &Construction| matches!(c.rule, Rule::Multiword { .. });
    let mut ts = TransientStructure::for_parsing(utterance);
    ts = run_layer(ts, &layer(grammar, is_multiword), Direction::Parse);
    ts = run_layer(
        ts,
        &layer(grammar, |c| c.kind == ConstructionKind::Lexical),
        Direction::Parse,
    );
    read_unknown_nouns(&mut ts, grammar);
    ts = run_layer(
        ts,
        &layer(grammar, |c| c.kind == ConstructionKind::Functional),
        Direction::Parse,
    );
    ts = run_layer(
        ts,
        &layer(grammar, |c| {
            c.kind == ConstructionKind::Phrasal && !is_multiword(c)
        }),
        Direction::Parse,
    );
    ts
}

/// Unknown words are skipped, except that one standing where a noun is
/// due (after a determiner or adjective, with no noun following) is read
/// as a noun of unknown class.
fn read_unknown_nouns(ts: &mut TransientStructure, grammar: &Grammar) {
    let Some(noun_lexical) = grammar.constructions.iter().find_map(|c| match &c.rule {
        Rule::Class {
            lexical,
            class: WordClass::Noun,
        } => Some(lexical.clone()),
        _ => None,
    }) else {
        return;
    };
    let lexical_class = |u: &Unit| {
        let lex = u.lexical.as_deref()?;
        grammar.constructions.iter().find_map(|c| match &c.rule {
            Rule::Class { lexical, class } if lexical == lex => Some(*class),
            _ => None,
        })
    };
    let top: Vec<Unit> = ts.top_units().into_iter().cloned().collect();
    let mut promote = Vec::new();
    for (i, u) in top.iter().enumerate() {
        if !u.is_gap() {
            continue;
        }
        let word = u.form.join(" ");
        let before = top[..i]
            .iter()
            .rev()
            .find(|v| !v.is_gap())
            .and_then(lexical_class);
        let after = top[i + 1..].iter().find(|v| !v.is_gap()).and_then(lexical_class);
        let noun_due = matches!(before, Some(WordClass::Determiner | WordClass::Adjective))
            && !matches!(after, Some(WordClass::Noun | WordClass::Adjective));
        if noun_due {
            log::warn!("unknown word `{word}` read as a noun");
            promote.push(u.name.clone());
        } else {
            log::warn!("unknown word `{word}` skipped");
        }
    }
    for name in promote {
        ts.units.get_mut(&name).expect("unit exists").lexical = Some(noun_lexical.clone());
    }
}

/// Reads a phrase into a program in canonical form. Unknown words are
/// skipped, so the result may be partial.
pub fn parse(utterance: &Utterance, grammar: &Grammar) -> Result<IrlProgram, GrammarError> {
    let ts = parse_structure(utterance, grammar);
    if ts.units.values().all(|u| u.sem.is_empty()) {
        return Err(GrammarError::Unparseable(format!(
            "no known words in `{utterance}`"
        )));
    }

    let mut rep: BTreeMap<Var, Var> = BTreeMap::new();
    fn find(rep: &BTreeMap<Var, Var>, v: &Var) -> Var {
        let mut cur = v.clone();
        while let Some(next) = rep.get(&cur) {
            cur = next.clone();
        }
        cur
    }
    for u in ts.units.values() {
        for (x, y) in &u.links {
            let (rx, ry) = (find(&rep, x), find(&rep, y));
            if rx != ry {
                let (lo, hi) = if rx < ry { (rx, ry) } else { (ry, rx) };
                rep.insert(hi, lo);
            }
        }
    }
    let mut program = IrlProgram::default();
    for u in ts.units.values() {
        for s in &u.sem {
            program.push(match s.clone() {
                Statement::Bind(b) => Statement::Bind(BindStatement {
                    var: find(&rep, &b.var),
                    entity: b.entity,
                }),
                Statement::Node(n) => Statement::Node(CogOpNode {
                    op: n.op,
                    args: n.args.iter().map(|v| find(&rep, v)).collect(),
                }),
            });
        }
    }
    program
        .check_structure()
        .map_err(|e| GrammarError::Unparseable(e.to_string()))?;
    Ok(program.canonical())
}

const FRAGMENT_TEMPLATE: &str = "
    (get-context ?ctx)
    (bind object-class ?cls-1 NOUN) (apply-class ?set-1 ?ctx ?cls-1)
    (bind color-category ?col-1 COLOR) (apply-color ?set-2 ?set-1 ?col-1)
    (bind selector ?sel-1 unique) (apply-determiner ?subject ?set-2 ?sel-1)
    (bind object-class ?cls-2 region) (apply-class ?set-3 ?ctx ?cls-2)
    (bind color-category ?col-2 red) (apply-color ?set-4 ?set-3 ?col-2)
    (bind selector ?sel-2 unique) (apply-determiner ?landmark ?set-4 ?sel-2)
    (apply-event ?ev ?ctx)
    (bind participant-role ?role mover) (apply-role ?moved ?ev ?subject ?role)
    (bind event-profile ?prof PROFILE) (apply-profile ?profiled ?moved ?prof)
    (bind dynamic-spatial-relation ?rel RELATION)
    (apply-dynamic-spatial-relation ?result ?profiled ?landmark ?rel)";

/// Every clause the fragment covers with "the red region" as landmark:
/// each color, noun and relation for the subject, in canonical form.
pub fn fragment_programs() -> Vec<IrlProgram> {
    let mut out = Vec::new();
    for color in Category::ColorCategory.legal_values() {
        for noun in Category::ObjectClass.legal_values() {
            for rel in Category::DynamicSpatialRelation.legal_values() {
                let profile = profile_for_relation(rel).expect("relation values have profiles");
                let text = FRAGMENT_TEMPLATE
                    .replace("COLOR", color)
                    .replace("NOUN", noun)
                    .replace("RELATION", rel)
                    .replace("PROFILE", profile);
                out.push(parse_program(&text).expect("template is well formed").canonical());
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grammar() -> Grammar {
        Grammar::default()
    }

    fn program(color: &str, noun: &str, rel: &str) -> IrlProgram {
        let profile = profile_for_relation(rel).unwrap();
        parse_program(
            &FRAGMENT_TEMPLATE
                .replace("COLOR", color)
                .replace("NOUN", noun)
                .replace("RELATION", rel)
                .replace("PROFILE", profile),
        )
        .unwrap()
    }

    fn construction(name: &str) -> Construction {
        grammar()
            .constructions()
            .iter()
            .find(|c| c.name() == name)
            .unwrap()
            .clone()
    }

    #[test]
    fn manifest_loads() {
        let g = grammar();
        assert_eq!(g.len(), 26);
        assert!(g
            .constructions()
            .iter()
            .any(|c| c.kind() == ConstructionKind::Functional));
    }

    #[test]
    fn manifest_errors_carry_line_numbers() {
        let err =
            Grammar::from_manifest("lexical the selector unique the\nlexical x color-category purple x")
                .unwrap_err();
        assert!(matches!(err, GrammarError::Manifest { line: 2, .. }), "{err}");
        let err = Grammar::from_manifest("phrasal nonsense").unwrap_err();
        assert!(matches!(err, GrammarError::Manifest { line: 1, .. }));
        let err = Grammar::from_manifest("phrasal clause\nphrasal clause").unwrap_err();
        assert!(matches!(err, GrammarError::Manifest { line: 2, .. }));
    }

    #[test]
    fn lexical_construction_adds_its_stem() {
        let ts = TransientStructure::for_production(&program("yellow", "block", "across"));
        let across = construction("across");
        let next = apply_construction(&ts, &across, Direction::Produce).unwrap();
        assert!(next.units().any(|u| u.form == ["across"]));
        assert!(apply_construction(&next, &across, Direction::Produce).is_err());

        let ts = TransientStructure::for_production(&program("yellow", "block", "into"));
        assert!(apply_construction(&ts, &across, Direction::Produce).is_err());
    }

    #[test]
    fn produces_the_canonical_sentence() {
        let u = produce(&program("yellow", "block", "across"), &grammar()).unwrap();
        assert_eq!(u.to_string(), "the yellow block moves across the red region");
        let u = produce(&program("green", "block", "into"), &grammar()).unwrap();
        assert_eq!(u.to_string(), "the green block moves into the red region");
        let u = produce(&program("white", "box", "out-of"), &grammar()).unwrap();
        assert_eq!(u.to_string(), "the white box moves out of the red region");
    }

    #[test]
    fn missing_lexical_entry_is_unexpressible() {
        let g = grammar().without(&["yellow"]);
        let err = produce(&program("yellow", "block", "across"), &g).unwrap_err();
        assert_eq!(
            err,
            GrammarError::Unexpressible("(bind color-category ?yellow-1 yellow)".into())
        );
    }

    #[test]
    fn relation_without_its_operation_is_unexpressible() {
        let p = parse_program("(bind dynamic-spatial-relation ?r across)").unwrap();
        assert!(matches!(
            produce(&p, &grammar()),
            Err(GrammarError::Unexpressible(_))
        ));
    }

    #[test]
    fn parses_the_canonical_sentence() {
        let p = parse(
            &Utterance::from_text("the green block moves across the red region"),
            &grammar(),
        )
        .unwrap();
        assert_eq!(p, program("green", "block", "across").canonical());
        assert!(p.validate().is_ok());
    }

    #[test]
    fn progressive_alias_parses_but_is_not_produced() {
        let g = grammar();
        let p = parse(
            &Utterance::from_text("The yellow block is moving across the red region."),
            &g,
        )
        .unwrap();
        assert_eq!(p, program("yellow", "block", "across").canonical());
        let alias = construction("is-moving");
        assert!(!alias.produces());
        let ts = TransientStructure::for_production(&program("yellow", "block", "across"));
        assert!(apply_construction(&ts, &alias, Direction::Produce).is_err());
    }

    #[test]
    fn unknown_noun_leaves_the_class_open() {
        let p = parse(
            &Utterance::from_text("the blob moves across the red region"),
            &grammar(),
        )
        .unwrap();
        let classes: Vec<&str> = p
            .binds
            .iter()
            .filter(|b| b.entity.category() == Category::ObjectClass)
            .map(|b| b.entity.value())
            .collect();
        assert_eq!(classes, ["region"]);
        let open = p.open_inputs();
        assert_eq!(open.len(), 1);
        assert!(p
            .nodes
            .iter()
            .any(|n| n.op == Op::ApplyClass && open.contains(&n.args[2])));
    }

    #[test]
    fn unknown_words_elsewhere_are_skipped() {
        let p = parse(
            &Utterance::from_text("the green block slowly moves across the red region"),
            &grammar(),
        )
        .unwrap();
        assert_eq!(p, program("green", "block", "across").canonical());
    }

    #[test]
    fn nonsense_is_unparseable() {
        let err = parse(&Utterance::from_text("nonsense tokens"), &grammar()).unwrap_err();
        assert!(matches!(err, GrammarError::Unparseable(_)));
        let err = parse(&Utterance::from_text("the red region"), &Grammar::empty()).unwrap_err();
        assert!(matches!(err, GrammarError::Unparseable(_)));
    }

    #[test]
    fn noun_phrase_alone_parses_to_an_open_fragment() {
        let p = parse(&Utterance::from_text("the red region"), &grammar()).unwrap();
        assert_eq!(p.node_count(), 3);
        assert_eq!(p.open_inputs().len(), 1);
    }

    #[test]
    fn fragment_round_trips() {
        let g = grammar();
        let programs = fragment_programs();
        assert_eq!(programs.len(), 45);
        for p in programs {
            let u = produce(&p, &g).unwrap();
            assert_eq!(parse(&u, &g).unwrap(), p, "{u}");
        }
    }

    #[test]
    fn every_construction_is_used_in_both_directions() {
        let g = grammar();
        let mut produced = BTreeSet::new();
        let mut parsed = BTreeSet::new();
        for p in fragment_programs() {
            produced.extend(production_structure(&p, &g).applied().iter().cloned());
            let u = produce(&p, &g).unwrap();
            parsed.extend(parse_structure(&u, &g).applied().iter().cloned());
        }
        let progressive = Utterance::from_text("the blue box is moving into the red region");
        parsed.extend(parse_structure(&progressive, &g).applied().iter().cloned());
        let bare = Utterance::from_text("the block moves into the red region");
        parsed.extend(parse_structure(&bare, &g).applied().iter().cloned());
        let bare = parse_program(
            "(get-context ?c) (apply-class ?b ?c ?k) (bind object-class ?k block)
             (apply-determiner ?o ?b ?s) (bind selector ?s unique)",
        )
        .unwrap();
        produced.extend(production_structure(&bare, &g).applied().iter().cloned());

        for c in g.constructions() {
            assert!(parsed.contains(c.name()), "{} never parses", c.name());
            assert_eq!(produced.contains(c.name()), c.produces(), "{}", c.name());
        }
    }

    #[test]
    fn every_produced_word_has_one_class() {
        let g = grammar();
        let ts = production_structure(&program("blue", "region", "out-of"), &g);
        for u in ts.units().filter(|u| u.lexical.is_some()) {
            assert!(u.class.is_some(), "{:?}", u.stem);
        }
    }

    #[test]
    fn production_never_loses_tokens() {
        let g = grammar();
        let mut ts = TransientStructure::for_production(&program("red", "block", "out-of"));
        let mut last = ts.token_count();
        loop {
            let step = g
                .constructions()
                .iter()
                .find_map(|c| apply_construction(&ts, c, Direction::Produce).ok());
            let Some(next) = step else { break };
            assert!(next.token_count() >= last);
            last = next.token_count();
            ts = next;
        }
        assert_eq!(last, 9);
    }
}
