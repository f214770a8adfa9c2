//! Composing programs from chunks: best-first search for a program that
//! singles out a topic scene, and completion of partial programs for
//! interpretation.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashMap, HashSet};

use super::eval::{evaluate, evaluate_partial, Perception, Solution};
use super::program::{parse_program, BindStatement, Category, IrlProgram, Op, SemEntity, Var, VarType};
use super::SemanticsError;
use crate::geometry::SceneIndex;

/// A reusable program fragment. Variables it consumes but does not produce
/// are its open inputs; variables it produces but does not consume are
/// its outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct Chunk {
    pub name: String,
    fragment: IrlProgram,
}

impl Chunk {
    pub fn new(name: impl Into<String>, fragment: IrlProgram) -> Result<Chunk, SemanticsError> {
        fragment.check_structure()?;
        if fragment.is_empty() {
            return Err(SemanticsError::Malformed("empty chunk".into()));
        }
        Ok(Chunk {
            name: name.into(),
            fragment,
        })
    }

    pub fn fragment(&self) -> &IrlProgram {
        &self.fragment
    }

    /// The single bind statement of a category chunk.
    fn bind(&self) -> Option<&SemEntity> {
        match (self.fragment.nodes.as_slice(), self.fragment.binds.as_slice()) {
            ([], [b]) => Some(&b.entity),
            _ => None,
        }
    }
}

const STRUCTURAL_CHUNKS: [(&str, &str); 4] = [
    ("context", "(get-context ?ctx)"),
    (
        "determined-np",
        "(apply-class ?classed ?ctx ?cls) (apply-color ?colored ?classed ?col)
         (apply-determiner ?obj ?colored ?sel) (bind selector ?sel unique)",
    ),
    (
        "motion-event",
        "(apply-event ?ev ?ctx) (apply-role ?moved ?ev ?obj ?role)
         (bind participant-role ?role mover)",
    ),
    (
        "dynamic-spatial-relation",
        "(apply-profile ?profiled ?moved ?prof)
         (apply-dynamic-spatial-relation ?related ?profiled ?landmark ?rel)",
    ),
];

/// The built-in chunk inventory: four structural chunks plus one bind
/// chunk per category value.
pub fn default_chunks() -> Vec<Chunk> {
    let mut out: Vec<Chunk> = STRUCTURAL_CHUNKS
        .iter()
        .map(|(name, text)| {
            Chunk::new(*name, parse_program(text).expect("built-in chunk parses"))
                .expect("built-in chunk is well formed")
        })
        .collect();
    for cat in Category::ALL {
        for value in cat.legal_values() {
            let bind = BindStatement {
                var: Var::new("?x").expect("valid name"),
                entity: SemEntity::new(cat, value).expect("legal value"),
            };
            out.push(
                Chunk::new(format!("{cat}:{value}"), IrlProgram::new(vec![], vec![bind]))
                    .expect("bind chunk is well formed"),
            );
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchBudget {
    /// Largest program, counted in operation nodes.
    pub max_nodes: usize,
    /// Search states popped before giving up.
    pub max_expansions: usize,
    /// Operation whose output must be the program's only sink.
    pub goal_op: Op,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            max_nodes: 12,
            max_expansions: 5000,
            goal_op: Op::ApplyDynamicSpatialRelation,
        }
    }
}

/// Most unconsumed outputs a search state may carry.
const MAX_DANGLING: usize = 2;

/// The shortest program (ties broken by canonical text) whose evaluation
/// has a solution in `topic` and none in the other scene.
pub fn conceptualize(
    perception: &Perception,
    topic: SceneIndex,
    chunks: &[Chunk],
    budget: &SearchBudget,
) -> Result<IrlProgram, SemanticsError> {
    let goals = search(IrlProgram::default(), perception, &[topic], chunks, budget, |p| {
        let solutions = evaluate(p, perception)?;
        Ok(solutions.iter().any(|s| s.scene == Some(topic))
            && solutions.iter().all(|s| s.scene == Some(topic)))
    })?;
    goals
        .into_iter()
        .next()
        .map(|(_, p)| p)
        .ok_or(SemanticsError::Indiscriminable)
}

/// Scene best matching a program, with the score of its best solution.
/// Incomplete programs are first completed with chunks. Equal scores
/// resolve to scene `a`.
pub fn interpret(
    program: &IrlProgram,
    perception: &Perception,
    chunks: &[Chunk],
    budget: &SearchBudget,
) -> Result<(SceneIndex, f64), SemanticsError> {
    if program.is_empty() {
        return Err(SemanticsError::Uninterpretable("empty program".into()));
    }
    program.check_structure()?;
    if program.validate().is_ok() {
        return best_scene(&evaluate(program, perception)?)
            .ok_or_else(|| SemanticsError::Uninterpretable("no scene satisfies the program".into()));
    }
    let both = [SceneIndex::A, SceneIndex::B];
    let goals = search(program.clone(), perception, &both, chunks, budget, |p| {
        Ok(evaluate(p, perception)?.iter().any(|s| s.scene.is_some()))
    })?;
    let mut best: Option<(SceneIndex, f64)> = None;
    for (_, p) in goals {
        if let Some((scene, score)) = best_scene(&evaluate(&p, perception)?) {
            let better = match best {
                None => true,
                Some((bs, bscore)) => score > bscore || (score == bscore && scene < bs),
            };
            if better {
                best = Some((scene, score));
            }
        }
    }
    best.ok_or_else(|| SemanticsError::Uninterpretable("no completion matches either scene".into()))
}

fn best_scene(solutions: &[Solution]) -> Option<(SceneIndex, f64)> {
    let mut best: Option<(SceneIndex, f64)> = None;
    for s in solutions {
        let Some(scene) = s.scene else { continue };
        let better = match best {
            None => true,
            Some((bs, bscore)) => s.score > bscore || (s.score == bscore && scene < bs),
        };
        if better {
            best = Some((scene, s.score));
        }
    }
    best
}

/// Best-first search ordered by node count plus a lower bound on the nodes
/// still missing, then by canonical text. Returns all goals at the smallest
/// node count, sorted by canonical text.
fn search(
    start: IrlProgram,
    perception: &Perception,
    scenes: &[SceneIndex],
    chunks: &[Chunk],
    budget: &SearchBudget,
    discriminates: impl Fn(&IrlProgram) -> Result<bool, SemanticsError>,
) -> Result<Vec<(String, IrlProgram)>, SemanticsError> {
    let start = start.canonical();
    let mut frontier: BinaryHeap<Reverse<(usize, String)>> = BinaryHeap::new();
    let mut programs: HashMap<String, IrlProgram> = HashMap::new();
    let mut seen: HashSet<String> = HashSet::new();
    let text = start.to_string();
    seen.insert(text.clone());
    frontier.push(Reverse((estimate(&start, budget.goal_op), text.clone())));
    programs.insert(text, start);

    let mut goals: BTreeMap<String, IrlProgram> = BTreeMap::new();
    let mut goal_nodes: Option<usize> = None;
    let mut expansions = 0;
    while let Some(Reverse((cost, text))) = frontier.pop() {
        if goal_nodes.is_some_and(|g| cost > g) {
            break;
        }
        expansions += 1;
        if expansions > budget.max_expansions {
            log::debug!(
                "search budget exhausted after {} expansions",
                budget.max_expansions
            );
            break;
        }
        let program = programs.remove(&text).expect("every queued text has a program");
        if is_goal_shape(&program, budget.goal_op) && discriminates(&program)? {
            goal_nodes = Some(cost);
            goals.insert(text, program);
            continue;
        }
        for child in expand(&program, chunks) {
            if child.node_count() > budget.max_nodes || child.sinks().len() > MAX_DANGLING {
                continue;
            }
            let child = child.canonical();
            let child_text = child.to_string();
            if !seen.insert(child_text.clone()) {
                continue;
            }
            if evaluate_partial(&child, perception, scenes)?.is_empty() {
                continue;
            }
            frontier.push(Reverse((estimate(&child, budget.goal_op), child_text.clone())));
            programs.insert(child_text, child);
        }
    }
    Ok(goals.into_iter().collect())
}

/// Node count plus a lower bound on the nodes any completion still needs:
/// the goal chunk if absent, one motion chunk per unmet event input, one
/// noun phrase per unmet object input, and a context if none can be shared.
fn estimate(program: &IrlProgram, goal_op: Op) -> usize {
    let Ok(types) = program.var_types() else {
        return usize::MAX;
    };
    let count =
        |t: VarType, vars: &mut dyn Iterator<Item = &Var>| vars.filter(|v| types.get(*v) == Some(&t)).count();
    let open = program.open_inputs();
    let sinks: Vec<Var> = program
        .sinks()
        .into_iter()
        .filter(|v| program.producer_op(v) != Some(goal_op))
        .collect();
    let goal = usize::from(!program.nodes.iter().any(|n| n.op == goal_op));
    let events = (count(VarType::Events, &mut open.iter()) + goal)
        .saturating_sub(count(VarType::Events, &mut sinks.iter()));
    let objects = (count(VarType::Objects, &mut open.iter()) + goal + events)
        .saturating_sub(count(VarType::Objects, &mut sinks.iter()));
    let has_context = program.nodes.iter().any(|n| n.op == Op::GetContext);
    let context = usize::from(
        count(VarType::Context, &mut open.iter()) > 0 || (!has_context && goal + events + objects > 0),
    );
    program.node_count() + 2 * goal + 2 * events + 3 * objects + context
}

fn is_goal_shape(program: &IrlProgram, goal_op: Op) -> bool {
    let sinks = program.sinks();
    program.is_complete() && sinks.len() == 1 && program.producer_op(&sinks[0]) == Some(goal_op)
}

/// Children of a search state. Open category slots are filled first, one
/// slot at a time; otherwise every structural chunk whose inputs can all be
/// supplied is attached in every type-consistent way. Chunk outputs may
/// also fill inputs the state leaves open.
fn expand(program: &IrlProgram, chunks: &[Chunk]) -> Vec<IrlProgram> {
    let Ok(types) = program.var_types() else {
        return vec![];
    };
    let open = program.open_inputs();
    let slot = open
        .iter()
        .filter_map(|v| match types.get(v) {
            Some(VarType::Category(c)) => Some((v, *c)),
            _ => None,
        })
        .min();
    if let Some((slot, cat)) = slot {
        return chunks
            .iter()
            .filter_map(|c| c.bind())
            .filter(|e| e.category() == cat)
            .map(|e| {
                let mut child = program.clone();
                child.binds.push(BindStatement {
                    var: slot.clone(),
                    entity: e.clone(),
                });
                child
            })
            .collect();
    }

    let sinks = program.sinks();
    let mut children = Vec::new();
    'chunks: for chunk in chunks.iter().filter(|c| c.bind().is_none()) {
        let frag = rename_apart(chunk.fragment());
        let Ok(ftypes) = frag.var_types() else { continue };

        // Each open input takes an existing output of the same type.
        // Contexts may be shared freely; other values only when unconsumed.
        let mut choices: Vec<(Var, Vec<Option<Var>>)> = Vec::new();
        for v in frag.open_inputs() {
            let t = ftypes[&v];
            if matches!(t, VarType::Category(_)) {
                continue;
            }
            let candidates: Vec<Option<Var>> = types
                .iter()
                .filter(|(sv, st)| {
                    **st == t
                        && program.producer_op(sv).is_some()
                        && (t == VarType::Context || sinks.contains(sv))
                })
                .map(|(sv, _)| Some(sv.clone()))
                .collect();
            if candidates.is_empty() {
                continue 'chunks;
            }
            choices.push((v, candidates));
        }
        // Each output may fill an open input of the same type.
        for o in frag.sinks() {
            let t = ftypes[&o];
            let mut options = vec![None];
            options.extend(
                open.iter()
                    .filter(|sv| types.get(*sv) == Some(&t))
                    .map(|sv| Some(sv.clone())),
            );
            choices.push((o, options));
        }

        for combo in cartesian(&choices) {
            let links: Vec<(Var, Var)> = choices
                .iter()
                .zip(&combo)
                .filter_map(|((v, _), c)| c.clone().map(|c| (v.clone(), c)))
                .collect();
            if !program.is_empty() && links.is_empty() {
                continue;
            }
            let targets: HashSet<&Var> = links.iter().map(|(_, t)| t).collect();
            if targets.len() != links.len() {
                continue;
            }
            let map: HashMap<Var, Var> = links.into_iter().collect();
            let mut child = program.clone();
            for s in frag.statements() {
                child.push(substitute(s, &map));
            }
            if child.check_structure().is_ok() {
                children.push(child);
            }
        }
    }
    children
}

fn rename_apart(fragment: &IrlProgram) -> IrlProgram {
    let fresh = |v: &Var| Var::new(&format!("?k-{}", &v.as_str()[1..])).expect("valid name");
    IrlProgram {
        nodes: fragment
            .nodes
            .iter()
            .map(|n| super::program::CogOpNode {
                op: n.op,
                args: n.args.iter().map(fresh).collect(),
            })
            .collect(),
        binds: fragment
            .binds
            .iter()
            .map(|b| BindStatement {
                var: fresh(&b.var),
                entity: b.entity.clone(),
            })
            .collect(),
    }
}

fn substitute(s: super::program::Statement, map: &HashMap<Var, Var>) -> super::program::Statement {
    use super::program::Statement;
    let sub = |v: Var| map.get(&v).cloned().unwrap_or(v);
    match s {
        Statement::Bind(b) => Statement::Bind(BindStatement {
            var: sub(b.var),
            entity: b.entity,
        }),
        Statement::Node(mut n) => {
            n.args = n.args.into_iter().map(sub).collect();
            Statement::Node(n)
        }
    }
}

fn cartesian<T: Clone>(choices: &[(Var, Vec<T>)]) -> Vec<Vec<T>> {
    let mut out: Vec<Vec<T>> = vec![vec![]];
    for (_, options) in choices {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                options.iter().map(move |o| {
                    let mut next = prefix.clone();
                    next.push(o.clone());
                    next
                })
            })
            .collect();
    }
    out
}
