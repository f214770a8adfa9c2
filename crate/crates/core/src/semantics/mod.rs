//! Compositional meaning: programs of cognitive operations over a scene
//! pair, their evaluation, and chunk-based composition.

mod color;
mod eval;
mod program;
mod search;

use thiserror::Error;

pub use color::{categorize, classify_color, nearest_prototype, ColorPrototypes};
pub use eval::{evaluate, evaluate_partial, MotionEvent, Perception, Solution, Value, COLOR_TEMPERATURE};
pub use program::{
    parse_program, profile_for_relation, BindStatement, Category, CogOpNode, IrlProgram, Op, SemEntity,
    Statement, Var, VarType,
};
pub use search::{conceptualize, default_chunks, interpret, Chunk, SearchBudget};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SemanticsError {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("malformed program: {0}")]
    Malformed(String),
    #[error("unknown operation `{0}`")]
    UnknownOp(String),
    #[error("color prototype map is empty")]
    EmptyPrototypes,
    #[error("bad configuration: {0}")]
    Config(String),
    #[error("no program within budget discriminates the topic scene")]
    Indiscriminable,
    #[error("uninterpretable: {0}")]
    Uninterpretable(String),
}
