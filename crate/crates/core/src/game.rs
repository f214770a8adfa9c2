//! Two-agent language games: a speaker describes the topic scene of a pair
//! and a hearer tries to point it out.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{SceneIndex, ScenePair};
use crate::grammar::{parse, produce, Grammar, GrammarError, Utterance};
use crate::qualitative::AbstractionParams;
use crate::semantics::{
    conceptualize, default_chunks, interpret, Chunk, ColorPrototypes, Perception, SearchBudget,
    SemanticsError,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GameError {
    #[error("a series needs at least two agents, got {0}")]
    TooFewAgents(usize),
    #[error("a series needs at least one scene pair")]
    NoPairs,
    #[error("a series needs at least one game")]
    NoGames,
    #[error("agent {0} has no {1}")]
    EmptyKnowledge(String, &'static str),
}

/// An agent's read-only knowledge.
#[derive(Debug, Clone)]
pub struct Agent {
    pub id: String,
    pub chunks: Vec<Chunk>,
    pub grammar: Grammar,
    pub prototypes: ColorPrototypes,
    pub params: AbstractionParams,
    pub budget: SearchBudget,
}

impl Agent {
    pub fn new(
        id: impl Into<String>,
        chunks: Vec<Chunk>,
        grammar: Grammar,
        prototypes: ColorPrototypes,
        params: AbstractionParams,
    ) -> Result<Agent, GameError> {
        let id = id.into();
        if chunks.is_empty() {
            return Err(GameError::EmptyKnowledge(id, "chunks"));
        }
        if grammar.is_empty() {
            return Err(GameError::EmptyKnowledge(id, "grammar"));
        }
        Ok(Agent {
            id,
            chunks,
            grammar,
            prototypes,
            params,
            budget: SearchBudget::default(),
        })
    }

    /// An agent with the built-in chunks, grammar and color prototypes.
    pub fn standard(id: impl Into<String>, params: AbstractionParams) -> Agent {
        Agent::new(
            id,
            default_chunks(),
            Grammar::default(),
            ColorPrototypes::default(),
            params,
        )
        .expect("built-in knowledge is non-empty")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Success,
    Failure,
    SpeakerAbort,
    HearerAbort,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameRecord {
    pub speaker: String,
    pub hearer: String,
    pub pair_id: String,
    pub topic: SceneIndex,
    pub utterance: Option<Utterance>,
    pub hearer_choice: Option<SceneIndex>,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SeriesStats {
    pub games_played: usize,
    pub successes: usize,
    pub failures: usize,
    pub speaker_aborts: usize,
    pub hearer_aborts: usize,
    pub success_rate: f64,
}

impl SeriesStats {
    pub fn from_records(records: &[GameRecord]) -> SeriesStats {
        let count = |o: Outcome| records.iter().filter(|r| r.outcome == o).count();
        let games_played = records.len();
        let successes = count(Outcome::Success);
        SeriesStats {
            games_played,
            successes,
            failures: count(Outcome::Failure),
            speaker_aborts: count(Outcome::SpeakerAbort),
            hearer_aborts: count(Outcome::HearerAbort),
            success_rate: if games_played == 0 {
                0.0
            } else {
                successes as f64 / games_played as f64
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesReport {
    pub games: Vec<GameRecord>,
    pub stats: SeriesStats,
}

/// Why the speaker gave up.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpeakError {
    #[error(transparent)]
    Conceptualize(SemanticsError),
    #[error(transparent)]
    Produce(GrammarError),
}

/// Why the hearer gave up.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum HearError {
    #[error(transparent)]
    Parse(GrammarError),
    #[error(transparent)]
    Interpret(SemanticsError),
}

/// The speaker's side: find a discriminating program for `topic` and put
/// it into words.
pub fn speak(speaker: &Agent, pair: &ScenePair, topic: SceneIndex) -> Result<Utterance, SpeakError> {
    let perception = Perception::new(pair, speaker.params, speaker.prototypes.clone());
    let program = conceptualize(&perception, topic, &speaker.chunks, &speaker.budget)
        .map_err(SpeakError::Conceptualize)?;
    log::debug!("{} conceptualized {}", speaker.id, program.to_sexpr());
    produce(&program, &speaker.grammar).map_err(SpeakError::Produce)
}

/// The hearer's side. It sees only the utterance and the pair.
pub fn hear(hearer: &Agent, pair: &ScenePair, utterance: &Utterance) -> Result<SceneIndex, HearError> {
    let program = parse(utterance, &hearer.grammar).map_err(HearError::Parse)?;
    log::debug!("{} parsed {}", hearer.id, program.to_sexpr());
    let perception = Perception::new(pair, hearer.params, hearer.prototypes.clone());
    let (scene, _) =
        interpret(&program, &perception, &hearer.chunks, &hearer.budget).map_err(HearError::Interpret)?;
    Ok(scene)
}

/// One game. The topic is drawn uniformly from the pair with `seed`.
pub fn play_game(pair: &ScenePair, speaker: &Agent, hearer: &Agent, seed: u64) -> GameRecord {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let topic = if rng.random_bool(0.5) {
        SceneIndex::A
    } else {
        SceneIndex::B
    };
    let mut record = GameRecord {
        speaker: speaker.id.clone(),
        hearer: hearer.id.clone(),
        pair_id: pair.id.clone(),
        topic,
        utterance: None,
        hearer_choice: None,
        outcome: Outcome::SpeakerAbort,
    };
    let utterance = match speak(speaker, pair, topic) {
        Ok(u) => u,
        Err(e) => {
            log::info!("{} on {}: speaker gives up: {e}", speaker.id, pair.id);
            return record;
        }
    };
    record.utterance = Some(utterance.clone());
    match hear(hearer, pair, &utterance) {
        Ok(choice) => {
            record.hearer_choice = Some(choice);
            record.outcome = if choice == topic {
                Outcome::Success
            } else {
                Outcome::Failure
            };
        }
        Err(e) => {
            log::info!(
                "{} on {}: hearer gives up on `{utterance}`: {e}",
                hearer.id,
                pair.id
            );
            record.outcome = Outcome::HearerAbort;
        }
    }
    log::info!(
        "{} -> {} on {} topic {topic}: `{utterance}` {:?}",
        speaker.id,
        hearer.id,
        pair.id,
        record.outcome
    );
    record
}

/// `n` games between randomly drawn distinct agents over randomly drawn
/// pairs. The same arguments always give the same report.
pub fn run_series(
    pairs: &[ScenePair],
    agents: &[Agent],
    n: usize,
    seed: u64,
) -> Result<SeriesReport, GameError> {
    if agents.len() < 2 {
        return Err(GameError::TooFewAgents(agents.len()));
    }
    if pairs.is_empty() {
        return Err(GameError::NoPairs);
    }
    if n == 0 {
        return Err(GameError::NoGames);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut games = Vec::with_capacity(n);
    for _ in 0..n {
        let speaker = rng.random_range(0..agents.len());
        let mut hearer = rng.random_range(0..agents.len() - 1);
        if hearer >= speaker {
            hearer += 1;
        }
        let pair = &pairs[rng.random_range(0..pairs.len())];
        let game_seed: u64 = rng.random();
        games.push(play_game(pair, &agents[speaker], &agents[hearer], game_seed));
    }
    let stats = SeriesStats::from_records(&games);
    Ok(SeriesReport { games, stats })
}
