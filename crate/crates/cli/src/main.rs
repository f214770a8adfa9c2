use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use thiserror::Error;

use dynspatial::events::{describe_scene, narrate};
use dynspatial::game::{run_series, Agent};
use dynspatial::geometry::{
    gen_scene, load_pairs, load_scene, pair_to_json, scene_to_json, MotionScript, Scene, SceneIndex,
    ScenePair,
};
use dynspatial::grammar::{parse, produce, Grammar, Utterance};
use dynspatial::qualitative::{extract_fluents, AbstractionParams};
use dynspatial::semantics::{
    conceptualize, default_chunks, interpret, parse_program, ColorPrototypes, Perception, SearchBudget,
};
use dynspatial::suite::discriminable_pairs;

#[derive(Parser)]
#[command(
    name = "dynspatial",
    version,
    about = "Qualitative motion descriptions and language games over 2-D scenes"
)]
struct Cli {
    /// JSON file overriding abstraction thresholds.
    #[arg(long, global = true, value_name = "FILE")]
    params: Option<PathBuf>,
    /// Write the main output here instead of stdout.
    #[arg(long, global = true, value_name = "FILE")]
    out: Option<PathBuf>,
    /// More log output on stderr (repeat for more).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fluents of a scene as JSON lines.
    Abstract {
        #[arg(long, value_name = "FILE")]
        scene: PathBuf,
    },
    /// Event atoms of a scene as JSON lines, with an English rendering on stderr.
    Describe {
        #[arg(long, value_name = "FILE")]
        scene: PathBuf,
    },
    /// Phrase expressing a program given as s-expression text.
    Produce {
        #[arg(long)]
        text: String,
    },
    /// Canonical program text for a phrase.
    Parse {
        #[arg(long)]
        text: String,
    },
    /// Scene of a pair best matching a phrase, with its score.
    Interpret {
        #[arg(long, value_name = "FILE")]
        pair: PathBuf,
        #[arg(long)]
        text: String,
    },
    /// Shortest program singling out the topic scene of a pair.
    Conceptualize {
        #[arg(long, value_name = "FILE")]
        pair: PathBuf,
        #[arg(long, value_parser = parse_topic)]
        topic: SceneIndex,
    },
    /// A series of language games between two agents.
    Game {
        /// Pair documents, each holding one pair or an array of pairs; the
        /// built-in suite when absent.
        #[arg(long, value_name = "FILE")]
        pair: Vec<PathBuf>,
        #[arg(long, default_value_t = 20)]
        games: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Positional noise for the built-in suite, in meters.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
    },
    /// Render motion scripts into scene documents.
    GenScenes {
        /// Motion script; the built-in suite pairs when absent.
        #[arg(long, value_name = "FILE")]
        scene: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
    },
}

fn parse_topic(s: &str) -> Result<SceneIndex, String> {
    SceneIndex::parse(s).ok_or_else(|| format!("expected `a` or `b`, got `{s}`"))
}

#[derive(Debug, Error)]
enum CliError {
    /// Bad input files or arguments.
    #[error("{0}")]
    Usage(String),
    /// Well-formed input the pipeline cannot handle.
    #[error("{0}")]
    Domain(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 1,
        }
    }
}

fn usage(e: impl ToString) -> CliError {
    CliError::Usage(e.to_string())
}

fn domain(e: impl ToString) -> CliError {
    CliError::Domain(e.to_string())
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn load_params(path: Option<&Path>) -> Result<AbstractionParams, CliError> {
    let Some(path) = path else {
        return Ok(AbstractionParams::default());
    };
    let params: AbstractionParams =
        serde_json::from_str(&read(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    params
        .validate()
        .map_err(|e| usage(format!("{}: {e}", path.display())))?;
    Ok(params)
}

fn load_scene_file(path: &Path) -> Result<Scene, CliError> {
    load_scene(&read(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn load_one_pair(path: &Path) -> Result<ScenePair, CliError> {
    let mut pairs = load_pairs(&read(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    if pairs.len() != 1 {
        return Err(usage(format!(
            "{}: expected one pair, found {}",
            path.display(),
            pairs.len()
        )));
    }
    Ok(pairs.remove(0))
}

fn lines(items: impl IntoIterator<Item = String>) -> String {
    items.into_iter().map(|l| l + "\n").collect()
}

fn run(cli: &Cli) -> Result<String, CliError> {
    let params = load_params(cli.params.as_deref())?;
    let prototypes = ColorPrototypes::default();
    let grammar = Grammar::default();
    let budget = SearchBudget::default();

    let output = match &cli.command {
        Command::Abstract { scene } => {
            let scene = load_scene_file(scene)?;
            lines(extract_fluents(&scene, &params).iter().map(|f| f.to_json_line()))
        }
        Command::Describe { scene } => {
            let scene = load_scene_file(scene)?;
            let atoms = describe_scene(&scene, &params);
            for sentence in narrate(&scene, &atoms, &prototypes) {
                eprintln!("{sentence}");
            }
            lines(atoms.iter().map(|a| a.to_json_line()))
        }
        Command::Produce { text } => {
            let program = parse_program(text).map_err(usage)?;
            let utterance = produce(&program, &grammar).map_err(domain)?;
            format!("{utterance}\n")
        }
        Command::Parse { text } => {
            let program = parse(&Utterance::from_text(text), &grammar).map_err(domain)?;
            program.to_sexpr().trim_end().to_string() + "\n"
        }
        Command::Interpret { pair, text } => {
            let pair = load_one_pair(pair)?;
            let program = parse(&Utterance::from_text(text), &grammar).map_err(domain)?;
            let perception = Perception::new(&pair, params, prototypes);
            let (scene, score) =
                interpret(&program, &perception, &default_chunks(), &budget).map_err(domain)?;
            serde_json::json!({ "scene": scene, "score": score }).to_string() + "\n"
        }
        Command::Conceptualize { pair, topic } => {
            let pair = load_one_pair(pair)?;
            let perception = Perception::new(&pair, params, prototypes);
            let program = conceptualize(&perception, *topic, &default_chunks(), &budget).map_err(domain)?;
            program.to_sexpr().trim_end().to_string() + "\n"
        }
        Command::Game {
            pair,
            games,
            seed,
            noise,
        } => {
            let pairs = if pair.is_empty() {
                discriminable_pairs(*noise, *seed).map_err(usage)?
            } else {
                let mut pairs = Vec::new();
                for path in pair {
                    pairs.extend(
                        load_pairs(&read(path)?).map_err(|e| usage(format!("{}: {e}", path.display())))?,
                    );
                }
                pairs
            };
            let agents = [
                Agent::standard("agent-1", params),
                Agent::standard("agent-2", params),
            ];
            let report = run_series(&pairs, &agents, *games, *seed).map_err(usage)?;
            serde_json::to_string_pretty(&report).map_err(usage)? + "\n"
        }
        Command::GenScenes { scene, seed, noise } => match scene {
            Some(path) => {
                let script = MotionScript::from_json(&read(path)?)
                    .map_err(|e| usage(format!("{}: {e}", path.display())))?;
                scene_to_json(&gen_scene(&script, *noise, *seed).map_err(usage)?) + "\n"
            }
            None => {
                let pairs = discriminable_pairs(*noise, *seed).map_err(usage)?;
                let docs: Vec<String> = pairs.iter().map(pair_to_json).collect();
                format!("[\n{}\n]\n", docs.join(",\n"))
            }
        },
    };
    Ok(output)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match run(&cli) {
        Ok(output) => {
            let written = match &cli.out {
                Some(path) => fs::write(path, &output).map_err(|e| format!("{}: {e}", path.display())),
                None => std::io::stdout()
                    .write_all(output.as_bytes())
                    .map_err(|e| e.to_string()),
            };
            match written {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
