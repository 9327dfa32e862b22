use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use stagstrike::arena::{ArenaConfig, GridMap, Position};
use stagstrike::config::FileConfig;
use stagstrike::dqn::{save_weights, train, write_metrics_csv, ModelVariant};
use stagstrike::harness::{self, match_seed, run_match, run_tournament, svg, Policy};
use stagstrike::lidar::{detect_scene, Scene};
use stagstrike::planner::{plan, PlanRequest};

#[derive(Parser)]
#[command(name = "stagstrike", version, about = "2-vs-1 grid combat: train, evaluate, plan, detect")]
struct Cli {
    /// TOML config file; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a DQN variant and save its weights.
    Train(TrainArgs),
    /// Run a seeded tournament between two policies.
    Eval(EvalArgs),
    /// Plan one standoff path and print it as a JSON array of [x, y].
    Plan(PlanArgs),
    /// Run lidar detection on a JSON scene.
    Detect(DetectArgs),
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    variant: Option<ModelVariant>,
    #[arg(long)]
    episodes: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Map file; the built-in arena when omitted.
    #[arg(long)]
    map: Option<PathBuf>,
    #[arg(long)]
    out_weights: PathBuf,
    #[arg(long)]
    metrics_csv: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// astar | random | stationary | dqn:<weights>[:model1|model2|model3]
    #[arg(long)]
    blue: String,
    #[arg(long)]
    red: String,
    #[arg(long, default_value_t = 100)]
    matches: usize,
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    map: Option<PathBuf>,
    #[arg(long)]
    max_steps: Option<u32>,
    #[arg(long)]
    json_out: Option<PathBuf>,
    #[arg(long)]
    csv_out: Option<PathBuf>,
    /// Writes one trace SVG per match of the first repeat.
    #[arg(long)]
    trace_svg_dir: Option<PathBuf>,
}

#[derive(Args)]
struct PlanArgs {
    #[arg(long)]
    map: Option<PathBuf>,
    /// x,y
    #[arg(long, value_parser = parse_cell)]
    start: Position,
    #[arg(long, value_parser = parse_cell)]
    stag: Position,
    #[arg(long, value_parser = parse_cell)]
    hare: Position,
    #[arg(long)]
    attack_range: Option<f64>,
    #[arg(long)]
    safe_distance: Option<f64>,
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Args)]
struct DetectArgs {
    #[arg(long)]
    scene: PathBuf,
    #[arg(long)]
    json_out: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
}

/// Scene file: an optional map path (relative to the scene file) plus the scene.
#[derive(Deserialize)]
struct SceneFile {
    map: Option<PathBuf>,
    #[serde(flatten)]
    scene: Scene,
    #[serde(default)]
    seed: u64,
}

#[derive(Serialize)]
struct DetectOutput<'a> {
    schema_version: u32,
    enemies: Vec<[i32; 2]>,
    circles: &'a [stagstrike::lidar::Circle],
}

fn parse_cell(s: &str) -> Result<Position, String> {
    let (x, y) = s.split_once(',').ok_or_else(|| format!("expected x,y, got {s:?}"))?;
    let n = |v: &str| v.trim().parse::<i32>().map_err(|e| format!("{v:?}: {e}"));
    Ok(Position::new(n(x)?, n(y)?))
}

fn load_map(path: Option<&Path>) -> Result<GridMap> {
    match path {
        None => Ok(GridMap::default_arena()),
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading map {}", p.display()))?;
            GridMap::parse(&text).with_context(|| format!("parsing map {}", p.display()))
        }
    }
}

fn writer(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?))
}

fn cmd_train(cfg: FileConfig, args: TrainArgs) -> Result<()> {
    let map = load_map(args.map.as_deref())?;
    let rewards = cfg.reward_for(&map);
    let mut tc = cfg.train;
    if let Some(v) = args.variant {
        tc.variant = v;
    }
    if let Some(e) = args.episodes {
        tc.total_episodes = e;
    }
    if let Some(s) = args.seed {
        tc.seed = s;
    }
    let outcome = train(&tc, &map, &cfg.arena, &rewards)?;
    save_weights(&outcome.net, &args.out_weights)?;
    if let Some(path) = &args.metrics_csv {
        write_metrics_csv(&outcome.metrics, writer(path)?)?;
    }
    if let Some(last) = outcome.metrics.last() {
        eprintln!("episode {}: mean reward {:.4}, mean loss {:.6}", last.episode, last.mean_reward, last.mean_loss);
    }
    Ok(())
}

fn cmd_eval(cfg: FileConfig, args: EvalArgs) -> Result<()> {
    let map = load_map(args.map.as_deref())?;
    let mut arena: ArenaConfig = cfg.arena;
    if let Some(m) = args.max_steps {
        arena.max_steps = m;
    }
    let blue = Policy::parse(&args.blue)?;
    let red = Policy::parse(&args.red)?;
    let result = run_tournament(&blue, &red, &map, &arena, args.matches, args.repeats, args.seed)?;
    match &args.json_out {
        Some(path) => {
            let mut w = writer(path)?;
            result.write_json(&mut w)?;
            writeln!(w)?;
        }
        None => {
            result.write_json(io::stdout().lock())?;
            println!();
        }
    }
    if let Some(path) = &args.csv_out {
        result.write_csv(writer(path)?)?;
    }
    if let Some(dir) = &args.trace_svg_dir {
        fs::create_dir_all(dir)?;
        for i in 0..args.matches {
            let m = run_match(&blue, &red, &map, &arena, match_seed(args.seed, 0, i), arena.max_steps, true)?;
            svg::emit_trace_svg(&m, &map, &arena, &dir.join(format!("match_{i:04}.svg")))?;
        }
    }
    eprintln!(
        "{} vs {}: blue {:.1}%-{:.1}%, red {:.1}%-{:.1}%",
        result.blue,
        result.red,
        100.0 * result.blue_rate_min,
        100.0 * result.blue_rate_max,
        100.0 * result.red_rate_min,
        100.0 * result.red_rate_max
    );
    Ok(())
}

fn cmd_plan(cfg: FileConfig, args: PlanArgs) -> Result<()> {
    let map = load_map(args.map.as_deref())?;
    let req = PlanRequest {
        start: args.start,
        stag: args.stag,
        hare: args.hare,
        attack_range: args.attack_range.unwrap_or(cfg.arena.attack_range),
        safe_distance: args.safe_distance.unwrap_or(cfg.arena.safe_distance),
    };
    let result = plan(&map, &req);
    if let Some(path) = &args.svg {
        let cells = result.as_ref().ok().map(|p| p.cells.as_slice());
        fs::write(path, svg::plan_svg(&map, &req, cells))?;
    }
    let path = result?;
    let cells: Vec<[i32; 2]> = path.cells.iter().map(|c| [c.x, c.y]).collect();
    println!("{}", serde_json::to_string(&cells)?);
    Ok(())
}

fn cmd_detect(cfg: FileConfig, args: DetectArgs) -> Result<()> {
    let text = fs::read_to_string(&args.scene).with_context(|| format!("reading scene {}", args.scene.display()))?;
    let file: SceneFile = serde_json::from_str(&text).context("parsing scene")?;
    let map_path = file.map.map(|p| args.scene.parent().unwrap_or(Path::new(".")).join(p));
    let map = load_map(map_path.as_deref())?;
    if file.scene.sensors.is_empty() {
        bail!("scene has no sensors");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(file.seed);
    let det = detect_scene(&map, &file.scene, &cfg.detection, &mut rng)?;
    let out = DetectOutput {
        schema_version: harness::SCHEMA_VERSION,
        enemies: det.enemies.iter().map(|p| [p.x, p.y]).collect(),
        circles: &det.circles,
    };
    match &args.json_out {
        Some(path) => {
            let mut w = writer(path)?;
            serde_json::to_writer_pretty(&mut w, &out)?;
            writeln!(w)?;
        }
        None => println!("{}", serde_json::to_string_pretty(&out)?),
    }
    if let Some(path) = &args.svg {
        fs::write(path, svg::detection_svg(&map, &det.scans, &det.circles, &det.enemies))?;
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let cfg = FileConfig::load_or_default(cli.config.as_deref())?;
    match cli.command {
        Command::Train(a) => cmd_train(cfg, a),
        Command::Eval(a) => cmd_eval(cfg, a),
        Command::Plan(a) => cmd_plan(cfg, a),
        Command::Detect(a) => cmd_detect(cfg, a),
    }
}
