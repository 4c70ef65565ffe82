//! Subcommands behind the `mononav` binary.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use mononav::config::RunConfig;
use mononav::eval::{
    export_trajectories, limitation_csv, run_ablation, run_eval_logged, run_limitation_sweep, width_for_occupancy, AblationEntry, AblationSpec,
    PolicyController,
};
use mononav::pseudolaser::{apply_semantic_mask, augment_noise, sense, PseudoLaser};
use mononav::trainer::{Checkpoint, Stage, Trainer};
use mononav::worldsim::{column_bearing, render_hits, spawn_from_description, ScenarioId, SceneDescription, SceneSpec};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;

#[derive(Debug, Parser)]
#[command(name = "mononav", version, about = "Monocular pseudo-laser navigation toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a policy with recurrent PPO.
    Train(TrainArgs),
    /// Evaluate a checkpoint on one scenario.
    Eval(EvalArgs),
    /// Evaluate several checkpoints and sensing variants across scenarios.
    Ablate(AblateArgs),
    /// Success rate over wall width (or field-of-view occupancy) and distance.
    LimitSweep(LimitSweepArgs),
    /// Dump depth, traversability mask and pseudo-laser for one pose.
    RenderSlice(RenderSliceArgs),
    /// Apply junction-aware noise augmentation to laser scans.
    Augment(AugmentArgs),
}

#[derive(Debug, Args)]
pub struct ConfigArg {
    /// Run configuration (JSON). Defaults apply to missing fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

impl ConfigArg {
    pub fn load(&self) -> Result<RunConfig> {
        match &self.config {
            Some(p) => RunConfig::load(p).with_context(|| format!("loading {}", p.display())),
            None => Ok(RunConfig::default()),
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    /// Curriculum stage name to start from, or a scenario id / scene file to train on alone.
    #[arg(long)]
    pub stage: Option<String>,
    /// Continue from a checkpoint.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// Where to write the final checkpoint.
    #[arg(long, default_value = "checkpoint.json")]
    pub out: PathBuf,
    /// One JSON line per update.
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Override the episode budget.
    #[arg(long)]
    pub episodes: Option<u64>,
    /// Write an intermediate checkpoint every N updates.
    #[arg(long)]
    pub save_every: Option<u64>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Scenario id (e.g. `test_random:4`) or scene JSON file.
    #[arg(long)]
    pub scenario: String,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Metrics JSON output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Directory for per-agent trajectory CSVs and scene JSON.
    #[arg(long)]
    pub trajectories: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AblateArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    /// JSON list of `{architecture, fov_deg, sensing, augmentation, checkpoint}`.
    #[arg(long)]
    pub manifest: PathBuf,
    /// Scenario ids or scene files; repeat for several.
    #[arg(long = "scenario", required = true)]
    pub scenarios: Vec<String>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// CSV table output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LimitSweepArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Wall widths in meters, comma separated.
    #[arg(long, value_delimiter = ',', conflicts_with = "occupancies")]
    pub widths: Vec<f64>,
    /// Field-of-view occupancies in (0, 1); widths are derived per distance.
    #[arg(long, value_delimiter = ',')]
    pub occupancies: Vec<f64>,
    /// Wall distances in meters, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub distances: Vec<f64>,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RenderSliceArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    #[arg(long)]
    pub scenario: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub agent: usize,
    /// Override the agent pose as `x,y,heading`.
    #[arg(long, value_delimiter = ',')]
    pub pose: Option<Vec<f64>>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    #[command(flatten)]
    pub config: ConfigArg,
    /// One scan per line, comma separated ranges.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(a) => train(a),
        Command::Eval(a) => eval(a),
        Command::Ablate(a) => ablate(a),
        Command::LimitSweep(a) => limit_sweep(a),
        Command::RenderSlice(a) => render_slice(a),
        Command::Augment(a) => augment(a),
    }
}

/// A scenario id, or a path to a scene description file.
pub fn load_scene(arg: &str) -> Result<SceneDescription> {
    let path = Path::new(arg);
    if arg.ends_with(".json") || path.is_file() {
        let text = fs::read_to_string(path).with_context(|| format!("reading {arg}"))?;
        return Ok(SceneDescription::from_json(&text)?);
    }
    Ok(arg.parse::<ScenarioId>()?.description())
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    Checkpoint::load(path).with_context(|| format!("loading checkpoint {}", path.display()))
}

fn train(a: TrainArgs) -> Result<()> {
    let mut run = a.config.load()?;
    if let Some(n) = a.episodes {
        run.trainer.total_episodes = n;
    }
    let mut start_stage = None;
    if let Some(id) = &a.stage {
        match run.trainer.curriculum.stages.iter().position(|s| &s.name == id) {
            Some(i) => start_stage = Some(i),
            None => {
                let desc = load_scene(id)?;
                run.trainer.curriculum.stages = vec![Stage { name: desc.name.clone(), scenes: vec![SceneSpec::Custom(Box::new(desc))] }];
            }
        }
    }
    let mut trainer = match &a.resume {
        Some(p) => Trainer::resume(&run, &load_checkpoint(p)?)?,
        None => Trainer::new(&run)?,
    };
    if let Some(i) = start_stage {
        trainer.stage = i;
    }
    let mut log = match &a.log {
        Some(p) => Some(fs::File::create(p).with_context(|| format!("creating {}", p.display()))?),
        None => None,
    };
    let camera = run.camera.clone();
    let mut io_error = None;
    trainer.train(|t, stats| {
        log::info!(
            "update {} stage {} episodes {} reward {:.3} success {:.3} kl {:.5}",
            stats.update,
            stats.stage,
            stats.episodes,
            stats.mean_episode_reward,
            stats.success_rate,
            stats.kl
        );
        if let Some(f) = log.as_mut() {
            let line = serde_json::to_string(stats).expect("stats serialise");
            if let Err(e) = writeln!(f, "{line}") {
                io_error.get_or_insert(e);
            }
        }
        if let Some(n) = a.save_every.filter(|&n| n > 0 && stats.update % n == 0) {
            match t.checkpoint(&camera).save(&a.out) {
                Ok(()) => log::debug!("checkpoint after update {}", stats.update - stats.update % n),
                Err(e) => log::warn!("intermediate checkpoint failed: {e}"),
            }
        }
    })?;
    if let Some(e) = io_error {
        bail!("writing training log: {e}");
    }
    trainer.checkpoint(&camera).save(&a.out)?;
    println!("trained {} episodes in {} updates; checkpoint {}", trainer.episodes_done, trainer.updates, a.out.display());
    Ok(())
}

fn eval(a: EvalArgs) -> Result<()> {
    let run = a.config.load()?;
    let ckpt = load_checkpoint(&a.checkpoint)?;
    let desc = load_scene(&a.scenario)?;
    let trials = a.trials.unwrap_or(run.eval.n_trials);
    let seed = a.seed.unwrap_or(run.eval.seed);
    let (metrics, logs) = run_eval_logged(&ckpt, &desc, trials, seed, &run)?;
    let json = serde_json::to_string_pretty(&metrics)?;
    match &a.out {
        Some(p) => write(p, &json)?,
        None => println!("{json}"),
    }
    if let Some(dir) = &a.trajectories {
        let files = export_trajectories(&logs, dir)?;
        log::info!("wrote {} trajectory files to {}", files.len(), dir.display());
    }
    Ok(())
}

#[derive(Debug, Deserialize)]
pub struct ManifestEntry {
    #[serde(flatten)]
    pub spec: AblationSpec,
    pub checkpoint: Option<PathBuf>,
}

fn ablate(a: AblateArgs) -> Result<()> {
    let run = a.config.load()?;
    let text = fs::read_to_string(&a.manifest).with_context(|| format!("reading {}", a.manifest.display()))?;
    let manifest: Vec<ManifestEntry> = serde_json::from_str(&text).context("parsing ablation manifest")?;
    let base = a.manifest.parent().unwrap_or(Path::new("."));
    let entries = manifest
        .into_iter()
        .map(|m| {
            let checkpoint = m.checkpoint.map(|p| load_checkpoint(&base.join(p))).transpose()?;
            Ok(AblationEntry { spec: m.spec, checkpoint })
        })
        .collect::<Result<Vec<_>>>()?;
    let scenes = a.scenarios.iter().map(|s| load_scene(s)).collect::<Result<Vec<_>>>()?;
    let trials = a.trials.unwrap_or(run.eval.n_trials);
    let table = run_ablation(&entries, &scenes, trials, a.seed.unwrap_or(run.eval.seed), &run)?;
    print!("{}", table.to_text());
    if let Some(p) = &a.out {
        write(p, table.to_csv())?;
    }
    Ok(())
}

fn limit_sweep(a: LimitSweepArgs) -> Result<()> {
    let run = a.config.load()?;
    let ckpt = load_checkpoint(&a.checkpoint)?;
    ckpt.check_compatible(&run.policy_config(), &run.camera).map_err(anyhow::Error::msg)?;
    let mut ctl = PolicyController::from_checkpoint(&ckpt)?;
    let env_cfg = run.env_config(false);
    let seed = a.seed.unwrap_or(run.eval.seed);
    let cells = if a.occupancies.is_empty() {
        if a.widths.is_empty() {
            bail!("give --widths or --occupancies");
        }
        run_limitation_sweep(&a.widths, &a.distances, a.trials, seed, &env_cfg, &mut ctl)?
    } else {
        let mut cells = Vec::new();
        for &d in &a.distances {
            let widths: Vec<f64> = a.occupancies.iter().map(|&o| width_for_occupancy(o, d, run.camera.horizontal_fov)).collect();
            cells.extend(run_limitation_sweep(&widths, &[d], a.trials, seed, &env_cfg, &mut ctl)?);
        }
        cells
    };
    let csv = limitation_csv(&cells);
    match &a.out {
        Some(p) => write(p, csv)?,
        None => print!("{csv}"),
    }
    Ok(())
}

/// Binary PGM (P5), 8 bits per pixel.
pub fn pgm(width: usize, height: usize, pixels: &[u8]) -> Vec<u8> {
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

/// Scale meters to gray levels, near dark and far bright; 0 stays black.
pub fn depth_gray(values: &[f64], max_range: f64) -> Vec<u8> {
    values.iter().map(|&d| (255.0 * (d / max_range).clamp(0.0, 1.0)).round() as u8).collect()
}

fn grid_csv<T: std::fmt::Display>(values: &[T], width: usize) -> String {
    let mut s = String::new();
    for row in values.chunks(width) {
        let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        s.push_str(&line.join(","));
        s.push('\n');
    }
    s
}

fn render_slice(a: RenderSliceArgs) -> Result<()> {
    let run = a.config.load()?;
    let cam = &run.camera;
    let desc = load_scene(&a.scenario)?;
    let mut world = spawn_from_description(&desc, a.seed)?;
    if a.agent >= world.agents.len() {
        bail!("scene has {} agents, asked for agent {}", world.agents.len(), a.agent);
    }
    if let Some(p) = &a.pose {
        if p.len() != 3 {
            bail!("--pose takes x,y,heading");
        }
        let ag = &mut world.agents[a.agent];
        ag.position = mononav::worldsim::Vec2::new(p[0], p[1]);
        ag.heading = p[2];
    }
    let hits = render_hits(&world, a.agent, cam)?;
    let depth = hits.depth();
    let mask = hits.traversability();
    let masked = apply_semantic_mask(&depth, &mask)?;
    let laser = sense(&world, a.agent, cam, run.sensing, &run.sensing_params)?;

    let (h, w) = (cam.height, cam.width);
    let dir = &a.out_dir;
    write(&dir.join("depth.pgm"), pgm(w, h, &depth_gray(depth.values(), cam.max_range)))?;
    write(&dir.join("mask.pgm"), pgm(w, h, &mask.values().iter().map(|&m| m * 255).collect::<Vec<_>>()))?;
    write(&dir.join("masked_depth.pgm"), pgm(w, h, &depth_gray(&masked.values, cam.max_range)))?;
    write(&dir.join("depth.csv"), grid_csv(depth.values(), w))?;
    write(&dir.join("mask.csv"), grid_csv(mask.values(), w))?;
    let mut s = String::from("column,bearing,range\n");
    for (j, r) in laser.ranges.iter().enumerate() {
        s.push_str(&format!("{j},{},{r}\n", column_bearing(cam, j)));
    }
    write(&dir.join("laser.csv"), s)?;
    println!("wrote depth, mask and {} laser to {}", run.sensing, dir.display());
    Ok(())
}

/// One scan per non-empty line; `#` starts a comment line.
pub fn parse_scans(text: &str, max_range: f64) -> Result<Vec<PseudoLaser>> {
    let mut scans = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let ranges =
            line.split(',').map(|v| v.trim().parse::<f64>().with_context(|| format!("line {}: bad number `{v}`", n + 1))).collect::<Result<Vec<_>>>()?;
        scans.push(PseudoLaser::new(ranges, max_range).with_context(|| format!("line {}", n + 1))?);
    }
    Ok(scans)
}

fn augment(a: AugmentArgs) -> Result<()> {
    let run = a.config.load()?;
    let text = fs::read_to_string(&a.input).with_context(|| format!("reading {}", a.input.display()))?;
    let scans = parse_scans(&text, run.camera.max_range)?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let mut out = String::new();
    for scan in &scans {
        let noisy = augment_noise(scan, &run.noise, &mut rng);
        let line: Vec<String> = noisy.ranges.iter().map(|r| r.to_string()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    write(&a.output, out)?;
    println!("augmented {} scans", scans.len());
    Ok(())
}
