//! Subcommands behind the `toolpose` binary.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;
use toolpose_core::eval::{self, CompareOptions, ErrorReport, EvalError, ReferenceTrack};
use toolpose_core::export::{self, ExportError, TrackJson, TrackRow};
use toolpose_core::pose3d::PoseError;
use toolpose_core::synth::{self, GroundTruth, Preset, SceneSetup, SynthError};
use toolpose_core::{
    load_config, load_sequence, track_instrument, AngleConvention, BoxMode, Config, ConfigError,
    FramePattern, FramesError,
};

pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_DATA: u8 = 3;
pub const EXIT_INVARIANT: u8 = 4;

const CONFIG_FILE: &str = "config.json";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Invariant(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Data(_) => EXIT_DATA,
            CliError::Invariant(_) => EXIT_INVARIANT,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<FramesError> for CliError {
    fn from(e: FramesError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<PoseError> for CliError {
    fn from(e: PoseError) -> Self {
        match e {
            PoseError::EmptySequence | PoseError::FrameOrder(..) => CliError::Data(e.to_string()),
            _ => CliError::Invariant(e.to_string()),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::InvalidParameter(_) | SynthError::BehindCamera { .. } => {
                CliError::Config(e.to_string())
            }
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<ExportError> for CliError {
    fn from(e: ExportError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        CliError::Data(e.to_string())
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "toolpose",
    version,
    about = "Instrument pose tracking from segmentation label maps"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Pipeline configuration (JSON). Defaults to `config.json` in or above
    /// the input directory.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Number of `run_NN` directories to generate or process.
    #[arg(long, global = true)]
    pub runs: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub box_mode: Option<BoxModeArg>,
    #[arg(long, global = true, value_enum)]
    pub angle_convention: Option<ConventionArg>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Track a frame directory and write track CSV, JSON and box dump.
    Track,
    /// Render a synthetic dataset with ground truth.
    Synth {
        #[arg(value_enum)]
        preset: PresetArg,
        #[arg(long, default_value_t = 30)]
        frames: usize,
    },
    /// Score track files against ground truth.
    Eval {
        /// Ground-truth directory (holding `gt.csv`) or file.
        #[arg(long)]
        gt: PathBuf,
        /// Compare per-frame deltas instead of cumulative values.
        #[arg(long)]
        per_delta: bool,
    },
    /// Turn `track.json` into a JSON-lines cylinder scene.
    ExportScene,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BoxModeArg {
    QuadFit,
    MinRect,
}

impl From<BoxModeArg> for BoxMode {
    fn from(b: BoxModeArg) -> Self {
        match b {
            BoxModeArg::QuadFit => BoxMode::QuadFit,
            BoxModeArg::MinRect => BoxMode::MinRect,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ConventionArg {
    Algorithm,
    Prose,
}

impl From<ConventionArg> for AngleConvention {
    fn from(c: ConventionArg) -> Self {
        match c {
            ConventionArg::Algorithm => AngleConvention::Algorithm,
            ConventionArg::Prose => AngleConvention::Prose,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum PresetArg {
    Static,
    TranslateXy,
    Dolly,
    YawSpin,
    PitchTilt,
    Combined,
}

impl PresetArg {
    /// Preset parameters for run `run` (0-based).
    pub fn preset(self, setup: &SceneSetup, seed: u64, run: usize) -> Preset {
        let z = setup.depth * setup.camera.focal_px;
        let half_degree = 0.5_f64.to_radians();
        match self {
            PresetArg::Static => Preset::Static,
            PresetArg::TranslateXy => Preset::TranslateXy { vx: -4.3, vy: 3.7 },
            PresetArg::Dolly => Preset::Dolly { z0: z, z1: 1.2 * z },
            PresetArg::YawSpin => Preset::YawSpin { rate: half_degree },
            PresetArg::PitchTilt => Preset::PitchTilt { rate: half_degree },
            PresetArg::Combined => Preset::Combined {
                seed: seed.wrapping_add(run as u64),
            },
        }
    }
}

pub fn run_dir_name(i: usize) -> String {
    format!("run_{:02}", i + 1)
}

/// `run_NN` subdirectories of `dir`, sorted.
pub fn run_dirs(dir: &Path) -> Result<Vec<String>, CliError> {
    let entries =
        fs::read_dir(dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))?;
    let mut names: Vec<String> = entries
        .filter_map(Result::ok)
        .filter(|e| e.path().is_dir())
        .filter_map(|e| e.file_name().to_str().map(str::to_string))
        .filter(|n| {
            n.strip_prefix("run_")
                .is_some_and(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
        })
        .collect();
    names.sort();
    Ok(names)
}

/// Single run (`None`) or the selected `run_NN` names.
fn select_runs(dir: &Path, runs: Option<usize>) -> Result<Option<Vec<String>>, CliError> {
    let found = run_dirs(dir)?;
    if found.is_empty() {
        return match runs {
            Some(r) if r > 1 => Err(CliError::Data(format!(
                "{}: no run_NN directories",
                dir.display()
            ))),
            _ => Ok(None),
        };
    }
    match runs {
        Some(r) if r > found.len() => Err(CliError::Data(format!(
            "{}: asked for {r} runs, found {}",
            dir.display(),
            found.len()
        ))),
        Some(r) => Ok(Some(found[..r].to_vec())),
        None => Ok(Some(found)),
    }
}

fn require<'a>(p: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, CliError> {
    p.as_deref()
        .ok_or_else(|| CliError::Config(format!("missing --{flag}")))
}

fn find_config(common: &Common, input: &Path) -> Result<Config, CliError> {
    let path = match &common.config {
        Some(p) => p.clone(),
        None => [input.join(CONFIG_FILE), input.join("..").join(CONFIG_FILE)]
            .into_iter()
            .find(|p| p.is_file())
            .ok_or_else(|| {
                CliError::Config(format!(
                    "no --config given and no {CONFIG_FILE} next to {}",
                    input.display()
                ))
            })?,
    };
    let mut cfg = load_config(&path)?;
    if let Some(b) = common.box_mode {
        cfg.tracker.box_mode = b.into();
    }
    if let Some(c) = common.angle_convention {
        cfg.tracker.angle_convention = c.into();
    }
    Ok(cfg)
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    Ok(export::write_text(path, text)?)
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Track => cmd_track(&cli.common),
        Command::Synth { preset, frames } => cmd_synth(&cli.common, *preset, *frames),
        Command::Eval { gt, per_delta } => cmd_eval(&cli.common, gt, *per_delta),
        Command::ExportScene => cmd_export_scene(&cli.common),
    }
}

fn for_each_run(
    input: &Path,
    output: &Path,
    runs: Option<usize>,
    mut f: impl FnMut(&Path, &Path) -> Result<(), CliError>,
) -> Result<(), CliError> {
    match select_runs(input, runs)? {
        None => f(input, output),
        Some(names) => names
            .iter()
            .try_for_each(|n| f(&input.join(n), &output.join(n))),
    }
}

pub fn cmd_track(common: &Common) -> Result<(), CliError> {
    let input = require(&common.input, "input")?;
    let output = common.output.as_deref().unwrap_or(input);
    let cfg = find_config(common, input)?;
    for_each_run(input, output, common.runs, |inp, out| {
        track_one(&cfg, inp, out)
    })
}

fn track_one(cfg: &Config, input: &Path, output: &Path) -> Result<(), CliError> {
    let t0 = Instant::now();
    let frames = load_sequence(input, &FramePattern::default())?;
    let t1 = Instant::now();
    let track = track_instrument(&frames, cfg)?;
    let t2 = Instant::now();
    write(
        &output.join(&cfg.output.track_csv),
        &export::track_csv(&TrackRow::from_track(&track)),
    )?;
    let json = serde_json::to_string_pretty(&export::track_json(&track)).expect("track serializes");
    write(&output.join(&cfg.output.track_json), &json)?;
    write(
        &output.join(&cfg.output.boxes_csv),
        &export::boxes_csv(&track.boxes),
    )?;
    let n = frames.len() as f64;
    let ms = |a: Instant, b: Instant| (b - a).as_secs_f64() * 1e3;
    eprintln!(
        "{}: {} frames; load {:.1} ms, track {:.1} ms total ({:.3} ms/frame), wall {:.1} ms",
        input.display(),
        frames.len(),
        ms(t0, t1),
        ms(t1, t2),
        ms(t1, t2) / n,
        ms(t0, Instant::now())
    );
    Ok(())
}

pub fn cmd_synth(common: &Common, preset: PresetArg, frames: usize) -> Result<(), CliError> {
    let output = require(&common.output, "output")?;
    let setup = SceneSetup::default();
    let mut cfg = setup.config();
    if let Some(b) = common.box_mode {
        cfg.tracker.box_mode = b.into();
    }
    if let Some(c) = common.angle_convention {
        cfg.tracker.angle_convention = c.into();
    }
    let runs = common.runs.unwrap_or(1);
    if runs == 0 {
        return Err(CliError::Config("--runs must be at least 1".into()));
    }
    let t0 = Instant::now();
    for i in 0..runs {
        let dir = if runs == 1 {
            output.to_path_buf()
        } else {
            output.join(run_dir_name(i))
        };
        let script = setup.preset(preset.preset(&setup, common.seed, i), frames)?;
        let (fr, gt) = synth::generate(&script, &setup.camera, setup.width, setup.height)?;
        synth::write_dataset(&dir, &fr, &gt)?;
    }
    write(&output.join(CONFIG_FILE), &cfg.to_json_string())?;
    eprintln!(
        "synth {:?}: {runs} run(s) x {frames} frames in {:.1} ms",
        preset,
        t0.elapsed().as_secs_f64() * 1e3
    );
    Ok(())
}

fn load_gt(path: &Path) -> Result<GroundTruth, CliError> {
    let file = if path.is_dir() {
        path.join(synth::GT_FILE)
    } else {
        path.to_path_buf()
    };
    Ok(synth::gt_from_csv(
        &read_text(&file)?,
        &file.display().to_string(),
    )?)
}

fn load_track_json(dir: &Path, name: &str) -> Result<TrackJson, CliError> {
    let path = dir.join(name);
    serde_json::from_str(&read_text(&path)?)
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn report_names(cfg_out: &toolpose_core::config::OutputPaths) -> [String; 4] {
    let with_suffix = |name: &str| match name.rsplit_once('.') {
        Some((stem, ext)) => format!("{stem}_2d.{ext}"),
        None => format!("{name}_2d"),
    };
    [
        cfg_out.report_txt.clone(),
        cfg_out.report_csv.clone(),
        with_suffix(&cfg_out.report_txt),
        with_suffix(&cfg_out.report_csv),
    ]
}

struct RunReports {
    pose: ErrorReport,
    boxes: Option<ErrorReport>,
}

fn eval_one(
    names: &toolpose_core::config::OutputPaths,
    track_dir: &Path,
    gt_path: &Path,
    opts: CompareOptions,
) -> Result<RunReports, CliError> {
    let gt = load_gt(gt_path)?;
    let csv_path = track_dir.join(&names.track_csv);
    let rows = export::parse_track_csv(&read_text(&csv_path)?, &csv_path.display().to_string())?;
    let meta = load_track_json(track_dir, &names.track_json)?;
    let reference = ReferenceTrack::from_ground_truth(&gt, &meta.camera, meta.options.depth_mode)?;
    let pose = eval::compare_3d_rows(&rows, &reference, opts)?;
    let box_path = track_dir.join(&names.boxes_csv);
    let boxes = if box_path.is_file() {
        let rows =
            export::parse_boxes_csv(&read_text(&box_path)?, &box_path.display().to_string())?;
        Some(eval::compare_2d(
            &export::results_from_box_rows(&rows),
            &gt,
        )?)
    } else {
        None
    };
    Ok(RunReports { pose, boxes })
}

fn write_reports(dir: &Path, names: &[String; 4], r: &RunReports) -> Result<(), CliError> {
    write(&dir.join(&names[0]), &eval::report_text(&r.pose))?;
    write(&dir.join(&names[1]), &eval::report_csv(&r.pose))?;
    if let Some(b) = &r.boxes {
        write(&dir.join(&names[2]), &eval::report_text(b))?;
        write(&dir.join(&names[3]), &eval::report_csv(b))?;
    }
    Ok(())
}

pub fn cmd_eval(common: &Common, gt: &Path, per_delta: bool) -> Result<(), CliError> {
    let input = require(&common.input, "input")?;
    let output = common.output.as_deref().unwrap_or(input);
    let outputs = match &common.config {
        Some(p) => load_config(p)?.output,
        None => Default::default(),
    };
    let names = report_names(&outputs);
    let opts = CompareOptions { per_delta };
    let t0 = Instant::now();
    match select_runs(input, common.runs)? {
        None => {
            let r = eval_one(&outputs, input, gt, opts)?;
            write_reports(output, &names, &r)?;
        }
        Some(runs) => {
            let mut all = Vec::with_capacity(runs.len());
            for n in &runs {
                let r = eval_one(&outputs, &input.join(n), &gt.join(n), opts)?;
                write_reports(&output.join(n), &names, &r)?;
                all.push(r);
            }
            let pose: Vec<ErrorReport> = all.iter().map(|r| r.pose.clone()).collect();
            let boxes: Option<Vec<ErrorReport>> = all.iter().map(|r| r.boxes.clone()).collect();
            let agg = RunReports {
                pose: eval::aggregate(&pose)?,
                boxes: boxes.map(|b| eval::aggregate(&b)).transpose()?,
            };
            write_reports(output, &names, &agg)?;
        }
    }
    eprintln!("eval: {:.1} ms", t0.elapsed().as_secs_f64() * 1e3);
    Ok(())
}

pub fn cmd_export_scene(common: &Common) -> Result<(), CliError> {
    let input = require(&common.input, "input")?;
    let outputs = match &common.config {
        Some(p) => load_config(p)?.output,
        None => Default::default(),
    };
    let output = common.output.as_deref().unwrap_or(input);
    for_each_run(input, output, common.runs, |inp, out| {
        let meta = load_track_json(inp, &outputs.track_json)?;
        let scene = export::scene_from_inputs(&meta.scene_inputs())?;
        let target = if out.extension().is_some_and(|e| e == "jsonl") {
            out.to_path_buf()
        } else {
            out.join(&outputs.scene)
        };
        write(&target, &export::scene_jsonl(&scene))
    })
}
