use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use radar_eot::config::PipelineConfig;
use radar_eot::eval::{
    bench, bench_csv, read_recording, run_frames, run_scenario, speed_error_stats, write_recording, FrameTrace, Recording,
    RunOptions, RunOutput, ALGORITHMS, REPORT_SCHEMA_VERSION,
};
use radar_eot::flow::FlowField;
use radar_eot::simulator::{circle, generate, scenario_a, scenario_b, scenario_c, traffic, Scenario};
use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Radar extended-object tracking: simulate scenes, run the tracker and
/// benchmark it.
///
/// Configuration fields can be overridden through environment variables
/// prefixed with RADAR_EOT_, using a double underscore between nested keys
/// (for example RADAR_EOT_RLS__NUM_FILTERS=5).
#[derive(Parser)]
#[command(name = "radar-eot", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a simulated frame stream as line-delimited JSON.
    Simulate {
        #[command(flatten)]
        scene: SceneArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; standard output if omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the pipeline on a scenario or a recorded stream and write a report.
    Run {
        #[command(flatten)]
        scene: SceneArgs,
        /// Recorded frame stream to replay instead of simulating.
        #[arg(long, conflicts_with = "scenario")]
        frames: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory for report.json, stats.csv and traces.jsonl.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Flow-direction file for clustering (overrides the config).
        #[arg(long)]
        flow: Option<PathBuf>,
        /// Record per-frame wall times in the report.
        #[arg(long)]
        timing: bool,
    },
    /// Time the pipeline on multi-lane traffic with growing object counts.
    Bench {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "5,10,15,20,25,30")]
        objects: Vec<usize>,
        #[arg(long, default_value_t = 100)]
        frames: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute speed-error statistics from a trace file.
    Stats {
        #[arg(long)]
        traces: PathBuf,
        #[arg(long, default_value_t = 1.0 / 14.0)]
        period: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SceneArgs {
    /// Built-in scenario (a, b, c, circle, traffic) or a scenario TOML file.
    #[arg(long)]
    scenario: Option<String>,
    /// Override the scenario duration (s).
    #[arg(long)]
    duration: Option<f64>,
}

impl SceneArgs {
    fn load(&self) -> Result<Scenario> {
        let name = self.scenario.as_deref().context("--scenario is required")?;
        let mut s = match name {
            "a" => scenario_a(),
            "b" => scenario_b(),
            "c" => scenario_c(),
            "circle" => circle(30.0, 10.0, 15.0, 20.0),
            "traffic" => traffic(30, 10.0),
            path => {
                let text = fs::read_to_string(path).with_context(|| format!("reading scenario {path}"))?;
                Scenario::parse_toml(&text).with_context(|| format!("in scenario {path}"))?
            }
        };
        if let Some(d) = self.duration {
            s.duration = d;
        }
        Ok(s)
    }
}

/// Errors that are the caller's fault map to exit code 1.
struct InputError(anyhow::Error);

impl<E: Into<anyhow::Error>> From<E> for InputError {
    fn from(e: E) -> Self {
        InputError(e.into())
    }
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig> {
    PipelineConfig::load(path).with_context(|| match path {
        Some(p) => format!("in configuration {}", p.display()),
        None => "in configuration environment".to_string(),
    })
}

fn write_run(out: &Path, run: &RunOutput) -> Result<()> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    fs::write(out.join("report.json"), run.report.to_json()? + "\n")?;
    fs::write(out.join("stats.csv"), run.report.stats_csv())?;
    let mut w = BufWriter::new(File::create(out.join("traces.jsonl"))?);
    for t in &run.traces {
        serde_json::to_writer(&mut w, t)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

fn traces_stats(path: &Path, period: f64) -> Result<String> {
    let reader = BufReader::new(File::open(path).with_context(|| format!("opening {}", path.display()))?);
    let mut est: BTreeMap<(&str, u32), Vec<(f64, (f64, f64))>> = BTreeMap::new();
    let mut truth: BTreeMap<u32, Vec<(f64, (f64, f64))>> = BTreeMap::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let trace: FrameTrace = serde_json::from_str(&line).with_context(|| format!("{}:{}", path.display(), n + 1))?;
        for tg in &trace.targets {
            truth.entry(tg.id).or_default().push((trace.t, (tg.vx, tg.vy)));
        }
        for c in &trace.clusters {
            let Some(id) = c.target else { continue };
            for alg in ALGORITHMS {
                if let Some(v) = c.estimate(alg) {
                    est.entry((alg, id)).or_default().push((trace.t, v));
                }
            }
        }
    }
    let mut csv = String::from("schema_version,algorithm,target,mean,median,variance,samples\n");
    for ((alg, id), series) in &est {
        let Some(tr) = truth.get(id) else { continue };
        if let Ok(s) = speed_error_stats(series, tr, period) {
            csv.push_str(&format!("{REPORT_SCHEMA_VERSION},{alg},{id},{},{},{},{}\n", s.mean, s.median, s.variance, s.samples));
        }
    }
    Ok(csv)
}

fn execute(cli: Cli) -> std::result::Result<ExitCode, InputError> {
    match cli.command {
        Command::Simulate { scene, seed, out } => {
            let s = scene.load()?;
            s.validate()?;
            let rec = Recording {
                label: serde_json::to_value(s.label)?.as_str().unwrap_or("custom").to_string(),
                seed,
                frame_rate: s.sensor.frame_rate,
                mounts: s.mounts.clone(),
                frames: generate(&s, seed).collect(),
            };
            let mut w = output(out.as_deref())?;
            write_recording(&mut w, &rec)?;
            w.flush()?;
        }
        Command::Run { scene, frames, config, seed, out, flow, timing } => {
            let cfg = load_config(config.as_deref())?;
            let flow_path = flow.or_else(|| cfg.flow_file.as_ref().map(PathBuf::from));
            let field = match &flow_path {
                Some(p) => FlowField::load(p).with_context(|| format!("in flow file {}", p.display()))?,
                None => FlowField::undefined(),
            };
            let opts = RunOptions { record_timing: timing, ..RunOptions::default() };
            let run = match frames {
                Some(path) => {
                    let f = File::open(&path).with_context(|| format!("opening {}", path.display()))?;
                    let rec = read_recording(BufReader::new(f)).with_context(|| format!("in {}", path.display()))?;
                    run_frames(rec.frames, &rec.label, rec.mounts, &cfg, field, seed, 1.0 / rec.frame_rate, &opts)?
                }
                None => run_scenario(&scene.load()?, &cfg, field, seed, &opts)?,
            };
            write_run(&out, &run)?;
            log::info!("wrote {} frames to {}", run.report.frames, out.display());
            if run.report.exceeds_degeneracy() {
                eprintln!(
                    "error: {:.1}% of clusters had no velocity estimate (limit {:.1}%)",
                    100.0 * run.report.degenerate_fraction,
                    100.0 * cfg.max_degenerate_fraction
                );
                return Ok(ExitCode::from(2));
            }
        }
        Command::Bench { config, objects, frames, seed, out } => {
            let cfg = load_config(config.as_deref())?;
            if objects.is_empty() || frames == 0 {
                return Err(anyhow::anyhow!("need at least one object count and one frame").into());
            }
            let rows = bench(&cfg, &objects, frames, seed)?;
            let mut w = output(out.as_deref())?;
            w.write_all(bench_csv(&rows).as_bytes())?;
            w.flush()?;
        }
        Command::Stats { traces, period, out } => {
            if !(period > 0.0) {
                return Err(anyhow::anyhow!("--period must be positive").into());
            }
            let csv = traces_stats(&traces, period)?;
            let mut w = output(out.as_deref())?;
            w.write_all(csv.as_bytes())?;
            w.flush()?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(code) => code,
        Err(InputError(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
