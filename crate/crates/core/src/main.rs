use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use freqcache::harness::bench::{bench, BenchSpec};
use freqcache::harness::compare::compare_domains;
use freqcache::harness::config::{resolve, Overrides, RunConfig};
use freqcache::harness::export::{
    export_masks, read_jsonl, records, write_jsonl, write_metrics_csv,
};
use freqcache::harness::io::{encode_rawf32, load_frames, FrameFormat};
use freqcache::harness::manifest::{manifest_path, RunManifest};
use freqcache::harness::scene::{generate_scene, Scene, SceneKind, SceneSpec};
use freqcache::{run_sequence, HistogramTokenizer};

#[derive(Parser)]
#[command(
    name = "freqcache",
    version,
    about = "Frequency-guided token cache decisions for frame sequences"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct GlobalArgs {
    #[arg(long, global = true)]
    patch_size: Option<usize>,
    #[arg(long, global = true)]
    tau_mig: Option<f64>,
    #[arg(long, global = true)]
    lambda: Option<f64>,
    #[arg(long, global = true)]
    alpha_min: Option<f64>,
    #[arg(long, global = true)]
    alpha_max: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// key = value file; flags win over it.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scene as rawf32.
    Synth {
        #[command(flatten)]
        scene: SceneArgs,
        #[arg(short, long)]
        out: PathBuf,
        /// Also write per-frame edge patch labels as JSON.
        #[arg(long)]
        labels: Option<PathBuf>,
    },
    /// Run the pipeline and write decisions.jsonl and metrics.csv.
    Analyze {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        out_dir: PathBuf,
        /// Record per-stage wall-clock timings in the JSONL.
        #[arg(long)]
        timings: bool,
    },
    /// Render decisions.jsonl to per-step PGM reuse masks.
    Masks {
        #[arg(short, long)]
        input: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Compare the pipeline with the visual and naive-frequency baselines.
    Compare {
        #[command(flatten)]
        input: OptionalInput,
        #[arg(long)]
        labels: Option<PathBuf>,
        #[arg(long)]
        tau_v: Option<f64>,
        #[arg(long)]
        tau_f: Option<f64>,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
    /// Time one decide call per iteration.
    Bench {
        #[arg(long, default_value_t = 224)]
        height: usize,
        #[arg(long, default_value_t = 224)]
        width: usize,
        #[arg(long, default_value_t = 100)]
        iterations: usize,
        #[arg(long, default_value_t = 3)]
        warmup: usize,
        /// Restrict decide to one worker thread.
        #[arg(long)]
        single_thread: bool,
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct InputArgs {
    #[arg(short, long)]
    input: PathBuf,
    /// pgm or rawf32; inferred from the extension when omitted.
    #[arg(long)]
    format: Option<FrameFormat>,
}

#[derive(Args)]
struct OptionalInput {
    #[arg(short, long, conflicts_with = "scene")]
    input: Option<PathBuf>,
    #[arg(long)]
    format: Option<FrameFormat>,
    /// Generate the frames instead of reading them.
    #[arg(long, value_name = "KIND")]
    scene: Option<SceneKind>,
    #[command(flatten)]
    shape: SceneShape,
}

#[derive(Args)]
struct SceneArgs {
    #[arg(long)]
    kind: SceneKind,
    #[command(flatten)]
    shape: SceneShape,
}

#[derive(Args, Clone)]
struct SceneShape {
    #[arg(long, default_value_t = 224)]
    height: usize,
    #[arg(long, default_value_t = 224)]
    width: usize,
    #[arg(long, default_value_t = 16)]
    length: usize,
    /// Per-step shift as `rows,cols`.
    #[arg(long, value_parser = parse_pair)]
    shift: Option<(i64, i64)>,
    #[arg(long)]
    edges: Option<usize>,
    #[arg(long)]
    noise: Option<f64>,
    #[arg(long)]
    gradient: Option<f64>,
    #[arg(long)]
    contrast: Option<f64>,
}

fn parse_pair(s: &str) -> std::result::Result<(i64, i64), String> {
    let (a, b) = s.split_once(',').ok_or("expected `rows,cols`")?;
    Ok((
        a.trim().parse().map_err(|e| format!("{e}"))?,
        b.trim().parse().map_err(|e| format!("{e}"))?,
    ))
}

impl SceneShape {
    fn spec(&self, kind: SceneKind, cfg: &RunConfig) -> SceneSpec {
        let mut s = SceneSpec::new(kind, self.height, self.width, self.length, cfg.seed);
        s.patch_size = cfg.cache.patch_size;
        if let Some(v) = self.shift {
            s.shift = v;
        }
        if let Some(v) = self.edges {
            s.edge_count = v;
        }
        if let Some(v) = self.noise {
            s.noise_amplitude = v;
        }
        if let Some(v) = self.gradient {
            s.gradient_range = v;
        }
        if let Some(v) = self.contrast {
            s.edge_contrast = v;
        }
        s
    }
}

fn run_config(global: &GlobalArgs, extra: Overrides) -> Result<RunConfig> {
    let file = match &global.config {
        Some(p) => {
            Some(fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?)
        }
        None => None,
    };
    let flags = Overrides {
        patch_size: global.patch_size,
        tau_mig: global.tau_mig,
        lambda: global.lambda,
        alpha_min: global.alpha_min,
        alpha_max: global.alpha_max,
        seed: global.seed,
        ..extra
    };
    Ok(resolve(file.as_deref(), &flags)?)
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    Ok(BufWriter::new(
        fs::File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn finish(mut manifest: RunManifest, started: Instant, path: PathBuf) -> Result<()> {
    manifest.wall_clock_ms = started.elapsed().as_secs_f64() * 1000.0;
    manifest.write(&path)?;
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let started = Instant::now();
    match cli.command {
        Command::Synth { scene, out, labels } => {
            let cfg = run_config(&cli.global, Overrides::default())?;
            let spec = scene.shape.spec(scene.kind, &cfg);
            let generated = generate_scene(&spec)?;
            fs::write(&out, encode_rawf32(&generated.frames)?)
                .with_context(|| format!("writing {}", out.display()))?;
            let mut manifest = RunManifest::new(
                "synth",
                cfg,
                format!("scene:{}", serde_json::to_string(&spec)?),
            );
            manifest.add_output(&out);
            if let Some(path) = labels {
                write_json(&path, &generated.edge_labels)?;
                manifest.add_output(&path);
            }
            finish(manifest, started, manifest_path(&out, false))?;
        }
        Command::Analyze {
            input,
            out_dir,
            timings,
        } => {
            let cfg = run_config(&cli.global, Overrides::default())?;
            let frames = load_frames(&input.input, input.format)
                .with_context(|| format!("loading {}", input.input.display()))?;
            let report = run_sequence(
                &frames,
                &cfg.cache,
                Box::new(HistogramTokenizer::default()),
                None,
            )?;
            fs::create_dir_all(&out_dir)?;
            let jsonl = out_dir.join("decisions.jsonl");
            let mut w = create(&jsonl)?;
            write_jsonl(&mut w, &records(&report, timings))?;
            w.flush()?;
            let csv = out_dir.join("metrics.csv");
            let mut w = create(&csv)?;
            write_metrics_csv(&mut w, &report)?;
            w.flush()?;
            let mut manifest = RunManifest::new("analyze", cfg, input.input.display().to_string());
            manifest.add_output(&jsonl);
            manifest.add_output(&csv);
            finish(manifest, started, manifest_path(&out_dir, true))?;
            println!(
                "steps={} mean_reuse_ratio={:.4} mean_latency_ms={:.1} speedup={:.3}",
                report.decided_steps(),
                report.mean_reuse_ratio,
                report.mean_latency_ms,
                report.speedup
            );
        }
        Command::Masks { input, out_dir } => {
            let cfg = run_config(&cli.global, Overrides::default())?;
            let file =
                fs::File::open(&input).with_context(|| format!("opening {}", input.display()))?;
            let recs = read_jsonl(BufReader::new(file))?;
            let written = export_masks(&recs, &out_dir)?;
            let mut manifest = RunManifest::new("masks", cfg, input.display().to_string());
            for p in &written {
                manifest.add_output(p);
            }
            finish(manifest, started, manifest_path(&out_dir, true))?;
        }
        Command::Compare {
            input,
            labels,
            tau_v,
            tau_f,
            out,
        } => {
            let cfg = run_config(
                &cli.global,
                Overrides {
                    tau_v,
                    tau_f,
                    ..Default::default()
                },
            )?;
            let (frames, mut edge_labels, source) = match (&input.input, input.scene) {
                (Some(path), _) => (
                    load_frames(path, input.format)
                        .with_context(|| format!("loading {}", path.display()))?,
                    None,
                    path.display().to_string(),
                ),
                (None, Some(kind)) => {
                    let spec = input.shape.spec(kind, &cfg);
                    let Scene {
                        frames,
                        edge_labels,
                        ..
                    } = generate_scene(&spec)?;
                    let labelled = kind == SceneKind::EdgeInject;
                    (
                        frames,
                        labelled.then_some(edge_labels),
                        format!("scene:{}", serde_json::to_string(&spec)?),
                    )
                }
                (None, None) => bail!("compare needs --input or --scene"),
            };
            if let Some(path) = labels {
                let text = fs::read_to_string(&path)
                    .with_context(|| format!("reading {}", path.display()))?;
                edge_labels = Some(serde_json::from_str(&text).context("parsing edge labels")?);
            }
            let report = compare_domains(&frames, edge_labels.as_deref(), &cfg)?;
            let mut manifest = RunManifest::new("compare", cfg, source);
            match out {
                Some(path) => {
                    write_json(&path, &report)?;
                    manifest.add_output(&path);
                    finish(manifest, started, manifest_path(&path, false))?;
                }
                None => println!("{}", serde_json::to_string_pretty(&report)?),
            }
        }
        Command::Bench {
            height,
            width,
            iterations,
            warmup,
            single_thread,
            out,
        } => {
            let cfg = run_config(&cli.global, Overrides::default())?;
            let spec = BenchSpec {
                height,
                width,
                iterations,
                warmup,
                seed: cfg.seed,
                threads: single_thread.then_some(1),
            };
            let report = bench(&cfg.cache, &spec)?;
            let mut manifest =
                RunManifest::new("bench", cfg, format!("synthetic {height}x{width}"));
            match out {
                Some(path) => {
                    write_json(&path, &report)?;
                    manifest.add_output(&path);
                    finish(manifest, started, manifest_path(&path, false))?;
                }
                None => println!("{}", serde_json::to_string_pretty(&report)?),
            }
        }
    }
    Ok(())
}
