use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rpga::commands::{self, AttackOptions};
use rpga::run_config::Mode;
use rpga::scene_file::{self, SceneFile};
use rpga::{demo, verify, Error};

#[derive(Parser)]
#[command(name = "rpga", version, about = "Adversarial camouflage on Gaussian splat scenes")]
struct Cli {
    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render one configuration, write the composited frame and print its detection loss.
    Render {
        #[arg(long)]
        scene: PathBuf,
        /// `pitch=..,azimuth=..,distance=..,env=..`
        #[arg(long)]
        config: String,
        #[arg(long)]
        out: PathBuf,
        /// Detector and quadrature settings; defaults if omitted.
        #[arg(long)]
        run_config: Option<PathBuf>,
    },
    /// Optimize the camouflage albedo.
    Attack {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        run_config: Option<PathBuf>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        /// Continue from this checkpoint.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Sweep every configuration cell and export the loss landscape.
    Landscape {
        #[arg(long)]
        scene: PathBuf,
        /// Checkpoint whose albedo replaces the scene's camouflage.
        #[arg(long)]
        albedo: Option<PathBuf>,
        #[arg(long)]
        run_config: Option<PathBuf>,
        /// Prefix for the CSV and PPM outputs.
        #[arg(long)]
        out: PathBuf,
        /// Binary heatmap: red at or above this loss, blue below.
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Run the built-in property checks.
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Write the 64x64 demo scene.
    Demo {
        /// Output scene file; assets are written next to it.
        #[arg(long)]
        out: PathBuf,
    },
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<(), Error> {
    let s = serde_json::to_string(value).map_err(|e| Error::Format(e.to_string()))?;
    println!("{s}");
    Ok(())
}

fn run(cli: Cli) -> Result<bool, Error> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Error::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Usage(format!("cannot start thread pool: {e}")))?;
    }
    match cli.command {
        Command::Render {
            scene,
            config,
            out,
            run_config,
        } => {
            let r = commands::render(&scene, &config, &out, run_config.as_deref())?;
            print_json(&r)?;
        }
        Command::Attack {
            scene,
            run_config,
            out,
            seed,
            mode,
            resume,
        } => {
            let r = commands::attack(&AttackOptions {
                scene,
                run_config,
                out,
                seed,
                mode,
                resume,
            })?;
            print_json(&r)?;
        }
        Command::Landscape {
            scene,
            albedo,
            run_config,
            out,
            threshold,
        } => {
            let r = commands::landscape(&scene, albedo.as_deref(), run_config.as_deref(), &out, threshold)?;
            print_json(&r)?;
        }
        Command::Verify { seed } => {
            let checks = verify::run_all(seed);
            for c in &checks {
                println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            return Ok(checks.iter().all(|c| c.passed));
        }
        Command::Demo { out } => {
            if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            scene_file::save_scene(&SceneFile::with_default_paths(demo::demo_scene()), &out)?;
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
