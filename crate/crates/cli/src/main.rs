use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mmtrace::{pipeline, Error, Scenario, StrokeShape};

/// Passive mmWave handwriting tracking: simulate recordings, detect
/// Doppler, reconstruct and score the trajectory.
#[derive(Parser)]
#[command(name = "mmtrace", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the four IQ recordings and the ground-truth track.
    Simulate(Opts),
    /// Clutter cancellation, CAF spectrograms and Doppler tracks.
    Detect(Opts),
    /// Fuse both Doppler tracks into a trajectory.
    Track(Opts),
    /// Score the trajectory against the ground truth.
    Evaluate(Opts),
    /// simulate, detect, track and evaluate in one go.
    Pipeline(Opts),
}

#[derive(Args)]
struct Opts {
    /// `los`, `nlos`, or a scenario JSON file.
    #[arg(long, default_value = "los")]
    scenario: String,
    /// Stroke shape: digit3, star or line.
    #[arg(long)]
    stroke: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Run directory holding every artifact.
    #[arg(long, default_value = "mmtrace-out")]
    out: PathBuf,
    /// Detection threshold factor γ.
    #[arg(long)]
    gamma: Option<f64>,
    /// Training cells on each side of the cell under test.
    #[arg(long)]
    train_cells: Option<usize>,
    #[arg(long)]
    clutter_taps: Option<usize>,
    /// Edge of the Doppler search grid, Hz.
    #[arg(long)]
    doppler_max: Option<f64>,
    /// Error added to both initial bearings, degrees.
    #[arg(long, allow_negative_numbers = true)]
    aoa_error_deg: Option<f64>,
    /// Sample rate, Hz.
    #[arg(long)]
    fs: Option<f64>,
}

impl Opts {
    fn scenario(&self) -> mmtrace::Result<Scenario> {
        let mut s = Scenario::resolve(&self.scenario)?;
        if let Some(name) = &self.stroke {
            s.stroke.shape = StrokeShape::from_name(name)
                .ok_or_else(|| Error::Config(format!("unknown stroke `{name}` (digit3, star, line)")))?;
        }
        if let Some(v) = self.seed {
            s.seed = v;
        }
        if let Some(v) = self.gamma {
            s.sensing.gamma = v;
        }
        if let Some(v) = self.train_cells {
            s.sensing.half_train_cells = v;
        }
        if let Some(v) = self.clutter_taps {
            s.clutter.num_taps = v;
        }
        if let Some(v) = self.doppler_max {
            s.sensing.doppler_max_hz = v;
        }
        if let Some(v) = self.aoa_error_deg {
            s.aoa_error_deg = v;
        }
        if let Some(v) = self.fs {
            s.sample_rate_hz = v;
        }
        s.validate()?;
        Ok(s)
    }
}

fn report(stats: &mmtrace::ErrorStats) {
    println!(
        "median error {:.3} mm, p90 {:.3} mm over {} points",
        stats.median_m * 1e3,
        stats.p90_m * 1e3,
        stats.per_point_errors_m.len()
    );
}

fn run(cmd: Command) -> mmtrace::Result<()> {
    match cmd {
        Command::Simulate(o) => {
            let s = o.scenario()?;
            for p in pipeline::simulate(&s, &o.out)? {
                println!("wrote {}", p.display());
            }
        }
        Command::Detect(o) => {
            let s = o.scenario()?;
            for (i, t) in pipeline::detect(&s, &o.out)?.iter().enumerate() {
                let hits = t.doppler_hz.iter().flatten().count();
                println!("rx{}: {hits} of {} instants detected", i + 1, t.len());
            }
        }
        Command::Track(o) => {
            let s = o.scenario()?;
            let traj = pipeline::track(&s, &o.out)?;
            if traj.initial_behind_receiver {
                eprintln!("warning: initial fix lies behind a receiver");
            }
            println!("wrote {} ({} points)", o.out.join(pipeline::TRAJECTORY_FILE).display(), traj.len());
        }
        Command::Evaluate(o) => report(&pipeline::evaluate(&o.out)?),
        Command::Pipeline(o) => {
            let s = o.scenario()?;
            report(&pipeline::run_all(&s, &o.out)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
