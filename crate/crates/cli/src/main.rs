use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lmap::io::{load_mesh, load_roi, write_mesh, write_roi, MeshFormat};
use lmap::{run_extrinsic_flow, geodesic_ball, DistortionReport, Error, MeshStats, Result, RunConfig, RunReport};

/// Local conformal flattening of mesh regions.
#[derive(Parser)]
#[command(name = "lmap", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print vertex/edge/face counts, Euler characteristic and curvature.
    Analyze { mesh: PathBuf },
    /// Write the vertices within a graph-geodesic ball to an ROI file.
    Select {
        mesh: PathBuf,
        #[arg(long)]
        seed: usize,
        #[arg(long, allow_negative_numbers = true)]
        radius: f64,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Flatten a region of interest.
    Flatten(FlattenArgs),
}

#[derive(Args)]
struct FlattenArgs {
    mesh: PathBuf,
    /// ROI file with one 0-based vertex index per line.
    #[arg(long, conflicts_with_all = ["seed", "radius"], required_unless_present = "seed")]
    roi: Option<PathBuf>,
    #[arg(long, requires = "radius")]
    seed: Option<usize>,
    #[arg(long, requires = "seed", allow_negative_numbers = true)]
    radius: Option<f64>,
    #[arg(long, default_value_t = RunConfig::default().steps)]
    steps: usize,
    #[arg(long, default_value_t = RunConfig::default().epsilon)]
    epsilon: f64,
    #[arg(long, default_value_t = RunConfig::default().max_newton)]
    max_newton: usize,
    #[arg(long, default_value_t = RunConfig::default().max_gd)]
    max_gd: usize,
    /// Keep ROI rim vertices fixed.
    #[arg(long)]
    pin_rim: bool,
    /// Leave wall-clock timings out of the report.
    #[arg(long)]
    no_timing: bool,
    /// Deformed mesh, written in the input mesh's format.
    #[arg(short, long)]
    output: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
    /// Distortion report; `.csv` writes the histograms only.
    #[arg(long)]
    distortion: Option<PathBuf>,
}

fn write_file(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    f(&mut w)?;
    w.flush()?;
    Ok(())
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    write_file(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)
    })
}

fn mesh_format(path: &Path) -> Result<MeshFormat> {
    MeshFormat::from_path(path)
        .ok_or_else(|| Error::InvalidConfig(format!("unknown mesh extension for {}", path.display())))
}

fn analyze(mesh: &Path) -> Result<()> {
    let stats = MeshStats::new(&load_mesh(mesh)?)?;
    let mut out = std::io::stdout().lock();
    serde_json::to_writer_pretty(&mut out, &stats).map_err(std::io::Error::from)?;
    writeln!(out)?;
    Ok(())
}

fn select(mesh: &Path, seed: usize, radius: f64, output: &Path) -> Result<()> {
    let ball = geodesic_ball(&load_mesh(mesh)?, seed, radius)?;
    write_file(output, |w| write_roi(&ball, w))
}

fn distortion_csv(report: &DistortionReport, w: &mut impl Write) -> std::io::Result<()> {
    writeln!(w, "metric,edge_lo,edge_hi,count")?;
    for (name, hist) in [("area", &report.area_hist), ("angle", &report.angle_hist)] {
        for (i, count) in hist.counts.iter().enumerate() {
            writeln!(w, "{name},{},{},{count}", hist.edges[i], hist.edges[i + 1])?;
        }
    }
    Ok(())
}

fn flatten(args: &FlattenArgs) -> Result<()> {
    let format = mesh_format(&args.mesh)?;
    let config = RunConfig {
        steps: args.steps,
        epsilon: args.epsilon,
        max_newton: args.max_newton,
        max_gd: args.max_gd,
        pin_rim: args.pin_rim,
        seed: args.seed,
        radius: args.radius,
    };
    config.validate()?;
    let mesh = load_mesh(&args.mesh)?;
    let roi = match (&args.roi, config.ball(&mesh)?) {
        (Some(path), _) => load_roi(path, &mesh)?,
        (None, Some(ball)) => ball,
        (None, None) => return Err(Error::InvalidConfig("give --roi or --seed with --radius".into())),
    };
    let result = run_extrinsic_flow(&mesh, &roi, config.extrinsic())?;

    write_file(&args.output, |w| write_mesh(&result.mesh, w, format))?;
    if let Some(path) = &args.report {
        write_json(path, &RunReport::new(config, &result, !args.no_timing)?)?;
    }
    if let Some(path) = &args.distortion {
        let report = DistortionReport::for_roi(&result.original, &result.mesh, &result.roi)?;
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
            write_file(path, |w| distortion_csv(&report, w))?;
        } else {
            write_json(path, &report)?;
        }
    }
    Ok(())
}

fn configure_threads() -> Result<()> {
    let Ok(value) = std::env::var("LMAP_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::InvalidConfig(format!("LMAP_THREADS must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::InvalidConfig(e.to_string()))
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Analyze { mesh } => analyze(&mesh),
        Command::Select { mesh, seed, radius, output } => select(&mesh, seed, radius, &output),
        Command::Flatten(args) => flatten(&args),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // clap's own usage failures exit with 2, which is reserved for io
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lmap: {e}");
            ExitCode::from(e.class().exit_code() as u8)
        }
    }
}
