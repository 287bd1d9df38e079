//! `mocomp`: batch front end to the motion comparison engine.
//!
//! Exit status: 0 on success, 1 when the engine rejects the input, 2 on
//! usage errors (bad flags, unreadable files).

mod commands;
mod table;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mocomp_core::embed::EmbeddingMethod;
use mocomp_core::fixtures::FixtureCase;
use mocomp_core::warp::CostTerm;
use mocomp_service::api::{Axis, Quantity, TraceKind};

#[derive(Parser, Debug)]
#[command(name = "mocomp", version, about = "Compare recorded robot motions")]
struct Cli {
    #[command(flatten)]
    output: Output,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
pub struct Output {
    /// Write the JSON result (same body as the HTTP API) to FILE, or `-` for stdout.
    #[arg(long, global = true, value_name = "FILE")]
    pub json: Option<PathBuf>,
    /// Write a CSV export of the result to FILE, or `-` for stdout.
    #[arg(long, global = true, value_name = "FILE")]
    pub csv: Option<PathBuf>,
}

/// Robot for CSV motion files.
#[derive(Args, Debug, Clone, Default)]
pub struct RobotArgs {
    /// URDF of the robot (needed for CSV motions).
    #[arg(long, value_name = "URDF")]
    pub robot: Option<PathBuf>,
    /// End-effector link for CSV motions.
    #[arg(long, value_name = "LINK")]
    pub ee_link: Option<String>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum CostArg {
    #[value(name = "joint_l2", alias = "joint-l2")]
    JointL2,
    Ee,
    Quat,
}

impl From<CostArg> for CostTerm {
    fn from(c: CostArg) -> Self {
        match c {
            CostArg::JointL2 => CostTerm::JointL2,
            CostArg::Ee => CostTerm::EePosition,
            CostArg::Quat => CostTerm::QuaternionGeodesic,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum AlignmentArg {
    Dtw,
    Resampled,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum QuantityArg {
    Joint,
    #[value(name = "ee_pos", alias = "ee-pos")]
    EePos,
    #[value(name = "ee_speed", alias = "ee-speed")]
    EeSpeed,
}

impl From<QuantityArg> for Quantity {
    fn from(q: QuantityArg) -> Self {
        match q {
            QuantityArg::Joint => Quantity::Joint,
            QuantityArg::EePos => Quantity::EePos,
            QuantityArg::EeSpeed => Quantity::EeSpeed,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum AxisArg {
    X,
    Y,
    Z,
}

impl From<AxisArg> for Axis {
    fn from(a: AxisArg) -> Self {
        match a {
            AxisArg::X => Axis::X,
            AxisArg::Y => Axis::Y,
            AxisArg::Z => Axis::Z,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum KindArg {
    Position,
    Quaternion,
}

impl From<KindArg> for TraceKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Position => TraceKind::Position,
            KindArg::Quaternion => TraceKind::Quaternion,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Umap,
    Pca,
}

impl From<MethodArg> for EmbeddingMethod {
    fn from(m: MethodArg) -> Self {
        match m {
            MethodArg::Umap => EmbeddingMethod::Umap,
            MethodArg::Pca => EmbeddingMethod::Pca,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum CaseArg {
    A,
    B,
    C,
    D,
    All,
}

impl CaseArg {
    pub fn cases(self) -> Vec<FixtureCase> {
        match self {
            CaseArg::A => vec![FixtureCase::A],
            CaseArg::B => vec![FixtureCase::B],
            CaseArg::C => vec![FixtureCase::C],
            CaseArg::D => vec![FixtureCase::D],
            CaseArg::All => FixtureCase::ALL.to_vec(),
        }
    }
}

/// Which series to take from each motion.
#[derive(Args, Debug, Clone)]
pub struct SeriesArgs {
    #[arg(long, value_enum)]
    pub quantity: QuantityArg,
    /// Actuated-joint index (for `--quantity joint`).
    #[arg(long)]
    pub joint: Option<usize>,
    /// Cartesian component (for `--quantity ee_pos`).
    #[arg(long, value_enum)]
    pub axis: Option<AxisArg>,
    /// Link or object track (`link:NAME`, `track:NAME` or `NAME`); defaults to the end effector.
    #[arg(long)]
    pub frame: Option<String>,
    /// Derivative order, 0 to 3.
    #[arg(long, default_value_t = 0)]
    pub deriv: usize,
    /// Smoothing before differentiation: `ma:<odd window>` or `ema:<alpha>`.
    #[arg(long)]
    pub smooth: Option<String>,
}

#[derive(Subcommand, Debug)]
pub enum FixtureCommand {
    /// Write the synthetic fixture motions of a case as motion JSON files.
    Gen {
        #[arg(value_enum, ignore_case = true)]
        case: CaseArg,
        #[arg(long, value_name = "DIR")]
        out: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Validate a motion file and print its summary.
    Ingest {
        file: PathBuf,
        #[command(flatten)]
        robot: RobotArgs,
        /// Motion name for CSV input.
        #[arg(long)]
        name: Option<String>,
        /// Write the canonical motion JSON here.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Time-align two motions with dynamic time warping.
    Align {
        a: PathBuf,
        b: PathBuf,
        #[arg(long, value_enum, default_value = "joint_l2")]
        cost: CostArg,
        /// Sakoe-Chiba band radius, samples.
        #[arg(long)]
        window: Option<usize>,
        #[command(flatten)]
        robot: RobotArgs,
    },
    /// Difference `a − b` of one series taken from two motions.
    Diff {
        a: PathBuf,
        b: PathBuf,
        #[command(flatten)]
        series: SeriesArgs,
        #[arg(long, value_enum, default_value = "dtw")]
        alignment: AlignmentArg,
        /// Local cost for DTW alignment.
        #[arg(long, value_enum, default_value = "joint_l2")]
        cost: CostArg,
        #[arg(long)]
        window: Option<usize>,
        #[command(flatten)]
        robot: RobotArgs,
    },
    /// One series of a motion.
    Series {
        motion: PathBuf,
        #[command(flatten)]
        series: SeriesArgs,
        #[command(flatten)]
        robot: RobotArgs,
    },
    /// Position or quaternion trace of a link or object track.
    Trace {
        motion: PathBuf,
        #[arg(long, value_enum, default_value = "position")]
        kind: KindArg,
        #[arg(long)]
        frame: Option<String>,
        /// Seconds between direction cones (position traces).
        #[arg(long)]
        stride: Option<f64>,
        #[command(flatten)]
        robot: RobotArgs,
    },
    /// Embed the joint states of several motions into 2D.
    Embed {
        #[arg(required = true)]
        motions: Vec<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "umap")]
        method: MethodArg,
        #[arg(long)]
        neighbors: Option<usize>,
        #[arg(long)]
        min_dist: Option<f64>,
        #[arg(long)]
        epochs: Option<usize>,
        #[command(flatten)]
        robot: RobotArgs,
    },
    /// Duration, end-effector path length, jerk and tracking error.
    Metrics {
        motion: PathBuf,
        /// Frame the end effector should follow, e.g. `track:operator`.
        #[arg(long)]
        reference: Option<String>,
        #[command(flatten)]
        robot: RobotArgs,
    },
    /// Spans during which joints rest on a position limit.
    Limits {
        motion: PathBuf,
        #[arg(long)]
        margin: Option<f64>,
        #[command(flatten)]
        robot: RobotArgs,
    },
    /// Synthetic test motions.
    Fixtures {
        #[command(subcommand)]
        command: FixtureCommand,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, env = "MOCOMP_ADDR", default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        /// Directory mirroring uploaded motions and saved sessions.
        #[arg(long, env = "MOCOMP_DATA_DIR")]
        data_dir: Option<PathBuf>,
        /// Largest accepted request body, bytes.
        #[arg(long, env = "MOCOMP_MAX_UPLOAD", default_value_t = 64 * 1024 * 1024)]
        max_upload: usize,
        /// Seed for embed requests without one.
        #[arg(long, env = "MOCOMP_DEFAULT_SEED", default_value_t = 0)]
        default_seed: u64,
        /// Static web UI bundle to serve at `/`.
        #[arg(long, env = "MOCOMP_UI_DIR")]
        ui_dir: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli.command, &cli.output) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
