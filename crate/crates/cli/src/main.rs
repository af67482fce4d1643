use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use copkit_cli::{
    cmd_bound, cmd_check, cmd_graph, cmd_verify, parse_orders, Cone, HierarchyArg, OutputMode, RunConfig, EXIT_INPUT,
};

#[derive(Parser)]
#[command(name = "copkit", version, about = "Copositivity certificates and stable-set bounds")]
struct Cli {
    /// Emit one JSON object instead of a text report.
    #[arg(long, global = true)]
    json: bool,
    /// Seed for the SDP starting-point jitter (0 = no jitter).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for sweeps over orders.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Feasibility and gap tolerance of the SDP solver.
    #[arg(long, global = true, default_value_t = 1e-9)]
    sdp_tol: f64,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide membership of a matrix in an approximation cone.
    Check {
        /// Matrix file, `catalog:NAME` or a bare catalog name.
        matrix: String,
        /// One of c, spn, k1, k, q, las.
        #[arg(long)]
        cone: String,
        #[arg(long, short, default_value_t = 0)]
        r: u32,
        /// Where to write the certificate of a YES verdict.
        #[arg(long)]
        cert: Option<PathBuf>,
    },
    /// Hierarchy bounds on the stability number.
    Bound {
        /// Graph file or generator (cycle:N, path:N, complete:N, empty:N, petersen).
        graph: String,
        /// One of zeta, theta, lovasz.
        #[arg(long)]
        hierarchy: String,
        /// An order or an inclusive range such as 0..5.
        #[arg(long, short, default_value = "0")]
        r: String,
    },
    /// Stability number, critical edges and the zeros of the graph matrix.
    Graph { graph: String },
    /// Re-verify a certificate file against a matrix.
    Verify {
        certificate: PathBuf,
        /// Matrix file, `catalog:NAME` or a bare catalog name.
        #[arg(long)]
        matrix: String,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_INPUT as u8) } else { ExitCode::SUCCESS };
        }
    };
    let mut out = io::stdout().lock();
    let code = run(cli, &mut out);
    ExitCode::from(u8::try_from(code).unwrap_or(u8::MAX))
}

fn run(cli: Cli, out: &mut dyn io::Write) -> i32 {
    let mut cfg = match RunConfig::from_env() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    };
    cfg.seed = cli.seed;
    cfg.sdp_tol = cli.sdp_tol;
    cfg.output = if cli.json { OutputMode::Json } else { OutputMode::Text };
    if let Err(e) = cfg.validate() {
        eprintln!("error: {e}");
        return EXIT_INPUT;
    }
    if let Some(j) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global() {
            eprintln!("error: {e}");
            return EXIT_INPUT;
        }
    }
    let input_error = |e: copkit::Error| {
        eprintln!("error: {e}");
        EXIT_INPUT
    };
    match cli.cmd {
        Command::Check { matrix, cone, r, cert } => match Cone::parse(&cone) {
            Ok(c) => cmd_check(&matrix, c, r, cert.as_deref(), &cfg, out),
            Err(e) => input_error(e),
        },
        Command::Bound { graph, hierarchy, r } => match (HierarchyArg::parse(&hierarchy), parse_orders(&r)) {
            (Ok(h), Ok(orders)) => cmd_bound(&graph, h, &orders, &cfg, out),
            (Err(e), _) | (_, Err(e)) => input_error(e),
        },
        Command::Graph { graph } => cmd_graph(&graph, &cfg, out),
        Command::Verify { certificate, matrix } => cmd_verify(&certificate, &matrix, &cfg, out),
    }
}
