use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lgsim_core::driver::{self, ExperimentResult};
use lgsim_core::harness::{Sign, STANDARD_CONTEXTS};
use lgsim_core::oracle::OracleReport;
use lgsim_core::stats::Summary;
use lgsim_core::{ConfigError, DrawMode, Error, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "lgsim", version, about = "Classical wave-model Monte Carlo of heralded Leggett-Garg interferometry")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the nine-context experiment and write summary.json and counts.csv.
    Run(ConfigArgs),
    /// Sweep K and W over the r and gamma grids and write sweep.csv.
    Sweep(ConfigArgs),
    /// Print the quantum predictions for the configured optics.
    Oracle {
        #[command(flatten)]
        config: ConfigArgs,
        /// Print JSON instead of a table.
        #[arg(long)]
        json: bool,
    },
    /// List the standard measurement contexts.
    Contexts,
}

#[derive(Args, Debug, Default)]
struct ConfigArgs {
    /// Flat JSON config file; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, allow_negative_numbers = true)]
    r: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    gamma: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    t1: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    t2: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    t3: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    theta1: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    theta2: Option<f64>,
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long)]
    reps: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// independent | shared
    #[arg(long)]
    mode: Option<String>,
    /// Comma-separated squeezing values for `sweep`.
    #[arg(long, value_delimiter = ',')]
    r_grid: Option<Vec<f64>>,
    /// Comma-separated thresholds for `sweep`.
    #[arg(long, value_delimiter = ',')]
    gamma_grid: Option<Vec<f64>>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, env = "LGSIM_THREADS")]
    threads: Option<usize>,
}

impl ConfigArgs {
    fn resolve(self) -> Result<RunConfig, Error> {
        let mut c = match &self.config {
            Some(path) => RunConfig::from_file(path)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($field:ident),*) => { $( if let Some(v) = self.$field { c.$field = v; } )* };
        }
        set!(r, gamma, t1, t2, t3, theta1, theta2, samples, reps, seed, r_grid, gamma_grid, out);
        if let Some(m) = &self.mode {
            c.mode = m.parse::<DrawMode>()?;
        }
        if let Some(t) = self.threads {
            if t == 0 {
                return Err(ConfigError::Threads.into());
            }
            c.threads = Some(t);
        }
        Ok(c)
    }
}

fn pm(s: &Summary) -> String {
    format!("{:.4} ± {:.4} (sd), ± {:.4} (se)", s.mean, s.std, s.sem)
}

fn print_run(res: &ExperimentResult) {
    let st = &res.statistics;
    println!("K          = {}", pm(&st.k));
    println!("W          = {}", pm(&st.w));
    println!("K_marginal = {}", pm(&st.k_marginal));
    println!("W_marginal = {}", pm(&st.w_marginal));
    let b = &res.efficiency_bounds;
    println!(
        "sum N/N1   : t3 {:.4}  t1t3 {:.4}  t2t3 {:.4}  t1t2t3 {:.4}",
        b.t3.mean, b.t1t3.mean, b.t2t3.mean, b.t1t2t3.mean
    );
    if let Some(cf) = &res.counterfactual {
        println!(
            "eta (union): t3 {:.4}  t1t3 {:.4}  t2t3 {:.4}  t1t2t3 {:.4}",
            cf.eta_t3.mean, cf.eta_t1t3.mean, cf.eta_t2t3.mean, cf.eta_t1t2t3.mean
        );
    }
    for (bits, d) in &res.double_detection {
        println!("delta({bits}) = {:.3e}", d.mean);
    }
}

fn print_oracle(o: &OracleReport) {
    let sign = |i: usize| if i == 0 { Sign::Plus.symbol() } else { Sign::Minus.symbol() };
    println!("P_t1t3 and P_t2t3:");
    for i in 0..2 {
        for j in 0..2 {
            println!(
                "  ({},{})  {:.6}  {:.6}",
                sign(i),
                sign(j),
                o.p13.p[i][j],
                o.p23.p[i][j]
            );
        }
    }
    println!("P_t1t2t3:");
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                println!("  ({},{},{})  {:.6}", sign(i), sign(j), sign(k), o.p123.p[i][j][k]);
            }
        }
    }
    println!("C12 = {:.6}  C23 = {:.6}  C13 = {:.6}", o.c12, o.c23, o.c13);
    println!("K = {:.12}", o.k);
    println!("W = {:.12}", o.w);
    let u = &o.unity_sums;
    println!(
        "unity sums: t3 {:.12}  t1t3 {:.12}  t2t3 {:.12}  t1t2t3 {:.12}",
        u.t3, u.t1t3, u.t2t3, u.t1t2t3
    );
}

fn print_contexts() {
    let label = |s: Option<Sign>| s.map_or('.', Sign::symbol);
    println!("slot  b         type     q1  q2");
    for (k, c) in STANDARD_CONTEXTS.iter().enumerate() {
        let [b1, b2, b3, b4] = c.blockers.0;
        println!(
            "{k}     ({b1},{b2},{b3},{b4})  {:<8} {}   {}",
            format!("{:?}", c.kind),
            label(c.q1),
            label(c.q2)
        );
    }
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run(args) => {
            let config = args.resolve()?;
            let (res, paths) = driver::run(&config)?;
            print_run(&res);
            for p in paths {
                println!("wrote {}", p.display());
            }
        }
        Command::Sweep(args) => {
            let config = args.resolve()?;
            let (rows, path) = driver::run_sweep(&config)?;
            for row in &rows {
                println!(
                    "r = {:<5} gamma = {:<5} K = {:.4} ± {:.4}  W = {:.4} ± {:.4}",
                    row.r, row.gamma, row.k.mean, row.k.std, row.w.mean, row.w.std
                );
            }
            println!("wrote {}", path.display());
        }
        Command::Oracle { config, json } => {
            let report = driver::oracle_report(&config.resolve()?)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print_oracle(&report);
            }
        }
        Command::Contexts => print_contexts(),
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error[{}]: {e}", e.category());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
