use std::io::Write;
use std::path::PathBuf;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use cvlearn::commands::{self, write_json};
use cvlearn::config::DimsSection;
use cvlearn::specs::{read_object, StateSpec};
use cvlearn::sweep::{write_csv, SweepConfig};
use cvlearn::{thread_count, with_pool, ConfigContext, Failure};
use cvlearn_core::learner::{BoundParams, BoundSetting, LearnRunConfig, SampleDistribution, TaskConfig, TaskSpec};

#[derive(Parser)]
#[command(name = "cvlearn", version, about = "Probabilities, learning runs and sample-complexity bounds for continuous-variable circuits")]
struct Cli {
    /// Print progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check physicality of a serialized state, channel or effect.
    Validate { file: PathBuf },
    /// Outcome probability of a circuit described in TOML or JSON.
    Prob { circuit: PathBuf },
    /// Write a named state to JSON.
    Make(MakeArgs),
    /// Draw a labelled training set from a target.
    Sample(SampleArgs),
    /// Learn a state from heterodyne samples and report the held-out gap.
    LearnState(LearnStateArgs),
    /// Learn a channel for binary coherent-state discrimination.
    LearnTask(LearnTaskArgs),
    /// Evaluate a sample-complexity bound.
    Bound(BoundArgs),
    /// Search fat-shattering certificates.
    Dims(DimsArgs),
    /// Learning-curve sweep over modes and sample sizes.
    Sweep(SweepArgs),
    /// Execute a TOML run configuration.
    Run { config: PathBuf },
}

#[derive(Args)]
struct MakeArgs {
    /// vacuum, coherent, thermal, squeezed, cat, gkp or fock-approx.
    kind: String,
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1)]
    sign: i32,
    #[arg(long, default_value_t = 0.3)]
    eps: f64,
    #[arg(long, default_value_t = 2)]
    lattice: usize,
    #[arg(long, default_value_t = 1)]
    photons: usize,
    #[arg(long, default_value_t = 0.5)]
    r: f64,
    #[arg(long, default_value_t = 0.0)]
    phi: f64,
    #[arg(long, default_value_t = 1.0)]
    nbar: f64,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    #[arg(long)]
    target: PathBuf,
    #[arg(long, short = 'T', default_value_t = 100)]
    samples: usize,
    #[arg(long, default_value_t = 1.0)]
    spread: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LearnStateArgs {
    #[arg(long)]
    target: PathBuf,
    #[arg(long, short = 'T', default_value_t = 2000)]
    samples: usize,
    #[arg(long, default_value_t = 1.5)]
    spread: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 3000)]
    max_evals: usize,
    #[arg(long, default_value_t = 1000)]
    n_test: usize,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct LearnTaskArgs {
    #[arg(long, default_value_t = 0.3)]
    alpha: f64,
    #[arg(long, short = 'T', default_value_t = 200)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Grid points per axis for the exhaustive comparison; 0 skips it.
    #[arg(long, default_value_t = 0)]
    grid: usize,
    #[arg(short, long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundArgs {
    /// gaussian, gaussian-photocount, gg, photocount-measurement or pconcept.
    #[arg(long, default_value = "gaussian")]
    setting: String,
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long, default_value_t = 5)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    ell: usize,
    #[arg(long, default_value_t = 0.1)]
    eps: f64,
    #[arg(long, default_value_t = 0.05)]
    gamma: f64,
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
    #[arg(long, default_value_t = 1.0)]
    nu: f64,
    #[arg(long, default_value_t = 1.0)]
    b1: f64,
    #[arg(long, default_value_t = 1.0)]
    b2: f64,
    #[arg(long, default_value_t = 1.0)]
    b3: f64,
    #[arg(long)]
    dim: Option<f64>,
}

#[derive(Args)]
struct DimsArgs {
    /// f_g, f_g_displacement, f_gp, f_gg or constant.
    #[arg(long, default_value = "f_g")]
    class: String,
    #[arg(long, default_value_t = 1)]
    n: usize,
    /// Photon cutoff for f_gp.
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 0.1)]
    gamma: f64,
    #[arg(long, default_value_t = 6)]
    kmax: usize,
    /// Function-evaluation budget; accepts forms like 1e6.
    #[arg(long, default_value_t = 1e6)]
    budget: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Certificate output; stdout when absent.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Summary CSV output.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, value_delimiter = ',', default_values_t = vec![1usize, 2, 3])]
    n: Vec<usize>,
    #[arg(long = "samples", short = 'T', value_delimiter = ',', default_values_t = vec![250usize, 500, 1000, 2000, 4000, 8000])]
    samples: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = vec![0u64, 1, 2, 3])]
    seeds: Vec<u64>,
    #[arg(long, default_value_t = 0.02)]
    target_gap: f64,
    #[arg(long, default_value_t = 300)]
    evals_per_param: usize,
    #[arg(long, default_value_t = 500)]
    n_test: usize,
    /// Stop scheduling runs after this many milliseconds.
    #[arg(long)]
    wall_budget_ms: Option<u64>,
    /// CSV output; stdout when absent.
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Scaling summary JSON.
    #[arg(long)]
    summary: Option<PathBuf>,
}

fn emit<T: serde::Serialize>(value: &T, out: Option<&PathBuf>) -> anyhow::Result<()> {
    match out {
        Some(p) => write_json(p, value),
        None => {
            let mut stdout = std::io::stdout().lock();
            serde_json::to_writer_pretty(&mut stdout, value)?;
            writeln!(stdout)?;
            Ok(())
        }
    }
}

fn make_spec(a: &MakeArgs) -> anyhow::Result<StateSpec> {
    Ok(match a.kind.as_str() {
        "vacuum" => StateSpec::Vacuum { n: a.n },
        "coherent" => StateSpec::Coherent { re: vec![a.alpha; a.n], im: vec![0.0; a.n] },
        "thermal" => StateSpec::Thermal { nbar: vec![a.nbar; a.n] },
        "squeezed" => StateSpec::Squeezed { r: a.r, phi: a.phi },
        "cat" => StateSpec::Cat { alpha: a.alpha, sign: a.sign },
        "gkp" => StateSpec::Gkp { eps: a.eps, lattice: a.lattice },
        "fock-approx" => StateSpec::FockApprox { photons: a.photons, r: a.r },
        other => return Err(anyhow!("unknown state kind {other:?}")),
    })
}

fn parse_setting(s: &str) -> anyhow::Result<BoundSetting> {
    serde_json::from_value(serde_json::Value::String(s.into())).map_err(|_| anyhow!("unknown bound setting {s:?}"))
}

fn execute(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Validate { file } => {
            let text = std::fs::read_to_string(&file).with_context(|| format!("reading {}", file.display())).config()?;
            let report = match serde_json::from_str(&text) {
                Ok(obj) => commands::validate_object(&obj)?,
                Err(e) => match commands::validate_gg_effect_json(&text) {
                    Some(r) => r?,
                    None => return Err(Failure::Config(anyhow!("{}: not a state, channel or effect: {e}", file.display()))),
                },
            };
            emit(&report, None)?;
            if !report.ok {
                return Err(Failure::Runtime(anyhow!("{} is not physical", report.kind)));
            }
        }
        Command::Prob { circuit } => {
            let spec = commands::read_circuit(&circuit).config()?;
            let p = spec.probability()?;
            let mut w = csv::Writer::from_writer(std::io::stdout());
            w.write_record(["probability"]).map_err(anyhow::Error::from)?;
            w.write_record([format!("{p}")]).map_err(anyhow::Error::from)?;
            w.flush().map_err(anyhow::Error::from)?;
        }
        Command::Make(a) => {
            let obj = make_spec(&a).config()?.build()?;
            emit(&obj, a.out.as_ref())?;
        }
        Command::Sample(a) => {
            let target = read_object(&a.target).config()?;
            let set = commands::sample(&target, &SampleDistribution::heterodyne(a.spread, a.seed), a.samples)?;
            emit(&set, a.out.as_ref())?;
        }
        Command::LearnState(a) => {
            let target = read_object(&a.target).config()?;
            let mut cfg = LearnRunConfig { samples: a.samples, n_test: a.n_test, ..Default::default() };
            cfg.erm.es.max_evals = a.max_evals;
            cfg.erm.es.seed = a.seed;
            let run = commands::learn_state(&target, &SampleDistribution::heterodyne(a.spread, a.seed), &cfg)?;
            emit(&run, a.out.as_ref())?;
        }
        Command::LearnTask(a) => {
            let cfg = TaskConfig { samples: a.samples, seed: a.seed, ..Default::default() };
            let out = commands::learn_task(&TaskSpec::binary_coherent(a.alpha), &cfg, a.grid)?;
            emit(&out, a.out.as_ref())?;
        }
        Command::Bound(a) => {
            let setting = parse_setting(&a.setting).config()?;
            let params = BoundParams {
                n: a.n,
                k: a.k,
                ell: a.ell,
                b1: a.b1,
                b2: a.b2,
                b3: a.b3,
                eps: a.eps,
                gamma: a.gamma,
                delta: a.delta,
                nu: a.nu,
                dim: a.dim,
            };
            emit(&commands::bound(setting, &params).config()?, None)?;
        }
        Command::Dims(a) => {
            if !(a.budget >= 1.0) {
                return Err(Failure::Config(anyhow!("budget must be at least 1")));
            }
            let sec = DimsSection { class: a.class, n: a.n, k: a.k, gamma: a.gamma, k_max: a.kmax, budget: a.budget as usize };
            commands::function_class(&sec.class, sec.n, sec.k).config()?;
            let threads = thread_count(None)?;
            let (res, summary) = with_pool(threads, || commands::dims(&sec, a.seed))??;
            emit(&res, a.json.as_ref())?;
            if let Some(p) = a.csv {
                let mut w = csv::Writer::from_path(&p).with_context(|| format!("writing {}", p.display()))?;
                w.serialize(&summary).map_err(anyhow::Error::from)?;
                w.flush().map_err(anyhow::Error::from)?;
            }
        }
        Command::Sweep(a) => {
            let cfg = SweepConfig {
                n: a.n,
                samples: a.samples,
                seeds: a.seeds,
                target_gap: a.target_gap,
                evals_per_param: a.evals_per_param,
                n_test: a.n_test,
                wall_budget_ms: a.wall_budget_ms,
                ..Default::default()
            };
            cfg.validate().config()?;
            let threads = thread_count(None)?;
            let res = with_pool(threads, || commands::sweep(&cfg))??;
            match &a.out {
                Some(p) => write_csv(&res.rows, std::fs::File::create(p).with_context(|| format!("writing {}", p.display()))?)?,
                None => write_csv(&res.rows, std::io::stdout())?,
            }
            if let Some(p) = &a.summary {
                write_json(p, &serde_json::json!({ "skipped": res.skipped, "scaling": res.scaling, "scaling_error": res.scaling_error }))?;
            }
            if let Some(e) = &res.scaling_error {
                log::warn!("no scaling fit: {e}");
            }
        }
        Command::Run { config } => {
            let out = commands::run_config(&config)?;
            log::info!("config {} -> {}", out.config_hash, out.record.display());
            println!("{}", out.csv.display());
        }
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(if cli.verbose { "info" } else { "warn" }))
        .init();
    if let Err(f) = execute(cli) {
        eprintln!("error: {:#}", f.error());
        std::process::exit(f.code());
    }
}
