//! Command-line front end. Flags override the matching fields of `--config`.
//! The thread count follows `RAYON_NUM_THREADS`.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use coupled_decay::config::validate_config;
use coupled_decay::runner::{run, Outcome};

#[derive(Parser)]
#[command(name = "coupled-decay", version, about = "Decay of indirectly damped coupled systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scalar system: exponential decay against the spectral abscissa.
    Scalar(ScalarArgs),
    /// Modal simulation with energy time series.
    Simulate(SystemArgs),
    /// Lyapunov certificate over the spectrum and a probe grid.
    Certify(SystemArgs),
    /// Polynomial-decay sweep over beta and alpha/bound.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct Common {
    /// JSON config file; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory [default: out].
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomized data [default: 0].
    #[arg(long)]
    seed: Option<u64>,
    /// Final time [default: 200, scalar 40].
    #[arg(long)]
    t_end: Option<f64>,
    /// Number of time steps [default: 2000, scalar 4000].
    #[arg(long)]
    steps: Option<u64>,
}

#[derive(Args)]
struct ScalarArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    mu: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    c: Option<f64>,
    /// Lyapunov parameter [default: chosen automatically].
    #[arg(long)]
    eps: Option<f64>,
}

#[derive(Args)]
struct SpectrumArgs {
    /// Spectrum preset: dirichlet:N=64, neumann:N=64,rho1=1.0, perturbed:N=64,zeta=2.0.
    #[arg(long, conflicts_with = "spectrum_file")]
    example: Option<String>,
    /// Spectrum file {"label": ..., "eigenvalues": [...]}.
    #[arg(long)]
    spectrum_file: Option<PathBuf>,
    /// Initial data: spread_1_over_n, single_mode K, v_only_spread, random SEED [default: spread_1_over_n].
    #[arg(long)]
    init: Option<String>,
    /// Lower end of the t*K window [default: 1].
    #[arg(long)]
    t_min: Option<f64>,
    /// Probe grid extent as a multiple of lambda_1 [default: 1e6].
    #[arg(long)]
    grid_max_factor: Option<f64>,
    /// Probe grid points per decade [default: 20].
    #[arg(long)]
    grid_per_decade: Option<u64>,
}

#[derive(Args)]
struct SystemArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    spectrum: SpectrumArgs,
    #[arg(long, allow_hyphen_values = true)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    /// Damping coefficient [default: 1].
    #[arg(long)]
    b: Option<f64>,
    /// A2 = A^2 + zeta_pert A [default: 0].
    #[arg(long)]
    zeta_pert: Option<f64>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    spectrum: SpectrumArgs,
    /// Damping coefficient [default: 1].
    #[arg(long)]
    b: Option<f64>,
    /// [default: 0]
    #[arg(long)]
    zeta_pert: Option<f64>,
    /// Comma-separated beta values [default: 0,0.5,1,1.25,1.5].
    #[arg(long, value_delimiter = ',')]
    betas: Option<Vec<f64>>,
    /// Comma-separated alpha/bound fractions [default: 0.5].
    #[arg(long, value_delimiter = ',')]
    alpha_fractions: Option<Vec<f64>>,
    /// Skip the alpha = 0 control row.
    #[arg(long)]
    no_control: bool,
    /// Use k * tildeE(0) * (B+|alpha|)/(B-|alpha|) as ceiling instead of the certified one.
    #[arg(long)]
    ceiling_k: Option<f64>,
}

fn section<'a>(doc: &'a mut Map<String, Value>, key: &str) -> &'a mut Map<String, Value> {
    let slot = doc.entry(key.to_string()).or_insert_with(|| json!({}));
    if !slot.is_object() {
        *slot = json!({});
    }
    slot.as_object_mut().expect("object")
}

fn set<T: Into<Value>>(map: &mut Map<String, Value>, key: &str, v: Option<T>) {
    if let Some(v) = v {
        map.insert(key.to_string(), v.into());
    }
}

fn load(common: &Common, scenario: &str) -> Result<Map<String, Value>, String> {
    let mut doc = match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("config: cannot read {}: {e}", path.display()))?;
            match serde_json::from_str::<Value>(&text) {
                Ok(Value::Object(o)) => o,
                Ok(_) => return Err("config: expected a JSON object".into()),
                Err(e) => return Err(format!("config: invalid JSON: {e}")),
            }
        }
        None => Map::new(),
    };
    doc.insert("scenario".into(), json!(scenario));
    set(&mut doc, "outputs", common.out.as_ref().map(|p| p.display().to_string()));
    set(&mut doc, "seed", common.seed);
    if common.t_end.is_some() || common.steps.is_some() {
        let t = section(&mut doc, "time");
        set(t, "t_end", common.t_end);
        set(t, "n_steps", common.steps);
    }
    Ok(doc)
}

fn apply_spectrum(doc: &mut Map<String, Value>, s: &SpectrumArgs) {
    if let Some(e) = &s.example {
        doc.insert("spectrum".into(), json!({ "example": e }));
    }
    if let Some(f) = &s.spectrum_file {
        doc.insert("spectrum".into(), json!({ "file": f.display().to_string() }));
    }
    set(doc, "initial_data", s.init.clone());
    if s.t_min.is_some() {
        set(section(doc, "time"), "t_min", s.t_min);
    }
    if s.grid_max_factor.is_some() || s.grid_per_decade.is_some() {
        let g = section(doc, "grid");
        set(g, "max_factor", s.grid_max_factor);
        set(g, "per_decade", s.grid_per_decade);
    }
}

fn document(cli: &Cli) -> Result<Value, String> {
    let doc = match &cli.command {
        Command::Scalar(a) => {
            let mut doc = load(&a.common, "scalar")?;
            let s = section(&mut doc, "scalar");
            set(s, "lambda", a.lambda);
            set(s, "mu", a.mu);
            set(s, "c", a.c);
            set(s, "eps", a.eps);
            doc
        }
        Command::Simulate(a) | Command::Certify(a) => {
            let name = if matches!(cli.command, Command::Simulate(_)) { "simulate" } else { "certify" };
            let mut doc = load(&a.common, name)?;
            apply_spectrum(&mut doc, &a.spectrum);
            if a.alpha.is_some() || a.beta.is_some() || a.b.is_some() || a.zeta_pert.is_some() {
                let s = section(&mut doc, "system");
                set(s, "alpha", a.alpha);
                set(s, "beta", a.beta);
                set(s, "b", a.b);
                set(s, "zeta_pert", a.zeta_pert);
            }
            doc
        }
        Command::Sweep(a) => {
            let mut doc = load(&a.common, "sweep")?;
            apply_spectrum(&mut doc, &a.spectrum);
            if a.b.is_some() || a.zeta_pert.is_some() {
                let s = section(&mut doc, "system");
                set(s, "b", a.b);
                set(s, "zeta_pert", a.zeta_pert);
            }
            let s = section(&mut doc, "sweep");
            set(s, "betas", a.betas.clone());
            set(s, "alpha_fractions", a.alpha_fractions.clone());
            if a.no_control {
                s.insert("control".into(), json!(false));
            }
            if let Some(k) = a.ceiling_k {
                s.insert("ceiling".into(), json!({ "rule": "energy_multiple", "k": k }));
            }
            doc
        }
    };
    Ok(Value::Object(doc))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            let code = if e.use_stderr() { Outcome::UsageError.exit_code() } else { 0 };
            return ExitCode::from(code as u8);
        }
    };
    let doc = match document(&cli) {
        Ok(d) => d,
        Err(m) => {
            eprintln!("error: {m}");
            return ExitCode::from(Outcome::UsageError.exit_code() as u8);
        }
    };
    let cfg = match validate_config(&doc) {
        Ok(c) => c,
        Err(errors) => {
            for e in &errors {
                eprintln!("error: {e}");
            }
            return ExitCode::from(Outcome::UsageError.exit_code() as u8);
        }
    };
    let summary = run(&cfg);
    match summary.outcome {
        Outcome::UsageError => eprintln!("error: {}", summary.message),
        _ => println!("{}", summary.message),
    }
    for a in &summary.artifacts {
        println!("wrote {}", a.display());
    }
    ExitCode::from(summary.outcome.exit_code() as u8)
}
