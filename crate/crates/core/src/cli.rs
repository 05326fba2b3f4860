//! Command-line front end.

use std::fmt::Write as _;
use std::path::PathBuf;

use clap::{ArgGroup, Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::dichotomy::{classify, kruglov_check, ClassifyParams, DichotomyReport, GnEvaluator, KruglovParams, KruglovVerdict, SupG, SupGrid};
use crate::error::{Error, Result};
use crate::experiments::{growth_table, mc_iid_sum_norm, parse_ns, rademacher_sum_norm, ExperimentConfig, GrowthTable, McEstimate, NormSource, SamplerSpec};
use crate::generators::{ConcaveGenerator, LimitGrid};
use crate::norms::SpaceSpec;
use crate::stepfn::StepFunction;

pub const SEED_ENV: &str = "RISPACE_SEED";

#[derive(Debug, Parser)]
#[command(name = "rispace", version, about = "Norms, operator norms and growth exponents in rearrangement-invariant spaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    /// Write the report here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide between ‖A_n‖ = n and ‖A_n‖ <= C n^q for Λ(ψ).
    Classify(ClassifyArgs),
    /// Norm of a step function, an indicator or a Rademacher sum.
    Norm(NormArgs),
    /// ‖A_n‖ on Λ(ψ) through sup_u g_n(u).
    Opnorm(OpnormArgs),
    /// Growth table and exponent fit of n ↦ ‖ξ_1 + ... + ξ_n‖.
    Growth(GrowthArgs),
    /// Kruglov series criterion for Λ(φ).
    Kruglov(KruglovArgs),
    /// Monte-Carlo norm of one i.i.d. sum.
    Mc(McArgs),
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    /// Deepest probe is u = 2^-j_max.
    #[arg(long, default_value_t = LimitGrid::default().j_max)]
    pub j_max: u32,
    #[arg(long, default_value_t = LimitGrid::default().window)]
    pub window: u32,
    #[arg(long, default_value_t = LimitGrid::default().tolerance)]
    pub tolerance: f64,
}

impl GridArgs {
    fn grid(&self) -> Result<LimitGrid> {
        if self.window < 1 || self.j_max < 2 * self.window {
            return Err(Error::invalid(format!(
                "grid needs window >= 1 and j_max >= 2 window, got j_max = {}, window = {}",
                self.j_max, self.window
            )));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::invalid(format!("tolerance {} must be > 0", self.tolerance)));
        }
        Ok(LimitGrid {
            j_max: self.j_max,
            window: self.window,
            tolerance: self.tolerance,
        })
    }
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    #[arg(long)]
    pub psi: String,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, default_value_t = 1e-3)]
    pub margin: f64,
    /// Terms of the Kruglov series.
    #[arg(long, default_value_t = 1_000_000)]
    pub n_max: u64,
}

#[derive(Debug, Args)]
#[command(group(ArgGroup::new("input").required(true).multiple(false).args(["indicator", "step", "rademacher"])))]
pub struct NormArgs {
    #[arg(long)]
    pub space: String,
    /// Indicator of (0, u].
    #[arg(long)]
    pub indicator: Option<f64>,
    /// `b0,b1,...,bm;v1,...,vm`, breakpoints then values.
    #[arg(long)]
    pub step: Option<String>,
    /// Exact law of r_1 + ... + r_n.
    #[arg(long)]
    pub rademacher: Option<u64>,
}

#[derive(Debug, Args)]
pub struct OpnormArgs {
    #[arg(long)]
    pub psi: String,
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<u32>,
    #[command(flatten)]
    pub grid: GridArgs,
    #[arg(long, default_value_t = SupGrid::default().octaves)]
    pub octaves: u32,
    #[arg(long, default_value_t = SupGrid::default().per_octave)]
    pub per_octave: u32,
}

#[derive(Debug, Args)]
pub struct GrowthArgs {
    /// Flat key = value experiment file; replaces the flags below.
    #[arg(long, conflicts_with_all = ["space", "ns", "source", "sampler", "trials", "m", "burn_in"])]
    pub config: Option<PathBuf>,
    #[arg(long, required_unless_present = "config")]
    pub space: Option<String>,
    /// `a,b,c` or `2^a..2^b`.
    #[arg(long, required_unless_present = "config")]
    pub ns: Option<String>,
    #[arg(long, value_enum)]
    pub source: Option<Source>,
    #[arg(long)]
    pub sampler: Option<String>,
    #[arg(long, default_value_t = crate::experiments::mc::DEFAULT_TRIALS)]
    pub trials: usize,
    #[arg(long, default_value_t = crate::experiments::mc::DEFAULT_QUANTILES)]
    pub m: usize,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub burn_in: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Source {
    Exact,
    Mc,
}

#[derive(Debug, Args)]
pub struct KruglovArgs {
    #[arg(long)]
    pub phi: String,
    #[arg(long, default_value_t = 1_000_000)]
    pub n_max: u64,
    #[arg(long, default_value_t = 1e3)]
    pub threshold: f64,
    /// Values of t in (0, 1]; defaults to a dyadic grid down to 2^-1000.
    #[arg(long, value_delimiter = ',')]
    pub t: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct McArgs {
    #[arg(long)]
    pub sampler: String,
    #[arg(long)]
    pub space: String,
    #[arg(long)]
    pub n: u64,
    #[arg(long, default_value_t = crate::experiments::mc::DEFAULT_TRIALS)]
    pub trials: usize,
    #[arg(long, default_value_t = crate::experiments::mc::DEFAULT_QUANTILES)]
    pub m: usize,
    #[arg(long, env = SEED_ENV, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifyOutput {
    pub grid: LimitGrid,
    pub report: DichotomyReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormReport {
    pub space: String,
    pub input: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpnormRow {
    pub n: u32,
    pub norm: f64,
    pub sup_g: SupG,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpnormReport {
    pub generator: String,
    pub grid: LimitGrid,
    pub sup_grid: SupGrid,
    pub rows: Vec<OpnormRow>,
    pub inconclusive: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KruglovReport {
    pub generator: String,
    pub params: KruglovParams,
    pub verdict: KruglovVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub sampler: String,
    pub seed: u64,
    pub space: String,
    pub n: u64,
    pub estimate: McEstimate,
}

/// Result of one subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Report {
    Classify(ClassifyOutput),
    Norm(NormReport),
    Opnorm(OpnormReport),
    Growth(GrowthTable),
    Kruglov(KruglovReport),
    Mc(McReport),
}

fn parse_step(s: &str) -> Result<StepFunction<f64>> {
    let (b, v) = s.split_once(';').ok_or_else(|| Error::dsl(s, s))?;
    let list = |part: &str| -> Result<Vec<f64>> {
        part.split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| Error::dsl(t.trim(), s)))
            .collect()
    };
    StepFunction::new(list(b)?, list(v)?)
}

/// Runs the parsed command. Inputs are validated before any computation.
pub fn run(cli: &Cli) -> Result<Report> {
    match &cli.command {
        Command::Classify(a) => {
            let psi = ConcaveGenerator::from_dsl(&a.psi)?;
            let grid = a.grid.grid()?;
            if !(a.margin > 0.0 && a.margin < 1.0) {
                return Err(Error::invalid(format!("margin {} outside (0, 1)", a.margin)));
            }
            let params = ClassifyParams {
                margin: a.margin,
                grid,
                kruglov: KruglovParams {
                    n_max: a.n_max,
                    ..KruglovParams::default()
                },
                ..ClassifyParams::default()
            };
            Ok(Report::Classify(ClassifyOutput {
                grid,
                report: classify(&psi, &params)?,
            }))
        }
        Command::Norm(a) => {
            let space = SpaceSpec::from_dsl(&a.space)?;
            let (input, value) = match (a.indicator, &a.step, a.rademacher) {
                (Some(u), _, _) => {
                    if !(u > 0.0 && u <= 1.0) {
                        return Err(Error::invalid(format!("indicator measure {u} outside (0, 1]")));
                    }
                    (format!("indicator:{u}"), space.indicator_norm(u))
                }
                (_, Some(s), _) => {
                    let f = parse_step(s)?;
                    (format!("step:{s}"), space.norm(&f)?)
                }
                (_, _, Some(n)) => (format!("rademacher:{n}"), rademacher_sum_norm(n, &space)?),
                _ => return Err(Error::invalid("one of --indicator, --step, --rademacher is required")),
            };
            Ok(Report::Norm(NormReport {
                space: space.label(),
                input,
                value,
            }))
        }
        Command::Opnorm(a) => {
            let psi = ConcaveGenerator::from_dsl(&a.psi)?;
            let grid = a.grid.grid()?;
            if a.n.contains(&0) {
                return Err(Error::invalid("n must be >= 1"));
            }
            if a.octaves < 1 || a.per_octave < 1 {
                return Err(Error::invalid("octaves and per-octave must be >= 1"));
            }
            let sup_grid = SupGrid {
                octaves: a.octaves,
                per_octave: a.per_octave,
                ..SupGrid::default()
            };
            let ev = GnEvaluator::new(&psi, *a.n.iter().max().expect("required"));
            let rows = a
                .n
                .iter()
                .map(|&n| {
                    let s = ev.sup(n, &sup_grid, &grid)?;
                    Ok(OpnormRow {
                        n,
                        norm: n as f64 * s.value,
                        sup_g: s,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let inconclusive = rows.iter().any(|r| !r.sup_g.limit.converged);
            Ok(Report::Opnorm(OpnormReport {
                generator: psi.label(),
                grid,
                sup_grid,
                rows,
                inconclusive,
            }))
        }
        Command::Growth(a) => {
            let cfg = match &a.config {
                Some(path) => ExperimentConfig::from_file(path, a.seed)?,
                None => {
                    let space = SpaceSpec::from_dsl(a.space.as_deref().expect("required"))?;
                    let ns = parse_ns(a.ns.as_deref().expect("required"))?;
                    let source = match a.source.unwrap_or(if a.sampler.is_some() { Source::Mc } else { Source::Exact }) {
                        Source::Exact => {
                            if let Some(s) = a.sampler.as_deref().filter(|s| *s != "rademacher") {
                                return Err(Error::invalid(format!("exact source only supports rademacher, got {s}")));
                            }
                            NormSource::ExactRademacher
                        }
                        Source::Mc => NormSource::Mc {
                            sampler: SamplerSpec::from_dsl(
                                a.sampler.as_deref().ok_or_else(|| Error::invalid("--sampler is required with --source mc"))?,
                                a.seed,
                            )?,
                            trials: a.trials,
                            m: a.m,
                        },
                    };
                    ExperimentConfig {
                        space,
                        ns,
                        source,
                        burn_in: a.burn_in,
                    }
                }
            };
            Ok(Report::Growth(growth_table(&cfg.source, &cfg.space, &cfg.ns, cfg.burn_in)?))
        }
        Command::Kruglov(a) => {
            let phi = ConcaveGenerator::from_dsl(&a.phi)?;
            if !(a.threshold > 0.0) {
                return Err(Error::invalid(format!("threshold {} must be > 0", a.threshold)));
            }
            let mut params = KruglovParams {
                n_max: a.n_max,
                threshold: a.threshold,
                ..KruglovParams::default()
            };
            if !a.t.is_empty() {
                params.t_grid = a.t.clone();
            }
            let verdict = kruglov_check(&phi, &params)?;
            Ok(Report::Kruglov(KruglovReport {
                generator: phi.label(),
                params,
                verdict,
            }))
        }
        Command::Mc(a) => {
            let sampler = SamplerSpec::from_dsl(&a.sampler, a.seed)?;
            let space = SpaceSpec::from_dsl(&a.space)?;
            let estimate = mc_iid_sum_norm(&sampler, a.n, &space, a.trials, a.m)?;
            Ok(Report::Mc(McReport {
                sampler: sampler.label(),
                seed: a.seed,
                space: space.label(),
                n: a.n,
                estimate,
            }))
        }
    }
}

impl Report {
    /// Non-converged limits or an unsettled series.
    pub fn inconclusive(&self) -> bool {
        match self {
            Report::Classify(c) => c.report.inconclusive,
            Report::Opnorm(o) => o.inconclusive,
            Report::Kruglov(k) => k.verdict.inconclusive,
            _ => false,
        }
    }

    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(self)?;
                s.push('\n');
                Ok(s)
            }
            Format::Text => Ok(self.text()),
            Format::Csv => self.csv(),
        }
    }

    fn text(&self) -> String {
        let mut s = String::new();
        let grid_line = |s: &mut String, g: &LimitGrid| {
            let _ = writeln!(s, "limit grid: u down to 2^-{}, window {}, tolerance {:e}", g.j_max, g.window, g.tolerance);
        };
        match self {
            Report::Classify(c) => {
                let r = &c.report;
                let _ = writeln!(s, "generator: {}", r.generator);
                let _ = writeln!(s, "branch: {:?}", r.branch);
                let _ = writeln!(s, "margin: {:e}", r.margin);
                grid_line(&mut s, &c.grid);
                for (k, e) in &r.a_estimates {
                    let _ = writeln!(
                        s,
                        "limsup psi({k}u)/psi(u) = {} (compare {k} - margin; converged {}, deepest 2^{})",
                        e.value, e.converged, e.grid_min_log2
                    );
                }
                for (l, e) in &r.c_estimates {
                    let _ = writeln!(
                        s,
                        "limsup psi(u^{l})/psi(u) = {} (compare 1 - margin; converged {}, deepest 2^{})",
                        e.value, e.converged, e.grid_min_log2
                    );
                }
                for f in &r.failing {
                    let _ = writeln!(s, "holds: {f}");
                }
                if let (Some(n0), Some(q), Some(cc), Some(w)) = (r.witness_n0, r.q, r.c, r.witness_norm) {
                    let _ = writeln!(s, "witness: n0 = {n0}, ||A_n0|| = {w} < n0 (1 - margin) = {}", n0 as f64 * (1.0 - r.margin));
                    let _ = writeln!(s, "bound: ||A_n|| <= C n^q with q = {q}, C = {cc}");
                }
                kruglov_text(&mut s, &r.kruglov, None);
                let _ = writeln!(s, "inconclusive: {}", r.inconclusive);
            }
            Report::Norm(n) => {
                let _ = writeln!(s, "space: {}", n.space);
                let _ = writeln!(s, "input: {}", n.input);
                let _ = writeln!(s, "norm: {}", n.value);
            }
            Report::Opnorm(o) => {
                let _ = writeln!(s, "generator: {}", o.generator);
                grid_line(&mut s, &o.grid);
                let _ = writeln!(
                    s,
                    "interior grid: {} octaves x {} points, refined to {:e} in ln u",
                    o.sup_grid.octaves, o.sup_grid.per_octave, o.sup_grid.refine_tol
                );
                for r in &o.rows {
                    let _ = writeln!(
                        s,
                        "n = {}: ||A_n|| = {}, sup g = {} (interior {} at ln u = {}, limit {} converged {})",
                        r.n, r.norm, r.sup_g.value, r.sup_g.interior, r.sup_g.ln_u_argmax, r.sup_g.limit.value, r.sup_g.limit.converged
                    );
                }
                let _ = writeln!(s, "inconclusive: {}", o.inconclusive);
            }
            Report::Growth(g) => {
                let _ = writeln!(s, "space: {}", g.space);
                let _ = writeln!(s, "source: {}", g.source);
                for r in &g.rows {
                    match r.std_error {
                        Some(se) => {
                            let _ = writeln!(s, "n = {}: {} (s.e. {})", r.n, r.value, se);
                        }
                        None => {
                            let _ = writeln!(s, "n = {}: {}", r.n, r.value);
                        }
                    }
                }
                let f = &g.fit;
                let _ = writeln!(
                    s,
                    "fit over n >= {}: q = {}, C = {}, residual = {}",
                    f.pairs.get(f.burn_in).map_or(0, |p| p.0),
                    f.q,
                    f.c,
                    f.residual
                );
                let _ = writeln!(s, "burn-in: {}", f.burn_in);
                let _ = writeln!(s, "degenerate: {}", f.degenerate);
                if f.q > 0.0 && f.q <= 1.0 {
                    let _ = writeln!(s, "endpoint 1/q: {}", 1.0 / f.q);
                }
            }
            Report::Kruglov(k) => {
                let _ = writeln!(s, "generator: {}", k.generator);
                kruglov_text(&mut s, &k.verdict, Some(&k.params));
                let _ = writeln!(s, "inconclusive: {}", k.verdict.inconclusive);
            }
            Report::Mc(m) => {
                let _ = writeln!(s, "sampler: {} (seed {})", m.sampler, m.seed);
                let _ = writeln!(s, "space: {}", m.space);
                let _ = writeln!(s, "n: {}", m.n);
                let _ = writeln!(s, "trials: {}, quantile pieces: {}", m.estimate.trials, m.estimate.m);
                let _ = writeln!(s, "norm: {} (s.e. {})", m.estimate.value, m.estimate.std_error);
            }
        }
        s
    }

    fn csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        match self {
            Report::Growth(g) => return Ok(g.to_csv_string()),
            Report::Classify(c) => {
                w.write_record(["quantity", "index", "value", "converged", "grid_min_log2"])?;
                let r = &c.report;
                for (k, e) in &r.a_estimates {
                    w.write_record(["a", &k.to_string(), &e.value.to_string(), &e.converged.to_string(), &e.grid_min_log2.to_string()])?;
                }
                for (l, e) in &r.c_estimates {
                    w.write_record(["c", &l.to_string(), &e.value.to_string(), &e.converged.to_string(), &e.grid_min_log2.to_string()])?;
                }
            }
            Report::Norm(n) => {
                w.write_record(["space", "input", "value"])?;
                w.write_record([n.space.as_str(), n.input.as_str(), &n.value.to_string()])?;
            }
            Report::Opnorm(o) => {
                w.write_record(["n", "norm", "sup_g", "interior", "ln_u_argmax", "limit", "limit_converged"])?;
                for r in &o.rows {
                    w.write_record([
                        r.n.to_string(),
                        r.norm.to_string(),
                        r.sup_g.value.to_string(),
                        r.sup_g.interior.to_string(),
                        r.sup_g.ln_u_argmax.to_string(),
                        r.sup_g.limit.value.to_string(),
                        r.sup_g.limit.converged.to_string(),
                    ])?;
                }
            }
            Report::Kruglov(k) => {
                w.write_record(["generator", "finite", "sup_value", "n_used", "t_argmax", "threshold"])?;
                let v = &k.verdict;
                w.write_record([
                    k.generator.clone(),
                    v.finite.to_string(),
                    v.sup_value.map_or("inf".into(), |x| x.to_string()),
                    v.n_used.to_string(),
                    v.t_argmax.to_string(),
                    k.params.threshold.to_string(),
                ])?;
            }
            Report::Mc(m) => {
                w.write_record(["sampler", "seed", "space", "n", "trials", "m", "value", "std_error"])?;
                w.write_record([
                    m.sampler.clone(),
                    m.seed.to_string(),
                    m.space.clone(),
                    m.n.to_string(),
                    m.estimate.trials.to_string(),
                    m.estimate.m.to_string(),
                    m.estimate.value.to_string(),
                    m.estimate.std_error.to_string(),
                ])?;
            }
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv is utf-8"))
    }
}

fn kruglov_text(s: &mut String, v: &KruglovVerdict, params: Option<&KruglovParams>) {
    let value = v.sup_value.map_or("inf".to_string(), |x| x.to_string());
    let _ = writeln!(
        s,
        "kruglov: finite {}, sup = {value} at t = {}, {} terms",
        v.finite, v.t_argmax, v.n_used
    );
    if let Some(p) = params {
        let _ = writeln!(
            s,
            "kruglov grid: {} values of t down to {:e}, threshold {:e}, stability 1e-6 between N/4 and N",
            p.t_grid.len(),
            p.t_grid.iter().cloned().fold(f64::INFINITY, f64::min),
            p.threshold
        );
    }
}

/// Exit status for an error: 1 when the computation could not settle, 2 for bad input.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Degenerate(_) => 1,
        _ => 2,
    }
}

/// Parses `args`, runs, writes the report; returns the exit status.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let out = run(&cli).and_then(|r| Ok((r.render(cli.format)?, r.inconclusive())));
    let (text, inconclusive) = match out {
        Ok(x) => x,
        Err(e) => {
            eprintln!("error: {}", e.to_string().replace('\n', " "));
            return exit_code(&e);
        }
    };
    let written = match &cli.output {
        Some(path) => std::fs::write(path, &text).map_err(Error::from),
        None => {
            use std::io::Write;
            std::io::stdout().write_all(text.as_bytes()).map_err(Error::from)
        }
    };
    if let Err(e) = written {
        eprintln!("error: {}", e.to_string().replace('\n', " "));
        return 2;
    }
    i32::from(inconclusive)
}
