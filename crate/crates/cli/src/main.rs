//! Command-line front end for carpet-quant.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use carpet_quant::antichain::{self, AntiChain, CertifyOptions, FamilyKind};
use carpet_quant::carpet::carpet_to_json;
use carpet_quant::quantizer::{self, LloydOptions};
use carpet_quant::{derived_constants, fixtures, parse_carpet, pressure, words, Carpet, DerivedConstants, Error, Rational, Scalar};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use sha2::{Digest, Sha256};

mod render;

const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Parser, Debug)]
#[command(name = "carpet-quant", version, about = "Quantization of self-affine measures on Lalley-Gatzouras carpets")]
struct Cli {
    #[command(flatten)]
    input: Input,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Exact rational arithmetic.
    #[arg(long, global = true)]
    exact: bool,
    /// Cap on words or states any single enumeration may produce.
    #[arg(long, global = true, default_value_t = 5_000_000)]
    budget: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct Input {
    /// Carpet description (JSON).
    #[arg(long, global = true)]
    spec: Option<PathBuf>,
    /// Built-in carpet by name.
    #[arg(long, global = true)]
    fixture: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the carpet conditions and print the derived constants.
    Validate {
        #[arg(long, default_value_t = 2.0)]
        r: f64,
    },
    /// List the approximate squares of x-depth `level`.
    Enumerate {
        #[arg(long)]
        level: usize,
    },
    /// Quantization dimension `s_r`.
    Dimension {
        #[arg(long)]
        r: f64,
        #[arg(long, value_enum, default_value_t = DimMethod::Partition)]
        method: DimMethod,
        #[arg(long, default_value_t = 12)]
        lmax: usize,
    },
    /// `L^q` spectrum over `a:b:step`.
    Spectrum {
        #[arg(long, value_parser = parse_grid)]
        q_grid: Grid,
    },
    /// Build an anti-chain family and optionally certify it.
    Antichain {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        r: f64,
        #[arg(long, value_enum, default_value_t = Family::Lambda)]
        family: Family,
        #[arg(long)]
        check: bool,
        #[arg(long, default_value_t = antichain::DEFAULT_PROBES)]
        probes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the words, one per line.
        #[arg(long)]
        words: Option<PathBuf>,
    },
    /// Lloyd codebooks over an n grid and the fitted decay exponent.
    Quantize {
        #[arg(long)]
        r: f64,
        /// Comma-separated codebook sizes.
        #[arg(long, value_delimiter = ',', default_values_t = quantizer::default_n_grid())]
        ngrid: Vec<usize>,
        #[arg(long, default_value_t = 200_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        restarts: usize,
    },
    /// Draw squares, a family or a codebook as SVG.
    Render {
        #[arg(long, value_enum)]
        what: What,
        #[arg(long, default_value_t = 3)]
        level: usize,
        #[arg(long, default_value_t = 2)]
        n: usize,
        #[arg(long, default_value_t = 2.0)]
        r: f64,
        #[arg(long, value_enum, default_value_t = Family::Lambda)]
        family: Family,
        #[arg(long, default_value_t = 20_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum DimMethod {
    Partition,
    Closed,
    Bm,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Family {
    Lambda,
    Gamma,
    Bar,
    Star,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum What {
    Squares,
    Antichain,
    Codebook,
}

#[derive(Clone, Debug)]
struct Grid(Vec<f64>);

fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<f64> = s.split(':').map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}"))).collect::<Result<_, _>>()?;
    let [a, b, step] = parts[..] else {
        return Err("expected a:b:step".into());
    };
    if !(step > 0.0) || b < a {
        return Err("need step > 0 and a <= b".into());
    }
    let count = ((b - a) / step + 1e-9).floor() as usize;
    Ok(Grid((0..=count).map(|k| a + k as f64 * step).collect()))
}

/// Where the carpet came from, for the reproducibility header.
struct Source {
    label: String,
    hash: String,
}

enum Output {
    Csv { header: Vec<String>, rows: Vec<String> },
    Json(serde_json::Value),
    Svg(String),
}

struct Ctx<'a> {
    source: &'a Source,
    seed: Option<u64>,
    constants: DerivedConstants,
}

impl Ctx<'_> {
    fn header_lines(&self) -> Vec<String> {
        let mut h = vec![
            format!("carpet-quant {VERSION}"),
            format!("spec: {}", self.source.label),
            format!("spec_sha256: {}", self.source.hash),
        ];
        if let Some(s) = self.seed {
            h.push(format!("seed: {s}"));
        }
        h.extend(self.constants.table().into_iter().map(|(k, v)| format!("{k} = {v}")));
        h
    }

    fn header_json(&self) -> serde_json::Value {
        json!({
            "version": VERSION,
            "spec": self.source.label,
            "spec_sha256": self.source.hash,
            "seed": self.seed,
            "constants": self.constants,
        })
    }

    fn csv(&self, rows: Vec<String>) -> Output {
        Output::Csv { header: self.header_lines(), rows }
    }
}

fn build_family<S: Scalar>(spec: &Carpet<S>, f: Family, n: usize, r: f64, budget: usize) -> Result<AntiChain, Error> {
    match f {
        Family::Lambda => antichain::build_lambda(spec, n, r, budget),
        Family::Gamma => antichain::build_gamma(spec, n, r, budget),
        Family::Bar => antichain::build_bar(spec, &antichain::build_lambda(spec, n, r, budget)?),
        Family::Star => {
            let lambda = antichain::build_lambda(spec, n, r, budget)?;
            if antichain::wide_column(spec).is_some() {
                antichain::build_star(spec, &antichain::build_bar(spec, &lambda)?)
            } else {
                antichain::build_star(spec, &lambda)
            }
        }
    }
}

fn run<S: Scalar>(cli: &Cli, spec: &Carpet<S>, source: &Source) -> Result<Output, Error> {
    let r_of = |c: &Command| match c {
        Command::Validate { r } | Command::Dimension { r, .. } | Command::Antichain { r, .. } | Command::Quantize { r, .. } | Command::Render { r, .. } => *r,
        _ => 2.0,
    };
    let seed = match &cli.command {
        Command::Antichain { seed, .. } | Command::Quantize { seed, .. } | Command::Render { seed, .. } => Some(*seed),
        _ => None,
    };
    let r = r_of(&cli.command);
    if !(r > 0.0) {
        return Err(Error::Precondition { detail: format!("need r > 0, got {r}") });
    }
    let ctx = Ctx { source, seed, constants: derived_constants(spec, r) };
    match &cli.command {
        Command::Validate { .. } => Ok(Output::Json(json!({
            "header": ctx.header_json(),
            "valid": true,
            "columns": spec.m(),
            "maps": spec.card(),
            "carpet": carpet_to_json(spec),
        }))),
        Command::Enumerate { level } => {
            let ws = words::enumerate_psi(spec, *level, cli.budget)?;
            let rows: Vec<String> = ws
                .iter()
                .map(|w| {
                    let rc = words::rectangle(spec, w).to_f64();
                    format!("{w},{},{},{},{},{},{}", w.len(), rc.x_lo, rc.x_hi, rc.y_lo, rc.y_hi, words::measure(spec, w))
                })
                .collect();
            Ok(ctx.csv(std::iter::once("word,length,x_lo,x_hi,y_lo,y_hi,measure".to_string()).chain(rows).collect()))
        }
        Command::Dimension { r, method, lmax } => {
            let mut rows = vec!["method,level,t_hat,s_hat,s_band".to_string()];
            match method {
                DimMethod::Partition => {
                    let curve = pressure::solve_t_r(spec, *r, *lmax)?;
                    rows.extend(curve.levels.iter().map(|l| format!("level,{},{},{},", l.level, l.t_hat, l.s_hat)));
                    rows.push(format!("partition,{},{},{},{}", lmax, curve.root, curve.s(), curve.s_band()));
                }
                DimMethod::Closed => {
                    let s = pressure::closed_form_s_r(spec, *r)?;
                    rows.push(format!("closed,,{},{},0", s / (s + r), s));
                }
                DimMethod::Bm => {
                    let s = pressure::bm_closed_form_d_r(spec, *r)?;
                    rows.push(format!("bm,,{},{},0", s / (s + r), s));
                }
            }
            Ok(ctx.csv(rows))
        }
        Command::Spectrum { q_grid } => {
            let mut rows = vec!["q,tau_y,tau".to_string()];
            for q in &q_grid.0 {
                rows.push(format!("{q},{},{}", pressure::tau_y(spec, *q)?, pressure::tau(spec, *q)?));
            }
            Ok(ctx.csv(rows))
        }
        Command::Antichain { n, r, family, check, probes, seed, words: words_out } => {
            let mut fam = build_family(spec, *family, *n, *r, cli.budget)?;
            if *check {
                antichain::certify(spec, &mut fam, &CertifyOptions { probes: *probes, seed: *seed })?;
            }
            if let Some(p) = words_out {
                write_file(p, &fam.to_text())?;
            }
            let mut body = fam.sidecar(&ctx.constants);
            body["header"] = ctx.header_json();
            if fam.kind == FamilyKind::Star || fam.kind == FamilyKind::Bar {
                body["separation"] = serde_json::to_value(antichain::check_separation(spec, &fam)).expect("serializable");
            }
            if matches!(fam.kind, FamilyKind::LambdaPsi | FamilyKind::GammaPhi) {
                if let Ok(curve) = pressure::solve_t_r(spec, *r, 8) {
                    body["t_r"] = json!(curve.root);
                    body["sum_e_t"] = json!(antichain::sum_e_t(spec, &fam, curve.root));
                }
            }
            if *check && !fam.all_certified() {
                let failed: Vec<&String> = fam.certified.iter().filter(|(_, v)| !**v).map(|(k, _)| k).collect();
                return Err(Error::Numeric { detail: format!("{} family failed certification: {failed:?}", fam.kind.name()) })
                    .inspect_err(|_| println!("{}", serde_json::to_string_pretty(&body).expect("serializable")));
            }
            Ok(Output::Json(body))
        }
        Command::Quantize { r, ngrid, samples, seed, restarts } => {
            let s_r = pressure::closed_form_s_r(spec, *r)?;
            let opts = LloydOptions { restarts: *restarts, seed: *seed, ..Default::default() };
            let scan = quantizer::coefficient_scan(spec, *r, s_r, ngrid, *samples, &opts)?;
            let mut rows = vec!["n,error_r,scaled".to_string()];
            rows.extend(scan.rows.iter().map(|row| format!("{},{},{}", row.n, row.error_r, row.scaled)));
            let mut header = ctx.header_lines();
            header.extend([
                format!("samples: {} truncation_tol: {}", scan.sample_size, scan.truncation_tol),
                format!("s_r = {s_r}"),
                format!("slope = {} predicted = {} rel_error = {}", scan.slope, scan.predicted_slope, scan.slope_rel_error()),
                format!("band = [{}, {}] ratio = {}", scan.band.0, scan.band.1, scan.band_ratio()),
            ]);
            Ok(Output::Csv { header, rows })
        }
        Command::Render { what, level, n, r, family, samples, seed } => {
            let mut doc = render::Svg::new(&ctx.header_lines());
            match what {
                What::Squares => {
                    for w in words::enumerate_psi(spec, *level, cli.budget)? {
                        doc.rect(&words::rectangle(spec, &w).to_f64(), &w.to_string());
                    }
                }
                What::Antichain => {
                    let fam = build_family(spec, *family, *n, *r, cli.budget)?;
                    for w in &fam.words {
                        doc.rect(&words::rectangle(spec, w).to_f64(), &w.to_string());
                    }
                }
                What::Codebook => {
                    let sample = quantizer::sample(spec, *samples, quantizer::DEFAULT_TOL, *seed)?;
                    let cb = quantizer::lloyd(&sample, *n, *r, &LloydOptions { seed: *seed, ..Default::default() })?;
                    for p in sample.points.iter().take(5_000) {
                        doc.dot(p, 0.001, "#999");
                    }
                    for c in &cb.centers {
                        doc.dot(c, 0.006, "#c00");
                    }
                }
            }
            Ok(Output::Svg(doc.finish()))
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), Error> {
    std::fs::write(path, text).map_err(|e| Error::Precondition { detail: format!("cannot write {}: {e}", path.display()) })
}

fn emit(out: Option<&Path>, output: Output) -> Result<(), Error> {
    let text = match output {
        Output::Csv { header, rows } => {
            let mut s = String::new();
            for h in header {
                let _ = writeln!(s, "# {h}");
            }
            for r in rows {
                let _ = writeln!(s, "{r}");
            }
            s
        }
        Output::Json(v) => serde_json::to_string_pretty(&v).expect("serializable") + "\n",
        Output::Svg(s) => s,
    };
    match out {
        Some(p) => write_file(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load<S: Scalar>(input: &Input) -> Result<(Carpet<S>, Source), Error> {
    if let Some(path) = &input.spec {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Spec(carpet_quant::SpecError::Parse { detail: format!("cannot read {}: {e}", path.display()) }))?;
        let spec = parse_carpet::<S>(&text)?;
        let hash = hex(&Sha256::digest(text.as_bytes()));
        Ok((spec, Source { label: path.display().to_string(), hash }))
    } else {
        let name = input.fixture.as_deref().expect("clap enforces one input");
        let spec = fixtures::by_name::<S>(name)
            .ok_or_else(|| Error::Precondition { detail: format!("unknown fixture `{name}`; known: {}", fixture_names()) })?;
        let hash = hex(&Sha256::digest(carpet_to_json(&spec).to_string().as_bytes()));
        Ok((spec, Source { label: format!("fixture:{name}"), hash }))
    }
}

fn fixture_names() -> String {
    fixtures::all::<f64>().iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", ")
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn execute<S: Scalar>(cli: &Cli) -> Result<(), Error> {
    let (spec, source) = load::<S>(&cli.input)?;
    let output = run(cli, &spec, &source)?;
    emit(cli.out.as_deref(), output)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = std::env::var("CARPET_QUANT_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let result = if cli.exact { execute::<Rational>(&cli) } else { execute::<f64>(&cli) };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({ "error": { "code": e.code(), "message": e.to_string() } }));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
