use std::fmt;
use std::path::Path;

use anyhow::{Context, Result};
use selfsim::approx::{
    eta_decomposition, mixture_check, sample_measure, scale_index, truncated_measure,
};
use selfsim::dimension::{
    concentration_diagnostic, entropy_dimension_estimate, fiber_entropy_estimate,
    frostman_exponent, local_dimension_estimate, DimensionEstimate,
};
use selfsim::ek::{block_decompose, ek_cover_scan, kn_trace};
use selfsim::fourier::{decay_scan, pisot_scan};
use selfsim::measure::dyadic_entropy;
use selfsim::model::{separation, Environment, Limits, Model};
use selfsim::recoder::{block_recode, keep_model, recode_sdim_bound, skip_model};
use selfsim::spec_file::{ModelFile, NonHomogFile};
use selfsim::{Rational, Scalar};

use crate::output::{emit, flag, num, scalar, write_atomic, Table};
use crate::{Cli, Command, DimMethod, EkArgs, Global, Mode, ModelCmd};

/// Bad or missing command-line input detected after parsing.
#[derive(Debug)]
pub struct Usage(pub String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Usage(msg.into()).into()
}

macro_rules! in_mode {
    ($exact:expr, $func:ident ( $($arg:expr),* $(,)? )) => {
        if $exact {
            $func::<Rational>($($arg),*)
        } else {
            $func::<f64>($($arg),*)
        }
    };
}

fn exact_mode(g: &Global, file_is_exact: bool) -> bool {
    match g.mode {
        Mode::Exact => true,
        Mode::Float => false,
        Mode::Auto => file_is_exact,
    }
}

fn read_model_file(path: &Path) -> Result<ModelFile> {
    ModelFile::read(path).with_context(|| format!("reading {}", path.display()))
}

fn limits(g: &Global) -> Limits {
    Limits {
        max_atoms: g.atom_cap,
        max_words: g.word_cap,
    }
}

fn build<S: Scalar>(file: &ModelFile, g: &Global) -> Result<Model<S>> {
    Ok(file.model::<S>()?.with_limits(limits(g)))
}

fn require_seed(seed: Option<u64>, what: &str) -> Result<u64> {
    seed.ok_or_else(|| usage(format!("{what} needs --seed")))
}

pub fn run(cli: &Cli) -> Result<()> {
    let g = &cli.global;
    let out = g.output.as_deref();
    match &cli.command {
        Command::Model(ModelCmd::Validate { spec, seed }) => {
            let f = read_model_file(spec)?;
            let text = in_mode!(
                exact_mode(g, f.is_exact()),
                validate(&f, g, *seed, false, 0)
            )?;
            print!("{text}");
            Ok(())
        }
        Command::Model(ModelCmd::Describe { spec, levels, seed }) => {
            let f = read_model_file(spec)?;
            let text = in_mode!(
                exact_mode(g, f.is_exact()),
                validate(&f, g, *seed, true, *levels)
            )?;
            print!("{text}");
            Ok(())
        }
        Command::Entropy { spec, n, seed } => {
            let f = read_model_file(spec)?;
            let bytes = in_mode!(exact_mode(g, f.is_exact()), entropy(&f, g, *seed, n))?;
            emit(&bytes, out)
        }
        Command::Fourier {
            spec,
            xi_max,
            bands,
            samples,
            along_powers,
            n_max,
            check_atoms,
            seed,
        } => {
            let f = read_model_file(spec)?;
            let model: Model<f64> = build(&f, g)?;
            let env = f.environment(*seed)?;
            let bytes = match along_powers {
                Some(theta) => powers(&model, &env, *theta, *n_max, *check_atoms)?,
                None => bands_table(&model, &env, *xi_max, *bands, *samples)?,
            };
            emit(&bytes, out)
        }
        Command::Ek(args) => emit(&ek(args)?, out),
        Command::Recode {
            spec,
            r,
            s,
            spec_out,
            keep_out,
            skip_out,
            seed,
        } => {
            let f =
                NonHomogFile::read(spec).with_context(|| format!("reading {}", spec.display()))?;
            let r = r
                .or(f.r)
                .ok_or_else(|| usage("block length: give --r or set r in the file"))?;
            let s = s.or(f.s);
            let paths = RecodeOutputs {
                spec: spec_out.as_deref(),
                keep: keep_out.as_deref(),
                skip: skip_out.as_deref(),
            };
            let bytes = in_mode!(
                exact_mode(g, f.is_exact()),
                recode(&f, g, r, s, *seed, &paths)
            )?;
            emit(&bytes, out)
        }
        Command::Dim {
            spec,
            method,
            n,
            samples,
            seed,
            q,
        } => {
            let f = read_model_file(spec)?;
            let bytes = in_mode!(
                exact_mode(g, f.is_exact()),
                dim(&f, g, *method, n, *samples, *seed, *q)
            )?;
            emit(&bytes, out)
        }
        Command::Decompose { spec, n, seed } => {
            let f = read_model_file(spec)?;
            let bytes = in_mode!(exact_mode(g, f.is_exact()), decompose(&f, g, *n, *seed))?;
            emit(&bytes, out)
        }
        Command::Sample {
            spec,
            n,
            count,
            seed,
        } => {
            let f = read_model_file(spec)?;
            let bytes = in_mode!(
                exact_mode(g, f.is_exact()),
                sample(&f, g, *n, *count, *seed)
            )?;
            emit(&bytes, out)
        }
        Command::MixtureCheck { spec, r, n } => {
            let f =
                NonHomogFile::read(spec).with_context(|| format!("reading {}", spec.display()))?;
            let bytes = in_mode!(exact_mode(g, f.is_exact()), mixture(&f, *r, *n))?;
            emit(&bytes, out)
        }
    }
}

fn validate<S: Scalar>(
    f: &ModelFile,
    g: &Global,
    seed: Option<u64>,
    detailed: bool,
    levels: usize,
) -> Result<String> {
    use std::fmt::Write;
    let model: Model<S> = build(f, g)?;
    let mut s = String::new();
    writeln!(s, "mode: {}", S::NAME)?;
    writeln!(s, "systems: {}", model.index_count())?;
    writeln!(s, "R: {}", model.radius())?;
    writeln!(s, "lambda_min: {}", model.lambda_min())?;
    writeln!(s, "lambda_max: {}", model.lambda_max())?;
    writeln!(s, "non_degenerate: {}", model.is_non_degenerate())?;
    writeln!(s, "similarity_dimension: {}", model.similarity_dimension())?;
    if !detailed {
        return Ok(s);
    }
    writeln!(s, "mean_entropy_bits: {}", model.mean_prob_entropy())?;
    writeln!(s, "mean_lyapunov_bits: {}", model.mean_lyapunov())?;
    for (i, sys) in model.systems().iter().enumerate() {
        let ts: Vec<String> = sys.translations.iter().map(|t| t.to_string()).collect();
        let ps: Vec<String> = sys.probs.iter().map(|p| p.to_string()).collect();
        writeln!(
            s,
            "system {}: q = {}, ratio = {}, translations = [{}], probs = [{}]",
            i + 1,
            model.marginal()[i],
            sys.ratio,
            ts.join(", "),
            ps.join(", ")
        )?;
    }
    let env = f.environment(seed)?;
    let symbols = model.realize(&env, levels)?;
    let word: Vec<String> = symbols.iter().map(|i| (i + 1).to_string()).collect();
    writeln!(s, "environment: {}", word.join(" "))?;
    for n in 1..=levels {
        let sep = separation(&model, &env, n)?;
        writeln!(
            s,
            "separation {n}: {} ({:?}, {} words)",
            sep.value(),
            sep.verdict,
            sep.words
        )?;
    }
    Ok(s)
}

fn entropy<S: Scalar>(f: &ModelFile, g: &Global, seed: Option<u64>, ns: &[u32]) -> Result<Vec<u8>> {
    let model: Model<S> = build(f, g)?;
    let env = f.environment(seed)?;
    let mut t = Table::new(&["n", "depth", "atoms", "entropy", "normalized"])?;
    for &n in ns {
        if n == 0 {
            return Err(usage("levels must be positive"));
        }
        let depth = scale_index(&model, &env, n)?;
        let nu = truncated_measure(&model, &env, depth)?;
        let h = dyadic_entropy(&nu, n)?;
        t.row([
            n.to_string(),
            depth.to_string(),
            nu.len().to_string(),
            num(h),
            num(h / n as f64),
        ])?;
    }
    t.into_bytes()
}

fn bands_table(
    model: &Model<f64>,
    env: &Environment,
    xi_max: f64,
    bands: usize,
    samples: usize,
) -> Result<Vec<u8>> {
    let scan = decay_scan(model, env, xi_max, bands, samples)?;
    eprintln!("sigma_hat: {}", scan.sigma_hat);
    let mut t = Table::new(&["band_lo", "band_hi", "sup_modulus", "depth"])?;
    for b in &scan.bands {
        t.row([
            num(b.lo),
            num(b.hi),
            num(b.sup_modulus),
            b.depth.to_string(),
        ])?;
    }
    t.into_bytes()
}

fn powers(
    model: &Model<f64>,
    env: &Environment,
    theta: f64,
    n_max: u32,
    check_atoms: usize,
) -> Result<Vec<u8>> {
    let rows = pisot_scan(model, env, theta, n_max, check_atoms)?;
    let mut t = Table::new(&["n", "xi", "modulus", "depth", "check_depth", "route_gap"])?;
    for r in &rows {
        t.row([
            r.n.to_string(),
            num(r.xi),
            num(r.modulus),
            r.depth.to_string(),
            r.check_depth.to_string(),
            num(r.route_gap),
        ])?;
    }
    t.into_bytes()
}

fn ek(a: &EkArgs) -> Result<Vec<u8>> {
    let (lo, hi) = match a.theta_interval.as_slice() {
        [lo, hi] => (*lo, *hi),
        _ => return Err(usage("--theta-interval takes two values a,b")),
    };
    let k = a.betas.len();
    let marginal = if a.marginal.is_empty() {
        vec![1.0 / k as f64; k]
    } else if a.marginal.len() == k {
        let total: f64 = a.marginal.iter().sum();
        a.marginal.iter().map(|q| q / total).collect()
    } else {
        return Err(usage("--marginal needs one value per exponent"));
    };
    let seed = match (k, a.seed) {
        (1, s) => s.unwrap_or(0),
        (_, Some(s)) => s,
        _ => return Err(usage("more than one symbol: the environment needs --seed")),
    };
    let env = Environment::random(seed);
    let blocks = block_decompose(&env, &marginal, a.m + 1)?;

    if let Some(pair) = &a.trace {
        let tr = kn_trace(pair[0], (lo, hi), &a.betas, &blocks, a.m, pair[1])?;
        let mut t = Table::new(&["n", "K", "eps", "B", "rho_n"])?;
        for n in 0..tr.m() {
            let (b, rho) = match (tr.b.get(n), tr.rho.get(n)) {
                (Some(b), Some(r)) => (num(*b), num(*r)),
                _ => (String::new(), String::new()),
            };
            t.row([n.to_string(), tr.k[n].to_string(), num(tr.eps[n]), b, rho])?;
        }
        return t.into_bytes();
    }

    let scan = ek_cover_scan(
        (lo, hi),
        &a.betas,
        &blocks,
        a.m,
        a.rho,
        a.delta,
        a.theta_grid,
        a.tau_grid,
    )?;
    eprintln!("exceptional: {} of {}", scan.exceptional, scan.grid_size);
    let mut t = Table::new(&["theta", "max_tau_freq", "exceptional"])?;
    for r in &scan.rows {
        t.row([num(r.theta), num(r.max_tau_freq), flag(r.exceptional)])?;
    }
    t.into_bytes()
}

struct RecodeOutputs<'a> {
    spec: Option<&'a Path>,
    keep: Option<&'a Path>,
    skip: Option<&'a Path>,
}

fn write_model<S: Scalar>(model: &Model<S>, env: &Environment, path: &Path) -> Result<()> {
    let text = ModelFile::from_model(model, env).to_toml()?;
    write_atomic(path, text.as_bytes())
}

fn recode<S: Scalar>(
    f: &NonHomogFile,
    g: &Global,
    r: usize,
    s: Option<usize>,
    seed: Option<u64>,
    paths: &RecodeOutputs,
) -> Result<Vec<u8>> {
    let spec = f.spec::<S>()?;
    let rec = block_recode(&spec, r)?;
    let model = rec.model.clone().with_limits(limits(g));
    let env = Environment::with_prefix(Vec::new(), seed);
    let bound = recode_sdim_bound(&spec, r)?;
    eprintln!(
        "similarity dimension: original {}, recoded {}, lower bound {}",
        bound.original, bound.recoded, bound.bound
    );
    if let Some(p) = paths.spec {
        write_model(&model, &env, p)?;
    }
    if (paths.keep.is_some() || paths.skip.is_some()) && s.is_none() {
        return Err(usage("keep/skip output needs --s"));
    }
    if let Some(s) = s {
        let skip = skip_model(&model, s)?;
        eprintln!(
            "skip model similarity dimension: {} ((1 - 1/s) times recoded: {})",
            skip.similarity_dimension(),
            (1.0 - 1.0 / s as f64) * model.similarity_dimension()
        );
        if let Some(p) = paths.skip {
            write_model(&skip, &env, p)?;
        }
        if let Some(p) = paths.keep {
            write_model(&keep_model(&model, s)?, &env, p)?;
        }
    }
    let mut t = Table::new(&["class", "count", "ratio", "q"])?;
    for (i, counts) in rec.classes.iter().enumerate() {
        let c: Vec<String> = counts.iter().map(|n| n.to_string()).collect();
        t.row([
            (i + 1).to_string(),
            c.join(" "),
            scalar(&model.system(i).ratio),
            scalar(&model.marginal()[i]),
        ])?;
    }
    t.into_bytes()
}

fn summary(e: &DimensionEstimate) {
    eprintln!(
        "method: {}, alpha: {}, stderr: {}, degenerate: {}, out_of_range: {}",
        e.method.name(),
        e.alpha,
        e.stderr,
        e.degenerate,
        e.out_of_range
    );
}

fn dim<S: Scalar>(
    f: &ModelFile,
    g: &Global,
    method: DimMethod,
    ns: &[u32],
    samples: usize,
    seed: Option<u64>,
    q: u32,
) -> Result<Vec<u8>> {
    let model: Model<S> = build(f, g)?;
    let env = f.environment(seed)?;
    match method {
        DimMethod::Ball => {
            let seed = require_seed(seed, "ball-mass sampling")?;
            let e = local_dimension_estimate(&model, &env, ns, samples, seed)?;
            summary(&e);
            let mut t = Table::new(&["n", "log2_radius", "mean_log2_mass"])?;
            for r in &e.records {
                t.row([r.n.to_string(), num(r.log2_radius), num(r.value)])?;
            }
            t.into_bytes()
        }
        DimMethod::Entropy => {
            let e = entropy_dimension_estimate(&model, &env, ns)?;
            summary(&e);
            let mut t = Table::new(&["n", "normalized_entropy"])?;
            for r in &e.records {
                t.row([r.n.to_string(), num(r.value)])?;
            }
            t.into_bytes()
        }
        DimMethod::Fiber => {
            let seed = require_seed(seed, "fiber sampling")?;
            let mut t = Table::new(&[
                "n",
                "alpha1",
                "alpha1_mean",
                "alpha2",
                "alpha2_single",
                "alpha2_stderr",
                "lyapunov",
                "alpha",
                "depth",
                "samples",
            ])?;
            for &n in ns {
                let e = fiber_entropy_estimate(&model, &env, n as usize, samples, seed)?;
                t.row([
                    n.to_string(),
                    num(e.alpha1),
                    num(e.alpha1_mean),
                    num(e.alpha2),
                    num(e.alpha2_single),
                    num(e.alpha2_stderr),
                    num(e.lyapunov),
                    num(e.alpha),
                    e.depth.to_string(),
                    e.samples.to_string(),
                ])?;
            }
            t.into_bytes()
        }
        DimMethod::Frostman => {
            let fit = frostman_exponent(&model, &env, ns)?;
            eprintln!(
                "rho_hat: {}, c_hat: {}, rho_formula: {}, separation_depth: {}",
                fit.rho_hat, fit.c_hat, fit.rho_formula, fit.separation_depth
            );
            let mut t = Table::new(&["n", "log2_radius", "log2_sup_mass"])?;
            for r in &fit.records {
                t.row([r.n.to_string(), num(r.log2_radius), num(r.value)])?;
            }
            t.into_bytes()
        }
        DimMethod::Concentration => {
            let rows = concentration_diagnostic(&model, &env, ns, q)?;
            let mut t = Table::new(&[
                "n",
                "depth",
                "separation",
                "verdict",
                "log2_sep_rate",
                "entropy",
                "sdim",
                "separated_at_cell",
                "distinct_cells",
                "equality",
            ])?;
            for r in &rows {
                t.row([
                    r.n.to_string(),
                    r.depth.to_string(),
                    num(r.separation),
                    format!("{:?}", r.verdict).to_lowercase(),
                    num(r.log2_sep_rate),
                    num(r.entropy),
                    num(r.sdim),
                    flag(r.separated_at_cell),
                    flag(r.distinct_cells),
                    flag(r.equality),
                ])?;
            }
            t.into_bytes()
        }
    }
}

fn decompose<S: Scalar>(f: &ModelFile, g: &Global, n: u32, seed: Option<u64>) -> Result<Vec<u8>> {
    let model: Model<S> = build(f, g)?;
    let env = f.environment(seed)?;
    let d = eta_decomposition(&model, &env, n)?;
    eprintln!(
        "scale_index: {}, atoms: {}, tail_radius: {}",
        d.scale_index,
        d.nu.len(),
        d.tail_radius
    );
    let mut t = Table::new(&["position", "weight"])?;
    for (x, w) in d.nu.atoms() {
        t.row([scalar(x), scalar(w)])?;
    }
    t.into_bytes()
}

fn sample<S: Scalar>(
    f: &ModelFile,
    g: &Global,
    n: u32,
    count: usize,
    seed: u64,
) -> Result<Vec<u8>> {
    let model: Model<S> = build(f, g)?;
    let env = f.environment(Some(seed))?;
    let depth = scale_index(&model, &env, n)?;
    let xs = sample_measure(&model, &env, depth, count, seed)?;
    let mut t = Table::new(&["index", "x"])?;
    for (i, x) in xs.iter().enumerate() {
        t.row([i.to_string(), num(*x)])?;
    }
    t.into_bytes()
}

fn mixture<S: Scalar>(f: &NonHomogFile, r: usize, n: usize) -> Result<Vec<u8>> {
    let spec = f.spec::<S>()?;
    let m = mixture_check(&spec, r, n)?;
    let mut t = Table::new(&[
        "r",
        "n",
        "environments",
        "direct_atoms",
        "mixture_atoms",
        "tv",
    ])?;
    t.row([
        r.to_string(),
        n.to_string(),
        m.environments.to_string(),
        m.direct.len().to_string(),
        m.mixture.len().to_string(),
        num(m.tv),
    ])?;
    t.into_bytes()
}
