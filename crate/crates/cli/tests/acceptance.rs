//! Acceptance suite: one line per criterion with its runtime.

use std::path::PathBuf;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use selfsim::approx::{keep_skip_split, mixture_check, truncated_measure};
use selfsim::dimension::{
    entropy_dimension_estimate, fiber_entropy_estimate, local_dimension_estimate,
};
use selfsim::ek::{block_decompose, kn_trace, ThetaExponents};
use selfsim::fourier::{char_product, decay_scan, depth_for, pisot_scan, DEFAULT_EPS};
use selfsim::measure::{
    component_expectation, conditional_entropy, dyadic_entropy, AtomMeasure, ComponentKind,
};
use selfsim::model::{separation, Environment, Ifs, Model, NonHomogSpec, OverlapVerdict};
use selfsim::recoder::{block_environment, delta_compare, recode_sdim_bound, skip_model};
use selfsim::{Rational, Scalar};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn r(p: i64, q: i64) -> Rational {
    Rational::ratio(p, q)
}

fn int(n: i64) -> Rational {
    Rational::from_int(n)
}

fn dist(a: &Rational, b: &Rational) -> Rational {
    if a > b {
        a - b
    } else {
        b - a
    }
}

/// Random small rational models. Ratios come from a fixed list so that
/// exact arithmetic stays cheap.
struct Gen(ChaCha8Rng);

impl Gen {
    const RATIOS: [(i64, i64); 7] = [(1, 2), (1, 3), (2, 5), (3, 5), (1, 4), (2, 3), (3, 7)];

    fn new(seed: u64) -> Self {
        Gen(ChaCha8Rng::seed_from_u64(seed))
    }

    fn ratio(&mut self) -> Rational {
        let (p, q) = Self::RATIOS[self.0.gen_range(0..Self::RATIOS.len())];
        r(p, q)
    }

    fn probs(&mut self, k: usize) -> Vec<Rational> {
        let ws: Vec<i64> = (0..k).map(|_| self.0.gen_range(1..=4)).collect();
        let total: i64 = ws.iter().sum();
        ws.into_iter().map(|w| r(w, total)).collect()
    }

    fn model(&mut self, max_systems: usize, max_maps: usize) -> Model<Rational> {
        let k = self.0.gen_range(1..=max_systems);
        let systems = (0..k)
            .map(|_| {
                let m = self.0.gen_range(1..=max_maps);
                Ifs {
                    ratio: self.ratio(),
                    translations: (0..m).map(|_| int(self.0.gen_range(-3..=4))).collect(),
                    probs: self.probs(m),
                }
            })
            .collect();
        let q = self.probs(k);
        Model::new(systems, q).unwrap()
    }

    fn spec(&mut self, max_maps: usize) -> NonHomogSpec<Rational> {
        let k = self.0.gen_range(2..=max_maps);
        let mut ts: Vec<i64> = (0..8).collect();
        for i in 0..k {
            let j = self.0.gen_range(i..ts.len());
            ts.swap(i, j);
        }
        let ratios = (0..k).map(|_| self.ratio()).collect();
        let probs = self.probs(k);
        NonHomogSpec::new(ratios, ts[..k].iter().map(|&t| int(t)).collect(), probs).unwrap()
    }

    /// Dyadic-rational atoms in `[-2, 2)`.
    fn measure(&mut self, max_atoms: usize) -> AtomMeasure<Rational> {
        let k = self.0.gen_range(1..=max_atoms);
        let ws: Vec<i64> = (0..k).map(|_| self.0.gen_range(1..=9)).collect();
        let total: i64 = ws.iter().sum();
        let atoms = ws
            .into_iter()
            .map(|w| {
                (
                    Rational::dyadic(self.0.gen_range(-(1i64 << 15)..(1i64 << 15)), 14),
                    r(w, total),
                )
            })
            .collect();
        AtomMeasure::from_atoms(atoms, 0.0).unwrap()
    }
}

fn mixture_identity() -> Outcome {
    let specs = [
        (vec![r(1, 2), r(1, 2)], "1/2,1/2"),
        (vec![r(3, 5), r(1, 2)], "3/5,1/2"),
    ];
    let mut cases = 0;
    let mut worst_float = 0.0f64;
    for (ratios, name) in specs {
        let spec = NonHomogSpec::new(ratios, vec![int(0), int(1)], vec![r(1, 2), r(1, 2)]).unwrap();
        let fspec: NonHomogSpec<f64> = NonHomogSpec::new(
            spec.ratios.iter().map(|x| x.to_f64()).collect(),
            vec![0.0, 1.0],
            vec![0.5, 0.5],
        )
        .unwrap();
        for rr in 1..=3 {
            for n in 1..=12 / rr {
                let exact = mixture_check(&spec, rr, n).unwrap();
                if exact.tv != 0.0 || !exact.direct.same_atoms(&exact.mixture) {
                    return outcome(false, format!("λ=({name}) r={rr} n={n}: tv={}", exact.tv));
                }
                let float = mixture_check(&fspec, rr, n).unwrap();
                worst_float = worst_float.max(float.tv);
                cases += 1;
            }
        }
    }
    outcome(
        worst_float <= 1e-12,
        format!("{cases} cases exact; worst float tv {worst_float:.1e}"),
    )
}

fn keep_skip_identity() -> Outcome {
    let mut g = Gen::new(2);
    let mut checks = 0;
    for m in 0..50 {
        let model = g.model(3, 2);
        let env = Environment::random(m);
        for s in 2..=4 {
            for depth in 1..=12 {
                let (keep, skip) = keep_skip_split(&model, &env, s, depth).unwrap();
                let whole = truncated_measure(&model, &env, depth).unwrap();
                if !keep.convolve(&skip, 1 << 22).unwrap().same_atoms(&whole) {
                    return outcome(false, format!("model {m} s={s} depth={depth}"));
                }
                checks += 1;
            }
        }
    }
    outcome(true, format!("{checks} (model, s, depth) cases atom-exact"))
}

fn entropy_algebra() -> Outcome {
    let mut g = Gen::new(3);
    let mut worst = [0.0f64; 3];
    let (lo, hi) = (Rational::dyadic(-3, 2), Rational::dyadic(5, 3));
    for _ in 0..200 {
        let mu = g.measure(40);
        let direct: f64 = mu
            .atoms()
            .filter(|(x, _)| **x >= lo && **x < hi)
            .map(|(_, w)| w.to_f64())
            .sum();
        for n in 0..=12u32 {
            let coarse = dyadic_entropy(&mu, n).unwrap();
            let mass = component_expectation(&mu, n..=n, ComponentKind::Raw, |c| {
                c.atoms()
                    .filter(|(x, _)| **x >= lo && **x < hi)
                    .map(|(_, w)| w.to_f64())
                    .sum::<f64>()
            })
            .unwrap();
            worst[1] = worst[1].max((mass - direct).abs());
            for m in 1..=12u32 {
                let fine = dyadic_entropy(&mu, n + m).unwrap();
                let cond = conditional_entropy(&mu, n + m, n).unwrap();
                worst[0] = worst[0].max((fine - coarse - cond).abs());
                let lhs = component_expectation(&mu, n..=n, ComponentKind::Rescaled, |c| {
                    dyadic_entropy(c, m).unwrap() / m as f64
                })
                .unwrap();
                worst[2] = worst[2].max((lhs - cond / m as f64).abs());
            }
        }
    }
    outcome(
        worst.iter().all(|&w| w <= 1e-10),
        format!(
            "chain rule {:.1e}, cell decomposition {:.1e}, component identity {:.1e}",
            worst[0], worst[1], worst[2]
        ),
    )
}

fn uniform_bernoulli() -> Outcome {
    let model = Model::uniform(r(1, 2), vec![int(0), int(1)]).unwrap();
    let env = Environment::constant(0, 1 << 12);
    let depth = selfsim::approx::scale_index(&model, &env, 16).unwrap();
    let nu = truncated_measure(&model, &env, depth).unwrap();
    let h = dyadic_entropy(&nu, 16).unwrap() / 16.0;
    let a = (h / (17.0 / 16.0) - 1.0).abs() <= 0.05;

    let fm: Model<f64> = model.convert().unwrap();
    let mut worst = 0.0f64;
    for k in 0..=1000 {
        let xi = 0.1 * 1000f64.powf(k as f64 / 1000.0);
        let d = depth_for(&fm, &env, xi, DEFAULT_EPS).unwrap();
        let v = char_product(&fm, &env, xi, d).unwrap().value;
        let px = std::f64::consts::PI * xi;
        let amp = px.sin() / px;
        worst =
            worst.max(((v.re - px.cos() * amp).powi(2) + (v.im - px.sin() * amp).powi(2)).sqrt());
    }
    let b = worst <= 1e-6;

    let scan = decay_scan(&fm, &env, 1000.0, 12, 64).unwrap();
    let c = (scan.sigma_hat - 1.0).abs() <= 0.1;
    outcome(
        a && b && c,
        format!(
            "H_16 = {h:.4} (target {:.4}); closed-form gap {worst:.1e}; sigma_hat {:.3}",
            17.0 / 16.0,
            scan.sigma_hat
        ),
    )
}

fn golden_pisot() -> Outcome {
    let theta = (1.0 + 5f64.sqrt()) / 2.0;
    let env = Environment::constant(0, 1 << 12);
    let golden: Model<f64> = Model::uniform(1.0 / theta, vec![0.0, 1.0]).unwrap();
    let sep = separation(&golden, &env, 3).unwrap();
    let overlap = matches!(sep.verdict, OverlapVerdict::Exact | OverlapVerdict::Near);

    // translations ±1: the {0, 1} measure has a factor cos(π/2) = 0 at every θ^n
    let symmetric: Model<f64> = Model::uniform(1.0 / theta, vec![-1.0, 1.0]).unwrap();
    let rows = pisot_scan(&symmetric, &env, theta, 30, 4096).unwrap();
    let (n_min, m_min) =
        rows.iter()
            .map(|row| (row.n, row.modulus))
            .fold(
                (0, f64::INFINITY),
                |acc, x| if x.1 < acc.1 { x } else { acc },
            );
    let gap = rows.iter().map(|row| row.route_gap).fold(0.0, f64::max);
    let plain = pisot_scan(&golden, &env, theta, 30, 4096).unwrap();
    let plain_max = plain.iter().map(|row| row.modulus).fold(0.0, f64::max);
    outcome(
        overlap && m_min >= 0.01 && gap <= 1e-9,
        format!(
            "level-3 verdict {:?}; symmetric min |η̂(θ^n)| = {m_min:.4} at n={n_min}; route gap {gap:.1e}; \
             {{0,1}} max |η̂(θ^n)| = {plain_max:.1e}",
            sep.verdict
        ),
    )
}

fn sdim_identities() -> Outcome {
    let mut g = Gen::new(6);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let model = g.model(3, 3);
        for s in 2..=6 {
            let skip = skip_model(&model, s).unwrap();
            let expect = (1.0 - 1.0 / s as f64) * model.similarity_dimension();
            worst = worst.max((skip.similarity_dimension() - expect).abs());
        }
    }
    let mut failures = 0;
    for _ in 0..100 {
        let spec = g.spec(3);
        for rr in 1..=6 {
            if !recode_sdim_bound(&spec, rr).unwrap().holds() {
                failures += 1;
            }
        }
    }
    outcome(
        worst <= 1e-12 && failures == 0,
        format!("skip identity worst {worst:.1e}; recoding bound failures {failures}/600"),
    )
}

const PISOT: [f64; 9] = [
    2.0,
    3.0,
    1.618_033_988_749_895,
    2.618_033_988_749_895,
    2.414_213_562_373_095,
    3.732_050_807_568_877,
    1.324_717_957_244_746,
    1.465_571_231_876_768,
    1.839_286_755_214_161,
];

fn ek_recursion() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut traces, mut predictions, mut unique) = (0, 0, 0);
    let (mut residual_fail, mut unique_fail) = (0, 0);
    while traces < 10_000 {
        let betas: &[f64] = match rng.gen_range(0..3) {
            0 => &[1.0],
            1 => &[1.0, 2.0],
            _ => &[1.0, 1.0, 3.0],
        };
        let k = betas.len();
        let q0 = if k == 1 { 1.0 } else { rng.gen_range(0.5..0.9) };
        let mut marginal = vec![q0];
        marginal.extend(std::iter::repeat_n(
            (1.0 - q0) / (k - 1).max(1) as f64,
            k - 1,
        ));
        let m = rng.gen_range(3..=14);
        let env = Environment::random(rng.gen());
        let blocks = block_decompose(&env, &marginal, m + 1).unwrap();
        let ex = ThetaExponents::new(betas, &blocks, m).unwrap();
        let pisot = rng.gen_bool(0.5);
        let (theta, interval) = if pisot {
            let t = PISOT[rng.gen_range(0..PISOT.len())];
            (t, (t - 0.01, t + 0.01))
        } else {
            let a = rng.gen_range(1.1..2.5);
            let b = a + rng.gen_range(0.0..0.5);
            (rng.gen_range(a..=b), (a, b))
        };
        let tau_max = theta.powf(ex.tau_max_exponent());
        let tau = if pisot && rng.gen_bool(0.5) {
            theta
                .powi(rng.gen_range(0..=ex.tau_max_exponent() as i32))
                .min(tau_max)
        } else if pisot {
            (rng.gen_range(1..=3) as f64).min(tau_max)
        } else {
            rng.gen_range(1.0..=tau_max)
        };
        let top = ex.sub.iter().cloned().fold(0.0, f64::max) * theta.log2() + tau.log2();
        if top > 110.0 {
            continue;
        }
        let t = kn_trace(theta, interval, betas, &blocks, m, tau).unwrap();
        traces += 1;
        for n in 0..=m - 3 {
            let Ok(p) = t.predict_k(n) else { continue };
            predictions += 1;
            if !p.residual_ok() {
                residual_fail += 1;
            }
            if p.unique {
                unique += 1;
                if p.candidate != t.k[n + 2] {
                    unique_fail += 1;
                }
            }
        }
    }
    outcome(
        residual_fail == 0 && unique_fail == 0 && unique > 0,
        format!(
            "{traces} traces, {predictions} predictions; {unique} met the remainder condition; \
             uniqueness failures {unique_fail}; residual violations {residual_fail}"
        ),
    )
}

fn dimension_estimators() -> Outcome {
    let mut lines = Vec::new();
    let mut pass = true;
    let cases: [(&str, Model<f64>, f64); 2] = [
        (
            "cantor",
            Model::uniform(1.0 / 3.0, vec![0.0, 2.0]).unwrap(),
            2f64.ln() / 3f64.ln(),
        ),
        ("uniform", Model::uniform(0.5, vec![0.0, 1.0]).unwrap(), 1.0),
    ];
    let env = Environment::constant(0, 1 << 12);
    for (name, model, target) in cases {
        let ball = local_dimension_estimate(&model, &env, &[14, 15, 16], 1000, 1).unwrap();
        let scales: Vec<u32> = (8..=16).collect();
        let entropy = entropy_dimension_estimate(&model, &env, &scales).unwrap();
        let mut est = vec![ball.alpha, entropy.alpha];
        for n in [14, 16] {
            est.push(
                fiber_entropy_estimate(&model, &env, n, 1000, 1)
                    .unwrap()
                    .alpha,
            );
        }
        pass &= est.iter().all(|a| (a - target).abs() <= 0.05);
        lines.push(format!(
            "{name}: ball {:.4} entropy {:.4} fiber {:.4}/{:.4} (target {target:.4})",
            est[0], est[1], est[2], est[3]
        ));
    }
    outcome(pass, lines.join("; "))
}

fn min_gap(offsets: &[Rational]) -> Option<Rational> {
    let mut best: Option<Rational> = None;
    for a in 0..offsets.len() {
        for b in a + 1..offsets.len() {
            let d = dist(&offsets[a], &offsets[b]);
            if best.as_ref().is_none_or(|x| d < *x) {
                best = Some(d);
            }
        }
    }
    best
}

fn delta_comparison() -> Outcome {
    let mut g = Gen::new(9);
    let (mut cases, mut vacuous) = (0, 0);
    for m in 0..100 {
        let model = g.model(2, 2);
        let env = Environment::random(1000 + m);
        for s in 2..=3 {
            let skip = skip_model(&model, s).unwrap();
            for ell in 1..=3 {
                let benv = block_environment(&model, &env, s, ell).unwrap();
                let (lhs, _) = skip
                    .enumerate_words(&skip.realize(&benv, ell).unwrap())
                    .unwrap();
                let (rhs, _) = model
                    .enumerate_words(&model.realize(&env, s * ell).unwrap())
                    .unwrap();
                let full = min_gap(&rhs).unwrap_or_else(|| int(0));
                let c = delta_compare(&model, &env, s, ell).unwrap();
                match min_gap(&lhs) {
                    None => {
                        vacuous += 1;
                        if !c.vacuous {
                            return outcome(
                                false,
                                format!("model {m} s={s} ℓ={ell}: single word not flagged"),
                            );
                        }
                    }
                    Some(skip_gap) => {
                        if skip_gap < full || c.skip_gap != skip_gap || c.full_gap != full {
                            return outcome(
                                false,
                                format!("model {m} s={s} ℓ={ell}: skip {skip_gap} < full {full}"),
                            );
                        }
                    }
                }
                cases += 1;
            }
        }
    }
    outcome(
        true,
        format!("{cases} cases by pairwise enumeration; {vacuous} with a single skip word"),
    )
}

fn specs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../specs")
}

fn determinism() -> Outcome {
    let specs = specs_dir();
    let spec = |name: &str| specs.join(name).to_string_lossy().into_owned();
    let runs: Vec<Vec<String>> = vec![
        vec![
            "sample".into(),
            spec("two_systems.toml"),
            "--n".into(),
            "10".into(),
            "--count".into(),
            "3000".into(),
            "--seed".into(),
            "5".into(),
        ],
        vec![
            "dim".into(),
            spec("cantor.toml"),
            "--method".into(),
            "ball".into(),
            "--n".into(),
            "8,9,10".into(),
            "--samples".into(),
            "600".into(),
            "--seed".into(),
            "3".into(),
        ],
        vec![
            "dim".into(),
            spec("two_systems.toml"),
            "--method".into(),
            "fiber".into(),
            "--n".into(),
            "10".into(),
            "--samples".into(),
            "600".into(),
            "--seed".into(),
            "3".into(),
        ],
        vec![
            "dim".into(),
            spec("two_systems.toml"),
            "--method".into(),
            "entropy".into(),
            "--n".into(),
            "4,6,8".into(),
        ],
        vec![
            "entropy".into(),
            spec("two_systems.toml"),
            "--n".into(),
            "4,8".into(),
            "--seed".into(),
            "8".into(),
        ],
        vec![
            "fourier".into(),
            spec("two_systems.toml"),
            "--xi-max".into(),
            "300".into(),
            "--bands".into(),
            "6".into(),
            "--samples".into(),
            "16".into(),
        ],
        vec![
            "ek".into(),
            "--theta-interval".into(),
            "1.5,2.5".into(),
            "--M".into(),
            "8".into(),
            "--theta-grid".into(),
            "24".into(),
            "--tau-grid".into(),
            "6".into(),
            "--betas".into(),
            "1,2".into(),
            "--seed".into(),
            "11".into(),
        ],
    ];
    let bin = env!("CARGO_BIN_EXE_selfsim");
    for args in &runs {
        let mut outputs = Vec::new();
        for threads in ["1", "4", "1", "4"] {
            let out = Command::new(bin)
                .arg("--threads")
                .arg(threads)
                .args(args)
                .output()
                .unwrap();
            if !out.status.success() {
                return outcome(
                    false,
                    format!(
                        "`{}` exited {:?}: {}",
                        args.join(" "),
                        out.status.code(),
                        String::from_utf8_lossy(&out.stderr)
                    ),
                );
            }
            outputs.push(out.stdout);
        }
        if outputs.iter().any(|o| *o != outputs[0]) || outputs[0].is_empty() {
            return outcome(false, format!("`{}` output differs between runs", args[0]));
        }
    }
    outcome(
        true,
        format!(
            "{} subcommand runs byte-identical across 2 runs x threads {{1, 4}}",
            runs.len()
        ),
    )
}

/// Number, name, time budget, check.
type Criterion = (u32, &'static str, Option<Duration>, fn() -> Outcome);

fn main() {
    let criteria: [Criterion; 10] = [
        (
            1,
            "exact mixture identity",
            Some(Duration::from_secs(10)),
            mixture_identity,
        ),
        (
            2,
            "keep/skip convolution identity",
            Some(Duration::from_secs(30)),
            keep_skip_identity,
        ),
        (
            3,
            "entropy algebra",
            Some(Duration::from_secs(10)),
            entropy_algebra,
        ),
        (
            4,
            "uniform Bernoulli convolution",
            Some(Duration::from_secs(60)),
            uniform_bernoulli,
        ),
        (
            5,
            "golden-ratio Pisot behaviour",
            Some(Duration::from_secs(30)),
            golden_pisot,
        ),
        (
            6,
            "similarity-dimension identities",
            Some(Duration::from_secs(10)),
            sdim_identities,
        ),
        (
            7,
            "integer-part recursion",
            Some(Duration::from_secs(60)),
            ek_recursion,
        ),
        (
            8,
            "dimension estimators",
            Some(Duration::from_secs(120)),
            dimension_estimators,
        ),
        (
            9,
            "separation comparison",
            Some(Duration::from_secs(30)),
            delta_comparison,
        ),
        (10, "determinism", None, determinism),
    ];
    let filter: Vec<u32> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = 0;
    for (id, name, budget, run) in criteria {
        if !filter.is_empty() && !filter.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let out = run();
        let took = start.elapsed();
        let in_time = budget.is_none_or(|b| took <= b);
        let pass = out.pass && in_time;
        if !pass {
            failed += 1;
        }
        let budget = budget.map_or(String::new(), |b| format!(" (limit {}s)", b.as_secs()));
        println!(
            "{} {id:>2} {name}: {} [{:.2}s{budget}]",
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            took.as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
