use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use lpf_core::experiments::{run_rmse, run_spread, simulate_trial, ExperimentConfig, ExperimentReport, Scheme};
use lpf_core::filter::run_filter;
use lpf_core::format::fmt_g17;
use lpf_core::lattice::draw_shift;
use lpf_core::seed::derive_seed;
use lpf_core::{generator_for, FilterConfig, LatticeRule, Proposal, Resampling, StateSpaceModel};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::CliError;
use crate::models::{self, ModelKind};
use crate::settings::Settings;

/// Options shared by every subcommand.
pub struct Common {
    pub config: BTreeMap<String, String>,
    pub quiet: bool,
}

impl Common {
    fn progress(&self, msg: &str) {
        if !self.quiet {
            eprintln!("{msg}");
        }
    }
}

fn require_out(out: Option<PathBuf>) -> Result<PathBuf, CliError> {
    out.ok_or_else(|| CliError::Usage("missing output path: pass --out <path>".into()))
}

fn parent_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    let dir = parent_dir(path);
    fs::create_dir_all(&dir).map_err(|e| CliError::io(&dir, e))?;
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

fn opt<T: ToString>(v: Option<T>) -> Option<String> {
    v.map(|x| x.to_string())
}

pub struct LatticeArgs {
    pub n: Option<usize>,
    pub dim: Option<usize>,
    pub generator: Option<u64>,
    pub shift_seed: Option<u64>,
    pub out: Option<PathBuf>,
}

pub fn lattice_gen(common: &Common, args: LatticeArgs) -> Result<(), CliError> {
    let settings = Settings::resolve(
        &[("n", None), ("dim", None), ("generator", None), ("shift_seed", None)],
        &common.config,
        &[
            ("n", opt(args.n)),
            ("dim", opt(args.dim)),
            ("generator", opt(args.generator)),
            ("shift_seed", opt(args.shift_seed)),
        ],
    )?;
    let out = require_out(args.out)?;
    let n: usize = settings.get("n")?;
    let dim: usize = settings.get("dim")?;
    let generator = match settings.get_opt::<u64>("generator")? {
        Some(a) => a,
        None => generator_for(n, dim)?,
    };
    let shift = match settings.get_opt::<u64>("shift_seed")? {
        Some(seed) => draw_shift(dim, &mut ChaCha8Rng::seed_from_u64(seed)),
        None => vec![0.0; dim],
    };
    let rule = LatticeRule::new(n, generator, dim, shift)?;
    let mut csv = String::with_capacity(n * dim * 20);
    let mut row = vec![0.0; dim];
    for i in 0..n {
        rule.point_into(i, &mut row);
        let cells: Vec<String> = row.iter().map(|&x| fmt_g17(x)).collect();
        csv.push_str(&cells.join(","));
        csv.push('\n');
    }
    write_file(&out, &csv)?;
    settings.write(&parent_dir(&out))?;
    common.progress(&format!("wrote {n} points (a={generator}) to {}", out.display()));
    Ok(())
}

pub struct FilterArgs {
    pub model: Option<String>,
    pub scheme: Option<String>,
    pub resample: Option<String>,
    pub n: Option<usize>,
    pub steps: Option<usize>,
    pub seed: Option<u64>,
    pub generator: Option<u64>,
    pub out: Option<PathBuf>,
}

fn model_kind(flag: Option<String>, config: &BTreeMap<String, String>) -> Result<ModelKind, CliError> {
    flag.or_else(|| config.get("model").cloned())
        .ok_or_else(|| CliError::Usage("missing model: pass --model disk|toy|lingauss|body".into()))?
        .parse()
}

pub fn run_filter_cmd(common: &Common, args: FilterArgs) -> Result<(), CliError> {
    let kind = model_kind(args.model, &common.config)?;
    let (n, _, steps) = kind.run_defaults();
    let mut defaults = vec![
        ("model", Some(kind.name().to_string())),
        ("scheme", Some("lpf".to_string())),
        ("resample", Some("residual".to_string())),
        ("n", Some(n.to_string())),
        ("steps", Some(steps.to_string())),
        ("seed", Some("1".to_string())),
    ];
    defaults.extend(kind.parameter_defaults());
    let settings = Settings::resolve(
        &defaults,
        &common.config,
        &[
            ("model", Some(kind.name().to_string())),
            ("scheme", args.scheme),
            ("resample", args.resample),
            ("n", opt(args.n)),
            ("steps", opt(args.steps)),
            ("seed", opt(args.seed)),
            ("generator", opt(args.generator)),
        ],
    )?;
    let out = require_out(args.out)?;
    let csv = match kind {
        ModelKind::Disk => filter_csv(&models::disk(&settings)?, &settings)?,
        ModelKind::Toy => filter_csv(&models::toy(&settings)?, &settings)?,
        ModelKind::Lingauss => filter_csv(&models::lingauss(&settings)?, &settings)?,
        ModelKind::Body => filter_csv(&models::body(&settings)?, &settings)?,
    };
    write_file(&out, &csv)?;
    settings.write(&parent_dir(&out))?;
    common.progress(&format!("wrote filter trace to {}", out.display()));
    Ok(())
}

fn filter_csv<M: StateSpaceModel>(model: &M, s: &Settings) -> Result<String, CliError> {
    let proposal: Proposal = s.get("scheme")?;
    let resampling: Resampling = s.get("resample")?;
    let n: usize = s.get("n")?;
    let steps: usize = s.get("steps")?;
    let seed: u64 = s.get("seed")?;
    if steps == 0 {
        return Err(CliError::Config("steps must be at least 1".into()));
    }
    let mut cfg = FilterConfig::new(n, proposal, resampling, derive_seed(seed, &[0, 1, n as u64]));
    if let Some(a) = s.get_opt::<u64>("generator")? {
        cfg = cfg.with_generator(a);
    }
    // Fail on configuration before spending time on simulation.
    cfg.lattice_rule(model.state_dim())?;
    let (seq, _) = simulate_trial(model, steps, seed, 0)?;
    let means = run_filter(model, &cfg, &seq.states[0], &seq.observations)?;

    let dim = model.state_dim();
    let mut csv = String::from("t");
    for prefix in ["est", "true"] {
        for d in 0..dim {
            write!(csv, ",{prefix}_{d}").unwrap();
        }
    }
    csv.push_str(",error\n");
    for (t, (m, x)) in means.iter().zip(&seq.states).enumerate() {
        let err = m.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        write!(csv, "{t}").unwrap();
        for v in m.iter().chain(x) {
            write!(csv, ",{}", fmt_g17(*v)).unwrap();
        }
        writeln!(csv, ",{}", fmt_g17(err)).unwrap();
    }
    Ok(csv)
}

pub struct BenchArgs {
    pub model: String,
    pub n: Option<String>,
    pub trials: Option<usize>,
    pub steps: Option<usize>,
    pub seed: Option<u64>,
    pub resample: Option<String>,
    pub generator: Option<u64>,
    pub out: Option<PathBuf>,
}

pub fn bench(common: &Common, args: BenchArgs) -> Result<(), CliError> {
    let kind: ModelKind = args.model.parse()?;
    if let Some(m) = common.config.get("model") {
        if m != kind.name() {
            return Err(CliError::Config(format!(
                "config file is for model `{m}` but the command selects `{}`",
                kind.name()
            )));
        }
    }
    let (n, trials, steps) = kind.run_defaults();
    let mut defaults = vec![
        ("model", Some(kind.name().to_string())),
        ("n", Some(n.to_string())),
        ("trials", Some(trials.to_string())),
        ("steps", Some(steps.to_string())),
        ("seed", Some("1".to_string())),
        ("resample", Some("residual".to_string())),
    ];
    defaults.extend(kind.parameter_defaults());
    let settings = Settings::resolve(
        &defaults,
        &common.config,
        &[
            ("n", args.n),
            ("trials", opt(args.trials)),
            ("steps", opt(args.steps)),
            ("seed", opt(args.seed)),
            ("resample", args.resample),
            ("generator", opt(args.generator)),
        ],
    )?;
    let out = require_out(args.out)?;
    let resampling: Resampling = settings.get("resample")?;
    let config = ExperimentConfig {
        model: kind.name().into(),
        schemes: vec![Scheme::pf(resampling), Scheme::lpf(resampling)],
        particle_counts: settings.get_list("n")?,
        trials: settings.get("trials")?,
        steps: settings.get("steps")?,
        base_seed: settings.get("seed")?,
        generator: settings.get_opt("generator")?,
    };
    common.progress(&format!(
        "bench {}: n={:?} trials={} steps={} seed={}",
        kind.name(),
        config.particle_counts,
        config.trials,
        config.steps,
        config.base_seed
    ));
    let report: ExperimentReport = match kind {
        ModelKind::Disk => run_rmse(&models::disk(&settings)?, &config)?,
        ModelKind::Toy => run_rmse(&models::toy(&settings)?, &config)?,
        ModelKind::Lingauss => run_rmse(&models::lingauss(&settings)?, &config)?,
        ModelKind::Body => run_spread(&models::body(&settings)?, &config)?,
    };
    report.write_to_dir(&out).map_err(|e| CliError::io(&out, e))?;
    settings.write(&out)?;
    for skipped in &report.skipped {
        common.progress(&format!("skipped {skipped}"));
    }
    for c in &report.comparisons {
        common.progress(&format!(
            "n={}: {} vs {} variance difference {:.1}%",
            c.n, c.candidate, c.baseline, c.variance_difference_pct
        ));
    }
    common.progress(&format!("wrote report to {}", out.display()));
    Ok(())
}
