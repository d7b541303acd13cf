use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use survey_di::calibration::{build_controls, regdi_total, solve_weights, BigSummaries, ControlVariant, SampleColumns};
use survey_di::classifier::{em_fit, estimate_m, initial_u, pdi2_total, propensity_totals, ClassifierModel, EmOptions, LevelDomain};
use survey_di::estimators::{ht_total, pdi_total, ratio_di_total, BigDataTotals, EstimateReport};
use survey_di::io::{self as sio, BigDataFile, SampleFile};
use survey_di::mismeasure::two_step_regdi;
use survey_di::simlab::{self, HighGroup, MonteCarloSummary, Scenario, Sim1Config, Sim2Config};

/// Data-integration estimators for a probability sample combined with big data.
#[derive(Parser, Debug)]
#[command(version, about)]
struct Cli {
    /// Settings file (`key = value` lines or a JSON object); flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// First simulation study (selection bias and measurement error).
    Simulate1 {
        /// 1, 2 or 3; all three when omitted.
        #[arg(long)]
        scenario: Option<u32>,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        n_a: Option<usize>,
        #[arg(long)]
        pop_n: Option<usize>,
        /// Big-data stratum sizes as `n1/n2`.
        #[arg(long)]
        big: Option<String>,
        #[arg(long)]
        regenerate_population: bool,
        #[arg(long)]
        fixed_big_data: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Second simulation study (classification of sample-A units).
    Simulate2 {
        /// Sample size; 1000 and 2000 when omitted.
        #[arg(long)]
        n_a: Option<usize>,
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        pop_n: Option<usize>,
        /// Expected big-data size.
        #[arg(long)]
        big_n: Option<usize>,
        /// Half of z1 selected with the doubled propensity.
        #[arg(long, value_enum)]
        high_group: Option<GroupArg>,
        #[arg(long)]
        regenerate_population: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mass-imputation variance study.
    SimulateImputation {
        #[arg(long)]
        reps: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        pop_n: Option<usize>,
        #[arg(long)]
        n_a: Option<usize>,
    },
    /// Estimate a population total from sample A and big-data files.
    Estimate {
        #[arg(long)]
        sample_a: Option<PathBuf>,
        #[arg(long)]
        big_data: Option<PathBuf>,
        #[arg(long, value_enum)]
        method: Option<Method>,
        #[arg(long, value_enum)]
        controls: Option<Controls>,
        /// Population size N.
        #[arg(long)]
        pop_size: Option<usize>,
        /// Prior for `pdi2`; defaults to N_B / N.
        #[arg(long)]
        pi: Option<f64>,
        /// Calibration weights `id,d,w` for `regdi`.
        #[arg(long)]
        weights_out: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify sample-A and big-data units by posterior membership.
    Classify {
        #[arg(long)]
        sample_a: Option<PathBuf>,
        #[arg(long)]
        big_data: Option<PathBuf>,
        #[arg(long)]
        pi: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        big_out: Option<PathBuf>,
        #[arg(long)]
        model_out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GroupArg {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Ht,
    Pdi,
    Ratio,
    Regdi,
    TwoStep,
    Pdi2,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Controls {
    Standard,
    ProxyYStar,
    Duplication,
}

struct Settings(BTreeMap<String, String>);

impl Settings {
    fn load(path: Option<&Path>) -> Result<Self> {
        Ok(Self(match path {
            Some(p) => sio::read_config(p).with_context(|| format!("reading {}", p.display()))?,
            None => BTreeMap::new(),
        }))
    }

    fn get<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<Option<T>> {
        if flag.is_some() {
            return Ok(flag);
        }
        match self.0.get(key) {
            Some(raw) => raw
                .parse()
                .map(Some)
                .map_err(|_| anyhow!("config `{key}`: cannot parse `{raw}`")),
            None => Ok(None),
        }
    }

    fn or<T: FromStr>(&self, flag: Option<T>, key: &str, default: T) -> Result<T> {
        Ok(self.get(flag, key)?.unwrap_or(default))
    }

    fn need<T: FromStr>(&self, flag: Option<T>, key: &str) -> Result<T> {
        self.get(flag, key)?.ok_or_else(|| anyhow!("--{key} is required"))
    }

    fn switch(&self, flag: bool, key: &str) -> Result<bool> {
        Ok(flag || self.get(None, key)?.unwrap_or(false))
    }
}

fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn print_table(s: &MonteCarloSummary) {
    eprintln!("{} {} (truth {:.4}, failures {})", s.study, s.scenario, s.truth, s.failures);
    for r in &s.rows {
        let rb = r.var_rel_bias.map(|v| format!("  var_rel_bias {v:+.4}")).unwrap_or_default();
        eprintln!("  {:<12} bias {:+.4}  se {:.4}  rmse {:.4}{rb}", r.estimator, r.bias, r.se, r.rmse);
    }
    if s.study == "sim2" {
        eprintln!("  em ascent violations {}, unconverged {}", s.ascent_violations, s.unconverged);
    }
}

fn emit(summaries: &[MonteCarloSummary], out: Option<&Path>) -> Result<()> {
    summaries.iter().for_each(print_table);
    simlab::write_summary_csv(sink(out)?, summaries)?;
    Ok(())
}

fn parse_strata(raw: &str) -> Result<[usize; 2]> {
    let (a, b) = raw.split_once('/').ok_or_else(|| anyhow!("--big expects n1/n2, got `{raw}`"))?;
    Ok([a.trim().parse()?, b.trim().parse()?])
}

fn read_inputs(cfg: &Settings, sample_a: Option<PathBuf>, big_data: Option<PathBuf>) -> Result<(SampleFile, BigDataFile)> {
    let a_path: PathBuf = cfg.need(sample_a, "sample-a")?;
    let b_path: PathBuf = cfg.need(big_data, "big-data")?;
    let a = sio::read_sample(File::open(&a_path).with_context(|| format!("opening {}", a_path.display()))?)?;
    let b = sio::read_big_data(File::open(&b_path).with_context(|| format!("opening {}", b_path.display()))?)?;
    Ok((a, b))
}

fn fit_classifier(a: &SampleFile, b: &BigDataFile, pi: f64) -> Result<(ClassifierModel, survey_di::classifier::PosteriorSet)> {
    if a.z.is_empty() || a.z.len() != b.z.len() {
        bail!("sample A and big data need the same z1..zK columns");
    }
    let domain = LevelDomain::observed(&[&a.z, &b.z])?;
    let m = estimate_m(&b.z, &domain)?;
    let u0 = initial_u(&a.z, &a.d, &domain)?;
    let seed = ClassifierModel::new(pi, m, u0, domain)?;
    Ok(em_fit(&a.z, &a.d, seed, &EmOptions::default())?)
}

fn write_estimate(out: Option<&Path>, r: &EstimateReport) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink(out)?);
    w.write_record(["estimator", "total", "mean", "variance", "population_size", "controls", "notes"])?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    w.write_record([
        r.estimator.to_string(),
        r.total.to_string(),
        opt(r.mean),
        opt(r.variance),
        opt(r.population_size),
        r.controls.clone().unwrap_or_default(),
        r.notes.join("; "),
    ])?;
    w.flush()?;
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let cfg = Settings::load(cli.config.as_deref())?;
    match cli.command {
        Command::Simulate1 { scenario, reps, seed, n_a, pop_n, big, regenerate_population, fixed_big_data, out } => {
            let scenarios = match cfg.get(scenario, "scenario")? {
                Some(n) => vec![Scenario::from_number(n)?],
                None => Scenario::ALL.to_vec(),
            };
            let reps = cfg.or(reps, "reps", 1_000)?;
            let seed = cfg.or(seed, "seed", 1)?;
            let mut summaries = Vec::new();
            for sc in scenarios {
                let mut c = Sim1Config::new(sc, reps, seed);
                c.sample_size = cfg.or(n_a, "n-a", c.sample_size)?;
                c.population_size = cfg.or(pop_n, "pop-n", c.population_size)?;
                if let Some(raw) = cfg.get(big.clone(), "big")? {
                    c.strata = parse_strata(&raw)?;
                }
                c.regenerate_population = cfg.switch(regenerate_population, "regenerate-population")?;
                c.fixed_big_data = cfg.switch(fixed_big_data, "fixed-big-data")?;
                summaries.push(simlab::run_sim1(&c)?);
            }
            let out: Option<PathBuf> = cfg.get(out, "out")?;
            emit(&summaries, out.as_deref())
        }
        Command::Simulate2 { n_a, reps, seed, pop_n, big_n, high_group, regenerate_population, out } => {
            let sizes = match cfg.get(n_a, "n-a")? {
                Some(n) => vec![n],
                None => vec![1_000, 2_000],
            };
            let reps = cfg.or(reps, "reps", 1_000)?;
            let seed = cfg.or(seed, "seed", 1)?;
            let group = match high_group {
                Some(g) => Some(g),
                None => match cfg.get::<String>(None, "high-group")?.as_deref() {
                    None => None,
                    Some(s) => Some(GroupArg::from_str(s, true).map_err(|e| anyhow!(e))?),
                },
            };
            let mut summaries = Vec::new();
            for n in sizes {
                let mut c = Sim2Config::new(n, reps, seed);
                c.population_size = cfg.or(pop_n, "pop-n", c.population_size)?;
                c.big_data_size = cfg.or(big_n, "big-n", c.big_data_size)?;
                if let Some(g) = group {
                    c.high_group = match g {
                        GroupArg::Lower => HighGroup::LowerZ1,
                        GroupArg::Upper => HighGroup::UpperZ1,
                    };
                }
                c.regenerate_population = cfg.switch(regenerate_population, "regenerate-population")?;
                summaries.push(simlab::run_sim2(&c)?);
            }
            let out: Option<PathBuf> = cfg.get(out, "out")?;
            emit(&summaries, out.as_deref())
        }
        Command::SimulateImputation { reps, seed, pop_n, n_a } => {
            let mut c = simlab::ImputationStudyConfig::new(cfg.or(reps, "reps", 2_000)?, cfg.or(seed, "seed", 1)?);
            c.population_size = cfg.or(pop_n, "pop-n", c.population_size)?;
            c.sample_size = cfg.or(n_a, "n-a", c.sample_size)?;
            let s = simlab::run_imputation_study(&c)?;
            println!("{}", serde_json::to_string_pretty(&s)?);
            Ok(())
        }
        Command::Estimate { sample_a, big_data, method, controls, pop_size, pi, weights_out, out } => {
            let (a, b) = read_inputs(&cfg, sample_a, big_data)?;
            let method = match method {
                Some(m) => m,
                None => Method::from_str(&cfg.need::<String>(None, "method")?, true).map_err(|e| anyhow!(e))?,
            };
            let pop: Option<usize> = cfg.get(pop_size, "pop-size")?;
            let sample = a.sample(pop)?;
            let need_pop = || pop.map(|p| p as f64).ok_or_else(|| anyhow!("--pop-size is required for this method"));
            let report = match method {
                Method::Ht => ht_total(&sample, &a.y)?,
                Method::Pdi => pdi_total(&sample, &a.delta, &a.y, &BigDataTotals::new(b.total_y()?, b.n_b(), need_pop()?))?,
                Method::Ratio => ratio_di_total(&sample, &a.delta, &a.y, b.total_y()?, pop.map(|p| p as f64))?,
                Method::Regdi => {
                    let n = need_pop()?;
                    let controls = match controls {
                        Some(c) => Some(c),
                        None => cfg
                            .get::<String>(None, "controls")?
                            .map(|s| Controls::from_str(&s, true).map_err(|e| anyhow!(e)))
                            .transpose()?,
                    };
                    let variant = match controls {
                        None | Some(Controls::Standard) => ControlVariant::Standard,
                        Some(Controls::ProxyYStar) => ControlVariant::ProxyYStar,
                        Some(Controls::Duplication) => ControlVariant::Duplication,
                    };
                    let cols = SampleColumns { delta: &a.delta, y: Some(&a.y), y_star: Some(&a.y_star), ..Default::default() };
                    let big = BigSummaries {
                        n,
                        n_b: b.n_b(),
                        t_b: b.total_y().ok(),
                        t_b_star: b.total_y_star().ok(),
                        ..Default::default()
                    };
                    let spec = build_controls(variant, &cols, &big)?;
                    let weights_out: Option<PathBuf> = cfg.get(weights_out, "weights-out")?;
                    if let Some(path) = weights_out {
                        let cal = solve_weights(&sample, &spec)?;
                        sio::write_weights(sink(Some(&path))?, &a.ids, &a.d, &cal.w)?;
                    }
                    regdi_total(&sample, &a.y, &spec)?
                }
                Method::TwoStep => {
                    let bd = BigDataTotals::new(b.total_y()?, b.n_b(), need_pop()?);
                    two_step_regdi(&sample, &a.y_star, &a.delta, &a.y, &bd)?.report
                }
                Method::Pdi2 => {
                    let n = need_pop()?;
                    let prior = cfg.or(pi, "pi", b.n_b() / n)?;
                    let (model, post) = fit_classifier(&a, &b, prior)?;
                    let totals = propensity_totals(&b.z, &b.y, &model)?;
                    pdi2_total(&sample, &a.y, &post.delta_hat, &totals, n)?
                }
            };
            let out: Option<PathBuf> = cfg.get(out, "out")?;
            write_estimate(out.as_deref(), &report)
        }
        Command::Classify { sample_a, big_data, pi, out, big_out, model_out } => {
            let (a, b) = read_inputs(&cfg, sample_a, big_data)?;
            let prior = cfg.need(pi, "pi")?;
            let (model, post) = fit_classifier(&a, &b, prior)?;
            let out: Option<PathBuf> = cfg.get(out, "out")?;
            sio::write_labels(sink(out.as_deref())?, &a.ids, &post.p_hat)?;
            if let Some(path) = cfg.get::<PathBuf>(big_out, "big-out")? {
                sio::write_labels(sink(Some(&path))?, &b.ids, &model.posteriors(&b.z)?)?;
            }
            match cfg.get::<PathBuf>(model_out, "model-out")? {
                Some(path) => std::fs::write(&path, model.dump())?,
                None => eprint!("{}", model.dump()),
            }
            eprintln!(
                "em: {} iterations, converged {}, ascent violations {}",
                post.iterations, post.converged, post.ascent_violations
            );
            Ok(())
        }
    }
}
