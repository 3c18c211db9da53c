//! Command-line front end for hyptree.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hyptree::cliques::repair_threshold_graph;
use hyptree::fixtures::{generate_fixture, FixtureKind, FixtureParams};
use hyptree::graph::GraphFile;
use hyptree::hyperbolicity::{gromov_delta_worst_case, hyp_exact, hyp_monte_carlo, threshold_ladder};
use hyptree::io::{profile_csv, read_json, read_metric, read_space, to_json, write_json, write_text};
use hyptree::regularity::{regularity_pipeline, Mode, RegularityParams};
use hyptree::space::gromov_product_similarity;
use hyptree::spinglass::{
    exact_overlap_space, gibbs_exact, gibbs_mcmc, pure_state_tree, sample_overlap_space, OverlapMap, SpinGlassModel,
};
use hyptree::treebuild::{best_alpha, build_tree, converse_check, split_atoms, tree_cost, TreeParams};
use hyptree::{CompatibleTree, Error, SimilaritySpace, WeightedGraph};
use serde::Serialize;

#[derive(Debug, Parser, Serialize)]
#[command(
    name = "hyptree",
    version,
    about = "Average hyperbolicity and tree approximations of similarity spaces"
)]
struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads. Computations are sequential; the value is recorded.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase", tag = "command")]
enum Command {
    /// Average hyperbolicity, exact or sampled.
    Hyp {
        space: PathBuf,
        /// Estimate from this many sampled triples instead.
        #[arg(long)]
        samples: Option<u64>,
    },
    /// Worst-case four-point defect.
    Delta { space: PathBuf },
    /// Threshold ladder and bad-set profile.
    Ladder {
        space: PathBuf,
        #[command(flatten)]
        level: LevelArgs,
    },
    /// Regularity partition of a graph or of a thresholded space.
    Partition {
        #[command(flatten)]
        input: GraphInput,
        #[command(flatten)]
        level: LevelArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Clique repair of a thresholded space.
    Cliques {
        space: PathBuf,
        #[arg(long)]
        threshold: f64,
        #[command(flatten)]
        level: LevelArgs,
        /// Write the repaired graph in DOT format.
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Build a compatible tree.
    Tree {
        space: PathBuf,
        #[command(flatten)]
        level: LevelArgs,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        newick: Option<PathBuf>,
        #[arg(long)]
        dot: Option<PathBuf>,
    },
    /// Cost of a tree at a given scale, with the converse bound.
    Eval {
        space: PathBuf,
        tree: PathBuf,
        #[arg(long)]
        alpha: f64,
    },
    /// Cost-minimizing scale for a tree.
    Alpha { space: PathBuf, tree: PathBuf },
    /// Split heavy atoms into lighter copies.
    Split {
        space: PathBuf,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Overlap space of a spin glass and its pure-state hierarchy.
    Spinglass(SpinArgs),
    /// Generate a synthetic space.
    Fixture {
        #[arg(long, value_enum)]
        kind: KindArg,
        #[arg(long)]
        size: usize,
        #[arg(long, default_value_t = 3)]
        levels: usize,
        #[arg(long, default_value_t = 0.05)]
        noise: f64,
        #[arg(long, default_value_t = 3)]
        blocks: usize,
        #[arg(long)]
        random_weights: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Turn a metric space into the Gromov-product similarity at a base point.
    Convert {
        metric: PathBuf,
        /// Identifier of the base point; the first point by default.
        #[arg(long)]
        base: Option<String>,
        /// Rescale to bound 1.
        #[arg(long)]
        unit: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args, Serialize)]
struct LevelArgs {
    #[arg(long, default_value_t = 1e-16)]
    epsilon: f64,
    #[arg(long, default_value_t = 16)]
    m: usize,
    #[arg(long, value_enum, default_value_t = ModeArg::Practical)]
    mode: ModeArg,
    /// Use this value for δ₀ instead of Hyp^(1/8).
    #[arg(long)]
    delta0: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
struct GraphInput {
    /// Graph file with vertices, measure and edges.
    #[arg(long, conflicts_with_all = ["space", "threshold"])]
    graph: Option<PathBuf>,
    /// Similarity space to threshold.
    #[arg(long, requires = "threshold")]
    space: Option<PathBuf>,
    #[arg(long)]
    threshold: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
struct SpinArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    /// Enumerate the Gibbs measure exactly (the default).
    #[arg(long, conflicts_with = "mcmc")]
    exact: bool,
    /// Sample with this many Metropolis steps instead.
    #[arg(long)]
    mcmc: Option<u64>,
    #[arg(long, default_value_t = 10_000)]
    burn_in: u64,
    #[arg(long, default_value_t = 100)]
    thin: u64,
    #[arg(long, value_enum, default_value_t = MapArg::Abs)]
    f: MapArg,
    /// Fail instead of clamping q values that leave the range of ρ.
    #[arg(long)]
    no_clamp: bool,
    #[command(flatten)]
    level: LevelArgs,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum ModeArg {
    Theory,
    Practical,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum MapArg {
    Abs,
    Id,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum KindArg {
    Ultrametric,
    TreeScaled,
    NoisyTree,
    Random,
    PlantedBlocks,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Theory => Mode::Theory,
            ModeArg::Practical => Mode::Practical,
        }
    }
}

impl From<KindArg> for FixtureKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Ultrametric => FixtureKind::Ultrametric,
            KindArg::TreeScaled => FixtureKind::TreeScaled,
            KindArg::NoisyTree => FixtureKind::NoisyTree,
            KindArg::Random => FixtureKind::Random,
            KindArg::PlantedBlocks => FixtureKind::PlantedBlocks,
        }
    }
}

impl LevelArgs {
    fn tree_params(&self, seed: u64) -> TreeParams {
        TreeParams {
            seed,
            delta0: self.delta0,
            ..TreeParams::new(self.epsilon, self.m, self.mode.into())
        }
    }

    fn regularity(&self, seed: u64) -> RegularityParams {
        let base = match self.mode {
            ModeArg::Theory => RegularityParams::theory(self.epsilon, self.m),
            ModeArg::Practical => RegularityParams::practical(self.epsilon, self.m),
        };
        RegularityParams { seed, ..base }
    }
}

/// A result together with the invocation that produced it.
#[derive(Serialize)]
struct Report<'a, T: Serialize> {
    config: &'a Cli,
    result: T,
}

/// What a subcommand hands back for printing.
enum Output {
    Scalar { name: &'static str, value: f64 },
    Value(serde_json::Value),
    Csv(String),
}

fn value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("serializable value")
}

fn no_csv(what: &str) -> Error {
    Error::InvalidParameter(format!("csv output is not available for {what}"))
}

fn load_graph(input: &GraphInput) -> Result<WeightedGraph, Error> {
    match (&input.graph, &input.space, input.threshold) {
        (Some(path), _, _) => WeightedGraph::from_file(&read_json::<GraphFile>(path)?),
        (None, Some(path), Some(t)) => {
            let sp = read_space(path)?;
            check_threshold(&sp, t)?;
            let all: Vec<usize> = (0..sp.len()).collect();
            Ok(WeightedGraph::threshold(&sp, &all, t))
        }
        _ => Err(Error::InvalidParameter(
            "give --graph, or --space with --threshold".into(),
        )),
    }
}

fn check_threshold(sp: &SimilaritySpace, t: f64) -> Result<(), Error> {
    if !(t > 0.0 && t <= sp.bound) {
        return Err(Error::ThresholdOutOfRange { t, bound: sp.bound });
    }
    Ok(())
}

fn maybe_write(path: &Option<PathBuf>, text: impl FnOnce() -> String) -> Result<(), Error> {
    match path {
        Some(p) => write_text(p, &text()),
        None => Ok(()),
    }
}

fn read_tree(path: &Path) -> Result<CompatibleTree, Error> {
    read_json(path)
}

fn run(cli: &Cli) -> Result<Output, Error> {
    let seed = cli.seed;
    let csv = cli.format == Format::Csv;
    match &cli.command {
        Command::Hyp { space, samples } => {
            let sp = read_space(space)?;
            match samples {
                None => Ok(Output::Scalar {
                    name: "hyp",
                    value: hyp_exact(&sp),
                }),
                Some(k) => {
                    let est = hyp_monte_carlo(&sp, *k, seed)?;
                    if csv {
                        return Ok(Output::Csv(format!(
                            "estimate,std_error,samples\n{},{},{}\n",
                            est.estimate, est.std_error, est.samples
                        )));
                    }
                    Ok(Output::Value(value(&est)))
                }
            }
        }
        Command::Delta { space } => Ok(Output::Scalar {
            name: "delta",
            value: gromov_delta_worst_case(&read_space(space)?),
        }),
        Command::Ladder { space, level } => {
            let ladder = threshold_ladder(&read_space(space)?, level.epsilon, level.m, level.delta0)?;
            if csv {
                return Ok(Output::Csv(profile_csv(&ladder.profile)));
            }
            Ok(Output::Value(value(&ladder)))
        }
        Command::Partition { input, level, out } => {
            if csv {
                return Err(no_csv("partition"));
            }
            let graph = load_graph(input)?;
            let p = regularity_pipeline(&graph, &level.regularity(seed))?;
            if let Some(path) = out {
                write_json(path, &p.to_file())?;
            }
            Ok(Output::Value(value(&p)))
        }
        Command::Cliques {
            space,
            threshold,
            level,
            dot,
        } => {
            if csv {
                return Err(no_csv("cliques"));
            }
            let sp = read_space(space)?;
            check_threshold(&sp, *threshold)?;
            let all: Vec<usize> = (0..sp.len()).collect();
            let run = repair_threshold_graph(&sp, &all, *threshold, &level.regularity(seed))?;
            if let Some(g) = &run.after {
                let mut labels = vec![0; g.len()];
                for (k, c) in run.cliques.iter().enumerate() {
                    c.iter().for_each(|&v| labels[v] = k);
                }
                maybe_write(dot, || g.to_dot("cliques", Some(&labels)))?;
            }
            Ok(Output::Value(value(&run)))
        }
        Command::Tree {
            space,
            level,
            out,
            report,
            newick,
            dot,
        } => {
            if csv {
                return Err(no_csv("tree"));
            }
            let sp = read_space(space)?;
            let rep = build_tree(&sp, &level.tree_params(seed))?;
            if let Some(path) = out {
                write_json(path, &rep.tree)?;
            }
            maybe_write(newick, || format!("{}\n", rep.tree.to_newick()))?;
            maybe_write(dot, || rep.tree.to_dot())?;
            if let Some(path) = report {
                write_json(
                    path,
                    &Report {
                        config: cli,
                        result: &rep,
                    },
                )?;
            }
            Ok(Output::Value(value(&rep)))
        }
        Command::Eval { space, tree, alpha } => {
            let sp = read_space(space)?;
            let t = read_tree(tree)?;
            let cost = tree_cost(&sp, &t, *alpha)?;
            let converse = if sp.bound == 1.0 {
                Some(converse_check(&sp, &t, *alpha)?)
            } else {
                None
            };
            if csv {
                return Ok(Output::Csv(format!("alpha,cost\n{alpha},{cost}\n")));
            }
            Ok(Output::Value(serde_json::json!({
                "alpha": alpha,
                "cost": cost,
                "converse": converse,
            })))
        }
        Command::Alpha { space, tree } => {
            let sp = read_space(space)?;
            let (alpha, cost) = best_alpha(&sp, &read_tree(tree)?)?;
            if csv {
                return Ok(Output::Csv(format!("alpha,cost\n{alpha},{cost}\n")));
            }
            Ok(Output::Value(serde_json::json!({ "alpha": alpha, "cost": cost })))
        }
        Command::Split { space, delta, out } => {
            if csv {
                return Err(no_csv("split"));
            }
            let split = split_atoms(&read_space(space)?, *delta)?;
            if let Some(path) = out {
                write_json(path, &split.space)?;
            }
            Ok(Output::Value(value(&split)))
        }
        Command::Spinglass(args) => {
            if csv {
                return Err(no_csv("spinglass"));
            }
            spinglass(cli, args)
        }
        Command::Fixture {
            kind,
            size,
            levels,
            noise,
            blocks,
            random_weights,
            out,
        } => {
            if csv {
                return Err(no_csv("fixture"));
            }
            let params = FixtureParams {
                levels: *levels,
                noise: *noise,
                blocks: *blocks,
                random_weights: *random_weights,
            };
            let f = generate_fixture((*kind).into(), *size, &params, seed)?;
            if let Some(path) = out {
                write_json(path, &f.space)?;
            }
            Ok(Output::Value(value(&f)))
        }
        Command::Convert {
            metric,
            base,
            unit,
            out,
        } => {
            if csv {
                return Err(no_csv("convert"));
            }
            let m = read_metric(metric)?;
            let w = match base {
                None => 0,
                Some(id) => m
                    .points
                    .iter()
                    .position(|p| p == id)
                    .ok_or_else(|| Error::UnknownLeaf(id.clone()))?,
            };
            let mut sp = gromov_product_similarity(&m, w)?;
            if *unit {
                sp = sp.rescale_to_unit();
            }
            if let Some(path) = out {
                write_json(path, &sp)?;
            }
            Ok(Output::Value(value(&sp)))
        }
    }
}

#[derive(Serialize)]
struct SpinReport {
    n: usize,
    beta: f64,
    sampling: &'static str,
    points: usize,
    hyp: f64,
    /// Expected ultrametricity defect of three independent replicas; the
    /// same sum as `hyp`.
    ansatz_defect: f64,
    tree_cost: f64,
    a_n: f64,
    q: Vec<f64>,
    clamped: Vec<bool>,
    mean_abs_deviation: f64,
    kappa: f64,
    delta0: f64,
    thresholds: Vec<f64>,
}

fn spinglass(cli: &Cli, args: &SpinArgs) -> Result<Output, Error> {
    let model = SpinGlassModel::sk(args.n, args.beta, cli.seed)?;
    let f = match args.f {
        MapArg::Abs => OverlapMap::Abs,
        MapArg::Id => OverlapMap::Identity,
    };
    let rho = f.default_rho();
    let (sp, sampling) = match args.mcmc {
        Some(steps) => {
            let samples = gibbs_mcmc(&model, steps, args.burn_in, args.thin, cli.seed)?;
            (sample_overlap_space(&samples, f, rho)?, "mcmc")
        }
        None => (exact_overlap_space(&gibbs_exact(&model)?, f, rho)?, "exact"),
    };
    let pure = pure_state_tree(&sp, &args.level.tree_params(cli.seed), rho, !args.no_clamp)?;
    let hyp = pure.build.hyp;
    let report = SpinReport {
        n: args.n,
        beta: args.beta,
        sampling,
        points: sp.len(),
        hyp,
        ansatz_defect: hyp,
        tree_cost: pure.build.best_cost,
        a_n: pure.a_n,
        q: pure.q.clone(),
        clamped: pure.clamped.clone(),
        mean_abs_deviation: pure.mean_abs_deviation,
        kappa: pure.build.kappa,
        delta0: pure.build.delta0,
        thresholds: pure.build.thresholds.clone(),
    };
    if let Some(path) = &args.out {
        write_json(path, &pure.build.tree)?;
    }
    if let Some(path) = &args.report {
        write_json(
            path,
            &Report {
                config: cli,
                result: &report,
            },
        )?;
    }
    Ok(Output::Value(value(&report)))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            let text = match (out, cli.format) {
                (Output::Scalar { value, .. }, Format::Text) => format!("{value:.6}\n"),
                (Output::Scalar { name, value }, Format::Csv) => format!("{name}\n{value}\n"),
                (Output::Scalar { name, value }, Format::Json) => to_json(&Report {
                    config: &cli,
                    result: serde_json::json!({ name: value }),
                }),
                (Output::Csv(s), _) => s,
                (Output::Value(v), Format::Text) => to_json(&v),
                (Output::Value(v), _) => to_json(&Report {
                    config: &cli,
                    result: v,
                }),
            };
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.family().exit_code() as u8)
        }
    }
}
