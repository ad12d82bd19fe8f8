mod manifest;
mod render;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, Context};
use cake_core::constructions::{
    egalitarian_family, egalitarian_tight, intro_two_player, pareto_default_eps, pareto_family, utilitarian_family,
    BundleDoc, ConstructionBundle,
};
use cake_core::io::{parse_division, parse_instance, serialize_division, serialize_instance, to_pretty};
use cake_core::metrics::{envy_matrix, welfare, EnvyCheck, WelfareKind};
use cake_core::oracle::{grid_oracle, lipschitz_gap};
use cake_core::random::{random_division, random_instance, rng_from_seed};
use cake_core::rational::{format_rational, parse_rational, Rational};
use cake_core::solver::{
    dumping_report, exists_strict_pareto_improvement, optimize, Mode, Objective, ParetoCheck, SolverOptions,
};
use cake_core::{CakeError, Coverage, Division, Instance};
use clap::{Args, Parser, Subcommand, ValueEnum};

use manifest::{write_file, Recorder};

#[derive(Parser)]
#[command(
    name = "cakecut",
    version,
    about = "Envy-free cake cutting with and without leftovers"
)]
struct Cli {
    /// Worker threads for the exact solver.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Seed for random instances.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Directory for manifests and output files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Family {
    Intro,
    Utilitarian,
    Egalitarian,
    EgalitarianTight,
    Pareto,
    Random,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Complete,
    Partial,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Complete => Mode::Complete,
            ModeArg::Partial => Mode::Partial,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum WelfareArg {
    Utilitarian,
    Egalitarian,
}

impl From<WelfareArg> for WelfareKind {
    fn from(w: WelfareArg) -> Self {
        match w {
            WelfareArg::Utilitarian => WelfareKind::Utilitarian,
            WelfareArg::Egalitarian => WelfareKind::Egalitarian,
        }
    }
}

#[derive(Args)]
struct BudgetArg {
    /// Time budget in seconds.
    #[arg(long, default_value_t = 600.0)]
    budget: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Write a family instance, its canonical divisions and predictions.
    Generate {
        family: Family,
        #[arg(long)]
        k: Option<u32>,
        #[arg(long)]
        t: Option<u32>,
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        eps: Option<String>,
        #[arg(long)]
        candy_width: Option<String>,
        #[arg(long)]
        width: Option<String>,
        /// Maximum number of cells (random family only).
        #[arg(long, default_value_t = 4)]
        cells: usize,
    },
    /// Envy matrix, verdict, welfare and coverage of a division.
    Verify { instance: PathBuf, division: PathBuf },
    /// Best envy-free division in one mode.
    Solve {
        instance: PathBuf,
        #[arg(long, value_enum, default_value = "complete")]
        mode: ModeArg,
        #[arg(long, value_enum, default_value = "utilitarian")]
        welfare: WelfareArg,
        /// Maximize this player's utility instead (1-based).
        #[arg(long)]
        player: Option<usize>,
        #[command(flatten)]
        budget: BudgetArg,
    },
    /// Complete and partial optima and their ratio.
    Paradox {
        instance: PathBuf,
        #[arg(long, value_enum, default_value = "utilitarian")]
        welfare: WelfareArg,
        #[command(flatten)]
        budget: BudgetArg,
        /// Use the grid oracle at this resolution instead of the exact solver.
        #[arg(long)]
        grid: Option<u32>,
    },
    /// Search for a division giving every player strictly more.
    ParetoCheck {
        instance: PathBuf,
        division: PathBuf,
        #[command(flatten)]
        budget: BudgetArg,
    },
    /// Best envy-free division with cuts on a grid.
    Oracle {
        instance: PathBuf,
        #[arg(long, value_enum, default_value = "complete")]
        mode: ModeArg,
        #[arg(long, value_enum, default_value = "utilitarian")]
        welfare: WelfareArg,
        #[arg(long, default_value_t = 64)]
        resolution: u32,
        #[command(flatten)]
        budget: BudgetArg,
    },
    /// Draw densities and an optional division as SVG.
    Render {
        instance: PathBuf,
        division: Option<PathBuf>,
        /// Output file; defaults to render.svg in the output directory.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

/// Process outcome other than success.
#[derive(Debug)]
enum Verdict {
    Ok,
    Negative,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Verdict::Ok) => ExitCode::SUCCESS,
        Ok(Verdict::Negative) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            match err.downcast_ref::<CakeError>() {
                Some(CakeError::BudgetExceeded { .. }) => ExitCode::from(3),
                Some(CakeError::NoEnvyFreeDivision) => ExitCode::from(1),
                _ => ExitCode::from(2),
            }
        }
    }
}

fn read_instance(path: &Path) -> anyhow::Result<Instance> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_instance(&text).map_err(|e| anyhow!(e).context(format!("in {}", path.display())))
}

fn read_division(path: &Path, n: usize) -> anyhow::Result<Division> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let division = parse_division(&text).map_err(|e| anyhow!(e).context(format!("in {}", path.display())))?;
    if division.n() != n {
        return Err(anyhow!(CakeError::SizeMismatch {
            expected: n,
            found: division.n()
        }));
    }
    Ok(division)
}

fn rational_arg(name: &str, text: &Option<String>) -> anyhow::Result<Option<Rational>> {
    text.as_deref()
        .map(|t| parse_rational(t).map_err(|e| anyhow!(CakeError::ParamOutOfRange(format!("--{name}: {e}")))))
        .transpose()
}

fn options(cli: &Cli, mode: Mode, objective: Objective, budget: f64) -> SolverOptions {
    let workers = cli
        .workers
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    SolverOptions::new(mode, objective)
        .with_budget(Some(Duration::from_secs_f64(budget.max(0.0))))
        .with_parallelism(workers)
}

fn print_division(title: &str, division: &Division) {
    println!("{title}:");
    for (i, p) in division.pieces().iter().enumerate() {
        println!(
            "  player {:<3} ({}, {})",
            i + 1,
            format_rational(p.left()),
            format_rational(p.right())
        );
    }
}

/// Converts budget errors into a manifest before propagating them.
fn guard<T>(rec: &mut Recorder, out: &Path, result: cake_core::Result<T>) -> anyhow::Result<T> {
    match result {
        Ok(v) => Ok(v),
        Err(e) => {
            if let CakeError::BudgetExceeded {
                configurations,
                estimated_secs,
                ..
            } = &e
            {
                println!("budget exceeded: {configurations} configurations, about {estimated_secs:.3e} s");
                rec.option("configurations", configurations);
                rec.verdict("budget-exceeded");
                let mut done = Recorder::new(&rec.manifest.command);
                done.manifest = rec.manifest.clone();
                done.write(out)?;
            }
            Err(anyhow!(e))
        }
    }
}

fn run(cli: &Cli) -> anyhow::Result<Verdict> {
    match &cli.command {
        Command::Generate {
            family,
            k,
            t,
            n,
            eps,
            candy_width,
            width,
            cells,
        } => generate(cli, *family, *k, *t, *n, eps, candy_width, width, *cells),
        Command::Verify { instance, division } => verify(cli, instance, division),
        Command::Solve {
            instance,
            mode,
            welfare,
            player,
            budget,
        } => solve(cli, instance, (*mode).into(), (*welfare).into(), *player, budget.budget),
        Command::Paradox {
            instance,
            welfare,
            budget,
            grid,
        } => paradox(cli, instance, (*welfare).into(), budget.budget, *grid),
        Command::ParetoCheck {
            instance,
            division,
            budget,
        } => pareto_check(cli, instance, division, budget.budget),
        Command::Oracle {
            instance,
            mode,
            welfare,
            resolution,
            budget,
        } => oracle(
            cli,
            instance,
            (*mode).into(),
            (*welfare).into(),
            *resolution,
            budget.budget,
        ),
        Command::Render {
            instance,
            division,
            output,
        } => render_cmd(cli, instance, division.as_deref(), output.as_deref()),
    }
}

#[allow(clippy::too_many_arguments)]
fn generate(
    cli: &Cli,
    family: Family,
    k: Option<u32>,
    t: Option<u32>,
    n: Option<u32>,
    eps: &Option<String>,
    candy_width: &Option<String>,
    width: &Option<String>,
    cells: usize,
) -> anyhow::Result<Verdict> {
    let mut rec = Recorder::new("generate");
    let eps = rational_arg("eps", eps)?;
    let width = rational_arg("width", width)?;
    let candy = rational_arg("candy-width", candy_width)?;
    let default_eps = || cake_core::rat(1, 100);
    let bundle: ConstructionBundle = match family {
        Family::Intro => intro_two_player(
            eps.unwrap_or_else(|| cake_core::rat(1, 50)),
            candy.unwrap_or_else(|| cake_core::rat(1, 100)),
        )?,
        Family::Utilitarian => utilitarian_family(k.unwrap_or(1), t.unwrap_or(2), width)?,
        Family::Egalitarian => egalitarian_family(k.unwrap_or(1), eps.unwrap_or_else(default_eps), width)?,
        Family::EgalitarianTight => egalitarian_tight(n.unwrap_or(3), eps.unwrap_or_else(default_eps))?,
        Family::Pareto => {
            let n = n.unwrap_or(4);
            let eps = eps.unwrap_or_else(|| pareto_default_eps(n.max(1)));
            pareto_family(n, eps)?
        }
        Family::Random => {
            let players = n.unwrap_or(3) as usize;
            let mut rng = rng_from_seed(cli.seed);
            let mut instance = random_instance(&mut rng, players, cells)?;
            instance.label = format!("random-s{}-n{players}", cli.seed);
            let complete = random_division(&mut rng, players, true);
            let partial = random_division(&mut rng, players, false);
            rec.label(&instance.label);
            rec.option("family", "random");
            rec.option("seed", cli.seed);
            write_file(&cli.out.join("instance.json"), &serialize_instance(&instance))?;
            write_file(&cli.out.join("complete.json"), &serialize_division(&complete))?;
            write_file(&cli.out.join("partial.json"), &serialize_division(&partial))?;
            println!("wrote {} (random divisions, no predictions)", instance.label);
            rec.verdict("generated");
            rec.write(&cli.out)?;
            return Ok(Verdict::Ok);
        }
    };
    rec.label(&bundle.instance.label);
    rec.option("family", &bundle.family);
    for (key, value) in &bundle.instance.params {
        rec.option(key, format_rational(value));
    }
    write_file(&cli.out.join("instance.json"), &serialize_instance(&bundle.instance))?;
    write_file(
        &cli.out.join("complete.json"),
        &serialize_division(&bundle.canonical_complete),
    )?;
    write_file(
        &cli.out.join("partial.json"),
        &serialize_division(&bundle.canonical_partial),
    )?;
    write_file(
        &cli.out.join("bundle.json"),
        &to_pretty(&BundleDoc::from_bundle(&bundle)),
    )?;
    println!("{} (n = {})", bundle.instance.label, bundle.instance.n());
    println!("{}", bundle.notes);
    for ((tag, measure), value) in &bundle.predicted {
        rec.result(&format!("{tag}.{measure}"), value);
    }
    for b in &bundle.bounds {
        rec.result(&b.name, &b.value);
    }
    rec.verdict("generated");
    rec.write(&cli.out)?;
    Ok(Verdict::Ok)
}

fn verify(cli: &Cli, instance_path: &Path, division_path: &Path) -> anyhow::Result<Verdict> {
    let mut rec = Recorder::new("verify");
    let instance = read_instance(instance_path)?;
    let division = read_division(division_path, instance.n())?;
    rec.label(&instance.label);
    let matrix = envy_matrix(&instance, &division)?;
    println!("envy matrix (row i: player i's value of each piece):");
    print!("{matrix}");
    let check = matrix.check();
    let envy_free = check.is_envy_free();
    match check {
        EnvyCheck::EnvyFree => println!("verdict: envy-free"),
        EnvyCheck::Envious { envier, envied } => {
            println!(
                "verdict: not envy-free (player {} envies player {})",
                envier + 1,
                envied + 1
            );
            rec.option("envier", envier + 1);
            rec.option("envied", envied + 1);
        }
    }
    for kind in [WelfareKind::Utilitarian, WelfareKind::Egalitarian] {
        rec.result(kind.name(), &welfare(&instance, &division, kind)?.value);
    }
    match division.classify()? {
        Coverage::Complete => {
            println!("coverage: complete");
            rec.option("coverage", "complete");
        }
        Coverage::Partial(gaps) => {
            let listed: Vec<String> = gaps
                .iter()
                .map(|g| format!("({}, {})", format_rational(g.left()), format_rational(g.right())))
                .collect();
            println!("coverage: partial, leftover {}", listed.join(" "));
            rec.option("coverage", "partial");
            rec.option("leftover", listed.join(" "));
        }
    }
    rec.verdict(if envy_free { "envy-free" } else { "not-envy-free" });
    rec.write(&cli.out)?;
    Ok(if envy_free { Verdict::Ok } else { Verdict::Negative })
}

fn solve(
    cli: &Cli,
    instance_path: &Path,
    mode: Mode,
    kind: WelfareKind,
    player: Option<usize>,
    budget: f64,
) -> anyhow::Result<Verdict> {
    let mut rec = Recorder::new("solve");
    let instance = read_instance(instance_path)?;
    rec.label(&instance.label);
    rec.option("mode", mode);
    let objective = match player {
        Some(0) => return Err(anyhow!(CakeError::ParamOutOfRange("--player is 1-based".into()))),
        Some(p) => {
            rec.option("player", p);
            Objective::SinglePlayer(p - 1)
        }
        None => {
            rec.option("welfare", kind);
            kind.into()
        }
    };
    let opts = options(cli, mode, objective, budget);
    rec.option("budget_secs", budget);
    let result = guard(&mut rec, &cli.out, optimize(&instance, &opts))?;
    rec.result("optimum", &result.value);
    print_division("witness", &result.witness);
    println!("configurations: {}", result.stats.configurations);
    write_file(
        &cli.out.join("solve.witness.json"),
        &serialize_division(&result.witness),
    )?;
    rec.verdict("optimal");
    rec.write(&cli.out)?;
    Ok(Verdict::Ok)
}

fn paradox(
    cli: &Cli,
    instance_path: &Path,
    kind: WelfareKind,
    budget: f64,
    grid: Option<u32>,
) -> anyhow::Result<Verdict> {
    let mut rec = Recorder::new("paradox");
    let instance = read_instance(instance_path)?;
    rec.label(&instance.label);
    rec.option("welfare", kind);
    rec.option("budget_secs", budget);
    let base = options(cli, Mode::Complete, kind.into(), budget);
    let (complete, partial, complete_value, partial_value) = match grid {
        None => {
            let report = guard(&mut rec, &cli.out, dumping_report(&instance, kind, &base))?;
            rec.option("method", "exact");
            (
                report.complete.witness,
                report.partial.witness,
                report.complete.value,
                report.partial.value,
            )
        }
        Some(res) => {
            rec.option("method", "grid");
            rec.option("resolution", res);
            let c = guard(&mut rec, &cli.out, grid_oracle(&instance, &base, res))?;
            let mut partial_opts = base.clone();
            partial_opts.mode = Mode::Partial;
            let p = guard(&mut rec, &cli.out, grid_oracle(&instance, &partial_opts, res))?;
            rec.result("grid gap n*D/resolution", &lipschitz_gap(&instance, res));
            (c.witness, p.witness, c.value, p.value)
        }
    };
    rec.result(&format!("complete.{kind}"), &complete_value);
    rec.result(&format!("partial.{kind}"), &partial_value);
    if complete_value > Rational::from_integer(0.into()) {
        rec.result("alpha", &(&partial_value / &complete_value));
    } else {
        println!("{:<32} {:>16}", "alpha", "inf");
        rec.option("alpha", "inf");
    }
    print_division("complete witness", &complete);
    print_division("partial witness", &partial);
    write_file(&cli.out.join("paradox.complete.json"), &serialize_division(&complete))?;
    write_file(&cli.out.join("paradox.partial.json"), &serialize_division(&partial))?;
    rec.verdict(if partial_value > complete_value {
        "paradox"
    } else {
        "no-paradox"
    });
    rec.write(&cli.out)?;
    Ok(Verdict::Ok)
}

fn pareto_check(cli: &Cli, instance_path: &Path, division_path: &Path, budget: f64) -> anyhow::Result<Verdict> {
    let mut rec = Recorder::new("pareto-check");
    let instance = read_instance(instance_path)?;
    let division = read_division(division_path, instance.n())?;
    rec.label(&instance.label);
    let opts = options(cli, Mode::Partial, Objective::Utilitarian, budget);
    match guard(
        &mut rec,
        &cli.out,
        exists_strict_pareto_improvement(&instance, &division, &opts),
    )? {
        ParetoCheck::No => {
            println!("verdict: no division strictly Pareto dominates this one");
            rec.verdict("no");
            rec.write(&cli.out)?;
            Ok(Verdict::Ok)
        }
        ParetoCheck::Yes { witness, margin } => {
            println!("verdict: a strictly Pareto dominating division exists");
            rec.result("margin", &margin);
            print_division("witness", &witness);
            write_file(
                &cli.out.join("pareto-check.witness.json"),
                &serialize_division(&witness),
            )?;
            rec.verdict("yes");
            rec.write(&cli.out)?;
            Ok(Verdict::Negative)
        }
    }
}

fn oracle(
    cli: &Cli,
    instance_path: &Path,
    mode: Mode,
    kind: WelfareKind,
    resolution: u32,
    budget: f64,
) -> anyhow::Result<Verdict> {
    let mut rec = Recorder::new("oracle");
    let instance = read_instance(instance_path)?;
    rec.label(&instance.label);
    rec.option("mode", mode);
    rec.option("welfare", kind);
    rec.option("resolution", resolution);
    let opts = options(cli, mode, kind.into(), budget);
    let result = guard(&mut rec, &cli.out, grid_oracle(&instance, &opts, resolution))?;
    rec.result("grid optimum", &result.value);
    rec.result("grid gap n*D/resolution", &lipschitz_gap(&instance, resolution));
    print_division("witness", &result.witness);
    write_file(
        &cli.out.join("oracle.witness.json"),
        &serialize_division(&result.witness),
    )?;
    rec.verdict("optimal");
    rec.write(&cli.out)?;
    Ok(Verdict::Ok)
}

fn render_cmd(
    cli: &Cli,
    instance_path: &Path,
    division_path: Option<&Path>,
    output: Option<&Path>,
) -> anyhow::Result<Verdict> {
    let instance = read_instance(instance_path)?;
    let division = division_path.map(|p| read_division(p, instance.n())).transpose()?;
    let svg = render::render_svg(&instance, division.as_ref())?;
    let path = output.map_or_else(|| cli.out.join("render.svg"), Path::to_path_buf);
    write_file(&path, &svg)?;
    println!("wrote {}", path.display());
    Ok(Verdict::Ok)
}
