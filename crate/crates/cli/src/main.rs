mod table;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};
use online_lqr::model::{scenario_predator_prey, scenario_product_pricing, ScenarioFile};
use online_lqr::regret::{crossover_time, regret_case_analytic, regret_slope_fit, SlopeAxis, SlopeFit};
use online_lqr::riccati::{offline_cost, online_cost_analytic, output_costs, solve_recursions};
use online_lqr::sim::{monte_carlo, one_step_regret_trace, simulate, write_trajectory_csv, Setting, GENERATOR};
use online_lqr::{OutputFeedbackSpec, PolicyKind, ProblemSpec, RiccatiSolution};

use table::{write_csv, write_json, Cell, Metadata, Table};

const TABLE_GRID: [usize; 7] = [20, 50, 100, 200, 500, 1000, 2000];
const BUILTIN_HORIZON: usize = 200;
const DEFAULT_RUNS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Command {
    /// Closed-form costs, regret and bound per horizon.
    Solve,
    /// Monte Carlo realized costs.
    Simulate,
    /// Cost and regret table over a horizon grid.
    Table,
    /// Side-by-side regret of several policies.
    Compare,
    /// Analytic one-step regret per time step.
    Trace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

/// Finite-horizon LQ control with unknown noise statistics.
#[derive(Debug, Parser)]
#[command(name = "online-lqr", version)]
struct Cli {
    command: Command,
    /// `example1`, `example2` or a path to a JSON scenario file.
    #[arg(long, default_value = "example1")]
    scenario: String,
    /// Comma-separated horizons.
    #[arg(long, value_delimiter = ',')]
    horizons: Vec<usize>,
    /// Comma-separated policies: offline, online, case1, case2:<t_bar>, case3,
    /// out-offline, out-online, out-kalman.
    #[arg(long)]
    policy: Option<String>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Monte Carlo runs (simulate defaults to 1000; compare skips Monte Carlo unless set).
    #[arg(long)]
    runs: Option<usize>,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Initial state override, comma separated.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    x0: Option<Vec<f64>>,
    /// Freeze time used by a bare `case2` policy.
    #[arg(long)]
    t_bar: Option<usize>,
    /// Worker threads for Monte Carlo and enumeration.
    #[arg(long)]
    threads: Option<usize>,
    /// Omit the timestamp so identical runs give identical bytes.
    #[arg(long)]
    deterministic: bool,
    /// Also write run 0 of the first policy and horizon as a trajectory CSV.
    #[arg(long)]
    trajectory: Option<PathBuf>,
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Model(online_lqr::Error),
    Io(io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Model(online_lqr::Error::H3Violated(_)) => 4,
            CliError::Model(e) if e.is_numerical() => 3,
            _ => 2,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "{m}"),
            CliError::Model(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl From<online_lqr::Error> for CliError {
    fn from(e: online_lqr::Error) -> Self {
        CliError::Model(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

type CliResult<T> = Result<T, CliError>;

enum Source {
    Example1,
    Example2,
    File(Box<ScenarioFile>),
}

/// A resolved instance at one horizon.
struct Instance {
    spec: ProblemSpec,
    output: Option<OutputFeedbackSpec>,
    sol: RiccatiSolution,
}

impl Source {
    fn resolve(name: &str) -> CliResult<Self> {
        match name {
            "example1" => Ok(Source::Example1),
            "example2" => Ok(Source::Example2),
            path => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Config(format!("cannot read scenario `{path}`: {e}")))?;
                Ok(Source::File(Box::new(ScenarioFile::from_json(&text)?)))
            }
        }
    }

    fn default_horizon(&self) -> usize {
        match self {
            Source::File(f) => f.horizon,
            _ => BUILTIN_HORIZON,
        }
    }

    fn instance(&self, horizon: usize, x0: Option<&[f64]>) -> CliResult<Instance> {
        let (mut spec, mut output) = match self {
            Source::Example1 => (scenario_predator_prey(horizon), None),
            Source::Example2 => (scenario_product_pricing(horizon, online_lqr::linalg::Vector::from_row_slice(&[1.0, 1.0])), None),
            Source::File(f) => {
                let mut f = f.as_ref().clone();
                f.horizon = horizon;
                let sc = f.build()?;
                (sc.spec, sc.output)
            }
        };
        if let Some(x0) = x0 {
            spec = spec.with_x0(online_lqr::linalg::Vector::from_row_slice(x0))?;
            if let Some(of) = &output {
                output = Some(OutputFeedbackSpec::new(
                    spec.clone(),
                    of.c().clone(),
                    of.meas_noise().clone(),
                    of.mu0().clone(),
                    of.c0().clone(),
                )?);
            }
        }
        let sol = solve_recursions(&spec)?;
        Ok(Instance { spec, output, sol })
    }
}

impl Instance {
    fn setting(&self, kind: PolicyKind) -> CliResult<Setting<'_>> {
        if kind.is_output_feedback() {
            self.output
                .as_ref()
                .map(Setting::Output)
                .ok_or_else(|| CliError::Config(format!("policy {kind} needs a scenario with an output_feedback block")))
        } else {
            Ok(Setting::State(&self.spec))
        }
    }

    /// Expected cost, regret and one-step regrets from closed forms; `None`
    /// when the policy has no closed form.
    fn analytic(&self, kind: PolicyKind) -> CliResult<Option<(f64, f64, Vec<f64>)>> {
        self.setting(kind)?;
        Ok(match kind {
            PolicyKind::OutputKalmanOffline => None,
            PolicyKind::OutputOfflineSuboptimal | PolicyKind::OutputOnlineLmmsue => {
                let of = self.output.as_ref().expect("checked by setting");
                let costs = output_costs(of, &self.sol);
                let steps = one_step_regret_trace(&self.spec, &self.sol, kind)?;
                let cost = if kind == PolicyKind::OutputOnlineLmmsue { costs.online } else { costs.offline };
                Some((cost, cost - costs.offline, steps))
            }
            _ => {
                let rep = regret_case_analytic(kind, &self.spec, &self.sol)?;
                Some((rep.j_policy, rep.regret_total, rep.one_step))
            }
        })
    }
}

fn parse_policies(text: &str, t_bar: Option<usize>) -> CliResult<Vec<PolicyKind>> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| match (s, t_bar) {
            ("case2", Some(t)) => Ok(PolicyKind::Case2Frozen { t_bar: t }),
            ("case2", None) => Err(CliError::Config("case2 needs a cutoff: case2:<t_bar> or --t-bar".into())),
            _ => s.parse::<PolicyKind>().map_err(CliError::from),
        })
        .collect()
}

fn fit_cells(fit: Option<SlopeFit>) -> [Cell; 2] {
    match fit {
        Some(f) => [f.slope.into(), f.r_squared.into()],
        None => [Cell::Empty, Cell::Empty],
    }
}

struct Run {
    cli: Cli,
    source: Source,
}

impl Run {
    fn horizons(&self, default: &[usize]) -> Vec<usize> {
        if self.cli.horizons.is_empty() {
            default.to_vec()
        } else {
            self.cli.horizons.clone()
        }
    }

    fn instance(&self, horizon: usize) -> CliResult<Instance> {
        self.source.instance(horizon, self.cli.x0.as_deref())
    }

    fn policies(&self, default: &str) -> CliResult<Vec<PolicyKind>> {
        let list = parse_policies(self.cli.policy.as_deref().unwrap_or(default), self.cli.t_bar)?;
        if list.is_empty() {
            return Err(CliError::Config("no policy given".into()));
        }
        Ok(list)
    }

    fn solve(&self) -> CliResult<Table> {
        let mut t = Table::new(&[
            "T", "J_star", "J_online", "regret", "regret_pct", "bound_c_hat", "bound", "euler_gap",
            "J_output_offline", "J_output_online", "output_offset",
        ]);
        for horizon in self.horizons(&[self.source.default_horizon()]) {
            let inst = self.instance(horizon)?;
            let rep = regret_case_analytic(PolicyKind::OnlineLmmsue, &inst.spec, &inst.sol)?;
            let out = inst.output.as_ref().map(|of| output_costs(of, &inst.sol));
            t.push(vec![
                horizon.into(),
                rep.j_star.into(),
                rep.j_policy.into(),
                rep.regret_total.into(),
                rep.percentage.into(),
                rep.bound_c_hat.into(),
                rep.bound_value.into(),
                rep.euler_gap.into(),
                out.map(|c| c.offline).into(),
                out.map(|c| c.online).into(),
                out.map(|c| c.offset).into(),
            ]);
        }
        Ok(t)
    }

    fn table(&self) -> CliResult<Table> {
        let horizons = self.horizons(&TABLE_GRID);
        let mut t = Table::new(&["T", "J_star", "J_online", "regret", "regret_pct"]);
        for horizon in horizons {
            let inst = self.instance(horizon)?;
            let j_star = offline_cost(&inst.spec, &inst.sol);
            let j_online = online_cost_analytic(&inst.spec, &inst.sol);
            let rep = regret_case_analytic(PolicyKind::OnlineLmmsue, &inst.spec, &inst.sol)?;
            t.push(vec![
                horizon.into(),
                j_star.into(),
                j_online.into(),
                rep.regret_total.into(),
                rep.percentage.into(),
            ]);
        }
        Ok(t)
    }

    fn simulate(&self) -> CliResult<Table> {
        let runs = self.cli.runs.unwrap_or(DEFAULT_RUNS);
        if runs == 0 {
            return Err(CliError::Config("--runs must be at least 1".into()));
        }
        let policies = self.policies("online")?;
        let mut t = Table::new(&[
            "T", "policy", "runs", "seed", "mean_cost", "std_error", "min", "q05", "q25", "median", "q75", "q95",
            "max", "analytic_cost", "z_score",
        ]);
        let mut wrote_trajectory = false;
        for horizon in self.horizons(&[self.source.default_horizon()]) {
            let inst = self.instance(horizon)?;
            for &kind in &policies {
                let setting = inst.setting(kind)?;
                if let (Some(path), false) = (&self.cli.trajectory, wrote_trajectory) {
                    let tr = simulate(setting, &inst.sol, kind, self.cli.seed, 0)?;
                    write_trajectory_csv(&tr, BufWriter::new(File::create(path)?))?;
                    wrote_trajectory = true;
                }
                let mc = monte_carlo(setting, &inst.sol, kind, runs, self.cli.seed)?;
                let analytic = inst.analytic(kind)?.map(|a| a.0);
                let z = analytic.filter(|_| mc.std_error > 0.0).map(|a| (mc.mean_cost - a) / mc.std_error);
                let mut row: Vec<Cell> = vec![
                    horizon.into(),
                    kind.to_string().into(),
                    runs.into(),
                    Cell::Text(self.cli.seed.to_string()),
                    mc.mean_cost.into(),
                    mc.std_error.into(),
                    mc.min.into(),
                ];
                row.extend(mc.quantiles.iter().map(|&(_, q)| Cell::from(q)));
                row.extend([mc.max.into(), analytic.into(), z.into()]);
                t.push(row);
            }
        }
        Ok(t)
    }

    fn trace(&self) -> CliResult<Table> {
        let horizon = self.horizons(&[self.source.default_horizon()])[0];
        let inst = self.instance(horizon)?;
        let policies = self.policies("online")?;
        let mut series = Vec::new();
        for &kind in &policies {
            let (_, _, steps) = inst
                .analytic(kind)?
                .ok_or_else(|| CliError::Model(online_lqr::Error::UnsupportedPolicy(format!("{kind} has no closed-form trace"))))?;
            series.push(steps);
        }
        let mut columns = vec!["t".to_string()];
        columns.extend(policies.iter().map(|k| k.to_string()));
        let mut t = Table {
            columns,
            rows: Vec::new(),
        };
        for step in 0..=horizon {
            let mut row = vec![Cell::from(step)];
            row.extend(series.iter().map(|s| Cell::from(s[step])));
            t.push(row);
        }
        Ok(t)
    }

    fn compare(&self) -> CliResult<Table> {
        let policies = self.policies("online,case3")?;
        if policies.len() < 2 {
            return Err(CliError::Config("compare needs at least two policies".into()));
        }
        let horizons = self.horizons(&[self.source.default_horizon()]);
        let runs = self.cli.runs.unwrap_or(0);
        let mut rows: Vec<(PolicyKind, usize, Vec<Cell>)> = Vec::new();
        let mut points: Vec<Vec<(usize, f64)>> = vec![Vec::new(); policies.len()];
        for &horizon in &horizons {
            let inst = self.instance(horizon)?;
            let case3 = regret_case_analytic(PolicyKind::Case3NoEstimate, &inst.spec, &inst.sol)?.one_step;
            for (i, &kind) in policies.iter().enumerate() {
                let analytic = inst.analytic(kind)?;
                let crossover = match (&analytic, kind) {
                    (_, PolicyKind::Case3NoEstimate) => None,
                    (Some((_, _, steps)), k) if !k.is_output_feedback() => crossover_time(steps, &case3),
                    _ => None,
                };
                if let Some((_, reg, _)) = &analytic {
                    points[i].push((horizon, *reg));
                }
                let mc = if runs > 0 {
                    Some(monte_carlo(inst.setting(kind)?, &inst.sol, kind, runs, self.cli.seed)?)
                } else {
                    None
                };
                let pct = analytic.as_ref().filter(|_| horizon > 0).map(|a| 100.0 * a.1 / horizon as f64);
                rows.push((
                    kind,
                    horizon,
                    vec![
                        kind.to_string().into(),
                        horizon.into(),
                        analytic.as_ref().map(|a| a.0).into(),
                        analytic.as_ref().map(|a| a.1).into(),
                        pct.into(),
                        crossover.into(),
                        mc.as_ref().map(|m| m.mean_cost).into(),
                        mc.as_ref().map(|m| m.std_error).into(),
                    ],
                ));
            }
        }
        let fits: Vec<[Option<SlopeFit>; 2]> = points
            .iter()
            .map(|p| {
                [
                    regret_slope_fit(p, SlopeAxis::LogHorizon).ok(),
                    regret_slope_fit(p, SlopeAxis::Horizon).ok(),
                ]
            })
            .collect();
        let mut t = Table::new(&[
            "policy", "T", "J_policy", "regret", "regret_pct", "crossover_vs_case3", "mc_mean", "mc_std_error",
            "slope_ln_T", "r2_ln_T", "slope_T", "r2_T",
        ]);
        for (kind, _, mut row) in rows {
            let i = policies.iter().position(|&k| k == kind).expect("listed policy");
            row.extend(fit_cells(fits[i][0]));
            row.extend(fit_cells(fits[i][1]));
            t.push(row);
        }
        Ok(t)
    }

    fn metadata(&self) -> Metadata {
        let mut meta = vec![
            ("tool".to_string(), format!("online-lqr {}", env!("CARGO_PKG_VERSION"))),
            ("command".to_string(), format!("{:?}", self.cli.command).to_lowercase()),
            ("scenario".to_string(), self.cli.scenario.clone()),
            ("seed".to_string(), self.cli.seed.to_string()),
            ("generator".to_string(), GENERATOR.to_string()),
        ];
        let runs = match self.cli.command {
            Command::Simulate => Some(self.cli.runs.unwrap_or(DEFAULT_RUNS)),
            Command::Compare => self.cli.runs.filter(|&r| r > 0),
            _ => None,
        };
        if let Some(r) = runs {
            meta.push(("runs".into(), r.to_string()));
        }
        if let Some(x0) = &self.cli.x0 {
            meta.push(("x0".into(), x0.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")));
        }
        if !self.cli.deterministic {
            meta.push(("timestamp".into(), chrono::Utc::now().to_rfc3339()));
        }
        meta
    }

    fn execute(&self) -> CliResult<()> {
        let table = match self.cli.command {
            Command::Solve => self.solve()?,
            Command::Simulate => self.simulate()?,
            Command::Table => self.table()?,
            Command::Compare => self.compare()?,
            Command::Trace => self.trace()?,
        };
        let meta = self.metadata();
        let mut out: Box<dyn Write> = match &self.cli.out {
            Some(path) => Box::new(BufWriter::new(File::create(path)?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        };
        match self.cli.format {
            Format::Csv => write_csv(&mut out, &meta, &table)?,
            Format::Json => write_json(&mut out, &meta, &table)?,
        }
        out.flush()?;
        Ok(())
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let source = Source::resolve(&cli.scenario)?;
    let threads = cli.threads;
    let job = Run { cli, source };
    match threads {
        Some(0) => Err(CliError::Config("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Config(e.to_string()))?
            .install(|| job.execute()),
        None => job.execute(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
