//! Experiment harness around the channel and allocation engines: impulse
//! responses, power and blockage sweeps over channel variants, and single
//! scenario solves, all emitted as deterministic text.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use owcsim_core::allocation::{sample_blockage, solve, solve_with_tensor, BlockageMask};
use owcsim_core::channel::CompiledScene;
use owcsim_core::scene::{default_scenario, load_scenario, place_users};
use owcsim_core::{GainTensorf, ScenarioConfigf, Vec3f};

#[derive(Parser)]
#[command(name = "owcsim", version, about = "Indoor optical wireless experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Per-class impulse-response CSV for one receiver position, one
    /// section per AP using its best branch.
    Impulse(ImpulseArgs),
    /// Mean sum rate versus transmit power, per channel variant.
    SweepPower(SweepArgs),
    /// Mean sum rate versus LoS blockage ratio, per channel variant.
    SweepBlockage(SweepArgs),
    /// Solve one scenario and print the allocation report.
    Solve(SolveArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Scenario JSON file; built-in defaults when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ImpulseArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Receiver position as "x,y,z" in meters.
    #[arg(long)]
    user: String,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Base RNG seed; trial t uses seed + t.
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Trials per grid point (user placement, and blockage when swept).
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Channel variants to evaluate.
    #[arg(long, value_delimiter = ',')]
    variants: Option<Vec<Variant>>,
    /// Sweep grid values (watts or blockage ratios), ascending.
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<f64>>,
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// LoS blockage ratio.
    #[arg(long, default_value_t = 0.0)]
    rho: f64,
    /// Blockage sampling seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Variant {
    /// Direct paths only.
    #[value(name = "los_only")]
    LosOnly,
    /// Direct plus diffuse reflections, no mirrors.
    #[value(name = "los_diffuse")]
    LosDiffuse,
    /// First mirror array active.
    #[value(name = "irs_1array")]
    Irs1Array,
    /// Every mirror array active.
    #[value(name = "irs_2arrays")]
    Irs2Arrays,
}

impl Variant {
    const ALL: [Variant; 4] = [
        Variant::LosOnly,
        Variant::LosDiffuse,
        Variant::Irs1Array,
        Variant::Irs2Arrays,
    ];

    fn label(self) -> &'static str {
        match self {
            Variant::LosOnly => "los_only",
            Variant::LosDiffuse => "los_diffuse",
            Variant::Irs1Array => "irs_1array",
            Variant::Irs2Arrays => "irs_2arrays",
        }
    }

    /// Masked copy of the tensor with only this variant's components.
    fn mask(self, tensor: &GainTensorf) -> GainTensorf {
        match self {
            Variant::LosOnly => tensor.los_only(),
            Variant::LosDiffuse => tensor.without_mirrors(),
            Variant::Irs1Array => tensor.with_single_array(0),
            Variant::Irs2Arrays => tensor.clone(),
        }
    }
}

/// Failures split by exit code: flag or scenario problems exit 2,
/// everything else (I/O, guards tripping mid-run) exits 1.
#[derive(Debug)]
enum CliError {
    Validation(String),
    Internal(String),
}

impl CliError {
    fn validation(message: impl Into<String>) -> Self {
        CliError::Validation(message.into())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Impulse(args) => cmd_impulse(args),
        Command::SweepPower(args) => cmd_sweep_power(args),
        Command::SweepBlockage(args) => cmd_sweep_blockage(args),
        Command::Solve(args) => cmd_solve(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Internal(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}

/// Loads and validates the scenario, with a label for output metadata.
fn load(common: &CommonArgs) -> Result<(ScenarioConfigf, String), CliError> {
    match &common.scenario {
        None => Ok((default_scenario(), "builtin-default".to_string())),
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Internal(format!("reading {}: {e}", path.display())))?;
            let scenario = load_scenario(&text)
                .map_err(|e| CliError::validation(format!("{}: {e}", path.display())))?;
            Ok((scenario, path.display().to_string()))
        }
    }
}

fn emit(common: &CommonArgs, text: &str) -> Result<(), CliError> {
    match &common.out {
        None => {
            print!("{text}");
            Ok(())
        }
        Some(path) => fs::write(path, text)
            .map_err(|e| CliError::Internal(format!("writing {}: {e}", path.display()))),
    }
}

fn parse_user(raw: &str) -> Result<Vec3f, CliError> {
    let parts: Vec<f64> = raw
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::validation(format!("--user {raw:?}: {e}")))?;
    if parts.len() != 3 {
        return Err(CliError::validation(format!(
            "--user expects three comma-separated coordinates, got {}",
            parts.len()
        )));
    }
    Ok(Vec3f::new(parts[0], parts[1], parts[2]))
}

/// Grid must be non-empty, strictly ascending, and inside [lo, hi].
fn check_grid(grid: &[f64], lo: f64, hi: f64, what: &str) -> Result<(), CliError> {
    if grid.is_empty() {
        return Err(CliError::validation(format!("{what} grid is empty")));
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(CliError::validation(format!(
            "{what} grid must be strictly ascending"
        )));
    }
    if grid.iter().any(|&v| v < lo || v > hi) {
        return Err(CliError::validation(format!(
            "{what} grid values must lie in [{lo}, {hi}]"
        )));
    }
    Ok(())
}

/// User positions for one trial: explicit lists pass through, random
/// placements are redrawn from the trial seed.
fn trial_users(s: &ScenarioConfigf, seed: u64) -> Result<Vec<Vec3f>, CliError> {
    place_users(&s.users, &s.room, s.adr.mount_height_m, seed)
        .map_err(|e| CliError::validation(e.to_string()))
}

fn fmt_csv_list(values: &[f64]) -> String {
    values
        .iter()
        .map(|v| format!("{v:.8e}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

fn cmd_impulse(args: ImpulseArgs) -> Result<(), CliError> {
    let (scenario, label) = load(&args.common)?;
    let user = parse_user(&args.user)?;
    if !scenario.room.contains(user) {
        return Err(CliError::validation(format!(
            "--user {},{},{} lies outside the room",
            user.x, user.y, user.z
        )));
    }
    let scene =
        CompiledScene::compile(&scenario).map_err(|e| CliError::validation(e.to_string()))?;
    let mut text = String::new();
    let _ = writeln!(text, "# owcsim impulse");
    let _ = writeln!(text, "# scenario: {label}");
    let _ = writeln!(text, "# user: {:.8e},{:.8e},{:.8e}", user.x, user.y, user.z);
    let _ = writeln!(text, "# time_bin_ns: {:.8e}", scenario.time_bin_ns);
    for (ap, (branch, response)) in scene.impulse_responses(user).iter().enumerate() {
        let _ = writeln!(text, "# ap: {ap} branch: {branch}");
        let mut section = Vec::new();
        response
            .write_csv(&mut section)
            .map_err(|e| CliError::Internal(format!("formatting impulse rows: {e}")))?;
        text.push_str(&String::from_utf8(section).expect("CSV rows are ASCII"));
    }
    emit(&args.common, &text)
}

/// Per-trial tensors masked for each requested variant, trial-major.
fn variant_tensors(
    scene: &CompiledScene<f64>,
    scenario: &ScenarioConfigf,
    variants: &[Variant],
    seed: u64,
    trials: usize,
) -> Result<Vec<Vec<GainTensorf>>, CliError> {
    (0..trials)
        .map(|t| {
            let users = trial_users(scenario, seed + t as u64)?;
            let tensor = scene.gain_tensor_for(&users);
            Ok(variants.iter().map(|v| v.mask(&tensor)).collect())
        })
        .collect()
}

fn sweep_preamble(
    kind: &str,
    label: &str,
    args: &SweepArgs,
    variants: &[Variant],
    grid: &[f64],
) -> Result<String, CliError> {
    if args.trials == 0 {
        return Err(CliError::validation("--trials must be at least 1"));
    }
    let mut text = String::new();
    let _ = writeln!(text, "# owcsim {kind}");
    let _ = writeln!(text, "# scenario: {label}");
    let _ = writeln!(text, "# trials: {}", args.trials);
    let _ = writeln!(text, "# seed: {}", args.seed);
    let _ = writeln!(
        text,
        "# variants: {}",
        variants.iter().map(|v| v.label()).collect::<Vec<_>>().join(",")
    );
    let _ = writeln!(text, "# grid: {}", fmt_csv_list(grid));
    Ok(text)
}

fn cmd_sweep_power(args: SweepArgs) -> Result<(), CliError> {
    let (scenario, label) = load(&args.common)?;
    let grid = args
        .grid
        .clone()
        .unwrap_or_else(|| (1..=8).map(|i| i as f64 * 0.5).collect());
    check_grid(&grid, f64::MIN_POSITIVE, f64::MAX, "power")?;
    let variants = args.variants.clone().unwrap_or_else(|| Variant::ALL.to_vec());
    let mut text = sweep_preamble("sweep-power", &label, &args, &variants, &grid)?;
    let _ = writeln!(text, "power_w,variant,mean_sum_rate_bps_hz,stddev");

    let scene =
        CompiledScene::compile(&scenario).map_err(|e| CliError::validation(e.to_string()))?;
    let tensors = variant_tensors(&scene, &scenario, &variants, args.seed, args.trials)?;
    let n_users = tensors[0][0].n_users();
    let mask = BlockageMask::all_open(n_users, scenario.aps.len());
    for &power in &grid {
        let mut powered = scenario.clone();
        for ap in &mut powered.aps {
            ap.transmit_power_w = power;
        }
        for (vi, variant) in variants.iter().enumerate() {
            let rates: Vec<f64> = tensors
                .iter()
                .map(|per_variant| {
                    let (_, report) = solve_with_tensor(&per_variant[vi], &mask, &powered)
                        .map_err(|e| CliError::Internal(e.to_string()))?;
                    Ok(report.sum_rate)
                })
                .collect::<Result<_, CliError>>()?;
            let (mean, std) = mean_std(&rates);
            let _ = writeln!(
                text,
                "{power:.8e},{},{mean:.8e},{std:.8e}",
                variant.label()
            );
        }
    }
    emit(&args.common, &text)
}

fn cmd_sweep_blockage(args: SweepArgs) -> Result<(), CliError> {
    let (scenario, label) = load(&args.common)?;
    let grid = args
        .grid
        .clone()
        .unwrap_or_else(|| (0..=10).map(|i| i as f64 / 10.0).collect());
    check_grid(&grid, 0.0, 1.0, "blockage ratio")?;
    let variants = args.variants.clone().unwrap_or_else(|| Variant::ALL.to_vec());
    let mut text = sweep_preamble("sweep-blockage", &label, &args, &variants, &grid)?;
    let _ = writeln!(text, "rho,variant,mean_sum_rate_bps_hz,stddev");

    let scene =
        CompiledScene::compile(&scenario).map_err(|e| CliError::validation(e.to_string()))?;
    let tensors = variant_tensors(&scene, &scenario, &variants, args.seed, args.trials)?;
    let n_users = tensors[0][0].n_users();
    let n_aps = scenario.aps.len();
    for &rho in &grid {
        // One mask per trial, re-sampled from the trial seed at each rho
        // so a trial's masks are coupled across the grid.
        let masks: Vec<BlockageMask> = (0..args.trials)
            .map(|t| {
                sample_blockage(rho, n_users, n_aps, args.seed + t as u64)
                    .map_err(|e| CliError::validation(e.to_string()))
            })
            .collect::<Result<_, CliError>>()?;
        for (vi, variant) in variants.iter().enumerate() {
            let rates: Vec<f64> = tensors
                .iter()
                .zip(&masks)
                .map(|(per_variant, mask)| {
                    let (_, report) = solve_with_tensor(&per_variant[vi], mask, &scenario)
                        .map_err(|e| CliError::Internal(e.to_string()))?;
                    Ok(report.sum_rate)
                })
                .collect::<Result<_, CliError>>()?;
            let (mean, std) = mean_std(&rates);
            let _ = writeln!(text, "{rho:.8e},{},{mean:.8e},{std:.8e}", variant.label());
        }
    }
    emit(&args.common, &text)
}

fn cmd_solve(args: SolveArgs) -> Result<(), CliError> {
    let (scenario, label) = load(&args.common)?;
    let users = trial_users(&scenario, match &scenario.users {
        owcsim_core::scene::UserPlacement::Random(r) => r.rng_seed,
        owcsim_core::scene::UserPlacement::Explicit(_) => 0,
    })?;
    let n_aps = scenario.aps.len();
    let mask = sample_blockage(args.rho, users.len(), n_aps, args.seed)
        .map_err(|e| CliError::validation(e.to_string()))?;
    let (assignment, report) =
        solve(&scenario, &mask).map_err(|e| CliError::validation(e.to_string()))?;

    let mut text = String::new();
    let _ = writeln!(text, "# owcsim solve");
    let _ = writeln!(text, "# scenario: {label}");
    let _ = writeln!(text, "# rho: {:.8e}", args.rho);
    let _ = writeln!(text, "# seed: {}", args.seed);
    let _ = writeln!(text, "users: {}", users.len());
    let _ = writeln!(text, "aps: {n_aps}");
    let _ = writeln!(text, "mirrors: {}", assignment.user_of_mirror.len());
    let blocked = (0..users.len())
        .flat_map(|k| (0..n_aps).map(move |l| (k, l)))
        .filter(|&(k, l)| !mask.is_open(k, l))
        .count();
    let _ = writeln!(text, "blocked_links: {blocked}/{}", users.len() * n_aps);
    let join_usize = |xs: &[usize]| {
        xs.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(",")
    };
    let _ = writeln!(text, "ap_of_user: {}", join_usize(&assignment.ap_of_user));
    let _ = writeln!(text, "branch_of_user: {}", join_usize(&report.chosen_branch));
    let _ = writeln!(text, "time_fraction: {}", fmt_csv_list(&assignment.time_fraction));
    let mirror_map = assignment
        .user_of_mirror
        .iter()
        .map(|m| m.map_or("-".to_string(), |u| u.to_string()))
        .collect::<Vec<_>>()
        .join(",");
    let _ = writeln!(text, "mirror_user: {mirror_map}");
    let _ = writeln!(text, "per_user_rate_bps_hz: {}", fmt_csv_list(&report.per_user_rate));
    let _ = writeln!(text, "sum_rate_bps_hz: {:.8e}", report.sum_rate);
    let _ = writeln!(text, "log_utility: {:.8e}", report.log_utility);
    emit(&args.common, &text)
}
