use std::path::PathBuf;

use clap::{Parser, Subcommand};

use ordstat::rank_perm::enumerate::DEFAULT_MAX_ENUM;
use ordstat::Precision;

use crate::commands::{
    cmd_demo, cmd_induce, cmd_midp, cmd_randomize, cmd_table, cmd_twosample, CliResult, Demo, DemoOptions, Mode,
    SampleInput, Settings, TableOptions, TieBreak,
};
use crate::report::RunReport;

#[derive(Debug, Parser)]
#[command(name = "ordstat", version, about = "Exact p-values from lexicographically ordered test statistics")]
pub struct Cli {
    /// Significant decimal digits for score arithmetic.
    #[arg(long, global = true, env = "ORDSTAT_PRECISION", default_value_t = Precision::DEFAULT_DIGITS)]
    pub precision: u32,

    /// Largest number of role assignments an exact enumeration may visit.
    #[arg(long, global = true, default_value_t = DEFAULT_MAX_ENUM)]
    pub max_enum: u64,

    /// Print a human-readable summary instead of TOML.
    #[arg(long, global = true)]
    pub plain: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Induced p-function of a trial file, with classification.
    Induce {
        #[arg(long)]
        trial: PathBuf,
    },
    /// Randomized p-value of one outcome.
    Randomize {
        #[arg(long)]
        trial: PathBuf,
        #[arg(long)]
        outcome: String,
        /// Tie-breaking number in [0, 1] as p/q.
        #[arg(long, conflicts_with = "seed", required_unless_present = "seed")]
        r: Option<String>,
        /// Draw the tie-breaking number from a seeded generator.
        #[arg(long)]
        seed: Option<u64>,
        /// Check P[p <= eps] = eps on the grid k/97.
        #[arg(long)]
        verify_exact: bool,
    },
    /// Mid p-values of a trial file, with classification.
    Midp {
        #[arg(long)]
        trial: PathBuf,
    },
    /// Two-sample test with a lexicographic cascade of statistics.
    Twosample {
        /// Delimited `value,group` file.
        #[arg(long, conflicts_with_all = ["xs", "ys"], required_unless_present_all = ["xs", "ys"])]
        data: Option<PathBuf>,
        /// Comma-separated first group.
        #[arg(long, requires = "ys", allow_hyphen_values = true)]
        xs: Option<String>,
        /// Comma-separated second group.
        #[arg(long, requires = "xs", allow_hyphen_values = true)]
        ys: Option<String>,
        /// Components from wilcoxon, fyt, vdw, laplace, savage, t.
        #[arg(long, default_value = "wilcoxon")]
        cascade: String,
        #[arg(long, value_enum, default_value_t = Mode::Exact)]
        mode: Mode,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 10_000)]
        draws: u64,
    },
    /// Attainable p-values of a rank cascade for group sizes M and N.
    Table {
        /// Size of the first group.
        m: usize,
        /// Size of the second group.
        n: usize,
        /// Rank components only, e.g. `wilcoxon,fyt`.
        cascade: String,
        /// Reference values (p/q, comma separated) for the points the
        /// cascade adds to its baseline.
        #[arg(long)]
        reference: Option<String>,
        /// Cascade to compare against [default: CASCADE minus its last component].
        #[arg(long)]
        baseline: Option<String>,
        /// Upper end of the comparison window [default: largest reference value].
        #[arg(long)]
        window: Option<String>,
    },
    /// Historical p-value calculations.
    Demo {
        #[arg(value_enum)]
        name: Demo,
        /// Bound on the inclinations in degrees (bernoulli1735).
        #[arg(long)]
        theta: Option<String>,
        /// Number of orbits compared (bernoulli1735).
        #[arg(long)]
        k: Option<u32>,
        /// Number of years (arbuthnott1710).
        #[arg(long)]
        years: Option<u32>,
    },
}

impl Cli {
    pub fn settings(&self) -> CliResult<Settings> {
        Ok(Settings {
            precision: Precision::new(self.precision)?,
            max_enum: self.max_enum,
        })
    }

    pub fn run(&self) -> CliResult<RunReport> {
        let settings = self.settings()?;
        match &self.command {
            Command::Induce { trial } => cmd_induce(trial),
            Command::Randomize {
                trial,
                outcome,
                r,
                seed,
                verify_exact,
            } => {
                let tie = match (r, seed) {
                    (Some(r), _) => TieBreak::Fixed(r.clone()),
                    (None, Some(s)) => TieBreak::Seed(*s),
                    (None, None) => unreachable!("clap requires --r or --seed"),
                };
                cmd_randomize(trial, outcome, &tie, *verify_exact)
            }
            Command::Midp { trial } => cmd_midp(trial),
            Command::Twosample {
                data,
                xs,
                ys,
                cascade,
                mode,
                seed,
                draws,
            } => {
                let input = match (data, xs, ys) {
                    (Some(path), _, _) => SampleInput::File(path.clone()),
                    (None, Some(xs), Some(ys)) => SampleInput::Lists {
                        xs: xs.clone(),
                        ys: ys.clone(),
                    },
                    _ => unreachable!("clap requires --data or both --xs and --ys"),
                };
                cmd_twosample(&input, cascade, *mode, *seed, *draws, &settings)
            }
            Command::Table {
                m,
                n,
                cascade,
                reference,
                baseline,
                window,
            } => {
                let opts = TableOptions {
                    reference: reference.clone(),
                    baseline: baseline.clone(),
                    window: window.clone(),
                };
                cmd_table(*m, *n, cascade, &opts, &settings)
            }
            Command::Demo { name, theta, k, years } => {
                let opts = DemoOptions {
                    theta: theta.clone(),
                    k: *k,
                    years: *years,
                };
                cmd_demo(*name, &opts)
            }
        }
    }
}
