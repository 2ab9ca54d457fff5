use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::Args;
use repbf_core::sim::{run_simulation_1, run_simulation_2, run_simulation_3, ScenarioGrid};
use repbf_core::Estimator;
use serde::Serialize;

use crate::{parse_estimator, CliError};

pub const SCHEMA_HELP: &str = "\
Full description in SCHEMA.md. Columns (es_* are f squared for sim 1 and d otherwise; empty numbers mark failed cells):
  sim 1: index,n_groups,n_orig,n_rep,es_orig,es_rep,estimator,br0,log10_br0,mc_se_log,status
  sim 2: index,n_orig,n_rep,es_orig,es_rep,br0_mc,se_mc,br0_is,se_is,ess_is,br0_quad,status
  sim 3: index,n_orig,n_rep,es_orig,es_rep,br0_t,br0_f,ratio,status
         followed by a footer line
         #summary,n_cells=<k>,correlation=<r of log10>,correlation_raw=<r>,mean_ratio=<mean br0_t/br0_f>
n_orig and n_rep are per-group sizes. status is ok, low_ess (sim 2) or error: <reason>.";

#[derive(Args)]
pub struct SimArgs {
    /// Which simulation: 1, 2 or 3.
    #[arg(value_parser = clap::value_parser!(u8).range(1..=3))]
    which: u8,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(2..))]
    draws: Option<u64>,
    /// Estimators, comma-separated [default: quadrature for 1 and 3; monte_carlo,importance,quadrature for 2].
    #[arg(long, value_delimiter = ',', value_parser = parse_estimator)]
    estimator: Vec<Estimator>,
    /// Group counts, comma-separated (sim 1).
    #[arg(long, value_delimiter = ',')]
    groups: Vec<usize>,
    /// Original per-group sizes, comma-separated.
    #[arg(long, value_delimiter = ',')]
    n_orig: Vec<u64>,
    /// Replication per-group sizes, comma-separated.
    #[arg(long, value_delimiter = ',')]
    n_rep: Vec<u64>,
    /// Original effect sizes, comma-separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    es_orig: Vec<f64>,
    /// Replication effect sizes, comma-separated.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    es_rep: Vec<f64>,
    /// Exit with status 3 if any cell failed.
    #[arg(long)]
    strict: bool,
    /// Output CSV [default: standard output].
    #[arg(long, short)]
    output: Option<PathBuf>,
}

impl SimArgs {
    fn grid(&self) -> Result<ScenarioGrid, CliError> {
        let mut grid = match self.which {
            1 => ScenarioGrid::simulation_1(),
            2 => ScenarioGrid::simulation_2(),
            _ => ScenarioGrid::simulation_3(),
        };
        grid.seed = self.seed;
        if let Some(d) = self.draws {
            grid.n_draws = d as usize;
        }
        fn set<T: Clone>(target: &mut Vec<T>, value: &[T]) {
            if !value.is_empty() {
                *target = value.to_vec();
            }
        }
        set(&mut grid.estimators, &self.estimator);
        set(&mut grid.n_groups, &self.groups);
        set(&mut grid.n_orig_per_group, &self.n_orig);
        set(&mut grid.n_rep_per_group, &self.n_rep);
        set(&mut grid.es_orig, &self.es_orig);
        set(&mut grid.es_rep, &self.es_rep);
        grid.validate().map_err(|e| CliError::validation("grid", e.to_string()))?;
        if self.which == 2
            && !(grid.estimators.contains(&Estimator::MonteCarlo) && grid.estimators.contains(&Estimator::Importance))
        {
            return Err(CliError::validation("--estimator", "simulation 2 needs monte_carlo and importance"));
        }
        Ok(grid)
    }
}

fn write_rows<W: Write, R: Serialize>(writer: &mut csv::Writer<W>, rows: &[R]) -> Result<(), CliError> {
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

pub fn run(args: &SimArgs) -> Result<(), CliError> {
    let grid = args.grid()?;
    let mut sink: Box<dyn Write> = match &args.output {
        Some(path) => Box::new(File::create(path)?),
        None => Box::new(io::stdout().lock()),
    };
    let failed = {
        let mut writer = csv::Writer::from_writer(&mut sink);
        match args.which {
            1 => {
                let rows = run_simulation_1(&grid)?;
                write_rows(&mut writer, &rows)?;
                rows.iter().filter(|r| r.status.starts_with("error")).count()
            }
            2 => {
                let rows = run_simulation_2(&grid)?;
                write_rows(&mut writer, &rows)?;
                rows.iter().filter(|r| r.status.starts_with("error")).count()
            }
            _ => {
                let table = run_simulation_3(&grid)?;
                write_rows(&mut writer, &table.rows)?;
                drop(writer);
                let s = table.summary;
                writeln!(
                    sink,
                    "#summary,n_cells={},correlation={},correlation_raw={},mean_ratio={}",
                    s.n_cells, s.correlation, s.correlation_raw, s.mean_ratio
                )?;
                table.rows.iter().filter(|r| r.status.starts_with("error")).count()
            }
        }
    };
    sink.flush()?;
    if failed > 0 {
        eprintln!("warning: {failed} cell(s) failed");
        if args.strict {
            return Err(CliError::Numerical(repbf_core::Error::Diagnostics(format!(
                "{failed} simulation cell(s) failed"
            ))));
        }
    }
    Ok(())
}
