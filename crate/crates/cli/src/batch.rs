use std::fs::File;
use std::io::{self, Read};
use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;
use repbf_core::{repbf_f, repbf_t, RepBfConfig, RepBfResult};

use crate::{f_study, t_study, CliError, EstimationArgs};

pub const COLUMNS: [&str; 12] = [
    "id",
    "test",
    "stat_orig",
    "df_orig",
    "df_error_orig",
    "n_orig",
    "n2_orig",
    "stat_rep",
    "df_rep",
    "df_error_rep",
    "n_rep",
    "n2_rep",
];

pub const APPENDED: [&str; 5] = ["br0", "log10_br0", "mc_se_log", "interpretation", "status"];

pub const SCHEMA_HELP: &str = "\
Full description in SCHEMA.md.
Input: UTF-8 CSV with a header naming these columns (any order, extra columns kept):
  id             row label
  test           t or f
  stat_orig      t value (signed) or F value
  df_orig        t: df (empty: n1 + n2 - 2, or n1 - 1); f: effect df
  df_error_orig  f only: error df
  n_orig         t: group 1 size; f: total sample size
  n2_orig        t only: group 2 size (empty or 0: one-sample)
  stat_rep, df_rep, df_error_rep, n_rep, n2_rep
                 the same for the replication (f: empty df_rep reuses df_orig)
Output: the input columns followed by br0, log10_br0, mc_se_log, interpretation, status.
status is ok, invalid: <reason> or error: <reason>; failed rows leave the numbers empty.";

#[derive(Args)]
pub struct BatchArgs {
    /// Input CSV, or - for standard input.
    input: PathBuf,
    /// Output CSV [default: standard output].
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[command(flatten)]
    estimation: EstimationArgs,
}

struct Row<'a> {
    header: &'a csv::StringRecord,
    record: &'a csv::StringRecord,
}

impl Row<'_> {
    fn field(&self, name: &str) -> &str {
        let i = self.header.iter().position(|h| h == name).expect("header checked");
        self.record.get(i).unwrap_or("").trim()
    }

    fn optional<T: std::str::FromStr>(&self, name: &str) -> Result<Option<T>, CliError>
    where
        T::Err: std::fmt::Display,
    {
        let s = self.field(name);
        if s.is_empty() {
            return Ok(None);
        }
        s.parse()
            .map(Some)
            .map_err(|e| CliError::validation(name, format!("cannot parse '{s}': {e}")))
    }

    fn required<T: std::str::FromStr>(&self, name: &str) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        self.optional(name)?
            .ok_or_else(|| CliError::validation(name, "missing value"))
    }

    fn compute(&self, config: &RepBfConfig) -> Result<RepBfResult, CliError> {
        let finite = |name: &str| -> Result<f64, CliError> {
            let x: f64 = self.required(name)?;
            if x.is_finite() {
                Ok(x)
            } else {
                Err(CliError::validation(name, "must be finite"))
            }
        };
        match self.field("test").to_ascii_lowercase().as_str() {
            "t" => {
                let side = |suffix: &str| {
                    let n2: Option<u64> = self.optional(&format!("n2_{suffix}"))?;
                    t_study(
                        finite(&format!("stat_{suffix}"))?,
                        self.optional(&format!("df_{suffix}"))?,
                        self.required(&format!("n_{suffix}"))?,
                        n2.filter(|&n| n > 0),
                        [&format!("df_{suffix}"), &format!("n_{suffix}"), &format!("n2_{suffix}")],
                    )
                };
                Ok(repbf_t(&side("orig")?, &side("rep")?, config)?)
            }
            "f" => {
                let df_effect: f64 = finite("df_orig")?;
                let df_effect_rep = self.optional("df_rep")?.unwrap_or(df_effect);
                let orig = f_study(
                    finite("stat_orig")?,
                    df_effect,
                    finite("df_error_orig")?,
                    self.required("n_orig")?,
                    "n_orig",
                )?;
                let rep = f_study(
                    finite("stat_rep")?,
                    df_effect_rep,
                    finite("df_error_rep")?,
                    self.required("n_rep")?,
                    "n_rep",
                )?;
                Ok(repbf_f(&orig, &rep, config)?)
            }
            other => Err(CliError::validation("test", format!("expected t or f, got '{other}'"))),
        }
    }
}

fn status(outcome: &Result<RepBfResult, CliError>) -> String {
    match outcome {
        Ok(_) => "ok".into(),
        Err(CliError::Validation { flag, message }) => format!("invalid: {flag}: {message}"),
        Err(e) => format!("error: {e}"),
    }
}

pub fn run(args: &BatchArgs) -> Result<(), CliError> {
    let mut text = String::new();
    let read = if args.input.as_os_str() == "-" {
        io::stdin().read_to_string(&mut text)
    } else {
        File::open(&args.input).and_then(|mut f| f.read_to_string(&mut text))
    };
    read.map_err(|e| CliError::Input(format!("cannot read {}: {e}", args.input.display())))?;

    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| CliError::Input(format!("malformed header: {e}")))?
        .clone();
    let header = csv::StringRecord::from(header.iter().map(str::trim).collect::<Vec<_>>());
    let missing: Vec<&str> = COLUMNS.iter().copied().filter(|c| !header.iter().any(|h| h == *c)).collect();
    if header.is_empty() || !missing.is_empty() {
        return Err(CliError::Input(format!("header lacks column(s): {}", missing.join(", "))));
    }
    let records: Vec<Result<csv::StringRecord, String>> =
        reader.records().map(|r| r.map_err(|e| e.to_string())).collect();

    let config = args.estimation.config();
    let outcomes: Vec<Result<RepBfResult, CliError>> = records
        .par_iter()
        .map(|record| match record {
            Ok(record) => Row {
                header: &header,
                record,
            }
            .compute(&config),
            Err(e) => Err(CliError::Input(format!("unreadable row: {e}"))),
        })
        .collect();

    let sink: Box<dyn io::Write> = match &args.output {
        Some(path) => Box::new(File::create(path)?),
        None => Box::new(io::stdout().lock()),
    };
    let mut writer = csv::WriterBuilder::new().flexible(true).from_writer(sink);
    writer.write_record(header.iter().chain(APPENDED))?;
    for (record, outcome) in records.iter().zip(&outcomes) {
        let mut fields: Vec<String> = match record {
            Ok(r) => (0..header.len()).map(|i| r.get(i).unwrap_or("").to_string()).collect(),
            Err(_) => vec![String::new(); header.len()],
        };
        let id = fields[header.iter().position(|h| h == "id").expect("header checked")].clone();
        match outcome {
            Ok(r) => {
                for w in &r.warnings {
                    eprintln!("warning: row {id}: {w}");
                }
                fields.extend([
                    r.br0.to_string(),
                    r.log10_br0.to_string(),
                    r.mc_se_log.to_string(),
                    r.interpretation.to_string(),
                ]);
            }
            Err(_) => fields.extend(std::iter::repeat_n(String::new(), 4)),
        }
        fields.push(status(outcome));
        writer.write_record(&fields)?;
    }
    writer.flush()?;
    Ok(())
}
