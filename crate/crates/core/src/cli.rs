//! Command-line driver for the `rmrepair` binary.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use crate::dss::{self, Cluster, DssError, FailureEvent, Scenario};
use crate::galois::{FieldError, FieldTower, Symbol};
use crate::repair::RepairError;
use crate::rmcode::{CodeError, CodeParams, CodewordJson, RMCode};
use crate::verify;

/// Exact repair of Reed-Muller coded storage by trace downloads.
#[derive(Parser, Debug)]
#[command(name = "rmrepair", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Print tower moduli, the trace table, ker Tr and a basis with its dual.
    Field {
        #[command(flatten)]
        field: FieldArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Encode a message (seeded random unless given) and print the codeword.
    Encode {
        #[command(flatten)]
        code: CodeArgs,
        /// Comma-separated symbol indices, k of them.
        #[arg(long, value_delimiter = ',')]
        message: Option<Vec<u64>>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Fail nodes on a seeded cluster and repair them.
    Repair {
        #[command(flatten)]
        code: CodeArgs,
        /// Point indices to fail, comma-separated.
        #[arg(long, value_delimiter = ',')]
        failures: Vec<usize>,
        /// Start from a saved codeword JSON instead of a seeded message;
        /// its null entries count as failed and its parameters win.
        #[arg(long)]
        state: Option<PathBuf>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run the field, code, repair and fault-detection self-checks.
    Verify {
        #[command(flatten)]
        code: CodeArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Measured and stated bandwidth for ℓ = 1..t erasures.
    Bench {
        #[command(flatten)]
        code: CodeArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Replay a scripted failure scenario file.
    Scenario {
        file: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Args, Debug, Clone, Copy)]
pub struct FieldArgs {
    #[arg(long, default_value_t = 2)]
    pub p: u32,
    #[arg(long, default_value_t = 1)]
    pub a: u32,
    #[arg(long, default_value_t = 2)]
    pub t: u32,
}

#[derive(Args, Debug, Clone, Copy)]
pub struct CodeArgs {
    #[command(flatten)]
    pub field: FieldArgs,
    #[arg(long, default_value_t = 2)]
    pub m: usize,
    #[arg(long, default_value_t = 4)]
    pub d: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl CodeArgs {
    pub fn params(&self) -> CodeParams {
        CodeParams {
            p: self.field.p,
            a: self.field.a,
            t: self.field.t,
            m: self.m,
            d: self.d,
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    /// Write the machine-readable result here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    pub format: Format,
    /// Render symbols as polynomials in the tower generators.
    #[arg(long)]
    pub pretty: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Json,
    Table,
    Csv,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Code(#[from] CodeError),
    #[error(transparent)]
    Repair(#[from] RepairError),
    #[error(transparent)]
    Dss(#[from] DssError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    /// 2 for refused inputs and scheme preconditions, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Failed(_) => 1,
            _ => 2,
        }
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli.command) {
        Ok(stdout) => {
            print!("{stdout}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

/// Runs one command; returns what goes to stdout.
pub fn run(command: &Command) -> Result<String, CliError> {
    match command {
        Command::Field { field, output } => cmd_field(field, output),
        Command::Encode {
            code,
            message,
            output,
        } => cmd_encode(code, message.as_deref(), output),
        Command::Repair {
            code,
            failures,
            state,
            output,
        } => cmd_repair(code, failures, state.as_deref(), output),
        Command::Verify { code, output } => cmd_verify(code, output),
        Command::Bench { code, output } => cmd_bench(code, output),
        Command::Scenario { file, output } => cmd_scenario(file, output),
    }
}

fn no_csv(output: &OutputArgs) -> Result<(), CliError> {
    if output.format == Format::Csv {
        return Err(CliError::Usage(
            "csv output is only available for bench".into(),
        ));
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("plain data serializes");
    s.push('\n');
    s
}

fn write_out(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// Writes `json` to `--out` if given; returns it for stdout when the format
/// is json, otherwise the table.
fn emit(output: &OutputArgs, json: String, table: String) -> Result<String, CliError> {
    if let Some(path) = &output.out {
        write_out(path, &json)?;
    }
    Ok(match output.format {
        Format::Json => json,
        _ => table,
    })
}

fn show(f: &FieldTower, x: Symbol, pretty: bool) -> String {
    if pretty {
        f.render(x)
    } else {
        x.index().to_string()
    }
}

fn show_list(f: &FieldTower, xs: &[Symbol], pretty: bool) -> String {
    let items: Vec<String> = xs.iter().map(|&x| show(f, x, pretty)).collect();
    format!("[{}]", items.join(", "))
}

/// Trace tables are listed in full up to this field order.
pub const TRACE_TABLE_LIMIT: u32 = 256;

#[derive(Debug, Clone, Serialize)]
pub struct FieldReport {
    pub p: u32,
    pub a: u32,
    pub t: u32,
    pub q: u32,
    pub order: u32,
    pub base_modulus: Vec<u32>,
    pub ext_modulus: Vec<u32>,
    pub generator: u32,
    pub trace: Option<Vec<[u32; 2]>>,
    pub kernel_basis: Vec<u32>,
    pub basis: Vec<u32>,
    pub dual_basis: Vec<u32>,
}

pub fn field_report(f: &FieldTower) -> Result<FieldReport, FieldError> {
    let idx = |xs: &[Symbol]| xs.iter().map(|x| x.index()).collect();
    let kernel = match f.kernel_trace_basis() {
        Err(FieldError::TrivialTraceKernel) => Vec::new(),
        other => other?,
    };
    let dual = f.dual_basis(f.basis())?;
    Ok(FieldReport {
        p: f.p(),
        a: f.a(),
        t: f.t(),
        q: f.q(),
        order: f.order(),
        base_modulus: f.base_modulus().to_vec(),
        ext_modulus: f.ext_modulus().to_vec(),
        generator: f.generator().index(),
        trace: (f.order() <= TRACE_TABLE_LIMIT).then(|| {
            f.elements()
                .map(|x| [x.index(), f.trace(x).index()])
                .collect()
        }),
        kernel_basis: idx(&kernel),
        basis: idx(f.basis()),
        dual_basis: idx(&dual),
    })
}

fn cmd_field(args: &FieldArgs, output: &OutputArgs) -> Result<String, CliError> {
    no_csv(output)?;
    let f = FieldTower::new(args.p, args.a, args.t)?;
    let report = field_report(&f)?;
    let pretty = output.pretty;
    let syms =
        |xs: &[u32]| -> Vec<Symbol> { xs.iter().map(|&i| f.symbol(i as u64).unwrap()).collect() };

    let mut table = String::new();
    let _ = writeln!(
        table,
        "F_{} inside F_{} (p={} a={} t={})",
        report.q, report.order, report.p, report.a, report.t
    );
    let _ = writeln!(
        table,
        "base modulus (constant first): {:?}",
        report.base_modulus
    );
    let _ = writeln!(
        table,
        "extension modulus (constant first): {:?}",
        report.ext_modulus
    );
    let _ = writeln!(table, "generator: {}", show(&f, f.generator(), pretty));
    match &report.trace {
        Some(rows) => {
            let _ = writeln!(table, "trace:");
            for &[x, tr] in rows {
                let x = f.symbol(x as u64).unwrap();
                let tr = f.embed_base(f.subsymbol(tr as u64).unwrap());
                let _ = writeln!(
                    table,
                    "  {} -> {}",
                    show(&f, x, pretty),
                    show(&f, tr, pretty)
                );
            }
        }
        None => {
            let _ = writeln!(table, "trace: omitted above order {TRACE_TABLE_LIMIT}");
        }
    }
    let _ = writeln!(
        table,
        "ker Tr basis: {}",
        show_list(&f, &syms(&report.kernel_basis), pretty)
    );
    let _ = writeln!(
        table,
        "basis: {}",
        show_list(&f, &syms(&report.basis), pretty)
    );
    let _ = writeln!(
        table,
        "dual basis: {}",
        show_list(&f, &syms(&report.dual_basis), pretty)
    );
    emit(output, to_json(&report), table)
}

fn cmd_encode(
    args: &CodeArgs,
    message: Option<&[u64]>,
    output: &OutputArgs,
) -> Result<String, CliError> {
    no_csv(output)?;
    let code = args.params().build()?;
    let message: Vec<Symbol> = match message {
        Some(indices) => indices
            .iter()
            .map(|&i| code.tower().symbol(i))
            .collect::<Result<_, _>>()?,
        None => dss::seeded_message(&code, args.seed),
    };
    let word = code.encode(&message)?;
    let json = code.codeword_to_json(&word);
    let f = code.tower();
    let mut table = String::new();
    let _ = writeln!(
        table,
        "n={} k={} dual_degree={}",
        code.n(),
        code.k(),
        code.dual_degree()
    );
    let _ = writeln!(table, "message: {}", show_list(f, &message, output.pretty));
    let _ = writeln!(
        table,
        "codeword: {}",
        show_list(f, &word.symbols().expect("complete"), output.pretty)
    );
    emit(output, to_json(&json), table)
}

fn cmd_repair(
    args: &CodeArgs,
    failures: &[usize],
    state: Option<&Path>,
    output: &OutputArgs,
) -> Result<String, CliError> {
    no_csv(output)?;
    let mut cluster = match state {
        Some(path) => {
            let saved: CodewordJson = read_json(path)?;
            let code = Arc::new(saved.code.build()?);
            let word = code.codeword_from_json(&saved)?;
            Cluster::from_codeword(code, &word, args.seed)?
        }
        None => Cluster::from_seed(Arc::new(args.params().build()?), args.seed),
    };
    cluster.fail(&FailureEvent::new(failures.to_vec()))?;
    let failed = cluster.failed();
    let naive = cluster.naive_bandwidth(&failed).ok();
    let transcript = cluster.repair_failed()?;
    let json = to_json(&transcript.to_json());

    let f = cluster.code().tower();
    let mut table = format!(
        "bandwidth={} paper={} naive={}",
        transcript.bandwidth_subsymbols,
        transcript.paper_bound,
        naive.map_or_else(|| "undecodable".to_string(), |n| n.to_string())
    );
    if transcript.exceeds_paper_bound() {
        table.push_str(" exceeds_paper_bound");
    }
    table.push('\n');
    for &(node, value) in &transcript.recovered {
        let _ = writeln!(table, "node {} = {}", node, show(f, value, output.pretty));
    }
    emit(output, json, table)
}

fn cmd_verify(args: &CodeArgs, output: &OutputArgs) -> Result<String, CliError> {
    no_csv(output)?;
    let report = verify::run(args.params(), args.seed)?;
    let mut table = String::new();
    for check in &report.checks {
        let _ = write!(
            table,
            "{} {}",
            if check.passed { "PASS" } else { "FAIL" },
            check.name
        );
        if !check.detail.is_empty() {
            let _ = write!(table, " ({})", check.detail);
        }
        table.push('\n');
    }
    let text = emit(output, to_json(&report), table)?;
    if report.passed() {
        Ok(text)
    } else {
        print!("{text}");
        Err(CliError::Failed("verification failed".into()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BenchRow {
    pub l: usize,
    pub erased: Vec<usize>,
    pub measured: u64,
    pub paper_bound: i64,
    pub naive: u64,
    pub exceeds_paper_bound: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BenchReport {
    pub params: CodeParams,
    pub seed: u64,
    pub rows: Vec<BenchRow>,
    pub skipped: Vec<String>,
}

/// Repairs `ℓ` spread erasures for each `ℓ = 1..t` on a seeded cluster.
pub fn bench(code: Arc<RMCode>, seed: u64) -> BenchReport {
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    let sealed = Cluster::from_seed(code.clone(), seed);
    for l in 1..=code.tower().t() as usize {
        let Some(erased) = verify::spread_erasures(&code, l) else {
            skipped.push(format!("l={l}: fewer than l distinct base-field values"));
            continue;
        };
        let mut cluster = sealed.clone();
        cluster
            .fail(&FailureEvent::new(erased.clone()))
            .expect("in range");
        let naive = cluster.naive_bandwidth(&erased);
        match (cluster.repair_failed(), naive) {
            (Ok(tr), Ok(naive)) => rows.push(BenchRow {
                l,
                erased,
                measured: tr.bandwidth_subsymbols,
                paper_bound: tr.paper_bound,
                naive,
                exceeds_paper_bound: tr.exceeds_paper_bound(),
            }),
            (Err(e), _) => skipped.push(format!("l={l}: {e}")),
            (_, Err(e)) => skipped.push(format!("l={l}: {e}")),
        }
    }
    BenchReport {
        params: code.params(),
        seed,
        rows,
        skipped,
    }
}

pub fn bench_csv(report: &BenchReport) -> String {
    let mut s = String::from("l,measured,paper_bound,naive\n");
    for r in &report.rows {
        let _ = writeln!(s, "{},{},{},{}", r.l, r.measured, r.paper_bound, r.naive);
    }
    s
}

fn cmd_bench(args: &CodeArgs, output: &OutputArgs) -> Result<String, CliError> {
    let report = bench(Arc::new(args.params().build()?), args.seed);
    let machine = match output.format {
        Format::Csv => bench_csv(&report),
        _ => to_json(&report),
    };
    if let Some(path) = &output.out {
        write_out(path, &machine)?;
    }
    if output.format != Format::Table {
        return Ok(machine);
    }
    let mut table = format!(
        "{:>3} {:>9} {:>12} {:>7}\n",
        "l", "measured", "paper_bound", "naive"
    );
    for r in &report.rows {
        let _ = write!(
            table,
            "{:>3} {:>9} {:>12} {:>7}",
            r.l, r.measured, r.paper_bound, r.naive
        );
        if r.exceeds_paper_bound {
            table.push_str("  measured exceeds paper bound");
        }
        table.push('\n');
    }
    for note in &report.skipped {
        let _ = writeln!(table, "skipped {note}");
    }
    Ok(table)
}

fn cmd_scenario(file: &Path, output: &OutputArgs) -> Result<String, CliError> {
    no_csv(output)?;
    let scenario: Scenario = read_json(file)?;
    let report = dss::run_scenario(&scenario)?;
    let mut table = String::new();
    for (i, step) in report.steps.iter().enumerate() {
        let _ = write!(table, "step {} failed={:?}", i + 1, step.failed);
        match (&step.transcript, &step.error) {
            (Some(tr), _) => {
                let _ = write!(
                    table,
                    " bandwidth={} paper={}",
                    tr.bandwidth_subsymbols, tr.paper_bound
                );
            }
            (None, Some(err)) => {
                let _ = write!(table, " refused: {err}");
            }
            (None, None) => {}
        }
        if let Some(naive) = step.naive {
            let _ = write!(table, " naive={naive}");
        }
        table.push('\n');
    }
    let text = emit(output, to_json(&report), table)?;
    if report.all_repaired() {
        Ok(text)
    } else {
        print!("{text}");
        Err(CliError::Usage(
            "scenario stopped at a refused repair".into(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Command {
        Cli::try_parse_from(std::iter::once("rmrepair").chain(args.iter().copied()))
            .unwrap()
            .command
    }

    #[test]
    fn field_trace_table() {
        let f = FieldTower::new(2, 1, 2).unwrap();
        let report = field_report(&f).unwrap();
        assert_eq!(report.trace, Some(vec![[0, 0], [1, 0], [2, 1], [3, 1]]));
        let f = FieldTower::new(3, 1, 3).unwrap();
        assert_eq!(field_report(&f).unwrap().kernel_basis.len(), 2);
        let f = FieldTower::new(5, 1, 1).unwrap();
        let report = field_report(&f).unwrap();
        assert!(report.trace.unwrap().iter().all(|[x, tr]| x == tr));
    }

    #[test]
    fn repair_summary_line() {
        let out = run(&parse(&["repair", "--failures", "5"])).unwrap();
        assert!(out.starts_with("bandwidth=18 paper=18 naive=26\n"), "{out}");
    }

    #[test]
    fn precondition_errors_exit_with_two() {
        let err = run(&parse(&["repair", "--failures", "0,8"])).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let err = run(&parse(&["repair", "--failures", "0,1,2"])).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let err = run(&parse(&["repair", "--d", "5", "--failures", "0"])).unwrap_err();
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn bench_rows() {
        let code = Arc::new(
            CodeParams {
                p: 2,
                a: 1,
                t: 2,
                m: 2,
                d: 4,
            }
            .build()
            .unwrap(),
        );
        let report = bench(code, 0);
        let cells: Vec<(usize, u64, i64)> = report
            .rows
            .iter()
            .map(|r| (r.l, r.measured, r.paper_bound))
            .collect();
        assert_eq!(cells, vec![(1, 18, 18), (2, 28, 32)]);
        assert_eq!(
            bench_csv(&report),
            "l,measured,paper_bound,naive\n1,18,18,26\n2,28,32,26\n"
        );

        let rs = Arc::new(
            CodeParams {
                p: 3,
                a: 1,
                t: 3,
                m: 1,
                d: 10,
            }
            .build()
            .unwrap(),
        );
        let row = bench(rs, 0).rows.pop().unwrap();
        assert_eq!((row.l, row.measured, row.paper_bound), (3, 72, 60));
        assert!(row.exceeds_paper_bound);

        let f8 = Arc::new(
            CodeParams {
                p: 2,
                a: 1,
                t: 3,
                m: 1,
                d: 3,
            }
            .build()
            .unwrap(),
        );
        let report = bench(f8, 0);
        assert_eq!(
            (report.rows[0].measured, report.rows[0].paper_bound),
            (7, 7)
        );
        assert_eq!(report.rows.len(), 2);
        assert_eq!(report.skipped.len(), 1);
    }
}
