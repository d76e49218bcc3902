//! Command-line front end behind the `opfreq` binary.
//!
//! Exit codes: 0 success, 1 usage error, 2 input that cannot be read or
//! parsed, 3 computation error. Failures print one JSON error record on
//! stderr. Every output file is staged in a temporary file next to its target
//! and only renamed into place once all outputs of the command are ready.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use crate::asm::{parse_program, serialize_program, Mnemonic, Program};
use crate::classify::{calibrate_threshold, classify, render_table, Calibration, ClassifierConfig};
use crate::distance::{distance_matrix, min_match, DistanceMatrix, MetricSpec};
use crate::histogram::{extract_features, HistogramCache, HistogramSet};
use crate::mutation::{make_family, mutate, swap_registers, MutationConfig, RegisterPermutation, Technique};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_COMPUTE: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {message}")]
    Input { path: PathBuf, message: String },
    #[error("{0}")]
    Compute(String),
    #[error("{path}: {message}")]
    Output { path: PathBuf, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Input { .. } => EXIT_INPUT,
            CliError::Compute(_) | CliError::Output { .. } => EXIT_COMPUTE,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Input { .. } => "input",
            CliError::Compute(_) => "computation",
            CliError::Output { .. } => "output",
        }
    }

    /// Single-line JSON record written to stderr on failure.
    pub fn record(&self) -> String {
        #[derive(Serialize)]
        struct Record<'a> {
            error: &'a str,
            code: i32,
            message: String,
            #[serde(skip_serializing_if = "Option::is_none")]
            path: Option<String>,
        }
        let path = match self {
            CliError::Input { path, .. } | CliError::Output { path, .. } => {
                Some(path.display().to_string())
            }
            _ => None,
        };
        let message = match self {
            CliError::Input { message, .. } | CliError::Output { message, .. } => message.clone(),
            other => other.to_string(),
        };
        serde_json::to_string(&Record {
            error: self.kind(),
            code: self.exit_code(),
            message,
            path,
        })
        .expect("error record serializes")
    }
}

fn input_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Input {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn compute_err(e: impl std::fmt::Display) -> CliError {
    CliError::Compute(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "opfreq", version, about = "Opcode-frequency distances between assembly listings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Debug, clap::Args)]
struct MetricArgs {
    /// Minkowski exponent r (>= 1)
    #[arg(long, default_value_t = 2.0)]
    exponent: f64,
    /// Take the 1/r root of the summed terms
    #[arg(long)]
    root: bool,
    /// JSON object mapping mnemonics to positive weights
    #[arg(long, value_name = "FILE")]
    weights: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Validate a listing and summarize its subroutines
    Parse {
        input: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Write `<stem>.hist.json` feature caches
    Features {
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
        /// Directory for the caches (defaults to each input's directory)
        #[arg(long, value_name = "DIR")]
        out_dir: Option<PathBuf>,
    },
    /// Directed distances both ways and the symmetric distance
    Compare {
        first: PathBuf,
        second: PathBuf,
        #[command(flatten)]
        metric: MetricArgs,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
    /// Pairwise matrix over every `.oasm` / `.hist.json` in a directory
    Matrix {
        dir: PathBuf,
        #[command(flatten)]
        metric: MetricArgs,
        /// CSV output path (3 decimals); CSV goes to stdout when neither output is given
        #[arg(long, value_name = "FILE")]
        csv: Option<PathBuf>,
        /// Full-precision JSON output path
        #[arg(long, value_name = "FILE")]
        json: Option<PathBuf>,
    },
    /// Threshold classification of a matrix (`.json` or `.csv`)
    Classify {
        matrix: PathBuf,
        #[arg(long)]
        threshold: f64,
        #[arg(long, value_enum, default_value_t = Format::Json)]
        format: Format,
        #[arg(long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Write one mutated variant
    Mutate {
        input: PathBuf,
        #[arg(long, value_parser = parse_technique)]
        technique: Technique,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.3)]
        density: f64,
        /// Explicit regswap mapping such as `edx=eax,eax=edx`
        #[arg(long)]
        permutation: Option<String>,
        #[arg(long, value_name = "FILE")]
        output: Option<PathBuf>,
    },
    /// Write N variants and a lineage manifest
    Family {
        input: PathBuf,
        #[arg(short = 'n', long = "count")]
        count: usize,
        /// Techniques applied in order to every variant; repeat the flag
        #[arg(long = "technique", value_parser = parse_technique)]
        techniques: Vec<Technique>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.3)]
        density: f64,
        #[arg(long, value_name = "DIR")]
        out_dir: PathBuf,
    },
    /// Largest threshold that separates labelled families
    Calibrate {
        matrix: PathBuf,
        /// CSV with columns `id,family`
        labels: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

fn parse_technique(s: &str) -> Result<Technique, String> {
    s.parse()
}

/// Files to write plus text for stdout, produced before anything touches disk.
#[derive(Debug, Default)]
struct Outcome {
    files: Vec<(PathBuf, Vec<u8>)>,
    stdout: String,
}

impl Outcome {
    fn file(&mut self, path: PathBuf, contents: impl Into<Vec<u8>>) {
        self.files.push((path, contents.into()));
    }
}

fn commit(files: &[(PathBuf, Vec<u8>)]) -> Result<(), CliError> {
    let out_err = |path: &Path, e: &dyn std::fmt::Display| CliError::Output {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let mut staged = Vec::with_capacity(files.len());
    for (path, bytes) in files {
        let dir = match path.parent() {
            Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
            _ => PathBuf::from("."),
        };
        fs::create_dir_all(&dir).map_err(|e| out_err(path, &e))?;
        let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(|e| out_err(path, &e))?;
        tmp.write_all(bytes).map_err(|e| out_err(path, &e))?;
        tmp.as_file().sync_all().map_err(|e| out_err(path, &e))?;
        staged.push((tmp, path));
    }
    let mut done: Vec<&PathBuf> = Vec::new();
    for (tmp, path) in staged {
        if let Err(e) = tmp.persist(path) {
            for p in done {
                let _ = fs::remove_file(p);
            }
            return Err(out_err(path, &e.error));
        }
        done.push(path);
    }
    Ok(())
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| input_err(path, e))
}

/// File name without `.oasm` / `.hist.json` / other final extension.
fn stem(path: &Path) -> String {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    if let Some(s) = name.strip_suffix(".hist.json") {
        return s.to_string();
    }
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or(name)
}

fn load_program(path: &Path) -> Result<(Program, String), CliError> {
    let text = read_text(path)?;
    let p = parse_program(&text, &stem(path)).map_err(|e| input_err(path, e))?;
    Ok((p, text))
}

/// Features of a listing or a `.hist.json` cache.
fn load_features(path: &Path) -> Result<HistogramSet, CliError> {
    let name = path.to_string_lossy();
    if name.ends_with(".hist.json") {
        let cache = HistogramCache::from_json(&read_text(path)?).map_err(|e| input_err(path, e))?;
        Ok(cache.features.with_program(stem(path)))
    } else {
        let (p, _) = load_program(path)?;
        extract_features(&p).map_err(compute_err)
    }
}

fn load_matrix(path: &Path) -> Result<DistanceMatrix, CliError> {
    let text = read_text(path)?;
    let m = if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        DistanceMatrix::from_csv(&text)
    } else {
        DistanceMatrix::from_json(&text)
    };
    m.map_err(|e| input_err(path, e))
}

fn metric(args: &MetricArgs) -> Result<MetricSpec, CliError> {
    let mut m = MetricSpec::minkowski(args.exponent)
        .map_err(|e| CliError::Usage(e.to_string()))?
        .with_root(args.root);
    if let Some(path) = &args.weights {
        let weights: BTreeMap<Mnemonic, f64> =
            serde_json::from_str(&read_text(path)?).map_err(|e| input_err(path, e))?;
        m = m.with_weights(weights).map_err(|e| input_err(path, e))?;
    }
    Ok(m)
}

fn json_line<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

fn cmd_parse(input: &Path, format: Format) -> Result<Outcome, CliError> {
    let (p, _) = load_program(input)?;
    #[derive(Serialize)]
    struct Sub<'a> {
        name: &'a str,
        instructions: usize,
        labels: usize,
    }
    #[derive(Serialize)]
    struct Summary<'a> {
        id: &'a str,
        subroutines: Vec<Sub<'a>>,
        instructions: usize,
        empty: Vec<&'a str>,
    }
    let summary = Summary {
        id: p.id(),
        subroutines: p
            .subroutines()
            .iter()
            .map(|s| Sub {
                name: s.name(),
                instructions: s.body().len(),
                labels: s.labels().len(),
            })
            .collect(),
        instructions: p.instruction_count(),
        empty: p.empty_subroutines(),
    };
    let stdout = match format {
        Format::Json => json_line(&summary),
        Format::Text => {
            let mut s = format!(
                "{}: {} subroutine(s), {} instruction(s)\n",
                summary.id,
                summary.subroutines.len(),
                summary.instructions
            );
            for sub in &summary.subroutines {
                s.push_str(&format!(
                    "  {}: {} instructions, {} labels\n",
                    sub.name, sub.instructions, sub.labels
                ));
            }
            s
        }
    };
    Ok(Outcome {
        stdout,
        ..Outcome::default()
    })
}

fn cmd_features(inputs: &[PathBuf], out_dir: Option<&Path>) -> Result<Outcome, CliError> {
    let mut out = Outcome::default();
    for input in inputs {
        let (p, text) = load_program(input)?;
        let cache = HistogramCache::build(&p, text.as_bytes()).map_err(compute_err)?;
        let dir = out_dir
            .map(Path::to_path_buf)
            .or_else(|| input.parent().map(Path::to_path_buf))
            .unwrap_or_default();
        let target = dir.join(format!("{}.hist.json", p.id()));
        out.stdout.push_str(&format!(
            "{} ({} histograms",
            target.display(),
            cache.features.len()
        ));
        if !cache.features.skipped().is_empty() {
            out.stdout
                .push_str(&format!(", skipped empty: {}", cache.features.skipped().join(", ")));
        }
        out.stdout.push_str(")\n");
        out.file(target, cache.to_json());
    }
    Ok(out)
}

fn cmd_compare(a: &Path, b: &Path, args: &MetricArgs, format: Format) -> Result<Outcome, CliError> {
    let m = metric(args)?;
    let fa = load_features(a)?;
    let fb = load_features(b)?;
    let forward = min_match(&fa, &fb, &m).map_err(compute_err)?;
    let backward = min_match(&fb, &fa, &m).map_err(compute_err)?;
    let symmetric = (forward.directed + backward.directed) / 2.0;
    let stdout = match format {
        Format::Json => {
            #[derive(Serialize)]
            struct Report<'a> {
                forward: &'a crate::distance::MatchReport,
                backward: &'a crate::distance::MatchReport,
                symmetric: f64,
            }
            json_line(&Report {
                forward: &forward,
                backward: &backward,
                symmetric,
            })
        }
        Format::Text => format!(
            "d({0} -> {1}) = {2:.3}\nd({1} -> {0}) = {3:.3}\nD({0}, {1}) = {4:.3}\n",
            fa.program(),
            fb.program(),
            forward.directed,
            backward.directed,
            symmetric
        ),
    };
    Ok(Outcome {
        stdout,
        ..Outcome::default()
    })
}

/// Features for every program in `dir`, ordered by stem. A `.hist.json` next
/// to an `.oasm` of the same stem is used only when its digest matches.
fn load_directory(dir: &Path) -> Result<Vec<HistogramSet>, CliError> {
    let entries = fs::read_dir(dir).map_err(|e| input_err(dir, e))?;
    let mut listings: BTreeMap<String, PathBuf> = BTreeMap::new();
    let mut caches: BTreeMap<String, PathBuf> = BTreeMap::new();
    for entry in entries {
        let path = entry.map_err(|e| input_err(dir, e))?.path();
        if !path.is_file() {
            continue;
        }
        let name = path.file_name().unwrap_or_default().to_string_lossy().into_owned();
        if name.ends_with(".hist.json") {
            caches.insert(stem(&path), path);
        } else if name.ends_with(".oasm") {
            listings.insert(stem(&path), path);
        }
    }
    let mut stems: Vec<&String> = listings.keys().chain(caches.keys()).collect();
    stems.sort();
    stems.dedup();
    let mut sets = Vec::with_capacity(stems.len());
    for s in stems {
        let set = match (listings.get(s), caches.get(s)) {
            (Some(listing), cache) => {
                let (p, text) = load_program(listing)?;
                let fresh = cache
                    .and_then(|c| fs::read_to_string(c).ok())
                    .and_then(|t| HistogramCache::from_json(&t).ok())
                    .filter(|c| c.is_fresh_for(text.as_bytes()));
                match fresh {
                    Some(c) => c.features.with_program(s.clone()),
                    None => extract_features(&p).map_err(compute_err)?,
                }
            }
            (None, Some(cache)) => load_features(cache)?,
            (None, None) => unreachable!("stem came from one of the maps"),
        };
        sets.push(set);
    }
    Ok(sets)
}

fn cmd_matrix(
    dir: &Path,
    args: &MetricArgs,
    csv: Option<PathBuf>,
    json: Option<PathBuf>,
) -> Result<Outcome, CliError> {
    let m = metric(args)?;
    let sets = load_directory(dir)?;
    let matrix = distance_matrix(&sets, &m).map_err(compute_err)?;
    let mut out = Outcome::default();
    if csv.is_none() && json.is_none() {
        out.stdout = matrix.to_csv();
    }
    if let Some(p) = csv {
        out.file(p, matrix.to_csv());
    }
    if let Some(p) = json {
        out.file(p, matrix.to_json());
    }
    Ok(out)
}

fn cmd_classify(
    matrix: &Path,
    threshold: f64,
    format: Format,
    output: Option<PathBuf>,
) -> Result<Outcome, CliError> {
    let cfg = ClassifierConfig::new(threshold).map_err(|e| CliError::Usage(e.to_string()))?;
    let m = load_matrix(matrix)?;
    let c = classify(&m, &cfg).map_err(compute_err)?;
    let text = match format {
        Format::Json => c.to_json(),
        Format::Text => {
            let mut s = render_table(&m, &cfg);
            s.push('\n');
            for (k, cluster) in c.clusters.iter().enumerate() {
                s.push_str(&format!("cluster {}: {}\n", k + 1, cluster.join(", ")));
            }
            s
        }
    };
    Ok(route(text, output))
}

fn route(text: String, output: Option<PathBuf>) -> Outcome {
    let mut out = Outcome::default();
    match output {
        Some(p) => out.file(p, text),
        None => out.stdout = text,
    }
    out
}

fn cmd_mutate(
    input: &Path,
    technique: Technique,
    seed: u64,
    density: f64,
    permutation: Option<&str>,
    output: Option<PathBuf>,
) -> Result<Outcome, CliError> {
    let cfg = MutationConfig::new(technique, seed, density).map_err(|e| CliError::Usage(e.to_string()))?;
    let perm = match permutation {
        Some(_) if technique != Technique::Regswap => {
            return Err(CliError::Usage("--permutation only applies to --technique regswap".into()))
        }
        Some(s) => Some(s.parse::<RegisterPermutation>().map_err(|e| CliError::Usage(e.to_string()))?),
        None => None,
    };
    let (p, _) = load_program(input)?;
    let variant = match perm {
        Some(perm) => swap_registers(&p, &perm),
        None => mutate(&p, &cfg),
    }
    .map_err(compute_err)?;
    Ok(route(serialize_program(&variant), output))
}

fn cmd_family(
    input: &Path,
    count: usize,
    techniques: &[Technique],
    seed: u64,
    density: f64,
    out_dir: &Path,
) -> Result<Outcome, CliError> {
    if count == 0 {
        return Err(CliError::Usage("--count must be at least 1".into()));
    }
    let cfgs = techniques
        .iter()
        .map(|&t| MutationConfig::new(t, seed, density))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    let (p, _) = load_program(input)?;
    let family = make_family(&p, count, &cfgs).map_err(compute_err)?;
    let mut out = Outcome::default();
    for v in &family.variants {
        let path = out_dir.join(format!("{}.oasm", v.id()));
        out.stdout.push_str(&format!("{}\n", path.display()));
        out.file(path, serialize_program(v));
    }
    let manifest = out_dir.join(format!("{}.lineage.json", p.id()));
    out.stdout.push_str(&format!("{}\n", manifest.display()));
    out.file(manifest, family.manifest.to_json());
    Ok(out)
}

fn load_labels(path: &Path) -> Result<BTreeMap<String, String>, CliError> {
    let text = read_text(path)?;
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = r.headers().map_err(|e| input_err(path, e))?;
    if header.iter().collect::<Vec<_>>() != ["id", "family"] {
        return Err(input_err(path, "expected header `id,family`"));
    }
    let mut labels = BTreeMap::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| input_err(path, e))?;
        let (id, fam) = (rec[0].to_string(), rec[1].to_string());
        if labels.insert(id.clone(), fam).is_some() {
            return Err(input_err(path, format!("`{id}` is labelled twice")));
        }
    }
    Ok(labels)
}

fn cmd_calibrate(matrix: &Path, labels: &Path, format: Format) -> Result<Outcome, CliError> {
    let m = load_matrix(matrix)?;
    let labels = load_labels(labels)?;
    let cal = calibrate_threshold(&m, &labels).map_err(compute_err)?;
    let stdout = match format {
        Format::Json => json_line(&cal),
        Format::Text => match cal {
            Calibration::Separable {
                threshold,
                intra_max,
                inter_min,
            } => format!(
                "threshold {threshold}\nintra-family max {intra_max}\ninter-family min {inter_min}\n"
            ),
            Calibration::Overlap {
                intra_max,
                inter_min,
            } => format!(
                "no separating threshold\nintra-family max {intra_max}\ninter-family min {inter_min}\n"
            ),
        },
    };
    Ok(Outcome {
        stdout,
        ..Outcome::default()
    })
}

fn execute(cli: Cli) -> Result<Outcome, CliError> {
    match cli.command {
        Command::Parse { input, format } => cmd_parse(&input, format),
        Command::Features { inputs, out_dir } => cmd_features(&inputs, out_dir.as_deref()),
        Command::Compare {
            first,
            second,
            metric,
            format,
        } => cmd_compare(&first, &second, &metric, format),
        Command::Matrix {
            dir,
            metric,
            csv,
            json,
        } => cmd_matrix(&dir, &metric, csv, json),
        Command::Classify {
            matrix,
            threshold,
            format,
            output,
        } => cmd_classify(&matrix, threshold, format, output),
        Command::Mutate {
            input,
            technique,
            seed,
            density,
            permutation,
            output,
        } => cmd_mutate(&input, technique, seed, density, permutation.as_deref(), output),
        Command::Family {
            input,
            count,
            techniques,
            seed,
            density,
            out_dir,
        } => cmd_family(&input, count, &techniques, seed, density, &out_dir),
        Command::Calibrate {
            matrix,
            labels,
            format,
        } => cmd_calibrate(&matrix, &labels, format),
    }
}

/// Runs one invocation, writing to the given streams. Returns the exit code.
pub fn run_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return EXIT_OK;
            }
            let _ = write!(stderr, "{e}");
            let _ = writeln!(stderr, "{}", CliError::Usage(e.kind().to_string()).record());
            return EXIT_USAGE;
        }
    };
    let result = execute(cli).and_then(|out| {
        commit(&out.files)?;
        Ok(out.stdout)
    });
    match result {
        Ok(text) => {
            let _ = stdout.write_all(text.as_bytes());
            EXIT_OK
        }
        Err(e) => {
            let _ = writeln!(stderr, "{}", e.record());
            e.exit_code()
        }
    }
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    run_with(args, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run_with(std::iter::once("opfreq").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn help_and_usage_codes() {
        assert_eq!(call(&["--help"]).0, EXIT_OK);
        assert_eq!(call(&["--version"]).0, EXIT_OK);
        assert_eq!(call(&[]).0, EXIT_USAGE);
        let (code, _, err) = call(&["mutate", "x.oasm", "--technique", "shuffle"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.lines().last().unwrap().starts_with("{\"error\":\"usage\""));
    }

    #[test]
    fn stems() {
        assert_eq!(stem(Path::new("d/a.hist.json")), "a");
        assert_eq!(stem(Path::new("d/a.oasm")), "a");
        assert_eq!(stem(Path::new("b.v1.oasm")), "b.v1");
    }

    #[test]
    fn missing_input_is_input_error() {
        let (code, _, err) = call(&["parse", "/nonexistent/x.oasm"]);
        assert_eq!(code, EXIT_INPUT);
        let rec: serde_json::Value = serde_json::from_str(err.trim()).unwrap();
        assert_eq!(rec["error"], "input");
        assert_eq!(rec["path"], "/nonexistent/x.oasm");
    }

    #[test]
    fn bad_flags_rejected_before_reading() {
        assert_eq!(call(&["classify", "/nonexistent.json", "--threshold", "-1"]).0, EXIT_USAGE);
        assert_eq!(
            call(&["mutate", "/nonexistent.oasm", "--technique", "garbage", "--density", "2"]).0,
            EXIT_USAGE
        );
        assert_eq!(call(&["compare", "/a", "/b", "--exponent", "0.5"]).0, EXIT_USAGE);
    }

    #[test]
    fn commit_writes_all_or_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let good = dir.path().join("a.txt");
        // a directory in the way makes the second rename fail
        let blocked = dir.path().join("blocked");
        fs::create_dir(&blocked).unwrap();
        fs::write(blocked.join("keep"), "x").unwrap();
        let err = commit(&[(good.clone(), b"1".to_vec()), (blocked, b"2".to_vec())]);
        assert!(err.is_err());
        assert!(!good.exists());
        let names: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(names, vec![std::ffi::OsString::from("blocked")]);
    }
}
