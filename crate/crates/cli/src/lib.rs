//! `expert-mind` command line. Every verb is one store operation, run
//! in-process (`--local`, the default) or against a server (`--server`).

mod backend;
mod render;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand};
use serde_json::Value;

use expert_mind_core::extraction::{export_jsonl, import_jsonl, QueueRecord};
use expert_mind_core::governance::ConsentGrant;
use expert_mind_core::ids::{ArtifactId, ConsentId, DocId, ExpertId, JobId, QueryId, SampleId};
use expert_mind_core::index::MetadataFilter;
use expert_mind_core::model::ArtifactType;
use expert_mind_core::store::{Config, KnowledgeBase, Principal, Role};
use expert_mind_server::ApiError;

pub use backend::{Backend, Op};

pub const EXIT_OK: i32 = 0;
pub const EXIT_API: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

const DEFAULT_CONFIG: &str = "expert-mind.json";

#[derive(Parser, Debug)]
#[command(name = "expert-mind", version, about = "Capture, validate, query and erase expert knowledge")]
pub struct Cli {
    /// JSON config file (default: ./expert-mind.json if present).
    #[arg(long, global = true, env = "EXPERT_MIND_CONFIG")]
    config: Option<PathBuf>,
    /// Overrides the config's data directory.
    #[arg(long, global = true)]
    data_dir: Option<PathBuf>,
    /// Run against the store in this process (the default).
    #[arg(long, global = true, conflicts_with = "server")]
    local: bool,
    /// Base URL of a running server.
    #[arg(long, global = true, env = "EXPERT_MIND_SERVER")]
    server: Option<String>,
    /// Bearer token. Required with --server; locally it defaults to an operator Admin.
    #[arg(long, global = true, env = "EXPERT_MIND_TOKEN", hide_env_values = true)]
    token: Option<String>,
    /// Print the API's JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Serve the HTTP API.
    Serve,
    /// Register experts.
    #[command(subcommand)]
    Expert(ExpertCmd),
    /// Record, withdraw or export consent.
    #[command(subcommand)]
    Consent(ConsentCmd),
    /// Ingest upload files (or directories of them) and extract artifacts.
    Ingest {
        #[arg(required = true)]
        paths: Vec<PathBuf>,
        /// Only ingest; leave extraction for later.
        #[arg(long)]
        no_extract: bool,
    },
    /// Extract artifacts from ingested documents.
    Extract {
        #[arg(required = true)]
        doc_ids: Vec<DocId>,
    },
    /// Offline review of the validation queue.
    #[command(subcommand)]
    Queue(QueueCmd),
    /// Maintain the vector index.
    #[command(subcommand)]
    Index(IndexCmd),
    /// Ask a question; prints the answer and its citation table.
    Query(QueryArgs),
    /// Mark a response resolved or not.
    Feedback {
        query_id: QueryId,
        #[arg(long, action = clap::ArgAction::Set)]
        resolved: bool,
    },
    /// Erase an expert and everything derived from it.
    Erase { expert_id: ExpertId },
    /// Re-run a pending or failed erasure job.
    RetryErasure { job_id: JobId },
    /// Expire consents past their retention date.
    ExpireRetention,
    /// List erasure alerts.
    Alerts,
    /// Evaluation report for a date window.
    Report {
        from: NaiveDate,
        to: NaiveDate,
        /// Also write the JSON report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Review samples.
    #[command(subcommand)]
    Sample(SampleCmd),
    /// Rate a sampled response 1 to 5.
    Rate { sample_id: SampleId, query_id: QueryId, score: u8 },
    /// Submit a 0 to 10 recommendation score.
    Survey { score: u8 },
    /// Replay the artifact lifecycle log.
    Verify,
}

#[derive(Subcommand, Debug)]
enum ExpertCmd {
    /// Register an expert; prints its id and token.
    Add {
        name: String,
        #[arg(long = "tag")]
        tags: Vec<String>,
    },
}

#[derive(Subcommand, Debug)]
enum ConsentCmd {
    /// Record the consent grant in a JSON file.
    Grant {
        file: PathBuf,
        /// Expert the grant is for, if the file does not name one.
        #[arg(long)]
        expert: Option<ExpertId>,
    },
    Withdraw { consent_id: ConsentId },
    /// Print the consent with its signature.
    Export { consent_id: ConsentId },
}

#[derive(Subcommand, Debug)]
enum QueueCmd {
    /// Write an expert's pending artifacts as JSON lines.
    Export {
        #[arg(long)]
        expert: ExpertId,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Apply a reviewed queue file: unchanged lines approve, edited ones revise.
    Import { file: PathBuf },
}

#[derive(Subcommand, Debug)]
enum IndexCmd {
    /// Re-embed every validated and indexed artifact.
    Rebuild,
    /// Index one validated artifact.
    Add { artifact_id: ArtifactId },
}

#[derive(Subcommand, Debug)]
enum SampleCmd {
    Create {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    Show { sample_id: SampleId },
}

#[derive(Args, Debug)]
struct QueryArgs {
    question: String,
    #[arg(short, long)]
    k: Option<usize>,
    #[arg(long = "tag")]
    tags: Vec<String>,
    #[arg(long = "type", value_parser = parse_type)]
    types: Vec<ArtifactType>,
    #[arg(long)]
    from: Option<NaiveDate>,
    #[arg(long)]
    to: Option<NaiveDate>,
    #[arg(long)]
    min_confidence: Option<f64>,
}

fn parse_type(s: &str) -> Result<ArtifactType, String> {
    s.parse().map_err(|e| format!("{e}"))
}

impl QueryArgs {
    fn filter(&self) -> Option<MetadataFilter> {
        let f = MetadataFilter {
            artifact_types: (!self.types.is_empty()).then(|| self.types.iter().copied().collect()),
            domain_tags: (!self.tags.is_empty()).then(|| self.tags.iter().cloned().collect()),
            captured_from: self.from,
            captured_to: self.to,
            min_confidence: self.min_confidence,
        };
        (f != MetadataFilter::default()).then_some(f)
    }
}

/// Failure of one invocation, carrying its exit code.
struct Failure {
    code: i32,
    message: String,
}

impl From<ApiError> for Failure {
    fn from(e: ApiError) -> Self {
        Failure {
            code: EXIT_API,
            message: format!("error {} {}: {}", e.status, e.code, e.message),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: EXIT_USAGE,
        message: message.into(),
    }
}

/// Runs one invocation and returns its exit code.
pub fn run<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match execute(&cli, out) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "{}", f.message);
            f.code
        }
    }
}

fn load_config(cli: &Cli) -> Result<Config, Failure> {
    let mut config = match &cli.config {
        Some(path) => Config::load(path).map_err(|e| usage(e.to_string()))?,
        None if Path::new(DEFAULT_CONFIG).exists() => {
            Config::load(Path::new(DEFAULT_CONFIG)).map_err(|e| usage(e.to_string()))?
        }
        None => Config::default(),
    };
    if let Some(dir) = &cli.data_dir {
        config.data_dir = Some(dir.clone());
    }
    Ok(config)
}

fn backend(cli: &Cli) -> Result<Backend, Failure> {
    if let Some(url) = &cli.server {
        let token = cli
            .token
            .clone()
            .ok_or_else(|| usage("--server needs --token (or EXPERT_MIND_TOKEN)"))?;
        return Ok(Backend::remote(url, token));
    }
    let kb = KnowledgeBase::open(load_config(cli)?).map_err(ApiError::from)?;
    let principal = match &cli.token {
        Some(t) => kb.authenticate(t).map_err(ApiError::from)?,
        None => Principal::local("operator", Role::Admin),
    };
    Ok(Backend::Local {
        kb: Box::new(kb),
        principal,
    })
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), Failure> {
    std::fs::write(path, contents).map_err(|e| Failure {
        code: EXIT_API,
        message: format!("{}: {e}", path.display()),
    })
}

/// Files named by `paths`, with directories expanded in name order.
fn upload_files(paths: &[PathBuf]) -> Result<Vec<PathBuf>, Failure> {
    let mut files = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut inner: Vec<PathBuf> = std::fs::read_dir(p)
                .map_err(|e| usage(format!("{}: {e}", p.display())))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.is_file())
                .collect();
            inner.sort();
            files.extend(inner);
        } else if p.is_file() {
            files.push(p.clone());
        } else {
            return Err(usage(format!("{}: no such file or directory", p.display())));
        }
    }
    Ok(files)
}

fn emit(out: &mut dyn Write, cli: &Cli, value: &Value, text: impl FnOnce(&Value) -> String) {
    let body = if cli.json {
        serde_json::to_string_pretty(value).expect("json value") + "\n"
    } else {
        text(value)
    };
    let _ = out.write_all(body.as_bytes());
}

fn execute(cli: &Cli, out: &mut dyn Write) -> Result<(), Failure> {
    if let Command::Serve = cli.command {
        return serve(cli);
    }
    let b = backend(cli)?;
    let result = dispatch(cli, &b, out);
    b.finish()?;
    result
}

fn serve(cli: &Cli) -> Result<(), Failure> {
    let config = load_config(cli)?;
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).try_init();
    let rt = tokio::runtime::Runtime::new().map_err(|e| usage(e.to_string()))?;
    rt.block_on(expert_mind_server::serve(config)).map_err(ApiError::from)?;
    Ok(())
}

fn dispatch(cli: &Cli, b: &Backend, out: &mut dyn Write) -> Result<(), Failure> {
    match &cli.command {
        Command::Serve => unreachable!("handled before opening a backend"),
        Command::Expert(ExpertCmd::Add { name, tags }) => {
            let v = b.call(&Op::CreateExpert {
                display_name: name.clone(),
                domain_tags: tags.clone(),
            })?;
            emit(out, cli, &v, render::created_expert);
        }
        Command::Consent(ConsentCmd::Grant { file, expert }) => {
            let mut grant: ConsentGrant = serde_json::from_slice(&read(file)?)
                .map_err(|e| usage(format!("{}: {e}", file.display())))?;
            if expert.is_some() {
                grant.expert_id = *expert;
            }
            let v = b.call(&Op::GrantConsent(grant))?;
            emit(out, cli, &v, render::consent);
        }
        Command::Consent(ConsentCmd::Withdraw { consent_id }) => {
            let v = b.call(&Op::WithdrawConsent(*consent_id))?;
            emit(out, cli, &v, render::withdrawal);
        }
        Command::Consent(ConsentCmd::Export { consent_id }) => {
            let v = b.call(&Op::ExportConsent(*consent_id))?;
            let _ = writeln!(out, "{}", serde_json::to_string_pretty(&v).expect("json value"));
        }
        Command::Ingest { paths, no_extract } => {
            let files = upload_files(paths)?;
            let mut rows = Vec::new();
            for f in &files {
                let report = b.call(&Op::IngestDocument(read(f)?))?;
                let artifacts = if *no_extract {
                    None
                } else {
                    let doc: DocId = serde_json::from_value(report["doc_id"].clone()).expect("doc id");
                    Some(b.call(&Op::Extract(doc))?)
                };
                rows.push(render::IngestRow {
                    file: f.display().to_string(),
                    report,
                    artifacts,
                });
            }
            let v = serde_json::to_value(&rows).expect("json value");
            emit(out, cli, &v, |_| render::ingest(&rows));
        }
        Command::Extract { doc_ids } => {
            let mut all = Vec::new();
            for id in doc_ids {
                let v = b.call(&Op::Extract(*id))?;
                all.extend(v.as_array().cloned().unwrap_or_default());
            }
            emit(out, cli, &Value::Array(all), render::artifacts);
        }
        Command::Queue(QueueCmd::Export { expert, out: path }) => {
            let v = b.call(&Op::ExportQueue(*expert))?;
            let records: Vec<QueueRecord> = serde_json::from_value(v).expect("queue records");
            let lines = export_jsonl(&records);
            match path {
                Some(p) => {
                    write_file(p, lines.as_bytes())?;
                    let _ = writeln!(out, "{} records written to {}", records.len(), p.display());
                }
                None => {
                    let _ = out.write_all(lines.as_bytes());
                }
            }
        }
        Command::Queue(QueueCmd::Import { file }) => {
            let text = String::from_utf8(read(file)?).map_err(|e| usage(e.to_string()))?;
            let records = import_jsonl(&text).map_err(|e| usage(format!("{}: {e}", file.display())))?;
            let v = b.call(&Op::ImportQueue(records))?;
            emit(out, cli, &v, render::import_summary);
        }
        Command::Index(IndexCmd::Rebuild) => {
            let v = b.call(&Op::RebuildIndex)?;
            emit(out, cli, &v, render::rebuild);
        }
        Command::Index(IndexCmd::Add { artifact_id }) => {
            let v = b.call(&Op::IndexArtifact(*artifact_id))?;
            emit(out, cli, &v, |v| render::artifacts(&Value::Array(vec![v.clone()])));
        }
        Command::Query(q) => {
            let v = b.call(&Op::Answer {
                question: q.question.clone(),
                filter: q.filter(),
                k: q.k,
            })?;
            emit(out, cli, &v, render::response);
        }
        Command::Feedback { query_id, resolved } => {
            let v = b.call(&Op::Feedback {
                query_id: *query_id,
                resolved: *resolved,
            })?;
            emit(out, cli, &v, |v| format!("query {} resolved={}\n", v["query_id"].as_str().unwrap_or("?"), v["resolved_flag"]));
        }
        Command::Erase { expert_id } => {
            let v = b.call(&Op::RequestErasure(*expert_id))?;
            emit(out, cli, &v, render::erasure);
            job_outcome(&v)?;
        }
        Command::RetryErasure { job_id } => {
            let v = b.call(&Op::RetryErasure(*job_id))?;
            emit(out, cli, &v, render::erasure);
            job_outcome(&v)?;
        }
        Command::ExpireRetention => {
            let v = b.call(&Op::ExpireRetention)?;
            emit(out, cli, &v, |v| format!("{} consents expired\n", v.as_array().map_or(0, Vec::len)));
        }
        Command::Alerts => {
            let v = b.call(&Op::Alerts)?;
            emit(out, cli, &v, render::alerts);
        }
        Command::Report { from, to, out: path } => {
            let v = b.call(&Op::Metrics { from: *from, to: *to })?;
            if let Some(p) = path {
                let body = serde_json::to_string_pretty(&v).expect("json value") + "\n";
                write_file(p, body.as_bytes())?;
            }
            emit(out, cli, &v, render::report);
        }
        Command::Sample(SampleCmd::Create { n, seed }) => {
            let v = b.call(&Op::CreateSample { n: *n, seed: *seed })?;
            emit(out, cli, &v, render::sample);
        }
        Command::Sample(SampleCmd::Show { sample_id }) => {
            let v = b.call(&Op::Sample(*sample_id))?;
            emit(out, cli, &v, render::sample);
        }
        Command::Rate { sample_id, query_id, score } => {
            let v = b.call(&Op::RecordRating {
                sample_id: *sample_id,
                query_id: *query_id,
                score: *score,
            })?;
            emit(out, cli, &v, |v| format!("rated {} {}\n", v["query_id"].as_str().unwrap_or("?"), v["score"]));
        }
        Command::Survey { score } => {
            let v = b.call(&Op::SubmitSurvey(*score))?;
            emit(out, cli, &v, |v| format!("survey recorded: {}\n", v["score"]));
        }
        Command::Verify => {
            let v = b.call(&Op::VerifyHistory)?;
            emit(out, cli, &v, render::history);
            if !v["violation"].is_null() {
                return Err(Failure {
                    code: EXIT_API,
                    message: format!("history violation: {}", v["violation"]),
                });
            }
        }
    }
    Ok(())
}

/// A job that ended Failed is reported as an error after printing it.
fn job_outcome(v: &Value) -> Result<(), Failure> {
    if v["status"] == "Failed" {
        return Err(Failure {
            code: EXIT_API,
            message: format!(
                "erasure job {} failed: {}",
                v["job_id"].as_str().unwrap_or("?"),
                v["failure"].as_str().unwrap_or("residual data found")
            ),
        });
    }
    Ok(())
}
