//! Command-line front end. `dispatch` is the whole program minus process
//! exit, so tests can drive it directly.

use std::fmt::Write as _;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::catalog::api::{self, render};
use crate::catalog::Caller;
use crate::config::Config;
use crate::error::{Error, Result};
use crate::fixtures::bundled_corpus_dir;
use crate::graph::NodeId;
use crate::lake::{parse_id, Lake};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USER: i32 = 1;
pub const EXIT_INTERNAL: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "lakemeta", version, about = "Data-lake ingestion gateway and metadata catalog")]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value = "text")]
    pub format: Format,
    /// Acting user; defaults to the configured default user.
    #[arg(long, global = true)]
    pub user: Option<String>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Manage data sources.
    #[command(subcommand)]
    Source(SourceCommand),
    /// Ingest a source into the lake.
    Ingest(IngestArgs),
    /// Search visible datasets by keyword.
    Search { keyword: Option<String> },
    /// Show one dataset.
    Show(ShowArgs),
    /// Add a description and tags to a dataset.
    Annotate {
        dataset: String,
        #[arg(long)]
        description: Option<String>,
        #[arg(long = "tag")]
        tags: Vec<String>,
    },
    /// Set the sensitivity level of a dataset, entity or attribute.
    Mark {
        dataset: String,
        #[arg(long)]
        level: u32,
        /// Entity or attribute id inside the dataset.
        #[arg(long)]
        target: Option<String>,
    },
    /// Declare a relationship between two datasets.
    Relate {
        ds1: String,
        ds2: String,
        #[arg(long)]
        kind: String,
        #[arg(long, allow_negative_numbers = true)]
        value: f64,
        #[arg(long)]
        name: Option<String>,
        #[arg(long)]
        description: Option<String>,
    },
    /// Compute relationships between a dataset and every other dataset.
    Link { dataset: String },
    /// Profile a dataset that has not been profiled yet.
    Profile { dataset: String },
    /// Node and edge counts.
    Stats,
    /// Global dictionary entries.
    Dict {
        #[command(subcommand)]
        action: Option<DictCommand>,
    },
    /// Register and ingest a described corpus (the bundled one by default).
    LoadFixtures { dir: Option<PathBuf> },
    /// Replay the event log and report integrity problems.
    Check,
    /// Run the HTTP service.
    Serve {
        #[arg(long)]
        port: Option<u16>,
    },
}

#[derive(Debug, Subcommand)]
pub enum SourceCommand {
    Add {
        location: String,
        #[arg(long)]
        name: String,
        #[arg(long = "type")]
        source_type: String,
        #[arg(long)]
        owner: Option<String>,
        #[arg(long)]
        administrator: Option<String>,
        /// local-file, local-directory, http or stream-sim; inferred when absent.
        #[arg(long)]
        scheme: Option<String>,
        #[arg(long)]
        stream_origin: Option<String>,
        #[arg(long)]
        credentials_ref: Option<String>,
    },
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    pub source: String,
    #[arg(long, default_value = "batch")]
    pub mode: String,
    /// Window length in seconds (real-time only).
    #[arg(long)]
    pub duration: Option<f64>,
    /// Number of real-time windows.
    #[arg(long)]
    pub windows: Option<usize>,
    #[arg(long)]
    pub comment: Option<String>,
}

#[derive(Debug, Args)]
#[group(multiple = false)]
pub struct ShowView {
    #[arg(long)]
    pub lineage: bool,
    #[arg(long)]
    pub schema: bool,
    #[arg(long)]
    pub relationships: bool,
}

#[derive(Debug, Args)]
pub struct ShowArgs {
    pub dataset: String,
    #[command(flatten)]
    pub view: ShowView,
}

#[derive(Debug, Subcommand)]
pub enum DictCommand {
    List,
    Set { key: String, value: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

fn exit_code(error: &Error) -> i32 {
    if error.is_user_error() {
        EXIT_USER
    } else {
        EXIT_INTERNAL
    }
}

/// Parses `argv` (program name first) and runs the command.
pub fn dispatch<I, T>(argv: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USER } else { EXIT_OK };
            let text = e.render().to_string();
            return if code == EXIT_OK {
                Outcome { code, stdout: text, stderr: String::new() }
            } else {
                Outcome { code, stdout: String::new(), stderr: text }
            };
        }
    };
    match run(&cli) {
        Ok(value) => Outcome { code: EXIT_OK, stdout: format_output(cli.format, &cli.command, &value), stderr: String::new() },
        Err(e) => {
            let stderr = match cli.format {
                Format::Json => render(&json!({ "error": e.to_string() })),
                Format::Text => format!("error: {e}"),
            };
            Outcome { code: exit_code(&e), stdout: String::new(), stderr: stderr + "\n" }
        }
    }
}

fn is_read_only(command: &Command) -> bool {
    matches!(
        command,
        Command::Search { .. }
            | Command::Show(_)
            | Command::Stats
            | Command::Check
            | Command::Dict { action: None | Some(DictCommand::List) }
    )
}

fn run(cli: &Cli) -> Result<Value> {
    let config = Config::load(cli.config.as_deref())?;
    let user = cli.user.clone().unwrap_or_else(|| config.default_user.clone());
    let lake = if is_read_only(&cli.command) { Lake::open_read_only(config)? } else { Lake::open(config)? };
    let caller = lake.caller(Some(&user))?;
    if let Command::Serve { port } = cli.command {
        let addr = SocketAddr::from(([127, 0, 0, 1], port.unwrap_or(lake.config().port)));
        tokio::runtime::Runtime::new()?.block_on(crate::catalog::http::serve(Arc::new(lake), addr))?;
        return Ok(json!({ "stopped": true }));
    }
    execute(&lake, &caller, &cli.command)
}

fn id(text: &str) -> Result<NodeId> {
    parse_id(text)
}

fn execute(lake: &Lake, caller: &Caller, command: &Command) -> Result<Value> {
    match command {
        Command::Source(SourceCommand::Add {
            location,
            name,
            source_type,
            owner,
            administrator,
            scheme,
            stream_origin,
            credentials_ref,
        }) => {
            let body = api::SourceBody {
                location: location.clone(),
                scheme: scheme.clone(),
                name: name.clone(),
                source_type: source_type.clone(),
                owner: owner.clone(),
                administrator: administrator.clone(),
                stream_origin: stream_origin.as_deref().map(id).transpose()?,
                credentials_ref: credentials_ref.clone(),
            };
            api::add_source(lake, caller, &body)?.ok_or_else(|| Error::Unreachable(location.clone()))
        }
        Command::Ingest(args) => {
            let body = api::IngestBody {
                mode: Some(args.mode.clone()),
                comment: args.comment.clone(),
                defined_duration: args.duration,
                window_count: args.windows,
            };
            api::ingest(lake, caller, id(&args.source)?, &body)
        }
        Command::Search { keyword } => api::search(lake, caller, keyword.as_deref().unwrap_or("")),
        Command::Show(args) => {
            let ds = id(&args.dataset)?;
            if args.view.lineage {
                api::lineage(lake, caller, ds)
            } else if args.view.schema {
                api::schema(lake, caller, ds)
            } else if args.view.relationships {
                api::relationships(lake, caller, ds)
            } else {
                api::dataset(lake, caller, ds)
            }
        }
        Command::Annotate { dataset, description, tags } => api::annotate(
            lake,
            caller,
            id(dataset)?,
            &api::AnnotateBody { description: description.clone(), tags: tags.clone() },
        ),
        Command::Mark { dataset, level, target } => api::mark(
            lake,
            caller,
            id(dataset)?,
            &api::MarkBody { level: *level, target: target.as_deref().map(id).transpose()? },
        ),
        Command::Relate { ds1, ds2, kind, value, name, description } => api::relate(
            lake,
            caller,
            &api::RelateBody {
                ds1: id(ds1)?,
                ds2: id(ds2)?,
                kind: kind.clone(),
                value: *value,
                name: name.clone(),
                description: description.clone(),
            },
        ),
        Command::Link { dataset } => api::link(lake, caller, id(dataset)?),
        Command::Profile { dataset } => {
            let ds = id(dataset)?;
            lake.require_visible(ds, caller)?;
            Ok(serde_json::to_value(lake.profile_dataset(ds)?)?)
        }
        Command::Stats => api::stats(lake),
        Command::Dict { action: None | Some(DictCommand::List) } => Ok(api::global_dict(lake)),
        Command::Dict { action: Some(DictCommand::Set { key, value }) } => {
            api::put_global(lake, &api::DictBody { key: key.clone(), value: value.clone() })
        }
        Command::LoadFixtures { dir } => {
            let dir = dir.clone().unwrap_or_else(bundled_corpus_dir);
            Ok(serde_json::to_value(lake.load_corpus(&dir, &caller.name)?)?)
        }
        Command::Check => {
            let (last_seq, problems) = lake.store().read(|g| (g.last_seq(), g.integrity_violations()));
            if problems.is_empty() {
                Ok(json!({ "lastSeq": last_seq, "problems": problems }))
            } else {
                Err(Error::Validation(format!("{} integrity problem(s): {}", problems.len(), problems.join("; "))))
            }
        }
        Command::Serve { .. } => unreachable!("serve is handled by run"),
    }
}

fn format_output(format: Format, command: &Command, value: &Value) -> String {
    match format {
        Format::Json => render(value) + "\n",
        Format::Text => match command {
            Command::Search { .. } => {
                let mut out = String::new();
                for hit in value.as_array().into_iter().flatten() {
                    let tags: Vec<&str> =
                        hit["tags"].as_array().into_iter().flatten().filter_map(Value::as_str).collect();
                    let _ = writeln!(
                        out,
                        "{}  {}  [{}]  {}",
                        hit["id"].as_str().unwrap_or_default(),
                        hit["name"].as_str().unwrap_or_default(),
                        hit["type"].as_str().unwrap_or_default(),
                        tags.join(", ")
                    );
                }
                out
            }
            _ => serde_json::to_string_pretty(value).expect("json values always serialize") + "\n",
        },
    }
}
