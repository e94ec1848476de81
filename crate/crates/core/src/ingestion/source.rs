//! Source descriptors and payload fetching.

use std::fmt;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hashing::{directory_digest, sha256_hex, splitmix64};
use crate::profiler::table::member_files;

pub const STREAM_SIM_PREFIX: &str = "stream-sim://";
const GENERATOR_HOST: &str = "gen";

/// Largest HTTP body accepted by a fetch.
const HTTP_LIMIT: u64 = 256 * 1024 * 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    LocalFile,
    LocalDirectory,
    Http,
    StreamSim,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::LocalFile => "local-file",
            Scheme::LocalDirectory => "local-directory",
            Scheme::Http => "http",
            Scheme::StreamSim => "stream-sim",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "local-file" => Ok(Scheme::LocalFile),
            "local-directory" => Ok(Scheme::LocalDirectory),
            "http" => Ok(Scheme::Http),
            "stream-sim" => Ok(Scheme::StreamSim),
            other => Err(Error::Validation(format!("unknown scheme `{other}`"))),
        }
    }
}

/// Where a source lives and how to reach it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SourceConnection {
    pub scheme: Scheme,
    pub location: String,
    #[serde(rename = "credentialsRef", skip_serializing_if = "Option::is_none")]
    pub credentials_ref: Option<String>,
}

impl SourceConnection {
    /// Infers the scheme from the location: `http(s)://` URLs, `stream-sim://`
    /// streams, otherwise a local path (`file://` optional) that is a
    /// directory or a file.
    pub fn parse(location: &str) -> Result<Self> {
        let location = location.trim();
        if location.is_empty() {
            return Err(Error::Validation("empty source location".into()));
        }
        let scheme = if location.starts_with("http://") || location.starts_with("https://") {
            Scheme::Http
        } else if location.starts_with(STREAM_SIM_PREFIX) {
            Scheme::StreamSim
        } else if local_path(location).is_dir() {
            Scheme::LocalDirectory
        } else {
            Scheme::LocalFile
        };
        Self::new(scheme, location)
    }

    /// Builds a connection with an explicit scheme; the location must agree.
    pub fn new(scheme: Scheme, location: &str) -> Result<Self> {
        let location = location.trim();
        if location.is_empty() {
            return Err(Error::Validation("empty source location".into()));
        }
        let is_http = location.starts_with("http://") || location.starts_with("https://");
        let is_stream = location.starts_with(STREAM_SIM_PREFIX);
        let consistent = match scheme {
            Scheme::Http => is_http,
            Scheme::StreamSim => is_stream,
            Scheme::LocalFile | Scheme::LocalDirectory => {
                location.starts_with("file://") || !location.contains("://")
            }
        };
        if !consistent {
            return Err(Error::Validation(format!("location `{location}` does not match scheme {scheme}")));
        }
        if scheme == Scheme::StreamSim {
            StreamSpec::parse(location)?;
        }
        Ok(SourceConnection { scheme, location: location.to_string(), credentials_ref: None })
    }

    pub fn with_credentials(mut self, reference: impl Into<String>) -> Self {
        self.credentials_ref = Some(reference.into());
        self
    }

    /// Whether the source answers right now. Never advances a stream.
    pub fn reachable(&self) -> bool {
        match self.scheme {
            Scheme::LocalFile => local_path(&self.location).is_file(),
            Scheme::LocalDirectory => local_path(&self.location).is_dir(),
            Scheme::Http => ureq::head(&self.location).call().is_ok(),
            Scheme::StreamSim => matches!(StreamSpec::parse(&self.location), Ok(spec) if spec.payload(0).is_ok()),
        }
    }

    /// Reads the payload the source currently offers. `poll` is the index
    /// of this read among the reads of a generated stream.
    pub fn fetch(&self, poll: u64) -> Result<Payload> {
        match self.scheme {
            Scheme::LocalFile => {
                let path = local_path(&self.location);
                let bytes = fs::read(&path).map_err(|e| unreachable_err(&self.location, e))?;
                Ok(Payload::File { bytes, extension: extension_of(&path) })
            }
            Scheme::LocalDirectory => read_directory(&local_path(&self.location))
                .map_err(|e| Error::Unreachable(format!("{}: {e}", self.location))),
            Scheme::Http => {
                let mut response =
                    ureq::get(&self.location).call().map_err(|e| Error::Unreachable(format!("{}: {e}", self.location)))?;
                let mut bytes = Vec::new();
                response
                    .body_mut()
                    .as_reader()
                    .take(HTTP_LIMIT)
                    .read_to_end(&mut bytes)
                    .map_err(|e| unreachable_err(&self.location, e))?;
                let path = self.location.split(['?', '#']).next().unwrap_or_default();
                Ok(Payload::File { bytes, extension: extension_of(Path::new(path)) })
            }
            Scheme::StreamSim => StreamSpec::parse(&self.location)?.payload(poll),
        }
    }

    pub(crate) fn is_generator(&self) -> bool {
        matches!(StreamSpec::parse(&self.location), Ok(StreamSpec::Generator { .. }))
    }
}

fn unreachable_err(location: &str, e: std::io::Error) -> Error {
    Error::Unreachable(format!("{location}: {e}"))
}

fn local_path(location: &str) -> PathBuf {
    PathBuf::from(location.strip_prefix("file://").unwrap_or(location))
}

fn extension_of(path: &Path) -> String {
    path.extension()
        .and_then(|e| e.to_str())
        .filter(|e| !e.is_empty() && e.chars().all(|c| c.is_ascii_alphanumeric()))
        .map(str::to_ascii_lowercase)
        .unwrap_or_else(|| "bin".to_string())
}

fn read_directory(dir: &Path) -> Result<Payload> {
    let mut files = Vec::new();
    for path in member_files(dir)? {
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
        files.push((name, fs::read(&path)?));
    }
    Ok(Payload::Directory { files })
}

/// Bytes offered by a source at one point in time.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Payload {
    File { bytes: Vec<u8>, extension: String },
    /// Regular files by name, in name order.
    Directory { files: Vec<(String, Vec<u8>)> },
}

impl Payload {
    pub fn content_hash(&self) -> String {
        match self {
            Payload::File { bytes, .. } => sha256_hex(bytes),
            Payload::Directory { files } => directory_digest(files),
        }
    }

    pub fn size_bytes(&self) -> u64 {
        match self {
            Payload::File { bytes, .. } => bytes.len() as u64,
            Payload::Directory { files } => files.iter().map(|(_, b)| b.len() as u64).sum(),
        }
    }
}

/// Simulated stream. Either a directory whose newest file (by name) is the
/// current payload, or a seeded generator whose content changes every
/// `change_every` polls and which disappears after `vanish_after` polls.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StreamSpec {
    Directory(PathBuf),
    Generator { seed: u64, rows: u64, change_every: u64, vanish_after: Option<u64> },
}

impl StreamSpec {
    pub fn parse(location: &str) -> Result<Self> {
        let rest = location
            .strip_prefix(STREAM_SIM_PREFIX)
            .ok_or_else(|| Error::Validation(format!("`{location}` is not a stream-sim location")))?;
        let (host, query) = rest.split_once('?').unwrap_or((rest, ""));
        if host != GENERATOR_HOST {
            if !query.is_empty() || host.is_empty() {
                return Err(Error::Validation(format!("malformed stream location `{location}`")));
            }
            return Ok(StreamSpec::Directory(PathBuf::from(host)));
        }
        let (mut seed, mut rows, mut change_every, mut vanish_after) = (0, 10, 1, None);
        for pair in query.split('&').filter(|p| !p.is_empty()) {
            let (key, value) =
                pair.split_once('=').ok_or_else(|| Error::Validation(format!("malformed parameter `{pair}`")))?;
            let number: u64 =
                value.parse().map_err(|_| Error::Validation(format!("parameter `{key}` is not an integer")))?;
            match key {
                "seed" => seed = number,
                "rows" => rows = number,
                "change_every" => change_every = number,
                "vanish_after" => vanish_after = Some(number),
                _ => return Err(Error::Validation(format!("unknown stream parameter `{key}`"))),
            }
        }
        if change_every == 0 || rows == 0 {
            return Err(Error::Validation("rows and change_every must be positive".into()));
        }
        Ok(StreamSpec::Generator { seed, rows, change_every, vanish_after })
    }

    pub fn payload(&self, poll: u64) -> Result<Payload> {
        match self {
            StreamSpec::Directory(dir) => {
                let newest = member_files(dir)
                    .ok()
                    .and_then(|files| files.into_iter().next_back())
                    .ok_or_else(|| Error::Unreachable(format!("stream directory {} is empty or gone", dir.display())))?;
                let bytes = fs::read(&newest).map_err(|e| unreachable_err(&newest.display().to_string(), e))?;
                Ok(Payload::File { bytes, extension: extension_of(&newest) })
            }
            StreamSpec::Generator { seed, rows, change_every, vanish_after } => {
                if vanish_after.is_some_and(|limit| poll >= limit) {
                    return Err(Error::Unreachable(format!("stream vanished after {} polls", poll)));
                }
                let window = poll / change_every;
                Ok(Payload::File { bytes: generate_window(*seed, window, *rows), extension: "csv".into() })
            }
        }
    }
}

/// CSV rows `id,reading,station` drawn from SplitMix64 keyed on
/// (seed, window).
fn generate_window(seed: u64, window: u64, rows: u64) -> Vec<u8> {
    let mut state = splitmix64(seed ^ splitmix64(window));
    let mut out = String::from("id,reading,station\n");
    for id in 0..rows {
        state = splitmix64(state);
        let reading = (state % 100_000) as f64 / 100.0;
        let station = ["north", "south", "east", "west"][(state >> 40) as usize % 4];
        out.push_str(&format!("{id},{reading},{station}\n"));
    }
    out.into_bytes()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schemes_are_inferred() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("a.csv");
        fs::write(&file, "a\n1\n").unwrap();
        assert_eq!(SourceConnection::parse(file.to_str().unwrap()).unwrap().scheme, Scheme::LocalFile);
        assert_eq!(SourceConnection::parse(dir.path().to_str().unwrap()).unwrap().scheme, Scheme::LocalDirectory);
        assert_eq!(SourceConnection::parse("http://localhost:1/x.csv").unwrap().scheme, Scheme::Http);
        assert_eq!(SourceConnection::parse("stream-sim://gen?seed=1").unwrap().scheme, Scheme::StreamSim);
        assert!(SourceConnection::parse("stream-sim://gen?seed=x").is_err());
        assert!(SourceConnection::parse("  ").is_err());
        assert!(SourceConnection::new(Scheme::Http, "/tmp/x").is_err());
        assert!(SourceConnection::new(Scheme::LocalFile, "ftp://host/x").is_err());
    }

    #[test]
    fn local_reachability() {
        let dir = tempfile::tempdir().unwrap();
        let missing = SourceConnection::parse(dir.path().join("none.csv").to_str().unwrap()).unwrap();
        assert!(!missing.reachable());
        assert!(matches!(missing.fetch(0), Err(Error::Unreachable(_))));
        assert!(!SourceConnection::parse("http://127.0.0.1:9/x").unwrap().reachable());
    }

    #[test]
    fn generator_changes_per_window_and_vanishes() {
        let spec = StreamSpec::parse("stream-sim://gen?seed=7&rows=5&change_every=2&vanish_after=5").unwrap();
        let p: Vec<String> = (0..5).map(|i| spec.payload(i).unwrap().content_hash()).collect();
        assert_eq!(p[0], p[1]);
        assert_ne!(p[1], p[2]);
        assert_eq!(p[2], p[3]);
        assert_ne!(p[3], p[4]);
        assert!(matches!(spec.payload(5), Err(Error::Unreachable(_))));
        let again = StreamSpec::parse("stream-sim://gen?seed=7&rows=5&change_every=2").unwrap();
        assert_eq!(again.payload(0).unwrap().content_hash(), p[0]);
    }

    #[test]
    fn directory_stream_serves_newest_file() {
        let dir = tempfile::tempdir().unwrap();
        let spec = StreamSpec::parse(&format!("stream-sim://{}", dir.path().display())).unwrap();
        assert!(spec.payload(0).is_err());
        fs::write(dir.path().join("w001.csv"), "a\n1\n").unwrap();
        fs::write(dir.path().join("w002.csv"), "a\n2\n").unwrap();
        match spec.payload(0).unwrap() {
            Payload::File { bytes, extension } => {
                assert_eq!(bytes, b"a\n2\n");
                assert_eq!(extension, "csv");
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
