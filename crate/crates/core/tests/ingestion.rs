use std::io::{BufRead, BufReader, Write};
use std::net::TcpListener;
use std::path::Path;
use std::process::Command;

use lakemeta::graph::registry::{DATASET_SOURCE_INGEST, INGEST_DATASET};
use lakemeta::graph::NodeLabel;
use lakemeta::ingestion::{IngestMode, IngestRequest, NewSource, RawZone, Scheme, SourceConnection};
use lakemeta::{Config, Error, Lake};

fn lake(root: &Path) -> Lake {
    Lake::open(Config::rooted_at(root)).unwrap()
}

fn spec(name: &str) -> NewSource {
    NewSource { name: name.into(), source_type: "file".into(), owner: "ops".into(), ..Default::default() }
}

fn connect(lake: &Lake, location: &str, name: &str) -> lakemeta::graph::NodeId {
    let conn = SourceConnection::parse(location).unwrap();
    lake.connect_data_source(&conn, &spec(name)).unwrap().expect("reachable")
}

fn sha256sum(path: &Path) -> String {
    let out = Command::new("sha256sum").arg(path).output().unwrap();
    String::from_utf8(out.stdout).unwrap().split_whitespace().next().unwrap().to_string()
}

#[test]
fn unreachable_sources_are_not_registered() {
    let dir = tempfile::tempdir().unwrap();
    let lake = lake(dir.path());
    let conn = SourceConnection::parse(&dir.path().join("missing.csv").to_string_lossy()).unwrap();
    assert_eq!(lake.connect_data_source(&conn, &spec("missing")).unwrap(), None);
    assert!(lake.store().query(NodeLabel::DatasetSource, |_| true).is_empty());
}

#[test]
fn batch_ingest_copies_bytes_into_the_raw_zone() {
    let dir = tempfile::tempdir().unwrap();
    let lake = lake(dir.path());
    let file = dir.path().join("readings.csv");
    std::fs::write(&file, "station,reading\na,1.5\nb,2.5\n").unwrap();
    let source = connect(&lake, &file.to_string_lossy(), "readings");

    let first = lake.ingest_dataset(source, &IngestRequest::batch("admin").with_comment("first")).unwrap();
    assert!(first.succeeded());
    let dataset = lake.dataset(first.dataset.unwrap()).unwrap();
    let lake_path = dataset.text("lakePath").unwrap();
    assert!(lake_path.ends_with("/v1/data.csv"), "{lake_path}");
    let stored = lake.raw_zone().join(lake_path);
    assert_eq!(std::fs::read(&stored).unwrap(), std::fs::read(&file).unwrap());
    assert_eq!(dataset.text("contentHash"), Some(sha256sum(&file).as_str()));
    let manifest = RawZone::new(lake.raw_zone()).read_manifest(lake_path).unwrap();
    assert_eq!(manifest.content_hash, sha256sum(&file));

    let ingest = lake.store().node(first.ingest).unwrap();
    assert_eq!(ingest.text("mode"), Some("batch"));
    assert_eq!(ingest.text("comment"), Some("first"));
    assert!(ingest.timestamp("ingestionEndTime") >= ingest.timestamp("ingestionStartTime"));
    assert_eq!(ingest.text("configHash"), Some(lake.config().hash().as_str()));

    // batch runs always make a new version, even when nothing changed
    let second = lake.ingest_dataset(source, &IngestRequest::batch("admin")).unwrap();
    assert_eq!(second.version, Some(2));
    assert!(lake.raw_zone().join(lake.dataset(second.dataset.unwrap()).unwrap().text("lakePath").unwrap()).exists());
}

#[test]
fn a_source_that_vanishes_leaves_a_failed_run() {
    let dir = tempfile::tempdir().unwrap();
    let lake = lake(dir.path());
    let file = dir.path().join("gone.csv");
    std::fs::write(&file, "a,b\n1,2\n").unwrap();
    let source = connect(&lake, &file.to_string_lossy(), "gone");
    std::fs::remove_file(&file).unwrap();
    let outcome = lake.ingest_dataset(source, &IngestRequest::batch("admin")).unwrap();
    assert!(outcome.dataset.is_none());
    let ingest = lake.store().node(outcome.ingest).unwrap();
    assert!(!ingest.text("errorLog").unwrap().is_empty());
    assert!(ingest.timestamp("ingestionEndTime").is_some());
}

#[test]
fn malformed_tables_are_reported_on_the_ingest() {
    let dir = tempfile::tempdir().unwrap();
    let lake = lake(dir.path());
    let file = dir.path().join("ragged.csv");
    std::fs::write(&file, "a,b,c\n1,2,3\n4,5\n").unwrap();
    let source = connect(&lake, &file.to_string_lossy(), "ragged");
    let outcome = lake.ingest_dataset(source, &IngestRequest::batch("admin")).unwrap();
    let error = outcome.error.expect("profiling error");
    assert!(error.contains("malformed"), "{error}");
    let ingest = lake.store().node(outcome.ingest).unwrap();
    assert!(ingest.text("errorLog").unwrap().contains("profiling failed"));
}

#[test]
fn one_time_sources_load_once() {
    let dir = tempfile::tempdir().unwrap();
    let lake = lake(dir.path());
    let file = dir.path().join("once.csv");
    std::fs::write(&file, "a,b\n1,2\n").unwrap();
    let source = connect(&lake, &file.to_string_lossy(), "once");
    let once = IngestRequest { mode: IngestMode::OneTime, ..IngestRequest::batch("admin") };
    lake.ingest_dataset(source, &once).unwrap();
    assert!(matches!(lake.ingest_dataset(source, &once), Err(Error::Precondition(_))));
    assert!(matches!(lake.ingest_dataset(source, &IngestRequest::batch("admin")), Err(Error::Precondition(_))));

    let other = connect(&lake, &file.to_string_lossy(), "other");
    lake.ingest_dataset(other, &IngestRequest::batch("admin")).unwrap();
    assert!(matches!(lake.ingest_dataset(other, &once), Err(Error::Precondition(_))));
}

#[test]
fn unknown_users_cannot_ingest() {
    let dir = tempfile::tempdir().unwrap();
    let lake = lake(dir.path());
    let source = connect(&lake, "stream-sim://gen?seed=1", "feed");
    assert!(matches!(lake.ingest_dataset(source, &IngestRequest::batch("mallory")), Err(Error::Unauthorized(_))));
    assert!(lake.store().query(NodeLabel::Ingest, |_| true).is_empty());
}

#[test]
fn directory_sources_become_multi_entity_datasets() {
    let dir = tempfile::tempdir().unwrap();
    let lake = lake(dir.path());
    let src = dir.path().join("tables");
    std::fs::create_dir(&src).unwrap();
    std::fs::write(src.join("a.csv"), "id,x\n1,2\n").unwrap();
    std::fs::write(src.join("b.csv"), "id,y,z\n1,q,3\n").unwrap();
    let source = connect(&lake, &src.to_string_lossy(), "tables");
    assert_eq!(SourceConnection::parse(&src.to_string_lossy()).unwrap().scheme, Scheme::LocalDirectory);
    let outcome = lake.ingest_dataset(source, &IngestRequest::batch("admin")).unwrap();
    let dataset = lake.dataset(outcome.dataset.unwrap()).unwrap();
    assert_eq!(dataset.text("type"), Some("structured"));
    assert!(lake.raw_zone().join(dataset.text("lakePath").unwrap()).join("a.csv").exists());
    let stats = lake.graph_stats();
    assert_eq!(stats.node_count(NodeLabel::EntityClass), 2);
    assert_eq!(stats.attribute_count(), 5);
}

#[test]
fn generated_streams_resume_after_reopening() {
    let dir = tempfile::tempdir().unwrap();
    let location = "stream-sim://gen?seed=5&rows=3&change_every=1";
    let hashes = {
        let lake = lake(dir.path());
        let source = connect(&lake, location, "feed");
        let runs = lake.run_realtime(source, 0.001, 2, "admin", "").unwrap();
        assert!(runs.iter().all(|r| r.changed));
        lake.datasets().iter().map(|d| d.text("contentHash").unwrap().to_string()).collect::<Vec<_>>()
    };
    let lake = lake(dir.path());
    let source = lake.store().query(NodeLabel::DatasetSource, |_| true)[0].id;
    let runs = lake.run_realtime(source, 0.001, 1, "admin", "").unwrap();
    assert_eq!(runs[0].version, Some(3));
    let third = lake.dataset(runs[0].dataset.unwrap()).unwrap();
    assert!(!hashes.contains(&third.text("contentHash").unwrap().to_string()));
}

#[test]
fn a_vanishing_stream_ends_the_realtime_run() {
    let dir = tempfile::tempdir().unwrap();
    let lake = lake(dir.path());
    let source = connect(&lake, "stream-sim://gen?seed=5&rows=3&vanish_after=2", "feed");
    let runs = lake.run_realtime(source, 0.001, 5, "admin", "").unwrap();
    assert_eq!(runs.len(), 3);
    assert!(runs[2].error.is_some());
    let (ingests, with_dataset) = lake.store().read(|g| {
        let ingests: Vec<_> = g.edges_from(source, DATASET_SOURCE_INGEST).iter().map(|e| e.to).collect();
        let with = ingests.iter().filter(|i| !g.edges_from(**i, INGEST_DATASET).is_empty()).count();
        (ingests.len(), with)
    });
    assert_eq!((ingests, with_dataset), (3, 2));
}

/// Answers every request with the same CSV body.
fn serve_csv(body: &'static str) -> String {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    std::thread::spawn(move || {
        for stream in listener.incoming() {
            let mut stream = stream.unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut head = String::new();
            reader.read_line(&mut head).unwrap();
            let mut line = String::new();
            while reader.read_line(&mut line).unwrap() > 2 {
                line.clear();
            }
            let payload = if head.starts_with("HEAD") { "" } else { body };
            write!(
                stream,
                "HTTP/1.1 200 OK\r\nContent-Type: text/csv\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{payload}",
                body.len()
            )
            .unwrap();
        }
    });
    format!("http://{addr}/exports/stations.csv")
}

#[test]
fn http_sources_are_fetched() {
    let dir = tempfile::tempdir().unwrap();
    let lake = lake(dir.path());
    let url = serve_csv("station,reading\na,1\nb,2\n");
    let source = connect(&lake, &url, "remote");
    let outcome = lake.ingest_dataset(source, &IngestRequest::batch("admin")).unwrap();
    assert!(outcome.succeeded(), "{outcome:?}");
    let dataset = lake.dataset(outcome.dataset.unwrap()).unwrap();
    assert_eq!(dataset.text("type"), Some("structured"));
    let entity = lake.store().query(NodeLabel::EntityClass, |_| true).remove(0);
    assert_eq!(entity.text("name"), Some("stations"));
}
