use std::path::Path;
use std::sync::Arc;

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use lakemeta::catalog::http::router;
use lakemeta::cli::dispatch;
use lakemeta::fixtures::bundled_corpus_dir;
use lakemeta::{Config, Lake};
use serde_json::{json, Value};
use tower::ServiceExt;

fn config(root: &Path) -> Config {
    let ui = root.join("ui");
    std::fs::create_dir_all(&ui).unwrap();
    std::fs::write(ui.join("index.html"), "<html>catalog</html>").unwrap();
    Config { ui_dir: Some(ui), ..Config::rooted_at(root) }
}

fn app(root: &Path) -> Router {
    let lake = Lake::open(config(root)).unwrap();
    lake.load_corpus(&bundled_corpus_dir(), "admin").unwrap();
    router(Arc::new(lake))
}

async fn call(app: &Router, method: &str, uri: &str, user: Option<&str>, body: Option<Value>) -> (StatusCode, Vec<u8>) {
    let mut request = Request::builder().method(method).uri(uri);
    if let Some(user) = user {
        request = request.header("X-User", user);
    }
    let body = match body {
        Some(v) => Body::from(serde_json::to_vec(&v).unwrap()),
        None => Body::empty(),
    };
    let response = app.clone().oneshot(request.body(body).unwrap()).await.unwrap();
    let status = response.status();
    (status, response.into_body().collect().await.unwrap().to_bytes().to_vec())
}

async fn json_call(app: &Router, method: &str, uri: &str, user: Option<&str>, body: Option<Value>) -> (StatusCode, Value) {
    let (status, bytes) = call(app, method, uri, user, body).await;
    (status, serde_json::from_slice(&bytes).unwrap_or(Value::Null))
}

fn find_id(list: &Value, name: &str) -> String {
    list.as_array().unwrap().iter().find(|d| d["name"] == name).unwrap()["id"].as_str().unwrap().to_string()
}

#[tokio::test]
async fn requests_need_a_known_user() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    assert_eq!(call(&app, "GET", "/datasets", None, None).await.0, StatusCode::UNAUTHORIZED);
    assert_eq!(call(&app, "GET", "/stats", Some("mallory"), None).await.0, StatusCode::UNAUTHORIZED);
}

#[tokio::test]
async fn search_and_views_respect_clearance() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let (status, all) = json_call(&app, "GET", "/datasets?q=", Some("admin"), None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(all.as_array().unwrap().len(), 7);
    let mimic = find_id(&all, "MIMIC-III mini");

    let (_, cancer) = json_call(&app, "GET", "/datasets?q=cancer", Some("analyst"), None).await;
    assert_eq!(cancer.as_array().unwrap().len(), 4);
    let (_, visible) = json_call(&app, "GET", "/datasets", Some("analyst"), None).await;
    assert_eq!(visible.as_array().unwrap().len(), 6);

    for suffix in ["", "/lineage", "/schema", "/relationships"] {
        let uri = format!("/datasets/{mimic}{suffix}");
        assert_eq!(call(&app, "GET", &uri, Some("analyst"), None).await.0, StatusCode::NOT_FOUND, "{uri}");
        assert_eq!(call(&app, "GET", &uri, Some("admin"), None).await.0, StatusCode::OK, "{uri}");
    }

    let (_, lineage) = json_call(&app, "GET", &format!("/datasets/{mimic}/lineage"), Some("admin"), None).await;
    assert_eq!(lineage["user"], "admin");
    assert_eq!(lineage["source"]["properties"]["name"], "MIMIC-III mini");
    assert_eq!(lineage["ingest"]["properties"]["mode"], "batch");

    assert_eq!(call(&app, "GET", "/datasets/nonsense", Some("admin"), None).await.0, StatusCode::NOT_FOUND);
    assert_eq!(call(&app, "GET", "/no/such/route", Some("admin"), None).await.0, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn attribute_marks_redact_only_statistics() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let (_, all) = json_call(&app, "GET", "/datasets", Some("admin"), None).await;
    let lung = find_id(&all, "Lung Cancer");
    let (_, schema) = json_call(&app, "GET", &format!("/datasets/{lung}/schema"), Some("admin"), None).await;
    let attr = schema[0]["attributes"][1]["id"].as_str().unwrap().to_string();

    let (status, _) =
        json_call(&app, "POST", &format!("/datasets/{lung}/sensitivity"), Some("admin"), Some(json!({"level": 1, "target": attr}))).await;
    assert_eq!(status, StatusCode::CREATED);
    let (_, seen) = json_call(&app, "GET", &format!("/datasets/{lung}"), Some("analyst"), None).await;
    let attrs = seen["schema"][0]["attributes"].as_array().unwrap();
    let marked = attrs.iter().find(|a| a["id"] == attr.as_str()).unwrap();
    assert_eq!(marked["redacted"], true);
    assert!(marked["stats"].is_null());
    assert!(marked["name"].is_string());
    assert!(attrs.iter().filter(|a| a["id"] != attr.as_str()).all(|a| a["stats"].is_object()));

    // a target outside the dataset is refused
    let (_, other) = json_call(&app, "GET", &format!("/datasets/{}/schema", find_id(&all, "Fetal health classification")), Some("admin"), None).await;
    let foreign = other[0]["attributes"][0]["id"].clone();
    let (status, _) =
        json_call(&app, "POST", &format!("/datasets/{lung}/sensitivity"), Some("admin"), Some(json!({"level": 1, "target": foreign}))).await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn sources_ingest_tags_relationships_and_dictionary() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let csv = dir.path().join("readings.csv");
    std::fs::write(&csv, "station,reading\na,1.5\nb,2.5\nc,4.0\n").unwrap();

    let body = json!({"location": csv.to_string_lossy(), "name": "readings", "type": "csv file"});
    let (status, created) = json_call(&app, "POST", "/sources", Some("admin"), Some(body)).await;
    assert_eq!(status, StatusCode::CREATED);
    let source = created["id"].as_str().unwrap().to_string();

    let missing = json!({"location": dir.path().join("absent.csv").to_string_lossy(), "name": "x", "type": "csv"});
    assert_eq!(call(&app, "POST", "/sources", Some("admin"), Some(missing)).await.0, StatusCode::UNPROCESSABLE_ENTITY);
    assert_eq!(
        call(&app, "POST", "/sources", Some("admin"), Some(json!({"bogus": 1}))).await.0,
        StatusCode::BAD_REQUEST
    );

    let rejected = json!({"mode": "batch", "definedDuration": 5.0});
    let uri = format!("/sources/{source}/ingest");
    assert_eq!(call(&app, "POST", &uri, Some("admin"), Some(rejected)).await.0, StatusCode::BAD_REQUEST);
    let (status, ingested) = json_call(&app, "POST", &uri, Some("admin"), None).await;
    assert_eq!(status, StatusCode::OK);
    let run = &ingested["runs"][0];
    assert_eq!(run["version"], 1);
    let dataset = run["dataset"].as_str().unwrap().to_string();

    let (_, tagged) =
        json_call(&app, "POST", &format!("/datasets/{dataset}/tags"), Some("admin"), Some(json!({"tags": ["Sensors", " sensors", "IoT"]}))).await;
    assert_eq!(tagged["tags"], json!(["iot", "sensors"]));
    let (_, again) =
        json_call(&app, "POST", &format!("/datasets/{dataset}/tags"), Some("admin"), Some(json!({"tags": ["SENSORS"]}))).await;
    assert_eq!((again["createdTags"].as_u64(), again["createdEdges"].as_u64()), (Some(0), Some(0)));

    let (_, all) = json_call(&app, "GET", "/datasets", Some("admin"), None).await;
    let fetal = find_id(&all, "Fetal health classification");
    let rel = json!({"ds1": dataset, "ds2": fetal, "kind": "same-lab", "value": 0.8, "name": "shared lab"});
    let (status, _) = json_call(&app, "POST", "/relationships", Some("admin"), Some(rel)).await;
    assert_eq!(status, StatusCode::CREATED);
    let (_, rels) = json_call(&app, "GET", &format!("/datasets/{fetal}/relationships"), Some("admin"), None).await;
    let rels = rels.as_array().unwrap();
    assert_eq!(rels.len(), 1);
    assert_eq!((rels[0]["kind"].as_str(), rels[0]["origin"].as_str()), (Some("same-lab"), Some("manual")));

    let (status, _) =
        json_call(&app, "POST", "/global-dict", Some("admin"), Some(json!({"key": "unit.reading", "value": "volts"}))).await;
    assert_eq!(status, StatusCode::OK);
    let (_, dict) = json_call(&app, "GET", "/global-dict", Some("analyst"), None).await;
    assert_eq!(dict, json!([{"key": "unit.reading", "value": "volts"}]));

    let (_, stats) = json_call(&app, "GET", "/stats", Some("admin"), None).await;
    assert_eq!(stats["nodes"]["DatalakeDataset"], 8);
}

#[tokio::test]
async fn realtime_ingest_over_http() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let body = json!({"location": "stream-sim://gen?seed=3&rows=4&change_every=1", "name": "feed", "type": "stream"});
    let (_, created) = json_call(&app, "POST", "/sources", Some("admin"), Some(body)).await;
    let uri = format!("/sources/{}/ingest", created["id"].as_str().unwrap());
    let (status, _) = json_call(&app, "POST", &uri, Some("admin"), Some(json!({"mode": "real-time"}))).await;
    assert_eq!(status, StatusCode::CONFLICT);
    let body = json!({"mode": "real-time", "definedDuration": 0.01, "windowCount": 2});
    let (status, runs) = json_call(&app, "POST", &uri, Some("admin"), Some(body)).await;
    assert_eq!(status, StatusCode::OK);
    let versions: Vec<u64> = runs["runs"].as_array().unwrap().iter().map(|r| r["version"].as_u64().unwrap()).collect();
    assert_eq!(versions, [1, 2]);
}

#[tokio::test]
async fn ui_assets_are_served() {
    let dir = tempfile::tempdir().unwrap();
    let app = app(dir.path());
    let (status, body) = call(&app, "GET", "/ui/index.html", None, None).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(body, b"<html>catalog</html>");
}

#[tokio::test]
async fn cli_json_output_matches_http_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("lake.toml");
    std::fs::write(&cfg, "store_path = \"store\"\nraw_zone = \"raw\"\n").unwrap();
    let cli = |args: &[&str]| {
        let mut argv = vec!["lakemeta", "--config", cfg.to_str().unwrap(), "--format", "json"];
        argv.extend_from_slice(args);
        let out = dispatch(argv);
        assert_eq!(out.code, 0, "{args:?}: {}", out.stderr);
        out.stdout.trim_end().to_string()
    };
    cli(&["load-fixtures"]);
    let listing: Value = serde_json::from_str(&cli(&["search"])).unwrap();
    let chsi = find_id(&listing, "CHSI cancer");
    cli(&["link", &chsi]);

    let mut cli_outputs = vec![
        ("/datasets?q=cancer".to_string(), cli(&["--user", "analyst", "search", "cancer"]), "analyst"),
        ("/stats".to_string(), cli(&["stats"]), "admin"),
    ];
    for (flag, suffix) in [("", ""), ("--lineage", "/lineage"), ("--schema", "/schema"), ("--relationships", "/relationships")] {
        let mut args = vec!["show", chsi.as_str()];
        if !flag.is_empty() {
            args.push(flag);
        }
        cli_outputs.push((format!("/datasets/{chsi}{suffix}"), cli(&args), "admin"));
    }

    let lake = Lake::open(Config::load(Some(&cfg)).unwrap()).unwrap();
    let app = router(Arc::new(lake));
    for (uri, from_cli, user) in cli_outputs {
        let (status, body) = call(&app, "GET", &uri, Some(user), None).await;
        assert_eq!(status, StatusCode::OK, "{uri}");
        assert_eq!(String::from_utf8(body).unwrap(), from_cli, "{uri}");
    }
}
