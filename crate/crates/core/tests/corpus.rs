use std::time::Instant;

use lakemeta::fixtures::{bundled_corpus_dir, CorpusManifest};
use lakemeta::graph::NodeLabel;
use lakemeta::{Config, Lake};

#[test]
fn bundled_corpus_loads_with_manifest_counts() {
    let dir = tempfile::tempdir().unwrap();
    let lake = Lake::open(Config::rooted_at(dir.path())).unwrap();
    let manifest = CorpusManifest::read(&bundled_corpus_dir()).unwrap();
    let started = Instant::now();
    let loaded = lake.load_corpus(&bundled_corpus_dir(), "admin").unwrap();
    println!("corpus load took {:?}", started.elapsed());
    assert!(loaded.iter().all(|l| l.dataset.is_some()), "{loaded:?}");
    let stats = lake.graph_stats();
    assert_eq!(stats.node_count(NodeLabel::DatasetSource), 7);
    assert_eq!(stats.node_count(NodeLabel::Ingest), 7);
    assert_eq!(stats.node_count(NodeLabel::DatalakeDataset), 7);
    assert_eq!(stats.node_count(NodeLabel::EntityClass), manifest.totals.entities);
    assert_eq!(stats.attribute_count(), manifest.totals.columns);
}
