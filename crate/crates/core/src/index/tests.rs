use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::doctree::parse_html;
use crate::segment::RuleSplitter;

const FIG2: &str = "<section><h2>Background</h2><p>Ada Lovelace wrote the first algorithm. \
    <a href=\"https://example.org/notes\">Her notes</a> described the Analytical Engine.</p></section>";

fn corpus(docs: &[(&str, &str)]) -> Corpus {
    let docs = docs
        .iter()
        .map(|(id, html)| (DocId::from(*id), parse_html(html.as_bytes()).unwrap()));
    Corpus::from_docs(docs, &RuleSplitter).unwrap()
}

fn embedder() -> HashEmbedder {
    HashEmbedder::new(64, 42)
}

#[test]
fn fig2_fragment_gives_two_contextualized_entries() {
    let c = corpus(&[("fig2", FIG2)]);
    let index = VectorIndex::build(&c, &embedder(), &IndexOptions::default()).unwrap();
    assert_eq!(index.len(), 2);
    let ann = c.get(&"fig2".into()).unwrap();
    for (entry, sentence) in index.entries.iter().zip(&ann.sentences()[1..]) {
        assert!(entry.rendered.contains("## Background"), "{}", entry.rendered);
        assert_eq!(entry.seed, sentence.paths);
        // the seed holds no header path
        assert!(entry
            .seed
            .iter()
            .all(|q| !q.indices().starts_with(&[0, 0, 0])));
    }
    assert_eq!(
        index.entries[1].rendered,
        "## Background\n\n[Her notes](https://example.org/notes) described the Analytical Engine."
    );
}

#[test]
fn empty_corpus_gives_empty_index() {
    let index = VectorIndex::build(&Corpus::new(), &embedder(), &IndexOptions::default()).unwrap();
    assert!(index.is_empty());
    assert_eq!(index.dimension, 64);
}

#[test]
fn rebuilding_is_deterministic() {
    let c = corpus(&[("d", "<p>One here. Two here. Three here.</p>")]);
    let opts = IndexOptions {
        batch_size: 1,
        ..IndexOptions::default()
    };
    let a = VectorIndex::build(&c, &embedder(), &opts).unwrap();
    let b = VectorIndex::build(&c, &embedder(), &IndexOptions::default()).unwrap();
    assert_eq!(a.len(), 3);
    assert_eq!(a, b);
    assert_eq!(a.to_bytes(), b.to_bytes());
}

#[test]
fn stored_text_finds_itself_first() {
    let c = corpus(&[("a", FIG2), ("b", "<p>Parks of Virginia. Camping in summer.</p>")]);
    let e = embedder();
    let index = VectorIndex::build(&c, &e, &IndexOptions::default()).unwrap();
    for entry in &index.entries {
        let hits = index.search(&e.embed_one(&entry.rendered), 2).unwrap();
        assert_eq!(hits[0].entry, entry);
        assert!((hits[0].score - 1.0).abs() < 1e-5);
        assert_eq!(hits[0].rank, 1);
    }
    assert!(index.search(&e.embed_one("x"), 0).unwrap().is_empty());
    assert!(matches!(
        index.search(&[1.0], 1),
        Err(IndexError::DimensionMismatch { expected: 64, found: 1 })
    ));
}

fn manual_index(vectors: Vec<Vec<f32>>) -> VectorIndex {
    let dimension = vectors[0].len();
    let entries = vectors
        .into_iter()
        .enumerate()
        .map(|(i, mut v)| {
            normalize(&mut v);
            IndexEntry {
                doc_id: DocId(format!("d{}", i % 3)),
                seed: PathSet::single(crate::doctree::Path::from(vec![i])),
                vector: v,
                rendered: format!("entry {i}"),
            }
        })
        .collect();
    VectorIndex {
        dimension,
        metric: Metric::Cosine,
        entries,
    }
}

#[test]
fn search_matches_exhaustive_sort() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let vecs: Vec<Vec<f32>> = (0..5)
            .map(|_| (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let index = manual_index(vecs);
        let q: Vec<f32> = (0..8).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let qn: f32 = q.iter().map(|x| x * x).sum::<f32>().sqrt();
        // brute force: explicit cosine against every entry, full sort
        let mut expected: Vec<(f32, usize)> = index
            .entries
            .iter()
            .enumerate()
            .map(|(i, e)| {
                let en: f32 = e.vector.iter().map(|x| x * x).sum::<f32>().sqrt();
                let d: f32 = e.vector.iter().zip(&q).map(|(a, b)| a * b).sum();
                (d / (en * qn), i)
            })
            .collect();
        expected.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        let got: Vec<usize> = index
            .search(&q, 5)
            .unwrap()
            .iter()
            .map(|h| index.entries.iter().position(|e| e == h.entry).unwrap())
            .collect();
        let want: Vec<usize> = expected.iter().map(|&(_, i)| i).collect();
        assert_eq!(got, want);
        let top2: Vec<usize> = index
            .search(&q, 2)
            .unwrap()
            .iter()
            .map(|h| index.entries.iter().position(|e| e == h.entry).unwrap())
            .collect();
        assert_eq!(top2, want[..2]);
    }
}

#[test]
fn ties_break_by_document_then_seed() {
    let index = manual_index(vec![vec![1.0, 0.0]; 4]);
    let order: Vec<(String, usize)> = index
        .search(&[1.0, 0.0], 4)
        .unwrap()
        .iter()
        .map(|h| (h.entry.doc_id.0.clone(), h.entry.seed.first().unwrap().indices()[0]))
        .collect();
    assert_eq!(
        order,
        vec![("d0".into(), 0), ("d0".into(), 3), ("d1".into(), 1), ("d2".into(), 2)]
    );
}

#[test]
fn save_and_load_round_trip() {
    let c = corpus(&[("a", FIG2), ("b", "<p>Third sentence.</p>")]);
    let index = VectorIndex::build(&c, &embedder(), &IndexOptions::default()).unwrap();
    assert_eq!(index.len(), 3);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.sdix");
    index.save(&path).unwrap();
    let back = VectorIndex::load(&path).unwrap();
    assert_eq!(back, index);
    for (a, b) in back.entries.iter().zip(&index.entries) {
        let bits = |v: &[f32]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a.vector), bits(&b.vector));
    }
}

#[test]
fn damaged_files_are_rejected() {
    let c = corpus(&[("a", FIG2)]);
    let bytes = VectorIndex::build(&c, &embedder(), &IndexOptions::default())
        .unwrap()
        .to_bytes();
    for cut in [0, 3, 5, 20, bytes.len() - 1] {
        assert!(matches!(
            VectorIndex::from_bytes(&bytes[..cut]),
            Err(IndexError::Corrupt(_))
        ));
    }
    let mut flipped = bytes.clone();
    flipped[40] ^= 1;
    assert!(matches!(VectorIndex::from_bytes(&flipped), Err(IndexError::Corrupt(_))));

    let mut newer = bytes;
    newer[4] = FORMAT_VERSION + 1;
    let err = VectorIndex::from_bytes(&newer).unwrap_err();
    assert!(matches!(err, IndexError::VersionMismatch { found: 2, expected: 1 }));
    assert!(err.to_string().contains('2') && err.to_string().contains('1'));
}

/// Fails the first `fail` calls.
struct Flaky {
    inner: HashEmbedder,
    fail: usize,
    calls: AtomicUsize,
}

impl EmbeddingProvider for Flaky {
    fn dimension(&self) -> usize {
        self.inner.dimension
    }
    fn embed(&self, inputs: &[String]) -> Result<Vec<Vec<f32>>, ProviderError> {
        if self.calls.fetch_add(1, AtomicOrdering::SeqCst) < self.fail {
            return Err(ProviderError::Failed("unavailable".into()));
        }
        self.inner.embed(inputs)
    }
}

#[test]
fn failed_batches_are_retried_then_reported() {
    let c = corpus(&[("a", FIG2)]);
    let opts = IndexOptions {
        batch_size: 8,
        retries: 2,
        parallelism: 1,
        ..IndexOptions::default()
    };
    let flaky = Flaky {
        inner: embedder(),
        fail: 2,
        calls: AtomicUsize::new(0),
    };
    assert_eq!(VectorIndex::build(&c, &flaky, &opts).unwrap().len(), 2);

    let down = Flaky {
        inner: embedder(),
        fail: usize::MAX,
        calls: AtomicUsize::new(0),
    };
    match VectorIndex::build(&c, &down, &opts) {
        Err(IndexError::Provider { batch, inputs, attempts, .. }) => {
            assert_eq!((batch, attempts, inputs.len()), (0, 3, 2));
        }
        other => panic!("expected a provider error, got {other:?}"),
    }
}

#[test]
fn long_inputs_are_truncated_for_the_provider() {
    let c = corpus(&[("a", FIG2)]);
    let mut short = embedder();
    short.max_input_tokens = Some(3);
    let index = VectorIndex::build(&c, &short, &IndexOptions::default()).unwrap();
    // the stored text is kept whole; the vector is of the first 3 tokens
    assert!(index.entries[0].rendered.ends_with("algorithm."));
    assert_eq!(index.entries[0].vector, embedder().embed_one("## Background Ada"));
}
