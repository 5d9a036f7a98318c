//! Acceptance suite: one test per criterion, each printing a PASS or FAIL
//! line before asserting. The line goes straight to stderr so it shows
//! up even when the harness captures test output.

mod common;

use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::Path as FsPath;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use subdoc::context::{ctx_headers, ctx_html, ctx_lists, ctx_tables, ctx_title, Budget, HtmlPolicy};
use subdoc::corpus::{Corpus, DocId};
use subdoc::doctree::{parse_html, DocNode, Path, PathSet};
use subdoc::filter::{citable_units, filter_citations, prepare_view, FilterCandidate, FilterOptions, Scripted, SelectAll};
use subdoc::index::{HashEmbedder, Hit, IndexOptions, VectorIndex};
use subdoc::prompt::{evidence_selector_prompt, judge_prompt};
use subdoc::render::render_document;
use subdoc::retrieve::{aggregate, merge_candidates, retrieve, Candidate, RetrieveOptions};
use subdoc::segment::{segment_sentences, strip_sentinels, RuleSplitter};
use subdoc::testkit::{random_doc, random_sub_of, random_subset, random_text};
use subdoc_cli::commands::{judge_citations, CitationReport};

use common::{fixture_corpus, stdout, subdoc};

fn report(n: u32, ok: bool, detail: &str) {
    let line = format!("{} criterion {n}: {detail}\n", if ok { "PASS" } else { "FAIL" });
    let _ = std::io::stderr().write_all(line.as_bytes());
    assert!(ok, "criterion {n} failed: {detail}");
}

fn el(tag: &str, children: Vec<DocNode>) -> DocNode {
    DocNode::element(tag, children)
}

fn t(s: &str) -> DocNode {
    DocNode::text(s)
}

fn set(paths: &[&[usize]]) -> PathSet {
    paths.iter().map(|p| Path::from(p.to_vec())).collect()
}

const LISTING_1: &str = "<html>
  <body>
    <section>
      <h1>Title</h1>
      <p>First paragraph.</p>
      <p>Second paragraph.</p>
    </section>
  </body>
</html>
";

#[test]
fn criterion_1_golden_listings() {
    let start = Instant::now();
    let mut failures = Vec::new();
    let doc = parse_html(LISTING_1.as_bytes()).unwrap();
    let expected_tree = el(
        "html",
        vec![el(
            "body",
            vec![el(
                "section",
                vec![
                    el("h1", vec![t("Title")]),
                    el("p", vec![t("First paragraph.")]),
                    el("p", vec![t("Second paragraph.")]),
                ],
            )],
        )],
    );
    if doc != expected_tree {
        failures.push("parse tree");
    }
    if doc.node_at(&Path::from(vec![0, 0, 1, 0])).ok() != Some(&t("First paragraph.")) {
        failures.push("path of the first paragraph text");
    }

    let keep_paragraphs = set(&[&[], &[0], &[0, 0], &[0, 0, 1], &[0, 0, 1, 0], &[0, 0, 2], &[0, 0, 2, 0]]);
    let paragraphs_only = el(
        "html",
        vec![el(
            "body",
            vec![el(
                "section",
                vec![el("p", vec![t("First paragraph.")]), el("p", vec![t("Second paragraph.")])],
            )],
        )],
    );
    if doc.prune(&keep_paragraphs) != Some(paragraphs_only) {
        failures.push("prune keeping both paragraphs");
    }

    let missing_ancestor = set(&[&[], &[0], &[0, 0, 1], &[0, 0, 1, 0]]);
    if doc.prune(&missing_ancestor) != Some(el("html", vec![el("body", vec![])])) {
        failures.push("prune with missing ancestry");
    }

    let title_and_second = el(
        "html",
        vec![el(
            "body",
            vec![el(
                "section",
                vec![el("h1", vec![t("Title")]), el("p", vec![t("Second paragraph.")])],
            )],
        )],
    );
    if doc.subdoc(&set(&[&[0, 0, 0, 0], &[0, 0, 2, 0]])) != Some(title_and_second) {
        failures.push("subdoc of title and second paragraph");
    }

    let p = set(&[&[0, 0, 1]]);
    if doc.up(&p) != set(&[&[], &[0], &[0, 0], &[0, 0, 1]]) {
        failures.push("up");
    }
    if doc.down(&p) != set(&[&[0, 0, 1], &[0, 0, 1, 0]]) {
        failures.push("down");
    }
    let linked = set(&[&[], &[0], &[0, 0], &[0, 0, 1], &[0, 0, 1, 0]]);
    if doc.link(&p) != linked {
        failures.push("link");
    }
    let single = el(
        "html",
        vec![el("body", vec![el("section", vec![el("p", vec![t("First paragraph.")])])])],
    );
    if doc.subdoc(&p) != Some(single) {
        failures.push("subdoc of the first paragraph");
    }

    let elapsed = start.elapsed();
    let ok = failures.is_empty() && elapsed < Duration::from_secs(1);
    report(1, ok, &format!("listings exact, mismatches {failures:?}, {elapsed:?} (< 1 s)"));
}

type Op = Box<dyn Fn(&DocNode, &PathSet) -> PathSet>;

fn operators() -> Vec<(&'static str, Op)> {
    vec![
        ("up", Box::new(|d: &DocNode, p: &PathSet| d.up(p))),
        ("down", Box::new(|d: &DocNode, p: &PathSet| d.down(p))),
        ("link", Box::new(|d: &DocNode, p: &PathSet| d.link(p))),
        ("title", Box::new(|d: &DocNode, p: &PathSet| p.union(&ctx_title(d)))),
        ("headers", Box::new(ctx_headers)),
        ("lists", Box::new(ctx_lists)),
        ("tables", Box::new(ctx_tables)),
        ("html", Box::new(ctx_html)),
    ]
}

const LAW_CASES: u64 = 1000;

/// Random tree of at most 50 nodes and nested random sets `small ⊆ large`.
fn law_case(seed: u64) -> (DocNode, PathSet, PathSet) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let doc = random_doc(rng.gen(), rng.gen_range(1..=50));
    let large = random_subset(&doc, rng.gen(), rng.gen_range(0.05..0.6));
    let small = random_sub_of(&large, rng.gen(), 0.5);
    (doc, small, large)
}

#[derive(Default)]
struct Violations {
    extensive: usize,
    monotone: usize,
    idempotent: usize,
}

fn check_laws(name: &str, op: &Op) -> Violations {
    let mut v = Violations::default();
    for seed in 0..LAW_CASES {
        let (doc, small, large) = law_case(seed);
        assert!(doc.size() <= 50);
        let fs = op(&doc, &small);
        let fl = op(&doc, &large);
        if !small.is_subset(&fs) || !large.is_subset(&fl) {
            v.extensive += 1;
        }
        if !fs.is_subset(&fl) {
            v.monotone += 1;
        }
        if op(&doc, &fl) != fl {
            v.idempotent += 1;
            if v.idempotent == 1 && name != "link" {
                eprintln!("{name}: first idempotence violation at seed {seed}");
            }
        }
    }
    v
}

#[test]
fn criterion_2_algebraic_laws() {
    let start = Instant::now();
    let mut failures = Vec::new();
    for (name, op) in operators() {
        let v = check_laws(name, &op);
        if v.extensive > 0 || v.monotone > 0 {
            failures.push(format!("{name}: extensive {} monotone {}", v.extensive, v.monotone));
        }
        // link is checked on its own below
        if name != "link" && v.idempotent > 0 {
            failures.push(format!("{name}: idempotent {}", v.idempotent));
        }
    }
    let elapsed = start.elapsed();
    let ok = failures.is_empty() && elapsed < Duration::from_secs(30);
    report(
        2,
        ok,
        &format!(
            "{LAW_CASES} random trees x 8 operators, all laws except link idempotence, violations {failures:?}, {elapsed:?} (< 30 s)"
        ),
    );
}

/// `link(link(P))` also holds every descendant of the ancestors `link`
/// added, the root included, so it is the whole tree whenever `P` is not
/// empty. The law fails unless `link(P)` already covers the tree; the test
/// stays red on purpose.
#[test]
fn criterion_2_link_idempotence() {
    let ops = operators();
    let (_, link) = ops.iter().find(|(n, _)| *n == "link").unwrap();
    let v = check_laws("link", link);
    report(
        2,
        v.idempotent == 0,
        &format!("link idempotence violated in {} of {LAW_CASES} cases", v.idempotent),
    );
}

#[test]
fn criterion_3_sentinels_are_invisible() {
    let mut mismatches = 0;
    let mut sentences = 0;
    for seed in 0..100u64 {
        let doc = random_doc(seed.wrapping_mul(7919), 50);
        let ann = segment_sentences(&doc, &RuleSplitter).unwrap();
        sentences += ann.sentences().len();
        if render_document(&strip_sentinels(ann.doc())) != render_document(&doc) {
            mismatches += 1;
        }
    }
    report(
        3,
        mismatches == 0 && sentences > 0,
        &format!("100 documents, {sentences} sentences, {mismatches} rendering mismatches"),
    );
}

const ADA: &str = "<section><h2>Background</h2><p>Ada Lovelace wrote the first algorithm. \
    <a href=\"https://example.org/notes\">Her notes</a> described the Analytical Engine.</p></section>";

#[test]
fn criterion_4_indexed_sentences_carry_headers() {
    let doc = parse_html(ADA.as_bytes()).unwrap();
    let corpus = Corpus::from_docs([(DocId::from("ada"), doc)], &RuleSplitter).unwrap();
    let ann = corpus.get(&"ada".into()).unwrap();
    let index = VectorIndex::build(&corpus, &HashEmbedder::new(64, 0), &IndexOptions::default()).unwrap();

    let header: Path = ann
        .doc()
        .walk()
        .into_iter()
        .find(|(_, n)| n.is_tag("h2"))
        .map(|(p, _)| p)
        .unwrap();
    let bodies: Vec<&PathSet> = ann.sentences().iter().filter(|s| !s.in_heading).map(|s| &s.paths).collect();
    let entries = index.len();
    let all_have_header = index.entries.iter().all(|e| e.rendered.contains("## Background"));
    let bare = index.entries.iter().all(|e| {
        bodies.contains(&&e.seed) && e.seed.iter().all(|p| !header.is_prefix_of(p))
    });
    report(
        4,
        entries == 2 && all_have_header && bare,
        &format!("{entries} entries, all embedded texts hold the header: {all_have_header}, seeds are bare sentences: {bare}"),
    );
}

const FOO: &str = "<html><head><title>Foo</title></head><body>\
    <h1>First header of Foo</h1>\
    <p>This page covers several topics. The river is 40 miles long.</p></body></html>";

#[test]
fn criterion_5_amortization() {
    let doc = parse_html(FOO.as_bytes()).unwrap();
    let corpus = Corpus::from_docs([(DocId::from("foo"), doc)], &RuleSplitter).unwrap();
    let index = VectorIndex::build(&corpus, &HashEmbedder::new(64, 0), &IndexOptions::default()).unwrap();
    let budget = Budget::new(1000);
    let policy = HtmlPolicy::default();
    let hits: Vec<Hit> = index
        .entries
        .iter()
        .enumerate()
        .map(|(i, entry)| Hit {
            rank: i + 1,
            score: 1.0,
            entry,
        })
        .collect();
    let merged = merge_candidates(&hits);
    let agg = aggregate(&corpus, merged[0].clone(), &policy, &budget).unwrap();
    let separate: usize = index
        .entries
        .iter()
        .map(|e| {
            let c = Candidate {
                doc_id: e.doc_id.clone(),
                seed: e.seed.clone(),
                best_rank: 1,
            };
            aggregate(&corpus, c, &policy, &budget).unwrap().cost
        })
        .sum();
    let title_once = agg.rendered.matches("# Foo\n").count() == 1;
    let header_once = agg.rendered.matches("# First header of Foo").count() == 1;
    let ok = merged.len() == 1 && index.len() == 2 && title_once && header_once && agg.cost < separate;
    report(
        5,
        ok,
        &format!(
            "title once: {title_once}, header once: {header_once}, merged cost {} < separate {separate}",
            agg.cost
        ),
    );
}

#[test]
fn criterion_6_budget_safety() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut violations = Vec::new();
    let mut carve_outs = 0;
    let mut admitted = 0;
    for run in 0..500 {
        let n_docs = rng.gen_range(1..=5);
        let docs = (0..n_docs).map(|i| (DocId::new(format!("d{i}")), random_doc(rng.gen(), 50)));
        let corpus = Corpus::from_docs(docs, &RuleSplitter).unwrap();
        let embedder = HashEmbedder::new(32, rng.gen());
        let index = VectorIndex::build(&corpus, &embedder, &IndexOptions::default()).unwrap();
        // mock cost: one unit per four bytes
        let limit = rng.gen_range(1..=200);
        let budget = Budget::with_sizer(limit, Arc::new(|s: &str| s.len().div_ceil(4)));
        let mut opts = RetrieveOptions::new(budget);
        opts.initial_k = rng.gen_range(1..=4);
        let query = random_text(&mut rng);
        let results = retrieve(&index, &corpus, &embedder, &query, &opts).unwrap();
        admitted += results.len();
        let total: usize = results.iter().map(|r| r.cost).sum();
        let carve_out = results.len() == 1 && results[0].truncated;
        carve_outs += usize::from(carve_out);
        if total > limit && !carve_out {
            violations.push(format!("run {run}: cost {total} > {limit}"));
        }
        if results.iter().skip(1).any(|r| r.truncated) {
            violations.push(format!("run {run}: a later result was truncated"));
        }
        if !results.windows(2).all(|w| w[0].best_rank < w[1].best_rank) {
            violations.push(format!("run {run}: ranks not increasing"));
        }
    }
    report(
        6,
        violations.is_empty(),
        &format!("500 retrievals, {admitted} results admitted, {carve_outs} oversize-first carve-outs, violations {violations:?}"),
    );
}

/// Distinct `lab_N` names opened in `text`. A unit whose text lands in
/// several blocks is wrapped once per block, under the same label.
fn opening_tags(text: &str) -> BTreeSet<String> {
    text.match_indices("<lab_")
        .filter_map(|(i, _)| {
            let rest = &text[i + 5..];
            let digits = rest.bytes().take_while(u8::is_ascii_digit).count();
            (digits > 0 && rest[digits..].starts_with('>')).then(|| format!("lab_{}", &rest[..digits]))
        })
        .collect()
}

#[test]
fn criterion_7_label_round_trip() {
    let opts = FilterOptions::default();
    let query = "Which river is in the park?";
    let mut views = 0;
    let mut labels = 0;
    let mut failures = Vec::new();
    let mut seed = 0u64;
    while views < 200 && seed < 20_000 {
        seed += 1;
        let doc = random_doc(seed, 50);
        let ann = segment_sentences(&doc, &RuleSplitter).unwrap();
        let mut corpus = Corpus::new();
        corpus.insert("d".into(), ann.clone()).unwrap();
        let paths = random_subset(ann.doc(), seed ^ 0xabc, 0.3);
        if paths.is_empty() {
            continue;
        }
        let cand = FilterCandidate {
            doc_id: "d".into(),
            paths,
        };
        let Some(prepared) = prepare_view(&corpus, &cand, query, &opts).unwrap() else {
            continue;
        };
        views += 1;
        labels += prepared.view.labels.len();
        let units = citable_units(&ann, &prepared.expanded);
        let out = filter_citations(&corpus, &[cand], query, &SelectAll, &opts).unwrap();
        let cited: BTreeSet<&PathSet> = out.citations.iter().map(|c| &c.paths).collect();
        let shown: BTreeSet<&PathSet> = prepared.view.labels.iter().map(|l| &l.paths).collect();
        let wrapped_units = prepared.view.labels.iter().all(|l| units.contains(&l.paths));
        let names: BTreeSet<String> = prepared.view.labels.iter().map(|l| l.label.clone()).collect();
        let tags = opening_tags(&prepared.view.text);
        if cited != shown || out.citations.len() != prepared.view.labels.len() || !wrapped_units || tags != names {
            failures.push(seed);
        }
    }
    report(
        7,
        views == 200 && failures.is_empty(),
        &format!("{views} views, {labels} labels, mismatching seeds {failures:?}"),
    );
}

/// The two verbatim blocks of the prompt appendix, judge first.
fn reference_prompts() -> Option<(String, String)> {
    let source = FsPath::new(env!("CARGO_MANIFEST_DIR")).join("../../paper.md");
    let text = fs::read_to_string(source).ok()?;
    let mut blocks = Vec::new();
    let mut rest = text.as_str();
    while let Some(i) = rest.find("\\begin{verbatim}\n") {
        let body = &rest[i + "\\begin{verbatim}\n".len()..];
        let end = body.find("\\end{verbatim}")?;
        blocks.push(body[..end].to_string());
        rest = &body[end..];
    }
    let judge = blocks.iter().find(|b| b.starts_with("You are an expert evaluator"))?.clone();
    let selector = blocks.iter().find(|b| b.starts_with("You are an evidence selector"))?.clone();
    Some((judge, selector))
}

#[test]
fn criterion_8_prompt_fidelity() {
    let Some((judge_ref, selector_ref)) = reference_prompts() else {
        report(8, false, "reference prompt text not found");
        return;
    };
    let excerpt = "## Background\n\n<lab_1>Ada Lovelace wrote the first algorithm.</lab_1>";
    let query = "Who wrote the first algorithm?";
    let expected_selector = selector_ref.replace("{excerpt_md}", excerpt).replace("{query}", query);
    let selector_ok = evidence_selector_prompt(excerpt, query).unwrap() == expected_selector;

    let citation = "Ada Lovelace wrote the first algorithm.";
    let judge = judge_prompt(query, citation);
    let suffix = format!("\nQUESTION:\n{query}\n\nCITATION:\n{citation}\n\n");
    let judge_ok = judge.starts_with(&judge_ref) && judge[judge_ref.len()..].starts_with(&suffix);
    report(
        8,
        selector_ok && judge_ok,
        &format!("selector byte-exact: {selector_ok}, judge instructions byte-exact with question and citation appended: {judge_ok}"),
    );
}

const Q9: &str = "How many state parks are there in Virginia?";

/// Runs the whole pipeline through the binary in `dir` and returns every
/// stdout plus the index bytes.
fn pipeline(dir: &FsPath) -> Vec<Vec<u8>> {
    let corpus = fixture_corpus();
    fs::write(
        dir.join("subdoc.toml"),
        "generator = \"select-all\"\njudge = \"scripted\"\njudge_script = \"judge.json\"\nbudget = 300\n",
    )
    .unwrap();
    fs::write(
        dir.join("judge.json"),
        r#"{"responses": {}, "fallback": "{\"helps_answer_question\": true, \"reasoning\": \"names the count\"}"}"#,
    )
    .unwrap();
    let cfg = ["--config", "subdoc.toml"];
    let run = |args: &[&str]| -> Vec<u8> {
        let all: Vec<&str> = cfg.iter().chain(args).copied().collect();
        stdout(&subdoc(dir, &all, &[])).into_bytes()
    };
    let mut outs = vec![
        run(&["ingest", corpus.to_str().unwrap()]),
        run(&["index"]),
        run(&["query", Q9, "--filter", "off"]),
    ];
    let filtered = run(&["query", Q9, "--filter", "on"]);
    fs::write(dir.join("results.json"), &filtered).unwrap();
    outs.push(filtered);
    outs.push(run(&["eval", "results.json"]));
    outs.push(fs::read(dir.join("subdoc.index")).unwrap());
    outs
}

#[test]
fn criterion_9_end_to_end_determinism() {
    let start = Instant::now();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let first = pipeline(a.path());
    let second = pipeline(b.path());
    let elapsed = start.elapsed();
    let docs = serde_json::from_slice::<serde_json::Value>(&first[0]).unwrap()["documents"]
        .as_array()
        .map_or(0, Vec::len);
    let eval: serde_json::Value = serde_json::from_slice(&first[4]).unwrap();
    let judged = eval["records"].as_array().map_or(0, Vec::len);
    let identical = first == second;
    report(
        9,
        docs == 5 && judged > 0 && identical && elapsed < Duration::from_secs(10),
        &format!(
            "{docs} documents, {judged} citations judged, two runs byte-identical: {identical}, {elapsed:?} for both (< 10 s)"
        ),
    );
}

#[test]
fn criterion_10_planted_ratio() {
    // live benchmark numbers need real models and data; only the harness
    // and its reporting format are checked here
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut failures = Vec::new();
    let plantings = [(336usize, 1514usize, 0usize), (2, 4, 0), (0, 0, 3), (7, 9, 2)]
        .into_iter()
        .chain((0..20).map(|_| {
            let total = rng.gen_range(1..300);
            (rng.gen_range(0..=total), total, rng.gen_range(0..5))
        }))
        .collect::<Vec<_>>();
    let mut first_ratio = String::new();
    for (helpful, total, garbled) in plantings {
        let mut script = Scripted::new();
        let mut items = Vec::new();
        for i in 0..total + garbled {
            let query = format!("question {}", i % 7);
            let text = format!("citation number {i}");
            let reply = if i >= total {
                "I am not sure.".to_string()
            } else if i < helpful {
                if i % 2 == 0 { r#"{"helps_answer_question": true}"#.into() } else { "YES, it does.".into() }
            } else if i % 2 == 0 {
                r#"{"helps_answer_question": false}"#.into()
            } else {
                "NO".into()
            };
            script = script.with(&judge_prompt(&query, &text), reply);
            items.push((
                query,
                CitationReport {
                    doc_id: "d".into(),
                    paths: PathSet::new(),
                    text,
                },
            ));
        }
        let out = judge_citations(&script, items, 4).unwrap();
        let expected = if total == 0 {
            "0/0 (n/a)".to_string()
        } else {
            format!("{helpful}/{total} ({:.3})", helpful as f64 / total as f64)
        };
        if out.ratio != expected || out.unparseable != garbled || out.helpful != helpful || out.total != total {
            failures.push(format!("{expected} got {} ({} unparseable)", out.ratio, out.unparseable));
        }
        if first_ratio.is_empty() {
            first_ratio = out.ratio;
        }
    }
    report(
        10,
        failures.is_empty() && first_ratio == "336/1514 (0.222)",
        &format!("planted 336/1514 recovered as {first_ratio}; 23 more plantings, mismatches {failures:?}"),
    );
}
