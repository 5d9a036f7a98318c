#![allow(clippy::single_range_in_vec_init)]

use proptest::prelude::*;

use super::*;
use crate::doctree::parse_html;
use crate::testkit;

fn p(v: &[usize]) -> Path {
    Path::from(v.to_vec())
}

fn html(s: &str) -> DocNode {
    parse_html(s.as_bytes()).unwrap()
}

fn tags(node: &DocNode) -> Vec<String> {
    node.children()
        .iter()
        .map(|c| match c {
            DocNode::Text(t) => format!("{t:?}"),
            DocNode::Element(e) => e.tag.clone(),
        })
        .collect()
}

const FIG2: &str = "<section><h2>Background</h2><p>Ada Lovelace wrote the first algorithm. \
    <a href=\"https://example.org/notes\">Her notes</a> described the Analytical Engine.</p></section>";

#[test]
fn block_leaves_of_listing2() {
    let doc = crate::testkit::listing2();
    assert_eq!(block_leaves(&doc), vec![p(&[0, 0, 0]), p(&[0, 0, 1]), p(&[0, 0, 2])]);
}

#[test]
fn nested_div_contributes_only_the_paragraph() {
    let doc = html("<div><div><p>x</p></div></div>");
    assert_eq!(block_leaves(&doc), vec![p(&[0, 0, 0, 0])]);
}

#[test]
fn text_only_document_has_no_block_leaves_but_one_sentence() {
    let doc = DocNode::element("html", vec![DocNode::text("Just words. More words.")]);
    assert!(block_leaves(&doc).is_empty());
    let ann = segment_sentences(&doc, &RuleSplitter).unwrap();
    assert_eq!(ann.sentences().len(), 2);
    assert_eq!(ann.sentences()[0].id.begin_path(), &p(&[0]));
}

#[test]
fn fig2_paragraph_gets_two_sentinel_pairs() {
    let ann = segment_sentences(&html(FIG2), &RuleSplitter).unwrap();
    let para = ann.doc().node_at(&p(&[0, 0, 1])).unwrap();
    assert_eq!(
        tags(para),
        vec![
            "sentence-beg",
            "\"Ada Lovelace wrote the first algorithm. \"",
            "sentence-end",
            "sentence-beg",
            "a",
            "\" described the Analytical Engine.\"",
            "sentence-end",
        ]
    );
    // the heading is a block leaf too
    assert_eq!(ann.sentences().len(), 3);
    assert!(ann.sentences()[0].in_heading);

    let second = &ann.sentences()[2];
    assert_eq!(second.id.begin_path(), &p(&[0, 0, 1, 3]));
    let expected: PathSet = [p(&[0, 0, 1, 4]), p(&[0, 0, 1, 4, 0]), p(&[0, 0, 1, 5])]
        .into_iter()
        .collect();
    assert_eq!(ann.sent_paths(&second.id).unwrap(), &expected);
    assert_eq!(
        ann.doc().node_at(&p(&[0, 0, 1, 4])).unwrap().as_element().unwrap().attr("href"),
        Some("https://example.org/notes")
    );
}

#[test]
fn single_sentence_block_is_wrapped_once() {
    let ann = segment_sentences(&html("<p>Only <b>one</b> sentence here.</p>"), &RuleSplitter).unwrap();
    let para = ann.doc().node_at(&p(&[0, 0])).unwrap();
    assert_eq!(
        tags(para),
        vec!["sentence-beg", "\"Only \"", "b", "\" sentence here.\"", "sentence-end"]
    );
}

#[test]
fn injected_spans_split_text_and_strip_restores_it() {
    let doc = html("<p>A. B.</p>");
    let fixed = |_: &str| vec![0..2, 3..5];
    let ann = segment_sentences(&doc, &fixed).unwrap();
    let para = ann.doc().node_at(&p(&[0, 0])).unwrap();
    assert_eq!(
        tags(para),
        vec!["sentence-beg", "\"A. \"", "sentence-end", "sentence-beg", "\"B.\"", "sentence-end"]
    );
    assert_eq!(strip_sentinels(ann.doc()), doc);
}

#[test]
fn boundary_inside_inline_element_snaps_after_it() {
    let doc = html("<p>One <b>two. Three</b> four. Five.</p>");
    let ann = segment_sentences(&doc, &RuleSplitter).unwrap();
    let para = ann.doc().node_at(&p(&[0, 0])).unwrap();
    assert_eq!(
        tags(para),
        vec![
            "sentence-beg",
            "\"One \"",
            "b",
            "sentence-end",
            "sentence-beg",
            "\" four. \"",
            "sentence-end",
            "sentence-beg",
            "\"Five.\"",
            "sentence-end",
        ]
    );
}

#[test]
fn sole_inline_wrapper_is_entered() {
    let ann = segment_sentences(&html("<p><em>First one. Second one.</em></p>"), &RuleSplitter).unwrap();
    let em = ann.doc().node_at(&p(&[0, 0, 0])).unwrap();
    assert!(em.is_tag("em"));
    assert_eq!(em.children().iter().filter(|c| c.is_sentinel()).count(), 4);
}

#[test]
fn nested_list_label_becomes_a_sentence() {
    let doc = html("<ol><li>Lunch<ul><li>Sandwich</li><li>Salad</li></ul></li></ol>");
    let ann = segment_sentences(&doc, &RuleSplitter).unwrap();
    let texts: Vec<String> = ann
        .sentences()
        .iter()
        .map(|s| {
            s.paths
                .iter()
                .filter_map(|q| ann.doc().get(q).and_then(DocNode::as_text))
                .collect()
        })
        .collect();
    assert_eq!(texts, vec!["Lunch", "Sandwich", "Salad"]);
}

#[test]
fn loose_text_in_divs_is_covered() {
    let doc = html("<div>Loose text here.</div><p>Para.</p><div><span>Tail.</span></div>");
    let ann = segment_sentences(&doc, &RuleSplitter).unwrap();
    assert_eq!(ann.sentences().len(), 3);
}

#[test]
fn sentence_blocks_are_their_block_leaf() {
    let ann = segment_sentences(&html(FIG2), &RuleSplitter).unwrap();
    let para_block = ann.doc().down(&PathSet::single(p(&[0, 0, 1])));
    assert_eq!(ann.sentences()[1].block, para_block);
    assert_eq!(ann.sentences()[2].block, para_block);
}

#[test]
fn bad_spans_are_mapping_errors() {
    let doc = html("<p>A. B.</p>");
    let overlapping = |_: &str| vec![0..3, 2..5];
    assert!(matches!(
        segment_sentences(&doc, &overlapping),
        Err(SegmentError::SpanMapping { reason: "overlaps the previous span", .. })
    ));
    let out_of_range = |_: &str| vec![0..9];
    assert!(matches!(
        segment_sentences(&doc, &out_of_range),
        Err(SegmentError::SpanMapping { reason: "out of range", .. })
    ));
    let mid_char = |_: &str| vec![0..1];
    assert!(matches!(
        segment_sentences(&html("<p>é</p>"), &mid_char),
        Err(SegmentError::SpanMapping { .. })
    ));
}

#[test]
fn unknown_sentence_is_an_error() {
    let ann = segment_sentences(&html("<p>A b.</p>"), &RuleSplitter).unwrap();
    let bogus = SentenceId(p(&[0, 0, 7]));
    assert_eq!(
        ann.sent_paths(&bogus),
        Err(SegmentError::UnknownSentence(p(&[0, 0, 7])))
    );
}

#[test]
fn unbalanced_sentinels_are_rejected() {
    let doc = DocNode::element(
        "p",
        vec![DocNode::element(SENTENCE_BEGIN, vec![]), DocNode::text("x")],
    );
    assert_eq!(
        AnnotatedDoc::from_annotated(doc),
        Err(SegmentError::MalformedSentinels(p(&[0])))
    );
}

#[test]
fn annotated_html_round_trips_through_the_parser() {
    let ann = segment_sentences(&html(FIG2), &RuleSplitter).unwrap();
    let reparsed = parse_html(crate::doctree::to_html(ann.doc()).as_bytes()).unwrap();
    assert_eq!(&reparsed, ann.doc());
    let again = segment_sentences(&reparsed, &RuleSplitter).unwrap();
    assert_eq!(again, ann);
}

/// Text-bearing paths inside segmentation units, by a direct scan.
fn text_paths_in_blocks(doc: &DocNode) -> PathSet {
    let leaves = block_leaves(doc);
    doc.walk()
        .into_iter()
        .filter(|(q, n)| {
            n.as_text().is_some_and(|t| !t.trim().is_empty())
                && leaves.iter().any(|l| l.is_prefix_of(q))
        })
        .map(|(q, _)| q)
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn segmentation_preserves_text_and_is_idempotent(doc in testkit::arb_doc()) {
        let ann = segment_sentences(&doc, &RuleSplitter).unwrap();
        let stripped = strip_sentinels(ann.doc());
        prop_assert_eq!(stripped.text_content(), doc.text_content());
        prop_assert_eq!(stripped.size() <= doc.size(), true);
        let again = segment_sentences(ann.doc(), &RuleSplitter).unwrap();
        prop_assert_eq!(&again, &ann);
    }

    #[test]
    fn sentences_cover_block_text_disjointly(doc in testkit::arb_doc()) {
        let ann = segment_sentences(&doc, &RuleSplitter).unwrap();
        let mut seen = PathSet::new();
        for s in ann.sentences() {
            prop_assert_eq!(ann.doc().node_at(s.id.begin_path()).unwrap().tag(), Some(SENTENCE_BEGIN));
            for q in s.paths.iter() {
                if ann.doc().get(q).unwrap().as_text().is_some() {
                    prop_assert!(seen.insert(q.clone()), "text leaf {} in two sentences", q);
                }
            }
            prop_assert!(s.paths.is_subset(&s.block));
        }
        let covered: PathSet = seen
            .iter()
            .filter(|q| !ann.doc().get(q).unwrap().as_text().unwrap().trim().is_empty())
            .cloned()
            .collect();
        prop_assert!(text_paths_in_blocks(ann.doc()).is_subset(&covered));
    }
}
