//! Random document generators shared by the property tests.

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::doctree::{DocNode, Element, Path, PathSet};

const TAGS: &[&str] = &[
    "div", "section", "p", "p", "span", "b", "em", "a", "ul", "ol", "li", "li", "table", "tr",
    "td", "th", "h1", "h2", "h3", "title", "blockquote", "code",
];

const WORDS: &[&str] = &[
    "alpha", "beta", "gamma", "delta", "river", "stone", "park", "trail", "north", "light",
    "Virginia", "Ada", "notes", "engine", "42", "e.g.", "Dr.",
];

/// The tree of the three-node example page: a section holding a heading
/// and two paragraphs.
pub fn listing2() -> DocNode {
    DocNode::element(
        "html",
        vec![DocNode::element(
            "body",
            vec![DocNode::element(
                "section",
                vec![
                    DocNode::element("h1", vec![DocNode::text("Title")]),
                    DocNode::element("p", vec![DocNode::text("First paragraph.")]),
                    DocNode::element("p", vec![DocNode::text("Second paragraph.")]),
                ],
            )],
        )],
    )
}

/// A random tree rooted at `html` with at most `max_nodes` nodes.
pub fn random_doc(seed: u64, max_nodes: usize) -> DocNode {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut budget = max_nodes.max(1) - 1;
    let mut root = Element::new("html");
    grow(&mut rng, &mut root, &mut budget, 0);
    DocNode::Element(root)
}

fn grow(rng: &mut ChaCha8Rng, el: &mut Element, budget: &mut usize, depth: usize) {
    let want = rng.gen_range(0..=4usize);
    for _ in 0..want {
        if *budget == 0 {
            return;
        }
        *budget -= 1;
        if depth >= 5 || rng.gen_bool(0.35) {
            el.children.push(DocNode::Text(random_text(rng)));
        } else {
            let mut child = Element::new(*TAGS.choose(rng).unwrap());
            if child.tag == "a" {
                child.attrs.insert("href".into(), format!("https://x.test/{}", rng.gen::<u8>()));
            }
            grow(rng, &mut child, budget, depth + 1);
            el.children.push(DocNode::Element(child));
        }
    }
}

/// One to three short sentences.
pub fn random_text(rng: &mut impl Rng) -> String {
    let n = rng.gen_range(1..=3);
    let mut out = Vec::new();
    for _ in 0..n {
        let len = rng.gen_range(1..=5);
        let mut words: Vec<String> = (0..len)
            .map(|_| WORDS.choose(rng).unwrap().to_string())
            .collect();
        if let Some(first) = words.first_mut() {
            let mut cs = first.chars();
            if let Some(c) = cs.next() {
                *first = c.to_uppercase().chain(cs).collect();
            }
        }
        let end = *[".", ".", "!", "?", ""].choose(rng).unwrap();
        out.push(format!("{}{}", words.join(" "), end));
    }
    let sep = if rng.gen_bool(0.5) { " " } else { "  " };
    out.join(sep)
}

/// Each valid path is kept independently with probability `p`.
pub fn random_subset(doc: &DocNode, seed: u64, p: f64) -> PathSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    doc.valid_paths()
        .into_iter()
        .filter(|_| rng.gen_bool(p))
        .collect()
}

/// A random subset of `set`, for monotonicity checks.
pub fn random_sub_of(set: &PathSet, seed: u64, p: f64) -> PathSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    set.iter().filter(|_| rng.gen_bool(p)).cloned().collect()
}

/// A random tree of at most 50 nodes.
pub fn arb_doc() -> impl Strategy<Value = DocNode> {
    (any::<u64>(), 1usize..=50).prop_map(|(seed, n)| random_doc(seed, n))
}

/// A random tree with two nested random path sets `small ⊆ large`.
pub fn arb_doc_with_sets() -> impl Strategy<Value = (DocNode, PathSet, PathSet)> {
    (arb_doc(), any::<u64>(), any::<u64>(), 0.05f64..0.6).prop_map(|(doc, s1, s2, p)| {
        let large = random_subset(&doc, s1, p);
        let small = random_sub_of(&large, s2, 0.5);
        (doc, small, large)
    })
}

/// Paths of every node in `doc`, as plain index vectors (a traversal oracle
/// independent of [`DocNode::walk`]).
pub fn all_paths_naive(doc: &DocNode) -> Vec<Path> {
    fn go(node: &DocNode, prefix: Vec<usize>, out: &mut Vec<Path>) {
        out.push(Path::from(prefix.clone()));
        for (i, c) in node.children().iter().enumerate() {
            let mut next = prefix.clone();
            next.push(i);
            go(c, next, out);
        }
    }
    let mut out = Vec::new();
    go(doc, Vec::new(), &mut out);
    out
}
