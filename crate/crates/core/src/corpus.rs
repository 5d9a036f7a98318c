//! Collections of segmented documents keyed by id.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::doctree::DocNode;
use crate::segment::{segment_sentences, AnnotatedDoc, SegmentError, SentenceSplitter};

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DocId(pub String);

impl DocId {
    pub fn new(id: impl Into<String>) -> Self {
        DocId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for DocId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for DocId {
    fn from(s: &str) -> Self {
        DocId(s.to_string())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CorpusError {
    #[error("duplicate document id {0}")]
    DuplicateId(DocId),
    #[error("segmenting {id}: {source}")]
    Segment {
        id: DocId,
        #[source]
        source: SegmentError,
    },
}

/// Segmented documents in id order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    docs: BTreeMap<DocId, AnnotatedDoc>,
}

impl Corpus {
    pub fn new() -> Self {
        Self::default()
    }

    /// Segments every document with `splitter`.
    pub fn from_docs(
        docs: impl IntoIterator<Item = (DocId, DocNode)>,
        splitter: &dyn SentenceSplitter,
    ) -> Result<Self, CorpusError> {
        let mut out = Corpus::new();
        for (id, doc) in docs {
            let ann = segment_sentences(&doc, splitter).map_err(|source| CorpusError::Segment {
                id: id.clone(),
                source,
            })?;
            out.insert(id, ann)?;
        }
        Ok(out)
    }

    pub fn insert(&mut self, id: DocId, doc: AnnotatedDoc) -> Result<(), CorpusError> {
        if self.docs.contains_key(&id) {
            return Err(CorpusError::DuplicateId(id));
        }
        self.docs.insert(id, doc);
        Ok(())
    }

    pub fn get(&self, id: &DocId) -> Option<&AnnotatedDoc> {
        self.docs.get(id)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&DocId, &AnnotatedDoc)> {
        self.docs.iter()
    }

    pub fn len(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.docs.is_empty()
    }
}
