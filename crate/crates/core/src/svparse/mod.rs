//! SystemVerilog subset parser.
//!
//! [`parse_source`] turns one design file into an [`AstTree`] whose nodes are
//! the construct kinds in [`NodeKind`]; [`count_nodes`] linearizes that tree
//! into a [`NodeHistogram`] with a counting visitor.
//!
//! The parser is tolerant: constructs outside the supported subset are
//! consumed by balanced-token skipping and show up as `OtherMember` or
//! `OtherStatement`. Only lexical errors and unbalanced delimiters fail.

mod ast;
mod lexer;
mod parser;

pub use ast::{walk_children, walk_node, walk_tree, AstNode, AstTree, NodeClass, NodeKind, Span, Visitor};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::astdiff::NodeHistogram;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SvParseError {
    #[error("lex error at byte {offset}: {message}")]
    Lex { offset: usize, message: String },
    #[error("unbalanced delimiters at byte {offset}: expected {expected}, found {found}")]
    Unbalanced {
        offset: usize,
        expected: String,
        found: String,
    },
    #[error("invalid source file: {0}")]
    InvalidSource(String),
}

impl SvParseError {
    pub fn offset(&self) -> Option<usize> {
        match self {
            SvParseError::Lex { offset, .. } | SvParseError::Unbalanced { offset, .. } => Some(*offset),
            SvParseError::InvalidSource(_) => None,
        }
    }
}

/// One version of a design file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceFile {
    pub path: String,
    pub content: String,
    pub version_tag: String,
}

impl SourceFile {
    pub fn new(
        path: impl Into<String>,
        content: impl Into<String>,
        version_tag: impl Into<String>,
    ) -> Result<Self, SvParseError> {
        let path = path.into();
        if path.is_empty() {
            return Err(SvParseError::InvalidSource("empty path".into()));
        }
        Ok(Self {
            path,
            content: content.into(),
            version_tag: version_tag.into(),
        })
    }

    /// Decodes raw bytes, reporting the first invalid UTF-8 offset as a lex error.
    pub fn from_bytes(
        path: impl Into<String>,
        bytes: Vec<u8>,
        version_tag: impl Into<String>,
    ) -> Result<Self, SvParseError> {
        let content = String::from_utf8(bytes).map_err(|e| SvParseError::Lex {
            offset: e.utf8_error().valid_up_to(),
            message: "illegal byte sequence".into(),
        })?;
        Self::new(path, content, version_tag)
    }

    /// Whether the path has one of the recognized HDL extensions.
    pub fn is_hdl_path(path: &str) -> bool {
        matches!(
            path.rsplit_once('.').map(|(_, ext)| ext),
            Some("sv" | "svh" | "v" | "vh")
        )
    }
}

/// Parses one design file.
pub fn parse_source(file: &SourceFile) -> Result<AstTree<'_>, SvParseError> {
    let lexed = lexer::lex(&file.content)?;
    let members = parser::parse_tokens(&file.content, &lexed.tokens)?;
    Ok(AstTree {
        members,
        source: file,
        preprocessed: lexed.conditional_directives,
    })
}

/// Visitor that tallies members, statements and expressions by kind.
#[derive(Debug, Default)]
struct NodeCounter {
    histogram: NodeHistogram,
}

impl Visitor for NodeCounter {
    fn visit_member(&mut self, node: &AstNode) {
        self.histogram.increment(node.kind);
        walk_children(self, node);
    }

    fn visit_statement(&mut self, node: &AstNode) {
        self.histogram.increment(node.kind);
        walk_children(self, node);
    }

    fn visit_expression(&mut self, node: &AstNode) {
        self.histogram.increment(node.kind);
        walk_children(self, node);
    }
}

/// Counts every member, statement and assignment/conditional expression.
pub fn count_nodes(tree: &AstTree<'_>) -> NodeHistogram {
    let mut counter = NodeCounter::default();
    walk_tree(&mut counter, tree);
    counter.histogram
}

/// Parse and count in one step.
pub fn histogram_of(file: &SourceFile) -> Result<NodeHistogram, SvParseError> {
    parse_source(file).map(|tree| count_nodes(&tree))
}
