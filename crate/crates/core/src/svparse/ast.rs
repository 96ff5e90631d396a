use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use super::SourceFile;

/// Construct kinds the analysis counts. Every AST node carries exactly one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum NodeKind {
    ModuleDeclaration,
    HierarchyInstantiation,
    AlwaysFfBlock,
    AlwaysCombBlock,
    /// Legacy `always` and `always_latch`.
    AlwaysBlock,
    GenerateConstruct,
    CaseStatement,
    ConditionalStatement,
    ConditionalExpression,
    BlockingAssignment,
    NonBlockingAssignment,
    ContinuousAssign,
    DataDeclaration,
    OtherMember,
    OtherStatement,
}

/// Syntactic class of a node kind, used for visitor dispatch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeClass {
    Member,
    Statement,
    Expression,
}

impl NodeKind {
    pub const ALL: [NodeKind; 15] = [
        NodeKind::ModuleDeclaration,
        NodeKind::HierarchyInstantiation,
        NodeKind::AlwaysFfBlock,
        NodeKind::AlwaysCombBlock,
        NodeKind::AlwaysBlock,
        NodeKind::GenerateConstruct,
        NodeKind::CaseStatement,
        NodeKind::ConditionalStatement,
        NodeKind::ConditionalExpression,
        NodeKind::BlockingAssignment,
        NodeKind::NonBlockingAssignment,
        NodeKind::ContinuousAssign,
        NodeKind::DataDeclaration,
        NodeKind::OtherMember,
        NodeKind::OtherStatement,
    ];

    pub fn class(self) -> NodeClass {
        use NodeKind::*;
        match self {
            ModuleDeclaration
            | HierarchyInstantiation
            | AlwaysFfBlock
            | AlwaysCombBlock
            | AlwaysBlock
            | GenerateConstruct
            | ContinuousAssign
            | DataDeclaration
            | OtherMember => NodeClass::Member,
            CaseStatement | ConditionalStatement | OtherStatement => NodeClass::Statement,
            ConditionalExpression | BlockingAssignment | NonBlockingAssignment => NodeClass::Expression,
        }
    }

    pub fn name(self) -> &'static str {
        use NodeKind::*;
        match self {
            ModuleDeclaration => "ModuleDeclaration",
            HierarchyInstantiation => "HierarchyInstantiation",
            AlwaysFfBlock => "AlwaysFfBlock",
            AlwaysCombBlock => "AlwaysCombBlock",
            AlwaysBlock => "AlwaysBlock",
            GenerateConstruct => "GenerateConstruct",
            CaseStatement => "CaseStatement",
            ConditionalStatement => "ConditionalStatement",
            ConditionalExpression => "ConditionalExpression",
            BlockingAssignment => "BlockingAssignment",
            NonBlockingAssignment => "NonBlockingAssignment",
            ContinuousAssign => "ContinuousAssign",
            DataDeclaration => "DataDeclaration",
            OtherMember => "OtherMember",
            OtherStatement => "OtherStatement",
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Half-open byte range within the source file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        debug_assert!(start <= end);
        Self { start, end }
    }

    pub fn contains(&self, other: &Span) -> bool {
        self.start <= other.start && other.end <= self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AstNode {
    pub kind: NodeKind,
    pub span: Span,
    pub children: Vec<AstNode>,
}

impl AstNode {
    pub fn leaf(kind: NodeKind, span: Span) -> Self {
        Self {
            kind,
            span,
            children: Vec::new(),
        }
    }

    pub fn with_children(kind: NodeKind, span: Span, children: Vec<AstNode>) -> Self {
        Self { kind, span, children }
    }

    /// Number of nodes in this subtree, including `self`.
    pub fn size(&self) -> usize {
        1 + self.children.iter().map(AstNode::size).sum::<usize>()
    }
}

/// A parsed design file.
#[derive(Debug, Clone)]
pub struct AstTree<'a> {
    pub members: Vec<AstNode>,
    pub source: &'a SourceFile,
    /// True when conditional-compilation directives were stripped textually.
    pub preprocessed: bool,
}

impl AstTree<'_> {
    pub fn node_count(&self) -> usize {
        self.members.iter().map(AstNode::size).sum()
    }

    /// Checks that every child span nests inside its parent and inside the file.
    pub fn spans_nest(&self) -> bool {
        fn check(node: &AstNode) -> bool {
            node.span.start <= node.span.end && node.children.iter().all(|c| node.span.contains(&c.span) && check(c))
        }
        let file = Span::new(0, self.source.content.len());
        self.members.iter().all(|m| file.contains(&m.span) && check(m))
    }

    /// Indented text dump, one node per line.
    pub fn dump(&self) -> String {
        fn go(out: &mut String, node: &AstNode, depth: usize, src: &str) {
            let line = 1 + src[..node.span.start].matches('\n').count();
            let _ = writeln!(
                out,
                "{:indent$}{} [{}..{}] line {}",
                "",
                node.kind,
                node.span.start,
                node.span.end,
                line,
                indent = depth * 2
            );
            for child in &node.children {
                go(out, child, depth + 1, src);
            }
        }
        let mut out = String::new();
        for m in &self.members {
            go(&mut out, m, 0, &self.source.content);
        }
        out
    }
}

/// Tree traversal with per-class hooks. Default hooks just recurse.
pub trait Visitor {
    fn visit_member(&mut self, node: &AstNode) {
        walk_children(self, node);
    }

    fn visit_statement(&mut self, node: &AstNode) {
        walk_children(self, node);
    }

    fn visit_expression(&mut self, node: &AstNode) {
        walk_children(self, node);
    }
}

pub fn walk_node<V: Visitor + ?Sized>(visitor: &mut V, node: &AstNode) {
    match node.kind.class() {
        NodeClass::Member => visitor.visit_member(node),
        NodeClass::Statement => visitor.visit_statement(node),
        NodeClass::Expression => visitor.visit_expression(node),
    }
}

pub fn walk_children<V: Visitor + ?Sized>(visitor: &mut V, node: &AstNode) {
    for child in &node.children {
        walk_node(visitor, child);
    }
}

pub fn walk_tree<V: Visitor + ?Sized>(visitor: &mut V, tree: &AstTree<'_>) {
    for member in &tree.members {
        walk_node(visitor, member);
    }
}
