//! Small SystemVerilog grammar for property tests.
//!
//! Each generated construct carries the histogram it should produce, and
//! rendering inserts a chosen separator (whitespace or comment) between
//! every pair of tokens.

#![allow(dead_code)]

use bugscope_core::astdiff::NodeHistogram;
use bugscope_core::svparse::NodeKind;
use proptest::prelude::*;

#[derive(Debug, Clone)]
pub enum Expr {
    Ident(u8),
    Num(u8),
    Bin(Box<Expr>, &'static str, Box<Expr>),
    Tern(Box<Expr>, Box<Expr>, Box<Expr>),
    Paren(Box<Expr>),
}

#[derive(Debug, Clone)]
pub enum Stmt {
    Blocking(u8, Expr),
    NonBlocking(u8, Expr),
    If(Expr, Box<Stmt>, Option<Box<Stmt>>),
    Case(Expr, Vec<Stmt>),
    Block(Vec<Stmt>),
}

#[derive(Debug, Clone)]
pub enum Item {
    Assign(u8, Expr),
    Decl(u8),
    Inst(u8, Expr),
    AlwaysFf(Stmt),
    AlwaysComb(Vec<Stmt>),
    GenFor(Vec<Item>),
    GenIf(Expr, Vec<Item>),
}

#[derive(Debug, Clone)]
pub struct Module {
    pub id: u8,
    pub items: Vec<Item>,
}

pub fn expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![(0u8..4).prop_map(Expr::Ident), (0u8..16).prop_map(Expr::Num)];
    leaf.prop_recursive(3, 12, 3, |inner| {
        prop_oneof![
            (
                inner.clone(),
                prop::sample::select(vec!["+", "&", "^", "|", "=="]),
                inner.clone()
            )
                .prop_map(|(a, op, b)| Expr::Bin(Box::new(a), op, Box::new(b))),
            (inner.clone(), inner.clone(), inner.clone()).prop_map(|(c, a, b)| Expr::Tern(
                Box::new(c),
                Box::new(a),
                Box::new(b)
            )),
            inner.prop_map(|e| Expr::Paren(Box::new(e))),
        ]
    })
}

pub fn stmt() -> impl Strategy<Value = Stmt> {
    let leaf = prop_oneof![
        ((0u8..4), expr()).prop_map(|(t, e)| Stmt::Blocking(t, e)),
        ((0u8..4), expr()).prop_map(|(t, e)| Stmt::NonBlocking(t, e)),
    ];
    leaf.prop_recursive(3, 10, 3, |inner| {
        prop_oneof![
            (expr(), inner.clone(), prop::option::of(inner.clone())).prop_map(|(c, t, e)| Stmt::If(
                c,
                Box::new(t),
                e.map(Box::new)
            )),
            (expr(), prop::collection::vec(inner.clone(), 1..3)).prop_map(|(s, arms)| Stmt::Case(s, arms)),
            prop::collection::vec(inner, 0..3).prop_map(Stmt::Block),
        ]
    })
}

fn flat_item() -> impl Strategy<Value = Item> {
    prop_oneof![
        ((0u8..4), expr()).prop_map(|(t, e)| Item::Assign(t, e)),
        (0u8..4).prop_map(Item::Decl),
        ((0u8..4), expr()).prop_map(|(n, e)| Item::Inst(n, e)),
        stmt().prop_map(Item::AlwaysFf),
        prop::collection::vec(stmt(), 0..3).prop_map(Item::AlwaysComb),
    ]
}

pub fn item() -> impl Strategy<Value = Item> {
    prop_oneof![
        4 => flat_item(),
        1 => prop::collection::vec(flat_item(), 0..3).prop_map(Item::GenFor),
        1 => (expr(), prop::collection::vec(flat_item(), 0..3)).prop_map(|(c, b)| Item::GenIf(c, b)),
    ]
}

pub fn module() -> impl Strategy<Value = Module> {
    ((0u8..8), prop::collection::vec(item(), 0..6)).prop_map(|(id, items)| Module { id, items })
}

/// Separator choices: index 0 is a single space, 1..=3 other whitespace,
/// 4..=5 comments.
pub const SEPARATORS: [&str; 6] = [
    " ",
    "\n",
    " \t\n  ",
    "\r\n",
    " /* note ? : always_ff */ ",
    " // assign x = y;\n",
];

fn push(tokens: &mut Vec<String>, s: impl Into<String>) {
    tokens.push(s.into());
}

impl Expr {
    fn tokens(&self, out: &mut Vec<String>, h: &mut NodeHistogram) {
        match self {
            Expr::Ident(i) => push(out, format!("s{i}")),
            Expr::Num(n) => push(out, format!("4'd{n}")),
            Expr::Bin(a, op, b) => {
                a.tokens(out, h);
                push(out, *op);
                b.tokens(out, h);
            }
            Expr::Tern(c, a, b) => {
                h.increment(NodeKind::ConditionalExpression);
                push(out, "(");
                c.tokens(out, h);
                push(out, "?");
                a.tokens(out, h);
                push(out, ":");
                b.tokens(out, h);
                push(out, ")");
            }
            Expr::Paren(e) => {
                push(out, "(");
                e.tokens(out, h);
                push(out, ")");
            }
        }
    }
}

impl Stmt {
    fn tokens(&self, out: &mut Vec<String>, h: &mut NodeHistogram) {
        match self {
            Stmt::Blocking(t, e) | Stmt::NonBlocking(t, e) => {
                let (op, kind) = match self {
                    Stmt::Blocking(..) => ("=", NodeKind::BlockingAssignment),
                    _ => ("<=", NodeKind::NonBlockingAssignment),
                };
                h.increment(kind);
                push(out, format!("s{t}"));
                push(out, op);
                e.tokens(out, h);
                push(out, ";");
            }
            Stmt::If(c, t, e) => {
                h.increment(NodeKind::ConditionalStatement);
                push(out, "if");
                push(out, "(");
                c.tokens(out, h);
                push(out, ")");
                t.braced(out, h);
                if let Some(e) = e {
                    push(out, "else");
                    e.braced(out, h);
                }
            }
            Stmt::Case(s, arms) => {
                h.increment(NodeKind::CaseStatement);
                push(out, "case");
                push(out, "(");
                s.tokens(out, h);
                push(out, ")");
                for (i, arm) in arms.iter().enumerate() {
                    push(out, format!("4'd{i}"));
                    push(out, ":");
                    arm.tokens(out, h);
                }
                push(out, "default");
                push(out, ":");
                push(out, ";");
                push(out, "endcase");
            }
            Stmt::Block(body) => {
                push(out, "begin");
                for s in body {
                    s.tokens(out, h);
                }
                push(out, "end");
            }
        }
    }

    /// Wraps nested conditionals so an inner `else` cannot bind to them.
    fn braced(&self, out: &mut Vec<String>, h: &mut NodeHistogram) {
        if matches!(self, Stmt::If(..)) {
            push(out, "begin");
            self.tokens(out, h);
            push(out, "end");
        } else {
            self.tokens(out, h);
        }
    }
}

impl Item {
    fn tokens(&self, out: &mut Vec<String>, h: &mut NodeHistogram) {
        match self {
            Item::Assign(t, e) => {
                h.increment(NodeKind::ContinuousAssign);
                push(out, "assign");
                push(out, format!("s{t}"));
                push(out, "=");
                e.tokens(out, h);
                push(out, ";");
            }
            Item::Decl(n) => {
                h.increment(NodeKind::DataDeclaration);
                for t in ["logic", "[", "3", ":", "0", "]"] {
                    push(out, t);
                }
                push(out, format!("w{n}"));
                push(out, ";");
            }
            Item::Inst(n, e) => {
                h.increment(NodeKind::HierarchyInstantiation);
                push(out, "prim_buf");
                push(out, format!("u_{n}"));
                push(out, "(");
                push(out, ".in_i");
                push(out, "(");
                e.tokens(out, h);
                push(out, ")");
                push(out, ")");
                push(out, ";");
            }
            Item::AlwaysFf(s) => {
                h.increment(NodeKind::AlwaysFfBlock);
                for t in ["always_ff", "@", "(", "posedge", "clk_i", ")"] {
                    push(out, t);
                }
                s.tokens(out, h);
            }
            Item::AlwaysComb(body) => {
                h.increment(NodeKind::AlwaysCombBlock);
                push(out, "always_comb");
                push(out, "begin");
                for s in body {
                    s.tokens(out, h);
                }
                push(out, "end");
            }
            Item::GenFor(body) => {
                h.increment(NodeKind::GenerateConstruct);
                for t in [
                    "for", "(", "genvar", "gi", "=", "0", ";", "gi", "<", "2", ";", "gi", "++", ")",
                ] {
                    push(out, t);
                }
                push(out, "begin");
                push(out, ":");
                push(out, "g_for");
                for i in body {
                    i.tokens(out, h);
                }
                push(out, "end");
            }
            Item::GenIf(c, body) => {
                h.increment(NodeKind::GenerateConstruct);
                push(out, "if");
                push(out, "(");
                c.tokens(out, h);
                push(out, ")");
                push(out, "begin");
                push(out, ":");
                push(out, "g_if");
                for i in body {
                    i.tokens(out, h);
                }
                push(out, "end");
            }
        }
    }
}

impl Module {
    /// Token stream and the histogram it should parse to.
    pub fn tokens(&self) -> (Vec<String>, NodeHistogram) {
        let mut out = Vec::new();
        let mut h = NodeHistogram::new();
        h.increment(NodeKind::ModuleDeclaration);
        for t in [
            "module",
            &format!("m{}", self.id),
            "(",
            "input",
            "logic",
            "clk_i",
            ")",
            ";",
        ] {
            push(&mut out, t);
        }
        for i in &self.items {
            i.tokens(&mut out, &mut h);
        }
        push(&mut out, "endmodule");
        (out, h)
    }
}

/// Joins tokens, taking the separator after token `i` from `choices[i % len]`.
pub fn render(tokens: &[String], choices: &[usize]) -> String {
    let mut s = String::new();
    for (i, t) in tokens.iter().enumerate() {
        s.push_str(t);
        let c = if choices.is_empty() {
            0
        } else {
            choices[i % choices.len()]
        };
        s.push_str(SEPARATORS[c % SEPARATORS.len()]);
    }
    s
}

pub fn plain(tokens: &[String]) -> String {
    render(tokens, &[0])
}

/// Whitespace-only separator choices.
pub fn whitespace_choices() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(0usize..4, 1..32)
}

/// Separator choices that include comments.
pub fn comment_choices() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(0usize..6, 1..32)
}
