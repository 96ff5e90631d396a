//! Recursive-descent parser over the token stream.
//!
//! Only the constructs that map to a [`NodeKind`] are built into nodes. Everything
//! else is consumed by balanced-token skipping and becomes an `OtherMember` or
//! `OtherStatement`. Conditional operators are still found inside skipped text
//! because every standalone `?` token is one.

use super::ast::{AstNode, NodeKind, Span};
use super::lexer::{Token, TokenKind};
use super::SvParseError;

/// Recoverable failures fall back to skipping; hard ones abort the file.
enum Fail {
    Soft,
    Hard(SvParseError),
}

impl From<SvParseError> for Fail {
    fn from(e: SvParseError) -> Self {
        Fail::Hard(e)
    }
}

type PResult<T> = Result<T, Fail>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Closer {
    Tok(&'static str),
    Join,
}

impl Closer {
    fn describe(self) -> &'static str {
        match self {
            Closer::Tok(t) => t,
            Closer::Join => "join",
        }
    }
}

const KEYWORD_CLOSERS: &[&str] = &[
    "end",
    "endcase",
    "join",
    "join_any",
    "join_none",
    "endgenerate",
    "endfunction",
    "endtask",
    "endmodule",
    "endclass",
    "endinterface",
    "endpackage",
    "endprogram",
    "endchecker",
    "endproperty",
    "endsequence",
    "endclocking",
    "endgroup",
    "endspecify",
    "endconfig",
    "endprimitive",
    "endtable",
];

const DATA_KEYWORDS: &[&str] = &[
    "automatic",
    "bit",
    "byte",
    "chandle",
    "const",
    "enum",
    "event",
    "genvar",
    "inout",
    "input",
    "int",
    "integer",
    "interconnect",
    "localparam",
    "logic",
    "longint",
    "nettype",
    "output",
    "parameter",
    "real",
    "realtime",
    "ref",
    "reg",
    "shortint",
    "shortreal",
    "signed",
    "static",
    "string",
    "struct",
    "supply0",
    "supply1",
    "time",
    "tri",
    "tri0",
    "tri1",
    "triand",
    "trior",
    "trireg",
    "type",
    "typedef",
    "union",
    "unsigned",
    "uwire",
    "var",
    "wand",
    "wire",
    "wor",
];

/// Module items that run to the next `;` and carry no counted structure.
const OTHER_SEMICOLON_ITEMS: &[&str] = &[
    "alias",
    "and",
    "assert",
    "assume",
    "bind",
    "buf",
    "bufif0",
    "bufif1",
    "cmos",
    "cover",
    "default",
    "defparam",
    "export",
    "expect",
    "extern",
    "global",
    "import",
    "let",
    "modport",
    "nand",
    "nmos",
    "nor",
    "not",
    "notif0",
    "notif1",
    "or",
    "pmos",
    "pulldown",
    "pullup",
    "pure",
    "rcmos",
    "restrict",
    "rnmos",
    "rpmos",
    "rtran",
    "rtranif0",
    "rtranif1",
    "specparam",
    "timeprecision",
    "timeunit",
    "tran",
    "tranif0",
    "tranif1",
    "virtual",
    "xnor",
    "xor",
];

const ASSIGN_OPS: &[&str] = &[
    "=", "<=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>=", "<<<=", ">>>=",
];

const UNARY_OPS: &[&str] = &["+", "-", "!", "~", "&", "~&", "|", "~|", "^", "~^", "^~", "++", "--"];

const TYPE_KEYWORDS_IN_EXPR: &[&str] = &[
    "bit", "byte", "const", "default", "int", "integer", "logic", "longint", "null", "reg", "shortint", "signed",
    "string", "super", "this", "type", "unsigned",
];

fn binary_precedence(text: &str, kind: TokenKind) -> Option<u8> {
    if kind == TokenKind::Keyword {
        return matches!(text, "inside" | "dist").then_some(7);
    }
    if kind != TokenKind::Op {
        return None;
    }
    Some(match text {
        "||" => 1,
        "&&" => 2,
        "|" => 3,
        "^" | "~^" | "^~" => 4,
        "&" => 5,
        "==" | "!=" | "===" | "!==" | "==?" | "!=?" => 6,
        "<" | "<=" | ">" | ">=" => 7,
        "<<" | ">>" | "<<<" | ">>>" => 8,
        "+" | "-" => 9,
        "*" | "/" | "%" => 10,
        "**" => 11,
        _ => return None,
    })
}

pub(super) struct Parser<'a> {
    src: &'a str,
    toks: &'a [Token],
    pos: usize,
}

pub(super) fn parse_tokens(src: &str, toks: &[Token]) -> Result<Vec<AstNode>, SvParseError> {
    let mut p = Parser { src, toks, pos: 0 };
    let mut members = Vec::new();
    while p.pos < toks.len() {
        if p.is_closer(p.pos) {
            return Err(p.unexpected_closer(p.pos, None));
        }
        members.extend(p.member()?);
    }
    Ok(members)
}

impl<'a> Parser<'a> {
    // ----- token helpers -------------------------------------------------

    fn text(&self, i: usize) -> &'a str {
        self.toks.get(i).map(|t| &self.src[t.start..t.end]).unwrap_or("")
    }

    fn kind(&self, i: usize) -> Option<TokenKind> {
        self.toks.get(i).map(|t| t.kind)
    }

    fn is_op(&self, i: usize, op: &str) -> bool {
        self.kind(i) == Some(TokenKind::Op) && self.text(i) == op
    }

    fn is_kw(&self, i: usize, kw: &str) -> bool {
        self.kind(i) == Some(TokenKind::Keyword) && self.text(i) == kw
    }

    fn is_ident(&self, i: usize) -> bool {
        self.kind(i) == Some(TokenKind::Ident)
    }

    fn at_op(&self, op: &str) -> bool {
        self.is_op(self.pos, op)
    }

    fn at_kw(&self, kw: &str) -> bool {
        self.is_kw(self.pos, kw)
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if self.at_op(op) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_op(&mut self, op: &str) -> PResult<()> {
        if self.eat_op(op) {
            Ok(())
        } else {
            Err(Fail::Soft)
        }
    }

    /// Byte span covering tokens `first..last_exclusive`.
    fn span(&self, first: usize, last_exclusive: usize) -> Span {
        let start = self.toks[first].start;
        let end = if last_exclusive > first {
            self.toks[last_exclusive - 1].end
        } else {
            self.toks[first].end
        };
        Span::new(start, end)
    }

    fn eat_label(&mut self) {
        if self.at_op(":") && (self.is_ident(self.pos + 1)) {
            self.pos += 2;
        }
    }

    /// Consumes `ident :` when it introduces a labelled item.
    fn eat_item_label(&mut self) {
        if self.is_ident(self.pos) && self.is_op(self.pos + 1, ":") {
            self.pos += 2;
        }
    }

    // ----- balance tracking ---------------------------------------------

    fn opener_at(&self, i: usize) -> Option<Closer> {
        let kind = self.kind(i)?;
        let text = self.text(i);
        if kind == TokenKind::Op {
            return match text {
                "(" => Some(Closer::Tok(")")),
                "[" => Some(Closer::Tok("]")),
                "{" | "'{" => Some(Closer::Tok("}")),
                _ => None,
            };
        }
        if kind != TokenKind::Keyword {
            return None;
        }
        let prev = if i > 0 { self.text(i - 1) } else { "" };
        let prev_is_string = i > 0 && self.kind(i - 1) == Some(TokenKind::StringLit);
        let closer = match text {
            "begin" => "end",
            "fork" if !matches!(prev, "wait" | "disable") => return Some(Closer::Join),
            "case" | "casex" | "casez" | "randcase" => "endcase",
            "generate" => "endgenerate",
            "function" | "task"
                if !prev_is_string
                    && !matches!(prev, "extern" | "virtual" | "context" | "pure" | "export" | "import") =>
            {
                if text == "function" {
                    "endfunction"
                } else {
                    "endtask"
                }
            }
            "module" | "macromodule" if prev != "extern" => "endmodule",
            "class" if prev != "typedef" => "endclass",
            "interface" if prev != "virtual" && !self.is_kw(i + 1, "class") => "endinterface",
            "package" => "endpackage",
            "program" if prev != "extern" => "endprogram",
            "checker" => "endchecker",
            "property" if !matches!(prev, "assert" | "assume" | "cover" | "expect" | "restrict") => "endproperty",
            "sequence" if !matches!(prev, "cover" | "expect") => "endsequence",
            "randsequence" => "endsequence",
            "clocking" if !(self.is_ident(i + 1) && self.is_op(i + 2, ";")) => "endclocking",
            "covergroup" => "endgroup",
            "specify" => "endspecify",
            "config" => "endconfig",
            "primitive" if prev != "extern" => "endprimitive",
            "table" => "endtable",
            _ => return None,
        };
        Some(Closer::Tok(closer))
    }

    fn is_closer(&self, i: usize) -> bool {
        match self.kind(i) {
            Some(TokenKind::Op) => matches!(self.text(i), ")" | "]" | "}"),
            Some(TokenKind::Keyword) => KEYWORD_CLOSERS.contains(&self.text(i)),
            _ => false,
        }
    }

    fn closes(&self, i: usize, closer: Closer) -> bool {
        match closer {
            Closer::Tok(t) => self.text(i) == t && self.is_closer(i),
            Closer::Join => self.is_kw(i, "join") || self.is_kw(i, "join_any") || self.is_kw(i, "join_none"),
        }
    }

    fn unexpected_closer(&self, i: usize, expected: Option<Closer>) -> SvParseError {
        SvParseError::Unbalanced {
            offset: self.toks[i].start,
            expected: expected.map_or("no closing delimiter", Closer::describe).to_string(),
            found: self.text(i).to_string(),
        }
    }

    fn eof_error(&self, expected: &str, opened_at: usize) -> SvParseError {
        SvParseError::Unbalanced {
            offset: opened_at,
            expected: expected.to_string(),
            found: "end of file".to_string(),
        }
    }

    fn lexical_ternary(&self, i: usize, out: &mut Vec<AstNode>) {
        if self.is_op(i, "?") {
            out.push(AstNode::leaf(NodeKind::ConditionalExpression, self.span(i, i + 1)));
        }
    }

    /// Skips one balanced group starting at an opener, recording `?` operators.
    fn skip_group(&mut self, out: &mut Vec<AstNode>) -> Result<(), SvParseError> {
        let mut stack: Vec<(Closer, usize)> = Vec::new();
        loop {
            let i = self.pos;
            if i >= self.toks.len() {
                let (c, at) = stack.last().copied().unwrap_or((Closer::Tok("?"), 0));
                return Err(self.eof_error(c.describe(), at));
            }
            self.lexical_ternary(i, out);
            if let Some(c) = self.opener_at(i) {
                stack.push((c, self.toks[i].start));
                self.pos += 1;
                continue;
            }
            if self.is_closer(i) {
                match stack.last() {
                    Some(&(c, _)) if self.closes(i, c) => {
                        stack.pop();
                        self.pos += 1;
                        if stack.is_empty() {
                            return Ok(());
                        }
                        continue;
                    }
                    Some(&(c, _)) => return Err(self.unexpected_closer(i, Some(c))),
                    None => return Err(self.unexpected_closer(i, None)),
                }
            }
            self.pos += 1;
        }
    }

    /// Skips through the next `;` at nesting depth zero. Stops in front of a
    /// closer that belongs to an enclosing construct, or at end of input.
    fn skip_to_semicolon(&mut self, out: &mut Vec<AstNode>) -> Result<(), SvParseError> {
        while self.pos < self.toks.len() {
            let i = self.pos;
            if self.opener_at(i).is_some() {
                self.skip_group(out)?;
                continue;
            }
            if self.is_closer(i) {
                return Ok(());
            }
            self.lexical_ternary(i, out);
            self.pos += 1;
            if self.is_op(i, ";") {
                return Ok(());
            }
        }
        Ok(())
    }

    /// Index of the bracket closing the opener at `i`, if it is balanced
    /// within `hi`.
    fn matching_bracket(&self, i: usize, hi: usize) -> Option<usize> {
        let mut depth = 0usize;
        for j in i..hi {
            if self.kind(j) != Some(TokenKind::Op) {
                continue;
            }
            match self.text(j) {
                "(" | "[" | "{" | "'{" => depth += 1,
                ")" | "]" | "}" => {
                    depth = depth.checked_sub(1)?;
                    if depth == 0 {
                        return Some(j);
                    }
                }
                _ => {}
            }
        }
        None
    }

    /// Finds the first depth-zero token satisfying `pred`, scanning only over
    /// bracket nesting. Block keywords at depth zero end the search softly.
    fn find_depth0(&self, from: usize, pred: impl Fn(&Self, usize) -> bool) -> PResult<usize> {
        let mut stack: Vec<(&'static str, usize)> = Vec::new();
        let mut i = from;
        while i < self.toks.len() {
            if stack.is_empty() && pred(self, i) {
                return Ok(i);
            }
            if self.kind(i) == Some(TokenKind::Op) {
                match self.text(i) {
                    "(" => stack.push((")", i)),
                    "[" => stack.push(("]", i)),
                    "{" | "'{" => stack.push(("}", i)),
                    t @ (")" | "]" | "}") => match stack.pop() {
                        Some((want, _)) if want == t => {}
                        Some((want, _)) => {
                            return Err(Fail::Hard(SvParseError::Unbalanced {
                                offset: self.toks[i].start,
                                expected: want.to_string(),
                                found: t.to_string(),
                            }))
                        }
                        None => return Err(Fail::Soft),
                    },
                    ";" if !stack.is_empty() => {}
                    _ => {}
                }
            } else if self.kind(i) == Some(TokenKind::Keyword) && (self.is_closer(i) || self.opener_at(i).is_some()) {
                return Err(Fail::Soft);
            }
            i += 1;
        }
        Err(Fail::Soft)
    }

    fn find_semicolon(&self) -> PResult<usize> {
        self.find_depth0(self.pos, |p, i| p.is_op(i, ";"))
    }

    // ----- expressions ----------------------------------------------------

    /// Collects conditional-expression nodes in tokens `lo..hi`, treated as a
    /// comma-separated list. Items that do not parse are scanned lexically.
    fn ternaries_in(&self, lo: usize, hi: usize, out: &mut Vec<AstNode>) {
        let mut item_start = lo;
        let mut i = lo;
        while i <= hi {
            let at_end = i == hi;
            if at_end || self.is_op(i, ",") {
                self.item_ternaries(item_start, i, out);
                item_start = i + 1;
                i += 1;
                continue;
            }
            if matches!(self.text(i), "(" | "[" | "{" | "'{") && self.kind(i) == Some(TokenKind::Op) {
                match self.matching_bracket(i, hi) {
                    Some(j) => i = j + 1,
                    None => {
                        // Unbalanced inside the region: fall back entirely.
                        for k in item_start..hi {
                            self.lexical_ternary(k, out);
                        }
                        return;
                    }
                }
                continue;
            }
            i += 1;
        }
    }

    fn item_ternaries(&self, lo: usize, hi: usize, out: &mut Vec<AstNode>) {
        if lo >= hi {
            return;
        }
        let mut expr = ExprParser { p: self, pos: lo, hi };
        let mut found = Vec::new();
        if expr.item(&mut found).is_ok() && expr.pos == hi {
            out.extend(found);
        } else {
            for k in lo..hi {
                self.lexical_ternary(k, out);
            }
        }
    }

    // ----- members --------------------------------------------------------

    fn member(&mut self) -> Result<Vec<AstNode>, SvParseError> {
        let save = self.pos;
        match self.member_inner() {
            Ok(nodes) => Ok(nodes),
            Err(Fail::Hard(e)) => Err(e),
            Err(Fail::Soft) => {
                self.pos = save;
                self.recover(NodeKind::OtherMember)
            }
        }
    }

    fn recover(&mut self, kind: NodeKind) -> Result<Vec<AstNode>, SvParseError> {
        let start = self.pos;
        let mut children = Vec::new();
        if self.opener_at(start).is_some() {
            self.skip_group(&mut children)?;
            self.eat_label();
        } else {
            self.skip_to_semicolon(&mut children)?;
        }
        if self.pos == start {
            // Nothing consumable here: a closer that matches no opener.
            return Err(self.unexpected_closer(start, None));
        }
        Ok(vec![AstNode::with_children(kind, self.span(start, self.pos), children)])
    }

    fn items_until(&mut self, closer: &'static str, opened_at: usize) -> Result<Vec<AstNode>, SvParseError> {
        let mut nodes = Vec::new();
        loop {
            if self.pos >= self.toks.len() {
                return Err(self.eof_error(closer, opened_at));
            }
            if self.is_kw(self.pos, closer) {
                self.pos += 1;
                self.eat_label();
                return Ok(nodes);
            }
            if self.is_closer(self.pos) {
                return Err(self.unexpected_closer(self.pos, Some(Closer::Tok(closer))));
            }
            nodes.extend(self.member()?);
        }
    }

    fn member_inner(&mut self) -> PResult<Vec<AstNode>> {
        let start = self.pos;
        if self.eat_op(";") {
            return Ok(Vec::new());
        }
        self.skip_attribute()?;
        self.eat_item_label();
        let kind = self.kind(self.pos).ok_or(Fail::Soft)?;
        let text = self.text(self.pos);
        match kind {
            TokenKind::Keyword => match text {
                "module" | "macromodule" => Ok(vec![self.module()?]),
                "generate" => {
                    let at = self.toks[self.pos].start;
                    self.pos += 1;
                    Ok(self.items_until("endgenerate", at)?)
                }
                "begin" => self.generate_begin(),
                "for" => self.generate_for(start),
                "if" => self.generate_if(start),
                "case" => self.generate_case(start),
                "assign" => self.continuous_assign(start),
                "always_ff" => self.always(start, NodeKind::AlwaysFfBlock),
                "always_comb" => self.always(start, NodeKind::AlwaysCombBlock),
                "always" | "always_latch" => self.always(start, NodeKind::AlwaysBlock),
                "initial" | "final" => self.always(start, NodeKind::OtherMember),
                "default" | "global" if self.is_kw(self.pos + 1, "clocking") => {
                    self.pos += 1;
                    self.other_member(start)
                }
                _ if DATA_KEYWORDS.contains(&text) => self.data_declaration(start),
                _ if OTHER_SEMICOLON_ITEMS.contains(&text) => self.other_member(start),
                _ if self.opener_at(self.pos).is_some() => self.other_member(start),
                _ => Err(Fail::Soft),
            },
            TokenKind::MacroRef => Ok(vec![self.macro_use(start, NodeKind::OtherMember)?]),
            TokenKind::SystemIdent => self.other_member(start),
            TokenKind::Ident => self.ident_member(start),
            _ => Err(Fail::Soft),
        }
    }

    fn skip_attribute(&mut self) -> PResult<()> {
        if self.at_op("(") && self.is_op(self.pos + 1, "*") {
            let j = self.find_depth0(self.pos + 1, |p, i| p.is_op(i, "*") && p.is_op(i + 1, ")"))?;
            self.pos = j + 2;
        }
        Ok(())
    }

    fn other_member(&mut self, start: usize) -> PResult<Vec<AstNode>> {
        let mut children = Vec::new();
        if self.opener_at(self.pos).is_some() {
            self.skip_group(&mut children)?;
            self.eat_label();
        } else {
            self.skip_to_semicolon(&mut children)?;
        }
        Ok(vec![AstNode::with_children(
            NodeKind::OtherMember,
            self.span(start, self.pos),
            children,
        )])
    }

    fn data_declaration(&mut self, start: usize) -> PResult<Vec<AstNode>> {
        let semi = self.find_semicolon()?;
        let mut children = Vec::new();
        for k in self.pos..semi {
            self.lexical_ternary(k, &mut children);
        }
        self.pos = semi + 1;
        Ok(vec![AstNode::with_children(
            NodeKind::DataDeclaration,
            self.span(start, self.pos),
            children,
        )])
    }

    fn macro_use(&mut self, start: usize, kind: NodeKind) -> PResult<AstNode> {
        let mac = self.toks[self.pos];
        self.pos += 1;
        let mut children = Vec::new();
        if self.at_op("(") && self.toks[self.pos].start == mac.end {
            self.skip_group(&mut children)?;
        }
        self.eat_op(";");
        Ok(AstNode::with_children(kind, self.span(start, self.pos), children))
    }

    fn module(&mut self) -> PResult<AstNode> {
        let start = self.pos;
        let opened_at = self.toks[start].start;
        self.pos += 1;
        let mut children = Vec::new();
        // Header: optional lifetime, name, package imports, parameters, ports.
        self.eat_kw("static");
        self.eat_kw("automatic");
        if !self.is_ident(self.pos) {
            return Err(Fail::Soft);
        }
        self.pos += 1;
        while self.at_kw("import") {
            self.skip_to_semicolon(&mut Vec::new())?;
        }
        let semi = self.find_semicolon()?;
        self.ternaries_in_header(self.pos, semi, &mut children);
        self.pos = semi + 1;
        children.extend(self.items_until("endmodule", opened_at)?);
        Ok(AstNode::with_children(
            NodeKind::ModuleDeclaration,
            self.span(start, self.pos),
            children,
        ))
    }

    /// Parameter and port lists: each parenthesized group is a comma list.
    fn ternaries_in_header(&self, lo: usize, hi: usize, out: &mut Vec<AstNode>) {
        let mut i = lo;
        while i < hi {
            if self.is_op(i, "(") {
                if let Some(j) = self.matching_bracket(i, hi) {
                    self.ternaries_in(i + 1, j, out);
                    i = j + 1;
                    continue;
                }
            }
            self.lexical_ternary(i, out);
            i += 1;
        }
    }

    fn generate_begin(&mut self) -> PResult<Vec<AstNode>> {
        let at = self.toks[self.pos].start;
        self.pos += 1;
        self.eat_label();
        Ok(self.items_until("end", at)?)
    }

    /// A generate body: a `begin`/`end` block (optionally labelled) or one item.
    fn generate_block(&mut self) -> PResult<Vec<AstNode>> {
        self.eat_item_label();
        if self.at_kw("begin") {
            return self.generate_begin();
        }
        if self.pos >= self.toks.len() || self.is_closer(self.pos) {
            return Err(Fail::Soft);
        }
        Ok(self.member()?)
    }

    fn paren_region(&mut self, out: &mut Vec<AstNode>) -> PResult<()> {
        if !self.at_op("(") {
            return Err(Fail::Soft);
        }
        let close = self.matching_bracket(self.pos, self.toks.len()).ok_or(Fail::Soft)?;
        self.ternaries_in(self.pos + 1, close, out);
        self.pos = close + 1;
        Ok(())
    }

    fn generate_for(&mut self, start: usize) -> PResult<Vec<AstNode>> {
        self.pos += 1;
        let mut children = Vec::new();
        if !self.at_op("(") {
            return Err(Fail::Soft);
        }
        let close = self.matching_bracket(self.pos, self.toks.len()).ok_or(Fail::Soft)?;
        for k in self.pos..close {
            self.lexical_ternary(k, &mut children);
        }
        self.pos = close + 1;
        children.extend(self.generate_block()?);
        Ok(vec![AstNode::with_children(
            NodeKind::GenerateConstruct,
            self.span(start, self.pos),
            children,
        )])
    }

    fn generate_if(&mut self, start: usize) -> PResult<Vec<AstNode>> {
        self.pos += 1;
        let mut children = Vec::new();
        self.paren_region(&mut children)?;
        children.extend(self.generate_block()?);
        if self.eat_kw("else") {
            children.extend(self.generate_block()?);
        }
        Ok(vec![AstNode::with_children(
            NodeKind::GenerateConstruct,
            self.span(start, self.pos),
            children,
        )])
    }

    fn generate_case(&mut self, start: usize) -> PResult<Vec<AstNode>> {
        let opened_at = self.toks[self.pos].start;
        self.pos += 1;
        let mut children = Vec::new();
        self.paren_region(&mut children)?;
        loop {
            if self.pos >= self.toks.len() {
                return Err(Fail::Hard(self.eof_error("endcase", opened_at)));
            }
            if self.eat_kw("endcase") {
                break;
            }
            self.case_label(&mut children)?;
            children.extend(self.generate_block()?);
        }
        Ok(vec![AstNode::with_children(
            NodeKind::GenerateConstruct,
            self.span(start, self.pos),
            children,
        )])
    }

    /// `default [:]` or an expression list terminated by `:`. A `:` that
    /// belongs to a conditional operator inside the label does not end it.
    fn case_label(&mut self, out: &mut Vec<AstNode>) -> PResult<()> {
        if self.eat_kw("default") {
            self.eat_op(":");
            return Ok(());
        }
        let mut depth = 0usize;
        let mut pending = 0usize;
        let mut i = self.pos;
        let end = loop {
            match self.kind(i) {
                None => return Err(Fail::Soft),
                Some(TokenKind::Op) => match self.text(i) {
                    "(" | "[" | "{" | "'{" => depth += 1,
                    ")" | "]" | "}" => depth = depth.checked_sub(1).ok_or(Fail::Soft)?,
                    "?" if depth == 0 => pending += 1,
                    ":" if depth == 0 => {
                        if pending == 0 {
                            break i;
                        }
                        pending -= 1;
                    }
                    ";" if depth == 0 => return Err(Fail::Soft),
                    _ => {}
                },
                Some(TokenKind::Keyword) if self.is_closer(i) || self.opener_at(i).is_some() => return Err(Fail::Soft),
                _ => {}
            }
            i += 1;
        };
        self.ternaries_in(self.pos, end, out);
        self.pos = end + 1;
        Ok(())
    }

    fn continuous_assign(&mut self, start: usize) -> PResult<Vec<AstNode>> {
        self.pos += 1;
        // Drive strength and delay.
        if self.at_op("(") {
            self.pos = self.matching_bracket(self.pos, self.toks.len()).ok_or(Fail::Soft)? + 1;
        }
        if self.eat_op("#") {
            self.skip_delay_value()?;
        }
        let semi = self.find_semicolon()?;
        let mut children = Vec::new();
        // Each `lhs = rhs` is one comma-separated item.
        let mut item_start = self.pos;
        let mut i = self.pos;
        while i <= semi {
            if i == semi || self.is_op(i, ",") {
                let eq = (item_start..i).find(|&k| self.is_op(k, "=")).ok_or(Fail::Soft)?;
                self.ternaries_in(item_start, eq, &mut children);
                self.ternaries_in(eq + 1, i, &mut children);
                item_start = i + 1;
                i += 1;
                continue;
            }
            if self.opener_at(i).is_some() && self.kind(i) == Some(TokenKind::Op) {
                i = self.matching_bracket(i, semi).ok_or(Fail::Soft)? + 1;
                continue;
            }
            i += 1;
        }
        self.pos = semi + 1;
        Ok(vec![AstNode::with_children(
            NodeKind::ContinuousAssign,
            self.span(start, self.pos),
            children,
        )])
    }

    fn skip_delay_value(&mut self) -> PResult<()> {
        if self.at_op("(") {
            self.pos = self.matching_bracket(self.pos, self.toks.len()).ok_or(Fail::Soft)? + 1;
        } else if self.pos < self.toks.len() {
            self.pos += 1;
        }
        Ok(())
    }

    fn always(&mut self, start: usize, kind: NodeKind) -> PResult<Vec<AstNode>> {
        self.pos += 1;
        let children = self.statement()?;
        Ok(vec![AstNode::with_children(kind, self.span(start, self.pos), children)])
    }

    fn ident_member(&mut self, start: usize) -> PResult<Vec<AstNode>> {
        let next = self.pos + 1;
        if self.is_op(next, "::") {
            return self.data_declaration(start);
        }
        if self.is_op(next, "#") {
            return self.instantiation(start);
        }
        if self.is_ident(next) {
            let mut k = next + 1;
            while self.is_op(k, "[") {
                k = self.matching_bracket(k, self.toks.len()).ok_or(Fail::Soft)? + 1;
            }
            if self.is_op(k, "(") {
                return self.instantiation(start);
            }
            return self.data_declaration(start);
        }
        if self.is_op(next, "[") {
            let mut k = next;
            while self.is_op(k, "[") {
                k = self.matching_bracket(k, self.toks.len()).ok_or(Fail::Soft)? + 1;
            }
            if self.is_ident(k) {
                return self.data_declaration(start);
            }
        }
        Err(Fail::Soft)
    }

    fn instantiation(&mut self, start: usize) -> PResult<Vec<AstNode>> {
        self.pos += 1;
        let mut children = Vec::new();
        if self.eat_op("#") {
            self.paren_region(&mut children)?;
        }
        loop {
            if !self.is_ident(self.pos) {
                return Err(Fail::Soft);
            }
            self.pos += 1;
            while self.at_op("[") {
                let close = self.matching_bracket(self.pos, self.toks.len()).ok_or(Fail::Soft)?;
                self.ternaries_in(self.pos + 1, close, &mut children);
                self.pos = close + 1;
            }
            self.paren_region(&mut children)?;
            if self.eat_op(",") {
                continue;
            }
            self.expect_op(";")?;
            break;
        }
        Ok(vec![AstNode::with_children(
            NodeKind::HierarchyInstantiation,
            self.span(start, self.pos),
            children,
        )])
    }

    // ----- statements -----------------------------------------------------

    /// One procedural statement. `begin`/`end` and timing controls are
    /// transparent, so this may yield zero or several nodes.
    fn statement(&mut self) -> PResult<Vec<AstNode>> {
        if self.pos >= self.toks.len() || self.is_closer(self.pos) {
            return Err(Fail::Soft);
        }
        let save = self.pos;
        match self.statement_inner() {
            Ok(nodes) => Ok(nodes),
            Err(Fail::Hard(e)) => Err(Fail::Hard(e)),
            Err(Fail::Soft) => {
                self.pos = save;
                Ok(self.recover(NodeKind::OtherStatement)?)
            }
        }
    }

    fn statements_until(&mut self, closer: Closer, opened_at: usize) -> PResult<Vec<AstNode>> {
        let mut nodes = Vec::new();
        loop {
            if self.pos >= self.toks.len() {
                return Err(Fail::Hard(self.eof_error(closer.describe(), opened_at)));
            }
            if self.closes(self.pos, closer) {
                return Ok(nodes);
            }
            if self.is_closer(self.pos) {
                return Err(Fail::Hard(self.unexpected_closer(self.pos, Some(closer))));
            }
            nodes.extend(self.statement()?);
        }
    }

    fn statement_inner(&mut self) -> PResult<Vec<AstNode>> {
        if self.eat_op(";") {
            return Ok(Vec::new());
        }
        self.skip_attribute()?;
        self.eat_item_label();
        let start = self.pos;
        let kind = self.kind(self.pos).ok_or(Fail::Soft)?;
        let text = self.text(self.pos);
        match kind {
            TokenKind::Keyword => match text {
                "begin" => {
                    let at = self.toks[self.pos].start;
                    self.pos += 1;
                    self.eat_label();
                    let nodes = self.statements_until(Closer::Tok("end"), at)?;
                    self.pos += 1;
                    self.eat_label();
                    Ok(nodes)
                }
                "fork" => {
                    let at = self.toks[self.pos].start;
                    self.pos += 1;
                    self.eat_label();
                    let nodes = self.statements_until(Closer::Join, at)?;
                    self.pos += 1;
                    self.eat_label();
                    Ok(vec![self.node(NodeKind::OtherStatement, start, nodes)])
                }
                "unique" | "unique0" | "priority" => {
                    self.pos += 1;
                    if self.at_kw("if") {
                        self.if_statement(start)
                    } else if self.at_kw("case") || self.at_kw("casez") || self.at_kw("casex") {
                        self.case_statement(start)
                    } else {
                        Err(Fail::Soft)
                    }
                }
                "if" => self.if_statement(start),
                "case" | "casez" | "casex" | "randcase" => self.case_statement(start),
                "for" | "foreach" | "while" | "repeat" => {
                    self.pos += 1;
                    let mut children = Vec::new();
                    if !self.at_op("(") {
                        return Err(Fail::Soft);
                    }
                    let close = self.matching_bracket(self.pos, self.toks.len()).ok_or(Fail::Soft)?;
                    for k in self.pos..close {
                        self.lexical_ternary(k, &mut children);
                    }
                    self.pos = close + 1;
                    children.extend(self.statement()?);
                    Ok(vec![self.node(NodeKind::OtherStatement, start, children)])
                }
                "forever" => {
                    self.pos += 1;
                    let children = self.statement()?;
                    Ok(vec![self.node(NodeKind::OtherStatement, start, children)])
                }
                "do" => {
                    self.pos += 1;
                    let mut children = self.statement()?;
                    if !self.eat_kw("while") {
                        return Err(Fail::Soft);
                    }
                    self.paren_region(&mut children)?;
                    self.expect_op(";")?;
                    Ok(vec![self.node(NodeKind::OtherStatement, start, children)])
                }
                "assert" | "assume" | "cover" if self.is_op(self.pos + 1, "(") => {
                    self.pos += 1;
                    let mut children = Vec::new();
                    self.paren_region(&mut children)?;
                    if !self.eat_op(";") {
                        if !self.at_kw("else") {
                            children.extend(self.statement()?);
                        }
                        if self.eat_kw("else") {
                            children.extend(self.statement()?);
                        }
                    }
                    Ok(vec![self.node(NodeKind::OtherStatement, start, children)])
                }
                _ if DATA_KEYWORDS.contains(&text) => self.data_declaration(start),
                "else" => Err(Fail::Soft),
                _ => {
                    let mut children = Vec::new();
                    self.skip_to_semicolon(&mut children)?;
                    Ok(vec![self.node(NodeKind::OtherStatement, start, children)])
                }
            },
            TokenKind::Op => match text {
                "@" => {
                    self.pos += 1;
                    if self.at_op("(") {
                        self.pos = self.matching_bracket(self.pos, self.toks.len()).ok_or(Fail::Soft)? + 1;
                    } else if !self.eat_op("*") {
                        // @event_name or @hier.event
                        if !self.is_ident(self.pos) {
                            return Err(Fail::Soft);
                        }
                        self.pos += 1;
                        while self.at_op(".") && self.is_ident(self.pos + 1) {
                            self.pos += 2;
                        }
                    }
                    self.statement()
                }
                "#" | "##" => {
                    self.pos += 1;
                    self.skip_delay_value()?;
                    self.statement()
                }
                "{" => self.assignment_like(start),
                _ => Err(Fail::Soft),
            },
            TokenKind::MacroRef => Ok(vec![self.macro_use(start, NodeKind::OtherStatement)?]),
            TokenKind::Ident | TokenKind::SystemIdent => self.assignment_like(start),
            _ => Err(Fail::Soft),
        }
    }

    fn node(&self, kind: NodeKind, start: usize, children: Vec<AstNode>) -> AstNode {
        AstNode::with_children(kind, self.span(start, self.pos), children)
    }

    fn if_statement(&mut self, start: usize) -> PResult<Vec<AstNode>> {
        self.pos += 1; // `if`
        let mut children = Vec::new();
        self.paren_region(&mut children)?;
        if !self.at_kw("else") {
            children.extend(self.statement()?);
        }
        if self.eat_kw("else") {
            children.extend(self.statement()?);
        }
        Ok(vec![self.node(NodeKind::ConditionalStatement, start, children)])
    }

    fn case_statement(&mut self, start: usize) -> PResult<Vec<AstNode>> {
        let opened_at = self.toks[self.pos].start;
        let randcase = self.at_kw("randcase");
        self.pos += 1;
        let mut children = Vec::new();
        if !randcase {
            self.paren_region(&mut children)?;
            if !self.eat_kw("inside") {
                self.eat_kw("matches");
            }
        }
        loop {
            if self.pos >= self.toks.len() {
                return Err(Fail::Hard(self.eof_error("endcase", opened_at)));
            }
            if self.eat_kw("endcase") {
                break;
            }
            if self.is_closer(self.pos) {
                return Err(Fail::Hard(
                    self.unexpected_closer(self.pos, Some(Closer::Tok("endcase"))),
                ));
            }
            self.case_label(&mut children)?;
            children.extend(self.statement()?);
        }
        Ok(vec![self.node(NodeKind::CaseStatement, start, children)])
    }

    /// Assignments, declarations with a user-defined type, and subroutine calls.
    fn assignment_like(&mut self, start: usize) -> PResult<Vec<AstNode>> {
        let semi = self.find_semicolon()?;
        let op = self.find_depth0(self.pos, |p, i| {
            i == semi || (p.kind(i) == Some(TokenKind::Op) && ASSIGN_OPS.contains(&p.text(i)))
        })?;
        let mut children = Vec::new();
        if op < semi {
            match self.classify_target(start, op) {
                Target::Lvalue => {
                    let kind = if self.is_op(op, "<=") {
                        NodeKind::NonBlockingAssignment
                    } else {
                        NodeKind::BlockingAssignment
                    };
                    self.ternaries_in(start, op, &mut children);
                    let mut rhs = op + 1;
                    // Intra-assignment timing control.
                    if self.is_op(rhs, "#") || self.is_op(rhs, "@") {
                        rhs += 1;
                        rhs = if self.is_op(rhs, "(") {
                            self.matching_bracket(rhs, semi).ok_or(Fail::Soft)? + 1
                        } else {
                            rhs + 1
                        };
                    }
                    self.ternaries_in(rhs.min(semi), semi, &mut children);
                    self.pos = semi + 1;
                    return Ok(vec![self.node(kind, start, children)]);
                }
                Target::Declaration => return self.data_declaration(start),
                Target::Other => {}
            }
        } else if self.classify_target(start, semi) == Target::Declaration {
            return self.data_declaration(start);
        }
        self.ternaries_in(start, semi, &mut children);
        self.pos = semi + 1;
        Ok(vec![self.node(NodeKind::OtherStatement, start, children)])
    }

    fn classify_target(&self, lo: usize, hi: usize) -> Target {
        if lo >= hi {
            return Target::Other;
        }
        if self.is_op(lo, "{") {
            return match self.matching_bracket(lo, hi) {
                Some(j) if j + 1 == hi => Target::Lvalue,
                _ => Target::Other,
            };
        }
        if !(self.is_ident(lo) || self.is_kw(lo, "this") || self.is_kw(lo, "super")) {
            return Target::Other;
        }
        let mut i = lo + 1;
        let mut prev_atom = true;
        while i < hi {
            if self.is_op(i, ".") || self.is_op(i, "::") {
                if !(self.is_ident(i + 1) || self.kind(i + 1) == Some(TokenKind::Keyword)) {
                    return Target::Other;
                }
                i += 2;
                prev_atom = true;
            } else if self.is_op(i, "[") {
                match self.matching_bracket(i, hi) {
                    Some(j) => i = j + 1,
                    None => return Target::Other,
                }
                prev_atom = true;
            } else if self.is_op(i, "#") && self.is_op(i + 1, "(") {
                // Parameterized type: only a declaration can look like this.
                match self.matching_bracket(i + 1, hi) {
                    Some(j) => i = j + 1,
                    None => return Target::Other,
                }
            } else if self.is_ident(i) && prev_atom {
                return Target::Declaration;
            } else {
                return Target::Other;
            }
        }
        Target::Lvalue
    }
}

#[derive(Debug, PartialEq, Eq)]
enum Target {
    Lvalue,
    Declaration,
    Other,
}

/// Precedence-climbing expression parser over a bounded token window. It
/// exists to find the extent of each `?:` so nested conditionals nest.
struct ExprParser<'p, 'a> {
    p: &'p Parser<'a>,
    pos: usize,
    hi: usize,
}

type EResult = Result<(), ()>;

impl ExprParser<'_, '_> {
    fn at_op(&self, op: &str) -> bool {
        self.pos < self.hi && self.p.is_op(self.pos, op)
    }

    fn at_kw(&self, kw: &str) -> bool {
        self.pos < self.hi && self.p.is_kw(self.pos, kw)
    }

    /// A list item: `.name(expr)`, `.name`, `.*`, `expr`, `expr : expr`,
    /// `expr +: expr`, or a replication `expr {..}`.
    fn item(&mut self, out: &mut Vec<AstNode>) -> EResult {
        if self.at_op(".*") {
            self.pos += 1;
            return Ok(());
        }
        if self.at_op(".") {
            self.pos += 1;
            if self.pos >= self.hi || !matches!(self.p.kind(self.pos), Some(TokenKind::Ident | TokenKind::Keyword)) {
                return Err(());
            }
            self.pos += 1;
            if self.at_op("(") {
                self.group(out)?;
            }
            return Ok(());
        }
        self.expr(out)?;
        if self.at_op("{") {
            self.group(out)?;
        }
        if self.at_op(":") || self.at_op("+:") || self.at_op("-:") {
            self.pos += 1;
            self.expr(out)?;
        }
        Ok(())
    }

    fn expr(&mut self, out: &mut Vec<AstNode>) -> EResult {
        self.conditional(out)?;
        while self.at_op("->") || self.at_op("<->") {
            self.pos += 1;
            self.conditional(out)?;
        }
        Ok(())
    }

    fn conditional(&mut self, out: &mut Vec<AstNode>) -> EResult {
        let start = self.pos;
        let mut inner = Vec::new();
        self.binary(1, &mut inner)?;
        if self.at_op("?") {
            self.pos += 1;
            self.conditional(&mut inner)?;
            if !self.at_op(":") {
                return Err(());
            }
            self.pos += 1;
            self.conditional(&mut inner)?;
            out.push(AstNode::with_children(
                NodeKind::ConditionalExpression,
                self.p.span(start, self.pos),
                inner,
            ));
        } else {
            out.extend(inner);
        }
        Ok(())
    }

    fn binary(&mut self, min_prec: u8, out: &mut Vec<AstNode>) -> EResult {
        self.unary(out)?;
        while self.pos < self.hi {
            let kind = self.p.kind(self.pos).ok_or(())?;
            let Some(prec) = binary_precedence(self.p.text(self.pos), kind) else {
                break;
            };
            if prec < min_prec {
                break;
            }
            let is_set_op = kind == TokenKind::Keyword;
            self.pos += 1;
            if is_set_op {
                if !self.at_op("{") {
                    return Err(());
                }
                self.group(out)?;
            } else {
                self.binary(prec + 1, out)?;
            }
        }
        Ok(())
    }

    fn unary(&mut self, out: &mut Vec<AstNode>) -> EResult {
        while self.pos < self.hi
            && self.p.kind(self.pos) == Some(TokenKind::Op)
            && UNARY_OPS.contains(&self.p.text(self.pos))
        {
            self.pos += 1;
        }
        self.primary(out)?;
        if self.at_op("++") || self.at_op("--") {
            self.pos += 1;
        }
        Ok(())
    }

    /// Consumes a bracketed group and recurses into its contents as a list.
    fn group(&mut self, out: &mut Vec<AstNode>) -> EResult {
        let close = self.p.matching_bracket(self.pos, self.hi).ok_or(())?;
        self.p.ternaries_in(self.pos + 1, close, out);
        self.pos = close + 1;
        Ok(())
    }

    fn primary(&mut self, out: &mut Vec<AstNode>) -> EResult {
        if self.pos >= self.hi {
            return Err(());
        }
        let kind = self.p.kind(self.pos).ok_or(())?;
        let text = self.p.text(self.pos);
        match kind {
            TokenKind::Number | TokenKind::StringLit => self.pos += 1,
            TokenKind::Op => match text {
                "(" | "{" | "'{" => self.group(out)?,
                "$" => self.pos += 1,
                _ => return Err(()),
            },
            TokenKind::MacroRef => {
                let end = self.p.toks[self.pos].end;
                self.pos += 1;
                if self.at_op("(") && self.p.toks[self.pos].start == end {
                    self.group(out)?;
                }
            }
            TokenKind::Ident | TokenKind::SystemIdent => self.pos += 1,
            TokenKind::Keyword if TYPE_KEYWORDS_IN_EXPR.contains(&text) => self.pos += 1,
            TokenKind::Keyword => return Err(()),
        }
        self.postfix(out)
    }

    fn postfix(&mut self, out: &mut Vec<AstNode>) -> EResult {
        loop {
            if self.at_op("::") || self.at_op(".") {
                self.pos += 1;
                if self.pos >= self.hi || !matches!(self.p.kind(self.pos), Some(TokenKind::Ident | TokenKind::Keyword))
                {
                    return Err(());
                }
                self.pos += 1;
            } else if self.at_op("[") || self.at_op("(") {
                self.group(out)?;
            } else if self.at_op("'") {
                self.pos += 1;
                if !(self.at_op("(") || self.at_op("{") || self.at_op("'{")) {
                    return Err(());
                }
                self.group(out)?;
            } else if self.at_op("#") && self.pos + 1 < self.hi && self.p.is_op(self.pos + 1, "(") {
                self.pos += 1;
                self.group(out)?;
            } else if self.at_kw("with") {
                self.pos += 1;
                if !(self.at_op("(") || self.at_op("[") || self.at_op("{")) {
                    return Err(());
                }
                self.group(out)?;
            } else {
                return Ok(());
            }
        }
    }
}
