//! Tokenizer for the SystemVerilog subset.
//!
//! Comments and whitespace are dropped here. Compiler directives are handled
//! textually: `` `define `` and friends swallow the rest of their line, while
//! conditional-compilation directives are removed and every branch is kept.

use super::SvParseError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Ident,
    Keyword,
    SystemIdent,
    MacroRef,
    Number,
    StringLit,
    Op,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Default)]
pub struct Lexed {
    pub tokens: Vec<Token>,
    /// Set when `ifdef`-style directives were stripped.
    pub conditional_directives: bool,
}

const OPS: &[&str] = &[
    "<<<=", ">>>=", "===", "!==", "==?", "!=?", "<<<", ">>>", "<<=", ">>=", "<->", "|->", "|=>", "->>", "==", "!=",
    "<=", ">=", "&&", "||", "<<", ">>", "->", "::", "+:", "-:", "**", "++", "--", "+=", "-=", "*=", "/=", "%=", "&=",
    "|=", "^=", "~&", "~|", "~^", "^~", "##", ".*", ":=", ":/", "'{", "+", "-", "*", "/", "%", "&", "|", "^", "~", "!",
    "<", ">", "=", "?", ":", ";", ",", ".", "(", ")", "[", "]", "{", "}", "#", "@", "'", "$",
];

const KEYWORDS: &[&str] = &[
    "alias",
    "always",
    "always_comb",
    "always_ff",
    "always_latch",
    "and",
    "assert",
    "assign",
    "assume",
    "automatic",
    "before",
    "begin",
    "bind",
    "bins",
    "binsof",
    "bit",
    "break",
    "buf",
    "bufif0",
    "bufif1",
    "byte",
    "case",
    "casex",
    "casez",
    "cell",
    "chandle",
    "checker",
    "class",
    "clocking",
    "cmos",
    "config",
    "const",
    "constraint",
    "context",
    "continue",
    "cover",
    "covergroup",
    "coverpoint",
    "cross",
    "deassign",
    "default",
    "defparam",
    "design",
    "disable",
    "dist",
    "do",
    "edge",
    "else",
    "end",
    "endcase",
    "endchecker",
    "endclass",
    "endclocking",
    "endconfig",
    "endfunction",
    "endgenerate",
    "endgroup",
    "endinterface",
    "endmodule",
    "endpackage",
    "endprimitive",
    "endprogram",
    "endproperty",
    "endsequence",
    "endspecify",
    "endtable",
    "endtask",
    "enum",
    "event",
    "eventually",
    "expect",
    "export",
    "extends",
    "extern",
    "final",
    "first_match",
    "for",
    "force",
    "foreach",
    "forever",
    "fork",
    "forkjoin",
    "function",
    "generate",
    "genvar",
    "global",
    "highz0",
    "highz1",
    "if",
    "iff",
    "ifnone",
    "ignore_bins",
    "illegal_bins",
    "implements",
    "implies",
    "import",
    "incdir",
    "include",
    "initial",
    "inout",
    "input",
    "inside",
    "instance",
    "int",
    "integer",
    "interconnect",
    "interface",
    "intersect",
    "join",
    "join_any",
    "join_none",
    "large",
    "let",
    "liblist",
    "library",
    "local",
    "localparam",
    "logic",
    "longint",
    "macromodule",
    "matches",
    "medium",
    "modport",
    "module",
    "nand",
    "negedge",
    "nettype",
    "new",
    "nexttime",
    "nmos",
    "nor",
    "noshowcancelled",
    "not",
    "notif0",
    "notif1",
    "null",
    "or",
    "output",
    "package",
    "packed",
    "parameter",
    "pmos",
    "posedge",
    "primitive",
    "priority",
    "program",
    "property",
    "protected",
    "pull0",
    "pull1",
    "pulldown",
    "pullup",
    "pulsestyle_ondetect",
    "pulsestyle_onevent",
    "pure",
    "rand",
    "randc",
    "randcase",
    "randsequence",
    "rcmos",
    "real",
    "realtime",
    "ref",
    "reg",
    "reject_on",
    "release",
    "repeat",
    "restrict",
    "return",
    "rnmos",
    "rpmos",
    "rtran",
    "rtranif0",
    "rtranif1",
    "s_always",
    "s_eventually",
    "s_nexttime",
    "s_until",
    "s_until_with",
    "scalared",
    "sequence",
    "shortint",
    "shortreal",
    "showcancelled",
    "signed",
    "small",
    "soft",
    "solve",
    "specify",
    "specparam",
    "static",
    "string",
    "strong",
    "strong0",
    "strong1",
    "struct",
    "super",
    "supply0",
    "supply1",
    "sync_accept_on",
    "sync_reject_on",
    "table",
    "tagged",
    "task",
    "this",
    "throughout",
    "time",
    "timeprecision",
    "timeunit",
    "tran",
    "tranif0",
    "tranif1",
    "tri",
    "tri0",
    "tri1",
    "triand",
    "trior",
    "trireg",
    "type",
    "typedef",
    "union",
    "unique",
    "unique0",
    "unsigned",
    "until",
    "until_with",
    "untyped",
    "use",
    "uwire",
    "var",
    "vectored",
    "virtual",
    "void",
    "wait",
    "wait_order",
    "wand",
    "weak",
    "weak0",
    "weak1",
    "while",
    "wildcard",
    "wire",
    "with",
    "within",
    "wor",
    "xnor",
    "xor",
];

/// Directives whose whole line is discarded.
const LINE_DIRECTIVES: &[&str] = &[
    "define",
    "undef",
    "undefineall",
    "include",
    "timescale",
    "default_nettype",
    "resetall",
    "celldefine",
    "endcelldefine",
    "pragma",
    "line",
    "begin_keywords",
    "end_keywords",
    "unconnected_drive",
    "nounconnected_drive",
];

pub fn is_keyword(word: &str) -> bool {
    KEYWORDS.binary_search(&word).is_ok()
}

fn is_ident_start(b: u8) -> bool {
    b.is_ascii_alphabetic() || b == b'_'
}

fn is_ident_char(b: u8) -> bool {
    b.is_ascii_alphanumeric() || b == b'_' || b == b'$'
}

fn is_base_char(b: u8) -> bool {
    matches!(b.to_ascii_lowercase(), b'b' | b'o' | b'd' | b'h')
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    out: Lexed,
}

pub fn lex(src: &str) -> Result<Lexed, SvParseError> {
    let mut lexer = Lexer {
        src: src.as_bytes(),
        pos: 0,
        out: Lexed::default(),
    };
    lexer.run()?;
    Ok(lexer.out)
}

impl<'a> Lexer<'a> {
    fn peek(&self, ahead: usize) -> Option<u8> {
        self.src.get(self.pos + ahead).copied()
    }

    fn push(&mut self, kind: TokenKind, start: usize) {
        self.out.tokens.push(Token {
            kind,
            start,
            end: self.pos,
        });
    }

    fn run(&mut self) -> Result<(), SvParseError> {
        while let Some(b) = self.peek(0) {
            let start = self.pos;
            match b {
                b' ' | b'\t' | b'\n' | b'\r' | 0x0b | 0x0c => self.pos += 1,
                b'/' if self.peek(1) == Some(b'/') => self.skip_line(),
                b'/' if self.peek(1) == Some(b'*') => self.skip_block_comment()?,
                b'"' => {
                    self.string_literal()?;
                    self.push(TokenKind::StringLit, start);
                }
                b'\\' => {
                    self.pos += 1;
                    while let Some(c) = self.peek(0) {
                        if c.is_ascii_whitespace() {
                            break;
                        }
                        if !c.is_ascii_graphic() {
                            return Err(SvParseError::Lex {
                                offset: self.pos,
                                message: "illegal character in escaped identifier".into(),
                            });
                        }
                        self.pos += 1;
                    }
                    self.push(TokenKind::Ident, start);
                }
                b'`' => self.directive()?,
                b'$' if self.peek(1).is_some_and(is_ident_start) => {
                    self.pos += 1;
                    self.eat_ident_chars();
                    self.push(TokenKind::SystemIdent, start);
                }
                b'0'..=b'9' => {
                    self.number();
                    self.push(TokenKind::Number, start);
                }
                b'\'' => {
                    if self.unsized_literal() {
                        self.push(TokenKind::Number, start);
                    } else {
                        self.operator(start)?;
                    }
                }
                _ if is_ident_start(b) => {
                    self.eat_ident_chars();
                    let word = self.text(start);
                    let kind = if is_keyword(word) {
                        TokenKind::Keyword
                    } else {
                        TokenKind::Ident
                    };
                    self.push(kind, start);
                }
                _ => self.operator(start)?,
            }
        }
        Ok(())
    }

    fn text(&self, start: usize) -> &'a str {
        // Only ASCII spans are ever sliced here.
        std::str::from_utf8(&self.src[start..self.pos]).unwrap_or("")
    }

    fn eat_ident_chars(&mut self) {
        while self.peek(0).is_some_and(is_ident_char) {
            self.pos += 1;
        }
    }

    fn skip_line(&mut self) {
        while let Some(b) = self.peek(0) {
            if b == b'\n' {
                break;
            }
            self.pos += 1;
        }
    }

    fn skip_block_comment(&mut self) -> Result<(), SvParseError> {
        let start = self.pos;
        self.pos += 2;
        loop {
            match self.peek(0) {
                None => {
                    return Err(SvParseError::Lex {
                        offset: start,
                        message: "unterminated block comment".into(),
                    })
                }
                Some(b'*') if self.peek(1) == Some(b'/') => {
                    self.pos += 2;
                    return Ok(());
                }
                Some(_) => self.pos += 1,
            }
        }
    }

    fn string_literal(&mut self) -> Result<(), SvParseError> {
        let start = self.pos;
        self.pos += 1;
        loop {
            match self.peek(0) {
                None | Some(b'\n') => {
                    return Err(SvParseError::Lex {
                        offset: start,
                        message: "unterminated string literal".into(),
                    })
                }
                Some(b'\\') => self.pos += 2,
                Some(b'"') => {
                    self.pos += 1;
                    return Ok(());
                }
                Some(_) => self.pos += 1,
            }
        }
    }

    /// Handles a backtick. Known directives vanish; anything else is a macro use.
    fn directive(&mut self) -> Result<(), SvParseError> {
        let start = self.pos;
        self.pos += 1;
        if !self.peek(0).is_some_and(is_ident_start) {
            return Err(SvParseError::Lex {
                offset: start,
                message: "stray backtick".into(),
            });
        }
        let name_start = self.pos;
        self.eat_ident_chars();
        let name = self.text(name_start);
        if LINE_DIRECTIVES.contains(&name) {
            // `define bodies may continue across lines with a trailing backslash.
            loop {
                match self.peek(0) {
                    None | Some(b'\n') => break,
                    Some(b'\\') if self.peek(1) == Some(b'\n') => self.pos += 2,
                    Some(b'\\') if self.peek(1) == Some(b'\r') && self.peek(2) == Some(b'\n') => self.pos += 3,
                    Some(_) => self.pos += 1,
                }
            }
            return Ok(());
        }
        match name {
            "ifdef" | "ifndef" | "elsif" => {
                self.out.conditional_directives = true;
                while matches!(self.peek(0), Some(b' ' | b'\t')) {
                    self.pos += 1;
                }
                self.eat_ident_chars();
            }
            "else" | "endif" => self.out.conditional_directives = true,
            _ => self.push(TokenKind::MacroRef, start),
        }
        Ok(())
    }

    fn number(&mut self) {
        self.decimal_digits();
        let mut is_real = false;
        if self.peek(0) == Some(b'.') && self.peek(1).is_some_and(|b| b.is_ascii_digit()) {
            self.pos += 1;
            self.decimal_digits();
            is_real = true;
        }
        if matches!(self.peek(0), Some(b'e' | b'E'))
            && (self.peek(1).is_some_and(|b| b.is_ascii_digit())
                || (matches!(self.peek(1), Some(b'+' | b'-')) && self.peek(2).is_some_and(|b| b.is_ascii_digit())))
        {
            self.pos += 2;
            self.decimal_digits();
            is_real = true;
        }
        if !is_real && self.based_suffix() {
            return;
        }
        // Time literal units such as 10ns.
        for unit in ["ms", "us", "ns", "ps", "fs", "s"] {
            let bytes = unit.as_bytes();
            if self.src[self.pos..].starts_with(bytes)
                && !self.src.get(self.pos + bytes.len()).copied().is_some_and(is_ident_char)
            {
                self.pos += bytes.len();
                return;
            }
        }
    }

    fn decimal_digits(&mut self) {
        while self.peek(0).is_some_and(|b| b.is_ascii_digit() || b == b'_') {
            self.pos += 1;
        }
    }

    /// After a size, try to absorb `'[s]<base> digits`.
    fn based_suffix(&mut self) -> bool {
        let save = self.pos;
        while matches!(self.peek(0), Some(b' ' | b'\t')) {
            self.pos += 1;
        }
        if self.peek(0) == Some(b'\'') && self.based_tail() {
            return true;
        }
        self.pos = save;
        false
    }

    /// At a `'`: `'[sS]<base>` followed by value digits.
    fn based_tail(&mut self) -> bool {
        let mut ahead = 1;
        if matches!(self.peek(ahead), Some(b's' | b'S')) {
            ahead += 1;
        }
        if !self.peek(ahead).is_some_and(is_base_char) {
            return false;
        }
        self.pos += ahead + 1;
        while matches!(self.peek(0), Some(b' ' | b'\t')) {
            self.pos += 1;
        }
        while self
            .peek(0)
            .is_some_and(|b| b.is_ascii_hexdigit() || matches!(b, b'_' | b'x' | b'X' | b'z' | b'Z' | b'?'))
        {
            self.pos += 1;
        }
        true
    }

    /// `'0`, `'1`, `'x`, `'z` and unsized based literals like `'hFF`.
    fn unsized_literal(&mut self) -> bool {
        if self.based_tail() {
            return true;
        }
        if matches!(self.peek(1), Some(b'0' | b'1' | b'x' | b'X' | b'z' | b'Z'))
            && !self.peek(2).is_some_and(is_ident_char)
        {
            self.pos += 2;
            return true;
        }
        false
    }

    fn operator(&mut self, start: usize) -> Result<(), SvParseError> {
        let rest = &self.src[self.pos..];
        match OPS.iter().find(|op| rest.starts_with(op.as_bytes())) {
            Some(op) => {
                self.pos += op.len();
                self.push(TokenKind::Op, start);
                Ok(())
            }
            None => Err(SvParseError::Lex {
                offset: start,
                message: format!("illegal character {:?}", self.char_at(start)),
            }),
        }
    }

    fn char_at(&self, offset: usize) -> char {
        std::str::from_utf8(&self.src[offset..])
            .ok()
            .and_then(|s| s.chars().next())
            .unwrap_or('\u{fffd}')
    }
}
