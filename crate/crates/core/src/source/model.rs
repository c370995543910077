use std::collections::BTreeSet;
use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use super::lexer::{tokenize, Token, TokenKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Modifier {
    Public,
    Private,
    Protected,
    Static,
    Final,
    Synchronized,
    Abstract,
}

impl Modifier {
    fn from_keyword(word: &str) -> Option<Self> {
        Some(match word {
            "public" => Modifier::Public,
            "private" => Modifier::Private,
            "protected" => Modifier::Protected,
            "static" => Modifier::Static,
            "final" => Modifier::Final,
            "synchronized" => Modifier::Synchronized,
            "abstract" => Modifier::Abstract,
            _ => return None,
        })
    }

    pub fn is_visibility(self) -> bool {
        matches!(self, Modifier::Public | Modifier::Private | Modifier::Protected)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Modifier::Public => "public",
            Modifier::Private => "private",
            Modifier::Protected => "protected",
            Modifier::Static => "static",
            Modifier::Final => "final",
            Modifier::Synchronized => "synchronized",
            Modifier::Abstract => "abstract",
        }
    }
}

impl fmt::Display for Modifier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Modifier keywords that are legal on members but carry no meaning for the
/// predicates.
const IGNORED_MODIFIERS: &[&str] = &["native", "transient", "volatile", "strictfp", "default"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemberKind {
    Constructor,
    Field,
    Method,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemberModel {
    pub member_kind: MemberKind,
    pub name: String,
    /// Simple type name with generics and qualifiers stripped; array
    /// dimensions are kept as `[]` suffixes. Empty for constructors.
    pub declared_type: String,
    pub modifiers: BTreeSet<Modifier>,
    pub nesting_depth: u32,
}

impl MemberModel {
    pub fn has(&self, modifier: Modifier) -> bool {
        self.modifiers.contains(&modifier)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassModel {
    pub class_name: String,
    /// Modifiers written before `class` (e.g. `public final`).
    pub modifiers: BTreeSet<Modifier>,
    pub members: Vec<MemberModel>,
    pub is_top_level: bool,
    pub source_span: Range<usize>,
}

impl ClassModel {
    pub fn constructors(&self) -> impl Iterator<Item = &MemberModel> {
        self.members_of(MemberKind::Constructor)
    }

    pub fn fields(&self) -> impl Iterator<Item = &MemberModel> {
        self.members_of(MemberKind::Field)
    }

    pub fn methods(&self) -> impl Iterator<Item = &MemberModel> {
        self.members_of(MemberKind::Method)
    }

    fn members_of(&self, kind: MemberKind) -> impl Iterator<Item = &MemberModel> {
        self.members.iter().filter(move |m| m.member_kind == kind)
    }
}

/// Extraction result plus the warnings collected along the way.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ParsedUnit {
    pub classes: Vec<ClassModel>,
    pub warnings: Vec<String>,
}

/// Extracts one [`ClassModel`] per top-level `class` declaration, in source
/// order. Total: malformed input yields whatever could be recovered.
pub fn parse_compilation_unit(source: &str) -> Vec<ClassModel> {
    parse_with_diagnostics(source).classes
}

pub fn parse_with_diagnostics(source: &str) -> ParsedUnit {
    let tokens = tokenize(source);
    let mut parser = Parser { tokens: &tokens, pos: 0, warnings: Vec::new(), partial: None };
    let classes = parser.compilation_unit();
    ParsedUnit { classes, warnings: parser.warnings }
}

/// Name match first, then the first top-level class.
pub fn select_primary_class<'a>(classes: &'a [ClassModel], expected_name: Option<&str>) -> Option<&'a ClassModel> {
    expected_name
        .and_then(|name| classes.iter().find(|c| c.class_name == name))
        .or_else(|| classes.iter().find(|c| c.is_top_level))
}

struct Parser<'t> {
    tokens: &'t [Token],
    pos: usize,
    warnings: Vec<String>,
    /// A class whose body ran off the end of the input.
    partial: Option<ClassModel>,
}

/// Raised when a block never closes; nothing after it can be trusted.
struct Unbalanced;

impl<'t> Parser<'t> {
    fn peek(&self) -> Option<&'t Token> {
        self.tokens.get(self.pos)
    }

    fn peek_at(&self, ahead: usize) -> Option<&'t Token> {
        self.tokens.get(self.pos + ahead)
    }

    fn at_punct(&self, p: &str) -> bool {
        self.peek().is_some_and(|t| t.is_punct(p))
    }

    fn compilation_unit(&mut self) -> Vec<ClassModel> {
        let mut classes = Vec::new();
        while let Some(tok) = self.peek() {
            if tok.is_punct("}") {
                self.warnings.push(format!("unbalanced '}}' at offset {}; ignoring the rest of the input", tok.offset));
                break;
            }
            if tok.is_punct("{") {
                if self.skip_balanced("{", "}").is_err() {
                    self.warn_unbalanced(tok.offset);
                    break;
                }
                continue;
            }
            let after_dot = self.pos > 0 && self.tokens[self.pos - 1].is_punct(".");
            if tok.is_keyword("class") && !after_dot {
                match self.class_declaration() {
                    Ok(Some(class)) => classes.push(class),
                    Ok(None) => self.pos += 1,
                    Err(Unbalanced) => break,
                }
                continue;
            }
            if self.at_other_type_declaration() {
                let start = self.pos;
                match self.skip_type_declaration() {
                    Ok(true) => {}
                    Ok(false) => self.pos = start + 1,
                    Err(Unbalanced) => {
                        self.warn_unbalanced(tok.offset);
                        break;
                    }
                }
                continue;
            }
            self.pos += 1;
        }
        if let Some(partial) = self.partial.take() {
            classes.push(partial);
        }
        classes
    }

    fn warn_unbalanced(&mut self, offset: usize) {
        self.warnings
            .push(format!("block opened near offset {offset} is never closed; ignoring the rest of the input"));
    }

    /// `interface`, `enum`, `record Name(`, or `@interface` at the cursor.
    fn at_other_type_declaration(&self) -> bool {
        let Some(tok) = self.peek() else { return false };
        if tok.is_keyword("interface") || tok.is_keyword("enum") {
            return true;
        }
        if tok.is_punct("@") && self.peek_at(1).is_some_and(|t| t.is_keyword("interface")) {
            return true;
        }
        tok.kind == TokenKind::Identifier
            && tok.text == "record"
            && self.peek_at(1).is_some_and(Token::is_ident)
            && self.peek_at(2).is_some_and(|t| t.is_punct("(") || t.is_punct("<"))
    }

    /// Skips a non-class type declaration. Returns false (cursor unchanged
    /// semantics left to caller) when no body brace follows the header.
    fn skip_type_declaration(&mut self) -> Result<bool, Unbalanced> {
        while let Some(tok) = self.peek() {
            if tok.is_punct("{") {
                self.skip_balanced("{", "}")?;
                return Ok(true);
            }
            if tok.is_punct("(") {
                self.skip_balanced("(", ")")?;
                continue;
            }
            if tok.is_punct(";") || tok.is_punct("}") {
                return Ok(false);
            }
            self.pos += 1;
        }
        Ok(false)
    }

    /// Cursor at `class`. Returns `Ok(None)` when the header does not look like
    /// a declaration (e.g. prose such as "this class implements").
    fn class_declaration(&mut self) -> Result<Option<ClassModel>, Unbalanced> {
        let class_idx = self.pos;
        let Some(name_tok) = self.peek_at(1).filter(|t| t.is_ident()) else {
            return Ok(None);
        };
        let name = name_tok.text.clone();
        let saved = self.pos;
        self.pos += 2;
        if !self.class_header_to_body() {
            self.pos = saved;
            return Ok(None);
        }
        let (span_start, class_modifiers) = self.declaration_start(class_idx);
        // cursor is on '{'
        self.pos += 1;
        let mut members = Vec::new();
        let closed = self.class_body(&name, &mut members);
        let span_end = match closed {
            Some(close_offset) => close_offset + 1,
            None => self.tokens.last().map_or(span_start, |t| t.offset + t.text.chars().count()),
        };
        let class = ClassModel {
            class_name: name,
            modifiers: class_modifiers,
            members,
            is_top_level: true,
            source_span: span_start..span_end,
        };
        if closed.is_none() {
            self.warnings.push(format!(
                "class '{}' body is never closed; members were collected up to the end of input",
                class.class_name
            ));
            self.partial = Some(class);
            return Err(Unbalanced);
        }
        Ok(Some(class))
    }

    /// Offset of the first modifier keyword before `class`, and the modifiers.
    fn declaration_start(&self, class_idx: usize) -> (usize, BTreeSet<Modifier>) {
        let mut idx = class_idx;
        let mut modifiers = BTreeSet::new();
        while idx > 0 {
            let prev = &self.tokens[idx - 1];
            if prev.kind != TokenKind::Keyword {
                break;
            }
            match Modifier::from_keyword(&prev.text) {
                Some(m) => {
                    modifiers.insert(m);
                }
                None if prev.text == "strictfp" => {}
                None => break,
            }
            idx -= 1;
        }
        (self.tokens[idx].offset, modifiers)
    }

    /// Walks `<T> extends A<B> implements C, D permits E` up to `{`.
    fn class_header_to_body(&mut self) -> bool {
        let mut expecting_types = false;
        while let Some(tok) = self.peek() {
            if tok.is_punct("{") {
                return true;
            }
            if tok.is_punct("<") {
                if !self.skip_angles() {
                    return false;
                }
                continue;
            }
            if tok.is_keyword("extends") || tok.is_keyword("implements") || (tok.is_ident() && tok.text == "permits") {
                expecting_types = true;
                self.pos += 1;
                continue;
            }
            if expecting_types && (tok.is_ident() || tok.is_punct(".") || tok.is_punct(",")) {
                self.pos += 1;
                continue;
            }
            return false;
        }
        false
    }

    /// Skips a balanced `<...>` group. Fails on tokens that cannot appear in
    /// type arguments.
    fn skip_angles(&mut self) -> bool {
        let mut depth = 0usize;
        while let Some(tok) = self.peek() {
            if tok.kind == TokenKind::Punctuation {
                match tok.text.as_str() {
                    "<" => depth += 1,
                    ">" => {
                        depth -= 1;
                        if depth == 0 {
                            self.pos += 1;
                            return true;
                        }
                    }
                    "," | "." | "?" | "&" | "[" | "]" | "@" => {}
                    _ => return false,
                }
            } else if tok.kind == TokenKind::Literal {
                return false;
            }
            self.pos += 1;
        }
        false
    }

    /// Cursor at `open`. Leaves cursor after the matching `close`.
    fn skip_balanced(&mut self, open: &str, close: &str) -> Result<(), Unbalanced> {
        let mut depth = 0usize;
        while let Some(tok) = self.peek() {
            if tok.is_punct(open) {
                depth += 1;
            } else if tok.is_punct(close) {
                depth -= 1;
                if depth == 0 {
                    self.pos += 1;
                    return Ok(());
                }
            }
            self.pos += 1;
        }
        Err(Unbalanced)
    }

    /// Parses members until the closing brace. Returns the offset of that brace,
    /// or `None` when input ends first.
    fn class_body(&mut self, class_name: &str, members: &mut Vec<MemberModel>) -> Option<usize> {
        loop {
            let tok = self.peek()?;
            if tok.is_punct("}") {
                self.pos += 1;
                return Some(tok.offset);
            }
            if tok.is_punct(";") {
                self.pos += 1;
                continue;
            }
            if self.member(class_name, members).is_err() {
                return None;
            }
        }
    }

    fn modifiers(&mut self) -> BTreeSet<Modifier> {
        let mut mods = BTreeSet::new();
        while let Some(tok) = self.peek() {
            if tok.kind == TokenKind::Keyword {
                if let Some(m) = Modifier::from_keyword(&tok.text) {
                    if m.is_visibility() && mods.iter().any(|x: &Modifier| x.is_visibility()) {
                        self.warnings
                            .push(format!("conflicting visibility '{}' at offset {} ignored", tok.text, tok.offset));
                    } else {
                        mods.insert(m);
                    }
                    self.pos += 1;
                    continue;
                }
                if IGNORED_MODIFIERS.contains(&tok.text.as_str()) {
                    self.pos += 1;
                    continue;
                }
                break;
            }
            if tok.is_ident() && tok.text == "sealed" {
                self.pos += 1;
                continue;
            }
            if tok.is_ident()
                && tok.text == "non"
                && self.peek_at(1).is_some_and(|t| t.is_punct("-"))
                && self.peek_at(2).is_some_and(|t| t.text == "sealed")
            {
                self.pos += 3;
                continue;
            }
            if tok.is_punct("@") && !self.peek_at(1).is_some_and(|t| t.is_keyword("interface")) {
                self.skip_annotation();
                continue;
            }
            break;
        }
        mods
    }

    fn skip_annotation(&mut self) {
        self.pos += 1;
        while self.peek().is_some_and(Token::is_ident) {
            self.pos += 1;
            if self.at_punct(".") && self.peek_at(1).is_some_and(Token::is_ident) {
                self.pos += 1;
            } else {
                break;
            }
        }
        if self.at_punct("(") {
            // an unclosed annotation argument list falls through to the
            // member-level imbalance handling
            let _ = self.skip_balanced("(", ")");
        }
    }

    fn member(&mut self, class_name: &str, members: &mut Vec<MemberModel>) -> Result<(), Unbalanced> {
        let modifiers = self.modifiers();
        let Some(tok) = self.peek() else { return Err(Unbalanced) };

        if tok.is_punct("{") {
            return self.skip_balanced("{", "}");
        }
        if tok.is_keyword("class") || self.at_other_type_declaration() {
            let start = self.pos;
            if !self.skip_type_declaration()? {
                self.pos = start + 1;
            }
            return Ok(());
        }
        if tok.is_punct("<") && !self.skip_angles() {
            return self.recover();
        }

        let Some(tok) = self.peek() else { return Err(Unbalanced) };
        if tok.is_ident() && tok.text == class_name && self.peek_at(1).is_some_and(|t| t.is_punct("(")) {
            self.pos += 1;
            self.skip_balanced("(", ")")?;
            self.skip_method_tail()?;
            members.push(MemberModel {
                member_kind: MemberKind::Constructor,
                name: class_name.to_string(),
                declared_type: String::new(),
                modifiers,
                nesting_depth: 1,
            });
            return Ok(());
        }

        let Some(base_type) = self.type_name() else {
            return self.recover();
        };
        let Some(name_tok) = self.peek().filter(|t| t.is_ident()) else {
            return self.recover();
        };
        self.pos += 1;

        if self.at_punct("(") {
            self.skip_balanced("(", ")")?;
            let dims = self.array_dims();
            self.skip_method_tail()?;
            members.push(MemberModel {
                member_kind: MemberKind::Method,
                name: name_tok.text.clone(),
                declared_type: format!("{base_type}{dims}"),
                modifiers,
                nesting_depth: 1,
            });
            return Ok(());
        }

        let mut name = name_tok.text.clone();
        loop {
            let dims = self.array_dims();
            members.push(MemberModel {
                member_kind: MemberKind::Field,
                name,
                declared_type: format!("{base_type}{dims}"),
                modifiers: modifiers.clone(),
                nesting_depth: 1,
            });
            if self.at_punct("=") {
                self.pos += 1;
                self.skip_initializer()?;
            }
            match self.peek() {
                Some(t) if t.is_punct(";") => {
                    self.pos += 1;
                    return Ok(());
                }
                Some(t) if t.is_punct(",") && self.peek_at(1).is_some_and(Token::is_ident) => {
                    name = self.tokens[self.pos + 1].text.clone();
                    self.pos += 2;
                }
                Some(_) => return self.recover(),
                None => return Err(Unbalanced),
            }
        }
    }

    /// Reads a (possibly qualified, possibly generic) type and returns its
    /// simple name without type arguments. Array dimensions are appended.
    fn type_name(&mut self) -> Option<String> {
        let tok = self.peek()?;
        let primitive = tok.kind == TokenKind::Keyword
            && matches!(
                tok.text.as_str(),
                "void" | "boolean" | "byte" | "char" | "short" | "int" | "long" | "float" | "double"
            );
        if !(tok.is_ident() || primitive) {
            return None;
        }
        let mut last = tok.text.clone();
        self.pos += 1;
        loop {
            if self.at_punct("<") && !self.skip_angles() {
                return None;
            }
            if self.at_punct(".") && self.peek_at(1).is_some_and(Token::is_ident) {
                last = self.tokens[self.pos + 1].text.clone();
                self.pos += 2;
                continue;
            }
            break;
        }
        let dims = self.array_dims();
        Some(format!("{last}{dims}"))
    }

    fn array_dims(&mut self) -> String {
        let mut dims = String::new();
        while self.at_punct("[") && self.peek_at(1).is_some_and(|t| t.is_punct("]")) {
            dims.push_str("[]");
            self.pos += 2;
        }
        dims
    }

    /// After a parameter list: optional `throws ...`, then a body or `;`.
    fn skip_method_tail(&mut self) -> Result<(), Unbalanced> {
        while let Some(tok) = self.peek() {
            if tok.is_punct("{") {
                return self.skip_balanced("{", "}");
            }
            if tok.is_punct(";") {
                self.pos += 1;
                return Ok(());
            }
            if tok.is_punct("}") {
                return Ok(());
            }
            if tok.is_punct("(") {
                self.skip_balanced("(", ")")?;
                continue;
            }
            self.pos += 1;
        }
        Err(Unbalanced)
    }

    /// Skips a field initializer up to the `,` that starts the next declarator
    /// or the terminating `;` (cursor left on it).
    fn skip_initializer(&mut self) -> Result<(), Unbalanced> {
        while let Some(tok) = self.peek() {
            if tok.kind == TokenKind::Punctuation {
                match tok.text.as_str() {
                    "(" => {
                        self.skip_balanced("(", ")")?;
                        continue;
                    }
                    "{" => {
                        self.skip_balanced("{", "}")?;
                        continue;
                    }
                    "[" => {
                        self.skip_balanced("[", "]")?;
                        continue;
                    }
                    ";" | "}" => return Ok(()),
                    "," if self.starts_declarator(self.pos + 1) => return Ok(()),
                    _ => {}
                }
            }
            self.pos += 1;
        }
        Err(Unbalanced)
    }

    fn starts_declarator(&self, idx: usize) -> bool {
        let is_ident = self.tokens.get(idx).is_some_and(Token::is_ident);
        let follow = self
            .tokens
            .get(idx + 1)
            .is_some_and(|t| t.is_punct("=") || t.is_punct(",") || t.is_punct(";") || t.is_punct("["));
        is_ident && follow
    }

    /// Skips an unrecognised member: through the next `;` or balanced block,
    /// stopping before a closing brace.
    fn recover(&mut self) -> Result<(), Unbalanced> {
        let start = self.pos;
        while let Some(tok) = self.peek() {
            if tok.is_punct(";") {
                self.pos += 1;
                break;
            }
            if tok.is_punct("{") {
                self.skip_balanced("{", "}")?;
                break;
            }
            if tok.is_punct("(") {
                self.skip_balanced("(", ")")?;
                continue;
            }
            if tok.is_punct("}") {
                break;
            }
            self.pos += 1;
        }
        if let Some(tok) = self.tokens.get(start) {
            self.warnings.push(format!("skipped unrecognised member text at offset {}", tok.offset));
        }
        if self.pos == start {
            if self.peek().is_none() {
                return Err(Unbalanced);
            }
            if !self.at_punct("}") {
                self.pos += 1;
            }
        }
        Ok(())
    }
}
