//! Parser for the `.tk` input format describing finite groups and lattice
//! actions.
//!
//! The grammar is line oriented; `#` starts a comment.
//!
//! ```text
//! spec      := stmt*
//! stmt      := groupdef | actiondef | setting
//! groupdef  := "group" NAME "=" ("cyclic(" INT ")" | "table(" rows ")")
//! rows      := row (";" row)*        row := INT ("," INT)*
//! actiondef := "action" NAME "=" ("free_product(" NAME ("," NAME)+ ")"
//!            | "amalgam(" NAME "," NAME "," "over" "=" NAME ","
//!                         "embed1" "=" intmap "," "embed2" "=" intmap ")")
//! setting   := "set" ("tree_model" "=" ("edge" | "star") | "k" "=" INT)
//! intmap    := "[" INT "->" INT ("," INT "->" INT)* "]"
//! ```

use std::fmt;

use crate::group::{Embedding, FiniteGroup};
use crate::tree::LatticeAction;

/// A UTF-8 source with a display name for diagnostics.
#[derive(Debug, Clone)]
pub struct SpecSource {
    pub name: String,
    pub text: String,
}

impl SpecSource {
    pub fn new(name: impl Into<String>, text: impl Into<String>) -> SpecSource {
        SpecSource {
            name: name.into(),
            text: text.into(),
        }
    }

    pub fn from_bytes(name: impl Into<String>, bytes: Vec<u8>) -> Result<SpecSource, Diagnostic> {
        let name = name.into();
        match String::from_utf8(bytes) {
            Ok(text) => Ok(SpecSource { name, text }),
            Err(e) => {
                let upto = &e.as_bytes()[..e.utf8_error().valid_up_to()];
                let line = upto.iter().filter(|&&b| b == b'\n').count() + 1;
                Err(Diagnostic {
                    source: name,
                    line,
                    col: 1,
                    message: "source is not valid UTF-8".to_string(),
                    expected: Vec::new(),
                })
            }
        }
    }
}

/// A positioned parse or semantic error. Line and column are 1-based
/// character positions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub source: String,
    pub line: usize,
    pub col: usize,
    pub message: String,
    pub expected: Vec<String>,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}: error: {}", self.source, self.line, self.col, self.message)?;
        if !self.expected.is_empty() {
            write!(f, " (expected {})", self.expected.join(" | "))?;
        }
        Ok(())
    }
}

impl std::error::Error for Diagnostic {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Span {
    pub line: usize,
    pub col: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TreeModelChoice {
    Edge,
    Star,
}

impl TreeModelChoice {
    pub fn name(self) -> &'static str {
        match self {
            TreeModelChoice::Edge => "edge",
            TreeModelChoice::Star => "star",
        }
    }
}

/// Optional pipeline settings from `set` statements.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Settings {
    pub tree_model: Option<TreeModelChoice>,
    pub k: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GroupDefKind {
    Cyclic(u64),
    Table(Vec<Vec<usize>>),
}

#[derive(Debug, Clone)]
pub struct GroupDef {
    pub name: String,
    pub kind: GroupDefKind,
    pub span: Span,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ActionDefKind {
    FreeProduct(Vec<String>),
    Amalgam {
        left: String,
        right: String,
        over: String,
        embed_left: Vec<(usize, usize)>,
        embed_right: Vec<(usize, usize)>,
    },
}

#[derive(Debug, Clone)]
pub struct ActionDef {
    pub name: String,
    pub kind: ActionDefKind,
    pub span: Span,
}

/// Parsed and semantically resolved input: named groups, exactly one action,
/// optional settings.
#[derive(Debug, Clone)]
pub struct SpecAst {
    pub groups: Vec<GroupDef>,
    pub action: ActionDef,
    pub settings: Settings,
}

impl SpecAst {
    pub fn group(&self, name: &str) -> Option<&GroupDef> {
        self.groups.iter().find(|g| g.name == name)
    }

    /// Canonical re-emission of the AST in the input grammar.
    pub fn to_source(&self) -> String {
        let mut out = String::new();
        for g in &self.groups {
            match &g.kind {
                GroupDefKind::Cyclic(n) => out.push_str(&format!("group {} = cyclic({})\n", g.name, n)),
                GroupDefKind::Table(rows) => {
                    let rows: Vec<String> = rows
                        .iter()
                        .map(|r| r.iter().map(usize::to_string).collect::<Vec<_>>().join(", "))
                        .collect();
                    out.push_str(&format!("group {} = table({})\n", g.name, rows.join("; ")));
                }
            }
        }
        match &self.action.kind {
            ActionDefKind::FreeProduct(names) => {
                out.push_str(&format!("action {} = free_product({})\n", self.action.name, names.join(", ")));
            }
            ActionDefKind::Amalgam {
                left,
                right,
                over,
                embed_left,
                embed_right,
            } => {
                let map = |m: &[(usize, usize)]| {
                    m.iter().map(|(a, b)| format!("{a} -> {b}")).collect::<Vec<_>>().join(", ")
                };
                out.push_str(&format!(
                    "action {} = amalgam({}, {}, over = {}, embed1 = [{}], embed2 = [{}])\n",
                    self.action.name,
                    left,
                    right,
                    over,
                    map(embed_left),
                    map(embed_right)
                ));
            }
        }
        if let Some(tm) = self.settings.tree_model {
            out.push_str(&format!("set tree_model = {}\n", tm.name()));
        }
        if let Some(k) = self.settings.k {
            out.push_str(&format!("set k = {k}\n"));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(u64),
    Sym(char),
    Arrow,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("'{s}'"),
            Tok::Int(n) => format!("integer {n}"),
            Tok::Sym(c) => format!("'{c}'"),
            Tok::Arrow => "'->'".to_string(),
        }
    }
}

struct Line {
    no: usize,
    toks: Vec<(Tok, usize)>,
    end_col: usize,
}

fn lex_line(source: &str, line_no: usize, line: &str) -> Result<Line, Diagnostic> {
    let mut toks = Vec::new();
    let chars: Vec<char> = line.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let col = i + 1;
        if c == '#' {
            break;
        }
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        if c.is_ascii_digit() {
            let start = i;
            while i < chars.len() && chars[i].is_ascii_digit() {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            let n: u64 = text.parse().map_err(|_| Diagnostic {
                source: source.to_string(),
                line: line_no,
                col,
                message: format!("integer literal '{text}' is too large"),
                expected: Vec::new(),
            })?;
            toks.push((Tok::Int(n), col));
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            toks.push((Tok::Ident(chars[start..i].iter().collect()), col));
            continue;
        }
        if c == '-' && chars.get(i + 1) == Some(&'>') {
            toks.push((Tok::Arrow, col));
            i += 2;
            continue;
        }
        if "()[],;=".contains(c) {
            toks.push((Tok::Sym(c), col));
            i += 1;
            continue;
        }
        return Err(Diagnostic {
            source: source.to_string(),
            line: line_no,
            col,
            message: format!("unexpected character '{c}'"),
            expected: Vec::new(),
        });
    }
    Ok(Line {
        no: line_no,
        toks,
        end_col: chars.len() + 1,
    })
}

struct Cursor<'a> {
    source: &'a str,
    line: &'a Line,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(source: &'a str, line: &'a Line) -> Cursor<'a> {
        Cursor {
            source,
            line,
            pos: 0,
        }
    }

    fn here(&self) -> Span {
        let col = self
            .line
            .toks
            .get(self.pos)
            .map(|(_, c)| *c)
            .unwrap_or(self.line.end_col);
        Span {
            line: self.line.no,
            col,
        }
    }

    fn err(&self, message: impl Into<String>, expected: &[&str]) -> Diagnostic {
        let span = self.here();
        Diagnostic {
            source: self.source.to_string(),
            line: span.line,
            col: span.col,
            message: message.into(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn peek(&self) -> Option<&Tok> {
        self.line.toks.get(self.pos).map(|(t, _)| t)
    }

    fn found(&self) -> String {
        match self.peek() {
            Some(t) => t.describe(),
            None => "end of line".to_string(),
        }
    }

    fn expect_sym(&mut self, c: char) -> Result<(), Diagnostic> {
        match self.peek() {
            Some(Tok::Sym(s)) if *s == c => {
                self.pos += 1;
                Ok(())
            }
            _ => {
                let sym = c.to_string();
                Err(self.err(format!("expected '{c}', found {}", self.found()), &[&sym]))
            }
        }
    }

    fn expect_arrow(&mut self) -> Result<(), Diagnostic> {
        match self.peek() {
            Some(Tok::Arrow) => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.err(format!("expected '->', found {}", self.found()), &["->"])),
        }
    }

    fn expect_int(&mut self) -> Result<u64, Diagnostic> {
        match self.peek() {
            Some(Tok::Int(n)) => {
                let n = *n;
                self.pos += 1;
                Ok(n)
            }
            _ => Err(self.err(format!("expected an integer, found {}", self.found()), &["INT"])),
        }
    }

    fn expect_name(&mut self) -> Result<(String, Span), Diagnostic> {
        let span = self.here();
        match self.peek() {
            Some(Tok::Ident(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok((s, span))
            }
            _ => Err(self.err(format!("expected a name, found {}", self.found()), &["NAME"])),
        }
    }

    fn expect_keyword(&mut self, kw: &str) -> Result<(), Diagnostic> {
        match self.peek() {
            Some(Tok::Ident(s)) if s == kw => {
                self.pos += 1;
                Ok(())
            }
            _ => Err(self.err(format!("expected '{kw}', found {}", self.found()), &[kw])),
        }
    }

    fn expect_end(&mut self) -> Result<(), Diagnostic> {
        if self.peek().is_some() {
            Err(self.err(format!("expected end of line, found {}", self.found()), &["end of line"]))
        } else {
            Ok(())
        }
    }
}

enum Stmt {
    Group(GroupDef),
    Action(ActionDef),
    SetTreeModel(TreeModelChoice, Span),
    SetK(u64, Span),
}

fn parse_stmt(cur: &mut Cursor) -> Result<Stmt, Diagnostic> {
    match cur.peek() {
        Some(Tok::Ident(kw)) if kw == "group" => {
            cur.pos += 1;
            let (name, span) = cur.expect_name()?;
            cur.expect_sym('=')?;
            let (ctor, _) = cur.expect_name()?;
            let kind = match ctor.as_str() {
                "cyclic" => {
                    cur.expect_sym('(')?;
                    let n = cur.expect_int()?;
                    cur.expect_sym(')')?;
                    GroupDefKind::Cyclic(n)
                }
                "table" => {
                    cur.expect_sym('(')?;
                    let mut rows = Vec::new();
                    loop {
                        let mut row = vec![cur.expect_int()? as usize];
                        while matches!(cur.peek(), Some(Tok::Sym(','))) {
                            cur.pos += 1;
                            row.push(cur.expect_int()? as usize);
                        }
                        rows.push(row);
                        match cur.peek() {
                            Some(Tok::Sym(';')) => {
                                cur.pos += 1;
                            }
                            Some(Tok::Sym(')')) => {
                                cur.pos += 1;
                                break;
                            }
                            _ => {
                                return Err(cur.err(
                                    format!("expected ';' or ')', found {}", cur.found()),
                                    &[";", ")"],
                                ))
                            }
                        }
                    }
                    GroupDefKind::Table(rows)
                }
                other => {
                    return Err(cur.err(
                        format!("unknown group constructor '{other}'"),
                        &["cyclic", "table"],
                    ));
                }
            };
            cur.expect_end()?;
            Ok(Stmt::Group(GroupDef { name, kind, span }))
        }
        Some(Tok::Ident(kw)) if kw == "action" => {
            cur.pos += 1;
            let (name, span) = cur.expect_name()?;
            cur.expect_sym('=')?;
            let (ctor, _) = cur.expect_name()?;
            let kind = match ctor.as_str() {
                "free_product" => {
                    cur.expect_sym('(')?;
                    let mut names = vec![cur.expect_name()?.0];
                    while matches!(cur.peek(), Some(Tok::Sym(','))) {
                        cur.pos += 1;
                        names.push(cur.expect_name()?.0);
                    }
                    cur.expect_sym(')')?;
                    ActionDefKind::FreeProduct(names)
                }
                "amalgam" => {
                    cur.expect_sym('(')?;
                    let left = cur.expect_name()?.0;
                    cur.expect_sym(',')?;
                    let right = cur.expect_name()?.0;
                    cur.expect_sym(',')?;
                    cur.expect_keyword("over")?;
                    cur.expect_sym('=')?;
                    let over = cur.expect_name()?.0;
                    cur.expect_sym(',')?;
                    cur.expect_keyword("embed1")?;
                    cur.expect_sym('=')?;
                    let embed_left = parse_intmap(cur)?;
                    cur.expect_sym(',')?;
                    cur.expect_keyword("embed2")?;
                    cur.expect_sym('=')?;
                    let embed_right = parse_intmap(cur)?;
                    cur.expect_sym(')')?;
                    ActionDefKind::Amalgam {
                        left,
                        right,
                        over,
                        embed_left,
                        embed_right,
                    }
                }
                other => {
                    return Err(cur.err(
                        format!("unknown action constructor '{other}'"),
                        &["free_product", "amalgam"],
                    ))
                }
            };
            cur.expect_end()?;
            Ok(Stmt::Action(ActionDef { name, kind, span }))
        }
        Some(Tok::Ident(kw)) if kw == "set" => {
            cur.pos += 1;
            let span = cur.here();
            let (key, _) = cur.expect_name()?;
            cur.expect_sym('=')?;
            match key.as_str() {
                "tree_model" => {
                    let (value, _) = cur.expect_name()?;
                    let choice = match value.as_str() {
                        "edge" => TreeModelChoice::Edge,
                        "star" => TreeModelChoice::Star,
                        other => {
                            return Err(cur.err(
                                format!("unknown tree model '{other}'"),
                                &["edge", "star"],
                            ))
                        }
                    };
                    cur.expect_end()?;
                    Ok(Stmt::SetTreeModel(choice, span))
                }
                "k" => {
                    let k = cur.expect_int()?;
                    cur.expect_end()?;
                    Ok(Stmt::SetK(k, span))
                }
                other => Err(cur.err(format!("unknown setting '{other}'"), &["tree_model", "k"])),
            }
        }
        _ => Err(cur.err(
            format!("expected a statement, found {}", cur.found()),
            &["group", "action", "set"],
        )),
    }
}

fn parse_intmap(cur: &mut Cursor) -> Result<Vec<(usize, usize)>, Diagnostic> {
    cur.expect_sym('[')?;
    let mut map = Vec::new();
    let a = cur.expect_int()? as usize;
    cur.expect_arrow()?;
    let b = cur.expect_int()? as usize;
    map.push((a, b));
    while matches!(cur.peek(), Some(Tok::Sym(','))) {
        cur.pos += 1;
        let a = cur.expect_int()? as usize;
        cur.expect_arrow()?;
        let b = cur.expect_int()? as usize;
        map.push((a, b));
    }
    cur.expect_sym(']')?;
    Ok(map)
}

fn semantic_error(src: &SpecSource, span: Span, message: String) -> Diagnostic {
    Diagnostic {
        source: src.name.clone(),
        line: span.line,
        col: span.col,
        message,
        expected: Vec::new(),
    }
}

/// Parses a source into an AST, checking name resolution, uniqueness and
/// arity. The first error is returned with its position.
pub fn parse_spec(src: &SpecSource) -> Result<SpecAst, Diagnostic> {
    let mut groups: Vec<GroupDef> = Vec::new();
    let mut action: Option<ActionDef> = None;
    let mut settings = Settings::default();
    let mut seen_tree_model = false;
    let mut seen_k = false;

    let mut last_line = 1;
    for (idx, raw) in src.text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let line = lex_line(&src.name, line_no, raw)?;
        if line.toks.is_empty() {
            continue;
        }
        let mut cur = Cursor::new(&src.name, &line);
        match parse_stmt(&mut cur)? {
            Stmt::Group(def) => {
                if groups.iter().any(|g| g.name == def.name) {
                    return Err(semantic_error(
                        src,
                        def.span,
                        format!("duplicate definition of group '{}'", def.name),
                    ));
                }
                groups.push(def);
            }
            Stmt::Action(def) => {
                if let Some(prev) = &action {
                    return Err(semantic_error(
                        src,
                        def.span,
                        format!("a spec defines exactly one action; '{}' is already defined", prev.name),
                    ));
                }
                let mut issues = Vec::new();
                let referenced: Vec<&String> = match &def.kind {
                    ActionDefKind::FreeProduct(names) => {
                        if names.len() < 2 {
                            issues.push(format!("free_product needs at least 2 factors, got {}", names.len()));
                        }
                        names.iter().collect()
                    }
                    ActionDefKind::Amalgam {
                        left, right, over, ..
                    } => vec![left, right, over],
                };
                for name in referenced {
                    if !groups.iter().any(|g| g.name == *name) {
                        issues.push(format!("undefined name '{name}'"));
                    }
                }
                if !issues.is_empty() {
                    return Err(semantic_error(src, def.span, issues.join("; ")));
                }
                action = Some(def);
            }
            Stmt::SetTreeModel(choice, span) => {
                if seen_tree_model {
                    return Err(semantic_error(src, span, "duplicate setting 'tree_model'".to_string()));
                }
                seen_tree_model = true;
                settings.tree_model = Some(choice);
            }
            Stmt::SetK(k, span) => {
                if seen_k {
                    return Err(semantic_error(src, span, "duplicate setting 'k'".to_string()));
                }
                seen_k = true;
                settings.k = Some(k as usize);
            }
        }
    }

    let action = action.ok_or_else(|| {
        semantic_error(
            src,
            Span {
                line: last_line,
                col: 1,
            },
            "the spec defines no action".to_string(),
        )
    })?;

    Ok(SpecAst {
        groups,
        action,
        settings,
    })
}

/// Builds the concrete lattice action from an AST: groups are constructed
/// and validated, embeddings checked, and the tree-model choice resolved
/// (edge for two factors, star for three or more, unless overridden).
pub fn lower_to_action(src: &SpecSource, ast: &SpecAst) -> Result<(LatticeAction, Settings), Diagnostic> {
    let mut built: Vec<(String, FiniteGroup)> = Vec::new();
    for def in &ast.groups {
        let group = match &def.kind {
            GroupDefKind::Cyclic(n) => FiniteGroup::cyclic(*n as usize),
            GroupDefKind::Table(rows) => FiniteGroup::from_table(rows, None),
        }
        .map_err(|e| semantic_error(src, def.span, format!("group '{}': {e}", def.name)))?;
        built.push((def.name.clone(), group));
    }
    let lookup = |name: &str| -> FiniteGroup {
        built
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, g)| g.clone())
            .expect("names resolved during parsing")
    };

    let action = match &ast.action.kind {
        ActionDefKind::FreeProduct(names) => {
            let factors: Vec<FiniteGroup> = names.iter().map(|n| lookup(n)).collect();
            let choice = ast.settings.tree_model.unwrap_or(if names.len() == 2 {
                TreeModelChoice::Edge
            } else {
                TreeModelChoice::Star
            });
            match choice {
                TreeModelChoice::Edge if factors.len() == 2 => {
                    let mut it = factors.into_iter();
                    LatticeAction::EdgeFreeProduct(it.next().unwrap(), it.next().unwrap())
                }
                TreeModelChoice::Edge => {
                    return Err(semantic_error(
                        src,
                        ast.action.span,
                        format!("the edge tree model needs exactly 2 factors, got {}", factors.len()),
                    ));
                }
                TreeModelChoice::Star => LatticeAction::StarFreeProduct(factors),
            }
        }
        ActionDefKind::Amalgam {
            left,
            right,
            over,
            embed_left,
            embed_right,
        } => {
            if ast.settings.tree_model.is_some() {
                return Err(semantic_error(
                    src,
                    ast.action.span,
                    "the tree_model setting applies only to free products".to_string(),
                ));
            }
            let core = lookup(over);
            let mk_embedding = |target_name: &str, map: &[(usize, usize)], which: &str| {
                let target = lookup(target_name);
                let mut image = vec![usize::MAX; core.order()];
                for &(a, b) in map {
                    if a >= core.order() {
                        return Err(semantic_error(
                            src,
                            ast.action.span,
                            format!(
                                "{which}: source element {a} is out of range for '{over}' of order {}",
                                core.order()
                            ),
                        ));
                    }
                    if image[a] != usize::MAX {
                        return Err(semantic_error(
                            src,
                            ast.action.span,
                            format!("{which}: source element {a} is mapped twice"),
                        ));
                    }
                    image[a] = b;
                }
                if let Some(missing) = image.iter().position(|&v| v == usize::MAX) {
                    return Err(semantic_error(
                        src,
                        ast.action.span,
                        format!("{which}: source element {missing} of '{over}' has no image"),
                    ));
                }
                Embedding::new(core.clone(), target, image)
                    .map_err(|e| semantic_error(src, ast.action.span, format!("{which}: {e}")))
            };
            let into_left = mk_embedding(left, embed_left, "embed1")?;
            let into_right = mk_embedding(right, embed_right, "embed2")?;
            LatticeAction::Amalgam {
                into_left,
                into_right,
            }
        }
    };

    Ok((action, ast.settings.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn src(text: &str) -> SpecSource {
        SpecSource::new("test.tk", text)
    }

    #[test]
    fn parses_free_product() {
        let s = src("group a = cyclic(3)\ngroup b = cyclic(2)\naction x = free_product(a, b)\n");
        let ast = parse_spec(&s).unwrap();
        assert_eq!(ast.groups.len(), 2);
        assert_eq!(ast.action.kind, ActionDefKind::FreeProduct(vec!["a".into(), "b".into()]));
        let (action, _) = lower_to_action(&s, &ast).unwrap();
        assert!(matches!(action, LatticeAction::EdgeFreeProduct(..)));
    }

    #[test]
    fn three_factors_default_to_star() {
        let s = src("group a = cyclic(2)\ngroup b = cyclic(2)\ngroup c = cyclic(2)\naction x = free_product(a, b, c)\n");
        let ast = parse_spec(&s).unwrap();
        let (action, _) = lower_to_action(&s, &ast).unwrap();
        assert!(matches!(action, LatticeAction::StarFreeProduct(ref v) if v.len() == 3));
    }

    #[test]
    fn forced_edge_model_needs_two_factors() {
        let s = src(
            "group a = cyclic(2)\ngroup b = cyclic(2)\ngroup c = cyclic(2)\naction x = free_product(a, b, c)\nset tree_model = edge\n",
        );
        let ast = parse_spec(&s).unwrap();
        let err = lower_to_action(&s, &ast).unwrap_err();
        assert!(err.message.contains("exactly 2 factors"));
    }

    #[test]
    fn undefined_name_and_arity() {
        let s = src("action x = free_product(a)\n");
        let err = parse_spec(&s).unwrap_err();
        assert_eq!(err.line, 1);
        assert!(err.message.contains("undefined name 'a'"));
        assert!(err.message.contains("at least 2 factors"));
    }

    #[test]
    fn syntax_error_position_and_expected_set() {
        let s = src("group g = cyclic(3");
        let err = parse_spec(&s).unwrap_err();
        assert_eq!(err.line, 1);
        assert_eq!(err.col, 19);
        assert_eq!(err.expected, vec![")".to_string()]);
    }

    #[test]
    fn duplicate_definitions_are_rejected() {
        let s = src("group a = cyclic(2)\ngroup a = cyclic(3)\naction x = free_product(a, a)\n");
        let err = parse_spec(&s).unwrap_err();
        assert_eq!(err.line, 2);
        assert!(err.message.contains("duplicate"));

        let s = src("group a = cyclic(3)\naction x = free_product(a, a)\naction y = free_product(a, a)\n");
        let err = parse_spec(&s).unwrap_err();
        assert_eq!(err.line, 3);
        assert!(err.message.contains("exactly one action"));
    }

    #[test]
    fn parses_amalgam_with_table_group() {
        let s = src(
            "group h = cyclic(2)\n\
             group g = table(0, 1, 2, 3, 4, 5; 1, 0, 5, 4, 3, 2; 2, 4, 0, 5, 1, 3; 3, 5, 4, 0, 2, 1; 4, 2, 3, 1, 5, 0; 5, 3, 1, 2, 0, 4)\n\
             action x = amalgam(g, g, over = h, embed1 = [0 -> 0, 1 -> 1], embed2 = [0 -> 0, 1 -> 1])\n",
        );
        let ast = parse_spec(&s).unwrap();
        let (action, _) = lower_to_action(&s, &ast).unwrap();
        match action {
            LatticeAction::Amalgam { into_left, .. } => {
                assert_eq!(into_left.source().order(), 2);
                assert_eq!(into_left.target().order(), 6);
            }
            other => panic!("expected amalgam, got {other:?}"),
        }
    }

    #[test]
    fn amalgam_embedding_must_be_total() {
        let s = src(
            "group h = cyclic(2)\ngroup g = cyclic(4)\naction x = amalgam(g, g, over = h, embed1 = [0 -> 0], embed2 = [0 -> 0, 1 -> 2])\n",
        );
        let ast = parse_spec(&s).unwrap();
        let err = lower_to_action(&s, &ast).unwrap_err();
        assert!(err.message.contains("no image"), "{}", err.message);
    }

    #[test]
    fn bad_group_table_reports_group_error_with_location() {
        let s = src("group g = table(0, 1; 1, 1)\naction x = free_product(g, g)\n");
        let ast = parse_spec(&s).unwrap();
        let err = lower_to_action(&s, &ast).unwrap_err();
        assert_eq!(err.line, 1);
        assert!(err.message.contains("Latin"));
    }

    #[test]
    fn settings_are_parsed_and_deduplicated() {
        let s = src("group a = cyclic(3)\naction x = free_product(a, a)\nset k = 2\nset tree_model = star\n");
        let ast = parse_spec(&s).unwrap();
        assert_eq!(ast.settings.k, Some(2));
        assert_eq!(ast.settings.tree_model, Some(TreeModelChoice::Star));

        let s = src("group a = cyclic(3)\naction x = free_product(a, a)\nset k = 2\nset k = 3\n");
        let err = parse_spec(&s).unwrap_err();
        assert!(err.message.contains("duplicate setting"));
    }

    #[test]
    fn comments_and_blank_lines_are_ignored() {
        let s = src("# a comment\n\ngroup a = cyclic(3) # trailing\n\naction x = free_product(a, a)\n");
        assert!(parse_spec(&s).is_ok());
    }

    #[test]
    fn round_trip_pretty_print() {
        let texts = [
            "group a = cyclic(3)\ngroup b = cyclic(2)\naction x = free_product(a, b)\nset k = 2\n",
            "group h = cyclic(2)\ngroup g = cyclic(6)\naction x = amalgam(g, g, over = h, embed1 = [0 -> 0, 1 -> 3], embed2 = [0 -> 0, 1 -> 3])\n",
            "group t = table(0, 1; 1, 0)\ngroup a = cyclic(4)\naction y = free_product(t, a, t)\nset tree_model = star\n",
        ];
        for text in texts {
            let s = src(text);
            let ast = parse_spec(&s).unwrap();
            let printed = ast.to_source();
            let reparsed = parse_spec(&SpecSource::new("rt.tk", &printed)).unwrap();
            assert_eq!(printed, reparsed.to_source());
            assert_eq!(
                ast.groups.iter().map(|g| (&g.name, &g.kind)).collect::<Vec<_>>(),
                reparsed.groups.iter().map(|g| (&g.name, &g.kind)).collect::<Vec<_>>()
            );
            assert_eq!(ast.action.kind, reparsed.action.kind);
            assert_eq!(ast.settings, reparsed.settings);
        }
    }

    #[test]
    fn utf8_validation() {
        assert!(SpecSource::from_bytes("x.tk", vec![0x67, 0x72]).is_ok());
        let err = SpecSource::from_bytes("x.tk", vec![0x67, 0xff, 0xfe]).unwrap_err();
        assert!(err.message.contains("UTF-8"));
    }

    proptest! {
        /// No panics on arbitrary input, and error positions stay within the
        /// source.
        #[test]
        fn parser_never_panics(text in ".{0,200}") {
            let s = SpecSource::new("fuzz.tk", &text);
            if let Err(d) = parse_spec(&s) {
                let lines: Vec<&str> = text.lines().collect();
                prop_assert!(d.line >= 1 && d.line <= lines.len().max(1));
                let len = lines.get(d.line - 1).map(|l| l.chars().count()).unwrap_or(0);
                prop_assert!(d.col >= 1 && d.col <= len + 1);
            }
        }

        #[test]
        fn parser_never_panics_on_bytes(bytes in proptest::collection::vec(any::<u8>(), 0..200)) {
            if let Ok(s) = SpecSource::from_bytes("fuzz.tk", bytes) {
                let _ = parse_spec(&s);
            }
        }
    }
}
