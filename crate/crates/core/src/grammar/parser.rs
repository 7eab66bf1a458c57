//! Recursive-descent parser producing concrete parse trees.
//!
//! ```text
//! deck        := { statement } ;
//! statement   := layer_def | rule_check ;
//! layer_def   := IDENT "=" layer_expr ;
//! layer_expr  := or_expr ;
//! or_expr     := and_expr { "OR" and_expr } ;
//! and_expr    := unary { "AND" unary } ;
//! unary       := "NOT" unary | "(" layer_expr ")" | IDENT ;
//! rule_check  := CMD_IDENT IDENT { IDENT } [ condition ] { option } [ block ] ;
//! condition   := CMP_OP NUMBER [ "um" ] ;
//! option      := "READ" "ALL" | IDENT [ NUMBER | STRING ] ;
//! block       := "{" { "REPORT" STRING | statement } "}" ;
//! CMD_IDENT   := IDENT ending in "_CMD" ;
//! ```
//!
//! Statements have no terminator. A statement starts at a `*_CMD` identifier
//! or at an identifier followed by `=`; both are also the recovery points
//! after an error. The layer list of a rule check ends at the first
//! identifier that is a registered option key, `READ`, or is followed by a
//! NUMBER or STRING.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::diagnostic::{Diagnostic, SourceSpan};
use super::lexer::{tokenize, Token, TokenKind};
use super::registry::CommandRegistry;

pub const UNIT_SUFFIX: &str = "um";
const MAX_DEPTH: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum NodeKind {
    Deck,
    RuleCheck,
    LayerDef,
    LayerExpr,
    Condition,
    Option,
    Block,
    ReportStmt,
    Terminal,
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            NodeKind::Deck => "DECK",
            NodeKind::RuleCheck => "RULE_CHECK",
            NodeKind::LayerDef => "LAYER_DEF",
            NodeKind::LayerExpr => "LAYER_EXPR",
            NodeKind::Condition => "CONDITION",
            NodeKind::Option => "OPTION",
            NodeKind::Block => "BLOCK",
            NodeKind::ReportStmt => "REPORT_STMT",
            NodeKind::Terminal => "TERMINAL",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseTree {
    pub node_kind: NodeKind,
    pub children: Vec<ParseTree>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub token: Option<Token>,
    pub span: SourceSpan,
}

impl ParseTree {
    pub fn terminal(token: Token) -> Self {
        ParseTree {
            node_kind: NodeKind::Terminal,
            children: Vec::new(),
            span: token.span,
            token: Some(token),
        }
    }

    /// Builds an interior node whose span covers all children.
    pub fn node(kind: NodeKind, children: Vec<ParseTree>) -> Self {
        assert!(!children.is_empty(), "{kind} node without children");
        let span = children
            .iter()
            .skip(1)
            .fold(children[0].span, |acc, c| acc.cover(&c.span));
        ParseTree {
            node_kind: kind,
            children,
            token: None,
            span,
        }
    }

    fn empty_deck(at: SourceSpan) -> Self {
        ParseTree {
            node_kind: NodeKind::Deck,
            children: Vec::new(),
            token: None,
            span: at,
        }
    }

    pub fn is_terminal(&self) -> bool {
        self.node_kind == NodeKind::Terminal
    }

    pub fn token_text(&self) -> Option<&str> {
        self.token.as_ref().map(|t| t.text.as_str())
    }

    /// Terminal tokens in source order.
    pub fn terminals(&self) -> Vec<&Token> {
        let mut out = Vec::new();
        self.collect_terminals(&mut out);
        out
    }

    fn collect_terminals<'a>(&'a self, out: &mut Vec<&'a Token>) {
        if let Some(tok) = &self.token {
            out.push(tok);
        }
        for c in &self.children {
            c.collect_terminals(out);
        }
    }

    /// Indented, human-readable dump.
    pub fn pretty(&self) -> String {
        let mut out = String::new();
        self.pretty_into(0, &mut out);
        out
    }

    fn pretty_into(&self, depth: usize, out: &mut String) {
        for _ in 0..depth {
            out.push_str("  ");
        }
        match &self.token {
            Some(t) => out.push_str(&format!("{} {} {:?}\n", self.node_kind, t.kind, t.text)),
            None => out.push_str(&format!("{} @{}\n", self.node_kind, self.span)),
        }
        for c in &self.children {
            c.pretty_into(depth + 1, out);
        }
    }
}

struct Failure {
    diagnostic: Diagnostic,
    /// Token index where recovery scanning may start.
    resume: usize,
}

type PResult<T> = std::result::Result<T, Failure>;

struct Parser<'r> {
    tokens: Vec<Token>,
    pos: usize,
    registry: &'r CommandRegistry,
    depth: usize,
}

impl<'r> Parser<'r> {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos.min(self.tokens.len() - 1)]
    }

    fn peek_at(&self, idx: usize) -> &Token {
        &self.tokens[idx.min(self.tokens.len() - 1)]
    }

    fn at_eof(&self) -> bool {
        self.peek().kind == TokenKind::Eof
    }

    fn advance(&mut self) -> Token {
        let tok = self.peek().clone();
        if tok.kind != TokenKind::Eof {
            self.pos += 1;
        }
        tok
    }

    fn fail<T>(&self, code: &str, message: impl Into<String>, at: usize) -> PResult<T> {
        Err(Failure {
            diagnostic: Diagnostic::error(code, message, self.peek_at(at).span),
            resume: at,
        })
    }

    fn is_statement_start(&self, idx: usize) -> bool {
        let tok = self.peek_at(idx);
        tok.kind == TokenKind::Ident
            && (tok.text.ends_with("_CMD") || self.peek_at(idx + 1).kind == TokenKind::Assign)
    }

    fn enter(&mut self) -> PResult<()> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            return self.fail("nesting-too-deep", "nesting too deep", self.pos);
        }
        Ok(())
    }

    fn leave(&mut self) {
        self.depth -= 1;
    }

    fn statement(&mut self) -> PResult<ParseTree> {
        self.enter()?;
        let result = if self.peek_at(self.pos + 1).kind == TokenKind::Assign {
            self.layer_def()
        } else {
            self.rule_check()
        };
        self.leave();
        result
    }

    fn layer_def(&mut self) -> PResult<ParseTree> {
        let target = ParseTree::terminal(self.advance());
        let assign = ParseTree::terminal(self.advance());
        let expr = self.or_expr()?;
        Ok(ParseTree::node(NodeKind::LayerDef, vec![target, assign, expr]))
    }

    fn binary_chain(
        &mut self,
        keyword: &str,
        next: fn(&mut Self) -> PResult<ParseTree>,
    ) -> PResult<ParseTree> {
        let mut left = next(self)?;
        // chains build left-deep trees, so each operator counts as a level
        let mut levels = 0;
        while self.peek().is_keyword(keyword) {
            self.enter()?;
            levels += 1;
            let op = ParseTree::terminal(self.advance());
            let right = next(self)?;
            left = ParseTree::node(NodeKind::LayerExpr, vec![left, op, right]);
        }
        self.depth -= levels;
        Ok(left)
    }

    fn or_expr(&mut self) -> PResult<ParseTree> {
        self.binary_chain("OR", Self::and_expr)
    }

    fn and_expr(&mut self) -> PResult<ParseTree> {
        self.binary_chain("AND", Self::unary)
    }

    fn unary(&mut self) -> PResult<ParseTree> {
        self.enter()?;
        let result = self.unary_inner();
        self.leave();
        result
    }

    fn unary_inner(&mut self) -> PResult<ParseTree> {
        let tok = self.peek().clone();
        if tok.is_keyword("NOT") {
            let op = ParseTree::terminal(self.advance());
            let operand = self.unary()?;
            return Ok(ParseTree::node(NodeKind::LayerExpr, vec![op, operand]));
        }
        match tok.kind {
            TokenKind::LParen => {
                let open_idx = self.pos;
                let open = ParseTree::terminal(self.advance());
                let inner = self.or_expr()?;
                if self.peek().kind != TokenKind::RParen {
                    return Err(Failure {
                        diagnostic: Diagnostic::error(
                            "unclosed-paren",
                            "missing ')' for this '('",
                            self.peek_at(open_idx).span,
                        ),
                        resume: self.pos,
                    });
                }
                let close = ParseTree::terminal(self.advance());
                Ok(ParseTree::node(NodeKind::LayerExpr, vec![open, inner, close]))
            }
            TokenKind::Ident if !self.is_statement_start(self.pos) => {
                let leaf = ParseTree::terminal(self.advance());
                Ok(ParseTree::node(NodeKind::LayerExpr, vec![leaf]))
            }
            _ => self.fail(
                "expected-layer-expr",
                format!("expected a layer expression, found {}", describe(&tok)),
                self.pos,
            ),
        }
    }

    fn ends_layer_list(&self, idx: usize) -> bool {
        let tok = self.peek_at(idx);
        if tok.kind != TokenKind::Ident || self.is_statement_start(idx) {
            return true;
        }
        if tok.text == "READ" || self.registry.is_option_key(&tok.text) {
            return true;
        }
        matches!(
            self.peek_at(idx + 1).kind,
            TokenKind::Number | TokenKind::String
        )
    }

    fn rule_check(&mut self) -> PResult<ParseTree> {
        let cmd_idx = self.pos;
        let cmd = self.advance();
        if !cmd.text.ends_with("_CMD") {
            return self.fail(
                "expected-statement",
                format!("expected a statement, found {}", describe(&cmd)),
                cmd_idx,
            );
        }
        let mut children = vec![ParseTree::terminal(cmd.clone())];

        while !self.ends_layer_list(self.pos) {
            children.push(ParseTree::terminal(self.advance()));
        }
        if children.len() == 1 {
            return self.fail(
                "missing-layers",
                format!(
                    "{} needs at least one layer, found {}",
                    cmd.text,
                    describe(self.peek())
                ),
                self.pos,
            );
        }

        if self.peek().kind == TokenKind::CmpOp {
            children.push(self.condition()?);
        }

        loop {
            let tok = self.peek();
            if tok.kind != TokenKind::Ident || self.is_statement_start(self.pos) {
                break;
            }
            let key = ParseTree::terminal(self.advance());
            let mut parts = vec![key];
            let next = self.peek();
            let takes_value = if parts[0].token_text() == Some("READ") {
                next.is(TokenKind::Ident, "ALL")
            } else {
                matches!(next.kind, TokenKind::Number | TokenKind::String)
            };
            if takes_value {
                parts.push(ParseTree::terminal(self.advance()));
            }
            children.push(ParseTree::node(NodeKind::Option, parts));
        }

        if self.peek().kind == TokenKind::LBrace {
            children.push(self.block()?);
        }
        Ok(ParseTree::node(NodeKind::RuleCheck, children))
    }

    fn condition(&mut self) -> PResult<ParseTree> {
        let op_idx = self.pos;
        let op = ParseTree::terminal(self.advance());
        if self.peek().kind != TokenKind::Number {
            return Err(Failure {
                diagnostic: Diagnostic::error(
                    "missing-number",
                    format!(
                        "comparison operator {} must be followed by a number, found {}",
                        op.token_text().unwrap_or_default(),
                        describe(self.peek())
                    ),
                    self.peek_at(op_idx).span,
                ),
                resume: self.pos,
            });
        }
        let mut parts = vec![op, ParseTree::terminal(self.advance())];
        if self.peek().is(TokenKind::Ident, UNIT_SUFFIX) {
            parts.push(ParseTree::terminal(self.advance()));
        }
        Ok(ParseTree::node(NodeKind::Condition, parts))
    }

    fn block(&mut self) -> PResult<ParseTree> {
        let open_idx = self.pos;
        let mut children = vec![ParseTree::terminal(self.advance())];
        loop {
            let tok = self.peek().clone();
            match tok.kind {
                TokenKind::RBrace => {
                    children.push(ParseTree::terminal(self.advance()));
                    return Ok(ParseTree::node(NodeKind::Block, children));
                }
                TokenKind::Eof => {
                    return Err(Failure {
                        diagnostic: Diagnostic::error(
                            "unclosed-block",
                            "missing '}' for this '{'",
                            self.peek_at(open_idx).span,
                        ),
                        resume: open_idx + 1,
                    });
                }
                TokenKind::Keyword if tok.text == "REPORT" => {
                    let kw = ParseTree::terminal(self.advance());
                    if self.peek().kind != TokenKind::String {
                        return self.fail(
                            "report-needs-string",
                            format!("REPORT needs a string, found {}", describe(self.peek())),
                            self.pos,
                        );
                    }
                    let msg = ParseTree::terminal(self.advance());
                    children.push(ParseTree::node(NodeKind::ReportStmt, vec![kw, msg]));
                }
                _ if self.is_statement_start(self.pos) => {
                    children.push(self.statement()?);
                }
                _ => {
                    return self.fail(
                        "unexpected-in-block",
                        format!("unexpected {} inside block", describe(&tok)),
                        self.pos,
                    );
                }
            }
        }
    }

    /// Moves to the next statement start at or after `from`.
    fn recover(&mut self, from: usize) {
        self.pos = from;
        while !self.at_eof() && !self.is_statement_start(self.pos) {
            self.pos += 1;
        }
    }
}

fn describe(tok: &Token) -> String {
    match tok.kind {
        TokenKind::Eof => "end of input".to_string(),
        _ => format!("{} {:?}", tok.kind, tok.text),
    }
}

/// Parses a whole deck. Never fails: problems become diagnostics and
/// statements containing an error are left out of the returned DECK.
pub fn parse_deck(source: &str, registry: &CommandRegistry) -> (ParseTree, Vec<Diagnostic>) {
    let (tokens, lex_diags) = tokenize(source);
    let eof_span = tokens.last().expect("EOF token").span;
    let mut parser = Parser {
        tokens,
        pos: 0,
        registry,
        depth: 0,
    };
    let mut statements = Vec::new();
    let mut diags = Vec::new();
    let lex_errors: Vec<usize> = lex_diags
        .iter()
        .filter(|d| d.is_error())
        .map(|d| d.span.start_offset)
        .collect();

    while !parser.at_eof() {
        let start = parser.pos;
        if !parser.is_statement_start(start) {
            diags.push(Diagnostic::error(
                "expected-statement",
                format!("expected a statement, found {}", describe(parser.peek())),
                parser.peek().span,
            ));
            parser.recover(start + 1);
            continue;
        }
        match parser.statement() {
            Ok(stmt) => {
                let begin = parser.peek_at(start).span.start_offset;
                let end = parser.peek().span.start_offset;
                let tainted = lex_errors.iter().any(|&off| off >= begin && off < end);
                if !tainted {
                    statements.push(stmt);
                }
            }
            Err(failure) => {
                diags.push(failure.diagnostic);
                parser.depth = 0;
                parser.recover(failure.resume.max(start + 1));
            }
        }
    }

    let mut all = lex_diags;
    all.extend(diags);
    all.sort_by_key(|d| d.span.start_offset);

    let deck = if statements.is_empty() {
        ParseTree::empty_deck(eof_span)
    } else {
        ParseTree::node(NodeKind::Deck, statements)
    };
    (deck, all)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::diagnostic::error_count;

    const APPENDIX_RULE: &str =
        "SPACE_CMD METAL1 METAL2 >= 0.5 READ ALL {\n    REPORT \"Spacing violation detected\"\n}";

    fn parse(src: &str) -> (ParseTree, Vec<Diagnostic>) {
        parse_deck(src, &CommandRegistry::default())
    }

    fn kinds(tree: &ParseTree) -> Vec<NodeKind> {
        tree.children.iter().map(|c| c.node_kind).collect()
    }

    #[test]
    fn spacing_rule_structure() {
        let (deck, diags) = parse(APPENDIX_RULE);
        assert!(diags.is_empty(), "{diags:?}");
        assert_eq!(deck.node_kind, NodeKind::Deck);
        assert_eq!(kinds(&deck), [NodeKind::RuleCheck]);
        let rule = &deck.children[0];
        assert_eq!(
            kinds(rule),
            [
                NodeKind::Terminal,
                NodeKind::Terminal,
                NodeKind::Terminal,
                NodeKind::Condition,
                NodeKind::Option,
                NodeKind::Block,
            ]
        );
        let block = &rule.children[5];
        assert_eq!(block.children[1].node_kind, NodeKind::ReportStmt);
    }

    #[test]
    fn layer_definition() {
        let (deck, diags) = parse("M3 = METAL1 AND METAL2");
        assert!(diags.is_empty());
        assert_eq!(kinds(&deck), [NodeKind::LayerDef]);
        let expr = &deck.children[0].children[2];
        assert_eq!(expr.node_kind, NodeKind::LayerExpr);
        assert_eq!(expr.children[1].token_text(), Some("AND"));
    }

    #[test]
    fn unclosed_block_drops_statement() {
        let (deck, diags) = parse("SPACE_CMD METAL1 { REPORT \"x\"");
        assert!(deck.children.is_empty());
        assert_eq!(error_count(&diags), 1);
        assert_eq!(diags[0].code, "unclosed-block");
        assert_eq!(diags[0].span.column, 18);
    }

    #[test]
    fn condition_without_number() {
        let (deck, diags) = parse("WIDTH_CMD M1 >= READ ALL\nWIDTH_CMD M2 > 0.2");
        assert_eq!(error_count(&diags), 1);
        assert_eq!(diags[0].code, "missing-number");
        assert_eq!(deck.children.len(), 1);
    }

    #[test]
    fn not_binds_tighter_than_and() {
        let (deck, _) = parse("X = NOT A AND B");
        let expr = &deck.children[0].children[2];
        // (NOT A) AND B
        assert_eq!(expr.children[1].token_text(), Some("AND"));
        assert_eq!(expr.children[0].children[0].token_text(), Some("NOT"));

        let (deck, _) = parse("X = NOT (A AND B)");
        let expr = &deck.children[0].children[2];
        assert_eq!(expr.children[0].token_text(), Some("NOT"));
    }

    #[test]
    fn and_binds_tighter_than_or() {
        let (deck, _) = parse("X = A OR B AND C");
        let expr = &deck.children[0].children[2];
        assert_eq!(expr.children[1].token_text(), Some("OR"));
        assert_eq!(expr.children[2].children[1].token_text(), Some("AND"));
    }

    #[test]
    fn broken_statement_does_not_hide_later_ones() {
        let src = "SPACE_CMD >= 0.5\nM3 = A OR\nWIDTH_CMD M1 >= 0.1\nENC_CMD A B > 0.2 { REPORT }\nAREA_CMD M1 > 1";
        let (deck, diags) = parse(src);
        assert_eq!(error_count(&diags), 3, "{diags:#?}");
        let names: Vec<_> = deck
            .children
            .iter()
            .map(|s| s.children[0].token_text().unwrap().to_string())
            .collect();
        assert_eq!(names, ["WIDTH_CMD", "AREA_CMD"]);
    }

    #[test]
    fn junk_is_not_a_statement() {
        let (deck, diags) = parse("NOT A AND B");
        assert!(deck.children.is_empty());
        assert_eq!(error_count(&diags), 1);
        assert_eq!(diags[0].code, "expected-statement");
    }

    #[test]
    fn nested_statements_in_block() {
        let src = "SPACE_CMD A B >= 1 { M3 = A AND B WIDTH_CMD M3 > 2 REPORT \"r\" }";
        let (deck, diags) = parse(src);
        assert!(diags.is_empty(), "{diags:?}");
        let block = deck.children[0].children.last().unwrap();
        assert_eq!(
            kinds(block),
            [
                NodeKind::Terminal,
                NodeKind::LayerDef,
                NodeKind::RuleCheck,
                NodeKind::ReportStmt,
                NodeKind::Terminal
            ]
        );
    }

    #[test]
    fn unclosed_outer_block_recovers_inner_statement() {
        let src = "SPACE_CMD A B >= 1 { WIDTH_CMD C >= 1 { REPORT \"x\" }";
        let (deck, diags) = parse(src);
        assert_eq!(error_count(&diags), 1);
        assert_eq!(deck.children.len(), 1);
        assert_eq!(deck.children[0].children[0].token_text(), Some("WIDTH_CMD"));
    }

    #[test]
    fn lex_error_taints_only_its_statement() {
        let (deck, diags) = parse("WIDTH_CMD M1 > 1 @\nWIDTH_CMD M2 > 1");
        assert_eq!(error_count(&diags), 1);
        assert_eq!(deck.children.len(), 1);
        assert_eq!(deck.children[0].children[1].token_text(), Some("M2"));
    }

    #[test]
    fn options_with_values_and_units() {
        let (deck, diags) = parse("DENSITY_CMD M1 < 0.8um WINDOW 100 STEP 50 COMMENT \"x\"");
        assert!(diags.is_empty());
        let rule = &deck.children[0];
        assert_eq!(rule.children[2].children.len(), 3);
        let opts: Vec<_> = rule
            .children
            .iter()
            .filter(|c| c.node_kind == NodeKind::Option)
            .collect();
        assert_eq!(opts.len(), 3);
    }

    #[test]
    fn deep_nesting_is_reported_not_crashed() {
        let src = format!("X = {}A{}", "(".repeat(5000), ")".repeat(5000));
        let (deck, diags) = parse(&src);
        assert!(deck.children.is_empty());
        assert!(diags.iter().any(|d| d.code == "nesting-too-deep"));
    }

    #[test]
    fn spans_nest() {
        fn check(t: &ParseTree) {
            for c in &t.children {
                assert!(t.span.contains(&c.span));
                check(c);
            }
            if t.is_terminal() {
                assert!(t.children.is_empty() && t.token.is_some());
            } else {
                assert!(!t.children.is_empty());
            }
        }
        let (deck, _) = parse(APPENDIX_RULE);
        check(&deck);
    }
}
