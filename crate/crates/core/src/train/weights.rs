use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grammar::{check_source, tokenize, CommandRegistry, NodeKind, ParseTree, TokenKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenClass {
    Command,
    Layer,
    Condition,
    Option,
    Structure,
}

impl TokenClass {
    pub fn as_str(self) -> &'static str {
        match self {
            TokenClass::Command => "command",
            TokenClass::Layer => "layer",
            TokenClass::Condition => "condition",
            TokenClass::Option => "option",
            TokenClass::Structure => "structure",
        }
    }
}

impl fmt::Display for TokenClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TokenClassWeights {
    pub command: f64,
    pub layer: f64,
    pub condition: f64,
    pub option: f64,
    pub structure: f64,
}

impl Default for TokenClassWeights {
    fn default() -> Self {
        TokenClassWeights {
            command: 3.0,
            layer: 2.5,
            condition: 2.0,
            option: 1.0,
            structure: 1.5,
        }
    }
}

impl TokenClassWeights {
    pub fn uniform(w: f64) -> Self {
        TokenClassWeights {
            command: w,
            layer: w,
            condition: w,
            option: w,
            structure: w,
        }
    }

    /// Every weight must be finite and positive.
    pub fn check(&self) -> Result<()> {
        for class in [
            TokenClass::Command,
            TokenClass::Layer,
            TokenClass::Condition,
            TokenClass::Option,
            TokenClass::Structure,
        ] {
            let w = self.weight(class);
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::Config(format!("{class} weight must be positive, got {w}")));
            }
        }
        Ok(())
    }

    pub fn weight(&self, class: TokenClass) -> f64 {
        match class {
            TokenClass::Command => self.command,
            TokenClass::Layer => self.layer,
            TokenClass::Condition => self.condition,
            TokenClass::Option => self.option,
            TokenClass::Structure => self.structure,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenWeightRecord {
    pub token: String,
    pub class: TokenClass,
    pub weight: f64,
}

/// Parallel lists, one entry per source token in order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TokenWeightMap {
    pub tokens: Vec<String>,
    pub classes: Vec<TokenClass>,
    pub weights: Vec<f64>,
}

impl TokenWeightMap {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn records(&self) -> Vec<TokenWeightRecord> {
        self.tokens
            .iter()
            .zip(&self.classes)
            .zip(&self.weights)
            .map(|((t, c), w)| TokenWeightRecord {
                token: t.clone(),
                class: *c,
                weight: *w,
            })
            .collect()
    }

    pub fn to_jsonl(&self) -> String {
        crate::corpus::to_jsonl(&self.records())
    }

    pub fn count(&self, class: TokenClass) -> usize {
        self.classes.iter().filter(|c| **c == class).count()
    }
}

fn mark(node: &ParseTree, class: TokenClass, out: &mut HashMap<usize, TokenClass>) {
    for tok in node.terminals() {
        out.insert(tok.span.start_offset, class);
    }
}

fn classify(node: &ParseTree, out: &mut HashMap<usize, TokenClass>) {
    match node.node_kind {
        NodeKind::Deck => node.children.iter().for_each(|c| classify(c, out)),
        NodeKind::RuleCheck => {
            for (i, child) in node.children.iter().enumerate() {
                match child.node_kind {
                    NodeKind::Terminal if i == 0 => mark(child, TokenClass::Command, out),
                    NodeKind::Terminal => mark(child, TokenClass::Layer, out),
                    NodeKind::Condition => mark(child, TokenClass::Condition, out),
                    NodeKind::Option => mark(child, TokenClass::Option, out),
                    _ => classify(child, out),
                }
            }
        }
        NodeKind::Block => {
            for child in &node.children {
                match child.node_kind {
                    NodeKind::Terminal => mark(child, TokenClass::Structure, out),
                    NodeKind::ReportStmt => mark(child, TokenClass::Option, out),
                    _ => classify(child, out),
                }
            }
        }
        NodeKind::LayerDef => {
            mark(&node.children[0], TokenClass::Layer, out);
            mark(&node.children[1], TokenClass::Structure, out);
            classify(&node.children[2], out);
        }
        NodeKind::LayerExpr => {
            if let [leaf] = node.children.as_slice() {
                if leaf.is_terminal() {
                    mark(leaf, TokenClass::Layer, out);
                    return;
                }
            }
            for child in &node.children {
                if child.is_terminal() {
                    mark(child, TokenClass::Structure, out);
                } else {
                    classify(child, out);
                }
            }
        }
        NodeKind::Condition => mark(node, TokenClass::Condition, out),
        NodeKind::Option | NodeKind::ReportStmt => mark(node, TokenClass::Option, out),
        NodeKind::Terminal => mark(node, TokenClass::Structure, out),
    }
}

/// Assigns each token of a valid reference the weight of its syntactic role.
pub fn token_weights(
    code: &str,
    weights: &TokenClassWeights,
    registry: &CommandRegistry,
) -> Result<TokenWeightMap> {
    weights.check()?;
    let (deck, diags) = check_source(code, registry, false);
    if let Some(d) = diags.iter().find(|d| d.is_error()) {
        return Err(Error::InvalidCode(d.to_string()));
    }
    let mut classes = HashMap::new();
    classify(&deck, &mut classes);

    let (tokens, _) = tokenize(code);
    let mut map = TokenWeightMap::default();
    for tok in tokens.iter().filter(|t| t.kind != TokenKind::Eof) {
        let class = *classes.get(&tok.span.start_offset).ok_or_else(|| {
            Error::InvalidCode(format!("token {} at {} is outside any statement", tok.text, tok.span))
        })?;
        map.tokens.push(tok.text.clone());
        map.classes.push(class);
        map.weights.push(weights.weight(class));
    }
    Ok(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use TokenClass::*;

    fn map(code: &str) -> TokenWeightMap {
        token_weights(code, &TokenClassWeights::default(), &CommandRegistry::default()).unwrap()
    }

    fn pairs(m: &TokenWeightMap) -> Vec<(&str, f64)> {
        m.tokens.iter().map(String::as_str).zip(m.weights.iter().copied()).collect()
    }

    #[test]
    fn appendix_rule_defaults() {
        let m = map("SPACE_CMD METAL1 METAL2 >= 0.5 READ ALL { REPORT \"Spacing violation detected\" }");
        assert_eq!(
            pairs(&m),
            [
                ("SPACE_CMD", 3.0),
                ("METAL1", 2.5),
                ("METAL2", 2.5),
                (">=", 2.0),
                ("0.5", 2.0),
                ("READ", 1.0),
                ("ALL", 1.0),
                ("{", 1.5),
                ("REPORT", 1.0),
                ("\"Spacing violation detected\"", 1.0),
                ("}", 1.5),
            ]
        );
    }

    #[test]
    fn layer_definition() {
        let m = map("M3 = A AND B");
        assert_eq!(m.classes, [Layer, Structure, Layer, Structure, Layer]);
        assert_eq!(pairs(&m), [("M3", 2.5), ("=", 1.5), ("A", 2.5), ("AND", 1.5), ("B", 2.5)]);
    }

    #[test]
    fn nested_and_parenthesized() {
        let m = map("WIDTH_CMD A > 1 um MODE { X = NOT (A OR B) REPORT \"w\" }");
        assert_eq!(
            m.classes,
            [
                Command, Layer, Condition, Condition, Condition, Option, Structure, Layer,
                Structure, Structure, Structure, Layer, Structure, Layer, Structure, Option,
                Option, Structure
            ]
        );
    }

    #[test]
    fn uniform_weights() {
        let m = token_weights(
            "SPACE_CMD M1 M2 >= 0.5 READ ALL",
            &TokenClassWeights::uniform(1.0),
            &CommandRegistry::default(),
        )
        .unwrap();
        assert!(m.weights.iter().all(|w| *w == 1.0));
    }

    #[test]
    fn rejects_invalid_code_and_weights() {
        let reg = CommandRegistry::default();
        assert!(token_weights("SPACE_CMD M1 {", &TokenClassWeights::default(), &reg).is_err());
        let mut w = TokenClassWeights::default();
        w.option = 0.0;
        assert!(token_weights("X = A", &w, &reg).is_err());
    }

    #[test]
    fn jsonl_export() {
        let m = map("X = A");
        let text = m.to_jsonl();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], r#"{"token":"X","class":"layer","weight":2.5}"#);
        assert_eq!(lines.len(), 3);
    }
}
