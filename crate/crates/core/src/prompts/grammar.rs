//! Context-free template grammar and an Earley recognizer over prompt tokens.

use std::collections::{HashMap, HashSet};
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// The grammar every rendered prompt must satisfy.
pub const TEMPLATE_GRAMMAR: &str = include_str!("../../grammar/prompt.bnf");

/// Words the `WORD` class never matches.
pub const EXCLUDED_WORDS: [&str; 3] = ["same", "similar", "unknown"];

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum Symbol {
    Terminal(String),
    Rule(usize),
    Word,
    Quoted,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Token {
    Lit(String),
    Quoted(String),
}

#[derive(Debug)]
pub struct Grammar {
    names: Vec<String>,
    index: HashMap<String, usize>,
    alternatives: Vec<Vec<Vec<Symbol>>>,
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic())
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl Grammar {
    pub fn builtin() -> &'static Grammar {
        static G: OnceLock<Grammar> = OnceLock::new();
        G.get_or_init(|| Grammar::parse(TEMPLATE_GRAMMAR).expect("shipped grammar is valid"))
    }

    /// Parses `lhs ::= alt | alt` rules. Lines starting with whitespace
    /// continue the previous rule; `#` starts a comment.
    pub fn parse(src: &str) -> Result<Grammar> {
        let mut rules: Vec<(String, String)> = Vec::new();
        for (n, raw) in src.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("");
            if line.trim().is_empty() {
                continue;
            }
            if line.starts_with(char::is_whitespace) {
                let last = rules
                    .last_mut()
                    .ok_or_else(|| Error::Config(format!("grammar line {}: continuation without rule", n + 1)))?;
                last.1.push(' ');
                last.1.push_str(line.trim());
                continue;
            }
            let (lhs, rhs) = line
                .split_once("::=")
                .ok_or_else(|| Error::Config(format!("grammar line {}: expected '::='", n + 1)))?;
            let lhs = lhs.trim();
            if !is_ident(lhs) {
                return Err(Error::Config(format!("grammar line {}: bad rule name '{lhs}'", n + 1)));
            }
            rules.push((lhs.to_string(), rhs.to_string()));
        }

        let mut g = Grammar {
            names: Vec::new(),
            index: HashMap::new(),
            alternatives: Vec::new(),
        };
        for (lhs, _) in &rules {
            if !g.index.contains_key(lhs) {
                g.index.insert(lhs.clone(), g.names.len());
                g.names.push(lhs.clone());
                g.alternatives.push(Vec::new());
            }
        }
        for (lhs, rhs) in &rules {
            let id = g.index[lhs];
            for alt in rhs.split('|') {
                let syms = alt
                    .split_whitespace()
                    .map(|t| g.symbol(t))
                    .collect::<Result<Vec<_>>>()?;
                if syms.is_empty() {
                    return Err(Error::Config(format!("empty alternative in rule '{lhs}'")));
                }
                g.alternatives[id].push(syms);
            }
        }
        Ok(g)
    }

    fn symbol(&self, t: &str) -> Result<Symbol> {
        if let Some(lit) = t.strip_prefix('"').and_then(|s| s.strip_suffix('"')) {
            if lit.is_empty() {
                return Err(Error::Config("empty terminal in grammar".into()));
            }
            return Ok(Symbol::Terminal(lit.to_string()));
        }
        match t {
            "WORD" => Ok(Symbol::Word),
            "QUOTED" => Ok(Symbol::Quoted),
            _ => self
                .index
                .get(t)
                .map(|&i| Symbol::Rule(i))
                .ok_or_else(|| Error::Config(format!("undefined grammar symbol '{t}'"))),
        }
    }

    pub fn has_rule(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }

    /// True if `text` derives from rule `start`.
    pub fn recognizes(&self, start: &str, text: &str) -> Result<bool> {
        let tokens = tokenize(text)?;
        let start = *self
            .index
            .get(start)
            .ok_or_else(|| Error::Config(format!("no grammar rule '{start}'")))?;
        Ok(self.earley(start, &tokens))
    }

    fn earley(&self, start: usize, tokens: &[Token]) -> bool {
        // item: (rule, alternative, dot, origin)
        type Item = (usize, usize, usize, usize);
        let n = tokens.len();
        let mut chart: Vec<Vec<Item>> = vec![Vec::new(); n + 1];
        let mut seen: Vec<HashSet<Item>> = vec![HashSet::new(); n + 1];
        let push = |chart: &mut Vec<Vec<Item>>, seen: &mut Vec<HashSet<Item>>, k: usize, it: Item| {
            if seen[k].insert(it) {
                chart[k].push(it);
            }
        };
        for a in 0..self.alternatives[start].len() {
            push(&mut chart, &mut seen, 0, (start, a, 0, 0));
        }
        for k in 0..=n {
            let mut i = 0;
            while i < chart[k].len() {
                let (r, a, dot, origin) = chart[k][i];
                let rhs = &self.alternatives[r][a];
                if dot < rhs.len() {
                    match &rhs[dot] {
                        Symbol::Rule(next) => {
                            for b in 0..self.alternatives[*next].len() {
                                push(&mut chart, &mut seen, k, (*next, b, 0, k));
                            }
                        }
                        term => {
                            if k < n && matches_token(term, &tokens[k]) {
                                push(&mut chart, &mut seen, k + 1, (r, a, dot + 1, origin));
                            }
                        }
                    }
                } else {
                    let waiting: Vec<Item> = chart[origin]
                        .iter()
                        .filter(|&&(r2, a2, d2, _)| {
                            self.alternatives[r2][a2].get(d2) == Some(&Symbol::Rule(r))
                        })
                        .copied()
                        .collect();
                    for (r2, a2, d2, o2) in waiting {
                        push(&mut chart, &mut seen, k, (r2, a2, d2 + 1, o2));
                    }
                }
                i += 1;
            }
        }
        chart[n].iter().any(|&(r, a, dot, origin)| {
            r == start && origin == 0 && dot == self.alternatives[r][a].len()
        })
    }
}

fn matches_token(sym: &Symbol, tok: &Token) -> bool {
    match (sym, tok) {
        (Symbol::Terminal(t), Token::Lit(w)) => t == w,
        (Symbol::Word, Token::Lit(w)) => is_word(w),
        (Symbol::Quoted, Token::Quoted(_)) => true,
        _ => false,
    }
}

fn is_word(w: &str) -> bool {
    let mut chars = w.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase())
        && chars.all(|c| c.is_ascii_lowercase() || c == '-')
        && !EXCLUDED_WORDS.contains(&w)
}

/// Splits prompt text into words, the punctuation marks `, . ?` and quoted
/// spans.
pub fn tokenize(text: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    while let Some(&c) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
        } else if c == '"' {
            chars.next();
            let mut s = String::new();
            loop {
                match chars.next() {
                    Some('"') => break,
                    Some(ch) => s.push(ch),
                    None => return Err(Error::invalid(format!("unterminated quote in '{text}'"))),
                }
            }
            out.push(Token::Quoted(s));
        } else if matches!(c, ',' | '.' | '?') {
            chars.next();
            out.push(Token::Lit(c.to_string()));
        } else {
            let mut w = String::new();
            while let Some(&ch) = chars.peek() {
                if ch.is_whitespace() || matches!(ch, ',' | '.' | '?' | '"') {
                    break;
                }
                w.push(ch);
                chars.next();
            }
            out.push(Token::Lit(w));
        }
    }
    Ok(out)
}
