//! The untyped lambda calculus target: terms, a budgeted normal-order
//! normalizer, Church-boolean decoding, and a concrete syntax for `.lam`
//! files.
//!
//! Extraction erases all types, so everything downstream of it lives here.
//! The normalizer is β-only (no η) and leftmost-outermost, which is the
//! strategy that finds a normal form whenever one exists — important because
//! extracted fixpoints are Curry's Y, and only normal order can discard an
//! unfolded recursive occurrence sitting in a dead branch.
//!
//! Head reduction is a loop over an explicit application spine, not Rust
//! recursion: a divergent term like `(\x. x x) (\x. x x)` must burn through
//! a million-step budget and return `BudgetExceeded` without touching the
//! process stack.

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

/// Untyped lambda terms, de Bruijn indexed. `Const` is a free constant:
/// decoding applies a term to fresh constants and looks at where they end
/// up, and parsing maps unbound identifiers here so `.lam` files can mention
/// opaque atoms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LamTerm {
    Var(usize),
    Lam(Box<LamTerm>),
    App(Box<LamTerm>, Box<LamTerm>),
    Const(String),
}

impl LamTerm {
    pub fn lam(b: LamTerm) -> LamTerm {
        LamTerm::Lam(Box::new(b))
    }
    pub fn app(f: LamTerm, a: LamTerm) -> LamTerm {
        LamTerm::App(Box::new(f), Box::new(a))
    }
    pub fn apps(f: LamTerm, args: impl IntoIterator<Item = LamTerm>) -> LamTerm {
        args.into_iter().fold(f, LamTerm::app)
    }
    pub fn cst(n: impl Into<String>) -> LamTerm {
        LamTerm::Const(n.into())
    }

    /// Number of AST nodes; used by tests to bound size growth.
    pub fn size(&self) -> usize {
        match self {
            LamTerm::Var(_) | LamTerm::Const(_) => 1,
            LamTerm::Lam(b) => 1 + b.size(),
            LamTerm::App(f, a) => 1 + f.size() + a.size(),
        }
    }

    fn consts_into(&self, out: &mut HashSet<String>) {
        match self {
            LamTerm::Var(_) => {}
            LamTerm::Const(n) => {
                out.insert(n.clone());
            }
            LamTerm::Lam(b) => b.consts_into(out),
            LamTerm::App(f, a) => {
                f.consts_into(out);
                a.consts_into(out);
            }
        }
    }

    /// All free constants mentioned in the term.
    pub fn consts(&self) -> HashSet<String> {
        let mut out = HashSet::new();
        self.consts_into(&mut out);
        out
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LamError {
    #[error("beta-reduction budget exhausted after {spent} steps")]
    BudgetExceeded { spent: u64 },
    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
}

fn shift(t: &LamTerm, cutoff: usize, d: isize) -> LamTerm {
    match t {
        LamTerm::Var(i) => {
            if *i < cutoff {
                LamTerm::Var(*i)
            } else {
                LamTerm::Var((*i as isize + d) as usize)
            }
        }
        LamTerm::Const(n) => LamTerm::Const(n.clone()),
        LamTerm::Lam(b) => LamTerm::lam(shift(b, cutoff + 1, d)),
        LamTerm::App(f, a) => LamTerm::app(shift(f, cutoff, d), shift(a, cutoff, d)),
    }
}

/// Instantiate the outermost binder of `body` with `arg` (strips the
/// binder; same convention as the typed syntax).
fn subst_top(body: &LamTerm, arg: &LamTerm) -> LamTerm {
    fn go(t: &LamTerm, arg: &LamTerm, depth: usize) -> LamTerm {
        match t {
            LamTerm::Var(i) => {
                if *i == depth {
                    shift(arg, 0, depth as isize)
                } else if *i > depth {
                    LamTerm::Var(i - 1)
                } else {
                    LamTerm::Var(*i)
                }
            }
            LamTerm::Const(n) => LamTerm::Const(n.clone()),
            LamTerm::Lam(b) => LamTerm::lam(go(b, arg, depth + 1)),
            LamTerm::App(f, a) => LamTerm::app(go(f, arg, depth), go(a, arg, depth)),
        }
    }
    go(body, arg, 0)
}

/// Reduce to weak head normal form: pop the application spine, contract
/// head β-redexes, stop at a lambda (with empty spine), variable, or
/// constant head. Iterative so a divergent head only costs budget.
fn whnf(t: LamTerm, budget: &mut u64, spent: &mut u64) -> Result<LamTerm, LamError> {
    let mut head = t;
    let mut spine: Vec<LamTerm> = Vec::new();
    loop {
        match head {
            LamTerm::App(f, a) => {
                spine.push(*a);
                head = *f;
            }
            LamTerm::Lam(b) => {
                if let Some(arg) = spine.pop() {
                    if *budget == 0 {
                        return Err(LamError::BudgetExceeded { spent: *spent });
                    }
                    *budget -= 1;
                    *spent += 1;
                    head = subst_top(&b, &arg);
                } else {
                    head = LamTerm::Lam(b);
                    break;
                }
            }
            LamTerm::Var(_) | LamTerm::Const(_) => break,
        }
    }
    Ok(spine.into_iter().rev().fold(head, LamTerm::app))
}

fn normalize_inner(t: LamTerm, budget: &mut u64, spent: &mut u64) -> Result<LamTerm, LamError> {
    match whnf(t, budget, spent)? {
        LamTerm::Lam(b) => Ok(LamTerm::lam(normalize_inner(*b, budget, spent)?)),
        LamTerm::App(f, a) => {
            // After whnf the head of `f` is a variable or constant, so no
            // new β-redex can appear at this level; normalize the pieces.
            let f = normalize_inner(*f, budget, spent)?;
            let a = normalize_inner(*a, budget, spent)?;
            Ok(LamTerm::app(f, a))
        }
        atom => Ok(atom),
    }
}

/// Normalize under a β-step budget, leftmost-outermost. Returns the normal
/// form, or `BudgetExceeded` carrying the number of steps actually taken.
pub fn normalize(t: &LamTerm, budget: u64) -> Result<LamTerm, LamError> {
    let mut remaining = budget;
    let mut spent = 0;
    normalize_inner(t.clone(), &mut remaining, &mut spent)
}

fn gensym(avoid: &HashSet<String>, hint: &str) -> String {
    if !avoid.contains(hint) {
        return hint.to_string();
    }
    for k in 0.. {
        let cand = format!("{hint}{k}");
        if !avoid.contains(&cand) {
            return cand;
        }
    }
    unreachable!()
}

/// Decide whether a closed term denotes a Church boolean: apply it to two
/// constants fresh for the term, normalize, and see which one comes back.
/// `Ok(None)` means the normal form was something else entirely.
pub fn decode_bool(t: &LamTerm, budget: u64) -> Result<Option<bool>, LamError> {
    let used = t.consts();
    let tname = gensym(&used, "qtrue");
    let fname = gensym(&used, "qfalse");
    let probe = LamTerm::apps(t.clone(), [LamTerm::cst(&tname), LamTerm::cst(&fname)]);
    let nf = normalize(&probe, budget)?;
    Ok(match nf {
        LamTerm::Const(n) if n == tname => Some(true),
        LamTerm::Const(n) if n == fname => Some(false),
        _ => None,
    })
}

fn has_free(t: &LamTerm, idx: usize) -> bool {
    match t {
        LamTerm::Var(i) => *i == idx,
        LamTerm::Const(_) => false,
        LamTerm::Lam(b) => has_free(b, idx + 1),
        LamTerm::App(f, a) => has_free(f, idx) || has_free(a, idx),
    }
}

/// Read a β-normal form back as a first-order value, using the encodings
/// extraction emits: booleans are Church, `()` is the identity, pairs take a
/// selector (`\s. s a b`), injections take two continuations (`\l. \r. l a`).
/// The rendering matches the evaluator's, so the two backends can be compared
/// textually. `None` means the shape is not one of these — a function result,
/// an open term, a constant. The encodings overlap on purpose-built
/// higher-order terms (`\x. x` *is* the unit value), so callers should only
/// decode results they know to be first-order.
pub fn decode_value(nf: &LamTerm) -> Option<String> {
    fn atom(s: String) -> String {
        if s.starts_with("inl") || s.starts_with("inr") {
            format!("({s})")
        } else {
            s
        }
    }
    match nf {
        LamTerm::Lam(b) => match &**b {
            LamTerm::Var(0) => Some("()".into()),
            LamTerm::Lam(bb) => match &**bb {
                LamTerm::Var(1) => Some("tt".into()),
                LamTerm::Var(0) => Some("ff".into()),
                LamTerm::App(f, a)
                    if !has_free(a, 0) && !has_free(a, 1) && matches!(**f, LamTerm::Var(0 | 1)) =>
                {
                    let payload = decode_value(&shift(a, 0, -2))?;
                    let tag = if matches!(**f, LamTerm::Var(1)) {
                        "inl"
                    } else {
                        "inr"
                    };
                    Some(format!("{tag} {}", atom(payload)))
                }
                _ => None,
            },
            LamTerm::App(fa, b2) => match &**fa {
                LamTerm::App(f, a)
                    if matches!(**f, LamTerm::Var(0)) && !has_free(a, 0) && !has_free(b2, 0) =>
                {
                    let left = decode_value(&shift(a, 0, -1))?;
                    let right = decode_value(&shift(b2, 0, -1))?;
                    Some(format!("({left}, {right})"))
                }
                _ => None,
            },
            _ => None,
        },
        _ => None,
    }
}

// ---------------------------------------------------------------------------
// Concrete syntax.
//
//   term  ::= '\' IDENT '.' term | app
//   app   ::= atom+
//   atom  ::= IDENT | '(' term ')'
//
// Bound identifiers resolve innermost-first; unbound ones become constants.
// `--` starts a line comment. `print_lam` invents bound names (a, b, …,
// then v0, v1, …) avoiding the term's constants, so parse ∘ print is the
// identity on closed-up-to-constants terms.
// ---------------------------------------------------------------------------

struct LamParser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> LamParser<'a> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T, LamError> {
        Err(LamError::Parse {
            pos: self.pos,
            msg: msg.into(),
        })
    }

    fn skip_ws(&mut self) {
        loop {
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
                self.pos += 1;
            }
            if self.src[self.pos..].starts_with(b"--") {
                while self.pos < self.src.len() && self.src[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else {
                return;
            }
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn ident(&mut self) -> Option<String> {
        self.skip_ws();
        let start = self.pos;
        let mut end = start;
        if end < self.src.len() && (self.src[end].is_ascii_alphabetic()) {
            end += 1;
            while end < self.src.len()
                && (self.src[end].is_ascii_alphanumeric()
                    || self.src[end] == b'_'
                    || self.src[end] == b'\'')
            {
                end += 1;
            }
            self.pos = end;
            Some(String::from_utf8_lossy(&self.src[start..end]).into_owned())
        } else {
            None
        }
    }

    fn term(&mut self, env: &mut Vec<String>) -> Result<LamTerm, LamError> {
        if self.peek() == Some(b'\\') {
            self.pos += 1;
            let Some(name) = self.ident() else {
                return self.err("expected a binder name after '\\'");
            };
            if self.peek() != Some(b'.') {
                return self.err("expected '.' after binder");
            }
            self.pos += 1;
            env.push(name);
            let body = self.term(env)?;
            env.pop();
            Ok(LamTerm::lam(body))
        } else {
            self.app(env)
        }
    }

    fn app(&mut self, env: &mut Vec<String>) -> Result<LamTerm, LamError> {
        let mut acc = match self.atom(env)? {
            Some(t) => t,
            None => return self.err("expected a term"),
        };
        while let Some(next) = self.atom(env)? {
            acc = LamTerm::app(acc, next);
        }
        Ok(acc)
    }

    fn atom(&mut self, env: &mut Vec<String>) -> Result<Option<LamTerm>, LamError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let t = self.term(env)?;
                if self.peek() != Some(b')') {
                    return self.err("expected ')'");
                }
                self.pos += 1;
                Ok(Some(t))
            }
            Some(c) if c.is_ascii_alphabetic() => {
                let name = self.ident().expect("peeked alphabetic");
                match env.iter().rev().position(|b| *b == name) {
                    Some(i) => Ok(Some(LamTerm::Var(i))),
                    None => Ok(Some(LamTerm::Const(name))),
                }
            }
            _ => Ok(None),
        }
    }
}

/// Parse the `.lam` concrete syntax. Unbound identifiers become constants.
pub fn parse_lam(src: &str) -> Result<LamTerm, LamError> {
    let mut p = LamParser {
        src: src.as_bytes(),
        pos: 0,
    };
    let t = p.term(&mut Vec::new())?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return p.err("trailing input after term");
    }
    Ok(t)
}

fn pick_name(depth: usize, avoid: &HashSet<String>) -> String {
    // a, b, …, z, then v0, v1, …; skip anything that would capture a
    // constant.
    let hint = if depth < 26 {
        ((b'a' + depth as u8) as char).to_string()
    } else {
        format!("v{}", depth - 26)
    };
    gensym(avoid, &hint)
}

fn print_inner(t: &LamTerm, names: &mut Vec<String>, avoid: &HashSet<String>, out: &mut String) {
    match t {
        LamTerm::Var(i) => {
            if *i < names.len() {
                out.push_str(&names[names.len() - 1 - i]);
            } else {
                // Open term; not produced by extraction, but keep printing
                // total for debugging.
                out.push('#');
                out.push_str(&(i - names.len()).to_string());
            }
        }
        LamTerm::Const(n) => out.push_str(n),
        LamTerm::Lam(b) => {
            let name = pick_name(names.len(), avoid);
            out.push('\\');
            out.push_str(&name);
            out.push_str(". ");
            names.push(name);
            print_inner(b, names, avoid, out);
            names.pop();
        }
        LamTerm::App(f, a) => {
            // Left operand: parenthesize lambdas. Right operand:
            // parenthesize lambdas and applications.
            match **f {
                LamTerm::Lam(_) => {
                    out.push('(');
                    print_inner(f, names, avoid, out);
                    out.push(')');
                }
                _ => print_inner(f, names, avoid, out),
            }
            out.push(' ');
            match **a {
                LamTerm::Lam(_) | LamTerm::App(_, _) => {
                    out.push('(');
                    print_inner(a, names, avoid, out);
                    out.push(')');
                }
                _ => print_inner(a, names, avoid, out),
            }
        }
    }
}

/// Render a term in the `.lam` concrete syntax with invented bound names.
pub fn print_lam(t: &LamTerm) -> String {
    let avoid = t.consts();
    let mut out = String::new();
    print_inner(t, &mut Vec::new(), &avoid, &mut out);
    out
}

impl fmt::Display for LamTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&print_lam(self))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn church(n: usize) -> LamTerm {
        // \f. \x. f (f ... x)
        let mut body = LamTerm::Var(0);
        for _ in 0..n {
            body = LamTerm::app(LamTerm::Var(1), body);
        }
        LamTerm::lam(LamTerm::lam(body))
    }

    #[test]
    fn normalizes_church_arithmetic() {
        // plus = \m. \n. \f. \x. m f (n f x)
        let plus = LamTerm::lam(LamTerm::lam(LamTerm::lam(LamTerm::lam(LamTerm::app(
            LamTerm::app(LamTerm::Var(3), LamTerm::Var(1)),
            LamTerm::app(
                LamTerm::app(LamTerm::Var(2), LamTerm::Var(1)),
                LamTerm::Var(0),
            ),
        )))));
        let sum = LamTerm::apps(plus, [church(2), church(3)]);
        assert_eq!(normalize(&sum, 1000).unwrap(), church(5));
    }

    #[test]
    fn normal_order_discards_divergent_dead_code() {
        // (\x. \y. y) omega  →  \y. y   even though omega diverges.
        let omega_half = LamTerm::lam(LamTerm::app(LamTerm::Var(0), LamTerm::Var(0)));
        let omega = LamTerm::app(omega_half.clone(), omega_half);
        let k_ish = LamTerm::lam(LamTerm::lam(LamTerm::Var(0)));
        let t = LamTerm::app(k_ish, omega);
        assert_eq!(normalize(&t, 100).unwrap(), LamTerm::lam(LamTerm::Var(0)));
    }

    #[test]
    fn omega_exhausts_budget_without_overflowing() {
        let omega_half = LamTerm::lam(LamTerm::app(LamTerm::Var(0), LamTerm::Var(0)));
        let omega = LamTerm::app(omega_half.clone(), omega_half);
        match normalize(&omega, 1_000_000) {
            Err(LamError::BudgetExceeded { spent }) => assert_eq!(spent, 1_000_000),
            other => panic!("expected budget exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn decodes_church_booleans() {
        let tt = LamTerm::lam(LamTerm::lam(LamTerm::Var(1)));
        let ff = LamTerm::lam(LamTerm::lam(LamTerm::Var(0)));
        assert_eq!(decode_bool(&tt, 100).unwrap(), Some(true));
        assert_eq!(decode_bool(&ff, 100).unwrap(), Some(false));
        assert_eq!(decode_bool(&church(2), 100).unwrap(), None);
    }

    #[test]
    fn decode_is_capture_proof() {
        // A term that already mentions constants named like the probes.
        let tricky = LamTerm::lam(LamTerm::lam(LamTerm::cst("qtrue")));
        assert_eq!(decode_bool(&tricky, 100).unwrap(), None);
    }

    #[test]
    fn decodes_first_order_shapes() {
        let tt = LamTerm::lam(LamTerm::lam(LamTerm::Var(1)));
        let ff = LamTerm::lam(LamTerm::lam(LamTerm::Var(0)));
        let unit = LamTerm::lam(LamTerm::Var(0));
        // \s. s ff tt
        let pair = LamTerm::lam(LamTerm::apps(LamTerm::Var(0), [ff.clone(), tt.clone()]));
        // \l. \r. r (\s. s tt tt)
        let inner = LamTerm::lam(LamTerm::apps(LamTerm::Var(0), [tt.clone(), tt.clone()]));
        let inr = LamTerm::lam(LamTerm::lam(LamTerm::app(LamTerm::Var(0), inner)));
        assert_eq!(decode_value(&tt).as_deref(), Some("tt"));
        assert_eq!(decode_value(&unit).as_deref(), Some("()"));
        assert_eq!(decode_value(&pair).as_deref(), Some("(ff, tt)"));
        assert_eq!(decode_value(&inr).as_deref(), Some("inr (tt, tt)"));
        // A continuation that actually uses its binder is not a value.
        assert_eq!(decode_value(&parse_lam(r"\x. \y. y x").unwrap()), None);
        assert_eq!(decode_value(&LamTerm::cst("stuck")), None);
    }

    #[test]
    fn parse_print_roundtrip() {
        let cases = [
            church(0),
            church(3),
            LamTerm::lam(LamTerm::lam(LamTerm::Var(1))),
            LamTerm::app(
                LamTerm::lam(LamTerm::Var(0)),
                LamTerm::app(LamTerm::cst("g"), LamTerm::cst("h")),
            ),
            LamTerm::lam(LamTerm::app(
                LamTerm::Var(0),
                LamTerm::lam(LamTerm::app(LamTerm::Var(0), LamTerm::Var(1))),
            )),
        ];
        for t in cases {
            let printed = print_lam(&t);
            let back = parse_lam(&printed).unwrap_or_else(|e| panic!("{printed}: {e}"));
            assert_eq!(back, t, "through {printed}");
        }
    }

    #[test]
    fn parser_resolves_shadowing_innermost_first() {
        let t = parse_lam(r"\x. \x. x").unwrap();
        assert_eq!(t, LamTerm::lam(LamTerm::lam(LamTerm::Var(0))));
        let free = parse_lam(r"\x. y x").unwrap();
        assert_eq!(
            free,
            LamTerm::lam(LamTerm::app(LamTerm::cst("y"), LamTerm::Var(0)))
        );
    }

    #[test]
    fn parser_reports_errors_with_positions() {
        match parse_lam(r"\x x") {
            Err(LamError::Parse { pos, .. }) => assert_eq!(pos, 3),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(parse_lam("(a b").is_err());
        assert!(parse_lam("a b) c").is_err());
    }

    #[test]
    fn printer_avoids_capturing_constants() {
        // \?. a  where `a` is a constant: the binder must not be named `a`.
        let t = LamTerm::lam(LamTerm::cst("a"));
        let printed = print_lam(&t);
        let back = parse_lam(&printed).unwrap();
        assert_eq!(back, t, "through {printed}");
    }
}
