//! Pretty-printer for the surface syntax.
//!
//! The printer is the parser's inverse on core ASTs: for any parser output
//! `p`, `parse(print(p))` must equal `p` (the round-trip tests in the parser
//! module and the generated-program tests in `corpus` hold it to that). De
//! Bruijn binders get invented names — `a, b, c, …` for type variables,
//! `x, y, z, …` for term variables — skipping anything that would collide
//! with a global or effect name referenced anywhere in the program, so a
//! regenerated name can never capture a `Global` or shadow an effect.
//!
//! Precedence conventions (mirrored in the parser): type application binds
//! tightest, then `*`, `+`, `->`, all right-associative; binder forms
//! (`forall`, type/term lambda, `thunk`, `handle`, `val`, …) extend
//! maximally to the right.

use std::collections::HashSet;
use std::fmt::Write as _;

use crate::syntax::*;

/// Precedence levels for types, loosest first.
const TY_ARROW: u8 = 0;
const TY_SUM: u8 = 1;
const TY_PROD: u8 = 2;
const TY_APP: u8 = 3;
const TY_ATOM: u8 = 4;

pub struct Printer {
    /// Names that invented binder names must not collide with.
    avoid: HashSet<String>,
    /// Invented names for enclosing type binders, innermost last.
    tyvars: Vec<String>,
    /// Invented names for enclosing term binders, innermost last.
    tmvars: Vec<String>,
    out: String,
}

fn collect_avoid_term(t: &Term, avoid: &mut HashSet<String>) {
    match t {
        Term::Global(n) => {
            avoid.insert(n.clone());
        }
        Term::Var(_) | Term::Tt | Term::Ff | Term::Unit => {}
        Term::Lam(_, b) | Term::TyLam(_, b) | Term::Fst(b) | Term::Snd(b) => {
            collect_avoid_term(b, avoid)
        }
        Term::Inl(_, b) | Term::Inr(_, b) | Term::Absurd(_, b) => collect_avoid_term(b, avoid),
        Term::TyApp(f, _) => collect_avoid_term(f, avoid),
        Term::App(f, a) | Term::Pair(f, a) => {
            collect_avoid_term(f, avoid);
            collect_avoid_term(a, avoid);
        }
        Term::Ite(c, t1, t2) => {
            collect_avoid_term(c, avoid);
            collect_avoid_term(t1, avoid);
            collect_avoid_term(t2, avoid);
        }
        Term::Case(s, l, r) => {
            collect_avoid_term(s, avoid);
            collect_avoid_term(l, avoid);
            collect_avoid_term(r, avoid);
        }
        Term::Thunk(_, c) | Term::PThunk(_, c) => collect_avoid_comp(c, avoid),
        Term::Handle(h, c) => {
            avoid.insert(h.clone());
            collect_avoid_comp(c, avoid);
        }
    }
}

fn collect_avoid_comp(c: &Comp, avoid: &mut HashSet<String>) {
    match &c.node {
        CompNode::Val(t) => collect_avoid_term(t, avoid),
        CompNode::Force(t) => collect_avoid_term(t, avoid),
        CompNode::LetIn(_, a, b) => {
            collect_avoid_comp(a, avoid);
            collect_avoid_comp(b, avoid);
        }
        CompNode::Op(t, _, k) => {
            collect_avoid_term(t, avoid);
            collect_avoid_comp(k, avoid);
        }
        CompNode::Fix(b) => collect_avoid_comp(b, avoid),
    }
}

impl Printer {
    fn new(avoid: HashSet<String>) -> Self {
        Printer {
            avoid,
            tyvars: Vec::new(),
            tmvars: Vec::new(),
            out: String::new(),
        }
    }

    fn fresh(&self, pool: &[char], taken: &[String]) -> String {
        for round in 0.. {
            for &c in pool {
                let cand = if round == 0 {
                    c.to_string()
                } else {
                    format!("{c}{round}")
                };
                if !self.avoid.contains(&cand) && !taken.contains(&cand) {
                    return cand;
                }
            }
        }
        unreachable!()
    }

    fn fresh_tyvar(&self) -> String {
        self.fresh(&['a', 'b', 'c', 'd', 'e', 'f', 'g'], &self.tyvars)
    }

    fn fresh_tmvar(&self) -> String {
        self.fresh(
            &[
                'x', 'y', 'z', 'u', 'v', 'w', 's', 'k', 'm', 'n', 'p', 'q', 'r',
            ],
            &self.tmvars,
        )
    }

    fn kind(&mut self, k: &Kind, atomic: bool) {
        match k {
            Kind::Ty => self.out.push_str("Ty"),
            Kind::Arrow(a, b) => {
                if atomic {
                    self.out.push('(');
                }
                self.kind(a, true);
                self.out.push_str(" -> ");
                self.kind(b, false);
                if atomic {
                    self.out.push(')');
                }
            }
        }
    }

    fn ty(&mut self, t: &TypeExpr, prec: u8) {
        use TypeExpr::*;
        match t {
            TVar(i) => {
                if *i < self.tyvars.len() {
                    let name = self.tyvars[self.tyvars.len() - 1 - i].clone();
                    self.out.push_str(&name);
                } else {
                    // Open type; printed for diagnostics only.
                    let _ = write!(self.out, "?t{}", i - self.tyvars.len());
                }
            }
            TUnit => self.out.push_str("Unit"),
            TBool => self.out.push_str("Bool"),
            TEmpty => self.out.push_str("Empty"),
            TConst(n) => self.out.push_str(n),
            TArrow(a, b) => {
                if prec > TY_ARROW {
                    self.out.push('(');
                }
                self.ty(a, TY_SUM);
                self.out.push_str(" -> ");
                self.ty(b, TY_ARROW);
                if prec > TY_ARROW {
                    self.out.push(')');
                }
            }
            TSum(a, b) => {
                if prec > TY_SUM {
                    self.out.push('(');
                }
                self.ty(a, TY_PROD);
                self.out.push_str(" + ");
                self.ty(b, TY_SUM);
                if prec > TY_SUM {
                    self.out.push(')');
                }
            }
            TProd(a, b) => {
                if prec > TY_PROD {
                    self.out.push('(');
                }
                self.ty(a, TY_APP);
                self.out.push_str(" * ");
                self.ty(b, TY_PROD);
                if prec > TY_PROD {
                    self.out.push(')');
                }
            }
            TApp(f, a) => {
                if prec > TY_APP {
                    self.out.push('(');
                }
                self.ty(f, TY_APP);
                self.out.push(' ');
                self.ty(a, TY_ATOM);
                if prec > TY_APP {
                    self.out.push(')');
                }
            }
            TTh(e, a) | TPTh(e, a) => {
                if prec > TY_APP {
                    self.out.push('(');
                }
                self.out.push_str(if matches!(t, TTh(_, _)) {
                    "Th "
                } else {
                    "PTh "
                });
                self.out.push_str(e);
                self.out.push(' ');
                self.ty(a, TY_ATOM);
                if prec > TY_APP {
                    self.out.push(')');
                }
            }
            TForall(k, b) => {
                if prec > TY_ARROW {
                    self.out.push('(');
                }
                let name = self.fresh_tyvar();
                let _ = write!(self.out, "forall ({name} : ");
                self.kind(k, false);
                self.out.push_str("). ");
                self.tyvars.push(name);
                self.ty(b, TY_ARROW);
                self.tyvars.pop();
                if prec > TY_ARROW {
                    self.out.push(')');
                }
            }
            TLam(k, b) => {
                if prec > TY_ARROW {
                    self.out.push('(');
                }
                let name = self.fresh_tyvar();
                let _ = write!(self.out, "\\({name} : ");
                self.kind(k, false);
                self.out.push_str("). ");
                self.tyvars.push(name);
                self.ty(b, TY_ARROW);
                self.tyvars.pop();
                if prec > TY_ARROW {
                    self.out.push(')');
                }
            }
        }
    }

    /// Print a term at statement level (binders extend right, applications
    /// unparenthesized).
    fn term(&mut self, t: &Term) {
        use Term::*;
        match t {
            Lam(ann, b) => {
                let name = self.fresh_tmvar();
                let _ = write!(self.out, "\\({name} : ");
                self.ty(ann, TY_ARROW);
                self.out.push_str("). ");
                self.tmvars.push(name);
                self.term(b);
                self.tmvars.pop();
            }
            TyLam(k, b) => {
                let name = self.fresh_tyvar();
                let _ = write!(self.out, "/\\({name} : ");
                self.kind(k, false);
                self.out.push_str("). ");
                self.tyvars.push(name);
                self.term(b);
                self.tyvars.pop();
            }
            Thunk(_, c) => {
                self.out.push_str("thunk ");
                self.comp(c);
            }
            PThunk(_, c) => {
                self.out.push_str("pthunk ");
                self.comp(c);
            }
            Handle(h, c) => {
                let _ = write!(self.out, "handle {h} ");
                self.comp(c);
            }
            _ => self.term_app(t),
        }
    }

    /// Application level: left-nested spines, special heads (`fst`, `ite`,
    /// injections) take atomic arguments.
    fn term_app(&mut self, t: &Term) {
        use Term::*;
        match t {
            App(f, a) => {
                self.term_app(f);
                self.out.push(' ');
                self.term_atom(a);
            }
            TyApp(f, ty) => {
                self.term_app(f);
                self.out.push_str(" [");
                self.ty(ty, TY_ARROW);
                self.out.push(']');
            }
            Ite(c, u, v) => {
                self.out.push_str("ite ");
                self.term_atom(c);
                self.out.push(' ');
                self.term_atom(u);
                self.out.push(' ');
                self.term_atom(v);
            }
            Fst(a) => {
                self.out.push_str("fst ");
                self.term_atom(a);
            }
            Snd(a) => {
                self.out.push_str("snd ");
                self.term_atom(a);
            }
            Inl(ty, a) => {
                self.out.push_str("inl[");
                self.ty(ty, TY_ARROW);
                self.out.push_str("] ");
                self.term_atom(a);
            }
            Inr(ty, a) => {
                self.out.push_str("inr[");
                self.ty(ty, TY_ARROW);
                self.out.push_str("] ");
                self.term_atom(a);
            }
            Absurd(ty, a) => {
                self.out.push_str("absurd[");
                self.ty(ty, TY_ARROW);
                self.out.push_str("] ");
                self.term_atom(a);
            }
            _ => self.term_atom(t),
        }
    }

    fn term_atom(&mut self, t: &Term) {
        use Term::*;
        match t {
            Var(i) => {
                if *i < self.tmvars.len() {
                    let name = self.tmvars[self.tmvars.len() - 1 - i].clone();
                    self.out.push_str(&name);
                } else {
                    let _ = write!(self.out, "?v{}", i - self.tmvars.len());
                }
            }
            Global(n) => self.out.push_str(n),
            Tt => self.out.push_str("tt"),
            Ff => self.out.push_str("ff"),
            Unit => self.out.push_str("()"),
            Pair(a, b) => {
                self.out.push('(');
                self.term(a);
                self.out.push_str(", ");
                self.term(b);
                self.out.push(')');
            }
            Case(s, l, r) => {
                self.out.push_str("case ");
                self.term_atom(s);
                self.out.push_str(" { inl ");
                let ln = self.fresh_tmvar();
                self.out.push_str(&ln);
                self.out.push_str(" -> ");
                self.tmvars.push(ln);
                self.term(l);
                self.tmvars.pop();
                self.out.push_str(" ; inr ");
                let rn = self.fresh_tmvar();
                self.out.push_str(&rn);
                self.out.push_str(" -> ");
                self.tmvars.push(rn);
                self.term(r);
                self.tmvars.pop();
                self.out.push_str(" }");
            }
            _ => {
                self.out.push('(');
                self.term(t);
                self.out.push(')');
            }
        }
    }

    fn comp(&mut self, c: &Comp) {
        match &c.node {
            CompNode::Val(t) => {
                self.out.push_str("val ");
                self.term(t);
            }
            CompNode::LetIn(ann, bound, body) => {
                let name = self.fresh_tmvar();
                let _ = write!(self.out, "let {name}");
                if let Some(a) = ann {
                    self.out.push_str(" : ");
                    self.ty(a, TY_ARROW);
                }
                self.out.push_str(" = ");
                self.comp_atom(bound);
                self.out.push_str(" in ");
                self.tmvars.push(name);
                self.comp(body);
                self.tmvars.pop();
            }
            CompNode::Op(t, ann, k) => {
                self.out.push_str("op ");
                self.term_atom(t);
                let name = self.fresh_tmvar();
                let _ = write!(self.out, " ({name}");
                if let Some(a) = ann {
                    self.out.push_str(" : ");
                    self.ty(a, TY_ARROW);
                }
                self.out.push_str(". ");
                self.tmvars.push(name);
                self.comp(k);
                self.tmvars.pop();
                self.out.push(')');
            }
            CompNode::Force(t) => {
                self.out.push_str("force ");
                self.term_app(t);
            }
            CompNode::Fix(b) => {
                let name = self.fresh_tmvar();
                let _ = write!(self.out, "fix ({name}. ");
                self.tmvars.push(name);
                self.comp(b);
                self.tmvars.pop();
                self.out.push(')');
            }
        }
    }

    /// A computation in a position where a following keyword (`in`) would
    /// otherwise be swallowed: parenthesize the forms that extend right.
    fn comp_atom(&mut self, c: &Comp) {
        match &c.node {
            CompNode::LetIn(..) | CompNode::Fix(..) | CompNode::Op(..) => {
                // `fix`/`op` already emit their own parens; `let` needs them.
                if matches!(c.node, CompNode::LetIn(..)) {
                    self.out.push('(');
                    self.comp(c);
                    self.out.push(')');
                } else {
                    self.comp(c);
                }
            }
            CompNode::Val(t) => {
                self.out.push_str("val ");
                self.term_app(t);
            }
            CompNode::Force(t) => {
                self.out.push_str("force ");
                self.term_app(t);
            }
        }
    }
}

/// Render one type (mostly for error messages); binder names are invented.
pub fn print_type(t: &TypeExpr) -> String {
    let mut p = Printer::new(HashSet::new());
    p.ty(t, TY_ARROW);
    p.out
}

/// Render one kind.
pub fn print_kind(k: &Kind) -> String {
    let mut p = Printer::new(HashSet::new());
    p.kind(k, false);
    p.out
}

/// Render one term as surface syntax.
pub fn print_term(t: &Term) -> String {
    let mut avoid = HashSet::new();
    collect_avoid_term(t, &mut avoid);
    let mut p = Printer::new(avoid);
    p.term(t);
    p.out
}

/// Render one computation as surface syntax.
pub fn print_comp(c: &Comp) -> String {
    let mut avoid = HashSet::new();
    collect_avoid_comp(c, &mut avoid);
    let mut p = Printer::new(avoid);
    p.comp(c);
    p.out
}

/// Render a whole program. Inverse of `parse_program` up to whitespace:
/// re-parsing the output yields the same core AST.
pub fn print_program(prog: &Program) -> String {
    let mut avoid: HashSet<String> = HashSet::new();
    for item in &prog.items {
        if let Some(n) = item.name() {
            avoid.insert(n.to_string());
        }
    }
    for item in &prog.items {
        match item {
            Item::TypeDef { .. } => {}
            Item::EffectDef { decl, .. } => {
                collect_avoid_term(&decl.hfmap, &mut avoid);
                collect_avoid_term(&decl.hmap, &mut avoid);
            }
            Item::TermDef { body, .. } => collect_avoid_term(body, &mut avoid),
            Item::HandlerDef { handler, .. } => {
                collect_avoid_term(&handler.ret, &mut avoid);
                collect_avoid_term(&handler.bind, &mut avoid);
                collect_avoid_term(&handler.malg, &mut avoid);
            }
            Item::Main { comp, .. } => collect_avoid_comp(comp, &mut avoid),
        }
    }

    let mut out = String::new();
    for (idx, item) in prog.items.iter().enumerate() {
        if idx > 0 {
            out.push('\n');
        }
        let mut p = Printer::new(avoid.clone());
        match item {
            Item::TypeDef {
                name, kind, body, ..
            } => {
                let _ = write!(p.out, "type {name} : ");
                p.kind(kind, false);
                p.out.push_str(" = ");
                p.ty(body, TY_ARROW);
            }
            Item::EffectDef { decl, .. } => {
                let _ = write!(p.out, "effect {} = hfunctor {{\n  carrier = ", decl.name);
                p.ty(&decl.carrier, TY_ARROW);
                p.out.push_str(";\n  hfmap = ");
                p.term(&decl.hfmap);
                p.out.push_str(";\n  hmap = ");
                p.term(&decl.hmap);
                p.out.push_str("\n}");
            }
            Item::TermDef { name, ty, body, .. } => {
                let _ = write!(p.out, "term {name} : ");
                p.ty(ty, TY_ARROW);
                p.out.push_str(" = ");
                p.term(body);
            }
            Item::HandlerDef { name, handler, .. } => {
                let _ = write!(p.out, "handler {name} for {} {{\n  M = ", handler.effect);
                p.ty(&handler.monad, TY_ARROW);
                p.out.push_str(";\n  ret = ");
                p.term(&handler.ret);
                p.out.push_str(";\n  bind = ");
                p.term(&handler.bind);
                p.out.push_str(";\n  malg = ");
                p.term(&handler.malg);
                p.out.push_str("\n}");
                if let Some(f) = &handler.via {
                    p.out.push_str(" via ");
                    p.ty(f, TY_ATOM);
                }
            }
            Item::Main {
                mode,
                effect,
                ty,
                comp,
                ..
            } => {
                let _ = write!(p.out, "main[{mode}] {effect} : ");
                p.ty(ty, TY_ARROW);
                p.out.push_str(" = ");
                p.comp(comp);
            }
        }
        out.push_str(&p.out);
        out.push('\n');
    }
    out
}
