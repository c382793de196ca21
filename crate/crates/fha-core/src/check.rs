//! Kinds, types, and the bidirectional checker.
//!
//! Every binder in the surface language is annotated, so checking is
//! syntax-directed and the real work is deciding *type equality*. Types
//! here form a simply-kinded lambda calculus (constructors of kind
//! `Ty -> Ty` appear in effect carriers and handler monads), so equality
//! is beta-eta conversion, not syntactic identity: a handler whose monad is
//! `Maybe` must be usable where `\(a : Ty). Unit + a` is expected.
//!
//! We decide it by normalization-by-evaluation: evaluate the type into a
//! small semantic domain (closures for binders, spines for stuck
//! applications), then read back a beta-normal form, eta-expanding at every
//! arrow kind so that `F` and `\(a : Ty). F a` read back identically.
//! After `normalize`, equality is `==`. The checker keeps every type it
//! stores — contexts, globals, synthesized results — in normal form, so
//! most comparisons are direct.
//!
//! Two places need more than equality:
//!
//! - `op` without a binder annotation: the operand's type must be the
//!   effect carrier applied to the ambient thunk constructor and to some
//!   result type `A`, and we want to recover `A`. Normal forms make this a
//!   first-order matching problem (the hole has kind `Ty`, so it can only
//!   occur at leaves), solved by `match_type`.
//! - `handle h c` against an expected type: the expected type must be
//!   `M A` for the handler's monad `M`; the same matcher inverts it so the
//!   handled computation can be *checked* (necessary when `c` uses `fix`,
//!   which does not synthesize).
//!
//! Errors are reported against the enclosing declaration's byte span —
//! coarse, but stable under the pretty-printer's whitespace choices.

use std::collections::HashMap;
use std::rc::Rc;

use crate::pretty::{print_kind, print_type};
use crate::stdlib::{fmap_ty, trans_ty};
use crate::syntax::{
    shift_type, subst_type, Comp, CompNode, HandlerExpr, Item, Kind, Mode, Program, Span, Term,
    TypeExpr,
};

/// A checking failure. `render` produces the canonical
/// `file:start-end: error: message` shape, with optional expected/actual
/// lines when there is a concrete pair of types (or kinds) to show.
#[derive(Debug, Clone, thiserror::Error)]
#[error("{msg}")]
pub struct TypeError {
    pub span: Span,
    pub msg: String,
    pub expected: Option<String>,
    pub actual: Option<String>,
}

impl TypeError {
    pub fn render(&self, file: &str) -> String {
        let mut s = format!("{}:{}: error: {}", file, self.span, self.msg);
        if let Some(e) = &self.expected {
            s.push_str("\n  expected: ");
            s.push_str(e);
        }
        if let Some(a) = &self.actual {
            s.push_str("\n  actual: ");
            s.push_str(a);
        }
        s
    }
}

// ---------------------------------------------------------------------------
// Type normalization.
//
// The semantic domain: binders become closures; applications of variables
// stay as spines. Levels (not indices) name free variables so no shifting
// happens during evaluation; `reify` converts back to indices.
// ---------------------------------------------------------------------------

#[derive(Clone)]
enum SType {
    Unit,
    Bool,
    Empty,
    Arrow(Rc<SType>, Rc<SType>),
    Prod(Rc<SType>, Rc<SType>),
    Sum(Rc<SType>, Rc<SType>),
    Th(String, Rc<SType>),
    PTh(String, Rc<SType>),
    Forall(Kind, Clo),
    Lam(Clo),
    Neu(Neu),
}

#[derive(Clone)]
enum Neu {
    Var(usize), // de Bruijn level
    App(Rc<Neu>, Rc<SType>),
}

#[derive(Clone)]
struct Clo {
    env: Env,
    body: TypeExpr,
}

/// Environments map index `i` to `env[env.len() - 1 - i]`.
type Env = Vec<Rc<SType>>;

type Defs = HashMap<String, (Kind, TypeExpr)>;

fn eval_ty(defs: &Defs, env: &Env, ty: &TypeExpr) -> Rc<SType> {
    use TypeExpr::*;
    match ty {
        TVar(i) => env[env.len() - 1 - i].clone(),
        TUnit => Rc::new(SType::Unit),
        TBool => Rc::new(SType::Bool),
        TEmpty => Rc::new(SType::Empty),
        TArrow(a, b) => Rc::new(SType::Arrow(eval_ty(defs, env, a), eval_ty(defs, env, b))),
        TProd(a, b) => Rc::new(SType::Prod(eval_ty(defs, env, a), eval_ty(defs, env, b))),
        TSum(a, b) => Rc::new(SType::Sum(eval_ty(defs, env, a), eval_ty(defs, env, b))),
        TForall(k, b) => Rc::new(SType::Forall(
            k.clone(),
            Clo {
                env: env.clone(),
                body: (**b).clone(),
            },
        )),
        TLam(_, b) => Rc::new(SType::Lam(Clo {
            env: env.clone(),
            body: (**b).clone(),
        })),
        TApp(f, a) => {
            let fv = eval_ty(defs, env, f);
            let av = eval_ty(defs, env, a);
            apply_ty(defs, &fv, av)
        }
        TTh(e, a) => Rc::new(SType::Th(e.clone(), eval_ty(defs, env, a))),
        TPTh(e, a) => Rc::new(SType::PTh(e.clone(), eval_ty(defs, env, a))),
        TConst(n) => {
            let (_, body) = defs
                .get(n)
                .expect("kinding admits only declared type names");
            eval_ty(defs, &Vec::new(), body)
        }
    }
}

fn apply_ty(defs: &Defs, f: &SType, a: Rc<SType>) -> Rc<SType> {
    match f {
        SType::Lam(clo) => {
            let mut env = clo.env.clone();
            env.push(a);
            eval_ty(defs, &env, &clo.body)
        }
        SType::Neu(n) => Rc::new(SType::Neu(Neu::App(Rc::new(n.clone()), a))),
        _ => unreachable!("application head is neither a lambda nor neutral; kinding is broken"),
    }
}

/// Read a semantic type back into syntax, eta-long at `kind`. `var_kinds`
/// records the kind of the variable introduced at each level; neutral spines
/// need it to know at which kind to reify their arguments.
fn reify(defs: &Defs, level: usize, var_kinds: &mut Vec<Kind>, kind: &Kind, v: &SType) -> TypeExpr {
    match kind {
        Kind::Arrow(k1, k2) => {
            let fresh = Rc::new(SType::Neu(Neu::Var(level)));
            let body_v = apply_ty(defs, v, fresh);
            var_kinds.push((**k1).clone());
            let body = reify(defs, level + 1, var_kinds, k2, &body_v);
            var_kinds.pop();
            TypeExpr::lam((**k1).clone(), body)
        }
        Kind::Ty => match v {
            SType::Unit => TypeExpr::TUnit,
            SType::Bool => TypeExpr::TBool,
            SType::Empty => TypeExpr::TEmpty,
            SType::Arrow(a, b) => TypeExpr::arrow(
                reify(defs, level, var_kinds, &Kind::Ty, a),
                reify(defs, level, var_kinds, &Kind::Ty, b),
            ),
            SType::Prod(a, b) => TypeExpr::prod(
                reify(defs, level, var_kinds, &Kind::Ty, a),
                reify(defs, level, var_kinds, &Kind::Ty, b),
            ),
            SType::Sum(a, b) => TypeExpr::sum(
                reify(defs, level, var_kinds, &Kind::Ty, a),
                reify(defs, level, var_kinds, &Kind::Ty, b),
            ),
            SType::Th(e, a) => TypeExpr::th(e.clone(), reify(defs, level, var_kinds, &Kind::Ty, a)),
            SType::PTh(e, a) => {
                TypeExpr::pth(e.clone(), reify(defs, level, var_kinds, &Kind::Ty, a))
            }
            SType::Forall(k, clo) => {
                let mut env = clo.env.clone();
                env.push(Rc::new(SType::Neu(Neu::Var(level))));
                let body_v = eval_ty(defs, &env, &clo.body);
                var_kinds.push(k.clone());
                let body = reify(defs, level + 1, var_kinds, &Kind::Ty, &body_v);
                var_kinds.pop();
                TypeExpr::forall(k.clone(), body)
            }
            SType::Neu(n) => reify_neu(defs, level, var_kinds, n).0,
            SType::Lam(..) => unreachable!("lambda at kind Ty; kinding is broken"),
        },
    }
}

fn reify_neu(defs: &Defs, level: usize, var_kinds: &mut Vec<Kind>, n: &Neu) -> (TypeExpr, Kind) {
    match n {
        Neu::Var(l) => (TypeExpr::TVar(level - 1 - l), var_kinds[*l].clone()),
        Neu::App(f, a) => {
            let (tf, kf) = reify_neu(defs, level, var_kinds, f);
            match kf {
                Kind::Arrow(k1, k2) => {
                    let ta = reify(defs, level, var_kinds, &k1, a);
                    (TypeExpr::app(tf, ta), (*k2).clone())
                }
                Kind::Ty => unreachable!("spine head over-applied; kinding is broken"),
            }
        }
    }
}

// ---------------------------------------------------------------------------
// First-order matching against a normal pattern with one hole of kind Ty.
// ---------------------------------------------------------------------------

/// Does every free variable of `ty` (relative to `depth` local binders) sit
/// at index `>= bound + depth`? Used to reject solutions that would capture
/// binders crossed inside the pattern.
fn all_free_at_least(ty: &TypeExpr, depth: usize, bound: usize) -> bool {
    use TypeExpr::*;
    match ty {
        TVar(i) => *i < depth || *i >= bound + depth,
        TUnit | TBool | TEmpty | TConst(_) => true,
        TArrow(a, b) | TProd(a, b) | TSum(a, b) | TApp(a, b) => {
            all_free_at_least(a, depth, bound) && all_free_at_least(b, depth, bound)
        }
        TForall(_, b) | TLam(_, b) => all_free_at_least(b, depth + 1, bound),
        TTh(_, a) | TPTh(_, a) => all_free_at_least(a, depth, bound),
    }
}

/// Match `pat` against `tgt`, both normal and in the same context, where
/// `TVar(hole)` in the pattern is an unknown. Solutions are recorded in
/// ambient-context indexing; a second occurrence must agree with the first.
/// Returns false on structural mismatch, capture, or conflict.
fn match_type(pat: &TypeExpr, tgt: &TypeExpr, hole: usize, sol: &mut Option<TypeExpr>) -> bool {
    use TypeExpr::*;
    if let TVar(i) = pat {
        if *i == hole {
            if !all_free_at_least(tgt, 0, hole + 1) {
                return false;
            }
            let c = shift_type(tgt, 0, -((hole + 1) as isize));
            return match sol {
                None => {
                    *sol = Some(c);
                    true
                }
                Some(s) => *s == c,
            };
        }
    }
    match (pat, tgt) {
        (TVar(i), TVar(j)) => i == j,
        (TUnit, TUnit) | (TBool, TBool) | (TEmpty, TEmpty) => true,
        (TConst(a), TConst(b)) => a == b,
        (TArrow(a, b), TArrow(c, d))
        | (TProd(a, b), TProd(c, d))
        | (TSum(a, b), TSum(c, d))
        | (TApp(a, b), TApp(c, d)) => match_type(a, c, hole, sol) && match_type(b, d, hole, sol),
        (TForall(k1, a), TForall(k2, b)) | (TLam(k1, a), TLam(k2, b)) => {
            k1 == k2 && match_type(a, b, hole + 1, sol)
        }
        (TTh(e, a), TTh(f, b)) | (TPTh(e, a), TPTh(f, b)) => e == f && match_type(a, b, hole, sol),
        _ => false,
    }
}

// ---------------------------------------------------------------------------
// The checker.
// ---------------------------------------------------------------------------

/// What the checker remembers about a handler when `handle h c` is typed.
#[derive(Clone)]
struct HInfo {
    effect: String,
    monad: TypeExpr, // normalized, closed
    mode: Mode,      // Partial iff the handler has a `via` functor
}

/// Per-scope state: the kinds of type binders, the types of term binders
/// (with the type-binder depth at which each was bound, so lookups shift
/// correctly), and the ambient mode/effect when inside a computation.
struct Cx {
    tyctx: Vec<Kind>,
    tmctx: Vec<(TypeExpr, usize)>,
    ambient: Option<(Mode, String)>,
}

impl Cx {
    fn top() -> Cx {
        Cx {
            tyctx: Vec::new(),
            tmctx: Vec::new(),
            ambient: None,
        }
    }
    fn lookup(&self, i: usize) -> Option<TypeExpr> {
        let pos = self.tmctx.len().checked_sub(1 + i)?;
        let (ty, d) = &self.tmctx[pos];
        Some(shift_type(ty, 0, (self.tyctx.len() - d) as isize))
    }
    fn push_tm(&mut self, ty: TypeExpr) {
        let d = self.tyctx.len();
        self.tmctx.push((ty, d));
    }
    fn pop_tm(&mut self) {
        self.tmctx.pop();
    }
}

pub struct Checker {
    type_defs: Defs,
    effects: HashMap<String, TypeExpr>, // normalized carriers
    handlers: HashMap<String, HInfo>,
    globals: HashMap<String, TypeExpr>, // normalized, closed
    span: Span,
}

/// Check a whole program against an empty initial scope, in declaration
/// order. On success the program has been *elaborated in place*: every
/// `thunk`/`pthunk` effect slot is filled in, and computations under
/// `handle` are retagged with the handler's mode — later phases rely on
/// both.
pub fn check_program(prog: &mut Program) -> Result<(), TypeError> {
    let mut ck = Checker {
        type_defs: HashMap::new(),
        effects: HashMap::new(),
        handlers: HashMap::new(),
        globals: HashMap::new(),
        span: Span::new(0, 0),
    };
    let mut seen_main = false;
    for item in &mut prog.items {
        ck.span = item.span();
        match item {
            Item::TypeDef {
                name, kind, body, ..
            } => {
                if ck.type_defs.contains_key(name) {
                    return Err(ck.err(format!("duplicate type definition `{name}`")));
                }
                ck.check_kind(&mut Vec::new(), body, kind)?;
                ck.type_defs
                    .insert(name.clone(), (kind.clone(), body.clone()));
            }
            Item::EffectDef { decl, .. } => {
                if ck.effects.contains_key(&decl.name) {
                    return Err(ck.err(format!("duplicate effect definition `{}`", decl.name)));
                }
                let carrier = ck.check_effect_parts(
                    &decl.name,
                    &decl.carrier,
                    &mut decl.hfmap,
                    &mut decl.hmap,
                )?;
                // registered by check_effect_parts before the witnesses are
                // checked; `carrier` comes back normalized for the table
                ck.effects.insert(decl.name.clone(), carrier);
            }
            Item::TermDef { name, ty, body, .. } => {
                if ck.globals.contains_key(name) {
                    return Err(ck.err(format!("duplicate term definition `{name}`")));
                }
                ck.check_kind(&mut Vec::new(), ty, &Kind::Ty)?;
                let ty_n = ck.normalize(&[], ty)?;
                ck.check_term(&mut Cx::top(), body, &ty_n)?;
                ck.globals.insert(name.clone(), ty_n);
            }
            Item::HandlerDef { name, handler, .. } => {
                if ck.handlers.contains_key(name) {
                    return Err(ck.err(format!("duplicate handler definition `{name}`")));
                }
                let info = ck.check_handler(handler)?;
                ck.handlers.insert(name.clone(), info);
            }
            Item::Main {
                mode,
                effect,
                ty,
                comp,
                ..
            } => {
                if seen_main {
                    return Err(ck.err("a program may declare at most one main"));
                }
                seen_main = true;
                if !ck.effects.contains_key(effect.as_str()) {
                    return Err(ck.err(format!("unknown effect `{effect}`")));
                }
                ck.check_kind(&mut Vec::new(), ty, &Kind::Ty)?;
                let ty_n = ck.normalize(&[], ty)?;
                comp.retag_mode(*mode);
                let mut cx = Cx::top();
                cx.ambient = Some((*mode, effect.clone()));
                ck.check_comp(&mut cx, comp, &ty_n)?;
            }
        }
    }
    Ok(())
}

impl Checker {
    fn err(&self, msg: impl Into<String>) -> TypeError {
        TypeError {
            span: self.span,
            msg: msg.into(),
            expected: None,
            actual: None,
        }
    }

    fn mismatch(
        &self,
        msg: impl Into<String>,
        expected: &TypeExpr,
        actual: &TypeExpr,
    ) -> TypeError {
        TypeError {
            span: self.span,
            msg: msg.into(),
            expected: Some(print_type(expected)),
            actual: Some(print_type(actual)),
        }
    }

    // -- kinds --------------------------------------------------------------

    fn infer_kind(&self, tyctx: &mut Vec<Kind>, ty: &TypeExpr) -> Result<Kind, TypeError> {
        use TypeExpr::*;
        Ok(match ty {
            TVar(i) => match tyctx.len().checked_sub(1 + i) {
                Some(pos) => tyctx[pos].clone(),
                None => return Err(self.err("unbound type variable")),
            },
            TUnit | TBool | TEmpty => Kind::Ty,
            TArrow(a, b) | TProd(a, b) | TSum(a, b) => {
                self.check_kind(tyctx, a, &Kind::Ty)?;
                self.check_kind(tyctx, b, &Kind::Ty)?;
                Kind::Ty
            }
            TForall(k, b) => {
                tyctx.push(k.clone());
                let r = self.check_kind(tyctx, b, &Kind::Ty);
                tyctx.pop();
                r?;
                Kind::Ty
            }
            TLam(k, b) => {
                tyctx.push(k.clone());
                let r = self.infer_kind(tyctx, b);
                tyctx.pop();
                Kind::arrow(k.clone(), r?)
            }
            TApp(f, a) => match self.infer_kind(tyctx, f)? {
                Kind::Arrow(k1, k2) => {
                    self.check_kind(tyctx, a, &k1)?;
                    *k2
                }
                Kind::Ty => {
                    return Err(self.err(format!(
                        "`{}` has kind Ty and cannot be applied",
                        print_type(f)
                    )))
                }
            },
            TTh(e, a) | TPTh(e, a) => {
                if !self.effects.contains_key(e) {
                    return Err(self.err(format!("unknown effect `{e}`")));
                }
                self.check_kind(tyctx, a, &Kind::Ty)?;
                Kind::Ty
            }
            TConst(n) => match self.type_defs.get(n) {
                Some((k, _)) => k.clone(),
                None => return Err(self.err(format!("unknown type `{n}`"))),
            },
        })
    }

    fn check_kind(
        &self,
        tyctx: &mut Vec<Kind>,
        ty: &TypeExpr,
        want: &Kind,
    ) -> Result<(), TypeError> {
        let got = self.infer_kind(tyctx, ty)?;
        if got != *want {
            return Err(TypeError {
                span: self.span,
                msg: format!("`{}` has the wrong kind", print_type(ty)),
                expected: Some(print_kind(want)),
                actual: Some(print_kind(&got)),
            });
        }
        Ok(())
    }

    /// Kind-check and normalize. `tyctx` gives the kinds of free variables,
    /// innermost binder last.
    fn normalize(&self, tyctx: &[Kind], ty: &TypeExpr) -> Result<TypeExpr, TypeError> {
        let mut kctx = tyctx.to_vec();
        let kind = self.infer_kind(&mut kctx, ty)?;
        let env: Env = (0..tyctx.len())
            .map(|l| Rc::new(SType::Neu(Neu::Var(l))))
            .collect();
        let v = eval_ty(&self.type_defs, &env, ty);
        let mut var_kinds = tyctx.to_vec();
        Ok(reify(
            &self.type_defs,
            tyctx.len(),
            &mut var_kinds,
            &kind,
            &v,
        ))
    }

    // -- terms ----------------------------------------------------------------

    /// Check `t` against `expected` (normal). Intro forms propagate the
    /// expectation inward — that is what lets un-annotated `thunk`s learn
    /// their effect — and everything else synthesizes and compares.
    fn check_term(&self, cx: &mut Cx, t: &mut Term, expected: &TypeExpr) -> Result<(), TypeError> {
        match (&mut *t, expected) {
            (Term::Lam(ann, body), TypeExpr::TArrow(dom, cod)) => {
                self.check_kind(&mut cx.tyctx.clone(), ann, &Kind::Ty)?;
                let ann_n = self.normalize(&cx.tyctx, ann)?;
                if ann_n != **dom {
                    return Err(self.mismatch(
                        "the parameter annotation does not match the expected domain",
                        dom,
                        &ann_n,
                    ));
                }
                cx.push_tm(ann_n);
                let r = self.check_term(cx, body, cod);
                cx.pop_tm();
                r
            }
            (Term::TyLam(k, body), TypeExpr::TForall(k2, bty)) => {
                if k != k2 {
                    return Err(TypeError {
                        span: self.span,
                        msg: "the type parameter's kind does not match the expected quantifier"
                            .into(),
                        expected: Some(print_kind(k2)),
                        actual: Some(print_kind(k)),
                    });
                }
                cx.tyctx.push(k.clone());
                let r = self.check_term(cx, body, bty);
                cx.tyctx.pop();
                r
            }
            (Term::Pair(a, b), TypeExpr::TProd(ta, tb)) => {
                self.check_term(cx, a, ta)?;
                self.check_term(cx, b, tb)
            }
            (Term::Ite(c, th, el), _) => {
                self.check_term(cx, c, &TypeExpr::TBool)?;
                self.check_term(cx, th, expected)?;
                self.check_term(cx, el, expected)
            }
            (Term::Case(s, l, r), _) => {
                let sty = self.synth_term(cx, s)?;
                let TypeExpr::TSum(a, b) = sty else {
                    return Err(self.err_nonsum(&sty));
                };
                cx.push_tm(*a);
                let rl = self.check_term(cx, l, expected);
                cx.pop_tm();
                rl?;
                cx.push_tm(*b);
                let rr = self.check_term(cx, r, expected);
                cx.pop_tm();
                rr
            }
            (Term::Thunk(slot, body), TypeExpr::TTh(e, a)) => {
                self.fill_slot(slot, e)?;
                self.check_suspended(cx, body, Mode::Total, e, a)
            }
            (Term::PThunk(slot, body), TypeExpr::TPTh(e, a)) => {
                self.fill_slot(slot, e)?;
                self.check_suspended(cx, body, Mode::Partial, e, a)
            }
            (Term::Handle(name, comp), _) => {
                let name = name.clone();
                let got = self.handle_term(cx, &name, comp, Some(expected))?;
                if got != *expected {
                    return Err(self.mismatch(
                        "handling produces a different type",
                        expected,
                        &got,
                    ));
                }
                Ok(())
            }
            (other, _) => {
                let actual = self.synth_term(cx, other)?;
                if actual != *expected {
                    return Err(self.mismatch("type mismatch", expected, &actual));
                }
                Ok(())
            }
        }
    }

    fn synth_term(&self, cx: &mut Cx, t: &mut Term) -> Result<TypeExpr, TypeError> {
        match t {
            Term::Var(i) => cx.lookup(*i).ok_or_else(|| self.err("unbound variable")),
            Term::Global(n) => self
                .globals
                .get(n)
                .cloned()
                .ok_or_else(|| self.err(format!("unknown term `{n}`"))),
            Term::Lam(ann, body) => {
                self.check_kind(&mut cx.tyctx.clone(), ann, &Kind::Ty)?;
                let ann_n = self.normalize(&cx.tyctx, ann)?;
                cx.push_tm(ann_n.clone());
                let bty = self.synth_term(cx, body);
                cx.pop_tm();
                Ok(TypeExpr::arrow(ann_n, bty?))
            }
            Term::App(f, a) => {
                let fty = self.synth_term(cx, f)?;
                let TypeExpr::TArrow(dom, cod) = fty else {
                    return Err(TypeError {
                        span: self.span,
                        msg: "applied a term that is not a function".into(),
                        expected: None,
                        actual: Some(print_type(&fty)),
                    });
                };
                self.check_term(cx, a, &dom)?;
                Ok(*cod)
            }
            Term::TyLam(k, body) => {
                cx.tyctx.push(k.clone());
                let bty = self.synth_term(cx, body);
                cx.tyctx.pop();
                Ok(TypeExpr::forall(k.clone(), bty?))
            }
            Term::TyApp(f, ty) => {
                let fty = self.synth_term(cx, f)?;
                let TypeExpr::TForall(k, bty) = fty else {
                    return Err(TypeError {
                        span: self.span,
                        msg: "type application of a term that is not polymorphic".into(),
                        expected: None,
                        actual: Some(print_type(&fty)),
                    });
                };
                self.check_kind(&mut cx.tyctx.clone(), ty, &k)?;
                let arg = self.normalize(&cx.tyctx, ty)?;
                let inst = subst_type(&bty, &arg, 0);
                self.normalize(&cx.tyctx, &inst)
            }
            Term::Tt | Term::Ff => Ok(TypeExpr::TBool),
            Term::Unit => Ok(TypeExpr::TUnit),
            Term::Ite(c, th, el) => {
                self.check_term(cx, c, &TypeExpr::TBool)?;
                let ty = self.synth_term(cx, th)?;
                self.check_term(cx, el, &ty)?;
                Ok(ty)
            }
            Term::Pair(a, b) => {
                let ta = self.synth_term(cx, a)?;
                let tb = self.synth_term(cx, b)?;
                Ok(TypeExpr::prod(ta, tb))
            }
            Term::Fst(p) => match self.synth_term(cx, p)? {
                TypeExpr::TProd(a, _) => Ok(*a),
                other => Err(self.err_nonpair(&other)),
            },
            Term::Snd(p) => match self.synth_term(cx, p)? {
                TypeExpr::TProd(_, b) => Ok(*b),
                other => Err(self.err_nonpair(&other)),
            },
            Term::Inl(target, v) => {
                self.check_kind(&mut cx.tyctx.clone(), target, &Kind::Ty)?;
                let tgt = self.normalize(&cx.tyctx, target)?;
                let TypeExpr::TSum(a, _) = &tgt else {
                    return Err(self.err_nonsum_ann(&tgt));
                };
                self.check_term(cx, v, a)?;
                Ok(tgt)
            }
            Term::Inr(target, v) => {
                self.check_kind(&mut cx.tyctx.clone(), target, &Kind::Ty)?;
                let tgt = self.normalize(&cx.tyctx, target)?;
                let TypeExpr::TSum(_, b) = &tgt else {
                    return Err(self.err_nonsum_ann(&tgt));
                };
                self.check_term(cx, v, b)?;
                Ok(tgt)
            }
            Term::Case(s, l, r) => {
                let sty = self.synth_term(cx, s)?;
                let TypeExpr::TSum(a, b) = sty else {
                    return Err(self.err_nonsum(&sty));
                };
                cx.push_tm(*a);
                let lt = self.synth_term(cx, l);
                cx.pop_tm();
                let lt = lt?;
                cx.push_tm(*b);
                let rr = self.check_term(cx, r, &lt);
                cx.pop_tm();
                rr?;
                Ok(lt)
            }
            Term::Absurd(target, v) => {
                self.check_term(cx, v, &TypeExpr::TEmpty)?;
                self.check_kind(&mut cx.tyctx.clone(), target, &Kind::Ty)?;
                self.normalize(&cx.tyctx, target)
            }
            Term::Thunk(slot, body) => {
                let e = self.slot_or_ambient(cx, slot, "thunk")?;
                let mut inner = cx.ambient.replace((Mode::Total, e.clone()));
                let a = self.synth_comp(cx, body);
                std::mem::swap(&mut cx.ambient, &mut inner);
                Ok(TypeExpr::th(e, a?))
            }
            Term::PThunk(slot, body) => {
                let e = self.slot_or_ambient(cx, slot, "pthunk")?;
                let mut inner = cx.ambient.replace((Mode::Partial, e.clone()));
                let a = self.synth_comp(cx, body);
                std::mem::swap(&mut cx.ambient, &mut inner);
                Ok(TypeExpr::pth(e, a?))
            }
            Term::Handle(name, comp) => {
                let name = name.clone();
                self.handle_term(cx, &name, comp, None)
            }
        }
    }

    fn err_nonsum(&self, got: &TypeExpr) -> TypeError {
        TypeError {
            span: self.span,
            msg: "case analysis on a term whose type is not a sum".into(),
            expected: None,
            actual: Some(print_type(got)),
        }
    }

    fn err_nonsum_ann(&self, got: &TypeExpr) -> TypeError {
        TypeError {
            span: self.span,
            msg: "the injection annotation must be a sum type".into(),
            expected: None,
            actual: Some(print_type(got)),
        }
    }

    fn err_nonpair(&self, got: &TypeExpr) -> TypeError {
        TypeError {
            span: self.span,
            msg: "projection from a term whose type is not a product".into(),
            expected: None,
            actual: Some(print_type(got)),
        }
    }

    fn fill_slot(&self, slot: &mut Option<String>, e: &str) -> Result<(), TypeError> {
        match slot {
            Some(e0) if e0 != e => Err(self.err(format!(
                "this thunk was already attributed to effect `{e0}`, but `{e}` is expected"
            ))),
            _ => {
                *slot = Some(e.to_string());
                Ok(())
            }
        }
    }

    fn slot_or_ambient(
        &self,
        cx: &Cx,
        slot: &mut Option<String>,
        what: &str,
    ) -> Result<String, TypeError> {
        if let Some(e) = slot {
            return Ok(e.clone());
        }
        match &cx.ambient {
            Some((_, e)) => {
                *slot = Some(e.clone());
                Ok(e.clone())
            }
            None => Err(self.err(format!(
                "cannot infer which effect this `{what}` suspends; annotate the enclosing binder"
            ))),
        }
    }

    /// Check a thunk body: mode and effect swap to the suspension's own.
    fn check_suspended(
        &self,
        cx: &mut Cx,
        body: &mut Comp,
        mode: Mode,
        effect: &str,
        expected: &TypeExpr,
    ) -> Result<(), TypeError> {
        body.retag_mode(mode);
        let mut saved = cx.ambient.replace((mode, effect.to_string()));
        let r = self.check_comp(cx, body, expected);
        std::mem::swap(&mut cx.ambient, &mut saved);
        r
    }

    /// Type `handle name comp`, optionally against an expected result. The
    /// handled computation runs at the handler's effect, and in Partial mode
    /// exactly when the handler has a `via` functor (that law is what makes
    /// recursive handling sound). The result is `M A` for the computation's
    /// type `A`; with an expectation we first try to invert `M` so that `A`
    /// can be *checked*, which is what admits `fix` under `handle`.
    fn handle_term(
        &self,
        cx: &mut Cx,
        name: &str,
        comp: &mut Comp,
        expected: Option<&TypeExpr>,
    ) -> Result<TypeExpr, TypeError> {
        let Some(info) = self.handlers.get(name).cloned() else {
            return Err(self.err(format!("unknown handler `{name}`")));
        };
        comp.retag_mode(info.mode);
        let mut saved = cx.ambient.replace((info.mode, info.effect.clone()));
        let a = (|| -> Result<TypeExpr, TypeError> {
            if let Some(exp) = expected {
                if let TypeExpr::TLam(_, pat) = &info.monad {
                    let tgt = shift_type(exp, 0, 1);
                    let mut sol = None;
                    if match_type(pat, &tgt, 0, &mut sol) {
                        if let Some(a) = sol {
                            self.check_comp(cx, comp, &a)?;
                            return Ok(a);
                        }
                    }
                }
            }
            self.synth_comp(cx, comp)
        })();
        std::mem::swap(&mut cx.ambient, &mut saved);
        let a = a?;
        self.normalize(&cx.tyctx, &TypeExpr::app(info.monad.clone(), a))
    }

    // -- computations ---------------------------------------------------------

    fn ambient(&self, cx: &Cx) -> Result<(Mode, String), TypeError> {
        cx.ambient
            .clone()
            .ok_or_else(|| self.err("internal: computation outside any effect context"))
    }

    fn check_comp(&self, cx: &mut Cx, c: &mut Comp, expected: &TypeExpr) -> Result<(), TypeError> {
        let (mode, effect) = self.ambient(cx)?;
        match &mut c.node {
            CompNode::Val(t) => self.check_term(cx, t, expected),
            CompNode::LetIn(ann, bound, body) => {
                let bty = match ann {
                    Some(a) => {
                        self.check_kind(&mut cx.tyctx.clone(), a, &Kind::Ty)?;
                        let a_n = self.normalize(&cx.tyctx, a)?;
                        self.check_comp(cx, bound, &a_n)?;
                        a_n
                    }
                    None => self.synth_comp(cx, bound)?,
                };
                cx.push_tm(bty);
                let r = self.check_comp(cx, body, expected);
                cx.pop_tm();
                r
            }
            CompNode::Op(operand, ann, k) => {
                let a = self.op_result_ty(cx, operand, ann)?;
                cx.push_tm(a);
                let r = self.check_comp(cx, k, expected);
                cx.pop_tm();
                r
            }
            CompNode::Force(t) => {
                let got = self.force_result(cx, t)?;
                if got != *expected {
                    return Err(self.mismatch("forcing produces a different type", expected, &got));
                }
                Ok(())
            }
            CompNode::Fix(body) => {
                if mode != Mode::Partial {
                    return Err(self.err("`fix` is only available in partial computations"));
                }
                cx.push_tm(TypeExpr::pth(effect, expected.clone()));
                let r = self.check_comp(cx, body, expected);
                cx.pop_tm();
                r
            }
        }
    }

    fn synth_comp(&self, cx: &mut Cx, c: &mut Comp) -> Result<TypeExpr, TypeError> {
        match &mut c.node {
            CompNode::Val(t) => self.synth_term(cx, t),
            CompNode::LetIn(ann, bound, body) => {
                let bty = match ann {
                    Some(a) => {
                        self.check_kind(&mut cx.tyctx.clone(), a, &Kind::Ty)?;
                        let a_n = self.normalize(&cx.tyctx, a)?;
                        self.check_comp(cx, bound, &a_n)?;
                        a_n
                    }
                    None => self.synth_comp(cx, bound)?,
                };
                cx.push_tm(bty);
                let r = self.synth_comp(cx, body);
                cx.pop_tm();
                r
            }
            CompNode::Op(operand, ann, k) => {
                let a = self.op_result_ty(cx, operand, ann)?;
                cx.push_tm(a);
                let r = self.synth_comp(cx, k);
                cx.pop_tm();
                r
            }
            CompNode::Force(t) => self.force_result(cx, t),
            CompNode::Fix(_) => Err(self
                .err("cannot infer the result type of `fix`; annotate the enclosing let binding")),
        }
    }

    fn force_result(&self, cx: &mut Cx, t: &mut Term) -> Result<TypeExpr, TypeError> {
        let (mode, effect) = self.ambient(cx)?;
        let ty = self.synth_term(cx, t)?;
        match ty {
            TypeExpr::TTh(e, a) => {
                if e != effect {
                    return Err(self.err(format!(
                        "forced a `Th {e}` thunk inside a computation over effect `{effect}`"
                    )));
                }
                Ok(*a)
            }
            TypeExpr::TPTh(e, a) => {
                if mode != Mode::Partial {
                    return Err(
                        self.err("a partial thunk can only be forced in a partial computation")
                    );
                }
                if e != effect {
                    return Err(self.err(format!(
                        "forced a `PTh {e}` thunk inside a computation over effect `{effect}`"
                    )));
                }
                Ok(*a)
            }
            other => Err(TypeError {
                span: self.span,
                msg: "`force` applied to a term that is not a thunk".into(),
                expected: None,
                actual: Some(print_type(&other)),
            }),
        }
    }

    /// The `op` rule: the operand must inhabit the ambient effect's carrier
    /// applied to the ambient thunk constructor and the operation's result
    /// type. With a binder annotation the latter is given; without one it is
    /// recovered by matching the operand's synthesized type against the
    /// carrier.
    fn op_result_ty(
        &self,
        cx: &mut Cx,
        operand: &mut Term,
        ann: &mut Option<TypeExpr>,
    ) -> Result<TypeExpr, TypeError> {
        let (mode, effect) = self.ambient(cx)?;
        let Some(carrier) = self.effects.get(&effect).cloned() else {
            return Err(self.err(format!("unknown effect `{effect}`")));
        };
        let th_fun = TypeExpr::lam(
            Kind::Ty,
            match mode {
                Mode::Total => TypeExpr::th(effect.clone(), TypeExpr::TVar(0)),
                Mode::Partial => TypeExpr::pth(effect.clone(), TypeExpr::TVar(0)),
            },
        );
        match ann {
            Some(a) => {
                self.check_kind(&mut cx.tyctx.clone(), a, &Kind::Ty)?;
                let a_n = self.normalize(&cx.tyctx, a)?;
                let want = self.normalize(
                    &cx.tyctx,
                    &TypeExpr::app(TypeExpr::app(carrier, th_fun), a_n.clone()),
                )?;
                self.check_term(cx, operand, &want)?;
                Ok(a_n)
            }
            None => {
                let s = self.synth_term(cx, operand)?;
                let ct = self.normalize(&cx.tyctx, &TypeExpr::app(carrier, th_fun))?;
                let TypeExpr::TLam(_, pat) = &ct else {
                    unreachable!("a Ty -> Ty normal form is a lambda")
                };
                let tgt = shift_type(&s, 0, 1);
                let mut sol = None;
                if !match_type(pat, &tgt, 0, &mut sol) {
                    return Err(self.mismatch(
                        "the operand does not fit the ambient effect's signature",
                        &ct,
                        &s,
                    ));
                }
                sol.ok_or_else(|| {
                    self.err(
                        "cannot determine the operation's result type from the operand; \
                         annotate the continuation binder: `op t (x : A. c)`",
                    )
                })
            }
        }
    }

    // -- declarations -----------------------------------------------------------

    /// Check an effect's three parts. The carrier must be a closed
    /// constructor-transformer; `hfmap` must lift functorial actions through
    /// it, and `hmap` must transport it along natural transformations. The
    /// effect is registered before the witnesses are checked so that their
    /// bodies may mention `Th`-types at this effect if they want to.
    fn check_effect_parts(
        &mut self,
        name: &str,
        carrier: &TypeExpr,
        hfmap: &mut Term,
        hmap: &mut Term,
    ) -> Result<TypeExpr, TypeError> {
        let hf_kind = Kind::arrow(Kind::ty_to_ty(), Kind::ty_to_ty());
        self.check_kind(&mut Vec::new(), carrier, &hf_kind)?;
        let c = self.normalize(&[], carrier)?;
        self.effects.insert(name.to_string(), c.clone());

        let f0 = TypeExpr::TVar(0);
        let hfmap_ty = TypeExpr::forall(
            Kind::ty_to_ty(),
            TypeExpr::arrow(
                fmap_ty(&f0),
                fmap_ty(&TypeExpr::app(shift_type(&c, 0, 1), f0.clone())),
            ),
        );
        let hfmap_ty = self.normalize(&[], &hfmap_ty)?;
        self.check_term(&mut Cx::top(), hfmap, &hfmap_ty)?;

        let c3 = shift_type(&c, 0, 3);
        let hmap_ty = TypeExpr::forall(
            Kind::ty_to_ty(),
            TypeExpr::arrow(
                fmap_ty(&TypeExpr::TVar(0)),
                TypeExpr::forall(
                    Kind::ty_to_ty(),
                    TypeExpr::arrow(
                        fmap_ty(&TypeExpr::TVar(0)),
                        TypeExpr::arrow(
                            trans_ty(&TypeExpr::TVar(1), &TypeExpr::TVar(0)),
                            TypeExpr::forall(
                                Kind::Ty,
                                TypeExpr::arrow(
                                    TypeExpr::app(
                                        TypeExpr::app(c3.clone(), TypeExpr::TVar(2)),
                                        TypeExpr::TVar(0),
                                    ),
                                    TypeExpr::app(
                                        TypeExpr::app(c3, TypeExpr::TVar(1)),
                                        TypeExpr::TVar(0),
                                    ),
                                ),
                            ),
                        ),
                    ),
                ),
            ),
        );
        let hmap_ty = self.normalize(&[], &hmap_ty)?;
        self.check_term(&mut Cx::top(), hmap, &hmap_ty)?;
        Ok(c)
    }

    /// Check a handler: `ret`/`bind` make `M` a monad shape-wise, `malg` is
    /// an algebra for the effect's carrier at `M`, and a `via F` handler
    /// additionally satisfies `M a = PTh E (F a)` — the equation that lets
    /// recursive computations be handled.
    fn check_handler(&self, h: &mut HandlerExpr) -> Result<HInfo, TypeError> {
        if !self.effects.contains_key(&h.effect) {
            return Err(self.err(format!("unknown effect `{}`", h.effect)));
        }
        let carrier = self.effects[&h.effect].clone();
        self.check_kind(&mut Vec::new(), &h.monad, &Kind::ty_to_ty())?;
        let m = self.normalize(&[], &h.monad)?;

        let ret_ty = TypeExpr::forall(
            Kind::Ty,
            TypeExpr::arrow(
                TypeExpr::TVar(0),
                TypeExpr::app(m.clone(), TypeExpr::TVar(0)),
            ),
        );
        let ret_ty = self.normalize(&[], &ret_ty)?;
        self.check_term(&mut Cx::top(), &mut h.ret, &ret_ty)?;

        let bind_ty = TypeExpr::forall(
            Kind::Ty,
            TypeExpr::forall(
                Kind::Ty,
                TypeExpr::arrow(
                    TypeExpr::app(m.clone(), TypeExpr::TVar(1)),
                    TypeExpr::arrow(
                        TypeExpr::arrow(
                            TypeExpr::TVar(1),
                            TypeExpr::app(m.clone(), TypeExpr::TVar(0)),
                        ),
                        TypeExpr::app(m.clone(), TypeExpr::TVar(0)),
                    ),
                ),
            ),
        );
        let bind_ty = self.normalize(&[], &bind_ty)?;
        self.check_term(&mut Cx::top(), &mut h.bind, &bind_ty)?;

        let malg_ty = TypeExpr::forall(
            Kind::Ty,
            TypeExpr::arrow(
                TypeExpr::app(TypeExpr::app(carrier, m.clone()), TypeExpr::TVar(0)),
                TypeExpr::app(m.clone(), TypeExpr::TVar(0)),
            ),
        );
        let malg_ty = self.normalize(&[], &malg_ty)?;
        self.check_term(&mut Cx::top(), &mut h.malg, &malg_ty)?;

        let mode = match &h.via {
            None => Mode::Total,
            Some(f) => {
                self.check_kind(&mut Vec::new(), f, &Kind::ty_to_ty())?;
                let f_n = self.normalize(&[], f)?;
                let lhs =
                    self.normalize(&[Kind::Ty], &TypeExpr::app(m.clone(), TypeExpr::TVar(0)))?;
                let rhs = self.normalize(
                    &[Kind::Ty],
                    &TypeExpr::pth(h.effect.clone(), TypeExpr::app(f_n, TypeExpr::TVar(0))),
                )?;
                if lhs != rhs {
                    return Err(self.mismatch(
                        "the `via` law fails: the monad must be partial thunks of the \
                         `via` functor",
                        &rhs,
                        &lhs,
                    ));
                }
                Mode::Partial
            }
        };
        Ok(HInfo {
            effect: h.effect.clone(),
            monad: m,
            mode,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parser::parse_program_with;
    use crate::stdlib::{self, exc_package, prelude_effects, th_alg, with_prelude};

    /// Parse a user program against the prelude and check the merged result.
    fn check_src(src: &str) -> Result<Program, TypeError> {
        let prog = parse_program_with(src, &prelude_effects())
            .unwrap_or_else(|e| panic!("parse: {}", e.render("test.fha")));
        let mut full = with_prelude(prog);
        check_program(&mut full)?;
        Ok(full)
    }

    fn check_err(src: &str) -> TypeError {
        check_src(src).expect_err("program should be rejected")
    }

    #[test]
    fn prelude_checks_and_slots_get_filled() {
        let mut p = stdlib::prelude();
        check_program(&mut p).unwrap_or_else(|e| panic!("{}", e.render("prelude.fha")));
        let (_, throw) = p.term_def(stdlib::THROW).expect("throw is declared");
        fn first_slot(t: &Term) -> Option<&Option<String>> {
            match t {
                Term::Thunk(slot, _) | Term::PThunk(slot, _) => Some(slot),
                Term::TyLam(_, b) | Term::Lam(_, b) => first_slot(b),
                _ => None,
            }
        }
        assert_eq!(first_slot(throw).unwrap().as_deref(), Some(stdlib::EXC));
    }

    #[test]
    fn rows_coproducts_and_aliases_check() {
        let full = check_src(
            r"
type Pairish : Ty -> Ty = \(a : Ty). a * a

effect Tick {
  tick : Unit ~> Unit ;
  toggle : Bool ~> Bool
}

effect Both = Exc ++ Tick

term dup : Pairish Bool -> Bool * Bool = \(p : Bool * Bool). p

main[total] Tick : Bool =
  let u = force (tick ()) in
  force (toggle tt)
",
        )
        .unwrap_or_else(|e| panic!("{}", e.render("test.fha")));
        assert!(full.effect("Both").is_some());
    }

    #[test]
    fn derived_thunk_handlers_check_in_both_modes() {
        let (exc, _) = exc_package();
        let mut p = stdlib::prelude();
        p.items.push(Item::HandlerDef {
            name: "hThT".into(),
            handler: th_alg(&exc, Mode::Total),
            span: Span::new(0, 0),
        });
        p.items.push(Item::HandlerDef {
            name: "hThP".into(),
            handler: th_alg(&exc, Mode::Partial),
            span: Span::new(0, 0),
        });
        check_program(&mut p).unwrap_or_else(|e| panic!("{}", e.render("prelude.fha")));
    }

    #[test]
    fn identity_carrier_checks_via_eta() {
        // The carrier `\F. F` only checks if `F` and `\a. F a` are equal,
        // i.e. if normalization is eta-long at arrow kinds.
        check_src(
            r"
effect Ident = hfunctor {
  carrier = \(F : Ty -> Ty). F;
  hfmap =
    /\(F : Ty -> Ty). \(fF : forall (a : Ty). forall (b : Ty). (a -> b) -> F a -> F b). fF;
  hmap =
    /\(F : Ty -> Ty). \(fF : forall (a : Ty). forall (b : Ty). (a -> b) -> F a -> F b).
    /\(G : Ty -> Ty). \(fG : forall (a : Ty). forall (b : Ty). (a -> b) -> G a -> G b).
    \(s : forall (a : Ty). F a -> G a).
    /\(c : Ty). \(x : F c). s [c] x
}
",
        )
        .unwrap_or_else(|e| panic!("{}", e.render("test.fha")));
    }

    #[test]
    fn handling_exceptions_checks() {
        check_src(
            r"
main[total] VoidH : Bool =
  val (case (handle hExc (force (catch [Bool] (throw [Bool]) (thunk val tt))))
       { inl u -> ff ; inr x -> x })
",
        )
        .unwrap_or_else(|e| panic!("{}", e.render("test.fha")));
    }

    #[test]
    fn op_result_type_is_inferred_from_the_operand() {
        let full = check_src(
            r"
effect Flip { flip : Unit ~> Bool }

main[total] Flip : Bool =
  op (inl[(Unit * (Bool -> Bool)) + Empty] ((), \(y : Bool). y))
",
        )
        .unwrap_or_else(|e| panic!("{}", e.render("test.fha")));
        assert!(full.main().is_some());
    }

    #[test]
    fn fix_checks_under_annotated_let_and_partial_handle() {
        check_src(
            r"
main[partial] VoidH : Bool =
  let loop : Bool = fix (self . val tt) in
  val loop
",
        )
        .unwrap_or_else(|e| panic!("{}", e.render("test.fha")));
    }

    #[test]
    fn fix_is_rejected_in_total_mode() {
        let e = check_err("main[total] VoidH : Bool = fix (self . val tt)");
        assert!(e.msg.contains("partial"), "{}", e.msg);
    }

    #[test]
    fn forcing_the_wrong_effect_is_rejected() {
        let e = check_err(
            r"
effect Tick { tick : Unit ~> Unit }
main[total] Tick : Bool = force (throw [Bool])
",
        );
        assert!(e.msg.contains("Exc"), "{}", e.msg);
    }

    #[test]
    fn operand_mismatch_is_rejected_with_both_types() {
        let e = check_err("main[total] Exc : Bool = op tt (x : Bool. val x)");
        assert!(e.expected.is_some() && e.actual.is_some());
    }

    #[test]
    fn via_law_violations_are_rejected() {
        // Claim Maybe is `PTh Exc` of something; it is not.
        let e = check_err(
            r"
handler hBad for Exc {
  M = Maybe;
  ret = /\(a : Ty). \(x : a). inr[Unit + a] x;
  bind =
    /\(a : Ty). /\(b : Ty). \(m : Maybe a). \(k : a -> Maybe b).
    case m { inl u -> inl[Unit + b] () ; inr x -> k x };
  malg =
    /\(a : Ty). \(o : Unit + (Maybe a * Maybe a)).
    case o {
      inl u -> inl[Unit + a] () ;
      inr ph -> case fst ph { inl u -> snd ph ; inr x -> inr[Unit + a] x }
    }
} via (\(a : Ty). a)
",
        );
        assert!(e.msg.contains("via"), "{}", e.msg);
        let rendered = e.render("test.fha");
        assert!(rendered.contains("\n  expected: PTh Exc"), "{rendered}");
    }

    #[test]
    fn unbound_and_duplicate_names_are_rejected() {
        let e = check_err("main[total] VoidH : Bool = val nonsense");
        assert!(e.msg.contains("nonsense"), "{}", e.msg);
        let e = check_err("type Maybe : Ty = Unit");
        assert!(e.msg.contains("duplicate"), "{}", e.msg);
    }

    #[test]
    fn rendered_errors_carry_the_file_and_span() {
        let e = check_err("term bad : Bool = ()");
        let r = e.render("x.fha");
        assert!(r.starts_with("x.fha:"), "{r}");
        assert!(r.contains(": error: "), "{r}");
        assert!(r.contains("\n  expected: Bool"), "{r}");
        assert!(r.contains("\n  actual: Unit"), "{r}");
    }

    #[test]
    fn type_aliases_normalize_away() {
        check_src(
            r"
type Flag : Ty = Bool
type Two : Ty -> Ty = \(a : Ty). a * a
term both : Two Flag = (tt, ff)
term use : Bool * Bool = both
",
        )
        .unwrap_or_else(|e| panic!("{}", e.render("test.fha")));
    }

    #[test]
    fn handle_against_an_expected_type_inverts_the_monad() {
        // hExc's monad is Maybe; checking against `Unit + Bool` must solve
        // A = Bool and then *check* the body (which contains fix).
        check_src(
            r"
handler hExcP for Exc {
  M = \(a : Ty). PTh Exc (Unit + a);
  ret = /\(a : Ty). \(x : a). pthunk val inr[Unit + a] x;
  bind =
    /\(a : Ty). /\(b : Ty). \(m : PTh Exc (Unit + a)). \(k : a -> PTh Exc (Unit + b)).
    pthunk (
      let r = force m in
      force (case r { inl u -> pthunk val inl[Unit + b] () ; inr x -> k x })
    );
  malg =
    /\(a : Ty). \(o : Unit + (PTh Exc (Unit + a) * PTh Exc (Unit + a))).
    pthunk force (case o {
      inl u -> pthunk val inl[Unit + a] () ;
      inr ph -> pthunk (
        let p = force (fst ph) in
        force (case p {
          inl u -> snd ph ;
          inr x -> pthunk val inr[Unit + a] x
        })
      )
    })
} via Maybe

main[partial] VoidH : PTh Exc (Unit + Bool) =
  let m : PTh Exc (Unit + Bool) = val (handle hExcP (fix (self . val tt))) in
  val m
",
        )
        .unwrap_or_else(|e| panic!("{}", e.render("test.fha")));
    }
}
