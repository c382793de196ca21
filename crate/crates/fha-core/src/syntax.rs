//! Core abstract syntax and the de Bruijn machinery.
//!
//! Types and terms use de Bruijn indices with *two independent variable
//! namespaces*: type variables (bound by `forall`, type-level lambda, and
//! term-level big-lambda) and term variables (bound by lambda, `case` arms,
//! `let`, `op` continuations, and `fix`). A term binder never shifts type
//! variables and vice versa, which keeps type erasure trivial and lets the
//! evaluator ignore `TyLam`/`TyApp` without renumbering anything.
//!
//! All substitution helpers use the *instantiating* convention:
//! `subst_term(t, s, j)` replaces variable `j` by `s` **and strips that
//! binder**, decrementing every variable above `j`. Instantiating a binder
//! body with an argument is therefore the single call
//! `subst_term(body, arg, 0)` — there is no separate shift-down pass to
//! forget. `s` is expected to be valid in the context *without* the stripped
//! binder; it gets shifted as it moves under binders inside `t`.
//!
//! Alpha equivalence is plain structural equality here (that is the point of
//! de Bruijn indices), so the AST types derive `PartialEq` and
//! [`alpha_equal`] is a documented alias for `==`.

use std::fmt;

/// Byte range into the source file a declaration came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

impl Span {
    pub fn new(start: usize, end: usize) -> Self {
        Span { start, end }
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.start, self.end)
    }
}

/// Kinds classify type expressions: `Ty` is the kind of inhabited types,
/// arrows classify type operators (e.g. effect carriers live at
/// `(Ty -> Ty) -> Ty -> Ty`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Kind {
    Ty,
    Arrow(Box<Kind>, Box<Kind>),
}

impl Kind {
    pub fn arrow(a: Kind, b: Kind) -> Kind {
        Kind::Arrow(Box::new(a), Box::new(b))
    }

    /// The kind `Ty -> Ty` of monads-as-carriers, used all over the handler
    /// machinery.
    pub fn ty_to_ty() -> Kind {
        Kind::arrow(Kind::Ty, Kind::Ty)
    }
}

/// Type expressions. `TTh`/`TPTh` are the two thunk types: `Th E A` holds a
/// suspended total computation at effect `E` returning `A`, `PTh E A` its
/// general-recursive counterpart. Effects are referenced by declared name;
/// their structure lives in the enclosing program's effect declarations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TypeExpr {
    /// De Bruijn index into the enclosing type binders.
    TVar(usize),
    TUnit,
    TBool,
    TEmpty,
    TArrow(Box<TypeExpr>, Box<TypeExpr>),
    TForall(Kind, Box<TypeExpr>),
    TProd(Box<TypeExpr>, Box<TypeExpr>),
    TSum(Box<TypeExpr>, Box<TypeExpr>),
    TLam(Kind, Box<TypeExpr>),
    TApp(Box<TypeExpr>, Box<TypeExpr>),
    TTh(String, Box<TypeExpr>),
    TPTh(String, Box<TypeExpr>),
    /// Reference to a top-level `type` definition, unfolded during
    /// normalization.
    TConst(String),
}

impl TypeExpr {
    pub fn arrow(a: TypeExpr, b: TypeExpr) -> TypeExpr {
        TypeExpr::TArrow(Box::new(a), Box::new(b))
    }
    pub fn forall(k: Kind, body: TypeExpr) -> TypeExpr {
        TypeExpr::TForall(k, Box::new(body))
    }
    pub fn prod(a: TypeExpr, b: TypeExpr) -> TypeExpr {
        TypeExpr::TProd(Box::new(a), Box::new(b))
    }
    pub fn sum(a: TypeExpr, b: TypeExpr) -> TypeExpr {
        TypeExpr::TSum(Box::new(a), Box::new(b))
    }
    pub fn lam(k: Kind, body: TypeExpr) -> TypeExpr {
        TypeExpr::TLam(k, Box::new(body))
    }
    pub fn app(f: TypeExpr, a: TypeExpr) -> TypeExpr {
        TypeExpr::TApp(Box::new(f), Box::new(a))
    }
    pub fn th(effect: impl Into<String>, a: TypeExpr) -> TypeExpr {
        TypeExpr::TTh(effect.into(), Box::new(a))
    }
    pub fn pth(effect: impl Into<String>, a: TypeExpr) -> TypeExpr {
        TypeExpr::TPTh(effect.into(), Box::new(a))
    }
}

/// Whether a computation may use general recursion. Total computations
/// always terminate; Partial ones may `fix` and are observed through `PTh`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Total,
    Partial,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::Total => write!(f, "total"),
            Mode::Partial => write!(f, "partial"),
        }
    }
}

/// Terms (values-to-be). The `Inl`/`Inr`/`Absurd` annotations record the
/// *target* type (the whole sum, resp. the result type), and lambdas
/// annotate their parameter — those four are mandatory for checking to be
/// syntax-directed.
///
/// `Thunk`/`PThunk` carry an effect slot the parser leaves empty and the
/// checker fills with the suspended computation's effect; type-erasing
/// extraction needs it to find the right structure map for `op` nodes.
/// `Handle` names a top-level handler definition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Term {
    /// De Bruijn index into the enclosing term binders.
    Var(usize),
    /// Reference to a top-level `term` definition (not a de Bruijn variable;
    /// never shifted or substituted).
    Global(String),
    Lam(TypeExpr, Box<Term>),
    App(Box<Term>, Box<Term>),
    TyLam(Kind, Box<Term>),
    TyApp(Box<Term>, TypeExpr),
    Tt,
    Ff,
    Ite(Box<Term>, Box<Term>, Box<Term>),
    Unit,
    Pair(Box<Term>, Box<Term>),
    Fst(Box<Term>),
    Snd(Box<Term>),
    Inl(TypeExpr, Box<Term>),
    Inr(TypeExpr, Box<Term>),
    /// `case t { inl x -> u ; inr y -> v }`; each arm binds one variable.
    Case(Box<Term>, Box<Term>, Box<Term>),
    Absurd(TypeExpr, Box<Term>),
    Thunk(Option<String>, Box<Comp>),
    PThunk(Option<String>, Box<Comp>),
    Handle(String, Box<Comp>),
}

impl Term {
    pub fn lam(ann: TypeExpr, body: Term) -> Term {
        Term::Lam(ann, Box::new(body))
    }
    pub fn app(f: Term, a: Term) -> Term {
        Term::App(Box::new(f), Box::new(a))
    }
    /// Left-nested application of several arguments.
    pub fn apps(f: Term, args: impl IntoIterator<Item = Term>) -> Term {
        args.into_iter().fold(f, Term::app)
    }
    pub fn tylam(k: Kind, body: Term) -> Term {
        Term::TyLam(k, Box::new(body))
    }
    pub fn tyapp(f: Term, a: TypeExpr) -> Term {
        Term::TyApp(Box::new(f), a)
    }
    pub fn ite(c: Term, t: Term, e: Term) -> Term {
        Term::Ite(Box::new(c), Box::new(t), Box::new(e))
    }
    pub fn pair(a: Term, b: Term) -> Term {
        Term::Pair(Box::new(a), Box::new(b))
    }
    pub fn fst(t: Term) -> Term {
        Term::Fst(Box::new(t))
    }
    pub fn snd(t: Term) -> Term {
        Term::Snd(Box::new(t))
    }
    pub fn inl(target: TypeExpr, t: Term) -> Term {
        Term::Inl(target, Box::new(t))
    }
    pub fn inr(target: TypeExpr, t: Term) -> Term {
        Term::Inr(target, Box::new(t))
    }
    pub fn case(s: Term, l: Term, r: Term) -> Term {
        Term::Case(Box::new(s), Box::new(l), Box::new(r))
    }
    pub fn absurd(target: TypeExpr, t: Term) -> Term {
        Term::Absurd(target, Box::new(t))
    }
    pub fn thunk(c: Comp) -> Term {
        Term::Thunk(None, Box::new(c))
    }
    pub fn pthunk(c: Comp) -> Term {
        Term::PThunk(None, Box::new(c))
    }
    pub fn handle(h: impl Into<String>, c: Comp) -> Term {
        Term::Handle(h.into(), Box::new(c))
    }
}

/// A computation: a mode tag plus the node proper. Within one computation
/// tree the mode is constant; new trees start at `thunk` (Total), `pthunk`
/// (Partial), and `main` declarations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Comp {
    pub mode: Mode,
    pub node: CompNode,
}

/// Computation forms. `Op`'s optional annotation types the continuation
/// binder (surface `op t (x : A. c)`); `LetIn`'s optional annotation types
/// the bound computation's result.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CompNode {
    Val(Term),
    LetIn(Option<TypeExpr>, Box<Comp>, Box<Comp>),
    Op(Box<Term>, Option<TypeExpr>, Box<Comp>),
    Force(Box<Term>),
    Fix(Box<Comp>),
}

impl Comp {
    pub fn val(mode: Mode, t: Term) -> Comp {
        Comp {
            mode,
            node: CompNode::Val(t),
        }
    }
    pub fn let_in(mode: Mode, ann: Option<TypeExpr>, bound: Comp, body: Comp) -> Comp {
        Comp {
            mode,
            node: CompNode::LetIn(ann, Box::new(bound), Box::new(body)),
        }
    }
    pub fn op(mode: Mode, operand: Term, ann: Option<TypeExpr>, cont: Comp) -> Comp {
        Comp {
            mode,
            node: CompNode::Op(Box::new(operand), ann, Box::new(cont)),
        }
    }
    pub fn force(mode: Mode, t: Term) -> Comp {
        Comp {
            mode,
            node: CompNode::Force(Box::new(t)),
        }
    }
    pub fn fix(body: Comp) -> Comp {
        Comp {
            mode: Mode::Partial,
            node: CompNode::Fix(Box::new(body)),
        }
    }

    /// Retag this computation tree (and nested subcomputations, but not the
    /// bodies of thunks inside terms, which start their own trees) with
    /// `mode`.
    pub fn retag_mode(&mut self, mode: Mode) {
        self.mode = mode;
        match &mut self.node {
            CompNode::Val(_) | CompNode::Force(_) => {}
            CompNode::LetIn(_, a, b) => {
                a.retag_mode(mode);
                b.retag_mode(mode);
            }
            CompNode::Op(_, _, k) => k.retag_mode(mode),
            CompNode::Fix(b) => b.retag_mode(mode),
        }
    }
}

/// An effect signature: a carrier of kind `(Ty -> Ty) -> Ty -> Ty` together
/// with its two functoriality witnesses. `hfmap` lifts a functorial action
/// through the carrier at a fixed type constructor; `hmap` transports the
/// carrier along a polymorphic transformation between constructors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EffectDecl {
    pub name: String,
    pub carrier: TypeExpr,
    pub hfmap: Term,
    pub hmap: Term,
}

/// A handler: a monad `M` given by return/bind, an algebra `malg` collapsing
/// one layer of the effect's carrier applied to `M`, and — for handlers
/// usable from general-recursive code — a `via` functor `F` with
/// `M A = PTh E (F A)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HandlerExpr {
    pub effect: String,
    pub monad: TypeExpr,
    pub ret: Term,
    pub bind: Term,
    pub malg: Term,
    pub via: Option<TypeExpr>,
}

/// One top-level declaration. Spans are byte ranges into the source the
/// declaration was parsed from; errors reported against a declaration quote
/// this range. Spans are metadata: `PartialEq` ignores them (hand-written
/// below), so printing and re-parsing a program yields an equal one.
#[derive(Debug, Clone, Eq)]
pub enum Item {
    TypeDef {
        name: String,
        kind: Kind,
        body: TypeExpr,
        span: Span,
    },
    EffectDef {
        decl: EffectDecl,
        span: Span,
    },
    TermDef {
        name: String,
        ty: TypeExpr,
        body: Term,
        span: Span,
    },
    HandlerDef {
        name: String,
        handler: HandlerExpr,
        span: Span,
    },
    Main {
        mode: Mode,
        effect: String,
        ty: TypeExpr,
        comp: Comp,
        span: Span,
    },
}

impl PartialEq for Item {
    fn eq(&self, other: &Self) -> bool {
        use Item::*;
        match (self, other) {
            (
                TypeDef {
                    name: n1,
                    kind: k1,
                    body: b1,
                    ..
                },
                TypeDef {
                    name: n2,
                    kind: k2,
                    body: b2,
                    ..
                },
            ) => n1 == n2 && k1 == k2 && b1 == b2,
            (EffectDef { decl: d1, .. }, EffectDef { decl: d2, .. }) => d1 == d2,
            (
                TermDef {
                    name: n1,
                    ty: t1,
                    body: b1,
                    ..
                },
                TermDef {
                    name: n2,
                    ty: t2,
                    body: b2,
                    ..
                },
            ) => n1 == n2 && t1 == t2 && b1 == b2,
            (
                HandlerDef {
                    name: n1,
                    handler: h1,
                    ..
                },
                HandlerDef {
                    name: n2,
                    handler: h2,
                    ..
                },
            ) => n1 == n2 && h1 == h2,
            (
                Main {
                    mode: m1,
                    effect: e1,
                    ty: t1,
                    comp: c1,
                    ..
                },
                Main {
                    mode: m2,
                    effect: e2,
                    ty: t2,
                    comp: c2,
                    ..
                },
            ) => m1 == m2 && e1 == e2 && t1 == t2 && c1 == c2,
            _ => false,
        }
    }
}

impl Item {
    pub fn span(&self) -> Span {
        match self {
            Item::TypeDef { span, .. }
            | Item::EffectDef { span, .. }
            | Item::TermDef { span, .. }
            | Item::HandlerDef { span, .. }
            | Item::Main { span, .. } => *span,
        }
    }

    pub fn name(&self) -> Option<&str> {
        match self {
            Item::TypeDef { name, .. }
            | Item::TermDef { name, .. }
            | Item::HandlerDef { name, .. } => Some(name),
            Item::EffectDef { decl, .. } => Some(&decl.name),
            Item::Main { .. } => None,
        }
    }
}

/// A whole program: declarations in order, with at most one `main`.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Program {
    pub items: Vec<Item>,
}

impl Program {
    pub fn main(&self) -> Option<&Item> {
        self.items.iter().find(|i| matches!(i, Item::Main { .. }))
    }

    pub fn effect(&self, name: &str) -> Option<&EffectDecl> {
        self.items.iter().find_map(|i| match i {
            Item::EffectDef { decl, .. } if decl.name == name => Some(decl),
            _ => None,
        })
    }

    pub fn handler(&self, name: &str) -> Option<&HandlerExpr> {
        self.items.iter().find_map(|i| match i {
            Item::HandlerDef {
                name: n, handler, ..
            } if n == name => Some(handler),
            _ => None,
        })
    }

    pub fn type_def(&self, name: &str) -> Option<(&Kind, &TypeExpr)> {
        self.items.iter().find_map(|i| match i {
            Item::TypeDef {
                name: n,
                kind,
                body,
                ..
            } if n == name => Some((kind, body)),
            _ => None,
        })
    }

    pub fn term_def(&self, name: &str) -> Option<(&TypeExpr, &Term)> {
        self.items.iter().find_map(|i| match i {
            Item::TermDef {
                name: n, ty, body, ..
            } if n == name => Some((ty, body)),
            _ => None,
        })
    }
}

// ---------------------------------------------------------------------------
// De Bruijn traversals.
//
// One generic walker per syntactic class, parameterized by what to do at a
// type variable and (for terms/comps) at a term variable. Each callback gets
// the number of binders of its own namespace crossed so far. All shift/subst
// operations below are thin instantiations, so the binder bookkeeping lives
// in exactly one place per class.
// ---------------------------------------------------------------------------

fn map_type_vars<F>(ty: &TypeExpr, depth: usize, f: &F) -> TypeExpr
where
    F: Fn(usize, usize) -> TypeExpr,
{
    use TypeExpr::*;
    match ty {
        TVar(i) => f(*i, depth),
        TUnit => TUnit,
        TBool => TBool,
        TEmpty => TEmpty,
        TArrow(a, b) => TypeExpr::arrow(map_type_vars(a, depth, f), map_type_vars(b, depth, f)),
        TForall(k, b) => TypeExpr::forall(k.clone(), map_type_vars(b, depth + 1, f)),
        TProd(a, b) => TypeExpr::prod(map_type_vars(a, depth, f), map_type_vars(b, depth, f)),
        TSum(a, b) => TypeExpr::sum(map_type_vars(a, depth, f), map_type_vars(b, depth, f)),
        TLam(k, b) => TypeExpr::lam(k.clone(), map_type_vars(b, depth + 1, f)),
        TApp(a, b) => TypeExpr::app(map_type_vars(a, depth, f), map_type_vars(b, depth, f)),
        TTh(e, a) => TypeExpr::th(e.clone(), map_type_vars(a, depth, f)),
        TPTh(e, a) => TypeExpr::pth(e.clone(), map_type_vars(a, depth, f)),
        TConst(n) => TConst(n.clone()),
    }
}

/// Shift free type variables `>= cutoff` by `d` (which may be negative; the
/// caller promises no variable underflows).
pub fn shift_type(ty: &TypeExpr, cutoff: usize, d: isize) -> TypeExpr {
    map_type_vars(ty, cutoff, &|i, c| {
        if i < c {
            TypeExpr::TVar(i)
        } else {
            TypeExpr::TVar((i as isize + d) as usize)
        }
    })
}

/// Replace type variable `j` by `sub` and strip that binder: variables above
/// `j` shift down by one. `sub` must be well-scoped in the context without
/// the stripped binder.
pub fn subst_type(ty: &TypeExpr, sub: &TypeExpr, j: usize) -> TypeExpr {
    map_type_vars(ty, 0, &|i, d| {
        let target = j + d;
        if i == target {
            shift_type(sub, 0, d as isize)
        } else if i > target {
            TypeExpr::TVar(i - 1)
        } else {
            TypeExpr::TVar(i)
        }
    })
}

/// Walk a term mapping both variable namespaces. `ft(i, tdepth, ydepth)`
/// rewrites term variable `i` seen under `tdepth` term binders and `ydepth`
/// type binders (replacement terms may embed types, which must shift when
/// crossing a type binder); `fy(ty, ydepth)` rewrites a whole embedded type.
fn map_term_vars<FT, FY>(t: &Term, tdepth: usize, ydepth: usize, ft: &FT, fy: &FY) -> Term
where
    FT: Fn(usize, usize, usize) -> Term,
    FY: Fn(&TypeExpr, usize) -> TypeExpr,
{
    use Term::*;
    match t {
        Var(i) => ft(*i, tdepth, ydepth),
        Global(n) => Global(n.clone()),
        Lam(ann, b) => Term::lam(
            fy(ann, ydepth),
            map_term_vars(b, tdepth + 1, ydepth, ft, fy),
        ),
        App(a, b) => Term::app(
            map_term_vars(a, tdepth, ydepth, ft, fy),
            map_term_vars(b, tdepth, ydepth, ft, fy),
        ),
        TyLam(k, b) => Term::tylam(k.clone(), map_term_vars(b, tdepth, ydepth + 1, ft, fy)),
        TyApp(a, ty) => Term::tyapp(map_term_vars(a, tdepth, ydepth, ft, fy), fy(ty, ydepth)),
        Tt => Tt,
        Ff => Ff,
        Ite(c, u, v) => Term::ite(
            map_term_vars(c, tdepth, ydepth, ft, fy),
            map_term_vars(u, tdepth, ydepth, ft, fy),
            map_term_vars(v, tdepth, ydepth, ft, fy),
        ),
        Unit => Unit,
        Pair(a, b) => Term::pair(
            map_term_vars(a, tdepth, ydepth, ft, fy),
            map_term_vars(b, tdepth, ydepth, ft, fy),
        ),
        Fst(a) => Term::fst(map_term_vars(a, tdepth, ydepth, ft, fy)),
        Snd(a) => Term::snd(map_term_vars(a, tdepth, ydepth, ft, fy)),
        Inl(ty, a) => Term::inl(fy(ty, ydepth), map_term_vars(a, tdepth, ydepth, ft, fy)),
        Inr(ty, a) => Term::inr(fy(ty, ydepth), map_term_vars(a, tdepth, ydepth, ft, fy)),
        Case(s, l, r) => Term::case(
            map_term_vars(s, tdepth, ydepth, ft, fy),
            map_term_vars(l, tdepth + 1, ydepth, ft, fy),
            map_term_vars(r, tdepth + 1, ydepth, ft, fy),
        ),
        Absurd(ty, a) => Term::absurd(fy(ty, ydepth), map_term_vars(a, tdepth, ydepth, ft, fy)),
        Thunk(eff, c) => Thunk(
            eff.clone(),
            Box::new(map_comp_vars(c, tdepth, ydepth, ft, fy)),
        ),
        PThunk(eff, c) => PThunk(
            eff.clone(),
            Box::new(map_comp_vars(c, tdepth, ydepth, ft, fy)),
        ),
        Handle(h, c) => Handle(
            h.clone(),
            Box::new(map_comp_vars(c, tdepth, ydepth, ft, fy)),
        ),
    }
}

fn map_comp_vars<FT, FY>(c: &Comp, tdepth: usize, ydepth: usize, ft: &FT, fy: &FY) -> Comp
where
    FT: Fn(usize, usize, usize) -> Term,
    FY: Fn(&TypeExpr, usize) -> TypeExpr,
{
    let node = match &c.node {
        CompNode::Val(t) => CompNode::Val(map_term_vars(t, tdepth, ydepth, ft, fy)),
        CompNode::LetIn(ann, a, b) => CompNode::LetIn(
            ann.as_ref().map(|ty| fy(ty, ydepth)),
            Box::new(map_comp_vars(a, tdepth, ydepth, ft, fy)),
            Box::new(map_comp_vars(b, tdepth + 1, ydepth, ft, fy)),
        ),
        CompNode::Op(t, ann, k) => CompNode::Op(
            Box::new(map_term_vars(t, tdepth, ydepth, ft, fy)),
            ann.as_ref().map(|ty| fy(ty, ydepth)),
            Box::new(map_comp_vars(k, tdepth + 1, ydepth, ft, fy)),
        ),
        CompNode::Force(t) => CompNode::Force(Box::new(map_term_vars(t, tdepth, ydepth, ft, fy))),
        CompNode::Fix(b) => CompNode::Fix(Box::new(map_comp_vars(b, tdepth + 1, ydepth, ft, fy))),
    };
    Comp { mode: c.mode, node }
}

/// Shift free *term* variables `>= cutoff` by `d` inside a term.
pub fn shift_term(t: &Term, cutoff: usize, d: isize) -> Term {
    map_term_vars(
        t,
        cutoff,
        0,
        &|i, c, _| {
            if i < c {
                Term::Var(i)
            } else {
                Term::Var((i as isize + d) as usize)
            }
        },
        &|ty, _| ty.clone(),
    )
}

/// Shift free *term* variables `>= cutoff` by `d` inside a computation.
pub fn shift_comp(c: &Comp, cutoff: usize, d: isize) -> Comp {
    map_comp_vars(
        c,
        cutoff,
        0,
        &|i, cut, _| {
            if i < cut {
                Term::Var(i)
            } else {
                Term::Var((i as isize + d) as usize)
            }
        },
        &|ty, _| ty.clone(),
    )
}

fn subst_var(i: usize, tdepth: usize, ydepth: usize, sub: &Term, j: usize) -> Term {
    let target = j + tdepth;
    if i == target {
        let moved = shift_term(sub, 0, tdepth as isize);
        if ydepth == 0 {
            moved
        } else {
            shift_types_in_term(&moved, 0, ydepth as isize)
        }
    } else if i > target {
        Term::Var(i - 1)
    } else {
        Term::Var(i)
    }
}

/// Replace term variable `j` by `sub` in a term, stripping that binder.
pub fn subst_term(t: &Term, sub: &Term, j: usize) -> Term {
    map_term_vars(
        t,
        0,
        0,
        &|i, td, yd| subst_var(i, td, yd, sub, j),
        &|ty, _| ty.clone(),
    )
}

/// Replace term variable `j` by `sub` in a computation, stripping that
/// binder.
pub fn subst_term_in_comp(c: &Comp, sub: &Term, j: usize) -> Comp {
    map_comp_vars(
        c,
        0,
        0,
        &|i, td, yd| subst_var(i, td, yd, sub, j),
        &|ty, _| ty.clone(),
    )
}

/// Shift free *type* variables `>= cutoff` by `d` inside a term (its
/// annotations and type applications, recursively).
pub fn shift_types_in_term(t: &Term, cutoff: usize, d: isize) -> Term {
    map_term_vars(t, 0, cutoff, &|i, _, _| Term::Var(i), &|ty, yd| {
        shift_type(ty, yd, d)
    })
}

/// Replace type variable `j` by `sub` throughout a term, stripping that
/// type binder (the operational content of type application).
pub fn subst_type_in_term(t: &Term, sub: &TypeExpr, j: usize) -> Term {
    map_term_vars(t, 0, 0, &|i, _, _| Term::Var(i), &|ty, yd| {
        subst_type(ty, &shift_type(sub, 0, yd as isize), j + yd)
    })
}

/// Replace type variable `j` by `sub` throughout a computation.
pub fn subst_type_in_comp(c: &Comp, sub: &TypeExpr, j: usize) -> Comp {
    map_comp_vars(c, 0, 0, &|i, _, _| Term::Var(i), &|ty, yd| {
        subst_type(ty, &shift_type(sub, 0, yd as isize), j + yd)
    })
}

/// Alpha equivalence. With de Bruijn indices this is structural equality;
/// the function exists so call sites say what they mean.
pub fn alpha_equal<T: PartialEq>(a: &T, b: &T) -> bool {
    a == b
}

#[cfg(test)]
mod tests {
    use super::*;

    // An independent reference implementation of substitution over a
    // *named-variable* syntax. Terms are converted name->index and
    // index->name around the operation under test, so any systematic
    // off-by-one in the de Bruijn walkers (not mirrored in the conversion)
    // shows up as a mismatch against capture-avoiding substitution on names.
    #[derive(Debug, Clone, PartialEq)]
    enum N {
        V(String),
        Lam(String, Box<N>),
        App(Box<N>, Box<N>),
        Pair(Box<N>, Box<N>),
        Fst(Box<N>),
        Ite(Box<N>, Box<N>, Box<N>),
        Tt,
        Ff,
    }

    fn fresh(used: &mut usize) -> String {
        *used += 1;
        format!("v{used}")
    }

    fn free_vars(n: &N, out: &mut Vec<String>) {
        match n {
            N::V(x) => {
                if !out.contains(x) {
                    out.push(x.clone());
                }
            }
            N::Lam(x, b) => {
                let mut inner = Vec::new();
                free_vars(b, &mut inner);
                for v in inner {
                    if v != *x && !out.contains(&v) {
                        out.push(v);
                    }
                }
            }
            N::App(a, b) | N::Pair(a, b) => {
                free_vars(a, out);
                free_vars(b, out);
            }
            N::Fst(a) => free_vars(a, out),
            N::Ite(a, b, c) => {
                free_vars(a, out);
                free_vars(b, out);
                free_vars(c, out);
            }
            N::Tt | N::Ff => {}
        }
    }

    /// Capture-avoiding substitution on names, the textbook way.
    fn nsubst(n: &N, x: &str, s: &N, used: &mut usize) -> N {
        match n {
            N::V(y) if y == x => s.clone(),
            N::V(y) => N::V(y.clone()),
            N::Lam(y, b) if y == x => N::Lam(y.clone(), b.clone()),
            N::Lam(y, b) => {
                let mut fv = Vec::new();
                free_vars(s, &mut fv);
                if fv.contains(y) {
                    let z = fresh(used);
                    let renamed = nsubst(b, y, &N::V(z.clone()), used);
                    N::Lam(z, Box::new(nsubst(&renamed, x, s, used)))
                } else {
                    N::Lam(y.clone(), Box::new(nsubst(b, x, s, used)))
                }
            }
            N::App(a, b) => N::App(
                Box::new(nsubst(a, x, s, used)),
                Box::new(nsubst(b, x, s, used)),
            ),
            N::Pair(a, b) => N::Pair(
                Box::new(nsubst(a, x, s, used)),
                Box::new(nsubst(b, x, s, used)),
            ),
            N::Fst(a) => N::Fst(Box::new(nsubst(a, x, s, used))),
            N::Ite(a, b, c) => N::Ite(
                Box::new(nsubst(a, x, s, used)),
                Box::new(nsubst(b, x, s, used)),
                Box::new(nsubst(c, x, s, used)),
            ),
            N::Tt => N::Tt,
            N::Ff => N::Ff,
        }
    }

    fn to_db(n: &N, env: &[String]) -> Term {
        match n {
            N::V(x) => {
                let i = env.iter().rev().position(|y| y == x).expect("open term");
                Term::Var(i)
            }
            N::Lam(x, b) => {
                let mut env2 = env.to_vec();
                env2.push(x.clone());
                Term::lam(TypeExpr::TBool, to_db(b, &env2))
            }
            N::App(a, b) => Term::app(to_db(a, env), to_db(b, env)),
            N::Pair(a, b) => Term::pair(to_db(a, env), to_db(b, env)),
            N::Fst(a) => Term::fst(to_db(a, env)),
            N::Ite(a, b, c) => Term::ite(to_db(a, env), to_db(b, env), to_db(c, env)),
            N::Tt => Term::Tt,
            N::Ff => Term::Ff,
        }
    }

    /// Deterministic little term generator over the shared fragment.
    fn gen_named(seed: &mut u64, depth: usize, scope: &[String]) -> N {
        *seed = seed
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        let r = (*seed >> 33) as usize;
        if depth == 0 || scope.is_empty() && r.is_multiple_of(3) {
            return match r % 3 {
                0 => N::Tt,
                1 => N::Ff,
                _ => {
                    if scope.is_empty() {
                        N::Tt
                    } else {
                        N::V(scope[r % scope.len()].clone())
                    }
                }
            };
        }
        match r % 6 {
            0 => {
                let x = format!("x{}", r % 4); // deliberately clashy names
                let mut scope2 = scope.to_vec();
                scope2.push(x.clone());
                N::Lam(x, Box::new(gen_named(seed, depth - 1, &scope2)))
            }
            1 => N::App(
                Box::new(gen_named(seed, depth - 1, scope)),
                Box::new(gen_named(seed, depth - 1, scope)),
            ),
            2 => N::Pair(
                Box::new(gen_named(seed, depth - 1, scope)),
                Box::new(gen_named(seed, depth - 1, scope)),
            ),
            3 => N::Fst(Box::new(gen_named(seed, depth - 1, scope))),
            4 => N::Ite(
                Box::new(gen_named(seed, depth - 1, scope)),
                Box::new(gen_named(seed, depth - 1, scope)),
                Box::new(gen_named(seed, depth - 1, scope)),
            ),
            _ => {
                if scope.is_empty() {
                    N::Ff
                } else {
                    N::V(scope[r % scope.len()].clone())
                }
            }
        }
    }

    #[test]
    fn subst_agrees_with_named_reference() {
        let mut seed = 0xfacade_u64;
        let mut checked = 0;
        for case in 0..400 {
            let scope = vec!["a".to_string(), "b".to_string()];
            let body = gen_named(&mut seed, 4, &scope);
            let arg = gen_named(&mut seed, 3, &[]); // closed replacement
            let mut used = 1000 + case;

            // Named route: substitute for "a", then convert.
            let expected = nsubst(&body, "a", &arg, &mut used);
            // Both "a" (slot 1 after pushing b) and "b" (slot 0) are in
            // scope; substituting for "a" strips its binder, leaving "b".
            let expected_db = to_db(&expected, &["b".to_string()]);

            // De Bruijn route: convert, then substitute at slot 1.
            let body_db = to_db(&body, &scope);
            let arg_db = to_db(&arg, &[]);
            let actual = subst_term(&body_db, &arg_db, 1);

            assert_eq!(actual, expected_db, "case {case}: {body:?} [a := {arg:?}]");
            checked += 1;
        }
        assert_eq!(checked, 400);
    }

    #[test]
    fn shift_then_instantiate_is_identity() {
        // (\x. t) applied to Var(k) after shifting t under the binder:
        // subst(shift(t, 0, 1), s, 0) == t for any closed-enough t, because
        // the shifted occurrences skip the stripped slot entirely.
        let mut seed = 7_u64;
        for _ in 0..200 {
            let scope = vec!["a".into(), "b".into(), "c".into()];
            let t = to_db(&gen_named(&mut seed, 4, &scope), &scope);
            let shifted = shift_term(&t, 0, 1);
            let back = subst_term(&shifted, &Term::Tt, 0);
            assert_eq!(back, t);
        }
    }

    #[test]
    fn type_subst_strips_binder() {
        use TypeExpr::*;
        // (forall a. a -> b)[b := Bool] with b the next binder out:
        // inside the forall, b is TVar(1).
        let body = TypeExpr::arrow(TVar(0), TVar(1));
        let ty = TypeExpr::forall(Kind::Ty, body);
        let out = subst_type(&ty, &TBool, 0);
        assert_eq!(
            out,
            TypeExpr::forall(Kind::Ty, TypeExpr::arrow(TVar(0), TBool))
        );

        // Variables above the slot shift down.
        let ty2 = TVar(3);
        assert_eq!(subst_type(&ty2, &TBool, 1), TVar(2));
    }

    #[test]
    fn type_and_term_namespaces_are_independent() {
        // A term binder under a type annotation: substituting a *type*
        // variable must not disturb term indices, and vice versa.
        let t = Term::lam(TypeExpr::TVar(0), Term::app(Term::Var(0), Term::Var(1)));
        let after_ty = subst_type_in_term(&t, &TypeExpr::TBool, 0);
        assert_eq!(
            after_ty,
            Term::lam(TypeExpr::TBool, Term::app(Term::Var(0), Term::Var(1)))
        );
        let after_tm = subst_term(&t, &Term::Tt, 0);
        assert_eq!(
            after_tm,
            Term::lam(TypeExpr::TVar(0), Term::app(Term::Var(0), Term::Tt))
        );
    }

    #[test]
    fn subst_under_tylam_shifts_replacement_types() {
        // Substituting x := (inl[a + Bool] tt) under a /\b. must bump the
        // type variable in the annotation as it crosses the type binder.
        let sub = Term::inl(TypeExpr::sum(TypeExpr::TVar(0), TypeExpr::TBool), Term::Tt);
        let body = Term::tylam(Kind::Ty, Term::Var(0));
        let out = subst_term(&body, &sub, 0);
        assert_eq!(
            out,
            Term::tylam(
                Kind::Ty,
                Term::inl(TypeExpr::sum(TypeExpr::TVar(1), TypeExpr::TBool), Term::Tt)
            )
        );
    }
}
