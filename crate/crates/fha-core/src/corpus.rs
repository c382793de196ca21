//! The executable test corpus: seeded program generators, a battery of
//! hand-written programs, random instances of the computation laws, and the
//! nine checks that gate a build. The same code backs the `acceptance`
//! integration tests and the CLI's `selftest` subcommand, so a shipped
//! binary can re-certify itself.
//!
//! Everything random is driven by a ChaCha stream from an explicit seed, so
//! a failure reported by CI reproduces locally from its seed. The
//! generators produce *well-typed programs by construction* and every
//! generated program still goes through the checker; a check failure there
//! is a generator bug and fails the criterion rather than being skipped.
//!
//! The nine checks, in plain language:
//!
//! 1.  consistency — `tt` and `ff` extract to distinct normal forms.
//! 2.  canonicity — closed Total boolean programs always evaluate to a
//!     boolean: no stuck states, within default fuel, under a time budget.
//! 3.  extraction totality — every corpus program's extraction normalizes
//!     and decodes to a boolean.
//! 4.  backend agreement — the evaluator and the extraction pipeline give
//!     the same answer on the whole corpus.
//! 5.  computation laws — the seven equation schemas of the theory hold on
//!     random closed instances, both operationally and up to β-conversion
//!     of extractions.
//! 6.  exception goldens — the three canonical exception programs produce
//!     exactly the values a hand derivation gives.
//! 7.  recursion — a five-step fixpoint countdown terminates in both
//!     backends under a small budget; a trivial self-forcing fixpoint
//!     exhausts any budget in both.
//! 8.  no sequencing law through handlers — a deliberately law-breaking
//!     handler distinguishes `handle h (let …)` from its bind-split,
//!     witnessing that the implementation does not equate them (doing so
//!     would collapse the theory).
//! 9.  parametricity smoke test — generated closed inhabitants of
//!     `forall (a : Ty). a -> a` all behave as the identity on booleans.

use std::fmt;
use std::rc::Rc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::check::check_program;
use crate::eval::{run_program, Outcome};
use crate::extract::extract_program;
use crate::lam::{decode_value, normalize, print_lam, LamError};
use crate::parser::parse_program_with;
use crate::stdlib::{
    fct_of_mnd, modular_handle, prelude, prelude_effects, th_alg, with_prelude, ModularHandler,
};
use crate::syntax::{
    shift_comp, subst_term_in_comp, Comp, Item, Kind, Mode, Program, Span, Term, TypeExpr,
};

/// Seed used by the acceptance suite and `selftest` when none is given.
pub const DEFAULT_SEED: u64 = 0x0d15ea5e;

/// Default fuel / β-budget, matching the CLI defaults.
pub const FUEL: u64 = 1_000_000;

pub struct CriterionReport {
    pub id: usize,
    pub title: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl fmt::Display for CriterionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        write!(
            f,
            "criterion {} ({}): {} — {}",
            self.id, self.title, verdict, self.detail
        )
    }
}

/// Run all nine checks. The corpus is built once and shared by the checks
/// that need it.
pub fn run_all(seed: u64) -> Vec<CriterionReport> {
    let corpus = boolean_corpus(seed);
    vec![
        criterion_1(),
        criterion_2_on(&corpus),
        criterion_3_on(&corpus),
        criterion_4_on(&corpus),
        criterion_5(seed),
        criterion_6(),
        criterion_7(),
        criterion_8(),
        criterion_9(seed),
    ]
}

// ---------------------------------------------------------------------------
// Shared plumbing.
// ---------------------------------------------------------------------------

fn tv(i: usize) -> TypeExpr {
    TypeExpr::TVar(i)
}

fn checked(prog: Program) -> Result<Program, String> {
    let mut full = with_prelude(prog);
    check_program(&mut full).map_err(|e| e.render("<corpus>"))?;
    Ok(full)
}

fn parse_checked(src: &str) -> Result<Program, String> {
    let prog = parse_program_with(src, &prelude_effects()).map_err(|e| e.render("<corpus>"))?;
    checked(prog)
}

fn eval_render(prog: &Program, fuel: u64) -> Result<String, String> {
    Ok(run_program(prog, fuel)?.render())
}

fn extract_render(prog: &Program, budget: u64) -> Result<String, String> {
    let t = extract_program(prog)?;
    let nf = normalize(&t, budget).map_err(|e| e.to_string())?;
    decode_value(&nf).ok_or_else(|| "extraction normalized to an undecodable shape".to_string())
}

fn fail(id: usize, title: &'static str, detail: String) -> CriterionReport {
    CriterionReport {
        id,
        title,
        pass: false,
        detail,
    }
}

fn pass(id: usize, title: &'static str, detail: String) -> CriterionReport {
    CriterionReport {
        id,
        title,
        pass: true,
        detail,
    }
}

// ---------------------------------------------------------------------------
// A typed term/computation generator.
//
// Types are drawn from a small first-order universe; terms are produced
// type-directed, so everything the generator emits is well-typed by
// construction. Exception operations are only emitted under an `hExc`
// handle, which keeps every program closed and fully handled.
// ---------------------------------------------------------------------------

#[derive(Clone, PartialEq, Eq)]
enum GTy {
    B,
    U,
    P(Rc<GTy>, Rc<GTy>),
    S(Rc<GTy>, Rc<GTy>),
    F(Rc<GTy>, Rc<GTy>),
}

impl GTy {
    fn to_type(&self) -> TypeExpr {
        match self {
            GTy::B => TypeExpr::TBool,
            GTy::U => TypeExpr::TUnit,
            GTy::P(a, b) => TypeExpr::prod(a.to_type(), b.to_type()),
            GTy::S(a, b) => TypeExpr::sum(a.to_type(), b.to_type()),
            GTy::F(a, b) => TypeExpr::arrow(a.to_type(), b.to_type()),
        }
    }
}

struct Gen<'r> {
    rng: &'r mut ChaCha8Rng,
    ctx: Vec<GTy>,
    /// Allow `case (handle hExc …)` inside terms.
    handles: bool,
}

impl Gen<'_> {
    fn new(rng: &mut ChaCha8Rng, handles: bool) -> Gen<'_> {
        Gen {
            rng,
            ctx: Vec::new(),
            handles,
        }
    }

    fn small_ty(&mut self, depth: u32) -> GTy {
        let roll = self.rng.gen_range(0..10);
        match roll {
            0..=3 => GTy::B,
            4..=5 => GTy::U,
            6 if depth > 0 => GTy::P(
                Rc::new(self.small_ty(depth - 1)),
                Rc::new(self.small_ty(depth - 1)),
            ),
            7 if depth > 0 => GTy::S(
                Rc::new(self.small_ty(depth - 1)),
                Rc::new(self.small_ty(depth - 1)),
            ),
            8 if depth > 0 => GTy::F(Rc::new(self.small_ty(depth - 1)), Rc::new(GTy::B)),
            _ => GTy::B,
        }
    }

    /// A variable of the wanted type, if any is in scope.
    fn var_of(&mut self, ty: &GTy) -> Option<Term> {
        let hits: Vec<usize> = self
            .ctx
            .iter()
            .rev()
            .enumerate()
            .filter(|(_, t)| *t == ty)
            .map(|(i, _)| i)
            .collect();
        if hits.is_empty() {
            None
        } else {
            let i = hits[self.rng.gen_range(0..hits.len())];
            Some(Term::Var(i))
        }
    }

    /// Smallest inhabitant of a type.
    fn leaf(&mut self, ty: &GTy) -> Term {
        if self.rng.gen_bool(0.4) {
            if let Some(v) = self.var_of(ty) {
                return v;
            }
        }
        match ty {
            GTy::B => {
                if self.rng.gen_bool(0.5) {
                    Term::Tt
                } else {
                    Term::Ff
                }
            }
            GTy::U => Term::Unit,
            GTy::P(a, b) => Term::pair(self.leaf(a), self.leaf(b)),
            GTy::S(a, b) => {
                let ann = ty.to_type();
                if self.rng.gen_bool(0.5) {
                    Term::inl(ann, self.leaf(a))
                } else {
                    Term::inr(ann, self.leaf(b))
                }
            }
            GTy::F(a, b) => {
                self.ctx.push((**a).clone());
                let body = self.leaf(b);
                self.ctx.pop();
                Term::lam(a.to_type(), body)
            }
        }
    }

    fn term(&mut self, ty: &GTy, depth: u32) -> Term {
        if depth == 0 {
            return self.leaf(ty);
        }
        let roll = self.rng.gen_range(0..100);
        match roll {
            0..=11 => {
                if let Some(v) = self.var_of(ty) {
                    v
                } else {
                    self.leaf(ty)
                }
            }
            12..=27 => Term::ite(
                self.term(&GTy::B, depth - 1),
                self.term(ty, depth - 1),
                self.term(ty, depth - 1),
            ),
            28..=39 => {
                // β-redex: (\x : σ. body) arg
                let arg_ty = self.small_ty(1);
                self.ctx.push(arg_ty.clone());
                let body = self.term(ty, depth - 1);
                self.ctx.pop();
                let arg = self.term(&arg_ty, depth - 1);
                Term::app(Term::lam(arg_ty.to_type(), body), arg)
            }
            40..=47 => {
                let other = self.small_ty(1);
                let (pt, proj): (GTy, fn(Term) -> Term) = if self.rng.gen_bool(0.5) {
                    (GTy::P(Rc::new(ty.clone()), Rc::new(other)), Term::fst)
                } else {
                    (GTy::P(Rc::new(other), Rc::new(ty.clone())), Term::snd)
                };
                proj(self.term(&pt, depth - 1))
            }
            48..=57 => {
                let l = self.small_ty(1);
                let r = self.small_ty(1);
                let scrut = self.term(&GTy::S(Rc::new(l.clone()), Rc::new(r.clone())), depth - 1);
                self.ctx.push(l);
                let left = self.term(ty, depth - 1);
                self.ctx.pop();
                self.ctx.push(r);
                let right = self.term(ty, depth - 1);
                self.ctx.pop();
                Term::case(scrut, left, right)
            }
            58..=64 => {
                // the polymorphic identity, instantiated here
                let id = Term::tylam(Kind::Ty, Term::lam(tv(0), Term::Var(0)));
                Term::app(Term::tyapp(id, ty.to_type()), self.term(ty, depth - 1))
            }
            65..=74 if self.handles && *ty == GTy::B => {
                // case (handle hExc c) { inl u -> b ; inr x -> x }
                let c = self.comp(&GTy::B, depth - 1, true);
                self.ctx.push(GTy::U);
                let fallback = self.leaf(&GTy::B);
                self.ctx.pop();
                Term::case(Term::handle("hExc", c), fallback, Term::Var(0))
            }
            _ => match ty {
                GTy::B => Term::ite(self.leaf(&GTy::B), self.leaf(ty), self.leaf(ty)),
                GTy::U => Term::Unit,
                GTy::P(a, b) => Term::pair(self.term(a, depth - 1), self.term(b, depth - 1)),
                GTy::S(a, b) => {
                    let ann = ty.to_type();
                    if self.rng.gen_bool(0.5) {
                        Term::inl(ann, self.term(a, depth - 1))
                    } else {
                        Term::inr(ann, self.term(b, depth - 1))
                    }
                }
                GTy::F(a, b) => {
                    self.ctx.push((**a).clone());
                    let body = self.term(b, depth - 1);
                    self.ctx.pop();
                    Term::lam(a.to_type(), body)
                }
            },
        }
    }

    /// A Total computation of the given type. With `exc` set the ambient
    /// effect is the exception row and `throw`/`catch` may appear.
    fn comp(&mut self, ty: &GTy, depth: u32, exc: bool) -> Comp {
        let m = Mode::Total;
        if depth == 0 {
            return Comp::val(m, self.term(ty, 1));
        }
        let roll = self.rng.gen_range(0..100);
        match roll {
            0..=29 => Comp::val(m, self.term(ty, depth)),
            30..=59 => {
                let bound_ty = self.small_ty(1);
                let bound = self.comp(&bound_ty, depth - 1, exc);
                self.ctx.push(bound_ty.clone());
                let body = self.comp(ty, depth - 1, exc);
                self.ctx.pop();
                let ann = self.rng.gen_bool(0.5).then(|| bound_ty.to_type());
                Comp::let_in(m, ann, bound, body)
            }
            60..=69 => Comp::force(m, Term::thunk(self.comp(ty, depth - 1, exc))),
            70..=79 if exc => {
                Comp::force(m, Term::tyapp(Term::Global("throw".into()), ty.to_type()))
            }
            80..=95 if exc => {
                let body = Term::thunk(self.comp(ty, depth - 1, true));
                let fallback = Term::thunk(self.comp(ty, depth - 1, true));
                Comp::force(
                    m,
                    Term::apps(
                        Term::tyapp(Term::Global("catch".into()), ty.to_type()),
                        [body, fallback],
                    ),
                )
            }
            _ => Comp::val(m, self.term(ty, depth)),
        }
    }
}

fn main_item(mode: Mode, effect: &str, ty: TypeExpr, comp: Comp) -> Item {
    Item::Main {
        mode,
        effect: effect.into(),
        ty,
        comp,
        span: Span::new(0, 0),
    }
}

fn bool_main(comp: Comp) -> Program {
    Program {
        items: vec![main_item(Mode::Total, "VoidH", TypeExpr::TBool, comp)],
    }
}

/// Generate `n` closed Total boolean programs. Each is checked; a checker
/// rejection here is a generator bug, surfaced as an error.
pub fn generated_bool_programs(seed: u64, n: usize) -> Result<Vec<Program>, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let comp = {
            let mut g = Gen::new(&mut rng, true);
            g.comp(&GTy::B, 3, false)
        };
        let prog = checked(bool_main(comp)).map_err(|e| format!("generated program {i}: {e}"))?;
        out.push(prog);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Hand-written programs. All close over the prelude only and have
// `main[total] VoidH : Bool`.
// ---------------------------------------------------------------------------

const HANDWRITTEN: &[&str] = &[
    // plain values and control
    "main[total] VoidH : Bool = val tt",
    "main[total] VoidH : Bool = val ff",
    "main[total] VoidH : Bool = val (ite tt tt ff)",
    "main[total] VoidH : Bool = val (ite (ite ff tt ff) (ite tt ff tt) tt)",
    "main[total] VoidH : Bool = let x = val tt in val x",
    "main[total] VoidH : Bool = \
     let x = val ff in let y = val (ite x tt ff) in val (ite y ff tt)",
    "main[total] VoidH : Bool = val ((\\(b : Bool). ite b ff tt) tt)",
    "main[total] VoidH : Bool = \
     val ((\\(f : Bool -> Bool). f (f tt)) (\\(b : Bool). ite b ff tt))",
    "main[total] VoidH : Bool = \
     let f = val (\\(b : Bool). \\(c : Bool). ite b c ff) in val (f tt tt)",
    "main[total] VoidH : Bool = val ((\\(u : Unit). tt) ())",
    "main[total] VoidH : Bool = force (thunk (val tt))",
    "main[total] VoidH : Bool = let t = val (thunk (val ff)) in force t",
    // boolean Church numerals: iterate negation
    "term two : (Bool -> Bool) -> Bool -> Bool = \
       \\(f : Bool -> Bool). \\(x : Bool). f (f x)
     main[total] VoidH : Bool = val (two (\\(b : Bool). ite b ff tt) tt)",
    "term three : (Bool -> Bool) -> Bool -> Bool = \
       \\(f : Bool -> Bool). \\(x : Bool). f (f (f x))
     main[total] VoidH : Bool = val (three (\\(b : Bool). ite b ff tt) tt)",
    "term two : (Bool -> Bool) -> Bool -> Bool = \
       \\(f : Bool -> Bool). \\(x : Bool). f (f x)
     main[total] VoidH : Bool = \
       val (two (two (\\(b : Bool). ite b ff tt)) tt)",
    "term iter : ((Bool -> Bool) -> Bool -> Bool) -> Bool = \
       \\(n : (Bool -> Bool) -> Bool -> Bool). n (\\(b : Bool). ite b ff tt) ff
     main[total] VoidH : Bool = \
       val (iter (\\(f : Bool -> Bool). \\(x : Bool). f (f (f x))))",
    // pairs and sums
    "main[total] VoidH : Bool = val (fst (tt, ff))",
    "main[total] VoidH : Bool = val (snd (ff, ite tt tt ff))",
    "main[total] VoidH : Bool = let p = val (tt, (ff, tt)) in val (fst (snd p))",
    "main[total] VoidH : Bool = \
     val (case inl[Bool + Unit] tt { inl b -> b ; inr u -> ff })",
    "main[total] VoidH : Bool = \
     val (case inr[Bool + Unit] () { inl b -> b ; inr u -> tt })",
    "main[total] VoidH : Bool = \
     val (case inr[Unit + (Bool * Bool)] (tt, ff) { inl u -> ff ; inr p -> fst p })",
    "main[total] VoidH : Bool = \
     let s = val (inl[(Bool -> Bool) + Unit] (\\(b : Bool). b)) \
     in val (case s { inl f -> f tt ; inr u -> ff })",
    "main[total] VoidH : Bool = \
     val (snd (case inl[Unit + Unit] () { inl u -> (ff, tt) ; inr u -> (tt, ff) }))",
    // polymorphic instantiation
    "main[total] VoidH : Bool = val ((/\\(a : Ty). \\(x : a). x) [Bool] tt)",
    "main[total] VoidH : Bool = \
     val ((/\\(a : Ty). /\\(b : Ty). \\(x : a). \\(y : b). x) [Bool] [Unit] tt ())",
    "term compose : forall (a : Ty). (a -> a) -> (a -> a) -> a -> a = \
       /\\(a : Ty). \\(f : a -> a). \\(g : a -> a). \\(x : a). f (g x)
     main[total] VoidH : Bool = \
       val (compose [Bool] (\\(b : Bool). ite b ff tt) (\\(b : Bool). ite b ff tt) tt)",
    "main[total] VoidH : Bool = \
     val ((/\\(a : Ty). \\(x : a). x) [Bool -> Bool] (\\(b : Bool). b) ff)",
    // exception scenarios; handle gives Unit + Bool, case it back down
    "main[total] VoidH : Bool = \
     val (case (handle hExc (force (throw [Bool]))) { inl u -> tt ; inr b -> ff })",
    "main[total] VoidH : Bool = \
     val (case (handle hExc (force (catch [Bool] (throw [Bool]) (thunk (val ff))))) \
       { inl u -> tt ; inr b -> b })",
    "main[total] VoidH : Bool = \
     val (case (handle hExc (force (catch [Bool] (thunk (val tt)) (thunk (val ff))))) \
       { inl u -> ff ; inr b -> b })",
    "main[total] VoidH : Bool = \
     val (case (handle hExc (force (catch [Bool] \
       (catch [Bool] (throw [Bool]) (throw [Bool])) (thunk (val tt))))) \
       { inl u -> ff ; inr b -> b })",
    "main[total] VoidH : Bool = \
     val (case (handle hExc (let x = val tt in force (throw [Bool]))) \
       { inl u -> tt ; inr b -> b })",
    "main[total] VoidH : Bool = \
     val (case (handle hExc (force (catch [Bool] (throw [Bool]) (throw [Bool])))) \
       { inl u -> tt ; inr b -> b })",
    "main[total] VoidH : Bool = \
     val (case (handle hExc (let x = force (catch [Bool] (throw [Bool]) (thunk (val tt))) \
       in val (ite x x ff))) { inl u -> ff ; inr b -> b })",
    "main[total] VoidH : Bool = \
     let s = val (handle hExc (force (throw [Unit]))) \
     in val (case s { inl u -> tt ; inr u -> ff })",
    "main[total] VoidH : Bool = \
     val (ite (case (handle hExc (val tt)) { inl u -> ff ; inr b -> b }) tt ff)",
    "main[total] VoidH : Bool = \
     val (ite tt tt (case (handle hExc (force (throw [Bool]))) { inl u -> ff ; inr b -> b }))",
    "main[total] VoidH : Bool = \
     val (case (handle hExc (force (catch [Bool * Bool] \
       (thunk (val (tt, ff))) (thunk (val (ff, tt)))))) \
       { inl u -> ff ; inr p -> fst p })",
    "main[total] VoidH : Bool = \
     val (case (handle hExc (force (catch [Bool] \
       (thunk (force (throw [Bool]))) (thunk (force (catch [Bool] \
         (throw [Bool]) (thunk (val tt)))))))) { inl u -> ff ; inr b -> b })",
    // custom handlers
    "effect Flip { flip : Unit ~> Bool }
     handler hBoth for Flip {
       M = \\(a : Ty). a * a;
       ret = /\\(a : Ty). \\(x : a). (x, x);
       bind = /\\(a : Ty). /\\(b : Ty). \\(m : a * a). \\(k : a -> b * b).
         (fst (k (fst m)), snd (k (snd m)));
       malg = /\\(a : Ty). \\(o : (Unit * (Bool -> a)) + Empty).
         case o { inl pk -> (snd pk tt, snd pk ff) ; inr e -> absurd [a * a] e }
     }
     main[total] VoidH : Bool =
       val (fst (handle hBoth (let x = force (flip ()) in val (ite x tt ff))))",
    "effect Flip { flip : Unit ~> Bool }
     handler hBoth for Flip {
       M = \\(a : Ty). a * a;
       ret = /\\(a : Ty). \\(x : a). (x, x);
       bind = /\\(a : Ty). /\\(b : Ty). \\(m : a * a). \\(k : a -> b * b).
         (fst (k (fst m)), snd (k (snd m)));
       malg = /\\(a : Ty). \\(o : (Unit * (Bool -> a)) + Empty).
         case o { inl pk -> (snd pk tt, snd pk ff) ; inr e -> absurd [a * a] e }
     }
     main[total] VoidH : Bool =
       val (snd (handle hBoth (let x = force (flip ()) in let y = force (flip ()) in
         val (ite x y ff))))",
    "effect St { get : Unit ~> Bool ; put : Bool ~> Unit }
     type State : Ty -> Ty = \\(a : Ty). Bool -> a * Bool
     handler hSt for St {
       M = State;
       ret = /\\(a : Ty). \\(x : a). \\(s : Bool). (x, s);
       bind = /\\(a : Ty). /\\(b : Ty). \\(m : State a). \\(k : a -> State b). \\(s : Bool).
         (\\(ps : a * Bool). k (fst ps) (snd ps)) (m s);
       malg = /\\(a : Ty). \\(o : (Unit * (Bool -> a)) + ((Bool * (Unit -> a)) + Empty)).
         case o {
           inl getk -> \\(s : Bool). (snd getk s, s) ;
           inr rest -> case rest {
             inl putk -> \\(s : Bool). (snd putk (), fst putk) ;
             inr e -> absurd [State a] e } }
     }
     main[total] VoidH : Bool =
       let run = val (handle hSt (let u = force (put tt) in force (get ())))
       in val (snd (run ff))",
    "effect Flip { flip : Unit ~> Bool }
     handler hFirst for Flip {
       M = \\(a : Ty). a;
       ret = /\\(a : Ty). \\(x : a). x;
       bind = /\\(a : Ty). /\\(b : Ty). \\(m : a). \\(k : a -> b). k m;
       malg = /\\(a : Ty). \\(o : (Unit * (Bool -> a)) + Empty).
         case o { inl pk -> snd pk tt ; inr e -> absurd [a] e }
     }
     main[total] VoidH : Bool = val (handle hFirst (force (flip ())))",
    "handler hId for VoidH {
       M = \\(a : Ty). a;
       ret = /\\(a : Ty). \\(x : a). x;
       bind = /\\(a : Ty). /\\(b : Ty). \\(m : a). \\(k : a -> b). k m;
       malg = /\\(a : Ty). \\(o : Empty). absurd [a] o
     }
     main[total] VoidH : Bool = val (handle hId (val tt))",
    "handler hCollapse for VoidH {
       M = \\(a : Ty). Bool;
       ret = /\\(a : Ty). \\(x : a). tt;
       bind = /\\(a : Ty). /\\(b : Ty). \\(m : Bool). \\(k : a -> Bool). m;
       malg = /\\(a : Ty). \\(o : Empty). absurd [Bool] o
     }
     main[total] VoidH : Bool = val (handle hCollapse (val ff))",
    // misc
    "main[total] VoidH : Bool = \
     let u = val () in let p = val (u, tt) in val (snd p)",
    "main[total] VoidH : Bool = \
     val ((\\(f : (Bool -> Bool) -> Bool). f (\\(b : Bool). b)) (\\(g : Bool -> Bool). g tt))",
];

/// The hand-written corpus: parsed sources plus a few programs built with
/// the library's handler derivations (reflection through the derived thunk
/// algebra, and the packaged modular-handling recipe).
pub fn handwritten_bool_programs() -> Result<Vec<Program>, String> {
    let mut out = Vec::new();
    for (i, src) in HANDWRITTEN.iter().enumerate() {
        let prog = parse_checked(src).map_err(|e| format!("hand-written program {i}: {e}"))?;
        out.push(prog);
    }
    out.extend(reflection_programs()?);
    Ok(out)
}

/// Programs using the derived thunk-algebra handler: the inner handle
/// re-issues operations into the ambient effect, the outer `hExc` interprets
/// them; and the packaged modular-handle form of the same thing.
fn reflection_programs() -> Result<Vec<Program>, String> {
    let pre = prelude();
    let exc = pre.effect("Exc").expect("prelude defines Exc").clone();
    let refl = Item::HandlerDef {
        name: "hRefl".into(),
        handler: th_alg(&exc, Mode::Total),
        span: Span::new(0, 0),
    };
    let mut out = Vec::new();

    // case (handle hExc (force (handle hRefl c))) { … } for three c's.
    let scenarios: &[(&str, &str)] = &[
        ("force (catch [Bool] (throw [Bool]) (thunk (val tt)))", "ff"),
        ("force (throw [Bool])", "tt"),
        ("val tt", "ff"),
    ];
    for (inner, inl_arm) in scenarios {
        let src = format!(
            "main[total] VoidH : Bool = \
             val (case (handle hExc (force (handle hRefl ({inner})))) \
               {{ inl u -> {inl_arm} ; inr b -> b }})"
        );
        let mut prog =
            parse_program_with(&src, &prelude_effects()).map_err(|e| e.render("<corpus>"))?;
        prog.items.insert(0, refl.clone());
        out.push(checked(prog).map_err(|e| format!("reflection program: {e}"))?);
    }

    // The packaged form: run [A] (handle hRefl c), with run interpreting the
    // reflected thunk under hExc back in the ambient world.
    let run = Term::tylam(
        Kind::Ty,
        Term::lam(
            TypeExpr::th("Exc", tv(0)),
            Term::thunk(Comp::val(
                Mode::Total,
                Term::handle("hExc", Comp::force(Mode::Total, Term::Var(0))),
            )),
        ),
    );
    let modular = ModularHandler {
        alg: "hRefl".into(),
        run,
    };
    let inner = Comp::force(
        Mode::Total,
        Term::apps(
            Term::tyapp(Term::Global("catch".into()), TypeExpr::TBool),
            [
                Term::thunk(Comp::force(
                    Mode::Total,
                    Term::tyapp(Term::Global("throw".into()), TypeExpr::TBool),
                )),
                Term::thunk(Comp::val(Mode::Total, Term::Tt)),
            ],
        ),
    );
    let handled = modular_handle(&modular, &TypeExpr::TBool, inner, Mode::Total);
    let comp = Comp::let_in(
        Mode::Total,
        None,
        handled,
        Comp::val(
            Mode::Total,
            Term::case(Term::Var(0), Term::Ff, Term::Var(0)),
        ),
    );
    let mut prog = bool_main(comp);
    prog.items.insert(0, refl);
    out.push(checked(prog).map_err(|e| format!("modular-handle program: {e}"))?);
    Ok(out)
}

/// The full boolean corpus: hand-written plus `n = 500` generated.
pub fn boolean_corpus(seed: u64) -> Result<Vec<Program>, String> {
    let mut all = handwritten_bool_programs()?;
    all.extend(generated_bool_programs(seed, 500)?);
    Ok(all)
}

// ---------------------------------------------------------------------------
// Law instances.
// ---------------------------------------------------------------------------

/// The seven equation schemas of the computation theory.
#[derive(Clone, Copy, PartialEq, Eq)]
pub enum Law {
    /// `let x = val a in k  =  k[a/x]`
    ValLet,
    /// `let x = m in val x  =  m`
    LetVal,
    /// `let y = (let x = m1 in m2) in m3  =  let x = m1 in let y = m2 in m3`
    LetAssoc,
    /// `let y = op p (x. k) in k'  =  op p (x. let y = k in k')`
    LetOp,
    /// `handle h (val a)  =  h.ret [A] a`
    HdlVal,
    /// `handle h (op p (x. k))  =  h.bind (h.malg p') (\a. handle h (k a))`
    HdlOp,
    /// `fix x. c  =  c[pthunk (fix x. c) / x]`
    FixEq,
}

pub const LAWS: [Law; 7] = [
    Law::ValLet,
    Law::LetVal,
    Law::LetAssoc,
    Law::LetOp,
    Law::HdlVal,
    Law::HdlOp,
    Law::FixEq,
];

impl Law {
    pub fn name(self) -> &'static str {
        match self {
            Law::ValLet => "val-let",
            Law::LetVal => "let-val",
            Law::LetAssoc => "let-assoc",
            Law::LetOp => "let-op",
            Law::HdlVal => "hdl-val",
            Law::HdlOp => "hdl-op",
            Law::FixEq => "fix-unfold",
        }
    }
}

/// A random operand for a raw exception operation at answer type Bool:
/// `inl ()` is a throw, `inr (t₁, t₂)` a catch of two suspended bodies.
fn exc_operand(g: &mut Gen<'_>) -> Term {
    let th_bool = TypeExpr::th("Exc", TypeExpr::TBool);
    let operand_ty = TypeExpr::sum(TypeExpr::TUnit, TypeExpr::prod(th_bool.clone(), th_bool));
    if g.rng.gen_bool(0.4) {
        Term::inl(operand_ty, Term::Unit)
    } else {
        let a = Term::thunk(g.comp(&GTy::B, 1, true));
        let b = Term::thunk(g.comp(&GTy::B, 1, true));
        Term::inr(operand_ty, Term::pair(a, b))
    }
}

/// Wrap an exception computation into a runnable program:
/// `main[total] VoidH : Unit + Bool = val (handle hExc c)`.
fn exc_program(c: Comp) -> Program {
    let ty = TypeExpr::sum(TypeExpr::TUnit, TypeExpr::TBool);
    Program {
        items: vec![main_item(
            Mode::Total,
            "VoidH",
            ty,
            Comp::val(Mode::Total, Term::handle("hExc", c)),
        )],
    }
}

fn term_program(ty: TypeExpr, t: Term) -> Program {
    Program {
        items: vec![main_item(
            Mode::Total,
            "VoidH",
            ty,
            Comp::val(Mode::Total, t),
        )],
    }
}

/// Typed functorial action of the `Th Exc` functor, used to state the
/// hdl-op right-hand side as a source-level term.
fn fmap_th_exc() -> Term {
    let m = Mode::Total;
    Term::tylam(
        Kind::Ty,
        Term::tylam(
            Kind::Ty,
            Term::lam(
                TypeExpr::arrow(tv(1), tv(0)),
                Term::lam(
                    TypeExpr::th("Exc", tv(1)),
                    Term::thunk(Comp::let_in(
                        m,
                        None,
                        Comp::force(m, Term::Var(0)),
                        Comp::val(m, Term::app(Term::Var(2), Term::Var(0))),
                    )),
                ),
            ),
        ),
    )
}

/// Build one random (left, right) program pair for a law.
pub fn law_instance(law: Law, rng: &mut ChaCha8Rng) -> (Program, Program) {
    let m = Mode::Total;
    let b = TypeExpr::TBool;
    match law {
        Law::ValLet => {
            let mut g = Gen::new(rng, false);
            let a = g.term(&GTy::B, 2);
            g.ctx.push(GTy::B);
            let k = g.comp(&GTy::B, 2, true);
            g.ctx.pop();
            let lhs = Comp::let_in(m, None, Comp::val(m, a.clone()), k.clone());
            let rhs = subst_term_in_comp(&k, &a, 0);
            (exc_program(lhs), exc_program(rhs))
        }
        Law::LetVal => {
            let mut g = Gen::new(rng, false);
            let body = g.comp(&GTy::B, 2, true);
            let lhs = Comp::let_in(m, None, body.clone(), Comp::val(m, Term::Var(0)));
            (exc_program(lhs), exc_program(body))
        }
        Law::LetAssoc => {
            let mut g = Gen::new(rng, false);
            let m1 = g.comp(&GTy::B, 2, true);
            g.ctx.push(GTy::B);
            let m2 = g.comp(&GTy::B, 2, true);
            let m3 = g.comp(&GTy::B, 2, true);
            g.ctx.pop();
            let lhs = Comp::let_in(
                m,
                None,
                Comp::let_in(m, None, m1.clone(), m2.clone()),
                m3.clone(),
            );
            let rhs = Comp::let_in(m, None, m1, Comp::let_in(m, None, m2, m3));
            (exc_program(lhs), exc_program(rhs))
        }
        Law::LetOp => {
            let mut g = Gen::new(rng, false);
            let p = exc_operand(&mut g);
            g.ctx.push(GTy::B);
            let k = g.comp(&GTy::B, 1, true);
            let k2 = g.comp(&GTy::B, 1, true);
            g.ctx.pop();
            let lhs = Comp::let_in(
                m,
                None,
                Comp::op(m, p.clone(), Some(b.clone()), k.clone()),
                k2.clone(),
            );
            let rhs = Comp::op(m, p, Some(b.clone()), Comp::let_in(m, None, k, k2));
            (exc_program(lhs), exc_program(rhs))
        }
        Law::HdlVal => {
            let mut g = Gen::new(rng, false);
            let a = g.term(&GTy::B, 2);
            let h = prelude()
                .handler("hExc")
                .expect("prelude defines hExc")
                .clone();
            let lhs = Term::handle("hExc", Comp::val(m, a.clone()));
            let rhs = Term::app(Term::tyapp(h.ret, b.clone()), a);
            let ty = TypeExpr::sum(TypeExpr::TUnit, TypeExpr::TBool);
            (term_program(ty.clone(), lhs), term_program(ty, rhs))
        }
        Law::HdlOp => {
            let pre = prelude();
            let h = pre.handler("hExc").expect("prelude defines hExc").clone();
            let exc = pre.effect("Exc").expect("prelude defines Exc").clone();
            let mut g = Gen::new(rng, false);
            let p = exc_operand(&mut g);
            g.ctx.push(GTy::B);
            let k = g.comp(&GTy::B, 1, true);
            g.ctx.pop();

            let lhs = Term::handle("hExc", Comp::op(m, p.clone(), Some(b.clone()), k.clone()));

            // p' = hmap [Th Exc -] fmapTh [Maybe] fmapMaybe
            //        (/\c. \(t : Th Exc c). handle hExc (force t)) [Bool] p
            let f_ty = TypeExpr::lam(Kind::Ty, TypeExpr::th("Exc", tv(0)));
            let m_ty = TypeExpr::TConst("Maybe".into());
            let fmap_m = fct_of_mnd(&m_ty, &h.ret, &h.bind);
            let sigma = Term::tylam(
                Kind::Ty,
                Term::lam(
                    TypeExpr::th("Exc", tv(0)),
                    Term::handle("hExc", Comp::force(m, Term::Var(0))),
                ),
            );
            let transported = Term::app(
                Term::tyapp(
                    Term::app(
                        Term::app(
                            Term::tyapp(
                                Term::app(Term::tyapp(exc.hmap.clone(), f_ty), fmap_th_exc()),
                                m_ty,
                            ),
                            fmap_m,
                        ),
                        sigma,
                    ),
                    b.clone(),
                ),
                p,
            );
            let malg_app = Term::app(Term::tyapp(h.malg.clone(), b.clone()), transported);
            let kont = Term::lam(b.clone(), Term::handle("hExc", k));
            let rhs = Term::apps(
                Term::tyapp(Term::tyapp(h.bind.clone(), b.clone()), b.clone()),
                [malg_app, kont],
            );
            let ty = TypeExpr::sum(TypeExpr::TUnit, TypeExpr::TBool);
            (term_program(ty.clone(), lhs), term_program(ty, rhs))
        }
        Law::FixEq => {
            let mut g = Gen::new(rng, false);
            let inner = {
                let mut c = g.comp(&GTy::B, 2, false);
                c.retag_mode(Mode::Partial);
                c
            };
            // Either mention the recursive reference in a dead branch, or
            // not at all (a closed body shifted under the binder).
            let c = if g.rng.gen_bool(0.6) {
                Comp::let_in(
                    Mode::Partial,
                    Some(TypeExpr::pth("VoidH", b.clone())),
                    Comp::val(
                        Mode::Partial,
                        Term::ite(Term::Tt, Term::pthunk(inner), Term::Var(0)),
                    ),
                    Comp::force(Mode::Partial, Term::Var(0)),
                )
            } else {
                shift_comp(&inner, 0, 1)
            };
            let lhs = Comp::let_in(
                Mode::Partial,
                Some(b.clone()),
                Comp::fix(c.clone()),
                Comp::val(Mode::Partial, Term::Var(0)),
            );
            let unfolded = subst_term_in_comp(&c, &Term::pthunk(Comp::fix(c.clone())), 0);
            let rhs = Comp::let_in(
                Mode::Partial,
                Some(b.clone()),
                unfolded,
                Comp::val(Mode::Partial, Term::Var(0)),
            );
            let wrap = |c| Program {
                items: vec![main_item(Mode::Partial, "VoidH", b.clone(), c)],
            };
            (wrap(lhs), wrap(rhs))
        }
    }
}

// ---------------------------------------------------------------------------
// Inhabitants of `forall (a : Ty). a -> a`.
// ---------------------------------------------------------------------------

const ID_HANDLER: &str = "handler hIdent for VoidH {
  M = \\(a : Ty). a;
  ret = /\\(a : Ty). \\(x : a). x;
  bind = /\\(a : Ty). /\\(b : Ty). \\(m : a). \\(k : a -> b). k m;
  malg = /\\(a : Ty). \\(o : Empty). absurd [a] o
}";

/// Generate `n` distinct closed inhabitants of `forall (a : Ty). a -> a`.
/// They may mention the `hIdent` handler above; run them with
/// [`identity_program`].
pub fn identity_inhabitants(seed: u64, n: usize) -> Vec<Term> {
    let id_ty = TypeExpr::forall(Kind::Ty, TypeExpr::arrow(tv(0), tv(0)));
    let base = Term::tylam(Kind::Ty, Term::lam(tv(0), Term::Var(0)));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out: Vec<Term> = vec![base.clone()];
    while out.len() < n {
        let t = out[rng.gen_range(0..out.len())].clone();
        let candidate = match rng.gen_range(0..6) {
            // /\a. \x. (t [a]) x
            0 => Term::tylam(
                Kind::Ty,
                Term::lam(tv(0), Term::app(Term::tyapp(t, tv(0)), Term::Var(0))),
            ),
            // (t [forall a. a -> a]) t'
            1 => {
                let other = out[rng.gen_range(0..out.len())].clone();
                Term::app(Term::tyapp(t, id_ty.clone()), other)
            }
            // /\a. \x. ite <closed bool> (t [a] x) (t [a] x)
            2 => {
                let mut g = Gen::new(&mut rng, false);
                let cond = g.term(&GTy::B, 1);
                let call = Term::app(Term::tyapp(t, tv(0)), Term::Var(0));
                Term::tylam(
                    Kind::Ty,
                    Term::lam(tv(0), Term::ite(cond, call.clone(), call)),
                )
            }
            // /\a. \x. fst (t [a] x, ff)
            3 => Term::tylam(
                Kind::Ty,
                Term::lam(
                    tv(0),
                    Term::fst(Term::pair(
                        Term::app(Term::tyapp(t, tv(0)), Term::Var(0)),
                        Term::Ff,
                    )),
                ),
            ),
            // /\a. \x. case inl[a + Unit] x { inl y -> y ; inr u -> t [a] x }
            4 => Term::tylam(
                Kind::Ty,
                Term::lam(
                    tv(0),
                    Term::case(
                        Term::inl(TypeExpr::sum(tv(0), TypeExpr::TUnit), Term::Var(0)),
                        Term::Var(0),
                        Term::app(Term::tyapp(t, tv(0)), Term::Var(1)),
                    ),
                ),
            ),
            // /\a. \x. handle hIdent (let y = val x in val (t [a] y))
            _ => Term::tylam(
                Kind::Ty,
                Term::lam(
                    tv(0),
                    Term::handle(
                        "hIdent",
                        Comp::let_in(
                            Mode::Total,
                            None,
                            Comp::val(Mode::Total, Term::Var(0)),
                            Comp::val(Mode::Total, Term::app(Term::tyapp(t, tv(0)), Term::Var(0))),
                        ),
                    ),
                ),
            ),
        };
        if !out.contains(&candidate) {
            out.push(candidate);
        }
    }
    out
}

/// Wrap an identity-type inhabitant into
/// `main[total] VoidH : Bool = val (t [Bool] arg)`.
pub fn identity_program(t: &Term, arg: Term) -> Result<Program, String> {
    let mut prog =
        parse_program_with(ID_HANDLER, &prelude_effects()).map_err(|e| e.render("<corpus>"))?;
    prog.items.push(main_item(
        Mode::Total,
        "VoidH",
        TypeExpr::TBool,
        Comp::val(
            Mode::Total,
            Term::app(Term::tyapp(t.clone(), TypeExpr::TBool), arg),
        ),
    ));
    checked(prog)
}

// ---------------------------------------------------------------------------
// The nine checks.
// ---------------------------------------------------------------------------

const T1: &str = "consistency";
const T2: &str = "canonicity";
const T3: &str = "extraction totality";
const T4: &str = "backend agreement";
const T5: &str = "computation laws";
const T6: &str = "exception goldens";
const T7: &str = "recursion and fuel";
const T8: &str = "no sequencing law through handlers";
const T9: &str = "parametricity smoke test";

pub fn criterion_1() -> CriterionReport {
    let nf = |src: &str| -> Result<_, String> {
        let prog = parse_checked(src)?;
        let t = extract_program(&prog)?;
        normalize(&t, 10_000).map_err(|e| e.to_string())
    };
    let t = nf("main[total] VoidH : Bool = val tt");
    let f = nf("main[total] VoidH : Bool = val ff");
    match (t, f) {
        (Ok(t), Ok(f)) if t != f => pass(
            1,
            T1,
            format!(
                "tt and ff extract to distinct normal forms ({} vs {})",
                print_lam(&t),
                print_lam(&f)
            ),
        ),
        (Ok(t), Ok(_)) => fail(
            1,
            T1,
            format!(
                "tt and ff extract to the same normal form {}",
                print_lam(&t)
            ),
        ),
        (Err(e), _) | (_, Err(e)) => fail(1, T1, e),
    }
}

pub fn criterion_2(seed: u64) -> CriterionReport {
    criterion_2_on(&boolean_corpus(seed))
}

fn criterion_2_on(corpus: &Result<Vec<Program>, String>) -> CriterionReport {
    let corpus = match corpus {
        Ok(c) => c,
        Err(e) => return fail(2, T2, e.clone()),
    };
    let start = Instant::now();
    for (i, prog) in corpus.iter().enumerate() {
        match run_program(prog, FUEL) {
            Ok(Outcome::Done(v)) => {
                let r = crate::eval::render_value(&v);
                if r != "tt" && r != "ff" {
                    return fail(2, T2, format!("program {i} evaluated to non-boolean {r}"));
                }
            }
            Ok(other) => {
                return fail(2, T2, format!("program {i} ended as {}", other.render()));
            }
            Err(e) => return fail(2, T2, format!("program {i}: {e}")),
        }
    }
    let elapsed = start.elapsed();
    if elapsed.as_secs() >= 60 {
        return fail(
            2,
            T2,
            format!("evaluation exceeded the time budget: {elapsed:.2?}"),
        );
    }
    pass(
        2,
        T2,
        format!(
            "{} closed Total boolean programs all evaluate to a boolean in {elapsed:.2?}",
            corpus.len()
        ),
    )
}

pub fn criterion_3(seed: u64) -> CriterionReport {
    criterion_3_on(&boolean_corpus(seed))
}

fn criterion_3_on(corpus: &Result<Vec<Program>, String>) -> CriterionReport {
    let corpus = match corpus {
        Ok(c) => c,
        Err(e) => return fail(3, T3, e.clone()),
    };
    for (i, prog) in corpus.iter().enumerate() {
        match extract_render(prog, FUEL) {
            Ok(r) if r == "tt" || r == "ff" => {}
            Ok(r) => return fail(3, T3, format!("program {i} extracted to non-boolean {r}")),
            Err(e) => return fail(3, T3, format!("program {i}: {e}")),
        }
    }
    pass(
        3,
        T3,
        format!(
            "{} extractions all normalize and decode to a boolean",
            corpus.len()
        ),
    )
}

pub fn criterion_4(seed: u64) -> CriterionReport {
    criterion_4_on(&boolean_corpus(seed))
}

fn criterion_4_on(corpus: &Result<Vec<Program>, String>) -> CriterionReport {
    let corpus = match corpus {
        Ok(c) => c,
        Err(e) => return fail(4, T4, e.clone()),
    };
    for (i, prog) in corpus.iter().enumerate() {
        let direct = match eval_render(prog, FUEL) {
            Ok(r) => r,
            Err(e) => return fail(4, T4, format!("program {i}: {e}")),
        };
        let via_lam = match extract_render(prog, FUEL) {
            Ok(r) => r,
            Err(e) => return fail(4, T4, format!("program {i}: {e}")),
        };
        if direct != via_lam {
            return fail(
                4,
                T4,
                format!("program {i}: evaluator says {direct}, extraction says {via_lam}"),
            );
        }
    }
    pass(
        4,
        T4,
        format!("both backends agree on all {} programs", corpus.len()),
    )
}

pub fn criterion_5(seed: u64) -> CriterionReport {
    const PER_LAW: usize = 100;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x1a75eed);
    for law in LAWS {
        for i in 0..PER_LAW {
            let (l, r) = law_instance(law, &mut rng);
            let ctx = |e: String| format!("{} instance {i}: {e}", law.name());
            let l = match checked(l) {
                Ok(p) => p,
                Err(e) => return fail(5, T5, ctx(format!("left side fails to check: {e}"))),
            };
            let r = match checked(r) {
                Ok(p) => p,
                Err(e) => return fail(5, T5, ctx(format!("right side fails to check: {e}"))),
            };
            let (lv, rv) = match (eval_render(&l, FUEL), eval_render(&r, FUEL)) {
                (Ok(a), Ok(b)) => (a, b),
                (Err(e), _) | (_, Err(e)) => return fail(5, T5, ctx(e)),
            };
            if lv != rv {
                return fail(5, T5, ctx(format!("outcomes differ: {lv} vs {rv}")));
            }
            let nf = |p: &Program| -> Result<_, String> {
                let t = extract_program(p)?;
                normalize(&t, FUEL).map_err(|e| e.to_string())
            };
            let (ln, rn) = match (nf(&l), nf(&r)) {
                (Ok(a), Ok(b)) => (a, b),
                (Err(e), _) | (_, Err(e)) => return fail(5, T5, ctx(e)),
            };
            if ln != rn {
                return fail(
                    5,
                    T5,
                    ctx("extractions are not β-convertible (distinct normal forms)".into()),
                );
            }
        }
    }
    pass(
        5,
        T5,
        format!(
            "{} schemas × {PER_LAW} instances: outcomes identical, extractions β-convertible",
            LAWS.len()
        ),
    )
}

pub fn criterion_6() -> CriterionReport {
    // Hand derivation: handling `throw` hits the algebra's left summand and
    // returns the monad's failure value `inl ()`. A `catch` whose body
    // throws transports both children into the Maybe monad; the body's
    // failure selects the fallback, so its value arrives as `inr ff`. A
    // catch whose body succeeds never consults the fallback: `inr tt`.
    let goldens = [
        (
            "main[total] VoidH : Unit + Bool = val (handle hExc (force (throw [Bool])))",
            "inl ()",
        ),
        (
            "main[total] VoidH : Unit + Bool = \
             val (handle hExc (force (catch [Bool] (throw [Bool]) (thunk (val ff)))))",
            "inr ff",
        ),
        (
            "main[total] VoidH : Unit + Bool = \
             val (handle hExc (force (catch [Bool] (thunk (val tt)) (thunk (val ff)))))",
            "inr tt",
        ),
    ];
    for (src, want) in goldens {
        let prog = match parse_checked(src) {
            Ok(p) => p,
            Err(e) => return fail(6, T6, e),
        };
        match eval_render(&prog, FUEL) {
            Ok(got) if got == want => {}
            Ok(got) => return fail(6, T6, format!("evaluator: wanted {want}, got {got}")),
            Err(e) => return fail(6, T6, e),
        }
        match extract_render(&prog, FUEL) {
            Ok(got) if got == want => {}
            Ok(got) => return fail(6, T6, format!("extraction: wanted {want}, got {got}")),
            Err(e) => return fail(6, T6, e),
        }
    }
    pass(
        6,
        T6,
        "throw ↦ inl (), caught throw ↦ inr ff, no throw ↦ inr tt, both backends".into(),
    )
}

const COUNTDOWN: &str = "
type CNat : Ty = forall (a : Ty). (a -> a) -> a -> a

term five : CNat = /\\(a : Ty). \\(f : a -> a). \\(x : a). f (f (f (f (f x))))

term pred : CNat -> CNat =
  \\(n : CNat). /\\(a : Ty). \\(f : a -> a). \\(x : a).
  n [(a -> a) -> a]
    (\\(g : (a -> a) -> a). \\(h : a -> a). h (g f))
    (\\(u : a -> a). x)
    (\\(u : a). u)

term iszero : CNat -> Bool = \\(n : CNat). n [Bool] (\\(b : Bool). ff) tt

main[partial] VoidH : Bool =
  let go : CNat -> PTh VoidH Bool =
    fix (self .
      val (\\(n : CNat).
        pthunk (force (
          ite (iszero n)
              (pthunk (val tt))
              (pthunk (let g : CNat -> PTh VoidH Bool = force self
                       in force (g (pred n))))))))
  in force (go five)
";

const DIVERGE: &str =
    "main[partial] VoidH : Bool = let r : Bool = fix (self . force self) in val r";

pub fn criterion_7() -> CriterionReport {
    let countdown = match parse_checked(COUNTDOWN) {
        Ok(p) => p,
        Err(e) => return fail(7, T7, format!("countdown: {e}")),
    };
    match eval_render(&countdown, 10_000) {
        Ok(r) if r == "tt" => {}
        Ok(r) => return fail(7, T7, format!("countdown evaluated to {r} under fuel 10^4")),
        Err(e) => return fail(7, T7, e),
    }
    match extract_render(&countdown, 10_000) {
        Ok(r) if r == "tt" => {}
        Ok(r) => {
            return fail(
                7,
                T7,
                format!("countdown extraction gave {r} under budget 10^4"),
            )
        }
        Err(e) => return fail(7, T7, e),
    }

    let diverge = match parse_checked(DIVERGE) {
        Ok(p) => p,
        Err(e) => return fail(7, T7, format!("diverging program: {e}")),
    };
    match run_program(&diverge, FUEL) {
        Ok(Outcome::Timeout(_)) => {}
        Ok(other) => {
            return fail(
                7,
                T7,
                format!("diverging program evaluated to {}", other.render()),
            )
        }
        Err(e) => return fail(7, T7, e),
    }
    let t = match extract_program(&diverge) {
        Ok(t) => t,
        Err(e) => return fail(7, T7, e),
    };
    match normalize(&t, FUEL) {
        Err(LamError::BudgetExceeded { .. }) => {}
        other => {
            return fail(
                7,
                T7,
                format!("diverging extraction should exhaust its budget, got {other:?}"),
            )
        }
    }
    pass(
        7,
        T7,
        "five-step countdown returns tt at 10^4 in both backends; self-forcing fix exhausts 10^6 in both"
            .into(),
    )
}

pub fn criterion_8() -> CriterionReport {
    // A well-typed but law-breaking handler: its bind ignores the
    // continuation and flips the incoming value, so folding a `let` as one
    // computation and splitting it through bind give different answers.
    // If the implementation secretly re-associated handlers over let, the
    // two programs below would agree; consistency of the theory depends on
    // them differing.
    const BREAKER: &str = "handler hBreak for VoidH {
  M = \\(a : Ty). Bool;
  ret = /\\(a : Ty). \\(x : a). tt;
  bind = /\\(a : Ty). /\\(b : Ty). \\(m : Bool). \\(k : a -> Bool). ite m ff tt;
  malg = /\\(a : Ty). \\(o : Empty). absurd [Bool] o
}";
    let folded = format!(
        "{BREAKER}
main[total] VoidH : Bool = val (handle hBreak (let x = val tt in val x))"
    );
    let split = format!(
        "{BREAKER}
main[total] VoidH : Bool =
  val ((/\\(a : Ty). /\\(b : Ty). \\(m : Bool). \\(k : a -> Bool). ite m ff tt)
       [Bool] [Bool]
       (handle hBreak (val tt))
       (\\(x : Bool). handle hBreak (val x)))"
    );
    let run = |src: &str| -> Result<(String, String), String> {
        let prog = parse_checked(src)?;
        Ok((eval_render(&prog, FUEL)?, extract_render(&prog, FUEL)?))
    };
    let (f_ev, f_ex) = match run(&folded) {
        Ok(r) => r,
        Err(e) => return fail(8, T8, format!("folded side: {e}")),
    };
    let (s_ev, s_ex) = match run(&split) {
        Ok(r) => r,
        Err(e) => return fail(8, T8, format!("split side: {e}")),
    };
    if f_ev != f_ex || s_ev != s_ex {
        return fail(8, T8, "backends disagree on the witness programs".into());
    }
    if f_ev == s_ev {
        return fail(
            8,
            T8,
            format!("handled let and its bind-split agree ({f_ev}); the law should fail here"),
        );
    }
    pass(
        8,
        T8,
        format!("handled let gives {f_ev}, its bind-split gives {s_ev}: the equation is (rightly) absent"),
    )
}

pub fn criterion_9(seed: u64) -> CriterionReport {
    const N: usize = 20;
    let ts = identity_inhabitants(seed ^ 0x1d, N);
    for (i, t) in ts.iter().enumerate() {
        for (arg, want) in [(Term::Tt, "tt"), (Term::Ff, "ff")] {
            let prog = match identity_program(t, arg) {
                Ok(p) => p,
                Err(e) => return fail(9, T9, format!("inhabitant {i}: {e}")),
            };
            match eval_render(&prog, FUEL) {
                Ok(got) if got == want => {}
                Ok(got) => {
                    return fail(
                        9,
                        T9,
                        format!("inhabitant {i} applied at Bool to {want} gave {got}"),
                    )
                }
                Err(e) => return fail(9, T9, format!("inhabitant {i}: {e}")),
            }
        }
    }
    pass(
        9,
        T9,
        format!("{N} distinct inhabitants of ∀a. a → a all act as the identity on booleans"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generated_programs_are_well_typed_and_boolean() {
        let programs = generated_bool_programs(7, 25).expect("generator soundness");
        for p in &programs {
            let out = run_program(p, FUEL).unwrap();
            let r = out.render();
            assert!(r == "tt" || r == "ff", "got {r}");
        }
    }

    #[test]
    fn handwritten_programs_are_well_typed() {
        let programs = handwritten_bool_programs().expect("corpus parses and checks");
        assert!(
            programs.len() >= 50,
            "only {} hand-written programs",
            programs.len()
        );
    }

    #[test]
    fn one_instance_of_each_law_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for law in LAWS {
            let (l, r) = law_instance(law, &mut rng);
            let l = checked(l).unwrap_or_else(|e| panic!("{} left: {e}", law.name()));
            let r = checked(r).unwrap_or_else(|e| panic!("{} right: {e}", law.name()));
            let lv = eval_render(&l, FUEL).unwrap();
            let rv = eval_render(&r, FUEL).unwrap();
            assert_eq!(lv, rv, "{} outcomes differ", law.name());
        }
    }

    #[test]
    fn identity_inhabitants_are_distinct_and_identities() {
        let ts = identity_inhabitants(3, 8);
        for (i, a) in ts.iter().enumerate() {
            for b in &ts[i + 1..] {
                assert!(a != b, "duplicate inhabitants generated");
            }
        }
        let prog = identity_program(&ts[7], Term::Tt).unwrap();
        assert_eq!(eval_render(&prog, FUEL).unwrap(), "tt");
    }

    #[test]
    fn countdown_and_divergence_behave() {
        let r = criterion_7();
        assert!(r.pass, "{r}");
    }
}
