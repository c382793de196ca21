//! The definitional evaluator.
//!
//! Terms evaluate recursively to `Value`s; computations run on a small
//! machine whose only frame is a pending `let` body. The machine matters
//! because of `op`: when an operation surfaces, everything between it and
//! the enclosing `handle` — the operation's own continuation plus the
//! frame stack — is captured as a first-class resumption. Environments are
//! persistent (shared cons cells) and captured stacks are cloned on use, so
//! a handler may resume the same continuation any number of times.
//!
//! Handling follows the interpretation of effects as higher-order
//! signatures. `handle h c` runs `c`'s machine to a result:
//!
//! - a final value `v` becomes `h.ret v`;
//! - an operation with operand `p` and resumption `k` becomes
//!   `h.bind (h.malg p') (\a. handle h (k a))`, where
//!   `p' = hmap [T] fmapT [M] fmapM (handle h . force) p` transports the
//!   operand from suspended-computation children to handler-monad children.
//!
//! The transport needs three pieces the source program never writes: the
//! functorial action of the thunk functor (a fixed template), the
//! functorial action of the handler's monad (derived from ret/bind), and
//! the "handle a child" transformation itself, which appears here as the
//! applicable value `Value::HandleWith`. Since evaluation is type-erased,
//! type abstraction and application cost nothing and annotations are
//! ignored.
//!
//! Fuel bounds the work: beta-application, forcing, `fix` unrolling, and
//! each handled operation tick it down, and exhaustion reports how much was
//! granted. Top-level declarations are evaluated eagerly, in order, from
//! the same fuel pool.

use std::collections::HashMap;
use std::fmt;
use std::rc::Rc;

use crate::stdlib::fct_of_mnd;
use crate::syntax::{Comp, CompNode, HandlerExpr, Item, Kind, Mode, Program, Term, TypeExpr};

/// Runtime values. Suspensions capture their defining environment; the two
/// handler-machinery forms (`HandleWith`, `Resume`) are functions that exist
/// only at runtime.
#[derive(Clone)]
pub enum Value {
    Tt,
    Ff,
    Unit,
    Pair(Rc<Value>, Rc<Value>),
    Inl(Rc<Value>),
    Inr(Rc<Value>),
    Closure(Env, Rc<Term>),
    TyClosure(Env, Rc<Term>),
    Thunk(Env, Rc<Comp>),
    /// `\c. handle h (force c)` — how a handler reaches the suspended
    /// children inside an operand.
    HandleWith(Rc<HandlerV>),
    /// `\a. handle h (k a)` — a captured resumption, re-entering its
    /// handler when applied. Multiple applications replay the capture.
    Resume(Rc<HandlerV>, Rc<ResumeState>),
}

impl fmt::Debug for Value {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_value(self))
    }
}

/// A handler, evaluated: its three components plus the derived functorial
/// action of its monad.
pub struct HandlerV {
    effect: String,
    ret: Value,
    bind: Value,
    malg: Value,
    fmap_m: Value,
}

/// Everything needed to resume from an `op`: the environment at the
/// operation, its continuation body (binder pushed on entry), and the
/// machine frames between it and the handler boundary.
pub struct ResumeState {
    env: Env,
    cont: Rc<Comp>,
    stack: Vec<Frame>,
}

/// A pending `let` body awaiting the bound computation's value.
#[derive(Clone)]
struct Frame {
    env: Env,
    body: Rc<Comp>,
}

/// Persistent environments: pushing shares the tail, so captured
/// continuations and closures alias rather than copy.
#[derive(Clone, Default)]
pub struct Env(Option<Rc<EnvNode>>);

struct EnvNode {
    v: Value,
    rest: Env,
}

impl Env {
    fn push(&self, v: Value) -> Env {
        Env(Some(Rc::new(EnvNode {
            v,
            rest: self.clone(),
        })))
    }
    fn get(&self, mut i: usize) -> Option<&Value> {
        let mut cur = self;
        loop {
            let node = cur.0.as_deref()?;
            if i == 0 {
                return Some(&node.v);
            }
            i -= 1;
            cur = &node.rest;
        }
    }
}

/// Why evaluation stopped early.
enum Stop {
    Timeout,
    Stuck(String),
}

/// The observable result of running a program.
#[derive(Debug)]
pub enum Outcome {
    Done(Value),
    /// Fuel ran out; carries the amount that was granted.
    Timeout(u64),
    /// Evaluation jammed — for checked programs this only happens when an
    /// operation reaches the top level unhandled.
    Stuck(String),
}

impl Outcome {
    pub fn render(&self) -> String {
        match self {
            Outcome::Done(v) => render_value(v),
            Outcome::Timeout(fuel) => format!("timeout({fuel})"),
            Outcome::Stuck(msg) => format!("stuck: {msg}"),
        }
    }
    pub fn is_done(&self) -> bool {
        matches!(self, Outcome::Done(_))
    }
}

/// Render a value the way the surface language writes it. Functions and
/// suspensions have no useful syntax; they print as placeholders.
pub fn render_value(v: &Value) -> String {
    fn atom(v: &Value) -> String {
        match v {
            Value::Inl(_) | Value::Inr(_) => format!("({})", render_value(v)),
            _ => render_value(v),
        }
    }
    match v {
        Value::Tt => "tt".into(),
        Value::Ff => "ff".into(),
        Value::Unit => "()".into(),
        Value::Pair(a, b) => format!("({}, {})", render_value(a), render_value(b)),
        Value::Inl(v) => format!("inl {}", atom(v)),
        Value::Inr(v) => format!("inr {}", atom(v)),
        Value::Closure(..) | Value::TyClosure(..) => "<fn>".into(),
        Value::Thunk(..) => "<thunk>".into(),
        Value::HandleWith(_) | Value::Resume(..) => "<fn>".into(),
    }
}

enum CompResult {
    Done(Value),
    /// An operation surfaced: its evaluated operand and the capture.
    Perform(Value, ResumeState),
}

struct Evaluator {
    globals: HashMap<String, Value>,
    handlers: HashMap<String, Rc<HandlerV>>,
    effect_hmaps: HashMap<String, Value>,
    /// Functorial action of the thunk functor:
    /// `/\a. /\b. \f. \m. thunk (let x = force m in val (f x))`.
    fmap_th: Value,
    fuel: u64,
}

/// Build the thunk-functor fmap template. Annotations are placeholders —
/// evaluation never reads them — and the Total/Partial distinction is
/// equally irrelevant at runtime.
fn fmap_thunk_term() -> Term {
    let m = Mode::Total;
    Term::tylam(
        Kind::Ty,
        Term::tylam(
            Kind::Ty,
            Term::lam(
                TypeExpr::TUnit,
                Term::lam(
                    TypeExpr::TUnit,
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

/// Run a checked program: evaluate its declarations in order, then its
/// `main`. `Err` is reserved for structural problems (no `main`); dynamic
/// trouble — fuel, stuck states — comes back as an `Outcome`.
pub fn run_program(prog: &Program, fuel: u64) -> Result<Outcome, String> {
    let Some(Item::Main { comp, .. }) = prog.main() else {
        return Err("the program has no main declaration".into());
    };
    let mut ev = Evaluator {
        globals: HashMap::new(),
        handlers: HashMap::new(),
        effect_hmaps: HashMap::new(),
        fmap_th: Value::Unit,
        fuel,
    };
    let r = (|| -> Result<Outcome, Stop> {
        ev.fmap_th = ev.eval_term(&Env::default(), &fmap_thunk_term())?;
        for item in &prog.items {
            match item {
                Item::TypeDef { .. } | Item::Main { .. } => {}
                Item::EffectDef { decl, .. } => {
                    let v = ev.eval_term(&Env::default(), &decl.hmap)?;
                    ev.effect_hmaps.insert(decl.name.clone(), v);
                }
                Item::TermDef { name, body, .. } => {
                    let v = ev.eval_term(&Env::default(), body)?;
                    ev.globals.insert(name.clone(), v);
                }
                Item::HandlerDef { name, handler, .. } => {
                    let hv = ev.build_handler(handler)?;
                    ev.handlers.insert(name.clone(), Rc::new(hv));
                }
            }
        }
        match ev.machine(Env::default(), Rc::new(comp.clone()), Vec::new())? {
            CompResult::Done(v) => Ok(Outcome::Done(v)),
            CompResult::Perform(..) => Ok(Outcome::Stuck("unhandled operation".into())),
        }
    })();
    Ok(match r {
        Ok(out) => out,
        Err(Stop::Timeout) => Outcome::Timeout(fuel),
        Err(Stop::Stuck(m)) => Outcome::Stuck(m),
    })
}

fn stuck<T>(msg: impl Into<String>) -> Result<T, Stop> {
    Err(Stop::Stuck(msg.into()))
}

impl Evaluator {
    fn tick(&mut self) -> Result<(), Stop> {
        if self.fuel == 0 {
            return Err(Stop::Timeout);
        }
        self.fuel -= 1;
        Ok(())
    }

    fn build_handler(&mut self, h: &HandlerExpr) -> Result<HandlerV, Stop> {
        let env = Env::default();
        Ok(HandlerV {
            effect: h.effect.clone(),
            ret: self.eval_term(&env, &h.ret)?,
            bind: self.eval_term(&env, &h.bind)?,
            malg: self.eval_term(&env, &h.malg)?,
            fmap_m: self.eval_term(&env, &fct_of_mnd(&h.monad, &h.ret, &h.bind))?,
        })
    }

    fn eval_term(&mut self, env: &Env, t: &Term) -> Result<Value, Stop> {
        match t {
            Term::Var(i) => match env.get(*i) {
                Some(v) => Ok(v.clone()),
                None => stuck("unbound variable at runtime"),
            },
            Term::Global(n) => match self.globals.get(n) {
                Some(v) => Ok(v.clone()),
                None => stuck(format!("unknown definition `{n}` at runtime")),
            },
            Term::Lam(_, b) => Ok(Value::Closure(env.clone(), Rc::new((**b).clone()))),
            Term::App(f, a) => {
                let vf = self.eval_term(env, f)?;
                let va = self.eval_term(env, a)?;
                self.apply(&vf, va)
            }
            Term::TyLam(_, b) => Ok(Value::TyClosure(env.clone(), Rc::new((**b).clone()))),
            Term::TyApp(f, _) => {
                let v = self.eval_term(env, f)?;
                self.apply_ty(&v)
            }
            Term::Tt => Ok(Value::Tt),
            Term::Ff => Ok(Value::Ff),
            Term::Unit => Ok(Value::Unit),
            Term::Ite(c, th, el) => match self.eval_term(env, c)? {
                Value::Tt => self.eval_term(env, th),
                Value::Ff => self.eval_term(env, el),
                _ => stuck("the scrutinee of ite is not a boolean"),
            },
            Term::Pair(a, b) => {
                let va = self.eval_term(env, a)?;
                let vb = self.eval_term(env, b)?;
                Ok(Value::Pair(Rc::new(va), Rc::new(vb)))
            }
            Term::Fst(p) => match self.eval_term(env, p)? {
                Value::Pair(a, _) => Ok((*a).clone()),
                _ => stuck("fst of a non-pair"),
            },
            Term::Snd(p) => match self.eval_term(env, p)? {
                Value::Pair(_, b) => Ok((*b).clone()),
                _ => stuck("snd of a non-pair"),
            },
            Term::Inl(_, v) => Ok(Value::Inl(Rc::new(self.eval_term(env, v)?))),
            Term::Inr(_, v) => Ok(Value::Inr(Rc::new(self.eval_term(env, v)?))),
            Term::Case(s, l, r) => match self.eval_term(env, s)? {
                Value::Inl(v) => self.eval_term(&env.push((*v).clone()), l),
                Value::Inr(v) => self.eval_term(&env.push((*v).clone()), r),
                _ => stuck("the scrutinee of case is not an injection"),
            },
            Term::Absurd(..) => stuck("a value of the empty type appeared"),
            Term::Thunk(_, c) | Term::PThunk(_, c) => {
                Ok(Value::Thunk(env.clone(), Rc::new((**c).clone())))
            }
            Term::Handle(name, c) => {
                let Some(h) = self.handlers.get(name).cloned() else {
                    return stuck(format!("unknown handler `{name}` at runtime"));
                };
                let res = self.machine(env.clone(), Rc::new((**c).clone()), Vec::new())?;
                self.finish_handle(&h, res)
            }
        }
    }

    fn apply(&mut self, f: &Value, a: Value) -> Result<Value, Stop> {
        match f {
            Value::Closure(env, body) => {
                self.tick()?;
                let env2 = env.push(a);
                let body = body.clone();
                self.eval_term(&env2, &body)
            }
            Value::HandleWith(h) => match a {
                Value::Thunk(env, c) => {
                    let h = h.clone();
                    let res = self.machine(env, c, Vec::new())?;
                    self.finish_handle(&h, res)
                }
                _ => stuck("handled something that is not a suspended computation"),
            },
            Value::Resume(h, st) => {
                let h = h.clone();
                let env2 = st.env.push(a);
                let res = self.machine(env2, st.cont.clone(), st.stack.clone())?;
                self.finish_handle(&h, res)
            }
            _ => stuck("applied a value that is not a function"),
        }
    }

    /// Type application. Erased: closures over a type binder just run their
    /// body, and every other value passes through (the handler-machinery
    /// values are polymorphic by construction).
    fn apply_ty(&mut self, f: &Value) -> Result<Value, Stop> {
        match f {
            Value::TyClosure(env, body) => {
                let env = env.clone();
                let body = body.clone();
                self.eval_term(&env, &body)
            }
            other => Ok(other.clone()),
        }
    }

    /// Run a computation to a value or to its first unhandled operation.
    fn machine(
        &mut self,
        mut env: Env,
        mut comp: Rc<Comp>,
        mut stack: Vec<Frame>,
    ) -> Result<CompResult, Stop> {
        loop {
            // Reading the node through a clone of the Rc keeps the borrow
            // checker happy while `comp` is reassigned below.
            let cur = comp.clone();
            match &cur.node {
                CompNode::Val(t) => {
                    let v = self.eval_term(&env, t)?;
                    match stack.pop() {
                        Some(fr) => {
                            env = fr.env.push(v);
                            comp = fr.body;
                        }
                        None => return Ok(CompResult::Done(v)),
                    }
                }
                CompNode::LetIn(_, bound, body) => {
                    stack.push(Frame {
                        env: env.clone(),
                        body: Rc::new((**body).clone()),
                    });
                    comp = Rc::new((**bound).clone());
                }
                CompNode::Op(operand, _, k) => {
                    let p = self.eval_term(&env, operand)?;
                    return Ok(CompResult::Perform(
                        p,
                        ResumeState {
                            env,
                            cont: Rc::new((**k).clone()),
                            stack,
                        },
                    ));
                }
                CompNode::Force(t) => match self.eval_term(&env, t)? {
                    Value::Thunk(env2, c2) => {
                        self.tick()?;
                        env = env2;
                        comp = c2;
                    }
                    _ => return stuck("forced a value that is not a thunk"),
                },
                CompNode::Fix(body) => {
                    self.tick()?;
                    let again = Comp {
                        mode: Mode::Partial,
                        node: CompNode::Fix(body.clone()),
                    };
                    env = env.push(Value::Thunk(env.clone(), Rc::new(again)));
                    comp = Rc::new((**body).clone());
                }
            }
        }
    }

    /// Interpret a finished machine run under a handler: `ret` for values,
    /// the operand transport + algebra + bind for operations.
    fn finish_handle(&mut self, h: &Rc<HandlerV>, res: CompResult) -> Result<Value, Stop> {
        match res {
            CompResult::Done(v) => {
                let r = self.apply_ty(&h.ret)?;
                self.apply(&r, v)
            }
            CompResult::Perform(p, st) => {
                self.tick()?;
                let Some(hm) = self.effect_hmaps.get(&h.effect).cloned() else {
                    return stuck(format!("effect `{}` has no runtime signature", h.effect));
                };
                // hmap [T] fmapT [M] fmapM (handle h . force) [_] p
                let v1 = self.apply_ty(&hm)?;
                let ft = self.fmap_th.clone();
                let v2 = self.apply(&v1, ft)?;
                let v3 = self.apply_ty(&v2)?;
                let v4 = self.apply(&v3, h.fmap_m.clone())?;
                let v5 = self.apply(&v4, Value::HandleWith(h.clone()))?;
                let v6 = self.apply_ty(&v5)?;
                let p2 = self.apply(&v6, p)?;
                // bind (malg p') (\a. handle h (k a))
                let ma = self.apply_ty(&h.malg)?;
                let m1 = self.apply(&ma, p2)?;
                let b1 = self.apply_ty(&h.bind)?;
                let b2 = self.apply_ty(&b1)?;
                let b3 = self.apply(&b2, m1)?;
                self.apply(&b3, Value::Resume(h.clone(), Rc::new(st)))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::check::check_program;
    use crate::parser::parse_program_with;
    use crate::stdlib::{exc_package, prelude_effects, th_alg, with_prelude};
    use crate::syntax::Span;

    fn checked(src: &str) -> Program {
        let prog = parse_program_with(src, &prelude_effects())
            .unwrap_or_else(|e| panic!("parse: {}", e.render("t.fha")));
        let mut full = with_prelude(prog);
        check_program(&mut full).unwrap_or_else(|e| panic!("check: {}", e.render("t.fha")));
        full
    }

    fn run_fuelled(src: &str, fuel: u64) -> Outcome {
        run_program(&checked(src), fuel).expect("program has a main")
    }

    fn rendered(src: &str) -> String {
        run_fuelled(src, 1_000_000).render()
    }

    #[test]
    fn values_and_control_evaluate() {
        assert_eq!(rendered("main[total] VoidH : Bool = val tt"), "tt");
        assert_eq!(
            rendered(
                "main[total] VoidH : Bool = val ((\\(f : Bool -> Bool). \\(x : Bool). f (f x)) \
                 (\\(b : Bool). ite b ff tt) tt)"
            ),
            "tt"
        );
        assert_eq!(
            rendered(
                "main[total] VoidH : Bool * Unit = let p = val (tt, ()) in val (fst p, snd p)"
            ),
            "(tt, ())"
        );
        assert_eq!(
            rendered(
                "main[total] VoidH : Bool = \
                 val (case inr[Unit + Bool] tt { inl u -> ff ; inr b -> b })"
            ),
            "tt"
        );
        assert_eq!(
            rendered("main[total] VoidH : Bool = val ((/\\(a : Ty). \\(x : a). x) [Bool] tt)"),
            "tt"
        );
    }

    #[test]
    fn exceptions_handle_to_maybe() {
        assert_eq!(
            rendered("main[total] VoidH : Unit + Bool = val (handle hExc (force (throw [Bool])))"),
            "inl ()"
        );
        assert_eq!(
            rendered(
                "main[total] VoidH : Unit + Bool = \
                 val (handle hExc (force (catch [Bool] (throw [Bool]) (thunk val ff))))"
            ),
            "inr ff"
        );
        assert_eq!(
            rendered(
                "main[total] VoidH : Unit + Bool = \
                 val (handle hExc (force (catch [Bool] (thunk val tt) (thunk val ff))))"
            ),
            "inr tt"
        );
    }

    #[test]
    fn resumptions_are_multi_shot() {
        // Answer both ways and pair the results: the captured continuation
        // runs twice, once with tt and once with ff.
        assert_eq!(
            rendered(
                r"
effect Flip { flip : Unit ~> Bool }

handler hBoth for Flip {
  M = \(a : Ty). a * a;
  ret = /\(a : Ty). \(x : a). (x, x);
  bind =
    /\(a : Ty). /\(b : Ty). \(m : a * a). \(k : a -> b * b).
    (fst (k (fst m)), snd (k (snd m)));
  malg =
    /\(a : Ty). \(o : (Unit * (Bool -> a)) + Empty).
    case o {
      inl pk -> (snd pk tt, snd pk ff) ;
      inr e -> absurd [a * a] e
    }
}

main[total] VoidH : Bool * Bool =
  val (handle hBoth (let x = force (flip ()) in val (ite x tt ff)))
"
            ),
            "(tt, ff)"
        );
    }

    #[test]
    fn reflected_operations_pass_through_nested_handlers() {
        // The inner handler is the derived thunk algebra: it interprets the
        // effect back into suspended computations, re-issuing each op. The
        // outer handler then interprets those. The catch operand's embedded
        // computations make the transport (`hmap`) do real work.
        let (exc, _) = exc_package();
        let src = r"
main[total] VoidH : Unit + Bool =
  val (handle hExc (force (handle hRefl (force (catch [Bool] (throw [Bool]) (thunk val tt))))))
";
        let prog = parse_program_with(src, &prelude_effects()).unwrap();
        let mut full = with_prelude(prog);
        // splice the derived handler in before main
        let at = full.items.len() - 1;
        full.items.insert(
            at,
            Item::HandlerDef {
                name: "hRefl".into(),
                handler: th_alg(&exc, Mode::Total),
                span: Span::new(0, 0),
            },
        );
        check_program(&mut full).unwrap_or_else(|e| panic!("check: {}", e.render("t.fha")));
        let out = run_program(&full, 1_000_000).unwrap();
        assert_eq!(out.render(), "inr tt");
    }

    #[test]
    fn fix_unrolls_and_fuel_stops_divergence() {
        assert_eq!(
            rendered("main[partial] VoidH : Bool = let r : Bool = fix (self . val tt) in val r"),
            "tt"
        );
        let out = run_fuelled(
            "main[partial] VoidH : Bool = let r : Bool = fix (self . force self) in val r",
            1000,
        );
        assert!(matches!(out, Outcome::Timeout(1000)), "{}", out.render());
    }

    #[test]
    fn unhandled_operations_get_stuck() {
        let out = run_fuelled("main[total] Exc : Bool = force (throw [Bool])", 1000);
        match out {
            Outcome::Stuck(msg) => assert!(msg.contains("unhandled"), "{msg}"),
            other => panic!("expected stuck, got {}", other.render()),
        }
    }

    #[test]
    fn state_cell_by_handler_monad() {
        // One boolean cell: M a = Bool -> a * Bool, threaded through bind.
        // get : Unit ~> Bool, put : Bool ~> Unit; run from ff, flip it on,
        // read it back.
        assert_eq!(
            rendered(
                r"
effect St { get : Unit ~> Bool ; put : Bool ~> Unit }

type State : Ty -> Ty = \(a : Ty). Bool -> a * Bool

handler hSt for St {
  M = State;
  ret = /\(a : Ty). \(x : a). \(s : Bool). (x, s);
  bind =
    /\(a : Ty). /\(b : Ty). \(m : State a). \(k : a -> State b). \(s : Bool).
    (\(ps : a * Bool). k (fst ps) (snd ps)) (m s);
  malg =
    /\(a : Ty). \(o : (Unit * (Bool -> a)) + ((Bool * (Unit -> a)) + Empty)).
    case o {
      inl getk -> \(s : Bool). (snd getk s, s) ;
      inr rest ->
        case rest {
          inl putk -> \(s : Bool). (snd putk (), fst putk) ;
          inr e -> absurd [State a] e
        }
    }
}

main[total] VoidH : Bool * Bool =
  let run = val (handle hSt (let u = force (put tt) in force (get ())))
  in val (run ff)
"
            ),
            "(tt, tt)"
        );
    }
}
