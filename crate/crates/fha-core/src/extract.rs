//! Extraction into the untyped lambda calculus.
//!
//! Types are erased completely — type abstraction and application vanish,
//! annotations are dropped — and the effect structure is compiled away by
//! continuation-passing over a handler: a computation becomes a two-argument
//! function `\h. \r. …` taking the handler it runs under and a continuation
//! for its final value.
//!
//! - `val a`            ⇒ `\h. \r. r a`
//! - `let x = c in d`   ⇒ `\h. \r. c h (\x. d h r)`
//! - `force t` ⇒ `t` and `thunk c` ⇒ `c`: suspensions simply *are* their
//!   computation-functions.
//! - `fix x. c`         ⇒ `Y (\x. c)` with Curry's `Y`.
//! - `op p (x. c)`      ⇒ `\h. \r. bind h (malg h (hmapE fmapTh (fmapM h)
//!   (run h) p)) (\x. c h r)` — the same operand transport, algebra, and
//!   rebind the evaluator performs, read off the dynamic handler.
//!
//! A handler is a triple selector `\s. s ret (\s'. s' bind malg)`; `ret h`,
//! `bind h`, `malg h` project with the usual K/KI selectors. `handle hName c`
//! applies `c` to the named triple and its own `ret`. The whole program is
//! `main ĥ∅ (\a. a)` under an identity triple — main's ambient operations are
//! required to be handled before they reach the top, which is exactly what
//! the evaluator enforces by getting stuck otherwise; agreement between the
//! two backends is claimed for programs the evaluator completes.
//!
//! Data goes to the standard encodings (Church booleans, selector pairs,
//! continuation sums, identity unit) so `lam::decode_value` can read results
//! back. Evaluation-order differences from the call-by-value evaluator are
//! harmless: source terms are pure by typing, so normal order finds the same
//! values.
//!
//! Top-level definitions, handler triples, and effect `hmap` witnesses
//! become an application chain `(\g. rest) body`, restricted to what `main`
//! transitively mentions. Operations need the witness of the effect they
//! belong to, which is the ambient effect of the enclosing suspension —
//! the checker records it on every `thunk`/`pthunk`, which is why extraction
//! only accepts checked programs.

use std::collections::HashSet;

use crate::lam::LamTerm;
use crate::syntax::{Comp, CompNode, HandlerExpr, Item, Program, Term};

fn v(i: usize) -> LamTerm {
    LamTerm::Var(i)
}
fn l(b: LamTerm) -> LamTerm {
    LamTerm::lam(b)
}
fn a(f: LamTerm, x: LamTerm) -> LamTerm {
    LamTerm::app(f, x)
}

/// `\a. \b. a` — also Church true and the pair selector for `fst`.
fn sel_fst() -> LamTerm {
    l(l(v(1)))
}
/// `\a. \b. b` — also Church false and the pair selector for `snd`.
fn sel_snd() -> LamTerm {
    l(l(v(0)))
}
fn ident() -> LamTerm {
    l(v(0))
}
/// Curry's fixpoint combinator `\f. (\x. f (x x)) (\x. f (x x))`.
fn y_comb() -> LamTerm {
    let half = l(a(v(1), a(v(0), v(0))));
    l(a(half.clone(), half))
}
/// Functorial action of the thunk functor, erased:
/// `\f. \m. \h. \r. m h (\a. r (f a))`.
fn fmap_thunk() -> LamTerm {
    l(l(l(l(a(a(v(2), v(1)), l(a(v(1), a(v(4), v(0)))))))))
}
fn ret_of(h: LamTerm) -> LamTerm {
    a(h, sel_fst())
}
fn bind_of(h: LamTerm) -> LamTerm {
    a(a(h, sel_snd()), sel_fst())
}
fn malg_of(h: LamTerm) -> LamTerm {
    a(a(h, sel_snd()), sel_snd())
}
/// Triple a handler from *closed* components.
fn triple_closed(r: LamTerm, b: LamTerm, m: LamTerm) -> LamTerm {
    l(a(a(v(0), r), l(a(a(v(0), b), m))))
}
/// The top-level handler: identity return and algebra, `bind m k = k m`.
fn empty_handler() -> LamTerm {
    triple_closed(ident(), l(l(a(v(0), v(1)))), ident())
}

/// What a binder in the output term stands for, so de Bruijn indices can be
/// computed without ever shifting an already-built term: source binders map
/// to `Src`, chain bindings to `Named`, encoding-internal binders to `Anon`.
enum Slot {
    Src,
    Named(String),
    Anon,
}

struct Ex<'p> {
    slots: Vec<Slot>,
    prog: &'p Program,
}

impl Ex<'_> {
    fn src_var(&self, i: usize) -> Result<LamTerm, String> {
        let mut remaining = i;
        for (pos, s) in self.slots.iter().rev().enumerate() {
            if matches!(s, Slot::Src) {
                if remaining == 0 {
                    return Ok(v(pos));
                }
                remaining -= 1;
            }
        }
        Err("extraction met an unbound variable; the input was not checked".into())
    }

    fn named_var(&self, key: &str) -> Result<LamTerm, String> {
        for (pos, s) in self.slots.iter().rev().enumerate() {
            if let Slot::Named(n) = s {
                if n == key {
                    return Ok(v(pos));
                }
            }
        }
        Err(format!("extraction refers to `{key}` before it is bound"))
    }

    fn term(&mut self, t: &Term) -> Result<LamTerm, String> {
        Ok(match t {
            Term::Var(i) => self.src_var(*i)?,
            Term::Global(n) => self.named_var(n)?,
            Term::Lam(_, b) => {
                self.slots.push(Slot::Src);
                let b = self.term(b);
                self.slots.pop();
                l(b?)
            }
            Term::App(f, x) => a(self.term(f)?, self.term(x)?),
            Term::TyLam(_, b) => self.term(b)?,
            Term::TyApp(f, _) => self.term(f)?,
            Term::Tt => sel_fst(),
            Term::Ff => sel_snd(),
            Term::Unit => ident(),
            Term::Ite(c, th, el) => a(a(self.term(c)?, self.term(th)?), self.term(el)?),
            Term::Pair(x, y) => {
                self.slots.push(Slot::Anon);
                let r = (|| Ok::<_, String>((self.term(x)?, self.term(y)?)))();
                self.slots.pop();
                let (x, y) = r?;
                l(a(a(v(0), x), y))
            }
            Term::Fst(p) => a(self.term(p)?, sel_fst()),
            Term::Snd(p) => a(self.term(p)?, sel_snd()),
            Term::Inl(_, x) | Term::Inr(_, x) => {
                self.slots.push(Slot::Anon);
                self.slots.push(Slot::Anon);
                let payload = self.term(x);
                self.slots.pop();
                self.slots.pop();
                let tag = if matches!(t, Term::Inl(..)) {
                    v(1)
                } else {
                    v(0)
                };
                l(l(a(tag, payload?)))
            }
            Term::Case(s, lf, rg) => {
                let s = self.term(s)?;
                self.slots.push(Slot::Src);
                let lf = self.term(lf);
                let rg = lf.is_ok().then(|| self.term(rg));
                self.slots.pop();
                a(a(s, l(lf?)), l(rg.unwrap()?))
            }
            Term::Absurd(_, x) => self.term(x)?,
            Term::Thunk(slot, c) | Term::PThunk(slot, c) => {
                let Some(eff) = slot else {
                    return Err(
                        "extraction met a thunk with no recorded effect; the input was not checked"
                            .into(),
                    );
                };
                self.comp(c, eff)?
            }
            Term::Handle(name, c) => {
                let Some(handler) = self.prog.handler(name) else {
                    return Err(format!("extraction refers to an unknown handler `{name}`"));
                };
                let c = self.comp(c, &handler.effect)?;
                let h = self.named_var(&format!("#hdl:{name}"))?;
                a(a(c, h.clone()), ret_of(h))
            }
        })
    }

    fn comp(&mut self, c: &Comp, ambient: &str) -> Result<LamTerm, String> {
        match &c.node {
            // force t ⇒ t: the suspension is already the two-argument
            // computation-function.
            CompNode::Force(t) => self.term(t),
            CompNode::Fix(body) => {
                self.slots.push(Slot::Src);
                let b = self.comp(body, ambient);
                self.slots.pop();
                Ok(a(y_comb(), l(b?)))
            }
            CompNode::Val(t) => {
                self.slots.push(Slot::Anon); // h
                self.slots.push(Slot::Anon); // r
                let t = self.term(t);
                self.slots.pop();
                self.slots.pop();
                Ok(l(l(a(v(0), t?))))
            }
            CompNode::LetIn(_, bound, body) => {
                self.slots.push(Slot::Anon); // h
                self.slots.push(Slot::Anon); // r
                let r = (|| {
                    let bound = self.term_like_comp(bound, ambient)?;
                    self.slots.push(Slot::Src);
                    let body = self.comp(body, ambient);
                    self.slots.pop();
                    // \x. body h r  with h, r two and one binders out
                    let k = l(a(a(body?, v(2)), v(1)));
                    Ok::<_, String>(a(a(bound, v(1)), k))
                })();
                self.slots.pop();
                self.slots.pop();
                Ok(l(l(r?)))
            }
            CompNode::Op(operand, _, k) => {
                self.slots.push(Slot::Anon); // h
                self.slots.push(Slot::Anon); // r
                let r = (|| {
                    let hv = v(1);
                    let hmap = self.named_var(&format!("#eff:{ambient}"))?;
                    // \f. \ma. bind h ma (\x. ret h (f x))
                    let fmap_m = l(l(a(
                        a(bind_of(v(3)), v(0)),
                        l(a(ret_of(v(4)), a(v(2), v(0)))),
                    )));
                    // \c. c h (ret h)
                    let run = l(a(a(v(0), v(2)), ret_of(v(2))));
                    let operand = self.term(operand)?;
                    let transported = LamTerm::apps(hmap, [fmap_thunk(), fmap_m, run, operand]);
                    let m1 = a(malg_of(hv.clone()), transported);
                    self.slots.push(Slot::Src);
                    let kc = self.comp(k, ambient);
                    self.slots.pop();
                    let kont = l(a(a(kc?, v(2)), v(1)));
                    Ok::<_, String>(a(a(bind_of(hv), m1), kont))
                })();
                self.slots.pop();
                self.slots.pop();
                Ok(l(l(r?)))
            }
        }
    }

    /// Extract a computation in bound position. Identical to `comp`; named
    /// separately only so `LetIn` reads like the equation it implements.
    fn term_like_comp(&mut self, c: &Comp, ambient: &str) -> Result<LamTerm, String> {
        self.comp(c, ambient)
    }

    fn handler_triple(&mut self, h: &HandlerExpr) -> Result<LamTerm, String> {
        self.slots.push(Slot::Anon); // s
        let r = self.term(&h.ret);
        self.slots.push(Slot::Anon); // s'
        let rest = (|| Ok::<_, String>((self.term(&h.bind)?, self.term(&h.malg)?)))();
        self.slots.pop();
        self.slots.pop();
        let (b, m) = rest?;
        Ok(l(a(a(v(0), r?), l(a(a(v(0), b), m)))))
    }
}

/// Keys for the binding chain: plain names for definitions, tagged names for
/// handler triples and effect witnesses (the tags keep the three namespaces
/// from colliding).
fn hdl_key(name: &str) -> String {
    format!("#hdl:{name}")
}
fn eff_key(name: &str) -> String {
    format!("#eff:{name}")
}

fn deps_term(prog: &Program, t: &Term, out: &mut Vec<String>) {
    match t {
        Term::Global(n) => out.push(n.clone()),
        Term::Handle(h, c) => {
            out.push(hdl_key(h));
            if let Some(handler) = prog.handler(h) {
                out.push(eff_key(&handler.effect));
            }
            deps_comp(prog, c, out);
        }
        Term::Thunk(slot, c) | Term::PThunk(slot, c) => {
            if let Some(e) = slot {
                out.push(eff_key(e));
            }
            deps_comp(prog, c, out);
        }
        Term::Var(_) | Term::Tt | Term::Ff | Term::Unit => {}
        Term::Lam(_, b) | Term::TyLam(_, b) | Term::TyApp(b, _) => deps_term(prog, b, out),
        Term::App(f, x) => {
            deps_term(prog, f, out);
            deps_term(prog, x, out);
        }
        Term::Ite(c, a, b) | Term::Case(c, a, b) => {
            deps_term(prog, c, out);
            deps_term(prog, a, out);
            deps_term(prog, b, out);
        }
        Term::Pair(a, b) => {
            deps_term(prog, a, out);
            deps_term(prog, b, out);
        }
        Term::Fst(p) | Term::Snd(p) | Term::Inl(_, p) | Term::Inr(_, p) | Term::Absurd(_, p) => {
            deps_term(prog, p, out)
        }
    }
}

fn deps_comp(prog: &Program, c: &Comp, out: &mut Vec<String>) {
    match &c.node {
        CompNode::Val(t) => deps_term(prog, t, out),
        CompNode::Force(t) => deps_term(prog, t, out),
        CompNode::LetIn(_, a, b) => {
            deps_comp(prog, a, out);
            deps_comp(prog, b, out);
        }
        CompNode::Op(p, _, k) => {
            deps_term(prog, p, out);
            deps_comp(prog, k, out);
        }
        CompNode::Fix(b) => deps_comp(prog, b, out),
    }
}

/// The chain keys `main` transitively needs, found by worklist over the
/// program's items.
fn needed_keys(prog: &Program, main_comp: &Comp, main_eff: &str) -> HashSet<String> {
    let mut need: HashSet<String> = HashSet::new();
    let mut work: Vec<String> = vec![eff_key(main_eff)];
    deps_comp(prog, main_comp, &mut work);
    while let Some(key) = work.pop() {
        if !need.insert(key.clone()) {
            continue;
        }
        if let Some(name) = key.strip_prefix("#hdl:") {
            if let Some(handler) = prog.handler(name) {
                work.push(eff_key(&handler.effect));
                deps_term(prog, &handler.ret, &mut work);
                deps_term(prog, &handler.bind, &mut work);
                deps_term(prog, &handler.malg, &mut work);
            }
        } else if let Some(name) = key.strip_prefix("#eff:") {
            if let Some(decl) = prog.effect(name) {
                deps_term(prog, &decl.hmap, &mut work);
            }
        } else if let Some((_, body)) = prog.term_def(&key) {
            deps_term(prog, body, &mut work);
        }
    }
    need
}

/// Compile a checked program to a single closed lambda term. The result
/// β-normalizes to the encoding of `main`'s value (or diverges when `main`
/// does); feed it to [`crate::lam::normalize`] and [`crate::lam::decode_value`].
pub fn extract_program(prog: &Program) -> Result<LamTerm, String> {
    let Some(Item::Main { effect, comp, .. }) = prog.main() else {
        return Err("the program has no main declaration".into());
    };
    let need = needed_keys(prog, comp, effect);
    let mut ex = Ex {
        slots: Vec::new(),
        prog,
    };
    build_chain(&mut ex, &prog.items, &need, comp, effect)
}

fn build_chain(
    ex: &mut Ex<'_>,
    items: &[Item],
    need: &HashSet<String>,
    main_comp: &Comp,
    main_eff: &str,
) -> Result<LamTerm, String> {
    let Some((item, rest)) = items.split_first() else {
        let c = ex.comp(main_comp, main_eff)?;
        return Ok(a(a(c, empty_handler()), ident()));
    };
    let binding = match item {
        Item::TermDef { name, body, .. } if need.contains(name) => {
            Some((name.clone(), ex.term(body)?))
        }
        Item::HandlerDef { name, handler, .. } if need.contains(&hdl_key(name)) => {
            Some((hdl_key(name), ex.handler_triple(handler)?))
        }
        Item::EffectDef { decl, .. } if need.contains(&eff_key(&decl.name)) => {
            Some((eff_key(&decl.name), ex.term(&decl.hmap)?))
        }
        _ => None,
    };
    match binding {
        None => build_chain(ex, rest, need, main_comp, main_eff),
        Some((key, body)) => {
            ex.slots.push(Slot::Named(key));
            let rest_t = build_chain(ex, rest, need, main_comp, main_eff);
            ex.slots.pop();
            Ok(a(l(rest_t?), body))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::check::check_program;
    use crate::eval::run_program;
    use crate::lam::{decode_value, normalize, LamError};
    use crate::parser::parse_program_with;
    use crate::stdlib::{prelude_effects, with_prelude};

    fn checked(src: &str) -> Program {
        let prog = parse_program_with(src, &prelude_effects())
            .unwrap_or_else(|e| panic!("parse: {}", e.render("t.fha")));
        let mut full = with_prelude(prog);
        check_program(&mut full).unwrap_or_else(|e| panic!("check: {}", e.render("t.fha")));
        full
    }

    /// Extract, normalize, decode — the whole back end in one call.
    fn extracted(src: &str) -> String {
        let prog = checked(src);
        let t = extract_program(&prog).expect("extraction");
        let nf = normalize(&t, 1_000_000).unwrap_or_else(|e| panic!("normalize: {e}"));
        decode_value(&nf).unwrap_or_else(|| panic!("undecodable normal form: {nf}"))
    }

    /// Both backends, which must agree.
    fn both(src: &str) -> String {
        let prog = checked(src);
        let direct = run_program(&prog, 1_000_000).expect("main exists");
        let via_lam = extracted(src);
        assert_eq!(direct.render(), via_lam, "backends disagree on:\n{src}");
        via_lam
    }

    #[test]
    fn pure_programs_agree_with_the_evaluator() {
        assert_eq!(both("main[total] VoidH : Bool = val tt"), "tt");
        assert_eq!(
            both(
                "main[total] VoidH : Bool * (Unit + Bool) = \
                 let x = val (ite ff tt ff) in val (x, inr[Unit + Bool] (ite x ff tt))"
            ),
            "(ff, inr tt)"
        );
        assert_eq!(
            both(
                "term not : Bool -> Bool = \\(b : Bool). ite b ff tt
                 main[total] VoidH : Bool = val (not (not tt))"
            ),
            "tt"
        );
        assert_eq!(
            both(
                "main[total] VoidH : Bool = \
                 val (case inl[Bool + Unit] tt { inl b -> b ; inr u -> ff })"
            ),
            "tt"
        );
        assert_eq!(
            both("main[total] VoidH : Bool = val ((/\\(a : Ty). \\(x : a). x) [Bool] tt)"),
            "tt"
        );
    }

    #[test]
    fn exceptions_agree_with_the_evaluator() {
        assert_eq!(
            both("main[total] VoidH : Unit + Bool = val (handle hExc (force (throw [Bool])))"),
            "inl ()"
        );
        assert_eq!(
            both(
                "main[total] VoidH : Unit + Bool = \
                 val (handle hExc (force (catch [Bool] (throw [Bool]) (thunk val ff))))"
            ),
            "inr ff"
        );
        assert_eq!(
            both(
                "main[total] VoidH : Unit + Bool = \
                 val (handle hExc (force (catch [Bool] (thunk val tt) (thunk val ff))))"
            ),
            "inr tt"
        );
    }

    #[test]
    fn multi_shot_handlers_agree_with_the_evaluator() {
        let src = r"
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
";
        assert_eq!(both(src), "(tt, ff)");
    }

    #[test]
    fn state_threading_agrees_with_the_evaluator() {
        let src = r"
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
";
        assert_eq!(both(src), "(tt, tt)");
    }

    #[test]
    fn fixpoints_terminate_or_exhaust_the_budget() {
        assert_eq!(
            both("main[partial] VoidH : Bool = let r : Bool = fix (self . val tt) in val r"),
            "tt"
        );
        let prog =
            checked("main[partial] VoidH : Bool = let r : Bool = fix (self . force self) in val r");
        let t = extract_program(&prog).expect("extraction");
        match normalize(&t, 10_000) {
            Err(LamError::BudgetExceeded { spent }) => assert_eq!(spent, 10_000),
            other => panic!("expected budget exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn distinct_booleans_extract_to_distinct_normal_forms() {
        let nf = |src: &str| {
            let prog = checked(src);
            normalize(&extract_program(&prog).unwrap(), 1_000_000).unwrap()
        };
        let t = nf("main[total] VoidH : Bool = val tt");
        let f = nf("main[total] VoidH : Bool = val ff");
        assert_eq!(t, sel_fst());
        assert_eq!(f, sel_snd());
        assert_ne!(t, f);
    }

    #[test]
    fn unused_definitions_stay_out_of_the_output() {
        let with_junk = checked(
            "term junk : Bool = tt
             main[total] VoidH : Bool = val ff",
        );
        let without = checked("main[total] VoidH : Bool = val ff");
        let a = extract_program(&with_junk).unwrap();
        let b = extract_program(&without).unwrap();
        assert_eq!(a, b, "dead definition changed the extraction");
    }
}
