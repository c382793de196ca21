//! Prelude source and the effect-combinator builders.
//!
//! The surface language cannot abstract over effect names (effects are
//! nominal), so the constructions that are "parametric in an effect" — the
//! thunk monad and its algebra, coproducts of signatures, single-operation
//! signatures, row elaboration — live here as host-level AST builders
//! invoked by the parser (for `++` aliases and row sugar) and by tests.
//! Everything they emit is ordinary core syntax that the checker validates
//! like any user code; nothing here is trusted.
//!
//! De Bruijn bookkeeping convention in the builders: comments spell the
//! binder telescope left to right, so an index can be read off as "distance
//! from the right end".

use std::sync::OnceLock;

use crate::parser::parse_program;
use crate::syntax::*;

/// Surface names pinned by the prelude.
pub const VOIDH: &str = "VoidH";
pub const EXC: &str = "Exc";
pub const HEXC: &str = "hExc";
pub const THROW: &str = "throw";
pub const CATCH: &str = "catch";
pub const MAYBE: &str = "Maybe";

/// One operation row: name, parameter type, result type.
pub type EffectRow = Vec<(String, TypeExpr, TypeExpr)>;

/// The prelude's surface source (also what `--no-prelude` skips).
pub fn prelude_source() -> &'static str {
    include_str!("prelude.fha")
}

/// The parsed prelude. Parsing is deterministic and the result immutable,
/// so it is done once and cloned out.
pub fn prelude() -> Program {
    static CACHE: OnceLock<Program> = OnceLock::new();
    CACHE
        .get_or_init(|| parse_program(prelude_source()).expect("prelude must parse"))
        .clone()
}

/// `prog` with the prelude's declarations prepended, which is how programs
/// are normally checked and run.
pub fn with_prelude(prog: Program) -> Program {
    let mut full = prelude();
    full.items.extend(prog.items);
    full
}

/// The prelude's effect signatures, for seeding a parser so that user files
/// can form coproducts with them.
pub fn prelude_effects() -> Vec<EffectDecl> {
    prelude()
        .items
        .iter()
        .filter_map(|i| match i {
            Item::EffectDef { decl, .. } => Some(decl.clone()),
            _ => None,
        })
        .collect()
}

/// The exception package: the `Exc` declaration and the `hExc` handler, as
/// declared by the prelude.
pub fn exc_package() -> (EffectDecl, HandlerExpr) {
    let p = prelude();
    let decl = p.effect(EXC).expect("prelude declares Exc").clone();
    let h = p.handler(HEXC).expect("prelude declares hExc").clone();
    (decl, h)
}

/// `throw` instantiated at `a`, as a term of type `Th Exc a`.
pub fn throw_term(a: &TypeExpr) -> Term {
    Term::tyapp(Term::Global(THROW.into()), a.clone())
}

/// `catch p h` at `a`, as a term of type `Th Exc a`.
pub fn catch_term(a: &TypeExpr, p: Term, h: Term) -> Term {
    Term::apps(Term::tyapp(Term::Global(CATCH.into()), a.clone()), [p, h])
}

/// The computation `force (throw [a])`.
pub fn throw_comp(a: &TypeExpr, mode: Mode) -> Comp {
    Comp::force(mode, throw_term(a))
}

/// The computation `force (catch [a] p h)`.
pub fn catch_comp(a: &TypeExpr, p: Term, h: Term, mode: Mode) -> Comp {
    Comp::force(mode, catch_term(a, p, h))
}

fn tv(i: usize) -> TypeExpr {
    TypeExpr::TVar(i)
}

fn v(i: usize) -> Term {
    Term::Var(i)
}

/// `forall a b. (a -> b) -> f a -> f b` — the type of a functorial action
/// for `f : Ty -> Ty`.
pub fn fmap_ty(f: &TypeExpr) -> TypeExpr {
    let f2 = shift_type(f, 0, 2);
    TypeExpr::forall(
        Kind::Ty,
        TypeExpr::forall(
            Kind::Ty,
            TypeExpr::arrow(
                TypeExpr::arrow(tv(1), tv(0)),
                TypeExpr::arrow(TypeExpr::app(f2.clone(), tv(1)), TypeExpr::app(f2, tv(0))),
            ),
        ),
    )
}

/// `forall a. f a -> g a` — a polymorphic transformation.
pub fn trans_ty(f: &TypeExpr, g: &TypeExpr) -> TypeExpr {
    TypeExpr::forall(
        Kind::Ty,
        TypeExpr::arrow(
            TypeExpr::app(shift_type(f, 0, 1), tv(0)),
            TypeExpr::app(shift_type(g, 0, 1), tv(0)),
        ),
    )
}

/// The empty signature: constantly `Empty`, with vacuous structure maps.
/// This is also the nil of row elaboration.
pub fn void_hf(name: &str) -> EffectDecl {
    // carrier = \F. \x. Empty
    let carrier = TypeExpr::lam(Kind::ty_to_ty(), TypeExpr::lam(Kind::Ty, TypeExpr::TEmpty));
    // hfmap = /\F. \fF. /\a. /\b. \f. \(x : Empty). x
    let hfmap = Term::tylam(
        Kind::ty_to_ty(),
        Term::lam(
            fmap_ty(&tv(0)),
            Term::tylam(
                Kind::Ty,
                Term::tylam(
                    Kind::Ty,
                    Term::lam(
                        TypeExpr::arrow(tv(1), tv(0)),
                        Term::lam(TypeExpr::TEmpty, v(0)),
                    ),
                ),
            ),
        ),
    );
    // hmap = /\F. \fF. /\G. \fG. \s. /\c. \(x : Empty). x
    let hmap = Term::tylam(
        Kind::ty_to_ty(),
        Term::lam(
            fmap_ty(&tv(0)),
            Term::tylam(
                Kind::ty_to_ty(),
                Term::lam(
                    fmap_ty(&tv(0)),
                    Term::lam(
                        trans_ty(&tv(1), &tv(0)),
                        Term::tylam(Kind::Ty, Term::lam(TypeExpr::TEmpty, v(0))),
                    ),
                ),
            ),
        ),
    );
    EffectDecl {
        name: name.to_string(),
        carrier,
        hfmap,
        hmap,
    }
}

/// The signature of one first-order operation `P ~> A`: carrier
/// `\F. \x. P * (A -> x)`. The thunk functor never occurs in the operand,
/// so `hmap` is the identity.
pub fn alg_op_hfun(name: &str, p: &TypeExpr, a: &TypeExpr) -> EffectDecl {
    // carrier = \F. \x. P * (A -> x)           telescope: F x
    let carrier = TypeExpr::lam(
        Kind::ty_to_ty(),
        TypeExpr::lam(
            Kind::Ty,
            TypeExpr::prod(
                shift_type(p, 0, 2),
                TypeExpr::arrow(shift_type(a, 0, 2), tv(0)),
            ),
        ),
    );
    // hfmap = /\F. \fF. /\a. /\b. \f. \pk. (fst pk, \y. f (snd pk y))
    //   type telescope: F a b   /  term telescope at body: fF f pk (y)
    let p3 = shift_type(p, 0, 3);
    let a3 = shift_type(a, 0, 3);
    let hfmap = Term::tylam(
        Kind::ty_to_ty(),
        Term::lam(
            fmap_ty(&tv(0)),
            Term::tylam(
                Kind::Ty,
                Term::tylam(
                    Kind::Ty,
                    Term::lam(
                        TypeExpr::arrow(tv(1), tv(0)),
                        Term::lam(
                            TypeExpr::prod(p3.clone(), TypeExpr::arrow(a3.clone(), tv(1))),
                            Term::pair(
                                Term::fst(v(0)),
                                Term::lam(a3, Term::app(v(2), Term::app(Term::snd(v(1)), v(0)))),
                            ),
                        ),
                    ),
                ),
            ),
        ),
    );
    // hmap = /\F. \fF. /\G. \fG. \s. /\c. \pk. pk
    let hmap = Term::tylam(
        Kind::ty_to_ty(),
        Term::lam(
            fmap_ty(&tv(0)),
            Term::tylam(
                Kind::ty_to_ty(),
                Term::lam(
                    fmap_ty(&tv(0)),
                    Term::lam(
                        trans_ty(&tv(1), &tv(0)),
                        Term::tylam(
                            Kind::Ty,
                            Term::lam(
                                TypeExpr::prod(
                                    shift_type(p, 0, 3),
                                    TypeExpr::arrow(shift_type(a, 0, 3), tv(0)),
                                ),
                                v(0),
                            ),
                        ),
                    ),
                ),
            ),
        ),
    );
    EffectDecl {
        name: name.to_string(),
        carrier,
        hfmap,
        hmap,
    }
}

/// Coproduct of two signatures: carrier `\F. \x. L F x + R F x`, with both
/// structure maps case-splitting and re-wrapping. The component structure
/// terms are cloned inline (they are closed).
pub fn coprod_hf(name: &str, left: &EffectDecl, right: &EffectDecl) -> EffectDecl {
    let c1 = &left.carrier;
    let c2 = &right.carrier;
    let applied =
        |c: &TypeExpr, f: TypeExpr, x: TypeExpr| TypeExpr::app(TypeExpr::app(c.clone(), f), x);

    // carrier = \F. \x. c1 F x + c2 F x        telescope: F x
    let carrier = TypeExpr::lam(
        Kind::ty_to_ty(),
        TypeExpr::lam(
            Kind::Ty,
            TypeExpr::sum(applied(c1, tv(1), tv(0)), applied(c2, tv(1), tv(0))),
        ),
    );

    // hfmap = /\F. \fF. /\a. /\b. \f. \x.
    //           case x { inl l -> inl[Sb] (L.hfmap [F] fF [a] [b] f l)
    //                  ; inr r -> inr[Sb] (R.hfmap [F] fF [a] [b] f r) }
    //   type telescope: F a b; term telescope in an arm: fF f x (l|r)
    let sum_at = |c1: &TypeExpr, c2: &TypeExpr, f: TypeExpr, x: TypeExpr| {
        TypeExpr::sum(applied(c1, f.clone(), x.clone()), applied(c2, f, x))
    };
    let hfmap_call = |h: &Term| {
        // h [F=2] fF=v3 [a=1] [b=0] f=v2 arg=v0
        Term::app(
            Term::app(
                Term::tyapp(
                    Term::tyapp(Term::app(Term::tyapp(h.clone(), tv(2)), v(3)), tv(1)),
                    tv(0),
                ),
                v(2),
            ),
            v(0),
        )
    };
    let sb = sum_at(c1, c2, tv(2), tv(0));
    let hfmap = Term::tylam(
        Kind::ty_to_ty(),
        Term::lam(
            fmap_ty(&tv(0)),
            Term::tylam(
                Kind::Ty,
                Term::tylam(
                    Kind::Ty,
                    Term::lam(
                        TypeExpr::arrow(tv(1), tv(0)),
                        Term::lam(
                            sum_at(c1, c2, tv(2), tv(1)),
                            Term::case(
                                v(0),
                                Term::inl(sb.clone(), hfmap_call(&left.hfmap)),
                                Term::inr(sb.clone(), hfmap_call(&right.hfmap)),
                            ),
                        ),
                    ),
                ),
            ),
        ),
    );

    // hmap = /\F. \fF. /\G. \fG. \s. /\c. \x.
    //          case x { inl l -> inl[SGc] (L.hmap [F] fF [G] fG s [c] l)
    //                 ; inr r -> inr[SGc] (R.hmap [F] fF [G] fG s [c] r) }
    //   type telescope: F G c; term telescope in an arm: fF fG s x (l|r)
    let hmap_call = |h: &Term| {
        // h [F=2] fF=v4 [G=1] fG=v3 s=v2 [c=0] arg=v0
        Term::app(
            Term::tyapp(
                Term::app(
                    Term::app(
                        Term::tyapp(Term::app(Term::tyapp(h.clone(), tv(2)), v(4)), tv(1)),
                        v(3),
                    ),
                    v(2),
                ),
                tv(0),
            ),
            v(0),
        )
    };
    let sgc = sum_at(c1, c2, tv(1), tv(0));
    let hmap = Term::tylam(
        Kind::ty_to_ty(),
        Term::lam(
            fmap_ty(&tv(0)),
            Term::tylam(
                Kind::ty_to_ty(),
                Term::lam(
                    fmap_ty(&tv(0)),
                    Term::lam(
                        trans_ty(&tv(1), &tv(0)),
                        Term::tylam(
                            Kind::Ty,
                            Term::lam(
                                sum_at(c1, c2, tv(2), tv(0)),
                                Term::case(
                                    v(0),
                                    Term::inl(sgc.clone(), hmap_call(&left.hmap)),
                                    Term::inr(sgc.clone(), hmap_call(&right.hmap)),
                                ),
                            ),
                        ),
                    ),
                ),
            ),
        ),
    );

    EffectDecl {
        name: name.to_string(),
        carrier,
        hfmap,
        hmap,
    }
}

/// Expand row sugar `effect E { o1 : P1 ~> A1; ... }` into a declaration
/// (right fold of coproducts over single-operation signatures, nil `void`)
/// plus one wrapper definition per operation:
///
/// ```text
/// term oi : Pi -> Th E Ai = \(p : Pi). thunk op <inject i (p, \y. y)> (x : Ai. val x)
/// ```
///
/// so `force (oi arg)` issues the operation.
pub fn elaborate_row(
    name: &str,
    rows: &[(String, TypeExpr, TypeExpr)],
    span: Span,
) -> (EffectDecl, Vec<Item>) {
    let mut acc = void_hf(name);
    for (i, (_, p, a)) in rows.iter().enumerate().rev() {
        let leaf = alg_op_hfun(&format!("{name}_op{i}"), p, a);
        acc = coprod_hf(name, &leaf, &acc);
    }
    acc.name = name.to_string();

    // Wrapper terms. The operand type at result X is the nested sum
    //   (P0 * (A0 -> X)) + ((P1 * (A1 -> X)) + (... + Empty))
    // and the i-th injection is inr^i (inl _).
    let mut items = Vec::new();
    for (i, (op_name, p_i, a_i)) in rows.iter().enumerate() {
        let summand = |p: &TypeExpr, a: &TypeExpr| {
            TypeExpr::prod(p.clone(), TypeExpr::arrow(a.clone(), a_i.clone()))
        };
        // tails[j] = S_j + (S_{j+1} + ... + Empty), for j = 0..rows.len().
        let mut tails = vec![TypeExpr::TEmpty];
        for (_, p, a) in rows.iter().rev() {
            let t = TypeExpr::sum(summand(p, a), tails.last().unwrap().clone());
            tails.push(t);
        }
        tails.reverse();

        // (p, \(y : Ai). y), under \(p : Pi).
        let payload = Term::pair(v(0), Term::lam(a_i.clone(), v(0)));
        let mut operand = Term::inl(tails[i].clone(), payload);
        for j in (0..i).rev() {
            operand = Term::inr(tails[j].clone(), operand);
        }
        let body = Term::lam(
            p_i.clone(),
            Term::thunk(Comp::op(
                Mode::Total,
                operand,
                Some(a_i.clone()),
                Comp::val(Mode::Total, v(0)),
            )),
        );
        items.push(Item::TermDef {
            name: op_name.clone(),
            ty: TypeExpr::arrow(p_i.clone(), TypeExpr::th(name, a_i.clone())),
            body,
            span,
        });
    }
    (acc, items)
}

/// The handler every effect carries for free: interpret a computation into
/// its own thunk type. `Total` gives the `Th E` monad, `Partial` the
/// `PTh E` monad (declared `via` the identity functor, since
/// `PTh E a = PTh E (Id a)`).
pub fn th_alg(decl: &EffectDecl, mode: Mode) -> HandlerExpr {
    let e = decl.name.clone();
    let th_of = |a: TypeExpr| match mode {
        Mode::Total => TypeExpr::th(e.clone(), a),
        Mode::Partial => TypeExpr::pth(e.clone(), a),
    };
    let susp = |c: Comp| match mode {
        Mode::Total => Term::thunk(c),
        Mode::Partial => Term::pthunk(c),
    };
    let monad = TypeExpr::lam(Kind::Ty, th_of(tv(0)));

    // ret = /\a. \(x : a). thunk (val x)
    let ret = Term::tylam(Kind::Ty, Term::lam(tv(0), susp(Comp::val(mode, v(0)))));

    // bind = /\a. /\b. \(m : Th E a). \(k : a -> Th E b).
    //          thunk (let x = force m in force (k x))
    //   term telescope at the let body: m k x
    let bind = Term::tylam(
        Kind::Ty,
        Term::tylam(
            Kind::Ty,
            Term::lam(
                th_of(tv(1)),
                Term::lam(
                    TypeExpr::arrow(tv(1), th_of(tv(0))),
                    susp(Comp::let_in(
                        mode,
                        None,
                        Comp::force(mode, v(1)),
                        Comp::force(mode, Term::app(v(1), v(0))),
                    )),
                ),
            ),
        ),
    );

    // malg = /\a. \(o : carrier (Th E) a). thunk (op o (x : a. val x))
    let carrier_app = TypeExpr::app(
        TypeExpr::app(
            shift_type(&decl.carrier, 0, 1),
            TypeExpr::lam(Kind::Ty, th_of(tv(0))),
        ),
        tv(0),
    );
    let malg = Term::tylam(
        Kind::Ty,
        Term::lam(
            carrier_app,
            susp(Comp::op(mode, v(0), Some(tv(0)), Comp::val(mode, v(0)))),
        ),
    );

    HandlerExpr {
        effect: e,
        monad,
        ret,
        bind,
        malg,
        via: match mode {
            Mode::Total => None,
            Mode::Partial => Some(TypeExpr::lam(Kind::Ty, tv(0))),
        },
    }
}

/// Derive a functorial action from a monad's return and bind:
/// `/\a. /\b. \f. \ma. bind [a] [b] ma (\x. ret [b] (f x))`.
pub fn fct_of_mnd(monad: &TypeExpr, ret: &Term, bind: &Term) -> Term {
    let m2 = shift_type(monad, 0, 2);
    Term::tylam(
        Kind::Ty,
        Term::tylam(
            Kind::Ty,
            Term::lam(
                TypeExpr::arrow(tv(1), tv(0)),
                Term::lam(
                    TypeExpr::app(m2, tv(1)),
                    // term telescope: f ma (x)
                    Term::app(
                        Term::app(Term::tyapp(Term::tyapp(bind.clone(), tv(1)), tv(0)), v(0)),
                        Term::lam(
                            tv(1),
                            Term::app(Term::tyapp(ret.clone(), tv(0)), Term::app(v(2), v(0))),
                        ),
                    ),
                ),
            ),
        ),
    )
}

/// A handler packaged for modular reuse: `alg` names a top-level handler
/// for the combined effect (the handled signature's coproduct with the
/// ambient row), and `run : forall a. M a -> Th Ambient (Res a)` extracts
/// the monad's answer back into the ambient world.
pub struct ModularHandler {
    pub alg: String,
    pub run: Term,
}

/// Build `force (run [A] (handle alg c))`: handle `c` with the modular
/// handler and re-enter the ambient effect.
pub fn modular_handle(h: &ModularHandler, result_ty: &TypeExpr, c: Comp, mode: Mode) -> Comp {
    Comp::force(
        mode,
        Term::app(
            Term::tyapp(h.run.clone(), result_ty.clone()),
            Term::handle(h.alg.clone(), c),
        ),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prelude_parses_and_names_are_present() {
        let p = prelude();
        assert!(p.effect(VOIDH).is_some());
        assert!(p.effect(EXC).is_some());
        assert!(p.handler(HEXC).is_some());
        assert!(p.term_def(THROW).is_some());
        assert!(p.term_def(CATCH).is_some());
        assert!(p.type_def(MAYBE).is_some());
        assert!(p.main().is_none());
    }

    #[test]
    fn exc_carrier_shape() {
        let (exc, _) = exc_package();
        // \F. \x. Unit + (F x * F x)
        let expected = TypeExpr::lam(
            Kind::ty_to_ty(),
            TypeExpr::lam(
                Kind::Ty,
                TypeExpr::sum(
                    TypeExpr::TUnit,
                    TypeExpr::prod(TypeExpr::app(tv(1), tv(0)), TypeExpr::app(tv(1), tv(0))),
                ),
            ),
        );
        assert_eq!(exc.carrier, expected);
    }

    #[test]
    fn alg_op_carrier_shape() {
        let d = alg_op_hfun("Tick", &TypeExpr::TUnit, &TypeExpr::TBool);
        let expected = TypeExpr::lam(
            Kind::ty_to_ty(),
            TypeExpr::lam(
                Kind::Ty,
                TypeExpr::prod(TypeExpr::TUnit, TypeExpr::arrow(TypeExpr::TBool, tv(0))),
            ),
        );
        assert_eq!(d.carrier, expected);
    }

    #[test]
    fn coprod_carrier_applies_components() {
        let l = void_hf("L");
        let r = alg_op_hfun("R", &TypeExpr::TUnit, &TypeExpr::TBool);
        let d = coprod_hf("C", &l, &r);
        match &d.carrier {
            TypeExpr::TLam(_, body) => match body.as_ref() {
                TypeExpr::TLam(_, inner) => {
                    assert!(matches!(inner.as_ref(), TypeExpr::TSum(_, _)));
                }
                other => panic!("expected inner lambda, got {other:?}"),
            },
            other => panic!("expected carrier lambda, got {other:?}"),
        }
    }

    #[test]
    fn row_wrappers_have_the_advertised_types() {
        let rows = vec![
            ("get".to_string(), TypeExpr::TUnit, TypeExpr::TBool),
            ("put".to_string(), TypeExpr::TBool, TypeExpr::TUnit),
        ];
        let (decl, items) = elaborate_row("St", &rows, Span::default());
        assert_eq!(decl.name, "St");
        assert_eq!(items.len(), 2);
        match &items[0] {
            Item::TermDef { name, ty, .. } => {
                assert_eq!(name, "get");
                assert_eq!(
                    *ty,
                    TypeExpr::arrow(TypeExpr::TUnit, TypeExpr::th("St", TypeExpr::TBool))
                );
            }
            other => panic!("expected a term def, got {other:?}"),
        }
        // put injects into the second summand: inr (inl _).
        match &items[1] {
            Item::TermDef { body, .. } => match body {
                Term::Lam(_, inner) => match inner.as_ref() {
                    Term::Thunk(_, c) => match &c.node {
                        CompNode::Op(operand, Some(_), _) => {
                            assert!(
                                matches!(operand.as_ref(), Term::Inr(_, x) if matches!(x.as_ref(), Term::Inl(_, _))),
                                "operand {operand:?}"
                            );
                        }
                        other => panic!("expected op, got {other:?}"),
                    },
                    other => panic!("expected thunk, got {other:?}"),
                },
                other => panic!("expected lambda, got {other:?}"),
            },
            other => panic!("expected a term def, got {other:?}"),
        }
    }
}
