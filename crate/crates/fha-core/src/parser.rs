//! Lexer and recursive-descent parser for the surface syntax.
//!
//! Binders are named in source and resolved to de Bruijn indices here; an
//! identifier that is not bound becomes a `Global` (terms) or `TConst`
//! (types) and is validated by the checker, so the parser never needs a
//! symbol table for forward references. The two exceptions are effect
//! names, which must already be declared when a coproduct alias
//! (`effect C = A ++ B`) clones their structure, and row sugar, which
//! expands in place into an ordinary effect declaration plus one generated
//! operation wrapper per row entry (see `stdlib`).
//!
//! Disambiguation notes, mirrored by the pretty-printer:
//! - binder forms (`\`, `/\`, `thunk`, `handle`, `val`, `force`, …) extend
//!   maximally to the right; application chains stop at any keyword or
//!   closing delimiter, which is what terminates `let x = val t in …`.
//! - after an `op` operand, `( IDENT .` or `( IDENT :` starts the
//!   continuation binder; any other `(` is an application argument. A bare
//!   `op t` gets the identity continuation `(x. val x)`.
//! - type operators: application > `*` > `+` > `->`, all right-associative.

use std::collections::HashMap;
use std::fmt;

use crate::stdlib;
use crate::syntax::*;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseError {
    pub span: Span,
    pub msg: String,
}

impl ParseError {
    /// Render in the shared diagnostic format, e.g.
    /// `prog.fha:17-20: error: expected ')'`.
    pub fn render(&self, file: &str) -> String {
        format!("{file}:{}: error: {}", self.span, self.msg)
    }
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: error: {}", self.span, self.msg)
    }
}

impl std::error::Error for ParseError {}

// ---------------------------------------------------------------------------
// Tokens
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq)]
enum Tok {
    Ident(String),
    // Declaration keywords.
    KwType,
    KwTerm,
    KwEffect,
    KwHandler,
    KwMain,
    KwHfunctor,
    KwVia,
    KwFor,
    KwTotal,
    KwPartial,
    // Type keywords.
    KwForall,
    KwTy,
    KwUnit,
    KwBool,
    KwEmpty,
    KwTh,
    KwPTh,
    // Term/computation keywords.
    KwHandle,
    KwVal,
    KwLet,
    KwIn,
    KwOp,
    KwForce,
    KwFix,
    KwThunk,
    KwPthunk,
    KwTt,
    KwFf,
    KwIte,
    KwFst,
    KwSnd,
    KwInl,
    KwInr,
    KwCase,
    KwAbsurd,
    // Punctuation.
    LParen,
    RParen,
    LBrace,
    RBrace,
    LBracket,
    RBracket,
    Lambda,    // \
    BigLambda, // /\
    Dot,
    Comma,
    Semi,
    Colon,
    Eq,
    Arrow,    // ->
    RowArrow, // ~>
    Plus,
    PlusPlus,
    Star,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        use Tok::*;
        match self {
            Ident(s) => format!("identifier `{s}`"),
            KwType => "`type`".into(),
            KwTerm => "`term`".into(),
            KwEffect => "`effect`".into(),
            KwHandler => "`handler`".into(),
            KwMain => "`main`".into(),
            KwHfunctor => "`hfunctor`".into(),
            KwVia => "`via`".into(),
            KwFor => "`for`".into(),
            KwTotal => "`total`".into(),
            KwPartial => "`partial`".into(),
            KwForall => "`forall`".into(),
            KwTy => "`Ty`".into(),
            KwUnit => "`Unit`".into(),
            KwBool => "`Bool`".into(),
            KwEmpty => "`Empty`".into(),
            KwTh => "`Th`".into(),
            KwPTh => "`PTh`".into(),
            KwHandle => "`handle`".into(),
            KwVal => "`val`".into(),
            KwLet => "`let`".into(),
            KwIn => "`in`".into(),
            KwOp => "`op`".into(),
            KwForce => "`force`".into(),
            KwFix => "`fix`".into(),
            KwThunk => "`thunk`".into(),
            KwPthunk => "`pthunk`".into(),
            KwTt => "`tt`".into(),
            KwFf => "`ff`".into(),
            KwIte => "`ite`".into(),
            KwFst => "`fst`".into(),
            KwSnd => "`snd`".into(),
            KwInl => "`inl`".into(),
            KwInr => "`inr`".into(),
            KwCase => "`case`".into(),
            KwAbsurd => "`absurd`".into(),
            LParen => "`(`".into(),
            RParen => "`)`".into(),
            LBrace => "`{`".into(),
            RBrace => "`}`".into(),
            LBracket => "`[`".into(),
            RBracket => "`]`".into(),
            Lambda => "`\\`".into(),
            BigLambda => "`/\\`".into(),
            Dot => "`.`".into(),
            Comma => "`,`".into(),
            Semi => "`;`".into(),
            Colon => "`:`".into(),
            Eq => "`=`".into(),
            Arrow => "`->`".into(),
            RowArrow => "`~>`".into(),
            Plus => "`+`".into(),
            PlusPlus => "`++`".into(),
            Star => "`*`".into(),
            Eof => "end of input".into(),
        }
    }
}

fn keyword(s: &str) -> Option<Tok> {
    use Tok::*;
    Some(match s {
        "type" => KwType,
        "term" => KwTerm,
        "effect" => KwEffect,
        "handler" => KwHandler,
        "main" => KwMain,
        "hfunctor" => KwHfunctor,
        "via" => KwVia,
        "for" => KwFor,
        "total" => KwTotal,
        "partial" => KwPartial,
        "forall" => KwForall,
        "Ty" => KwTy,
        "Unit" => KwUnit,
        "Bool" => KwBool,
        "Empty" => KwEmpty,
        "Th" => KwTh,
        "PTh" => KwPTh,
        "handle" => KwHandle,
        "val" => KwVal,
        "let" => KwLet,
        "in" => KwIn,
        "op" => KwOp,
        "force" => KwForce,
        "fix" => KwFix,
        "thunk" => KwThunk,
        "pthunk" => KwPthunk,
        "tt" => KwTt,
        "ff" => KwFf,
        "ite" => KwIte,
        "fst" => KwFst,
        "snd" => KwSnd,
        "inl" => KwInl,
        "inr" => KwInr,
        "case" => KwCase,
        "absurd" => KwAbsurd,
        _ => return None,
    })
}

fn lex(src: &str) -> Result<Vec<(Tok, Span)>, ParseError> {
    let b = src.as_bytes();
    let mut toks = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let c = b[i];
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        if c == b'-' && b.get(i + 1) == Some(&b'-') {
            while i < b.len() && b[i] != b'\n' {
                i += 1;
            }
            continue;
        }
        let start = i;
        let tok = match c {
            b'(' => {
                i += 1;
                Tok::LParen
            }
            b')' => {
                i += 1;
                Tok::RParen
            }
            b'{' => {
                i += 1;
                Tok::LBrace
            }
            b'}' => {
                i += 1;
                Tok::RBrace
            }
            b'[' => {
                i += 1;
                Tok::LBracket
            }
            b']' => {
                i += 1;
                Tok::RBracket
            }
            b'.' => {
                i += 1;
                Tok::Dot
            }
            b',' => {
                i += 1;
                Tok::Comma
            }
            b';' => {
                i += 1;
                Tok::Semi
            }
            b':' => {
                i += 1;
                Tok::Colon
            }
            b'=' => {
                i += 1;
                Tok::Eq
            }
            b'*' => {
                i += 1;
                Tok::Star
            }
            b'\\' => {
                i += 1;
                Tok::Lambda
            }
            b'/' => {
                if b.get(i + 1) == Some(&b'\\') {
                    i += 2;
                    Tok::BigLambda
                } else {
                    return Err(ParseError {
                        span: Span::new(i, i + 1),
                        msg: "stray `/` (type-level lambda is written `/\\`)".into(),
                    });
                }
            }
            b'+' => {
                if b.get(i + 1) == Some(&b'+') {
                    i += 2;
                    Tok::PlusPlus
                } else {
                    i += 1;
                    Tok::Plus
                }
            }
            b'-' => {
                if b.get(i + 1) == Some(&b'>') {
                    i += 2;
                    Tok::Arrow
                } else {
                    return Err(ParseError {
                        span: Span::new(i, i + 1),
                        msg: "stray `-` (did you mean `->` or a `--` comment?)".into(),
                    });
                }
            }
            b'~' => {
                if b.get(i + 1) == Some(&b'>') {
                    i += 2;
                    Tok::RowArrow
                } else {
                    return Err(ParseError {
                        span: Span::new(i, i + 1),
                        msg: "stray `~` (did you mean `~>`?)".into(),
                    });
                }
            }
            c if c.is_ascii_alphabetic() => {
                let mut j = i + 1;
                while j < b.len() && (b[j].is_ascii_alphanumeric() || b[j] == b'_' || b[j] == b'\'')
                {
                    j += 1;
                }
                let word = &src[i..j];
                i = j;
                keyword(word).unwrap_or_else(|| Tok::Ident(word.to_string()))
            }
            other => {
                return Err(ParseError {
                    span: Span::new(i, i + 1),
                    msg: format!("unexpected character `{}`", other as char),
                });
            }
        };
        toks.push((tok, Span::new(start, i)));
    }
    toks.push((Tok::Eof, Span::new(b.len(), b.len())));
    Ok(toks)
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct Parser {
    toks: Vec<(Tok, Span)>,
    pos: usize,
    tyvars: Vec<String>,
    tmvars: Vec<String>,
    /// Effects declared so far, so coproduct aliases can clone their
    /// structure.
    effects: HashMap<String, EffectDecl>,
}

impl Parser {
    fn new(src: &str) -> Result<Self, ParseError> {
        Ok(Parser {
            toks: lex(src)?,
            pos: 0,
            tyvars: Vec::new(),
            tmvars: Vec::new(),
            effects: HashMap::new(),
        })
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn peek_at(&self, off: usize) -> &Tok {
        let i = (self.pos + off).min(self.toks.len() - 1);
        &self.toks[i].0
    }

    fn span(&self) -> Span {
        self.toks[self.pos].1
    }

    fn prev_end(&self) -> usize {
        self.toks[self.pos.saturating_sub(1)].1.end
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ParseError> {
        Err(ParseError {
            span: self.span(),
            msg: msg.into(),
        })
    }

    fn expect(&mut self, tok: Tok) -> Result<(), ParseError> {
        if *self.peek() == tok {
            self.bump();
            Ok(())
        } else {
            self.err(format!(
                "expected {}, found {}",
                tok.describe(),
                self.peek().describe()
            ))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            other => self.err(format!("expected {what}, found {}", other.describe())),
        }
    }

    // -- kinds --------------------------------------------------------------

    fn kind(&mut self) -> Result<Kind, ParseError> {
        let lhs = self.kind_atom()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let rhs = self.kind()?;
            Ok(Kind::arrow(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn kind_atom(&mut self) -> Result<Kind, ParseError> {
        match self.peek() {
            Tok::KwTy => {
                self.bump();
                Ok(Kind::Ty)
            }
            Tok::LParen => {
                self.bump();
                let k = self.kind()?;
                self.expect(Tok::RParen)?;
                Ok(k)
            }
            other => self.err(format!("expected a kind, found {}", other.describe())),
        }
    }

    // -- types --------------------------------------------------------------

    fn ty(&mut self) -> Result<TypeExpr, ParseError> {
        match self.peek() {
            Tok::KwForall => {
                self.bump();
                let (name, kind) = self.ty_binder()?;
                self.expect(Tok::Dot)?;
                self.tyvars.push(name);
                let body = self.ty()?;
                self.tyvars.pop();
                Ok(TypeExpr::forall(kind, body))
            }
            Tok::Lambda => {
                self.bump();
                let (name, kind) = self.ty_binder()?;
                self.expect(Tok::Dot)?;
                self.tyvars.push(name);
                let body = self.ty()?;
                self.tyvars.pop();
                Ok(TypeExpr::lam(kind, body))
            }
            _ => self.ty_arrow(),
        }
    }

    fn ty_binder(&mut self) -> Result<(String, Kind), ParseError> {
        self.expect(Tok::LParen)?;
        let name = self.ident("a type variable")?;
        self.expect(Tok::Colon)?;
        let kind = self.kind()?;
        self.expect(Tok::RParen)?;
        Ok((name, kind))
    }

    fn ty_arrow(&mut self) -> Result<TypeExpr, ParseError> {
        let lhs = self.ty_sum()?;
        if *self.peek() == Tok::Arrow {
            self.bump();
            let rhs = self.ty()?;
            Ok(TypeExpr::arrow(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn ty_sum(&mut self) -> Result<TypeExpr, ParseError> {
        let lhs = self.ty_prod()?;
        if *self.peek() == Tok::Plus {
            self.bump();
            let rhs = self.ty_sum()?;
            Ok(TypeExpr::sum(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn ty_prod(&mut self) -> Result<TypeExpr, ParseError> {
        let lhs = self.ty_app()?;
        if *self.peek() == Tok::Star {
            self.bump();
            let rhs = self.ty_prod()?;
            Ok(TypeExpr::prod(lhs, rhs))
        } else {
            Ok(lhs)
        }
    }

    fn effect_name(&mut self) -> Result<String, ParseError> {
        if *self.peek() == Tok::LParen {
            self.bump();
            let n = self.ident("an effect name")?;
            self.expect(Tok::RParen)?;
            Ok(n)
        } else {
            self.ident("an effect name")
        }
    }

    fn ty_app(&mut self) -> Result<TypeExpr, ParseError> {
        match self.peek() {
            Tok::KwTh => {
                self.bump();
                let e = self.effect_name()?;
                let a = self.ty_atom()?;
                Ok(TypeExpr::th(e, a))
            }
            Tok::KwPTh => {
                self.bump();
                let e = self.effect_name()?;
                let a = self.ty_atom()?;
                Ok(TypeExpr::pth(e, a))
            }
            _ => {
                let mut acc = self.ty_atom()?;
                while self.ty_atom_starts() {
                    let arg = self.ty_atom()?;
                    acc = TypeExpr::app(acc, arg);
                }
                Ok(acc)
            }
        }
    }

    fn ty_atom_starts(&self) -> bool {
        matches!(
            self.peek(),
            Tok::Ident(_) | Tok::KwUnit | Tok::KwBool | Tok::KwEmpty | Tok::LParen
        )
    }

    fn ty_atom(&mut self) -> Result<TypeExpr, ParseError> {
        match self.peek().clone() {
            Tok::KwUnit => {
                self.bump();
                Ok(TypeExpr::TUnit)
            }
            Tok::KwBool => {
                self.bump();
                Ok(TypeExpr::TBool)
            }
            Tok::KwEmpty => {
                self.bump();
                Ok(TypeExpr::TEmpty)
            }
            Tok::Ident(name) => {
                self.bump();
                match self.tyvars.iter().rev().position(|v| *v == name) {
                    Some(i) => Ok(TypeExpr::TVar(i)),
                    None => Ok(TypeExpr::TConst(name)),
                }
            }
            Tok::LParen => {
                self.bump();
                let t = self.ty()?;
                self.expect(Tok::RParen)?;
                Ok(t)
            }
            other => self.err(format!("expected a type, found {}", other.describe())),
        }
    }

    // -- terms --------------------------------------------------------------

    fn term(&mut self) -> Result<Term, ParseError> {
        match self.peek() {
            Tok::Lambda => {
                self.bump();
                self.expect(Tok::LParen)?;
                let name = self.ident("a variable")?;
                self.expect(Tok::Colon)?;
                let ann = self.ty()?;
                self.expect(Tok::RParen)?;
                self.expect(Tok::Dot)?;
                self.tmvars.push(name);
                let body = self.term()?;
                self.tmvars.pop();
                Ok(Term::lam(ann, body))
            }
            Tok::BigLambda => {
                self.bump();
                let (name, kind) = self.ty_binder()?;
                self.expect(Tok::Dot)?;
                self.tyvars.push(name);
                let body = self.term()?;
                self.tyvars.pop();
                Ok(Term::tylam(kind, body))
            }
            Tok::KwThunk => {
                self.bump();
                let mut c = self.comp()?;
                c.retag_mode(Mode::Total);
                Ok(Term::thunk(c))
            }
            Tok::KwPthunk => {
                self.bump();
                let mut c = self.comp()?;
                c.retag_mode(Mode::Partial);
                Ok(Term::pthunk(c))
            }
            Tok::KwHandle => {
                self.bump();
                let h = if *self.peek() == Tok::LParen {
                    self.bump();
                    let n = self.ident("a handler name")?;
                    self.expect(Tok::RParen)?;
                    n
                } else {
                    self.ident("a handler name")?
                };
                let c = self.comp()?;
                Ok(Term::handle(h, c))
            }
            _ => self.term_app(),
        }
    }

    fn term_unit_starts(&self) -> bool {
        matches!(
            self.peek(),
            Tok::Ident(_)
                | Tok::KwTt
                | Tok::KwFf
                | Tok::LParen
                | Tok::KwCase
                | Tok::KwIte
                | Tok::KwFst
                | Tok::KwSnd
                | Tok::KwInl
                | Tok::KwInr
                | Tok::KwAbsurd
        )
    }

    /// One application unit: an atom, or a special head with its fixed
    /// arguments.
    fn term_unit(&mut self) -> Result<Term, ParseError> {
        match self.peek() {
            Tok::KwIte => {
                self.bump();
                let c = self.term_atom()?;
                let t = self.term_atom()?;
                let e = self.term_atom()?;
                Ok(Term::ite(c, t, e))
            }
            Tok::KwFst => {
                self.bump();
                Ok(Term::fst(self.term_atom()?))
            }
            Tok::KwSnd => {
                self.bump();
                Ok(Term::snd(self.term_atom()?))
            }
            Tok::KwInl => {
                self.bump();
                self.expect(Tok::LBracket)?;
                let ty = self.ty()?;
                self.expect(Tok::RBracket)?;
                Ok(Term::inl(ty, self.term_atom()?))
            }
            Tok::KwInr => {
                self.bump();
                self.expect(Tok::LBracket)?;
                let ty = self.ty()?;
                self.expect(Tok::RBracket)?;
                Ok(Term::inr(ty, self.term_atom()?))
            }
            Tok::KwAbsurd => {
                self.bump();
                self.expect(Tok::LBracket)?;
                let ty = self.ty()?;
                self.expect(Tok::RBracket)?;
                Ok(Term::absurd(ty, self.term_atom()?))
            }
            _ => self.term_atom(),
        }
    }

    fn term_app(&mut self) -> Result<Term, ParseError> {
        let mut acc = self.term_unit()?;
        loop {
            if *self.peek() == Tok::LBracket {
                self.bump();
                let ty = self.ty()?;
                self.expect(Tok::RBracket)?;
                acc = Term::tyapp(acc, ty);
            } else if self.term_unit_starts() {
                let arg = self.term_unit()?;
                acc = Term::app(acc, arg);
            } else {
                return Ok(acc);
            }
        }
    }

    fn term_atom(&mut self) -> Result<Term, ParseError> {
        match self.peek().clone() {
            Tok::KwTt => {
                self.bump();
                Ok(Term::Tt)
            }
            Tok::KwFf => {
                self.bump();
                Ok(Term::Ff)
            }
            Tok::Ident(name) => {
                self.bump();
                match self.tmvars.iter().rev().position(|v| *v == name) {
                    Some(i) => Ok(Term::Var(i)),
                    None => Ok(Term::Global(name)),
                }
            }
            Tok::KwCase => {
                self.bump();
                let scrut = self.term_app()?;
                self.expect(Tok::LBrace)?;
                self.expect(Tok::KwInl)?;
                let ln = self.ident("a variable")?;
                self.expect(Tok::Arrow)?;
                self.tmvars.push(ln);
                let l = self.term()?;
                self.tmvars.pop();
                self.expect(Tok::Semi)?;
                self.expect(Tok::KwInr)?;
                let rn = self.ident("a variable")?;
                self.expect(Tok::Arrow)?;
                self.tmvars.push(rn);
                let r = self.term()?;
                self.tmvars.pop();
                self.expect(Tok::RBrace)?;
                Ok(Term::case(scrut, l, r))
            }
            Tok::LParen => {
                self.bump();
                if *self.peek() == Tok::RParen {
                    self.bump();
                    return Ok(Term::Unit);
                }
                let first = self.term()?;
                match self.peek() {
                    Tok::Comma => {
                        self.bump();
                        let second = self.term()?;
                        self.expect(Tok::RParen)?;
                        Ok(Term::pair(first, second))
                    }
                    Tok::RParen => {
                        self.bump();
                        Ok(first)
                    }
                    other => {
                        let d = other.describe();
                        self.err(format!("expected `,` or `)`, found {d}"))
                    }
                }
            }
            other => self.err(format!("expected a term, found {}", other.describe())),
        }
    }

    // -- computations ---------------------------------------------------------

    /// Parse a computation. Modes are provisional (`Total`) here; callers
    /// retag whole trees at `thunk` / `pthunk` / `main` roots.
    fn comp(&mut self) -> Result<Comp, ParseError> {
        match self.peek() {
            Tok::KwVal => {
                self.bump();
                Ok(Comp::val(Mode::Total, self.term()?))
            }
            Tok::KwLet => {
                self.bump();
                let name = self.ident("a variable")?;
                let ann = if *self.peek() == Tok::Colon {
                    self.bump();
                    Some(self.ty()?)
                } else {
                    None
                };
                self.expect(Tok::Eq)?;
                let bound = self.comp()?;
                self.expect(Tok::KwIn)?;
                self.tmvars.push(name);
                let body = self.comp()?;
                self.tmvars.pop();
                Ok(Comp::let_in(Mode::Total, ann, bound, body))
            }
            Tok::KwOp => {
                self.bump();
                let operand = self.op_operand()?;
                if *self.peek() == Tok::LParen
                    && matches!(self.peek_at(1), Tok::Ident(_))
                    && matches!(self.peek_at(2), Tok::Dot | Tok::Colon)
                {
                    self.bump(); // (
                    let name = self.ident("a variable")?;
                    let ann = if *self.peek() == Tok::Colon {
                        self.bump();
                        Some(self.ty()?)
                    } else {
                        None
                    };
                    self.expect(Tok::Dot)?;
                    self.tmvars.push(name);
                    let k = self.comp()?;
                    self.tmvars.pop();
                    self.expect(Tok::RParen)?;
                    Ok(Comp::op(Mode::Total, operand, ann, k))
                } else {
                    // Identity continuation: `op t` is `op t (x. val x)`.
                    Ok(Comp::op(
                        Mode::Total,
                        operand,
                        None,
                        Comp::val(Mode::Total, Term::Var(0)),
                    ))
                }
            }
            Tok::KwForce => {
                self.bump();
                Ok(Comp::force(Mode::Total, self.term()?))
            }
            Tok::KwFix => {
                self.bump();
                self.expect(Tok::LParen)?;
                let name = self.ident("a variable")?;
                self.expect(Tok::Dot)?;
                self.tmvars.push(name);
                let body = self.comp()?;
                self.tmvars.pop();
                self.expect(Tok::RParen)?;
                Ok(Comp::fix(body))
            }
            Tok::LParen => {
                self.bump();
                let c = self.comp()?;
                self.expect(Tok::RParen)?;
                Ok(c)
            }
            other => {
                let d = other.describe();
                self.err(format!(
                    "expected a computation (`val`, `let`, `op`, `force`, or `fix`), found {d}"
                ))
            }
        }
    }

    /// An `op` operand: an application chain that stops where the
    /// continuation binder `( IDENT .` / `( IDENT :` begins.
    fn op_operand(&mut self) -> Result<Term, ParseError> {
        let mut acc = self.term_unit()?;
        loop {
            if *self.peek() == Tok::LBracket {
                self.bump();
                let ty = self.ty()?;
                self.expect(Tok::RBracket)?;
                acc = Term::tyapp(acc, ty);
            } else if *self.peek() == Tok::LParen
                && matches!(self.peek_at(1), Tok::Ident(_))
                && matches!(self.peek_at(2), Tok::Dot | Tok::Colon)
            {
                return Ok(acc);
            } else if self.term_unit_starts() {
                let arg = self.term_unit()?;
                acc = Term::app(acc, arg);
            } else {
                return Ok(acc);
            }
        }
    }

    // -- declarations ---------------------------------------------------------

    fn hfunctor_body(&mut self) -> Result<(TypeExpr, Term, Term), ParseError> {
        self.expect(Tok::LBrace)?;
        self.field_name("carrier")?;
        self.expect(Tok::Eq)?;
        let carrier = self.ty()?;
        self.expect(Tok::Semi)?;
        self.field_name("hfmap")?;
        self.expect(Tok::Eq)?;
        let hfmap = self.term()?;
        self.expect(Tok::Semi)?;
        self.field_name("hmap")?;
        self.expect(Tok::Eq)?;
        let hmap = self.term()?;
        if *self.peek() == Tok::Semi {
            self.bump();
        }
        self.expect(Tok::RBrace)?;
        Ok((carrier, hfmap, hmap))
    }

    /// Contextual field keyword (`carrier`, `hfmap`, `M`, `ret`, …): an
    /// ordinary identifier that must spell `want`.
    fn field_name(&mut self, want: &str) -> Result<(), ParseError> {
        match self.peek().clone() {
            Tok::Ident(s) if s == want => {
                self.bump();
                Ok(())
            }
            // `hfmap`/`hmap` are plain identifiers, but `term`/`type` etc.
            // are real keywords; none of the field names collide with them.
            other => self.err(format!(
                "expected field `{want}`, found {}",
                other.describe()
            )),
        }
    }

    fn item(&mut self) -> Result<Vec<Item>, ParseError> {
        let start = self.span().start;
        match self.peek().clone() {
            Tok::KwType => {
                self.bump();
                let name = self.ident("a type name")?;
                self.expect(Tok::Colon)?;
                let kind = self.kind()?;
                self.expect(Tok::Eq)?;
                let body = self.ty()?;
                let span = Span::new(start, self.prev_end());
                Ok(vec![Item::TypeDef {
                    name,
                    kind,
                    body,
                    span,
                }])
            }
            Tok::KwTerm => {
                self.bump();
                let name = self.ident("a term name")?;
                self.expect(Tok::Colon)?;
                let ty = self.ty()?;
                self.expect(Tok::Eq)?;
                let body = self.term()?;
                let span = Span::new(start, self.prev_end());
                Ok(vec![Item::TermDef {
                    name,
                    ty,
                    body,
                    span,
                }])
            }
            Tok::KwEffect => {
                self.bump();
                let name = self.ident("an effect name")?;
                match self.peek() {
                    Tok::Eq => {
                        self.bump();
                        if *self.peek() == Tok::KwHfunctor {
                            self.bump();
                            let (carrier, hfmap, hmap) = self.hfunctor_body()?;
                            let span = Span::new(start, self.prev_end());
                            let decl = EffectDecl {
                                name: name.clone(),
                                carrier,
                                hfmap,
                                hmap,
                            };
                            self.effects.insert(name, decl.clone());
                            Ok(vec![Item::EffectDef { decl, span }])
                        } else {
                            // Coproduct alias: effect C = A ++ B.
                            let a = self.ident("an effect name")?;
                            self.expect(Tok::PlusPlus)?;
                            let b_at = self.span();
                            let b = self.ident("an effect name")?;
                            let span = Span::new(start, self.prev_end());
                            let left = self.effects.get(&a).cloned().ok_or(ParseError {
                                span,
                                msg: format!("unknown effect `{a}` in coproduct"),
                            })?;
                            let right = self.effects.get(&b).cloned().ok_or(ParseError {
                                span: b_at,
                                msg: format!("unknown effect `{b}` in coproduct"),
                            })?;
                            let decl = stdlib::coprod_hf(&name, &left, &right);
                            self.effects.insert(name, decl.clone());
                            Ok(vec![Item::EffectDef { decl, span }])
                        }
                    }
                    Tok::LBrace => {
                        self.bump();
                        let mut rows = Vec::new();
                        loop {
                            if *self.peek() == Tok::RBrace {
                                break;
                            }
                            let op_name = self.ident("an operation name")?;
                            self.expect(Tok::Colon)?;
                            let param = self.ty()?;
                            self.expect(Tok::RowArrow)?;
                            let result = self.ty()?;
                            rows.push((op_name, param, result));
                            if *self.peek() == Tok::Semi {
                                self.bump();
                            } else {
                                break;
                            }
                        }
                        self.expect(Tok::RBrace)?;
                        if rows.is_empty() {
                            return self.err("an operation row needs at least one operation");
                        }
                        let span = Span::new(start, self.prev_end());
                        let (decl, mut items) = stdlib::elaborate_row(&name, &rows, span);
                        self.effects.insert(name, decl.clone());
                        let mut out = vec![Item::EffectDef { decl, span }];
                        out.append(&mut items);
                        Ok(out)
                    }
                    other => {
                        let d = other.describe();
                        self.err(format!("expected `=` or `{{` after effect name, found {d}"))
                    }
                }
            }
            Tok::KwHandler => {
                self.bump();
                let name = self.ident("a handler name")?;
                self.expect(Tok::KwFor)?;
                let effect = self.ident("an effect name")?;
                self.expect(Tok::LBrace)?;
                self.field_name("M")?;
                self.expect(Tok::Eq)?;
                let monad = self.ty()?;
                self.expect(Tok::Semi)?;
                self.field_name("ret")?;
                self.expect(Tok::Eq)?;
                let ret = self.term()?;
                self.expect(Tok::Semi)?;
                self.field_name("bind")?;
                self.expect(Tok::Eq)?;
                let bind = self.term()?;
                self.expect(Tok::Semi)?;
                self.field_name("malg")?;
                self.expect(Tok::Eq)?;
                let malg = self.term()?;
                if *self.peek() == Tok::Semi {
                    self.bump();
                }
                self.expect(Tok::RBrace)?;
                let via = if *self.peek() == Tok::KwVia {
                    self.bump();
                    Some(self.ty_atom()?)
                } else {
                    None
                };
                let span = Span::new(start, self.prev_end());
                let handler = HandlerExpr {
                    effect,
                    monad,
                    ret,
                    bind,
                    malg,
                    via,
                };
                Ok(vec![Item::HandlerDef {
                    name,
                    handler,
                    span,
                }])
            }
            Tok::KwMain => {
                self.bump();
                self.expect(Tok::LBracket)?;
                let mode = match self.peek() {
                    Tok::KwTotal => {
                        self.bump();
                        Mode::Total
                    }
                    Tok::KwPartial => {
                        self.bump();
                        Mode::Partial
                    }
                    other => {
                        let d = other.describe();
                        return self.err(format!("expected `total` or `partial`, found {d}"));
                    }
                };
                self.expect(Tok::RBracket)?;
                let effect = self.ident("an effect name")?;
                self.expect(Tok::Colon)?;
                let ty = self.ty()?;
                self.expect(Tok::Eq)?;
                let mut comp = self.comp()?;
                comp.retag_mode(mode);
                let span = Span::new(start, self.prev_end());
                Ok(vec![Item::Main {
                    mode,
                    effect,
                    ty,
                    comp,
                    span,
                }])
            }
            other => {
                let d = other.describe();
                self.err(format!(
                    "expected a declaration (`type`, `term`, `effect`, `handler`, or `main`), \
                     found {d}"
                ))
            }
        }
    }

    fn program(&mut self) -> Result<Program, ParseError> {
        let mut items = Vec::new();
        while *self.peek() != Tok::Eof {
            items.append(&mut self.item()?);
        }
        Ok(Program { items })
    }
}

/// Parse a whole program.
pub fn parse_program(src: &str) -> Result<Program, ParseError> {
    let mut p = Parser::new(src)?;
    p.program()
}

/// Parse a program with some effect signatures already in scope. A file
/// meant to run against the prelude may say `effect E = Exc ++ ...` without
/// re-declaring `Exc`; seeding the parser with the prelude's signatures
/// makes that resolvable.
pub fn parse_program_with(src: &str, effects: &[EffectDecl]) -> Result<Program, ParseError> {
    let mut p = Parser::new(src)?;
    for d in effects {
        p.effects.insert(d.name.clone(), d.clone());
    }
    p.program()
}

/// Parse a single closed type (for tests and tooling).
pub fn parse_type(src: &str) -> Result<TypeExpr, ParseError> {
    let mut p = Parser::new(src)?;
    let t = p.ty()?;
    if *p.peek() != Tok::Eof {
        return p.err(format!("trailing input: {}", p.peek().describe()));
    }
    Ok(t)
}

/// Parse a single closed term.
pub fn parse_term(src: &str) -> Result<Term, ParseError> {
    let mut p = Parser::new(src)?;
    let t = p.term()?;
    if *p.peek() != Tok::Eof {
        return p.err(format!("trailing input: {}", p.peek().describe()));
    }
    Ok(t)
}

/// Parse a single closed computation; the tree is tagged with `mode`.
pub fn parse_comp(src: &str, mode: Mode) -> Result<Comp, ParseError> {
    let mut p = Parser::new(src)?;
    let mut c = p.comp()?;
    if *p.peek() != Tok::Eof {
        return p.err(format!("trailing input: {}", p.peek().describe()));
    }
    c.retag_mode(mode);
    Ok(c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pretty::{print_comp, print_program, print_term, print_type};

    fn roundtrip_ty(src: &str) {
        let t = parse_type(src).unwrap_or_else(|e| panic!("{src}: {e}"));
        let printed = print_type(&t);
        let back = parse_type(&printed).unwrap_or_else(|e| panic!("{printed}: {e}"));
        assert_eq!(back, t, "{src}  ~>  {printed}");
    }

    fn roundtrip_term(src: &str) {
        let t = parse_term(src).unwrap_or_else(|e| panic!("{src}: {e}"));
        let printed = print_term(&t);
        let back = parse_term(&printed).unwrap_or_else(|e| panic!("{printed}: {e}"));
        assert_eq!(back, t, "{src}  ~>  {printed}");
    }

    fn roundtrip_comp(src: &str) {
        let c = parse_comp(src, Mode::Total).unwrap_or_else(|e| panic!("{src}: {e}"));
        let printed = print_comp(&c);
        let back = parse_comp(&printed, Mode::Total).unwrap_or_else(|e| panic!("{printed}: {e}"));
        assert_eq!(back, c, "{src}  ~>  {printed}");
    }

    #[test]
    fn types_parse_with_expected_precedence() {
        use TypeExpr::*;
        assert_eq!(
            parse_type("Bool -> Bool -> Bool").unwrap(),
            TypeExpr::arrow(TBool, TypeExpr::arrow(TBool, TBool))
        );
        // * binds tighter than +, + tighter than ->.
        assert_eq!(
            parse_type("Unit + Bool * Bool -> Empty").unwrap(),
            TypeExpr::arrow(TypeExpr::sum(TUnit, TypeExpr::prod(TBool, TBool)), TEmpty)
        );
        assert_eq!(
            parse_type("forall (a : Ty). a -> a").unwrap(),
            TypeExpr::forall(Kind::Ty, TypeExpr::arrow(TVar(0), TVar(0)))
        );
        // Application binds tightest and is left-associative.
        assert_eq!(
            parse_type("(\\(f : Ty -> Ty). f Bool) (\\(a : Ty). a)").unwrap(),
            TypeExpr::app(
                TypeExpr::lam(Kind::ty_to_ty(), TypeExpr::app(TVar(0), TBool)),
                TypeExpr::lam(Kind::Ty, TVar(0))
            )
        );
        assert_eq!(
            parse_type("Th Exc Bool -> PTh VoidH Unit").unwrap(),
            TypeExpr::arrow(TypeExpr::th("Exc", TBool), TypeExpr::pth("VoidH", TUnit))
        );
    }

    #[test]
    fn type_roundtrips() {
        for src in [
            "Bool",
            "Unit + Bool * Bool -> Empty",
            "forall (a : Ty). a -> a",
            "forall (f : Ty -> Ty). forall (a : Ty). (a -> a) -> f a -> f Bool",
            "\\(a : Ty). Unit + a",
            "Th Exc (Bool * Bool)",
            "PTh VoidH (forall (a : Ty). a)",
            "(Bool -> Bool) -> Bool",
            "Maybe Bool + Maybe (Maybe Unit)",
        ] {
            roundtrip_ty(src);
        }
    }

    #[test]
    fn terms_resolve_binders_and_globals() {
        assert_eq!(
            parse_term(r"\(x : Bool). x").unwrap(),
            Term::lam(TypeExpr::TBool, Term::Var(0))
        );
        assert_eq!(
            parse_term(r"\(x : Bool). y").unwrap(),
            Term::lam(TypeExpr::TBool, Term::Global("y".into()))
        );
        // Shadowing resolves innermost-first.
        assert_eq!(
            parse_term(r"\(x : Bool). \(x : Unit). x").unwrap(),
            Term::lam(TypeExpr::TBool, Term::lam(TypeExpr::TUnit, Term::Var(0)))
        );
        // Type application mixes into the spine.
        assert_eq!(
            parse_term(r"(/\(a : Ty). \(x : a). x) [Bool] tt").unwrap(),
            Term::app(
                Term::tyapp(
                    Term::tylam(Kind::Ty, Term::lam(TypeExpr::TVar(0), Term::Var(0))),
                    TypeExpr::TBool
                ),
                Term::Tt
            )
        );
    }

    #[test]
    fn term_roundtrips() {
        for src in [
            r"\(x : Bool). ite x ff tt",
            r"/\(a : Ty). \(x : a). x",
            r"(tt, (ff, ()))",
            r"fst (snd (tt, (ff, tt)))",
            r"inl[Bool + Unit] tt",
            r"case inr[Bool + Unit] () { inl x -> x ; inr y -> ff }",
            r"\(e : Empty). absurd[Bool] e",
            r"thunk val tt",
            r"pthunk let x = val tt in val x",
            r"thunk op tt (x. val x)",
            r"handle h val tt",
            r"\(f : Bool -> Bool). f (f tt)",
        ] {
            roundtrip_term(src);
        }
    }

    #[test]
    fn comp_roundtrips() {
        for src in [
            "val tt",
            "let x = val tt in val x",
            "let x : Bool = val tt in val (ite x ff tt)",
            "let x = (let y = val ff in val y) in val x",
            "op (inl[Unit + Bool] ()) (x. val x)",
            "op tt (x : Bool. val x)",
            "force (thunk val tt)",
            "fix (self. force self)",
            "let x = op tt (y. val y) in val x",
            "force f x",
        ] {
            roundtrip_comp(src);
        }
    }

    #[test]
    fn bare_op_gets_identity_continuation() {
        let c = parse_comp("op tt", Mode::Total).unwrap();
        assert_eq!(
            c,
            Comp::op(
                Mode::Total,
                Term::Tt,
                None,
                Comp::val(Mode::Total, Term::Var(0))
            )
        );
    }

    #[test]
    fn op_operand_stops_at_continuation_group() {
        // The `(y ...)` group is an argument; `(x. ...)` is the continuation.
        let c = parse_comp("op f (y) tt (x. val x)", Mode::Total).unwrap();
        match c.node {
            CompNode::Op(operand, None, _) => {
                assert_eq!(
                    *operand,
                    Term::apps(
                        Term::Global("f".into()),
                        [Term::Global("y".into()), Term::Tt]
                    )
                );
            }
            other => panic!("unexpected parse: {other:?}"),
        }
    }

    #[test]
    fn thunks_set_modes() {
        let t = parse_term("pthunk fix (s. force s)").unwrap();
        match t {
            Term::PThunk(None, c) => {
                assert_eq!(c.mode, Mode::Partial);
                match c.node {
                    CompNode::Fix(b) => assert_eq!(b.mode, Mode::Partial),
                    other => panic!("expected fix, got {other:?}"),
                }
            }
            other => panic!("expected pthunk, got {other:?}"),
        }
        // A total thunk nested inside a partial computation is still total.
        let t2 = parse_term("pthunk val (thunk val tt)").unwrap();
        match t2 {
            Term::PThunk(None, c) => match c.node {
                CompNode::Val(Term::Thunk(None, inner)) => assert_eq!(inner.mode, Mode::Total),
                other => panic!("unexpected: {other:?}"),
            },
            other => panic!("expected pthunk, got {other:?}"),
        }
    }

    #[test]
    fn declarations_parse() {
        let src = r#"
-- a tiny program exercising every declaration form
type Maybe : Ty -> Ty = \(a : Ty). Unit + a

effect Void2 = hfunctor {
  carrier = \(f : Ty -> Ty). \(x : Ty). Empty;
  hfmap = /\(f : Ty -> Ty). \(fm : Unit). /\(a : Ty). /\(b : Ty). \(g : a -> b). \(x : Empty). x;
  hmap = /\(f : Ty -> Ty). \(fm : Unit). \(x : Empty). x
}

handler hId for Void2 {
  M = \(a : Ty). a;
  ret = /\(a : Ty). \(x : a). x;
  bind = /\(a : Ty). /\(b : Ty). \(m : a). \(k : a -> b). k m;
  malg = /\(a : Ty). \(e : Empty). absurd[a] e
}

term ignore : Bool = handle hId val tt

main[total] Void2 : Bool = val (handle hId val ff)
"#;
        let prog = parse_program(src).unwrap_or_else(|e| panic!("{e}"));
        assert_eq!(prog.items.len(), 5);
        assert!(prog.effect("Void2").is_some());
        assert!(prog.handler("hId").is_some());
        assert!(prog.main().is_some());

        // Round-trip the whole program through the printer.
        let printed = print_program(&prog);
        let back = parse_program(&printed).unwrap_or_else(|e| panic!("{printed}\n{e}"));
        assert_eq!(back, prog, "through:\n{printed}");
    }

    #[test]
    fn item_spans_are_byte_ranges() {
        let src = "type Id : Ty = Bool\nterm x : Bool = tt";
        let prog = parse_program(src).unwrap();
        let s0 = prog.items[0].span();
        let s1 = prog.items[1].span();
        assert_eq!(&src[s0.start..s0.end], "type Id : Ty = Bool");
        assert_eq!(&src[s1.start..s1.end], "term x : Bool = tt");
    }

    #[test]
    fn errors_carry_useful_spans() {
        let err = parse_program("type X : Ty = ").unwrap_err();
        assert!(err.span.start >= 14, "span {:?}", err.span);
        assert!(err.msg.contains("expected a type"), "{}", err.msg);

        let err2 = parse_program("term bad : Bool = (tt").unwrap_err();
        assert!(err2.msg.contains("expected"), "{}", err2.msg);

        let err3 = parse_program("effect C = A ++ B").unwrap_err();
        assert!(err3.msg.contains("unknown effect"), "{}", err3.msg);

        // Rendered form: file:start-end: error: message.
        let rendered = err.render("x.fha");
        assert!(rendered.starts_with("x.fha:"), "{rendered}");
        assert!(rendered.contains(": error: "), "{rendered}");
    }

    #[test]
    fn keywords_cannot_be_identifiers() {
        assert!(parse_term(r"\(val : Bool). val").is_err());
        assert!(parse_program("term in : Bool = tt").is_err());
    }
}
