//! Elaboration of parsed `.spv` files into a verification [`Plan`]: interned
//! signature, rewrite theory (checked convergent), named process definitions,
//! the main (bi-)process, and the query list.
//!
//! Scoping rules: rewrite-rule identifiers are universally quantified
//! variables unless they name a 0-ary function; process identifiers resolve
//! innermost-first against pattern/`new`/global bindings. Inside a named
//! definition, identifiers that resolve to nothing become parameters of the
//! definition, recorded in order of first use — query builders later
//! instantiate them. Referencing a named definition inlines an alpha-fresh
//! copy with its parameters resolved at the use site.

use super::ast::*;
use crate::process::{Pattern, Process};
use crate::rewrite::{classify_rule_head, ConvergenceError, RewriteRule, Theory};
use crate::sig::{EventId, NameId, NameScope, Sort, Symtab, VarId, Visibility};
use crate::subst::Subst;
use crate::term::Term;
use crate::validate::{validate_well_formed, Diagnostic};
use std::collections::{BTreeSet, HashMap};
use thiserror::Error;

/// Everything a query engine needs from one `.spv` file.
#[derive(Debug, Clone)]
pub struct Plan {
    pub tab: Symtab,
    pub theory: Theory,
    pub named: Vec<NamedDef>,
    pub main: Option<Process>,
    pub queries: Vec<Query>,
}

impl Plan {
    /// Look up a named process definition.
    pub fn find_named(&self, name: &str) -> Option<&NamedDef> {
        self.named.iter().find(|d| d.name == name)
    }
}

/// A named process definition with its inferred parameters (identifiers that
/// were free in the body), in order of first use.
#[derive(Debug, Clone)]
pub struct NamedDef {
    pub name: String,
    pub params: Vec<(String, VarId)>,
    pub body: Process,
}

/// An elaborated query.
#[derive(Debug, Clone)]
pub enum Query {
    /// Can the attacker derive this ground term?
    Secrecy(Term),
    /// Is every end event preceded by a matching start event?
    Correspondence(Correspondence),
    /// Is the main bi-process uniform (diff-equivalent) at bounds?
    Equivalence,
}

/// A correspondence assertion `end(x̃) ==> start(ỹ)`; argument variables
/// shared between the two atoms must carry equal values.
#[derive(Debug, Clone)]
pub struct Correspondence {
    pub injective: bool,
    pub end_event: EventId,
    pub end_args: Vec<VarId>,
    pub start_event: EventId,
    pub start_args: Vec<VarId>,
}

/// Elaboration failure.
#[derive(Debug, Clone, Error)]
pub enum ElabError {
    #[error("{span}: `{name}` is already declared")]
    Duplicate { name: String, span: Span },
    #[error("{span}: undeclared symbol `{name}`")]
    UndeclaredSymbol { name: String, span: Span },
    #[error("{span}: `{name}` is not bound here")]
    UndeclaredIdent { name: String, span: Span },
    #[error("{span}: `{name}` expects {expected} argument(s), got {got}")]
    ArityMismatch {
        name: String,
        expected: usize,
        got: usize,
        span: Span,
    },
    #[error("{span}: unknown sort `{name}` (only `channel` may be ascribed)")]
    UnknownSort { name: String, span: Span },
    #[error("{span}: rule left-hand side must be a function application")]
    BadRuleShape { span: Span },
    #[error("{span}: diff-terms cannot appear in rewrite rules")]
    ChoiceInRule { span: Span },
    #[error("{span}: undeclared event `{name}`")]
    UndeclaredEvent { name: String, span: Span },
    #[error("{span}: undefined process `{name}`")]
    UndefinedProcess { name: String, span: Span },
    #[error("{span}: a main process is already defined")]
    DuplicateMain { span: Span },
    #[error("{span}: correspondence argument lists must have equal length")]
    CorrespondenceArity { span: Span },
    #[error("{span}: queries need a `process` declaration")]
    NoMain { span: Span },
    #[error("rewrite system is not convergent: {0}")]
    NotConvergent(#[from] ConvergenceError),
    #[error("main process is ill-formed: {}", format_diags(.0))]
    IllFormed(Vec<Diagnostic>),
}

fn format_diags(ds: &[Diagnostic]) -> String {
    ds.iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}

#[derive(Debug, Clone, Copy)]
enum Binding {
    Var(VarId),
    Name(NameId),
}

type Scope = HashMap<String, Binding>;

/// Lexical environment: innermost scope last.
#[derive(Clone)]
struct Env {
    scopes: Vec<Scope>,
}

impl Env {
    fn root(globals: Scope) -> Env {
        Env {
            scopes: vec![globals],
        }
    }

    fn push(&mut self) {
        self.scopes.push(Scope::new());
    }

    fn pop(&mut self) {
        self.scopes.pop();
    }

    fn bind(&mut self, ident: &str, b: Binding) {
        self.scopes
            .last_mut()
            .expect("environment always has a scope")
            .insert(ident.to_string(), b);
    }

    fn lookup(&self, ident: &str) -> Option<Binding> {
        self.scopes.iter().rev().find_map(|s| s.get(ident).copied())
    }
}

/// Elaborate a parsed file into a [`Plan`].
pub fn elaborate(file: &SpecFile) -> Result<Plan, ElabError> {
    let mut e = Elab {
        tab: Symtab::new(),
        theory: Theory::new(),
        named: Vec::new(),
        main: None,
        queries: Vec::new(),
        globals: Scope::new(),
        tuple_arities: BTreeSet::new(),
        params: None,
    };
    let mut first_query_span = None;

    for d in &file.decls {
        match d {
            SDecl::Fun {
                name,
                arity,
                private,
                span,
            } => {
                let vis = if *private {
                    Visibility::Private
                } else {
                    Visibility::Public
                };
                e.tab
                    .declare_symbol(name, *arity, vis)
                    .map_err(|_| ElabError::Duplicate {
                        name: name.clone(),
                        span: *span,
                    })?;
            }
            SDecl::Free {
                names,
                private,
                span,
            } => {
                let scope = if *private {
                    NameScope::Restricted
                } else {
                    NameScope::Public
                };
                for n in names {
                    let id = e.tab.declare_name(n, Sort::Base, scope).map_err(|_| {
                        ElabError::Duplicate {
                            name: n.clone(),
                            span: *span,
                        }
                    })?;
                    e.globals.insert(n.clone(), Binding::Name(id));
                }
            }
            SDecl::Channel { names, span } => {
                for n in names {
                    let id = e
                        .tab
                        .declare_name(n, Sort::Channel, NameScope::Public)
                        .map_err(|_| ElabError::Duplicate {
                            name: n.clone(),
                            span: *span,
                        })?;
                    e.globals.insert(n.clone(), Binding::Name(id));
                }
            }
            SDecl::Event { name, arity, span } => {
                e.tab
                    .declare_event(name, *arity)
                    .map_err(|_| ElabError::Duplicate {
                        name: name.clone(),
                        span: *span,
                    })?;
            }
            SDecl::Reduc { lhs, rhs, .. } => e.rule(lhs, rhs, false)?,
            SDecl::Equation { lhs, rhs, .. } => e.rule(lhs, rhs, true)?,
            SDecl::LetProc { name, body, span } => {
                if e.named.iter().any(|d| d.name == *name) {
                    return Err(ElabError::Duplicate {
                        name: name.clone(),
                        span: *span,
                    });
                }
                e.params = Some(Vec::new());
                let mut env = Env::root(e.globals.clone());
                let body = e.proc(body, &mut env)?;
                let params = e.params.take().expect("params set above");
                e.named.push(NamedDef {
                    name: name.clone(),
                    params,
                    body,
                });
            }
            SDecl::Main { body, span } => {
                if e.main.is_some() {
                    return Err(ElabError::DuplicateMain { span: *span });
                }
                let mut env = Env::root(e.globals.clone());
                let body = e.proc(body, &mut env)?;
                e.main = Some(body);
            }
            SDecl::Query { query, span } => {
                first_query_span.get_or_insert(*span);
                e.query(query, *span)?;
            }
        }
    }

    // Small tuple arities are always available (patterns in library-built
    // processes rely on them); larger ones are added as seen.
    let mut arities: BTreeSet<usize> = (2..=10).collect();
    arities.extend(e.tuple_arities.iter().copied());
    e.theory.add_tuple_projections(&mut e.tab, arities);
    e.theory.check_convergence()?;

    if let Some(main) = &e.main {
        let diags = validate_well_formed(main, &e.tab);
        if !diags.is_empty() {
            return Err(ElabError::IllFormed(diags));
        }
    } else if let Some(span) = first_query_span {
        return Err(ElabError::NoMain { span });
    }

    Ok(Plan {
        tab: e.tab,
        theory: e.theory,
        named: e.named,
        main: e.main,
        queries: e.queries,
    })
}

struct Elab {
    tab: Symtab,
    theory: Theory,
    named: Vec<NamedDef>,
    main: Option<Process>,
    queries: Vec<Query>,
    globals: Scope,
    tuple_arities: BTreeSet<usize>,
    /// `Some` while elaborating a named definition: free identifiers become
    /// parameters instead of errors.
    params: Option<Vec<(String, VarId)>>,
}

impl Elab {
    // ---- terms in process/query position ----

    fn term(&mut self, t: &STerm, env: &Env) -> Result<Term, ElabError> {
        match t {
            STerm::Ident(x, span) => self.ident_term(x, *span, env),
            STerm::Call(f, args, span) => {
                let sym = self
                    .tab
                    .lookup_symbol(f)
                    .ok_or_else(|| ElabError::UndeclaredSymbol {
                        name: f.clone(),
                        span: *span,
                    })?;
                let expected = self.tab.symbol(sym).arity;
                if expected != args.len() {
                    return Err(ElabError::ArityMismatch {
                        name: f.clone(),
                        expected,
                        got: args.len(),
                        span: *span,
                    });
                }
                let args = args
                    .iter()
                    .map(|a| self.term(a, env))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Term::App(sym, args))
            }
            STerm::Tuple(items, _) => {
                let items = items
                    .iter()
                    .map(|a| self.term(a, env))
                    .collect::<Result<Vec<_>, _>>()?;
                self.tuple_arities.insert(items.len());
                Ok(Term::tuple(&mut self.tab, items))
            }
            STerm::Choice(l, r, _) => Ok(Term::choice(self.term(l, env)?, self.term(r, env)?)),
        }
    }

    fn ident_term(&mut self, x: &str, span: Span, env: &Env) -> Result<Term, ElabError> {
        if let Some(b) = env.lookup(x) {
            return Ok(match b {
                Binding::Var(v) => Term::Var(v),
                Binding::Name(n) => Term::Name(n),
            });
        }
        if let Some(sym) = self.tab.lookup_symbol(x) {
            let expected = self.tab.symbol(sym).arity;
            if expected == 0 {
                return Ok(Term::constant(sym));
            }
            return Err(ElabError::ArityMismatch {
                name: x.to_string(),
                expected,
                got: 0,
                span,
            });
        }
        if let Some(params) = &mut self.params {
            if let Some((_, v)) = params.iter().find(|(n, _)| n == x) {
                return Ok(Term::Var(*v));
            }
            let v = self.tab.fresh_var(x);
            params.push((x.to_string(), v));
            return Ok(Term::Var(v));
        }
        Err(ElabError::UndeclaredIdent {
            name: x.to_string(),
            span,
        })
    }

    // ---- rewrite rules ----

    fn rule(&mut self, lhs: &STerm, rhs: &STerm, from_equation: bool) -> Result<(), ElabError> {
        let mut vars: HashMap<String, VarId> = HashMap::new();
        let lhs = match lhs {
            STerm::Call(f, args, fspan) => {
                let sym = match self.tab.lookup_symbol(f) {
                    Some(s) => {
                        let expected = self.tab.symbol(s).arity;
                        if expected != args.len() {
                            return Err(ElabError::ArityMismatch {
                                name: f.clone(),
                                expected,
                                got: args.len(),
                                span: *fspan,
                            });
                        }
                        s
                    }
                    // `reduc dec(enc(m, pk(sk)), sk) = m.` declares the
                    // destructor `dec` itself; equations relate existing
                    // constructors only.
                    None if !from_equation => self
                        .tab
                        .declare_symbol(f, args.len(), Visibility::Public)
                        .expect("lookup_symbol returned None"),
                    None => {
                        return Err(ElabError::UndeclaredSymbol {
                            name: f.clone(),
                            span: *fspan,
                        })
                    }
                };
                let args = args
                    .iter()
                    .map(|a| self.rule_term(a, &mut vars))
                    .collect::<Result<Vec<_>, _>>()?;
                Term::App(sym, args)
            }
            other => {
                return Err(ElabError::BadRuleShape { span: other.span() });
            }
        };
        let rhs = self.rule_term(rhs, &mut vars)?;
        let rule = RewriteRule {
            lhs,
            rhs,
            from_equation,
        };
        if !from_equation {
            classify_rule_head(&mut self.tab, &rule);
        }
        self.theory.push(rule);
        Ok(())
    }

    /// Terms inside rules: identifiers are 0-ary functions if declared,
    /// otherwise rule variables scoped to the declaration.
    fn rule_term(
        &mut self,
        t: &STerm,
        vars: &mut HashMap<String, VarId>,
    ) -> Result<Term, ElabError> {
        match t {
            STerm::Ident(x, _) => {
                if let Some(sym) = self.tab.lookup_symbol(x) {
                    if self.tab.symbol(sym).arity == 0 {
                        return Ok(Term::constant(sym));
                    }
                }
                if let Some(v) = vars.get(x) {
                    return Ok(Term::Var(*v));
                }
                let v = self.tab.fresh_var(x);
                vars.insert(x.clone(), v);
                Ok(Term::Var(v))
            }
            STerm::Call(f, args, span) => {
                let sym = self
                    .tab
                    .lookup_symbol(f)
                    .ok_or_else(|| ElabError::UndeclaredSymbol {
                        name: f.clone(),
                        span: *span,
                    })?;
                let expected = self.tab.symbol(sym).arity;
                if expected != args.len() {
                    return Err(ElabError::ArityMismatch {
                        name: f.clone(),
                        expected,
                        got: args.len(),
                        span: *span,
                    });
                }
                let args = args
                    .iter()
                    .map(|a| self.rule_term(a, vars))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Term::App(sym, args))
            }
            STerm::Tuple(items, _) => {
                let items = items
                    .iter()
                    .map(|a| self.rule_term(a, vars))
                    .collect::<Result<Vec<_>, _>>()?;
                self.tuple_arities.insert(items.len());
                Ok(Term::tuple(&mut self.tab, items))
            }
            STerm::Choice(_, _, span) => Err(ElabError::ChoiceInRule { span: *span }),
        }
    }

    // ---- patterns ----

    /// Elaborate a pattern, binding its variables in `env`. Equality tests
    /// resolve against `eq_env`, the environment outside the pattern, so a
    /// pattern cannot test against its own bindings.
    fn pattern(
        &mut self,
        p: &SPattern,
        env: &mut Env,
        eq_env: &Env,
    ) -> Result<Pattern, ElabError> {
        match p {
            SPattern::Var(x, sort, span) => {
                let v = self.tab.fresh_var(x);
                match sort.as_deref() {
                    None => {}
                    Some("channel") => self.tab.set_var_sort(v, Sort::Channel),
                    Some(other) => {
                        return Err(ElabError::UnknownSort {
                            name: other.to_string(),
                            span: *span,
                        })
                    }
                }
                env.bind(x, Binding::Var(v));
                Ok(Pattern::Var(v))
            }
            SPattern::Eq(t, _) => Ok(Pattern::Eq(self.term(t, eq_env)?)),
            SPattern::Tuple(items, _) => {
                self.tab.tuple(items.len());
                self.tuple_arities.insert(items.len());
                let items = items
                    .iter()
                    .map(|q| self.pattern(q, env, eq_env))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Pattern::Tuple(items))
            }
        }
    }

    // ---- processes ----

    fn proc(&mut self, p: &SProc, env: &mut Env) -> Result<Process, ElabError> {
        match p {
            SProc::Nil(_) => Ok(Process::Nil),
            SProc::Par(l, r) => {
                env.push();
                let l = self.proc(l, env)?;
                env.pop();
                env.push();
                let r = self.proc(r, env)?;
                env.pop();
                Ok(Process::par(l, r))
            }
            SProc::Repl(body, _) => Ok(Process::repl(self.proc(body, env)?)),
            SProc::New(n, sort, body, span) => {
                let sort = match sort.as_deref() {
                    None => Sort::Base,
                    Some("channel") => Sort::Channel,
                    Some(other) => {
                        return Err(ElabError::UnknownSort {
                            name: other.to_string(),
                            span: *span,
                        })
                    }
                };
                let id = self.tab.fresh_name(n, sort);
                env.push();
                env.bind(n, Binding::Name(id));
                let body = self.proc(body, env)?;
                env.pop();
                Ok(Process::new_name(id, body))
            }
            SProc::In(ch, pat, body, _) => {
                let ch = self.term(ch, env)?;
                let outer = env.clone();
                env.push();
                let pat = self.pattern(pat, env, &outer)?;
                let body = self.proc(body, env)?;
                env.pop();
                Ok(Process::input(ch, pat, body))
            }
            SProc::Out(ch, msg, body, _) => Ok(Process::output(
                self.term(ch, env)?,
                self.term(msg, env)?,
                self.proc(body, env)?,
            )),
            SProc::Let(pat, rhs, body, els, _) => {
                let rhs = self.term(rhs, env)?;
                let els = match els {
                    Some(e) => {
                        env.push();
                        let e = self.proc(e, env)?;
                        env.pop();
                        e
                    }
                    None => Process::Nil,
                };
                let outer = env.clone();
                env.push();
                let pat = self.pattern(pat, env, &outer)?;
                let body = self.proc(body, env)?;
                env.pop();
                Ok(Process::let_in(pat, rhs, body, els))
            }
            SProc::If(lhs, rhs, then, els, _) => {
                let lhs = self.term(lhs, env)?;
                let rhs = self.term(rhs, env)?;
                env.push();
                let then = self.proc(then, env)?;
                env.pop();
                let els = match els {
                    Some(e) => {
                        env.push();
                        let e = self.proc(e, env)?;
                        env.pop();
                        e
                    }
                    None => Process::Nil,
                };
                Ok(Process::if_eq(lhs, rhs, then, els))
            }
            SProc::Event(name, args, body, span) => {
                let ev = self
                    .tab
                    .lookup_event(name)
                    .ok_or_else(|| ElabError::UndeclaredEvent {
                        name: name.clone(),
                        span: *span,
                    })?;
                let expected = self.tab.event(ev).arity;
                if expected != args.len() {
                    return Err(ElabError::ArityMismatch {
                        name: name.clone(),
                        expected,
                        got: args.len(),
                        span: *span,
                    });
                }
                let args = args
                    .iter()
                    .map(|a| self.term(a, env))
                    .collect::<Result<Vec<_>, _>>()?;
                Ok(Process::event(ev, args, self.proc(body, env)?))
            }
            SProc::Call(name, span) => {
                let def = self
                    .named
                    .iter()
                    .find(|d| d.name == *name)
                    .cloned()
                    .ok_or_else(|| ElabError::UndefinedProcess {
                        name: name.clone(),
                        span: *span,
                    })?;
                let body = def.body.refresh(&mut self.tab);
                let mut sub = Subst::new();
                for (ident, v) in &def.params {
                    let t = self.ident_term(ident, *span, env)?;
                    sub.bind(*v, t);
                }
                Ok(body.subst(&sub))
            }
        }
    }

    // ---- queries ----

    fn query(&mut self, q: &SQuery, span: Span) -> Result<(), ElabError> {
        match q {
            SQuery::Secrecy(t) => {
                let env = Env::root(self.globals.clone());
                let t = self.term(t, &env)?;
                self.queries.push(Query::Secrecy(t));
            }
            SQuery::Correspondence {
                injective,
                end_name,
                end_args,
                start_name,
                start_args,
            } => {
                let end_event = self.lookup_query_event(end_name, end_args.len(), span)?;
                let start_event = self.lookup_query_event(start_name, start_args.len(), span)?;
                if end_args.len() != start_args.len() {
                    return Err(ElabError::CorrespondenceArity { span });
                }
                let mut scope: HashMap<String, VarId> = HashMap::new();
                let mut resolve = |tab: &mut Symtab, xs: &[String]| -> Vec<VarId> {
                    xs.iter()
                        .map(|x| *scope.entry(x.clone()).or_insert_with(|| tab.fresh_var(x)))
                        .collect()
                };
                let end_args = resolve(&mut self.tab, end_args);
                let start_args = resolve(&mut self.tab, start_args);
                self.queries.push(Query::Correspondence(Correspondence {
                    injective: *injective,
                    end_event,
                    end_args,
                    start_event,
                    start_args,
                }));
            }
            SQuery::Equivalence => self.queries.push(Query::Equivalence),
        }
        Ok(())
    }

    fn lookup_query_event(
        &mut self,
        name: &str,
        args: usize,
        span: Span,
    ) -> Result<EventId, ElabError> {
        let ev = self
            .tab
            .lookup_event(name)
            .ok_or_else(|| ElabError::UndeclaredEvent {
                name: name.to_string(),
                span,
            })?;
        let expected = self.tab.event(ev).arity;
        if expected != args {
            return Err(ElabError::ArityMismatch {
                name: name.to_string(),
                expected,
                got: args,
                span,
            });
        }
        Ok(ev)
    }
}

/// Parse and elaborate in one step.
pub fn load(src: &str) -> Result<Plan, LoadError> {
    let file = super::parse::parse(src)?;
    Ok(elaborate(&file)?)
}

/// Failure of [`load`]: parsing or elaboration.
#[derive(Debug, Clone, Error)]
pub enum LoadError {
    #[error(transparent)]
    Parse(#[from] super::parse::ParseError),
    #[error(transparent)]
    Elab(#[from] ElabError),
}
