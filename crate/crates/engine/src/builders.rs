//! Builders for the privacy equivalence queries: prescription privacy,
//! receipt-freeness (single- and multi-session), collaborating-role
//! independency, anonymity, and untraceability.
//!
//! A protocol is described once as a [`ProtocolShape`]: restricted channels,
//! a key-distribution prefix, the replicated roles, and an open decomposition
//! of the doctor and patient roles into an identity placeholder, per-agent
//! initialization steps, and a session body. Each builder instantiates the
//! decomposition for concrete agents and places `choice` terms exactly where
//! the two sides of the equivalence differ, so the result is an ordinary
//! bi-process whose projections are the two scenarios being compared.

use spv_calculus::{
    hide_outputs, reveal_on_channel, validate_well_formed, NameId, Pattern, Process, Side, Sort,
    Symtab, Term, TransformError, VarId,
};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BuildError {
    #[error("the two {0} must be distinct")]
    IndistinctAgents(&'static str),
    #[error("no role labelled '{0}' in the protocol shape")]
    UnknownRole(String),
    #[error("the collaborating role may not be the doctor role")]
    DoctorRoleForbidden,
    #[error("the processes cannot be merged into one bi-process: {0}")]
    ShapeMismatch(String),
    #[error("a projection of the built query is not well-formed: {0}")]
    OpenWitness(String),
    #[error(transparent)]
    Transform(#[from] TransformError),
}

/// How one initialization binding of a role instance gets its value.
#[derive(Debug, Clone)]
pub enum StepSource {
    /// Generated under a restriction (a pseudonym, an account number).
    Fresh,
    /// Received on a channel (a patient learning its insurer).
    Read { channel: Term },
    /// Computed from earlier bindings (a key derived from an identity).
    Derive { term: Term },
}

/// One per-agent initialization step, assigning a value to the placeholder
/// name `binds`.
#[derive(Debug, Clone)]
pub struct InitStep {
    pub binds: NameId,
    pub source: StepSource,
}

/// The open decomposition of a role: an identity placeholder, the
/// initialization performed once per agent, and the session body, which is
/// free in the identity and in every step placeholder.
#[derive(Debug, Clone)]
pub struct RolePieces {
    pub label: String,
    pub id: NameId,
    pub init_steps: Vec<InitStep>,
    pub session: Process,
}

/// One replicated role of the composition, without the leading bang.
#[derive(Debug, Clone)]
pub struct Role {
    pub label: String,
    pub body: Process,
}

/// A protocol composition together with the role decompositions that the
/// privacy queries instantiate.
#[derive(Debug, Clone)]
pub struct ProtocolShape {
    /// Names restricted around the whole composition (untappable channels).
    pub restricted: Vec<NameId>,
    /// Sequential setup prefix run before the roles; `Nil` when absent.
    pub init: Process,
    /// The honest replicated roles.
    pub roles: Vec<Role>,
    pub doctor: RolePieces,
    pub patient: RolePieces,
    /// One doctor session prescribing the placeholder `presc`.
    pub doctor_main: Process,
    pub presc: NameId,
    /// Public channel on which coerced or collaborating participants forward
    /// their secrets.
    pub coercion_channel: NameId,
}

/// Zips two plain processes with identical control structure into one
/// bi-process: binders are unified toward the left side, and wherever the
/// sides carry different terms a `choice` records the difference.
pub fn merge_biprocess(
    left: &Process,
    right: &Process,
    tab: &Symtab,
) -> Result<Process, BuildError> {
    if left.has_choice() || right.has_choice() {
        return Err(BuildError::ShapeMismatch(
            "both inputs must be plain, choice-free processes".into(),
        ));
    }
    let mut names = BTreeMap::new();
    let mut vars = BTreeMap::new();
    merge(left, right, tab, &mut names, &mut vars)
}

fn merge(
    l: &Process,
    r: &Process,
    tab: &Symtab,
    names: &mut BTreeMap<NameId, NameId>,
    vars: &mut BTreeMap<VarId, VarId>,
) -> Result<Process, BuildError> {
    match (l, r) {
        (Process::Nil, Process::Nil) => Ok(Process::Nil),
        (Process::Par(ll, lr), Process::Par(rl, rr)) => Ok(Process::par(
            merge(ll, rl, tab, names, vars)?,
            merge(lr, rr, tab, names, vars)?,
        )),
        (Process::Repl(id, lb), Process::Repl(_, rb)) => {
            Ok(Process::Repl(*id, Box::new(merge(lb, rb, tab, names, vars)?)))
        }
        (Process::New(ln, lb), Process::New(rn, rb)) => {
            if tab.name(*ln).sort != tab.name(*rn).sort {
                return Err(BuildError::ShapeMismatch(format!(
                    "restrictions {} and {} have different sorts",
                    tab.name_display(*ln),
                    tab.name_display(*rn)
                )));
            }
            if ln != rn {
                names.insert(*rn, *ln);
            }
            Ok(Process::New(*ln, Box::new(merge(lb, rb, tab, names, vars)?)))
        }
        (Process::In(lc, lp, lb), Process::In(rc, rp, rb)) => {
            let chan = folded(lc, mapped(rc, names, vars));
            let pat = merge_patterns(lp, rp, tab, names, vars)?;
            Ok(Process::input(chan, pat, merge(lb, rb, tab, names, vars)?))
        }
        (Process::Out(lc, lm, lb), Process::Out(rc, rm, rb)) => Ok(Process::output(
            folded(lc, mapped(rc, names, vars)),
            folded(lm, mapped(rm, names, vars)),
            merge(lb, rb, tab, names, vars)?,
        )),
        (Process::Let(lp, lt, lthen, lelse), Process::Let(rp, rt, rthen, relse)) => {
            let rhs = folded(lt, mapped(rt, names, vars));
            let pat = merge_patterns(lp, rp, tab, names, vars)?;
            Ok(Process::let_in(
                pat,
                rhs,
                merge(lthen, rthen, tab, names, vars)?,
                merge(lelse, relse, tab, names, vars)?,
            ))
        }
        (Process::If(lm, ln, lthen, lelse), Process::If(rm, rn, rthen, relse)) => {
            Ok(Process::if_eq(
                folded(lm, mapped(rm, names, vars)),
                folded(ln, mapped(rn, names, vars)),
                merge(lthen, rthen, tab, names, vars)?,
                merge(lelse, relse, tab, names, vars)?,
            ))
        }
        (Process::Event(le, la, lb), Process::Event(re, ra, rb)) => {
            if le != re || la.len() != ra.len() {
                return Err(BuildError::ShapeMismatch(
                    "different events at the same position".into(),
                ));
            }
            let args = la
                .iter()
                .zip(ra)
                .map(|(a, b)| folded(a, mapped(b, names, vars)))
                .collect();
            Ok(Process::event(*le, args, merge(lb, rb, tab, names, vars)?))
        }
        _ => Err(BuildError::ShapeMismatch(format!(
            "{} on one side against {} on the other",
            head(l),
            head(r)
        ))),
    }
}

fn merge_patterns(
    l: &Pattern,
    r: &Pattern,
    tab: &Symtab,
    names: &mut BTreeMap<NameId, NameId>,
    vars: &mut BTreeMap<VarId, VarId>,
) -> Result<Pattern, BuildError> {
    match (l, r) {
        (Pattern::Var(lv), Pattern::Var(rv)) => {
            if tab.var_sort(*lv) != tab.var_sort(*rv) {
                return Err(BuildError::ShapeMismatch(format!(
                    "binders {} and {} have different sorts",
                    tab.var_ident(*lv),
                    tab.var_ident(*rv)
                )));
            }
            if lv != rv {
                vars.insert(*rv, *lv);
            }
            Ok(Pattern::Var(*lv))
        }
        (Pattern::Eq(lt), Pattern::Eq(rt)) => Ok(Pattern::Eq(folded(lt, mapped(rt, names, vars)))),
        (Pattern::Tuple(ls), Pattern::Tuple(rs)) if ls.len() == rs.len() => {
            let items = ls
                .iter()
                .zip(rs)
                .map(|(a, b)| merge_patterns(a, b, tab, names, vars))
                .collect::<Result<_, _>>()?;
            Ok(Pattern::Tuple(items))
        }
        _ => Err(BuildError::ShapeMismatch(
            "patterns with different shapes".into(),
        )),
    }
}

/// Rewrites a right-side term through the binder unification maps.
fn mapped(t: &Term, names: &BTreeMap<NameId, NameId>, vars: &BTreeMap<VarId, VarId>) -> Term {
    match t {
        Term::Name(n) => Term::Name(*names.get(n).unwrap_or(n)),
        Term::Var(v) => Term::Var(*vars.get(v).unwrap_or(v)),
        Term::App(f, args) => Term::App(*f, args.iter().map(|a| mapped(a, names, vars)).collect()),
        Term::Choice(a, b) => Term::choice(mapped(a, names, vars), mapped(b, names, vars)),
    }
}

fn folded(l: &Term, r: Term) -> Term {
    if *l == r {
        l.clone()
    } else {
        Term::choice(l.clone(), r)
    }
}

fn fold_term(l: Term, r: Term) -> Term {
    if l == r {
        l
    } else {
        Term::choice(l, r)
    }
}

fn head(p: &Process) -> &'static str {
    match p {
        Process::Nil => "nil",
        Process::Par(_, _) => "a parallel composition",
        Process::Repl(_, _) => "a replication",
        Process::New(_, _) => "a restriction",
        Process::In(_, _, _) => "an input",
        Process::Out(_, _, _) => "an output",
        Process::Let(_, _, _, _) => "a let",
        Process::If(_, _, _, _) => "a conditional",
        Process::Event(_, _, _) => "an event",
    }
}

/// The binder prefix accumulated while running initialization steps.
enum Binder {
    New(NameId),
    Input { channel: Term, var: VarId },
}

fn wrap(binders: Vec<Binder>, body: Process) -> Process {
    binders.into_iter().rev().fold(body, |acc, b| match b {
        Binder::New(n) => Process::new_name(n, acc),
        Binder::Input { channel, var } => Process::input(channel, Pattern::Var(var), acc),
    })
}

fn apply_env_term(t: &Term, env: &BTreeMap<NameId, Term>) -> Term {
    env.iter().fold(t.clone(), |acc, (n, v)| acc.replace_name(*n, v))
}

fn apply_env(p: &Process, env: &BTreeMap<NameId, Term>) -> Process {
    env.iter().fold(p.clone(), |acc, (n, v)| acc.replace_name(*n, v))
}

/// Runs a role's initialization steps once, appending binders and recording
/// what every placeholder resolved to.
fn run_steps(
    pieces: &RolePieces,
    env: &mut BTreeMap<NameId, Term>,
    binders: &mut Vec<Binder>,
    tab: &mut Symtab,
) {
    for step in &pieces.init_steps {
        let info = tab.name(step.binds);
        let (ident, sort) = (info.ident.clone(), info.sort);
        match &step.source {
            StepSource::Fresh => {
                let n = tab.fresh_name(&ident, sort);
                binders.push(Binder::New(n));
                env.insert(step.binds, Term::Name(n));
            }
            StepSource::Read { channel } => {
                let v = tab.fresh_var(&ident);
                tab.set_var_sort(v, sort);
                binders.push(Binder::Input {
                    channel: apply_env_term(channel, env),
                    var: v,
                });
                env.insert(step.binds, Term::Var(v));
            }
            StepSource::Derive { term } => {
                let value = apply_env_term(term, env);
                env.insert(step.binds, value);
            }
        }
    }
}

/// One initialization run shared by both sides of the equivalence.
fn single_env(
    pieces: &RolePieces,
    id: Term,
    tab: &mut Symtab,
) -> (Vec<Binder>, BTreeMap<NameId, Term>) {
    let mut env = BTreeMap::new();
    env.insert(pieces.id, id);
    let mut binders = Vec::new();
    run_steps(pieces, &mut env, &mut binders, tab);
    (binders, env)
}

/// Two initialization runs, one per side, folded into an environment where
/// each placeholder is a `choice` between its two resolutions.
fn doubled_env(
    pieces: &RolePieces,
    id: &Term,
    tab: &mut Symtab,
) -> (Vec<Binder>, BTreeMap<NameId, Term>) {
    let mut binders = Vec::new();
    let mut lenv = BTreeMap::new();
    lenv.insert(pieces.id, id.project(Side::Left));
    run_steps(pieces, &mut lenv, &mut binders, tab);
    let mut renv = BTreeMap::new();
    renv.insert(pieces.id, id.project(Side::Right));
    run_steps(pieces, &mut renv, &mut binders, tab);

    let mut env = BTreeMap::new();
    env.insert(pieces.id, id.clone());
    for step in &pieces.init_steps {
        env.insert(
            step.binds,
            fold_term(lenv[&step.binds].clone(), renv[&step.binds].clone()),
        );
    }
    (binders, env)
}

/// What goes into the composition's hole alongside the standing roles.
struct Hole<'a> {
    skip: Option<&'a str>,
    replace: Option<(&'a str, Process)>,
    extras: Vec<Process>,
}

/// Assembles the full composition: restrictions, setup prefix, replicated
/// roles (minus `skip`, with `replace` swapped in), and the hole contents.
fn fill(shape: &ProtocolShape, hole: Hole, tab: &mut Symtab) -> Result<Process, BuildError> {
    let mut parts = Vec::new();
    for role in &shape.roles {
        if hole.skip == Some(role.label.as_str()) {
            continue;
        }
        let body = match &hole.replace {
            Some((label, replacement)) if *label == role.label => replacement.clone(),
            _ => role.body.refresh(tab),
        };
        parts.push(Process::repl(body));
    }
    parts.extend(hole.extras);
    let spine = seq_onto(&shape.init, Process::par_all(parts))?;
    let mut whole = shape
        .restricted
        .iter()
        .rev()
        .fold(spine, |acc, n| Process::new_name(*n, acc));
    whole.renumber_repls();
    for side in [Side::Left, Side::Right] {
        if let Some(d) = validate_well_formed(&whole.project(side), tab).first() {
            return Err(BuildError::OpenWitness(d.to_string()));
        }
    }
    Ok(whole)
}

/// Grafts `cont` at the end of a sequential prefix. Success branches of lets
/// and conditionals are part of the prefix; failure branches stay as written.
fn seq_onto(prefix: &Process, cont: Process) -> Result<Process, BuildError> {
    Ok(match prefix {
        Process::Nil => cont,
        Process::New(n, q) => Process::new_name(*n, seq_onto(q, cont)?),
        Process::In(c, pat, q) => Process::input(c.clone(), pat.clone(), seq_onto(q, cont)?),
        Process::Out(c, m, q) => Process::output(c.clone(), m.clone(), seq_onto(q, cont)?),
        Process::Event(l, args, q) => Process::event(*l, args.clone(), seq_onto(q, cont)?),
        Process::Let(pat, rhs, t, e) if matches!(**e, Process::Nil) => {
            Process::let_in(pat.clone(), rhs.clone(), seq_onto(t, cont)?, Process::Nil)
        }
        Process::If(m, n, t, e) if matches!(**e, Process::Nil) => {
            Process::if_eq(m.clone(), n.clone(), seq_onto(t, cont)?, Process::Nil)
        }
        _ => {
            return Err(BuildError::ShapeMismatch(
                "an initialization prefix must be sequential".into(),
            ))
        }
    })
}

fn distinct(a: NameId, b: NameId, what: &'static str) -> Result<(), BuildError> {
    if a == b {
        Err(BuildError::IndistinctAgents(what))
    } else {
        Ok(())
    }
}

fn pieces_for<'a>(shape: &'a ProtocolShape, label: &str) -> Result<&'a RolePieces, BuildError> {
    [&shape.doctor, &shape.patient]
        .into_iter()
        .find(|p| p.label == label)
        .ok_or_else(|| BuildError::UnknownRole(label.to_string()))
}

/// One doctor session with the given prescription, closed over `env`.
fn main_session(
    shape: &ProtocolShape,
    env: &BTreeMap<NameId, Term>,
    presc: Term,
    tab: &mut Symtab,
) -> Process {
    apply_env(&shape.doctor_main, env)
        .replace_name(shape.presc, &presc)
        .refresh(tab)
}

/// A doctor instance whose identity differs per side: the initialization is
/// run once per side (two pseudonyms, chosen apart), followed by a single
/// prescribing session and, when `balance` is set, counter-balancing
/// replicated sessions.
fn doctor_instance(
    shape: &ProtocolShape,
    id: Term,
    presc: Term,
    balance: bool,
    tab: &mut Symtab,
) -> Process {
    let (binders, env) = doubled_env(&shape.doctor, &id, tab);
    let main = main_session(shape, &env, presc, tab);
    let body = if balance {
        Process::par(
            Process::repl(apply_env(&shape.doctor.session, &env).refresh(tab)),
            main,
        )
    } else {
        main
    };
    wrap(binders, body)
}

/// The prescription-swap bi-process: on the left the first doctor prescribes
/// the first prescription and the second doctor the second; on the right the
/// prescriptions are exchanged. Observing the difference links doctors to
/// prescriptions.
pub fn build_prescription_privacy(
    shape: &ProtocolShape,
    d_a: NameId,
    d_b: NameId,
    p_a: NameId,
    p_b: NameId,
    balance: bool,
    tab: &mut Symtab,
) -> Result<Process, BuildError> {
    build_prescription_swap(shape, d_a, d_b, p_a, p_b, balance, None, tab)
}

#[allow(clippy::too_many_arguments)]
fn build_prescription_swap(
    shape: &ProtocolShape,
    d_a: NameId,
    d_b: NameId,
    p_a: NameId,
    p_b: NameId,
    balance: bool,
    replace: Option<(&str, Process)>,
    tab: &mut Symtab,
) -> Result<Process, BuildError> {
    distinct(d_a, d_b, "doctors")?;
    distinct(p_a, p_b, "prescriptions")?;
    let inst_a = doctor_instance(
        shape,
        Term::choice(Term::Name(d_a), Term::Name(d_b)),
        Term::Name(p_a),
        balance,
        tab,
    );
    let inst_b = doctor_instance(
        shape,
        Term::choice(Term::Name(d_b), Term::Name(d_a)),
        Term::Name(p_b),
        balance,
        tab,
    );
    fill(
        shape,
        Hole {
            skip: None,
            replace,
            extras: vec![inst_a, inst_b],
        },
        tab,
    )
}

/// Receipt-freeness for a single bribed session; see
/// [`build_multi_session_receipt_freeness`], of which this is the one-session
/// instance.
#[allow(clippy::too_many_arguments)]
pub fn build_receipt_freeness(
    shape: &ProtocolShape,
    d_a: NameId,
    d_b: NameId,
    p_a: NameId,
    p_b: NameId,
    lying_init: &Process,
    lying_main: &Process,
    tab: &mut Symtab,
) -> Result<(Process, Process), BuildError> {
    build_multi_session_receipt_freeness(
        shape,
        d_a,
        d_b,
        &[(p_a, p_b)],
        lying_init,
        lying_main,
        tab,
    )
}

/// Receipt-freeness with one bribed session per entry of `prescriptions`
/// (each entry pairs the prescription the coercer demands with the one the
/// counter-balancing side uses). Returns two bi-processes that must both be
/// equivalent for the property to hold:
///
/// 1. the caller-supplied lying doctor against the genuinely coerced doctor,
///    with a second doctor counter-balancing the swapped prescriptions, and
/// 2. the lying doctor with its coercion channel hidden against an honest
///    doctor prescribing the other prescriptions.
///
/// The lying witness is supplied, never searched for: `lying_init` followed
/// by `lying_main` must mirror the coerced doctor's structure statement for
/// statement so the two sides merge.
pub fn build_multi_session_receipt_freeness(
    shape: &ProtocolShape,
    d_a: NameId,
    d_b: NameId,
    prescriptions: &[(NameId, NameId)],
    lying_init: &Process,
    lying_main: &Process,
    tab: &mut Symtab,
) -> Result<(Process, Process), BuildError> {
    build_coercion_pair(shape, d_a, d_b, prescriptions, lying_init, lying_main, None, tab)
}

#[allow(clippy::too_many_arguments)]
fn build_coercion_pair(
    shape: &ProtocolShape,
    d_a: NameId,
    d_b: NameId,
    prescriptions: &[(NameId, NameId)],
    lying_init: &Process,
    lying_main: &Process,
    replace: Option<(&str, Process)>,
    tab: &mut Symtab,
) -> Result<(Process, Process), BuildError> {
    distinct(d_a, d_b, "doctors")?;
    if prescriptions.is_empty() {
        return Err(BuildError::ShapeMismatch(
            "at least one bribed session is required".into(),
        ));
    }
    for (p_a, p_b) in prescriptions {
        distinct(*p_a, *p_b, "prescriptions")?;
    }
    let chc = shape.coercion_channel;
    let lying = seq_onto(lying_init, lying_main.clone())?;

    // First equivalence: lying against coerced, second doctor balancing.
    let coerced = {
        let (binders, env) = single_env(&shape.doctor, Term::Name(d_a), tab);
        let mains = prescriptions
            .iter()
            .map(|(p_a, _)| main_session(shape, &env, Term::Name(*p_a), tab))
            .collect();
        reveal_on_channel(&wrap(binders, Process::par_all(mains)), chc, tab)?
    };
    let merged = merge_biprocess(&lying, &coerced, tab)?;
    let balancing = {
        let (binders, env) = single_env(&shape.doctor, Term::Name(d_b), tab);
        let mains = prescriptions
            .iter()
            .map(|(p_a, p_b)| {
                main_session(
                    shape,
                    &env,
                    Term::choice(Term::Name(*p_a), Term::Name(*p_b)),
                    tab,
                )
            })
            .collect();
        wrap(binders, Process::par_all(mains))
    };
    let first = fill(
        shape,
        Hole {
            skip: None,
            replace: replace.as_ref().map(|(l, p)| (*l, p.clone())),
            extras: vec![merged, balancing],
        },
        tab,
    )?;

    // Second equivalence: hiding the lying doctor's coercion traffic must
    // look like honest sessions for the other prescriptions. The honest side
    // is written as revealed-then-hidden on a fresh channel instance, which
    // leaves its observable behaviour unchanged and makes the sides merge.
    let chc_ident = tab.name(chc).ident.clone();
    let hidden = tab.fresh_name(&chc_ident, Sort::Channel);
    let lying_hidden = lying.rename_name(chc, hidden);
    let honest = {
        let (binders, env) = single_env(&shape.doctor, Term::Name(d_a), tab);
        let mains = prescriptions
            .iter()
            .map(|(_, p_b)| main_session(shape, &env, Term::Name(*p_b), tab))
            .collect();
        reveal_on_channel(&wrap(binders, Process::par_all(mains)), hidden, tab)?
    };
    let cloaked = hide_outputs(&merge_biprocess(&lying_hidden, &honest, tab)?, hidden, tab);
    let balancing = {
        let (binders, env) = single_env(&shape.doctor, Term::Name(d_b), tab);
        let mains = prescriptions
            .iter()
            .map(|(p_a, _)| main_session(shape, &env, Term::Name(*p_a), tab))
            .collect();
        wrap(binders, Process::par_all(mains))
    };
    let second = fill(
        shape,
        Hole {
            skip: None,
            replace,
            extras: vec![cloaked, balancing],
        },
        tab,
    )?;
    Ok((first, second))
}

/// Which base property a collaborating role is composed into.
#[derive(Debug, Clone, Copy)]
pub enum IndependencyBase<'a> {
    PrescriptionPrivacy {
        balance: bool,
    },
    ReceiptFreeness {
        lying_init: &'a Process,
        lying_main: &'a Process,
    },
}

/// The base property with the named role replaced by its collaborating
/// version, which forwards everything it generates or receives on the
/// coercion channel. Returns one query for the prescription-privacy base and
/// two for the receipt-freeness base.
#[allow(clippy::too_many_arguments)]
pub fn build_independency(
    shape: &ProtocolShape,
    role: &str,
    base: IndependencyBase,
    d_a: NameId,
    d_b: NameId,
    p_a: NameId,
    p_b: NameId,
    tab: &mut Symtab,
) -> Result<Vec<Process>, BuildError> {
    if role == shape.doctor.label {
        return Err(BuildError::DoctorRoleForbidden);
    }
    let found = shape
        .roles
        .iter()
        .find(|r| r.label == role)
        .ok_or_else(|| BuildError::UnknownRole(role.to_string()))?;
    let revealed = reveal_on_channel(&found.body.refresh(tab), shape.coercion_channel, tab)?;
    match base {
        IndependencyBase::PrescriptionPrivacy { balance } => Ok(vec![build_prescription_swap(
            shape,
            d_a,
            d_b,
            p_a,
            p_b,
            balance,
            Some((role, revealed)),
            tab,
        )?]),
        IndependencyBase::ReceiptFreeness {
            lying_init,
            lying_main,
        } => {
            let (first, second) = build_coercion_pair(
                shape,
                d_a,
                d_b,
                &[(p_a, p_b)],
                lying_init,
                lying_main,
                Some((role, revealed)),
                tab,
            )?;
            Ok(vec![first, second])
        }
    }
}

/// Which instances of a role an anonymity query compares.
#[derive(Debug, Clone, Copy)]
pub enum AgentSelector {
    /// Two known agents: can a session of the first be told from a session
    /// of the second?
    Pair(NameId, NameId),
    /// One known agent against the protocol as it stands: does adding that
    /// agent's sessions change the observations at all? The left side runs a
    /// freshly restricted agent instead, which is indistinguishable from one
    /// more honest role instance.
    Strong(NameId),
}

/// An anonymity bi-process for the named role.
pub fn build_anonymity(
    shape: &ProtocolShape,
    role: &str,
    agents: AgentSelector,
    tab: &mut Symtab,
) -> Result<Process, BuildError> {
    let pieces = pieces_for(shape, role)?;
    let component = match agents {
        AgentSelector::Pair(a, b) => {
            distinct(a, b, "agents")?;
            let (binders, env) =
                single_env(pieces, Term::choice(Term::Name(a), Term::Name(b)), tab);
            wrap(
                binders,
                Process::repl(apply_env(&pieces.session, &env).refresh(tab)),
            )
        }
        AgentSelector::Strong(known) => {
            let info = tab.name(pieces.id);
            let (ident, sort) = (info.ident.clone(), info.sort);
            let veiled = tab.fresh_name(&ident, sort);
            let (binders, env) = single_env(
                pieces,
                Term::choice(Term::Name(veiled), Term::Name(known)),
                tab,
            );
            Process::new_name(
                veiled,
                wrap(
                    binders,
                    Process::repl(apply_env(&pieces.session, &env).refresh(tab)),
                ),
            )
        }
    };
    fill(
        shape,
        Hole {
            skip: None,
            replace: None,
            extras: vec![component],
        },
        tab,
    )
}

/// Whether an untraceability query compares two sessions of one agent with
/// one session each of two agents, or arbitrarily many agents and sessions.
#[derive(Debug, Clone, Copy)]
pub enum UntraceMode {
    Pairwise(NameId, NameId),
    Strong,
}

/// An untraceability bi-process for the named role.
///
/// Pairwise: on the left the first agent initializes once and runs two
/// sessions; on the right the second session belongs to the other agent with
/// its own initialization. Strong: a nested replication where the left side
/// reuses one agent's initialization for every session and the right side
/// refreshes it each time, with the standing role dropped from the
/// composition since the replication already covers it.
pub fn build_untraceability(
    shape: &ProtocolShape,
    role: &str,
    mode: UntraceMode,
    tab: &mut Symtab,
) -> Result<Process, BuildError> {
    let pieces = pieces_for(shape, role)?;
    match mode {
        UntraceMode::Pairwise(a, b) => {
            distinct(a, b, "agents")?;
            let mut binders = Vec::new();
            let mut first = BTreeMap::new();
            first.insert(pieces.id, Term::Name(a));
            run_steps(pieces, &mut first, &mut binders, tab);
            let mut second = BTreeMap::new();
            second.insert(pieces.id, Term::Name(b));
            run_steps(pieces, &mut second, &mut binders, tab);

            let mut env = BTreeMap::new();
            env.insert(pieces.id, Term::choice(Term::Name(a), Term::Name(b)));
            for step in &pieces.init_steps {
                env.insert(
                    step.binds,
                    fold_term(first[&step.binds].clone(), second[&step.binds].clone()),
                );
            }
            let settled = apply_env(&pieces.session, &first).refresh(tab);
            let contested = apply_env(&pieces.session, &env).refresh(tab);
            let component = wrap(binders, Process::par(settled, contested));
            fill(
                shape,
                Hole {
                    skip: None,
                    replace: None,
                    extras: vec![component],
                },
                tab,
            )
        }
        UntraceMode::Strong => {
            let info = tab.name(pieces.id);
            let (ident, sort) = (info.ident.clone(), info.sort);

            let outer_id = tab.fresh_name(&ident, sort);
            let mut outer_binders = vec![Binder::New(outer_id)];
            let mut outer = BTreeMap::new();
            outer.insert(pieces.id, Term::Name(outer_id));
            run_steps(pieces, &mut outer, &mut outer_binders, tab);

            let inner_id = tab.fresh_name(&ident, sort);
            let mut inner_binders = vec![Binder::New(inner_id)];
            let mut inner = BTreeMap::new();
            inner.insert(pieces.id, Term::Name(inner_id));
            run_steps(pieces, &mut inner, &mut inner_binders, tab);

            let mut env = BTreeMap::new();
            env.insert(
                pieces.id,
                Term::choice(Term::Name(outer_id), Term::Name(inner_id)),
            );
            for step in &pieces.init_steps {
                env.insert(
                    step.binds,
                    fold_term(outer[&step.binds].clone(), inner[&step.binds].clone()),
                );
            }
            let session = apply_env(&pieces.session, &env).refresh(tab);
            let component = Process::repl(wrap(
                outer_binders,
                Process::repl(wrap(inner_binders, session)),
            ));
            fill(
                shape,
                Hole {
                    skip: Some(role),
                    replace: None,
                    extras: vec![component],
                },
                tab,
            )
        }
    }
}
