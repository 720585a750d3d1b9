//! Signatures and interning: function symbols, names, variables, event labels.
//!
//! All syntax trees refer to symbols/names/variables by dense integer ids into
//! a [`Symtab`]; the table is the only place strings live. Fresh names created
//! during execution reuse the base ident of the binder and bump a per-ident
//! freshness index, so two unfoldings of the same restriction never collide.

use std::collections::HashMap;
use thiserror::Error;

pub type SymId = u32;
pub type NameId = u32;
pub type VarId = u32;
pub type EventId = u32;

/// Whether the attacker may apply a function symbol in recipes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Visibility {
    Public,
    Private,
}

/// Constructors build messages; destructors are evaluated away by rewriting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SymKind {
    Constructor,
    Destructor,
}

/// Sort of a name or variable: ordinary data or a communication channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sort {
    Base,
    Channel,
}

/// Who knows a name a priori.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NameScope {
    /// Declared `free` or `channel`: known to everyone including the attacker.
    Public,
    /// Declared `private free`, or bound by a restriction: unknown to the
    /// attacker unless it leaks into the frame.
    Restricted,
    /// Invented by the attacker during exploration; attacker-known.
    Attacker,
}

/// A declared function symbol.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Symbol {
    pub ident: String,
    pub arity: usize,
    pub visibility: Visibility,
    pub kind: SymKind,
}

/// One interned name instance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NameInfo {
    pub ident: String,
    /// Freshness index; 0 for declared names, >0 for runtime instances.
    pub index: u32,
    pub sort: Sort,
    pub scope: NameScope,
}

/// An event label with its arity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventInfo {
    pub ident: String,
    pub arity: usize,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SigError {
    #[error("symbol '{0}' declared twice")]
    DuplicateSymbol(String),
    #[error("name '{0}' declared twice")]
    DuplicateName(String),
    #[error("event '{0}' declared twice")]
    DuplicateEvent(String),
}

/// Symbol/name/variable/event tables shared by every phase.
#[derive(Debug, Clone, Default)]
pub struct Symtab {
    syms: Vec<Symbol>,
    sym_index: HashMap<String, SymId>,
    names: Vec<NameInfo>,
    name_index: HashMap<String, NameId>,
    next_name_index: HashMap<String, u32>,
    vars: Vec<String>,
    var_sorts: Vec<Sort>,
    events: Vec<EventInfo>,
    event_index: HashMap<String, EventId>,
    tuples: HashMap<usize, SymId>,
    projs: HashMap<(usize, usize), SymId>,
    attacker_consts: u32,
}

impl Symtab {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn declare_symbol(
        &mut self,
        ident: &str,
        arity: usize,
        visibility: Visibility,
    ) -> Result<SymId, SigError> {
        if self.sym_index.contains_key(ident) {
            return Err(SigError::DuplicateSymbol(ident.to_string()));
        }
        let id = self.syms.len() as SymId;
        self.syms.push(Symbol {
            ident: ident.to_string(),
            arity,
            visibility,
            kind: SymKind::Constructor,
        });
        self.sym_index.insert(ident.to_string(), id);
        Ok(id)
    }

    pub fn symbol(&self, id: SymId) -> &Symbol {
        &self.syms[id as usize]
    }

    pub fn lookup_symbol(&self, ident: &str) -> Option<SymId> {
        self.sym_index.get(ident).copied()
    }

    pub fn symbols(&self) -> impl Iterator<Item = (SymId, &Symbol)> {
        self.syms.iter().enumerate().map(|(i, s)| (i as SymId, s))
    }

    /// Reclassifies a symbol as a destructor (the root of a `reduc` rule).
    pub fn mark_destructor(&mut self, id: SymId) {
        self.syms[id as usize].kind = SymKind::Destructor;
    }

    /// Returns the n-ary tuple constructor, declaring it on first use.
    pub fn tuple(&mut self, arity: usize) -> SymId {
        if let Some(&id) = self.tuples.get(&arity) {
            return id;
        }
        let ident = format!("tuple_{arity}");
        let id = self
            .declare_symbol(&ident, arity, Visibility::Public)
            .expect("tuple symbols are only declared here");
        self.tuples.insert(arity, id);
        id
    }

    /// Returns the tuple constructor for `arity` if it has been declared.
    pub fn tuple_of(&self, arity: usize) -> Option<SymId> {
        self.tuples.get(&arity).copied()
    }

    /// True if `id` is some tuple constructor.
    pub fn is_tuple(&self, id: SymId) -> bool {
        self.symbol(id).ident.starts_with("tuple_")
    }

    /// Returns the projection destructor extracting position `pos` (0-based)
    /// from an `arity`-tuple, declaring it on first use.
    pub fn proj(&mut self, arity: usize, pos: usize) -> SymId {
        debug_assert!(pos < arity);
        if let Some(&id) = self.projs.get(&(arity, pos)) {
            return id;
        }
        let ident = format!("proj{}_{arity}", pos + 1);
        let id = self
            .declare_symbol(&ident, 1, Visibility::Public)
            .expect("projection symbols are only declared here");
        self.syms[id as usize].kind = SymKind::Destructor;
        self.projs.insert((arity, pos), id);
        id
    }

    pub fn declare_name(
        &mut self,
        ident: &str,
        sort: Sort,
        scope: NameScope,
    ) -> Result<NameId, SigError> {
        if self.name_index.contains_key(ident) {
            return Err(SigError::DuplicateName(ident.to_string()));
        }
        let id = self.names.len() as NameId;
        self.names.push(NameInfo {
            ident: ident.to_string(),
            index: 0,
            sort,
            scope,
        });
        self.name_index.insert(ident.to_string(), id);
        self.next_name_index.insert(ident.to_string(), 1);
        Ok(id)
    }

    /// Allocates a bound-name instance without registering it for lookup;
    /// used for restriction binders and their runtime unfoldings.
    pub fn fresh_name(&mut self, base_ident: &str, sort: Sort) -> NameId {
        let counter = self.next_name_index.entry(base_ident.to_string()).or_insert(0);
        let index = *counter;
        *counter += 1;
        let id = self.names.len() as NameId;
        self.names.push(NameInfo {
            ident: base_ident.to_string(),
            index,
            sort,
            scope: NameScope::Restricted,
        });
        id
    }

    /// Allocates a fresh attacker constant (a value the attacker invents,
    /// of the given sort so it can stand in for data or a channel).
    pub fn fresh_attacker_const(&mut self, sort: Sort) -> NameId {
        let n = self.attacker_consts;
        self.attacker_consts += 1;
        let id = self.names.len() as NameId;
        self.names.push(NameInfo {
            ident: "atk".to_string(),
            index: n,
            sort,
            scope: NameScope::Attacker,
        });
        id
    }

    pub fn name(&self, id: NameId) -> &NameInfo {
        &self.names[id as usize]
    }

    pub fn lookup_name(&self, ident: &str) -> Option<NameId> {
        self.name_index.get(ident).copied()
    }

    pub fn names(&self) -> impl Iterator<Item = (NameId, &NameInfo)> {
        self.names.iter().enumerate().map(|(i, n)| (i as NameId, n))
    }

    /// Interns a variable. Variables are scoped by the elaborator, so every
    /// binder gets its own id even when source idents repeat.
    pub fn fresh_var(&mut self, ident: &str) -> VarId {
        let id = self.vars.len() as VarId;
        self.vars.push(ident.to_string());
        self.var_sorts.push(Sort::Base);
        id
    }

    pub fn var_ident(&self, id: VarId) -> &str {
        &self.vars[id as usize]
    }

    pub fn var_count(&self) -> usize {
        self.vars.len()
    }

    pub fn set_var_sort(&mut self, id: VarId, sort: Sort) {
        self.var_sorts[id as usize] = sort;
    }

    pub fn var_sort(&self, id: VarId) -> Sort {
        self.var_sorts[id as usize]
    }

    pub fn declare_event(&mut self, ident: &str, arity: usize) -> Result<EventId, SigError> {
        if self.event_index.contains_key(ident) {
            return Err(SigError::DuplicateEvent(ident.to_string()));
        }
        let id = self.events.len() as EventId;
        self.events.push(EventInfo {
            ident: ident.to_string(),
            arity,
        });
        self.event_index.insert(ident.to_string(), id);
        Ok(id)
    }

    pub fn event(&self, id: EventId) -> &EventInfo {
        &self.events[id as usize]
    }

    pub fn lookup_event(&self, ident: &str) -> Option<EventId> {
        self.event_index.get(ident).copied()
    }

    /// Display form of a name: bare ident for index 0, `ident#k` otherwise.
    pub fn name_display(&self, id: NameId) -> String {
        let info = self.name(id);
        if info.index == 0 && info.scope != NameScope::Attacker {
            info.ident.clone()
        } else {
            format!("{}#{}", info.ident, info.index)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn duplicate_symbol_rejected() {
        let mut tab = Symtab::new();
        tab.declare_symbol("enc", 2, Visibility::Public).unwrap();
        assert_eq!(
            tab.declare_symbol("enc", 2, Visibility::Public),
            Err(SigError::DuplicateSymbol("enc".into()))
        );
    }

    #[test]
    fn fresh_names_never_collide() {
        let mut tab = Symtab::new();
        let a = tab.fresh_name("n", Sort::Base);
        let b = tab.fresh_name("n", Sort::Base);
        assert_ne!(a, b);
        assert_ne!(tab.name(a).index, tab.name(b).index);
        assert_eq!(tab.name(a).ident, tab.name(b).ident);
    }

    #[test]
    fn declared_then_fresh_shares_ident_distinct_index() {
        let mut tab = Symtab::new();
        let declared = tab.declare_name("k", Sort::Base, NameScope::Public).unwrap();
        let fresh = tab.fresh_name("k", Sort::Base);
        assert_eq!(tab.name(declared).index, 0);
        assert_eq!(tab.name(fresh).index, 1);
        assert_eq!(tab.name_display(fresh), "k#1");
    }

    #[test]
    fn tuples_and_projections_are_memoized() {
        let mut tab = Symtab::new();
        let t3 = tab.tuple(3);
        assert_eq!(tab.tuple(3), t3);
        let p2 = tab.proj(3, 1);
        assert_eq!(tab.proj(3, 1), p2);
        assert_eq!(tab.symbol(p2).kind, SymKind::Destructor);
        assert_eq!(tab.symbol(t3).arity, 3);
        assert!(tab.is_tuple(t3));
    }
}
