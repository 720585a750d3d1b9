//! Shared fixture: the e-health crypto signature the corpus builds on.

// Each integration-test binary compiles this module separately and uses a
// different subset of the helpers.
#![allow(dead_code)]

use spv_calculus::{load, Plan, SymId, Term};

/// Asymmetric encryption, bit commitments, digital signatures, plain and
/// signed zero-knowledge proofs, and the key/host cancellation pair.
pub const SIGNATURE: &str = "
fun true/0.
fun hash/3.
fun pk/1.
fun enc/2.
fun commit/2.
fun sign/2.
fun zk/2.
fun spk/3.
fun invoice/1.
fun key/1.
fun host/1.
private fun drcred/2.
private fun ptcred/5.

reduc dec(enc(m, pk(sk)), sk) = m.
reduc open(commit(x, y), y) = x.
reduc Vfy-sign(sign(x, y), pk(y)) = true.
reduc getsignmsg(sign(x, y), pk(y)) = x.
reduc getpublic(zk(x, y)) = y.
reduc getmsg(spk(x, y, z)) = z.
reduc getSpkVinfo(spk(x, y, z)) = y.

equation key(host(x)) = x.
equation host(key(x)) = x.

free m, sk, id, r, a, b, c, Pnym_dr, Id_dr.
";

pub fn plan() -> Plan {
    load(SIGNATURE).expect("signature fixture must elaborate")
}

pub fn sym(plan: &Plan, ident: &str) -> SymId {
    plan.tab
        .lookup_symbol(ident)
        .unwrap_or_else(|| panic!("symbol {ident} missing from fixture"))
}

pub fn atom(plan: &Plan, ident: &str) -> Term {
    Term::Name(
        plan.tab
            .lookup_name(ident)
            .unwrap_or_else(|| panic!("name {ident} missing from fixture")),
    )
}
