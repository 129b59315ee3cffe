//! Translation of global types into arbiter processes.

use std::collections::HashMap;

use thiserror::Error;

use crate::coherence::{check_coherence, CoherenceError};
use crate::logic_cll::dual_context;
use crate::logic_sync::{check_sync, SyncError};
use crate::terms::{Context, Derivation, GlobalType, Name, Process};

#[derive(Clone, PartialEq, Eq, Debug, Error)]
pub enum ArbiterizeError {
    #[error(transparent)]
    Coherence(#[from] CoherenceError),
    #[error("internal soundness violation: {0}")]
    InternalSoundnessViolation(SyncError),
}

/// The arbiter of `g`. Endpoint `x` becomes channel `x'`.
pub fn arbiterize(g: &GlobalType) -> Process {
    let env = g.free_names().into_iter().map(|x| (x.clone(), x.primed())).collect();
    translate(g, &env)
}

fn bx(p: Process) -> Box<Process> {
    Box::new(p)
}

fn translate(g: &GlobalType, env: &HashMap<Name, Name>) -> Process {
    let ch = |x: &Name| env.get(x).cloned().unwrap_or_else(|| x.primed());
    match g {
        GlobalType::Axiom(x, _, y) => Process::Link(ch(x), ch(y)),
        GlobalType::CloseAll(xs, y) => {
            xs.iter().rev().fold(Process::Close(ch(y)), |p, x| Process::Wait(ch(x), bx(p)))
        }
        GlobalType::Gather(xs, y, l, r) => {
            let mut inner = env.clone();
            let us: Vec<Name> = xs.iter().map(|x| Name::fresh(x.base())).collect();
            for (x, u) in xs.iter().zip(&us) {
                inner.insert(x.clone(), u.clone());
            }
            let v = Name::fresh(y.base());
            inner.insert(y.clone(), v.clone());
            let send = Process::Send(ch(y), v, bx(translate(l, &inner)), bx(translate(r, env)));
            xs.iter().zip(us).rev().fold(send, |p, (x, u)| Process::Recv(ch(x), u, bx(p)))
        }
        GlobalType::Branch(x, ys, l, r) => {
            let left = ys.iter().rev().fold(translate(l, env), |p, y| Process::InL(ch(y), bx(p)));
            let right = ys.iter().rev().fold(translate(r, env), |p, y| Process::InR(ch(y), bx(p)));
            Process::Case(ch(x), bx(left), bx(right))
        }
        GlobalType::Serve(x, ys, body) => {
            let mut inner = env.clone();
            let u = Name::fresh(x.base());
            inner.insert(x.clone(), u.clone());
            let vs: Vec<Name> = ys.iter().map(|y| Name::fresh(y.base())).collect();
            for (y, v) in ys.iter().zip(&vs) {
                inner.insert(y.clone(), v.clone());
            }
            let clients = ys
                .iter()
                .zip(vs)
                .rev()
                .fold(translate(body, &inner), |p, (y, v)| Process::Client(ch(y), v, bx(p)));
            Process::Server(ch(x), u, bx(clients))
        }
    }
}

/// `delta` with every type dualized and every endpoint primed.
pub fn arbiter_context(delta: &Context) -> Context {
    dual_context(delta).rename(|n| n.primed())
}

/// The arbiter of a coherent `g` together with its typing derivation.
pub fn soundness_certificate(g: &GlobalType, delta: &Context) -> Result<(Process, Derivation), ArbiterizeError> {
    check_coherence(g, delta)?;
    let p = arbiterize(g);
    let d = check_sync(&p, &arbiter_context(delta)).map_err(ArbiterizeError::InternalSoundnessViolation)?;
    Ok((p, d))
}

/// Whether `p` is in the image of the translation: every block is a prefix
/// chain over distinct channels ending in the block's action.
pub fn is_arbiter_shape(p: &Process) -> bool {
    use Process::*;
    match p {
        Link(..) => true,
        Close(_) => true,
        Wait(_, q) => matches!(**q, Wait(..) | Close(_)) && is_arbiter_shape(q),
        Recv(_, _, q) => matches!(**q, Recv(..) | Send(..)) && is_arbiter_shape(q),
        Send(_, _, l, r) => is_arbiter_shape(l) && is_arbiter_shape(r),
        Case(_, l, r) => select_chain(l, true) && select_chain(r, false),
        Server(_, _, q) => client_chain(q),
        InL(..) | InR(..) | Client(..) => false,
        Cut(..) | CutHalf(..) | CutMsg(..) => false,
    }
}

fn select_chain(p: &Process, left: bool) -> bool {
    match (p, left) {
        (Process::InL(_, q), true) | (Process::InR(_, q), false) => select_chain(q, left),
        (Process::InL(..) | Process::InR(..), _) => false,
        _ => is_arbiter_shape(p),
    }
}

fn client_chain(p: &Process) -> bool {
    match p {
        Process::Client(_, _, q) => client_chain(q),
        _ => is_arbiter_shape(p),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::surface::{parse_context, parse_global_type, parse_process};

    fn g(s: &str) -> GlobalType {
        parse_global_type(s).unwrap()
    }

    #[test]
    fn axiom_becomes_primed_link() {
        let p = arbiterize(&g("axiom x:a = y"));
        assert_eq!(p, Process::link("x'", "y'"));
    }

    #[test]
    fn close_all_nests_waits() {
        let p = arbiterize(&g("close (x1, x2) -> y"));
        assert_eq!(p, Process::wait("x1'", Process::wait("x2'", Process::close("y'"))));
    }

    #[test]
    fn two_buyer_gives_p1() {
        let gt = g(include_str!("../tests/data/twobuyer.gt"));
        let p1 = parse_process(include_str!("../tests/data/p1.fwd")).unwrap();
        let p = arbiterize(&gt);
        assert!(p.alpha_eq(&p1), "{}", p);
        assert!(is_arbiter_shape(&p));
        let delta = parse_context(include_str!("../tests/data/twobuyer_delta.llp")).unwrap();
        assert_eq!(arbiter_context(&delta), parse_context(include_str!("../tests/data/p1.llp")).unwrap());
        let (q, d) = soundness_certificate(&gt, &delta).unwrap();
        assert!(q.alpha_eq(&p1));
        assert_eq!(d.process(), &q);
    }

    #[test]
    fn certificate_for_axiom() {
        let (p, d) = soundness_certificate(&g("axiom x:a = y"), &parse_context("x : a, y : ~a").unwrap()).unwrap();
        assert_eq!(p, Process::link("x'", "y'"));
        assert_eq!(d.height(), 1);
    }

    #[test]
    fn serve_translation() {
        let gt = g("serve x -> (y) { close (y) -> x }");
        let p = arbiterize(&gt);
        assert!(matches!(&p, Process::Server(x, _, q) if x.as_str() == "x'" && matches!(**q, Process::Client(..))));
        assert!(is_arbiter_shape(&p));
        soundness_certificate(&gt, &parse_context("x : ?bot, y : !1").unwrap()).unwrap();
    }

    #[test]
    fn shape_rejects_non_arbiters() {
        let p = parse_process("x[y].(y<->z | w(u). x[])").unwrap();
        assert!(!is_arbiter_shape(&p));
    }
}
