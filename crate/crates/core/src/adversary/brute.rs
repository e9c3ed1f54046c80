//! Brute-force consistency checking over a tiny prime modulus.
//!
//! Independent ground truth for the span oracle: a target functional is
//! determined by a view exactly when a single value of the target is
//! consistent with the equations. For each candidate value v in Z_M the
//! oracle appends the equation `target = v` and decides whether any
//! segment assignment satisfies the whole system.
//!
//! Satisfiability is decided by exhaustive search, not elimination. The
//! constraint graph of a view splits into small connected components
//! (one per protocol round) once the few equations that span components
//! are set aside; each component's assignments are enumerated by
//! backtracking with unit propagation, recording which partial sums the
//! component can contribute to the spanning equations, and the
//! per-component contribution sets are then combined. Only practical
//! for small moduli; used by tests and the verification suite.

use std::collections::HashSet;

use crate::modular::{Modulus, Residue};

use super::{AdversaryError, CoalitionView};

/// For each target, `Some(value)` when exactly one value of the
/// functional is consistent with the view, `None` when several are.
/// Errors with `InconsistentView` when no assignment satisfies the
/// equations at all, which never happens for a view extracted from a
/// real transcript.
pub fn enumerate_determinations(
    view: &CoalitionView,
    targets: &[Vec<u64>],
) -> Result<Vec<Option<Residue>>, AdversaryError> {
    let m = view.modulus.require_prime()?;
    let num_vars = view.layout.num_vars();
    let mut base: Vec<SparseEq> = Vec::with_capacity(view.equations.len() + 1);
    let mut constrained = vec![false; num_vars];
    for eq in &view.equations {
        let terms: Vec<(usize, u64)> = eq
            .coeffs
            .iter()
            .enumerate()
            .filter(|&(_, &c)| c != 0)
            .map(|(i, &c)| (i, c))
            .collect();
        if terms.is_empty() {
            if eq.rhs != 0 {
                return Err(AdversaryError::InconsistentView);
            }
            continue;
        }
        for &(i, _) in &terms {
            constrained[i] = true;
        }
        base.push(SparseEq { terms, rhs: eq.rhs });
    }
    if !satisfiable(m, num_vars, &base) {
        return Err(AdversaryError::InconsistentView);
    }

    let mut verdicts = Vec::with_capacity(targets.len());
    for target in targets {
        // a variable outside every equation ranges over all of Z_M, so
        // a target touching one can reach any value
        if target
            .iter()
            .enumerate()
            .any(|(i, &c)| c != 0 && !constrained[i])
        {
            verdicts.push(None);
            continue;
        }
        let terms: Vec<(usize, u64)> = target
            .iter()
            .enumerate()
            .filter(|&(_, &c)| c != 0)
            .map(|(i, &c)| (i, c))
            .collect();
        if terms.is_empty() {
            verdicts.push(Some(0));
            continue;
        }
        let mut achieved = None;
        let mut unique = true;
        for v in 0..m.get() {
            base.push(SparseEq { terms: terms.clone(), rhs: v });
            let sat = satisfiable(m, num_vars, &base);
            base.pop();
            if sat {
                if achieved.is_some() {
                    unique = false;
                    break;
                }
                achieved = Some(v);
            }
        }
        verdicts.push(if unique { achieved } else { None });
    }
    Ok(verdicts)
}

struct SparseEq {
    terms: Vec<(usize, u64)>,
    rhs: u64,
}

/// Whether any assignment over Z_M satisfies every equation.
fn satisfiable(m: Modulus, num_vars: usize, equations: &[SparseEq]) -> bool {
    // peel off the few equations that glue otherwise small variable
    // components together (the announced-sum equation and an input
    // probe): while the largest component is too big to enumerate, mark
    // spanning whichever equation shrinks it the most
    const COMPONENT_LIMIT: usize = 10;
    const MAX_SPANNING: usize = 3;
    let mut spanning = vec![false; equations.len()];
    let mut uf = UnionFind::new(num_vars);
    loop {
        let max_size = components(&mut uf, num_vars, equations, &spanning, None);
        if max_size <= COMPONENT_LIMIT
            || spanning.iter().filter(|&&s| s).count() >= MAX_SPANNING
        {
            break;
        }
        // prefer the equation whose removal shrinks the component the
        // most; on ties the widest one, since two wide equations can
        // mask each other's effect until both are set aside
        let mut best: Option<(usize, usize, usize)> = None;
        for e in 0..equations.len() {
            if spanning[e] || equations[e].terms.len() < 2 {
                continue;
            }
            let size = components(&mut uf, num_vars, equations, &spanning, Some(e));
            let width = equations[e].terms.len();
            if best.is_none_or(|(_, s, w)| size < s || (size == s && width > w)) {
                best = Some((e, size, width));
            }
        }
        match best {
            Some((e, _, _)) => spanning[e] = true,
            None => break,
        }
    }
    components(&mut uf, num_vars, equations, &spanning, None);
    let spanning_eqs: Vec<usize> = (0..equations.len()).filter(|&e| spanning[e]).collect();
    // the combination table is M^s entries; views have at most the
    // announced-sum equation plus one probe here, so this never trips
    if spanning_eqs.len() > 3 {
        return dfs_satisfiable(m, num_vars, equations);
    }
    let states = (m.get() as usize).pow(spanning_eqs.len() as u32);

    // group variables into components; each non-spanning equation lies
    // entirely inside one component
    let mut comp_vars: Vec<Vec<usize>> = Vec::new();
    let mut comp_of = vec![usize::MAX; num_vars];
    for eq in equations {
        // spanning equations may introduce lone variables, so every
        // equation's variables are assigned to a component
        for &(i, _) in &eq.terms {
            let root = uf.find(i);
            if comp_of[root] == usize::MAX {
                comp_of[root] = comp_vars.len();
                comp_vars.push(Vec::new());
            }
            let comp = comp_of[root];
            if !comp_vars[comp].contains(&i) {
                comp_vars[comp].push(i);
            }
        }
    }

    // achievable contribution vectors per component, combined over all
    // components; satisfiable when every component has some assignment
    // and the spanning right-hand sides are jointly reachable
    let mut reachable = vec![false; states];
    reachable[0] = true;
    for vars in &comp_vars {
        let contributions =
            component_contributions(m, equations, &spanning, &spanning_eqs, vars, states);
        if contributions.is_empty() {
            return false;
        }
        let mut next = vec![false; states];
        for (idx, &r) in reachable.iter().enumerate() {
            if !r {
                continue;
            }
            for &c in &contributions {
                next[combine(idx, c, m.get() as usize, spanning_eqs.len())] = true;
            }
        }
        reachable = next;
    }
    let mut want = 0usize;
    for &e in spanning_eqs.iter().rev() {
        want = want * m.get() as usize + equations[e].rhs as usize;
    }
    reachable[want]
}

/// Rebuilds `uf` from the equations that are neither spanning nor
/// `skip`, returning the size of the largest variable component.
fn components(
    uf: &mut UnionFind,
    num_vars: usize,
    equations: &[SparseEq],
    spanning: &[bool],
    skip: Option<usize>,
) -> usize {
    uf.reset();
    for (e, eq) in equations.iter().enumerate() {
        if spanning[e] || skip == Some(e) {
            continue;
        }
        for w in eq.terms.windows(2) {
            uf.union(w[0].0, w[1].0);
        }
    }
    let mut size = vec![0usize; num_vars];
    let mut max = 0;
    for i in 0..num_vars {
        let root = uf.find(i);
        size[root] += 1;
        max = max.max(size[root]);
    }
    max
}

/// Adds two contribution indices digit-wise mod M.
fn combine(a: usize, b: usize, m: usize, digits: usize) -> usize {
    let (mut a, mut b) = (a, b);
    let mut out = 0usize;
    let mut scale = 1usize;
    for _ in 0..digits {
        out += ((a + b) % m) * scale;
        a /= m;
        b /= m;
        scale *= m;
    }
    out
}

/// Enumerates every assignment of one component consistent with its
/// local equations, returning the distinct vectors of partial sums it
/// can contribute to the spanning equations. Stops early once every
/// vector has been seen.
fn component_contributions(
    m: Modulus,
    equations: &[SparseEq],
    spanning: &[bool],
    spanning_eqs: &[usize],
    vars: &[usize],
    states: usize,
) -> Vec<usize> {
    let local: Vec<usize> = (0..equations.len())
        .filter(|&e| !spanning[e] && equations[e].terms.iter().any(|&(i, _)| vars.contains(&i)))
        .collect();
    let index_of = |i: usize| vars.iter().position(|&v| v == i).expect("component variable");
    let local_eqs: Vec<SparseEq> = local
        .iter()
        .map(|&e| SparseEq {
            terms: equations[e]
                .terms
                .iter()
                .map(|&(i, c)| (index_of(i), c))
                .collect(),
            rhs: equations[e].rhs,
        })
        .collect();
    let coupling: Vec<Vec<(usize, u64)>> = spanning_eqs
        .iter()
        .map(|&e| {
            equations[e]
                .terms
                .iter()
                .filter(|&&(i, _)| vars.contains(&i))
                .map(|&(i, c)| (index_of(i), c))
                .collect()
        })
        .collect();

    let mut search = Search::new(m, vars.len(), &local_eqs);
    let mut seen = HashSet::new();
    search.enumerate(&mut |assign| {
        let mut idx = 0usize;
        let mut scale = 1usize;
        for row in &coupling {
            let s = m.sum(
                row.iter()
                    .map(|&(i, c)| m.mul(c, assign[i].expect("assigned at leaf"))),
            );
            idx += s as usize * scale;
            scale *= m.get() as usize;
        }
        seen.insert(idx);
        seen.len() == states // everything reachable, stop enumerating
    });
    seen.into_iter().collect()
}

/// Plain depth-first satisfiability over the whole system; fallback for
/// systems that do not decompose.
fn dfs_satisfiable(m: Modulus, num_vars: usize, equations: &[SparseEq]) -> bool {
    let mut found = false;
    let mut search = Search::new(m, num_vars, equations);
    search.enumerate(&mut |_| {
        found = true;
        true
    });
    found
}

struct EqState {
    unassigned: usize,
    acc: u64,
}

/// Backtracking enumeration of assignments satisfying a set of sparse
/// equations. Unit propagation forces the last unassigned variable of
/// an equation; branching picks a variable from the tightest remaining
/// equation so contradictions surface early. Variables outside every
/// equation are left unassigned; callers see `None` for them.
struct Search<'a> {
    m: Modulus,
    equations: &'a [SparseEq],
    var_eqs: Vec<Vec<(usize, u64)>>,
    states: Vec<EqState>,
    free_vars: Vec<usize>,
    assign: Vec<Option<u64>>,
    stop: bool,
}

impl<'a> Search<'a> {
    fn new(m: Modulus, num_vars: usize, equations: &'a [SparseEq]) -> Self {
        let mut var_eqs: Vec<Vec<(usize, u64)>> = vec![Vec::new(); num_vars];
        for (e, eq) in equations.iter().enumerate() {
            for &(i, c) in &eq.terms {
                var_eqs[i].push((e, c));
            }
        }
        let states = equations
            .iter()
            .map(|eq| EqState { unassigned: eq.terms.len(), acc: 0 })
            .collect();
        let free_vars = (0..num_vars).filter(|&i| var_eqs[i].is_empty()).collect();
        Search {
            m,
            equations,
            var_eqs,
            states,
            free_vars,
            assign: vec![None; num_vars],
            stop: false,
        }
    }

    /// Calls `leaf` for every satisfying assignment until it returns
    /// true (meaning: seen enough).
    fn enumerate(&mut self, leaf: &mut dyn FnMut(&[Option<u64>]) -> bool) {
        let seed_units: Vec<usize> = (0..self.equations.len())
            .filter(|&e| self.equations[e].terms.len() == 1)
            .collect();
        self.recurse(seed_units, leaf);
    }

    /// Sets variable `i`, updating every equation it participates in.
    /// Equations left with one unassigned variable are queued for unit
    /// propagation; those left with none report whether they hold.
    fn set(&mut self, i: usize, v: u64, units: &mut Vec<usize>) -> bool {
        self.assign[i] = Some(v);
        let mut ok = true;
        for idx in 0..self.var_eqs[i].len() {
            let (e, c) = self.var_eqs[i][idx];
            let state = &mut self.states[e];
            state.acc = self.m.add(state.acc, self.m.mul(c, v));
            state.unassigned -= 1;
            match state.unassigned {
                0 => ok &= state.acc == self.equations[e].rhs,
                1 => units.push(e),
                _ => {}
            }
        }
        ok
    }

    fn unset(&mut self, i: usize) {
        let v = self.assign[i].take().expect("variable was assigned");
        for idx in 0..self.var_eqs[i].len() {
            let (e, c) = self.var_eqs[i][idx];
            let state = &mut self.states[e];
            state.acc = self.m.sub(state.acc, self.m.mul(c, v));
            state.unassigned += 1;
        }
    }

    /// Drains the unit queue, forcing each equation's last unassigned
    /// variable. Returns the trail of forced variables and whether a
    /// contradiction was hit; the caller unwinds the trail either way.
    fn propagate(&mut self, mut units: Vec<usize>) -> (Vec<usize>, bool) {
        let mut trail = Vec::new();
        while let Some(e) = units.pop() {
            if self.states[e].unassigned != 1 {
                continue; // stale entry, settled by an earlier propagation
            }
            let (i, c) = *self.equations[e]
                .terms
                .iter()
                .find(|&&(var, _)| self.assign[var].is_none())
                .expect("one unassigned variable remains");
            let inv = self.m.inv(c).expect("prime modulus");
            let forced = self
                .m
                .mul(inv, self.m.sub(self.equations[e].rhs, self.states[e].acc));
            let ok = self.set(i, forced, &mut units);
            trail.push(i);
            if !ok {
                return (trail, false);
            }
        }
        (trail, true)
    }

    /// A variable from the equation with the fewest unassigned
    /// variables left, falling back to variables outside every
    /// equation so leaves always carry full assignments.
    fn pick_branch_var(&self) -> Option<usize> {
        self.states
            .iter()
            .enumerate()
            .filter(|(_, s)| s.unassigned > 0)
            .min_by_key(|(_, s)| s.unassigned)
            .map(|(e, _)| {
                self.equations[e]
                    .terms
                    .iter()
                    .find(|&&(var, _)| self.assign[var].is_none())
                    .expect("equation has an unassigned variable")
                    .0
            })
            .or_else(|| {
                self.free_vars
                    .iter()
                    .copied()
                    .find(|&i| self.assign[i].is_none())
            })
    }

    fn recurse(&mut self, units: Vec<usize>, leaf: &mut dyn FnMut(&[Option<u64>]) -> bool) {
        let (trail, ok) = self.propagate(units);
        if ok {
            match self.pick_branch_var() {
                None => self.stop = leaf(&self.assign),
                Some(i) => {
                    for v in 0..self.m.get() {
                        let mut units = Vec::new();
                        let ok = self.set(i, v, &mut units);
                        if ok {
                            self.recurse(units, leaf);
                        }
                        self.unset(i);
                        if self.stop {
                            break;
                        }
                    }
                }
            }
        }
        for i in trail.into_iter().rev() {
            self.unset(i);
        }
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect() }
    }

    fn reset(&mut self) {
        for (i, p) in self.parent.iter_mut().enumerate() {
            *p = i;
        }
    }

    fn find(&mut self, i: usize) -> usize {
        if self.parent[i] != i {
            let root = self.find(self.parent[i]);
            self.parent[i] = root;
        }
        self.parent[i]
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra] = rb;
        }
    }
}
