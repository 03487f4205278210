use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use num_rational::Rational64;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Bit set over the variables of a [`VarTable`].
pub type VarSet = u32;

/// Ordered list of random-variable names appearing in entropy terms.
///
/// The order is the printing order, so `["W","X","Y","Z"]` prints `H(WX|Z)`.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VarTable {
    names: Vec<String>,
    /// Markov chains `A − B − C` assumed when rendering.
    chains: Vec<[VarSet; 3]>,
}

impl VarTable {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Self {
        Self { names: names.into_iter().map(Into::into).collect(), chains: Vec::new() }
    }

    /// Records a chain so that rendering matches atoms modulo it.
    pub fn assume_chain(&mut self, a: VarSet, b: VarSet, c: VarSet) {
        if !self.chains.contains(&[a, b, c]) {
            self.chains.push([a, b, c]);
        }
    }

    pub fn chains(&self) -> &[[VarSet; 3]] {
        &self.chains
    }

    fn reduce(&self, e: &EntropyExpr) -> EntropyExpr {
        self.chains.iter().fold(e.clone(), |acc, &[a, b, c]| acc.apply_markov(a, b, c))
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    fn intern(&mut self, name: &str) -> Result<VarSet> {
        if let Some(i) = self.names.iter().position(|n| n == name) {
            return Ok(1 << i);
        }
        if self.names.len() >= 31 {
            return Err(Error::Parse("too many entropy variables".into()));
        }
        self.names.push(name.to_string());
        Ok(1 << (self.names.len() - 1))
    }

    pub fn set_of(&mut self, names: &[&str]) -> Result<VarSet> {
        names.iter().try_fold(0, |acc, n| Ok(acc | self.intern(n)?))
    }

    pub fn members(&self, s: VarSet) -> Vec<&str> {
        (0..self.names.len()).filter(|i| s & (1 << i) != 0).map(|i| self.names[i].as_str()).collect()
    }

    fn render_set(&self, s: VarSet) -> String {
        let m = self.members(s);
        if self.names.iter().all(|n| n.chars().count() == 1) {
            m.concat()
        } else {
            m.join(",")
        }
    }
}

/// Something that can put numbers on entropies and opaque symbols.
pub trait Valuation {
    fn entropy(&self, vars: &[&str]) -> Result<f64>;
    fn symbol(&self, name: &str) -> Result<f64> {
        Err(Error::Unevaluable(name.to_string()))
    }
}

impl<T: crate::Scalar> Valuation for crate::prob::Joint<T> {
    fn entropy(&self, vars: &[&str]) -> Result<f64> {
        self.entropy_of(vars).map(|h| h.as_f64()).map_err(|e| match e {
            Error::UnknownVariable(v) => Error::Unevaluable(format!("H({v})")),
            other => other,
        })
    }
}

/// Named numeric constants.
#[derive(Debug, Clone, Default)]
pub struct SymbolTable(pub BTreeMap<String, f64>);

impl Valuation for SymbolTable {
    fn entropy(&self, vars: &[&str]) -> Result<f64> {
        Err(Error::Unevaluable(format!("H({})", vars.join(","))))
    }
    fn symbol(&self, name: &str) -> Result<f64> {
        self.0.get(name).copied().ok_or_else(|| Error::Unevaluable(name.to_string()))
    }
}

/// A distribution for entropies plus a table for symbols.
pub struct WithSymbols<'a, V: Valuation>(pub &'a V, pub &'a SymbolTable);

impl<V: Valuation> Valuation for WithSymbols<'_, V> {
    fn entropy(&self, vars: &[&str]) -> Result<f64> {
        self.0.entropy(vars)
    }
    fn symbol(&self, name: &str) -> Result<f64> {
        self.1.symbol(name)
    }
}

/// Flat signed sum of joint entropies, opaque symbols and a rational
/// constant. Conditional entropies and mutual informations are expanded into
/// joint entropies on construction, so structurally equal quantities compare
/// equal.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct EntropyExpr {
    pub constant: Rational64,
    pub symbols: BTreeMap<String, Rational64>,
    pub entropies: BTreeMap<VarSet, Rational64>,
}

fn bump<K: Ord>(map: &mut BTreeMap<K, Rational64>, k: K, c: Rational64) {
    let e = map.entry(k).or_insert_with(Rational64::zero);
    *e += c;
}

fn prune<K: Ord>(map: &mut BTreeMap<K, Rational64>) {
    map.retain(|_, v| !v.is_zero());
}

impl EntropyExpr {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: Rational64) -> Self {
        Self { constant: c, ..Self::default() }
    }

    pub fn h(s: VarSet) -> Self {
        let mut e = Self::zero();
        e.add_h(s, Rational64::one());
        e
    }

    /// `H(A|B)`.
    pub fn cond_h(a: VarSet, b: VarSet) -> Self {
        let mut e = Self::zero();
        e.add_h(a | b, Rational64::one());
        e.add_h(b, -Rational64::one());
        e
    }

    /// `I(A;B|C)`.
    pub fn mi(a: VarSet, b: VarSet, c: VarSet) -> Self {
        let mut e = Self::zero();
        let one = Rational64::one();
        e.add_h(a | c, one);
        e.add_h(b | c, one);
        e.add_h(a | b | c, -one);
        e.add_h(c, -one);
        e
    }

    fn add_h(&mut self, s: VarSet, c: Rational64) {
        if s != 0 {
            bump(&mut self.entropies, s, c);
            prune(&mut self.entropies);
        }
    }

    pub fn is_zero(&self) -> bool {
        self.constant.is_zero() && self.symbols.is_empty() && self.entropies.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.symbols.is_empty() && self.entropies.is_empty()
    }

    pub fn support(&self) -> VarSet {
        self.entropies.keys().fold(0, |a, s| a | s)
    }

    pub fn add(&self, o: &Self) -> Self {
        let mut r = self.clone();
        r.constant += o.constant;
        for (k, v) in &o.symbols {
            bump(&mut r.symbols, k.clone(), *v);
        }
        for (k, v) in &o.entropies {
            bump(&mut r.entropies, *k, *v);
        }
        prune(&mut r.symbols);
        prune(&mut r.entropies);
        r
    }

    pub fn scale(&self, c: Rational64) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        Self {
            constant: self.constant * c,
            symbols: self.symbols.iter().map(|(k, v)| (k.clone(), v * c)).collect(),
            entropies: self.entropies.iter().map(|(k, v)| (*k, v * c)).collect(),
        }
    }

    pub fn neg(&self) -> Self {
        self.scale(-Rational64::one())
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    /// Applies the Markov chain `A − B − C`: every `H(A'BC')` with nonempty
    /// `A' ⊆ A`, `C' ⊆ C` becomes `H(A'B) + H(BC') − H(B)`.
    pub fn apply_markov(&self, a: VarSet, b: VarSet, c: VarSet) -> Self {
        let all = a | b | c;
        let mut cur = self.clone();
        loop {
            let hit = cur.entropies.iter().find(|(&s, _)| {
                s & !all == 0 && s & b == b && s & a != 0 && s & c != 0
            });
            let Some((&s, &coef)) = hit else { return cur };
            cur.entropies.remove(&s);
            let (ap, cp) = (s & a, s & c);
            cur.add_h(ap | b, coef);
            cur.add_h(b | cp, coef);
            cur.add_h(b, -coef);
        }
    }

    pub fn evaluate(&self, table: &VarTable, v: &dyn Valuation) -> Result<f64> {
        let mut total = self.constant.to_f64().unwrap_or(f64::NAN);
        for (name, c) in &self.symbols {
            total += c.to_f64().unwrap_or(f64::NAN) * v.symbol(name)?;
        }
        for (&s, c) in &self.entropies {
            total += c.to_f64().unwrap_or(f64::NAN) * v.entropy(&table.members(s))?;
        }
        Ok(total)
    }

    /// Canonical text, decomposing the entropy part into as few conditional
    /// entropies and mutual informations as possible.
    pub fn render(&self, table: &VarTable) -> String {
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        let reduced = table.reduce(self);
        match decompose(&reduced.entropies, table) {
            Some(atoms) => {
                for (sign, a) in atoms {
                    if sign > 0 { pos.push(a) } else { neg.push(a) }
                }
            }
            None => {
                for (&s, c) in &self.entropies {
                    let a = format!("H({})", table.render_set(s));
                    push_scaled(&mut pos, &mut neg, *c, a);
                }
            }
        }
        for (name, c) in &self.symbols {
            push_scaled(&mut pos, &mut neg, *c, name.clone());
        }
        pos.sort();
        neg.sort();
        let mut out = String::new();
        for p in &pos {
            if !out.is_empty() {
                out.push('+');
            }
            out.push_str(p);
        }
        for n in &neg {
            out.push('-');
            out.push_str(n);
        }
        if !self.constant.is_zero() || out.is_empty() {
            let c = self.constant;
            if out.is_empty() {
                out = render_rational(c);
            } else if c.is_positive() {
                let _ = write!(out, "+{}", render_rational(c));
            } else {
                let _ = write!(out, "-{}", render_rational(-c));
            }
        }
        out
    }
}

fn push_scaled(pos: &mut Vec<String>, neg: &mut Vec<String>, c: Rational64, atom: String) {
    let mag = c.abs();
    let text = if mag.is_one() { atom } else { format!("{}{}", render_rational(mag), atom) };
    if c.is_positive() { pos.push(text) } else { neg.push(text) }
}

pub fn render_rational(c: Rational64) -> String {
    if c.is_integer() {
        c.to_integer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

struct Atom {
    text: String,
    cond_vars: u32,
    vec: Vec<i64>,
}

fn atom_table(universe: VarSet, table: &VarTable) -> Vec<Atom> {
    let bits: Vec<u32> = (0..32).filter(|i| universe & (1 << i) != 0).collect();
    let k = bits.len();
    let expand = |local: u32| -> VarSet {
        bits.iter().enumerate().filter(|(j, _)| local & (1 << j) != 0).fold(0, |a, (_, b)| a | (1 << b))
    };
    let dense = |e: &EntropyExpr| -> Vec<i64> {
        let r = table.reduce(e);
        let mut v = vec![0i64; 1 << k];
        for (local, slot) in v.iter_mut().enumerate() {
            if let Some(c) = r.entropies.get(&expand(local as u32)) {
                *slot = c.to_integer();
            }
        }
        v
    };
    let full = (1u32 << k) - 1;
    let mut atoms = Vec::new();
    for a in 1..=full {
        let rest = full & !a;
        let mut b = rest;
        loop {
            let (ga, gb) = (expand(a), expand(b));
            let text = if b == 0 {
                format!("H({})", table.render_set(ga))
            } else {
                format!("H({}|{})", table.render_set(ga), table.render_set(gb))
            };
            atoms.push(Atom { text, cond_vars: b.count_ones(), vec: dense(&EntropyExpr::cond_h(ga, gb)) });
            if b == 0 {
                break;
            }
            b = (b - 1) & rest;
        }
    }
    for a in 1..=full {
        let rest_a = full & !a;
        let mut b = rest_a;
        while b != 0 {
            // canonical side order: lowest variable on the left
            if a.trailing_zeros() < b.trailing_zeros() {
                let rest = rest_a & !b;
                let mut c = rest;
                loop {
                    let (ga, gb, gc) = (expand(a), expand(b), expand(c));
                    let text = if c == 0 {
                        format!("I({};{})", table.render_set(ga), table.render_set(gb))
                    } else {
                        format!(
                            "I({};{}|{})",
                            table.render_set(ga),
                            table.render_set(gb),
                            table.render_set(gc)
                        )
                    };
                    atoms.push(Atom { text, cond_vars: c.count_ones(), vec: dense(&EntropyExpr::mi(ga, gb, gc)) });
                    if c == 0 {
                        break;
                    }
                    c = (c - 1) & rest;
                }
            }
            b = (b - 1) & rest_a;
        }
    }
    atoms
}

type Combo = Vec<(i8, usize)>;

fn combo_key(c: &Combo, atoms: &[Atom]) -> (u32, String) {
    let cond = c.iter().map(|&(_, i)| atoms[i].cond_vars).sum();
    let mut pos: Vec<&str> = c.iter().filter(|x| x.0 > 0).map(|&(_, i)| atoms[i].text.as_str()).collect();
    let mut neg: Vec<&str> = c.iter().filter(|x| x.0 < 0).map(|&(_, i)| atoms[i].text.as_str()).collect();
    pos.sort();
    neg.sort();
    (cond, format!("{}|{}", pos.join("+"), neg.join("-")))
}

/// Fewest-atom decomposition (at most three atoms with unit signs). Ties go
/// to fewer conditioning variables, then to the lexicographically smaller
/// rendering. `None` when no such decomposition exists.
fn decompose(ent: &BTreeMap<VarSet, Rational64>, table: &VarTable) -> Option<Vec<(i8, String)>> {
    if ent.is_empty() {
        return Some(Vec::new());
    }
    if ent.values().any(|c| !c.is_integer()) {
        return None;
    }
    let universe = ent.keys().fold(0, |a, s| a | s);
    if universe.count_ones() > 5 {
        return None;
    }
    let atoms = atom_table(universe, table);
    let k = universe.count_ones();
    let bits: Vec<u32> = (0..32).filter(|i| universe & (1 << i) != 0).collect();
    let mut target = vec![0i64; 1 << k];
    for (local, slot) in target.iter_mut().enumerate() {
        let g = bits.iter().enumerate().filter(|(j, _)| local & (1 << j) != 0).fold(0, |a, (_, b)| a | (1 << b));
        if let Some(c) = ent.get(&g) {
            *slot = c.to_integer();
        }
    }
    let mut index: HashMap<&[i64], Vec<usize>> = HashMap::new();
    for (i, a) in atoms.iter().enumerate() {
        index.entry(a.vec.as_slice()).or_default().push(i);
    }
    let negv = |v: &[i64]| v.iter().map(|x| -x).collect::<Vec<_>>();
    let lookup = |v: &[i64]| -> Vec<(i8, usize)> {
        let mut out = Vec::new();
        if let Some(is) = index.get(v) {
            out.extend(is.iter().map(|&i| (1i8, i)));
        }
        if let Some(is) = index.get(negv(v).as_slice()) {
            out.extend(is.iter().map(|&i| (-1i8, i)));
        }
        out
    };
    let sub = |v: &[i64], s: i8, a: &Atom| -> Vec<i64> {
        v.iter().zip(&a.vec).map(|(x, y)| x - (s as i64) * y).collect()
    };

    let mut found: Vec<Combo> = lookup(&target).into_iter().map(|x| vec![x]).collect();
    if found.is_empty() {
        for (i, a) in atoms.iter().enumerate() {
            for s in [1i8, -1] {
                let r = sub(&target, s, a);
                for hit in lookup(&r) {
                    found.push(vec![(s, i), hit]);
                }
            }
        }
    }
    if found.is_empty() {
        for (i, a) in atoms.iter().enumerate() {
            for s in [1i8, -1] {
                let r1 = sub(&target, s, a);
                for (j, b) in atoms.iter().enumerate().skip(i + 1) {
                    for t in [1i8, -1] {
                        let r2 = sub(&r1, t, b);
                        for hit in lookup(&r2) {
                            if hit.1 > j {
                                found.push(vec![(s, i), (t, j), hit]);
                            }
                        }
                    }
                }
            }
        }
    }
    let best = found.into_iter().min_by(|a, b| combo_key(a, &atoms).cmp(&combo_key(b, &atoms)))?;
    Some(best.into_iter().map(|(s, i)| (s, atoms[i].text.clone())).collect())
}

// ---------------------------------------------------------------- parsing

struct Lexer<'a> {
    s: &'a [u8],
    i: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        while self.i < self.s.len() && self.s[self.i].is_ascii_whitespace() {
            self.i += 1;
        }
    }
    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.i).copied()
    }
    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.i += 1;
            true
        } else {
            false
        }
    }
    fn err(&self, what: &str) -> Error {
        Error::Parse(format!(
            "{what} at column {} in `{}`",
            self.i + 1,
            String::from_utf8_lossy(self.s)
        ))
    }
}

fn parse_number(lx: &mut Lexer) -> Result<Rational64> {
    lx.skip_ws();
    let start = lx.i;
    while lx.i < lx.s.len() && (lx.s[lx.i].is_ascii_digit() || lx.s[lx.i] == b'.') {
        lx.i += 1;
    }
    let text = std::str::from_utf8(&lx.s[start..lx.i]).unwrap_or("");
    let mut value = decimal(text).ok_or_else(|| lx.err("bad number"))?;
    if lx.eat(b'/') {
        lx.skip_ws();
        let s2 = lx.i;
        while lx.i < lx.s.len() && lx.s[lx.i].is_ascii_digit() {
            lx.i += 1;
        }
        let d: i64 = std::str::from_utf8(&lx.s[s2..lx.i])
            .ok()
            .and_then(|t| t.parse().ok())
            .filter(|d| *d != 0)
            .ok_or_else(|| lx.err("bad denominator"))?;
        value /= Rational64::from_integer(d);
    }
    Ok(value)
}

/// Exact rational value of a decimal literal such as `0.125`.
pub fn decimal(text: &str) -> Option<Rational64> {
    let (int, frac) = match text.split_once('.') {
        Some((a, b)) => (a, b),
        None => (text, ""),
    };
    if int.is_empty() && frac.is_empty() || frac.len() > 15 {
        return None;
    }
    let digits = format!("{int}{frac}");
    let n: i64 = digits.parse().ok()?;
    Some(Rational64::new(n, 10i64.pow(frac.len() as u32)))
}

/// Parses a variable list such as `WX`, `X1X2` or `A,B`.
fn parse_varlist(lx: &mut Lexer, table: &mut VarTable, stops: &[u8]) -> Result<VarSet> {
    let mut set = 0;
    loop {
        match lx.peek() {
            Some(c) if stops.contains(&c) => return Ok(set),
            Some(b',') => {
                lx.i += 1;
            }
            Some(c) if c.is_ascii_uppercase() => {
                let start = lx.i;
                lx.i += 1;
                while lx.i < lx.s.len()
                    && (lx.s[lx.i].is_ascii_lowercase() || lx.s[lx.i].is_ascii_digit() || lx.s[lx.i] == b'_')
                {
                    lx.i += 1;
                }
                let name = std::str::from_utf8(&lx.s[start..lx.i]).unwrap_or("");
                let bit = table.intern(name)?;
                if set & bit != 0 {
                    return Err(lx.err("repeated variable"));
                }
                set |= bit;
            }
            _ => return Err(lx.err("expected variable name")),
        }
    }
}

fn parse_atom(lx: &mut Lexer, table: &mut VarTable) -> Result<EntropyExpr> {
    match lx.peek() {
        Some(c) if c.is_ascii_digit() || c == b'.' => Ok(EntropyExpr::constant(parse_number(lx)?)),
        Some(b'(') => {
            lx.i += 1;
            let e = parse_sum(lx, table)?;
            if !lx.eat(b')') {
                return Err(lx.err("expected `)`"));
            }
            Ok(e)
        }
        Some(b'H') if lx.s.get(lx.i + 1).map(|c| *c == b'(').unwrap_or(false) => {
            lx.i += 2;
            let a = parse_varlist(lx, table, b"|)")?;
            let b = if lx.eat(b'|') { parse_varlist(lx, table, b")")? } else { 0 };
            if !lx.eat(b')') {
                return Err(lx.err("expected `)`"));
            }
            if a == 0 || a & b != 0 {
                return Err(lx.err("malformed entropy term"));
            }
            Ok(EntropyExpr::cond_h(a, b))
        }
        Some(b'I') if lx.s.get(lx.i + 1).map(|c| *c == b'(').unwrap_or(false) => {
            lx.i += 2;
            let a = parse_varlist(lx, table, b";")?;
            lx.eat(b';');
            let b = parse_varlist(lx, table, b"|)")?;
            let c = if lx.eat(b'|') { parse_varlist(lx, table, b")")? } else { 0 };
            if !lx.eat(b')') {
                return Err(lx.err("expected `)`"));
            }
            if a == 0 || b == 0 || a & b != 0 || (a | b) & c != 0 {
                return Err(lx.err("malformed mutual information term"));
            }
            Ok(EntropyExpr::mi(a, b, c))
        }
        Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
            let start = lx.i;
            while lx.i < lx.s.len() && (lx.s[lx.i].is_ascii_alphanumeric() || lx.s[lx.i] == b'_') {
                lx.i += 1;
            }
            let name = String::from_utf8_lossy(&lx.s[start..lx.i]).into_owned();
            let mut e = EntropyExpr::zero();
            e.symbols.insert(name, Rational64::one());
            Ok(e)
        }
        _ => Err(lx.err("expected a term")),
    }
}

fn parse_term(lx: &mut Lexer, table: &mut VarTable) -> Result<EntropyExpr> {
    let first = parse_atom(lx, table)?;
    // `2 H(X)` or `2*H(X)`
    if first.is_constant() {
        let explicit = lx.eat(b'*');
        match lx.peek() {
            Some(c) if explicit || c.is_ascii_alphabetic() || c == b'(' => {
                let rest = parse_term(lx, table)?;
                return Ok(rest.scale(first.constant));
            }
            _ => {}
        }
    }
    Ok(first)
}

fn parse_sum(lx: &mut Lexer, table: &mut VarTable) -> Result<EntropyExpr> {
    let mut acc = EntropyExpr::zero();
    let mut sign = Rational64::one();
    if lx.eat(b'-') {
        sign = -sign;
    } else {
        lx.eat(b'+');
    }
    loop {
        let t = parse_term(lx, table)?;
        acc = acc.add(&t.scale(sign));
        if lx.eat(b'+') {
            sign = Rational64::one();
        } else if lx.eat(b'-') {
            sign = -Rational64::one();
        } else {
            return Ok(acc);
        }
    }
}

/// Parses text such as `H(WX|Y) - I(W;Z) + 0.5`.
pub fn parse_expr(text: &str, table: &mut VarTable) -> Result<EntropyExpr> {
    let mut lx = Lexer { s: text.as_bytes(), i: 0 };
    if lx.peek().is_none() {
        return Ok(EntropyExpr::zero());
    }
    let e = parse_sum(&mut lx, table)?;
    if lx.peek().is_some() {
        return Err(lx.err("trailing input"));
    }
    Ok(e)
}
