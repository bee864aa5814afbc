"""Source syntax for binary constraint rules and queries.

A rule has the shape ``head <- constraint <> body`` where head and body are
single atoms over one predicate each and the constraint is a conjunction of
linear (in)equalities over the rationals.  A query is ``atom : constraint``.
This module owns the data types (variables, linear terms, atomic propositions,
constraints, atoms, rules, queries, programs), the parser, normalization of
rules into the internal form (argument tuples that are disjoint sequences of
distinct variables), variable renaming, and printing.

Everything is immutable.  Rationals are ``fractions.Fraction`` throughout; no
floating point is used anywhere in the package.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Optional, Union

Rational = Fraction

# relations of canonical atomic propositions (term REL 0)
REL_EQ = "="
REL_LE = "<="
REL_LT = "<"

_SOURCE_RELS = ("=", "<=", "<", ">=", ">")


class ParseError(Exception):
    """Raised for syntax errors, arity mismatches, nonlinear terms and
    unsatisfiable rule constraints.  Carries an optional source position."""

    def __init__(self, message: str, line: Optional[int] = None, col: Optional[int] = None):
        self.message = message
        self.line = line
        self.col = col
        where = f"{line}:{col}: " if line is not None else ""
        super().__init__(where + message)


@dataclass(frozen=True, order=True)
class Var:
    """A variable.  ``gen`` is the renaming generation; user-written variables
    have generation 0."""

    name: str
    gen: int = 0

    def __str__(self) -> str:
        return self.name if self.gen == 0 else f"{self.name}#{self.gen}"


_SMALL_FRACTIONS = {i: Fraction(i) for i in range(-8, 9)}
_F0 = _SMALL_FRACTIONS[0]
_F1 = _SMALL_FRACTIONS[1]
_NEG_F1 = _SMALL_FRACTIONS[-1]


def _as_fraction(value) -> Fraction:
    if isinstance(value, Fraction):
        return value
    if isinstance(value, int):
        cached = _SMALL_FRACTIONS.get(value)
        return cached if cached is not None else Fraction(value)
    raise TypeError(f"expected an exact rational, got {type(value).__name__}")


@dataclass(frozen=True, eq=False)
class LinTerm:
    """A linear term: sum of coefficient*variable pairs plus a constant.

    ``coeffs`` is sorted by variable and contains no zero coefficients, so
    structural equality is semantic equality.  Equality and hashing go through
    an integer key (variable names, generations, numerators, denominators):
    Fraction's own comparisons funnel through numeric-tower instance checks
    that dominate profiles at elimination scale.
    """

    coeffs: tuple[tuple[Var, Fraction], ...] = ()
    const: Fraction = Fraction(0)

    _key = None  # per-instance cache, set lazily past the frozen guard
    _hash = None

    def key(self) -> tuple:
        k = self._key
        if k is None:
            k = (
                tuple((v.name, v.gen, c.numerator, c.denominator)
                      for v, c in self.coeffs),
                self.const.numerator,
                self.const.denominator,
            )
            object.__setattr__(self, "_key", k)
        return k

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, LinTerm):
            return NotImplemented
        return self.key() == other.key()

    def __hash__(self):
        h = self._hash
        if h is None:
            h = hash(self.key())
            object.__setattr__(self, "_hash", h)
        return h

    @staticmethod
    def make(coeffs: Mapping[Var, Fraction], const=0) -> "LinTerm":
        items = tuple(sorted((v, _as_fraction(c)) for v, c in coeffs.items() if c != 0))
        return LinTerm(items, _as_fraction(const))

    @staticmethod
    def of_var(v: Var) -> "LinTerm":
        return LinTerm(((v, _F1),), _F0)

    @staticmethod
    def of_const(value) -> "LinTerm":
        return LinTerm((), _as_fraction(value))

    def coeff(self, v: Var) -> Fraction:
        for var, c in self.coeffs:
            if var == v:
                return c
        return _F0

    @property
    def variables(self) -> frozenset[Var]:
        return frozenset(v for v, _ in self.coeffs)

    def is_var(self) -> Optional[Var]:
        """The variable if this term is exactly one variable, else None."""
        if self.const == 0 and len(self.coeffs) == 1 and self.coeffs[0][1] == 1:
            return self.coeffs[0][0]
        return None

    def __add__(self, other: "LinTerm") -> "LinTerm":
        acc = dict(self.coeffs)
        for v, c in other.coeffs:
            acc[v] = acc.get(v, _F0) + c
        return LinTerm.make(acc, self.const + other.const)

    def __neg__(self) -> "LinTerm":
        return LinTerm(tuple((v, -c) for v, c in self.coeffs), -self.const)

    def __sub__(self, other: "LinTerm") -> "LinTerm":
        return self + (-other)

    def scaled(self, factor) -> "LinTerm":
        factor = _as_fraction(factor)
        if factor == 0:
            return LinTerm.of_const(0)
        return LinTerm(tuple((v, c * factor) for v, c in self.coeffs), self.const * factor)

    def substitute(self, mapping: Mapping[Var, "LinTerm"]) -> "LinTerm":
        """Replace variables by linear terms (or by constants wrapped by the
        caller).  Variables not in the mapping are kept."""
        if not any(v in mapping for v, _ in self.coeffs):
            return self
        acc: dict[Var, Fraction] = {}
        const = self.const
        for v, c in self.coeffs:
            t = mapping.get(v)
            if t is None:
                acc[v] = acc.get(v, _F0) + c
            else:
                const += t.const * c
                for w, d in t.coeffs:
                    acc[w] = acc.get(w, _F0) + d * c
        return LinTerm.make(acc, const)

    def rename(self, mapping: Mapping[Var, Var]) -> "LinTerm":
        return LinTerm.make({mapping.get(v, v): c for v, c in self.coeffs}, self.const)

    def eval(self, valuation: Mapping[Var, Fraction]) -> Fraction:
        total = self.const
        for v, c in self.coeffs:
            if v not in valuation:
                raise KeyError(v)
            total += c * _as_fraction(valuation[v])
        return total

    def __str__(self) -> str:
        if not self.coeffs:
            return str(self.const)
        parts = []
        for i, (v, c) in enumerate(self.coeffs):
            mag = abs(c)
            body = str(v) if mag == 1 else f"{mag}*{v}"
            if i == 0:
                parts.append(body if c > 0 else f"-{body}")
            else:
                parts.append((" + " if c > 0 else " - ") + body)
        if self.const != 0:
            parts.append((" + " if self.const > 0 else " - ") + str(abs(self.const)))
        return "".join(parts)


@dataclass(frozen=True, eq=False)
class AtomicProp:
    """A canonical atomic proposition ``term REL 0`` with REL in {=, <=, <}.

    Built through :func:`compare`, which moves everything to the left side and
    scales so the leading variable coefficient has absolute value 1 (and is
    positive for equalities).  All five source relations reduce to this form.
    """

    term: LinTerm
    rel: str

    _hash = None

    def __post_init__(self):
        if self.rel not in (REL_EQ, REL_LE, REL_LT):
            raise ValueError(f"bad canonical relation {self.rel!r}")

    def __eq__(self, other):
        if self is other:
            return True
        if not isinstance(other, AtomicProp):
            return NotImplemented
        return self.rel == other.rel and self.term == other.term

    def __hash__(self):
        h = self._hash
        if h is None:
            h = hash((self.rel, self.term.key()))
            object.__setattr__(self, "_hash", h)
        return h

    @property
    def variables(self) -> frozenset[Var]:
        return self.term.variables

    def substitute(self, mapping: Mapping[Var, LinTerm]) -> "AtomicProp":
        t = self.term.substitute(mapping)
        if t is self.term:
            return self
        return _canon(t, self.rel)

    def rename(self, mapping: Mapping[Var, Var]) -> "AtomicProp":
        return AtomicProp(self.term.rename(mapping), self.rel)

    def is_ground(self) -> bool:
        return not self.term.coeffs

    def ground_truth(self) -> bool:
        """Truth value of a ground proposition."""
        k = self.term.const
        if self.rel == REL_EQ:
            return k == 0
        if self.rel == REL_LE:
            return k <= 0
        return k < 0

    def eval(self, valuation: Mapping[Var, Fraction]) -> bool:
        value = self.term.eval(valuation)
        if self.rel == REL_EQ:
            return value == 0
        if self.rel == REL_LE:
            return value <= 0
        return value < 0

    def __str__(self) -> str:
        term, rel = self.term, self.rel
        if not term.coeffs:
            return f"{term.const} {rel} 0"
        # flip for readability when the leading coefficient is negative
        flip = term.coeffs[0][1] < 0
        if flip:
            term = -term
            rel = {REL_EQ: "=", REL_LE: ">=", REL_LT: ">"}[rel]
        # scale to integer coefficients, constant on the right
        denoms = [c.denominator for _, c in term.coeffs] + [term.const.denominator]
        mult = 1
        for d in denoms:
            mult = mult * d // _gcd(mult, d)
        term = term.scaled(mult)
        lhs = LinTerm(term.coeffs, _F0)
        rhs = -term.const
        return f"{lhs} {rel} {rhs}"


def _gcd(a: int, b: int) -> int:
    while b:
        a, b = b, a % b
    return a


def _canon(term: LinTerm, rel: str) -> AtomicProp:
    if term.coeffs:
        lead = term.coeffs[0][1]
        if rel == REL_EQ and lead < 0:
            term = -term
            lead = -lead
        term = term.scaled(Fraction(1) / abs(lead))
    return AtomicProp(term, rel)


def compare(lhs: LinTerm, op: str, rhs: LinTerm) -> AtomicProp:
    """Build a canonical atomic proposition from ``lhs op rhs`` where op is one
    of =, <=, <, >=, >."""
    diff = lhs - rhs
    if op == "=":
        return _canon(diff, REL_EQ)
    if op == "<=":
        return _canon(diff, REL_LE)
    if op == "<":
        return _canon(diff, REL_LT)
    if op == ">=":
        return _canon(-diff, REL_LE)
    if op == ">":
        return _canon(-diff, REL_LT)
    raise ValueError(f"unknown relation {op!r}")


def var_eq(v: Var, term: LinTerm) -> AtomicProp:
    return compare(LinTerm.of_var(v), "=", term)


@dataclass(frozen=True)
class Constraint:
    """A finite conjunction of atomic propositions.  The empty conjunction is
    the constraint ``true``."""

    atoms: tuple[AtomicProp, ...] = ()

    @staticmethod
    def of(*atoms: AtomicProp) -> "Constraint":
        return Constraint(tuple(atoms))

    @property
    def variables(self) -> frozenset[Var]:
        out: set[Var] = set()
        for a in self.atoms:
            out |= a.variables
        return frozenset(out)

    def conjoin(self, other: "Constraint") -> "Constraint":
        return Constraint(self.atoms + other.atoms)

    def rename(self, mapping: Mapping[Var, Var]) -> "Constraint":
        return Constraint(tuple(a.rename(mapping) for a in self.atoms))

    def is_true(self) -> bool:
        return not self.atoms

    def __iter__(self) -> Iterator[AtomicProp]:
        return iter(self.atoms)

    def __str__(self) -> str:
        if not self.atoms:
            return "true"
        return ", ".join(str(a) for a in self.atoms)


TRUE_CONSTRAINT = Constraint(())


@dataclass(frozen=True)
class Pred:
    """A predicate symbol: name plus arity.  Projected predicates (see the
    filters module) carry their position set in the name, e.g. ``p|{2}``."""

    name: str
    arity: int

    def __str__(self) -> str:
        return f"{self.name}/{self.arity}"


@dataclass(frozen=True)
class Atom:
    pred: Pred
    args: tuple[LinTerm, ...]

    def __post_init__(self):
        if len(self.args) != self.pred.arity:
            raise ValueError(f"{self.pred} applied to {len(self.args)} arguments")

    @property
    def variables(self) -> frozenset[Var]:
        out: set[Var] = set()
        for t in self.args:
            out |= t.variables
        return frozenset(out)

    def __str__(self) -> str:
        if not self.args:
            return self.pred.name
        return f"{self.pred.name}({', '.join(str(t) for t in self.args)})"


def atom_of_vars(pred: Pred, variables: Iterable[Var]) -> Atom:
    return Atom(pred, tuple(LinTerm.of_var(v) for v in variables))


@dataclass(frozen=True)
class Query:
    """An atomic query: an atom together with a constraint.  The query denotes
    the set of ground instances of the atom under solutions of the constraint;
    constraint variables that do not occur in the atom are understood
    existentially."""

    atom: Atom
    constraint: Constraint

    @property
    def pred(self) -> Pred:
        return self.atom.pred

    @property
    def variables(self) -> frozenset[Var]:
        return self.atom.variables | self.constraint.variables

    def __str__(self) -> str:
        return f"<{self.atom} | {self.constraint}>"


@dataclass(frozen=True)
class Clause:
    """A normalized binary rule ``p(X1..Xn) <- c <> q(Y1..Ym)``: the argument
    tuples are disjoint sequences of distinct variables and c is satisfiable
    (checked when rules are built through the parser or normalize_clause)."""

    head_pred: Pred
    head_vars: tuple[Var, ...]
    constraint: Constraint
    body_pred: Pred
    body_vars: tuple[Var, ...]
    text: str = field(default="", compare=False)

    def __post_init__(self):
        hv, bv = self.head_vars, self.body_vars
        if len(set(hv)) != len(hv) or len(set(bv)) != len(bv) or set(hv) & set(bv):
            raise ValueError("rule arguments must be disjoint sequences of distinct variables")

    @property
    def head_atom(self) -> Atom:
        return atom_of_vars(self.head_pred, self.head_vars)

    @property
    def body_atom(self) -> Atom:
        return atom_of_vars(self.body_pred, self.body_vars)

    @property
    def head_query(self) -> Query:
        return Query(self.head_atom, self.constraint)

    @property
    def body_query(self) -> Query:
        return Query(self.body_atom, self.constraint)

    @property
    def variables(self) -> frozenset[Var]:
        return frozenset(self.head_vars) | frozenset(self.body_vars) | self.constraint.variables

    def local_vars(self) -> frozenset[Var]:
        """Constraint variables that occur in neither argument tuple."""
        return self.constraint.variables - set(self.head_vars) - set(self.body_vars)

    def is_recursive(self) -> bool:
        return self.head_pred == self.body_pred

    def __str__(self) -> str:
        return to_source(self)


@dataclass(frozen=True)
class Program:
    clauses: tuple[Clause, ...]

    def __str__(self) -> str:
        return "\n".join(to_source(c) for c in self.clauses)


# ---------------------------------------------------------------------------
# variable collection and renaming

def variables_of(obj) -> frozenset[Var]:
    if isinstance(obj, (LinTerm, AtomicProp, Constraint, Atom, Query, Clause)):
        return obj.variables
    if isinstance(obj, Program):
        out: set[Var] = set()
        for c in obj.clauses:
            out |= c.variables
        return frozenset(out)
    raise TypeError(f"cannot collect variables of {type(obj).__name__}")


def max_gen(*objects) -> int:
    """Largest renaming generation occurring in the given objects (0 if none)."""
    best = 0
    for obj in objects:
        vs = obj if isinstance(obj, (set, frozenset, tuple, list)) else variables_of(obj)
        for v in vs:
            if isinstance(v, Var):
                best = max(best, v.gen)
            else:
                best = max(best, max_gen(v))
    return best


def rename_apart(obj, gen: int):
    """Return a variant of ``obj`` with every variable re-indexed at or above
    ``gen``.  Distinct generations in the input stay distinct (the i-th
    generation present maps to gen + i), so objects whose variables all have
    generation 0 are re-indexed to exactly ``gen``.  Callers pick ``gen``
    strictly greater than any generation in the objects the variant must be
    disjoint from; there is no hidden global counter."""
    vs = variables_of(obj)
    gens = sorted({v.gen for v in vs})
    shift = {g: gen + i for i, g in enumerate(gens)}
    mapping = {v: Var(v.name, shift[v.gen]) for v in vs}
    if isinstance(obj, (LinTerm, AtomicProp, Constraint)):
        return obj.rename(mapping)
    if isinstance(obj, Atom):
        return Atom(obj.pred, tuple(t.rename(mapping) for t in obj.args))
    if isinstance(obj, Query):
        return Query(
            Atom(obj.atom.pred, tuple(t.rename(mapping) for t in obj.atom.args)),
            obj.constraint.rename(mapping),
        )
    if isinstance(obj, Clause):
        return Clause(
            obj.head_pred,
            tuple(mapping[v] for v in obj.head_vars),
            obj.constraint.rename(mapping),
            obj.body_pred,
            tuple(mapping[v] for v in obj.body_vars),
            text=obj.text,
        )
    raise TypeError(f"cannot rename {type(obj).__name__}")


# ---------------------------------------------------------------------------
# tokenizer

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>\#[^\n]*)
  | (?P<rat>[0-9]+(?:/[0-9]+)?)
  | (?P<var>[A-Z][A-Za-z0-9_]*)
  | (?P<pred>[a-z][A-Za-z0-9_]*)
  | (?P<op><-|<>|<=|>=|[<>=+\-*/(),.:])
    """,
    re.VERBOSE,
)

# "<-", "<>", "<=" and bare "<" are disambiguated by alternation order.

_Token = tuple  # (kind, text, line, col)


def _tokenize(text: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, line_start = 1, 0
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            col = pos - line_start + 1
            raise ParseError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        tok = m.group()
        if kind not in ("ws", "comment"):
            tokens.append((kind, tok, line, pos - line_start + 1))
        newlines = tok.count("\n")
        if newlines:
            line += newlines
            line_start = pos + tok.rindex("\n") + 1
        pos = m.end()
    tokens.append(("eof", "", line, len(text) - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.tokens = _tokenize(text)
        self.pos = 0
        self.arities: dict[str, int] = {}

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def next(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def error(self, message: str, tok: Optional[_Token] = None):
        tok = tok or self.peek()
        raise ParseError(message, tok[2], tok[3])

    def expect(self, text: str) -> _Token:
        tok = self.next()
        if tok[1] != text:
            shown = tok[1] or "end of input"
            self.error(f"expected {text!r}, found {shown!r}", tok)
        return tok

    def at(self, text: str) -> bool:
        return self.peek()[1] == text

    # rational := [0-9]+ ("/" [0-9]+)?
    def rational(self) -> Fraction:
        tok = self.next()
        if tok[0] != "rat":
            self.error("expected a rational literal", tok)
        if "/" in tok[1]:
            num, den = tok[1].split("/")
            if int(den) == 0:
                self.error("zero denominator in rational literal", tok)
            return Fraction(int(num), int(den))
        return Fraction(int(tok[1]))

    # term := rational | var | rational "*" var | var "/" rational
    #       | "-" term | "(" linexpr ")"
    def term(self) -> LinTerm:
        tok = self.peek()
        if tok[1] == "-":
            self.next()
            return -self.term()
        if tok[1] == "(":
            self.next()
            t = self.linexpr()
            self.expect(")")
            return t
        if tok[0] == "rat":
            coeff = self.rational()
            if self.at("*"):
                self.next()
                vtok = self.next()
                if vtok[0] != "var":
                    if vtok[0] == "rat":
                        self.error("nonlinear term: products must be constant * variable", vtok)
                    self.error("expected a variable after '*'", vtok)
                return LinTerm.make({Var(vtok[1]): coeff})
            if self.at("/"):
                self.error("division must be variable / constant")
            return LinTerm.of_const(coeff)
        if tok[0] == "var":
            self.next()
            v = Var(tok[1])
            if self.at("*"):
                star = self.next()
                ntok = self.next()
                if ntok[0] == "var":
                    self.error("nonlinear term: variable * variable", star)
                if ntok[0] != "rat":
                    self.error("expected a constant after '*'", ntok)
                coeff = self._frac(ntok)
                return LinTerm.make({v: coeff})
            if self.at("/"):
                self.next()
                dtok = self.next()
                if dtok[0] == "var":
                    self.error("nonlinear term: division by a variable", dtok)
                if dtok[0] != "rat":
                    self.error("expected a constant divisor", dtok)
                den = self._frac(dtok)
                if den == 0:
                    self.error("division by zero", dtok)
                return LinTerm.make({v: Fraction(1) / den})
            return LinTerm.of_var(v)
        self.error("expected a term")

    def _frac(self, tok: _Token) -> Fraction:
        if "/" in tok[1]:
            num, den = tok[1].split("/")
            if int(den) == 0:
                self.error("zero denominator in rational literal", tok)
            return Fraction(int(num), int(den))
        return Fraction(int(tok[1]))

    # linexpr := term (("+" | "-") term)*
    def linexpr(self) -> LinTerm:
        t = self.term()
        while self.peek()[1] in ("+", "-"):
            op = self.next()[1]
            rhs = self.term()
            t = t + rhs if op == "+" else t - rhs
        return t

    # constr := linexpr rel linexpr
    def constr(self) -> AtomicProp:
        lhs = self.linexpr()
        tok = self.next()
        if tok[1] not in _SOURCE_RELS:
            self.error("expected a relation (=, <=, <, >=, >)", tok)
        rhs = self.linexpr()
        return compare(lhs, tok[1], rhs)

    # constrs := "true" | constr ("," constr)*
    def constrs(self) -> Constraint:
        if self.peek()[1] == "true":
            self.next()
            return TRUE_CONSTRAINT
        atoms = [self.constr()]
        while self.at(","):
            self.next()
            atoms.append(self.constr())
        return Constraint(tuple(atoms))

    # atom := pred | pred "(" linexpr ("," linexpr)* ")"
    def atom(self) -> tuple[str, tuple[LinTerm, ...], _Token]:
        tok = self.next()
        if tok[0] != "pred":
            self.error("expected a predicate name", tok)
        if tok[1] == "true":
            self.error("'true' is reserved", tok)
        args: list[LinTerm] = []
        if self.at("("):
            self.next()
            args.append(self.linexpr())
            while self.at(","):
                self.next()
                args.append(self.linexpr())
            self.expect(")")
        return tok[1], tuple(args), tok

    def pred_of(self, name: str, arity: int, tok: _Token) -> Pred:
        known = self.arities.get(name)
        if known is None:
            self.arities[name] = arity
        elif known != arity:
            self.error(f"arity mismatch: {name} used with {known} and {arity} arguments", tok)
        return Pred(name, arity)

    # clause := atom "<-" constrs "<>" atom "."
    def clause(self, source: str) -> Clause:
        start = self.peek()
        hname, hargs, htok = self.atom()
        self.expect("<-")
        c = self.constrs()
        self.expect("<>")
        bname, bargs, btok = self.atom()
        self.expect(".")
        head = Atom(self.pred_of(hname, len(hargs), htok), hargs)
        body = Atom(self.pred_of(bname, len(bargs), btok), bargs)
        end = self.tokens[self.pos - 1]
        text = _slice_source(source, start, end)
        try:
            clause = normalize_clause(head, c, body, text=text)
        except ParseError as err:
            if err.line is None:
                raise ParseError(err.message, start[2], start[3]) from None
            raise
        return clause

    # query := atom [":" constrs] ["."]   (bare atom means constraint true)
    def query(self) -> Query:
        name, args, tok = self.atom()
        c = Constraint(())
        if self.peek()[1] == ":":
            self.next()
            c = self.constrs()
        if self.peek()[1] == ".":
            self.next()
        return Query(Atom(self.pred_of(name, len(args), tok), args), c)


def _slice_source(source: str, start: _Token, end: _Token) -> str:
    lines = source.split("\n")
    s_line, s_col = start[2], start[3]
    e_line, e_col = end[2], end[3]
    if s_line == e_line:
        return lines[s_line - 1][s_col - 1 : e_col]
    parts = [lines[s_line - 1][s_col - 1 :]]
    parts.extend(lines[s_line : e_line - 1])
    parts.append(lines[e_line - 1][:e_col])
    return " ".join(p.strip() for p in parts)


def parse_program(text: str) -> Program:
    """Parse a program: a sequence of rules.  Raises ParseError with a source
    position for syntax errors, predicate arity mismatches, nonlinear terms and
    rules whose constraint is unsatisfiable."""
    p = _Parser(text)
    clauses: list[Clause] = []
    while p.peek()[0] != "eof":
        clauses.append(p.clause(text))
    return Program(tuple(clauses))


def parse_query(text: str, program: Optional[Program] = None) -> Query:
    """Parse a single query.  If ``program`` is given, the query predicate must
    match a program predicate (same name and arity)."""
    p = _Parser(text)
    if program is not None:
        for cl in program.clauses:
            p.arities[cl.head_pred.name] = cl.head_pred.arity
            p.arities[cl.body_pred.name] = cl.body_pred.arity
    q = p.query()
    if p.peek()[0] != "eof":
        p.error("trailing input after query")
    if program is not None:
        names = {cl.head_pred for cl in program.clauses} | {cl.body_pred for cl in program.clauses}
        if q.pred not in names:
            raise ParseError(f"unknown predicate {q.pred}")
    return q


# ---------------------------------------------------------------------------
# normalization

def _fresh_name(base: str, used: set[str]) -> str:
    name = base
    while name in used:
        name += "_"
    used.add(name)
    return name


def normalize_clause(head: Atom, constraint: Constraint, body: Atom, text: str = "") -> Clause:
    """Bring a rule into the internal form: argument positions hold distinct,
    head/body-disjoint variables.  A non-variable argument, or a variable that
    occurs in more than one argument position, is replaced by a fresh variable
    X<i> (head) or Y<i> (body) with the equation ``fresh = argument`` added in
    front of the constraint.  Idempotent up to renaming; raises ParseError if
    the resulting constraint is unsatisfiable."""
    occurrences: dict[Var, int] = {}
    for t in head.args + body.args:
        v = t.is_var()
        if v is not None:
            occurrences[v] = occurrences.get(v, 0) + 1

    used_names = {v.name for t in head.args + body.args for v in t.variables}
    used_names |= {v.name for v in constraint.variables}

    equations: list[AtomicProp] = []

    def pick(args: tuple[LinTerm, ...], prefix: str) -> tuple[Var, ...]:
        out: list[Var] = []
        for i, t in enumerate(args, start=1):
            v = t.is_var()
            if v is not None and occurrences[v] == 1:
                out.append(v)
            else:
                fresh = Var(_fresh_name(f"{prefix}{i}", used_names))
                equations.append(var_eq(fresh, t))
                out.append(fresh)
        return tuple(out)

    head_vars = pick(head.args, "X")
    body_vars = pick(body.args, "Y")
    new_constraint = Constraint(tuple(equations)).conjoin(constraint)

    from . import linarith  # deferred: linarith depends on this module's types

    if not linarith.satisfiable(new_constraint):
        raise ParseError(f"unsatisfiable rule constraint: {new_constraint}")
    return Clause(head.pred, head_vars, new_constraint, body.pred, body_vars, text=text)


# ---------------------------------------------------------------------------
# printing

def to_source(clause: Clause) -> str:
    """Grammar-conforming text for a normalized rule; parse(to_source(r))
    rebuilds r structurally."""
    head = str(clause.head_atom)
    body = str(clause.body_atom)
    return f"{head} <- {clause.constraint} <> {body}."


def program_to_source(program: Program) -> str:
    return "\n".join(to_source(c) for c in program.clauses) + ("\n" if program.clauses else "")
