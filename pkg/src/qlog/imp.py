"""A small imperative probabilistic language with exact semantics.

Programs manipulate natural-number locations and fixed-length arrays.
Expressions are nat-, bool- or distribution-valued; `unif(e)` is the
uniform distribution on {0..e}.  Commands are skip, assignment,
sampling, sequencing, branching and while loops, plus the auxiliary
`nth_unused` scan used by the random-permutation examples.

Commands denote subdistributions over stores, computed exactly with
rational weights.  While loops run an ascending iteration from the
empty subdistribution: after the configured number of loop unfoldings
the still-running mass becomes residual.  If one more unfolding
changes nothing the chain has hit its fixed point and the residual is
genuine divergence; otherwise it is truncation and is flagged as
approximation (entering error radii downstream).

Surface syntax (.imp files)::

    locs i val tmp
    array arr[3]
    i := 0;
    while i <= 2 {
      sample val unif(7);
      arr[i] := val;
      i := i + 1
    }

Note `e1 - e2` is truncated subtraction on naturals; bare location
names in expressions denote reads.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, List, Optional, Tuple, Union

from .measures import Dist, dirac


class ImpError(ValueError):
    pass


# ---------------------------------------------------------------------------
# Stores
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Store:
    """Total assignment of naturals to the declared locations.

    Array slots are addressed as ("arr", index).  Immutable and usable
    as a distribution support point.
    """

    items: Tuple[Tuple[Union[str, Tuple[str, int]], int], ...]

    @staticmethod
    def of(mapping: Dict) -> "Store":
        return Store(tuple(sorted(mapping.items(), key=lambda kv: repr(kv[0]))))

    def get(self, key) -> int:
        for k, v in self.items:
            if k == key:
                return v
        raise ImpError(f"undeclared location {key}")

    def set(self, key, value: int) -> "Store":
        found = False
        out = []
        for k, v in self.items:
            if k == key:
                out.append((k, value))
                found = True
            else:
                out.append((k, v))
        if not found:
            raise ImpError(f"undeclared location {key}")
        return Store(tuple(out))

    def array(self, name: str) -> Tuple[int, ...]:
        slots = sorted(
            (k[1], v) for k, v in self.items if isinstance(k, tuple) and k[0] == name
        )
        return tuple(v for _, v in slots)

    def dist_key(self):
        return ("store", self.items)

    def __repr__(self):
        return "{" + ", ".join(f"{k}={v}" for k, v in self.items) + "}"


# ---------------------------------------------------------------------------
# Syntax
# ---------------------------------------------------------------------------


class Expr:
    pass


@dataclass
class ENum(Expr):
    value: int


@dataclass
class ERead(Expr):
    loc: str


@dataclass
class EIndex(Expr):
    array: str
    index: Expr


@dataclass
class EBin(Expr):
    op: str  # + * - <= ==
    left: Expr
    right: Expr


@dataclass
class EUnif(Expr):
    bound: Expr


class Cmd:
    pass


@dataclass
class CSkip(Cmd):
    pass


@dataclass
class CAssign(Cmd):
    target: Union[str, Tuple[str, Expr]]  # location or (array, index expr)
    expr: Expr


@dataclass
class CSample(Cmd):
    loc: str
    dist: Expr


@dataclass
class CSeq(Cmd):
    first: Cmd
    second: Cmd


@dataclass
class CIf(Cmd):
    guard: Expr
    then: Cmd
    other: Cmd


@dataclass
class CWhile(Cmd):
    guard: Expr
    body: Cmd


@dataclass
class CNthUnused(Cmd):
    """val := the (tmp)-th natural not among arr[0..i-1] (0-indexed)."""

    array: str = "arr"
    i_loc: str = "i"
    tmp_loc: str = "tmp"
    val_loc: str = "val"


@dataclass
class Program:
    locs: List[str]
    arrays: Dict[str, int]
    body: Cmd

    def initial_store(self) -> Store:
        mapping: Dict = {l: 0 for l in self.locs}
        for name, size in self.arrays.items():
            for i in range(size):
                mapping[(name, i)] = 0
        return Store.of(mapping)


# ---------------------------------------------------------------------------
# Typing (nat / bool / dist)
# ---------------------------------------------------------------------------


def expr_type(prog: Program, e: Expr) -> str:
    if isinstance(e, ENum):
        return "nat"
    if isinstance(e, ERead):
        if e.loc not in prog.locs:
            raise ImpError(f"undeclared location {e.loc}")
        return "nat"
    if isinstance(e, EIndex):
        if e.array not in prog.arrays:
            raise ImpError(f"undeclared array {e.array}")
        if expr_type(prog, e.index) != "nat":
            raise ImpError("array index must be a natural")
        return "nat"
    if isinstance(e, EBin):
        if expr_type(prog, e.left) != "nat" or expr_type(prog, e.right) != "nat":
            raise ImpError(f"operator {e.op} needs natural operands")
        return "bool" if e.op in ("<=", "==") else "nat"
    if isinstance(e, EUnif):
        if expr_type(prog, e.bound) != "nat":
            raise ImpError("unif needs a natural bound")
        return "dist"
    raise ImpError(f"unknown expression {e!r}")


def check_cmd(prog: Program, c: Cmd) -> None:
    if isinstance(c, CSkip):
        return
    if isinstance(c, CAssign):
        if isinstance(c.target, tuple):
            name, idx = c.target
            if name not in prog.arrays:
                raise ImpError(f"undeclared array {name}")
            if expr_type(prog, idx) != "nat":
                raise ImpError("array index must be a natural")
        elif c.target not in prog.locs:
            raise ImpError(f"undeclared location {c.target}")
        if expr_type(prog, c.expr) != "nat":
            raise ImpError("assignment needs a natural-valued expression")
        return
    if isinstance(c, CSample):
        if c.loc not in prog.locs:
            raise ImpError(f"undeclared location {c.loc}")
        if expr_type(prog, c.dist) != "dist":
            raise ImpError("sampling needs a distribution expression")
        return
    if isinstance(c, CSeq):
        check_cmd(prog, c.first)
        check_cmd(prog, c.second)
        return
    if isinstance(c, (CIf, CWhile)):
        if expr_type(prog, c.guard) != "bool":
            raise ImpError("guard must be boolean")
        if isinstance(c, CIf):
            check_cmd(prog, c.then)
            check_cmd(prog, c.other)
        else:
            check_cmd(prog, c.body)
        return
    if isinstance(c, CNthUnused):
        for loc in (c.i_loc, c.tmp_loc, c.val_loc):
            if loc not in prog.locs:
                raise ImpError(f"undeclared location {loc}")
        if c.array not in prog.arrays:
            raise ImpError(f"undeclared array {c.array}")
        return
    raise ImpError(f"unknown command {c!r}")


# ---------------------------------------------------------------------------
# Semantics
# ---------------------------------------------------------------------------


def eval_expr(prog: Program, store: Store, e: Expr):
    if isinstance(e, ENum):
        return e.value
    if isinstance(e, ERead):
        return store.get(e.loc)
    if isinstance(e, EIndex):
        idx = eval_expr(prog, store, e.index)
        size = prog.arrays[e.array]
        if not 0 <= idx < size:
            raise ImpError(f"{e.array}[{idx}] out of bounds (size {size})")
        return store.get((e.array, idx))
    if isinstance(e, EBin):
        a = eval_expr(prog, store, e.left)
        b = eval_expr(prog, store, e.right)
        if e.op == "+":
            return a + b
        if e.op == "*":
            return a * b
        if e.op == "-":
            return max(a - b, 0)
        if e.op == "<=":
            return a <= b
        if e.op == "==":
            return a == b
    if isinstance(e, EUnif):
        hi = eval_expr(prog, store, e.bound)
        w = Fraction(1, hi + 1)
        return Dist.from_pairs([(k, w) for k in range(hi + 1)])
    raise ImpError(f"cannot evaluate {e!r}")


def _nth_unused(store: Store, prog: Program, c: CNthUnused) -> Store:
    i = store.get(c.i_loc)
    k = store.get(c.tmp_loc)
    used = {store.get((c.array, j)) for j in range(min(i, prog.arrays[c.array]))}
    v = 0
    seen = 0
    while True:
        if v not in used:
            if seen == k:
                return store.set(c.val_loc, v)
            seen += 1
        v += 1


def eval_cmd(
    prog: Program,
    c: Cmd,
    store: Store,
    max_iter: int = 64,
    tol: float = 0.0,
    support_cap: int = 100000,
) -> Dist:
    """Exact subdistribution over final stores.

    ``max_iter`` bounds loop unfoldings; leftover loop mass becomes
    residual (divergence when the chain provably stalled, otherwise
    approximation).
    """
    if isinstance(c, CSkip):
        return dirac(store)
    if isinstance(c, CAssign):
        if isinstance(c.target, tuple):
            name, idx_e = c.target
            idx = eval_expr(prog, store, idx_e)
            size = prog.arrays[name]
            if not 0 <= idx < size:
                raise ImpError(f"{name}[{idx}] out of bounds (size {size})")
            key = (name, idx)
        else:
            key = c.target
        return dirac(store.set(key, eval_expr(prog, store, c.expr)))
    if isinstance(c, CSample):
        d = eval_expr(prog, store, c.dist)
        if not isinstance(d, Dist):
            raise ImpError("sampling from a non-distribution")
        return Dist.from_pairs([(store.set(c.loc, v), w) for v, w in d.points])
    if isinstance(c, CSeq):
        first = eval_cmd(prog, c.first, store, max_iter, tol, support_cap)
        return _bind_stores(
            prog, first, lambda s: eval_cmd(prog, c.second, s, max_iter, tol, support_cap)
        )
    if isinstance(c, CIf):
        if eval_expr(prog, store, c.guard):
            return eval_cmd(prog, c.then, store, max_iter, tol, support_cap)
        return eval_cmd(prog, c.other, store, max_iter, tol, support_cap)
    if isinstance(c, CWhile):
        return _eval_while(prog, c, store, max_iter, tol, support_cap)
    if isinstance(c, CNthUnused):
        return dirac(_nth_unused(store, prog, c))
    raise ImpError(f"cannot run {c!r}")


def _bind_stores(prog: Program, d: Dist, f) -> Dist:
    pairs: List[Tuple[Store, Fraction]] = []
    rdiv = d.residual_div
    rapp = d.residual_approx
    for s, w in d.points:
        out = f(s)
        pairs.extend((s2, w * w2) for s2, w2 in out.points)
        rdiv += w * out.residual_div
        rapp += w * out.residual_approx
    return Dist.from_pairs(pairs, residual_div=rdiv, residual_approx=rapp)


def _eval_while(prog, c: CWhile, store: Store, max_iter, tol, support_cap) -> Dist:
    done: Dict = {}
    done_div = Fraction(0)
    active: Dict = {store: Fraction(1)}

    def sweep(act: Dict) -> Dict:
        live = {}
        for s, w in act.items():
            if eval_expr(prog, store=s, e=c.guard):
                live[s] = live.get(s, Fraction(0)) + w
            else:
                done[s] = done.get(s, Fraction(0)) + w
        return live

    active = sweep(active)
    stalled = False
    body_approx = Fraction(0)
    for _ in range(max_iter):
        if not active:
            break
        nxt: Dict = {}
        for s, w in active.items():
            out = eval_cmd(prog, c.body, s, max_iter, tol, support_cap)
            done_div += w * out.residual_div
            body_approx += w * out.residual_approx
            for s2, w2 in out.points:
                nxt[s2] = nxt.get(s2, Fraction(0)) + w * w2
        before = dict(active)
        active = sweep(nxt)
        if len(done) + len(active) > support_cap:
            raise ImpError("store support blow-up in while loop")
        if active == before:
            stalled = True  # chain hit its fixed point: mass provably diverges
            break
        if float(sum(active.values(), Fraction(0))) <= tol:
            break
    live_mass = sum(active.values(), Fraction(0))
    if stalled:
        done_div += live_mass
        live_mass = Fraction(0)
    return Dist.from_pairs(
        list(done.items()),
        residual_div=done_div,
        residual_approx=live_mass + body_approx,
    )


# ---------------------------------------------------------------------------
# Parser for .imp files
# ---------------------------------------------------------------------------

_TOKEN = re.compile(
    r"\s*(?:(?P<comment>--[^\n]*)|(?P<num>\d+)|(?P<id>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op>:=|<=|==|[-+*;{}()\[\],~]))"
)


def _tokenize_imp(src: str) -> List[Tuple[str, str]]:
    toks = []
    pos = 0
    while pos < len(src):
        m = _TOKEN.match(src, pos)
        if not m:
            if src[pos:].strip() == "":
                break
            raise ImpError(f"bad character {src[pos]!r}")
        pos = m.end()
        if m.lastgroup == "comment" or m.group(0).strip() == "":
            continue
        if m.group("num"):
            toks.append(("num", m.group("num")))
        elif m.group("id"):
            toks.append(("id", m.group("id")))
        elif m.group("op"):
            toks.append(("op", m.group("op")))
    return toks


class ImpParser:
    def __init__(self, src: str):
        self.toks = _tokenize_imp(src)
        self.pos = 0

    def peek(self):
        return self.toks[self.pos] if self.pos < len(self.toks) else (None, None)

    def next(self):
        t = self.peek()
        if t[0] is None:
            raise ImpError("unexpected end of program")
        self.pos += 1
        return t

    def expect(self, text):
        kind, val = self.next()
        if val != text:
            raise ImpError(f"expected {text!r}, got {val!r}")

    def at(self, text):
        return self.peek()[1] == text

    RESERVED = {
        "skip",
        "if",
        "else",
        "while",
        "sample",
        "unif",
        "nth_unused",
        "locs",
        "array",
    }

    def _peek2(self):
        return (
            self.toks[self.pos + 1][1] if self.pos + 1 < len(self.toks) else None
        )

    # declarations then one command
    def program(self) -> Program:
        locs: List[str] = []
        arrays: Dict[str, int] = {}
        while self.at("locs") or self.at("array"):
            kind, val = self.next()
            if val == "locs":
                while (
                    self.peek()[0] == "id"
                    and self.peek()[1] not in self.RESERVED
                    and self._peek2() not in (":=", "[")
                ):
                    locs.append(self.next()[1])
            else:
                name = self.next()[1]
                self.expect("[")
                size = int(self.next()[1])
                self.expect("]")
                arrays[name] = size
        body = self.command()
        if self.peek()[0] is not None:
            raise ImpError(f"trailing input {self.peek()[1]!r}")
        prog = Program(locs, arrays, body)
        check_cmd(prog, body)
        return prog

    def command(self) -> Cmd:
        cmd = self.simple()
        while self.at(";"):
            self.next()
            if self.peek()[0] is None or self.at("}"):
                break  # tolerate a trailing separator
            cmd = CSeq(cmd, self.simple())
        return cmd

    def block(self) -> Cmd:
        self.expect("{")
        c = self.command()
        self.expect("}")
        return c

    def simple(self) -> Cmd:
        kind, val = self.peek()
        if val == "skip":
            self.next()
            return CSkip()
        if val == "if":
            self.next()
            g = self.expr()
            then = self.block()
            self.expect("else")
            other = self.block()
            return CIf(g, then, other)
        if val == "while":
            self.next()
            g = self.expr()
            return CWhile(g, self.block())
        if val == "sample":
            self.next()
            loc = self.next()[1]
            return CSample(loc, self.expr())
        if val == "nth_unused":
            self.next()
            self.expect("(")
            arr = self.next()[1]
            self.expect(",")
            i_loc = self.next()[1]
            self.expect(",")
            tmp = self.next()[1]
            self.expect(",")
            valloc = self.next()[1]
            self.expect(")")
            return CNthUnused(arr, i_loc, tmp, valloc)
        if kind == "id":
            name = self.next()[1]
            if self.at("["):
                self.next()
                idx = self.expr()
                self.expect("]")
                self.expect(":=")
                return CAssign((name, idx), self.expr())
            self.expect(":=")
            return CAssign(name, self.expr())
        raise ImpError(f"expected a command, got {val!r}")

    def expr(self) -> Expr:
        left = self.arith()
        if self.peek()[1] in ("<=", "=="):
            op = self.next()[1]
            return EBin(op, left, self.arith())
        return left

    def arith(self) -> Expr:
        left = self.mul()
        while self.peek()[1] in ("+", "-"):
            op = self.next()[1]
            left = EBin(op, left, self.mul())
        return left

    def mul(self) -> Expr:
        left = self.atom()
        while self.peek()[1] == "*":
            self.next()
            left = EBin("*", left, self.atom())
        return left

    def atom(self) -> Expr:
        kind, val = self.next()
        if kind == "num":
            return ENum(int(val))
        if val == "(":
            e = self.expr()
            self.expect(")")
            return e
        if val == "unif":
            self.expect("(")
            e = self.expr()
            self.expect(")")
            return EUnif(e)
        if kind == "id":
            if self.at("["):
                self.next()
                idx = self.expr()
                self.expect("]")
                return EIndex(val, idx)
            return ERead(val)
        raise ImpError(f"expected an expression, got {val!r}")


def parse_imp(src: str) -> Program:
    return ImpParser(src).program()
