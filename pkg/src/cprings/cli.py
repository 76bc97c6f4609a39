"""The `cpr` command line front end.

Loads a system or graph from JSON, parses element expressions, and drives the
core operations:

    validate    ring/bimodule/pairing axioms
    mul         product of two expressions in the Toeplitz ring
    eq          equality (Cuntz-Pimsner ring at a chosen J, or raw Toeplitz)
    nf          canonical normal form (Toeplitz components or LPA monomials)
    fs          condition (FS) with certificates
    jmax        canonical ideals: ker Delta, Delta^-1(F), j_max
    lattice     graded-ideal lattice ((H,S) pairs for graphs, T-pairs for systems)
    tpair       validate a candidate T-pair (I, J)
    quotient    quotient system by a psi-invariant ideal, as JSON
    compare     randomized backend cross-check (structural vs closed form)
    gauge-split recover z-homogeneous parts via the gauge Vandermonde

Output is machine-first JSON on stdout: {"ok": ..., "result": ...,
"diagnostics": [...]}; `ok` is the affirmative verdict of the verb (axioms
hold, elements equal, pair valid, zero disagreements, ...).  `--format
table` renders the same result as aligned text, `--format dot` emits DOT for
lattice output.  Exit status: 0 affirmative, 1 negative verdict or domain
error, 2 usage/input error (bad flags, missing file, expression syntax).

Element grammar:

    expr   := term (('+'|'-') term)*
    term   := rational? factor ('*' factor)*
    factor := 'R:'label | 'Q:'label | 'P:'label | '(' expr ')'

with rationals written `a/b` or as integers, plus the graph sugar `p(v)`,
`x(e1 e2 ...)` (path in Q), and `y(e1 e2 ...)` (the same path reversed into
P).  Printing is canonical and re-parses to an equal element.

Set CP_RINGS_CACHE_DIR to persist tensor-level bases and pairing tables
across invocations (content-addressed, safe to delete; see tensorpow).
"""

from __future__ import annotations

import argparse
import json
import re
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

from .cpring import (
    ContextMismatch,
    CpContext,
    FsViolation,
    ZeroScalar,
    cp_equal,
    gauge,
    homogeneous_components,
    validate_ideal,
)
from .exactlin import Subspace, matvec, unit_vec
from .finrank import canonical_ideals, check_fs
from .graphalg import (
    FiniteGraph,
    LpaElement,
    breaking_vertices,
    enumerate_ideal_pairs,
    graph_from_json,
    graph_to_json,
    is_hereditary_saturated,
    lpa_vertex,
    lpa_x,
    lpa_y,
    pair_order,
)
from .ideals import (
    NotInvariant,
    NotTwoSided,
    enumerate_tpairs,
    lattice_dot,
    lattice_json,
    quotient_system,
    validate_tpair,
)
from .rsystem import (
    RSystem,
    build_graph_system,
    system_from_json,
    system_to_json,
    validate_axioms,
)
from .tensorpow import CapExceeded, DEFAULT_CAP, tensor_space, tensor_split
from .toeplitz import (
    SystemMismatch,
    ToeplitzElement,
    component_space,
    embed,
    evaluate,
    toeplitz_mul,
    z_project,
)

__all__ = [
    "ExprSyntaxError",
    "UnknownGenerator",
    "EvalContext",
    "format_element",
    "load_input",
    "main",
    "parse_element",
    "run",
]


class ExprSyntaxError(SyntaxError):
    """Expression parse failure; carries 1-based line/column."""

    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} (line {line}, column {col})")
        self.lineno = line
        self.offset = col


class UnknownGenerator(ValueError):
    """A generator label or path that the loaded context does not define."""


class _UsageError(Exception):
    pass


# ---------------------------------------------------------------------------
# Input loading
# ---------------------------------------------------------------------------


@dataclass
class LoadedInput:
    kind: str  # "graph" | "system"
    graph: Optional[FiniteGraph]
    data: dict
    _system: Optional[RSystem] = None

    @property
    def system(self) -> RSystem:
        if self._system is None:
            if self.kind == "graph":
                self._system = build_graph_system(self.graph)
            else:
                self._system = system_from_json(self.data)
        return self._system


def load_input(path: str) -> LoadedInput:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except OSError as exc:
        raise _UsageError(f"cannot read {path}: {exc.strerror or exc}")
    except ValueError as exc:
        raise _UsageError(f"{path} is not valid JSON: {exc}")
    if "vertices" in data:
        return LoadedInput("graph", graph_from_json(data), data)
    if "ring" in data:
        return LoadedInput("system", None, data)
    raise _UsageError(f"{path}: neither a graph (vertices) nor a system (ring) file")


# ---------------------------------------------------------------------------
# Expression language
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""(?P<ws>\s+)
      | (?P<num>-?\d+(?:/\d+)?)
      | (?P<gen>[RQP]:[^\s()*+-]+)
      | (?P<sugar>[pxy]\()
      | (?P<op>[-+*()])
      | (?P<name>[^\s()*+-]+)
    """,
    re.VERBOSE,
)


def _tokenize(text: str):
    tokens = []
    line, col = 1, 1
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise ExprSyntaxError(f"unexpected character {text[pos]!r}", line, col)
        kind = m.lastgroup
        val = m.group()
        if kind != "ws":
            tokens.append((kind, val, line, col))
        nl = val.count("\n")
        if nl:
            line += nl
            col = len(val) - val.rfind("\n")
        else:
            col += len(val)
        pos = m.end()
    tokens.append(("end", "", line, col))
    return tokens


@dataclass
class EvalContext:
    """Element-building context: which system/graph and which backend."""

    system: Optional[RSystem]
    graph: Optional[FiniteGraph] = None
    backend: str = "toeplitz"  # or "lpa"
    cap: int = DEFAULT_CAP

    def __post_init__(self):
        if self.backend not in ("toeplitz", "lpa"):
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.backend == "lpa" and self.graph is None:
            raise ValueError("the LPA backend needs a graph")
        if self.backend == "toeplitz" and self.system is None:
            raise ValueError("the Toeplitz backend needs a system")

    def _index(self, labels, label, what) -> int:
        try:
            return labels.index(label)
        except ValueError:
            raise UnknownGenerator(f"unknown {what} {label!r}") from None

    def _check_path(self, edges, what):
        if self.graph is None:
            return
        prev = None
        for name in edges:
            try:
                e = self.graph.edge(name)
            except KeyError:
                raise UnknownGenerator(f"unknown edge {name!r} in {what}") from None
            if prev is not None and prev != e.src:
                raise UnknownGenerator(
                    f"{what}: {' '.join(edges)} is not a composable path"
                )
            prev = e.tgt

    # -- generator constructors ---------------------------------------------
    def generator(self, kind: str, label: str):
        if self.backend == "lpa":
            g = self.graph
            if kind == "R":
                if label not in g.vertices:
                    raise UnknownGenerator(f"unknown vertex {label!r}")
                return lpa_vertex(g, label)
            self._check_path([label], f"{kind}:{label}")
            return lpa_x(g, label) if kind == "Q" else lpa_y(g, label)
        sy = self.system
        if kind == "R":
            i = self._index(sy.ring.labels, label, "ring label")
            return embed(sy, "R", unit_vec(sy.ring.dim, i), cap=self.cap)
        mod = sy.q if kind == "Q" else sy.p
        i = self._index(mod.labels, label, "module label")
        return embed(sy, kind, unit_vec(mod.dim, i), cap=self.cap)

    def sugar(self, head: str, names: list[str]):
        if head == "p":
            if len(names) != 1:
                raise UnknownGenerator("p() takes exactly one vertex")
            return self.generator("R", names[0])
        if not names:
            raise UnknownGenerator(f"{head}() needs at least one edge")
        self._check_path(names, f"{head}({' '.join(names)})")
        if self.backend == "lpa":
            return lpa_x(self.graph, *names) if head == "x" else lpa_y(self.graph, *names)
        if head == "x":
            out = self.generator("Q", names[0])
            for name in names[1:]:
                out = toeplitz_mul(out, self.generator("Q", name), cap=self.cap)
            return out
        out = self.generator("P", names[-1])
        for name in reversed(names[:-1]):
            out = toeplitz_mul(out, self.generator("P", name), cap=self.cap)
        return out

    def mul(self, a, b):
        if self.backend == "lpa":
            return a * b
        return toeplitz_mul(a, b, cap=self.cap)

    def zero(self):
        if self.backend == "lpa":
            return LpaElement(self.graph, {})
        return ToeplitzElement(self.system, {})


class _Parser:
    def __init__(self, tokens, ctx: EvalContext):
        self.tokens = tokens
        self.ctx = ctx
        self.i = 0

    def peek(self):
        return self.tokens[self.i]

    def next(self):
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def fail(self, message):
        kind, val, line, col = self.peek()
        shown = val or "end of input"
        raise ExprSyntaxError(f"{message}, got {shown!r}", line, col)

    def expr(self):
        acc = self.term()
        while self.peek()[0] == "op" and self.peek()[1] in "+-":
            op = self.next()[1]
            rhs = self.term()
            acc = acc + rhs if op == "+" else acc - rhs
        return acc

    def term(self):
        coeff = None
        if self.peek()[0] == "num":
            coeff = Fraction(self.next()[1])
        out = self.factor()
        while self.peek()[0] == "op" and self.peek()[1] == "*":
            self.next()
            out = self.ctx.mul(out, self.factor())
        return out if coeff is None else coeff * out

    def factor(self):
        kind, val, line, col = self.peek()
        if kind == "gen":
            self.next()
            prefix, label = val.split(":", 1)
            return self.ctx.generator(prefix, label)
        if kind == "sugar":
            self.next()
            names = []
            while self.peek()[0] in ("name", "num", "gen"):
                names.append(self.next()[1])
            if not (self.peek()[0] == "op" and self.peek()[1] == ")"):
                self.fail("expected ')' closing the generator list")
            self.next()
            return self.ctx.sugar(val[0], names)
        if kind == "op" and val == "(":
            self.next()
            out = self.expr()
            if not (self.peek()[0] == "op" and self.peek()[1] == ")"):
                self.fail("expected ')'")
            self.next()
            return out
        self.fail("expected a generator, sugar call, or '('")

    def parse(self):
        out = self.expr()
        if self.peek()[0] != "end":
            self.fail("trailing input")
        return out


def parse_element(text: str, ctx: EvalContext):
    """Parse an expression into a ToeplitzElement or LpaElement."""
    return _Parser(_tokenize(text), ctx).parse()


# ---------------------------------------------------------------------------
# Canonical printing (round-trips through parse_element)
# ---------------------------------------------------------------------------


def _fmt_coeff(c: Fraction) -> str:
    return str(c)


def _pure_terms(system, side, level, coords, cap):
    """Expand level coordinates into pure unit tensors [(coeff, (i1..ik))]."""
    if level == 0:
        return [(c, (i,)) for i, c in enumerate(coords) if c != 0]
    if level == 1:
        return [(c, (i,)) for i, c in enumerate(coords) if c != 0]
    dim_prev = tensor_space(system, side, level - 1, cap=cap).dim
    split = tensor_split(system, side, 1, level - 1, cap=cap)
    rep = matvec(split, list(coords))
    out: dict = {}
    for idx, c in enumerate(rep):
        if c == 0:
            continue
        i, t = divmod(idx, dim_prev)
        tail = _pure_terms(
            system, side, level - 1, unit_vec(dim_prev, t), cap
        )
        for c2, names in tail:
            key = (i,) + names
            out[key] = out.get(key, Fraction(0)) + c * c2
    return [(c, k) for k, c in sorted(out.items()) if c != 0]


def _format_toeplitz(x: ToeplitzElement, cap: int) -> str:
    sy = x.system
    terms = []  # (sort key, coeff, [factor strings])
    for (m, n) in x.support():
        v = list(x.comps[(m, n)])
        if m == 0 and n == 0:
            for i, c in enumerate(v):
                if c != 0:
                    terms.append(((0, 0, (i,)), c, [f"R:{sy.ring.labels[i]}"]))
            continue
        if n == 0:
            for c, names in _pure_terms(sy, "Q", m, v, cap):
                terms.append(((m, 0, names), c, [f"Q:{sy.q.labels[i]}" for i in names]))
            continue
        if m == 0:
            for c, names in _pure_terms(sy, "P", n, v, cap):
                terms.append(((0, n, names), c, [f"P:{sy.p.labels[i]}" for i in names]))
            continue
        comp = component_space(sy, m, n, cap=cap)
        raw = matvec(comp.sect, v)
        dp = tensor_space(sy, "P", n, cap=cap).dim
        combined: dict = {}
        for idx, c in enumerate(raw):
            if c == 0:
                continue
            a, b = divmod(idx, dp)
            for cq, qnames in _pure_terms(sy, "Q", m, unit_vec(tensor_space(sy, "Q", m, cap=cap).dim, a), cap):
                for cp_, pnames in _pure_terms(sy, "P", n, unit_vec(dp, b), cap):
                    key = (qnames, pnames)
                    combined[key] = combined.get(key, Fraction(0)) + c * cq * cp_
        for (qnames, pnames), c in sorted(combined.items()):
            if c == 0:
                continue
            factors = [f"Q:{sy.q.labels[i]}" for i in qnames]
            factors += [f"P:{sy.p.labels[i]}" for i in pnames]
            terms.append(((m, n, qnames + pnames), c, factors))
    return _join_terms(terms)


def _format_lpa(x) -> str:
    terms = []
    for mono, c in x.terms.items():
        factors = []
        if mono.alpha:
            factors.append("x(" + " ".join(mono.alpha) + ")")
        if mono.beta:
            factors.append("y(" + " ".join(mono.beta) + ")")
        if not factors:
            factors = [f"p({mono.vertex})"]
        key = (len(mono.alpha) + len(mono.beta), mono.alpha, mono.beta, mono.vertex)
        terms.append((key, c, factors))
    return _join_terms(sorted(terms))


def _join_terms(terms) -> str:
    if not terms:
        return "0 (empty sum)"  # not re-parseable; callers special-case zero
    bits = []
    for idx, (_, c, factors) in enumerate(terms):
        body = "*".join(factors)
        mag = abs(c)
        prefix = "" if mag == 1 else _fmt_coeff(mag) + " "
        if idx == 0:
            head = f"-{_fmt_coeff(mag)} " if c < 0 else prefix
            bits.append(head + body)
        else:
            bits.append(("- " if c < 0 else "+ ") + prefix + body)
    return " ".join(bits)


def format_element(x, cap: int = DEFAULT_CAP) -> str:
    """Canonical, grammar-valid printing (except the zero element)."""
    if isinstance(x, ToeplitzElement):
        return _format_toeplitz(x, cap)
    return _format_lpa(x)


# ---------------------------------------------------------------------------
# Subspace specs and JSON helpers
# ---------------------------------------------------------------------------


def _coord_subspace(loaded: LoadedInput, spec: str, cap: int) -> Subspace:
    """Parse an ideal spec: '', 'zero', 'full', 'jmax', or comma labels."""
    sy = loaded.system
    d = sy.ring.dim
    spec = (spec or "").strip()
    if spec in ("", "zero"):
        return Subspace(d, [])
    if spec == "full":
        return Subspace.full(d)
    if spec == "jmax":
        return canonical_ideals(sy, cap=cap)["j_max"]
    vecs = []
    for label in spec.split(","):
        label = label.strip()
        if label not in sy.ring.labels:
            raise UnknownGenerator(f"unknown ring label {label!r} in ideal spec")
        vecs.append(unit_vec(d, sy.ring.labels.index(label)))
    return Subspace(d, vecs)


def _subspace_json(ring, sub: Subspace):
    """Label list when the subspace is a coordinate span, else basis rows."""
    labels = []
    for row in sub.basis():
        hot = [i for i, c in enumerate(row) if c != 0]
        if len(hot) == 1 and row[hot[0]] == 1:
            labels.append(ring.labels[hot[0]])
        else:
            return {
                "dim": sub.dim,
                "basis": [[str(c) for c in r] for r in sub.basis()],
            }
    return sorted(labels)


# ---------------------------------------------------------------------------
# Verbs
# ---------------------------------------------------------------------------


@dataclass
class Outcome:
    ok: bool
    result: object
    diagnostics: list = field(default_factory=list)
    rendered: Optional[str] = None  # non-JSON payload (dot/table)


def _toeplitz_ctx(loaded: LoadedInput, args, jspec=None) -> EvalContext:
    return EvalContext(loaded.system, loaded.graph, "toeplitz", cap=args.cap)


def _cp_context(loaded: LoadedInput, args, jspec: str) -> CpContext:
    sy = loaded.system
    j = validate_ideal(sy, _coord_subspace(loaded, jspec, args.cap))
    if not j.ok:
        bad = [
            name
            for name, good in (
                ("two-sided", j.is_two_sided),
                ("psi-compatible", j.is_psi_compatible),
                ("faithful", j.is_faithful),
            )
            if not good
        ]
        raise NotInvariant(f"J is not admissible: fails {', '.join(bad)}")
    return CpContext(sy, j, slack=args.slack, cap=2 * args.cap)


def _verb_validate(loaded, args) -> Outcome:
    report = validate_axioms(loaded.system)
    return Outcome(
        report.ok,
        {"checks": report.checks, "failures": report.failures},
    )


def _verb_mul(loaded, args) -> Outcome:
    ctx = _toeplitz_ctx(loaded, args)
    a = parse_element(args.exprs[0], ctx)
    b = parse_element(args.exprs[1], ctx)
    prod = toeplitz_mul(a, b, cap=args.cap)
    return Outcome(
        True,
        {
            "element": None if prod.is_zero() else format_element(prod, cap=args.cap),
            "zero": prod.is_zero(),
            "support": [list(g) for g in prod.support()],
        },
    )


def _verb_eq(loaded, args) -> Outcome:
    ctx = _toeplitz_ctx(loaded, args)
    a = parse_element(args.exprs[0], ctx)
    b = parse_element(args.exprs[1], ctx)
    if args.ring == "toeplitz":
        equal = a == b
        where = "toeplitz"
    else:
        cp_ctx = _cp_context(loaded, args, args.j)
        equal = cp_equal(cp_ctx.element(a), cp_ctx.element(b))
        where = f"cp(J={args.j})"
    return Outcome(equal, {"equal": equal, "ring": where})


def _verb_nf(loaded, args) -> Outcome:
    backend = args.backend
    if backend == "auto":
        backend = "lpa" if loaded.kind == "graph" else "toeplitz"
    if backend == "lpa" and loaded.kind != "graph":
        raise _UsageError("--backend lpa needs a graph input")
    ctx = EvalContext(
        loaded.system if backend == "toeplitz" else None,
        loaded.graph,
        backend,
        cap=args.cap,
    )
    x = parse_element(args.exprs[0], ctx)
    if backend == "lpa":
        result = {
            "backend": "lpa",
            "zero": x.is_zero(),
            "element": None if x.is_zero() else format_element(x),
            "monomials": len(x.terms),
        }
    else:
        result = {
            "backend": "toeplitz",
            "zero": x.is_zero(),
            "element": None if x.is_zero() else format_element(x, cap=args.cap),
            "support": [list(g) for g in x.support()],
        }
    return Outcome(True, result)


def _verb_fs(loaded, args) -> Outcome:
    report = check_fs(loaded.system, cap=args.cap)
    result = {
        "fs": report.ok,
        "q_ok": report.q_ok,
        "p_ok": report.p_ok,
        "q_certificate_terms": None if report.q_certificate is None else len(report.q_certificate),
        "p_certificate_terms": None if report.p_certificate is None else len(report.p_certificate),
    }
    return Outcome(report.ok, result)


def _verb_jmax(loaded, args) -> Outcome:
    ideals = canonical_ideals(loaded.system, cap=args.cap)
    ring = loaded.system.ring
    result = {
        "ker_delta": _subspace_json(ring, ideals["ker_delta"]),
        "delta_inv_F": _subspace_json(ring, ideals["delta_inv_F"]),
        "j_max": _subspace_json(ring, ideals["j_max"]),
        "hypothesis_ok": ideals["hypothesis_ok"],
    }
    diags = [] if ideals["hypothesis_ok"] else ["j_max meets ker Delta: maximality not guaranteed"]
    return Outcome(True, result, diags)


def _graph_pair_lattice(graph: FiniteGraph) -> tuple[dict, str]:
    pairs = enumerate_ideal_pairs(graph)
    nodes = [
        {"h": sorted(h), "s": sorted(s), "breaking": sorted(breaking_vertices(graph, h))}
        for h, s in pairs
    ]
    edges = []
    for i, a in enumerate(pairs):
        for j, b in enumerate(pairs):
            if i == j or not pair_order(a, b):
                continue
            if any(
                k not in (i, j) and pair_order(a, pairs[k]) and pair_order(pairs[k], b)
                for k in range(len(pairs))
            ):
                continue
            edges.append([i, j])
    lines = ["digraph ideals {", "  rankdir=BT;"]
    for idx, node in enumerate(nodes):
        h = "{" + " ".join(node["h"]) + "}"
        s = ("|" + " ".join(node["s"])) if node["s"] else ""
        lines.append(f'  n{idx} [label="{h}{s}"];')
    for a, b in edges:
        lines.append(f"  n{a} -> n{b};")
    lines.append("}")
    return {"nodes": nodes, "hasse_edges": edges}, "\n".join(lines)


def _verb_lattice(loaded, args) -> Outcome:
    result: dict = {}
    diags: list = []
    rendered = None
    if loaded.kind == "graph":
        data, dot = _graph_pair_lattice(loaded.graph)
        result["graph_pairs"] = dict(data, graph=loaded.graph.name)
        rendered = dot
    try:
        tpairs = enumerate_tpairs(loaded.system)
    except ValueError as exc:  # infinite emitters: algebraic side unavailable
        diags.append(f"T-pair enumeration skipped: {exc}")
    else:
        result["tpairs"] = lattice_json(loaded.system, tpairs)
        rendered = lattice_dot(loaded.system, tpairs)
    if args.format == "dot" and rendered is not None:
        return Outcome(True, result, diags, rendered=rendered)
    return Outcome(True, result, diags)


def _verb_tpair(loaded, args) -> Outcome:
    sy = loaded.system
    i_sub = _coord_subspace(loaded, args.i, args.cap)
    j_sub = _coord_subspace(loaded, args.j, args.cap)
    pair = validate_tpair(sy, i_sub, j_sub)
    return Outcome(
        pair.ok,
        {
            "ok": pair.ok,
            "i": _subspace_json(sy.ring, pair.i),
            "j": _subspace_json(sy.ring, pair.j),
            "flags": pair.flags,
        },
    )


def _verb_quotient(loaded, args) -> Outcome:
    sy = loaded.system
    i_sub = _coord_subspace(loaded, args.i, args.cap)
    qs = quotient_system(sy, i_sub, name=f"{sy.name}/I")
    result = {"system": system_to_json(qs.system)}
    diags = []
    if loaded.kind == "graph":
        labels = _subspace_json(sy.ring, i_sub)
        if isinstance(labels, list):
            # invariance (checked above) = heredity, so the restriction to the
            # complement presents the quotient system; saturation only matters
            # for the Cuntz-Krieger quotient, hence the diagnostic
            g = loaded.graph
            hs = frozenset(labels)
            rest = FiniteGraph(
                [v for v in g.vertices if v not in hs],
                [e for e in g.edges if e.tgt not in hs],
                name=f"{g.name}/{{{','.join(sorted(hs))}}}",
            )
            result["graph"] = graph_to_json(rest)
            if not is_hereditary_saturated(g, labels):
                diags.append("vertex set is hereditary but not saturated")
    return Outcome(True, result, diags)


class _LpaRep:
    """sigma/T/S target sending coordinates to LPA normal forms."""

    def __init__(self, graph: FiniteGraph, system: RSystem):
        self.graph = graph
        self.system = system

    def _comb(self, coords, gens):
        from .graphalg import LpaElement

        acc = LpaElement(self.graph, {})
        for c, g in zip(coords, gens):
            if c != 0:
                acc = acc + (Fraction(c) * g)
        return acc

    def sigma(self, r):
        return self._comb(r, [lpa_vertex(self.graph, v) for v in self.system.ring.labels])

    def t(self, q):
        return self._comb(q, [lpa_x(self.graph, e) for e in self.system.q.labels])

    def s(self, p):
        return self._comb(p, [lpa_y(self.graph, e) for e in self.system.p.labels])


def _verb_compare(loaded, args) -> Outcome:
    import random

    if loaded.kind != "graph":
        raise _UsageError("compare needs a graph input (LPA closed form)")
    sy = loaded.system
    rng = random.Random(args.seed)
    ctx = _cp_context(loaded, args, "jmax")
    rep = _LpaRep(loaded.graph, sy)
    gens = [
        embed(sy, kind, unit_vec(dim, i), cap=args.cap)
        for kind, dim in (("R", sy.ring.dim), ("Q", sy.q.dim), ("P", sy.p.dim))
        for i in range(dim)
    ]

    def word():
        w = rng.choice(gens)
        for _ in range(rng.randrange(0, 3)):
            w = toeplitz_mul(w, rng.choice(gens), cap=args.cap)
        return w

    disagreements = []
    for k in range(args.words):
        a, b = word(), word()
        structural = cp_equal(ctx.element(a), ctx.element(b))
        closed = evaluate(a, rep) == evaluate(b, rep)
        if structural != closed:
            disagreements.append(
                {"pair": k, "structural": structural, "closed_form": closed}
            )
    return Outcome(
        not disagreements,
        {
            "pairs": args.words,
            "disagreements": disagreements,
            "seed": args.seed,
        },
    )


def _verb_gauge_split(loaded, args) -> Outcome:
    ctx = _toeplitz_ctx(loaded, args)
    x = parse_element(args.exprs[0], ctx)
    if x.is_zero():
        return Outcome(True, {"degrees": [], "components": {}, "consistent": True})
    degrees = x.z_degrees()
    evals = [(t, gauge(t, x)) for t in range(1, len(degrees) + 1)]
    parts = homogeneous_components(evals, degrees)
    consistent = all(parts[k] == z_project(x, k) for k in degrees)
    total = None
    for part in parts.values():
        total = part if total is None else total + part
    consistent = consistent and total == x
    return Outcome(
        consistent,
        {
            "degrees": degrees,
            "components": {
                str(k): format_element(parts[k], cap=args.cap) for k in degrees
            },
            "consistent": consistent,
        },
    )


_VERBS = {
    "validate": (_verb_validate, 0),
    "mul": (_verb_mul, 2),
    "eq": (_verb_eq, 2),
    "nf": (_verb_nf, 1),
    "fs": (_verb_fs, 0),
    "jmax": (_verb_jmax, 0),
    "lattice": (_verb_lattice, 0),
    "tpair": (_verb_tpair, 0),
    "quotient": (_verb_quotient, 0),
    "compare": (_verb_compare, 0),
    "gauge-split": (_verb_gauge_split, 1),
}


# ---------------------------------------------------------------------------
# Driver
# ---------------------------------------------------------------------------


class _ArgumentParser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _build_argparser() -> argparse.ArgumentParser:
    ap = _ArgumentParser(prog="cpr", description=__doc__, add_help=True)
    sub = ap.add_subparsers(dest="verb", required=True)
    for verb, (_, n_exprs) in _VERBS.items():
        sp = sub.add_parser(verb)
        sp.add_argument("file", help="system or graph JSON")
        if n_exprs:
            sp.add_argument("exprs", nargs=n_exprs, metavar="EXPR")
        sp.add_argument("--cap", type=int, default=DEFAULT_CAP, help="tensor degree cap")
        sp.add_argument("--slack", type=int, default=2, help="membership stabilization slack")
        sp.add_argument("--format", choices=("json", "dot", "table"), default="json")
        sp.add_argument("--seed", type=int, default=0, help="seed for randomized verbs")
        if verb == "eq":
            sp.add_argument("--ring", choices=("cp", "toeplitz"), default="cp")
            sp.add_argument("--j", default="jmax", help="ideal spec: labels, zero, full, jmax")
        if verb == "nf":
            sp.add_argument("--backend", choices=("auto", "toeplitz", "lpa"), default="auto")
        if verb in ("tpair", "quotient"):
            sp.add_argument("--i", default="", help="ideal spec for I")
        if verb == "tpair":
            sp.add_argument("--j", default="", help="ideal spec for J")
        if verb == "compare":
            sp.add_argument("--words", type=int, default=40, help="random pairs to test")
    return ap


def _render_table(result, indent=0) -> str:
    lines = []
    pad = "  " * indent
    if isinstance(result, dict):
        for k, v in result.items():
            if isinstance(v, (dict, list)) and v and not _is_flat(v):
                lines.append(f"{pad}{k}:")
                lines.append(_render_table(v, indent + 1))
            else:
                lines.append(f"{pad}{k}: {json.dumps(v)}")
    elif isinstance(result, list):
        for idx, v in enumerate(result):
            if isinstance(v, (dict, list)) and v and not _is_flat(v):
                lines.append(f"{pad}[{idx}]")
                lines.append(_render_table(v, indent + 1))
            else:
                lines.append(f"{pad}- {json.dumps(v)}")
    else:
        lines.append(f"{pad}{json.dumps(result)}")
    return "\n".join(lines)


def _is_flat(v) -> bool:
    if isinstance(v, list):
        return all(not isinstance(x, (dict, list)) for x in v)
    return False


def run(argv) -> tuple[int, str]:
    """Execute a command line; returns (exit_code, stdout payload)."""
    try:
        args = _build_argparser().parse_args(argv)
        loaded = load_input(args.file)
        handler, _ = _VERBS[args.verb]
        outcome = handler(loaded, args)
    except _UsageError as exc:
        payload = {"ok": False, "result": None, "diagnostics": [str(exc)]}
        return 2, json.dumps(payload, sort_keys=True)
    except (ExprSyntaxError, UnknownGenerator) as exc:
        msg = exc.msg if isinstance(exc, SyntaxError) else str(exc)
        payload = {"ok": False, "result": None, "diagnostics": [msg]}
        return 2, json.dumps(payload, sort_keys=True)
    except (
        NotTwoSided,
        NotInvariant,
        FsViolation,
        ContextMismatch,
        SystemMismatch,
        CapExceeded,
        ZeroScalar,
        NotImplementedError,
        ValueError,
    ) as exc:
        payload = {
            "ok": False,
            "result": None,
            "diagnostics": [f"{type(exc).__name__}: {exc}"],
        }
        return 1, json.dumps(payload, sort_keys=True)
    if args.format == "dot" and outcome.rendered is not None:
        return (0 if outcome.ok else 1), outcome.rendered
    if args.format == "table":
        body = _render_table(
            {"ok": outcome.ok, "result": outcome.result, "diagnostics": outcome.diagnostics}
        )
        return (0 if outcome.ok else 1), body
    payload = {
        "ok": outcome.ok,
        "result": outcome.result,
        "diagnostics": outcome.diagnostics,
    }
    return (0 if outcome.ok else 1), json.dumps(payload, sort_keys=True)


def main(argv=None) -> int:
    code, body = run(sys.argv[1:] if argv is None else argv)
    print(body)
    return code


if __name__ == "__main__":
    sys.exit(main())
