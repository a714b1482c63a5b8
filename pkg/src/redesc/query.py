"""Query ASTs with three-valued evaluation against a view.

Queries are logical formulas over one view's attributes: AND/OR/NOT over
interval, boolean, and categorical literals. Evaluation uses strong Kleene
semantics with the truth ordering FALSE < UNKNOWN < TRUE: a literal over a
missing cell is UNKNOWN, AND takes the minimum, OR the maximum, and NOT swaps
TRUE/FALSE while fixing UNKNOWN.

Two evaluation paths exist on purpose: `eval_query` is a plain row-by-row
interpreter, `tri_support` a vectorized columnwise pass. They are kept
independent so each can check the other.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Iterator, Union

import numpy as np

from .dataset import BOOLEAN, CATEGORICAL, NUMERIC, View

FALSE = 0
UNKNOWN = 1
TRUE = 2

_INF = float("inf")


class QuerySyntaxError(ValueError):
    """Query text that does not conform to the grammar."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


class QueryStructureError(ValueError):
    """Query referencing attributes that do not exist in the target view."""


@dataclass(frozen=True)
class Literal:
    """Single attribute test, optionally negated.

    Numeric attributes use a closed interval [lo, hi] with infinite endpoints
    allowed; boolean attributes test is-true; categorical attributes test
    equality with one label.
    """

    attr: int
    kind: str
    lo: float = -_INF
    hi: float = _INF
    category: str | None = None
    negated: bool = False

    def __post_init__(self) -> None:
        if self.kind == NUMERIC and self.lo > self.hi:
            raise ValueError(f"inverted interval bounds [{self.lo}, {self.hi}]")
        if self.kind == CATEGORICAL and self.category is None:
            raise ValueError("categorical literal requires a category label")


@dataclass(frozen=True)
class Leaf:
    literal: Literal


@dataclass(frozen=True)
class And:
    children: tuple["Node", ...]


@dataclass(frozen=True)
class Or:
    children: tuple["Node", ...]


@dataclass(frozen=True)
class Not:
    child: "Node"


Node = Union[Leaf, And, Or, Not]


@dataclass(frozen=True)
class Query:
    root: Node
    view_id: int


# ---------------------------------------------------------------------------
# Tri-valued supports
# ---------------------------------------------------------------------------


def bools_to_mask(flags: np.ndarray) -> int:
    """Pack a boolean row vector into an int bitmask (bit i = row i)."""
    packed = np.packbits(flags.astype(np.uint8), bitorder="little")
    return int.from_bytes(packed.tobytes(), "little")


def mask_to_bools(mask: int, n: int) -> np.ndarray:
    nbytes = max(1, (n + 7) // 8)
    raw = np.frombuffer(mask.to_bytes(nbytes, "little"), dtype=np.uint8)
    return np.unpackbits(raw, bitorder="little")[:n].astype(bool)


def mask_to_indices(mask: int) -> list[int]:
    out = []
    i = 0
    while mask:
        low = mask & -mask
        out.append(low.bit_length() - 1)
        mask ^= low
        i += 1
    return out


@dataclass(frozen=True)
class TriSupport:
    """Partition of the instance set by query outcome.

    `in_mask` marks instances the query definitely describes, `unk_mask` those
    whose status is unknown due to missing values; everything else is out.
    Masks are int bitmasks over instance ids 0..n-1.
    """

    in_mask: int
    unk_mask: int
    n: int

    def __post_init__(self) -> None:
        if self.in_mask & self.unk_mask:
            raise ValueError("in and unknown sets overlap")
        if self.in_mask >> self.n or self.unk_mask >> self.n:
            raise ValueError("mask bits beyond instance count")

    @classmethod
    def from_sets(cls, in_set, unk_set, n: int) -> "TriSupport":
        in_mask = 0
        for e in in_set:
            in_mask |= 1 << e
        unk_mask = 0
        for e in unk_set:
            unk_mask |= 1 << e
        return cls(in_mask, unk_mask, n)

    @property
    def in_set(self) -> frozenset[int]:
        return frozenset(mask_to_indices(self.in_mask))

    @property
    def unk_set(self) -> frozenset[int]:
        return frozenset(mask_to_indices(self.unk_mask))

    def in_count(self) -> int:
        return self.in_mask.bit_count()

    def unk_count(self) -> int:
        return self.unk_mask.bit_count()

    def intersect(self, other: "TriSupport") -> "TriSupport":
        """Kleene AND combined at the set level (min per instance)."""
        in_mask = self.in_mask & other.in_mask
        nf1 = self.in_mask | self.unk_mask
        nf2 = other.in_mask | other.unk_mask
        return TriSupport(in_mask, (nf1 & nf2) & ~in_mask, self.n)

    def union(self, other: "TriSupport") -> "TriSupport":
        """Kleene OR combined at the set level (max per instance)."""
        in_mask = self.in_mask | other.in_mask
        return TriSupport(in_mask, (self.unk_mask | other.unk_mask) & ~in_mask, self.n)


# ---------------------------------------------------------------------------
# Row-by-row interpreter
# ---------------------------------------------------------------------------


def _check_attrs(node: Node, view: View) -> None:
    for lit in iter_literals(node):
        if lit.attr < 0 or lit.attr >= view.n_cols:
            raise QueryStructureError(f"attribute id {lit.attr} out of range for view")
        if view.attributes[lit.attr].kind != lit.kind:
            raise QueryStructureError(
                f"literal kind {lit.kind} does not match attribute "
                f"{view.attributes[lit.attr].name!r} ({view.attributes[lit.attr].kind})"
            )


def _eval_literal_row(lit: Literal, view: View, row: int) -> int:
    col = view.columns[lit.attr]
    if lit.kind == CATEGORICAL:
        code = col[row]
        if code < 0:
            return UNKNOWN
        holds = view.attributes[lit.attr].categories[int(code)] == lit.category
    else:
        x = col[row]
        if math.isnan(x):
            return UNKNOWN
        if lit.kind == BOOLEAN:
            holds = x == 1.0
        else:
            holds = lit.lo <= x <= lit.hi
    value = TRUE if holds else FALSE
    return 2 - value if lit.negated else value


def _eval_node_row(node: Node, view: View, row: int) -> int:
    if isinstance(node, Leaf):
        return _eval_literal_row(node.literal, view, row)
    if isinstance(node, And):
        value = TRUE
        for child in node.children:
            value = min(value, _eval_node_row(child, view, row))
            if value == FALSE:
                return FALSE
        return value
    if isinstance(node, Or):
        value = FALSE
        for child in node.children:
            value = max(value, _eval_node_row(child, view, row))
            if value == TRUE:
                return TRUE
        return value
    return 2 - _eval_node_row(node.child, view, row)


def eval_query(q: Query, view: View, row: int) -> int:
    """Evaluate one instance row; returns FALSE, UNKNOWN, or TRUE."""
    _check_attrs(q.root, view)
    return _eval_node_row(q.root, view, row)


# ---------------------------------------------------------------------------
# Vectorized support computation
# ---------------------------------------------------------------------------


def _eval_literal_vec(lit: Literal, view: View) -> np.ndarray:
    col = view.columns[lit.attr]
    if lit.kind == CATEGORICAL:
        code = view.attributes[lit.attr].category_code(lit.category)
        holds = col == code
        unknown = col < 0
    elif lit.kind == BOOLEAN:
        holds = col == 1.0
        unknown = np.isnan(col)
    else:
        holds = (col >= lit.lo) & (col <= lit.hi)
        unknown = np.isnan(col)
    out = np.where(holds, TRUE, FALSE).astype(np.int8)
    out[unknown] = UNKNOWN
    return 2 - out if lit.negated else out


def _eval_node_vec(node: Node, view: View) -> np.ndarray:
    if isinstance(node, Leaf):
        return _eval_literal_vec(node.literal, view)
    if isinstance(node, And):
        return np.minimum.reduce([_eval_node_vec(c, view) for c in node.children])
    if isinstance(node, Or):
        return np.maximum.reduce([_eval_node_vec(c, view) for c in node.children])
    return 2 - _eval_node_vec(node.child, view)


def tri_support(q: Query, view: View) -> TriSupport:
    """Partition all instances of `view` by the query outcome."""
    _check_attrs(q.root, view)
    values = _eval_node_vec(q.root, view)
    return TriSupport(bools_to_mask(values == TRUE), bools_to_mask(values == UNKNOWN), view.n_rows)


# ---------------------------------------------------------------------------
# Structure helpers
# ---------------------------------------------------------------------------


def iter_literals(node: Node) -> Iterator[Literal]:
    if isinstance(node, Leaf):
        yield node.literal
    elif isinstance(node, Not):
        yield from iter_literals(node.child)
    else:
        for child in node.children:
            yield from iter_literals(child)


def query_attrs(q: Query) -> frozenset[int]:
    """Set of attribute ids used by the query."""
    return frozenset(lit.attr for lit in iter_literals(q.root))


def query_attr_count(q: Query) -> int:
    """Number of literal occurrences (query size contribution)."""
    return sum(1 for _ in iter_literals(q.root))


def is_conjunctive(q: Query) -> bool:
    """True when the query is a single literal or an AND of literals."""
    root = q.root
    if isinstance(root, Leaf):
        return True
    return isinstance(root, And) and all(isinstance(c, Leaf) for c in root.children)


def _leaf_key(lit: Literal):
    return (
        lit.attr,
        lit.negated,
        lit.lo,
        lit.hi,
        lit.category if lit.category is not None else "",
    )


def _node_key(node: Node):
    if isinstance(node, Leaf):
        return (0, _leaf_key(node.literal))
    if isinstance(node, And):
        return (1, tuple(_node_key(c) for c in node.children))
    if isinstance(node, Or):
        return (2, tuple(_node_key(c) for c in node.children))
    return (3, _node_key(node.child))


def _canon_node(node: Node) -> Node:
    if isinstance(node, Leaf):
        return node
    if isinstance(node, Not):
        child = _canon_node(node.child)
        if isinstance(child, Leaf):
            lit = child.literal
            return Leaf(Literal(lit.attr, lit.kind, lit.lo, lit.hi, lit.category, not lit.negated))
        if isinstance(child, Not):
            return child.child
        return Not(child)
    same = And if isinstance(node, And) else Or
    flat: list[Node] = []
    for child in node.children:
        c = _canon_node(child)
        if isinstance(c, same):
            flat.extend(c.children)
        else:
            flat.append(c)
    unique: dict = {}
    for c in flat:
        unique.setdefault(_node_key(c), c)
    ordered = [unique[k] for k in sorted(unique)]
    if len(ordered) == 1:
        return ordered[0]
    return same(tuple(ordered))


def canonicalize(q: Query) -> Query:
    """Canonical form: negations folded into leaves where possible, nested
    same-operator nodes flattened, duplicate children dropped, children
    ordered by (attribute id, bounds)."""
    return Query(_canon_node(q.root), q.view_id)


# ---------------------------------------------------------------------------
# Printing
# ---------------------------------------------------------------------------


def _fmt_num(x: float) -> str:
    return repr(float(x))


def _print_literal(lit: Literal, view: View) -> str:
    name = view.attributes[lit.attr].name
    if lit.kind == NUMERIC:
        body = f"[{_fmt_num(lit.lo)} <= {name} <= {_fmt_num(lit.hi)}]"
    elif lit.kind == BOOLEAN:
        body = name
    else:
        body = f"{name}={lit.category}"
    return f"!{body}" if lit.negated else body


def _print_node(node: Node, view: View) -> str:
    if isinstance(node, Leaf):
        return _print_literal(node.literal, view)
    if isinstance(node, Not):
        return f"!({_print_node(node.child, view)})"
    if isinstance(node, And):
        parts = []
        for c in node.children:
            text = _print_node(c, view)
            parts.append(f"({text})" if isinstance(c, Or) else text)
        return " & ".join(parts)
    return " | ".join(_print_node(c, view) for c in node.children)


def print_query(q: Query, view: View) -> str:
    """Canonical text form; `parse_query(print_query(q))` round-trips."""
    return _print_node(canonicalize(q).root, view)


# ---------------------------------------------------------------------------
# Parsing
# ---------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
    | (?P<le><=)
    | (?P<num>[+-]?(?:inf(?:inity)?\b|\d+(?:\.\d*)?(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?))
    | (?P<name>[A-Za-z_][A-Za-z0-9_./]*)
    | (?P<sym>[&|!()\[\]=])
    """,
    re.VERBOSE,
)


def _tokenize(text: str) -> list[tuple[str, str, int]]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            raise QuerySyntaxError(f"unexpected character {text[pos]!r}", pos)
        kind = m.lastgroup
        if kind != "ws":
            tokens.append((kind, m.group(), pos))
        pos = m.end()
    tokens.append(("eof", "", len(text)))
    return tokens


class _Parser:
    def __init__(self, text: str, view: View, view_id: int):
        self.tokens = _tokenize(text)
        self.i = 0
        self.view = view
        self.view_id = view_id

    def peek(self):
        return self.tokens[self.i]

    def take(self, kind: str, value: str | None = None):
        tok = self.tokens[self.i]
        if tok[0] != kind or (value is not None and tok[1] != value):
            expected = value if value is not None else kind
            raise QuerySyntaxError(f"expected {expected!r}, got {tok[1] or 'end of input'!r}", tok[2])
        self.i += 1
        return tok

    def parse(self) -> Query:
        node = self.parse_or()
        tok = self.peek()
        if tok[0] != "eof":
            raise QuerySyntaxError(f"unexpected trailing input {tok[1]!r}", tok[2])
        return canonicalize(Query(node, self.view_id))

    def parse_or(self) -> Node:
        children = [self.parse_and()]
        while self.peek()[:2] == ("sym", "|"):
            self.take("sym", "|")
            children.append(self.parse_and())
        return children[0] if len(children) == 1 else Or(tuple(children))

    def parse_and(self) -> Node:
        children = [self.parse_factor()]
        while self.peek()[:2] == ("sym", "&"):
            self.take("sym", "&")
            children.append(self.parse_factor())
        return children[0] if len(children) == 1 else And(tuple(children))

    def parse_factor(self) -> Node:
        tok = self.peek()
        if tok[:2] == ("sym", "!"):
            self.take("sym", "!")
            inner = self.parse_factor()
            if isinstance(inner, Leaf):
                lit = inner.literal
                return Leaf(
                    Literal(lit.attr, lit.kind, lit.lo, lit.hi, lit.category, not lit.negated)
                )
            if isinstance(inner, Not):
                return inner.child
            return Not(inner)
        if tok[:2] == ("sym", "("):
            self.take("sym", "(")
            node = self.parse_or()
            self.take("sym", ")")
            return node
        if tok[:2] == ("sym", "["):
            return self.parse_interval()
        if tok[0] == "name":
            return self.parse_named()
        raise QuerySyntaxError(f"expected a literal, got {tok[1] or 'end of input'!r}", tok[2])

    def parse_number(self) -> float:
        tok = self.take("num")
        return float(tok[1])

    def parse_interval(self) -> Node:
        open_tok = self.take("sym", "[")
        lo = self.parse_number()
        self.take("le")
        name_tok = self.take("name")
        self.take("le")
        hi = self.parse_number()
        self.take("sym", "]")
        attr_id = self.resolve(name_tok, NUMERIC)
        if lo > hi:
            raise QuerySyntaxError(f"inverted interval bounds [{lo}, {hi}]", open_tok[2])
        return Leaf(Literal(attr_id, NUMERIC, lo, hi))

    def parse_named(self) -> Node:
        name_tok = self.take("name")
        if self.peek()[:2] == ("sym", "="):
            self.take("sym", "=")
            label_tok = self.peek()
            if label_tok[0] not in ("name", "num"):
                raise QuerySyntaxError("expected a category label after '='", label_tok[2])
            self.i += 1
            attr_id = self.resolve(name_tok, CATEGORICAL)
            attr = self.view.attributes[attr_id]
            if label_tok[1] not in attr.categories:
                raise QuerySyntaxError(
                    f"unknown category {label_tok[1]!r} for attribute {attr.name!r}",
                    label_tok[2],
                )
            return Leaf(Literal(attr_id, CATEGORICAL, category=label_tok[1]))
        attr_id = self.resolve(name_tok, BOOLEAN)
        return Leaf(Literal(attr_id, BOOLEAN))

    def resolve(self, name_tok, expected_kind: str) -> int:
        name = name_tok[1]
        try:
            attr_id = self.view.attribute_id(name)
        except Exception:
            raise QuerySyntaxError(f"unknown attribute name {name!r}", name_tok[2]) from None
        kind = self.view.attributes[attr_id].kind
        if kind != expected_kind:
            raise QuerySyntaxError(
                f"attribute {name!r} is {kind}, not {expected_kind}", name_tok[2]
            )
        return attr_id


def parse_query(text: str, view: View, view_id: int) -> Query:
    """Parse query text against a view's attribute table.

    Grammar: literals are `NAME` (boolean), `!NAME`, `NAME=LABEL`
    (categorical), and `[NUM <= NAME <= NUM]` (numeric interval, `inf`
    endpoints allowed); connectives are `&`, `|`, `!` and parentheses, with
    `&` binding tighter than `|`. The result is canonical.
    """
    return _Parser(text, view, view_id).parse()


# ---------------------------------------------------------------------------
# Minimization
# ---------------------------------------------------------------------------


def _leaf_count(node: Node) -> int:
    return sum(1 for _ in iter_literals(node))


def _remove_leaf(node: Node, target: int) -> tuple[Node | None, int]:
    """Rebuild `node` without the target-th leaf (preorder index).

    Returns (new node or None when emptied, number of leaves consumed).
    """
    if isinstance(node, Leaf):
        return (None, 1) if target == 0 else (node, 1)
    if isinstance(node, Not):
        child, used = _remove_leaf(node.child, target)
        return (None if child is None else Not(child)), used
    consumed = 0
    kept: list[Node] = []
    for child in node.children:
        new_child, used = _remove_leaf(child, target - consumed)
        consumed += used
        if new_child is not None:
            kept.append(new_child)
    if not kept:
        return None, consumed
    if len(kept) == 1:
        return kept[0], consumed
    ctor = And if isinstance(node, And) else Or
    return ctor(tuple(kept)), consumed


def _merge_intervals(node: Node) -> Node:
    if isinstance(node, Leaf):
        return node
    if isinstance(node, Not):
        return Not(_merge_intervals(node.child))
    children = [_merge_intervals(c) for c in node.children]
    if isinstance(node, Or):
        return Or(tuple(children))
    by_attr: dict[int, Literal] = {}
    rest: list[Node] = []
    for child in children:
        if (
            isinstance(child, Leaf)
            and child.literal.kind == NUMERIC
            and not child.literal.negated
        ):
            lit = child.literal
            prev = by_attr.get(lit.attr)
            if prev is None:
                by_attr[lit.attr] = lit
                continue
            lo, hi = max(prev.lo, lit.lo), min(prev.hi, lit.hi)
            if lo <= hi:
                by_attr[lit.attr] = Literal(lit.attr, NUMERIC, lo, hi)
            else:
                rest.append(child)  # empty intersection is unrepresentable; keep both
        else:
            rest.append(child)
    merged: list[Node] = [Leaf(lit) for lit in by_attr.values()] + rest
    if len(merged) == 1:
        return merged[0]
    return And(tuple(merged))


def minimize_query(q: Query, view: View) -> Query:
    """Support-preserving simplification.

    Greedily drops any literal whose removal leaves the tri-valued support
    unchanged, then intersects same-attribute interval literals under a
    common AND. The result evaluates identically to the input on `view`.
    """
    current = canonicalize(q)
    base = tri_support(current, view)
    changed = True
    while changed:
        changed = False
        n_leaves = _leaf_count(current.root)
        if n_leaves <= 1:
            break
        for target in range(n_leaves):
            candidate_root, _ = _remove_leaf(current.root, target)
            if candidate_root is None:
                continue
            candidate = Query(candidate_root, q.view_id)
            if tri_support(candidate, view) == base:
                current = candidate
                changed = True
                break
    current = canonicalize(Query(_merge_intervals(current.root), q.view_id))
    return current
