# src/haar/moments.py
"""Exact Haar moments of degree 2 and 4 on O(n) and U(n).

Values are sums over pair partitions (orthogonal) or permutations (unitary)
of the index deltas times the degree-2/4 Weingarten weights, kept as
``Fraction`` until the caller asks for a float.
"""
import logging
import re
from collections import Counter
from fractions import Fraction
from itertools import permutations
from typing import Dict, List, Literal, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from src.errors import NotImplementedDegreeError, ParameterError, QueryParseError

logger = logging.getLogger(__name__)

Group = Literal["orthogonal", "unitary"]
Factor = Tuple[int, int, bool]

GROUP_PREFIX = {"O": "orthogonal", "U": "unitary"}
PREFIX_OF = {v: k for k, v in GROUP_PREFIX.items()}
SUPPORTED_DEGREES = (2, 4)


class MomentQuery(BaseModel):
    """E[prod_t u_{i_t j_t}] with optional conjugation of factors (unitary only)."""
    model_config = ConfigDict(frozen=True)

    group: Group
    factors: Tuple[Factor, ...] = Field(description="(row, col, conjugated) triples, 1-based.")
    dimension: int = Field(ge=1)

    @model_validator(mode="after")
    def _check_factors(self):
        if not self.factors:
            raise ParameterError("A moment query needs at least one factor")
        for row, col, conj in self.factors:
            if not (1 <= row <= self.dimension and 1 <= col <= self.dimension):
                raise ParameterError(f"Index ({row},{col}) out of range for n={self.dimension}")
            if conj and self.group == "orthogonal":
                raise ParameterError("Conjugated factors are meaningless on O(n)")
        return self

    @property
    def degree(self) -> int:
        return len(self.factors)

    def __str__(self):
        letter = "u" if self.group == "orthogonal" else "h"
        body = "".join(f"{letter}{'*' if c else ''}({i},{j})" for i, j, c in self.factors)
        return f"{PREFIX_OF[self.group]}:{body}@n={self.dimension}"


class MomentPolynomial(BaseModel):
    """Signed sum of monomial queries, as produced by the q/t shorthands."""
    model_config = ConfigDict(frozen=True)

    text: str
    terms: Tuple[Tuple[int, MomentQuery], ...]

    @property
    def group(self) -> str:
        return self.terms[0][1].group

    @property
    def dimension(self) -> int:
        return self.terms[0][1].dimension

    def __str__(self):
        return self.text


# --- Parity rules ---

def satisfies_parity(q: MomentQuery) -> bool:
    if q.group == "orthogonal":
        rows = Counter(i for i, _, _ in q.factors)
        cols = Counter(j for _, j, _ in q.factors)
        return all(c % 2 == 0 for c in rows.values()) and all(c % 2 == 0 for c in cols.values())
    plain_rows = Counter(i for i, _, c in q.factors if not c)
    conj_rows = Counter(i for i, _, c in q.factors if c)
    plain_cols = Counter(j for _, j, c in q.factors if not c)
    conj_cols = Counter(j for _, j, c in q.factors if c)
    return plain_rows == conj_rows and plain_cols == conj_cols


# --- Weingarten weights ---

def pair_partitions(positions: Sequence[int]) -> List[Tuple[Tuple[int, int], ...]]:
    if not positions:
        return [()]
    first, rest = positions[0], positions[1:]
    out = []
    for idx, partner in enumerate(rest):
        remaining = rest[:idx] + rest[idx + 1:]
        for tail in pair_partitions(remaining):
            out.append(((first, partner),) + tail)
    return out


def orthogonal_weight(n: int, degree: int, same: bool) -> Fraction:
    if degree == 2:
        return Fraction(1, n)
    denom = (n - 1) * n * (n + 2)
    return Fraction(n + 1, denom) if same else Fraction(-1, denom)


def unitary_weight(n: int, degree: int, identity: bool) -> Fraction:
    if degree == 2:
        return Fraction(1, n)
    return Fraction(1, n * n - 1) if identity else Fraction(-1, n * (n * n - 1))


def _check_degree(q: MomentQuery) -> None:
    if q.degree not in SUPPORTED_DEGREES:
        raise NotImplementedDegreeError(f"Degree {q.degree} moments are not supported (query {q})")


def _matches(values: Sequence[int], pairing) -> bool:
    return all(values[a] == values[b] for a, b in pairing)


def orthogonal_moment_oracle(q: Union[MomentQuery, MomentPolynomial]) -> Fraction:
    """Exact E[prod u_{i_t j_t}] for Haar u on O(n)."""
    if isinstance(q, MomentPolynomial):
        return sum((c * orthogonal_moment_oracle(t) for c, t in q.terms), Fraction(0))
    if q.group != "orthogonal":
        raise ParameterError(f"Query {q} is not an orthogonal query")
    if not satisfies_parity(q):
        return Fraction(0)
    _check_degree(q)
    n = q.dimension
    if n == 1:
        return Fraction(1)
    rows = [i for i, _, _ in q.factors]
    cols = [j for _, j, _ in q.factors]
    pairings = pair_partitions(list(range(q.degree)))
    total = Fraction(0)
    for p in pairings:
        if not _matches(rows, p):
            continue
        for r in pairings:
            if _matches(cols, r):
                total += orthogonal_weight(n, q.degree, p == r)
    return total


def unitary_moment_oracle(q: Union[MomentQuery, MomentPolynomial]) -> Fraction:
    """Exact E[prod h * prod conj(h)] for Haar h on U(n); zero if unbalanced."""
    if isinstance(q, MomentPolynomial):
        return sum((c * unitary_moment_oracle(t) for c, t in q.terms), Fraction(0))
    if q.group != "unitary":
        raise ParameterError(f"Query {q} is not a unitary query")
    if not satisfies_parity(q):
        return Fraction(0)
    _check_degree(q)
    n = q.dimension
    if n == 1:
        return Fraction(1)
    plain = [(i, j) for i, j, c in q.factors if not c]
    conj = [(i, j) for i, j, c in q.factors if c]
    d = len(plain)
    total = Fraction(0)
    for sigma in permutations(range(d)):
        if any(plain[s][0] != conj[sigma[s]][0] for s in range(d)):
            continue
        for tau in permutations(range(d)):
            if all(plain[s][1] == conj[tau[s]][1] for s in range(d)):
                total += unitary_weight(n, q.degree, sigma == tau)
    return total


def exact_moment(q: Union[MomentQuery, MomentPolynomial]) -> Fraction:
    group = q.group
    if group == "orthogonal":
        return orthogonal_moment_oracle(q)
    return unitary_moment_oracle(q)


def q_covariance(i: int, j: int, l: int, p: int, n: int) -> Fraction:
    """E[q_ij q_lp] for q_ij = u_i1 u_j2 - u_i2 u_j1."""
    if n < 2:
        raise ParameterError(f"q covariance needs n >= 2, got {n}")
    return Fraction(2, n * (n - 1)) * (int(i == l and j == p) - int(i == p and j == l))


def twisted_covariance(i: int, j: int, r: int, s: int, n: int) -> Fraction:
    """E[(h_i1 conj(h_j2) - h_i2 conj(h_j1)) (h_r1 conj(h_s2) - h_r2 conj(h_s1))]."""
    if n < 2:
        raise ParameterError(f"twisted covariance needs n >= 2, got {n}")
    return (Fraction(-2, (n - 1) * (n + 1)) * int(i == s and j == r)
            + Fraction(2, (n - 1) * n * (n + 1)) * int(i == j and r == s))


# --- Query grammar ---

_HEADER = re.compile(r"^\s*([OU])\s*:\s*(.+?)\s*@\s*n\s*=\s*(\d+)\s*$")
_TOKEN = r"(u|h\*|h|q|t)\(\s*(\d+)\s*,\s*(\d+)\s*\)"
_BODY = re.compile(rf"(?:{_TOKEN}\s*)+")

ALLOWED_TOKENS = {"orthogonal": {"u", "q"}, "unitary": {"h", "h*", "t"}}


def _expand(token: str, i: int, j: int) -> List[Tuple[int, List[Factor]]]:
    if token == "u" or token == "h":
        return [(1, [(i, j, False)])]
    if token == "h*":
        return [(1, [(i, j, True)])]
    if token == "q":
        return [(1, [(i, 1, False), (j, 2, False)]), (-1, [(i, 2, False), (j, 1, False)])]
    return [(1, [(i, 1, False), (j, 2, True)]), (-1, [(i, 2, False), (j, 1, True)])]


def parse_moment_query(text: str) -> MomentPolynomial:
    """Parses e.g. "O:u(1,1)u(2,2)@n=5", "U:h(1,1)h*(1,2)@n=6" or "O:q(1,2)q(1,2)@n=5"."""
    header = _HEADER.match(text)
    if not header:
        raise QueryParseError(f"Malformed moment query '{text}'")
    group = GROUP_PREFIX[header.group(1)]
    body, n = header.group(2), int(header.group(3))
    if n < 1:
        raise QueryParseError(f"Dimension must be positive in '{text}'")
    if not _BODY.fullmatch(body):
        raise QueryParseError(f"Cannot parse factors '{body}' in '{text}'")

    terms: List[Tuple[int, List[Factor]]] = [(1, [])]
    for token, i, j in re.findall(_TOKEN, body):
        i, j = int(i), int(j)
        if token not in ALLOWED_TOKENS[group]:
            raise QueryParseError(f"Factor '{token}' is not valid for the {group} group in '{text}'")
        if not (1 <= i <= n and 1 <= j <= n):
            raise QueryParseError(f"Index ({i},{j}) out of range for n={n} in '{text}'")
        if token in ("q", "t") and n < 2:
            raise QueryParseError(f"'{token}' needs n >= 2 in '{text}'")
        terms = [(c1 * c2, f1 + f2) for c1, f1 in terms for c2, f2 in _expand(token, i, j)]

    queries = tuple(
        (coeff, MomentQuery(group=group, factors=tuple(factors), dimension=n)) for coeff, factors in terms
    )
    compact = re.sub(r"\s+", "", body)
    canonical = f"{header.group(1)}:{compact}@n={n}"
    return MomentPolynomial(text=canonical, terms=queries)




# --- Trace contractions ---

# (operands as (index into (A, B), conjugated), einsum subscripts, M factors (row, col, conjugated))
TRACE_PATTERNS = {
    ("orthogonal", "tr(AMBM)"): (
        ((0, False), (1, False)), "pq,rs->", (("q", "r", False), ("s", "p", False)),
    ),
    ("orthogonal", "tr(AMBM)^2"): (
        ((0, False), (1, False), (0, False), (1, False)),
        "pq,rs,tu,vw->",
        (("q", "r", False), ("s", "p", False), ("u", "v", False), ("w", "t", False)),
    ),
    ("unitary", "tr(AM)conj(tr(BM))"): (
        ((0, False), (1, True)), "pq,rs->", (("q", "p", False), ("s", "r", True)),
    ),
    ("unitary", "|tr(AM)tr(BM)|^2"): (
        ((0, False), (1, False), (0, True), (1, True)),
        "pq,rs,tu,vw->",
        (("q", "p", False), ("s", "r", False), ("u", "t", True), ("w", "v", True)),
    ),
    ("unitary", "|tr(AMBM)|^2"): (
        ((0, False), (1, False), (0, True), (1, True)),
        "pq,rs,tu,vw->",
        (("q", "r", False), ("s", "p", False), ("u", "v", True), ("w", "t", True)),
    ),
    ("unitary", "tr(AM)tr(BM)conj(tr(AMBM))"): (
        ((0, False), (1, False), (0, True), (1, True)),
        "pq,rs,tu,vw->",
        (("q", "p", False), ("s", "r", False), ("u", "v", True), ("w", "t", True)),
    ),
}


def _find(parent: Dict[str, str], x: str) -> str:
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


def _identified_sum(subscripts: str, operands: Sequence[np.ndarray], links, n: int) -> complex:
    """Sums the coefficient tensor with the index letters in ``links`` set equal."""
    inputs = subscripts.split("->")[0]
    letters = set(inputs.replace(",", "")) | {c for pair in links for c in pair}
    parent = {c: c for c in letters}
    for a, b in links:
        ra, rb = _find(parent, a), _find(parent, b)
        if ra != rb:
            parent[rb] = ra
    mapped = "".join(_find(parent, c) if c != "," else c for c in inputs)
    # classes touched only by M factors range freely over 1..n
    free = {_find(parent, c) for c in letters} - set(mapped.replace(",", ""))
    value = np.einsum(f"{mapped}->", *operands, optimize=True)
    return complex(value) * n ** len(free)


def expected_contraction(
    group: str,
    subscripts: str,
    operands: Sequence[np.ndarray],
    m_factors: Sequence[Tuple[str, str, bool]],
    n: int,
) -> complex:
    """E[sum over letters of einsum(subscripts, operands) * prod M_{row col}] under Haar measure.

    Each M factor names the einsum letters carrying its row and column index;
    conjugated factors (unitary only) stand for conj(M_{row col}).
    """
    degree = len(m_factors)
    if degree not in SUPPORTED_DEGREES:
        raise NotImplementedDegreeError(f"Trace contractions of degree {degree} are not supported")
    if n < 2 and degree == 4:
        raise ParameterError("Degree-4 contractions need n >= 2")
    total = 0j
    if group == "orthogonal":
        pairings = pair_partitions(list(range(degree)))
        for p in pairings:
            for r in pairings:
                weight = orthogonal_weight(n, degree, p == r)
                links = [(m_factors[a][0], m_factors[b][0]) for a, b in p]
                links += [(m_factors[a][1], m_factors[b][1]) for a, b in r]
                total += float(weight) * _identified_sum(subscripts, operands, links, n)
        return total
    plain = [f for f in m_factors if not f[2]]
    conj = [f for f in m_factors if f[2]]
    if len(plain) != len(conj):
        return 0j
    d = len(plain)
    for sigma in permutations(range(d)):
        for tau in permutations(range(d)):
            weight = unitary_weight(n, degree, sigma == tau)
            links = [(plain[s][0], conj[sigma[s]][0]) for s in range(d)]
            links += [(plain[s][1], conj[tau[s]][1]) for s in range(d)]
            total += float(weight) * _identified_sum(subscripts, operands, links, n)
    return total


def expected_trace_quartic(group: str, operands: Sequence[np.ndarray], pattern: str) -> complex:
    """Exact expectation of a named trace product in two matrices (A, B), e.g. "tr(AMBM)^2"."""
    key = (group, pattern)
    if key not in TRACE_PATTERNS:
        raise ParameterError(f"Unknown trace pattern '{pattern}' for the {group} group")
    if len(operands) != 2:
        raise ParameterError("Trace patterns take exactly two matrices (A, B)")
    picks, subscripts, factors = TRACE_PATTERNS[key]
    mats = [np.conj(operands[idx]) if conj else np.asarray(operands[idx]) for idx, conj in picks]
    n = mats[0].shape[0]
    return expected_contraction(group, subscripts, mats, factors, n)
