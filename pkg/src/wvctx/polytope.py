"""Exact rational polytopes: double description, hulls, and the tightness pipelines.

Everything here is exact. Coordinates are :class:`fractions.Fraction`; the
double-description core works on primitive integer rays so no tolerance ever
enters a vertex or facet count.

An H-representation stores inequalities ``c . x + b >= 0`` and equalities
``c . x + b == 0`` as ``(c, b)`` pairs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Iterable, Sequence

Vector = tuple[Fraction, ...]
Constraint = tuple[Vector, Fraction]


class PolytopeError(ValueError):
    pass


class UnboundedError(PolytopeError):
    """The H-representation describes an unbounded polyhedron."""


def to_fraction(x) -> Fraction:
    """Exact rational from ``int``, ``Fraction``, ``"a/b"`` or a decimal string.

    Floats are converted exactly (binary expansion), so prefer strings for
    user input.
    """
    if isinstance(x, Fraction):
        return x
    if isinstance(x, bool):
        raise PolytopeError("booleans are not rationals")
    if isinstance(x, (int, float)):
        return Fraction(x)
    if isinstance(x, str):
        try:
            return Fraction(x.strip())
        except (ValueError, ZeroDivisionError) as exc:
            raise PolytopeError(f"not a rational: {x!r}") from exc
    raise PolytopeError(f"not a rational: {x!r}")


def _vec(xs: Iterable) -> Vector:
    return tuple(to_fraction(x) for x in xs)


def format_rational(q: Fraction) -> str:
    return f"{q.numerator}/{q.denominator}"


@dataclass(frozen=True)
class HRep:
    dim: int
    inequalities: tuple[Constraint, ...] = ()
    equalities: tuple[Constraint, ...] = ()

    @classmethod
    def from_rows(cls, dim: int, inequalities=(), equalities=()) -> "HRep":
        def norm(rows):
            out = []
            for c, b in rows:
                c = _vec(c)
                if len(c) != dim:
                    raise PolytopeError(f"constraint has {len(c)} coefficients, expected {dim}")
                out.append((c, to_fraction(b)))
            return tuple(out)

        return cls(dim, norm(inequalities), norm(equalities))

    def contains(self, x: Sequence) -> bool:
        x = _vec(x)
        return all(_eval(c, b, x) >= 0 for c, b in self.inequalities) and all(
            _eval(c, b, x) == 0 for c, b in self.equalities
        )

    def tight(self, x: Sequence) -> frozenset[int]:
        """Indices of inequalities holding with equality at ``x``."""
        x = _vec(x)
        return frozenset(i for i, (c, b) in enumerate(self.inequalities) if _eval(c, b, x) == 0)

    def to_json(self) -> dict:
        def rows(cs):
            return [
                {"coefficients": [format_rational(v) for v in c], "constant": format_rational(b)}
                for c, b in cs
            ]

        return {"dim": self.dim, "inequalities": rows(self.inequalities), "equalities": rows(self.equalities)}


@dataclass(frozen=True)
class VRep:
    dim: int
    vertices: tuple[Vector, ...] = ()

    @classmethod
    def from_points(cls, points: Iterable[Sequence], dim: int | None = None) -> "VRep":
        seen: dict[Vector, None] = {}
        for p in points:
            seen.setdefault(_vec(p), None)
        verts = tuple(seen)
        if dim is None:
            if not verts:
                raise PolytopeError("dimension required for an empty vertex list")
            dim = len(verts[0])
        if any(len(v) != dim for v in verts):
            raise PolytopeError("vertices of inconsistent dimension")
        return cls(dim, verts)

    def __len__(self) -> int:
        return len(self.vertices)

    def project(self, coords: Sequence[int]) -> "VRep":
        return VRep.from_points((tuple(v[i] for i in coords) for v in self.vertices), len(coords))

    def to_json(self) -> dict:
        return {"dim": self.dim, "vertices": [[format_rational(q) for q in v] for v in self.vertices]}


def _eval(c: Vector, b: Fraction, x: Vector) -> Fraction:
    return sum((ci * xi for ci, xi in zip(c, x)), b)


# --- exact linear algebra -------------------------------------------------------


def _gcd_all(xs: Iterable[int]) -> int:
    return reduce(math.gcd, xs, 0)


def _primitive(v: Sequence[int]) -> tuple[int, ...]:
    g = _gcd_all(v)
    if g <= 1:
        return tuple(v)
    return tuple(a // g for a in v)


def _integerize(v: Sequence[Fraction]) -> tuple[int, ...]:
    """Smallest positive integer multiple of a rational vector (direction preserved)."""
    lcm = reduce(lambda a, q: a * q.denominator // math.gcd(a, q.denominator), v, 1)
    return _primitive([int(q * lcm) for q in v])


def _rank(rows: Sequence[Sequence[int]]) -> int:
    m = [list(r) for r in rows]
    if not m:
        return 0
    rank = 0
    for col in range(len(m[0])):
        piv = next((i for i in range(rank, len(m)) if m[i][col] != 0), None)
        if piv is None:
            continue
        m[rank], m[piv] = m[piv], m[rank]
        p = m[rank]
        for i in range(rank + 1, len(m)):
            f = m[i][col]
            if f:
                m[i] = list(_primitive([p[col] * a - f * b for a, b in zip(m[i], p)]))
        rank += 1
        if rank == len(m):
            break
    return rank


def _rref(rows: Sequence[Sequence[Fraction]], ncols: int):
    """Reduced row echelon form over the rationals; returns (rows, pivot columns)."""
    m = [list(r) for r in rows]
    pivots: list[int] = []
    r = 0
    for col in range(ncols):
        piv = next((i for i in range(r, len(m)) if m[i][col] != 0), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = 1 / m[r][col]
        m[r] = [a * inv for a in m[r]]
        for i in range(len(m)):
            if i != r and m[i][col] != 0:
                f = m[i][col]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(col)
        r += 1
        if r == len(m):
            break
    return m[:r], pivots


def _nullspace(rows: Sequence[Sequence[Fraction]], ncols: int) -> list[list[Fraction]]:
    red, pivots = _rref(rows, ncols)
    free = [j for j in range(ncols) if j not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for row, p in zip(red, pivots):
            v[p] = -row[f]
        basis.append(v)
    return basis


def _solve_affine(equalities: Sequence[Constraint], n: int):
    """Parametrise ``{x : c.x + b = 0}`` as ``x = x0 + N t``; ``None`` if inconsistent."""
    if not equalities:
        return [Fraction(0)] * n, [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    aug = [list(c) + [-b] for c, b in equalities]
    red, pivots = _rref(aug, n + 1)
    if n in pivots:
        return None
    x0 = [Fraction(0)] * n
    for row, p in zip(red, pivots):
        x0[p] = row[n]
    null = _nullspace([row[:n] for row in red], n)
    # columns of N are the null-space vectors
    N = [[null[k][i] for k in range(len(null))] for i in range(n)]
    return x0, N


# --- double description ------------------------------------------------------------


def extreme_rays(rows: Sequence[Sequence[int]]) -> list[tuple[int, ...]]:
    """Extreme rays of the pointed cone ``{y : R y >= 0}`` by double description.

    ``rows`` must have full column rank. Rows are inserted in the given order;
    two rays are adjacent when their common tight rows have rank ``d - 2``.
    """
    rows = [tuple(int(a) for a in r) for r in rows]
    if not rows:
        raise PolytopeError("cone needs at least one constraint")
    d = len(rows[0])

    basis: list[int] = []
    for i, r in enumerate(rows):
        if _rank([rows[j] for j in basis] + [r]) > len(basis):
            basis.append(i)
            if len(basis) == d:
                break
    if len(basis) < d:
        raise PolytopeError("constraint matrix is rank deficient (cone not pointed)")

    # Initial simplicial cone: rays are the columns of B^{-1}.
    B = [[Fraction(a) for a in rows[i]] for i in basis]
    rays: list[tuple[int, ...]] = []
    zeros: list[int] = []
    for j in range(d):
        rhs = [Fraction(int(k == j)) for k in range(d)]
        red, _ = _rref([b + [r] for b, r in zip(B, rhs)], d + 1)
        sol = [red[k][d] for k in range(d)]
        ray = _integerize(sol)
        rays.append(ray)
        zeros.append(sum(1 << basis[k] for k in range(d) if k != j))

    done_mask = sum(1 << i for i in basis)
    for i, a in enumerate(rows):
        if done_mask >> i & 1:
            continue
        vals = [sum(x * y for x, y in zip(a, r)) for r in rays]
        pos = [k for k, v in enumerate(vals) if v > 0]
        neg = [k for k, v in enumerate(vals) if v < 0]
        new_rays: list[tuple[int, ...]] = []
        new_zeros: list[int] = []
        for k, v in enumerate(vals):
            if v > 0:
                new_rays.append(rays[k])
                new_zeros.append(zeros[k])
            elif v == 0:
                new_rays.append(rays[k])
                new_zeros.append(zeros[k] | (1 << i))
        for p in pos:
            for n in neg:
                common = zeros[p] & zeros[n]
                if bin(common).count("1") < d - 2:
                    continue
                tight_rows = [rows[j] for j in range(len(rows)) if common >> j & 1]
                if _rank(tight_rows) != d - 2:
                    continue
                vp, vn = vals[p], vals[n]
                combo = _primitive([vp * x - vn * y for x, y in zip(rays[n], rays[p])])
                new_rays.append(combo)
                new_zeros.append(common | (1 << i))
        rays, zeros = new_rays, new_zeros
        done_mask |= 1 << i
    return rays


# --- representation conversion -------------------------------------------------------


def hrep_to_vrep(h: HRep) -> VRep:
    """Vertices of a bounded H-polytope.

    Raises
    ------
    UnboundedError
        If the polyhedron is nonempty and has a recession direction.
    """
    n = h.dim
    sol = _solve_affine(h.equalities, n)
    if sol is None:
        return VRep(n, ())
    x0, N = sol
    k = len(N[0]) if N and N[0] else 0
    # Inequalities in the parameters t: (c N) t + (c x0 + b) >= 0.
    reduced = []
    for c, b in h.inequalities:
        coef = [sum(c[i] * N[i][j] for i in range(n)) for j in range(k)]
        const = _eval(c, b, tuple(x0))
        reduced.append((coef, const))
    if k == 0:
        ok = all(const >= 0 for _, const in reduced)
        return VRep(n, (tuple(x0),) if ok else ())

    hom = [_integerize([Fraction(1)] + [Fraction(0)] * k)]
    for coef, const in reduced:
        if all(c == 0 for c in coef) and const == 0:
            continue
        hom.append(_integerize([const] + coef))
    frows = [[Fraction(a) for a in r] for r in hom]
    if _rank(hom) < k + 1:
        # Lineality: nonempty means unbounded. Restrict to its complement to decide.
        lin = _nullspace(frows, k + 1)
        comp = _nullspace(lin, k + 1)
        W = [[comp[j][i] for j in range(len(comp))] for i in range(k + 1)]
        sub = [_integerize([sum(r[i] * W[i][j] for i in range(k + 1)) for j in range(len(comp))]) for r in frows]
        sub = [r for r in sub if any(r)]
        if not sub:
            raise UnboundedError("polyhedron is unbounded")
        rays_t = extreme_rays(sub)
        rays = [[sum(W[i][j] * r[j] for j in range(len(comp))) for i in range(k + 1)] for r in rays_t]
        if any(r[0] > 0 for r in rays):
            raise UnboundedError("polyhedron is unbounded")
        return VRep(n, ())

    rays = extreme_rays(hom)
    if not any(r[0] > 0 for r in rays):
        return VRep(n, ())
    if any(r[0] == 0 for r in rays):
        raise UnboundedError("polyhedron is unbounded")
    verts = []
    for r in rays:
        t = [Fraction(r[j + 1], r[0]) for j in range(k)]
        verts.append(tuple(x0[i] + sum(N[i][j] * t[j] for j in range(k)) for i in range(n)))
    return VRep.from_points(sorted(verts), n)


def normalize_constraint(c: Sequence, b, equality: bool = False) -> tuple[tuple[int, ...], int]:
    """Primitive integer form of ``c.x + b (>= or ==) 0``.

    Equalities additionally get a positive first nonzero coefficient.
    """
    vec = _integerize(_vec(c) + (to_fraction(b),))
    if not any(vec[:-1]):
        raise PolytopeError("constraint has a zero coefficient vector")
    if equality:
        first = next(a for a in vec if a != 0)
        if first < 0:
            vec = tuple(-a for a in vec)
    return vec[:-1], vec[-1]


def affine_hull(v: VRep) -> tuple[tuple[Constraint, ...], list[int]]:
    """Equalities of the affine hull and coordinates that parametrise it injectively."""
    if not v.vertices:
        raise PolytopeError("empty vertex set")
    base = v.vertices[0]
    diffs = [[a - b for a, b in zip(p, base)] for p in v.vertices[1:]]
    _, pivots = _rref(diffs, v.dim) if diffs else ([], [])
    eqs = []
    for c in _nullspace(diffs, v.dim) if diffs else [[Fraction(int(i == j)) for j in range(v.dim)] for i in range(v.dim)]:
        b = -sum(ci * xi for ci, xi in zip(c, base))
        ci, bi = normalize_constraint(c, b, equality=True)
        eqs.append((tuple(Fraction(a) for a in ci), Fraction(bi)))
    return tuple(eqs), pivots


def affine_dimension(v: VRep) -> int:
    if not v.vertices:
        return -1
    return len(affine_hull(v)[1])


def vrep_to_hrep(v: VRep) -> HRep:
    """Irredundant facets of the convex hull; lower-dimensional hulls also get equalities."""
    if not v.vertices:
        raise PolytopeError("convex hull of no points")
    eqs, coords = affine_hull(v)
    k = len(coords)
    if k == 0:
        return HRep(v.dim, (), eqs)
    rows = [_integerize([Fraction(1)] + [p[i] for i in coords]) for p in v.vertices]
    ineqs = []
    for ray in extreme_rays(rows):
        c = [Fraction(0)] * v.dim
        for j, i in enumerate(coords):
            c[i] = Fraction(ray[j + 1])
        ci, bi = normalize_constraint(c, ray[0])
        ineqs.append((tuple(Fraction(a) for a in ci), Fraction(bi)))
    ineqs.sort()
    return HRep(v.dim, tuple(ineqs), eqs)


def extreme_points(points: Iterable[Sequence], dim: int | None = None) -> VRep:
    """Vertices of the convex hull of a finite point set."""
    pts = VRep.from_points(points, dim)
    if len(pts) <= 1:
        return pts
    return hrep_to_vrep(vrep_to_hrep(pts))


def facet_contains(h: HRep, target: tuple[Sequence, object]) -> bool:
    """Whether some inequality of ``h`` equals ``target`` up to positive scaling."""
    c, b = target
    if len(c) != h.dim:
        raise PolytopeError("target has the wrong dimension")
    want = normalize_constraint(c, b)
    return any(normalize_constraint(ci, bi) == want for ci, bi in h.inequalities)


def supporting_vertices(h: HRep, v: VRep) -> list[list[Vector]]:
    """For each inequality, the vertices on which it is tight."""
    return [[p for p in v.vertices if _eval(c, b, p) == 0] for c, b in h.inequalities]


# --- the tightness pipelines ------------------------------------------------------------


@dataclass(frozen=True)
class ScenarioParams:
    p_d: Fraction
    p_tilde: Fraction
    q_0: Fraction = Fraction(1, 2)
    q_star: Fraction = Fraction(1, 2)

    def __post_init__(self):
        for name in ("p_d", "p_tilde", "q_0", "q_star"):
            val = to_fraction(getattr(self, name))
            if not 0 <= val <= 1:
                raise PolytopeError(f"{name} must lie in [0, 1]")
            object.__setattr__(self, name, val)
        if self.q_star == 0:
            raise PolytopeError("q_star must be positive")


def assignment_polytope(params: ScenarioParams) -> tuple[HRep, VRep]:
    """Measurement-noncontextual response assignments for a single ontic state.

    Coordinates: ``p_M1(1), p_M1(2), p_M2(1), p_M2(2), p_M3(1..4)`` where ``M1``
    is the postselection, ``M2`` the disturbing measurement and ``M3`` the
    sequential (binned pointer, postselection) measurement.
    """
    pd, pt = params.p_d, params.p_tilde
    one, zero = Fraction(1), Fraction(0)

    def unit(i):
        return tuple(one if j == i else zero for j in range(8))

    ineqs = [(unit(i), zero) for i in range(8)]
    ineqs.append(((zero, zero, zero, zero, -one, -one, zero, zero), pt))
    eqs = [
        ((one, one, zero, zero, zero, zero, zero, zero), -one),
        ((zero, zero, one, one, zero, zero, zero, zero), -one),
        ((zero, zero, zero, zero, one, one, one, one), -one),
        ((1 - pd, zero, pd, zero, -one, zero, -one, zero), zero),
        ((zero, 1 - pd, zero, pd, zero, -one, zero, -one), zero),
    ]
    h = HRep(8, tuple(ineqs), tuple(eqs))
    return h, hrep_to_vrep(h)


@dataclass(frozen=True)
class Lemma1Result:
    params: ScenarioParams
    assignment: VRep
    deterministic: VRep
    reduced: VRep
    hull: HRep

    def expected_facet(self) -> tuple[tuple[Fraction, Fraction], Fraction]:
        """``p_minus <= p_F p_tilde + (1 - p_F) min(p_d, p_tilde)`` as ``c.x + b >= 0``."""
        pt = self.params.p_tilde
        pdp = min(self.params.p_d, pt)
        return (pt - pdp, Fraction(-1)), pdp

    def has_expected_facet(self) -> bool:
        return facet_contains(self.hull, self.expected_facet())


def lemma1_pipeline(params: ScenarioParams) -> Lemma1Result:
    """Outcome-deterministic vertices projected onto ``(p_F, p_minus)`` and hulled."""
    _, verts = assignment_polytope(params)
    det = VRep(8, tuple(v for v in verts.vertices if v[0] in (0, 1)))
    reduced = extreme_points((v[0], v[4]) for v in det.vertices)
    return Lemma1Result(params, verts, det, reduced, vrep_to_hrep(reduced))


@dataclass(frozen=True)
class Lemma2Result:
    params: ScenarioParams
    assignment: VRep
    reduced: VRep
    lifted: VRep
    lifted_dimension: int
    projected: VRep
    hull: HRep

    def expected_facet(self) -> tuple[tuple[Fraction, Fraction, Fraction], Fraction]:
        """Second-template bound as ``c.(p_F, C_S, p_minus) + b >= 0``."""
        pd, pt, qs = self.params.p_d, self.params.p_tilde, self.params.q_star
        k = max(pt - pd, 1 - pt) / qs
        # p_F pt + (1 - p_F) pd + k (1 - C_S) - p_minus >= 0
        return (pt - pd, -k, Fraction(-1)), pd + k

    def has_expected_facet(self) -> bool:
        return facet_contains(self.hull, self.expected_facet())


def lemma2_hrep(params: ScenarioParams, reduced: VRep) -> HRep:
    """Constraints on ``(p2(kappa), p3(kappa), p4(kappa), p_F, C_S, p_minus)``.

    ``p2`` is the distribution for ``P_star``, ``p3``/``p4`` those of the two
    sharpness-test preparations; the ``P_perp`` weights have been eliminated
    through the preparation equivalence.
    """
    q0, qs = params.q_0, params.q_star
    K = len(reduced)
    n = 3 * K + 3
    zero, one = Fraction(0), Fraction(1)
    i_pf, i_cs, i_pm = 3 * K, 3 * K + 1, 3 * K + 2

    def vec(entries: dict[int, Fraction]) -> Vector:
        return tuple(entries.get(i, zero) for i in range(n))

    ineqs = [(vec({i: one}), zero) for i in range(3 * K)]
    for k in range(K):
        ineqs.append((vec({K + k: q0, 2 * K + k: 1 - q0, k: -qs}), zero))
    eqs = [(vec({j * K + k: one for k in range(K)}), -one) for j in range(3)]
    kap = reduced.vertices
    eqs.append((vec({**{k: kap[k][0] for k in range(K)}, i_pf: -one}), zero))
    eqs.append((vec({**{k: kap[k][1] for k in range(K)}, i_pm: -one}), zero))
    cs = {K + k: q0 * (1 - kap[k][0]) for k in range(K)}
    for k in range(K):
        cs[2 * K + k] = cs.get(2 * K + k, zero) + (1 - q0) * kap[k][0]
    cs[i_cs] = -one
    eqs.append((vec(cs), zero))
    return HRep(n, tuple(ineqs), tuple(eqs))


def lemma2_pipeline(params: ScenarioParams) -> Lemma2Result:
    """Eliminate the ontic weights and hull the achievable ``(p_F, C_S, p_minus)``."""
    _, verts = assignment_polytope(params)
    reduced = extreme_points((v[0], v[4]) for v in verts.vertices)
    h = lemma2_hrep(params, reduced)
    lifted = hrep_to_vrep(h)
    K = len(reduced)
    projected = extreme_points(v[3 * K :] for v in lifted.vertices)
    return Lemma2Result(
        params, verts, reduced, lifted, affine_dimension(lifted), projected, vrep_to_hrep(projected)
    )


def max_coordinate(h: HRep, fixed: dict[int, Fraction], target: int) -> Fraction | None:
    """Largest value of coordinate ``target`` once the ``fixed`` coordinates are pinned.

    Exact for the one free coordinate left; ``None`` if the slice is empty.
    """
    if set(fixed) | {target} != set(range(h.dim)):
        raise PolytopeError("all but the target coordinate must be fixed")
    lo, hi = None, None
    for c, b in h.inequalities + tuple((tuple(-a for a in c), -b) for c, b in h.equalities) + h.equalities:
        rest = b + sum(c[i] * to_fraction(v) for i, v in fixed.items())
        a = c[target]
        if a == 0:
            if rest < 0:
                return None
        elif a > 0:
            bound = -rest / a
            lo = bound if lo is None else max(lo, bound)
        else:
            bound = -rest / a
            hi = bound if hi is None else min(hi, bound)
    if hi is None or (lo is not None and lo > hi):
        return None
    return hi


def dump_json(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
