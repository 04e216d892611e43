"""Exact algebra of su(2)-valued invariant forms.

Conventions (fixed once, used by every module):

* Lie bracket ``[t_a, t_b] = eps_{abc} t_c`` on the su(2) basis.
* Orthonormal coframe ``e_1, e_2, e_3`` with right-handed Hodge star,
  ``*e_1 = e_2 ^ e_3`` cyclically and ``*(e_1 ^ e_2 ^ e_3) = 1``.
* Trace pairing ``Tr(t_a t_b) = -1/2 delta_{ab}``.

A frame-constant g-valued form of degree 1 is stored as the 3x3 coefficient
matrix ``c[a][i]`` of ``sum_a,i c[a][i] t_a (x) e_i``; degree 0 as the 3-vector
``c[a]`` of ``sum_a c[a] t_a``.  The vierbein form ``e`` is then the identity
matrix.

The operator ``L(a) = *[e, a]`` has eigenvalues ``(2, 1, -1)`` on the
eigenspaces ``V-`` (multiples of ``e``), ``V0`` (antisymmetric coefficient
matrices) and ``V+`` (symmetric traceless); the contraction
``Gamma(a) = *[a, *e]`` identifies ``V0`` with 0-forms.

A sign fact this module relies on throughout: the bracket-wedge of two
g-valued **1-forms** is symmetric, ``[x, y]^ = [y, x]^`` (so ``x^y + y^x =
[x,y]^`` and ``a^a = (1/2)[a,a]^``), while the 0-form/1-form bracket is
antisymmetric.  All graded products below are written against that grading.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from fractions import Fraction

from .scalars import RationalField, nullspace, rref, solve_dense

__all__ = [
    "EigenPart",
    "GForm",
    "ResonantOrder",
    "SingularLambda",
    "vierbein",
    "L_op",
    "gamma_op",
    "project",
    "graded_product",
    "star_wedge",
    "bracket_0_1",
    "star_bracket_star",
    "e_bracket",
    "cal_L",
    "invert_cal_L",
    "resolve_coupled",
    "SigmaModule",
    "LeadingOrders",
    "FreeDims",
    "leading_order_structure",
]

# Nonzero entries of the Levi-Civita symbol as (i, j, k, sign).
_EPS = (
    (0, 1, 2, 1),
    (1, 2, 0, 1),
    (2, 0, 1, 1),
    (0, 2, 1, -1),
    (2, 1, 0, -1),
    (1, 0, 2, -1),
)


class ResonantOrder(Exception):
    """``k + L`` is not invertible at this integer order.

    Carries the order ``k`` and the eigenspaces on which the scalar divisor
    ``k + eigenvalue`` vanishes.
    """

    def __init__(self, k: int, parts):
        self.k = k
        self.parts = tuple(parts)
        names = ", ".join(p.name for p in self.parts)
        super().__init__(f"resonant order k={k} (singular on {names})")


class SingularLambda(Exception):
    """The coupled (V0, 0-form) solve degenerates at lambda in {2, -1}."""

    def __init__(self, lam):
        self.lam = lam
        super().__init__(f"coupled solve is singular at lambda={lam}")


class EigenPart(enum.IntEnum):
    """Eigenspace selector; the integer order fixes serialization order."""

    Minus = 0
    Zero = 1
    Plus = 2

    def eigenvalue(self, sigma: int = 1) -> int:
        return {EigenPart.Minus: sigma + 1, EigenPart.Zero: 1, EigenPart.Plus: -sigma}[self]

    def dim(self, sigma: int = 1) -> int:
        return {
            EigenPart.Minus: 2 * sigma - 1,
            EigenPart.Zero: 2 * sigma + 1,
            EigenPart.Plus: 2 * sigma + 3,
        }[self]


@dataclass(frozen=True, eq=False)
class GForm:
    """Frame-constant g-valued form of degree 0 or 1 over a scalar field."""

    field: object
    degree: int
    coeffs: tuple

    # -- constructors -------------------------------------------------------

    @staticmethod
    def zero(field, degree: int) -> "GForm":
        if degree == 0:
            return GForm(field, 0, (field.zero,) * 3)
        if degree == 1:
            return GForm(field, 1, tuple((field.zero,) * 3 for _ in range(3)))
        raise ValueError(f"degree must be 0 or 1, got {degree}")

    @staticmethod
    def one_form(field, rows) -> "GForm":
        rows = tuple(tuple(field.from_fraction(v) if isinstance(v, (int, Fraction)) else v
                           for v in row) for row in rows)
        if len(rows) != 3 or any(len(r) != 3 for r in rows):
            raise ValueError("degree-1 coefficients must be a 3x3 matrix")
        return GForm(field, 1, rows)

    @staticmethod
    def zero_form(field, vec) -> "GForm":
        vec = tuple(field.from_fraction(v) if isinstance(v, (int, Fraction)) else v
                    for v in vec)
        if len(vec) != 3:
            raise ValueError("degree-0 coefficients must be a 3-vector")
        return GForm(field, 0, vec)

    # -- linear structure ---------------------------------------------------

    def _require_same(self, other: "GForm"):
        if self.degree != other.degree:
            raise ValueError(f"degree mismatch: {self.degree} vs {other.degree}")

    def __add__(self, other: "GForm") -> "GForm":
        self._require_same(other)
        if self.degree == 0:
            return GForm(self.field, 0, tuple(x + y for x, y in zip(self.coeffs, other.coeffs)))
        return GForm(
            self.field,
            1,
            tuple(tuple(x + y for x, y in zip(r1, r2)) for r1, r2 in zip(self.coeffs, other.coeffs)),
        )

    def __sub__(self, other: "GForm") -> "GForm":
        return self + (-other)

    def __neg__(self) -> "GForm":
        if self.degree == 0:
            return GForm(self.field, 0, tuple(-x for x in self.coeffs))
        return GForm(self.field, 1, tuple(tuple(-x for x in r) for r in self.coeffs))

    def scale(self, s) -> "GForm":
        if self.degree == 0:
            return GForm(self.field, 0, tuple(x * s for x in self.coeffs))
        return GForm(self.field, 1, tuple(tuple(x * s for x in r) for r in self.coeffs))

    def divide(self, s) -> "GForm":
        if self.degree == 0:
            return GForm(self.field, 0, tuple(x / s for x in self.coeffs))
        return GForm(self.field, 1, tuple(tuple(x / s for x in r) for r in self.coeffs))

    # -- queries ------------------------------------------------------------

    def entries(self):
        if self.degree == 0:
            return self.coeffs
        return tuple(v for row in self.coeffs for v in row)

    def is_zero(self) -> bool:
        return all(self.field.is_zero(v) for v in self.entries())

    def trace(self):
        if self.degree != 1:
            raise ValueError("trace needs a degree-1 form")
        return self.coeffs[0][0] + self.coeffs[1][1] + self.coeffs[2][2]

    def to_floats(self):
        f = self.field.to_float
        if self.degree == 0:
            return [f(v) for v in self.coeffs]
        return [[f(v) for v in row] for row in self.coeffs]

    def __eq__(self, other):
        if not isinstance(other, GForm):
            return NotImplemented
        return self.degree == other.degree and self.coeffs == other.coeffs

    def __repr__(self):
        return f"GForm(degree={self.degree}, coeffs={self.coeffs!r})"


def vierbein(field=None) -> GForm:
    """The vierbein form ``e``: identity coefficient matrix."""
    field = field or RationalField()
    rows = tuple(
        tuple(field.one if a == i else field.zero for i in range(3)) for a in range(3)
    )
    return GForm(field, 1, rows)


# ---------------------------------------------------------------------------
# Graded products from structure constants and the frame star.
# ---------------------------------------------------------------------------


def star_wedge(x: GForm, y: GForm) -> GForm:
    """``*[x, y]^`` for two degree-1 forms; symmetric in its arguments.

    Coefficients: ``out[c][k] = sum eps_{ijk} eps_{abc} x[a][i] y[b][j]``.
    """
    if x.degree != 1 or y.degree != 1:
        raise ValueError("star_wedge needs two degree-1 forms")
    field = x.field
    out = [[field.zero] * 3 for _ in range(3)]
    for i, j, k, s1 in _EPS:
        for a, b, c, s2 in _EPS:
            v = x.coeffs[a][i] * y.coeffs[b][j]
            out[c][k] = out[c][k] + v * (s1 * s2)
    return GForm(field, 1, tuple(tuple(r) for r in out))


def bracket_0_1(phi: GForm, x: GForm) -> GForm:
    """``[phi, x]`` of a 0-form with a 1-form (antisymmetric pairing)."""
    if phi.degree != 0 or x.degree != 1:
        raise ValueError("bracket_0_1 needs a 0-form then a 1-form")
    field = phi.field
    out = [[field.zero] * 3 for _ in range(3)]
    for a, b, c, s in _EPS:
        for i in range(3):
            out[c][i] = out[c][i] + phi.coeffs[a] * x.coeffs[b][i] * s
    return GForm(field, 1, tuple(tuple(r) for r in out))


def star_bracket_star(x: GForm, y: GForm) -> GForm:
    """``*[x, *y]`` of two degree-1 forms (a 0-form; antisymmetric).

    Coefficients: ``out[c] = sum eps_{abc} x[a][i] y[b][i]``.
    """
    if x.degree != 1 or y.degree != 1:
        raise ValueError("star_bracket_star needs two degree-1 forms")
    field = x.field
    out = [field.zero] * 3
    for a, b, c, s in _EPS:
        for i in range(3):
            out[c] = out[c] + x.coeffs[a][i] * y.coeffs[b][i] * s
    return GForm(field, 0, tuple(out))


def graded_product(x: GForm, y: GForm, kind: str) -> GForm:
    """Product selector over the graded pairings used by the flow equations.

    :param kind: ``"star_wedge"`` (1,1)->1, ``"bracket"`` (0,1)->1, or
        ``"star_bracket_star"`` (1,1)->0.
    """
    if kind == "star_wedge":
        return star_wedge(x, y)
    if kind == "bracket":
        return bracket_0_1(x, y)
    if kind == "star_bracket_star":
        return star_bracket_star(x, y)
    raise ValueError(f"unknown graded product {kind!r}")


def e_bracket(phi: GForm) -> GForm:
    """``[e, phi]`` for a 0-form ``phi`` (a V0-valued 1-form)."""
    return -bracket_0_1(phi, vierbein(phi.field))


def L_op(a: GForm) -> GForm:
    """``L(a) = *[e, a]`` on degree-1 forms."""
    if a.degree != 1:
        raise ValueError("L_op needs a degree-1 form")
    return star_wedge(vierbein(a.field), a)


def gamma_op(a: GForm) -> GForm:
    """``Gamma(a) = *[a, *e]``, a 0-form."""
    if a.degree != 1:
        raise ValueError("gamma_op needs a degree-1 form")
    return star_bracket_star(a, vierbein(a.field))


def project(a: GForm, part: EigenPart, sigma: int = 1) -> GForm:
    """Spectral projection of a degree-1 form onto ``V-``, ``V0`` or ``V+``.

    Built by Lagrange interpolation in ``L``: apply ``(L - mu)`` for the two
    complementary eigenvalues and divide by ``prod(lambda - mu)``.  Exact in
    rational scalars.
    """
    if a.degree != 1:
        raise ValueError("project needs a degree-1 form")
    if sigma != 1:
        raise ValueError("the concrete 3x3 realization has sigma=1; "
                         "use SigmaModule for higher sigma")
    lam = part.eigenvalue(1)
    out = a
    denom = 1
    for other in EigenPart:
        if other is part:
            continue
        mu = other.eigenvalue(1)
        out = L_op(out) - out.scale(mu)
        denom *= lam - mu
    return out.divide(denom)


def cal_L(k, a: GForm) -> GForm:
    """``k a + L(a)`` (the linear operator of the b-coefficient equations)."""
    return a.scale(k) + L_op(a)


def invert_cal_L(k: int, rhs: GForm) -> GForm:
    """Unique preimage of ``rhs`` under ``k + L``.

    Scalar division by ``k + eigenvalue`` on each eigenspace, so the divisors
    are ``k+2, k+1, k-1`` and the singular orders are ``k in {-2, -1, 1}``.

    :raises ResonantOrder: when ``k`` hits a singular order, carrying the
        offending eigenspace(s).
    """
    singular = [part for part in EigenPart if k + part.eigenvalue(1) == 0]
    if singular:
        raise ResonantOrder(k, singular)
    out = GForm.zero(rhs.field, 1)
    for part in EigenPart:
        out = out + project(rhs, part).divide(k + part.eigenvalue(1))
    return out


def resolve_coupled(lam, Theta: GForm, Xi: GForm):
    """Closed-form solve of the coupled (V0 1-form, 0-form) system.

    Unknowns ``(a, phi)`` with ``(lam - 1) a = Theta - [e, phi]`` and
    ``lam phi = -Gamma(a) + Xi``::

        a   = (lam Theta - [e, Xi]) / (lam^2 - lam - 2)
        phi = ((lam - 1) Xi - Gamma(Theta)) / (lam^2 - lam - 2)

    :param lam: scalar, anything outside {2, -1}.
    :param Theta: degree-1 form lying in V0 (checked).
    :param Xi: degree-0 form.
    :raises SingularLambda: at ``lam in {2, -1}``.
    """
    if Theta.degree != 1 or Xi.degree != 0:
        raise ValueError("resolve_coupled needs (degree-1, degree-0) data")
    field = Theta.field
    lam_s = field.from_fraction(lam) if isinstance(lam, (int, Fraction)) else lam
    denom = lam_s * lam_s - lam_s - field.from_int(2)
    if field.is_zero(denom):
        raise SingularLambda(lam)
    if not (Theta - project(Theta, EigenPart.Zero)).is_zero():
        raise ValueError("Theta must lie in V0")
    a = (Theta.scale(lam_s) - e_bracket(Xi)).divide(denom)
    phi = (Xi.scale(lam_s - field.one) - gamma_op(Theta)).divide(denom)
    return a, phi


# ---------------------------------------------------------------------------
# Abstract spin-sigma module: harmonic polynomials of degree sigma tensor R^3.
# ---------------------------------------------------------------------------


def _monomials(sigma: int):
    return [
        (i, j, sigma - i - j)
        for i in range(sigma + 1)
        for j in range(sigma + 1 - i)
    ]


def _mat_zero(field, n, m):
    return [[field.zero] * m for _ in range(n)]


def _mat_mul(field, A, B):
    n, k, m = len(A), len(B), len(B[0])
    out = _mat_zero(field, n, m)
    for i in range(n):
        Ai = A[i]
        for j in range(m):
            s = field.zero
            for t in range(k):
                if not field.is_zero(Ai[t]):
                    s = s + Ai[t] * B[t][j]
            out[i][j] = s
    return out


def _mat_identity(field, n):
    out = _mat_zero(field, n, n)
    for i in range(n):
        out[i][i] = field.one
    return out


def _kron(field, A, B):
    n, m = len(A), len(A[0])
    p, q = len(B), len(B[0])
    out = _mat_zero(field, n * p, m * q)
    for i in range(n):
        for j in range(m):
            a = A[i][j]
            if field.is_zero(a):
                continue
            for k in range(p):
                for l in range(q):
                    out[i * p + k][j * q + l] = a * B[k][l]
    return out


class SigmaModule:
    """Spin-sigma tensor spin-1 module with the spectral projectors of ``L``.

    Realized concretely on ``Harm_sigma (x) R^3`` where ``Harm_sigma`` is the
    space of degree-sigma harmonic polynomials in three variables (a rational
    basis is computed as the exact kernel of the Laplacian on monomials).  The
    rotation generators ``T_a = sum_ij eps_{aij} x_j d_i`` act by integer
    matrices with ``[T_a, T_b] = eps_{abc} T_c``, and

        ``L = sum_a T_a (x) S_a``,   ``(S_a)_{kj} = -eps_{akj}``,

    which has eigenvalues ``(sigma+1, 1, -sigma)`` on total spin
    ``(sigma-1, sigma, sigma+1)`` of dimensions ``(2s-1, 2s+1, 2s+3)``.
    """

    def __init__(self, sigma: int, field=None):
        if sigma < 1:
            raise ValueError(f"sigma must be >= 1, got {sigma}")
        self.sigma = sigma
        self.field = field or RationalField()
        f = self.field

        monos = _monomials(sigma)
        self._monos = monos
        n_mono = len(monos)
        mono_index = {m: i for i, m in enumerate(monos)}

        # T_a on degree-sigma monomials (degree preserving, integer entries).
        self.T_mono = []
        for a in range(3):
            M = _mat_zero(f, n_mono, n_mono)
            for col, expo in enumerate(monos):
                for a0, i, j, s in _EPS:
                    # T_a = sum_{i,j} eps_{aij} x_j d_i
                    if a0 != a or expo[i] == 0:
                        continue
                    new = list(expo)
                    new[i] -= 1
                    new[j] += 1
                    row = mono_index[tuple(new)]
                    M[row][col] = M[row][col] + f.from_int(s * expo[i])
            self.T_mono.append(M)

        # Harmonic subspace: exact kernel of the Laplacian.
        if sigma >= 2:
            lower = _monomials(sigma - 2)
            lower_index = {m: i for i, m in enumerate(lower)}
            lap = _mat_zero(f, len(lower), n_mono)
            for col, (i0, j0, k0) in enumerate(monos):
                for axis, ex in enumerate((i0, j0, k0)):
                    if ex < 2:
                        continue
                    new = [i0, j0, k0]
                    new[axis] -= 2
                    lap[lower_index[tuple(new)]][col] = (
                        lap[lower_index[tuple(new)]][col] + f.from_int(ex * (ex - 1))
                    )
            basis = nullspace(f, lap)
        else:
            basis = [[f.one if r == c else f.zero for r in range(n_mono)] for c in range(n_mono)]
        if len(basis) != 2 * sigma + 1:
            raise AssertionError(
                f"harmonic space of degree {sigma} has dimension {len(basis)}, "
                f"expected {2 * sigma + 1}"
            )
        # Column matrix of the harmonic basis and its pivot rows (for exact
        # coordinate extraction: T_a preserves harmonicity).
        H = [[basis[c][r] for c in range(len(basis))] for r in range(n_mono)]
        self._H = H
        _reduced, pivots = rref(f, [list(r) for r in zip(*H)])
        # pivots of H^T give independent rows of H
        self._pivot_rows = pivots

        self.dim_harm = len(basis)
        self.dim = self.dim_harm * 3

        # T_a restricted to harmonic coordinates.
        self.T = [self._restrict(M) for M in self.T_mono]

        # S_a on R^3 and the coupled operator L.
        self.S = []
        for a in range(3):
            S = _mat_zero(f, 3, 3)
            for i, j, k, s in _EPS:
                if i == a:
                    S[j][k] = f.from_int(-s)
            self.S.append(S)

        n = self.dim
        L = _mat_zero(f, n, n)
        for a in range(3):
            term = _kron(f, self.T[a], self.S[a])
            for r in range(n):
                for c in range(n):
                    L[r][c] = L[r][c] + term[r][c]
        self.L = L

        self.projectors = {part: self._lagrange(part) for part in EigenPart}

    # -- internals ----------------------------------------------------------

    def _restrict(self, M):
        """Matrix of ``M`` (monomial space) in harmonic coordinates."""
        f = self.field
        H = self._H
        piv = self._pivot_rows
        square = [[H[r][c] for c in range(self.dim_harm)] for r in piv]
        cols = []
        for j in range(self.dim_harm):
            w = [sum((M[r][t] * H[t][j] for t in range(len(H))), start=f.zero)
                 for r in range(len(H))]
            x = solve_dense(f, square, [w[r] for r in piv])
            # verify the image really lies in the harmonic span
            for r in range(len(H)):
                resid = w[r]
                for c in range(self.dim_harm):
                    resid = resid - H[r][c] * x[c]
                if not f.is_zero(resid):
                    raise AssertionError("operator does not preserve the harmonic space")
            cols.append(x)
        return [[cols[j][i] for j in range(self.dim_harm)] for i in range(self.dim_harm)]

    def _lagrange(self, part: EigenPart):
        f = self.field
        lam = part.eigenvalue(self.sigma)
        out = _mat_identity(f, self.dim)
        denom = f.one
        for other in EigenPart:
            if other is part:
                continue
            mu = other.eigenvalue(self.sigma)
            shifted = [
                [self.L[r][c] - (f.from_int(mu) if r == c else f.zero) for c in range(self.dim)]
                for r in range(self.dim)
            ]
            out = _mat_mul(f, out, shifted)
            denom = denom * f.from_int(lam - mu)
        return [[v / denom for v in row] for row in out]

    # -- public API ---------------------------------------------------------

    def apply_L(self, vec):
        f = self.field
        return [sum((self.L[r][c] * vec[c] for c in range(self.dim)), start=f.zero)
                for r in range(self.dim)]

    def project_vector(self, vec, part: EigenPart):
        f = self.field
        P = self.projectors[part]
        return [sum((P[r][c] * vec[c] for c in range(self.dim)), start=f.zero)
                for r in range(self.dim)]

    def part_dims(self):
        """Eigenspace dimensions read off as projector traces."""
        f = self.field
        dims = {}
        for part, P in self.projectors.items():
            tr = sum((P[i][i] for i in range(self.dim)), start=f.zero)
            frac = f.to_fraction(tr)
            if frac.denominator != 1:
                raise AssertionError(f"non-integer projector trace {frac}")
            dims[part] = int(frac)
        return dims

    def casimir(self):
        """``sum_a T_a^2`` on the harmonic space (expected ``-s(s+1) Id``)."""
        f = self.field
        out = _mat_zero(f, self.dim_harm, self.dim_harm)
        for a in range(3):
            sq = _mat_mul(f, self.T[a], self.T[a])
            for r in range(self.dim_harm):
                for c in range(self.dim_harm):
                    out[r][c] = out[r][c] + sq[r][c]
        return out


@dataclass(frozen=True)
class FreeDims:
    """Free-parameter dimensions per eigenspace (serialization order V-, V0, V+)."""

    minus: int
    zero: int
    plus: int

    def as_tuple(self):
        return (self.minus, self.zero, self.plus)


@dataclass(frozen=True)
class LeadingOrders:
    a_order: int
    b_order: int
    phi_order: int
    free_dims: FreeDims


def leading_order_structure(sigma: int) -> LeadingOrders:
    """Leading exponents and free-data dimensions of the spin-sigma sector.

    The dimensions are read off the abstract module's projector traces (and
    therefore carry the ``2s-1, 2s+1, 2s+3`` pattern as a computation, not an
    assumption); the leading orders are ``a, phi_y ~ y^(sigma+1)`` and
    ``b ~ y^sigma``.
    """
    if sigma < 1:
        raise ValueError(f"sigma must be >= 1, got {sigma}")
    dims = SigmaModule(sigma).part_dims()
    return LeadingOrders(
        a_order=sigma + 1,
        b_order=sigma,
        phi_order=sigma + 1,
        free_dims=FreeDims(
            minus=dims[EigenPart.Minus],
            zero=dims[EigenPart.Zero],
            plus=dims[EigenPart.Plus],
        ),
    )
