"""Order-by-order polyhomogeneous expansion engine.

Solves the flow equations in the boundary-expansion ansatz

    A = omega + sum a_{k,p} y^k (log y)^p,
    Phi = e/y + sum b_{k,p} y^k (log y)^p,
    Phi_y = sum (phi_y)_{k,p} y^k (log y)^p,

over a fixed :class:`~nahmpole.geometry.FrameBackground`.  Matching powers of
``y`` and ``log y`` turns the three flow equations into the coefficient
equations (all sums over k1+k2 = K-1, p1+p2 = p; absent entries are zero)

    K a_{K,p} + (p+1) a_{K,p+1} - L(a_{K,p}) + [e, (phi_y)_{K,p}]
        = *d_w b_{K-1,p} + sum (*[a,b] + [phi_y, b])
    K b_{K,p} + L(b_{K,p}) + (p+1) b_{K,p+1}
        = d_{K1,p0} *F_w + *d_w a_{K-1,p} + d_w (phi_y)_{K-1,p}
          + sum (1/2 *[a,a] - 1/2 *[b,b] + [a, phi_y])
    K (phi_y)_{K,p} + (p+1)(phi_y)_{K,p+1} + Gamma(a_{K,p})
        = d_w^* b_{K-1,p} - sum *[a, *b]

The engine seeds k <= 2 (where the free data c+, c0, c- enters through the
kernels at k=1 and the resonance at lambda=2), then advances order by order:
``b_k`` by inverting ``k + L`` and ``(a_{k+1}, (phi_y)_{k+1})`` by the
eigenspace division / coupled 2x2 solve.  Everything is exact over the
rational scalar field; the independently assembled residuals of the three
equations above are the master self-test.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction

from .algebra import (
    EigenPart,
    GForm,
    ResonantOrder,
    bracket_0_1,
    e_bracket,
    gamma_op,
    invert_cal_L,
    L_op,
    project,
    resolve_coupled,
    star_bracket_star,
    star_wedge,
    vierbein,
)
from .geometry import FrameBackground, d_omega, d_omega_star, star_d_omega
from .scalars import RationalField

__all__ = [
    "PhgCoeff",
    "PhgSeries",
    "FreeData",
    "QuadSource",
    "seed_leading",
    "quadratic_source",
    "advance_order",
    "expand",
    "is_log_free",
    "assert_parity",
    "residual_at",
    "check_residuals",
    "evaluate",
    "to_json",
    "from_json",
]

_HALF = Fraction(1, 2)
_THIRD = Fraction(1, 3)


@dataclass(frozen=True)
class PhgCoeff:
    """The coefficient triple of one ``y^k (log y)^p`` term."""

    a: GForm
    b: GForm
    phi_y: GForm


class PhgSeries:
    """Sparse polyhomogeneous series: map ``(k, p) -> PhgCoeff``.

    Coefficients that are exactly zero are never stored, so structural
    statements (parity, log-freeness) are visible as absence.  ``order`` is
    the last fully computed order ``N``; the solver also leaves the
    determined ``a``/``phi_y`` entries at ``N+1`` in place.

    Instances are immutable once returned by :func:`expand`; the solver
    mutates them only during construction.
    """

    def __init__(self, background=None, field=None, order=0,
                 background_name=None, free=None):
        if background is None and field is None:
            raise ValueError("need a background or an explicit scalar field")
        self.background = background
        self.field = field or background.field
        self.order = order
        self.background_name = background_name or (
            background.name if background is not None else "?")
        self.free = free
        self._a = {}
        self._b = {}
        self._phi = {}

    # -- storage ---------------------------------------------------------

    def _put(self, table, k, p, form):
        if form is None or form.is_zero():
            table.pop((k, p), None)
        else:
            table[(k, p)] = form

    def _store(self, k, p, a=None, b=None, phi_y=None):
        if a is not None:
            self._put(self._a, k, p, a)
        if b is not None:
            self._put(self._b, k, p, b)
        if phi_y is not None:
            self._put(self._phi, k, p, phi_y)

    def get_a(self, k, p) -> GForm:
        got = self._a.get((k, p))
        return got if got is not None else GForm.zero(self.field, 1)

    def get_b(self, k, p) -> GForm:
        got = self._b.get((k, p))
        return got if got is not None else GForm.zero(self.field, 1)

    def get_phi(self, k, p) -> GForm:
        got = self._phi.get((k, p))
        return got if got is not None else GForm.zero(self.field, 0)

    def at(self, k, p) -> PhgCoeff:
        return PhgCoeff(self.get_a(k, p), self.get_b(k, p), self.get_phi(k, p))

    def addresses(self):
        """Sorted (k, p) addresses holding at least one nonzero coefficient."""
        return sorted(set(self._a) | set(self._b) | set(self._phi))

    def max_p(self) -> int:
        addrs = self.addresses()
        return max((p for _, p in addrs), default=0)

    def max_p_at(self, k: int) -> int:
        ps = [p for (kk, p) in self.addresses() if kk == k]
        return max(ps, default=-1)

    def __repr__(self):
        return (f"PhgSeries({self.background_name!r}, order={self.order}, "
                f"entries={len(self.addresses())})")


class FreeData:
    """The undetermined expansion constants.

    :param c_plus: V+ part of ``b_1`` (the order-1 kernel of ``1 + L``).
    :param c_zero: V0 part of ``a_2``; forces ``(phi_y)_2 = -1/2 Gamma c0``.
    :param c_minus: V- part of ``a_2`` (the lambda = 2 resonance kernel).
    :param higher_kernel: map ``(k, p, EigenPart) -> GForm`` of injected
        values for resonances beyond the ones above.  The SU(2)/SO(3) engine
        never hits such a resonance at k >= 2 (divisors k+2, k+1, k-1 and
        lambda = k+1 stay nonzero); the slot exists for forward compatibility
        and any attempt to need it raises.

    Missing fields default to zero.  Each field must lie in its declared
    eigenspace; that is checked eagerly.
    """

    def __init__(self, field=None, c_plus=None, c_zero=None, c_minus=None,
                 higher_kernel=None):
        if field is None:
            for form in (c_plus, c_zero, c_minus):
                if form is not None:
                    field = form.field
                    break
        if field is None:
            raise ValueError("need a scalar field or at least one form")
        self.field = field
        self.c_plus = c_plus if c_plus is not None else GForm.zero(field, 1)
        self.c_zero = c_zero if c_zero is not None else GForm.zero(field, 1)
        self.c_minus = c_minus if c_minus is not None else GForm.zero(field, 1)
        self.higher_kernel = dict(higher_kernel or {})
        for form, part, label in (
            (self.c_plus, EigenPart.Plus, "c_plus"),
            (self.c_zero, EigenPart.Zero, "c_zero"),
            (self.c_minus, EigenPart.Minus, "c_minus"),
        ):
            if not (form - project(form, part)).is_zero():
                raise ValueError(f"{label} is not in its declared eigenspace")

    @staticmethod
    def zero(field) -> "FreeData":
        return FreeData(field=field)

    def __add__(self, other: "FreeData") -> "FreeData":
        if self.higher_kernel or other.higher_kernel:
            raise ValueError("cannot add free data with kernel injections")
        return FreeData(
            field=self.field,
            c_plus=self.c_plus + other.c_plus,
            c_zero=self.c_zero + other.c_zero,
            c_minus=self.c_minus + other.c_minus,
        )

    def __repr__(self):
        return (f"FreeData(c_plus={self.c_plus!r}, c_zero={self.c_zero!r}, "
                f"c_minus={self.c_minus!r})")


@dataclass(frozen=True)
class QuadSource:
    """Quadratic convolution sources entering one solve step."""

    Qa: GForm
    Qb: GForm
    Qphi: GForm


def seed_leading(bg: FrameBackground, free: FreeData = None) -> PhgSeries:
    """Seed the expansion through k = 2.

    Order 1 and the lambda = 2 resonance at order 2 are where every kernel of
    the linearized problem sits, so these coefficients mix curvature data with
    the free constants:

    * ``b_{1,1} = (*F_w)^+`` -- the obstruction term; nonzero exactly when the
      background is not Einstein, and the root of every log term.
    * ``b_1 = c+ + 1/2 (*F_w)^0 + 1/3 (*F_w)^-``.
    * ``a_{2,1} = 1/3 (*d_w b_{1,1})^+ + 1/3 (*d_w b_{1,1})^0`` and
      ``(phi_y)_{2,1} = 1/3 d_w^* b_{1,1}``.
    * ``a_2 = -1/9 (*d_w b_{1,1})^+ + 1/3 (*d_w b_1)^+ + c0 + c-
      - 1/3 (*d_w b_{1,1})^0 + (*d_w b_1)^0`` and ``(phi_y)_2 = -1/2 Gamma c0``
      (the c0 / phi_y pairing is the lambda = 2 kernel).

    All other k <= 2 coefficients vanish.  The k = 1 and k = 2 coefficient
    equations hold exactly for these seeds; the residual suite re-checks that
    rather than trusting the formulas.
    """
    field = bg.field
    if free is None:
        free = FreeData.zero(field)
    series = PhgSeries(background=bg, order=2, free=free)

    starF = bg.starF
    b11 = project(starF, EigenPart.Plus)
    b1 = (free.c_plus
          + project(starF, EigenPart.Zero).scale(_HALF)
          + project(starF, EigenPart.Minus).scale(_THIRD))
    series._store(1, 1, b=b11)
    series._store(1, 0, b=b1)

    sdb11 = star_d_omega(bg, b11)
    sdb11_plus = project(sdb11, EigenPart.Plus)
    sdb11_zero = project(sdb11, EigenPart.Zero)
    a21 = (sdb11_plus + sdb11_zero).scale(_THIRD)
    phi21 = d_omega_star(bg, b11).scale(_THIRD)
    series._store(2, 1, a=a21, phi_y=phi21)

    sdb1 = star_d_omega(bg, b1)
    a2 = (sdb11_plus.scale(Fraction(-1, 9))
          + project(sdb1, EigenPart.Plus).scale(_THIRD)
          + free.c_zero + free.c_minus
          + sdb11_zero.scale(Fraction(-1, 3))
          + project(sdb1, EigenPart.Zero))
    phi2 = gamma_op(free.c_zero).scale(Fraction(-1, 2))
    series._store(2, 0, a=a2, phi_y=phi2)
    return series


def quadratic_source(series: PhgSeries, k: int, p: int) -> QuadSource:
    """Convolution sources for the order-k solve step.

    ``Qa``/``Qphi`` feed the order k+1 equations (their pairs sum to k);
    ``Qb`` feeds the order-k b equation (pairs sum to k-1).  Only stored
    entries contribute; absent coefficients are zero.
    """
    field = series.field
    Qa = GForm.zero(field, 1)
    Qphi = GForm.zero(field, 0)
    for k1 in range(1, k):
        k2 = k - k1
        for p1 in range(p + 1):
            p2 = p - p1
            b2 = series.get_b(k2, p2)
            if not b2.is_zero():
                a1 = series.get_a(k1, p1)
                if not a1.is_zero():
                    Qa = Qa + star_wedge(a1, b2)
                    Qphi = Qphi - star_bracket_star(a1, b2)
                phi1 = series.get_phi(k1, p1)
                if not phi1.is_zero():
                    Qa = Qa + bracket_0_1(phi1, b2)

    Qb = GForm.zero(field, 1)
    for k1 in range(1, k - 1):
        k2 = (k - 1) - k1
        for p1 in range(p + 1):
            p2 = p - p1
            a1 = series.get_a(k1, p1)
            a2f = series.get_a(k2, p2)
            if not a1.is_zero() and not a2f.is_zero():
                Qb = Qb + star_wedge(a1, a2f).scale(_HALF)
            b1f = series.get_b(k1, p1)
            b2f = series.get_b(k2, p2)
            if not b1f.is_zero() and not b2f.is_zero():
                Qb = Qb - star_wedge(b1f, b2f).scale(_HALF)
            phi2f = series.get_phi(k2, p2)
            if not a1.is_zero() and not phi2f.is_zero():
                # [a, phi_y] = -[phi_y, a]
                Qb = Qb - bracket_0_1(phi2f, a1)
    return QuadSource(Qa=Qa, Qb=Qb, Qphi=Qphi)


def _solve_resonant(series, k, p, rhs, exc: ResonantOrder):
    """Resolve a resonant ``k + L`` solve through injected kernel values.

    Unreachable for the SU(2)/SO(3) engine at k >= 2; kept so that a future
    sigma > 1 recursion fails loudly at a well-defined point instead of
    dividing by zero.
    """
    free = series.free
    out = GForm.zero(series.field, 1)
    for part in EigenPart:
        piece = project(rhs, part)
        div = k + part.eigenvalue()
        if div != 0:
            out = out + piece.divide(series.field.from_int(div))
            continue
        if not piece.is_zero():
            raise ResonantOrder(k, exc.parts)
        injected = None if free is None else free.higher_kernel.get((k, p, part))
        if injected is None:
            raise ResonantOrder(k, exc.parts)
        out = out + injected
    return out


def advance_order(series: PhgSeries, k: int) -> None:
    """Compute ``b_k`` and ``(a, phi_y)_{k+1}`` at every log depth.

    Works down from a log depth that is certainly above anything reachable
    (depth at order k never exceeds k), since the ``(p+1)``-ladder couples
    each depth to the one above.  For each p:

    * ``b_{k,p}`` solves ``(k + L) b = *d_w a_{k-1,p} + d_w (phi_y)_{k-1,p}
      - (p+1) b_{k,p+1} + Qb``;
    * with ``R = *d_w b_{k,p} - (p+1) a_{k+1,p+1} + Qa`` and
      ``S = d_w^* b_{k,p} - (p+1) (phi_y)_{k+1,p+1} + Qphi``, the V+/V- parts
      of ``a_{k+1,p}`` are ``R`` over k+2 and k-1, while the V0 part couples
      to ``phi_y`` through the 2x2 solve at lambda = k+1.

    Exactly-zero results are not stored.
    """
    if k < 2:
        raise ValueError("advance_order starts at k = 2; lower orders are seeded")
    bg = series.background
    field = series.field
    for p in range(2 * k + 1, -1, -1):
        q = quadratic_source(series, k, p)
        rhs_b = (star_d_omega(bg, series.get_a(k - 1, p))
                 + d_omega(bg, series.get_phi(k - 1, p))
                 - series.get_b(k, p + 1).scale(field.from_int(p + 1))
                 + q.Qb)
        try:
            b_kp = invert_cal_L(k, rhs_b)
        except ResonantOrder as exc:
            b_kp = _solve_resonant(series, k, p, rhs_b, exc)
        series._store(k, p, b=b_kp)

        R = (star_d_omega(bg, b_kp)
             - series.get_a(k + 1, p + 1).scale(field.from_int(p + 1))
             + q.Qa)
        S = (d_omega_star(bg, b_kp)
             - series.get_phi(k + 1, p + 1).scale(field.from_int(p + 1))
             + q.Qphi)
        a_plus = project(R, EigenPart.Plus).divide(field.from_int(k + 2))
        a_minus = project(R, EigenPart.Minus).divide(field.from_int(k - 1))
        a_zero, phi_next = resolve_coupled(k + 1, project(R, EigenPart.Zero), S)
        series._store(k + 1, p, a=a_plus + a_minus + a_zero, phi_y=phi_next)


def expand(bg: FrameBackground, free: FreeData = None, N: int = 2) -> PhgSeries:
    """Seed and advance the expansion through order ``N`` (N >= 2).

    A pure function of its inputs: all arithmetic is exact in the
    background's scalar field and the order walk is sequential, so identical
    inputs give identical series.
    """
    if N < 2:
        raise ValueError("expansion order must be at least 2")
    series = seed_leading(bg, free)
    for k in range(2, N + 1):
        advance_order(series, k)
    series.order = N
    return series


def is_log_free(series: PhgSeries) -> bool:
    """True iff no stored coefficient sits at log depth p >= 1."""
    return all(p == 0 for _, p in series.addresses())


def assert_parity(series: PhgSeries):
    """List parity violations: stored ``a``/``phi_y`` at odd k or ``b`` at
    even k, as ``(component, k, p)`` tuples.  Empty means parity-clean.
    """
    bad = []
    for (k, p) in sorted(series._a):
        if k % 2 == 1:
            bad.append(("a", k, p))
    for (k, p) in sorted(series._b):
        if k % 2 == 0:
            bad.append(("b", k, p))
    for (k, p) in sorted(series._phi):
        if k % 2 == 1:
            bad.append(("phi_y", k, p))
    return bad


def residual_at(series: PhgSeries, K: int, p: int):
    """Residuals (LHS - RHS) of the three coefficient equations at (K, p).

    Assembled directly from the stored table with its own convolution loops
    -- no shared code with the solver path -- so that a sign or index error
    in either shows up as a nonzero residual.
    """
    bg = series.background
    field = series.field
    if bg is None:
        raise ValueError("series has no background attached")
    aK = series.get_a(K, p)
    bK = series.get_b(K, p)
    phiK = series.get_phi(K, p)
    pp1 = field.from_int(p + 1)
    kf = field.from_int(K)

    Ra = (aK.scale(kf) + series.get_a(K, p + 1).scale(pp1)
          - L_op(aK) + e_bracket(phiK)
          - star_d_omega(bg, series.get_b(K - 1, p)))
    Rb = (bK.scale(kf) + L_op(bK) + series.get_b(K, p + 1).scale(pp1)
          - star_d_omega(bg, series.get_a(K - 1, p))
          - d_omega(bg, series.get_phi(K - 1, p)))
    if K == 1 and p == 0:
        Rb = Rb - bg.starF
    Rphi = (phiK.scale(kf) + series.get_phi(K, p + 1).scale(pp1)
            + gamma_op(aK)
            - d_omega_star(bg, series.get_b(K - 1, p)))

    for k1 in range(1, K):
        k2 = (K - 1) - k1
        if k2 < 1:
            continue
        for p1 in range(p + 1):
            p2 = p - p1
            a1 = series.get_a(k1, p1)
            b2 = series.get_b(k2, p2)
            phi1 = series.get_phi(k1, p1)
            Ra = Ra - star_wedge(a1, b2) - bracket_0_1(phi1, b2)
            Rb = (Rb
                  - star_wedge(a1, series.get_a(k2, p2)).scale(_HALF)
                  + star_wedge(series.get_b(k1, p1), b2).scale(_HALF)
                  + bracket_0_1(series.get_phi(k2, p2), a1))
            Rphi = Rphi + star_bracket_star(a1, b2)
    return Ra, Rb, Rphi


def check_residuals(series: PhgSeries, through: int = None):
    """Evaluate every coefficient equation the stored table must satisfy.

    Checks all three equations for K = 1..order and the a/phi_y equations at
    K = order+1 (whose coefficients the last solve step determined), at every
    log depth up to one past the stored maximum.  Returns the list of
    ``(K, p, name)`` addresses with nonzero residual -- empty means the
    series is an exact solution of the coefficient system.
    """
    N = through if through is not None else series.order
    pmax = series.max_p() + 1
    bad = []
    for K in range(1, N + 2):
        for p in range(pmax, -1, -1):
            Ra, Rb, Rphi = residual_at(series, K, p)
            if not Ra.is_zero():
                bad.append((K, p, "a"))
            if K <= N and not Rb.is_zero():
                bad.append((K, p, "b"))
            if not Rphi.is_zero():
                bad.append((K, p, "phi_y"))
    return bad


def evaluate(series: PhgSeries, y, N: int = None):
    """Numerically evaluate the truncated expansion at ``0 < y < 1``.

    Returns float matrices ``(A, Phi, Phi_y)`` with the background parts
    included: ``A = W + sum a``, ``Phi = e/y + sum b``.
    """
    import numpy as np

    if series.background is None:
        raise ValueError("series has no background attached")
    y = float(y)
    if not 0.0 < y < 1.0:
        raise ValueError(f"evaluation point must satisfy 0 < y < 1, got {y}")
    if N is None:
        N = series.order
    if N > series.order:
        raise ValueError(f"truncation {N} exceeds computed order {series.order}")
    ly = math.log(y)
    A = np.array(series.background.W.to_floats(), dtype=float)
    Phi = np.array(vierbein(series.field).to_floats(), dtype=float) / y
    Phi_y = np.zeros(3)
    for (k, p), form in series._a.items():
        if k <= N:
            A += np.array(form.to_floats()) * y**k * ly**p
    for (k, p), form in series._b.items():
        if k <= N:
            Phi += np.array(form.to_floats()) * y**k * ly**p
    for (k, p), form in series._phi.items():
        if k <= N:
            Phi_y += np.array(form.to_floats()) * y**k * ly**p
    return A, Phi, Phi_y


# ---------------------------------------------------------------------------
# Serialization.
# ---------------------------------------------------------------------------

def _format_form(field, form: GForm):
    if form.degree == 0:
        return [field.format(v) for v in form.coeffs]
    return [[field.format(v) for v in row] for row in form.coeffs]


def to_json(series: PhgSeries) -> str:
    """Canonical JSON for a series: entries sorted by (k, p), scalars as
    strings (rationals ``p/q`` in lowest terms, floats as decimal literals).
    Identical series give identical bytes.
    """
    field = series.field
    entries = []
    for (k, p) in series.addresses():
        entries.append({
            "k": k,
            "p": p,
            "a": _format_form(field, series.get_a(k, p)),
            "b": _format_form(field, series.get_b(k, p)),
            "phi_y": _format_form(field, series.get_phi(k, p)),
        })
    doc = {
        "background": series.background_name,
        "order": series.order,
        "entries": entries,
    }
    return json.dumps(doc, indent=2) + "\n"


def from_json(text: str, background: FrameBackground = None,
              field=None) -> PhgSeries:
    """Rebuild a series from :func:`to_json` output.

    A background may be attached for residual checks / evaluation; its name
    must then match the serialized header.
    """
    doc = json.loads(text)
    if background is not None and field is None:
        field = background.field
    field = field or RationalField()
    name = doc["background"]
    if background is not None and background.name != name:
        raise ValueError(
            f"series was computed on {name!r}, not {background.name!r}")
    series = PhgSeries(background=background, field=field,
                       order=int(doc["order"]), background_name=name)
    for entry in doc["entries"]:
        k, p = int(entry["k"]), int(entry["p"])
        a = GForm.one_form(field, [[field.parse(v) for v in row]
                                   for row in entry["a"]])
        b = GForm.one_form(field, [[field.parse(v) for v in row]
                                   for row in entry["b"]])
        phi = GForm.zero_form(field, [field.parse(v) for v in entry["phi_y"]])
        series._store(k, p, a=a, b=b, phi_y=phi)
    return series
