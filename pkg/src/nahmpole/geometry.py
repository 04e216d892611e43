"""Locally homogeneous 3-manifold backgrounds in an orthonormal frame.

A background is specified by frame structure constants ``c^k_ij`` (meaning
``de_k = -1/2 c^k_ij e_i ^ e_j``), from which everything else is computed
exactly: the Levi-Civita frame coefficients by the Koszul formula, their su(2)
connection form ``W``, the dual curvature ``*F_omega`` and its eigenspace
split, and the Einstein test ``(*F_omega)^+ = 0``.

Only frame-constant data is admitted, so every differential operator in the
package reduces to finite-dimensional exact linear algebra.

Curvature sign under the package conventions: constant-curvature models come
out as ``*F_omega = C e`` with ``C = -s^2`` for the round 3-sphere of scale
``s`` (structure constants ``2 s eps``) and ``C = +s^2`` for hyperbolic space.
The sign is locked by the closed-form flow solutions: the round-sphere
solution's linear coefficient ``b_1 = (1/3)(*F_omega)^- = -(1/3) e`` only
reproduces the known profile with this orientation, and the residual test in
:mod:`nahmpole.oracle` pins it.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from fractions import Fraction

from .algebra import (
    _EPS,
    EigenPart,
    GForm,
    bracket_0_1,
    project,
    star_bracket_star,
    star_wedge,
)
from .scalars import RationalField

__all__ = [
    "FrameBackground",
    "levi_civita",
    "torsion_residual",
    "metricity_residual",
    "connection_form",
    "star_d",
    "star_curvature",
    "ricci_tensor",
    "is_einstein",
    "d_omega",
    "star_d_omega",
    "d_omega_star",
    "builtin",
    "builtin_names",
    "load_background",
    "background_to_json",
]


def _zero3x3x3(field):
    return [[[field.zero] * 3 for _ in range(3)] for _ in range(3)]


def _freeze3(t):
    return tuple(tuple(tuple(row) for row in plane) for plane in t)


def levi_civita(field, c):
    """Levi-Civita frame coefficients of structure constants ``c``.

    Koszul formula in an orthonormal frame:
    ``G^k_ij = 1/2 (c^k_ij - c^i_jk + c^j_ki)`` with ``nabla_{e_i} e_j =
    G^k_ij e_k``.  The result is the unique metric-compatible torsion-free
    frame connection (both residuals checkable below).
    """
    half = field.from_fraction(Fraction(1, 2))
    conn = _zero3x3x3(field)
    for k in range(3):
        for i in range(3):
            for j in range(3):
                conn[k][i][j] = (c[k][i][j] - c[i][j][k] + c[j][k][i]) * half
    return _freeze3(conn)


def torsion_residual(field, c, conn):
    """``G^k_ij - G^k_ji - c^k_ij`` (identically zero for Levi-Civita)."""
    out = _zero3x3x3(field)
    for k in range(3):
        for i in range(3):
            for j in range(3):
                out[k][i][j] = conn[k][i][j] - conn[k][j][i] - c[k][i][j]
    return _freeze3(out)


def metricity_residual(field, conn):
    """``G^k_ij + G^j_ik`` (zero iff the frame metric is parallel)."""
    out = _zero3x3x3(field)
    for k in range(3):
        for i in range(3):
            for j in range(3):
                out[k][i][j] = conn[k][i][j] + conn[j][i][k]
    return _freeze3(out)


def connection_form(field, conn) -> GForm:
    """su(2) connection form ``W`` of the so(3) frame coefficients.

    ``W[c][i] = -1/2 sum_{k,j} eps_{ckj} G^k_ij`` under the identification of
    antisymmetric matrices with su(2) used everywhere in this package.
    """
    rows = [[field.zero] * 3 for _ in range(3)]
    for cc, k, j, s in _EPS:
        for i in range(3):
            rows[cc][i] = rows[cc][i] - conn[k][i][j] * Fraction(s, 2)
    return GForm(field, 1, tuple(tuple(r) for r in rows))


def _star_d(field, c, x: GForm) -> GForm:
    """``*(d x)`` of a frame-constant degree-1 form.

    ``(*dx)[a][m] = -1/2 sum x[a][i] c^i_jk eps_{jkm}``.
    """
    out = [[field.zero] * 3 for _ in range(3)]
    for j, k, m, s in _EPS:
        for a in range(3):
            for i in range(3):
                out[a][m] = out[a][m] - x.coeffs[a][i] * c[i][j][k] * Fraction(s, 2)
    return GForm(field, 1, tuple(tuple(r) for r in out))


def star_d(bg, x: GForm) -> GForm:
    """``*(d x)`` of a frame-constant degree-1 form on a background (no
    connection term; compare :func:`star_d_omega`)."""
    if x.degree != 1:
        raise ValueError("star_d needs a degree-1 form")
    return _star_d(bg.field, bg.c, x)


def star_curvature_from(field, c, W: GForm) -> GForm:
    """``*F = *(dW) + 1/2 *[W, W]^``."""
    return _star_d(field, c, W) + star_wedge(W, W).scale(Fraction(1, 2))


def ricci_tensor(field, c, conn):
    """Frame Ricci tensor, computed from the full curvature tensor.

    ``R^k_lij = G^m_jl G^k_im - G^m_il G^k_jm - c^m_ij G^k_ml`` and
    ``Ric_lj = sum_i R^i_lij``.  This is the independent route used to
    cross-check the ``(*F)^+`` Einstein test.
    """
    ric = [[field.zero] * 3 for _ in range(3)]
    for l in range(3):
        for j in range(3):
            s = field.zero
            for i in range(3):
                for m in range(3):
                    s = s + conn[m][j][l] * conn[i][i][m] - conn[m][i][l] * conn[i][j][m]
                    s = s - c[m][i][j] * conn[i][m][l]
            ric[l][j] = s
    return tuple(tuple(r) for r in ric)


@dataclass(frozen=True, eq=False)
class FrameBackground:
    """A locally homogeneous background: structure constants and what they
    determine.

    :ivar name: identifying label (used in serialized series headers).
    :ivar c: structure constants ``c[k][i][j]``, antisymmetric in (i, j).
    :ivar conn: Levi-Civita coefficients ``G[k][i][j]``.
    :ivar W: su(2) connection form (degree-1 GForm).
    :ivar starF: dual curvature ``*F_omega`` (degree-1 GForm, zero V0 part).
    :ivar volume: total volume for global integrals -- exact Fraction when a
        background file declares one, a float for the compact builtins (their
        volumes carry pi^2), None for noncompact models.
    """

    name: str
    field: object
    c: tuple
    conn: tuple
    W: GForm
    starF: GForm
    volume: object = None

    @staticmethod
    def from_structure_constants(name, c_rows, field=None, volume=None):
        field = field or RationalField()
        c = [[[field.from_fraction(v) if isinstance(v, (int, Fraction)) else v
               for v in row] for row in plane] for plane in c_rows]
        for k in range(3):
            for i in range(3):
                for j in range(3):
                    if not field.is_zero(c[k][i][j] + c[k][j][i]):
                        raise ValueError(
                            f"structure constants not antisymmetric at c^{k}_{{{i}{j}}}"
                        )
        c = _freeze3(c)
        conn = levi_civita(field, c)
        for plane in torsion_residual(field, c, conn):
            for row in plane:
                for v in row:
                    if not field.is_zero(v):
                        raise AssertionError("Koszul output has torsion")
        W = connection_form(field, conn)
        starF = star_curvature_from(field, c, W)
        if not project(starF, EigenPart.Zero).is_zero():
            raise ValueError(
                "curvature has an antisymmetric Ricci part; the structure "
                "constants do not define a homogeneous Riemannian geometry"
            )
        return FrameBackground(
            name=name, field=field, c=c, conn=conn, W=W, starF=starF, volume=volume
        )

    def is_einstein(self) -> bool:
        return is_einstein(self)

    def __repr__(self):
        return f"FrameBackground({self.name!r})"


def star_curvature(bg: FrameBackground) -> GForm:
    """The dual curvature ``*F_omega`` of a background."""
    return bg.starF


def is_einstein(bg: FrameBackground) -> bool:
    """True iff ``(*F_omega)^+`` vanishes (exactly / below field tolerance)."""
    return project(bg.starF, EigenPart.Plus).is_zero()


def d_omega(bg: FrameBackground, x: GForm) -> GForm:
    """Exterior covariant derivative of a frame-constant form.

    Degree 0: returns the 1-form ``[W, x]`` (the ``d`` part vanishes on
    invariant functions).  Degree 1: the 2-form is only ever consumed through
    its Hodge dual, so it is returned as the degree-1 form ``*(d_omega x)``.
    """
    if x.degree == 0:
        return -bracket_0_1(x, bg.W)
    return star_d_omega(bg, x)


def star_d_omega(bg: FrameBackground, x: GForm) -> GForm:
    """``* d_omega x`` for a degree-1 form: ``*(dx) + *[W, x]^``."""
    if x.degree != 1:
        raise ValueError("star_d_omega needs a degree-1 form")
    return _star_d(bg.field, bg.c, x) + star_wedge(bg.W, x)


def d_omega_star(bg: FrameBackground, x: GForm) -> GForm:
    """Codifferential ``d_omega^* x = -*d_omega(*x)`` of a degree-1 form.

    For frame-constant coefficients this reduces to
    ``(d_omega^* x)_a = sum_i x[a][i] (sum_k c^k_ik) - (*[W, *x])_a``;
    the trace term is nonzero exactly on the non-unimodular models.
    """
    if x.degree != 1:
        raise ValueError("d_omega_star needs a degree-1 form")
    field = bg.field
    out = [field.zero] * 3
    for a in range(3):
        s = field.zero
        for i in range(3):
            tr = field.zero
            for k in range(3):
                tr = tr + bg.c[k][i][k]
            s = s + x.coeffs[a][i] * tr
        out[a] = s
    correction = star_bracket_star(bg.W, x)
    return GForm(field, 0, tuple(o - c for o, c in zip(out, correction.coeffs)))


# ---------------------------------------------------------------------------
# Builtin catalog.
# ---------------------------------------------------------------------------

_TWO_PI_SQ = 2.0 * math.pi**2

#: name -> (parameter name or None, docstring)
_BUILTINS = {
    "flat": (None, "flat R^3 / T^3 local model (zero structure constants)"),
    "round-s3": ("scale", "round 3-sphere, c^k_ij = 2 s eps_kij (radius 1/s)"),
    "hyperbolic-h3": ("scale", "hyperbolic space H^3 at curvature scale s"),
    "berger-s3": ("squash", "Berger sphere: Hopf fiber rescaled by t (t=1 is round)"),
    "h2xr": (None, "product H^2 x R local model (not Einstein)"),
}


def builtin_names():
    return list(_BUILTINS)


def builtin(name: str, param=None, field=None) -> FrameBackground:
    """Construct a catalog background.

    :param name: one of ``flat``, ``round-s3``, ``hyperbolic-h3``,
        ``berger-s3``, ``h2xr``.
    :param param: the scale/squash parameter where the model takes one
        (rational; must be positive).  Defaults to 1.
    """
    if name not in _BUILTINS:
        raise ValueError(f"unknown builtin background {name!r}")
    field = field or RationalField()
    pname = _BUILTINS[name][0]
    if param is None:
        param = Fraction(1)
    else:
        param = Fraction(param)
        if pname is None:
            raise ValueError(f"builtin {name!r} takes no parameter")
    if param <= 0:
        raise ValueError(f"{pname or 'parameter'} must be positive, got {param}")

    c = [[[Fraction(0)] * 3 for _ in range(3)] for _ in range(3)]
    volume = None
    label = name if pname is None or param == 1 else f"{name}?{pname}={param}"

    if name == "flat":
        pass
    elif name == "round-s3":
        s = param
        for k, i, j, sgn in _EPS:
            c[k][i][j] = 2 * s * sgn
        volume = _TWO_PI_SQ / float(s) ** 3
    elif name == "hyperbolic-h3":
        s = param
        c[0][0][2], c[0][2][0] = -s, s
        c[1][1][2], c[1][2][1] = -s, s
    elif name == "berger-s3":
        t = param
        c[0][1][2], c[0][2][1] = 2 * t, -2 * t
        c[1][2][0], c[1][0][2] = 2 / t, -2 / t
        c[2][0][1], c[2][1][0] = 2 / t, -2 / t
        volume = _TWO_PI_SQ * float(t)
    elif name == "h2xr":
        c[0][0][1], c[0][1][0] = Fraction(-1), Fraction(1)

    return FrameBackground.from_structure_constants(label, c, field=field, volume=volume)


def _parse_builtin_uri(uri: str, field) -> FrameBackground:
    body = uri[len("builtin:"):]
    name, _, query = body.partition("?")
    param = None
    if query:
        key, _, value = query.partition("=")
        expected = _BUILTINS.get(name, (None, ""))[0]
        if expected is None or key != expected:
            raise ValueError(f"builtin {name!r} does not take parameter {key!r}")
        param = Fraction(value)
    return builtin(name, param=param, field=field)


def load_background(source: str, field=None) -> FrameBackground:
    """Load a background from a ``builtin:<name>?param=value`` URI or a JSON
    file ``{"name": str, "c": 3x3x3 rational strings, "volume": "p/q"|null}``.
    """
    field = field or RationalField()
    if source.startswith("builtin:"):
        return _parse_builtin_uri(source, field)
    with open(source, "r", encoding="utf-8") as fh:
        doc = json.load(fh)
    try:
        name = doc["name"]
        c_raw = doc["c"]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed background file {source!r}: {exc}") from exc
    c = [[[Fraction(str(v)) for v in row] for row in plane] for plane in c_raw]
    volume = doc.get("volume")
    if volume is not None:
        volume = Fraction(str(volume))
    return FrameBackground.from_structure_constants(name, c, field=field, volume=volume)


def background_to_json(bg: FrameBackground) -> str:
    """Serialize a background to the JSON file format (canonical bytes)."""
    field = bg.field
    c = [[[RationalField().format(field.to_fraction(v)) for v in row] for row in plane]
         for plane in bg.c]
    if bg.volume is None:
        vol = None
    elif isinstance(bg.volume, Fraction):
        vol = f"{bg.volume.numerator}/{bg.volume.denominator}"
    else:
        vol = repr(float(bg.volume))
    doc = {"name": bg.name, "c": c, "volume": vol}
    return json.dumps(doc, indent=2) + "\n"
