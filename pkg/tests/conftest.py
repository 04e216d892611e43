"""Shared helpers: seeded random forms and the background catalog."""

import random
from fractions import Fraction

import pytest

from nahmpole.algebra import GForm
from nahmpole.geometry import load_background
from nahmpole.scalars import RationalField, solve_dense


#: (builtin URI, is Einstein) for the whole catalog, h2xr included.
CATALOG = (
    ("builtin:flat", True),
    ("builtin:round-s3", True),
    ("builtin:hyperbolic-h3", True),
    ("builtin:berger-s3?squash=2", False),
    ("builtin:h2xr", False),
)


def rand_fraction(rng, span=9, den=7):
    return Fraction(rng.randint(-span, span), rng.randint(1, den))


def rand_one_form(rng, field):
    return GForm.one_form(field, [
        [field.from_fraction(rand_fraction(rng)) for _ in range(3)]
        for _ in range(3)])


def rand_zero_form(rng, field):
    return GForm.zero_form(
        field, [field.from_fraction(rand_fraction(rng)) for _ in range(3)])


def rand_antisym_c(rng):
    """Random antisymmetric structure constants (not necessarily unimodular)."""
    c = [[[Fraction(0)] * 3 for _ in range(3)] for _ in range(3)]
    for k in range(3):
        for i in range(3):
            for j in range(i + 1, 3):
                v = rand_fraction(rng, span=3, den=3)
                c[k][i][j] = v
                c[k][j][i] = -v
    return c


def rand_rotation(rng):
    """Exact random rotation matrix via the Cayley transform of a random
    antisymmetric matrix: R = (I + K)^-1 (I - K) is orthogonal with
    determinant one and rational entries."""
    k1, k2, k3 = (rand_fraction(rng, span=3, den=3) for _ in range(3))
    K = [[Fraction(0), k1, k2], [-k1, Fraction(0), k3], [-k2, -k3, Fraction(0)]]
    M = [[(1 if r == c else 0) + K[r][c] for c in range(3)] for r in range(3)]
    N = [[(1 if r == c else 0) - K[r][c] for c in range(3)] for r in range(3)]
    field = RationalField()
    cols = [solve_dense(field, M, [N[r][j] for r in range(3)]) for j in range(3)]
    return [[cols[j][r] for j in range(3)] for r in range(3)]


def rand_frame_c(rng, base_uri=None):
    """Random orthonormal-frame structure constants of a genuine geometry:
    a catalog member, rescaled by a random positive factor and conjugated by
    a random exact rotation.  Unlike raw random antisymmetric arrays these
    satisfy the Jacobi identity, so curvature retains its symmetries."""
    uris = [uri for uri, _ in CATALOG]
    uri = base_uri or uris[rng.randrange(len(uris))]
    bg = load_background(uri, RationalField())
    s = Fraction(rng.randint(1, 6), rng.randint(1, 6))
    R = rand_rotation(rng)
    out = [[[Fraction(0)] * 3 for _ in range(3)] for _ in range(3)]
    for k in range(3):
        for i in range(3):
            for j in range(3):
                acc = Fraction(0)
                for kk in range(3):
                    for ii in range(3):
                        for jj in range(3):
                            acc += R[k][kk] * R[i][ii] * R[j][jj] * bg.c[kk][ii][jj]
                out[k][i][j] = s * acc
    return out


@pytest.fixture
def field():
    return RationalField()


@pytest.fixture
def rng():
    return random.Random(986301)


@pytest.fixture(params=CATALOG, ids=[uri.split(":")[1] for uri, _ in CATALOG])
def catalog_case(request, field):
    uri, einstein = request.param
    return load_background(uri, field), einstein
