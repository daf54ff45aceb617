"""Built-in example groups and complexes at desk scale."""

from .complexes import presentation_complex, product_complex
from .errors import UnsupportedSpecError
from .groups import FreeAbelian, FreeByZ, FreeGroup


def _circle():
    spec = FreeAbelian(1)
    return spec, presentation_complex(spec)


def _torus():
    spec = FreeAbelian(2)
    return spec, presentation_complex(spec)


def _f2():
    spec = FreeGroup(2)
    return spec, presentation_complex(spec)


def _f3():
    spec = FreeGroup(3)
    return spec, presentation_complex(spec)


def _f2xf2():
    F2 = FreeGroup(2)
    C = presentation_complex(F2)
    prod = product_complex(C, C)
    return prod.spec, prod


def _mapping_torus():
    spec = FreeByZ(2, ["b", "ab"])
    return spec, presentation_complex(spec)


FIXTURES = {
    "circle": (_circle, 1, "circle, the free abelian group of rank 1"),
    "torus": (_torus, 2, "2-torus, free abelian of rank 2"),
    "f2": (_f2, 1, "wedge of two circles, free group of rank 2"),
    "f3": (_f3, 1, "wedge of three circles, free group of rank 3"),
    "f2xf2": (_f2xf2, 2, "product of two wedges, F2 x F2"),
    "mapping-torus": (_mapping_torus, 1,
                      "mapping torus of F2 under a |-> b, b |-> ab"),
}


def fixture_names():
    return sorted(FIXTURES)


def load_fixture(name):
    """Returns (spec, complex, default degree, description)."""
    if name not in FIXTURES:
        raise UnsupportedSpecError(
            f"unknown fixture {name!r}; available: {', '.join(fixture_names())}")
    builder, degree, desc = FIXTURES[name]
    spec, C = builder()
    return spec, C, degree, desc
