"""sRGB to CIELAB conversion and perceptual distance.

Pipeline: gamma expansion of 8-bit sRGB -> linear RGB -> XYZ (D65, 2 degree
observer) -> CIELAB.  Distance is plain Euclidean in Lab (the 1976 delta E);
the whole toolkit shares this one geometry so transport, clustering and
comparative matching stay mutually consistent.
"""

from __future__ import annotations

import math
from typing import NamedTuple


class LabPoint(NamedTuple):
    L: float
    a: float
    b: float


# D65 reference white, 2 degree observer (linear-RGB basis normalized so that
# RGB=(1,1,1) maps exactly onto the white point).
_M_RGB_TO_XYZ = (
    (0.4124564, 0.3575761, 0.1804375),
    (0.2126729, 0.7151522, 0.0721750),
    (0.0193339, 0.1191920, 0.9503041),
)
_WHITE = (
    _M_RGB_TO_XYZ[0][0] + _M_RGB_TO_XYZ[0][1] + _M_RGB_TO_XYZ[0][2],
    _M_RGB_TO_XYZ[1][0] + _M_RGB_TO_XYZ[1][1] + _M_RGB_TO_XYZ[1][2],
    _M_RGB_TO_XYZ[2][0] + _M_RGB_TO_XYZ[2][1] + _M_RGB_TO_XYZ[2][2],
)
_EPS = 216.0 / 24389.0  # (6/29)^3
_KAPPA = 24389.0 / 27.0  # (29/3)^3


def _expand_gamma(u: float) -> float:
    return u / 12.92 if u <= 0.04045 else ((u + 0.055) / 1.055) ** 2.4


def _f(t: float) -> float:
    return t ** (1.0 / 3.0) if t > _EPS else (_KAPPA * t + 16.0) / 116.0


def srgb_to_lab(rgb) -> LabPoint:
    """Convert an 8-bit sRGB triple to CIELAB.  Deterministic and total on [0,255]^3."""
    r8, g8, b8 = rgb
    for c in (r8, g8, b8):
        if not (0 <= c <= 255):
            raise ValueError(f"sRGB channel {c} outside [0,255]")
    r = _expand_gamma(r8 / 255.0)
    g = _expand_gamma(g8 / 255.0)
    b = _expand_gamma(b8 / 255.0)
    xyz = tuple(m[0] * r + m[1] * g + m[2] * b for m in _M_RGB_TO_XYZ)
    fx, fy, fz = (_f(v / w) for v, w in zip(xyz, _WHITE))
    return LabPoint(116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz))


def delta_e(p, q) -> float:
    """Euclidean Lab distance (delta E 1976)."""
    return math.sqrt(
        (p[0] - q[0]) ** 2 + (p[1] - q[1]) ** 2 + (p[2] - q[2]) ** 2
    )
