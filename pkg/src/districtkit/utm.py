"""UTM forward/inverse projection on the GRS80/WGS84 ellipsoid.

Uses the Krüger n-series (4th order), good to well under a millimetre
inside a UTM zone.
"""
from __future__ import annotations

import math

from .errors import OutOfDomain

A_WGS84 = 6378137.0
F_WGS84 = 1 / 298.257223563
K0 = 0.9996
FALSE_EASTING = 500000.0
FALSE_NORTHING_SOUTH = 10_000_000.0

_n = F_WGS84 / (2 - F_WGS84)
_n2, _n3, _n4 = _n**2, _n**3, _n**4
# rectifying radius
_A = A_WGS84 / (1 + _n) * (1 + _n2 / 4 + _n4 / 64)
_ALPHA = (
    _n / 2 - 2 * _n2 / 3 + 5 * _n3 / 16 + 41 * _n4 / 180,
    13 * _n2 / 48 - 3 * _n3 / 5 + 557 * _n4 / 1440,
    61 * _n3 / 240 - 103 * _n4 / 140,
    49561 * _n4 / 161280,
)
_BETA = (
    _n / 2 - 2 * _n2 / 3 + 37 * _n3 / 96 - _n4 / 360,
    _n2 / 48 + _n3 / 15 - 437 * _n4 / 1440,
    17 * _n3 / 480 - 37 * _n4 / 840,
    4397 * _n4 / 161280,
)
_DELTA = (
    2 * _n - 2 * _n2 / 3 - 2 * _n3 + 116 * _n4 / 45,
    7 * _n2 / 3 - 8 * _n3 / 5 - 227 * _n4 / 45,
    56 * _n3 / 15 - 136 * _n4 / 35,
    4279 * _n4 / 630,
)
_E = math.sqrt(F_WGS84 * (2 - F_WGS84))


def central_meridian(zone: int) -> float:
    return -183.0 + 6.0 * zone


def _check_zone(zone: int) -> None:
    if not (isinstance(zone, int) and 1 <= zone <= 60):
        raise OutOfDomain(f"UTM zone must be an integer in 1..60, got {zone!r}")


def utm_project(lon: float, lat: float, zone: int, south: bool | None = None) -> tuple[float, float]:
    """Project geographic degrees to ``(easting, northing)`` meters in ``zone``.

    ``south`` selects the false northing; by default it follows the sign of
    ``lat``.
    """
    _check_zone(zone)
    if not (math.isfinite(lon) and math.isfinite(lat)) or abs(lat) >= 84.0:
        raise OutOfDomain(f"latitude {lat} outside the UTM domain (|lat| < 84)")
    if south is None:
        south = lat < 0
    phi = math.radians(lat)
    lam = math.radians(lon - central_meridian(zone))
    lam = (lam + math.pi) % (2 * math.pi) - math.pi
    # conformal latitude via tau' = tan(chi)
    s = math.sin(phi)
    t = math.sinh(math.atanh(s) - _E * math.atanh(_E * s))
    xi_p = math.atan2(t, math.cos(lam))
    eta_p = math.atanh(math.sin(lam) / math.sqrt(1 + t * t))
    xi, eta = xi_p, eta_p
    for j, a in enumerate(_ALPHA, start=1):
        xi += a * math.sin(2 * j * xi_p) * math.cosh(2 * j * eta_p)
        eta += a * math.cos(2 * j * xi_p) * math.sinh(2 * j * eta_p)
    easting = FALSE_EASTING + K0 * _A * eta
    northing = K0 * _A * xi + (FALSE_NORTHING_SOUTH if south else 0.0)
    return easting, northing


def utm_inverse(easting: float, northing: float, zone: int, south: bool = False) -> tuple[float, float]:
    """Inverse of :func:`utm_project`; returns ``(lon, lat)`` degrees."""
    _check_zone(zone)
    xi = (northing - (FALSE_NORTHING_SOUTH if south else 0.0)) / (K0 * _A)
    eta = (easting - FALSE_EASTING) / (K0 * _A)
    xi_p, eta_p = xi, eta
    for j, b in enumerate(_BETA, start=1):
        xi_p -= b * math.sin(2 * j * xi) * math.cosh(2 * j * eta)
        eta_p -= b * math.cos(2 * j * xi) * math.sinh(2 * j * eta)
    chi = math.asin(math.sin(xi_p) / math.cosh(eta_p))
    phi = chi + sum(d * math.sin(2 * j * chi) for j, d in enumerate(_DELTA, start=1))
    lam = math.atan2(math.sinh(eta_p), math.cos(xi_p))
    return central_meridian(zone) + math.degrees(lam), math.degrees(phi)


def zone_for(lon: float) -> int:
    return int((lon + 180.0) // 6.0) % 60 + 1


def crs_tag(zone: int, south: bool = False) -> str:
    return f"utm:{zone}{'S' if south else 'N'}"


def parse_crs_tag(tag: str) -> tuple[int, bool] | None:
    if not tag.startswith("utm:") or tag[-1] not in "NS":
        return None
    return int(tag[4:-1]), tag[-1] == "S"
