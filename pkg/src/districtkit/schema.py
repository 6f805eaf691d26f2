"""Column naming rules for emitted graphs.

Census columns use the MGGG 2010 names. Election columns follow the VEST
style ``<type><yy><office><party>``: type G (general), P (primary) or S
(special), a two-digit year, a three-letter office code and a one-letter
party, e.g. ``G18GOVD``. Raw VEST columns add a three-letter candidate
suffix (``G18GOVDSMI``); that suffix is dropped and same-party columns are
summed. District columns are ``CD``, ``SEND`` and ``HDIST``.
"""
from __future__ import annotations

import re

CENSUS_COLUMNS = (
    "TOTPOP", "NH_WHITE", "NH_BLACK", "NH_AMIN", "NH_ASIAN", "NH_NHPI", "NH_OTHER", "NH_2MORE",
    "HISP", "H_WHITE", "H_BLACK", "H_AMIN", "H_ASIAN", "H_NHPI", "H_OTHER", "H_2MORE",
    "VAP", "HVAP", "WVAP", "BVAP", "AMINVAP", "ASIANVAP", "NHPIVAP", "OTHERVAP", "2MOREVAP",
)

DISTRICT_KINDS = ("CD", "SEND", "HDIST")

# source names seen for the district id column in published district maps
DISTRICT_CANDIDATES = ("DISTRICT", "DISTRICTN", "DISTRICT_I", "DISTRICTNO", "Name", "SENATE", "CONG_DIST", "ID")

# statewide offices in VEST codes; district-level races (USH, STS, STH...) are excluded
STATEWIDE_OFFICES = frozenset({
    "PRE", "USS", "GOV", "LTG", "ATG", "SOS", "TRE", "AUD", "CON", "COM", "AGR", "INS", "LAB",
    "SPI", "SSC", "SAC", "CFO", "RRC", "PSC", "LAN", "SCC",
})

ELECTION_TYPES = ("G", "P", "S")

GEO_COLUMNS = ("COUNTYFP",)
BOUNDARY_COLUMNS = ("boundary_node", "boundary_perim")

ELECTION_RE = re.compile(r"^([GPS])(\d{2})([A-Z]{3})([A-Z])$")
VEST_RE = re.compile(r"^([GPS])(\d{2})([A-Z]{3})([A-Z])([A-Z0-9]{3})$")


def election_name(etype: str, year: int, office: str, party: str) -> str:
    return f"{etype}{year % 100:02d}{office}{party}"


def parse_election_column(name: str) -> tuple[str, str, str, str] | None:
    """``(type, yy, office, party)`` of a canonical or raw VEST column, or None."""
    m = ELECTION_RE.match(name) or VEST_RE.match(name)
    return m.groups()[:4] if m else None


def is_statewide(office: str) -> bool:
    return office in STATEWIDE_OFFICES


def classify(name: str) -> list[str]:
    """Every pattern ``name`` matches; a valid emitted column matches exactly one."""
    kinds = []
    if name in CENSUS_COLUMNS:
        kinds.append("census")
    if ELECTION_RE.match(name):
        kinds.append("election")
    if name in DISTRICT_KINDS:
        kinds.append("district")
    if name in GEO_COLUMNS:
        kinds.append("geo")
    if name in BOUNDARY_COLUMNS:
        kinds.append("boundary")
    return kinds


def check_columns(names) -> list[str]:
    """Problems with a set of emitted column names (empty list when valid)."""
    problems = []
    for n in names:
        kinds = classify(n)
        if len(kinds) != 1:
            problems.append(f"column {n!r} matches {len(kinds)} patterns {kinds}")
    return problems


def normalize_district_id(value) -> str:
    """District ids as strings without leading zeros (``"007"`` -> ``"7"``, ``3.0`` -> ``"3"``)."""
    if isinstance(value, float) and value.is_integer():
        value = int(value)
    s = str(value).strip()
    if s.isdigit():
        return s.lstrip("0") or "0"
    return s
