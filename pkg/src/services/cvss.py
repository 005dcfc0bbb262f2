"""CVSS v3 base vectors: parsing, serialization and unrounded subscores."""

from dataclasses import dataclass

from src.core.models import (
    AttackComplexity,
    AttackVector,
    BaseScores,
    CvssVector,
    ImpactLevel,
    PrivilegesRequired,
    Scope,
    UserInteraction,
)

METRIC_ORDER = ("AV", "AC", "PR", "UI", "S", "C", "I", "A")

_FIELDS = {
    "AV": ("av", AttackVector),
    "AC": ("ac", AttackComplexity),
    "PR": ("pr", PrivilegesRequired),
    "UI": ("ui", UserInteraction),
    "S": ("scope", Scope),
    "C": ("conf", ImpactLevel),
    "I": ("integ", ImpactLevel),
    "A": ("avail", ImpactLevel),
}

# CVSS v3 base metric weights
AV_WEIGHTS = {
    AttackVector.NETWORK: 0.85,
    AttackVector.ADJACENT: 0.62,
    AttackVector.LOCAL: 0.55,
    AttackVector.PHYSICAL: 0.2,
}
AC_WEIGHTS = {AttackComplexity.LOW: 0.77, AttackComplexity.HIGH: 0.44}
PR_WEIGHTS = {
    Scope.UNCHANGED: {
        PrivilegesRequired.NONE: 0.85,
        PrivilegesRequired.LOW: 0.62,
        PrivilegesRequired.HIGH: 0.27,
    },
    Scope.CHANGED: {
        PrivilegesRequired.NONE: 0.85,
        PrivilegesRequired.LOW: 0.68,
        PrivilegesRequired.HIGH: 0.5,
    },
}
UI_WEIGHTS = {UserInteraction.NONE: 0.85, UserInteraction.REQUIRED: 0.62}
CIA_WEIGHTS = {ImpactLevel.HIGH: 0.56, ImpactLevel.LOW: 0.22, ImpactLevel.NONE: 0.0}


class CvssParseError(ValueError):
    """Raised when a vector string is not a CVSS v3 base vector."""


@dataclass(frozen=True)
class MetricValues:
    """Numeric weights of one vector."""

    av: float
    ac: float
    pr: float
    ui: float
    conf: float
    integ: float
    avail: float


def parse_vector(vector_string: str) -> CvssVector:
    """Parse "CVSS:3.x/AV:_/AC:_/PR:_/UI:_/S:_/C:_/I:_/A:_"."""
    prefix, _, body = vector_string.strip().partition("/")
    if not prefix.startswith("CVSS:") or not body:
        raise CvssParseError(f"not a CVSS v3 vector: {vector_string!r}")
    version = prefix[len("CVSS:") :]

    values: dict[str, str] = {}
    for part in body.split("/"):
        key, sep, value = part.partition(":")
        if not sep:
            raise CvssParseError(f"malformed metric {part!r} in {vector_string!r}")
        if key in values:
            raise CvssParseError(f"duplicate metric {key} in {vector_string!r}")
        values[key] = value

    missing = [m for m in METRIC_ORDER if m not in values]
    if missing:
        raise CvssParseError(f"missing metrics {missing} in {vector_string!r}")

    fields: dict[str, object] = {"version": version}
    for metric, (field, enum_type) in _FIELDS.items():
        try:
            fields[field] = enum_type(values[metric])
        except ValueError as e:
            raise CvssParseError(f"invalid {metric} value {values[metric]!r}") from e

    try:
        return CvssVector(**fields)
    except ValueError as e:
        raise CvssParseError(str(e)) from e


def serialize_vector(vector: CvssVector) -> str:
    parts = [f"{metric}:{getattr(vector, field).value}" for metric, (field, _) in _FIELDS.items()]
    return f"CVSS:{vector.version}/" + "/".join(parts)


def numeric(vector: CvssVector) -> MetricValues:
    """Look up the table weights of a vector; PR depends on scope."""
    return MetricValues(
        av=AV_WEIGHTS[vector.av],
        ac=AC_WEIGHTS[vector.ac],
        pr=PR_WEIGHTS[vector.scope][vector.pr],
        ui=UI_WEIGHTS[vector.ui],
        conf=CIA_WEIGHTS[vector.conf],
        integ=CIA_WEIGHTS[vector.integ],
        avail=CIA_WEIGHTS[vector.avail],
    )


def base_scores(vector: CvssVector) -> BaseScores:
    """
    Compute exploitability and impact subscores without CVSS round-up.

    EB = 8.22 * AV * AC * PR * UI
    ISC_base = 1 - (1 - C)(1 - I)(1 - A)
    IB = 6.42 * ISC_base                                          (scope unchanged)
    IB = 7.52 * (ISC_base - 0.029) - 3.25 * (ISC_base - 0.02)^15  (scope changed)
    """
    m = numeric(vector)
    eb = 8.22 * m.av * m.ac * m.pr * m.ui
    isc_base = 1 - (1 - m.conf) * (1 - m.integ) * (1 - m.avail)

    if isc_base == 0:
        ib = 0.0
    elif vector.scope == Scope.UNCHANGED:
        ib = 6.42 * isc_base
    else:
        ib = 7.52 * (isc_base - 0.029) - 3.25 * (isc_base - 0.02) ** 15

    return BaseScores(
        eb=eb,
        ib=ib,
        isc_base=isc_base,
        i_conf=m.conf,
        i_integ=m.integ,
        i_avail=m.avail,
    )
