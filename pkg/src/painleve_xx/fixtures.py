"""Fixed problem set shared by the verification suites and the tests.

The frozen oracle references are regenerated with::

    python -m painleve_xx.refgen --out tests/fixtures/oracle_reference.json
"""

from __future__ import annotations

from dataclasses import dataclass

from .integrator import ToleranceConfig, integrate, richardson_reference
from .models import Model, Pii0State, XxState, lift_xx_to_xxprime


@dataclass(frozen=True)
class Fixture:
    name: str
    model: Model
    init: object
    span: tuple[float, float]

    def run(self, tol: ToleranceConfig | None = None, events=()):
        return integrate(self.model, self.init, self.span, tol, events)

    def legs(self) -> list[tuple[float, float]]:
        """One-directional spans from the initial time, as used by the oracle."""
        ti = self.init.t
        return [(ti, t) for t in self.span if t != ti]


def _lift(t, S, Sd, c=None):
    return lift_xx_to_xxprime(XxState(t, S, Sd), c)


# (0, 1, 2) blows up near t = 0.984 going forward, so it is run backwards.
CONSERVATION = (
    Fixture("xxp_flat", Model.XXPRIME, _lift(0.0, 1.0, 0.0), (0.0, 1.0)),
    Fixture("xxp_rising", Model.XXPRIME, _lift(0.0, 1.0, 2.0), (0.0, -1.0)),
    Fixture("xxp_touching", Model.XXPRIME, _lift(-1.0, 0.5, -1.0), (-1.0, 0.0)),
    Fixture("xxp_negative", Model.XXPRIME, _lift(0.0, -1.0, 0.0), (0.0, 1.0)),
)

PII0_CROSSING = Fixture("pii0_crossing", Model.PII0, Pii0State(0.0, 0.0, 1.0), (-1.0, 1.0))
PII0_NOWHERE_ZERO = Fixture("pii0_nowhere_zero", Model.PII0, Pii0State(0.0, 0.5, 0.0), (0.0, 1.0))
PII0_TRIVIAL = Fixture("pii0_trivial", Model.PII0, Pii0State(0.0, 0.0, 0.0), (0.0, 5.0))
XX_DIRECT = Fixture("xx_direct", Model.XX, XxState(0.0, 1.0, 0.0), (0.0, 1.0))
XXP_ZERO_POSITIVE = Fixture("xxp_zero_positive", Model.XXPRIME, _lift(0.0, 0.0, 0.0, 2.0), (-1.0, 1.0))
XXP_ZERO_NEGATIVE = Fixture("xxp_zero_negative", Model.XXPRIME, _lift(0.0, 0.0, 0.0, -2.0), (-1.0, 1.0))

ALL = CONSERVATION + (
    PII0_CROSSING,
    PII0_NOWHERE_ZERO,
    PII0_TRIVIAL,
    XX_DIRECT,
    XXP_ZERO_POSITIVE,
    XXP_ZERO_NEGATIVE,
)
BY_NAME = {f.name: f for f in ALL}

ORACLE_STEP = 1e-4
ORACLE_AGREE = 1e-10


def reference_key(fixture: Fixture, leg: tuple[float, float]) -> str:
    return f"{fixture.name}@{leg[1]:g}"


def generate_references(h: float = ORACLE_STEP, agree: float = ORACLE_AGREE) -> dict:
    refs = {}
    for fx in ALL:
        for leg in fx.legs():
            ref = richardson_reference(fx.model, fx.init, leg, h, agree)
            refs[reference_key(fx, leg)] = {
                "fixture": fx.name,
                "model": fx.model.value,
                "t": leg[1],
                "state": list(ref.extrapolated[1]),
                "agreement": ref.agreement,
            }
    return {"format_version": 1, "h": h, "agree": agree, "references": refs}


__all__ = [
    "ALL",
    "BY_NAME",
    "CONSERVATION",
    "Fixture",
    "PII0_CROSSING",
    "PII0_NOWHERE_ZERO",
    "PII0_TRIVIAL",
    "XX_DIRECT",
    "XXP_ZERO_NEGATIVE",
    "XXP_ZERO_POSITIVE",
    "generate_references",
]
