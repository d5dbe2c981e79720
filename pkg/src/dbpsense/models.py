"""Built-in disinfection by-product formation models.

Five regression models are bundled; operators can add custom formulas via
the DSL in :mod:`dbpsense.formula`. Inputs are environmental records (any
object exposing ``chlorine``, ``temperature``, ``pH``, ``TOC``, ``DON``,
``BR`` and an ``extras`` mapping) plus a reaction time in hours; outputs
are µg/L.

Variable conventions, documented for operators:
- ``chlorine`` is the residual in mg/L;
- reaction ``time`` is in hours (a node's water age by default);
- ``SUVA``, when not supplied, is derived as 100·UVA254/DOC.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import MissingVariableError, NonPositiveBaseError
from .formula import Formula, eval_formula

# regulatory thresholds, µg/L (per-family defaults by region)
THRESHOLDS = {
    "eu": {"THM": 100.0, "HAA": 60.0},
    "us": {"THM": 80.0, "HAA": 60.0},
}
DEFAULT_REGION = "eu"

# case-study weighting of the two family scores
DEFAULT_WEIGHTS = {"THM": 0.4, "HAA": 0.3}
WEIGHT_RANGE = (0.0, 5.0)

DEFAULT_MODEL_FOR_FAMILY = {"THM": "sohn_thm", "HAA": "sohn_haa9", "HAN": "hong_hans"}


@dataclass(frozen=True)
class DbpFamily:
    name: str
    threshold: float   # µg/L
    weight: float

    def __post_init__(self):
        if self.threshold <= 0:
            raise ValueError("threshold must be positive")
        lo, hi = WEIGHT_RANGE
        if not lo <= self.weight <= hi:
            raise ValueError(f"weight must be within [{lo}, {hi}]")


def _field(r, name: str):
    value = getattr(r, name, None)
    if value is None:
        raise MissingVariableError(name)
    return value


def _extra(r, name: str):
    extras = getattr(r, "extras", None) or {}
    value = extras.get(name)
    if value is None:
        raise MissingVariableError(name)
    return value


def _suva(r):
    extras = getattr(r, "extras", None) or {}
    if extras.get("SUVA") is not None:
        return extras["SUVA"]
    if extras.get("UVA254") is not None and extras.get("DOC") is not None:
        return 100.0 * extras["UVA254"] / extras["DOC"]
    raise MissingVariableError("SUVA")


def _pow_product(name: str, factors: list[tuple[str, object, float]], coeff: float):
    """coeff·Π base^exp with domain checking; works on scalars and arrays."""
    out = coeff
    for var, base, exp in factors:
        arr = np.asarray(base, dtype=float)
        if np.any(arr < 0) or (exp < 0 and np.any(arr == 0)):
            raise NonPositiveBaseError(
                f"{name}: {var} must be positive (exponent {exp})")
        out = out * arr ** exp
    return float(out) if np.ndim(out) == 0 else out


def eval_sohn_thm(r, time):
    """THM µg/L; empirical power law over TOC, Cl₂, Br⁻, temperature and pH."""
    return _pow_product("sohn_thm", [
        ("TOC", _field(r, "TOC"), 1.098),
        ("chlorine", _field(r, "chlorine"), 0.152),
        ("BR", _field(r, "BR"), 0.068),
        ("temperature", _field(r, "temperature"), 0.609),
        ("pH", _field(r, "pH"), 1.601),
        ("time", time, 0.263),
    ], 0.04121)


def eval_sohn_haa9(r, time):
    """HAA9 µg/L; companion power law (pH and bromide suppress formation)."""
    return _pow_product("sohn_haa9", [
        ("TOC", _field(r, "TOC"), 0.997),
        ("chlorine", _field(r, "chlorine"), 0.278),
        ("BR", _field(r, "BR"), -0.138),
        ("temperature", _field(r, "temperature"), 0.341),
        ("pH", _field(r, "pH"), -0.799),
        ("time", time, 0.169),
    ], 30.0)


def eval_uyak_thm(r, time):
    """THM µg/L from chlorine dose, pH, reaction time and SUVA."""
    return _pow_product("uyak_thm", [
        ("chlorine", _field(r, "chlorine"), 0.654),
        ("pH", _field(r, "pH"), 1.322),
        ("time", time, 0.174),
        ("SUVA", _suva(r), 0.712),
    ], 10.0 ** -0.038)


def eval_okoji_haa9(r, time):
    """HAA9 µg/L; quadratic response surface, clamped at 0 (no time term)."""
    T = np.asarray(_field(r, "temperature"), dtype=float)
    pH = np.asarray(_field(r, "pH"), dtype=float)
    uva = np.asarray(_extra(r, "UVA254"), dtype=float)
    cl2 = np.asarray(_field(r, "chlorine"), dtype=float)
    no2 = np.asarray(_extra(r, "NO2_N"), dtype=float)
    doc = np.asarray(_extra(r, "DOC"), dtype=float)
    nh4 = np.asarray(_extra(r, "NH4_N"), dtype=float)
    value = (-345.0 + 1.695 * T + 93.1 * pH - 226.0 * uva + 4.95 * cl2
             + 5.66 * no2 + 16.6 * doc + 0.325 * nh4
             - 0.0693 * T ** 2 - 6.41 * pH ** 2 + 190821.0 * uva ** 2
             - 1.73 * no2 ** 2 - 3.77 * doc ** 2 - 0.01663 * nh4 ** 2)
    out = np.maximum(value, 0.0)
    return float(out) if out.ndim == 0 else out


def eval_hong_hans(r, time):
    """Total HANs µg/L from bromide, DOC, Cl₂/DOC ratio, time and temperature."""
    doc = np.asarray(_extra(r, "DOC"), dtype=float)
    if np.any(doc <= 0):
        raise NonPositiveBaseError("hong_hans: DOC must be positive")
    ratio = np.asarray(_field(r, "chlorine"), dtype=float) / doc
    return _pow_product("hong_hans", [
        ("BR", _field(r, "BR"), 0.346),
        ("DOC", doc, 0.369),
        ("chlorine/DOC", ratio, 0.520),
        ("time", time, 0.238),
        ("temperature", _field(r, "temperature"), 0.373),
    ], 10.0 ** -1.065)


BUILTIN_MODELS: dict[str, tuple[str, Callable]] = {
    # name -> (family, evaluator)
    "sohn_thm": ("THM", eval_sohn_thm),
    "sohn_haa9": ("HAA", eval_sohn_haa9),
    "uyak_thm": ("THM", eval_uyak_thm),
    "okoji_haa9": ("HAA", eval_okoji_haa9),
    "hong_hans": ("HAN", eval_hong_hans),
}


def eval_builtin(model: str, r, time):
    """Evaluate a built-in model by registry name."""
    if model not in BUILTIN_MODELS:
        raise KeyError(f"unknown model {model!r}; available: {sorted(BUILTIN_MODELS)}")
    return BUILTIN_MODELS[model][1](r, time)


@dataclass(frozen=True)
class CustomModel:
    """Operator-supplied formula bound to a family label."""

    formula: Formula
    family: str

    def __call__(self, r, time):
        bindings = dict(getattr(r, "extras", None) or {})
        for name in ("chlorine", "temperature", "pH", "TOC", "DON", "BR", "contracts"):
            value = getattr(r, name, None)
            if value is not None:
                bindings.setdefault(name, value)
        # common aliases so formulas can use the column spellings
        for alias, canon in (("Cl2", "chlorine"), ("Chlorine", "chlorine"),
                             ("Temp", "temperature"), ("Temperature", "temperature"),
                             ("Br", "BR")):
            if canon in bindings:
                bindings.setdefault(alias, bindings[canon])
        bindings["time"] = time
        return eval_formula(self.formula, bindings)
