"""Named example fixtures shipped with the package."""
from __future__ import annotations

import json
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

import numpy as np

from .polyring import Polynomial, PolynomialSpec, WeightSystem, polynomial_from_dict
from .radial import RadialExpr


@dataclass(frozen=True)
class Fixture:
    name: str
    role: str
    spec: PolynomialSpec
    doc: dict

    @property
    def poly(self) -> Polynomial:
        return self.spec.poly

    @property
    def weights(self) -> WeightSystem:
        return self.spec.weights

    @property
    def scan(self) -> dict | None:
        return self.doc.get("scan")


@lru_cache(maxsize=1)
def _raw() -> dict:
    text = resources.files(__package__).joinpath("corpus/fixtures.json").read_text()
    return json.loads(text)


def fixtures(role: str | None = None) -> list[Fixture]:
    out = []
    for doc in _raw()["polynomials"]:
        if role is None or doc["role"] == role:
            out.append(Fixture(doc["name"], doc["role"], polynomial_from_dict(doc), doc))
    return out


def fixture(name: str) -> Fixture:
    for f in fixtures():
        if f.name == name:
            return f
    raise KeyError(f"no fixture named {name!r}")


def quasi_homogeneous_pairs() -> list[tuple[str, Polynomial, WeightSystem]]:
    return [(f.name, f.poly, f.weights) for f in fixtures("quasi_homogeneous")]


def flow_fixtures() -> dict[str, tuple[Polynomial, Polynomial, WeightSystem]]:
    out = {}
    for doc in _raw()["flows"]:
        f = polynomial_from_dict(doc["f"])
        g = polynomial_from_dict(doc["g"])
        out[doc["name"]] = (f.poly, g.poly, f.weights)
    return out


def rational_field(name: str = "rational_bump") -> tuple[RadialExpr, list[str]]:
    for doc in _raw()["fields"]:
        if doc["name"] == name:
            num = polynomial_from_dict(doc["numerator"]).poly
            den = polynomial_from_dict(doc["denominator"]).poly
            return RadialExpr(num) / RadialExpr(den), list(doc["word"])
    raise KeyError(name)


_BASE_FUNCTIONS = {
    "cos": np.cos,
    "2+cos": lambda th: 2 + np.cos(th),
    "-1": lambda th: -np.ones_like(th),
}


def models() -> dict[str, dict]:
    return dict(_raw()["models"])


def model_function(key: str):
    return _BASE_FUNCTIONS[key]
