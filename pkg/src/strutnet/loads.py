"""Force densities (N/m) acting on the network.

A load is a callable ``load(x)`` mapping points of shape ``(N, 3)`` to force
densities of the same shape.  Time-dependent loads take ``load(x, t)`` and
carry ``time_dependent = True``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "RadialLoad",
    "ConstantLoad",
    "AxialProfileLoad",
    "TravelingWaveLoad",
    "ZeroLoad",
    "radial_unit",
    "bulge_load",
    "bending_load",
    "quadratic_radial_load",
    "traveling_wave_load",
    "named_load",
    "LOAD_NAMES",
]


def radial_unit(x) -> np.ndarray:
    """Unit vector pointing away from the x1 axis, ``(0, x2, x3) / r``; zero on the axis."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    out = np.zeros_like(x)
    r = np.hypot(x[:, 1], x[:, 2])
    mask = r > 0
    out[mask, 1] = x[mask, 1] / r[mask]
    out[mask, 2] = x[mask, 2] / r[mask]
    return out


class ZeroLoad:
    time_dependent = False

    def __call__(self, x, t=None):
        return np.zeros_like(np.atleast_2d(np.asarray(x, dtype=float)))


@dataclass(frozen=True)
class ConstantLoad:
    """Uniform force density ``f(x) = value``."""

    value: tuple = (0.0, 1.0, 0.0)
    time_dependent = False

    def __call__(self, x, t=None):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.broadcast_to(np.asarray(self.value, dtype=float), x.shape).copy()


@dataclass(frozen=True)
class RadialLoad:
    """``f(x1) * radial_unit(x)`` for a scalar profile ``f`` of the axial coordinate."""

    profile: object
    time_dependent = False

    def __call__(self, x, t=None):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.asarray(self.profile(x[:, 0]), dtype=float)[:, None] * radial_unit(x)


@dataclass(frozen=True)
class AxialProfileLoad:
    """``f(x1) * direction`` with a fixed direction."""

    profile: object
    direction: tuple = (0.0, 0.0, 1.0)
    time_dependent = False

    def __call__(self, x, t=None):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return np.asarray(self.profile(x[:, 0]), dtype=float)[:, None] * np.asarray(self.direction, float)


class _Profile:
    """Picklable named scalar profile used by the built-in loads."""

    def __init__(self, kind: str, **params):
        self.kind = kind
        self.params = params

    def __call__(self, x1):
        p = self.params
        if self.kind == "bulge":
            return p["amplitude"] / (p["sharpness"] * (x1 - p["center"]) ** 2 + 1.0)
        if self.kind == "parabola":
            return p["amplitude"] * (x1 - p["center"]) ** 2
        if self.kind == "square":
            return p["amplitude"] * x1**2
        raise ValueError(self.kind)

    def __repr__(self):
        return f"_Profile({self.kind!r}, {self.params})"


def bulge_load(length: float, amplitude: float = 10.0, sharpness: float = 1e5) -> RadialLoad:
    """Radial load peaked at mid-length: ``amplitude / (sharpness (x1 - L/2)^2 + 1)``."""
    return RadialLoad(_Profile("bulge", amplitude=amplitude, sharpness=sharpness, center=0.5 * length))


def bending_load(length: float, amplitude: float = 1e3) -> AxialProfileLoad:
    """Transverse load ``amplitude (x1 - L/2)^2 e3``."""
    return AxialProfileLoad(_Profile("parabola", amplitude=amplitude, center=0.5 * length), (0.0, 0.0, 1.0))


def quadratic_radial_load(amplitude: float = 2.5e7) -> RadialLoad:
    """Radial load ``amplitude * x1^2``."""
    return RadialLoad(_Profile("square", amplitude=amplitude))


@dataclass(frozen=True)
class TravelingWaveLoad:
    """Radial cosine pulse moving along x1.

    ``f(x, t) = amplitude * cos(pi * d / (2 * half_width)) * radial_unit(x)`` for
    ``|d| < half_width`` and zero otherwise, with ``d = x1 - speed * (t - delay)``.
    """

    speed: float = 0.0075
    delay: float = 0.5
    amplitude: float = 5e-8
    half_width: float = 0.0015
    time_dependent = True

    def magnitude(self, x1, t):
        d = np.asarray(x1, dtype=float) - self.speed * (t - self.delay)
        inside = np.abs(d) < self.half_width
        return np.where(inside, self.amplitude * np.cos(0.5 * np.pi * d / self.half_width), 0.0)

    def __call__(self, x, t):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        return self.magnitude(x[:, 0], t)[:, None] * radial_unit(x)

    def derivative(self, x, t):
        """Time derivative of the load (exact)."""
        x = np.atleast_2d(np.asarray(x, dtype=float))
        d = x[:, 0] - self.speed * (t - self.delay)
        inside = np.abs(d) < self.half_width
        k = 0.5 * np.pi / self.half_width
        rate = np.where(inside, self.amplitude * k * self.speed * np.sin(k * d), 0.0)
        return rate[:, None] * radial_unit(x)


def traveling_wave_load(speed=0.0075, delay=0.5, amplitude=5e-8, half_width=0.0015) -> TravelingWaveLoad:
    return TravelingWaveLoad(speed, delay, amplitude, half_width)


LOAD_NAMES = ("zero", "f1", "f2", "radial", "constant", "traveling-wave")


def named_load(name: str, length: float = 1.0, **params):
    """Build a load from its command-line name.

    ``f1`` is the mid-length radial bulge, ``f2`` the transverse bending load,
    ``radial`` the ``amplitude * x1^2`` radial load, ``constant`` a uniform
    vector and ``traveling-wave`` the moving radial pulse.
    """
    params = {k: v for k, v in params.items() if v is not None}
    if name == "zero":
        return ZeroLoad()
    if name == "f1":
        return bulge_load(length, **params)
    if name == "f2":
        return bending_load(length, **params)
    if name == "radial":
        return quadratic_radial_load(**params)
    if name == "constant":
        return ConstantLoad(tuple(params.get("value", (0.0, 1.0, 0.0))))
    if name == "traveling-wave":
        return traveling_wave_load(**params)
    raise ValueError(f"unknown load {name!r}; choose from {', '.join(LOAD_NAMES)}")
