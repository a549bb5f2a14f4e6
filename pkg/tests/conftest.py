import itertools

import numpy as np
import pytest

from strutnet import CrossSection, Material, StentNetwork, refine, zigzag_cylinder


UNIT_SECTION = CrossSection.square(0.1)
UNIT_MATERIAL = Material(1.0, 0.5)


def graph(positions, edges, width=0.1, young=1.0, shear=0.5):
    """Network from explicit vertex positions and (tail, head) pairs."""
    return StentNetwork.from_dict({
        "vertices": np.asarray(positions, dtype=float).tolist(),
        "struts": [{"tail": int(a), "head": int(b), "section": "s", "material": "m"} for a, b in edges],
        "sections": {"s": {"width": width, "thickness": width}},
        "materials": {"m": {"young_modulus": young, "shear_modulus": shear}},
    })


def small_nets():
    """Desk-scale networks with at most 12 struts, labelled for test ids."""
    rng = np.random.default_rng(7)
    unit = dict(cross_section=UNIT_SECTION, material=UNIT_MATERIAL)
    return {
        "triangle": graph([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [(0, 1), (1, 2), (2, 0)]),
        "tetrahedron": graph(rng.normal(size=(4, 3)), list(itertools.combinations(range(4), 2))),
        "chain": graph([[0, 0, 0], [1, 0.2, 0], [2, 0, 0.3], [3, 0.1, 0]], [(0, 1), (1, 2), (2, 3)]),
        "bent_pair": graph([[0, 0, 0], [1, 0, 0], [1, 1, 0]], [(0, 1), (1, 2)]),
        "cyl3x2": zigzag_cylinder(3, 2, 1.0, 2.0, end_ring=False, **unit),
        "cyl3x2_ring": zigzag_cylinder(3, 2, 1.0, 2.0, end_ring=True, **unit),
        "cyl4x2": zigzag_cylinder(4, 2, 1.0, 2.0, end_ring=False, **unit),
        "cyl3x3": zigzag_cylinder(3, 3, 1.0, 2.0, end_ring=False, **unit),
        "star": graph([[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1], [-1, -1, 0.5]],
                      [(0, 1), (0, 2), (3, 0), (0, 4)]),
    }


DYN_MATERIAL = Material(1.0, 1.0, 2000.0)
DYN_SECTION = CrossSection.square(1e-4)


def dynamics_net(splits=1):
    net = zigzag_cylinder(4, 3, 1.5e-3, 6e-3, cross_section=DYN_SECTION, material=DYN_MATERIAL)
    return refine(net, splits) if splits > 1 else net


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


class StrutwiseLoad:
    """Force density that is constant on each strut of ``net`` (and on its refinements)."""

    def __init__(self, net, values):
        self.a = net.positions[net.tails]
        self.chord = net.chords
        self.values = np.asarray(values, dtype=float)

    def __call__(self, x, t=None):
        rel = x[:, None, :] - self.a[None, :, :]
        s = np.clip(np.einsum("pec,ec->pe", rel, self.chord) / np.einsum("ec,ec->e", self.chord, self.chord), 0, 1)
        dist = np.linalg.norm(rel - s[:, :, None] * self.chord[None], axis=2)
        return self.values[np.argmin(dist, axis=1)]


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
